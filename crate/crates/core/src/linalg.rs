//! Dense kernels shared by the projection and the oracle.
//!
//! Singular value decompositions go through faer. nalgebra's bidiagonal SVD
//! loses accuracy on small saddle-point matrices (relative backward errors
//! above 1e-6 on about 1% of random cases), which a truncated
//! pseudo-inverse cannot tolerate.

use nalgebra::{DMatrix, DVector};

/// Minimum-norm solution of `min ||m u - r||`, treating singular values
/// below `rtol` times the largest as zero. Returns `None` for non-finite
/// input or if the decomposition does not converge.
pub fn min_norm_lstsq(m: &DMatrix<f64>, r: &DVector<f64>, rtol: f64) -> Option<DVector<f64>> {
    let (rows, cols) = m.shape();
    assert_eq!(rows, r.len(), "right-hand side length");
    let mut out = DVector::zeros(cols);
    if rows == 0 || cols == 0 {
        return Some(out);
    }
    if m.iter().chain(r.iter()).any(|v| !v.is_finite()) {
        return None;
    }
    let svd = faer::Mat::from_fn(rows, cols, |i, j| m[(i, j)]).thin_svd().ok()?;
    let (u, v) = (svd.U(), svd.V());
    let s = svd.S().column_vector();
    let smax = s.iter().fold(0.0f64, |a, &b| a.max(b));
    for (k, &sk) in s.iter().enumerate() {
        if sk <= rtol * smax {
            continue;
        }
        let coef = (0..rows).map(|i| u[(i, k)] * r[i]).sum::<f64>() / sk;
        for j in 0..cols {
            out[j] += coef * v[(j, k)];
        }
    }
    Some(out)
}
