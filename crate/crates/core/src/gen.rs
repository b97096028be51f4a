//! Random instances with known strictly feasible primal and dual points.
//!
//! `A` has i.i.d. standard normal entries, drawn row by row from a
//! `ChaCha8Rng` seeded with `seed_from_u64(seed)` through `rand_distr`'s
//! `StandardNormal`. With `x̃ = s̃ = (e_1, ..., e_1)` blockwise, the instance
//! uses `b = A x̃` and `c = A'e - s̃`, so `x̃` is interior primal feasible and
//! `y = e` is interior dual feasible.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{AlpnError, Result};
use crate::model::{ConeStructure, SocpInstance};

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedInstance {
    pub instance: SocpInstance,
    pub x_tilde: DVector<f64>,
    pub s_tilde: DVector<f64>,
    pub seed: u64,
}

/// Blockwise first unit vector.
pub fn axis_point(cone: &ConeStructure) -> DVector<f64> {
    let mut v = DVector::zeros(cone.n());
    for i in 0..cone.p() {
        v[cone.range(i).start] = 1.0;
    }
    v
}

pub fn generate(m: usize, dims: &[usize], seed: u64) -> Result<GeneratedInstance> {
    if m == 0 {
        return Err(AlpnError::InvalidInstance("m must be at least 1".into()));
    }
    let cone = ConeStructure::new(dims.to_vec())?;
    let n = cone.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::with_capacity(m * n);
    for _ in 0..m * n {
        entries.push(StandardNormal.sample(&mut rng));
    }
    let a = DMatrix::from_row_slice(m, n, &entries);
    let x_tilde = axis_point(&cone);
    let s_tilde = x_tilde.clone();
    let b = &a * &x_tilde;
    let col_sums = DVector::from_fn(n, |j, _| a.column(j).sum());
    let c = col_sums - &s_tilde;
    let instance = SocpInstance::new(a, b, c, cone)?;
    Ok(GeneratedInstance { instance, x_tilde, s_tilde, seed })
}
