//! Euclidean projection onto the polyhedral cone `Abar * K_E`.
//!
//! The projection of `w` is `Abar x` where `x` solves
//!
//! ```text
//!     minimize    ||Abar x - w||^2
//!     subject to  G x >= 0,
//! ```
//!
//! and the rows of `G` are the cuts `(1, v')` of every block plus `e_j` for
//! one-dimensional blocks. This module solves it with a primal active-set
//! method: each step solves the least-squares problem restricted to the
//! null space of the working-set rows, walks toward that minimiser until a
//! constraint blocks, and releases the constraint with the most negative
//! multiplier once the restricted problem is stationary.
//!
//! Every constraint is homogeneous, so `x = 0` is feasible with all of them
//! tight and needs no phase-one step. Starting there is heavily degenerate,
//! though, so the outer loop passes the previous iterate lifted back into
//! `K_E` by [`lift_into_cone`] together with the previous working set.

use nalgebra::{DMatrix, DVector};

use crate::alpn::SolverParams;
use crate::error::{AlpnError, Result};
use crate::linalg;
use crate::model::{CutSet, StackedMatrix};

/// Singular values below this fraction of the largest are truncated.
const RANK_RTOL: f64 = 1e-12;
/// A row whose component orthogonal to the working set is below this
/// fraction of its norm counts as dependent.
const INDEPENDENCE_RTOL: f64 = 1e-10;
/// After this many consecutive zero-length steps the leaving rule switches
/// from most-negative to lowest-index.
const DEGENERATE_SWITCH: usize = 8;

/// Stable identifier of one inequality: `slot` indexes the cut inside
/// `block` (always 0 for one-dimensional blocks).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConstraintId {
    pub block: usize,
    pub slot: usize,
}

/// Constraints treated as equalities by the active-set method.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WorkingSet(pub Vec<ConstraintId>);

impl WorkingSet {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    pub fn ids(&self) -> &[ConstraintId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Dense constraint matrix `G` with one row per cut, in block order.
#[derive(Debug, Clone)]
pub struct ConstraintMatrix {
    pub ids: Vec<ConstraintId>,
    pub rows: DMatrix<f64>,
}

impl ConstraintMatrix {
    pub fn from_cuts(cuts: &CutSet) -> Self {
        let cone = cuts.cone();
        let mut ids = Vec::new();
        for i in 0..cone.p() {
            if cone.dim(i) == 1 {
                ids.push(ConstraintId { block: i, slot: 0 });
            } else {
                ids.extend((0..cuts.cuts(i).len()).map(|slot| ConstraintId { block: i, slot }));
            }
        }
        let mut rows = DMatrix::zeros(ids.len(), cone.n());
        for (r, id) in ids.iter().enumerate() {
            let start = cone.range(id.block).start;
            rows[(r, start)] = 1.0;
            if cone.dim(id.block) > 1 {
                for (j, &vj) in cuts.cuts(id.block)[id.slot].iter().enumerate() {
                    rows[(r, start + 1 + j)] = vj;
                }
            }
        }
        Self { ids, rows }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn index_of(&self, id: ConstraintId) -> Option<usize> {
        self.ids.binary_search(&id).ok()
    }

    /// Stacks the rows listed in `working`.
    pub fn select(&self, working: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(working.len(), self.rows.ncols(), |r, c| self.rows[(working[r], c)])
    }
}

#[derive(Debug, Clone)]
pub struct ProjectionResult {
    pub x: DVector<f64>,
    pub wbar: DVector<f64>,
    /// One multiplier per constraint, ordered as [`ConstraintMatrix::ids`].
    pub multipliers: Vec<f64>,
    pub ids: Vec<ConstraintId>,
    pub active: WorkingSet,
    pub inner_iterations: usize,
    /// `||wbar - w||^2`.
    pub objective: f64,
}

/// Orthonormal basis of the null space of the working rows, plus the
/// factorisation needed to recover multipliers.
struct NullSpace {
    z: DMatrix<f64>,
    qr: Option<nalgebra::QR<f64, nalgebra::Dyn, nalgebra::Dyn>>,
}

impl NullSpace {
    fn new(gw: &DMatrix<f64>, n: usize) -> Self {
        let k = gw.nrows();
        if k == 0 {
            return Self { z: DMatrix::identity(n, n), qr: None };
        }
        // Q' of the full Householder factorisation of G_W': its trailing
        // n - k rows span the null space of G_W.
        let qr = gw.transpose().qr();
        let mut qt = DMatrix::identity(n, n);
        qr.q_tr_mul(&mut qt);
        let z = qt.rows(k, n - k).transpose();
        Self { z, qr: Some(qr) }
    }

    /// Least-squares solution of `G_W' lambda = g`.
    fn multipliers(&self, g: &DVector<f64>, k: usize) -> Result<DVector<f64>> {
        let Some(qr) = &self.qr else {
            return Ok(DVector::zeros(0));
        };
        let mut qtg = g.clone();
        qr.q_tr_mul(&mut qtg);
        let r = qr.r();
        let r = r.view((0, 0), (k, k));
        r.solve_upper_triangular(&qtg.rows(0, k))
            .ok_or_else(|| AlpnError::NumericalFailure("singular working set".into()))
    }
}

/// Minimum-norm solution of `min ||m u - r||` with truncated SVD.
fn min_norm_lstsq(m: &DMatrix<f64>, r: &DVector<f64>) -> Result<DVector<f64>> {
    linalg::min_norm_lstsq(m, r, RANK_RTOL).ok_or_else(|| AlpnError::NumericalFailure("SVD failed".into()))
}

/// Minimiser of `||Abar x - w||^2` subject to `G_W x = 0` for the rows in
/// `rows`, with minimum norm among all minimisers.
pub fn solve_eq_ls(abar: &StackedMatrix, cuts: &CutSet, rows: &WorkingSet, w: &DVector<f64>) -> Result<DVector<f64>> {
    let g = ConstraintMatrix::from_cuts(cuts);
    let mut idx = Vec::with_capacity(rows.len());
    for &id in rows.ids() {
        let i = g.index_of(id).ok_or_else(|| AlpnError::InvalidParams(format!("unknown constraint {id:?}")))?;
        idx.push(i);
    }
    let gw = g.select(&idx);
    if !rows_independent(&gw) {
        return Err(AlpnError::NumericalFailure("working-set rows are linearly dependent".into()));
    }
    let null = NullSpace::new(&gw, abar.ncols());
    let m = abar.matrix() * &null.z;
    let u = min_norm_lstsq(&m, w)?;
    Ok(&null.z * u)
}

fn rows_independent(gw: &DMatrix<f64>) -> bool {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for r in 0..gw.nrows() {
        let row = gw.row(r).transpose();
        if !extend_basis(&mut basis, &row) {
            return false;
        }
    }
    true
}

/// Gram-Schmidt step; returns false (leaving `basis` untouched) when `row`
/// is numerically in the span of `basis`.
fn extend_basis(basis: &mut Vec<DVector<f64>>, row: &DVector<f64>) -> bool {
    let norm = row.norm();
    if norm == 0.0 {
        return false;
    }
    let mut res = row.clone();
    // Two passes of modified Gram-Schmidt.
    for _ in 0..2 {
        for q in basis.iter() {
            let d = q.dot(&res);
            res.axpy(-d, q, 1.0);
        }
    }
    let rn = res.norm();
    if rn <= INDEPENDENCE_RTOL * norm {
        return false;
    }
    basis.push(res / rn);
    true
}

/// Adds to the first coordinate of each block the smallest amount that
/// makes every cut of that block hold. Each cut row has a unit leading
/// coefficient, so the amount is the block's largest violation.
pub fn lift_into_cone(x: &DVector<f64>, cuts: &CutSet) -> DVector<f64> {
    let cone = cuts.cone();
    let mut out = x.clone();
    for i in 0..cone.p() {
        let range = cone.range(i);
        let xi = &x.as_slice()[range.clone()];
        let worst = if range.len() == 1 {
            -xi[0]
        } else {
            cuts.cuts(i)
                .iter()
                .map(|v| -(xi[0] + v.iter().zip(&xi[1..]).map(|(a, b)| a * b).sum::<f64>()))
                .fold(f64::NEG_INFINITY, f64::max)
        };
        if worst > 0.0 {
            out[range.start] += worst;
        }
    }
    out
}

/// Projects `w` onto `Abar * K_E`, optionally seeding the working set.
/// Starts from `x = 0`.
pub fn project(
    abar: &StackedMatrix,
    cuts: &CutSet,
    w: &DVector<f64>,
    warm: Option<&WorkingSet>,
    params: &SolverParams,
) -> Result<ProjectionResult> {
    project_from(abar, cuts, w, warm, None, params)
}

/// [`project`] from the feasible point `start`. Warm constraints that are
/// not tight at `start` are dropped from the initial working set.
pub fn project_from(
    abar: &StackedMatrix,
    cuts: &CutSet,
    w: &DVector<f64>,
    warm: Option<&WorkingSet>,
    start: Option<&DVector<f64>>,
    params: &SolverParams,
) -> Result<ProjectionResult> {
    let n = abar.ncols();
    if cuts.cone().n() != n {
        return Err(AlpnError::DimensionMismatch { expected: n, got: cuts.cone().n() });
    }
    if w.len() != abar.nrows() {
        return Err(AlpnError::DimensionMismatch { expected: abar.nrows(), got: w.len() });
    }
    if let Some(x0) = start {
        if x0.len() != n {
            return Err(AlpnError::DimensionMismatch { expected: n, got: x0.len() });
        }
    }
    let a = abar.matrix();
    let g = ConstraintMatrix::from_cuts(cuts);
    let q = g.len();
    let w_scale = 1.0 + w.norm();
    let a_scale = 1.0 + a.norm();
    let dir_tol = 1e-11;
    let zero_step = 1e-13 * w_scale;
    let mult_tol = params.tol_qp * w_scale * a_scale;

    let mut x = start.cloned().unwrap_or_else(|| DVector::zeros(n));
    let tight_tol = 1e-12 * (1.0 + x.norm());
    let gx0 = &g.rows * &x;
    if gx0.iter().any(|&v| v < -1e3 * tight_tol) {
        return Err(AlpnError::InvalidParams("start point violates a cut".into()));
    }

    let mut working: Vec<usize> = Vec::new();
    if let Some(ws) = warm {
        let mut basis = Vec::new();
        let mut seeded: Vec<usize> =
            ws.ids().iter().filter_map(|&id| g.index_of(id)).filter(|&i| gx0[i] <= tight_tol).collect();
        seeded.sort_unstable();
        seeded.dedup();
        for i in seeded {
            if working.len() == n {
                break;
            }
            if extend_basis(&mut basis, &g.rows.row(i).transpose()) {
                working.push(i);
            }
        }
    }

    let mut r = w - a * &x;
    let mut objective = r.norm_squared();
    let max_inner = 50 * q.max(1);
    let mut inner = 0;
    let mut need_step = true;
    let mut degenerate_run = 0;

    loop {
        if inner >= max_inner {
            return Err(AlpnError::InnerIterationLimit(max_inner));
        }
        inner += 1;

        let gw = g.select(&working);
        let null = NullSpace::new(&gw, n);

        if need_step {
            let m = a * &null.z;
            let u = min_norm_lstsq(&m, &r)?;
            let p = &null.z * u;
            let ap = a * &p;
            if ap.norm() > zero_step {
                let gp = &g.rows * &p;
                let gx = &g.rows * &x;
                let pn = p.norm();
                let mut alpha = 1.0;
                let mut blocking = None;
                for k in 0..q {
                    if working.contains(&k) || gp[k] >= -dir_tol * pn {
                        continue;
                    }
                    let step = gx[k].max(0.0) / -gp[k];
                    if step < alpha {
                        alpha = step;
                        blocking = Some(k);
                    }
                }
                x.axpy(alpha, &p, 1.0);
                r = w - a * &x;
                let next = r.norm_squared();
                debug_assert!(
                    next <= objective * (1.0 + 1e-10) + 1e-20,
                    "inner objective increased: {objective} -> {next}"
                );
                objective = next;
                degenerate_run = if alpha == 0.0 { degenerate_run + 1 } else { 0 };
                if let Some(k) = blocking {
                    working.push(k);
                    continue;
                }
            }
        }

        // x minimises the objective on the working face; check multipliers.
        let grad = -(a.transpose() * &r);
        let lambda = null.multipliers(&grad, working.len())?;
        let mut leave: Option<(usize, f64)> = None;
        for (pos, &lam) in lambda.iter().enumerate() {
            if lam >= -mult_tol {
                continue;
            }
            let better = match leave {
                None => true,
                Some((best, best_lam)) => {
                    if degenerate_run >= DEGENERATE_SWITCH {
                        working[pos] < working[best]
                    } else {
                        lam < best_lam || (lam == best_lam && working[pos] < working[best])
                    }
                }
            };
            if better {
                leave = Some((pos, lam));
            }
        }
        match leave {
            Some((pos, _)) => {
                working.remove(pos);
                need_step = true;
            }
            None => {
                let mut multipliers = vec![0.0; q];
                for (pos, &k) in working.iter().enumerate() {
                    multipliers[k] = lambda[pos].max(0.0);
                }
                let wbar = a * &x;
                let mut active: Vec<ConstraintId> = working.iter().map(|&k| g.ids[k]).collect();
                active.sort_unstable();
                return Ok(ProjectionResult {
                    x,
                    wbar,
                    multipliers,
                    ids: g.ids,
                    active: WorkingSet(active),
                    inner_iterations: inner,
                    objective,
                });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::initial_cuts;
    use crate::model::ConeStructure;

    fn params() -> SolverParams {
        SolverParams::default()
    }

    fn k2_setup() -> (StackedMatrix, CutSet) {
        let abar = StackedMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        let cuts = initial_cuts(&ConeStructure::new(vec![2]).unwrap());
        (abar, cuts)
    }

    #[test]
    fn point_in_image_is_fixed() {
        let (abar, cuts) = k2_setup();
        let x0 = DVector::from_column_slice(&[2.0, 0.5]);
        let w = abar.matrix() * &x0;
        let res = project(&abar, &cuts, &w, None, &params()).unwrap();
        assert!((res.wbar - &w).norm() < 1e-12);
        assert!(res.objective < 1e-20);
    }

    #[test]
    fn projection_onto_k2_image() {
        // Abar K^2 = {(u, t) : t >= |u|}; the nearest point to (2, 1) is (1.5, 1.5).
        let (abar, cuts) = k2_setup();
        let w = DVector::from_column_slice(&[2.0, 1.0]);
        let res = project(&abar, &cuts, &w, None, &params()).unwrap();
        assert!((res.wbar[0] - 1.5).abs() < 1e-12 && (res.wbar[1] - 1.5).abs() < 1e-12);
        assert!((res.objective - 0.5).abs() < 1e-12);
        // Only the cut v = -1 is tight, with multiplier ||w - wbar||-related value.
        assert_eq!(res.active.ids(), &[ConstraintId { block: 0, slot: 1 }]);
        assert!(res.multipliers[0] == 0.0 && res.multipliers[1] > 0.0);
    }

    #[test]
    fn eq_ls_unconstrained_square() {
        let abar = StackedMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 3.0]));
        let cuts = initial_cuts(&ConeStructure::new(vec![2]).unwrap());
        let w = DVector::from_column_slice(&[4.0, 3.0]);
        let x = solve_eq_ls(&abar, &cuts, &WorkingSet::new(), &w).unwrap();
        let expected = abar.matrix().clone().try_inverse().unwrap() * &w;
        assert!((x - expected).norm() < 1e-12);
    }

    #[test]
    fn eq_ls_residual_orthogonal_to_face() {
        let abar = StackedMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[0.3, 1.0, 1.0, -0.4]));
        let cuts = initial_cuts(&ConeStructure::new(vec![2]).unwrap());
        let w = DVector::from_column_slice(&[1.0, 2.0]);
        let ws = WorkingSet(vec![ConstraintId { block: 0, slot: 0 }]);
        let x = solve_eq_ls(&abar, &cuts, &ws, &w).unwrap();
        assert!((x[0] + x[1]).abs() < 1e-12);
        // Feasible direction of the face is (1, -1); the residual must be
        // orthogonal to its image.
        let face_dir = abar.matrix() * DVector::from_column_slice(&[1.0, -1.0]);
        let resid = abar.matrix() * &x - &w;
        assert!(resid.dot(&face_dir).abs() < 1e-12);
    }

    #[test]
    fn eq_ls_zero_column_gets_zero() {
        let abar = StackedMatrix::from_matrix(DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 2.0, 0.5, 0.0, -1.0]));
        let cuts = initial_cuts(&ConeStructure::new(vec![1, 1, 1]).unwrap());
        let w = DVector::from_column_slice(&[1.0, 1.0]);
        let x = solve_eq_ls(&abar, &cuts, &WorkingSet::new(), &w).unwrap();
        assert!(x[1].abs() < 1e-14);
    }

    #[test]
    fn dependent_working_set_rejected() {
        let abar = StackedMatrix::from_matrix(DMatrix::identity(2, 2));
        let cone = ConeStructure::new(vec![2]).unwrap();
        let mut cuts = CutSet::empty(&cone);
        cuts.insert(0, vec![1.0], 0.0).unwrap();
        cuts.insert(0, vec![1.0 - 1e-13], 0.0).unwrap();
        let ws = WorkingSet(vec![ConstraintId { block: 0, slot: 0 }, ConstraintId { block: 0, slot: 1 }]);
        assert!(matches!(
            solve_eq_ls(&abar, &cuts, &ws, &DVector::from_column_slice(&[1.0, 1.0])),
            Err(AlpnError::NumericalFailure(_))
        ));
    }

    #[test]
    fn homogeneity_and_idempotence() {
        let abar = StackedMatrix::from_matrix(DMatrix::from_row_slice(
            3,
            4,
            &[0.5, -1.0, 0.2, 1.0, 1.0, 0.3, -0.7, 0.1, -0.2, 0.8, 0.4, 0.6],
        ));
        let cuts = initial_cuts(&ConeStructure::new(vec![1, 3]).unwrap());
        let w = DVector::from_column_slice(&[3.0, -1.0, 2.0]);
        let base = project(&abar, &cuts, &w, None, &params()).unwrap();
        for s in [0.5, 2.0, 10.0] {
            let scaled = project(&abar, &cuts, &(&w * s), None, &params()).unwrap();
            assert!((scaled.wbar - &base.wbar * s).norm() <= 1e-9 * (1.0 + s * w.norm()));
        }
        let again = project(&abar, &cuts, &base.wbar, None, &params()).unwrap();
        assert!((again.wbar - &base.wbar).norm() <= 1e-9);
    }

    #[test]
    fn lift_restores_membership() {
        let cone = ConeStructure::new(vec![1, 3]).unwrap();
        let mut cuts = initial_cuts(&cone);
        cuts.insert(1, vec![-0.6, -0.8], 0.0).unwrap();
        let x = DVector::from_column_slice(&[-0.5, 1.0, 3.0, 4.0]);
        let lifted = lift_into_cone(&x, &cuts);
        // Block 0 needs +0.5; block 1's worst cut gives 1 - 0.6*3 - 0.8*4 = -4.
        assert_eq!(lifted.as_slice(), &[0.0, 5.0, 3.0, 4.0]);
        let g = ConstraintMatrix::from_cuts(&cuts);
        assert!((&g.rows * &lifted).min() >= -1e-15);
        // Points already inside are unchanged.
        assert_eq!(lift_into_cone(&lifted, &cuts), lifted);
    }

    #[test]
    fn warm_start_reaches_same_projection() {
        let abar = StackedMatrix::from_matrix(DMatrix::from_row_slice(
            3,
            4,
            &[0.5, -1.0, 0.2, 1.0, 1.0, 0.3, -0.7, 0.1, -0.2, 0.8, 0.4, 0.6],
        ));
        let cuts = initial_cuts(&ConeStructure::new(vec![1, 3]).unwrap());
        let w = DVector::from_column_slice(&[3.0, -1.0, 2.0]);
        let cold = project(&abar, &cuts, &w, None, &params()).unwrap();
        for x0 in [[1.0, 2.0, 0.5, -0.5], [0.0, 1.0, 1.0, 0.0], [3.0, 0.0, 0.0, 0.0]] {
            let x0 = DVector::from_column_slice(&x0);
            let warm = project_from(&abar, &cuts, &w, Some(&cold.active), Some(&x0), &params()).unwrap();
            assert!((warm.wbar - &cold.wbar).norm() <= 1e-9 * (1.0 + w.norm()));
        }
        let outside = DVector::from_column_slice(&[-1.0, 0.0, 0.0, 0.0]);
        assert!(project_from(&abar, &cuts, &w, None, Some(&outside), &params()).is_err());
    }
}
