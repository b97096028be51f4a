//! Independent reference computations for tests.
//!
//! Nothing here is used by the solver or the CLI. The brute-force
//! projection builds its own constraint rows and solves each candidate face
//! through the full KKT system, so it shares no code path with
//! [`crate::projection`].

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::dual::kkt_residuals;
use crate::error::{AlpnError, Result};
use crate::linalg::min_norm_lstsq;
use crate::model::{ConeStructure, CutSet, SocpInstance, StackedMatrix};
use crate::projection::{ConstraintId, ProjectionResult, WorkingSet};

/// Largest constraint count the enumeration accepts.
pub const ENUMERATION_LIMIT: usize = 12;

fn oracle_rows(cuts: &CutSet) -> (Vec<ConstraintId>, Vec<DVector<f64>>) {
    let cone = cuts.cone();
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    for i in 0..cone.p() {
        let range = cone.range(i);
        if range.len() == 1 {
            ids.push(ConstraintId { block: i, slot: 0 });
            let mut row = DVector::zeros(cone.n());
            row[range.start] = 1.0;
            rows.push(row);
            continue;
        }
        for (slot, v) in cuts.cuts(i).iter().enumerate() {
            ids.push(ConstraintId { block: i, slot });
            let mut row = DVector::zeros(cone.n());
            row[range.start] = 1.0;
            for (j, vj) in v.iter().enumerate() {
                row[range.start + 1 + j] = *vj;
            }
            rows.push(row);
        }
    }
    (ids, rows)
}

/// Objective, point, multipliers and active subset of a candidate face.
type Candidate = (f64, DVector<f64>, Vec<f64>, Vec<usize>);

/// Projection of `w` onto `Abar * K_E` by enumerating every subset of
/// constraints as the active set.
pub fn brute_force_project(abar: &StackedMatrix, cuts: &CutSet, w: &DVector<f64>) -> Result<ProjectionResult> {
    let (ids, rows) = oracle_rows(cuts);
    let q = rows.len();
    if q > ENUMERATION_LIMIT {
        return Err(AlpnError::EnumerationBound { count: q, limit: ENUMERATION_LIMIT });
    }
    let a = abar.matrix();
    let n = a.ncols();
    let h = a.transpose() * a;
    let rhs_top = a.transpose() * w;
    let scale = (1.0 + w.norm()) * (1.0 + a.norm());

    let mut best: Option<Candidate> = None;
    for mask in 0u32..(1u32 << q) {
        let subset: Vec<usize> = (0..q).filter(|&j| mask & (1 << j) != 0).collect();
        let s = subset.len();
        // [ H  -G_S' ] [x     ]   [A'w]
        // [ G_S  0   ] [lambda] = [ 0 ]
        let mut kkt = DMatrix::zeros(n + s, n + s);
        kkt.view_mut((0, 0), (n, n)).copy_from(&h);
        for (col, &j) in subset.iter().enumerate() {
            for t in 0..n {
                kkt[(t, n + col)] = -rows[j][t];
                kkt[(n + col, t)] = rows[j][t];
            }
        }
        let mut rhs = DVector::zeros(n + s);
        rhs.rows_mut(0, n).copy_from(&rhs_top);
        let Some(sol) = min_norm_lstsq(&kkt, &rhs, 1e-12) else {
            continue;
        };
        if (&kkt * &sol - &rhs).norm() > 1e-9 * scale {
            continue;
        }
        let x = sol.rows(0, n).into_owned();
        let lambda: Vec<f64> = sol.rows(n, s).iter().copied().collect();
        let x_scale = 1.0 + x.norm();
        if rows.iter().any(|g| g.dot(&x) < -1e-9 * x_scale) || lambda.iter().any(|&l| l < -1e-9 * scale) {
            continue;
        }
        let objective = (a * &x - w).norm_squared();
        if best.as_ref().is_none_or(|b| objective < b.0) {
            best = Some((objective, x, lambda, subset));
        }
    }
    let (objective, x, lambda, subset) =
        best.ok_or_else(|| AlpnError::NumericalFailure("no KKT point among enumerated faces".into()))?;
    let mut multipliers = vec![0.0; q];
    for (pos, &j) in subset.iter().enumerate() {
        multipliers[j] = lambda[pos].max(0.0);
    }
    Ok(ProjectionResult {
        wbar: a * &x,
        x,
        multipliers,
        active: WorkingSet(subset.iter().map(|&j| ids[j]).collect()),
        ids,
        inner_iterations: 1 << q,
        objective,
    })
}

/// Smallest `x_1 + v'x̄` over `samples` points drawn uniformly from the unit
/// ball. Always an upper bound on the true minimum `x_1 - ||x̄||`.
pub fn sampled_cut_min(xi: &[f64], samples: usize, seed: u64) -> f64 {
    assert!(xi.len() >= 2 && samples >= 1);
    let d = xi.len() - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Uniform::new(0.0f64, 1.0).unwrap();
    let mut best = f64::INFINITY;
    for _ in 0..samples {
        let dir: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = dir.iter().map(|t: &f64| t * t).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let radius = unit.sample(&mut rng).powf(1.0 / d as f64);
        let value = xi[0] + dir.iter().zip(&xi[1..]).map(|(v, x)| v * x).sum::<f64>() * radius / norm;
        best = best.min(value);
    }
    best
}

#[derive(Debug, Clone)]
pub struct TinyAnalyticCase {
    pub name: &'static str,
    pub instance: SocpInstance,
    pub x_star: DVector<f64>,
    pub y_star: DVector<f64>,
    pub objective: f64,
}

/// Hand-solved instances with known primal-dual optima.
pub fn analytic_cases() -> Vec<TinyAnalyticCase> {
    let s2 = std::f64::consts::SQRT_2;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let make = |a: &[f64], m: usize, b: &[f64], c: &[f64], dims: Vec<usize>| {
        SocpInstance::new(
            DMatrix::from_row_slice(m, c.len(), a),
            DVector::from_column_slice(b),
            DVector::from_column_slice(c),
            ConeStructure::new(dims).expect("valid dims"),
        )
        .expect("valid instance")
    };
    let cases = vec![
        // maximize x2 s.t. x1 = 1, x in K^2
        TinyAnalyticCase {
            name: "k2",
            instance: make(&[1.0, 0.0], 1, &[1.0], &[0.0, 1.0], vec![2]),
            x_star: DVector::from_column_slice(&[1.0, 1.0]),
            y_star: DVector::from_column_slice(&[1.0]),
            objective: 1.0,
        },
        // maximize x2 + x3 s.t. x1 = 1, x in K^3
        TinyAnalyticCase {
            name: "k3",
            instance: make(&[1.0, 0.0, 0.0], 1, &[1.0], &[0.0, 1.0, 1.0], vec![3]),
            x_star: DVector::from_column_slice(&[1.0, h, h]),
            y_star: DVector::from_column_slice(&[s2]),
            objective: s2,
        },
        // maximize x1 + 2 x2 s.t. x1 + x2 + x3 = 2, x1 - x2 = 0, x >= 0
        TinyAnalyticCase {
            name: "lp",
            instance: make(&[1.0, 1.0, 1.0, 1.0, -1.0, 0.0], 2, &[2.0, 0.0], &[1.0, 2.0, 0.0], vec![1, 1, 1]),
            x_star: DVector::from_column_slice(&[1.0, 1.0, 0.0]),
            y_star: DVector::from_column_slice(&[1.5, -0.5]),
            objective: 3.0,
        },
    ];
    for case in &cases {
        let (_, r) = kkt_residuals(&case.x_star, &case.y_star, &case.instance);
        assert!(r.max() <= 1e-12, "analytic case {} fails KKT: {r:?}", case.name);
        assert!((case.instance.c().dot(&case.x_star) - case.objective).abs() <= 1e-12);
    }
    cases
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::initial_cuts;

    #[test]
    fn unconstrained_surjective() {
        // A single one-dimensional block whose constraint is inactive at the optimum.
        let abar = StackedMatrix::from_matrix(DMatrix::from_row_slice(1, 1, &[2.0]));
        let cuts = CutSet::empty(&ConeStructure::new(vec![1]).unwrap());
        let w = DVector::from_column_slice(&[3.0]);
        let res = brute_force_project(&abar, &cuts, &w).unwrap();
        assert!((res.wbar[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn k2_hand_projection() {
        let abar = StackedMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        let cuts = initial_cuts(&ConeStructure::new(vec![2]).unwrap());
        let res = brute_force_project(&abar, &cuts, &DVector::from_column_slice(&[2.0, 1.0])).unwrap();
        assert!((res.wbar[0] - 1.5).abs() < 1e-10 && (res.wbar[1] - 1.5).abs() < 1e-10);
    }

    #[test]
    fn enumeration_bound() {
        let abar = StackedMatrix::from_matrix(DMatrix::zeros(2, 13));
        let cuts = CutSet::empty(&ConeStructure::new(vec![1; 13]).unwrap());
        assert!(matches!(
            brute_force_project(&abar, &cuts, &DVector::zeros(2)),
            Err(AlpnError::EnumerationBound { .. })
        ));
    }

    #[test]
    fn sampled_min_bounds() {
        let xi = [1.0, -3.0, 4.0];
        let few = sampled_cut_min(&xi, 100, 1);
        let many = sampled_cut_min(&xi, 10_000, 1);
        assert!(few >= -4.0 && many >= -4.0);
        assert!(many <= few);
        assert!(many < -3.9);
        // Axis point: the minimum is x_1 for every v.
        assert!((sampled_cut_min(&[2.0, 0.0, 0.0], 50, 3) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn analytic_cases_validate() {
        let cases = analytic_cases();
        assert_eq!(cases.len(), 3);
        assert_eq!(cases[0].objective, 1.0);
        assert_eq!(cases[1].objective, std::f64::consts::SQRT_2);
    }
}
