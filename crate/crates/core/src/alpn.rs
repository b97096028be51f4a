//! Adaptive LP-Newton outer loop.
//!
//! Each iteration projects `w = (gamma; b)` onto `Abar * K_E`, stops when the
//! projected point is feasible for the cone program, and otherwise moves
//! `gamma` to where the supporting hyperplane at the projection meets the
//! line `{(t; b)}`, then tightens `K_E` with the most violated cut of each
//! infeasible block.

use std::time::Instant;

use nalgebra::DVector;

use crate::cone::{cut_value, initial_cuts, most_violated_cut, soc_residual};
use crate::dual::{kkt_residuals, recover_dual, DualCertificate, DualRecovery};
use crate::error::{AlpnError, Result};
use crate::model::{assemble_stacked, IterateState, IterationRecord, SocpInstance, SolveReport, SolveStatus};
use crate::projection::{lift_into_cone, project_from, WorkingSet};

/// Tolerances and limits shared by every stage of a solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    /// Stopping threshold on `max(||Ax - b||, max_i soc_residual(x^i))`.
    pub tol_feas: f64,
    pub tol_qp: f64,
    pub tol_lin: f64,
    /// Cuts closer than this in the same block are duplicates.
    pub dedup_tol: f64,
    /// Defaults to `10 n + 1000` when unset.
    pub max_outer_iterations: Option<usize>,
    pub gamma0: Option<f64>,
    pub gamma_escalation_factor: f64,
    pub max_gamma_escalations: usize,
    /// Add the minimising cut even for blocks that are already feasible.
    pub add_inactive_cuts: bool,
    /// Consecutive iterations with neither a `gamma` decrease nor a new cut
    /// tolerated before giving up.
    pub stall_window: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            tol_feas: 1e-4,
            tol_qp: 1e-9,
            tol_lin: 1e-8,
            dedup_tol: 1e-10,
            max_outer_iterations: None,
            gamma0: None,
            gamma_escalation_factor: 10.0,
            max_gamma_escalations: 20,
            add_inactive_cuts: false,
            stall_window: 10,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tol_feas", self.tol_feas),
            ("tol_qp", self.tol_qp),
            ("tol_lin", self.tol_lin),
            ("dedup_tol", self.dedup_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(AlpnError::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.gamma_escalation_factor > 1.0 && self.gamma_escalation_factor.is_finite()) {
            return Err(AlpnError::InvalidParams("gamma_escalation_factor must exceed 1".into()));
        }
        if let Some(g) = self.gamma0 {
            if !g.is_finite() {
                return Err(AlpnError::InvalidParams("gamma0 must be finite".into()));
            }
        }
        if self.max_outer_iterations == Some(0) {
            return Err(AlpnError::InvalidParams("max_outer_iterations must be positive".into()));
        }
        Ok(())
    }

    pub fn max_outer(&self, n: usize) -> usize {
        self.max_outer_iterations.unwrap_or(10 * n + 1000)
    }
}

/// Intersection of the line `{(t; b)}` with the hyperplane through
/// `(zeta; bk)` with normal `(gamma - zeta; b - bk)`. Returns `None` when
/// `gamma - zeta` is below `tol_lin`.
pub fn gamma_update(gamma: f64, zeta: f64, b: &DVector<f64>, bk: &DVector<f64>, tol_lin: f64) -> Option<f64> {
    let denom = gamma - zeta;
    if denom < tol_lin {
        return None;
    }
    Some(zeta - (b - bk).norm_squared() / denom)
}

/// Primal stopping test: `max(||Ax - b||, max_i soc_residual(x^i), 0) <= tol`.
pub fn check_feasibility(x: &DVector<f64>, instance: &SocpInstance, tol: f64) -> (bool, f64) {
    let eq = (instance.a() * x - instance.b()).norm();
    let cone = instance.cone();
    let conic = (0..cone.p()).map(|i| soc_residual(&x.as_slice()[cone.range(i)])).fold(0.0, f64::max);
    let residual = eq.max(conic);
    (residual <= tol, residual)
}

/// Starting `gamma`: the override when given, else
/// `1 + ||c|| (1 + ||b||) (1 + ||A||_F)`.
///
/// This is a heuristic, not a proven bound on the optimal value; `solve`
/// raises `gamma` whenever the first projection shows it was too small.
pub fn initial_gamma(instance: &SocpInstance, params: &SolverParams) -> f64 {
    if let Some(g) = params.gamma0 {
        return g;
    }
    1.0 + instance.c().norm() * (1.0 + instance.b().norm()) * (1.0 + instance.a().norm())
}

/// Below `NEWTON_RTOL * (1 + |gamma|)` the gap `gamma - zeta` is roundoff
/// and the line-hyperplane intersection is not trusted.
const NEWTON_RTOL: f64 = 1e-11;

fn escalate(gamma: f64, factor: f64) -> f64 {
    gamma + (factor - 1.0) * (1.0 + gamma.abs())
}

/// Pairs `x` with a logged dual estimate. Estimates whose `eta` lies in the
/// cone to within `tol_qp` are preferred, and among them the one with the
/// smallest scaled gap and complementarity; later iterations win ties. A
/// small `gamma - zeta` amplifies roundoff in `y`, so the last estimate is
/// not always the best one.
fn best_certificate(
    x: &DVector<f64>,
    log: &[IterationRecord],
    instance: &SocpInstance,
    tol_qp: f64,
) -> Option<DualCertificate> {
    let obj_scale = 1.0 + instance.c().dot(x).abs();
    let c_scale = 1.0 + instance.c().norm();
    let mut best: Option<((bool, f64), DualCertificate)> = None;
    for y in log.iter().filter_map(|r| r.y.as_ref()) {
        let y = DVector::from_column_slice(y);
        let (eta, residuals) = kkt_residuals(x, &y, instance);
        let dual_ok = residuals.dual_cone <= tol_qp * c_scale;
        let mut merit = residuals.complementarity.max(residuals.duality_gap) / obj_scale;
        if !dual_ok {
            merit = merit.max(residuals.dual_cone / c_scale);
        }
        let better = match &best {
            None => true,
            Some(((b_ok, b_merit), _)) => (dual_ok && !b_ok) || (dual_ok == *b_ok && merit <= *b_merit),
        };
        if better {
            best = Some(((dual_ok, merit), DualCertificate { y, eta, residuals }));
        }
    }
    best.map(|(_, cert)| cert)
}

/// Runs the adaptive LP-Newton method on `instance`.
///
/// Only invalid parameters produce `Err`; every algorithmic outcome is
/// reported through [`SolveReport::status`].
pub fn solve(instance: &SocpInstance, params: &SolverParams) -> Result<SolveReport> {
    params.validate()?;
    let started = Instant::now();
    let cone = instance.cone();
    let n = instance.n();
    let m = instance.m();
    let abar = assemble_stacked(instance);
    let mut cuts = initial_cuts(cone);
    let initial_hyperplanes = cuts.hyperplane_count();
    let gamma0 = initial_gamma(instance, params);
    let max_iter = params.max_outer(n);

    let mut gamma = gamma0;
    // True once gamma has come out of a hyperplane update, which makes it an
    // upper bound on the relaxation's optimal value.
    let mut certified = false;
    let mut escalations = 0;
    let mut warm: Option<WorkingSet> = None;
    let mut start: Option<DVector<f64>> = None;
    let mut log: Vec<IterationRecord> = Vec::new();
    let mut stall = 0;
    let mut x = DVector::zeros(n);
    let status;

    loop {
        let k = log.len();
        if k >= max_iter {
            status = SolveStatus::IterationLimit;
            break;
        }
        let mut w = DVector::zeros(m + 1);
        w[0] = gamma;
        w.rows_mut(1, m).copy_from(instance.b());

        let proj = match project_from(&abar, &cuts, &w, warm.as_ref(), start.as_ref(), params) {
            Ok(p) => p,
            Err(_) => {
                status = SolveStatus::NumericalFailure;
                break;
            }
        };
        let state = IterateState { k, gamma, w, wbar: proj.wbar, x: proj.x, active: proj.active };
        let zeta = state.zeta();
        let degenerate = gamma - zeta <= params.tol_lin * (1.0 + gamma.abs());

        if degenerate && !certified {
            // (gamma; b) already lies in the image: gamma was not an upper bound.
            if escalations >= params.max_gamma_escalations {
                x = state.x;
                status = SolveStatus::RelaxationUnbounded;
                break;
            }
            escalations += 1;
            gamma = escalate(gamma, params.gamma_escalation_factor);
            start = Some(state.x);
            warm = Some(state.active);
            continue;
        }
        if zeta - gamma > 1e-6 * (1.0 + gamma.abs()) {
            x = state.x;
            status = SolveStatus::NumericalFailure;
            break;
        }

        let b_dist = state.b_dist();
        let (feasible, primal_residual) = check_feasibility(&state.x, instance, params.tol_feas);
        let recovery = recover_dual(&state.x, gamma, instance, params.tol_lin);
        let y = match (&recovery, degenerate) {
            (DualRecovery::Recovered(y), false) => Some(y.clone()),
            _ => None,
        };
        let mut record = IterationRecord {
            k,
            gamma,
            zeta,
            b_dist,
            w_dist: (&state.w - &state.wbar).norm(),
            wbar: state.wbar.as_slice().to_vec(),
            gamma_next: None,
            cuts_total: cuts.hyperplane_count(),
            cuts_added: 0,
            qp_inner_iters: proj.inner_iterations,
            primal_residual,
            y: y.map(|y| y.as_slice().to_vec()),
        };
        x = state.x.clone();

        if feasible {
            log.push(record);
            status = SolveStatus::Optimal;
            break;
        }
        if degenerate && recovery == DualRecovery::Unbounded && b_dist > params.tol_feas {
            log.push(record);
            status = SolveStatus::DualUnbounded;
            break;
        }

        let floor = NEWTON_RTOL * (1.0 + gamma.abs());
        let gamma_next = gamma_update(gamma, zeta, instance.b(), &state.wbar.rows(1, m).into_owned(), floor)
            .unwrap_or(gamma.min(zeta));
        certified = true;

        let mut added = 0;
        for i in 0..cone.p() {
            if cone.dim(i) < 2 {
                continue;
            }
            let xi = &state.x.as_slice()[cone.range(i)];
            let cut = most_violated_cut(i, xi)?;
            let value = cut_value(&cut.v, xi)?;
            if (value < -params.tol_qp || params.add_inactive_cuts) && cuts.insert(i, cut.v, params.dedup_tol)? {
                added += 1;
            }
        }
        record.gamma_next = Some(gamma_next);
        record.cuts_added = added;
        log.push(record);

        // A new cut changes the relaxation even when gamma does not move.
        if added == 0 && gamma - gamma_next < 1e-14 * (1.0 + gamma.abs()) {
            stall += 1;
            if stall >= params.stall_window {
                status = SolveStatus::NumericalFailure;
                break;
            }
        } else {
            stall = 0;
        }
        gamma = gamma_next;
        start = Some(lift_into_cone(&state.x, &cuts));
        warm = Some(state.active);
    }

    let certificate = best_certificate(&x, &log, instance, params.tol_qp);
    let residuals = match &certificate {
        Some(cert) => cert.residuals,
        None => kkt_residuals(&x, &DVector::zeros(m), instance).1,
    };

    Ok(SolveReport {
        status,
        objective: instance.c().dot(&x),
        x,
        certificate,
        iterations: log.len(),
        residuals,
        log,
        gamma0,
        gamma_escalations: escalations,
        initial_hyperplanes,
        final_hyperplanes: cuts.hyperplane_count(),
        final_cut_counts: cuts.per_block_counts(),
        wall_time_seconds: started.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ConeStructure;
    use nalgebra::DMatrix;

    fn inst(a: &[f64], m: usize, b: &[f64], c: &[f64], dims: Vec<usize>) -> SocpInstance {
        SocpInstance::new(
            DMatrix::from_row_slice(m, c.len(), a),
            DVector::from_column_slice(b),
            DVector::from_column_slice(c),
            ConeStructure::new(dims).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn gamma_update_examples() {
        let b = DVector::from_column_slice(&[1.0, 2.0]);
        assert_eq!(gamma_update(5.0, 3.0, &b, &b, 1e-8), Some(3.0));
        let bk = DVector::from_column_slice(&[1.0, 0.0]);
        assert_eq!(gamma_update(4.0, 2.0, &b, &bk, 1e-8), Some(0.0));
        assert_eq!(gamma_update(2.0, 2.0, &b, &bk, 1e-8), None);
    }

    #[test]
    fn gamma_update_matches_line_hyperplane_intersection() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let m = rng.random_range(1..5);
            let b = DVector::from_fn(m, |_, _| rng.random_range(-3.0..3.0));
            let bk = DVector::from_fn(m, |_, _| rng.random_range(-3.0..3.0));
            let zeta = rng.random_range(-5.0..5.0);
            let gamma = zeta + rng.random_range(0.1..5.0);
            // Solve normal'((t; b) - (zeta; bk)) = 0 for t.
            let d0 = gamma - zeta;
            let db = &b - &bk;
            let t = zeta - db.dot(&(&b - &bk)) / d0;
            let got = gamma_update(gamma, zeta, &b, &bk, 1e-8).unwrap();
            assert!((got - t).abs() <= 1e-12 * (1.0 + t.abs()));
            assert!(got <= zeta);
        }
    }

    #[test]
    fn feasibility_examples() {
        let one = inst(&[1.0, 1.0], 1, &[2.0], &[0.0, 0.0], vec![1, 1]);
        let (ok, r) = check_feasibility(&DVector::from_column_slice(&[1.0, 1.0]), &one, 1e-4);
        assert!(ok && r == 0.0);
        let (ok, r) = check_feasibility(&DVector::zeros(2), &one, 1e-4);
        assert!(!ok && r == 2.0);
        let eye = inst(&[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0], 3, &[1.0, -3.0, 4.0], &[0.0; 3], vec![3]);
        let (ok, r) = check_feasibility(&DVector::from_column_slice(&[1.0, -3.0, 4.0]), &eye, 1e-4);
        assert!(!ok && r == 4.0);
    }

    #[test]
    fn initial_gamma_choices() {
        let k2 = inst(&[1.0, 0.0], 1, &[1.0], &[0.0, 1.0], vec![2]);
        let p = SolverParams { gamma0: Some(100.0), ..Default::default() };
        assert_eq!(initial_gamma(&k2, &p), 100.0);
        let zero_c = inst(&[1.0, 0.0], 1, &[1.0], &[0.0, 0.0], vec![2]);
        assert_eq!(initial_gamma(&zero_c, &SolverParams::default()), 1.0);
    }

    #[test]
    fn params_validation() {
        assert!(SolverParams::default().validate().is_ok());
        assert!(SolverParams { tol_feas: 0.0, ..Default::default() }.validate().is_err());
        assert!(SolverParams { gamma_escalation_factor: 1.0, ..Default::default() }.validate().is_err());
        assert!(SolverParams { max_outer_iterations: Some(0), ..Default::default() }.validate().is_err());
    }

    #[test]
    fn solves_k2_instance() {
        let k2 = inst(&[1.0, 0.0], 1, &[1.0], &[0.0, 1.0], vec![2]);
        let report = solve(&k2, &SolverParams::default()).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        assert!((report.objective - 1.0).abs() <= 1e-6);
        assert!((report.x[0] - 1.0).abs() <= 1e-6 && (report.x[1] - 1.0).abs() <= 1e-6);
        assert!(report.iterations <= 2);
        assert_eq!(report.final_hyperplanes, report.initial_hyperplanes);
        let cert = report.certificate.expect("certificate");
        assert!((cert.y[0] - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn solves_k3_instance() {
        let k3 = inst(&[1.0, 0.0, 0.0], 1, &[1.0], &[0.0, 1.0, 1.0], vec![3]);
        let report = solve(&k3, &SolverParams::default()).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        let s2 = std::f64::consts::SQRT_2;
        assert!((report.objective - s2).abs() <= 1e-4 * (1.0 + s2), "{}", report.objective);
        assert!(report.final_hyperplanes > report.initial_hyperplanes);
    }

    #[test]
    fn small_gamma0_is_escalated() {
        let k3 = inst(&[1.0, 0.0, 0.0], 1, &[1.0], &[0.0, 1.0, 1.0], vec![3]);
        let p = SolverParams { gamma0: Some(-5.0), ..Default::default() };
        let report = solve(&k3, &p).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        assert!(report.gamma_escalations > 0);
        assert!((report.objective - std::f64::consts::SQRT_2).abs() <= 3e-4);
    }

    #[test]
    fn unbounded_relaxation_reported() {
        // maximize x1 subject to x2 = 0 over K^2 x K^1: unbounded.
        let unb = inst(&[0.0, 0.0, 1.0], 1, &[0.0], &[1.0, 0.0, 0.0], vec![2, 1]);
        let report = solve(&unb, &SolverParams::default()).unwrap();
        assert_eq!(report.status, SolveStatus::RelaxationUnbounded);
        assert_eq!(report.gamma_escalations, SolverParams::default().max_gamma_escalations);
    }

    #[test]
    fn iteration_cap() {
        let k3 = inst(&[1.0, 0.0, 0.0], 1, &[1.0], &[0.0, 1.0, 1.0], vec![3]);
        let p = SolverParams { max_outer_iterations: Some(1), ..Default::default() };
        let report = solve(&k3, &p).unwrap();
        assert_eq!(report.status, SolveStatus::IterationLimit);
        assert_eq!(report.iterations, 1);
    }
}
