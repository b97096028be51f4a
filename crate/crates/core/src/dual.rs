//! Dual recovery from the primal trajectory and KKT certification.
//!
//! The supporting hyperplane of an outer iteration has normal
//! `w - wbar = (gamma - c'x; b - A x)`. Rescaling it so the first coordinate
//! is one gives `(1; -y)`, a dual estimate for
//!
//! ```text
//!     minimize    b'y
//!     subject to  A'y - c in K.
//! ```

use nalgebra::DVector;

use crate::cone::soc_residual;
use crate::model::{ConeStructure, SocpInstance};

/// Residuals of the KKT system
/// `Ax = b, eta = A'y - c, eta in K, x in K, eta'x = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ResidualBundle {
    /// `||Ax - b||`.
    pub primal_eq: f64,
    /// `max_i soc_residual(x^i)`, clamped at 0.
    pub primal_cone: f64,
    /// `max_i soc_residual(eta^i)`, clamped at 0.
    pub dual_cone: f64,
    /// `|eta'x|`.
    pub complementarity: f64,
    /// `|c'x - b'y|`.
    pub duality_gap: f64,
}

impl ResidualBundle {
    pub fn max(&self) -> f64 {
        self.primal_eq.max(self.primal_cone).max(self.dual_cone).max(self.complementarity).max(self.duality_gap)
    }

    /// KKT test at tolerance `tol`. Primal terms are absolute so that a
    /// passing certificate also passes the primal stopping rule; dual terms
    /// are scaled by the size of the data.
    pub fn satisfied(&self, tol: f64, c_norm: f64, objective: f64) -> bool {
        let rel = tol * (1.0 + objective.abs());
        self.primal_eq <= tol
            && self.primal_cone <= tol
            && self.dual_cone <= tol * (1.0 + c_norm)
            && self.complementarity <= rel
            && self.duality_gap <= rel
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualCertificate {
    pub y: DVector<f64>,
    pub eta: DVector<f64>,
    pub residuals: ResidualBundle,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DualRecovery {
    Recovered(DVector<f64>),
    /// `gamma = c'x` while `Ax != b`: the hyperplane is vertical.
    Unbounded,
}

/// Largest cone residual over all blocks, clamped at zero.
pub fn cone_violation(v: &DVector<f64>, cone: &ConeStructure) -> f64 {
    (0..cone.p()).map(|i| soc_residual(&v.as_slice()[cone.range(i)])).fold(0.0, f64::max)
}

/// `y = -(b - Ax) / (gamma - c'x)`, with the vertical and zero cases
/// resolved by `tol_lin`.
pub fn recover_dual(x: &DVector<f64>, gamma: f64, instance: &SocpInstance, tol_lin: f64) -> DualRecovery {
    let denom = gamma - instance.c().dot(x);
    let resid = instance.b() - instance.a() * x;
    if denom.abs() > tol_lin * (1.0 + gamma.abs()) {
        DualRecovery::Recovered(resid / -denom)
    } else if resid.norm() > tol_lin {
        DualRecovery::Unbounded
    } else {
        DualRecovery::Recovered(DVector::zeros(instance.m()))
    }
}

/// Computes `eta = A'y - c` and the residual bundle of `(x, y, eta)`.
pub fn kkt_residuals(x: &DVector<f64>, y: &DVector<f64>, instance: &SocpInstance) -> (DVector<f64>, ResidualBundle) {
    let eta = instance.a().transpose() * y - instance.c();
    let cone = instance.cone();
    let bundle = ResidualBundle {
        primal_eq: (instance.a() * x - instance.b()).norm(),
        primal_cone: cone_violation(x, cone),
        dual_cone: cone_violation(&eta, cone),
        complementarity: eta.dot(x).abs(),
        duality_gap: (instance.c().dot(x) - instance.b().dot(y)).abs(),
    };
    (eta, bundle)
}

/// Builds a certificate for `(x, y)` when it passes the KKT test at `tol`.
pub fn certify_pair(x: &DVector<f64>, y: DVector<f64>, instance: &SocpInstance, tol: f64) -> Option<DualCertificate> {
    let (eta, residuals) = kkt_residuals(x, &y, instance);
    residuals.satisfied(tol, instance.c().norm(), instance.c().dot(x)).then_some(DualCertificate { y, eta, residuals })
}

/// Dual recovery followed by the KKT test.
pub fn certify(
    x: &DVector<f64>,
    gamma: f64,
    instance: &SocpInstance,
    tol: f64,
    tol_lin: f64,
) -> Option<DualCertificate> {
    match recover_dual(x, gamma, instance, tol_lin) {
        DualRecovery::Recovered(y) => certify_pair(x, y, instance, tol),
        DualRecovery::Unbounded => None,
    }
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

    fn k2() -> SocpInstance {
        inst(&[1.0, 0.0], 1, &[1.0], &[0.0, 1.0], vec![2])
    }

    fn k3() -> SocpInstance {
        inst(&[1.0, 0.0, 0.0], 1, &[1.0], &[0.0, 1.0, 1.0], vec![3])
    }

    #[test]
    fn recover_zero_numerator() {
        let x = DVector::from_column_slice(&[1.0, 0.5]);
        assert_eq!(recover_dual(&x, 3.0, &k2(), 1e-8), DualRecovery::Recovered(DVector::zeros(1)));
    }

    #[test]
    fn recover_hand_example() {
        // gamma - c'x = 2 and b - Ax = (4, -2) give y = (-2, 1).
        let instance = inst(&[1.0, 0.0, 0.0, 1.0], 2, &[5.0, -1.0], &[1.0, 0.0], vec![2]);
        let x = DVector::from_column_slice(&[1.0, 1.0]);
        match recover_dual(&x, 3.0, &instance, 1e-8) {
            DualRecovery::Recovered(y) => assert_eq!(y.as_slice(), &[-2.0, 1.0]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn recover_vertical_hyperplane() {
        let x = DVector::from_column_slice(&[2.0, 0.5]);
        assert_eq!(recover_dual(&x, 0.5, &k2(), 1e-8), DualRecovery::Unbounded);
    }

    #[test]
    fn kkt_k3_analytic_pair() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let x = DVector::from_column_slice(&[1.0, h, h]);
        let y = DVector::from_column_slice(&[std::f64::consts::SQRT_2]);
        let (eta, r) = kkt_residuals(&x, &y, &k3());
        assert!((eta[0] - std::f64::consts::SQRT_2).abs() < 1e-15 && eta[1] == -1.0 && eta[2] == -1.0);
        assert!(r.max() <= 1e-12, "{r:?}");
    }

    #[test]
    fn kkt_zero_instance() {
        let instance = inst(&[1.0, 2.0], 1, &[0.0], &[0.0, 0.0], vec![1, 1]);
        let (_, r) = kkt_residuals(&DVector::zeros(2), &DVector::zeros(1), &instance);
        assert_eq!(r, ResidualBundle::default());
    }

    #[test]
    fn certify_near_optimal_k2() {
        // Projection of (1 + eps, 1) onto {t >= |u|} gives x = (1 + eps/2)(1, 1).
        let eps = 1e-7;
        let x = DVector::from_column_slice(&[1.0 + eps / 2.0, 1.0 + eps / 2.0]);
        let cert = certify(&x, 1.0 + eps, &k2(), 1e-4, 1e-8).expect("certificate");
        assert!((cert.y[0] - 1.0).abs() < 1e-6);
        assert!(cert.residuals.duality_gap <= 1e-6);
        // Stationarity is exact by construction.
        let stat = k2().a().transpose() * &cert.y - k2().c() - &cert.eta;
        assert_eq!(stat.norm(), 0.0);
    }

    #[test]
    fn certify_rejects_vertical_and_interior() {
        let x = DVector::from_column_slice(&[2.0, 0.5]);
        assert!(certify(&x, 0.5, &k2(), 1e-4, 1e-8).is_none());
        // Interior feasible point with gamma above: y = 0, eta = -c not in K.
        let x = DVector::from_column_slice(&[1.0, 0.0]);
        assert!(certify(&x, 2.0, &k2(), 1e-4, 1e-8).is_none());
    }
}
