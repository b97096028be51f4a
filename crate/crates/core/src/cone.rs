//! Second-order cone geometry and its polyhedral outer approximations.
//!
//! Every `v` with `||v|| <= 1` gives a valid inequality `x_1 + v'x̄ >= 0` for
//! the cone `K^l`, and the cone is exactly the intersection of all of them.

use crate::error::{AlpnError, Result};
use crate::model::{ConeStructure, CutSet};

/// A cut `v` for block `block`.
#[derive(Debug, Clone, PartialEq)]
pub struct CutVector {
    pub block: usize,
    pub v: Vec<f64>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|t| t * t).sum::<f64>().sqrt()
}

/// `||x̄|| - x_1` for blocks of dimension at least two, `-x_1` otherwise.
/// Nonpositive exactly when `xi` lies in the cone.
pub fn soc_residual(xi: &[f64]) -> f64 {
    match xi {
        [] => 0.0,
        [x1] => -x1,
        [x1, tail @ ..] => norm(tail) - x1,
    }
}

/// Minimiser of `x_1 + v'x̄` over the unit ball: `v = -x̄ / ||x̄||`, or `0`
/// when `x̄ = 0` (every `v` is then a minimiser).
pub fn most_violated_cut(block: usize, xi: &[f64]) -> Result<CutVector> {
    if xi.len() < 2 {
        return Err(AlpnError::InvalidCone(format!(
            "most violated cut needs a block of dimension >= 2, got {}",
            xi.len()
        )));
    }
    let tail = &xi[1..];
    let r = norm(tail);
    let v = if r > 0.0 { tail.iter().map(|t| -t / r).collect() } else { vec![0.0; tail.len()] };
    Ok(CutVector { block, v })
}

/// `x_1 + v'x̄`.
pub fn cut_value(v: &[f64], xi: &[f64]) -> Result<f64> {
    if xi.len() != v.len() + 1 {
        return Err(AlpnError::DimensionMismatch { expected: v.len() + 1, got: xi.len() });
    }
    Ok(xi[0] + v.iter().zip(&xi[1..]).map(|(a, b)| a * b).sum::<f64>())
}

/// The `{±e_j}` approximation: exact for blocks of dimension one and two.
pub fn initial_cuts(cone: &ConeStructure) -> CutSet {
    let mut cuts = CutSet::empty(cone);
    for (block, &dim) in cone.dims().iter().enumerate() {
        if dim < 2 {
            continue;
        }
        for j in 0..dim - 1 {
            for sign in [1.0, -1.0] {
                let mut v = vec![0.0; dim - 1];
                v[j] = sign;
                cuts.insert(block, v, 0.0).expect("unit vectors are valid cuts");
            }
        }
    }
    cuts
}

/// Whether `x` satisfies every cut of `cuts` (and `x^i >= 0` on
/// one-dimensional blocks) up to `tol`.
pub fn in_polyhedral_cone(x: &[f64], cuts: &CutSet, tol: f64) -> bool {
    let cone = cuts.cone();
    if x.len() != cone.n() {
        return false;
    }
    (0..cone.p()).all(|i| {
        let xi = &x[cone.range(i)];
        if xi.len() == 1 {
            xi[0] >= -tol
        } else {
            cuts.cuts(i).iter().all(|v| cut_value(v, xi).is_ok_and(|g| g >= -tol))
        }
    })
}

/// Whether `x` lies in the cone `K` up to `tol`.
pub fn in_cone(x: &[f64], cone: &ConeStructure, tol: f64) -> bool {
    x.len() == cone.n() && (0..cone.p()).all(|i| soc_residual(&x[cone.range(i)]) <= tol)
}
