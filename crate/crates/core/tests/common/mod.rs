#![allow(dead_code)]

use alpn_socp::{ConeStructure, CutSet, StackedMatrix};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(rng)).collect()
}

/// Uniform point of the closed unit ball in `R^d`.
pub fn ball_point(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let g = gaussian(rng, d);
        let norm = g.iter().map(|t| t * t).sum::<f64>().sqrt();
        if norm > 0.0 {
            let r: f64 = rng.random::<f64>().powf(1.0 / d as f64);
            return g.iter().map(|t| t / norm * r).collect();
        }
    }
}

/// Point of `K^d`: gaussian tail, head at least the tail norm.
pub fn soc_point(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let mut x = gaussian(rng, d);
    let tail = x[1..].iter().map(|t| t * t).sum::<f64>().sqrt();
    x[0] = tail + rng.random::<f64>() * 2.0;
    x
}

/// Small projection problem with at most 12 constraints.
pub fn random_projection_case(seed: u64) -> (StackedMatrix, CutSet, DVector<f64>) {
    let mut rng = rng(seed);
    loop {
        let p = rng.random_range(1..=3);
        let dims: Vec<usize> = (0..p).map(|_| rng.random_range(1..=4)).collect();
        let cone = ConeStructure::new(dims.clone()).unwrap();
        let mut cuts = CutSet::empty(&cone);
        let mut count = 0;
        for (i, &d) in dims.iter().enumerate() {
            if d == 1 {
                count += 1;
                continue;
            }
            for _ in 0..rng.random_range(1..=3) {
                let mut v = ball_point(&mut rng, d - 1);
                let norm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
                if norm < 0.3 {
                    v.iter_mut().for_each(|t| *t *= 0.3 / norm.max(1e-3));
                }
                if cuts.insert(i, v, 1e-10).unwrap() {
                    count += 1;
                }
            }
        }
        if count > 12 {
            continue;
        }
        let rows = rng.random_range(1..=4);
        let n = cone.n();
        let abar = StackedMatrix::from_matrix(DMatrix::from_vec(rows, n, gaussian(&mut rng, rows * n)));
        let w = DVector::from_vec(gaussian(&mut rng, rows)) * 3.0;
        return (abar, cuts, w);
    }
}
