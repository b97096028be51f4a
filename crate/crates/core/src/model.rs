//! Problem data, cone structure and solver state.
//!
//! The solver works on the standard-form problem
//!
//! ```text
//!     maximize    c'x
//!     subject to  A x = b,
//!                 x in K = K^{n_1} x ... x K^{n_p},
//! ```
//!
//! where `K^l = { z : z_1 >= ||(z_2, ..., z_l)|| }` for `l >= 2` and the
//! nonnegative ray for `l = 1`.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use crate::dual::{DualCertificate, ResidualBundle};
use crate::error::{AlpnError, Result};
use crate::projection::WorkingSet;

/// Cartesian block structure `(n_1, ..., n_p)` of the cone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConeStructure {
    dims: Vec<usize>,
    offsets: Vec<usize>,
}

impl ConeStructure {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(AlpnError::InvalidCone("at least one block is required".into()));
        }
        if let Some(pos) = dims.iter().position(|&d| d == 0) {
            return Err(AlpnError::InvalidCone(format!("block {pos} has dimension 0")));
        }
        let mut offsets = Vec::with_capacity(dims.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for &d in &dims {
            acc += d;
            offsets.push(acc);
        }
        Ok(Self { dims, offsets })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Total dimension `n`.
    pub fn n(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// Number of blocks `p`.
    pub fn p(&self) -> usize {
        self.dims.len()
    }

    pub fn dim(&self, block: usize) -> usize {
        self.dims[block]
    }

    /// Coordinate range of `block` inside `x`.
    pub fn range(&self, block: usize) -> Range<usize> {
        self.offsets[block]..self.offsets[block + 1]
    }

    /// Hyperplane count of the `{±e_j}` initial approximation.
    pub fn initial_hyperplane_count(&self) -> usize {
        self.dims.iter().map(|&d| if d == 1 { 1 } else { 2 * (d - 1) }).sum()
    }
}

/// Zero-based view of block `block` of `x`.
pub fn block_view<'a>(x: &'a [f64], cone: &ConeStructure, block: usize) -> Result<&'a [f64]> {
    if block >= cone.p() {
        return Err(AlpnError::BlockOutOfRange { index: block, blocks: cone.p() });
    }
    if x.len() != cone.n() {
        return Err(AlpnError::DimensionMismatch { expected: cone.n(), got: x.len() });
    }
    Ok(&x[cone.range(block)])
}

/// A validated SOCP instance `(A, b, c, K)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SocpInstance {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: DVector<f64>,
    cone: ConeStructure,
}

impl SocpInstance {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, c: DVector<f64>, cone: ConeStructure) -> Result<Self> {
        let (m, n) = a.shape();
        if m == 0 {
            return Err(AlpnError::InvalidInstance("A must have at least one row".into()));
        }
        if n != cone.n() {
            return Err(AlpnError::InvalidInstance(format!(
                "A has {n} columns but the cone dimension is {}",
                cone.n()
            )));
        }
        if b.len() != m {
            return Err(AlpnError::InvalidInstance(format!("b has length {} but A has {m} rows", b.len())));
        }
        if c.len() != n {
            return Err(AlpnError::InvalidInstance(format!("c has length {} but A has {n} columns", c.len())));
        }
        let finite = |s: &[f64]| s.iter().all(|v| v.is_finite());
        if !finite(a.as_slice()) || !finite(b.as_slice()) || !finite(c.as_slice()) {
            return Err(AlpnError::InvalidInstance("non-finite entry".into()));
        }
        Ok(Self { a, b, c, cone })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn c(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn cone(&self) -> &ConeStructure {
        &self.cone
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }
}

/// The stacked matrix `[c'; A]` of size `(1 + m) x n`.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedMatrix {
    abar: DMatrix<f64>,
}

impl StackedMatrix {
    /// Wraps an arbitrary `(1 + m) x n` matrix; used by the projection tests
    /// and the brute-force oracle where no instance exists.
    pub fn from_matrix(abar: DMatrix<f64>) -> Self {
        Self { abar }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.abar
    }

    pub fn nrows(&self) -> usize {
        self.abar.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.abar.ncols()
    }

    /// Row 0, i.e. `c`.
    pub fn objective_row(&self) -> DVector<f64> {
        self.abar.row(0).transpose()
    }

    /// Rows `1..=m`, i.e. `A`.
    pub fn constraint_rows(&self) -> DMatrix<f64> {
        self.abar.rows(1, self.abar.nrows() - 1).into_owned()
    }
}

pub fn assemble_stacked(instance: &SocpInstance) -> StackedMatrix {
    let (m, n) = instance.a.shape();
    let mut abar = DMatrix::zeros(m + 1, n);
    abar.row_mut(0).copy_from(&instance.c.transpose());
    abar.rows_mut(1, m).copy_from(&instance.a);
    StackedMatrix { abar }
}

/// Upper bound on `||v||` for a stored cut.
pub const CUT_NORM_LIMIT: f64 = 1.0 + 1e-12;

/// Finite cut families `E_i` defining the polyhedral cone
/// `K_E = { x : x^i_1 + v'x̄^i >= 0 for all v in E_i }`.
///
/// Blocks of dimension one hold no cuts; they carry the implicit constraint
/// `x^i >= 0`. Cuts are only ever appended, so `(block, slot)` identifies a
/// cut for the lifetime of the set.
#[derive(Debug, Clone, PartialEq)]
pub struct CutSet {
    cone: ConeStructure,
    blocks: Vec<Vec<Vec<f64>>>,
}

impl CutSet {
    pub fn empty(cone: &ConeStructure) -> Self {
        Self { cone: cone.clone(), blocks: vec![Vec::new(); cone.p()] }
    }

    pub fn cone(&self) -> &ConeStructure {
        &self.cone
    }

    pub fn cuts(&self, block: usize) -> &[Vec<f64>] {
        &self.blocks[block]
    }

    /// Appends `v` to block `block` unless a cut within `dedup_tol` is
    /// already present. Returns whether the cut was stored.
    pub fn insert(&mut self, block: usize, v: Vec<f64>, dedup_tol: f64) -> Result<bool> {
        if block >= self.cone.p() {
            return Err(AlpnError::BlockOutOfRange { index: block, blocks: self.cone.p() });
        }
        let dim = self.cone.dim(block);
        if dim == 1 {
            return Err(AlpnError::InvalidCone(format!("block {block} is one-dimensional and takes no cuts")));
        }
        if v.len() != dim - 1 {
            return Err(AlpnError::DimensionMismatch { expected: dim - 1, got: v.len() });
        }
        let norm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        if norm.is_nan() || norm > CUT_NORM_LIMIT {
            return Err(AlpnError::InvalidCone(format!("cut norm {norm} exceeds 1")));
        }
        let duplicate = self.blocks[block]
            .iter()
            .any(|u| u.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() < dedup_tol);
        if duplicate {
            return Ok(false);
        }
        self.blocks[block].push(v);
        Ok(true)
    }

    /// Stored cuts plus one implicit hyperplane per one-dimensional block.
    pub fn hyperplane_count(&self) -> usize {
        self.per_block_counts().iter().sum()
    }

    pub fn per_block_counts(&self) -> Vec<usize> {
        (0..self.cone.p()).map(|i| if self.cone.dim(i) == 1 { 1 } else { self.blocks[i].len() }).collect()
    }

    /// True when every cut stored in `self` is also stored in `other`.
    pub fn is_subset_of(&self, other: &CutSet) -> bool {
        self.cone == other.cone
            && self.blocks.iter().zip(&other.blocks).all(|(mine, theirs)| mine.iter().all(|v| theirs.contains(v)))
    }
}

/// Snapshot of one outer iteration.
#[derive(Debug, Clone)]
pub struct IterateState {
    pub k: usize,
    pub gamma: f64,
    /// `(gamma; b)`.
    pub w: DVector<f64>,
    /// `(zeta; b_k) = Abar x`.
    pub wbar: DVector<f64>,
    pub x: DVector<f64>,
    pub active: WorkingSet,
}

impl IterateState {
    pub fn zeta(&self) -> f64 {
        self.wbar[0]
    }

    /// `||b_k - b||`.
    pub fn b_dist(&self) -> f64 {
        (self.w.rows(1, self.w.len() - 1) - self.wbar.rows(1, self.wbar.len() - 1)).norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    RelaxationUnbounded,
    DualUnbounded,
    IterationLimit,
    NumericalFailure,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::RelaxationUnbounded => "relaxation_unbounded",
            SolveStatus::DualUnbounded => "dual_unbounded",
            SolveStatus::IterationLimit => "iteration_limit",
            SolveStatus::NumericalFailure => "numerical_failure",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "optimal" => SolveStatus::Optimal,
            "relaxation_unbounded" => SolveStatus::RelaxationUnbounded,
            "dual_unbounded" => SolveStatus::DualUnbounded,
            "iteration_limit" => SolveStatus::IterationLimit,
            "numerical_failure" => SolveStatus::NumericalFailure,
            _ => return None,
        })
    }
}

/// One row of the outer-iteration log.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub gamma: f64,
    pub zeta: f64,
    /// `||b_k - b||`.
    pub b_dist: f64,
    /// `||w - wbar||`.
    pub w_dist: f64,
    /// The projection `(zeta; b_k)`.
    pub wbar: Vec<f64>,
    /// `gamma` of the next iteration; `None` on the terminating row.
    pub gamma_next: Option<f64>,
    /// Hyperplanes in the approximation used by this iteration's projection.
    pub cuts_total: usize,
    pub cuts_added: usize,
    pub qp_inner_iters: usize,
    pub primal_residual: f64,
    /// Dual estimate recovered from this iteration's hyperplane, when the
    /// hyperplane is not vertical.
    pub y: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub x: DVector<f64>,
    pub certificate: Option<DualCertificate>,
    /// `c'x` of the returned point.
    pub objective: f64,
    pub iterations: usize,
    /// KKT residuals at `x`; the dual fields use the certificate's `y`
    /// when one is attached and `y = 0` otherwise.
    pub residuals: ResidualBundle,
    pub log: Vec<IterationRecord>,
    pub gamma0: f64,
    pub gamma_escalations: usize,
    pub initial_hyperplanes: usize,
    pub final_hyperplanes: usize,
    pub final_cut_counts: Vec<usize>,
    pub wall_time_seconds: f64,
}
