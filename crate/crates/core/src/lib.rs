//! Second-order cone programming by the adaptive LP-Newton method.
//!
//! The solver maximises `c'x` subject to `Ax = b` and `x` in a product of
//! second-order cones. It replaces each cone by a polyhedral outer
//! approximation, repeatedly projects the point `(gamma; b)` onto the image
//! of that approximation under `[c'; A]`, lowers `gamma` along the
//! supporting hyperplane at the projection, and adds the most violated cut
//! of every infeasible block until the projected point is feasible.
//!
//! ```
//! use alpn_socp::{gen, solve, SolveStatus, SolverParams};
//!
//! let g = gen::generate(5, &[3, 3, 2], 7).unwrap();
//! let report = solve(&g.instance, &SolverParams::default()).unwrap();
//! assert_eq!(report.status, SolveStatus::Optimal);
//! ```

pub mod alpn;
pub mod cli;
pub mod cone;
pub mod dual;
pub mod error;
pub mod gen;
pub mod io;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod projection;

pub use alpn::{solve, SolverParams};
pub use dual::{DualCertificate, ResidualBundle};
pub use error::{AlpnError, Result};
pub use model::{
    assemble_stacked, ConeStructure, CutSet, IterationRecord, SocpInstance, SolveReport, SolveStatus, StackedMatrix,
};
