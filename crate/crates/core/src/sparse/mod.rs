//! Compressed sparse storage and the linear solvers built on it.

mod csr;
mod dense;
mod iterative;
mod ldlt;

pub use csr::{CsrMatrix, TripletBuilder};
pub use dense::{symmetric_eigenvalues, DenseMatrix};
pub use iterative::{lanczos_ritz_values, pcg, CgOutcome};
pub use ldlt::{amd_ordering, Ldlt};
