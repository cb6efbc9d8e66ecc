//! Dense symmetric linear algebra, projections, operator norms, and the
//! seeded random number source used everywhere else in the crate.

mod eig;
mod matrix;
mod norms;
mod proj;
mod rng;

pub use eig::{eig_sym, max_eigvec, EigenDecomposition};
pub use matrix::{Matrix, SymMatrix};
pub use norms::{elementwise_max_abs, op_norm, vec_norm, NormIndex};
pub use proj::{project_simplex, project_spectrahedron, soft_threshold};
pub use rng::Rng;
