//! Exact finite-dimensional realization of the Gaussian-weighted ∂̄-complex on
//! truncations of `ℓ^p`: weighted `(s,t)`-forms, `∂̄` and its adjoint, the L²
//! energy identity, and a certified minimal-norm ∂̄ solver.

pub mod error;
pub mod exact;
pub mod experiments;
pub mod forms;
pub mod gaussian;
pub mod hermite;
pub mod multiindex;
pub mod poly;
pub mod random;
pub mod solver;

pub use error::{Error, Result};
pub use exact::{Coeff, Rational};
pub use forms::Form;
pub use gaussian::WeightSequence;
pub use hermite::{HermiteExpansion, HermiteMode};
pub use multiindex::MultiIndex;
pub use poly::PolyFn;
pub use solver::{AnsatzSpec, SolveReport};
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
