//! Finite-dimensional Hilbert-space effect algebras.
//!
//! Effects are Hermitian matrices in the operator interval `[0, I]`. The
//! crate computes their order, orthogonality, commutativity, coexistence,
//! mixtures, strength along rays and probabilities, builds the standard
//! transformations of the effect interval, and checks which relations those
//! transformations preserve.

pub mod coexistence;
pub mod error;
pub mod effect;
pub mod function;
pub mod harness;
pub mod hermitian;
pub mod io;
pub mod maps;
pub mod rng;
pub mod sampling;
pub mod vector;

pub use effect::{Effect, Projection};
pub use error::{Error, Result};
pub use function::MonotoneFunction;
pub use hermitian::{EigenDecomposition, HermitianMatrix};
pub use rng::SeededRng;
pub use vector::UnitVector;
