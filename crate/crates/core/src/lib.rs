//! Exact interval exchange transformations, Rauzy induction, named
//! induction paths, symbolic block coding and finite-horizon certificates of
//! k-alphabet mixing.
//!
//! Permutations use direct one-line notation throughout: `image[j-1] = π(j)`.

pub mod arith;
pub mod billiard;
pub mod coding;
pub mod construct;
pub mod error;
pub mod iet;
pub mod matrix;
pub mod mixing;
pub mod number;
pub mod paths;
pub mod perm;
pub mod rauzy;

pub use error::{Error, Result};
pub use iet::ExactIet;
pub use matrix::IntegerMatrix;
pub use number::ExactNumber;
pub use perm::Permutation;
pub use rauzy::{Move, RauzyPath};

/// Version tag carried by every JSON artifact.
pub const SCHEMA: &str = "ietlab/1";
