//! Preprocessing and regression primitives for tabular cost estimation.
//!
//! Everything here is self-contained and deterministic: given the same
//! operator spec, data, and seeds, fits and predictions are bit-identical.
//! The crate is generic over the float scalar type; use the [`Mat64`] /
//! [`Mat32`] aliases (or [`Matrix`] directly) for concrete work.

pub mod error;
pub mod matrix;
pub mod operator;
pub mod pipeline;
pub mod stack;

mod linear;
mod tree;

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub use error::MlError;
pub use matrix::Matrix;
pub use operator::{FittedOperator, OperatorSpec, KNN_K};
pub use pipeline::{
    cross_validate, kfold_indices, mean_absolute_error, search, FittedPipeline, PipelineSpec,
    SearchResult, SearchSpace, CV_FOLDS,
};
pub use stack::{train_stacked, StackedFit};

/// Scalar type the numeric stack is generic over. Implemented for `f32`
/// and `f64` via the blanket impl.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Display
    + Debug
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + Sum
        + Display
        + Debug
        + Serialize
        + DeserializeOwned
        + Send
        + Sync
        + 'static
{
}

/// Double-precision matrix, the default for model training.
pub type Mat64 = Matrix<f64>;
/// Single-precision matrix.
pub type Mat32 = Matrix<f32>;

/// Splits a 64-bit seed into an independent substream seed for `index`.
///
/// Serial and parallel consumers derive the same substream for the same
/// (seed, index) pair, which is what keeps fold workers and generators
/// reproducible regardless of scheduling.
pub fn substream(seed: u64, index: u64) -> u64 {
    splitmix64(seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

/// SplitMix64 finalizer; a cheap, well-mixed u64 -> u64 permutation.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substreams_differ_by_index() {
        let a = substream(42, 0);
        let b = substream(42, 1);
        assert_ne!(a, b);
        assert_eq!(a, substream(42, 0));
    }
}
