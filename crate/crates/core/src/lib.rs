//! Tree and rule ensembles generated by importance-sampled learning, with
//! interchangeable post-processors (PLS, PCR, lasso, stacking, out-of-bag
//! kernel weighting, Nadaraya–Watson smoothing) and importance measures.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, CSV ingestion,
//! parallel orchestration and the command-line front end live in the `isle`
//! companion crate.
#![no_std]
#![deny(missing_debug_implementations)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dataset;
pub mod error;
pub mod eval;
pub mod importance;
pub mod isle;
pub mod matrix;
pub mod postproc;
pub mod rng;
pub mod rules;
pub mod tree;

mod math;

pub use dataset::{Dataset, FoldAssignment, SplitSpec};
pub use error::{Error, Result};
pub use isle::{Ensemble, IsleConfig, Sampling, SamplingMode};
pub use matrix::Matrix;
pub use postproc::{Kernel, KernelSmoother, MethodTag, WeightModel};
pub use rules::{Rule, RuleScope, RuleSet};
pub use tree::{RegressionTree, SplitSearch, TreeParams};
