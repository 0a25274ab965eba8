//! Benchmarking toolkit for hardness characterization methods.
//!
//! The crate injects controllable, ground-truth-labeled hardness into
//! classification datasets, trains a small multilayer perceptron while
//! recording per-sample training dynamics, computes per-sample hardness
//! scores with thirteen characterization methods, and evaluates how well
//! each method detects the injected hard samples.
//!
//! The numeric core is generic over the scalar type (see [`num::Real`]);
//! the aliases below fix `f64`, which the command-line pipeline uses.

pub mod data;
pub mod hardness;
pub mod linalg;
pub mod num;
pub mod rng;

/// Working scalar for the command-line pipeline.
pub type Scalar = f64;

/// `f64` dataset used by the pipeline.
pub type Dataset = data::Dataset<Scalar>;
