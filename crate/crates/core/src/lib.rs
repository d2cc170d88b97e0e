//! Instance selection by entropy-driven split-and-merge clustering and
//! convex-hull sampling.
//!
//! Feature matrices, clusterings and all geometric kernels are generic over
//! [`Scalar`] (`f32` or `f64`). Entropy and metric arithmetic is always done
//! in `f64`.

pub mod config;
pub mod data;
pub mod entropy;
pub mod error;
pub mod io;
pub mod metrics;
pub mod numerics;
pub mod parallel;
pub mod pipeline;
pub mod rng;
pub mod scalar;
pub mod selection;
pub mod synth;

pub use config::Config;
pub use data::{n_samp, Cluster, ClusterSelection, Clustering, Features, SelectionResult};
pub use error::{Error, Result};
pub use pipeline::{cluster, IterationTrace};
pub use scalar::Scalar;
pub use selection::select;

pub type FeatureSet = Features<f64>;
pub type FeatureSet32 = Features<f32>;
pub type Clustering64 = Clustering<f64>;
pub type Clustering32 = Clustering<f32>;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
