//! Numerical kernels shared by the pipeline: k-means, exact KNN, PCA and
//! convex hulls with their measure.
//!
//! Matrices are passed as row-major slices together with their column count.

pub mod eigen;
pub mod hull;
pub mod kmeans;
pub mod knn;
pub mod pca;

pub use hull::{convex_hull, hull_measure, HullResult};
pub use kmeans::{kmeans, KMeansResult};
pub use knn::{knn, nearest};
pub use pca::{pca_fit_transform, PcaModel};
