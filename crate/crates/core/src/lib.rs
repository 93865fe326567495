//! Nested barycentric coordinate systems.
//!
//! A hierarchy of nested simplices gives every point of the root simplex a
//! sparse embedding: the barycentric coordinates of the point in its lowest
//! containing simplex, placed at the global indices of that simplex's
//! vertices. A linear classifier on this embedding is a piecewise-linear
//! classifier in the original space, and the same machinery approximates
//! convex polygons from outside with provable containment.
//!
//! Modules:
//! - [`geometry`]: simplices, barycentric solves, polygon clipping.
//! - [`system`]: the nested system, embeddings, weight lifting.
//! - [`svm`]: sparse linear SVM trained by stochastic subgradient descent.
//! - [`learner`]: uniform and adaptive classifiers, cross-validation, data generation.
//! - [`bounds`]: generalization bound evaluators.
//! - [`approx`]: outer approximation of convex polygons.
//! - [`io`], [`model`], [`svg`]: file formats.

pub mod approx;
pub mod bounds;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod io;
pub mod learner;
pub mod model;
pub mod svg;
pub mod svm;
pub mod system;

pub use error::{NbcsError, Result};
pub use geometry::{regular_simplex, Polygon2D, Simplex};
pub use system::{NestedSystem, NodeId, SparseEmbedding, WeightVector};
