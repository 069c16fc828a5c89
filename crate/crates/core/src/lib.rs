//! Discrete optimal transport between measures on boundaries of convex
//! bodies with the cost `c(x, y) = |x - y|^2 / 2`, plus numeric checkers for
//! the quantitative estimates that govern when optimal plans are maps.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod io;
pub mod measures;
pub mod theory;
pub mod transport;

/// Points and vectors; planar bodies use `z = 0`.
pub type Vec3 = nalgebra::Vector3<f64>;

pub use error::{Error, Result};
pub use geometry::{cost, ConvexBody, ShapeSpec, SurfacePoint, TangentChart};
pub use measures::{DensitySpec, DiscreteMeasure, SurfaceSampling};
pub use theory::VerificationReport;
pub use transport::{DualPair, TransportPlan, TransportResult};
