//! Procedural thermal-block benchmark for parametric model order reduction.
//!
//! The pipeline is [`geometry`] → [`mesher`] → [`fem`] → [`model`], with
//! [`simulate`] and [`freq`] evaluating the resulting affine-parametric LTI
//! system
//!
//! ```text
//! E x'(t) = (A_0 + sum_i mu_i A_i) x(t) + B u(t),    y(t) = C x(t)
//! ```
//!
//! and [`io`] / [`validate`] handling export, import and consistency checks.

pub mod error;
pub mod fem;
pub mod freq;
pub mod geometry;
pub mod io;
pub mod mesh;
pub mod ldl;
pub mod mesher;
pub mod model;
pub mod pipeline;
pub mod simulate;
pub mod sparse;
pub mod validate;

pub use error::{Error, Result};
pub use geometry::{default_spec, emit_geo_text, grid_spec, BoundaryTag, Disk, GeometrySpec};
pub use mesh::{Mesh, MeshStatistics};
pub use mesher::generate_mesh;
pub use model::{AffineLtiModel, ParameterPoint, ParameterVariant, RawParameter};
pub use pipeline::{build, Benchmark};
