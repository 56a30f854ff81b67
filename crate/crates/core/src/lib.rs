//! Hyperbolic-type metrics on planar and spatial domains: evaluation, ball
//! tracing, inclusion checks and the half-space visual angle toolkit.

// `!(x > 0.0)` deliberately rejects NaN along with nonpositive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod balls;
pub mod cli;
pub mod error;
pub mod geom;
pub mod halfspace;
pub mod inclusions;
pub mod metrics;
pub mod render;

pub use error::{Error, Result};
pub use geom::{angle_at, Domain, Point, Polygon, Window};
pub use metrics::{evaluate, sup_oracle, Extended, MetricKind, SupResult};
