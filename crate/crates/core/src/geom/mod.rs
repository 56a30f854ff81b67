//! Domains, boundary access, distances and angles.

mod domain;
mod point;

pub use domain::{angle_at, Domain, Polygon, Window};
pub use point::Point;

pub(crate) use domain::{angle_at_slice, point_segment_dist, TAIL_STEPS};
pub(crate) use point::vec;
