//! Convex hull deviation of traced balls.

use serde::Serialize;

use super::{trace_ball, BallTrace};
use crate::error::{Error, Result};
use crate::geom::{point_segment_dist, Domain, Point};
use crate::metrics::MetricKind;

/// Default convexity tolerance, relative to the trace diameter.
pub const DEFAULT_CONVEXITY_TOL: f64 = 1e-6;

/// Outcome of [`convexity_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityReport {
    pub convex: bool,
    /// Largest distance from a trace vertex to the boundary of the convex hull.
    pub max_deviation: f64,
    /// Absolute tolerance used, `rel_tol` times the trace diameter.
    pub tol: f64,
    /// Vertex realizing `max_deviation`.
    pub witness: Point,
    /// Every segment from the center to a trace vertex lies inside the traced polygon.
    pub starlike: bool,
    /// Vertex index and segment fraction leaving the polygon.
    pub starlike_witness: Option<(usize, f64)>,
}

/// Certifies convexity of a bounded trace by its deviation from its convex hull.
pub fn convexity_check(trace: &BallTrace, rel_tol: f64) -> Result<ConvexityReport> {
    if !trace.is_bounded() {
        return Err(Error::UnboundedBall(trace.truncated_rays.len()));
    }
    let pts = trace.planar();
    let hull = convex_hull(&pts);
    let diameter = diameter(&hull);
    let (idx, dev) = max_hull_deviation(&pts, &hull);
    let tol = rel_tol * diameter;
    let o = Point::origin(trace.center.dim());
    let c = trace.plane.project(&o, &trace.center);
    let star = polyline_starlike(c, &pts, 16);
    Ok(ConvexityReport {
        convex: dev <= tol,
        max_deviation: dev,
        tol,
        witness: trace.polyline[idx].clone(),
        starlike: star.is_none(),
        starlike_witness: star,
    })
}

/// Convex hull by Andrew's monotone chain, counterclockwise, collinear points dropped.
pub fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut p = points.to_vec();
    p.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * p.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 {
            Box::new(p.iter())
        } else {
            Box::new(p.iter().rev())
        };
        for &q in iter {
            while hull.len() >= start + 2
                && cross(hull[hull.len() - 2], hull[hull.len() - 1], q) <= 0.0
            {
                hull.pop();
            }
            hull.push(q);
        }
        hull.pop();
    }
    hull
}

fn diameter(hull: &[[f64; 2]]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, a) in hull.iter().enumerate() {
        for b in &hull[i + 1..] {
            d = d.max((a[0] - b[0]).hypot(a[1] - b[1]));
        }
    }
    d
}

fn max_hull_deviation(points: &[[f64; 2]], hull: &[[f64; 2]]) -> (usize, f64) {
    let n = hull.len();
    let mut best = (0, 0.0);
    if n < 2 {
        return best;
    }
    for (i, &p) in points.iter().enumerate() {
        let d = (0..n)
            .map(|k| point_segment_dist(p, hull[k], hull[(k + 1) % n]))
            .fold(f64::INFINITY, f64::min);
        if d > best.1 {
            best = (i, d);
        }
    }
    best
}

/// Geometric starlikeness of a closed polyline with respect to `center`: the
/// points `center + s (p - center)`, `s = k/steps`, must lie inside the polygon
/// for every vertex `p`. Returns the first violating vertex and fraction.
pub fn polyline_starlike(
    center: [f64; 2],
    polyline: &[[f64; 2]],
    steps: usize,
) -> Option<(usize, f64)> {
    for (i, p) in polyline.iter().enumerate() {
        for k in 1..steps {
            let s = k as f64 / steps as f64;
            let q = [
                center[0] + s * (p[0] - center[0]),
                center[1] + s * (p[1] - center[1]),
            ];
            if !inside(polyline, q) {
                return Some((i, s));
            }
        }
    }
    None
}

fn inside(poly: &[[f64; 2]], p: [f64; 2]) -> bool {
    let n = poly.len();
    let mut odd = false;
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if x > p[0] {
                odd = !odd;
            }
        }
    }
    odd
}

/// Convexity verdicts over a radius grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdScan {
    /// `(radius, convex, max_deviation / tol)` per grid radius.
    pub verdicts: Vec<(f64, bool, f64)>,
    /// Largest grid radius with a convex trace.
    pub last_convex: Option<f64>,
    /// Smallest grid radius with a nonconvex trace.
    pub first_nonconvex: Option<f64>,
}

impl ThresholdScan {
    pub fn width(&self) -> Option<f64> {
        Some(self.first_nonconvex? - self.last_convex?)
    }

    pub fn contains(&self, r: f64) -> bool {
        matches!((self.last_convex, self.first_nonconvex), (Some(a), Some(b)) if a <= r && r <= b)
    }
}

/// Brackets the largest radius for which the ball is convex.
pub fn convexity_threshold_scan(
    domain: &Domain,
    metric: MetricKind,
    center: &Point,
    r_grid: &[f64],
    rays: usize,
    tol: f64,
) -> Result<ThresholdScan> {
    if r_grid.is_empty() || r_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Range(
            "radius grid must be nonempty and strictly increasing".into(),
        ));
    }
    let mut verdicts = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        let trace = trace_ball(domain, metric, center, r, rays, tol)?;
        let rep = convexity_check(&trace, DEFAULT_CONVEXITY_TOL)?;
        verdicts.push((r, rep.convex, rep.max_deviation / rep.tol));
    }
    let last_convex = verdicts
        .iter()
        .filter(|v| v.1)
        .map(|v| v.0)
        .fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.max(r))));
    let first_nonconvex = verdicts.iter().find(|v| !v.1).map(|v| v.0);
    Ok(ThresholdScan {
        verdicts,
        last_convex,
        first_nonconvex,
    })
}
