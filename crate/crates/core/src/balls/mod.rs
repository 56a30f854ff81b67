//! Metric balls traced by ray solves from the center, with starlikeness and
//! convexity certification of the traces.

mod hull;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::{vec, Domain, Point};
use crate::metrics::{eval_unchecked, MetricKind};

pub use hull::{
    convex_hull, convexity_check, convexity_threshold_scan, polyline_starlike, ConvexityReport,
    ThresholdScan, DEFAULT_CONVEXITY_TOL,
};

/// Samples of the first-crossing pre-scan for metrics without ray monotonicity.
const PRESCAN: usize = 64;

/// Oriented plane through the center, spanned by two orthonormal vectors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Plane {
    pub u: Point,
    pub w: Point,
}

impl Plane {
    /// The plane of the first and last coordinate axes, which is the vertical
    /// plane for half-spaces and the standard plane in `R^2`.
    pub fn standard(dim: usize) -> Self {
        Plane {
            u: Point::basis(dim, 0),
            w: Point::basis(dim, dim - 1),
        }
    }

    /// Random plane from a seeded generator.
    pub fn random(dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            let a: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let na = vec::norm(&a);
            if na < 1e-3 {
                continue;
            }
            let u: Vec<f64> = a.iter().map(|v| v / na).collect();
            let proj = vec::dot(&b, &u);
            let w: Vec<f64> = b.iter().zip(&u).map(|(bi, ui)| bi - proj * ui).collect();
            let nw = vec::norm(&w);
            if nw < 1e-3 {
                continue;
            }
            return Plane {
                u: Point::from_vec_unchecked(u),
                w: Point::from_vec_unchecked(w.iter().map(|v| v / nw).collect()),
            };
        }
    }

    pub(crate) fn direction(&self, theta: f64) -> Vec<f64> {
        let (s, c) = theta.sin_cos();
        self.u
            .coords()
            .iter()
            .zip(self.w.coords())
            .map(|(a, b)| c * a + s * b)
            .collect()
    }

    /// Plane coordinates of `p` relative to `origin`.
    pub fn project(&self, origin: &Point, p: &Point) -> [f64; 2] {
        let d: Vec<f64> = p
            .coords()
            .iter()
            .zip(origin.coords())
            .map(|(a, b)| a - b)
            .collect();
        [vec::dot(&d, self.u.coords()), vec::dot(&d, self.w.coords())]
    }
}

/// Sampled boundary of `B_m(center, radius)` in a plane through the center.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallTrace {
    pub domain: Domain,
    pub metric: MetricKind,
    pub center: Point,
    pub radius: f64,
    pub rays: usize,
    pub plane: Plane,
    /// One point per ray, in ray order; truncated rays hold the point at the escape bound.
    pub polyline: Vec<Point>,
    /// Ray parameter of each point.
    pub ts: Vec<f64>,
    /// `|m(center, p) - radius|` at each point.
    pub residuals: Vec<f64>,
    pub truncated_rays: Vec<usize>,
}

impl BallTrace {
    /// Ray direction `k` as an angle in the trace plane.
    pub fn angle(&self, k: usize) -> f64 {
        std::f64::consts::TAU * k as f64 / self.rays as f64
    }

    pub fn is_bounded(&self) -> bool {
        self.truncated_rays.is_empty()
    }

    /// Polyline in plane coordinates, translated back so the center sits at its
    /// own plane coordinates.
    pub fn planar(&self) -> Vec<[f64; 2]> {
        let o = Point::origin(self.center.dim());
        let c = self.plane.project(&o, &self.center);
        self.polyline
            .iter()
            .map(|p| {
                let q = self.plane.project(&self.center, p);
                [c[0] + q[0], c[1] + q[1]]
            })
            .collect()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Escape bound for ray brackets.
pub fn escape_bound(domain: &Domain, center: &Point) -> f64 {
    1e6 * (1.0 + center.norm() + domain.dist_to_boundary_slice(center.coords()))
}

/// Traces `∂B_m(center, radius)` along `rays` equally spaced directions in the
/// standard plane.
pub fn trace_ball(
    domain: &Domain,
    metric: MetricKind,
    center: &Point,
    radius: f64,
    rays: usize,
    tol: f64,
) -> Result<BallTrace> {
    trace_ball_in_plane(
        domain,
        metric,
        center,
        radius,
        rays,
        tol,
        Plane::standard(center.dim()),
    )
}

pub fn trace_ball_in_plane(
    domain: &Domain,
    metric: MetricKind,
    center: &Point,
    radius: f64,
    rays: usize,
    tol: f64,
    plane: Plane,
) -> Result<BallTrace> {
    let solver = RaySolver::new(domain, metric, center, radius, tol)?;
    if rays < 16 {
        return Err(Error::Range(format!("need at least 16 rays, got {rays}")));
    }
    plane.u.check_dim(center.dim())?;
    let solved: Vec<RayResult> = (0..rays)
        .into_par_iter()
        .map(|k| {
            let dir = plane.direction(std::f64::consts::TAU * k as f64 / rays as f64);
            solver.solve(&dir)
        })
        .collect();
    let mut trace = BallTrace {
        domain: domain.clone(),
        metric,
        center: center.clone(),
        radius,
        rays,
        plane,
        polyline: Vec::with_capacity(rays),
        ts: Vec::with_capacity(rays),
        residuals: Vec::with_capacity(rays),
        truncated_rays: Vec::new(),
    };
    for (k, r) in solved.into_iter().enumerate() {
        if r.truncated {
            trace.truncated_rays.push(k);
        }
        trace.polyline.push(Point::from_vec_unchecked(r.point));
        trace.ts.push(r.t);
        trace.residuals.push(r.residual);
    }
    Ok(trace)
}

pub(crate) struct RayResult {
    pub t: f64,
    pub point: Vec<f64>,
    pub residual: f64,
    pub truncated: bool,
}

/// Evaluates `m(center, center + t dir)` and locates the first crossing of the radius.
pub(crate) struct RaySolver<'a> {
    domain: &'a Domain,
    metric: MetricKind,
    center: &'a Point,
    radius: f64,
    tol: f64,
    t0: f64,
    t_max: f64,
}

impl<'a> RaySolver<'a> {
    pub(crate) fn new(
        domain: &'a Domain,
        metric: MetricKind,
        center: &'a Point,
        radius: f64,
        tol: f64,
    ) -> Result<Self> {
        domain.check(center)?;
        metric.check_radius(radius)?;
        if !(tol > 0.0) {
            return Err(Error::Range(format!("tolerance {tol} must be positive")));
        }
        // surfaces metric/domain incompatibilities before the parallel loop
        eval_unchecked(metric, domain, center.coords(), center.coords())?;
        let d = domain.dist_to_boundary_slice(center.coords());
        Ok(RaySolver {
            domain,
            metric,
            center,
            radius,
            tol,
            t0: d * 2f64.powi(-10),
            t_max: escape_bound(domain, center),
        })
    }

    fn at(&self, dir: &[f64], t: f64) -> Vec<f64> {
        self.center
            .coords()
            .iter()
            .zip(dir)
            .map(|(c, d)| c + t * d)
            .collect()
    }

    /// `m(center, center + t dir)`, infinite outside the domain.
    pub(crate) fn value(&self, dir: &[f64], t: f64) -> f64 {
        let p = self.at(dir, t);
        if !self.domain.contains_slice(&p) {
            return f64::INFINITY;
        }
        eval_unchecked(self.metric, self.domain, self.center.coords(), &p).unwrap_or(f64::INFINITY)
    }

    pub(crate) fn solve(&self, dir: &[f64]) -> RayResult {
        let g = |t: f64| self.value(dir, t) - self.radius;
        // geometric expansion to the first sample at or beyond the radius
        let (mut lo, mut hi) = (0.0, self.t0);
        let mut g_hi = g(hi);
        while g_hi < 0.0 {
            if hi >= self.t_max {
                return RayResult {
                    t: hi,
                    point: self.at(dir, hi),
                    residual: g_hi.abs(),
                    truncated: true,
                };
            }
            lo = hi;
            hi = (2.0 * hi).min(self.t_max);
            g_hi = g(hi);
        }
        if self.metric != MetricKind::S {
            // bumps below the expansion resolution are caught by a uniform pre-scan
            for k in 1..PRESCAN {
                let t = hi * k as f64 / PRESCAN as f64;
                if t <= lo {
                    continue;
                }
                let gt = g(t);
                if gt >= 0.0 {
                    hi = t;
                    g_hi = gt;
                    break;
                }
                lo = t;
            }
        }
        let g_lo = if lo == 0.0 { -self.radius } else { g(lo) };
        let (t, gt) = find_crossing(&g, lo, hi, g_lo, g_hi, self.tol);
        RayResult {
            t,
            point: self.at(dir, t),
            residual: gt.abs(),
            truncated: false,
        }
    }
}

/// Root of `g` in `[a, b]` with `g(a) < 0 <= g(b)`, where `g(b)` may be infinite.
///
/// Bisects until both ends are finite, then runs Brent's method until
/// `|g| <= ftol` or the bracket reaches float resolution. Returns the point with
/// the smaller `|g|` among the final candidates.
fn find_crossing<G: Fn(f64) -> f64>(
    g: &G,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
    ftol: f64,
) -> (f64, f64) {
    let tiny =
        |a: f64, b: f64| (b - a).abs() <= 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(1e-300);
    while !fb.is_finite() {
        if tiny(a, b) {
            return (a, fa);
        }
        let m = 0.5 * (a + b);
        let fm = g(m);
        if fm >= 0.0 {
            b = m;
            fb = fm;
        } else {
            a = m;
            fa = fm;
        }
    }
    // Brent's method on the finite bracket
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.abs() > fc.abs() {
            // b keeps the best estimate, c the opposite end of the bracket
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let eps = 2.0 * f64::EPSILON * b.abs() + 1e-300;
        let m = 0.5 * (c - b);
        if fb.abs() <= ftol || m.abs() <= eps {
            break;
        }
        if e.abs() >= eps && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (eps * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > eps { d } else { eps.copysign(m) };
        fb = g(b);
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            e = b - a;
            d = e;
        }
    }
    if fb.abs() <= fc.abs() {
        (b, fb)
    } else {
        (c, fc)
    }
}

/// Outcome of [`starlike_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StarlikeReport {
    pub starlike: bool,
    pub witness: Option<StarlikeWitness>,
    /// Rays skipped because the trace is truncated there.
    pub skipped_rays: usize,
}

/// A ray and two parameters `t1 < t2` violating monotonicity (s-balls), or a
/// ray and a segment parameter outside the ball (`t2` is the trace point's).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StarlikeWitness {
    pub ray: usize,
    pub t1: f64,
    pub t2: f64,
}

/// Checks that the ball is starlike with respect to its center.
///
/// For the s-metric the values along each ray up to the crossing must be
/// nondecreasing within `tol`. For other metrics every segment from the center
/// to a trace point must stay inside the ball at `steps` interior samples.
pub fn starlike_check(trace: &BallTrace, steps: usize, tol: f64) -> Result<StarlikeReport> {
    let solver = RaySolver::new(
        &trace.domain,
        trace.metric,
        &trace.center,
        trace.radius,
        tol,
    )?;
    let steps = steps.max(2);
    let checked: Vec<usize> = (0..trace.rays)
        .filter(|k| !trace.truncated_rays.contains(k))
        .collect();
    let monotone = trace.metric == MetricKind::S;
    let violation = checked
        .par_iter()
        .map(|&k| {
            let dir = trace.plane.direction(trace.angle(k));
            let tb = trace.ts[k];
            let mut running = (0.0, 0.0);
            for i in 1..steps {
                let t = tb * i as f64 / steps as f64;
                let v = solver.value(&dir, t);
                if monotone {
                    if v < running.0 - tol {
                        return Some(StarlikeWitness {
                            ray: k,
                            t1: running.1,
                            t2: t,
                        });
                    }
                    if v > running.0 {
                        running = (v, t);
                    }
                } else if v > trace.radius + tol {
                    return Some(StarlikeWitness {
                        ray: k,
                        t1: t,
                        t2: tb,
                    });
                }
            }
            None
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .next();
    Ok(StarlikeReport {
        starlike: violation.is_none(),
        witness: violation,
        skipped_rays: trace.truncated_rays.len(),
    })
}

/// Convexity of random planar sections through the center of a ball in `R^n`.
#[allow(clippy::too_many_arguments)]
pub fn convexity_sections(
    domain: &Domain,
    metric: MetricKind,
    center: &Point,
    radius: f64,
    sections: usize,
    rays: usize,
    tol: f64,
    seed: u64,
) -> Result<Vec<ConvexityReport>> {
    (0..sections)
        .map(|k| {
            let plane = Plane::random(center.dim(), seed.wrapping_add(k as u64));
            let trace = trace_ball_in_plane(domain, metric, center, radius, rays, tol, plane)?;
            convexity_check(&trace, DEFAULT_CONVEXITY_TOL)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::evaluate;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn e1() -> Point {
        Point::xy(1.0, 0.0)
    }

    #[test]
    fn s_ball_crossings_on_the_axis() {
        let g = Domain::punctured_origin(2);
        let tr = trace_ball(&g, MetricKind::S, &e1(), 0.5, 16, 1e-13).unwrap();
        // ray 0 points away from the obstacle, ray 8 towards it
        assert!((tr.polyline[0][0] - 3.0).abs() < 1e-9, "{}", tr.polyline[0]);
        assert!(
            (tr.polyline[8][0] - 1.0 / 3.0).abs() < 1e-9,
            "{}",
            tr.polyline[8]
        );
        assert!(tr.is_bounded());
        for p in &tr.polyline {
            let v = evaluate(MetricKind::S, &g, &e1(), p).unwrap();
            assert!((v - 0.5).abs() <= 1e-12);
        }
    }

    #[test]
    fn v_ball_in_punctured_plane_is_a_sector() {
        let g = Domain::punctured_origin(2);
        let tr = trace_ball(&g, MetricKind::V, &e1(), FRAC_PI_4, 64, 1e-12).unwrap();
        assert!(!tr.is_bounded());
        for (k, p) in tr.polyline.iter().enumerate() {
            // the ray through the obstacle ends at the sector's vertex
            if tr.truncated_rays.contains(&k) || p.norm() < 1e-6 {
                continue;
            }
            // bounded rays end on the sector edges through the origin
            let ang = p[1].atan2(p[0]).abs();
            assert!((ang - FRAC_PI_4).abs() < 1e-9, "ray {k}: {p}");
        }
        assert!(tr.truncated_rays.contains(&0));
    }

    #[test]
    fn v_ball_in_half_plane_matches_curve() {
        let h = Domain::half_space(2).unwrap();
        let i = Point::xy(0.0, 1.0);
        let tr = trace_ball(&h, MetricKind::V, &i, FRAC_PI_4, 180, 1e-13).unwrap();
        assert!(tr.is_bounded());
        let c = crate::halfspace::vball_curve(FRAC_PI_4, 16).unwrap();
        for p in &tr.polyline {
            let f = if p[0] >= 0.0 {
                c.right_branch(p[1])
            } else {
                c.left_branch(p[1])
            };
            assert!((f - p[0]).abs() < 1e-6, "{p} vs {f}");
        }
    }

    #[test]
    fn unit_ball_trace_stays_inside() {
        let b = Domain::unit_ball(2).unwrap();
        let c = Point::xy(0.2, -0.1);
        let tr = trace_ball(&b, MetricKind::J, &c, 1.0, 32, 1e-12).unwrap();
        assert!(tr.polyline.iter().all(|p| b.contains(p)));
        assert!(tr.max_residual() < 1e-10);
    }

    #[test]
    fn trace_errors() {
        let g = Domain::punctured_origin(2);
        let o = Point::origin(2);
        assert!(matches!(
            trace_ball(&g, MetricKind::S, &o, 0.5, 16, 1e-9),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            trace_ball(&g, MetricKind::S, &e1(), 1.5, 16, 1e-9),
            Err(Error::Range(_))
        ));
        assert!(matches!(
            trace_ball(&g, MetricKind::V, &e1(), PI + 0.1, 16, 1e-9),
            Err(Error::Range(_))
        ));
        assert!(trace_ball(&g, MetricKind::S, &e1(), 0.5, 8, 1e-9).is_err());
    }

    #[test]
    fn brent_handles_infinite_upper_end() {
        let g = |t: f64| if t > 2.0 { f64::INFINITY } else { t - 1.5 };
        let (t, gt) = find_crossing(&g, 0.0, 4.0, -1.5, f64::INFINITY, 1e-14);
        assert!((t - 1.5).abs() < 1e-12 && gt.abs() < 1e-12);
        let steep = |t: f64| (t - 0.3).powi(3) * 1e6;
        let (t, _) = find_crossing(&steep, 0.0, 1.0, steep(0.0), steep(1.0), 1e-14);
        assert!((t - 0.3).abs() < 1e-6);
    }

    #[test]
    fn starlike_examples() {
        let g = Domain::punctured(vec![
            Point::origin(2),
            Point::xy(2.0, 0.0),
            Point::xy(0.0, 2.0),
        ])
        .unwrap();
        let c = Point::xy(0.75, 0.6);
        let tr = trace_ball(&g, MetricKind::S, &c, 0.6, 90, 1e-12).unwrap();
        assert!(starlike_check(&tr, 32, 1e-12).unwrap().starlike);
        let p0 = Domain::punctured_origin(2);
        let tr = trace_ball(&p0, MetricKind::J, &e1(), 0.8, 90, 1e-12).unwrap();
        assert!(starlike_check(&tr, 32, 1e-12).unwrap().starlike);
    }

    #[test]
    fn random_planes_are_orthonormal() {
        let p = Plane::random(4, 7);
        assert!((p.u.norm() - 1.0).abs() < 1e-12 && (p.w.norm() - 1.0).abs() < 1e-12);
        assert!(p.u.dot(&p.w).abs() < 1e-12);
        assert_eq!(p, Plane::random(4, 7));
    }
}
