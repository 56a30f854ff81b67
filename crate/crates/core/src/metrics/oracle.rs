//! Numerical supremum of a function over the boundary of a domain.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::geom::{Domain, Point, Window, TAIL_STEPS};

/// Coarse samples per boundary curve in the first round.
pub const ORACLE_BASE_SAMPLES: usize = 512;

const MAX_ROUNDS: usize = 8;
const TOP_K: usize = 4;
const ZOOM_POINTS: usize = 17;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Outcome of [`sup_oracle`].
#[derive(Debug, Clone, PartialEq)]
pub struct SupResult {
    pub value: f64,
    pub argpoint: Point,
    /// Number of coarse sampling rounds performed.
    pub refinements: usize,
    /// Improvement of the last round over the previous one.
    pub residual: f64,
}

/// Supremum of `objective` over `∂G`.
///
/// Finite boundaries are searched exhaustively in any dimension. Planar
/// boundaries (half-plane, unit circle, polygon) are sampled, the best local
/// maxima bracketed and refined by zooming and golden-section search, and the
/// sample density doubled until the refined value improves by less than `tol`.
/// The half-plane boundary is sampled over `window` plus geometric tails.
pub fn sup_oracle<F>(
    domain: &Domain,
    objective: F,
    tol: f64,
    window: Option<&Window>,
) -> Result<SupResult>
where
    F: Fn(&[f64]) -> f64,
{
    sup_oracle_with(domain, objective, tol, window, &OracleOpts::default())
}

/// Tuning for [`sup_oracle_with`].
#[derive(Debug, Clone)]
pub(crate) struct OracleOpts {
    pub base: usize,
    /// Points `p` with a length scale `h`: each curve is additionally sampled at
    /// offsets `±h·2^k` from the point nearest to `p`, so features of width
    /// comparable to `h` are resolved regardless of the coarse density.
    pub seeds: Vec<([f64; 2], f64)>,
}

impl Default for OracleOpts {
    fn default() -> Self {
        OracleOpts {
            base: ORACLE_BASE_SAMPLES,
            seeds: Vec::new(),
        }
    }
}

pub(crate) fn sup_oracle_with<F>(
    domain: &Domain,
    objective: F,
    tol: f64,
    window: Option<&Window>,
    opts: &OracleOpts,
) -> Result<SupResult>
where
    F: Fn(&[f64]) -> f64,
{
    if !(tol > 0.0) {
        return Err(Error::Range(format!("tolerance {tol} must be positive")));
    }
    let f = |p: &[f64]| {
        let v = objective(p);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let curves =
        match domain {
            Domain::PuncturedSpace { obstacles } => return Ok(exhaustive(obstacles, f)),
            Domain::HalfSpace { dim: 2 } => {
                let w = window.ok_or(Error::MissingWindow)?;
                vec![Curve::Line(*w)]
            }
            Domain::UnitBall { dim: 2 } => vec![Curve::Circle],
            Domain::Polygon(poly) => poly
                .edges()
                .map(|(a, b)| {
                    let len = (b[0] - a[0]).hypot(b[1] - a[1]);
                    Curve::Segment {
                        start: a,
                        dir: [(b[0] - a[0]) / len, (b[1] - a[1]) / len],
                        len,
                    }
                })
                .collect(),
            _ => return Err(Error::Unsupported(
                "continuous boundaries are searched in the plane; reduce to a planar section first"
                    .into(),
            )),
        };
    let total_len: f64 = curves.iter().map(Curve::length_hint).sum();

    let mut best = Best::default();
    let mut prev = f64::NEG_INFINITY;
    let mut residual = f64::INFINITY;
    let mut rounds = 0;
    for round in 0..MAX_ROUNDS {
        rounds = round + 1;
        let n = opts.base.max(8) << round;
        let mut brackets: Vec<Bracket> = Vec::new();
        for (ci, c) in curves.iter().enumerate() {
            let share = ((n as f64) * c.length_hint() / total_len).ceil() as usize;
            let mut params = c.params(share.max(8));
            for &(p, h) in &opts.seeds {
                c.seed_params(p, h, &mut params);
            }
            params.sort_by(f64::total_cmp);
            params.dedup();
            let vals: Vec<f64> = params.iter().map(|&t| f(&c.at(t))).collect();
            collect_brackets(ci, c, &params, &vals, &mut brackets, &mut best);
        }
        brackets.sort_by(|a, b| b.value.total_cmp(&a.value));
        brackets.truncate(TOP_K);
        for br in &brackets {
            refine(&curves[br.curve], br.curve, br.lo, br.hi, &f, &mut best);
        }
        if round > 0 {
            residual = (best.value - prev).max(0.0);
            if residual < tol {
                break;
            }
        }
        prev = best.value;
    }
    let p = curves[best.curve].at(best.t);
    Ok(SupResult {
        value: best.value,
        argpoint: Point::xy(p[0], p[1]),
        refinements: rounds,
        residual,
    })
}

fn exhaustive<F: Fn(&[f64]) -> f64>(points: &[Point], f: F) -> SupResult {
    let mut value = f64::NEG_INFINITY;
    let mut arg = &points[0];
    for p in points {
        let v = f(p.coords());
        if v > value {
            value = v;
            arg = p;
        }
    }
    SupResult {
        value,
        argpoint: arg.clone(),
        refinements: 0,
        residual: 0.0,
    }
}

#[derive(Debug, Clone, Copy)]
enum Curve {
    /// Arclength parameter in `[0, len]`.
    Segment {
        start: [f64; 2],
        dir: [f64; 2],
        len: f64,
    },
    /// Angle parameter, period `2π`.
    Circle,
    /// The first axis, parameter `x_1`.
    Line(Window),
}

impl Curve {
    fn at(&self, t: f64) -> [f64; 2] {
        match *self {
            Curve::Segment { start, dir, .. } => [start[0] + t * dir[0], start[1] + t * dir[1]],
            Curve::Circle => [t.cos(), t.sin()],
            Curve::Line(_) => [t, 0.0],
        }
    }

    fn length_hint(&self) -> f64 {
        match *self {
            Curve::Segment { len, .. } => len,
            Curve::Circle => TAU,
            Curve::Line(w) => w.width(),
        }
    }

    fn params(&self, n: usize) -> Vec<f64> {
        match *self {
            Curve::Segment { len, .. } => (0..n).map(|i| len * i as f64 / (n - 1) as f64).collect(),
            Curve::Circle => (0..n).map(|i| TAU * i as f64 / n as f64).collect(),
            Curve::Line(w) => {
                let mut out: Vec<f64> = (0..n)
                    .map(|i| w.lo + w.width() * i as f64 / (n - 1) as f64)
                    .collect();
                for k in 0..TAIL_STEPS {
                    let off = w.width() * 2f64.powi(k);
                    out.push(w.lo - off);
                    out.push(w.hi + off);
                }
                out
            }
        }
    }

    fn seed_params(&self, p: [f64; 2], h: f64, out: &mut Vec<f64>) {
        if !(h > 0.0 && h.is_finite()) {
            return;
        }
        let t0 = match *self {
            Curve::Segment { start, dir, len } => {
                ((p[0] - start[0]) * dir[0] + (p[1] - start[1]) * dir[1]).clamp(0.0, len)
            }
            Curve::Circle => p[1].atan2(p[0]).rem_euclid(TAU),
            Curve::Line(_) => p[0],
        };
        out.push(t0);
        for k in -6..12 {
            let off = h * 2f64.powi(k);
            for t in [t0 - off, t0 + off] {
                match *self {
                    Curve::Segment { len, .. } if !(0.0..=len).contains(&t) => {}
                    Curve::Circle => out.push(t.rem_euclid(TAU)),
                    _ => out.push(t),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Bracket {
    curve: usize,
    lo: f64,
    hi: f64,
    value: f64,
}

#[derive(Debug, Clone, Copy)]
struct Best {
    value: f64,
    curve: usize,
    t: f64,
}

impl Default for Best {
    fn default() -> Self {
        Best {
            value: f64::NEG_INFINITY,
            curve: 0,
            t: 0.0,
        }
    }
}

impl Best {
    fn offer(&mut self, value: f64, curve: usize, t: f64) {
        if value > self.value {
            *self = Best { value, curve, t };
        }
    }
}

fn collect_brackets(
    ci: usize,
    c: &Curve,
    params: &[f64],
    vals: &[f64],
    out: &mut Vec<Bracket>,
    best: &mut Best,
) {
    let n = params.len();
    let periodic = matches!(c, Curve::Circle);
    for i in 0..n {
        best.offer(vals[i], ci, params[i]);
        let (left, lo) = match i {
            0 if periodic => (vals[n - 1], params[n - 1] - TAU),
            0 => (f64::NEG_INFINITY, params[0]),
            _ => (vals[i - 1], params[i - 1]),
        };
        let (right, hi) = match i {
            _ if i + 1 < n => (vals[i + 1], params[i + 1]),
            _ if periodic => (vals[0], params[0] + TAU),
            _ => (f64::NEG_INFINITY, params[i]),
        };
        if vals[i] >= left && vals[i] >= right && vals[i] > f64::NEG_INFINITY {
            out.push(Bracket {
                curve: ci,
                lo,
                hi,
                value: vals[i],
            });
        }
    }
}

/// Zooms into `[lo, hi]` towards the best sample, then finishes with golden sections.
fn refine<F: Fn(&[f64]) -> f64>(c: &Curve, ci: usize, lo: f64, hi: f64, f: &F, best: &mut Best) {
    let g = |t: f64| f(&c.at(t));
    let (mut a, mut b) = (lo, hi);
    let w0 = b - a;
    if !(w0 > 0.0) {
        return;
    }
    let mut grid = [0.0; ZOOM_POINTS];
    for _ in 0..8 {
        if b - a <= w0 * 1e-4 {
            break;
        }
        let mut j = 0;
        let mut vj = f64::NEG_INFINITY;
        for (k, slot) in grid.iter_mut().enumerate() {
            *slot = a + (b - a) * k as f64 / (ZOOM_POINTS - 1) as f64;
            let v = g(*slot);
            best.offer(v, ci, *slot);
            if v > vj {
                vj = v;
                j = k;
            }
        }
        a = grid[j.saturating_sub(1)];
        b = grid[(j + 1).min(ZOOM_POINTS - 1)];
    }
    let (t, v) = golden_max(g, a, b);
    best.offer(v, ci, t);
}

/// Golden-section search for a maximum of `f` on `[a, b]`, run to float
/// resolution. Returns the better of the two final interior points.
pub(crate) fn golden_max<G: Fn(f64) -> f64>(f: G, mut a: f64, mut b: f64) -> (f64, f64) {
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        let scale = a.abs().max(b.abs()).max(1.0);
        if b - a <= 4.0 * f64::EPSILON * scale {
            break;
        }
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::angle_at_slice;

    #[test]
    fn half_plane_angle_peak() {
        let h = Domain::half_space(2).unwrap();
        let w = Window::symmetric(20.0).unwrap();
        let res = sup_oracle(
            &h,
            |z| angle_at_slice(&[0.0, 1.0], z, &[0.0, 2.0]).unwrap_or(0.0),
            1e-12,
            Some(&w),
        )
        .unwrap();
        let expect = (2f64.sqrt() / 4.0).atan();
        assert!((res.value - expect).abs() < 1e-12, "{}", res.value);
        assert!((res.argpoint[0].abs() - 2f64.sqrt()).abs() < 1e-6);
        assert!(res.argpoint[1] == 0.0);
        assert!(res.residual < 1e-12);
    }

    #[test]
    fn missing_window_and_high_dimension() {
        let h = Domain::half_space(2).unwrap();
        assert_eq!(
            sup_oracle(&h, |_| 0.0, 1e-9, None),
            Err(Error::MissingWindow)
        );
        let b = Domain::unit_ball(3).unwrap();
        assert!(matches!(
            sup_oracle(&b, |_| 0.0, 1e-9, None),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn circle_wraps_around_zero_angle() {
        let b = Domain::unit_ball(2).unwrap();
        // peak at angle 0, which sits on the seam of the periodic parameter
        let res = sup_oracle(&b, |z| -((z[0] - 1.0).powi(2) + z[1] * z[1]), 1e-14, None).unwrap();
        assert!(res.value > -1e-15);
        assert!((res.argpoint[0] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn narrow_peak_found_with_seed() {
        let b = Domain::unit_ball(2).unwrap();
        let peak = [0.6f64.cos(), 0.6f64.sin()];
        let width = 1e-6;
        let f = |z: &[f64]| {
            let d = (z[0] - peak[0]).hypot(z[1] - peak[1]);
            (-(d / width).powi(2)).exp()
        };
        let opts = OracleOpts {
            seeds: vec![([peak[0] * 0.999, peak[1] * 0.999], width)],
            ..OracleOpts::default()
        };
        let res = sup_oracle_with(&b, f, 1e-12, None, &opts).unwrap();
        assert!((res.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn polygon_edges_are_all_visited() {
        let g = Domain::polygon(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        let res = sup_oracle(
            &g,
            |z| -(z[0] - 0.3).abs() - (z[1] - 1.0).abs(),
            1e-13,
            None,
        )
        .unwrap();
        assert!(res.value > -1e-12);
        assert!((res.argpoint[0] - 0.3).abs() < 1e-9);
    }
}
