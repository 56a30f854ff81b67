//! Metric and point-pair function evaluators.
//!
//! Closed forms are used where they exist; the planar unit ball and polygons fall
//! back to [`sup_oracle`], which also serves as the independent cross-check for
//! every closed form.

mod oracle;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{angle_at_slice, vec, Domain, Point};
use crate::halfspace;

pub(crate) use oracle::{golden_max, sup_oracle_with, OracleOpts};
pub use oracle::{sup_oracle, SupResult, ORACLE_BASE_SAMPLES};

/// Selects an evaluator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    /// Triangular ratio metric.
    S,
    /// Distance ratio metric.
    J,
    /// Quasihyperbolic metric (punctured space with one obstacle only).
    K,
    /// Point pair function.
    P,
    /// Chordal metric; ignores the domain.
    Q,
    /// Visual angle metric.
    V,
    Euclidean,
}

impl MetricKind {
    pub const ALL: [MetricKind; 7] = [
        MetricKind::S,
        MetricKind::J,
        MetricKind::K,
        MetricKind::P,
        MetricKind::Q,
        MetricKind::V,
        MetricKind::Euclidean,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::S => "s",
            MetricKind::J => "j",
            MetricKind::K => "k",
            MetricKind::P => "p",
            MetricKind::Q => "q",
            MetricKind::V => "v",
            MetricKind::Euclidean => "euclidean",
        }
    }

    /// Supremum of the metric's values; radii above it give the whole domain.
    pub fn max_value(self) -> f64 {
        match self {
            MetricKind::S | MetricKind::P | MetricKind::Q => 1.0,
            MetricKind::V => std::f64::consts::PI,
            _ => f64::INFINITY,
        }
    }

    /// Checks a ball radius against the valid range for this metric.
    pub fn check_radius(self, radius: f64) -> Result<()> {
        let ok = radius > 0.0 && radius.is_finite() && radius <= self.max_value();
        if ok {
            Ok(())
        } else {
            Err(Error::Range(format!(
                "radius {radius} outside (0, {}] for metric {self}",
                self.max_value()
            )))
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "s" => MetricKind::S,
            "j" => MetricKind::J,
            "k" => MetricKind::K,
            "p" => MetricKind::P,
            "q" => MetricKind::Q,
            "v" => MetricKind::V,
            "e" | "euclid" | "euclidean" => MetricKind::Euclidean,
            other => return Err(Error::InvalidDomain(format!("unknown metric {other:?}"))),
        })
    }
}

/// A point of `R^n ∪ {∞}`, the argument type of the chordal metric.
#[derive(Debug, Clone, PartialEq)]
pub enum Extended {
    Finite(Point),
    Infinity,
}

/// Evaluates `m_G(x, y)` for any metric kind.
pub fn evaluate(kind: MetricKind, domain: &Domain, x: &Point, y: &Point) -> Result<f64> {
    match kind {
        MetricKind::Q => {
            x.check_dim(y.dim())?;
            Ok(q_slices(x.coords(), y.coords()))
        }
        _ => {
            domain.check(x)?;
            domain.check(y)?;
            eval_unchecked(kind, domain, x.coords(), y.coords())
        }
    }
}

/// Evaluation without membership checks; both points must lie in `domain`.
pub(crate) fn eval_unchecked(
    kind: MetricKind,
    domain: &Domain,
    x: &[f64],
    y: &[f64],
) -> Result<f64> {
    Ok(match kind {
        MetricKind::S => s_unchecked(domain, x, y)?,
        MetricKind::J => j_unchecked(domain, x, y),
        MetricKind::K => {
            let a = single_obstacle(domain)?;
            let xs: Vec<f64> = x.iter().zip(a).map(|(p, o)| p - o).collect();
            let ys: Vec<f64> = y.iter().zip(a).map(|(p, o)| p - o).collect();
            k_slices(&xs, &ys)
        }
        MetricKind::P => p_unchecked(domain, x, y),
        MetricKind::Q => q_slices(x, y),
        MetricKind::V => v_unchecked(domain, x, y)?,
        MetricKind::Euclidean => vec::dist(x, y),
    })
}

fn single_obstacle(domain: &Domain) -> Result<&[f64]> {
    match domain.obstacles() {
        [only] => Ok(only.coords()),
        _ => Err(Error::UnsupportedMetric(MetricKind::K)),
    }
}

/// Triangular ratio metric `sup_z |x-y| / (|x-z| + |z-y|)` over `z ∈ ∂G`.
pub fn s_metric(domain: &Domain, x: &Point, y: &Point) -> Result<f64> {
    evaluate(MetricKind::S, domain, x, y)
}

fn s_unchecked(domain: &Domain, x: &[f64], y: &[f64]) -> Result<f64> {
    let d = vec::dist(x, y);
    if d == 0.0 {
        return Ok(0.0);
    }
    let value = match domain {
        Domain::PuncturedSpace { obstacles } => obstacles
            .iter()
            .map(|z| d / (vec::dist(x, z.coords()) + vec::dist(z.coords(), y)))
            .fold(0.0, f64::max),
        Domain::HalfSpace { .. } => {
            // min over the boundary hyperplane of |x-z|+|z-y| is |x - y*|, y* the mirror image
            let n = x.len();
            let mut sum = 0.0;
            for i in 0..n - 1 {
                sum += (x[i] - y[i]) * (x[i] - y[i]);
            }
            sum += (x[n - 1] + y[n - 1]) * (x[n - 1] + y[n - 1]);
            d / sum.sqrt()
        }
        Domain::Polygon(poly) => {
            let (a, b) = canonical(x, y);
            let foci = ([a[0], a[1]], [b[0], b[1]]);
            let best = poly
                .edges()
                .map(|(p, q)| min_focal_sum_on_segment(foci.0, foci.1, p, q))
                .fold(f64::INFINITY, f64::min);
            d / best
        }
        Domain::UnitBall { .. } => {
            let (a, b) = planar_section(x, y);
            let circle = Domain::UnitBall { dim: 2 };
            planar_sup(&circle, &a, &b, |z| {
                d / (vec::dist(&a, z) + vec::dist(z, &b))
            })?
        }
    };
    Ok(value.min(1.0))
}

/// Minimum of `|x-z| + |z-y|` over `z` on the segment `[p, q]`.
///
/// The sum is convex along the segment's line; its minimizer on the line is where
/// the line meets `[x, y']`, with `y'` the mirror image of `y` when both foci lie on
/// the same side. Clamping that parameter to the segment gives the exact minimum.
fn min_focal_sum_on_segment(x: [f64; 2], y: [f64; 2], p: [f64; 2], q: [f64; 2]) -> f64 {
    let dir = [q[0] - p[0], q[1] - p[1]];
    let len = dir[0].hypot(dir[1]);
    let (ux, uy) = (dir[0] / len, dir[1] / len);
    // along-line coordinate and signed offset of each focus
    let ax = (x[0] - p[0]) * ux + (x[1] - p[1]) * uy;
    let hx = (x[0] - p[0]) * -uy + (x[1] - p[1]) * ux;
    let ay = (y[0] - p[0]) * ux + (y[1] - p[1]) * uy;
    let hy = (y[0] - p[0]) * -uy + (y[1] - p[1]) * ux;
    let (wx, wy) = (hx.abs(), hy.abs());
    let along = if wx + wy == 0.0 {
        ax
    } else {
        ax + (ay - ax) * wx / (wx + wy)
    };
    let t = along.clamp(0.0, len);
    let z = [p[0] + t * ux, p[1] + t * uy];
    (x[0] - z[0]).hypot(x[1] - z[1]) + (y[0] - z[0]).hypot(y[1] - z[1])
}

/// Distance ratio metric `log(1 + |x-y| / min(d(x), d(y)))`.
pub fn j_metric(domain: &Domain, x: &Point, y: &Point) -> Result<f64> {
    evaluate(MetricKind::J, domain, x, y)
}

fn j_unchecked(domain: &Domain, x: &[f64], y: &[f64]) -> f64 {
    let d = vec::dist(x, y);
    if d == 0.0 {
        return 0.0;
    }
    let m = domain
        .dist_to_boundary_slice(x)
        .min(domain.dist_to_boundary_slice(y));
    (d / m).ln_1p()
}

/// Quasihyperbolic distance in `R^n \ {0}`: `sqrt(φ² + log²(|x|/|y|))`, `φ = ∠(x, 0, y)`.
///
/// Extended to `φ = 0` by continuity. At `φ = π` the formula value is returned;
/// see [`k_is_antipodal`].
pub fn k_punctured(x: &Point, y: &Point) -> Result<f64> {
    x.check_dim(y.dim())?;
    for p in [x, y] {
        if p.norm() == 0.0 {
            return Err(Error::Domain(p.to_string()));
        }
    }
    Ok(k_slices(x.coords(), y.coords()))
}

fn k_slices(x: &[f64], y: &[f64]) -> f64 {
    if vec::same(x, y) {
        return 0.0;
    }
    let origin = vec![0.0; x.len()];
    let phi = angle_at_slice(x, &origin, y).unwrap_or(0.0);
    let log_ratio = vec::norm(x).ln() - vec::norm(y).ln();
    phi.hypot(log_ratio)
}

/// True when `x` and `y` lie on opposite rays through the origin, where the
/// punctured-space closed form is used outside its stated range `0 < φ < π`.
pub fn k_is_antipodal(x: &Point, y: &Point) -> bool {
    let origin = Point::origin(x.dim());
    matches!(crate::geom::angle_at(x, &origin, y), Ok(a) if a == std::f64::consts::PI)
}

/// Point pair function `|x-y| / sqrt(|x-y|² + 4 d(x) d(y))`.
pub fn p_function(domain: &Domain, x: &Point, y: &Point) -> Result<f64> {
    evaluate(MetricKind::P, domain, x, y)
}

fn p_unchecked(domain: &Domain, x: &[f64], y: &[f64]) -> f64 {
    let d = vec::dist(x, y);
    if d == 0.0 {
        return 0.0;
    }
    let dx = domain.dist_to_boundary_slice(x);
    let dy = domain.dist_to_boundary_slice(y);
    d / (d * d + 4.0 * dx * dy).sqrt()
}

/// Chordal metric on `R^n ∪ {∞}`.
pub fn q_chordal(x: &Extended, y: &Extended) -> Result<f64> {
    Ok(match (x, y) {
        (Extended::Infinity, Extended::Infinity) => 0.0,
        (Extended::Finite(p), Extended::Infinity) | (Extended::Infinity, Extended::Finite(p)) => {
            1.0 / (1.0 + p.dot(p)).sqrt()
        }
        (Extended::Finite(a), Extended::Finite(b)) => {
            a.check_dim(b.dim())?;
            q_slices(a.coords(), b.coords())
        }
    })
}

fn q_slices(x: &[f64], y: &[f64]) -> f64 {
    vec::dist(x, y) / ((1.0 + vec::dot(x, x)).sqrt() * (1.0 + vec::dot(y, y)).sqrt())
}

/// Visual angle metric `sup_z ∠(x, z, y)` over `z ∈ ∂G`.
pub fn v_metric(domain: &Domain, x: &Point, y: &Point) -> Result<f64> {
    evaluate(MetricKind::V, domain, x, y)
}

fn v_unchecked(domain: &Domain, x: &[f64], y: &[f64]) -> Result<f64> {
    if vec::same(x, y) {
        return Ok(0.0);
    }
    match domain {
        Domain::PuncturedSpace { obstacles } => Ok(obstacles
            .iter()
            .map(|z| angle_at_slice(x, z.coords(), y).unwrap_or(0.0))
            .fold(0.0, f64::max)),
        Domain::HalfSpace { .. } => Ok(halfspace::v_halfspace_slices(x, y)),
        Domain::UnitBall { dim } => {
            let (a, b) = if *dim == 2 {
                let (a, b) = canonical(x, y);
                (a.to_vec(), b.to_vec())
            } else {
                planar_section(x, y)
            };
            let circle = Domain::UnitBall { dim: 2 };
            planar_sup(&circle, &a, &b, |z| angle_or_zero(&a, z, &b))
        }
        Domain::Polygon(_) => {
            let (a, b) = canonical(x, y);
            planar_sup(domain, a, b, |z| angle_or_zero(a, z, b))
        }
    }
}

/// Boundary supremum for a planar pair, seeded at both points so that features
/// as narrow as their boundary distance are resolved.
fn planar_sup<F: Fn(&[f64]) -> f64>(domain: &Domain, a: &[f64], b: &[f64], f: F) -> Result<f64> {
    let opts = OracleOpts {
        base: 256,
        seeds: [a, b]
            .iter()
            .map(|p| ([p[0], p[1]], domain.dist_to_boundary_slice(p)))
            .collect(),
    };
    Ok(sup_oracle_with(domain, f, 1e-14, None, &opts)?.value)
}

fn angle_or_zero(x: &[f64], z: &[f64], y: &[f64]) -> f64 {
    angle_at_slice(x, z, y).unwrap_or(0.0)
}

/// Orders a pair lexicographically so pair evaluations are exactly symmetric.
fn canonical<'a>(x: &'a [f64], y: &'a [f64]) -> (&'a [f64], &'a [f64]) {
    match x.partial_cmp(y) {
        Some(std::cmp::Ordering::Greater) => (y, x),
        _ => (x, y),
    }
}

/// Isometric image of `(x, y)` in the plane spanned by the origin, `x` and `y`.
///
/// For a ball centred at the origin both the focal-sum minimum and the visual
/// angle maximum over the sphere are attained in this plane.
pub(crate) fn planar_section(x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (x, y) = canonical(x, y);
    let n = x.len();
    let (u, w) = plane_basis(x, y, n);
    (
        vec![vec::dot(x, &u), vec::dot(x, &w)],
        vec![vec::dot(y, &u), vec::dot(y, &w)],
    )
}

fn plane_basis(x: &[f64], y: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut cands: Vec<Vec<f64>> = vec![x.to_vec(), y.to_vec()];
    cands.extend((0..n).map(|k| {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        e
    }));
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(2);
    for c in cands {
        let mut v = c;
        for b in &basis {
            let proj = vec::dot(&v, b);
            v.iter_mut().zip(b).for_each(|(vi, bi)| *vi -= proj * bi);
        }
        let norm = vec::norm(&v);
        if norm > 1e-12 {
            basis.push(v.into_iter().map(|vi| vi / norm).collect());
            if basis.len() == 2 {
                break;
            }
        }
    }
    let w = basis.pop().expect("plane basis");
    let u = basis.pop().expect("plane basis");
    (u, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, FRAC_PI_2, PI, SQRT_2};

    fn e1() -> Point {
        Point::xy(1.0, 0.0)
    }
    fn e2() -> Point {
        Point::xy(0.0, 1.0)
    }

    #[test]
    fn s_examples() {
        let g = Domain::punctured_origin(2);
        assert_eq!(s_metric(&g, &e1(), &Point::xy(-1.0, 0.0)).unwrap(), 1.0);
        assert_eq!(s_metric(&g, &e1(), &e1()).unwrap(), 0.0);
        let v = s_metric(&g, &e1(), &e2()).unwrap();
        assert!((v - SQRT_2 / 2.0).abs() < 1e-15);
        // exhaustive sup over the single obstacle
        let res = sup_oracle(
            &g,
            |z| SQRT_2 / (vec::dist(&[1.0, 0.0], z) + vec::dist(z, &[0.0, 1.0])),
            1e-12,
            None,
        )
        .unwrap();
        assert!((res.value - v).abs() < 1e-15);
        assert_eq!(res.argpoint, Point::origin(2));
    }

    #[test]
    fn j_examples() {
        let g = Domain::punctured_origin(2);
        assert_eq!(j_metric(&g, &e1(), &e1()).unwrap(), 0.0);
        let v = j_metric(&g, &e1(), &Point::xy(2.0, 0.0)).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-15);
        let h = Domain::half_space(2).unwrap();
        let v = j_metric(&h, &Point::xy(0.0, 1.0), &Point::xy(0.0, 3.0)).unwrap();
        assert!((v - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn k_examples() {
        let v = k_punctured(&e1(), &Point::xy(E, 0.0)).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        let v = k_punctured(&e1(), &e2()).unwrap();
        assert!((v - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(k_punctured(&e1(), &e1()).unwrap(), 0.0);
        assert!(k_punctured(&Point::origin(2), &e1()).is_err());
        assert!(k_is_antipodal(&e1(), &Point::xy(-2.0, 0.0)));
        assert!(!k_is_antipodal(&e1(), &e2()));
        // k on a punctured space with a shifted obstacle is translation invariant
        let g = Domain::punctured(vec![Point::xy(3.0, -1.0)]).unwrap();
        let v = evaluate(
            MetricKind::K,
            &g,
            &Point::xy(4.0, -1.0),
            &Point::xy(3.0, 0.0),
        )
        .unwrap();
        assert!((v - FRAC_PI_2).abs() < 1e-15);
        let two = Domain::punctured(vec![Point::origin(2), Point::xy(2.0, 0.0)]).unwrap();
        assert_eq!(
            evaluate(MetricKind::K, &two, &e1(), &e2()),
            Err(Error::UnsupportedMetric(MetricKind::K))
        );
    }

    #[test]
    fn p_examples() {
        let g = Domain::punctured_origin(2);
        assert_eq!(p_function(&g, &e1(), &e1()).unwrap(), 0.0);
        let v = p_function(&g, &e1(), &Point::xy(-1.0, 0.0)).unwrap();
        assert!((v - 1.0 / SQRT_2).abs() < 1e-15);
        let v = p_function(&g, &e1(), &e2()).unwrap();
        assert!((v - 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn q_examples() {
        let o = Extended::Finite(Point::origin(2));
        assert_eq!(q_chordal(&o, &Extended::Infinity).unwrap(), 1.0);
        assert_eq!(
            q_chordal(&Extended::Infinity, &Extended::Infinity).unwrap(),
            0.0
        );
        let v = q_chordal(&Extended::Finite(e1()), &Extended::Finite(e2())).unwrap();
        assert!((v - SQRT_2 / 2.0).abs() < 1e-15);
        let a = Extended::Finite(Point::xy(0.3, -2.0));
        assert_eq!(q_chordal(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn v_examples() {
        let g = Domain::punctured_origin(2);
        assert_eq!(v_metric(&g, &e1(), &e2()).unwrap(), FRAC_PI_2);
        assert_eq!(v_metric(&g, &e1(), &e1()).unwrap(), 0.0);
        let h = Domain::half_space(2).unwrap();
        let v = v_metric(&h, &Point::xy(0.0, 1.0), &Point::xy(2.0, 1.0)).unwrap();
        assert!((v - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn s_half_space_matches_oracle() {
        let h = Domain::half_space(2).unwrap();
        let (x, y) = (Point::xy(0.3, 0.7), Point::xy(-1.2, 2.5));
        let d = x.dist(&y);
        let closed = s_metric(&h, &x, &y).unwrap();
        let w = crate::geom::Window::symmetric(40.0).unwrap();
        let res = sup_oracle(
            &h,
            |z| d / (vec::dist(x.coords(), z) + vec::dist(z, y.coords())),
            1e-12,
            Some(&w),
        )
        .unwrap();
        assert!(
            (closed - res.value).abs() < 1e-10,
            "{closed} vs {}",
            res.value
        );
    }

    #[test]
    fn polygon_s_matches_dense_sampling() {
        let g = Domain::polygon(vec![
            [0.0, 0.0],
            [3.0, 0.0],
            [3.0, 1.0],
            [1.0, 1.0],
            [1.0, 3.0],
            [0.0, 3.0],
        ])
        .unwrap();
        let (x, y) = (Point::xy(2.5, 0.5), Point::xy(0.5, 2.5));
        let closed = s_metric(&g, &x, &y).unwrap();
        let d = x.dist(&y);
        let brute = g
            .boundary_sample(200_000, None)
            .unwrap()
            .iter()
            .map(|z| d / (z.dist(&x) + z.dist(&y)))
            .fold(0.0, f64::max);
        assert!(closed >= brute - 1e-12);
        assert!((closed - brute).abs() < 1e-6, "{closed} vs {brute}");
    }

    #[test]
    fn unit_ball_v_and_s_reduce_to_planar_section() {
        let b3 = Domain::unit_ball(3).unwrap();
        let b2 = Domain::unit_ball(2).unwrap();
        let x = Point::new(vec![0.2, 0.1, -0.3]).unwrap();
        let y = Point::new(vec![-0.4, 0.5, 0.1]).unwrap();
        let (a, b) = planar_section(x.coords(), y.coords());
        let (a, b) = (Point::new(a).unwrap(), Point::new(b).unwrap());
        assert!((a.norm() - x.norm()).abs() < 1e-15 || (a.norm() - y.norm()).abs() < 1e-15);
        assert!((a.dist(&b) - x.dist(&y)).abs() < 1e-14);
        let v3 = v_metric(&b3, &x, &y).unwrap();
        let v2 = v_metric(&b2, &a, &b).unwrap();
        assert!((v3 - v2).abs() < 1e-12);
        // brute force over the sphere in R^3
        let sample = b3.boundary_sample(200_000, None).unwrap();
        let brute = sample
            .iter()
            .map(|z| crate::geom::angle_at(&x, z, &y).unwrap())
            .fold(0.0, f64::max);
        assert!(v3 >= brute - 1e-12 && v3 - brute < 1e-2, "{v3} vs {brute}");
        let s3 = s_metric(&b3, &x, &y).unwrap();
        let d = x.dist(&y);
        let brute_s = sample
            .iter()
            .map(|z| d / (z.dist(&x) + z.dist(&y)))
            .fold(0.0, f64::max);
        assert!(s3 >= brute_s - 1e-12 && s3 - brute_s < 1e-2);
        assert!(v3 <= PI);
    }

    #[test]
    fn metric_names_parse() {
        for k in MetricKind::ALL {
            assert_eq!(k.name().parse::<MetricKind>().unwrap(), k);
        }
        assert!("w".parse::<MetricKind>().is_err());
        assert!(MetricKind::S.check_radius(1.0).is_ok());
        assert!(MetricKind::S.check_radius(1.5).is_err());
        assert!(MetricKind::V.check_radius(PI).is_ok());
        assert!(MetricKind::J.check_radius(0.0).is_err());
    }
}
