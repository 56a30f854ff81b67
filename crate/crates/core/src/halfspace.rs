//! Visual angle geometry of the upper half-space: horocycle centers, the
//! closed-form metric, the boundary curve of `B_v(i, r)` and its Euclidean
//! sandwich balls.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::{angle_at_slice, Point};

/// Relative height difference below which `x_2 = y_2` is assumed.
const LEVEL_TOL: f64 = 1e-9;

/// Centers of the two horocycles through a pair of points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HorocyclePair {
    /// Center from the `+` sign of the root formula.
    pub z_plus: Point,
    /// Center from the `-` sign.
    pub z_minus: Point,
    /// Both points at the same height; the single center fills both slots.
    pub degenerate: bool,
}

/// Centers `z` with `|x-z| = z_2 = |y-z|` for planar `x, y` in the upper half-plane.
pub fn horocycle_centers(x: &Point, y: &Point) -> Result<HorocyclePair> {
    check_planar_upper(x)?;
    check_planar_upper(y)?;
    if x == y {
        return Err(Error::DegenerateInput(
            "horocycles through a single point".into(),
        ));
    }
    let (z1p, z1m, degenerate) = center_abscissae([x[0], x[1]], [y[0], y[1]]);
    let z = |z1: f64| Point::xy(z1, center_height([x[0], x[1]], z1));
    Ok(HorocyclePair {
        z_plus: z(z1p),
        z_minus: z(z1m),
        degenerate,
    })
}

fn check_planar_upper(p: &Point) -> Result<()> {
    p.check_dim(2)?;
    if p[1] > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(p.to_string()))
    }
}

/// `(z1+, z1-, degenerate)`. Solved after shifting `x_1` to zero, taking the root
/// without cancellation first and the other from the product of the roots.
fn center_abscissae(x: [f64; 2], y: [f64; 2]) -> (f64, f64, bool) {
    let (x2, y2) = (x[1], y[1]);
    if (x2 - y2).abs() < LEVEL_TOL * x2.max(y2) {
        let mid = 0.5 * (x[0] + y[0]);
        return (mid, mid, true);
    }
    let u = y[0] - x[0];
    let dist = u.hypot(y2 - x2);
    let sqrt_d = (x2 * y2).sqrt() * dist;
    // a z^2 - 2 b z + c = 0 in the shifted frame
    let a = y2 - x2;
    let b = -x2 * u;
    let c = x2 * y2 * (x2 - y2) - x2 * u * u;
    let (plus, minus) = if b >= 0.0 {
        let q = b + sqrt_d;
        (c / q, q / a)
    } else {
        let q = b - sqrt_d;
        (q / a, c / q)
    };
    (plus + x[0], minus + x[0], false)
}

/// Height of the circle through `x` tangent to the axis at `z_1`.
fn center_height(x: [f64; 2], z1: f64) -> f64 {
    let dx = x[0] - z1;
    (dx * dx + x[1] * x[1]) / (2.0 * x[1])
}

/// Visual angle metric of the upper half-plane.
///
/// The extremal boundary point is the tangency point `(z_1, 0)` of one of the
/// two horocycles through `x` and `y`; both are evaluated and the larger angle
/// is returned.
pub fn v_halfplane(x: &Point, y: &Point) -> Result<f64> {
    check_planar_upper(x)?;
    check_planar_upper(y)?;
    Ok(v_planar([x[0], x[1]], [y[0], y[1]]))
}

fn v_planar(x: [f64; 2], y: [f64; 2]) -> f64 {
    if x == y {
        return 0.0;
    }
    let (zp, zm, degenerate) = center_abscissae(x, y);
    let angle = |z1: f64| angle_at_slice(&x, &[z1, 0.0], &y).unwrap_or(0.0);
    let a = angle(zp);
    if degenerate {
        a
    } else {
        a.max(angle(zm))
    }
}

/// Visual angle metric of `H^n`, reduced to the half-plane by rotation about
/// the vertical line through `x`.
pub fn v_halfspace(x: &Point, y: &Point) -> Result<f64> {
    x.check_dim(y.dim())?;
    for p in [x, y] {
        if !(p.last() > 0.0) {
            return Err(Error::Domain(p.to_string()));
        }
    }
    Ok(v_halfspace_slices(x.coords(), y.coords()))
}

pub(crate) fn v_halfspace_slices(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    // lower point first so that swapping the arguments gives the same configuration
    let (x, y) = match (x[n - 1], x).partial_cmp(&(y[n - 1], y)) {
        Some(std::cmp::Ordering::Greater) => (y, x),
        _ => (x, y),
    };
    let h = if n == 2 {
        y[0] - x[0]
    } else {
        x[..n - 1]
            .iter()
            .zip(&y[..n - 1])
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    };
    v_planar([0.0, x[n - 1]], [h, y[n - 1]])
}

/// Boundary of `B_v(i, r)` in the upper half-plane, `i = (0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VBallCurve {
    pub r: f64,
    /// Lowest height on the curve.
    pub b1: f64,
    /// Highest height on the curve.
    pub b2: f64,
    /// Closed curve, counterclockwise from `(0, b1)`, first point not repeated.
    pub polyline: Vec<[f64; 2]>,
}

impl VBallCurve {
    /// `f_1`, the branch with `y_1 <= 0`.
    pub fn left_branch(&self, y2: f64) -> f64 {
        f1(y2, self.r)
    }

    /// `f_2`, the branch with `y_1 >= 0`.
    pub fn right_branch(&self, y2: f64) -> f64 {
        -f1(y2, self.r)
    }

    /// The curve for the ball centred at `x`, in the plane spanned by `e_1` and
    /// `e_n` through `x`.
    pub fn mapped(&self, x: &Point) -> Vec<Point> {
        let n = x.dim();
        let h = x.last();
        self.polyline
            .iter()
            .map(|&[p1, p2]| {
                let mut c = x.coords().to_vec();
                c[0] += h * p1;
                c[n - 1] = h * p2;
                Point::from_vec_unchecked(c)
            })
            .collect()
    }
}

fn f1(y2: f64, r: f64) -> f64 {
    (1.0 + y2 - 2.0 * y2.sqrt() / r.cos()) / r.tan()
}

fn check_acute(r: f64) -> Result<()> {
    if r > 0.0 && r < std::f64::consts::FRAC_PI_2 {
        Ok(())
    } else {
        Err(Error::Range(format!("radius {r} outside (0, π/2)")))
    }
}

/// Heights `(b1, b2)` where the two branches meet the vertical axis.
pub fn vball_heights(r: f64) -> Result<(f64, f64)> {
    check_acute(r)?;
    let sec2 = 1.0 / (r.cos() * r.cos());
    Ok((
        2.0 * (1.0 - r.sin()) * sec2 - 1.0,
        2.0 * (1.0 + r.sin()) * sec2 - 1.0,
    ))
}

/// Samples `∂B_v(i, r)` with `samples` points per branch, uniform in `sqrt(y_2)`.
pub fn vball_curve(r: f64, samples: usize) -> Result<VBallCurve> {
    let (b1, b2) = vball_heights(r)?;
    if samples < 8 {
        return Err(Error::Range(format!(
            "need at least 8 samples, got {samples}"
        )));
    }
    let (s1, s2) = (b1.sqrt(), b2.sqrt());
    let heights: Vec<f64> = (0..samples)
        .map(|k| {
            let s = s1 + (s2 - s1) * k as f64 / (samples - 1) as f64;
            s * s
        })
        .collect();
    let mut polyline = Vec::with_capacity(2 * samples - 2);
    // the branches vanish exactly at the endpoints
    polyline.push([0.0, b1]);
    polyline.extend(heights[1..samples - 1].iter().map(|&y2| [-f1(y2, r), y2]));
    polyline.push([0.0, b2]);
    polyline.extend(
        heights[1..samples - 1]
            .iter()
            .rev()
            .map(|&y2| [f1(y2, r), y2]),
    );
    Ok(VBallCurve {
        r,
        b1,
        b2,
        polyline,
    })
}

/// Euclidean ball.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EuclideanBall {
    pub center: Point,
    pub radius: f64,
}

impl EuclideanBall {
    /// Signed distance from `p` to the sphere, positive inside.
    pub fn margin(&self, p: &[f64]) -> f64 {
        self.radius - crate::geom::vec::dist(self.center.coords(), p)
    }
}

/// Euclidean balls squeezing `B_v(x, r)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sandwich {
    /// Largest ball inside, tangent at the top of the curve.
    pub inner1: EuclideanBall,
    /// Largest ball inside centred at `x`.
    pub inner2: EuclideanBall,
    /// Smallest ball containing the curve.
    pub outer1: EuclideanBall,
    /// Ball centred at `x` containing the curve.
    pub outer2: EuclideanBall,
}

/// Inner and outer Euclidean balls for `B_v(x, r)` in `H^n`.
pub fn vball_sandwich(x: &Point, r: f64) -> Result<Sandwich> {
    check_acute(r)?;
    let xn = x.last();
    if !(xn > 0.0) {
        return Err(Error::Domain(x.to_string()));
    }
    let en = Point::basis(x.dim(), x.dim() - 1);
    let (t, c) = (r.tan(), r.cos());
    let sec2 = 1.0 / (c * c);
    let ball = |shift: f64, radius: f64| EuclideanBall {
        center: x.offset(&en, shift * xn),
        radius: radius * xn,
    };
    Ok(Sandwich {
        inner1: ball(sec2 - 1.0, t),
        inner2: ball(0.0, r.sin()),
        outer1: ball(2.0 * t * t, 2.0 * t / c),
        outer2: ball(0.0, 2.0 * (t / c + t * t)),
    })
}

/// One-sided slopes `dy_1/dy_2` of the curve at its lowest and highest points,
/// and the slopes of the two chord lines from those points to `(g_2(1, r), 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KinkSlopes {
    pub slope_f1_at_b1: f64,
    pub slope_f2_at_b1: f64,
    pub slope_f2_at_b2: f64,
    pub slope_l1: f64,
    pub slope_l2: f64,
}

pub fn kink_and_tangents(r: f64) -> Result<KinkSlopes> {
    vball_heights(r)?;
    // cot(r)(sec r / sqrt(2sec²r ∓ 2 tan r sec r - 1) - 1), and the chord slopes
    // 2 tan r / (1 - b), all reduced to forms free of cancellation near π/2
    let (sin, cos) = r.sin_cos();
    let at_b1 = (1.0 + sin) / cos;
    let at_b2 = -cos / (1.0 + sin);
    Ok(KinkSlopes {
        slope_f1_at_b1: -at_b1,
        slope_f2_at_b1: at_b1,
        slope_f2_at_b2: at_b2,
        slope_l1: at_b1,
        slope_l2: at_b2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Domain, Window};
    use crate::metrics::sup_oracle;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6, SQRT_2};

    fn focus_ok(x: &Point, y: &Point, z: &Point) -> bool {
        let z2 = z[1];
        let rel = |a: f64| (a - z2).abs() <= 1e-9 * z2.max(1.0);
        z2 > 0.0 && rel(x.dist(z)) && rel(y.dist(z))
    }

    #[test]
    fn level_pair_has_single_center() {
        let (x, y) = (Point::xy(0.0, 1.0), Point::xy(2.0, 1.0));
        let h = horocycle_centers(&x, &y).unwrap();
        assert!(h.degenerate);
        assert_eq!(h.z_plus, Point::xy(1.0, 1.0));
        assert_eq!(h.z_plus, h.z_minus);
        assert!(focus_ok(&x, &y, &h.z_plus));
    }

    #[test]
    fn vertical_pair_centers() {
        let (x, y) = (Point::xy(0.0, 1.0), Point::xy(0.0, 2.0));
        let h = horocycle_centers(&x, &y).unwrap();
        assert!(!h.degenerate);
        assert!((h.z_plus[0] + SQRT_2).abs() < 1e-15);
        assert!((h.z_minus[0] - SQRT_2).abs() < 1e-15);
        assert!(focus_ok(&x, &y, &h.z_plus) && focus_ok(&x, &y, &h.z_minus));
    }

    #[test]
    fn near_level_pair_uses_midpoint() {
        let h = horocycle_centers(&Point::xy(0.0, 1.0), &Point::xy(0.0, 1.0 + 1e-12)).unwrap();
        assert!(h.degenerate);
        assert!(h.z_plus[0].is_finite() && h.z_plus[1].is_finite());
    }

    #[test]
    fn center_errors() {
        let x = Point::xy(0.0, 1.0);
        assert!(matches!(
            horocycle_centers(&x, &x),
            Err(Error::DegenerateInput(_))
        ));
        assert!(matches!(
            horocycle_centers(&x, &Point::xy(1.0, 0.0)),
            Err(Error::Domain(_))
        ));
        assert!(v_halfplane(&x, &Point::xy(1.0, -1.0)).is_err());
    }

    #[test]
    fn literal_root_formulas_agree() {
        // plain quadratic formula and the stated center height, sign for sign
        let cases = [
            ([0.3, 0.7], [-1.1, 2.4]),
            ([2.0, 5.0], [1.5, 0.2]),
            ([-4.0, 1.0], [3.0, 3.0 + 1e-3]),
        ];
        for (x, y) in cases {
            let (px, py) = (Point::xy(x[0], x[1]), Point::xy(y[0], y[1]));
            let h = horocycle_centers(&px, &py).unwrap();
            let d = px.dist(&py);
            let s = (x[1] * y[1]).sqrt() * d;
            let num = x[1] * y[0] - x[0] * y[1];
            let z1p = (num + s) / (x[1] - y[1]);
            let z1m = (num - s) / (x[1] - y[1]);
            let dy2 = (x[1] - y[1]) * (x[1] - y[1]);
            let cross = 2.0 * (x[0] - y[0]) * (x[1] * y[1]).sqrt();
            let z2_upper = d / (2.0 * dy2) * (d * (x[1] + y[1]) - cross);
            let z2_lower = d / (2.0 * dy2) * (d * (x[1] + y[1]) + cross);
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-7 * b.abs().max(1.0);
            assert!(close(h.z_plus[0], z1p) && close(h.z_minus[0], z1m));
            assert!(
                close(h.z_plus[1], z2_upper),
                "{} vs {z2_upper}",
                h.z_plus[1]
            );
            assert!(close(h.z_minus[1], z2_lower));
        }
    }

    #[test]
    fn v_halfplane_examples() {
        let v = v_halfplane(&Point::xy(0.0, 1.0), &Point::xy(2.0, 1.0)).unwrap();
        assert!((v - FRAC_PI_2).abs() < 1e-15);
        let v = v_halfplane(&Point::xy(0.0, 1.0), &Point::xy(0.0, 2.0)).unwrap();
        assert!((v - (SQRT_2 / 4.0).atan()).abs() < 1e-15);
        let p = Point::xy(5.0, 3.0);
        assert_eq!(v_halfplane(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn v_halfplane_matches_arctan_form_mod_pi() {
        let pairs = [
            ([0.0, 1.0], [0.0, 2.0]),
            ([0.3, 0.7], [-1.1, 2.4]),
            ([1.0, 1.0], [4.0, 0.5]),
        ];
        for (x, y) in pairs {
            let v = v_planar(x, y);
            let d = (x[0] - y[0]).hypot(x[1] - y[1]);
            let dx = x[0] - y[0];
            let den = dx * dx - 4.0 * x[1] * y[1];
            let hit = [1.0, -1.0].iter().any(|sign| {
                let lit = std::f64::consts::PI
                    - ((2.0 * (x[1] * y[1]).sqrt() * d + sign * (x[1] + y[1]) * dx) / den).atan();
                let diff = (lit - v).rem_euclid(std::f64::consts::PI);
                diff < 1e-12 || std::f64::consts::PI - diff < 1e-12
            });
            assert!(hit, "{x:?} {y:?}");
        }
    }

    #[test]
    fn v_halfspace_examples() {
        let p = |c: &[f64]| Point::new(c.to_vec()).unwrap();
        let v = v_halfspace(&p(&[0.0, 0.0, 1.0]), &p(&[2.0, 0.0, 1.0])).unwrap();
        assert!((v - FRAC_PI_2).abs() < 1e-15);
        let v = v_halfspace(&p(&[1.0, 1.0, 1.0]), &p(&[1.0, 1.0, 2.0])).unwrap();
        assert!((v - (SQRT_2 / 4.0).atan()).abs() < 1e-15);
        assert_eq!(
            v_halfspace(&p(&[1.0, 1.0, 1.0]), &p(&[1.0, 1.0, 1.0])).unwrap(),
            0.0
        );
    }

    #[test]
    fn v_halfplane_agrees_with_oracle() {
        let h = Domain::half_space(2).unwrap();
        let (x, y): ([f64; 2], [f64; 2]) = ([0.4, 0.05], [-2.0, 3.0]);
        let w = Window::symmetric(20.0 * (x[0].hypot(x[1]) + y[0].hypot(y[1]) + 1.0)).unwrap();
        let res = sup_oracle(
            &h,
            |z| angle_at_slice(&x, z, &y).unwrap_or(0.0),
            1e-10,
            Some(&w),
        )
        .unwrap();
        assert!((res.value - v_planar(x, y)).abs() < 1e-7);
    }

    #[test]
    fn curve_heights() {
        let c = vball_curve(FRAC_PI_3, 64).unwrap();
        assert!((c.b1 - (7.0 - 4.0 * 3f64.sqrt())).abs() < 1e-12);
        assert!((c.b2 - (7.0 + 4.0 * 3f64.sqrt())).abs() < 1e-12);
        for r in [0.1, 0.7, 1.5] {
            let c = vball_curve(r, 16).unwrap();
            assert!(c.left_branch(c.b1).abs() < 1e-12 && c.right_branch(c.b2).abs() < 1e-12);
            assert!(0.0 < c.b1 && c.b1 < 1.0 && 1.0 < c.b2);
            // (1 - sin r)/(1 + sin r) and its reciprocal
            assert!((c.b1 - (1.0 - r.sin()) / (1.0 + r.sin())).abs() < 1e-12);
            assert!((c.b2 * c.b1 - 1.0).abs() < 1e-9);
        }
        assert!(vball_curve(FRAC_PI_2, 16).is_err());
        assert!(vball_curve(0.0, 16).is_err());
        assert!(vball_curve(0.5, 4).is_err());
    }

    #[test]
    fn curve_points_lie_on_sphere_of_metric() {
        let c = vball_curve(FRAC_PI_4, 1000).unwrap();
        let y1 = c.right_branch(1.0);
        assert!((y1 - (2.0 * SQRT_2 - 2.0)).abs() < 1e-12);
        let i = Point::xy(0.0, 1.0);
        assert!((v_halfplane(&i, &Point::xy(y1, 1.0)).unwrap() - FRAC_PI_4).abs() < 1e-8);
        for &[p1, p2] in &c.polyline {
            assert!((v_planar([0.0, 1.0], [p1, p2]) - FRAC_PI_4).abs() < 1e-8);
        }
    }

    #[test]
    fn sandwich_examples() {
        let i = Point::xy(0.0, 1.0);
        let s = vball_sandwich(&i, FRAC_PI_6).unwrap();
        assert!((s.inner2.radius - 0.5).abs() < 1e-15);
        let s = vball_sandwich(&i, FRAC_PI_4).unwrap();
        assert!((s.outer1.center[1] - 3.0).abs() < 1e-12);
        assert!((s.outer1.radius - 2.0 * SQRT_2).abs() < 1e-12);
        assert!((s.inner1.center[1] - 2.0).abs() < 1e-12 && (s.inner1.radius - 1.0).abs() < 1e-12);
        assert!(vball_sandwich(&i, FRAC_PI_2).is_err());
    }

    #[test]
    fn kink_slopes() {
        for r in [0.05, FRAC_PI_4, 1.2, 1.5] {
            let k = kink_and_tangents(r).unwrap();
            assert_eq!(k.slope_f1_at_b1, -k.slope_f2_at_b1);
            let (sec, tan) = (1.0 / r.cos(), r.tan());
            let m1 = tan / (-sec * sec + tan * sec + 1.0);
            let m2 = -tan / (sec * sec + tan * sec - 1.0);
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-10 * b.abs().max(1.0);
            assert!(
                close(k.slope_l1, m1) && close(k.slope_f2_at_b1, m1),
                "r={r}"
            );
            assert!(
                close(k.slope_l2, m2) && close(k.slope_f2_at_b2, m2),
                "r={r}"
            );
        }
    }

    #[test]
    fn kink_slope_matches_finite_difference() {
        for r in [0.02, 0.3, 1.0] {
            let c = vball_curve(r, 16).unwrap();
            let h = 1e-7 * c.b1;
            let fd = (c.right_branch(c.b1 + h) - c.right_branch(c.b1)) / h;
            let k = kink_and_tangents(r).unwrap();
            assert!(
                (fd - k.slope_f2_at_b1).abs() <= 1e-4 * k.slope_f2_at_b1.abs(),
                "r={r}"
            );
        }
    }
}
