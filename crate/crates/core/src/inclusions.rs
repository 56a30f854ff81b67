//! Sharp radii for metric balls inside visual angle balls of the punctured
//! space, and the harness that checks inclusion claims numerically.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::balls::{Plane, RaySolver};
use crate::error::{Error, Result};
use crate::geom::{vec, Domain, Point};
use crate::halfspace::{v_halfspace, vball_curve, vball_sandwich, EuclideanBall};
use crate::metrics::{eval_unchecked, evaluate, golden_max, MetricKind};

/// Relative radius of the cap around obstacles excluded from sampling.
pub const OBSTACLE_CAP: f64 = 1e-6;

/// Outcome of one inclusion check `B_inner ⊂ B_outer`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InclusionReport {
    pub label: String,
    pub inner: (MetricKind, f64),
    pub outer: (MetricKind, f64),
    pub holds: bool,
    /// Smallest sampled margin, in the units of the outer radius.
    pub min_margin: f64,
    pub worst_point: Point,
    /// Outer radius minus the refined supremum over the inner boundary.
    pub sharpness_gap: f64,
    /// Samples skipped inside the cap around the boundary.
    pub excluded: usize,
    pub note: String,
}

/// Largest `t` with `B_m(x, t) ⊂ B_v(x, r)` in `R^n \ {0}`.
pub fn best_radius(metric: MetricKind, norm_x: f64, r: f64) -> Result<f64> {
    if !(r > 0.0 && r <= PI) {
        return Err(Error::Range(format!("angle {r} outside (0, π]")));
    }
    if !(norm_x > 0.0 && norm_x.is_finite()) {
        return Err(Error::Range(format!("|x| = {norm_x} must be positive")));
    }
    let half = (r / 2.0).sin();
    Ok(match metric {
        MetricKind::S => half,
        MetricKind::J => (2.0 * half).ln_1p(),
        MetricKind::K => r,
        MetricKind::Euclidean if r <= FRAC_PI_2 => norm_x * r.sin(),
        MetricKind::Euclidean => norm_x,
        MetricKind::Q => {
            let n2 = norm_x * norm_x;
            (2.0 * norm_x * half / (1.0 + n2)).min(norm_x / (1.0 + n2).sqrt())
        }
        MetricKind::P => half / (half * half + 1.0).sqrt(),
        MetricKind::V => return Err(Error::UnsupportedMetric(MetricKind::V)),
    })
}

/// Samples `∂B_inner(x, t)` in the standard plane and evaluates the outer
/// metric on it.
///
/// Euclidean inner balls are sampled on the exact circle, all others by ray
/// solves. Truncated rays contribute their point at the escape bound. Samples
/// within `1e-6 · d(x)` of `∂G` are excluded. The sharpness gap refines the
/// worst sample by golden-section search over the ray angle.
pub fn verify_inclusion(
    domain: &Domain,
    inner: (MetricKind, f64),
    outer: (MetricKind, f64),
    x: &Point,
    samples: usize,
    tol: f64,
) -> Result<InclusionReport> {
    domain.check(x)?;
    outer.0.check_radius(outer.1)?;
    let label = format!("{} ball in {} ball", inner.0, outer.0);
    let cap = OBSTACLE_CAP * domain.dist_to_boundary_slice(x.coords());
    let note = format!("samples within {cap:.3e} of the boundary excluded");
    if inner.0 == MetricKind::Euclidean && inner.1 == 0.0 {
        let m = evaluate(outer.0, domain, x, x)?;
        return Ok(InclusionReport {
            label,
            inner,
            outer,
            holds: m < outer.1 + tol,
            min_margin: outer.1 - m,
            worst_point: x.clone(),
            sharpness_gap: outer.1 - m,
            excluded: 0,
            note: format!("{note}; degenerate inner ball, checked at its center only"),
        });
    }
    inner.0.check_radius(inner.1)?;
    if samples < 16 {
        return Err(Error::Range(format!(
            "need at least 16 samples, got {samples}"
        )));
    }
    // surfaces unsupported outer metrics before sampling
    eval_unchecked(outer.0, domain, x.coords(), x.coords())?;
    let plane = Plane::standard(x.dim());
    let solver = RaySolver::new(domain, inner.0, x, inner.1, tol.max(1e-15) * 1e-3)?;
    let boundary = |theta: f64| -> Vec<f64> {
        let dir = plane.direction(theta);
        if inner.0 == MetricKind::Euclidean {
            x.coords()
                .iter()
                .zip(&dir)
                .map(|(c, d)| c + inner.1 * d)
                .collect()
        } else {
            solver.solve(&dir).point
        }
    };
    let outer_value = |p: &[f64]| -> Option<f64> {
        if !domain.contains_slice(p) || domain.dist_to_boundary_slice(p) < cap {
            return None;
        }
        eval_unchecked(outer.0, domain, x.coords(), p).ok()
    };
    let sampled: Vec<(Vec<f64>, Option<f64>)> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let p = boundary(TAU * k as f64 / samples as f64);
            let v = outer_value(&p);
            (p, v)
        })
        .collect();
    let excluded = sampled.iter().filter(|s| s.1.is_none()).count();
    let Some((worst, sup)) = sampled
        .iter()
        .enumerate()
        .filter_map(|(k, s)| s.1.map(|v| (k, v)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
    else {
        return Err(Error::DegenerateInput(
            "every boundary sample was excluded".into(),
        ));
    };
    let step = TAU / samples as f64;
    let theta = worst as f64 * step;
    let (t_ref, v_ref) = golden_max(
        |th| outer_value(&boundary(th)).unwrap_or(f64::NEG_INFINITY),
        theta - step,
        theta + step,
    );
    let (mut worst_point, mut refined) = if v_ref > sup {
        (boundary(t_ref), v_ref)
    } else {
        (sampled[worst].0.clone(), sup)
    };
    let mut min_margin = outer.1 - sup;
    let mut note = note;
    if let (MetricKind::V, [a]) = (outer.0, domain.obstacles()) {
        // parts of the inner ball hidden behind the puncture are invisible to rays from x
        let sweep = polar_sweep(domain, inner, x, a.coords(), samples, cap)?;
        min_margin = min_margin.min(outer.1 - sweep.sampled);
        if sweep.refined > refined {
            refined = sweep.refined;
            worst_point = sweep.point;
        }
        note.push_str("; polar sweep from the puncture");
    }
    let sharpness_gap = outer.1 - refined;
    Ok(InclusionReport {
        label,
        inner,
        outer,
        holds: min_margin.min(sharpness_gap) >= -tol,
        min_margin,
        worst_point: Point::from_vec_unchecked(worst_point),
        sharpness_gap,
        excluded,
        note: format!("{note}: {excluded}"),
    })
}

const SWEEP_ANGLES: usize = 1024;

struct Sweep {
    sampled: f64,
    refined: f64,
    point: Vec<f64>,
}

/// Largest angle `∠(x, a, y)` over `y` in `B_inner(x, t)`, for a puncture `a`.
///
/// The visual angle metric of `R^n \ {a}` depends only on the direction of `y`
/// seen from `a`, so each polar ray from `a` is reduced to the minimum of the
/// inner metric along it. Polar rays meeting the ball are those where that
/// minimum is below `t`; the extreme one is located by bisection between the
/// last meeting and first missing sample. Radii below `cap` are excluded.
fn polar_sweep(
    domain: &Domain,
    inner: (MetricKind, f64),
    x: &Point,
    a: &[f64],
    samples: usize,
    cap: f64,
) -> Result<Sweep> {
    let axis: Vec<f64> = x.coords().iter().zip(a).map(|(p, o)| p - o).collect();
    let norm = vec::norm(&axis);
    let u: Vec<f64> = axis.iter().map(|c| c / norm).collect();
    let w = orthogonal_unit(&u);
    let (lo, hi) = (
        cap.max(f64::MIN_POSITIVE).ln(),
        crate::balls::escape_bound(domain, x).ln(),
    );
    let at = |phi: f64, rho: f64| -> Vec<f64> {
        let (s, c) = phi.sin_cos();
        a.iter()
            .zip(&u)
            .zip(&w)
            .map(|((o, ui), wi)| o + rho * (c * ui + s * wi))
            .collect()
    };
    let m = |p: &[f64]| {
        if domain.contains_slice(p) {
            eval_unchecked(inner.0, domain, x.coords(), p).unwrap_or(f64::INFINITY)
        } else {
            f64::INFINITY
        }
    };
    const GRID: usize = 64;
    // minimum of the inner metric along the polar ray, and where it is attained
    let min_along = |phi: f64| -> (f64, f64) {
        let step = (hi - lo) / (GRID - 1) as f64;
        let (k, v) = (0..GRID)
            .map(|k| (k, m(&at(phi, (lo + step * k as f64).exp()))))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .expect("grid");
        let c = lo + step * k as f64;
        let (s, neg) = golden_max(
            |l| -m(&at(phi, l.exp())),
            (c - step).max(lo),
            (c + step).min(hi),
        );
        if -neg < v {
            (-neg, s.exp())
        } else {
            (v, c.exp())
        }
    };
    // the trace already supplies the dense boundary samples; here a coarse pass
    // only has to land inside the reachable arc before bisection
    let count = samples.min(SWEEP_ANGLES);
    let phis: Vec<f64> = (0..count)
        .map(|k| -PI + TAU * (k as f64 + 0.5) / count as f64)
        .collect();
    let mins: Vec<(f64, f64)> = phis.par_iter().map(|&phi| min_along(phi)).collect();
    let Some(best) = (0..count)
        .filter(|&k| mins[k].0 < inner.1)
        .max_by(|&i, &j| phis[i].abs().total_cmp(&phis[j].abs()))
    else {
        return Err(Error::DegenerateInput(
            "no polar ray meets the inner ball".into(),
        ));
    };
    let sampled = phis[best].abs();
    // walk outward in |phi| until the ray misses the ball, then bisect
    let sign = if phis[best] < 0.0 { -1.0 } else { 1.0 };
    let (mut inside, mut outside) = (phis[best], sign * PI);
    if min_along(outside).0 < inner.1 {
        inside = outside;
    } else {
        for _ in 0..60 {
            let mid = 0.5 * (inside + outside);
            if min_along(mid).0 < inner.1 {
                inside = mid;
            } else {
                outside = mid;
            }
        }
    }
    let (_, rho) = min_along(inside);
    Ok(Sweep {
        sampled,
        refined: inside.abs().max(sampled),
        point: at(inside, rho),
    })
}

fn orthogonal_unit(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    if n == 2 {
        return vec![-u[1], u[0]];
    }
    // the coordinate axis least aligned with u, made orthogonal to it
    let k = (0..n)
        .min_by(|&i, &j| u[i].abs().total_cmp(&u[j].abs()))
        .expect("dim >= 2");
    let mut w: Vec<f64> = u.iter().map(|c| -u[k] * c).collect();
    w[k] += 1.0;
    let nw = vec::norm(&w);
    w.iter().map(|c| c / nw).collect()
}

/// Checks `B_m(x, t) ⊂ B_v(x, r)` with `t = best_radius(m, |x|, r)` in a
/// punctured space with a single obstacle.
pub fn lemma_inclusion(
    domain: &Domain,
    metric: MetricKind,
    x: &Point,
    r: f64,
    samples: usize,
    tol: f64,
) -> Result<InclusionReport> {
    let [a] = domain.obstacles() else {
        return Err(Error::Unsupported(
            "sharp radii are known for a single puncture only".into(),
        ));
    };
    let t = best_radius(metric, x.dist(a), r)?;
    let mut rep = verify_inclusion(domain, (metric, t), (MetricKind::V, r), x, samples, tol)?;
    rep.label = format!("{metric} in v, |x|={}, r={r}", x.dist(a));
    Ok(rep)
}

/// Runs [`lemma_inclusion`] in `R^2 \ {0}` with `x = |x| e_1` for every
/// metric, radius and norm, in that nesting order.
pub fn punctured_suite(
    metrics: &[MetricKind],
    r_grid: &[f64],
    norms: &[f64],
    samples: usize,
    tol: f64,
) -> Result<Vec<InclusionReport>> {
    let g = Domain::punctured_origin(2);
    let cases: Vec<(MetricKind, f64, f64)> = metrics
        .iter()
        .flat_map(|&m| {
            r_grid
                .iter()
                .flat_map(move |&r| norms.iter().map(move |&n| (m, r, n)))
        })
        .collect();
    cases
        .par_iter()
        .map(|&(m, r, n)| lemma_inclusion(&g, m, &Point::xy(n, 0.0), r, samples, tol))
        .collect()
}

/// Checks the four Euclidean balls of [`vball_sandwich`] against `∂B_v(x, r)`
/// in the upper half-space.
///
/// Inner balls are sampled on their boundary circles and must satisfy `v < r`;
/// the curve of `B_v` must lie inside the outer balls. For `n >= 3` the checks
/// run in four vertical planes through `x`, which by rotational symmetry about
/// the vertical axis see the same curve.
pub fn halfspace_inclusion_suite(
    x: &Point,
    r: f64,
    samples: usize,
    tol: f64,
) -> Result<Vec<InclusionReport>> {
    let sw = vball_sandwich(x, r)?;
    let curve = vball_curve(r, (samples / 2).max(8))?;
    let n = x.dim();
    let en = Point::basis(n, n - 1);
    let horizontals: Vec<Point> = if n == 2 {
        vec![Point::basis(2, 0)]
    } else {
        (0..4)
            .map(|k| {
                let a = PI * k as f64 / 4.0;
                let mut c = vec![0.0; n];
                c[0] = a.cos();
                c[1] = a.sin();
                Point::from_vec_unchecked(c)
            })
            .collect()
    };
    let xn = x.last();
    let en_ref = &en;
    let curve_points: Vec<Vec<f64>> = horizontals
        .iter()
        .flat_map(|h| {
            curve.polyline.iter().map(move |&[p1, p2]| {
                x.coords()
                    .iter()
                    .zip(h.coords())
                    .zip(en_ref.coords())
                    .map(|((c, hc), ec)| c + xn * p1 * hc + xn * (p2 - 1.0) * ec)
                    .collect()
            })
        })
        .collect();
    let inner = |name: &str, ball: &EuclideanBall| -> Result<InclusionReport> {
        let circle = |h: &Point, a: f64| -> Vec<f64> {
            let (s, c) = a.sin_cos();
            ball.center
                .coords()
                .iter()
                .zip(h.coords())
                .zip(en.coords())
                .map(|((o, hc), ec)| o + ball.radius * (c * hc + s * ec))
                .collect()
        };
        let v_at = |p: &[f64]| {
            v_halfspace(x, &Point::from_vec_unchecked(p.to_vec())).unwrap_or(f64::INFINITY)
        };
        let mut sup = f64::NEG_INFINITY;
        let mut arg = (0, 0.0);
        for (hi, h) in horizontals.iter().enumerate() {
            for k in 0..samples {
                let a = TAU * k as f64 / samples as f64;
                let v = v_at(&circle(h, a));
                if v > sup {
                    sup = v;
                    arg = (hi, a);
                }
            }
        }
        let h = &horizontals[arg.0];
        let step = TAU / samples as f64;
        let (a_ref, v_ref) = golden_max(|a| v_at(&circle(h, a)), arg.1 - step, arg.1 + step);
        let refined = v_ref.max(sup);
        let worst = if v_ref > sup {
            circle(h, a_ref)
        } else {
            circle(h, arg.1)
        };
        let min_margin = r - sup;
        Ok(InclusionReport {
            label: format!("{name} in v ball"),
            inner: (MetricKind::Euclidean, ball.radius),
            outer: (MetricKind::V, r),
            holds: min_margin.min(r - refined) >= -tol,
            min_margin,
            worst_point: Point::from_vec_unchecked(worst),
            sharpness_gap: r - refined,
            excluded: 0,
            note: format!(
                "{} boundary samples in {} vertical planes",
                samples,
                horizontals.len()
            ),
        })
    };
    let outer = |name: &str, ball: &EuclideanBall| -> InclusionReport {
        let (k, m) = curve_points
            .iter()
            .map(|p| ball.margin(p))
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty curve");
        InclusionReport {
            label: format!("v ball in {name}"),
            inner: (MetricKind::V, r),
            outer: (MetricKind::Euclidean, ball.radius),
            holds: m >= -tol,
            min_margin: m,
            worst_point: Point::from_vec_unchecked(curve_points[k].clone()),
            sharpness_gap: m,
            excluded: 0,
            note: format!(
                "{} curve samples in {} vertical planes",
                curve.polyline.len(),
                horizontals.len()
            ),
        }
    };
    Ok(vec![
        inner("inner1", &sw.inner1)?,
        inner("inner2", &sw.inner2)?,
        outer("outer1", &sw.outer1),
        outer("outer2", &sw.outer2),
    ])
}

/// A triple breaking the triangle inequality for the point pair function.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TriangleViolation {
    pub x: Point,
    pub y: Point,
    pub z: Point,
    /// `p(x, z)`.
    pub direct: f64,
    /// `p(x, y) + p(y, z)`.
    pub via: f64,
}

/// Random search for `p(x, z) > p(x, y) + p(y, z)`; returns the first hit.
///
/// Points are drawn with a bias towards the boundary, where the point pair
/// function deviates most from a metric.
pub fn p_triangle_experiment(
    domain: &Domain,
    trials: usize,
    seed: u64,
) -> Result<Option<TriangleViolation>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let pts = [
            random_point(domain, &mut rng)?,
            random_point(domain, &mut rng)?,
            random_point(domain, &mut rng)?,
        ];
        let p = |a: usize, b: usize| eval_unchecked(MetricKind::P, domain, &pts[a], &pts[b]);
        let d = [p(0, 1)?, p(1, 2)?, p(0, 2)?];
        // (middle point, direct pair, legs)
        let orders = [
            (1, d[2], d[0] + d[1], 0, 2),
            (2, d[0], d[2] + d[1], 0, 1),
            (0, d[1], d[0] + d[2], 1, 2),
        ];
        for (mid, direct, via, a, b) in orders {
            if direct > via + 1e-12 {
                let pt = |i: usize| Point::from_vec_unchecked(pts[i].clone());
                return Ok(Some(TriangleViolation {
                    x: pt(a),
                    y: pt(mid),
                    z: pt(b),
                    direct,
                    via,
                }));
            }
        }
    }
    Ok(None)
}

fn random_point(domain: &Domain, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let n = domain.dim();
    let mut unit = || loop {
        let c: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = vec::norm(&c);
        if norm > 1e-3 && norm <= 1.0 {
            return c.into_iter().map(|v| v / norm).collect::<Vec<f64>>();
        }
    };
    let dir = unit();
    Ok(match domain {
        Domain::UnitBall { .. } => {
            let rho = if rng.random_bool(0.5) {
                1.0 - 10f64.powf(-6.0 * rng.random::<f64>())
            } else {
                rng.random::<f64>().powf(1.0 / n as f64)
            };
            dir.iter().map(|v| v * rho.min(1.0 - 1e-12)).collect()
        }
        Domain::HalfSpace { .. } => {
            let mut c: Vec<f64> = (0..n - 1).map(|_| rng.random_range(-10.0..10.0)).collect();
            c.push(10f64.powf(rng.random_range(-4.0..4.0)));
            c
        }
        Domain::PuncturedSpace { obstacles } => {
            let a = &obstacles[rng.random_range(0..obstacles.len())];
            let len = 10f64.powf(rng.random_range(-3.0..3.0));
            a.coords()
                .iter()
                .zip(&dir)
                .map(|(o, d)| o + len * d)
                .collect()
        }
        Domain::Polygon(poly) => {
            let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for v in poly.vertices() {
                for i in 0..2 {
                    lo[i] = lo[i].min(v[i]);
                    hi[i] = hi[i].max(v[i]);
                }
            }
            loop {
                let p = [
                    rng.random_range(lo[0]..hi[0]),
                    rng.random_range(lo[1]..hi[1]),
                ];
                if poly.contains(p) {
                    break p.to_vec();
                }
            }
        }
    })
}
