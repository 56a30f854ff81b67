use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::point::{vec, Point};
use crate::error::{Error, Result};

/// A proper subdomain `G` of `R^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DomainSpec", into = "DomainSpec")]
pub enum Domain {
    /// `R^n` minus a finite set of pairwise distinct points.
    PuncturedSpace { obstacles: Vec<Point> },
    /// Upper half-space `{x : x_n > 0}`.
    HalfSpace { dim: usize },
    /// Open unit ball.
    UnitBall { dim: usize },
    /// Interior of a simple planar polygon.
    Polygon(Polygon),
}

/// Simple polygon, vertices stored counterclockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<[f64; 2]>,
}

/// Horizontal sampling window `[lo, hi]` used along every unbounded boundary axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Range(format!("bad window [{lo}, {hi}]")));
        }
        Ok(Window { lo, hi })
    }

    /// Symmetric window `[-half, half]`.
    pub fn symmetric(half: f64) -> Result<Self> {
        Self::new(-half, half)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

impl Domain {
    pub fn punctured(obstacles: Vec<Point>) -> Result<Self> {
        let Some(first) = obstacles.first() else {
            return Err(Error::InvalidDomain(
                "punctured space needs at least one point".into(),
            ));
        };
        let dim = first.dim();
        for (i, p) in obstacles.iter().enumerate() {
            p.check_dim(dim)
                .map_err(|e| Error::InvalidDomain(e.to_string()))?;
            if obstacles[..i].iter().any(|q| q == p) {
                return Err(Error::InvalidDomain(format!("repeated obstacle {p}")));
            }
        }
        Ok(Domain::PuncturedSpace { obstacles })
    }

    /// `R^dim` minus the origin.
    pub fn punctured_origin(dim: usize) -> Self {
        Domain::PuncturedSpace {
            obstacles: vec![Point::origin(dim)],
        }
    }

    pub fn half_space(dim: usize) -> Result<Self> {
        check_dim_at_least_2(dim)?;
        Ok(Domain::HalfSpace { dim })
    }

    pub fn unit_ball(dim: usize) -> Result<Self> {
        check_dim_at_least_2(dim)?;
        Ok(Domain::UnitBall { dim })
    }

    pub fn polygon(vertices: Vec<[f64; 2]>) -> Result<Self> {
        Polygon::new(vertices).map(Domain::Polygon)
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::PuncturedSpace { obstacles } => obstacles[0].dim(),
            Domain::HalfSpace { dim } | Domain::UnitBall { dim } => *dim,
            Domain::Polygon(_) => 2,
        }
    }

    /// Obstacles of a punctured space; empty for every other variant.
    pub fn obstacles(&self) -> &[Point] {
        match self {
            Domain::PuncturedSpace { obstacles } => obstacles,
            _ => &[],
        }
    }

    pub fn contains(&self, x: &Point) -> bool {
        x.dim() == self.dim() && self.contains_slice(x.coords())
    }

    pub(crate) fn contains_slice(&self, x: &[f64]) -> bool {
        match self {
            Domain::PuncturedSpace { obstacles } => {
                obstacles.iter().all(|z| !vec::same(z.coords(), x))
            }
            Domain::HalfSpace { .. } => x[x.len() - 1] > 0.0,
            Domain::UnitBall { .. } => vec::dot(x, x) < 1.0,
            Domain::Polygon(poly) => poly.contains([x[0], x[1]]),
        }
    }

    /// Checks dimension and strict interior membership.
    pub fn check(&self, x: &Point) -> Result<()> {
        x.check_dim(self.dim())?;
        if self.contains_slice(x.coords()) {
            Ok(())
        } else {
            Err(Error::Domain(x.to_string()))
        }
    }

    /// Euclidean distance `d(x, ∂G)`.
    pub fn dist_to_boundary(&self, x: &Point) -> Result<f64> {
        self.check(x)?;
        Ok(self.dist_to_boundary_slice(x.coords()))
    }

    /// Unchecked boundary distance; `x` must be an interior point.
    pub(crate) fn dist_to_boundary_slice(&self, x: &[f64]) -> f64 {
        match self {
            Domain::PuncturedSpace { obstacles } => obstacles
                .iter()
                .map(|z| vec::dist(z.coords(), x))
                .fold(f64::INFINITY, f64::min),
            Domain::HalfSpace { .. } => x[x.len() - 1],
            Domain::UnitBall { .. } => 1.0 - vec::norm(x),
            Domain::Polygon(poly) => poly.dist_to_edges([x[0], x[1]]),
        }
    }

    /// Deterministic sample of `∂G` with at least `budget` points (finite boundaries
    /// are returned exactly). Half-spaces need a `window` for their unbounded boundary.
    pub fn boundary_sample(&self, budget: usize, window: Option<&Window>) -> Result<Vec<Point>> {
        if budget < 2 {
            return Err(Error::Range(format!("sample budget {budget} < 2")));
        }
        match self {
            Domain::PuncturedSpace { obstacles } => Ok(obstacles.clone()),
            Domain::UnitBall { dim: 2 } => Ok((0..budget)
                .map(|k| {
                    let th = std::f64::consts::TAU * k as f64 / budget as f64;
                    Point::xy(th.cos(), th.sin())
                })
                .collect()),
            Domain::UnitBall { dim } => Ok(sphere_directions(*dim, budget, 0x5eed)),
            Domain::HalfSpace { dim } => {
                let w = window.ok_or(Error::MissingWindow)?;
                Ok(half_space_sample(*dim, budget, w))
            }
            Domain::Polygon(poly) => Ok(poly.perimeter_sample(budget)),
        }
    }
}

fn check_dim_at_least_2(dim: usize) -> Result<()> {
    if dim < 2 {
        Err(Error::InvalidDomain(format!("dimension {dim} < 2")))
    } else {
        Ok(())
    }
}

/// Geometric tail offsets beyond a window edge, as multiples of the window width.
pub(crate) const TAIL_STEPS: i32 = 24;

fn half_space_sample(dim: usize, budget: usize, w: &Window) -> Vec<Point> {
    let axes = dim - 1;
    let per_axis = (budget as f64).powf(1.0 / axes as f64).ceil().max(2.0) as usize;
    let grid: Vec<f64> = (0..per_axis)
        .map(|i| w.lo + w.width() * i as f64 / (per_axis - 1) as f64)
        .collect();
    let mut out = Vec::with_capacity(per_axis.pow(axes as u32) + 4 * TAIL_STEPS as usize);
    let mut idx = vec![0usize; axes];
    'grid: loop {
        let mut c: Vec<f64> = idx.iter().map(|&i| grid[i]).collect();
        c.push(0.0);
        out.push(Point::from_vec_unchecked(c));
        for i in idx.iter_mut() {
            *i += 1;
            if *i < per_axis {
                continue 'grid;
            }
            *i = 0;
        }
        break;
    }
    let mid = 0.5 * (w.lo + w.hi);
    for axis in 0..axes {
        for k in 0..TAIL_STEPS {
            let off = w.width() * 2f64.powi(k);
            for side in [-1.0, 1.0] {
                let mut c = vec![mid; axes];
                c[axis] = if side < 0.0 { w.lo - off } else { w.hi + off };
                c.push(0.0);
                out.push(Point::from_vec_unchecked(c));
            }
        }
    }
    out
}

fn sphere_directions(dim: usize, count: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let c: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = vec::norm(&c);
        if n > 1e-3 && n <= 1.0 {
            out.push(Point::from_vec_unchecked(c.iter().map(|v| v / n).collect()));
        }
    }
    out
}

impl Polygon {
    pub fn new(mut vertices: Vec<[f64; 2]>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidDomain(format!(
                "polygon needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidDomain("non-finite polygon vertex".into()));
        }
        let n = vertices.len();
        for i in 0..n {
            if vertices[i] == vertices[(i + 1) % n] {
                return Err(Error::InvalidDomain(format!("repeated vertex {i}")));
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                // adjacent edges share exactly one endpoint
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                let (c, d) = (vertices[j], vertices[(j + 1) % n]);
                if adjacent {
                    if collinear_overlap(a, b, c, d) {
                        return Err(Error::InvalidDomain("polygon folds back on itself".into()));
                    }
                } else if segments_intersect(a, b, c, d) {
                    return Err(Error::InvalidDomain(format!(
                        "polygon edges {i} and {j} intersect"
                    )));
                }
            }
        }
        let area2: f64 = (0..n)
            .map(|i| {
                let (p, q) = (vertices[i], vertices[(i + 1) % n]);
                p[0] * q[1] - q[0] * p[1]
            })
            .sum();
        if area2 == 0.0 {
            return Err(Error::InvalidDomain("polygon has zero area".into()));
        }
        if area2 < 0.0 {
            vertices.reverse();
        }
        Ok(Polygon { vertices })
    }

    /// Counterclockwise vertex list.
    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if point_segment_dist(p, a, b) == 0.0 {
                return false;
            }
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                if p[0] < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn dist_to_edges(&self, p: [f64; 2]) -> f64 {
        self.edges()
            .map(|(a, b)| point_segment_dist(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| seg_len(a, b)).sum()
    }

    fn perimeter_sample(&self, budget: usize) -> Vec<Point> {
        let perim = self.perimeter();
        let mut out = Vec::with_capacity(budget + self.vertices.len());
        for (a, b) in self.edges() {
            let count = ((budget as f64 * seg_len(a, b) / perim).ceil() as usize).max(1);
            for j in 0..count {
                let u = j as f64 / count as f64;
                out.push(Point::xy(
                    a[0] + u * (b[0] - a[0]),
                    a[1] + u * (b[1] - a[1]),
                ));
            }
        }
        out
    }
}

fn seg_len(a: [f64; 2], b: [f64; 2]) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

pub(crate) fn point_segment_dist(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let u = (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0);
    (p[0] - a[0] - u * dx).hypot(p[1] - a[1] - u * dy)
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0])
        && p[0] <= a[0].max(b[0])
        && p[1] >= a[1].min(b[1])
        && p[1] <= a[1].max(b[1])
}

fn segments_intersect(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let (o1, o2) = (orient(a, b, c), orient(a, b, d));
    let (o3, o4) = (orient(c, d, a), orient(c, d, b));
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    (o1 == 0.0 && on_segment(a, b, c))
        || (o2 == 0.0 && on_segment(a, b, d))
        || (o3 == 0.0 && on_segment(c, d, a))
        || (o4 == 0.0 && on_segment(c, d, b))
}

/// Adjacent edges `ab`, `cd` (sharing one endpoint) overlap along a line.
fn collinear_overlap(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let (shared, p, q) = if b == c {
        (b, a, d)
    } else if a == d {
        (a, b, c)
    } else {
        return segments_intersect(a, b, c, d);
    };
    let u = [p[0] - shared[0], p[1] - shared[1]];
    let v = [q[0] - shared[0], q[1] - shared[1]];
    u[0] * v[1] - u[1] * v[0] == 0.0 && u[0] * v[0] + u[1] * v[1] > 0.0
}

/// Angle `∠(x, z, y)` in `[0, π]` at vertex `z`.
pub fn angle_at(x: &Point, z: &Point, y: &Point) -> Result<f64> {
    angle_at_slice(x.coords(), z.coords(), y.coords())
}

pub(crate) fn angle_at_slice(x: &[f64], z: &[f64], y: &[f64]) -> Result<f64> {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for i in 0..z.len() {
        let a = x[i] - z[i];
        let b = y[i] - z[i];
        dot += a * b;
        na += a * a;
        nb += b * b;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(Error::DegenerateAngle);
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0).acos())
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum DomainSpec {
    Punctured { points: Vec<Vec<f64>> },
    Halfspace { dim: usize },
    Unitball { dim: usize },
    Polygon { vertices: Vec<[f64; 2]> },
}

impl TryFrom<DomainSpec> for Domain {
    type Error = Error;

    fn try_from(spec: DomainSpec) -> Result<Self> {
        match spec {
            DomainSpec::Punctured { points } => {
                let pts = points
                    .into_iter()
                    .map(Point::new)
                    .collect::<Result<Vec<_>>>()
                    .map_err(|e| Error::InvalidDomain(e.to_string()))?;
                Domain::punctured(pts)
            }
            DomainSpec::Halfspace { dim } => Domain::half_space(dim),
            DomainSpec::Unitball { dim } => Domain::unit_ball(dim),
            DomainSpec::Polygon { vertices } => Domain::polygon(vertices),
        }
    }
}

impl From<Domain> for DomainSpec {
    fn from(d: Domain) -> Self {
        match d {
            Domain::PuncturedSpace { obstacles } => DomainSpec::Punctured {
                points: obstacles.into_iter().map(Vec::from).collect(),
            },
            Domain::HalfSpace { dim } => DomainSpec::Halfspace { dim },
            Domain::UnitBall { dim } => DomainSpec::Unitball { dim },
            Domain::Polygon(p) => DomainSpec::Polygon {
                vertices: p.vertices,
            },
        }
    }
}

impl Domain {
    /// Parses the JSON domain schema, e.g. `{"type":"halfspace","dim":2}`.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidDomain(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn unit_square() -> Domain {
        Domain::polygon(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap()
    }

    #[test]
    fn dist_examples() {
        let h = Domain::half_space(2).unwrap();
        assert_eq!(h.dist_to_boundary(&Point::xy(3.0, 2.0)).unwrap(), 2.0);
        let p = Domain::punctured_origin(2);
        assert_eq!(p.dist_to_boundary(&Point::xy(1.0, 0.0)).unwrap(), 1.0);
        let b = Domain::unit_ball(3).unwrap();
        let d = b
            .dist_to_boundary(&Point::new(vec![0.0, 0.6, 0.0]).unwrap())
            .unwrap();
        assert!((d - 0.4).abs() < 1e-15);
    }

    #[test]
    fn square_distance_matches_dense_edge_sampling() {
        let sq = unit_square();
        let x = Point::xy(0.5, 0.25);
        let brute = sq
            .boundary_sample(40_000, None)
            .unwrap()
            .iter()
            .map(|z| z.dist(&x))
            .fold(f64::INFINITY, f64::min);
        assert!((brute - 0.25).abs() < 1e-12);
        assert_eq!(sq.dist_to_boundary(&x).unwrap(), 0.25);
    }

    #[test]
    fn boundary_and_outside_points_are_rejected() {
        let h = Domain::half_space(2).unwrap();
        assert!(matches!(
            h.dist_to_boundary(&Point::xy(0.0, 0.0)),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            h.dist_to_boundary(&Point::xy(0.0, -1.0)),
            Err(Error::Domain(_))
        ));
        let p = Domain::punctured_origin(2);
        assert!(p.dist_to_boundary(&Point::origin(2)).is_err());
        assert!(unit_square()
            .dist_to_boundary(&Point::xy(1.0, 0.5))
            .is_err());
        assert!(matches!(
            p.dist_to_boundary(&Point::origin(3)),
            Err(Error::DimensionMismatch {
                expected: 2,
                got: 3
            })
        ));
    }

    #[test]
    fn angle_examples() {
        let o = Point::origin(2);
        let e1 = Point::xy(1.0, 0.0);
        let e2 = Point::xy(0.0, 1.0);
        assert_eq!(angle_at(&e1, &o, &e2).unwrap(), FRAC_PI_2);
        assert_eq!(angle_at(&e1, &o, &Point::xy(-1.0, 0.0)).unwrap(), PI);
        let a = angle_at(&Point::xy(1.0, 1.0), &o, &e1).unwrap();
        assert!((a - FRAC_PI_4).abs() < 1e-15);
        assert_eq!(angle_at(&e1, &e1, &e2), Err(Error::DegenerateAngle));
    }

    #[test]
    fn boundary_sample_examples() {
        let p = Domain::punctured(vec![Point::origin(2), Point::xy(2.0, 0.0)]).unwrap();
        assert_eq!(
            p.boundary_sample(10, None).unwrap(),
            vec![Point::origin(2), Point::xy(2.0, 0.0)]
        );

        let b = Domain::unit_ball(2)
            .unwrap()
            .boundary_sample(4, None)
            .unwrap();
        let expected = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)];
        for (p, (x, y)) in b.iter().zip(expected) {
            assert!((p[0] - x).abs() < 1e-15 && (p[1] - y).abs() < 1e-15);
        }

        let h = Domain::half_space(2).unwrap();
        assert_eq!(h.boundary_sample(100, None), Err(Error::MissingWindow));
        let w = Window::symmetric(10.0).unwrap();
        let s = h.boundary_sample(100, Some(&w)).unwrap();
        assert!(s.len() >= 100);
        assert!(s.iter().all(|p| p[1] == 0.0));
        let inside: Vec<f64> = s.iter().map(|p| p[0]).filter(|x| x.abs() <= 10.0).collect();
        assert_eq!(inside.len(), 100);
        assert_eq!(inside.first(), Some(&-10.0));
        assert_eq!(inside.last(), Some(&10.0));
    }

    #[test]
    fn polygon_validation_and_orientation() {
        let cw = Domain::polygon(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]).unwrap();
        let Domain::Polygon(poly) = &cw else {
            unreachable!()
        };
        assert_eq!(poly.vertices()[0], [1.0, 0.0]);
        // bow tie
        assert!(Domain::polygon(vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]).is_err());
        assert!(Domain::polygon(vec![[0.0, 0.0], [1.0, 1.0]]).is_err());
        assert!(Domain::polygon(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]).is_err());
    }

    #[test]
    fn punctured_rejects_duplicates() {
        assert!(Domain::punctured(vec![Point::origin(2), Point::origin(2)]).is_err());
        assert!(Domain::punctured(vec![]).is_err());
        assert!(Domain::punctured(vec![Point::origin(2), Point::origin(3)]).is_err());
    }

    #[test]
    fn json_schema_round_trip() {
        for text in [
            r#"{"type":"punctured","points":[[0,0],[2,0]]}"#,
            r#"{"type":"halfspace","dim":2}"#,
            r#"{"type":"unitball","dim":3}"#,
            r#"{"type":"polygon","vertices":[[0,0],[1,0],[0,1]]}"#,
        ] {
            let d = Domain::from_json(text).unwrap();
            let again = Domain::from_json(&serde_json::to_string(&d).unwrap()).unwrap();
            assert_eq!(d, again);
        }
        assert!(Domain::from_json(r#"{"type":"halfspace","dim":1}"#).is_err());
        assert!(Domain::from_json(r#"{"type":"torus"}"#).is_err());
    }
}
