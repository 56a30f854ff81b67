use std::fmt;
use std::ops::{Add, Index, Mul, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of `R^n`, `n >= 2`, with finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::InvalidPoint(format!(
                "need at least 2 coordinates, got {}",
                coords.len()
            )));
        }
        if let Some(c) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidPoint(format!("non-finite coordinate {c}")));
        }
        Ok(Point(coords))
    }

    /// Planar point `(x, y)`. Panics on non-finite input.
    pub fn xy(x: f64, y: f64) -> Self {
        assert!(x.is_finite() && y.is_finite(), "non-finite coordinate");
        Point(vec![x, y])
    }

    pub fn origin(dim: usize) -> Self {
        assert!(dim >= 2, "dimension must be at least 2");
        Point(vec![0.0; dim])
    }

    /// The `k`-th standard basis vector of `R^dim` (zero based).
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut p = Self::origin(dim);
        p.0[k] = 1.0;
        p
    }

    pub(crate) fn from_vec_unchecked(coords: Vec<f64>) -> Self {
        debug_assert!(coords.len() >= 2);
        Point(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    /// Last coordinate `x_n`.
    pub fn last(&self) -> f64 {
        self.0[self.0.len() - 1]
    }

    pub fn norm(&self) -> f64 {
        vec::norm(&self.0)
    }

    pub fn dist(&self, other: &Point) -> f64 {
        vec::dist(&self.0, &other.0)
    }

    pub fn dot(&self, other: &Point) -> f64 {
        vec::dot(&self.0, &other.0)
    }

    pub fn scale(&self, s: f64) -> Point {
        Point(self.0.iter().map(|c| c * s).collect())
    }

    /// `self + t * dir`.
    pub fn offset(&self, dir: &Point, t: f64) -> Point {
        Point(self.0.iter().zip(&dir.0).map(|(a, d)| a + t * d).collect())
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() == dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: dim,
                got: self.dim(),
            })
        }
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Point::new(v)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.0
    }
}

impl Index<usize> for Point {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add<&Point> for &Point {
    type Output = Point;

    fn add(self, rhs: &Point) -> Point {
        Point(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub<&Point> for &Point {
    type Output = Point;

    fn sub(self, rhs: &Point) -> Point {
        Point(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Mul<f64> for &Point {
    type Output = Point;

    fn mul(self, s: f64) -> Point {
        self.scale(s)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Parses comma separated coordinates, e.g. `0.75,0.6`.
impl FromStr for Point {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let coords = s
            .split(',')
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidPoint(format!("{s:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Point::new(coords)
    }
}

/// Slice arithmetic shared by the hot evaluation paths.
pub(crate) mod vec {
    #[inline]
    pub fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[inline]
    pub fn norm(a: &[f64]) -> f64 {
        dot(a, a).sqrt()
    }

    #[inline]
    pub fn dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }

    #[inline]
    pub fn same(a: &[f64], b: &[f64]) -> bool {
        a.iter().zip(b).all(|(x, y)| x == y)
    }
}
