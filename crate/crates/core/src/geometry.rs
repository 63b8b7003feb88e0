//! Points, point sets and origin-anchored boxes in the unit cube.

use crate::error::{Error, Result};

fn check_coord(x: f64) -> Result<f64> {
    if x.is_finite() && (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err(Error::OutOfUnitCube(x))
    }
}

/// A point of `[0,1]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::ZeroDimension);
        }
        for &x in &coords {
            check_coord(x)?;
        }
        Ok(Point(coords))
    }

    pub fn origin(d: usize) -> Self {
        Point(vec![0.0; d])
    }

    pub fn ones(d: usize) -> Self {
        Point(vec![1.0; d])
    }

    pub fn splat(d: usize, x: f64) -> Result<Self> {
        Point::new(vec![x; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// `N` points in `[0,1]^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    d: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(d: usize, coords: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::ZeroDimension);
        }
        if !coords.len().is_multiple_of(d) {
            return Err(Error::invalid(format!(
                "{} coordinates do not split into points of dimension {d}",
                coords.len()
            )));
        }
        for &x in &coords {
            check_coord(x)?;
        }
        Ok(PointSet { d, coords })
    }

    /// Builds a set from already validated coordinates.
    pub(crate) fn from_raw(d: usize, coords: Vec<f64>) -> Self {
        debug_assert!(d > 0 && coords.len().is_multiple_of(d));
        debug_assert!(coords.iter().all(|x| (0.0..=1.0).contains(x)));
        PointSet { d, coords }
    }

    pub fn from_points(points: &[Point]) -> Result<Self> {
        let d = points.first().map(Point::dim).ok_or(Error::invalid("empty point list"))?;
        let mut coords = Vec::with_capacity(points.len() * d);
        for p in points {
            if p.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, found: p.dim() });
            }
            coords.extend_from_slice(p.coords());
        }
        Ok(PointSet { d, coords })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.d)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }

    pub(crate) fn check_dim(&self, found: usize) -> Result<()> {
        if found == self.d {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.d, found })
        }
    }
}

/// The half-open box `[0, z)` anchored at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchoredBox {
    upper: Point,
}

impl AnchoredBox {
    pub fn new(upper: Point) -> Self {
        AnchoredBox { upper }
    }

    pub fn upper(&self) -> &Point {
        &self.upper
    }

    pub fn dim(&self) -> usize {
        self.upper.dim()
    }

    pub fn volume(&self) -> f64 {
        self.upper.coords().iter().product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.upper.coords()).all(|(xi, zi)| xi < zi)
    }
}

#[inline]
pub(crate) fn in_anchored_box(x: &[f64], z: &[f64]) -> bool {
    x.iter().zip(z).all(|(xi, zi)| xi < zi)
}

/// Number of points strictly inside `[0, z)` on every axis.
pub fn box_count(points: &PointSet, b: &AnchoredBox) -> Result<usize> {
    if points.is_empty() {
        return Err(Error::invalid("point set is empty"));
    }
    points.check_dim(b.dim())?;
    let z = b.upper().coords();
    Ok(points.iter().filter(|x| in_anchored_box(x, z)).count())
}
