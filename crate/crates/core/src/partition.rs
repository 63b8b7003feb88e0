//! Equal-measure partitions of the unit cube.
//!
//! Three constructions are supported: the isometric grid (`m^d` congruent
//! boxes), the rectangular grid (`m_1 x ... x m_d` boxes) and the Hilbert
//! curve partition, whose cells are images of the intervals
//! `[(i-1)/N, i/N)` under the curve. A fourth, `trivial`, repeats the whole
//! cube `N` times and turns stratified sampling into simple random sampling.
//!
//! Axis-box cells are half-open `[l, u)` except on the upper face of the
//! cube, which the touching cells close. Every point of `[0,1]^d` therefore
//! lies in exactly one cell.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AnchoredBox, PointSet};
use crate::hilbert::HilbertParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PartitionKind {
    Grid {
        m: usize,
    },
    RectGrid {
        m: Vec<usize>,
    },
    Hsfc {
        n: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        depth: Option<u32>,
    },
    Trivial {
        n: usize,
    },
}

/// Serialized as `{"d":2,"kind":"grid","m":4}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionSpec {
    pub d: usize,
    #[serde(flatten)]
    pub kind: PartitionKind,
}

impl PartitionSpec {
    pub fn grid(d: usize, m: usize) -> Self {
        PartitionSpec { d, kind: PartitionKind::Grid { m } }
    }

    pub fn rect_grid(m: Vec<usize>) -> Self {
        PartitionSpec { d: m.len(), kind: PartitionKind::RectGrid { m } }
    }

    pub fn hsfc(d: usize, n: usize) -> Self {
        PartitionSpec { d, kind: PartitionKind::Hsfc { n, depth: None } }
    }

    pub fn hsfc_with_depth(d: usize, n: usize, depth: u32) -> Self {
        PartitionSpec { d, kind: PartitionKind::Hsfc { n, depth: Some(depth) } }
    }

    pub fn trivial(d: usize, n: usize) -> Self {
        PartitionSpec { d, kind: PartitionKind::Trivial { n } }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::ZeroDimension);
        }
        match &self.kind {
            PartitionKind::Grid { m } => {
                if *m == 0 {
                    return Err(Error::InvalidPartition("grid needs m >= 1".into()));
                }
                let d = u32::try_from(self.d)
                    .map_err(|_| Error::InvalidPartition("dimension too large".into()))?;
                m.checked_pow(d).ok_or_else(|| {
                    Error::InvalidPartition(format!("grid cell count {m}^{} overflows", self.d))
                })?;
            }
            PartitionKind::RectGrid { m } => {
                if m.len() != self.d {
                    return Err(Error::InvalidPartition(format!(
                        "rect_grid has {} axis counts for dimension {}",
                        m.len(),
                        self.d
                    )));
                }
                if m.contains(&0) {
                    return Err(Error::InvalidPartition("rect_grid axis count is zero".into()));
                }
                m.iter()
                    .try_fold(1usize, |acc, &mi| acc.checked_mul(mi))
                    .ok_or_else(|| Error::InvalidPartition("rect_grid cell count overflows".into()))?;
            }
            PartitionKind::Hsfc { n, .. } => {
                if *n == 0 {
                    return Err(Error::InvalidPartition("hsfc needs N >= 1".into()));
                }
                let params = self.hilbert_params()?;
                if (*n as u128) > params.cell_count() as u128 {
                    return Err(Error::InvalidPartition(format!(
                        "N = {n} exceeds the 2^{} curve cells at depth {}",
                        params.dim() as u32 * params.depth(),
                        params.depth()
                    )));
                }
            }
            PartitionKind::Trivial { n } => {
                if *n == 0 {
                    return Err(Error::InvalidPartition("trivial partition needs N >= 1".into()));
                }
            }
        }
        Ok(())
    }

    /// Number of cells; assumes the spec is valid.
    pub fn cell_count(&self) -> usize {
        match &self.kind {
            PartitionKind::Grid { m } => m.pow(self.d as u32),
            PartitionKind::RectGrid { m } => m.iter().product(),
            PartitionKind::Hsfc { n, .. } | PartitionKind::Trivial { n } => *n,
        }
    }

    /// Curve parameters of an hsfc spec.
    pub fn hilbert_params(&self) -> Result<HilbertParams> {
        match &self.kind {
            PartitionKind::Hsfc { depth, .. } => match depth {
                Some(k) => HilbertParams::new(self.d, *k),
                None => HilbertParams::with_default_depth(self.d),
            },
            _ => Err(Error::InvalidPartition("not an hsfc partition".into())),
        }
    }

    /// Lower diameter constant: every cell diameter is at least `c1 * N^{-1/d}`.
    pub fn c1(&self) -> Option<f64> {
        match &self.kind {
            PartitionKind::Grid { .. } | PartitionKind::RectGrid { .. } => self.c2(),
            // a set of measure 1/N has diameter at least N^{-1/d}
            PartitionKind::Hsfc { .. } => Some(1.0),
            PartitionKind::Trivial { .. } => None,
        }
    }

    /// Upper diameter constant: every cell diameter is at most `c2 * N^{-1/d}`.
    pub fn c2(&self) -> Option<f64> {
        let d = self.d as f64;
        match &self.kind {
            PartitionKind::Grid { .. } => Some(d.sqrt()),
            PartitionKind::RectGrid { m } => {
                let n = self.cell_count() as f64;
                let s: f64 = m.iter().map(|&mi| 1.0 / (mi as f64 * mi as f64)).sum();
                Some(n.powf(1.0 / d) * s.sqrt())
            }
            PartitionKind::Hsfc { .. } => Some(2.0 * (d + 3.0).sqrt()),
            PartitionKind::Trivial { .. } => None,
        }
    }

    fn axis_counts(&self) -> Option<Vec<usize>> {
        match &self.kind {
            PartitionKind::Grid { m } => Some(vec![*m; self.d]),
            PartitionKind::RectGrid { m } => Some(m.clone()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellKind {
    AxisBox { lower: Vec<f64>, upper: Vec<f64> },
    /// Parameter interval `[a, b)` whose curve image is the cell.
    HsfcInterval { a: f64, b: f64 },
    Whole,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub kind: CellKind,
    pub measure: f64,
}

impl Cell {
    /// Membership for axis boxes and the whole cube. Curve cells need the
    /// owning partition, see [`Partition::cell_contains`].
    pub fn contains_box(&self, x: &[f64]) -> Option<bool> {
        match &self.kind {
            CellKind::AxisBox { lower, upper } => Some(
                x.iter()
                    .zip(lower.iter().zip(upper))
                    .all(|(&xi, (&l, &u))| l <= xi && (xi < u || (u == 1.0 && xi == 1.0))),
            ),
            CellKind::Whole => Some(x.iter().all(|xi| (0.0..=1.0).contains(xi))),
            CellKind::HsfcInterval { .. } => None,
        }
    }

    /// Exact diameter of an axis box (or of the whole cube).
    pub fn diameter(&self) -> Option<f64> {
        match &self.kind {
            CellKind::AxisBox { lower, upper } => Some(
                lower
                    .iter()
                    .zip(upper)
                    .map(|(l, u)| (u - l) * (u - l))
                    .sum::<f64>()
                    .sqrt(),
            ),
            CellKind::Whole | CellKind::HsfcInterval { .. } => None,
        }
    }
}

/// An ordered list of `N` equal-measure cells.
#[derive(Debug, Clone)]
pub struct Partition {
    spec: PartitionSpec,
    cells: Vec<Cell>,
    hilbert: Option<HilbertParams>,
}

fn axis_edge(i: usize, m: usize) -> f64 {
    i as f64 / m as f64
}

impl Partition {
    /// Builds the cells in deterministic order: lexicographic with axis 0
    /// most significant for grids, interval order for the curve partition.
    pub fn build(spec: &PartitionSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.cell_count();
        let measure = 1.0 / n as f64;
        let mut hilbert = None;
        let cells = match &spec.kind {
            PartitionKind::Grid { .. } | PartitionKind::RectGrid { .. } => {
                let counts = spec.axis_counts().expect("grid kinds have axis counts");
                let mut cells = Vec::with_capacity(n);
                let mut idx = vec![0usize; spec.d];
                for index in 0..n {
                    let lower = idx.iter().zip(&counts).map(|(&i, &m)| axis_edge(i, m)).collect();
                    let upper = idx.iter().zip(&counts).map(|(&i, &m)| axis_edge(i + 1, m)).collect();
                    cells.push(Cell { index, kind: CellKind::AxisBox { lower, upper }, measure });
                    // odometer, last axis fastest
                    for k in (0..spec.d).rev() {
                        idx[k] += 1;
                        if idx[k] < counts[k] {
                            break;
                        }
                        idx[k] = 0;
                    }
                }
                cells
            }
            PartitionKind::Hsfc { .. } => {
                hilbert = Some(spec.hilbert_params()?);
                (0..n)
                    .map(|index| Cell {
                        index,
                        kind: CellKind::HsfcInterval { a: axis_edge(index, n), b: axis_edge(index + 1, n) },
                        measure,
                    })
                    .collect()
            }
            PartitionKind::Trivial { .. } => {
                (0..n).map(|index| Cell { index, kind: CellKind::Whole, measure }).collect()
            }
        };
        Ok(Partition { spec: spec.clone(), cells, hilbert })
    }

    pub fn spec(&self) -> &PartitionSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.d
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell(&self, i: usize) -> &Cell {
        &self.cells[i]
    }

    pub fn hilbert(&self) -> Option<&HilbertParams> {
        self.hilbert.as_ref()
    }

    /// Index of the unique cell holding `x`. `None` for the trivial
    /// partition, where every cell holds every point.
    pub fn locate(&self, x: &[f64]) -> Result<Option<usize>> {
        if x.len() != self.spec.d {
            return Err(Error::DimensionMismatch { expected: self.spec.d, found: x.len() });
        }
        if let Some(&bad) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::OutOfUnitCube(bad));
        }
        match &self.spec.kind {
            PartitionKind::Grid { .. } | PartitionKind::RectGrid { .. } => {
                let counts = self.spec.axis_counts().expect("grid kinds have axis counts");
                let mut index = 0usize;
                for (&xi, &m) in x.iter().zip(&counts) {
                    index = index * m + axis_slot(xi, m);
                }
                Ok(Some(index))
            }
            PartitionKind::Hsfc { n, .. } => {
                let params = self.hilbert.as_ref().expect("hsfc partition carries curve params");
                let h = params.index_of_point(x);
                Ok(Some(params.interval_of_cell(*n, h)))
            }
            PartitionKind::Trivial { .. } => Ok(None),
        }
    }

    pub fn cell_contains(&self, i: usize, x: &[f64]) -> Result<bool> {
        if let Some(inside) = self.cells[i].contains_box(x) {
            return Ok(inside);
        }
        Ok(self.locate(x)? == Some(i))
    }
}

/// Slot `i` of an axis cut into `m` pieces with `i/m <= x < (i+1)/m`,
/// the last slot closed at 1.
fn axis_slot(x: f64, m: usize) -> usize {
    let mut i = ((x * m as f64).floor() as usize).min(m - 1);
    while i > 0 && x < axis_edge(i, m) {
        i -= 1;
    }
    while i + 1 < m && x >= axis_edge(i + 1, m) {
        i += 1;
    }
    i
}

/// Number of cells cut by the inner faces `x_k = z_k` of the box `[0, z)`,
/// i.e. cells that meet both the box and its complement in positive measure.
/// Faces on the boundary of the cube cut nothing.
pub fn count_boundary_cells(spec: &PartitionSpec, b: &AnchoredBox) -> Result<usize> {
    spec.validate()?;
    if b.dim() != spec.d {
        return Err(Error::DimensionMismatch { expected: spec.d, found: b.dim() });
    }
    let counts = spec.axis_counts().ok_or_else(|| {
        Error::InvalidPartition("boundary-cell counting needs an axis-box partition".into())
    })?;
    // per axis: slots whose lower edge is below z (they meet the box) and
    // slots lying entirely below z
    let mut meeting = 1usize;
    let mut inside = 1usize;
    for (&z, &m) in b.upper().coords().iter().zip(&counts) {
        let lo = (0..m).filter(|&i| axis_edge(i, m) < z).count();
        let full = (0..m).filter(|&i| axis_edge(i + 1, m) <= z).count();
        meeting *= lo;
        inside *= full;
    }
    Ok(meeting - inside)
}

/// The boundary-cell ceiling `d * c2 * N^{1 - 1/d}`.
pub fn boundary_cell_bound(spec: &PartitionSpec) -> Option<f64> {
    let d = spec.d as f64;
    let n = spec.cell_count() as f64;
    spec.c2().map(|c2| d * c2 * n.powf(1.0 - 1.0 / d))
}

/// Checks that every point of `points` sits in its own cell, in order.
pub fn is_stratified(partition: &Partition, points: &PointSet) -> Result<bool> {
    if points.len() != partition.len() {
        return Ok(false);
    }
    for (i, x) in points.iter().enumerate() {
        if !partition.cell_contains(i, x)? {
            return Ok(false);
        }
    }
    Ok(true)
}
