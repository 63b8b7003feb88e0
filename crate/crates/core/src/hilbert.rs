//! The `d`-dimensional Hilbert curve, discretised at a fixed depth.
//!
//! Index/coordinate conversion uses Skilling's transpose construction
//! (Gray-code order with per-level reflections). The curve starts at the
//! origin. At depth `K` the parameter interval `[0,1)` is cut into `2^{dK}`
//! cells of length `2^{-dK}`, and cell `h` maps onto one subcube of side
//! `2^{-K}`.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Largest value of `d * K`; level-`K` indices fit in one `u64`.
pub const MAX_INDEX_BITS: u32 = 62;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HilbertParams {
    d: usize,
    depth: u32,
}

impl HilbertParams {
    pub fn new(d: usize, depth: u32) -> Result<Self> {
        if d < 2 {
            return Err(Error::invalid(format!("Hilbert curve needs d >= 2, got {d}")));
        }
        if depth == 0 {
            return Err(Error::invalid("Hilbert depth must be at least 1"));
        }
        if (d as u64) * (depth as u64) > MAX_INDEX_BITS as u64 {
            return Err(Error::invalid(format!(
                "d * depth = {} exceeds {MAX_INDEX_BITS} bits",
                d as u64 * depth as u64
            )));
        }
        Ok(HilbertParams { d, depth })
    }

    /// Depth `floor(62 / d)`.
    pub fn with_default_depth(d: usize) -> Result<Self> {
        if d < 2 || d > MAX_INDEX_BITS as usize {
            return Err(Error::invalid(format!("no Hilbert depth available for d = {d}")));
        }
        HilbertParams::new(d, MAX_INDEX_BITS / d as u32)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    fn index_bits(&self) -> u32 {
        self.d as u32 * self.depth
    }

    /// `2^{dK}` curve cells.
    pub fn cell_count(&self) -> u64 {
        1u64 << self.index_bits()
    }

    /// Subcubes per axis, `2^K`.
    pub fn side_cells(&self) -> u64 {
        1u64 << self.depth
    }

    /// Integer coordinates of curve cell `h`.
    pub fn index_to_cell(&self, h: u64) -> Vec<u32> {
        debug_assert!(h < self.cell_count());
        let (n, b) = (self.d, self.depth);
        let mut x = vec![0u32; n];
        // distribute the index bits: level-major, axis 0 first
        for j in (0..b).rev() {
            for (i, xi) in x.iter_mut().enumerate() {
                let shift = j * n as u32 + (n - 1 - i) as u32;
                *xi |= (((h >> shift) & 1) as u32) << j;
            }
        }
        // Gray decode
        let t = x[n - 1] >> 1;
        for i in (1..n).rev() {
            x[i] ^= x[i - 1];
        }
        x[0] ^= t;
        // undo excess work
        let top = 2u64 << (b - 1);
        let mut q = 2u64;
        while q != top {
            let p = (q - 1) as u32;
            let q32 = q as u32;
            for i in (0..n).rev() {
                if x[i] & q32 != 0 {
                    x[0] ^= p;
                } else {
                    let t = (x[0] ^ x[i]) & p;
                    x[0] ^= t;
                    x[i] ^= t;
                }
            }
            q <<= 1;
        }
        x
    }

    /// Curve index of the cell with integer coordinates `cell`.
    pub fn cell_to_index(&self, cell: &[u32]) -> u64 {
        debug_assert_eq!(cell.len(), self.d);
        let (n, b) = (self.d, self.depth);
        let mut x = cell.to_vec();
        let m = 1u32 << (b - 1);
        let mut q = m;
        while q > 1 {
            let p = q - 1;
            for i in 0..n {
                if x[i] & q != 0 {
                    x[0] ^= p;
                } else {
                    let t = (x[0] ^ x[i]) & p;
                    x[0] ^= t;
                    x[i] ^= t;
                }
            }
            q >>= 1;
        }
        // Gray encode
        for i in 1..n {
            x[i] ^= x[i - 1];
        }
        let mut t = 0u32;
        let mut q = m;
        while q > 1 {
            if x[n - 1] & q != 0 {
                t ^= q - 1;
            }
            q >>= 1;
        }
        for xi in x.iter_mut() {
            *xi ^= t;
        }
        let mut h = 0u64;
        for j in (0..b).rev() {
            for xi in &x {
                h = (h << 1) | ((xi >> j) & 1) as u64;
            }
        }
        h
    }

    /// Integer coordinates of the subcube holding `x`; the upper face of the
    /// cube belongs to the last subcube on each axis.
    pub fn cell_of_point(&self, x: &[f64]) -> Vec<u32> {
        let side = self.side_cells();
        x.iter()
            .map(|&xi| ((xi * side as f64).floor() as u64).min(side - 1) as u32)
            .collect()
    }

    pub fn index_of_point(&self, x: &[f64]) -> u64 {
        self.cell_to_index(&self.cell_of_point(x))
    }

    /// Curve cells `[floor(iT/N), floor((i+1)T/N))` making up the `i`-th
    /// (zero-based) of `n` equal parameter intervals, `T = 2^{dK}`.
    pub fn cells_of_interval(&self, n: usize, i: usize) -> Range<u64> {
        let t = self.cell_count() as u128;
        let n = n as u128;
        let lo = (i as u128 * t) / n;
        let hi = ((i as u128 + 1) * t) / n;
        lo as u64..hi as u64
    }

    /// Inverse of [`Self::cells_of_interval`]: which of `n` intervals owns cell `h`.
    pub fn interval_of_cell(&self, n: usize, h: u64) -> usize {
        let t = self.cell_count() as u128;
        (((h as u128 + 1) * n as u128 - 1) / t) as usize
    }

    /// Lower corner of curve cell `h` in `[0,1]^d`.
    pub fn cell_corner(&self, h: u64) -> Vec<f64> {
        let side = self.side_cells() as f64;
        self.index_to_cell(h).into_iter().map(|c| c as f64 / side).collect()
    }
}

/// Point on the curve at parameter `u`: the lower corner of the depth-`K`
/// subcube holding `u`, shifted along the diagonal by the fractional position
/// of `u` inside its parameter cell. Accurate to `sqrt(d) 2^{-K}`.
pub fn hilbert_map(params: &HilbertParams, u: f64) -> Result<Point> {
    if !(0.0..1.0).contains(&u) {
        return Err(Error::invalid(format!("curve parameter {u} outside [0, 1)")));
    }
    let scaled = u * params.cell_count() as f64;
    let h = (scaled.floor() as u64).min(params.cell_count() - 1);
    let rem = scaled - h as f64;
    let side = params.side_cells() as f64;
    let coords = params
        .index_to_cell(h)
        .into_iter()
        .map(|c| {
            let upper = (c as f64 + 1.0) / side;
            let x = (c as f64 + rem) / side;
            if x < upper { x } else { upper.next_down() }
        })
        .collect();
    Point::new(coords)
}

/// Union of depth-`K` subcubes whose parameter cells lie in `[a, b)`.
#[derive(Debug, Clone)]
pub struct CellRegion {
    params: HilbertParams,
    start: u64,
    cells: Vec<Vec<u32>>,
}

/// The curve image of the aligned interval `[a, b)`.
pub fn hilbert_cell_region(params: &HilbertParams, a: f64, b: f64) -> Result<CellRegion> {
    if !(0.0 <= a && a < b && b <= 1.0) {
        return Err(Error::invalid(format!("need 0 <= a < b <= 1, got [{a}, {b})")));
    }
    let t = params.cell_count() as f64;
    let (sa, sb) = (a * t, b * t);
    if sa.fract() != 0.0 || sb.fract() != 0.0 {
        return Err(Error::invalid(format!(
            "[{a}, {b}) is not aligned to multiples of 2^-{}",
            params.index_bits()
        )));
    }
    Ok(region_of_cells(params, sa as u64..sb as u64))
}

pub(crate) fn region_of_cells(params: &HilbertParams, range: Range<u64>) -> CellRegion {
    CellRegion {
        params: *params,
        start: range.start,
        cells: range.map(|h| params.index_to_cell(h)).collect(),
    }
}

impl CellRegion {
    pub fn cells(&self) -> &[Vec<u32>] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn first_index(&self) -> u64 {
        self.start
    }

    /// Lebesgue measure, exact: a count of cells times `2^{-dK}`.
    pub fn measure(&self) -> f64 {
        self.cells.len() as f64 / self.params.cell_count() as f64
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let c = self.params.cell_of_point(x);
        self.cells.contains(&c)
    }

    /// Integer bounding box `[lo, hi)` in units of the subcube side.
    pub fn bounding_box(&self) -> (Vec<u32>, Vec<u32>) {
        let d = self.params.dim();
        let mut lo = vec![u32::MAX; d];
        let mut hi = vec![0u32; d];
        for c in &self.cells {
            for k in 0..d {
                lo[k] = lo[k].min(c[k]);
                hi[k] = hi[k].max(c[k] + 1);
            }
        }
        (lo, hi)
    }

    /// Diagonal of the bounding box; an upper bound on the diameter.
    pub fn bounding_diagonal(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        let side = self.params.side_cells() as f64;
        lo.iter()
            .zip(&hi)
            .map(|(&l, &h)| {
                let e = (h - l) as f64 / side;
                e * e
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Exact diameter of the union of closed subcubes. Quadratic in the
    /// number of cells.
    pub fn diameter(&self) -> f64 {
        let side = self.params.side_cells() as f64;
        let mut best = 0u64;
        for (i, a) in self.cells.iter().enumerate() {
            for b in &self.cells[i..] {
                let s: u64 = a
                    .iter()
                    .zip(b)
                    .map(|(&x, &y)| {
                        let e = (x.max(y) - x.min(y) + 1) as u64;
                        e * e
                    })
                    .sum();
                best = best.max(s);
            }
        }
        (best as f64).sqrt() / side
    }
}
