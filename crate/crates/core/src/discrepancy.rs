//! Local discrepancy, the L2 star discrepancy in closed form, Monte Carlo
//! Lp discrepancy and the exact star discrepancy of small point sets.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{in_anchored_box, PointSet};
use crate::sampling::RngStream;

/// Exponent of a discrepancy functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Star,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant {
    Exact,
    /// `stderr` is the CLT standard error of the `L_p^p` estimate.
    MonteCarlo { nodes: usize, stderr: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscrepancyEstimate {
    pub p: Exponent,
    /// `L_p` itself, not its `p`-th power.
    pub value: f64,
    pub variant: Variant,
}

impl DiscrepancyEstimate {
    pub fn stderr(&self) -> Option<f64> {
        match self.variant {
            Variant::Exact => None,
            Variant::MonteCarlo { stderr, .. } => Some(stderr),
        }
    }

    /// `value^p`, the quantity the Monte Carlo estimator averages.
    pub fn pth_power(&self) -> f64 {
        match self.p {
            Exponent::Finite(p) => self.value.powf(p),
            Exponent::Star => self.value,
        }
    }

    /// JSON record `{"p":..,"value":..,"stderr":..}`.
    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Record {
            p: serde_json::Value,
            value: f64,
            stderr: Option<f64>,
        }
        let p = match self.p {
            Exponent::Finite(p) => serde_json::json!(p),
            Exponent::Star => serde_json::json!("star"),
        };
        serde_json::to_value(Record { p, value: self.value, stderr: self.stderr() })
            .expect("plain record serializes")
    }
}

/// `Δ_P(z) = A([0,z); P)/N − λ([0,z))`.
pub fn local_discrepancy(points: &PointSet, z: &[f64]) -> Result<f64> {
    points.check_dim(z.len())?;
    if points.is_empty() {
        return Err(Error::invalid("point set is empty"));
    }
    Ok(local_unchecked(points, z))
}

#[inline]
fn local_unchecked(points: &PointSet, z: &[f64]) -> f64 {
    let inside = points.iter().filter(|x| in_anchored_box(x, z)).count();
    inside as f64 / points.len() as f64 - z.iter().product::<f64>()
}

/// Squared L2 star discrepancy by the closed double sum (Warnock's formula):
/// `3^{-d} − (2/N) Σ_n Π_k (1 − x²)/2 + N^{-2} Σ_{n,m} Π_k min(1 − x, 1 − y)`.
pub fn l2_squared(points: &PointSet) -> Result<f64> {
    let n = points.len();
    if n == 0 {
        return Err(Error::invalid("point set is empty"));
    }
    let d = points.dim() as i32;
    let nf = n as f64;
    let single: f64 = points
        .iter()
        .map(|x| x.iter().map(|&v| (1.0 - v * v) / 2.0).product::<f64>())
        .sum();
    let mut diag = 0.0;
    let mut off = 0.0;
    for (i, x) in points.iter().enumerate() {
        diag += x.iter().map(|&v| 1.0 - v).product::<f64>();
        for y in points.iter().skip(i + 1) {
            off += x.iter().zip(y).map(|(&a, &b)| 1.0 - a.max(b)).product::<f64>();
        }
    }
    let v = 3f64.powi(-d) - 2.0 * single / nf + (diag + 2.0 * off) / (nf * nf);
    Ok(v.max(0.0))
}

pub fn l2_exact(points: &PointSet) -> Result<DiscrepancyEstimate> {
    Ok(DiscrepancyEstimate {
        p: Exponent::Finite(2.0),
        value: l2_squared(points)?.sqrt(),
        variant: Variant::Exact,
    })
}

/// Monte Carlo estimates of `∫ |Δ_P(z)|^p dz` for several exponents over one
/// shared set of `nodes` uniform nodes.
pub fn lp_estimate_many(
    points: &PointSet,
    ps: &[f64],
    nodes: usize,
    stream: &mut RngStream,
) -> Result<Vec<DiscrepancyEstimate>> {
    if points.is_empty() {
        return Err(Error::invalid("point set is empty"));
    }
    if let Some(&p) = ps.iter().find(|&&p| !(p >= 1.0 && p.is_finite())) {
        return Err(Error::invalid(format!("exponent must be a finite p >= 1, got {p}")));
    }
    if nodes < 2 {
        return Err(Error::invalid("Monte Carlo estimate needs at least 2 nodes"));
    }
    let d = points.dim();
    let mut z = vec![0.0; d];
    let mut sum = vec![0.0; ps.len()];
    let mut sum_sq = vec![0.0; ps.len()];
    for _ in 0..nodes {
        for zk in z.iter_mut() {
            *zk = stream.uniform();
        }
        let delta = local_unchecked(points, &z).abs();
        for (k, &p) in ps.iter().enumerate() {
            let v = if p == 2.0 { delta * delta } else { delta.powf(p) };
            sum[k] += v;
            sum_sq[k] += v * v;
        }
    }
    let m = nodes as f64;
    Ok(ps
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let mean = sum[k] / m;
            let var = ((sum_sq[k] - m * mean * mean) / (m - 1.0)).max(0.0);
            DiscrepancyEstimate {
                p: Exponent::Finite(p),
                value: mean.powf(1.0 / p),
                variant: Variant::MonteCarlo { nodes, stderr: (var / m).sqrt() },
            }
        })
        .collect())
}

pub fn lp_estimate(
    points: &PointSet,
    p: f64,
    nodes: usize,
    stream: &mut RngStream,
) -> Result<DiscrepancyEstimate> {
    Ok(lp_estimate_many(points, &[p], nodes, stream)?.remove(0))
}

/// Size guard for [`star_exact_small`]: `N^d` may not exceed this.
pub const STAR_GUARD: f64 = 1e7;

/// Exact star discrepancy by enumerating the grid of critical coordinates.
///
/// On each axis the candidates are the point coordinates together with 1.
/// At each candidate corner `z` both one-sided terms are evaluated:
/// `λ(z) − A_open(z)/N` (open box, reached from below) and
/// `A_closed(z)/N − λ(z)` (reached from above). Counts come from a
/// `d`-dimensional prefix-sum table over coordinate ranks.
pub fn star_exact_small(points: &PointSet) -> Result<DiscrepancyEstimate> {
    let n = points.len();
    if n == 0 {
        return Err(Error::invalid("point set is empty"));
    }
    let d = points.dim();
    let work = (n as f64).powi(d as i32);
    if work > STAR_GUARD {
        return Err(Error::TooLarge(format!(
            "N^d = {work:.3e} exceeds the exact star-discrepancy guard {STAR_GUARD:e}"
        )));
    }
    let axes: Vec<Vec<f64>> = (0..d)
        .map(|k| {
            let mut v: Vec<f64> = points.iter().map(|x| x[k]).collect();
            v.push(1.0);
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        })
        .collect();
    let dims: Vec<usize> = axes.iter().map(Vec::len).collect();
    let mut strides = vec![1usize; d];
    for k in (0..d.saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    let total: usize = dims.iter().product();
    let mut table = vec![0u32; total];
    for x in points.iter() {
        let idx: usize = (0..d)
            .map(|k| {
                let r = axes[k].binary_search_by(|v| v.total_cmp(&x[k])).expect("own coordinate");
                r * strides[k]
            })
            .sum();
        table[idx] += 1;
    }
    // prefix sums along every axis: table[g] = #{x : rank(x) <= g}
    for k in 0..d {
        let stride = strides[k];
        for g in 0..total {
            if !(g / stride).is_multiple_of(dims[k]) {
                table[g] += table[g - stride];
            }
        }
    }
    let diag_offset: usize = strides.iter().sum();
    let nf = n as f64;
    let mut best = 0.0f64;
    let mut idx = vec![0usize; d];
    for g in 0..total {
        let vol: f64 = idx.iter().enumerate().map(|(k, &i)| axes[k][i]).product();
        let closed = table[g] as f64 / nf;
        let open = if idx.iter().all(|&i| i > 0) { table[g - diag_offset] as f64 / nf } else { 0.0 };
        best = best.max(vol - open).max(closed - vol);
        for k in (0..d).rev() {
            idx[k] += 1;
            if idx[k] < dims[k] {
                break;
            }
            idx[k] = 0;
        }
    }
    Ok(DiscrepancyEstimate { p: Exponent::Star, value: best.min(1.0), variant: Variant::Exact })
}
