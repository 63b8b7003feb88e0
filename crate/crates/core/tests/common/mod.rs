//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use strata::hilbert::HilbertParams;
use strata::{PointSet, RngStream};

pub fn random_points(d: usize, n: usize, stream: &mut RngStream) -> PointSet {
    let coords = (0..n * d).map(|_| stream.uniform()).collect();
    PointSet::new(d, coords).unwrap()
}

/// `∫_0^1 (A(z)/N − z)^2 dz` for 1-d points, integrated exactly between
/// consecutive points.
pub fn l2_squared_1d_piecewise(xs: &[f64]) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut knots = vec![0.0];
    knots.extend(&s);
    knots.push(1.0);
    knots
        .windows(2)
        .enumerate()
        .map(|(j, w)| {
            let c = j as f64 / n;
            ((w[1] - c).powi(3) - (w[0] - c).powi(3)) / 3.0
        })
        .sum()
}

/// Midpoint rule for `∫ Δ_P(z)^2 dz` in two dimensions on a `k x k` grid.
/// Counts per cell come from a 2-d prefix table over grid slots.
pub fn l2_squared_2d_midpoint(points: &PointSet, k: usize) -> f64 {
    assert_eq!(points.dim(), 2);
    let n = points.len() as f64;
    // table[i][j] = #points with x < mid_i and y < mid_j
    let mid = |i: usize| (i as f64 + 0.5) / k as f64;
    let mut table = vec![0u32; k * k];
    for p in points.iter() {
        // first slots whose midpoint exceeds the coordinate
        let si = ((p[0] * k as f64 - 0.5).floor() + 1.0).max(0.0) as usize;
        let sj = ((p[1] * k as f64 - 0.5).floor() + 1.0).max(0.0) as usize;
        let si = (si.saturating_sub(1)..=si.min(k)).find(|&i| i == k || mid(i) > p[0]).unwrap();
        let sj = (sj.saturating_sub(1)..=sj.min(k)).find(|&j| j == k || mid(j) > p[1]).unwrap();
        if si < k && sj < k {
            table[si * k + sj] += 1;
        }
    }
    for i in 0..k {
        for j in 0..k {
            let mut v = table[i * k + j];
            if i > 0 {
                v += table[(i - 1) * k + j];
            }
            if j > 0 {
                v += table[i * k + j - 1];
            }
            if i > 0 && j > 0 {
                v -= table[(i - 1) * k + j - 1];
            }
            table[i * k + j] = v;
        }
    }
    let mut total = 0.0;
    for i in 0..k {
        for j in 0..k {
            let delta = table[i * k + j] as f64 / n - mid(i) * mid(j);
            total += delta * delta;
        }
    }
    total / (k * k) as f64
}

/// Kolmogorov–Smirnov distance of a sample to U[0,1).
pub fn ks_uniform(sample: &[f64]) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / n).max((i + 1) as f64 / n - x))
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value at level 0.01.
pub fn ks_critical_001(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

/// All `(d, K)` with `d >= 2` and `d K <= max_bits`.
pub fn small_curves(max_bits: u32) -> Vec<HilbertParams> {
    let mut out = Vec::new();
    for d in 2..=max_bits as usize {
        for k in 1..=(max_bits / d as u32) {
            out.push(HilbertParams::new(d, k).unwrap());
        }
    }
    out
}

/// Cells of the whole curve in index order.
pub fn curve_cells(p: &HilbertParams) -> Vec<Vec<u32>> {
    (0..p.cell_count()).map(|h| p.index_to_cell(h)).collect()
}

/// Checks that curve order visits every subcube once, and that consecutive
/// subcubes share a face.
pub fn check_bijective_adjacent(p: &HilbertParams) -> Result<(), String> {
    let cells = curve_cells(p);
    let side = p.side_cells();
    let mut seen = vec![false; p.cell_count() as usize];
    for (h, c) in cells.iter().enumerate() {
        let lin = c.iter().fold(0u64, |acc, &x| acc * side + x as u64) as usize;
        if seen[lin] {
            return Err(format!("d={} K={}: cell {c:?} visited twice (h={h})", p.dim(), p.depth()));
        }
        seen[lin] = true;
    }
    for (h, w) in cells.windows(2).enumerate() {
        let l1: u64 = w[0].iter().zip(&w[1]).map(|(&a, &b)| a.abs_diff(b) as u64).sum();
        if l1 != 1 {
            return Err(format!(
                "d={} K={}: cells {h} and {} are not face neighbours: {:?} {:?}",
                p.dim(),
                p.depth(),
                h + 1,
                w[0],
                w[1]
            ));
        }
    }
    Ok(())
}

/// Worst ratio `diam(H([a,b))) / (2 sqrt(d+3) (b-a)^{1/d})` over every
/// aligned dyadic interval, using bounding-box diagonals merged bottom-up.
/// The bounding-box diagonal bounds the diameter from above, so a ratio
/// `<= 1` certifies the locality inequality.
pub fn worst_dyadic_locality(p: &HilbertParams) -> f64 {
    let d = p.dim();
    let side = p.side_cells() as f64;
    let constant = 2.0 * (d as f64 + 3.0).sqrt();
    let mut level: Vec<(Vec<u32>, Vec<u32>)> = curve_cells(p)
        .into_iter()
        .map(|c| {
            let hi = c.iter().map(|&x| x + 1).collect();
            (c, hi)
        })
        .collect();
    let mut length = 1.0 / p.cell_count() as f64;
    let mut worst = 0.0f64;
    loop {
        let limit = constant * length.powf(1.0 / d as f64);
        for (lo, hi) in &level {
            let diag = lo
                .iter()
                .zip(hi)
                .map(|(&l, &h)| {
                    let e = (h - l) as f64 / side;
                    e * e
                })
                .sum::<f64>()
                .sqrt();
            worst = worst.max(diag / limit);
        }
        if level.len() == 1 {
            break;
        }
        level = level
            .chunks(2)
            .map(|pair| {
                let lo = pair[0].0.iter().zip(&pair[1].0).map(|(a, b)| *a.min(b)).collect();
                let hi = pair[0].1.iter().zip(&pair[1].1).map(|(a, b)| *a.max(b)).collect();
                (lo, hi)
            })
            .collect();
        length *= 2.0;
    }
    worst
}
