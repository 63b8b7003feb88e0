//! Seeded samplers: simple random, stratified over a partition, Latin
//! hypercube and Hilbert-curve (HSFC) sampling.

use std::fmt;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PointSet;
use crate::hilbert::hilbert_map;
use crate::partition::{CellKind, Partition, PartitionKind, PartitionSpec};
use crate::vdc::{scrambled_vdc, ScrambleTree};

/// Deterministic generator for one replication.
///
/// The ChaCha key is built from `(seed, replication, substream)`, so every
/// replication and every substream is an independent generator whose output
/// does not depend on how replications are scheduled.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    replication: u64,
    rng: ChaCha8Rng,
}

fn chacha_key(seed: u64, replication: u64, tag: u64) -> [u8; 32] {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&replication.to_le_bytes());
    key[16..24].copy_from_slice(&tag.to_le_bytes());
    key
}

impl RngStream {
    pub fn new(seed: u64, replication: u64) -> Self {
        RngStream { seed, replication, rng: ChaCha8Rng::from_seed(chacha_key(seed, replication, 0)) }
    }

    /// Independent generator number `tag` of this replication.
    pub fn substream(&self, tag: u64) -> RngStream {
        RngStream {
            seed: self.seed,
            replication: self.replication,
            rng: ChaCha8Rng::from_seed(chacha_key(self.seed, self.replication, tag + 1)),
        }
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum Strategy {
    SimpleRandom,
    Stratified { partition: PartitionSpec },
    Lhs,
    Hsfc { partition: PartitionSpec },
}

impl Strategy {
    /// Short name used in CSV output.
    pub fn label(&self) -> &'static str {
        match self {
            Strategy::SimpleRandom => "simple_random",
            Strategy::Stratified { partition } => match partition.kind {
                PartitionKind::Grid { .. } => "jittered",
                PartitionKind::RectGrid { .. } => "rect_grid",
                PartitionKind::Hsfc { .. } => "hsfc",
                PartitionKind::Trivial { .. } => "trivial",
            },
            Strategy::Lhs => "lhs",
            Strategy::Hsfc { .. } => "hsfc",
        }
    }

    pub fn partition(&self) -> Option<&PartitionSpec> {
        match self {
            Strategy::Stratified { partition } | Strategy::Hsfc { partition } => Some(partition),
            _ => None,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerSpec {
    #[serde(flatten)]
    pub strategy: Strategy,
    pub d: usize,
    pub n: usize,
    pub seed: u64,
}

impl SamplerSpec {
    pub fn simple_random(d: usize, n: usize, seed: u64) -> Self {
        SamplerSpec { strategy: Strategy::SimpleRandom, d, n, seed }
    }

    pub fn jittered(d: usize, m: usize, seed: u64) -> Self {
        let partition = PartitionSpec::grid(d, m);
        let n = m.saturating_pow(d as u32);
        SamplerSpec { strategy: Strategy::Stratified { partition }, d, n, seed }
    }

    pub fn stratified(partition: PartitionSpec, seed: u64) -> Self {
        let (d, n) = (partition.d, partition.cell_count());
        SamplerSpec { strategy: Strategy::Stratified { partition }, d, n, seed }
    }

    pub fn lhs(d: usize, n: usize, seed: u64) -> Self {
        SamplerSpec { strategy: Strategy::Lhs, d, n, seed }
    }

    pub fn hsfc(d: usize, n: usize, seed: u64) -> Self {
        SamplerSpec { strategy: Strategy::Hsfc { partition: PartitionSpec::hsfc(d, n) }, d, n, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::ZeroDimension);
        }
        if self.n == 0 {
            return Err(Error::invalid("sampler needs N >= 1"));
        }
        match &self.strategy {
            Strategy::SimpleRandom | Strategy::Lhs => Ok(()),
            Strategy::Stratified { partition } | Strategy::Hsfc { partition } => {
                partition.validate()?;
                if matches!(self.strategy, Strategy::Hsfc { .. })
                    && !matches!(partition.kind, PartitionKind::Hsfc { .. })
                {
                    return Err(Error::invalid("hsfc sampling needs an hsfc partition"));
                }
                if partition.d != self.d {
                    return Err(Error::DimensionMismatch { expected: self.d, found: partition.d });
                }
                if partition.cell_count() != self.n {
                    return Err(Error::invalid(format!(
                        "N = {} but the partition has {} cells",
                        self.n,
                        partition.cell_count()
                    )));
                }
                Ok(())
            }
        }
    }
}

/// A validated sampler with its partition built once.
#[derive(Debug, Clone)]
pub struct Sampler {
    spec: SamplerSpec,
    partition: Option<Partition>,
}

/// `lower + t (upper - lower)` kept strictly below `upper`.
#[inline]
fn lerp_below(lower: f64, upper: f64, t: f64) -> f64 {
    let x = lower + t * (upper - lower);
    if x < upper { x } else { upper.next_down().max(lower) }
}

impl Sampler {
    pub fn new(spec: SamplerSpec) -> Result<Self> {
        spec.validate()?;
        let partition = spec.strategy.partition().map(Partition::build).transpose()?;
        Ok(Sampler { spec, partition })
    }

    pub fn spec(&self) -> &SamplerSpec {
        &self.spec
    }

    pub fn partition(&self) -> Option<&Partition> {
        self.partition.as_ref()
    }

    /// Stream for replication `r` of this sampler's seed.
    pub fn stream(&self, replication: u64) -> RngStream {
        RngStream::new(self.spec.seed, replication)
    }

    pub fn sample(&self, stream: &mut RngStream) -> PointSet {
        let (d, n) = (self.spec.d, self.spec.n);
        let mut coords = Vec::with_capacity(n * d);
        match &self.spec.strategy {
            Strategy::SimpleRandom => {
                for _ in 0..n * d {
                    coords.push(stream.uniform());
                }
            }
            Strategy::Lhs => {
                let perms: Vec<Vec<usize>> = (0..d)
                    .map(|j| {
                        let mut sub = stream.substream(j as u64);
                        let mut p: Vec<usize> = (0..n).collect();
                        p.shuffle(&mut sub);
                        p
                    })
                    .collect();
                let nf = n as f64;
                for i in 0..n {
                    for perm in &perms {
                        let slot = perm[i] as f64;
                        coords.push(lerp_below(slot / nf, (slot + 1.0) / nf, stream.uniform()));
                    }
                }
            }
            Strategy::Stratified { .. } | Strategy::Hsfc { .. } => {
                let partition = self.partition.as_ref().expect("validated partition");
                self.sample_partition(partition, stream, &mut coords);
            }
        }
        PointSet::from_raw(d, coords)
    }

    fn sample_partition(&self, partition: &Partition, stream: &mut RngStream, coords: &mut Vec<f64>) {
        let n = partition.len();
        for cell in partition.cells() {
            match &cell.kind {
                CellKind::AxisBox { lower, upper } => {
                    for (&l, &u) in lower.iter().zip(upper) {
                        coords.push(lerp_below(l, u, stream.uniform()));
                    }
                }
                CellKind::Whole => {
                    for _ in 0..self.spec.d {
                        coords.push(stream.uniform());
                    }
                }
                CellKind::HsfcInterval { .. } => {
                    // u ~ U(I_i) resolved to a uniform curve cell, then a
                    // uniform point inside that subcube
                    let params = partition.hilbert().expect("hsfc partition carries curve params");
                    let range = params.cells_of_interval(n, cell.index);
                    let h = stream.gen_range(range);
                    let side = params.side_cells() as f64;
                    for c in params.index_to_cell(h) {
                        let c = c as f64;
                        coords.push(lerp_below(c / side, (c + 1.0) / side, stream.uniform()));
                    }
                }
            }
        }
    }
}

/// One-shot sampling.
pub fn sample(spec: &SamplerSpec, stream: &mut RngStream) -> Result<PointSet> {
    Ok(Sampler::new(spec.clone())?.sample(stream))
}

/// HSFC sample driven by scrambled base-2 van der Corput inputs: the first
/// `N` scrambled points are sorted, so the `i`-th lies in `[(i-1)/N, i/N)`
/// when `N` is a power of two, and each is mapped through the curve.
pub fn scrambled_hsfc_sample(partition: &Partition, tree: &ScrambleTree) -> Result<PointSet> {
    let params = partition
        .hilbert()
        .ok_or_else(|| Error::invalid("scrambled HSFC sampling needs an hsfc partition"))?;
    let n = partition.len() as u64;
    let truncation = crate::vdc::default_truncation(tree.base());
    let mut us = (1..=n)
        .map(|i| scrambled_vdc(tree, i, truncation))
        .collect::<Result<Vec<_>>>()?;
    us.sort_by(f64::total_cmp);
    let mut coords = Vec::with_capacity(partition.len() * params.dim());
    for u in us {
        coords.extend(hilbert_map(params, u)?.into_inner());
    }
    Ok(PointSet::from_raw(params.dim(), coords))
}

/// Writes the point-file format: a `d N` header, then one point per line.
pub fn write_point_file<W: Write>(mut w: W, points: &PointSet) -> Result<()> {
    writeln!(w, "{} {}", points.dim(), points.len())?;
    for x in points.iter() {
        let line: Vec<String> = x.iter().map(|v| format!("{v:?}")).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn read_point_file<R: BufRead>(r: R) -> Result<PointSet> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("missing header".into()))??;
    let mut fields = header.split_whitespace();
    let mut field = |name: &str| -> Result<usize> {
        fields
            .next()
            .ok_or_else(|| Error::Parse(format!("header lacks {name}")))?
            .parse()
            .map_err(|e| Error::Parse(format!("bad {name} in header: {e}")))
    };
    let d = field("d")?;
    let n = field("N")?;
    let mut coords = Vec::with_capacity(d * n);
    for (row, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let before = coords.len();
        for tok in line.split_whitespace() {
            coords.push(
                tok.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", row + 2)))?,
            );
        }
        if coords.len() - before != d {
            return Err(Error::Parse(format!(
                "line {} has {} coordinates, expected {d}",
                row + 2,
                coords.len() - before
            )));
        }
    }
    if coords.len() != d * n {
        return Err(Error::Parse(format!("expected {n} points, found {}", coords.len() / d.max(1))));
    }
    PointSet::new(d, coords)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::is_stratified;

    #[test]
    fn jittered_points_in_own_quadrant() {
        let s = Sampler::new(SamplerSpec::jittered(2, 2, 5)).unwrap();
        for r in 0..50 {
            let pts = s.sample(&mut s.stream(r));
            assert!(is_stratified(s.partition().unwrap(), &pts).unwrap());
        }
    }

    #[test]
    fn lhs_latin_property() {
        let s = Sampler::new(SamplerSpec::lhs(2, 4, 11)).unwrap();
        for r in 0..100 {
            let pts = s.sample(&mut s.stream(r));
            for k in 0..2 {
                let mut slots: Vec<usize> =
                    pts.iter().map(|x| (x[k] * 4.0).floor() as usize).collect();
                slots.sort_unstable();
                assert_eq!(slots, vec![0, 1, 2, 3]);
            }
        }
    }

    #[test]
    fn trivial_partition_is_simple_random() {
        let a = Sampler::new(SamplerSpec::stratified(PartitionSpec::trivial(3, 7), 99)).unwrap();
        let b = Sampler::new(SamplerSpec::simple_random(3, 7, 99)).unwrap();
        for r in 0..5 {
            assert_eq!(a.sample(&mut a.stream(r)), b.sample(&mut b.stream(r)));
        }
    }

    #[test]
    fn same_seed_same_points() {
        for spec in [
            SamplerSpec::simple_random(2, 9, 1),
            SamplerSpec::jittered(2, 3, 1),
            SamplerSpec::lhs(3, 9, 1),
            SamplerSpec::hsfc(2, 9, 1),
        ] {
            let s = Sampler::new(spec).unwrap();
            let a = s.sample(&mut s.stream(3));
            let b = s.sample(&mut s.stream(3));
            assert_eq!(a.as_flat(), b.as_flat());
            assert_ne!(a.as_flat(), s.sample(&mut s.stream(4)).as_flat());
        }
    }

    #[test]
    fn rejects_count_mismatch() {
        let mut spec = SamplerSpec::jittered(2, 3, 0);
        spec.n = 10;
        assert!(Sampler::new(spec).is_err());
        let spec = SamplerSpec {
            strategy: Strategy::Hsfc { partition: PartitionSpec::grid(2, 2) },
            d: 2,
            n: 4,
            seed: 0,
        };
        assert!(Sampler::new(spec).is_err());
        let spec = SamplerSpec {
            strategy: Strategy::Stratified { partition: PartitionSpec::grid(3, 2) },
            d: 2,
            n: 8,
            seed: 0,
        };
        assert!(matches!(Sampler::new(spec), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn point_file_roundtrip() {
        let s = Sampler::new(SamplerSpec::simple_random(3, 5, 2)).unwrap();
        let pts = s.sample(&mut s.stream(0));
        let mut buf = Vec::new();
        write_point_file(&mut buf, &pts).unwrap();
        assert!(buf.starts_with(b"3 5\n"));
        let back = read_point_file(buf.as_slice()).unwrap();
        assert_eq!(back, pts);
    }

    #[test]
    fn point_file_errors() {
        assert!(read_point_file("".as_bytes()).is_err());
        assert!(read_point_file("2 1\n0.5\n".as_bytes()).is_err());
        assert!(read_point_file("2 2\n0.5 0.5\n".as_bytes()).is_err());
        assert!(read_point_file("1 1\n1.5\n".as_bytes()).is_err());
        assert!(read_point_file("1 1\nabc\n".as_bytes()).is_err());
    }

    #[test]
    fn sampler_spec_json() {
        let spec = SamplerSpec::jittered(2, 4, 7);
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(
            json,
            r#"{"strategy":"stratified","partition":{"d":2,"kind":"grid","m":4},"d":2,"n":16,"seed":7}"#
        );
        let back: SamplerSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
    }
}
