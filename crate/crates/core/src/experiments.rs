//! Replicated moment estimates, closed-form bounds and log-log rate fits.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::discrepancy::{l2_squared, lp_estimate};
use crate::error::{Error, Result};
use crate::partition::{PartitionKind, PartitionSpec};
use crate::sampling::{Sampler, SamplerSpec, Strategy};
use crate::sobolev::{sample_mean, Integrand, IntegrandId};

/// Closed-form upper bounds on mean-square (and `p`-th moment) errors.
///
/// The string identifiers (`thm3.3`, `cor3.4`, ...) are the names accepted
/// on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundId {
    /// `d c2 / N^{1+1/d}` for any equal-measure partition.
    GeneralPartition,
    /// `d / N^{1+1/d}` for the isometric grid.
    IsometricGrid,
    /// `2d sqrt(d+3) / N^{1+1/d}` for the Hilbert curve partition.
    Hsfc,
    /// `C / (N − 1)` for Latin hypercube samples.
    LatinHypercube,
    /// `d^{3/2} / N` for simple random sampling.
    SimpleRandom,
    /// `d^{p/2} c2^{p/2} / N^{p/2 + p/(2d)}`.
    GeneralPartitionMoment,
    /// `d^{p/2} / N^{p/2 + p/(2d)}`.
    IsometricGridMoment,
    /// `(2d sqrt(d+3))^{p/2} / N^{p/2 + p/(2d)}`.
    HsfcMoment,
    /// `2^{p/2} Γ((1+p)/2) / sqrt(π) · (2/(2+p))^d · N^{−p/2}`.
    SimpleRandomMoment,
}

impl BoundId {
    pub const ALL: [BoundId; 9] = [
        BoundId::GeneralPartition,
        BoundId::IsometricGrid,
        BoundId::Hsfc,
        BoundId::LatinHypercube,
        BoundId::SimpleRandom,
        BoundId::GeneralPartitionMoment,
        BoundId::IsometricGridMoment,
        BoundId::HsfcMoment,
        BoundId::SimpleRandomMoment,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            BoundId::GeneralPartition => "thm3.3",
            BoundId::IsometricGrid => "cor3.4",
            BoundId::Hsfc => "cor3.5",
            BoundId::LatinHypercube => "thm3.6",
            BoundId::SimpleRandom => "cor3.8",
            BoundId::GeneralPartitionMoment => "thm4.1",
            BoundId::IsometricGridMoment => "cor4.2",
            BoundId::HsfcMoment => "cor4.3",
            BoundId::SimpleRandomMoment => "cor4.5",
        }
    }
}

impl fmt::Display for BoundId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase();
        BoundId::ALL
            .into_iter()
            .find(|b| b.as_str() == key)
            .ok_or_else(|| Error::invalid(format!("unknown bound `{s}`")))
    }
}

#[derive(Debug, Clone, Default)]
pub struct BoundParams {
    pub d: usize,
    pub n: usize,
    pub p: Option<f64>,
    pub partition: Option<PartitionSpec>,
    /// Variance constant `∫(f − I(f))²`.
    pub c: Option<f64>,
}

impl BoundParams {
    pub fn new(d: usize, n: usize) -> Self {
        BoundParams { d, n, ..Default::default() }
    }

    pub fn with_p(mut self, p: f64) -> Self {
        self.p = Some(p);
        self
    }

    pub fn with_partition(mut self, partition: PartitionSpec) -> Self {
        self.partition = Some(partition);
        self
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = Some(c);
        self
    }
}

pub fn bound(id: BoundId, params: &BoundParams) -> Result<f64> {
    if params.d == 0 {
        return Err(Error::ZeroDimension);
    }
    if params.n == 0 {
        return Err(Error::invalid("bound needs N >= 1"));
    }
    let d = params.d as f64;
    let n = params.n as f64;
    let missing = |param| Error::MissingParameter { param, bound: id.to_string() };
    let p = || -> Result<f64> {
        let p = params.p.ok_or_else(|| missing("p"))?;
        if p >= 1.0 && p.is_finite() {
            Ok(p)
        } else {
            Err(Error::invalid(format!("bound exponent must be a finite p >= 1, got {p}")))
        }
    };
    let c2 = || -> Result<f64> {
        let spec = params.partition.as_ref().ok_or_else(|| missing("partition"))?;
        spec.validate()?;
        spec.c2().ok_or_else(|| Error::invalid("partition has no diameter constant"))
    };
    let hsfc_constant = 2.0 * d * (d + 3.0).sqrt();
    let l2_rate = n.powf(1.0 + 1.0 / d);
    let moment_rate = |p: f64| n.powf(p / 2.0 + p / (2.0 * d));
    Ok(match id {
        BoundId::GeneralPartition => d * c2()? / l2_rate,
        BoundId::IsometricGrid => d / l2_rate,
        BoundId::Hsfc => hsfc_constant / l2_rate,
        BoundId::LatinHypercube => {
            let c = params.c.ok_or_else(|| missing("c"))?;
            if params.n < 2 {
                return Err(Error::invalid("Latin hypercube bound needs N >= 2"));
            }
            c / (n - 1.0)
        }
        BoundId::SimpleRandom => d.powf(1.5) / n,
        BoundId::GeneralPartitionMoment => {
            let p = p()?;
            (d * c2()?).powf(p / 2.0) / moment_rate(p)
        }
        BoundId::IsometricGridMoment => {
            let p = p()?;
            d.powf(p / 2.0) / moment_rate(p)
        }
        BoundId::HsfcMoment => {
            let p = p()?;
            hsfc_constant.powf(p / 2.0) / moment_rate(p)
        }
        BoundId::SimpleRandomMoment => {
            let p = p()?;
            2f64.powf(p / 2.0) / std::f64::consts::PI.sqrt()
                * gamma((1.0 + p) / 2.0)
                * (2.0 / (2.0 + p)).powf(d)
                * n.powf(-p / 2.0)
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    /// `E[L_p^p]`; exact for `p = 2`, Monte Carlo otherwise.
    LpPth,
    SquaredL2,
    /// `E[(Î(f) − I(f))²]`.
    Mse(IntegrandId),
    /// Sample variance of `Î(f)` across replications.
    VarianceOfMean(IntegrandId),
}

impl Target {
    /// Parses a target name; integrand targets take `integrand`.
    pub fn parse(name: &str, integrand: Option<IntegrandId>) -> Result<Self> {
        let need = || {
            integrand.ok_or_else(|| Error::invalid(format!("target `{name}` needs an integrand")))
        };
        match name {
            "lp" | "lp_discrepancy_pth_power" => Ok(Target::LpPth),
            "squared_l2" | "l2" => Ok(Target::SquaredL2),
            "mse" | "mse_integration" => Ok(Target::Mse(need()?)),
            "variance" | "variance_of_mean" => Ok(Target::VarianceOfMean(need()?)),
            _ => Err(Error::invalid(format!("unknown target `{name}`"))),
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::LpPth => f.write_str("lp_discrepancy_pth_power"),
            Target::SquaredL2 => f.write_str("squared_l2"),
            Target::Mse(id) => write!(f, "mse_integration({})", id.name()),
            Target::VarianceOfMean(id) => write!(f, "variance_of_mean({})", id.name()),
        }
    }
}

/// Default Monte Carlo node count for `L_p` with `p ≠ 2`.
pub const DEFAULT_NODES: usize = 10_000;

#[derive(Debug, Clone)]
pub struct MomentSpec {
    pub sampler: SamplerSpec,
    pub p: f64,
    pub target: Target,
    pub reps: usize,
    pub nodes: usize,
}

impl MomentSpec {
    pub fn new(sampler: SamplerSpec, target: Target, reps: usize) -> Self {
        MomentSpec { sampler, p: 2.0, target, reps, nodes: DEFAULT_NODES }
    }

    pub fn with_p(mut self, p: f64) -> Self {
        self.p = p;
        self
    }

    pub fn with_nodes(mut self, nodes: usize) -> Self {
        self.nodes = nodes;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps < 2 {
            return Err(Error::invalid(format!("need at least 2 replications, got {}", self.reps)));
        }
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(Error::invalid(format!("p must be a finite value >= 1, got {}", self.p)));
        }
        if matches!(self.target, Target::SquaredL2 | Target::Mse(_)) && self.p != 2.0 {
            return Err(Error::invalid(format!("target {} requires p = 2", self.target)));
        }
        if self.target == Target::LpPth && self.p != 2.0 && self.nodes < 2 {
            return Err(Error::invalid("Monte Carlo L_p needs at least 2 nodes"));
        }
        self.sampler.validate()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentReport {
    pub strategy: String,
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub p: f64,
    pub target: String,
    pub reps: usize,
    pub seed: u64,
    pub estimate: f64,
    pub stderr: f64,
    pub bound: Option<f64>,
    pub bound_id: Option<String>,
    /// `bound / estimate`.
    pub margin: Option<f64>,
    #[serde(skip)]
    pub runtime: Duration,
}

pub const CSV_HEADER: &str = "strategy,d,N,p,target,reps,seed,estimate,stderr,bound,bound_id,margin";

/// 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

impl MomentReport {
    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(fmt_float).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.strategy,
            self.d,
            self.n,
            fmt_float(self.p),
            self.target,
            self.reps,
            self.seed,
            fmt_float(self.estimate),
            fmt_float(self.stderr),
            opt(self.bound),
            self.bound_id.as_deref().unwrap_or(""),
            opt(self.margin),
        )
    }

    /// `estimate + k·stderr <= bound`; `None` without a bound.
    pub fn within_bound(&self, k: f64) -> Option<bool> {
        self.bound.map(|b| self.estimate + k * self.stderr <= b)
    }
}

/// Mean and CLT standard error.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let r = values.len() as f64;
    let mean = values.iter().sum::<f64>() / r;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (r - 1.0);
    (mean, (var / r).sqrt())
}

/// The bound matching a sampler and target, if one applies.
pub fn infer_bound(spec: &MomentSpec) -> Result<Option<(BoundId, f64)>> {
    let s = &spec.sampler;
    let params = BoundParams::new(s.d, s.n).with_p(spec.p);
    let family = match &s.strategy {
        Strategy::SimpleRandom => Family::Simple,
        Strategy::Lhs => Family::Lhs,
        Strategy::Stratified { partition } | Strategy::Hsfc { partition } => match partition.kind {
            PartitionKind::Grid { .. } => Family::Grid,
            PartitionKind::RectGrid { .. } => Family::General(partition.clone()),
            PartitionKind::Hsfc { .. } => Family::Hsfc,
            PartitionKind::Trivial { .. } => Family::Simple,
        },
    };
    let l2_id = |family: &Family| match family {
        Family::Simple => Some(BoundId::SimpleRandom),
        Family::Grid => Some(BoundId::IsometricGrid),
        Family::Hsfc => Some(BoundId::Hsfc),
        Family::General(_) => Some(BoundId::GeneralPartition),
        Family::Lhs => None,
    };
    let with_partition = |family: &Family, params: BoundParams| match family {
        Family::General(p) => params.with_partition(p.clone()),
        _ => params,
    };
    let chosen = match spec.target {
        Target::SquaredL2 => l2_id(&family).map(|id| (id, 1.0)),
        Target::LpPth => match family {
            Family::Simple => Some((BoundId::SimpleRandomMoment, 1.0)),
            Family::Grid => Some((BoundId::IsometricGridMoment, 1.0)),
            Family::Hsfc => Some((BoundId::HsfcMoment, 1.0)),
            Family::General(_) => Some((BoundId::GeneralPartitionMoment, 1.0)),
            Family::Lhs => None,
        },
        Target::Mse(f) | Target::VarianceOfMean(f) => {
            let integrand = Integrand::new(f, s.d)?;
            match family {
                Family::Lhs if s.n >= 2 => {
                    let params = params.clone().with_c(integrand.variance_constant());
                    return Ok(Some((BoundId::LatinHypercube, bound(BoundId::LatinHypercube, &params)?)));
                }
                Family::Lhs => None,
                _ => l2_id(&family).map(|id| (id, integrand.norm_h1k().powi(2))),
            }
        }
    };
    match chosen {
        Some((id, scale)) => {
            let params = with_partition(&family, params);
            Ok(Some((id, scale * bound(id, &params)?)))
        }
        None => Ok(None),
    }
}

enum Family {
    Simple,
    Grid,
    Hsfc,
    General(PartitionSpec),
    Lhs,
}

const NODE_SUBSTREAM: u64 = 1 << 32;

/// Runs `reps` independent replications, one generator per replication, and
/// reduces in replication order so the result does not depend on the thread
/// count.
pub fn estimate_moment(spec: &MomentSpec) -> Result<MomentReport> {
    spec.validate()?;
    let start = Instant::now();
    let sampler = Sampler::new(spec.sampler.clone())?;
    let integrand = match spec.target {
        Target::Mse(id) | Target::VarianceOfMean(id) => Some(Integrand::new(id, spec.sampler.d)?),
        _ => None,
    };
    let values: Vec<f64> = (0..spec.reps as u64)
        .into_par_iter()
        .map(|r| {
            let mut stream = sampler.stream(r);
            let points = sampler.sample(&mut stream);
            match spec.target {
                Target::SquaredL2 => l2_squared(&points),
                Target::LpPth if spec.p == 2.0 => l2_squared(&points),
                Target::LpPth => {
                    let mut nodes = stream.substream(NODE_SUBSTREAM);
                    lp_estimate(&points, spec.p, spec.nodes, &mut nodes).map(|e| e.pth_power())
                }
                Target::Mse(_) => {
                    let f = integrand.as_ref().expect("integrand target");
                    let err = sample_mean(f, &points) - f.exact_integral();
                    Ok(err * err)
                }
                Target::VarianceOfMean(_) => Ok(sample_mean(integrand.as_ref().expect("integrand target"), &points)),
            }
        })
        .collect::<Result<_>>()?;
    let (estimate, stderr) = match spec.target {
        Target::VarianceOfMean(_) => {
            let (mean, _) = mean_stderr(&values);
            let dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
            let r = values.len() as f64;
            let var = dev.iter().sum::<f64>() / (r - 1.0);
            let (_, se) = mean_stderr(&dev);
            (var, se)
        }
        _ => mean_stderr(&values),
    };
    let inferred = infer_bound(spec)?;
    let bound = inferred.map(|(_, b)| b);
    Ok(MomentReport {
        strategy: spec.sampler.strategy.label().to_string(),
        d: spec.sampler.d,
        n: spec.sampler.n,
        p: spec.p,
        target: spec.target.to_string(),
        reps: spec.reps,
        seed: spec.sampler.seed,
        estimate,
        stderr,
        bound,
        bound_id: inferred.map(|(id, _)| id.to_string()),
        margin: bound.filter(|_| estimate > 0.0).map(|b| b / estimate),
        runtime: start.elapsed(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub pairs: Vec<(usize, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least-squares fit of `log(estimate) = intercept + slope · log(N)`.
pub fn fit_rate(pairs: &[(usize, f64)]) -> Result<RateFit> {
    if pairs.len() < 3 {
        return Err(Error::invalid(format!("rate fit needs at least 3 pairs, got {}", pairs.len())));
    }
    if let Some((n, v)) = pairs.iter().find(|(n, v)| *n == 0 || v.is_nan() || *v <= 0.0) {
        return Err(Error::invalid(format!("rate fit needs positive values, got ({n}, {v})")));
    }
    let xs: Vec<f64> = pairs.iter().map(|(n, _)| (*n as f64).ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|(_, v)| v.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("rate fit needs at least two distinct N"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(RateFit { pairs: pairs.to_vec(), slope, intercept, r_squared })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_bound_values() {
        let v = bound(BoundId::IsometricGrid, &BoundParams::new(2, 16)).unwrap();
        assert!((v - 0.03125).abs() < 1e-15);
        let v = bound(BoundId::Hsfc, &BoundParams::new(2, 16)).unwrap();
        assert!((v - 4.0 * 5f64.sqrt() / 64.0).abs() < 1e-15);
        assert!((v - 0.13975).abs() < 1e-5);
        let v = bound(BoundId::SimpleRandomMoment, &BoundParams::new(1, 10).with_p(2.0)).unwrap();
        assert!((v - 0.05).abs() < 1e-14);
    }

    #[test]
    fn moment_bounds_reduce_at_p_two() {
        for d in 2..5 {
            for n in [16usize, 81, 256] {
                let l2 = bound(BoundId::IsometricGrid, &BoundParams::new(d, n)).unwrap();
                let m = bound(BoundId::IsometricGridMoment, &BoundParams::new(d, n).with_p(2.0)).unwrap();
                assert!((l2 - m).abs() <= 1e-15 * l2);
                let l2 = bound(BoundId::Hsfc, &BoundParams::new(d, n)).unwrap();
                let m = bound(BoundId::HsfcMoment, &BoundParams::new(d, n).with_p(2.0)).unwrap();
                assert!((l2 - m).abs() <= 1e-14 * l2);
            }
        }
    }

    #[test]
    fn missing_parameters() {
        assert!(matches!(
            bound(BoundId::LatinHypercube, &BoundParams::new(2, 16)),
            Err(Error::MissingParameter { param: "c", .. })
        ));
        assert!(matches!(
            bound(BoundId::GeneralPartition, &BoundParams::new(2, 16)),
            Err(Error::MissingParameter { param: "partition", .. })
        ));
        assert!(matches!(
            bound(BoundId::IsometricGridMoment, &BoundParams::new(2, 16)),
            Err(Error::MissingParameter { param: "p", .. })
        ));
    }

    #[test]
    fn bound_id_names_roundtrip() {
        for id in BoundId::ALL {
            assert_eq!(id.as_str().parse::<BoundId>().unwrap(), id);
        }
        assert!("thm9.9".parse::<BoundId>().is_err());
    }

    #[test]
    fn exact_power_laws() {
        let pairs: Vec<(usize, f64)> = [16usize, 64, 256, 1024].iter().map(|&n| (n, (n as f64).powf(-1.5))).collect();
        let fit = fit_rate(&pairs).unwrap();
        assert!((fit.slope + 1.5).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        let pairs: Vec<(usize, f64)> = [3usize, 10, 50].iter().map(|&n| (n, 0.3 / n as f64)).collect();
        let fit = fit_rate(&pairs).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-12);
        assert!((fit.intercept - 0.3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn fit_rejects_bad_pairs() {
        assert!(fit_rate(&[(1, 1.0), (2, 0.5)]).is_err());
        assert!(fit_rate(&[(1, 1.0), (2, 0.0), (4, 0.25)]).is_err());
        assert!(fit_rate(&[(4, 1.0), (4, 0.5), (4, 0.25)]).is_err());
    }

    #[test]
    fn moment_spec_validation() {
        let s = SamplerSpec::simple_random(2, 4, 0);
        assert!(MomentSpec::new(s.clone(), Target::SquaredL2, 1).validate().is_err());
        assert!(MomentSpec::new(s.clone(), Target::SquaredL2, 10).with_p(3.0).validate().is_err());
        assert!(MomentSpec::new(s.clone(), Target::LpPth, 10).with_p(0.5).validate().is_err());
        assert!(MomentSpec::new(s, Target::LpPth, 10).with_p(3.0).validate().is_ok());
    }

    #[test]
    fn inferred_bounds() {
        let spec = MomentSpec::new(SamplerSpec::jittered(2, 4, 0), Target::SquaredL2, 10);
        let (id, b) = infer_bound(&spec).unwrap().unwrap();
        assert_eq!(id, BoundId::IsometricGrid);
        assert!((b - 0.03125).abs() < 1e-15);
        let spec = MomentSpec::new(SamplerSpec::lhs(2, 16, 0), Target::VarianceOfMean(IntegrandId::F1), 10);
        let (id, b) = infer_bound(&spec).unwrap().unwrap();
        assert_eq!(id, BoundId::LatinHypercube);
        assert!((b - 7.0 / 144.0 / 15.0).abs() < 1e-16);
        let spec = MomentSpec::new(SamplerSpec::lhs(2, 16, 0), Target::SquaredL2, 10);
        assert!(infer_bound(&spec).unwrap().is_none());
        let spec = MomentSpec::new(SamplerSpec::stratified(PartitionSpec::rect_grid(vec![2, 3]), 0), Target::LpPth, 10)
            .with_p(3.0);
        assert_eq!(infer_bound(&spec).unwrap().unwrap().0, BoundId::GeneralPartitionMoment);
    }

    #[test]
    fn report_csv_shape() {
        let spec = MomentSpec::new(SamplerSpec::jittered(2, 2, 3), Target::SquaredL2, 20);
        let r = estimate_moment(&spec).unwrap();
        let row = r.csv_row();
        assert_eq!(row.split(',').count(), CSV_HEADER.split(',').count());
        assert!(row.starts_with("jittered,2,4,"));
        assert!(row.contains(",cor3.4,"));
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["N"], 4);
        assert!(json.get("runtime").is_none());
    }
}
