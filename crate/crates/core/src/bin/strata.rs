//! Command-line front end: sampling, discrepancies, replicated moment
//! estimates, rate sweeps and closed-form bounds.
//!
//! Exit codes: 0 on success, 2 on argument errors, 1 on guard violations
//! and I/O failures.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use strata::discrepancy::{l2_exact, lp_estimate, star_exact_small};
use strata::experiments::{
    bound, estimate_moment, fit_rate, BoundId, BoundParams, MomentSpec, Target, CSV_HEADER,
    DEFAULT_NODES,
};
use strata::sampling::{read_point_file, write_point_file};
use strata::sobolev::IntegrandId;
use strata::{Error, PartitionSpec, RngStream, Sampler, SamplerSpec, Strategy};

#[derive(Parser)]
#[command(name = "strata", version, about = "Stratified sampling and discrepancy experiments")]
struct Cli {
    /// Worker threads for replications (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw one point set and write it in point-file format.
    Sample {
        #[command(flatten)]
        sampler: SamplerArgs,
        #[arg(long)]
        n: usize,
        /// Replication index of the generator stream.
        #[arg(long, default_value_t = 0)]
        replication: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Discrepancy of a point file as JSON.
    Discrepancy {
        #[arg(long = "in")]
        input: PathBuf,
        /// `2` (exact), any finite p >= 1 (Monte Carlo) or `star` (exact).
        #[arg(long)]
        p: String,
        #[arg(long, default_value_t = DEFAULT_NODES)]
        nodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Replicated moment estimate with its matching bound.
    Expected {
        #[command(flatten)]
        sampler: SamplerArgs,
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        moment: MomentArgs,
    },
    /// Moment estimates over several N and a log-log slope fit.
    Rate {
        #[command(flatten)]
        sampler: SamplerArgs,
        /// Comma-separated sample sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[command(flatten)]
        moment: MomentArgs,
        /// Accepted distance between fitted and theoretical slope.
        #[arg(long, default_value_t = 0.2)]
        tolerance: f64,
    },
    /// Evaluate a closed-form bound.
    Bounds {
        #[arg(long)]
        theorem: String,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: Option<f64>,
        /// Variance constant for the Latin hypercube bound.
        #[arg(long)]
        c: Option<f64>,
        /// Axis counts of a rectangular grid partition (comma-separated).
        #[arg(long, value_delimiter = ',')]
        m: Vec<usize>,
        /// Partition as JSON, e.g. `{"d":2,"kind":"grid","m":4}`.
        #[arg(long)]
        partition: Option<String>,
    },
}

#[derive(Args, Clone)]
struct SamplerArgs {
    /// simple_random, jittered (alias stratified, grid), rect_grid, trivial, lhs or hsfc.
    #[arg(long)]
    strategy: String,
    #[arg(long)]
    d: usize,
    /// Grid side (jittered) or comma-separated axis counts (rect_grid).
    #[arg(long, value_delimiter = ',')]
    m: Vec<usize>,
    /// Hilbert curve depth for hsfc.
    #[arg(long, alias = "base-depth")]
    depth: Option<u32>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct MomentArgs {
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// lp_discrepancy_pth_power, squared_l2, mse_integration or variance_of_mean.
    #[arg(long)]
    target: String,
    /// Integrand for mse/variance targets: f1, f2 or f3.
    #[arg(long)]
    integrand: Option<String>,
    #[arg(long)]
    reps: usize,
    #[arg(long, default_value_t = DEFAULT_NODES)]
    nodes: usize,
}

fn integer_root(n: usize, d: usize) -> Option<usize> {
    let guess = (n as f64).powf(1.0 / d as f64).round() as usize;
    (guess.saturating_sub(1)..=guess + 1).find(|m| m.checked_pow(d as u32) == Some(n))
}

impl SamplerArgs {
    fn spec(&self, n: usize) -> strata::Result<SamplerSpec> {
        let (d, seed) = (self.d, self.seed);
        let single_m = || -> strata::Result<usize> {
            match self.m.as_slice() {
                [] => integer_root(n, d).ok_or_else(|| {
                    Error::InvalidArgument(format!("N = {n} is not a perfect {d}-th power; pass --m"))
                }),
                [m] => Ok(*m),
                _ => Err(Error::InvalidArgument("jittered sampling takes a single --m".into())),
            }
        };
        let spec = match self.strategy.as_str() {
            "simple_random" | "random" => SamplerSpec::simple_random(d, n, seed),
            "jittered" | "stratified" | "grid" => {
                let partition = PartitionSpec::grid(d, single_m()?);
                SamplerSpec { strategy: Strategy::Stratified { partition }, d, n, seed }
            }
            "rect_grid" => {
                let partition = PartitionSpec { d, kind: strata::PartitionKind::RectGrid { m: self.m.clone() } };
                SamplerSpec { strategy: Strategy::Stratified { partition }, d, n, seed }
            }
            "trivial" => SamplerSpec::stratified(PartitionSpec::trivial(d, n), seed),
            "lhs" => SamplerSpec::lhs(d, n, seed),
            "hsfc" => {
                let partition = match self.depth {
                    Some(k) => PartitionSpec::hsfc_with_depth(d, n, k),
                    None => PartitionSpec::hsfc(d, n),
                };
                SamplerSpec { strategy: Strategy::Hsfc { partition }, d, n, seed }
            }
            other => return Err(Error::InvalidArgument(format!("unknown strategy `{other}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl MomentArgs {
    fn spec(&self, sampler: SamplerSpec) -> strata::Result<MomentSpec> {
        let integrand = self.integrand.as_deref().map(str::parse::<IntegrandId>).transpose()?;
        let target = Target::parse(&self.target, integrand)?;
        let spec = MomentSpec::new(sampler, target, self.reps).with_p(self.p).with_nodes(self.nodes);
        spec.validate()?;
        Ok(spec)
    }
}

/// Slope predicted by the bound family for a target.
fn theoretical_slope(spec: &MomentSpec) -> f64 {
    let d = spec.sampler.d as f64;
    let p = spec.p;
    let stratified = matches!(
        spec.sampler.strategy.partition().map(|p| &p.kind),
        Some(strata::PartitionKind::Grid { .. })
            | Some(strata::PartitionKind::RectGrid { .. })
            | Some(strata::PartitionKind::Hsfc { .. })
    );
    match (spec.target, stratified) {
        (Target::LpPth, true) => -(p / 2.0 + p / (2.0 * d)),
        (Target::LpPth, false) => -p / 2.0,
        (_, true) => -(1.0 + 1.0 / d),
        (_, false) => -1.0,
    }
}

fn write_out(out: &Option<PathBuf>, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match out {
        Some(path) => {
            let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(f);
            body(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            body(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Sample { sampler, n, replication, out } => {
            let sampler = Sampler::new(sampler.spec(n)?)?;
            let points = sampler.sample(&mut sampler.stream(replication));
            write_out(&out, |w| Ok(write_point_file(w, &points)?))
        }
        Command::Discrepancy { input, p, nodes, seed } => {
            let f = File::open(&input).with_context(|| format!("opening {}", input.display()))?;
            let points = read_point_file(BufReader::new(f))?;
            let estimate = match p.as_str() {
                "star" | "inf" => star_exact_small(&points)?,
                _ => {
                    let p: f64 = p
                        .parse()
                        .map_err(|_| Error::InvalidArgument(format!("--p must be a number or `star`, got `{p}`")))?;
                    if p == 2.0 {
                        l2_exact(&points)?
                    } else {
                        lp_estimate(&points, p, nodes, &mut RngStream::new(seed, 0))?
                    }
                }
            };
            println!("{}", estimate.to_json());
            Ok(())
        }
        Command::Expected { sampler, n, moment } => {
            let spec = moment.spec(sampler.spec(n)?)?;
            let report = estimate_moment(&spec)?;
            println!("{}", serde_json::to_string(&report)?);
            println!("{CSV_HEADER}");
            println!("{}", report.csv_row());
            Ok(())
        }
        Command::Rate { sampler, n, moment, tolerance } => {
            let specs = n
                .iter()
                .map(|&ni| {
                    // the grid side follows N across the sweep
                    let mut args = sampler.clone();
                    if matches!(args.strategy.as_str(), "jittered" | "stratified" | "grid") {
                        args.m.clear();
                    }
                    moment.spec(args.spec(ni)?)
                })
                .collect::<strata::Result<Vec<_>>>()?;
            println!("{CSV_HEADER}");
            let mut pairs = Vec::with_capacity(specs.len());
            for spec in &specs {
                let report = estimate_moment(spec)?;
                println!("{}", report.csv_row());
                pairs.push((report.n, report.estimate));
            }
            let fit = fit_rate(&pairs)?;
            let expected = theoretical_slope(&specs[0]);
            let summary = json!({
                "slope": fit.slope,
                "intercept": fit.intercept,
                "r_squared": fit.r_squared,
                "expected_slope": expected,
                "tolerance": tolerance,
                "within_tolerance": (fit.slope - expected).abs() <= tolerance,
            });
            println!("{summary}");
            Ok(())
        }
        Command::Bounds { theorem, d, n, p, c, m, partition } => {
            let id: BoundId = theorem.parse()?;
            let mut params = BoundParams { d, n, p, c, partition: None };
            if let Some(json) = partition {
                let spec: PartitionSpec = serde_json::from_str(&json)
                    .map_err(|e| Error::InvalidArgument(format!("bad --partition: {e}")))?;
                params.partition = Some(spec);
            } else if !m.is_empty() {
                params.partition = Some(match m.as_slice() {
                    [side] => PartitionSpec::grid(d, *side),
                    _ => PartitionSpec::rect_grid(m),
                });
            }
            println!("{}", bound(id, &params)?);
            Ok(())
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::TooLarge(_) | Error::Io(_) | Error::Parse(_) | Error::Degenerate(_)) => 1,
        Some(_) => 2,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(anyhow::Error::from)
            .and_then(|pool| pool.install(|| run(cli.command))),
        None => run(cli.command),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
