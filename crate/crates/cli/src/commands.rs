use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::json;
use sympath::{
    anticoncentration_of_circuit, build_distribution, build_series, mc_l2_error, porter_thomas_moment, stream_rng,
    CircuitIR, DistributionOptions, Engine, NormFactor, Observable, ParamCache, PartialAssignment, SeriesOptions,
};

use crate::fail::{Failure, Outcome};
use crate::input::{parse_budgets, CircuitArgs, ParamArgs};

/// Streams for shot `k` start here so they never meet the parameter streams.
const SHOT_STREAM_BASE: u64 = 1 << 40;

#[derive(Debug, Clone, clap::Args)]
pub struct OutputArgs {
    /// CSV destination; stdout when absent.
    #[arg(long, short)]
    pub out: Option<PathBuf>,

    /// JSON telemetry destination.
    #[arg(long)]
    pub stats: Option<PathBuf>,
}

impl OutputArgs {
    fn emit(&self, csv: &str, stats: Option<serde_json::Value>) -> Outcome<()> {
        match &self.out {
            Some(path) => std::fs::write(path, csv)?,
            None => print!("{csv}"),
        }
        if let (Some(path), Some(stats)) = (&self.stats, stats) {
            write_json(path, &stats)?;
        }
        Ok(())
    }
}

fn write_json(path: &Path, v: &serde_json::Value) -> Outcome<()> {
    let mut text = serde_json::to_string_pretty(v).map_err(|e| Failure::Engine(e.into()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn observable(s: &str) -> Outcome<Observable> {
    Ok(s.parse::<Observable>()?)
}

fn check_width(c: &CircuitIR, obs: &Observable) -> Outcome<()> {
    if obs.n() != c.n {
        return Err(Failure::validation(format!("observable acts on {} qubits, circuit has {}", obs.n(), c.n)));
    }
    Ok(())
}

#[derive(Debug, clap::Args)]
pub struct ExpectArgs {
    #[command(flatten)]
    pub circuit: CircuitArgs,
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Observable, e.g. `X` or `0.5*ZZI + -1*XIX`.
    #[arg(long)]
    pub obs: String,
    /// Truncation budget.
    #[arg(long = "L")]
    pub budget: usize,
    /// Ignore every noise channel.
    #[arg(long)]
    pub noiseless: bool,
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn expect(a: &ExpectArgs) -> Outcome<()> {
    let c = a.circuit.load(a.seed)?;
    let obs = observable(&a.obs)?;
    check_width(&c, &obs)?;
    let points = a.params.points(&c, a.seed)?;
    let opts = SeriesOptions { noiseless: a.noiseless, ..Default::default() };
    let series = build_series(&c, &obs, a.budget, opts)?;
    let values: Vec<f64> =
        points.par_iter().map(|p| series.evaluate_cached(&ParamCache::new(p)?)).collect::<Result<_, _>>()?;
    let mut csv = String::from("point,value,paths,pruned,stored_terms\n");
    for (i, v) in values.iter().enumerate() {
        writeln!(csv, "{i},{v:.12},{},{},{}", series.stats.total, series.stats.pruned, series.stats.stored).unwrap();
    }
    a.output.emit(&csv, Some(series.stats_json()))
}

#[derive(Debug, clap::Args)]
pub struct ProbsArgs {
    #[command(flatten)]
    pub circuit: CircuitArgs,
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long = "L")]
    pub budget: usize,
    /// Single-qubit marginals CSV (`qubit,p0,p1`).
    #[arg(long)]
    pub marginals: Option<PathBuf>,
    /// Evaluate every output string directly instead of splitting the circuit.
    #[arg(long)]
    pub dense_root: bool,
    /// Cap on surviving generators per contracted window.
    #[arg(long, default_value_t = sympath::distribution::DEFAULT_CAP)]
    pub cap: usize,
    #[arg(long)]
    pub noiseless: bool,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn distribution_options(dense_root: bool, cap: usize, noiseless: bool) -> DistributionOptions {
    DistributionOptions { cap, noiseless, engine: if dense_root { Engine::DenseRoot } else { Engine::Bidirectional } }
}

pub fn probs(a: &ProbsArgs) -> Outcome<()> {
    let c = a.circuit.load(a.seed)?;
    let point = a.params.single(&c, a.seed)?;
    let d = build_distribution(&c, a.budget, distribution_options(a.dense_root, a.cap, a.noiseless))?;
    let e = d.evaluate(&point)?;
    if let Some(path) = &a.marginals {
        let mut csv = String::from("qubit,p0,p1\n");
        for q in 0..c.n {
            let m0 = e.marginal(&PartialAssignment::from_pairs(c.n, &[(q, false)])?)?;
            let m1 = e.marginal(&PartialAssignment::from_pairs(c.n, &[(q, true)])?)?;
            writeln!(csv, "{q},{m0:.17e},{m1:.17e}").unwrap();
        }
        std::fs::write(path, csv)?;
    }
    a.output.emit(&e.to_csv()?, Some(d.stats_json()))
}

#[derive(Debug, clap::Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub circuit: CircuitArgs,
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long = "L")]
    pub budget: usize,
    /// Number of bitstrings.
    #[arg(long)]
    pub shots: usize,
    #[arg(long)]
    pub dense_root: bool,
    #[arg(long, default_value_t = sympath::distribution::DEFAULT_CAP)]
    pub cap: usize,
    #[arg(long)]
    pub noiseless: bool,
    #[arg(long)]
    pub seed: u64,
}

pub fn sample(a: &SampleArgs) -> Outcome<()> {
    let c = a.circuit.load(Some(a.seed))?;
    let point = a.params.single(&c, Some(a.seed))?;
    let d = build_distribution(&c, a.budget, distribution_options(a.dense_root, a.cap, a.noiseless))?;
    let e = d.evaluate(&point)?;
    let records = (0..a.shots)
        .into_par_iter()
        .map(|k| e.sample(&mut stream_rng(a.seed, SHOT_STREAM_BASE + k as u64)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut csv = String::from("shot,bits,clamp_events,degenerate_events\n");
    let (mut clamps, mut degenerate, mut calls) = (0, 0, 0);
    for (k, r) in records.iter().enumerate() {
        writeln!(csv, "{k},{},{},{}", r.bits, r.clamp_events, r.degenerate_events).unwrap();
        clamps += r.clamp_events;
        degenerate += r.degenerate_events;
        calls += r.marginal_calls;
    }
    let mut stats = d.stats_json();
    stats["shots"] = json!(a.shots);
    stats["clamp_events"] = json!(clamps);
    stats["degenerate_events"] = json!(degenerate);
    stats["marginal_calls"] = json!(calls);
    stats["seed"] = json!(a.seed);
    a.output.emit(&csv, Some(stats))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum NormArg {
    One,
    Hs,
    L1,
}

#[derive(Debug, clap::Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub circuit: CircuitArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long)]
    pub obs: String,
    /// Budgets: `N`, `A..B` (inclusive) or a comma list.
    #[arg(long = "L")]
    pub budgets: String,
    /// Common parameter draws shared by every budget.
    #[arg(long)]
    pub draws: usize,
    /// Explicit spectral gap for the bound column.
    #[arg(long, conflicts_with = "gamma_from_noise")]
    pub gamma: Option<f64>,
    /// Take the gap from the circuit's noise (the default).
    #[arg(long)]
    pub gamma_from_noise: bool,
    #[arg(long, value_enum, default_value_t = NormArg::One)]
    pub norm: NormArg,
    #[arg(long)]
    pub seed: u64,
}

pub fn sweep(a: &SweepArgs) -> Outcome<()> {
    let c = a.circuit.load(Some(a.seed))?;
    let obs = observable(&a.obs)?;
    check_width(&c, &obs)?;
    let budgets = parse_budgets(&a.budgets)?;
    let norm = match a.norm {
        NormArg::One => NormFactor::One,
        NormArg::Hs => NormFactor::NormalizedHs,
        NormArg::L1 => NormFactor::L1,
    };
    let sweep = mc_l2_error(&c, &obs, &budgets, a.draws, a.seed, norm, a.gamma)?;
    let stats = serde_json::to_value(&sweep).map_err(|e| Failure::Engine(e.into()))?;
    a.output.emit(&sweep.to_csv(), Some(stats))
}

#[derive(Debug, clap::Args)]
pub struct AntiArgs {
    #[command(flatten)]
    pub circuit: CircuitArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Parameter draws in the ensemble.
    #[arg(long)]
    pub draws: usize,
    /// Include noise channels in the oracle.
    #[arg(long)]
    pub noisy: bool,
    #[arg(long)]
    pub seed: u64,
}

pub fn anticoncentration(a: &AntiArgs) -> Outcome<()> {
    let c = a.circuit.load(Some(a.seed))?;
    let est = anticoncentration_of_circuit(&c, a.draws, a.seed, a.noisy)?;
    let mut csv = String::from("n,draws,mean,stderr,porter_thomas,seed\n");
    writeln!(
        csv,
        "{},{},{:.12},{:.12},{:.12},{}",
        c.n,
        est.draws,
        est.mean,
        est.stderr,
        porter_thomas_moment(c.n),
        a.seed
    )
    .unwrap();
    a.output.emit(&csv, None)
}
