//! Command-line experiment runner.
//!
//! Every subcommand writes one table. CSV output starts with the header row,
//! followed by `#`-prefixed lines holding the resolved config as JSON, then
//! the data rows. JSON-lines output starts with a `{"columns", "config"}`
//! record, then one object per row.

use crate::bpstats::{
    second_moment_spectral_radius, theorem1_check, theorem2_check, BoundReport, DesignSide, MatrixKind, ScanCost,
    DEFAULT_SAMPLES,
};
use crate::circuits::{build_template, Family};
use crate::error::{invalid, Error, Result};
use crate::models::{exact_ground_energy, local_z_observable, mixed_field_ising, Cost, MAX_EXACT_QUBITS};
use crate::optimizers::{
    adam_observed, random_angles, run_sequential_observed, seeded_start, AdamConfig, Decomposition, Method,
    Trajectory, TrajectoryRecord,
};
use crate::randhaar::{derive_seed, haar_state, seeded};
use crate::simcore::{Observable, StateVector};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "FQS_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "fqs", version, about = "Sequential single-qubit gate optimization experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output file; defaults to `$FQS_OUTPUT_DIR/<subcommand>.<ext>` or stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Ising ground-state search; one row per update plus a summary per run.
    Vqe(VqeArgs),
    /// Haar-random state preparation; final infidelity per run and layer count.
    Fidelity(FidelityArgs),
    /// Second moment of the spectral radius of the centered FQS matrix.
    SpectralRadius(SpectralArgs),
    /// Numeric checks of the spectral-radius bounds.
    Bounds(BoundsArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Vqe(_) => "vqe",
            Command::Fidelity(_) => "fidelity",
            Command::SpectralRadius(_) => "spectral-radius",
            Command::Bounds(_) => "bounds",
        }
    }
}

/// Inclusive `a..b` ranges and comma lists, e.g. `2..8` or `1,3,5..7`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UsizeList(pub Vec<usize>);

impl FromStr for UsizeList {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let num = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| invalid(format!("'{t}' is not a non-negative integer")))
        };
        let mut out = Vec::new();
        for part in s.split(',') {
            if let Some((a, b)) = part.split_once("..") {
                let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
                if a > b {
                    return Err(invalid(format!("empty range '{part}'")));
                }
                out.extend(a..=b);
            } else {
                out.push(num(part)?);
            }
        }
        Ok(UsizeList(out))
    }
}

impl fmt::Display for UsizeList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

/// A sequential method or the gradient baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Optimizer {
    Sequential(Method),
    Adam,
}

impl FromStr for Optimizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("adam") {
            Ok(Optimizer::Adam)
        } else {
            s.parse().map(Optimizer::Sequential)
        }
    }
}

impl fmt::Display for Optimizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Optimizer::Sequential(m) => m.fmt(f),
            Optimizer::Adam => f.write_str("adam"),
        }
    }
}

impl From<Optimizer> for String {
    fn from(o: Optimizer) -> String {
        o.to_string()
    }
}

impl TryFrom<String> for Optimizer {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone, PartialEq, clap::Args, Serialize, Deserialize)]
pub struct OptimizerArgs {
    /// fqs, fraxis, rotosolve (alias nft), rotoselect or adam.
    #[arg(long, default_value = "fqs")]
    pub method: Optimizer,

    /// Sweeps over all slots (sequential methods).
    #[arg(long, default_value_t = 100)]
    pub sweeps: u64,

    /// Adam iterations; defaults to `--sweeps`.
    #[arg(long)]
    pub iterations: Option<u64>,

    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,

    /// Angle factorization of each slot for Adam: ryrz or rzryrz.
    #[arg(long, default_value = "ryrz")]
    pub decomposition: Decomposition,
}

#[derive(Debug, Clone, PartialEq, clap::Args, Serialize, Deserialize)]
pub struct VqeArgs {
    #[arg(long, default_value = "alternating")]
    pub ansatz: Family,
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    #[arg(long, default_value_t = 5)]
    pub layers: usize,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// ZZ coupling.
    #[arg(long, default_value_t = 1.0)]
    pub coupling: f64,
    /// Strength of the Y and Z fields.
    #[arg(long, default_value_t = std::f64::consts::FRAC_1_SQRT_2)]
    pub field: f64,
    /// Drop the wrap-around bond.
    #[arg(long)]
    pub open: bool,
    /// Record wall-clock nanoseconds (otherwise 0, keeping output reproducible).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq, clap::Args, Serialize, Deserialize)]
pub struct FidelityArgs {
    #[arg(long, default_value = "alternating")]
    pub ansatz: Family,
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    #[arg(long, default_value = "1..6")]
    pub layers: UsizeList,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    #[arg(long, default_value_t = 40)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, clap::Args, Serialize, Deserialize)]
pub struct SpectralArgs {
    #[arg(long, default_value = "alternating")]
    pub ansatz: Family,
    /// global (infidelity to a Haar target) or local (Z on qubit 0).
    #[arg(long, default_value = "global")]
    pub cost: ScanCost,
    #[arg(long, default_value = "2..8")]
    pub n: UsizeList,
    #[arg(long, default_value = "2,4,8")]
    pub layers: UsizeList,
    #[arg(long, default_value_t = 0)]
    pub slot: usize,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignChoice {
    Before,
    After,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HamiltonianChoice {
    Ising,
    Local,
}

#[derive(Debug, Clone, PartialEq, clap::Args, Serialize, Deserialize)]
pub struct BoundsArgs {
    /// 1: upper bound with a Haar half; 2: lower bound for Haar-block brickworks.
    #[arg(long)]
    pub theorem: u32,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    /// Matrix size: 2 (fixed axis), 3 (axis) or 4 (full).
    #[arg(long, default_value = "4")]
    pub p: UsizeList,
    /// Block width (lower bound only).
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    /// Block layers (lower bound only).
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
    /// 1-based block layer holding the probed gate (lower bound only).
    #[arg(long, default_value_t = 1)]
    pub probe_layer: usize,
    #[arg(long, value_enum, default_value_t = DesignChoice::Both)]
    pub design: DesignChoice,
    #[arg(long, value_enum, default_value_t = HamiltonianChoice::Ising)]
    pub hamiltonian: HamiltonianChoice,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    /// Samples for the expectation inside the upper bound; defaults to `--samples`.
    #[arg(long)]
    pub mc_samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Everything needed to reproduce an output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub format: Format,
    pub jobs: usize,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Int(v) => (*v).into(),
            Cell::Float(v) => serde_json::Number::from_f64(*v).map_or(serde_json::Value::Null, Into::into),
            Cell::Text(s) => s.clone().into(),
            Cell::Bool(b) => (*b).into(),
            Cell::Empty => serde_json::Value::Null,
        }
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Position of `column` in the header.
    pub fn column_index(&self, column: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == column)
    }

    pub fn write<W: Write>(&self, out: W, format: Format, config: &ExperimentConfig) -> Result<()> {
        let config_json = serde_json::to_string(config).map_err(|e| Error::Io(e.to_string()))?;
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(&self.columns).map_err(csv_err)?;
                let mut out = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
                writeln!(out, "# {config_json}")?;
                let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::csv)).map_err(csv_err)?;
                }
                w.flush()?;
            }
            Format::Json => {
                let mut out = out;
                let head = serde_json::json!({ "columns": self.columns, "config": config });
                writeln!(out, "{head}")?;
                for row in &self.rows {
                    let obj: serde_json::Map<String, serde_json::Value> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, v)| (c.to_string(), v.json()))
                        .collect();
                    writeln!(out, "{}", serde_json::Value::Object(obj))?;
                }
                out.flush()?;
            }
        }
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn ising(n: usize, args: &VqeArgs) -> Result<Observable> {
    mixed_field_ising(n, args.coupling, args.field, !args.open)
}

/// One optimization run from a seed, on either method family.
fn optimize(
    family: Family,
    n: usize,
    layers: usize,
    cost: &Cost,
    opt: &OptimizerArgs,
    seed: u64,
    timing: bool,
) -> Result<(Trajectory, Vec<u64>)> {
    let template = build_template(family, n, layers)?;
    let start = Instant::now();
    let mut stamps = Vec::new();
    let observe = |_: &TrajectoryRecord| {
        stamps.push(if timing { start.elapsed().as_nanos() as u64 } else { 0 });
    };
    let traj = match opt.method {
        Optimizer::Sequential(method) => {
            let (mut params, config) = seeded_start(method, template.num_slots(), seed);
            run_sequential_observed(&template, &mut params, cost, &config, opt.sweeps, observe)?
        }
        Optimizer::Adam => {
            let iterations = opt.iterations.unwrap_or(opt.sweeps);
            let config = AdamConfig::new(opt.decomposition, opt.lr, iterations);
            if !(opt.lr > 0.0 && opt.lr.is_finite()) {
                return Err(invalid("--lr must be positive and finite"));
            }
            let k = opt.decomposition.angles_per_slot();
            let mut angles = random_angles(k * template.num_slots(), &mut seeded(seed));
            adam_observed(&template, cost, &config, &mut angles, observe)?
        }
    };
    Ok((traj, stamps))
}

fn check_positive(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(invalid(format!("--{name} must be positive")));
    }
    Ok(())
}

pub fn cmd_vqe(args: &VqeArgs) -> Result<Table> {
    check_positive("runs", args.runs)?;
    check_positive("layers", args.layers)?;
    let obs = ising(args.n, args).map_err(|e| invalid(format!("--n: {e}")))?;
    build_template(args.ansatz, args.n, args.layers).map_err(|e| invalid(format!("--ansatz/--n/--layers: {e}")))?;
    let ground = if args.n <= MAX_EXACT_QUBITS {
        Some(exact_ground_energy(&obs)?)
    } else {
        None
    };
    let cost = Cost::Observable(obs);
    let runs: Vec<(Trajectory, Vec<u64>)> = (0..args.runs)
        .into_par_iter()
        .map(|r| {
            optimize(
                args.ansatz,
                args.n,
                args.layers,
                &cost,
                &args.optimizer,
                derive_seed(args.seed, r as u64),
                args.timing,
            )
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(&[
        "kind",
        "run_id",
        "sweep",
        "update_index",
        "slot_id",
        "energy",
        "eval_count",
        "wall_ns",
        "exact_ground_energy",
        "energy_error",
    ]);
    for (run_id, (traj, stamps)) in runs.iter().enumerate() {
        for (rec, ns) in traj.records.iter().zip(stamps) {
            table.push(vec![
                "update".into(),
                run_id.into(),
                rec.sweep.into(),
                rec.update_index.into(),
                rec.slot_id.into(),
                rec.energy.into(),
                rec.evals.into(),
                (*ns).into(),
                Cell::Empty,
                Cell::Empty,
            ]);
        }
        let last = traj.records.last().expect("trajectory has an initial record");
        table.push(vec![
            "summary".into(),
            run_id.into(),
            last.sweep.into(),
            last.update_index.into(),
            Cell::Empty,
            last.energy.into(),
            last.evals.into(),
            stamps.last().copied().unwrap_or(0).into(),
            ground.into(),
            ground.map(|g| last.energy - g).into(),
        ]);
    }
    Ok(table)
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn cmd_fidelity(args: &FidelityArgs) -> Result<Table> {
    check_positive("runs", args.runs)?;
    if args.layers.0.is_empty() || args.layers.0.contains(&0) {
        return Err(invalid("--layers must list positive layer counts"));
    }
    for &l in &args.layers.0 {
        build_template(args.ansatz, args.n, l).map_err(|e| invalid(format!("--ansatz/--n/--layers: {e}")))?;
    }
    let jobs: Vec<(usize, usize)> = args
        .layers
        .0
        .iter()
        .flat_map(|&l| (0..args.runs).map(move |r| (l, r)))
        .collect();
    let results: Vec<Trajectory> = jobs
        .par_iter()
        .map(|&(l, r)| {
            let run_seed = derive_seed(args.seed, r as u64);
            let target = haar_state(args.n, &mut seeded(run_seed));
            let cost = Cost::Infidelity(target);
            optimize(args.ansatz, args.n, l, &cost, &args.optimizer, derive_seed(run_seed, l as u64), false)
                .map(|(t, _)| t)
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(&[
        "kind",
        "layers",
        "run_id",
        "initial_infidelity",
        "final_infidelity",
        "eval_count",
        "min",
        "q25",
        "median",
        "q75",
        "max",
    ]);
    for (&(l, r), traj) in jobs.iter().zip(&results) {
        let first = traj.records.first().expect("initial record");
        let last = traj.records.last().expect("initial record");
        let mut row: Vec<Cell> = vec![
            "run".into(),
            l.into(),
            r.into(),
            first.energy.into(),
            last.energy.into(),
            last.evals.into(),
        ];
        row.extend(std::iter::repeat_n(Cell::Empty, 5));
        table.push(row);
    }
    for (i, &l) in args.layers.0.iter().enumerate() {
        let mut finals: Vec<f64> = results[i * args.runs..(i + 1) * args.runs]
            .iter()
            .map(|t| t.final_energy().expect("initial record"))
            .collect();
        finals.sort_by(f64::total_cmp);
        let mut row: Vec<Cell> = vec!["quantiles".into(), l.into()];
        row.extend(std::iter::repeat_n(Cell::Empty, 4));
        row.extend([0.0, 0.25, 0.5, 0.75, 1.0].map(|q| Cell::Float(quantile(&finals, q))));
        table.push(row);
    }
    Ok(table)
}

pub fn cmd_spectral_radius(args: &SpectralArgs) -> Result<Table> {
    check_positive("samples", args.samples)?;
    let mut table = Table::new(&[
        "n", "layers", "cost", "ansatz", "slot", "mean_r2", "stderr", "samples", "seed", "warning",
    ]);
    for &n in &args.n.0 {
        for &l in &args.layers.0 {
            let est = second_moment_spectral_radius(args.ansatz, n, l, args.cost, args.slot, args.samples, args.seed)
                .map_err(|e| invalid(format!("--n {n} --layers {l}: {e}")))?;
            let warning = if est.is_reliable() { "" } else { "unreliable: single sample, stderr undefined" };
            table.push(vec![
                n.into(),
                l.into(),
                args.cost.to_string().into(),
                args.ansatz.to_string().into(),
                args.slot.into(),
                est.mean.into(),
                est.stderr.into(),
                est.samples.into(),
                args.seed.into(),
                warning.into(),
            ]);
        }
    }
    Ok(table)
}

const BOUND_COLUMNS: [&str; 14] = [
    "theorem",
    "n",
    "p",
    "design",
    "layers",
    "side",
    "bound_value",
    "bound_stderr",
    "mean_r2",
    "stderr",
    "samples",
    "margin",
    "passed",
    "seed",
];

fn bound_row(theorem: u32, n: usize, p: usize, design: &str, layers: Option<usize>, r: &BoundReport, seed: u64) -> Vec<Cell> {
    vec![
        Cell::Int(theorem as u64),
        n.into(),
        p.into(),
        design.into(),
        layers.into(),
        format!("{:?}", r.side).to_lowercase().into(),
        r.bound_value.into(),
        r.bound_stderr.into(),
        r.estimate.mean.into(),
        r.estimate.stderr.into(),
        r.estimate.samples.into(),
        r.margin.into(),
        r.passed.into(),
        seed.into(),
    ]
}

pub fn cmd_bounds(args: &BoundsArgs) -> Result<Table> {
    check_positive("samples", args.samples)?;
    let kinds: Vec<MatrixKind> = args
        .p
        .0
        .iter()
        .map(|&p| MatrixKind::from_p(p).map_err(|e| invalid(format!("--p: {e}"))))
        .collect::<Result<_>>()?;
    let mut table = Table::new(&BOUND_COLUMNS);
    match args.theorem {
        1 => {
            let h = match args.hamiltonian {
                HamiltonianChoice::Ising if args.n >= 2 => mixed_field_ising(args.n, 1.0, std::f64::consts::FRAC_1_SQRT_2, true)?,
                _ => local_z_observable(args.n).map_err(|e| invalid(format!("--n: {e}")))?,
            };
            let input = StateVector::zero(args.n);
            let designs: &[DesignSide] = match args.design {
                DesignChoice::Before => &[DesignSide::Before],
                DesignChoice::After => &[DesignSide::After],
                DesignChoice::Both => &[DesignSide::Before, DesignSide::After],
            };
            let mc = args.mc_samples.unwrap_or(args.samples);
            for kind in &kinds {
                for &design in designs {
                    let r = theorem1_check(design, &h, &input, 0, *kind, args.samples, mc, args.seed)
                        .map_err(|e| invalid(format!("--n: {e}")))?;
                    table.push(bound_row(1, args.n, kind.p(), &design.to_string(), None, &r, args.seed));
                }
            }
        }
        2 => {
            if args.m != 2 {
                return Err(invalid(format!("--m: Haar-block circuits use 2-qubit blocks, got {}", args.m)));
            }
            for kind in &kinds {
                let r = theorem2_check(args.n, args.layers, args.probe_layer, *kind, args.samples, args.seed)
                    .map_err(|e| invalid(format!("--n/--layers/--probe-layer: {e}")))?;
                table.push(bound_row(2, args.n, kind.p(), "blocks", Some(args.layers), &r, args.seed));
            }
        }
        t => return Err(invalid(format!("--theorem: expected 1 or 2, got {t}"))),
    }
    Ok(table)
}

pub fn execute(command: &Command) -> Result<Table> {
    match command {
        Command::Vqe(a) => cmd_vqe(a),
        Command::Fidelity(a) => cmd_fidelity(a),
        Command::SpectralRadius(a) => cmd_spectral_radius(a),
        Command::Bounds(a) => cmd_bounds(a),
    }
}

fn output_path(cli: &Cli) -> Option<PathBuf> {
    if let Some(p) = &cli.output {
        return Some(p.clone());
    }
    let dir = std::env::var_os(OUTPUT_DIR_ENV)?;
    let ext = match cli.format {
        Format::Csv => "csv",
        Format::Json => "jsonl",
    };
    Some(PathBuf::from(dir).join(format!("{}.{ext}", cli.command.name())))
}

/// Runs a parsed command line and writes its table.
pub fn run(cli: &Cli) -> Result<()> {
    let jobs = match cli.jobs {
        Some(0) => return Err(invalid("--jobs must be positive")),
        Some(j) => j,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let config = ExperimentConfig {
        command: cli.command.clone(),
        format: cli.format,
        jobs,
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Io(e.to_string()))?;
    let table = pool.install(|| execute(&cli.command))?;
    match output_path(cli) {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            let file = std::fs::File::create(&path)?;
            table.write(std::io::BufWriter::new(file), cli.format, &config)
        }
        None => table.write(std::io::stdout().lock(), cli.format, &config),
    }
}

/// JSON error record written to stderr on failure.
pub fn error_record(kind: &str, message: &str) -> String {
    serde_json::json!({ "error": kind, "message": message }).to_string()
}

/// Entry point shared by the binary and tests; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprintln!("{}", error_record("usage", e.render().to_string().trim()));
            return 2;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", error_record(e.kind(), &e.to_string()));
            1
        }
    }
}
