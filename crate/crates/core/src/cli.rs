// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

//! `edgecache` command-line front end.
//!
//! Exit codes: 0 success, 1 verification or theorem-check failure (and
//! I/O errors), 2 usage errors and invalid input.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::caching::{check_theorem1, SystemConfig, UpdateInstance};
use crate::harness::{
    kendall_vs_p, load_trace, run_experiment, summarize, sweep, DriftMode, ExperimentConfig,
    Format, Scheme, SweepAxis,
};
use crate::indexcoding::{check_theorem3, verify_plan, DecodeTrace, XorPlan};
use crate::mds::check_theorem2;
use crate::popularity::{kendall_tau, Ranking};
use crate::rng::seeded;
use crate::Error;

/// Overrides the directory relative `--out` paths are resolved against.
pub const OUT_DIR_ENV: &str = "EDGECACHE_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "edgecache", version, about = "Coded cache-refresh simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run multi-slot episodes and write per-slot results.
    Simulate(SimulateArgs),
    /// Run episodes across a grid of m, n or p.
    Sweep(SweepArgs),
    /// Run the theorem checks.
    CheckTheorems(TheoremArgs),
    /// Kendall tau distances between rankings.
    Kendall(KendallArgs),
    /// Replay decoding of an XOR plan against an instance.
    VerifyPlan(VerifyArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DriftModeArg {
    Value,
    Bounded,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// TOML experiment file; flags given explicitly override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    /// Kendall budget per slot for bounded drift.
    #[arg(long)]
    c: Option<u64>,
    #[arg(long)]
    slots: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated scheme names, or `all`.
    #[arg(long)]
    schemes: Option<String>,
    #[arg(long, value_enum)]
    drift_mode: Option<DriftModeArg>,
    /// Popularity trace (`slot,wcs,ranking` CSV) replacing the drift model.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    payload_len: Option<usize>,
    /// Worker threads for trials.
    #[arg(long)]
    parallel: Option<usize>,
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    #[arg(long, value_parser = ["m", "n", "p"])]
    axis: String,
    /// Comma-separated grid values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    /// Also report mean/std Kendall distance for each p (p sweeps only).
    #[arg(long)]
    kendall: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct TheoremArgs {
    /// Which check to run: 1, 2 or 3. Runs all when omitted.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    which: Option<u8>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    m: usize,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long, default_value_t = 25)]
    c: u64,
    #[arg(long, default_value_t = 1.0)]
    beta1: f64,
    #[arg(long, default_value_t = 6.25)]
    beta2: f64,
    #[arg(long, default_value_t = 64)]
    payload_len: usize,
    /// Write the full JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct KendallArgs {
    /// Trace file; prints distances between consecutive slots per station.
    #[arg(long, conflicts_with_all = ["a", "b"])]
    trace: Option<PathBuf>,
    /// First ranking as comma-separated ranks per file (1 = most popular).
    #[arg(long, value_delimiter = ',', requires = "b")]
    a: Option<Vec<u32>>,
    #[arg(long, value_delimiter = ',', requires = "a")]
    b: Option<Vec<u32>>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// JSON `{"transmissions": [[file, ...], ...]}`.
    #[arg(long)]
    plan: PathBuf,
    /// JSON `{"m": .., "prev": [[..], ..], "cur": [[..], ..]}`.
    #[arg(long)]
    instance: PathBuf,
}

enum Failure {
    Usage(String),
    Check(String),
    Error(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_) | Error::Parse { .. } | Error::Unsupported(_) => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Error(other),
        }
    }
}

type CliResult = std::result::Result<(), Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a, out),
        Command::Sweep(a) => run_sweep(a, out),
        Command::CheckTheorems(a) => check_theorems(a, out),
        Command::Kendall(a) => kendall(a, out),
        Command::VerifyPlan(a) => verify(a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Check(msg)) => {
            let _ = writeln!(err, "FAILED: {msg}");
            EXIT_FAILURE
        }
        Err(Failure::Error(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_FAILURE
        }
    }
}

fn resolve_config(a: &ExperimentArgs) -> std::result::Result<ExperimentConfig, Failure> {
    let mut cfg = match &a.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(m) = a.m {
        cfg.system.m = m;
    }
    if let Some(n) = a.n {
        cfg.system.n = n;
    }
    if let Some(s) = a.s {
        cfg.system.s = s;
    }
    if let Some(p) = a.p {
        cfg.drift.p = p;
    }
    if let Some(q) = a.q {
        cfg.drift.q = q;
    }
    if let Some(c) = a.c {
        cfg.drift.c = c;
    }
    if let Some(slots) = a.slots {
        cfg.slots = slots;
    }
    if let Some(trials) = a.trials {
        cfg.trials = trials;
    }
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Some(list) = &a.schemes {
        cfg.schemes = Scheme::parse_list(list)?;
    }
    if let Some(mode) = a.drift_mode {
        cfg.drift_mode = match mode {
            DriftModeArg::Value => DriftMode::Value,
            DriftModeArg::Bounded => DriftMode::Bounded,
        };
    }
    if let Some(trace) = &a.trace {
        cfg.trace_path = Some(trace.clone());
    }
    if let Some(len) = a.payload_len {
        cfg.payload_len = len;
    }
    if a.parallel == Some(0) {
        return Err(Failure::Usage("--parallel must be at least 1".into()));
    }
    cfg.validate()?;
    Ok(cfg)
}

fn output_path(out: &Option<PathBuf>, default_name: &str) -> PathBuf {
    let path = out.clone().unwrap_or_else(|| PathBuf::from(default_name));
    if path.is_absolute() {
        return path;
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) => Path::new(&dir).join(path),
        None => path,
    }
}

fn with_pool<T: Send>(
    parallel: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> std::result::Result<T, Failure> {
    match parallel {
        None => Ok(f()),
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Failure::Usage(format!("cannot start {threads} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn print_config(out: &mut dyn Write, cfg: &ExperimentConfig) -> CliResult {
    let text = format!("# master seed: {}\n{}\n", cfg.seed, cfg.to_toml());
    out.write_all(text.as_bytes())
        .map_err(|e| Failure::Error(Error::io("<stdout>", e)))
}

#[derive(Serialize)]
struct RunMetadata<'a> {
    config: &'a ExperimentConfig,
    master_seed: u64,
    /// Slot 0 fills every cache from scratch and is not reported.
    cold_fill_slot_excluded: bool,
    columns: &'a [&'a str],
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> std::result::Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Error(e.into()))?;
    std::fs::write(path, text + "\n").map_err(|e| Failure::Error(Error::io(path, e)))
}

fn meta_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(OsString::from).unwrap_or_default();
    name.push(".meta.json");
    path.with_file_name(name)
}

fn simulate(a: SimulateArgs, out: &mut dyn Write) -> CliResult {
    let cfg = resolve_config(&a.experiment)?;
    print_config(out, &cfg)?;
    let format: Format = a.output.format.into();
    let ext = match format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let path = output_path(&a.output.out, &format!("results.{ext}"));
    let rows = with_pool(a.experiment.parallel, || run_experiment(&cfg))?.map_err(|e| match e {
        Error::Verification(msg) => Failure::Check(msg),
        other => other.into(),
    })?;
    crate::harness::write_results(&rows, &path, format).map_err(Failure::Error)?;
    write_json(
        &meta_path(&path),
        &RunMetadata {
            config: &cfg,
            master_seed: cfg.seed,
            cold_fill_slot_excluded: true,
            columns: &crate::harness::RESULT_COLUMNS,
        },
    )?;
    let mut text = String::new();
    for s in summarize(&rows) {
        text.push_str(&format!(
            "{:<24} mean transmissions {:>8.3}  mean T_un {:>8.3}  saving {:>6.2}%\n",
            s.scheme.name(),
            s.mean_transmissions,
            s.mean_t_un,
            100.0 * s.saving
        ));
    }
    text.push_str(&format!(
        "wrote {} rows to {}\n",
        rows.len(),
        path.display()
    ));
    out.write_all(text.as_bytes())
        .map_err(|e| Failure::Error(Error::io("<stdout>", e)))
}

fn run_sweep(a: SweepArgs, out: &mut dyn Write) -> CliResult {
    let cfg = resolve_config(&a.experiment)?;
    let axis: SweepAxis = a.axis.parse()?;
    if a.kendall && axis != SweepAxis::P {
        return Err(Failure::Usage("--kendall needs --axis p".into()));
    }
    print_config(out, &cfg)?;
    let points = with_pool(a.experiment.parallel, || sweep(axis, &a.values, &cfg))?.map_err(
        |e| match e {
            Error::Verification(msg) => Failure::Check(msg),
            other => other.into(),
        },
    )?;
    let kendall = if a.kendall {
        let value_cfg = ExperimentConfig {
            drift_mode: DriftMode::Value,
            ..cfg.clone()
        };
        Some(with_pool(a.experiment.parallel, || {
            kendall_vs_p(&value_cfg, &a.values)
        })??)
    } else {
        None
    };
    let format: Format = a.output.format.into();
    let path = output_path(
        &a.output.out,
        match format {
            Format::Csv => "sweep.csv",
            Format::Json => "sweep.json",
        },
    );
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_path(&path)
                .map_err(|e| Failure::Error(Error::io(&path, e.into())))?;
            for p in &points {
                w.serialize(p).map_err(|e| Failure::Error(e.into()))?;
            }
            w.flush().map_err(|e| Failure::Error(Error::io(&path, e)))?;
        }
        Format::Json => write_json(&path, &points)?,
    }
    if let Some(k) = &kendall {
        write_json(&path.with_extension("kendall.json"), k)?;
    }
    let mut text = String::new();
    for p in &points {
        text.push_str(&format!(
            "{}={:<8} {:<24} {:>8.3} (saving {:>6.2}%)\n",
            a.axis,
            p.value,
            p.scheme.name(),
            p.mean_transmissions,
            100.0 * p.saving
        ));
    }
    for k in kendall.iter().flatten() {
        text.push_str(&format!(
            "p={:<8} kendall mean {:.3} std {:.3}\n",
            k.p, k.mean, k.std
        ));
    }
    out.write_all(text.as_bytes())
        .map_err(|e| Failure::Error(Error::io("<stdout>", e)))
}

#[derive(Serialize, Default)]
struct TheoremReports {
    #[serde(skip_serializing_if = "Option::is_none")]
    theorem1: Option<crate::caching::Theorem1Report>,
    #[serde(skip_serializing_if = "Option::is_none")]
    theorem2: Option<crate::mds::Theorem2Report>,
    #[serde(skip_serializing_if = "Option::is_none")]
    theorem3: Option<crate::indexcoding::Theorem3Report>,
}

/// Minimum fraction of trials that must meet the index-coding bound.
pub const THEOREM3_MIN_FRACTION: f64 = 0.90;

fn check_theorems(a: TheoremArgs, out: &mut dyn Write) -> CliResult {
    let mut reports = TheoremReports::default();
    let mut lines = Vec::new();
    let mut failed = Vec::new();
    let run = |k: u8| a.which.is_none_or(|w| w == k);
    writeln!(out, "# master seed: {}", a.seed)
        .map_err(|e| Failure::Error(Error::io("<stdout>", e)))?;

    if run(1) {
        let cfg = SystemConfig::new(a.m, a.n.unwrap_or(10), a.s.unwrap_or(20))?;
        let r = check_theorem1(&cfg, a.c, a.trials.unwrap_or(1000), &mut seeded(a.seed))?;
        lines.push(format!(
            "[{}] theorem 1: {} trials, max |R_i| = {} (bound {}), max T_un = {} (bound {}), {} violations",
            if r.violations.is_empty() { "PASS" } else { "FAIL" },
            r.trials,
            r.max_requests_per_wcs,
            r.per_wcs_bound,
            r.max_t_un,
            r.union_bound,
            r.violations.len()
        ));
        for e in &r.exhaustive {
            let status = if e.violations == 0 { "PASS" } else { "FAIL" };
            let product = match &e.product_witness {
                Some((x, y, k)) => format!(
                    "product-form threshold {} fails: {:?} vs {:?} share top-{} at K={}",
                    e.product_threshold, x, y, e.s, k
                ),
                None => format!("product-form threshold {} holds", e.product_threshold),
            };
            lines.push(format!(
                "[{status}] top-set bound m={} s={}: bound {} violations {} witness at bound {}; {product}",
                e.m,
                e.s,
                e.bound,
                e.violations,
                e.witness_at_bound
                    .as_ref()
                    .map_or("none".into(), |(x, y)| format!("{x:?} vs {y:?}")),
            ));
        }
        if !r.passed() {
            failed.push("theorem 1");
        }
        reports.theorem1 = Some(r);
    }
    if run(2) {
        let r = check_theorem2(a.trials.unwrap_or(500), a.payload_len, &mut seeded(a.seed));
        lines.push(format!(
            "[{}] theorem 2: {} instances, {} MDS broadcasts vs {} uncoded, {} failures",
            if r.passed() { "PASS" } else { "FAIL" },
            r.trials,
            r.total_transmissions,
            r.total_t_un,
            r.failures.len()
        ));
        for f in r.failures.iter().take(5) {
            lines.push(format!("    trial {}: {}", f.trial, f.message));
        }
        if !r.passed() {
            failed.push("theorem 2");
        }
        reports.theorem2 = Some(r);
    }
    if run(3) {
        let r = check_theorem3(
            a.n.unwrap_or(50),
            a.c,
            a.s.unwrap_or(40),
            a.beta1,
            a.beta2,
            a.trials.unwrap_or(200),
            &mut seeded(a.seed),
        )?;
        let ok = r.fraction >= THEOREM3_MIN_FRACTION;
        lines.push(format!(
            "[{}] theorem 3: m={} bound {:.2}, {}/{} trials within bound ({:.3}), colors min {} max {} mean {:.2}",
            if ok { "PASS" } else { "FAIL" },
            r.m,
            r.bound,
            r.satisfied,
            r.trials,
            r.fraction,
            r.min_colors,
            r.max_colors,
            r.mean_colors
        ));
        if !ok {
            failed.push("theorem 3");
        }
        reports.theorem3 = Some(r);
    }
    for line in &lines {
        writeln!(out, "{line}").map_err(|e| Failure::Error(Error::io("<stdout>", e)))?;
    }
    if let Some(path) = &a.out {
        write_json(&output_path(&Some(path.clone()), ""), &reports)?;
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(failed.join(", ")))
    }
}

fn kendall(a: KendallArgs, out: &mut dyn Write) -> CliResult {
    let mut text = String::new();
    match (a.trace, a.a, a.b) {
        (Some(path), _, _) => {
            let trace = load_trace(&path)?;
            text.push_str("slot,wcs,kendall\n");
            for (t, pair) in trace.slots.windows(2).enumerate() {
                for (i, (x, y)) in pair[0].iter().zip(&pair[1]).enumerate() {
                    text.push_str(&format!("{},{},{}\n", t + 1, i, kendall_tau(x, y)?));
                }
            }
        }
        (None, Some(x), Some(y)) => {
            let k = kendall_tau(&Ranking::from_positions(x)?, &Ranking::from_positions(y)?)?;
            text.push_str(&format!("{k}\n"));
        }
        _ => return Err(Failure::Usage("give --trace, or both --a and --b".into())),
    }
    out.write_all(text.as_bytes())
        .map_err(|e| Failure::Error(Error::io("<stdout>", e)))
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    transmissions: &'a [std::collections::BTreeSet<usize>],
    trace: &'a DecodeTrace,
}

fn verify(a: VerifyArgs, out: &mut dyn Write) -> CliResult {
    let read = |path: &Path| -> std::result::Result<String, Failure> {
        std::fs::read_to_string(path).map_err(|e| Failure::Error(Error::io(path, e)))
    };
    let plan: XorPlan = serde_json::from_str(&read(&a.plan)?)
        .map_err(|e| Failure::Usage(format!("{}: {e}", a.plan.display())))?;
    let inst: UpdateInstance = serde_json::from_str(&read(&a.instance)?)
        .map_err(|e| Failure::Usage(format!("{}: {e}", a.instance.display())))?;
    match verify_plan(&plan, &inst) {
        Ok(trace) => {
            let text = serde_json::to_string_pretty(&VerifyOutput {
                transmissions: &plan.transmissions,
                trace: &trace,
            })
            .map_err(|e| Failure::Error(e.into()))?;
            writeln!(out, "{text}").map_err(|e| Failure::Error(Error::io("<stdout>", e)))
        }
        Err(failure) => Err(Failure::Check(failure.to_string())),
    }
}
