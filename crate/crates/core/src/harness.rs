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

//! Multi-slot simulation episodes, parameter sweeps, popularity traces and
//! result files.
//!
//! Slot 0 is the cold fill of every cache and produces no rows; slots
//! `1..=slots` are refresh rounds. All schemes of a slot run on the same
//! [`UpdateInstance`], and every coded plan is decoded before its count is
//! recorded.
//!
//! Randomness per trial is split into independent streams derived from the
//! master seed with [`derive_seed`]: `[trial, 0]` drives popularity,
//! `[trial, 1]` the random vertex orders, `[trial, 2]` the MDS payloads.
//! Sweep points prepend their grid index: `[point, trial, stream]`.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::caching::{build_update, top_s_cache, CacheState, SystemConfig, UpdateInstance};
use crate::indexcoding::{
    build_conflict_graph, degeneracy_ordering, greedy_color_dynamic, greedy_color_static,
    plan_from_coloring, random_ordering, verify_plan_with, ConflictGraph, SideInfoMode, XorPlan,
};
use crate::mds::{build_mds_plan, random_payloads, verify_round_trip};
use crate::popularity::{drift_bounded, kendall_tau, DriftParams, PopularityState, Ranking};
use crate::rng::{derive_seed, stream, SimRng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Uncoded,
    Mds,
    IcStaticRandom,
    IcStaticDegeneracy,
    IcDynamicRandom,
    IcDynamicDegeneracy,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::Uncoded,
        Scheme::Mds,
        Scheme::IcStaticRandom,
        Scheme::IcStaticDegeneracy,
        Scheme::IcDynamicRandom,
        Scheme::IcDynamicDegeneracy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Uncoded => "uncoded",
            Scheme::Mds => "mds",
            Scheme::IcStaticRandom => "ic-static-random",
            Scheme::IcStaticDegeneracy => "ic-static-degeneracy",
            Scheme::IcDynamicRandom => "ic-dynamic-random",
            Scheme::IcDynamicDegeneracy => "ic-dynamic-degeneracy",
        }
    }

    fn is_index_coded(self) -> bool {
        !matches!(self, Scheme::Uncoded | Scheme::Mds)
    }

    /// Parses a comma-separated list; `all` expands to every scheme.
    pub fn parse_list(text: &str) -> Result<Vec<Scheme>> {
        let mut out = Vec::new();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if part == "all" {
                out.extend(Scheme::ALL);
            } else {
                out.push(part.parse()?);
            }
        }
        out.sort_unstable();
        out.dedup();
        if out.is_empty() {
            return Err(Error::domain("no schemes selected"));
        }
        Ok(out)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| Error::domain(format!("unknown scheme '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriftMode {
    /// Real-valued popularity perturbed by `[-p/2, p/2]` per slot.
    Value,
    /// `c` random adjacent transpositions per station per slot.
    Bounded,
}

fn default_payload_len() -> usize {
    64
}

/// One experiment. Serialized as TOML:
///
/// ```toml
/// slots = 200
/// trials = 20
/// seed = 1
/// schemes = ["uncoded", "mds", "ic-dynamic-degeneracy"]
/// drift_mode = "value"
/// payload_len = 64          # optional
/// trace_path = "trace.csv"  # optional; replaces drift
///
/// [system]
/// m = 100
/// n = 10
/// s = 20
///
/// [drift]
/// c = 0
/// p = 0.1
/// q = 0.2
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    pub drift: DriftParams,
    pub slots: usize,
    pub trials: usize,
    pub seed: u64,
    pub schemes: Vec<Scheme>,
    pub drift_mode: DriftMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_path: Option<PathBuf>,
    #[serde(default = "default_payload_len")]
    pub payload_len: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            system: SystemConfig {
                m: 100,
                n: 10,
                s: 20,
            },
            drift: DriftParams {
                c: 0,
                p: 0.1,
                q: 0.2,
            },
            slots: 200,
            trials: 1,
            seed: 1,
            schemes: Scheme::ALL.to_vec(),
            drift_mode: DriftMode::Value,
            trace_path: None,
            payload_len: default_payload_len(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.drift.validate()?;
        if self.slots < 1 {
            return Err(Error::domain("slots must be >= 1"));
        }
        if self.trials < 1 {
            return Err(Error::domain("trials must be >= 1"));
        }
        if self.schemes.is_empty() {
            return Err(Error::domain("no schemes selected"));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: ExperimentConfig = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e
                .span()
                .map(|sp| text[..sp.start].lines().count().max(1))
                .unwrap_or(0),
            message: e.message().to_string(),
        })?;
        cfg.schemes.sort_unstable();
        cfg.schemes.dedup();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is representable in TOML")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub trial: usize,
    pub slot: usize,
    pub scheme: Scheme,
    pub transmissions: usize,
    pub t_un: usize,
    /// Mean Kendall tau distance between consecutive rankings over stations.
    pub kendall_mean: f64,
    /// Population standard deviation of the same distances.
    pub kendall_std: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Per-slot rankings at every station, slot 0 first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub slots: Vec<Vec<Ranking>>,
}

/// Source of per-slot rankings for an episode.
enum Popularity {
    Value(PopularityState, f64),
    Bounded(Vec<Ranking>, u64),
    Trace(Trace, usize),
}

impl Popularity {
    fn rankings(&self) -> Vec<Ranking> {
        match self {
            Popularity::Value(state, _) => state.rankings(),
            Popularity::Bounded(rs, _) => rs.clone(),
            Popularity::Trace(t, slot) => t.slots[*slot].clone(),
        }
    }

    fn step(&mut self, rng: &mut SimRng) {
        match self {
            Popularity::Value(state, p) => state.drift(*p, rng),
            Popularity::Bounded(rs, c) => {
                for r in rs.iter_mut() {
                    *r = drift_bounded(r, *c, rng);
                }
            }
            Popularity::Trace(_, slot) => *slot += 1,
        }
    }
}

/// Runs one scheme on a slot's instance and returns its verified count.
fn run_scheme(
    scheme: Scheme,
    inst: &UpdateInstance,
    graph: Option<&ConflictGraph>,
    orders: &(Vec<usize>, Vec<usize>),
    payload_len: usize,
    payload_rng: &mut SimRng,
) -> Result<usize> {
    let verify_xor = |plan: XorPlan, mode: SideInfoMode| -> Result<usize> {
        verify_plan_with(&plan, inst, mode)
            .map_err(|f| Error::Verification(format!("{scheme}: {f}")))?;
        Ok(plan.len())
    };
    match scheme {
        Scheme::Uncoded => verify_xor(XorPlan::uncoded(inst), SideInfoMode::StaticOnly),
        Scheme::Mds => {
            let plan = build_mds_plan(inst)?;
            let files = random_payloads(inst, payload_len, payload_rng);
            verify_round_trip(&plan, inst, &files)
                .map_err(|e| Error::Verification(format!("{scheme}: {e}")))
        }
        _ => {
            let g = graph.expect("graph built for index-coded schemes");
            let (random, degeneracy) = orders;
            let (coloring, mode) = match scheme {
                Scheme::IcStaticRandom => {
                    (greedy_color_static(g, random), SideInfoMode::StaticOnly)
                }
                Scheme::IcStaticDegeneracy => {
                    (greedy_color_static(g, degeneracy), SideInfoMode::StaticOnly)
                }
                Scheme::IcDynamicRandom => (
                    greedy_color_dynamic(inst, g, random),
                    SideInfoMode::Accumulate,
                ),
                Scheme::IcDynamicDegeneracy => (
                    greedy_color_dynamic(inst, g, degeneracy),
                    SideInfoMode::Accumulate,
                ),
                Scheme::Uncoded | Scheme::Mds => unreachable!(),
            };
            verify_xor(plan_from_coloring(g, &coloring), mode)
        }
    }
}

/// Runs trial `trial` of `cfg` with streams derived from `seed`.
fn run_episode_seeded(
    cfg: &ExperimentConfig,
    trace: Option<&Trace>,
    trial: usize,
    seed: u64,
) -> Result<Vec<ResultRow>> {
    let SystemConfig { m, n, s } = cfg.system;
    let mut drift_rng = stream(seed, &[trial as u64, 0]);
    let mut order_rng = stream(seed, &[trial as u64, 1]);
    let mut payload_rng = stream(seed, &[trial as u64, 2]);

    let (mut source, slots) = match trace {
        Some(t) => (Popularity::Trace(t.clone(), 0), t.slots.len() - 1),
        None => {
            let src = match cfg.drift_mode {
                DriftMode::Value => Popularity::Value(
                    PopularityState::random(n, m, cfg.drift.q, &mut drift_rng)?,
                    cfg.drift.p,
                ),
                DriftMode::Bounded => Popularity::Bounded(
                    (0..n).map(|_| Ranking::random(m, &mut drift_rng)).collect(),
                    cfg.drift.c,
                ),
            };
            (src, cfg.slots)
        }
    };

    let mut prev_rankings = source.rankings();
    let mut prev_cache: CacheState = top_s_cache(&prev_rankings, s)?;
    let needs_graph = cfg.schemes.iter().any(|sc| sc.is_index_coded());
    let mut rows = Vec::with_capacity(slots * cfg.schemes.len());

    for slot in 1..=slots {
        source.step(&mut drift_rng);
        let rankings = source.rankings();
        let cache = top_s_cache(&rankings, s)?;
        let inst = build_update(&prev_cache, &cache)?;
        let distances: Vec<f64> = prev_rankings
            .iter()
            .zip(&rankings)
            .map(|(a, b)| kendall_tau(a, b).map(|k| k as f64))
            .collect::<Result<_>>()?;
        let (kendall_mean, kendall_std) = mean_std(&distances);

        let graph = needs_graph.then(|| build_conflict_graph(&inst));
        // Drawn every slot so the order stream does not depend on the scheme list.
        let orders = match &graph {
            Some(g) => (random_ordering(g, &mut order_rng), degeneracy_ordering(g)),
            None => (Vec::new(), Vec::new()),
        };
        for &scheme in &cfg.schemes {
            let transmissions = run_scheme(
                scheme,
                &inst,
                graph.as_ref(),
                &orders,
                cfg.payload_len,
                &mut payload_rng,
            )?;
            rows.push(ResultRow {
                trial,
                slot,
                scheme,
                transmissions,
                t_un: inst.t_un(),
                kendall_mean,
                kendall_std,
            });
        }
        prev_rankings = rankings;
        prev_cache = cache;
    }
    Ok(rows)
}

fn load_config_trace(cfg: &ExperimentConfig) -> Result<Option<Trace>> {
    let Some(path) = &cfg.trace_path else {
        return Ok(None);
    };
    let trace = load_trace(path)?;
    let n = trace.slots[0].len();
    let m = trace.slots[0][0].len();
    if n != cfg.system.n || m != cfg.system.m {
        return Err(Error::domain(format!(
            "trace has n={n}, m={m} but config has n={}, m={}",
            cfg.system.n, cfg.system.m
        )));
    }
    if trace.slots.len() < 2 {
        return Err(Error::domain("trace needs at least two slots"));
    }
    Ok(Some(trace))
}

/// One trial of `cfg`.
pub fn run_episode(cfg: &ExperimentConfig, trial: usize) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let trace = load_config_trace(cfg)?;
    run_episode_seeded(cfg, trace.as_ref(), trial, cfg.seed)
}

fn run_trials(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let trace = load_config_trace(cfg)?;
    let per_trial: Vec<Vec<ResultRow>> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| run_episode_seeded(cfg, trace.as_ref(), trial, seed))
        .collect::<Result<_>>()?;
    Ok(per_trial.into_iter().flatten().collect())
}

/// All trials of `cfg`, rows ordered by trial, slot, scheme.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    run_trials(cfg, cfg.seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeSummary {
    pub scheme: Scheme,
    pub mean_transmissions: f64,
    pub mean_t_un: f64,
    /// `1 - mean_transmissions / mean_t_un`.
    pub saving: f64,
    pub rows: usize,
}

pub fn summarize(rows: &[ResultRow]) -> Vec<SchemeSummary> {
    let mut out = Vec::new();
    for scheme in Scheme::ALL {
        let sel: Vec<&ResultRow> = rows.iter().filter(|r| r.scheme == scheme).collect();
        if sel.is_empty() {
            continue;
        }
        let k = sel.len() as f64;
        let mean_transmissions = sel.iter().map(|r| r.transmissions as f64).sum::<f64>() / k;
        let mean_t_un = sel.iter().map(|r| r.t_un as f64).sum::<f64>() / k;
        let saving = if mean_t_un > 0.0 {
            1.0 - mean_transmissions / mean_t_un
        } else {
            0.0
        };
        out.push(SchemeSummary {
            scheme,
            mean_transmissions,
            mean_t_un,
            saving,
            rows: sel.len(),
        });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    M,
    N,
    P,
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "m" => Ok(SweepAxis::M),
            "n" => Ok(SweepAxis::N),
            "p" => Ok(SweepAxis::P),
            other => Err(Error::domain(format!("unknown sweep axis '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub axis: SweepAxis,
    pub value: f64,
    pub scheme: Scheme,
    pub mean_transmissions: f64,
    pub mean_t_un: f64,
    pub saving: f64,
    pub mean_kendall: f64,
}

fn apply_axis(base: &ExperimentConfig, axis: SweepAxis, value: f64) -> Result<ExperimentConfig> {
    let mut cfg = base.clone();
    let as_count = |v: f64| -> Result<usize> {
        if v < 0.0 || v.fract() != 0.0 {
            return Err(Error::domain(format!("{v} is not a valid count")));
        }
        Ok(v as usize)
    };
    match axis {
        SweepAxis::M => cfg.system.m = as_count(value)?,
        SweepAxis::N => cfg.system.n = as_count(value)?,
        SweepAxis::P => cfg.drift.p = value,
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs `base` at every grid value; grid point `k` uses master seed
/// `derive_seed(base.seed, [k])`.
pub fn sweep(axis: SweepAxis, values: &[f64], base: &ExperimentConfig) -> Result<Vec<SweepPoint>> {
    if values.is_empty() {
        return Err(Error::domain("empty sweep grid"));
    }
    let mut out = Vec::new();
    for (k, &value) in values.iter().enumerate() {
        let cfg = apply_axis(base, axis, value)?;
        let rows = run_trials(&cfg, derive_seed(base.seed, &[k as u64]))?;
        let per_slot: Vec<f64> = rows
            .iter()
            .filter(|r| r.scheme == cfg.schemes[0])
            .map(|r| r.kendall_mean)
            .collect();
        let mean_kendall = mean_std(&per_slot).0;
        for summary in summarize(&rows) {
            out.push(SweepPoint {
                axis,
                value,
                scheme: summary.scheme,
                mean_transmissions: summary.mean_transmissions,
                mean_t_un: summary.mean_t_un,
                saving: summary.saving,
                mean_kendall,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KendallPoint {
    pub p: f64,
    pub mean: f64,
    pub std: f64,
    pub samples: usize,
}

/// Mean and standard deviation of per-slot, per-station Kendall distances
/// under value drift, for each `p`.
pub fn kendall_vs_p(cfg: &ExperimentConfig, ps: &[f64]) -> Result<Vec<KendallPoint>> {
    cfg.validate()?;
    let SystemConfig { m, n, .. } = cfg.system;
    ps.iter()
        .enumerate()
        .map(|(k, &p)| {
            DriftParams { p, ..cfg.drift }.validate()?;
            let point_seed = derive_seed(cfg.seed, &[k as u64]);
            let per_trial: Vec<Vec<f64>> = (0..cfg.trials)
                .into_par_iter()
                .map(|trial| -> Result<Vec<f64>> {
                    let mut rng = stream(point_seed, &[trial as u64, 0]);
                    let mut state = PopularityState::random(n, m, cfg.drift.q, &mut rng)?;
                    let mut prev = state.rankings();
                    let mut ds = Vec::with_capacity(cfg.slots * n);
                    for _ in 0..cfg.slots {
                        state.drift(p, &mut rng);
                        let cur = state.rankings();
                        for (a, b) in prev.iter().zip(&cur) {
                            ds.push(kendall_tau(a, b)? as f64);
                        }
                        prev = cur;
                    }
                    Ok(ds)
                })
                .collect::<Result<_>>()?;
            let all: Vec<f64> = per_trial.into_iter().flatten().collect();
            let (mean, std) = mean_std(&all);
            Ok(KendallPoint {
                p,
                mean,
                std,
                samples: all.len(),
            })
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct TraceRecord {
    slot: usize,
    wcs: usize,
    ranking: String,
}

/// Reads a `slot,wcs,ranking` CSV, where `ranking` lists file ids in
/// decreasing popularity separated by `;`.
pub fn load_trace(path: &Path) -> Result<Trace> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => parse_err(0, format!("{other:?}")),
    })?;
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["slot", "wcs", "ranking"] {
        return Err(parse_err(1, "expected header 'slot,wcs,ranking'".into()));
    }
    let mut slots: Vec<Vec<Option<Ranking>>> = Vec::new();
    let mut m = None;
    for result in reader.records() {
        let record = result?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let rec: TraceRecord = record
            .deserialize(Some(&headers))
            .map_err(|e| parse_err(line, e.to_string()))?;
        let order: Vec<usize> = rec
            .ranking
            .split(';')
            .map(|tok| tok.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(line, format!("slot {} wcs {}: {e}", rec.slot, rec.wcs)))?;
        let ranking = Ranking::from_order(&order)
            .map_err(|e| parse_err(line, format!("slot {} wcs {}: {e}", rec.slot, rec.wcs)))?;
        if *m.get_or_insert(ranking.len()) != ranking.len() {
            return Err(parse_err(
                line,
                format!(
                    "slot {} wcs {}: ranking has {} files, expected {}",
                    rec.slot,
                    rec.wcs,
                    ranking.len(),
                    m.unwrap()
                ),
            ));
        }
        if rec.slot >= slots.len() {
            slots.resize(rec.slot + 1, Vec::new());
        }
        let row = &mut slots[rec.slot];
        if rec.wcs >= row.len() {
            row.resize(rec.wcs + 1, None);
        }
        if row[rec.wcs].is_some() {
            return Err(parse_err(
                line,
                format!("slot {} wcs {} listed twice", rec.slot, rec.wcs),
            ));
        }
        row[rec.wcs] = Some(ranking);
    }
    if slots.is_empty() {
        return Err(parse_err(0, "trace has no rows".into()));
    }
    let n = slots.iter().map(Vec::len).max().unwrap_or(0);
    let slots = slots
        .into_iter()
        .enumerate()
        .map(|(t, mut row)| {
            row.resize(n, None);
            row.into_iter()
                .enumerate()
                .map(|(i, r)| r.ok_or_else(|| parse_err(0, format!("slot {t} wcs {i} missing"))))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(Trace { slots })
}

pub fn write_trace(trace: &Trace, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(path, e.into()))?;
    for (slot, row) in trace.slots.iter().enumerate() {
        for (wcs, r) in row.iter().enumerate() {
            let ranking = r
                .order()
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(";");
            w.serialize(TraceRecord { slot, wcs, ranking })?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::domain(format!("unknown format '{other}'"))),
        }
    }
}

pub const RESULT_COLUMNS: [&str; 7] = [
    "trial",
    "slot",
    "scheme",
    "transmissions",
    "t_un",
    "kendall_mean",
    "kendall_std",
];

#[derive(Serialize, Deserialize)]
struct CsvRow {
    trial: usize,
    slot: usize,
    scheme: Scheme,
    transmissions: usize,
    t_un: usize,
    kendall_mean: f64,
    kendall_std: f64,
}

/// Writes rows in the order given with columns [`RESULT_COLUMNS`].
pub fn write_results(rows: &[ResultRow], path: &Path, format: Format) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    match format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new()
                .has_headers(false)
                .from_writer(&mut out);
            w.write_record(RESULT_COLUMNS)?;
            for r in rows {
                w.serialize(CsvRow {
                    trial: r.trial,
                    slot: r.slot,
                    scheme: r.scheme,
                    transmissions: r.transmissions,
                    t_un: r.t_un,
                    kendall_mean: r.kendall_mean,
                    kendall_std: r.kendall_std,
                })?;
            }
            w.flush().map_err(|e| Error::io(path, e))?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, rows)?;
            out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_results(path: &Path, format: Format) -> Result<Vec<ResultRow>> {
    match format {
        Format::Csv => {
            let mut r = csv::Reader::from_path(path).map_err(|e| Error::io(path, e.into()))?;
            if r.headers()?.iter().collect::<Vec<_>>() != RESULT_COLUMNS {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: 1,
                    message: format!("expected header {}", RESULT_COLUMNS.join(",")),
                });
            }
            r.deserialize::<CsvRow>()
                .map(|row| {
                    let row = row?;
                    Ok(ResultRow {
                        trial: row.trial,
                        slot: row.slot,
                        scheme: row.scheme,
                        transmissions: row.transmissions,
                        t_un: row.t_un,
                        kendall_mean: row.kendall_mean,
                        kendall_std: row.kendall_std,
                    })
                })
                .collect()
        }
        Format::Json => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            Ok(serde_json::from_str(&text)?)
        }
    }
}
