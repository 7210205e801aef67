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

//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line
//! naming the criterion, the measured value and the pinned tolerance.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::collections::BTreeSet;
use std::fmt::Display;
use std::time::{Duration, Instant};

use rand::Rng;

use edgecache::caching::{
    check_theorem1, exhaustive_topset_check, random_instance, three_station_example, SystemConfig,
};
use edgecache::harness::{run_experiment, summarize, sweep, ExperimentConfig, Scheme, SweepAxis};
use edgecache::indexcoding::{
    build_conflict_graph, check_theorem3, degeneracy_ordering, greedy_color_dynamic,
    greedy_color_static, max_back_degree, plan_from_coloring, random_ordering, verify_plan,
    verify_plan_with, ConflictGraph, DecodeEvent, SideInfoMode, Vertex,
};
use edgecache::mds::check_theorem2;
use edgecache::popularity::{kendall_tau, Ranking};
use edgecache::rng::seeded;

/// Seeds for the baseline reproduction.
const BASELINE_SEEDS: usize = 20;
/// Seeds per point of the drift grid.
const DRIFT_SEEDS: usize = 10;
const SAVING_RANGE: (f64, f64) = (0.15, 0.45);
const THEOREM3_MIN_FRACTION: f64 = 0.90;

fn report(
    id: &str,
    name: &str,
    ok: bool,
    elapsed: Duration,
    limit: Duration,
    detail: impl Display,
) {
    let in_time = elapsed <= limit;
    let status = if ok && in_time { "PASS" } else { "FAIL" };
    println!(
        "{status} {id} {name}: {detail} [{:.3?} of {:?}]",
        elapsed, limit
    );
    assert!(ok, "{id} {name}: {detail}");
    assert!(in_time, "{id} {name}: took {elapsed:?}, limit {limit:?}");
}

fn set(files: &[usize]) -> BTreeSet<usize> {
    files.iter().copied().collect()
}

fn example_order(g: &ConflictGraph) -> Vec<usize> {
    let idx = |wcs, file| {
        g.vertices()
            .iter()
            .position(|&v| v == Vertex { wcs, file })
            .expect("vertex present")
    };
    // v2 -> v3 -> v4 -> v1
    vec![idx(1, 0), idx(1, 1), idx(2, 2), idx(0, 0)]
}

#[test]
fn ac1_kendall_example() {
    let start = Instant::now();
    let a = Ranking::from_positions(vec![1, 2, 3, 4]).unwrap();
    let b = Ranking::from_positions(vec![3, 4, 1, 2]).unwrap();
    let k = kendall_tau(&a, &b).unwrap();
    report(
        "AC1",
        "kendall example",
        k == 4,
        start.elapsed(),
        Duration::from_millis(1),
        format!("K = {k}, expected exactly 4"),
    );
}

#[test]
fn ac2_three_station_coloring() {
    let start = Instant::now();
    let inst = three_station_example();
    let g = build_conflict_graph(&inst);
    let order = example_order(&g);
    let stat = greedy_color_static(&g, &order);
    let dynamic = greedy_color_dynamic(&inst, &g, &order);
    let plan = plan_from_coloring(&g, &dynamic);
    let trace = verify_plan(&plan, &inst);
    let elapsed = start.elapsed();

    let expected_plan = vec![set(&[0, 2]), set(&[0, 1])];
    let expected_trace = vec![
        DecodeEvent {
            wcs: 1,
            file: 0,
            transmission: 1,
        },
        DecodeEvent {
            wcs: 2,
            file: 2,
            transmission: 1,
        },
        DecodeEvent {
            wcs: 0,
            file: 0,
            transmission: 2,
        },
        DecodeEvent {
            wcs: 1,
            file: 1,
            transmission: 2,
        },
    ];
    let trace_ok = trace.as_ref().is_ok_and(|t| t.events == expected_trace);
    let ok = stat.num_colors() == 3
        && dynamic.num_colors() == 2
        && plan.transmissions == expected_plan
        && trace_ok;
    report(
        "AC2",
        "three-station coloring",
        ok,
        elapsed,
        Duration::from_millis(1),
        format!(
            "static {} colors (want 3), dynamic {} colors (want 2), plan {:?}, trace ok = {trace_ok}",
            stat.num_colors(),
            dynamic.num_colors(),
            plan.transmissions
        ),
    );
}

#[test]
fn ac3_bounded_drift_request_bounds() {
    let start = Instant::now();
    // (m, s, c), 250 rounds each.
    let grid = [(100, 20, 25), (50, 10, 9), (30, 15, 4), (200, 40, 100)];
    let mut rounds = 0;
    let mut violations = 0;
    let mut worst = Vec::new();
    for (k, &(m, s, c)) in grid.iter().enumerate() {
        let cfg = SystemConfig::new(m, 10, s).unwrap();
        let r = check_theorem1(&cfg, c, 250, &mut seeded(300 + k as u64)).unwrap();
        rounds += r.trials;
        violations += r.violations.len();
        worst.push(format!(
            "(m={m},s={s},c={c}) max|R|={}/{} T_un={}/{}",
            r.max_requests_per_wcs, r.per_wcs_bound, r.max_t_un, r.union_bound
        ));
    }
    report(
        "AC3",
        "bounded-drift request bounds",
        rounds == 1000 && violations == 0,
        start.elapsed(),
        Duration::from_secs(10),
        format!(
            "{rounds} rounds, {violations} violations; {}",
            worst.join(", ")
        ),
    );
}

#[test]
fn ac4_exhaustive_topset_bound() {
    let start = Instant::now();
    let mut violations = 0;
    let mut missing_witness = Vec::new();
    let mut product_failures = 0;
    let mut pairs = 0;
    for m in 4..=6 {
        for check in exhaustive_topset_check(m).unwrap() {
            pairs += check.pairs;
            violations += check.violations;
            if check.s >= 2 && m - check.s >= 2 && check.witness_at_bound.is_none() {
                missing_witness.push((m, check.s));
            }
            if let Some((a, b, k)) = &check.product_witness {
                product_failures += 1;
                println!(
                    "    product-form threshold {} at m={m} s={} fails: {a:?} vs {b:?} keep the top set at K={k}",
                    check.product_threshold, check.s
                );
            }
        }
    }
    report(
        "AC4",
        "exhaustive top-set bound",
        violations == 0 && missing_witness.is_empty(),
        start.elapsed(),
        Duration::from_secs(30),
        format!(
            "{pairs} pairs, {violations} violations, missing witnesses {missing_witness:?}; \
             product-form threshold fails at {product_failures} (m,s) points"
        ),
    );
}

#[test]
fn ac5_mds_round_trip() {
    let start = Instant::now();
    let r = check_theorem2(500, 64, &mut seeded(5));
    for f in r.failures.iter().take(5) {
        println!("    trial {}: {}", f.trial, f.message);
    }
    report(
        "AC5",
        "MDS round trip",
        r.passed() && r.trials == 500,
        start.elapsed(),
        Duration::from_secs(30),
        format!(
            "{} instances, {} failures, {} broadcasts vs {} uncoded",
            r.trials,
            r.failures.len(),
            r.total_transmissions,
            r.total_t_un
        ),
    );
}

#[test]
fn ac6_coloring_soundness() {
    let start = Instant::now();
    let mut rng = seeded(6);
    let mut failures = Vec::new();
    for trial in 0..1000 {
        let m = rng.gen_range(2..=40);
        let cfg = SystemConfig {
            m,
            n: rng.gen_range(1..=8),
            s: rng.gen_range(1..=12.min(m - 1)),
        };
        let inst = random_instance(&cfg, &mut rng);
        let g = build_conflict_graph(&inst);
        for (label, order) in [
            ("degeneracy", degeneracy_ordering(&g)),
            ("random", random_ordering(&g, &mut rng)),
        ] {
            let d = max_back_degree(&g, &order);
            let stat = greedy_color_static(&g, &order);
            let dynamic = greedy_color_dynamic(&inst, &g, &order);
            if !stat.is_proper(&g) {
                failures.push(format!("trial {trial} {label}: static coloring not proper"));
            }
            if stat.num_colors() > d + 1 || dynamic.num_colors() > d + 1 {
                failures.push(format!(
                    "trial {trial} {label}: colors {}/{} exceed d+1 = {}",
                    stat.num_colors(),
                    dynamic.num_colors(),
                    d + 1
                ));
            }
            let sp = plan_from_coloring(&g, &stat);
            if let Err(e) = verify_plan_with(&sp, &inst, SideInfoMode::StaticOnly) {
                failures.push(format!("trial {trial} {label}: static plan: {e}"));
            }
            let dp = plan_from_coloring(&g, &dynamic);
            if let Err(e) = verify_plan(&dp, &inst) {
                failures.push(format!("trial {trial} {label}: dynamic plan: {e}"));
            }
        }
    }
    for f in failures.iter().take(5) {
        println!("    {f}");
    }
    report(
        "AC6",
        "coloring soundness",
        failures.is_empty(),
        start.elapsed(),
        Duration::from_secs(60),
        format!("1000 instances x 2 orderings, {} failures", failures.len()),
    );
}

#[test]
fn ac7_baseline_savings() {
    let start = Instant::now();
    let cfg = ExperimentConfig {
        trials: BASELINE_SEEDS,
        seed: 7,
        ..ExperimentConfig::default()
    };
    assert_eq!(
        (cfg.system.m, cfg.system.n, cfg.system.s, cfg.slots),
        (100, 10, 20, 200)
    );
    assert_eq!((cfg.drift.p, cfg.drift.q), (0.1, 0.2));
    let rows = run_experiment(&cfg).unwrap();
    let summary = summarize(&rows);
    let mean = |s: Scheme| {
        summary
            .iter()
            .find(|x| x.scheme == s)
            .expect("scheme summarized")
            .mean_transmissions
    };
    for s in &summary {
        println!(
            "    {:<22} mean {:>8.3}  saving {:>6.2}%",
            s.scheme.name(),
            s.mean_transmissions,
            100.0 * s.saving
        );
    }
    let unc = mean(Scheme::Uncoded);
    let dd = mean(Scheme::IcDynamicDegeneracy);
    let sd = mean(Scheme::IcStaticDegeneracy);
    let mds = mean(Scheme::Mds);
    let saving = 1.0 - dd / unc;
    let ordering = dd <= sd && sd <= unc && mds <= unc;
    let in_range = (SAVING_RANGE.0..=SAVING_RANGE.1).contains(&saving);
    report(
        "AC7",
        "baseline savings",
        ordering && in_range,
        start.elapsed(),
        Duration::from_secs(300),
        format!(
            "{BASELINE_SEEDS} seeds, dynamic-degeneracy saving {:.2}% (want {:.0}%..{:.0}%), \
             ordering dyn {dd:.3} <= static {sd:.3} <= uncoded {unc:.3}, mds {mds:.3}: {ordering}",
            100.0 * saving,
            100.0 * SAVING_RANGE.0,
            100.0 * SAVING_RANGE.1
        ),
    );
}

#[test]
fn ac8_drift_monotonicity() {
    let start = Instant::now();
    let ps = [0.02, 0.05, 0.1, 0.2];
    let cfg = ExperimentConfig {
        trials: DRIFT_SEEDS,
        seed: 8,
        ..ExperimentConfig::default()
    };
    let points = sweep(SweepAxis::P, &ps, &cfg).unwrap();
    let mut broken = Vec::new();
    let mut lines = Vec::new();
    for scheme in Scheme::ALL {
        let series: Vec<_> = points.iter().filter(|p| p.scheme == scheme).collect();
        assert_eq!(series.len(), ps.len());
        for w in series.windows(2) {
            if w[1].mean_transmissions < w[0].mean_transmissions {
                broken.push(format!(
                    "{} transmissions at p={}",
                    scheme.name(),
                    w[1].value
                ));
            }
            if w[1].mean_kendall < w[0].mean_kendall {
                broken.push(format!("kendall at p={}", w[1].value));
            }
        }
        lines.push(format!(
            "{} [{}]",
            scheme.name(),
            series
                .iter()
                .map(|p| format!("{:.2}", p.mean_transmissions))
                .collect::<Vec<_>>()
                .join(", ")
        ));
    }
    let kendall: Vec<String> = points
        .iter()
        .filter(|p| p.scheme == Scheme::Uncoded)
        .map(|p| format!("{:.1}", p.mean_kendall))
        .collect();
    println!("    mean K by p: [{}]", kendall.join(", "));
    for l in &lines {
        println!("    {l}");
    }
    report(
        "AC8",
        "drift monotonicity",
        broken.is_empty(),
        start.elapsed(),
        Duration::from_secs(300),
        format!("p in {ps:?}, {DRIFT_SEEDS} seeds, decreases: {broken:?}"),
    );
}

#[test]
fn ac9_greedy_coloring_bound() {
    let start = Instant::now();
    let r = check_theorem3(50, 25, 40, 1.0, 6.25, 200, &mut seeded(9)).unwrap();
    let dir = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("theorem3_histogram.json");
    std::fs::write(&path, serde_json::to_string_pretty(&r).unwrap()).unwrap();
    let elapsed = start.elapsed();
    report(
        "AC9",
        "greedy coloring bound",
        r.m == 250 && r.trials == 200 && r.fraction >= THEOREM3_MIN_FRACTION,
        elapsed,
        Duration::from_secs(300),
        format!(
            "m={}, bound {:.2}, {}/{} within bound (fraction {:.3}, want >= {THEOREM3_MIN_FRACTION}), \
             colors {}..{} mean {:.2}, histogram at {}",
            r.m,
            r.bound,
            r.satisfied,
            r.trials,
            r.fraction,
            r.min_colors,
            r.max_colors,
            r.mean_colors,
            path.display()
        ),
    );
}
