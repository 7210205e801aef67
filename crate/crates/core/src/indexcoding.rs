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

//! Index-coded refresh through conflict-graph coloring.
//!
//! Each (station, requested file) pair becomes a vertex. Two vertices with
//! different files conflict unless each station already holds the other's
//! file; vertices of one color class are XOR-ed into a single broadcast.
//!
//! Besides plain greedy coloring this module implements dynamic coloring:
//! a file a station decodes from broadcast `k` counts as side information
//! for every broadcast after `k`, which lets later vertices join classes
//! they would conflict with in the static graph.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::caching::{build_update, top_s_cache, UpdateInstance};
use crate::popularity::{drift_bounded, Ranking};
use crate::rng::SimRng;
use crate::{Error, FileId, Result, WcsId};

/// A virtual single-request station.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Vertex {
    pub wcs: WcsId,
    pub file: FileId,
}

#[derive(Debug, Clone)]
pub struct ConflictGraph {
    /// Sorted by `(wcs, file)`; a vertex's index is its position here.
    vertices: Vec<Vertex>,
    adj: Vec<Vec<bool>>,
    neighbors: Vec<Vec<usize>>,
}

/// Whether `(i1, j1)` and `(i2, j2)` cannot share a broadcast given
/// side information `side`.
pub fn conflicts(side: &[BTreeSet<FileId>], a: Vertex, b: Vertex) -> bool {
    a.file != b.file && (!side[b.wcs].contains(&a.file) || !side[a.wcs].contains(&b.file))
}

impl ConflictGraph {
    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        self.adj[u][v]
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors[v].len()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Graph on explicit vertices and edges, for ordering and coloring
    /// experiments outside the caching model.
    pub fn from_edges(vertices: Vec<Vertex>, edges: &[(usize, usize)]) -> Result<Self> {
        let n = vertices.len();
        let mut adj = vec![vec![false; n]; n];
        for &(u, v) in edges {
            if u >= n || v >= n || u == v {
                return Err(Error::domain(format!(
                    "bad edge ({u}, {v}) on {n} vertices"
                )));
            }
            adj[u][v] = true;
            adj[v][u] = true;
        }
        Ok(Self::from_matrix(vertices, adj))
    }

    fn from_matrix(vertices: Vec<Vertex>, adj: Vec<Vec<bool>>) -> Self {
        let neighbors = adj
            .iter()
            .map(|row| (0..row.len()).filter(|&v| row[v]).collect())
            .collect();
        ConflictGraph {
            vertices,
            adj,
            neighbors,
        }
    }
}

pub fn build_conflict_graph(inst: &UpdateInstance) -> ConflictGraph {
    let vertices: Vec<Vertex> = inst
        .requests()
        .iter()
        .enumerate()
        .flat_map(|(wcs, req)| req.iter().map(move |&file| Vertex { wcs, file }))
        .collect();
    let side = inst.prev();
    let n = vertices.len();
    let mut adj = vec![vec![false; n]; n];
    for u in 0..n {
        for v in u + 1..n {
            if conflicts(side, vertices[u], vertices[v]) {
                adj[u][v] = true;
                adj[v][u] = true;
            }
        }
    }
    ConflictGraph::from_matrix(vertices, adj)
}

/// Uniformly random vertex order.
pub fn random_ordering(g: &ConflictGraph, rng: &mut SimRng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..g.len()).collect();
    order.shuffle(rng);
    order
}

/// Repeatedly removes a minimum-degree vertex (smallest `(wcs, file)` on
/// ties) and returns the vertices in reverse removal order, so the last
/// vertex removed is colored first.
pub fn degeneracy_ordering(g: &ConflictGraph) -> Vec<usize> {
    let n = g.len();
    let mut degree: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    let max_deg = degree.iter().copied().max().unwrap_or(0);
    let mut buckets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); max_deg + 1];
    for v in 0..n {
        buckets[degree[v]].insert(v);
    }
    let mut removed = vec![false; n];
    let mut removal = Vec::with_capacity(n);
    let mut low = 0;
    for _ in 0..n {
        while buckets[low].is_empty() {
            low += 1;
        }
        let v = buckets[low].pop_first().expect("bucket is nonempty");
        removed[v] = true;
        removal.push(v);
        for &u in g.neighbors(v) {
            if !removed[u] {
                buckets[degree[u]].remove(&u);
                degree[u] -= 1;
                buckets[degree[u]].insert(u);
            }
        }
        low = low.saturating_sub(1);
    }
    removal.reverse();
    removal
}

/// Largest number of neighbors any vertex has earlier in `order`.
pub fn max_back_degree(g: &ConflictGraph, order: &[usize]) -> usize {
    let mut pos = vec![usize::MAX; g.len()];
    for (k, &v) in order.iter().enumerate() {
        pos[v] = k;
    }
    order
        .iter()
        .enumerate()
        .map(|(k, &v)| g.neighbors(v).iter().filter(|&&u| pos[u] < k).count())
        .max()
        .unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coloring {
    /// Color of each vertex, `1..=num_colors`.
    colors: Vec<usize>,
    num_colors: usize,
}

impl Coloring {
    pub fn colors(&self) -> &[usize] {
        &self.colors
    }

    pub fn color(&self, v: usize) -> usize {
        self.colors[v]
    }

    pub fn num_colors(&self) -> usize {
        self.num_colors
    }

    pub fn is_proper(&self, g: &ConflictGraph) -> bool {
        (0..g.len()).all(|v| {
            g.neighbors(v)
                .iter()
                .all(|&u| self.colors[u] != self.colors[v])
        })
    }
}

fn check_order(g: &ConflictGraph, order: &[usize]) {
    let mut seen = vec![false; g.len()];
    for &v in order {
        assert!(
            v < g.len() && !seen[v],
            "order is not a permutation of the vertices"
        );
        seen[v] = true;
    }
    assert_eq!(
        order.len(),
        g.len(),
        "order is not a permutation of the vertices"
    );
}

/// First-fit coloring of `g` in the given order.
pub fn greedy_color_static(g: &ConflictGraph, order: &[usize]) -> Coloring {
    check_order(g, order);
    let mut colors = vec![0usize; g.len()];
    let mut num_colors = 0;
    let mut used = Vec::new();
    for &v in order {
        used.clear();
        used.resize(num_colors + 2, false);
        for &u in g.neighbors(v) {
            if colors[u] != 0 {
                used[colors[u]] = true;
            }
        }
        let c = (1..).find(|&c| !used[c]).expect("a free color exists");
        colors[v] = c;
        num_colors = num_colors.max(c);
    }
    Coloring { colors, num_colors }
}

/// Decode-aware first-fit coloring.
///
/// Coloring vertex `(i, j)` with `k` records that station `i` learns file
/// `j` at broadcast `k`. Color `k` is available to `(i, j)` when every
/// member `(i', j')` of class `k` either wants the same file or satisfies:
/// `j'` is known to `i` before broadcast `k`, and `j` is known to `i'`
/// before broadcast `k`. Known before `k` means held in the previous cache
/// or decoded at a broadcast strictly earlier than `k`.
///
/// The result need not be a proper coloring of `g`, but the XOR plan it
/// yields always decodes sequentially.
pub fn greedy_color_dynamic(inst: &UpdateInstance, g: &ConflictGraph, order: &[usize]) -> Coloring {
    check_order(g, order);
    // Per station: file -> broadcast at which it became known (0 = cached).
    let mut known: Vec<BTreeMap<FileId, usize>> = inst
        .prev()
        .iter()
        .map(|side| side.iter().map(|&f| (f, 0)).collect())
        .collect();
    let known_before = |known: &[BTreeMap<FileId, usize>], wcs: WcsId, file: FileId, k: usize| {
        known[wcs].get(&file).is_some_and(|&t| t < k)
    };
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut colors = vec![0usize; g.len()];
    for &v in order {
        let me = g.vertices()[v];
        let fits = |class: &[usize], k: usize, known: &[BTreeMap<FileId, usize>]| {
            class.iter().all(|&u| {
                let other = g.vertices()[u];
                other.file == me.file
                    || (known_before(known, me.wcs, other.file, k)
                        && known_before(known, other.wcs, me.file, k))
            })
        };
        let k = (1..=classes.len())
            .find(|&k| fits(&classes[k - 1], k, &known))
            .unwrap_or(classes.len() + 1);
        if k > classes.len() {
            classes.push(Vec::new());
        }
        classes[k - 1].push(v);
        colors[v] = k;
        known[me.wcs].insert(me.file, k);
    }
    Coloring {
        colors,
        num_colors: classes.len(),
    }
}

/// Broadcasts in color order; each one XORs the listed files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct XorPlan {
    pub transmissions: Vec<BTreeSet<FileId>>,
}

impl XorPlan {
    pub fn len(&self) -> usize {
        self.transmissions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transmissions.is_empty()
    }

    /// One uncoded broadcast per requested file.
    pub fn uncoded(inst: &UpdateInstance) -> Self {
        XorPlan {
            transmissions: inst
                .union_requests()
                .iter()
                .map(|&f| BTreeSet::from([f]))
                .collect(),
        }
    }
}

pub fn plan_from_coloring(g: &ConflictGraph, coloring: &Coloring) -> XorPlan {
    let mut transmissions = vec![BTreeSet::new(); coloring.num_colors()];
    for (v, vertex) in g.vertices().iter().enumerate() {
        transmissions[coloring.color(v) - 1].insert(vertex.file);
    }
    XorPlan { transmissions }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeEvent {
    pub wcs: WcsId,
    pub file: FileId,
    /// 1-based broadcast index.
    pub transmission: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeTrace {
    pub events: Vec<DecodeEvent>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanFailure {
    /// Requests still missing after the last broadcast.
    pub undecoded: Vec<Vertex>,
    /// Files broadcast that nobody requested.
    pub stray_files: Vec<FileId>,
    pub partial: DecodeTrace,
}

impl std::fmt::Display for PlanFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "undecodable requests:")?;
        for v in &self.undecoded {
            write!(f, " (wcs {}, file {})", v.wcs, v.file)?;
        }
        if !self.stray_files.is_empty() {
            write!(f, "; unrequested files in plan: {:?}", self.stray_files)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SideInfoMode {
    /// Decoded files join the station's side information immediately.
    Accumulate,
    /// Only the previous cache counts as side information.
    StaticOnly,
}

/// Replays the broadcasts in order at every station and reports which
/// request was decoded when.
pub fn verify_plan(
    plan: &XorPlan,
    inst: &UpdateInstance,
) -> std::result::Result<DecodeTrace, PlanFailure> {
    verify_plan_with(plan, inst, SideInfoMode::Accumulate)
}

pub fn verify_plan_with(
    plan: &XorPlan,
    inst: &UpdateInstance,
    mode: SideInfoMode,
) -> std::result::Result<DecodeTrace, PlanFailure> {
    let stray_files: Vec<FileId> = plan
        .transmissions
        .iter()
        .flatten()
        .filter(|f| !inst.union_requests().contains(f))
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut known: Vec<BTreeSet<FileId>> = inst.prev().to_vec();
    let mut pending: Vec<BTreeSet<FileId>> = inst.requests().to_vec();
    let mut events = Vec::new();
    for (idx, tx) in plan.transmissions.iter().enumerate() {
        let mut learned = Vec::new();
        for wcs in 0..inst.num_wcs() {
            let missing: Vec<FileId> = tx
                .iter()
                .filter(|f| !known[wcs].contains(f))
                .copied()
                .collect();
            if let [file] = missing[..] {
                if pending[wcs].remove(&file) {
                    events.push(DecodeEvent {
                        wcs,
                        file,
                        transmission: idx + 1,
                    });
                    learned.push((wcs, file));
                }
            }
        }
        if mode == SideInfoMode::Accumulate {
            for (wcs, file) in learned {
                known[wcs].insert(file);
            }
        }
    }
    let undecoded: Vec<Vertex> = pending
        .iter()
        .enumerate()
        .flat_map(|(wcs, files)| files.iter().map(move |&file| Vertex { wcs, file }))
        .collect();
    let trace = DecodeTrace { events };
    if undecoded.is_empty() && stray_files.is_empty() {
        Ok(trace)
    } else {
        Err(PlanFailure {
            undecoded,
            stray_files,
            partial: trace,
        })
    }
}

/// Natural-log bound `n sqrt(c) (1 - s / (n sqrt(c) ln s))` on the number of
/// index-coded broadcasts.
pub fn theorem3_bound(n: usize, c: u64, s: usize) -> Result<f64> {
    if s <= 1 {
        return Err(Error::domain(format!("bound needs ln s > 0, got s={s}")));
    }
    let scale = n as f64 * (c as f64).sqrt();
    Ok(scale * (1.0 - s as f64 / (scale * (s as f64).ln())))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Theorem3Report {
    pub n: usize,
    pub c: u64,
    pub s: usize,
    pub m: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub trials: usize,
    pub bound: f64,
    pub satisfied: usize,
    pub fraction: f64,
    pub max_colors: usize,
    pub min_colors: usize,
    pub mean_colors: f64,
    pub mean_t_un: f64,
    /// `histogram[k]` = trials that needed `k` broadcasts.
    pub histogram: BTreeMap<usize, usize>,
}

/// Monte-Carlo check of the index-coding bound: uniform rankings at every
/// station, one bounded drift step of budget `c`, then first-fit coloring
/// in degeneracy order.
///
/// The file count is `m = round(beta1 n sqrt(c))`. With `c = 0` that is
/// degenerate, so `m = round(beta2 s)` is used instead; no file moves, and
/// a trial counts as satisfied when it needs no broadcast at all.
pub fn check_theorem3(
    n: usize,
    c: u64,
    s: usize,
    beta1: f64,
    beta2: f64,
    trials: usize,
    rng: &mut SimRng,
) -> Result<Theorem3Report> {
    let bound = theorem3_bound(n, c, s)?;
    if beta1 < 1.0 || beta2 < 1.0 {
        return Err(Error::domain(format!(
            "beta1={beta1} and beta2={beta2} must both be >= 1"
        )));
    }
    let m = if c == 0 {
        (beta2 * s as f64).round() as usize
    } else {
        (beta1 * n as f64 * (c as f64).sqrt()).round() as usize
    };
    if m <= s {
        return Err(Error::domain(format!("file count m={m} must exceed s={s}")));
    }
    let mut histogram = BTreeMap::new();
    let mut satisfied = 0;
    let mut total_colors = 0;
    let mut total_t_un = 0;
    for _ in 0..trials {
        let before: Vec<Ranking> = (0..n).map(|_| Ranking::random(m, rng)).collect();
        let after: Vec<Ranking> = before.iter().map(|r| drift_bounded(r, c, rng)).collect();
        let inst = build_update(&top_s_cache(&before, s)?, &top_s_cache(&after, s)?)?;
        let g = build_conflict_graph(&inst);
        let coloring = greedy_color_static(&g, &degeneracy_ordering(&g));
        let k = coloring.num_colors();
        *histogram.entry(k).or_insert(0) += 1;
        if k as f64 <= bound || (c == 0 && k == 0) {
            satisfied += 1;
        }
        total_colors += k;
        total_t_un += inst.t_un();
    }
    Ok(Theorem3Report {
        n,
        c,
        s,
        m,
        beta1,
        beta2: m as f64 / s as f64,
        trials,
        bound,
        satisfied,
        fraction: satisfied as f64 / trials.max(1) as f64,
        max_colors: histogram.keys().next_back().copied().unwrap_or(0),
        min_colors: histogram.keys().next().copied().unwrap_or(0),
        mean_colors: total_colors as f64 / trials.max(1) as f64,
        mean_t_un: total_t_un as f64 / trials.max(1) as f64,
        histogram,
    })
}
