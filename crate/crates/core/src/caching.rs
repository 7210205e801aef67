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

//! Station caches and the refresh instance produced by one slot of drift.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::popularity::{
    drift_bounded, kendall_tau, max_distance_same_topset, product_topset_threshold, Ranking,
};
use crate::rng::SimRng;
use crate::{Error, FileId, Result, WcsId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Number of files in the pool.
    pub m: usize,
    /// Number of caching stations.
    pub n: usize,
    /// Files each station can hold.
    pub s: usize,
}

impl SystemConfig {
    pub fn new(m: usize, n: usize, s: usize) -> Result<Self> {
        let cfg = SystemConfig { m, n, s };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.s < 1 || self.s >= self.m {
            return Err(Error::domain(format!(
                "cache size s={} must satisfy 1 <= s < m={}",
                self.s, self.m
            )));
        }
        if self.n < 1 {
            return Err(Error::domain("need at least one caching station"));
        }
        Ok(())
    }
}

/// The set of files held by each station.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheState {
    m: usize,
    s: usize,
    sets: Vec<BTreeSet<FileId>>,
}

impl CacheState {
    pub fn new(m: usize, s: usize, sets: Vec<BTreeSet<FileId>>) -> Result<Self> {
        for (i, set) in sets.iter().enumerate() {
            if set.len() != s {
                return Err(Error::domain(format!(
                    "station {i} caches {} files, expected {s}",
                    set.len()
                )));
            }
            if let Some(f) = set.iter().find(|&&f| f >= m) {
                return Err(Error::domain(format!(
                    "station {i} caches unknown file {f}"
                )));
            }
        }
        Ok(CacheState { m, s, sets })
    }

    pub fn num_files(&self) -> usize {
        self.m
    }

    pub fn capacity(&self) -> usize {
        self.s
    }

    pub fn sets(&self) -> &[BTreeSet<FileId>] {
        &self.sets
    }

    pub fn get(&self, wcs: WcsId) -> &BTreeSet<FileId> {
        &self.sets[wcs]
    }
}

/// Each station caches the `s` files it currently ranks highest.
pub fn top_s_cache(rankings: &[Ranking], s: usize) -> Result<CacheState> {
    let m = rankings.first().map_or(0, Ranking::len);
    if rankings.iter().any(|r| r.len() != m) {
        return Err(Error::domain("rankings over different file counts"));
    }
    if s < 1 || s >= m {
        return Err(Error::domain(format!("need 1 <= s < m, got s={s}, m={m}")));
    }
    let sets = rankings.iter().map(|r| r.top(s)).collect();
    CacheState::new(m, s, sets)
}

/// One refresh round: what every station must fetch and what it already holds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "InstanceFile", into = "InstanceFile")]
pub struct UpdateInstance {
    m: usize,
    prev: Vec<BTreeSet<FileId>>,
    cur: Vec<BTreeSet<FileId>>,
    requests: Vec<BTreeSet<FileId>>,
    union_requests: BTreeSet<FileId>,
    overlaps: Vec<BTreeSet<FileId>>,
}

/// On-disk form of an instance: the two cache snapshots.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    pub m: usize,
    pub prev: Vec<BTreeSet<FileId>>,
    pub cur: Vec<BTreeSet<FileId>>,
}

impl TryFrom<InstanceFile> for UpdateInstance {
    type Error = Error;

    fn try_from(f: InstanceFile) -> Result<Self> {
        UpdateInstance::from_sets(f.m, f.prev, f.cur)
    }
}

impl From<UpdateInstance> for InstanceFile {
    fn from(inst: UpdateInstance) -> Self {
        InstanceFile {
            m: inst.m,
            prev: inst.prev,
            cur: inst.cur,
        }
    }
}

impl UpdateInstance {
    /// Builds an instance from arbitrary previous/current holdings. Caches
    /// need not have equal sizes, which allows hand-made scenarios.
    pub fn from_sets(
        m: usize,
        prev: Vec<BTreeSet<FileId>>,
        cur: Vec<BTreeSet<FileId>>,
    ) -> Result<Self> {
        if prev.len() != cur.len() {
            return Err(Error::domain(format!(
                "previous state has {} stations, current has {}",
                prev.len(),
                cur.len()
            )));
        }
        for (i, set) in prev.iter().chain(cur.iter()).enumerate() {
            if let Some(f) = set.iter().find(|&&f| f >= m) {
                return Err(Error::domain(format!(
                    "station {} references unknown file {f}",
                    i % prev.len().max(1)
                )));
            }
        }
        let requests: Vec<BTreeSet<FileId>> = cur
            .iter()
            .zip(&prev)
            .map(|(c, p)| c.difference(p).copied().collect())
            .collect();
        let union_requests: BTreeSet<FileId> = requests.iter().flatten().copied().collect();
        let overlaps = prev
            .iter()
            .map(|p| p.intersection(&union_requests).copied().collect())
            .collect();
        Ok(UpdateInstance {
            m,
            prev,
            cur,
            requests,
            union_requests,
            overlaps,
        })
    }

    /// Instance from per-station requests and side information. Current
    /// holdings are taken as `side ∪ requests`.
    pub fn from_requests(
        m: usize,
        requests: Vec<BTreeSet<FileId>>,
        side: Vec<BTreeSet<FileId>>,
    ) -> Result<Self> {
        for (i, (r, sd)) in requests.iter().zip(&side).enumerate() {
            if let Some(f) = r.intersection(sd).next() {
                return Err(Error::domain(format!(
                    "station {i} requests file {f} it already holds"
                )));
            }
        }
        let cur = requests
            .iter()
            .zip(&side)
            .map(|(r, sd)| r.union(sd).copied().collect())
            .collect();
        Self::from_sets(m, side, cur)
    }

    pub fn num_files(&self) -> usize {
        self.m
    }

    pub fn num_wcs(&self) -> usize {
        self.prev.len()
    }

    pub fn prev(&self) -> &[BTreeSet<FileId>] {
        &self.prev
    }

    pub fn cur(&self) -> &[BTreeSet<FileId>] {
        &self.cur
    }

    /// `R_i`: files station `i` must receive.
    pub fn requests(&self) -> &[BTreeSet<FileId>] {
        &self.requests
    }

    pub fn union_requests(&self) -> &BTreeSet<FileId> {
        &self.union_requests
    }

    /// Requested files (by anyone) that station `i` already holds.
    pub fn overlaps(&self) -> &[BTreeSet<FileId>] {
        &self.overlaps
    }

    /// Side information used for coding: everything station `i` held before the refresh.
    pub fn side_info(&self, wcs: WcsId) -> &BTreeSet<FileId> {
        &self.prev[wcs]
    }

    pub fn t_un(&self) -> usize {
        self.union_requests.len()
    }

    pub fn min_overlap(&self) -> usize {
        self.overlaps.iter().map(BTreeSet::len).min().unwrap_or(0)
    }

    pub fn total_requests(&self) -> usize {
        self.requests.iter().map(BTreeSet::len).sum()
    }
}

pub fn build_update(prev: &CacheState, cur: &CacheState) -> Result<UpdateInstance> {
    if prev.m != cur.m || prev.s != cur.s || prev.sets.len() != cur.sets.len() {
        return Err(Error::domain(format!(
            "cache states differ in shape: (m={}, s={}, n={}) vs (m={}, s={}, n={})",
            prev.m,
            prev.s,
            prev.sets.len(),
            cur.m,
            cur.s,
            cur.sets.len()
        )));
    }
    UpdateInstance::from_sets(prev.m, prev.sets.clone(), cur.sets.clone())
}

/// Uncoded refresh: broadcast every requested file once.
pub fn uncoded_transmissions(inst: &UpdateInstance) -> usize {
    inst.t_un()
}

/// Random instance for property checks: each station starts from a random
/// `s`-subset and swaps a random number of its files for uncached ones.
pub fn random_instance(cfg: &SystemConfig, rng: &mut SimRng) -> UpdateInstance {
    let mut prev = Vec::with_capacity(cfg.n);
    let mut cur = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let p: BTreeSet<FileId> = sample(rng, cfg.m, cfg.s).into_iter().collect();
        let outside: Vec<FileId> = (0..cfg.m).filter(|f| !p.contains(f)).collect();
        let swaps = rng.gen_range(0..=cfg.s.min(outside.len()));
        let held: Vec<FileId> = p.iter().copied().collect();
        let mut c = p.clone();
        for idx in sample(rng, held.len(), swaps) {
            c.remove(&held[idx]);
        }
        for idx in sample(rng, outside.len(), swaps) {
            c.insert(outside[idx]);
        }
        prev.push(p);
        cur.push(c);
    }
    UpdateInstance::from_sets(cfg.m, prev, cur).expect("sampled sets are in range")
}

/// Three stations over files `0..3`: requests `{0}`, `{0,1}`, `{2}` with
/// side information `{1}`, `{2}`, `{0}`. Uncoded needs three broadcasts,
/// static coloring three colors, dynamic coloring two.
pub fn three_station_example() -> UpdateInstance {
    let set = |files: &[FileId]| files.iter().copied().collect::<BTreeSet<FileId>>();
    UpdateInstance::from_requests(
        3,
        vec![set(&[0]), set(&[0, 1]), set(&[2])],
        vec![set(&[1]), set(&[2]), set(&[0])],
    )
    .expect("valid example")
}

fn isqrt(x: u64) -> u64 {
    let mut r = (x as f64).sqrt() as u64;
    while r * r > x {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= x {
        r += 1;
    }
    r
}

/// A bounded-drift round that broke one of the request-count bounds.
#[derive(Debug, Clone, Serialize)]
pub struct Theorem1Violation {
    pub trial: usize,
    pub wcs: Option<WcsId>,
    pub requests: usize,
    pub kendall: Option<u64>,
    pub t_un: usize,
    pub bound: u64,
}

/// Result of the exhaustive top-set check for one `(m, s)`.
#[derive(Debug, Clone, Serialize)]
pub struct TopsetCheck {
    pub m: usize,
    pub s: usize,
    pub bound: u64,
    pub product_threshold: u64,
    pub pairs: u64,
    /// Pairs with `K > bound` but equal top-`s` sets. Must be zero.
    pub violations: u64,
    /// A pair at exactly `K = bound` with equal top sets, when one exists.
    pub witness_at_bound: Option<(Vec<FileId>, Vec<FileId>)>,
    /// Pairs with `K > product_threshold` but equal top sets.
    pub product_violations: u64,
    pub product_witness: Option<(Vec<FileId>, Vec<FileId>, u64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Theorem1Report {
    pub config: SystemConfig,
    pub c: u64,
    pub trials: usize,
    pub per_wcs_bound: u64,
    pub union_bound: u64,
    pub max_requests_per_wcs: usize,
    pub max_t_un: usize,
    /// Largest observed `|R_i|^2` and the distance it was checked against.
    pub max_squared_requests: usize,
    pub violations: Vec<Theorem1Violation>,
    pub exhaustive: Vec<TopsetCheck>,
}

impl Theorem1Report {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.exhaustive.iter().all(|e| e.violations == 0)
    }
}

fn permutations(m: usize) -> Vec<Vec<FileId>> {
    let mut perm: Vec<FileId> = (0..m).collect();
    let mut out = vec![perm.clone()];
    // Heap's algorithm, iterative.
    let mut c = vec![0usize; m];
    let mut i = 0;
    while i < m {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            out.push(perm.clone());
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

/// Checks every pair of rankings of `m` files: distance above
/// [`max_distance_same_topset`] must force different top-`s` sets.
pub fn exhaustive_topset_check(m: usize) -> Result<Vec<TopsetCheck>> {
    if m < 2 {
        return Err(Error::domain("exhaustive check needs m >= 2"));
    }
    let perms = permutations(m);
    let rankings: Vec<Ranking> = perms
        .iter()
        .map(|o| Ranking::from_order(o).expect("generated permutation"))
        .collect();
    let mut checks: Vec<TopsetCheck> = (1..m)
        .map(|s| TopsetCheck {
            m,
            s,
            bound: max_distance_same_topset(m, s).expect("1 <= s < m"),
            product_threshold: product_topset_threshold(m, s).expect("1 <= s < m"),
            pairs: 0,
            violations: 0,
            witness_at_bound: None,
            product_violations: 0,
            product_witness: None,
        })
        .collect();
    let tops: Vec<Vec<Vec<FileId>>> = perms
        .iter()
        .map(|o| {
            (1..m)
                .map(|s| {
                    let mut t = o[..s].to_vec();
                    t.sort_unstable();
                    t
                })
                .collect()
        })
        .collect();
    for (ia, a) in rankings.iter().enumerate() {
        for (ib, b) in rankings.iter().enumerate() {
            let k = kendall_tau(a, b)?;
            for check in checks.iter_mut() {
                let s = check.s;
                check.pairs += 1;
                let same = tops[ia][s - 1] == tops[ib][s - 1];
                if !same {
                    continue;
                }
                if k > check.bound {
                    check.violations += 1;
                }
                if k == check.bound && check.witness_at_bound.is_none() {
                    check.witness_at_bound = Some((perms[ia].clone(), perms[ib].clone()));
                }
                if k > check.product_threshold {
                    check.product_violations += 1;
                    if check.product_witness.is_none() {
                        check.product_witness = Some((perms[ia].clone(), perms[ib].clone(), k));
                    }
                }
            }
        }
    }
    Ok(checks)
}

/// Runs `trials` bounded-drift rounds from uniform rankings and checks the
/// per-station bound `|R_i| <= floor(sqrt(c))` (with `|R_i|^2 <= K <= c`)
/// and `T_un <= min(n floor(sqrt(c)), m)`. Also runs the exhaustive top-set
/// check for `m` in 4..=6.
pub fn check_theorem1(
    config: &SystemConfig,
    c: u64,
    trials: usize,
    rng: &mut SimRng,
) -> Result<Theorem1Report> {
    config.validate()?;
    if trials < 1 {
        return Err(Error::domain("need at least one trial"));
    }
    let per_wcs_bound = isqrt(c);
    let union_bound = (config.n as u64 * per_wcs_bound).min(config.m as u64);
    let mut report = Theorem1Report {
        config: *config,
        c,
        trials,
        per_wcs_bound,
        union_bound,
        max_requests_per_wcs: 0,
        max_t_un: 0,
        max_squared_requests: 0,
        violations: Vec::new(),
        exhaustive: Vec::new(),
    };
    for trial in 0..trials {
        let before: Vec<Ranking> = (0..config.n)
            .map(|_| Ranking::random(config.m, rng))
            .collect();
        let after: Vec<Ranking> = before.iter().map(|r| drift_bounded(r, c, rng)).collect();
        let inst = build_update(
            &top_s_cache(&before, config.s)?,
            &top_s_cache(&after, config.s)?,
        )?;
        for (i, req) in inst.requests().iter().enumerate() {
            let k = kendall_tau(&before[i], &after[i])?;
            let r = req.len();
            report.max_requests_per_wcs = report.max_requests_per_wcs.max(r);
            report.max_squared_requests = report.max_squared_requests.max(r * r);
            if r as u64 > per_wcs_bound || (r * r) as u64 > k || k > c {
                report.violations.push(Theorem1Violation {
                    trial,
                    wcs: Some(i),
                    requests: r,
                    kendall: Some(k),
                    t_un: inst.t_un(),
                    bound: per_wcs_bound,
                });
            }
        }
        report.max_t_un = report.max_t_un.max(inst.t_un());
        if inst.t_un() as u64 > union_bound {
            report.violations.push(Theorem1Violation {
                trial,
                wcs: None,
                requests: inst.total_requests(),
                kendall: None,
                t_un: inst.t_un(),
                bound: union_bound,
            });
        }
    }
    for m in 4..=6 {
        report.exhaustive.extend(exhaustive_topset_check(m)?);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn set(files: &[FileId]) -> BTreeSet<FileId> {
        files.iter().copied().collect()
    }

    #[test]
    fn top_s_of_identity_and_example_rankings() {
        let id = Ranking::identity(4);
        assert_eq!(top_s_cache(&[id], 2).unwrap().get(0), &set(&[0, 1]));
        let second = Ranking::from_positions(vec![3, 4, 1, 2]).unwrap();
        assert_eq!(top_s_cache(&[second], 2).unwrap().get(0), &set(&[2, 3]));
    }

    #[test]
    fn top_s_matches_rank_filter() {
        let mut rng = seeded(21);
        for _ in 0..200 {
            let m = rng.gen_range(2..=10);
            let s = rng.gen_range(1..m);
            let rs: Vec<Ranking> = (0..3).map(|_| Ranking::random(m, &mut rng)).collect();
            let cache = top_s_cache(&rs, s).unwrap();
            for (i, r) in rs.iter().enumerate() {
                let expected: BTreeSet<FileId> =
                    (0..m).filter(|&f| r.rank(f) as usize <= s).collect();
                assert_eq!(cache.get(i), &expected);
            }
        }
    }

    #[test]
    fn top_s_rejects_bad_capacity() {
        let r = Ranking::identity(4);
        assert!(top_s_cache(std::slice::from_ref(&r), 0).is_err());
        assert!(top_s_cache(&[r], 4).is_err());
    }

    #[test]
    fn unchanged_caches_need_nothing() {
        let cache = CacheState::new(5, 2, vec![set(&[0, 1]), set(&[3, 4])]).unwrap();
        let inst = build_update(&cache, &cache).unwrap();
        assert!(inst.requests().iter().all(BTreeSet::is_empty));
        assert_eq!(uncoded_transmissions(&inst), 0);
    }

    #[test]
    fn fig2_union_and_uncoded_count() {
        let inst = three_station_example();
        assert_eq!(inst.union_requests(), &set(&[0, 1, 2]));
        assert_eq!(uncoded_transmissions(&inst), 3);
        assert_eq!(inst.overlaps(), &[set(&[1]), set(&[2]), set(&[0])]);
        assert_eq!(inst.min_overlap(), 1);
    }

    #[test]
    fn mismatched_states_are_rejected() {
        let a = CacheState::new(5, 2, vec![set(&[0, 1])]).unwrap();
        let b = CacheState::new(5, 2, vec![set(&[0, 1]), set(&[2, 3])]).unwrap();
        assert!(build_update(&a, &b).is_err());
        let c = CacheState::new(6, 2, vec![set(&[0, 1])]).unwrap();
        assert!(build_update(&a, &c).is_err());
        assert!(CacheState::new(5, 2, vec![set(&[0])]).is_err());
        assert!(CacheState::new(5, 2, vec![set(&[0, 7])]).is_err());
    }

    #[test]
    fn instance_set_algebra_holds() {
        let mut rng = seeded(31);
        for _ in 0..1000 {
            let m = rng.gen_range(2..=30);
            let s = rng.gen_range(1..m);
            let n = rng.gen_range(1..=6);
            let cfg = SystemConfig::new(m, n, s).unwrap();
            let inst = random_instance(&cfg, &mut rng);
            let mut union = BTreeSet::new();
            for i in 0..n {
                let req = &inst.requests()[i];
                let expect: BTreeSet<FileId> =
                    inst.cur()[i].difference(&inst.prev()[i]).copied().collect();
                assert_eq!(req, &expect);
                assert!(inst.overlaps()[i].is_disjoint(req));
                let evicted = inst.prev()[i].difference(&inst.cur()[i]).count();
                assert_eq!(req.len(), evicted);
                union.extend(req.iter().copied());
            }
            assert_eq!(&union, inst.union_requests());
            for i in 0..n {
                let expect: BTreeSet<FileId> =
                    union.intersection(&inst.prev()[i]).copied().collect();
                assert_eq!(inst.overlaps()[i], expect);
            }
            assert!(inst.t_un() <= inst.total_requests());
            assert!(inst.t_un() <= m);
        }
    }

    #[test]
    fn bounded_drift_requests_squared_within_distance() {
        let mut rng = seeded(41);
        for _ in 0..1000 {
            let m = rng.gen_range(3..=40);
            let s = rng.gen_range(1..m);
            let c = rng.gen_range(0..=40);
            let a = Ranking::random(m, &mut rng);
            let b = drift_bounded(&a, c, &mut rng);
            let inst = build_update(
                &top_s_cache(std::slice::from_ref(&a), s).unwrap(),
                &top_s_cache(std::slice::from_ref(&b), s).unwrap(),
            )
            .unwrap();
            let r = inst.requests()[0].len() as u64;
            let k = kendall_tau(&a, &b).unwrap();
            assert!(r * r <= k && k <= c);
        }
    }

    #[test]
    fn theorem1_zero_budget_means_no_requests() {
        let cfg = SystemConfig::new(30, 4, 5).unwrap();
        let report = check_theorem1(&cfg, 0, 50, &mut seeded(1)).unwrap();
        assert!(report.passed());
        assert_eq!(report.max_requests_per_wcs, 0);
        assert_eq!(report.max_t_un, 0);
    }

    #[test]
    fn theorem1_per_wcs_bound_at_c25() {
        let cfg = SystemConfig::new(100, 10, 20).unwrap();
        let report = check_theorem1(&cfg, 25, 1000, &mut seeded(2)).unwrap();
        assert_eq!(report.per_wcs_bound, 5);
        assert!(report.violations.is_empty(), "{:?}", report.violations);
        assert!(report.max_requests_per_wcs <= 5);
    }

    #[test]
    fn exhaustive_m6_has_no_violations() {
        for check in exhaustive_topset_check(6).unwrap() {
            assert_eq!(check.pairs, 720 * 720);
            assert_eq!(check.violations, 0, "m=6 s={}", check.s);
            if check.s >= 2 && 6 - check.s >= 2 {
                assert!(check.witness_at_bound.is_some());
            }
        }
    }

    #[test]
    fn product_threshold_fails_at_m4_s2() {
        let checks = exhaustive_topset_check(4).unwrap();
        let s2 = &checks[1];
        assert_eq!(s2.product_threshold, 1);
        assert!(s2.product_violations > 0);
        let (_, _, k) = s2.product_witness.clone().unwrap();
        assert_eq!(k, 2);
    }

    #[test]
    fn isqrt_is_floor() {
        for x in 0..2000u64 {
            let r = isqrt(x);
            assert!(r * r <= x && (r + 1) * (r + 1) > x);
        }
    }

    #[test]
    fn instance_json_round_trip() {
        let inst = three_station_example();
        let text = serde_json::to_string(&inst).unwrap();
        let back: UpdateInstance = serde_json::from_str(&text).unwrap();
        assert_eq!(back, inst);
    }
}
