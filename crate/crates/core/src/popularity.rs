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

//! Popularity rankings and how they drift between slots.
//!
//! A [`Ranking`] stores, for every file, its rank `1..=m` (rank 1 is the most
//! popular). Two drift processes are provided: [`PopularityState::drift`]
//! perturbs real-valued popularity scores, and [`drift_bounded`] applies a
//! fixed number of adjacent transpositions so that the Kendall tau distance
//! to the previous ranking never exceeds the budget.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::SimRng;
use crate::{Error, FileId, Result};

/// Popularity order over `m` files, stored as the rank of each file.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct Ranking {
    positions: Vec<u32>,
}

impl Ranking {
    /// Builds a ranking from `positions[f]` = rank of file `f`, ranks in `1..=m`.
    pub fn from_positions(positions: Vec<u32>) -> Result<Self> {
        let m = positions.len();
        let mut seen = vec![false; m];
        for (file, &rank) in positions.iter().enumerate() {
            if rank == 0 || rank as usize > m {
                return Err(Error::domain(format!(
                    "rank {rank} of file {file} outside 1..={m}"
                )));
            }
            let slot = &mut seen[rank as usize - 1];
            if *slot {
                return Err(Error::domain(format!("rank {rank} used more than once")));
            }
            *slot = true;
        }
        Ok(Ranking { positions })
    }

    /// Builds a ranking from files listed in decreasing popularity.
    pub fn from_order(order: &[FileId]) -> Result<Self> {
        let m = order.len();
        let mut positions = vec![0u32; m];
        for (idx, &file) in order.iter().enumerate() {
            if file >= m {
                return Err(Error::domain(format!("file id {file} outside 0..{m}")));
            }
            if positions[file] != 0 {
                return Err(Error::domain(format!(
                    "file id {file} listed more than once"
                )));
            }
            positions[file] = idx as u32 + 1;
        }
        Ok(Ranking { positions })
    }

    pub fn identity(m: usize) -> Self {
        Ranking {
            positions: (1..=m as u32).collect(),
        }
    }

    /// Uniformly random ranking of `m` files.
    pub fn random(m: usize, rng: &mut SimRng) -> Self {
        let mut order: Vec<FileId> = (0..m).collect();
        order.shuffle(rng);
        Self::from_order(&order).expect("shuffled identity is a permutation")
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn rank(&self, file: FileId) -> u32 {
        self.positions[file]
    }

    pub fn positions(&self) -> &[u32] {
        &self.positions
    }

    /// Files in decreasing popularity (rank 1 first).
    pub fn order(&self) -> Vec<FileId> {
        let mut order = vec![0; self.len()];
        for (file, &rank) in self.positions.iter().enumerate() {
            order[rank as usize - 1] = file;
        }
        order
    }

    /// The `s` most popular files.
    pub fn top(&self, s: usize) -> BTreeSet<FileId> {
        self.positions
            .iter()
            .enumerate()
            .filter(|(_, &rank)| rank as usize <= s)
            .map(|(file, _)| file)
            .collect()
    }
}

impl TryFrom<Vec<u32>> for Ranking {
    type Error = Error;

    fn try_from(positions: Vec<u32>) -> Result<Self> {
        Ranking::from_positions(positions)
    }
}

impl From<Ranking> for Vec<u32> {
    fn from(r: Ranking) -> Self {
        r.positions
    }
}

/// Number of file pairs ordered differently by `a` and `b`.
///
/// Reads `b`'s ranks in `a`'s order and counts inversions with a merge sort,
/// `O(m log m)`.
pub fn kendall_tau(a: &Ranking, b: &Ranking) -> Result<u64> {
    if a.len() != b.len() {
        return Err(Error::domain(format!(
            "rankings over different file counts ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    let mut seq: Vec<u32> = a.order().into_iter().map(|f| b.rank(f)).collect();
    let mut scratch = vec![0u32; seq.len()];
    Ok(count_inversions(&mut seq, &mut scratch))
}

fn count_inversions(seq: &mut [u32], scratch: &mut [u32]) -> u64 {
    let len = seq.len();
    if len < 2 {
        return 0;
    }
    let mid = len / 2;
    let mut count = {
        let (left, right) = seq.split_at_mut(mid);
        let (sl, sr) = scratch.split_at_mut(mid);
        count_inversions(left, sl) + count_inversions(right, sr)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < len {
        if seq[i] <= seq[j] {
            scratch[k] = seq[i];
            i += 1;
        } else {
            scratch[k] = seq[j];
            count += (mid - i) as u64;
            j += 1;
        }
        k += 1;
    }
    scratch[k..k + mid - i].copy_from_slice(&seq[i..mid]);
    k += mid - i;
    scratch[k..k + len - j].copy_from_slice(&seq[j..len]);
    seq.copy_from_slice(&scratch[..len]);
    count
}

fn binom2(x: u64) -> u64 {
    x * x.saturating_sub(1) / 2
}

/// Largest Kendall tau distance between two rankings of `m` files that
/// share the same top-`s` set: `C(s,2) + C(m-s,2)`.
///
/// Pairs straddling the top/bottom boundary are ordered the same way in
/// both rankings, so only within-top and within-bottom pairs can disagree.
pub fn max_distance_same_topset(m: usize, s: usize) -> Result<u64> {
    if s < 1 || s >= m {
        return Err(Error::domain(format!("need 1 <= s < m, got s={s}, m={m}")));
    }
    Ok(binom2(s as u64) + binom2((m - s) as u64))
}

/// The product-form threshold `s(s-1)(m-s)(m-s-1)/4` for the top-set
/// argument. Kept for reporting; [`max_distance_same_topset`] is the bound
/// that actually holds.
pub fn product_topset_threshold(m: usize, s: usize) -> Result<u64> {
    if s < 1 || s >= m {
        return Err(Error::domain(format!("need 1 <= s < m, got s={s}, m={m}")));
    }
    Ok(binom2(s as u64) * binom2((m - s) as u64))
}

/// Ranks files by decreasing value. Equal values go to the smaller file id first.
pub fn rank_from_values(values: &[f64]) -> Result<Ranking> {
    if let Some(f) = values.iter().position(|v| v.is_nan()) {
        return Err(Error::domain(format!("popularity of file {f} is NaN")));
    }
    let mut order: Vec<FileId> = (0..values.len()).collect();
    order.sort_by(|&x, &y| {
        values[y]
            .partial_cmp(&values[x])
            .expect("NaN rejected above")
            .then(x.cmp(&y))
    });
    Ranking::from_order(&order)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftParams {
    /// Kendall tau budget per slot for bounded drift.
    pub c: u64,
    /// Width of the per-slot value perturbation, drawn from `[-p/2, p/2]`.
    pub p: f64,
    /// Fraction of files whose popularity evolves separately at each station.
    pub q: f64,
}

impl DriftParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 0.0 && self.p.is_finite()) {
            return Err(Error::domain(format!(
                "drift magnitude p={} must be >= 0",
                self.p
            )));
        }
        if !(0.0..=1.0).contains(&self.q) {
            return Err(Error::domain(format!(
                "spatial fraction q={} outside [0,1]",
                self.q
            )));
        }
        Ok(())
    }
}

/// Real-valued popularity of every file at every station.
///
/// Global files share one value across stations; local files evolve
/// independently per station.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopularityState {
    values: Vec<Vec<f64>>,
    global_files: BTreeSet<FileId>,
    local_files: BTreeSet<FileId>,
}

impl PopularityState {
    /// Every file starts from one value uniform in `[0,1]`, shared by all
    /// stations. `round(q*m)` randomly chosen files are local: from then on
    /// they drift independently at each station.
    pub fn random(n: usize, m: usize, q: f64, rng: &mut SimRng) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::domain(format!(
                "spatial fraction q={q} outside [0,1]"
            )));
        }
        let mut files: Vec<FileId> = (0..m).collect();
        files.shuffle(rng);
        let n_local = (q * m as f64).round() as usize;
        let local_files: BTreeSet<FileId> = files[..n_local].iter().copied().collect();
        let global_files: BTreeSet<FileId> = files[n_local..].iter().copied().collect();
        let initial: Vec<f64> = (0..m).map(|_| rng.gen()).collect();
        Ok(PopularityState {
            values: vec![initial; n],
            global_files,
            local_files,
        })
    }

    pub fn from_parts(values: Vec<Vec<f64>>, local_files: BTreeSet<FileId>) -> Result<Self> {
        let m = values.first().map_or(0, Vec::len);
        if values.iter().any(|row| row.len() != m) {
            return Err(Error::domain("popularity rows differ in length"));
        }
        if let Some(&f) = local_files.iter().find(|&&f| f >= m) {
            return Err(Error::domain(format!("local file {f} outside 0..{m}")));
        }
        if values.iter().flatten().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::domain("popularity value outside [0,1]"));
        }
        let global_files: BTreeSet<FileId> = (0..m).filter(|f| !local_files.contains(f)).collect();
        for &f in &global_files {
            if values.iter().any(|row| row[f] != values[0][f]) {
                return Err(Error::domain(format!(
                    "global file {f} has different values across stations"
                )));
            }
        }
        Ok(PopularityState {
            values,
            global_files,
            local_files,
        })
    }

    pub fn num_wcs(&self) -> usize {
        self.values.len()
    }

    pub fn num_files(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn global_files(&self) -> &BTreeSet<FileId> {
        &self.global_files
    }

    pub fn local_files(&self) -> &BTreeSet<FileId> {
        &self.local_files
    }

    /// Current ranking at every station.
    pub fn rankings(&self) -> Vec<Ranking> {
        self.values
            .iter()
            .map(|row| rank_from_values(row).expect("values are clamped reals"))
            .collect()
    }

    /// One slot of value drift; see [`drift_values`].
    pub fn drift(&mut self, p: f64, rng: &mut SimRng) {
        let half = p / 2.0;
        for f in 0..self.num_files() {
            if self.global_files.contains(&f) {
                let delta = rng.gen::<f64>() * p - half;
                for row in &mut self.values {
                    row[f] = (row[f] + delta).clamp(0.0, 1.0);
                }
            } else {
                for row in &mut self.values {
                    let delta = rng.gen::<f64>() * p - half;
                    row[f] = (row[f] + delta).clamp(0.0, 1.0);
                }
            }
        }
    }
}

/// Returns `state` after one slot of uniform `[-p/2, p/2]` perturbation,
/// clamped to `[0,1]`.
pub fn drift_values(
    state: &PopularityState,
    params: &DriftParams,
    rng: &mut SimRng,
) -> PopularityState {
    let mut next = state.clone();
    next.drift(params.p, rng);
    next
}

/// Applies `c` uniformly chosen adjacent transpositions to the popularity
/// order, so the result is within Kendall tau distance `c` of `r`.
pub fn drift_bounded(r: &Ranking, c: u64, rng: &mut SimRng) -> Ranking {
    let m = r.len();
    if m < 2 {
        return r.clone();
    }
    let mut order = r.order();
    for _ in 0..c {
        let k = rng.gen_range(0..m - 1);
        order.swap(k, k + 1);
    }
    Ranking::from_order(&order).expect("swaps preserve the permutation")
}
