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

//! MDS-coded cache refresh.
//!
//! All `T_un` requested files are mixed into
//! `T = T_un - min_i |S†_i|` coded broadcasts, where `S†_i` is the part of
//! the requested union that station `i` already holds. The coefficient
//! matrix is a `T x T_un` Vandermonde matrix over distinct nonzero points,
//! so any `T` of its columns form an invertible square Vandermonde matrix
//! and every station can solve for the files it lacks after removing the
//! contribution of the ones it holds.

use std::collections::BTreeMap;

use rand::RngCore;
use serde::Serialize;

use crate::caching::{random_instance, SystemConfig, UpdateInstance};
use crate::gf::{bytes_to_symbols, symbols_to_bytes, FieldWidth, GaloisField};
use crate::rng::SimRng;
use crate::{Error, FileId, Result, WcsId};

pub type Payload = Vec<u8>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MdsPlan {
    width: FieldWidth,
    /// Row `tau`, column `j`: `point_j ^ tau`.
    coeffs: Vec<Vec<u16>>,
    /// Column order of the requested files.
    file_order: Vec<FileId>,
}

impl MdsPlan {
    pub fn width(&self) -> FieldWidth {
        self.width
    }

    pub fn coeffs(&self) -> &[Vec<u16>] {
        &self.coeffs
    }

    pub fn file_order(&self) -> &[FileId] {
        &self.file_order
    }

    /// Number of coded broadcasts.
    pub fn transmissions(&self) -> usize {
        self.coeffs.len()
    }

    pub fn t_un(&self) -> usize {
        self.file_order.len()
    }

    fn field(&self) -> &'static GaloisField {
        GaloisField::get(self.width)
    }

    /// Whether the square submatrix on the given columns is invertible.
    pub fn columns_invertible(&self, cols: &[usize]) -> bool {
        let t = self.transmissions();
        if cols.len() != t {
            return false;
        }
        let mut m: Vec<Vec<u16>> = self
            .coeffs
            .iter()
            .map(|row| cols.iter().map(|&c| row[c]).collect())
            .collect();
        rank(self.field(), &mut m) == t
    }
}

fn rank(gf: &GaloisField, m: &mut [Vec<u16>]) -> usize {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| m[i][c] != 0) else {
            continue;
        };
        m.swap(r, p);
        let inv = gf.inv(m[r][c]).expect("pivot is nonzero");
        gf.scale(&mut m[r], inv);
        let pivot = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i != r && row[c] != 0 {
                let f = row[c];
                gf.mul_add_into(row, f, &pivot);
            }
        }
        r += 1;
        if r == rows {
            break;
        }
    }
    r
}

/// Builds the Vandermonde plan for an instance. Uses GF(2^8) while
/// `T_un < 256`, GF(2^16) beyond that.
pub fn build_mds_plan(inst: &UpdateInstance) -> Result<MdsPlan> {
    let t_un = inst.t_un();
    let width = FieldWidth::for_points(t_un)?;
    let gf = GaloisField::get(width);
    let t = t_un - inst.min_overlap();
    let file_order: Vec<FileId> = inst.union_requests().iter().copied().collect();
    let coeffs = (0..t as u32)
        .map(|tau| {
            (1..=t_un as u32)
                .map(|point| gf.pow(point as u16, tau))
                .collect()
        })
        .collect();
    Ok(MdsPlan {
        width,
        coeffs,
        file_order,
    })
}

fn file_symbols(
    plan: &MdsPlan,
    files: &BTreeMap<FileId, Payload>,
    wanted: impl Iterator<Item = FileId>,
) -> Result<Vec<(FileId, Vec<u16>)>> {
    let mut len = None;
    wanted
        .map(|f| {
            let bytes = files
                .get(&f)
                .ok_or_else(|| Error::domain(format!("payload for file {f} missing")))?;
            match len {
                None => len = Some(bytes.len()),
                Some(l) if l != bytes.len() => {
                    return Err(Error::domain(format!(
                        "payload for file {f} has {} bytes, expected {l}",
                        bytes.len()
                    )))
                }
                _ => {}
            }
            Ok((f, bytes_to_symbols(bytes, plan.width)?))
        })
        .collect()
}

/// Computes `x_tau = sum_j coeffs[tau][j] * b_j` for every broadcast.
pub fn mds_encode(plan: &MdsPlan, files: &BTreeMap<FileId, Payload>) -> Result<Vec<Payload>> {
    if plan.transmissions() == 0 {
        return Ok(Vec::new());
    }
    let gf = plan.field();
    let symbols = file_symbols(plan, files, plan.file_order.iter().copied())?;
    let len = symbols[0].1.len();
    Ok(plan
        .coeffs
        .iter()
        .map(|row| {
            let mut acc = vec![0u16; len];
            for (coef, (_, b)) in row.iter().zip(&symbols) {
                gf.mul_add_into(&mut acc, *coef, b);
            }
            symbols_to_bytes(&acc, plan.width)
        })
        .collect())
}

/// Recovers every requested file a station does not hold.
///
/// `side_files` holds the station's payloads for files of the requested
/// union it already caches; entries for files outside the union are
/// ignored. Only as many broadcasts as there are unknown files are used.
pub fn mds_decode(
    plan: &MdsPlan,
    side_files: &BTreeMap<FileId, Payload>,
    transmissions: &[Payload],
) -> Result<BTreeMap<FileId, Payload>> {
    let gf = plan.field();
    let (known_cols, unknown_cols): (Vec<usize>, Vec<usize>) =
        (0..plan.t_un()).partition(|&j| side_files.contains_key(&plan.file_order[j]));
    let u = unknown_cols.len();
    if u == 0 {
        return Ok(BTreeMap::new());
    }
    if u > plan.transmissions() {
        return Err(Error::domain(format!(
            "station lacks {u} files but only {} broadcasts exist",
            plan.transmissions()
        )));
    }
    if transmissions.len() < u {
        return Err(Error::domain(format!(
            "need {u} broadcasts, received {}",
            transmissions.len()
        )));
    }
    let known = file_symbols(
        plan,
        side_files,
        known_cols.iter().map(|&j| plan.file_order[j]),
    )?;
    let tx_symbols: Vec<Vec<u16>> = transmissions[..u]
        .iter()
        .map(|x| bytes_to_symbols(x, plan.width))
        .collect::<Result<_>>()?;
    let len = tx_symbols[0].len();
    if tx_symbols.iter().any(|x| x.len() != len) || known.iter().any(|(_, b)| b.len() != len) {
        return Err(Error::domain("broadcast and side payload lengths differ"));
    }

    // Augmented rows [A_unknown | x'] with x' = x - sum_known a*b.
    let mut rows: Vec<Vec<u16>> = Vec::with_capacity(u);
    for (tau, x) in tx_symbols.into_iter().enumerate() {
        let coeffs = &plan.coeffs[tau];
        let mut rhs = x;
        for (&j, (_, b)) in known_cols.iter().zip(&known) {
            gf.mul_add_into(&mut rhs, coeffs[j], b);
        }
        let mut row: Vec<u16> = unknown_cols.iter().map(|&j| coeffs[j]).collect();
        row.extend(rhs);
        rows.push(row);
    }

    for c in 0..u {
        let p = (c..u).find(|&i| rows[i][c] != 0).ok_or_else(|| {
            Error::Verification(format!(
                "coefficient submatrix singular at column {c}: MDS property violated"
            ))
        })?;
        rows.swap(c, p);
        let inv = gf.inv(rows[c][c])?;
        gf.scale(&mut rows[c], inv);
        let pivot = rows[c].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != c && row[c] != 0 {
                let f = row[c];
                gf.mul_add_into(row, f, &pivot);
            }
        }
    }

    Ok(unknown_cols
        .iter()
        .zip(rows)
        .map(|(&j, row)| (plan.file_order[j], symbols_to_bytes(&row[u..], plan.width)))
        .collect())
}

/// The payloads a station holds among the requested files.
pub fn side_payloads(
    plan: &MdsPlan,
    inst: &UpdateInstance,
    wcs: WcsId,
    files: &BTreeMap<FileId, Payload>,
) -> BTreeMap<FileId, Payload> {
    plan.file_order
        .iter()
        .filter(|f| inst.side_info(wcs).contains(f))
        .filter_map(|f| files.get(f).map(|p| (*f, p.clone())))
        .collect()
}

/// Random payloads of `len` bytes for every requested file.
pub fn random_payloads(
    inst: &UpdateInstance,
    len: usize,
    rng: &mut SimRng,
) -> BTreeMap<FileId, Payload> {
    inst.union_requests()
        .iter()
        .map(|&f| {
            let mut bytes = vec![0u8; len];
            rng.fill_bytes(&mut bytes);
            (f, bytes)
        })
        .collect()
}

/// Encodes, decodes at every station and compares byte-exactly.
/// Returns the number of broadcasts used.
pub fn verify_round_trip(
    plan: &MdsPlan,
    inst: &UpdateInstance,
    files: &BTreeMap<FileId, Payload>,
) -> Result<usize> {
    let x = mds_encode(plan, files)?;
    for wcs in 0..inst.num_wcs() {
        let side = side_payloads(plan, inst, wcs, files);
        let recovered = mds_decode(plan, &side, &x)?;
        for f in &inst.requests()[wcs] {
            match recovered.get(f) {
                Some(p) if p == &files[f] => {}
                Some(_) => {
                    return Err(Error::Verification(format!(
                        "station {wcs} decoded wrong bytes for file {f}"
                    )))
                }
                None => {
                    return Err(Error::Verification(format!(
                        "station {wcs} did not recover file {f}"
                    )))
                }
            }
        }
    }
    Ok(x.len())
}

#[derive(Debug, Clone, Serialize)]
pub struct Theorem2Failure {
    pub trial: usize,
    pub config: SystemConfig,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Theorem2Report {
    pub trials: usize,
    pub payload_len: usize,
    pub total_t_un: usize,
    pub total_transmissions: usize,
    pub failures: Vec<Theorem2Failure>,
}

impl Theorem2Report {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Random instances with `n <= 8`, `m <= 40`, `s <= 12`: the plan must use
/// exactly `T_un - min_i |S†_i|` broadcasts and decode byte-exactly everywhere.
pub fn check_theorem2(trials: usize, payload_len: usize, rng: &mut SimRng) -> Theorem2Report {
    use rand::Rng;
    let mut report = Theorem2Report {
        trials,
        payload_len,
        total_t_un: 0,
        total_transmissions: 0,
        failures: Vec::new(),
    };
    for trial in 0..trials {
        let m = rng.gen_range(2..=40);
        let s = rng.gen_range(1..=12.min(m - 1));
        let n = rng.gen_range(1..=8);
        let config = SystemConfig { m, n, s };
        let inst = random_instance(&config, rng);
        let files = random_payloads(&inst, payload_len, rng);
        let expected = inst.t_un() - inst.min_overlap();
        let outcome = build_mds_plan(&inst).and_then(|plan| {
            let used = verify_round_trip(&plan, &inst, &files)?;
            if used != expected {
                return Err(Error::Verification(format!(
                    "used {used} broadcasts, expected {expected}"
                )));
            }
            Ok(used)
        });
        match outcome {
            Ok(used) => {
                report.total_t_un += inst.t_un();
                report.total_transmissions += used;
            }
            Err(e) => report.failures.push(Theorem2Failure {
                trial,
                config,
                message: e.to_string(),
            }),
        }
    }
    report
}

/// All `k`-subsets of `0..n`, lexicographic.
#[cfg(test)]
pub(crate) fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}
