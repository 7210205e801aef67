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

//! Cache-refresh transmission schemes for a macro base station pushing
//! popularity-driven updates to a set of wireless caching stations.
//!
//! The crate is organized bottom-up:
//!
//! * [`popularity`]: rankings, Kendall tau distance, drift processes.
//! * [`caching`]: per-station caches and refresh instances, the uncoded baseline.
//! * [`gf`] and [`mds`]: finite-field arithmetic and the MDS-coded refresh.
//! * [`indexcoding`]: conflict graphs, static and dynamic greedy coloring,
//!   XOR plans and their sequential decode check.
//! * [`harness`]: multi-slot episodes, sweeps, traces and result files.
//! * [`cli`]: the `edgecache` command-line front end.

pub mod caching;
pub mod cli;
pub mod error;
pub mod gf;
pub mod harness;
pub mod indexcoding;
pub mod mds;
pub mod popularity;
pub mod rng;

pub use error::{Error, Result};

/// Index of a file in the pool, `0..m`.
pub type FileId = usize;

/// Index of a wireless caching station, `0..n`.
pub type WcsId = usize;
