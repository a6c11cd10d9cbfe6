use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::IntervalOptions;
use crate::rng;
use crate::tower::OccupancyOptions;

/// Required sign of `value − bound`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    AtLeast,
    AtMost,
    /// `|value − bound|` within the error bar.
    Within,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    ClosedForm,
    Grid,
    MonteCarlo,
}

fn margin(value: f64, bound: f64, direction: Direction) -> f64 {
    match direction {
        Direction::AtLeast => value - bound,
        Direction::AtMost => bound - value,
        Direction::Within => -(value - bound).abs(),
    }
}

/// A secondary inequality attached to a probe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuxCheck {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub direction: Direction,
    pub tolerance: f64,
    pub pass: bool,
}

impl AuxCheck {
    pub fn new(name: &str, value: f64, bound: f64, direction: Direction, tolerance: f64) -> Self {
        let pass = margin(value, bound, direction) >= -tolerance;
        AuxCheck {
            name: name.to_string(),
            value,
            bound,
            direction,
            tolerance,
            pass: pass && value.is_finite(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub name: String,
    pub k: Option<usize>,
    pub n: Option<u64>,
    pub value: f64,
    pub bound: f64,
    pub direction: Direction,
    pub method: Method,
    pub error_bar: f64,
    pub pass: bool,
    pub aux: Vec<AuxCheck>,
}

impl ProbeResult {
    /// Passes when the margin in the required direction is at least the
    /// error bar (for `Within`: the gap is at most the error bar).
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: &str,
        k: Option<usize>,
        n: Option<u64>,
        value: f64,
        bound: f64,
        direction: Direction,
        method: Method,
        error_bar: f64,
    ) -> Self {
        let mut p = ProbeResult {
            name: name.to_string(),
            k,
            n,
            value,
            bound,
            direction,
            method,
            error_bar,
            pass: false,
            aux: Vec::new(),
        };
        p.pass = p.main_pass();
        p
    }

    pub fn margin(&self) -> f64 {
        margin(self.value, self.bound, self.direction)
    }

    fn main_pass(&self) -> bool {
        if !self.value.is_finite() {
            return false;
        }
        match self.direction {
            Direction::Within => (self.value - self.bound).abs() <= self.error_bar,
            _ => self.margin() >= self.error_bar,
        }
    }

    pub fn with_aux(mut self, aux: AuxCheck) -> Self {
        self.aux.push(aux);
        self.pass = self.main_pass() && self.aux.iter().all(|a| a.pass);
        self
    }

    pub fn aux(&self, name: &str) -> Option<&AuxCheck> {
        self.aux.iter().find(|a| a.name == name)
    }
}

/// Shared knobs for probes.
#[derive(Clone, Debug)]
pub struct ProbeOptions {
    pub occupancy: OccupancyOptions,
    pub interval: IntervalOptions,
    pub mc_reps: u64,
    pub seed: u64,
    pub mds_window: usize,
    pub mds_reps: u64,
    /// Largest lag the mixing search will try.
    pub mixing_cap: u64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions {
            occupancy: OccupancyOptions::default(),
            interval: IntervalOptions::default(),
            mc_reps: 200_000,
            seed: 0,
            mds_window: 4,
            mds_reps: 200_000,
            mixing_cap: 1 << 20,
        }
    }
}

const CHUNK: u64 = 4096;

/// Run `reps` replicates, replicate `r` drawing from `substream(key, r)`.
/// Chunks are merged in index order, so the result does not depend on the
/// number of worker threads.
pub fn monte_carlo<A, M, S, G>(reps: u64, key: u64, make: M, step: S, merge: G) -> A
where
    A: Send,
    M: Fn() -> A + Sync,
    S: Fn(&mut A, &mut ChaCha8Rng) + Sync,
    G: Fn(&mut A, A),
{
    let chunks = reps.div_ceil(CHUNK);
    let parts: Vec<A> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = make();
            for r in c * CHUNK..((c + 1) * CHUNK).min(reps) {
                let mut rng = rng::substream(key, r);
                step(&mut acc, &mut rng);
            }
            acc
        })
        .collect();
    let mut total = make();
    for p in parts {
        merge(&mut total, p);
    }
    total
}
