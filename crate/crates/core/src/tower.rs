//! Finite Rokhlin tower systems.
//!
//! A [`TowerSystem`] is a finite family of towers. Each tower climbs its
//! levels deterministically; from the top level every tower jumps to the base
//! of tower `l` with probability proportional to `mass_l / height_l`. With
//! that law the measure giving every level of tower `l` the mass
//! `mass_l / height_l` is invariant, so the system is a concrete,
//! finite-state stand-in for a measure-preserving map built from towers.
//!
//! States are addressed either as [`TowerState`] or by a flat index
//! (`offset[tower] + level`). Nothing here materializes per-state vectors
//! unless asked, so systems with hundreds of thousands of levels are cheap.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::LatticeDistribution;
use crate::error::{Error, Result};
use crate::rng;

const MASS_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TowerSpec {
    pub height: u64,
    pub mass: f64,
}

impl TowerSpec {
    pub fn new(height: u64, mass: f64) -> Self {
        TowerSpec { height, mass }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TowerState {
    pub tower: usize,
    pub level: u64,
}

impl TowerState {
    pub fn new(tower: usize, level: u64) -> Self {
        TowerState { tower, level }
    }
}

/// Law of the number of active steps in a window of length `window`.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyDistribution {
    pub window: u64,
    pub counts: LatticeDistribution,
}

/// Which algorithm [`TowerSystem::occupancy_distribution`] uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OccupancyPath {
    /// Tall-tower enumeration when every height is at least the window,
    /// otherwise the (state, count) dynamic program.
    Auto,
    TallTower,
    General,
}

#[derive(Clone, Copy, Debug)]
pub struct OccupancyOptions {
    pub path: OccupancyPath,
    /// Cap on `states * n * n` for the dynamic program.
    pub op_budget: f64,
}

impl Default for OccupancyOptions {
    fn default() -> Self {
        OccupancyOptions {
            path: OccupancyPath::Auto,
            op_budget: 1e9,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TowerSystem {
    towers: Vec<TowerSpec>,
    top_transition: Vec<Vec<f64>>,
    offsets: Vec<u64>,
    state_count: u64,
    mass_cdf: Vec<f64>,
    base_cdf: Vec<f64>,
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn cumulative(p: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    p.iter()
        .map(|&x| {
            acc += x;
            acc
        })
        .collect()
}

fn draw(cdf: &[f64], u: f64) -> usize {
    let total = *cdf.last().expect("non-empty");
    let target = u * total;
    cdf.partition_point(|&c| c <= target).min(cdf.len() - 1)
}

impl TowerSystem {
    /// Assemble a system with the default top-to-base law.
    pub fn build(specs: &[TowerSpec], require_aperiodic: bool) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::InvalidSpec("no towers".into()));
        }
        for (i, s) in specs.iter().enumerate() {
            if s.height == 0 {
                return Err(Error::InvalidSpec(format!("tower {i} has height 0")));
            }
            if !(s.mass > 0.0 && s.mass <= 1.0) {
                return Err(Error::InvalidSpec(format!(
                    "tower {i} has mass {} outside (0, 1]",
                    s.mass
                )));
            }
        }
        let sum: f64 = specs.iter().map(|s| s.mass).sum();
        if (sum - 1.0).abs() > MASS_TOL {
            return Err(Error::MassSum { sum });
        }
        let g = specs.iter().fold(0, |g, s| gcd(g, s.height));
        if require_aperiodic && g > 1 {
            return Err(Error::Periodicity { gcd: g });
        }

        let towers: Vec<TowerSpec> = specs
            .iter()
            .map(|s| TowerSpec::new(s.height, s.mass / sum))
            .collect();
        let base_weights: Vec<f64> = towers.iter().map(|t| t.mass / t.height as f64).collect();
        let z: f64 = base_weights.iter().sum();
        let row: Vec<f64> = base_weights.iter().map(|w| w / z).collect();
        let top_transition = vec![row.clone(); towers.len()];

        let mut offsets = Vec::with_capacity(towers.len());
        let mut acc = 0u64;
        for t in &towers {
            offsets.push(acc);
            acc += t.height;
        }

        Ok(TowerSystem {
            mass_cdf: cumulative(&towers.iter().map(|t| t.mass).collect::<Vec<_>>()),
            base_cdf: cumulative(&row),
            towers,
            top_transition,
            offsets,
            state_count: acc,
        })
    }

    pub fn towers(&self) -> &[TowerSpec] {
        &self.towers
    }

    pub fn tower_count(&self) -> usize {
        self.towers.len()
    }

    pub fn height(&self, tower: usize) -> u64 {
        self.towers[tower].height
    }

    pub fn mass(&self, tower: usize) -> f64 {
        self.towers[tower].mass
    }

    /// Stationary mass of a single level of `tower`.
    pub fn level_mass(&self, tower: usize) -> f64 {
        self.towers[tower].mass / self.towers[tower].height as f64
    }

    pub fn top_transition(&self) -> &[Vec<f64>] {
        &self.top_transition
    }

    /// Law of the destination base after leaving any top level.
    pub fn base_law(&self) -> &[f64] {
        &self.top_transition[0]
    }

    pub fn state_count(&self) -> u64 {
        self.state_count
    }

    pub fn max_height(&self) -> u64 {
        self.towers.iter().map(|t| t.height).max().unwrap_or(0)
    }

    pub fn min_height(&self) -> u64 {
        self.towers.iter().map(|t| t.height).min().unwrap_or(0)
    }

    pub fn height_gcd(&self) -> u64 {
        self.towers.iter().fold(0, |g, t| gcd(g, t.height))
    }

    pub fn is_aperiodic(&self) -> bool {
        self.height_gcd() == 1
    }

    pub fn check_state(&self, s: TowerState) -> Result<()> {
        if s.tower < self.towers.len() && s.level < self.towers[s.tower].height {
            Ok(())
        } else {
            Err(Error::InvalidState {
                tower: s.tower,
                level: s.level,
            })
        }
    }

    pub fn index(&self, s: TowerState) -> u64 {
        self.offsets[s.tower] + s.level
    }

    pub fn state(&self, index: u64) -> TowerState {
        let tower = self.offsets.partition_point(|&o| o <= index) - 1;
        TowerState::new(tower, index - self.offsets[tower])
    }

    /// All states in flat-index order.
    pub fn states(&self) -> impl Iterator<Item = TowerState> + '_ {
        self.towers
            .iter()
            .enumerate()
            .flat_map(|(l, t)| (0..t.height).map(move |j| TowerState::new(l, j)))
    }

    /// Stationary probability of `s`.
    pub fn stationary_prob(&self, s: TowerState) -> f64 {
        self.level_mass(s.tower)
    }

    /// The invariant measure as a dense vector in flat-index order.
    pub fn stationary_measure(&self) -> Vec<f64> {
        self.states().map(|s| self.stationary_prob(s)).collect()
    }

    /// One-step transition law out of `s`.
    pub fn step_distribution(&self, s: TowerState) -> Result<Vec<(TowerState, f64)>> {
        self.check_state(s)?;
        if s.level + 1 < self.height(s.tower) {
            Ok(vec![(TowerState::new(s.tower, s.level + 1), 1.0)])
        } else {
            Ok(self.top_transition[s.tower]
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0.0)
                .map(|(l, &p)| (TowerState::new(l, 0), p))
                .collect())
        }
    }

    /// Push a dense measure forward by one step.
    pub fn push_forward(&self, measure: &[f64]) -> Vec<f64> {
        assert_eq!(measure.len() as u64, self.state_count);
        let mut out = vec![0.0; measure.len()];
        for (l, t) in self.towers.iter().enumerate() {
            let o = self.offsets[l] as usize;
            let h = t.height as usize;
            for j in 0..h - 1 {
                out[o + j + 1] += measure[o + j];
            }
            let top = measure[o + h - 1];
            for (d, &p) in self.top_transition[l].iter().enumerate() {
                out[self.offsets[d] as usize] += top * p;
            }
        }
        out
    }

    pub fn sample_stationary<R: Rng + ?Sized>(&self, rng: &mut R) -> TowerState {
        let tower = draw(&self.mass_cdf, rng.gen::<f64>());
        let level = rng.gen_range(0..self.towers[tower].height);
        TowerState::new(tower, level)
    }

    pub fn sample_step<R: Rng + ?Sized>(&self, rng: &mut R, s: TowerState) -> TowerState {
        if s.level + 1 < self.towers[s.tower].height {
            TowerState::new(s.tower, s.level + 1)
        } else {
            TowerState::new(draw(&self.base_cdf, rng.gen::<f64>()), 0)
        }
    }

    /// A length-`n` path, started at `start` or at a stationary draw.
    pub fn sample_trajectory(
        &self,
        seed: u64,
        n: usize,
        start: Option<TowerState>,
    ) -> Result<Vec<TowerState>> {
        if let Some(s) = start {
            self.check_state(s)?;
        }
        let mut rng = rng::substream(rng::derive_key(seed, "trajectory"), 0);
        let mut path = Vec::with_capacity(n);
        if n == 0 {
            return Ok(path);
        }
        let mut s = match start {
            Some(s) => s,
            None => self.sample_stationary(&mut rng),
        };
        path.push(s);
        for _ in 1..n {
            s = self.sample_step(&mut rng, s);
            path.push(s);
        }
        Ok(path)
    }

    /// Exact law of `#{0 <= i < n : T^i x is active}` for a stationary start.
    pub fn occupancy_distribution(
        &self,
        active: &dyn Fn(TowerState) -> bool,
        n: u64,
        opts: OccupancyOptions,
    ) -> Result<OccupancyDistribution> {
        if n == 0 {
            return Ok(OccupancyDistribution {
                window: 0,
                counts: LatticeDistribution::point_mass(0),
            });
        }
        let tall = self.min_height() >= n;
        let use_tall = match opts.path {
            OccupancyPath::Auto => tall,
            OccupancyPath::TallTower => {
                if !tall {
                    return Err(Error::InvalidSpec(format!(
                        "tall-tower path needs every height >= {n}, min height is {}",
                        self.min_height()
                    )));
                }
                true
            }
            OccupancyPath::General => false,
        };
        let counts = if use_tall {
            self.occupancy_tall(active, n)
        } else {
            let ops = self.state_count as f64 * n as f64 * n as f64;
            if ops > opts.op_budget {
                return Err(Error::WindowTooLarge {
                    n,
                    ops,
                    budget: opts.op_budget,
                });
            }
            self.occupancy_dp(active, n)
        };
        Ok(OccupancyDistribution {
            window: n,
            counts: LatticeDistribution::new(0, counts),
        })
    }

    /// `prefix[l][j]` = number of active levels among `0..j` of tower `l`.
    fn active_prefix(&self, active: &dyn Fn(TowerState) -> bool) -> Vec<Vec<u32>> {
        self.towers
            .iter()
            .enumerate()
            .map(|(l, t)| {
                let mut acc = 0u32;
                let mut p = Vec::with_capacity(t.height as usize + 1);
                p.push(0);
                for j in 0..t.height {
                    if active(TowerState::new(l, j)) {
                        acc += 1;
                    }
                    p.push(acc);
                }
                p
            })
            .collect()
    }

    // Every height is >= n, so a window crosses at most one top.
    fn occupancy_tall(&self, active: &dyn Fn(TowerState) -> bool, n: u64) -> Vec<f64> {
        let prefix = self.active_prefix(active);
        let q = self.base_law();
        let mut counts = vec![0.0; n as usize + 1];
        for (l, t) in self.towers.iter().enumerate() {
            let w = self.level_mass(l);
            let pre = &prefix[l];
            let h = t.height;
            // Starts that stay inside the tower for the whole window.
            let stay_end = h.saturating_sub(n - 1);
            for j in 0..stay_end {
                let m = pre[(j + n) as usize] - pre[j as usize];
                counts[m as usize] += w;
            }
            for j in stay_end..h {
                let here = pre[h as usize] - pre[j as usize];
                let rest = (j + n - h) as usize;
                for (d, &qd) in q.iter().enumerate() {
                    let m = here + prefix[d][rest];
                    counts[m as usize] += w * qd;
                }
            }
        }
        counts
    }

    fn occupancy_dp(&self, active: &dyn Fn(TowerState) -> bool, n: u64) -> Vec<f64> {
        let states = self.state_count as usize;
        let width = n as usize + 1;
        let act: Vec<bool> = self.states().map(active).collect();
        let mut cur = vec![0.0; states * width];
        for (i, s) in self.states().enumerate() {
            cur[i * width + usize::from(act[i])] = self.stationary_prob(s);
        }
        let q = self.base_law();
        let mut next = vec![0.0; states * width];
        let mut top = vec![0.0; width];
        for _ in 1..n {
            next.iter_mut().for_each(|x| *x = 0.0);
            top.iter_mut().for_each(|x| *x = 0.0);
            for (l, t) in self.towers.iter().enumerate() {
                let o = self.offsets[l] as usize;
                let h = t.height as usize;
                for j in 0..h - 1 {
                    let src = (o + j) * width;
                    let dst_state = o + j + 1;
                    let bump = usize::from(act[dst_state]);
                    let dst = dst_state * width;
                    for c in 0..width - bump {
                        next[dst + c + bump] += cur[src + c];
                    }
                }
                let src = (o + h - 1) * width;
                for c in 0..width {
                    top[c] += cur[src + c];
                }
            }
            for (d, &qd) in q.iter().enumerate() {
                let base = self.offsets[d] as usize;
                let bump = usize::from(act[base]);
                let dst = base * width;
                for c in 0..width - bump {
                    next[dst + c + bump] += qd * top[c];
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        let mut counts = vec![0.0; width];
        for i in 0..states {
            for c in 0..width {
                counts[c] += cur[i * width + c];
            }
        }
        counts
    }
}
