//! Parameter schedules for the three counterexample constructions.
//!
//! Indices `k` are zero-based throughout. Each schedule keeps `K` explicit
//! towers; the mass they leave over goes to one remainder tower whose
//! height is a configuration knob.

use serde::{Deserialize, Serialize};

use super::rate::{RateSequence, SearchGrid};
use crate::error::{Error, Result};
use crate::tower::{gcd, TowerSpec, TowerSystem};

/// `(√2 − 1)/√2`, the leading mass of the geometric density family.
pub const DENSITY_P0: f64 = 1.0 - std::f64::consts::FRAC_1_SQRT_2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Lattice values, slab sets inside tall towers.
    Thm1,
    /// Bounded density, weights `d_k` on geometric towers.
    Thm2,
    /// Lattice values, mixing tower chain.
    Thm3,
    /// i.i.d. lattice noise, for contrast.
    IidBaseline,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Thm1 => "thm1",
            Variant::Thm2 => "thm2",
            Variant::Thm3 => "thm3",
            Variant::IidBaseline => "iid-baseline",
        }
    }
}

/// Knobs shared by the schedule solvers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleOptions {
    /// Largest probe time the solver will consider.
    pub search_cap: u64,
    /// Height of the remainder tower; `None` picks the variant default.
    pub remainder_height: Option<u64>,
    /// Mixing variant: each tower takes strictly less than `1 - delta` of
    /// the mass still unassigned.
    pub delta: f64,
    /// Mixing variant: `eps_k = eps0 · 2^-k`.
    pub eps0: f64,
}

impl Default for ScheduleOptions {
    fn default() -> Self {
        ScheduleOptions {
            search_cap: 10_000_000,
            remainder_height: None,
            delta: 0.5,
            eps0: 0.1,
        }
    }
}

/// Constants of the density construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityConstants {
    pub l1: f64,
    pub l2: f64,
    pub l: f64,
    /// Σ p_{2j}^3 over kept even indices.
    pub c1: f64,
    /// Σ p_{2j+1}^3 over kept odd indices.
    pub c2: f64,
    /// The same sums over the full infinite family.
    pub c1_full: f64,
    pub c2_full: f64,
    /// Weight carried by the remainder tower.
    pub remainder_weight: f64,
    /// Variance of f for the truncated model.
    pub sigma2: f64,
    /// (7/12)(c1_full/L1² + c2_full/L2²).
    pub sigma2_closed: f64,
    /// (7/12) Σ_{k>=K} p_k d_k², dropped by the truncation.
    pub variance_tail: f64,
    /// (7/12) · remainder mass · remainder weight².
    pub variance_remainder: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub variant: Variant,
    pub rate: RateSequence,
    /// Probe times n_k.
    pub n: Vec<u64>,
    /// a_{n_k}.
    pub a_n: Vec<f64>,
    /// Realized tower heights.
    pub heights: Vec<u64>,
    /// Tower masses.
    pub p: Vec<f64>,
    /// Set masses (thm1) or weights (thm2).
    pub d: Vec<f64>,
    pub rho: Vec<f64>,
    pub eps: Vec<f64>,
    /// Mixing variant: realized share of the unassigned mass left for later towers.
    pub delta: Vec<f64>,
    /// Mixing variant: lags m_k with β(m_k) <= eps_k, filled by the mixing search.
    pub mixing_lags: Vec<u64>,
    pub remainder_mass: f64,
    pub remainder_height: u64,
    pub density: Option<DensityConstants>,
}

fn check_k(k: usize, min: usize) -> Result<()> {
    if k < min {
        return Err(Error::BadConstants(format!("K = {k}, need K >= {min}")));
    }
    Ok(())
}

/// Smallest `h >= at_least` with `gcd(h, g) == 1`.
fn coprime_at_least(at_least: u64, g: u64) -> u64 {
    let mut h = at_least.max(1);
    while gcd(h, g) != 1 {
        h += 1;
    }
    h
}

/// Bump the last height until the heights are coprime as a family.
fn enforce_gcd_one(heights: &mut [u64]) {
    let Some(last) = heights.len().checked_sub(1) else {
        return;
    };
    loop {
        let g = heights.iter().fold(0, |g, &h| gcd(g, h));
        if g == 1 {
            return;
        }
        heights[last] += 1;
    }
}

impl Schedule {
    pub fn k_count(&self) -> usize {
        self.n.len()
    }

    /// Tower specs: the scheduled towers followed by the remainder tower.
    pub fn tower_specs(&self) -> Vec<TowerSpec> {
        let mut specs: Vec<TowerSpec> = self
            .heights
            .iter()
            .zip(&self.p)
            .map(|(&h, &m)| TowerSpec::new(h, m))
            .collect();
        if self.remainder_mass > 0.0 {
            specs.push(TowerSpec::new(self.remainder_height, self.remainder_mass));
        }
        specs
    }

    /// The bare tower chain (one tower per index plus remainder).
    pub fn tower_system(&self) -> Result<TowerSystem> {
        TowerSystem::build(&self.tower_specs(), false)
    }

    /// Closed-form bound `d_k(1 − ρ_k)` for the lattice slab variant.
    pub fn slab_bound(&self, k: usize) -> f64 {
        self.d[k] * (1.0 - self.rho[k])
    }

    /// Closed-form `p_k / 4` for the mixing variant.
    pub fn quarter_mass(&self, k: usize) -> f64 {
        self.p[k] / 4.0
    }

    /// `7 ε_k`.
    pub fn mixing_bound(&self, k: usize) -> f64 {
        7.0 * self.eps[k]
    }

    pub fn sigma2_density(&self) -> Option<f64> {
        self.density.as_ref().map(|c| c.sigma2)
    }
}

/// Lattice slab construction: `n_k` is the first power of two past
/// `n_{k-1}` with `a_{n_k} <= 2^-(k+3)`, so `Σ a_{n_k} <= 1/4`.
pub fn derive_schedule_thm1(
    rate: &RateSequence,
    k_count: usize,
    opts: &ScheduleOptions,
) -> Result<Schedule> {
    rate.validate()?;
    check_k(k_count, 1)?;
    let mut n = Vec::with_capacity(k_count);
    let mut prev = 0;
    for k in 0..k_count {
        let thr = (-(k as f64) - 3.0).exp2();
        let nk = rate
            .first_accepted(prev, opts.search_cap, SearchGrid::Dyadic, |v| v <= thr)
            .ok_or_else(|| {
                Error::ScheduleInfeasible(format!(
                    "no n in ({prev}, {}] with a_n <= {thr} for k = {k}",
                    opts.search_cap
                ))
            })?;
        n.push(nk);
        prev = nk;
    }
    let a_n: Vec<f64> = n.iter().map(|&x| rate.value(x)).collect();
    let d: Vec<f64> = a_n.iter().map(|a| 2.0 * a).collect();
    let rho: Vec<f64> = (0..k_count).map(|k| (-(k as f64) - 1.0).exp2()).collect();
    let mut heights = Vec::with_capacity(k_count);
    for (k, &nk) in n.iter().enumerate() {
        // n_k^2 / ρ_k + n_k levels: the slab keeps H - n + 1 of them, and
        // n_k^2 times one level's mass stays strictly below ρ_k d_k.
        let h = nk
            .checked_mul(nk)
            .and_then(|x| x.checked_mul(1u64.checked_shl(k as u32 + 1)?))
            .and_then(|x| x.checked_add(nk))
            .ok_or_else(|| Error::ScheduleInfeasible(format!("height overflow at k = {k}")))?;
        heights.push(h);
    }
    let p: Vec<f64> = (0..k_count)
        .map(|k| d[k] * heights[k] as f64 / (heights[k] - n[k] + 1) as f64)
        .collect();
    let eps: Vec<f64> = (0..k_count)
        .map(|k| n[k] as f64 / (heights[k] - n[k] + 1) as f64)
        .collect();
    let used: f64 = p.iter().sum();
    if used >= 1.0 {
        return Err(Error::ScheduleInfeasible(format!(
            "tower masses sum to {used} >= 1"
        )));
    }
    let g = heights.iter().fold(0, |g, &h| gcd(g, h));
    let remainder_height = opts
        .remainder_height
        .unwrap_or_else(|| coprime_at_least(*n.last().unwrap(), g));
    Ok(Schedule {
        variant: Variant::Thm1,
        rate: rate.clone(),
        n,
        a_n,
        heights,
        p,
        d,
        rho,
        eps,
        delta: Vec::new(),
        mixing_lags: Vec::new(),
        remainder_mass: 1.0 - used,
        remainder_height,
        density: None,
    })
}

/// Density construction with geometric masses `p_k = p_0 2^{-k/2}`.
pub fn derive_schedule_thm2(
    rate: &RateSequence,
    l1: f64,
    l2: f64,
    l: f64,
    k_count: usize,
    opts: &ScheduleOptions,
) -> Result<Schedule> {
    rate.validate()?;
    check_k(k_count, 2)?;
    for (name, v) in [("L1", l1), ("L2", l2), ("L", l)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::BadConstants(format!("{name} = {v} must be positive")));
        }
    }
    if l2 < 10.0 * l1 {
        return Err(Error::BadConstants(format!(
            "need L2 >= 10 L1, got L1 = {l1}, L2 = {l2}"
        )));
    }
    // Built as p_0 2^-(k/2) with the odd factor 1/√2 applied once, so that
    // p_{k+2} = p_k / 2 holds exactly in floating point.
    let p: Vec<f64> = (0..k_count)
        .map(|k| {
            let even = DENSITY_P0 * (-((k / 2) as f64)).exp2();
            if k % 2 == 0 {
                even
            } else {
                even * std::f64::consts::FRAC_1_SQRT_2
            }
        })
        .collect();
    let d: Vec<f64> = p
        .iter()
        .enumerate()
        .map(|(k, &pk)| if k % 2 == 0 { pk / l1 } else { pk / l2 })
        .collect();
    let remainder_mass = 1.0 - p.iter().sum::<f64>();
    let remainder_weight = d[0];
    let kept: f64 = p.iter().zip(&d).map(|(p, d)| p * d * d).sum();
    let sigma2 = 7.0 / 12.0 * (kept + remainder_mass * remainder_weight * remainder_weight);

    let c1: f64 = p.iter().step_by(2).map(|x| x.powi(3)).sum();
    let c2: f64 = p.iter().skip(1).step_by(2).map(|x| x.powi(3)).sum();
    // Σ_j (p_0 2^{-j})^3 = p_0^3 · 8/7, and the odd family starts at p_0/√2.
    let c1_full = DENSITY_P0.powi(3) * 8.0 / 7.0;
    let c2_full = (DENSITY_P0 * std::f64::consts::FRAC_1_SQRT_2).powi(3) * 8.0 / 7.0;
    let sigma2_closed = 7.0 / 12.0 * (c1_full / (l1 * l1) + c2_full / (l2 * l2));
    let variance_tail = 7.0 / 12.0 * ((c1_full - c1) / (l1 * l1) + (c2_full - c2) / (l2 * l2));
    let variance_remainder = 7.0 / 12.0 * remainder_mass * remainder_weight * remainder_weight;

    let sigma = sigma2.sqrt();
    let rho: Vec<f64> = d.iter().map(|dk| dk / sigma).collect();
    let mut n = Vec::with_capacity(k_count);
    let mut prev = 0;
    for (k, &r) in rho.iter().enumerate() {
        let nk = rate
            .first_accepted(prev, opts.search_cap, SearchGrid::Integers, |v| v <= r)
            .ok_or_else(|| {
                Error::ScheduleInfeasible(format!(
                    "no n in ({prev}, {}] with a_n <= rho_{k} = {r}",
                    opts.search_cap
                ))
            })?;
        n.push(nk);
        prev = nk;
    }
    let mut heights: Vec<u64> = n.iter().map(|&x| 2 * x).collect();
    enforce_gcd_one(&mut heights);
    Ok(Schedule {
        variant: Variant::Thm2,
        rate: rate.clone(),
        a_n: n.iter().map(|&x| rate.value(x)).collect(),
        n,
        heights,
        p,
        d,
        rho,
        eps: Vec::new(),
        delta: Vec::new(),
        mixing_lags: Vec::new(),
        remainder_mass,
        remainder_height: opts.remainder_height.unwrap_or(1),
        density: Some(DensityConstants {
            l1,
            l2,
            l,
            c1,
            c2,
            c1_full,
            c2_full,
            remainder_weight,
            sigma2,
            sigma2_closed,
            variance_tail,
            variance_remainder,
        }),
    })
}

/// Mixing construction: `p_k >= 4 a_{n_k}`, `H_k >= 4 n_k^2`, coprime heights.
pub fn derive_schedule_thm3(
    rate: &RateSequence,
    k_count: usize,
    opts: &ScheduleOptions,
) -> Result<Schedule> {
    rate.validate()?;
    check_k(k_count, 2)?;
    if !(opts.delta > 0.0 && opts.delta < 1.0) {
        return Err(Error::BadConstants(format!(
            "delta = {} must lie in (0, 1)",
            opts.delta
        )));
    }
    if !(opts.eps0 > 0.0 && opts.eps0 < 1.0) {
        return Err(Error::BadConstants(format!(
            "eps0 = {} must lie in (0, 1)",
            opts.eps0
        )));
    }
    let mut n = Vec::with_capacity(k_count);
    let mut p = Vec::with_capacity(k_count);
    let mut delta = Vec::with_capacity(k_count);
    let mut free = 1.0;
    let mut prev = 0;
    for k in 0..k_count {
        let room = (1.0 - opts.delta) * free;
        let nk = rate
            .first_accepted(prev, opts.search_cap, SearchGrid::Dyadic, |v| 4.0 * v < room)
            .ok_or_else(|| {
                Error::ScheduleInfeasible(format!(
                    "no n in ({prev}, {}] with 4 a_n < {room} for k = {k}",
                    opts.search_cap
                ))
            })?;
        let minimal = 4.0 * rate.value(nk);
        // Keep the realized δ_k nonincreasing.
        let pk = match delta.last() {
            Some(&dprev) => minimal.max((1.0 - dprev) * free),
            None => minimal,
        };
        delta.push(1.0 - pk / free);
        free -= pk;
        n.push(nk);
        p.push(pk);
        prev = nk;
    }
    let mut heights = Vec::with_capacity(k_count);
    for (k, &nk) in n.iter().enumerate() {
        let h = nk
            .checked_mul(nk)
            .and_then(|x| x.checked_mul(4))
            .ok_or_else(|| Error::ScheduleInfeasible(format!("height overflow at k = {k}")))?;
        let h = match heights.last() {
            Some(&last) if h <= last => last + 1,
            _ => h,
        };
        heights.push(h);
    }
    enforce_gcd_one(&mut heights);
    Ok(Schedule {
        variant: Variant::Thm3,
        rate: rate.clone(),
        a_n: n.iter().map(|&x| rate.value(x)).collect(),
        n,
        heights,
        p,
        d: Vec::new(),
        rho: Vec::new(),
        eps: (0..k_count)
            .map(|k| opts.eps0 * (-(k as f64)).exp2())
            .collect(),
        delta,
        mixing_lags: Vec::new(),
        remainder_mass: free,
        remainder_height: opts.remainder_height.unwrap_or(1),
        density: None,
    })
}
