//! Exact β-mixing coefficients of a tower chain.
//!
//! From a fresh entry into the bases (law `q`), the chain is at level `j`
//! of tower `l` at time `t` with probability `q_l r(t − j)`, where `r` is the
//! renewal sequence `r(0) = 1`, `r(t) = Σ_l q_l r(t − H_l)`. A start at
//! `(l, j)` stays a point mass until it leaves the top of its tower, after
//! which its law is the fresh-entry law. This gives every `TV(P^n(s,·), π)`
//! from one table of fresh-entry distances.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::probe::{AuxCheck, Direction, Method, ProbeResult};
use crate::construction::Schedule;
use crate::error::{Error, Result};
use crate::tower::TowerSystem;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingProfile {
    pub lags: Vec<u64>,
    pub beta: Vec<f64>,
    /// α(n) <= β(n).
    pub alpha_upper: Vec<f64>,
    /// True when the height gcd exceeds 1; decay is then not expected.
    pub periodic: bool,
}

/// Incrementally extended β evaluator.
pub struct BetaMixing<'a> {
    sys: &'a TowerSystem,
    renewal: Vec<f64>,
    /// TV between the fresh-entry law at time t and π.
    fresh_tv: Vec<f64>,
}

impl<'a> BetaMixing<'a> {
    pub fn new(sys: &'a TowerSystem) -> Self {
        BetaMixing {
            sys,
            renewal: vec![1.0],
            fresh_tv: Vec::new(),
        }
    }

    fn ensure(&mut self, t_max: u64) {
        let q = self.sys.base_law();
        while (self.renewal.len() as u64) <= t_max {
            let t = self.renewal.len() as u64;
            let r: f64 = (0..self.sys.tower_count())
                .filter(|&l| self.sys.height(l) <= t)
                .map(|l| q[l] * self.renewal[(t - self.sys.height(l)) as usize])
                .sum();
            self.renewal.push(r);
        }
        let from = self.fresh_tv.len() as u64;
        if from > t_max {
            return;
        }
        let sys = self.sys;
        let renewal = &self.renewal;
        let extra: Vec<f64> = (from..=t_max)
            .into_par_iter()
            .map(|t| {
                let mut tv = 0.0;
                for l in 0..sys.tower_count() {
                    let h = sys.height(l);
                    let pi = sys.level_mass(l);
                    let ql = q[l];
                    for j in 0..h {
                        let p = if j <= t { ql * renewal[(t - j) as usize] } else { 0.0 };
                        tv += (p - pi).abs();
                    }
                }
                tv / 2.0
            })
            .collect();
        self.fresh_tv.extend(extra);
    }

    /// β(n) = Σ_s π(s) TV(P^n(s,·), π).
    pub fn beta(&mut self, n: u64) -> f64 {
        if n == 0 {
            // Point masses everywhere.
            return (0..self.sys.tower_count())
                .map(|l| {
                    let pi = self.sys.level_mass(l);
                    self.sys.height(l) as f64 * pi * (1.0 - pi)
                })
                .sum();
        }
        self.ensure(n - 1);
        let mut total = 0.0;
        for l in 0..self.sys.tower_count() {
            let h = self.sys.height(l);
            let pi = self.sys.level_mass(l);
            let stuck = h.saturating_sub(n);
            let mut s = stuck as f64 * (1.0 - pi);
            // Starts j >= h − n have left the top; t = n − h + j.
            for j in stuck..h {
                s += self.fresh_tv[(n + j - h) as usize];
            }
            total += pi * s;
        }
        total.clamp(0.0, 1.0)
    }
}

pub fn mixing_profile(sys: &TowerSystem, lags: &[u64]) -> MixingProfile {
    let mut bm = BetaMixing::new(sys);
    let beta: Vec<f64> = lags.iter().map(|&n| bm.beta(n)).collect();
    MixingProfile {
        lags: lags.to_vec(),
        alpha_upper: beta.clone(),
        beta,
        periodic: !sys.is_aperiodic(),
    }
}

/// Smallest lag `m` with β(m) <= eps, by doubling then bisection. Returns
/// `None` when no lag up to `cap` qualifies.
pub fn mixing_lag(bm: &mut BetaMixing<'_>, eps: f64, cap: u64) -> Option<u64> {
    if bm.beta(1) <= eps {
        return Some(1);
    }
    let mut bad = 1u64;
    let good = loop {
        let probe = bad.saturating_mul(2).min(cap);
        if bm.beta(probe) <= eps {
            break probe;
        }
        if probe >= cap {
            return None;
        }
        bad = probe;
    };
    let (mut bad, mut good) = (bad, good);
    while good - bad > 1 {
        let mid = bad + (good - bad) / 2;
        if bm.beta(mid) <= eps {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Some(good)
}

/// Mixing probe for the mixing variant: for every `k`, a lag `m_k` with
/// β(m_k) <= ε_k exists and β stays below `7 ε_k` on `m_k · {1, 2, 4, 8}`.
/// `chain` is the bare tower chain, `process_chain` the chain the process
/// is read from (towers split into halves).
pub fn mixing_probe(
    chain: &TowerSystem,
    process_chain: &TowerSystem,
    sched: &Schedule,
    cap: u64,
) -> Result<(ProbeResult, Vec<u64>, MixingProfile)> {
    if sched.eps.len() != sched.k_count() {
        return Err(Error::VariantMismatch("schedule has no ε_k".into()));
    }
    let mut bm = BetaMixing::new(chain);
    let mut pm = BetaMixing::new(process_chain);
    let mut lags = Vec::new();
    let mut aux = Vec::new();
    let mut worst_ratio: f64 = 0.0;
    let mut profile_lags = Vec::new();
    for k in 0..sched.k_count() {
        let eps = sched.eps[k];
        let Some(m) = mixing_lag(&mut bm, eps, cap) else {
            return Ok((
                ProbeResult::new(
                    "mixing-beta",
                    Some(k),
                    None,
                    f64::INFINITY,
                    7.0,
                    Direction::AtMost,
                    Method::Exact,
                    0.0,
                ),
                lags,
                mixing_profile(chain, &profile_lags),
            ));
        };
        lags.push(m);
        let grid = [m, 2 * m, 4 * m, 8 * m];
        let worst = grid.iter().map(|&n| bm.beta(n)).fold(0.0, f64::max);
        let worst_split = grid.iter().map(|&n| pm.beta(n)).fold(0.0, f64::max);
        profile_lags.extend(grid);
        worst_ratio = worst_ratio.max(worst / eps);
        aux.push(AuxCheck::new(
            &format!("beta-after-m{k}"),
            worst,
            sched.mixing_bound(k),
            Direction::AtMost,
            0.0,
        ));
        aux.push(AuxCheck::new(
            &format!("process-beta-after-m{k}"),
            worst_split,
            sched.mixing_bound(k),
            Direction::AtMost,
            0.0,
        ));
    }
    let increasing = lags.windows(2).all(|w| w[0] <= w[1]);
    aux.push(AuxCheck::new(
        "lags-nondecreasing",
        f64::from(u8::from(increasing)),
        1.0,
        Direction::AtLeast,
        0.0,
    ));
    profile_lags.sort_unstable();
    profile_lags.dedup();
    let profile = mixing_profile(chain, &profile_lags);
    let mut probe = ProbeResult::new(
        "mixing-beta",
        None,
        None,
        worst_ratio,
        7.0,
        Direction::AtMost,
        Method::Exact,
        0.0,
    );
    for a in aux {
        probe = probe.with_aux(a);
    }
    Ok((probe, lags, profile))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tower::TowerSpec;

    #[test]
    fn cyclic_tower_does_not_mix() {
        let sys = TowerSystem::build(&[TowerSpec::new(3, 1.0)], false).unwrap();
        let p = mixing_profile(&sys, &[1, 2, 3, 10]);
        for b in p.beta {
            assert!((b - 2.0 / 3.0).abs() < 1e-15);
        }
        assert!(p.periodic);
    }

    #[test]
    fn single_state_is_mixed() {
        let sys = TowerSystem::build(&[TowerSpec::new(1, 1.0)], false).unwrap();
        assert_eq!(mixing_profile(&sys, &[0, 1, 5]).beta, vec![0.0; 3]);
    }

    #[test]
    fn two_three_profile_decays() {
        let sys = TowerSystem::build(&[TowerSpec::new(2, 0.5), TowerSpec::new(3, 0.5)], true).unwrap();
        let lags: Vec<u64> = (1..=200).collect();
        let p = mixing_profile(&sys, &lags);
        assert!(!p.periodic);
        for w in p.beta.windows(2) {
            if w[0] > 1e-12 {
                assert!(w[1] < w[0], "{w:?}");
            }
        }
        assert!(p.beta[199] < 1e-6);
        let mut bm = BetaMixing::new(&sys);
        let m = mixing_lag(&mut bm, 1e-3, 1 << 12).unwrap();
        assert!(bm.beta(m) <= 1e-3 && bm.beta(m - 1) > 1e-3);
    }
}
