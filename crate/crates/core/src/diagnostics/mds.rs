//! Strong martingale difference checks: `E(X_k | X_j, j != k) = 0`.

use std::collections::BTreeMap;

use super::probe::{monte_carlo, Direction, Method, ProbeResult};
use crate::construction::{NoiseSpec, ProcessModel};
use crate::error::{Error, Result};
use crate::rng;

/// Cap on (states × window) for the exact path.
const EXACT_STATE_WINDOW_CAP: f64 = 5e7;
const MIN_BIN: u64 = 50;

/// Noise classes: probability and conditional mean given the class, plus
/// the observable key of `weight · g` for that class.
fn noise_classes(noise: NoiseSpec) -> Vec<(f64, f64)> {
    match noise {
        NoiseSpec::Lattice { a } => vec![(a / 2.0, -1.0), (1.0 - a, 0.0), (a / 2.0, 1.0)],
        NoiseSpec::TwoIntervalUniform => vec![(0.5, -0.75), (0.5, 0.75)],
    }
}

/// Observable bin of `w · g` in class `c`: exact value for lattice noise,
/// sign otherwise.
fn observed_key(noise: NoiseSpec, w: f64, class_mean: f64) -> i64 {
    let x = w * class_mean;
    match noise {
        NoiseSpec::Lattice { .. } => x.to_bits() as i64,
        NoiseSpec::TwoIntervalUniform => {
            if x > 0.0 {
                1
            } else if x < 0.0 {
                -1
            } else {
                0
            }
        }
    }
}

/// Law of the weight pattern `(w(s_0), ..., w(s_{len-1}))` for a stationary
/// start, as pattern-of-weight-indices → probability.
pub fn weight_pattern_law(model: &ProcessModel, len: usize) -> Result<(Vec<f64>, BTreeMap<Vec<u32>, f64>)> {
    let sys = model.system();
    let states = sys.state_count();
    if len == 0 || states as f64 * len as f64 > EXACT_STATE_WINDOW_CAP {
        return Err(Error::BudgetExceeded(format!(
            "exact pattern law for {states} states and window {len}"
        )));
    }
    let mut distinct: Vec<f64> = Vec::new();
    let mut index_of = |w: f64| -> u32 {
        match distinct.iter().position(|&d| d.to_bits() == w.to_bits()) {
            Some(i) => i as u32,
            None => {
                distinct.push(w);
                (distinct.len() - 1) as u32
            }
        }
    };
    let widx: Vec<u32> = sys.states().map(|s| index_of(model.weight(s))).collect();
    // layer[s] lists (pattern prefix, probability) for paths now at s.
    let mut layer: Vec<Vec<(Vec<u32>, f64)>> = sys
        .states()
        .enumerate()
        .map(|(i, s)| vec![(vec![widx[i]], sys.stationary_prob(s))])
        .collect();
    let bases: Vec<usize> = (0..sys.tower_count())
        .map(|l| sys.index(crate::tower::TowerState::new(l, 0)) as usize)
        .collect();
    let q = sys.base_law().to_vec();
    let push = |next: &mut Vec<Vec<(Vec<u32>, f64)>>, to: usize, mut pat: Vec<u32>, p: f64| {
        pat.push(widx[to]);
        match next[to].iter_mut().find(|e| e.0 == pat) {
            Some(e) => e.1 += p,
            None => next[to].push((pat, p)),
        }
    };
    for _ in 1..len {
        let mut next: Vec<Vec<(Vec<u32>, f64)>> = vec![Vec::new(); states as usize];
        for (i, entries) in layer.into_iter().enumerate() {
            let s = sys.state(i as u64);
            let top = s.level + 1 == sys.height(s.tower);
            for (pat, p) in entries {
                if top {
                    for (d, &qd) in q.iter().enumerate() {
                        if qd > 0.0 {
                            push(&mut next, bases[d], pat.clone(), p * qd);
                        }
                    }
                } else {
                    push(&mut next, i + 1, pat, p);
                }
            }
        }
        layer = next;
    }
    let mut law = BTreeMap::new();
    for entries in layer {
        for (pat, p) in entries {
            *law.entry(pat).or_insert(0.0) += p;
        }
    }
    Ok((distinct, law))
}

/// Largest `|E(X_k | bins of the other coordinates)|` over all positions and
/// bins of positive probability, computed exactly.
pub fn exact_max_conditional_mean(model: &ProcessModel, window: usize) -> Result<f64> {
    let (distinct, law) = weight_pattern_law(model, window)?;
    let noise = model.noise();
    let classes = noise_classes(noise);
    let nc = classes.len();
    let combos = nc.pow(window as u32);
    let mut worst: f64 = 0.0;
    for k in 0..window {
        // key of other coordinates → (P(bin), E[X_k 1_bin])
        let mut bins: BTreeMap<Vec<i64>, (f64, f64)> = BTreeMap::new();
        for (pat, &pp) in &law {
            for combo in 0..combos {
                let mut c = combo;
                let mut prob = pp;
                let mut key = Vec::with_capacity(window - 1);
                let mut xk = 0.0;
                for (i, &wi) in pat.iter().enumerate() {
                    let (pc, mc) = classes[c % nc];
                    c /= nc;
                    prob *= pc;
                    let w = distinct[wi as usize];
                    if i == k {
                        xk = w * mc;
                    } else {
                        key.push(observed_key(noise, w, mc));
                    }
                }
                if prob == 0.0 {
                    continue;
                }
                let e = bins.entry(key).or_insert((0.0, 0.0));
                e.0 += prob;
                e.1 += prob * xk;
            }
        }
        for (p, m) in bins.values() {
            if *p > 0.0 {
                worst = worst.max((m / p).abs());
            }
        }
    }
    Ok(worst)
}

/// Exact strong-MDS probe: every conditional mean within 1e-12 of 0.
pub fn mds_exact_probe(model: &ProcessModel, window: usize) -> Result<ProbeResult> {
    let v = exact_max_conditional_mean(model, window)?;
    Ok(ProbeResult::new(
        "mds-exact",
        None,
        Some(window as u64),
        v,
        0.0,
        Direction::Within,
        Method::Exact,
        1e-12,
    ))
}

#[derive(Clone, Default)]
struct Bin {
    count: u64,
    sum: f64,
    sumsq: f64,
}

/// Sign of `x` as a bin digit.
fn sign_digit(x: f64) -> usize {
    if x < 0.0 {
        0
    } else if x == 0.0 {
        1
    } else {
        2
    }
}

/// Largest `|mean| / se` over bins with at least 50 observations, where the
/// bins are sign patterns of the other window coordinates.
fn max_bin_z(bins: &[Vec<Bin>]) -> (f64, usize) {
    let mut worst: f64 = 0.0;
    let mut used = 0;
    for per_k in bins {
        for b in per_k {
            if b.count < MIN_BIN {
                continue;
            }
            used += 1;
            let m = b.count as f64;
            let mean = b.sum / m;
            let var = (b.sumsq / m - mean * mean).max(0.0) * m / (m - 1.0);
            let se = (var / m).sqrt();
            let z = if se > 0.0 {
                mean.abs() / se
            } else if mean == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            worst = worst.max(z);
        }
    }
    (worst, used)
}

/// Sampled conditional-mean test on windows of `X_j = f(T^j)`, optionally
/// passed through the filter `X'_j = X_j + c X_{j-1}`.
fn sampled_bins(
    model: &ProcessModel,
    window: usize,
    reps: u64,
    seed: u64,
    filter: Option<f64>,
) -> Vec<Vec<Bin>> {
    let nbins = 3usize.pow(window as u32 - 1);
    let key = rng::derive_key(seed, if filter.is_some() { "mds-control" } else { "mds" });
    let extra = usize::from(filter.is_some());
    let (bins, _, _) = monte_carlo(
        reps,
        key,
        || (vec![vec![Bin::default(); nbins]; window], Vec::new(), Vec::new()),
        |(bins, buf, xs): &mut (Vec<Vec<Bin>>, Vec<f64>, Vec<f64>), r| {
            model.sample_window(r, window + extra, buf);
            xs.clear();
            match filter {
                Some(c) => xs.extend((1..=window).map(|j| buf[j] + c * buf[j - 1])),
                None => xs.extend_from_slice(buf),
            }
            for k in 0..window {
                let mut code = 0;
                for (i, &x) in xs.iter().enumerate() {
                    if i != k {
                        code = code * 3 + sign_digit(x);
                    }
                }
                let b = &mut bins[k][code];
                b.count += 1;
                b.sum += xs[k];
                b.sumsq += xs[k] * xs[k];
            }
        },
        |a, b| {
            for (ka, kb) in a.0.iter_mut().zip(b.0) {
                for (x, y) in ka.iter_mut().zip(kb) {
                    x.count += y.count;
                    x.sum += y.sum;
                    x.sumsq += y.sumsq;
                }
            }
        },
    );
    bins
}

/// Monte Carlo strong-MDS probe: every bin's `|mean|` within 4 standard errors.
pub fn mds_monte_carlo_probe(
    model: &ProcessModel,
    window: usize,
    reps: u64,
    seed: u64,
) -> ProbeResult {
    let (z, _) = max_bin_z(&sampled_bins(model, window, reps, seed, None));
    ProbeResult::new(
        "mds-monte-carlo",
        None,
        Some(window as u64),
        z,
        4.0,
        Direction::AtMost,
        Method::MonteCarlo,
        0.0,
    )
}

/// The same test on the filtered control `X_j + X_{j-1}/2`; the returned
/// probe passes when the test rejects.
pub fn mds_control_probe(model: &ProcessModel, window: usize, reps: u64, seed: u64) -> ProbeResult {
    let (z, _) = max_bin_z(&sampled_bins(model, window, reps, seed, Some(0.5)));
    ProbeResult::new(
        "mds-control-rejected",
        None,
        Some(window as u64),
        z,
        4.0,
        Direction::AtLeast,
        Method::MonteCarlo,
        0.0,
    )
}

/// Exact path when the model is small enough, else Monte Carlo; the
/// control process always runs and must be rejected.
pub fn mds_conditional_mean_test(
    model: &ProcessModel,
    window: usize,
    reps: u64,
    seed: u64,
) -> Result<ProbeResult> {
    if window < 2 {
        return Err(Error::InvalidSpec("MDS window must be >= 2".into()));
    }
    let mut probe = match mds_exact_probe(model, window) {
        Ok(p) => p,
        Err(Error::BudgetExceeded(_)) => mds_monte_carlo_probe(model, window, reps, seed),
        Err(e) => return Err(e),
    };
    if reps > 0 {
        let ctl = mds_control_probe(model, window, reps, seed);
        probe = probe.with_aux(super::AuxCheck::new(
            "control-rejected",
            ctl.value,
            4.0,
            Direction::AtLeast,
            0.0,
        ));
        if probe.method == Method::Exact {
            let mc = mds_monte_carlo_probe(model, window, reps, seed);
            probe = probe.with_aux(super::AuxCheck::new(
                "monte-carlo-bins",
                mc.value,
                4.0,
                Direction::AtMost,
                0.0,
            ));
        }
    }
    Ok(probe)
}
