//! Variance and density checks, the dispersion floor, and the i.i.d.
//! lattice contrast.

use super::probe::{AuxCheck, Direction, Method, ProbeResult};
use crate::construction::{NoiseSpec, ProcessModel, Schedule};
use crate::dist::{normal_pdf, LatticeDistribution};
use crate::error::{Error, Result};
use crate::rng;

/// `sup_N |(σ√n/h) P_n(N) − φ((nb + Nh − nm)/(σ√n))|` for the `n`-fold
/// convolution of a law on `{b + Nh}`.
pub fn gnedenko_baseline(step_law: &LatticeDistribution, b: f64, h: f64, n: u64) -> Result<f64> {
    if !(h > 0.0) || n == 0 {
        return Err(Error::LatticeMismatch("need h > 0 and n >= 1".into()));
    }
    for (x, p) in step_law.atoms() {
        let r = (x as f64 - b) / h;
        if p > 0.0 && (r - r.round()).abs() > 1e-9 {
            return Err(Error::LatticeMismatch(format!(
                "atom {x} is not of the form {b} + N·{h}"
            )));
        }
    }
    let var = step_law.variance();
    if !(var > 0.0) {
        return Err(Error::LatticeMismatch("step law has zero variance".into()));
    }
    let mean = step_law.mean();
    let mut law = LatticeDistribution::point_mass(0);
    for _ in 0..n {
        law = law.convolve(step_law);
    }
    let nf = n as f64;
    let scale = (var * nf).sqrt();
    let lo = ((law.min_support() as f64 - nf * b) / h).floor() as i64 - 1;
    let hi = ((law.max_support() as f64 - nf * b) / h).ceil() as i64 + 1;
    let mut sup: f64 = 0.0;
    for big_n in lo..=hi {
        let x = nf * b + big_n as f64 * h;
        let p = if (x - x.round()).abs() < 1e-9 {
            law.prob(x.round() as i64)
        } else {
            0.0
        };
        let z = (x - nf * mean) / scale;
        sup = sup.max((scale / h * p - normal_pdf(z)).abs());
    }
    Ok(sup)
}

/// min over tower states `s` of `E(f(T x)^2 | x = s)`. With `depth = 0`
/// there is no history and the value is `E f^2`. Deeper histories add
/// nothing beyond the current state, since the chain is Markov.
pub fn conditional_variance_floor(model: &ProcessModel, depth: usize) -> Result<f64> {
    let a = model
        .noise()
        .lattice_a()
        .ok_or_else(|| Error::VariantMismatch("dispersion floor needs lattice noise".into()))?;
    if depth == 0 {
        return Ok(model.sigma2());
    }
    let sys = model.system();
    let q = sys.base_law();
    let base_mean: f64 = (0..sys.tower_count())
        .map(|l| q[l] * model.weight(crate::tower::TowerState::new(l, 0)).powi(2))
        .sum();
    let mut floor = f64::INFINITY;
    for s in sys.states() {
        let next = if s.level + 1 < sys.height(s.tower) {
            model.weight(crate::tower::TowerState::new(s.tower, s.level + 1)).powi(2)
        } else {
            base_mean
        };
        floor = floor.min(a * next);
    }
    Ok(floor)
}

/// Variance of `f` against the direct state sum, plus a sampled check and
/// the variant-specific extras.
pub fn variance_probe(
    model: &ProcessModel,
    sched: Option<&Schedule>,
    reps: u64,
    seed: u64,
) -> Result<ProbeResult> {
    let sys = model.system();
    let var_g = model.noise().variance();
    let direct: f64 = sys
        .states()
        .map(|s| sys.stationary_prob(s) * model.weight(s).powi(2) * var_g)
        .sum();
    let mut probe = ProbeResult::new(
        "variance",
        None,
        None,
        model.variance_of_f(),
        direct,
        Direction::Within,
        Method::Exact,
        1e-12,
    );
    if reps > 1 {
        let key = rng::derive_key(seed, "variance");
        let (s1, s2, s4) = super::probe::monte_carlo(
            reps,
            key,
            || (0.0, 0.0, 0.0),
            |acc: &mut (f64, f64, f64), r| {
                let s = sys.sample_stationary(r);
                let x = model.weight(s) * model.noise().sample(r);
                acc.0 += x;
                acc.1 += x * x;
                acc.2 += x.powi(4);
            },
            |a, b| {
                a.0 += b.0;
                a.1 += b.1;
                a.2 += b.2;
            },
        );
        let m = reps as f64;
        let mean = s1 / m;
        let second = s2 / m;
        let se = ((s4 / m - second * second).max(0.0) / m).sqrt();
        probe = probe
            .with_aux(AuxCheck::new(
                "monte-carlo-second-moment",
                second,
                direct,
                Direction::Within,
                4.0 * se,
            ))
            .with_aux(AuxCheck::new(
                "monte-carlo-mean",
                mean,
                0.0,
                Direction::Within,
                4.0 * (second / m).sqrt(),
            ));
    }
    if let Some(c) = sched.and_then(|s| s.density.as_ref()) {
        probe = probe.with_aux(AuxCheck::new(
            "closed-form-within-truncation",
            model.variance_of_f(),
            c.sigma2_closed,
            Direction::Within,
            c.variance_tail + c.variance_remainder,
        ));
    }
    if let NoiseSpec::Lattice { a } = model.noise() {
        let floor = conditional_variance_floor(model, 1)?;
        let aux = if model.mass_a() > 0.0 {
            // Histories deep in the slab: the next step is silent for sure.
            AuxCheck::new("dispersion-floor", floor, 0.0, Direction::AtMost, 0.0)
        } else {
            AuxCheck::new("dispersion-floor", floor, a, Direction::Within, 1e-12)
        };
        probe = probe.with_aux(aux);
    }
    Ok(probe)
}

/// Density of `f` bounded by `L_1 + L_2` and integrating to 1.
pub fn density_bound_probe(model: &ProcessModel, sched: &Schedule) -> Result<ProbeResult> {
    let c = sched
        .density
        .as_ref()
        .ok_or_else(|| Error::VariantMismatch("density bound needs the thm2 schedule".into()))?;
    let dens = model.density_of_f()?;
    let asym = dens
        .breakpoints()
        .windows(2)
        .zip(dens.values())
        .map(|(w, &v)| {
            let mid = (w[0] + w[1]) / 2.0;
            (v - dens.value_at(-mid)).abs()
        })
        .fold(0.0, f64::max);
    Ok(ProbeResult::new(
        "density-bound",
        None,
        None,
        dens.max_value(),
        c.l1 + c.l2,
        Direction::AtMost,
        Method::Exact,
        0.0,
    )
    .with_aux(AuxCheck::new(
        "density-integral",
        dens.integral(),
        1.0,
        Direction::Within,
        1e-10,
    ))
    .with_aux(AuxCheck::new(
        "density-nonnegative",
        dens.min_value(),
        0.0,
        Direction::AtLeast,
        0.0,
    ))
    .with_aux(AuxCheck::new(
        "density-symmetric",
        asym,
        0.0,
        Direction::Within,
        1e-12,
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coin() -> LatticeDistribution {
        LatticeDistribution::from_atoms(&[(-1, 0.5), (1, 0.5)])
    }

    #[test]
    fn gnedenko_errors() {
        assert!(gnedenko_baseline(&LatticeDistribution::point_mass(0), 0.0, 1.0, 1).is_err());
        assert!(gnedenko_baseline(&coin(), 0.0, 2.0, 4).is_err());
        assert!(gnedenko_baseline(&coin(), -1.0, 2.0, 4).is_ok());
    }

    #[test]
    fn iid_floor_is_a() {
        let m = ProcessModel::iid(NoiseSpec::Lattice { a: 1.0 }).unwrap();
        assert_eq!(conditional_variance_floor(&m, 0).unwrap(), 1.0);
        assert_eq!(conditional_variance_floor(&m, 3).unwrap(), 1.0);
    }
}
