//! Local and central limit probes at the scheduled times `n_k`.

use super::probe::{monte_carlo, AuxCheck, Direction, Method, ProbeOptions, ProbeResult};
use crate::construction::{ProcessModel, Schedule, Variant};
use crate::dist::{
    interval_probability, kolmogorov_distance, lattice_sum_distribution, normal_cdf, normal_pdf,
    IntervalEstimate, IntervalMethod, IntervalOptions, LatticeDistribution,
};
use crate::error::{Error, Result};
use crate::rng;

const CLOSED_TOL: f64 = 1e-12;

fn check_k(sched: &Schedule, k: usize) -> Result<()> {
    if k >= sched.k_count() {
        return Err(Error::InvalidSpec(format!(
            "k = {k} outside schedule of length {}",
            sched.k_count()
        )));
    }
    Ok(())
}

fn check_lattice(model: &ProcessModel, sched: &Schedule, k: usize) -> Result<()> {
    check_k(sched, k)?;
    if !matches!(sched.variant, Variant::Thm1 | Variant::Thm3) {
        return Err(Error::VariantMismatch(format!(
            "{} is not a lattice variant",
            sched.variant.name()
        )));
    }
    if model.noise().lattice_a().is_none() || model.slab(k).is_none() {
        return Err(Error::VariantMismatch(
            "model does not carry the lattice slab sets".into(),
        ));
    }
    Ok(())
}

/// The law of `S_n`, or `None` when the exact path is over budget.
fn exact_law(model: &ProcessModel, n: u64, opts: &ProbeOptions) -> Result<Option<LatticeDistribution>> {
    match lattice_sum_distribution(model, n, opts.occupancy) {
        Ok(law) => Ok(Some(law)),
        Err(Error::WindowTooLarge { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Monte Carlo fallback: sorted samples of `S_n`.
fn sampled_sums(model: &ProcessModel, n: u64, opts: &ProbeOptions, tag: &str) -> Vec<f64> {
    let key = rng::derive_key(opts.seed, tag);
    let mut out = monte_carlo(
        opts.mc_reps,
        key,
        || (Vec::new(), Vec::new()),
        |(acc, buf): &mut (Vec<f64>, Vec<f64>), r| {
            model.sample_window(r, n as usize, buf);
            acc.push(buf.iter().sum());
        },
        |a, b| a.0.extend(b.0),
    )
    .0;
    out.sort_by(f64::total_cmp);
    out
}

/// `μ(S_{n_k} = 0) >= a_{n_k}`, with the slab chain as auxiliary checks.
pub fn llt_probe_lattice(
    model: &ProcessModel,
    sched: &Schedule,
    k: usize,
    opts: &ProbeOptions,
) -> Result<ProbeResult> {
    check_lattice(model, sched, k)?;
    let n = sched.n[k];
    let (value, method, err) = match exact_law(model, n, opts)? {
        Some(law) => (law.prob(0), Method::Exact, 0.0),
        None => {
            let s = sampled_sums(model, n, opts, &format!("llt-{k}"));
            let p = s.iter().filter(|&&x| x == 0.0).count() as f64 / s.len() as f64;
            let se = (p * (1.0 - p) / s.len() as f64).sqrt();
            (p, Method::MonteCarlo, 4.0 * se)
        }
    };
    let inter = model.slab_intersection(k).expect("checked");
    let mut probe = ProbeResult::new(
        "llt-lattice",
        Some(k),
        Some(n),
        value,
        sched.a_n[k],
        Direction::AtLeast,
        method,
        err,
    )
    .with_aux(AuxCheck::new(
        "atom-covers-intersection",
        value,
        inter,
        Direction::AtLeast,
        err.max(CLOSED_TOL),
    ));
    match sched.variant {
        Variant::Thm1 => {
            let slab = sched.slab_bound(k);
            probe = probe
                .with_aux(AuxCheck::new(
                    "intersection-slab-bound",
                    inter,
                    slab,
                    Direction::AtLeast,
                    CLOSED_TOL,
                ))
                .with_aux(AuxCheck::new(
                    "slab-bound-rate",
                    slab,
                    sched.a_n[k],
                    Direction::AtLeast,
                    CLOSED_TOL,
                ));
        }
        _ => {
            let quarter = sched.quarter_mass(k);
            let h = sched.heights[k] as f64;
            let nn = n as f64;
            let chain = sched.p[k] * (0.5 - nn * nn / h);
            probe = probe
                .with_aux(AuxCheck::new(
                    "intersection-chain",
                    inter,
                    chain,
                    Direction::AtLeast,
                    CLOSED_TOL,
                ))
                .with_aux(AuxCheck::new(
                    "chain-quarter-mass",
                    chain,
                    quarter,
                    Direction::AtLeast,
                    CLOSED_TOL,
                ))
                .with_aux(AuxCheck::new(
                    "quarter-mass-rate",
                    quarter,
                    sched.a_n[k],
                    Direction::AtLeast,
                    CLOSED_TOL,
                ));
        }
    }
    Ok(probe)
}

/// Sup distance from the normal law for sorted samples, with a
/// Dvoretzky–Kiefer–Wolfowitz band at level 1e-6.
fn sampled_kolmogorov(sorted: &[f64], scale: f64) -> (f64, f64) {
    let m = sorted.len() as f64;
    let mut sup: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        let phi = normal_cdf(x / scale);
        sup = sup
            .max((i as f64 / m - phi).abs())
            .max((j as f64 / m - phi).abs());
        i = j;
    }
    let band = ((2.0f64 / 1e-6).ln() / (2.0 * m)).sqrt();
    (sup, band)
}

/// `sup_x |F_{n_k}(x) − Φ(x)| >= a_{n_k} / 2` for lattice models; the
/// density variant goes through [`clt_probe_density`].
pub fn clt_probe(
    model: &ProcessModel,
    sched: &Schedule,
    k: usize,
    opts: &ProbeOptions,
) -> Result<ProbeResult> {
    if sched.variant == Variant::Thm2 {
        return clt_probe_density(model, sched, k, opts);
    }
    check_lattice(model, sched, k)?;
    let n = sched.n[k];
    let sigma = model.sigma2().sqrt();
    let bound = sched.a_n[k] / 2.0;
    match exact_law(model, n, opts)? {
        Some(law) => {
            let value = kolmogorov_distance(&law, sigma, n);
            let below0 = law.cdf(-1);
            Ok(ProbeResult::new(
                "clt-lattice",
                Some(k),
                Some(n),
                value,
                bound,
                Direction::AtLeast,
                Method::Exact,
                0.0,
            )
            .with_aux(AuxCheck::new(
                "left-limit-at-zero",
                value,
                (below0 - 0.5).abs(),
                Direction::AtLeast,
                CLOSED_TOL,
            ))
            .with_aux(AuxCheck::new(
                "half-atom-at-zero",
                value,
                law.prob(0) / 2.0,
                Direction::AtLeast,
                CLOSED_TOL,
            )))
        }
        None => {
            let s = sampled_sums(model, n, opts, &format!("clt-{k}"));
            let (value, band) = sampled_kolmogorov(&s, sigma * (n as f64).sqrt());
            Ok(ProbeResult::new(
                "clt-lattice",
                Some(k),
                Some(n),
                value,
                bound,
                Direction::AtLeast,
                Method::MonteCarlo,
                band,
            ))
        }
    }
}

fn interval_method(e: &IntervalEstimate) -> Method {
    match e.method {
        IntervalMethod::Grid { .. } => Method::Grid,
        IntervalMethod::MonteCarlo { .. } => Method::MonteCarlo,
    }
}

/// `b_n = P(|Σ_{i<n} g_i| <= √n)`.
pub fn interval_b(n: u64, opts: &IntervalOptions) -> Result<IntervalEstimate> {
    interval_probability(&vec![1.0; n as usize], (n as f64).sqrt(), opts)
}

struct DensityParts {
    n: u64,
    sigma: f64,
    d: f64,
    p: f64,
    rho: f64,
    /// μ(G̃_k): starts that stay in tower k for the whole window.
    g_tilde: f64,
    b: IntervalEstimate,
}

fn density_parts(
    model: &ProcessModel,
    sched: &Schedule,
    k: usize,
    opts: &ProbeOptions,
) -> Result<DensityParts> {
    check_k(sched, k)?;
    if sched.variant != Variant::Thm2 || model.variant() != Some(Variant::Thm2) {
        return Err(Error::VariantMismatch("density probes need the thm2 model".into()));
    }
    if k % 2 == 0 {
        return Err(Error::EvenIndex { k });
    }
    let n = sched.n[k];
    let h = sched.heights[k];
    let sigma = model.sigma2().sqrt();
    let d = sched.d[k];
    let p = sched.p[k];
    let mut iopts = opts.interval;
    iopts.seed = rng::derive_key(opts.seed, &format!("b-{k}"));
    Ok(DensityParts {
        n,
        sigma,
        d,
        p,
        rho: d / sigma,
        g_tilde: p * (h - n + 1) as f64 / h as f64,
        b: interval_b(n, &iopts)?,
    })
}

/// Sampled `P(|S_n(f)| <= u)` with its standard error.
fn sampled_window_mass(model: &ProcessModel, n: u64, u: f64, reps: u64, key: u64) -> (f64, f64) {
    let hits = monte_carlo(
        reps,
        key,
        || (0u64, Vec::new()),
        |(h, buf): &mut (u64, Vec<f64>), r| {
            model.sample_window(r, n as usize, buf);
            let s: f64 = buf.iter().sum();
            *h += u64::from(s.abs() <= u);
        },
        |a, b| a.0 += b.0,
    )
    .0;
    let p = hits as f64 / reps as f64;
    (p, (p * (1.0 - p) / reps as f64).sqrt())
}

/// Ratio `(1/ρ_k) μ(|S_{n_k}| <= ρ_k σ √n_k) >= L` through the lower bound
/// `(b p_k / (2 d_k)) σ`.
pub fn llt_probe_density(
    model: &ProcessModel,
    sched: &Schedule,
    k: usize,
    opts: &ProbeOptions,
) -> Result<ProbeResult> {
    let parts = density_parts(model, sched, k, opts)?;
    density_llt_from_parts(model, sched, k, opts, &parts)
}

fn density_llt_from_parts(
    model: &ProcessModel,
    sched: &Schedule,
    k: usize,
    opts: &ProbeOptions,
    q: &DensityParts,
) -> Result<ProbeResult> {
    let l = sched.density.as_ref().expect("thm2").l;
    let scale = q.p * q.sigma / (2.0 * q.d);
    let value = q.b.value * scale;
    let decomposition = q.g_tilde * q.b.value / q.rho;
    let mut probe = ProbeResult::new(
        "llt-density",
        Some(k),
        Some(q.n),
        value,
        l,
        Direction::AtLeast,
        interval_method(&q.b),
        q.b.error_bound * scale,
    )
    .with_aux(AuxCheck::new(
        "decomposition-covers-bound",
        decomposition,
        value,
        Direction::AtLeast,
        CLOSED_TOL,
    ))
    .with_aux(AuxCheck::new(
        "exceeds-normal-ratio",
        value,
        2.0 * normal_pdf(0.0),
        Direction::AtLeast,
        q.b.error_bound * scale,
    ));
    if opts.mc_reps > 0 {
        let mut mopts = opts.interval;
        mopts.use_grid = false;
        mopts.use_monte_carlo = true;
        mopts.mc_reps = opts.mc_reps;
        mopts.seed = rng::derive_key(opts.seed, &format!("b-mc-{k}"));
        let bmc = interval_b(q.n, &mopts)?;
        probe = probe.with_aux(AuxCheck::new(
            "b-monte-carlo",
            bmc.value,
            q.b.value,
            Direction::Within,
            bmc.error_bound + q.b.error_bound,
        ));
        let key = rng::derive_key(opts.seed, &format!("ratio-mc-{k}"));
        let (pm, se) =
            sampled_window_mass(model, q.n, q.d * (q.n as f64).sqrt(), opts.mc_reps, key);
        probe = probe.with_aux(AuxCheck::new(
            "ratio-monte-carlo",
            pm / q.rho,
            decomposition,
            Direction::AtLeast,
            (4.0 * se + q.g_tilde * q.b.error_bound) / q.rho,
        ));
    }
    Ok(probe)
}

/// `sup_x |F_{n_k}(x) − Φ(x)| >= a_{n_k}` for odd `k`, bounded below by
/// `(μ(G̃_k) b_{n_k} − (Φ(ρ_k) − Φ(−ρ_k))) / 2`.
pub fn clt_probe_density(
    model: &ProcessModel,
    sched: &Schedule,
    k: usize,
    opts: &ProbeOptions,
) -> Result<ProbeResult> {
    let parts = density_parts(model, sched, k, opts)?;
    density_clt_from_parts(sched, k, &parts)
}

fn density_clt_from_parts(sched: &Schedule, k: usize, q: &DensityParts) -> Result<ProbeResult> {
    let l = sched.density.as_ref().expect("thm2").l;
    let normal_mass = normal_cdf(q.rho) - normal_cdf(-q.rho);
    let value = (q.g_tilde * q.b.value - normal_mass) / 2.0;
    Ok(ProbeResult::new(
        "clt-density",
        Some(k),
        Some(q.n),
        value,
        sched.a_n[k],
        Direction::AtLeast,
        interval_method(&q.b),
        q.g_tilde * q.b.error_bound / 2.0,
    )
    .with_aux(AuxCheck::new(
        "ratio-route",
        (l / 2.0 - normal_pdf(0.0)) * sched.rho[k],
        sched.a_n[k],
        Direction::AtLeast,
        CLOSED_TOL,
    )))
}

/// Both density probes at odd `k`, sharing one `b_{n_k}` evaluation.
pub fn density_probes(
    model: &ProcessModel,
    sched: &Schedule,
    k: usize,
    opts: &ProbeOptions,
) -> Result<(ProbeResult, ProbeResult)> {
    let parts = density_parts(model, sched, k, opts)?;
    let llt = density_llt_from_parts(model, sched, k, opts, &parts)?;
    let clt = density_clt_from_parts(sched, k, &parts)?;
    Ok((llt, clt))
}
