use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::construction::{
    build_counterexample, derive_schedule_thm1, derive_schedule_thm2, derive_schedule_thm3,
    ModelSummary, NoiseSpec, ProcessModel, Schedule, Variant,
};
use crate::diagnostics::{
    clt_probe, density_bound_probe, density_probes, gnedenko_baseline, llt_probe_lattice,
    mds_conditional_mean_test, mixing_probe, variance_probe, AuxCheck, Direction, Method,
    MixingProfile, ProbeOptions, ProbeResult,
};
use crate::dist::{
    kolmogorov_distance, lattice_sum_distribution, normal_pdf, IntervalOptions, LatticeDistribution,
};
use crate::error::{Error, Result};
use crate::tower::{OccupancyOptions, OccupancyPath};

/// Window lengths of the i.i.d. contrast.
pub const IID_WINDOWS: [u64; 3] = [100, 200, 400];
/// Berry–Esseen style constant for the i.i.d. sanity check.
pub const BERRY_ESSEEN_C: f64 = 0.8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub exact_ops: f64,
    pub mc_reps: u64,
    pub timestamp: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub probe_count: usize,
    pub passed: usize,
    pub failed: usize,
    pub pass: bool,
}

/// One row of `curves.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub k: Option<usize>,
    pub n: u64,
    pub llt_value: f64,
    pub llt_bound: f64,
    pub clt_value: f64,
    pub clt_bound: f64,
    pub method: Method,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportBundle {
    pub provenance: Provenance,
    pub config: ExperimentConfig,
    pub schedule: Option<Schedule>,
    pub model: ModelSummary,
    pub probes: Vec<ProbeResult>,
    pub mixing: Option<MixingProfile>,
    pub curves: Vec<CurveRow>,
    pub summary: Summary,
}

impl ReportBundle {
    pub fn pass(&self) -> bool {
        self.summary.pass
    }
}

pub fn probe_options(cfg: &ExperimentConfig) -> ProbeOptions {
    let b = &cfg.budgets;
    ProbeOptions {
        occupancy: OccupancyOptions {
            path: OccupancyPath::Auto,
            op_budget: b.exact_ops,
        },
        interval: IntervalOptions {
            grid_budget: b.grid_budget,
            mc_reps: b.mc_reps,
            seed: cfg.seed,
            ..IntervalOptions::default()
        },
        mc_reps: b.mc_reps,
        seed: cfg.seed,
        mds_window: b.mds_window,
        mds_reps: b.mds_reps,
        mixing_cap: b.mixing_cap,
    }
}

/// Schedule for the configured variant.
pub fn build_schedule(cfg: &ExperimentConfig) -> Result<Schedule> {
    let opts = cfg.schedule_options();
    match cfg.variant {
        Variant::Thm1 => derive_schedule_thm1(&cfg.rate, cfg.k, &opts),
        Variant::Thm2 => derive_schedule_thm2(
            &cfg.rate,
            cfg.density.l1,
            cfg.density.l2,
            cfg.density.l,
            cfg.k,
            &opts,
        ),
        Variant::Thm3 => derive_schedule_thm3(&cfg.rate, cfg.k, &opts),
        Variant::IidBaseline => Err(Error::VariantMismatch(
            "the i.i.d. baseline has no schedule".into(),
        )),
    }
}

/// Schedule (if any) and model for the configured variant.
pub fn build_model(cfg: &ExperimentConfig) -> Result<(Option<Schedule>, ProcessModel)> {
    match cfg.variant {
        Variant::IidBaseline => Ok((None, ProcessModel::iid(NoiseSpec::Lattice { a: cfg.noise.a })?)),
        Variant::Thm2 => {
            let s = build_schedule(cfg)?;
            let m = build_counterexample(&s, NoiseSpec::TwoIntervalUniform)?;
            Ok((Some(s), m))
        }
        _ => {
            let s = build_schedule(cfg)?;
            let m = build_counterexample(&s, NoiseSpec::Lattice { a: cfg.noise.a })?;
            Ok((Some(s), m))
        }
    }
}

fn summarize(probes: &[ProbeResult]) -> Summary {
    let passed = probes.iter().filter(|p| p.pass).count();
    Summary {
        probe_count: probes.len(),
        passed,
        failed: probes.len() - passed,
        pass: passed == probes.len(),
    }
}

/// Lattice step law of the i.i.d. noise with its maximal span `(b, h)`.
pub fn iid_step_law(a: f64) -> (LatticeDistribution, f64, f64) {
    if a >= 1.0 {
        (LatticeDistribution::from_atoms(&[(-1, 0.5), (1, 0.5)]), -1.0, 2.0)
    } else {
        (
            LatticeDistribution::from_atoms(&[(-1, a / 2.0), (0, 1.0 - a), (1, a / 2.0)]),
            0.0,
            1.0,
        )
    }
}

fn iid_probes(
    cfg: &ExperimentConfig,
    model: &ProcessModel,
    opts: &ProbeOptions,
) -> Result<(Vec<ProbeResult>, Vec<CurveRow>)> {
    let a = cfg.noise.a;
    let (step, b, h) = iid_step_law(a);
    let sigma = a.sqrt();
    let mut probes = Vec::new();
    let mut curves = Vec::new();

    let g: Vec<f64> = IID_WINDOWS
        .iter()
        .map(|&n| gnedenko_baseline(&step, b, h, n))
        .collect::<Result<_>>()?;
    let mut p = ProbeResult::new(
        "gnedenko-maximal",
        None,
        Some(IID_WINDOWS[2]),
        g[2],
        g[0],
        Direction::AtMost,
        Method::Exact,
        0.0,
    );
    for i in 1..g.len() {
        p = p.with_aux(AuxCheck::new(
            &format!("decrease-n{}", IID_WINDOWS[i]),
            g[i],
            g[i - 1],
            Direction::AtMost,
            0.0,
        ));
    }
    probes.push(p);

    let coarse: Vec<f64> = IID_WINDOWS
        .iter()
        .map(|&n| gnedenko_baseline(&step, b, h / 2.0, n))
        .collect::<Result<_>>()?;
    probes.push(ProbeResult::new(
        "gnedenko-non-maximal",
        None,
        None,
        coarse.iter().copied().fold(f64::INFINITY, f64::min),
        0.1,
        Direction::AtLeast,
        Method::Exact,
        0.0,
    ));

    let mut dist = Vec::new();
    for &n in [25u64].iter().chain(IID_WINDOWS.iter()) {
        let law = lattice_sum_distribution(model, n, opts.occupancy)?;
        dist.push(kolmogorov_distance(&law, sigma, n));
        if n != 25 {
            curves.push(CurveRow {
                k: None,
                n,
                llt_value: law.prob(0),
                llt_bound: h * normal_pdf(0.0) / (sigma * (n as f64).sqrt()),
                clt_value: *dist.last().unwrap(),
                clt_bound: BERRY_ESSEEN_C / (n as f64).sqrt(),
                method: Method::Exact,
            });
        }
    }
    let n_last = IID_WINDOWS[2];
    probes.push(
        ProbeResult::new(
            "berry-esseen",
            None,
            Some(n_last),
            dist[3],
            BERRY_ESSEEN_C / (n_last as f64).sqrt(),
            Direction::AtMost,
            Method::Exact,
            0.0,
        )
        .with_aux(AuxCheck::new(
            "decrease-25-to-100",
            dist[1],
            dist[0],
            Direction::AtMost,
            0.0,
        )),
    );

    let law = lattice_sum_distribution(model, n_last, opts.occupancy)?;
    let scaled = sigma * (n_last as f64).sqrt() / h * law.prob(0);
    probes.push(ProbeResult::new(
        "llt-iid",
        None,
        Some(n_last),
        scaled,
        normal_pdf(0.0),
        Direction::Within,
        Method::Exact,
        1.0 / n_last as f64,
    ));
    Ok((probes, curves))
}

fn curve_from(llt: &ProbeResult, clt: &ProbeResult) -> CurveRow {
    let method = if llt.method == clt.method {
        llt.method
    } else {
        Method::MonteCarlo
    };
    CurveRow {
        k: llt.k,
        n: llt.n.unwrap_or(0),
        llt_value: llt.value,
        llt_bound: llt.bound,
        clt_value: clt.value,
        clt_bound: clt.bound,
        method,
    }
}

fn now_seconds() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn run_inner(cfg: &ExperimentConfig) -> Result<ReportBundle> {
    let (mut schedule, model) = build_model(cfg)?;
    let opts = probe_options(cfg);
    let mut probes = Vec::new();
    let mut curves = Vec::new();
    let mut mixing = None;
    match (&mut schedule, cfg.variant) {
        (Some(s), Variant::Thm1 | Variant::Thm3) => {
            for k in 0..s.k_count() {
                let llt = llt_probe_lattice(&model, s, k, &opts)?;
                let clt = clt_probe(&model, s, k, &opts)?;
                curves.push(curve_from(&llt, &clt));
                probes.push(llt);
                probes.push(clt);
            }
            if cfg.variant == Variant::Thm3 {
                let chain = s.tower_system()?;
                let (p, lags, profile) = mixing_probe(&chain, model.system(), s, opts.mixing_cap)?;
                s.mixing_lags = lags;
                probes.push(p);
                mixing = Some(profile);
            }
        }
        (Some(s), Variant::Thm2) => {
            for k in (1..s.k_count()).step_by(2) {
                let (llt, clt) = density_probes(&model, s, k, &opts)?;
                curves.push(curve_from(&llt, &clt));
                probes.push(llt);
                probes.push(clt);
            }
            probes.push(density_bound_probe(&model, s)?);
        }
        (None, Variant::IidBaseline) => {
            let (p, c) = iid_probes(cfg, &model, &opts)?;
            probes.extend(p);
            curves.extend(c);
        }
        _ => unreachable!("schedule presence follows the variant"),
    }
    probes.push(mds_conditional_mean_test(
        &model,
        opts.mds_window,
        opts.mds_reps,
        opts.seed,
    )?);
    probes.push(variance_probe(&model, schedule.as_ref(), opts.mc_reps, opts.seed)?);
    Ok(ReportBundle {
        provenance: Provenance {
            tool: "mdstowers".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed: cfg.seed,
            exact_ops: cfg.budgets.exact_ops,
            mc_reps: cfg.budgets.mc_reps,
            timestamp: now_seconds(),
        },
        config: cfg.clone(),
        schedule,
        model: model.summary(),
        summary: summarize(&probes),
        probes,
        mixing,
        curves,
    })
}

/// Build the schedule and model, run every probe of the variant.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ReportBundle> {
    cfg.validate()?;
    if cfg.budgets.workers == 0 {
        return run_inner(cfg);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.budgets.workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_inner(cfg))
}

/// Number of probes a bundle must contain.
pub fn expected_probe_count(variant: Variant, k: usize) -> usize {
    match variant {
        Variant::Thm1 => 2 * k + 2,
        Variant::Thm3 => 2 * k + 3,
        Variant::Thm2 => 2 * (k / 2) + 3,
        Variant::IidBaseline => 6,
    }
}
