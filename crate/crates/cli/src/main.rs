use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mds_towers::construction::{RateSequence, Variant};
use mds_towers::diagnostics::{
    clt_probe, density_bound_probe, density_probes, llt_probe_lattice,
    mds_conditional_mean_test, mixing_probe, variance_probe, ProbeResult,
};
use mds_towers::report::{
    build_model, build_schedule, probe_options, run_experiment, to_text, verify_certificate,
    write_reports, ExperimentConfig, SCHEMA_VERSION,
};
use mds_towers::Error;

#[derive(Parser)]
#[command(name = "mdstowers", version, about = "Tower-chain martingale difference counterexamples with exact checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the parameter schedule as JSON.
    Schedule(ConfigArgs),
    /// Build the process model and print its summary as JSON.
    Build(ConfigArgs),
    /// Run a single probe family and print the results.
    Probe {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, value_enum)]
        which: ProbeKind,
        /// Schedule index; all indices when omitted.
        #[arg(long)]
        index: Option<usize>,
    },
    /// Run every probe and write report.txt, report.ndjson and curves.csv.
    Report {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Output directory (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute closed-form bounds in a report.ndjson and compare them.
    Verify { bundle: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum ProbeKind {
    Llt,
    Clt,
    Mds,
    Variance,
    Mixing,
    Density,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Thm1,
    Thm2,
    Thm3,
    IidBaseline,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Thm1 => Variant::Thm1,
            VariantArg::Thm2 => Variant::Thm2,
            VariantArg::Thm3 => Variant::Thm3,
            VariantArg::IidBaseline => Variant::IidBaseline,
        }
    }
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// TOML experiment config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    /// Required unless the config sets it.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of scheduled indices K.
    #[arg(long)]
    k: Option<usize>,
    /// Rate a_n = c n^-beta.
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Lattice noise parameter.
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    l1: Option<f64>,
    #[arg(long)]
    l2: Option<f64>,
    #[arg(long)]
    l: Option<f64>,
    #[arg(long)]
    remainder_height: Option<u64>,
    #[arg(long)]
    exact_ops: Option<f64>,
    #[arg(long)]
    mc_reps: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
}

impl ConfigArgs {
    fn resolve(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading {}", p.display()))?;
                ExperimentConfig::from_toml(&text)?
            }
            None => {
                let (Some(variant), Some(seed)) = (self.variant, self.seed) else {
                    bail!(Error::Config(
                        "without --config, --variant and --seed are required".into()
                    ));
                };
                let text = format!(
                    "schema_version = {SCHEMA_VERSION}\nvariant = \"{}\"\nseed = {seed}\nk = {}\n[rate]\nfamily = \"power-law\"\nc = {:?}\nbeta = {:?}\n",
                    Variant::from(variant).name(),
                    self.k.unwrap_or(3),
                    self.c.unwrap_or(0.5),
                    self.beta.unwrap_or(0.5),
                );
                ExperimentConfig::from_toml(&text)?
            }
        };
        if let Some(v) = self.variant {
            cfg.variant = v.into();
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(k) = self.k {
            cfg.k = k;
        }
        if self.c.is_some() || self.beta.is_some() {
            let (c0, b0) = match cfg.rate {
                RateSequence::PowerLaw { c, beta } => (c, beta),
                RateSequence::InverseLog { c, beta } => (c, beta),
            };
            cfg.rate = RateSequence::power_law(self.c.unwrap_or(c0), self.beta.unwrap_or(b0));
        }
        if let Some(a) = self.a {
            cfg.noise.a = a;
        }
        if let Some(x) = self.l1 {
            cfg.density.l1 = x;
        }
        if let Some(x) = self.l2 {
            cfg.density.l2 = x;
        }
        if let Some(x) = self.l {
            cfg.density.l = x;
        }
        if self.remainder_height.is_some() {
            cfg.remainder_height = self.remainder_height;
        }
        if let Some(x) = self.exact_ops {
            cfg.budgets.exact_ops = x;
        }
        if let Some(x) = self.mc_reps {
            cfg.budgets.mc_reps = x;
        }
        if let Some(x) = self.workers {
            cfg.budgets.workers = x;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_probes(probes: &[ProbeResult]) -> anyhow::Result<bool> {
    for p in probes {
        println!("{}", serde_json::to_string(p)?);
    }
    Ok(probes.iter().all(|p| p.pass))
}

fn run_probe(cfg: &ExperimentConfig, which: ProbeKind, index: Option<usize>) -> anyhow::Result<bool> {
    let (sched, model) = build_model(cfg)?;
    let opts = probe_options(cfg);
    let mut out = Vec::new();
    let indices = |s: &mds_towers::construction::Schedule| -> Vec<usize> {
        match index {
            Some(k) => vec![k],
            None => (0..s.k_count()).collect(),
        }
    };
    match which {
        ProbeKind::Llt | ProbeKind::Clt => {
            let Some(s) = &sched else {
                bail!(Error::VariantMismatch("the i.i.d. baseline has no schedule; use `report`".into()));
            };
            for k in indices(s) {
                if s.variant == Variant::Thm2 {
                    if k % 2 == 0 && index.is_none() {
                        continue;
                    }
                    let (llt, clt) = density_probes(&model, s, k, &opts)?;
                    out.push(if matches!(which, ProbeKind::Llt) { llt } else { clt });
                } else if matches!(which, ProbeKind::Llt) {
                    out.push(llt_probe_lattice(&model, s, k, &opts)?);
                } else {
                    out.push(clt_probe(&model, s, k, &opts)?);
                }
            }
        }
        ProbeKind::Mds => out.push(mds_conditional_mean_test(&model, opts.mds_window, opts.mds_reps, opts.seed)?),
        ProbeKind::Variance => out.push(variance_probe(&model, sched.as_ref(), opts.mc_reps, opts.seed)?),
        ProbeKind::Mixing => {
            let Some(s) = &sched else {
                bail!(Error::VariantMismatch("mixing needs a schedule".into()));
            };
            let (p, lags, _) = mixing_probe(&s.tower_system()?, model.system(), s, opts.mixing_cap)?;
            eprintln!("mixing lags m_k: {lags:?}");
            out.push(p);
        }
        ProbeKind::Density => {
            let Some(s) = &sched else {
                bail!(Error::VariantMismatch("density bound needs the thm2 schedule".into()));
            };
            out.push(density_bound_probe(&model, s)?);
        }
    }
    print_probes(&out)
}

fn report(cfg: &ExperimentConfig, out: Option<&Path>) -> anyhow::Result<bool> {
    let bundle = run_experiment(cfg)?;
    let dir = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    write_reports(&bundle, &dir)?;
    print!("{}", to_text(&bundle));
    println!("reports written to {}", dir.display());
    Ok(bundle.pass())
}

fn exit_for(e: &anyhow::Error) -> ExitCode {
    match e.downcast_ref::<Error>() {
        Some(Error::BoundMismatch { .. }) => ExitCode::from(1),
        _ => ExitCode::from(2),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result: anyhow::Result<bool> = (|| match &cli.command {
        Command::Schedule(a) => {
            let cfg = a.resolve()?;
            println!("{}", serde_json::to_string_pretty(&build_schedule(&cfg)?)?);
            Ok(true)
        }
        Command::Build(a) => {
            let cfg = a.resolve()?;
            let (_, model) = build_model(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&model.summary())?);
            Ok(true)
        }
        Command::Probe { cfg, which, index } => run_probe(&cfg.resolve()?, *which, *index),
        Command::Report { cfg, out } => report(&cfg.resolve()?, out.as_deref()),
        Command::Verify { bundle } => {
            let v = verify_certificate(bundle)?;
            println!(
                "{} probes, {} bounds recomputed and matched; recorded probes {}",
                v.probes,
                v.bounds_checked,
                if v.all_pass { "all pass" } else { "include failures" }
            );
            Ok(v.all_pass)
        }
    })();
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_for(&e)
        }
    }
}
