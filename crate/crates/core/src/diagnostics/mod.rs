//! Probes for every inequality of the constructions.

mod baseline;
mod limit;
mod mds;
mod mixing;
mod probe;

pub use baseline::{conditional_variance_floor, density_bound_probe, gnedenko_baseline, variance_probe};
pub use limit::{
    clt_probe, clt_probe_density, density_probes, interval_b, llt_probe_density, llt_probe_lattice,
};
pub use mds::{
    exact_max_conditional_mean, mds_conditional_mean_test, mds_control_probe, mds_exact_probe,
    mds_monte_carlo_probe, weight_pattern_law,
};
pub use mixing::{mixing_lag, mixing_probe, mixing_profile, BetaMixing, MixingProfile};
pub use probe::{monte_carlo, AuxCheck, Direction, Method, ProbeOptions, ProbeResult};
