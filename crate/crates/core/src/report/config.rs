use serde::{Deserialize, Serialize};

use crate::construction::{RateSequence, ScheduleOptions, Variant};
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// Lattice noise parameter; ignored by the density variant.
    pub a: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig { a: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    pub l1: f64,
    pub l2: f64,
    pub l: f64,
}

impl Default for DensityConfig {
    fn default() -> Self {
        DensityConfig {
            l1: 1.0,
            l2: 100.0,
            l: 4.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixingConfig {
    pub eps0: f64,
    pub delta: f64,
}

impl Default for MixingConfig {
    fn default() -> Self {
        let d = ScheduleOptions::default();
        MixingConfig {
            eps0: d.eps0,
            delta: d.delta,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budgets {
    /// Cap on states × n × n for the exact occupancy program.
    pub exact_ops: f64,
    pub mc_reps: u64,
    /// Worker threads; 0 uses the default pool.
    pub workers: usize,
    pub search_cap: u64,
    pub mixing_cap: u64,
    pub mds_window: usize,
    pub mds_reps: u64,
    /// Cap on cell updates for one grid convolution.
    pub grid_budget: f64,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            exact_ops: 1e9,
            mc_reps: 200_000,
            workers: 0,
            search_cap: ScheduleOptions::default().search_cap,
            mixing_cap: 1 << 20,
            mds_window: 4,
            mds_reps: 200_000,
            grid_budget: 4e9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: "out".into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub variant: Variant,
    pub seed: u64,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub remainder_height: Option<u64>,
    pub rate: RateSequence,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub density: DensityConfig,
    #[serde(default)]
    pub mixing: MixingConfig,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        let min_k = match self.variant {
            Variant::Thm1 => 1,
            Variant::Thm2 | Variant::Thm3 => 2,
            Variant::IidBaseline => 0,
        };
        if self.variant != Variant::IidBaseline && self.k < min_k {
            return bad(format!("k = {} but {} needs k >= {min_k}", self.k, self.variant.name()));
        }
        self.rate.validate().or_else(|e| bad(e.to_string()))?;
        if self.variant != Variant::Thm2 && !(self.noise.a > 0.0 && self.noise.a <= 1.0) {
            return bad(format!("noise.a = {} not in (0, 1]", self.noise.a));
        }
        if self.remainder_height == Some(0) {
            return bad("remainder_height must be >= 1".into());
        }
        let b = &self.budgets;
        if !(b.exact_ops > 0.0) || !(b.grid_budget > 0.0) {
            return bad("budgets must be positive".into());
        }
        if b.mds_window < 2 || b.mds_window > 8 {
            return bad(format!("mds_window = {} not in [2, 8]", b.mds_window));
        }
        if b.search_cap == 0 || b.mixing_cap == 0 {
            return bad("search caps must be positive".into());
        }
        Ok(())
    }

    pub fn schedule_options(&self) -> ScheduleOptions {
        ScheduleOptions {
            search_cap: self.budgets.search_cap,
            remainder_height: self.remainder_height,
            delta: self.mixing.delta,
            eps0: self.mixing.eps0,
        }
    }
}
