//! Process models `f = weight(state) · g` over a tower chain.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::schedule::{Schedule, Variant};
use crate::dist::{sample_two_interval, PiecewiseDensity};
use crate::error::{Error, Result};
use crate::tower::{TowerSpec, TowerState, TowerSystem};

/// Law of the independent noise `g`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NoiseSpec {
    /// `P(g = ±1) = a/2`, `P(g = 0) = 1 − a`.
    Lattice { a: f64 },
    /// Density 1 on `[-1, -1/2] ∪ [1/2, 1]`.
    TwoIntervalUniform,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if let NoiseSpec::Lattice { a } = *self {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::InvalidSpec(format!("lattice noise a = {a} not in (0, 1]")));
            }
        }
        Ok(())
    }

    pub fn variance(&self) -> f64 {
        match *self {
            NoiseSpec::Lattice { a } => a,
            NoiseSpec::TwoIntervalUniform => 7.0 / 12.0,
        }
    }

    pub fn lattice_a(&self) -> Option<f64> {
        match *self {
            NoiseSpec::Lattice { a } => Some(a),
            NoiseSpec::TwoIntervalUniform => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            NoiseSpec::Lattice { a } => {
                let u: f64 = rng.gen();
                if u < a / 2.0 {
                    -1.0
                } else if u < a {
                    1.0
                } else {
                    0.0
                }
            }
            NoiseSpec::TwoIntervalUniform => sample_two_interval(rng),
        }
    }
}

/// Weight profile along one tower.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LevelWeights {
    Constant { value: f64 },
    /// `below` on levels `< threshold`, `above` on the rest.
    Slab { threshold: u64, below: f64, above: f64 },
}

impl LevelWeights {
    pub fn at(&self, level: u64) -> f64 {
        match *self {
            LevelWeights::Constant { value } => value,
            LevelWeights::Slab {
                threshold,
                below,
                above,
            } => {
                if level < threshold {
                    below
                } else {
                    above
                }
            }
        }
    }
}

/// A near-invariant slab `A_k`: the lowest `levels` levels of `tower`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlabSet {
    pub k: usize,
    pub tower: usize,
    pub window: u64,
    pub levels: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProcessModel {
    variant: Option<Variant>,
    system: TowerSystem,
    noise: NoiseSpec,
    weights: Vec<LevelWeights>,
    slabs: Vec<SlabSet>,
    sigma2: f64,
}

/// Summary for reports.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelSummary {
    pub variant: Option<Variant>,
    pub heights: Vec<u64>,
    pub masses: Vec<f64>,
    pub weights: Vec<LevelWeights>,
    pub state_count: u64,
    pub mass_a: f64,
    pub sigma2: f64,
    pub noise: NoiseSpec,
}

impl ProcessModel {
    /// A model from explicit parts; `weights` has one entry per tower.
    pub fn new(system: TowerSystem, noise: NoiseSpec, weights: Vec<LevelWeights>) -> Result<Self> {
        noise.validate()?;
        if weights.len() != system.tower_count() {
            return Err(Error::InvalidSpec(format!(
                "{} weight profiles for {} towers",
                weights.len(),
                system.tower_count()
            )));
        }
        let mut model = ProcessModel {
            variant: None,
            system,
            noise,
            weights,
            slabs: Vec::new(),
            sigma2: 0.0,
        };
        model.sigma2 = noise.variance() * model.weight_second_moment();
        Ok(model)
    }

    /// `f = g` on a single fixed point: an i.i.d. sequence.
    pub fn iid(noise: NoiseSpec) -> Result<Self> {
        let system = TowerSystem::build(&[TowerSpec::new(1, 1.0)], false)?;
        let mut m = ProcessModel::new(system, noise, vec![LevelWeights::Constant { value: 1.0 }])?;
        m.variant = Some(Variant::IidBaseline);
        Ok(m)
    }

    pub fn variant(&self) -> Option<Variant> {
        self.variant
    }

    pub fn system(&self) -> &TowerSystem {
        &self.system
    }

    pub fn noise(&self) -> NoiseSpec {
        self.noise
    }

    pub fn weights(&self) -> &[LevelWeights] {
        &self.weights
    }

    pub fn slabs(&self) -> &[SlabSet] {
        &self.slabs
    }

    /// The slab realizing `A_k`.
    pub fn slab(&self, k: usize) -> Option<&SlabSet> {
        self.slabs.iter().find(|s| s.k == k)
    }

    pub fn weight(&self, s: TowerState) -> f64 {
        self.weights[s.tower].at(s.level)
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// True when every weight is 0 or 1, so `S_n` is lattice valued given `g`.
    pub fn has_indicator_weights(&self) -> bool {
        self.weights.iter().all(|w| match *w {
            LevelWeights::Constant { value } => value == 0.0 || value == 1.0,
            LevelWeights::Slab { below, above, .. } => {
                (below == 0.0 || below == 1.0) && (above == 0.0 || above == 1.0)
            }
        })
    }

    /// Σ_s π(s) weight(s)².
    fn weight_second_moment(&self) -> f64 {
        self.weight_moment(|w| w * w)
    }

    fn weight_moment(&self, phi: impl Fn(f64) -> f64) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(l, w)| {
                let h = self.system.height(l);
                let lm = self.system.level_mass(l);
                match *w {
                    LevelWeights::Constant { value } => lm * h as f64 * phi(value),
                    LevelWeights::Slab {
                        threshold,
                        below,
                        above,
                    } => {
                        let t = threshold.min(h);
                        lm * (t as f64 * phi(below) + (h - t) as f64 * phi(above))
                    }
                }
            })
            .sum()
    }

    /// μ(weight = 0), the mass of `A` for lattice models.
    pub fn mass_a(&self) -> f64 {
        self.weight_moment(|w| if w == 0.0 { 1.0 } else { 0.0 })
    }

    /// `weight(s) · g`.
    pub fn evaluate_f(&self, s: TowerState, g: f64) -> Result<f64> {
        self.system.check_state(s)?;
        Ok(self.weight(s) * g)
    }

    /// Var(f) = Var(g) · Σ_s π(s) weight(s)².
    pub fn variance_of_f(&self) -> f64 {
        self.sigma2
    }

    /// μ(A_k) from tower geometry.
    pub fn slab_mass(&self, k: usize) -> Option<f64> {
        let s = self.slab(k)?;
        Some(s.levels as f64 * self.system.level_mass(s.tower))
    }

    /// μ(∩_{i<n} T^{-i} A_k): starts low enough to stay inside the slab for
    /// the whole window.
    pub fn slab_intersection(&self, k: usize) -> Option<f64> {
        let s = self.slab(k)?;
        let stay = (s.levels + 1).saturating_sub(s.window);
        Some(stay as f64 * self.system.level_mass(s.tower))
    }

    /// Exact density of `f`; every tower must carry a positive constant weight.
    pub fn density_of_f(&self) -> Result<PiecewiseDensity> {
        if self.noise != NoiseSpec::TwoIntervalUniform {
            return Err(Error::VariantMismatch(
                "density of f needs two-interval noise".into(),
            ));
        }
        let mut boxes = Vec::with_capacity(2 * self.weights.len());
        for (l, w) in self.weights.iter().enumerate() {
            let d = match *w {
                LevelWeights::Constant { value } if value > 0.0 => value,
                _ => {
                    return Err(Error::VariantMismatch(format!(
                        "tower {l} has no constant positive weight, f has an atom"
                    )))
                }
            };
            let h = self.system.mass(l) / d;
            boxes.push((-d, -d / 2.0, h));
            boxes.push((d / 2.0, d, h));
        }
        Ok(PiecewiseDensity::from_boxes(&boxes))
    }

    /// One stationary window of `f` values written into `out`.
    pub fn sample_window<R: Rng + ?Sized>(&self, rng: &mut R, n: usize, out: &mut Vec<f64>) {
        out.clear();
        let mut s = self.system.sample_stationary(rng);
        for i in 0..n {
            if i > 0 {
                s = self.system.sample_step(rng, s);
            }
            let g = self.noise.sample(rng);
            out.push(self.weight(s) * g);
        }
    }

    pub fn summary(&self) -> ModelSummary {
        ModelSummary {
            variant: self.variant,
            heights: self.system.towers().iter().map(|t| t.height).collect(),
            masses: self.system.towers().iter().map(|t| t.mass).collect(),
            weights: self.weights.clone(),
            state_count: self.system.state_count(),
            mass_a: self.mass_a(),
            sigma2: self.sigma2,
            noise: self.noise,
        }
    }
}

/// Assemble `f` for a schedule.
pub fn build_counterexample(sched: &Schedule, noise: NoiseSpec) -> Result<ProcessModel> {
    noise.validate()?;
    let lattice = matches!(noise, NoiseSpec::Lattice { .. });
    let one = LevelWeights::Constant { value: 1.0 };
    let slab = |k: usize| LevelWeights::Slab {
        threshold: sched.heights[k] - sched.n[k] + 1,
        below: 0.0,
        above: 1.0,
    };
    let mut specs = Vec::new();
    let mut weights = Vec::new();
    let mut slabs = Vec::new();
    let require_aperiodic;
    match sched.variant {
        Variant::Thm1 => {
            if !lattice {
                return Err(Error::VariantMismatch("thm1 needs lattice noise".into()));
            }
            for k in 0..sched.k_count() {
                specs.push(TowerSpec::new(sched.heights[k], sched.p[k]));
                weights.push(slab(k));
                slabs.push(SlabSet {
                    k,
                    tower: k,
                    window: sched.n[k],
                    levels: sched.heights[k] - sched.n[k] + 1,
                });
            }
            if sched.remainder_mass > 0.0 {
                specs.push(TowerSpec::new(sched.remainder_height, sched.remainder_mass));
                weights.push(one);
            }
            require_aperiodic = false;
        }
        Variant::Thm3 => {
            if !lattice {
                return Err(Error::VariantMismatch("thm3 needs lattice noise".into()));
            }
            // Tower k splits into a marked half carrying A_k and an unmarked half.
            for k in 0..sched.k_count() {
                let half = sched.p[k] / 2.0;
                specs.push(TowerSpec::new(sched.heights[k], half));
                weights.push(slab(k));
                slabs.push(SlabSet {
                    k,
                    tower: specs.len() - 1,
                    window: sched.n[k],
                    levels: sched.heights[k] - sched.n[k] + 1,
                });
                specs.push(TowerSpec::new(sched.heights[k], half));
                weights.push(one);
            }
            if sched.remainder_mass > 0.0 {
                specs.push(TowerSpec::new(sched.remainder_height, sched.remainder_mass));
                weights.push(one);
            }
            require_aperiodic = true;
        }
        Variant::Thm2 => {
            if lattice {
                return Err(Error::VariantMismatch(
                    "thm2 needs two-interval noise".into(),
                ));
            }
            let c = sched
                .density
                .as_ref()
                .ok_or_else(|| Error::VariantMismatch("thm2 schedule lacks constants".into()))?;
            for k in 0..sched.k_count() {
                specs.push(TowerSpec::new(sched.heights[k], sched.p[k]));
                weights.push(LevelWeights::Constant { value: sched.d[k] });
            }
            if sched.remainder_mass > 0.0 {
                specs.push(TowerSpec::new(sched.remainder_height, sched.remainder_mass));
                weights.push(LevelWeights::Constant {
                    value: c.remainder_weight,
                });
            }
            require_aperiodic = false;
        }
        Variant::IidBaseline => {
            return Err(Error::VariantMismatch(
                "the i.i.d. baseline has no schedule; use ProcessModel::iid".into(),
            ))
        }
    }
    let system = TowerSystem::build(&specs, require_aperiodic)?;
    let mut model = ProcessModel::new(system, noise, weights)?;
    model.variant = Some(sched.variant);
    model.slabs = slabs;
    if lattice {
        let mass_a = model.mass_a();
        if !(mass_a > 0.0 && mass_a < 1.0) {
            return Err(Error::DegenerateModel { mass_a });
        }
    }
    Ok(model)
}
