use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use monfer::engine::{default_burn_in, EngineKind, InitialState, ModelKind, SimParams};
use monfer::experiment::{cross_ratio_scan_layouts, fixed_cross_ratio_layouts, MeasurementPlan};
use monfer::observables::{build_ell_grid, SegmentLayout};
use serde::{Deserialize, Serialize};

/// Observables a run can emit; each becomes one CSV file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// `C_l` for `l = 0..=L/2`.
    Correlation,
    /// `S_ℓ` on the interval grid, plus the effective central charge.
    Entropy,
    /// `I₂` and `I₃` for every layout.
    Layouts,
    /// Connected density autocorrelation `K(τ)`.
    K,
    /// Telegraph-reduced `Q(τ)`, fermion counting only.
    Q,
}

/// Trajectory ensemble; unset schedule fields take the protocol defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub l: usize,
    pub gamma: f64,
    pub model: ModelKind,
    pub n_traj: usize,
    #[serde(default)]
    pub j: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Burn-in; defaults to `max(10/γ, 10L/J)`.
    #[serde(default)]
    pub t_burn: Option<f64>,
    #[serde(default)]
    pub t_sample: f64,
    /// Sample spacing; defaults to `1/γ`.
    #[serde(default)]
    pub dt_sample: Option<f64>,
    #[serde(default)]
    pub initial: InitialState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum LayoutSpec {
    /// `A = C = ℓ` with `ℓ_B` chosen so the cross ratio is `x`.
    FixedCrossRatio { ells: Vec<usize>, x: f64 },
    /// `A = C = ℓ` scanning `ℓ_B`.
    Scan { ell: usize, ells_b: Vec<usize> },
    Explicit { ell_a: usize, ell_b: usize, ell_c: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementConfig {
    /// Points of the logarithmic interval grid.
    #[serde(default = "default_n_ell")]
    pub n_ell: usize,
    /// Explicit interval sizes, overriding `n_ell`.
    #[serde(default)]
    pub ell_grid: Option<Vec<usize>>,
    #[serde(default = "default_coverage")]
    pub coverage: usize,
    #[serde(default)]
    pub layouts: Vec<LayoutSpec>,
    /// Largest lag of `K` and `Q`, in sample steps.
    #[serde(default = "default_max_lag")]
    pub max_lag: usize,
}

fn default_n_ell() -> usize {
    66
}
fn default_coverage() -> usize {
    4
}
fn default_max_lag() -> usize {
    20
}
fn default_checkpoint_every() -> usize {
    16
}

impl Default for MeasurementConfig {
    fn default() -> Self {
        Self {
            n_ell: default_n_ell(),
            ell_grid: None,
            coverage: default_coverage(),
            layouts: Vec::new(),
            max_lag: default_max_lag(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub params: ParamsConfig,
    #[serde(default)]
    pub engine: EngineKind,
    pub observables: Vec<Observable>,
    #[serde(default)]
    pub measurement: MeasurementConfig,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default = "default_checkpoint_every")]
    pub checkpoint_every: usize,
}

/// The parts of a configuration that determine the numbers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub params: SimParams,
    pub engine: EngineKind,
    pub observables: Vec<Observable>,
    pub plan: MeasurementPlan,
    /// `Some` when `K` or `Q` is requested.
    pub max_lag: Option<usize>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn wants(&self, o: Observable) -> bool {
        self.observables.contains(&o)
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let p = &self.params;
        let j = p.j.unwrap_or(1.0);
        let params = SimParams {
            l: p.l,
            j,
            gamma: p.gamma,
            model: p.model,
            seed: p.seed,
            t_burn: p.t_burn.unwrap_or_else(|| default_burn_in(p.l, j, p.gamma)),
            t_sample: p.t_sample,
            dt_sample: p.dt_sample.unwrap_or(1.0 / p.gamma),
            n_traj: p.n_traj,
            initial: p.initial,
        };
        params.validate()?;
        if params.n_traj == 0 {
            bail!("n_traj must be positive");
        }
        if self.observables.is_empty() {
            bail!("no observables requested");
        }
        if self.checkpoint_every == 0 {
            bail!("checkpoint_every must be positive");
        }
        let m = &self.measurement;
        let ell_grid = if self.wants(Observable::Entropy) {
            match &m.ell_grid {
                Some(g) => g.clone(),
                None => build_ell_grid(params.l, m.n_ell)?,
            }
        } else {
            Vec::new()
        };
        let mut layouts: Vec<SegmentLayout> = Vec::new();
        if self.wants(Observable::Layouts) {
            for spec in &m.layouts {
                match spec {
                    LayoutSpec::FixedCrossRatio { ells, x } => {
                        layouts.extend(fixed_cross_ratio_layouts(params.l, ells, *x)?)
                    }
                    LayoutSpec::Scan { ell, ells_b } => layouts.extend(cross_ratio_scan_layouts(params.l, *ell, ells_b)?),
                    LayoutSpec::Explicit { ell_a, ell_b, ell_c } => {
                        layouts.push(SegmentLayout::new(*ell_a, *ell_b, *ell_c, 0, params.l)?)
                    }
                }
            }
            if layouts.is_empty() {
                bail!("layouts requested but none configured");
            }
        }
        let plan = MeasurementPlan {
            correlations: self.wants(Observable::Correlation),
            ell_grid,
            layouts,
            coverage: m.coverage,
        };
        plan.validate(params.l)?;
        if self.wants(Observable::Q) && params.model != ModelKind::FermionCounting {
            bail!("Q(τ) needs fermion-counting jump records");
        }
        let max_lag = (self.wants(Observable::K) || self.wants(Observable::Q)).then_some(m.max_lag);
        if let Some(lag) = max_lag {
            let n = params.sample_times().len();
            if lag >= n {
                bail!("max_lag {lag} needs more than the {n} sample times of the schedule");
            }
        }
        if self.wants(Observable::Correlation) || self.wants(Observable::Entropy) || self.wants(Observable::Layouts) {
            if params.sample_times().is_empty() {
                bail!("empty sampling schedule");
            }
        }
        let mut observables = self.observables.clone();
        observables.sort_by_key(|o| *o as u8);
        observables.dedup();
        Ok(Resolved {
            params,
            engine: self.engine,
            observables,
            plan,
            max_lag,
        })
    }
}
