//! Quantum-jump trajectories of monitored free fermions on a periodic ring.
//!
//! The Hamiltonian is `H = -J Σ_l (c†_l c_{l+1} + h.c.)` with periodic
//! boundaries. Two monitoring protocols are supported:
//!
//! * fermion counting: loss `√(γ/2) c_l` and gain `√(γ/2) c†_l` on every site;
//! * occupation measurement: `√γ n_l` on every site.
//!
//! # Why there is no norm tracking
//!
//! In the quantum-jump unraveling used here, clicks on channel `L` arrive at
//! rate `2⟨L†L⟩` and the no-jump evolution is generated by
//! `H_eff = H - i Σ L†L`. For fermion counting
//! `Σ_l (γ/2)(c†_l c_l + c_l c†_l) = γL/2`, and for occupation measurement
//! `Σ_l γ n_l² = γN`, a constant on each particle-number sector. In both cases
//! `Σ L†L` is proportional to the identity on the sector the state lives in,
//! so `e^{-iH_eff t}` is the unitary `e^{-iHt}` times a scalar decay. The
//! normalized state between jumps therefore evolves unitarily, and the waiting
//! time to the next jump is exactly exponential with total rate `γL`
//! (counting) or `2γN` (occupation), i.e. `γ` per site at half filling.
//! A higher-order integrator is not needed.
//!
//! # Random-number contract
//!
//! Trajectory `i` of an ensemble with seed `s` uses `ChaCha8Rng` seeded with
//! `s ^ i`. For every event exactly two uniforms are drawn in this order: one
//! for the waiting time, then one for the jump outcome (see [`jumps`]). Every
//! engine, including the Fock-space oracle, consumes the stream the same way,
//! so trajectories can be compared jump by jump.
//!
//! # Conventions
//!
//! Sites are indexed `0..L`. The Néel state occupies the even sites
//! `0, 2, 4, …`; any global translation is equivalent after averaging over
//! positions. Time is measured in units of `1/J` when `J = 1`.

mod density;
mod jumps;
mod propagator;
mod slater;
mod trajectory;

use serde::{Deserialize, Serialize};

pub use density::SingleParticleDensityMatrix;
pub use jumps::{select_fc, select_jump, select_om, total_rate, waiting_time, EPS_JUMP};
pub use propagator::{dense_propagator, dispersion, Propagator};
pub use slater::SlaterEngine;
pub use trajectory::{
    initial_state, run_trajectory, simulate_trajectory, DensityEngine, Engine, EngineKind,
    SampleSchedule, SampledTrajectory, Stepper, TrajectoryRecord,
};

/// Which measurement protocol monitors the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    FermionCounting,
    OccupationMeasurement,
}

impl ModelKind {
    /// Jump kinds this model can produce.
    pub fn jump_kinds(self) -> &'static [JumpKind] {
        match self {
            ModelKind::FermionCounting => &[JumpKind::Loss, JumpKind::Gain],
            ModelKind::OccupationMeasurement => &[JumpKind::Occupation],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum JumpKind {
    Loss,
    Gain,
    Occupation,
}

/// One click of the detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub time: f64,
    pub site: usize,
    pub kind: JumpKind,
}

/// Initial condition of each trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum InitialState {
    #[default]
    Neel,
    /// Uniformly random classical configuration with `L/2` particles.
    RandomClassical,
}

/// Complete definition of a trajectory ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub l: usize,
    #[serde(default = "one")]
    pub j: f64,
    pub gamma: f64,
    pub model: ModelKind,
    pub seed: u64,
    pub t_burn: f64,
    pub t_sample: f64,
    pub dt_sample: f64,
    pub n_traj: usize,
    #[serde(default)]
    pub initial: InitialState,
}

fn one() -> f64 {
    1.0
}

impl SimParams {
    /// Parameters with the default schedule: burn-in `max(10/γ, 10L/J)` and
    /// snapshots every `1/γ`.
    pub fn new(l: usize, gamma: f64, model: ModelKind, seed: u64) -> Self {
        let j = 1.0;
        Self {
            l,
            j,
            gamma,
            model,
            seed,
            t_burn: default_burn_in(l, j, gamma),
            t_sample: 0.0,
            dt_sample: 1.0 / gamma,
            n_traj: 1,
            initial: InitialState::Neel,
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        use crate::error::invalid;
        if self.l < 2 || self.l % 2 != 0 {
            return Err(invalid(format!("L must be even and at least 2, got {}", self.l)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(invalid(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.j >= 0.0 && self.j.is_finite()) {
            return Err(invalid(format!("J must be non-negative, got {}", self.j)));
        }
        if !(self.dt_sample > 0.0) {
            return Err(invalid(format!("dt_sample must be positive, got {}", self.dt_sample)));
        }
        if !(self.t_burn >= 0.0 && self.t_sample >= 0.0) {
            return Err(invalid("t_burn and t_sample must be non-negative"));
        }
        Ok(())
    }

    /// Seed of trajectory `index`.
    pub fn trajectory_seed(&self, index: u64) -> u64 {
        self.seed ^ index
    }

    /// Sample times `t_burn, t_burn + dt, …, t_burn + t_sample`.
    pub fn sample_times(&self) -> Vec<f64> {
        let n = (self.t_sample / self.dt_sample + 1e-9).floor() as usize;
        (0..=n).map(|i| self.t_burn + i as f64 * self.dt_sample).collect()
    }
}

/// Conservative burn-in `max(10/γ, 10 L / J)`.
pub fn default_burn_in(l: usize, j: f64, gamma: f64) -> f64 {
    let ballistic = if j > 0.0 { 10.0 * l as f64 / j } else { 0.0 };
    (10.0 / gamma).max(ballistic)
}
