use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::density::SingleParticleDensityMatrix;
use super::jumps::{select_fc, select_om, total_rate, waiting_time};
use super::propagator::Propagator;
use super::slater::SlaterEngine;
use super::{InitialState, JumpEvent, JumpKind, ModelKind, SimParams};
use crate::error::{Error, Result};

/// Common interface of the Gaussian engines and the Fock-space oracle.
pub trait Engine {
    fn size(&self) -> usize;
    fn time(&self) -> f64;
    /// Free evolution for a duration `tau ≥ 0`.
    fn advance(&mut self, tau: f64) -> Result<()>;
    fn occupation(&self, site: usize) -> f64;
    fn occupations(&self) -> Vec<f64>;
    /// Particle number as tracked by the engine (exact integer).
    fn particle_number(&self) -> usize;
    /// Apply a jump and return its Born weight.
    fn apply_jump(&mut self, kind: JumpKind, site: usize) -> Result<f64>;
    fn density_matrix(&self) -> SingleParticleDensityMatrix;
    /// `(purity, hermiticity, |trace - N|)` deviations of the current state.
    fn invariant_errors(&self) -> (f64, f64, f64);
}

/// Engine propagating the full single-particle density matrix.
#[derive(Debug, Clone)]
pub struct DensityEngine {
    pub state: SingleParticleDensityMatrix,
    prop: Propagator,
    n: usize,
}

impl DensityEngine {
    pub fn new(state: SingleParticleDensityMatrix, j: f64) -> Self {
        let n = state.trace().round() as usize;
        let prop = Propagator::new(state.len(), j);
        Self { state, prop, n }
    }
}

impl Engine for DensityEngine {
    fn size(&self) -> usize {
        self.state.len()
    }
    fn time(&self) -> f64 {
        self.state.time
    }
    fn advance(&mut self, tau: f64) -> Result<()> {
        self.state.evolve(&mut self.prop, tau)
    }
    fn occupation(&self, site: usize) -> f64 {
        self.state.occupation(site)
    }
    fn occupations(&self) -> Vec<f64> {
        self.state.diagonal()
    }
    fn particle_number(&self) -> usize {
        self.n
    }
    fn apply_jump(&mut self, kind: JumpKind, site: usize) -> Result<f64> {
        let w = self.state.apply_jump(kind, site)?;
        self.state.purify();
        match kind {
            JumpKind::Loss => self.n -= 1,
            JumpKind::Gain => self.n += 1,
            JumpKind::Occupation => {}
        }
        Ok(w)
    }
    fn density_matrix(&self) -> SingleParticleDensityMatrix {
        self.state.clone()
    }
    fn invariant_errors(&self) -> (f64, f64, f64) {
        (
            self.state.purity_error(),
            self.state.hermiticity_error(),
            (self.state.trace() - self.n as f64).abs(),
        )
    }
}

impl Engine for SlaterEngine {
    fn size(&self) -> usize {
        self.len()
    }
    fn time(&self) -> f64 {
        SlaterEngine::time(self)
    }
    fn advance(&mut self, tau: f64) -> Result<()> {
        SlaterEngine::advance(self, tau)
    }
    fn occupation(&self, site: usize) -> f64 {
        SlaterEngine::occupation(self, site)
    }
    fn occupations(&self) -> Vec<f64> {
        SlaterEngine::occupations(self)
    }
    fn particle_number(&self) -> usize {
        self.n_orbitals()
    }
    fn apply_jump(&mut self, kind: JumpKind, site: usize) -> Result<f64> {
        SlaterEngine::apply_jump(self, kind, site)
    }
    fn density_matrix(&self) -> SingleParticleDensityMatrix {
        SlaterEngine::density_matrix(self)
    }
    /// The orthonormality defect bounds `|D² - D|`; `D = ΦΦ†` is Hermitian and
    /// has trace `N` up to that same defect.
    fn invariant_errors(&self) -> (f64, f64, f64) {
        let e = self.orthonormality_error();
        (e, 0.0, e * self.n_orbitals() as f64)
    }
}

/// Which Gaussian engine to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum EngineKind {
    /// Full density matrix with FFT propagation, `O(L² log L)` per jump.
    Density,
    /// Orbital representation, `O(NL)` per counting jump.
    #[default]
    Slater,
}

/// Drives an engine through jumps with the documented random-number contract.
///
/// The waiting time to the next jump is drawn as soon as the previous jump
/// has happened, so stopping at sample times never consumes extra draws.
pub struct Stepper<'a, E: Engine + ?Sized> {
    pub engine: &'a mut E,
    rng: ChaCha8Rng,
    model: ModelKind,
    gamma: f64,
    pending: Option<f64>,
    pub jump_counts: Vec<u32>,
    pub n_jumps: u64,
    pub n_gain: u64,
    pub n_loss: u64,
    n0: usize,
    check_every: usize,
    tolerance: f64,
    pub max_purity_error: f64,
    pub max_trace_error: f64,
    /// Born weight of the most recent jump.
    pub last_weight: f64,
    pub record: Option<Vec<JumpEvent>>,
}

impl<'a, E: Engine + ?Sized> Stepper<'a, E> {
    pub fn new(engine: &'a mut E, model: ModelKind, gamma: f64, seed: u64) -> Self {
        let l = engine.size();
        let n0 = engine.particle_number();
        Self {
            engine,
            rng: ChaCha8Rng::seed_from_u64(seed),
            model,
            gamma,
            pending: None,
            jump_counts: vec![0; l],
            n_jumps: 0,
            n_gain: 0,
            n_loss: 0,
            n0,
            check_every: 100,
            tolerance: 1e-8,
            max_purity_error: 0.0,
            max_trace_error: 0.0,
            last_weight: 0.0,
            record: None,
        }
    }

    /// Check invariants every `k` jumps (0 disables) against `tolerance`.
    pub fn with_checks(mut self, k: usize, tolerance: f64) -> Self {
        self.check_every = k;
        self.tolerance = tolerance;
        self
    }

    pub fn recording(mut self) -> Self {
        self.record = Some(Vec::new());
        self
    }

    /// Continue the random stream from an existing generator.
    pub fn with_rng(mut self, rng: ChaCha8Rng) -> Self {
        self.rng = rng;
        self
    }

    fn next_jump_time(&mut self) -> f64 {
        if let Some(t) = self.pending {
            return t;
        }
        let rate = total_rate(
            self.model,
            self.gamma,
            self.engine.size(),
            self.engine.particle_number(),
        );
        let t = self.engine.time() + waiting_time(self.rng.random(), rate);
        self.pending = Some(t);
        t
    }

    /// Perform the next jump unconditionally.
    pub fn step(&mut self) -> Result<Option<JumpEvent>> {
        let t = self.next_jump_time();
        if t.is_infinite() {
            return Ok(None);
        }
        let now = self.engine.time();
        self.engine.advance(t - now)?;
        let u = self.rng.random::<f64>();
        let l = self.engine.size();
        let (kind, site) = match self.model {
            ModelKind::FermionCounting => {
                let engine = &*self.engine;
                select_fc(u, l, |s| engine.occupation(s))
            }
            ModelKind::OccupationMeasurement => {
                (JumpKind::Occupation, select_om(u, &self.engine.occupations())?)
            }
        };
        self.last_weight = self.engine.apply_jump(kind, site)?;
        self.pending = None;
        self.jump_counts[site] += 1;
        self.n_jumps += 1;
        match kind {
            JumpKind::Gain => self.n_gain += 1,
            JumpKind::Loss => self.n_loss += 1,
            JumpKind::Occupation => {}
        }
        let event = JumpEvent { time: t, site, kind };
        if let Some(r) = self.record.as_mut() {
            r.push(event);
        }
        if self.check_every > 0 && self.n_jumps % self.check_every as u64 == 0 {
            self.check()?;
        }
        Ok(Some(event))
    }

    /// Verify purity, hermiticity and particle bookkeeping now.
    pub fn check(&mut self) -> Result<()> {
        let (purity, herm, trace) = self.engine.invariant_errors();
        let expected = self.n0 as i64 + self.n_gain as i64 - self.n_loss as i64;
        let bookkeeping = (self.engine.particle_number() as i64 - expected).abs() as f64;
        self.max_purity_error = self.max_purity_error.max(purity);
        self.max_trace_error = self.max_trace_error.max(trace + bookkeeping);
        if purity > self.tolerance || herm > 1e-10 || trace + bookkeeping > self.tolerance {
            return Err(Error::Inconsistent(format!(
                "invariants violated after {} jumps: |D²-D| = {purity:e}, |D-D†| = {herm:e}, trace drift = {:e}",
                self.n_jumps,
                trace + bookkeeping
            )));
        }
        Ok(())
    }

    /// Evolve to time `t`, performing every jump scheduled before it.
    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        loop {
            let tj = self.next_jump_time();
            if tj > t {
                let now = self.engine.time();
                if t > now {
                    self.engine.advance(t - now)?;
                }
                return Ok(());
            }
            self.step()?;
        }
    }
}

/// Sampling plan of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSchedule {
    pub times: Vec<f64>,
    /// Record `z_l = 2 d_ll - 1` at every sample.
    pub record_z: bool,
    /// Record cumulative per-site jump counts at every sample.
    pub record_counts: bool,
    /// Keep the full jump record.
    pub record_jumps: bool,
    /// Invariant check cadence in jumps (0 disables).
    pub check_every: usize,
}

impl SampleSchedule {
    pub fn from_params(p: &SimParams) -> Self {
        Self {
            times: p.sample_times(),
            record_z: true,
            record_counts: true,
            record_jumps: false,
            check_every: 100,
        }
    }
}

/// Output of one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledTrajectory {
    pub index: u64,
    pub seed: u64,
    pub times: Vec<f64>,
    /// `z[s][l]` at sample `s`.
    pub z: Vec<Vec<f64>>,
    /// `jump_counts[s][l]`, cumulative since `t = 0`.
    pub jump_counts: Vec<Vec<u32>>,
    pub jumps: Vec<JumpEvent>,
    pub n_jumps: u64,
    pub final_time: f64,
    pub max_purity_error: f64,
    pub max_trace_error: f64,
}

/// Alias kept for readability at call sites that only need the record.
pub type TrajectoryRecord = SampledTrajectory;

/// Run `engine` through the schedule, calling `on_sample(sample_index, engine)`
/// at every sample time after the built-in recording.
pub fn run_trajectory<E, F>(
    engine: &mut E,
    model: ModelKind,
    gamma: f64,
    seed: u64,
    schedule: &SampleSchedule,
    mut on_sample: F,
) -> Result<SampledTrajectory>
where
    E: Engine + ?Sized,
    F: FnMut(usize, &E) -> Result<()>,
{
    if schedule.times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("sample times must be sorted".into()));
    }
    let mut stepper = Stepper::new(engine, model, gamma, seed).with_checks(schedule.check_every, 1e-8);
    if schedule.record_jumps {
        stepper = stepper.recording();
    }
    let mut z = Vec::new();
    let mut counts = Vec::new();
    for (s, &t) in schedule.times.iter().enumerate() {
        stepper.advance_to(t)?;
        if schedule.record_z {
            z.push(stepper.engine.occupations().iter().map(|&d| 2.0 * d - 1.0).collect());
        }
        if schedule.record_counts {
            counts.push(stepper.jump_counts.clone());
        }
        on_sample(s, &*stepper.engine)?;
    }
    if schedule.check_every > 0 {
        stepper.check()?;
    }
    Ok(SampledTrajectory {
        index: 0,
        seed,
        times: schedule.times.clone(),
        z,
        jump_counts: counts,
        jumps: stepper.record.take().unwrap_or_default(),
        n_jumps: stepper.n_jumps,
        final_time: stepper.engine.time(),
        max_purity_error: stepper.max_purity_error,
        max_trace_error: stepper.max_trace_error,
    })
}

/// Initial density matrix of trajectory `index`. Random classical starts draw
/// from a generator seeded independently of the jump stream.
pub fn initial_state(params: &SimParams, index: u64) -> Result<SingleParticleDensityMatrix> {
    match params.initial {
        InitialState::Neel => SingleParticleDensityMatrix::neel(params.l),
        InitialState::RandomClassical => {
            let seed = params.trajectory_seed(index).rotate_left(32) ^ 0x9e37_79b9_7f4a_7c15;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            SingleParticleDensityMatrix::random_classical(params.l, params.l / 2, &mut rng)
        }
    }
}

/// Run trajectory `index` of the ensemble described by `params`.
pub fn simulate_trajectory<F>(
    params: &SimParams,
    index: u64,
    kind: EngineKind,
    schedule: &SampleSchedule,
    mut on_sample: F,
) -> Result<SampledTrajectory>
where
    F: FnMut(usize, &dyn Engine) -> Result<()>,
{
    params.validate()?;
    let seed = params.trajectory_seed(index);
    let d0 = initial_state(params, index)?;
    let wrap = |e: Error, time: f64| Error::Trajectory {
        index,
        seed,
        time,
        source: Box::new(e),
    };
    let mut traj = match kind {
        EngineKind::Density => {
            let mut engine = DensityEngine::new(d0, params.j);
            run_trajectory(&mut engine, params.model, params.gamma, seed, schedule, |s, e| {
                on_sample(s, e)
            })
            .map_err(|e| wrap(e, engine.time()))?
        }
        EngineKind::Slater => {
            let mut engine = SlaterEngine::from_classical_density(&d0, params.j)?;
            let res = run_trajectory(&mut engine, params.model, params.gamma, seed, schedule, |s, e| {
                on_sample(s, e)
            });
            res.map_err(|e| wrap(e, engine.time()))?
        }
    };
    traj.index = index;
    Ok(traj)
}
