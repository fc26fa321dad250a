//! Two-time observables along trajectories: the conditional density
//! autocorrelation `K(τ)`, its telegraph-reduced version `Q(τ)`, the
//! classical exclusion process that `K` approaches under strong occupation
//! measurement, and closed forms for the unconditional correlator.
//!
//! Estimators average over sites and over all time origins of a stationary
//! window; lags are whole multiples of the sampling step. Error bars come
//! from the spread of per-trajectory block values.

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{power_law_fit, Curve, PowerLawFit};
use crate::engine::{ModelKind, SampledTrajectory};
use crate::ensemble::{map_indices, Execution};
use crate::error::{invalid, Error, Result};
use crate::observables::EnsembleStatistic;
use crate::special::bessel_j;

/// Curve on the lag grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagCurve {
    pub lags: Vec<f64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n_samples: usize,
}

impl LagCurve {
    pub fn to_curve(&self) -> Result<Curve> {
        Curve::new(self.lags.clone(), self.mean.clone(), self.stderr.clone())
    }

    /// Divide by the zero-lag value, propagating only the lag-`τ` error.
    pub fn normalized(&self) -> LagCurve {
        let k0 = self.mean[0];
        LagCurve {
            lags: self.lags.clone(),
            mean: self.mean.iter().map(|v| v / k0).collect(),
            stderr: self.stderr.iter().map(|v| v / k0.abs()).collect(),
            n_samples: self.n_samples,
        }
    }

    /// Rescale the lag axis, e.g. to `ντ`.
    pub fn rescaled(&self, factor: f64) -> LagCurve {
        LagCurve {
            lags: self.lags.iter().map(|t| t * factor).collect(),
            ..self.clone()
        }
    }
}

/// Per-trajectory contribution: lag-resolved mean products and the mean of
/// `z` over the window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationBlock {
    pub products: Vec<f64>,
    pub mean_z: f64,
}

fn check_window(n_times: usize, max_lag: usize) -> Result<()> {
    if n_times == 0 {
        return Err(invalid("empty sample window"));
    }
    if max_lag >= n_times {
        return Err(invalid(format!(
            "lag {max_lag} exceeds the sample window of {n_times} points"
        )));
    }
    Ok(())
}

/// Mean of `z_l(t+k) z_l(t)` over sites and origins for `k = 0..=max_lag`.
pub fn autocorrelation_block(z: &[Vec<f64>], max_lag: usize) -> Result<CorrelationBlock> {
    check_window(z.len(), max_lag)?;
    let l = z[0].len();
    let products = (0..=max_lag)
        .map(|k| {
            let origins = z.len() - k;
            let s: f64 = (0..origins)
                .map(|t| z[t + k].iter().zip(&z[t]).map(|(a, b)| a * b).sum::<f64>())
                .sum();
            s / (origins * l) as f64
        })
        .collect();
    let mean_z = z.iter().flatten().sum::<f64>() / (z.len() * l) as f64;
    Ok(CorrelationBlock { products, mean_z })
}

/// Mean of `z_l(t+k) (-1)^{N_l(t+k) - N_l(t)} z_l(t)`.
pub fn telegraph_block(z: &[Vec<f64>], counts: &[Vec<u32>], max_lag: usize) -> Result<Vec<f64>> {
    check_window(z.len(), max_lag)?;
    if counts.len() != z.len() {
        return Err(invalid("jump counts were not recorded on the sample grid"));
    }
    let l = z[0].len();
    Ok((0..=max_lag)
        .map(|k| {
            let origins = z.len() - k;
            let s: f64 = (0..origins)
                .map(|t| {
                    (0..l)
                        .map(|x| {
                            let odd = (counts[t + k][x] - counts[t][x]) & 1 == 1;
                            let p = z[t + k][x] * z[t][x];
                            if odd {
                                -p
                            } else {
                                p
                            }
                        })
                        .sum::<f64>()
                })
                .sum();
            s / (origins * l) as f64
        })
        .collect())
}

fn combine(blocks: &[Vec<f64>], subtract: f64, dt: f64) -> LagCurve {
    let n_lag = blocks[0].len();
    let mut mean = Vec::with_capacity(n_lag);
    let mut stderr = Vec::with_capacity(n_lag);
    for k in 0..n_lag {
        let xs: Vec<f64> = blocks.iter().map(|b| b[k]).collect();
        let s = EnsembleStatistic::from_samples(&xs);
        mean.push(s.mean - subtract);
        stderr.push(s.stderr);
    }
    LagCurve {
        lags: (0..n_lag).map(|k| k as f64 * dt).collect(),
        mean,
        stderr,
        n_samples: blocks.len(),
    }
}

/// Connected `K(τ)` from per-trajectory blocks; the subtracted mean is the
/// empirical ensemble mean of `z`.
pub fn combine_autocorrelation(blocks: &[CorrelationBlock], dt: f64) -> Result<LagCurve> {
    if blocks.is_empty() {
        return Err(invalid("no trajectories"));
    }
    let zbar = blocks.iter().map(|b| b.mean_z).sum::<f64>() / blocks.len() as f64;
    let raw: Vec<Vec<f64>> = blocks.iter().map(|b| b.products.clone()).collect();
    Ok(combine(&raw, zbar * zbar, dt))
}

fn sample_step(trajs: &[SampledTrajectory]) -> Result<f64> {
    let t = &trajs.first().ok_or_else(|| invalid("no trajectories"))?.times;
    if t.len() < 2 {
        return Err(invalid("need at least two sample times"));
    }
    Ok(t[1] - t[0])
}

/// Connected `K(τ)` averaged over trajectories, sites and time origins.
pub fn density_autocorrelation(trajs: &[SampledTrajectory], max_lag: usize) -> Result<LagCurve> {
    let dt = sample_step(trajs)?;
    let blocks = trajs
        .iter()
        .map(|t| autocorrelation_block(&t.z, max_lag))
        .collect::<Result<Vec<_>>>()?;
    combine_autocorrelation(&blocks, dt)
}

/// Telegraph-reduced `Q(τ)`; not mean-subtracted. Only defined for fermion
/// counting, where the jump counts flip the occupation.
pub fn telegraph_reduced(trajs: &[SampledTrajectory], model: ModelKind, max_lag: usize) -> Result<LagCurve> {
    if model != ModelKind::FermionCounting {
        return Err(Error::ModelMismatch(
            "telegraph reduction needs fermion-counting jump records".into(),
        ));
    }
    let dt = sample_step(trajs)?;
    let blocks = trajs
        .iter()
        .map(|t| telegraph_block(&t.z, &t.jump_counts, max_lag))
        .collect::<Result<Vec<_>>>()?;
    combine_telegraph(&blocks, dt)
}

/// `Q(τ)` from per-trajectory [`telegraph_block`] outputs.
pub fn combine_telegraph(blocks: &[Vec<f64>], dt: f64) -> Result<LagCurve> {
    if blocks.is_empty() {
        return Err(invalid("no trajectories"));
    }
    Ok(combine(blocks, 0.0, dt))
}

/// Unconditional `C_{0,l}(t) = ¼ e^{-2γ|t|} J_l(2J|t|)²` under fermion
/// counting at half filling. Bessel values use normalized backward
/// recurrence.
pub fn unconditional_c0_fc(l: i64, t: f64, j: f64, gamma: f64) -> f64 {
    let jl = bessel_j(l, 2.0 * j * t.abs());
    0.25 * (-2.0 * gamma * t.abs()).exp() * jl * jl
}

/// Diffusive large-distance form `n(1-n) e^{-l²/(4ν|t|)} / √(4πν|t|)`
/// under occupation measurement, `ν = 2nJ²/γ`.
pub fn unconditional_c0_om(l: f64, t: f64, n: f64, j: f64, gamma: f64) -> Result<f64> {
    if t == 0.0 {
        return Err(Error::Domain("the diffusive form is singular at t = 0".into()));
    }
    let nu = 2.0 * n * j * j / gamma;
    let d = 4.0 * nu * t.abs();
    Ok(n * (1.0 - n) * (-l * l / d).exp() / (PI * d).sqrt())
}

/// Classical configuration of the exclusion process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsepState {
    pub occupations: Vec<bool>,
    pub time: f64,
}

impl SsepState {
    pub fn particle_number(&self) -> usize {
        self.occupations.iter().filter(|&&o| o).count()
    }

    pub fn z(&self) -> Vec<f64> {
        self.occupations.iter().map(|&o| if o { 1.0 } else { -1.0 }).collect()
    }
}

/// Symmetric exclusion process on a ring. Each particle attempts a hop to a
/// random neighbour at `rate`; attempts onto occupied sites are dropped but
/// still consume the event.
#[derive(Debug, Clone)]
pub struct Ssep {
    state: SsepState,
    positions: Vec<usize>,
    rate: f64,
    next_event: f64,
}

impl Ssep {
    pub fn new<R: Rng>(occupations: Vec<bool>, rate: f64, rng: &mut R) -> Result<Self> {
        if !(rate > 0.0) {
            return Err(invalid(format!("exclusion-process rate must be positive, got {rate}")));
        }
        if occupations.is_empty() {
            return Err(invalid("empty lattice"));
        }
        let positions = (0..occupations.len()).filter(|&i| occupations[i]).collect();
        let mut s = Self {
            state: SsepState { occupations, time: 0.0 },
            positions,
            rate,
            next_event: 0.0,
        };
        s.next_event = s.draw_wait(rng);
        Ok(s)
    }

    /// `n` particles placed uniformly at random.
    pub fn random<R: Rng>(l: usize, n: usize, rate: f64, rng: &mut R) -> Result<Self> {
        if n > l {
            return Err(invalid(format!("{n} particles do not fit on {l} sites")));
        }
        let mut occ = vec![false; l];
        for i in rand::seq::index::sample(rng, l, n) {
            occ[i] = true;
        }
        Self::new(occ, rate, rng)
    }

    fn draw_wait<R: Rng>(&self, rng: &mut R) -> f64 {
        let total = self.rate * self.positions.len() as f64;
        if total == 0.0 {
            return f64::INFINITY;
        }
        let u: f64 = rng.random();
        self.state.time + crate::engine::waiting_time(u, total)
    }

    pub fn state(&self) -> &SsepState {
        &self.state
    }

    pub fn advance_to<R: Rng>(&mut self, t: f64, rng: &mut R) {
        let l = self.state.occupations.len();
        while self.next_event <= t {
            self.state.time = self.next_event;
            let p = rng.random_range(0..self.positions.len());
            let from = self.positions[p];
            let to = if rng.random::<bool>() { (from + 1) % l } else { (from + l - 1) % l };
            if !self.state.occupations[to] {
                self.state.occupations[from] = false;
                self.state.occupations[to] = true;
                self.positions[p] = to;
            }
            self.next_event = self.draw_wait(rng);
        }
        self.state.time = t;
    }
}

/// Exclusion-process states on the sample grid `times` (non-decreasing,
/// starting at or after zero) from a uniformly random start.
pub fn ssep_simulate<R: Rng>(l: usize, n: usize, rate: f64, times: &[f64], rng: &mut R) -> Result<Vec<SsepState>> {
    let mut p = Ssep::random(l, n, rate, rng)?;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        if t < p.state.time {
            return Err(invalid("sample times must be non-decreasing"));
        }
        p.advance_to(t, rng);
        out.push(p.state.clone());
    }
    Ok(out)
}

/// `K(τ)` of the exclusion process over `n_real` independent realizations
/// (realization `i` seeded `seed ^ i`), sampled every `dt` up to `max_lag`
/// steps with `window` sample points per realization.
#[allow(clippy::too_many_arguments)]
pub fn ssep_autocorrelation(
    l: usize,
    n: usize,
    rate: f64,
    dt: f64,
    window: usize,
    max_lag: usize,
    n_real: u64,
    seed: u64,
    exec: Execution,
) -> Result<LagCurve> {
    check_window(window, max_lag)?;
    let times: Vec<f64> = (0..window).map(|k| k as f64 * dt).collect();
    let blocks = map_indices(0, n_real, exec, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ i);
        let states = ssep_simulate(l, n, rate, &times, &mut rng)?;
        let z: Vec<Vec<f64>> = states.iter().map(SsepState::z).collect();
        autocorrelation_block(&z, max_lag)
    })?;
    combine_autocorrelation(&blocks, dt)
}

/// Exact connected `K(t)` of the exclusion process on a ring of `l` sites
/// with `n` particles in the stationary (uniform) ensemble. By duality the
/// two-point function evolves like a single walker hopping to each
/// neighbour at `rate/2`.
pub fn ssep_exact_autocorrelation(l: usize, n: usize, rate: f64, t: f64) -> f64 {
    let lf = l as f64;
    let rho = n as f64 / lf;
    let p0 = (0..l)
        .map(|k| (-rate * (1.0 - (2.0 * PI * k as f64 / lf).cos()) * t.abs()).exp())
        .sum::<f64>()
        / lf;
    let pair = if l > 1 { (n as f64 - 1.0) / (lf - 1.0) } else { 0.0 };
    4.0 * (rho * p0 + rho * (1.0 - p0) * pair - rho * rho)
}

/// Decay exponent `α` of `K ∼ τ^{-α}` over `lo ≤ τ ≤ hi`.
pub fn ssep_autocorrelation_fit(k: &LagCurve, lo: f64, hi: f64) -> Result<PowerLawFit> {
    let mut f = power_law_fit(&k.to_curve()?, lo, hi)?;
    f.exponent = -f.exponent;
    Ok(f)
}
