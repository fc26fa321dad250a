//! Steady-state and two-time ensembles: run trajectories, reduce each one to
//! a block of time-averaged observables, and combine blocks into ensemble
//! curves.

use serde::{Deserialize, Serialize};

use crate::engine::{simulate_trajectory, EngineKind, ModelKind, SampleSchedule, SampledTrajectory, SimParams};
use crate::ensemble::{map_indices, Execution};
use crate::error::{invalid, Error, Result};
use crate::observables::{
    block_statistics, build_ell_grid, chord_length, correlation_profile, cross_ratio_pair, i2_from_entropies,
    i3_from_entropies, interval_entropy, layout_entropies, EnsembleStatistic, SegmentLayout,
};
use crate::temporal::{
    autocorrelation_block, combine_autocorrelation, combine_telegraph, density_autocorrelation, telegraph_block,
    telegraph_reduced, CorrelationBlock, LagCurve,
};

/// What to measure at every snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementPlan {
    /// Position-averaged correlation profile `C_l`, `l = 0..=L/2`.
    pub correlations: bool,
    /// Interval sizes for `S_ℓ`.
    pub ell_grid: Vec<usize>,
    /// Layouts for `I₂` and `I₃` (their `origin` is ignored).
    pub layouts: Vec<SegmentLayout>,
    /// How many times the sampled copies of a region cover the ring: a region
    /// of `s` sites is placed at `min(L, ⌈coverage·L/s⌉)` equally spaced
    /// origins, so small regions are averaged over every position while
    /// large ones stay affordable.
    pub coverage: usize,
}

impl MeasurementPlan {
    /// Correlations and `S_ℓ` on the default logarithmic grid.
    pub fn standard(l: usize, n_ell: usize) -> Result<Self> {
        Ok(Self {
            correlations: true,
            ell_grid: build_ell_grid(l, n_ell)?,
            layouts: Vec::new(),
            coverage: 4,
        })
    }

    pub fn validate(&self, l: usize) -> Result<()> {
        if self.coverage == 0 {
            return Err(invalid("coverage must be at least 1"));
        }
        if let Some(&e) = self.ell_grid.iter().find(|&&e| e == 0 || e >= l) {
            return Err(invalid(format!("interval size {e} invalid for L = {l}")));
        }
        for lay in &self.layouts {
            if lay.l != l {
                return Err(invalid("layout built for a different L"));
            }
            lay.validate()?;
        }
        Ok(())
    }

    /// Origins used for a region spanning `size` sites.
    pub fn origins(&self, size: usize, l: usize) -> Vec<usize> {
        let n = (self.coverage * l).div_ceil(size.max(1)).clamp(1, l);
        (0..n).map(|k| k * l / n).collect()
    }
}

/// Relative cross-ratio mismatch tolerated by [`fixed_cross_ratio_layouts`].
pub const CROSS_RATIO_TOLERANCE: f64 = 0.05;

/// `A = C = ℓ` layouts with `ℓ_B` chosen per `ℓ` to bring the chord cross
/// ratio closest to `x`. On a ring the chord cross ratio cannot drop below
/// `sin²(πℓ/L)`, so sizes that miss `x` by more than 5% are rejected.
pub fn fixed_cross_ratio_layouts(l: usize, ells: &[usize], x: f64) -> Result<Vec<SegmentLayout>> {
    ells.iter()
        .map(|&ell| {
            let mut best: Option<(f64, SegmentLayout)> = None;
            for b in 1..l.saturating_sub(2 * ell) {
                let lay = SegmentLayout::new(ell, b, ell, 0, l)?;
                let (xv, _) = cross_ratio_pair(&lay)?;
                let d = (xv - x).abs();
                if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                    best = Some((d, lay));
                }
            }
            match best {
                Some((d, lay)) if d <= CROSS_RATIO_TOLERANCE * x => Ok(lay),
                Some((d, _)) => Err(Error::Domain(format!(
                    "ℓ = {ell} on L = {l} misses cross ratio {x} by {d:.3e}"
                ))),
                None => Err(invalid(format!("no room for a layout with ℓ = {ell} on L = {l}"))),
            }
        })
        .collect()
}

/// `A = C = ℓ` layouts scanning `ℓ_B` over `ells_b`.
pub fn cross_ratio_scan_layouts(l: usize, ell: usize, ells_b: &[usize]) -> Result<Vec<SegmentLayout>> {
    ells_b.iter().map(|&b| SegmentLayout::new(ell, b, ell, 0, l)).collect()
}

/// Time-averaged observables of one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryBlock {
    pub index: u64,
    pub seed: u64,
    pub n_snapshots: usize,
    pub correlation: Vec<f64>,
    pub entropy: Vec<f64>,
    pub layouts: Vec<[f64; 7]>,
    pub filling: f64,
    pub n_jumps: u64,
    pub max_purity_error: f64,
}

fn snapshot(
    d: &crate::engine::SingleParticleDensityMatrix,
    plan: &MeasurementPlan,
    block: &mut TrajectoryBlock,
) -> Result<()> {
    let l = d.len();
    if plan.correlations {
        for (a, c) in block.correlation.iter_mut().zip(correlation_profile(d)) {
            *a += c;
        }
    }
    for (a, &ell) in block.entropy.iter_mut().zip(&plan.ell_grid) {
        let origins = plan.origins(ell, l);
        let w = 1.0 / origins.len() as f64;
        for o in origins {
            *a += w * interval_entropy(d, o, ell)?;
        }
    }
    for (a, lay) in block.layouts.iter_mut().zip(&plan.layouts) {
        let origins = plan.origins(lay.ell_a + lay.ell_b + lay.ell_c, l);
        let w = 1.0 / origins.len() as f64;
        for o in origins {
            let s = layout_entropies(d, &lay.at(o))?;
            for (x, y) in a.iter_mut().zip(s) {
                *x += w * y;
            }
        }
    }
    block.filling += d.trace() / l as f64;
    block.n_snapshots += 1;
    Ok(())
}

/// Run trajectory `index` and reduce it to a block.
pub fn run_block(params: &SimParams, kind: EngineKind, plan: &MeasurementPlan, index: u64) -> Result<TrajectoryBlock> {
    run_reduced(params, kind, plan, None, index).map(|r| r.steady)
}

/// Two-time contributions of one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalBlock {
    pub k: CorrelationBlock,
    /// Telegraph-reduced products, fermion counting only.
    pub q: Option<Vec<f64>>,
}

/// One trajectory reduced to steady-state and, optionally, two-time blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedTrajectory {
    pub steady: TrajectoryBlock,
    pub temporal: Option<TemporalBlock>,
}

/// Run trajectory `index` once, measuring `plan` at every sample and, if
/// `max_lag` is given, the two-time blocks on the same sample grid.
pub fn run_reduced(
    params: &SimParams,
    kind: EngineKind,
    plan: &MeasurementPlan,
    max_lag: Option<usize>,
    index: u64,
) -> Result<ReducedTrajectory> {
    let l = params.l;
    let two_time = max_lag.is_some();
    let schedule = SampleSchedule {
        times: params.sample_times(),
        record_z: two_time,
        record_counts: two_time && params.model == ModelKind::FermionCounting,
        record_jumps: false,
        check_every: 500,
    };
    let mut block = TrajectoryBlock {
        index,
        seed: params.trajectory_seed(index),
        n_snapshots: 0,
        correlation: if plan.correlations { vec![0.0; l / 2 + 1] } else { Vec::new() },
        entropy: vec![0.0; plan.ell_grid.len()],
        layouts: vec![[0.0; 7]; plan.layouts.len()],
        filling: 0.0,
        n_jumps: 0,
        max_purity_error: 0.0,
    };
    let traj = simulate_trajectory(params, index, kind, &schedule, |_, e| {
        snapshot(&e.density_matrix(), plan, &mut block)
    })?;
    let n = block.n_snapshots.max(1) as f64;
    block.correlation.iter_mut().for_each(|v| *v /= n);
    block.entropy.iter_mut().for_each(|v| *v /= n);
    block.layouts.iter_mut().flatten().for_each(|v| *v /= n);
    block.filling /= n;
    block.n_jumps = traj.n_jumps;
    block.max_purity_error = traj.max_purity_error;
    let temporal = match max_lag {
        Some(lag) => Some(TemporalBlock {
            k: autocorrelation_block(&traj.z, lag)?,
            q: match params.model {
                ModelKind::FermionCounting => Some(telegraph_block(&traj.z, &traj.jump_counts, lag)?),
                ModelKind::OccupationMeasurement => None,
            },
        }),
        None => None,
    };
    Ok(ReducedTrajectory { steady: block, temporal })
}

/// Combine two-time blocks sampled every `dt`.
pub fn summarize_temporal(blocks: &[TemporalBlock], dt: f64) -> Result<TemporalSummary> {
    let k: Vec<CorrelationBlock> = blocks.iter().map(|b| b.k.clone()).collect();
    let q: Option<Vec<Vec<f64>>> = blocks.iter().map(|b| b.q.clone()).collect();
    Ok(TemporalSummary {
        k: combine_autocorrelation(&k, dt)?,
        q: q.map(|q| combine_telegraph(&q, dt)).transpose()?,
    })
}

/// Blocks for trajectory indices `start..end`.
pub fn run_blocks(
    params: &SimParams,
    kind: EngineKind,
    plan: &MeasurementPlan,
    start: u64,
    end: u64,
    exec: Execution,
) -> Result<Vec<TrajectoryBlock>> {
    params.validate()?;
    plan.validate(params.l)?;
    map_indices(start, end, exec, |i| run_block(params, kind, plan, i))
}

/// Ensemble curves combined from trajectory blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateSummary {
    pub l: usize,
    /// `C_l` for `l = 0..=L/2` (empty if not measured).
    pub correlation: Vec<EnsembleStatistic>,
    pub ell_grid: Vec<usize>,
    pub chord: Vec<f64>,
    pub entropy: Vec<EnsembleStatistic>,
    /// `(√(ℓ̃ ℓ̃'), c_ℓ)` on consecutive grid points.
    pub central_charge: Vec<(f64, EnsembleStatistic)>,
    pub layouts: Vec<SegmentLayout>,
    pub cross_ratio: Vec<f64>,
    pub i2: Vec<EnsembleStatistic>,
    pub i3: Vec<EnsembleStatistic>,
    pub filling: EnsembleStatistic,
    pub n_traj: usize,
}

/// Combine blocks. Correlations need the mean filling within 0.05 of 1/2.
pub fn summarize(l: usize, plan: &MeasurementPlan, blocks: &[TrajectoryBlock]) -> Result<SteadyStateSummary> {
    if blocks.is_empty() {
        return Err(invalid("no trajectory blocks"));
    }
    let filling = EnsembleStatistic::from_samples(&blocks.iter().map(|b| b.filling).collect::<Vec<_>>());
    let correlation = if plan.correlations {
        if (filling.mean - 0.5).abs() > 0.05 {
            return Err(Error::Domain(format!(
                "density correlation assumes half filling, mean filling is {:.4}",
                filling.mean
            )));
        }
        block_statistics(&blocks.iter().map(|b| b.correlation.clone()).collect::<Vec<_>>())
    } else {
        Vec::new()
    };
    let entropy = block_statistics(&blocks.iter().map(|b| b.entropy.clone()).collect::<Vec<_>>());
    let chord: Vec<f64> = plan.ell_grid.iter().map(|&e| chord_length(e as f64, l)).collect();
    let central_charge = chord
        .windows(2)
        .enumerate()
        .map(|(i, c)| {
            let lr = (c[1] / c[0]).ln();
            let xs: Vec<f64> = blocks.iter().map(|b| 3.0 * (b.entropy[i + 1] - b.entropy[i]) / lr).collect();
            ((c[0] * c[1]).sqrt(), EnsembleStatistic::from_samples(&xs))
        })
        .collect();
    let mut i2 = Vec::new();
    let mut i3 = Vec::new();
    let mut cross_ratio = Vec::new();
    for (k, lay) in plan.layouts.iter().enumerate() {
        let a: Vec<f64> = blocks.iter().map(|b| i2_from_entropies(&b.layouts[k])).collect();
        let c: Vec<f64> = blocks.iter().map(|b| i3_from_entropies(&b.layouts[k])).collect();
        i2.push(EnsembleStatistic::from_samples(&a));
        i3.push(EnsembleStatistic::from_samples(&c));
        cross_ratio.push(cross_ratio_pair(lay)?.0);
    }
    Ok(SteadyStateSummary {
        l,
        correlation,
        ell_grid: plan.ell_grid.clone(),
        chord,
        entropy,
        central_charge,
        layouts: plan.layouts.clone(),
        cross_ratio,
        i2,
        i3,
        filling,
        n_traj: blocks.len(),
    })
}

/// Two-time ensemble: `K(τ)` and, for fermion counting, `Q(τ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalSummary {
    pub k: LagCurve,
    pub q: Option<LagCurve>,
}

/// Trajectories sampling `z` and jump counts on the schedule of `params`.
pub fn run_sampled(
    params: &SimParams,
    kind: EngineKind,
    start: u64,
    end: u64,
    exec: Execution,
) -> Result<Vec<SampledTrajectory>> {
    params.validate()?;
    let schedule = SampleSchedule {
        check_every: 0,
        ..SampleSchedule::from_params(params)
    };
    map_indices(start, end, exec, |i| simulate_trajectory(params, i, kind, &schedule, |_, _| Ok(())))
}

pub fn temporal_summary(
    params: &SimParams,
    trajs: &[SampledTrajectory],
    max_lag: usize,
) -> Result<TemporalSummary> {
    let k = density_autocorrelation(trajs, max_lag)?;
    let q = match params.model {
        ModelKind::FermionCounting => Some(telegraph_reduced(trajs, params.model, max_lag)?),
        ModelKind::OccupationMeasurement => None,
    };
    Ok(TemporalSummary { k, q })
}
