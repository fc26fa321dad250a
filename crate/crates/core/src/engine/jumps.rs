//! Waiting-time and outcome selection shared by every engine.
//!
//! Given one uniform `u ∈ [0, 1)` per decision, the selections below are pure
//! functions of the occupations, so two engines that agree on the occupations
//! also agree on every jump.

use super::{JumpKind, ModelKind};
use crate::error::{Error, Result};

/// Born weights at or below this threshold are treated as exactly zero.
pub const EPS_JUMP: f64 = 1e-10;

/// Total jump rate: `γL` for counting, `2γN` for occupation measurement.
pub fn total_rate(model: ModelKind, gamma: f64, l: usize, n_particles: usize) -> f64 {
    match model {
        ModelKind::FermionCounting => gamma * l as f64,
        ModelKind::OccupationMeasurement => 2.0 * gamma * n_particles as f64,
    }
}

/// Exponential waiting time from a uniform `u ∈ [0, 1)`; infinite when the rate
/// vanishes.
pub fn waiting_time(u: f64, rate: f64) -> f64 {
    if rate <= 0.0 {
        return f64::INFINITY;
    }
    -(-u).ln_1p() / rate
}

fn clamp_weight(p: f64) -> f64 {
    if p <= EPS_JUMP {
        0.0
    } else if p >= 1.0 - EPS_JUMP {
        1.0
    } else {
        p
    }
}

/// Fermion-counting outcome. The uniform is split as `u L = s + r`; site `s`
/// is chosen uniformly and the jump is a loss iff `r < d_ss`, reproducing
/// `p_{-,s} = d_ss / L` and `p_{+,s} = (1 - d_ss) / L`.
pub fn select_fc(u: f64, l: usize, occupation: impl FnOnce(usize) -> f64) -> (JumpKind, usize) {
    let x = u * l as f64;
    let s = (x.floor() as usize).min(l - 1);
    let r = x - s as f64;
    let p = clamp_weight(occupation(s));
    let kind = if r < p { JumpKind::Loss } else { JumpKind::Gain };
    (kind, s)
}

/// Occupation-measurement outcome: site `l` with probability `d_ll / N`, by
/// inverse-CDF search over the clamped occupations.
pub fn select_om(u: f64, occupations: &[f64]) -> Result<usize> {
    let weights = occupations.iter().map(|&p| if p <= EPS_JUMP { 0.0 } else { p });
    let total: f64 = weights.clone().sum();
    if !(total > 0.0) {
        return Err(Error::Inconsistent(
            "occupation jump requested on an empty lattice".into(),
        ));
    }
    let target = u * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        if w > 0.0 {
            acc += w;
            last = i;
            if target < acc {
                return Ok(i);
            }
        }
    }
    Ok(last)
}

/// Dispatch on the model. `occupations` is only evaluated when needed.
pub fn select_jump(
    model: ModelKind,
    u: f64,
    l: usize,
    occupation: impl FnOnce(usize) -> f64,
    occupations: impl FnOnce() -> Vec<f64>,
) -> Result<(JumpKind, usize)> {
    match model {
        ModelKind::FermionCounting => Ok(select_fc(u, l, occupation)),
        ModelKind::OccupationMeasurement => {
            select_om(u, &occupations()).map(|s| (JumpKind::Occupation, s))
        }
    }
}
