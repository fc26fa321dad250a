//! Ensembles at the full lattice size (L = 1000, 160 trajectories). Days of CPU time on a laptop, so they
//! only run on request:
//!
//! `cargo test --release -p monitored-fermions --test extended -- --ignored`

use monfer::analysis::{crossover_scale, locate_maximum, power_law_fit, Curve};
use monfer::engine::{EngineKind, ModelKind, SimParams};
use monfer::ensemble::Execution;
use monfer::experiment::{run_blocks, summarize, MeasurementPlan, SteadyStateSummary};
use monfer::observables::chord_length;
use monfer::theory::TheoryParams;

const L: usize = 1000;
const CROSSOVER_GAMMAS: [f64; 3] = [0.3, 0.5, 1.0];
const MAXIMUM_GAMMAS: [f64; 3] = [0.2, 0.3, 0.5];

fn ensemble(model: ModelKind, gamma: f64, n_traj: usize) -> SteadyStateSummary {
    let params = SimParams {
        t_burn: 400.0,
        t_sample: 100.0,
        dt_sample: 10.0,
        n_traj,
        ..SimParams::new(L, gamma, model, 0x1000)
    };
    let plan = MeasurementPlan::standard(L, 66).unwrap();
    let blocks = run_blocks(&params, EngineKind::Slater, &plan, 0, n_traj as u64, Execution::Parallel).unwrap();
    summarize(L, &plan, &blocks).unwrap()
}

#[test]
#[ignore]
fn crossover_scales_as_inverse_gamma_squared() {
    let mut g = Vec::new();
    let mut lc = Vec::new();
    for gamma in CROSSOVER_GAMMAS {
        let s = ensemble(ModelKind::FermionCounting, gamma, 160);
        let x: Vec<f64> = (1..s.correlation.len()).map(|r| chord_length(r as f64, L)).collect();
        let y: Vec<f64> = s.correlation[1..].iter().map(|c| c.mean).collect();
        let e: Vec<f64> = s.correlation[1..].iter().map(|c| c.stderr).collect();
        let l0 = TheoryParams::half_filling(gamma).l0();
        if let Some(v) = crossover_scale(&Curve::new(x, y, e).unwrap(), l0).unwrap().scale() {
            g.push(gamma);
            lc.push(v);
        }
    }
    assert_eq!(g.len(), 3, "crossover found for γ = {g:?} only");
    let fit = power_law_fit(&Curve::exact(g, lc).unwrap(), 0.0, f64::INFINITY).unwrap();
    assert!((-2.4..=-1.6).contains(&fit.exponent), "{fit:?}");
}

#[test]
#[ignore]
fn central_charge_maximum_moves_as_gamma_to_minus_three_halves() {
    let mut g = Vec::new();
    let mut xm = Vec::new();
    for gamma in MAXIMUM_GAMMAS {
        let s = ensemble(ModelKind::FermionCounting, gamma, 160);
        let x: Vec<f64> = s.central_charge.iter().map(|(x, _)| *x).collect();
        let y: Vec<f64> = s.central_charge.iter().map(|(_, c)| c.mean).collect();
        let e: Vec<f64> = s.central_charge.iter().map(|(_, c)| c.stderr).collect();
        let m = locate_maximum(&Curve::new(x, y, e).unwrap(), 1).unwrap();
        assert!(!m.at_boundary, "γ = {gamma}: maximum at the edge of the grid");
        g.push(gamma);
        xm.push(m.x_max);
    }
    let fit = power_law_fit(&Curve::exact(g, xm).unwrap(), 0.0, f64::INFINITY).unwrap();
    assert!((-1.8..=-1.2).contains(&fit.exponent), "{fit:?}");
}
