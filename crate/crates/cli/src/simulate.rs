use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use monfer::engine::{EngineKind, SimParams};
use monfer::ensemble::{map_indices, with_workers, Execution};
use monfer::experiment::{run_reduced, summarize, summarize_temporal, ReducedTrajectory, TemporalBlock};
use monfer::observables::{cross_ratio_pair, EnsembleStatistic};
use monfer::theory::{scales, Scales, TheoryParams};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Observable, Resolved};
use crate::io::{read_json, rows_from_lag, rows_from_stats, sha256_hex, FileEntry, Output, MANIFEST, UNITS, VERSION};

pub const CHECKPOINT: &str = "checkpoint.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutEntry {
    pub index: usize,
    pub ell_a: usize,
    pub ell_b: usize,
    pub ell_c: usize,
    pub cross_ratio: f64,
    /// `1 - x`, kept separately because it is tiny near `x → 1`.
    pub one_minus_cross_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationManifest {
    pub tool: String,
    pub command: String,
    pub version: String,
    pub units: String,
    pub config: ExperimentConfig,
    pub config_sha256: String,
    pub params: SimParams,
    pub engine: EngineKind,
    pub n_traj: usize,
    pub filling: EnsembleStatistic,
    pub total_jumps: u64,
    pub max_purity_error: f64,
    pub layouts: Vec<LayoutEntry>,
    /// Predicted scales at half filling for these `J` and `γ`.
    pub scales: Option<Scales>,
    pub files: Vec<FileEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Checkpoint {
    version: String,
    config_sha256: String,
    trajectories: Vec<ReducedTrajectory>,
}

pub struct RunOptions {
    pub resume: bool,
    /// Stop with an error after this many checkpoints, leaving the checkpoint
    /// behind as an interrupted run would.
    pub halt_after: Option<usize>,
}

pub fn fingerprint(r: &Resolved) -> Result<String> {
    Ok(sha256_hex(&serde_json::to_vec(r)?))
}

fn load_checkpoint(path: &Path, hash: &str) -> Result<Vec<ReducedTrajectory>> {
    let c: Checkpoint = read_json(path)?;
    if c.config_sha256 != hash {
        anyhow::bail!(
            "checkpoint {} belongs to a different configuration ({} vs {hash})",
            path.display(),
            c.config_sha256
        );
    }
    Ok(c.trajectories)
}

pub fn simulate(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<SimulationManifest> {
    let r = cfg.resolve()?;
    let hash = fingerprint(&r)?;
    let out = Output::new(&cfg.output_dir)?;
    let ckpt = cfg.output_dir.join(CHECKPOINT);
    let mut done: Vec<ReducedTrajectory> = Vec::new();
    if opts.resume && ckpt.exists() {
        done = load_checkpoint(&ckpt, &hash)?;
        eprintln!("resuming from {} completed trajectories", done.len());
    }
    let n_traj = r.params.n_traj;
    let t0 = Instant::now();
    let mut checkpoints = 0;
    while done.len() < n_traj {
        let start = done.len() as u64;
        let end = (start + cfg.checkpoint_every as u64).min(n_traj as u64);
        let chunk = with_workers(cfg.workers, || {
            map_indices(start, end, Execution::Parallel, |i| {
                run_reduced(&r.params, r.engine, &r.plan, r.max_lag, i)
            })
        })??;
        done.extend(chunk);
        out.json(
            CHECKPOINT,
            &Checkpoint {
                version: VERSION.into(),
                config_sha256: hash.clone(),
                trajectories: done.clone(),
            },
        )?;
        checkpoints += 1;
        eprintln!(
            "{}/{} trajectories, {:.1} s",
            done.len(),
            n_traj,
            t0.elapsed().as_secs_f64()
        );
        if opts.halt_after == Some(checkpoints) && done.len() < n_traj {
            anyhow::bail!("halted after {checkpoints} checkpoints as requested");
        }
    }
    write_results(cfg, &r, hash, &done, out)
}

fn write_results(
    cfg: &ExperimentConfig,
    r: &Resolved,
    hash: String,
    done: &[ReducedTrajectory],
    mut out: Output,
) -> Result<SimulationManifest> {
    let p = &r.params;
    let blocks: Vec<_> = done.iter().map(|t| t.steady.clone()).collect();
    let s = summarize(p.l, &r.plan, &blocks)?;
    for o in &r.observables {
        match o {
            Observable::Correlation => {
                let x: Vec<f64> = (0..s.correlation.len()).map(|d| d as f64).collect();
                out.curve("correlation.csv", "l (site separation)", "C_l", &rows_from_stats(&x, &s.correlation))?;
            }
            Observable::Entropy => {
                let x: Vec<f64> = s.ell_grid.iter().map(|&e| e as f64).collect();
                out.curve("entropy.csv", "ℓ (interval size)", "S_ℓ", &rows_from_stats(&x, &s.entropy))?;
                let (x, c): (Vec<f64>, Vec<EnsembleStatistic>) = s.central_charge.iter().copied().unzip();
                out.curve(
                    "central_charge.csv",
                    "geometric mean of consecutive chord lengths",
                    "c_ℓ",
                    &rows_from_stats(&x, &c),
                )?;
            }
            Observable::Layouts => {
                let x: Vec<f64> = (0..s.layouts.len()).map(|k| k as f64).collect();
                out.curve("i2.csv", "layout index", "I2", &rows_from_stats(&x, &s.i2))?;
                out.curve("i3.csv", "layout index", "I3", &rows_from_stats(&x, &s.i3))?;
            }
            Observable::K | Observable::Q => {}
        }
    }
    if let Some(lag) = r.max_lag {
        let tb: Vec<TemporalBlock> = done
            .iter()
            .map(|t| t.temporal.clone().context("checkpoint lacks two-time blocks"))
            .collect::<Result<_>>()?;
        let ts = summarize_temporal(&tb, p.dt_sample)?;
        debug_assert_eq!(ts.k.lags.len(), lag + 1);
        if r.observables.contains(&Observable::K) {
            out.curve("k.csv", "τ (1/J)", "K(τ)", &rows_from_lag(&ts.k))?;
        }
        if let (true, Some(q)) = (r.observables.contains(&Observable::Q), &ts.q) {
            out.curve("q.csv", "τ (1/J)", "Q(τ)", &rows_from_lag(q))?;
        }
    }
    let layouts = s
        .layouts
        .iter()
        .enumerate()
        .map(|(index, lay)| {
            let (x, omx) = cross_ratio_pair(lay)?;
            Ok(LayoutEntry {
                index,
                ell_a: lay.ell_a,
                ell_b: lay.ell_b,
                ell_c: lay.ell_c,
                cross_ratio: x,
                one_minus_cross_ratio: omx,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = SimulationManifest {
        tool: "monfer".into(),
        command: "simulate".into(),
        version: VERSION.into(),
        units: UNITS.into(),
        // worker count never changes the numbers
        config: ExperimentConfig {
            workers: None,
            ..cfg.clone()
        },
        config_sha256: hash,
        params: p.clone(),
        engine: r.engine,
        n_traj: done.len(),
        filling: s.filling,
        total_jumps: blocks.iter().map(|b| b.n_jumps).sum(),
        max_purity_error: blocks.iter().map(|b| b.max_purity_error).fold(0.0, f64::max),
        layouts,
        scales: TheoryParams::new(0.5, p.j, p.gamma).ok().map(|t| scales(&t)),
        files: out.files.clone(),
    };
    out.json(MANIFEST, &manifest)?;
    Ok(manifest)
}
