use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use monfer::analysis::{crossover_scale, locate_maximum, power_law_fit, Crossover, Curve, Maximum, PowerLawFit};
use monfer::observables::{cft_collapse_residuals, cft_i2_minus_i3, chord_length};
use serde::Serialize;

use crate::io::{read_csv, read_json, sha256_hex, Row, MANIFEST, VERSION};
use crate::simulate::SimulationManifest;

/// A simulation output directory, with file hashes checked on load.
pub struct ResultDir {
    pub dir: PathBuf,
    pub manifest: SimulationManifest,
}

impl ResultDir {
    pub fn open(dir: &Path) -> Result<Self> {
        let manifest: SimulationManifest = read_json(&dir.join(MANIFEST))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest,
        })
    }

    pub fn rows(&self, name: &str) -> Result<Vec<Row>> {
        let entry = self
            .manifest
            .files
            .iter()
            .find(|f| f.name == name)
            .with_context(|| format!("{} has no {name}; was the observable requested?", self.dir.display()))?;
        let path = self.dir.join(name);
        let bytes = std::fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
        if sha256_hex(&bytes) != entry.sha256 {
            bail!("{} does not match the hash recorded in the manifest", path.display());
        }
        read_csv(&path)
    }

    pub fn gamma(&self) -> f64 {
        self.manifest.params.gamma
    }

    pub fn l0(&self) -> Result<f64> {
        Ok(self.manifest.scales.context("manifest lacks theory scales")?.l0)
    }

    /// `C_l` for `l ≥ 1` against the chord length.
    pub fn correlation_curve(&self) -> Result<Curve> {
        let rows = self.rows("correlation.csv")?;
        let l = self.manifest.params.l;
        let rows: Vec<&Row> = rows.iter().filter(|r| r.abscissa >= 1.0).collect();
        Ok(Curve::new(
            rows.iter().map(|r| chord_length(r.abscissa, l)).collect(),
            rows.iter().map(|r| r.mean).collect(),
            rows.iter().map(|r| r.stderr).collect(),
        )?)
    }

    pub fn central_charge_curve(&self) -> Result<Curve> {
        curve(&self.rows("central_charge.csv")?)
    }
}

fn curve(rows: &[Row]) -> Result<Curve> {
    Ok(Curve::new(
        rows.iter().map(|r| r.abscissa).collect(),
        rows.iter().map(|r| r.mean).collect(),
        rows.iter().map(|r| r.stderr).collect(),
    )?)
}

#[derive(Debug, Serialize)]
pub struct Report<T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub task: &'static str,
    pub inputs: Vec<String>,
    pub result: T,
}

fn report<T: Serialize>(task: &'static str, dirs: &[ResultDir], result: T) -> Report<T> {
    Report {
        tool: "monfer",
        version: VERSION,
        task,
        inputs: dirs.iter().map(|d| d.dir.display().to_string()).collect(),
        result,
    }
}

#[derive(Debug, Serialize)]
pub struct GammaPoint<T: Serialize> {
    pub gamma: f64,
    pub l: usize,
    pub n_traj: usize,
    pub value: T,
}

#[derive(Debug, Serialize)]
pub struct ScalingReport<T: Serialize> {
    pub per_gamma: Vec<GammaPoint<T>>,
    /// Power law in `γ` over the points where the scale exists; needs three.
    pub gamma_scaling: Option<PowerLawFit>,
}

fn scaling(points: &[(f64, Option<(f64, f64)>)]) -> Result<Option<PowerLawFit>> {
    let pts: Vec<(f64, f64, f64)> = points.iter().filter_map(|(g, s)| s.map(|(v, e)| (*g, v, e))).collect();
    if pts.len() < 3 {
        return Ok(None);
    }
    let c = Curve::new(
        pts.iter().map(|p| p.0).collect(),
        pts.iter().map(|p| p.1).collect(),
        pts.iter().map(|p| if p.2.is_finite() { p.2 } else { 0.0 }).collect(),
    )?;
    Ok(Some(power_law_fit(&c, 0.0, f64::INFINITY)?))
}

/// Crossover scale of `C_l` per input, plus its `γ` scaling. The tangent
/// search starts at `x_min` (default `l₀` of each input).
pub fn crossover(dirs: &[ResultDir], x_min: Option<f64>) -> Result<Report<ScalingReport<Crossover>>> {
    let mut per_gamma = Vec::new();
    let mut pts = Vec::new();
    for d in dirs {
        let c = crossover_scale(&d.correlation_curve()?, x_min.map_or_else(|| d.l0(), Ok)?)?;
        pts.push((d.gamma(), c.scale().map(|v| (v, 0.0))));
        per_gamma.push(GammaPoint {
            gamma: d.gamma(),
            l: d.manifest.params.l,
            n_traj: d.manifest.n_traj,
            value: c,
        });
    }
    Ok(report(
        "crossover",
        dirs,
        ScalingReport {
            per_gamma,
            gamma_scaling: scaling(&pts)?,
        },
    ))
}

/// Maximum of the effective central charge per input, plus the `γ` scaling
/// of its position.
pub fn maximum(dirs: &[ResultDir], seed: u64) -> Result<Report<ScalingReport<Maximum>>> {
    let mut per_gamma = Vec::new();
    let mut pts = Vec::new();
    for d in dirs {
        let m = locate_maximum(&d.central_charge_curve()?, seed)?;
        pts.push((d.gamma(), (!m.at_boundary).then_some((m.x_max, m.x_err))));
        per_gamma.push(GammaPoint {
            gamma: d.gamma(),
            l: d.manifest.params.l,
            n_traj: d.manifest.n_traj,
            value: m,
        });
    }
    Ok(report(
        "maximum",
        dirs,
        ScalingReport {
            per_gamma,
            gamma_scaling: scaling(&pts)?,
        },
    ))
}

#[derive(Debug, Serialize)]
pub struct CollapsePoint {
    pub layout: usize,
    pub ell_a: usize,
    pub ell_b: usize,
    pub ell_c: usize,
    pub cross_ratio: f64,
    /// Chord length of `B`, the scale the collapse window refers to.
    pub probe: f64,
    pub residual: f64,
    pub relative_residual: f64,
    pub in_window: bool,
}

#[derive(Debug, Serialize)]
pub struct CollapseReport {
    pub c: f64,
    pub c_source: String,
    pub window: (f64, f64),
    pub l_c_source: String,
    pub points: Vec<CollapsePoint>,
    pub max_relative_residual_inside: Option<f64>,
    pub max_relative_residual_outside: Option<f64>,
}

/// Residuals of `I₂ - I₃` against the CFT form over the window
/// `[a l₀, l_c]`. `c` defaults to the maximum of the measured central
/// charge and `l_c` to the measured crossover of `C_l`.
pub fn cft_collapse(d: &ResultDir, a: f64, c: Option<f64>, l_c: Option<f64>, seed: u64) -> Result<Report<CollapseReport>> {
    let (c, c_source) = match c {
        Some(c) => (c, "given".to_string()),
        None => (locate_maximum(&d.central_charge_curve()?, seed)?.y_max, "maximum of c_ℓ".to_string()),
    };
    let l0 = d.l0()?;
    let (hi, l_c_source) = match l_c {
        Some(v) => (v, "given".to_string()),
        None => match crossover_scale(&d.correlation_curve()?, l0)?.scale() {
            Some(v) => (v, "crossover of C_l".to_string()),
            None => bail!("no crossover inside the system; pass --l-c"),
        },
    };
    let window = (a * l0, hi);
    let i2 = d.rows("i2.csv")?;
    let i3 = d.rows("i3.csv")?;
    let lays = &d.manifest.layouts;
    if i2.len() != lays.len() || i3.len() != lays.len() {
        bail!("layout files and manifest disagree");
    }
    let x: Vec<f64> = lays.iter().map(|l| l.cross_ratio).collect();
    let res = cft_collapse_residuals(
        &i2.iter().map(|r| r.mean).collect::<Vec<_>>(),
        &i3.iter().map(|r| r.mean).collect::<Vec<_>>(),
        &x,
        c,
    )?;
    let l = d.manifest.params.l;
    let points: Vec<CollapsePoint> = lays
        .iter()
        .zip(&res)
        .map(|(lay, &r)| {
            let probe = chord_length(lay.ell_b as f64, l);
            CollapsePoint {
                layout: lay.index,
                ell_a: lay.ell_a,
                ell_b: lay.ell_b,
                ell_c: lay.ell_c,
                cross_ratio: lay.cross_ratio,
                probe,
                residual: r,
                relative_residual: (r / cft_i2_minus_i3(c, lay.one_minus_cross_ratio)).abs(),
                in_window: probe >= window.0 && probe <= window.1,
            }
        })
        .collect();
    let max_of = |inside: bool| {
        points
            .iter()
            .filter(|p| p.in_window == inside)
            .map(|p| p.relative_residual)
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
    };
    let result = CollapseReport {
        c,
        c_source,
        window,
        l_c_source,
        max_relative_residual_inside: max_of(true),
        max_relative_residual_outside: max_of(false),
        points,
    };
    Ok(report("cft-collapse", std::slice::from_ref(d), result))
}

/// Power-law fit of one curve file over `[lo, hi]`.
pub fn power_law(d: &ResultDir, file: &str, lo: f64, hi: f64) -> Result<Report<PowerLawFit>> {
    let rows = d.rows(file)?;
    let fit = power_law_fit(&curve(&rows)?, lo, hi)?;
    Ok(report("power-law", std::slice::from_ref(d), fit))
}
