use std::path::Path;

use anyhow::Result;
use monfer::theory::{
    gaussian_cl, gaussian_cq, gaussian_entropy, predicted_c_ell, predicted_entropy, renormalized_cq_ratio, scales,
    Scales, TheoryParams,
};
use serde::{Deserialize, Serialize};

use crate::io::{rows_exact, FileEntry, Output, MANIFEST, UNITS, VERSION};

#[derive(Debug, Clone, Default)]
pub struct Grids {
    pub q: Vec<f64>,
    pub l: Vec<f64>,
    pub ell: Vec<f64>,
    /// Non-universal entropy offset; the `S_ℓ` prediction needs it.
    pub s0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryManifest {
    pub tool: String,
    pub command: String,
    pub version: String,
    pub units: String,
    pub params: TheoryParams,
    pub scales: Scales,
    pub s0: Option<f64>,
    pub files: Vec<FileEntry>,
}

fn eval(xs: &[f64], f: impl Fn(f64) -> monfer::Result<f64>) -> Result<Vec<f64>> {
    Ok(xs.iter().map(|&x| f(x)).collect::<monfer::Result<Vec<f64>>>()?)
}

pub fn theory(p: &TheoryParams, g: &Grids, dir: &Path) -> Result<TheoryManifest> {
    p.validate()?;
    let mut out = Output::new(dir)?;
    if !g.q.is_empty() {
        out.curve("cq.csv", "q", "C_q (Gaussian)", &rows_exact(&g.q, &eval(&g.q, |q| gaussian_cq(q, p))?))?;
        // the one-loop form only holds for q l₀ < 1
        let q: Vec<f64> = g.q.iter().copied().filter(|&q| q * p.l0() < 1.0).collect();
        out.curve(
            "cq_renormalized.csv",
            "q",
            "C_q/(g0 q) with running coupling",
            &rows_exact(&q, &eval(&q, |q| renormalized_cq_ratio(q, p))?),
        )?;
    }
    if !g.l.is_empty() {
        out.curve("cl.csv", "l", "C_l (Gaussian)", &rows_exact(&g.l, &eval(&g.l, |l| gaussian_cl(l, p))?))?;
    }
    if !g.ell.is_empty() {
        out.curve(
            "entropy_gaussian.csv",
            "ℓ",
            "S_ℓ (Gaussian)",
            &rows_exact(&g.ell, &eval(&g.ell, |e| gaussian_entropy(e, p))?),
        )?;
        let c: Vec<f64> = g.ell.iter().map(|&e| predicted_c_ell(e, p)).collect();
        out.curve("central_charge.csv", "ℓ", "c_ℓ (renormalized)", &rows_exact(&g.ell, &c))?;
        if let Some(s0) = g.s0 {
            let s: Vec<f64> = g.ell.iter().map(|&e| predicted_entropy(e, p, s0)).collect();
            out.curve("entropy.csv", "ℓ", "S_ℓ (renormalized)", &rows_exact(&g.ell, &s))?;
        }
    }
    let manifest = TheoryManifest {
        tool: "monfer".into(),
        command: "theory".into(),
        version: VERSION.into(),
        units: UNITS.into(),
        params: *p,
        scales: scales(p),
        s0: g.s0,
        files: out.files.clone(),
    };
    out.json(MANIFEST, &manifest)?;
    Ok(manifest)
}
