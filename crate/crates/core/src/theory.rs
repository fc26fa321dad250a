//! Closed-form predictions: the Gaussian correlation function, the entropy
//! integrals built from it, the logarithmic renormalization of `g₀` and the
//! characteristic scales.
//!
//! Lengths are in lattice spacings and `J` sets the energy scale.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{gauss_legendre, integrate_breaks, integrate_to_infinity, QuadOptions};

/// Absolute tolerance of the `c̃` quadrature.
pub const TILDE_C_TOL: f64 = 1e-10;

/// Model parameters entering the predictions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryParams {
    /// Filling fraction.
    pub n: f64,
    pub j: f64,
    pub gamma: f64,
    /// 1/2 with particle-hole symmetry (the default), 1 without.
    pub beta: f64,
}

impl TheoryParams {
    pub fn new(n: f64, j: f64, gamma: f64) -> Result<Self> {
        let p = Self {
            n,
            j,
            gamma,
            beta: 0.5,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn half_filling(gamma: f64) -> Self {
        Self {
            n: 0.5,
            j: 1.0,
            gamma,
            beta: 0.5,
        }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n > 0.0 && self.n < 1.0) {
            return Err(Error::InvalidParameter(format!("filling must lie in (0, 1), got {}", self.n)));
        }
        if !(self.gamma > 0.0) || !(self.j > 0.0) {
            return Err(Error::InvalidParameter("J and gamma must be positive".into()));
        }
        if !(self.beta > 0.0) {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {}", self.beta)));
        }
        Ok(())
    }

    /// `τ₀ = n/γ`.
    pub fn tau0(&self) -> f64 {
        self.n / self.gamma
    }
    /// Mean free path `l₀ = √2 J n / γ`.
    pub fn l0(&self) -> f64 {
        std::f64::consts::SQRT_2 * self.j * self.n / self.gamma
    }
    /// Zeno hopping rate `ν = 2 n J² / γ`.
    pub fn nu(&self) -> f64 {
        2.0 * self.n * self.j * self.j / self.gamma
    }
    /// Bare coupling `g₀ = l₀ n √(2(1-n))`.
    pub fn g0(&self) -> f64 {
        self.l0() * self.n * (2.0 * (1.0 - self.n)).sqrt()
    }
    /// `v₀ = (l₀/τ₀) √(2(1-n))`.
    pub fn v0(&self) -> f64 {
        self.l0() / self.tau0() * (2.0 * (1.0 - self.n)).sqrt()
    }
}

/// All characteristic scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scales {
    pub l0: f64,
    pub tau0: f64,
    pub nu: f64,
    pub g0: f64,
    pub v0: f64,
    /// `l₀ e^{4πβg₀}`, beyond which the area law sets in.
    pub l_star: f64,
    /// Maximum of the renormalized `C_q/(g₀q)`.
    pub q_c: f64,
    pub l_c: f64,
    /// Maximum of the predicted effective central charge.
    pub ell_max_c: f64,
}

pub fn scales(p: &TheoryParams) -> Scales {
    let l0 = p.l0();
    let g0 = p.g0();
    let q_c = 1.0 / (8.0 * PI * p.beta * l0 * g0);
    Scales {
        l0,
        tau0: p.tau0(),
        nu: p.nu(),
        g0,
        v0: p.v0(),
        l_star: l0 * (4.0 * PI * p.beta * g0).exp(),
        q_c,
        l_c: 1.0 / q_c,
        ell_max_c: (112.0 * PI * p.beta * g0).sqrt() * l0,
    }
}

/// Position of the maximum of the predicted `I₂(ℓ)` at fixed cross ratio.
pub fn ell_max_i2(p: &TheoryParams, x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain(format!("cross ratio must lie in (0, 1), got {x}")));
    }
    let lg = -(-x).ln_1p();
    let l0 = p.l0();
    Ok(l0 * x / (1.0 - x) * (112.0 * PI * p.beta * p.g0() * (3.0 - x) / lg).sqrt())
}

/// `b(u, v) = [(1 - iv)² + 2u²]^{-1/2}` on the principal branch.
pub fn b_kernel(u: f64, v: f64) -> Complex64 {
    let z = Complex64::new(1.0 - v * v + 2.0 * u * u, -2.0 * v);
    debug_assert!(z.norm() > 0.0);
    z.sqrt().inv()
}

fn tilde_c_integrand(u: f64, n: f64, v: f64) -> f64 {
    let b = b_kernel(2.0 * u, v);
    let re = b.re;
    let abs2 = b.norm_sqr();
    let f = 1.0 - 2.0 * n;
    let num = 2.0 * n * re - abs2;
    let den = 4.0 * n * n * (1.0 - re) - f * abs2;
    if num == 0.0 {
        return 0.0;
    }
    num / den
}

/// `c̃(u)` at filling `n`; for `n = 1/2` the general form reduces to the
/// half-filling expression.
///
/// Away from half filling the kernel is only usable for `n > 1/2`: its
/// denominator is then strictly positive, although `c̃(0) = √(2n - 1)` does not
/// vanish. For `n < 1/2` the denominator crosses zero on the integration
/// path (at `u = 0`, `v = √(1-2n)/(2n)`), and the integral does not exist.
pub fn tilde_c(u: f64, n: f64) -> Result<f64> {
    tilde_c_with_tol(u, n, TILDE_C_TOL)
}

pub fn tilde_c_with_tol(u: f64, n: f64, tol: f64) -> Result<f64> {
    if !(u >= 0.0) {
        return Err(Error::Domain(format!("c̃ needs u ≥ 0, got {u}")));
    }
    if !(n >= 0.5 && n < 1.0) {
        return Err(Error::Domain(format!(
            "c̃ kernel has a non-integrable pole for filling n = {n} < 1/2"
        )));
    }
    if u == 0.0 && n == 0.5 {
        return Ok(0.0);
    }
    let prefactor = 4.0 * n / PI;
    // The integrand varies on scales v ~ 1 and v ~ 2u; split there and map
    // the tail to a finite interval.
    let scale = (2.0 * u).max(1.0);
    let cut = 20.0 * scale;
    let mut breaks = vec![0.0];
    // the real part of b⁻² changes sign at v* = √(1 + 8u²)
    let vstar = (1.0 + 8.0 * u * u).sqrt();
    for b in [0.1 * u, u, 2.0 * u, 4.0 * u, 0.5, 1.0, 2.0, 5.0, 0.9 * vstar, vstar, 1.1 * vstar] {
        if b > 0.0 && b < cut {
            breaks.push(b);
        }
    }
    breaks.push(cut);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let opts = QuadOptions {
        abs_tol: tol / prefactor / 2.0,
        rel_tol: 0.0,
        max_intervals: 4000,
    };
    let head = integrate_breaks(|v| tilde_c_integrand(u, n, v), &breaks, opts)
        .map_err(|e| Error::Numeric(format!("c̃({u}, n = {n}) head: {e}")))?;
    let tail = integrate_to_infinity(|v| tilde_c_integrand(u, n, v), cut, cut, opts)
        .map_err(|e| Error::Numeric(format!("c̃({u}, n = {n}) tail: {e}")))?;
    Ok(prefactor * (head.value + tail.value))
}

/// Gaussian correlation function in momentum space, `n(1-n) c̃(q l₀)`.
pub fn gaussian_cq(q: f64, p: &TheoryParams) -> Result<f64> {
    Ok(p.n * (1.0 - p.n) * tilde_c(q * p.l0(), p.n)?)
}

/// `C_q` tabulated on composite Gauss–Legendre nodes over `[0, π]`, for
/// evaluating many inverse transforms and entropy integrals at once.
#[derive(Debug, Clone)]
pub struct CqTable {
    pub params: TheoryParams,
    q: Vec<f64>,
    w: Vec<f64>,
    cq: Vec<f64>,
    /// `∫_π^∞ C_q / q² dq`, the non-oscillating part of the continuum tail.
    tail: f64,
}

impl CqTable {
    /// `panels` equal panels of 16 nodes; resolve `cos(q ℓ)` for `ℓ` up to
    /// about `2 × panels`.
    pub fn new(p: &TheoryParams, panels: usize) -> Result<Self> {
        p.validate()?;
        let (gx, gw) = gauss_legendre(16);
        let h = PI / panels as f64;
        let mut q = Vec::with_capacity(panels * 16);
        let mut w = Vec::with_capacity(panels * 16);
        for k in 0..panels {
            let a = k as f64 * h;
            for (x, wt) in gx.iter().zip(&gw) {
                q.push(a + 0.5 * h * (x + 1.0));
                w.push(0.5 * h * wt);
            }
        }
        let cq = q.iter().map(|&q| gaussian_cq(q, p)).collect::<Result<Vec<_>>>()?;
        let tail = integrate_to_infinity(
            |q| gaussian_cq(q, p).unwrap_or(f64::NAN) / (q * q),
            PI,
            PI,
            QuadOptions::abs(1e-8),
        )?
        .value;
        Ok(Self {
            params: *p,
            q,
            w,
            cq,
            tail,
        })
    }

    /// Table sized for distances up to `max_distance`.
    pub fn for_distances(p: &TheoryParams, max_distance: usize) -> Result<Self> {
        Self::new(p, (max_distance / 2).max(256))
    }

    /// `C_l = (1/π) ∫_0^π C_q cos(q l) dq`.
    pub fn cl(&self, l: f64) -> f64 {
        self.q
            .iter()
            .zip(&self.w)
            .zip(&self.cq)
            .map(|((q, w), c)| w * c * (q * l).cos())
            .sum::<f64>()
            / PI
    }

    /// `S_ℓ = (2π/3) ∫_0^∞ C_q [1 - cos(qℓ)]/q² dq`, with the lattice part
    /// `[0, π]` integrated on the table and the continuum tail `q > π`
    /// replaced by `∫_π^∞ C_q/q²`; the dropped oscillatory remainder is bounded
    /// by `max C_q / (π² ℓ)`.
    pub fn entropy(&self, ell: f64) -> f64 {
        let head: f64 = self
            .q
            .iter()
            .zip(&self.w)
            .zip(&self.cq)
            .map(|((q, w), c)| {
                let s = (0.5 * q * ell).sin();
                w * c * 2.0 * s * s / (q * q)
            })
            .sum();
        2.0 * PI / 3.0 * (head + self.tail)
    }

    /// Leading-cumulant lattice entropy `(π²/3) Σ_{l,l'∈A} C_{l-l'}` built from
    /// the inverse transform `C_r`.
    pub fn cumulant_entropy(&self, ell: usize) -> f64 {
        let mut s = ell as f64 * self.cl(0.0);
        for r in 1..ell {
            s += 2.0 * (ell - r) as f64 * self.cl(r as f64);
        }
        PI * PI / 3.0 * s
    }

    pub fn nodes(&self) -> (&[f64], &[f64]) {
        (&self.q, &self.cq)
    }
}

/// Inverse Fourier transform of the Gaussian `C_q` at one distance, by
/// adaptive quadrature.
pub fn gaussian_cl(l: f64, p: &TheoryParams) -> Result<f64> {
    p.validate()?;
    let pieces = ((l.abs() / 2.0).ceil() as usize).clamp(8, 4096);
    let breaks: Vec<f64> = (0..=pieces).map(|i| PI * i as f64 / pieces as f64).collect();
    let mut err = None;
    let r = integrate_breaks(
        |q| match gaussian_cq(q, p) {
            Ok(c) => c * (q * l).cos(),
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        },
        &breaks,
        QuadOptions::abs(1e-9),
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(r.value / PI)
}

/// Large-distance asymptote `-n(1-n) 2 l₀ / (π l²)`.
pub fn gaussian_cl_asymptote(l: f64, p: &TheoryParams) -> f64 {
    -p.n * (1.0 - p.n) * 2.0 * p.l0() / (PI * l * l)
}

/// Gaussian entanglement entropy at a single `ℓ` (see [`CqTable::entropy`]).
pub fn gaussian_entropy(ell: f64, p: &TheoryParams) -> Result<f64> {
    let t = CqTable::for_distances(p, ell.ceil() as usize)?;
    Ok(t.entropy(ell))
}

/// Leading logarithm `(4π/3) n(1-n) l₀ ln(ℓ/l₀)`.
pub fn gaussian_entropy_leading(ell: f64, p: &TheoryParams) -> f64 {
    4.0 * PI / 3.0 * p.n * (1.0 - p.n) * p.l0() * (ell / p.l0()).ln()
}

/// Renormalized `C_q/(g₀ q) ≈ 1 - 2ql₀ + ln(ql₀)/(4πβg₀)`, valid for `0 < ql₀ < 1`.
pub fn renormalized_cq_ratio(q: f64, p: &TheoryParams) -> Result<f64> {
    let u = q * p.l0();
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Domain(format!(
            "renormalized correlation needs 0 < q l₀ < 1, got {u}"
        )));
    }
    Ok(1.0 - 2.0 * u + u.ln() / (4.0 * PI * p.beta * p.g0()))
}

fn warn_if_short(ell: f64, p: &TheoryParams) {
    if ell <= p.l0() {
        log::warn!("ℓ = {ell} ≤ l₀ = {}: asymptotic expansion not valid", p.l0());
    }
}

/// RG-corrected entropy
/// `(2πg₀/3)[ln(ℓ/l₀) + s₀ + 7l₀²/ℓ² - ln²(ℓ/l₀)/(8πβg₀)]`.
pub fn predicted_entropy(ell: f64, p: &TheoryParams, s0: f64) -> f64 {
    warn_if_short(ell, p);
    let (l0, g0) = (p.l0(), p.g0());
    let lg = (ell / l0).ln();
    2.0 * PI * g0 / 3.0 * (lg + s0 + 7.0 * l0 * l0 / (ell * ell) - lg * lg / (8.0 * PI * p.beta * g0))
}

/// RG-corrected effective central charge
/// `2πg₀[1 - 14l₀²/ℓ² - ln(ℓ/l₀)/(4πβg₀)]`.
pub fn predicted_c_ell(ell: f64, p: &TheoryParams) -> f64 {
    warn_if_short(ell, p);
    let (l0, g0) = (p.l0(), p.g0());
    2.0 * PI * g0 * (1.0 - 14.0 * l0 * l0 / (ell * ell) - (ell / l0).ln() / (4.0 * PI * p.beta * g0))
}

/// RG-corrected mutual information for `ℓ_A = ℓ_C = ℓ` at cross ratio `x`.
pub fn predicted_i2(ell: f64, x: f64, p: &TheoryParams) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain(format!("cross ratio must lie in (0, 1), got {x}")));
    }
    warn_if_short(ell, p);
    let (l0, g0) = (p.l0(), p.g0());
    let lg = -(-x).ln_1p();
    Ok(2.0 * PI * g0 / 3.0
        * (lg * (1.0 - (ell / l0).ln() / (4.0 * PI * p.beta * g0))
            - 14.0 * (3.0 - x) * x * x * l0 * l0 / ((1.0 - x).powi(2) * ell * ell)))
}
