//! Power-law fits, crossover detection and maximum location on ensemble
//! curves.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Sampled curve with standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub yerr: Vec<f64>,
}

impl Curve {
    pub fn new(x: Vec<f64>, y: Vec<f64>, yerr: Vec<f64>) -> Result<Self> {
        let c = Self { x, y, yerr };
        c.validate()?;
        Ok(c)
    }

    /// Curve without error bars.
    pub fn exact(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = y.len();
        Self::new(x, y, vec![0.0; n])
    }

    pub fn validate(&self) -> Result<()> {
        if self.x.len() != self.y.len() || self.x.len() != self.yerr.len() {
            return Err(invalid("curve arrays differ in length"));
        }
        if self.x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("curve abscissa must be strictly increasing"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Points with `lo ≤ x ≤ hi`.
    pub fn window(&self, lo: f64, hi: f64) -> Curve {
        let keep: Vec<usize> = (0..self.len()).filter(|&i| self.x[i] >= lo && self.x[i] <= hi).collect();
        Curve {
            x: keep.iter().map(|&i| self.x[i]).collect(),
            y: keep.iter().map(|&i| self.y[i]).collect(),
            yerr: keep.iter().map(|&i| self.yerr[i]).collect(),
        }
    }

    pub fn map_y(&self, f: impl Fn(f64) -> f64) -> Curve {
        Curve {
            x: self.x.clone(),
            y: self.y.iter().map(|&y| f(y)).collect(),
            yerr: self.yerr.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub exponent_err: f64,
    /// `y ≈ amplitude · x^exponent`.
    pub amplitude: f64,
    pub chi2_reduced: f64,
    pub n_points: usize,
}

impl PowerLawFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.amplitude * x.powf(self.exponent)
    }
}

/// Straight-line least squares of `(ln x, ln y)` over `lo ≤ x ≤ hi`.
///
/// Weights are `(y/σ)²` when every point in the window carries an error,
/// otherwise the fit is unweighted and the error comes from the residual
/// scatter. Weighted errors are inflated by `√χ²_red` when that exceeds 1.
pub fn power_law_fit(curve: &Curve, lo: f64, hi: f64) -> Result<PowerLawFit> {
    curve.validate()?;
    let w = curve.window(lo, hi);
    let n = w.len();
    if n < 3 {
        return Err(invalid(format!("power-law fit needs ≥ 3 points in [{lo}, {hi}], got {n}")));
    }
    if w.x.iter().chain(&w.y).any(|&v| !(v > 0.0)) {
        return Err(Error::Domain("power-law fit needs positive x and y in the window".into()));
    }
    let u: Vec<f64> = w.x.iter().map(|x| x.ln()).collect();
    let v: Vec<f64> = w.y.iter().map(|y| y.ln()).collect();
    let weighted = w.yerr.iter().all(|&e| e > 0.0);
    let wt: Vec<f64> = if weighted {
        w.y.iter().zip(&w.yerr).map(|(y, e)| (y / e).powi(2)).collect()
    } else {
        vec![1.0; n]
    };
    let s0: f64 = wt.iter().sum();
    let su: f64 = wt.iter().zip(&u).map(|(w, u)| w * u).sum();
    let sv: f64 = wt.iter().zip(&v).map(|(w, v)| w * v).sum();
    let (mu, mv) = (su / s0, sv / s0);
    let suu: f64 = wt.iter().zip(&u).map(|(w, u)| w * (u - mu).powi(2)).sum();
    let suv: f64 = (0..n).map(|i| wt[i] * (u[i] - mu) * (v[i] - mv)).sum();
    if !(suu > 0.0) {
        return Err(Error::Numeric("degenerate abscissa in power-law fit".into()));
    }
    let slope = suv / suu;
    let icept = mv - slope * mu;
    let chi2: f64 = (0..n).map(|i| wt[i] * (v[i] - icept - slope * u[i]).powi(2)).sum();
    let dof = (n - 2) as f64;
    let chi2_reduced = chi2 / dof;
    let var = if weighted {
        chi2_reduced.max(1.0) / suu
    } else {
        chi2_reduced / suu
    };
    Ok(PowerLawFit {
        exponent: slope,
        exponent_err: var.sqrt(),
        amplitude: icept.exp(),
        chi2_reduced,
        n_points: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Crossover {
    Found {
        l_c: f64,
        index: usize,
        /// Amplitude `A` of the tangent line `A/x²`.
        amplitude: f64,
    },
    BeyondWindow {
        amplitude: f64,
    },
}

impl Crossover {
    pub fn scale(&self) -> Option<f64> {
        match self {
            Crossover::Found { l_c, .. } => Some(*l_c),
            Crossover::BeyondWindow { .. } => None,
        }
    }
}

/// Relative drop of `y` below the tangent `A/x²` that marks the crossover.
pub const CROSSOVER_DEVIATION: f64 = 0.1;
/// Consecutive points required above the threshold.
pub const CROSSOVER_PERSISTENCE: usize = 3;

/// Scale beyond which `|y|` falls more than 10% below the `x⁻²` line
/// tangent to the data.
///
/// The tangent is `A/x²` with `A = max y x²` over `x ≥ x_min`. The crossover
/// is the first point after the tangency where `1 - y x²/A` exceeds 10% and
/// stays above it for three consecutive points, or for all remaining points
/// when fewer than three are left.
pub fn crossover_scale(curve: &Curve, x_min: f64) -> Result<Crossover> {
    curve.validate()?;
    let idx: Vec<usize> = (0..curve.len()).filter(|&i| curve.x[i] >= x_min).collect();
    if idx.len() < 2 {
        return Err(invalid(format!("crossover needs ≥ 2 points above {x_min}")));
    }
    let r: Vec<f64> = idx.iter().map(|&i| curve.y[i].abs() * curve.x[i] * curve.x[i]).collect();
    let (arg, amplitude) = r
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (k, v)| if v > acc.1 { (k, v) } else { acc });
    if !(amplitude > 0.0) {
        return Err(Error::Domain("crossover needs a non-vanishing curve".into()));
    }
    let above: Vec<bool> = r.iter().map(|v| 1.0 - v / amplitude > CROSSOVER_DEVIATION).collect();
    for k in arg + 1..above.len() {
        let end = (k + CROSSOVER_PERSISTENCE).min(above.len());
        if above[k..end].iter().all(|&a| a) {
            return Ok(Crossover::Found {
                l_c: curve.x[idx[k]],
                index: idx[k],
                amplitude,
            });
        }
    }
    Ok(Crossover::BeyondWindow { amplitude })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Maximum {
    pub x_max: f64,
    pub y_max: f64,
    pub x_err: f64,
    pub y_err: f64,
    pub index: usize,
    /// Grid argmax sits on the first or last point; the position is the
    /// grid point and no interpolation or bootstrap is done.
    pub at_boundary: bool,
}

/// Bootstrap resamples used by [`locate_maximum`].
pub const BOOTSTRAP_SAMPLES: usize = 200;

fn argmax(y: &[f64]) -> usize {
    y.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc })
        .0
}

/// Vertex of the parabola through three points of `(ln x, y)` around `i`.
fn parabolic_peak(lx: &[f64], y: &[f64], i: usize) -> (f64, f64) {
    let (x0, x1, x2) = (lx[i - 1], lx[i], lx[i + 1]);
    let (y0, y1, y2) = (y[i - 1], y[i], y[i + 1]);
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let a = (d12 - d01) / (x2 - x0);
    if !(a < 0.0) {
        return (x1, y1);
    }
    let b = d01 - a * (x0 + x1);
    let xv = (-b / (2.0 * a)).clamp(x0, x2);
    let yv = y1 + (xv - x1) * (d01 + a * (xv - x0));
    (xv, yv)
}

fn peak(lx: &[f64], y: &[f64]) -> (f64, f64, usize, bool) {
    let i = argmax(y);
    if i == 0 || i + 1 == y.len() {
        return (lx[i], y[i], i, true);
    }
    let (u, v) = parabolic_peak(lx, y, i);
    (u, v, i, false)
}

/// Maximum by parabolic interpolation in `(ln x, y)`, with errors from a
/// seeded parametric bootstrap over `yerr`.
pub fn locate_maximum(curve: &Curve, seed: u64) -> Result<Maximum> {
    curve.validate()?;
    if curve.len() < 3 {
        return Err(invalid("maximum location needs ≥ 3 points"));
    }
    if curve.x.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::Domain("maximum location uses ln x; x must be positive".into()));
    }
    let lx: Vec<f64> = curve.x.iter().map(|x| x.ln()).collect();
    let (u, v, index, at_boundary) = peak(&lx, &curve.y);
    if at_boundary {
        return Ok(Maximum {
            x_max: curve.x[index],
            y_max: v,
            x_err: f64::NAN,
            y_err: f64::NAN,
            index,
            at_boundary,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = Vec::with_capacity(BOOTSTRAP_SAMPLES);
    let mut ys = Vec::with_capacity(BOOTSTRAP_SAMPLES);
    let mut yb = curve.y.clone();
    for _ in 0..BOOTSTRAP_SAMPLES {
        for (k, t) in yb.iter_mut().enumerate() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *t = curve.y[k] + curve.yerr[k] * z;
        }
        let (bu, bv, _, _) = peak(&lx, &yb);
        xs.push(bu.exp());
        ys.push(bv);
    }
    let sd = |s: &[f64]| {
        let m = s.iter().sum::<f64>() / s.len() as f64;
        (s.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (s.len() - 1) as f64).sqrt()
    };
    Ok(Maximum {
        x_max: u.exp(),
        y_max: v,
        x_err: sd(&xs),
        y_err: sd(&ys),
        index,
        at_boundary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64)).collect()
    }

    #[test]
    fn exact_power_law() {
        let x = log_grid(1.0, 100.0, 20);
        let y = x.iter().map(|x| 3.0 * x.powi(-2)).collect();
        let f = power_law_fit(&Curve::exact(x, y).unwrap(), 0.0, f64::INFINITY).unwrap();
        assert!((f.exponent + 2.0).abs() < 1e-12);
        assert!((f.amplitude - 3.0).abs() < 1e-10);
        assert!(f.exponent_err < 1e-10);
    }

    #[test]
    fn noisy_power_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = log_grid(1.0, 1000.0, 40);
        let y: Vec<f64> = x
            .iter()
            .map(|x| {
                let z: f64 = StandardNormal.sample(&mut rng);
                x.powi(-2) * (1.0 + 0.01 * z)
            })
            .collect();
        let e = y.iter().map(|y| 0.01 * y).collect();
        let f = power_law_fit(&Curve::new(x, y, e).unwrap(), 0.0, f64::INFINITY).unwrap();
        assert!((f.exponent + 2.0).abs() < 3.0 * f.exponent_err, "{f:?}");
        assert!(f.exponent_err > 0.0 && f.exponent_err < 0.01);
    }

    #[test]
    fn fit_errors() {
        let c = Curve::exact(vec![1.0, 2.0], vec![1.0, 0.5]).unwrap();
        assert!(power_law_fit(&c, 0.0, 10.0).is_err());
        let c = Curve::exact(vec![1.0, 2.0, 3.0], vec![1.0, -0.5, 0.2]).unwrap();
        assert!(matches!(power_law_fit(&c, 0.0, 10.0), Err(Error::Domain(_))));
        assert!(Curve::exact(vec![1.0, 1.0], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn pure_inverse_square_has_no_crossover() {
        let x = log_grid(2.0, 500.0, 40);
        let y = x.iter().map(|x| 0.7 / (x * x)).collect();
        let c = crossover_scale(&Curve::exact(x, y).unwrap(), 0.0).unwrap();
        assert!(matches!(c, Crossover::BeyondWindow { .. }));
    }

    #[test]
    fn exponential_cutoff_crossover() {
        let mut prev = 0.0;
        for lambda in [20.0, 50.0, 120.0, 300.0] {
            let x = log_grid(2.0, 5000.0, 80);
            let y = x.iter().map(|x| (-x / lambda).exp() / (x * x)).collect();
            let c = crossover_scale(&Curve::exact(x, y).unwrap(), 0.0).unwrap();
            let lc = c.scale().unwrap();
            let exact = 2.0 + lambda * (10.0f64 / 9.0).ln();
            assert!((lc / exact - 1.0).abs() < 0.2, "Λ={lambda}: {lc} vs {exact}");
            assert!(lc > prev);
            prev = lc;
        }
    }

    #[test]
    fn crossover_stable_under_truncation() {
        let x = log_grid(2.0, 5000.0, 80);
        let y: Vec<f64> = x.iter().map(|x| (-x / 60.0).exp() / (x * x)).collect();
        let full = Curve::exact(x.clone(), y.clone()).unwrap();
        let c = crossover_scale(&full, 0.0).unwrap();
        let Crossover::Found { index, l_c, .. } = c else { panic!() };
        for cut in index + 1..x.len() {
            let t = Curve::exact(x[..cut].to_vec(), y[..cut].to_vec()).unwrap();
            assert_eq!(crossover_scale(&t, 0.0).unwrap().scale(), Some(l_c));
        }
        // rescaling y leaves it unchanged
        assert_eq!(crossover_scale(&full.map_y(|v| 17.0 * v), 0.0).unwrap().scale(), Some(l_c));
    }

    #[test]
    fn log_parabola_maximum() {
        let x = log_grid(0.5, 60.0, 33);
        let y = x.iter().map(|x| 1.0 - (x.ln() - 5f64.ln()).powi(2)).collect();
        let m = locate_maximum(&Curve::exact(x, y).unwrap(), 1).unwrap();
        assert!(!m.at_boundary);
        assert!((m.x_max / 5.0 - 1.0).abs() < 1e-3);
        assert!((m.y_max - 1.0).abs() < 1e-9);
        assert!(m.x_err < 1e-12);
    }

    #[test]
    fn boundary_maximum_flagged() {
        let x = log_grid(1.0, 10.0, 10);
        let y = x.iter().map(|x| -x).collect();
        let m = locate_maximum(&Curve::exact(x, y).unwrap(), 1).unwrap();
        assert!(m.at_boundary);
        assert_eq!(m.index, 0);
    }

    #[test]
    fn bootstrap_errors_scale_with_noise() {
        let x = log_grid(0.5, 60.0, 25);
        let y: Vec<f64> = x.iter().map(|x| 1.0 - (x.ln() - 5f64.ln()).powi(2)).collect();
        let run = |s: f64| {
            let e = vec![s; y.len()];
            locate_maximum(&Curve::new(x.clone(), y.clone(), e).unwrap(), 9).unwrap()
        };
        let (a, b) = (run(0.02), run(0.005));
        assert!(a.y_err > 2.0 * b.y_err, "{a:?} {b:?}");
        assert!(a.x_err > b.x_err);
        // invariance of the argmax under rescaling
        let c = Curve::exact(x.clone(), y.iter().map(|v| 3.0 * v).collect()).unwrap();
        let m = locate_maximum(&c, 1).unwrap();
        assert!((m.x_max / 5.0 - 1.0).abs() < 1e-3);
    }
}
