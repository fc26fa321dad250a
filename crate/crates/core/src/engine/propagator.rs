use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Tight-binding dispersion `ξ_k = -2J cos(2πk/L)`.
pub fn dispersion(l: usize, j: f64) -> Vec<f64> {
    (0..l)
        .map(|k| -2.0 * j * (2.0 * PI * k as f64 / l as f64).cos())
        .collect()
}

/// Conjugation `d ↦ U d U†` by the hopping propagator `U = e^{-iHτ}`, applied
/// through FFTs along rows.
///
/// `U` is circulant and symmetric (`ξ_k = ξ_{-k}`), so `U† = conj(U)` and the
/// row map `r ↦ U† r` turns a row-major `d` into `d U†`. Applying that map,
/// taking the conjugate transpose, and applying it again yields `U d U†`.
pub struct Propagator {
    l: usize,
    xi: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    phases: Vec<Complex64>,
}

impl std::fmt::Debug for Propagator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Propagator").field("l", &self.l).finish()
    }
}

impl Clone for Propagator {
    fn clone(&self) -> Self {
        Self {
            l: self.l,
            xi: self.xi.clone(),
            forward: Arc::clone(&self.forward),
            inverse: Arc::clone(&self.inverse),
            scratch: self.scratch.clone(),
            phases: self.phases.clone(),
        }
    }
}

impl Propagator {
    pub fn new(l: usize, j: f64) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(l);
        let inverse = planner.plan_fft_inverse(l);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            l,
            xi: dispersion(l, j),
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            phases: vec![Complex64::new(0.0, 0.0); l],
        }
    }

    pub fn len(&self) -> usize {
        self.l
    }

    pub fn is_empty(&self) -> bool {
        self.l == 0
    }

    pub fn dispersion(&self) -> &[f64] {
        &self.xi
    }

    /// Replace the row-major `l × l` matrix `d` by `U d U†` for `U = e^{-iHτ}`.
    pub fn conjugate(&mut self, d: &mut [Complex64], tau: f64) {
        let l = self.l;
        assert_eq!(d.len(), l * l);
        if tau == 0.0 {
            return;
        }
        let inv_l = 1.0 / l as f64;
        for (p, &x) in self.phases.iter_mut().zip(&self.xi) {
            *p = Complex64::from_polar(inv_l, x * tau);
        }
        self.rows_times_u_dagger(d);
        conjugate_transpose_in_place(d, l);
        self.rows_times_u_dagger(d);
    }

    /// Row-wise `r ↦ U† r`: forward FFT, multiply by `e^{+iξτ}/L`, inverse FFT.
    fn rows_times_u_dagger(&mut self, d: &mut [Complex64]) {
        self.forward.process_with_scratch(d, &mut self.scratch);
        for row in d.chunks_exact_mut(self.l) {
            for (x, p) in row.iter_mut().zip(&self.phases) {
                *x *= p;
            }
        }
        self.inverse.process_with_scratch(d, &mut self.scratch);
    }
}

pub(crate) fn conjugate_transpose_in_place(d: &mut [Complex64], l: usize) {
    for i in 0..l {
        d[i * l + i] = d[i * l + i].conj();
        for j in (i + 1)..l {
            let a = d[i * l + j];
            d[i * l + j] = d[j * l + i].conj();
            d[j * l + i] = a.conj();
        }
    }
}

/// Dense single-particle propagator `U_{l,l'} = (1/L) Σ_k e^{2πik(l-l')/L} e^{-iξ_k τ}`,
/// row-major. Intended for tests and small systems.
pub fn dense_propagator(l: usize, j: f64, tau: f64) -> Vec<Complex64> {
    let xi = dispersion(l, j);
    let mut u = vec![Complex64::new(0.0, 0.0); l * l];
    for a in 0..l {
        for b in 0..l {
            let mut s = Complex64::new(0.0, 0.0);
            for (k, &x) in xi.iter().enumerate() {
                let theta = 2.0 * PI * (k * ((a + l - b) % l)) as f64 / l as f64 - x * tau;
                s += Complex64::from_polar(1.0, theta);
            }
            u[a * l + b] = s / l as f64;
        }
    }
    u
}
