use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::jumps::EPS_JUMP;
use super::propagator::Propagator;
use super::JumpKind;
use crate::error::{invalid, Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `D_{l,l'} = ⟨c†_{l'} c_l⟩`, stored row-major, together with the trajectory
/// time it refers to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleParticleDensityMatrix {
    l: usize,
    data: Vec<Complex64>,
    pub time: f64,
}

impl SingleParticleDensityMatrix {
    /// Wrap a row-major `l × l` matrix.
    pub fn from_row_major(l: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != l * l {
            return Err(invalid(format!(
                "expected {} entries for L = {l}, got {}",
                l * l,
                data.len()
            )));
        }
        Ok(Self { l, data, time: 0.0 })
    }

    /// Diagonal 0/1 matrix for the given occupations.
    pub fn classical(occupied: &[bool]) -> Self {
        let l = occupied.len();
        let mut data = vec![ZERO; l * l];
        for (i, &o) in occupied.iter().enumerate() {
            if o {
                data[i * l + i] = ONE;
            }
        }
        Self { l, data, time: 0.0 }
    }

    /// Néel state with sites `0, 2, 4, …` occupied.
    pub fn neel(l: usize) -> Result<Self> {
        if l < 2 || l % 2 != 0 {
            return Err(invalid(format!("Néel state needs an even L ≥ 2, got {l}")));
        }
        let occ: Vec<bool> = (0..l).map(|i| i % 2 == 0).collect();
        Ok(Self::classical(&occ))
    }

    /// Uniformly random classical configuration with `n` particles.
    pub fn random_classical<R: Rng + ?Sized>(l: usize, n: usize, rng: &mut R) -> Result<Self> {
        if n > l {
            return Err(invalid(format!("cannot place {n} particles on {l} sites")));
        }
        let mut occ = vec![false; l];
        for i in sample(rng, l, n) {
            occ[i] = true;
        }
        Ok(Self::classical(&occ))
    }

    pub fn len(&self) -> usize {
        self.l
    }

    pub fn is_empty(&self) -> bool {
        self.l == 0
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.l + j]
    }

    pub fn occupation(&self, i: usize) -> f64 {
        self.data[i * self.l + i].re
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.l).map(|i| self.occupation(i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.l).map(|i| self.occupation(i)).sum()
    }

    /// Sub-matrix on an arbitrary index set (row-major, `|idx|²` entries).
    pub fn restrict(&self, idx: &[usize]) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(idx.len() * idx.len());
        for &a in idx {
            let row = &self.data[a * self.l..(a + 1) * self.l];
            out.extend(idx.iter().map(|&b| row[b]));
        }
        out
    }

    /// `max |d - d†|`.
    pub fn hermiticity_error(&self) -> f64 {
        let l = self.l;
        let mut e: f64 = 0.0;
        for i in 0..l {
            for j in i..l {
                e = e.max((self.data[i * l + j] - self.data[j * l + i].conj()).norm());
            }
        }
        e
    }

    /// `max |d² - d|`.
    pub fn purity_error(&self) -> f64 {
        let sq = crate::linalg::matmul(&self.data, &self.data, self.l, self.l, self.l);
        sq.iter()
            .zip(&self.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `d ← (d + d†)/2`.
    pub fn symmetrize(&mut self) {
        let l = self.l;
        for i in 0..l {
            self.data[i * l + i].im = 0.0;
            for j in (i + 1)..l {
                let a = 0.5 * (self.data[i * l + j] + self.data[j * l + i].conj());
                self.data[i * l + j] = a;
                self.data[j * l + i] = a.conj();
            }
        }
    }

    /// One McWeeny step `d ← 3d² - 2d³`, pulling eigenvalues that drifted off
    /// 0 and 1 back quadratically. A no-op on an exact projector.
    pub fn purify(&mut self) {
        let l = self.l;
        let d2 = crate::linalg::matmul(&self.data, &self.data, l, l, l);
        let d3 = crate::linalg::matmul(&d2, &self.data, l, l, l);
        for ((x, a), b) in self.data.iter_mut().zip(&d2).zip(&d3) {
            *x = 3.0 * a - 2.0 * b;
        }
        self.symmetrize();
    }

    /// Unitary hopping evolution for a duration `tau`.
    pub fn evolve(&mut self, prop: &mut Propagator, tau: f64) -> Result<()> {
        if !(tau >= 0.0) {
            return Err(invalid(format!("evolution time must be non-negative, got {tau}")));
        }
        if prop.len() != self.l {
            return Err(invalid("propagator size does not match the state"));
        }
        prop.conjugate(&mut self.data, tau);
        self.time += tau;
        Ok(())
    }

    /// `d' = d - d_{:m} d_{m:} / d_mm`; row and column `m` are pinned to zero.
    pub fn apply_loss(&mut self, m: usize) -> Result<f64> {
        let w = self.occupation(m);
        if w <= EPS_JUMP {
            return Err(Error::DegenerateJump {
                kind: JumpKind::Loss,
                site: m,
                weight: w,
            });
        }
        self.project_out(m, w);
        self.symmetrize();
        Ok(w)
    }

    /// `d' = d + (δ - d)_{:m} (δ - d)_{m:} / (1 - d_mm)`; row and column `m`
    /// become the unit vector `e_m`.
    pub fn apply_gain(&mut self, m: usize) -> Result<f64> {
        let l = self.l;
        let w = 1.0 - self.occupation(m);
        if w <= EPS_JUMP {
            return Err(Error::DegenerateJump {
                kind: JumpKind::Gain,
                site: m,
                weight: w,
            });
        }
        // h = e_m - d_{:m}; row m of (δ - d) is conj(h) by hermiticity.
        let h: Vec<Complex64> = (0..l)
            .map(|i| if i == m { ONE } else { ZERO } - self.data[i * l + m])
            .collect();
        let inv = 1.0 / w;
        for i in 0..l {
            let hi = h[i] * inv;
            let row = &mut self.data[i * l..(i + 1) * l];
            for (x, hj) in row.iter_mut().zip(&h) {
                *x += hi * hj.conj();
            }
        }
        for i in 0..l {
            self.data[i * l + m] = ZERO;
            self.data[m * l + i] = ZERO;
        }
        self.data[m * l + m] = ONE;
        self.symmetrize();
        Ok(w)
    }

    /// Projection onto site `m` occupied: loss update followed by `+ e_m e_m†`.
    pub fn apply_occupation(&mut self, m: usize) -> Result<f64> {
        let w = self.occupation(m);
        if w <= EPS_JUMP {
            return Err(Error::DegenerateJump {
                kind: JumpKind::Occupation,
                site: m,
                weight: w,
            });
        }
        self.project_out(m, w);
        self.data[m * self.l + m] = ONE;
        self.symmetrize();
        Ok(w)
    }

    pub fn apply_jump(&mut self, kind: JumpKind, m: usize) -> Result<f64> {
        match kind {
            JumpKind::Loss => self.apply_loss(m),
            JumpKind::Gain => self.apply_gain(m),
            JumpKind::Occupation => self.apply_occupation(m),
        }
    }

    fn project_out(&mut self, m: usize, w: f64) {
        let l = self.l;
        let col: Vec<Complex64> = (0..l).map(|i| self.data[i * l + m]).collect();
        let inv = 1.0 / w;
        for i in 0..l {
            let ci = col[i] * inv;
            let row = &mut self.data[i * l..(i + 1) * l];
            for (x, cj) in row.iter_mut().zip(&col) {
                *x -= ci * cj.conj();
            }
        }
        for i in 0..l {
            self.data[i * l + m] = ZERO;
            self.data[m * l + i] = ZERO;
        }
    }
}
