//! Orbital representation of a Gaussian trajectory.
//!
//! A pure Gaussian state with `N` particles is a Slater determinant of `N`
//! orthonormal orbitals, `D = Φ Φ†`. The orbitals are stored in the momentum
//! basis and in the interaction picture of the hopping Hamiltonian,
//!
//! `φ_j(x, t) = L^{-1/2} Σ_k e^{2πikx/L} e^{-iξ_k t} φ̃_j(k)`,
//!
//! so free evolution only advances the clock. A jump at site `m` needs the
//! amplitudes `a_j = φ_j(m, t)`, which cost `O(NL)`:
//!
//! * loss: the new state spans the orbitals orthogonal to `conj(a)` in
//!   coefficient space; a Householder reflection isolates that direction, which
//!   is then dropped;
//! * gain: the localized orbital `e_m` is orthogonalized against the current
//!   orbitals and appended;
//! * occupation: loss followed by appending `e_m`.
//!
//! Fermion counting only ever needs the occupation of one site per jump, so a
//! jump costs `O(NL)` instead of the `O(L² log L)` of propagating `D`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use faer::linalg::matmul::matmul;
use faer::{Accum, MatMut, MatRef, Par};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::density::SingleParticleDensityMatrix;
use super::jumps::EPS_JUMP;
use super::propagator::dispersion;
use super::JumpKind;
use crate::error::{Error, Result};

const REORTH_THRESHOLD: f64 = 1e-13;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone)]
pub struct SlaterEngine {
    l: usize,
    xi: Vec<f64>,
    time: f64,
    /// Orbital `j` occupies `orbitals[j*l .. (j+1)*l]` (momentum amplitudes).
    orbitals: Vec<Complex64>,
    inverse: Arc<dyn Fft<f64>>,
    jumps_since_reorth: usize,
    reorth_every: usize,
    /// Amplitudes of the last queried site, valid until the state changes.
    cache: RefCell<Option<(usize, Vec<Complex64>)>>,
}

impl std::fmt::Debug for SlaterEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SlaterEngine")
            .field("l", &self.l)
            .field("n", &self.n_orbitals())
            .field("time", &self.time)
            .finish()
    }
}

impl SlaterEngine {
    /// Classical configuration at time zero.
    pub fn classical(occupied: &[bool], j: f64) -> Self {
        let l = occupied.len();
        let mut planner = FftPlanner::new();
        let mut e = Self {
            l,
            xi: dispersion(l, j),
            time: 0.0,
            orbitals: Vec::new(),
            inverse: planner.plan_fft_inverse(l),
            jumps_since_reorth: 0,
            reorth_every: 256,
            cache: RefCell::new(None),
        };
        for (m, &o) in occupied.iter().enumerate() {
            if o {
                let v = e.site_vector(m);
                e.orbitals.extend_from_slice(&v);
            }
        }
        e
    }

    /// Build from a diagonal 0/1 density matrix.
    pub fn from_classical_density(d: &SingleParticleDensityMatrix, j: f64) -> Result<Self> {
        let l = d.len();
        let mut occ = Vec::with_capacity(l);
        for i in 0..l {
            let x = d.occupation(i);
            for k in 0..l {
                if k != i && d.get(i, k).norm() > 0.0 {
                    return Err(Error::InvalidParameter(
                        "orbital engine can only start from a classical configuration".into(),
                    ));
                }
            }
            if x == 1.0 {
                occ.push(true);
            } else if x == 0.0 {
                occ.push(false);
            } else {
                return Err(Error::InvalidParameter(format!(
                    "occupation {x} at site {i} is not 0 or 1"
                )));
            }
        }
        let mut e = Self::classical(&occ, j);
        e.time = d.time;
        Ok(e)
    }

    /// Check orthonormality every `k` jumps (default 256) and re-orthonormalize
    /// when it has drifted.
    pub fn with_reorthonormalization(mut self, k: usize) -> Self {
        self.reorth_every = k.max(1);
        self
    }

    pub fn len(&self) -> usize {
        self.l
    }

    pub fn is_empty(&self) -> bool {
        self.l == 0
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn n_orbitals(&self) -> usize {
        self.orbitals.len() / self.l.max(1)
    }

    pub fn advance(&mut self, tau: f64) -> Result<()> {
        if !(tau >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "evolution time must be non-negative, got {tau}"
            )));
        }
        if tau > 0.0 {
            self.time += tau;
            self.cache.replace(None);
        }
        Ok(())
    }

    /// Orbitals as the columns of an `L × N` matrix.
    fn phi(&self) -> MatRef<'_, Complex64> {
        MatRef::from_column_major_slice(&self.orbitals, self.l, self.n_orbitals())
    }

    fn phi_mut(&mut self) -> MatMut<'_, Complex64> {
        let (l, n) = (self.l, self.n_orbitals());
        MatMut::from_column_major_slice_mut(&mut self.orbitals, l, n)
    }

    /// Interaction-picture momentum amplitudes of the site orbital `e_m` at the
    /// current time: `L^{-1/2} e^{-2πikm/L} e^{iξ_k t}`.
    fn site_vector(&self, m: usize) -> Vec<Complex64> {
        let l = self.l;
        let norm = 1.0 / (l as f64).sqrt();
        (0..l)
            .map(|k| {
                let theta = -2.0 * PI * ((k * m) % l) as f64 / l as f64 + self.xi[k] * self.time;
                Complex64::from_polar(norm, theta)
            })
            .collect()
    }

    /// `a_j = ⟨e_m|φ_j⟩`, the real-space amplitudes of every orbital at site `m`.
    fn amplitudes(&self, m: usize) -> Vec<Complex64> {
        if let Some((site, a)) = &*self.cache.borrow() {
            if *site == m {
                return a.clone();
            }
        }
        let n = self.n_orbitals();
        let mut a = vec![ZERO; n];
        if n > 0 {
            let e = self.site_vector(m);
            let e = MatRef::from_column_major_slice(&e, self.l, 1);
            let out = MatMut::from_column_major_slice_mut(&mut a, n, 1);
            // a = Φᵀ conj(e)
            matmul(out, Accum::Replace, self.phi().transpose(), e.conjugate(), Complex64::new(1.0, 0.0), Par::Seq);
        }
        self.cache.replace(Some((m, a.clone())));
        a
    }

    pub fn occupation(&self, m: usize) -> f64 {
        self.amplitudes(m).iter().map(|a| a.norm_sqr()).sum()
    }

    /// Orbitals in real space at the current time, orbital-major.
    pub fn real_space_orbitals(&self) -> Vec<Complex64> {
        let l = self.l;
        let phase = self.phases();
        let mut out: Vec<Complex64> = self
            .orbitals
            .chunks_exact(l)
            .flat_map(|phi| phi.iter().zip(&phase).map(|(a, b)| a * b))
            .collect();
        if !out.is_empty() {
            self.inverse.process(&mut out);
        }
        out
    }

    fn phases(&self) -> Vec<Complex64> {
        let norm = 1.0 / (self.l as f64).sqrt();
        self.xi.iter().map(|&x| Complex64::from_polar(norm, -x * self.time)).collect()
    }

    pub fn occupations(&self) -> Vec<f64> {
        let l = self.l;
        let mut occ = vec![0.0; l];
        let phase = self.phases();
        let mut buf = vec![ZERO; l];
        let mut scratch = vec![ZERO; self.inverse.get_inplace_scratch_len()];
        for phi in self.orbitals.chunks_exact(l) {
            for ((b, a), p) in buf.iter_mut().zip(phi).zip(&phase) {
                *b = a * p;
            }
            self.inverse.process_with_scratch(&mut buf, &mut scratch);
            for (o, a) in occ.iter_mut().zip(&buf) {
                *o += a.norm_sqr();
            }
        }
        occ
    }

    pub fn density_matrix(&self) -> SingleParticleDensityMatrix {
        let l = self.l;
        let n = self.n_orbitals();
        let phi = self.real_space_orbitals();
        let mut data = vec![ZERO; l * l];
        if n > 0 {
            // Row-major D_{xy} = Σ_j φ_j(x) conj(φ_j(y)) is column-major conj(Φ) Φᵀ.
            let p = MatRef::from_column_major_slice(&phi, l, n);
            let out = MatMut::from_column_major_slice_mut(&mut data, l, l);
            matmul(out, Accum::Replace, p.conjugate(), p.transpose(), Complex64::new(1.0, 0.0), Par::Seq);
        }
        let mut d = SingleParticleDensityMatrix::from_row_major(l, data).expect("square");
        d.symmetrize();
        d.time = self.time;
        d
    }

    /// `max |Φ† Φ - 1|`, which bounds `max |D² - D|`.
    pub fn orthonormality_error(&self) -> f64 {
        let n = self.n_orbitals();
        if n == 0 {
            return 0.0;
        }
        let mut g = vec![ZERO; n * n];
        let gm = MatMut::from_column_major_slice_mut(&mut g, n, n);
        matmul(gm, Accum::Replace, self.phi().adjoint(), self.phi(), Complex64::new(1.0, 0.0), Par::Seq);
        let mut e: f64 = 0.0;
        for j in 0..n {
            for i in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                e = e.max((g[j * n + i] - target).norm());
            }
        }
        e
    }

    /// Replace the orbitals by the thin `Q` factor of their QR decomposition.
    pub fn reorthonormalize(&mut self) {
        let n = self.n_orbitals();
        if n > 0 {
            let q = self.phi().qr().compute_thin_Q();
            let l = self.l;
            for j in 0..n {
                for i in 0..l {
                    self.orbitals[j * l + i] = q[(i, j)];
                }
            }
        }
        self.jumps_since_reorth = 0;
        self.cache.replace(None);
    }

    fn remove_direction(&mut self, a: &[Complex64], w: f64) {
        let l = self.l;
        let n = a.len();
        // Unit vector x = conj(a)/|a|; orbitals Φ x carry the whole amplitude at m.
        let s = w.sqrt();
        let x: Vec<Complex64> = a.iter().map(|z| z.conj() / s).collect();
        let p = (0..n)
            .max_by(|&i, &j| x[i].norm().total_cmp(&x[j].norm()))
            .expect("at least one orbital");
        let phase = if x[p].norm() > 0.0 { x[p] / x[p].norm() } else { Complex64::new(1.0, 0.0) };
        // Householder vector v = x + e^{i arg x_p} e_p maps x to -e^{i arg x_p} e_p,
        // so the columns j ≠ p of H = 1 - 2vv†/|v|² are orthogonal to x.
        let mut v = x;
        v[p] += phase;
        let vn: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        let mut y = vec![ZERO; l];
        let vm = MatRef::from_column_major_slice(&v, n, 1);
        let one = Complex64::new(1.0, 0.0);
        matmul(MatMut::from_column_major_slice_mut(&mut y, l, 1), Accum::Replace, self.phi(), vm, one, Par::Seq);
        let ym = MatRef::from_column_major_slice(&y, l, 1);
        matmul(self.phi_mut(), Accum::Add, ym, vm.adjoint(), Complex64::new(-2.0 / vn, 0.0), Par::Seq);
        // Drop orbital p by moving the last one into its slot.
        let last = n - 1;
        if p != last {
            let (head, tail) = self.orbitals.split_at_mut(last * l);
            head[p * l..(p + 1) * l].copy_from_slice(&tail[..l]);
        }
        self.orbitals.truncate(last * l);
    }

    fn add_site_orbital(&mut self, m: usize, a: &[Complex64], w: f64) {
        let l = self.l;
        let n = self.n_orbitals();
        let one = Complex64::new(1.0, 0.0);
        let mut g = self.site_vector(m);
        if n > 0 {
            // g = e_m - Φ conj(a), then one more projection for numerical orthogonality
            let ac: Vec<Complex64> = a.iter().map(|z| z.conj()).collect();
            let gm = MatMut::from_column_major_slice_mut(&mut g, l, 1);
            matmul(gm, Accum::Add, self.phi(), MatRef::from_column_major_slice(&ac, n, 1), -one, Par::Seq);
            let mut p = vec![ZERO; n];
            let gr = MatRef::from_column_major_slice(&g, l, 1);
            matmul(MatMut::from_column_major_slice_mut(&mut p, n, 1), Accum::Replace, self.phi().adjoint(), gr, one, Par::Seq);
            let gm = MatMut::from_column_major_slice_mut(&mut g, l, 1);
            matmul(gm, Accum::Add, self.phi(), MatRef::from_column_major_slice(&p, n, 1), -one, Par::Seq);
        }
        let nrm = g.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        debug_assert!((nrm * nrm - w).abs() < 1e-6);
        g.iter_mut().for_each(|x| *x /= nrm);
        self.orbitals.extend_from_slice(&g);
    }

    pub fn apply_jump(&mut self, kind: JumpKind, m: usize) -> Result<f64> {
        let a = self.amplitudes(m);
        let occ: f64 = a.iter().map(|z| z.norm_sqr()).sum();
        let w = match kind {
            JumpKind::Loss | JumpKind::Occupation => occ,
            JumpKind::Gain => 1.0 - occ,
        };
        if w <= EPS_JUMP {
            return Err(Error::DegenerateJump {
                kind,
                site: m,
                weight: w,
            });
        }
        match kind {
            JumpKind::Loss => self.remove_direction(&a, w),
            JumpKind::Gain => self.add_site_orbital(m, &a, w),
            JumpKind::Occupation => {
                self.remove_direction(&a, w);
                let e = self.site_vector(m);
                self.orbitals.extend_from_slice(&e);
            }
        }
        self.cache.replace(None);
        self.jumps_since_reorth += 1;
        if self.jumps_since_reorth >= self.reorth_every {
            if self.orthonormality_error() > REORTH_THRESHOLD {
                self.reorthonormalize();
            }
            self.jumps_since_reorth = 0;
        }
        Ok(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Propagator;

    #[test]
    fn classical_density_round_trip() {
        let occ = [true, false, true, true, false, false];
        let e = SlaterEngine::classical(&occ, 1.0);
        let d = e.density_matrix();
        let expect = SingleParticleDensityMatrix::classical(&occ);
        assert!(d.max_abs_diff(&expect) < 1e-14);
        assert_eq!(e.n_orbitals(), 3);
    }

    #[test]
    fn free_evolution_matches_fft_propagation() {
        let occ: Vec<bool> = (0..10).map(|i| i % 3 == 0).collect();
        let mut e = SlaterEngine::classical(&occ, 0.8);
        e.advance(1.7).unwrap();
        let mut d = SingleParticleDensityMatrix::classical(&occ);
        d.evolve(&mut Propagator::new(10, 0.8), 1.7).unwrap();
        assert!(e.density_matrix().max_abs_diff(&d) < 1e-13);
        let occs = e.occupations();
        for (i, o) in occs.iter().enumerate() {
            assert!((o - d.occupation(i)).abs() < 1e-13);
            assert!((e.occupation(i) - d.occupation(i)).abs() < 1e-13);
        }
    }

    #[test]
    fn jumps_match_density_updates() {
        let l = 8;
        let occ: Vec<bool> = (0..l).map(|i| i % 2 == 0).collect();
        let mut e = SlaterEngine::classical(&occ, 1.0);
        let mut d = SingleParticleDensityMatrix::classical(&occ);
        let mut p = Propagator::new(l, 1.0);
        let script = [
            (JumpKind::Loss, 2),
            (JumpKind::Gain, 5),
            (JumpKind::Occupation, 1),
            (JumpKind::Gain, 0),
            (JumpKind::Loss, 7),
        ];
        for (i, &(k, m)) in script.iter().enumerate() {
            let tau = 0.31 + 0.1 * i as f64;
            e.advance(tau).unwrap();
            d.evolve(&mut p, tau).unwrap();
            let w1 = e.apply_jump(k, m).unwrap();
            let w2 = d.apply_jump(k, m).unwrap();
            assert!((w1 - w2).abs() < 1e-12);
            assert!(e.density_matrix().max_abs_diff(&d) < 1e-12, "after {k:?} at {m}");
            assert!(e.orthonormality_error() < 1e-12);
        }
    }
}
