//! Exact many-body trajectories in the full Fock space, for `L ≤ 10`.
//!
//! Basis states are bit strings with bit `j` the occupation of site `j`
//! (site 0 is the least significant bit). Operators are ordered by site, so
//! `c_j |n⟩ = (-1)^{n_0 + … + n_{j-1}} |n - e_j⟩`. The hopping Hamiltonian
//! conserves particle number and is diagonalized once per sector.
//!
//! For `L = 2` the two periodic bonds connect the same pair of sites, so the
//! hopping amplitude is doubled, in agreement with `ξ_k = -2J cos(2πk/L)`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::engine::{
    DensityEngine, Engine, JumpEvent, JumpKind, ModelKind, SingleParticleDensityMatrix, SlaterEngine, Stepper, EPS_JUMP,
};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, symmetric_eigen};

pub const MAX_SITES: usize = 10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn sign_below(bits: usize, j: usize) -> f64 {
    if (bits & ((1 << j) - 1)).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `c_j |bits⟩`, or `None` if site `j` is empty.
pub fn annihilate(bits: usize, j: usize) -> Option<(usize, f64)> {
    if bits & (1 << j) == 0 {
        None
    } else {
        Some((bits ^ (1 << j), sign_below(bits, j)))
    }
}

/// `c†_j |bits⟩`, or `None` if site `j` is occupied.
pub fn create(bits: usize, j: usize) -> Option<(usize, f64)> {
    if bits & (1 << j) != 0 {
        None
    } else {
        Some((bits | (1 << j), sign_below(bits, j)))
    }
}

#[derive(Debug)]
struct Sector {
    states: Vec<usize>,
    energies: Vec<f64>,
    /// Eigenvectors as columns, row-major `dim × dim`.
    vectors: Vec<f64>,
}

/// Precomputed spectral data of the hopping Hamiltonian on `L` sites.
#[derive(Debug)]
pub struct FockOracle {
    l: usize,
    j: f64,
    sectors: Vec<Sector>,
}

impl FockOracle {
    pub fn new(l: usize, j: f64) -> Result<Self> {
        if l > MAX_SITES {
            return Err(Error::Capacity(format!(
                "Fock-space oracle supports at most {MAX_SITES} sites, got {l}"
            )));
        }
        if l == 0 {
            return Err(Error::InvalidParameter("empty lattice".into()));
        }
        let dim = 1usize << l;
        let mut sectors = Vec::with_capacity(l + 1);
        for n in 0..=l {
            let states: Vec<usize> = (0..dim).filter(|b| b.count_ones() as usize == n).collect();
            let d = states.len();
            let mut index = vec![usize::MAX; dim];
            for (i, &s) in states.iter().enumerate() {
                index[s] = i;
            }
            let mut h = vec![0.0; d * d];
            for (col, &s) in states.iter().enumerate() {
                for a in 0..l {
                    let b = (a + 1) % l;
                    for (x, y) in [(a, b), (b, a)] {
                        // -J c†_x c_y
                        if let Some((s1, g1)) = annihilate(s, y) {
                            if let Some((s2, g2)) = create(s1, x) {
                                h[index[s2] * d + col] += -j * g1 * g2;
                            }
                        }
                    }
                }
            }
            let (energies, vectors) = symmetric_eigen(&h, d)?;
            sectors.push(Sector {
                states,
                energies,
                vectors,
            });
        }
        Ok(Self { l, j, sectors })
    }

    pub fn len(&self) -> usize {
        self.l
    }

    pub fn is_empty(&self) -> bool {
        self.l == 0
    }

    pub fn hopping(&self) -> f64 {
        self.j
    }

    /// Apply `e^{-iHτ}` in place.
    pub fn evolve(&self, state: &mut FockState, tau: f64) -> Result<()> {
        if !(tau >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "evolution time must be non-negative, got {tau}"
            )));
        }
        if state.amplitudes.len() != 1 << self.l {
            return Err(Error::InvalidParameter("state dimension mismatch".into()));
        }
        if tau == 0.0 {
            return Ok(());
        }
        for sec in &self.sectors {
            let d = sec.states.len();
            let psi: Vec<Complex64> = sec.states.iter().map(|&s| state.amplitudes[s]).collect();
            if psi.iter().all(|z| *z == ZERO) {
                continue;
            }
            // coefficients in the eigenbasis, phase, back
            let mut coef = vec![ZERO; d];
            for (k, c) in coef.iter_mut().enumerate() {
                let mut acc = ZERO;
                for (i, p) in psi.iter().enumerate() {
                    acc += p * sec.vectors[i * d + k];
                }
                *c = acc * Complex64::from_polar(1.0, -sec.energies[k] * tau);
            }
            for (i, &s) in sec.states.iter().enumerate() {
                let mut acc = ZERO;
                for (k, c) in coef.iter().enumerate() {
                    acc += c * sec.vectors[i * d + k];
                }
                state.amplitudes[s] = acc;
            }
        }
        state.time += tau;
        Ok(())
    }
}

/// Many-body state vector over all `2^L` occupation configurations.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    pub l: usize,
    pub amplitudes: Vec<Complex64>,
    pub time: f64,
}

impl FockState {
    pub fn basis(l: usize, bits: usize) -> Result<Self> {
        if l > MAX_SITES {
            return Err(Error::Capacity(format!("at most {MAX_SITES} sites, got {l}")));
        }
        let mut amplitudes = vec![ZERO; 1 << l];
        amplitudes[bits] = Complex64::new(1.0, 0.0);
        Ok(Self {
            l,
            amplitudes,
            time: 0.0,
        })
    }

    /// Basis state with the given sites occupied.
    pub fn classical(occupied: &[bool]) -> Result<Self> {
        let bits = occupied
            .iter()
            .enumerate()
            .filter(|(_, &o)| o)
            .fold(0usize, |b, (i, _)| b | (1 << i));
        Self::basis(occupied.len(), bits)
    }

    pub fn from_amplitudes(l: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != 1 << l {
            return Err(Error::InvalidParameter("amplitude vector must have 2^L entries".into()));
        }
        Ok(Self {
            l,
            amplitudes,
            time: 0.0,
        })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn occupation(&self, site: usize) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(b, _)| b & (1 << site) != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    pub fn mean_particle_number(&self) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(b, a)| b.count_ones() as f64 * a.norm_sqr())
            .sum()
    }

    /// Apply `c_m`, `c†_m` or `n_m`, renormalize, and return the squared norm
    /// before normalization.
    pub fn apply_jump(&mut self, kind: JumpKind, m: usize) -> Result<f64> {
        let mut out = vec![ZERO; self.amplitudes.len()];
        for (b, &a) in self.amplitudes.iter().enumerate() {
            if a == ZERO {
                continue;
            }
            let r = match kind {
                JumpKind::Loss => annihilate(b, m),
                JumpKind::Gain => create(b, m),
                JumpKind::Occupation => (b & (1 << m) != 0).then_some((b, 1.0)),
            };
            if let Some((b2, s)) = r {
                out[b2] += a * s;
            }
        }
        let w: f64 = out.iter().map(|a| a.norm_sqr()).sum();
        if w <= EPS_JUMP {
            return Err(Error::DegenerateJump {
                kind,
                site: m,
                weight: w,
            });
        }
        let inv = 1.0 / w.sqrt();
        out.iter_mut().for_each(|a| *a *= inv);
        self.amplitudes = out;
        Ok(w)
    }

    /// `D_{l,l'} = ⟨c†_{l'} c_l⟩`.
    pub fn density_matrix(&self) -> SingleParticleDensityMatrix {
        let l = self.l;
        let mut d = vec![ZERO; l * l];
        for (b, &a) in self.amplitudes.iter().enumerate() {
            if a == ZERO {
                continue;
            }
            for x in 0..l {
                let Some((b1, s1)) = annihilate(b, x) else { continue };
                for y in 0..l {
                    if let Some((b2, s2)) = create(b1, y) {
                        // ⟨ψ| c†_y c_x |ψ⟩ contributes to D_{x,y}
                        d[x * l + y] += self.amplitudes[b2].conj() * a * (s1 * s2);
                    }
                }
            }
        }
        let mut out = SingleParticleDensityMatrix::from_row_major(l, d).expect("square");
        out.time = self.time;
        out
    }

    /// Von Neumann entropy of the first `ell` sites from the many-body reduced
    /// density matrix.
    pub fn entanglement_entropy(&self, ell: usize) -> Result<f64> {
        if ell > self.l {
            return Err(Error::InvalidParameter("subsystem larger than system".into()));
        }
        let da = 1usize << ell;
        let db = 1usize << (self.l - ell);
        // ρ_A = M M†, M_{a,b} = ψ(a + 2^ℓ b)
        let mut rho = vec![ZERO; da * da];
        for a1 in 0..da {
            for a2 in 0..da {
                let mut acc = ZERO;
                for b in 0..db {
                    acc += self.amplitudes[a1 + da * b] * self.amplitudes[a2 + da * b].conj();
                }
                rho[a1 * da + a2] = acc;
            }
        }
        let ev = hermitian_eigenvalues(&rho, da)?;
        Ok(ev
            .iter()
            .filter(|&&p| p > 1e-300)
            .map(|&p| -p * p.ln())
            .sum())
    }
}

/// Oracle state bundled with its spectral data, usable wherever an
/// [`Engine`] is expected.
#[derive(Debug, Clone)]
pub struct FockEngine {
    pub oracle: Arc<FockOracle>,
    pub state: FockState,
    n: usize,
}

impl FockEngine {
    pub fn new(oracle: Arc<FockOracle>, state: FockState) -> Self {
        let n = state.mean_particle_number().round() as usize;
        Self { oracle, state, n }
    }
}

impl Engine for FockEngine {
    fn size(&self) -> usize {
        self.state.l
    }
    fn time(&self) -> f64 {
        self.state.time
    }
    fn advance(&mut self, tau: f64) -> Result<()> {
        self.oracle.evolve(&mut self.state, tau)
    }
    fn occupation(&self, site: usize) -> f64 {
        self.state.occupation(site)
    }
    fn occupations(&self) -> Vec<f64> {
        (0..self.state.l).map(|s| self.state.occupation(s)).collect()
    }
    fn particle_number(&self) -> usize {
        self.n
    }
    fn apply_jump(&mut self, kind: JumpKind, site: usize) -> Result<f64> {
        let w = self.state.apply_jump(kind, site)?;
        match kind {
            JumpKind::Loss => self.n -= 1,
            JumpKind::Gain => self.n += 1,
            JumpKind::Occupation => {}
        }
        Ok(w)
    }
    fn density_matrix(&self) -> SingleParticleDensityMatrix {
        self.state.density_matrix()
    }
    fn invariant_errors(&self) -> (f64, f64, f64) {
        let d = self.state.density_matrix();
        (
            d.purity_error(),
            d.hermiticity_error(),
            (d.trace() - self.n as f64).abs(),
        )
    }
}

/// Outcome of running the oracle and both Gaussian engines in lockstep.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LockstepReport {
    pub l: usize,
    pub model: ModelKind,
    pub gamma: f64,
    pub seed: u64,
    pub n_jumps: usize,
    /// Index of the first jump whose site, kind or time differs.
    pub first_mismatch: Option<usize>,
    pub max_density_diff: f64,
    pub max_weight_diff: f64,
    pub max_trace_drift: f64,
}

impl LockstepReport {
    pub fn passed(&self, tolerance: f64) -> bool {
        self.first_mismatch.is_none() && self.max_density_diff < tolerance
    }
}

/// Step the oracle, the density engine and the orbital engine from the Néel
/// state with one seed, comparing jump records and density matrices after
/// every jump.
pub fn lockstep(l: usize, j: f64, model: ModelKind, gamma: f64, n_jumps: usize, seed: u64) -> Result<LockstepReport> {
    let oracle = Arc::new(FockOracle::new(l, j)?);
    let occ: Vec<bool> = (0..l).map(|i| i % 2 == 0).collect();
    let mut fock = FockEngine::new(oracle, FockState::classical(&occ)?);
    let mut dens = DensityEngine::new(SingleParticleDensityMatrix::classical(&occ), j);
    let mut orb = SlaterEngine::classical(&occ, j);
    let mut sf = Stepper::new(&mut fock, model, gamma, seed).with_checks(0, 1.0);
    let mut sd = Stepper::new(&mut dens, model, gamma, seed).with_checks(0, 1.0);
    let mut so = Stepper::new(&mut orb, model, gamma, seed).with_checks(0, 1.0);
    let mut report = LockstepReport {
        l,
        model,
        gamma,
        seed,
        n_jumps: 0,
        first_mismatch: None,
        max_density_diff: 0.0,
        max_weight_diff: 0.0,
        max_trace_drift: 0.0,
    };
    let same = |a: &Option<JumpEvent>, b: &Option<JumpEvent>| match (a, b) {
        (Some(a), Some(b)) => a.site == b.site && a.kind == b.kind && a.time == b.time,
        (None, None) => true,
        _ => false,
    };
    for k in 0..n_jumps {
        let a = sf.step()?;
        let b = sd.step()?;
        let c = so.step()?;
        if !same(&a, &b) || !same(&a, &c) {
            report.first_mismatch = Some(k);
            break;
        }
        if a.is_none() {
            break;
        }
        report.n_jumps += 1;
        report.max_weight_diff = report
            .max_weight_diff
            .max((sf.last_weight - sd.last_weight).abs())
            .max((sf.last_weight - so.last_weight).abs());
        let df = sf.engine.density_matrix();
        report.max_density_diff = report
            .max_density_diff
            .max(df.max_abs_diff(&sd.engine.density_matrix()))
            .max(df.max_abs_diff(&so.engine.density_matrix()));
        for (_, _, drift) in [
            sf.engine.invariant_errors(),
            sd.engine.invariant_errors(),
            so.engine.invariant_errors(),
        ] {
            report.max_trace_drift = report.max_trace_drift.max(drift);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{dense_propagator, Propagator};

    #[test]
    fn capacity_limit() {
        assert!(matches!(FockOracle::new(11, 1.0), Err(Error::Capacity(_))));
        assert!(matches!(FockState::basis(11, 0), Err(Error::Capacity(_))));
    }

    #[test]
    fn two_site_examples() {
        // |10⟩: site 0 occupied
        let mut s = FockState::classical(&[true, false]).unwrap();
        let d = s.density_matrix();
        assert_eq!(d.diagonal(), vec![1.0, 0.0]);
        let w = s.apply_jump(JumpKind::Loss, 0).unwrap();
        assert_eq!(w, 1.0);
        assert_eq!(s.amplitudes[0], Complex64::new(1.0, 0.0));
        let mut t = FockState::classical(&[true, false]).unwrap();
        assert!(matches!(t.apply_jump(JumpKind::Gain, 0), Err(Error::DegenerateJump { .. })));

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let sup = FockState::from_amplitudes(
            2,
            vec![ZERO, Complex64::new(h, 0.0), Complex64::new(h, 0.0), ZERO],
        )
        .unwrap();
        let d = sup.density_matrix();
        assert!((d.trace() - 1.0).abs() < 1e-15);
        assert!((d.get(0, 1).norm() - 0.5).abs() < 1e-15);
        assert!((sup.entanglement_entropy(1).unwrap() - 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn single_particle_sector_matches_propagator() {
        let l = 4;
        let oracle = FockOracle::new(l, 1.0).unwrap();
        let tau = 0.9;
        let u = dense_propagator(l, 1.0, tau);
        for start in 0..l {
            let mut s = FockState::basis(l, 1 << start).unwrap();
            oracle.evolve(&mut s, tau).unwrap();
            for x in 0..l {
                assert!((s.amplitudes[1 << x] - u[x * l + start]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn neel_occupations_match_gaussian_evolution() {
        let l = 6;
        let oracle = FockOracle::new(l, 1.0).unwrap();
        let occ: Vec<bool> = (0..l).map(|i| i % 2 == 0).collect();
        let mut s = FockState::classical(&occ).unwrap();
        oracle.evolve(&mut s, 0.7).unwrap();
        let mut d = SingleParticleDensityMatrix::classical(&occ);
        d.evolve(&mut Propagator::new(l, 1.0), 0.7).unwrap();
        assert!(s.density_matrix().max_abs_diff(&d) < 1e-10);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn jump_weights_equal_wick_values() {
        let l = 6;
        let oracle = FockOracle::new(l, 1.0).unwrap();
        let occ: Vec<bool> = (0..l).map(|i| i % 2 == 0).collect();
        let mut s = FockState::classical(&occ).unwrap();
        oracle.evolve(&mut s, 0.5).unwrap();
        let d = s.density_matrix();
        for m in 0..l {
            let mut a = s.clone();
            assert!((a.apply_jump(JumpKind::Loss, m).unwrap() - d.occupation(m)).abs() < 1e-12);
            let mut b = s.clone();
            assert!(
                (b.apply_jump(JumpKind::Gain, m).unwrap() - (1.0 - d.occupation(m))).abs() < 1e-12
            );
            assert!(a.density_matrix().purity_error() < 1e-12);
            assert!(b.density_matrix().purity_error() < 1e-12);
        }
    }
}
