//! Equal-time observables of Gaussian snapshots: density correlations,
//! entanglement entropies, particle-number cumulants, mutual information and
//! the effective central charge.
//!
//! Composite quantities (`c_ℓ`, `I₂`, `I₃`) are linear in the entropies, so
//! combining trajectory-averaged entropies and averaging per-snapshot
//! combinations give the same mean. Error bars always come from
//! per-trajectory block means because snapshots of one trajectory are
//! correlated in time.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::engine::SingleParticleDensityMatrix;
use crate::error::{Error, Result};
use crate::linalg::hermitian_eigenvalues;

/// Eigenvalue clamp applied before `x ln x`.
pub const EPS_ENTROPY: f64 = 1e-12;

/// Mean, standard error and number of independent samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStatistic {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: usize,
}

impl EnsembleStatistic {
    /// Statistic of independent samples (typically per-trajectory means).
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                stderr: f64::NAN,
                n_samples: 0,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            stderr,
            n_samples: n,
        }
    }
}

/// Component-wise statistics of per-trajectory block vectors.
pub fn block_statistics(blocks: &[Vec<f64>]) -> Vec<EnsembleStatistic> {
    let m = blocks.first().map_or(0, |b| b.len());
    (0..m)
        .map(|i| {
            let xs: Vec<f64> = blocks.iter().map(|b| b[i]).collect();
            EnsembleStatistic::from_samples(&xs)
        })
        .collect()
}

/// Three consecutive intervals `A`, `B`, `C` on the ring starting at `origin`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentLayout {
    pub ell_a: usize,
    pub ell_b: usize,
    pub ell_c: usize,
    pub origin: usize,
    pub l: usize,
}

impl SegmentLayout {
    pub fn new(ell_a: usize, ell_b: usize, ell_c: usize, origin: usize, l: usize) -> Result<Self> {
        let s = Self {
            ell_a,
            ell_b,
            ell_c,
            origin,
            l,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ell_a + self.ell_b + self.ell_c > self.l {
            return Err(Error::InvalidParameter(format!(
                "regions of total length {} overlap on a ring of {} sites",
                self.ell_a + self.ell_b + self.ell_c,
                self.l
            )));
        }
        if self.ell_a == 0 || self.ell_c == 0 {
            return Err(Error::InvalidParameter("regions A and C must be non-empty".into()));
        }
        Ok(())
    }

    /// Same layout shifted to another origin.
    pub fn at(&self, origin: usize) -> Self {
        Self { origin, ..*self }
    }

    fn range(&self, start: usize, len: usize) -> Vec<usize> {
        (0..len).map(|i| (self.origin + start + i) % self.l).collect()
    }

    pub fn a(&self) -> Vec<usize> {
        self.range(0, self.ell_a)
    }
    pub fn b(&self) -> Vec<usize> {
        self.range(self.ell_a, self.ell_b)
    }
    pub fn c(&self) -> Vec<usize> {
        self.range(self.ell_a + self.ell_b, self.ell_c)
    }
    pub fn ab(&self) -> Vec<usize> {
        self.range(0, self.ell_a + self.ell_b)
    }
    pub fn bc(&self) -> Vec<usize> {
        self.range(self.ell_a, self.ell_b + self.ell_c)
    }
    pub fn abc(&self) -> Vec<usize> {
        self.range(0, self.ell_a + self.ell_b + self.ell_c)
    }
    pub fn ac(&self) -> Vec<usize> {
        let mut v = self.a();
        v.extend(self.c());
        v
    }
}

/// Position-averaged `δ_{l,0}/2 - |D_{x+l,x}|²` for `l = 0..=L/2` from one
/// snapshot.
pub fn correlation_profile(d: &SingleParticleDensityMatrix) -> Vec<f64> {
    let l = d.len();
    (0..=l / 2)
        .map(|r| {
            let s: f64 = (0..l).map(|x| d.get((x + r) % l, x).norm_sqr()).sum();
            let delta = if r == 0 { 0.5 } else { 0.0 };
            delta - s / l as f64
        })
        .collect()
}

/// Connected density correlation `C_l`, `l = 0..=L/2`, from snapshots grouped
/// by trajectory. Requires half filling on average (the `δ/2` term).
pub fn connected_density_correlation(
    trajectories: &[Vec<SingleParticleDensityMatrix>],
) -> Result<Vec<EnsembleStatistic>> {
    let mut blocks = Vec::with_capacity(trajectories.len());
    let mut filling = 0.0;
    let mut count = 0usize;
    for snaps in trajectories {
        if snaps.is_empty() {
            continue;
        }
        let mut acc = vec![0.0; snaps[0].len() / 2 + 1];
        for d in snaps {
            for (a, c) in acc.iter_mut().zip(correlation_profile(d)) {
                *a += c;
            }
            filling += d.trace() / d.len() as f64;
            count += 1;
        }
        acc.iter_mut().for_each(|a| *a /= snaps.len() as f64);
        blocks.push(acc);
    }
    if count == 0 {
        return Err(Error::InvalidParameter("no snapshots".into()));
    }
    let filling = filling / count as f64;
    if (filling - 0.5).abs() > 0.05 {
        return Err(Error::Domain(format!(
            "density correlation assumes half filling, mean filling is {filling:.4}"
        )));
    }
    Ok(block_statistics(&blocks))
}

/// Eigenvalues of `D` restricted to `sites`.
pub fn entanglement_spectrum(d: &SingleParticleDensityMatrix, sites: &[usize]) -> Result<Vec<f64>> {
    if sites.is_empty() {
        return Err(Error::InvalidParameter("empty subsystem".into()));
    }
    let block = d.restrict(sites);
    let n = sites.len();
    let mut herm: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            herm = herm.max((block[i * n + j] - block[j * n + i].conj()).norm());
        }
    }
    if herm > 1e-8 {
        return Err(Error::InvalidParameter(format!(
            "reduced density matrix is not Hermitian (defect {herm:e})"
        )));
    }
    hermitian_eigenvalues(&block, n)
}

/// `-Σ [λ ln λ + (1-λ) ln(1-λ)]` with `λ` clamped to `[ε, 1-ε]`.
pub fn entropy_from_spectrum(lambda: &[f64]) -> f64 {
    lambda
        .iter()
        .map(|&x| {
            let x = x.clamp(EPS_ENTROPY, 1.0 - EPS_ENTROPY);
            -(x * x.ln() + (1.0 - x) * (-x).ln_1p())
        })
        .sum()
}

/// Von Neumann entanglement entropy (nats) of an arbitrary set of sites.
pub fn subsystem_entropy(d: &SingleParticleDensityMatrix, sites: &[usize]) -> Result<f64> {
    Ok(entropy_from_spectrum(&entanglement_spectrum(d, sites)?))
}

/// Entropy of the contiguous interval `[origin, origin + ell)`.
pub fn interval_entropy(d: &SingleParticleDensityMatrix, origin: usize, ell: usize) -> Result<f64> {
    let l = d.len();
    let sites: Vec<usize> = (0..ell).map(|i| (origin + i) % l).collect();
    subsystem_entropy(d, &sites)
}

/// Second cumulant of the particle number in `sites`:
/// `Σ_{l,l'} (δ_{ll'} d_ll - |d_{ll'}|²)`.
pub fn second_cumulant(d: &SingleParticleDensityMatrix, sites: &[usize]) -> f64 {
    let mut s = 0.0;
    for &a in sites {
        s += d.occupation(a);
        for &b in sites {
            s -= d.get(a, b).norm_sqr();
        }
    }
    s
}

/// Polynomial coefficients (in `λ`) of the first `kmax` Bernoulli cumulants,
/// from `κ_1 = λ` and `κ_{k+1} = λ(1-λ) dκ_k/dλ`.
fn bernoulli_cumulant_polys(kmax: usize) -> Vec<Vec<f64>> {
    let mut polys = vec![vec![0.0, 1.0]];
    for _ in 1..kmax {
        let p = polys.last().expect("non-empty");
        let dp: Vec<f64> = (1..p.len()).map(|i| i as f64 * p[i]).collect();
        // multiply by λ - λ²
        let mut q = vec![0.0; dp.len() + 2];
        for (i, c) in dp.iter().enumerate() {
            q[i + 1] += c;
            q[i + 2] -= c;
        }
        polys.push(q);
    }
    polys
}

/// Cumulants `C^{(1)}, …, C^{(kmax)}` of the subsystem particle number from the
/// entanglement spectrum (independent Bernoulli modes).
pub fn cumulants_from_spectrum(lambda: &[f64], kmax: usize) -> Vec<f64> {
    let polys = bernoulli_cumulant_polys(kmax);
    polys
        .iter()
        .map(|p| {
            lambda
                .iter()
                .map(|&x| p.iter().rev().fold(0.0, |acc, c| acc * x + c))
                .sum()
        })
        .collect()
}

/// `ζ(s)` for real `s > 1` by direct summation with an Euler–Maclaurin tail.
pub fn zeta(s: f64) -> f64 {
    let n = 64usize;
    let mut sum: f64 = (1..n).map(|k| (k as f64).powf(-s)).sum();
    let nf = n as f64;
    sum += nf.powf(1.0 - s) / (s - 1.0) + 0.5 * nf.powf(-s) + s / 12.0 * nf.powf(-s - 1.0)
        - s * (s + 1.0) * (s + 2.0) / 720.0 * nf.powf(-s - 3.0);
    sum
}

/// Partial sums of `S = Σ_k 2ζ(2k) C^{(2k)}` for `k = 1..=kmax`.
///
/// The series is only asymptotic. The cumulants grow factorially with order,
/// so for any eigenvalue strictly inside `(0, 1)` the partial sums eventually
/// diverge; the first few terms are what carries information.
pub fn entropy_cumulant_series(lambda: &[f64], kmax: usize) -> Vec<f64> {
    let cum = cumulants_from_spectrum(lambda, 2 * kmax);
    let mut acc = 0.0;
    (1..=kmax)
        .map(|k| {
            acc += 2.0 * zeta(2.0 * k as f64) * cum[2 * k - 1];
            acc
        })
        .collect()
}

/// Chord length `(L/π) sin(π ℓ / L)`.
pub fn chord_length(ell: f64, l: usize) -> f64 {
    let lf = l as f64;
    lf / PI * (PI * ell / lf).sin()
}

/// Subsystem sizes `1 = ℓ_1 < … < ℓ_N = L/2` whose chord lengths are as
/// close to geometric as integer rounding allows.
///
/// Each step re-targets the ratio needed to reach `L/2` in the remaining
/// number of steps, so early rounding losses are redistributed.
pub fn build_ell_grid(l: usize, n_ell: usize) -> Result<Vec<usize>> {
    if l < 2 || l % 2 != 0 {
        return Err(Error::InvalidParameter(format!("L must be even, got {l}")));
    }
    if n_ell < 2 {
        return Err(Error::InvalidParameter("grid needs at least two points".into()));
    }
    let half = l / 2;
    if n_ell >= half {
        if n_ell > half {
            log::warn!("requested {n_ell} grid points but only {half} sizes exist; using all");
        }
        return Ok((1..=half).collect());
    }
    let lf = l as f64;
    let inverse_chord = |c: f64| lf / PI * (PI * c / lf).min(1.0).asin();
    let end = chord_length(half as f64, l);
    let mut grid = vec![1usize];
    while grid.len() < n_ell - 1 {
        let prev = *grid.last().expect("non-empty");
        let remaining = (n_ell - grid.len()) as f64;
        let c_prev = chord_length(prev as f64, l);
        let ratio = (end / c_prev).powf(1.0 / remaining);
        let target = inverse_chord(c_prev * ratio).round() as usize;
        let next = target.max(prev + 1);
        if next >= half {
            break;
        }
        grid.push(next);
    }
    grid.push(half);
    Ok(grid)
}

/// Chord-length exponents `ε_i = ln(ℓ̃_{i+1}/ℓ̃_i)` of a grid.
pub fn grid_exponents(grid: &[usize], l: usize) -> Vec<f64> {
    grid.windows(2)
        .map(|w| (chord_length(w[1] as f64, l) / chord_length(w[0] as f64, l)).ln())
        .collect()
}

/// `c_ℓ = 3 (S_{ℓ'} - S_ℓ) / ln(ℓ̃'/ℓ̃)` on consecutive grid points, returned
/// as `(√(ℓ̃ ℓ̃'), c_ℓ)`.
pub fn effective_central_charge(grid: &[usize], s: &[f64], l: usize) -> Result<Vec<(f64, f64)>> {
    if grid.len() != s.len() {
        return Err(Error::InvalidParameter("grid and entropies differ in length".into()));
    }
    grid.windows(2)
        .zip(s.windows(2))
        .map(|(g, s)| {
            let c0 = chord_length(g[0] as f64, l);
            let c1 = chord_length(g[1] as f64, l);
            let lr = (c1 / c0).ln();
            if !(lr.abs() > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "sizes {} and {} have equal chord lengths",
                    g[0], g[1]
                )));
            }
            Ok(((c0 * c1).sqrt(), 3.0 * (s[1] - s[0]) / lr))
        })
        .collect()
}

/// All seven entropies of a layout: `[A, B, C, AB, BC, AC, ABC]`.
/// `B` and combinations with an empty `B` are skipped as zero / duplicates.
pub fn layout_entropies(d: &SingleParticleDensityMatrix, layout: &SegmentLayout) -> Result<[f64; 7]> {
    layout.validate()?;
    if layout.l != d.len() {
        return Err(Error::InvalidParameter("layout built for a different L".into()));
    }
    let sa = subsystem_entropy(d, &layout.a())?;
    let sc = subsystem_entropy(d, &layout.c())?;
    let sac = subsystem_entropy(d, &layout.ac())?;
    let (sb, sab, sbc, sabc) = if layout.ell_b == 0 {
        (0.0, sa, sc, sac)
    } else {
        (
            subsystem_entropy(d, &layout.b())?,
            subsystem_entropy(d, &layout.ab())?,
            subsystem_entropy(d, &layout.bc())?,
            subsystem_entropy(d, &layout.abc())?,
        )
    };
    Ok([sa, sb, sc, sab, sbc, sac, sabc])
}

/// `I₂ = S_A + S_C - S_{A∪C}` from layout entropies.
pub fn i2_from_entropies(s: &[f64; 7]) -> f64 {
    s[0] + s[2] - s[5]
}

/// `I₃ = S_A + S_B + S_C + S_{ABC} - S_{AB} - S_{BC} - S_{AC}`.
pub fn i3_from_entropies(s: &[f64; 7]) -> f64 {
    s[0] + s[1] + s[2] + s[6] - s[3] - s[4] - s[5]
}

pub fn mutual_information_i2(d: &SingleParticleDensityMatrix, layout: &SegmentLayout) -> Result<f64> {
    layout.validate()?;
    let sa = subsystem_entropy(d, &layout.a())?;
    let sc = subsystem_entropy(d, &layout.c())?;
    let sac = subsystem_entropy(d, &layout.ac())?;
    Ok(sa + sc - sac)
}

pub fn tripartite_i3(d: &SingleParticleDensityMatrix, layout: &SegmentLayout) -> Result<f64> {
    Ok(i3_from_entropies(&layout_entropies(d, layout)?))
}

/// Cross ratio `x = ℓ̃_A ℓ̃_C / (ℓ̃_{AB} ℓ̃_{BC})` and `1 - x`, the latter from
/// Ptolemy's identity `ℓ̃_{AB} ℓ̃_{BC} = ℓ̃_A ℓ̃_C + ℓ̃_B ℓ̃_{ABC}` to avoid
/// cancellation when `x → 1`.
pub fn cross_ratio_pair(layout: &SegmentLayout) -> Result<(f64, f64)> {
    layout.validate()?;
    let l = layout.l;
    let ch = |n: usize| chord_length(n as f64, l);
    let ab = ch(layout.ell_a + layout.ell_b);
    let bc = ch(layout.ell_b + layout.ell_c);
    if !(ab > 0.0 && bc > 0.0) {
        return Err(Error::InvalidParameter("degenerate composite interval".into()));
    }
    let x = ch(layout.ell_a) * ch(layout.ell_c) / (ab * bc);
    let one_minus_x = ch(layout.ell_b) * ch(layout.ell_a + layout.ell_b + layout.ell_c) / (ab * bc);
    Ok((x, one_minus_x))
}

pub fn cross_ratio(layout: &SegmentLayout) -> Result<f64> {
    cross_ratio_pair(layout).map(|p| p.0)
}

/// CFT prediction `(c/3) ln(1/(1-x))` given `1 - x`.
pub fn cft_i2_minus_i3(c: f64, one_minus_x: f64) -> f64 {
    -(c / 3.0) * one_minus_x.ln()
}

/// Residuals `(I₂ - I₃) - (c/3) ln(1/(1-x))`.
pub fn cft_collapse_residuals(i2: &[f64], i3: &[f64], x: &[f64], c: f64) -> Result<Vec<f64>> {
    if i2.len() != i3.len() || i2.len() != x.len() {
        return Err(Error::InvalidParameter("arrays differ in length".into()));
    }
    x.iter()
        .zip(i2.iter().zip(i3))
        .map(|(&x, (&a, &b))| {
            if !(x < 1.0) {
                return Err(Error::Domain(format!("cross ratio {x} is not below 1")));
            }
            Ok(a - b - cft_i2_minus_i3(c, 1.0 - x))
        })
        .collect()
}

/// Largest `|residual| / prediction` over points whose probe scale lies in
/// `[lo, hi]`; `None` if no point qualifies.
pub fn cft_max_relative_residual(
    residuals: &[f64],
    x: &[f64],
    probe: &[f64],
    c: f64,
    window: (f64, f64),
) -> Option<f64> {
    residuals
        .iter()
        .zip(x.iter().zip(probe))
        .filter(|(_, (_, &p))| p >= window.0 && p <= window.1)
        .map(|(r, (&x, _))| (r / cft_i2_minus_i3(c, 1.0 - x)).abs())
        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn fermi_sea(l: usize) -> SingleParticleDensityMatrix {
        // ground state of the ring at half filling with L ≡ 2 mod 4 has a
        // unique closed shell; the infinite-chain kernel is used only for L→∞
        let n = l / 2;
        let ks: Vec<i64> = (-(n as i64 - 1) / 2..=(n as i64 - 1) / 2).collect();
        assert_eq!(ks.len(), n);
        let mut d = vec![Complex64::new(0.0, 0.0); l * l];
        for a in 0..l {
            for b in 0..l {
                d[a * l + b] = ks
                    .iter()
                    .map(|&k| {
                        Complex64::from_polar(1.0 / l as f64, 2.0 * PI * k as f64 * (a as f64 - b as f64) / l as f64)
                    })
                    .sum();
            }
        }
        SingleParticleDensityMatrix::from_row_major(l, d).unwrap()
    }

    #[test]
    fn classical_snapshot() {
        let d = SingleParticleDensityMatrix::neel(8).unwrap();
        let c = correlation_profile(&d);
        // |D_ll|² = n_l, so C_0 = 1/2 - 1/2 = 0 at half filling
        assert!(c.iter().all(|&x| x.abs() < 1e-15));
        let lay = SegmentLayout::new(2, 1, 2, 3, 8).unwrap();
        assert_eq!(subsystem_entropy(&d, &lay.a()).unwrap().abs() < 1e-10, true);
        assert!(mutual_information_i2(&d, &lay).unwrap().abs() < 1e-10);
        assert!(tripartite_i3(&d, &lay).unwrap().abs() < 1e-10);
        assert_eq!(second_cumulant(&d, &[0, 1, 2]), 0.0);
    }

    #[test]
    fn infinite_fermi_sea_correlations() {
        // Large ring; the closed-shell kernel converges to sin(πr/2)/(πr).
        let l = 402;
        let d = fermi_sea(l);
        let c = correlation_profile(&d);
        for r in 1..20usize {
            let exact_ring = (PI * r as f64 * 201.0 / l as f64).sin()
                / (l as f64 * (PI * r as f64 / l as f64).sin());
            assert!((c[r] + exact_ring * exact_ring).abs() < 1e-12);
            let inf = (PI * r as f64 / 2.0).sin() / (PI * r as f64);
            assert!((exact_ring - inf).abs() < 1e-3);
        }
    }

    #[test]
    fn singlet_entropy_is_ln2() {
        let h = Complex64::new(0.5, 0.0);
        let d = SingleParticleDensityMatrix::from_row_major(2, vec![h, h, h, h]).unwrap();
        assert!((subsystem_entropy(&d, &[0]).unwrap() - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn entropy_matches_fock_oracle_for_fermi_sea() {
        use crate::fock::{FockOracle, FockState};
        // Ground state of the 8-site ring at N = 4 is degenerate; use N = 3 closed shell.
        let l = 8;
        let ks = [-1i64, 0, 1];
        let mut data = vec![Complex64::new(0.0, 0.0); l * l];
        for a in 0..l {
            for b in 0..l {
                data[a * l + b] = ks
                    .iter()
                    .map(|&k| Complex64::from_polar(1.0 / l as f64, 2.0 * PI * (k * (a as i64 - b as i64)) as f64 / l as f64))
                    .sum();
            }
        }
        let d = SingleParticleDensityMatrix::from_row_major(l, data).unwrap();
        // Many-body Slater determinant of the three plane waves.
        let orb = |k: i64, x: usize| Complex64::from_polar(1.0 / (l as f64).sqrt(), 2.0 * PI * (k * x as i64) as f64 / l as f64);
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << l];
        for bits in 0usize..(1 << l) {
            if bits.count_ones() != 3 {
                continue;
            }
            let sites: Vec<usize> = (0..l).filter(|i| bits & (1 << i) != 0).collect();
            // determinant of orb(k_i, site_j), sites ascending matches c†_{s1} c†_{s2} c†_{s3}
            let m = |i: usize, j: usize| orb(ks[i], sites[j]);
            let det = m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1))
                - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
                + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
            amps[bits] = det;
        }
        let s = FockState::from_amplitudes(l, amps).unwrap();
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        assert!(s.density_matrix().max_abs_diff(&d) < 1e-12);
        let _ = FockOracle::new(l, 1.0).unwrap();
        let sites: Vec<usize> = (0..4).collect();
        let s_gauss = subsystem_entropy(&d, &sites).unwrap();
        let s_fock = s.entanglement_entropy(4).unwrap();
        assert!((s_gauss - s_fock).abs() < 1e-8, "{s_gauss} vs {s_fock}");
    }

    #[test]
    fn bernoulli_cumulants() {
        let p = bernoulli_cumulant_polys(4);
        // κ2 = λ - λ², κ3 = λ - 3λ² + 2λ³, κ4 = λ - 7λ² + 12λ³ - 6λ⁴
        assert_eq!(p[1], vec![0.0, 1.0, -1.0]);
        assert_eq!(p[2], vec![0.0, 1.0, -3.0, 2.0]);
        assert_eq!(p[3], vec![0.0, 1.0, -7.0, 12.0, -6.0]);
    }

    #[test]
    fn zeta_values() {
        assert!((zeta(2.0) - PI * PI / 6.0).abs() < 1e-14);
        assert!((zeta(4.0) - PI.powi(4) / 90.0).abs() < 1e-14);
        assert!((zeta(12.0) - 691.0 * PI.powi(12) / 638_512_875.0).abs() < 1e-14);
    }

    #[test]
    fn series_is_asymptotic() {
        let lam = [0.02, 0.97, 0.1];
        let s = entropy_from_spectrum(&lam);
        let series = entropy_cumulant_series(&lam, 8);
        let c2: f64 = lam.iter().map(|x| x * (1.0 - x)).sum();
        assert!((series[0] - PI * PI / 3.0 * c2).abs() < 1e-14);
        // the best early truncation is close, late ones blow up
        let best = series[..3].iter().map(|p| (p - s).abs()).fold(f64::INFINITY, f64::min);
        assert!(best < 0.05 * s);
        assert!(series[7].abs() > 10.0 * s);
        assert_eq!(entropy_cumulant_series(&[0.0, 1.0], 6), vec![0.0; 6]);
    }

    #[test]
    fn chord_properties() {
        let l = 100;
        assert!((chord_length(50.0, l) - 100.0 / PI).abs() < 1e-12);
        assert!((chord_length(1e-6, l) / 1e-6 - 1.0).abs() < 1e-9);
        for e in 0..=l {
            assert!((chord_length(e as f64, l) - chord_length((l - e) as f64, l)).abs() < 1e-10);
        }
    }

    #[test]
    fn ell_grid_paper_case() {
        let g = build_ell_grid(1000, 66).unwrap();
        assert_eq!(g.len(), 66);
        assert_eq!(g[0], 1);
        assert_eq!(*g.last().unwrap(), 500);
        let eps = grid_exponents(&g, 1000);
        for (i, e) in eps.iter().enumerate() {
            // ε_i is the step from ℓ_i to ℓ_{i+1}, 1-based i = index + 1
            if i + 1 > 10 {
                assert!(*e < 0.1, "eps_{} = {e}", i + 1);
            }
        }
        assert_eq!(build_ell_grid(1000, 2).unwrap(), vec![1, 500]);
        assert_eq!(build_ell_grid(10, 9).unwrap(), vec![1, 2, 3, 4, 5]);
        assert!(build_ell_grid(9, 4).is_err());
    }

    #[test]
    fn central_charge_of_exact_profiles() {
        let l = 400;
        let g = build_ell_grid(l, 30).unwrap();
        let log: Vec<f64> = g.iter().map(|&e| 1.7 / 3.0 * chord_length(e as f64, l).ln() + 0.4).collect();
        for (_, c) in effective_central_charge(&g, &log, l).unwrap() {
            assert!((c - 1.7).abs() < 1e-12);
        }
        let flat = vec![2.0; g.len()];
        for (_, c) in effective_central_charge(&g, &flat, l).unwrap() {
            assert_eq!(c, 0.0);
        }
        let g: Vec<usize> = (1..60).step_by(3).collect();
        let vol: Vec<f64> = g.iter().map(|&e| 0.3 * e as f64).collect();
        let c: Vec<f64> = effective_central_charge(&g, &vol, 100_000).unwrap().iter().map(|p| p.1).collect();
        assert!(c.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn cross_ratio_geometry() {
        let l = 100_000;
        let lay = SegmentLayout::new(10, 30, 10, 0, l).unwrap();
        let (x, omx) = cross_ratio_pair(&lay).unwrap();
        assert!((x - 1.0 / 16.0).abs() < 1e-6);
        assert!((x + omx - 1.0).abs() < 1e-12);
        let lay = SegmentLayout::new(3, 0, 3, 0, l).unwrap();
        let (x, omx) = cross_ratio_pair(&lay).unwrap();
        assert!((x - 1.0).abs() < 1e-12 && omx == 0.0);
        assert!(SegmentLayout::new(50, 10, 50, 0, 100).is_err());
    }

    #[test]
    fn cft_residuals() {
        let xs = [0.01, 0.1, 0.4];
        let c = 1.3;
        let i3 = [0.01, -0.02, 0.0];
        let i2: Vec<f64> = xs.iter().zip(&i3).map(|(&x, b)| b + c / 3.0 * (1.0f64 / (1.0 - x)).ln()).collect();
        let r = cft_collapse_residuals(&i2, &i3, &xs, c).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-15));
        assert!(cft_collapse_residuals(&[0.0], &[0.0], &[1.0], c).is_err());
        let small = cft_i2_minus_i3(c, 1.0 - 1e-6);
        assert!((small / 1e-6 - c / 3.0).abs() < 1e-5);
    }
}
