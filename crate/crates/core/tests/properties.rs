use monfer::analysis::{power_law_fit, Curve};
use monfer::engine::{
    select_fc, waiting_time, DensityEngine, Engine, JumpKind, ModelKind, SingleParticleDensityMatrix, SlaterEngine,
    Stepper,
};
use monfer::observables::{
    build_ell_grid, chord_length, cross_ratio_pair, entropy_from_spectrum, entanglement_spectrum,
    mutual_information_i2, subsystem_entropy, SegmentLayout,
};
use proptest::prelude::*;

fn occupations(l: usize) -> impl Strategy<Value = Vec<bool>> {
    proptest::collection::vec(any::<bool>(), l)
}

/// Pure Gaussian state reached from a classical configuration by a short
/// monitored trajectory.
fn evolved(occ: &[bool], model: ModelKind, seed: u64, t: f64) -> SingleParticleDensityMatrix {
    let mut e = DensityEngine::new(SingleParticleDensityMatrix::classical(occ), 1.0);
    Stepper::new(&mut e, model, 0.7, seed).advance_to(t).unwrap();
    e.density_matrix()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn free_evolution_keeps_a_projector(occ in occupations(12), tau in 0.0f64..20.0) {
        let mut d = SingleParticleDensityMatrix::classical(&occ);
        let n = d.trace();
        let mut e = DensityEngine::new(d.clone(), 1.0);
        e.advance(tau).unwrap();
        d = e.density_matrix();
        prop_assert!(d.purity_error() < 1e-12);
        prop_assert!(d.hermiticity_error() < 1e-12);
        prop_assert!((d.trace() - n).abs() < 1e-11);
    }

    #[test]
    fn jumps_keep_a_projector_and_fix_the_site(
        occ in occupations(10), seed in any::<u64>(), t in 0.5f64..4.0, site in 0usize..10,
    ) {
        let d = evolved(&occ, ModelKind::FermionCounting, seed, t);
        let p = d.occupation(site);
        for kind in [JumpKind::Loss, JumpKind::Gain, JumpKind::Occupation] {
            let mut e = d.clone();
            let expected = if kind == JumpKind::Gain { 1.0 - p } else { p };
            match e.apply_jump(kind, site) {
                Ok(w) => {
                    prop_assert!((w - expected).abs() < 1e-12);
                    prop_assert!(e.purity_error() < 1e-9);
                    let target = if kind == JumpKind::Loss { 0.0 } else { 1.0 };
                    prop_assert!((e.occupation(site) - target).abs() < 1e-12);
                }
                Err(_) => prop_assert!(expected < 1e-9),
            }
        }
    }

    #[test]
    fn orbital_engine_tracks_the_density_engine(occ in occupations(16), seed in any::<u64>()) {
        prop_assume!(occ.iter().any(|&b| b));
        for model in [ModelKind::FermionCounting, ModelKind::OccupationMeasurement] {
            let mut a = DensityEngine::new(SingleParticleDensityMatrix::classical(&occ), 1.0);
            let mut b = SlaterEngine::classical(&occ, 1.0);
            Stepper::new(&mut a, model, 1.3, seed).advance_to(6.0).unwrap();
            Stepper::new(&mut b, model, 1.3, seed).advance_to(6.0).unwrap();
            prop_assert!(a.density_matrix().max_abs_diff(&b.density_matrix()) < 1e-10);
            prop_assert!(b.orthonormality_error() < 1e-12);
        }
    }

    #[test]
    fn complementary_regions_share_their_entropy(occ in occupations(12), seed in any::<u64>(), ell in 1usize..12) {
        let d = evolved(&occ, ModelKind::FermionCounting, seed, 3.0);
        let a: Vec<usize> = (0..ell).collect();
        let b: Vec<usize> = (ell..12).collect();
        let sa = subsystem_entropy(&d, &a).unwrap();
        prop_assert!((sa - subsystem_entropy(&d, &b).unwrap()).abs() < 1e-8);
        prop_assert!(sa >= 0.0 && sa <= ell.min(12 - ell) as f64 * 2f64.ln() + 1e-9);
        let spec = entanglement_spectrum(&d, &a).unwrap();
        prop_assert!(spec.iter().all(|&x| (-1e-12..=1.0 + 1e-12).contains(&x)));
        prop_assert!((entropy_from_spectrum(&spec) - sa).abs() < 1e-12);
    }

    #[test]
    fn mutual_information_is_nonnegative(
        occ in occupations(16), seed in any::<u64>(), la in 1usize..4, lb in 1usize..5, lc in 1usize..4,
    ) {
        let d = evolved(&occ, ModelKind::OccupationMeasurement, seed, 3.0);
        let lay = SegmentLayout::new(la, lb, lc, 3, 16).unwrap();
        prop_assert!(mutual_information_i2(&d, &lay).unwrap() > -1e-9);
    }

    #[test]
    fn cross_ratio_pair_sums_to_one(l in (8usize..200).prop_map(|l| 2 * l), la in 1usize..20, lb in 1usize..20, lc in 1usize..20) {
        prop_assume!(la + lb + lc < l);
        let lay = SegmentLayout::new(la, lb, lc, 0, l).unwrap();
        let (x, y) = cross_ratio_pair(&lay).unwrap();
        prop_assert!(x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0);
        prop_assert!((x + y - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chord_length_is_symmetric_and_bounded(l in (2usize..2000).prop_map(|l| 2 * l), ell in 0usize..4000) {
        let ell = ell % (l + 1);
        let c = chord_length(ell as f64, l);
        prop_assert!((c - chord_length((l - ell) as f64, l)).abs() < 1e-9 * l as f64);
        prop_assert!(c <= ell as f64 + 1e-12);
        prop_assert!(c <= l as f64 / std::f64::consts::PI + 1e-12);
    }

    #[test]
    fn ell_grid_is_strictly_increasing(l in (4usize..1500).prop_map(|l| 2 * l), n in 2usize..100) {
        let g = build_ell_grid(l, n).unwrap();
        prop_assert_eq!(g[0], 1);
        prop_assert_eq!(*g.last().unwrap(), l / 2);
        prop_assert!(g.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(g.len() <= n.max(l / 2));
    }

    #[test]
    fn counting_outcome_follows_the_uniform(u in 0.0f64..1.0, l in 2usize..500, p in 0.0f64..1.0) {
        let (kind, s) = select_fc(u, l, |_| p);
        prop_assert_eq!(s, ((u * l as f64).floor() as usize).min(l - 1));
        let r = u * l as f64 - s as f64;
        prop_assert_eq!(kind == JumpKind::Loss, r < p && p > 1e-10 || p >= 1.0 - 1e-10);
    }

    #[test]
    fn waiting_times_are_positive_and_scale_with_rate(u in 1e-9f64..1.0, rate in 1e-3f64..1e3) {
        let t = waiting_time(u, rate);
        prop_assert!(t > 0.0);
        prop_assert!((waiting_time(u, 2.0 * rate) - t / 2.0).abs() < 1e-12 * t.max(1.0));
    }

    #[test]
    fn power_law_fit_recovers_exact_laws(a in 0.1f64..10.0, b in -3.0f64..3.0) {
        let x: Vec<f64> = (1..20).map(|i| i as f64 * 1.5).collect();
        let y: Vec<f64> = x.iter().map(|x| a * x.powf(b)).collect();
        let fit = power_law_fit(&Curve::exact(x, y).unwrap(), 0.0, f64::INFINITY).unwrap();
        prop_assert!((fit.exponent - b).abs() < 1e-9);
        prop_assert!((fit.amplitude / a - 1.0).abs() < 1e-9);
    }
}
