mod common;

use std::sync::OnceLock;

use cascade_core::cascade::{evolve_limit, logistic_bound, rhs_limit, rhs_prelimit};
use cascade_core::coeffs::{CoefficientSet, Conventions, ResonanceModel};
use cascade_core::ode::SolverOptions;
use cascade_core::state::{sample_times, StateVector};
use cascade_core::trap::check_gap_independence_of;
use cascade_core::Complex64;
use ndarray::Array2;
use proptest::prelude::*;

fn model() -> &'static ResonanceModel {
    static MODEL: OnceLock<ResonanceModel> = OnceLock::new();
    MODEL.get_or_init(|| common::model(3, 2048))
}

fn prelimit() -> &'static CoefficientSet {
    static SET: OnceLock<CoefficientSet> = OnceLock::new();
    SET.get_or_init(|| model().prelimit_set(0.2).unwrap())
}

fn symmetric(k: usize, vals: &[f64]) -> Array2<f64> {
    let mut m = Array2::zeros((k, k));
    let mut it = vals.iter().cycle();
    for a in 0..k {
        for b in a..k {
            let v = *it.next().unwrap();
            m[[a, b]] = v;
            m[[b, a]] = v;
        }
    }
    m
}

fn random_set(k: usize, raw: &[f64]) -> CoefficientSet {
    let har = symmetric(k, raw);
    let lamb = symmetric(k, &raw.iter().rev().copied().collect::<Vec<_>>());
    let mut fgr = symmetric(k, &raw.iter().map(|x| x.abs()).collect::<Vec<_>>());
    for a in 0..k {
        fgr[[a, a]] = 0.0;
    }
    let energies = (0..k).map(|i| 0.5 + i as f64 + 0.1 * raw[i % raw.len()].abs()).collect();
    CoefficientSet::from_components(energies, har, lamb, fgr, Conventions::default()).unwrap()
}

fn state(raw: &[(f64, f64)]) -> StateVector {
    StateVector::new(raw.iter().map(|&(a, b)| Complex64::new(a, b)).collect()).unwrap()
}

fn coeff_values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, 21)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn real_part_of_limit_matrix_is_antisymmetric(k in 1usize..7, raw in coeff_values()) {
        let set = random_set(k, &raw);
        prop_assert_eq!(set.antisymmetry_defect(), 0.0);
        for a in 0..k {
            prop_assert_eq!(set.limit[[a, a]].re, 0.0);
        }
    }

    #[test]
    fn limit_flow_has_zero_mass_derivative(
        raw in coeff_values(),
        f in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 5),
    ) {
        let set = random_set(5, &raw);
        let f = state(&f);
        let d = rhs_limit(&f, &set).unwrap();
        let dm: f64 = f.0.iter().zip(&d.0).map(|(a, b)| (a.conj() * b).re).sum();
        prop_assert!(dm.abs() < 1e-13);
    }

    #[test]
    fn limit_flow_lowers_energy(
        raw in coeff_values(),
        f in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 5),
    ) {
        let set = random_set(5, &raw);
        let f = state(&f);
        let d = rhs_limit(&f, &set).unwrap();
        let de: f64 = f.0.iter().zip(&d.0).zip(&set.energies).map(|((a, b), e)| 2.0 * e * (a.conj() * b).re).sum();
        prop_assert!(de <= 1e-12);
    }

    #[test]
    fn prelimit_flow_has_zero_mass_derivative(
        t in 0.0f64..3.0,
        f in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 3),
    ) {
        let f = state(&f);
        let d = rhs_prelimit(t, &f, prelimit(), 0.2).unwrap();
        let dm: f64 = f.0.iter().zip(&d.0).map(|(a, b)| (a.conj() * b).re).sum();
        prop_assert!(dm.abs() < 1e-12);
    }

    #[test]
    fn logistic_bound_is_monotone_and_bounded(x0 in 1e-3f64..=1.0, g in 1e-3f64..5.0, t in 0.0f64..50.0, dt in 0.0f64..5.0) {
        let a = logistic_bound(x0, g, t).unwrap();
        let b = logistic_bound(x0, g, t + dt).unwrap();
        prop_assert!(a >= x0 * (1.0 - 1e-15) && a <= 1.0 + 1e-15);
        prop_assert!(b >= a - 1e-15);
    }

    #[test]
    fn resonance_report_never_lists_trivial_quadruples(e in prop::collection::vec(0.0f64..10.0, 1..6)) {
        let report = check_gap_independence_of(&e, 1e-8);
        for q in &report.collisions {
            prop_assert!(!(q[0] == q[2] && q[1] == q[3]));
        }
        if e.len() == 1 {
            prop_assert!(report.min_gap.is_infinite());
        }
    }

    #[test]
    fn tail_masses_are_non_increasing_in_index(f in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..8)) {
        let f = state(&f);
        let tail = f.tail_masses();
        for w in tail.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
        if let Some(m0) = tail.first() {
            prop_assert!((m0 + f.ground_occupation() - f.mass()).abs() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn limit_flow_is_phase_equivariant(
        raw in coeff_values(),
        f in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 4),
        theta in prop::collection::vec(0.0f64..std::f64::consts::TAU, 4),
    ) {
        let set = random_set(4, &raw);
        let f0 = state(&f);
        let rotated = StateVector(f0.0.iter().zip(&theta).map(|(z, t)| z * Complex64::from_polar(1.0, *t)).collect());
        let times = sample_times(1.0, 4);
        let opts = SolverOptions::default();
        let a = evolve_limit(&set, &f0, &times, &opts).unwrap();
        let b = evolve_limit(&set, &rotated, &times, &opts).unwrap();
        for (sa, sb) in a.states.iter().zip(&b.states) {
            for ((za, zb), t) in sa.0.iter().zip(&sb.0).zip(&theta) {
                prop_assert!((za * Complex64::from_polar(1.0, *t) - zb).norm() < 1e-7);
            }
        }
    }
}

#[test]
fn hartree_symmetries() {
    let m = model();
    for k in 0..3 {
        for kp in 0..3 {
            for j in 0..3 {
                for jp in 0..3 {
                    let h = m.lambda_hartree(k, kp, j, jp).unwrap();
                    assert_eq!(h, m.lambda_hartree(kp, k, j, jp).unwrap());
                    assert_eq!(h, m.lambda_hartree(k, kp, jp, j).unwrap());
                    assert_eq!(h, m.lambda_hartree(j, jp, k, kp).unwrap());
                }
            }
        }
    }
}

#[test]
fn tensor_pairs_under_index_swap() {
    let t = prelimit().tensor.as_ref().unwrap();
    for ((k, kp, j, jp), m) in t.m.indexed_iter() {
        let partner = t.m[[kp, k, jp, j]];
        assert!((partner + m.conj()).norm() < 1e-14 * (1.0 + m.norm()));
        assert_eq!(t.delta_e[[kp, k, jp, j]], -t.delta_e[[k, kp, j, jp]]);
    }
}
