mod common;

use cascade_core::cascade::{diagnostics, evolve_limit, evolve_prelimit, rhs_limit, rhs_prelimit, DEFAULT_C_STEP};
use cascade_core::coeffs::{CoefficientSet, Conventions, EpsilonPolicy, ResonanceModel};
use cascade_core::convergence::{eta_sweep, SweepOptions};
use cascade_core::ode::SolverOptions;
use cascade_core::state::{sample_times, StateVector};
use cascade_core::{Complex64, Error};
use ndarray::Array2;

fn logistic(x0: f64, g: f64, t: f64) -> f64 {
    x0 / (x0 + (1.0 - x0) * (-2.0 * g * t).exp())
}

fn quarter_each() -> StateVector {
    StateVector::from_real(&[0.5, 0.5, 0.5, 0.5]).unwrap()
}

#[test]
fn two_mode_logistic_trajectory() {
    let set = CoefficientSet::two_mode_logistic(1.0).unwrap();
    let f0 = StateVector::from_real(&[0.5f64.sqrt(), 0.5f64.sqrt()]).unwrap();
    let times = sample_times(1.0, 100);
    let traj = evolve_limit(&set, &f0, &times, &SolverOptions::default()).unwrap();
    let end = traj.last().unwrap().ground_occupation();
    assert!((end - 1.0 / (1.0 + (-2f64).exp())).abs() < 1e-8);
    assert!((end - 0.880797).abs() < 1e-6);
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let x = logistic(0.5, 1.0, *t);
        assert!((s.ground_occupation() - x).abs() < 1e-8);
        assert!((s.0[1].norm_sqr() - (1.0 - x)).abs() < 1e-8);
    }
}

#[test]
fn two_mode_rate_matches_finite_difference_of_closed_form() {
    let set = CoefficientSet::two_mode_logistic(0.7).unwrap();
    let t = 0.4;
    let x = logistic(0.3, 0.7, t);
    let f = StateVector::from_real(&[x.sqrt(), (1.0 - x).sqrt()]).unwrap();
    let d = rhs_limit(&f, &set).unwrap();
    let dx = 2.0 * (f.0[0].conj() * d.0[0]).re;
    let h = 1e-5;
    let fd = (logistic(0.3, 0.7, t + h) - logistic(0.3, 0.7, t - h)) / (2.0 * h);
    assert!((dx - fd).abs() < 1e-8);
    assert!((dx - 2.0 * 0.7 * x * (1.0 - x)).abs() < 1e-14);
}

#[test]
fn halving_rtol_barely_moves_the_endpoint() {
    let m = common::model(4, 2048);
    let set = m.limit_set().unwrap();
    let times = sample_times(10.0, 10);
    let a = evolve_limit(&set, &quarter_each(), &times, &SolverOptions { rtol: 1e-8, ..Default::default() }).unwrap();
    let b = evolve_limit(&set, &quarter_each(), &times, &SolverOptions { rtol: 5e-9, ..Default::default() }).unwrap();
    assert!(a.last().unwrap().distance(b.last().unwrap()) < 10.0 * 1e-8);
}

#[test]
fn limit_run_diagnostics() {
    let m = common::model(6, 4096);
    let set = m.limit_set().unwrap();
    let f0 = StateVector::from_real(&[1.0; 6]).unwrap().normalized().unwrap();
    let times = sample_times(50.0, 500);
    let traj = evolve_limit(&set, &f0, &times, &SolverOptions::default()).unwrap();
    let d = diagnostics(&traj, m.energies(), &set).unwrap();
    assert!(d.max_mass_drift() < 1e-7);
    assert!(d.max_energy_increase() <= 1e-7);
    assert!(d.max_tail_increase() <= 1e-7);
    assert!(d.min_logistic_margin().unwrap() >= -1e-7);
    assert!(d.mass.iter().all(|m| *m > 0.0));
}

#[test]
fn ground_only_data_omits_the_bound() {
    let set = CoefficientSet::two_mode_logistic(1.0).unwrap();
    let traj = evolve_limit(&set, &StateVector::from_real(&[1.0, 0.0]).unwrap(), &sample_times(1.0, 4), &SolverOptions::default()).unwrap();
    let d = diagnostics(&traj, &set.energies, &set).unwrap();
    assert!(d.logistic.is_none() && d.logistic_note.is_some());
    let traj = evolve_limit(&set, &StateVector::from_real(&[0.0, 1.0]).unwrap(), &sample_times(1.0, 4), &SolverOptions::default()).unwrap();
    let d = diagnostics(&traj, &set.energies, &set).unwrap();
    assert!(d.logistic.is_none());
    assert_eq!(d.ground[4], 0.0);
}

#[test]
fn prelimit_rhs_at_time_zero_is_the_plain_cubic_sum() {
    let m = common::model(3, 2048);
    let set = m.prelimit_set(0.1).unwrap();
    let t = set.tensor.as_ref().unwrap();
    let f = StateVector::new(vec![Complex64::new(0.3, 0.1), Complex64::new(-0.5, 0.2), Complex64::new(0.1, -0.7)]).unwrap();
    let got = rhs_prelimit(0.0, &f, &set, 0.1).unwrap();
    let mut want = vec![Complex64::new(0.0, 0.0); 3];
    for ((k, kp, j, jp), mm) in t.m.indexed_iter() {
        if t.included[[k, kp, j, jp]] {
            want[k] += mm * f.0[j] * f.0[jp].conj() * f.0[kp];
        }
    }
    for (a, b) in got.0.iter().zip(&want) {
        assert!((a - b).norm() < 1e-14);
    }
}

#[test]
fn diagonal_prelimit_rhs_is_limit_rhs_with_regularized_matrix() {
    let m = common::model(3, 2048);
    let mut set = m.prelimit_set(0.1).unwrap();
    let diag = set.tensor.as_ref().unwrap().restrict_to_diagonal();
    let mut regularized = set.clone();
    regularized.limit = Array2::from_shape_fn((3, 3), |(k, kp)| diag.m[[k, kp, k, kp]]);
    set.tensor = Some(diag);
    let f = StateVector::new(vec![Complex64::new(0.3, 0.1), Complex64::new(-0.5, 0.2), Complex64::new(0.1, -0.7)]).unwrap();
    for t in [0.0, 0.37, 2.0] {
        let a = rhs_prelimit(t, &f, &set, 0.1).unwrap();
        let b = rhs_limit(&f, &regularized).unwrap();
        for (x, y) in a.0.iter().zip(&b.0) {
            assert!((x - y).norm() < 1e-15);
        }
    }
}

#[test]
fn prelimit_mass_is_conserved_up_to_integrator_noise() {
    let m = common::model(4, 2048);
    let times = sample_times(1.0, 100);
    for eta in [0.1, 0.05] {
        let set = m.prelimit_set(eta).unwrap();
        let traj = evolve_prelimit(&set, &quarter_each(), &times, eta, &SolverOptions::default(), DEFAULT_C_STEP).unwrap();
        let d = diagnostics(&traj, m.energies(), &set).unwrap();
        assert!(d.max_mass_drift() < 100.0 * 1e-9, "η={eta}: {}", d.max_mass_drift());
    }
}

#[test]
fn sweep_decreases_and_is_reproducible() {
    let m = common::model(4, 4096);
    let opts = SweepOptions::default();
    let a = eta_sweep(&m, &quarter_each(), 1.0, &[0.2, 0.1, 0.05], &opts).unwrap();
    let b = eta_sweep(&m, &quarter_each(), 1.0, &[0.2, 0.1, 0.05], &opts).unwrap();
    assert_eq!(a, b);
    assert!(a.strictly_decreasing && a.non_increasing);
    assert!(a.reduction_factor().unwrap() > 2.0);
    assert!(a.rows.iter().all(|r| r.initial_distance == 0.0));
}

#[test]
fn sweep_edge_cases() {
    let m = common::model(2, 1024);
    let f0 = StateVector::from_real(&[0.6, 0.8]).unwrap();
    let empty = eta_sweep(&m, &f0, 1.0, &[], &SweepOptions::default()).unwrap();
    assert!(empty.rows.is_empty());
    assert!(matches!(eta_sweep(&m, &f0, 1.0, &[0.1, 0.2], &SweepOptions::default()), Err(Error::InvalidInput(_))));
    let conv = Conventions { k_max_tensor: 1, ..Default::default() };
    let s = common::setup(2, 1024);
    let small = ResonanceModel::new(&s.basis, &s.w, &s.v, conv).unwrap();
    assert!(matches!(eta_sweep(&small, &f0, 1.0, &[0.1], &SweepOptions::default()), Err(Error::TensorTooLarge { .. })));
}

#[test]
fn diagonal_tensor_at_tiny_eta_reproduces_the_limit() {
    let s = common::setup(4, 4096);
    let opts = SweepOptions { diagonal_only: true, ..Default::default() };
    let tol = 10.0 * opts.solver.rtol;
    let conv = Conventions { epsilon_policy: EpsilonPolicy::Extrapolated, ..Default::default() };
    let m = ResonanceModel::new(&s.basis, &s.w, &s.v, conv).unwrap();
    let r = eta_sweep(&m, &quarter_each(), 1.0, &[1e-3], &opts).unwrap();
    assert!(r.rows[0].sup_distance < tol, "{}", r.rows[0].sup_distance);

    // with ε = η² the regularized rates keep an O(ε) offset from the limit
    let m = ResonanceModel::new(&s.basis, &s.w, &s.v, Conventions::default()).unwrap();
    let r = eta_sweep(&m, &quarter_each(), 1.0, &[1e-3], &opts).unwrap();
    assert!(r.rows[0].sup_distance < 1e-6, "{}", r.rows[0].sup_distance);
}
