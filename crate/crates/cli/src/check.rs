//! The invariant suite behind `cascade check`.

use std::f64::consts::PI;

use cascade_core::cascade::{diagnostics, evolve_limit, RATE_FLOOR};
use cascade_core::coeffs::{CoefficientSet, ResonanceModel};
use cascade_core::kernel::fourier_radial;
use cascade_core::spectral::spectral_density;
use cascade_core::state::{sample_times, StateVector};
use cascade_core::trap::{check_gap_independence, mode_product, solve_radial_eigenpairs, EigenBasis, Potential, RadialGrid};
use cascade_core::Complex64;
use serde_json::{json, Value};

use crate::commands::{report_json, run_sweep, solver_options};
use crate::config::SimulationConfig;
use crate::error::CliError;
use crate::output::{fmt_f64, Csv, Provenance, RunDir};
use crate::pipeline;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skipped => "skipped",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckItem {
    pub id: &'static str,
    pub module: &'static str,
    pub status: Status,
    pub measured: f64,
    /// Bound the measured value is compared against; the direction is part of
    /// the check's definition.
    pub tolerance: f64,
    pub detail: Value,
}

impl CheckItem {
    fn new(id: &'static str, module: &'static str, passed: bool, measured: f64, tolerance: f64) -> Self {
        let status = if passed { Status::Pass } else { Status::Fail };
        Self { id, module, status, measured, tolerance, detail: Value::Null }
    }

    fn skipped(id: &'static str, module: &'static str, why: String) -> Self {
        Self { id, module, status: Status::Skipped, measured: f64::NAN, tolerance: f64::NAN, detail: json!({ "note": why }) }
    }

    fn with(mut self, detail: Value) -> Self {
        self.detail = detail;
        self
    }

    pub fn to_json(&self) -> Value {
        json!({
            "id": self.id,
            "module": self.module,
            "status": self.status.as_str(),
            "measured": self.measured,
            "tolerance": self.tolerance,
            "detail": self.detail,
        })
    }
}

const TRAP: &str = "trap-spectrum";
const COEFFS: &str = "resonance-coeffs";
const DYNAMICS: &str = "cascade-dynamics";
const SWEEP: &str = "convergence-lab";
const CLI: &str = "sim-cli";

/// Modes, grid and tolerance of the harmonic validation spectrum.
pub const HARMONIC_MODES: usize = 6;
pub const HARMONIC_GRID: (f64, usize) = (12.0, 2000);
pub const HARMONIC_TOL: f64 = 1e-6;

/// `max_k |E_k − (4k + 3)| / (4k + 3)` for `−Δ + r²`.
pub fn harmonic_error() -> Result<f64, CliError> {
    let grid = RadialGrid::new(HARMONIC_GRID.0, HARMONIC_GRID.1)?;
    let basis = solve_radial_eigenpairs(&Potential::quartic(0.0), &grid, HARMONIC_MODES)?;
    Ok(basis
        .energies()
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let exact = 4.0 * k as f64 + 3.0;
            (e - exact).abs() / exact
        })
        .fold(0.0, f64::max))
}

fn trap_checks(cfg: &SimulationConfig, basis: &EigenBasis, out: &mut Vec<CheckItem>) -> Result<(), CliError> {
    let defect = basis.orthonormality_defect();
    out.push(CheckItem::new("orthonormality", TRAP, defect < 1e-8, defect, 1e-8));

    let mut fine = cfg.clone();
    fine.trap.n_points *= 2;
    let fine = pipeline::basis(&fine)?;
    let drift = basis
        .energies()
        .iter()
        .zip(fine.energies())
        .map(|(a, b)| (a - b).abs() / b.abs())
        .fold(0.0, f64::max);
    out.push(CheckItem::new("spectral_convergence", TRAP, drift < 1e-6, drift, 1e-6));

    let wrong_sign = (0..basis.len())
        .filter(|&k| basis.mode(k).unwrap().iter().find(|x| **x != 0.0).is_none_or(|x| *x < 0.0))
        .count();
    out.push(CheckItem::new("sign_convention", TRAP, wrong_sign == 0, wrong_sign as f64, 0.0));

    let err = harmonic_error()?;
    out.push(CheckItem::new("harmonic_oracle", TRAP, err < HARMONIC_TOL, err, HARMONIC_TOL));

    let report = check_gap_independence(basis, cfg.trap.gap_tol);
    out.push(
        CheckItem::new("gap_independence", TRAP, report.collisions.is_empty(), report.collisions.len() as f64, 0.0)
            .with(json!({ "min_gap": report.min_gap, "gap_tol": cfg.trap.gap_tol })),
    );
    Ok(())
}

/// `Γ_{k',k}` rebuilt from fresh transforms of `χ_{k'}χ_k` and compared with
/// the assembled `Γ_{k,k'}`; returns the largest relative difference.
pub fn fgr_recomputation_error(
    cfg: &SimulationConfig,
    basis: &EigenBasis,
    model: &ResonanceModel,
    set: &CoefficientSet,
) -> Result<f64, CliError> {
    let momenta = *model.momenta();
    let (w, _) = pipeline::kernels(cfg, basis, &momenta)?;
    let pi = if set.conventions.fgr_pi { PI } else { 1.0 };
    let e = basis.energies();
    let mut worst: f64 = 0.0;
    for k in 0..basis.len() {
        for kp in k + 1..basis.len() {
            let uhat = fourier_radial(&mode_product(basis, kp, k)?, basis.grid(), &momenta)?;
            let ghat: Vec<f64> = uhat.iter().zip(w.transform()).map(|(a, b)| a * b).collect();
            let a = spectral_density(&ghat, &ghat, &momenta)?;
            let gamma = pi * a.value_at((e[kp] - e[k]).abs());
            let stored = set.fgr[[k, kp]];
            worst = worst.max((gamma - stored).abs() / stored.abs().max(f64::MIN_POSITIVE));
        }
    }
    Ok(worst)
}

/// Geometric `ε` grid from `1` down to `1e−4`.
pub fn epsilon_grid() -> Vec<f64> {
    (0..=8).map(|i| 10f64.powf(-0.5 * i as f64)).collect()
}

/// For every diagonal quadruple, the growth of `sup_{ε' ∈ [ε, 1]} |M^{ε'}|`
/// between the two smallest `ε` of the grid; returns the worst ratio.
pub fn epsilon_uniformity(model: &ResonanceModel) -> Result<f64, CliError> {
    let eps = epsilon_grid();
    let n = eps.len();
    let mut worst: f64 = 0.0;
    for k in 0..model.k() {
        for kp in 0..model.k() {
            let mut sup = Vec::with_capacity(n);
            let mut running: f64 = 0.0;
            for &e in &eps {
                running = running.max(model.regularized_entry(k, kp, k, kp, e)?.norm());
                sup.push(running);
            }
            worst = worst.max(sup[n - 1] / sup[n - 2]);
        }
    }
    Ok(worst)
}

fn coefficient_checks(
    cfg: &SimulationConfig,
    basis: &EigenBasis,
    model: &ResonanceModel,
    set: &CoefficientSet,
    out: &mut Vec<CheckItem>,
) -> Result<(), CliError> {
    let k = set.k();
    let g = &set.fgr;
    let asym = g.indexed_iter().map(|((a, b), x)| (x - g[[b, a]]).abs()).fold(0.0, f64::max);
    let min = g.iter().copied().fold(f64::INFINITY, f64::min);
    let diag = (0..k).map(|a| g[[a, a]].abs()).fold(0.0, f64::max);
    out.push(
        CheckItem::new("fgr_symmetry", COEFFS, asym == 0.0 && min >= 0.0 && diag == 0.0, asym, 0.0)
            .with(json!({ "min_entry": min, "max_diagonal": diag })),
    );

    let mut har: f64 = 0.0;
    for a in 0..k {
        for b in 0..k {
            for c in 0..k {
                for d in 0..k {
                    let h = model.lambda_hartree(a, b, c, d)?;
                    har = har
                        .max((h - model.lambda_hartree(b, a, c, d)?).abs())
                        .max((h - model.lambda_hartree(a, b, d, c)?).abs());
                }
            }
        }
    }
    out.push(CheckItem::new("hartree_symmetry", COEFFS, har == 0.0, har, 0.0));

    let defect = set.antisymmetry_defect();
    let im_finite = set.limit.iter().all(|m| m.im.is_finite());
    out.push(
        CheckItem::new("re_m_antisymmetry", COEFFS, defect == 0.0 && im_finite, defect, 0.0)
            .with(json!({ "im_finite": im_finite })),
    );

    let recomputed = fgr_recomputation_error(cfg, basis, model, set)?;
    out.push(CheckItem::new("fgr_recomputation", COEFFS, recomputed < 1e-10, recomputed, 1e-10));

    let mut dual: f64 = 0.0;
    for a in 0..k {
        for b in 0..k {
            let gamma = set.fgr[[a, b]];
            if a != b && gamma > 0.0 {
                let r = model.gamma_fgr_resolvent(a, b)?;
                dual = dual.max((gamma - r).abs() / gamma.max(1e-12));
            }
        }
    }
    out.push(CheckItem::new("dual_route_fgr", COEFFS, dual < 1e-6, dual, 1e-6));

    if k >= 2 {
        let (w, _) = pipeline::kernels(cfg, basis, model.momenta())?;
        let g = w.convolve(&mode_product(basis, 0, 1)?, basis.grid())?;
        let real = basis.grid().integrate_3d(&g.iter().map(|x| x * x).collect::<Vec<_>>());
        let spectral = model.density(0, 1, 0, 1)?.integral();
        let rel = (spectral - real).abs() / real.abs();
        out.push(
            CheckItem::new("plancherel", COEFFS, rel < 1e-6, rel, 1e-6)
                .with(json!({ "real_space": real, "spectral": spectral })),
        );
    } else {
        out.push(CheckItem::skipped("plancherel", COEFFS, "needs at least two modes".into()));
    }

    let ratio = epsilon_uniformity(model)?;
    out.push(CheckItem::new("epsilon_uniformity", COEFFS, ratio < 2.0, ratio, 2.0).with(json!({ "epsilon": epsilon_grid() })));

    let mut coarse = cfg.clone();
    coarse.momentum.n_rho /= 2;
    let coarse = pipeline::model(&coarse, basis)?.limit_set()?;
    let rows = |s: &CoefficientSet| -> Vec<f64> { s.limit.rows().into_iter().map(|r| r.iter().map(|m| m.norm()).sum()).collect() };
    let (fine_rows, coarse_rows) = (rows(set), rows(&coarse));
    let change = fine_rows.iter().zip(&coarse_rows).map(|(a, b)| (a - b).abs() / a.abs()).fold(0.0, f64::max);
    out.push(
        CheckItem::new("row_sum_stability", COEFFS, change < 1e-6 && fine_rows.iter().all(|x| x.is_finite()), change, 1e-6)
            .with(json!({ "row_sums": fine_rows, "row_sums_half_grid": coarse_rows })),
    );
    Ok(())
}

fn dynamics_checks(cfg: &SimulationConfig, set: &CoefficientSet, out: &mut Vec<CheckItem>) -> Result<(), CliError> {
    let d = &cfg.dynamics;
    let opts = solver_options(cfg);
    let k = set.k();
    let mass_tol = (100.0 * d.rtol * d.t_end).min(1e-7);
    let step_tol = (100.0 * d.rtol).min(1e-7);

    let f0 = StateVector::from_real(&vec![1.0; k])?.normalized()?;
    let times = sample_times(d.t_end, d.samples as usize);
    let run = evolve_limit(set, &f0, &times, &opts)?;
    let diag = diagnostics(&run, &set.energies, set)?;
    let drift = diag.max_mass_drift();
    out.push(CheckItem::new("mass_conservation", DYNAMICS, drift < mass_tol, drift, mass_tol));
    let de = diag.max_energy_increase();
    out.push(CheckItem::new("energy_monotone", DYNAMICS, de <= step_tol, de, step_tol));
    let dt = diag.max_tail_increase();
    out.push(CheckItem::new("tail_monotone", DYNAMICS, dt <= step_tol, dt, step_tol));

    let theta: Vec<f64> = (0..k).map(|i| 0.3 + 0.7 * i as f64).collect();
    let rotate = |s: &StateVector| -> StateVector {
        StateVector(s.0.iter().zip(&theta).map(|(z, t)| z * Complex64::from_polar(1.0, *t)).collect())
    };
    let rotated = evolve_limit(set, &rotate(&f0), &times, &opts)?;
    let phase = run
        .states
        .iter()
        .zip(&rotated.states)
        .map(|(a, b)| rotate(a).distance(b))
        .fold(0.0, f64::max);
    let phase_tol = 1e3 * d.rtol;
    out.push(CheckItem::new("phase_equivariance", DYNAMICS, phase < phase_tol, phase, phase_tol));

    let f0 = cfg.initial_state()?;
    let n = ((d.samples as f64) * d.bec_horizon / d.t_end).ceil().max(1.0) as usize;
    let long = evolve_limit(set, &f0, &sample_times(d.bec_horizon, n), &opts)?;
    let diag = diagnostics(&long, &set.energies, set)?;
    let gamma = diag.gamma_tilde;
    match diag.min_logistic_margin() {
        Some(m) => out.push(
            CheckItem::new("logistic_domination", DYNAMICS, m >= -step_tol, m, -step_tol)
                .with(json!({ "gamma_tilde": gamma, "x0": f0.ground_occupation(), "horizon": d.bec_horizon })),
        ),
        None => out.push(CheckItem::skipped("logistic_domination", DYNAMICS, diag.logistic_note.clone().unwrap_or_default())),
    }
    match gamma {
        Some(g) if g >= RATE_FLOOR => {
            let t = diag.bec_time(d.bec_threshold);
            out.push(
                CheckItem::new("bec_formation", DYNAMICS, t.is_some(), t.unwrap_or(f64::INFINITY), d.bec_horizon)
                    .with(json!({ "threshold": d.bec_threshold, "final_excited_mass": diag.excited_mass().last() })),
            );
        }
        _ => out.push(CheckItem::skipped(
            "bec_formation",
            DYNAMICS,
            diag.logistic_note.clone().unwrap_or_else(|| "no ground-row rate".into()),
        )),
    }

    let err = two_mode_error(&opts)?;
    out.push(CheckItem::new("two_mode_exactness", DYNAMICS, err < 1e-8, err, 1e-8));
    Ok(())
}

/// Largest deviation of both occupations from the closed-form logistic for
/// `K = 2`, `x₀ = 1/2`, `Γ = 1` on `[0, 1]`.
pub fn two_mode_error(opts: &cascade_core::ode::SolverOptions) -> Result<f64, CliError> {
    let set = CoefficientSet::two_mode_logistic(1.0)?;
    let f0 = StateVector::from_real(&[0.5f64.sqrt(), 0.5f64.sqrt()])?;
    let traj = evolve_limit(&set, &f0, &sample_times(1.0, 100), opts)?;
    Ok(traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(t, s)| {
            let x = 1.0 / (1.0 + (-2.0 * t).exp());
            (s.0[0].norm_sqr() - x).abs().max((s.0[1].norm_sqr() - (1.0 - x)).abs())
        })
        .fold(0.0, f64::max))
}

fn sweep_checks(cfg: &SimulationConfig, out: &mut Vec<CheckItem>) -> Result<(), CliError> {
    let report = run_sweep(cfg)?;
    if report.rows.is_empty() {
        out.push(CheckItem::skipped("sweep_decreasing", SWEEP, "no eta values configured".into()));
        return Ok(());
    }
    let sup: Vec<f64> = report.rows.iter().map(|r| r.sup_distance).collect();
    out.push(
        CheckItem::new("sweep_decreasing", SWEEP, report.strictly_decreasing, sup[sup.len() - 1], sup[0])
            .with(report_json(&report)),
    );
    if let Some(f) = report.reduction_factor() {
        out.push(CheckItem::new("sweep_reduction", SWEEP, f >= 2.0, f, 2.0));
    }
    let initial = report.rows.iter().map(|r| r.initial_distance).fold(0.0, f64::max);
    out.push(CheckItem::new("sweep_initial_distance", SWEEP, initial == 0.0, initial, 0.0));
    let again = run_sweep(cfg)?;
    let same = again == report;
    out.push(CheckItem::new("sweep_reproducible", SWEEP, same, if same { 0.0 } else { 1.0 }, 0.0));
    Ok(())
}

/// Run every check on `cfg`.
pub fn run_checks(cfg: &SimulationConfig) -> Result<Vec<CheckItem>, CliError> {
    let mut out = Vec::new();
    let basis = pipeline::basis(cfg)?;
    trap_checks(cfg, &basis, &mut out)?;
    let model = pipeline::model(cfg, &basis)?;
    let set = model.limit_set()?;
    coefficient_checks(cfg, &basis, &model, &set, &mut out)?;
    dynamics_checks(cfg, &set, &mut out)?;
    sweep_checks(cfg, &mut out)?;

    let round = SimulationConfig::from_toml(&cfg.to_toml()).map(|c| c == *cfg).unwrap_or(false);
    out.push(CheckItem::new("config_round_trip", CLI, round, if round { 0.0 } else { 1.0 }, 0.0));
    Ok(out)
}

pub fn check(cfg: &SimulationConfig, dir: &mut RunDir, prov: &Provenance) -> Result<crate::commands::Outcome, CliError> {
    let items = run_checks(cfg)?;
    let columns: Vec<String> = ["id", "module", "status", "measured", "tolerance"].iter().map(|s| s.to_string()).collect();
    let mut csv = Csv::new(prov, &[], &columns);
    for it in &items {
        csv.row(&[
            it.id.to_string(),
            it.module.to_string(),
            it.status.as_str().to_string(),
            fmt_f64(it.measured),
            fmt_f64(it.tolerance),
        ]);
    }
    dir.write("checks.csv", &csv.into_string())?;

    let count = |s: Status| items.iter().filter(|i| i.status == s).count();
    let list: Vec<Value> = items.iter().map(CheckItem::to_json).collect();
    let summary = json!({ "passed": count(Status::Pass), "failed": count(Status::Fail), "skipped": count(Status::Skipped) });
    dir.write_json("checks.json", &json!({ "checks": list, "summary": summary, "provenance": prov.to_json() }))?;
    let passed = count(Status::Fail) == 0;
    let mut extra = serde_json::Map::new();
    extra.insert("checks".into(), Value::Array(list));
    extra.insert("summary".into(), summary);
    Ok(crate::commands::Outcome { passed, extra })
}
