use cascade_core::cascade::{diagnostics, evolve_limit, evolve_prelimit, DiagnosticsSeries};
use cascade_core::coeffs::CoefficientSet;
use cascade_core::convergence::{eta_sweep, ConvergenceReport, SweepOptions};
use cascade_core::ode::SolverOptions;
use cascade_core::state::{sample_times, Trajectory};
use cascade_core::trap::check_gap_independence;
use serde_json::{json, Map, Value};

use crate::config::{Mode, SimulationConfig};
use crate::error::CliError;
use crate::output::{fmt_f64, Csv, Provenance, RunDir};
use crate::pipeline;

/// What a command leaves in the manifest besides the common fields.
pub struct Outcome {
    pub passed: bool,
    pub extra: Map<String, Value>,
}

impl Outcome {
    fn ok(extra: Value) -> Self {
        let Value::Object(extra) = extra else { unreachable!() };
        Self { passed: true, extra }
    }
}

fn flat(a: &ndarray::Array2<f64>) -> Vec<f64> {
    a.iter().copied().collect()
}

pub fn spectrum(cfg: &SimulationConfig, dir: &mut RunDir, prov: &Provenance) -> Result<Outcome, CliError> {
    let basis = pipeline::basis(cfg)?;
    let potential = cfg.potential()?;
    let grid = basis.grid();
    let k = basis.len();
    let energies = basis.energies();

    let mut columns = vec!["r".to_string(), "V".to_string()];
    columns.extend((0..k).map(|i| format!("chi_{i}")));
    let e_text: Vec<String> = energies.iter().map(|e| fmt_f64(*e)).collect();
    let mut csv = Csv::new(prov, &[("energies", e_text.join(","))], &columns);
    let modes: Vec<&[f64]> = (0..k).map(|i| basis.mode(i)).collect::<Result<_, _>>()?;
    for (i, &r) in grid.nodes().iter().enumerate() {
        let mut row = vec![r, potential.eval(r)];
        row.extend(modes.iter().map(|m| m[i]));
        csv.row_f64(&row);
    }
    dir.write("basis.csv", &csv.into_string())?;

    let mut csv = Csv::new(prov, &[], &["k".into(), "energy".into()]);
    for (i, e) in energies.iter().enumerate() {
        csv.row(&[i.to_string(), fmt_f64(*e)]);
    }
    dir.write("energies.csv", &csv.into_string())?;

    let report = check_gap_independence(&basis, cfg.trap.gap_tol);
    let coercivity = potential.coercivity(grid);
    let doc = json!({
        "K": k,
        "energies": energies,
        "gap_tol": cfg.trap.gap_tol,
        "collisions": report.collisions,
        "min_gap": report.min_gap,
        "orthonormality_defect": basis.orthonormality_defect(),
        "coercivity": { "c": coercivity.c, "c0": coercivity.c0 },
        "grid": { "r_max": grid.r_max(), "n_points": grid.len() },
        "provenance": prov.to_json(),
    });
    dir.write_json("resonance.json", &doc)?;
    Ok(Outcome::ok(json!({ "energies": energies, "collisions": report.collisions.len() })))
}

fn coefficient_doc(cfg: &SimulationConfig, set: &CoefficientSet, momenta: Option<(f64, usize)>, prov: &Provenance) -> Value {
    let k = set.k();
    let re: Vec<f64> = set.limit.iter().map(|m| m.re).collect();
    let im: Vec<f64> = set.limit.iter().map(|m| m.im).collect();
    let mut grids = json!({ "r_max": cfg.trap.r_max, "n_points": cfg.trap.n_points });
    if let Some((rho_max, n_rho)) = momenta {
        grids["rho_max"] = json!(rho_max);
        grids["n_rho"] = json!(n_rho);
    }
    json!({
        "K": k,
        "layout": "row-major K x K",
        "energies": set.energies,
        "hartree": flat(&set.hartree),
        "lamb_shift": flat(&set.lamb),
        "fgr": flat(&set.fgr),
        "limit_re": re,
        "limit_im": im,
        "epsilon": { "lamb_shift_base": set.conventions.lamb_eps, "fgr_resolvent_base": set.conventions.fgr_eps },
        "grids": grids,
        "kernels": serde_json::to_value(&cfg.kernels).unwrap(),
        "coefficients": cfg.dynamics.coefficients,
        "provenance": prov.to_json(),
    })
}

pub fn coeffs(cfg: &SimulationConfig, dir: &mut RunDir, prov: &Provenance) -> Result<Outcome, CliError> {
    let (set, model) = pipeline::limit_coefficients(cfg)?;
    let momenta = model.as_ref().map(|m| (m.momenta().rho_max(), m.momenta().n_rho()));
    dir.write_json("coefficients.json", &coefficient_doc(cfg, &set, momenta, prov))?;

    let columns: Vec<String> =
        ["k", "kp", "re_M", "im_M", "hartree", "lamb_shift", "fgr"].iter().map(|s| s.to_string()).collect();
    let mut csv = Csv::new(prov, &[("K", set.k().to_string())], &columns);
    for ((a, b), m) in set.limit.indexed_iter() {
        csv.row(&[
            a.to_string(),
            b.to_string(),
            fmt_f64(m.re),
            fmt_f64(m.im),
            fmt_f64(set.hartree[[a, b]]),
            fmt_f64(set.lamb[[a, b]]),
            fmt_f64(set.fgr[[a, b]]),
        ]);
    }
    dir.write("matrix.csv", &csv.into_string())?;
    Ok(Outcome::ok(json!({ "K": set.k(), "antisymmetry_defect": set.antisymmetry_defect(), "row_sum_bound": set.row_sum_bound() })))
}

pub fn solver_options(cfg: &SimulationConfig) -> SolverOptions {
    SolverOptions { rtol: cfg.dynamics.rtol, atol: cfg.dynamics.atol, ..Default::default() }
}

fn trajectory_csv(traj: &Trajectory, diag: &DiagnosticsSeries, label: &str, prov: &Provenance) -> String {
    let k = traj.states[0].len();
    let mut columns = vec!["T".to_string()];
    for i in 0..k {
        columns.push(format!("ReF_{i}"));
        columns.push(format!("ImF_{i}"));
    }
    columns.extend(["mass", "energy", "ground_occupation"].iter().map(|s| s.to_string()));
    columns.extend((0..k.saturating_sub(1)).map(|n| format!("m_{n}")));
    if diag.logistic.is_some() {
        columns.push("logistic_bound".into());
    }
    let meta = [("K", k.to_string()), ("eta", label.to_string()), ("method", traj.meta.method.to_string())];
    let mut csv = Csv::new(prov, &meta, &columns);
    for (i, s) in traj.states.iter().enumerate() {
        let mut row = vec![traj.times[i]];
        for z in &s.0 {
            row.push(z.re);
            row.push(z.im);
        }
        row.extend([diag.mass[i], diag.energy[i], diag.ground[i]]);
        row.extend(&diag.tail[i]);
        if let Some(b) = &diag.logistic {
            row.push(b[i]);
        }
        csv.row_f64(&row);
    }
    csv.into_string()
}

fn verdict(measured: f64, tolerance: f64, passed: bool) -> Value {
    json!({ "measured": measured, "tolerance": tolerance, "passed": passed })
}

pub fn evolve(cfg: &SimulationConfig, dir: &mut RunDir, prov: &Provenance) -> Result<Outcome, CliError> {
    let (limit, model) = pipeline::limit_coefficients(cfg)?;
    let f0 = cfg.initial_state()?;
    let d = &cfg.dynamics;
    let times = sample_times(d.t_end, d.samples as usize);
    let opts = solver_options(cfg);
    let (set, traj, label) = match d.mode {
        Mode::Limit => {
            let traj = evolve_limit(&limit, &f0, &times, &opts)?;
            (limit, traj, "limit".to_string())
        }
        Mode::Prelimit => {
            let model = model.expect("prelimit needs computed coefficients");
            let set = limit.with_tensor(model.prelimit_tensor(d.eta)?)?;
            let traj = evolve_prelimit(&set, &f0, &times, d.eta, &opts, d.c_step)?;
            (set, traj, fmt_f64(d.eta))
        }
    };
    let diag = diagnostics(&traj, &set.energies, &set)?;
    dir.write("trajectory.csv", &trajectory_csv(&traj, &diag, &label, prov))?;

    let mass_tol = 100.0 * d.rtol * d.t_end;
    let step_tol = 100.0 * d.rtol;
    let mut checks = Map::new();
    let drift = diag.max_mass_drift();
    checks.insert("mass_conservation".into(), verdict(drift, mass_tol, drift <= mass_tol));
    if d.mode == Mode::Limit {
        let de = diag.max_energy_increase();
        checks.insert("energy_monotone".into(), verdict(de, step_tol, de <= step_tol));
        let dt = diag.max_tail_increase();
        checks.insert("tail_monotone".into(), verdict(dt, step_tol, dt <= step_tol));
        match diag.min_logistic_margin() {
            Some(m) => {
                checks.insert("logistic_domination".into(), verdict(m, -step_tol, m >= -step_tol));
            }
            None => {
                checks.insert(
                    "logistic_domination".into(),
                    json!({ "skipped": diag.logistic_note.clone().unwrap_or_default() }),
                );
            }
        }
    }
    let passed = checks.values().all(|c| c.get("passed").is_none_or(|p| p == &json!(true)));
    let doc = json!({
        "mode": label,
        "K": set.k(),
        "checks": checks,
        "gamma_tilde": diag.gamma_tilde,
        "bec_threshold": d.bec_threshold,
        "bec_time": diag.bec_time(d.bec_threshold),
        "final_excited_mass": diag.excited_mass().last().copied(),
        "solver": {
            "method": traj.meta.method,
            "rtol": traj.meta.rtol,
            "atol": traj.meta.atol,
            "accepted_steps": traj.meta.accepted_steps,
            "rejected_steps": traj.meta.rejected_steps,
        },
        "provenance": prov.to_json(),
    });
    dir.write_json("diagnostics.json", &doc)?;
    Ok(Outcome { passed, extra: json!({ "diagnostics_passed": passed }).as_object().unwrap().clone() })
}

pub fn sweep_options(cfg: &SimulationConfig) -> SweepOptions {
    SweepOptions {
        samples: cfg.sweep.samples as usize,
        solver: solver_options(cfg),
        c_step: cfg.dynamics.c_step,
        diagonal_only: cfg.sweep.diagonal_only,
        noise_factor: cfg.sweep.noise_factor,
    }
}

/// Sweep on the leading `sweep.K` modes with the configured initial data.
pub fn run_sweep(cfg: &SimulationConfig) -> Result<ConvergenceReport, CliError> {
    let k = cfg.sweep.k as usize;
    if cfg.sweep.k > cfg.trap.k {
        return Err(CliError::Validation(format!("sweep.K = {} exceeds trap.K = {}", cfg.sweep.k, cfg.trap.k)));
    }
    let full = pipeline::basis(cfg)?;
    let basis = pipeline::truncate(&full, k)?;
    let model = pipeline::model(cfg, &basis)?;
    let f0 = cfg.initial_state()?;
    if f0.support().is_some_and(|s| s >= k) {
        return Err(CliError::Validation(format!("initial data reach beyond the {k} swept modes")));
    }
    let f0 = cascade_core::state::StateVector(f0.0[..k].to_vec());
    Ok(eta_sweep(&model, &f0, cfg.sweep.t0, &cfg.sweep.etas, &sweep_options(cfg))?)
}

pub fn report_json(report: &ConvergenceReport) -> Value {
    let rows: Vec<Value> = report
        .rows
        .iter()
        .map(|r| {
            json!({
                "eta": r.eta,
                "epsilon": r.epsilon,
                "sup_distance": r.sup_distance,
                "terminal_distance": r.terminal_distance,
                "initial_distance": r.initial_distance,
                "mass_drift": r.mass_drift,
                "accepted_steps": r.accepted_steps,
            })
        })
        .collect();
    json!({
        "t0": report.t0,
        "samples": report.samples,
        "rows": rows,
        "strictly_decreasing": report.strictly_decreasing,
        "non_increasing_within_noise": report.non_increasing,
        "reduction_factor": report.reduction_factor(),
    })
}

pub fn converge(cfg: &SimulationConfig, dir: &mut RunDir, prov: &Provenance) -> Result<Outcome, CliError> {
    let report = run_sweep(cfg)?;
    let mut doc = report_json(&report);
    doc["config"] = serde_json::to_value(&cfg.sweep).unwrap();
    doc["provenance"] = prov.to_json();
    dir.write_json("report.json", &doc)?;

    let columns: Vec<String> = ["eta", "epsilon", "sup_distance", "terminal_distance", "mass_drift"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut csv = Csv::new(prov, &[("K", cfg.sweep.k.to_string()), ("T0", fmt_f64(cfg.sweep.t0))], &columns);
    for r in &report.rows {
        csv.row_f64(&[r.eta, r.epsilon, r.sup_distance, r.terminal_distance, r.mass_drift]);
    }
    dir.write("sweep.csv", &csv.into_string())?;
    Ok(Outcome::ok(json!({ "strictly_decreasing": report.strictly_decreasing })))
}
