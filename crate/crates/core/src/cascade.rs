//! Limit and prelimit modal dynamics and their diagnostics.
//!
//! The limit system is `∂_T F_k = Σ_{k'} M_{k,k'} |F_{k'}|² F_k`. The prelimit
//! system sums over all included quadruples,
//! `∂_T F_k = Σ M^η_{k,k';j,j'} e^{iTΔE/η²} F_j conj(F_{j'}) F_{k'}`,
//! with the dispersive remainder terms omitted.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;

use crate::coeffs::{CoefficientSet, TensorEntry};
use crate::ode::{integrate, SolverOptions};
use crate::state::{SolverMeta, StateVector, Trajectory};
use crate::{Error, Result};

/// Prelimit steps are capped at this fraction of the fastest phase period.
pub const DEFAULT_C_STEP: f64 = 0.1;

/// Ground-row rates below this are treated as vanishing.
pub const RATE_FLOOR: f64 = 1e-14;

fn check_dim(k: usize, f: &[Complex64]) -> Result<()> {
    if f.len() != k {
        return Err(Error::Dimension(format!("state has {} modes, coefficients {k}", f.len())));
    }
    Ok(())
}

fn limit_field(m: &Array2<Complex64>, y: &[Complex64], dy: &mut [Complex64]) {
    let occ: Vec<f64> = y.iter().map(|z| z.norm_sqr()).collect();
    for (k, d) in dy.iter_mut().enumerate() {
        let mut rate = Complex64::new(0.0, 0.0);
        for (kp, o) in occ.iter().enumerate() {
            rate += m[[k, kp]] * *o;
        }
        *d = rate * y[k];
    }
}

struct PhasedEntry {
    index: [usize; 4],
    m: Complex64,
    omega: f64,
}

fn phased_entries(entries: &[TensorEntry], eta: f64) -> Vec<PhasedEntry> {
    let inv = 1.0 / (eta * eta);
    entries.iter().map(|e| PhasedEntry { index: e.index, m: e.m, omega: e.delta_e * inv }).collect()
}

fn prelimit_field(entries: &[PhasedEntry], t: f64, y: &[Complex64], dy: &mut [Complex64]) {
    dy.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
    for e in entries {
        let [k, kp, j, jp] = e.index;
        let phase = if e.omega == 0.0 { Complex64::new(1.0, 0.0) } else { Complex64::from_polar(1.0, t * e.omega) };
        dy[k] += e.m * phase * y[j] * y[jp].conj() * y[kp];
    }
}

/// `(∂_T F)_k = Σ_{k'} M_{k,k'} |F_{k'}|² F_k`.
pub fn rhs_limit(f: &StateVector, coeffs: &CoefficientSet) -> Result<StateVector> {
    check_dim(coeffs.k(), f.as_slice())?;
    let mut out = StateVector::zeros(f.len());
    limit_field(&coeffs.limit, f.as_slice(), &mut out.0);
    Ok(out)
}

fn tensor_entries(coeffs: &CoefficientSet, eta: f64) -> Result<Vec<PhasedEntry>> {
    let tensor = coeffs.tensor.as_ref().ok_or(Error::MissingTensor)?;
    if !(eta > 0.0) {
        return Err(Error::InvalidInput(format!("eta must be positive, got {eta}")));
    }
    Ok(phased_entries(&tensor.active_entries(), eta))
}

/// Prelimit right-hand side at macroscopic time `t`.
pub fn rhs_prelimit(t: f64, f: &StateVector, coeffs: &CoefficientSet, eta: f64) -> Result<StateVector> {
    check_dim(coeffs.k(), f.as_slice())?;
    let entries = tensor_entries(coeffs, eta)?;
    let mut out = StateVector::zeros(f.len());
    prelimit_field(&entries, t, f.as_slice(), &mut out.0);
    Ok(out)
}

fn validate_times(times: &[f64]) -> Result<()> {
    if times.first() != Some(&0.0) || times.len() < 2 {
        return Err(Error::InvalidInput("sample times must start at 0 and contain an end time".into()));
    }
    Ok(())
}

fn trajectory(times: &[f64], ys: Vec<Vec<Complex64>>, meta: SolverMeta) -> Trajectory {
    Trajectory { times: times.to_vec(), states: ys.into_iter().map(StateVector).collect(), meta }
}

/// Integrate the limit system and sample at `times` (starting at `0`).
pub fn evolve_limit(coeffs: &CoefficientSet, f0: &StateVector, times: &[f64], opts: &SolverOptions) -> Result<Trajectory> {
    check_dim(coeffs.k(), f0.as_slice())?;
    validate_times(times)?;
    let m = &coeffs.limit;
    let (ys, stats) = integrate(
        |_, y, dy| {
            limit_field(m, y, dy);
            Ok(())
        },
        f0.as_slice(),
        times,
        opts,
    )?;
    let meta = SolverMeta {
        method: "dopri5",
        rtol: opts.rtol,
        atol: opts.atol,
        max_step: opts.max_step,
        eta: None,
        accepted_steps: stats.accepted,
        rejected_steps: stats.rejected,
    };
    Ok(trajectory(times, ys, meta))
}

/// Integrate the prelimit system at coupling `eta`. The step is capped at
/// `c_step` periods of the fastest phase `max|ΔE| / η²`.
pub fn evolve_prelimit(
    coeffs: &CoefficientSet,
    f0: &StateVector,
    times: &[f64],
    eta: f64,
    opts: &SolverOptions,
    c_step: f64,
) -> Result<Trajectory> {
    check_dim(coeffs.k(), f0.as_slice())?;
    validate_times(times)?;
    if !(c_step > 0.0) {
        return Err(Error::InvalidInput(format!("c_step must be positive, got {c_step}")));
    }
    let entries = tensor_entries(coeffs, eta)?;
    let omega_max = entries.iter().fold(0.0, |m: f64, e| m.max(e.omega.abs()));
    let mut run_opts = *opts;
    if omega_max > 0.0 {
        run_opts.max_step = run_opts.max_step.min(c_step * 2.0 * PI / omega_max);
    }
    let (ys, stats) = integrate(
        |t, y, dy| {
            prelimit_field(&entries, t, y, dy);
            Ok(())
        },
        f0.as_slice(),
        times,
        &run_opts,
    )?;
    let meta = SolverMeta {
        method: "dopri5",
        rtol: opts.rtol,
        atol: opts.atol,
        max_step: run_opts.max_step,
        eta: Some(eta),
        accepted_steps: stats.accepted,
        rejected_steps: stats.rejected,
    };
    Ok(trajectory(times, ys, meta))
}

/// `1 / (1 + ((1 − x₀)/x₀) e^{−2 Γ̃ T})`.
pub fn logistic_bound(x0: f64, gamma_tilde: f64, t: f64) -> Result<f64> {
    if !(x0 > 0.0 && x0 <= 1.0) {
        return Err(Error::InvalidGroundMass(x0));
    }
    if !(gamma_tilde > 0.0) || !gamma_tilde.is_finite() {
        return Err(Error::InvalidInput(format!("rate must be positive, got {gamma_tilde}")));
    }
    Ok(logistic_with_mass(x0, 1.0, gamma_tilde, t))
}

/// Logistic bound for total mass `m`: `m / (1 + ((m − x₀)/x₀) e^{−2 Γ̃ m T})`.
pub fn logistic_with_mass(x0: f64, m: f64, gamma_tilde: f64, t: f64) -> f64 {
    m / (1.0 + ((m - x0) / x0) * (-2.0 * gamma_tilde * m * t).exp())
}

/// Per-sample diagnostics of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsSeries {
    pub times: Vec<f64>,
    pub mass: Vec<f64>,
    pub energy: Vec<f64>,
    pub ground: Vec<f64>,
    /// `tail[i][n] = m_n(T_i) = Σ_{k>n} |F_k(T_i)|²`.
    pub tail: Vec<Vec<f64>>,
    /// `Γ̃ = min_{1≤k'≤s} Γ_{0,k'}` over the support `s` of the initial data.
    pub gamma_tilde: Option<f64>,
    pub logistic: Option<Vec<f64>>,
    /// Why the logistic bound was omitted, if it was.
    pub logistic_note: Option<String>,
}

pub fn diagnostics(traj: &Trajectory, energies: &[f64], coeffs: &CoefficientSet) -> Result<DiagnosticsSeries> {
    let k = coeffs.k();
    if energies.len() != k {
        return Err(Error::Dimension(format!("{} energies for {k} modes", energies.len())));
    }
    for s in &traj.states {
        check_dim(k, s.as_slice())?;
    }
    let mass: Vec<f64> = traj.states.iter().map(|s| s.mass()).collect();
    let energy = traj.states.iter().map(|s| s.energy(energies)).collect();
    let ground: Vec<f64> = traj.states.iter().map(|s| s.ground_occupation()).collect();
    let tail = traj.states.iter().map(|s| s.tail_masses()).collect();

    let mut gamma_tilde = None;
    let mut logistic = None;
    let mut note = None;
    match traj.states.first() {
        None => note = Some("empty trajectory".to_string()),
        Some(f0) => {
            let x0 = f0.ground_occupation();
            match f0.support() {
                _ if x0 == 0.0 => note = Some("zero initial ground occupation".to_string()),
                Some(s) if s >= 1 => {
                    let g = (1..=s).map(|kp| coeffs.fgr[[0, kp]]).fold(f64::INFINITY, f64::min);
                    gamma_tilde = Some(g);
                    if g < RATE_FLOOR {
                        note = Some(format!("ground-row rate {g:e} below {RATE_FLOOR:e}"));
                    } else {
                        let m0 = mass[0];
                        logistic = Some(traj.times.iter().map(|&t| logistic_with_mass(x0, m0, g, t)).collect());
                    }
                }
                _ => note = Some("initial data supported on the ground mode only".to_string()),
            }
        }
    }

    Ok(DiagnosticsSeries {
        times: traj.times.clone(),
        mass,
        energy,
        ground,
        tail,
        gamma_tilde,
        logistic,
        logistic_note: note,
    })
}

impl DiagnosticsSeries {
    /// `max_i |mass_i − mass_0|`.
    pub fn max_mass_drift(&self) -> f64 {
        let m0 = self.mass.first().copied().unwrap_or(0.0);
        self.mass.iter().fold(0.0, |acc, m| acc.max((m - m0).abs()))
    }

    /// Largest increase of the energy between consecutive samples (`0` if none).
    pub fn max_energy_increase(&self) -> f64 {
        self.energy.windows(2).fold(0.0, |acc, w| acc.max(w[1] - w[0]))
    }

    /// Largest increase of any tail mass between consecutive samples.
    pub fn max_tail_increase(&self) -> f64 {
        self.tail
            .windows(2)
            .flat_map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| b - a).collect::<Vec<_>>())
            .fold(0.0, f64::max)
    }

    /// `min_i (|F_0(T_i)|² − bound_i)`.
    pub fn min_logistic_margin(&self) -> Option<f64> {
        self.logistic
            .as_ref()
            .map(|b| self.ground.iter().zip(b).map(|(g, l)| g - l).fold(f64::INFINITY, f64::min))
    }

    /// Excited mass `Σ_{k≥1} |F_k|²` at each sample.
    pub fn excited_mass(&self) -> Vec<f64> {
        self.mass.iter().zip(&self.ground).map(|(m, g)| m - g).collect()
    }

    /// First sample time at which the excited mass is below `threshold`.
    pub fn bec_time(&self, threshold: f64) -> Option<f64> {
        self.excited_mass().iter().zip(&self.times).find(|(e, _)| **e < threshold).map(|(_, t)| *t)
    }
}
