//! Weak-coupling sweep: distance between prelimit and limit trajectories over
//! a decreasing sequence of `η`.

use rayon::prelude::*;

use crate::cascade::{evolve_limit, evolve_prelimit, DEFAULT_C_STEP};
use crate::coeffs::ResonanceModel;
use crate::ode::SolverOptions;
use crate::state::{sample_times, StateVector};
use crate::{Error, Result};

pub const MIN_SWEEP_SAMPLES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    /// Number of sample intervals on `[0, T₀]`.
    pub samples: usize,
    pub solver: SolverOptions,
    pub c_step: f64,
    /// Keep only the quadruples `(k, k'; k, k')` in the prelimit tensor.
    pub diagonal_only: bool,
    /// Tolerated growth between consecutive rows for the non-increasing verdict.
    pub noise_factor: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            samples: 256,
            solver: SolverOptions::default(),
            c_step: DEFAULT_C_STEP,
            diagonal_only: false,
            noise_factor: 1.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub eta: f64,
    pub epsilon: f64,
    /// `max_i ‖F^η(T_i) − F(T_i)‖_{ℓ²}`.
    pub sup_distance: f64,
    pub terminal_distance: f64,
    pub initial_distance: f64,
    /// `max_i |‖F^η(T_i)‖² − ‖F^η(0)‖²|`.
    pub mass_drift: f64,
    pub accepted_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub t0: f64,
    pub samples: usize,
    pub rows: Vec<SweepRow>,
    pub strictly_decreasing: bool,
    pub non_increasing: bool,
}

impl ConvergenceReport {
    /// Ratio of the sup-distance at the largest `η` to that at the smallest.
    pub fn reduction_factor(&self) -> Option<f64> {
        match (self.rows.first(), self.rows.last()) {
            (Some(a), Some(b)) if self.rows.len() > 1 => Some(a.sup_distance / b.sup_distance),
            _ => None,
        }
    }
}

/// Run the limit system once and the prelimit system for every `η`, all from
/// `f0`, and compare them on a common grid of `samples + 1` times.
pub fn eta_sweep(
    model: &ResonanceModel,
    f0: &StateVector,
    t0: f64,
    etas: &[f64],
    opts: &SweepOptions,
) -> Result<ConvergenceReport> {
    if etas.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
        return Err(Error::InvalidInput("eta values must be positive".into()));
    }
    if etas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidInput("eta values must be strictly decreasing".into()));
    }
    if !(t0 > 0.0) || !t0.is_finite() {
        return Err(Error::InvalidInput(format!("T0 must be positive, got {t0}")));
    }
    if opts.samples < MIN_SWEEP_SAMPLES {
        return Err(Error::InvalidInput(format!("at least {MIN_SWEEP_SAMPLES} samples required")));
    }
    let guard = model.conventions().k_max_tensor;
    if model.k() > guard {
        return Err(Error::TensorTooLarge { k: model.k(), max: guard });
    }
    if etas.is_empty() {
        return Ok(ConvergenceReport {
            t0,
            samples: opts.samples,
            rows: Vec::new(),
            strictly_decreasing: true,
            non_increasing: true,
        });
    }

    let times = sample_times(t0, opts.samples);
    let limit = model.limit_set()?;
    let reference = evolve_limit(&limit, f0, &times, &opts.solver)?;

    let rows = etas
        .par_iter()
        .map(|&eta| {
            let run = || -> Result<SweepRow> {
                let mut tensor = model.prelimit_tensor(eta)?;
                if opts.diagonal_only {
                    tensor = tensor.restrict_to_diagonal();
                }
                let epsilon = tensor.epsilon;
                let coeffs = limit.clone().with_tensor(tensor)?;
                let traj = evolve_prelimit(&coeffs, f0, &times, eta, &opts.solver, opts.c_step)?;
                let dist: Vec<f64> = traj.states.iter().zip(&reference.states).map(|(a, b)| a.distance(b)).collect();
                let m0 = traj.states[0].mass();
                Ok(SweepRow {
                    eta,
                    epsilon,
                    sup_distance: dist.iter().copied().fold(0.0, f64::max),
                    terminal_distance: *dist.last().unwrap(),
                    initial_distance: dist[0],
                    mass_drift: traj.states.iter().fold(0.0, |acc, s| acc.max((s.mass() - m0).abs())),
                    accepted_steps: traj.meta.accepted_steps,
                })
            };
            run().map_err(|e| Error::Sweep { eta, source: Box::new(e) })
        })
        .collect::<Result<Vec<_>>>()?;

    let strictly_decreasing = rows.windows(2).all(|w| w[1].sup_distance < w[0].sup_distance);
    let non_increasing = rows.windows(2).all(|w| w[1].sup_distance <= opts.noise_factor * w[0].sup_distance);
    Ok(ConvergenceReport { t0, samples: opts.samples, rows, strictly_decreasing, non_increasing })
}
