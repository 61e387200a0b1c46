//! Modal amplitudes and sampled trajectories.

use num_complex::Complex64;

use crate::{Error, Result};

/// Truncated amplitude sequence `F_0 … F_{K−1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(pub Vec<Complex64>);

impl StateVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("state has non-finite amplitudes".into()));
        }
        Ok(Self(amplitudes))
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn zeros(k: usize) -> Self {
        Self(vec![Complex64::new(0.0, 0.0); k])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    /// `‖F‖²_{ℓ²}`.
    pub fn mass(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `Σ_k E_k |F_k|²`.
    pub fn energy(&self, energies: &[f64]) -> f64 {
        self.0.iter().zip(energies).map(|(z, e)| e * z.norm_sqr()).sum()
    }

    pub fn ground_occupation(&self) -> f64 {
        self.0.first().map_or(0.0, |z| z.norm_sqr())
    }

    /// `m_n = Σ_{k>n} |F_k|²` for `n = 0 … K−2`.
    pub fn tail_masses(&self) -> Vec<f64> {
        let k = self.len();
        let mut out = vec![0.0; k.saturating_sub(1)];
        let mut acc = 0.0;
        for n in (0..k.saturating_sub(1)).rev() {
            acc += self.0[n + 1].norm_sqr();
            out[n] = acc;
        }
        out
    }

    /// Largest index with a nonzero amplitude.
    pub fn support(&self) -> Option<usize> {
        self.0.iter().rposition(|z| z.norm_sqr() > 0.0)
    }

    /// Rescale to unit `ℓ²` norm.
    pub fn normalized(&self) -> Result<Self> {
        let m = self.mass();
        if !(m > 0.0) {
            return Err(Error::InvalidInput("cannot normalize a zero state".into()));
        }
        let s = 1.0 / m.sqrt();
        Ok(Self(self.0.iter().map(|z| z * s).collect()))
    }

    /// `‖F − G‖_{ℓ²}`.
    pub fn distance(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverMeta {
    pub method: &'static str,
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    /// `None` for the limit system.
    pub eta: Option<f64>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

/// States sampled at increasing times starting at `0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub meta: SolverMeta,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&StateVector> {
        self.states.last()
    }
}

/// `n + 1` equally spaced times on `[0, t_end]`, the end point exact.
pub fn sample_times(t_end: f64, n: usize) -> Vec<f64> {
    let n = n.max(1);
    (0..=n).map(|i| if i == n { t_end } else { t_end * i as f64 / n as f64 }).collect()
}
