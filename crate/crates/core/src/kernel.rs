//! Radial Fourier transforms and two-body interaction kernels.
//!
//! Fourier convention: `f̂(ξ) = ∫ f(x) e^{−i x·ξ} dx`, inverse with the factor
//! `(2π)^{−3}`. For radial `f` this reduces to
//! `f̂(ρ) = 4π ∫₀^∞ f(r) sin(ρr)/(ρr) r² dr`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::trap::RadialGrid;
use crate::{Error, Result};

/// Uniform momentum grid with nodes `ρ_i = i · ρ_max / n`, `i = 1..=n`.
///
/// Functions on this grid are stored on the `n + 1` abscissae `0, h, …, ρ_max`
/// so that quadrature covers `[0, ρ_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumGrid {
    rho_max: f64,
    n_rho: usize,
}

impl MomentumGrid {
    pub fn new(rho_max: f64, n_rho: usize) -> Result<Self> {
        if !(rho_max.is_finite() && rho_max > 0.0) {
            return Err(Error::InvalidInput(format!("rho_max must be positive, got {rho_max}")));
        }
        if n_rho < 8 {
            return Err(Error::Dimension(format!("momentum grid needs at least 8 nodes, got {n_rho}")));
        }
        Ok(Self { rho_max, n_rho })
    }

    /// Default cutoff `4 · max|ΔE| + 8`.
    pub fn for_gaps(max_gap: f64, n_rho: usize) -> Result<Self> {
        Self::new(4.0 * max_gap.abs() + 8.0, n_rho)
    }

    pub fn rho_max(&self) -> f64 {
        self.rho_max
    }

    pub fn n_rho(&self) -> usize {
        self.n_rho
    }

    pub fn spacing(&self) -> f64 {
        self.rho_max / self.n_rho as f64
    }

    /// Nodes in `(0, ρ_max]`.
    pub fn nodes(&self) -> Vec<f64> {
        let h = self.spacing();
        (1..=self.n_rho).map(|i| i as f64 * h).collect()
    }

    /// Abscissae `0, h, …, ρ_max` on which momentum-space samples are stored.
    pub fn abscissae(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..=self.n_rho).map(|i| i as f64 * h).collect()
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// `f̂(ρ)` at a single momentum by the trapezoidal rule on the radial grid.
pub fn fourier_radial_at(f: &[f64], grid: &RadialGrid, rho: f64) -> f64 {
    let nodes = grid.nodes();
    let n = nodes.len();
    let mut acc = 0.0;
    for i in 0..n {
        let r = nodes[i];
        let w = if i == n - 1 { 0.5 } else { 1.0 };
        acc += w * f[i] * sinc(rho * r) * r * r;
    }
    4.0 * PI * acc * grid.spacing()
}

/// Radial Fourier transform of `f` (sampled on `grid`) on the abscissae of
/// `momenta`, origin included.
pub fn fourier_radial(f: &[f64], grid: &RadialGrid, momenta: &MomentumGrid) -> Result<Vec<f64>> {
    if f.len() != grid.len() {
        return Err(Error::GridMismatch(format!("{} samples on a {}-point grid", f.len(), grid.len())));
    }
    if f.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("non-finite sample in radial profile".into()));
    }
    Ok(momenta
        .abscissae()
        .par_iter()
        .map(|&rho| fourier_radial_at(f, grid, rho))
        .collect())
}

/// Inverse radial transform `f(r) = (2π)^{−3} 4π ∫ f̂(ρ) sin(ρr)/(ρr) ρ² dρ`
/// at the nodes of `grid`, by Simpson's rule on the momentum abscissae.
pub fn inverse_fourier_radial(fhat: &[f64], momenta: &MomentumGrid, grid: &RadialGrid) -> Result<Vec<f64>> {
    if fhat.len() != momenta.n_rho() + 1 {
        return Err(Error::GridMismatch("transform length does not match the momentum grid".into()));
    }
    let rho = momenta.abscissae();
    let h = momenta.spacing();
    let pref = 4.0 * PI / (2.0 * PI).powi(3);
    Ok(grid
        .nodes()
        .par_iter()
        .map(|&r| {
            let integrand: Vec<f64> = rho.iter().zip(fhat).map(|(p, f)| f * sinc(p * r) * p * p).collect();
            pref * crate::quadrature::simpson(&integrand, h)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelRole {
    /// Particle–field coupling `w`.
    PhotonCoupling,
    /// Classical pair interaction `v`.
    PairInteraction,
}

/// Gaussian two-body kernel `A e^{−r²/(2σ²)}` with its cached transform.
#[derive(Debug, Clone)]
pub struct InteractionKernel {
    role: KernelRole,
    amplitude: f64,
    width: f64,
    profile: Vec<f64>,
    transform: Vec<f64>,
    momenta: MomentumGrid,
}

impl InteractionKernel {
    pub fn gaussian(role: KernelRole, amplitude: f64, width: f64, grid: &RadialGrid, momenta: &MomentumGrid) -> Result<Self> {
        if !amplitude.is_finite() || !(width.is_finite() && width > 0.0) {
            return Err(Error::InvalidInput(format!("kernel needs finite amplitude and positive width, got ({amplitude}, {width})")));
        }
        let profile: Vec<f64> = grid
            .nodes()
            .iter()
            .map(|r| amplitude * (-r * r / (2.0 * width * width)).exp())
            .collect();
        let transform = fourier_radial(&profile, grid, momenta)?;
        Ok(Self { role, amplitude, width, profile, transform, momenta: *momenta })
    }

    /// Gaussian of unit integral and width `σ`, approximating `δ` as `σ → 0`.
    pub fn normalized_gaussian(role: KernelRole, width: f64, grid: &RadialGrid, momenta: &MomentumGrid) -> Result<Self> {
        let amplitude = (2.0 * PI * width * width).powf(-1.5);
        Self::gaussian(role, amplitude, width, grid, momenta)
    }

    pub fn role(&self) -> KernelRole {
        self.role
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn profile(&self) -> &[f64] {
        &self.profile
    }

    /// Transform on the momentum abscissae, origin included.
    pub fn transform(&self) -> &[f64] {
        &self.transform
    }

    pub fn momenta(&self) -> &MomentumGrid {
        &self.momenta
    }

    /// Closed-form transform `A (2πσ²)^{3/2} e^{−σ²ρ²/2}`.
    pub fn exact_transform(&self, rho: f64) -> f64 {
        let s2 = self.width * self.width;
        self.amplitude * (2.0 * PI * s2).powf(1.5) * (-s2 * rho * rho / 2.0).exp()
    }

    pub fn l1_norm(&self, grid: &RadialGrid) -> f64 {
        grid.integrate_3d(&self.profile.iter().map(|x| x.abs()).collect::<Vec<_>>())
    }

    pub fn l2_norm(&self, grid: &RadialGrid) -> f64 {
        grid.integrate_3d(&self.profile.iter().map(|x| x * x).collect::<Vec<_>>()).sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        self.profile.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// `(∫ (1 + r²)^s |w(r)|² 4πr² dr)^{1/2}`.
    pub fn weighted_l2_norm(&self, grid: &RadialGrid, s: f64) -> f64 {
        let weighted: Vec<f64> = self
            .profile
            .iter()
            .zip(grid.nodes())
            .map(|(w, r)| (1.0 + r * r).powf(s) * w * w)
            .collect();
        grid.integrate_3d(&weighted).sqrt()
    }

    /// `(w * u)(r)` for radial `u`, evaluated in real space. The angular
    /// integral of the Gaussian is done in closed form, leaving one radial
    /// trapezoid sum per node.
    pub fn convolve(&self, u: &[f64], grid: &RadialGrid) -> Result<Vec<f64>> {
        if u.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} samples on a grid of {}", u.len(), grid.len())));
        }
        let s2 = 2.0 * self.width * self.width;
        let h = grid.spacing();
        let nodes = grid.nodes();
        let last = nodes.len() - 1;
        let pref = PI * self.amplitude * s2 * h;
        Ok(nodes
            .par_iter()
            .map(|&r| {
                let acc: f64 = nodes
                    .iter()
                    .zip(u)
                    .enumerate()
                    .map(|(i, (&s, &us))| {
                        let wgt = if i == last { 0.5 } else { 1.0 };
                        wgt * us * s * ((-(r - s) * (r - s) / s2).exp() - (-(r + s) * (r + s) / s2).exp())
                    })
                    .sum();
                pref / r * acc
            })
            .collect())
    }

    /// Finite `L¹`, `L²`, `L^∞` and weighted `L²_s` norms with `s > 1/2`.
    pub fn check_regularity(&self, grid: &RadialGrid, s: f64) -> Result<()> {
        if s <= 0.5 {
            return Err(Error::InvalidInput(format!("weight exponent must exceed 1/2, got {s}")));
        }
        let norms = [self.l1_norm(grid), self.l2_norm(grid), self.linf_norm(), self.weighted_l2_norm(grid, s)];
        if norms.iter().all(|n| n.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidInput("kernel norms are not finite".into()))
        }
    }
}
