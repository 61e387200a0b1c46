//! Hartree, Lamb-shift and Fermi-Golden-Rule coefficients.
//!
//! For a pair of modes `p = (k, k')` write `u_p = χ_k χ_{k'}` and
//! `g_p = w * u_p`, so that `ĝ_p = ŵ · û_p`. With `a_{p,q}` the spectral
//! density of `(g_p, g_q)` and `Δ = E_j − E_{j'}` the regularized resolvent
//! sum is
//!
//! ```text
//! S^ε_{k,k';j,j'} = conj(R(a, Δ, ε)) + R(a, −Δ, ε),   R(a, λ, ε) = ∫ a(ρ) / (ρ − λ + iε) dρ
//! ```
//!
//! and the quadruple coefficient is `M^ε = −i Λ^Har + i S^ε`. Its real part
//! `Re S` is the Lamb shift and `Im S` is the regularized transition rate,
//! which tends to `±π a(|Δ|)` as `ε ↓ 0`.

use std::f64::consts::PI;

use ndarray::{Array2, Array4};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::kernel::{fourier_radial, InteractionKernel, KernelRole, MomentumGrid};
use crate::quadrature::{richardson3, simpson};
use crate::spectral::{
    off_shell_integral, principal_value, resolvent_pairing, spectral_density, SpectralDensity,
};
use crate::trap::{mode_product, EigenBasis};
use crate::{Error, Result};

pub const DEFAULT_K_MAX_TENSOR: usize = 12;

/// Regularization used for the prelimit tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpsilonPolicy {
    /// `ε = η²`.
    EtaSquared,
    /// `ε ↓ 0` by three-point Richardson extrapolation.
    Extrapolated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conventions {
    /// Multiply the spectral density by `π` in `Γ^FGR`.
    pub fgr_pi: bool,
    /// Base `ε` of the extrapolation for the Lamb shift.
    pub lamb_eps: f64,
    /// Base `ε` of the extrapolation for the resolvent route to `Γ^FGR`.
    pub fgr_eps: f64,
    pub epsilon_policy: EpsilonPolicy,
    /// Drop the quadruples `(k, k; j, j)` with `j ≠ k` from the prelimit
    /// tensor. They carry no phase yet do not appear in the limit system.
    pub drop_direct_secular: bool,
    pub k_max_tensor: usize,
}

impl Default for Conventions {
    fn default() -> Self {
        Self {
            fgr_pi: true,
            lamb_eps: 1e-3,
            fgr_eps: 1e-5,
            epsilon_policy: EpsilonPolicy::EtaSquared,
            drop_direct_secular: true,
            k_max_tensor: DEFAULT_K_MAX_TENSOR,
        }
    }
}

/// Limit coefficients `M_{k,k'}` with their components, and optionally the
/// prelimit quadruple tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    pub energies: Vec<f64>,
    pub hartree: Array2<f64>,
    pub lamb: Array2<f64>,
    pub fgr: Array2<f64>,
    pub limit: Array2<Complex64>,
    pub conventions: Conventions,
    pub tensor: Option<PrelimitTensor>,
}

impl CoefficientSet {
    /// Assemble `M_{k,k'} = −i(Λ^Har − Λ^LS) − Γ (1_{k>k'} − 1_{k'>k})`.
    pub fn from_components(
        energies: Vec<f64>,
        hartree: Array2<f64>,
        lamb: Array2<f64>,
        fgr: Array2<f64>,
        conventions: Conventions,
    ) -> Result<Self> {
        let k = energies.len();
        for (name, m) in [("hartree", &hartree), ("lamb", &lamb), ("fgr", &fgr)] {
            if m.dim() != (k, k) {
                return Err(Error::Dimension(format!("{name} matrix is {:?}, expected ({k}, {k})", m.dim())));
            }
        }
        for a in 0..k {
            if fgr[[a, a]] != 0.0 {
                return Err(Error::InvalidInput(format!("Γ[{a},{a}] must vanish")));
            }
            for b in 0..k {
                let g = fgr[[a, b]];
                if !(g >= 0.0) || g != fgr[[b, a]] {
                    return Err(Error::InvalidInput(format!("Γ must be symmetric and non-negative at ({a},{b})")));
                }
            }
        }
        let limit = Array2::from_shape_fn((k, k), |(a, b)| {
            let orient = if b > a {
                1.0
            } else if a > b {
                -1.0
            } else {
                0.0
            };
            Complex64::new(orient * fgr[[a, b]], -(hartree[[a, b]] - lamb[[a, b]]))
        });
        Ok(Self { energies, hartree, lamb, fgr, limit, conventions, tensor: None })
    }

    /// Two modes with energies `(0, 1)`, no Hartree or Lamb shift and
    /// `Γ_{0,1} = gamma`.
    pub fn two_mode_logistic(gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidInput(format!("rate must be non-negative, got {gamma}")));
        }
        let fgr = Array2::from_shape_vec((2, 2), vec![0.0, gamma, gamma, 0.0]).unwrap();
        Self::from_components(vec![0.0, 1.0], Array2::zeros((2, 2)), Array2::zeros((2, 2)), fgr, Conventions::default())
    }

    pub fn k(&self) -> usize {
        self.energies.len()
    }

    pub fn with_tensor(mut self, tensor: PrelimitTensor) -> Result<Self> {
        if tensor.k() != self.k() {
            return Err(Error::Dimension(format!("tensor has K = {}, coefficients K = {}", tensor.k(), self.k())));
        }
        self.tensor = Some(tensor);
        Ok(self)
    }

    /// `max_{k,k'} |Re M_{k,k'} + Re M_{k',k}|`.
    pub fn antisymmetry_defect(&self) -> f64 {
        let k = self.k();
        let mut worst: f64 = 0.0;
        for a in 0..k {
            for b in 0..k {
                worst = worst.max((self.limit[[a, b]].re + self.limit[[b, a]].re).abs());
            }
        }
        worst
    }

    /// `max_k Σ_{k'} |M_{k,k'}|`.
    pub fn row_sum_bound(&self) -> f64 {
        self.limit.rows().into_iter().map(|r| r.iter().map(|m| m.norm()).sum::<f64>()).fold(0.0, f64::max)
    }
}

/// One quadruple `(k, k', j, j')` that enters the prelimit right-hand side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TensorEntry {
    pub index: [usize; 4],
    pub m: Complex64,
    pub delta_e: f64,
}

/// Quadruple coefficients `M^η_{k,k';j,j'}` with energy mismatches.
#[derive(Debug, Clone, PartialEq)]
pub struct PrelimitTensor {
    pub eta: f64,
    /// Regularization used, `0` when extrapolated.
    pub epsilon: f64,
    pub delta_e: Array4<f64>,
    pub m: Array4<Complex64>,
    pub hartree: Array4<f64>,
    pub included: Array4<bool>,
}

impl PrelimitTensor {
    pub fn k(&self) -> usize {
        self.delta_e.dim().0
    }

    pub fn len(&self) -> usize {
        self.delta_e.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta_e.is_empty()
    }

    /// Keep only the quadruples `(k, k'; k, k')`.
    pub fn restrict_to_diagonal(&self) -> Self {
        let mut out = self.clone();
        for ((k, kp, j, jp), inc) in out.included.indexed_iter_mut() {
            *inc = *inc && k == j && kp == jp;
        }
        out
    }

    /// Included quadruples in row-major order.
    pub fn active_entries(&self) -> Vec<TensorEntry> {
        self.included
            .indexed_iter()
            .filter(|(_, inc)| **inc)
            .map(|((k, kp, j, jp), _)| TensorEntry {
                index: [k, kp, j, jp],
                m: self.m[[k, kp, j, jp]],
                delta_e: self.delta_e[[k, kp, j, jp]],
            })
            .collect()
    }

    /// `max |ΔE|` over included entries.
    pub fn max_frequency(&self) -> f64 {
        self.active_entries().iter().fold(0.0, |m, e| m.max(e.delta_e.abs()))
    }
}

/// Precomputed momentum-space data for one basis and one pair of kernels.
#[derive(Debug, Clone)]
pub struct ResonanceModel {
    energies: Vec<f64>,
    momenta: MomentumGrid,
    pair_index: Vec<Vec<usize>>,
    pair_hat: Vec<Vec<f64>>,
    coupling_hat: Vec<Vec<f64>>,
    hartree: Array2<f64>,
    conventions: Conventions,
}

impl ResonanceModel {
    pub fn new(basis: &EigenBasis, w: &InteractionKernel, v: &InteractionKernel, conventions: Conventions) -> Result<Self> {
        if w.role() != KernelRole::PhotonCoupling || v.role() != KernelRole::PairInteraction {
            return Err(Error::InvalidInput("expected the photon coupling w and the pair interaction v".into()));
        }
        if w.momenta() != v.momenta() {
            return Err(Error::GridMismatch("w and v are transformed on different momentum grids".into()));
        }
        let k = basis.len();
        if k == 0 {
            return Err(Error::Dimension("empty basis".into()));
        }
        let momenta = *w.momenta();
        let energies = basis.energies().to_vec();
        let max_gap = energies[k - 1] - energies[0];
        if 4.0 * max_gap > momenta.rho_max() {
            return Err(Error::InvalidInput(format!(
                "momentum cutoff {} is below 4 × the largest gap {max_gap}",
                momenta.rho_max()
            )));
        }

        let mut pair_index = vec![vec![0; k]; k];
        let mut pairs = Vec::new();
        for a in 0..k {
            for b in a..k {
                pair_index[a][b] = pairs.len();
                pair_index[b][a] = pairs.len();
                pairs.push((a, b));
            }
        }
        let pair_hat = pairs
            .par_iter()
            .map(|&(a, b)| fourier_radial(&mode_product(basis, a, b)?, basis.grid(), &momenta))
            .collect::<Result<Vec<_>>>()?;
        let coupling_hat: Vec<Vec<f64>> =
            pair_hat.iter().map(|u| u.iter().zip(w.transform()).map(|(x, y)| x * y).collect()).collect();

        let rho = momenta.abscissae();
        let h = momenta.spacing();
        let pref = 4.0 * PI / (2.0 * PI).powi(3);
        let np = pairs.len();
        let entries: Vec<f64> = (0..np * np)
            .into_par_iter()
            .map(|idx| {
                let (p, q) = (idx / np, idx % np);
                let integrand: Vec<f64> = (0..rho.len())
                    .map(|i| rho[i] * rho[i] * pair_hat[p][i] * v.transform()[i] * pair_hat[q][i])
                    .collect();
                pref * simpson(&integrand, h)
            })
            .collect();
        let mut hartree = Array2::from_shape_vec((np, np), entries).unwrap();
        // exact symmetry under (p, q) exchange
        for p in 0..np {
            for q in 0..p {
                hartree[[q, p]] = hartree[[p, q]];
            }
        }

        Ok(Self { energies, momenta, pair_index, pair_hat, coupling_hat, hartree, conventions })
    }

    pub fn k(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn momenta(&self) -> &MomentumGrid {
        &self.momenta
    }

    pub fn conventions(&self) -> &Conventions {
        &self.conventions
    }

    fn pair(&self, k: usize, kp: usize) -> Result<usize> {
        let len = self.k();
        for i in [k, kp] {
            if i >= len {
                return Err(Error::IndexOutOfRange { index: i, len });
            }
        }
        Ok(self.pair_index[k][kp])
    }

    /// `(χ_k χ_{k'})^` on the momentum abscissae.
    pub fn pair_transform(&self, k: usize, kp: usize) -> Result<&[f64]> {
        Ok(&self.pair_hat[self.pair(k, kp)?])
    }

    /// `ĝ = ŵ · (χ_k χ_{k'})^` on the momentum abscissae.
    pub fn coupling_transform(&self, k: usize, kp: usize) -> Result<&[f64]> {
        Ok(&self.coupling_hat[self.pair(k, kp)?])
    }

    /// Spectral density of `(w * χ_kχ_{k'}, w * χ_jχ_{j'})`.
    pub fn density(&self, k: usize, kp: usize, j: usize, jp: usize) -> Result<SpectralDensity> {
        let p = self.pair(k, kp)?;
        let q = self.pair(j, jp)?;
        spectral_density(&self.coupling_hat[p], &self.coupling_hat[q], &self.momenta)
    }

    fn gap(&self, k: usize, kp: usize) -> f64 {
        self.energies[k] - self.energies[kp]
    }

    fn pi_factor(&self) -> f64 {
        if self.conventions.fgr_pi {
            PI
        } else {
            1.0
        }
    }

    /// `Γ^FGR_{k,k'}` from the density at the resonance `|E_k − E_{k'}|`.
    pub fn gamma_fgr(&self, k: usize, kp: usize) -> Result<f64> {
        let p = self.pair(k, kp)?;
        if k == kp {
            return Ok(0.0);
        }
        let lambda = self.gap(k, kp).abs();
        check_on_grid(lambda, &self.momenta)?;
        let a = spectral_density(&self.coupling_hat[p], &self.coupling_hat[p], &self.momenta)?;
        Ok(self.pi_factor() * a.value_at(lambda))
    }

    /// `Γ^FGR_{k,k'}` as `−(1/π) Im lim_{ε↓0} R(a, |ΔE|, ε)`, extrapolated from
    /// `ε = fgr_eps, fgr_eps/2, fgr_eps/4`.
    pub fn gamma_fgr_resolvent(&self, k: usize, kp: usize) -> Result<f64> {
        let p = self.pair(k, kp)?;
        if k == kp {
            return Ok(0.0);
        }
        let lambda = self.gap(k, kp).abs();
        check_on_grid(lambda, &self.momenta)?;
        let a = spectral_density(&self.coupling_hat[p], &self.coupling_hat[p], &self.momenta)?;
        let e = self.conventions.fgr_eps;
        let im = richardson3(
            resolvent_pairing(&a, lambda, e)?.im,
            resolvent_pairing(&a, lambda, e / 2.0)?.im,
            resolvent_pairing(&a, lambda, e / 4.0)?.im,
        );
        Ok(-im / PI * self.pi_factor())
    }

    /// `Λ^Har_{k,k';j,j'} = ⟨χ_kχ_{k'}, v * (χ_jχ_{j'})⟩`.
    pub fn lambda_hartree(&self, k: usize, kp: usize, j: usize, jp: usize) -> Result<f64> {
        Ok(self.hartree[[self.pair(k, kp)?, self.pair(j, jp)?]])
    }

    /// `S^ε_{k,k';j,j'}` at a fixed `ε > 0`.
    pub fn resolvent_sum(&self, k: usize, kp: usize, j: usize, jp: usize, eps: f64) -> Result<Complex64> {
        let a = self.density(k, kp, j, jp)?;
        let delta = self.gap(j, jp);
        check_on_grid(delta.abs(), &self.momenta)?;
        Ok(resolvent_pairing(&a, delta, eps)?.conj() + resolvent_pairing(&a, -delta, eps)?)
    }

    /// `lim_{ε↓0} S^ε` by three-point extrapolation from `lamb_eps`.
    ///
    /// For `Δ = 0` both poles sit on the endpoint `ρ = 0`, where `a` vanishes
    /// quadratically. The expansion in `ε` then carries `ε² log ε` terms that
    /// the extrapolation does not cancel, and the limit `2 ∫ a(ρ)/ρ dρ` is
    /// evaluated directly instead.
    pub fn resolvent_sum_limit(&self, k: usize, kp: usize, j: usize, jp: usize) -> Result<Complex64> {
        if self.gap(j, jp) == 0.0 {
            let a = self.density(k, kp, j, jp)?;
            return Ok(Complex64::new(2.0 * off_shell_integral(&a, 0.0)?, 0.0));
        }
        let e = self.conventions.lamb_eps;
        Ok(richardson3(
            self.resolvent_sum(k, kp, j, jp, e)?,
            self.resolvent_sum(k, kp, j, jp, e / 2.0)?,
            self.resolvent_sum(k, kp, j, jp, e / 4.0)?,
        ))
    }

    /// `Λ^LS_{k,k';j,j'} = PV ∫ a(ρ) [1/(ρ − ΔE) + 1/(ρ + ΔE)] dρ`, as the real
    /// part of the extrapolated resolvent sum.
    pub fn lambda_lamb_shift(&self, k: usize, kp: usize, j: usize, jp: usize) -> Result<f64> {
        Ok(self.resolvent_sum_limit(k, kp, j, jp)?.re)
    }

    /// The same Lamb shift evaluated directly at `ε = 0` by singularity
    /// subtraction.
    pub fn lambda_lamb_shift_pv(&self, k: usize, kp: usize, j: usize, jp: usize) -> Result<f64> {
        let a = self.density(k, kp, j, jp)?;
        let delta = self.gap(j, jp).abs();
        check_on_grid(delta, &self.momenta)?;
        if delta == 0.0 {
            return Ok(2.0 * off_shell_integral(&a, 0.0)?);
        }
        Ok(principal_value(&a, delta)? + off_shell_integral(&a, delta)?)
    }

    /// `M^ε_{k,k';j,j'} = −i Λ^Har + i S^ε`.
    pub fn regularized_entry(&self, k: usize, kp: usize, j: usize, jp: usize, eps: f64) -> Result<Complex64> {
        let s = self.resolvent_sum(k, kp, j, jp, eps)?;
        let har = self.lambda_hartree(k, kp, j, jp)?;
        Ok(Complex64::new(0.0, -har) + Complex64::i() * s)
    }

    fn limit_entry(&self, k: usize, kp: usize, j: usize, jp: usize) -> Result<Complex64> {
        let s = self.resolvent_sum_limit(k, kp, j, jp)?;
        let har = self.lambda_hartree(k, kp, j, jp)?;
        Ok(Complex64::new(0.0, -har) + Complex64::i() * s)
    }

    /// Limit coefficients on the diagonal quadruples `(k, k'; k, k')`.
    pub fn limit_set(&self) -> Result<CoefficientSet> {
        let k = self.k();
        let idx: Vec<(usize, usize)> = (0..k).flat_map(|a| (0..k).map(move |b| (a, b))).collect();
        let rows = idx
            .par_iter()
            .map(|&(a, b)| {
                let har = self.lambda_hartree(a, b, a, b)?;
                // Λ^LS and Γ are symmetric, so each unordered pair is computed once
                let (lo, hi) = (a.min(b), a.max(b));
                let lamb = self.lambda_lamb_shift(lo, hi, lo, hi)?;
                let fgr = self.gamma_fgr(lo, hi)?;
                Ok((har, lamb, fgr))
            })
            .collect::<Result<Vec<_>>>()?;
        let hartree = Array2::from_shape_fn((k, k), |(a, b)| rows[a * k + b].0);
        let lamb = Array2::from_shape_fn((k, k), |(a, b)| rows[a * k + b].1);
        let fgr = Array2::from_shape_fn((k, k), |(a, b)| rows[a * k + b].2);
        CoefficientSet::from_components(self.energies.clone(), hartree, lamb, fgr, self.conventions)
    }

    /// Quadruple tensor at coupling `η`, regularized according to the
    /// configured policy.
    pub fn prelimit_tensor(&self, eta: f64) -> Result<PrelimitTensor> {
        let k = self.k();
        if k > self.conventions.k_max_tensor {
            return Err(Error::TensorTooLarge { k, max: self.conventions.k_max_tensor });
        }
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::InvalidInput(format!("eta must be positive, got {eta}")));
        }
        let eps = match self.conventions.epsilon_policy {
            EpsilonPolicy::EtaSquared => eta * eta,
            EpsilonPolicy::Extrapolated => 0.0,
        };
        let n = k * k * k * k;
        let entries = (0..n)
            .into_par_iter()
            .map(|flat| {
                let (a, b, c, d) = (flat / (k * k * k), (flat / (k * k)) % k, (flat / k) % k, flat % k);
                let m = if eps > 0.0 {
                    self.regularized_entry(a, b, c, d, eps)?
                } else {
                    self.limit_entry(a, b, c, d)?
                };
                Ok((m, self.lambda_hartree(a, b, c, d)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let e = &self.energies;
        let delta_e = Array4::from_shape_fn((k, k, k, k), |(a, b, c, d)| (e[a] - e[b]) - (e[c] - e[d]));
        let m = Array4::from_shape_fn((k, k, k, k), |(a, b, c, d)| entries[((a * k + b) * k + c) * k + d].0);
        let hartree = Array4::from_shape_fn((k, k, k, k), |(a, b, c, d)| entries[((a * k + b) * k + c) * k + d].1);
        let drop = self.conventions.drop_direct_secular;
        let included = Array4::from_shape_fn((k, k, k, k), |(a, b, c, d)| !(drop && a == b && c == d && a != c));
        Ok(PrelimitTensor { eta, epsilon: eps, delta_e, m, hartree, included })
    }

    /// Limit coefficients together with the tensor at `η`.
    pub fn prelimit_set(&self, eta: f64) -> Result<CoefficientSet> {
        let tensor = self.prelimit_tensor(eta)?;
        self.limit_set()?.with_tensor(tensor)
    }
}

fn check_on_grid(lambda: f64, momenta: &MomentumGrid) -> Result<()> {
    if lambda >= momenta.rho_max() {
        return Err(Error::OutsideGrid { lambda, rho_max: momenta.rho_max() });
    }
    Ok(())
}

/// Limit coefficients for a basis and a pair of kernels.
pub fn assemble_limit_matrix(
    basis: &EigenBasis,
    w: &InteractionKernel,
    v: &InteractionKernel,
    conventions: Conventions,
) -> Result<CoefficientSet> {
    ResonanceModel::new(basis, w, v, conventions)?.limit_set()
}

/// Limit coefficients plus the prelimit tensor at `η`.
pub fn assemble_prelimit_tensor(
    basis: &EigenBasis,
    w: &InteractionKernel,
    v: &InteractionKernel,
    eta: f64,
    conventions: Conventions,
) -> Result<CoefficientSet> {
    if basis.len() > conventions.k_max_tensor {
        return Err(Error::TensorTooLarge { k: basis.len(), max: conventions.k_max_tensor });
    }
    ResonanceModel::new(basis, w, v, conventions)?.prelimit_set(eta)
}
