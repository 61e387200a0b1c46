//! Shared construction of the basis, kernels and coefficient model.

use cascade_core::coeffs::{CoefficientSet, ResonanceModel};
use cascade_core::kernel::{InteractionKernel, KernelRole, MomentumGrid};
use cascade_core::trap::{solve_radial_eigenpairs, EigenBasis, RadialGrid};

use crate::config::{CoefficientSource, RhoMax, SimulationConfig};
use crate::error::CliError;

pub fn radial_grid(cfg: &SimulationConfig) -> Result<RadialGrid, CliError> {
    Ok(RadialGrid::new(cfg.trap.r_max, cfg.trap.n_points as usize)?)
}

pub fn basis(cfg: &SimulationConfig) -> Result<EigenBasis, CliError> {
    let grid = radial_grid(cfg)?;
    Ok(solve_radial_eigenpairs(&cfg.potential()?, &grid, cfg.trap.k as usize)?)
}

/// The first `k` modes of `basis`.
pub fn truncate(basis: &EigenBasis, k: usize) -> Result<EigenBasis, CliError> {
    let modes = (0..k).map(|i| basis.mode(i).map(<[f64]>::to_vec)).collect::<Result<Vec<_>, _>>()?;
    Ok(EigenBasis::from_parts(basis.energies()[..k].to_vec(), modes, basis.grid().clone())?)
}

pub fn momentum_grid(cfg: &SimulationConfig, basis: &EigenBasis) -> Result<MomentumGrid, CliError> {
    let e = basis.energies();
    let n = cfg.momentum.n_rho as usize;
    Ok(match cfg.momentum.rho_max {
        RhoMax::Fixed(r) => MomentumGrid::new(r, n)?,
        RhoMax::Keyword(_) => MomentumGrid::for_gaps(e[e.len() - 1] - e[0], n)?,
    })
}

pub fn kernels(
    cfg: &SimulationConfig,
    basis: &EigenBasis,
    momenta: &MomentumGrid,
) -> Result<(InteractionKernel, InteractionKernel), CliError> {
    let k = &cfg.kernels;
    let grid = basis.grid();
    let w = InteractionKernel::gaussian(KernelRole::PhotonCoupling, k.w_amplitude, k.w_width, grid, momenta)?;
    let v = InteractionKernel::gaussian(KernelRole::PairInteraction, k.v_amplitude, k.v_width, grid, momenta)?;
    Ok((w, v))
}

pub fn model_on(cfg: &SimulationConfig, basis: &EigenBasis, momenta: &MomentumGrid) -> Result<ResonanceModel, CliError> {
    let (w, v) = kernels(cfg, basis, momenta)?;
    Ok(ResonanceModel::new(basis, &w, &v, cfg.conventions())?)
}

pub fn model(cfg: &SimulationConfig, basis: &EigenBasis) -> Result<ResonanceModel, CliError> {
    let momenta = momentum_grid(cfg, basis)?;
    model_on(cfg, basis, &momenta)
}

/// Limit coefficients for the dynamics: computed from the trap, or the
/// synthetic two-mode preset.
pub fn limit_coefficients(cfg: &SimulationConfig) -> Result<(CoefficientSet, Option<ResonanceModel>), CliError> {
    match cfg.coefficient_source()? {
        CoefficientSource::Logistic(g) => {
            let mut set = CoefficientSet::two_mode_logistic(g)?;
            set.conventions = cfg.conventions();
            Ok((set, None))
        }
        CoefficientSource::Computed => {
            let b = basis(cfg)?;
            let m = model(cfg, &b)?;
            Ok((m.limit_set()?, Some(m)))
        }
    }
}
