#![allow(dead_code)]

use cascade_core::coeffs::{Conventions, ResonanceModel};
use cascade_core::kernel::{InteractionKernel, KernelRole, MomentumGrid};
use cascade_core::trap::{solve_radial_eigenpairs, EigenBasis, Potential, RadialGrid};

pub fn cascade_trap() -> Potential {
    Potential::Anharmonic { alpha: 0.01, beta: 2e-4 }
}

pub struct Setup {
    pub grid: RadialGrid,
    pub basis: EigenBasis,
    pub momenta: MomentumGrid,
    pub w: InteractionKernel,
    pub v: InteractionKernel,
}

pub fn setup(k: usize, n_rho: usize) -> Setup {
    let grid = RadialGrid::new(25.0, 2500).unwrap();
    let basis = solve_radial_eigenpairs(&cascade_trap(), &grid, k).unwrap();
    let e = basis.energies();
    let momenta = MomentumGrid::for_gaps(e[k - 1] - e[0], n_rho).unwrap();
    let w = InteractionKernel::gaussian(KernelRole::PhotonCoupling, 4.5, 0.5, &grid, &momenta).unwrap();
    let v = InteractionKernel::gaussian(KernelRole::PairInteraction, 1.0, 1.0, &grid, &momenta).unwrap();
    Setup { grid, basis, momenta, w, v }
}

pub fn model(k: usize, n_rho: usize) -> ResonanceModel {
    let s = setup(k, n_rho);
    ResonanceModel::new(&s.basis, &s.w, &s.v, Conventions::default()).unwrap()
}
