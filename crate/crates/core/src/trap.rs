//! Truncated eigenbasis of the confining operator `-Δ + V` restricted to the
//! `ℓ = 0` radial sector.
//!
//! With `ψ(r) = r χ(r)` the radial problem becomes the 1D Dirichlet problem
//! `-ψ'' + V ψ = E ψ` on `(0, r_max]`, discretized with second-order central
//! differences. The eigenvalues are Richardson-extrapolated in `h²` against a
//! half-resolution solve; the modes are those of the requested grid.

use std::f64::consts::PI;

use crate::tridiag::lowest_eigenpairs;
use crate::{Error, Result};

/// Fraction of the box, measured from `r_max`, inside which every mode must
/// have decayed.
const DECAY_SHELL: f64 = 0.1;
/// Largest admissible `|ψ|` in the outer shell relative to the mode's peak.
pub const DECAY_TOLERANCE: f64 = 1e-6;
/// Default tolerance for near-resonant quadruples.
pub const DEFAULT_GAP_TOL: f64 = 1e-8;

/// Uniform radial grid `r_i = i · r_max / n`, `i = 1..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    r_max: f64,
    nodes: Vec<f64>,
}

impl RadialGrid {
    pub fn new(r_max: f64, n_points: usize) -> Result<Self> {
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(Error::InvalidInput(format!("r_max must be positive, got {r_max}")));
        }
        if n_points < 16 {
            return Err(Error::Dimension(format!("radial grid needs at least 16 points, got {n_points}")));
        }
        let h = r_max / n_points as f64;
        let mut nodes: Vec<f64> = (1..=n_points).map(|i| i as f64 * h).collect();
        nodes[n_points - 1] = r_max;
        Ok(Self { r_max, nodes })
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.r_max / self.nodes.len() as f64
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// `4π ∫₀^{r_max} f(r) r² dr` by the trapezoidal rule (the integrand
    /// vanishes at the origin).
    pub fn integrate_3d(&self, f: &[f64]) -> f64 {
        assert_eq!(f.len(), self.nodes.len());
        let n = f.len();
        let mut acc = 0.0;
        for i in 0..n - 1 {
            acc += f[i] * self.nodes[i] * self.nodes[i];
        }
        acc += 0.5 * f[n - 1] * self.r_max * self.r_max;
        4.0 * PI * acc * self.spacing()
    }
}

/// Confining potential of the trap.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    /// `V(r) = α r²`.
    Harmonic { alpha: f64 },
    /// `V(r) = α r² + β r⁴`.
    Anharmonic { alpha: f64, beta: f64 },
    /// Piecewise-linear interpolation of `(r, V)` samples, held constant
    /// beyond the table.
    Tabulated { radii: Vec<f64>, values: Vec<f64> },
}

/// Reported constants of the coercivity bound `V(r) ≥ c r − C₀` on the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coercivity {
    pub c: f64,
    pub c0: f64,
}

impl Potential {
    /// `r² + β r⁴`.
    pub fn quartic(beta: f64) -> Self {
        Potential::Anharmonic { alpha: 1.0, beta }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Potential::Harmonic { alpha } if !(*alpha > 0.0 && alpha.is_finite()) => {
                Err(Error::InvalidInput(format!("harmonic strength must be positive, got {alpha}")))
            }
            Potential::Anharmonic { alpha, beta }
                if !(alpha.is_finite() && beta.is_finite() && *alpha >= 0.0 && *beta >= 0.0 && alpha + beta > 0.0) =>
            {
                Err(Error::InvalidInput(format!("anharmonic trap needs alpha, beta >= 0 not both zero, got ({alpha}, {beta})")))
            }
            Potential::Tabulated { radii, values } => {
                if radii.len() != values.len() || radii.len() < 2 {
                    return Err(Error::InvalidInput("tabulated potential needs matching r and V columns with >= 2 rows".into()));
                }
                if radii.windows(2).any(|w| w[1] <= w[0]) || values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidInput("tabulated potential must have increasing radii and finite values".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Potential::Harmonic { alpha } => alpha * r * r,
            Potential::Anharmonic { alpha, beta } => {
                let r2 = r * r;
                alpha * r2 + beta * r2 * r2
            }
            Potential::Tabulated { radii, values } => {
                let n = radii.len();
                if r <= radii[0] {
                    return values[0];
                }
                if r >= radii[n - 1] {
                    return values[n - 1];
                }
                let i = radii.partition_point(|&x| x <= r) - 1;
                let t = (r - radii[i]) / (radii[i + 1] - radii[i]);
                values[i] + t * (values[i + 1] - values[i])
            }
        }
    }

    pub fn sample(&self, grid: &RadialGrid) -> Vec<f64> {
        grid.nodes().iter().map(|&r| self.eval(r)).collect()
    }

    /// `C₀ = max(0, −min V)` and the largest `c` with `V(r) ≥ c r − C₀` over
    /// the outer half of the grid.
    pub fn coercivity(&self, grid: &RadialGrid) -> Coercivity {
        let values = self.sample(grid);
        let c0 = values.iter().cloned().fold(f64::INFINITY, f64::min).min(0.0).abs();
        let c = grid
            .nodes()
            .iter()
            .zip(&values)
            .filter(|(r, _)| **r >= 0.5 * grid.r_max())
            .map(|(r, v)| (v + c0) / r)
            .fold(f64::INFINITY, f64::min);
        Coercivity { c, c0 }
    }
}

/// The `K` lowest radial eigenpairs on a grid.
#[derive(Debug, Clone)]
pub struct EigenBasis {
    energies: Vec<f64>,
    modes: Vec<Vec<f64>>,
    grid: RadialGrid,
}

impl EigenBasis {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    /// `χ_k` sampled on the grid nodes (zero at `r_max`).
    pub fn mode(&self, k: usize) -> Result<&[f64]> {
        self.modes
            .get(k)
            .map(|m| m.as_slice())
            .ok_or(Error::IndexOutOfRange { index: k, len: self.len() })
    }

    /// `4π ∫ χ_j χ_k r² dr`.
    pub fn overlap(&self, j: usize, k: usize) -> Result<f64> {
        let product = mode_product(self, j, k)?;
        Ok(self.grid.integrate_3d(&product))
    }

    /// `max_{j,k} |⟨χ_j, χ_k⟩ − δ_{jk}|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.len() {
            for k in 0..=j {
                let expect = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((self.overlap(j, k).unwrap() - expect).abs());
            }
        }
        worst
    }

    /// Build a basis from explicit energies and modes. Used for synthetic
    /// spectra in tests and by callers that bring their own eigensolver.
    pub fn from_parts(energies: Vec<f64>, modes: Vec<Vec<f64>>, grid: RadialGrid) -> Result<Self> {
        if energies.len() != modes.len() || modes.iter().any(|m| m.len() != grid.len()) {
            return Err(Error::Dimension("energies, modes and grid disagree".into()));
        }
        Ok(Self { energies, modes, grid })
    }
}

fn raw_eigenpairs(values: &[f64], h: f64, count: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    // unknowns at r_1 .. r_{n-1}; ψ(0) = ψ(r_max) = 0
    let inv_h2 = 1.0 / (h * h);
    let diag: Vec<f64> = values[..values.len() - 1].iter().map(|v| 2.0 * inv_h2 + v).collect();
    let off = vec![-inv_h2; diag.len() - 1];
    lowest_eigenpairs(&diag, &off, count)
}

/// The `K` lowest `ℓ = 0` eigenpairs of `-Δ + V` on `grid`.
///
/// Modes satisfy `4π ∫ χ_j χ_k r² dr = δ_{jk}` on the grid and each mode's
/// first nonzero sample is positive.
pub fn solve_radial_eigenpairs(potential: &Potential, grid: &RadialGrid, k: usize) -> Result<EigenBasis> {
    potential.validate()?;
    let n = grid.len();
    if k == 0 || 4 * k >= n {
        return Err(Error::Dimension(format!("K = {k} needs 0 < K < n_points / 4 = {}", n / 4)));
    }
    let h = grid.spacing();
    let values = potential.sample(grid);
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("potential is not finite on the grid".into()));
    }
    let (fine, vectors) = raw_eigenpairs(&values, h, k);

    let coarse_grid = RadialGrid::new(grid.r_max(), n / 2)?;
    let coarse_h = coarse_grid.spacing();
    let (coarse, _) = raw_eigenpairs(&potential.sample(&coarse_grid), coarse_h, k);
    let (h2, big_h2) = (h * h, coarse_h * coarse_h);
    let energies: Vec<f64> = fine
        .iter()
        .zip(&coarse)
        .map(|(ef, ec)| (big_h2 * ef - h2 * ec) / (big_h2 - h2))
        .collect();
    if energies.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("computed spectrum is degenerate".into()));
    }

    let shell_start = ((1.0 - DECAY_SHELL) * (n - 1) as f64) as usize;
    let norm = 1.0 / (4.0 * PI).sqrt();
    let mut modes = Vec::with_capacity(k);
    for (idx, v) in vectors.into_iter().enumerate() {
        let scale = h.sqrt();
        let mut psi: Vec<f64> = v.iter().map(|x| x / scale).collect();
        if let Some(first) = psi.iter().find(|x| **x != 0.0) {
            if *first < 0.0 {
                psi.iter_mut().for_each(|x| *x = -*x);
            }
        }
        let peak = psi.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let tail = psi[shell_start..].iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if tail > DECAY_TOLERANCE * peak {
            return Err(Error::DomainTruncation(format!(
                "mode {idx} has not decayed at r_max = {} (tail/peak = {:.3e})",
                grid.r_max(),
                tail / peak
            )));
        }
        let mut chi: Vec<f64> = psi.iter().zip(grid.nodes()).map(|(p, r)| norm * p / r).collect();
        chi.push(0.0);
        modes.push(chi);
    }
    Ok(EigenBasis { energies, modes, grid: grid.clone() })
}

/// Near-resonant index quadruples of a finite spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceReport {
    /// Quadruples `(k, k', j, j')` with `|ΔE| < gap_tol`.
    pub collisions: Vec<[usize; 4]>,
    /// Smallest `|ΔE|` over non-trivial quadruples, `+∞` when there are none.
    pub min_gap: f64,
}

/// `ΔE_{k,k';j,j'} = (E_k − E_{k'}) − (E_j − E_{j'})`.
pub fn energy_mismatch(energies: &[f64], k: usize, kp: usize, j: usize, jp: usize) -> f64 {
    (energies[k] - energies[kp]) - (energies[j] - energies[jp])
}

/// Quadruples whose mismatch vanishes identically for every spectrum:
/// `(k, k') = (j, j')`, or `k = k'` together with `j = j'`.
pub fn is_trivially_resonant(k: usize, kp: usize, j: usize, jp: usize) -> bool {
    (k == j && kp == jp) || (k == kp && j == jp)
}

/// Enumerate every quadruple and report the non-trivial ones that are
/// resonant within `gap_tol`.
pub fn check_gap_independence(basis: &EigenBasis, gap_tol: f64) -> ResonanceReport {
    check_gap_independence_of(basis.energies(), gap_tol)
}

pub fn check_gap_independence_of(energies: &[f64], gap_tol: f64) -> ResonanceReport {
    let n = energies.len();
    let mut collisions = Vec::new();
    let mut min_gap = f64::INFINITY;
    for k in 0..n {
        for kp in 0..n {
            for j in 0..n {
                for jp in 0..n {
                    if is_trivially_resonant(k, kp, j, jp) {
                        continue;
                    }
                    let gap = energy_mismatch(energies, k, kp, j, jp).abs();
                    min_gap = min_gap.min(gap);
                    if gap < gap_tol {
                        collisions.push([k, kp, j, jp]);
                    }
                }
            }
        }
    }
    ResonanceReport { collisions, min_gap }
}

/// Pointwise product `χ_k χ_{k'}` on the grid.
pub fn mode_product(basis: &EigenBasis, k: usize, kp: usize) -> Result<Vec<f64>> {
    let (a, b) = (basis.mode(k)?, basis.mode(kp)?);
    Ok(a.iter().zip(b).map(|(x, y)| x * y).collect())
}
