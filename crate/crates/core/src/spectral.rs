//! Spectral densities of the half-wave operator `|∇|` and regularized Cauchy
//! transforms `∫ a(ρ) / (ρ − λ + iε) dρ`.
//!
//! The transform is evaluated by subtracting the local cubic Taylor polynomial
//! `p` of `a` at `λ` over the whole interval and integrating `p / (ρ − λ + iε)`
//! in closed form. The remainder `(a − p) / (ρ − λ + iε)` vanishes to third
//! order at `λ` and is integrated with Simpson's rule, uniformly in `ε`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::kernel::MomentumGrid;
use crate::quadrature::{local_cubic, simpson};
use crate::{Error, Result};

/// Sampled density `a(ρ)` on the abscissae `0, h, …, ρ_max` of a momentum grid.
///
/// All densities produced from real radial sources are real, so the samples
/// are stored as `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDensity {
    grid: MomentumGrid,
    values: Vec<f64>,
}

impl SpectralDensity {
    pub fn from_samples(grid: MomentumGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_rho() + 1 {
            return Err(Error::GridMismatch(format!(
                "{} samples for a grid with {} abscissae",
                values.len(),
                grid.n_rho() + 1
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: MomentumGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.abscissae().into_iter().map(f).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &MomentumGrid {
        &self.grid
    }

    /// Samples on the abscissae, `a(0)` first.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `a(λ)` by local cubic interpolation.
    pub fn value_at(&self, lambda: f64) -> f64 {
        local_cubic(&self.values, self.grid.spacing(), lambda)[0]
    }

    /// `∫₀^{ρ_max} a(ρ) dρ`.
    pub fn integral(&self) -> f64 {
        simpson(&self.values, self.grid.spacing())
    }

    /// Largest `|a|` on the grid.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// `a(ρ) = (2π)^{−3} · 4π · ρ² · f̂(ρ) · conj(ĝ(ρ))` for radial `f`, `g`.
pub fn spectral_density(fhat: &[f64], ghat: &[f64], grid: &MomentumGrid) -> Result<SpectralDensity> {
    let n = grid.n_rho() + 1;
    if fhat.len() != n || ghat.len() != n {
        return Err(Error::GridMismatch(format!(
            "transforms of length {} and {} on a grid with {n} abscissae",
            fhat.len(),
            ghat.len()
        )));
    }
    let pref = 4.0 * PI / (2.0 * PI).powi(3);
    let values = grid
        .abscissae()
        .iter()
        .zip(fhat.iter().zip(ghat))
        .map(|(rho, (f, g))| pref * rho * rho * f * g)
        .collect();
    Ok(SpectralDensity { grid: *grid, values })
}

/// `∫_{u0}^{u1} u^n / (u + iε) du` for `n = 0..=3`.
fn polynomial_moments(u0: f64, u1: f64, eps: f64) -> [Complex64; 4] {
    let ie = Complex64::new(0.0, eps);
    let mut out = [Complex64::new(0.0, 0.0); 4];
    out[0] = if eps > 0.0 {
        Complex64::new(u1, eps).ln() - Complex64::new(u0, eps).ln()
    } else {
        Complex64::new((u1.abs() / u0.abs()).ln(), 0.0)
    };
    let (mut p0, mut p1) = (1.0, 1.0);
    for n in 1..4 {
        p0 *= u0;
        p1 *= u1;
        out[n] = Complex64::new((p1 - p0) / n as f64, 0.0) - ie * out[n - 1];
    }
    out
}

fn subtracted_transform(a: &SpectralDensity, lambda: f64, eps: f64) -> Complex64 {
    let h = a.grid.spacing();
    let c = local_cubic(&a.values, h, lambda);
    let exact_node = 1e-12 * h;
    let residual: Vec<Complex64> = a
        .values
        .iter()
        .enumerate()
        .map(|(i, &ai)| {
            let u = i as f64 * h - lambda;
            if u.abs() <= exact_node {
                return Complex64::new(0.0, 0.0);
            }
            let p = c[0] + u * (c[1] + u * (c[2] + u * c[3]));
            Complex64::new(ai - p, 0.0) / Complex64::new(u, eps)
        })
        .collect();
    let moments = polynomial_moments(-lambda, a.grid.rho_max() - lambda, eps);
    let closed: Complex64 = c.iter().zip(&moments).map(|(ci, m)| m * *ci).sum();
    simpson(&residual, h) + closed
}

/// `∫₀^{ρ_max} a(ρ) / (ρ − λ + iε) dρ` for `λ` strictly inside the grid.
///
/// As `ε ↓ 0` the imaginary part tends to `−π a(λ)` and the real part to the
/// principal value.
pub fn cauchy_transform(a: &SpectralDensity, lambda: f64, eps: f64) -> Result<Complex64> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::NonPositiveRegularization(eps));
    }
    let rho_max = a.grid.rho_max();
    if !(lambda > 0.0 && lambda < rho_max) {
        return Err(Error::OutsideGrid { lambda, rho_max });
    }
    Ok(subtracted_transform(a, lambda, eps))
}

/// Resolvent pairing `∫ a(ρ) / (ρ − λ + iε) dρ` for any `λ < ρ_max`.
///
/// For `λ < 0` the integrand is regular and is integrated directly; for
/// `λ ≥ 0` the singularity subtraction of [`cauchy_transform`] is used.
pub fn resolvent_pairing(a: &SpectralDensity, lambda: f64, eps: f64) -> Result<Complex64> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::NonPositiveRegularization(eps));
    }
    let rho_max = a.grid.rho_max();
    if !(lambda < rho_max) || !lambda.is_finite() {
        return Err(Error::OutsideGrid { lambda, rho_max });
    }
    if lambda >= 0.0 {
        return Ok(subtracted_transform(a, lambda, eps));
    }
    let h = a.grid.spacing();
    let integrand: Vec<Complex64> = a
        .values
        .iter()
        .enumerate()
        .map(|(i, &ai)| Complex64::new(ai, 0.0) / Complex64::new(i as f64 * h - lambda, eps))
        .collect();
    Ok(simpson(&integrand, h))
}

/// `∫₀^{ρ_max} a(ρ) / (ρ + μ) dρ` for `μ ≥ 0`.
///
/// At `μ = 0` the integrand at the origin is extrapolated from the next four
/// nodes, which is only meaningful for densities vanishing at `ρ = 0`.
pub fn off_shell_integral(a: &SpectralDensity, mu: f64) -> Result<f64> {
    if !(mu >= 0.0) || !mu.is_finite() {
        return Err(Error::InvalidInput(format!("off-shell shift must be non-negative, got {mu}")));
    }
    let h = a.grid.spacing();
    let mut integrand: Vec<f64> = a
        .values
        .iter()
        .enumerate()
        .map(|(i, &ai)| if i == 0 { 0.0 } else { ai / (i as f64 * h + mu) })
        .collect();
    integrand[0] = if mu > 0.0 {
        a.values[0] / mu
    } else {
        4.0 * integrand[1] - 6.0 * integrand[2] + 4.0 * integrand[3] - integrand[4]
    };
    Ok(simpson(&integrand, h))
}

/// `PV ∫₀^{ρ_max} a(ρ) / (ρ − λ) dρ` for `λ` strictly inside the grid.
pub fn principal_value(a: &SpectralDensity, lambda: f64) -> Result<f64> {
    let rho_max = a.grid.rho_max();
    if !(lambda > 0.0 && lambda < rho_max) {
        return Err(Error::OutsideGrid { lambda, rho_max });
    }
    Ok(subtracted_transform(a, lambda, 0.0).re)
}

/// One row of the uniformity probe: the sup of `|C(a, λ, ε)|` over the window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LapRow {
    pub epsilon: f64,
    pub sup_abs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LapReport {
    /// Rows ordered by decreasing `ε`.
    pub rows: Vec<LapRow>,
    /// `sup` at the smallest `ε` over `sup` at the largest.
    pub sup_ratio: Option<f64>,
    /// Largest real part seen, used for symmetric-window checks.
    pub max_abs_real: f64,
    /// Empirical Hölder quotient `max |a(x) − a(y)| / |x − y|^α` on the window.
    pub holder_quotient: f64,
    pub holder_exponent: f64,
    /// Set when the sup grows monotonically as `ε` shrinks and the growth
    /// exceeds `growth_tolerance`.
    pub growth_flag: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LapProbeOptions {
    pub holder_exponent: f64,
    pub growth_tolerance: f64,
    /// Upper bound on the number of `λ` samples taken from the window.
    pub max_lambdas: usize,
}

impl Default for LapProbeOptions {
    fn default() -> Self {
        Self { holder_exponent: 0.5, growth_tolerance: 10.0, max_lambdas: 41 }
    }
}

/// Tabulate `sup_{λ ∈ window} |C(a, λ, ε)|` for each `ε` and the Hölder
/// quotient of `a` on the window.
pub fn lap_uniformity_probe(
    a: &SpectralDensity,
    window: (f64, f64),
    eps_list: &[f64],
    opts: LapProbeOptions,
) -> Result<LapReport> {
    let (lo, hi) = window;
    let rho_max = a.grid.rho_max();
    if !(lo > 0.0 && hi < rho_max && lo <= hi) {
        return Err(Error::OutsideGrid { lambda: if lo <= 0.0 { lo } else { hi }, rho_max });
    }
    let mut eps: Vec<f64> = eps_list.to_vec();
    eps.sort_by(|x, y| y.partial_cmp(x).unwrap());

    let m = opts.max_lambdas.max(2);
    let lambdas: Vec<f64> = (0..m).map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64).collect();

    let mut rows = Vec::with_capacity(eps.len());
    let mut max_abs_real: f64 = 0.0;
    for &e in &eps {
        let mut sup: f64 = 0.0;
        for &l in &lambdas {
            let c = cauchy_transform(a, l, e)?;
            sup = sup.max(c.norm());
            max_abs_real = max_abs_real.max(c.re.abs());
        }
        rows.push(LapRow { epsilon: e, sup_abs: sup });
    }

    let h = a.grid.spacing();
    let nodes: Vec<(f64, f64)> = a
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| (i as f64 * h, *v))
        .filter(|(x, _)| *x >= lo && *x <= hi)
        .collect();
    let mut holder: f64 = 0.0;
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            let q = (nodes[i].1 - nodes[j].1).abs() / (nodes[j].0 - nodes[i].0).powf(opts.holder_exponent);
            holder = holder.max(q);
        }
    }

    let sup_ratio = match (rows.first(), rows.last()) {
        (Some(first), Some(last)) if first.sup_abs > 0.0 => Some(last.sup_abs / first.sup_abs),
        _ => None,
    };
    let monotone = rows.windows(2).all(|w| w[1].sup_abs >= w[0].sup_abs);
    let growth_flag = rows.len() > 1 && monotone && sup_ratio.is_some_and(|r| r > opts.growth_tolerance);

    Ok(LapReport {
        rows,
        sup_ratio,
        max_abs_real,
        holder_quotient: holder,
        holder_exponent: opts.holder_exponent,
        growth_flag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_density(rho_max: f64, n: usize) -> SpectralDensity {
        SpectralDensity::from_fn(MomentumGrid::new(rho_max, n).unwrap(), |_| 1.0)
    }

    #[test]
    fn constant_density_symmetric_interval() {
        let a = unit_density(2.0, 200);
        let c = cauchy_transform(&a, 1.0, 1e-10).unwrap();
        assert!(c.re.abs() < 1e-12);
        assert!((c.im + PI).abs() < 1e-9);
    }

    #[test]
    fn constant_density_at_unit_regularization() {
        // [log(ρ − 1 + i)]_0^2 = log(1 + i) − log(−1 + i) = −iπ/2
        let a = unit_density(2.0, 200);
        let c = cauchy_transform(&a, 1.0, 1.0).unwrap();
        assert!(c.re.abs() < 1e-13);
        assert!((c.im + PI / 2.0).abs() < 1e-13);
    }

    #[test]
    fn gaussian_pair_density() {
        let grid = MomentumGrid::new(8.0, 800).unwrap();
        let c = (2.0 * PI).powf(1.5);
        let fhat: Vec<f64> = grid.abscissae().iter().map(|r| c * (-r * r / 2.0).exp()).collect();
        let a = spectral_density(&fhat, &fhat, &grid).unwrap();
        for (rho, got) in grid.abscissae().iter().zip(a.values()) {
            let exact = 4.0 * PI * rho * rho * (-rho * rho).exp();
            assert!((got - exact).abs() < 1e-12 * (1.0 + exact));
            assert!(*got >= 0.0);
        }
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let grid = MomentumGrid::new(8.0, 800).unwrap();
        assert!(matches!(spectral_density(&[1.0; 10], &[1.0; 10], &grid), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn bad_arguments_are_rejected() {
        let a = unit_density(2.0, 200);
        assert!(matches!(cauchy_transform(&a, 1.0, 0.0), Err(Error::NonPositiveRegularization(_))));
        assert!(matches!(cauchy_transform(&a, 2.0, 0.1), Err(Error::OutsideGrid { .. })));
        assert!(matches!(cauchy_transform(&a, 0.0, 0.1), Err(Error::OutsideGrid { .. })));
    }

    #[test]
    fn principal_value_of_smooth_density_matches_closed_form() {
        // PV ∫_0^2 ρ/(ρ − 1) dρ = 2 + log(1/1) = 2
        let a = SpectralDensity::from_fn(MomentumGrid::new(2.0, 400).unwrap(), |r| r);
        assert!((principal_value(&a, 1.0).unwrap() - 2.0).abs() < 1e-12);
        // PV ∫_0^3 ρ²/(ρ − 1) dρ = [ρ²/2 + ρ + ln|ρ − 1|]_0^3 = 7.5 + ln 2
        let b = SpectralDensity::from_fn(MomentumGrid::new(3.0, 300).unwrap(), |r| r * r);
        assert!((principal_value(&b, 1.0).unwrap() - (7.5 + 2f64.ln())).abs() < 1e-11);
    }

    #[test]
    fn off_shell_pairing_matches_direct_integral() {
        // ∫_0^2 1/(ρ + 1) dρ = ln 3
        let a = unit_density(2.0, 200);
        let c = resolvent_pairing(&a, -1.0, 1e-12).unwrap();
        assert!((c.re - 3f64.ln()).abs() < 1e-8);
    }

    #[test]
    fn probe_on_empty_list_is_empty() {
        let a = unit_density(4.0, 400);
        let report = lap_uniformity_probe(&a, (1.5, 2.5), &[], LapProbeOptions::default()).unwrap();
        assert!(report.rows.is_empty());
        assert!(report.sup_ratio.is_none());
        assert!(!report.growth_flag);
    }

    #[test]
    fn probe_constant_density_about_center_has_no_real_part() {
        let a = unit_density(4.0, 400);
        let report = lap_uniformity_probe(&a, (2.0, 2.0), &[1.0, 0.1, 0.01], LapProbeOptions::default()).unwrap();
        assert!(report.max_abs_real < 1e-12);
        assert_eq!(report.holder_quotient, 0.0);
    }
}
