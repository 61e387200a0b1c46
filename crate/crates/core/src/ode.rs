//! Dormand–Prince 5(4) integrator for complex state vectors.

use num_complex::Complex64;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on the step size.
    pub max_step: f64,
    /// Rescale to the initial mass after every accepted step.
    pub renormalize: bool,
    pub max_steps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { rtol: 1e-9, atol: 1e-12, max_step: f64::INFINITY, renormalize: false, max_steps: 50_000_000 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub accepted: usize,
    pub rejected: usize,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn finite(y: &[Complex64]) -> bool {
    y.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn mass(y: &[Complex64]) -> f64 {
    y.iter().map(|z| z.norm_sqr()).sum()
}

/// RMS of the componentwise scaled error, real and imaginary parts counted
/// separately.
fn error_norm(err: &[Complex64], y0: &[Complex64], y1: &[Complex64], opts: &SolverOptions) -> f64 {
    let mut acc = 0.0;
    for i in 0..err.len() {
        let sr = opts.atol + opts.rtol * y0[i].re.abs().max(y1[i].re.abs());
        let si = opts.atol + opts.rtol * y0[i].im.abs().max(y1[i].im.abs());
        acc += (err[i].re / sr).powi(2) + (err[i].im / si).powi(2);
    }
    (acc / (2 * err.len()).max(1) as f64).sqrt()
}

fn initial_step<F>(rhs: &mut F, t: f64, y: &[Complex64], f0: &[Complex64], opts: &SolverOptions) -> Result<f64>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]) -> Result<()>,
{
    let zeros = vec![Complex64::new(0.0, 0.0); y.len()];
    let d0 = error_norm(y, y, &zeros, opts);
    let d1 = error_norm(f0, y, &zeros, opts);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(opts.max_step);
    let y1: Vec<Complex64> = y.iter().zip(f0).map(|(a, b)| a + b * h0).collect();
    let mut f1 = zeros.clone();
    rhs(t + h0, &y1, &mut f1)?;
    let df: Vec<Complex64> = f1.iter().zip(f0).map(|(a, b)| (a - b) / h0).collect();
    let d2 = error_norm(&df, y, &zeros, opts);
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    Ok((100.0 * h0).min(h1).min(opts.max_step))
}

/// Integrate `y' = rhs(t, y)` from `times[0]` and return the state at every
/// entry of `times`. Steps are shortened to land exactly on each sample time.
pub fn integrate<F>(
    mut rhs: F,
    y0: &[Complex64],
    times: &[f64],
    opts: &SolverOptions,
) -> Result<(Vec<Vec<Complex64>>, SolverStats)>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]) -> Result<()>,
{
    if times.is_empty() {
        return Ok((Vec::new(), SolverStats::default()));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("sample times must be strictly increasing".into()));
    }
    if !(opts.rtol > 0.0 && opts.atol >= 0.0 && opts.max_step > 0.0) {
        return Err(Error::InvalidInput("tolerances and step bound must be positive".into()));
    }
    if !finite(y0) {
        return Err(Error::NonFinite { t: times[0] });
    }

    let n = y0.len();
    let zero = Complex64::new(0.0, 0.0);
    let target_mass = mass(y0);
    let mut stats = SolverStats::default();
    let mut out = Vec::with_capacity(times.len());
    out.push(y0.to_vec());

    let mut t = times[0];
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<Complex64>> = vec![vec![zero; n]; 7];
    rhs(t, &y, &mut k[0])?;
    let mut h = if n == 0 { opts.max_step.min(1.0) } else { initial_step(&mut rhs, t, &y, &k[0], opts)? };
    let mut stage = vec![zero; n];
    let mut y_new = vec![zero; n];
    let mut err = vec![zero; n];
    let mut last_rejected = false;

    for &t_next in &times[1..] {
        while t < t_next {
            if stats.accepted + stats.rejected >= opts.max_steps {
                return Err(Error::TooManySteps(opts.max_steps));
            }
            let remaining = t_next - t;
            let landing = h >= remaining;
            let step = if landing { remaining } else { h.min(opts.max_step) };
            if step < 1e-14 * t.abs().max(1.0) && !landing {
                return Err(Error::StepUnderflow { t, h: step });
            }

            for s in 1..7 {
                for i in 0..n {
                    let mut acc = y[i];
                    for (j, kj) in k.iter().enumerate().take(s) {
                        let a = A[s][j];
                        if a != 0.0 {
                            acc += kj[i] * (a * step);
                        }
                    }
                    stage[i] = acc;
                }
                if s == 6 {
                    y_new.copy_from_slice(&stage);
                }
                rhs(t + C[s] * step, &stage, &mut k[s])?;
            }
            for i in 0..n {
                let mut acc = zero;
                for s in 0..7 {
                    if E[s] != 0.0 {
                        acc += k[s][i] * E[s];
                    }
                }
                err[i] = acc * step;
            }

            let e = error_norm(&err, &y, &y_new, opts);
            if !e.is_finite() || !finite(&y_new) {
                if step < 1e-14 * t.abs().max(1.0) {
                    return Err(Error::NonFinite { t });
                }
                stats.rejected += 1;
                h = step * 0.1;
                last_rejected = true;
                continue;
            }
            if e <= 1.0 {
                stats.accepted += 1;
                t = if landing { t_next } else { t + step };
                std::mem::swap(&mut y, &mut y_new);
                if opts.renormalize && target_mass > 0.0 {
                    let s = (target_mass / mass(&y)).sqrt();
                    y.iter_mut().for_each(|z| *z *= s);
                    rhs(t, &y, &mut k[0])?;
                } else {
                    let last = k.pop().unwrap();
                    k.insert(0, last);
                }
                let mut fac = if e == 0.0 { 10.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 10.0) };
                if last_rejected {
                    fac = fac.min(1.0);
                }
                last_rejected = false;
                // a step shortened to hit a sample time says little about the next one
                h = (step * fac).max(if landing { h } else { 0.0 }).min(opts.max_step);
            } else {
                stats.rejected += 1;
                last_rejected = true;
                h = step * (0.9 * e.powf(-0.2)).max(0.2);
                if h < 1e-14 * t.abs().max(1.0) {
                    return Err(Error::StepUnderflow { t, h });
                }
            }
        }
        if !finite(&y) {
            return Err(Error::NonFinite { t });
        }
        out.push(y.clone());
    }
    Ok((out, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_is_integrated_accurately() {
        // y' = i y
        let times: Vec<f64> = (0..=10).map(|i| i as f64).collect();
        let (ys, _) = integrate(
            |_, y, dy| {
                dy[0] = Complex64::i() * y[0];
                Ok(())
            },
            &[Complex64::new(1.0, 0.0)],
            &times,
            &SolverOptions::default(),
        )
        .unwrap();
        for (t, y) in times.iter().zip(&ys) {
            let exact = Complex64::new(0.0, *t).exp();
            assert!((y[0] - exact).norm() < 1e-8);
        }
    }

    #[test]
    fn zero_field_is_constant() {
        let y0 = vec![Complex64::new(0.3, -0.2), Complex64::new(1.0, 0.5)];
        let (ys, _) = integrate(
            |_, _, dy| {
                dy.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
                Ok(())
            },
            &y0,
            &[0.0, 1.0, 5.0],
            &SolverOptions::default(),
        )
        .unwrap();
        assert!(ys.iter().all(|y| *y == y0));
    }

    #[test]
    fn blow_up_is_reported() {
        // y' = y², y(0) = 1 blows up at t = 1
        let res = integrate(
            |_, y, dy| {
                dy[0] = y[0] * y[0];
                Ok(())
            },
            &[Complex64::new(1.0, 0.0)],
            &[0.0, 2.0],
            &SolverOptions { max_steps: 100_000, ..Default::default() },
        );
        assert!(res.is_err());
    }
}
