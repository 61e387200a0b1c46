//! Uniform-grid quadrature, local cubic interpolation and Richardson
//! extrapolation.

use std::ops::{Add, Mul};

use num_complex::Complex64;

/// Values that can be accumulated by the quadrature rules: `f64` and
/// `Complex64` both qualify.
pub trait Sample: Copy + Add<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
}

impl Sample for f64 {
    fn zero() -> Self {
        0.0
    }
}

impl Sample for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
}

/// Composite trapezoidal rule for samples with uniform spacing `h`.
pub fn trapezoid<T: Sample>(values: &[T], h: f64) -> T {
    match values.len() {
        0 | 1 => T::zero(),
        n => {
            let inner = values[1..n - 1].iter().fold(T::zero(), |acc, &v| acc + v);
            (inner + (values[0] + values[n - 1]) * 0.5) * h
        }
    }
}

/// Composite Simpson rule for samples with uniform spacing `h`.
///
/// An odd number of intervals is handled by closing the last three intervals
/// with the Simpson 3/8 rule, so the rule stays fourth order for any sample
/// count of at least four.
pub fn simpson<T: Sample>(values: &[T], h: f64) -> T {
    let n = values.len();
    if n < 3 {
        return trapezoid(values, h);
    }
    let intervals = n - 1;
    if intervals.is_multiple_of(2) {
        simpson_even(values, h)
    } else if intervals == 1 {
        trapezoid(values, h)
    } else {
        let split = n - 4;
        let head = if split > 0 { simpson_even(&values[..=split], h) } else { T::zero() };
        let t = &values[split..];
        head + (t[0] + t[1] * 3.0 + t[2] * 3.0 + t[3]) * (3.0 * h / 8.0)
    }
}

fn simpson_even<T: Sample>(values: &[T], h: f64) -> T {
    let n = values.len();
    debug_assert!(n % 2 == 1);
    let mut odd = T::zero();
    let mut even = T::zero();
    for (i, &v) in values.iter().enumerate().take(n - 1).skip(1) {
        if i % 2 == 1 {
            odd = odd + v;
        } else {
            even = even + v;
        }
    }
    (values[0] + values[n - 1] + odd * 4.0 + even * 2.0) * (h / 3.0)
}

/// Taylor coefficients `[c0, c1, c2, c3]` about `x` of the cubic that
/// interpolates the four uniform samples nearest to `x`.
///
/// `values[i]` is the sample at abscissa `i * h`. The stencil is shifted
/// inward at either end of the table.
pub fn local_cubic(values: &[f64], h: f64, x: f64) -> [f64; 4] {
    let n = values.len();
    assert!(n >= 4, "local_cubic needs at least four samples");
    let j = (x / h).floor().max(0.0) as usize;
    let start = j.saturating_sub(1).min(n - 4);
    let u: [f64; 4] = std::array::from_fn(|m| (start + m) as f64 * h - x);
    let mut c = [0.0; 4];
    for m in 0..4 {
        let others: Vec<f64> = (0..4).filter(|&l| l != m).map(|l| u[l]).collect();
        let (a, b, d) = (others[0], others[1], others[2]);
        let denom = (u[m] - a) * (u[m] - b) * (u[m] - d);
        let y = values[start + m] / denom;
        c[0] -= y * a * b * d;
        c[1] += y * (a * b + b * d + d * a);
        c[2] -= y * (a + b + d);
        c[3] += y;
    }
    c
}

/// Evaluate the local cubic interpolant at `x`.
pub fn interpolate_cubic(values: &[f64], h: f64, x: f64) -> f64 {
    local_cubic(values, h, x)[0]
}

/// Three-point Richardson extrapolation to `ε → 0` from values at
/// `ε`, `ε/2` and `ε/4`, eliminating the linear and quadratic terms.
pub fn richardson3<T: Sample>(at_eps: T, at_half: T, at_quarter: T) -> T {
    (at_eps + at_half * -6.0 + at_quarter * 8.0) * (1.0 / 3.0)
}
