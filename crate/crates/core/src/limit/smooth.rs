use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::algebra::{tau, tau_product, AlgebraElement};
use crate::c64;
use crate::error::{Error, Result};

/// Partial Chebyshev sum of `τ(X ψ(X))` and the bound on what the omitted terms can add.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothTrace {
    pub value: f64,
    pub remainder: f64,
    pub degree: usize,
}

/// Coefficients `c_0..c_{n-1}` of the interpolant `f ≈ Σ c_k T_k(2x/K - 1)` on `[0, K]`
/// at the `n` Chebyshev points of the first kind.
pub fn chebyshev_coefficients(f: impl Fn(f64) -> f64, k: f64, n: usize) -> Vec<f64> {
    let values: Vec<f64> = (0..n)
        .map(|m| {
            let t = (PI * (m as f64 + 0.5) / n as f64).cos();
            f(0.5 * k * (t + 1.0))
        })
        .collect();
    (0..n)
        .map(|j| {
            let s: f64 = values
                .iter()
                .enumerate()
                .map(|(m, v)| v * (PI * j as f64 * (m as f64 + 0.5) / n as f64).cos())
                .sum();
            let c = 2.0 * s / n as f64;
            if j == 0 { 0.5 * c } else { c }
        })
        .collect()
}

/// `τ(X ψ(X))` with `ψ(x) = Σ_k c_k T_k(2x/K - 1)` on `[0, K]`.
///
/// The Chebyshev polynomials of `Y = (2/K) X - 1` are generated by the three-term recurrence
/// inside the algebra and `τ(X T_k(Y))` is taken term by term. Since `|T_k| ≤ 1` on the
/// spectrum and `φ ↦ τ(X φ(X))` is a positive measure of mass `τ(X)`, the coefficients
/// beyond `degree` can change the value by at most `Σ_{k>degree} |c_k| τ(X)`.
pub fn tau_smooth(x: &AlgebraElement, coefficients: &[f64], k: f64, degree: usize) -> Result<SmoothTrace> {
    let bound = x.norm_bound();
    if !(k > 0.0) || k < bound * (1.0 - 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "interval end K = {k} must dominate the norm bound {bound}"
        )));
    }
    let mass = tau(x).re;
    let used = degree.min(coefficients.len().saturating_sub(1));
    let remainder = coefficients.iter().skip(used + 1).map(|c| c.abs()).sum::<f64>() * mass.max(0.0);
    if coefficients.is_empty() {
        return Ok(SmoothTrace { value: 0.0, remainder: 0.0, degree: 0 });
    }
    let order = x.order();
    let one = AlgebraElement::identity(order);
    let y = x.scale(c64::new(2.0 / k, 0.0)).add_scaled(&one, c64::new(-1.0, 0.0))?;

    let mut value = coefficients[0] * mass;
    let mut prev = one;
    let mut cur = y.clone();
    for (j, &c) in coefficients.iter().enumerate().take(used + 1).skip(1) {
        if j > 1 {
            let next = y.mul(&cur)?.scale(c64::new(2.0, 0.0)).add_scaled(&prev, c64::new(-1.0, 0.0))?;
            prev = std::mem::replace(&mut cur, next);
        }
        if c != 0.0 {
            value += c * tau_product(x, &cur)?.re;
        }
    }
    Ok(SmoothTrace { value, remainder, degree: used })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freegroup::Word;

    #[test]
    fn interpolates_polynomials_exactly() {
        let c = chebyshev_coefficients(|x| 3.0 * x * x - x + 2.0, 4.0, 8);
        let eval = |x: f64| {
            let t = x / 2.0 - 1.0;
            let (mut a, mut b) = (1.0, t);
            let mut s = c[0] + c[1] * t;
            for ck in &c[2..] {
                let n = 2.0 * t * b - a;
                s += ck * n;
                a = b;
                b = n;
            }
            s
        };
        for x in [0.0, 0.7, 2.0, 3.9] {
            assert!((eval(x) - (3.0 * x * x - x + 2.0)).abs() <= 1e-12);
        }
        assert!(c[3..].iter().all(|v| v.abs() <= 1e-13));
    }

    fn sample_element() -> AlgebraElement {
        let u = Word::quotient(1, 2);
        AlgebraElement::scalar_terms([
            (Word::identity(), c64::new(2.0, 0.0)),
            (u.clone(), c64::new(0.5, 0.0)),
            (u.inverse(), c64::new(0.5, 0.0)),
        ])
    }

    #[test]
    fn linear_psi_gives_second_moment() {
        let x = sample_element();
        let k = 3.0;
        // ψ(x) = x = (K/2)(T_0 + T_1)
        let r = tau_smooth(&x, &[k / 2.0, k / 2.0], k, 1).unwrap();
        let m2 = tau(&x.mul(&x).unwrap()).re;
        assert!((r.value - m2).abs() <= 1e-13);
        assert_eq!(r.remainder, 0.0);
    }

    #[test]
    fn zero_psi() {
        let r = tau_smooth(&sample_element(), &[0.0; 5], 3.0, 4).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn small_interval_rejected() {
        assert!(tau_smooth(&sample_element(), &[1.0], 2.0, 0).is_err());
    }

    #[test]
    fn remainder_reports_dropped_terms() {
        let r = tau_smooth(&sample_element(), &[0.0, 0.0, 0.1, -0.2], 3.0, 1).unwrap();
        assert!((r.remainder - 0.3 * 2.0).abs() <= 1e-15);
    }
}
