//! The rank-one example on `D(1, 3/2)`: `T_{γ_i}^* T_{γ_j} → δ₀` for large Gauss indices,
//! with `δ₀ f = f(0) · Vol · B(·, 0)`, and the limit element
//! `Z₀ = δ₀ ⊗ (2e + a₁^{-1}a₂ + a₂^{-1}a₁)` whose spectral measure is an explicit arcsine law.

use std::f64::consts::PI;

use faer::Mat;
use gauss_quad::chebyshev::GaussChebyshevFirstKind;

use super::algebra::{tau, AlgebraElement};
use crate::assembly::TruncatedOperator;
use crate::c64;
use crate::domain::Disc;
use crate::error::{Error, Result};
use crate::freegroup::Word;
use crate::linalg;

/// `Vol(Ω₀) · B(0, 0) = 81/25`, the nonzero eigenvalue of `δ₀` on `D(1, 3/2)`.
pub const DELTA0_EIGENVALUE: f64 = 81.0 / 25.0;
/// Right end `324/25` of the support of `μ_{Z₀}`.
pub const SUPPORT_END: f64 = 4.0 * DELTA0_EIGENVALUE;

/// `[k, ℓ] = Vol · e_ℓ(0) · conj(e_k(0))`, the Galerkin matrix of `δ₀` on `disc`.
pub fn delta0_matrix(disc: &Disc, order: usize) -> Result<Mat<c64>> {
    let origin = c64::new(0.0, 0.0);
    if !disc.contains(origin) {
        return Err(Error::PointOutsideDisc { point: origin, center: disc.center(), radius: disc.radius() });
    }
    let e = disc.basis_values(origin, order);
    Ok(Mat::from_fn(order, order, |k, l| e[l] * e[k].conj() * disc.area()))
}

/// `‖M_i† M_j - δ₀‖₁` at the common truncation order.
pub fn delta0_distance(disc: &Disc, op_i: &TruncatedOperator, op_j: &TruncatedOperator) -> Result<f64> {
    if op_i.order() != op_j.order() {
        return Err(Error::DimensionMismatch("operators have different truncation orders".into()));
    }
    let product = op_i.entries().adjoint() * op_j.entries();
    let diff = product - delta0_matrix(disc, op_i.order())?;
    linalg::trace_norm(diff.as_ref())
}

/// `A ⊗ (2e + a₁^{-1}a₂ + a₂^{-1}a₁)`.
pub fn z0_element(delta: Mat<c64>) -> AlgebraElement {
    let u = Word::quotient(1, 2);
    let mut z = AlgebraElement::monomial(Word::identity(), &delta * faer::Scale(c64::new(2.0, 0.0)));
    z.add_term(u.inverse(), delta.clone()).expect("same order");
    z.add_term(u, delta).expect("same order");
    z
}

/// `Z₀` with `δ₀` replaced by its only nonzero eigenvalue (a `1 × 1` coefficient); `τ` of
/// every power is unchanged because `δ₀` has rank one.
pub fn z0_scalar() -> AlgebraElement {
    z0_element(Mat::from_fn(1, 1, |_, _| c64::new(DELTA0_EIGENVALUE, 0.0)))
}

/// `τ((U + U*)^k)` for `k = 0..=k_max`, `U = a₁^{-1}a₂`, computed in the group algebra.
pub fn haar_moments(k_max: u32) -> Result<Vec<f64>> {
    let u = Word::quotient(1, 2);
    let s = AlgebraElement::scalar_terms([(u.clone(), c64::new(1.0, 0.0)), (u.inverse(), c64::new(1.0, 0.0))]);
    let mut out = vec![1.0];
    let mut acc = AlgebraElement::identity(1);
    for _ in 0..k_max {
        acc = acc.mul(&s)?;
        out.push(tau(&acc).re);
    }
    Ok(out)
}

/// Density of `μ_{Z₀}`: `(25/(81π)) x / sqrt(4 - (25x/81 - 2)²)` on `(0, 324/25)`.
pub fn arcsine_density(x: f64) -> f64 {
    if !(x > 0.0 && x < SUPPORT_END) {
        return 0.0;
    }
    let t = x / DELTA0_EIGENVALUE - 2.0;
    x / (DELTA0_EIGENVALUE * PI * (4.0 - t * t).sqrt())
}

/// `τ(Z₀^p) = ∫ u^{p-1} dμ_{Z₀}(u)`, by Gauss–Chebyshev quadrature of the arcsine law.
pub fn arcsine_moment(p: u32) -> Result<f64> {
    let nodes = (p as usize / 2 + 8).max(16);
    let rule = GaussChebyshevFirstKind::new(nodes).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    // u = c(2 + 2s), dμ/u = ds / (π sqrt(1 - s²))
    let pi_p = p as i32;
    Ok(rule.integrate(-1.0, 1.0, |s| (DELTA0_EIGENVALUE * (2.0 + 2.0 * s)).powi(pi_p)) / PI)
}

/// `(81/25)^p Σ_{k even} C(p, k) 2^{p-k} C(k, k/2)`.
pub fn arcsine_moment_closed(p: u32) -> f64 {
    let sum: f64 = (0..=p)
        .step_by(2)
        .map(|k| binomial(p, k) * 2f64.powi((p - k) as i32) * binomial(k, k / 2))
        .sum();
    DELTA0_EIGENVALUE.powi(p as i32) * sum
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `∫_a^b dμ_{Z₀}(x)/x = (1/π)[arcsin((25b-162)/162) - arcsin((25a-162)/162)]`.
pub fn arcsine_count(a: f64, b: f64) -> Result<f64> {
    if !(0.0 <= a && a < b && b <= SUPPORT_END) {
        return Err(Error::InvalidParameter(format!(
            "arcsine_count needs 0 ≤ a < b ≤ 324/25, got a = {a}, b = {b}"
        )));
    }
    let arg = |x: f64| ((25.0 * x - 162.0) / 162.0).clamp(-1.0, 1.0).asin();
    Ok((arg(b) - arg(a)) / PI)
}
