//! The free-group algebra with matrix coefficients, its tracial state `τ` and the
//! moments of the limit operator.
//!
//! For branch matrices `M_j`, the Gram element
//! `X = (Σ_j M_j†M_j)·e + Σ_{i≠j} M_i†M_j · a_i^{-1}a_j` satisfies `L_N*L_N = π_N(X)`,
//! and `τ(X^p)` is the large-`N` limit of `Tr((L_N*L_N)^p)/N`.

mod algebra;
mod ball;
mod example;
mod smooth;

use serde::{Deserialize, Serialize};

use crate::assembly::{check_same_order, TruncatedOperator};
use crate::error::{Error, Result};
use crate::freegroup::Word;

pub use algebra::{tau, tau_product, AlgebraElement, MAX_SUPPORT, PRUNING_THRESHOLD};
pub use ball::{cayley_ball_matrix, center_block_trace, CayleyBall, MAX_BALL_DIMENSION};
pub use example::{
    arcsine_count, arcsine_density, arcsine_moment, arcsine_moment_closed, delta0_distance, delta0_matrix,
    haar_moments, z0_element, z0_scalar, DELTA0_EIGENVALUE, SUPPORT_END,
};
pub use smooth::{chebyshev_coefficients, tau_smooth, SmoothTrace};

/// Default cap on the power in [`tau_moment`].
pub const DEFAULT_MAX_POWER: u32 = 8;

/// `(Σ_j M_j†M_j)·e + Σ_{i≠j} M_i†M_j · a_i^{-1}a_j` (generators numbered from 1).
pub fn gram_element(ops: &[TruncatedOperator]) -> Result<AlgebraElement> {
    let order = check_same_order(ops)?;
    let mut x = AlgebraElement::zero(order);
    for (i, a) in ops.iter().enumerate() {
        for (j, b) in ops.iter().enumerate() {
            let word = if i == j { Word::identity() } else { Word::quotient(i + 1, j + 1) };
            x.add_term(word, a.entries().adjoint() * b.entries())?;
        }
    }
    Ok(x)
}

fn require_self_adjoint(x: &AlgebraElement) -> Result<()> {
    let defect = x.self_adjoint_defect();
    if defect > 1e-10 * x.norm_bound().max(1.0) {
        return Err(Error::InvalidParameter(format!("element is not self-adjoint (defect {defect:.3e})")));
    }
    Ok(())
}

/// `τ(X^p)` for a self-adjoint `X`, `1 ≤ p ≤ DEFAULT_MAX_POWER`.
pub fn tau_moment(x: &AlgebraElement, p: u32) -> Result<f64> {
    tau_moment_with_cap(x, p, DEFAULT_MAX_POWER)
}

pub fn tau_moment_with_cap(x: &AlgebraElement, p: u32, max_power: u32) -> Result<f64> {
    if p == 0 {
        return Err(Error::InvalidParameter("moment order p must be ≥ 1".into()));
    }
    if p > max_power {
        return Err(Error::CapExceeded(format!("moment order {p} exceeds the cap {max_power}")));
    }
    require_self_adjoint(x)?;
    // τ(X^p) = τ(X^a X^b) with a = ⌈p/2⌉, b = ⌊p/2⌋ saves half of the products
    let a = x.power(p.div_ceil(2))?;
    let value = if p == 1 {
        tau(x)
    } else if p % 2 == 0 {
        tau_product(&a, &a)?
    } else {
        tau_product(&a, &x.power(p / 2)?)?
    };
    Ok(value.re)
}

/// `τ(X), …, τ(X^P)`, sharing the powers.
pub fn tau_moments(x: &AlgebraElement, max_p: u32) -> Result<MomentSequence> {
    if max_p > DEFAULT_MAX_POWER {
        return Err(Error::CapExceeded(format!("moment order {max_p} exceeds the cap {DEFAULT_MAX_POWER}")));
    }
    require_self_adjoint(x)?;
    let moments = x.powers(max_p)?.iter().map(|xp| tau(xp).re).collect();
    Ok(MomentSequence { moments })
}

/// `m_p = τ(X^p)` for `p = 1..=P`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSequence {
    pub moments: Vec<f64>,
}

impl MomentSequence {
    /// Stieltjes test on `s_k = m_{k+1} = ∫ x^k dμ`: the Hankel matrices `[s_{i+j}]` and
    /// `[s_{i+j+1}]` over the available range must be positive semidefinite.
    pub fn hankel_positive(&self, rel_tol: f64) -> bool {
        let s = &self.moments;
        let psd = |offset: usize| -> bool {
            if s.len() <= offset {
                return true;
            }
            let size = (s.len() - offset - 1) / 2 + 1;
            let h = faer::Mat::from_fn(size, size, |i, j| crate::c64::new(s[i + j + offset], 0.0));
            match crate::linalg::hermitian_eigenvalues(h.as_ref()) {
                Ok(ev) => {
                    let top = ev.last().copied().unwrap_or(0.0).abs();
                    ev.iter().all(|&e| e >= -rel_tol * top.max(f64::MIN_POSITIVE))
                }
                Err(_) => false,
            }
        };
        psd(0) && psd(1)
    }
}

/// One entry of the machine-readable moment report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauMomentRecord {
    pub p: u32,
    pub tau_moment: f64,
    pub method: String,
    pub pruning_threshold: f64,
    pub remainder_bound: f64,
}
