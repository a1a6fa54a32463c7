//! The twisted operator `L_N = Σ_j U_j ⊗ M_j` on `C^N ⊗ C^L`.
//!
//! Indices are permutation-major: basis vector `δ_a ⊗ e_k` sits at `a·L + k`. The
//! permutation matrix of `σ` maps `δ_b` to `δ_{σ(b)}`, so branch `j` contributes `M_j`
//! to block `(σ_j(b), b)`.

use std::collections::HashMap;
use std::io::Write;

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::assembly::{check_same_order, OverlapMatrix, TruncatedOperator};
use crate::c64;
use crate::error::{Error, Result};
use crate::export::fmt_f64;
use crate::freegroup::{fixed_points, Permutation, RandomHom, Word};
use crate::limit::AlgebraElement;
use crate::linalg;

/// Dense `(N·L) × (N·L)` matrix of `L_N`.
#[derive(Debug, Clone)]
pub struct TwistedMatrix {
    data: Mat<c64>,
    n: usize,
    order: usize,
    rank: usize,
    hom_seed: u64,
}

impl TwistedMatrix {
    pub fn data(&self) -> MatRef<'_, c64> {
        self.data.as_ref()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Truncation order `L`.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of branches `d`.
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn hom_seed(&self) -> u64 {
        self.hom_seed
    }

    pub fn frobenius_sq(&self) -> f64 {
        linalg::frobenius_sq(self.data.as_ref())
    }
}

fn check_hom(ops: &[TruncatedOperator], hom: &RandomHom) -> Result<usize> {
    let order = check_same_order(ops)?;
    if hom.rank() != ops.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} branch operators but the homomorphism has rank {}",
            ops.len(),
            hom.rank()
        )));
    }
    Ok(order)
}

pub fn build_twisted_matrix(ops: &[TruncatedOperator], hom: &RandomHom) -> Result<TwistedMatrix> {
    let order = check_hom(ops, hom)?;
    let n = hom.n();
    let mut data = Mat::zeros(n * order, n * order);
    for (op, sigma) in ops.iter().zip(hom.generators()) {
        let m = op.entries();
        for b in 0..n {
            let a = sigma.apply(b);
            let mut block = data.as_mut().submatrix_mut(a * order, b * order, order, order);
            for l in 0..order {
                for k in 0..order {
                    block[(k, l)] += m[(k, l)];
                }
            }
        }
    }
    Ok(TwistedMatrix { data, n, order, rank: ops.len(), hom_seed: hom.seed() })
}

/// All `N·L` singular values, nonincreasing.
pub fn singular_values(m: &TwistedMatrix) -> Result<Vec<f64>> {
    linalg::singular_values(m.data())
}

/// All `N·L` eigenvalues of the (non-normal) matrix, sorted by decreasing modulus.
pub fn eigenvalues(m: &TwistedMatrix) -> Result<Vec<c64>> {
    let mut ev = linalg::eigenvalues(m.data())?;
    ev.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    Ok(ev)
}

/// `𝒩(r) = #{v ≥ 1/r}`.
pub fn counting_function(values: &[f64], r: f64) -> Result<usize> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("counting radius must be positive, got {r}")));
    }
    Ok(linalg::count_at_least(values, 1.0 / r))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub seed: u64,
    pub n: usize,
    pub order: usize,
    pub singular_values: Vec<f64>,
    pub eigenvalues: Option<Vec<c64>>,
}

impl SpectrumReport {
    pub fn compute(m: &TwistedMatrix, with_eigenvalues: bool) -> Result<Self> {
        Ok(Self {
            seed: m.hom_seed(),
            n: m.n(),
            order: m.order(),
            singular_values: singular_values(m)?,
            eigenvalues: if with_eigenvalues { Some(eigenvalues(m)?) } else { None },
        })
    }

    pub fn trace_norm(&self) -> f64 {
        self.singular_values.iter().sum()
    }

    /// CSV rows `seed,N,L,index,singular_value[,re_lambda,im_lambda]`.
    pub fn write_csv_rows(&self, out: &mut impl Write) -> Result<()> {
        for (i, s) in self.singular_values.iter().enumerate() {
            write!(out, "{},{},{},{},{}", self.seed, self.n, self.order, i, fmt_f64(*s))?;
            if let Some(ev) = &self.eigenvalues {
                let l = ev[i];
                write!(out, ",{},{}", fmt_f64(l.re), fmt_f64(l.im))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn csv_header(with_eigenvalues: bool) -> &'static str {
        if with_eigenvalues {
            "seed,N,L,index,singular_value,re_lambda,im_lambda"
        } else {
            "seed,N,L,index,singular_value"
        }
    }
}

/// `‖L_N‖₂² = Σ_{k₁,k₂} F_N(a_{k₂}^{-1} a_{k₁}) H_{k₁,k₂}`.
pub fn hs_norm_trace_formula(h: &OverlapMatrix, hom: &RandomHom) -> Result<f64> {
    let d = h.rank();
    if hom.rank() != d {
        return Err(Error::DimensionMismatch(format!(
            "overlap matrix of rank {d} with a homomorphism of rank {}",
            hom.rank()
        )));
    }
    let mut total = 0.0;
    for k1 in 0..d {
        total += hom.n() as f64 * h.get(k1, k1).re;
        for k2 in (k1 + 1)..d {
            // F(w) = F(w^{-1}) pairs (k1, k2) with (k2, k1) into 2 Re H
            let f = fixed_points(hom, &Word::quotient(k2 + 1, k1 + 1))? as f64;
            total += 2.0 * f * h.get(k1, k2).re;
        }
    }
    Ok(total)
}

/// Orthonormal basis of the mean-zero vectors in `C^N` (Helmert columns), `N × (N-1)`.
pub fn helmert_basis(n: usize) -> Result<Mat<f64>> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("the mean-zero subspace needs N ≥ 2, got {n}")));
    }
    Ok(Mat::from_fn(n, n - 1, |i, c| {
        let k = (c + 1) as f64;
        let scale = 1.0 / (k * (k + 1.0)).sqrt();
        match i.cmp(&(c + 1)) {
            std::cmp::Ordering::Less => scale,
            std::cmp::Ordering::Equal => -k * scale,
            std::cmp::Ordering::Greater => 0.0,
        }
    }))
}

fn kron_with_identity(q: MatRef<'_, f64>, order: usize) -> Mat<c64> {
    let mut out = Mat::zeros(q.nrows() * order, q.ncols() * order);
    for c in 0..q.ncols() {
        for a in 0..q.nrows() {
            let v = q[(a, c)];
            if v != 0.0 {
                for k in 0..order {
                    out[(a * order + k, c * order + k)] = c64::new(v, 0.0);
                }
            }
        }
    }
    out
}

/// Compression of `L_N` to `V_N ⊗ C^L`.
#[derive(Debug, Clone)]
pub struct Restriction {
    pub matrix: Mat<c64>,
    /// Largest Frobenius norm of the two off-diagonal blocks between `V_N` and the constants.
    pub invariance_residual: f64,
}

pub fn restrict_to_vn(m: &TwistedMatrix) -> Result<Restriction> {
    let (n, order) = (m.n(), m.order());
    let q = kron_with_identity(helmert_basis(n)?.as_ref(), order);
    let ones = Mat::from_fn(n, 1, |_, _| 1.0 / (n as f64).sqrt());
    let p = kron_with_identity(ones.as_ref(), order);
    let lq = m.data() * &q;
    let matrix = q.adjoint() * &lq;
    let off1 = (p.adjoint() * &lq).norm_l2();
    let off2 = (q.adjoint() * (m.data() * &p)).norm_l2();
    Ok(Restriction { matrix, invariance_residual: off1.max(off2) })
}

/// `Σ_j (Qᵀ U_j Q) ⊗ M_j` without materializing `L_N`.
pub fn restrict_operators(ops: &[TruncatedOperator], hom: &RandomHom) -> Result<Mat<c64>> {
    let order = check_hom(ops, hom)?;
    let n = hom.n();
    let q = helmert_basis(n)?;
    let dim = (n - 1) * order;
    let mut out = Mat::zeros(dim, dim);
    for (op, sigma) in ops.iter().zip(hom.generators()) {
        // (Qᵀ U Q)[r, c] = Σ_b Q[σ(b), r] Q[b, c]
        let small = Mat::from_fn(n - 1, n - 1, |r, c| (0..n).map(|b| q[(sigma.apply(b), r)] * q[(b, c)]).sum::<f64>());
        let m = op.entries();
        for c in 0..n - 1 {
            for r in 0..n - 1 {
                let s = small[(r, c)];
                if s.abs() < 1e-300 {
                    continue;
                }
                for l in 0..order {
                    for k in 0..order {
                        out[(r * order + k, c * order + l)] += m[(k, l)] * s;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Words and coefficient traces of `X, X², …, X^P` prepared for repeated evaluation of
/// `Tr_{V_N}(π_N(X)^p) = Σ_w Tr(A_w^{(p)}) (F_N(w) - 1)` on many homomorphisms.
#[derive(Debug, Clone)]
pub struct RestrictedTracePlan {
    words: Vec<Word>,
    /// per power: `(word index, Tr(A_w))`
    terms: Vec<Vec<(usize, c64)>>,
    rank: usize,
}

impl RestrictedTracePlan {
    /// `powers[p-1]` must hold `X^p`.
    pub fn new(powers: &[AlgebraElement], rank: usize) -> Result<Self> {
        let mut index: HashMap<Word, usize> = HashMap::new();
        let mut words = Vec::new();
        let mut terms = Vec::with_capacity(powers.len());
        for x in powers {
            let mut list = Vec::with_capacity(x.support_len());
            for (w, a) in x.terms() {
                if w.max_generator() > rank {
                    return Err(Error::GeneratorIndex { generator: w.max_generator(), rank });
                }
                let id = *index.entry(w.clone()).or_insert_with(|| {
                    words.push(w.clone());
                    words.len() - 1
                });
                list.push((id, linalg::trace(a.as_ref())));
            }
            terms.push(list);
        }
        Ok(Self { words, terms, rank })
    }

    pub fn max_power(&self) -> usize {
        self.terms.len()
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    /// `Tr_{V_N}(π_N(X)^p)` for `p = 1..=P` (real parts).
    pub fn evaluate(&self, hom: &RandomHom) -> Result<Vec<f64>> {
        if hom.rank() != self.rank {
            return Err(Error::DimensionMismatch(format!(
                "plan built for rank {} used with a homomorphism of rank {}",
                self.rank,
                hom.rank()
            )));
        }
        let shifted: Vec<f64> = self
            .words
            .iter()
            .map(|w| fixed_points(hom, w).map(|f| f as f64 - 1.0))
            .collect::<Result<_>>()?;
        Ok(self
            .terms
            .iter()
            .map(|list| list.iter().map(|&(id, tr)| tr.re * shifted[id]).sum())
            .collect())
    }
}

/// `Tr` over `V_N ⊗ C^L` of `π_N(X)^p`, by word expansion.
pub fn trace_power_restricted(x: &AlgebraElement, hom: &RandomHom, p: u32) -> Result<f64> {
    if p == 0 {
        return Err(Error::InvalidParameter("power p must be ≥ 1".into()));
    }
    let defect = x.self_adjoint_defect();
    if defect > 1e-10 * x.norm_bound().max(1.0) {
        return Err(Error::InvalidParameter(format!("element is not self-adjoint (defect {defect:.3e})")));
    }
    let power = x.power(p)?;
    let plan = RestrictedTracePlan::new(std::slice::from_ref(&power), hom.rank())?;
    Ok(plan.evaluate(hom)?[0])
}

/// Singular values of `L_N` from a common low-rank factorization of the branch matrices,
/// with a rigorous perturbation radius.
///
/// Each `M_j` is replaced by `Q R_j P†` where `Q`, `P` span the dominant left and right
/// singular subspaces of all branches. Then `L̃ = (I⊗Q)(Σ U_j ⊗ R_j)(I⊗P)†` has the
/// same nonzero singular values as `Σ U_j ⊗ R_j`, and by Weyl's inequality
/// `|μ_i(L_N) - μ_i(L̃)| ≤ Σ_j ‖M_j - Q R_j P†‖₂ + (eigensolver error)`.
#[derive(Debug, Clone)]
pub struct CompressedBasis {
    left: Mat<c64>,
    right: Mat<c64>,
    reduced: Vec<Mat<c64>>,
    /// `Σ_j ‖M_j - Q R_j P†‖₂`.
    pub compression_error: f64,
    pub order: usize,
}

impl CompressedBasis {
    /// Keeps singular directions above `rel_tol` times the largest singular value.
    pub fn new(ops: &[TruncatedOperator], rel_tol: f64) -> Result<Self> {
        let order = check_same_order(ops)?;
        let d = ops.len();
        let wide = Mat::from_fn(order, d * order, |k, c| ops[c / order].entries()[(k, c % order)]);
        let tall = Mat::from_fn(d * order, order, |r, l| ops[r / order].entries()[(r % order, l)]);
        let left = dominant_subspace(wide.as_ref(), rel_tol, true)?;
        let right = dominant_subspace(tall.as_ref(), rel_tol, false)?;
        let mut reduced = Vec::with_capacity(d);
        let mut compression_error = 0.0;
        for op in ops {
            let r = left.adjoint() * op.entries() * &right;
            let approx = &left * &r * right.adjoint();
            let diff = op.entries() - &approx;
            compression_error += linalg::singular_values(diff.as_ref())?.first().copied().unwrap_or(0.0);
            reduced.push(r);
        }
        Ok(Self { left, right, reduced, compression_error, order })
    }

    /// `(k_left, k_right)`.
    pub fn ranks(&self) -> (usize, usize) {
        (self.left.ncols(), self.right.ncols())
    }

    /// Approximate singular values of `L_N` (the `N·k` nonzero candidates, nonincreasing)
    /// and the total error radius.
    pub fn singular_values(&self, hom: &RandomHom) -> Result<CompressedSpectrum> {
        if hom.rank() != self.reduced.len() {
            return Err(Error::DimensionMismatch("homomorphism rank differs from the branch count".into()));
        }
        let n = hom.n();
        let k = self.right.ncols();
        let d = self.reduced.len();
        let inverses: Vec<Permutation> = hom.generators().iter().map(Permutation::inverse).collect();
        // Gram matrix of Σ U_j ⊗ R_j: block (σ_i^{-1} σ_j (b), b) receives R_i† R_j
        let products: Vec<Vec<Mat<c64>>> = (0..d)
            .map(|i| (0..d).map(|j| self.reduced[i].adjoint() * &self.reduced[j]).collect())
            .collect();
        let mut gram = Mat::<c64>::zeros(n * k, n * k);
        for i in 0..d {
            for j in 0..d {
                let g = &products[i][j];
                for b in 0..n {
                    let a = inverses[i].apply(hom.generator(j).apply(b));
                    let mut block = gram.as_mut().submatrix_mut(a * k, b * k, k, k);
                    for c in 0..k {
                        for r in 0..k {
                            block[(r, c)] += g[(r, c)];
                        }
                    }
                }
            }
        }
        let eig = linalg::hermitian_eigenvalues(gram.as_ref())?;
        let lambda_max = eig.last().copied().unwrap_or(0.0).max(0.0);
        // backward-stable eigensolver: |δλ| ≲ dim·ε·‖G‖, i.e. |δμ| ≤ sqrt(|δλ|)
        let solver_error = ((n * k) as f64 * 64.0 * f64::EPSILON * lambda_max).sqrt();
        let mut values: Vec<f64> = eig.iter().map(|&l| l.max(0.0).sqrt()).collect();
        values.reverse();
        Ok(CompressedSpectrum {
            values,
            error: self.compression_error + solver_error,
            full_len: n * self.order,
        })
    }
}

/// Largest `Σ_j μ_j(L_N) / N` over `samples` dense draws at size `n`; the empirical
/// stand-in for the constant in `‖L_N‖₁ ≤ C₃ N`.
pub fn measure_trace_norm_constant(ops: &[TruncatedOperator], n: usize, samples: usize, master_seed: u64) -> Result<f64> {
    if samples == 0 || n == 0 {
        return Err(Error::InvalidParameter("need at least one sample of size N ≥ 1".into()));
    }
    let mut worst = 0.0f64;
    for t in 0..samples as u64 {
        let hom = crate::freegroup::sample_homomorphism(ops.len(), n, crate::freegroup::derive_seed(master_seed, t))?;
        let s = singular_values(&build_twisted_matrix(ops, &hom)?)?;
        worst = worst.max(s.iter().sum::<f64>() / n as f64);
    }
    Ok(worst)
}

/// Threshold `1/r₀` with `r₀ = 10 C₃ / L₁`, above the `9 C₃ / L₁` needed for the
/// lower Weyl bound.
pub fn weyl_threshold(c3: f64, l1: f64) -> Result<f64> {
    if !(c3 > 0.0 && l1 > 0.0) {
        return Err(Error::InvalidParameter(format!("need C₃ > 0 and L₁ > 0, got {c3} and {l1}")));
    }
    Ok(l1 / (10.0 * c3))
}

fn dominant_subspace(m: MatRef<'_, c64>, rel_tol: f64, left: bool) -> Result<Mat<c64>> {
    let svd = m.thin_svd().map_err(|e| Error::LinearAlgebra(format!("svd: {e:?}")))?;
    let s = svd.S().column_vector();
    let top = if s.nrows() > 0 { s[0].re } else { 0.0 };
    let keep = (0..s.nrows()).filter(|&i| s[i].re > rel_tol * top).count().max(1);
    let basis = if left { svd.U() } else { svd.V() };
    Ok(basis.subcols(0, keep).to_owned())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressedSpectrum {
    /// Approximate nonzero singular values, nonincreasing.
    pub values: Vec<f64>,
    /// Every true singular value lies within `error` of its approximation.
    pub error: f64,
    /// `N·L`, the length of the full spectrum.
    pub full_len: usize,
}

impl CompressedSpectrum {
    /// Bracket `(lo, hi)` for `#{μ_i(L_N) ≥ threshold}`.
    pub fn count_bracket(&self, threshold: f64) -> (usize, usize) {
        let lo = linalg::count_at_least(&self.values, threshold + self.error);
        let hi = if threshold - self.error <= 0.0 {
            self.full_len
        } else {
            linalg::count_at_least(&self.values, threshold - self.error)
        };
        (lo, hi)
    }
}
