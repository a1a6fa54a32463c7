//! Disc quadrature, Galerkin matrices of the weighted composition operators
//! `W_j = e^{G∘γ_j} T_{γ_j}` in the orthonormal Bergman basis, and the overlap matrix `H`.

use std::f64::consts::PI;

use faer::{Mat, MatRef};
use gauss_quad::GaussLegendre;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::c64;
use crate::domain::Disc;
use crate::error::{Error, Result};
use crate::linalg;
use crate::system::BranchSystem;

pub const DEFAULT_N_RADIAL: usize = 64;
pub const DEFAULT_N_ANGULAR: usize = 128;
pub const DEFAULT_TRUNCATION: usize = 40;
const MIN_N_RADIAL: usize = 8;
const MIN_N_ANGULAR: usize = 16;
/// Factor by which the last column may exceed the envelope calibrated on the first half.
const COARSE_QUADRATURE_FACTOR: f64 = 10.0;

/// Tensor rule on a disc: Gauss–Legendre in the radius times the trapezoid rule in angle.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    disc: Disc,
    nodes: Vec<c64>,
    weights: Vec<f64>,
    n_radial: usize,
    n_angular: usize,
}

impl QuadratureRule {
    pub fn disc(&self) -> &Disc {
        &self.disc
    }

    pub fn nodes(&self) -> &[c64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n_radial(&self) -> usize {
        self.n_radial
    }

    pub fn n_angular(&self) -> usize {
        self.n_angular
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(c64) -> c64) -> c64 {
        self.nodes.iter().zip(&self.weights).map(|(&z, &w)| f(z) * w).sum()
    }

    /// Same rule with both node counts doubled.
    pub fn refined(&self) -> Result<Self> {
        quadrature_nodes(&self.disc, 2 * self.n_radial, 2 * self.n_angular)
    }
}

/// Builds the `n_radial × n_angular` tensor rule on `disc`.
pub fn quadrature_nodes(disc: &Disc, n_radial: usize, n_angular: usize) -> Result<QuadratureRule> {
    if n_radial < MIN_N_RADIAL || n_angular < MIN_N_ANGULAR {
        return Err(Error::InvalidParameter(format!(
            "quadrature needs n_radial ≥ {MIN_N_RADIAL} and n_angular ≥ {MIN_N_ANGULAR}, got {n_radial}×{n_angular}"
        )));
    }
    let legendre = GaussLegendre::new(n_radial)
        .map_err(|e| Error::InvalidParameter(format!("Gauss–Legendre rule: {e}")))?;
    let r = disc.radius();
    let dtheta = 2.0 * PI / n_angular as f64;
    let mut nodes = Vec::with_capacity(n_radial * n_angular);
    let mut weights = Vec::with_capacity(n_radial * n_angular);
    for &(x, wx) in legendre.as_node_weight_pairs() {
        // map [-1, 1] to s ∈ [0, 1]; dm = r² s ds dθ
        let s = 0.5 * (x + 1.0);
        let w = 0.5 * wx * r * r * s * dtheta;
        for m in 0..n_angular {
            let theta = m as f64 * dtheta;
            nodes.push(disc.center() + c64::from_polar(r * s, theta));
            weights.push(w);
        }
    }
    Ok(QuadratureRule { disc: *disc, nodes, weights, n_radial, n_angular })
}

/// `L × L` Galerkin matrix of one weighted composition operator.
#[derive(Debug, Clone)]
pub struct TruncatedOperator {
    entries: Mat<c64>,
    branch: Option<usize>,
    rho: f64,
    tail_constant: f64,
    tail_bound: f64,
    column_norms: Vec<f64>,
    n_radial: usize,
    n_angular: usize,
    warnings: Vec<String>,
}

impl TruncatedOperator {
    /// Wraps an externally computed matrix; the tail bound is taken as given.
    pub fn from_matrix(entries: Mat<c64>, rho: f64, tail_bound: f64) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "truncated operators are square and nonempty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let column_norms = (0..entries.ncols()).map(|l| entries.col(l).norm_l2()).collect();
        Ok(Self {
            entries,
            branch: None,
            rho,
            tail_constant: 0.0,
            tail_bound,
            column_norms,
            n_radial: 0,
            n_angular: 0,
            warnings: Vec::new(),
        })
    }

    pub fn entries(&self) -> MatRef<'_, c64> {
        self.entries.as_ref()
    }

    pub fn into_entries(self) -> Mat<c64> {
        self.entries
    }

    /// Truncation order `L`.
    pub fn order(&self) -> usize {
        self.entries.nrows()
    }

    pub fn branch(&self) -> Option<usize> {
        self.branch
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Calibrated `C` in `‖W e_ℓ‖ ≤ C sqrt(ℓ+1) ρ^ℓ`.
    pub fn tail_constant(&self) -> f64 {
        self.tail_constant
    }

    /// `‖W e_ℓ‖` for `ℓ < L`, computed from the untruncated images.
    pub fn column_norms(&self) -> &[f64] {
        &self.column_norms
    }

    pub fn quadrature_size(&self) -> (usize, usize) {
        (self.n_radial, self.n_angular)
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }
}

/// Stored trace-norm estimate `C Σ_{ℓ≥L} sqrt(ℓ+1) ρ^ℓ` of the discarded block.
pub fn truncation_tail_bound(op: &TruncatedOperator) -> f64 {
    op.tail_bound
}

/// `Σ_{ℓ ≥ from} sqrt(ℓ+1) ρ^ℓ`, summed until the terms are negligible.
pub fn envelope_tail(rho: f64, from: usize) -> f64 {
    if rho <= 0.0 {
        return 0.0;
    }
    let mut sum = 0.0;
    let mut ell = from;
    let mut term = ((ell + 1) as f64).sqrt() * rho.powi(ell as i32);
    while term > sum * 1e-17 && term > 0.0 {
        sum += term;
        ell += 1;
        term = ((ell + 1) as f64).sqrt() * rho.powi(ell as i32);
    }
    sum
}

/// Quadrature matrix `A[q, k] = sqrt(w_q) e_k(z_q)`.
fn basis_matrix(quad: &QuadratureRule, order: usize) -> Mat<c64> {
    let disc = quad.disc();
    let mut row = vec![c64::new(0.0, 0.0); order];
    let mut a = Mat::zeros(quad.len(), order);
    for (q, (&z, &w)) in quad.nodes().iter().zip(quad.weights()).enumerate() {
        disc.basis_values_into(z, &mut row);
        let sw = w.sqrt();
        for (k, v) in row.iter().enumerate() {
            a[(q, k)] = *v * sw;
        }
    }
    a
}

fn check_quadrature(sys: &BranchSystem, quad: &QuadratureRule) -> Result<()> {
    if quad.disc() != sys.domain() {
        return Err(Error::DimensionMismatch("quadrature rule was built for a different disc".into()));
    }
    Ok(())
}

fn assemble_with_basis(
    sys: &BranchSystem,
    j: usize,
    order: usize,
    quad: &QuadratureRule,
    basis: MatRef<'_, c64>,
) -> Result<TruncatedOperator> {
    let report = sys.require_validated()?;
    let branch = sys.branch(j)?;
    let disc = sys.domain();
    let rho = report.rho_per_branch[j];

    // B[q, ℓ] = sqrt(w_q) e^{G(γ z_q)} e_ℓ(γ z_q)
    let mut row = vec![c64::new(0.0, 0.0); order];
    let mut images = Mat::zeros(quad.len(), order);
    for (q, (&z, &w)) in quad.nodes().iter().zip(quad.weights()).enumerate() {
        let factor = sys.weight_factor_unchecked(branch, z) * w.sqrt();
        disc.basis_values_into(branch.eval(z), &mut row);
        for (l, v) in row.iter().enumerate() {
            images[(q, l)] = *v * factor;
        }
    }
    let entries = basis.adjoint() * &images;
    let column_norms: Vec<f64> = (0..order).map(|l| images.col(l).norm_l2()).collect();

    let ratio = |l: usize| column_norms[l] / (((l + 1) as f64).sqrt() * rho.powi(l as i32));
    let tail_constant = (0..order).map(ratio).fold(0.0, f64::max);
    let tail_bound = tail_constant * envelope_tail(rho, order);

    let mut warnings = Vec::new();
    if order >= 4 {
        let calibrated = (0..order / 2).map(ratio).fold(0.0, f64::max);
        if ratio(order - 1) > COARSE_QUADRATURE_FACTOR * calibrated {
            let msg = format!(
                "branch {j}: last column norm exceeds the calibrated envelope by more than {COARSE_QUADRATURE_FACTOR}x; quadrature {}x{} is too coarse for L = {order}",
                quad.n_radial(),
                quad.n_angular()
            );
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }

    Ok(TruncatedOperator {
        entries,
        branch: Some(j),
        rho,
        tail_constant,
        tail_bound,
        column_norms,
        n_radial: quad.n_radial(),
        n_angular: quad.n_angular(),
        warnings,
    })
}

/// Galerkin matrix `M_j[k, ℓ] = ∫ e^{G(γ_j z)} e_ℓ(γ_j z) conj(e_k(z)) dm(z)` for `k, ℓ < L`.
pub fn assemble_weighted_composition(
    sys: &BranchSystem,
    j: usize,
    order: usize,
    quad: &QuadratureRule,
) -> Result<TruncatedOperator> {
    sys.require_validated()?;
    sys.branch(j)?;
    check_order(order)?;
    check_quadrature(sys, quad)?;
    let basis = basis_matrix(quad, order);
    assemble_with_basis(sys, j, order, quad, basis.as_ref())
}

/// All branch matrices, assembled concurrently and returned in branch order.
pub fn assemble_all(sys: &BranchSystem, order: usize, quad: &QuadratureRule) -> Result<Vec<TruncatedOperator>> {
    sys.require_validated()?;
    check_order(order)?;
    check_quadrature(sys, quad)?;
    let basis = basis_matrix(quad, order);
    (0..sys.rank())
        .into_par_iter()
        .map(|j| assemble_with_basis(sys, j, order, quad, basis.as_ref()))
        .collect()
}

fn check_order(order: usize) -> Result<()> {
    if order == 0 {
        return Err(Error::InvalidParameter("truncation order L must be ≥ 1".into()));
    }
    Ok(())
}

/// Hermitian `d × d` matrix `H_{ij} = ∫ e^{G∘γ_i} conj(e^{G∘γ_j}) B(γ_i z, γ_j z) dm(z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapMatrix {
    entries: Vec<c64>,
    rank: usize,
}

impl OverlapMatrix {
    pub fn from_entries(rank: usize, entries: Vec<c64>) -> Result<Self> {
        if entries.len() != rank * rank || rank == 0 {
            return Err(Error::DimensionMismatch(format!(
                "overlap matrix of rank {rank} needs {} entries, got {}",
                rank * rank,
                entries.len()
            )));
        }
        Ok(Self { entries, rank })
    }

    /// `H_{ij} = Tr(M_j† M_i)` from assembled operators (the truncated oracle).
    pub fn from_operators(ops: &[TruncatedOperator]) -> Result<Self> {
        check_same_order(ops)?;
        let d = ops.len();
        let mut entries = vec![c64::new(0.0, 0.0); d * d];
        for i in 0..d {
            for j in 0..d {
                entries[i * d + j] = linalg::trace_adjoint_product(ops[j].entries(), ops[i].entries());
            }
        }
        Self::from_entries(d, entries)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn get(&self, i: usize, j: usize) -> c64 {
        self.entries[i * self.rank + j]
    }

    pub fn to_mat(&self) -> Mat<c64> {
        Mat::from_fn(self.rank, self.rank, |i, j| self.get(i, j))
    }

    pub fn hermitian_defect(&self) -> f64 {
        linalg::hermitian_defect(self.to_mat().as_ref())
    }
}

pub(crate) fn check_same_order(ops: &[TruncatedOperator]) -> Result<usize> {
    let first = ops.first().ok_or_else(|| Error::DimensionMismatch("no operators given".into()))?;
    let order = first.order();
    if let Some(bad) = ops.iter().find(|op| op.order() != order) {
        return Err(Error::DimensionMismatch(format!(
            "operators have mixed truncation orders {order} and {}",
            bad.order()
        )));
    }
    Ok(order)
}

pub fn overlap_matrix(sys: &BranchSystem, quad: &QuadratureRule) -> Result<OverlapMatrix> {
    sys.require_validated()?;
    check_quadrature(sys, quad)?;
    let d = sys.rank();
    let disc = sys.domain();
    let branches = sys.branches();
    let mut entries = vec![c64::new(0.0, 0.0); d * d];
    for i in 0..d {
        for j in i..d {
            let (bi, bj) = (&branches[i], &branches[j]);
            let h = quad.integrate(|z| {
                let wi = sys.weight_factor_unchecked(bi, z);
                let wj = sys.weight_factor_unchecked(bj, z);
                wi * wj.conj() * disc.bergman_kernel_unchecked(bi.eval(z), bj.eval(z))
            });
            if i == j {
                entries[i * d + i] = c64::new(h.re, 0.0);
            } else {
                entries[i * d + j] = h;
                entries[j * d + i] = h.conj();
            }
        }
    }
    OverlapMatrix::from_entries(d, entries)
}

/// `M₀ = Σ_j sup|e^{G∘γ_j}| / (1 - ρ_j²)`, an upper bound for `‖L_N‖` valid for every `N`.
pub fn operator_norm_bound(sys: &BranchSystem) -> Result<f64> {
    let report = sys.require_validated()?;
    Ok(report
        .weight_sup
        .iter()
        .zip(&report.rho_per_branch)
        .map(|(w, rho)| w / (1.0 - rho * rho))
        .sum())
}

/// `Σ_j sup|e^{G∘γ_j}| Σ_ℓ sqrt(ℓ+1) ρ_j^ℓ`, an upper bound for `‖L_N‖₁ / N`.
pub fn trace_norm_bound(sys: &BranchSystem) -> Result<f64> {
    let report = sys.require_validated()?;
    Ok(report
        .weight_sup
        .iter()
        .zip(&report.rho_per_branch)
        .map(|(w, &rho)| w * envelope_tail(rho, 0))
        .sum())
}
