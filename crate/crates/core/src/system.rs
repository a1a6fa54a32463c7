//! Contraction systems `(γ_1, …, γ_d, G)` on a disc and their validation.
//!
//! A system is usable for assembly only after [`BranchSystem::validate`] has confirmed
//! that every branch maps the closed disc strictly inside itself. The report keeps the
//! per-branch contraction ratios, which drive the truncation tail bounds downstream.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::c64;
use crate::domain::Disc;
use crate::error::{Error, Result};

/// Default number of equispaced boundary samples used by validation.
pub const DEFAULT_BOUNDARY_SAMPLES: usize = 1024;
const MIN_BOUNDARY_SAMPLES: usize = 64;
const REFINED_CANDIDATES: usize = 4;
const GOLDEN_ITERATIONS: usize = 80;

/// Möbius map `z ↦ (a z + b) / (c z + d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobiusMap {
    pub a: c64,
    pub b: c64,
    pub c: c64,
    pub d: c64,
}

impl MobiusMap {
    pub fn new(a: c64, b: c64, c: c64, d: c64) -> Result<Self> {
        let det = a * d - b * c;
        if det.norm() == 0.0 || !det.norm().is_finite() {
            return Err(Error::InvalidParameter("Möbius map must satisfy ad - bc ≠ 0".into()));
        }
        Ok(Self { a, b, c, d })
    }

    /// Gauss branch `z ↦ 1 / (j + z)`.
    pub fn gauss(j: u32) -> Result<Self> {
        if j < 1 {
            return Err(Error::InvalidParameter(format!("Gauss branch index must be ≥ 1, got {j}")));
        }
        Ok(Self {
            a: c64::new(0.0, 0.0),
            b: c64::new(1.0, 0.0),
            c: c64::new(1.0, 0.0),
            d: c64::new(j as f64, 0.0),
        })
    }

    #[inline]
    pub fn eval(&self, z: c64) -> c64 {
        (self.a * z + self.b) / (self.c * z + self.d)
    }

    /// Pole `-d/c`, if the map is not affine.
    pub fn pole(&self) -> Option<c64> {
        (self.c.norm() != 0.0).then(|| -self.d / self.c)
    }
}

/// Affine contraction `z ↦ p + q (z - p)` with fixed point `p` and multiplier `|q| < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    pub fixed_point: c64,
    pub multiplier: c64,
}

impl AffineMap {
    pub fn new(fixed_point: c64, multiplier: c64) -> Result<Self> {
        if !(multiplier.norm() < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "affine multiplier must satisfy |q| < 1, got |q| = {}",
                multiplier.norm()
            )));
        }
        Ok(Self { fixed_point, multiplier })
    }

    #[inline]
    pub fn eval(&self, z: c64) -> c64 {
        self.fixed_point + self.multiplier * (z - self.fixed_point)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Branch {
    Mobius(MobiusMap),
    Affine(AffineMap),
}

impl Branch {
    pub fn gauss(j: u32) -> Result<Self> {
        MobiusMap::gauss(j).map(Branch::Mobius)
    }

    #[inline]
    pub fn eval(&self, z: c64) -> c64 {
        match self {
            Branch::Mobius(m) => m.eval(z),
            Branch::Affine(a) => a.eval(z),
        }
    }
}

/// Weight `G` entering the operator through `e^{G∘γ_j}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Weight {
    /// `G ≡ 0`.
    #[default]
    Zero,
    /// `G(w) = Σ_k c_k ((w - x)/r)^k` in the normalized coordinate of the domain.
    Polynomial(Vec<c64>),
    /// Mayer weight `(c z + d)^{-2σ}` for Möbius branches, i.e. `(j + z)^{-2σ}` for the
    /// Gauss branch `1/(j + z)` (principal branch of the power).
    Mayer { sigma: f64 },
}

/// Outcome of [`BranchSystem::validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// `min_j (r - sup_{∂Ω₀} |γ_j(z) - x|)`.
    pub margin: f64,
    /// `max_j sup |γ_j(z) - x| / r`.
    pub rho: f64,
    pub rho_per_branch: Vec<f64>,
    /// `sup_{Ω₀} |γ_j(z)|` per branch.
    pub sup_abs_image: Vec<f64>,
    /// `sup_{Ω₀} |e^{G(γ_j z)}|` per branch (the Mayer weight is evaluated at `z`).
    pub weight_sup: Vec<f64>,
    pub samples: usize,
    pub warnings: Vec<String>,
}

/// `d` contraction branches on a disc together with a weight.
#[derive(Debug, Clone)]
pub struct BranchSystem {
    domain: Disc,
    branches: Vec<Branch>,
    weight: Weight,
    validation: Option<ValidationReport>,
}

impl BranchSystem {
    pub fn new(domain: Disc, branches: Vec<Branch>, weight: Weight) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::InvalidParameter("a system needs at least one branch".into()));
        }
        if let Weight::Mayer { sigma } = weight {
            if !sigma.is_finite() {
                return Err(Error::InvalidParameter("Mayer exponent must be finite".into()));
            }
            if branches.iter().any(|b| matches!(b, Branch::Affine(_))) {
                return Err(Error::InvalidParameter(
                    "the Mayer weight is only defined for Möbius branches".into(),
                ));
            }
        }
        Ok(Self { domain, branches, weight, validation: None })
    }

    /// Gauss branches `1/(j + z)`, `j ∈ indices`, on `D(1, 3/2)` with the given weight.
    pub fn gauss(indices: &[u32], weight: Weight) -> Result<Self> {
        let branches = indices.iter().map(|&j| Branch::gauss(j)).collect::<Result<Vec<_>>>()?;
        Self::new(Disc::gauss_example(), branches, weight)
    }

    pub fn domain(&self) -> &Disc {
        &self.domain
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn weight(&self) -> &Weight {
        &self.weight
    }

    /// Number of branches `d`.
    pub fn rank(&self) -> usize {
        self.branches.len()
    }

    pub fn validation(&self) -> Option<&ValidationReport> {
        self.validation.as_ref()
    }

    pub fn require_validated(&self) -> Result<&ValidationReport> {
        self.validation.as_ref().ok_or(Error::Unvalidated)
    }

    pub fn branch(&self, j: usize) -> Result<&Branch> {
        self.branches.get(j).ok_or(Error::BranchIndex { index: j, count: self.branches.len() })
    }

    /// `e^{G(γ_j(z))}`, or the Mayer factor `(c z + d)^{-2σ}`.
    pub fn weight_factor(&self, j: usize, z: c64) -> Result<c64> {
        let branch = self.branch(j)?;
        Ok(self.weight_factor_unchecked(branch, z))
    }

    #[inline]
    pub(crate) fn weight_factor_unchecked(&self, branch: &Branch, z: c64) -> c64 {
        match &self.weight {
            Weight::Zero => c64::new(1.0, 0.0),
            Weight::Polynomial(coefficients) => {
                let u = self.domain.normalized(branch.eval(z));
                let g = coefficients
                    .iter()
                    .rev()
                    .fold(c64::new(0.0, 0.0), |acc, &coef| acc * u + coef);
                g.exp()
            }
            Weight::Mayer { sigma } => match branch {
                Branch::Mobius(m) => (m.c * z + m.d).powf(-2.0 * sigma),
                Branch::Affine(_) => unreachable!("rejected at construction"),
            },
        }
    }

    /// Checks `closure(γ_j(Ω₀)) ⊂ Ω₀` for every branch by maximizing `|γ_j(z) - x|` over the
    /// boundary circle (maximum principle), stores and returns the report.
    pub fn validate(&mut self, boundary_samples: usize) -> Result<ValidationReport> {
        if boundary_samples < MIN_BOUNDARY_SAMPLES {
            return Err(Error::InvalidParameter(format!(
                "boundary_samples must be ≥ {MIN_BOUNDARY_SAMPLES}, got {boundary_samples}"
            )));
        }
        let disc = self.domain;
        let r = disc.radius();
        let mut rho_per_branch = Vec::with_capacity(self.rank());
        let mut sup_abs_image = Vec::with_capacity(self.rank());
        let mut weight_sup = Vec::with_capacity(self.rank());
        let mut warnings = Vec::new();

        for (j, branch) in self.branches.iter().enumerate() {
            if let Branch::Mobius(m) = branch {
                if let Some(pole) = m.pole() {
                    if (pole - disc.center()).norm() <= r {
                        return Err(Error::ValidationFailed(format!(
                            "branch {j} has its pole {pole} in the closed domain"
                        )));
                    }
                }
                if let Weight::Mayer { .. } = self.weight {
                    // principal power of c z + d must be continuous on the closed disc
                    let image_center = m.c * disc.center() + m.d;
                    let image_radius = m.c.norm() * r;
                    if image_center.re <= image_radius && image_center.im.abs() <= image_radius {
                        return Err(Error::ValidationFailed(format!(
                            "branch {j}: c z + d meets the negative real axis, Mayer weight undefined"
                        )));
                    }
                }
            }
            let sup = boundary_sup(boundary_samples, |theta| {
                (branch.eval(disc.boundary_point(theta)) - disc.center()).norm()
            });
            if !sup.is_finite() {
                return Err(Error::ValidationFailed(format!("branch {j} is unbounded on the domain")));
            }
            rho_per_branch.push(sup / r);
            sup_abs_image.push(boundary_sup(boundary_samples, |theta| {
                branch.eval(disc.boundary_point(theta)).norm()
            }));
            weight_sup.push(boundary_sup(boundary_samples, |theta| {
                self.weight_factor_unchecked(branch, disc.boundary_point(theta)).norm()
            }));
        }

        let rho = rho_per_branch.iter().copied().fold(0.0, f64::max);
        let margin = rho_per_branch
            .iter()
            .map(|&rj| r - rj * r)
            .fold(f64::INFINITY, f64::min);
        if !(margin > 0.0) {
            let worst = rho_per_branch
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(j, _)| j)
                .unwrap_or(0);
            return Err(Error::ValidationFailed(format!(
                "branch {worst} does not map the closed disc strictly inside itself (margin {margin:.3e})"
            )));
        }
        if self.rank() == 1 {
            warnings.push(
                "d = 1: the single-branch spectrum is explicit and the free-group limit law degenerates"
                    .to_string(),
            );
        }
        let report = ValidationReport {
            margin,
            rho,
            rho_per_branch,
            sup_abs_image,
            weight_sup,
            samples: boundary_samples,
            warnings,
        };
        for w in &report.warnings {
            log::warn!("{w}");
        }
        self.validation = Some(report.clone());
        Ok(report)
    }

    /// Consuming variant of [`validate`](Self::validate).
    pub fn validated(mut self, boundary_samples: usize) -> Result<Self> {
        self.validate(boundary_samples)?;
        Ok(self)
    }

    /// Parses a system definition file (TOML, schema in the README).
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: SystemFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        file.into_system()
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(&SystemFile::from_system(self)).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Maximum of a `2π`-periodic function: dense sampling, then golden-section refinement
/// around the largest sampled local maxima.
fn boundary_sup(samples: usize, f: impl Fn(f64) -> f64) -> f64 {
    let step = 2.0 * PI / samples as f64;
    let values: Vec<f64> = (0..samples).map(|i| f(i as f64 * step)).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    let mut peaks: Vec<usize> = (0..samples)
        .filter(|&i| {
            let prev = values[(i + samples - 1) % samples];
            let next = values[(i + 1) % samples];
            values[i] >= prev && values[i] >= next
        })
        .collect();
    peaks.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    peaks.truncate(REFINED_CANDIDATES);

    let mut best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    for i in peaks {
        let center = i as f64 * step;
        let (mut lo, mut hi) = (center - step, center + step);
        let mut x1 = hi - inv_phi * (hi - lo);
        let mut x2 = lo + inv_phi * (hi - lo);
        let (mut f1, mut f2) = (f(x1), f(x2));
        for _ in 0..GOLDEN_ITERATIONS {
            if f1 < f2 {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + inv_phi * (hi - lo);
                f2 = f(x2);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - inv_phi * (hi - lo);
                f1 = f(x1);
            }
        }
        best = best.max(f1).max(f2);
    }
    best
}

// ---------------------------------------------------------------------------
// System definition file
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemFile {
    domain: DomainSpec,
    branches: Vec<BranchSpec>,
    #[serde(default)]
    weight: WeightSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DomainSpec {
    center: [f64; 2],
    radius: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum BranchSpec {
    Gauss { j: u32 },
    Mobius { a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2] },
    Affine { fixed_point: [f64; 2], multiplier: [f64; 2] },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum WeightSpec {
    #[default]
    Zero,
    Polynomial { coefficients: Vec<[f64; 2]> },
    Mayer { sigma: f64 },
}

fn cx(v: [f64; 2]) -> c64 {
    c64::new(v[0], v[1])
}

fn pair(z: c64) -> [f64; 2] {
    [z.re, z.im]
}

impl SystemFile {
    fn into_system(self) -> Result<BranchSystem> {
        let domain = Disc::new(cx(self.domain.center), self.domain.radius)?;
        let branches = self
            .branches
            .into_iter()
            .map(|spec| match spec {
                BranchSpec::Gauss { j } => Branch::gauss(j),
                BranchSpec::Mobius { a, b, c, d } => {
                    MobiusMap::new(cx(a), cx(b), cx(c), cx(d)).map(Branch::Mobius)
                }
                BranchSpec::Affine { fixed_point, multiplier } => {
                    AffineMap::new(cx(fixed_point), cx(multiplier)).map(Branch::Affine)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let weight = match self.weight {
            WeightSpec::Zero => Weight::Zero,
            WeightSpec::Polynomial { coefficients } => {
                Weight::Polynomial(coefficients.into_iter().map(cx).collect())
            }
            WeightSpec::Mayer { sigma } => Weight::Mayer { sigma },
        };
        BranchSystem::new(domain, branches, weight)
    }

    fn from_system(sys: &BranchSystem) -> Self {
        let branches = sys
            .branches
            .iter()
            .map(|b| match b {
                Branch::Mobius(m) => match MobiusMap::gauss_index(m) {
                    Some(j) => BranchSpec::Gauss { j },
                    None => BranchSpec::Mobius { a: pair(m.a), b: pair(m.b), c: pair(m.c), d: pair(m.d) },
                },
                Branch::Affine(a) => BranchSpec::Affine {
                    fixed_point: pair(a.fixed_point),
                    multiplier: pair(a.multiplier),
                },
            })
            .collect();
        let weight = match &sys.weight {
            Weight::Zero => WeightSpec::Zero,
            Weight::Polynomial(c) => WeightSpec::Polynomial { coefficients: c.iter().copied().map(pair).collect() },
            Weight::Mayer { sigma } => WeightSpec::Mayer { sigma: *sigma },
        };
        SystemFile {
            domain: DomainSpec { center: pair(sys.domain.center()), radius: sys.domain.radius() },
            branches,
            weight,
        }
    }
}

impl MobiusMap {
    fn gauss_index(&self) -> Option<u32> {
        let zero = c64::new(0.0, 0.0);
        let one = c64::new(1.0, 0.0);
        let j = self.d.re;
        (self.a == zero
            && self.b == one
            && self.c == one
            && self.d.im == 0.0
            && j >= 1.0
            && j.fract() == 0.0
            && j <= u32::MAX as f64)
            .then_some(j as u32)
    }
}
