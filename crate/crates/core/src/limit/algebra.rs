use std::collections::BTreeMap;

use faer::{Mat, MatRef};
use rayon::prelude::*;

use crate::c64;
use crate::error::{Error, Result};
use crate::freegroup::Word;
use crate::linalg;

/// Coefficients whose Frobenius norm falls below this are dropped after each product.
pub const PRUNING_THRESHOLD: f64 = 1e-14;
/// Hard cap on the support of a product.
pub const MAX_SUPPORT: usize = 1_000_000;

/// Finitely supported `Σ_w A_w · w` with `L × L` matrix coefficients.
///
/// Terms are kept in a `BTreeMap`, so iteration (and every reduction built on it) runs in
/// a fixed order.
#[derive(Debug, Clone)]
pub struct AlgebraElement {
    terms: BTreeMap<Word, Mat<c64>>,
    order: usize,
}

impl AlgebraElement {
    pub fn zero(order: usize) -> Self {
        Self { terms: BTreeMap::new(), order }
    }

    /// `I · e`.
    pub fn identity(order: usize) -> Self {
        Self::monomial(Word::identity(), Mat::identity(order, order))
    }

    pub fn monomial(word: Word, coefficient: Mat<c64>) -> Self {
        let order = coefficient.nrows();
        let mut terms = BTreeMap::new();
        terms.insert(word, coefficient);
        Self { terms, order }
    }

    /// `1 × 1` coefficients, e.g. elements of the plain group algebra.
    pub fn scalar_terms(terms: impl IntoIterator<Item = (Word, c64)>) -> Self {
        let mut x = Self::zero(1);
        for (w, v) in terms {
            x.add_term(w, Mat::from_fn(1, 1, |_, _| v)).expect("1x1 coefficient");
        }
        x
    }

    /// Adds `coefficient · word` to the element.
    pub fn add_term(&mut self, word: Word, coefficient: Mat<c64>) -> Result<()> {
        if coefficient.nrows() != self.order || coefficient.ncols() != self.order {
            return Err(Error::DimensionMismatch(format!(
                "coefficient is {}x{}, element has order {}",
                coefficient.nrows(),
                coefficient.ncols(),
                self.order
            )));
        }
        match self.terms.get_mut(&word) {
            Some(existing) => *existing += &coefficient,
            None => {
                self.terms.insert(word, coefficient);
            }
        }
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn support_len(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &Mat<c64>)> {
        self.terms.iter()
    }

    pub fn get(&self, w: &Word) -> Option<MatRef<'_, c64>> {
        self.terms.get(w).map(Mat::as_ref)
    }

    pub fn max_word_len(&self) -> usize {
        self.terms.keys().map(Word::len).max().unwrap_or(0)
    }

    /// `Σ_w A_w† · w^{-1}`.
    pub fn adjoint(&self) -> Self {
        Self {
            terms: self.terms.iter().map(|(w, a)| (w.inverse(), a.adjoint().to_owned())).collect(),
            order: self.order,
        }
    }

    /// `max_w ‖A_{w^{-1}} - A_w†‖_F`; zero for self-adjoint elements.
    pub fn self_adjoint_defect(&self) -> f64 {
        let zero = Mat::<c64>::zeros(self.order, self.order);
        let mut worst = 0.0f64;
        for (w, a) in &self.terms {
            let partner = self.terms.get(&w.inverse()).unwrap_or(&zero);
            worst = worst.max((partner - a.adjoint()).norm_l2());
        }
        worst
    }

    /// `Σ_w ‖A_w‖`, an upper bound for the operator norm of `λ(X)`.
    pub fn norm_bound(&self) -> f64 {
        self.terms
            .values()
            .map(|a| linalg::singular_values(a.as_ref()).ok().and_then(|s| s.first().copied()).unwrap_or_else(|| a.norm_l2()))
            .sum()
    }

    pub fn scale(&self, s: c64) -> Self {
        Self {
            terms: self.terms.iter().map(|(w, a)| (w.clone(), a * faer::Scale(s))).collect(),
            order: self.order,
        }
    }

    /// `self + s · other`.
    pub fn add_scaled(&self, other: &Self, s: c64) -> Result<Self> {
        self.check_order(other)?;
        let mut out = self.clone();
        for (w, b) in &other.terms {
            out.add_term(w.clone(), b * faer::Scale(s))?;
        }
        out.prune(0.0);
        Ok(out)
    }

    fn check_order(&self, other: &Self) -> Result<()> {
        if self.order != other.order {
            return Err(Error::DimensionMismatch(format!(
                "algebra elements of order {} and {}",
                self.order, other.order
            )));
        }
        Ok(())
    }

    fn prune(&mut self, threshold: f64) {
        self.terms.retain(|_, a| a.norm_l2() >= threshold && a.norm_l2() > 0.0);
    }

    /// Convolution product with free reduction, pruning and the support cap.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.mul_with(other, PRUNING_THRESHOLD, MAX_SUPPORT)
    }

    pub fn mul_with(&self, other: &Self, pruning: f64, max_support: usize) -> Result<Self> {
        self.check_order(other)?;
        let left: Vec<(&Word, &Mat<c64>)> = self.terms.iter().collect();
        let right: Vec<(&Word, &Mat<c64>)> = other.terms.iter().collect();
        // products are computed in parallel, accumulated sequentially in a fixed order
        let partial: Vec<Vec<(Word, Mat<c64>)>> = left
            .par_iter()
            .map(|(w1, a)| right.iter().map(|(w2, b)| (w1.mul(w2), *a * *b)).collect())
            .collect();
        let mut terms: BTreeMap<Word, Mat<c64>> = BTreeMap::new();
        for (w, m) in partial.into_iter().flatten() {
            match terms.get_mut(&w) {
                Some(existing) => *existing += &m,
                None => {
                    terms.insert(w, m);
                    if terms.len() > max_support {
                        return Err(Error::CapExceeded(format!(
                            "product support exceeds {max_support} words"
                        )));
                    }
                }
            }
        }
        let mut out = Self { terms, order: self.order };
        out.prune(pruning);
        Ok(out)
    }

    /// `X^p` for `p ≥ 1`.
    pub fn power(&self, p: u32) -> Result<Self> {
        if p == 0 {
            return Ok(Self::identity(self.order));
        }
        let mut acc = self.clone();
        for _ in 1..p {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// `X, X², …, X^p`.
    pub fn powers(&self, p: u32) -> Result<Vec<Self>> {
        let mut out: Vec<Self> = Vec::with_capacity(p as usize);
        for k in 0..p {
            let next = match out.last() {
                None => self.clone(),
                Some(prev) => prev.mul(self)?,
            };
            debug_assert_eq!(k as usize, out.len());
            out.push(next);
        }
        Ok(out)
    }
}

/// `τ(X) = Tr(A_e)`.
pub fn tau(x: &AlgebraElement) -> c64 {
    x.get(&Word::identity()).map(linalg::trace).unwrap_or(c64::new(0.0, 0.0))
}

/// `τ(X Y) = Σ_w Tr(A_{w^{-1}} B_w)` without forming the product.
pub fn tau_product(x: &AlgebraElement, y: &AlgebraElement) -> Result<c64> {
    x.check_order(y)?;
    let mut acc = c64::new(0.0, 0.0);
    for (w, b) in y.terms() {
        if let Some(a) = x.get(&w.inverse()) {
            // Tr(A B) = Σ_{k,l} A[k,l] B[l,k]
            for l in 0..a.ncols() {
                for k in 0..a.nrows() {
                    acc += a[(k, l)] * b[(l, k)];
                }
            }
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> c64 {
        c64::new(re, im)
    }

    fn w(letters: &[i32]) -> Word {
        Word::reduce(letters).unwrap()
    }

    fn random_element(seed: u64, order: usize, support: usize) -> AlgebraElement {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut x = AlgebraElement::zero(order);
        for _ in 0..support {
            let len = rng.random_range(0..4);
            let letters: Vec<i32> = (0..len)
                .map(|_| {
                    let g = rng.random_range(1..=2);
                    if rng.random::<bool>() { g } else { -g }
                })
                .collect();
            let m = Mat::from_fn(order, order, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
            x.add_term(w(&letters), m).unwrap();
        }
        x
    }

    #[test]
    fn multiplication_by_identity() {
        let x = random_element(1, 3, 5);
        let y = x.mul(&AlgebraElement::identity(3)).unwrap();
        assert_eq!(x.support_len(), y.support_len());
        for (word, a) in x.terms() {
            assert!((a - y.get(word).unwrap()).norm_l2() <= 1e-15);
        }
    }

    #[test]
    fn inverse_letters_cancel() {
        let a = Mat::from_fn(2, 2, |i, j| c((i + 2 * j) as f64, 1.0));
        let b = Mat::from_fn(2, 2, |i, j| c(1.0, (i * j) as f64));
        let x = AlgebraElement::monomial(w(&[1]), a.clone());
        let y = AlgebraElement::monomial(w(&[-1]), b.clone());
        let p = x.mul(&y).unwrap();
        assert_eq!(p.support_len(), 1);
        assert!((p.get(&Word::identity()).unwrap() - &a * &b).norm_l2() <= 1e-14);
    }

    #[test]
    fn tau_examples() {
        let a = Mat::from_fn(2, 2, |i, j| c((1 + i + j) as f64, 0.0));
        assert_eq!(tau(&AlgebraElement::monomial(w(&[1]), a.clone())), c(0.0, 0.0));
        assert_eq!(tau(&AlgebraElement::monomial(Word::identity(), a)), c(4.0, 0.0));
        assert_eq!(tau(&AlgebraElement::zero(3)), c(0.0, 0.0));
    }

    #[test]
    fn tau_is_faithful() {
        for seed in 0..100 {
            let y = random_element(seed, 2, 4);
            let t = tau(&y.adjoint().mul(&y).unwrap());
            let want: f64 = y.terms().map(|(_, a)| a.squared_norm_l2()).sum();
            assert!(t.re >= 0.0);
            assert!((t - c(want, 0.0)).norm() <= 1e-12 * want.max(1.0));
        }
    }

    #[test]
    fn tau_product_matches_full_product() {
        let x = random_element(7, 3, 6);
        let y = random_element(8, 3, 6);
        let full = tau(&x.mul(&y).unwrap());
        assert!((full - tau_product(&x, &y).unwrap()).norm() <= 1e-12);
    }

    #[test]
    fn adjoint_product_is_self_adjoint() {
        let y = random_element(3, 2, 5);
        let g = y.adjoint().mul(&y).unwrap();
        assert!(g.self_adjoint_defect() <= 1e-13);
        assert!(random_element(4, 2, 3).self_adjoint_defect() > 0.0);
    }

    #[test]
    fn support_cap_enforced() {
        let x = random_element(5, 1, 8);
        assert!(matches!(x.mul_with(&x, PRUNING_THRESHOLD, 3), Err(Error::CapExceeded(_))));
    }

    #[test]
    fn mismatched_orders_rejected() {
        assert!(AlgebraElement::identity(2).mul(&AlgebraElement::identity(3)).is_err());
        let mut x = AlgebraElement::zero(2);
        assert!(x.add_term(Word::identity(), Mat::identity(3, 3)).is_err());
    }

    proptest! {
        #[test]
        fn multiplication_is_associative(s1 in 0u64..1000, s2 in 0u64..1000, s3 in 0u64..1000) {
            let (x, y, z) = (random_element(s1, 2, 3), random_element(s2, 2, 3), random_element(s3, 2, 3));
            let lhs = x.mul(&y).unwrap().mul(&z).unwrap();
            let rhs = x.mul(&y.mul(&z).unwrap()).unwrap();
            let diff = lhs.add_scaled(&rhs, c(-1.0, 0.0)).unwrap();
            let size: f64 = lhs.terms().map(|(_, a)| a.norm_l2()).sum();
            prop_assert!(diff.terms().map(|(_, a)| a.norm_l2()).sum::<f64>() <= 1e-12 * size.max(1.0));
        }
    }
}
