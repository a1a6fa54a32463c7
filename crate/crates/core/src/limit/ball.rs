use std::collections::HashMap;

use faer::Mat;

use super::algebra::AlgebraElement;
use crate::c64;
use crate::error::{Error, Result};
use crate::freegroup::Word;
use crate::linalg;

/// Largest matrix dimension `L·|B_R|` accepted for a ball compression.
pub const MAX_BALL_DIMENSION: usize = 6000;

/// `λ(X)` compressed to `ℓ²(B_R) ⊗ C^L`, where `B_R` is the ball of radius `R` in the
/// Cayley tree of `F^d`. Block `(w g, g)` holds `A_w`.
///
/// Spectra of the compression carry boundary effects from the cut at radius `R`; the
/// center block of powers is exact while the paths stay inside the ball.
#[derive(Debug, Clone)]
pub struct CayleyBall {
    pub words: Vec<Word>,
    pub matrix: Mat<c64>,
    pub order: usize,
    pub radius: usize,
}

impl CayleyBall {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Eigenvalues of the (Hermitian) compression, nondecreasing.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        linalg::hermitian_eigenvalues(self.matrix.as_ref())
    }
}

/// Reduced words of length `≤ radius` over `d` generators, by length then BFS order.
pub fn ball_words(d: usize, radius: usize) -> Vec<Word> {
    let mut words = vec![Word::identity()];
    let mut frontier = vec![Word::identity()];
    for _ in 0..radius {
        let mut next = Vec::new();
        for w in &frontier {
            let last = w.letters().last().copied();
            for g in 1..=d as i32 {
                for l in [g, -g] {
                    if last == Some(-l) {
                        continue;
                    }
                    let mut letters = w.letters().to_vec();
                    letters.push(l);
                    next.push(Word::reduce(&letters).expect("nonzero letters"));
                }
            }
        }
        words.extend(next.iter().cloned());
        frontier = next;
    }
    words
}

pub fn cayley_ball_matrix(x: &AlgebraElement, rank: usize, radius: usize) -> Result<CayleyBall> {
    if radius < 1 {
        return Err(Error::InvalidParameter("ball radius must be ≥ 1".into()));
    }
    if let Some((w, _)) = x.terms().find(|(w, _)| w.max_generator() > rank) {
        return Err(Error::GeneratorIndex { generator: w.max_generator(), rank });
    }
    // |B_R| = 1 + 2d((2d-1)^R - 1)/(2d-2), checked before enumeration
    let mut size: usize = 1;
    let mut sphere: usize = 2 * rank;
    for _ in 0..radius {
        size = size.saturating_add(sphere);
        sphere = sphere.saturating_mul((2 * rank).saturating_sub(1));
    }
    let order = x.order();
    if size.saturating_mul(order) > MAX_BALL_DIMENSION {
        return Err(Error::CapExceeded(format!(
            "ball of radius {radius} has {size} words; dimension {} exceeds {MAX_BALL_DIMENSION}",
            size.saturating_mul(order)
        )));
    }
    let words = ball_words(rank, radius);
    let index: HashMap<&Word, usize> = words.iter().enumerate().map(|(i, w)| (w, i)).collect();
    let mut matrix = Mat::zeros(words.len() * order, words.len() * order);
    for (col, g) in words.iter().enumerate() {
        for (w, a) in x.terms() {
            if let Some(&row) = index.get(&w.mul(g)) {
                let mut block = matrix.as_mut().submatrix_mut(row * order, col * order, order, order);
                for l in 0..order {
                    for k in 0..order {
                        block[(k, l)] += a[(k, l)];
                    }
                }
            }
        }
    }
    Ok(CayleyBall { words, matrix, order, radius })
}

/// Trace of the identity-word block of the `p`-th power of the compression.
pub fn center_block_trace(ball: &CayleyBall, p: u32) -> c64 {
    let order = ball.order;
    // identity word is first
    let dim = ball.matrix.nrows();
    let mut v = Mat::<c64>::from_fn(dim, order, |i, j| if i == j { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) });
    for _ in 0..p {
        v = &ball.matrix * &v;
    }
    linalg::trace(v.subrows(0, order))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limit::algebra::tau;

    #[test]
    fn ball_sizes() {
        assert_eq!(ball_words(2, 1).len(), 5);
        assert_eq!(ball_words(2, 3).len(), 53);
        assert_eq!(ball_words(3, 2).len(), 1 + 6 + 30);
    }

    #[test]
    fn identity_coefficient_gives_block_diagonal() {
        let a = Mat::from_fn(2, 2, |i, j| if i == j { c64::new(1.0 + i as f64, 0.0) } else { c64::new(0.0, 0.0) });
        let x = AlgebraElement::monomial(Word::identity(), a);
        let ball = cayley_ball_matrix(&x, 2, 2).unwrap();
        let ev = ball.eigenvalues().unwrap();
        let n = ball.len();
        assert!(ev[..n].iter().all(|e| (e - 1.0).abs() < 1e-14));
        assert!(ev[n..].iter().all(|e| (e - 2.0).abs() < 1e-14));
    }

    #[test]
    fn center_block_matches_tau() {
        let u = Word::quotient(1, 2);
        let x = AlgebraElement::scalar_terms([
            (Word::identity(), c64::new(2.0, 0.0)),
            (Word::letter(1).unwrap(), c64::new(0.3, 0.0)),
            (Word::letter(-1).unwrap(), c64::new(0.3, 0.0)),
            (u.clone(), c64::new(1.0, 0.5)),
            (u.inverse(), c64::new(1.0, -0.5)),
        ]);
        let ball = cayley_ball_matrix(&x, 2, 4).unwrap();
        for p in 1..=2u32 {
            let exact = tau(&x.power(p).unwrap());
            assert!((center_block_trace(&ball, p) - exact).norm() <= 1e-12 * exact.norm());
        }
    }

    #[test]
    fn oversized_ball_rejected() {
        let x = AlgebraElement::identity(40);
        assert!(matches!(cayley_ball_matrix(&x, 2, 5), Err(Error::CapExceeded(_))));
    }
}
