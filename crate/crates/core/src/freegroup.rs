//! Reduced words in the free group `F^d`, uniformly random homomorphisms `F^d → S_N`
//! and fixed-point statistics.
//!
//! Letters are signed generator indices: `k` stands for `a_k` and `-k` for `a_k^{-1}`,
//! with `k ∈ 1..=d`. A word `l_1 l_2 … l_m` is sent to the permutation
//! `σ_{l_1} ∘ σ_{l_2} ∘ … ∘ σ_{l_m}`, so evaluation is a homomorphism.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Freely reduced word.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<i32>", into = "Vec<i32>")]
pub struct Word {
    letters: Vec<i32>,
}

impl Word {
    pub fn identity() -> Self {
        Self::default()
    }

    /// Free reduction of a raw letter sequence. Zero letters are rejected.
    pub fn reduce(letters: &[i32]) -> Result<Self> {
        let mut out: Vec<i32> = Vec::with_capacity(letters.len());
        for &l in letters {
            if l == 0 {
                return Err(Error::InvalidParameter("letter 0 is not a generator".into()));
            }
            if out.last() == Some(&-l) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Ok(Self { letters: out })
    }

    /// The generator `a_k` (`k ≥ 1`) or its inverse (`k ≤ -1`).
    pub fn letter(k: i32) -> Result<Self> {
        Self::reduce(&[k])
    }

    /// `a_i^{-1} a_j`.
    pub fn quotient(i: usize, j: usize) -> Self {
        let (i, j) = (i as i32, j as i32);
        Self::reduce(&[-i, j]).expect("generator indices are nonzero")
    }

    pub fn letters(&self) -> &[i32] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn inverse(&self) -> Self {
        Self { letters: self.letters.iter().rev().map(|l| -l).collect() }
    }

    /// Reduced product `self · other`.
    pub fn mul(&self, other: &Word) -> Self {
        let mut cancel = 0;
        while cancel < self.len().min(other.len())
            && self.letters[self.len() - 1 - cancel] == -other.letters[cancel]
        {
            cancel += 1;
        }
        let mut letters = Vec::with_capacity(self.len() + other.len() - 2 * cancel);
        letters.extend_from_slice(&self.letters[..self.len() - cancel]);
        letters.extend_from_slice(&other.letters[cancel..]);
        Self { letters }
    }

    /// Largest generator index appearing in the word (0 for the identity).
    pub fn max_generator(&self) -> usize {
        self.letters.iter().map(|l| l.unsigned_abs() as usize).max().unwrap_or(0)
    }
}

impl TryFrom<Vec<i32>> for Word {
    type Error = Error;

    fn try_from(letters: Vec<i32>) -> Result<Self> {
        Word::reduce(&letters)
    }
}

impl From<Word> for Vec<i32> {
    fn from(w: Word) -> Self {
        w.letters
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return f.write_str("e");
        }
        for (i, l) in self.letters.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            if *l > 0 {
                write!(f, "a{l}")?;
            } else {
                write!(f, "a{}^-1", -l)?;
            }
        }
        Ok(())
    }
}

/// Bijection of `{0, …, N-1}` stored as its image array.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self { images: (0..n).collect() }
    }

    pub fn from_images(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &i in &images {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidParameter("image array is not a bijection".into()));
            }
        }
        Ok(Self { images })
    }

    /// The cycle `0 → 1 → … → n-1 → 0`.
    pub fn cycle(n: usize) -> Self {
        Self { images: (0..n).map(|i| (i + 1) % n.max(1)).collect() }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.images[i]
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Permutation) -> Self {
        Self { images: other.images.iter().map(|&i| self.images[i]).collect() }
    }

    pub fn inverse(&self) -> Self {
        let mut images = vec![0; self.len()];
        for (i, &j) in self.images.iter().enumerate() {
            images[j] = i;
        }
        Self { images }
    }

    pub fn fixed_points(&self) -> usize {
        self.images.iter().enumerate().filter(|(i, j)| i == *j).count()
    }
}

/// A homomorphism `F^d → S_N`, given by the images `σ_1, …, σ_d` of the generators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomHom {
    generators: Vec<Permutation>,
    inverses: Vec<Permutation>,
    n: usize,
    seed: u64,
}

impl RandomHom {
    pub fn from_permutations(generators: Vec<Permutation>, seed: u64) -> Result<Self> {
        let n = generators
            .first()
            .map(Permutation::len)
            .ok_or_else(|| Error::InvalidParameter("a homomorphism needs d ≥ 1 generators".into()))?;
        if n == 0 {
            return Err(Error::InvalidParameter("N must be ≥ 1".into()));
        }
        if generators.iter().any(|p| p.len() != n) {
            return Err(Error::DimensionMismatch("generator permutations have different sizes".into()));
        }
        let inverses = generators.iter().map(Permutation::inverse).collect();
        Ok(Self { generators, inverses, n, seed })
    }

    /// Trivial homomorphism: every generator acts as the identity.
    pub fn identity(d: usize, n: usize) -> Result<Self> {
        Self::from_permutations(vec![Permutation::identity(n); d], 0)
    }

    /// Rank `d` of the free group.
    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn generators(&self) -> &[Permutation] {
        &self.generators
    }

    pub fn generator(&self, k: usize) -> &Permutation {
        &self.generators[k]
    }

    fn check(&self, w: &Word) -> Result<()> {
        let g = w.max_generator();
        if g > self.rank() {
            return Err(Error::GeneratorIndex { generator: g, rank: self.rank() });
        }
        Ok(())
    }

    #[inline]
    fn apply_letter(&self, letter: i32, i: usize) -> usize {
        let k = letter.unsigned_abs() as usize - 1;
        if letter > 0 {
            self.generators[k].apply(i)
        } else {
            self.inverses[k].apply(i)
        }
    }

    /// Image of `i` under `φ(w)`; the rightmost letter acts first.
    #[inline]
    fn apply_word(&self, w: &Word, i: usize) -> usize {
        w.letters().iter().rev().fold(i, |acc, &l| self.apply_letter(l, acc))
    }
}

/// `d` independent uniform permutations of `{0, …, N-1}` by Fisher–Yates. Generator `k`
/// draws from its own ChaCha stream, so the result depends only on `(d, N, seed)`.
pub fn sample_homomorphism(d: usize, n: usize, seed: u64) -> Result<RandomHom> {
    if d == 0 || n == 0 {
        return Err(Error::InvalidParameter(format!("need d ≥ 1 and N ≥ 1, got d = {d}, N = {n}")));
    }
    let generators = (0..d)
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let mut images: Vec<usize> = (0..n).collect();
            images.shuffle(&mut rng);
            Permutation { images }
        })
        .collect();
    RandomHom::from_permutations(generators, seed)
}

pub fn evaluate_word(hom: &RandomHom, w: &Word) -> Result<Permutation> {
    hom.check(w)?;
    Ok(Permutation { images: (0..hom.n()).map(|i| hom.apply_word(w, i)).collect() })
}

/// `F_N(w)`, the number of fixed points of `φ(w)`.
pub fn fixed_points(hom: &RandomHom, w: &Word) -> Result<usize> {
    hom.check(w)?;
    if w.is_identity() {
        return Ok(hom.n());
    }
    Ok((0..hom.n()).filter(|&i| hom.apply_word(w, i) == i).count())
}

pub fn divisor_count(k: u64) -> Result<u64> {
    if k == 0 {
        return Err(Error::InvalidParameter("divisor_count needs k ≥ 1".into()));
    }
    let mut count = 0;
    let mut i = 1;
    while i * i <= k {
        if k % i == 0 {
            count += if i * i == k { 1 } else { 2 };
        }
        i += 1;
    }
    Ok(count)
}

/// `V(k₁, k₂) = Σ_{k | gcd(k₁, k₂)} k`.
pub fn covariance_v(k1: u64, k2: u64) -> Result<u64> {
    if k1 == 0 || k2 == 0 {
        return Err(Error::InvalidParameter("covariance_v needs positive arguments".into()));
    }
    let g = gcd(k1, k2);
    Ok((1..=g).filter(|k| g % k == 0).sum())
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Seed of trial `index` under `master`: a splitmix64 finalizer applied to the pair.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mean_and_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn reduction_examples() {
        assert!(Word::reduce(&[1, -1]).unwrap().is_identity());
        assert_eq!(Word::reduce(&[1, 2, -2, 1]).unwrap().letters(), &[1, 1]);
        assert_eq!(Word::reduce(&[-2, 1]).unwrap().letters(), &[-2, 1]);
        assert_eq!(Word::reduce(&[1, 2, -2, -1, 3]).unwrap().letters(), &[3]);
        assert!(Word::reduce(&[1, 0]).is_err());
        assert_eq!(Word::quotient(1, 2).to_string(), "a1^-1 a2");
        assert_eq!(Word::identity().to_string(), "e");
    }

    #[test]
    fn single_point_homs_are_trivial() {
        let hom = sample_homomorphism(3, 1, 99).unwrap();
        assert!(hom.generators().iter().all(|p| *p == Permutation::identity(1)));
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_homomorphism(3, 40, 12345).unwrap();
        let b = sample_homomorphism(3, 40, 12345).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_homomorphism(3, 40, 12346).unwrap());
        assert_ne!(a.generator(0), a.generator(1));
    }

    #[test]
    fn evaluation_examples() {
        let hom = RandomHom::from_permutations(vec![Permutation::cycle(3)], 0).unwrap();
        assert_eq!(evaluate_word(&hom, &Word::identity()).unwrap(), Permutation::identity(3));
        assert_eq!(evaluate_word(&hom, &Word::letter(1).unwrap()).unwrap(), Permutation::cycle(3));
        assert_eq!(evaluate_word(&hom, &Word::reduce(&[1, -1]).unwrap()).unwrap(), Permutation::identity(3));
        assert!(matches!(
            evaluate_word(&hom, &Word::letter(2).unwrap()),
            Err(Error::GeneratorIndex { generator: 2, rank: 1 })
        ));
    }

    #[test]
    fn evaluation_is_a_homomorphism() {
        let hom = sample_homomorphism(2, 17, 5).unwrap();
        let u = Word::reduce(&[1, 2, 2, -1]).unwrap();
        let v = Word::reduce(&[-2, 1, 1]).unwrap();
        let lhs = evaluate_word(&hom, &u.mul(&v)).unwrap();
        let rhs = evaluate_word(&hom, &u).unwrap().compose(&evaluate_word(&hom, &v).unwrap());
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn fixed_point_examples() {
        let hom = RandomHom::from_permutations(vec![Permutation::cycle(5)], 0).unwrap();
        assert_eq!(fixed_points(&hom, &Word::identity()).unwrap(), 5);
        assert_eq!(fixed_points(&hom, &Word::letter(1).unwrap()).unwrap(), 0);
        assert_eq!(fixed_points(&hom, &Word::reduce(&[1; 5]).unwrap()).unwrap(), 5);
    }

    #[test]
    fn divisor_and_covariance_examples() {
        assert_eq!(divisor_count(1).unwrap(), 1);
        assert_eq!(divisor_count(6).unwrap(), 4);
        assert_eq!(divisor_count(12).unwrap(), 6);
        for k in 1..200u64 {
            let brute = (1..=k).filter(|i| k % i == 0).count() as u64;
            assert_eq!(divisor_count(k).unwrap(), brute);
        }
        assert_eq!(covariance_v(1, 1).unwrap(), 1);
        assert_eq!(covariance_v(2, 4).unwrap(), 3);
        assert_eq!(covariance_v(4, 4).unwrap(), 7);
        assert!(divisor_count(0).is_err());
    }

    #[test]
    fn generator_has_one_fixed_point_on_average() {
        let trials = 10_000;
        let w = Word::letter(1).unwrap();
        let xs: Vec<f64> = (0..trials)
            .map(|t| fixed_points(&sample_homomorphism(1, 50, derive_seed(1, t)).unwrap(), &w).unwrap() as f64)
            .collect();
        let (mean, var) = mean_and_var(&xs);
        let se = (var / trials as f64).sqrt();
        assert!((mean - 1.0).abs() <= 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn quotient_word_fixed_point_statistics() {
        let w = Word::quotient(1, 2);
        let trials = 5000;
        let xs: Vec<f64> = (0..trials)
            .map(|t| fixed_points(&sample_homomorphism(2, 100, derive_seed(2, t)).unwrap(), &w).unwrap() as f64)
            .collect();
        let (mean, var) = mean_and_var(&xs);
        assert!((mean - 1.0).abs() <= 3.0 * (var / trials as f64).sqrt());

        let trials = 10_000;
        let xs: Vec<f64> = (0..trials)
            .map(|t| fixed_points(&sample_homomorphism(2, 200, derive_seed(3, t)).unwrap(), &w).unwrap() as f64)
            .collect();
        let (mean, var) = mean_and_var(&xs);
        let fourth = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / trials as f64;
        let var_se = ((fourth - var * var) / trials as f64).sqrt();
        assert!((var - 1.0).abs() <= 3.0 * var_se, "var {var} se {var_se}");
    }

    #[test]
    fn first_image_is_uniform() {
        let n = 10;
        let samples = 100_000u64;
        let mut counts = vec![0u64; n];
        for t in 0..samples {
            counts[sample_homomorphism(1, n, derive_seed(4, t)).unwrap().generator(0).apply(0)] += 1;
        }
        let expected = samples as f64 / n as f64;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // upper 1e-3 quantile of chi-square with 9 degrees of freedom
        assert!(chi2 < 27.877, "chi2 = {chi2}");
    }

    #[test]
    fn derived_seeds_are_distinct() {
        let seeds: std::collections::HashSet<u64> = (0..10_000).map(|i| derive_seed(42, i)).collect();
        assert_eq!(seeds.len(), 10_000);
        assert_ne!(derive_seed(0, 0), derive_seed(1, 0));
    }

    #[test]
    fn word_serde_reduces() {
        let w: Word = serde_json::from_str("[1, 2, -2, -1, 3]").unwrap();
        assert_eq!(w.letters(), &[3]);
        assert_eq!(serde_json::to_string(&Word::quotient(2, 1)).unwrap(), "[-2,1]");
    }

    fn word_strategy(d: i32, max_len: usize) -> impl Strategy<Value = Word> {
        proptest::collection::vec((1..=d, any::<bool>()), 0..max_len)
            .prop_map(|v| Word::reduce(&v.into_iter().map(|(k, s)| if s { k } else { -k }).collect::<Vec<_>>()).unwrap())
    }

    proptest! {
        #[test]
        fn reduction_is_idempotent(raw in proptest::collection::vec(prop_oneof![-3i32..=-1, 1i32..=3], 0..20)) {
            let w = Word::reduce(&raw).unwrap();
            prop_assert_eq!(Word::reduce(w.letters()).unwrap(), w.clone());
            prop_assert!(w.letters().windows(2).all(|p| p[0] != -p[1]));
        }

        #[test]
        fn fixed_points_are_conjugation_and_inversion_invariant(
            u in word_strategy(3, 6), w in word_strategy(3, 8), n in 1usize..30, seed in any::<u64>()
        ) {
            let hom = sample_homomorphism(3, n, seed).unwrap();
            let conj = u.mul(&w).mul(&u.inverse());
            let f = fixed_points(&hom, &w).unwrap();
            prop_assert_eq!(fixed_points(&hom, &conj).unwrap(), f);
            prop_assert_eq!(fixed_points(&hom, &w.inverse()).unwrap(), f);
        }

        #[test]
        fn product_matches_concatenation(u in word_strategy(2, 8), v in word_strategy(2, 8)) {
            let mut raw = u.letters().to_vec();
            raw.extend_from_slice(v.letters());
            prop_assert_eq!(u.mul(&v), Word::reduce(&raw).unwrap());
        }
    }
}
