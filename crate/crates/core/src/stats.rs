//! Poisson/Bell/Stirling combinatorics, the closed-form limit moments of `‖L_N‖₂²` and
//! Monte Carlo estimation with jackknife standard errors.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::OverlapMatrix;
use crate::error::{Error, Result};
use crate::freegroup::{derive_seed, fixed_points, sample_homomorphism, RandomHom, Word};
use crate::twisted::{hs_norm_trace_formula, RestrictedTracePlan};

/// Largest `k` accepted by the exact integer combinatorics (`B_k` fits in `u128`).
pub const MAX_EXACT_ORDER: u32 = 40;
/// Caps of the multinomial enumeration in [`poisson_combo_moment`].
pub const MAX_COMBO_ORDER: u32 = 12;
pub const MAX_COMBO_TERMS: usize = 10;
/// Trials are processed in chunks of this size so records stream out in order.
const CHUNK: usize = 256;

fn check_exact(k: u32) -> Result<()> {
    if k > MAX_EXACT_ORDER {
        return Err(Error::CapExceeded(format!("order {k} exceeds {MAX_EXACT_ORDER}")));
    }
    Ok(())
}

/// Bell numbers `B_0..=B_k` by `B_{n+1} = Σ_j C(n, j) B_j`.
pub fn bell_numbers(k: u32) -> Result<Vec<u128>> {
    check_exact(k)?;
    let mut b = vec![1u128];
    let mut row = vec![1u128]; // binomial row n
    for n in 0..k as usize {
        let next: u128 = row.iter().zip(&b).map(|(c, bj)| c * bj).sum();
        b.push(next);
        let mut new_row = vec![1u128; n + 2];
        for j in 1..=n {
            new_row[j] = row[j - 1] + row[j];
        }
        row = new_row;
    }
    Ok(b)
}

pub fn bell(k: u32) -> Result<u128> {
    Ok(bell_numbers(k)?[k as usize])
}

/// Stirling numbers of the second kind by `S(n, l) = l S(n-1, l) + S(n-1, l-1)`.
pub fn stirling(k: u32, l: u32) -> Result<u128> {
    check_exact(k)?;
    if l > k {
        return Ok(0);
    }
    let mut row = vec![1u128]; // S(0, ·)
    for n in 1..=k as usize {
        let mut next = vec![0u128; n + 1];
        for j in 1..=n {
            let keep = if j < row.len() { j as u128 * row[j] } else { 0 };
            next[j] = keep + row[j - 1];
        }
        row = next;
    }
    Ok(row[l as usize])
}

/// `E[Z^k]` for `Z ~ Poisson(λ)`: `Σ_l S(k, l) λ^l`.
pub fn poisson_moment(lambda: f64, k: u32) -> Result<f64> {
    (0..=k).try_fold(0.0, |acc, l| Ok(acc + stirling(k, l)? as f64 * lambda.powi(l as i32)))
}

/// Dobinski partial sum `e^{-1} Σ_{n<terms} n^k / n!`.
pub fn dobinski(k: u32, terms: usize) -> f64 {
    let mut sum = 0.0;
    let mut inv_fact = 1.0;
    for n in 0..terms {
        if n > 0 {
            inv_fact /= n as f64;
        }
        let nk = if k == 0 { 1.0 } else { (n as f64).powi(k as i32) };
        sum += nk * inv_fact;
    }
    sum * (-1.0f64).exp()
}

/// `E[(Z - 1)^k]` for a unit Poisson `Z`: `Σ_i C(k, i) B_i (-1)^{k-i}`.
pub fn centered_poisson_moment(k: u32) -> Result<f64> {
    let b = bell_numbers(k)?;
    let mut sum = 0.0;
    let mut binom = 1.0;
    for i in 0..=k {
        let sign = if (k - i) % 2 == 0 { 1.0 } else { -1.0 };
        sum += binom * b[i as usize] as f64 * sign;
        binom = binom * (k - i) as f64 / (i + 1) as f64;
    }
    Ok(sum)
}

fn check_combo(alphas: &[f64], k: u32) -> Result<()> {
    if k > MAX_COMBO_ORDER || alphas.len() > MAX_COMBO_TERMS {
        return Err(Error::CapExceeded(format!(
            "multinomial enumeration limited to k ≤ {MAX_COMBO_ORDER} and ≤ {MAX_COMBO_TERMS} terms"
        )));
    }
    Ok(())
}

/// `Σ_{k_1+…+k_m = k} k!/(k_1!…k_m!) Π α_p^{k_p} μ(k_p)` for independent summands with
/// moments `μ`.
fn multinomial_moment(alphas: &[f64], k: u32, moment: &[f64]) -> f64 {
    fn rec(alphas: &[f64], remaining: u32, moment: &[f64], fact: &[f64]) -> f64 {
        match alphas {
            [] => {
                if remaining == 0 { 1.0 } else { 0.0 }
            }
            [last] => last.powi(remaining as i32) * moment[remaining as usize] / fact[remaining as usize],
            [first, rest @ ..] => (0..=remaining)
                .map(|j| first.powi(j as i32) * moment[j as usize] / fact[j as usize] * rec(rest, remaining - j, moment, fact))
                .sum(),
        }
    }
    let fact: Vec<f64> = (0..=k).scan(1.0, |f, i| {
        if i > 0 {
            *f *= i as f64;
        }
        Some(*f)
    }).collect();
    if alphas.is_empty() {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    fact[k as usize] * rec(alphas, k, moment, &fact)
}

/// `E[(Σ_p α_p Z_p)^k]` with independent unit-Poisson `Z_p`.
pub fn poisson_combo_moment(alphas: &[f64], k: u32) -> Result<f64> {
    check_combo(alphas, k)?;
    let moments: Vec<f64> = bell_numbers(k)?.iter().map(|&b| b as f64).collect();
    Ok(multinomial_moment(alphas, k, &moments))
}

/// `E[(Σ_p α_p (Z_p - 1))^k]` with independent unit-Poisson `Z_p`.
pub fn centered_poisson_combo_moment(alphas: &[f64], k: u32) -> Result<f64> {
    check_combo(alphas, k)?;
    let moments = (0..=k).map(centered_poisson_moment).collect::<Result<Vec<_>>>()?;
    Ok(multinomial_moment(alphas, k, &moments))
}

/// `2 Re H_{ij}` over the pairs `i < j`, the weights of the limiting Poisson combination.
pub fn pair_weights(h: &OverlapMatrix) -> Vec<f64> {
    let d = h.rank();
    (0..d).flat_map(|i| ((i + 1)..d).map(move |j| (i, j))).map(|(i, j)| 2.0 * h.get(i, j).re).collect()
}

/// Closed-form limits: `L₁ = Σ H_jj`, `L₂ = 4Σ(Re H)²`, `L₃ = 8Σ(Re H)³`,
/// `L₄ = 16Σ(Re H)⁴ + 48(Σ(Re H)²)²`, sums over `i < j`.
pub fn limit_moment(h: &OverlapMatrix, k: u32) -> Result<f64> {
    let re: Vec<f64> = pair_weights(h).iter().map(|w| w / 2.0).collect();
    let power_sum = |p: i32| re.iter().map(|x| x.powi(p)).sum::<f64>();
    match k {
        1 => Ok((0..h.rank()).map(|j| h.get(j, j).re).sum()),
        2 => Ok(4.0 * power_sum(2)),
        3 => Ok(8.0 * power_sum(3)),
        4 => Ok(16.0 * power_sum(4) + 48.0 * power_sum(2).powi(2)),
        _ => Err(Error::InvalidParameter(format!("closed forms exist for k = 1..4, got {k}"))),
    }
}

/// One Monte Carlo trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    #[serde(rename = "N")]
    pub n: usize,
    pub d: usize,
    #[serde(rename = "L")]
    pub order: usize,
    pub hs_norm_sq: f64,
    /// `F_N(a_i^{-1} a_j)` for `i < j`, keyed by the word.
    pub fixed_point_counts: BTreeMap<String, usize>,
    /// `p ↦ Tr_{V_N}((L_N*L_N)^p)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_powers: Option<BTreeMap<u32, f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    #[serde(rename = "N")]
    pub n: usize,
    pub trials: usize,
    pub master_seed: u64,
    /// Debug mode: every trial uses the trivial homomorphism.
    #[serde(default)]
    pub identity_hom: bool,
}

fn run_trial(
    cfg: &MonteCarloConfig,
    h: &OverlapMatrix,
    plan: Option<&RestrictedTracePlan>,
    order: usize,
    words: &[(String, Word)],
    index: u64,
) -> Result<TrialRecord> {
    let d = h.rank();
    let seed = derive_seed(cfg.master_seed, index);
    let hom = if cfg.identity_hom { RandomHom::identity(d, cfg.n)? } else { sample_homomorphism(d, cfg.n, seed)? };
    let fixed_point_counts = words
        .iter()
        .map(|(key, w)| fixed_points(&hom, w).map(|f| (key.clone(), f)))
        .collect::<Result<_>>()?;
    let trace_powers = plan
        .map(|p| p.evaluate(&hom).map(|v| v.into_iter().enumerate().map(|(i, t)| (i as u32 + 1, t)).collect()))
        .transpose()?;
    Ok(TrialRecord {
        seed,
        n: cfg.n,
        d,
        order,
        hs_norm_sq: hs_norm_trace_formula(h, &hom)?,
        fixed_point_counts,
        trace_powers,
    })
}

/// Runs `cfg.trials` trials, handing records to `sink` in trial order. Trial `t` uses
/// the seed `derive_seed(master_seed, t)`, so any prefix of a run is reproducible.
/// Hilbert–Schmidt norms come from the trace formula; `plan` adds restricted power traces.
pub fn run_monte_carlo_streaming(
    cfg: &MonteCarloConfig,
    h: &OverlapMatrix,
    plan: Option<&RestrictedTracePlan>,
    order: usize,
    mut sink: impl FnMut(&TrialRecord) -> Result<()>,
) -> Result<()> {
    if cfg.trials < 2 {
        return Err(Error::TooFewSamples(format!("Monte Carlo needs ≥ 2 trials, got {}", cfg.trials)));
    }
    if cfg.n == 0 {
        return Err(Error::InvalidParameter("N must be ≥ 1".into()));
    }
    let d = h.rank();
    let words: Vec<(String, Word)> = (0..d)
        .flat_map(|i| ((i + 1)..d).map(move |j| Word::quotient(i + 1, j + 1)))
        .map(|w| (w.to_string(), w))
        .collect();
    let mut start = 0;
    while start < cfg.trials {
        let end = (start + CHUNK).min(cfg.trials);
        let chunk: Vec<TrialRecord> = (start..end)
            .into_par_iter()
            .map(|t| run_trial(cfg, h, plan, order, &words, t as u64))
            .collect::<Result<_>>()?;
        for record in &chunk {
            sink(record)?;
        }
        start = end;
    }
    Ok(())
}

pub fn run_monte_carlo(
    cfg: &MonteCarloConfig,
    h: &OverlapMatrix,
    plan: Option<&RestrictedTracePlan>,
    order: usize,
) -> Result<Vec<TrialRecord>> {
    let mut out = Vec::with_capacity(cfg.trials);
    run_monte_carlo_streaming(cfg, h, plan, order, |r| {
        out.push(r.clone());
        Ok(())
    })?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Centering {
    EmpiricalMean,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentEntry {
    pub k: u32,
    pub empirical: f64,
    pub se: f64,
    pub target: f64,
    pub z_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub trials: usize,
    pub centering: Centering,
    pub entries: Vec<MomentEntry>,
}

impl MomentReport {
    pub fn passes(&self, z_threshold: f64) -> bool {
        self.entries.iter().all(|e| e.z_score.abs() <= z_threshold)
    }
}

/// Empirical `k`-th centered moment of `xs` around `center` (or the mean) and its
/// jackknife standard error.
pub fn centered_moment_with_se(xs: &[f64], k: u32, centering: Centering) -> Result<(f64, f64)> {
    let n = xs.len();
    if n < 2 {
        return Err(Error::TooFewSamples(format!("need ≥ 2 samples, got {n}")));
    }
    // shift by a pivot so that the power sums are well conditioned
    let pivot = match centering {
        Centering::EmpiricalMean => xs.iter().sum::<f64>() / n as f64,
        Centering::Fixed(c) => c,
    };
    let ys: Vec<f64> = xs.iter().map(|x| x - pivot).collect();
    let kk = k as usize;
    let mut sums = vec![0.0; kk + 1];
    for &y in &ys {
        let mut p = 1.0;
        for s in sums.iter_mut() {
            *s += p;
            p *= y;
        }
    }
    let estimate = |sums: &[f64], count: f64| -> f64 {
        let raw: Vec<f64> = sums.iter().map(|s| s / count).collect();
        match centering {
            Centering::Fixed(_) => raw[kk],
            Centering::EmpiricalMean => {
                // E[(y - m)^k] = Σ_i C(k, i) raw_i (-m)^{k-i}
                let m = raw[1];
                let mut total = 0.0;
                let mut binom = 1.0;
                for i in 0..=kk {
                    total += binom * raw[i] * (-m).powi((kk - i) as i32);
                    binom = binom * (kk - i) as f64 / (i + 1) as f64;
                }
                total
            }
        }
    };
    let full = estimate(&sums, n as f64);
    let mut loo = Vec::with_capacity(n);
    let mut reduced = vec![0.0; kk + 1];
    for &y in &ys {
        let mut p = 1.0;
        for (r, s) in reduced.iter_mut().zip(&sums) {
            *r = s - p;
            p *= y;
        }
        loo.push(estimate(&reduced, (n - 1) as f64));
    }
    let mean_loo = loo.iter().sum::<f64>() / n as f64;
    let var = loo.iter().map(|v| (v - mean_loo).powi(2)).sum::<f64>() * (n - 1) as f64 / n as f64;
    Ok((full, var.sqrt()))
}

/// Centered moments `k = 2..=k_max` of `X_N = ‖L_N‖₂² - center` against the limits of
/// `2 Σ_{i<j} (Z_{ij} - 1) Re H_{ij}`.
pub fn estimate_moments(records: &[TrialRecord], h: &OverlapMatrix, centering: Centering, k_max: u32) -> Result<MomentReport> {
    if records.len() < 2 {
        return Err(Error::TooFewSamples(format!("need ≥ 2 trial records, got {}", records.len())));
    }
    let xs: Vec<f64> = records.iter().map(|r| r.hs_norm_sq).collect();
    let weights = pair_weights(h);
    let mut entries = Vec::new();
    for k in 2..=k_max {
        let (empirical, se) = centered_moment_with_se(&xs, k, centering)?;
        let target = if k <= 4 { limit_moment(h, k)? } else { centered_poisson_combo_moment(&weights, k)? };
        let z_score = if se > 0.0 { (empirical - target) / se } else if empirical == target { 0.0 } else { f64::INFINITY };
        entries.push(MomentEntry { k, empirical, se, target, z_score });
    }
    Ok(MomentReport { trials: records.len(), centering, entries })
}
