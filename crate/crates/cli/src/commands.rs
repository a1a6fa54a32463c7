use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use twisted_core::assembly::{assemble_all, overlap_matrix, quadrature_nodes, truncation_tail_bound};
use twisted_core::export::{fmt_f64, write_csv, write_json, write_matrix_with_sidecar, Provenance};
use twisted_core::freegroup::{derive_seed, sample_homomorphism};
use twisted_core::limit::{
    arcsine_count, arcsine_moment, arcsine_moment_closed, cayley_ball_matrix, gram_element, tau_moment, tau_moments,
    z0_scalar, TauMomentRecord, MAX_BALL_DIMENSION, PRUNING_THRESHOLD, SUPPORT_END,
};
use twisted_core::stats::{estimate_moments, run_monte_carlo_streaming, Centering, MonteCarloConfig};
use twisted_core::twisted::{
    build_twisted_matrix, measure_trace_norm_constant, weyl_threshold, CompressedBasis, RestrictedTracePlan,
};
use twisted_core::{BranchSystem, OverlapMatrix, Result, SpectrumReport, TruncatedOperator};

use crate::config::{ExperimentConfig, Kind};

/// Largest `N·L` handled by dense SVD in `simulate`; larger sizes use the compressed
/// factorization with a certified error radius.
const DENSE_LIMIT: usize = 2560;
/// Size and sample count for measuring `C₃`.
const C3_SIZE: usize = 4;
const C3_SAMPLES: usize = 8;
const CAYLEY_MAX_RADIUS: usize = 3;
const HISTOGRAM_BINS: usize = 50;
/// Relative singular-value cutoff for the common subspaces of the compressed path.
const COMPRESSION_TOL: f64 = 1e-9;

pub fn run(cfg: ExperimentConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out)?;
    let prov = Provenance::new(cfg.hash()?, cfg.seed, cfg.kind.to_string());
    info!("{} → {} (config {})", cfg.kind, cfg.out.display(), &prov.config_hash[..12]);
    match cfg.kind {
        Kind::Validate => validate(&cfg, &prov),
        Kind::Assemble => assemble(&cfg, &prov),
        Kind::Simulate => simulate(&cfg, &prov),
        Kind::Moments => moments(&cfg, &prov),
        Kind::Limit => limit(&cfg, &prov),
        Kind::Example6 => example6(&cfg, &prov),
    }
}

fn validated_system(cfg: &ExperimentConfig) -> Result<BranchSystem> {
    let sys = cfg.system.clone().validated(cfg.boundary_samples)?;
    if let Some(report) = sys.validation() {
        for w in &report.warnings {
            warn!("{w}");
        }
    }
    Ok(sys)
}

struct Prepared {
    ops: Vec<TruncatedOperator>,
    h: OverlapMatrix,
}

fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    let sys = validated_system(cfg)?;
    let quad = quadrature_nodes(sys.domain(), cfg.quadrature.n_radial, cfg.quadrature.n_angular)?;
    let ops = assemble_all(&sys, cfg.order, &quad)?;
    for op in &ops {
        for w in op.warnings() {
            warn!("{w}");
        }
    }
    let h = overlap_matrix(&sys, &quad)?;
    Ok(Prepared { ops, h })
}

fn path(cfg: &ExperimentConfig, name: impl AsRef<Path>) -> PathBuf {
    cfg.out.join(name)
}

fn validate(cfg: &ExperimentConfig, prov: &Provenance) -> Result<()> {
    let sys = validated_system(cfg)?;
    let report = sys.require_validated()?;
    write_json(&path(cfg, "validation.json"), prov, report)?;
    println!("margin {} rho {}", fmt_f64(report.margin), fmt_f64(report.rho));
    Ok(())
}

fn assemble(cfg: &ExperimentConfig, prov: &Provenance) -> Result<()> {
    let p = prepare(cfg)?;
    for (j, op) in p.ops.iter().enumerate() {
        let meta = json!({
            "branch": j + 1,
            "L": op.order(),
            "rho": op.rho(),
            "tail_bound": truncation_tail_bound(op),
            "tail_constant": op.tail_constant(),
            "quadrature": { "n_radial": cfg.quadrature.n_radial, "n_angular": cfg.quadrature.n_angular },
            "warnings": op.warnings(),
        });
        write_matrix_with_sidecar(&path(cfg, format!("M_{}.ttmx", j + 1)), op.entries(), prov, &meta)?;
    }
    let d = p.h.rank();
    let rows: Vec<Vec<String>> = (0..d)
        .flat_map(|i| (0..d).map(move |j| (i, j)))
        .map(|(i, j)| {
            let v = p.h.get(i, j);
            vec![(i + 1).to_string(), (j + 1).to_string(), fmt_f64(v.re), fmt_f64(v.im)]
        })
        .collect();
    write_csv(&path(cfg, "H.csv"), prov, "i,j,re,im", &rows)?;
    println!("wrote {} operators and H ({d}×{d})", p.ops.len());
    Ok(())
}

#[derive(Serialize)]
struct SizeSummary {
    #[serde(rename = "N")]
    n: usize,
    trials: usize,
    method: &'static str,
    /// Smallest and largest lower/upper bracket for `𝒩(r₀)/N` over trials.
    ratio_lo_min: f64,
    ratio_hi_max: f64,
    ratio_mean: f64,
    max_error_radius: f64,
    violations: Option<usize>,
}

#[derive(Serialize)]
struct WeylSummary {
    l1: f64,
    c3_measured: f64,
    r0: f64,
    threshold: f64,
    window: [f64; 2],
    sizes: Vec<SizeSummary>,
}

fn trial_seed(master: u64, n: usize, t: usize) -> u64 {
    derive_seed(derive_seed(master, n as u64), t as u64)
}

fn simulate(cfg: &ExperimentConfig, prov: &Provenance) -> Result<()> {
    let p = prepare(cfg)?;
    let l1: f64 = (0..p.h.rank()).map(|j| p.h.get(j, j).re).sum();
    let c3 = measure_trace_norm_constant(&p.ops, C3_SIZE, C3_SAMPLES, cfg.seed)?;
    let threshold = weyl_threshold(c3, l1)?;
    let mut compressed: Option<CompressedBasis> = None;
    let mut sizes = Vec::new();
    let mut window = [0.0, f64::INFINITY];

    for (idx, &n) in cfg.sizes.iter().enumerate() {
        let dense = n * cfg.order <= DENSE_LIMIT;
        if !dense && compressed.is_none() {
            compressed = Some(CompressedBasis::new(&p.ops, COMPRESSION_TOL)?);
        }
        // (csv rows, lo, hi, error radius) per trial
        let per_trial: Vec<(Vec<u8>, usize, usize, f64)> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| -> Result<_> {
                let seed = trial_seed(cfg.seed, n, t);
                let hom = sample_homomorphism(p.ops.len(), n, seed)?;
                let mut buf = Vec::new();
                if dense {
                    let report = SpectrumReport::compute(&build_twisted_matrix(&p.ops, &hom)?, true)?;
                    report.write_csv_rows(&mut buf)?;
                    let count = report.singular_values.iter().filter(|&&s| s >= threshold).count();
                    Ok((buf, count, count, 0.0))
                } else {
                    let spec = compressed.as_ref().expect("built above").singular_values(&hom)?;
                    for (i, s) in spec.values.iter().enumerate() {
                        writeln!(buf, "{seed},{n},{},{i},{},{}", cfg.order, fmt_f64(*s), fmt_f64(spec.error))?;
                    }
                    let (lo, hi) = spec.count_bracket(threshold);
                    Ok((buf, lo, hi, spec.error))
                }
            })
            .collect::<Result<_>>()?;

        let file = path(cfg, format!("spectra_N{n}.csv"));
        let mut out = BufWriter::new(File::create(&file)?);
        prov.write_csv_header(&mut out)?;
        let header = if dense { SpectrumReport::csv_header(true) } else { "seed,N,L,index,singular_value,error_radius" };
        writeln!(out, "{header}")?;
        for (rows, ..) in &per_trial {
            out.write_all(rows)?;
        }
        out.flush()?;

        let nf = n as f64;
        let lo_min = per_trial.iter().map(|t| t.1 as f64 / nf).fold(f64::INFINITY, f64::min);
        let hi_max = per_trial.iter().map(|t| t.2 as f64 / nf).fold(0.0, f64::max);
        let mean = per_trial.iter().map(|t| (t.1 + t.2) as f64 / (2.0 * nf)).sum::<f64>() / per_trial.len() as f64;
        let violations = if idx == 0 {
            window = [0.5 * lo_min, 2.0 * hi_max];
            None
        } else {
            Some(per_trial.iter().filter(|t| (t.1 as f64 / nf) < window[0] || (t.2 as f64 / nf) > window[1]).count())
        };
        info!("N = {n}: 𝒩(r₀)/N ∈ [{lo_min:.4}, {hi_max:.4}]");
        sizes.push(SizeSummary {
            n,
            trials: cfg.trials,
            method: if dense { "dense" } else { "compressed" },
            ratio_lo_min: lo_min,
            ratio_hi_max: hi_max,
            ratio_mean: mean,
            max_error_radius: per_trial.iter().map(|t| t.3).fold(0.0, f64::max),
            violations,
        });
    }
    let summary = WeylSummary { l1, c3_measured: c3, r0: 1.0 / threshold, threshold, window, sizes };
    write_json(&path(cfg, "weyl_summary.json"), prov, &summary)?;
    println!("r0 {} window [{}, {}]", fmt_f64(summary.r0), fmt_f64(window[0]), fmt_f64(window[1]));
    Ok(())
}

fn moments(cfg: &ExperimentConfig, prov: &Provenance) -> Result<()> {
    let p = prepare(cfg)?;
    let plan = if cfg.trace_powers {
        let x = gram_element(&p.ops)?;
        Some(RestrictedTracePlan::new(&x.powers(cfg.max_power)?, p.h.rank())?)
    } else {
        None
    };
    let l1: f64 = (0..p.h.rank()).map(|j| p.h.get(j, j).re).sum();
    for &n in &cfg.sizes {
        let mc = MonteCarloConfig { n, trials: cfg.trials, master_seed: derive_seed(cfg.seed, n as u64), identity_hom: false };
        let mut out = BufWriter::new(File::create(path(cfg, format!("records_N{n}.jsonl")))?);
        serde_json::to_writer(&mut out, &json!({ "provenance": prov }))?;
        writeln!(out)?;
        let mut records = Vec::with_capacity(cfg.trials);
        run_monte_carlo_streaming(&mc, &p.h, plan.as_ref(), cfg.order, |r| {
            serde_json::to_writer(&mut out, r)?;
            writeln!(out)?;
            records.push(r.clone());
            Ok(())
        })?;
        out.flush()?;

        let report = estimate_moments(&records, &p.h, Centering::EmpiricalMean, 4)?;
        let xs: Vec<f64> = records.iter().map(|r| r.hs_norm_sq / n as f64).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let se = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / ((xs.len() - 1) * xs.len()) as f64).sqrt();
        write_json(
            &path(cfg, format!("moment_report_N{n}.json")),
            prov,
            &json!({ "N": n, "report": report, "hs_norm_sq_over_n": { "mean": mean, "se": se, "l1": l1 } }),
        )?;
        let rows: Vec<Vec<String>> = report
            .entries
            .iter()
            .map(|e| vec![e.k.to_string(), fmt_f64(e.empirical), fmt_f64(e.se), fmt_f64(e.target), fmt_f64(e.z_score)])
            .collect();
        write_csv(&path(cfg, format!("moments_N{n}.csv")), prov, "k,empirical,se,target,z_score", &rows)?;
        for e in &report.entries {
            println!("N={n} k={} empirical {} target {} z {:+.2}", e.k, fmt_f64(e.empirical), fmt_f64(e.target), e.z_score);
        }
    }
    Ok(())
}

fn limit(cfg: &ExperimentConfig, prov: &Provenance) -> Result<()> {
    let p = prepare(cfg)?;
    let x = gram_element(&p.ops)?;
    let seq = tau_moments(&x, cfg.max_power)?;
    let records: Vec<TauMomentRecord> = seq
        .moments
        .iter()
        .enumerate()
        .map(|(i, &m)| TauMomentRecord {
            p: i as u32 + 1,
            tau_moment: m,
            method: "word_expansion".into(),
            pruning_threshold: PRUNING_THRESHOLD,
            remainder_bound: 0.0,
        })
        .collect();
    let hankel = seq.hankel_positive(1e-10);
    write_json(&path(cfg, "tau_moments.json"), prov, &json!({ "moments": records, "hankel_positive": hankel }))?;
    for r in &records {
        println!("tau(X^{}) = {}", r.p, fmt_f64(r.tau_moment));
    }

    // the largest Cayley ball whose compression fits the dimension cap
    let d = p.h.rank();
    let mut radius = 0;
    for r in 1..=CAYLEY_MAX_RADIUS {
        let mut size = 1usize;
        let mut sphere = 2 * d;
        for _ in 0..r {
            size += sphere;
            sphere *= (2 * d).saturating_sub(1).max(1);
        }
        if size * cfg.order <= MAX_BALL_DIMENSION {
            radius = r;
        }
    }
    if radius == 0 {
        warn!("Cayley ball of radius 1 exceeds the dimension cap; histogram skipped");
        return Ok(());
    }
    let ball = cayley_ball_matrix(&x, d, radius)?;
    let ev = ball.eigenvalues()?;
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    let width = ((hi - lo) / HISTOGRAM_BINS as f64).max(f64::MIN_POSITIVE);
    let mut counts = vec![0usize; HISTOGRAM_BINS];
    for e in &ev {
        let b = (((e - lo) / width) as usize).min(HISTOGRAM_BINS - 1);
        counts[b] += 1;
    }
    let rows: Vec<Vec<String>> = counts
        .iter()
        .enumerate()
        .map(|(b, c)| {
            let a = lo + b as f64 * width;
            vec![radius.to_string(), fmt_f64(a), fmt_f64(a + width), c.to_string()]
        })
        .collect();
    write_csv(&path(cfg, "cayley_histogram.csv"), prov, "radius,bin_lo,bin_hi,count", &rows)?;
    Ok(())
}

fn example6(cfg: &ExperimentConfig, prov: &Provenance) -> Result<()> {
    let z = z0_scalar();
    let top = cfg.max_power.max(6);
    let rows: Vec<Vec<String>> = (1..=top)
        .map(|p| -> Result<Vec<String>> {
            Ok(vec![
                p.to_string(),
                fmt_f64(tau_moment(&z, p)?),
                fmt_f64(arcsine_moment(p)?),
                fmt_f64(arcsine_moment_closed(p)),
            ])
        })
        .collect::<Result<_>>()?;
    write_csv(&path(cfg, "example6_moments.csv"), prov, "p,tau_moment,arcsine_moment,closed_form", &rows)?;

    let points = [0.0, 1.0, 2.0, 4.0, 6.0, 8.0, 12.0, SUPPORT_END];
    let mut rows = Vec::new();
    for (i, &a) in points.iter().enumerate() {
        for &b in &points[i + 1..] {
            rows.push(vec![fmt_f64(a), fmt_f64(b), fmt_f64(arcsine_count(a, b)?)]);
        }
    }
    write_csv(&path(cfg, "example6_counts.csv"), prov, "a,b,arcsine_count", &rows)?;
    println!("arcsine_count(1, 12) = {}", fmt_f64(arcsine_count(1.0, 12.0)?));
    Ok(())
}
