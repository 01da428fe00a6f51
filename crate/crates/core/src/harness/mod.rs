//! Seeded Monte-Carlo experiments: instance generation, per-trial
//! measurement against the matching bound, and aggregation.
//!
//! Trial `i` draws from stream `i` of the configured seed, so a report does not
//! depend on how many worker threads ran or in which order trials finished.

mod config;
mod trial;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synth::{SpectrumKind, GENERATOR_VERSION};

pub use config::{Basis, Experiment, ExperimentConfig, KRule, KSpec, PRule, PSpec};
pub use trial::{run_trial, Auxiliary, TrialRecord, BOUND_TOL, CUTOFF_RTOL};

/// Type-7 (linear interpolation) sample quantiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

impl Quantiles {
    pub fn of(values: &[f64]) -> Option<Quantiles> {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        Some(Quantiles {
            min: v[0],
            q25: quantile_sorted(&v, 0.25),
            median: quantile_sorted(&v, 0.5),
            q75: quantile_sorted(&v, 0.75),
            max: v[v.len() - 1],
        })
    }
}

fn quantile_sorted(v: &[f64], q: f64) -> f64 {
    let h = (v.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub trials: usize,
    /// Trials that ran to completion.
    pub evaluated: usize,
    pub precondition_count: usize,
    /// Trials with the precondition holding and the bound satisfied.
    pub pass_count: usize,
    /// `pass_count / precondition_count`; absent when no trial met the precondition.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pass_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<Quantiles>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_f: Option<Quantiles>,
}

impl Aggregates {
    pub fn from_records(records: &[TrialRecord]) -> Aggregates {
        let ok: Vec<&TrialRecord> = records.iter().filter(|r| r.failure.is_none()).collect();
        let precondition_count = ok.iter().filter(|r| r.precondition_holds).count();
        let pass_count = ok
            .iter()
            .filter(|r| r.precondition_holds && r.bound_satisfied)
            .count();
        let ratios: Vec<f64> = ok.iter().filter_map(|r| r.ratio).collect();
        let errs: Vec<f64> = ok.iter().map(|r| r.measured_error_f).collect();
        Aggregates {
            trials: records.len(),
            evaluated: ok.len(),
            precondition_count,
            pass_count,
            pass_rate: (precondition_count > 0).then(|| pass_count as f64 / precondition_count as f64),
            ratio: Quantiles::of(&ratios),
            error_f: Quantiles::of(&errs),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub tool_version: String,
    pub generator: String,
    pub config: ExperimentConfig,
    pub k: usize,
    pub records: Vec<TrialRecord>,
    pub aggregates: Aggregates,
    /// Wall-clock seconds; kept out of serialized output so reruns compare equal.
    #[serde(skip)]
    pub runtime_secs: f64,
}

/// Runs `cfg.trials` trials on streams `0..trials` in parallel.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let k = cfg.resolve_k()?;
    let start = Instant::now();
    let records: Vec<TrialRecord> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|id| trial::evaluate(cfg, k, id).unwrap_or_else(|e| TrialRecord::flagged(id, k, &e)))
        .collect();
    let aggregates = Aggregates::from_records(&records);
    Ok(ExperimentReport {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        generator: GENERATOR_VERSION.to_string(),
        config: cfg.clone(),
        k,
        records,
        aggregates,
        runtime_secs: start.elapsed().as_secs_f64(),
    })
}

/// Least-squares `(slope, intercept)` of `log y` on `log x`.
pub fn rate_regression(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 3 {
        return Err(Error::arg("points", "need at least 3 points"));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0) || !x.is_finite() || !y.is_finite()) {
        return Err(Error::arg("points", "coordinates must be positive and finite"));
    }
    let m = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::arg("points", "x values are all equal"));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// `claimed − 2 sqrt(claimed (1 − claimed) / trials)`.
pub fn binomial_floor(claimed: f64, trials: usize) -> f64 {
    claimed - 2.0 * (claimed * (1.0 - claimed) / trials as f64).sqrt()
}

/// Deterministic single-trial configs over the verification grid: `n` in
/// `20..=60`, power-law `β ∈ {0.75, 1, 2}`, exponential `c ∈ {0.3, 1}`,
/// `k ∈ 1..=10`, `ε ∈ {0.05, 0.1, 0.25}`, Haar bases.
pub fn instance_grid(experiment: Experiment, count: usize, seed: u64) -> Vec<ExperimentConfig> {
    let spectra = [
        SpectrumKind::PowerLaw { beta: 0.75 },
        SpectrumKind::PowerLaw { beta: 1.0 },
        SpectrumKind::PowerLaw { beta: 2.0 },
        SpectrumKind::Exponential { c: 0.3 },
        SpectrumKind::Exponential { c: 1.0 },
    ];
    let epss = [0.05, 0.1, 0.25];
    (0..count)
        .map(|i| ExperimentConfig {
            experiment,
            n: 20 + (i * 17) % 41,
            spectrum: spectra[i % spectra.len()].clone(),
            basis: Basis::Haar,
            k: KSpec::Fixed(1 + (i / 15) % 10),
            eps: Some(epss[(i / 5) % epss.len()]),
            nu: None,
            nu_rel: None,
            p: None,
            t: None,
            regime: None,
            p_multiplier: None,
            samples: None,
            delta: None,
            trials: 1,
            seed: seed.wrapping_add(i as u64),
            constants: Default::default(),
        })
        .collect()
}
