use serde::{Deserialize, Serialize};

use crate::bounds::{
    covariance_admissible, denoise_bound, exp_error_bound, mc_sampling_threshold,
    powerlaw_error_bound, theorem1_bound, theorem2_bound, BoundReport, CovarianceMode,
    SamplingInputs, SamplingRegime,
};
use crate::error::{Error, Result};
use crate::estimators::{complete, denoise, errors, sample_covariance, zero_fill_rescale};
use crate::harness::config::{Basis, Experiment, ExperimentConfig, PSpec};
use crate::linalg::{
    eig_sym, spectral_norm, spectrum_stats_from_values, spikeness, SpectrumStats, SymmetricMatrix,
};
use crate::probe::{check_lemmas, LemmaCheck, SinAngles};
use crate::synth::{
    bernoulli_observe, goe_noise, haar_orthogonal, make_spectrum, mvn_samples, psd_from_spectrum,
    rademacher_diagonal, scaled_perturbation, RngStream, SpectrumKind,
};

/// Absolute slack on `measured_error_f ≤ bound_value`.
pub const BOUND_TOL: f64 = 1e-8;

/// Relative slack on the cutoff validity check.
pub const CUTOFF_RTOL: f64 = 1e-12;

/// Instance diagnostics; fields not relevant to an experiment are omitted.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Auxiliary {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stable_rank: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub effective_rank: Option<f64>,
    /// `‖Â − A‖₂` of the surrogate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perturbation_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m1: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m2: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alignment: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sin_angles: Option<SinAngles>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lemma_checks: Option<Vec<LemmaCheck>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// `C_mc` times the threshold expression, before clamping.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_unclamped: Option<f64>,
    /// The threshold expression without `C_mc`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_raw_expression: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_vacuous: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observed_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoff_valid: Option<bool>,
    /// `‖Â − A‖_F` of the full sample covariance.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_cov_error_f: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub admissibility_expression: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: u64,
    pub k: usize,
    pub measured_error_f: f64,
    pub measured_error_2: f64,
    pub tail_f: f64,
    pub tail_2: f64,
    /// `measured_error_f / tail_f`; absent when the tail vanishes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    pub bound_value: f64,
    pub bound_satisfied: bool,
    pub precondition_holds: bool,
    pub precondition_margin: f64,
    /// Set when the trial could not be evaluated; numeric fields are then zero.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    pub auxiliary: Auxiliary,
}

impl TrialRecord {
    pub(crate) fn flagged(trial_id: u64, k: usize, err: &Error) -> Self {
        TrialRecord {
            trial_id,
            k,
            measured_error_f: 0.0,
            measured_error_2: 0.0,
            tail_f: 0.0,
            tail_2: 0.0,
            ratio: None,
            bound_value: 0.0,
            bound_satisfied: false,
            precondition_holds: false,
            precondition_margin: 0.0,
            failure: Some(err.to_string()),
            auxiliary: Auxiliary::default(),
        }
    }
}

struct Measured {
    error_f: f64,
    error_2: f64,
}

struct Instance {
    spectrum: Vec<f64>,
    stats: SpectrumStats,
    a: SymmetricMatrix,
}

fn build_instance(cfg: &ExperimentConfig, k: usize, rng: &mut RngStream) -> Result<Instance> {
    let spectrum = make_spectrum(&cfg.spectrum_spec())?;
    let stats = spectrum_stats_from_values(&spectrum, k)?;
    let a = match cfg.basis {
        Basis::Identity => SymmetricMatrix::from_diag(&spectrum),
        Basis::Haar => psd_from_spectrum(&spectrum, &haar_orthogonal(cfg.n, rng)?)?,
    };
    Ok(Instance { spectrum, stats, a })
}

fn base_aux(stats: &SpectrumStats) -> Auxiliary {
    Auxiliary {
        gamma_k: stats.gamma_k.is_finite().then_some(stats.gamma_k),
        stable_rank: Some(stats.stable_rank),
        effective_rank: Some(stats.effective_rank),
        ..Default::default()
    }
}

fn finish(
    trial_id: u64,
    k: usize,
    stats: &SpectrumStats,
    m: Measured,
    bound: &BoundReport,
    auxiliary: Auxiliary,
) -> TrialRecord {
    TrialRecord {
        trial_id,
        k,
        measured_error_f: m.error_f,
        measured_error_2: m.error_2,
        tail_f: stats.tail_f,
        tail_2: stats.tail_2,
        ratio: (stats.tail_f > 0.0).then(|| m.error_f / stats.tail_f),
        bound_value: bound.value,
        bound_satisfied: m.error_f <= bound.value + BOUND_TOL,
        precondition_holds: bound.precondition_holds,
        precondition_margin: bound.precondition_margin,
        failure: None,
        auxiliary,
    }
}

fn truncation_errors(a_hat: &SymmetricMatrix, a: &SymmetricMatrix, k: usize) -> Result<Measured> {
    let a_hat_k = eig_sym(a_hat)?.truncate(k)?;
    let (error_2, error_f) = errors(&a_hat_k, a)?;
    Ok(Measured { error_f, error_2 })
}

/// Runs one trial on stream `trial_id` of the configured seed.
///
/// Configuration errors are returned; failures inside the trial are recorded
/// in [`TrialRecord::failure`].
pub fn run_trial(cfg: &ExperimentConfig, trial_id: u64) -> Result<TrialRecord> {
    cfg.validate()?;
    let k = cfg.resolve_k()?;
    Ok(evaluate(cfg, k, trial_id).unwrap_or_else(|e| TrialRecord::flagged(trial_id, k, &e)))
}

pub(crate) fn evaluate(cfg: &ExperimentConfig, k: usize, trial_id: u64) -> Result<TrialRecord> {
    let mut rng = RngStream::new(cfg.seed, trial_id);
    if cfg.experiment == Experiment::CorollaryRate && cfg.basis == Basis::Identity {
        return corollary_diagonal(cfg, k, trial_id, &mut rng);
    }
    let inst = build_instance(cfg, k, &mut rng)?;
    let stats = &inst.stats;
    let n = cfg.n;
    let eps = cfg.eps.unwrap_or(0.0);
    let mut aux = base_aux(stats);

    match cfg.experiment {
        Experiment::Theorem1 | Experiment::Theorem2 => {
            let (allowed, bound) = if cfg.experiment == Experiment::Theorem1 {
                (
                    eps * eps * stats.sigma_k_plus_1,
                    theorem1_bound(k, eps, stats.tail_f, stats.tail_2)?,
                )
            } else {
                if !(stats.gap > 0.0) {
                    return Err(Error::domain("spectral gap is zero"));
                }
                (eps * stats.gap, theorem2_bound(k, eps, stats.gap, stats.tail_f)?)
            };
            let e = scaled_perturbation(n, allowed, &mut rng)?;
            let measured_norm = spectral_norm(&e)?;
            let bound = bound.with_perturbation_check(allowed, measured_norm);
            let m = truncation_errors(&inst.a.add(&e), &inst.a, k)?;
            let env = crate::bounds::envelope(&inst.spectrum, k, eps)?;
            aux.perturbation_norm = Some(measured_norm);
            aux.m1 = Some(env.m1);
            aux.m2 = Some(env.m2);
            Ok(finish(trial_id, k, stats, m, &bound, aux))
        }
        Experiment::LemmaSuite => {
            let allowed = eps * eps * stats.sigma_k_plus_1;
            let e = scaled_perturbation(n, allowed, &mut rng)?;
            let a_hat = inst.a.add(&e);
            let report = check_lemmas(&inst.a, &a_hat, k, eps)?;
            let bound = theorem1_bound(k, eps, stats.tail_f, stats.tail_2)?
                .with_perturbation_check(allowed, report.perturbation_norm);
            let m = truncation_errors(&a_hat, &inst.a, k)?;
            let all_pass = report.all_pass();
            aux.perturbation_norm = Some(report.perturbation_norm);
            aux.m1 = Some(report.envelope.m1);
            aux.m2 = Some(report.envelope.m2);
            aux.alignment = Some(report.alignment);
            aux.sin_angles = Some(report.sin_angles);
            aux.lemma_checks = Some(report.checks);
            let mut rec = finish(trial_id, k, stats, m, &bound, aux);
            rec.bound_satisfied = rec.bound_satisfied && all_pass;
            Ok(rec)
        }
        Experiment::Completion => {
            let mu0 = spikeness(&inst.a)?;
            aux.mu0 = Some(mu0);
            let base_p = match cfg.p.expect("validated") {
                PSpec::Fixed(p) => p,
                PSpec::Rule(_) => {
                    let th = mc_sampling_threshold(
                        &SamplingInputs {
                            mu0,
                            norm_f: inst.a.frobenius_norm(),
                            sigma_k_plus_1: stats.sigma_k_plus_1,
                            gap: stats.gap,
                            n,
                            t: cfg.t.expect("validated"),
                            eps,
                            k,
                        },
                        cfg.regime.unwrap_or(SamplingRegime::Relative),
                        &cfg.constants,
                    )?;
                    aux.p_unclamped = Some(th.unclamped);
                    aux.p_raw_expression = Some(th.raw_expression);
                    aux.p_vacuous = Some(th.vacuous);
                    th.p
                }
            };
            let p = (base_p * cfg.p_multiplier.unwrap_or(1.0)).min(1.0);
            aux.p = Some(p);
            let obs = bernoulli_observe(&inst.a, p, &mut rng)?;
            let surrogate = zero_fill_rescale(&obs);
            let measured_norm = spectral_norm(&surrogate.sub(&inst.a))?;
            let res = complete(&obs, k)?;
            let (error_2, error_f) = errors(&res.a_hat_k, &inst.a)?;
            aux.observed_count = Some(res.observed_count);
            aux.perturbation_norm = Some(measured_norm);
            let bound = theorem1_bound(k, eps, stats.tail_f, stats.tail_2)?
                .with_perturbation_check(eps * eps * stats.sigma_k_plus_1, measured_norm);
            Ok(finish(trial_id, k, stats, Measured { error_f, error_2 }, &bound, aux))
        }
        Experiment::Denoising => {
            let nu = match (cfg.nu, cfg.nu_rel) {
                (Some(v), _) => v,
                (None, Some(r)) => r * stats.sigma_k_plus_1,
                (None, None) => unreachable!("validated"),
            };
            aux.nu = Some(nu);
            let e = goe_noise(n, nu, &mut rng)?;
            aux.perturbation_norm = Some(spectral_norm(&e)?);
            let est = denoise(&inst.a.add(&e), k)?;
            let (error_2, error_f) = errors(&est, &inst.a)?;
            let bound = denoise_bound(nu, stats.sigma_k_plus_1, k, stats.tail_f, &cfg.constants)?;
            Ok(finish(trial_id, k, stats, Measured { error_f, error_2 }, &bound, aux))
        }
        Experiment::Covariance => {
            let count = cfg.samples.expect("validated");
            let s = mvn_samples(&inst.a, count, &mut rng)?;
            let cov = sample_covariance(&s);
            let est = eig_sym(&cov)?.truncate(k)?;
            let (error_2, error_f) = errors(&est, &inst.a)?;
            let (full_2, full_f) = errors(&cov, &inst.a)?;
            aux.perturbation_norm = Some(full_2);
            aux.sample_cov_error_f = Some(full_f);
            let admissible = covariance_admissible(
                stats.effective_rank,
                eps,
                k,
                stats.gamma_k,
                count,
                CovarianceMode::Relative,
                &cfg.constants,
            )?;
            aux.admissibility_expression = Some(admissible.value);
            let mut bound = theorem1_bound(k, eps, stats.tail_f, stats.tail_2)?;
            bound.precondition_holds = admissible.precondition_holds;
            bound.precondition_margin = admissible.precondition_margin;
            Ok(finish(trial_id, k, stats, Measured { error_f, error_2 }, &bound, aux))
        }
        Experiment::CorollaryRate => {
            let delta = cfg.delta.expect("validated");
            let e = scaled_perturbation(n, delta, &mut rng)?;
            let m = truncation_errors(&inst.a.add(&e), &inst.a, k)?;
            corollary_record(cfg, k, trial_id, stats, m, aux)
        }
    }
}

fn corollary_record(
    cfg: &ExperimentConfig,
    k: usize,
    trial_id: u64,
    stats: &SpectrumStats,
    m: Measured,
    mut aux: Auxiliary,
) -> Result<TrialRecord> {
    let delta = cfg.delta.expect("validated");
    let (rate, required) = match cfg.spectrum {
        SpectrumKind::PowerLaw { beta } => (powerlaw_error_bound(delta, beta, cfg.n)?, delta / 16.0),
        SpectrumKind::Exponential { c } => (
            exp_error_bound(delta, c, cfg.n)?,
            delta * (1.0 / delta).ln(),
        ),
        SpectrumKind::Explicit(_) => unreachable!("validated"),
    };
    let valid = stats.sigma_k_plus_1 >= required * (1.0 - CUTOFF_RTOL);
    aux.delta = Some(delta);
    aux.cutoff_valid = Some(valid);
    let bound = BoundReport {
        name: "corollary_rate".into(),
        value: rate,
        precondition_holds: valid,
        precondition_margin: stats.sigma_k_plus_1 - required,
        inputs_echo: Default::default(),
    };
    Ok(finish(trial_id, k, stats, m, &bound, aux))
}

/// Diagonal `A` and `E = δ diag(±1)`: `Â_k` keeps the `k` largest entries of
/// `σ + E`, with ties going to the lower index as in the eigensolver.
fn corollary_diagonal(
    cfg: &ExperimentConfig,
    k: usize,
    trial_id: u64,
    rng: &mut RngStream,
) -> Result<TrialRecord> {
    let delta = cfg.delta.expect("validated");
    let spectrum = make_spectrum(&cfg.spectrum_spec())?;
    let stats = spectrum_stats_from_values(&spectrum, k)?;
    let e = rademacher_diagonal(cfg.n, delta, rng)?.diagonal();
    let perturbed: Vec<f64> = spectrum.iter().zip(&e).map(|(s, x)| s + x).collect();
    let mut order: Vec<usize> = (0..cfg.n).collect();
    order.sort_by(|&i, &j| perturbed[j].total_cmp(&perturbed[i]).then(i.cmp(&j)));
    let mut kept = vec![false; cfg.n];
    for &i in &order[..k] {
        kept[i] = true;
    }
    let mut sq = 0.0;
    let mut mx: f64 = 0.0;
    for i in 0..cfg.n {
        let r = if kept[i] { e[i] } else { -spectrum[i] };
        sq += r * r;
        mx = mx.max(r.abs());
    }
    let m = Measured {
        error_f: sq.sqrt(),
        error_2: mx,
    };
    let mut aux = base_aux(&stats);
    aux.perturbation_norm = Some(delta);
    corollary_record(cfg, k, trial_id, &stats, m, aux)
}
