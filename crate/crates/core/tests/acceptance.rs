//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use lowrank::bounds::Constants;
use lowrank::estimators::{covariance_reduced, errors, sample_covariance};
use lowrank::harness::{
    binomial_floor, instance_grid, rate_regression, run_experiment, Basis, Experiment,
    ExperimentConfig, KRule, KSpec, PRule, PSpec, Quantiles, TrialRecord,
};
use lowrank::io::{render_report, Report, ReportFormat};
use lowrank::linalg::{eig_sym, spectral_norm, SymmetricMatrix};
use lowrank::bounds::SamplingRegime;
use lowrank::synth::{
    goe_noise, haar_orthogonal, make_spectrum, mvn_samples, psd_from_spectrum, scaled_perturbation,
    RngStream, SpectrumKind, SpectrumSpec,
};
use rayon::prelude::*;

type Outcome = Result<String, String>;

const SEED: u64 = 20_240_601;

fn base(experiment: Experiment, n: usize, spectrum: SpectrumKind, k: KSpec, trials: usize, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        experiment,
        n,
        spectrum,
        basis: Basis::Haar,
        k,
        eps: None,
        nu: None,
        nu_rel: None,
        p: None,
        t: None,
        regime: None,
        p_multiplier: None,
        samples: None,
        delta: None,
        trials,
        seed,
        constants: Constants::default(),
    }
}

fn median(values: &[f64]) -> f64 {
    Quantiles::of(values).map_or(f64::NAN, |q| q.median)
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn classical_lemmas() -> Outcome {
    let worst = (0..1000u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(SEED, i);
            let n = 2 + (i as usize % 29);
            let m = 1 + (i as usize * 7) % n;
            let x = random_symmetric(n, &mut rng);
            let y = random_symmetric(n, &mut rng).scaled(0.5);
            let p = random_orthonormal(n, m, &mut rng);
            let psd = random_psd(n, &mut rng);
            let near = psd.add(&random_symmetric(n, &mut rng).scaled(0.05));
            [
                weyl_slack(&x, &y).min(weyl_perturbation_slack(&x, &y)),
                poincare_slack(&x, &p),
                // Expressed as a slack so that all four compare against the same floor.
                1e-8 - pythagorean_defect(&x, &p),
                davis_kahan_slack(&psd, &near).unwrap_or(f64::INFINITY),
            ]
        })
        .reduce(|| [f64::INFINITY; 4], |a, b| [a[0].min(b[0]), a[1].min(b[1]), a[2].min(b[2]), a[3].min(b[3])]);
    let detail = format!(
        "min slack weyl {:.2e}, poincare {:.2e}, pythagorean {:.2e}, davis-kahan {:.2e}",
        worst[0], worst[1], worst[2], worst[3]
    );
    check(worst.iter().all(|&s| s >= -1e-9), detail)
}

fn eckart_young() -> Outcome {
    let worst = (0..50u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(SEED + 2, i);
            let n = 2 + (i as usize % 7);
            let k = 1 + (i as usize / 7) % (n - 1);
            let a = random_psd(n, &mut rng);
            eckart_young_margin(&a, k, 500, &mut rng)
        })
        .reduce(|| f64::INFINITY, f64::min);
    check(worst >= -1e-10, format!("min margin over 25000 candidates {worst:.3e}"))
}

fn run_grid(experiment: Experiment, seed: u64) -> Vec<TrialRecord> {
    instance_grid(experiment, 200, seed)
        .par_iter()
        .map(|c| {
            let r = run_experiment(c).expect("grid configs are valid");
            r.records.into_iter().next().expect("one trial")
        })
        .collect()
}

fn end_to_end(experiment: Experiment, seed: u64) -> Outcome {
    let recs = run_grid(experiment, seed);
    let failed = recs.iter().filter(|r| r.failure.is_some()).count();
    let evaluated: Vec<&TrialRecord> = recs.iter().filter(|r| r.failure.is_none()).collect();
    let held = evaluated.iter().filter(|r| r.precondition_holds).count();
    let passed = evaluated
        .iter()
        .filter(|r| r.precondition_holds && r.bound_satisfied)
        .count();
    let worst = evaluated
        .iter()
        .map(|r| r.measured_error_f / r.bound_value)
        .fold(0.0f64, f64::max);
    check(
        failed == 0 && held == evaluated.len() && passed == evaluated.len(),
        format!(
            "{passed}/{} instances within bound, {failed} not evaluated, worst error/bound {worst:.3}",
            evaluated.len()
        ),
    )
}

fn lemma_suite() -> Outcome {
    let recs = run_grid(Experiment::LemmaSuite, SEED + 5);
    let mut bad = Vec::new();
    let mut min_slack = f64::INFINITY;
    for r in &recs {
        if r.failure.is_some() || !r.precondition_holds {
            bad.push(format!("trial seed {}: not evaluated", r.trial_id));
            continue;
        }
        for c in r.auxiliary.lemma_checks.as_deref().unwrap_or(&[]) {
            min_slack = min_slack.min(c.slack);
            if c.status != lowrank::probe::CheckStatus::Pass {
                bad.push(format!("{} slack {:.2e}", c.name, c.slack));
            }
        }
    }

    // Random search over subspaces of the envelope band on small instances.
    let excess = (0..12u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(SEED + 55, i);
            let n = 5 + (i as usize % 4);
            let k = 2 + (i as usize % 3);
            let spectrum = clustered_spectrum(n, k, &mut rng);
            let a = psd_from_spectrum(&spectrum, &haar_orthogonal(n, &mut rng).unwrap()).unwrap();
            let a_hat = a.add(&scaled_perturbation(n, 0.05 + 0.05 * i as f64, &mut rng).unwrap());
            w_oracle_excess(&a, &a_hat, k, 0.25, 10_000, &mut rng)
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    check(
        bad.is_empty() && excess <= 1e-8,
        format!(
            "{} instances, min check slack {min_slack:.2e}, {} failing checks, oracle excess {excess:.2e}",
            recs.len(),
            bad.len()
        ),
    )
}

fn corollary_rate() -> Outcome {
    let deltas = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
    let mut points = Vec::new();
    let mut invalid = 0;
    let mut ks = Vec::new();
    for (i, &delta) in deltas.iter().enumerate() {
        let mut c = base(
            Experiment::CorollaryRate,
            4000,
            SpectrumKind::PowerLaw { beta: 1.0 },
            KSpec::Rule(KRule::Cutoff),
            5,
            SEED + 6 + i as u64,
        );
        c.basis = Basis::Identity;
        c.delta = Some(delta);
        let r = run_experiment(&c).map_err(|e| e.to_string())?;
        invalid += r
            .records
            .iter()
            .filter(|x| x.failure.is_some() || x.auxiliary.cutoff_valid != Some(true))
            .count();
        let errs: Vec<f64> = r.records.iter().map(|x| x.measured_error_f).collect();
        points.push((delta, median(&errs)));
        ks.push(r.k);
    }
    let (slope, _) = rate_regression(&points).map_err(|e| e.to_string())?;
    check(
        (0.35..=0.65).contains(&slope) && invalid == 0,
        format!("slope {slope:.3} (target 0.5 +- 0.15), k = {ks:?}, {invalid} points failing the cutoff check"),
    )
}

fn completion() -> Outcome {
    let make = |p: PSpec, mult: Option<f64>| {
        let mut c = base(
            Experiment::Completion,
            400,
            SpectrumKind::Exponential { c: 0.5 },
            KSpec::Fixed(3),
            20,
            SEED + 7,
        );
        c.eps = Some(0.25);
        c.p = Some(p);
        if matches!(p, PSpec::Rule(_)) {
            c.t = Some(0.05);
            c.regime = Some(SamplingRegime::Relative);
        }
        c.p_multiplier = mult;
        c
    };
    let med = |c: &ExperimentConfig| -> Result<(f64, f64, bool), String> {
        let r = run_experiment(c).map_err(|e| e.to_string())?;
        let ratios: Vec<f64> = r.records.iter().filter_map(|x| x.ratio).collect();
        let a = &r.records[0].auxiliary;
        Ok((median(&ratios), a.p.unwrap_or(f64::NAN), a.p_vacuous.unwrap_or(false)))
    };
    let rule = PSpec::Rule(PRule::Threshold);
    let (m1, p1, vacuous) = med(&make(rule, None))?;
    let (m2, _, _) = med(&make(rule, Some(2.0)))?;
    let (m4, _, _) = med(&make(rule, Some(4.0)))?;
    let tol = 1e-12;
    let threshold_ok = m1 <= 2.0 && m2 <= m1 + tol && m4 <= m2 + tol;

    let fixed: Vec<f64> = [0.25, 0.5, 1.0]
        .iter()
        .map(|&p| med(&make(PSpec::Fixed(p), None)).map(|x| x.0))
        .collect::<Result<_, _>>()?;
    let fixed_ok = fixed[1] <= fixed[0] + tol && fixed[2] <= fixed[1] + tol;
    check(
        threshold_ok && fixed_ok,
        format!(
            "threshold p = {p1:.3} (vacuous: {vacuous}), median ratio {m1:.4} / {m2:.4} / {m4:.4} at x1/x2/x4; \
             fixed p 0.25/0.5/1: {:.3} / {:.3} / {:.3}",
            fixed[0], fixed[1], fixed[2]
        ),
    )
}

fn denoising() -> Outcome {
    let floor = binomial_floor(0.8, 20);
    let mut parts = Vec::new();
    let mut ok = true;
    for (i, k) in [2usize, 5, 10].into_iter().enumerate() {
        let mut c = base(
            Experiment::Denoising,
            500,
            SpectrumKind::PowerLaw { beta: 1.0 },
            KSpec::Fixed(k),
            20,
            SEED + 8 + i as u64,
        );
        c.nu_rel = Some(0.1);
        let r = run_experiment(&c).map_err(|e| e.to_string())?;
        let rate = r.aggregates.pass_rate.unwrap_or(0.0);
        ok &= r.aggregates.precondition_count == 20 && rate >= floor;
        parts.push(format!("k={k}: {}/{}", r.aggregates.pass_count, r.aggregates.precondition_count));
    }
    check(ok, format!("{} (floor {floor:.3})", parts.join(", ")))
}

/// Rank minimizing `‖S_k − A‖_F` given the truth, and the reduced estimate at that rank.
fn oracle_rank(s: &SymmetricMatrix, a: &SymmetricMatrix) -> usize {
    let d = eig_sym(s).unwrap();
    let n = a.n();
    let u = d.basis();
    let au = a.as_matrix().matmul(u);
    // ‖S_k − A‖² = ‖A‖² − 2 Σ λ_i u_iᵀ A u_i + Σ λ_i²
    let mut acc = a.frobenius_norm().powi(2);
    let mut best = (f64::INFINITY, 1);
    for i in 0..n - 1 {
        let l = d.eigenvalues()[i];
        let quad: f64 = (0..n).map(|r| u[(r, i)] * au[(r, i)]).sum();
        acc += l * l - 2.0 * l * quad;
        if acc < best.0 {
            best = (acc, i + 1);
        }
    }
    best.1
}

fn covariance() -> Outcome {
    let n = 200;
    let spectrum = make_spectrum(&SpectrumSpec {
        kind: SpectrumKind::Exponential { c: 0.5 },
        n,
    })
    .unwrap();
    let mut medians = Vec::new();
    let mut wins_at_5n = 0;
    let mut best_gain = f64::NEG_INFINITY;
    for mult in [1usize, 2, 5, 10] {
        let count = mult * n;
        let trials: Vec<(f64, f64, usize)> = (0..20u64)
            .into_par_iter()
            .map(|t| {
                let mut rng = RngStream::new(SEED + 9, (mult as u64) * 1000 + t);
                let a = psd_from_spectrum(&spectrum, &haar_orthogonal(n, &mut rng).unwrap()).unwrap();
                let s = mvn_samples(&a, count, &mut rng).unwrap();
                let full = sample_covariance(&s);
                let k = oracle_rank(&full, &a);
                let reduced = errors(&covariance_reduced(&s, k).unwrap(), &a).unwrap().1;
                (reduced, errors(&full, &a).unwrap().1, k)
            })
            .collect();
        let red: Vec<f64> = trials.iter().map(|x| x.0).collect();
        medians.push(median(&red));
        if mult == 5 {
            wins_at_5n = trials.iter().filter(|x| x.0 < x.1).count();
            best_gain = trials.iter().map(|x| (x.1 - x.0) / x.1).fold(f64::NEG_INFINITY, f64::max);
        }
    }
    let monotone = medians.windows(2).all(|w| w[1] <= w[0]);
    check(
        monotone && wins_at_5n >= 18,
        format!(
            "median error by N = n,2n,5n,10n: {:.4} / {:.4} / {:.4} / {:.4}; reduced beats full in {wins_at_5n}/20 at 5n, largest relative gain {best_gain:.1e}",
            medians[0], medians[1], medians[2], medians[3]
        ),
    )
}

fn goe_edge() -> Outcome {
    let (n, nu) = (500, 0.3);
    let ratios: Vec<f64> = (0..20u64)
        .into_par_iter()
        .map(|i| spectral_norm(&goe_noise(n, nu, &mut RngStream::new(SEED + 10, i)).unwrap()).unwrap() / nu)
        .collect();
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    check((1.8..=2.1).contains(&mean), format!("mean ||E||/nu = {mean:.4}"))
}

fn determinism() -> Outcome {
    let mut configs = vec![instance_grid(Experiment::Theorem1, 1, SEED)[0].clone()];
    let mut lemma = instance_grid(Experiment::LemmaSuite, 1, SEED)[0].clone();
    lemma.trials = 3;
    configs.push(lemma);
    let mut comp = base(Experiment::Completion, 60, SpectrumKind::Exponential { c: 0.5 }, KSpec::Fixed(3), 4, SEED);
    comp.eps = Some(0.25);
    comp.p = Some(PSpec::Fixed(0.6));
    configs.push(comp);
    let mut den = base(Experiment::Denoising, 60, SpectrumKind::PowerLaw { beta: 1.0 }, KSpec::Fixed(4), 4, SEED);
    den.nu_rel = Some(0.1);
    configs.push(den);
    let mut cov = base(Experiment::Covariance, 40, SpectrumKind::Exponential { c: 0.5 }, KSpec::Fixed(4), 4, SEED);
    cov.eps = Some(0.25);
    cov.samples = Some(200);
    configs.push(cov);
    let mut cor = base(Experiment::CorollaryRate, 300, SpectrumKind::PowerLaw { beta: 1.0 }, KSpec::Rule(KRule::Cutoff), 3, SEED);
    cor.delta = Some(0.05);
    configs.push(cor);

    let mut identical = 0;
    for c in &configs {
        let a = render_report(Report::Experiment(&run_experiment(c).map_err(|e| e.to_string())?), ReportFormat::Json)
            .map_err(|e| e.to_string())?;
        let b = render_report(Report::Experiment(&run_experiment(c).map_err(|e| e.to_string())?), ReportFormat::Json)
            .map_err(|e| e.to_string())?;
        identical += usize::from(a == b);
    }
    check(
        identical == configs.len(),
        format!("{identical}/{} experiment kinds byte-identical on rerun", configs.len()),
    )
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, u64, fn() -> Outcome); 11] = [
        (1, "classical lemmas", 30, classical_lemmas),
        (2, "eckart-young oracle", 30, eckart_young),
        (3, "relative bound end-to-end", 120, || end_to_end(Experiment::Theorem1, SEED + 3)),
        (4, "gap bound end-to-end", 120, || end_to_end(Experiment::Theorem2, SEED + 4)),
        (5, "proof inequalities and aligned subspace", 300, lemma_suite),
        (6, "power-law rate", 180, corollary_rate),
        (7, "completion", 240, completion),
        (8, "denoising", 180, denoising),
        (9, "covariance", 240, covariance),
        (10, "goe edge", 60, goe_edge),
        (11, "determinism", 120, determinism),
    ];
    let mut failures = 0;
    for (id, name, budget, f) in criteria {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let over = elapsed > Duration::from_secs(budget);
        let (pass, detail) = match outcome {
            Ok(d) => (!over, d),
            Err(d) => (false, d),
        };
        let timing = if over {
            format!("{:.1}s, over the {budget}s budget", elapsed.as_secs_f64())
        } else {
            format!("{:.1}s", elapsed.as_secs_f64())
        };
        println!(
            "{} criterion {id:>2} {name}: {detail} [{timing}]",
            if pass { "PASS" } else { "FAIL" }
        );
        failures += usize::from(!pass);
    }
    if failures == 0 {
        println!("all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
