//! `lowrank`: generate instances, run the estimators on files, evaluate
//! bounds, verify the proof inequalities, and run seeded experiments.
//!
//! Exit codes: 0 success, 1 invalid input or arguments, 2 runtime failure.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use lowrank::bounds::{
    achlioptas_bound, bunea_rates, covariance_admissible, denoise_bound, envelope, exp_cutoff,
    exp_error_bound, mc_sampling_threshold, powerlaw_cutoff, powerlaw_error_bound, theorem1_bound,
    theorem2_bound, Constants, CovarianceMode, SamplingInputs, SamplingRegime,
};
use lowrank::estimators::{complete, covariance_reduced, denoise, errors, sample_covariance, zero_fill_rescale};
use lowrank::harness::run_experiment;
use lowrank::io::{self, render_report, Report, ReportFormat};
use lowrank::linalg::{spectral_norm, stats_of, SymmetricMatrix};
use lowrank::probe::check_lemmas;
use lowrank::synth::{
    bernoulli_observe, goe_noise, haar_orthogonal, make_spectrum, mvn_samples, psd_from_spectrum,
    RngStream, SpectrumKind, SpectrumSpec,
};
use lowrank::{Error, Result};

#[derive(Parser)]
#[command(name = "lowrank", version, about = "Truncated-SVD low-rank estimation and bound verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate matrices, observations, noisy copies or samples.
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Complete a matrix from an observation file.
    Complete(CompleteArgs),
    /// Denoise a noisy matrix by rank-k truncation.
    Denoise(DenoiseArgs),
    /// Reduced-rank covariance from a sample file.
    Cov(CovArgs),
    /// Evaluate a bound, cutoff rule or threshold.
    #[command(subcommand)]
    Bounds(BoundsCommand),
    /// Check the proof inequalities on a matrix and its perturbation.
    Verify(VerifyArgs),
    /// Run a Monte-Carlo experiment from a TOML config.
    Run(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => ReportFormat::Json,
            Format::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BasisArg {
    Haar,
    Identity,
}

#[derive(Args)]
struct Seeded {
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    stream: u64,
}

impl Seeded {
    fn rng(&self) -> RngStream {
        RngStream::new(self.seed, self.stream)
    }
}

#[derive(Subcommand)]
enum SynthCommand {
    /// PSD matrix with a prescribed spectrum.
    Matrix {
        #[arg(long)]
        n: usize,
        /// `powerlaw:<beta>`, `exponential:<c>` or `explicit:<v1>,<v2>,...`
        #[arg(long)]
        spectrum: String,
        #[arg(long, value_enum)]
        basis: BasisArg,
        #[command(flatten)]
        seeded: Seeded,
        #[arg(long)]
        out: PathBuf,
    },
    /// Bernoulli(p) observations of the upper triangle.
    Observe {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        p: f64,
        #[command(flatten)]
        seeded: Seeded,
        #[arg(long)]
        out: PathBuf,
    },
    /// `A + E` with GOE noise of level nu.
    Noise {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        nu: f64,
        #[command(flatten)]
        seeded: Seeded,
        #[arg(long)]
        out: PathBuf,
    },
    /// Gaussian samples with covariance A.
    Samples {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long = "count")]
        count: usize,
        #[command(flatten)]
        seeded: Seeded,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Truth {
    /// True matrix; enables error measurement and the bound report.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct CompleteArgs {
    #[arg(long)]
    obs: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    truth: Truth,
    #[arg(long, requires = "truth")]
    eps: Option<f64>,
}

#[derive(Args)]
struct DenoiseArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    truth: Truth,
    #[arg(long, requires = "truth")]
    nu: Option<f64>,
}

#[derive(Args)]
struct CovArgs {
    #[arg(long)]
    samples: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    truth: Truth,
    #[arg(long, requires = "truth")]
    eps: Option<f64>,
}

#[derive(Args)]
struct ConstantArgs {
    #[arg(long = "C-mc")]
    c_mc: Option<f64>,
    #[arg(long = "c-dn")]
    c_dn: Option<f64>,
    #[arg(long = "C-a")]
    c_a: Option<f64>,
    #[arg(long = "C-b")]
    c_b: Option<f64>,
    #[arg(long = "c-cov")]
    c_cov: Option<f64>,
}

impl ConstantArgs {
    fn resolve(&self) -> Constants {
        let d = Constants::default();
        Constants {
            c_mc: self.c_mc.unwrap_or(d.c_mc),
            c_dn: self.c_dn.unwrap_or(d.c_dn),
            c_a: self.c_a.unwrap_or(d.c_a),
            c_b: self.c_b.unwrap_or(d.c_b),
            c_cov: self.c_cov.unwrap_or(d.c_cov),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeArg {
    SqrtK,
    Relative,
    Gap,
}

#[derive(Clone, Copy, ValueEnum)]
enum CovModeArg {
    Relative,
    Gap,
}

#[derive(Subcommand)]
enum BoundsCommand {
    /// Relative bound `(1+32eps) tail_F + 102 sqrt(2k) eps^2 tail_2`.
    Theorem1 {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        tail_f: f64,
        #[arg(long)]
        tail_2: f64,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Additive bound `tail_F + 102 sqrt(2k) eps gap`.
    Theorem2 {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        gap: f64,
        #[arg(long)]
        tail_f: f64,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Classical bound `tail_F + sqrt(k) delta + 2 k^(1/4) sqrt(delta head_F)`.
    Achlioptas {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        tail_f: f64,
        #[arg(long)]
        head_f: f64,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Denoising error bound for GOE noise of level nu.
    Denoise {
        #[arg(long)]
        nu: f64,
        #[arg(long)]
        sigma_k1: f64,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        tail_f: f64,
        #[command(flatten)]
        constants: ConstantArgs,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Reduced-rank covariance error bound.
    Covariance {
        #[arg(long)]
        r_e: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = f64::INFINITY)]
        gamma_k: f64,
        #[arg(long = "N")]
        samples: usize,
        #[arg(long, value_enum)]
        mode: CovModeArg,
        #[arg(long)]
        norm_2: Option<f64>,
        #[arg(long)]
        gap: Option<f64>,
        #[command(flatten)]
        constants: ConstantArgs,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Envelope indices of a comma-separated descending spectrum.
    Envelope {
        #[arg(long, value_delimiter = ',')]
        eigenvalues: Vec<f64>,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        eps: f64,
    },
    /// Rank cutoff for a power-law spectrum at perturbation size delta.
    PowerlawCutoff {
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        n: usize,
    },
    /// Rank cutoff for an exponential spectrum at perturbation size delta.
    ExpCutoff {
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        n: usize,
    },
    /// Completion sampling threshold p.
    Sampling {
        #[arg(long)]
        mu0: f64,
        #[arg(long)]
        norm_f: f64,
        #[arg(long)]
        sigma_k1: f64,
        #[arg(long)]
        gap: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum)]
        regime: RegimeArg,
        #[command(flatten)]
        constants: ConstantArgs,
    },
    /// Full sample-covariance spectral error reference.
    Bunea {
        #[arg(long)]
        norm_2: f64,
        #[arg(long)]
        r_e: f64,
        #[arg(long = "N")]
        samples: usize,
        #[arg(long)]
        n: usize,
    },
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    a_hat: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    eps: f64,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => io::write_text(p, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| Error::Io {
                path: PathBuf::from("<stdout>"),
                source: e,
            })
        }
    }
}

fn emit_json(v: &Value) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    emit(&s, None)
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("values serialize")
}

fn synth(cmd: SynthCommand) -> Result<()> {
    match cmd {
        SynthCommand::Matrix {
            n,
            spectrum,
            basis,
            seeded,
            out,
        } => {
            let kind: SpectrumKind = spectrum.parse()?;
            let values = make_spectrum(&SpectrumSpec { kind, n })?;
            let a = match basis {
                BasisArg::Identity => SymmetricMatrix::from_diag(&values),
                BasisArg::Haar => psd_from_spectrum(&values, &haar_orthogonal(n, &mut seeded.rng())?)?,
            };
            io::write_matrix(&a, &out)
        }
        SynthCommand::Observe {
            matrix,
            p,
            seeded,
            out,
        } => {
            let a = io::read_matrix(&matrix)?;
            io::write_observations(&bernoulli_observe(&a, p, &mut seeded.rng())?, &out)
        }
        SynthCommand::Noise {
            matrix,
            nu,
            seeded,
            out,
        } => {
            let a = io::read_matrix(&matrix)?;
            let e = goe_noise(a.n(), nu, &mut seeded.rng())?;
            io::write_matrix(&a.add(&e), &out)
        }
        SynthCommand::Samples {
            matrix,
            count,
            seeded,
            out,
        } => {
            let a = io::read_matrix(&matrix)?;
            io::write_samples(&mvn_samples(&a, count, &mut seeded.rng())?, &out)
        }
    }
}

/// Error of `estimate` against `truth` plus the relevant bound, when a truth is given.
fn measured(
    estimate: &SymmetricMatrix,
    truth: Option<&SymmetricMatrix>,
    k: usize,
    bound: impl FnOnce(&SymmetricMatrix, f64, f64, f64) -> Result<Option<Value>>,
) -> Result<Value> {
    let Some(a) = truth else {
        return Ok(Value::Null);
    };
    let n = a.n();
    if k >= n {
        return Err(Error::Argument {
            name: "k",
            msg: format!("bound reports need k < n = {n}"),
        });
    }
    let (e2, ef) = errors(estimate, a)?;
    let stats = stats_of(a, k)?;
    let b = bound(a, stats.tail_f, stats.tail_2, stats.sigma_k_plus_1)?;
    Ok(json!({
        "measured_error_f": ef,
        "measured_error_2": e2,
        "tail_f": stats.tail_f,
        "tail_2": stats.tail_2,
        "bound": b,
    }))
}

fn read_truth(t: &Truth) -> Result<Option<SymmetricMatrix>> {
    t.truth.as_deref().map(io::read_matrix).transpose()
}

fn run_complete(args: CompleteArgs) -> Result<()> {
    let obs = io::read_observations(&args.obs)?;
    let res = complete(&obs, args.k)?;
    io::write_matrix(&res.a_hat_k, &args.out)?;
    let truth = read_truth(&args.truth)?;
    let surrogate = zero_fill_rescale(&obs);
    let eval = measured(&res.a_hat_k, truth.as_ref(), args.k, |a, tf, t2, s| {
        let Some(eps) = args.eps else { return Ok(None) };
        let delta = spectral_norm(&surrogate.sub(a))?;
        let b = theorem1_bound(args.k, eps, tf, t2)?.with_perturbation_check(eps * eps * s, delta);
        Ok(Some(to_value(&b)))
    })?;
    emit_json(&json!({
        "k": res.k_used,
        "observed_count": res.observed_count,
        "surrogate_norm": res.surrogate_norm,
        "evaluation": eval,
    }))
}

fn run_denoise(args: DenoiseArgs) -> Result<()> {
    let noisy = io::read_matrix(&args.input)?;
    let est = denoise(&noisy, args.k)?;
    io::write_matrix(&est, &args.out)?;
    let truth = read_truth(&args.truth)?;
    let eval = measured(&est, truth.as_ref(), args.k, |_, tf, _, s| {
        let Some(nu) = args.nu else { return Ok(None) };
        Ok(Some(to_value(&denoise_bound(nu, s, args.k, tf, &Constants::default())?)))
    })?;
    emit_json(&json!({ "k": args.k, "evaluation": eval }))
}

fn run_cov(args: CovArgs) -> Result<()> {
    let s = io::read_samples(&args.samples)?;
    let est = covariance_reduced(&s, args.k)?;
    io::write_matrix(&est, &args.out)?;
    let truth = read_truth(&args.truth)?;
    let eval = measured(&est, truth.as_ref(), args.k, |a, tf, t2, _| {
        let Some(eps) = args.eps else { return Ok(None) };
        let stats = stats_of(a, args.k)?;
        let mut b = theorem1_bound(args.k, eps, tf, t2)?;
        let adm = covariance_admissible(
            stats.effective_rank,
            eps,
            args.k,
            stats.gamma_k,
            s.count(),
            CovarianceMode::Relative,
            &Constants::default(),
        );
        if let Ok(adm) = &adm {
            b.precondition_holds = adm.precondition_holds;
            b.precondition_margin = adm.precondition_margin;
        }
        let full_f = errors(&sample_covariance(&s), a)?.1;
        Ok(Some(json!({
            "theorem1": to_value(&b),
            "admissibility": adm.ok().map(|r| to_value(&r)),
            "sample_cov_error_f": full_f,
        })))
    })?;
    emit_json(&json!({ "k": args.k, "N": s.count(), "evaluation": eval }))
}

fn bound_out(r: &lowrank::bounds::BoundReport, format: Format) -> Result<()> {
    emit(&render_report(Report::Bound(r), format.into())?, None)
}

fn run_bounds(cmd: BoundsCommand) -> Result<()> {
    match cmd {
        BoundsCommand::Theorem1 {
            k,
            eps,
            tail_f,
            tail_2,
            format,
        } => bound_out(&theorem1_bound(k, eps, tail_f, tail_2)?, format),
        BoundsCommand::Theorem2 {
            k,
            eps,
            gap,
            tail_f,
            format,
        } => bound_out(&theorem2_bound(k, eps, gap, tail_f)?, format),
        BoundsCommand::Achlioptas {
            k,
            delta,
            tail_f,
            head_f,
            format,
        } => bound_out(&achlioptas_bound(k, delta, tail_f, head_f)?, format),
        BoundsCommand::Denoise {
            nu,
            sigma_k1,
            k,
            tail_f,
            constants,
            format,
        } => bound_out(&denoise_bound(nu, sigma_k1, k, tail_f, &constants.resolve())?, format),
        BoundsCommand::Covariance {
            r_e,
            eps,
            k,
            gamma_k,
            samples,
            mode,
            norm_2,
            gap,
            constants,
            format,
        } => {
            let mode = match mode {
                CovModeArg::Relative => CovarianceMode::Relative,
                CovModeArg::Gap => CovarianceMode::Gap {
                    norm_2: norm_2.ok_or(Error::Argument {
                        name: "norm_2",
                        msg: "required in gap mode".into(),
                    })?,
                    gap: gap.ok_or(Error::Argument {
                        name: "gap",
                        msg: "required in gap mode".into(),
                    })?,
                },
            };
            let r = covariance_admissible(r_e, eps, k, gamma_k, samples, mode, &constants.resolve())?;
            bound_out(&r, format)
        }
        BoundsCommand::Envelope { eigenvalues, k, eps } => {
            emit_json(&to_value(&envelope(&eigenvalues, k, eps)?))
        }
        BoundsCommand::PowerlawCutoff { delta, beta, n } => {
            let k = powerlaw_cutoff(delta, beta, n)?;
            emit_json(&json!({ "k": k, "rate": powerlaw_error_bound(delta, beta, n)? }))
        }
        BoundsCommand::ExpCutoff { delta, c, n } => {
            let k = exp_cutoff(delta, c, n)?;
            emit_json(&json!({ "k": k, "rate": exp_error_bound(delta, c, n)? }))
        }
        BoundsCommand::Sampling {
            mu0,
            norm_f,
            sigma_k1,
            gap,
            n,
            t,
            eps,
            k,
            regime,
            constants,
        } => {
            let regime = match regime {
                RegimeArg::SqrtK => SamplingRegime::SqrtK,
                RegimeArg::Relative => SamplingRegime::Relative,
                RegimeArg::Gap => SamplingRegime::Gap,
            };
            let inputs = SamplingInputs {
                mu0,
                norm_f,
                sigma_k_plus_1: sigma_k1,
                gap,
                n,
                t,
                eps,
                k,
            };
            let c = constants.resolve();
            let th = mc_sampling_threshold(&inputs, regime, &c)?;
            emit_json(&json!({ "threshold": to_value(&th), "C_mc": c.c_mc }))
        }
        BoundsCommand::Bunea {
            norm_2,
            r_e,
            samples,
            n,
        } => {
            let (f, s) = bunea_rates(norm_2, r_e, samples, n)?;
            emit_json(&json!({ "frob_rate": f, "spec_rate": s }))
        }
    }
}

fn run_verify(args: VerifyArgs) -> Result<()> {
    let a = io::read_matrix(&args.a)?;
    let a_hat = io::read_matrix(&args.a_hat)?;
    let report = check_lemmas(&a, &a_hat, args.k, args.eps)?;
    emit(&render_report(Report::Lemma(&report), args.format.into())?, args.out.as_deref())
}

fn run_run(args: RunArgs) -> Result<()> {
    let cfg = io::read_config(&args.config)?;
    let report = run_experiment(&cfg)?;
    emit(&render_report(Report::Experiment(&report), args.format.into())?, args.out.as_deref())?;
    let a = &report.aggregates;
    eprintln!(
        "{} trials, precondition held in {}, passed {}, runtime {:.3}s",
        a.trials, a.precondition_count, a.pass_count, report.runtime_secs
    );
    Ok(())
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Synth(c) => synth(c),
        Command::Complete(a) => run_complete(a),
        Command::Denoise(a) => run_denoise(a),
        Command::Cov(a) => run_cov(a),
        Command::Bounds(c) => run_bounds(c),
        Command::Verify(a) => run_verify(a),
        Command::Run(a) => run_run(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}

