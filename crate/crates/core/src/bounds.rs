//! Closed-form error bounds, cutoff rules and sample-size thresholds.
//!
//! Where a guarantee is stated only up to an unspecified absolute constant,
//! the constant is a named field of [`Constants`] so callers can see and
//! override what is convention rather than theorem.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::sigma_at;

/// Constant conventions for bounds stated with `O(·)`, `Ω(·)` or "some `c`".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Constants {
    /// Multiplier on the completion sampling threshold.
    #[serde(rename = "C_mc")]
    pub c_mc: f64,
    /// Denoising admissibility: `ν < c_dn σ_{k+1}`.
    pub c_dn: f64,
    /// Denoising bias-term multiplier on `sqrt(ν / σ_{k+1})`.
    #[serde(rename = "C_a")]
    pub c_a: f64,
    /// Denoising variance-term multiplier on `sqrt(k) ν`.
    #[serde(rename = "C_b")]
    pub c_b: f64,
    /// Covariance admissibility threshold.
    pub c_cov: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            c_mc: 8.0,
            c_dn: 0.25,
            c_a: 1.0,
            c_b: 3.0,
            c_cov: 1.0,
        }
    }
}

/// Arguments a bound was evaluated at, echoed back verbatim.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InputsEcho {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_k_plus_1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_f: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub head_f: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
}

/// An evaluated right-hand side together with its precondition status.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub value: f64,
    pub precondition_holds: bool,
    /// Signed distance from violating the precondition; negative means violated.
    pub precondition_margin: f64,
    pub inputs_echo: InputsEcho,
}

impl BoundReport {
    /// Folds in the caller's perturbation check `measured ≤ allowed`, with a
    /// relative slack of [`PRECONDITION_RTOL`] for values scaled to equality.
    pub fn with_perturbation_check(mut self, allowed: f64, measured: f64) -> Self {
        let margin = allowed - measured;
        self.precondition_margin = self.precondition_margin.min(margin);
        self.precondition_holds =
            self.precondition_holds && measured <= allowed * (1.0 + PRECONDITION_RTOL);
        self
    }
}

/// Relative slack on `‖Â − A‖₂ ≤ allowed`.
pub const PRECONDITION_RTOL: f64 = 1e-9;

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps <= 0.25 {
        Ok(())
    } else {
        Err(Error::arg("eps", format!("must lie in (0, 1/4], got {eps}")))
    }
}

fn check_nonneg(name: &'static str, x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::arg(name, format!("must be finite and nonnegative, got {x}")))
    }
}

fn eps_margin(eps: f64) -> f64 {
    eps.min(0.25 - eps)
}

/// Multiplicative Frobenius bound
/// `(1 + 32ε) ‖A − A_k‖_F + 102 sqrt(2k) ε² ‖A − A_k‖₂`.
pub fn theorem1_bound(k: usize, eps: f64, tail_f: f64, tail_2: f64) -> Result<BoundReport> {
    if k < 1 {
        return Err(Error::arg("k", "must be at least 1"));
    }
    check_eps(eps)?;
    check_nonneg("tail_f", tail_f)?;
    check_nonneg("tail_2", tail_2)?;
    let value = (1.0 + 32.0 * eps) * tail_f + 102.0 * (2.0 * k as f64).sqrt() * eps * eps * tail_2;
    Ok(BoundReport {
        name: "theorem1".into(),
        value,
        precondition_holds: true,
        precondition_margin: eps_margin(eps),
        inputs_echo: InputsEcho {
            k: Some(k),
            eps: Some(eps),
            tail_f: Some(tail_f),
            tail_2: Some(tail_2),
            ..Default::default()
        },
    })
}

/// Gap-dependent bound `‖A − A_k‖_F + 102 sqrt(2k) ε (σ_k − σ_{k+1})`.
pub fn theorem2_bound(k: usize, eps: f64, gap: f64, tail_f: f64) -> Result<BoundReport> {
    if k < 1 {
        return Err(Error::arg("k", "must be at least 1"));
    }
    check_eps(eps)?;
    check_nonneg("gap", gap)?;
    check_nonneg("tail_f", tail_f)?;
    let value = tail_f + 102.0 * (2.0 * k as f64).sqrt() * eps * gap;
    Ok(BoundReport {
        name: "theorem2".into(),
        value,
        precondition_holds: true,
        precondition_margin: eps_margin(eps),
        inputs_echo: InputsEcho {
            k: Some(k),
            eps: Some(eps),
            gap: Some(gap),
            tail_f: Some(tail_f),
            ..Default::default()
        },
    })
}

/// The earlier additive bound `‖A − A_k‖_F + sqrt(k) δ + 2 k^{1/4} sqrt(δ ‖A_k‖_F)`.
pub fn achlioptas_bound(k: usize, delta: f64, tail_f: f64, head_f: f64) -> Result<BoundReport> {
    check_nonneg("delta", delta)?;
    check_nonneg("tail_f", tail_f)?;
    check_nonneg("head_f", head_f)?;
    let kf = k as f64;
    let value = tail_f + kf.sqrt() * delta + 2.0 * kf.powf(0.25) * (delta * head_f).sqrt();
    Ok(BoundReport {
        name: "achlioptas".into(),
        value,
        precondition_holds: true,
        precondition_margin: delta,
        inputs_echo: InputsEcho {
            k: Some(k),
            delta: Some(delta),
            tail_f: Some(tail_f),
            head_f: Some(head_f),
            ..Default::default()
        },
    })
}

/// Indices `m1 ≤ k ≤ m2` bracketing the eigenvalues close to `σ_k`, `σ_{k+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvelopeIndices {
    pub m1: usize,
    pub m2: usize,
}

/// `m1` is the largest `j ∈ [0, k]` with `σ_j ≥ (1 + 2ε) σ_{k+1}` (`σ_0 = ∞`);
/// `m2` the largest `j ∈ [k, n]` with `σ_j ≥ σ_k − 2ε σ_{k+1}`.
pub fn envelope(eigenvalues: &[f64], k: usize, eps: f64) -> Result<EnvelopeIndices> {
    let n = eigenvalues.len();
    if k < 1 || k >= n {
        return Err(Error::arg("k", format!("need 1 <= k < n = {n}, got {k}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::arg("eps", format!("must lie in (0, 1), got {eps}")));
    }
    let s = |j| sigma_at(eigenvalues, j);
    let upper = (1.0 + 2.0 * eps) * s(k + 1);
    let lower = s(k) - 2.0 * eps * s(k + 1);
    let m1 = (0..=k).rev().find(|&j| s(j) >= upper).unwrap_or(0);
    let m2 = (k..=n).rev().find(|&j| s(j) >= lower).unwrap_or(k);
    Ok(EnvelopeIndices { m1, m2 })
}

fn check_delta_beta(delta: f64, beta: f64, n: usize) -> Result<()> {
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(Error::arg("delta", format!("must lie in (0, 1/2], got {delta}")));
    }
    if !(beta > 0.5) || !beta.is_finite() {
        return Err(Error::arg("beta", format!("must exceed 1/2, got {beta}")));
    }
    if n < 2 {
        return Err(Error::arg("n", "must be at least 2"));
    }
    Ok(())
}

/// `C₁ = 16^{1/β}`, the largest constant keeping `σ_{k+1} = (k+1)^{−β} ≥ δ/16`.
pub fn powerlaw_constant(beta: f64) -> f64 {
    16f64.powf(1.0 / beta)
}

/// Power-law cutoff `k = ⌊min{C₁ δ^{−1/β}, n} − 1⌋`.
pub fn powerlaw_cutoff(delta: f64, beta: f64, n: usize) -> Result<usize> {
    check_delta_beta(delta, beta, n)?;
    let raw = powerlaw_constant(beta) * delta.powf(-1.0 / beta);
    cutoff_from(raw, n)
}

// Guards against `x` landing one ulp below an integer it equals exactly.
fn cutoff_from(raw: f64, n: usize) -> Result<usize> {
    let x = (raw * (1.0 + 4.0 * f64::EPSILON)).min(n as f64) - 1.0;
    let k = x.floor();
    if k < 1.0 {
        return Err(Error::domain_with(
            format!("cutoff rule gives k = {k} < 1"),
            k,
        ));
    }
    Ok(k as usize)
}

/// Rate `max{δ, 1/n}^{(2β−1)/(2β)}` with the leading constant set to 1.
pub fn powerlaw_error_bound(delta: f64, beta: f64, n: usize) -> Result<f64> {
    check_delta_beta(delta, beta, n)?;
    let exponent = (2.0 * beta - 1.0) / (2.0 * beta);
    Ok(delta.max(1.0 / n as f64).powf(exponent))
}

fn check_exp(delta: f64, c: f64, n: usize) -> Result<()> {
    if !(delta > 0.0 && delta < (-16f64).exp()) {
        return Err(Error::arg("delta", format!("must lie in (0, e^-16), got {delta}")));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::arg("c", format!("must be positive, got {c}")));
    }
    if n < 2 {
        return Err(Error::arg("n", "must be at least 2"));
    }
    Ok(())
}

/// Exponential cutoff `k = ⌊min{c⁻¹ log(1/δ) − c⁻¹ log log(1/δ), n} − 1⌋`.
pub fn exp_cutoff(delta: f64, c: f64, n: usize) -> Result<usize> {
    check_exp(delta, c, n)?;
    let l = (1.0 / delta).ln();
    cutoff_from((l - l.ln()) / c, n)
}

/// Rate `max{δ sqrt(log(1/δ)³), sqrt(n) e^{−cn}}` with the leading constant set to 1.
pub fn exp_error_bound(delta: f64, c: f64, n: usize) -> Result<f64> {
    check_exp(delta, c, n)?;
    let l = (1.0 / delta).ln();
    let nf = n as f64;
    Ok((delta * l.powf(1.5)).max(nf.sqrt() * (-c * nf).exp()))
}

/// Which sampling-threshold display to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingRegime {
    /// `O(sqrt(k))` multiplicative guarantee.
    SqrtK,
    /// `(1 + O(ε))` relative guarantee.
    Relative,
    /// Additive guarantee in the spectral gap.
    Gap,
}

/// Inputs to [`mc_sampling_threshold`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingInputs {
    pub mu0: f64,
    pub norm_f: f64,
    pub sigma_k_plus_1: f64,
    pub gap: f64,
    pub n: usize,
    pub t: f64,
    pub eps: f64,
    pub k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingThreshold {
    /// Probability clamped to `(0, 1]`.
    pub p: f64,
    /// `C_mc` times the bracketed expression, before clamping.
    pub unclamped: f64,
    /// The bracketed expression without `C_mc`.
    pub raw_expression: f64,
    /// The guarantee is vacuous at this size (`unclamped > 1`).
    pub vacuous: bool,
}

/// Observation probability needed for the completion guarantees.
pub fn mc_sampling_threshold(
    inputs: &SamplingInputs,
    regime: SamplingRegime,
    constants: &Constants,
) -> Result<SamplingThreshold> {
    let SamplingInputs {
        mu0,
        norm_f,
        sigma_k_plus_1,
        gap,
        n,
        t,
        eps,
        k,
    } = *inputs;
    for (name, v) in [("mu0", mu0), ("norm_f", norm_f), ("eps", eps)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::arg(name, format!("must be positive, got {v}")));
        }
    }
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::arg("t", format!("must lie in (0, 1), got {t}")));
    }
    if n < 1 || k < 1 {
        return Err(Error::arg("n", "n and k must be positive"));
    }
    let nf = n as f64;
    let kf = k as f64;
    let common = mu0 * mu0 * norm_f * norm_f * (nf / t).ln() / nf;
    let raw_expression = match regime {
        SamplingRegime::SqrtK | SamplingRegime::Relative => {
            if !(sigma_k_plus_1 > 0.0) {
                return Err(Error::domain(
                    "relative analysis does not apply when sigma_{k+1} = 0",
                ));
            }
            let factor = match regime {
                SamplingRegime::Relative => eps.powi(-4).max(kf * kf),
                _ => 1.0,
            };
            factor * common / (sigma_k_plus_1 * sigma_k_plus_1)
        }
        SamplingRegime::Gap => {
            if !(gap > 0.0) {
                return Err(Error::domain("gap regime requires sigma_k > sigma_{k+1}"));
            }
            kf * common / (eps * eps * gap * gap)
        }
    };
    let unclamped = constants.c_mc * raw_expression;
    Ok(SamplingThreshold {
        p: unclamped.min(1.0),
        unclamped,
        raw_expression,
        vacuous: unclamped > 1.0,
    })
}

/// Denoising bound `(1 + C_a sqrt(ν/σ_{k+1})) ‖A − A_k‖_F + C_b sqrt(k) ν`.
pub fn denoise_bound(
    nu: f64,
    sigma_k_plus_1: f64,
    k: usize,
    tail_f: f64,
    constants: &Constants,
) -> Result<BoundReport> {
    if !(sigma_k_plus_1 > 0.0) {
        return Err(Error::domain_with(
            "denoising bound needs sigma_{k+1} > 0",
            sigma_k_plus_1,
        ));
    }
    check_nonneg("nu", nu)?;
    check_nonneg("tail_f", tail_f)?;
    let value = (1.0 + constants.c_a * (nu / sigma_k_plus_1).sqrt()) * tail_f
        + constants.c_b * (k as f64).sqrt() * nu;
    let margin = constants.c_dn * sigma_k_plus_1 - nu;
    Ok(BoundReport {
        name: "denoise".into(),
        value,
        precondition_holds: margin > 0.0,
        precondition_margin: margin,
        inputs_echo: InputsEcho {
            k: Some(k),
            nu: Some(nu),
            sigma_k_plus_1: Some(sigma_k_plus_1),
            tail_f: Some(tail_f),
            ..Default::default()
        },
    })
}

/// Which covariance admissibility condition to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceMode {
    Relative,
    /// Gap condition; carries `‖A‖₂` and `σ_k − σ_{k+1}`.
    Gap { norm_2: f64, gap: f64 },
}

/// Admissibility of the reduced-rank covariance guarantee.
///
/// `value` is the evaluated left-hand expression; the condition holds when it
/// is at most `c_cov`.
pub fn covariance_admissible(
    r_e: f64,
    eps: f64,
    k: usize,
    gamma_k: f64,
    samples: usize,
    mode: CovarianceMode,
    constants: &Constants,
) -> Result<BoundReport> {
    if samples < 2 {
        return Err(Error::arg("N", "need at least 2 samples"));
    }
    check_eps(eps)?;
    let nf = samples as f64;
    let kf = k as f64;
    let log_ratio = nf.ln() / nf;
    let (value, gap_echo) = match mode {
        CovarianceMode::Relative => {
            if !gamma_k.is_finite() {
                return Err(Error::domain("gamma_k is infinite (sigma_{k+1} = 0)"));
            }
            (r_e * eps.powi(-4).max(kf * kf) * gamma_k * gamma_k * log_ratio, None)
        }
        CovarianceMode::Gap { norm_2, gap } => {
            if !(gap > 0.0) {
                return Err(Error::domain("gap mode requires sigma_k > sigma_{k+1}"));
            }
            (r_e * kf * norm_2 * norm_2 * log_ratio / (eps * eps * gap * gap), Some(gap))
        }
    };
    let margin = constants.c_cov - value;
    Ok(BoundReport {
        name: "covariance_admissible".into(),
        value,
        precondition_holds: margin >= 0.0,
        precondition_margin: margin,
        inputs_echo: InputsEcho {
            k: Some(k),
            eps: Some(eps),
            gap: gap_echo,
            ..Default::default()
        },
    })
}

/// Sample-covariance rates in Frobenius and spectral norm, constants set to 1.
pub fn bunea_rates(norm_2: f64, r_e: f64, samples: usize, n: usize) -> Result<(f64, f64)> {
    if samples < 2 {
        return Err(Error::arg("N", "need at least 2 samples"));
    }
    if n < 1 {
        return Err(Error::arg("n", "must be at least 1"));
    }
    let nf = samples as f64;
    let frob = norm_2 * r_e * (nf.ln() / nf).sqrt();
    let x = r_e * (nf * n as f64).ln() / nf;
    Ok((frob, norm_2 * x.sqrt().max(x)))
}
