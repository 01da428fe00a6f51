use serde::{Deserialize, Serialize};

use crate::bounds::{exp_cutoff, powerlaw_cutoff, Constants, SamplingRegime};
use crate::error::{Error, Result};
use crate::synth::{make_spectrum, SpectrumKind, SpectrumSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Completion,
    Denoising,
    Covariance,
    Theorem1,
    Theorem2,
    CorollaryRate,
    LemmaSuite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Haar,
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KRule {
    Cutoff,
}

/// A fixed rank or a rule resolved from the spectrum and `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KSpec {
    Fixed(usize),
    Rule(KRule),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PRule {
    Threshold,
}

/// A fixed observation probability or the sampling threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PSpec {
    Fixed(f64),
    Rule(PRule),
}

/// One Monte-Carlo experiment.
///
/// Scientific parameters have no defaults; only `constants` does.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub n: usize,
    pub spectrum: SpectrumKind,
    pub basis: Basis,
    pub k: KSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    /// `ν` as a multiple of `σ_{k+1}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu_rel: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<PSpec>,
    /// Failure probability in the sampling threshold.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<SamplingRegime>,
    /// Scales the resolved `p`; the result is clamped to 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_multiplier: Option<f64>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub constants: Constants,
}

fn cfg_err(field: &str, msg: impl Into<String>) -> Error {
    Error::config(field, msg)
}

fn require<T: Copy>(field: &str, v: Option<T>) -> Result<T> {
    v.ok_or_else(|| cfg_err(field, "is required for this experiment"))
}

fn check_theorem_eps(eps: Option<f64>) -> Result<f64> {
    let eps = require("eps", eps)?;
    if !(eps > 0.0 && eps <= 0.25) {
        return Err(cfg_err("eps", format!("must lie in (0, 1/4], got {eps}")));
    }
    Ok(eps)
}

impl ExperimentConfig {
    pub fn spectrum_spec(&self) -> SpectrumSpec {
        SpectrumSpec {
            kind: self.spectrum.clone(),
            n: self.n,
        }
    }

    /// Checks ranges against the relevant theorem and rejects fields the
    /// experiment does not use.
    pub fn validate(&self) -> Result<()> {
        use Experiment::*;
        if self.trials < 1 {
            return Err(cfg_err("trials", "must be at least 1"));
        }
        if self.n < 2 {
            return Err(cfg_err("n", "must be at least 2"));
        }
        make_spectrum(&self.spectrum_spec()).map_err(|e| cfg_err("spectrum", e.to_string()))?;

        let present: [(&str, bool); 8] = [
            ("eps", self.eps.is_some()),
            ("nu", self.nu.is_some()),
            ("nu_rel", self.nu_rel.is_some()),
            ("p", self.p.is_some()),
            ("t", self.t.is_some()),
            ("regime", self.regime.is_some()),
            ("p_multiplier", self.p_multiplier.is_some()),
            ("N", self.samples.is_some()),
        ];
        let mut allowed: Vec<&str> = match self.experiment {
            Theorem1 | Theorem2 | LemmaSuite => vec!["eps"],
            Completion => vec!["eps", "p", "t", "regime", "p_multiplier"],
            Denoising => vec!["nu", "nu_rel"],
            Covariance => vec!["eps", "N"],
            CorollaryRate => vec![],
        };
        allowed.push("delta");
        for (name, is_set) in present {
            if is_set && !allowed.contains(&name) {
                return Err(cfg_err(name, format!("not used by {:?} experiments", self.experiment)));
            }
        }
        if self.delta.is_some() && self.experiment != CorollaryRate && !matches!(self.k, KSpec::Rule(_)) {
            return Err(cfg_err("delta", "only used by corollary_rate or the cutoff rule"));
        }

        match self.experiment {
            Theorem1 | Theorem2 | LemmaSuite => {
                check_theorem_eps(self.eps)?;
            }
            Completion => {
                check_theorem_eps(self.eps)?;
                match require("p", self.p)? {
                    PSpec::Fixed(p) => {
                        if !(p > 0.0 && p <= 1.0) {
                            return Err(cfg_err("p", format!("must lie in (0, 1], got {p}")));
                        }
                        if self.t.is_some() || self.regime.is_some() {
                            return Err(cfg_err("t", "t and regime apply only to p = \"threshold\""));
                        }
                    }
                    PSpec::Rule(PRule::Threshold) => {
                        let t = require("t", self.t)?;
                        if !(t > 0.0 && t < 1.0) {
                            return Err(cfg_err("t", format!("must lie in (0, 1), got {t}")));
                        }
                        require("regime", self.regime)?;
                    }
                }
                if let Some(m) = self.p_multiplier {
                    if !(m > 0.0) || !m.is_finite() {
                        return Err(cfg_err("p_multiplier", "must be positive"));
                    }
                }
            }
            Denoising => match (self.nu, self.nu_rel) {
                (Some(v), None) | (None, Some(v)) => {
                    if !(v >= 0.0) || !v.is_finite() {
                        return Err(cfg_err("nu", "must be finite and nonnegative"));
                    }
                }
                _ => return Err(cfg_err("nu", "exactly one of nu and nu_rel is required")),
            },
            Covariance => {
                check_theorem_eps(self.eps)?;
                if require("N", self.samples)? < 2 {
                    return Err(cfg_err("N", "must be at least 2"));
                }
            }
            CorollaryRate => {
                let delta = require("delta", self.delta)?;
                if !(delta > 0.0) || !delta.is_finite() {
                    return Err(cfg_err("delta", "must be positive"));
                }
                if matches!(self.spectrum, SpectrumKind::Explicit(_)) {
                    return Err(cfg_err("spectrum", "corollary_rate needs a powerlaw or exponential spectrum"));
                }
            }
        }

        let c = &self.constants;
        for (name, v) in [
            ("C_mc", c.c_mc),
            ("c_dn", c.c_dn),
            ("C_a", c.c_a),
            ("C_b", c.c_b),
            ("c_cov", c.c_cov),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(cfg_err(name, format!("must be positive, got {v}")));
            }
        }

        let k = self.resolve_k()?;
        if k >= self.n {
            return Err(cfg_err("k", format!("need k < n = {}, got {k}", self.n)));
        }
        Ok(())
    }

    /// The rank in use, applying the cutoff rule when requested.
    pub fn resolve_k(&self) -> Result<usize> {
        match self.k {
            KSpec::Fixed(k) => {
                if k < 1 {
                    return Err(cfg_err("k", "must be at least 1"));
                }
                Ok(k)
            }
            KSpec::Rule(KRule::Cutoff) => {
                let delta = require("delta", self.delta)?;
                let k = match self.spectrum {
                    SpectrumKind::PowerLaw { beta } => powerlaw_cutoff(delta, beta, self.n),
                    SpectrumKind::Exponential { c } => exp_cutoff(delta, c, self.n),
                    SpectrumKind::Explicit(_) => {
                        return Err(cfg_err("k", "the cutoff rule needs a powerlaw or exponential spectrum"))
                    }
                };
                k.map_err(|e| cfg_err("k", e.to_string()))
            }
        }
    }
}
