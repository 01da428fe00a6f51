//! Completion, denoising and reduced-rank covariance estimators. Each ends in
//! a rank-`k` eigen-truncation of a surrogate matrix.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eig_sym, spectral_norm, Matrix, SymmetricMatrix};

/// One observed upper-triangle entry, 1-based, `i ≤ j`, raw value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// Observed entries of a symmetric matrix under Bernoulli(`p`) sampling.
/// Rejects out-of-range, non-finite and repeated entries.
pub(crate) fn check_entry(e: &Observation, n: usize, seen: &mut HashSet<(usize, usize)>) -> Result<()> {
    if e.i < 1 || e.j > n || e.i > e.j {
        return Err(Error::InvalidInput(format!(
            "entry ({}, {}) outside 1 <= i <= j <= {n}",
            e.i, e.j
        )));
    }
    if !e.value.is_finite() {
        return Err(Error::InvalidInput(format!("entry ({}, {}) is not finite", e.i, e.j)));
    }
    if !seen.insert((e.i, e.j)) {
        return Err(Error::InvalidInput(format!("duplicate entry ({}, {})", e.i, e.j)));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    n: usize,
    p: f64,
    entries: Vec<Observation>,
}

impl ObservationSet {
    pub fn new(n: usize, p: f64, entries: Vec<Observation>) -> Result<Self> {
        if n == 0 {
            return Err(Error::arg("n", "must be at least 1"));
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::arg("p", format!("must lie in (0, 1], got {p}")));
        }
        let mut seen = HashSet::with_capacity(entries.len());
        for e in &entries {
            check_entry(e, n, &mut seen)?;
        }
        Ok(ObservationSet { n, p, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn entries(&self) -> &[Observation] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// `N` samples of dimension `n`, one per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    samples: Matrix,
}

impl SampleSet {
    pub fn new(samples: Matrix) -> Result<Self> {
        if samples.rows() < 1 || samples.cols() < 1 {
            return Err(Error::arg("N", "need at least one sample of positive dimension"));
        }
        if !samples.is_finite() {
            return Err(Error::InvalidInput("samples contain non-finite values".into()));
        }
        Ok(SampleSet { samples })
    }

    pub fn n(&self) -> usize {
        self.samples.cols()
    }

    pub fn count(&self) -> usize {
        self.samples.rows()
    }

    pub fn samples(&self) -> &Matrix {
        &self.samples
    }
}

#[derive(Debug, Clone)]
pub struct CompletionResult {
    pub a_hat_k: SymmetricMatrix,
    pub k_used: usize,
    /// `‖Â‖₂` of the zero-filled surrogate.
    pub surrogate_norm: f64,
    pub observed_count: usize,
}

fn check_rank(k: usize, n: usize) -> Result<()> {
    if k < 1 || k > n {
        return Err(Error::arg("k", format!("need 1 <= k <= n = {n}, got {k}")));
    }
    Ok(())
}

/// `Â_ij = Â_ji = A_ij / p` on observed entries, zero elsewhere.
pub fn zero_fill_rescale(obs: &ObservationSet) -> SymmetricMatrix {
    let n = obs.n();
    let mut m = Matrix::zeros(n, n);
    let inv = 1.0 / obs.p();
    for e in obs.entries() {
        let v = e.value * inv;
        m[(e.i - 1, e.j - 1)] = v;
        m[(e.j - 1, e.i - 1)] = v;
    }
    SymmetricMatrix::new(m).expect("filled symmetrically")
}

pub fn complete(obs: &ObservationSet, k: usize) -> Result<CompletionResult> {
    check_rank(k, obs.n())?;
    let surrogate = zero_fill_rescale(obs);
    let d = eig_sym(&surrogate)?;
    let surrogate_norm = d.eigenvalues().iter().fold(0.0, |m: f64, x| m.max(x.abs()));
    Ok(CompletionResult {
        a_hat_k: d.truncate(k)?,
        k_used: k,
        surrogate_norm,
        observed_count: obs.len(),
    })
}

pub fn denoise(a_noisy: &SymmetricMatrix, k: usize) -> Result<SymmetricMatrix> {
    check_rank(k, a_noisy.n())?;
    eig_sym(a_noisy)?.truncate(k)
}

/// `(1/N) Σ X_i X_iᵀ`, without centering.
pub fn sample_covariance(s: &SampleSet) -> SymmetricMatrix {
    let x = s.samples();
    let gram = x.t_matmul(x).scaled(1.0 / s.count() as f64);
    SymmetricMatrix::symmetrize(&gram).expect("square by construction")
}

/// `(1/N) Σ (X_i − X̄)(X_i − X̄)ᵀ`.
pub fn centered_sample_covariance(s: &SampleSet) -> SymmetricMatrix {
    let x = s.samples();
    let count = s.count() as f64;
    let mean: Vec<f64> = (0..s.n())
        .map(|j| (0..s.count()).map(|i| x[(i, j)]).sum::<f64>() / count)
        .collect();
    let centered = Matrix::from_fn(x.rows(), x.cols(), |i, j| x[(i, j)] - mean[j]);
    let gram = centered.t_matmul(&centered).scaled(1.0 / count);
    SymmetricMatrix::symmetrize(&gram).expect("square by construction")
}

pub fn covariance_reduced(s: &SampleSet, k: usize) -> Result<SymmetricMatrix> {
    check_rank(k, s.n())?;
    eig_sym(&sample_covariance(s))?.truncate(k)
}

/// `‖Â_k − A‖₂` and `‖Â_k − A‖_F` of an estimate.
pub fn errors(estimate: &SymmetricMatrix, truth: &SymmetricMatrix) -> Result<(f64, f64)> {
    if estimate.n() != truth.n() {
        return Err(Error::arg("estimate", "dimension differs from truth"));
    }
    let diff = estimate.sub(truth);
    Ok((spectral_norm(&diff)?, diff.frobenius_norm()))
}
