//! Numerical construction of the aligned subspace `W` and reference matrix
//! `Ã = A_{m1} + WWᵀAWWᵀ`, and per-instance checks of the inequalities that
//! chain together into the multiplicative Frobenius bound.

use serde::{Deserialize, Serialize};

use crate::bounds::{envelope, theorem1_bound, EnvelopeIndices, PRECONDITION_RTOL};
use crate::error::{Error, Result};
use crate::linalg::{
    cross_norm, eig_sym, singular_values, spectral_norm, Matrix, SpectralDecomposition,
    SymmetricMatrix, ORTHONORMAL_TOL,
};

/// Slack allowed on every inequality before it counts as violated.
pub const LEMMA_TOL: f64 = 1e-8;

/// Eigenvalues of `Ã` at or below this multiple of `‖A‖₂` count as zero.
pub const RANGE_THRESHOLD: f64 = 1e-8;

/// `W` together with the envelope it lives in.
#[derive(Debug, Clone)]
pub struct AlignedSubspace {
    pub envelope: EnvelopeIndices,
    /// Orthonormal `n × (k − m1)`.
    pub w: Matrix,
    /// `σ_{k−m1}(Wᵀ Û_k)`; 1 when `W` is empty.
    pub alignment: f64,
}

/// Sines of the principal angles between the true and perturbed subspaces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinAngles {
    /// `‖Û_{n−k}ᵀ U_{m1}‖₂`
    pub hat_bottom_vs_top_m1: f64,
    /// `‖Û_kᵀ U_{n−m2}‖₂`
    pub hat_top_vs_bottom_m2: f64,
    /// `‖Û_{n−k}ᵀ W‖₂`
    pub hat_bottom_vs_w: f64,
    /// `‖Û_kᵀ Ũ_⊥‖₂`
    pub hat_top_vs_tilde_perp: f64,
    /// `‖Ũᵀ Û_{n−k}‖₂`
    pub tilde_vs_hat_bottom: f64,
}

#[derive(Debug, Clone)]
pub struct ProofArtifacts {
    pub envelope: EnvelopeIndices,
    pub w: Matrix,
    pub alignment: f64,
    pub a_tilde: SymmetricMatrix,
    /// Orthonormal basis of `Range(Ã)`.
    pub u_tilde: Matrix,
    /// Orthonormal complement of `u_tilde`.
    pub u_tilde_perp: Matrix,
    pub sin_angles: SinAngles,
}

fn top_left_singular_vectors(m: &Matrix, r: usize) -> Result<Matrix> {
    let gram = SymmetricMatrix::symmetrize(&m.matmul_t(m))?;
    Ok(eig_sym(&gram)?.top(r))
}

/// `W = U_{m1:m2} P` with `P` the top `k − m1` left singular vectors of
/// `U_{m1:m2}ᵀ Û_k`; this maximizes `σ_{k−m1}(Wᵀ Û_k)` over `W ⊆ U_{m1:m2}`.
pub fn construct_w(
    d: &SpectralDecomposition,
    d_hat: &SpectralDecomposition,
    k: usize,
    eps: f64,
) -> Result<AlignedSubspace> {
    if d.n() != d_hat.n() {
        return Err(Error::arg("D_hat", "dimension differs from D"));
    }
    let env = envelope(d.eigenvalues(), k, eps)?;
    let n = d.n();
    let r = k - env.m1;
    if r == 0 {
        return Ok(AlignedSubspace {
            envelope: env,
            w: Matrix::zeros(n, 0),
            alignment: 1.0,
        });
    }
    let band = d.basis_range(env.m1, env.m2);
    let hat_top = d_hat.top(k);
    let m = band.t_matmul(&hat_top);
    let p = top_left_singular_vectors(&m, r)?;
    let w = band.matmul(&p);
    let sv = singular_values(&w.t_matmul(&hat_top))?;
    let alignment = sv.get(r - 1).copied().unwrap_or(0.0);
    Ok(AlignedSubspace {
        envelope: env,
        w,
        alignment,
    })
}

/// `Ã = A_{m1} + WWᵀAWWᵀ`.
pub fn reference_matrix(d: &SpectralDecomposition, w: &Matrix, m1: usize) -> Result<SymmetricMatrix> {
    if w.rows() != d.n() {
        return Err(Error::arg("W", "row count differs from dimension"));
    }
    if m1 > d.n() {
        return Err(Error::arg("m1", "exceeds dimension"));
    }
    if w.cols() > 0 && w.orthonormality_defect() > ORTHONORMAL_TOL {
        return Err(Error::arg("W", "columns are not orthonormal"));
    }
    let head = d.partial_sum(0, m1);
    if w.cols() == 0 {
        return Ok(head);
    }
    // WᵀAW = (UᵀW)ᵀ Λ (UᵀW)
    let b = d.basis().t_matmul(w);
    let inner = b.t_matmul(&b.scale_rows(d.eigenvalues()));
    let proj = w.matmul(&inner).matmul_t(w);
    Ok(head.add(&SymmetricMatrix::symmetrize(&proj)?))
}

fn select_columns(m: &Matrix, idx: &[usize]) -> Matrix {
    Matrix::from_fn(m.rows(), idx.len(), |i, c| m[(i, idx[c])])
}

/// Builds `W`, `Ã`, `Ũ`, `Ũ_⊥` and the sine quantities for one instance.
pub fn proof_artifacts(
    d: &SpectralDecomposition,
    d_hat: &SpectralDecomposition,
    k: usize,
    eps: f64,
) -> Result<ProofArtifacts> {
    let aligned = construct_w(d, d_hat, k, eps)?;
    let env = aligned.envelope;
    let a_tilde = reference_matrix(d, &aligned.w, env.m1)?;
    let norm_a = d.eigenvalues().iter().fold(0.0, |m: f64, x| m.max(x.abs()));
    let dt = eig_sym(&a_tilde)?;
    let threshold = RANGE_THRESHOLD * norm_a;
    let (range, null): (Vec<usize>, Vec<usize>) =
        (0..dt.n()).partition(|&j| dt.eigenvalues()[j].abs() > threshold);
    let u_tilde = select_columns(dt.basis(), &range);
    let u_tilde_perp = select_columns(dt.basis(), &null);
    let hat_top = d_hat.top(k);
    let hat_bottom = d_hat.bottom(k);
    let sin_angles = SinAngles {
        hat_bottom_vs_top_m1: cross_norm(&hat_bottom, &d.top(env.m1))?,
        hat_top_vs_bottom_m2: cross_norm(&hat_top, &d.bottom(env.m2))?,
        hat_bottom_vs_w: cross_norm(&hat_bottom, &aligned.w)?,
        hat_top_vs_tilde_perp: cross_norm(&hat_top, &u_tilde_perp)?,
        tilde_vs_hat_bottom: cross_norm(&u_tilde, &hat_bottom)?,
    };
    Ok(ProofArtifacts {
        envelope: env,
        w: aligned.w,
        alignment: aligned.alignment,
        a_tilde,
        u_tilde,
        u_tilde_perp,
        sin_angles,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaCheck {
    pub name: String,
    pub lhs: f64,
    pub bound: f64,
    /// `bound − lhs`.
    pub slack: f64,
    pub status: CheckStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub n: usize,
    pub k: usize,
    pub eps: f64,
    pub perturbation_norm: f64,
    pub sigma_k_plus_1: f64,
    pub precondition_holds: bool,
    /// `ε² σ_{k+1} − ‖Â − A‖₂`.
    pub precondition_margin: f64,
    pub envelope: EnvelopeIndices,
    pub alignment: f64,
    pub sin_angles: SinAngles,
    pub error_frobenius: f64,
    pub checks: Vec<LemmaCheck>,
}

impl LemmaReport {
    /// True when the precondition held and every check passed.
    pub fn all_pass(&self) -> bool {
        self.precondition_holds && self.checks.iter().all(|c| c.status == CheckStatus::Pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &LemmaCheck> {
        self.checks.iter().filter(|c| c.status == CheckStatus::Fail)
    }

    pub fn check(&self, name: &str) -> Option<&LemmaCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Measures every link of the proof on `(A, Â)` at rank `k`.
///
/// Checks are reported as not applicable when `‖Â − A‖₂ > ε² σ_{k+1}(A)`.
pub fn check_lemmas(a: &SymmetricMatrix, a_hat: &SymmetricMatrix, k: usize, eps: f64) -> Result<LemmaReport> {
    if !(eps > 0.0 && eps <= 0.25) {
        return Err(Error::arg("eps", format!("must lie in (0, 1/4], got {eps}")));
    }
    if a.n() != a_hat.n() {
        return Err(Error::arg("A_hat", "dimension differs from A"));
    }
    let n = a.n();
    if k < 1 || k >= n {
        return Err(Error::arg("k", format!("need 1 <= k < n = {n}, got {k}")));
    }
    let d = eig_sym(a)?;
    let d_hat = eig_sym(a_hat)?;
    let perturbation_norm = spectral_norm(&a_hat.sub(a))?;
    let sigma_k_plus_1 = d.sigma(k + 1);
    let allowed = eps * eps * sigma_k_plus_1;
    let precondition_margin = allowed - perturbation_norm;
    let precondition_holds = perturbation_norm <= allowed * (1.0 + PRECONDITION_RTOL);

    let art = proof_artifacts(&d, &d_hat, k, eps)?;
    let tail: Vec<f64> = d.eigenvalues()[k..].to_vec();
    let tail_f = tail.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tail_2 = tail.iter().fold(0.0, |m: f64, x| m.max(x.abs()));
    let a_hat_k = d_hat.truncate(k)?;

    let resid_tilde = a.sub(&art.a_tilde).frobenius_norm();
    let hat_vs_tilde = spectral_norm(&a_hat_k.sub(&art.a_tilde))?;
    let error_frobenius = a_hat_k.sub(a).frobenius_norm();
    let root_2k = (2.0 * k as f64).sqrt();
    let s = art.sin_angles;

    let mut raw = vec![
        ("envelope_top_angle", s.hat_bottom_vs_top_m1, eps),
        ("envelope_bottom_angle", s.hat_top_vs_bottom_m2, eps),
        ("w_alignment_angle", s.hat_bottom_vs_w, eps),
        ("tilde_perp_angle", s.hat_top_vs_tilde_perp, 2.0 * eps),
        ("tilde_range_angle", s.tilde_vs_hat_bottom, 2.0 * eps),
        ("tilde_residual", resid_tilde, (1.0 + 32.0 * eps) * tail_f),
        ("hat_vs_tilde", hat_vs_tilde, 102.0 * eps * eps * tail_2),
        ("error_split", error_frobenius, resid_tilde + root_2k * hat_vs_tilde),
    ];
    raw.push((
        "theorem1",
        error_frobenius,
        theorem1_bound(k, eps, tail_f, tail_2)?.value,
    ));
    let checks = raw
        .into_iter()
        .map(|(name, lhs, bound)| {
            let slack = bound - lhs;
            let status = if !precondition_holds {
                CheckStatus::NotApplicable
            } else if slack >= -LEMMA_TOL {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            };
            LemmaCheck {
                name: name.into(),
                lhs,
                bound,
                slack,
                status,
            }
        })
        .collect();

    Ok(LemmaReport {
        n,
        k,
        eps,
        perturbation_norm,
        sigma_k_plus_1,
        precondition_holds,
        precondition_margin,
        envelope: art.envelope,
        alignment: art.alignment,
        sin_angles: s,
        error_frobenius,
        checks,
    })
}
