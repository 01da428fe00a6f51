//! Norms, spectrum statistics and subspace angles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::eigen::{eig_sym, eigenvalues_sym, sigma_at, SpectralDecomposition};
use crate::linalg::matrix::{Matrix, SymmetricMatrix};

/// Orthonormality tolerance accepted by [`principal_angle_sin`].
pub const ORTHONORMAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormTriple {
    pub spectral: f64,
    pub frobenius: f64,
    pub max_entry: f64,
}

pub fn norms(a: &SymmetricMatrix) -> Result<NormTriple> {
    Ok(NormTriple {
        spectral: spectral_norm(a)?,
        frobenius: a.frobenius_norm(),
        max_entry: a.max_abs(),
    })
}

/// `max |λ|` of a symmetric matrix.
pub fn spectral_norm(a: &SymmetricMatrix) -> Result<f64> {
    if a.is_diagonal() {
        return Ok(a.max_abs());
    }
    let vals = eigenvalues_sym(a)?;
    Ok(vals.iter().fold(0.0, |m: f64, x| m.max(x.abs())))
}

/// Singular values of a rectangular matrix, descending, via the smaller Gram matrix.
pub fn singular_values(m: &Matrix) -> Result<Vec<f64>> {
    if m.rows() == 0 || m.cols() == 0 {
        return Ok(Vec::new());
    }
    let gram = if m.rows() >= m.cols() {
        m.t_matmul(m)
    } else {
        m.matmul_t(m)
    };
    let gram = SymmetricMatrix::symmetrize(&gram)?;
    Ok(eigenvalues_sym(&gram)?
        .into_iter()
        .map(|l| l.max(0.0).sqrt())
        .collect())
}

/// Spectral norm of a rectangular matrix; zero for an empty one.
pub fn operator_norm(m: &Matrix) -> Result<f64> {
    Ok(singular_values(m)?.first().copied().unwrap_or(0.0))
}

/// `‖Aᵀ B‖₂` for two tall matrices with the same row count.
pub fn cross_norm(a: &Matrix, b: &Matrix) -> Result<f64> {
    operator_norm(&a.t_matmul(b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumStats {
    pub sigma_k: f64,
    pub sigma_k_plus_1: f64,
    pub gap: f64,
    /// `σ_1 / σ_{k+1}`; `+∞` when `σ_{k+1} = 0`.
    pub gamma_k: f64,
    pub stable_rank: f64,
    pub effective_rank: f64,
    pub tail_f: f64,
    pub tail_2: f64,
    pub head_f: f64,
}

pub fn spectrum_stats(decomp: &SpectralDecomposition, k: usize) -> Result<SpectrumStats> {
    spectrum_stats_from_values(decomp.eigenvalues(), k)
}

/// Same as [`spectrum_stats`] for a bare descending eigenvalue vector.
pub fn spectrum_stats_from_values(values: &[f64], k: usize) -> Result<SpectrumStats> {
    let n = values.len();
    if k < 1 || k >= n {
        return Err(Error::arg("k", format!("need 1 <= k < n = {n}, got {k}")));
    }
    let sigma_k = sigma_at(values, k);
    let sigma_k_plus_1 = sigma_at(values, k + 1);
    let spectral = values.iter().fold(0.0, |m: f64, x| m.max(x.abs()));
    let frob_sq: f64 = values.iter().map(|x| x * x).sum();
    let trace: f64 = values.iter().sum();
    let head_sq: f64 = values[..k].iter().map(|x| x * x).sum();
    let tail_sq: f64 = values[k..].iter().map(|x| x * x).sum();
    let tail_2 = values[k..].iter().fold(0.0, |m: f64, x| m.max(x.abs()));
    let gamma_k = if sigma_k_plus_1 == 0.0 {
        f64::INFINITY
    } else {
        values[0] / sigma_k_plus_1
    };
    let (stable_rank, effective_rank) = if spectral == 0.0 {
        (0.0, 0.0)
    } else {
        (frob_sq / (spectral * spectral), trace / spectral)
    };
    Ok(SpectrumStats {
        sigma_k,
        sigma_k_plus_1,
        gap: sigma_k - sigma_k_plus_1,
        gamma_k,
        stable_rank,
        effective_rank,
        tail_f: tail_sq.sqrt(),
        tail_2,
        head_f: head_sq.sqrt(),
    })
}

/// Largest principal-angle sine between `Range(U)` and `Range(V)`, computed
/// as `‖(I − VVᵀ)U‖₂`.
pub fn principal_angle_sin(u: &Matrix, v: &Matrix) -> Result<f64> {
    if u.rows() != v.rows() {
        return Err(Error::arg("V", "row count differs from U"));
    }
    for (name, m) in [("U", u), ("V", v)] {
        if m.cols() > 0 && m.orthonormality_defect() > ORTHONORMAL_TOL {
            return Err(Error::arg(name, "columns are not orthonormal"));
        }
    }
    if u.cols() == 0 {
        return Ok(0.0);
    }
    if v.cols() == 0 {
        return Ok(1.0);
    }
    let residual = u.sub(&v.matmul(&v.t_matmul(u)));
    Ok(operator_norm(&residual)?.clamp(0.0, 1.0))
}

/// Minimal spikeness constant `μ₀ = n ‖A‖_max / ‖A‖_F`.
pub fn spikeness(a: &SymmetricMatrix) -> Result<f64> {
    let frob = a.frobenius_norm();
    if frob == 0.0 {
        return Err(Error::domain("spikeness is undefined for the zero matrix"));
    }
    Ok(a.n() as f64 * a.max_abs() / frob)
}

/// Convenience: eigendecompose and report stats in one call.
pub fn stats_of(a: &SymmetricMatrix, k: usize) -> Result<SpectrumStats> {
    spectrum_stats(&eig_sym(a)?, k)
}
