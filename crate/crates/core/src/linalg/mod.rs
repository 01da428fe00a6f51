//! Dense symmetric linear algebra: storage, eigensolver, truncation, norms.

mod eigen;
mod matrix;
mod spectrum;

pub use eigen::{eig_sym, eigenvalues_sym, truncate, SpectralDecomposition};
pub use matrix::{Matrix, SymmetricMatrix};
pub use spectrum::{
    cross_norm, norms, operator_norm, principal_angle_sin, singular_values, spectral_norm,
    spectrum_stats, spectrum_stats_from_values, spikeness, stats_of, NormTriple, SpectrumStats,
    ORTHONORMAL_TOL,
};

pub(crate) use eigen::sigma_at;
