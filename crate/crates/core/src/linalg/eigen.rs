//! Dense symmetric eigensolver.
//!
//! Householder reduction to tridiagonal form followed by the implicit QL
//! iteration with Wilkinson-style shifts, in the EISPACK `tred2`/`tql2`
//! arrangement. Every loop runs in a fixed order, so the output is a
//! deterministic function of the input bits.
//!
//! Eigenpairs are returned with eigenvalues in descending order. Each
//! eigenvector is sign-normalized so that its largest-magnitude component
//! (first such index) is positive. Exactly equal eigenvalues are ordered by the
//! index of that component, which pins down the basis for permutation-degenerate
//! inputs such as diagonal matrices.

use crate::error::{Error, Result};
use crate::linalg::matrix::{Matrix, SymmetricMatrix};

/// QL sweeps allowed per eigenvalue before giving up.
const MAX_QL_ITERATIONS: usize = 64;

/// Eigenvalues in descending order with the matching orthonormal eigenbasis (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    basis: Matrix,
}

impl SpectralDecomposition {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    /// The 1-based `j`-th eigenvalue, with `σ_0 = +∞` and `σ_j = -∞` past the end.
    pub fn sigma(&self, j: usize) -> f64 {
        sigma_at(&self.eigenvalues, j)
    }

    /// Eigenvectors `lo+1 ..= hi` (1-based), i.e. columns `lo..hi`.
    pub fn basis_range(&self, lo: usize, hi: usize) -> Matrix {
        self.basis.columns(lo, hi)
    }

    /// Top-`k` eigenvectors.
    pub fn top(&self, k: usize) -> Matrix {
        self.basis.columns(0, k)
    }

    /// Eigenvectors `k+1 ..= n`, the orthogonal complement of [`Self::top`].
    pub fn bottom(&self, k: usize) -> Matrix {
        self.basis.columns(k, self.n())
    }

    /// `Σ_{i in lo..hi} σ_i u_i u_iᵀ` over 0-based columns.
    pub fn partial_sum(&self, lo: usize, hi: usize) -> SymmetricMatrix {
        let u = self.basis_range(lo, hi);
        let scaled = u.scale_columns(&self.eigenvalues[lo..hi]);
        SymmetricMatrix::symmetrize(&scaled.matmul_t(&u)).expect("square by construction")
    }

    pub fn reconstruct(&self) -> SymmetricMatrix {
        self.partial_sum(0, self.n())
    }

    /// The rank-`k` truncation `A_k = Σ_{i≤k} σ_i u_i u_iᵀ`.
    pub fn truncate(&self, k: usize) -> Result<SymmetricMatrix> {
        truncate(self, k)
    }
}

pub(crate) fn sigma_at(values: &[f64], j: usize) -> f64 {
    if j == 0 {
        f64::INFINITY
    } else if j > values.len() {
        f64::NEG_INFINITY
    } else {
        values[j - 1]
    }
}

/// Full eigendecomposition of a symmetric matrix.
pub fn eig_sym(a: &SymmetricMatrix) -> Result<SpectralDecomposition> {
    check_finite(a)?;
    let n = a.n();
    if a.is_diagonal() {
        return Ok(order_pairs(a.diagonal(), Matrix::identity(n)));
    }
    let mut work = a.as_matrix().clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut work, &mut d, &mut e, true);
    // QL rotates rows of the transposed accumulator, which keeps updates contiguous.
    let mut z = work.transpose();
    ql_implicit(&mut d, &mut e, Some(&mut z))?;
    Ok(order_pairs(d, z))
}

/// Eigenvalues only, in descending order.
pub fn eigenvalues_sym(a: &SymmetricMatrix) -> Result<Vec<f64>> {
    check_finite(a)?;
    let n = a.n();
    let mut work = a.as_matrix().clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut work, &mut d, &mut e, false);
    ql_implicit(&mut d, &mut e, None)?;
    d.sort_by(|x, y| y.total_cmp(x));
    Ok(d)
}

/// Returns `A_k` from a decomposition; `k = 0` gives the zero matrix.
pub fn truncate(decomp: &SpectralDecomposition, k: usize) -> Result<SymmetricMatrix> {
    if k > decomp.n() {
        return Err(Error::arg(
            "k",
            format!("truncation rank {k} exceeds dimension {}", decomp.n()),
        ));
    }
    Ok(decomp.partial_sum(0, k))
}

fn check_finite(a: &SymmetricMatrix) -> Result<()> {
    if a.as_matrix().is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput("matrix has non-finite entries".into()))
    }
}

/// Householder tridiagonalization (`tred2`). On return `d` holds the diagonal
/// and `e[1..]` the subdiagonal. With `accumulate`, `v` holds the orthogonal
/// transformation; otherwise its contents are scratch.
fn tridiagonalize(v: &mut Matrix, d: &mut [f64], e: &mut [f64], accumulate: bool) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
                v[(j, i)] = 0.0;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }

            for j in 0..i {
                f = d[j];
                v[(j, i)] = f;
                g = e[j] + v[(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    if !accumulate {
        for (j, dj) in d.iter_mut().enumerate() {
            *dj = v[(j, j)];
        }
        e[0] = 0.0;
        return;
    }

    for i in 0..n.saturating_sub(1) {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    v[(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = 0.0;
    }
    v[(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

/// Implicit QL on a symmetric tridiagonal matrix (`tql2`). `z`, when given,
/// holds the accumulated transformation with eigenvectors as rows.
fn ql_implicit(d: &mut [f64], e: &mut [f64], mut z: Option<&mut Matrix>) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }

        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_ITERATIONS {
                    return Err(Error::Numerical(format!(
                        "QL iteration did not converge for eigenvalue {l}"
                    )));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    if let Some(z) = z.as_deref_mut() {
                        rotate_rows(z, i, c, s);
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Applies the plane rotation to rows `i` and `i + 1` of `z`.
#[inline]
fn rotate_rows(z: &mut Matrix, i: usize, c: f64, s: f64) {
    let cols = z.cols();
    let data = z.as_mut_slice();
    let (head, tail) = data.split_at_mut((i + 1) * cols);
    let row_i = &mut head[i * cols..];
    let row_next = &mut tail[..cols];
    for (a, b) in row_i.iter_mut().zip(row_next.iter_mut()) {
        let h = *b;
        *b = s * *a + c * h;
        *a = c * *a - s * h;
    }
}

/// Sorts eigenpairs descending, sign-normalizes and breaks exact ties.
fn order_pairs(values: Vec<f64>, vectors_as_rows: Matrix) -> SpectralDecomposition {
    let n = values.len();
    let mut pairs: Vec<(f64, usize, Vec<f64>)> = (0..n)
        .map(|r| {
            let mut v = vectors_as_rows.row(r).to_vec();
            let lead = leading_index(&v);
            if v[lead] < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            (values[r], lead, v)
        })
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let eigenvalues = pairs.iter().map(|p| p.0).collect();
    let mut basis = Matrix::zeros(n, n);
    for (j, (_, _, v)) in pairs.iter().enumerate() {
        for (i, &x) in v.iter().enumerate() {
            basis[(i, j)] = x;
        }
    }
    SpectralDecomposition { eigenvalues, basis }
}

fn leading_index(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, seed: u64) -> SymmetricMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SymmetricMatrix::from_upper(n, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn identity_has_unit_spectrum_and_identity_basis() {
        let d = eig_sym(&SymmetricMatrix::identity(3)).unwrap();
        assert_eq!(d.eigenvalues(), &[1.0, 1.0, 1.0]);
        assert_eq!(d.basis(), &Matrix::identity(3));
    }

    #[test]
    fn diagonal_input_gives_permutation_basis() {
        let d = eig_sym(&SymmetricMatrix::from_diag(&[1.0, 3.0, 2.0])).unwrap();
        assert_eq!(d.eigenvalues(), &[3.0, 2.0, 1.0]);
        let expected = Matrix::from_rows(&[
            vec![0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
        ])
        .unwrap();
        assert_eq!(d.basis(), &expected);
    }

    #[test]
    fn reconstructs_random_6x6() {
        let a = random_symmetric(6, 11);
        let d = eig_sym(&a).unwrap();
        let resid = d.reconstruct().sub(&a).frobenius_norm();
        assert!(resid <= 1e-10 * a.frobenius_norm(), "residual {resid}");
        assert!(d.basis().orthonormality_defect() <= 1e-10);
        assert!(d.eigenvalues().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn eigenvalues_only_matches_full_solver() {
        for seed in 0..5 {
            let a = random_symmetric(17, seed);
            let full = eig_sym(&a).unwrap();
            let vals = eigenvalues_sym(&a).unwrap();
            for (x, y) in full.eigenvalues().iter().zip(&vals) {
                assert!((x - y).abs() < 1e-12, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn one_by_one() {
        let d = eig_sym(&SymmetricMatrix::from_diag(&[-2.5])).unwrap();
        assert_eq!(d.eigenvalues(), &[-2.5]);
        assert_eq!(d.basis()[(0, 0)], 1.0);
    }

    #[test]
    fn rejects_non_finite() {
        let a = SymmetricMatrix::from_diag(&[1.0, f64::NAN]);
        assert!(matches!(eig_sym(&a), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn truncation_edge_ranks() {
        let a = SymmetricMatrix::from_diag(&[3.0, 2.0, 1.0]);
        let d = eig_sym(&a).unwrap();
        assert_eq!(d.truncate(0).unwrap(), SymmetricMatrix::zeros(3));
        assert_eq!(d.truncate(1).unwrap(), SymmetricMatrix::from_diag(&[3.0, 0.0, 0.0]));
        assert!(d.truncate(3).unwrap().sub(&a).frobenius_norm() < 1e-14);
        assert!(matches!(d.truncate(4), Err(Error::Argument { name: "k", .. })));
    }

    #[test]
    fn bit_reproducible() {
        let a = random_symmetric(25, 3);
        assert_eq!(eig_sym(&a).unwrap(), eig_sym(&a).unwrap());
    }

    #[test]
    fn handles_clustered_and_indefinite_spectra() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 40;
        let a = SymmetricMatrix::from_upper(n, |i, j| {
            let base = if i == j { if i % 2 == 0 { 1.0 } else { -1.0 } } else { 0.0 };
            base + 1e-9 * rng.random_range(-1.0..1.0)
        });
        let d = eig_sym(&a).unwrap();
        assert!(d.reconstruct().sub(&a).frobenius_norm() <= 1e-10 * a.frobenius_norm());
        assert!(d.basis().orthonormality_defect() <= 1e-10);
    }
}
