//! Random instances and independent measurements of the classical
//! matrix inequalities, shared by the property tests and the acceptance run.
#![allow(dead_code)]

use lowrank::linalg::{eig_sym, eigenvalues_sym, operator_norm, spectral_norm, Matrix, SymmetricMatrix};
use lowrank::synth::{haar_orthogonal, RngStream};

pub fn random_symmetric(n: usize, rng: &mut RngStream) -> SymmetricMatrix {
    SymmetricMatrix::from_upper(n, |_, _| rng.normal())
}

pub fn random_psd(n: usize, rng: &mut RngStream) -> SymmetricMatrix {
    let g = Matrix::from_fn(n, n, |_, _| rng.normal());
    SymmetricMatrix::symmetrize(&g.matmul_t(&g)).unwrap()
}

/// First `m` columns of a Haar-distributed orthogonal matrix.
pub fn random_orthonormal(n: usize, m: usize, rng: &mut RngStream) -> Matrix {
    haar_orthogonal(n, rng).unwrap().columns(0, m)
}

/// Smallest `σ_i(X) + σ_j(Y) − σ_{i+j−1}(X+Y)` over all valid `(i, j)`.
pub fn weyl_slack(x: &SymmetricMatrix, y: &SymmetricMatrix) -> f64 {
    let n = x.n();
    let sx = eigenvalues_sym(x).unwrap();
    let sy = eigenvalues_sym(y).unwrap();
    let sxy = eigenvalues_sym(&x.add(y)).unwrap();
    let mut worst = f64::INFINITY;
    for i in 1..=n {
        for j in 1..=(n + 1 - i) {
            worst = worst.min(sx[i - 1] + sy[j - 1] - sxy[i + j - 2]);
        }
    }
    worst
}

/// Smallest `‖Y‖₂ − |σ_j(X+Y) − σ_j(X)|` over `j`.
pub fn weyl_perturbation_slack(x: &SymmetricMatrix, y: &SymmetricMatrix) -> f64 {
    let sx = eigenvalues_sym(x).unwrap();
    let sxy = eigenvalues_sym(&x.add(y)).unwrap();
    let ny = spectral_norm(y).unwrap();
    sx.iter()
        .zip(&sxy)
        .map(|(a, b)| ny - (a - b).abs())
        .fold(f64::INFINITY, f64::min)
}

/// Smallest slack in `σ_i(X) ≥ σ_i(PᵀXP) ≥ σ_{n−m+i}(X)`.
pub fn poincare_slack(x: &SymmetricMatrix, p: &Matrix) -> f64 {
    let n = x.n();
    let m = p.cols();
    let sx = eigenvalues_sym(x).unwrap();
    let sy = eigenvalues_sym(&x.compress(p)).unwrap();
    let mut worst = f64::INFINITY;
    for i in 0..m {
        worst = worst.min(sx[i] - sy[i]).min(sy[i] - sx[n - m + i]);
    }
    worst
}

/// Relative defect of `‖X‖_F² = ‖X − PPᵀXPPᵀ‖_F² + ‖PPᵀXPPᵀ‖_F²`.
pub fn pythagorean_defect(x: &SymmetricMatrix, p: &Matrix) -> f64 {
    let proj = x.project(p);
    let lhs = x.frobenius_norm().powi(2);
    let rhs = x.sub(&proj).frobenius_norm().powi(2) + proj.frobenius_norm().powi(2);
    (lhs - rhs).abs() / lhs
}

/// Smallest slack in `‖Q_{n−j}ᵀ P_i‖₂ ≤ ‖X − Y‖₂ / (σ_i(X) − σ_{j+1}(Y))` over
/// the `(i, j)` where the denominator is positive, with `P_i` the top-`i`
/// eigenvectors of `X` and `Q_{n−j}` the bottom `n − j` of `Y`.
pub fn davis_kahan_slack(x: &SymmetricMatrix, y: &SymmetricMatrix) -> Option<f64> {
    let n = x.n();
    let dx = eig_sym(x).unwrap();
    let dy = eig_sym(y).unwrap();
    let diff = spectral_norm(&x.sub(y)).unwrap();
    let mut worst: Option<f64> = None;
    for i in 1..n {
        for j in 0..n {
            let denom = dx.sigma(i) - dy.sigma(j + 1);
            if denom <= 0.0 {
                continue;
            }
            let lhs = operator_norm(&dy.bottom(j).t_matmul(&dx.top(i))).unwrap();
            let slack = diff / denom - lhs;
            worst = Some(worst.map_or(slack, |w: f64| w.min(slack)));
        }
    }
    worst
}

/// A random symmetric matrix of rank at most `k`.
pub fn random_rank_k(n: usize, k: usize, scale: f64, rng: &mut RngStream) -> SymmetricMatrix {
    let v = Matrix::from_fn(n, k, |_, _| rng.normal());
    let d: Vec<f64> = (0..k).map(|_| scale * rng.normal()).collect();
    SymmetricMatrix::symmetrize(&v.scale_columns(&d).matmul_t(&v)).unwrap()
}

/// Eckart–Young margin `min_B ‖A − B‖_F − ‖A − A_k‖_F` over `candidates`
/// random rank-`k` matrices, half of them perturbations of `A_k` itself.
pub fn eckart_young_margin(a: &SymmetricMatrix, k: usize, candidates: usize, rng: &mut RngStream) -> f64 {
    let n = a.n();
    let d = eig_sym(a).unwrap();
    let best = a.sub(&d.truncate(k).unwrap()).frobenius_norm();
    let scale = spectral_norm(a).unwrap();
    let mut worst = f64::INFINITY;
    for c in 0..candidates {
        let b = if c % 2 == 0 {
            random_rank_k(n, k, scale, rng)
        } else {
            // Rotate the top-k eigenbasis slightly and rescale its eigenvalues.
            let u = d.top(k);
            let g = Matrix::from_fn(n, k, |_, _| 1e-3 * rng.normal());
            let v = u.add(&g);
            let vals: Vec<f64> = (1..=k).map(|j| d.sigma(j) * (1.0 + 1e-3 * rng.normal())).collect();
            SymmetricMatrix::symmetrize(&v.scale_columns(&vals).matmul_t(&v)).unwrap()
        };
        worst = worst.min(a.sub(&b).frobenius_norm() - best);
    }
    worst
}

/// Largest excess of `σ_min(Vᵀ Û_k)` over the closed-form alignment, across
/// `samples` random `(k − m1)`-dimensional subspaces `V` of the envelope band.
pub fn w_oracle_excess(
    a: &SymmetricMatrix,
    a_hat: &SymmetricMatrix,
    k: usize,
    eps: f64,
    samples: usize,
    rng: &mut RngStream,
) -> f64 {
    use lowrank::linalg::singular_values;
    use lowrank::probe::construct_w;
    let d = eig_sym(a).unwrap();
    let d_hat = eig_sym(a_hat).unwrap();
    let aligned = construct_w(&d, &d_hat, k, eps).unwrap();
    let env = aligned.envelope;
    let r = k - env.m1;
    if r == 0 {
        return f64::NEG_INFINITY;
    }
    let band = d.basis_range(env.m1, env.m2);
    let hat_top = d_hat.top(k);
    let width = env.m2 - env.m1;
    let mut worst = f64::NEG_INFINITY;
    for s in 0..samples {
        // Alternate uniform subspaces with small rotations of the closed form.
        let coeffs = if s % 2 == 0 {
            random_orthonormal(width, r, rng)
        } else {
            let p = band.t_matmul(&aligned.w);
            let g = Matrix::from_fn(width, r, |_, _| 1e-2 * rng.normal());
            orthonormalize(&p.add(&g))
        };
        let v = band.matmul(&coeffs);
        let sv = singular_values(&v.t_matmul(&hat_top)).unwrap();
        worst = worst.max(sv[r - 1] - aligned.alignment);
    }
    worst
}

/// Modified Gram–Schmidt on the columns.
pub fn orthonormalize(m: &Matrix) -> Matrix {
    let (rows, cols) = (m.rows(), m.cols());
    let mut q: Vec<Vec<f64>> = (0..cols).map(|j| m.column(j)).collect();
    for j in 0..cols {
        for i in 0..j {
            let d: f64 = q[i].iter().zip(&q[j]).map(|(a, b)| a * b).sum();
            let qi = q[i].clone();
            for (x, y) in q[j].iter_mut().zip(&qi) {
                *x -= d * y;
            }
        }
        let norm = q[j].iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in q[j].iter_mut() {
            *x /= norm;
        }
    }
    Matrix::from_fn(rows, cols, |i, j| q[j][i])
}

/// A spectrum of length `n` with a cluster around position `k`, so the
/// envelope band is wider than `k − m1`.
pub fn clustered_spectrum(n: usize, k: usize, rng: &mut RngStream) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|j| {
            if j + 2 < k {
                4.0 + rng.uniform()
            } else if j < k + 3 {
                1.0 + 0.1 * rng.uniform()
            } else {
                0.1 * rng.uniform()
            }
        })
        .collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}
