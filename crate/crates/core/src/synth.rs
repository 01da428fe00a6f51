//! Seeded generators: spectra, Haar bases, observation masks, GOE noise and
//! Gaussian samples.
//!
//! Every generator draws from an [`RngStream`], so output is a pure function
//! of the arguments and `(seed, stream_id)`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{Observation, ObservationSet, SampleSet};
use crate::linalg::{eig_sym, spectral_norm, Matrix, SymmetricMatrix};

/// Identifies the random generator and Gaussian transform in reports.
pub const GENERATOR_VERSION: &str = "chacha20 (rand_chacha 0.9), normal via rand_distr 0.5 ziggurat";

/// Clipping tolerance for negative eigenvalues in [`mvn_samples`].
pub const PSD_CLIP_RTOL: f64 = 1e-10;
/// Eigenvalues below `−PSD_REJECT_RTOL · ‖A‖₂` make [`mvn_samples`] fail.
pub const PSD_REJECT_RTOL: f64 = 1e-6;

/// A deterministic random stream keyed by `(seed, stream_id)`.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha20Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RngStream {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn sign(&mut self) -> f64 {
        if self.rng.random::<bool>() {
            1.0
        } else {
            -1.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum SpectrumKind {
    PowerLaw { beta: f64 },
    Exponential { c: f64 },
    Explicit(Vec<f64>),
}

impl fmt::Display for SpectrumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectrumKind::PowerLaw { beta } => write!(f, "powerlaw:{beta}"),
            SpectrumKind::Exponential { c } => write!(f, "exponential:{c}"),
            SpectrumKind::Explicit(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "explicit:{}", parts.join(","))
            }
        }
    }
}

impl FromStr for SpectrumKind {
    type Err = Error;

    /// Parses `powerlaw:<beta>`, `exponential:<c>` or `explicit:<v1>,<v2>,...`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: String| Error::config("spectrum", msg);
        let (kind, arg) = s
            .split_once(':')
            .ok_or_else(|| bad(format!("expected `kind:args`, got `{s}`")))?;
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| bad(format!("`{t}` is not a number")))
        };
        let out = match kind.trim() {
            "powerlaw" => SpectrumKind::PowerLaw { beta: num(arg)? },
            "exponential" | "exp" => SpectrumKind::Exponential { c: num(arg)? },
            "explicit" => SpectrumKind::Explicit(arg.split(',').map(num).collect::<Result<_>>()?),
            other => return Err(bad(format!("unknown spectrum kind `{other}`"))),
        };
        Ok(out)
    }
}

impl From<SpectrumKind> for String {
    fn from(k: SpectrumKind) -> String {
        k.to_string()
    }
}

impl TryFrom<String> for SpectrumKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSpec {
    pub kind: SpectrumKind,
    pub n: usize,
}

/// Descending nonnegative eigenvalues: `j^{−β}`, `e^{−cj}` (`j ≥ 1`) or a
/// sorted copy of an explicit list.
pub fn make_spectrum(spec: &SpectrumSpec) -> Result<Vec<f64>> {
    let n = spec.n;
    if n < 1 {
        return Err(Error::arg("n", "must be at least 1"));
    }
    match &spec.kind {
        SpectrumKind::PowerLaw { beta } => {
            if !(*beta > 0.0) || !beta.is_finite() {
                return Err(Error::arg("beta", format!("must be positive, got {beta}")));
            }
            Ok((1..=n).map(|j| (j as f64).powf(-beta)).collect())
        }
        SpectrumKind::Exponential { c } => {
            if !(*c > 0.0) || !c.is_finite() {
                return Err(Error::arg("c", format!("must be positive, got {c}")));
            }
            Ok((1..=n).map(|j| (-c * j as f64).exp()).collect())
        }
        SpectrumKind::Explicit(v) => {
            if v.len() != n {
                return Err(Error::arg(
                    "spectrum",
                    format!("explicit list has {} values, expected {n}", v.len()),
                ));
            }
            if v.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
                return Err(Error::arg("spectrum", "explicit values must be finite and nonnegative"));
            }
            let mut out = v.clone();
            out.sort_by(|a, b| b.total_cmp(a));
            Ok(out)
        }
    }
}

/// Haar-distributed orthogonal matrix: Householder QR of a Gaussian matrix
/// with the triangular factor's diagonal made positive.
pub fn haar_orthogonal(n: usize, rng: &mut RngStream) -> Result<Matrix> {
    if n < 1 {
        return Err(Error::arg("n", "must be at least 1"));
    }
    let mut a = Matrix::from_fn(n, n, |_, _| rng.normal());
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut signs = vec![1.0; n];
    for j in 0..n {
        let norm = (j..n).map(|i| a[(i, j)] * a[(i, j)]).sum::<f64>().sqrt();
        let x0 = a[(j, j)];
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (j..n).map(|i| a[(i, j)]).collect();
        v[0] -= alpha;
        let vnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            signs[j] = if x0 < 0.0 { -1.0 } else { 1.0 };
            reflectors.push(Vec::new());
            continue;
        }
        v.iter_mut().for_each(|x| *x /= vnorm);
        for c in j..n {
            let s: f64 = (j..n).map(|i| v[i - j] * a[(i, c)]).sum();
            for i in j..n {
                a[(i, c)] -= 2.0 * v[i - j] * s;
            }
        }
        signs[j] = if alpha < 0.0 { -1.0 } else { 1.0 };
        reflectors.push(v);
    }
    // Q = H_0 H_1 ... H_{n−1}, applied right-to-left to the identity.
    let mut q = Matrix::identity(n);
    for (j, v) in reflectors.iter().enumerate().rev() {
        if v.is_empty() {
            continue;
        }
        for c in 0..n {
            let s: f64 = (j..n).map(|i| v[i - j] * q[(i, c)]).sum();
            if s != 0.0 {
                for i in j..n {
                    q[(i, c)] -= 2.0 * v[i - j] * s;
                }
            }
        }
    }
    Ok(q.scale_columns(&signs))
}

/// `A = U diag(σ) Uᵀ`, symmetrized.
pub fn psd_from_spectrum(spectrum: &[f64], basis: &Matrix) -> Result<SymmetricMatrix> {
    let n = spectrum.len();
    if n == 0 || basis.rows() != n || basis.cols() != n {
        return Err(Error::arg(
            "basis",
            format!("expected {n}x{n}, got {}x{}", basis.rows(), basis.cols()),
        ));
    }
    SymmetricMatrix::symmetrize(&basis.scale_columns(spectrum).matmul_t(basis))
}

/// Includes each upper-triangle entry (diagonal included) independently with probability `p`.
pub fn bernoulli_observe(a: &SymmetricMatrix, p: f64, rng: &mut RngStream) -> Result<ObservationSet> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::arg("p", format!("must lie in (0, 1], got {p}")));
    }
    let n = a.n();
    let mut entries = Vec::new();
    for i in 0..n {
        for j in i..n {
            if rng.uniform() < p {
                entries.push(Observation {
                    i: i + 1,
                    j: j + 1,
                    value: a[(i, j)],
                });
            }
        }
    }
    ObservationSet::new(n, p, entries)
}

/// Symmetric noise with i.i.d. `N(0, ν²/n)` entries on and above the diagonal.
pub fn goe_noise(n: usize, nu: f64, rng: &mut RngStream) -> Result<SymmetricMatrix> {
    if n < 1 {
        return Err(Error::arg("n", "must be at least 1"));
    }
    if !(nu >= 0.0) || !nu.is_finite() {
        return Err(Error::arg("nu", format!("must be finite and nonnegative, got {nu}")));
    }
    let sd = nu / (n as f64).sqrt();
    Ok(SymmetricMatrix::from_upper(n, |_, _| sd * rng.normal()))
}

/// A GOE draw rescaled to spectral norm exactly `target_norm`.
pub fn scaled_perturbation(n: usize, target_norm: f64, rng: &mut RngStream) -> Result<SymmetricMatrix> {
    if !(target_norm >= 0.0) || !target_norm.is_finite() {
        return Err(Error::arg("target_norm", "must be finite and nonnegative"));
    }
    let draw = goe_noise(n, 1.0, rng)?;
    if target_norm == 0.0 {
        return Ok(SymmetricMatrix::zeros(n));
    }
    let s = spectral_norm(&draw)?;
    if s == 0.0 {
        return Err(Error::Numerical("noise draw has zero norm".into()));
    }
    Ok(draw.scaled(target_norm / s))
}

/// Diagonal `δ · diag(±1)` with independent fair signs; spectral norm is exactly `δ`.
pub fn rademacher_diagonal(n: usize, delta: f64, rng: &mut RngStream) -> Result<SymmetricMatrix> {
    if n < 1 {
        return Err(Error::arg("n", "must be at least 1"));
    }
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::arg("delta", "must be finite and nonnegative"));
    }
    let d: Vec<f64> = (0..n).map(|_| delta * rng.sign()).collect();
    Ok(SymmetricMatrix::from_diag(&d))
}

/// `N` draws `X = U diag(sqrt(σ)) z` from `N(0, A)`.
pub fn mvn_samples(a: &SymmetricMatrix, count: usize, rng: &mut RngStream) -> Result<SampleSet> {
    if count < 1 {
        return Err(Error::arg("N", "must be at least 1"));
    }
    let d = eig_sym(a)?;
    let norm = d.eigenvalues().iter().fold(0.0, |m: f64, x| m.max(x.abs()));
    if let Some(&worst) = d.eigenvalues().last() {
        if worst < -PSD_REJECT_RTOL * norm {
            return Err(Error::domain_with("covariance is not positive semidefinite", worst));
        }
    }
    let roots: Vec<f64> = d.eigenvalues().iter().map(|&l| l.max(0.0).sqrt()).collect();
    let factor = d.basis().scale_columns(&roots);
    let n = a.n();
    let z = Matrix::from_fn(count, n, |_, _| rng.normal());
    SampleSet::new(z.matmul_t(&factor))
}
