//! Finite-dimensional stand-in for self-adjoint operators: Hermitian
//! matrices, clustered spectral decomposition, matrix functions, and
//! Schatten p-norms.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar_fn::ScalarFunction;
use crate::C64;

/// Absolute tolerance for the Hermitian symmetry check.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// A d x d complex matrix validated to be Hermitian.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    entries: DMatrix<C64>,
}

impl HermitianOperator {
    /// Validates Hermitian symmetry to `HERMITIAN_TOL` (absolute).
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        assert_eq!(entries.nrows(), entries.ncols(), "matrix must be square");
        let dev = hermiticity_deviation(&entries);
        if dev > HERMITIAN_TOL {
            return Err(Error::NonHermitianInput {
                deviation: dev,
                tol: HERMITIAN_TOL,
            });
        }
        Ok(HermitianOperator { entries })
    }

    /// Diagonal operator from real entries.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let d = diag.len();
        let m = DMatrix::from_fn(d, d, |i, j| {
            if i == j {
                C64::new(diag[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        HermitianOperator { entries: m }
    }

    /// Real symmetric matrix from row-major real entries.
    pub fn from_real_rows(d: usize, rows: &[f64]) -> Result<Self> {
        assert_eq!(rows.len(), d * d);
        Self::new(DMatrix::from_fn(d, d, |i, j| {
            C64::new(rows[i * d + j], 0.0)
        }))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.entries
    }

    /// Operator norm (largest |eigenvalue|).
    pub fn operator_norm(&self) -> f64 {
        self.entries
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(0.0_f64, |a, &v| a.max(v.abs()))
    }

    /// A + B, exactly Hermitian when both inputs are.
    pub fn add(&self, other: &HermitianOperator) -> HermitianOperator {
        HermitianOperator {
            entries: &self.entries + &other.entries,
        }
    }

    /// A + c X for real c.
    pub fn add_scaled(&self, c: f64, other: &HermitianOperator) -> HermitianOperator {
        HermitianOperator {
            entries: &self.entries + &other.entries * C64::new(c, 0.0),
        }
    }

    pub fn scale(&self, c: f64) -> HermitianOperator {
        HermitianOperator {
            entries: &self.entries * C64::new(c, 0.0),
        }
    }
}

/// max_ij |a_ij - conj(a_ji)|.
pub fn hermiticity_deviation(m: &DMatrix<C64>) -> f64 {
    let mut dev = 0.0_f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// One merged eigenvalue cluster: contiguous range of sorted eigenindices
/// sharing a representative value.
#[derive(Clone, Debug)]
pub struct Cluster {
    pub representative: f64,
    /// Range of eigenindices (columns of `basis`) in the cluster.
    pub range: std::ops::Range<usize>,
}

impl Cluster {
    pub fn multiplicity(&self) -> usize {
        self.range.len()
    }
}

/// Clustered spectral decomposition of a Hermitian operator.
#[derive(Clone, Debug)]
pub struct SpectralData {
    clusters: Vec<Cluster>,
    /// Unitary of eigenvectors, columns sorted by ascending eigenvalue.
    basis: DMatrix<C64>,
    /// Raw sorted eigenvalues.
    eigenvalues: Vec<f64>,
    /// cluster ordinal for each eigenindex.
    cluster_of: Vec<usize>,
    cluster_tol: f64,
}

impl SpectralData {
    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }

    pub fn basis(&self) -> &DMatrix<C64> {
        &self.basis
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn cluster_of(&self) -> &[usize] {
        &self.cluster_of
    }

    pub fn cluster_tol(&self) -> f64 {
        self.cluster_tol
    }

    /// Representative eigenvalue for each eigenindex.
    pub fn representative_of(&self, eigenindex: usize) -> f64 {
        self.clusters[self.cluster_of[eigenindex]].representative
    }

    /// Spectral projection onto cluster `i`.
    pub fn projection(&self, i: usize) -> DMatrix<C64> {
        let cols = self.basis.columns(
            self.clusters[i].range.start,
            self.clusters[i].multiplicity(),
        );
        cols * cols.adjoint()
    }

    /// U g(Lambda) U* for a scalar map g of the cluster representatives.
    pub fn apply_scalar<F: Fn(f64) -> C64>(&self, g: F) -> DMatrix<C64> {
        let d = self.dim();
        let diag: Vec<C64> = (0..d).map(|k| g(self.representative_of(k))).collect();
        let mut scaled = self.basis.clone();
        for (k, col) in scaled.column_iter_mut().enumerate() {
            let mut col = col;
            col *= diag[k];
        }
        scaled * self.basis.adjoint()
    }
}

/// Default clustering tolerance, 1e-8 (1 + ||A||_2).
pub fn default_cluster_tol(a: &HermitianOperator) -> f64 {
    1e-8 * (1.0 + a.operator_norm())
}

/// Eigendecomposition with eigenvalue clustering: eigenvalues whose sorted
/// neighbors lie within `cluster_tol` merge into one cluster whose
/// representative is the multiplicity-weighted mean. Near-degeneracies are
/// thereby routed into the confluent divided-difference branch downstream.
pub fn decompose(a: &HermitianOperator, cluster_tol: f64) -> Result<SpectralData> {
    assert!(cluster_tol >= 0.0, "cluster_tol must be nonnegative");
    let d = a.dim();
    let eig = a
        .matrix()
        .clone()
        .try_symmetric_eigen(f64::EPSILON, 10_000)
        .ok_or(Error::EigensolverFailure { dim: d })?;

    // sort eigenpairs ascending
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut basis = DMatrix::zeros(d, d);
    for (new, &old) in order.iter().enumerate() {
        basis.set_column(new, &eig.eigenvectors.column(old));
    }

    // greedy chain merge of adjacent eigenvalues
    let mut clusters = Vec::new();
    let mut start = 0;
    for k in 1..=d {
        let split = k == d || eigenvalues[k] - eigenvalues[k - 1] > cluster_tol;
        if split {
            let range = start..k;
            let representative =
                eigenvalues[range.clone()].iter().sum::<f64>() / range.len() as f64;
            clusters.push(Cluster {
                representative,
                range,
            });
            start = k;
        }
    }
    let mut cluster_of = vec![0; d];
    for (ci, c) in clusters.iter().enumerate() {
        for k in c.range.clone() {
            cluster_of[k] = ci;
        }
    }

    Ok(SpectralData {
        clusters,
        basis,
        eigenvalues,
        cluster_of,
        cluster_tol,
    })
}

/// Schatten exponent p in [1, inf].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchattenIndex {
    p: f64,
}

impl SchattenIndex {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidP(p));
        }
        Ok(SchattenIndex { p })
    }

    pub fn infinity() -> Self {
        SchattenIndex { p: f64::INFINITY }
    }

    pub fn value(&self) -> f64 {
        self.p
    }

    pub fn is_infinite(&self) -> bool {
        self.p.is_infinite()
    }

    /// True iff 1 < p < inf, the range the derivative theory covers;
    /// p = 1 and p = inf are admitted for diagnostics only.
    pub fn in_theorem_scope(&self) -> bool {
        self.p > 1.0 && self.p.is_finite()
    }

    /// Conjugate exponent q with 1/p + 1/q = 1.
    pub fn conjugate(&self) -> SchattenIndex {
        if self.p.is_infinite() {
            SchattenIndex { p: 1.0 }
        } else if self.p == 1.0 {
            SchattenIndex::infinity()
        } else {
            SchattenIndex {
                p: self.p / (self.p - 1.0),
            }
        }
    }
}

impl Serialize for SchattenIndex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.p.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.p)
        }
    }
}

impl<'de> Deserialize<'de> for SchattenIndex {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        let raw = Raw::deserialize(d)?;
        let p = match raw {
            Raw::Num(v) => v,
            Raw::Str(s) if s == "inf" => f64::INFINITY,
            Raw::Str(s) => {
                return Err(serde::de::Error::custom(format!(
                    "p must be a number or \"inf\", got {s:?}"
                )))
            }
        };
        SchattenIndex::new(p).map_err(|e| serde::de::Error::custom(e.to_string()))
    }
}

/// Singular values of a general complex matrix; Hermitian inputs go
/// through the symmetric eigensolver (absolute eigenvalues) for accuracy.
pub fn singular_values(x: &DMatrix<C64>) -> Vec<f64> {
    let scale = x.iter().fold(0.0_f64, |a, v| a.max(v.norm()));
    if hermiticity_deviation(x) <= 1e-12 * (1.0 + scale) {
        x.clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .map(|v| v.abs())
            .collect()
    } else {
        x.clone()
            .svd(false, false)
            .singular_values
            .iter()
            .copied()
            .collect()
    }
}

/// (sum sigma_i^p)^(1/p); the largest singular value for p = inf.
pub fn schatten_norm(x: &DMatrix<C64>, p: SchattenIndex) -> f64 {
    let sv = singular_values(x);
    if p.is_infinite() {
        return sv.iter().fold(0.0_f64, |a, &s| a.max(s));
    }
    let pv = p.value();
    if pv == 2.0 {
        // Frobenius, cheaper and exact
        return x.norm();
    }
    let largest = sv.iter().fold(0.0_f64, |a, &s| a.max(s));
    if largest == 0.0 {
        return 0.0;
    }
    // scale out the largest singular value to dodge overflow for large p
    let sum: f64 = sv.iter().map(|&s| (s / largest).powf(pv)).sum();
    largest * sum.powf(1.0 / pv)
}

/// U f(Lambda) U* with the clustered decomposition at the default
/// tolerance. Hermitian for real-valued f on the spectrum.
pub fn apply_function(f: &ScalarFunction, a: &HermitianOperator) -> Result<DMatrix<C64>> {
    let sd = decompose(a, default_cluster_tol(a))?;
    Ok(sd.apply_scalar(|lambda| f.raw_eval(0, lambda)))
}

/// Standard complex Gaussian sampled by Box-Muller from a seeded stream.
fn complex_gaussian<R: Rng>(rng: &mut R) -> C64 {
    let u1: f64 = rng.gen::<f64>().max(1e-300);
    let u2: f64 = rng.gen();
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = 2.0 * std::f64::consts::PI * u2;
    // variance 1/2 per component -> unit-variance complex entry
    C64::new(
        r * theta.cos() / std::f64::consts::SQRT_2,
        r * theta.sin() / std::f64::consts::SQRT_2,
    )
}

/// Haar-like random unitary: QR of a complex Ginibre matrix with the R
/// diagonal phases normalized. Deterministic in the seed.
pub fn random_unitary(seed: u64, d: usize) -> DMatrix<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let g = DMatrix::from_fn(d, d, |_, _| complex_gaussian(&mut rng));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for k in 0..d {
        let rkk = r[(k, k)];
        let phase = if rkk.norm() > 0.0 {
            rkk / rkk.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let mut col = q.column_mut(k);
        col *= phase;
    }
    q
}

/// Seeded random Hermitian operator. With `spectrum_spec`, returns
/// U diag(spec) U* for a seeded random unitary; otherwise a symmetrized
/// Gaussian ensemble draw scaled to unit operator norm.
pub fn random_hermitian(seed: u64, d: usize, spectrum_spec: Option<&[f64]>) -> HermitianOperator {
    assert!(d >= 1);
    match spectrum_spec {
        Some(spec) => {
            assert_eq!(spec.len(), d, "spectrum length must equal dimension");
            let u = random_unitary(seed, d);
            let mut scaled = u.clone();
            for (k, col) in scaled.column_iter_mut().enumerate() {
                let mut col = col;
                col *= C64::new(spec[k], 0.0);
            }
            let m = &scaled * u.adjoint();
            // exact symmetrization wipes rounding skew
            let sym = (&m + m.adjoint()) * C64::new(0.5, 0.0);
            HermitianOperator { entries: sym }
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = DMatrix::from_fn(d, d, |_, _| complex_gaussian(&mut rng));
            let sym = (&g + g.adjoint()) * C64::new(0.5, 0.0);
            let h = HermitianOperator { entries: sym };
            let norm = h.operator_norm();
            if norm > 0.0 {
                h.scale(1.0 / norm)
            } else {
                h
            }
        }
    }
}
