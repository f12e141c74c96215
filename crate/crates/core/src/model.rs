//! The PGPCA model `y = φ(z) + K(z)(C x + r)` and its EM algorithm.
//!
//! `p(z)` is discretized on landmarks `z_{1:M}` with weights `ω_{1:M}`. Every
//! quantity the M-step needs is collected in one fused pass over the data: the
//! per-sample log-likelihood, the posterior column sums (for `ω`) and the
//! per-landmark residual scatter matrices from which `Γ(q)` is assembled.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::coords::{CoordinateField, FrameCache, FrameField};
use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::exec::{map_fold_chunks, ExecMode};
use crate::kernel::{self, tri_len};
use crate::manifold::{make_landmarks, LandmarkSet, Latent, Manifold};
use crate::numeric::{pairwise_sum, spd_log_det, sym_eigen_desc, KahanSum};

/// Samples per work chunk; fixed so reductions do not depend on thread count.
pub const CHUNK_SAMPLES: usize = 256;

/// Landmark terms this many nats below a sample's largest term are treated as
/// zero posterior mass. `e^-60 ≈ 9e-27`, so even summed over 10^9 landmarks
/// they stay below double-precision resolution of the normalizer.
pub use crate::kernel::LOG_CUTOFF;

/// Relative isotropic noise floor used when `m = n` (or when the residual
/// eigenvalues vanish): `σ² ≥ 1e-6 · tr(Γ)/n`.
pub const SIGMA2_FLOOR_REL: f64 = 1e-6;
const SIGMA2_FLOOR_ABS: f64 = 1e-300;

const LN_TAU: f64 = 1.837_877_066_409_345_5;

/// Frame-local covariance `Λ = σ²I_n + CC'`, with its inverse and
/// log-determinant computed through the `m × m` matrix `σ²I_m + C'C`.
#[derive(Debug, Clone)]
pub struct FrameCovariance {
    sigma2: f64,
    precision: DMatrix<f64>,
    log_det: f64,
}

impl FrameCovariance {
    pub fn new(loading: &DMatrix<f64>, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sigma2 must be positive, got {sigma2}"
            )));
        }
        let n = loading.nrows();
        let m = loading.ncols();
        if m > n {
            return Err(Error::InvalidDimension { m, n });
        }
        let mut precision = DMatrix::identity(n, n) / sigma2;
        let mut log_det = n as f64 * sigma2.ln();
        if m > 0 {
            let inner = DMatrix::identity(m, m) * sigma2 + loading.transpose() * loading;
            let chol = inner.clone().cholesky().ok_or_else(|| {
                Error::InvalidArgument("σ²I + C'C is not positive definite".into())
            })?;
            log_det = (n - m) as f64 * sigma2.ln()
                + 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
            // (σ²I + CC')⁻¹ = (I − C (σ²I + C'C)⁻¹ C') / σ²
            let solved = chol.solve(&loading.transpose());
            precision -= loading * solved / sigma2;
            precision = (&precision + precision.transpose()) * 0.5;
        }
        Ok(Self {
            sigma2,
            precision,
            log_det,
        })
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// `(σ²I_n + CC')⁻¹`.
    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    /// `ln|σ²I_n + CC'|`, which is also `ln|Ψ(z)|` for every `z`.
    pub fn log_det(&self) -> f64 {
        self.log_det
    }
}

/// A fitted (or specified) PGPCA model.
#[derive(Debug, Clone, PartialEq)]
pub struct PgpcaModel {
    pub manifold: Manifold,
    pub coords: CoordinateField,
    pub landmarks: LandmarkSet,
    /// `n × m` loading matrix `C`.
    pub loading: DMatrix<f64>,
    pub sigma2: f64,
}

impl PgpcaModel {
    pub fn new(
        manifold: Manifold,
        coords: CoordinateField,
        landmarks: LandmarkSet,
        loading: DMatrix<f64>,
        sigma2: f64,
    ) -> Result<Self> {
        let model = Self {
            manifold,
            coords,
            landmarks,
            loading,
            sigma2,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.manifold.ambient_dim();
        if self.loading.nrows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.loading.nrows(),
            });
        }
        if self.loading.ncols() > n {
            return Err(Error::InvalidDimension {
                m: self.loading.ncols(),
                n,
            });
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sigma2 must be positive, got {}",
                self.sigma2
            )));
        }
        if self.landmarks.is_empty() || self.landmarks.weights.len() != self.landmarks.len() {
            return Err(Error::InvalidArgument(
                "landmarks and weights must be non-empty and aligned".into(),
            ));
        }
        let total: f64 = pairwise_sum(&self.landmarks.weights);
        if self
            .landmarks
            .weights
            .iter()
            .any(|w| w.is_nan() || *w < 0.0)
            || (total - 1.0).abs() > 1e-9
        {
            return Err(Error::InvalidArgument(
                "landmark weights must be nonnegative and sum to 1".into(),
            ));
        }
        Ok(())
    }

    pub fn ambient_dim(&self) -> usize {
        self.manifold.ambient_dim()
    }

    pub fn model_dim(&self) -> usize {
        self.loading.ncols()
    }

    /// Covariance of `y` around `φ(z)` in ambient coordinates,
    /// `Ψ(z) = K(z) C C' K(z)' + σ² I_n`.
    pub fn covariance_at(&self, z: Latent) -> Result<DMatrix<f64>> {
        let n = self.ambient_dim();
        let k = self.coords.frame(&self.manifold, z)?;
        let kc = &k * &self.loading;
        Ok(&kc * kc.transpose() + DMatrix::identity(n, n) * self.sigma2)
    }

    pub(crate) fn prepare(&self) -> Result<Prepared> {
        Prepared::new(
            &self.manifold,
            &self.coords,
            &self.landmarks.points,
            &self.loading,
            self.sigma2,
        )
    }
}

/// Per-landmark quantities reused by every pass over the data: `φ(z_j)`,
/// `K(z_j)` and the ambient precision `K_j (σ²I + CC')⁻¹ K_j'` (packed upper triangle).
#[derive(Debug, Clone)]
pub(crate) struct Prepared {
    n: usize,
    centers: Vec<f64>,
    frames: FrameCache,
    precisions: Vec<f64>,
    log_norm: f64,
}

impl Prepared {
    fn new(
        manifold: &Manifold,
        field: &dyn FrameField,
        points: &[Latent],
        loading: &DMatrix<f64>,
        sigma2: f64,
    ) -> Result<Self> {
        let frames = FrameCache::build(field, manifold, points)?;
        Self::with_frames(manifold, frames, points, loading, sigma2)
    }

    fn with_frames(
        manifold: &Manifold,
        frames: FrameCache,
        points: &[Latent],
        loading: &DMatrix<f64>,
        sigma2: f64,
    ) -> Result<Self> {
        let n = manifold.ambient_dim();
        let cov = FrameCovariance::new(loading, sigma2)?;
        let mut centers = vec![0.0; points.len() * n];
        for (j, &z) in points.iter().enumerate() {
            manifold.evaluate_into(z, &mut centers[j * n..(j + 1) * n]);
        }
        let t = tri_len(n);
        let mut precisions = vec![0.0; points.len() * t];
        for (j, k) in frames.iter().enumerate() {
            let p = k * cov.precision() * k.transpose();
            pack_upper(&p, &mut precisions[j * t..(j + 1) * t]);
        }
        Ok(Self {
            n,
            centers,
            frames,
            precisions,
            log_norm: -0.5 * (n as f64 * LN_TAU + cov.log_det()),
        })
    }

    fn m(&self) -> usize {
        self.frames.len()
    }

    fn center(&self, j: usize) -> &[f64] {
        &self.centers[j * self.n..(j + 1) * self.n]
    }

    /// `ln p(y | z_j)`, writing the residual `y − φ(z_j)` into `resid`.
    #[inline]
    fn log_density(&self, y: &[f64], j: usize, resid: &mut [f64]) -> f64 {
        let n = self.n;
        let c = self.center(j);
        for a in 0..n {
            resid[a] = y[a] - c[a];
        }
        let p = &self.precisions[j * tri_len(n)..(j + 1) * tri_len(n)];
        let mut quad = 0.0;
        let mut idx = 0;
        for a in 0..n {
            let ra = resid[a];
            let mut row = 0.5 * p[idx] * ra;
            idx += 1;
            for b in a + 1..n {
                row += p[idx] * resid[b];
                idx += 1;
            }
            quad += ra * row;
        }
        self.log_norm - quad
    }

    /// Fills `out[j] = ln ω_j + ln p(y | z_j)` (`-inf` where `ω_j = 0`) and returns the maximum.
    #[inline]
    fn joint_log_terms(&self, y: &[f64], log_w: &[f64], out: &mut [f64], resid: &mut [f64]) -> f64 {
        kernel::joint_log_terms(
            self.n,
            &self.centers,
            &self.precisions,
            self.log_norm,
            log_w,
            y,
            resid,
            out,
        )
    }
}

fn pack_upper(a: &DMatrix<f64>, out: &mut [f64]) {
    let n = a.nrows();
    let mut idx = 0;
    for r in 0..n {
        for c in r..n {
            out[idx] = a[(r, c)];
            idx += 1;
        }
    }
}

fn unpack_upper(p: &[f64], n: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    let mut idx = 0;
    for r in 0..n {
        for c in r..n {
            a[(r, c)] = p[idx];
            a[(c, r)] = p[idx];
            idx += 1;
        }
    }
    a
}

fn log_weights(w: &[f64]) -> Vec<f64> {
    w.iter()
        .map(|&v| if v > 0.0 { v.ln() } else { f64::NEG_INFINITY })
        .collect()
}

/// Posterior responsibilities `q_i(z_j)`, a `T × M` row-stochastic matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities {
    m: usize,
    values: Vec<f64>,
}

impl Responsibilities {
    pub fn from_rows(m: usize, values: Vec<f64>) -> Result<Self> {
        if m == 0 || !values.len().is_multiple_of(m) {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: values.len(),
            });
        }
        Ok(Self { m, values })
    }

    pub fn n_samples(&self) -> usize {
        self.values.len() / self.m
    }

    pub fn n_landmarks(&self) -> usize {
        self.m
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.m..(i + 1) * self.m]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.m + j]
    }
}

/// `ln N(y; φ(z), Ψ(z))` evaluated without forming `Ψ(z)`.
pub fn log_cond_density(model: &PgpcaModel, y: &[f64], z: Latent) -> Result<f64> {
    let n = model.ambient_dim();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let cov = FrameCovariance::new(&model.loading, model.sigma2)?;
    let k = model.coords.frame(&model.manifold, z)?;
    let resid = DVector::from_column_slice(y) - model.manifold.evaluate(z);
    let local = k.transpose() * resid;
    let quad = local.dot(&(cov.precision() * &local));
    Ok(-0.5 * (n as f64 * LN_TAU + cov.log_det() + quad))
}

fn check_data(model: &PgpcaModel, data: &DataMatrix) -> Result<()> {
    if data.dim() != model.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.ambient_dim(),
            got: data.dim(),
        });
    }
    if !data.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    Ok(())
}

/// E-step: `q_i(z_j) ∝ p(y_i | z_j) ω_j`, normalized per sample in log space.
pub fn e_step(model: &PgpcaModel, data: &DataMatrix) -> Result<Responsibilities> {
    e_step_with(model, data, ExecMode::default())
}

pub fn e_step_with(
    model: &PgpcaModel,
    data: &DataMatrix,
    mode: ExecMode,
) -> Result<Responsibilities> {
    check_data(model, data)?;
    let prep = model.prepare()?;
    let m = prep.m();
    let log_w = log_weights(&model.landmarks.weights);
    let mut values = Vec::with_capacity(data.len() * m);
    let mut failed = None;
    map_fold_chunks(
        mode,
        data.len(),
        CHUNK_SAMPLES,
        |range| {
            let mut resid = vec![0.0; prep.n];
            let mut out = vec![0.0; range.len() * m];
            let mut bad = None;
            for (r, i) in range.clone().enumerate() {
                let row = &mut out[r * m..(r + 1) * m];
                let max = prep.joint_log_terms(data.row(i), &log_w, row, &mut resid);
                if !kernel::normalize(row, max).is_finite() {
                    bad.get_or_insert(i);
                }
            }
            (out, bad)
        },
        |(part, bad)| {
            values.extend_from_slice(&part);
            if failed.is_none() {
                failed = bad;
            }
        },
    );
    if let Some(i) = failed {
        return Err(Error::AllZeroLikelihood(i));
    }
    Responsibilities::from_rows(m, values)
}

/// `ω_j = (1/T) Σ_i q_i(z_j)`.
pub fn m_step_weights(q: &Responsibilities) -> Vec<f64> {
    let t = q.n_samples() as f64;
    let mut sums = vec![0.0; q.n_landmarks()];
    for i in 0..q.n_samples() {
        for (s, v) in sums.iter_mut().zip(q.row(i)) {
            *s += v;
        }
    }
    sums.into_iter().map(|s| s / t).collect()
}

/// `Γ(q) = (1/T) Σ_j K_j' [Σ_i q_i(z_j) (y_i − φ_j)(y_i − φ_j)'] K_j`.
///
/// Landmarks are visited in order; the inner sum over samples uses pairwise summation.
pub fn gamma_matrix(
    data: &DataMatrix,
    q: &Responsibilities,
    manifold: &Manifold,
    coords: &dyn FrameField,
    landmarks: &LandmarkSet,
) -> Result<DMatrix<f64>> {
    let n = manifold.ambient_dim();
    if data.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: data.dim(),
        });
    }
    if q.n_samples() != data.len() || q.n_landmarks() != landmarks.len() {
        return Err(Error::LengthMismatch(q.n_samples(), data.len()));
    }
    let frames = FrameCache::build(coords, manifold, &landmarks.points)?;
    let t = tri_len(n);
    let mut gamma = DMatrix::zeros(n, n);
    let mut center = vec![0.0; n];
    for (j, &z) in landmarks.points.iter().enumerate() {
        manifold.evaluate_into(z, &mut center);
        let scatter = pairwise_scatter(data, q, j, &center, 0, data.len(), t);
        let a = unpack_upper(&scatter, n);
        let k = frames.get(j);
        gamma += k.transpose() * a * k;
    }
    gamma /= data.len() as f64;
    Ok((&gamma + gamma.transpose()) * 0.5)
}

fn pairwise_scatter(
    data: &DataMatrix,
    q: &Responsibilities,
    j: usize,
    center: &[f64],
    lo: usize,
    hi: usize,
    t: usize,
) -> Vec<f64> {
    const LEAF: usize = 32;
    if hi - lo <= LEAF {
        let n = center.len();
        let mut acc = vec![0.0; t];
        let mut resid = vec![0.0; n];
        for i in lo..hi {
            let w = q.get(i, j);
            if w == 0.0 {
                continue;
            }
            for (r, (y, c)) in resid.iter_mut().zip(data.row(i).iter().zip(center)) {
                *r = y - c;
            }
            accumulate_outer(&mut acc, &resid, w);
        }
        acc
    } else {
        let mid = lo + (hi - lo) / 2;
        let mut a = pairwise_scatter(data, q, j, center, lo, mid, t);
        let b = pairwise_scatter(data, q, j, center, mid, hi, t);
        for (x, y) in a.iter_mut().zip(b) {
            *x += y;
        }
        a
    }
}

#[inline]
fn accumulate_outer(acc: &mut [f64], r: &[f64], w: f64) {
    let n = r.len();
    let mut idx = 0;
    for a in 0..n {
        let wa = w * r[a];
        for b in a..n {
            acc[idx] += wa * r[b];
            idx += 1;
        }
    }
}

/// Optimal `C` and `σ²` for a given `Γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct MStepParams {
    pub loading: DMatrix<f64>,
    pub sigma2: f64,
    /// Eigenvalues of `Γ`, descending.
    pub eigenvalues: DVector<f64>,
    /// Number of leading eigenvalues below `σ²` whose loading was clamped to zero.
    pub clamped: usize,
}

/// `σ² = mean of the trailing n − m eigenvalues`, `C = U diag(√(γ̄_i − σ²))`.
///
/// When `m = n`, or the trailing eigenvalues vanish, `σ²` falls back to
/// `SIGMA2_FLOOR_REL · tr(Γ)/n`.
pub fn m_step_params(gamma: &DMatrix<f64>, m: usize) -> Result<MStepParams> {
    let n = gamma.nrows();
    if gamma.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: gamma.ncols(),
        });
    }
    if m > n {
        return Err(Error::InvalidDimension { m, n });
    }
    if gamma.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let (values, vectors) = sym_eigen_desc(gamma);
    let floor = (SIGMA2_FLOOR_REL * gamma.trace() / n as f64).max(SIGMA2_FLOOR_ABS);
    let sigma2 = if m < n {
        let tail = values.rows(m, n - m).iter().sum::<f64>() / (n - m) as f64;
        tail.max(floor)
    } else {
        floor
    };
    let mut loading = DMatrix::zeros(n, m);
    let mut clamped = 0;
    for i in 0..m {
        let excess = values[i] - sigma2;
        if excess < 0.0 {
            clamped += 1;
        }
        let d = excess.max(0.0).sqrt();
        loading.set_column(i, &(vectors.column(i) * d));
    }
    Ok(MStepParams {
        loading,
        sigma2,
        eigenvalues: values,
        clamped,
    })
}

/// `Σ_i Σ_j q_i(z_j) [ln(p(y_i|z_j) ω_j) − ln q_i(z_j)]` with `0 ln 0 = 0`.
pub fn elbo(model: &PgpcaModel, data: &DataMatrix, q: &Responsibilities) -> Result<f64> {
    check_data(model, data)?;
    if q.n_samples() != data.len() || q.n_landmarks() != model.landmarks.len() {
        return Err(Error::LengthMismatch(q.n_samples(), data.len()));
    }
    let prep = model.prepare()?;
    let w = &model.landmarks.weights;
    let mut resid = vec![0.0; prep.n];
    let mut total = KahanSum::default();
    for i in 0..data.len() {
        let y = data.row(i);
        for (j, &qij) in q.row(i).iter().enumerate() {
            if qij == 0.0 {
                continue;
            }
            let joint = if w[j] > 0.0 {
                prep.log_density(y, j, &mut resid) + w[j].ln()
            } else {
                f64::NEG_INFINITY
            };
            total.add(qij * (joint - qij.ln()));
        }
    }
    Ok(total.total())
}

/// `L = Σ_i ln Σ_j p(y_i | z_j) ω_j`.
pub fn log_likelihood(model: &PgpcaModel, data: &DataMatrix) -> Result<f64> {
    Ok(KahanSum::from_iter(sample_log_likelihoods(model, data, ExecMode::default())?).total())
}

/// `ln p(y_i)` for every sample.
pub fn sample_log_likelihoods(
    model: &PgpcaModel,
    data: &DataMatrix,
    mode: ExecMode,
) -> Result<Vec<f64>> {
    check_data(model, data)?;
    let prep = model.prepare()?;
    let log_w = log_weights(&model.landmarks.weights);
    let mut out = Vec::with_capacity(data.len());
    map_fold_chunks(
        mode,
        data.len(),
        CHUNK_SAMPLES,
        |range| {
            let mut resid = vec![0.0; prep.n];
            let mut terms = vec![0.0; prep.m()];
            range
                .map(|i| {
                    let max = prep.joint_log_terms(data.row(i), &log_w, &mut terms, &mut resid);
                    kernel::log_total(&terms, max)
                })
                .collect::<Vec<_>>()
        },
        |part| out.extend(part),
    );
    Ok(out)
}

/// Sufficient statistics gathered in one pass.
struct PassStats {
    log_lik: f64,
    /// `Σ_i q_i(z_j)` per landmark.
    col_sums: Vec<f64>,
    /// Packed `Σ_i q_i(z_j) r r'` per landmark, with `r = y_i − φ_j` in ambient coordinates.
    scatter: Vec<f64>,
}

fn fused_pass(
    prep: &Prepared,
    weights: &[f64],
    data: &DataMatrix,
    mode: ExecMode,
) -> Result<PassStats> {
    let m = prep.m();
    let n = prep.n;
    let t = tri_len(n);
    let log_w = log_weights(weights);
    let mut ll = KahanSum::default();
    let mut col_sums = vec![0.0; m];
    let mut scatter = vec![0.0; m * t];
    let mut failed = None;
    map_fold_chunks(
        mode,
        data.len(),
        CHUNK_SAMPLES,
        |range| {
            let mut resid = vec![0.0; n];
            let mut terms = vec![0.0; m];
            let mut cols = vec![0.0; m];
            let mut scat = vec![0.0; m * t];
            let mut ll = KahanSum::default();
            let mut bad = None;
            for i in range {
                let y = data.row(i);
                let max = prep.joint_log_terms(y, &log_w, &mut terms, &mut resid);
                let li = kernel::accumulate_posterior(
                    n,
                    &prep.centers,
                    y,
                    &mut terms,
                    max,
                    &mut cols,
                    &mut scat,
                );
                if !li.is_finite() {
                    bad.get_or_insert(i);
                    continue;
                }
                ll.add(li);
            }
            (ll.total(), cols, scat, bad)
        },
        |(part_ll, cols, scat, bad)| {
            ll.add(part_ll);
            for (a, b) in col_sums.iter_mut().zip(cols) {
                *a += b;
            }
            for (a, b) in scatter.iter_mut().zip(scat) {
                *a += b;
            }
            if failed.is_none() {
                failed = bad;
            }
        },
    );
    if let Some(i) = failed {
        return Err(Error::AllZeroLikelihood(i));
    }
    Ok(PassStats {
        log_lik: ll.total(),
        col_sums,
        scatter,
    })
}

fn gamma_from_scatter(
    frames: &FrameCache,
    scatter: &[f64],
    n: usize,
    t_samples: usize,
) -> DMatrix<f64> {
    let t = tri_len(n);
    let mut gamma = DMatrix::zeros(n, n);
    for (j, k) in frames.iter().enumerate() {
        let block = &scatter[j * t..(j + 1) * t];
        if block.iter().all(|&v| v == 0.0) {
            continue;
        }
        let a = unpack_upper(block, n);
        gamma += k.transpose() * a * k;
    }
    gamma /= t_samples as f64;
    (&gamma + gamma.transpose()) * 0.5
}

/// EM settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Model dimension `m` (columns of `C`).
    pub dim: usize,
    /// Landmark count `M`.
    pub landmarks: usize,
    pub max_iters: usize,
    /// Stop when the relative ELBO improvement drops below this.
    pub elbo_tol: f64,
    pub seed: u64,
    /// Learn `ω` (otherwise the initial weights are kept fixed).
    pub learn_weights: bool,
    /// Independent seeded starts; the one with the highest final log-likelihood is kept.
    pub restarts: usize,
    /// Initial landmark weights; uniform when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_weights: Option<Vec<f64>>,
    #[serde(skip)]
    pub exec: ExecMode,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            dim: 1,
            landmarks: 500,
            max_iters: 20,
            elbo_tol: 1e-7,
            seed: 0,
            learn_weights: true,
            restarts: 1,
            initial_weights: None,
            exec: ExecMode::default(),
        }
    }
}

impl FitConfig {
    fn validate(&self, n: usize) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument(
                "max_iters must be at least 1".into(),
            ));
        }
        if self.elbo_tol.is_nan() || self.elbo_tol < 0.0 {
            return Err(Error::InvalidArgument(
                "elbo_tol must be nonnegative".into(),
            ));
        }
        if self.dim > n {
            return Err(Error::InvalidDimension { m: self.dim, n });
        }
        if self.landmarks == 0 {
            return Err(Error::InvalidArgument(
                "landmark count must be at least 1".into(),
            ));
        }
        if let Some(w) = &self.initial_weights {
            if w.len() != self.landmarks {
                return Err(Error::LengthMismatch(w.len(), self.landmarks));
            }
        }
        Ok(())
    }
}

/// Diagnostics of one EM run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// ELBO at the exact posterior (equal to the log-likelihood) of the
    /// initial parameters and after every M-step.
    pub elbo_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Set when `max_iters` was reached before the tolerance was met.
    pub warning: Option<String>,
    /// Loading columns clamped to zero because `γ̄_i < σ²`, summed over iterations.
    pub clamp_events: usize,
    /// Seed of the start that was kept.
    pub seed: u64,
}

impl FitReport {
    /// Whether the trace never drops by more than `rel` of its magnitude.
    pub fn is_monotone(&self, rel: f64) -> bool {
        self.elbo_trace
            .windows(2)
            .all(|w| w[1] >= w[0] - rel * w[0].abs())
    }

    pub fn final_log_likelihood(&self) -> f64 {
        *self.elbo_trace.last().unwrap_or(&f64::NAN)
    }
}

/// Fits `C`, `σ²` and (optionally) `ω` by EM for a given manifold and coordinate field.
pub fn fit(
    data: &DataMatrix,
    manifold: &Manifold,
    coords: CoordinateField,
    config: &FitConfig,
) -> Result<(PgpcaModel, FitReport)> {
    let n = manifold.ambient_dim();
    if data.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: data.dim(),
        });
    }
    if data.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: data.len(),
        });
    }
    if !data.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    config.validate(n)?;
    let mut landmarks = make_landmarks(manifold, config.landmarks)?;
    if let Some(w) = &config.initial_weights {
        landmarks.set_weights_normalized(w)?;
    }
    let frames = FrameCache::build(&coords, manifold, &landmarks.points)?;

    let mut best: Option<(PgpcaModel, FitReport)> = None;
    for r in 0..config.restarts.max(1) {
        let seed = config.seed.wrapping_add(r as u64);
        let (model, report) = run_em(data, manifold, coords, &landmarks, &frames, config, seed)?;
        let better = best
            .as_ref()
            .is_none_or(|(_, b)| report.final_log_likelihood() > b.final_log_likelihood());
        if better {
            best = Some((model, report));
        }
    }
    Ok(best.expect("at least one start"))
}

/// Starting `C` and `σ²`: a random orthonormal `m`-frame, with the mean squared
/// per-coordinate distance to the nearest landmark split evenly between `CC'`
/// and `σ²`.
fn initial_params(data: &DataMatrix, centers: &[f64], m: usize, seed: u64) -> (DMatrix<f64>, f64) {
    let n = data.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gauss = DMatrix::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
    let q = gauss.qr().q();

    let nearest: f64 = data
        .rows()
        .map(|y| {
            centers
                .chunks_exact(n)
                .map(|c| y.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                .fold(f64::INFINITY, f64::min)
        })
        .sum::<f64>()
        / (data.len() * n) as f64;
    let mean = data.mean();
    let var = data
        .rows()
        .map(|r| {
            r.iter()
                .zip(mean.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        })
        .sum::<f64>()
        / (data.len() * n) as f64;
    let half = (0.5 * nearest).max(SIGMA2_FLOOR_REL * var.max(f64::MIN_POSITIVE));
    let loading = q.columns(0, m).into_owned() * half.sqrt();
    (loading, half)
}

fn run_em(
    data: &DataMatrix,
    manifold: &Manifold,
    coords: CoordinateField,
    landmarks: &LandmarkSet,
    frames: &FrameCache,
    config: &FitConfig,
    seed: u64,
) -> Result<(PgpcaModel, FitReport)> {
    let n = manifold.ambient_dim();
    let mut centers = vec![0.0; landmarks.len() * n];
    for (j, &z) in landmarks.points.iter().enumerate() {
        manifold.evaluate_into(z, &mut centers[j * n..(j + 1) * n]);
    }
    let (mut loading, mut sigma2) = initial_params(data, &centers, config.dim, seed);
    let mut weights = landmarks.weights.clone();
    let mut trace = Vec::with_capacity(config.max_iters + 1);
    let mut clamp_events = 0;
    let mut converged = false;
    let mut iterations = 0;

    for it in 0..config.max_iters {
        let prep = Prepared::with_frames(
            manifold,
            frames.clone(),
            &landmarks.points,
            &loading,
            sigma2,
        )?;
        let stats = fused_pass(&prep, &weights, data, config.exec)?;
        trace.push(stats.log_lik);
        if it > 0 {
            let prev = trace[trace.len() - 2];
            let gain = (stats.log_lik - prev) / prev.abs().max(f64::MIN_POSITIVE);
            if gain < config.elbo_tol {
                converged = true;
                break;
            }
        }
        // M-step, in order: ω, Γ(q), eigendecomposition, σ², C.
        if config.learn_weights {
            let t = data.len() as f64;
            weights = stats.col_sums.iter().map(|s| s / t).collect();
            let total = pairwise_sum(&weights);
            for w in &mut weights {
                *w /= total;
            }
        }
        let gamma = gamma_from_scatter(frames, &stats.scatter, n, data.len());
        let params = m_step_params(&gamma, config.dim)?;
        clamp_events += params.clamped;
        loading = params.loading;
        sigma2 = params.sigma2;
        iterations += 1;
    }
    if !converged {
        let prep = Prepared::with_frames(
            manifold,
            frames.clone(),
            &landmarks.points,
            &loading,
            sigma2,
        )?;
        let log_w = log_weights(&weights);
        let mut ll = KahanSum::default();
        map_fold_chunks(
            config.exec,
            data.len(),
            CHUNK_SAMPLES,
            |range| {
                let mut resid = vec![0.0; n];
                let mut terms = vec![0.0; prep.m()];
                let mut s = KahanSum::default();
                for i in range {
                    let max = prep.joint_log_terms(data.row(i), &log_w, &mut terms, &mut resid);
                    s.add(kernel::log_total(&terms, max));
                }
                s.total()
            },
            |v| ll.add(v),
        );
        trace.push(ll.total());
    }
    let warning = (!converged).then(|| {
        format!(
            "reached max_iters={} before the relative ELBO tolerance {:e} was met",
            config.max_iters, config.elbo_tol
        )
    });
    let model = PgpcaModel::new(
        manifold.clone(),
        coords,
        LandmarkSet {
            points: landmarks.points.clone(),
            weights,
        },
        loading,
        sigma2,
    )?;
    Ok((
        model,
        FitReport {
            elbo_trace: trace,
            iterations,
            converged,
            warning,
            clamp_events,
            seed,
        },
    ))
}

/// JSON form of a model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub n: usize,
    pub m: usize,
    /// `C`, row-major `n × m`.
    #[serde(rename = "C")]
    pub loading: Vec<f64>,
    pub sigma2: f64,
    pub landmarks: Vec<Latent>,
    pub weights: Vec<f64>,
    pub manifold: Manifold,
    pub coords: CoordinateField,
}

impl From<&PgpcaModel> for ModelFile {
    fn from(model: &PgpcaModel) -> Self {
        let n = model.ambient_dim();
        let m = model.model_dim();
        let loading = (0..n)
            .flat_map(|r| (0..m).map(move |c| (r, c)))
            .map(|(r, c)| model.loading[(r, c)])
            .collect();
        Self {
            n,
            m,
            loading,
            sigma2: model.sigma2,
            landmarks: model.landmarks.points.clone(),
            weights: model.landmarks.weights.clone(),
            manifold: model.manifold.clone(),
            coords: model.coords,
        }
    }
}

impl TryFrom<ModelFile> for PgpcaModel {
    type Error = Error;

    fn try_from(f: ModelFile) -> Result<Self> {
        if f.loading.len() != f.n * f.m {
            return Err(Error::LengthMismatch(f.loading.len(), f.n * f.m));
        }
        PgpcaModel::new(
            f.manifold,
            f.coords,
            LandmarkSet {
                points: f.landmarks,
                weights: f.weights,
            },
            DMatrix::from_row_slice(f.n, f.m, &f.loading),
            f.sigma2,
        )
    }
}

impl PgpcaModel {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        file.try_into()
    }
}

/// Reference log-density of a Gaussian with a dense covariance; used by tests
/// and diagnostics that must not share code with the structured path.
pub fn dense_gaussian_log_density(
    y: &DVector<f64>,
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
) -> Option<f64> {
    let n = y.len() as f64;
    let log_det = spd_log_det(cov)?;
    let inv = cov.clone().try_inverse()?;
    let r = y - mean;
    Some(-0.5 * (n * TAU.ln() + log_det + r.dot(&(inv * &r))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::make_landmarks;
    use rand::Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn random_matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| r.random_range(-1.0..1.0))
    }

    fn ellipse_model(m: usize, landmarks: usize, seed: u64) -> PgpcaModel {
        let mut r = rng(seed);
        let lm = make_landmarks(&Manifold::Ellipse2D, landmarks).unwrap();
        PgpcaModel::new(
            Manifold::Ellipse2D,
            CoordinateField::Geometric,
            lm,
            random_matrix(&mut r, 2, m),
            0.2 + r.random::<f64>(),
        )
        .unwrap()
    }

    fn ellipse_data(t: usize, seed: u64) -> DataMatrix {
        let mut r = rng(seed);
        let mut d = DataMatrix::with_capacity(2, t);
        for _ in 0..t {
            let z: f64 = r.random_range(0.0..TAU);
            d.push(&[
                z.cos() + r.random_range(-0.5..0.5),
                2.0 * z.sin() + r.random_range(-0.5..0.5),
            ]);
        }
        d
    }

    #[test]
    fn standard_normal_at_mean() {
        let model = PgpcaModel::new(
            Manifold::Constant {
                point: vec![0.0, 0.0],
            },
            CoordinateField::Euclidean,
            make_landmarks(&Manifold::Ellipse2D, 1).unwrap(),
            DMatrix::zeros(2, 0),
            1.0,
        )
        .unwrap();
        let v = log_cond_density(&model, &[0.0, 0.0], Latent::curve(0.0)).unwrap();
        assert!((v - (-1.8378770664093453)).abs() < 1e-14);
        assert_eq!(
            log_cond_density(&model, &[f64::NAN, 0.0], Latent::curve(0.0)),
            Err(Error::NonFiniteInput)
        );
    }

    #[test]
    fn conditional_density_matches_dense_oracle() {
        let mut r = rng(1);
        for m in 0..=2 {
            let model = ellipse_model(m, 8, m as u64 + 10);
            for _ in 0..50 {
                let z = Latent::curve(r.random_range(0.0..TAU));
                let y = DVector::from_fn(2, |_, _| r.random_range(-3.0..3.0));
                let cov = model.covariance_at(z).unwrap();
                let oracle =
                    dense_gaussian_log_density(&y, &model.manifold.evaluate(z), &cov).unwrap();
                let got = log_cond_density(&model, y.as_slice(), z).unwrap();
                assert!((got - oracle).abs() < 1e-8, "{got} vs {oracle}");
            }
        }
    }

    #[test]
    fn zero_loading_density_ignores_frame() {
        let mut model = ellipse_model(0, 4, 3);
        let y = [0.3, -1.2];
        let z = Latent::curve(0.7);
        let ge = log_cond_density(&model, &y, z).unwrap();
        model.coords = CoordinateField::Euclidean;
        let eu = log_cond_density(&model, &y, z).unwrap();
        assert!((ge - eu).abs() < 1e-14);
    }

    #[test]
    fn e_step_single_landmark() {
        let model = ellipse_model(1, 1, 4);
        let q = e_step(&model, &ellipse_data(20, 2)).unwrap();
        assert!((0..20).all(|i| q.row(i) == [1.0]));
    }

    #[test]
    fn e_step_symmetric_landmarks() {
        // landmarks at z = 0 and z = π: φ = (±1, 0); y at the origin is equidistant
        let mut model = ellipse_model(0, 2, 5);
        model.coords = CoordinateField::Euclidean;
        let data = DataMatrix::from_rows(&[[0.0, 0.0], [0.0, 0.7]]).unwrap();
        let q = e_step(&model, &data).unwrap();
        for i in 0..2 {
            assert!((q.get(i, 0) - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn e_step_matches_dense_normalization() {
        let model = ellipse_model(1, 16, 6);
        let data = ellipse_data(10, 7);
        let q = e_step(&model, &data).unwrap();
        for i in 0..10 {
            let y = data.row_vector(i);
            let dens: Vec<f64> = model
                .landmarks
                .points
                .iter()
                .zip(&model.landmarks.weights)
                .map(|(&z, w)| {
                    let cov = model.covariance_at(z).unwrap();
                    dense_gaussian_log_density(&y, &model.manifold.evaluate(z), &cov)
                        .unwrap()
                        .exp()
                        * w
                })
                .collect();
            let total: f64 = dens.iter().sum();
            for j in 0..16 {
                assert!((q.get(i, j) - dens[j] / total).abs() < 1e-12);
            }
            assert!((q.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_weight_landmarks_get_no_mass() {
        let mut model = ellipse_model(1, 4, 8);
        model.landmarks.weights = vec![0.5, 0.0, 0.5, 0.0];
        let q = e_step(&model, &ellipse_data(30, 9)).unwrap();
        assert!((0..30).all(|i| q.get(i, 1) == 0.0 && q.get(i, 3) == 0.0));
    }

    #[test]
    fn weight_update_examples() {
        let q = Responsibilities::from_rows(2, vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(m_step_weights(&q), vec![1.0, 0.0]);
        let q = Responsibilities::from_rows(2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(m_step_weights(&q), vec![0.5, 0.5]);
    }

    #[test]
    fn weight_update_matches_loop() {
        let mut r = rng(12);
        let (t, m) = (50, 7);
        let mut vals = Vec::new();
        for _ in 0..t {
            let row: Vec<f64> = (0..m).map(|_| r.random::<f64>()).collect();
            let s: f64 = row.iter().sum();
            vals.extend(row.iter().map(|v| v / s));
        }
        let q = Responsibilities::from_rows(m, vals.clone()).unwrap();
        let w = m_step_weights(&q);
        for j in 0..m {
            let mut s = 0.0;
            for i in 0..t {
                s += vals[i * m + j];
            }
            assert_eq!(w[j], s / t as f64);
        }
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gamma_reduces_to_second_moment() {
        let data = ellipse_data(40, 13);
        let manifold = Manifold::Constant {
            point: vec![0.0, 0.0],
        };
        let lm = make_landmarks(&manifold, 3).unwrap();
        let q = Responsibilities::from_rows(3, vec![1.0 / 3.0; 120]).unwrap();
        let g = gamma_matrix(&data, &q, &manifold, &CoordinateField::Euclidean, &lm).unwrap();
        let mut s = DMatrix::zeros(2, 2);
        for i in 0..data.len() {
            let y = data.row_vector(i);
            s += &y * y.transpose();
        }
        s /= data.len() as f64;
        assert!((g - s).norm() < 1e-12);
    }

    #[test]
    fn gamma_zero_residual() {
        let manifold = Manifold::Ellipse2D;
        let lm = make_landmarks(&manifold, 1).unwrap();
        let p = manifold.evaluate(lm.points[0]);
        let data = DataMatrix::from_rows(&[p.as_slice()]).unwrap();
        let q = Responsibilities::from_rows(1, vec![1.0]).unwrap();
        let g = gamma_matrix(&data, &q, &manifold, &CoordinateField::Geometric, &lm).unwrap();
        assert_eq!(g, DMatrix::zeros(2, 2));
    }

    #[test]
    fn m_step_diagonal_example() {
        let g = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 2.0, 1.0]));
        let p = m_step_params(&g, 1).unwrap();
        assert!((p.sigma2 - 1.5).abs() < 1e-15);
        assert!((p.loading[(0, 0)] - 1.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(p.loading[(1, 0)], 0.0);
        assert_eq!(p.loading[(2, 0)], 0.0);

        let p = m_step_params(&g, 0).unwrap();
        assert_eq!(p.loading.ncols(), 0);
        assert!((p.sigma2 - 2.0).abs() < 1e-15);

        assert_eq!(
            m_step_params(&g, 4),
            Err(Error::InvalidDimension { m: 4, n: 3 })
        );
    }

    #[test]
    fn m_step_full_rank_reproduces_gamma() {
        let mut r = rng(21);
        let a = random_matrix(&mut r, 4, 4);
        let g = &a * a.transpose() + DMatrix::identity(4, 4) * 0.1;
        let p = m_step_params(&g, 4).unwrap();
        let lambda = &p.loading * p.loading.transpose() + DMatrix::identity(4, 4) * p.sigma2;
        assert!((lambda - &g).norm() < 1e-10 * g.norm());
        assert!((p.sigma2 - 1e-6 * g.trace() / 4.0).abs() < 1e-18);
    }

    #[test]
    fn elbo_equals_log_likelihood_at_posterior() {
        let model = ellipse_model(1, 16, 31);
        let data = ellipse_data(50, 32);
        let q = e_step(&model, &data).unwrap();
        let e = elbo(&model, &data, &q).unwrap();
        let l = log_likelihood(&model, &data).unwrap();
        assert!((e - l).abs() < 1e-9 * l.abs());

        // any other q is a lower bound
        let mut r = rng(33);
        let vals: Vec<f64> = (0..50)
            .flat_map(|_| {
                let row: Vec<f64> = (0..16).map(|_| r.random::<f64>()).collect();
                let s: f64 = row.iter().sum();
                row.into_iter().map(move |v| v / s)
            })
            .collect();
        let other = Responsibilities::from_rows(16, vals).unwrap();
        assert!(elbo(&model, &data, &other).unwrap() <= l + 1e-12);
    }

    #[test]
    fn single_landmark_elbo_is_conditional_sum() {
        let model = ellipse_model(1, 1, 41);
        let data = ellipse_data(10, 42);
        let q = Responsibilities::from_rows(1, vec![1.0; 10]).unwrap();
        let want: f64 = (0..10)
            .map(|i| log_cond_density(&model, data.row(i), model.landmarks.points[0]).unwrap())
            .sum();
        assert!((elbo(&model, &data, &q).unwrap() - want).abs() < 1e-10);
    }

    #[test]
    fn log_likelihood_point_mass_example() {
        let manifold = Manifold::Ellipse2D;
        let lm = make_landmarks(&manifold, 1).unwrap();
        let p = manifold.evaluate(lm.points[0]);
        let data = DataMatrix::from_rows(&[p.as_slice(), p.as_slice(), p.as_slice()]).unwrap();
        let model = PgpcaModel::new(
            manifold,
            CoordinateField::Geometric,
            lm,
            DMatrix::zeros(2, 0),
            1.0,
        )
        .unwrap();
        let l = log_likelihood(&model, &data).unwrap();
        assert!((l - (-5.513631199228036)).abs() < 1e-12);
    }

    #[test]
    fn fused_pass_matches_separate_steps() {
        let model = ellipse_model(1, 24, 51);
        let data = ellipse_data(700, 52);
        let prep = model.prepare().unwrap();
        let stats =
            fused_pass(&prep, &model.landmarks.weights, &data, ExecMode::Sequential).unwrap();
        let q = e_step(&model, &data).unwrap();
        let g_ref =
            gamma_matrix(&data, &q, &model.manifold, &model.coords, &model.landmarks).unwrap();
        let g = gamma_from_scatter(&prep.frames, &stats.scatter, 2, data.len());
        assert!((g - &g_ref).norm() < 1e-10 * (1.0 + g_ref.norm()));
        let w = m_step_weights(&q);
        for (a, b) in w.iter().zip(&stats.col_sums) {
            assert!((a - b / 700.0).abs() < 1e-12);
        }
        let l = log_likelihood(&model, &data).unwrap();
        assert!((stats.log_lik - l).abs() < 1e-9 * l.abs());
    }

    #[test]
    fn fit_trace_is_monotone_and_parallel_matches_sequential() {
        let data = ellipse_data(600, 61);
        let mut cfg = FitConfig {
            dim: 1,
            landmarks: 40,
            max_iters: 15,
            elbo_tol: 0.0,
            seed: 3,
            ..FitConfig::default()
        };
        cfg.exec = ExecMode::Sequential;
        let (ms, rs) = fit(
            &data,
            &Manifold::Ellipse2D,
            CoordinateField::Geometric,
            &cfg,
        )
        .unwrap();
        cfg.exec = ExecMode::Parallel;
        let (mp, rp) = fit(
            &data,
            &Manifold::Ellipse2D,
            CoordinateField::Geometric,
            &cfg,
        )
        .unwrap();
        assert_eq!(rs.elbo_trace, rp.elbo_trace);
        assert_eq!(ms, mp);
        assert!(rs.is_monotone(1e-8), "{:?}", rs.elbo_trace);
        assert_eq!(rs.elbo_trace.len(), 16);
        assert!(rs.warning.is_some());
        assert!((ms.landmarks.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_stops_on_tolerance() {
        let data = ellipse_data(300, 71);
        let cfg = FitConfig {
            dim: 2,
            landmarks: 30,
            max_iters: 500,
            elbo_tol: 1e-4,
            ..FitConfig::default()
        };
        let (_, report) = fit(
            &data,
            &Manifold::Ellipse2D,
            CoordinateField::Euclidean,
            &cfg,
        )
        .unwrap();
        assert!(report.converged);
        assert!(report.warning.is_none());
        assert!(report.iterations < 500);
    }

    #[test]
    fn fit_rejects_bad_config() {
        let data = ellipse_data(10, 1);
        let mut cfg = FitConfig {
            dim: 3,
            ..FitConfig::default()
        };
        assert!(matches!(
            fit(
                &data,
                &Manifold::Ellipse2D,
                CoordinateField::Euclidean,
                &cfg
            ),
            Err(Error::InvalidDimension { .. })
        ));
        cfg.dim = 1;
        cfg.max_iters = 0;
        assert!(fit(
            &data,
            &Manifold::Ellipse2D,
            CoordinateField::Euclidean,
            &cfg
        )
        .is_err());
    }

    #[test]
    fn model_json_round_trip() {
        let model = ellipse_model(2, 12, 81);
        let back = PgpcaModel::from_json(&model.to_json().unwrap()).unwrap();
        let data = ellipse_data(30, 82);
        assert_eq!(
            log_likelihood(&model, &data).unwrap(),
            log_likelihood(&back, &data).unwrap()
        );
    }
}
