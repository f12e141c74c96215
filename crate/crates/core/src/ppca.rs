//! Closed-form probabilistic PCA, the linear special case (`φ ≡ mean`, `K ≡ I`).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::exec::{map_fold_chunks, ExecMode};
use crate::model::{m_step_params, FrameCovariance, CHUNK_SAMPLES};
use crate::numeric::KahanSum;

const LN_TAU: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpcaModel {
    pub mean: Vec<f64>,
    /// `n × m` loading matrix.
    #[serde(with = "row_major")]
    pub loading: DMatrix<f64>,
    pub sigma2: f64,
}

mod row_major {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Repr {
        rows: usize,
        cols: usize,
        data: Vec<f64>,
    }

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let data = (0..m.nrows())
            .flat_map(|r| (0..m.ncols()).map(move |c| (r, c)))
            .map(|(r, c)| m[(r, c)])
            .collect();
        Repr {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let r = Repr::deserialize(d)?;
        if r.data.len() != r.rows * r.cols {
            return Err(serde::de::Error::custom("matrix data length mismatch"));
        }
        Ok(DMatrix::from_row_slice(r.rows, r.cols, &r.data))
    }
}

/// Sample mean and `S = (1/T) Σ (y − ȳ)(y − ȳ)'`.
pub fn sample_covariance(data: &DataMatrix) -> (DVector<f64>, DMatrix<f64>) {
    let n = data.dim();
    let mean = data.mean();
    let mut s = DMatrix::zeros(n, n);
    let mut r = DVector::zeros(n);
    for row in data.rows() {
        for k in 0..n {
            r[k] = row[k] - mean[k];
        }
        s.ger(1.0, &r, &r, 1.0);
    }
    s /= data.len() as f64;
    (mean, s)
}

pub fn fit_ppca(data: &DataMatrix, m: usize) -> Result<PpcaModel> {
    if data.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: data.len(),
        });
    }
    if m > data.dim() {
        return Err(Error::InvalidDimension { m, n: data.dim() });
    }
    if !data.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    let (mean, s) = sample_covariance(data);
    let p = m_step_params(&s, m)?;
    Ok(PpcaModel {
        mean: mean.as_slice().to_vec(),
        loading: p.loading,
        sigma2: p.sigma2,
    })
}

impl PpcaModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        let n = self.dim();
        &self.loading * self.loading.transpose() + DMatrix::identity(n, n) * self.sigma2
    }

    pub fn sample_log_likelihoods(&self, data: &DataMatrix, mode: ExecMode) -> Result<Vec<f64>> {
        let n = self.dim();
        if data.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: data.dim(),
            });
        }
        let cov = FrameCovariance::new(&self.loading, self.sigma2)?;
        let norm = -0.5 * (n as f64 * LN_TAU + cov.log_det());
        let prec = cov.precision();
        let mut out = Vec::with_capacity(data.len());
        map_fold_chunks(
            mode,
            data.len(),
            CHUNK_SAMPLES,
            |range| {
                let mut r = DVector::zeros(n);
                range
                    .map(|i| {
                        for (k, (y, mu)) in data.row(i).iter().zip(&self.mean).enumerate() {
                            r[k] = y - mu;
                        }
                        norm - 0.5 * r.dot(&(prec * &r))
                    })
                    .collect::<Vec<_>>()
            },
            |part| out.extend(part),
        );
        Ok(out)
    }
}

/// Gaussian log-likelihood under covariance `CC' + σ²I`.
pub fn ppca_log_likelihood(model: &PpcaModel, data: &DataMatrix) -> Result<f64> {
    let lls = model.sample_log_likelihoods(data, ExecMode::default())?;
    Ok(KahanSum::from_iter(lls).total())
}
