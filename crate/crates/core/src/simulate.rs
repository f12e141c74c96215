//! Synthetic data from fully specified true models
//! `y = φ(z) + K(z) v`, `v ~ N(0, Λ)`, `Λ = Diag(λ_{1:n})`.

use std::f64::consts::TAU;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::coords::{CoordinateField, FrameField};
use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::manifold::{ClosedSpline, LandmarkSet, Latent, Manifold, TORUS_MAJOR, TORUS_MINOR};

/// Distribution of the manifold state `z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LatentLaw {
    /// Uniform over the parameter interval of a closed curve (`[0, 2π]` or `[0, L]`).
    UniformCurve,
    /// Independent uniform angles on `[0, 2π]²`.
    UniAng,
    /// Uniform with respect to torus surface area.
    UniTorus,
}

impl LatentLaw {
    pub fn name(&self) -> &'static str {
        match self {
            LatentLaw::UniformCurve => "uniform",
            LatentLaw::UniAng => "uniang",
            LatentLaw::UniTorus => "unitorus",
        }
    }

    /// Unnormalized density at `z` with respect to the parameter measure.
    pub fn density(&self, z: Latent) -> f64 {
        match self {
            LatentLaw::UniformCurve | LatentLaw::UniAng => 1.0,
            LatentLaw::UniTorus => TORUS_MAJOR + TORUS_MINOR * z.0[1].cos(),
        }
    }

    fn draw(&self, manifold: &Manifold, rng: &mut ChaCha8Rng) -> Latent {
        match self {
            LatentLaw::UniformCurve => Latent::curve(rng.random_range(0.0..manifold.periods()[0])),
            LatentLaw::UniAng => {
                Latent::surface(rng.random_range(0.0..TAU), rng.random_range(0.0..TAU))
            }
            LatentLaw::UniTorus => {
                let a = rng.random_range(0.0..TAU);
                let max = TORUS_MAJOR + TORUS_MINOR;
                loop {
                    let b = rng.random_range(0.0..TAU);
                    if rng.random::<f64>() * max < TORUS_MAJOR + TORUS_MINOR * b.cos() {
                        return Latent::surface(a, b);
                    }
                }
            }
        }
    }
}

/// A true generative model plus the training protocol used with it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueModelSpec {
    pub name: String,
    pub manifold: Manifold,
    pub coords: CoordinateField,
    pub law: LatentLaw,
    /// Diagonal of the frame-local covariance `Λ`.
    pub lambda: Vec<f64>,
    /// Training sample count.
    pub n_train: usize,
    pub landmarks: usize,
    pub em_iters: usize,
    pub seed: u64,
}

impl TrueModelSpec {
    pub fn dim(&self) -> usize {
        self.manifold.ambient_dim()
    }

    pub fn validate(&self) -> Result<()> {
        let curve = self.manifold.latent_dim() == 1;
        let legal = match self.law {
            LatentLaw::UniformCurve => curve,
            LatentLaw::UniAng | LatentLaw::UniTorus => matches!(self.manifold, Manifold::TorusR3),
        };
        if !legal {
            return Err(Error::IllegalPair {
                manifold: self.manifold.name().into(),
                law: self.law.name().into(),
            });
        }
        if self.lambda.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: self.lambda.len(),
            });
        }
        if self.lambda.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
            return Err(Error::InvalidArgument(
                "basic covariance entries must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// The true `p(z)` evaluated at the landmarks and normalized.
    pub fn landmark_weights(&self, landmarks: &LandmarkSet) -> Vec<f64> {
        let w: Vec<f64> = landmarks
            .points
            .iter()
            .map(|&z| self.law.density(z))
            .collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|v| v / total).collect()
    }

    /// The spec with its coordinate field replaced.
    pub fn with_coords(&self, coords: CoordinateField) -> Self {
        Self {
            coords,
            ..self.clone()
        }
    }
}

/// `T` samples from `spec`, with the latent states that produced them.
pub fn sample(spec: &TrueModelSpec) -> Result<(DataMatrix, Vec<Latent>)> {
    sample_n(spec, spec.n_train, spec.seed)
}

pub fn sample_n(spec: &TrueModelSpec, t: usize, seed: u64) -> Result<(DataMatrix, Vec<Latent>)> {
    spec.validate()?;
    let n = spec.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = DVector::from_iterator(n, spec.lambda.iter().map(|l| l.sqrt()));
    let mut data = DataMatrix::with_capacity(n, t);
    let mut latents = Vec::with_capacity(t);
    let mut point = vec![0.0; n];
    for _ in 0..t {
        let z = spec.law.draw(&spec.manifold, &mut rng);
        let v = DVector::from_fn(n, |i, _| {
            scale[i] * {
                let g: f64 = StandardNormal.sample(&mut rng);
                g
            }
        });
        let k = spec.coords.frame(&spec.manifold, z)?;
        spec.manifold.evaluate_into(z, &mut point);
        let y = DVector::from_column_slice(&point) + k * v;
        data.push(y.as_slice());
        latents.push(z);
    }
    Ok((data, latents))
}

/// Seed from which the 10-D loop's knots are drawn.
pub const LOOP10_SEED: u64 = 0x5EED_0010;
/// Amplitude of the first harmonic of the 10-D loop.
pub const LOOP10_SCALE: f64 = 10.0;

/// Six knots sampled at equal phase on a random two-harmonic closed curve in
/// `R^10`, interpolated by a closed cubic spline. Coefficients of harmonic `h`
/// are `N(0, (LOOP10_SCALE / h)²)` drawn from `LOOP10_SEED`.
pub fn canonical_loop10() -> Manifold {
    let n = 10;
    let k = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(LOOP10_SEED);
    let coef: Vec<[f64; 4]> = (0..n)
        .map(|_| {
            let g1 = Normal::new(0.0, LOOP10_SCALE).unwrap();
            let g2 = Normal::new(0.0, LOOP10_SCALE / 2.0).unwrap();
            [
                g1.sample(&mut rng),
                g1.sample(&mut rng),
                g2.sample(&mut rng),
                g2.sample(&mut rng),
            ]
        })
        .collect();
    let mut knots = DataMatrix::with_capacity(n, k);
    for i in 0..k {
        let th = TAU * i as f64 / k as f64;
        let row: Vec<f64> = coef
            .iter()
            .map(|c| {
                c[0] * th.cos()
                    + c[1] * th.sin()
                    + c[2] * (2.0 * th).cos()
                    + c[3] * (2.0 * th).sin()
            })
            .collect();
        knots.push(&row);
    }
    Manifold::ClosedSplineRn(
        ClosedSpline::through_knots(&knots, (0..k).collect())
            .expect("canonical knots are distinct"),
    )
}

/// Names of the eight standard simulation cases.
pub const STANDARD_SPEC_NAMES: [&str; 8] = [
    "loop2d-eucov",
    "loop2d-gecov",
    "loop10d-eucov",
    "loop10d-gecov",
    "torus-uniang-eucov",
    "torus-uniang-gecov",
    "torus-unitorus-eucov",
    "torus-unitorus-gecov",
];

pub fn standard_specs() -> Vec<TrueModelSpec> {
    STANDARD_SPEC_NAMES
        .iter()
        .map(|name| standard_spec(name).expect("known name"))
        .collect()
}

pub fn standard_spec(name: &str) -> Result<TrueModelSpec> {
    let coords = if name.ends_with("-gecov") {
        CoordinateField::Geometric
    } else if name.ends_with("-eucov") {
        CoordinateField::Euclidean
    } else {
        return Err(Error::UnknownName(name.into()));
    };
    let family = name.rsplit_once('-').map(|(f, _)| f).unwrap_or("");
    let (manifold, law, lambda, n_train, landmarks, em_iters) = match family {
        "loop2d" => (
            Manifold::Ellipse2D,
            LatentLaw::UniformCurve,
            vec![0.1, 0.3],
            5000,
            500,
            20,
        ),
        "loop10d" => (
            canonical_loop10(),
            LatentLaw::UniformCurve,
            vec![20.0, 2.0, 18.0, 4.0, 16.0, 6.0, 14.0, 8.0, 12.0, 10.0],
            5000,
            500,
            40,
        ),
        "torus-uniang" => (
            Manifold::TorusR3,
            LatentLaw::UniAng,
            vec![0.1, 0.3, 0.5],
            50000,
            1000,
            40,
        ),
        "torus-unitorus" => (
            Manifold::TorusR3,
            LatentLaw::UniTorus,
            vec![0.1, 0.3, 0.5],
            50000,
            1000,
            40,
        ),
        _ => return Err(Error::UnknownName(name.into())),
    };
    Ok(TrueModelSpec {
        name: name.into(),
        manifold,
        coords,
        law,
        lambda,
        n_train,
        landmarks,
        em_iters,
        seed: 0,
    })
}

/// Sample covariance of the residuals `K(z)'(y − φ(z))` given the true latents.
pub fn frame_residual_covariance(
    spec: &TrueModelSpec,
    data: &DataMatrix,
    latents: &[Latent],
) -> Result<nalgebra::DMatrix<f64>> {
    let n = spec.dim();
    let mut cov = nalgebra::DMatrix::zeros(n, n);
    for (i, &z) in latents.iter().enumerate() {
        let k = spec.coords.frame(&spec.manifold, z)?;
        let r = k.transpose() * (data.row_vector(i) - spec.manifold.evaluate(z));
        cov.ger(1.0, &r, &r, 1.0);
    }
    Ok(cov / latents.len() as f64)
}
