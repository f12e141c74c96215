//! Manifolds `φ: Ω_z → R^n`: the analytic ellipse and torus, closed cubic
//! splines fitted from data, and landmark grids over their domains.

pub mod kmeans;
pub mod spline;
pub mod tsp;

use std::f64::consts::TAU;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{Error, Result};

pub use kmeans::{kmeans, kmeans_detailed, KMeansResult};
pub use spline::ClosedSpline;
pub use tsp::tsp_order;

/// Tangent norms below this are treated as a collapsed parameterization.
pub const MIN_TANGENT_NORM: f64 = 1e-12;

/// Torus radii: `φ(z) = [(R + r cos z2) cos z1, (R + r cos z2) sin z1, r sin z2]`.
pub const TORUS_MAJOR: f64 = 3.0;
pub const TORUS_MINOR: f64 = 1.0;

/// A point of the latent domain. Curves use only the first coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Latent(pub [f64; 2]);

impl Latent {
    pub fn curve(t: f64) -> Self {
        Latent([t, 0.0])
    }

    pub fn surface(a: f64, b: f64) -> Self {
        Latent([a, b])
    }

    pub fn t(&self) -> f64 {
        self.0[0]
    }
}

/// The manifold map `φ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum Manifold {
    /// `[cos z, 2 sin z]` on `[0, 2π]`.
    Ellipse2D,
    /// Ring torus in `R^3` over `[0, 2π]²`.
    TorusR3,
    /// Closed cubic spline in `R^n` over `[0, L]`.
    ClosedSplineRn(ClosedSpline),
    /// Constant map to a single point; used to express the linear PPCA model
    /// as a degenerate manifold model.
    Constant { point: Vec<f64> },
}

impl Manifold {
    pub fn ambient_dim(&self) -> usize {
        match self {
            Manifold::Ellipse2D => 2,
            Manifold::TorusR3 => 3,
            Manifold::ClosedSplineRn(s) => s.dim(),
            Manifold::Constant { point } => point.len(),
        }
    }

    /// Intrinsic dimension `l` of the latent domain.
    pub fn latent_dim(&self) -> usize {
        match self {
            Manifold::TorusR3 => 2,
            _ => 1,
        }
    }

    /// Period of each latent coordinate.
    pub fn periods(&self) -> [f64; 2] {
        match self {
            Manifold::Ellipse2D | Manifold::Constant { .. } => [TAU, 0.0],
            Manifold::TorusR3 => [TAU, TAU],
            Manifold::ClosedSplineRn(s) => [s.length(), 0.0],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Manifold::Ellipse2D => "ellipse",
            Manifold::TorusR3 => "torus",
            Manifold::ClosedSplineRn(_) => "spline",
            Manifold::Constant { .. } => "constant",
        }
    }

    /// Wraps `z` into `[0, period)` per coordinate.
    pub fn wrap(&self, z: Latent) -> Latent {
        let p = self.periods();
        let mut out = z;
        for k in 0..self.latent_dim() {
            out.0[k] = z.0[k].rem_euclid(p[k]);
        }
        out
    }

    /// Writes `φ(z)` into `out` (length `n`).
    pub fn evaluate_into(&self, z: Latent, out: &mut [f64]) {
        let z = self.wrap(z);
        match self {
            Manifold::Ellipse2D => {
                out[0] = z.0[0].cos();
                out[1] = 2.0 * z.0[0].sin();
            }
            Manifold::TorusR3 => {
                let (s1, c1) = z.0[0].sin_cos();
                let (s2, c2) = z.0[1].sin_cos();
                let rho = TORUS_MAJOR + TORUS_MINOR * c2;
                out[0] = rho * c1;
                out[1] = rho * s1;
                out[2] = TORUS_MINOR * s2;
            }
            Manifold::ClosedSplineRn(s) => s.evaluate_into(z.t(), out),
            Manifold::Constant { point } => out.copy_from_slice(point),
        }
    }

    pub fn evaluate(&self, z: Latent) -> DVector<f64> {
        let mut out = DVector::zeros(self.ambient_dim());
        self.evaluate_into(z, out.as_mut_slice());
        out
    }

    /// Unnormalized tangent vectors `∂φ/∂z_k`, one per latent coordinate.
    pub fn tangents(&self, z: Latent) -> Result<Vec<DVector<f64>>> {
        let z = self.wrap(z);
        let vecs = match self {
            Manifold::Ellipse2D => {
                let (s, c) = z.0[0].sin_cos();
                vec![DVector::from_vec(vec![-s, 2.0 * c])]
            }
            Manifold::TorusR3 => {
                let (s1, c1) = z.0[0].sin_cos();
                let (s2, c2) = z.0[1].sin_cos();
                let rho = TORUS_MAJOR + TORUS_MINOR * c2;
                vec![
                    DVector::from_vec(vec![-rho * s1, rho * c1, 0.0]),
                    DVector::from_vec(vec![
                        -TORUS_MINOR * s2 * c1,
                        -TORUS_MINOR * s2 * s1,
                        TORUS_MINOR * c2,
                    ]),
                ]
            }
            Manifold::ClosedSplineRn(s) => vec![s.derivative(z.t())],
            Manifold::Constant { point } => vec![DVector::zeros(point.len())],
        };
        for v in &vecs {
            let norm = v.norm();
            if norm < MIN_TANGENT_NORM {
                return Err(Error::DegenerateTangent(norm));
            }
        }
        Ok(vecs)
    }

    /// Reads a manifold from a name (`ellipse`, `torus`) or a JSON file path.
    pub fn from_name_or_path(spec: &str) -> Result<Self> {
        match spec {
            "ellipse" => Ok(Manifold::Ellipse2D),
            "torus" => Ok(Manifold::TorusR3),
            path => {
                let text =
                    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{path}: {e}")))?;
                Ok(serde_json::from_str(&text)?)
            }
        }
    }
}

/// Landmarks `z_{1:M}` and their probability weights `ω_{1:M}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkSet {
    pub points: Vec<Latent>,
    pub weights: Vec<f64>,
}

impl LandmarkSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Replaces the weights with `w` normalized to sum to one.
    pub fn set_weights_normalized(&mut self, w: &[f64]) -> Result<()> {
        if w.len() != self.points.len() {
            return Err(Error::LengthMismatch(w.len(), self.points.len()));
        }
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = crate::numeric::pairwise_sum(w);
        if total <= 0.0 {
            return Err(Error::InvalidArgument("weights sum to zero".into()));
        }
        self.weights = w.iter().map(|v| v / total).collect();
        Ok(())
    }
}

/// Uniform grid of `count` landmarks over the manifold domain with uniform weights.
///
/// Surfaces use a `⌈√M⌉ × ⌈√M⌉` grid (first coordinate outer) truncated to `M` points.
pub fn make_landmarks(manifold: &Manifold, count: usize) -> Result<LandmarkSet> {
    if count == 0 {
        return Err(Error::InvalidArgument(
            "landmark count must be at least 1".into(),
        ));
    }
    let p = manifold.periods();
    let points: Vec<Latent> = if manifold.latent_dim() == 1 {
        (0..count)
            .map(|j| Latent::curve(p[0] * j as f64 / count as f64))
            .collect()
    } else {
        let side = (count as f64).sqrt().ceil() as usize;
        let side = if (side - 1) * (side - 1) >= count {
            side - 1
        } else {
            side
        };
        (0..side)
            .flat_map(|a| (0..side).map(move |b| (a, b)))
            .take(count)
            .map(|(a, b)| {
                Latent::surface(p[0] * a as f64 / side as f64, p[1] * b as f64 / side as f64)
            })
            .collect()
    };
    let weights = vec![1.0 / count as f64; count];
    Ok(LandmarkSet { points, weights })
}

/// Fits a closed cubic spline to data: k-means centers become knots, an exact
/// shortest tour orders them, and a periodic cubic spline interpolates the tour.
pub fn fit_closed_spline(data: &DataMatrix, n_knots: usize, seed: u64) -> Result<Manifold> {
    if n_knots < 3 {
        return Err(Error::InvalidArgument(format!(
            "a closed spline needs at least 3 knots, got {n_knots}"
        )));
    }
    if data.len() < n_knots {
        return Err(Error::InsufficientData {
            needed: n_knots,
            got: data.len(),
        });
    }
    let centers = kmeans(data, n_knots, seed)?;
    let order = tsp_order(&centers)?;
    let knots = centers.select_rows(&order);
    let spline = ClosedSpline::through_knots(&knots, order)?;
    Ok(Manifold::ClosedSplineRn(spline))
}
