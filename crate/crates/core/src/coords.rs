//! Distribution-coordinate fields `K(z)`: orthonormal frames attached to the
//! manifold in which the deviation covariance is expressed.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{Latent, Manifold};

/// Candidates whose Gram–Schmidt residual falls below this norm are skipped.
pub const SKIP_TOL: f64 = 1e-8;

/// A rule producing an orthonormal `n × n` frame at each manifold state.
pub trait FrameField: Sync {
    fn frame(&self, manifold: &Manifold, z: Latent) -> Result<DMatrix<f64>>;
}

/// The two built-in coordinate fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CoordinateField {
    /// `K(z) = I_n` everywhere.
    #[serde(rename = "eucov")]
    Euclidean,
    /// Frames built from the manifold tangents: Gram–Schmidt against the
    /// standard basis for curves, tangent pair plus normal for the torus.
    #[serde(rename = "gecov")]
    Geometric,
}

impl CoordinateField {
    pub fn name(&self) -> &'static str {
        match self {
            CoordinateField::Euclidean => "eucov",
            CoordinateField::Geometric => "gecov",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "eucov" | "euclidean" => Ok(CoordinateField::Euclidean),
            "gecov" | "geometric" => Ok(CoordinateField::Geometric),
            other => Err(Error::UnknownName(format!("coordinate field '{other}'"))),
        }
    }
}

impl FrameField for CoordinateField {
    fn frame(&self, manifold: &Manifold, z: Latent) -> Result<DMatrix<f64>> {
        let n = manifold.ambient_dim();
        match self {
            CoordinateField::Euclidean => Ok(DMatrix::identity(n, n)),
            CoordinateField::Geometric => {
                let tangents = manifold.tangents(z)?;
                if tangents.len() == 2 && n == 3 {
                    surface_frame(&tangents[0], &tangents[1])
                } else {
                    gram_schmidt_frame(&tangents)
                }
            }
        }
    }
}

/// Orthonormal frame whose leading columns span the given vectors (in order),
/// completed from `e_1, e_2, …`. Completion columns are signed so their first
/// nonzero entry is positive.
pub fn gram_schmidt_frame(leading: &[DVector<f64>]) -> Result<DMatrix<f64>> {
    let n = leading.first().map(|v| v.len()).unwrap_or(0);
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(n);
    for v in leading {
        if let Some(u) = orthogonalize(v.clone(), &cols) {
            cols.push(u);
        } else {
            return Err(Error::DegenerateFrame {
                built: cols.len(),
                needed: n,
            });
        }
    }
    for k in 0..n {
        if cols.len() == n {
            break;
        }
        let mut e = DVector::zeros(n);
        e[k] = 1.0;
        if let Some(mut u) = orthogonalize(e, &cols) {
            if let Some(first) = u.iter().find(|x| x.abs() > 1e-12) {
                if *first < 0.0 {
                    u.neg_mut();
                }
            }
            cols.push(u);
        }
    }
    if cols.len() < n {
        return Err(Error::DegenerateFrame {
            built: cols.len(),
            needed: n,
        });
    }
    Ok(DMatrix::from_columns(&cols))
}

/// Two passes of modified Gram–Schmidt; `None` if the residual is below `SKIP_TOL`.
fn orthogonalize(mut v: DVector<f64>, basis: &[DVector<f64>]) -> Option<DVector<f64>> {
    let scale = v.norm();
    if scale == 0.0 {
        return None;
    }
    v /= scale;
    for _ in 0..2 {
        for b in basis {
            let p = b.dot(&v);
            v.axpy(-p, b, 1.0);
        }
    }
    let r = v.norm();
    (r >= SKIP_TOL).then(|| v / r)
}

/// Columns: unit `∂φ/∂z1`, unit `∂φ/∂z2`, and their cross product.
fn surface_frame(t1: &DVector<f64>, t2: &DVector<f64>) -> Result<DMatrix<f64>> {
    let a = t1.normalize();
    let b = t2.normalize();
    let c = DVector::from_vec(vec![
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]);
    if c.norm() < SKIP_TOL {
        return Err(Error::DegenerateFrame {
            built: 2,
            needed: 3,
        });
    }
    Ok(DMatrix::from_columns(&[a, b, c]))
}

/// Frames evaluated once per landmark.
#[derive(Debug, Clone)]
pub struct FrameCache {
    frames: Vec<DMatrix<f64>>,
}

impl FrameCache {
    pub fn build(field: &dyn FrameField, manifold: &Manifold, points: &[Latent]) -> Result<Self> {
        let frames = points
            .iter()
            .map(|&z| field.frame(manifold, z))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { frames })
    }

    pub fn get(&self, j: usize) -> &DMatrix<f64> {
        &self.frames[j]
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, DMatrix<f64>> {
        self.frames.iter()
    }
}
