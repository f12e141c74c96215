//! Probabilistic geometric PCA.
//!
//! Models data distributed around a nonlinear manifold,
//! `y = φ(z) + K(z)(C x + r)`, where `φ` is a closed curve or a torus, `K(z)` is an
//! orthonormal frame attached to the manifold, `x ~ N(0, I_m)` and
//! `r ~ N(0, σ² I_n)`. The latent state `z` is discretized on landmarks and all
//! parameters are learned by EM. Euclidean (`K = I`) and geometric (tangent
//! based) frames can be compared by held-out log-likelihood.
//!
//! The inner loops over samples run on rayon when the `parallel` feature is
//! enabled (the default); chunk boundaries and reduction order are fixed, so
//! results are bit-identical to the sequential path.

#![allow(clippy::needless_range_loop)]

pub mod coords;
pub mod data;
pub mod error;
pub mod eval;
pub mod exec;
mod kernel;
pub mod manifold;
pub mod model;
pub mod numeric;
pub mod ppca;
pub mod simulate;

pub use coords::{CoordinateField, FrameField};
pub use data::DataMatrix;
pub use error::{Error, Result};
pub use exec::ExecMode;
pub use manifold::{fit_closed_spline, make_landmarks, LandmarkSet, Latent, Manifold};
pub use model::{
    e_step, elbo, fit, gamma_matrix, log_cond_density, log_likelihood, m_step_params,
    m_step_weights, FitConfig, FitReport, PgpcaModel, Responsibilities,
};
pub use ppca::{fit_ppca, ppca_log_likelihood, PpcaModel};
pub use simulate::{sample, standard_spec, standard_specs, TrueModelSpec};
