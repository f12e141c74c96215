//! Experiment harness: held-out trials, cross-validation, paired t-tests and
//! the Euclidean-vs-geometric coordinate comparison.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::coords::CoordinateField;
use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::exec::{map_indexed, ExecMode};
use crate::manifold::{make_landmarks, Manifold};
use crate::model::{fit, sample_log_likelihoods, FitConfig, FitReport, PgpcaModel};
use crate::numeric::KahanSum;
use crate::ppca::{fit_ppca, PpcaModel};
use crate::simulate::{sample_n, standard_spec, TrueModelSpec};

/// Significance level used in reports.
pub const ALPHA: f64 = 0.05;
/// p-values below this are reported as this value for perfectly separated samples.
pub const P_SENTINEL: f64 = 1e-16;

/// Anything that assigns a log-density to each sample.
pub trait DensityModel: Sync {
    fn dim(&self) -> usize;
    fn sample_log_likelihoods(&self, data: &DataMatrix, mode: ExecMode) -> Result<Vec<f64>>;
}

impl DensityModel for PgpcaModel {
    fn dim(&self) -> usize {
        self.ambient_dim()
    }

    fn sample_log_likelihoods(&self, data: &DataMatrix, mode: ExecMode) -> Result<Vec<f64>> {
        sample_log_likelihoods(self, data, mode)
    }
}

impl DensityModel for PpcaModel {
    fn dim(&self) -> usize {
        PpcaModel::dim(self)
    }

    fn sample_log_likelihoods(&self, data: &DataMatrix, mode: ExecMode) -> Result<Vec<f64>> {
        PpcaModel::sample_log_likelihoods(self, data, mode)
    }
}

/// Average log-likelihood `L/T` of each model on one held-out trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial_len: usize,
    pub averages: Vec<f64>,
}

/// Deterministic, well-mixed seed for stream `stream` of `base` (SplitMix64 finalizer).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mean log-likelihood per sample of `model` on `data`.
pub fn average_log_likelihood(
    model: &dyn DensityModel,
    data: &DataMatrix,
    mode: ExecMode,
) -> Result<f64> {
    let lls = model.sample_log_likelihoods(data, mode)?;
    Ok(KahanSum::from_iter(lls).total() / data.len() as f64)
}

/// Draws `n_trials` independent test sets from `spec` and scores every model on each.
pub fn evaluate_trials(
    models: &[&dyn DensityModel],
    spec: &TrueModelSpec,
    n_trials: usize,
    trial_len: usize,
    seed: u64,
    mode: ExecMode,
) -> Result<Vec<TrialResult>> {
    for m in models {
        if m.dim() != spec.dim() {
            return Err(Error::DimensionMismatch {
                expected: spec.dim(),
                got: m.dim(),
            });
        }
    }
    (0..n_trials)
        .map(|k| {
            let (data, _) = sample_n(spec, trial_len, derive_seed(seed, k as u64))?;
            let averages = models
                .iter()
                .map(|m| average_log_likelihood(*m, &data, mode))
                .collect::<Result<Vec<_>>>()?;
            Ok(TrialResult {
                trial_len,
                averages,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    /// Two-sided p-value.
    pub p: f64,
    pub mean_diff: f64,
    pub df: usize,
}

/// Paired t-test on `a − b` with `len − 1` degrees of freedom.
///
/// All-zero differences give `p = 1`; zero variance with a nonzero mean gives
/// `t = ±∞` and `p = P_SENTINEL`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: a.len(),
        });
    }
    let n = a.len() as f64;
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = KahanSum::from_iter(diffs.iter().copied()).total() / n;
    let var =
        KahanSum::from_iter(diffs.iter().map(|d| (d - mean) * (d - mean))).total() / (n - 1.0);
    let df = a.len() - 1;
    if diffs.iter().all(|&d| d == 0.0) {
        return Ok(TTest {
            t: 0.0,
            p: 1.0,
            mean_diff: 0.0,
            df,
        });
    }
    let sd = var.sqrt();
    if sd <= f64::EPSILON * mean.abs() {
        return Ok(TTest {
            t: f64::INFINITY.copysign(mean),
            p: P_SENTINEL,
            mean_diff: mean,
            df,
        });
    }
    let t = mean / (sd / n.sqrt());
    let dist =
        StudentsT::new(0.0, 1.0, df as f64).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let p = (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0);
    Ok(TTest {
        t,
        p,
        mean_diff: mean,
        df,
    })
}

/// Test-fold index sets for `folds`-fold cross-validation over `t` samples.
///
/// Folds are contiguous blocks unless `shuffle` provides a seed; either way
/// they partition `0..t`.
pub fn kfold_indices(t: usize, folds: usize, shuffle: Option<u64>) -> Result<Vec<Vec<usize>>> {
    if folds < 2 || folds > t {
        return Err(Error::InvalidArgument(format!(
            "need 2 <= folds <= samples, got {folds} folds for {t} samples"
        )));
    }
    let mut order: Vec<usize> = (0..t).collect();
    if let Some(seed) = shuffle {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
    }
    Ok((0..folds)
        .map(|f| order[f * t / folds..(f + 1) * t / folds].to_vec())
        .collect())
}

/// Settings shared by the comparison entry points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    pub dims: Vec<usize>,
    pub folds: usize,
    pub trials: usize,
    pub trial_len: usize,
    pub seed: u64,
    /// Overrides the spec's landmark count.
    pub landmarks: Option<usize>,
    /// Overrides the spec's EM iteration count.
    pub iters: Option<usize>,
    pub elbo_tol: f64,
    pub learn_weights: bool,
    /// Fix `ω` at the true `p(z)` (simulated data only).
    pub given_weights: bool,
    pub shuffle_folds: bool,
    pub restarts: usize,
    #[serde(skip)]
    pub exec: ExecMode,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            dims: vec![],
            folds: 5,
            trials: 20,
            trial_len: 2000,
            seed: 0,
            landmarks: None,
            iters: None,
            elbo_tol: 1e-7,
            learn_weights: true,
            given_weights: false,
            shuffle_folds: false,
            restarts: 1,
            exec: ExecMode::default(),
        }
    }
}

/// Result of comparing the coordinate fields at one model dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimComparison {
    pub m: usize,
    pub gecov: f64,
    pub eucov: f64,
    pub ppca: f64,
    pub winner: CoordinateField,
    /// Paired test of GeCOV against EuCOV.
    pub test: TTest,
    pub significant: bool,
    /// Per-trial (or pooled per-sample, for file data) averages behind the means.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub trials: Vec<TrialResult>,
    pub gecov_reports: Vec<FitReport>,
    pub eucov_reports: Vec<FitReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub source: String,
    pub dims: Vec<DimComparison>,
}

fn summarize(
    m: usize,
    ge: &[f64],
    eu: &[f64],
    pp: &[f64],
) -> Result<(f64, f64, f64, CoordinateField, TTest)> {
    let mean = |v: &[f64]| KahanSum::from_iter(v.iter().copied()).total() / v.len() as f64;
    let test = paired_t_test(ge, eu)?;
    let (g, e) = (mean(ge), mean(eu));
    let winner = if g >= e {
        CoordinateField::Geometric
    } else {
        CoordinateField::Euclidean
    };
    let _ = m;
    Ok((g, e, mean(pp), winner, test))
}

/// Outcome of one simulated case: both PGPCA fits and PPCA scored on the same trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationCase {
    pub spec: String,
    pub m: usize,
    pub learn_weights: bool,
    pub gecov: Vec<f64>,
    pub eucov: Vec<f64>,
    pub ppca: Vec<f64>,
    pub gecov_report: FitReport,
    pub eucov_report: FitReport,
}

impl SimulationCase {
    pub fn mean(v: &[f64]) -> f64 {
        KahanSum::from_iter(v.iter().copied()).total() / v.len() as f64
    }

    /// Per-trial averages of the fit whose coordinate field matches / does not match the truth.
    pub fn matched(&self, truth: CoordinateField) -> (&[f64], &[f64]) {
        match truth {
            CoordinateField::Geometric => (&self.gecov, &self.eucov),
            CoordinateField::Euclidean => (&self.eucov, &self.gecov),
        }
    }
}

/// Trains GeCOV and EuCOV PGPCA plus PPCA on data from `spec` and scores them
/// on independent test trials.
pub fn run_simulation_case(
    spec: &TrueModelSpec,
    m: usize,
    cfg: &CompareConfig,
) -> Result<SimulationCase> {
    let (train, _) = sample_n(spec, spec.n_train, derive_seed(cfg.seed, 0xA11CE))?;
    let landmarks = cfg.landmarks.unwrap_or(spec.landmarks);
    let initial_weights = if cfg.given_weights {
        Some(spec.landmark_weights(&make_landmarks(&spec.manifold, landmarks)?))
    } else {
        None
    };
    let fit_cfg = FitConfig {
        dim: m,
        landmarks,
        max_iters: cfg.iters.unwrap_or(spec.em_iters),
        elbo_tol: cfg.elbo_tol,
        seed: derive_seed(cfg.seed, 0xF17),
        learn_weights: cfg.learn_weights && !cfg.given_weights,
        restarts: cfg.restarts,
        initial_weights,
        exec: cfg.exec,
    };
    let (ge, ge_report) = fit(&train, &spec.manifold, CoordinateField::Geometric, &fit_cfg)?;
    let (eu, eu_report) = fit(&train, &spec.manifold, CoordinateField::Euclidean, &fit_cfg)?;
    let pp = fit_ppca(&train, m)?;
    let trials = evaluate_trials(
        &[&ge, &eu, &pp],
        spec,
        cfg.trials,
        cfg.trial_len,
        derive_seed(cfg.seed, 0x7E57),
        cfg.exec,
    )?;
    let col = |k: usize| trials.iter().map(|t| t.averages[k]).collect::<Vec<_>>();
    Ok(SimulationCase {
        spec: spec.name.clone(),
        m,
        learn_weights: fit_cfg.learn_weights,
        gecov: col(0),
        eucov: col(1),
        ppca: col(2),
        gecov_report: ge_report,
        eucov_report: eu_report,
    })
}

/// Coordinate comparison on a simulated spec, one case per requested dimension.
pub fn compare_spec(spec: &TrueModelSpec, cfg: &CompareConfig) -> Result<ComparisonReport> {
    let dims = if cfg.dims.is_empty() {
        vec![spec.dim()]
    } else {
        cfg.dims.clone()
    };
    let mut out = Vec::new();
    for &m in &dims {
        let case = run_simulation_case(spec, m, cfg)?;
        let (gecov, eucov, ppca, winner, test) =
            summarize(m, &case.gecov, &case.eucov, &case.ppca)?;
        let trials = (0..case.gecov.len())
            .map(|k| TrialResult {
                trial_len: cfg.trial_len,
                averages: vec![case.gecov[k], case.eucov[k], case.ppca[k]],
            })
            .collect();
        out.push(DimComparison {
            m,
            gecov,
            eucov,
            ppca,
            winner,
            significant: test.p < ALPHA,
            test,
            trials,
            gecov_reports: vec![case.gecov_report],
            eucov_reports: vec![case.eucov_report],
        });
    }
    Ok(ComparisonReport {
        source: spec.name.clone(),
        dims: out,
    })
}

/// Coordinate comparison on a data set by k-fold cross-validation. Test
/// log-likelihoods are pooled over folds and compared per sample.
pub fn compare_data(
    data: &DataMatrix,
    manifold: &Manifold,
    cfg: &CompareConfig,
) -> Result<ComparisonReport> {
    let n = manifold.ambient_dim();
    if data.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: data.dim(),
        });
    }
    let folds = kfold_indices(data.len(), cfg.folds, cfg.shuffle_folds.then_some(cfg.seed))?;
    let dims = if cfg.dims.is_empty() {
        vec![n]
    } else {
        cfg.dims.clone()
    };
    let mut out = Vec::new();
    for &m in &dims {
        let fit_cfg = FitConfig {
            dim: m,
            landmarks: cfg.landmarks.unwrap_or(500),
            max_iters: cfg.iters.unwrap_or(40),
            elbo_tol: cfg.elbo_tol,
            seed: derive_seed(cfg.seed, m as u64),
            learn_weights: cfg.learn_weights,
            restarts: cfg.restarts,
            initial_weights: None,
            exec: cfg.exec,
        };
        let per_fold = map_indexed(ExecMode::Sequential, folds.len(), |f| -> Result<_> {
            let test_idx = &folds[f];
            let train_idx: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|(g, _)| *g != f)
                .flat_map(|(_, idx)| idx.iter().copied())
                .collect();
            let train = data.select_rows(&train_idx);
            let test = data.select_rows(test_idx);
            let (ge, ge_rep) = fit(&train, manifold, CoordinateField::Geometric, &fit_cfg)?;
            let (eu, eu_rep) = fit(&train, manifold, CoordinateField::Euclidean, &fit_cfg)?;
            let pp = fit_ppca(&train, m)?;
            Ok((
                ge.sample_log_likelihoods(&test, cfg.exec)?,
                eu.sample_log_likelihoods(&test, cfg.exec)?,
                DensityModel::sample_log_likelihoods(&pp, &test, cfg.exec)?,
                ge_rep,
                eu_rep,
            ))
        });
        let (mut ge, mut eu, mut pp) = (Vec::new(), Vec::new(), Vec::new());
        let (mut ge_reps, mut eu_reps) = (Vec::new(), Vec::new());
        for r in per_fold {
            let (a, b, c, ra, rb) = r?;
            ge.extend(a);
            eu.extend(b);
            pp.extend(c);
            ge_reps.push(ra);
            eu_reps.push(rb);
        }
        let (gecov, eucov, ppca, winner, test) = summarize(m, &ge, &eu, &pp)?;
        out.push(DimComparison {
            m,
            gecov,
            eucov,
            ppca,
            winner,
            significant: test.p < ALPHA,
            test,
            trials: vec![],
            gecov_reports: ge_reps,
            eucov_reports: eu_reps,
        });
    }
    Ok(ComparisonReport {
        source: "data".into(),
        dims: out,
    })
}

/// One column of the full-rank simulation grid: the true model family and
/// coordinate field, with the mean trial-average log-likelihood of each fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridColumn {
    pub family: String,
    pub truth: CoordinateField,
    pub gecov: f64,
    pub eucov: f64,
    pub ppca: f64,
    /// Matched against unmatched fit, per averaged case.
    pub tests: Vec<TTest>,
    pub cases: Vec<SimulationCase>,
}

impl GridColumn {
    pub fn matched_and_unmatched(&self) -> (f64, f64) {
        match self.truth {
            CoordinateField::Geometric => (self.gecov, self.eucov),
            CoordinateField::Euclidean => (self.eucov, self.gecov),
        }
    }
}

/// Spec names and weight modes averaged into one grid column.
pub fn grid_cases(family: &str, truth: CoordinateField) -> Result<Vec<(String, bool)>> {
    let suffix = truth.name();
    match family {
        "loop2d" | "loop10d" => Ok(vec![(format!("{family}-{suffix}"), false)]),
        "torus" => Ok(["uniang", "unitorus"]
            .iter()
            .flat_map(|law| [false, true].map(|given| (format!("torus-{law}-{suffix}"), given)))
            .collect()),
        other => Err(Error::UnknownName(other.into())),
    }
}

/// Full-rank fits for one column; torus columns average over both latent laws
/// and over given and learned `ω`.
pub fn run_grid_column(
    family: &str,
    truth: CoordinateField,
    cfg: &CompareConfig,
) -> Result<GridColumn> {
    let mut cases = Vec::new();
    for (k, (name, given)) in grid_cases(family, truth)?.into_iter().enumerate() {
        let spec = standard_spec(&name)?;
        let case_cfg = CompareConfig {
            given_weights: given,
            seed: derive_seed(cfg.seed, k as u64),
            ..cfg.clone()
        };
        cases.push(run_simulation_case(&spec, spec.dim(), &case_cfg)?);
    }
    let avg = |f: &dyn Fn(&SimulationCase) -> &Vec<f64>| {
        cases
            .iter()
            .map(|c| SimulationCase::mean(f(c)))
            .sum::<f64>()
            / cases.len() as f64
    };
    let tests = cases
        .iter()
        .map(|c| {
            let (a, b) = c.matched(truth);
            paired_t_test(a, b)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GridColumn {
        family: family.into(),
        truth,
        gecov: avg(&|c| &c.gecov),
        eucov: avg(&|c| &c.eucov),
        ppca: avg(&|c| &c.ppca),
        tests,
        cases,
    })
}

/// The six simulation columns of the full-rank comparison grid.
pub fn reproduce_grid(
    cfg: &CompareConfig,
    mut progress: impl FnMut(&GridColumn),
) -> Result<Vec<GridColumn>> {
    let mut cols = Vec::new();
    for family in ["loop2d", "loop10d", "torus"] {
        for truth in [CoordinateField::Geometric, CoordinateField::Euclidean] {
            let col = run_grid_column(family, truth, cfg)?;
            progress(&col);
            cols.push(col);
        }
    }
    Ok(cols)
}

/// Plain-text rendering of grid columns (rows: fitted model; columns: truth).
pub fn format_grid(cols: &[GridColumn]) -> String {
    let mut s = String::from("fit \\ true   ");
    for c in cols {
        s.push_str(&format!(
            "{:>16}",
            format!("{}-{}", c.family, c.truth.name())
        ));
    }
    s.push('\n');
    for (label, f) in [
        (
            "GeCOV",
            (|c: &GridColumn| c.gecov) as fn(&GridColumn) -> f64,
        ),
        ("EuCOV", |c: &GridColumn| c.eucov),
        ("PPCA", |c: &GridColumn| c.ppca),
    ] {
        s.push_str(&format!("{label:<13}"));
        for c in cols {
            s.push_str(&format!("{:>16.3}", f(c)));
        }
        s.push('\n');
    }
    s
}
