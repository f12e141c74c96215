mod args;
mod config;

use std::fmt;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::Parser;
use pgpca::eval::{compare_data, compare_spec, format_grid, reproduce_grid, CompareConfig};
use pgpca::{
    fit, fit_closed_spline, fit_ppca, standard_spec, CoordinateField, DataMatrix, ExecMode,
    FitConfig, Manifold, PgpcaModel, PpcaModel,
};

use crate::args::{Cli, Command};
use crate::config::{parse_dims, FileConfig};

/// A mistake in how the program was invoked (exit code 1).
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 1;
    }
    match err.downcast_ref::<pgpca::Error>() {
        Some(
            pgpca::Error::UnknownName(_)
            | pgpca::Error::InvalidArgument(_)
            | pgpca::Error::InvalidDimension { .. }
            | pgpca::Error::IllegalPair { .. }
            | pgpca::Error::TooManyKnots(_),
        ) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let exec = configure_threads(cli.threads)?;
    match cli.command {
        Command::Simulate(a) => {
            let name = a
                .spec
                .or(file.spec.clone())
                .ok_or_else(|| usage("--spec is required"))?;
            let mut spec = standard_spec(&name)?;
            spec.seed = file.resolve_seed(a.seed)?;
            let t = a.samples.or(file.samples).unwrap_or(spec.n_train);
            let (data, latents) = pgpca::simulate::sample_n(&spec, t, spec.seed)?;
            let header = a.header.then(|| {
                (1..=data.dim())
                    .map(|i| format!("y{i}"))
                    .collect::<Vec<_>>()
            });
            data.write_csv_path(&a.out, header.as_deref())?;
            if let Some(path) = a.latents {
                let l = spec.manifold.latent_dim();
                let mut z = DataMatrix::with_capacity(l, latents.len());
                for p in &latents {
                    z.push(&p.0[..l]);
                }
                let header = a
                    .header
                    .then(|| (1..=l).map(|i| format!("z{i}")).collect::<Vec<_>>());
                z.write_csv_path(&path, header.as_deref())?;
            }
        }
        Command::FitManifold(a) => {
            let data = read_data(&a.data)?;
            let knots = a.knots.or(file.knots).unwrap_or(10);
            let manifold = fit_closed_spline(&data, knots, file.resolve_seed(a.seed)?)?;
            write_text(&a.out, &serde_json::to_string_pretty(&manifold)?)?;
        }
        Command::Fit(a) => {
            let data = read_data(&a.data)?;
            let manifold = manifold_arg(a.manifold.or(file.manifold.clone()))?;
            let coords = CoordinateField::parse(
                &a.coords
                    .or(file.coords.clone())
                    .unwrap_or_else(|| "gecov".into()),
            )?;
            let defaults = FitConfig::default();
            let cfg = FitConfig {
                dim: a.dim.or(file.dim).unwrap_or(manifold.ambient_dim()),
                landmarks: a.landmarks.or(file.landmarks).unwrap_or(defaults.landmarks),
                max_iters: a.iters.or(file.iters).unwrap_or(defaults.max_iters),
                elbo_tol: a.tol.or(file.tol).unwrap_or(defaults.elbo_tol),
                seed: file.resolve_seed(a.seed)?,
                learn_weights: !a.fixed_weights,
                restarts: a.restarts.or(file.restarts).unwrap_or(1),
                initial_weights: None,
                exec,
            };
            let (model, report) = fit(&data, &manifold, coords, &cfg)?;
            write_text(&a.out, &model.to_json()?)?;
            if let Some(w) = &report.warning {
                eprintln!("warning: {w}");
            }
            match a.report {
                Some(p) => write_text(&p, &serde_json::to_string_pretty(&report)?)?,
                None => println!(
                    "log-likelihood {:.6} after {} iterations",
                    report.final_log_likelihood(),
                    report.iterations
                ),
            }
        }
        Command::Ppca(a) => {
            let data = read_data(&a.data)?;
            let model = fit_ppca(&data, a.dim.or(file.dim).unwrap_or(data.dim()))?;
            write_text(&a.out, &serde_json::to_string_pretty(&model)?)?;
        }
        Command::Loglik(a) => {
            let data = read_data(&a.data)?;
            let text = std::fs::read_to_string(&a.model)
                .with_context(|| format!("reading {}", a.model.display()))?;
            let lls = match PgpcaModel::from_json(&text) {
                Ok(m) => pgpca::model::sample_log_likelihoods(&m, &data, exec)?,
                Err(first) => match serde_json::from_str::<PpcaModel>(&text) {
                    Ok(m) => m.sample_log_likelihoods(&data, exec)?,
                    Err(_) => {
                        return Err(anyhow::Error::new(first)
                            .context(format!("loading {}", a.model.display())))
                    }
                },
            };
            let total = pgpca::numeric::KahanSum::from_iter(lls.iter().copied()).total();
            println!(
                "{}",
                serde_json::json!({ "log_likelihood": total, "average": total / lls.len() as f64, "samples": lls.len() })
            );
            if let Some(p) = a.per_sample {
                DataMatrix::new(1, lls)?.write_csv_path(&p, None)?;
            }
        }
        Command::Compare(a) => {
            let defaults = CompareConfig::default();
            let mut cfg = CompareConfig {
                dims: vec![],
                folds: a.folds.or(file.folds).unwrap_or(defaults.folds),
                trials: a.trials.or(file.trials).unwrap_or(defaults.trials),
                trial_len: a.trial_len.or(file.trial_len).unwrap_or(defaults.trial_len),
                seed: file.resolve_seed(a.seed)?,
                landmarks: a.landmarks.or(file.landmarks),
                iters: a.iters.or(file.iters),
                given_weights: a.given_weights,
                shuffle_folds: a.shuffle,
                restarts: file.restarts.unwrap_or(1),
                exec,
                ..defaults
            };
            if let Some(d) = a.dims.or(file.dims.clone()) {
                cfg.dims = parse_dims(&d).map_err(usage)?;
            }
            let report = match (a.spec.or(file.spec.clone()), a.data) {
                (Some(name), None) => compare_spec(&standard_spec(&name)?, &cfg)?,
                (None, Some(path)) => {
                    if cfg.given_weights {
                        bail!(UsageError(
                            "--given-weights needs a simulated --spec".into()
                        ));
                    }
                    let manifold = manifold_arg(a.manifold.or(file.manifold.clone()))?;
                    compare_data(&read_data(&path)?, &manifold, &cfg)?
                }
                _ => bail!(UsageError("give exactly one of --spec or --data".into())),
            };
            for d in &report.dims {
                println!(
                    "m={:<3} gecov {:>10.4} eucov {:>10.4} ppca {:>10.4} winner {} p={:.3e}",
                    d.m,
                    d.gecov,
                    d.eucov,
                    d.ppca,
                    d.winner.name(),
                    d.test.p
                );
            }
            if let Some(p) = a.out {
                write_text(&p, &serde_json::to_string_pretty(&report)?)?;
            }
        }
        Command::Reproduce(a) => {
            if a.experiment != "table2-sim" {
                bail!(UsageError(format!(
                    "unknown experiment {:?}; available: table2-sim",
                    a.experiment
                )));
            }
            let defaults = CompareConfig::default();
            let cfg = CompareConfig {
                trials: a.trials.or(file.trials).unwrap_or(defaults.trials),
                trial_len: a.trial_len.or(file.trial_len).unwrap_or(defaults.trial_len),
                seed: file.resolve_seed(a.seed)?,
                exec,
                ..defaults
            };
            let cols = reproduce_grid(&cfg, |c| {
                eprintln!("finished {}-{}", c.family, c.truth.name());
            })?;
            print!("{}", format_grid(&cols));
            if let Some(p) = a.out {
                write_text(&p, &serde_json::to_string_pretty(&cols)?)?;
            }
        }
    }
    Ok(())
}

#[cfg(feature = "parallel")]
fn configure_threads(threads: Option<usize>) -> anyhow::Result<ExecMode> {
    match threads {
        Some(0) => Err(usage("--threads must be at least 1")),
        Some(1) => Ok(ExecMode::Sequential),
        Some(n) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()?;
            Ok(ExecMode::Parallel)
        }
        None => Ok(ExecMode::Parallel),
    }
}

#[cfg(not(feature = "parallel"))]
fn configure_threads(threads: Option<usize>) -> anyhow::Result<ExecMode> {
    if threads.is_some_and(|t| t > 1) {
        eprintln!("warning: built without the `parallel` feature; running on one thread");
    }
    Ok(ExecMode::Sequential)
}

fn manifold_arg(value: Option<String>) -> anyhow::Result<Manifold> {
    let v = value.ok_or_else(|| usage("--manifold is required"))?;
    Ok(Manifold::from_name_or_path(&v)?)
}

fn read_data(path: &Path) -> anyhow::Result<DataMatrix> {
    let data =
        DataMatrix::read_csv_path(path).with_context(|| format!("reading {}", path.display()))?;
    if data.is_empty() {
        bail!(pgpca::Error::InsufficientData { needed: 1, got: 0 });
    }
    Ok(data)
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
