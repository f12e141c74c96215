use std::path::Path;

use anyhow::Context;
use serde::Deserialize;

pub const SEED_ENV: &str = "PGPCA_SEED";

/// Values loaded with `--config`. Every field is optional; command-line
/// flags take precedence.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub spec: Option<String>,
    pub manifold: Option<String>,
    pub coords: Option<String>,
    pub dim: Option<usize>,
    pub dims: Option<String>,
    pub landmarks: Option<usize>,
    pub iters: Option<usize>,
    pub tol: Option<f64>,
    pub restarts: Option<usize>,
    pub knots: Option<usize>,
    pub folds: Option<usize>,
    pub trials: Option<usize>,
    pub trial_len: Option<usize>,
    pub samples: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text)
            .map_err(|e| crate::UsageError(format!("config {}: {e}", path.display())).into())
    }

    /// Seed from the flag, then the config file, then `PGPCA_SEED`, then 0.
    pub fn resolve_seed(&self, flag: Option<u64>) -> anyhow::Result<u64> {
        if let Some(s) = flag.or(self.seed) {
            return Ok(s);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v.trim().parse().map_err(|_| {
                crate::UsageError(format!("{SEED_ENV}={v:?} is not an unsigned integer")).into()
            }),
            Err(_) => Ok(0),
        }
    }
}

/// Parses `a..b` (inclusive, matching the usual `0..n` notation for all
/// model sizes), `a..=b`, `a..<b` or `a,b,c`.
pub fn parse_dims(s: &str) -> Result<Vec<usize>, String> {
    let num = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| format!("bad dimension {t:?} in {s:?}"))
    };
    let dims = if let Some((a, b)) = s.split_once("..<") {
        (num(a)?..num(b)?).collect()
    } else if let Some((a, b)) = s.split_once("..=") {
        (num(a)?..=num(b)?).collect()
    } else if let Some((a, b)) = s.split_once("..") {
        (num(a)?..=num(b)?).collect()
    } else {
        s.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if dims.is_empty() {
        return Err(format!("dimension list {s:?} is empty"));
    }
    Ok(dims)
}
