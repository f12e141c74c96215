//! Per-sample inner loops over landmarks.
//!
//! Every routine has one body written against a dimension argument; the
//! dispatchers instantiate it with a literal for the common ambient sizes so
//! the per-landmark loops unroll, and fall back to the runtime size otherwise.

/// Terms more than this many nats below a sample's largest joint log term
/// get zero posterior mass.
pub const LOG_CUTOFF: f64 = 60.0;

macro_rules! dispatch {
    ($n:expr, $f:ident($($arg:expr),*)) => {
        match $n {
            2 => $f(2, $($arg),*),
            3 => $f(3, $($arg),*),
            10 => $f(10, $($arg),*),
            n => $f(n, $($arg),*),
        }
    };
}

pub fn tri_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// `ln ω_j + ln p(y | z_j)` for every landmark into `out`; returns the maximum.
///
/// `precisions` holds the packed upper triangles of the ambient precisions.
#[allow(clippy::too_many_arguments)]
pub fn joint_log_terms(
    n: usize,
    centers: &[f64],
    precisions: &[f64],
    log_norm: f64,
    log_w: &[f64],
    y: &[f64],
    resid: &mut [f64],
    out: &mut [f64],
) -> f64 {
    dispatch!(
        n,
        joint_log_terms_impl(centers, precisions, log_norm, log_w, y, resid, out)
    )
}

#[inline(always)]
#[allow(clippy::too_many_arguments)]
fn joint_log_terms_impl(
    n: usize,
    centers: &[f64],
    precisions: &[f64],
    log_norm: f64,
    log_w: &[f64],
    y: &[f64],
    resid: &mut [f64],
    out: &mut [f64],
) -> f64 {
    let t = tri_len(n);
    let y = &y[..n];
    let r = &mut resid[..n];
    let mut max = f64::NEG_INFINITY;
    for (((c, p), &lw), o) in centers
        .chunks_exact(n)
        .zip(precisions.chunks_exact(t))
        .zip(log_w)
        .zip(out.iter_mut())
    {
        for a in 0..n {
            r[a] = y[a] - c[a];
        }
        let mut quad = 0.0;
        let mut idx = 0;
        for a in 0..n {
            let mut row = 0.5 * p[idx] * r[a];
            idx += 1;
            for b in a + 1..n {
                row += p[idx] * r[b];
                idx += 1;
            }
            quad += r[a] * row;
        }
        let v = lw + (log_norm - quad);
        *o = v;
        if v > max {
            max = v;
        }
    }
    max
}

/// `ln Σ_j exp(terms_j)` with the cutoff applied, given the maximum term.
pub fn log_total(terms: &[f64], max: f64) -> f64 {
    if max == f64::NEG_INFINITY || !max.is_finite() {
        return max;
    }
    let floor = max - LOG_CUTOFF;
    let mut s = 0.0;
    for &v in terms {
        if v >= floor {
            s += (v - max).exp();
        }
    }
    max + s.ln()
}

/// Replaces the joint log terms by normalized posteriors; returns the sample
/// log-likelihood (bit-identical to [`log_total`]).
pub fn normalize(terms: &mut [f64], max: f64) -> f64 {
    if max == f64::NEG_INFINITY || !max.is_finite() {
        return max;
    }
    let floor = max - LOG_CUTOFF;
    let mut s = 0.0;
    for v in terms.iter_mut() {
        if *v >= floor {
            *v = (*v - max).exp();
            s += *v;
        } else {
            *v = 0.0;
        }
    }
    let inv = 1.0 / s;
    for v in terms.iter_mut() {
        *v *= inv;
    }
    max + s.ln()
}

/// Normalizes the joint log terms of one sample and adds its posterior mass
/// and weighted residual scatter into the per-landmark accumulators.
/// Returns the sample log-likelihood (bit-identical to [`log_total`]).
pub fn accumulate_posterior(
    n: usize,
    centers: &[f64],
    y: &[f64],
    terms: &mut [f64],
    max: f64,
    col_sums: &mut [f64],
    scatter: &mut [f64],
) -> f64 {
    dispatch!(
        n,
        accumulate_posterior_impl(centers, y, terms, max, col_sums, scatter)
    )
}

#[inline(always)]
fn accumulate_posterior_impl(
    n: usize,
    centers: &[f64],
    y: &[f64],
    terms: &mut [f64],
    max: f64,
    col_sums: &mut [f64],
    scatter: &mut [f64],
) -> f64 {
    if max == f64::NEG_INFINITY || !max.is_finite() {
        return max;
    }
    let t = tri_len(n);
    let y = &y[..n];
    let floor = max - LOG_CUTOFF;
    let mut s = 0.0;
    for v in terms.iter_mut() {
        if *v >= floor {
            *v = (*v - max).exp();
            s += *v;
        } else {
            *v = 0.0;
        }
    }
    let inv = 1.0 / s;
    for (((&e, c), col), acc) in terms
        .iter()
        .zip(centers.chunks_exact(n))
        .zip(col_sums.iter_mut())
        .zip(scatter.chunks_exact_mut(t))
    {
        if e == 0.0 {
            continue;
        }
        let q = e * inv;
        *col += q;
        let mut idx = 0;
        for a in 0..n {
            let wa = q * (y[a] - c[a]);
            for b in a..n {
                acc[idx] += wa * (y[b] - c[b]);
                idx += 1;
            }
        }
    }
    max + s.ln()
}
