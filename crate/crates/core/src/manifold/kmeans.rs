//! Lloyd's k-means with k-means++ seeding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::exec::{map_fold_chunks, ExecMode};

pub const MAX_ITERS: usize = 300;
pub const SHIFT_TOL: f64 = 1e-8;
const CHUNK: usize = 1024;

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub centers: DataMatrix,
    pub labels: Vec<usize>,
    /// Sum of squared distances after each assignment step.
    pub objective: Vec<f64>,
    pub iterations: usize,
}

/// Cluster centers of `data` for `k` clusters.
pub fn kmeans(data: &DataMatrix, k: usize, seed: u64) -> Result<DataMatrix> {
    kmeans_detailed(data, k, seed, ExecMode::default()).map(|r| r.centers)
}

pub fn kmeans_detailed(
    data: &DataMatrix,
    k: usize,
    seed: u64,
    mode: ExecMode,
) -> Result<KMeansResult> {
    let t = data.len();
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if t < k {
        return Err(Error::InsufficientData { needed: k, got: t });
    }
    if !data.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    let n = data.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = plus_plus(data, k, &mut rng);
    let mut labels = vec![0usize; t];
    let mut dists = vec![0.0f64; t];
    let mut objective = Vec::new();
    let mut iterations = 0;

    for _ in 0..MAX_ITERS {
        iterations += 1;
        let mut offset = 0;
        map_fold_chunks(
            mode,
            t,
            CHUNK,
            |r| {
                r.map(|i| nearest(data.row(i), &centers))
                    .collect::<Vec<_>>()
            },
            |part| {
                for (l, d) in part {
                    labels[offset] = l;
                    dists[offset] = d;
                    offset += 1;
                }
            },
        );
        objective.push(crate::numeric::pairwise_sum(&dists));

        let mut sums = vec![0.0; k * n];
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            for (s, v) in sums[l * n..(l + 1) * n].iter_mut().zip(data.row(i)) {
                *s += v;
            }
        }
        let mut taken = vec![false; t];
        let mut next = centers.as_slice().to_vec();
        for c in 0..k {
            if counts[c] > 0 {
                for d in 0..n {
                    next[c * n + d] = sums[c * n + d] / counts[c] as f64;
                }
            } else {
                // Re-seed an empty cluster at the point farthest from its center.
                let far = (0..t)
                    .filter(|&i| !taken[i])
                    .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)))
                    .unwrap_or(0);
                taken[far] = true;
                dists[far] = 0.0;
                next[c * n..(c + 1) * n].copy_from_slice(data.row(far));
            }
        }
        let shift = next
            .chunks_exact(n)
            .zip(centers.rows())
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0, f64::max);
        centers = DataMatrix::new(n, next)?;
        if shift < SHIFT_TOL {
            break;
        }
    }

    // Final labels against the final centers.
    for i in 0..t {
        labels[i] = nearest(data.row(i), &centers).0;
    }
    Ok(KMeansResult {
        centers,
        labels,
        objective,
        iterations,
    })
}

fn plus_plus(data: &DataMatrix, k: usize, rng: &mut ChaCha8Rng) -> DataMatrix {
    let t = data.len();
    let mut centers = DataMatrix::with_capacity(data.dim(), k);
    let first = rng.random_range(0..t);
    centers.push(data.row(first));
    let mut d2: Vec<f64> = data.rows().map(|r| sq_dist(r, data.row(first))).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut idx = t - 1;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 && u < w {
                    idx = i;
                    break;
                }
                u -= w;
            }
            // guard against landing on an already chosen point through rounding
            if d2[idx] == 0.0 {
                idx = (0..t).max_by(|&a, &b| d2[a].total_cmp(&d2[b])).unwrap();
            }
            idx
        } else {
            rng.random_range(0..t)
        };
        centers.push(data.row(pick));
        let c = centers.row(centers.len() - 1).to_vec();
        for (i, row) in data.rows().enumerate() {
            d2[i] = d2[i].min(sq_dist(row, &c));
        }
    }
    centers
}

fn nearest(y: &[f64], centers: &DataMatrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, row) in centers.rows().enumerate() {
        let d = sq_dist(y, row);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn single_cluster_is_mean() {
        let data = DataMatrix::from_rows(&[[0.0, 1.0], [2.0, 3.0], [4.0, -1.0]]).unwrap();
        let c = kmeans(&data, 1, 0).unwrap();
        assert!((c.row(0)[0] - 2.0).abs() < 1e-12);
        assert!((c.row(0)[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn k_equals_t_returns_points() {
        let rows = [[0.0, 0.0], [5.0, 1.0], [-3.0, 2.0], [1.0, 7.0]];
        let data = DataMatrix::from_rows(&rows).unwrap();
        let c = kmeans(&data, 4, 9).unwrap();
        let mut got: Vec<Vec<f64>> = c.rows().map(|r| r.to_vec()).collect();
        let mut want: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(got, want);
    }

    fn two_blobs() -> DataMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let jitter = Normal::new(0.0, 0.05).unwrap();
        let mut data = DataMatrix::with_capacity(2, 200);
        for i in 0..200 {
            let x = if i < 100 { -1.0 } else { 1.0 };
            data.push(&[x + jitter.sample(&mut rng), jitter.sample(&mut rng)]);
        }
        data
    }

    /// Best 2-partition of points sorted by x (optimal partitions of separable
    /// 1-D projections are contiguous), found by scanning every split.
    fn brute_force_two_centers(data: &DataMatrix) -> [[f64; 2]; 2] {
        let mut idx: Vec<usize> = (0..data.len()).collect();
        idx.sort_by(|&a, &b| data.row(a)[0].total_cmp(&data.row(b)[0]));
        let mean = |ids: &[usize]| {
            let mut m = [0.0; 2];
            for &i in ids {
                m[0] += data.row(i)[0];
                m[1] += data.row(i)[1];
            }
            [m[0] / ids.len() as f64, m[1] / ids.len() as f64]
        };
        let cost =
            |ids: &[usize], m: [f64; 2]| ids.iter().map(|&i| sq_dist(data.row(i), &m)).sum::<f64>();
        let mut best = (f64::INFINITY, [[0.0; 2]; 2]);
        for s in 1..idx.len() {
            let (a, b) = idx.split_at(s);
            let (ma, mb) = (mean(a), mean(b));
            let c = cost(a, ma) + cost(b, mb);
            if c < best.0 {
                best = (c, [ma, mb]);
            }
        }
        best.1
    }

    #[test]
    fn two_blobs_recovered() {
        let data = two_blobs();
        let oracle = brute_force_two_centers(&data);
        let c = kmeans(&data, 2, 1).unwrap();
        let mut got: Vec<[f64; 2]> = c.rows().map(|r| [r[0], r[1]]).collect();
        got.sort_by(|a, b| a[0].total_cmp(&b[0]));
        for (g, o) in got.iter().zip(oracle.iter()) {
            assert!(sq_dist(g, o).sqrt() < 1e-9, "{g:?} vs oracle {o:?}");
        }
        assert!(sq_dist(&got[0], &[-1.0, 0.0]).sqrt() < 0.05);
        assert!(sq_dist(&got[1], &[1.0, 0.0]).sqrt() < 0.05);
    }

    #[test]
    fn objective_non_increasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = Normal::new(0.0, 1.0).unwrap();
        let vals: Vec<f64> = (0..3 * 800).map(|_| g.sample(&mut rng)).collect();
        let data = DataMatrix::new(3, vals).unwrap();
        for k in [2, 5, 12] {
            let r = kmeans_detailed(&data, k, 3, ExecMode::Sequential).unwrap();
            for w in r.objective.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12), "{:?}", r.objective);
            }
        }
    }

    #[test]
    fn deterministic_across_modes() {
        let data = two_blobs();
        let a = kmeans_detailed(&data, 3, 5, ExecMode::Sequential).unwrap();
        let b = kmeans_detailed(&data, 3, 5, ExecMode::Parallel).unwrap();
        assert_eq!(a.centers, b.centers);
    }

    #[test]
    fn too_few_points() {
        let data = DataMatrix::from_rows(&[[0.0], [1.0]]).unwrap();
        assert_eq!(
            kmeans(&data, 3, 0).unwrap_err(),
            Error::InsufficientData { needed: 3, got: 2 }
        );
    }
}
