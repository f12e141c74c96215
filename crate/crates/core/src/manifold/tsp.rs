//! Exact shortest closed tour (Held–Karp dynamic programming).

use crate::data::DataMatrix;
use crate::error::{Error, Result};

/// Largest instance accepted; the DP table has `2^(k-1)·(k-1)` entries.
pub const MAX_TOUR_POINTS: usize = 20;

/// Shortest closed tour through the rows of `points` under Euclidean distance.
///
/// The tour starts at index 0 and runs in the direction whose second index is
/// smaller than its last.
pub fn tsp_order(points: &DataMatrix) -> Result<Vec<usize>> {
    let k = points.len();
    if k > MAX_TOUR_POINTS {
        return Err(Error::TooManyKnots(k));
    }
    if k <= 3 {
        return Ok((0..k).collect());
    }
    let dist = |a: usize, b: usize| -> f64 {
        points
            .row(a)
            .iter()
            .zip(points.row(b))
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    };
    // Cities 1..k are bits 0..k-1 of the mask; `j` indexes city j + 1.
    let c = k - 1;
    let full = 1usize << c;
    let mut cost = vec![f64::INFINITY; full * c];
    let mut parent = vec![u8::MAX; full * c];
    for j in 0..c {
        cost[(1 << j) * c + j] = dist(0, j + 1);
    }
    for mask in 1..full {
        for j in 0..c {
            if mask & (1 << j) == 0 {
                continue;
            }
            let here = cost[mask * c + j];
            if !here.is_finite() {
                continue;
            }
            for nxt in 0..c {
                if mask & (1 << nxt) != 0 {
                    continue;
                }
                let m2 = mask | (1 << nxt);
                let cand = here + dist(j + 1, nxt + 1);
                if cand < cost[m2 * c + nxt] {
                    cost[m2 * c + nxt] = cand;
                    parent[m2 * c + nxt] = j as u8;
                }
            }
        }
    }
    let last_mask = full - 1;
    let mut best = (f64::INFINITY, 0);
    for j in 0..c {
        let total = cost[last_mask * c + j] + dist(j + 1, 0);
        if total < best.0 {
            best = (total, j);
        }
    }
    let mut tour = Vec::with_capacity(k);
    let (mut mask, mut j) = (last_mask, best.1);
    loop {
        tour.push(j + 1);
        let p = parent[mask * c + j];
        mask &= !(1 << j);
        if p == u8::MAX {
            break;
        }
        j = p as usize;
    }
    tour.push(0);
    tour.reverse();
    Ok(canonical(tour))
}

fn canonical(mut tour: Vec<usize>) -> Vec<usize> {
    let k = tour.len();
    if k > 2 && tour[1] > tour[k - 1] {
        tour[1..].reverse();
    }
    tour
}

/// Closed-tour length of `order` over `points`.
pub fn tour_length(points: &DataMatrix, order: &[usize]) -> f64 {
    (0..order.len())
        .map(|i| {
            let a = points.row(order[i]);
            let b = points.row(order[(i + 1) % order.len()]);
            a.iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn permutations(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
        if k == items.len() {
            out.push(items.clone());
            return;
        }
        for i in k..items.len() {
            items.swap(k, i);
            permutations(items, k + 1, out);
            items.swap(k, i);
        }
    }

    fn brute_force(points: &DataMatrix) -> f64 {
        let k = points.len();
        let mut rest: Vec<usize> = (1..k).collect();
        let mut all = Vec::new();
        permutations(&mut rest, 0, &mut all);
        all.into_iter()
            .map(|p| {
                let mut tour = vec![0];
                tour.extend(p);
                tour_length(points, &tour)
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn square_in_shuffled_order() {
        // corners: 0=(0,0) 1=(1,1) 2=(1,0) 3=(0,1)
        let pts = DataMatrix::from_rows(&[[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let tour = tsp_order(&pts).unwrap();
        assert_eq!(tour, vec![0, 2, 1, 3]);
        assert!((tour_length(&pts, &tour) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn triangle_canonical() {
        let pts = DataMatrix::from_rows(&[[0.0, 0.0], [3.0, 0.0], [0.0, 4.0]]).unwrap();
        assert_eq!(tsp_order(&pts).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for trial in 0..50 {
            let k = 4 + trial % 5; // 4..=8
            let vals: Vec<f64> = (0..2 * k).map(|_| rng.random::<f64>()).collect();
            let pts = DataMatrix::new(2, vals).unwrap();
            let tour = tsp_order(&pts).unwrap();
            let mut sorted = tour.clone();
            sorted.sort();
            assert_eq!(sorted, (0..k).collect::<Vec<_>>());
            assert_eq!(tour[0], 0);
            assert!(tour[1] < tour[k - 1]);
            let best = brute_force(&pts);
            assert!(
                (tour_length(&pts, &tour) - best).abs() < 1e-12,
                "trial {trial}"
            );
        }
    }

    #[test]
    fn rejects_large_instances() {
        let pts = DataMatrix::new(1, (0..21).map(f64::from).collect()).unwrap();
        assert_eq!(tsp_order(&pts), Err(Error::TooManyKnots(21)));
    }
}
