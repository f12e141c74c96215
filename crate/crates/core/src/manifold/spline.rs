//! Periodic (closed) cubic spline through an ordered list of knots in `R^n`,
//! parameterized by cumulative chord length.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{Error, Result};

/// Knots closer than this are rejected.
pub const MIN_KNOT_SEPARATION: f64 = 1e-10;

/// Closed C² cubic spline. Segment `i` runs from knot `i` to knot `i + 1`
/// (wrapping), over the parameter interval `[breaks[i], breaks[i + 1]]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedSpline {
    dim: usize,
    /// Ordered knots, row-major (`k × n`).
    knots: Vec<f64>,
    /// Indices of the source points in tour order.
    ordering: Vec<usize>,
    /// `k + 1` cumulative chord-length breakpoints, `breaks[k] = L`.
    breaks: Vec<f64>,
    /// Per segment, the four coefficient vectors `a, b, c, d` of
    /// `a + b s + c s² + d s³`, row-major (`k × 4 × n`).
    coefficients: Vec<f64>,
    length: f64,
}

impl ClosedSpline {
    /// Interpolates the knots in the given order and closes the loop back to the first knot.
    pub fn through_knots(knots: &DataMatrix, ordering: Vec<usize>) -> Result<Self> {
        let k = knots.len();
        let n = knots.dim();
        if k < 3 {
            return Err(Error::InvalidArgument(format!(
                "a closed spline needs at least 3 knots, got {k}"
            )));
        }
        if !knots.is_finite() {
            return Err(Error::NonFiniteInput);
        }
        let next = |i: usize| (i + 1) % k;
        let h: Vec<f64> = (0..k)
            .map(|i| chord(knots.row(i), knots.row(next(i))))
            .collect();
        if let Some(i) = h.iter().position(|&d| d < MIN_KNOT_SEPARATION) {
            return Err(Error::DegenerateKnots(i, next(i)));
        }
        let mut breaks = Vec::with_capacity(k + 1);
        breaks.push(0.0);
        for &hi in &h {
            breaks.push(breaks.last().unwrap() + hi);
        }
        let length = breaks[k];

        // Cyclic tridiagonal system for the second derivatives at the knots.
        let mut a = DMatrix::<f64>::zeros(k, k);
        let mut rhs = DMatrix::<f64>::zeros(k, n);
        for i in 0..k {
            let prev = (i + k - 1) % k;
            let hp = h[prev];
            let hi = h[i];
            a[(i, prev)] += hp;
            a[(i, i)] += 2.0 * (hp + hi);
            a[(i, next(i))] += hi;
            for d in 0..n {
                let p = knots.row(prev)[d];
                let c = knots.row(i)[d];
                let q = knots.row(next(i))[d];
                rhs[(i, d)] = 6.0 * ((q - c) / hi - (c - p) / hp);
            }
        }
        let second = a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::InvalidArgument("singular spline system".into()))?;

        let mut coefficients = Vec::with_capacity(k * 4 * n);
        for i in 0..k {
            let j = next(i);
            let hi = h[i];
            let pi = knots.row(i);
            let pj = knots.row(j);
            coefficients.extend_from_slice(pi);
            for d in 0..n {
                let (mi, mj) = (second[(i, d)], second[(j, d)]);
                coefficients.push((pj[d] - pi[d]) / hi - hi * (2.0 * mi + mj) / 6.0);
            }
            for d in 0..n {
                coefficients.push(second[(i, d)] / 2.0);
            }
            for d in 0..n {
                coefficients.push((second[(j, d)] - second[(i, d)]) / (6.0 * hi));
            }
        }

        Ok(Self {
            dim: n,
            knots: knots.as_slice().to_vec(),
            ordering,
            breaks,
            coefficients,
            length,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_knots(&self) -> usize {
        self.breaks.len() - 1
    }

    pub fn knot(&self, i: usize) -> &[f64] {
        &self.knots[i * self.dim..(i + 1) * self.dim]
    }

    /// Parameter value of knot `i`.
    pub fn knot_parameter(&self, i: usize) -> f64 {
        self.breaks[i]
    }

    pub fn ordering(&self) -> &[usize] {
        &self.ordering
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let t = t.rem_euclid(self.length);
        let k = self.n_knots();
        let seg = self
            .breaks
            .partition_point(|&b| b <= t)
            .saturating_sub(1)
            .min(k - 1);
        (seg, t - self.breaks[seg])
    }

    fn coeffs(&self, seg: usize) -> [&[f64]; 4] {
        let n = self.dim;
        let base = seg * 4 * n;
        let c = &self.coefficients[base..base + 4 * n];
        [&c[..n], &c[n..2 * n], &c[2 * n..3 * n], &c[3 * n..]]
    }

    /// Value, first and second derivative of segment `seg` at local offset `s`
    /// (no wrapping; `s` may equal the segment length).
    pub fn segment_jet(&self, seg: usize, s: f64) -> [DVector<f64>; 3] {
        let [a, b, c, d] = self.coeffs(seg);
        let n = self.dim;
        let v = DVector::from_fn(n, |i, _| a[i] + s * (b[i] + s * (c[i] + s * d[i])));
        let dv = DVector::from_fn(n, |i, _| b[i] + s * (2.0 * c[i] + 3.0 * s * d[i]));
        let ddv = DVector::from_fn(n, |i, _| 2.0 * c[i] + 6.0 * s * d[i]);
        [v, dv, ddv]
    }

    pub fn segment_len(&self, seg: usize) -> f64 {
        self.breaks[seg + 1] - self.breaks[seg]
    }

    pub fn evaluate_into(&self, t: f64, out: &mut [f64]) {
        let (seg, s) = self.locate(t);
        let [a, b, c, d] = self.coeffs(seg);
        for i in 0..self.dim {
            out[i] = a[i] + s * (b[i] + s * (c[i] + s * d[i]));
        }
    }

    pub fn derivative(&self, t: f64) -> DVector<f64> {
        let (seg, s) = self.locate(t);
        let [_, b, c, d] = self.coeffs(seg);
        DVector::from_fn(self.dim, |i, _| b[i] + s * (2.0 * c[i] + 3.0 * s * d[i]))
    }
}

fn chord(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn circle_knots(k: usize) -> DataMatrix {
        let rows: Vec<[f64; 2]> = (0..k)
            .map(|i| {
                let a = FRAC_PI_2 * 4.0 * i as f64 / k as f64;
                [a.cos(), a.sin()]
            })
            .collect();
        DataMatrix::from_rows(&rows).unwrap()
    }

    fn seam_error(s: &ClosedSpline) -> [f64; 3] {
        let last = s.n_knots() - 1;
        let end = s.segment_jet(last, s.segment_len(last));
        let start = s.segment_jet(0, 0.0);
        [0, 1, 2].map(|k| (&end[k] - &start[k]).norm() / (1.0 + start[k].norm()))
    }

    #[test]
    fn interpolates_knots_exactly() {
        let knots = circle_knots(4);
        let s = ClosedSpline::through_knots(&knots, (0..4).collect()).unwrap();
        let mut out = [0.0; 2];
        for i in 0..4 {
            s.evaluate_into(s.knot_parameter(i), &mut out);
            assert_eq!(&out, knots.row(i));
        }
    }

    #[test]
    fn three_knots_close_smoothly() {
        let rows: Vec<[f64; 2]> = (0..3)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / 3.0;
                [a.cos(), a.sin()]
            })
            .collect();
        let knots = DataMatrix::from_rows(&rows).unwrap();
        let s = ClosedSpline::through_knots(&knots, vec![0, 1, 2]).unwrap();
        assert!(s.length() > 0.0);
        for e in seam_error(&s) {
            assert!(e < 1e-9);
        }
        // interior knots are C² as well
        for i in 1..3 {
            let left = s.segment_jet(i - 1, s.segment_len(i - 1));
            let right = s.segment_jet(i, 0.0);
            for k in 0..3 {
                assert!((&left[k] - &right[k]).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn coincident_knots_rejected() {
        let knots =
            DataMatrix::from_rows(&[[0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(
            ClosedSpline::through_knots(&knots, vec![0, 1, 2, 3]),
            Err(Error::DegenerateKnots(1, 2))
        );
    }

    proptest! {
        #[test]
        fn seam_is_periodic(coords in proptest::collection::vec(-5.0f64..5.0, 18..=60)) {
            let n = 3;
            let k = coords.len() / n;
            let knots = DataMatrix::new(n, coords[..k * n].to_vec()).unwrap();
            match ClosedSpline::through_knots(&knots, (0..k).collect()) {
                Ok(s) => {
                    let e = seam_error(&s);
                    prop_assert!(e[0] < 1e-9 && e[1] < 1e-9, "{:?}", e);
                }
                Err(Error::DegenerateKnots(..)) => {}
                Err(e) => prop_assert!(false, "{e}"),
            }
        }
    }
}
