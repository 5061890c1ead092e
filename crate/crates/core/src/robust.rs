//! Repeated-median Theil–Sen line fitting.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A line through `point` with unit `direction`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Line2 {
    pub point: (f64, f64),
    pub direction: (f64, f64),
}

impl Line2 {
    /// Perpendicular distance of `p` from the line.
    pub fn distance(&self, p: (f64, f64)) -> f64 {
        let (dx, dy) = (p.0 - self.point.0, p.1 - self.point.1);
        (dx * self.direction.1 - dy * self.direction.0).abs()
    }

    /// Meeting point of two lines, or `None` when they are (nearly) parallel.
    ///
    /// The test is on the `w` coordinate of the unit-normalized homogeneous meet.
    pub fn intersect(&self, o: &Line2, min_w: f64) -> Option<(f64, f64)> {
        let l1 = self.homogeneous();
        let l2 = o.homogeneous();
        let p = l1.cross(&l2).normalized();
        if p.w.abs() < min_w {
            None
        } else {
            p.to_affine()
        }
    }

    /// Homogeneous line coordinates.
    pub fn homogeneous(&self) -> crate::projective::HomogeneousPoint {
        use crate::projective::HomogeneousPoint as H;
        let a = H::finite(self.point.0, self.point.1);
        let b = H::finite(self.point.0 + self.direction.0, self.point.1 + self.direction.1);
        a.cross(&b)
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_unstable_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Per-point partner budget above which partners are subsampled.
fn budget(n: usize) -> usize {
    let log = (n as f64).log2().ceil() as usize;
    (4 * log).max(16)
}

/// Repeated-median regression of `v` on `u`: slope is the median over `i` of the median
/// slope from `i` to its partners.
fn repeated_median(u: &[f64], v: &[f64], seed: u64) -> Option<(f64, f64)> {
    let n = u.len();
    let k = budget(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut outer = Vec::with_capacity(n);
    let mut inner = Vec::with_capacity(n);
    for i in 0..n {
        inner.clear();
        let mut push = |j: usize| {
            if j != i {
                let du = u[j] - u[i];
                if du != 0.0 {
                    inner.push((v[j] - v[i]) / du);
                }
            }
        };
        if n - 1 <= k {
            (0..n).for_each(&mut push);
        } else {
            sample(&mut rng, n, k + 1).into_iter().for_each(&mut push);
        }
        if !inner.is_empty() {
            outer.push(median(&mut inner));
        }
    }
    if outer.is_empty() {
        return None;
    }
    let slope = median(&mut outer);
    let mut icpt: Vec<f64> = u.iter().zip(v).map(|(a, b)| b - slope * a).collect();
    Some((slope, median(&mut icpt)))
}

/// Robust line through `points`. The regression axis is the coordinate with the larger spread.
pub fn repeated_median_line(points: &[(f64, f64)], seed: u64) -> Option<Line2> {
    if points.len() < 2 {
        return None;
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let spread = |v: &[f64]| {
        let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
        hi - lo
    };
    let x_major = spread(&xs) >= spread(&ys);
    let (u, v) = if x_major { (&xs, &ys) } else { (&ys, &xs) };
    let (slope, icpt) = repeated_median(u, v, seed)?;
    let mut us = u.clone();
    let um = median(&mut us);
    let (pu, pv) = (um, slope * um + icpt);
    let norm = slope.hypot(1.0);
    let (du, dv) = (1.0 / norm, slope / norm);
    Some(if x_major {
        Line2 { point: (pu, pv), direction: (du, dv) }
    } else {
        Line2 { point: (pv, pu), direction: (dv, du) }
    })
}
