#![allow(dead_code)]

use std::f64::consts::PI;

use cnellipse::projective::{HomogeneousPoint, SixPoints};
use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn hp(x: f64, y: f64) -> HomogeneousPoint {
    HomogeneousPoint::finite(x, y)
}

/// Random nonsingular map with condition number below `max_cond`.
pub fn random_homography(rng: &mut ChaCha8Rng, max_cond: f64) -> [[f64; 3]; 3] {
    loop {
        let mut h = [[0.0; 3]; 3];
        for (i, row) in h.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let base = if i == j { 1.0 } else { 0.0 };
                *v = base + rng.random_range(-0.6..0.6);
            }
        }
        let m = Matrix3::from_fn(|i, j| h[i][j]);
        let sv = m.singular_values();
        let (hi, lo) = (sv.max(), sv.min());
        if lo > 0.0 && hi / lo < max_cond {
            return h;
        }
    }
}

/// Points of a random ellipse at sorted random angles, spread around the whole curve.
pub fn ellipse_samples(rng: &mut ChaCha8Rng, n: usize) -> (Vec<(f64, f64)>, [f64; 5]) {
    let cx = rng.random_range(-2.0..2.0);
    let cy = rng.random_range(-2.0..2.0);
    let a = rng.random_range(0.5..3.0);
    let b = a * rng.random_range(0.3..1.0);
    let th = rng.random_range(0.0..PI);
    let slot = 2.0 * PI / n as f64;
    let (c, s) = (th.cos(), th.sin());
    let pts = (0..n)
        .map(|k| {
            let t = slot * (k as f64 + rng.random_range(0.15..0.85));
            let (u, v) = (a * t.cos(), b * t.sin());
            (cx + u * c - v * s, cy + u * s + v * c)
        })
        .collect();
    (pts, [cx, cy, a, b, th])
}

pub fn six_from(pts: &[(f64, f64)]) -> SixPoints {
    let p = |i: usize| hp(pts[i].0, pts[i].1);
    [[p(0), p(1)], [p(2), p(3)], [p(4), p(5)]]
}

/// Six points on a random conic, or with one point pushed off it.
pub fn random_six(rng: &mut ChaCha8Rng, on_conic: bool) -> SixPoints {
    let (mut pts, _) = ellipse_samples(rng, 6);
    if !on_conic {
        let k = rng.random_range(0..6);
        let r = rng.random_range(0.05..0.5);
        let phi = rng.random_range(0.0..2.0 * PI);
        pts[k].0 += r * phi.cos();
        pts[k].1 += r * phi.sin();
    }
    six_from(&pts)
}

pub fn map_six(six: &SixPoints, h: &[[f64; 3]; 3]) -> SixPoints {
    six.map(|side| side.map(|p| p.transform(h)))
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

pub fn percentile(mut v: Vec<f64>, q: f64) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let k = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1;
    v[k]
}
