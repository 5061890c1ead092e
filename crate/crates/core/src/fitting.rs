//! Ellipse parameter estimation from a three-arc combination.
//!
//! The center comes from parallel chords: their midpoints lie on a diameter, so the
//! midpoint lines of two chord families meet at the center. Semi-axes and orientation
//! then follow from a least-squares fit of a conic centered there.

use std::f64::consts::PI;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::arcs::ArcSegment;
use crate::error::{Error, Result};
use crate::robust::{repeated_median_line, Line2};
use crate::selection::ArcTriple;

pub type Point = (f64, f64);

/// Center, semi-axes `a >= b > 0`, and orientation of the major axis in `[0, π)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipseParams {
    pub cx: f64,
    pub cy: f64,
    pub a: f64,
    pub b: f64,
    pub theta: f64,
}

/// Wraps an angle into `[0, π)`.
pub fn wrap_pi(theta: f64) -> f64 {
    let t = theta.rem_euclid(PI);
    if t >= PI {
        0.0
    } else {
        t
    }
}

/// Smallest difference between two axis orientations.
pub fn orientation_distance(t1: f64, t2: f64) -> f64 {
    let d = (t1 - t2).rem_euclid(PI);
    d.min(PI - d)
}

impl EllipseParams {
    /// Normalizes the axis order and angle range. Panics on non-positive or non-finite axes.
    pub fn new(cx: f64, cy: f64, a: f64, b: f64, theta: f64) -> Self {
        assert!(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite(), "axes must be positive");
        let (a, b, theta) = if a >= b { (a, b, theta) } else { (b, a, theta + PI / 2.0) };
        Self { cx, cy, a, b, theta: wrap_pi(theta) }
    }

    /// Coordinates in the ellipse frame (major axis along `u`).
    pub fn to_local(&self, x: f64, y: f64) -> Point {
        let (s, c) = self.theta.sin_cos();
        let (dx, dy) = (x - self.cx, y - self.cy);
        (dx * c + dy * s, -dx * s + dy * c)
    }

    /// `u²/a² + v²/b² - 1`.
    pub fn implicit(&self, x: f64, y: f64) -> f64 {
        let (u, v) = self.to_local(x, y);
        (u / self.a).powi(2) + (v / self.b).powi(2) - 1.0
    }

    /// First-order distance `|F| / |∇F|` to the curve.
    pub fn approx_distance(&self, x: f64, y: f64) -> f64 {
        let (u, v) = self.to_local(x, y);
        let f = (u / self.a).powi(2) + (v / self.b).powi(2) - 1.0;
        let g = 2.0 * (u / (self.a * self.a)).hypot(v / (self.b * self.b));
        if g == 0.0 {
            // the center: distance to the curve is at least b
            self.b
        } else {
            f.abs() / g
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.implicit(x, y) <= 0.0
    }

    /// Point at parameter `t` (radians) in image coordinates.
    pub fn point_at(&self, t: f64) -> Point {
        let (s, c) = self.theta.sin_cos();
        let (u, v) = (self.a * t.cos(), self.b * t.sin());
        (self.cx + u * c - v * s, self.cy + u * s + v * c)
    }

    /// Ramanujan's second perimeter approximation.
    pub fn perimeter(&self) -> f64 {
        let h = ((self.a - self.b) / (self.a + self.b)).powi(2);
        PI * (self.a + self.b) * (1.0 + 3.0 * h / (10.0 + (4.0 - 3.0 * h).sqrt()))
    }

    /// Axis-aligned half extents of the ellipse.
    pub fn half_extents(&self) -> Point {
        let (s, c) = self.theta.sin_cos();
        (
            ((self.a * c).powi(2) + (self.b * s).powi(2)).sqrt(),
            ((self.a * s).powi(2) + (self.b * c).powi(2)).sqrt(),
        )
    }
}

/// Midpoints of chords parallel to one base direction.
#[derive(Clone, Debug, PartialEq)]
pub struct ChordFan {
    pub direction: Point,
    pub midpoints: Vec<Point>,
}

pub fn arc_points(arc: &ArcSegment) -> Vec<Point> {
    arc.points().iter().map(|p| p.pos()).collect()
}

fn dist(p: Point, q: Point) -> f64 {
    (p.0 - q.0).hypot(p.1 - q.1)
}

/// Where the polyline crosses `{p : n·p = off}`. Returns `None` when the crossings are
/// missing or too far apart to be one crossing.
fn crossing(poly: &[Point], h: &[f64], off: f64) -> Option<Point> {
    let mut hits: Vec<Point> = Vec::new();
    for k in 0..poly.len().saturating_sub(1) {
        let (h0, h1) = (h[k] - off, h[k + 1] - off);
        if h0 == 0.0 {
            hits.push(poly[k]);
        } else if h0 * h1 < 0.0 {
            let t = h0 / (h0 - h1);
            let (p, q) = (poly[k], poly[k + 1]);
            hits.push((p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1)));
        }
    }
    if let Some(&last) = poly.last() {
        if h[h.len() - 1] - off == 0.0 {
            hits.push(last);
        }
    }
    let first = *hits.first()?;
    if hits.iter().any(|&p| dist(p, first) > 2.0) {
        return None;
    }
    let n = hits.len() as f64;
    let (sx, sy) = hits.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    Some((sx / n, sy / n))
}

/// Chords parallel to the base chord from the far endpoint of `a` to the chain midpoint of `b`.
///
/// The chords are spread evenly over the offsets, measured across the base direction, that
/// both arcs reach.
pub fn chord_fan(a: &[Point], b: &[Point], n_d: usize) -> Result<ChordFan> {
    if a.len() < 2 || b.len() < 2 || n_d == 0 {
        return Err(Error::InsufficientSpan);
    }
    let f = b[b.len() / 2];
    let s = if dist(a[0], f) >= dist(a[a.len() - 1], f) { a[0] } else { a[a.len() - 1] };
    let len = dist(s, f);
    if len == 0.0 {
        return Err(Error::InsufficientSpan);
    }
    let d = ((f.0 - s.0) / len, (f.1 - s.1) / len);
    let n = (-d.1, d.0);
    let proj = |p: &Point| n.0 * p.0 + n.1 * p.1;
    let ha: Vec<f64> = a.iter().map(proj).collect();
    let hb: Vec<f64> = b.iter().map(proj).collect();
    let range = |h: &[f64]| h.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, u), &x| (l.min(x), u.max(x)));
    let (la, ua) = range(&ha);
    let (lb, ub) = range(&hb);
    let (lo, hi) = (la.max(lb), ua.min(ub));
    if hi - lo <= 1e-9 {
        return Err(Error::InsufficientSpan);
    }

    let mut midpoints = Vec::with_capacity(n_d);
    for k in 1..=n_d {
        let off = lo + (hi - lo) * k as f64 / (n_d + 1) as f64;
        if let (Some(p), Some(q)) = (crossing(a, &ha, off), crossing(b, &hb, off)) {
            if dist(p, q) > 1.0 {
                midpoints.push((0.5 * (p.0 + q.0), 0.5 * (p.1 + q.1)));
            }
        }
    }
    if midpoints.len() < 4 {
        return Err(Error::InsufficientSpan);
    }
    Ok(ChordFan { direction: d, midpoints })
}

/// Robust line through the chord midpoints of [`chord_fan`].
pub fn chord_midline_points(a: &[Point], b: &[Point], n_d: usize, seed: u64) -> Result<Line2> {
    let fan = chord_fan(a, b, n_d)?;
    repeated_median_line(&fan.midpoints, seed).ok_or(Error::InsufficientSpan)
}

pub fn chord_midline(arc_a: &ArcSegment, arc_b: &ArcSegment, n_d: usize, seed: u64) -> Result<Line2> {
    chord_midline_points(&arc_points(arc_a), &arc_points(arc_b), n_d, seed)
}

/// Smallest normalized `|w|` for a midline intersection to count.
const MIN_INTERSECTION_W: f64 = 1e-10;

/// Mean of the pairwise intersections of up to four midlines built from the pairs
/// `(arcs[0], arcs[1])` and `(arcs[0], arcs[2])`, each with both base-chord directions.
pub fn estimate_center_points(arcs: [&[Point]; 3], n_d: usize, seed: u64) -> Result<Point> {
    let mut lines = Vec::with_capacity(4);
    for other in [arcs[1], arcs[2]] {
        for (p, q) in [(arcs[0], other), (other, arcs[0])] {
            if let Ok(l) = chord_midline_points(p, q, n_d, seed) {
                lines.push(l);
            }
        }
    }
    let mut acc = (0.0, 0.0, 0usize);
    for i in 0..lines.len() {
        for j in i + 1..lines.len() {
            if let Some((x, y)) = lines[i].intersect(&lines[j], MIN_INTERSECTION_W) {
                acc = (acc.0 + x, acc.1 + y, acc.2 + 1);
            }
        }
    }
    if acc.2 < 2 {
        return Err(Error::DegenerateCenter);
    }
    Ok((acc.0 / acc.2 as f64, acc.1 / acc.2 as f64))
}

pub fn estimate_center(triple: &ArcTriple<'_>, n_d: usize, seed: u64) -> Result<Point> {
    let pts = triple.arcs.map(arc_points);
    estimate_center_points([&pts[0], &pts[1], &pts[2]], n_d, seed)
}

/// Condition number above which the central conic fit is refused.
pub const MAX_CONDITION: f64 = 1e12;

/// Least-squares `A x² + B xy + C y² = 1` about `center`, converted to ellipse parameters.
pub fn fit_axes_orientation_points<'p>(
    points: impl IntoIterator<Item = &'p Point>,
    center: Point,
) -> Result<EllipseParams> {
    let shifted: Vec<Point> = points.into_iter().map(|p| (p.0 - center.0, p.1 - center.1)).collect();
    if shifted.len() < 3 {
        return Err(Error::IllConditioned(f64::INFINITY));
    }
    let rms = (shifted.iter().map(|p| p.0 * p.0 + p.1 * p.1).sum::<f64>() / shifted.len() as f64).sqrt();
    if rms == 0.0 || !rms.is_finite() {
        return Err(Error::IllConditioned(f64::INFINITY));
    }
    let mut m = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for &(x, y) in &shifted {
        let (u, v) = (x / rms, y / rms);
        let r = Vector3::new(u * u, u * v, v * v);
        m += r * r.transpose();
        rhs += r;
    }
    let eig = SymmetricEigen::new(m);
    let (lmin, lmax) = eig
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &e| (l.min(e), h.max(e)));
    let cond = if lmin > 0.0 { lmax / lmin } else { f64::INFINITY };
    if cond > MAX_CONDITION {
        return Err(Error::IllConditioned(cond));
    }
    let sol = m.cholesky().ok_or(Error::IllConditioned(cond))?.solve(&rhs);
    let s2 = rms * rms;
    let (a_, b_, c_) = (sol[0] / s2, sol[1] / s2, sol[2] / s2);
    if a_ <= 0.0 || 4.0 * a_ * c_ - b_ * b_ <= 0.0 {
        return Err(Error::NotAnEllipse);
    }
    let mean = 0.5 * (a_ + c_);
    let diff = (0.25 * (a_ - c_).powi(2) + 0.25 * b_ * b_).sqrt();
    let (l_small, l_big) = (mean - diff, mean + diff);
    if l_small <= 0.0 {
        return Err(Error::NotAnEllipse);
    }
    let theta = 0.5 * (-b_).atan2(c_ - a_);
    Ok(EllipseParams::new(center.0, center.1, 1.0 / l_small.sqrt(), 1.0 / l_big.sqrt(), theta))
}

pub fn fit_axes_orientation(triple: &ArcTriple<'_>, center: Point) -> Result<EllipseParams> {
    let pts: Vec<Point> = triple.arcs.iter().flat_map(|a| arc_points(a)).collect();
    fit_axes_orientation_points(&pts, center)
}

/// Center estimate followed by the central conic fit.
pub fn fit_triple(triple: &ArcTriple<'_>, n_d: usize, seed: u64) -> Result<EllipseParams> {
    let c = estimate_center(triple, n_d, seed)?;
    fit_axes_orientation(triple, c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arc_of(e: &EllipseParams, from_deg: f64, to_deg: f64, n: usize) -> Vec<Point> {
        (0..n)
            .map(|i| e.point_at((from_deg + (to_deg - from_deg) * i as f64 / (n - 1) as f64).to_radians()))
            .collect()
    }

    #[test]
    fn params_normalize() {
        let e = EllipseParams::new(0.0, 0.0, 10.0, 20.0, 0.0);
        assert_eq!((e.a, e.b), (20.0, 10.0));
        assert!((e.theta - PI / 2.0).abs() < 1e-12);
        assert!((EllipseParams::new(0.0, 0.0, 2.0, 1.0, -0.5).theta - (PI - 0.5)).abs() < 1e-12);
        assert!(orientation_distance(0.01, PI - 0.01) < 0.021);
    }

    #[test]
    fn midline_of_quarter_arcs_hits_center() {
        let e = EllipseParams::new(0.0, 0.0, 100.0, 50.0, 0.0);
        let a = arc_of(&e, 2.0, 88.0, 120);
        let b = arc_of(&e, 92.0, 178.0, 120);
        let l = chord_midline_points(&a, &b, 16, 0).unwrap();
        assert!(l.distance((0.0, 0.0)) < 0.5, "{}", l.distance((0.0, 0.0)));
        let l2 = chord_midline_points(&b, &a, 16, 0).unwrap();
        assert!(l2.distance((0.0, 0.0)) < 0.5);
    }

    #[test]
    fn circle_midline_is_perpendicular_to_base() {
        let e = EllipseParams::new(10.0, -5.0, 60.0, 60.0, 0.0);
        let a = arc_of(&e, 5.0, 85.0, 100);
        let b = arc_of(&e, 95.0, 175.0, 100);
        let fan = chord_fan(&a, &b, 16).unwrap();
        let l = repeated_median_line(&fan.midpoints, 0).unwrap();
        let dot = l.direction.0 * fan.direction.0 + l.direction.1 * fan.direction.1;
        assert!(dot.abs() < 1e-6, "{dot}");
        assert!(fan.midpoints.len() >= 12);
    }

    #[test]
    fn circle_center_at_origin() {
        let e = EllipseParams::new(0.0, 0.0, 80.0, 80.0, 0.0);
        let a = arc_of(&e, 95.0, 175.0, 100);
        let b = arc_of(&e, 5.0, 85.0, 100);
        let c = arc_of(&e, 185.0, 265.0, 100);
        let (x, y) = estimate_center_points([&a, &b, &c], 16, 0).unwrap();
        assert!(x.hypot(y) < 0.5);
    }

    #[test]
    fn ellipse_center_recovered() {
        let e = EllipseParams::new(200.0, 150.0, 90.0, 40.0, 0.4);
        let a = arc_of(&e, 95.0, 175.0, 150);
        let b = arc_of(&e, 5.0, 85.0, 150);
        let c = arc_of(&e, 185.0, 265.0, 150);
        let (x, y) = estimate_center_points([&a, &b, &c], 16, 0).unwrap();
        assert!((x - 200.0).hypot(y - 150.0) < 1.0);
    }

    #[test]
    fn disjoint_ranges_are_insufficient() {
        let a: Vec<Point> = (0..20).map(|i| (i as f64, 0.0)).collect();
        let b: Vec<Point> = (0..20).map(|i| (100.0 + i as f64, 0.0)).collect();
        assert!(matches!(chord_fan(&a, &b, 16), Err(Error::InsufficientSpan)));
    }

    #[test]
    fn exact_conic_fit() {
        let e = EllipseParams::new(0.0, 0.0, 80.0, 40.0, 0.0);
        let pts = arc_of(&e, 0.0, 359.0, 200);
        let f = fit_axes_orientation_points(&pts, (0.0, 0.0)).unwrap();
        assert!((f.a - 80.0).abs() < 1e-6 && (f.b - 40.0).abs() < 1e-6);
        assert!(orientation_distance(f.theta, 0.0) < 1e-6);
    }

    #[test]
    fn rotated_conic_fit() {
        let e = EllipseParams::new(3.0, 4.0, 80.0, 40.0, 30f64.to_radians());
        let pts = arc_of(&e, 10.0, 300.0, 200);
        let f = fit_axes_orientation_points(&pts, (3.0, 4.0)).unwrap();
        assert!((f.theta.to_degrees() - 30.0).abs() < 0.2);
        assert!((f.a - 80.0).abs() < 0.1 && (f.b - 40.0).abs() < 0.1);
    }

    #[test]
    fn hyperbola_is_not_an_ellipse() {
        let pts: Vec<Point> = (0..50)
            .map(|i| {
                let t = -1.5 + 3.0 * i as f64 / 49.0;
                (10.0 * t.cosh(), 5.0 * t.sinh())
            })
            .collect();
        assert!(matches!(fit_axes_orientation_points(&pts, (0.0, 0.0)), Err(Error::NotAnEllipse)));
    }

    #[test]
    fn collinear_points_are_ill_conditioned() {
        let pts: Vec<Point> = (1..30).map(|i| (i as f64, 2.0 * i as f64)).collect();
        assert!(fit_axes_orientation_points(&pts, (0.0, 0.0)).is_err());
    }

    #[test]
    fn perimeter_of_circle() {
        let e = EllipseParams::new(0.0, 0.0, 10.0, 10.0, 0.0);
        assert!((e.perimeter() - 20.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn approximate_distance() {
        let e = EllipseParams::new(0.0, 0.0, 50.0, 30.0, 0.3);
        let (x, y) = e.point_at(1.0);
        assert!(e.approx_distance(x, y) < 1e-9);
        let c = EllipseParams::new(0.0, 0.0, 50.0, 50.0, 0.0);
        assert!((c.approx_distance(53.0, 0.0) - 3.0).abs() < 0.1);
    }
}
