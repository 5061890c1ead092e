//! Projective-plane primitives and the characteristic number.
//!
//! The characteristic number (CN) of a closed loop of vertices `P_1..P_r`
//! with `n` points on every side is the product, over all side points
//! `Q = a·P_i + b·P_{i+1}`, of the coefficient ratios `b / a`. It is a
//! projective invariant. Two configurations matter to the detector:
//!
//! * a triangle with one point per side (CNL): equals `-1` whenever the
//!   three side points are collinear;
//! * a triangle whose sides each cut a conic twice (CNC): equals `+1`
//!   whenever the six points lie on one conic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the real projective plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousPoint {
    pub x: f64,
    pub y: f64,
    pub w: f64,
}

impl HomogeneousPoint {
    pub const fn new(x: f64, y: f64, w: f64) -> Self {
        Self { x, y, w }
    }

    /// Finite image point `(x, y, 1)`.
    pub const fn finite(x: f64, y: f64) -> Self {
        Self { x, y, w: 1.0 }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.w * self.w).sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s, self.w * s)
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.w + o.w)
    }

    /// Cross product; joins two points into a line or meets two lines in a point.
    pub fn cross(&self, o: &Self) -> Self {
        Self::new(
            self.y * o.w - self.w * o.y,
            self.w * o.x - self.x * o.w,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn dot(&self, o: &Self) -> f64 {
        self.x * o.x + self.y * o.y + self.w * o.w
    }

    /// Rescaled to unit Euclidean norm.
    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            self.scale(1.0 / n)
        } else {
            *self
        }
    }

    pub fn is_zero(&self) -> bool {
        self.x == 0.0 && self.y == 0.0 && self.w == 0.0
    }

    /// `(x/w, y/w)`, or `None` for a point at infinity.
    pub fn to_affine(&self) -> Option<(f64, f64)> {
        if self.w == 0.0 {
            None
        } else {
            Some((self.x / self.w, self.y / self.w))
        }
    }

    /// True when one point is a nonzero multiple of the other, up to `rel_tol`.
    pub fn projectively_eq(&self, o: &Self, rel_tol: f64) -> bool {
        let c = self.cross(o);
        c.norm() <= rel_tol * self.norm() * o.norm()
    }

    /// Applies the row-major 3×3 matrix `h`.
    pub fn transform(&self, h: &[[f64; 3]; 3]) -> Self {
        Self::new(
            h[0][0] * self.x + h[0][1] * self.y + h[0][2] * self.w,
            h[1][0] * self.x + h[1][1] * self.y + h[1][2] * self.w,
            h[2][0] * self.x + h[2][1] * self.y + h[2][2] * self.w,
        )
    }

    fn coord(&self, i: usize) -> f64 {
        match i {
            0 => self.x,
            1 => self.y,
            _ => self.w,
        }
    }
}

/// Determinant of the matrix whose columns are the three points.
pub fn det3(p: &HomogeneousPoint, q: &HomogeneousPoint, r: &HomogeneousPoint) -> f64 {
    p.x * (q.y * r.w - q.w * r.y) - q.x * (p.y * r.w - p.w * r.y) + r.x * (p.y * q.w - p.w * q.y)
}

/// Meets line `a1 a2` with line `b1 b2`.
///
/// Parallel lines yield a point with `w == 0`; callers decide what to do with it.
pub fn intersect_lines(
    a1: &HomogeneousPoint,
    a2: &HomogeneousPoint,
    b1: &HomogeneousPoint,
    b2: &HomogeneousPoint,
) -> Result<HomogeneousPoint> {
    let la = a1.cross(a2);
    let lb = b1.cross(b2);
    let p = la.cross(&lb);
    if p.norm() <= 1e-12 * la.norm() * lb.norm() || p.is_zero() {
        return Err(Error::IdenticalLines);
    }
    Ok(p)
}

/// Coefficients of `Q = a·P_i + b·P_{i+1}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SidePointDecomposition {
    pub a: f64,
    pub b: f64,
}

impl SidePointDecomposition {
    pub fn ratio(&self) -> f64 {
        self.b / self.a
    }
}

/// Tolerance for `|Q, P_i, P_{i+1}| ≈ 0`, relative to the point magnitudes.
pub const SIDE_COLLINEARITY_TOL: f64 = 1e-6;

/// Writes `q` as a combination of the side's two vertices.
///
/// The 3×2 system is solved on the 2×2 row pair with the largest pivot.
pub fn decompose_on_side(
    q: &HomogeneousPoint,
    p_i: &HomogeneousPoint,
    p_next: &HomogeneousPoint,
) -> Result<SidePointDecomposition> {
    let scale = q.norm() * p_i.norm() * p_next.norm();
    if det3(q, p_i, p_next).abs() > SIDE_COLLINEARITY_TOL * scale {
        return Err(Error::NotOnSide);
    }

    let mut best = (0usize, 1usize, 0.0f64);
    for (r, s) in [(0, 1), (0, 2), (1, 2)] {
        let d = p_i.coord(r) * p_next.coord(s) - p_next.coord(r) * p_i.coord(s);
        if d.abs() > best.2.abs() {
            best = (r, s, d);
        }
    }
    let (r, s, d) = best;
    if d.abs() <= 1e-14 * p_i.norm() * p_next.norm() {
        // the two vertices coincide projectively
        return Err(Error::DegenerateDecomposition);
    }
    let a = (q.coord(r) * p_next.coord(s) - p_next.coord(r) * q.coord(s)) / d;
    let b = (p_i.coord(r) * q.coord(s) - q.coord(r) * p_i.coord(s)) / d;
    if a.abs() * p_i.norm() <= 1e-12 * q.norm() {
        return Err(Error::DegenerateDecomposition);
    }
    Ok(SidePointDecomposition { a, b })
}

/// Vertices `P_1..P_r` (closing back to `P_1`) and the side points on each side.
#[derive(Clone, Debug)]
pub struct ClosedLoop {
    vertices: Vec<HomogeneousPoint>,
    side_points: Vec<Vec<HomogeneousPoint>>,
}

impl ClosedLoop {
    /// `side_points[i]` lies on the side from `vertices[i]` to `vertices[(i + 1) % r]`.
    pub fn new(
        vertices: Vec<HomogeneousPoint>,
        side_points: Vec<Vec<HomogeneousPoint>>,
    ) -> Result<Self> {
        let r = vertices.len();
        if r < 2 {
            return Err(Error::InvalidLoop(format!("need at least 2 vertices, got {r}")));
        }
        if side_points.len() != r {
            return Err(Error::InvalidLoop(format!(
                "{} sides of points for {r} vertices",
                side_points.len()
            )));
        }
        let n = side_points[0].len();
        if n == 0 || side_points.iter().any(|s| s.len() != n) {
            return Err(Error::InvalidLoop(
                "every side must carry the same nonzero number of points".into(),
            ));
        }
        if vertices.iter().chain(side_points.iter().flatten()).any(HomogeneousPoint::is_zero) {
            return Err(Error::InvalidLoop("zero vector is not a projective point".into()));
        }
        Ok(Self { vertices, side_points })
    }

    pub fn vertices(&self) -> &[HomogeneousPoint] {
        &self.vertices
    }

    pub fn side_points(&self) -> &[Vec<HomogeneousPoint>] {
        &self.side_points
    }
}

/// Product of `b/a` over every side point of the loop.
pub fn characteristic_number(lp: &ClosedLoop) -> Result<f64> {
    let r = lp.vertices.len();
    let mut cn = 1.0;
    for (i, side) in lp.side_points.iter().enumerate() {
        let p_i = &lp.vertices[i];
        let p_next = &lp.vertices[(i + 1) % r];
        for q in side {
            cn *= decompose_on_side(q, p_i, p_next)?.ratio();
        }
    }
    Ok(cn)
}

/// Characteristic number of a triangle with one point per side.
///
/// `q1` lies on `p1p2`, `q2` on `p2p3`, `q3` on `p3p1`.
pub fn cnl(
    p1: &HomogeneousPoint,
    p2: &HomogeneousPoint,
    p3: &HomogeneousPoint,
    q1: &HomogeneousPoint,
    q2: &HomogeneousPoint,
    q3: &HomogeneousPoint,
) -> Result<f64> {
    let r1 = decompose_on_side(q1, p1, p2)?.ratio();
    let r2 = decompose_on_side(q2, p2, p3)?.ratio();
    let r3 = decompose_on_side(q3, p3, p1)?.ratio();
    Ok(r1 * r2 * r3)
}

/// Six conic points grouped by side: `six[i][j]` is `Q_{i+1}^{(j+1)}`.
pub type SixPoints = [[HomogeneousPoint; 2]; 3];

/// Rejects chord intersections that are unusably far away.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChordGuard {
    /// Minimum `|w|` of the unit-normalized intersection.
    pub min_w: f64,
    /// Maximum distance from the points' bounding-box center, in bounding-box diagonals.
    pub max_distance_factor: f64,
}

impl Default for ChordGuard {
    fn default() -> Self {
        Self { min_w: 1e-8, max_distance_factor: 64.0 }
    }
}

impl ChordGuard {
    /// Accepts every finite intersection.
    pub fn none() -> Self {
        Self { min_w: 0.0, max_distance_factor: f64::INFINITY }
    }
}

/// The three triangle vertices `P_1, P_2, P_3` built from the chords `Q_i^{(1)} Q_i^{(2)}`.
pub fn cnc_vertices(six: &SixPoints, guard: &ChordGuard) -> Result<[HomogeneousPoint; 3]> {
    let chord = |i: usize| (&six[i][0], &six[i][1]);
    let meet = |i: usize, k: usize| {
        let (a1, a2) = chord(i);
        let (b1, b2) = chord(k);
        intersect_lines(a1, a2, b1, b2)
    };
    let verts = [meet(2, 0)?, meet(0, 1)?, meet(1, 2)?];

    let mut bbox = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut all_finite = true;
    for q in six.iter().flatten() {
        match q.to_affine() {
            Some((x, y)) => {
                bbox.0 = bbox.0.min(x);
                bbox.1 = bbox.1.min(y);
                bbox.2 = bbox.2.max(x);
                bbox.3 = bbox.3.max(y);
            }
            None => all_finite = false,
        }
    }
    let diag = ((bbox.2 - bbox.0).powi(2) + (bbox.3 - bbox.1).powi(2)).sqrt();
    let (cx, cy) = ((bbox.0 + bbox.2) / 2.0, (bbox.1 + bbox.3) / 2.0);

    for v in &verts {
        let n = v.normalized();
        if n.w.abs() < guard.min_w || n.w == 0.0 {
            return Err(Error::ParallelChords);
        }
        if all_finite && guard.max_distance_factor.is_finite() {
            let (x, y) = (v.x / v.w, v.y / v.w);
            let d = ((x - cx).powi(2) + (y - cy).powi(2)).sqrt();
            if d > guard.max_distance_factor * diag {
                return Err(Error::ParallelChords);
            }
        }
    }
    Ok(verts)
}

/// Characteristic number of six points with the default chord guard.
pub fn cnc_from_six(six: &SixPoints) -> Result<f64> {
    cnc_from_six_guarded(six, &ChordGuard::default())
}

pub fn cnc_from_six_guarded(six: &SixPoints, guard: &ChordGuard) -> Result<f64> {
    let p = cnc_vertices(six, guard)?;
    cnc_with_vertices(six, &p)
}

/// Characteristic number of six side points on the given triangle.
pub fn cnc_with_vertices(six: &SixPoints, p: &[HomogeneousPoint; 3]) -> Result<f64> {
    let mut cn = 1.0;
    for (i, side) in six.iter().enumerate() {
        let (p_i, p_next) = (&p[i], &p[(i + 1) % 3]);
        for q in side {
            cn *= decompose_on_side(q, p_i, p_next)?.ratio();
        }
    }
    Ok(cn)
}

/// Collinearity determinant of the three Pascal points of the hexagon,
/// normalized by the product of the six points' magnitudes.
pub fn pascal_collinearity_residual(six: &SixPoints) -> f64 {
    let q = |i: usize, j: usize| six[i - 1][j - 1];
    let r1 = q(2, 2).cross(&q(3, 1)).cross(&q(1, 2).cross(&q(1, 1)));
    let r2 = q(3, 2).cross(&q(1, 1)).cross(&q(2, 2).cross(&q(2, 1)));
    let r3 = q(1, 2).cross(&q(2, 1)).cross(&q(3, 1).cross(&q(3, 2)));
    let norm: f64 = six.iter().flatten().map(|p| p.norm()).product();
    if norm == 0.0 {
        return 0.0;
    }
    (det3(&r1, &r2, &r3) / norm).abs()
}
