//! Synthetic test imagery: stroked ellipses and line segments on white, optional
//! salt-and-pepper noise, and the standard parameter sweeps.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::write_ground_truth;
use crate::fitting::EllipseParams;
use crate::image::GrayImage;

pub const DEFAULT_STROKE: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipseStroke {
    pub params: EllipseParams,
    pub width: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineSegment {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub width: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub ellipses: Vec<EllipseStroke>,
    pub lines: Vec<LineSegment>,
    pub noise_density: f64,
    pub seed: u64,
}

impl SceneSpec {
    pub fn blank(width: usize, height: usize) -> Self {
        Self { width, height, ellipses: Vec::new(), lines: Vec::new(), noise_density: 0.0, seed: 0 }
    }

    pub fn with_ellipse(mut self, params: EllipseParams, width: f64) -> Self {
        self.ellipses.push(EllipseStroke { params, width });
        self
    }

    pub fn with_noise(mut self, density: f64, seed: u64) -> Self {
        self.noise_density = density;
        self.seed = seed;
        self
    }

    pub fn ground_truth(&self) -> Vec<EllipseParams> {
        self.ellipses.iter().map(|e| e.params).collect()
    }
}

/// Distance from `(u, v)` to the axis-aligned ellipse `u²/a² + v²/b² = 1`, `a >= b > 0`.
///
/// Bisection on the Lagrange multiplier of the closest-point problem; exact to rounding.
pub fn ellipse_distance(a: f64, b: f64, u: f64, v: f64) -> f64 {
    let (u, v) = (u.abs(), v.abs());
    if v > 0.0 {
        if u > 0.0 {
            let (z0, z1) = (u / a, v / b);
            let g = z0 * z0 + z1 * z1 - 1.0;
            if g == 0.0 {
                return 0.0;
            }
            let r0 = (a / b).powi(2);
            let n0 = r0 * z0;
            let mut s0 = z1 - 1.0;
            let mut s1 = if g < 0.0 { 0.0 } else { n0.hypot(z1) - 1.0 };
            let mut s = 0.0;
            for _ in 0..200 {
                s = 0.5 * (s0 + s1);
                if s == s0 || s == s1 {
                    break;
                }
                let ratio0 = n0 / (s + r0);
                let ratio1 = z1 / (s + 1.0);
                let gs = ratio0 * ratio0 + ratio1 * ratio1 - 1.0;
                if gs > 0.0 {
                    s0 = s;
                } else if gs < 0.0 {
                    s1 = s;
                } else {
                    break;
                }
            }
            let x = r0 * u / (s + r0);
            let y = v / (s + 1.0);
            (x - u).hypot(y - v)
        } else {
            (v - b).abs()
        }
    } else {
        let numer = a * u;
        let denom = a * a - b * b;
        if numer < denom {
            let xd = numer / denom;
            let x = a * xd;
            let y = b * (1.0 - xd * xd).max(0.0).sqrt();
            (x - u).hypot(y)
        } else {
            (u - a).abs()
        }
    }
}

fn segment_distance(l: &LineSegment, x: f64, y: f64) -> f64 {
    let (dx, dy) = (l.x1 - l.x0, l.y1 - l.y0);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((x - l.x0) * dx + (y - l.y0) * dy) / len2).clamp(0.0, 1.0) };
    (x - l.x0 - t * dx).hypot(y - l.y0 - t * dy)
}

fn coverage(d: f64, width: f64) -> f32 {
    (width / 2.0 + 0.5 - d).clamp(0.0, 1.0) as f32
}

fn paint(img: &mut GrayImage, x: usize, y: usize, c: f32) {
    if c > 0.0 {
        let v = 255.0 * (1.0 - c);
        if v < img.get(x, y) {
            img.set(x, y, v);
        }
    }
}

fn check_frame(spec: &SceneSpec) -> Result<()> {
    let out = || Error::OutOfFrame { width: spec.width, height: spec.height };
    let (w, h) = (spec.width as f64, spec.height as f64);
    let inside = |x: f64, y: f64, r: f64| x - r >= 0.0 && y - r >= 0.0 && x + r <= w - 1.0 && y + r <= h - 1.0;
    for e in &spec.ellipses {
        let (hx, hy) = e.params.half_extents();
        let r = e.width / 2.0;
        let p = &e.params;
        if !(p.cx - hx - r >= 0.0 && p.cy - hy - r >= 0.0 && p.cx + hx + r <= w - 1.0 && p.cy + hy + r <= h - 1.0) {
            return Err(out());
        }
    }
    for l in &spec.lines {
        if !inside(l.x0, l.y0, l.width / 2.0) || !inside(l.x1, l.y1, l.width / 2.0) {
            return Err(out());
        }
    }
    if !(0.0..=1.0).contains(&spec.noise_density) {
        return Err(Error::Config(format!("noise density {} outside [0, 1]", spec.noise_density)));
    }
    Ok(())
}

/// Anti-aliased dark strokes on white, then salt-and-pepper noise.
pub fn render(spec: &SceneSpec) -> Result<GrayImage> {
    check_frame(spec)?;
    let mut img = GrayImage::filled(spec.width, spec.height, 255.0)?;
    let (w, h) = (spec.width as i64, spec.height as i64);

    for e in &spec.ellipses {
        let p = &e.params;
        let reach = e.width / 2.0 + 1.0;
        let (hx, hy) = p.half_extents();
        let x0 = ((p.cx - hx - reach).floor() as i64).max(0);
        let x1 = ((p.cx + hx + reach).ceil() as i64).min(w - 1);
        let y0 = ((p.cy - hy - reach).floor() as i64).max(0);
        let y1 = ((p.cy + hy + reach).ceil() as i64).min(h - 1);
        let (ao, bo) = (p.a + reach, p.b + reach);
        let inner = (p.b > reach).then_some((p.a - reach, p.b - reach));
        for y in y0..=y1 {
            for x in x0..=x1 {
                let (u, v) = p.to_local(x as f64, y as f64);
                if (u / ao).powi(2) + (v / bo).powi(2) > 1.0 {
                    continue;
                }
                if let Some((ai, bi)) = inner {
                    if (u / ai).powi(2) + (v / bi).powi(2) < 1.0 {
                        continue;
                    }
                }
                let d = ellipse_distance(p.a, p.b, u, v);
                paint(&mut img, x as usize, y as usize, coverage(d, e.width));
            }
        }
    }

    for l in &spec.lines {
        let reach = l.width / 2.0 + 1.0;
        let x0 = ((l.x0.min(l.x1) - reach).floor() as i64).max(0);
        let x1 = ((l.x0.max(l.x1) + reach).ceil() as i64).min(w - 1);
        let y0 = ((l.y0.min(l.y1) - reach).floor() as i64).max(0);
        let y1 = ((l.y0.max(l.y1) + reach).ceil() as i64).min(h - 1);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let d = segment_distance(l, x as f64, y as f64);
                paint(&mut img, x as usize, y as usize, coverage(d, l.width));
            }
        }
    }

    if spec.noise_density > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let half = spec.noise_density / 2.0;
        for v in img.data_mut() {
            let r: f64 = rng.random();
            if r < half {
                *v = 0.0;
            } else if r < spec.noise_density {
                *v = 255.0;
            }
        }
    }
    Ok(img)
}

/// One sweep cell with its grid coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepCell {
    pub name: String,
    /// Minor over major axis.
    pub ratio: f64,
    /// The swept semi-axis (major), in pixels.
    pub axis: f64,
    pub theta_deg: f64,
    pub spec: SceneSpec,
}

const SWEEP_SIDE: usize = 400;
const SWEEP_CENTER: f64 = 200.0;
/// Orientation shared by every cell of the axis/ratio sweep.
pub const AXIS_SWEEP_THETA_DEG: f64 = 30.0;

fn sweep_cell(name: String, axis: f64, ratio: f64, theta_deg: f64, stroke: f64) -> SweepCell {
    let b = (axis * ratio).max(0.5);
    let params = EllipseParams::new(SWEEP_CENTER, SWEEP_CENTER, axis, b, theta_deg.to_radians());
    SweepCell {
        name,
        ratio,
        axis,
        theta_deg,
        spec: SceneSpec::blank(SWEEP_SIDE, SWEEP_SIDE).with_ellipse(params, stroke),
    }
}

/// Ratio `0.01..=1.00` by `0.01` times orientation `1..=91°`; semi-axis 100.
///
/// The 91 orientation steps give the 9100 cells the sweep is known by.
pub fn sweep_ratio_orientation_cells() -> Vec<SweepCell> {
    let mut out = Vec::with_capacity(9100);
    for r in 1..=100 {
        for t in 1..=91 {
            let ratio = r as f64 / 100.0;
            out.push(sweep_cell(format!("ro_r{r:03}_t{t:02}"), 100.0, ratio, t as f64, DEFAULT_STROKE));
        }
    }
    out
}

pub fn sweep_ratio_orientation() -> Vec<SceneSpec> {
    sweep_ratio_orientation_cells().into_iter().map(|c| c.spec).collect()
}

/// Semi-axis `1..=100` times ratio `0.01..=1.00`, fixed center and orientation.
pub fn sweep_axis_ratio_cells() -> Vec<SweepCell> {
    let mut out = Vec::with_capacity(10000);
    for a in 1..=100 {
        for r in 1..=100 {
            let ratio = r as f64 / 100.0;
            out.push(sweep_cell(
                format!("ar_a{a:03}_r{r:03}"),
                a as f64,
                ratio,
                AXIS_SWEEP_THETA_DEG,
                DEFAULT_STROKE,
            ));
        }
    }
    out
}

pub fn sweep_axis_ratio() -> Vec<SceneSpec> {
    sweep_axis_ratio_cells().into_iter().map(|c| c.spec).collect()
}

pub const NOISE_DENSITIES: [f64; 6] = [0.03, 0.06, 0.09, 0.12, 0.15, 0.18];

/// Knobs for random multi-ellipse scenes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneGenConfig {
    pub width: usize,
    pub height: usize,
    pub ellipses: (usize, usize),
    pub lines: (usize, usize),
    pub semi_major: (f64, f64),
    pub min_ratio: f64,
    pub line_length: (f64, f64),
    pub stroke: f64,
}

impl Default for SceneGenConfig {
    fn default() -> Self {
        Self {
            width: 640,
            height: 480,
            ellipses: (3, 6),
            lines: (5, 10),
            semi_major: (30.0, 90.0),
            min_ratio: 0.3,
            line_length: (60.0, 250.0),
            stroke: DEFAULT_STROKE,
        }
    }
}

/// Non-overlapping ellipses plus distractor segments.
pub fn random_scene(cfg: &SceneGenConfig, seed: u64) -> SceneSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spec = SceneSpec::blank(cfg.width, cfg.height);
    spec.seed = seed;
    let n_e = rng.random_range(cfg.ellipses.0..=cfg.ellipses.1);
    let margin = 4.0 + cfg.stroke;
    let mut placed: Vec<(f64, f64, f64)> = Vec::new();
    let mut attempts = 0;
    while placed.len() < n_e && attempts < 10_000 {
        attempts += 1;
        let a = rng.random_range(cfg.semi_major.0..=cfg.semi_major.1);
        let b = a * rng.random_range(cfg.min_ratio..=1.0);
        let theta = rng.random_range(0.0..PI);
        let p = EllipseParams::new(0.0, 0.0, a, b, theta);
        let (hx, hy) = p.half_extents();
        let (lx, ly) = (hx + margin, hy + margin);
        if 2.0 * lx >= cfg.width as f64 || 2.0 * ly >= cfg.height as f64 {
            continue;
        }
        let cx = rng.random_range(lx..cfg.width as f64 - lx);
        let cy = rng.random_range(ly..cfg.height as f64 - ly);
        if placed.iter().any(|&(x, y, r)| (x - cx).hypot(y - cy) < r + p.a + margin) {
            continue;
        }
        placed.push((cx, cy, p.a));
        spec.ellipses.push(EllipseStroke { params: EllipseParams { cx, cy, ..p }, width: cfg.stroke });
    }
    let n_l = rng.random_range(cfg.lines.0..=cfg.lines.1);
    let pad = 2.0 + cfg.stroke;
    let (w, h) = (cfg.width as f64 - 1.0 - pad, cfg.height as f64 - 1.0 - pad);
    while spec.lines.len() < n_l {
        let x0 = rng.random_range(pad..w);
        let y0 = rng.random_range(pad..h);
        let len = rng.random_range(cfg.line_length.0..=cfg.line_length.1);
        let ang = rng.random_range(0.0..2.0 * PI);
        let (x1, y1) = (x0 + len * ang.cos(), y0 + len * ang.sin());
        if (pad..=w).contains(&x1) && (pad..=h).contains(&y1) {
            spec.lines.push(LineSegment { x0, y0, x1, y1, width: cfg.stroke });
        }
    }
    spec
}

/// Writes `<name>.png` and the `<name>.txt` ground-truth sidecar.
pub fn write_scene(dir: &Path, name: &str, spec: &SceneSpec) -> Result<PathBuf> {
    let img = render(spec)?;
    let path = dir.join(format!("{name}.png"));
    img.save(&path)?;
    std::fs::write(dir.join(format!("{name}.txt")), write_ground_truth(&spec.ground_truth()))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_spec_is_white() {
        let img = render(&SceneSpec::blank(32, 20)).unwrap();
        assert!(img.data().iter().all(|&v| v == 255.0));
    }

    #[test]
    fn full_noise_is_binary_and_balanced() {
        let img = render(&SceneSpec::blank(200, 200).with_noise(1.0, 5)).unwrap();
        assert!(img.data().iter().all(|&v| v == 0.0 || v == 255.0));
        let black = img.data().iter().filter(|&&v| v == 0.0).count() as f64 / 40000.0;
        assert!((black - 0.5).abs() <= 0.02, "{black}");
    }

    #[test]
    fn distance_matches_circle() {
        for (u, v) in [(3.0, 4.0), (30.0, 1.0), (0.0, 12.0), (7.0, 0.0), (0.0, 0.0)] {
            let d = ellipse_distance(10.0, 10.0, u, v);
            assert!((d - (f64::hypot(u, v) - 10.0).abs()).abs() < 1e-9, "({u},{v})");
        }
        assert!((ellipse_distance(10.0, 5.0, 0.0, 9.0) - 4.0).abs() < 1e-12);
        assert!((ellipse_distance(10.0, 5.0, 14.0, 0.0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn distance_is_orthogonal() {
        // the closest point's normal passes through the query point
        let (a, b) = (50.0, 20.0);
        for (u, v) in [(30.0, 30.0), (10.0, 5.0), (60.0, 2.0)] {
            let d = ellipse_distance(a, b, u, v);
            let best = (0..200_000)
                .map(|i| {
                    let t = i as f64 / 200_000.0 * 2.0 * PI;
                    (a * t.cos() - u).hypot(b * t.sin() - v)
                })
                .fold(f64::INFINITY, f64::min);
            assert!((d - best).abs() < 1e-3, "{d} vs {best}");
        }
    }

    #[test]
    fn out_of_frame() {
        let spec = SceneSpec::blank(100, 100).with_ellipse(EllipseParams::new(50.0, 50.0, 60.0, 10.0, 0.0), 1.0);
        assert!(matches!(render(&spec), Err(Error::OutOfFrame { .. })));
    }

    #[test]
    fn boundary_pixel_count_matches_perimeter() {
        let e = EllipseParams::new(200.0, 200.0, 100.0, 50.0, 0.0);
        let img = render(&SceneSpec::blank(400, 400).with_ellipse(e, 1.0)).unwrap();
        let dark = img.data().iter().filter(|&&v| v < 128.0).count() as f64;
        let per = e.perimeter();
        assert!((dark - per).abs() / per < 0.05, "{dark} vs {per}");
    }

    #[test]
    fn sweeps() {
        let ro = sweep_ratio_orientation_cells();
        assert_eq!(ro.len(), 9100);
        assert_eq!((ro[0].ratio, ro[0].theta_deg), (0.01, 1.0));
        let keys: std::collections::HashSet<(u64, u64)> =
            ro.iter().map(|c| (c.ratio.to_bits(), c.theta_deg.to_bits())).collect();
        assert_eq!(keys.len(), 9100);

        let ar = sweep_axis_ratio_cells();
        assert_eq!(ar.len(), 10000);
        assert!(ar.iter().any(|c| c.axis == 10.0 && c.ratio == 0.25));
        let t0 = ar[0].spec.ellipses[0].params.theta;
        assert!(ar.iter().all(|c| c.theta_deg == AXIS_SWEEP_THETA_DEG));
        assert!(t0.is_finite());
    }

    #[test]
    fn random_scenes_render() {
        for seed in 0..5 {
            let s = random_scene(&SceneGenConfig::default(), seed);
            assert!((3..=6).contains(&s.ellipses.len()));
            assert!((5..=10).contains(&s.lines.len()));
            assert_eq!(render(&s).unwrap(), render(&s).unwrap());
        }
    }
}
