//! Canny edge detection emitting gradient-tagged edge points.

use std::collections::VecDeque;

use crate::image::{gaussian_smooth, GrayImage};

/// Which pair of diagonal quadrant sets an edge point can belong to,
/// decided by the sign of the gradient slope.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum GradientClass {
    /// `tau > 0`: quadrants II and IV.
    Positive,
    /// `tau < 0`: quadrants I and III.
    Negative,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgePoint {
    pub x: usize,
    pub y: usize,
    /// Gradient slope `gy / gx`; `±inf` when the gradient is vertical.
    pub tau: f64,
}

impl EdgePoint {
    pub fn new(x: usize, y: usize, tau: f64) -> Self {
        Self { x, y, tau }
    }

    pub fn pos(&self) -> (f64, f64) {
        (self.x as f64, self.y as f64)
    }

    /// `None` for axis-aligned gradients (`tau` zero or infinite).
    pub fn class(&self) -> Option<GradientClass> {
        if !self.tau.is_finite() || self.tau == 0.0 {
            None
        } else if self.tau > 0.0 {
            Some(GradientClass::Positive)
        } else {
            Some(GradientClass::Negative)
        }
    }
}

/// Sobel responses of an image.
pub struct Gradients {
    pub width: usize,
    pub height: usize,
    pub gx: Vec<f32>,
    pub gy: Vec<f32>,
    pub mag: Vec<f32>,
}

pub fn sobel(img: &GrayImage) -> Gradients {
    let (w, h) = (img.width(), img.height());
    let d = img.data();
    let mut gx = vec![0.0f32; w * h];
    let mut gy = vec![0.0f32; w * h];
    let mut mag = vec![0.0f32; w * h];
    for y in 0..h {
        let ym = y.saturating_sub(1);
        let yp = (y + 1).min(h - 1);
        for x in 0..w {
            let xm = x.saturating_sub(1);
            let xp = (x + 1).min(w - 1);
            let p = |xx: usize, yy: usize| d[yy * w + xx];
            let sx = (p(xp, ym) + 2.0 * p(xp, y) + p(xp, yp)) - (p(xm, ym) + 2.0 * p(xm, y) + p(xm, yp));
            let sy = (p(xm, yp) + 2.0 * p(x, yp) + p(xp, yp)) - (p(xm, ym) + 2.0 * p(x, ym) + p(xp, ym));
            let i = y * w + x;
            gx[i] = sx;
            gy[i] = sy;
            mag[i] = sx.hypot(sy);
        }
    }
    Gradients { width: w, height: h, gx, gy, mag }
}

/// Magnitudes below this count as zero when picking automatic thresholds.
const MIN_NONZERO_MAGNITUDE: f32 = 1.0;

/// `(low, high)` with `high` the 70th percentile of nonzero magnitudes and `low = 0.4 high`.
pub fn auto_thresholds(grad: &Gradients) -> Option<(f64, f64)> {
    let mut nz: Vec<f32> = grad.mag.iter().copied().filter(|&m| m >= MIN_NONZERO_MAGNITUDE).collect();
    if nz.is_empty() {
        return None;
    }
    let k = ((nz.len() as f64 * 0.7).ceil() as usize).clamp(1, nz.len()) - 1;
    let (_, high, _) = nz.select_nth_unstable_by(k, f32::total_cmp);
    let high = f64::from(*high);
    Some((0.4 * high, high))
}

/// Non-maximum suppression plus double-threshold hysteresis on precomputed gradients.
pub fn canny_from_gradients(grad: &Gradients, low: f64, high: f64) -> Vec<EdgePoint> {
    let (w, h) = (grad.width, grad.height);
    let mag = &grad.mag;
    let (low, high) = (low as f32, high as f32);
    const TAN_22_5: f32 = 0.414_213_57;

    // 0 = suppressed, 1 = weak, 2 = strong
    let mut state = vec![0u8; w * h];
    for y in 1..h.saturating_sub(1) {
        for x in 1..w.saturating_sub(1) {
            let i = y * w + x;
            let m = mag[i];
            if m < low || m == 0.0 {
                continue;
            }
            let (gx, gy) = (grad.gx[i], grad.gy[i]);
            let (ax, ay) = (gx.abs(), gy.abs());
            let (before, after) = if ay <= TAN_22_5 * ax {
                (mag[i - 1], mag[i + 1])
            } else if ax <= TAN_22_5 * ay {
                (mag[i - w], mag[i + w])
            } else if (gx > 0.0) == (gy > 0.0) {
                (mag[i - w - 1], mag[i + w + 1])
            } else {
                (mag[i - w + 1], mag[i + w - 1])
            };
            if m > before && m >= after {
                state[i] = if m >= high { 2 } else { 1 };
            }
        }
    }

    let mut keep = vec![false; w * h];
    let mut queue = VecDeque::new();
    for i in 0..w * h {
        if state[i] == 2 && !keep[i] {
            keep[i] = true;
            queue.push_back(i);
            while let Some(j) = queue.pop_front() {
                let (jx, jy) = ((j % w) as i64, (j / w) as i64);
                for dy in -1..=1i64 {
                    for dx in -1..=1i64 {
                        let (nx, ny) = (jx + dx, jy + dy);
                        if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                            continue;
                        }
                        let n = ny as usize * w + nx as usize;
                        if state[n] != 0 && !keep[n] {
                            keep[n] = true;
                            queue.push_back(n);
                        }
                    }
                }
            }
        }
    }

    keep.iter()
        .enumerate()
        .filter(|(_, &k)| k)
        .map(|(i, _)| {
            let (gx, gy) = (f64::from(grad.gx[i]), f64::from(grad.gy[i]));
            let tau = if gx.abs() < 1e-12 {
                if gy >= 0.0 { f64::INFINITY } else { f64::NEG_INFINITY }
            } else {
                gy / gx
            };
            EdgePoint::new(i % w, i / w, tau)
        })
        .collect()
}

/// Canny edges of an (already smoothed) image, in row-major order.
pub fn canny_edges(img: &GrayImage, low: f64, high: f64) -> Vec<EdgePoint> {
    canny_from_gradients(&sobel(img), low, high)
}

/// Smoothing followed by Canny; missing thresholds are chosen automatically.
pub fn detect_edges(img: &GrayImage, sigma: f64, low: Option<f64>, high: Option<f64>) -> Vec<EdgePoint> {
    let smoothed = gaussian_smooth(img, sigma);
    let grad = sobel(&smoothed);
    let (low, high) = match (low, high) {
        (Some(l), Some(h)) => (l, h),
        (l, h) => {
            let Some((al, ah)) = auto_thresholds(&grad) else {
                return Vec::new();
            };
            match (l, h) {
                (Some(l), None) => (l, ah.max(l)),
                (None, Some(h)) => (0.4 * h, h),
                _ => (al, ah),
            }
        }
    };
    canny_from_gradients(&grad, low, high)
}
