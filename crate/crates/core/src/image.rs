//! Grayscale raster, decoding, and Gaussian smoothing.

use std::path::Path;

use image::{DynamicImage, ImageFormat};

use crate::error::{Error, Result};

pub const MIN_SIDE: usize = 8;

/// Row-major intensity image with values in `[0, 255]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if width < MIN_SIDE || height < MIN_SIDE {
            return Err(Error::InvalidImage(format!(
                "{width}x{height} is smaller than {MIN_SIDE}x{MIN_SIDE}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{} samples for a {width}x{height} image",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_u8(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        Self::new(width, height, bytes.iter().map(|&b| f32::from(b)).collect())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f32) {
        self.data[y * self.width + x] = v;
    }

    /// Values rounded and clamped to bytes.
    pub fn to_u8(&self) -> Vec<u8> {
        self.data.iter().map(|&v| v.round().clamp(0.0, 255.0) as u8).collect()
    }

    /// Rotates by 90° clockwise: pixel `(x, y)` moves to `(h - 1 - y, x)`.
    pub fn rotated_cw(&self) -> Self {
        let (w, h) = (self.width, self.height);
        let mut out = vec![0.0; w * h];
        for y in 0..h {
            for x in 0..w {
                out[x * h + (h - 1 - y)] = self.data[y * w + x];
            }
        }
        Self { width: h, height: w, data: out }
    }

    /// Writes PNG or binary PGM depending on the extension.
    pub fn save(&self, path: &Path) -> Result<()> {
        let buf = image::GrayImage::from_raw(self.width as u32, self.height as u32, self.to_u8())
            .expect("buffer length matches dimensions");
        let format = ImageFormat::from_path(path)
            .map_err(|e| Error::UnsupportedFormat(e.to_string()))?;
        match format {
            ImageFormat::Png | ImageFormat::Pnm => buf
                .save_with_format(path, format)
                .map_err(|e| Error::UnsupportedFormat(e.to_string())),
            other => Err(Error::UnsupportedFormat(format!("{other:?}"))),
        }
    }
}

/// Luminance `0.299 R + 0.587 G + 0.114 B`, rounded; gray inputs pass through.
pub fn to_grayscale(img: &DynamicImage) -> Result<GrayImage> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img {
        DynamicImage::ImageLuma8(g) => GrayImage::from_u8(w, h, g.as_raw()),
        DynamicImage::ImageLumaA8(_) | DynamicImage::ImageLuma16(_) | DynamicImage::ImageLumaA16(_) => {
            GrayImage::from_u8(w, h, img.to_luma8().as_raw())
        }
        DynamicImage::ImageRgb8(_)
        | DynamicImage::ImageRgba8(_)
        | DynamicImage::ImageRgb16(_)
        | DynamicImage::ImageRgba16(_) => {
            let rgb = img.to_rgb8();
            let data = rgb
                .pixels()
                .map(|p| {
                    let [r, g, b] = p.0;
                    (0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b)).round()
                        as f32
                })
                .collect();
            GrayImage::new(w, h, data)
        }
        other => Err(Error::UnsupportedFormat(format!("{:?}", other.color()))),
    }
}

/// Decodes a PNG or binary PGM/PPM file.
pub fn load(path: &Path) -> Result<GrayImage> {
    let bytes = std::fs::read(path)?;
    let format =
        image::guess_format(&bytes).map_err(|e| Error::UnsupportedFormat(e.to_string()))?;
    if !matches!(format, ImageFormat::Png | ImageFormat::Pnm) {
        return Err(Error::UnsupportedFormat(format!("{format:?}")));
    }
    let img = image::load_from_memory_with_format(&bytes, format)
        .map_err(|e| Error::UnsupportedFormat(e.to_string()))?;
    to_grayscale(&img)
}

/// Normalized kernel of radius `ceil(3σ)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f32> {
    let radius = (3.0 * sigma).ceil() as i64;
    let k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter().map(|v| (v / sum) as f32).collect()
}

/// Mirror index without repeating the edge sample (`-1 -> 1`, `n -> n - 2`).
#[inline]
fn reflect(i: i64, n: i64) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - m;
    }
    m as usize
}

/// Separable Gaussian blur with reflected borders. Values are not rounded.
///
/// # Panics
/// If `sigma` is not positive.
pub fn gaussian_smooth(img: &GrayImage, sigma: f64) -> GrayImage {
    assert!(sigma > 0.0, "sigma must be positive");
    let kernel = gaussian_kernel(sigma);
    let r = (kernel.len() / 2) as i64;
    let (w, h) = (img.width, img.height);

    let mut tmp = vec![0.0f32; w * h];
    for y in 0..h {
        let row = &img.data[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0;
            for (k, kv) in kernel.iter().enumerate() {
                acc += kv * row[reflect(x as i64 + k as i64 - r, w as i64)];
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0f32; w * h];
    for y in 0..h {
        for (k, kv) in kernel.iter().enumerate() {
            let sy = reflect(y as i64 + k as i64 - r, h as i64);
            let src = &tmp[sy * w..(sy + 1) * w];
            let dst = &mut out[y * w..(y + 1) * w];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += kv * s;
            }
        }
    }
    GrayImage { width: w, height: h, data: out }
}

/// Impulse suppression that keeps one-pixel curves.
///
/// Each pixel takes whichever of its four 5-tap directional medians
/// (horizontal, vertical, both diagonals) lies closest to its own value.
/// Isolated outliers lose in every direction; a thin stroke survives along
/// its own direction.
pub fn directional_median(img: &GrayImage) -> GrayImage {
    const DIRS: [(i64, i64); 4] = [(1, 0), (0, 1), (1, 1), (1, -1)];
    let (w, h) = (img.width as i64, img.height as i64);
    let d = &img.data;
    let mut out = vec![0.0f32; d.len()];
    for y in 0..h {
        let inner_y = (2..h - 2).contains(&y);
        for x in 0..w {
            let c = d[(y * w + x) as usize];
            let inner = inner_y && (2..w - 2).contains(&x);
            let mut best = c;
            let mut gap = f32::INFINITY;
            for (dx, dy) in DIRS {
                let mut t = [0.0f32; 5];
                for (k, v) in t.iter_mut().enumerate() {
                    let s = k as i64 - 2;
                    let (px, py) = (x + s * dx, y + s * dy);
                    *v = if inner {
                        d[(py * w + px) as usize]
                    } else {
                        d[reflect(py, h) * img.width + reflect(px, w)]
                    };
                }
                let m = median5(t);
                let g = (m - c).abs();
                if g < gap {
                    gap = g;
                    best = m;
                }
            }
            out[(y * w + x) as usize] = best;
        }
    }
    GrayImage { width: img.width, height: img.height, data: out }
}

fn median5(mut t: [f32; 5]) -> f32 {
    for i in 1..5 {
        let mut j = i;
        while j > 0 && t[j - 1] > t[j] {
            t.swap(j - 1, j);
            j -= 1;
        }
    }
    t[2]
}
