//! The full detection pipeline with per-stage timing.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::arcs::{assign_quadrants, link_edges, prune_lines, prune_short, ArcSegment};
use crate::edges::detect_edges;
use crate::error::{Error, Result};
use crate::fitting::{fit_triple, EllipseParams};
use crate::image::{directional_median, GrayImage};
use crate::selection::{pick_triples, QuadrantSets, SelectionConfig};
use crate::validation::{cluster_duplicates, validate, CandidateEllipse};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub sigma: f64,
    pub canny_low: Option<f64>,
    pub canny_high: Option<f64>,
    /// Arcs with fewer points are dropped.
    pub th_length: usize,
    /// Arcs with a smaller endpoint/midpoint triangle determinant per point are dropped.
    pub th_cnl: f64,
    pub th_cnc: f64,
    pub n_d: usize,
    pub th_fit: f64,
    pub th_len: f64,
    /// Distance tolerance of the fit support, in pixels.
    pub fit_tol: f64,
    /// Directional-median impulse filter ahead of smoothing.
    pub denoise: bool,
    pub seed: u64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            canny_low: None,
            canny_high: None,
            th_length: 16,
            th_cnl: 3.0,
            th_cnc: 0.2,
            n_d: 16,
            th_fit: 0.7,
            th_len: 0.4,
            fit_tol: 2.0,
            denoise: false,
            seed: 0,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse {key} = {value:?}")))
}

fn parse_threshold(key: &str, value: &str) -> Result<f64> {
    match value.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "off" => Ok(f64::INFINITY),
        _ => parse(key, value),
    }
}

impl DetectorConfig {
    /// Sets one option by its `key = value` name (`th_cnc` and `th-cnc` both work).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let k = key.trim().replace('-', "_");
        match k.as_str() {
            "sigma" => self.sigma = parse(&k, value)?,
            "canny_low" => self.canny_low = Some(parse(&k, value)?),
            "canny_high" => self.canny_high = Some(parse(&k, value)?),
            "th_length" => self.th_length = parse(&k, value)?,
            "th_cnl" => self.th_cnl = parse(&k, value)?,
            "th_cnc" => self.th_cnc = parse_threshold(&k, value)?,
            "nd" | "n_d" => self.n_d = parse(&k, value)?,
            "th_fit" => self.th_fit = parse(&k, value)?,
            "th_len" => self.th_len = parse(&k, value)?,
            "fit_tol" => self.fit_tol = parse(&k, value)?,
            "denoise" => self.denoise = parse(&k, value)?,
            "seed" => self.seed = parse(&k, value)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; blank lines and `#` comments are skipped.
    /// Keys this struct does not know are handed to `other`.
    pub fn apply_text(
        &mut self,
        text: &str,
        mut other: impl FnMut(&str, &str) -> Result<bool>,
    ) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Config(format!("line {}: expected key = value", i + 1)));
            };
            match self.set(k, v) {
                Ok(()) => {}
                Err(e) => {
                    if !other(k.trim(), v.trim())? {
                        return Err(e);
                    }
                }
            }
        }
        Ok(())
    }

    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if !(self.sigma > 0.0) {
            return bad("sigma must be positive");
        }
        if let (Some(l), Some(h)) = (self.canny_low, self.canny_high) {
            if l > h {
                return bad("canny_low exceeds canny_high");
            }
        }
        if self.canny_low.is_some_and(|l| l < 0.0) || self.canny_high.is_some_and(|h| h < 0.0) {
            return bad("canny thresholds must be non-negative");
        }
        if self.th_length < 2 {
            return bad("th_length must be at least 2");
        }
        if !(self.th_cnl >= 0.0) || !(self.th_cnc >= 0.0) {
            return bad("th_cnl and th_cnc must be non-negative");
        }
        if self.n_d < 4 {
            return bad("nd must be at least 4");
        }
        if !(0.0..=1.0).contains(&self.th_fit) || !(self.th_len >= 0.0) || !(self.fit_tol > 0.0) {
            return bad("th_fit must lie in [0, 1], th_len >= 0, fit_tol > 0");
        }
        Ok(())
    }

    /// Effective values as `key = value` lines.
    pub fn to_text(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "auto".to_string(), |x| x.to_string());
        format!(
            "sigma = {}\ncanny_low = {}\ncanny_high = {}\nth_length = {}\nth_cnl = {}\nth_cnc = {}\nnd = {}\nth_fit = {}\nth_len = {}\nfit_tol = {}\ndenoise = {}\nseed = {}\n",
            self.sigma,
            opt(self.canny_low),
            opt(self.canny_high),
            self.th_length,
            self.th_cnl,
            self.th_cnc,
            self.n_d,
            self.th_fit,
            self.th_len,
            self.fit_tol,
            self.denoise,
            self.seed
        )
    }
}

/// Wall time per stage, in milliseconds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub edge_detection: f64,
    pub preprocessing: f64,
    pub grouping: f64,
    pub estimation: f64,
    pub validation: f64,
    pub total: f64,
}

impl StageTimings {
    pub fn stage_sum(&self) -> f64 {
        self.edge_detection + self.preprocessing + self.grouping + self.estimation + self.validation
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            edge_detection: self.edge_detection * s,
            preprocessing: self.preprocessing * s,
            grouping: self.grouping * s,
            estimation: self.estimation * s,
            validation: self.validation * s,
            total: self.total * s,
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self {
            edge_detection: self.edge_detection + o.edge_detection,
            preprocessing: self.preprocessing + o.preprocessing,
            grouping: self.grouping + o.grouping,
            estimation: self.estimation + o.estimation,
            validation: self.validation + o.validation,
            total: self.total + o.total,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    #[serde(flatten)]
    pub params: EllipseParams,
    pub score: f64,
    pub fit_ratio: f64,
    pub length_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DetectionReport {
    pub width: usize,
    pub height: usize,
    pub ellipses: Vec<Detection>,
    pub edge_points: usize,
    /// Arcs right after linking.
    pub arcs_linked: usize,
    /// Arcs left after length and straightness pruning.
    pub arcs_pruned: usize,
    /// Arcs with a quadrant label.
    pub arcs_labeled: usize,
    /// Candidate combinations passed to fitting.
    pub cc: usize,
    pub timings: StageTimings,
    #[serde(skip)]
    pub arcs: Vec<ArcSegment>,
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

#[derive(Clone, Debug)]
pub struct Detector {
    cfg: DetectorConfig,
}

impl Detector {
    pub fn new(cfg: DetectorConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.cfg
    }

    pub fn detect(&self, img: &GrayImage) -> DetectionReport {
        let cfg = &self.cfg;
        let start = Instant::now();

        let t = Instant::now();
        let filtered;
        let base = if cfg.denoise {
            filtered = directional_median(img);
            &filtered
        } else {
            img
        };
        let edges = detect_edges(base, cfg.sigma, cfg.canny_low, cfg.canny_high);
        let edge_detection = ms(t);

        let t = Instant::now();
        let linked = link_edges(&edges);
        let arcs_linked = linked.len();
        let arcs = prune_lines(prune_short(linked, cfg.th_length), cfg.th_cnl);
        let arcs_pruned = arcs.len();
        let arcs = assign_quadrants(arcs);
        let preprocessing = ms(t);

        let t = Instant::now();
        let sets = QuadrantSets::new(&arcs);
        let triples = pick_triples(&sets, &SelectionConfig { th_cnc: cfg.th_cnc });
        let grouping = ms(t);

        let t = Instant::now();
        let fitted: Vec<_> = triples
            .iter()
            .filter_map(|tr| fit_triple(tr, cfg.n_d, cfg.seed).ok().map(|p| (p, *tr)))
            .filter(|(p, _)| p.cx.is_finite() && p.cy.is_finite() && p.theta.is_finite())
            .collect();
        let estimation = ms(t);

        let t = Instant::now();
        let cands: Vec<CandidateEllipse> = fitted
            .into_iter()
            .map(|(p, tr)| CandidateEllipse::new(p, tr, cfg.fit_tol))
            .collect();
        let mut kept = cluster_duplicates(validate(cands, cfg.th_fit, cfg.th_len));
        kept.sort_by(|a, b| {
            b.vote()
                .total_cmp(&a.vote())
                .then(a.params.cx.total_cmp(&b.params.cx))
                .then(a.params.cy.total_cmp(&b.params.cy))
        });
        let ellipses: Vec<Detection> = kept
            .iter()
            .map(|c| Detection {
                params: c.params,
                score: c.fit_ratio * c.length_ratio.min(1.0),
                fit_ratio: c.fit_ratio,
                length_ratio: c.length_ratio,
            })
            .collect();
        let validation = ms(t);

        let total = ms(start);
        let arcs_labeled = sets.total();
        let cc = triples.len();
        DetectionReport {
            width: img.width(),
            height: img.height(),
            ellipses,
            edge_points: edges.len(),
            arcs_linked,
            arcs_pruned,
            arcs_labeled,
            cc,
            timings: StageTimings { edge_detection, preprocessing, grouping, estimation, validation, total },
            arcs,
        }
    }
}
