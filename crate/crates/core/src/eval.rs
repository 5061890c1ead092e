//! Scoring detections against ground truth and running directory benchmarks.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::{Detector, StageTimings};
use crate::error::{Error, Result};
use crate::fitting::EllipseParams;
use crate::image::{load, GrayImage};

/// Parses `ellipse cx cy a b theta_deg` lines; `#` starts a comment.
pub fn parse_ground_truth(text: &str, file: &Path) -> Result<Vec<EllipseParams>> {
    let err = |line: usize, message: String| Error::DatasetFormat { file: file.to_path_buf(), line, message };
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tok = line.split_whitespace();
        if tok.next() != Some("ellipse") {
            return Err(err(i + 1, format!("expected `ellipse cx cy a b theta_deg`, got {line:?}")));
        }
        let nums: Vec<f64> = tok
            .map(|t| t.parse::<f64>().map_err(|_| err(i + 1, format!("not a number: {t:?}"))))
            .collect::<Result<_>>()?;
        if nums.len() != 5 {
            return Err(err(i + 1, format!("expected 5 numbers, got {}", nums.len())));
        }
        if nums.iter().any(|v| !v.is_finite()) || nums[2] <= 0.0 || nums[3] <= 0.0 {
            return Err(err(i + 1, "semi-axes must be positive and values finite".into()));
        }
        out.push(EllipseParams::new(nums[0], nums[1], nums[2], nums[3], nums[4].to_radians()));
    }
    Ok(out)
}

pub fn write_ground_truth(ellipses: &[EllipseParams]) -> String {
    let mut s = String::from("# ellipse cx cy a b theta_deg\n");
    for e in ellipses {
        let _ = writeln!(s, "ellipse {} {} {} {} {}", e.cx, e.cy, e.a, e.b, e.theta.to_degrees());
    }
    s
}

/// Line-pruning thresholds of the ablation sweep.
pub const TH_CNL_GRID: [f64; 6] = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];

/// The seventeen CNC thresholds of the ablation sweep.
pub const TH_CNC_GRID: [f64; 17] = [
    0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 1.0, 2.0, 3.0, 4.0, 5.0, 10.0, 20.0, 30.0, 40.0, 50.0,
];

/// Pixel-count intersection over union of two filled ellipses on the frame.
pub fn overlap_ratio(d: &EllipseParams, g: &EllipseParams, frame: (usize, usize)) -> f64 {
    let bounds = |e: &EllipseParams| {
        let (hx, hy) = e.half_extents();
        (e.cx - hx, e.cy - hy, e.cx + hx, e.cy + hy)
    };
    let (a, b) = (bounds(d), bounds(g));
    let x0 = a.0.min(b.0).floor().max(0.0) as usize;
    let y0 = a.1.min(b.1).floor().max(0.0) as usize;
    let x1 = (a.2.max(b.2).ceil().max(-1.0) as i64).min(frame.0 as i64 - 1);
    let y1 = (a.3.max(b.3).ceil().max(-1.0) as i64).min(frame.1 as i64 - 1);
    let (mut inter, mut union) = (0u64, 0u64);
    if x1 >= 0 && y1 >= 0 {
        for y in y0..=y1 as usize {
            for x in x0..=x1 as usize {
                let (fx, fy) = (x as f64, y as f64);
                let (i, j) = (d.contains(fx, fy), g.contains(fx, fy));
                inter += u64::from(i && j);
                union += u64::from(i || j);
            }
        }
    }
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// `2PR / (P + R)`, zero when both are zero.
pub fn f_measure(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchScore {
    pub detected: usize,
    pub truth: usize,
    pub correct: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

impl MatchScore {
    pub fn from_counts(detected: usize, truth: usize, correct: usize) -> Self {
        let (precision, recall, f) = match (detected, truth) {
            (0, 0) => (1.0, 1.0, 1.0),
            (0, _) => (0.0, 0.0, 0.0),
            (_, 0) => (0.0, 0.0, 0.0),
            _ => {
                let p = correct as f64 / detected as f64;
                let r = correct as f64 / truth as f64;
                (p, r, f_measure(p, r))
            }
        };
        Self { detected, truth, correct, precision, recall, f_measure: f }
    }
}

/// Greedy one-to-one matching by descending overlap; ties keep detection order.
pub fn match_and_score(
    detections: &[EllipseParams],
    truth: &[EllipseParams],
    frame: (usize, usize),
    th_o: f64,
) -> MatchScore {
    let mut pairs = Vec::new();
    for (i, d) in detections.iter().enumerate() {
        for (j, g) in truth.iter().enumerate() {
            let o = overlap_ratio(d, g, frame);
            if o > th_o {
                pairs.push((o, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_d = vec![false; detections.len()];
    let mut used_g = vec![false; truth.len()];
    let mut correct = 0;
    for (_, i, j) in pairs {
        if !used_d[i] && !used_g[j] {
            used_d[i] = true;
            used_g[j] = true;
            correct += 1;
        }
    }
    MatchScore::from_counts(detections.len(), truth.len(), correct)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub image: String,
    #[serde(flatten)]
    pub score: MatchScore,
    pub cc: usize,
    pub arcs: usize,
    pub stage_times: StageTimings,
}

pub fn evaluate_image(
    detector: &Detector,
    name: &str,
    img: &GrayImage,
    truth: &[EllipseParams],
    th_o: f64,
) -> EvalRow {
    let rep = detector.detect(img);
    let dets: Vec<EllipseParams> = rep.ellipses.iter().map(|d| d.params).collect();
    EvalRow {
        image: name.to_string(),
        score: match_and_score(&dets, truth, (img.width(), img.height()), th_o),
        cc: rep.cc,
        arcs: rep.arcs_labeled,
        stage_times: rep.timings,
    }
}

/// Pooled scores plus per-image means of counts and times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub images: usize,
    #[serde(flatten)]
    pub score: MatchScore,
    pub mean_cc: f64,
    pub mean_arcs: f64,
    pub mean_stage_times: StageTimings,
}

pub fn aggregate(rows: &[EvalRow]) -> Aggregate {
    let n = rows.len();
    let (d, t, c) = rows.iter().fold((0, 0, 0), |acc, r| {
        (acc.0 + r.score.detected, acc.1 + r.score.truth, acc.2 + r.score.correct)
    });
    let k = if n == 0 { 0.0 } else { 1.0 / n as f64 };
    let times = rows.iter().fold(StageTimings::default(), |acc, r| acc.add(&r.stage_times));
    Aggregate {
        images: n,
        score: MatchScore::from_counts(d, t, c),
        mean_cc: rows.iter().map(|r| r.cc as f64).sum::<f64>() * k,
        mean_arcs: rows.iter().map(|r| r.arcs as f64).sum::<f64>() * k,
        mean_stage_times: times.scaled(k),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<EvalRow>,
    pub aggregate: Aggregate,
}

impl BenchReport {
    pub fn from_rows(rows: Vec<EvalRow>) -> Self {
        let aggregate = aggregate(&rows);
        Self { rows, aggregate }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "image,precision,recall,f_measure,cc,edge_detection_ms,preprocessing_ms,grouping_ms,estimation_ms,validation_ms,total_ms\n",
        );
        for r in &self.rows {
            let t = &r.stage_times;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4}",
                r.image,
                r.score.precision,
                r.score.recall,
                r.score.f_measure,
                r.cc,
                t.edge_detection,
                t.preprocessing,
                t.grouping,
                t.estimation,
                t.validation,
                t.total
            );
        }
        s
    }
}

/// Image files with a `.txt` sidecar of the same stem, sorted by name.
pub fn dataset_entries(dir: &Path) -> Result<Vec<(PathBuf, PathBuf)>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        if !matches!(ext.as_deref(), Some("png" | "pgm" | "ppm" | "pnm")) {
            continue;
        }
        let gt = path.with_extension("txt");
        if gt.is_file() {
            out.push((path, gt));
        }
    }
    out.sort();
    Ok(out)
}

/// Detects and scores every image of `dir`. `jobs == 1` runs on the calling thread.
pub fn run_benchmark(dir: &Path, detector: &Detector, th_o: f64, jobs: usize) -> Result<BenchReport> {
    let entries = dataset_entries(dir)?;
    let one = |(img_path, gt_path): &(PathBuf, PathBuf)| -> Result<EvalRow> {
        let truth = parse_ground_truth(&std::fs::read_to_string(gt_path)?, gt_path)?;
        let img = load(img_path)?;
        let name = img_path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        Ok(evaluate_image(detector, &name, &img, &truth, th_o))
    };
    let rows: Vec<EvalRow> = if jobs <= 1 {
        entries.iter().map(one).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        pool.install(|| entries.par_iter().map(one).collect::<Result<_>>())?
    };
    Ok(BenchReport::from_rows(rows))
}
