//! Candidate scoring, rejection, and duplicate clustering.

use crate::fitting::{orientation_distance, EllipseParams, Point};
use crate::selection::ArcTriple;

#[derive(Clone, Debug)]
pub struct CandidateEllipse<'a> {
    pub params: EllipseParams,
    pub source: ArcTriple<'a>,
    pub fit_ratio: f64,
    pub length_ratio: f64,
}

impl<'a> CandidateEllipse<'a> {
    /// Scores `params` against the points of `source`.
    pub fn new(params: EllipseParams, source: ArcTriple<'a>, tol: f64) -> Self {
        Self {
            fit_ratio: fit_support(&params, &source, tol),
            length_ratio: length_support(&params, &source),
            params,
            source,
        }
    }

    /// `fit_ratio · (t1 + t2 + t3)`.
    pub fn vote(&self) -> f64 {
        self.fit_ratio * self.source.total_length() as f64
    }
}

/// Fraction of `points` within `tol` of the ellipse (first-order distance).
pub fn fit_support_points(params: &EllipseParams, points: &[Point], tol: f64) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let hits = points.iter().filter(|p| params.approx_distance(p.0, p.1) <= tol).count();
    hits as f64 / points.len() as f64
}

pub fn fit_support(params: &EllipseParams, triple: &ArcTriple<'_>, tol: f64) -> f64 {
    let mut total = 0usize;
    let mut hits = 0usize;
    for arc in triple.arcs {
        for p in arc.points() {
            total += 1;
            if params.approx_distance(p.x as f64, p.y as f64) <= tol {
                hits += 1;
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

/// `(t1 + t2 + t3) / (3 (a + b))` for the given total arc length.
pub fn length_ratio(params: &EllipseParams, total_length: f64) -> f64 {
    total_length / (3.0 * (params.a + params.b))
}

pub fn length_support(params: &EllipseParams, triple: &ArcTriple<'_>) -> f64 {
    length_ratio(params, triple.total_length() as f64)
}

pub fn validate<'a>(cands: Vec<CandidateEllipse<'a>>, th_fit: f64, th_len: f64) -> Vec<CandidateEllipse<'a>> {
    cands
        .into_iter()
        .filter(|c| c.fit_ratio >= th_fit && c.length_ratio >= th_len)
        .collect()
}

/// Two parameter sets describe the same ellipse.
pub fn similar(p: &EllipseParams, q: &EllipseParams) -> bool {
    let center_tol = 0.1 * p.b.min(q.b) + 2.0;
    if (p.cx - q.cx).hypot(p.cy - q.cy) > center_tol {
        return false;
    }
    let rel = |x: f64, y: f64| (x - y).abs() / x.max(y);
    if rel(p.a, q.a) > 0.1 || rel(p.b, q.b) > 0.1 {
        return false;
    }
    let round = p.b / p.a > 0.9 && q.b / q.a > 0.9;
    round || orientation_distance(p.theta, q.theta) <= 10f64.to_radians()
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Keeps one representative, the highest vote, per connected group of similar candidates.
pub fn cluster_duplicates<'a>(cands: Vec<CandidateEllipse<'a>>) -> Vec<CandidateEllipse<'a>> {
    let n = cands.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            if similar(&cands[i].params, &cands[j].params) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut best: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        match best[r] {
            Some(b) if cands[b].vote() >= cands[i].vote() => {}
            _ => best[r] = Some(i),
        }
    }
    let keep: Vec<bool> = {
        let mut k = vec![false; n];
        for b in best.into_iter().flatten() {
            k[b] = true;
        }
        k
    };
    cands.into_iter().zip(keep).filter(|(_, k)| *k).map(|(c, _)| c).collect()
}
