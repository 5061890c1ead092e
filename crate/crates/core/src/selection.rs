//! Three-arc combination picking with coordinate and CNC constraints.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::arcs::{ArcSegment, Quadrant};
use crate::error::{Error, Result};
use crate::projective::{cnc_vertices, cnc_with_vertices, ChordGuard, HomogeneousPoint, SixPoints};

/// The four valid set patterns `(middle; second, third)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ComboKind {
    /// `(II; I, III)`
    K1,
    /// `(III; II, IV)`
    K2,
    /// `(IV; III, I)`
    K3,
    /// `(I; IV, II)`
    K4,
}

impl ComboKind {
    pub const ALL: [ComboKind; 4] = [ComboKind::K1, ComboKind::K2, ComboKind::K3, ComboKind::K4];

    /// Quadrant sets of `arc1`, `arc2`, `arc3`.
    pub fn sets(self) -> [Quadrant; 3] {
        use Quadrant::*;
        match self {
            ComboKind::K1 => [II, I, III],
            ComboKind::K2 => [III, II, IV],
            ComboKind::K3 => [IV, III, I],
            ComboKind::K4 => [I, IV, II],
        }
    }

    /// The kind obtained by reflecting the scene left-right.
    pub fn mirrored(self) -> Self {
        match self {
            ComboKind::K1 => ComboKind::K4,
            ComboKind::K2 => ComboKind::K3,
            ComboKind::K3 => ComboKind::K2,
            ComboKind::K4 => ComboKind::K1,
        }
    }
}

/// Which partner of the middle arc a coordinate check refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairRole {
    /// `arc2`, also CNC-tested.
    Second,
    /// `arc3`, coordinate-tested only.
    Third,
}

#[derive(Clone, Copy, Debug)]
pub struct ArcTriple<'a> {
    pub arcs: [&'a ArcSegment; 3],
    pub kind: ComboKind,
}

impl ArcTriple<'_> {
    pub fn total_length(&self) -> usize {
        self.arcs.iter().map(|a| a.len()).sum()
    }

    pub fn ids(&self) -> [usize; 3] {
        [self.arcs[0].id, self.arcs[1].id, self.arcs[2].id]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    /// Maximum `|CNC - 1|` for the `(arc1, arc2)` pair. Infinity disables the test.
    pub th_cnc: f64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self { th_cnc: 0.2 }
    }
}

/// Labeled arcs grouped by quadrant. Unlabeled arcs are ignored.
#[derive(Clone, Debug, Default)]
pub struct QuadrantSets<'a> {
    sets: [Vec<&'a ArcSegment>; 4],
}

impl<'a> QuadrantSets<'a> {
    pub fn new(arcs: &'a [ArcSegment]) -> Self {
        let mut sets: [Vec<&ArcSegment>; 4] = Default::default();
        for a in arcs {
            if let Some(q) = a.quadrant {
                sets[q.index()].push(a);
            }
        }
        Self { sets }
    }

    pub fn get(&self, q: Quadrant) -> &[&'a ArcSegment] {
        &self.sets[q.index()]
    }

    pub fn total(&self) -> usize {
        self.sets.iter().map(Vec::len).sum()
    }
}

fn hp(a: &ArcSegment, which: usize) -> HomogeneousPoint {
    ArcSegment::hpoint(match which {
        0 => a.first(),
        1 => a.mid(),
        _ => a.last(),
    })
}

/// `|CNC - 1|` of the six points taken from two arcs.
///
/// `arc1` supplies `Q1(1), Q1(2), Q2(1)` (endpoint, mid, endpoint) and `arc2` supplies
/// `Q2(2), Q3(1), Q3(2)` (endpoint, mid, endpoint). Of the four endpoint assignments, the
/// one with finite triangle vertices closest to the points is used.
pub fn arc_pair_cnc(arc1: &ArcSegment, arc2: &ArcSegment) -> Result<f64> {
    let guard = ChordGuard::default();
    let mut best: Option<(f64, SixPoints, [HomogeneousPoint; 3])> = None;
    for (s, u) in [(0, 0), (0, 2), (2, 0), (2, 2)] {
        let six: SixPoints = [
            [hp(arc1, s), hp(arc1, 1)],
            [hp(arc1, 2 - s), hp(arc2, u)],
            [hp(arc2, 1), hp(arc2, 2 - u)],
        ];
        let Ok(verts) = cnc_vertices(&six, &guard) else {
            continue;
        };
        let (cx, cy) = centroid(&six);
        let spread = verts
            .iter()
            .map(|v| (v.x / v.w - cx).hypot(v.y / v.w - cy))
            .fold(0.0, f64::max);
        if best.as_ref().is_none_or(|b| spread < b.0) {
            best = Some((spread, six, verts));
        }
    }
    let (_, six, verts) = best.ok_or(Error::ParallelChords)?;
    Ok((cnc_with_vertices(&six, &verts)? - 1.0).abs())
}

fn centroid(six: &SixPoints) -> (f64, f64) {
    let (sx, sy) = six
        .iter()
        .flatten()
        .fold((0.0, 0.0), |acc, q| (acc.0 + q.x / q.w, acc.1 + q.y / q.w));
    (sx / 6.0, sy / 6.0)
}

/// The coordinate inequality for `arc_a` (middle) against its partner `arc_b`.
pub fn coordinate_check(arc_a: &ArcSegment, arc_b: &ArcSegment, kind: ComboKind, role: PairRole) -> bool {
    let (a1, at) = (arc_a.first(), arc_a.last());
    let (b1, bt) = (arc_b.first(), arc_b.last());
    match (kind, role) {
        (ComboKind::K1, PairRole::Second) => at.x < b1.x,
        (ComboKind::K1, PairRole::Third) => a1.y < b1.y,
        (ComboKind::K2, PairRole::Third) => at.x < b1.x,
        (ComboKind::K2, PairRole::Second) => a1.y > b1.y,
        (ComboKind::K3, PairRole::Second) => a1.x > bt.x,
        (ComboKind::K3, PairRole::Third) => at.y > bt.y,
        (ComboKind::K4, PairRole::Third) => a1.x > bt.x,
        (ComboKind::K4, PairRole::Second) => at.y < bt.y,
    }
}

/// Both coordinate inequalities of a combination.
pub fn triple_coordinates_ok(arc1: &ArcSegment, arc2: &ArcSegment, arc3: &ArcSegment, kind: ComboKind) -> bool {
    coordinate_check(arc1, arc2, kind, PairRole::Second) && coordinate_check(arc1, arc3, kind, PairRole::Third)
}

fn cnc_ok(arc1: &ArcSegment, arc2: &ArcSegment, th_cnc: f64) -> bool {
    if th_cnc == f64::INFINITY {
        return true;
    }
    match arc_pair_cnc(arc1, arc2) {
        Ok(d) => d <= th_cnc,
        Err(_) => false,
    }
}

/// Enumerates every valid three-arc combination.
pub fn pick_triples<'a>(sets: &QuadrantSets<'a>, cfg: &SelectionConfig) -> Vec<ArcTriple<'a>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for kind in ComboKind::ALL {
        let [qm, q2, q3] = kind.sets();
        for &arc1 in sets.get(qm) {
            let thirds: Vec<&ArcSegment> = sets
                .get(q3)
                .iter()
                .copied()
                .filter(|&a3| coordinate_check(arc1, a3, kind, PairRole::Third))
                .collect();
            if thirds.is_empty() {
                continue;
            }
            for &arc2 in sets.get(q2) {
                if !coordinate_check(arc1, arc2, kind, PairRole::Second) || !cnc_ok(arc1, arc2, cfg.th_cnc) {
                    continue;
                }
                for &arc3 in &thirds {
                    let mut key = [arc1.id, arc2.id, arc3.id];
                    key.sort_unstable();
                    if seen.insert(key) {
                        out.push(ArcTriple { arcs: [arc1, arc2, arc3], kind });
                    }
                }
            }
        }
    }
    out
}

/// Number of triples [`pick_triples`] emits.
pub fn count_candidates(sets: &QuadrantSets<'_>, cfg: &SelectionConfig) -> usize {
    pick_triples(sets, cfg).len()
}
