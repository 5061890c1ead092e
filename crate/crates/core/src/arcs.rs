//! Edge linking into arcs, short/straight arc pruning, and quadrant labels.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::edges::{EdgePoint, GradientClass};
use crate::projective::{det3, HomogeneousPoint};

/// Which quarter of an ellipse an arc would occupy, in image coordinates
/// (y down): I top-right, II top-left, III bottom-left, IV bottom-right.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Quadrant {
    I,
    II,
    III,
    IV,
}

impl Quadrant {
    pub const ALL: [Quadrant; 4] = [Quadrant::I, Quadrant::II, Quadrant::III, Quadrant::IV];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Quadrant sharing an axis extreme with this one.
    pub fn is_adjacent(self, other: Quadrant) -> bool {
        (self.index() + 2) % 4 != other.index() && self != other
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BBox {
    pub min_x: usize,
    pub min_y: usize,
    pub max_x: usize,
    pub max_y: usize,
}

/// Ordered chain of 8-connected edge points sharing one gradient class.
#[derive(Clone, Debug)]
pub struct ArcSegment {
    pub id: usize,
    pub class: GradientClass,
    pub quadrant: Option<Quadrant>,
    points: Vec<EdgePoint>,
    bbox: BBox,
}

impl ArcSegment {
    /// Builds an arc and puts it in canonical order (the endpoint with the
    /// smaller `(x, y)` first).
    pub fn new(id: usize, class: GradientClass, mut points: Vec<EdgePoint>) -> Self {
        assert!(!points.is_empty(), "arc needs at least one point");
        let (f, l) = (&points[0], &points[points.len() - 1]);
        if (l.x, l.y) < (f.x, f.y) {
            points.reverse();
        }
        let mut bbox = BBox { min_x: usize::MAX, min_y: usize::MAX, max_x: 0, max_y: 0 };
        for p in &points {
            bbox.min_x = bbox.min_x.min(p.x);
            bbox.min_y = bbox.min_y.min(p.y);
            bbox.max_x = bbox.max_x.max(p.x);
            bbox.max_y = bbox.max_y.max(p.y);
        }
        Self { id, class, quadrant: None, points, bbox }
    }

    pub fn points(&self) -> &[EdgePoint] {
        &self.points
    }

    /// Point count `t`.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bbox(&self) -> BBox {
        self.bbox
    }

    pub fn first(&self) -> &EdgePoint {
        &self.points[0]
    }

    pub fn last(&self) -> &EdgePoint {
        &self.points[self.points.len() - 1]
    }

    /// Chain midpoint at index `t / 2`.
    pub fn mid(&self) -> &EdgePoint {
        &self.points[self.points.len() / 2]
    }

    pub fn hpoint(p: &EdgePoint) -> HomogeneousPoint {
        HomogeneousPoint::finite(p.x as f64, p.y as f64)
    }

    /// `|det(e_1, e_mid, e_t)| / t`: twice the endpoint-midpoint triangle area per point.
    pub fn straightness(&self) -> f64 {
        let d = det3(&Self::hpoint(self.first()), &Self::hpoint(self.mid()), &Self::hpoint(self.last()));
        d.abs() / self.len() as f64
    }

    /// Box pixels strictly above the arc minus those strictly below (y down).
    pub fn delta(&self) -> i64 {
        let b = self.bbox;
        let cols = b.max_x - b.min_x + 1;
        let mut lo = vec![usize::MAX; cols];
        let mut hi = vec![0usize; cols];
        for p in &self.points {
            let c = p.x - b.min_x;
            lo[c] = lo[c].min(p.y);
            hi[c] = hi[c].max(p.y);
        }
        let mut delta = 0i64;
        for c in 0..cols {
            if lo[c] == usize::MAX {
                continue;
            }
            delta += (lo[c] - b.min_y) as i64 - (b.max_y - hi[c]) as i64;
        }
        delta
    }
}

const NONE: u32 = u32::MAX;
const ORTHO_COST: u32 = 2;
const DIAG_COST: u32 = 5;

const NEIGHBORS: [(i64, i64, u32); 8] = [
    (-1, 0, ORTHO_COST),
    (1, 0, ORTHO_COST),
    (0, -1, ORTHO_COST),
    (0, 1, ORTHO_COST),
    (-1, -1, DIAG_COST),
    (1, -1, DIAG_COST),
    (-1, 1, DIAG_COST),
    (1, 1, DIAG_COST),
];

struct Grid {
    width: usize,
    height: usize,
    /// Edge index at each pixel.
    cell: Vec<u32>,
}

impl Grid {
    fn neighbors(&self, idx: usize, edges: &[EdgePoint]) -> impl Iterator<Item = (usize, u32)> + '_ {
        let (x, y) = (edges[idx].x as i64, edges[idx].y as i64);
        NEIGHBORS.iter().filter_map(move |&(dx, dy, cost)| {
            let (nx, ny) = (x + dx, y + dy);
            if nx < 0 || ny < 0 || nx >= self.width as i64 || ny >= self.height as i64 {
                return None;
            }
            let c = self.cell[ny as usize * self.width + nx as usize];
            (c != NONE).then_some((c as usize, cost))
        })
    }
}

/// Links same-class 8-neighbors breadth-first into arcs.
///
/// Components that are not simple chains are peeled: the longest path is
/// emitted as an arc and the leftover pixels are linked again. Points with
/// an axis-aligned gradient and isolated single points produce no arc.
pub fn link_edges(edges: &[EdgePoint]) -> Vec<ArcSegment> {
    if edges.is_empty() {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..edges.len()).filter(|&i| edges[i].class().is_some()).collect();
    order.sort_by_key(|&i| (edges[i].y, edges[i].x));

    let width = edges.iter().map(|e| e.x).max().unwrap_or(0) + 1;
    let height = edges.iter().map(|e| e.y).max().unwrap_or(0) + 1;

    let mut arcs = Vec::new();
    for class in [GradientClass::Positive, GradientClass::Negative] {
        let mut grid = Grid { width, height, cell: vec![NONE; width * height] };
        for &i in &order {
            if edges[i].class() == Some(class) {
                grid.cell[edges[i].y * width + edges[i].x] = i as u32;
            }
        }
        let mut visited = vec![false; edges.len()];
        let mut scratch = Scratch::new(edges.len());
        for &seed in &order {
            if visited[seed] || edges[seed].class() != Some(class) {
                continue;
            }
            let comp = bfs_component(seed, &grid, edges, &mut visited, |_| true);
            peel_chains(comp, &grid, edges, class, &mut scratch, &mut arcs);
        }
    }
    arcs.sort_by_key(|a| (a.first().y, a.first().x, a.last().y, a.last().x));
    for (i, a) in arcs.iter_mut().enumerate() {
        a.id = i;
    }
    arcs
}

fn bfs_component(
    seed: usize,
    grid: &Grid,
    edges: &[EdgePoint],
    visited: &mut [bool],
    allow: impl Fn(usize) -> bool,
) -> Vec<usize> {
    let mut comp = vec![seed];
    visited[seed] = true;
    let mut queue = VecDeque::from([seed]);
    while let Some(j) = queue.pop_front() {
        for (n, _) in grid.neighbors(j, edges) {
            if !visited[n] && allow(n) {
                visited[n] = true;
                comp.push(n);
                queue.push_back(n);
            }
        }
    }
    comp
}

/// Weighted distances from `src` inside the component; diagonal steps cost
/// more than two orthogonal ones so staircase corners stay on the path.
fn dijkstra(
    src: usize,
    grid: &Grid,
    edges: &[EdgePoint],
    member: &[bool],
    dist: &mut [u32],
    prev: &mut [u32],
    comp: &[usize],
) {
    for &i in comp {
        dist[i] = u32::MAX;
        prev[i] = NONE;
    }
    dist[src] = 0;
    let mut heap = BinaryHeap::from([Reverse((0u32, src))]);
    while let Some(Reverse((d, j))) = heap.pop() {
        if d > dist[j] {
            continue;
        }
        for (n, cost) in grid.neighbors(j, edges) {
            if !member[n] {
                continue;
            }
            let nd = d + cost;
            if nd < dist[n] {
                dist[n] = nd;
                prev[n] = j as u32;
                heap.push(Reverse((nd, n)));
            }
        }
    }
}

fn farthest(comp: &[usize], dist: &[u32], edges: &[EdgePoint]) -> usize {
    *comp
        .iter()
        .max_by(|&&a, &&b| {
            dist[a]
                .cmp(&dist[b])
                .then_with(|| (edges[b].x, edges[b].y).cmp(&(edges[a].x, edges[a].y)))
        })
        .expect("component is non-empty")
}

/// Per-edge buffers shared by all components; entries are reset after each use.
struct Scratch {
    member: Vec<bool>,
    visited: Vec<bool>,
    dist: Vec<u32>,
    prev: Vec<u32>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self { member: vec![false; n], visited: vec![false; n], dist: vec![u32::MAX; n], prev: vec![NONE; n] }
    }
}

fn peel_chains(
    comp: Vec<usize>,
    grid: &Grid,
    edges: &[EdgePoint],
    class: GradientClass,
    scratch: &mut Scratch,
    arcs: &mut Vec<ArcSegment>,
) {
    let Scratch { member, visited, dist, prev } = scratch;
    let mut pending = vec![comp];

    while let Some(comp) = pending.pop() {
        if comp.len() < 2 {
            continue;
        }
        for &i in &comp {
            member[i] = true;
        }
        let seed = comp[0];
        dijkstra(seed, grid, edges, member, dist, prev, &comp);
        let a = farthest(&comp, dist, edges);
        dijkstra(a, grid, edges, member, dist, prev, &comp);
        let b = farthest(&comp, dist, edges);

        let mut path = vec![b];
        let mut cur = b;
        while prev[cur] != NONE {
            cur = prev[cur] as usize;
            path.push(cur);
        }
        for &i in &path {
            member[i] = false;
        }
        let points: Vec<EdgePoint> = path.iter().map(|&i| edges[i]).collect();
        arcs.push(ArcSegment::new(0, class, points));

        if path.len() < comp.len() {
            let leftover: Vec<usize> = comp.iter().copied().filter(|&i| member[i]).collect();
            for &s in &leftover {
                if !visited[s] {
                    let sub = bfs_component(s, grid, edges, visited, |n| member[n]);
                    pending.push(sub);
                }
            }
        }
        for &i in &comp {
            member[i] = false;
            visited[i] = false;
        }
    }
}

/// Keeps arcs with at least `th_length` points.
pub fn prune_short(arcs: Vec<ArcSegment>, th_length: usize) -> Vec<ArcSegment> {
    arcs.into_iter().filter(|a| a.len() >= th_length).collect()
}

/// Drops arcs whose `|det(e_1, e_mid, e_t)| / t` falls below `th_cnl`.
pub fn prune_lines(arcs: Vec<ArcSegment>, th_cnl: f64) -> Vec<ArcSegment> {
    arcs.into_iter().filter(|a| a.len() >= 2 && a.straightness() >= th_cnl).collect()
}

/// Splits each gradient class by the sign of `delta`; arcs with `delta == 0` are dropped.
pub fn assign_quadrants(arcs: Vec<ArcSegment>) -> Vec<ArcSegment> {
    arcs.into_iter()
        .filter_map(|mut a| {
            let d = a.delta();
            let q = match (a.class, d.signum()) {
                (_, 0) => return None,
                (GradientClass::Negative, 1) => Quadrant::III,
                (GradientClass::Negative, _) => Quadrant::I,
                (GradientClass::Positive, 1) => Quadrant::IV,
                (GradientClass::Positive, _) => Quadrant::II,
            };
            a.quadrant = Some(q);
            Some(a)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ep(x: usize, y: usize, tau: f64) -> EdgePoint {
        EdgePoint::new(x, y, tau)
    }

    /// Digital circle with the analytic radial gradient slope at each pixel.
    fn circle_edges(cx: f64, cy: f64, r: f64) -> Vec<EdgePoint> {
        let mut pts = std::collections::BTreeSet::new();
        let n = (16.0 * r) as usize;
        for k in 0..n {
            let t = k as f64 / n as f64 * std::f64::consts::TAU;
            pts.insert(((cy + r * t.sin()).round() as usize, (cx + r * t.cos()).round() as usize));
        }
        pts.into_iter()
            .map(|(y, x)| {
                let (dx, dy) = (x as f64 - cx, y as f64 - cy);
                let tau = if dx.abs() < 1e-12 { f64::INFINITY } else { dy / dx };
                ep(x, y, tau)
            })
            .collect()
    }

    #[test]
    fn empty_input() {
        assert!(link_edges(&[]).is_empty());
    }

    #[test]
    fn diagonal_line_is_one_arc() {
        let edges: Vec<_> = (0..20).map(|i| ep(5 + i, 30 - i, 1.0)).collect();
        let arcs = link_edges(&edges);
        assert_eq!(arcs.len(), 1);
        assert_eq!(arcs[0].len(), 20);
        assert_eq!((arcs[0].first().x, arcs[0].first().y), (5, 30));
    }

    #[test]
    fn staircase_keeps_corner_pixels() {
        let mut edges = Vec::new();
        for i in 0..10 {
            edges.push(ep(2 * i, i, 0.5));
            edges.push(ep(2 * i + 1, i, 0.5));
        }
        let arcs = link_edges(&edges);
        assert_eq!(arcs.len(), 1);
        assert_eq!(arcs[0].len(), 20);
        for w in arcs[0].points().windows(2) {
            assert!(w[0].x.abs_diff(w[1].x) <= 1 && w[0].y.abs_diff(w[1].y) <= 1);
        }
    }

    #[test]
    fn circle_splits_into_four_arcs() {
        let edges = circle_edges(60.0, 60.0, 40.0);
        let arcs = link_edges(&edges);
        assert!(arcs.len() >= 2);
        let long: Vec<_> = arcs.iter().filter(|a| a.len() >= 16).collect();
        assert_eq!(long.len(), 4);
        let labeled = assign_quadrants(long.into_iter().cloned().collect());
        let mut qs: Vec<_> = labeled.iter().map(|a| a.quadrant.unwrap()).collect();
        qs.sort();
        assert_eq!(qs, Quadrant::ALL.to_vec());
        // top-right arc is quadrant I
        let top_right = labeled
            .iter()
            .find(|a| a.first().x >= 60 && a.bbox().max_y <= 60)
            .unwrap();
        assert_eq!(top_right.quadrant, Some(Quadrant::I));
    }

    #[test]
    fn every_linked_point_is_in_one_arc() {
        let edges = circle_edges(50.0, 45.0, 30.0);
        let arcs = link_edges(&edges);
        let mut seen = std::collections::HashSet::new();
        for a in &arcs {
            for p in a.points() {
                assert!(seen.insert((p.x, p.y)), "duplicate point");
            }
            for w in a.points().windows(2) {
                assert!(w[0].x.abs_diff(w[1].x) <= 1 && w[0].y.abs_diff(w[1].y) <= 1);
            }
        }
    }

    #[test]
    fn short_pruning_boundary() {
        let make = |n: usize| ArcSegment::new(0, GradientClass::Positive, (0..n).map(|i| ep(i, i, 1.0)).collect());
        let kept = prune_short(vec![make(15), make(16), make(40)], 16);
        assert_eq!(kept.iter().map(|a| a.len()).collect::<Vec<_>>(), vec![16, 40]);
        assert!(prune_short(Vec::new(), 16).is_empty());
    }

    #[test]
    fn straight_arc_is_pruned_quarter_circle_kept() {
        let line = ArcSegment::new(0, GradientClass::Negative, (0..100).map(|i| ep(i, 100 - i, -1.0)).collect());
        assert_eq!(line.straightness(), 0.0);
        assert!(prune_lines(vec![line], 3.0).is_empty());

        let edges = circle_edges(150.0, 150.0, 100.0);
        let arcs = link_edges(&edges);
        let q = arcs.iter().max_by_key(|a| a.len()).unwrap().clone();
        // endpoints near (100, 0) and (0, 100), mid near (70.7, 70.7):
        // twice the triangle area is about 2 * 2071 = 4142
        let oracle = 2.0 * 0.5 * (100.0 * 100.0 - 2.0 * 100.0 * 70.71 + 0.0f64).abs();
        let det = q.straightness() * q.len() as f64;
        assert!((det - oracle).abs() / oracle < 0.1, "{det} vs {oracle}");
        assert!(q.straightness() > 3.0);
        assert_eq!(prune_lines(vec![q], 3.0).len(), 1);
    }

    #[test]
    fn symmetric_diagonal_has_zero_delta() {
        let line = ArcSegment::new(0, GradientClass::Negative, (0..30).map(|i| ep(i, 29 - i, -1.0)).collect());
        assert_eq!(line.delta(), 0);
        assert!(assign_quadrants(vec![line]).is_empty());
    }

    #[test]
    fn adjacency() {
        assert!(Quadrant::I.is_adjacent(Quadrant::II));
        assert!(Quadrant::I.is_adjacent(Quadrant::IV));
        assert!(!Quadrant::I.is_adjacent(Quadrant::III));
        assert!(!Quadrant::II.is_adjacent(Quadrant::IV));
    }
}
