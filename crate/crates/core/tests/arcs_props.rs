mod common;

use std::collections::HashMap;
use std::f64::consts::PI;

use cnellipse::arcs::{assign_quadrants, link_edges, prune_lines, prune_short, ArcSegment, Quadrant};
use cnellipse::edges::{auto_thresholds, canny_from_gradients, detect_edges, sobel};
use cnellipse::fitting::EllipseParams;
use cnellipse::image::gaussian_smooth;
use cnellipse::synth::{random_scene, render, SceneGenConfig, SceneSpec};
use cnellipse::GrayImage;
use common::rng;
use proptest::prelude::*;
use rand::Rng;

fn ellipse_image(p: EllipseParams, w: usize, h: usize) -> GrayImage {
    render(&SceneSpec::blank(w, h).with_ellipse(p, 1.0)).unwrap()
}

fn random_ellipse(r: &mut impl Rng, cx: f64, cy: f64) -> EllipseParams {
    let a = r.random_range(30.0..100.0);
    let b = a * r.random_range(0.25..1.0);
    EllipseParams::new(cx, cy, a, b, r.random_range(0.0..PI))
}

#[test]
fn edges_are_deterministic_and_row_major() {
    let img = render(&random_scene(&SceneGenConfig::default(), 5)).unwrap();
    let e1 = detect_edges(&img, 1.0, None, None);
    let e2 = detect_edges(&img, 1.0, None, None);
    assert!(!e1.is_empty());
    assert_eq!(e1, e2);
    assert!(e1.windows(2).all(|w| (w[0].y, w[0].x) < (w[1].y, w[1].x)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn raising_low_threshold_never_adds_edges(seed in 0u64..1000, lo in 0.05..0.9f64, bump in 0.0..0.5f64) {
        let img = render(&random_scene(&SceneGenConfig { width: 240, height: 200, semi_major: (20.0, 60.0), ..Default::default() }, seed).with_noise(0.02, seed)).unwrap();
        let grad = sobel(&gaussian_smooth(&img, 1.0));
        let (_, high) = auto_thresholds(&grad).unwrap();
        let low_a = lo * high;
        let low_b = (low_a + bump * high).min(high);
        let a = canny_from_gradients(&grad, low_a, high);
        let b = canny_from_gradients(&grad, low_b, high);
        let set: std::collections::HashSet<_> = a.iter().map(|e| (e.x, e.y)).collect();
        prop_assert!(b.len() <= a.len());
        prop_assert!(b.iter().all(|e| set.contains(&(e.x, e.y))));
    }
}

#[test]
fn rotating_the_image_rotates_the_edges() {
    let mut r = rng(7);
    for _ in 0..10 {
        let p = random_ellipse(&mut r, 160.0, 150.0);
        let img = ellipse_image(p, 320, 300);
        let h = img.height();
        let base = detect_edges(&img, 1.0, None, None);
        let rot: std::collections::HashSet<_> =
            detect_edges(&img.rotated_cw(), 1.0, None, None).iter().map(|e| (e.x, e.y)).collect();
        let hits = base.iter().filter(|e| rot.contains(&(h - 1 - e.y, e.x))).count();
        let agreement = hits as f64 / base.len().max(rot.len()) as f64;
        assert!(agreement >= 0.95, "agreement {agreement}");
    }
}

#[test]
fn linking_assigns_each_point_at_most_once_and_leaves_no_linkable_remainder() {
    for seed in 0..5 {
        let img = render(&random_scene(&SceneGenConfig::default(), seed).with_noise(0.01, seed)).unwrap();
        let edges = detect_edges(&img, 1.0, None, None);
        let arcs = link_edges(&edges);
        let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
        for a in &arcs {
            for p in a.points() {
                *seen.entry((p.x, p.y)).or_default() += 1;
            }
        }
        assert!(seen.values().all(|&c| c == 1), "a point sits in two arcs");

        let classes: HashMap<(usize, usize), _> = edges.iter().map(|e| ((e.x, e.y), e.class())).collect();
        for e in &edges {
            let Some(class) = e.class() else {
                assert!(!seen.contains_key(&(e.x, e.y)), "unclassified point was linked");
                continue;
            };
            if !seen.contains_key(&(e.x, e.y)) {
                // left over after peeling: every same-class neighbor is already linked
                let all_linked = (-1i64..=1).all(|dy| {
                    (-1i64..=1).all(|dx| {
                        let n = ((e.x as i64 + dx) as usize, (e.y as i64 + dy) as usize);
                        (dx, dy) == (0, 0) || classes.get(&n) != Some(&Some(class)) || seen.contains_key(&n)
                    })
                });
                assert!(all_linked, "point ({}, {}) could have been linked", e.x, e.y);
            }
        }
    }
}

/// Distance from `(x, y)` to a segment.
fn segment_distance(x: f64, y: f64, s: &cnellipse::synth::LineSegment) -> f64 {
    let (dx, dy) = (s.x1 - s.x0, s.y1 - s.y0);
    let t = (((x - s.x0) * dx + (y - s.y0) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
    (x - s.x0 - t * dx).hypot(y - s.y0 - t * dy)
}

/// Arcs lying along one segment must go. Elliptical arcs must stay, except
/// fragments cut off where a segment crosses the ellipse: those can be
/// genuinely straight, so they are left out of the count.
#[test]
fn line_pruning_keeps_ellipse_arcs_and_drops_line_arcs() {
    let cfg = SceneGenConfig { min_ratio: 0.25, ..Default::default() };
    let (mut line_arcs, mut line_kept, mut ell_arcs, mut ell_dropped) = (0, 0, 0, 0);
    for seed in 0..40 {
        let spec = random_scene(&cfg, 300 + seed);
        let img = render(&spec).unwrap();
        let arcs = prune_short(link_edges(&detect_edges(&img, 1.0, None, None)), 16);
        for arc in arcs {
            let all_near = |f: &dyn Fn(f64, f64) -> f64| arc.points().iter().all(|p| f(p.x as f64, p.y as f64) <= 2.5);
            let on_line = spec.lines.iter().any(|s| all_near(&|x, y| segment_distance(x, y, s)));
            let on_ellipse = spec.ellipses.iter().any(|e| all_near(&|x, y| e.params.approx_distance(x, y)));
            let cut = [arc.first(), arc.last()]
                .iter()
                .any(|p| spec.lines.iter().any(|s| segment_distance(p.x as f64, p.y as f64, s) <= 4.0));
            let kept = !prune_lines(vec![arc], 3.0).is_empty();
            if on_line && !on_ellipse {
                line_arcs += 1;
                line_kept += kept as usize;
            } else if on_ellipse && !on_line && !cut {
                ell_arcs += 1;
                ell_dropped += (!kept) as usize;
            }
        }
    }
    let dropped = ell_dropped as f64 / ell_arcs as f64;
    assert!(line_arcs > 100 && ell_arcs > 500, "{line_arcs} line arcs, {ell_arcs} elliptical arcs");
    assert_eq!(line_kept, 0, "{line_kept} of {line_arcs} line arcs kept");
    assert!(dropped < 0.05, "dropped {ell_dropped} of {ell_arcs} elliptical arcs");
}

fn labeled(img: &GrayImage) -> Vec<ArcSegment> {
    assign_quadrants(link_edges(&detect_edges(img, 1.0, None, None)))
}

#[test]
fn quadrant_labels_cover_the_ellipse_and_follow_translation() {
    let mut r = rng(8);
    for _ in 0..200 {
        let p = random_ellipse(&mut r, 200.0, 200.0);
        let (dx, dy) = (r.random_range(-60..=60), r.random_range(-60..=60));
        let base = labeled(&ellipse_image(p, 400, 400));
        let moved = labeled(&ellipse_image(
            EllipseParams { cx: p.cx + dx as f64, cy: p.cy + dy as f64, ..p },
            400,
            400,
        ));

        let has = |q: Quadrant| base.iter().any(|a| a.quadrant == Some(q));
        assert!([Quadrant::I, Quadrant::II, Quadrant::III, Quadrant::IV].into_iter().all(has), "{p:?}");

        let key = |a: &ArcSegment, ox: i64, oy: i64| {
            (a.first().x as i64 - ox, a.first().y as i64 - oy, a.len(), a.quadrant)
        };
        let mut k1: Vec<_> = base.iter().map(|a| key(a, 0, 0)).collect();
        let mut k2: Vec<_> = moved.iter().map(|a| key(a, dx, dy)).collect();
        k1.sort();
        k2.sort();
        assert_eq!(k1, k2, "{p:?} shifted by ({dx}, {dy})");
    }
}
