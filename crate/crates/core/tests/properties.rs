use blockvision_core::assessment::{accuracy, count_perceived_errors, ErrorMode};
use blockvision_core::detect::{assemble_squares, filter_segments, DetectedBlock, FilterCriteria, SquareParams};
use blockvision_core::geometry::{homography_from_quads, order_corners, segment_intersection, Point2, Segment};
use blockvision_core::raster::{
    canny, gaussian_blur, ppht, rasterize_segment, sobel_magnitude, CannyParams, EdgeMap, GrayImage, HoughParams,
};
use blockvision_core::session::{EventKind, InstructionKind, Phase, Session, SessionConfig};
use blockvision_core::{BlockColor, ColorCounts, Quad};
use proptest::prelude::*;

fn gray_image(max: u8) -> impl Strategy<Value = GrayImage> {
    (8usize..40, 8usize..40).prop_flat_map(move |(w, h)| {
        // Blocky images so that real edges appear.
        prop::collection::vec(0..=max, 16).prop_map(move |cells| {
            GrayImage::from_fn(w, h, |x, y| cells[(y * 4 / h) * 4 + x * 4 / w]).unwrap()
        })
    })
}

fn point(lo: f64, hi: f64) -> impl Strategy<Value = Point2<f64>> {
    (lo..hi, lo..hi).prop_map(|(x, y)| Point2::new(x, y))
}

// Convex quad: a jittered square around a random center.
fn convex_quad() -> impl Strategy<Value = Quad> {
    (point(50.0, 350.0), 20.0f64..150.0, 0.0f64..6.3, prop::array::uniform4((-0.2f64..0.2, -0.2f64..0.2))).prop_map(
        |(c, r, rot, jit)| {
            let mut pts = [Point2::new(0.0, 0.0); 4];
            for (k, p) in pts.iter_mut().enumerate() {
                let a = rot + k as f64 * std::f64::consts::FRAC_PI_2;
                let (dx, dy) = (r * (1.0 + jit[k].0), r * (1.0 + jit[k].1));
                *p = Point2::new(c.x + dx * a.cos(), c.y + dy * a.sin());
            }
            Quad::from_ordered(pts)
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canny_edges_have_low_threshold_gradient(img in gray_image(255)) {
        let p = CannyParams::default();
        let edges = canny(&img, &p);
        let mag = sobel_magnitude(&gaussian_blur(&img, p.blur_sigma));
        for y in 0..img.height() {
            for x in 0..img.width() {
                if edges.get(x, y) {
                    prop_assert!(mag[y * img.width() + x] >= p.low_threshold - 1e-9);
                }
            }
        }
    }

    #[test]
    fn canny_ignores_constant_offset(img in gray_image(200), offset in 0u8..=55) {
        let shifted = GrayImage::from_fn(img.width(), img.height(), |x, y| img.get(x, y) + offset).unwrap();
        let p = CannyParams::default();
        prop_assert_eq!(canny(&img, &p), canny(&shifted, &p));
    }

    #[test]
    fn blur_preserves_mass(v in prop::collection::vec(0u8..=255, 4), sigma in 0.5f64..2.0) {
        // Interior-dominated: a 96x96 image with smooth 2x2 block content.
        let img = GrayImage::from_fn(96, 96, |x, y| v[(y / 48) * 2 + x / 48]).unwrap();
        let before: f64 = img.as_raw().iter().map(|&p| p as f64).sum();
        let after: f64 = gaussian_blur(&img, sigma).as_raw().iter().map(|&p| p as f64).sum();
        prop_assert!((before - after).abs() <= 0.005 * before.max(1.0));
    }

    #[test]
    fn ppht_segments_are_long_and_covered(
        segs in prop::collection::vec((point(2.0, 118.0), point(2.0, 118.0)), 1..5),
        seed in any::<u64>(),
    ) {
        let mut e = EdgeMap::empty(120, 120).unwrap();
        for (a, b) in &segs {
            for (x, y) in rasterize_segment(*a, *b) {
                e.mark(x, y);
            }
        }
        let p = HoughParams::default();
        let out = ppht(&e, &p, seed);
        prop_assert_eq!(&out, &ppht(&e, &p, seed));
        for s in &out {
            prop_assert!(s.length() >= p.min_line_length);
            let px = rasterize_segment(s.p1, s.p2);
            let on = px.iter().filter(|&&(x, y)| e.get(x as usize, y as usize)).count();
            prop_assert!(on as f64 >= 0.7 * px.len() as f64, "coverage {on}/{}", px.len());
        }
    }

    #[test]
    fn intersection_is_symmetric(a in point(0.0, 100.0), b in point(0.0, 100.0), c in point(0.0, 100.0), d in point(0.0, 100.0), ext in 0.0f64..20.0) {
        prop_assume!(a.distance(b) > 1e-6 && c.distance(d) > 1e-6);
        let s = Segment::new(a, b).unwrap();
        let t = Segment::new(c, d).unwrap();
        let x = segment_intersection(&s, &t, ext);
        let y = segment_intersection(&t, &s, ext);
        prop_assert_eq!(x.is_some(), y.is_some());
        if let (Some(x), Some(y)) = (x, y) {
            prop_assert!(x.point.distance(y.point) < 1e-6);
            prop_assert!((x.angle - y.angle).abs() < 1e-9);
            prop_assert!(x.angle > 0.0 && x.angle <= 90.0);
        }
    }

    #[test]
    fn homography_maps_corners(src in convex_quad(), dst in convex_quad()) {
        let h = homography_from_quads(&src, &dst).unwrap();
        for (s, d) in src.corners.iter().zip(dst.corners.iter()) {
            prop_assert!(h.apply(*s).distance(*d) < 1e-6);
        }
    }

    #[test]
    fn corner_order_ignores_cyclic_relabeling(q in convex_quad(), shift in 0usize..4, reverse in any::<bool>()) {
        let mut pts = q.corners;
        pts.rotate_left(shift);
        if reverse {
            pts.reverse();
        }
        prop_assert_eq!(order_corners(pts).unwrap(), order_corners(q.corners).unwrap());
    }

    #[test]
    fn accuracy_is_scale_consistent(moved in 1u32..200, fp in 0u32..200, actual in 0u32..20, k in 1u32..20) {
        let fp = fp.min(moved);
        let perceived = actual + fp;
        prop_assert_eq!(
            accuracy(moved, actual, perceived).unwrap(),
            accuracy(k * moved, k * actual, k * perceived).unwrap()
        );
        let a = accuracy(moved, actual, perceived).unwrap();
        prop_assert!((0.0..=100.0).contains(&a));
    }

    #[test]
    fn unique_never_exceeds_cumulative(
        frames in prop::collection::vec(prop::collection::vec((0usize..12, 0usize..3), 0..8), 0..8),
        expected in prop::collection::vec((0u32..3, 0u32..3, 0u32..3), 8),
    ) {
        let grid = |i: usize| Point2::new(30.0 + 60.0 * (i % 4) as f64, 30.0 + 60.0 * (i / 4) as f64);
        let frames: Vec<Vec<DetectedBlock>> = frames
            .iter()
            .map(|f| {
                f.iter()
                    .map(|&(cell, c)| {
                        let p = grid(cell);
                        DetectedBlock::new(Quad::axis_square(p.x - 15.0, p.y - 15.0, 30.0), BlockColor::ALL[c])
                    })
                    .collect()
            })
            .collect();
        let expected: Vec<ColorCounts> =
            expected.iter().take(frames.len()).map(|&(r, g, b)| ColorCounts::new(r, g, b)).collect();
        let u = count_perceived_errors(&frames, &expected, ErrorMode::UniquePerBlock).unwrap();
        let c = count_perceived_errors(&frames, &expected, ErrorMode::CumulativeLegacy).unwrap();
        prop_assert!(u <= c);
    }

    #[test]
    fn session_protocol_invariants(seed in any::<u64>(), gaps in prop::collection::vec(1u64..5000, 40)) {
        let mut s = Session::new(SessionConfig::with_seed(seed)).unwrap();
        let mut t = 0;
        let mut instructions = Vec::new();
        let mut i = 0;
        while s.phase() != Phase::Feedback {
            t += gaps[i % gaps.len()];
            i += 1;
            instructions.push(s.record_tap(t).unwrap().0);
        }
        s.finalize(0, t + 1).unwrap();
        let ev = s.events();
        prop_assert!(ev.windows(2).all(|w| w[0].timestamp < w[1].timestamp));
        let switches = instructions.iter().filter(|i| i.kind == InstructionKind::SwitchHands).count();
        prop_assert_eq!(switches, 1);
        for hand in [0u32, 1] {
            let starts: Vec<_> = ev.iter().filter(|e| matches!(e.kind, EventKind::ReadyTap | EventKind::HandSwitch)).collect();
            prop_assert_eq!(starts.len(), 2);
            let moves: Vec<_> = ev
                .iter()
                .filter(|e| e.kind == EventKind::MoveTap && (e.hand as u32) == hand)
                .collect();
            let cycles: std::collections::BTreeMap<u32, u32> =
                moves.iter().map(|e| (e.cycle_index, e.number_to_move)).collect();
            prop_assert_eq!(cycles.len(), 5);
            prop_assert_eq!(moves.len() as u32, cycles.values().sum::<u32>());
        }
        prop_assert_eq!(&Session::replay(&s.log()).unwrap(), &s);

        // Same seed, different timing: same prompts.
        let mut other = Session::new(SessionConfig::with_seed(seed)).unwrap();
        let again: Vec<_> = (0..instructions.len()).map(|k| other.record_tap(10 * k as u64 + 7).unwrap().0).collect();
        prop_assert_eq!(again, instructions);
    }

    #[test]
    fn assembled_quads_use_graph_intersections(
        squares in prop::collection::vec((point(40.0, 360.0), 22.0f64..55.0, 0.0f64..3.0), 1..5),
    ) {
        let mut segs = Vec::new();
        for (c, side, under) in &squares {
            let h = side / 2.0;
            let (x0, y0, x1, y1) = (c.x - h, c.y - h, c.x + h, c.y + h);
            segs.push(Segment::from_coords(x0 + under, y0, x1 - under, y0));
            segs.push(Segment::from_coords(x1, y0 + under, x1, y1 - under));
            segs.push(Segment::from_coords(x0 + under, y1, x1 - under, y1));
            segs.push(Segment::from_coords(x0, y0 + under, x0, y1 - under));
        }
        let g = filter_segments(&segs, &FilterCriteria::default());
        for i in 0..g.segments.len() {
            prop_assert!(!g.incidence[i].is_empty());
        }
        for q in assemble_squares(&g, &SquareParams::default()) {
            for c in q.corners {
                prop_assert!(g.intersections.iter().any(|x| x.point.distance(c) < 1e-9));
            }
        }
    }
}
