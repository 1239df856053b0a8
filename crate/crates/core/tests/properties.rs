use bandeau_core::{
    align_endpoints, area_between, brute_force, brute_force_rearrangement, dissimilarity,
    rotate_to_horizontal, shoelace_area, solve_exact_k, Cost, FunctionCurve, MatchConfig, Mode,
    Point2, Polyline, RefitInstance, SimplePolygon,
};
use proptest::prelude::*;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

fn graph(min_len: usize, max_len: usize) -> impl Strategy<Value = Vec<Point2>> {
    prop::collection::vec((0.2f64..2.0, -3.0f64..3.0), min_len..=max_len).prop_map(|steps| {
        let mut x = 0.0;
        steps
            .into_iter()
            .map(|(dx, y)| {
                let p = Point2::new(x, y);
                x += dx;
                p
            })
            .collect()
    })
}

/// Two graphs over the same x range that share both end points.
fn graph_pair() -> impl Strategy<Value = (Vec<Point2>, Vec<Point2>)> {
    (graph(2, 9), graph(2, 9), -2.0f64..2.0, -2.0f64..2.0).prop_map(|(mut f, mut g, y0, y1)| {
        let (xf, xg) = (f.last().unwrap().x, g.last().unwrap().x);
        for p in &mut g {
            p.x *= xf / xg;
        }
        let (nf, ng) = (f.len() - 1, g.len() - 1);
        f[0].y = y0;
        g[0].y = y0;
        f[nf].y = y1;
        g[ng].y = y1;
        g[ng].x = xf;
        (f, g)
    })
}

/// Exact integral of |f - g| for two piecewise-linear graphs on one range.
fn trapezoid_area(f: &[Point2], g: &[Point2]) -> f64 {
    let eval = |c: &[Point2], x: f64| {
        let i = c.partition_point(|p| p.x <= x).clamp(1, c.len() - 1);
        let (a, b) = (c[i - 1], c[i]);
        a.y + (b.y - a.y) * (x - a.x) / (b.x - a.x)
    };
    let mut xs: Vec<f64> = f.iter().chain(g).map(|p| p.x).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs.windows(2)
        .map(|w| {
            let (d0, d1) = (eval(f, w[0]) - eval(g, w[0]), eval(f, w[1]) - eval(g, w[1]));
            let h = w[1] - w[0];
            if d0 * d1 >= 0.0 {
                0.5 * h * (d0.abs() + d1.abs())
            } else {
                0.5 * h * (d0 * d0 + d1 * d1) / (d0.abs() + d1.abs())
            }
        })
        .sum()
}

/// Star-shaped polygon: sorted angles, positive radii.
fn star_polygon() -> impl Strategy<Value = Vec<Point2>> {
    prop::collection::vec((0.0f64..1.0, 0.5f64..3.0), 3..12).prop_map(|mut v| {
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = v.len() as f64;
        v.iter()
            .enumerate()
            .map(|(i, &(t, r))| {
                let a = (i as f64 + 0.8 * t) / n * std::f64::consts::TAU;
                Point2::new(r * a.cos(), r * a.sin())
            })
            .collect()
    })
}

fn rigid(angle: f64, shift: Point2) -> impl Fn(Point2) -> Point2 {
    let (c, s) = (angle.cos(), angle.sin());
    move |p| Point2::new(c * p.x - s * p.y, s * p.x + c * p.y) + shift
}

fn poly(pts: Vec<Point2>) -> Polyline {
    Polyline::new(pts).unwrap()
}

fn pairwise(p: &[Point2]) -> Vec<f64> {
    p.iter()
        .flat_map(|a| p.iter().map(move |b| a.dist(*b)))
        .collect()
}

fn curve(pts: Vec<Point2>) -> FunctionCurve {
    FunctionCurve::new(pts).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn shoelace_ignores_rigid_motion(
        pts in star_polygon(),
        angle in -3.2f64..3.2,
        dx in -50.0f64..50.0,
        dy in -50.0f64..50.0,
        shift in 0usize..12,
    ) {
        let a = shoelace_area(&SimplePolygon::new(pts.clone()).unwrap());
        let t = rigid(angle, Point2::new(dx, dy));
        let mut moved: Vec<Point2> = pts.iter().map(|&p| t(p)).collect();
        let s = shift % moved.len();
        moved.rotate_left(s);
        let b = shoelace_area(&SimplePolygon::new(moved.clone()).unwrap());
        prop_assert!(close(a, b, 1e-9), "{a} vs {b}");
        moved.reverse();
        let c = shoelace_area(&SimplePolygon::new(moved).unwrap());
        prop_assert!(close(a, c, 1e-9));
    }

    #[test]
    fn area_between_is_symmetric_and_matches_trapezoids((f, g) in graph_pair()) {
        let ab = area_between(&poly(f.clone()), &poly(g.clone())).unwrap();
        let ba = area_between(&poly(g.clone()), &poly(f.clone())).unwrap();
        prop_assert!(close(ab, ba, 1e-9), "{ab} vs {ba}");
        let oracle = trapezoid_area(&f, &g);
        prop_assert!(close(ab, oracle, 1e-9), "{ab} vs {oracle}");
    }

    #[test]
    fn area_between_ignores_rigid_motion(
        (f, g) in graph_pair(),
        angle in -3.2f64..3.2,
        dx in -20.0f64..20.0,
    ) {
        let t = rigid(angle, Point2::new(dx, -dx));
        let a = area_between(&poly(f.clone()), &poly(g.clone())).unwrap();
        let b = area_between(
            &poly(f.iter().map(|&p| t(p)).collect()),
            &poly(g.iter().map(|&p| t(p)).collect()),
        )
        .unwrap();
        prop_assert!(close(a, b, 1e-9), "{a} vs {b}");
    }

    #[test]
    fn alignment_scales_all_distances(
        f in graph(2, 10),
        l in (-10.0f64..10.0, -10.0f64..10.0),
        d in (0.5f64..20.0, -3.2f64..3.2),
    ) {
        let f = poly(f);
        let (tl, tr) = (Point2::new(l.0, l.1), Point2::new(l.0 + d.0 * d.1.cos(), l.1 + d.0 * d.1.sin()));
        let mapped = align_endpoints(&f, tl, tr).unwrap();
        prop_assert_eq!(mapped.first(), tl);
        prop_assert_eq!(mapped.last(), tr);
        let s = tl.dist(tr) / f.first().dist(f.last());
        for (a, b) in pairwise(f.points()).into_iter().zip(pairwise(mapped.points())) {
            prop_assert!(close(a * s, b, 1e-9), "{} vs {b}", a * s);
        }
    }

    #[test]
    fn rotation_to_horizontal_is_rigid(g in graph(2, 10), angle in -1.5f64..1.5) {
        let t = rigid(angle, Point2::new(1.0, 2.0));
        let g = poly(g.into_iter().map(t).collect());
        let r = rotate_to_horizontal(&g).unwrap();
        prop_assert_eq!(r.first(), g.first());
        prop_assert_eq!(r.last().y, g.first().y);
        for (a, b) in pairwise(g.points()).into_iter().zip(pairwise(r.points())) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a), "{a} vs {b}");
        }
    }

    #[test]
    fn dissimilarity_ignores_rigid_motion(
        f in graph(2, 8),
        g in graph(2, 8),
        angle in -3.2f64..3.2,
        angle2 in -3.2f64..3.2,
        scale in 0.2f64..5.0,
        alpha in prop::sample::select(vec![0.3, 1.0]),
    ) {
        let cfg = MatchConfig::new(alpha).unwrap();
        let base = dissimilarity(&poly(f.clone()), &poly(g.clone()), &cfg).unwrap();
        let tg = rigid(angle, Point2::new(3.0, -1.0));
        let tf = rigid(angle2, Point2::new(-7.0, 2.5));
        let moved_g = poly(g.iter().map(|&p| tg(p)).collect());
        let moved_f: Vec<Point2> = f.iter().map(|&p| tf(p)).collect();
        let moved = dissimilarity(&poly(moved_f.clone()), &moved_g, &cfg).unwrap();
        prop_assert_eq!(base.is_finite(), moved.is_finite());
        if base.is_finite() {
            prop_assert!(close(base.value(), moved.value(), 1e-9), "{base} vs {moved}");
        }
        // the piece is scaled onto the span, so its own size only matters to the gate
        let scaled = poly(moved_f.iter().map(|&p| p * scale).collect());
        let s = dissimilarity(&scaled, &moved_g, &cfg).unwrap();
        if base.is_finite() && s.is_finite() {
            prop_assert!(close(base.value(), s.value(), 1e-9), "{base} vs {s}");
        }
    }

    #[test]
    fn similar_curves_cost_nothing(f in graph(2, 10), angle in -3.2f64..3.2, scale in 0.8f64..1.25) {
        let cfg = MatchConfig::new(0.3).unwrap();
        let t = rigid(angle, Point2::new(5.0, 5.0));
        let g = poly(f.iter().map(|&p| t(p * scale)).collect());
        let c = dissimilarity(&poly(f.clone()), &g, &cfg).unwrap();
        prop_assert!(c.value() <= 1e-9 * (1.0 + trapezoid_area(&f, &f)), "{c}");
        prop_assert_eq!(dissimilarity(&poly(f.clone()), &poly(f), &cfg).unwrap(), Cost::ZERO);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn table_matches_brute_force(
        f in graph(2, 8),
        g in graph(2, 8),
        k in 0usize..=3,
        delta in prop::sample::select(vec![0.0, 0.5, 3.0]),
        alpha in prop::sample::select(vec![0.3, 1.0]),
    ) {
        let k = k.min(f.len() - 2);
        let inst = RefitInstance::new(curve(f), curve(g), k, delta, MatchConfig::new(alpha).unwrap(), Mode::NoRearrangement).unwrap();
        let dp = solve_exact_k(&inst).unwrap().objective();
        let bf = brute_force(&inst).unwrap().objective();
        prop_assert_eq!(dp.is_finite(), bf.is_finite());
        if dp.is_finite() {
            prop_assert!(close(dp.value(), bf.value(), 1e-9), "{dp} vs {bf}");
        }
        let again = solve_exact_k(&inst).unwrap();
        prop_assert_eq!(again, solve_exact_k(&inst).unwrap());
    }

    #[test]
    fn rearranging_never_costs_more(
        f in graph(2, 6),
        g in graph(2, 6),
        k in 0usize..=2,
        delta in prop::sample::select(vec![0.0, 0.5]),
    ) {
        let k = k.min(f.len() - 2);
        let cfg = MatchConfig::new(1.0).unwrap();
        let ordered = RefitInstance::new(curve(f.clone()), curve(g.clone()), k, delta, cfg, Mode::NoRearrangement).unwrap();
        let free = RefitInstance::new(curve(f), curve(g), k, delta, cfg, Mode::Rearrangement).unwrap();
        let a = brute_force(&ordered).unwrap().objective();
        let b = brute_force_rearrangement(&free).unwrap().objective();
        prop_assert!(b <= a, "{b} > {a}");
    }
}
