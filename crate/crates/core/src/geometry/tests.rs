use super::*;
use proptest::prelude::*;

fn l_shape() -> DomainSpec {
    DomainSpec::new(Shape::LShape { lo: vec![0.0, 0.0], hi: vec![2.0, 2.0], notch: vec![1.0, 1.0] })
        .unwrap()
}

fn tangent_pair() -> DomainSpec {
    DomainSpec::new(Shape::BallUnion {
        centers: vec![vec![-1.0, 0.0], vec![1.0, 0.0]],
        radii: vec![1.0, 1.0],
    })
    .unwrap()
}

fn wavy() -> DomainSpec {
    DomainSpec::new(Shape::Graph(GraphDomain {
        base_lo: vec![-1.0],
        base_hi: vec![1.0],
        bottom: -1.0,
        height: 0.0,
        amplitude: 0.2,
        frequency: 3.0,
    }))
    .unwrap()
}

fn seg_dist(p: &[f64], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (vx, vy) = (b[0] - a[0], b[1] - a[1]);
    let t = (((p[0] - a[0]) * vx + (p[1] - a[1]) * vy) / (vx * vx + vy * vy)).clamp(0.0, 1.0);
    ((p[0] - a[0] - t * vx).powi(2) + (p[1] - a[1] - t * vy).powi(2)).sqrt()
}

/// Exact distance to the L polygon boundary as a minimum over its six edges.
fn l_polygon_distance(p: &[f64]) -> f64 {
    let v = [[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]];
    (0..6)
        .map(|i| seg_dist(p, v[i], v[(i + 1) % 6]))
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn unit_ball_centre_and_boundary() {
    let b = DomainSpec::unit_ball(2);
    assert_eq!(b.rho(&[0.0, 0.0]).distance, 1.0);
    assert!(b.rho(&[1.0, 0.0]).distance.abs() < 1e-15);
    assert!(!b.rho(&[1.0, 0.0]).inside);
}

#[test]
fn nearest_points_on_simple_shapes() {
    let b = DomainSpec::unit_ball(2);
    assert_eq!(b.nearest_boundary_point(&[0.5, 0.0]).unwrap().0, vec![1.0, 0.0]);
    let c = DomainSpec::unit_cube(2);
    assert_eq!(c.nearest_boundary_point(&[0.5, 0.1]).unwrap().0, vec![0.5, 0.0]);
    assert_eq!(c.nearest_boundary_point(&[0.5, 0.5]).unwrap().0, vec![0.0, 0.5]);
    assert!(c.nearest_boundary_point(&[1.5, 0.5]).is_err());
}

#[test]
fn l_shape_distance_near_reentrant_corner() {
    let l = l_shape();
    for p in [[0.99, 0.99], [0.9, 1.05], [1.05, 0.93], [0.5, 1.5], [1.5, 0.5], [1.2, 1.3], [3.0, 3.0]] {
        let got = l.distance(&p);
        let want = l_polygon_distance(&p);
        assert!((got - want).abs() <= 1e-9, "{p:?}: {got} vs {want}");
    }
    // min of the two half-space distances at the corner
    let x = [0.97, 0.98];
    assert!((l.distance(&x) - ((1.0f64 - 0.97).powi(2) + (1.0f64 - 0.98).powi(2)).sqrt()).abs() < 1e-12);
    let x = [0.97, 1.2];
    assert!((l.distance(&x) - 0.03).abs() < 1e-12);
}

#[test]
fn graph_distance_matches_dense_polyline() {
    let g = wavy();
    let n = 200_000;
    let curve: Vec<[f64; 2]> = (0..=n)
        .map(|i| {
            let t = -1.0 + 2.0 * i as f64 / n as f64;
            [t, 0.2 * (3.0 * t).sin().abs()]
        })
        .collect();
    for p in [[0.0, -0.05], [0.3, 0.0], [1.047, 0.1], [-0.9, -0.8], [0.5, 0.5], [-1.3, 0.0]] {
        let mut want = f64::INFINITY;
        for w in curve.windows(2) {
            want = want.min(seg_dist(&p, w[0], w[1]));
        }
        for (a, b) in [([-1.0, -1.0], [1.0, -1.0]), ([-1.0, -1.0], [-1.0, curve[0][1]]), ([1.0, -1.0], [1.0, curve[n][1]])] {
            want = want.min(seg_dist(&p, a, b));
        }
        let got = g.distance(&p);
        assert!((got - want).abs() < 1e-8, "{p:?}: {got} vs {want}");
    }
}

#[test]
fn ball_corkscrew_is_radial_midpoint() {
    let b = DomainSpec::unit_ball(2);
    let k = KFatCharacteristics::new(1.0, 0.5).unwrap();
    let a = b.corkscrew(&[1.0, 0.0], 0.5, &k).unwrap();
    assert!((a[0] - 0.75).abs() < 1e-12 && a[1].abs() < 1e-12);
    let mut rng = StreamRng::new(3, 0);
    assert_eq!(containment_violations(&b, &a, 0.25, &[1.0, 0.0], 0.5, 10_000, &mut rng), 0);
}

#[test]
fn box_face_corkscrew_offsets_by_half_radius() {
    let c = DomainSpec::unit_cube(2);
    let (a, s) = c.corkscrew_search(&[0.5, 0.0], 0.2).unwrap();
    assert!((a[0] - 0.5).abs() < 1e-9 && (a[1] - 0.1).abs() < 1e-9);
    assert!((s - 0.1).abs() < 1e-12);
}

#[test]
fn box_corner_ratio_is_optimal() {
    for d in [2usize, 3] {
        let c = DomainSpec::unit_cube(d);
        let (_, s) = c.corkscrew_search(&vec![0.0; d], 0.3).unwrap();
        let want = 0.3 / (1.0 + (d as f64).sqrt());
        assert!((s - want).abs() < 1e-6 * want, "d={d}: {s} vs {want}");
    }
}

#[test]
fn tangency_corkscrew_uses_first_ball() {
    let u = tangent_pair();
    let k = KFatCharacteristics::new(0.5, 0.5).unwrap();
    let a = u.corkscrew(&[0.0, 0.0], 0.4, &k).unwrap();
    assert!(a[0] < 0.0);
    let mut rng = StreamRng::new(4, 0);
    assert_eq!(containment_violations(&u, &a, 0.2, &[0.0, 0.0], 0.4, 10_000, &mut rng), 0);
}

#[test]
fn reentrant_corner_corkscrew_contains_ball() {
    let l = l_shape();
    let k = KFatCharacteristics::new(0.5, 0.5).unwrap();
    let a = l.corkscrew(&[1.0, 1.0], 0.4, &k).unwrap();
    let mut rng = StreamRng::new(5, 0);
    assert_eq!(containment_violations(&l, &a, 0.2, &[1.0, 1.0], 0.4, 10_000, &mut rng), 0);
}

#[test]
fn certify_ball_and_box() {
    let b = DomainSpec::unit_ball(2);
    let rep = kfat_certify(&b, &KFatCharacteristics::new(1.0, 0.5).unwrap(), 16, 4, 10_000, 1).unwrap();
    assert!(rep.passed(), "{:?}", rep.failures);

    let c = DomainSpec::unit_cube(2);
    let rep = kfat_certify(&c, &KFatCharacteristics::new(0.5, 0.5).unwrap(), 16, 4, 0, 1).unwrap();
    assert!(!rep.passed());
    assert!(rep.failures.iter().all(|f| f.achieved_ratio < 0.5));
    let kappa = 1.0 / (2.0 * 2f64.sqrt());
    let rep = kfat_certify(&c, &KFatCharacteristics::new(0.5, kappa).unwrap(), 16, 4, 10_000, 1).unwrap();
    assert!(rep.passed());
    assert!(rep.kappa_passed >= kappa);
}

#[test]
fn oversized_kappa_is_rejected_before_sampling() {
    assert!(KFatCharacteristics::new(1.0, 0.9).is_err());
    let c = DomainSpec::unit_cube(2);
    let bad = KFatCharacteristics { r_char: 1.0, kappa: 0.9 };
    assert!(kfat_certify(&c, &bad, 1, 1, 0, 0).is_err());
}

#[test]
fn corkscrew_rejects_large_radius() {
    let b = DomainSpec::unit_ball(2);
    let k = KFatCharacteristics::new(0.5, 0.5).unwrap();
    assert!(b.corkscrew(&[1.0, 0.0], 0.5, &k).is_err());
}

#[test]
fn frame_invariants_on_unit_ball() {
    let b = DomainSpec::unit_ball(2);
    let f = ReferenceFrame::new(&b, KFatCharacteristics::new(1.0, 0.5).unwrap()).unwrap();
    let rz = b.distance(&f.z0);
    assert_eq!(f.m, 4.0);
    assert!((f.eps1 - 1.0 / 48.0).abs() < 1e-15);
    assert!(rz > 0.5 && rz < 1.0);
}

#[test]
fn mutual_scale_cases() {
    let b = DomainSpec::unit_ball(2);
    let x = [0.1, 0.2];
    assert_eq!(mutual_scale(&b, &x, &x), b.distance(&x));
    let (p, q) = ([-0.9, 0.0], [0.9, 0.0]);
    assert!((mutual_scale(&b, &p, &q) - 1.8).abs() < 1e-15);
}

#[test]
fn witness_far_pair_is_anchor() {
    let b = DomainSpec::unit_ball(2);
    let f = ReferenceFrame::new(&b, KFatCharacteristics::new(1.0, 0.5).unwrap()).unwrap();
    let w = bset_witness(&b, &f, &[0.0, 0.0], &[0.5, 0.0]).unwrap();
    assert_eq!(w, f.z0);
}

#[test]
fn witness_near_boundary_satisfies_membership() {
    let b = DomainSpec::unit_ball(2);
    let f = ReferenceFrame::new(&b, KFatCharacteristics::new(1.0, 0.5).unwrap()).unwrap();
    let x = [0.995, 0.0];
    let y = [0.993, 0.004];
    let r = mutual_scale(&b, &x, &y);
    assert!(r < f.eps1);
    let a = bset_witness(&b, &f, &x, &y).unwrap();
    assert!(b.distance(&a) > r / f.m);
    assert!(dist(&x, &a).max(dist(&y, &a)) < 5.0 * r);
    assert!(dist(&x, &a) <= 2.0 * r);
}

fn shapes() -> Vec<DomainSpec> {
    vec![
        DomainSpec::unit_ball(2),
        DomainSpec::unit_cube(3),
        tangent_pair(),
        l_shape(),
        wavy(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rho_is_one_lipschitz(k in 0usize..5, a in prop::collection::vec(-2.5f64..2.5, 3), b in prop::collection::vec(-2.5f64..2.5, 3)) {
        let dom = &shapes()[k];
        let d = dom.dim();
        let (x, y) = (&a[..d], &b[..d]);
        prop_assert!((dom.distance(x) - dom.distance(y)).abs() <= dist(x, y) * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn mutual_scale_is_symmetric(s in 0u64..1000) {
        let dom = DomainSpec::unit_ball(2);
        let mut rng = StreamRng::new(s, 0);
        let x = dom.sample_uniform(&mut rng);
        let y = dom.sample_uniform(&mut rng);
        prop_assert_eq!(mutual_scale(&dom, &x, &y), mutual_scale(&dom, &y, &x));
        let brute = dom.distance(&x).max(dom.distance(&y)).max(dist(&x, &y));
        prop_assert_eq!(mutual_scale(&dom, &x, &y), brute);
    }

    #[test]
    fn nearest_point_realises_distance(k in 0usize..5, s in 0u64..1000) {
        let dom = &shapes()[k];
        let mut rng = StreamRng::new(s, 1);
        let x = dom.sample_uniform(&mut rng);
        let q = dom.nearest_boundary_point(&x).unwrap();
        prop_assert!((dist(&x, &q) - dom.distance(&x)).abs() <= 1e-12 * dom.diameter());
        prop_assert!(dom.distance(&q) <= 1e-9 * dom.diameter());
    }
}
