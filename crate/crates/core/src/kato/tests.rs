use proptest::prelude::*;

use super::*;
use crate::green::BallOracle;
use crate::inequality_lab::fit_3g;

fn ball(alpha: f64, r: f64) -> (StableParams, DomainSpec, BallOracle) {
    let p = StableParams::new(2, alpha).unwrap();
    let dom = DomainSpec::new(Shape::Ball { center: vec![0.0, 0.0], radius: r }).unwrap();
    let o = BallOracle::new(p, &dom).unwrap();
    (p, dom, o)
}

fn quick(seed: u64) -> QuadConfig {
    QuadConfig { base_per_stratum: 512, max_doublings: 6, seed }
}

#[test]
fn young_f1_worked_example() {
    let p = StableParams::new(2, 1.0).unwrap();
    let YoungSelection::Split(y) = select_young_exponents(&p, 1.5, 0.5, YoungCase::F1).unwrap() else {
        panic!("expected a split")
    };
    assert!((y.interval.0 - 4.0 / 3.0).abs() < 1e-15 && (y.interval.1 - 2.0).abs() < 1e-15);
    assert!((y.p - 5.0 / 3.0).abs() < 1e-15 && (y.q - 2.5).abs() < 1e-14);
    assert!((y.constraints[0].lhs - 5.0 / 3.0).abs() < 1e-14);
    assert!((y.constraints[1].lhs - 1.25).abs() < 1e-14);
    assert!(y.constraints_hold());
}

#[test]
fn young_short_circuit_and_hypothesis_errors() {
    let p = StableParams::new(2, 0.8).unwrap();
    assert!(matches!(
        select_young_exponents(&p, 1.6, 0.3, YoungCase::F1).unwrap(),
        YoungSelection::NotNeeded { yz_exponent, .. } if yz_exponent == 0.0
    ));
    // f4 uses alpha - gamma, so the short-circuit comes earlier
    assert!(matches!(
        select_young_exponents(&p, 1.0, 0.3, YoungCase::F4).unwrap(),
        YoungSelection::NotNeeded { .. }
    ));
    match select_young_exponents(&p, 0.8, 0.3, YoungCase::F1) {
        Err(Error::EmptyInterval(m)) => assert!(m.contains("beta > alpha")),
        other => panic!("unexpected {other:?}"),
    }
    assert!(matches!(select_young_exponents(&p, 1.0, 0.9, YoungCase::F2), Err(Error::Hypothesis(_))));
}

proptest! {
    #[test]
    fn young_exponents_are_conjugate_and_admissible(
        d in 2usize..5,
        a_frac in 0.05f64..0.99,
        g_frac in 0.01f64..0.99,
        b_extra in 0.001f64..2.0,
        case in prop_oneof![Just(YoungCase::F1), Just(YoungCase::F2), Just(YoungCase::F3), Just(YoungCase::F4)],
    ) {
        let alpha = 2.0f64.min(d as f64) * a_frac;
        prop_assume!(alpha < d as f64);
        let p = StableParams::new(d, alpha).unwrap();
        let gamma = alpha * g_frac;
        match select_young_exponents(&p, alpha + b_extra, gamma, case).unwrap() {
            YoungSelection::NotNeeded { yz_exponent, .. } => prop_assert!(yz_exponent >= 0.0),
            YoungSelection::Split(y) => {
                prop_assert!((1.0 / y.p + 1.0 / y.q - 1.0).abs() < 1e-12);
                prop_assert!(y.interval.0 < y.p && y.p < y.interval.1);
                prop_assert!(y.constraints_hold(), "{:?}", y);
                prop_assert!(y.constraints.iter().all(|c| c.margin() > 0.0));
            }
        }
    }
}

#[test]
fn power_and_relativistic_forms() {
    let f = PerturbationSpec::power(1.5, 2.0).unwrap();
    assert!(f.hypothesis_holds(1.0) && !f.hypothesis_holds(1.5));
    assert!((f.eval(&[0.0, 0.0], &[0.0, 0.25]).unwrap() - 0.25).abs() < 1e-15);
    let rp = RelativisticParams::new(StableParams::new(2, 1.0).unwrap(), 2.0).unwrap();
    let fm = PerturbationSpec::relativistic(rp);
    assert_eq!(fm.beta, 2.0);
    for r in [1e-3, 0.1, 0.5, 1.0, 3.0] {
        let v = fm.eval(&[0.0, 0.0], &[r, 0.0]).unwrap();
        assert!(v <= 0.0 && v.abs() <= fm.c * r * r * (1.0 + 1e-6), "r={r} v={v} bound={}", fm.c * r * r);
    }
    let t = RadialTable::new(vec![0.1, 1.0], vec![0.01, 1.0]).unwrap();
    let ft = PerturbationSpec::custom(t, 2.0, 1.0).unwrap();
    assert!((ft.eval(&[0.0], &[0.05]).unwrap() - 0.0025).abs() < 1e-15);
    assert!((ft.eval(&[0.0], &[0.55]).unwrap() - 0.505).abs() < 1e-12);
}

#[test]
fn proposal_density_integrates_to_one() {
    // E_q[1_D / q] over a mixture draw is |D| when the mixture covers D
    let (p, dom, _) = ball(1.0, 1.0);
    let x = [0.3, 0.1];
    let w = [-0.4, 0.2];
    let len = dom.diameter();
    let (lo, hi) = dom.bounding_box();
    let r = Radial { s: 0.7, len };
    let prop = Proposal {
        anchors: [&x, &w],
        lo,
        hi,
        strata: vec![[Leg::Around(0, r), Leg::Chained(r)], [Leg::Chained(r), Leg::Around(1, r)], [Leg::Uniform, Leg::Uniform]],
        order: vec![[0, 1], [1, 0], [0, 1]],
    };
    let n = 60_000;
    let vals: Vec<f64> = (0..n)
        .map(|i| {
            let mut rng = StreamRng::new(5, i as u64);
            let pts = prop.draw(i % 3, &mut rng).pts;
            if dom.contains(&pts[0]) && dom.contains(&pts[1]) {
                1.0 / prop.density(&pts, dist(&pts[0], &pts[1]), 0.0)
            } else {
                0.0
            }
        })
        .collect();
    let (m, se) = mean_stderr(&vals);
    let area = std::f64::consts::PI;
    assert!((m - area * area).abs() < 4.0 * se + 1e-3, "m={m} se={se}");
    let _ = p;
}

#[test]
fn zero_perturbation_and_zero_density_give_zero() {
    let (p, dom, o) = ball(1.0, 1.0);
    let f = PerturbationSpec::power(1.5, 0.0).unwrap();
    let r = gauge_double_integral(&o, &p, &dom, &f, &[0.2, 0.0], &Endpoint::Interior(Point(vec![-0.3, 0.1])), &quick(1)).unwrap();
    assert_eq!(r.value, 0.0);
    assert!(r.stable && !r.divergent);
    let s = s_infty_integral(&o, &p, &dom, &QDensity::Constant { c: 0.0 }, &[0.2, 0.0], &[-0.3, 0.1], &quick(1)).unwrap();
    assert_eq!(s.value, 0.0);
}

#[test]
fn gauge_domain_errors() {
    let (p, dom, o) = ball(1.0, 1.0);
    let f = PerturbationSpec::power(1.5, 1.0).unwrap();
    let x = [0.2, 0.0];
    assert!(matches!(
        gauge_double_integral(&o, &p, &dom, &f, &x, &Endpoint::Interior(Point(x.to_vec())), &quick(1)),
        Err(Error::Degenerate(_))
    ));
    assert!(matches!(
        gauge_double_integral(&o, &p, &dom, &f, &[2.0, 0.0], &Endpoint::Interior(Point(vec![0.0, 0.0])), &quick(1)),
        Err(Error::OutsideDomain(_))
    ));
    assert!(gauge_double_integral(&o, &p, &dom, &f, &x, &Endpoint::Boundary(Point(vec![0.5, 0.0])), &quick(1)).is_err());
}

#[test]
fn integrable_power_is_stable_and_subcritical_diverges() {
    let (p, dom, o) = ball(1.0, 1.0);
    let x = [0.5, 0.1];
    let w = Endpoint::Interior(Point(vec![-0.6, -0.2]));
    let good = PerturbationSpec::power(1.5, 1.0).unwrap();
    let r = gauge_double_integral(&o, &p, &dom, &good, &x, &w, &quick(3)).unwrap();
    assert!(r.stable && !r.divergent && r.value.is_finite() && r.value > 0.0, "{r:?}");
    let bad = PerturbationSpec::power(0.9, 1.0).unwrap();
    let r = gauge_double_integral(&o, &p, &dom, &bad, &x, &w, &quick(3)).unwrap();
    assert!(r.divergent && !r.stable, "{r:?}");
}

#[test]
fn gauge_is_linear_in_c() {
    let (p, dom, o) = ball(1.0, 1.0);
    let x = [0.1, 0.4];
    let w = Endpoint::Interior(Point(vec![0.2, -0.5]));
    let r1 = gauge_double_integral(&o, &p, &dom, &PerturbationSpec::power(1.5, 1.0).unwrap(), &x, &w, &quick(9)).unwrap();
    let r2 = gauge_double_integral(&o, &p, &dom, &PerturbationSpec::power(1.5, 2.5).unwrap(), &x, &w, &quick(9)).unwrap();
    assert!((r2.value - 2.5 * r1.value).abs() <= 1e-12 * r2.value);
}

#[test]
fn gauge_grows_with_the_domain() {
    let x = [0.1, 0.1];
    let w = Endpoint::Interior(Point(vec![-0.2, -0.1]));
    let f = PerturbationSpec::power(1.5, 1.0).unwrap();
    let cfg = QuadConfig { base_per_stratum: 4096, ..quick(11) };
    let vals: Vec<IntegralReport> = [0.5, 1.0, 2.0]
        .iter()
        .map(|&r| {
            let (p, dom, o) = ball(1.0, r);
            gauge_double_integral(&o, &p, &dom, &f, &x, &w, &cfg).unwrap()
        })
        .collect();
    for pair in vals.windows(2) {
        let slack = 3.0 * (pair[0].stderr.powi(2) + pair[1].stderr.powi(2)).sqrt();
        assert!(pair[0].value <= pair[1].value + slack, "{} vs {}", pair[0].value, pair[1].value);
    }
}

#[test]
fn relativistic_perturbation_is_finite() {
    let (p, dom, o) = ball(1.0, 1.0);
    let f = PerturbationSpec::relativistic(RelativisticParams::new(p, 1.0).unwrap());
    let r = gauge_double_integral(&o, &p, &dom, &f, &[0.3, 0.3], &Endpoint::Interior(Point(vec![-0.5, 0.0])), &quick(4)).unwrap();
    assert!(r.stable && !r.divergent && r.value.abs() > 0.0, "{r:?}");
}

#[test]
fn martin_variant_is_finite_toward_the_boundary() {
    let (p, dom, o) = ball(1.0, 1.0);
    let f = PerturbationSpec::power(1.5, 1.0).unwrap();
    let w = Endpoint::Boundary(Point(vec![1.0, 0.0]));
    let mut last = 0.0;
    for (k, x) in [[-0.5, 0.0], [0.5, 0.0], [0.9, 0.0]].iter().enumerate() {
        let r = gauge_double_integral(&o, &p, &dom, &f, x, &w, &quick(20 + k as u64)).unwrap();
        assert!(r.stable && !r.divergent && r.value.is_finite(), "{r:?}");
        last = r.value;
    }
    assert!(last > 0.0);
}

#[test]
fn sup_scan_reports_argmax() {
    let (p, dom, o) = ball(1.0, 1.0);
    let f = PerturbationSpec::power(1.5, 1.0).unwrap();
    let pairs = boundary_biased_pairs(&dom, &SamplerConfig { seed: 2, ..Default::default() }, 4);
    let s = gauge_sup_scan(&o, &p, &dom, &f, &pairs, &quick(8)).unwrap();
    assert_eq!(s.rows.len(), 4);
    assert_eq!(s.rows[s.argmax].result.value, s.max);
    assert!(s.all_stable && !s.any_divergent);
}

#[test]
fn s_infty_constant_and_boundary_densities() {
    let (p, dom, o) = ball(1.0, 1.0);
    let x = [0.4, 0.0];
    let z = [-0.3, 0.5];
    let one = s_infty_integral(&o, &p, &dom, &QDensity::Constant { c: 1.0 }, &x, &z, &quick(6)).unwrap();
    assert!(one.stable && one.value > 0.0, "{one:?}");
    // classical 3G: kernel <= c(|x-y|^{a-d} + |y-z|^{a-d}), integrable, so
    // the integral is bounded by a multiple of 2 * int_{B(0,2)} |u|^{-1} du
    assert!(one.value < 1e3);
    let q = QDensity::BoundaryPower { c: 1.0, exponent: 0.5 };
    let r = s_infty_integral(&o, &p, &dom, &q, &x, &z, &quick(6)).unwrap();
    assert!(r.stable && r.value > one.value, "{r:?}");
    let t = QDensity::depth_table(0.01, 1.0, 5, |t| Ok(t.powf(-0.5))).unwrap();
    assert!((t.eval(&dom, &[0.9, 0.0]) - 0.1f64.powf(-0.5)).abs() < 1e-9);
}

#[test]
fn four_point_kernel_sits_under_the_six_term_majorant() {
    let (p, dom, o) = ball(1.0, 1.0);
    let gamma = 0.5;
    let sampler = SamplerConfig { n_tuples: 2000, seed: 4, ..Default::default() };
    let (fit, records) = fit_3g(&o, &p, &dom, &sampler, &[gamma], Some(gamma)).unwrap();
    let e = p.df() - p.alpha;
    let k6 = 12.0 * 3f64.powf(e) * dom.diameter().max(1.0).powf(2.0 * gamma);
    for r in &records {
        let m6 = six_term_majorant(&p, &r.x, &r.y, &r.z, &r.w, gamma);
        assert!(r.lhs <= fit.c_hat * k6 * m6, "lhs={} bound={}", r.lhs, fit.c_hat * k6 * m6);
    }
}

