use super::*;
use crate::geometry::{KFatCharacteristics, Shape};
use crate::green::{BallOracle, FnGreen, GreenValue};

fn setup(alpha: f64) -> (StableParams, DomainSpec, BallOracle, ReferenceFrame) {
    let p = StableParams::new(2, alpha).unwrap();
    let dom = DomainSpec::unit_ball(2);
    let o = BallOracle::new(p, &dom).unwrap();
    let f = ReferenceFrame::new(&dom, KFatCharacteristics::new(1.0, 0.5).unwrap()).unwrap();
    (p, dom, o, f)
}

fn cfg(n: usize, seed: u64) -> ConditionsConfig {
    ConditionsConfig { n_samples: n, seed, ..Default::default() }
}

#[test]
fn ball_oracle_passes_all_four() {
    for alpha in [0.5, 1.0, 1.5] {
        let (p, dom, o, f) = setup(alpha);
        for rep in check_all(&o, &p, &dom, &f, &cfg(10_000, 1)).unwrap() {
            assert!(rep.passed(), "alpha={alpha}: {:?}", rep);
            assert!(rep.constant.is_finite() && rep.constant > 0.0);
        }
    }
}

#[test]
fn c1_exponent_is_below_alpha_for_stable_oracle() {
    let (p, dom, o, f) = setup(1.0);
    let rep = check_c1(&o, &p, &dom, &f, &cfg(100, 3)).unwrap();
    let g = rep.gamma.unwrap();
    assert!(g > 0.0 && g < p.alpha, "gamma={g}");
    assert_eq!(rep.gamma_below_alpha, Some(true));
}

#[test]
fn c1_single_level_profile_is_trivial() {
    // at s = r the ratio is exactly 1 whatever gamma is
    let (p, dom, o, f) = setup(1.0);
    let q = [1.0, 0.0];
    let a = dom.corkscrew(&q, 0.3, &f.kfat).unwrap();
    let u = o.eval(&a, &f.z0).unwrap().value;
    assert_eq!(u / u, 1.0);
    let rep = check_c1(&o, &p, &dom, &f, &ConditionsConfig { growth_levels: 3, ..cfg(100, 2) }).unwrap();
    assert!(rep.stable);
}

#[test]
fn c2_constant_grows_with_l() {
    let (_, dom, o, _) = setup(1.0);
    let small = check_c2(&o, &dom, &ConditionsConfig { harnack_l: 0.25, ..cfg(3000, 5) }).unwrap();
    let large = check_c2(&o, &dom, &ConditionsConfig { harnack_l: 4.0, ..cfg(3000, 5) }).unwrap();
    assert!(small.stable && large.stable, "{small:?} {large:?}");
    assert!(large.constant >= small.constant, "{} < {}", large.constant, small.constant);
    assert!(small.constant >= 1.0);
}

#[test]
fn c3_fails_for_boundary_singular_evaluator() {
    let (p, dom, o, _) = setup(1.0);
    let d2 = dom.clone();
    let bad = FnGreen {
        f: move |x: &[f64], y: &[f64]| -> crate::Result<GreenValue> {
            let g = o.eval(x, y)?;
            let s = 1.0 / d2.distance(y);
            Ok(GreenValue { value: g.value * s, err: g.err * s })
        },
        label: "G / rho(y)".into(),
    };
    let rep = check_c3(&bad, &p, &dom, &cfg(4000, 1)).unwrap();
    assert!(!rep.passed(), "{rep:?}");
    assert!(!rep.fits[0].fit.stable);
}

#[test]
fn c4_identical_points_give_one() {
    let (_, dom, o, f) = setup(1.0);
    let (x, y, z) = ([0.0, 0.5], [-0.4, 0.0], [0.9, 0.0]);
    let g = |a: &[f64], b: &[f64]| o.eval(a, b).unwrap().value;
    assert!(((g(&x, &z) / g(&y, &z)) / (g(&x, &z) / g(&y, &z)) - 1.0).abs() < 1e-15);
    let rep = check_c4(&o, &dom, &f, &cfg(10_000, 4)).unwrap();
    assert!(rep.stable && rep.constant >= 1.0);
}

#[test]
fn works_on_a_non_ball_through_a_plugin() {
    // Riesz kernel stand-in on a box: C3 holds with constant one by construction
    let p = StableParams::new(2, 1.0).unwrap();
    let dom = DomainSpec::new(Shape::Box { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] }).unwrap();
    let riesz = FnGreen {
        f: |x: &[f64], y: &[f64]| Ok(GreenValue { value: 1.0 / dist(x, y), err: 0.0 }),
        label: "|x-y|^{-1}".into(),
    };
    let rep = check_c3(&riesz, &p, &dom, &cfg(500, 0)).unwrap();
    assert!(rep.stable && (rep.constant - 1.0).abs() < 1e-12, "{rep:?}");
}

#[test]
fn config_validation() {
    assert!(ConditionsConfig { n_samples: 4, ..Default::default() }.validate().is_err());
    assert!(ConditionsConfig { r0_fraction: 1.0, ..Default::default() }.validate().is_err());
    assert!(ConditionsConfig::default().validate().is_ok());
}


