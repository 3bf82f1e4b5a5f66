use super::*;
use crate::geometry::KFatCharacteristics;
use crate::kernels::{ball_exit_radial_cdf, ball_green, ball_martin_kernel};
use crate::quad::{gauss_kronrod, semi_infinite, tanh_sinh};
use crate::stats::{ks_critical_1pct, ks_statistic, ks_two_sample, ks_two_sample_critical_1pct};

fn sp(d: usize, a: f64) -> StableParams {
    StableParams::new(d, a).unwrap()
}

fn radii(p: &StableParams, r: f64, n: usize, stream: u64) -> Vec<f64> {
    let mut rng = StreamRng::new(11, stream);
    let c = vec![0.0; p.d];
    (0..n).map(|_| crate::geometry::norm(&sample_ball_exit(p, &c, r, &mut rng))).collect()
}

#[test]
fn exit_radius_matches_cdf() {
    for &a in &[0.5, 1.0, 1.5] {
        let p = sp(2, a);
        let xs = radii(&p, 1.0, 20_000, 0);
        let ks = ks_statistic(&xs, |s| ball_exit_radial_cdf(&p, 1.0, s).unwrap());
        assert!(ks < ks_critical_1pct(xs.len()), "alpha={a}: ks={ks}");
    }
}

#[test]
fn exit_direction_is_isotropic() {
    let p = sp(3, 1.2);
    let mut rng = StreamRng::new(5, 0);
    let n = 20_000;
    let mut pos = [0usize; 3];
    for _ in 0..n {
        let z = sample_ball_exit(&p, &[0.0; 3], 1.0, &mut rng);
        for i in 0..3 {
            pos[i] += (z[i] > 0.0) as usize;
        }
    }
    let sigma = (0.25 / n as f64).sqrt();
    for c in pos {
        assert!((c as f64 / n as f64 - 0.5).abs() <= 3.0 * sigma);
    }
}

#[test]
fn exit_radius_scales_linearly() {
    let p = sp(2, 0.8);
    let a: Vec<f64> = radii(&p, 2.5, 10_000, 1).iter().map(|s| s / 2.5).collect();
    let b = radii(&p, 1.0, 10_000, 2);
    assert!(ks_two_sample(&a, &b) < ks_two_sample_critical_1pct(a.len(), b.len()));
}

#[test]
fn one_step_from_centre_of_ball() {
    let p = sp(2, 1.3);
    let ball = DomainSpec::unit_ball(2);
    let mut rng = StreamRng::new(3, 0);
    for _ in 0..1000 {
        let ch = run_walk(&p, &ball, &[0.0, 0.0], &mut rng, &WalkOptions::default()).unwrap();
        assert_eq!(ch.n_steps, 1);
        assert!(!ch.truncated);
        assert!(!ball.contains(&ch.exit_point));
    }
}

#[test]
fn chain_invariants_on_box() {
    let p = sp(2, 0.9);
    let dom = DomainSpec::unit_cube(2);
    let mut rng = StreamRng::new(4, 0);
    for _ in 0..500 {
        let ch = run_walk(&p, &dom, &[0.3, 0.6], &mut rng, &WalkOptions::default()).unwrap();
        assert!(!ch.truncated);
        assert_eq!(ch.n_steps, ch.steps.len());
        for (i, s) in ch.steps.iter().enumerate() {
            assert!(dom.contains(&s.center));
            assert!(s.radius <= dom.distance(&s.center));
            assert!(dist(&s.exit, &s.center) > s.radius);
            assert_eq!(dom.contains(&s.exit), i + 1 < ch.n_steps);
        }
        assert!(!dom.contains(&ch.exit_point));
    }
}

#[test]
fn truncation_is_flagged() {
    let p = sp(2, 1.9);
    let dom = DomainSpec::unit_cube(2);
    let opts = WalkOptions { max_steps: 1, ..Default::default() };
    let mut rng = StreamRng::new(9, 0);
    let n_trunc = (0..200)
        .filter(|_| run_walk(&p, &dom, &[0.5, 0.5], &mut rng, &opts).unwrap().truncated)
        .count();
    assert!(n_trunc > 0);
}

#[test]
fn mean_steps_decrease_with_theta() {
    let p = sp(2, 1.0);
    let dom = DomainSpec::unit_cube(2);
    let mean = |theta: f64| {
        let o = WalkOptions { theta, ..Default::default() };
        let ch = sample_exits(&p, &dom, &[0.4, 0.45], 4000, 1, &o).unwrap();
        ch.iter().map(|c| c.n_steps as f64).sum::<f64>() / ch.len() as f64
    };
    let (a, b, c) = (mean(0.4), mean(0.7), mean(1.0));
    assert!(a > b && b > c, "{a} {b} {c}");
}

/// Angular integral of the disc Poisson kernel on the circle of radius
/// `1 + g`, times the radius. Written in the gap `g` so that radii within one
/// ulp of the unit circle stay resolvable.
fn angular(p: &StableParams, x: &[f64], g: f64) -> f64 {
    let s = 1.0 + g;
    let inner = 1.0 - x[0] * x[0] - x[1] * x[1];
    let rim = (inner / (g * (2.0 + g))).powf(0.5 * p.alpha);
    gauss_kronrod(
        |t: f64| {
            let z = [s * t.cos(), s * t.sin()];
            p.poisson_const() * rim * dist(x, &z).powf(-2.0) * s
        },
        0.0,
        2.0 * std::f64::consts::PI,
        0.0,
        1e-11,
        200,
    )
    .value
}

/// Probability that the exit from the unit disc started at `x` has radius in
/// `[s0, s1]`, by quadrature of the Poisson kernel.
fn annulus_mass(p: &StableParams, x: &[f64], s0: f64, s1: f64) -> f64 {
    if s1.is_infinite() {
        return semi_infinite(|s| angular(p, x, s - 1.0), s0, s0, 0.0, 1e-9).value;
    }
    // the (s-1)^{-alpha/2} edge at s = 1 is integrated in the gap variable
    tanh_sinh(|_, dl, _| angular(p, x, s0 - 1.0 + dl), s0, s1, 0.0, 1e-9, 10).value
}

#[test]
fn walk_exit_law_matches_poisson_kernel() {
    let p = sp(2, 1.0);
    let ball = DomainSpec::unit_ball(2);
    let x = [0.5, 0.0];
    let n = 100_000;
    let mut edges: Vec<f64> = (0..20).map(|j| ball_exit_radius_quantile(&p, 1.0, 1.0 - j as f64 / 20.0)).collect();
    edges[0] = 1.0;
    edges.push(f64::INFINITY);
    let chains = sample_exits(&p, &ball, &x, n, 7, &WalkOptions::default()).unwrap();
    let mut counts = vec![0usize; 20];
    for c in &chains {
        let s = crate::geometry::norm(&c.exit_point);
        let j = edges.partition_point(|e| *e <= s) - 1;
        counts[j.min(19)] += 1;
    }
    let mut tv = 0.0;
    let mut total = 0.0;
    for j in 0..20 {
        let q = annulus_mass(&p, &x, edges[j], edges[j + 1]);
        total += q;
        tv += (counts[j] as f64 / n as f64 - q).abs();
    }
    assert!((total - 1.0).abs() < 1e-6, "oracle mass {total}");
    assert!(0.5 * tv <= 0.02, "tv = {}", 0.5 * tv);
}

#[test]
fn green_estimate_tracks_ball_oracle() {
    let p = sp(2, 1.5);
    let ball = DomainSpec::unit_ball(2);
    for (x, y) in [([0.1, 0.2], [-0.3, 0.4]), ([0.6, 0.0], [0.0, -0.5]), ([0.2, -0.7], [0.3, -0.6])] {
        let est = estimate_green(&p, &ball, &x, &y, 20_000, 3, &WalkOptions::default()).unwrap();
        let g = ball_green(&p, 1.0, &x, &y).unwrap();
        assert!((est.value - g).abs() <= 4.0 * est.stderr, "{x:?} {y:?}: {} ± {} vs {g}", est.value, est.stderr);
    }
}

#[test]
fn green_estimate_symmetric_on_box() {
    let p = sp(2, 1.5);
    let dom = DomainSpec::unit_cube(2);
    let (x, y) = ([0.3, 0.3], [0.7, 0.5]);
    let a = estimate_green(&p, &dom, &x, &y, 20_000, 1, &WalkOptions::default()).unwrap();
    let b = estimate_green(&p, &dom, &y, &x, 20_000, 2, &WalkOptions::default()).unwrap();
    assert!((a.value - b.value).abs() <= 3.0 * a.stderr.hypot(b.stderr));
}

#[test]
fn estimates_are_schedule_independent() {
    let p = sp(2, 1.2);
    let dom = DomainSpec::unit_cube(2);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| estimate_green(&p, &dom, &[0.2, 0.5], &[0.6, 0.4], 3000, 42, &WalkOptions::default()).unwrap())
    };
    let (a, b) = (run(1), run(4));
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    let ca = sample_exits(&p, &dom, &[0.2, 0.5], 50, 42, &WalkOptions::default()).unwrap();
    let cb = sample_exits(&p, &dom, &[0.2, 0.5], 50, 42, &WalkOptions::default()).unwrap();
    assert_eq!(ca, cb);
}

#[test]
fn guard_resamples_and_counts() {
    let p = sp(2, 1.5);
    let ball = DomainSpec::unit_ball(2);
    let opts = WalkOptions { guard: 0.15, ..Default::default() };
    let (_, diag) = estimate_green_detailed(&p, &ball, &[0.0, 0.1], &[0.0, -0.1], 5000, 1, &opts).unwrap();
    assert!(diag.resampled > 0);
    let (_, clean) =
        estimate_green_detailed(&p, &ball, &[0.0, 0.1], &[0.0, -0.1], 5000, 1, &WalkOptions::default()).unwrap();
    assert_eq!(clean.resampled, 0);
}

#[test]
fn rejects_bad_inputs() {
    let p = sp(2, 1.0);
    let ball = DomainSpec::unit_ball(2);
    let o = WalkOptions::default();
    assert!(estimate_green(&p, &ball, &[0.1, 0.1], &[0.1, 0.1], 10, 0, &o).is_err());
    assert!(estimate_green(&p, &ball, &[2.0, 0.1], &[0.1, 0.1], 10, 0, &o).is_err());
    assert!(run_walk(&p, &ball, &[0.0, 0.0], &mut StreamRng::new(0, 0), &WalkOptions { theta: 0.0, ..o }).is_err());
}

#[test]
fn martin_estimates() {
    let p = sp(2, 1.5);
    let ball = DomainSpec::unit_ball(2);
    let o = WalkOptions::default();
    let x0 = [0.0, 0.0];
    let x = [0.3, 0.2];
    let ys: Vec<Point> = [0.9, 0.95, 0.98, 0.99].iter().map(|t| Point(vec![*t, 0.0])).collect();
    let same = estimate_martin(&p, &ball, &x0, &x0, &ys, 100, 1, &o).unwrap();
    assert!(same.estimates.iter().all(|e| e.value == 1.0));
    let rep = estimate_martin(&p, &ball, &x0, &x, &ys, 20_000, 1, &o).unwrap();
    assert!(rep.estimates.iter().all(|e| e.value > 0.0));
    assert!(rep.stabilised(3.0), "{rep:?}");
    let m = ball_martin_kernel(&p, &x0, 1.0, &x0, &x, &[1.0, 0.0]).unwrap();
    let last = rep.estimates.last().unwrap();
    assert!((last.value - m).abs() <= 4.0 * last.stderr + 0.05 * m, "{} vs {m}", last.value);
}

#[test]
fn g_is_capped() {
    let p = sp(2, 1.5);
    let ball = DomainSpec::unit_ball(2);
    let c0 = calibrate_c0(&p, 10_000, 0);
    assert!(c0 > 0.0 && c0 <= p.green_const() * (1.0 + 1e-12));
    let frame = ReferenceFrame::new(&ball, KFatCharacteristics::new(0.5, 0.5).unwrap()).unwrap().with_c0(c0).unwrap();
    let cap = g_cap(&p, &ball, &frame, c0);
    let o = WalkOptions::default();
    let near = estimate_g(&frame, &p, &ball, &[frame.z0[0] + 0.01, frame.z0[1]], 2000, 0, &o).unwrap();
    assert!(near.value <= cap);
    // deep at the boundary the cap is inactive
    let edge = [0.0, 0.999];
    let g = estimate_g(&frame, &p, &ball, &edge, 2000, 0, &o).unwrap();
    let raw = estimate_green(&p, &ball, &edge, &frame.z0, 2000, 0, &o).unwrap();
    assert!(ball.distance(&edge) <= 6.0 * frame.eps1);
    assert_eq!(g.value, raw.value);
}
