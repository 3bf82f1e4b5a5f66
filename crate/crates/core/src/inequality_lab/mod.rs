//! Empirical checks of the three-point and four-point Green function
//! inequalities on kappa-fat sets.
//!
//! A finite sample can never certify a supremum. Every sup reported here
//! carries its stability curve: the running sup at `n/16, ..., n, 2n`
//! tuples, and a fit is accepted only when doubling from `n` to `2n`
//! moves the sup by at most [`STABILITY_TOL`].

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{bset_witness, dist, mutual_scale, DomainSpec, Point, ReferenceFrame, Shape};
use crate::green::{g_function, BallOracle, GreenEvaluator, GreenSource, GreenValue};
use crate::kernels::StableParams;
use crate::rng::{derive_key, StreamRng};
use crate::stats::{linear_fit, par_map};

/// Largest relative change of a sup under sample doubling that still
/// counts as stable.
pub const STABILITY_TOL: f64 = 0.10;

/// Relative Monte Carlo error above which a ratio is reported as noisy.
pub const NOISE_TOL: f64 = 0.20;

/// Caveat attached to every sup report.
pub fn caveat(n: usize) -> String {
    format!(
        "empirical sup over {n} samples (compared against {} samples); \
         accepted when doubling changes it by at most {:.0}%; this does not certify the inequality",
        2 * n,
        100.0 * STABILITY_TOL
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: usize,
    pub sup: f64,
}

/// Running sup of a sample stream together with its doubling verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupFit {
    pub curve: Vec<CurvePoint>,
    /// Sup over all samples.
    pub sup: f64,
    /// `(sup_{2n} - sup_n) / sup_n` for the last doubling.
    pub rel_change: f64,
    pub stable: bool,
    /// Samples that entered the sup (non-finite values are skipped).
    pub n_used: usize,
}

impl SupFit {
    /// Build from values in sample order. The curve is evaluated at
    /// `len/16, len/8, len/4, len/2, len`; the verdict compares the last two.
    pub fn from_values(values: &[f64]) -> Self {
        let len = values.len();
        let mut marks: Vec<usize> = (0..5).map(|j| len >> (4 - j)).filter(|&m| m > 0).collect();
        marks.dedup();
        let mut curve = Vec::with_capacity(marks.len());
        let mut running = f64::NEG_INFINITY;
        let mut n_used = 0;
        let mut next = 0;
        for (i, v) in values.iter().enumerate() {
            if v.is_finite() {
                running = running.max(*v);
                n_used += 1;
            }
            while next < marks.len() && marks[next] == i + 1 {
                curve.push(CurvePoint { n: i + 1, sup: running });
                next += 1;
            }
        }
        let sup = running;
        let rel_change = match curve.len() {
            0 | 1 => f64::INFINITY,
            k => {
                let (a, b) = (curve[k - 2].sup, curve[k - 1].sup);
                if a > 0.0 && a.is_finite() && b.is_finite() {
                    (b - a) / a
                } else {
                    f64::INFINITY
                }
            }
        };
        Self {
            curve,
            sup,
            rel_change,
            stable: sup.is_finite() && rel_change <= STABILITY_TOL,
            n_used,
        }
    }
}

/// Boundary-biased sampler: a fraction of points uniform in `D`, the rest in
/// shells `rho_D < 2^{-k} diam(D)` with `k` uniform in `k_min..=k_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    pub n_tuples: usize,
    pub uniform_fraction: f64,
    pub k_min: u32,
    pub k_max: u32,
    pub seed: u64,
    /// Local ascent moves applied to each tuple before its ratio enters the
    /// sup. Zero gives plain random search.
    pub polish_steps: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { n_tuples: 10_000, uniform_fraction: 0.5, k_min: 3, k_max: 10, seed: 0, polish_steps: 64 }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_tuples < 16 {
            return Err(invalid("n_tuples", "need at least 16 tuples for a stability curve"));
        }
        if !(0.0..=1.0).contains(&self.uniform_fraction) {
            return Err(invalid("uniform_fraction", "must lie in [0, 1]"));
        }
        if self.k_min == 0 || self.k_min > self.k_max || self.k_max > 40 {
            return Err(invalid("k_min", "need 1 <= k_min <= k_max <= 40"));
        }
        Ok(())
    }

    /// One point from the mixture.
    pub fn sample_point(&self, domain: &DomainSpec, rng: &mut StreamRng) -> Point {
        if rng.uniform() < self.uniform_fraction {
            return domain.sample_uniform(rng);
        }
        let k = self.k_min + rng.index((self.k_max - self.k_min + 1) as usize) as u32;
        let eps = domain.diameter() * 0.5f64.powi(k as i32);
        loop {
            let q = domain.sample_boundary(rng);
            let x: Vec<f64> = q.iter().zip(rng.in_ball(domain.dim(), eps)).map(|(a, b)| a + b).collect();
            if domain.contains(&x) {
                return Point(x);
            }
        }
    }

    /// Chains `(x, y, z, w)`: `x` from the mixture, then each point at
    /// distance `diam 2^{-j}` from its predecessor, `j` uniform in
    /// `1..=k_max`. Consecutive pairs at every scale are common here, while
    /// independent draws almost never produce two close pairs at once.
    pub fn sample_chains(&self, domain: &DomainSpec, count: usize) -> Vec<Vec<Point>> {
        let key = derive_key(self.seed, 0x636c_7573);
        let diam = domain.diameter();
        par_map(count, |i| {
            let mut rng = StreamRng::new(key, i as u64);
            let mut chain = vec![self.sample_point(domain, &mut rng)];
            while chain.len() < 4 {
                let s = diam * 0.5f64.powi(1 + rng.index(self.k_max as usize) as i32);
                let b = Point(crate::geometry::axpy(chain.last().unwrap(), s, &rng.direction(domain.dim())));
                if domain.contains(&b) {
                    chain.push(b);
                }
            }
            chain
        })
    }

    /// `count` tuples of `k` points each. Tuple `i` uses its own stream, so the
    /// first `n` tuples of a `2n` draw are the `n`-tuple draw.
    pub fn sample_tuples(&self, domain: &DomainSpec, k: usize, count: usize) -> Vec<Vec<Point>> {
        let key = derive_key(self.seed, 0x7475_706c);
        par_map(count, |i| {
            let mut rng = StreamRng::new(key, i as u64);
            (0..k).map(|_| self.sample_point(domain, &mut rng)).collect()
        })
    }
}

/// Stochastic hill climb on one tuple. Each move displaces one point
/// (round-robin) by a Gaussian step scaled to its depth, so near-boundary
/// points move at their own scale; rejected moves halve that point's step.
/// Only strict improvements are kept, so the returned value is attained at
/// the returned tuple.
pub(crate) fn polish<F>(domain: &DomainSpec, start: Vec<Point>, steps: usize, stream: (u64, u64), f: F) -> Result<(Vec<Point>, f64)>
where
    F: Fn(&[Point]) -> Result<f64>,
{
    let mut best = start;
    let mut val = f(&best)?;
    if steps == 0 || !val.is_finite() {
        return Ok((best, val));
    }
    let mut rng = StreamRng::new(stream.0, stream.1);
    let d = domain.dim();
    let mut scale = vec![0.5; best.len()];
    for step in 0..steps {
        let j = step % best.len();
        let depth = domain.distance(&best[j]);
        let sigma = scale[j] * depth / (d as f64).sqrt();
        let cand: Vec<f64> = best[j].iter().map(|v| v + sigma * rng.normal()).collect();
        let mut improved = false;
        if domain.contains(&cand) && best.iter().enumerate().all(|(i, q)| i == j || dist(q, &cand) > 0.0) {
            let mut t = best.clone();
            t[j] = Point(cand);
            let v = f(&t)?;
            if v > val {
                best = t;
                val = v;
                improved = true;
            }
        }
        if !improved {
            scale[j] *= 0.5;
        }
    }
    Ok((best, val))
}

/// Ten points from `alpha/4` to `alpha`.
pub fn default_gamma_grid(alpha: f64) -> Vec<f64> {
    (0..10).map(|i| alpha / 4.0 + 0.75 * alpha * i as f64 / 9.0).collect()
}

fn check_pair(name: &str, a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    if dist(a, b) == 0.0 {
        return Err(Error::Degenerate(format!("{name} coincide")));
    }
    Ok(())
}

/// `G(x,y,z,w) = G(x,y) G(z,w) / G(x,w)` with the relative errors of the
/// three factors added in quadrature.
pub fn threeg_lhs(green: &dyn GreenEvaluator, x: &[f64], y: &[f64], z: &[f64], w: &[f64]) -> Result<GreenValue> {
    check_pair("x and y", x, y)?;
    check_pair("z and w", z, w)?;
    check_pair("x and w", x, w)?;
    let a = green.eval(x, y)?;
    let b = green.eval(z, w)?;
    let c = green.eval(x, w)?;
    if !(c.value > 0.0) {
        return Err(Error::Degenerate("G(x, w) vanished".into()));
    }
    let value = a.value * b.value / c.value;
    let rel = [a, b, c]
        .iter()
        .map(|g| if g.value > 0.0 { g.err / g.value } else { f64::INFINITY })
        .map(|r| r * r)
        .sum::<f64>()
        .sqrt();
    Ok(GreenValue { value, err: value * rel })
}

/// `H(x,y,z,w) = |x-w|^{d-alpha} / (|x-y|^{d-alpha} |z-w|^{d-alpha})`.
pub fn factor_free_bound(p: &StableParams, x: &[f64], y: &[f64], z: &[f64], w: &[f64]) -> f64 {
    let e = p.df() - p.alpha;
    (dist(x, w) / (dist(x, y) * dist(z, w))).powf(e)
}

/// The two correction bases `(|x-w| ∧ |y-z|)/|x-y| ∨ 1` and
/// `(|x-w| ∧ |y-z|)/|z-w| ∨ 1`.
pub fn correction_bases(x: &[f64], y: &[f64], z: &[f64], w: &[f64]) -> (f64, f64) {
    let m = dist(x, w).min(dist(y, z));
    ((m / dist(x, y)).max(1.0), (m / dist(z, w)).max(1.0))
}

/// Right-hand side of the generalized 3G inequality without its constant.
pub fn threeg_rhs(p: &StableParams, x: &[f64], y: &[f64], z: &[f64], w: &[f64], gamma: f64) -> Result<f64> {
    check_pair("x and y", x, y)?;
    check_pair("z and w", z, w)?;
    check_pair("x and w", x, w)?;
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(invalid("gamma", "must be finite and non-negative"));
    }
    let (f1, f2) = correction_bases(x, y, z, w);
    Ok(f1.powf(gamma) * f2.powf(gamma) * factor_free_bound(p, x, y, z, w))
}

/// `|x-z|^{alpha-d} + |z-w|^{alpha-d}`, the classical 3G majorant.
pub fn classical_bound(p: &StableParams, x: &[f64], z: &[f64], w: &[f64]) -> f64 {
    let e = p.alpha - p.df();
    dist(x, z).powf(e) + dist(z, w).powf(e)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRecord {
    pub x: Point,
    pub y: Point,
    pub z: Point,
    pub w: Point,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub gamma_used: f64,
    pub green_source: GreenSource,
    /// Relative error of `lhs` from the Green evaluator.
    pub rel_err: f64,
}

/// Per-tuple quantities that do not depend on gamma.
#[derive(Debug, Clone, Copy, PartialEq)]
struct QuadEval {
    lhs: f64,
    rel_err: f64,
    h: f64,
    /// `ln f1 + ln f2 >= 0`, so `rhs(gamma) = h exp(gamma log_factor)`.
    log_factor: f64,
}

impl QuadEval {
    fn ratio(&self, gamma: f64) -> f64 {
        self.lhs / (self.h * (gamma * self.log_factor).exp())
    }
}

fn eval_quadruple(green: &dyn GreenEvaluator, p: &StableParams, t: &[Point]) -> Result<QuadEval> {
    let (x, y, z, w) = (&t[0], &t[1], &t[2], &t[3]);
    let lhs = threeg_lhs(green, x, y, z, w)?;
    let (f1, f2) = correction_bases(x, y, z, w);
    Ok(QuadEval {
        lhs: lhs.value,
        rel_err: lhs.err / lhs.value,
        h: factor_free_bound(p, x, y, z, w),
        log_factor: f1.ln() + f2.ln(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaFit {
    pub gamma: f64,
    pub fit: SupFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Empirical sup of the ratio at `gamma_used`.
    pub c_hat: f64,
    /// Least grid gamma whose sup is stable, if any.
    pub gamma_hat: Option<f64>,
    /// Spacing of the gamma grid.
    pub gamma_resolution: f64,
    /// Gamma whose sup is reported as `c_hat` and `stability_curve`.
    pub gamma_used: f64,
    pub n_tuples: usize,
    pub stability_curve: Vec<CurvePoint>,
    pub stable: bool,
    pub per_gamma: Vec<GammaFit>,
    /// Tuples whose ratio carries more than 20% Monte Carlo error.
    pub noisy: usize,
    pub caveat: String,
}

fn grid_resolution(grid: &[f64]) -> f64 {
    grid.windows(2).map(|w| (w[1] - w[0]).abs()).fold(f64::INFINITY, f64::min)
}

/// Generalized 3G fit over `2 n_tuples` boundary-biased quadruples.
///
/// `c_hat` and the stability curve refer to `report_gamma` when given, else
/// to `gamma_hat`, else to the largest grid value.
pub fn fit_3g(
    green: &dyn GreenEvaluator,
    p: &StableParams,
    domain: &DomainSpec,
    sampler: &SamplerConfig,
    gamma_grid: &[f64],
    report_gamma: Option<f64>,
) -> Result<(FitReport, Vec<RatioRecord>)> {
    sampler.validate()?;
    let mut grid: Vec<f64> = gamma_grid.to_vec();
    if let Some(g) = report_gamma {
        if !grid.contains(&g) {
            grid.push(g);
        }
    }
    if grid.is_empty() || grid.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
        return Err(invalid("gamma_grid", "needs finite non-negative entries"));
    }
    grid.sort_by(f64::total_cmp);
    // polish toward the smallest gamma of interest, where the ratio is largest
    let target = report_gamma.unwrap_or(grid[0]);
    let key = derive_key(sampler.seed, 0x706f_6c34);
    let raw = sampler.sample_tuples(domain, 4, 2 * sampler.n_tuples);
    let tuples = par_map(raw.len(), |i| {
        polish(domain, raw[i].clone(), sampler.polish_steps, (key, i as u64), |t| {
            Ok(eval_quadruple(green, p, t)?.ratio(target))
        })
        .map(|(t, _)| t)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let evals = par_map(tuples.len(), |i| eval_quadruple(green, p, &tuples[i]))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let per_gamma: Vec<GammaFit> = grid
        .iter()
        .map(|&gamma| {
            let vals: Vec<f64> = evals.iter().map(|e| e.ratio(gamma)).collect();
            GammaFit { gamma, fit: SupFit::from_values(&vals) }
        })
        .collect();
    let gamma_hat = per_gamma.iter().find(|g| g.fit.stable).map(|g| g.gamma);
    let gamma_used = report_gamma.or(gamma_hat).unwrap_or(*grid.last().unwrap());
    let chosen = per_gamma.iter().find(|g| g.gamma == gamma_used).unwrap();
    let noisy = evals.iter().filter(|e| !(e.rel_err <= NOISE_TOL)).count();
    let records = tuples
        .iter()
        .zip(&evals)
        .map(|(t, e)| {
            let rhs = e.h * (gamma_used * e.log_factor).exp();
            RatioRecord {
                x: t[0].clone(),
                y: t[1].clone(),
                z: t[2].clone(),
                w: t[3].clone(),
                lhs: e.lhs,
                rhs,
                ratio: e.lhs / rhs,
                gamma_used,
                green_source: green.source(),
                rel_err: e.rel_err,
            }
        })
        .collect();
    let report = FitReport {
        c_hat: chosen.fit.sup,
        gamma_hat,
        gamma_resolution: grid_resolution(&grid),
        gamma_used,
        n_tuples: sampler.n_tuples,
        stability_curve: chosen.fit.curve.clone(),
        stable: chosen.fit.stable,
        per_gamma,
        noisy,
        caveat: caveat(sampler.n_tuples),
    };
    Ok((report, records))
}

/// Classical 3G: sup of `G(x,z)G(z,w) / (G(x,w)(|x-z|^{alpha-d} + |z-w|^{alpha-d}))`
/// over `2 n_tuples` boundary-biased triples `(x, z, w)`.
pub fn fit_classical_3g(
    green: &dyn GreenEvaluator,
    p: &StableParams,
    domain: &DomainSpec,
    sampler: &SamplerConfig,
) -> Result<(FitReport, Vec<RatioRecord>)> {
    sampler.validate()?;
    let key = derive_key(sampler.seed, 0x706f_6c33);
    let raw = sampler.sample_tuples(domain, 3, 2 * sampler.n_tuples);
    let tuples = par_map(raw.len(), |i| {
        polish(domain, raw[i].clone(), sampler.polish_steps, (key, i as u64), |t| {
            Ok(threeg_lhs(green, &t[0], &t[1], &t[1], &t[2])?.value / classical_bound(p, &t[0], &t[1], &t[2]))
        })
        .map(|(t, _)| t)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let evals = par_map(tuples.len(), |i| {
        let (x, z, w) = (&tuples[i][0], &tuples[i][1], &tuples[i][2]);
        let lhs = threeg_lhs(green, x, z, z, w)?;
        Ok((lhs, classical_bound(p, x, z, w)))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let vals: Vec<f64> = evals.iter().map(|(l, r)| l.value / r).collect();
    let fit = SupFit::from_values(&vals);
    let noisy = evals.iter().filter(|(l, _)| !(l.err <= NOISE_TOL * l.value)).count();
    let records = tuples
        .iter()
        .zip(&evals)
        .map(|(t, (l, r))| RatioRecord {
            x: t[0].clone(),
            y: t[1].clone(),
            z: t[1].clone(),
            w: t[2].clone(),
            lhs: l.value,
            rhs: *r,
            ratio: l.value / r,
            gamma_used: 0.0,
            green_source: green.source(),
            rel_err: l.err / l.value,
        })
        .collect();
    let report = FitReport {
        c_hat: fit.sup,
        gamma_hat: None,
        gamma_resolution: 0.0,
        gamma_used: 0.0,
        n_tuples: sampler.n_tuples,
        stability_curve: fit.curve.clone(),
        stable: fit.stable,
        per_gamma: vec![GammaFit { gamma: 0.0, fit }],
        noisy,
        caveat: caveat(sampler.n_tuples),
    };
    Ok((report, records))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleRow {
    pub delta: f64,
    pub separation: f64,
    pub x: Point,
    pub y: Point,
    pub z: Point,
    pub w: Point,
    pub lhs: f64,
    pub h: f64,
    /// `lhs / H`, the ratio with the correction factors deleted.
    pub ratio_free: f64,
    /// `lhs / rhs` with the factors at `gamma`.
    pub ratio_gamma: f64,
    pub gamma: f64,
}

/// Point of the `(e0, e1)` plane at distance `radius` from `center`.
fn on_circle(center: &[f64], radius: f64, angle: f64) -> Point {
    let mut p = center.to_vec();
    p[0] += radius * angle.cos();
    p[1] += radius * angle.sin();
    Point(p)
}

/// Angle subtending a chord of length `c` on a circle of radius `r`.
fn chord_angle(c: f64, r: f64) -> f64 {
    2.0 * (0.5 * c / r).asin()
}

/// Configuration showing that the correction factors cannot be dropped.
///
/// All four points sit at depth `delta` in the `(e0, e1)` plane: `x` and `w`
/// are `separation` apart, and `y`, `z` lie `delta/2` from `x`, `w` toward the
/// middle. Then `r(x,y) = rho(x) = rho(y) >= |x-y|` and likewise for `(z, w)`,
/// so the factor-free ratio grows like `(|x-w|/delta)^alpha`.
pub fn counterexample_sweep(
    p: &StableParams,
    domain: &DomainSpec,
    deltas: &[f64],
    separation: f64,
    gamma: f64,
) -> Result<Vec<CounterexampleRow>> {
    let (center, radius) = match domain.shape() {
        Shape::Ball { center, radius } => (center.clone(), *radius),
        _ => return Err(invalid("domain", "the sweep uses the closed-form ball oracle")),
    };
    if p.d < 2 {
        return Err(invalid("d", "the configuration needs d >= 2"));
    }
    let oracle = BallOracle::new(*p, domain)?;
    deltas
        .iter()
        .map(|&delta| {
            if !(delta > 0.0 && 2.0 * delta < separation && separation < 2.0 * (radius - delta)) {
                return Err(invalid(
                    "delta",
                    format!("need 0 < 2 delta < separation < 2(radius - delta), got delta = {delta}"),
                ));
            }
            let rr = radius - delta;
            let half = 0.5 * chord_angle(separation, rr);
            let step = chord_angle(0.5 * delta, rr);
            let x = on_circle(&center, rr, -half);
            let y = on_circle(&center, rr, -half + step);
            let z = on_circle(&center, rr, half - step);
            let w = on_circle(&center, rr, half);
            let lhs = threeg_lhs(&oracle, &x, &y, &z, &w)?.value;
            let h = factor_free_bound(p, &x, &y, &z, &w);
            let rhs = threeg_rhs(p, &x, &y, &z, &w, gamma)?;
            Ok(CounterexampleRow {
                delta,
                separation,
                x,
                y,
                z,
                w,
                lhs,
                h,
                ratio_free: lhs / h,
                ratio_gamma: lhs / rhs,
                gamma,
            })
        })
        .collect()
}

/// `2^{-k}` for `k` in `k_min..=k_max`.
pub fn dyadic_deltas(k_min: i32, k_max: i32) -> Vec<f64> {
    (k_min..=k_max).map(|k| 0.5f64.powi(k)).collect()
}

pub fn strictly_increasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] > w[0])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub q: Point,
    pub r: f64,
    pub s_grid: Vec<f64>,
    /// `u(A_s(Q))` on `s_grid`.
    pub values: Vec<f64>,
    pub rel_errs: Vec<f64>,
    /// Log-log slope of `u(A_s)/u(A_r)` against `s/r`.
    pub gamma_fit: f64,
    /// Largest `c` with `u(A_s) >= c (s/r)^{gamma_fit} u(A_r)` on the grid.
    pub c_fit: f64,
    pub r_squared: f64,
    pub alpha: f64,
    /// `alpha - gamma_fit`.
    pub margin: f64,
    pub kappa: f64,
    /// Smallest and largest `u(A_{s_i}) / u(A_{s_{i+1}})` between grid neighbours.
    pub harnack_band: (f64, f64),
    /// R^2 below 0.9: noise dominates the fit.
    pub noisy: bool,
}

/// Boundary growth of `u = G_D(., z0)` along corkscrew points `A_s(Q)`.
pub fn growth_check(
    green: &dyn GreenEvaluator,
    p: &StableParams,
    domain: &DomainSpec,
    frame: &ReferenceFrame,
    q: &[f64],
    r: f64,
    s_grid: &[f64],
) -> Result<GrowthReport> {
    if s_grid.len() < 3 {
        return Err(invalid("s_grid", "need at least three radii"));
    }
    if s_grid.iter().any(|s| !(*s > 0.0 && *s <= r)) {
        return Err(invalid("s_grid", "radii must lie in (0, r]"));
    }
    let u = |s: f64| -> Result<GreenValue> {
        let a = domain.corkscrew(q, s, &frame.kfat)?;
        green.eval(&a, &frame.z0)
    };
    let ur = u(r)?;
    let vals = par_map(s_grid.len(), |i| u(s_grid[i])).into_iter().collect::<Result<Vec<_>>>()?;
    if vals.iter().chain([&ur]).any(|v| !(v.value > 0.0)) {
        return Err(Error::Degenerate("u vanished at a corkscrew point".into()));
    }
    let lx: Vec<f64> = s_grid.iter().map(|s| (s / r).ln()).collect();
    let ly: Vec<f64> = vals.iter().map(|v| (v.value / ur.value).ln()).collect();
    let fit = linear_fit(&lx, &ly);
    let gamma_fit = fit.slope;
    let c_fit = lx
        .iter()
        .zip(&ly)
        .map(|(a, b)| (b - gamma_fit * a).exp())
        .fold(f64::INFINITY, f64::min);
    let mut order: Vec<usize> = (0..s_grid.len()).collect();
    order.sort_by(|&i, &j| s_grid[i].total_cmp(&s_grid[j]));
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for w in order.windows(2) {
        let ratio = vals[w[0]].value / vals[w[1]].value;
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    Ok(GrowthReport {
        q: Point(q.to_vec()),
        r,
        s_grid: s_grid.to_vec(),
        values: vals.iter().map(|v| v.value).collect(),
        rel_errs: vals.iter().map(|v| v.err / v.value).collect(),
        gamma_fit,
        c_fit,
        r_squared: fit.r_squared,
        alpha: p.alpha,
        margin: p.alpha - gamma_fit,
        kappa: frame.kfat.kappa,
        harnack_band: (lo, hi),
        noisy: !(fit.r_squared >= 0.9),
    })
}

/// `r 2^{-j}` for `j = 0..n`.
pub fn dyadic_grid(r: f64, n: usize) -> Vec<f64> {
    (0..n).map(|j| r * 0.5f64.powi(j as i32)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarlesonReport {
    pub q: Point,
    pub r: f64,
    pub y: Point,
    pub anchor: Point,
    pub fit: SupFit,
    pub noisy: usize,
    pub caveat: String,
}

/// Sup of `G(x, y) / G(A_r(Q), y)` over `2 n_probe` points `x ∈ D ∩ B(Q, r)`.
pub fn carleson_check(
    green: &dyn GreenEvaluator,
    domain: &DomainSpec,
    frame: &ReferenceFrame,
    q: &[f64],
    r: f64,
    y_far: &[f64],
    n_probe: usize,
    seed: u64,
) -> Result<CarlesonReport> {
    let k = &frame.kfat;
    if !(r > 0.0 && r < k.kappa * k.r_char / 4.0) {
        return Err(invalid("r", format!("need 0 < r < kappa R / 4 = {}", k.kappa * k.r_char / 4.0)));
    }
    if !domain.contains(y_far) || dist(y_far, q) <= 4.0 * r {
        return Err(invalid("y_far", "must lie in D outside the closed ball B(Q, 4r)"));
    }
    if n_probe < 16 {
        return Err(invalid("n_probe", "need at least 16 probes"));
    }
    let anchor = domain.corkscrew(q, r, k)?;
    let base = green.eval(&anchor, y_far)?;
    let key = derive_key(seed, 0x6361_726c);
    let evals = par_map(2 * n_probe, |i| {
        let mut rng = StreamRng::new(key, i as u64);
        let x = loop {
            let x: Vec<f64> = q.iter().zip(rng.in_ball(domain.dim(), r)).map(|(a, b)| a + b).collect();
            if domain.contains(&x) {
                break x;
            }
        };
        green.eval(&x, y_far)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let rel0 = base.err / base.value;
    let vals: Vec<f64> = evals.iter().map(|g| g.value / base.value).collect();
    let noisy = evals.iter().filter(|g| !((g.err / g.value).hypot(rel0) <= NOISE_TOL)).count();
    Ok(CarlesonReport {
        q: Point(q.to_vec()),
        r,
        y: Point(y_far.to_vec()),
        anchor,
        fit: SupFit::from_values(&vals),
        noisy,
        caveat: caveat(n_probe),
    })
}

/// `(a/b ∨ 1) + (a/c ∨ 1) <= 2 (a/b ∨ 1)(a/c ∨ 1)`.
pub fn elementary_ineq_check(a: f64, b: f64, c: f64) -> Result<bool> {
    if !(a > 0.0 && b > 0.0 && c > 0.0) {
        return Err(invalid("a, b, c", "must be positive"));
    }
    let (u, v) = ((a / b).max(1.0), (a / c).max(1.0));
    Ok(u + v <= 2.0 * u * v)
}

/// Sup of `G(x,z1)/G(y,z1) / (G(x,z2)/G(y,z2))` over configurations with
/// `x, y ∉ B̄(Q, r)` and `z1, z2 ∈ B(Q, r/4)`; `Q` on the boundary and `r`
/// below `kappa R / 4`.
pub fn green_quotient_sup(
    green: &dyn GreenEvaluator,
    domain: &DomainSpec,
    frame: &ReferenceFrame,
    sampler: &SamplerConfig,
) -> Result<SupFit> {
    sampler.validate()?;
    let rmax = frame.kfat.kappa * frame.kfat.r_char / 4.0;
    let key = derive_key(sampler.seed, 0x6268_70);
    let d = domain.dim();
    let vals = par_map(2 * sampler.n_tuples, |i| {
        let mut rng = StreamRng::new(key, i as u64);
        let q = domain.sample_boundary(&mut rng);
        let r = rmax * rng.range(0.05, 1.0);
        let inner = |rng: &mut StreamRng| loop {
            let z: Vec<f64> = q.iter().zip(rng.in_ball(d, r / 4.0)).map(|(a, b)| a + b).collect();
            if domain.contains(&z) {
                break z;
            }
        };
        let outer = |rng: &mut StreamRng| loop {
            let x = sampler.sample_point(domain, rng);
            if dist(&x, &q) > r {
                break x;
            }
        };
        let (z1, z2) = (inner(&mut rng), inner(&mut rng));
        let (x, y) = (outer(&mut rng), outer(&mut rng));
        let g = |a: &[f64], b: &[f64]| green.eval(a, b).map(|v| v.value);
        Ok::<_, Error>((g(&x, &z1)? / g(&y, &z1)?) / (g(&x, &z2)? / g(&y, &z2)?))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(SupFit::from_values(&vals))
}

/// Sup-ratio columns of the chain of estimates between the Green function
/// bounds and the generalized 3G inequality, all in terms of
/// `g = G(., z0) ∧ C1` and witness points `A_{a,b}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntermediateReport {
    /// `G(x,y,z,w) / (g(y)g(z)g(A_xw)^2 / (g(A_xy)^2 g(A_zw)^2) · H)`.
    pub intermediate: SupFit,
    /// `(g(x) ∨ g(y)) / g(A_xy)`.
    pub witness_bound: SupFit,
    /// `g(A_xy) / g(A_yz)` on triples with `r(x,z) <= r(y,z)`.
    pub witness_monotone: SupFit,
    /// `g(A_xw)^2 / (g(A_xy)^2 + g(A_yz)^2 + g(A_zw)^2)`.
    pub witness_triangle: SupFit,
    /// `r^gamma / (g(A_r(Q_x)) ∧ g(A_r(Q_y)))` with `r = r(x,y) < eps1`.
    pub floor: SupFit,
    /// `g(A_yz)/g(A_xy) / ((r(y,z)/r(x,y))^gamma ∨ 1)`.
    pub ratio_power: SupFit,
    /// g-expression over `(r(x,w)/r(x,y) ∨ 1)^gamma (r(x,w)/r(z,w) ∨ 1)^gamma`.
    pub factor_xw: SupFit,
    /// g-expression over `(r(y,z)/r(x,y) ∨ 1)^gamma (r(y,z)/r(z,w) ∨ 1)^gamma`.
    pub factor_yz: SupFit,
    /// Green quotient comparison near a boundary point.
    pub green_quotient: SupFit,
    pub gamma: f64,
    pub n_tuples: usize,
    pub noisy: usize,
    pub caveat: String,
}

impl IntermediateReport {
    pub fn columns(&self) -> Vec<(&'static str, &SupFit)> {
        vec![
            ("intermediate", &self.intermediate),
            ("witness_bound", &self.witness_bound),
            ("witness_monotone", &self.witness_monotone),
            ("witness_triangle", &self.witness_triangle),
            ("floor", &self.floor),
            ("ratio_power", &self.ratio_power),
            ("factor_xw", &self.factor_xw),
            ("factor_yz", &self.factor_yz),
            ("green_quotient", &self.green_quotient),
        ]
    }

    pub fn all_stable(&self) -> bool {
        self.columns().iter().all(|(_, f)| f.stable)
    }
}

const NA: f64 = f64::NAN;

/// Columns for one tuple; `NaN` marks a column that does not apply.
fn intermediate_row(
    green: &dyn GreenEvaluator,
    p: &StableParams,
    domain: &DomainSpec,
    frame: &ReferenceFrame,
    t: &[Point],
    gamma: f64,
) -> Result<([f64; 8], bool)> {
    let (x, y, z, w) = (&t[0][..], &t[1][..], &t[2][..], &t[3][..]);
    let g = |a: &[f64]| g_function(green, p, domain, frame, a);
    let wit = |a: &[f64], b: &[f64]| bset_witness(domain, frame, a, b);
    let (axy, azw, axw, ayz) = (wit(x, y)?, wit(z, w)?, wit(x, w)?, wit(y, z)?);
    let (gx, gy, gz) = (g(x)?, g(y)?, g(z)?);
    let (gxy, gzw, gxw, gyz) = (g(&axy)?.value, g(&azw)?.value, g(&axw)?.value, g(&ayz)?.value);
    let lhs = threeg_lhs(green, x, y, z, w)?;
    let noisy = !(lhs.err <= NOISE_TOL * lhs.value)
        || [gx, gy, gz].iter().any(|v| !(v.err <= NOISE_TOL * v.value));
    let (gx, gy, gz) = (gx.value, gy.value, gz.value);
    let expr = gy * gz * gxw * gxw / (gxy * gxy * gzw * gzw);
    let h = factor_free_bound(p, x, y, z, w);
    let intermediate = lhs.value / (expr * h);
    let witness_bound = gx.max(gy) / gxy;
    let rs = |a: &[f64], b: &[f64]| mutual_scale(domain, a, b);
    let (rxy, ryz, rzw, rxw, rxz) = (rs(x, y), rs(y, z), rs(z, w), rs(x, w), rs(x, z));
    let witness_monotone = if rxz <= ryz { gxy / gyz } else { NA };
    let witness_triangle = gxw * gxw / (gxy * gxy + gyz * gyz + gzw * gzw);
    let floor = if rxy < frame.eps1 {
        let corner = |a: &[f64]| -> Result<f64> {
            let q = domain.nearest_boundary_point(a)?;
            Ok(g(&domain.corkscrew(&q, rxy, &frame.kfat)?)?.value)
        };
        rxy.powf(gamma) / corner(x)?.min(corner(y)?)
    } else {
        NA
    };
    let ratio_power = (gyz / gxy) / (ryz / rxy).powf(gamma).max(1.0);
    let pw = |a: f64, b: f64| (a / b).max(1.0).powf(gamma);
    let factor_xw = expr / (pw(rxw, rxy) * pw(rxw, rzw));
    let factor_yz = expr / (pw(ryz, rxy) * pw(ryz, rzw));
    Ok((
        [intermediate, witness_bound, witness_monotone, witness_triangle, floor, ratio_power, factor_xw, factor_yz],
        noisy,
    ))
}

/// All intermediate columns over the given quadruples, read as `2n` tuples
/// for the doubling verdict; the Green quotient column draws its own
/// configurations from `sampler`.
///
/// `frame.c0` must be set (see [`crate::wos::calibrate_c0`]).
pub fn intermediate_bound_check(
    green: &dyn GreenEvaluator,
    p: &StableParams,
    domain: &DomainSpec,
    frame: &ReferenceFrame,
    tuples: &[Vec<Point>],
    sampler: &SamplerConfig,
    gamma: f64,
) -> Result<IntermediateReport> {
    sampler.validate()?;
    if frame.c0.is_none() {
        return Err(invalid("frame.c0", "calibrate C0 first"));
    }
    if tuples.len() < 32 || tuples.iter().any(|t| t.len() != 4) {
        return Err(invalid("tuples", "need at least 32 quadruples"));
    }
    let rows = par_map(tuples.len(), |i| intermediate_row(green, p, domain, frame, &tuples[i], gamma))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let col = |j: usize| SupFit::from_values(&rows.iter().map(|(r, _)| r[j]).collect::<Vec<_>>());
    Ok(IntermediateReport {
        intermediate: col(0),
        witness_bound: col(1),
        witness_monotone: col(2),
        witness_triangle: col(3),
        floor: col(4),
        ratio_power: col(5),
        factor_xw: col(6),
        factor_yz: col(7),
        green_quotient: green_quotient_sup(green, domain, frame, sampler)?,
        gamma,
        n_tuples: tuples.len() / 2,
        noisy: rows.iter().filter(|(_, n)| *n).count(),
        caveat: caveat(tuples.len() / 2),
    })
}

#[cfg(test)]
mod tests;
