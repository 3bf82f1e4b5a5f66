//! Walk-on-spheres for the killed stable process.
//!
//! A stable process leaves a ball by a jump, and the exit position from the
//! centre has a closed-form law. Chaining exact ball exits from the largest
//! ball inside `D` therefore reproduces the exit position from `D` exactly: the
//! first sampled point outside `D` *is* `X_{tau_D}`. The Green function is
//! recovered from the telescoping identity
//! `G_D(x, y) = E sum_k G_{B_k}(x_k, y)`.

use serde::{Deserialize, Serialize};
use std::time::Instant;

use crate::error::{invalid, Error, Result};
use crate::geometry::{dist, DomainSpec, Point, ReferenceFrame};
use crate::kernels::{ball_exit_radius_quantile, ball_green_unchecked, StableParams};
use crate::rng::{derive_key, StreamRng};
use crate::stats::{mean_stderr, pairwise_sum, par_map, EstimatorResult};

/// Default singularity guard: a walk whose random centre comes this close to
/// `y` would add an unbounded summand, so it is redrawn from a fresh stream.
pub const SINGULARITY_GUARD: f64 = 1e-9;

/// Redraws allowed per walk before giving up.
const MAX_RESAMPLES: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkOptions {
    /// Ball radius is `theta * rho(x_k)`, `0 < theta <= 1`.
    pub theta: f64,
    pub max_steps: usize,
    #[serde(default = "default_guard")]
    pub guard: f64,
}

fn default_guard() -> f64 {
    SINGULARITY_GUARD
}

impl Default for WalkOptions {
    fn default() -> Self {
        Self { theta: 1.0, max_steps: 10_000, guard: SINGULARITY_GUARD }
    }
}

impl WalkOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(invalid("theta", "safety factor must lie in (0, 1]"));
        }
        if self.max_steps == 0 {
            return Err(invalid("max_steps", "must be at least 1"));
        }
        if !(self.guard >= 0.0) {
            return Err(invalid("guard", "must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub center: Point,
    pub radius: f64,
    pub exit: Point,
}

/// One trajectory. When `truncated` is false, `exit_point` lies outside `D`
/// and every earlier exit lies inside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpChain {
    pub steps: Vec<Step>,
    pub exit_point: Point,
    pub n_steps: usize,
    pub truncated: bool,
}

/// Exit position from `B(center, r)` for the process started at `center`.
///
/// The radius is drawn by inverting the radial CDF, the direction uniformly.
pub fn sample_ball_exit(p: &StableParams, center: &[f64], r: f64, rng: &mut StreamRng) -> Point {
    let mut s = ball_exit_radius_quantile(p, r, rng.open01());
    let u = rng.direction(center.len());
    // the exit is strictly outside the ball, also after rounding; r may be
    // below one ulp of the centre's coordinates, so the nudge grows geometrically
    let mut bump = f64::EPSILON * s;
    loop {
        let z: Vec<f64> = center.iter().zip(&u).map(|(c, v)| c + s * v).collect();
        if dist(&z, center) > r {
            return Point(z);
        }
        s += bump;
        bump *= 2.0;
    }
}

/// Run one walk, calling `visit(step, center, radius)` before each ball exit;
/// a `false` from `visit` aborts the walk.
/// Returns the final position and whether the walk was cut at `max_steps`.
fn walk_with<V: FnMut(usize, &[f64], f64) -> bool>(
    p: &StableParams,
    domain: &DomainSpec,
    x: &[f64],
    rng: &mut StreamRng,
    opts: &WalkOptions,
    mut visit: V,
) -> (Vec<f64>, usize, bool) {
    let mut pos = x.to_vec();
    for k in 0..opts.max_steps {
        let bd = domain.rho(&pos);
        if !bd.inside || bd.distance <= 0.0 {
            return (pos, k, false);
        }
        let r = opts.theta * bd.distance;
        if !visit(k, &pos, r) {
            return (pos, k, false);
        }
        pos = sample_ball_exit(p, &pos, r, rng).0;
    }
    let done = !domain.contains(&pos);
    (pos, opts.max_steps, !done)
}

fn check_start(p: &StableParams, domain: &DomainSpec, x: &[f64]) -> Result<()> {
    p.check_dim(x)?;
    if domain.dim() != p.d {
        return Err(Error::DimensionMismatch { expected: p.d, got: domain.dim() });
    }
    if !domain.contains(x) {
        return Err(Error::OutsideDomain(format!("walk start {x:?}")));
    }
    Ok(())
}

/// Simulate the killed process from `x` until it leaves `D`.
pub fn run_walk(
    p: &StableParams,
    domain: &DomainSpec,
    x: &[f64],
    rng: &mut StreamRng,
    opts: &WalkOptions,
) -> Result<JumpChain> {
    check_start(p, domain, x)?;
    opts.validate()?;
    let mut steps = Vec::new();
    let mut pos = x.to_vec();
    for _ in 0..opts.max_steps {
        let bd = domain.rho(&pos);
        let r = opts.theta * bd.distance;
        let exit = sample_ball_exit(p, &pos, r, rng);
        let outside = !domain.contains(&exit);
        steps.push(Step { center: Point(pos), radius: r, exit: exit.clone() });
        pos = exit.0;
        if outside {
            let n = steps.len();
            return Ok(JumpChain { steps, exit_point: Point(pos), n_steps: n, truncated: false });
        }
    }
    let n = steps.len();
    Ok(JumpChain { steps, exit_point: Point(pos), n_steps: n, truncated: true })
}

/// Counters attached to an estimator run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct WalkDiagnostics {
    pub resampled: u64,
    pub truncated: u64,
    pub mean_steps: f64,
}

struct WalkSum {
    values: Vec<f64>,
    steps: usize,
    truncated: bool,
    resampled: u64,
}

/// Per-walk sums of `sum_k G_{B_k}(x_k, y_j)` for several targets at once,
/// with the singularity guard applied to every target.
fn green_sums(
    p: &StableParams,
    domain: &DomainSpec,
    x: &[f64],
    ys: &[&[f64]],
    key: u64,
    walk: u64,
    opts: &WalkOptions,
) -> Result<WalkSum> {
    for attempt in 0..=MAX_RESAMPLES {
        let k = if attempt == 0 { key } else { derive_key(key, attempt) };
        let mut rng = StreamRng::new(k, walk);
        let mut acc = vec![0.0; ys.len()];
        let mut singular = false;
        let (_, steps, truncated) = walk_with(p, domain, x, &mut rng, opts, |k, c, r| {
            for (j, y) in ys.iter().enumerate() {
                let e = dist(c, y);
                // the start is not random; its summand is finite since x != y
                if k > 0 && e < opts.guard {
                    singular = true;
                    return false;
                }
                if e < r {
                    acc[j] += ball_green_unchecked(p, r, 0.0, e, e);
                }
            }
            true
        });
        if !singular {
            return Ok(WalkSum { values: acc, steps, truncated, resampled: attempt });
        }
    }
    Err(Error::Degenerate(format!(
        "walk {walk} hit the singularity guard {MAX_RESAMPLES} times in a row"
    )))
}

fn summarise(
    per_walk: Vec<WalkSum>,
    n_targets: usize,
    seed: u64,
    start: Instant,
) -> (Vec<EstimatorResult>, Vec<Vec<f64>>, WalkDiagnostics) {
    let n = per_walk.len();
    let mut cols = vec![Vec::with_capacity(n); n_targets];
    let mut diag = WalkDiagnostics::default();
    let mut steps = Vec::with_capacity(n);
    for w in &per_walk {
        for (j, v) in w.values.iter().enumerate() {
            cols[j].push(*v);
        }
        diag.resampled += w.resampled;
        diag.truncated += w.truncated as u64;
        steps.push(w.steps as f64);
    }
    diag.mean_steps = pairwise_sum(&steps) / n as f64;
    let wall = start.elapsed().as_secs_f64();
    let res = cols
        .iter()
        .map(|c| {
            let (value, stderr) = mean_stderr(c);
            EstimatorResult { value, stderr, n_samples: n, seed, walltime: wall }
        })
        .collect();
    (res, cols, diag)
}

/// Green function estimate together with walk counters.
pub fn estimate_green_detailed(
    p: &StableParams,
    domain: &DomainSpec,
    x: &[f64],
    y: &[f64],
    n: usize,
    seed: u64,
    opts: &WalkOptions,
) -> Result<(EstimatorResult, WalkDiagnostics)> {
    check_start(p, domain, x)?;
    p.check_dim(y)?;
    opts.validate()?;
    if !domain.contains(y) {
        return Err(Error::OutsideDomain(format!("target {y:?}")));
    }
    if x == y {
        return Err(Error::Degenerate("Green function at x = y".into()));
    }
    if n < 2 {
        return Err(invalid("n", "need at least two walks for a standard error"));
    }
    let start = Instant::now();
    let key = derive_key(seed, 0x6772_6565_6e);
    let walks: Vec<Result<WalkSum>> = par_map(n, |i| green_sums(p, domain, x, &[y], key, i as u64, opts));
    let walks = walks.into_iter().collect::<Result<Vec<_>>>()?;
    let (mut res, _, diag) = summarise(walks, 1, seed, start);
    Ok((res.remove(0), diag))
}

/// `G_D(x, y)` from `n` walks started at `x`.
pub fn estimate_green(
    p: &StableParams,
    domain: &DomainSpec,
    x: &[f64],
    y: &[f64],
    n: usize,
    seed: u64,
    opts: &WalkOptions,
) -> Result<EstimatorResult> {
    Ok(estimate_green_detailed(p, domain, x, y, n, seed, opts)?.0)
}

/// Radial exit harmonic measure from `x`: `n` exit points.
pub fn sample_exits(
    p: &StableParams,
    domain: &DomainSpec,
    x: &[f64],
    n: usize,
    seed: u64,
    opts: &WalkOptions,
) -> Result<Vec<JumpChain>> {
    check_start(p, domain, x)?;
    let key = derive_key(seed, 0x6578_6974);
    par_map(n, |i| run_walk(p, domain, x, &mut StreamRng::new(key, i as u64), opts))
        .into_iter()
        .collect()
}

/// Green constant `C0` of the upper bound `G_B(x, y) <= C0 |x-y|^{alpha-d}`,
/// fitted as the sup of `G_B |x-y|^{d-alpha}` over `n_pairs` pairs of the
/// unit ball drawn from a fixed stream.
pub fn calibrate_c0(p: &StableParams, n_pairs: usize, seed: u64) -> f64 {
    let mut rng = StreamRng::new(derive_key(seed, 0x6330), 0);
    let mut sup = 0.0_f64;
    for _ in 0..n_pairs {
        let x = rng.in_ball(p.d, 1.0);
        let y = rng.in_ball(p.d, 1.0);
        let e = dist(&x, &y);
        if e == 0.0 {
            continue;
        }
        let g = ball_green_unchecked(p, 1.0, crate::geometry::norm(&x), crate::geometry::norm(&y), e);
        sup = sup.max(g * e.powf(p.df() - p.alpha));
    }
    sup
}

/// `C1 = C0 2^{d-alpha} rho(z0)^{alpha-d}`, the cap in `g = G(., z0) ∧ C1`.
pub fn g_cap(p: &StableParams, domain: &DomainSpec, frame: &ReferenceFrame, c0: f64) -> f64 {
    let dz = domain.distance(&frame.z0);
    c0 * 2f64.powf(p.df() - p.alpha) * dz.powf(p.alpha - p.df())
}

/// `g(x) = G_D(x, z0) ∧ C1` with the Green value from walks.
pub fn estimate_g(
    frame: &ReferenceFrame,
    p: &StableParams,
    domain: &DomainSpec,
    x: &[f64],
    n: usize,
    seed: u64,
    opts: &WalkOptions,
) -> Result<EstimatorResult> {
    let c0 = frame.c0.ok_or_else(|| invalid("frame.c0", "calibrate C0 before evaluating g"))?;
    let cap = g_cap(p, domain, frame, c0);
    let mut est = estimate_green(p, domain, x, &frame.z0, n, seed, opts)?;
    if est.value > cap {
        est.value = cap;
        est.stderr = 0.0;
    }
    Ok(est)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartinReport {
    pub estimates: Vec<EstimatorResult>,
    /// Largest pairwise difference among the last three estimates.
    pub cauchy_tail: f64,
    /// Joint standard error of that pair.
    pub tail_stderr: f64,
}

impl MartinReport {
    pub fn stabilised(&self, k: f64) -> bool {
        self.cauchy_tail <= k * self.tail_stderr
    }
}

/// `M_D(x, y_k) = G_D(x, y_k) / G_D(x0, y_k)` along a sequence `y_k`.
///
/// Each ratio uses walks started at `y_k` (by symmetry of `G_D`), scoring
/// both `x` and `x0` on the same walks; the standard error is the delta
/// method with the sample covariance.
pub fn estimate_martin(
    p: &StableParams,
    domain: &DomainSpec,
    x0: &[f64],
    x: &[f64],
    ys: &[Point],
    n: usize,
    seed: u64,
    opts: &WalkOptions,
) -> Result<MartinReport> {
    check_start(p, domain, x0)?;
    check_start(p, domain, x)?;
    opts.validate()?;
    if n < 2 {
        return Err(invalid("n", "need at least two walks"));
    }
    let mut estimates = Vec::with_capacity(ys.len());
    for (k, y) in ys.iter().enumerate() {
        check_start(p, domain, y)?;
        if &y[..] == x || &y[..] == x0 {
            return Err(Error::Degenerate("y coincides with x or x0".into()));
        }
        if x == x0 {
            estimates.push(EstimatorResult { value: 1.0, stderr: 0.0, n_samples: n, seed, walltime: 0.0 });
            continue;
        }
        let start = Instant::now();
        let key = derive_key(derive_key(seed, 0x6d61_7274), k as u64);
        let walks = par_map(n, |i| green_sums(p, domain, y, &[x, x0], key, i as u64, opts))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let (res, cols, _) = summarise(walks, 2, seed, start);
        let (a, b) = (res[0].value, res[1].value);
        if !(b > 0.0) {
            return Err(Error::Degenerate(format!("no walk from y_{k} reached x0")));
        }
        let ratio = a / b;
        let m = n as f64;
        let cov: Vec<f64> = cols[0].iter().zip(&cols[1]).map(|(u, v)| (u - a) * (v - b)).collect();
        let cov = pairwise_sum(&cov) / (m - 1.0);
        let (va, vb) = (res[0].stderr.powi(2) * m, res[1].stderr.powi(2) * m);
        let var = ((va - 2.0 * ratio * cov + ratio * ratio * vb) / (m * b * b)).max(0.0);
        estimates.push(EstimatorResult {
            value: ratio,
            stderr: var.sqrt(),
            n_samples: n,
            seed,
            walltime: start.elapsed().as_secs_f64(),
        });
    }
    let (mut cauchy_tail, mut tail_stderr) = (0.0_f64, 0.0);
    let tail = &estimates[estimates.len().saturating_sub(3)..];
    for i in 0..tail.len() {
        for j in i + 1..tail.len() {
            let diff = (tail[i].value - tail[j].value).abs();
            if diff >= cauchy_tail {
                cauchy_tail = diff;
                tail_stderr = tail[i].stderr.hypot(tail[j].stderr);
            }
        }
    }
    Ok(MartinReport { estimates, cauchy_tail, tail_stderr })
}

#[cfg(test)]
mod tests;
