//! Closed-form kernels of the rotationally invariant alpha-stable process.
//!
//! Conventions: the Levy density is `A(d,-alpha) |x|^{-d-alpha}`, the jumping
//! kernel is half of it, and the killing density of `D` integrates the Levy
//! density over the complement of `D`.

mod sphere;

use std::f64::consts::PI;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{dist, DomainSpec, Shape};
use crate::quad::{gauss_kronrod, tanh_sinh};
use crate::rng::StreamRng;
use crate::special::{beta_reg_pair, gamma, inv_beta_reg, sphere_area};
use crate::stats::{mean_stderr, par_map, EstimatorResult};

pub use sphere::{char_exponent, CharExponent, SpectralDensity};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct RawStable {
    d: usize,
    alpha: f64,
}

/// `(d, alpha)` with the derived constants evaluated once at construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawStable", into = "RawStable")]
pub struct StableParams {
    pub d: usize,
    pub alpha: f64,
    levy_const: f64,
    green_const: f64,
    poisson_const: f64,
}

impl TryFrom<RawStable> for StableParams {
    type Error = Error;
    fn try_from(r: RawStable) -> Result<Self> {
        Self::new(r.d, r.alpha)
    }
}

impl From<StableParams> for RawStable {
    fn from(p: StableParams) -> Self {
        RawStable { d: p.d, alpha: p.alpha }
    }
}

impl StableParams {
    pub fn new(d: usize, alpha: f64) -> Result<Self> {
        if d < 2 {
            return Err(invalid("d", format!("{d} < 2")));
        }
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(invalid("alpha", format!("{alpha} is outside (0, 2)")));
        }
        let df = d as f64;
        let levy_const = alpha * 2f64.powf(alpha - 1.0) * PI.powf(-0.5 * df) * gamma(0.5 * (df + alpha))
            / gamma(1.0 - 0.5 * alpha);
        let green_const =
            gamma(0.5 * (df - alpha)) / (2f64.powf(alpha) * PI.powf(0.5 * df) * gamma(0.5 * alpha));
        // total mass of the centred Poisson kernel without constant is
        // |S^{d-1}| / 2 * B(alpha/2, 1-alpha/2); the Beta integral is done by
        // quadrature with both endpoint singularities subtracted, since for
        // alpha near 0 or 2 most of the mass sits below double precision.
        let (a, b) = (0.5 * alpha, 1.0 - 0.5 * alpha);
        let ln_dist = |near: f64, far: f64| if near < 0.5 { near.ln() } else { (-far).ln_1p() };
        let beta = tanh_sinh(
            |_u, dl, dr| ((a - 1.0) * ln_dist(dl, dr)).exp_m1() * ((b - 1.0) * ln_dist(dr, dl)).exp_m1() - 1.0,
            0.0,
            1.0,
            0.0,
            1e-15,
            14,
        );
        let beta_value = beta.value + 1.0 / a + 1.0 / b;
        let beta_err = beta.abs_err / beta_value;
        if beta_err > 1e-10 {
            return Err(Error::Quadrature { context: "poisson normalisation", rel_err: beta_err, tol: 1e-10 });
        }
        let poisson_const = 2.0 / (sphere_area(d) * beta_value);
        Ok(Self { d, alpha, levy_const, green_const, poisson_const })
    }

    pub fn df(&self) -> f64 {
        self.d as f64
    }

    /// `A(d, -alpha)`.
    pub fn levy_const(&self) -> f64 {
        self.levy_const
    }

    /// Constant of the whole-space Green function `C |x-y|^{alpha-d}`.
    pub fn green_const(&self) -> f64 {
        self.green_const
    }

    /// Normalising constant of the ball Poisson kernel.
    pub fn poisson_const(&self) -> f64 {
        self.poisson_const
    }

    pub(crate) fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.d {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.d, got: x.len() })
        }
    }
}

/// `A(d, -alpha) = alpha 2^{alpha-1} pi^{-d/2} Gamma((d+alpha)/2) / Gamma(1-alpha/2)`.
pub fn riesz_constant(p: &StableParams) -> f64 {
    p.levy_const
}

/// The stable Levy density at distance `r`.
pub fn levy_density(p: &StableParams, r: f64) -> f64 {
    p.levy_const * r.powf(-p.df() - p.alpha)
}

/// `J(x, y) = A(d,-alpha) / 2 * |x-y|^{-(d+alpha)}`.
pub fn jump_density(p: &StableParams, x: &[f64], y: &[f64]) -> Result<f64> {
    p.check_dim(x)?;
    p.check_dim(y)?;
    let r = dist(x, y);
    if r == 0.0 {
        return Err(Error::Degenerate("jump density at x = y".into()));
    }
    Ok(0.5 * levy_density(p, r))
}

/// Whole-space Green function `C |x-y|^{alpha-d}`.
pub fn riesz_green(p: &StableParams, x: &[f64], y: &[f64]) -> Result<f64> {
    p.check_dim(x)?;
    p.check_dim(y)?;
    if p.alpha >= p.df() {
        return Err(invalid("alpha", "whole-space Green function needs alpha < d"));
    }
    let r = dist(x, y);
    if r == 0.0 {
        return Err(Error::Degenerate("Green function at x = y".into()));
    }
    Ok(p.green_const * r.powf(p.alpha - p.df()))
}

/// Options for integrals over the complement of a domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExteriorOptions {
    /// Monte Carlo sample count for shapes without a radial reduction.
    pub n_samples: usize,
    pub seed: u64,
    /// Relative tolerance demanded of the quadrature path.
    pub rel_tol: f64,
}

impl Default for ExteriorOptions {
    fn default() -> Self {
        Self { n_samples: 100_000, seed: 0, rel_tol: 1e-6 }
    }
}

/// Integral over the complement of `D` of `g(|x-y|) |x-y|^{-d-alpha} dy`,
/// given `tail(t) = int_t^inf g(s) s^{-1-alpha} ds`.
///
/// Balls reduce to a one-dimensional angular integral of `tail` evaluated at
/// the exit distance along each direction. Other shapes use Monte Carlo in
/// polar coordinates around `x`: radii on `[rho(x), R_big]` drawn with density
/// proportional to `s^{-1-alpha}`, plus `tail(R_big)` for the far field.
pub fn exterior_integral<G, T>(
    p: &StableParams,
    domain: &DomainSpec,
    x: &[f64],
    g: G,
    tail: T,
    opts: &ExteriorOptions,
) -> Result<EstimatorResult>
where
    G: Fn(f64) -> f64 + Sync,
    T: Fn(f64) -> Result<f64> + Sync,
{
    p.check_dim(x)?;
    if x.len() != domain.dim() {
        return Err(Error::DimensionMismatch { expected: domain.dim(), got: x.len() });
    }
    let bd = domain.rho(x);
    if !bd.inside || bd.distance <= 0.0 {
        return Err(Error::OutsideDomain(format!("{x:?}")));
    }
    let start = Instant::now();
    if let Shape::Ball { center, radius } = domain.shape() {
        let a = dist(x, center);
        let r = *radius;
        let d = p.d;
        let mut failure = None;
        let res = gauss_kronrod(
            |phi: f64| {
                let (s, c) = phi.sin_cos();
                // exit distance along the direction at angle phi from x - center
                let t = (r - a) * (r + a) / (a * c + (r * r - a * a * s * s).sqrt());
                let w = if d == 2 { 1.0 } else { s.powi(d as i32 - 2) };
                match tail(t) {
                    Ok(v) => w * v,
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                }
            },
            0.0,
            PI,
            0.0,
            0.01 * opts.rel_tol,
            400,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        if res.rel_err() > opts.rel_tol {
            return Err(Error::Quadrature { context: "exterior angular integral", rel_err: res.rel_err(), tol: opts.rel_tol });
        }
        let omega = sphere_area(d - 1);
        return Ok(EstimatorResult {
            value: p.levy_const * omega * res.value,
            stderr: p.levy_const * omega * res.abs_err,
            n_samples: res.evals,
            seed: 0,
            walltime: start.elapsed().as_secs_f64(),
        });
    }
    let rho = bd.distance;
    let (lo, hi) = domain.bounding_box();
    // farthest bounding-box corner bounds every point of D
    let r_big = (0..x.len())
        .map(|i| {
            let e = (x[i] - lo[i]).abs().max((hi[i] - x[i]).abs());
            e * e
        })
        .sum::<f64>()
        .sqrt()
        * (1.0 + 1e-9);
    let alpha = p.alpha;
    let z = (rho.powf(-alpha) - r_big.powf(-alpha)) / alpha;
    let n = opts.n_samples.max(2);
    let samples = par_map(n, |i| {
        let mut rng = StreamRng::new(opts.seed, i as u64);
        let theta = rng.direction(p.d);
        let u = rng.open01();
        let s = (rho.powf(-alpha) - u * alpha * z).powf(-1.0 / alpha);
        let y: Vec<f64> = x.iter().zip(&theta).map(|(xi, t)| xi + s * t).collect();
        if domain.contains(&y) {
            0.0
        } else {
            z * g(s)
        }
    });
    let (m, se) = mean_stderr(&samples);
    let omega = sphere_area(p.d);
    let far = tail(r_big)?;
    Ok(EstimatorResult {
        value: p.levy_const * omega * (m + far),
        stderr: p.levy_const * omega * se,
        n_samples: n,
        seed: opts.seed,
        walltime: start.elapsed().as_secs_f64(),
    })
}

/// `kappa_D(x) = A(d,-alpha) int_{D^c} |x-y|^{-d-alpha} dy`.
pub fn killing_density(
    p: &StableParams,
    domain: &DomainSpec,
    x: &[f64],
    opts: &ExteriorOptions,
) -> Result<EstimatorResult> {
    let alpha = p.alpha;
    exterior_integral(p, domain, x, |_| 1.0, |t| Ok(t.powf(-alpha) / alpha), opts)
}

fn check_ball_args(p: &StableParams, center: &[f64], r: f64) -> Result<()> {
    p.check_dim(center)?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid("r", "radius must be positive"));
    }
    Ok(())
}

/// Poisson kernel of `B(center, r)`:
/// `c1 (r^2-|x-c|^2)^{a/2} (|z-c|^2-r^2)^{-a/2} |x-z|^{-d}`.
pub fn ball_poisson_kernel(p: &StableParams, center: &[f64], r: f64, x: &[f64], z: &[f64]) -> Result<f64> {
    check_ball_args(p, center, r)?;
    p.check_dim(x)?;
    p.check_dim(z)?;
    let (dx, dz) = (dist(x, center), dist(z, center));
    if dx >= r {
        return Err(Error::OutsideDomain(format!("x must lie in the open ball, |x-c| = {dx}")));
    }
    if dz <= r {
        return Err(Error::OutsideDomain(format!("z must lie outside the closed ball, |z-c| = {dz}")));
    }
    let inner = (r - dx) * (r + dx);
    let outer = (dz - r) * (dz + r);
    let h = 0.5 * p.alpha;
    Ok(p.poisson_const * (inner / outer).powf(h) * dist(x, z).powf(-p.df()))
}

/// Poisson kernel of `B(c, r)` at `x = c` and `|z - c| = r + gap`. Taking the
/// gap directly keeps the boundary singularity resolvable below one ulp of `r`.
pub fn centred_poisson_kernel(p: &StableParams, r: f64, gap: f64) -> Result<f64> {
    if !(r > 0.0 && gap > 0.0) {
        return Err(invalid("gap", "need r > 0 and gap > 0"));
    }
    let s = r + gap;
    Ok(p.poisson_const * r.powf(p.alpha) * (gap * (2.0 * r + gap)).powf(-0.5 * p.alpha) * s.powf(-p.df()))
}

/// `P(|X_exit - c| <= s)` for the walk started at the centre of `B(c, r)`:
/// `1 - I_{(r/s)^2}(alpha/2, 1-alpha/2)`.
pub fn ball_exit_radial_cdf(p: &StableParams, r: f64, s: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(invalid("r", "radius must be positive"));
    }
    if !(s >= r) {
        return Err(invalid("s", format!("{s} is below the radius {r}")));
    }
    if s.is_infinite() {
        return Ok(1.0);
    }
    let y = (r / s) * (r / s);
    let one_minus = (s - r) * (s + r) / (s * s);
    let h = 0.5 * p.alpha;
    Ok(beta_reg_pair(1.0 - h, h, one_minus, y))
}

/// Density of the exit radius from the centre:
/// `2 r^alpha (s^2-r^2)^{-alpha/2} s^{-1} / B(alpha/2, 1-alpha/2)`.
pub fn ball_exit_radial_density(p: &StableParams, r: f64, s: f64) -> Result<f64> {
    if !(s > r && r > 0.0) {
        return Err(invalid("s", "density needs s > r > 0"));
    }
    let h = 0.5 * p.alpha;
    let b = PI / (PI * h).sin();
    Ok(2.0 * r.powf(p.alpha) * ((s - r) * (s + r)).powf(-h) / (s * b))
}

/// Exit radius with `cdf(s) = 1 - v`, i.e. `I_{(r/s)^2}(alpha/2, 1-alpha/2) = v`.
pub fn ball_exit_radius_quantile(p: &StableParams, r: f64, v: f64) -> f64 {
    let h = 0.5 * p.alpha;
    let (y, _) = inv_beta_reg(h, 1.0 - h, v);
    r / y.sqrt()
}

/// Green function of `B(center, r)` in closed form:
/// `C |x-y|^{alpha-d} I_{w/(1+w)}(alpha/2, (d-alpha)/2)` with
/// `w = (r^2-|x-c|^2)(r^2-|y-c|^2) / (r^2 |x-y|^2)`.
pub fn ball_green_at(p: &StableParams, center: &[f64], r: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    check_ball_args(p, center, r)?;
    p.check_dim(x)?;
    p.check_dim(y)?;
    let (dx, dy) = (dist(x, center), dist(y, center));
    if dx >= r || dy >= r {
        return Err(Error::OutsideDomain("both points must lie in the open ball".into()));
    }
    let e = dist(x, y);
    if e == 0.0 {
        return Err(Error::Degenerate("Green function at x = y".into()));
    }
    Ok(ball_green_unchecked(p, r, dx, dy, e))
}

/// Same as [`ball_green_at`] from precomputed distances; no validation.
pub(crate) fn ball_green_unchecked(p: &StableParams, r: f64, dx: f64, dy: f64, e: f64) -> f64 {
    let num = (r - dx) * (r + dx) * (r - dy) * (r + dy);
    let den = r * r * e * e;
    // w/(1+w) and 1/(1+w) without cancellation
    let t = num / (num + den);
    let tc = den / (num + den);
    p.green_const * e.powf(p.alpha - p.df()) * beta_reg_pair(0.5 * p.alpha, 0.5 * (p.df() - p.alpha), t, tc)
}

/// Green function of the origin-centred ball of radius `r`.
pub fn ball_green(p: &StableParams, r: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    ball_green_at(p, &vec![0.0; p.d], r, x, y)
}

/// Martin kernel of `B(center, r)` normalised at `x0`:
/// `M(x, z) = [(r^2-|x-c|^2)^{a/2} |x-z|^{-d}] / [(r^2-|x0-c|^2)^{a/2} |x0-z|^{-d}]`.
pub fn ball_martin_kernel(
    p: &StableParams,
    center: &[f64],
    r: f64,
    x0: &[f64],
    x: &[f64],
    z: &[f64],
) -> Result<f64> {
    check_ball_args(p, center, r)?;
    let (dx, d0) = (dist(x, center), dist(x0, center));
    if dx >= r || d0 >= r {
        return Err(Error::OutsideDomain("x and x0 must lie in the open ball".into()));
    }
    if (dist(z, center) - r).abs() > 1e-9 * r {
        return Err(Error::OutsideDomain("z must lie on the sphere".into()));
    }
    let h = 0.5 * p.alpha;
    let d = p.df();
    let num = ((r - dx) * (r + dx)).powf(h) * dist(x, z).powf(-d);
    let den = ((r - d0) * (r + d0)).powf(h) * dist(x0, z).powf(-d);
    Ok(num / den)
}
