//! Kernels of the relativistic alpha-stable process.
//!
//! The Levy density is the stable one tempered by `psi(m^{1/alpha} |x|)`,
//! where `psi(r) = Gamma(k)^{-1} int_0^inf t^{k-1} exp(-t - r^2/(4t)) dt` with
//! `k = (d+alpha)/2` (the `s = 4t` form of the defining integral).

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{dist, norm, DomainSpec};
use crate::kernels::{exterior_integral, killing_density, ExteriorOptions, StableParams};
use crate::quad::{semi_infinite, tanh_sinh, QuadResult};
use crate::special::ln_gamma;
use crate::stats::EstimatorResult;

const PSI_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativisticParams {
    pub base: StableParams,
    pub m: f64,
}

impl RelativisticParams {
    pub fn new(base: StableParams, m: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(invalid("m", "mass must be positive"));
        }
        Ok(Self { base, m })
    }

    /// `m^{1/alpha}`, the factor applied to distances inside `psi`.
    pub fn scale(&self) -> f64 {
        self.m.powf(1.0 / self.base.alpha)
    }

    fn k(&self) -> f64 {
        0.5 * (self.base.df() + self.base.alpha)
    }
}

/// `Gamma(k)^{-1} int_0^inf t^{k-1} e^{-t} h(t) dt` for `h` varying on the
/// scale `e^{-q/t}`. Breakpoints sit at `t = q` and at the peak of
/// `t^{k-1} e^{-t-q/t}`.
fn gamma_weighted<H: Fn(f64) -> f64>(k: f64, q: f64, h: H) -> QuadResult {
    let lg = ln_gamma(k);
    let w = |t: f64| ((k - 1.0) * t.ln() - t - lg).exp() * h(t);
    let peak = 0.5 * ((k - 1.0) + ((k - 1.0).powi(2) + 4.0 * q).sqrt());
    let mut pts = vec![0.0];
    let (lo, hi) = if q < peak { (q, peak) } else { (peak, q) };
    for b in [lo, hi] {
        if b > 0.0 && b.is_finite() && b > 1.0001 * pts[pts.len() - 1] {
            pts.push(b);
        }
    }
    let mut out = QuadResult { value: 0.0, abs_err: 0.0, evals: 0 };
    let mut add = |r: QuadResult| {
        out.value += r.value;
        out.abs_err += r.abs_err;
        out.evals += r.evals;
    };
    for win in pts.windows(2) {
        add(tanh_sinh(|t, _, _| w(t), win[0], win[1], 0.0, 1e-13, 12));
    }
    let last = pts[pts.len() - 1];
    add(semi_infinite(&w, last, last.max(1.0), 0.0, 1e-13));
    out
}

fn finish(q: QuadResult, context: &'static str) -> Result<f64> {
    let (v, err) = (q.value, q.abs_err);
    if err > PSI_TOL * v.abs() && err > 1e-300 {
        return Err(Error::Quadrature { context, rel_err: err / v.abs(), tol: PSI_TOL });
    }
    Ok(v)
}
/// `psi(r)`; equals 1 at 0, decreases to 0.
pub fn psi(p: &RelativisticParams, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(invalid("r", "must be non-negative"));
    }
    let q = 0.25 * r * r;
    finish(gamma_weighted(p.k(), q, |t| (-q / t).exp()), "psi")
}

/// `psi(r) - 1` without cancellation for small `r`.
pub fn psi_minus_one(p: &RelativisticParams, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(invalid("r", "must be non-negative"));
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    let q = 0.25 * r * r;
    finish(gamma_weighted(p.k(), q, |t| (-q / t).exp_m1()), "psi - 1")
}

/// `nu(x) = A(d,-alpha) |x|^{-d-alpha} psi(m^{1/alpha} |x|)`.
pub fn levy_density_relativistic(p: &RelativisticParams, x: &[f64]) -> Result<f64> {
    let r = norm(x);
    if r == 0.0 {
        return Err(Error::Degenerate("Levy density at the origin".into()));
    }
    Ok(crate::kernels::levy_density(&p.base, r) * psi(p, p.scale() * r)?)
}

/// `J^m(x, y) = J(x, y) psi(m^{1/alpha} |x-y|)`.
pub fn jump_density_relativistic(p: &RelativisticParams, x: &[f64], y: &[f64]) -> Result<f64> {
    let j = crate::kernels::jump_density(&p.base, x, y)?;
    Ok(j * psi(p, p.scale() * dist(x, y))?)
}

/// `F^m(x, y) = J^m/J - 1 = psi(m^{1/alpha}|x-y|) - 1`, in `(-1, 0]`.
#[allow(non_snake_case)]
pub fn F_m(p: &RelativisticParams, x: &[f64], y: &[f64]) -> Result<f64> {
    let r = dist(x, y);
    if r == 0.0 {
        return Err(Error::Degenerate("F^m at x = y".into()));
    }
    psi_minus_one(p, p.scale() * r)
}

/// `int_t^inf (psi(c s) - 1) s^{-1-alpha} ds` with `c = m^{1/alpha}`.
///
/// Exchanging the order of integration turns the inner `s`-integral into an
/// upper incomplete Gamma function, leaving one quadrature in the mixing
/// variable:
/// `int_t^inf s^{-1-alpha} (e^{-a s^2} - 1) ds
///   = -(1/alpha) [t^{-alpha} (1 - e^{-a t^2}) + a^{alpha/2} Gamma(1-alpha/2, a t^2)]`
/// with `a = c^2/(4 tau)`.
pub fn psi_tail(p: &RelativisticParams, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(invalid("t", "must be positive"));
    }
    let c = p.scale();
    let alpha = p.base.alpha;
    let beta = 0.5 * alpha;
    let g1 = crate::special::gamma(1.0 - beta);
    let ta = t.powf(-alpha);
    let h = |tau: f64| {
        let a = c * c / (4.0 * tau);
        let x0 = a * t * t;
        // x0 = 0 only at tau = inf, where a^beta vanishes; x0 > 700 leaves e^{-x0} below f64
        let upper = if !(x0 > 0.0) || x0 > 700.0 {
            0.0
        } else {
            a.powf(beta) * g1 * statrs::function::gamma::gamma_ur(1.0 - beta, x0)
        };
        -(ta * (-(-x0).exp_m1()) + upper) / alpha
    };
    finish(gamma_weighted(p.k(), 0.25 * c * c * t * t, h), "psi tail")
}

/// `q^m(x) = A(d,-alpha) int_{D^c} F^m(x,y) |x-y|^{-d-alpha} dy`, non-positive.
pub fn q_m(p: &RelativisticParams, domain: &DomainSpec, x: &[f64], opts: &ExteriorOptions) -> Result<EstimatorResult> {
    let c = p.scale();
    let opts = ExteriorOptions { rel_tol: opts.rel_tol.max(1e-5), ..*opts };
    exterior_integral(
        &p.base,
        domain,
        x,
        |s| psi_minus_one(p, c * s).unwrap_or(f64::NAN),
        |t| psi_tail(p, t),
        &opts,
    )
}

/// `kappa^m_D(x) = A(d,-alpha) int_{D^c} psi(m^{1/alpha}|x-y|) |x-y|^{-d-alpha} dy`.
pub fn kappa_m(p: &RelativisticParams, domain: &DomainSpec, x: &[f64], opts: &ExteriorOptions) -> Result<EstimatorResult> {
    let c = p.scale();
    let alpha = p.base.alpha;
    exterior_integral(
        &p.base,
        domain,
        x,
        |s| psi(p, c * s).unwrap_or(f64::NAN),
        // psi = 1 + (psi - 1): the stable tail plus the tempered correction
        |t| Ok(t.powf(-alpha) / alpha + psi_tail(p, t)?),
        opts,
    )
}

/// `kappa_D(x) + q^m(x)`, the same quantity assembled from its two parts.
pub fn kappa_m_by_parts(p: &RelativisticParams, domain: &DomainSpec, x: &[f64], opts: &ExteriorOptions) -> Result<f64> {
    Ok(killing_density(&p.base, domain, x, opts)?.value + q_m(p, domain, x, opts)?.value)
}

/// One row of the kernel table: `psi`, `F^m` and both Levy densities at `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelRow {
    pub r: f64,
    pub psi: f64,
    pub f_m: f64,
    pub levy_relativistic: f64,
    pub levy_stable: f64,
}

/// Summary of the kernel checks on a radial grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    pub rows: Vec<KernelRow>,
    pub psi_at_zero: f64,
    /// `psi` strictly decreasing along the grid.
    pub psi_decreasing: bool,
    /// `sup |F^m| / r^2` over grid radii `<= 1`.
    pub c_fit: f64,
    /// Log-log slope and `R^2` of `|F^m|` against `r` on the small-`r` part,
    /// radii at most `small_r`.
    pub slope: f64,
    pub r_squared: f64,
    /// Relativistic Levy density at most the stable one at every grid point.
    pub dominated: bool,
}

impl KernelReport {
    pub fn passed(&self) -> bool {
        (self.psi_at_zero - 1.0).abs() <= 1e-8
            && self.psi_decreasing
            && self.c_fit.is_finite()
            && self.r_squared >= 0.99
            && self.dominated
    }
}

/// Tabulate the kernels on `grid` (positive, increasing) and fit the
/// quadratic bound on the radii at most `small_r`.
pub fn kernel_report(p: &RelativisticParams, grid: &[f64], small_r: f64) -> Result<KernelReport> {
    if grid.len() < 3 || grid[0] <= 0.0 || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("grid", "need three or more positive increasing radii"));
    }
    let d = p.base.d;
    let rows = grid
        .iter()
        .map(|&r| {
            let mut x = vec![0.0; d];
            x[0] = r;
            Ok(KernelRow {
                r,
                psi: psi(p, p.scale() * r)?,
                f_m: psi_minus_one(p, p.scale() * r)?,
                levy_relativistic: levy_density_relativistic(p, &x)?,
                levy_stable: crate::kernels::levy_density(&p.base, r),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let small: Vec<&KernelRow> = rows.iter().filter(|k| k.r <= small_r && k.f_m < 0.0).collect();
    if small.len() < 3 {
        return Err(invalid("small_r", "fewer than three grid radii in the small-r regime"));
    }
    let lx: Vec<f64> = small.iter().map(|k| k.r.ln()).collect();
    let ly: Vec<f64> = small.iter().map(|k| k.f_m.abs().ln()).collect();
    let fit = crate::stats::linear_fit(&lx, &ly);
    Ok(KernelReport {
        psi_at_zero: psi(p, 0.0)?,
        psi_decreasing: rows.windows(2).all(|w| w[1].psi < w[0].psi),
        c_fit: rows.iter().filter(|k| k.r <= 1.0).map(|k| k.f_m.abs() / (k.r * k.r)).fold(0.0, f64::max),
        slope: fit.slope,
        r_squared: fit.r_squared,
        dominated: rows.iter().all(|k| k.levy_relativistic <= k.levy_stable),
        rows,
    })
}
