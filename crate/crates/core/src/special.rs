//! Special functions: Gamma wrappers, sphere areas and the regularized
//! incomplete beta function with its inverse.
//!
//! The incomplete beta routines take the complement `1 - x` as a separate
//! argument wherever the caller can form it without cancellation, so that
//! tails on both ends keep full relative precision.

use statrs::function::gamma as sg;

pub fn gamma(x: f64) -> f64 {
    sg::gamma(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    sg::ln_gamma(x)
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

pub fn beta(a: f64, b: f64) -> f64 {
    ln_beta(a, b).exp()
}

/// Surface area of the unit sphere `S^{n-1}` in `R^n`; `sphere_area(1) = 2`.
pub fn sphere_area(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(h) / gamma(h)
}

/// Volume of the unit ball in `R^n`.
pub fn ball_volume(n: usize) -> f64 {
    sphere_area(n) / n as f64
}

const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;
const CF_MAX_ITER: usize = 500;

/// Modified Lentz evaluation of the incomplete beta continued fraction.
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)` given both `x` and `y = 1 - x`.
pub fn beta_reg_pair(a: f64, b: f64, x: f64, y: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if y <= 0.0 {
        return 1.0;
    }
    let ln_front = a * x.ln() + b * y.ln() - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_cf(a, b, x) / a
    } else {
        1.0 - ln_front.exp() * beta_cf(b, a, y) / b
    }
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn beta_reg(a: f64, b: f64, x: f64) -> f64 {
    beta_reg_pair(a, b, x, 1.0 - x)
}

/// Density of the Beta(a, b) law at `x` (with `y = 1 - x` supplied).
pub fn beta_density_pair(a: f64, b: f64, x: f64, y: f64) -> f64 {
    ((a - 1.0) * x.ln() + (b - 1.0) * y.ln() - ln_beta(a, b)).exp()
}

/// Solve `I_x(a, b) = p` by safeguarded Newton iteration.
///
/// Returns `(x, 1 - x)`; the branch on the side of `p` closest to a tail is
/// solved in its own variable so both tails keep relative precision.
pub fn inv_beta_reg(a: f64, b: f64, p: f64) -> (f64, f64) {
    if p <= 0.0 {
        return (0.0, 1.0);
    }
    if p >= 1.0 {
        return (1.0, 0.0);
    }
    if p <= 0.5 {
        solve_lower(a, b, p)
    } else {
        let (y, x) = solve_lower(b, a, 1.0 - p);
        (x, y)
    }
}

/// Find x with `I_x(a, b) = p` for `p <= 1/2`; returns `(x, 1 - x)`.
fn solve_lower(a: f64, b: f64, p: f64) -> (f64, f64) {
    let lnb = ln_beta(a, b);
    // small-x asymptotics I_x ~ x^a / (a B(a,b))
    let mut x = ((p * a).ln() + lnb) / a;
    x = x.exp().clamp(1e-300, 0.5);
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    for _ in 0..300 {
        let y = 1.0 - x;
        let f = beta_reg_pair(a, b, x, y) - p;
        if f.abs() <= 1e-15 * p {
            break;
        }
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let dens = beta_density_pair(a, b, x, y);
        let mut next = x - f / dens;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = if lo > 0.0 && hi / lo > 4.0 {
                (lo * hi).sqrt()
            } else if lo == 0.0 {
                hi * 0.5
            } else {
                0.5 * (lo + hi)
            };
        }
        let step = (next - x).abs();
        x = next;
        if step <= 1e-15 * x {
            break;
        }
    }
    (x, 1.0 - x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1) - 2.0).abs() < 1e-14);
        assert!((sphere_area(2) - 2.0 * std::f64::consts::PI).abs() < 1e-13);
        assert!((sphere_area(3) - 4.0 * std::f64::consts::PI).abs() < 1e-13);
    }

    #[test]
    fn beta_reg_closed_forms() {
        // I_x(1/2, 1/2) = (2/pi) asin(sqrt x)
        for &x in &[1e-8, 0.01, 0.3, 0.75, 0.999] {
            let want = 2.0 / std::f64::consts::PI * (x as f64).sqrt().asin();
            let got = beta_reg(0.5, 0.5, x);
            assert!((got - want).abs() < 1e-14 * want.max(1e-300) + 1e-15, "x={x}");
        }
        // I_x(1, b) = 1 - (1-x)^b
        let x = 0.37;
        assert!((beta_reg(1.0, 2.5, x) - (1.0 - (1.0_f64 - x).powf(2.5))).abs() < 1e-14);
    }

    #[test]
    fn inverse_round_trip_tails() {
        for &(a, b) in &[(0.25, 0.75), (0.5, 0.5), (0.75, 0.25)] {
            for &p in &[1e-12, 1e-6, 0.1, 0.5, 0.9, 1.0 - 1e-9] {
                let (x, y) = inv_beta_reg(a, b, p);
                let back = beta_reg_pair(a, b, x, y);
                assert!((back - p).abs() <= 1e-12, "a={a} p={p} back={back}");
            }
        }
    }
}
