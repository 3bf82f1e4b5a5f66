//! Characteristic exponent `Phi(xi) = int_{S^{d-1}} |y . xi|^alpha f(y) sigma(dy)`
//! of a stable process with spectral density `f`.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::geometry::norm;
use crate::quad::{gauss_legendre, tanh_sinh};

use super::StableParams;

/// Symmetric density on the unit sphere with two-sided bounds.
#[derive(Clone)]
pub struct SpectralDensity {
    f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    pub lower: f64,
    pub upper: f64,
}

impl fmt::Debug for SpectralDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralDensity")
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .finish()
    }
}

impl SpectralDensity {
    /// Wrap `f`; the caller asserts symmetry and `lower <= f <= upper`.
    pub fn new<F: Fn(&[f64]) -> f64 + Send + Sync + 'static>(f: F, lower: f64, upper: f64) -> Result<Self> {
        if !(lower > 0.0 && upper >= lower && upper.is_finite()) {
            return Err(invalid("spectral bounds", "need 0 < lower <= upper < inf"));
        }
        Ok(Self { f: Arc::new(f), lower, upper })
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::new(move |_| c, c, c)
    }

    /// `1 + height * exp(-(1 - |y . axis|) / width)`: bumps at `±axis`.
    pub fn two_bump(axis: Vec<f64>, height: f64, width: f64) -> Result<Self> {
        let n = norm(&axis);
        if !(n > 0.0) || !(height >= 0.0) || !(width > 0.0) {
            return Err(invalid("two_bump", "need a nonzero axis, height >= 0, width > 0"));
        }
        let axis: Vec<f64> = axis.iter().map(|v| v / n).collect();
        Self::new(
            move |y| {
                let c: f64 = y.iter().zip(&axis).map(|(a, b)| a * b).sum();
                1.0 + height * (-(1.0 - c.abs()) / width).exp()
            },
            1.0,
            1.0 + height,
        )
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        (self.f)(y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharExponent {
    pub value: f64,
    pub err: f64,
}

/// Orthonormal frame whose first vector is `u` (Householder reflection).
fn frame_with_pole(u: &[f64]) -> Vec<Vec<f64>> {
    let d = u.len();
    let mut v = u.to_vec();
    // reflect e_0 onto u; choose the sign that avoids cancellation
    let s = if u[0] >= 0.0 { 1.0 } else { -1.0 };
    v[0] += s;
    let vn2: f64 = v.iter().map(|c| c * c).sum();
    (0..d)
        .map(|j| {
            let mut col: Vec<f64> = (0..d).map(|i| if i == j { 1.0 } else { 0.0 }).collect();
            let proj = v[j] * 2.0 / vn2;
            for i in 0..d {
                col[i] -= proj * v[i];
            }
            // H e_0 = -s u; flip so the first column is u
            if j == 0 {
                for c in &mut col {
                    *c *= -s;
                }
            }
            col
        })
        .collect()
}

/// Quadrature nodes and weights on `S^{k-1}`, built recursively from
/// `y = (u, sqrt(1-u^2) z)` with `z` on `S^{k-2}`.
fn sphere_rule(k: usize, n: usize) -> Vec<(Vec<f64>, f64)> {
    use std::f64::consts::PI;
    match k {
        1 => vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)],
        2 => (0..n)
            .map(|i| {
                let t = 2.0 * PI * (i as f64 + 0.5) / n as f64;
                (vec![t.cos(), t.sin()], 2.0 * PI / n as f64)
            })
            .collect(),
        _ => {
            let inner = sphere_rule(k - 1, n);
            let mut out = Vec::new();
            let push = |c: f64, s: f64, w: f64, out: &mut Vec<(Vec<f64>, f64)>| {
                for (z, wz) in &inner {
                    let mut y = vec![c];
                    y.extend(z.iter().map(|v| v * s));
                    out.push((y, w * wz));
                }
            };
            if k % 2 == 1 {
                // polynomial weight (1-u^2)^{(k-3)/2}: Gauss-Legendre in u
                for (u, w) in gauss_legendre(n / 2) {
                    let s2 = (1.0 - u) * (1.0 + u);
                    push(u, s2.sqrt(), w * s2.powi((k as i32 - 3) / 2), &mut out);
                }
            } else {
                // sin^{k-2} t is even and periodic: midpoint rule in the angle
                let m = n / 2;
                for i in 0..m {
                    let t = PI * (i as f64 + 0.5) / m as f64;
                    let (s, c) = t.sin_cos();
                    push(c, s, s.powi(k as i32 - 2) * PI / m as f64, &mut out);
                }
            }
            out
        }
    }
}

/// Evaluate `Phi(xi)` in polar coordinates about `xi/|xi|`.
///
/// The singular factor `|u|^alpha` sits at the equator `u = 0`; the polar
/// integral is split there and done by tanh-sinh, with the inner sphere
/// integral by a product rule. The error estimate compares against the rule
/// with half the inner nodes.
pub fn char_exponent(p: &StableParams, f: &SpectralDensity, xi: &[f64]) -> Result<CharExponent> {
    p.check_dim(xi)?;
    let d = p.d;
    let r = norm(xi);
    if r == 0.0 {
        return Ok(CharExponent { value: 0.0, err: 0.0 });
    }
    // Phi is even in xi; fix the sign so that xi and -xi share one rule
    let lead = xi.iter().find(|v| **v != 0.0).copied().unwrap_or(1.0);
    let sgn = if lead > 0.0 { 1.0 } else { -1.0 };
    let u: Vec<f64> = xi.iter().map(|v| sgn * v / r).collect();
    let frame = frame_with_pole(&u);
    let e = 0.5 * (d as f64 - 3.0);
    let eval = |n_inner: usize| {
        let inner = sphere_rule(d - 1, n_inner);
        let mut total = 0.0;
        let mut err = 0.0;
        for sign in [1.0, -1.0] {
            let q = tanh_sinh(
                |_t, dl, dr| {
                    // dl = |u|, dr = 1 - |u|
                    let uu = sign * dl;
                    let one_m_u2 = dr * (2.0 - dr);
                    let s = one_m_u2.sqrt();
                    let mut acc = 0.0;
                    for (z, w) in &inner {
                        let mut y = vec![0.0; d];
                        for i in 0..d {
                            let mut c = frame[0][i] * uu;
                            for (j, zj) in z.iter().enumerate() {
                                c += frame[j + 1][i] * s * zj;
                            }
                            y[i] = c;
                        }
                        acc += w * f.eval(&y);
                    }
                    let weight = if e == 0.0 { 1.0 } else { one_m_u2.powf(e) };
                    dl.powf(p.alpha) * weight * acc
                },
                0.0,
                1.0,
                0.0,
                1e-13,
                10,
            );
            total += q.value;
            err += q.abs_err;
        }
        (total, err)
    };
    let n = 128;
    let (v_fine, e_fine) = eval(n);
    let (v_coarse, _) = eval(n / 2);
    let scale = r.powf(p.alpha);
    Ok(CharExponent {
        value: scale * v_fine,
        err: scale * (e_fine + (v_fine - v_coarse).abs()),
    })
}
