//! One-dimensional quadrature.
//!
//! Two schemes: a globally adaptive Gauss-Kronrod (7/15) rule for smooth or
//! piecewise smooth integrands, and tanh-sinh for integrands with algebraic
//! endpoint singularities. The tanh-sinh integrand receives the distances to
//! both endpoints so that factors like `(1 - t)^{-a}` can be formed without
//! cancellation.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_err: f64,
    pub evals: usize,
}

impl QuadResult {
    pub fn rel_err(&self) -> f64 {
        if self.value == 0.0 {
            self.abs_err
        } else {
            self.abs_err / self.value.abs()
        }
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    let k = kron * h;
    let g = gauss * h;
    (k, (k - g).abs())
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.partial_cmp(&other.err).unwrap_or(Ordering::Equal)
    }
}

/// Globally adaptive Gauss-Kronrod integration of `f` over `[a, b]`.
///
/// Subdivides the interval with the largest error estimate until the total
/// estimate is below `max(abs_tol, rel_tol * |I|)` or `max_segments` is hit.
pub fn gauss_kronrod<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_segments: usize,
) -> QuadResult {
    let (v, e) = gk15(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value: v, err: e });
    let mut total = v;
    let mut total_err = e;
    let mut evals = 15;
    while total_err > abs_tol.max(rel_tol * total.abs()) && heap.len() < max_segments {
        let worst = match heap.pop() {
            Some(s) => s,
            None => break,
        };
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(&mut f, worst.a, m);
        let (v2, e2) = gk15(&mut f, m, worst.b);
        evals += 30;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.err;
        heap.push(Segment { a: worst.a, b: m, value: v1, err: e1 });
        heap.push(Segment { a: m, b: worst.b, value: v2, err: e2 });
    }
    // re-sum to shed accumulated rounding from the running updates
    let (value, abs_err) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.err));
    QuadResult { value, abs_err, evals }
}

/// Tanh-sinh integration over `[a, b]`.
///
/// `f(x, x - a, b - x)` is evaluated only at interior nodes. Refinement halves
/// the step until successive levels agree to `rel_tol` (relative) or
/// `abs_tol`, up to `max_level` halvings.
pub fn tanh_sinh<F: FnMut(f64, f64, f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_level: usize,
) -> QuadResult {
    use std::f64::consts::FRAC_PI_2;
    let half = 0.5 * (b - a);
    let t_max = 6.5_f64;
    let eval_node = |t: f64, f: &mut F| -> f64 {
        let u = FRAC_PI_2 * t.sinh();
        let cu = u.cosh();
        let w = FRAC_PI_2 * t.cosh() / (cu * cu);
        if !w.is_finite() || w == 0.0 {
            return 0.0;
        }
        // distance from the nearer endpoint: half * e^{-|u|} / cosh u
        let near = half * (-u.abs()).exp() / cu;
        if near <= 0.0 || !near.is_finite() {
            return 0.0;
        }
        let far = 2.0 * half - near;
        let (dl, dr) = if u < 0.0 { (near, far) } else { (far, near) };
        // x may round onto an endpoint; singular integrands must use dl, dr
        let x = if u < 0.0 { a + dl } else { b - dr };
        half * w * f(x, dl, dr)
    };

    let mut h = 1.0_f64;
    let mut sum = eval_node(0.0, &mut f);
    let mut evals = 1;
    let mut k = 1;
    while k as f64 * h <= t_max {
        let t = k as f64 * h;
        sum += eval_node(t, &mut f) + eval_node(-t, &mut f);
        evals += 2;
        k += 1;
    }
    let mut prev = sum * h;
    let mut err = f64::INFINITY;
    for _ in 0..max_level {
        h *= 0.5;
        let mut k = 1;
        while k as f64 * h <= t_max {
            let t = k as f64 * h;
            sum += eval_node(t, &mut f) + eval_node(-t, &mut f);
            evals += 2;
            k += 2;
        }
        let cur = sum * h;
        err = (cur - prev).abs();
        prev = cur;
        if err <= abs_tol.max(rel_tol * cur.abs()) {
            break;
        }
    }
    QuadResult {
        value: prev,
        abs_err: err,
        evals,
    }
}

/// Integrate `f` over `[a, inf)` via `x = a + scale * t / (1 - t)` and
/// tanh-sinh in `t`. Suits integrands with power-law tails.
pub fn semi_infinite<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    scale: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> QuadResult {
    tanh_sinh(
        |_t, dl, dr| {
            let x = a + scale * dl / dr;
            let v = f(x);
            if v == 0.0 {
                0.0
            } else {
                v * scale / dr / dr
            }
        },
        0.0,
        1.0,
        abs_tol,
        rel_tol,
        12,
    )
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` (Newton on `P_n`).
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pn1 = if n == 0 { 0.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() <= 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}
