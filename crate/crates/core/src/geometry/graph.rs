//! Domain under a Lipschitz graph.
//!
//! `D = { y : lo_i < y_i < hi_i (i < d-1), bottom < y_{d-1} < phi(y_0) }` with
//! `phi(t) = height + amplitude * |sin(frequency * t)|`. The graph has kinks
//! at the zeros of the sine, so `D` is Lipschitz but not C^1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDomain {
    pub base_lo: Vec<f64>,
    pub base_hi: Vec<f64>,
    pub bottom: f64,
    pub height: f64,
    pub amplitude: f64,
    pub frequency: f64,
}

const PROJECTION_TOL: f64 = 1e-10;
const SAMPLES_PER_PIECE: usize = 48;

impl GraphDomain {
    pub fn dim(&self) -> usize {
        self.base_lo.len() + 1
    }

    pub fn phi(&self, t: f64) -> f64 {
        self.height + self.amplitude * (self.frequency * t).sin().abs()
    }

    /// One-sided derivative used away from kinks.
    pub fn dphi(&self, t: f64) -> f64 {
        let s = (self.frequency * t).sin();
        self.amplitude * self.frequency * (self.frequency * t).cos() * s.signum()
    }

    pub fn lipschitz_constant(&self) -> f64 {
        self.amplitude * self.frequency
    }

    pub fn top(&self) -> f64 {
        self.height + self.amplitude
    }

    fn vertical(&self) -> usize {
        self.dim() - 1
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let v = self.vertical();
        (0..v).all(|i| x[i] > self.base_lo[i] && x[i] < self.base_hi[i])
            && x[v] > self.bottom
            && x[v] < self.phi(x[0])
    }

    /// Nearest point of the graph curve (in the `(y_0, y_{d-1})` plane) to
    /// `(t, h)` among abscissae within `window` of `t`.
    ///
    /// Local minima of the squared distance are located by sampling the
    /// derivative on each smooth piece and bisecting sign changes.
    pub fn project_on_graph(&self, t: f64, h: f64, window: f64) -> Result<(f64, f64)> {
        let lo = (t - window).max(self.base_lo[0]);
        let hi = (t + window).min(self.base_hi[0]);
        let sq = |s: f64| {
            let dv = self.phi(s) - h;
            (s - t) * (s - t) + dv * dv
        };
        let dsq = |s: f64| (s - t) + (self.phi(s) - h) * self.dphi(s);
        let mut breaks = vec![lo];
        if self.frequency > 0.0 && self.amplitude != 0.0 {
            let period = std::f64::consts::PI / self.frequency;
            let mut k = (lo / period).ceil();
            while k * period < hi {
                let s = k * period;
                if s > lo {
                    breaks.push(s);
                }
                k += 1.0;
            }
        }
        breaks.push(hi);
        let mut best = (f64::INFINITY, lo);
        let consider = |s: f64, best: &mut (f64, f64)| {
            let v = sq(s);
            if v < best.0 {
                *best = (v, s);
            }
        };
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            consider(a, &mut best);
            consider(b, &mut best);
            if b - a <= 0.0 {
                continue;
            }
            let n = SAMPLES_PER_PIECE;
            // interior evaluation avoids the kink values of dphi
            let pts: Vec<f64> = (0..=n)
                .map(|i| a + (b - a) * (i as f64 / n as f64).clamp(1e-12, 1.0 - 1e-12))
                .collect();
            for p in pts.windows(2) {
                let (mut l, mut r) = (p[0], p[1]);
                let (gl, gr) = (dsq(l), dsq(r));
                if !(gl < 0.0 && gr >= 0.0) {
                    continue;
                }
                let mut iter = 0;
                while r - l > PROJECTION_TOL {
                    let m = 0.5 * (l + r);
                    if dsq(m) < 0.0 {
                        l = m;
                    } else {
                        r = m;
                    }
                    iter += 1;
                    if iter > 200 {
                        return Err(Error::Projection(format!(
                            "bisection stalled near abscissa {m}"
                        )));
                    }
                }
                consider(0.5 * (l + r), &mut best);
            }
        }
        if !best.0.is_finite() {
            return Err(Error::Projection(format!(
                "no graph candidate for point ({t}, {h})"
            )));
        }
        Ok((best.1, best.0.sqrt()))
    }

    /// Distance from `x` to the boundary and the nearest boundary point.
    pub fn boundary_distance(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let v = self.vertical();
        let inside = self.contains(x);
        let (t, h) = (x[0], x[v]);
        // candidates in tie order: faces by axis (lower first), then graph
        let mut best_d = f64::INFINITY;
        let mut best_p: Vec<f64> = x.to_vec();
        let take = |d: f64, p: Vec<f64>, best_d: &mut f64, best_p: &mut Vec<f64>| {
            if d < *best_d {
                *best_d = d;
                *best_p = p;
            }
        };
        // cross-section faces: the clamp of (t, h) onto each edge segment
        let edge = |fix_axis: usize, value: f64, lo: f64, hi_val: f64| -> (f64, Vec<f64>) {
            let mut p = x.to_vec();
            p[fix_axis] = value;
            let free = if fix_axis == 0 { v } else { 0 };
            p[free] = p[free].clamp(lo, hi_val);
            for i in 1..v {
                p[i] = p[i].clamp(self.base_lo[i], self.base_hi[i]);
            }
            (super::point::dist(x, &p), p)
        };
        let (d, p) = edge(0, self.base_lo[0], self.bottom, self.phi(self.base_lo[0]));
        take(d, p, &mut best_d, &mut best_p);
        let (d, p) = edge(0, self.base_hi[0], self.bottom, self.phi(self.base_hi[0]));
        take(d, p, &mut best_d, &mut best_p);
        // mid faces (only present for d >= 3)
        for i in 1..v {
            for value in [self.base_lo[i], self.base_hi[i]] {
                let mut p = x.to_vec();
                p[i] = value;
                p[0] = p[0].clamp(self.base_lo[0], self.base_hi[0]);
                for j in 1..v {
                    if j != i {
                        p[j] = p[j].clamp(self.base_lo[j], self.base_hi[j]);
                    }
                }
                p[v] = p[v].clamp(self.bottom, self.phi(p[0]));
                take(super::point::dist(x, &p), p, &mut best_d, &mut best_p);
            }
        }
        let (d, p) = edge(v, self.bottom, self.base_lo[0], self.base_hi[0]);
        take(d, p, &mut best_d, &mut best_p);
        // graph: restrict mid coordinates by clamping
        let mut mid_off2 = 0.0;
        let mut gp = x.to_vec();
        for i in 1..v {
            let c = x[i].clamp(self.base_lo[i], self.base_hi[i]);
            mid_off2 += (x[i] - c) * (x[i] - c);
            gp[i] = c;
        }
        let window = if best_d.is_finite() { best_d } else { (h - self.phi(t)).abs() }
            .max((h - self.phi(t.clamp(self.base_lo[0], self.base_hi[0]))).abs().min(best_d));
        let (s, dg) = self.project_on_graph(t, h, window.max(1e-300) * (1.0 + 1e-12))?;
        gp[0] = s;
        gp[v] = self.phi(s);
        let dg = (dg * dg + mid_off2).sqrt();
        take(dg, gp, &mut best_d, &mut best_p);
        if inside || best_d.is_finite() {
            Ok((best_d, best_p))
        } else {
            Err(Error::Projection("no boundary candidate".into()))
        }
    }
}
