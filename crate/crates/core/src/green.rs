//! Green function evaluators behind one interface.
//!
//! Every inequality check asks only for `G_D(x, y)` with an error bar, so the
//! same harness runs on the closed-form ball oracle, on walk-on-spheres
//! estimates, or on an externally tabulated Green function.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{dist, DomainSpec, Point, ReferenceFrame, Shape};
use crate::kernels::{ball_green_at, StableParams};
use crate::rng::{derive_key, mix64};
use crate::wos::{estimate_green, g_cap, WalkOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenValue {
    pub value: f64,
    /// One standard error, or the quadrature/interpolation error bound.
    pub err: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GreenSource {
    Oracle,
    Mc,
    Table,
    Custom,
}

pub trait GreenEvaluator: Send + Sync {
    fn eval(&self, x: &[f64], y: &[f64]) -> Result<GreenValue>;
    fn describe(&self) -> String;
    fn source(&self) -> GreenSource;
    /// True when the evaluator is known to come from a stable process, so
    /// scaling-based assertions (growth exponent below alpha) apply.
    fn stable_scaling(&self) -> bool {
        false
    }
}

/// Closed-form Green function of a ball.
#[derive(Debug, Clone)]
pub struct BallOracle {
    pub p: StableParams,
    pub center: Point,
    pub radius: f64,
}

impl BallOracle {
    pub fn new(p: StableParams, domain: &DomainSpec) -> Result<Self> {
        match domain.shape() {
            Shape::Ball { center, radius } => {
                if center.len() != p.d {
                    return Err(Error::DimensionMismatch { expected: p.d, got: center.len() });
                }
                Ok(Self { p, center: Point(center.clone()), radius: *radius })
            }
            _ => Err(invalid("domain", "the closed-form oracle needs a ball")),
        }
    }
}

impl GreenEvaluator for BallOracle {
    fn eval(&self, x: &[f64], y: &[f64]) -> Result<GreenValue> {
        let value = ball_green_at(&self.p, &self.center, self.radius, x, y)?;
        // incomplete-beta continued fraction: ~1e-14 relative
        Ok(GreenValue { value, err: 1e-13 * value })
    }
    fn describe(&self) -> String {
        format!("ball oracle d={} alpha={} r={}", self.p.d, self.p.alpha, self.radius)
    }
    fn source(&self) -> GreenSource {
        GreenSource::Oracle
    }
    fn stable_scaling(&self) -> bool {
        true
    }
}

/// Walk-on-spheres estimates. Each pair gets its own key derived from the
/// seed and the coordinates, so a pair's value does not depend on call order.
#[derive(Debug, Clone)]
pub struct MonteCarloGreen {
    pub p: StableParams,
    pub domain: DomainSpec,
    pub n_walks: usize,
    pub seed: u64,
    pub opts: WalkOptions,
}

fn point_key(seed: u64, x: &[f64], y: &[f64]) -> u64 {
    x.iter().chain(y).fold(mix64(seed), |k, v| derive_key(k, v.to_bits()))
}

impl GreenEvaluator for MonteCarloGreen {
    fn eval(&self, x: &[f64], y: &[f64]) -> Result<GreenValue> {
        let est = estimate_green(&self.p, &self.domain, x, y, self.n_walks, point_key(self.seed, x, y), &self.opts)?;
        Ok(GreenValue { value: est.value, err: est.stderr })
    }
    fn describe(&self) -> String {
        format!("walk-on-spheres n={} d={} alpha={}", self.n_walks, self.p.d, self.p.alpha)
    }
    fn source(&self) -> GreenSource {
        GreenSource::Mc
    }
    fn stable_scaling(&self) -> bool {
        true
    }
}

/// One row of a tabulated Green function.
#[derive(Debug, Clone, PartialEq)]
pub struct GreenRow {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub g: f64,
    pub g_err: f64,
}

/// Green values at fixed pairs read from CSV with header
/// `x0..x{d-1},y0..y{d-1},g,g_err`. Lookups are exact on the stored
/// coordinates (bitwise), with `(y, x)` tried second by symmetry.
#[derive(Debug, Clone)]
pub struct TabulatedGreen {
    pub d: usize,
    rows: Vec<GreenRow>,
    index: HashMap<Vec<u64>, usize>,
}

fn bits(x: &[f64], y: &[f64]) -> Vec<u64> {
    x.iter().chain(y).map(|v| v.to_bits()).collect()
}

/// Header for a `d`-dimensional table.
pub fn table_header(d: usize) -> Vec<String> {
    (0..d)
        .map(|i| format!("x{i}"))
        .chain((0..d).map(|i| format!("y{i}")))
        .chain(["g".to_string(), "g_err".to_string()])
        .collect()
}

/// Fixed 17-significant-digit float format; parses back to the same bits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

impl TabulatedGreen {
    pub fn from_rows(d: usize, rows: Vec<GreenRow>) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, r) in rows.iter().enumerate() {
            if r.x.len() != d || r.y.len() != d {
                return Err(Error::Table(format!("row {i}: expected {d} coordinates per point")));
            }
            if !(r.g >= 0.0 && r.g_err >= 0.0) {
                return Err(Error::Table(format!("row {i}: g and g_err must be non-negative")));
            }
            index.insert(bits(&r.x, &r.y), i);
        }
        Ok(Self { d, rows, index })
    }

    pub fn rows(&self) -> &[GreenRow] {
        &self.rows
    }

    pub fn read_csv<P: AsRef<Path>>(path: P) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Table(e.to_string()))?;
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| Error::Table(e.to_string()))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        if header.len() < 6 || (header.len() - 2) % 2 != 0 {
            return Err(Error::Table(format!("bad header {header:?}")));
        }
        let d = (header.len() - 2) / 2;
        if header != table_header(d) {
            return Err(Error::Table(format!("header {header:?}, expected {:?}", table_header(d))));
        }
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Table(e.to_string()))?;
            let vals = rec
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Table(format!("row {}: {e}", i + 1)))?;
            if vals.len() != header.len() {
                return Err(Error::Table(format!("row {}: {} fields", i + 1, vals.len())));
            }
            rows.push(GreenRow {
                x: vals[..d].to_vec(),
                y: vals[d..2 * d].to_vec(),
                g: vals[2 * d],
                g_err: vals[2 * d + 1],
            });
        }
        Self::from_rows(d, rows)
    }

    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        write_table(path, self.d, &self.rows)
    }
}

pub fn write_table<P: AsRef<Path>>(path: P, d: usize, rows: &[GreenRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Table(e.to_string()))?;
    w.write_record(table_header(d)).map_err(|e| Error::Table(e.to_string()))?;
    for r in rows {
        let rec: Vec<String> = r.x.iter().chain(&r.y).chain([&r.g, &r.g_err]).map(|v| fmt_f64(*v)).collect();
        w.write_record(&rec).map_err(|e| Error::Table(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

impl GreenEvaluator for TabulatedGreen {
    fn eval(&self, x: &[f64], y: &[f64]) -> Result<GreenValue> {
        let i = self
            .index
            .get(&bits(x, y))
            .or_else(|| self.index.get(&bits(y, x)))
            .ok_or_else(|| Error::Table(format!("pair ({x:?}, {y:?}) not tabulated")))?;
        let r = &self.rows[*i];
        Ok(GreenValue { value: r.g, err: r.g_err })
    }
    fn describe(&self) -> String {
        format!("table of {} pairs, d={}", self.rows.len(), self.d)
    }
    fn source(&self) -> GreenSource {
        GreenSource::Table
    }
}

/// An evaluator built from a closure, e.g. a deliberately distorted Green
/// function for negative controls.
pub struct FnGreen<F> {
    pub f: F,
    pub label: String,
}

impl<F: Fn(&[f64], &[f64]) -> Result<GreenValue> + Send + Sync> GreenEvaluator for FnGreen<F> {
    fn eval(&self, x: &[f64], y: &[f64]) -> Result<GreenValue> {
        (self.f)(x, y)
    }
    fn describe(&self) -> String {
        self.label.clone()
    }
    fn source(&self) -> GreenSource {
        GreenSource::Custom
    }
}

/// `g(x) = G_D(x, z0) ∧ C1`.
pub fn g_function(
    green: &dyn GreenEvaluator,
    p: &StableParams,
    domain: &DomainSpec,
    frame: &ReferenceFrame,
    x: &[f64],
) -> Result<GreenValue> {
    let c0 = frame.c0.ok_or_else(|| invalid("frame.c0", "calibrate C0 before evaluating g"))?;
    let cap = g_cap(p, domain, frame, c0);
    if dist(x, &frame.z0) == 0.0 {
        return Ok(GreenValue { value: cap, err: 0.0 });
    }
    let g = green.eval(x, &frame.z0)?;
    Ok(if g.value >= cap { GreenValue { value: cap, err: 0.0 } } else { g })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::ball_green;

    fn sp() -> StableParams {
        StableParams::new(2, 1.5).unwrap()
    }

    #[test]
    fn oracle_needs_a_ball() {
        assert!(BallOracle::new(sp(), &DomainSpec::unit_cube(2)).is_err());
        let o = BallOracle::new(sp(), &DomainSpec::unit_ball(2)).unwrap();
        let v = o.eval(&[0.1, 0.2], &[-0.3, 0.0]).unwrap().value;
        assert_eq!(v, ball_green(&sp(), 1.0, &[0.1, 0.2], &[-0.3, 0.0]).unwrap());
    }

    #[test]
    fn mc_is_order_independent() {
        let mc = MonteCarloGreen {
            p: sp(),
            domain: DomainSpec::unit_ball(2),
            n_walks: 500,
            seed: 3,
            opts: WalkOptions::default(),
        };
        let a = mc.eval(&[0.1, 0.0], &[0.4, 0.1]).unwrap();
        let _ = mc.eval(&[0.0, 0.0], &[0.2, 0.1]).unwrap();
        let b = mc.eval(&[0.1, 0.0], &[0.4, 0.1]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn table_round_trips_through_csv() {
        let o = BallOracle::new(sp(), &DomainSpec::unit_ball(2)).unwrap();
        let pairs = [([0.1, 0.2], [0.3, -0.1]), ([1.0 / 3.0, 0.0], [0.0, -0.7])];
        let rows: Vec<GreenRow> = pairs
            .iter()
            .map(|(x, y)| GreenRow { x: x.to_vec(), y: y.to_vec(), g: o.eval(x, y).unwrap().value, g_err: 1e-3 })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        write_table(&path, 2, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("x0,x1,y0,y1,g,g_err\n"));
        let t = TabulatedGreen::read_csv(&path).unwrap();
        assert_eq!(t.rows(), &rows[..]);
        let (x, y) = pairs[1];
        assert_eq!(t.eval(&y, &x).unwrap().value, rows[1].g);
        assert!(t.eval(&[0.0, 0.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn table_rejects_bad_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        std::fs::write(&path, "a,b,c,d,g,g_err\n1,2,3,4,5,6\n").unwrap();
        assert!(TabulatedGreen::read_csv(&path).is_err());
    }
}
