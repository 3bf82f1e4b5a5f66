//! Kato-class diagnostics for non-local perturbations: Young exponent
//! selection, the gauge double integral of a jump functional `F`, and the
//! single three-point integral of a density `q`.
//!
//! The uniform-integrability clauses of the Kato class definitions have no
//! finite-sample analogue. What is checked is the finiteness of the sup
//! integrals the integrability argument reduces to.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{axpy, dist, DomainSpec, Point, Shape};
use crate::green::GreenEvaluator;
use crate::inequality_lab::{SamplerConfig, STABILITY_TOL};
use crate::kernels::StableParams;
use crate::relativistic::{psi_minus_one, F_m, RelativisticParams};
use crate::rng::{derive_key, StreamRng};
use crate::special::sphere_area;
use crate::stats::{mean_stderr, par_map};

/// Which of the four integrability families a Young split is for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum YoungCase {
    /// `|x-y|^{a-d} |z-w|^{a-d} |y-z|^{b-2a}`.
    F1,
    /// `|x-y|^{a-d} |z-w|^{a-g-d} |y-z|^{b-2a+g}`.
    F2,
    /// `|x-y|^{a-g-d} |z-w|^{a-d} |y-z|^{b-2a+g}`.
    F3,
    /// `|x-y|^{a-g-d} |z-w|^{a-g-d} |y-z|^{b-2a+2g}`.
    F4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    /// E.g. `(d-alpha) p < d`.
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
}

impl Constraint {
    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YoungExponents {
    pub case: YoungCase,
    pub p: f64,
    pub q: f64,
    /// Open interval `p` was taken from (its midpoint).
    pub interval: (f64, f64),
    pub constraints: Vec<Constraint>,
}

impl YoungExponents {
    pub fn constraints_hold(&self) -> bool {
        self.p > 1.0 && self.q > 1.0 && self.constraints.iter().all(|c| c.lhs < c.rhs)
    }
}

/// Outcome of the exponent selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum YoungSelection {
    /// The `|y-z|` exponent is non-negative, so the family is bounded on a
    /// bounded set and no split is needed.
    NotNeeded { case: YoungCase, yz_exponent: f64 },
    Split(YoungExponents),
}

/// Pick `p` as the midpoint of the admissible interval and `q = p/(p-1)`.
///
/// Requires `beta > alpha > gamma > 0` and `alpha < d`; F4 is F1 with
/// `alpha - gamma` in place of `alpha`, and F3 mirrors F2.
pub fn select_young_exponents(p: &StableParams, beta: f64, gamma: f64, case: YoungCase) -> Result<YoungSelection> {
    let (d, a) = (p.df(), p.alpha);
    if !(beta > a) {
        return Err(Error::EmptyInterval(format!(
            "the hypothesis beta > alpha fails (beta = {beta}, alpha = {a}): \
             the lower end d/(d-2alpha+beta) is not below d/(d-alpha)"
        )));
    }
    if !(gamma > 0.0 && gamma < a) {
        return Err(Error::Hypothesis(format!("need 0 < gamma < alpha, got gamma = {gamma}")));
    }
    if !(a < d) {
        return Err(Error::Hypothesis(format!("need alpha < d, got alpha = {a}, d = {d}")));
    }
    let lower_of = |denom: f64| if denom > 0.0 { d / denom } else { f64::INFINITY };
    match case {
        YoungCase::F1 | YoungCase::F4 => {
            let a_eff = if case == YoungCase::F1 { a } else { a - gamma };
            let yz = beta - 2.0 * a_eff;
            if yz >= 0.0 {
                return Ok(YoungSelection::NotNeeded { case, yz_exponent: yz });
            }
            let lo = 1f64.max(lower_of(d - 2.0 * a_eff + beta));
            let hi = d / (d - a_eff);
            if !(lo < hi) {
                return Err(Error::EmptyInterval(format!(
                    "(1 ∨ d/(d-2a+beta), d/(d-a)) = ({lo}, {hi}) with a = {a_eff}: needs beta ∧ d > a"
                )));
            }
            let pp = 0.5 * (lo + hi);
            let q = pp / (pp - 1.0);
            Ok(YoungSelection::Split(YoungExponents {
                case,
                p: pp,
                q,
                interval: (lo, hi),
                constraints: vec![
                    Constraint { label: "(d-a) p < d".into(), lhs: (d - a_eff) * pp, rhs: d },
                    Constraint { label: "(2a-beta) q < d".into(), lhs: (2.0 * a_eff - beta) * q, rhs: d },
                ],
            }))
        }
        YoungCase::F2 | YoungCase::F3 => {
            let yz = beta - 2.0 * a + gamma;
            if yz >= 0.0 {
                return Ok(YoungSelection::NotNeeded { case, yz_exponent: yz });
            }
            let lo = 1f64.max(lower_of(d - gamma)).max(lower_of(d - 2.0 * a + beta + gamma));
            let hi = d / (d - a);
            if !(lo < hi) {
                return Err(Error::EmptyInterval(format!(
                    "(1 ∨ d/(d-gamma) ∨ d/(d-2alpha+beta+gamma), d/(d-alpha)) = ({lo}, {hi})"
                )));
            }
            let pp = 0.5 * (lo + hi);
            let q = pp / (pp - 1.0);
            Ok(YoungSelection::Split(YoungExponents {
                case,
                p: pp,
                q,
                interval: (lo, hi),
                constraints: vec![
                    Constraint { label: "(d-alpha) p < d".into(), lhs: (d - a) * pp, rhs: d },
                    Constraint { label: "gamma q < d".into(), lhs: gamma * q, rhs: d },
                    Constraint { label: "(2alpha-beta-gamma) q < d".into(), lhs: (2.0 * a - beta - gamma) * q, rhs: d },
                ],
            }))
        }
    }
}

/// `F(y, z)` given as a function of `|y - z|` on a grid, linear in between,
/// `v_0 (r/r_0)^beta` below the first node and constant past the last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialTable {
    pub r: Vec<f64>,
    pub v: Vec<f64>,
}

impl RadialTable {
    pub fn new(r: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if r.len() < 2 || r.len() != v.len() {
            return Err(invalid("table", "need at least two (r, v) nodes of equal count"));
        }
        if r[0] <= 0.0 || r.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("table.r", "radii must be positive and strictly increasing"));
        }
        Ok(Self { r, v })
    }

    fn eval(&self, s: f64, beta: f64) -> f64 {
        let n = self.r.len();
        if s <= self.r[0] {
            return self.v[0] * (s / self.r[0]).powf(beta);
        }
        if s >= self.r[n - 1] {
            return self.v[n - 1];
        }
        let i = self.r.partition_point(|&t| t <= s) - 1;
        let t = (s - self.r[i]) / (self.r[i + 1] - self.r[i]);
        self.v[i] + t * (self.v[i + 1] - self.v[i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PerturbationForm {
    /// `F = c |y - z|^beta`.
    Power,
    /// `F = F^m = psi(m^{1/alpha}|y-z|) - 1`, bounded by `c |y-z|^2`.
    Relativistic { params: RelativisticParams },
    Custom { table: RadialTable },
}

/// A jump functional `F(y, z)` with its power bound `|F| <= c |y-z|^beta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub form: PerturbationForm,
    pub beta: f64,
    pub c: f64,
}

impl PerturbationSpec {
    pub fn power(beta: f64, c: f64) -> Result<Self> {
        if !beta.is_finite() || !(c >= 0.0 && c.is_finite()) {
            return Err(invalid("F", "beta must be finite and c non-negative"));
        }
        Ok(Self { form: PerturbationForm::Power, beta, c })
    }

    /// `1 - psi(r) <= r^2 E[1/T] / 4 = r^2 / (4(k-1))` for `T ~ Gamma(k)`,
    /// so `c = m^{2/alpha} / (2(d + alpha) - 4)` with `beta = 2`. When
    /// `d + alpha <= 2` that mean is infinite and `c` is reported as such.
    pub fn relativistic(params: RelativisticParams) -> Self {
        let k = 0.5 * (params.base.df() + params.base.alpha);
        let c = if k > 1.0 { params.scale().powi(2) / (4.0 * (k - 1.0)) } else { f64::INFINITY };
        Self { form: PerturbationForm::Relativistic { params }, beta: 2.0, c }
    }

    pub fn custom(table: RadialTable, beta: f64, c: f64) -> Result<Self> {
        Ok(Self { form: PerturbationForm::Custom { table }, ..Self::power(beta, c)? })
    }

    /// The power-bound hypothesis `beta > alpha`.
    pub fn hypothesis_holds(&self, alpha: f64) -> bool {
        self.beta > alpha
    }

    pub fn eval(&self, y: &[f64], z: &[f64]) -> Result<f64> {
        if let PerturbationForm::Relativistic { params } = &self.form {
            return F_m(params, y, z);
        }
        self.eval_gap(dist(y, z))
    }

    /// `F` as a function of `|y - z| > 0`; every form here is radial.
    pub fn eval_gap(&self, s: f64) -> Result<f64> {
        match &self.form {
            PerturbationForm::Power => Ok(if self.c == 0.0 { 0.0 } else { self.c * s.powf(self.beta) }),
            PerturbationForm::Relativistic { params } => psi_minus_one(params, params.scale() * s),
            PerturbationForm::Custom { table } => Ok(table.eval(s, self.beta)),
        }
    }
}

/// The two-point kernel the gauge integral is built on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Endpoint {
    /// `G(x,y) G(z,w) / G(x,w)` with `w ∈ D`.
    Interior(Point),
    /// `G(x,y) M(z,w) / M(x,w)` with `w ∈ ∂D`; closed form on balls only.
    Boundary(Point),
}

impl Endpoint {
    pub fn point(&self) -> &Point {
        match self {
            Endpoint::Interior(w) | Endpoint::Boundary(w) => w,
        }
    }
}

/// Sample sizes for the doubling study: `base_per_stratum` draws from each
/// proposal stratum at the first level, doubled up to `max_doublings` times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
#[serde(deny_unknown_fields)]
pub struct QuadConfig {
    pub base_per_stratum: usize,
    pub max_doublings: usize,
    pub seed: u64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self { base_per_stratum: 2048, max_doublings: 6, seed: 0 }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> Result<()> {
        if self.base_per_stratum < 16 {
            return Err(invalid("base_per_stratum", "need at least 16"));
        }
        if self.max_doublings < 3 {
            return Err(invalid("max_doublings", "divergence detection needs at least 3 doublings"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelEstimate {
    pub n: usize,
    pub value: f64,
    pub stderr: f64,
}

/// An integral estimated along a doubling sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralReport {
    pub value: f64,
    pub stderr: f64,
    pub curve: Vec<LevelEstimate>,
    /// Some doubling changed the estimate by at most 10% with the standard
    /// error also within 10% of it.
    pub stable: bool,
    /// Three successive doublings each changed it by more than 10%.
    pub divergent: bool,
}

/// Smallest proposal exponent for the `|y-z|` singularity. When
/// `beta <= alpha` the exact exponent `beta - alpha` is not admissible and
/// this floor is used, so the borderline integrable rate is what gets sampled.
pub const YZ_EXPONENT_FLOOR: f64 = 0.05;

/// Radial law `s r^{s-1} / L^s` on `(0, L)` around a centre.
#[derive(Debug, Clone, Copy)]
struct Radial {
    s: f64,
    len: f64,
}

impl Radial {
    fn sample(&self, c: &[f64], rng: &mut StreamRng) -> (Vec<f64>, f64) {
        let r = self.len * rng.open01().powf(1.0 / self.s);
        (axpy(c, r, &rng.direction(c.len())), r)
    }

    /// Point density at distance `r` times `r^k`; the factor is folded into
    /// the power so that tiny `r` neither overflows nor cancels to `inf/inf`.
    fn density_at(&self, r: f64, d: usize, k: f64) -> f64 {
        if !(r < self.len) || r == 0.0 {
            return 0.0;
        }
        self.s / self.len.powf(self.s) / sphere_area(d) * r.powf(self.s - d as f64 + k)
    }
}

/// A proposal stratum for one coordinate.
#[derive(Debug, Clone, Copy)]
enum Leg {
    /// Radial around the fixed point with this index (0 = x, 1 = w).
    Around(usize, Radial),
    /// Radial around the other coordinate.
    Chained(Radial),
    Uniform,
}

struct Draw {
    pts: Vec<Vec<f64>>,
    /// Exact radius of a chained leg. Recomputing it from the points loses
    /// everything below the rounding scale of the coordinates, which is
    /// precisely where a non-integrable diagonal lives.
    gap: Option<f64>,
}

struct Proposal<'a> {
    anchors: [&'a [f64]; 2],
    lo: &'a [f64],
    hi: &'a [f64],
    strata: Vec<[Leg; 2]>,
    /// Which coordinate each stratum draws first; `usize::MAX` second means
    /// a single coordinate.
    order: Vec<[usize; 2]>,
}

impl Proposal<'_> {
    fn box_density(&self) -> f64 {
        1.0 / self.lo.iter().zip(self.hi).map(|(a, b)| b - a).product::<f64>()
    }

    fn draw_leg(&self, leg: Leg, other: &[f64], rng: &mut StreamRng) -> (Vec<f64>, Option<f64>) {
        match leg {
            Leg::Around(i, r) => (r.sample(self.anchors[i], rng).0, None),
            Leg::Chained(r) => {
                let (p, g) = r.sample(other, rng);
                (p, Some(g))
            }
            Leg::Uniform => (self.lo.iter().zip(self.hi).map(|(a, b)| rng.range(*a, *b)).collect(), None),
        }
    }

    fn unchained_density(&self, leg: Leg, p: &[f64]) -> f64 {
        match leg {
            Leg::Around(i, r) => r.density_at(dist(self.anchors[i], p), p.len(), 0.0),
            Leg::Chained(_) => unreachable!("chained legs are always second"),
            Leg::Uniform => {
                let inside = p.iter().zip(self.lo.iter().zip(self.hi)).all(|(v, (a, b))| v >= a && v <= b);
                if inside {
                    self.box_density()
                } else {
                    0.0
                }
            }
        }
    }

    fn draw(&self, j: usize, rng: &mut StreamRng) -> Draw {
        let legs = self.strata[j];
        let [first, second] = self.order[j];
        let k = if second == usize::MAX { 1 } else { 2 };
        let mut pts: Vec<Vec<f64>> = vec![Vec::new(); k];
        pts[first] = self.draw_leg(legs[first], &[], rng).0;
        let mut gap = None;
        if k == 2 {
            let (p, g) = self.draw_leg(legs[second], &pts[first], rng);
            pts[second] = p;
            gap = g;
        }
        Draw { pts, gap }
    }

    /// Equal-weight mixture density at `pts`, times `gap^k` for pairs, where
    /// `gap = |pts[0] - pts[1]|`.
    fn density(&self, pts: &[Vec<f64>], gap: f64, k: f64) -> f64 {
        let d = pts[0].len();
        let total: f64 = (0..self.strata.len())
            .map(|j| {
                let legs = self.strata[j];
                let [first, second] = self.order[j];
                let q = self.unchained_density(legs[first], &pts[first]);
                if pts.len() == 1 || q == 0.0 {
                    return q;
                }
                match legs[second] {
                    Leg::Chained(r) => q * r.density_at(gap, d, k),
                    leg => q * self.unchained_density(leg, &pts[second]) * gap.powf(k),
                }
            })
            .sum();
        total / self.strata.len() as f64
    }
}

/// Doubling study over a sample stream: sample `i` comes from stratum
/// `i mod S` on its own random stream, so every level is a prefix of the next
/// with equal stratum counts.
fn doubling_study<F>(n_strata: usize, cfg: &QuadConfig, sample: F) -> Result<IntegralReport>
where
    F: Fn(usize) -> Result<f64> + Sync + Send,
{
    cfg.validate()?;
    let mut values: Vec<f64> = Vec::new();
    let mut curve: Vec<LevelEstimate> = Vec::new();
    let (mut stable, mut divergent, mut fails) = (false, false, 0);
    for level in 0..=cfg.max_doublings {
        let n = n_strata * cfg.base_per_stratum << level;
        let start = values.len();
        let block = par_map(n - start, |i| sample(start + i)).into_iter().collect::<Result<Vec<_>>>()?;
        values.extend(block);
        let (m, se) = mean_stderr(&values);
        curve.push(LevelEstimate { n, value: m, stderr: se });
        if level == 0 {
            continue;
        }
        let prev = curve[level - 1].value;
        let change = if prev == m { 0.0 } else { ((m - prev) / prev).abs() };
        // an infinite-mean estimator is dominated by its largest draw and can
        // look flat for a doubling; its standard error then stays of the
        // order of the mean
        let resolved = se <= STABILITY_TOL * m.abs();
        if change <= STABILITY_TOL && resolved {
            stable = true;
            break;
        }
        fails += 1;
        if fails >= 3 {
            divergent = true;
            break;
        }
    }
    let last = *curve.last().unwrap();
    Ok(IntegralReport { value: last.value, stderr: last.stderr, curve, stable, divergent })
}

fn check_inside(domain: &DomainSpec, name: &str, x: &[f64]) -> Result<()> {
    if x.len() != domain.dim() {
        return Err(Error::DimensionMismatch { expected: domain.dim(), got: x.len() });
    }
    if !domain.contains(x) {
        return Err(Error::OutsideDomain(format!("{name} = {x:?}")));
    }
    Ok(())
}

/// `M(z, w) / M(x, w)` for a ball; the normalisation point cancels.
fn ball_martin_ratio(alpha: f64, center: &[f64], r: f64, z: &[f64], x: &[f64], w: &[f64]) -> f64 {
    let (dz, dx) = (dist(z, center), dist(x, center));
    let h = 0.5 * alpha;
    let d = z.len() as f64;
    (((r - dz) * (r + dz)) / ((r - dx) * (r + dx))).powf(h) * (dist(x, w) / dist(z, w)).powf(d)
}

/// `int_D int_D K(x,y,z,w) F(y,z) |y-z|^{-d-alpha} dy dz` with
/// `K = G(x,y) G(z,w) / G(x,w)` (or the Martin variant), by stratified
/// importance sampling around `y = x`, `z = w` and `y = z`.
///
/// Strata: `(y~x, z~y)`, `(z~w, y~z)`, `(y uniform, z~y)`, `(y~x, z~w)` and
/// `(y, z uniform)`. Radial exponents are `alpha` at `x` (and at `w` for an
/// interior endpoint), `alpha/2` at a boundary `w`, and `beta - alpha`
/// (floored at [`YZ_EXPONENT_FLOOR`]) on the diagonal.
pub fn gauge_double_integral(
    green: &dyn GreenEvaluator,
    p: &StableParams,
    domain: &DomainSpec,
    f: &PerturbationSpec,
    x: &[f64],
    w: &Endpoint,
    cfg: &QuadConfig,
) -> Result<IntegralReport> {
    check_inside(domain, "x", x)?;
    let wp = w.point();
    let martin = match w {
        Endpoint::Interior(w) => {
            check_inside(domain, "w", w)?;
            if dist(x, w) == 0.0 {
                return Err(Error::Degenerate("x = w".into()));
            }
            None
        }
        Endpoint::Boundary(w) => match domain.shape() {
            Shape::Ball { center, radius } => {
                if (dist(w, center) - radius).abs() > 1e-9 * radius {
                    return Err(Error::OutsideDomain("boundary endpoint must lie on the sphere".into()));
                }
                Some((center.clone(), *radius))
            }
            _ => return Err(invalid("w", "the Martin variant needs a ball")),
        },
    };
    let len = domain.diameter();
    let s_yz = (f.beta - p.alpha).max(YZ_EXPONENT_FLOOR);
    let s_w = if martin.is_some() { 0.5 * p.alpha } else { p.alpha };
    let (rx, rw, ryz) = (Radial { s: p.alpha, len }, Radial { s: s_w, len }, Radial { s: s_yz, len });
    let (lo, hi) = domain.bounding_box();
    let prop = Proposal {
        anchors: [x, wp],
        lo,
        hi,
        strata: vec![
            [Leg::Around(0, rx), Leg::Chained(ryz)],
            [Leg::Chained(ryz), Leg::Around(1, rw)],
            [Leg::Uniform, Leg::Chained(ryz)],
            [Leg::Around(0, rx), Leg::Around(1, rw)],
            [Leg::Uniform, Leg::Uniform],
        ],
        order: vec![[0, 1], [1, 0], [0, 1], [0, 1], [0, 1]],
    };
    let gxw = match &martin {
        None => green.eval(x, wp)?.value,
        Some(_) => 1.0,
    };
    let key = derive_key(cfg.seed, 0x6761_7567);
    doubling_study(prop.strata.len(), cfg, |i| {
        let mut rng = StreamRng::new(key, i as u64);
        let draw = prop.draw(i % prop.strata.len(), &mut rng);
        let (y, z) = (&draw.pts[0], &draw.pts[1]);
        if !domain.contains(y) || !domain.contains(z) {
            return Ok(0.0);
        }
        let syz = draw.gap.unwrap_or_else(|| dist(y, z));
        if syz == 0.0 || dist(x, y) == 0.0 || dist(z, wp) == 0.0 {
            return Ok(0.0);
        }
        let fv = f.eval_gap(syz)?;
        if fv == 0.0 {
            return Ok(0.0);
        }
        let kernel = match &martin {
            None => green.eval(x, y)?.value * green.eval(z, wp)?.value / gxw,
            Some((c, r)) => green.eval(x, y)?.value * ball_martin_ratio(p.alpha, c, *r, z, x, wp),
        };
        // |y-z|^{-d-alpha} is carried by the proposal density
        let q = prop.density(&draw.pts, syz, p.df() + p.alpha);
        Ok(kernel * fv / q)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub x: Point,
    pub w: Endpoint,
    pub result: IntegralReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub rows: Vec<ScanRow>,
    pub max: f64,
    pub argmax: usize,
    pub all_stable: bool,
    pub any_divergent: bool,
}

/// Gauge integral over a grid of `(x, w)` pairs; reports the largest value.
pub fn gauge_sup_scan(
    green: &dyn GreenEvaluator,
    p: &StableParams,
    domain: &DomainSpec,
    f: &PerturbationSpec,
    pairs: &[(Point, Endpoint)],
    cfg: &QuadConfig,
) -> Result<ScanReport> {
    if pairs.is_empty() {
        return Err(invalid("pairs", "empty grid"));
    }
    let mut rows = Vec::with_capacity(pairs.len());
    for (k, (x, w)) in pairs.iter().enumerate() {
        let sub = QuadConfig { seed: derive_key(cfg.seed, k as u64), ..*cfg };
        let result = gauge_double_integral(green, p, domain, f, x, w, &sub)?;
        rows.push(ScanRow { x: x.clone(), w: w.clone(), result });
    }
    let (argmax, max) = rows
        .iter()
        .enumerate()
        .map(|(i, r)| (i, r.result.value))
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    Ok(ScanReport {
        all_stable: rows.iter().all(|r| r.result.stable),
        any_divergent: rows.iter().any(|r| r.result.divergent),
        rows,
        max,
        argmax,
    })
}

/// `n` interior pairs from the boundary-biased sampler.
pub fn boundary_biased_pairs(domain: &DomainSpec, sampler: &SamplerConfig, n: usize) -> Vec<(Point, Endpoint)> {
    sampler
        .sample_tuples(domain, 2, n)
        .into_iter()
        .map(|mut t| {
            let w = t.pop().unwrap();
            (t.pop().unwrap(), Endpoint::Interior(w))
        })
        .collect()
}

/// Density `q` for the single three-point integral.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QDensity {
    Constant { c: f64 },
    /// `c rho_D(y)^{-exponent}`.
    BoundaryPower { c: f64, exponent: f64 },
    /// Function of the depth `rho_D(y)` on a grid, linear in `ln rho`,
    /// clamped to the end values outside the grid.
    DepthTable { depth: Vec<f64>, v: Vec<f64> },
}

impl QDensity {
    pub fn eval(&self, domain: &DomainSpec, y: &[f64]) -> f64 {
        match self {
            QDensity::Constant { c } => *c,
            QDensity::BoundaryPower { c, exponent } => c * domain.distance(y).powf(-exponent),
            QDensity::DepthTable { depth, v } => {
                let t = domain.distance(y);
                let n = depth.len();
                if t <= depth[0] {
                    return v[0];
                }
                if t >= depth[n - 1] {
                    return v[n - 1];
                }
                let i = depth.partition_point(|&s| s <= t) - 1;
                let u = (t / depth[i]).ln() / (depth[i + 1] / depth[i]).ln();
                v[i] + u * (v[i + 1] - v[i])
            }
        }
    }

    /// Tabulate `f(depth)` at `n` log-spaced depths in `[lo, hi]`.
    pub fn depth_table<F: Fn(f64) -> Result<f64> + Sync>(lo: f64, hi: f64, n: usize, f: F) -> Result<Self> {
        if !(lo > 0.0 && hi > lo && n >= 2) {
            return Err(invalid("depth grid", "need 0 < lo < hi and n >= 2"));
        }
        let depth: Vec<f64> = (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect();
        let v = par_map(n, |i| f(depth[i])).into_iter().collect::<Result<Vec<_>>>()?;
        Ok(QDensity::DepthTable { depth, v })
    }
}

/// `int_D G(x,y) G(y,z) / G(x,z) |q(y)| dy` by importance sampling around
/// `y = x`, `y = z` and uniformly.
pub fn s_infty_integral(
    green: &dyn GreenEvaluator,
    p: &StableParams,
    domain: &DomainSpec,
    q: &QDensity,
    x: &[f64],
    z: &[f64],
    cfg: &QuadConfig,
) -> Result<IntegralReport> {
    check_inside(domain, "x", x)?;
    check_inside(domain, "z", z)?;
    if dist(x, z) == 0.0 {
        return Err(Error::Degenerate("x = z".into()));
    }
    let len = domain.diameter();
    let r = Radial { s: p.alpha, len };
    let (lo, hi) = domain.bounding_box();
    let never = usize::MAX;
    let prop = Proposal {
        anchors: [x, z],
        lo,
        hi,
        strata: vec![[Leg::Around(0, r), Leg::Uniform], [Leg::Around(1, r), Leg::Uniform], [Leg::Uniform, Leg::Uniform]],
        order: vec![[0, never], [0, never], [0, never]],
    };
    // the second leg is never drawn; strata differ only in their first leg
    let gxz = green.eval(x, z)?.value;
    let key = derive_key(cfg.seed, 0x7369_6e66);
    doubling_study(prop.strata.len(), cfg, |i| {
        let mut rng = StreamRng::new(key, i as u64);
        let pts = prop.draw(i % prop.strata.len(), &mut rng).pts;
        let y = &pts[0];
        if !domain.contains(y) || dist(x, y) == 0.0 || dist(y, z) == 0.0 {
            return Ok(0.0);
        }
        let qv = q.eval(domain, y).abs();
        if qv == 0.0 {
            return Ok(0.0);
        }
        let k = green.eval(x, y)?.value * green.eval(y, z)?.value / gxz;
        Ok(k * qv / prop.density(&pts, 1.0, 0.0))
    })
}

/// The six-term majorant of the four-point kernel obtained by expanding the
/// generalized 3G bound, without its constant (`e = d - alpha`):
/// `A^{-(e+g)} + C^{-(e+g)} + B^e/(A^e C^e) + B^{e+g}/(A^e C^{e+g})
///  + B^{e+g}/(A^{e+g} C^e) + B^{e+2g}/(A^{e+g} C^{e+g})`
/// with `A = |x-y|`, `B = |y-z|`, `C = |z-w|`.
pub fn six_term_majorant(p: &StableParams, x: &[f64], y: &[f64], z: &[f64], w: &[f64], gamma: f64) -> f64 {
    let e = p.df() - p.alpha;
    let (a, b, c) = (dist(x, y), dist(y, z), dist(z, w));
    let g = gamma;
    a.powf(-(e + g))
        + c.powf(-(e + g))
        + b.powf(e) / (a * c).powf(e)
        + b.powf(e + g) / (a.powf(e) * c.powf(e + g))
        + b.powf(e + g) / (a.powf(e + g) * c.powf(e))
        + b.powf(e + 2.0 * g) / (a * c).powf(e + g)
}

#[cfg(test)]
mod tests;
