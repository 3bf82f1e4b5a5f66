//! Experiment configuration: one TOML file with a section per concern.
//!
//! Unknown keys are rejected, so a typo surfaces as a validation error with
//! its path instead of silently falling back to a default.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::conditions_c::ConditionsConfig;
use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, KFatCharacteristics, Point, ReferenceFrame, Shape};
use crate::inequality_lab::SamplerConfig;
use crate::kato::{QuadConfig, YoungCase};
use crate::kernels::StableParams;
use crate::relativistic::RelativisticParams;
use crate::wos::WalkOptions;

/// The studies the runner knows, one per subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Study {
    Certify,
    SampleExit,
    Green,
    Threeg,
    Counterexample,
    Growth,
    Carleson,
    Kato,
    Relativistic,
    Conditions,
}

impl Study {
    pub const ALL: [Study; 10] = [
        Study::Certify,
        Study::SampleExit,
        Study::Green,
        Study::Threeg,
        Study::Counterexample,
        Study::Growth,
        Study::Carleson,
        Study::Kato,
        Study::Relativistic,
        Study::Conditions,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Study::Certify => "certify",
            Study::SampleExit => "sample-exit",
            Study::Green => "green",
            Study::Threeg => "threeg",
            Study::Counterexample => "counterexample",
            Study::Growth => "growth",
            Study::Carleson => "carleson",
            Study::Kato => "kato",
            Study::Relativistic => "relativistic",
            Study::Conditions => "conditions",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessConfig {
    pub alpha: f64,
    /// Mass of the relativistic process; the relativistic study needs it.
    pub mass: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameConfig {
    pub r_char: f64,
    pub kappa: f64,
    /// Green upper-bound constant; calibrated on the unit ball when absent.
    pub c0: Option<f64>,
    pub x0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GreenSourceKind {
    /// Closed-form ball Green function.
    Oracle,
    /// Walk-on-spheres estimates.
    Walk,
    /// Tabulated values from a CSV file.
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GreenConfig {
    /// Defaults to the oracle on balls and to walks elsewhere.
    pub source: Option<GreenSourceKind>,
    #[serde(default = "default_walks")]
    pub n_walks: usize,
    /// CSV with header `x0..,y0..,g,g_err`, relative to the config file.
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub walk: Option<WalkOptions>,
}

fn default_walks() -> usize {
    20_000
}

impl Default for GreenConfig {
    fn default() -> Self {
        Self { source: None, n_walks: default_walks(), path: None, walk: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifyConfig {
    pub n_boundary: usize,
    pub n_radii: usize,
    pub containment_samples: usize,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self { n_boundary: 64, n_radii: 8, containment_samples: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleExitConfig {
    /// Start point; the ball centre when absent.
    pub x: Option<Vec<f64>>,
    pub n: usize,
}

impl Default for SampleExitConfig {
    fn default() -> Self {
        Self { x: None, n: 100_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GreenStudyConfig {
    /// Explicit pairs, each `[x.., y..]` of length `2d`.
    pub pairs: Vec<Vec<f64>>,
    /// Uniformly drawn pairs added after the explicit ones.
    pub n_random: usize,
}

impl Default for GreenStudyConfig {
    fn default() -> Self {
        Self { pairs: Vec::new(), n_random: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThreegConfig {
    /// Gamma reported as `c_hat`; `alpha/2` when absent.
    pub report_gamma: Option<f64>,
    pub gamma_grid: Option<Vec<f64>>,
    pub classical: bool,
}

impl Default for ThreegConfig {
    fn default() -> Self {
        Self { report_gamma: None, gamma_grid: None, classical: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CounterexampleConfig {
    /// `delta = 2^{-k}` for `k_min..=k_max`.
    pub k_min: i32,
    pub k_max: i32,
    pub separation: f64,
    pub gamma: Option<f64>,
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        Self { k_min: 3, k_max: 10, separation: 0.5, gamma: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrowthConfig {
    /// Boundary points; one point of the ball's sphere when empty.
    pub points: Vec<Vec<f64>>,
    /// Outer radius as a fraction of `R`.
    pub r_fraction: f64,
    pub levels: usize,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        Self { points: Vec::new(), r_fraction: 0.4, levels: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CarlesonConfig {
    pub q: Option<Vec<f64>>,
    /// `r` as a fraction of `kappa R / 4`.
    pub r_fraction: f64,
    pub y: Option<Vec<f64>>,
    pub n_probe: usize,
}

impl Default for CarlesonConfig {
    fn default() -> Self {
        Self { q: None, r_fraction: 0.5, y: None, n_probe: 5_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KatoConfig {
    /// Power exponents of `F = |y-z|^beta`; `{alpha+0.1, alpha+0.5, 2 alpha, 2}`
    /// when absent.
    pub betas: Option<Vec<f64>>,
    pub gamma: Option<f64>,
    pub cases: Vec<YoungCase>,
    /// Interior `(x, w)` pairs from the boundary-biased sampler.
    pub n_pairs: usize,
    pub quad: QuadConfig,
    /// Also run the single integral with `q = 1` at each pair.
    pub s_infty: bool,
    /// Also run the relativistic `F^m` when `process.mass` is set.
    pub relativistic: bool,
}

impl Default for KatoConfig {
    fn default() -> Self {
        Self {
            betas: None,
            gamma: None,
            cases: vec![YoungCase::F1, YoungCase::F2, YoungCase::F3, YoungCase::F4],
            n_pairs: 8,
            quad: QuadConfig::default(),
            s_infty: true,
            relativistic: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RelativisticConfig {
    pub r_min: f64,
    pub r_max: f64,
    pub n_grid: usize,
    /// Upper end of the small-`r` regime used for the slope fit.
    pub small_r: f64,
    /// Depths `2^{-j}`, `j = 1..=n_depths`, at which `q^m` is evaluated on a ball.
    pub n_depths: usize,
}

impl Default for RelativisticConfig {
    fn default() -> Self {
        Self { r_min: 1e-3, r_max: 10.0, n_grid: 49, small_r: 1e-2, n_depths: 6 }
    }
}

/// The whole file. Study sections that a run does not use are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// If present, must match the subcommand.
    pub study: Option<Study>,
    #[serde(default)]
    pub seed: u64,
    /// Output directory; `--out` takes precedence.
    pub out: Option<PathBuf>,
    pub domain: Shape,
    pub process: ProcessConfig,
    pub frame: Option<FrameConfig>,
    #[serde(default)]
    pub green: GreenConfig,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub certify: CertifyConfig,
    #[serde(default)]
    pub sample_exit: SampleExitConfig,
    #[serde(default)]
    pub green_study: GreenStudyConfig,
    #[serde(default)]
    pub threeg: ThreegConfig,
    #[serde(default)]
    pub counterexample: CounterexampleConfig,
    #[serde(default)]
    pub growth: GrowthConfig,
    #[serde(default)]
    pub carleson: CarlesonConfig,
    #[serde(default)]
    pub kato: KatoConfig,
    #[serde(default)]
    pub relativistic: RelativisticConfig,
    #[serde(default)]
    pub conditions: ConditionsConfig,
}

/// Wrap a module error with the config path it came from.
pub(crate) fn at(path: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::Config { .. } => e,
        other => Error::Config { path: path.to_string(), reason: other.to_string() },
    }
}

fn bad(path: &str, reason: impl Into<String>) -> Error {
    Error::Config { path: path.to_string(), reason: reason.into() }
}

/// Validated objects built from a config.
pub struct Resolved {
    pub p: StableParams,
    pub domain: DomainSpec,
    pub kfat: Option<KFatCharacteristics>,
    pub frame_cfg: Option<FrameConfig>,
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let span = e.span().map(|s| format!(" (bytes {}..{})", s.start, s.end)).unwrap_or_default();
            bad("config", format!("{}{span}", e.message()))
        })
    }

    pub fn load(path: &Path) -> Result<(Self, Vec<u8>)> {
        let bytes = std::fs::read(path).map_err(|e| bad(&path.display().to_string(), e.to_string()))?;
        let text = std::str::from_utf8(&bytes).map_err(|e| bad("config", e.to_string()))?;
        Ok((Self::parse(text)?, bytes))
    }

    /// Check every field against the preconditions of the modules the
    /// studies call, naming the offending path.
    pub fn resolve(&self, study: Study, base_dir: &Path) -> Result<Resolved> {
        if let Some(s) = self.study {
            if s != study {
                return Err(bad("study", format!("config is for `{}`, run as `{}`", s.name(), study.name())));
            }
        }
        let domain = DomainSpec::new(self.domain.clone()).map_err(at("domain"))?;
        let p = StableParams::new(domain.dim(), self.process.alpha).map_err(at("process.alpha"))?;
        if let Some(m) = self.process.mass {
            RelativisticParams::new(p, m).map_err(at("process.mass"))?;
        }
        let kfat = match (&self.frame, domain.shape()) {
            (Some(f), _) => Some(KFatCharacteristics::new(f.r_char, f.kappa).map_err(|e| match e {
                Error::InvalidParameter { name, reason } => {
                    bad(if name == "kappa" { "frame.kappa" } else { "frame.r_char" }, reason)
                }
                other => at("frame")(other),
            })?),
            (None, Shape::Ball { radius, .. }) => Some(KFatCharacteristics::new(*radius, 0.5)?),
            (None, _) => None,
        };
        self.sampler.validate().map_err(at("sampler"))?;
        self.green.walk.unwrap_or_default().validate().map_err(at("green.walk"))?;
        if self.green.n_walks == 0 {
            return Err(bad("green.n_walks", "must be at least 1"));
        }
        if self.green.source == Some(GreenSourceKind::Oracle) && !matches!(domain.shape(), Shape::Ball { .. }) {
            return Err(bad("green.source", "the closed-form oracle exists only for balls"));
        }
        if self.green.source == Some(GreenSourceKind::Table) && self.green.path.is_none() {
            return Err(bad("green.path", "a table source needs a path"));
        }
        let d = domain.dim();
        let needs_frame = matches!(study, Study::Growth | Study::Carleson | Study::Conditions | Study::Certify);
        if needs_frame && kfat.is_none() {
            return Err(bad("frame", "r_char and kappa are required for non-ball domains"));
        }
        match study {
            Study::SampleExit => {
                check_point("sample_exit.x", self.sample_exit.x.as_deref(), d)?;
                if self.sample_exit.n == 0 {
                    return Err(bad("sample_exit.n", "must be at least 1"));
                }
            }
            Study::Green => {
                for (i, pair) in self.green_study.pairs.iter().enumerate() {
                    if pair.len() != 2 * d {
                        return Err(bad(&format!("green_study.pairs[{i}]"), format!("needs {} coordinates", 2 * d)));
                    }
                }
                if self.green_study.pairs.is_empty() && self.green_study.n_random == 0 {
                    return Err(bad("green_study", "no pairs to evaluate"));
                }
            }
            Study::Threeg => {
                for (name, g) in [("threeg.report_gamma", self.threeg.report_gamma)] {
                    if g.is_some_and(|g| !(g >= 0.0 && g.is_finite())) {
                        return Err(bad(name, "must be finite and non-negative"));
                    }
                }
            }
            Study::Counterexample => {
                let c = &self.counterexample;
                if c.k_min > c.k_max || c.k_min < 1 {
                    return Err(bad("counterexample.k_min", "need 1 <= k_min <= k_max"));
                }
            }
            Study::Growth => {
                let g = &self.growth;
                if !(g.r_fraction > 0.0 && g.r_fraction < 1.0) {
                    return Err(bad("growth.r_fraction", "must lie in (0, 1)"));
                }
                if g.levels < 3 {
                    return Err(bad("growth.levels", "need at least three levels"));
                }
                for (i, q) in g.points.iter().enumerate() {
                    check_point(&format!("growth.points[{i}]"), Some(q), d)?;
                }
            }
            Study::Carleson => {
                let c = &self.carleson;
                if !(c.r_fraction > 0.0 && c.r_fraction < 1.0) {
                    return Err(bad("carleson.r_fraction", "must lie in (0, 1)"));
                }
                check_point("carleson.q", c.q.as_deref(), d)?;
                check_point("carleson.y", c.y.as_deref(), d)?;
            }
            Study::Kato => {
                let k = &self.kato;
                k.quad.validate().map_err(at("kato.quad"))?;
                if k.n_pairs == 0 {
                    return Err(bad("kato.n_pairs", "must be at least 1"));
                }
                if let Some(g) = k.gamma {
                    if !(g > 0.0 && g < p.alpha) {
                        return Err(bad("kato.gamma", "need 0 < gamma < alpha"));
                    }
                }
            }
            Study::Relativistic => {
                if self.process.mass.is_none() {
                    return Err(bad("process.mass", "the relativistic study needs a mass"));
                }
                let r = &self.relativistic;
                if !(r.r_min > 0.0 && r.r_max > r.r_min && r.n_grid >= 3) {
                    return Err(bad("relativistic.r_min", "need 0 < r_min < r_max and n_grid >= 3"));
                }
            }
            Study::Conditions => self.conditions.validate().map_err(at("conditions"))?,
            Study::Certify => {
                let c = &self.certify;
                if c.n_boundary == 0 || c.n_radii == 0 {
                    return Err(bad("certify.n_boundary", "grid sizes must be at least 1"));
                }
            }
        }
        Ok(Resolved { p, domain, kfat, frame_cfg: self.frame.clone(), base_dir: base_dir.to_path_buf() })
    }
}

fn check_point(path: &str, x: Option<&[f64]>, d: usize) -> Result<()> {
    match x {
        Some(x) if x.len() != d => Err(bad(path, format!("needs {d} coordinates, got {}", x.len()))),
        Some(x) if x.iter().any(|v| !v.is_finite()) => Err(bad(path, "coordinates must be finite")),
        _ => Ok(()),
    }
}

impl Resolved {
    /// The reference frame, with `c0` from the config or calibrated.
    pub fn frame(&self, seed: u64) -> Result<ReferenceFrame> {
        let kfat = self.kfat.ok_or_else(|| bad("frame", "required for this study"))?;
        let mut f = ReferenceFrame::new(&self.domain, kfat).map_err(at("frame"))?;
        let c0 = match self.frame_cfg.as_ref().and_then(|f| f.c0) {
            Some(c) => c,
            None => crate::wos::calibrate_c0(&self.p, 20_000, seed),
        };
        f = f.with_c0(c0).map_err(at("frame.c0"))?;
        if let Some(x0) = self.frame_cfg.as_ref().and_then(|f| f.x0.clone()) {
            f = f.with_x0(&self.domain, Point(x0)).map_err(at("frame.x0"))?;
        }
        Ok(f)
    }

    pub fn resolve_path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}
