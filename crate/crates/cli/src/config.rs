//! Experiment configuration: a TOML file per run, validated as a whole
//! before any compute starts.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use kresnet_core::boltzmann::DiffusionFn;
use kresnet_core::fokkerplanck::SteadyFamily;
use kresnet_core::numerics::{Axis, BoundaryCondition, Grid, MIN_SOLVER_CELLS};
use kresnet_core::params::{Affine, BiasLaw, NetworkParams, Schedule};
use kresnet_core::profiles::Profile;
use kresnet_core::Activation;

use crate::error::{CliError, CliResult, ConfigIssue};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Meanfield,
    Particles,
    Moments,
    AdjointRetrain,
    FokkerPlanck,
    BoltzmannMc,
    ConvergenceStudy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub kind: ExperimentKind,
    pub activation: Activation,
    #[serde(default)]
    pub seed: u64,
    /// Output directory, relative to the output root unless absolute.
    /// Defaults to `name`.
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub grid: Option<GridSpec>,
    pub initial: Option<InitialSpec>,
    pub network: Option<NetworkSpec>,
    pub time: Option<TimeSpec>,
    pub particles: Option<ParticleSpec>,
    pub kinetic: Option<KineticSpec>,
    pub retrain: Option<RetrainSpec>,
    pub moments: Option<MomentSpec>,
    pub steady: Option<SteadySpec>,
    pub diagnostics: Option<DiagnosticsSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub lower: f64,
    pub upper: f64,
    /// Signed so that a negative count is reported as a config error
    /// rather than a parse failure.
    pub cells: i64,
}

impl AxisSpec {
    fn check(&self, field: &str, min_cells: i64, out: &mut Vec<ConfigIssue>) {
        if !(self.lower.is_finite() && self.upper.is_finite() && self.lower < self.upper) {
            out.push(ConfigIssue::new(
                format!("{field}.lower"),
                format!("need finite lower < upper, got [{}, {}]", self.lower, self.upper),
            ));
        }
        if self.cells < min_cells {
            out.push(ConfigIssue::new(
                format!("{field}.cells"),
                format!("must be at least {min_cells}, got {}", self.cells),
            ));
        }
    }

    pub fn axis(&self) -> kresnet_core::Result<Axis> {
        Axis::new(self.lower, self.upper, self.cells.max(0) as usize)
    }

    /// Parses `lower:upper:cells`, e.g. `2:8:6`.
    pub fn parse(spec: &str) -> CliResult<Self> {
        let bad = |m: String| CliError::Invalid(vec![ConfigIssue::new("gridspec", m)]);
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(bad(format!("expected lower:upper:cells, got `{spec}`")));
        }
        let lower = parts[0].trim().parse::<f64>().map_err(|e| bad(format!("lower `{}`: {e}", parts[0])))?;
        let upper = parts[1].trim().parse::<f64>().map_err(|e| bad(format!("upper `{}`: {e}", parts[1])))?;
        let cells = parts[2].trim().parse::<i64>().map_err(|e| bad(format!("cells `{}`: {e}", parts[2])))?;
        let a = AxisSpec { lower, upper, cells };
        let mut issues = Vec::new();
        a.check("gridspec", 1, &mut issues);
        if issues.is_empty() {
            Ok(a)
        } else {
            Err(CliError::Invalid(issues))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x: AxisSpec,
    pub y: Option<AxisSpec>,
    #[serde(default)]
    pub boundary: BoundaryCondition,
}

impl GridSpec {
    pub fn dim(&self) -> usize {
        if self.y.is_some() {
            2
        } else {
            1
        }
    }

    pub fn build(&self) -> kresnet_core::Result<Grid> {
        match &self.y {
            None => Grid::from_axes(vec![self.x.axis()?]),
            Some(y) => Ok(Grid::plane(self.x.axis()?, y.axis()?)),
        }
    }
}

/// Initial density: a named family, a sample file, or generated line data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSpec {
    Gaussian {
        mean: f64,
        std: f64,
    },
    Uniform {
        lower: f64,
        upper: f64,
    },
    Bimodal {
        left: f64,
        right: f64,
        std: f64,
    },
    Gaussian2d {
        mean: [f64; 2],
        std: [f64; 2],
    },
    /// One sample per line; the histogram on the run grid is the density.
    Histogram { path: PathBuf },
    /// `pairs` noisy point pairs on the line `y = slope x + intercept`,
    /// measured at the two abscissae and reduced to (slope, intercept)
    /// samples, then smoothed by a Gaussian KDE.
    LinePairs {
        pairs: i64,
        slope: f64,
        intercept: f64,
        noise: f64,
        abscissae: [f64; 2],
    },
}

impl InitialSpec {
    pub fn dim(&self) -> usize {
        match self {
            InitialSpec::Gaussian2d { .. } | InitialSpec::LinePairs { .. } => 2,
            _ => 1,
        }
    }

    /// The analytic family, when there is one.
    pub fn profile(&self) -> Option<Profile> {
        match *self {
            InitialSpec::Gaussian { mean, std } => Some(Profile::Gaussian { mean, std }),
            InitialSpec::Uniform { lower, upper } => Some(Profile::Uniform { lower, upper }),
            InitialSpec::Bimodal { left, right, std } => Some(Profile::Bimodal { left, right, std }),
            InitialSpec::Gaussian2d { mean, std } => Some(Profile::Gaussian2d { mean, std }),
            _ => None,
        }
    }

    fn check(&self, field: &str, out: &mut Vec<ConfigIssue>) {
        if let Some(p) = self.profile() {
            if let Err(e) = p.validate() {
                out.push(ConfigIssue::new(field, e.to_string()));
            }
        }
        match self {
            InitialSpec::Histogram { path } => {
                if !path.is_file() {
                    out.push(ConfigIssue::new(format!("{field}.path"), format!("{} does not exist", path.display())));
                }
            }
            InitialSpec::LinePairs {
                pairs,
                noise,
                abscissae,
                slope,
                intercept,
            } => {
                if *pairs < 2 {
                    out.push(ConfigIssue::new(format!("{field}.pairs"), format!("need at least 2, got {pairs}")));
                }
                if !(*noise >= 0.0 && noise.is_finite()) {
                    out.push(ConfigIssue::new(format!("{field}.noise"), format!("{noise} must be non-negative")));
                }
                if !(abscissae[0] != abscissae[1] && abscissae.iter().all(|a| a.is_finite())) {
                    out.push(ConfigIssue::new(format!("{field}.abscissae"), "must be two distinct finite values"));
                }
                if !(slope.is_finite() && intercept.is_finite()) {
                    out.push(ConfigIssue::new(field, "slope and intercept must be finite"));
                }
            }
            _ => {}
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightSpec {
    Scalar(f64),
    Matrix([[f64; 2]; 2]),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BiasSpec {
    Scalar(f64),
    Vector([f64; 2]),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSpec {
    /// End time of the segment; ignored for the last one.
    pub end: f64,
    pub w: f64,
    pub b: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub w: Option<WeightSpec>,
    pub b: Option<BiasSpec>,
    #[serde(default)]
    pub bias: BiasLaw,
    /// Piecewise-constant 1D schedule, replacing `w` and `b`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub segments: Vec<SegmentSpec>,
}

impl NetworkSpec {
    pub fn dim(&self) -> usize {
        match self.w {
            Some(WeightSpec::Matrix(_)) => 2,
            _ => 1,
        }
    }

    fn check(&self, field: &str, out: &mut Vec<ConfigIssue>) {
        let has_segments = !self.segments.is_empty();
        if has_segments && (self.w.is_some() || self.b.is_some()) {
            out.push(ConfigIssue::new(format!("{field}.segments"), "give either segments or w/b, not both"));
        }
        if !has_segments && self.w.is_none() {
            out.push(ConfigIssue::new(format!("{field}.w"), "missing weight"));
        }
        match (self.w, self.b) {
            (Some(WeightSpec::Scalar(_)), Some(BiasSpec::Vector(_))) => {
                out.push(ConfigIssue::new(format!("{field}.b"), "scalar weight needs a scalar bias"));
            }
            (Some(WeightSpec::Matrix(_)), Some(BiasSpec::Scalar(_))) => {
                out.push(ConfigIssue::new(format!("{field}.b"), "matrix weight needs a 2-vector bias"));
            }
            _ => {}
        }
        if self.bias == BiasLaw::MeanPreserving && self.b.is_some() {
            out.push(ConfigIssue::new(format!("{field}.b"), "the mean-preserving bias is computed, not given"));
        }
        if let Err(e) = self.params() {
            out.push(ConfigIssue::new(field, e.to_string()));
        }
    }

    pub fn params(&self) -> kresnet_core::Result<NetworkParams> {
        let (dim, schedule) = if !self.segments.is_empty() {
            let segs = self.segments.iter().map(|s| (s.end, Affine::scalar(s.w, s.b))).collect();
            (1, Schedule::piecewise(segs)?)
        } else {
            let layer = match (self.w.unwrap_or(WeightSpec::Scalar(0.0)), self.b) {
                (WeightSpec::Scalar(w), Some(BiasSpec::Scalar(b))) => Affine::scalar(w, b),
                (WeightSpec::Scalar(w), _) => Affine::scalar(w, 0.0),
                (WeightSpec::Matrix(w), Some(BiasSpec::Vector(b))) => Affine::planar(w, b),
                (WeightSpec::Matrix(w), _) => Affine::planar(w, [0.0; 2]),
            };
            (self.dim(), Schedule::constant(layer))
        };
        let p = NetworkParams {
            dim,
            schedule,
            bias_law: self.bias,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    /// Final time (scaled time for the kinetic runs).
    pub end: f64,
    /// Explicit snapshot times.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub snapshots: Vec<f64>,
    /// Uniform snapshot spacing.
    pub every: Option<f64>,
}

impl TimeSpec {
    fn check(&self, field: &str, out: &mut Vec<ConfigIssue>) {
        if !(self.end > 0.0 && self.end.is_finite()) {
            out.push(ConfigIssue::new(format!("{field}.end"), format!("{} must be positive", self.end)));
        }
        if let Some(e) = self.every {
            if !(e > 0.0 && e.is_finite()) {
                out.push(ConfigIssue::new(format!("{field}.every"), format!("{e} must be positive")));
            } else if self.end / e > 1e5 {
                out.push(ConfigIssue::new(format!("{field}.every"), "more than 1e5 snapshots"));
            }
        }
        if let Some(t) = self.snapshots.iter().find(|t| !(**t >= 0.0 && **t <= self.end)) {
            out.push(ConfigIssue::new(format!("{field}.snapshots"), format!("{t} outside [0, {}]", self.end)));
        }
    }

    /// Sorted, de-duplicated snapshot times, always including 0 and `end`.
    pub fn snapshot_times(&self) -> Vec<f64> {
        let mut t = vec![0.0, self.end];
        t.extend(self.snapshots.iter().copied());
        if let Some(e) = self.every {
            let n = (self.end / e * (1.0 + 1e-12)).floor() as usize;
            // rounded so that 3 × 0.1 prints as 0.3
            t.extend((1..=n).map(|k| (k as f64 * e * 1e12).round() / 1e12).filter(|s| *s < self.end));
        }
        t.sort_by(f64::total_cmp);
        t.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * self.end);
        t
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleSpec {
    pub count: i64,
    pub dt: f64,
    /// Reflect at the grid bounds (1D).
    #[serde(default)]
    pub walls: bool,
    /// Write every n-th Euler step; defaults to about 20 files per run.
    pub record_every: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KineticSpec {
    /// Noise variance `ν²`.
    pub nu2: f64,
    #[serde(default)]
    pub diffusion: DiffusionFn,
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub eps_list: Vec<f64>,
    pub particles: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TargetSpec {
    /// Gaussian of standard deviation `2Δx` centred at `center`.
    Delta { center: f64 },
    Gaussian { mean: f64, std: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetrainSpec {
    pub gamma: f64,
    pub tolerance: f64,
    pub max_iterations: i64,
    pub target: TargetSpec,
    /// Write the forward solution at the horizon for every iterate.
    #[serde(default = "yes")]
    pub iterate_snapshots: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentSpec {
    #[serde(default = "default_order")]
    pub max_order: i64,
    /// `[t1, t2]` for the behaviour classification.
    pub classify: Option<[f64; 2]>,
    /// Variance levels whose threshold times are reported.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub thresholds: Vec<f64>,
}

fn default_order() -> i64 {
    kresnet_core::moments::DEFAULT_MAX_ORDER as i64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteadySpec {
    pub family: SteadyFamily,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSpec {
    /// Report the first time the variance drops to this level (1D).
    pub variance_threshold: Option<f64>,
    /// Report the final mass in each `[lower, upper)` window (1D).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub windows: Vec<[f64; 2]>,
    /// Report the second moment about this point (2D).
    pub center: Option<[f64; 2]>,
}

fn require<'a, T>(v: &'a Option<T>, field: &str, kind: ExperimentKind, out: &mut Vec<ConfigIssue>) -> Option<&'a T> {
    if v.is_none() {
        out.push(ConfigIssue::new(field, format!("required for kind {}", kind_name(kind))));
    }
    v.as_ref()
}

pub fn kind_name(kind: ExperimentKind) -> &'static str {
    match kind {
        ExperimentKind::Meanfield => "meanfield",
        ExperimentKind::Particles => "particles",
        ExperimentKind::Moments => "moments",
        ExperimentKind::AdjointRetrain => "adjoint-retrain",
        ExperimentKind::FokkerPlanck => "fokker-planck",
        ExperimentKind::BoltzmannMc => "boltzmann-mc",
        ExperimentKind::ConvergenceStudy => "convergence-study",
    }
}

fn positive_count(v: i64, field: &str, out: &mut Vec<ConfigIssue>) {
    if v < 1 {
        out.push(ConfigIssue::new(field, format!("must be positive, got {v}")));
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, origin: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Syntax {
            path: origin.to_string(),
            message: e.to_string(),
        })
    }

    /// Reads, resolves and validates a config file.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::from_toml(&text, &path.display().to_string())?;
        cfg.resolve(path.parent());
        cfg.check()?;
        Ok(cfg)
    }

    /// Fills defaults and makes file paths absolute relative to `base`.
    pub fn resolve(&mut self, base: Option<&Path>) {
        if self.output.is_none() {
            self.output = Some(self.name.clone());
        }
        if let Some(InitialSpec::Histogram { path }) = &mut self.initial {
            if path.is_relative() {
                if let Some(base) = base {
                    *path = base.join(&*path);
                }
            }
            if let Ok(abs) = std::path::absolute(&*path) {
                *path = abs;
            }
        }
    }

    pub fn check(&self) -> CliResult<()> {
        let issues = self.validate();
        if issues.is_empty() {
            Ok(())
        } else {
            Err(CliError::Invalid(issues))
        }
    }

    /// Every violated constraint, not just the first.
    pub fn validate(&self) -> Vec<ConfigIssue> {
        use ExperimentKind::*;
        let mut out = Vec::new();
        let kind = self.kind;
        if self.name.trim().is_empty() {
            out.push(ConfigIssue::new("name", "must not be empty"));
        }
        if let Some(o) = &self.output {
            if o.trim().is_empty() {
                out.push(ConfigIssue::new("output", "must not be empty"));
            }
        }

        let needs_grid = matches!(kind, Meanfield | AdjointRetrain | FokkerPlanck | ConvergenceStudy);
        let grid = if needs_grid {
            require(&self.grid, "grid", kind, &mut out)
        } else {
            self.grid.as_ref()
        };
        if let Some(g) = grid {
            let min = if needs_grid { MIN_SOLVER_CELLS as i64 } else { 1 };
            g.x.check("grid.x", min, &mut out);
            if let Some(y) = &g.y {
                y.check("grid.y", min, &mut out);
            }
        }
        let initial = require(&self.initial, "initial", kind, &mut out);
        if let Some(i) = initial {
            i.check("initial", &mut out);
        }
        let network = require(&self.network, "network", kind, &mut out);
        if let Some(n) = network {
            n.check("network", &mut out);
        }
        if let Some(t) = require(&self.time, "time", kind, &mut out) {
            t.check("time", &mut out);
        }

        // dimensions must agree
        let dims: Vec<(&str, usize)> = [
            grid.map(|g| ("grid", g.dim())),
            initial.map(|i| ("initial", i.dim())),
            network.map(|n| ("network", n.dim())),
        ]
        .into_iter()
        .flatten()
        .collect();
        if let Some((first, d)) = dims.first() {
            for (name, e) in &dims[1..] {
                if e != d {
                    out.push(ConfigIssue::new(*name, format!("is {e}D but {first} is {d}D")));
                }
            }
        }
        let dim = dims.first().map(|(_, d)| *d).unwrap_or(1);
        let one_d_only = matches!(kind, Moments | AdjointRetrain | FokkerPlanck | BoltzmannMc | ConvergenceStudy);
        if one_d_only && dim != 1 {
            out.push(ConfigIssue::new("kind", format!("{} runs are 1D", kind_name(kind))));
        }

        match kind {
            Particles => {
                if let Some(p) = require(&self.particles, "particles", kind, &mut out) {
                    self.check_particles(p, dim, &mut out);
                }
            }
            Meanfield => {
                if let Some(p) = &self.particles {
                    self.check_particles(p, dim, &mut out);
                }
            }
            AdjointRetrain => {
                if let Some(r) = require(&self.retrain, "retrain", kind, &mut out) {
                    if !(r.gamma >= 0.0 && r.gamma.is_finite()) {
                        out.push(ConfigIssue::new("retrain.gamma", format!("{} must be non-negative", r.gamma)));
                    }
                    if !(r.tolerance > 0.0) {
                        out.push(ConfigIssue::new("retrain.tolerance", format!("{} must be positive", r.tolerance)));
                    }
                    positive_count(r.max_iterations, "retrain.max_iterations", &mut out);
                    if let TargetSpec::Gaussian { std, .. } = r.target {
                        if !(std > 0.0) {
                            out.push(ConfigIssue::new("retrain.target.std", format!("{std} must be positive")));
                        }
                    }
                }
                if let Some(n) = network {
                    if !n.segments.is_empty() || n.bias != BiasLaw::Fixed {
                        out.push(ConfigIssue::new("network", "retraining needs a constant fixed-bias layer"));
                    }
                }
            }
            FokkerPlanck | BoltzmannMc | ConvergenceStudy => {
                if let Some(k) = require(&self.kinetic, "kinetic", kind, &mut out) {
                    if !(k.nu2 >= 0.0 && k.nu2.is_finite()) {
                        out.push(ConfigIssue::new("kinetic.nu2", format!("{} must be non-negative", k.nu2)));
                    }
                    if kind == BoltzmannMc {
                        match k.eps {
                            None => out.push(ConfigIssue::new("kinetic.eps", "required for boltzmann-mc")),
                            Some(e) if !(e > 0.0 && e <= 1.0) => {
                                out.push(ConfigIssue::new("kinetic.eps", format!("{e} not in (0, 1]")))
                            }
                            _ => {}
                        }
                    }
                    if kind == ConvergenceStudy {
                        if k.eps_list.is_empty() {
                            out.push(ConfigIssue::new("kinetic.eps_list", "required for convergence-study"));
                        }
                        if k.eps_list.windows(2).any(|w| w[1] >= w[0]) {
                            out.push(ConfigIssue::new("kinetic.eps_list", "must be strictly descending"));
                        }
                        if let Some(e) = k.eps_list.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
                            out.push(ConfigIssue::new("kinetic.eps_list", format!("{e} not in (0, 1]")));
                        }
                    }
                    if kind != FokkerPlanck {
                        match k.particles {
                            None => out.push(ConfigIssue::new("kinetic.particles", "required")),
                            Some(m) => positive_count(m, "kinetic.particles", &mut out),
                        }
                    }
                }
                if kind == ConvergenceStudy && initial.is_some_and(|i| i.profile().is_none()) {
                    out.push(ConfigIssue::new("initial.family", "the convergence study needs an analytic family"));
                }
                if self.steady.as_ref().is_some_and(|s| s.family == SteadyFamily::GeneralizedGamma) {
                    out.push(ConfigIssue::new("steady.family", "generalized-gamma needs a support and shape, which configs do not carry"));
                }
                if kind == FokkerPlanck && self.steady.is_some() {
                    if let Some(n) = network {
                        if !n.segments.is_empty() || n.bias != BiasLaw::Fixed {
                            out.push(ConfigIssue::new("steady", "steady models need a constant fixed-bias layer"));
                        }
                    }
                }
            }
            Moments => {
                if let Some(m) = &self.moments {
                    if !(2..=12).contains(&m.max_order) {
                        out.push(ConfigIssue::new("moments.max_order", format!("{} not in [2, 12]", m.max_order)));
                    }
                    if let Some([t1, t2]) = m.classify {
                        if !(0.0 <= t1 && t1 < t2) {
                            out.push(ConfigIssue::new("moments.classify", format!("need 0 <= t1 < t2, got [{t1}, {t2}]")));
                        }
                    }
                    if let Some(v) = m.thresholds.iter().find(|v| !(**v > 0.0)) {
                        out.push(ConfigIssue::new("moments.thresholds", format!("level {v} must be positive")));
                    }
                }
                if matches!(initial, Some(InitialSpec::Histogram { .. })) && self.grid.is_none() {
                    out.push(ConfigIssue::new("grid", "a histogram initial density needs a grid"));
                }
            }
        }

        if let Some(d) = &self.diagnostics {
            if let Some(v) = d.variance_threshold {
                if !(v > 0.0) {
                    out.push(ConfigIssue::new("diagnostics.variance_threshold", format!("{v} must be positive")));
                }
            }
            if let Some(w) = d.windows.iter().find(|w| !(w[0] < w[1])) {
                out.push(ConfigIssue::new("diagnostics.windows", format!("[{}, {}] is empty", w[0], w[1])));
            }
        }
        out
    }

    fn check_particles(&self, p: &ParticleSpec, dim: usize, out: &mut Vec<ConfigIssue>) {
        let from_file = matches!(self.initial, Some(InitialSpec::Histogram { .. }) | Some(InitialSpec::LinePairs { .. }));
        if !from_file {
            positive_count(p.count, "particles.count", out);
        }
        if !(p.dt > 0.0 && p.dt.is_finite()) {
            out.push(ConfigIssue::new("particles.dt", format!("{} must be positive", p.dt)));
        }
        if let Some(r) = p.record_every {
            positive_count(r, "particles.record_every", out);
        }
        if p.walls {
            if dim != 1 {
                out.push(ConfigIssue::new("particles.walls", "walls are 1D only"));
            }
            if self.grid.is_none() {
                out.push(ConfigIssue::new("particles.walls", "walls sit at the grid bounds, so a grid is required"));
            }
        }
    }

    pub fn output_dir(&self) -> &str {
        self.output.as_deref().unwrap_or(&self.name)
    }

    pub fn to_toml(&self) -> CliResult<String> {
        Ok(toml::to_string(self)?)
    }
}
