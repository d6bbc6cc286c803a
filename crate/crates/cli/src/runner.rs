//! Executes a validated config and writes its outputs.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use kresnet_core::adjoint::{regularized_delta, retrain, RetrainConfig, RetrainStatus};
use kresnet_core::boltzmann::{grazing_convergence_study, mc_evolve, GrazingSetup, KineticConfig};
use kresnet_core::fokkerplanck::{solve_fp, verify_steady_state, FokkerPlanckProblem, SteadyFamily, SteadyStateModel};
use kresnet_core::meanfield::{
    field_moment, field_moment_2d, mass_between, second_moment_about, solve_meanfield, solve_meanfield_with,
    MeanFieldProblem, MeanFieldSolution,
};
use kresnet_core::moments::{
    classify_behavior, gaussian_moments, linearize_params, moment_trajectory, threshold_time, ThresholdCase,
};
use kresnet_core::numerics::{BoundaryCondition, DensityField, Grid};
use kresnet_core::params::{BiasLaw, NetworkParams};
use kresnet_core::particles::{empirical_density, integrate_ode, euler_steps, OdeOptions, ParticleEnsemble, Walls};
use kresnet_core::profiles::{kde_field, silverman_bandwidth, Profile};
use kresnet_core::{Activation, Execution};

use crate::config::{ExperimentConfig, ExperimentKind, InitialSpec, TargetSpec};
use crate::error::{CliError, CliResult};
use crate::ingest::{ingest_histogram, line_pair_points, read_samples, regression_preprocess};
use crate::output::{
    write_atomic, Conservation, MassRecord, RunDir, RunManifest, MANIFEST_FILE, RESOLVED_CONFIG_FILE,
};

/// Environment variable overriding the output root.
pub const OUTPUT_ROOT_ENV: &str = "KRESNET_OUTPUT_ROOT";
pub const DEFAULT_OUTPUT_ROOT: &str = "runs";

/// Distance to a wall under which a particle counts as having reached it.
pub const WALL_TOLERANCE: f64 = 1e-2;

/// Target number of trajectory files for particle runs.
const TRAJECTORY_FILES: usize = 20;

pub fn output_root() -> std::path::PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV)
        .filter(|v| !v.is_empty())
        .map(Into::into)
        .unwrap_or_else(|| DEFAULT_OUTPUT_ROOT.into())
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    pub exec: Execution,
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    opts: RunOptions,
    dir: RunDir,
    diagnostics: BTreeMap<String, Value>,
    warnings: Vec<String>,
    ledger: Vec<MassRecord>,
    conservation: Option<Conservation>,
}

impl Ctx<'_> {
    fn diag(&mut self, key: &str, v: impl Into<Value>) {
        self.diagnostics.insert(key.to_string(), v.into());
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.cfg.seed)
    }

    fn grid(&self) -> CliResult<Grid> {
        Ok(self.cfg.grid.as_ref().expect("validated").build()?)
    }

    fn boundary(&self) -> BoundaryCondition {
        self.cfg.grid.as_ref().map(|g| g.boundary).unwrap_or_default()
    }

    fn params(&self) -> CliResult<NetworkParams> {
        Ok(self.cfg.network.as_ref().expect("validated").params()?)
    }

    fn initial(&self) -> &InitialSpec {
        self.cfg.initial.as_ref().expect("validated")
    }

    fn final_time(&self) -> f64 {
        self.cfg.time.as_ref().expect("validated").end
    }

    fn times(&self) -> Vec<f64> {
        self.cfg.time.as_ref().expect("validated").snapshot_times()
    }

    fn act(&self) -> Activation {
        self.cfg.activation
    }
}

/// Runs a config, writing CSVs, `resolved_config.toml` and the manifest
/// into `<root>/<output>`.
pub fn run(cfg: &ExperimentConfig, root: &Path, opts: RunOptions) -> CliResult<RunManifest> {
    cfg.check()?;
    let start = Instant::now();
    let dir = RunDir::create(root.join(cfg.output_dir()))?;
    let run_dir = dir.path().display().to_string();
    write_atomic(&dir.path().join(RESOLVED_CONFIG_FILE), cfg.to_toml()?.as_bytes())?;
    let mut ctx = Ctx {
        cfg,
        opts,
        dir,
        diagnostics: BTreeMap::new(),
        warnings: Vec::new(),
        ledger: Vec::new(),
        conservation: None,
    };
    ctx.diag("final_time", cfg.time.as_ref().map(|t| t.end).unwrap_or(0.0));
    let deferred = match cfg.kind {
        ExperimentKind::Meanfield => run_meanfield(&mut ctx).map(|_| None),
        ExperimentKind::Particles => run_particles(&mut ctx).map(|_| None),
        ExperimentKind::Moments => run_moments(&mut ctx).map(|_| None),
        ExperimentKind::AdjointRetrain => run_retrain(&mut ctx),
        ExperimentKind::FokkerPlanck => run_fokker_planck(&mut ctx).map(|_| None),
        ExperimentKind::BoltzmannMc => run_boltzmann(&mut ctx).map(|_| None),
        ExperimentKind::ConvergenceStudy => run_convergence(&mut ctx).map(|_| None),
    }?;
    let manifest = RunManifest {
        name: cfg.name.clone(),
        kind: cfg.kind,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        wall_time_s: start.elapsed().as_secs_f64(),
        run_dir,
        config: cfg.clone(),
        mass_ledger: ctx.ledger,
        conservation: ctx.conservation,
        diagnostics: ctx.diagnostics,
        warnings: ctx.warnings,
        outputs: ctx.dir.into_files(),
    };
    let path = Path::new(&manifest.run_dir).join(MANIFEST_FILE);
    write_atomic(&path, serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    match deferred {
        Some(err) => Err(err),
        None => Ok(manifest),
    }
}

/// Exact raw moments `m₀ ..= m_K` of the analytic 1D families.
fn profile_moments(p: &Profile, k: usize) -> Option<Vec<f64>> {
    match *p {
        Profile::Gaussian { mean, std } => Some(gaussian_moments(mean, std * std, k)),
        Profile::Uniform { lower, upper } => Some(
            (0..=k as i32)
                .map(|j| (upper.powi(j + 1) - lower.powi(j + 1)) / ((j + 1) as f64 * (upper - lower)))
                .collect(),
        ),
        Profile::Bimodal { left, right, std } => {
            let (a, b) = (gaussian_moments(left, std * std, k), gaussian_moments(right, std * std, k));
            Some(a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect())
        }
        Profile::Gaussian2d { .. } => None,
    }
}

fn field_moments(f: &DensityField, k: usize) -> Vec<f64> {
    (0..=k as u32).map(|j| field_moment(f, j)).collect()
}

/// (slope, intercept) samples for line-pair initial data, written alongside.
fn line_pair_samples(ctx: &mut Ctx) -> CliResult<Vec<f64>> {
    let InitialSpec::LinePairs {
        pairs,
        slope,
        intercept,
        noise,
        abscissae,
    } = ctx.initial().clone()
    else {
        unreachable!("caller matched LinePairs")
    };
    let mut rng = ctx.rng();
    let points = line_pair_points(pairs as usize, slope, intercept, noise, abscissae, &mut rng);
    let reg = regression_preprocess(&points);
    ctx.warnings.extend(reg.warnings());
    ctx.dir.csv(
        "points.csv",
        "generated noisy measurements, consecutive rows form a pair",
        &[("x", "input"), ("y", "output")],
        None,
        points.iter().map(|p| p.to_vec()),
    )?;
    ctx.dir.csv(
        "regression_samples.csv",
        "slope and intercept of each pair",
        &[("m", "slope"), ("q", "intercept")],
        None,
        reg.pairs.iter().map(|p| p.to_vec()),
    )?;
    Ok(reg.flat())
}

fn initial_field(ctx: &mut Ctx, grid: &Grid) -> CliResult<DensityField> {
    let bc = ctx.boundary();
    let spec = ctx.initial().clone();
    let f = match &spec {
        InitialSpec::Histogram { path } => ingest_histogram(&read_samples(path)?, grid, bc)?,
        InitialSpec::LinePairs { .. } => {
            let flat = line_pair_samples(ctx)?;
            let (m, q): (Vec<f64>, Vec<f64>) = flat.chunks(2).map(|p| (p[0], p[1])).unzip();
            let h = [silverman_bandwidth(&m), silverman_bandwidth(&q)];
            ctx.diag("kde_bandwidth", json!(h));
            kde_field(&flat, grid, &h, bc)?
        }
        other => other.profile().expect("analytic family").field(grid, bc)?,
    };
    Ok(f)
}

/// Initial particles: drawn from the family, or the file's samples.
fn initial_ensemble(ctx: &mut Ctx, count: i64) -> CliResult<ParticleEnsemble> {
    let spec = ctx.initial().clone();
    match &spec {
        InitialSpec::Histogram { path } => Ok(ParticleEnsemble::from_positions(read_samples(path)?)?),
        InitialSpec::LinePairs { .. } => Ok(ParticleEnsemble::new(2, line_pair_samples(ctx)?)?),
        other => {
            let p = other.profile().expect("analytic family");
            let xs = p.sample(count as usize, &mut ctx.rng());
            Ok(ParticleEnsemble::new(p.dim(), xs)?)
        }
    }
}

fn record_solution(ctx: &mut Ctx, sol: &MeanFieldSolution) -> CliResult<()> {
    for (i, (t, s)) in sol.times.iter().zip(&sol.snapshots).enumerate() {
        ctx.dir.field(&format!("snapshots/g_{i:04}.csv"), "density snapshot", s, Some(*t))?;
        ctx.ledger.push(MassRecord {
            t: *t,
            mass: s.mass(),
            drift: (s.mass() - sol.stats.initial_mass).abs(),
        });
    }
    let steps = sol.stats.steps;
    ctx.conservation = Some(Conservation {
        zero_flux: ctx.boundary() == BoundaryCondition::ZeroFlux,
        steps,
        max_mass_drift: sol.stats.max_mass_drift,
        drift_per_1000_steps: sol.stats.max_mass_drift * 1000.0 / steps.max(1) as f64,
    });
    ctx.diag("steps", steps as u64);
    ctx.diag("min_value", sol.stats.min_value);
    let last = sol.snapshots.last().expect("at least one snapshot");
    ctx.diag("final_mass", last.mass());
    if last.grid.dim() == 1 {
        let rows = sol.times.iter().zip(&sol.snapshots).map(|(t, s)| {
            let m = field_moments(s, 2);
            vec![*t, m[0], m[1], m[2], m[2] - m[1] * m[1]]
        });
        ctx.dir.csv(
            "moments.csv",
            "moments of the computed density (midpoint rule)",
            &[("t", "time"), ("m0", "mass"), ("m1", "state"), ("m2", "state^2"), ("variance", "state^2")],
            None,
            rows,
        )?;
        let x = last.grid.x().clone();
        let dx = x.width();
        let (lo, hi) = (x.lower, x.upper);
        ctx.diag("mass_lower_wall_cell", mass_between(last, lo, lo + dx));
        ctx.diag("mass_upper_wall_cell", mass_between(last, hi - dx, hi + dx));
        let windows = ctx.cfg.diagnostics.as_ref().map(|d| d.windows.clone()).unwrap_or_default();
        let masses: Vec<f64> = windows.iter().map(|w| mass_between(last, w[0], w[1])).collect();
        if !masses.is_empty() {
            ctx.diag("window_masses", json!(masses));
        }
    } else {
        let center = ctx.cfg.diagnostics.as_ref().and_then(|d| d.center).unwrap_or([0.0; 2]);
        let rows = sol.times.iter().zip(&sol.snapshots).map(|(t, s)| {
            vec![
                *t,
                s.mass(),
                field_moment_2d(s, 1, 0),
                field_moment_2d(s, 0, 1),
                second_moment_about(s, center),
            ]
        });
        ctx.dir.csv(
            "moments.csv",
            "mass, first moments and the second moment about diagnostics.center",
            &[
                ("t", "time"),
                ("m0", "mass"),
                ("m10", "state"),
                ("m01", "state"),
                ("second_moment_about_center", "state^2"),
            ],
            None,
            rows,
        )?;
        let first = &sol.snapshots[0];
        let (s0, s1) = (second_moment_about(first, center), second_moment_about(last, center));
        ctx.diag("center", json!(center));
        ctx.diag("second_moment_initial", s0);
        ctx.diag("second_moment_final", s1);
        ctx.diag("second_moment_ratio", s1 / s0);
    }
    Ok(())
}

/// First crossing `V(t) ≤ level`, linearly interpolated between steps.
#[derive(Default)]
struct Crossing {
    level: f64,
    prev: Option<(f64, f64)>,
    time: Option<f64>,
}

impl Crossing {
    fn observe(&mut self, t: f64, v: f64) {
        if self.time.is_some() {
            return;
        }
        if v <= self.level {
            self.time = Some(match self.prev {
                Some((t0, v0)) if v0 > v => t0 + (t - t0) * (v0 - self.level) / (v0 - v),
                _ => t,
            });
        }
        self.prev = Some((t, v));
    }
}

fn run_meanfield(ctx: &mut Ctx) -> CliResult<()> {
    let grid = ctx.grid()?;
    let g0 = initial_field(ctx, &grid)?;
    let params = ctx.params()?;
    let t_end = ctx.final_time();
    let times = ctx.times();
    let mut prob = MeanFieldProblem::new(g0.clone(), params.clone(), ctx.act(), t_end);
    prob.exec = ctx.opts.exec;

    let level = ctx.cfg.diagnostics.as_ref().and_then(|d| d.variance_threshold);
    let mut crossing = level.map(|level| Crossing {
        level,
        ..Default::default()
    });
    let centers = grid.x().centers();
    let dx = grid.x().width();
    let sol = solve_meanfield_with(&prob, &times, |t, u, _| {
        if let Some(c) = crossing.as_mut() {
            let (mut m1, mut m2) = (0.0, 0.0);
            for (x, g) in centers.iter().zip(u) {
                m1 += g * x;
                m2 += g * x * x;
            }
            let (m1, m2) = (m1 * dx, m2 * dx);
            c.observe(t, m2 - m1 * m1);
        }
    })?;
    record_solution(ctx, &sol)?;

    if let (Some(c), Some(level)) = (crossing, level) {
        match c.time {
            Some(t) => ctx.diag("variance_crossing_time", t),
            None => ctx.warnings.push(format!("variance never reached {level} before T = {t_end}")),
        }
        if let Some((w, 0.0)) = params.as_constant_scalar() {
            let m0 = field_moments(&g0, 2);
            match threshold_time(level, w, ThresholdCase::ZeroBiasVariance, &m0) {
                Ok(t) => ctx.diag("variance_threshold_time_closed_form", t),
                Err(e) => ctx.warnings.push(format!("closed-form threshold time: {e}")),
            }
        }
    }

    // closed-form moments for the linear network
    if grid.dim() == 1 && ctx.act() == Activation::Identity {
        let m0 = field_moments(&g0, 4);
        match moment_trajectory(&params, &m0, &times) {
            Ok(traj) => {
                let mut worst: f64 = 0.0;
                for (s, snap) in traj.iter().zip(&sol.snapshots) {
                    let m = field_moments(snap, 2);
                    let v = m[2] - m[1] * m[1];
                    worst = worst
                        .max((s.moments[1] - m[1]).abs())
                        .max((s.moments[2] - m[2]).abs())
                        .max((s.variance() - v).abs());
                }
                ctx.diag("closed_form_max_moment_error", worst);
                write_moment_table(ctx, "closed_moments.csv", "closed-form moments", &traj)?;
            }
            Err(e) => ctx.warnings.push(format!("closed-form moments unavailable: {e}")),
        }
    }

    if let Some(p) = ctx.cfg.particles.clone() {
        let e0 = initial_ensemble(ctx, p.count)?;
        let walls = p.walls.then(|| Walls {
            lower: grid.x().lower,
            upper: grid.x().upper,
        });
        let opts = OdeOptions {
            walls,
            record_every: usize::MAX,
            exec: ctx.opts.exec,
        };
        let traj = integrate_ode(&e0, &params, &ctx.act(), t_end, p.dt, opts)?;
        let last = traj.last().expect("final state");
        let dim = e0.dim();
        ctx.dir.ensemble("particles_initial.csv", "companion particles at t = 0", dim, e0.states(), Some(0.0))?;
        ctx.dir.ensemble("particles_final.csv", "companion particles at T", dim, last.states(), Some(t_end))?;
        ctx.diag("particles", e0.len() as u64);
        if let Some(w) = walls {
            wall_diagnostics(ctx, last.states(), w);
        }
    }
    Ok(())
}

fn wall_diagnostics(ctx: &mut Ctx, xs: &[f64], w: Walls) {
    let dist = |x: &f64| (x - w.lower).abs().min((w.upper - x).abs());
    let worst = xs.iter().map(dist).fold(0.0, f64::max);
    let near = xs.iter().filter(|x| dist(x) <= WALL_TOLERANCE).count();
    ctx.diag("particles_max_wall_distance", worst);
    ctx.diag("particles_at_walls_fraction", near as f64 / xs.len() as f64);
    ctx.diag("particles_at_lower_wall", xs.iter().filter(|x| (*x - w.lower).abs() <= WALL_TOLERANCE).count() as u64);
    ctx.diag("particles_at_upper_wall", xs.iter().filter(|x| (w.upper - *x).abs() <= WALL_TOLERANCE).count() as u64);
}

fn run_particles(ctx: &mut Ctx) -> CliResult<()> {
    let p = ctx.cfg.particles.clone().expect("validated");
    let e0 = initial_ensemble(ctx, p.count)?;
    let params = ctx.params()?;
    let t_end = ctx.final_time();
    let steps = euler_steps(t_end, p.dt);
    let every = p
        .record_every
        .map(|r| r as usize)
        .unwrap_or_else(|| steps.div_ceil(TRAJECTORY_FILES).max(1));
    let walls = if p.walls {
        let x = ctx.grid()?.x().clone();
        Some(Walls {
            lower: x.lower,
            upper: x.upper,
        })
    } else {
        None
    };
    let opts = OdeOptions {
        walls,
        record_every: every,
        exec: ctx.opts.exec,
    };
    let traj = integrate_ode(&e0, &params, &ctx.act(), t_end, p.dt, opts)?;
    let dim = e0.dim();
    // snapshot n sits at step n·every, except the final state
    let step_of = |i: usize| if i + 1 == traj.len() { steps } else { i * every };
    let mut rows = Vec::with_capacity(traj.len());
    for (i, e) in traj.iter().enumerate() {
        let n = step_of(i);
        let t = if n == steps { t_end } else { n as f64 * p.dt };
        ctx.dir.ensemble(&format!("particles/step_{n:07}.csv"), "particle states", dim, e.states(), Some(t))?;
        let m = e.mean();
        rows.push(vec![t, m[0], m[1], e.variance()]);
    }
    ctx.dir.csv(
        "particle_moments.csv",
        "ensemble mean and variance of the first coordinate",
        &[("t", "time"), ("mean_x", "state"), ("mean_y", "state"), ("variance_x", "state^2")],
        None,
        rows,
    )?;
    ctx.diag("particles", e0.len() as u64);
    ctx.diag("euler_steps", steps as u64);
    if let Some(w) = walls {
        wall_diagnostics(ctx, traj.last().expect("final").states(), w);
    }
    Ok(())
}

fn write_moment_table(ctx: &mut Ctx, rel: &str, description: &str, traj: &[kresnet_core::moments::MomentState]) -> CliResult<()> {
    let k = traj[0].moments.len() - 1;
    let names: Vec<String> = (0..=k).map(|j| format!("m{j}")).collect();
    let units: Vec<String> = (0..=k).map(|j| if j == 0 { "mass".to_string() } else { format!("state^{j}") }).collect();
    let mut cols: Vec<(&str, &str)> = vec![("t", "time")];
    cols.extend(names.iter().map(String::as_str).zip(units.iter().map(String::as_str)));
    cols.push(("variance", "state^2"));
    let rows = traj.iter().map(|s| {
        let mut r = vec![s.time];
        r.extend(&s.moments);
        r.push(s.variance());
        r
    });
    ctx.dir.csv(rel, description, &cols, None, rows)
}

fn run_moments(ctx: &mut Ctx) -> CliResult<()> {
    let spec = ctx.cfg.moments.clone();
    let k = spec.as_ref().map(|m| m.max_order as usize).unwrap_or(kresnet_core::moments::DEFAULT_MAX_ORDER);
    let initial = match ctx.initial().profile().and_then(|p| profile_moments(&p, k)) {
        Some(m) => m,
        None => {
            let grid = ctx.grid()?;
            field_moments(&initial_field(ctx, &grid)?, k)
        }
    };
    let mut params = ctx.params()?;
    if ctx.act() != Activation::Identity {
        params = linearize_params(&params, &ctx.act())?;
        ctx.warnings
            .push(format!("moments use the linearisation of {} at the origin", ctx.act()));
    }
    let traj = moment_trajectory(&params, &initial, &ctx.times())?;
    write_moment_table(ctx, "moments.csv", "closed-form moments", &traj)?;
    let Some(spec) = spec else { return Ok(()) };
    if let Some([t1, t2]) = spec.classify {
        let f = classify_behavior(&params, &initial, t1, t2)?;
        ctx.diag("local_energy_bound", f.local_energy_bound);
        ctx.diag("energy_decay", f.energy_decay);
        ctx.diag("local_aggregation", f.local_aggregation);
        ctx.diag("aggregation", f.aggregation);
        ctx.diag("clustering", f.clustering);
        if let Some(d) = f.delta_location {
            ctx.diag("delta_location", d);
        }
    }
    if !spec.thresholds.is_empty() {
        let layer = params.schedule.final_layer();
        let case = match params.bias_law {
            BiasLaw::MeanPreserving => ThresholdCase::MeanPreservingVariance,
            BiasLaw::Fixed => ThresholdCase::ZeroBiasVariance,
        };
        let fixed_nonzero = params.bias_law == BiasLaw::Fixed && layer.b[0] != 0.0;
        if !params.schedule.is_constant() || fixed_nonzero {
            ctx.warnings.push("threshold times need a constant w and b = 0 or the mean-preserving bias".into());
        } else {
            let mut out = Vec::new();
            for level in &spec.thresholds {
                out.push(json!({"level": level, "time": threshold_time(*level, layer.w[0][0], case, &initial)?}));
            }
            ctx.diag("threshold_times", Value::Array(out));
        }
    }
    Ok(())
}

/// Runs retraining. A divergence is returned as a deferred error so that
/// the log and manifest are still written.
fn run_retrain(ctx: &mut Ctx) -> CliResult<Option<CliError>> {
    let r = ctx.cfg.retrain.clone().expect("validated");
    let grid = ctx.grid()?;
    let bc = ctx.boundary();
    let g0 = initial_field(ctx, &grid)?;
    let h = match r.target {
        TargetSpec::Delta { center } => regularized_delta(center, &grid)?,
        TargetSpec::Gaussian { mean, std } => Profile::Gaussian { mean, std }.field(&grid, bc)?,
    };
    let params0 = ctx.params()?;
    let horizon = ctx.final_time();
    let cfg = RetrainConfig {
        step_size: r.gamma,
        tolerance: r.tolerance,
        max_iterations: r.max_iterations as usize,
        horizon,
    };
    let out = retrain(&params0, &ctx.act(), &g0, &h, &cfg)?;
    ctx.dir.field("target.csv", "target density h", &h, Some(horizon))?;
    ctx.dir.field("initial.csv", "initial density", &g0, Some(0.0))?;
    ctx.dir.csv(
        "retrain_log.csv",
        "one row per iterate; step_l1 = |w_{k+1} - w_k| + |b_{k+1} - b_k|",
        &[("k", "iteration"), ("w", "weight"), ("b", "bias"), ("loss", "state^-1"), ("step_l1", "parameter")],
        None,
        out.log.iter().map(|rec| vec![rec.k as f64, rec.w, rec.b, rec.loss, rec.step]),
    )?;
    if r.iterate_snapshots {
        for rec in &out.log {
            let prob = MeanFieldProblem::new(
                g0.clone(),
                NetworkParams::constant_1d(rec.w, rec.b),
                ctx.act(),
                horizon,
            );
            let sol = solve_meanfield(&prob, &[horizon])?;
            ctx.dir.field(
                &format!("iterates/g_k{:03}.csv", rec.k),
                "forward solution at the horizon for this iterate",
                &sol.snapshots[0],
                Some(horizon),
            )?;
        }
    }
    let losses: Vec<f64> = out.log.iter().map(|r| r.loss).collect();
    let first = losses[0];
    let last = *losses.last().expect("non-empty log");
    ctx.diag("iterations", out.log.len() as u64);
    ctx.diag("initial_loss", first);
    ctx.diag("final_loss", last);
    ctx.diag("final_to_initial_loss", last / first);
    ctx.diag("first_three_strictly_decrease", losses.len() >= 4 && losses[..4].windows(2).all(|w| w[1] < w[0]));
    ctx.diag("final_w", out.w);
    ctx.diag("final_b", out.b);
    let status = match out.status {
        RetrainStatus::Converged => "converged",
        RetrainStatus::MaxIterations => "max-iterations",
        RetrainStatus::Diverged => "diverged",
    };
    ctx.diag("status", status);
    match out.into_result() {
        Ok(_) => Ok(None),
        Err(e) => {
            ctx.warnings.push(e.to_string());
            Ok(Some(e.into()))
        }
    }
}

fn steady_model(family: SteadyFamily, params: &NetworkParams, nu2: f64) -> CliResult<SteadyStateModel> {
    let (w, b) = params
        .as_constant_scalar()
        .ok_or_else(|| kresnet_core::Error::Unsupported("steady models need a constant scalar layer".into()))?;
    Ok(match family {
        SteadyFamily::Gaussian => SteadyStateModel::gaussian(w, b, nu2)?,
        SteadyFamily::InverseGamma => SteadyStateModel::inverse_gamma(w, b, nu2)?,
        SteadyFamily::Pareto => SteadyStateModel::pareto(w, b, nu2)?,
        SteadyFamily::GeneralizedGamma => {
            return Err(kresnet_core::Error::Unsupported(
                "the generalized-gamma model needs (delta, c, support), which configs do not carry".into(),
            )
            .into())
        }
    })
}

fn run_fokker_planck(ctx: &mut Ctx) -> CliResult<()> {
    let k = ctx.cfg.kinetic.clone().expect("validated");
    let grid = ctx.grid()?;
    let g0 = initial_field(ctx, &grid)?;
    let params = ctx.params()?;
    let t_end = ctx.final_time();
    let prob = FokkerPlanckProblem::new(g0, params.clone(), ctx.act(), k.diffusion, k.nu2, t_end);
    let sol = solve_fp(&prob, &ctx.times())?;
    record_solution(ctx, &sol)?;
    if let Some(s) = ctx.cfg.steady.clone() {
        let model = steady_model(s.family, &params, k.nu2)?;
        let target = model.field(&grid, ctx.boundary())?;
        ctx.dir.field("steady_state.csv", "analytic steady state (cell averages)", &target, None)?;
        let last = sol.snapshots.last().expect("final snapshot");
        ctx.diag("l1_to_steady_state", last.l1_distance(&target)?);
        ctx.diag("steady_state_residual", verify_steady_state(&model, &grid)?);
    }
    Ok(())
}

fn run_boltzmann(ctx: &mut Ctx) -> CliResult<()> {
    let k = ctx.cfg.kinetic.clone().expect("validated");
    let e0 = initial_ensemble(ctx, k.particles.expect("validated"))?;
    let params = ctx.params()?;
    let kc = KineticConfig::new(k.eps.expect("validated"), k.nu2.sqrt(), k.diffusion);
    let t_end = ctx.final_time();
    let out = mc_evolve(&e0, &params, &ctx.act(), &kc, t_end, ctx.cfg.seed, ctx.opts.exec)?;
    ctx.dir.ensemble("ensemble_initial.csv", "particles at scaled time 0", 1, e0.states(), Some(0.0))?;
    ctx.dir.ensemble("ensemble_final.csv", "particles at the final scaled time", 1, out.states(), Some(t_end))?;
    if let Some(g) = &ctx.cfg.grid {
        match empirical_density(&out, &g.build()?) {
            Ok(h) => ctx.dir.field("histogram_final.csv", "normalised histogram of the final ensemble", &h, Some(t_end))?,
            Err(e) => ctx.warnings.push(format!("histogram skipped: {e}")),
        }
    }
    ctx.diag("particles", out.len() as u64);
    ctx.diag("final_mean", out.mean()[0]);
    ctx.diag("final_variance", out.variance());
    Ok(())
}

fn run_convergence(ctx: &mut Ctx) -> CliResult<()> {
    let k = ctx.cfg.kinetic.clone().expect("validated");
    let m = k.particles.expect("validated") as usize;
    let setup = GrazingSetup {
        initial: ctx.initial().profile().expect("validated"),
        params: ctx.params()?,
        activation: ctx.act(),
        diffusion: k.diffusion,
        nu2: k.nu2,
        scaled_time: ctx.final_time(),
        grid: ctx.grid()?,
        exec: ctx.opts.exec,
    };
    let rows = grazing_convergence_study(&setup, &k.eps_list, m, ctx.cfg.seed)?;
    ctx.dir.csv(
        "convergence.csv",
        "W1 distance between the Monte Carlo ensemble and the PDE reference",
        &[("eps", "scaling"), ("W1", "state"), ("M", "particles"), ("scaled_time", "time"), ("noise_floor", "state")],
        None,
        rows.iter().map(|r| vec![r.eps, r.w1, r.particles as f64, r.scaled_time, r.noise_floor]),
    )?;
    let w1: Vec<f64> = rows.iter().map(|r| r.w1).collect();
    let floor = rows[0].noise_floor;
    ctx.diag("w1", json!(w1));
    ctx.diag("noise_floor", floor);
    ctx.diag("w1_monotone_decreasing", w1.windows(2).all(|w| w[1] < w[0]));
    ctx.diag("w1_above_noise_floor", w1.iter().all(|w| *w > floor));
    Ok(())
}
