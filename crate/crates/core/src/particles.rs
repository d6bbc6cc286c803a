//! Microscopic simulation: the residual recursion, its explicit-Euler ODE
//! limit, the noisy interaction rule and empirical-measure diagnostics.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::activations::Activation;
use crate::boltzmann::DiffusionFn;
use crate::error::{Error, Result};
use crate::exec::{fill_indexed, Execution};
use crate::numerics::{BoundaryCondition, DensityField, Grid};
use crate::params::{Affine, NetworkParams};

/// `M` states in `d ∈ {1, 2}` dimensions, stored flat (`state i` occupies
/// `states[i*d .. (i+1)*d]`).
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleEnsemble {
    dim: usize,
    states: Vec<f64>,
    pub time: f64,
}

impl ParticleEnsemble {
    pub fn new(dim: usize, states: Vec<f64>) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::invalid("dim", format!("{dim} not in {{1, 2}}")));
        }
        if states.is_empty() || states.len() % dim != 0 {
            return Err(Error::invalid(
                "states",
                format!("{} coordinates do not form a non-empty {dim}-D ensemble", states.len()),
            ));
        }
        if let Some(i) = states.iter().position(|v| !v.is_finite()) {
            return Err(Error::Overflow {
                index: i / dim,
                value: states[i],
            });
        }
        Ok(ParticleEnsemble {
            dim,
            states,
            time: 0.0,
        })
    }

    pub fn from_positions(x: Vec<f64>) -> Result<Self> {
        Self::new(1, x)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.states.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Flat coordinate array.
    pub fn states(&self) -> &[f64] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    /// Coordinate `axis` of every particle.
    pub fn coordinate(&self, axis: usize) -> Vec<f64> {
        self.states.iter().skip(axis).step_by(self.dim).copied().collect()
    }

    pub fn mean(&self) -> [f64; 2] {
        let m = self.len() as f64;
        let mut out = [0.0; 2];
        for s in self.states.chunks(self.dim) {
            for (o, v) in out.iter_mut().zip(s) {
                *o += v / m;
            }
        }
        out
    }

    /// Population variance of the first coordinate.
    pub fn variance(&self) -> f64 {
        let mean = self.mean()[0];
        let x = self.coordinate(0);
        x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / x.len() as f64
    }
}

/// Reflecting walls for 1D particle runs: a particle that steps past a
/// wall is mirrored back and then clamped into the interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Walls {
    pub lower: f64,
    pub upper: f64,
}

impl Walls {
    pub fn apply(&self, x: f64) -> f64 {
        let y = if x < self.lower {
            2.0 * self.lower - x
        } else if x > self.upper {
            2.0 * self.upper - x
        } else {
            x
        };
        y.clamp(self.lower, self.upper)
    }
}

fn resolve_layer(e: &ParticleEnsemble, p: &NetworkParams) -> Result<Affine> {
    if e.dim != p.dim {
        return Err(Error::invalid(
            "dim",
            format!("ensemble is {}-D but the network is {}-D", e.dim, p.dim),
        ));
    }
    let mean = if p.needs_mean() { e.mean() } else { [0.0; 2] };
    Ok(p.resolve(e.time, mean))
}

/// Velocity `σ(w x + b)` of one state, written into `out`.
#[inline]
fn velocity(act: &Activation, layer: &Affine, s: &[f64], out: &mut [f64]) {
    match s {
        [x] => out[0] = act.value(layer.apply1(*x)),
        [x, y] => {
            let z = layer.apply2(*x, *y);
            out[0] = act.value(z[0]);
            out[1] = act.value(z[1]);
        }
        _ => unreachable!("dimension validated at construction"),
    }
}

/// Turns the first non-finite coordinate into an error, preferring the
/// activation's own domain error when that is the cause.
fn check_finite(
    states: &[f64],
    prev: &ParticleEnsemble,
    act: &Activation,
    layer: &Affine,
) -> Result<()> {
    let Some(i) = states.iter().position(|v| !v.is_finite()) else {
        return Ok(());
    };
    let d = prev.dim;
    let particle = i / d;
    let s = prev.state(particle);
    let arg = if d == 1 {
        layer.apply1(s[0])
    } else {
        layer.apply2(s[0], s[1])[i % d]
    };
    act.eval(arg)?;
    Err(Error::Overflow {
        index: particle,
        value: states[i],
    })
}

/// One residual layer `x ← x + dt σ(w x + b)` for every particle.
pub fn step_resnet(
    e: &ParticleEnsemble,
    p: &NetworkParams,
    act: &Activation,
    dt: f64,
    exec: Execution,
) -> Result<ParticleEnsemble> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", format!("{dt} must be positive")));
    }
    let layer = resolve_layer(e, p)?;
    let d = e.dim;
    let mut next = vec![0.0; e.states.len()];
    fill_indexed(exec, &mut next, |k| {
        let i = k / d;
        let mut v = [0.0; 2];
        velocity(act, &layer, e.state(i), &mut v);
        e.states[k] + dt * v[k % d]
    });
    check_finite(&next, e, act, &layer)?;
    Ok(ParticleEnsemble {
        dim: d,
        states: next,
        time: e.time + dt,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    /// Reflecting walls (1D only).
    pub walls: Option<Walls>,
    /// Keep every `record_every`-th step; the final state is always kept.
    pub record_every: usize,
    pub exec: Execution,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            walls: None,
            record_every: 1,
            exec: Execution::default(),
        }
    }
}

/// Number of explicit-Euler steps covering `[0, T]` with step `dt`.
pub fn euler_steps(final_time: f64, dt: f64) -> usize {
    // guard against 1/0.1 = 9.999… style roundoff
    ((final_time / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

/// Explicit Euler trajectory of `dx/dt = σ(w(t) x + b(t))` over
/// `⌈T/dt⌉` steps. The first snapshot is the initial ensemble.
pub fn integrate_ode(
    e: &ParticleEnsemble,
    p: &NetworkParams,
    act: &Activation,
    final_time: f64,
    dt: f64,
    opts: OdeOptions,
) -> Result<Vec<ParticleEnsemble>> {
    if !(final_time > 0.0 && final_time.is_finite()) {
        return Err(Error::invalid("final_time", format!("{final_time} must be positive")));
    }
    if opts.walls.is_some() && e.dim != 1 {
        return Err(Error::Unsupported("reflecting walls are 1D only".into()));
    }
    let steps = euler_steps(final_time, dt);
    let every = opts.record_every.max(1);
    let mut traj = vec![e.clone()];
    let mut cur = e.clone();
    for n in 1..=steps {
        cur = step_resnet(&cur, p, act, dt, opts.exec)?;
        if let Some(w) = opts.walls {
            cur.states.iter_mut().for_each(|x| *x = w.apply(*x));
        }
        if n % every == 0 || n == steps {
            traj.push(cur.clone());
        }
    }
    Ok(traj)
}

/// Words of the ChaCha stream reserved for one particle in one round.
const WORDS_PER_DRAW: u128 = 64;

/// Gaussian draws `N(0, 1)` indexed by `(seed, particle, round)`. The value
/// depends only on the triple, never on the order of evaluation.
#[derive(Clone, Debug)]
pub struct NoiseSource {
    base: ChaCha8Rng,
}

impl NoiseSource {
    pub fn new(seed: u64) -> Self {
        NoiseSource {
            base: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn standard_normal(&self, particle: usize, round: u64) -> f64 {
        let mut rng = self.base.clone();
        rng.set_stream(particle as u64);
        rng.set_word_pos(round as u128 * WORDS_PER_DRAW);
        StandardNormal.sample(&mut rng)
    }
}

/// One interaction round `x* = x + ε σ(w x + b) + √ε K(x) η`,
/// `η ~ N(0, ν²)`, applied to every particle.
#[allow(clippy::too_many_arguments)]
pub fn step_stochastic(
    e: &ParticleEnsemble,
    p: &NetworkParams,
    act: &Activation,
    eps: f64,
    nu: f64,
    k: DiffusionFn,
    noise: &NoiseSource,
    round: u64,
    exec: Execution,
) -> Result<ParticleEnsemble> {
    if e.dim != 1 {
        return Err(Error::Unsupported("the interaction rule is 1D".into()));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid("eps", format!("{eps} must be positive")));
    }
    if !(nu >= 0.0 && nu.is_finite()) {
        return Err(Error::invalid("nu", format!("{nu} must be non-negative")));
    }
    let layer = resolve_layer(e, p)?;
    let sq = eps.sqrt();
    let mut next = vec![0.0; e.states.len()];
    fill_indexed(exec, &mut next, |i| {
        let x = e.states[i];
        let drift = x + eps * act.value(layer.apply1(x));
        if nu == 0.0 {
            drift
        } else {
            drift + sq * k.value(x) * nu * noise.standard_normal(i, round)
        }
    });
    check_finite(&next, e, act, &layer)?;
    Ok(ParticleEnsemble {
        dim: 1,
        states: next,
        time: e.time + eps,
    })
}

/// Normalised histogram, `count / (M · cell volume)`, with half-open cells.
pub fn empirical_density(e: &ParticleEnsemble, grid: &Grid) -> Result<DensityField> {
    if e.dim != grid.dim() {
        return Err(Error::GridMismatch(format!(
            "{}-D ensemble on a {}-D grid",
            e.dim,
            grid.dim()
        )));
    }
    let mut counts = vec![0usize; grid.len()];
    let mut outside = Vec::new();
    for i in 0..e.len() {
        match grid.locate(e.state(i)) {
            Some(c) => counts[c] += 1,
            None => outside.push(i),
        }
    }
    if !outside.is_empty() {
        let count = outside.len();
        outside.truncate(10);
        return Err(Error::OutsideGrid {
            count,
            indices: outside,
        });
    }
    let scale = 1.0 / (e.len() as f64 * grid.cell_volume());
    let values = counts.iter().map(|&c| c as f64 * scale).collect();
    DensityField::new(grid.clone(), values, BoundaryCondition::Outflow)
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// 1-Wasserstein distance between two empirical measures on the line.
pub fn wasserstein1_1d(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::EmptySample("a"));
    }
    if b.is_empty() {
        return Err(Error::EmptySample("b"));
    }
    let (sa, sb) = (sorted(a), sorted(b));
    if sa.len() == sb.len() {
        let n = sa.len() as f64;
        return Ok(sa.iter().zip(&sb).map(|(x, y)| (x - y).abs()).sum::<f64>() / n);
    }
    // ∫ |F_a − F_b| by sweeping the merged breakpoints
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut total = 0.0;
    let mut last = sa[0].min(sb[0]);
    while i < sa.len() || j < sb.len() {
        let next = match (sa.get(i), sb.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        total += (i as f64 / na - j as f64 / nb).abs() * (next - last);
        while i < sa.len() && sa[i] == next {
            i += 1;
        }
        while j < sb.len() && sb[j] == next {
            j += 1;
        }
        last = next;
    }
    Ok(total)
}

/// `∫_0^len |d(s)| ds` for `d` linear from `d0` to `d1`.
fn abs_linear_integral(d0: f64, d1: f64, len: f64) -> f64 {
    if d0 * d1 >= 0.0 {
        0.5 * len * (d0.abs() + d1.abs())
    } else {
        0.5 * len * (d0 * d0 + d1 * d1) / (d0.abs() + d1.abs())
    }
}

/// 1-Wasserstein distance between samples and a 1D cell-average field,
/// read as a piecewise-constant density (normalised by its own mass).
pub fn wasserstein1_to_field(samples: &[f64], field: &DensityField) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySample("samples"));
    }
    if field.grid.dim() != 1 {
        return Err(Error::Unsupported("W1 against a field is 1D only".into()));
    }
    let axis = *field.grid.x();
    let mass = field.mass();
    if !(mass > 0.0) {
        return Err(Error::invalid("field", "zero mass"));
    }
    let s = sorted(samples);
    let m = s.len() as f64;
    let dx = axis.width();

    // field CDF at cell edges
    let mut edge_cdf = Vec::with_capacity(axis.cells + 1);
    edge_cdf.push(0.0);
    for v in &field.values {
        let last = *edge_cdf.last().unwrap();
        edge_cdf.push(last + v * dx / mass);
    }
    let field_cdf = |x: f64| -> f64 {
        if x <= axis.lower {
            0.0
        } else if x >= axis.upper {
            1.0
        } else {
            let j = (((x - axis.lower) / dx) as usize).min(axis.cells - 1);
            let lo = axis.edge(j);
            edge_cdf[j] + (edge_cdf[j + 1] - edge_cdf[j]) * (x - lo) / dx
        }
    };

    let mut points: Vec<f64> = axis.edges();
    points.extend_from_slice(&s);
    points.sort_by(f64::total_cmp);
    points.dedup();

    let mut total = 0.0;
    let mut k = 0usize; // samples <= current left point
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        while k < s.len() && s[k] <= a {
            k += 1;
        }
        let fe = k as f64 / m;
        total += abs_linear_integral(fe - field_cdf(a), fe - field_cdf(b), b - a);
    }
    Ok(total)
}
