//! SSP-RK3 time stepping and the adaptive CFL controller.

use crate::error::{Error, Result};

pub const DEFAULT_CFL: f64 = 0.45;

/// One SSP-RK3 step, written in increment form so that a vanishing `L`
/// leaves `u` bit-for-bit unchanged. `rhs(t, u, out)` overwrites `out`
/// with `L(u)`.
pub fn ssprk3_step<F>(mut rhs: F, t: f64, u: &[f64], dt: f64) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = u.len();
    let mut k0 = vec![0.0; n];
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];

    rhs(t, u, &mut k0)?;
    let u1: Vec<f64> = u.iter().zip(&k0).map(|(u, a)| u + dt * a).collect();

    rhs(t + dt, &u1, &mut k1)?;
    let u2: Vec<f64> = (0..n).map(|i| u[i] + 0.25 * dt * (k0[i] + k1[i])).collect();

    rhs(t + 0.5 * dt, &u2, &mut k2)?;
    Ok((0..n)
        .map(|i| u[i] + dt * ((k0[i] + k1[i]) / 6.0 + 2.0 / 3.0 * k2[i]))
        .collect())
}

/// `cfl · min(Δx / max_speed, Δx² / (2 D))`, with zero speeds treated as
/// an infinite bound.
pub fn adaptive_dt(dx: f64, max_speed: f64, diffusion_coeff: f64, cfl: f64) -> Result<f64> {
    if !(max_speed >= 0.0) || !(diffusion_coeff >= 0.0) {
        return Err(Error::invalid(
            "speed",
            format!("max_speed {max_speed} and diffusion {diffusion_coeff} must be non-negative"),
        ));
    }
    let hyperbolic = if max_speed > 0.0 { dx / max_speed } else { f64::INFINITY };
    let parabolic = if diffusion_coeff > 0.0 {
        dx * dx / (2.0 * diffusion_coeff)
    } else {
        f64::INFINITY
    };
    let bound = hyperbolic.min(parabolic);
    if bound.is_infinite() {
        return Err(Error::NoDynamics);
    }
    Ok(cfl * bound)
}

/// Unsplit 2D transport bound `cfl / (sx/Δx + sy/Δy)`.
pub fn adaptive_dt_2d(dx: f64, dy: f64, speed_x: f64, speed_y: f64, cfl: f64) -> Result<f64> {
    let rate = speed_x / dx + speed_y / dy;
    if !(rate > 0.0) {
        return Err(Error::NoDynamics);
    }
    Ok(cfl / rate)
}

/// A method-of-lines system `du/dt = L(t, u)`.
pub trait SemiDiscrete {
    fn rhs(&self, t: f64, u: &[f64], out: &mut [f64]) -> Result<()>;
    /// Largest stable step at `(t, u)`.
    fn stable_dt(&self, t: f64, u: &[f64]) -> Result<f64>;
}

#[derive(Clone, Copy, Debug)]
pub struct MarchOptions {
    /// Multiplies `Σu` to give the mass.
    pub cell_volume: f64,
    /// Abort when a value drops below `-tol`.
    pub negativity_tolerance: Option<f64>,
    pub max_steps: usize,
}

impl Default for MarchOptions {
    fn default() -> Self {
        MarchOptions {
            cell_volume: 1.0,
            negativity_tolerance: None,
            max_steps: 50_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MarchStats {
    pub steps: usize,
    pub initial_mass: f64,
    /// Largest `|mass(t) − mass(0)|` seen after any step.
    pub max_mass_drift: f64,
    pub min_value: f64,
    pub smallest_dt: f64,
}

/// Advances `u` from `t0` through every time in `times` (sorted, `>= t0`),
/// returning the state at each. `on_step(t, u, dt_taken)` sees every
/// accepted state, including the initial one with `dt_taken = 0`.
pub fn march<S, C>(
    op: &S,
    mut u: Vec<f64>,
    t0: f64,
    times: &[f64],
    opts: MarchOptions,
    mut on_step: C,
) -> Result<(Vec<Vec<f64>>, MarchStats)>
where
    S: SemiDiscrete + ?Sized,
    C: FnMut(f64, &[f64], f64),
{
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&s| s < t0) {
        return Err(Error::invalid("snapshot_times", "must be sorted and not before the start time"));
    }
    let mass = |u: &[f64]| u.iter().sum::<f64>() * opts.cell_volume;
    let initial_mass = mass(&u);
    let mut stats = MarchStats {
        initial_mass,
        min_value: u.iter().copied().fold(f64::INFINITY, f64::min),
        smallest_dt: f64::INFINITY,
        ..Default::default()
    };
    let mut t = t0;
    let mut out = Vec::with_capacity(times.len());
    on_step(t, &u, 0.0);

    for &target in times {
        while t < target {
            let remaining = target - t;
            // snap the final sliver instead of taking a roundoff-sized step
            if remaining <= 1e-12 * target.abs().max(1.0) {
                t = target;
                break;
            }
            let stable = op.stable_dt(t, &u)?;
            let dt = stable.min(remaining);
            if !(dt > 1e-14 * target.abs().max(1.0)) {
                return Err(Error::CflFailure { t, dt });
            }
            u = ssprk3_step(|s, v, o| op.rhs(s, v, o), t, &u, dt)?;
            t = if dt == remaining { target } else { t + dt };
            stats.steps += 1;
            stats.smallest_dt = stats.smallest_dt.min(dt);
            if stats.steps > opts.max_steps {
                return Err(Error::CflFailure { t, dt });
            }
            let mut min = f64::INFINITY;
            for (index, &v) in u.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite { what: "solution", index });
                }
                min = min.min(v);
            }
            if let Some(tol) = opts.negativity_tolerance {
                if min < -tol {
                    let index = u.iter().position(|&v| v == min).unwrap_or(0);
                    return Err(Error::NegativeDensity { index, value: min });
                }
            }
            stats.min_value = stats.min_value.min(min);
            stats.max_mass_drift = stats.max_mass_drift.max((mass(&u) - initial_mass).abs());
            on_step(t, &u, dt);
        }
        out.push(u.clone());
    }
    Ok((out, stats))
}
