//! Adjoint gradients of the terminal L² loss with respect to constant
//! `(w, b)`, and the forward re-training loop built on them.
//!
//! The multiplier solves `∂_t λ + σ(w x + b) ∂_x λ = 0` backward from
//! `λ(T) = g(T) − h`. In reversed time `s = T − t` this is the
//! conservative transport `∂_s λ + ∂_x(−v λ) = −v_x λ`, so the same
//! finite-volume operator as the forward solve applies, with a source.

use crate::activations::Activation;
use crate::error::{Error, Result};
use crate::meanfield::{solve_meanfield_with, MeanFieldProblem};
use crate::numerics::{
    fill_ghosts, ssprk3_step, Axis, BoundaryCondition, DensityField, Grid, Reconstruction, SemiDiscrete,
    Transport1d, DEFAULT_CFL, GAUSS3_NODES,
};
use crate::params::NetworkParams;
use crate::profiles::Profile;

/// `½ Σ (g_j − h_j)² Δx`.
pub fn loss(g: &DensityField, h: &DensityField) -> Result<f64> {
    g.same_grid(h)?;
    Ok(0.5 * g.values.iter().zip(&h.values).map(|(a, b)| (a - b).powi(2)).sum::<f64>() * g.grid.cell_volume())
}

/// Gaussian stand-in for a Dirac target at `center`, with standard
/// deviation `2Δx`, discretised on `grid`.
pub fn regularized_delta(center: f64, grid: &Grid) -> Result<DensityField> {
    Profile::Gaussian {
        mean: center,
        std: 2.0 * grid.x().width(),
    }
    .field(grid, BoundaryCondition::Outflow)
}

/// Every accepted forward state, from `t = 0` to `T`.
#[derive(Clone, Debug)]
pub struct ForwardRun {
    pub grid: Grid,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl ForwardRun {
    pub fn final_field(&self) -> DensityField {
        DensityField {
            grid: self.grid.clone(),
            values: self.states.last().expect("forward run is never empty").clone(),
            boundary: BoundaryCondition::Outflow,
        }
    }
}

fn scalar_params(p: &NetworkParams) -> Result<(f64, f64)> {
    p.as_constant_scalar()
        .ok_or_else(|| Error::Unsupported("adjoint gradients need constant scalar (w, b)".into()))
}

/// Forward mean-field solve with dense storage.
pub fn forward_dense(prob: &MeanFieldProblem) -> Result<ForwardRun> {
    let mut times = Vec::new();
    let mut states = Vec::new();
    solve_meanfield_with(prob, &[prob.final_time], |t, u, _| {
        times.push(t);
        states.push(u.to_vec());
    })?;
    Ok(ForwardRun {
        grid: prob.grid().clone(),
        times,
        states,
    })
}

#[derive(Clone, Debug)]
pub struct AdjointState {
    /// Same time levels as the forward run.
    pub times: Vec<f64>,
    pub lambda: Vec<Vec<f64>>,
    /// `g(T) − h`.
    pub terminal_residual: Vec<f64>,
}

fn adjoint_operator<'a>(axis: Axis, act: Activation, w: f64, b: f64, reconstruction: Reconstruction) -> Transport1d<'a> {
    let dx = axis.width();
    let source: Vec<f64> = (0..axis.cells)
        .flat_map(|j| {
            let c = axis.center(j);
            GAUSS3_NODES.map(|q| -w * act.derivative(w * (c + q * dx) + b))
        })
        .collect();
    let speeds: Vec<f64> = axis.edges().iter().map(|&e| -act.value(w * e + b)).collect();
    Transport1d::new(
        axis,
        BoundaryCondition::Outflow,
        reconstruction,
        DEFAULT_CFL,
        Box::new(move |_, _, v: &mut [f64]| {
            v.copy_from_slice(&speeds);
            Ok(())
        }),
    )
    .with_source(source)
    .signed()
}

/// Solves the adjoint backward over the forward time levels.
pub fn solve_adjoint_backward(
    forward: &ForwardRun,
    h: &DensityField,
    params: &NetworkParams,
    act: &Activation,
) -> Result<AdjointState> {
    let (w, b) = scalar_params(params)?;
    if forward.grid != h.grid || forward.grid.dim() != 1 {
        return Err(Error::GridMismatch("target and forward run must share a 1D grid".into()));
    }
    let gt = forward.states.last().ok_or(Error::EmptySample("forward states"))?;
    let residual: Vec<f64> = gt.iter().zip(&h.values).map(|(g, h)| g - h).collect();
    let op = adjoint_operator(*forward.grid.x(), *act, w, b, Reconstruction::Cweno3);
    let n = forward.times.len();
    let mut lambda = vec![Vec::new(); n];
    lambda[n - 1] = residual.clone();
    for k in (1..n).rev() {
        let dt = forward.times[k] - forward.times[k - 1];
        let s = forward.times[n - 1] - forward.times[k];
        let next = ssprk3_step(|t, u, o| op.rhs(t, u, o), s, &lambda[k], dt)?;
        if let Some(index) = next.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "adjoint", index });
        }
        lambda[k - 1] = next;
    }
    Ok(AdjointState {
        times: forward.times.clone(),
        lambda,
        terminal_residual: residual,
    })
}

/// Fourth-order central derivative with constant-extrapolation ghosts.
fn derivative_4th(u: &[f64], dx: f64) -> Vec<f64> {
    let mut ext = Vec::with_capacity(u.len() + 4);
    fill_ghosts(u, BoundaryCondition::Outflow, &mut ext);
    (0..u.len())
        .map(|j| (-ext[j + 4] + 8.0 * ext[j + 3] - 8.0 * ext[j + 1] + ext[j]) / (12.0 * dx))
        .collect()
}

/// `(∂D/∂w, ∂D/∂b)` as space-time trapezoidal integrals of
/// `g x σ' ∂_x λ` and `g σ' ∂_x λ`.
pub fn gradients(forward: &ForwardRun, adjoint: &AdjointState, act: &Activation, params: &NetworkParams) -> Result<(f64, f64)> {
    let (w, b) = scalar_params(params)?;
    if forward.times.len() != adjoint.times.len() {
        return Err(Error::GridMismatch("forward and adjoint time levels differ".into()));
    }
    let x = forward.grid.x();
    let dx = x.width();
    let sp: Vec<f64> = x.centers().iter().map(|&c| act.derivative(w * c + b)).collect();
    let slice = |k: usize| -> (f64, f64) {
        let lx = derivative_4th(&adjoint.lambda[k], dx);
        let g = &forward.states[k];
        let mut iw = 0.0;
        let mut ib = 0.0;
        for j in 0..x.cells {
            let common = g[j] * sp[j] * lx[j];
            iw += common * x.center(j);
            ib += common;
        }
        (iw * dx, ib * dx)
    };
    let mut prev = slice(0);
    let mut total = (0.0, 0.0);
    for k in 1..forward.times.len() {
        let cur = slice(k);
        let dt = forward.times[k] - forward.times[k - 1];
        total.0 += 0.5 * dt * (prev.0 + cur.0);
        total.1 += 0.5 * dt * (prev.1 + cur.1);
        prev = cur;
    }
    Ok(total)
}

/// Loss and gradient at `(w, b)` from one forward and one backward solve.
pub fn loss_and_gradient(
    g0: &DensityField,
    h: &DensityField,
    act: &Activation,
    w: f64,
    b: f64,
    horizon: f64,
) -> Result<(f64, (f64, f64))> {
    let params = NetworkParams::constant_1d(w, b);
    let prob = MeanFieldProblem::new(g0.clone(), params.clone(), *act, horizon);
    let fwd = forward_dense(&prob)?;
    let d = loss(&fwd.final_field(), h)?;
    let adj = solve_adjoint_backward(&fwd, h, &params, act)?;
    Ok((d, gradients(&fwd, &adj, act, &params)?))
}

/// Terminal loss after a forward solve, without the adjoint.
pub fn forward_loss(g0: &DensityField, h: &DensityField, act: &Activation, w: f64, b: f64, horizon: f64) -> Result<f64> {
    let prob = MeanFieldProblem::new(g0.clone(), NetworkParams::constant_1d(w, b), *act, horizon);
    let sol = crate::meanfield::solve_meanfield(&prob, &[horizon])?;
    loss(&sol.snapshots[0], h)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RetrainConfig {
    /// Step size `γ`. Zero is accepted and never counts as converged.
    pub step_size: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub horizon: f64,
}

impl RetrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size >= 0.0 && self.step_size.is_finite()) {
            return Err(Error::invalid("step_size", format!("{} must be non-negative", self.step_size)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("tolerance", format!("{} must be positive", self.tolerance)));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations", "must be positive"));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::invalid("horizon", format!("{} must be positive", self.horizon)));
        }
        Ok(())
    }
}

/// One row of the iteration log: the iterate, its loss, and the size of
/// the update taken from it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub w: f64,
    pub b: f64,
    pub loss: f64,
    pub grad_w: f64,
    pub grad_b: f64,
    /// `|w^{k+1} − w^k| + |b^{k+1} − b^k|`.
    pub step: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RetrainStatus {
    Converged,
    MaxIterations,
    /// The loss rose this many consecutive times.
    Diverged,
}

#[derive(Clone, Debug)]
pub struct RetrainOutcome {
    pub w: f64,
    pub b: f64,
    pub status: RetrainStatus,
    pub log: Vec<IterationRecord>,
}

impl RetrainOutcome {
    pub fn converged(&self) -> bool {
        self.status == RetrainStatus::Converged
    }

    /// Turns a divergence into an error, keeping other outcomes.
    pub fn into_result(self) -> Result<Self> {
        if self.status == RetrainStatus::Diverged {
            return Err(Error::Diverged {
                iterations: self.log.len(),
                streak: DIVERGENCE_STREAK,
            });
        }
        Ok(self)
    }
}

/// Consecutive loss increases that abort re-training.
pub const DIVERGENCE_STREAK: usize = 5;

/// Gradient descent on `(w, b)`: every iteration runs a fresh forward and
/// backward solve. Stops at the first `k` with
/// `|w^{k+1} − w^k| + |b^{k+1} − b^k| < tol` (which is then the last log
/// row), at the iteration cap, or when the loss rises
/// [`DIVERGENCE_STREAK`] times in a row.
pub fn retrain(
    params0: &NetworkParams,
    act: &Activation,
    g0: &DensityField,
    h: &DensityField,
    cfg: &RetrainConfig,
) -> Result<RetrainOutcome> {
    cfg.validate()?;
    let (mut w, mut b) = scalar_params(params0)?;
    let mut log = Vec::new();
    let mut streak = 0;
    for k in 0..cfg.max_iterations {
        let (d, (gw, gb)) = loss_and_gradient(g0, h, act, w, b, cfg.horizon)?;
        let (nw, nb) = (w - cfg.step_size * gw, b - cfg.step_size * gb);
        let step = (nw - w).abs() + (nb - b).abs();
        if let Some(last) = log.last() {
            let last: &IterationRecord = last;
            streak = if d > last.loss { streak + 1 } else { 0 };
        }
        log.push(IterationRecord {
            k,
            w,
            b,
            loss: d,
            grad_w: gw,
            grad_b: gb,
            step,
        });
        if streak >= DIVERGENCE_STREAK {
            return Ok(RetrainOutcome {
                w,
                b,
                status: RetrainStatus::Diverged,
                log,
            });
        }
        if cfg.step_size > 0.0 && step < cfg.tolerance {
            return Ok(RetrainOutcome {
                w: nw,
                b: nb,
                status: RetrainStatus::Converged,
                log,
            });
        }
        if !(nw.is_finite() && nb.is_finite()) {
            return Err(Error::NonFinite { what: "parameters", index: k });
        }
        (w, b) = (nw, nb);
    }
    Ok(RetrainOutcome {
        w,
        b,
        status: RetrainStatus::MaxIterations,
        log,
    })
}
