//! Vlasov-type mean-field transport `∂_t g + ∇·(σ(w x + b) g) = 0` in one
//! and two dimensions, and its Dirac-delta steady states.

use crate::activations::Activation;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::numerics::{
    mean_of, march, DensityField, Grid, MarchOptions, MarchStats, Reconstruction,
    SemiDiscrete, Transport1d, Transport2d, DEFAULT_CFL,
};
use crate::params::NetworkParams;

#[derive(Clone, Debug)]
pub struct MeanFieldProblem {
    /// Initial density; its grid and boundary condition are used for the solve.
    pub initial: DensityField,
    pub params: NetworkParams,
    pub activation: Activation,
    pub final_time: f64,
    pub reconstruction: Reconstruction,
    pub cfl: f64,
    pub exec: Execution,
}

impl MeanFieldProblem {
    pub fn new(initial: DensityField, params: NetworkParams, activation: Activation, final_time: f64) -> Self {
        MeanFieldProblem {
            initial,
            params,
            activation,
            final_time,
            reconstruction: Reconstruction::Cweno3,
            cfl: DEFAULT_CFL,
            exec: Execution::default(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.initial.grid
    }

    pub fn validate(&self) -> Result<()> {
        self.grid().require_solver_ready()?;
        self.params.validate()?;
        if self.params.dim != self.grid().dim() {
            return Err(Error::GridMismatch(format!(
                "{}-D network on a {}-D grid",
                self.params.dim,
                self.grid().dim()
            )));
        }
        let mass = self.initial.mass();
        if (mass - 1.0).abs() > 1e-10 {
            return Err(Error::invalid("initial_density", format!("mass {mass} differs from 1")));
        }
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return Err(Error::invalid("final_time", format!("{} must be positive", self.final_time)));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::invalid("cfl", format!("{} not in (0, 1]", self.cfl)));
        }
        Ok(())
    }

    /// Semi-discrete operator of the problem (1D or 2D).
    pub fn operator(&self) -> Box<dyn SemiDiscrete + Sync + '_> {
        let grid = self.grid().clone();
        let act = self.activation;
        let params = &self.params;
        let boundary = self.initial.boundary;
        match grid.axes() {
            [x] => {
                let x = *x;
                let g = grid.clone();
                Box::new(Transport1d::new(
                    x,
                    boundary,
                    self.reconstruction,
                    self.cfl,
                    Box::new(move |t, u: &[f64], v: &mut [f64]| {
                        let mean = if params.needs_mean() { mean_of(&g, u) } else { [0.0; 2] };
                        let layer = params.resolve(t, mean);
                        for (i, vi) in v.iter_mut().enumerate() {
                            *vi = act.eval(layer.apply1(x.edge(i)))?;
                        }
                        Ok(())
                    }),
                ))
            }
            [x, y] => {
                let (x, y) = (*x, *y);
                let g = grid.clone();
                Box::new(Transport2d {
                    x,
                    y,
                    boundary,
                    reconstruction: self.reconstruction,
                    cfl: self.cfl,
                    exec: self.exec,
                    velocity: Box::new(move |t, u: &[f64], vx: &mut [f64], vy: &mut [f64]| {
                        let mean = if params.needs_mean() { mean_of(&g, u) } else { [0.0; 2] };
                        let l = params.resolve(t, mean);
                        let (nx, ny) = (x.cells, y.cells);
                        for iy in 0..ny {
                            let yc = y.center(iy);
                            for i in 0..=nx {
                                let z = l.w[0][0] * x.edge(i) + l.w[0][1] * yc + l.b[0];
                                vx[iy * (nx + 1) + i] = act.eval(z)?;
                            }
                        }
                        for ix in 0..nx {
                            let xc = x.center(ix);
                            for k in 0..=ny {
                                let z = l.w[1][0] * xc + l.w[1][1] * y.edge(k) + l.b[1];
                                vy[ix * (ny + 1) + k] = act.eval(z)?;
                            }
                        }
                        Ok(())
                    }),
                })
            }
            _ => unreachable!("grids are 1D or 2D"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MeanFieldSolution {
    pub times: Vec<f64>,
    pub snapshots: Vec<DensityField>,
    pub stats: MarchStats,
}

impl MeanFieldSolution {
    /// `|mass(t) − mass(0)|` for each snapshot.
    pub fn mass_ledger(&self) -> Vec<f64> {
        self.snapshots
            .iter()
            .map(|s| (s.mass() - self.stats.initial_mass).abs())
            .collect()
    }
}

fn check_times(times: &[f64], final_time: f64) -> Result<()> {
    if times.is_empty() {
        return Err(Error::invalid("snapshot_times", "at least one time is required"));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("snapshot_times", "must be sorted"));
    }
    if times[0] < 0.0 || *times.last().unwrap() > final_time * (1.0 + 1e-12) {
        return Err(Error::invalid("snapshot_times", format!("must lie in [0, {final_time}]")));
    }
    Ok(())
}

/// Solves the problem and returns the density at every snapshot time.
pub fn solve_meanfield(prob: &MeanFieldProblem, snapshot_times: &[f64]) -> Result<MeanFieldSolution> {
    solve_meanfield_with(prob, snapshot_times, |_, _, _| {})
}

/// As [`solve_meanfield`], calling `on_step(t, u, dt)` on every accepted
/// step (including the initial state with `dt = 0`).
pub fn solve_meanfield_with<C>(prob: &MeanFieldProblem, snapshot_times: &[f64], on_step: C) -> Result<MeanFieldSolution>
where
    C: FnMut(f64, &[f64], f64),
{
    prob.validate()?;
    check_times(snapshot_times, prob.final_time)?;
    let op = prob.operator();
    let opts = MarchOptions {
        cell_volume: prob.grid().cell_volume(),
        ..Default::default()
    };
    let (states, stats) = march(op.as_ref(), prob.initial.values.clone(), 0.0, snapshot_times, opts, on_step)?;
    let snapshots = states
        .into_iter()
        .map(|v| DensityField::new(prob.grid().clone(), v, prob.initial.boundary))
        .collect::<Result<Vec<_>>>()?;
    Ok(MeanFieldSolution {
        times: snapshot_times.to_vec(),
        snapshots,
        stats,
    })
}

/// Midpoint-rule moment `Σ x_j^k ū_j Δx` of the first coordinate.
pub fn field_moment(f: &DensityField, k: u32) -> f64 {
    field_moment_2d(f, k, 0)
}

/// Mixed midpoint moment `∫ x^kx y^ky g`. In 1D `ky` must be 0.
pub fn field_moment_2d(f: &DensityField, kx: u32, ky: u32) -> f64 {
    let vol = f.grid.cell_volume();
    match f.grid.axes() {
        [x] => {
            if ky > 0 {
                return 0.0;
            }
            f.values
                .iter()
                .enumerate()
                .map(|(j, v)| x.center(j).powi(kx as i32) * v)
                .sum::<f64>()
                * vol
        }
        [x, y] => {
            let nx = x.cells;
            f.values
                .iter()
                .enumerate()
                .map(|(k, v)| x.center(k % nx).powi(kx as i32) * y.center(k / nx).powi(ky as i32) * v)
                .sum::<f64>()
                * vol
        }
        _ => unreachable!("grids are 1D or 2D"),
    }
}

/// Second moment about `center`, `∫ |z − center|² g`.
pub fn second_moment_about(f: &DensityField, center: [f64; 2]) -> f64 {
    let vol = f.grid.cell_volume();
    match f.grid.axes() {
        [x] => f
            .values
            .iter()
            .enumerate()
            .map(|(j, v)| (x.center(j) - center[0]).powi(2) * v)
            .sum::<f64>()
            * vol,
        [x, y] => {
            let nx = x.cells;
            f.values
                .iter()
                .enumerate()
                .map(|(k, v)| {
                    let dx = x.center(k % nx) - center[0];
                    let dy = y.center(k / nx) - center[1];
                    (dx * dx + dy * dy) * v
                })
                .sum::<f64>()
                * vol
        }
        _ => unreachable!("grids are 1D or 2D"),
    }
}

/// Mass in cells whose centre lies within `radius` of `center` (1D).
pub fn mass_near(f: &DensityField, center: f64, radius: f64) -> f64 {
    let x = f.grid.x();
    f.values
        .iter()
        .enumerate()
        .filter(|(j, _)| (x.center(*j) - center).abs() <= radius)
        .map(|(_, v)| v)
        .sum::<f64>()
        * x.width()
}

/// Mass in the half-open interval `[lower, upper)`, counting whole cells
/// by their centre (1D).
pub fn mass_between(f: &DensityField, lower: f64, upper: f64) -> f64 {
    let x = f.grid.x();
    f.values
        .iter()
        .enumerate()
        .filter(|(j, _)| (lower..upper).contains(&x.center(*j)))
        .map(|(_, v)| v)
        .sum::<f64>()
        * x.width()
}

/// Locations `y = w∞⁻¹(z − b∞)` of Dirac-delta steady states, for every
/// tuple `z` of activation zeros whose preimage lies in `domain`.
/// Sorted lexicographically.
pub fn delta_steady_states(act: &Activation, w: [[f64; 2]; 2], b: [f64; 2], domain: &Grid) -> Result<Vec<Vec<f64>>> {
    match domain.axes() {
        [x] => {
            let w = w[0][0];
            let scale = w.abs().max(b[0].abs()).max(1.0);
            if w.abs() <= 1e-12 * scale {
                return Err(Error::RankDeficient { det: w });
            }
            let (z0, z1) = (w * x.lower + b[0], w * x.upper + b[0]);
            let zeros = act.zeros(z0.min(z1), z0.max(z1))?;
            let mut out: Vec<Vec<f64>> = zeros
                .points
                .iter()
                .map(|z| (z - b[0]) / w)
                .filter(|y| (x.lower..=x.upper).contains(y))
                .map(|y| vec![y])
                .collect();
            out.sort_by(|a, b| a[0].total_cmp(&b[0]));
            Ok(out)
        }
        [x, y] => {
            let det = w[0][0] * w[1][1] - w[0][1] * w[1][0];
            let scale = w.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
            if det.abs() <= 1e-12 * scale * scale {
                return Err(Error::RankDeficient { det });
            }
            // bounding range of each component over the rectangle
            let corners = [
                [x.lower, y.lower],
                [x.lower, y.upper],
                [x.upper, y.lower],
                [x.upper, y.upper],
            ];
            let range = |r: usize| {
                let vals: Vec<f64> = corners.iter().map(|c| w[r][0] * c[0] + w[r][1] * c[1] + b[r]).collect();
                (
                    vals.iter().copied().fold(f64::INFINITY, f64::min),
                    vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                )
            };
            let (a0, a1) = range(0);
            let (c0, c1) = range(1);
            let zx = act.zeros(a0, a1)?.points;
            let zy = act.zeros(c0, c1)?.points;
            let mut out = Vec::new();
            for &z0 in &zx {
                for &z1 in &zy {
                    let (r0, r1) = (z0 - b[0], z1 - b[1]);
                    let p = [
                        (w[1][1] * r0 - w[0][1] * r1) / det,
                        (-w[1][0] * r0 + w[0][0] * r1) / det,
                    ];
                    let tol = 1e-12 * scale;
                    if p[0] >= x.lower - tol && p[0] <= x.upper + tol && p[1] >= y.lower - tol && p[1] <= y.upper + tol {
                        out.push(p.to_vec());
                    }
                }
            }
            out.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
            Ok(out)
        }
        _ => unreachable!("grids are 1D or 2D"),
    }
}
