//! Finite-volume operators for `∂_t u + ∇·(v u) = ∇·(D ∇u) + s u`.
//!
//! Interface states come from the CWENO reconstruction, the convective
//! flux is local Lax-Friedrichs with the pointwise interface velocity, the
//! diffusive flux uses the fourth-order interface gradient and the linear
//! source is integrated with three-point Gauss quadrature of the
//! reconstruction.

use super::flux::{fill_ghosts, limited_interface_gradient, llf_flux};
use super::grid::{Axis, BoundaryCondition};
use super::quadrature::GAUSS3_WEIGHTS;
use super::reconstruction::{reconstruct, Cweno3, Reconstruction};
use super::rk::{adaptive_dt, adaptive_dt_2d, SemiDiscrete};
use crate::error::{Error, Result};
use crate::exec::{for_each_chunk_mut, Execution};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineScheme {
    pub dx: f64,
    pub boundary: BoundaryCondition,
    pub reconstruction: Reconstruction,
    /// Scale reconstructions so interface values of cells with a
    /// non-negative average stay non-negative. Off for signed unknowns.
    pub positivity: bool,
}

impl LineScheme {
    pub fn new(axis: &Axis, boundary: BoundaryCondition, reconstruction: Reconstruction) -> Self {
        LineScheme {
            dx: axis.width(),
            boundary,
            reconstruction,
            positivity: true,
        }
    }
}

/// Writes the semi-discrete rate of one line of cells into `out`.
///
/// * `velocity`: `n + 1` interface velocities,
/// * `diffusion`: optional `n + 1` interface diffusion coefficients,
/// * `source`: optional `3 n` source coefficients at the Gauss nodes.
pub fn line_rate(
    scheme: &LineScheme,
    u: &[f64],
    velocity: &[f64],
    diffusion: Option<&[f64]>,
    source: Option<&[f64]>,
    out: &mut [f64],
) {
    let n = u.len();
    debug_assert_eq!(velocity.len(), n + 1);
    let dx = scheme.dx;
    let eps = dx * dx;
    let zero_flux = scheme.boundary == BoundaryCondition::ZeroFlux;

    let mut ext = Vec::with_capacity(n + 4);
    fill_ghosts(u, scheme.boundary, &mut ext);

    // reconstructions for cells -1 ..= n, stored at k = j + 1
    let polys: Vec<Cweno3> = (0..n + 2)
        .map(|k| {
            let p = reconstruct(scheme.reconstruction, [ext[k], ext[k + 1], ext[k + 2]], eps);
            if scheme.positivity {
                p.limited_to_nonnegative()
            } else {
                p
            }
        })
        .collect();

    let flux = |i: usize| -> f64 {
        if zero_flux && (i == 0 || i == n) {
            return 0.0;
        }
        // interface i sits between cells i-1 (polys[i]) and i (polys[i+1])
        let mut f = llf_flux(polys[i].right(), polys[i + 1].left(), velocity[i]);
        if let Some(d) = diffusion {
            f -= d[i] * limited_interface_gradient(&ext, i, dx);
        }
        f
    };

    let mut left = flux(0);
    for j in 0..n {
        let right = flux(j + 1);
        let mut rate = -(right - left) / dx;
        if let Some(s) = source {
            let vals = polys[j + 1].gauss_values();
            rate += (0..3).map(|q| GAUSS3_WEIGHTS[q] * s[3 * j + q] * vals[q]).sum::<f64>();
        }
        out[j] = rate;
        left = right;
    }
}

type VelocityFn1d<'a> = dyn Fn(f64, &[f64], &mut [f64]) -> Result<()> + Sync + 'a;

/// One-dimensional operator. The velocity callback fills the `n + 1`
/// interface velocities from `(t, u)`.
pub struct Transport1d<'a> {
    pub axis: Axis,
    pub scheme: LineScheme,
    pub cfl: f64,
    pub velocity: Box<VelocityFn1d<'a>>,
    pub diffusion: Option<Vec<f64>>,
    pub source: Option<Vec<f64>>,
}

impl<'a> Transport1d<'a> {
    pub fn new(
        axis: Axis,
        boundary: BoundaryCondition,
        reconstruction: Reconstruction,
        cfl: f64,
        velocity: Box<VelocityFn1d<'a>>,
    ) -> Self {
        Transport1d {
            scheme: LineScheme::new(&axis, boundary, reconstruction),
            axis,
            cfl,
            velocity,
            diffusion: None,
            source: None,
        }
    }

    pub fn with_diffusion(mut self, interface_coefficients: Vec<f64>) -> Self {
        self.diffusion = Some(interface_coefficients);
        self
    }

    pub fn with_source(mut self, gauss_coefficients: Vec<f64>) -> Self {
        self.source = Some(gauss_coefficients);
        self
    }

    /// Disables the positivity scaling, for unknowns that change sign.
    pub fn signed(mut self) -> Self {
        self.scheme.positivity = false;
        self
    }

    pub fn interface_velocities(&self, t: f64, u: &[f64]) -> Result<Vec<f64>> {
        let mut v = vec![0.0; self.axis.cells + 1];
        (self.velocity)(t, u, &mut v)?;
        Ok(v)
    }
}

impl SemiDiscrete for Transport1d<'_> {
    fn rhs(&self, t: f64, u: &[f64], out: &mut [f64]) -> Result<()> {
        let v = self.interface_velocities(t, u)?;
        line_rate(
            &self.scheme,
            u,
            &v,
            self.diffusion.as_deref(),
            self.source.as_deref(),
            out,
        );
        Ok(())
    }

    fn stable_dt(&self, t: f64, u: &[f64]) -> Result<f64> {
        let v = self.interface_velocities(t, u)?;
        let speed = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let diff = self
            .diffusion
            .as_ref()
            .map_or(0.0, |d| d.iter().fold(0.0f64, |m, x| m.max(x.abs())));
        let mut dt = match adaptive_dt(self.scheme.dx, speed, diff, self.cfl) {
            Err(Error::NoDynamics) => f64::INFINITY,
            other => other?,
        };
        if let Some(s) = &self.source {
            let rate = s.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if rate > 0.0 {
                dt = dt.min(self.cfl / rate);
            }
        }
        Ok(dt)
    }
}

type VelocityFn2d<'a> = dyn Fn(f64, &[f64], &mut [f64], &mut [f64]) -> Result<()> + Sync + 'a;

/// Two-dimensional operator with dimension-by-dimension reconstruction
/// and unsplit flux accumulation.
///
/// The velocity callback fills `vx` (`ny` rows of `nx + 1` x-interface
/// values) and `vy` (`nx` columns of `ny + 1` y-interface values).
pub struct Transport2d<'a> {
    pub x: Axis,
    pub y: Axis,
    pub boundary: BoundaryCondition,
    pub reconstruction: Reconstruction,
    pub cfl: f64,
    pub exec: Execution,
    pub velocity: Box<VelocityFn2d<'a>>,
}

impl Transport2d<'_> {
    fn velocities(&self, t: f64, u: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let (nx, ny) = (self.x.cells, self.y.cells);
        let mut vx = vec![0.0; ny * (nx + 1)];
        let mut vy = vec![0.0; nx * (ny + 1)];
        (self.velocity)(t, u, &mut vx, &mut vy)?;
        Ok((vx, vy))
    }
}

impl SemiDiscrete for Transport2d<'_> {
    fn rhs(&self, t: f64, u: &[f64], out: &mut [f64]) -> Result<()> {
        let (nx, ny) = (self.x.cells, self.y.cells);
        let (vx, vy) = self.velocities(t, u)?;
        let sx = LineScheme::new(&self.x, self.boundary, self.reconstruction);
        let sy = LineScheme::new(&self.y, self.boundary, self.reconstruction);

        for_each_chunk_mut(self.exec, out, nx, |iy, row_out| {
            let row = &u[iy * nx..(iy + 1) * nx];
            line_rate(&sx, row, &vx[iy * (nx + 1)..(iy + 1) * (nx + 1)], None, None, row_out);
        });

        let mut cols = vec![0.0; nx * ny];
        for_each_chunk_mut(self.exec, &mut cols, ny, |ix, col_out| {
            let col: Vec<f64> = (0..ny).map(|iy| u[iy * nx + ix]).collect();
            line_rate(&sy, &col, &vy[ix * (ny + 1)..(ix + 1) * (ny + 1)], None, None, col_out);
        });
        for_each_chunk_mut(self.exec, out, nx, |iy, row_out| {
            for (ix, o) in row_out.iter_mut().enumerate() {
                *o += cols[ix * ny + iy];
            }
        });
        Ok(())
    }

    fn stable_dt(&self, t: f64, u: &[f64]) -> Result<f64> {
        let (vx, vy) = self.velocities(t, u)?;
        let max = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        match adaptive_dt_2d(self.x.width(), self.y.width(), max(&vx), max(&vy), self.cfl) {
            Err(Error::NoDynamics) => Ok(f64::INFINITY),
            other => other,
        }
    }
}
