//! Discretisation kernel: third-order CWENO finite volumes, local
//! Lax-Friedrichs fluxes, a fourth-order diffusion stencil, Gauss-3
//! quadrature and SSP-RK3 with an adaptive CFL step.

mod flux;
mod grid;
mod quadrature;
mod reconstruction;
mod rk;
mod transport;

pub use flux::{diffusion_4th, llf_flux};
pub(crate) use flux::fill_ghosts;
pub use grid::{Axis, BoundaryCondition, DensityField, Grid, MIN_SOLVER_CELLS};
pub(crate) use grid::mean_of;
pub use quadrature::{composite_gauss3, gauss3_cell_average, GAUSS3_NODES, GAUSS3_WEIGHTS};
pub use reconstruction::{cweno3_reconstruct, Cweno3, Reconstruction};
pub use rk::{
    adaptive_dt, adaptive_dt_2d, march, ssprk3_step, MarchOptions, MarchStats, SemiDiscrete,
    DEFAULT_CFL,
};
pub use transport::{line_rate, LineScheme, Transport1d, Transport2d};

/// Cell averages of `f` on a 1D axis via Gauss-3 quadrature.
pub fn cell_averages_1d<F: Fn(f64) -> f64>(axis: &Axis, f: F) -> Vec<f64> {
    (0..axis.cells)
        .map(|j| gauss3_cell_average(&f, axis.edge(j), axis.edge(j + 1)))
        .collect()
}

/// Cell averages of `f` on a 2D grid with the tensor Gauss-3 rule.
pub fn cell_averages_2d<F: Fn(f64, f64) -> f64>(x: &Axis, y: &Axis, f: F) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.cells * y.cells);
    for iy in 0..y.cells {
        for ix in 0..x.cells {
            let (xc, yc) = (x.center(ix), y.center(iy));
            let mut s = 0.0;
            for (qx, wx) in GAUSS3_NODES.iter().zip(GAUSS3_WEIGHTS) {
                for (qy, wy) in GAUSS3_NODES.iter().zip(GAUSS3_WEIGHTS) {
                    s += wx * wy * f(xc + qx * x.width(), yc + qy * y.width());
                }
            }
            out.push(s);
        }
    }
    out
}
