//! Interface fluxes: local Lax-Friedrichs for the linear transport flux
//! `F(u) = v u`, and the fourth-order diffusion stencil.

use super::grid::BoundaryCondition;

/// Local Lax-Friedrichs flux with `u_minus` taken from the left cell and
/// `u_plus` from the right cell. The local speed is `|velocity|`.
#[inline]
pub fn llf_flux(u_minus: f64, u_plus: f64, velocity: f64) -> f64 {
    0.5 * velocity * (u_minus + u_plus) - 0.5 * velocity.abs() * (u_plus - u_minus)
}

/// Fourth-order derivative at interface `i` (between cells `i-1` and `i`)
/// from cell averages; `ext` carries two ghost cells on each side, so cell
/// `j` lives at `ext[j + 2]`.
#[inline]
pub(crate) fn interface_gradient(ext: &[f64], i: usize, dx: f64) -> f64 {
    // cells i-2, i-1, i, i+1
    let (um2, um1, u0, up1) = (ext[i], ext[i + 1], ext[i + 2], ext[i + 3]);
    (15.0 * (u0 - um1) - (up1 - um2)) / (12.0 * dx)
}

/// [`interface_gradient`] with its ratio to the two-point difference
/// clamped to `[0, 2]`. Smooth data is untouched (the ratio is
/// `1 + O(Δx²)`); at jumps and extrema the flux becomes a non-negative
/// multiple of the two-point flux, which keeps each forward-Euler stage
/// positive for `D Δt / Δx² ≤ 1/4`.
#[inline]
pub(crate) fn limited_interface_gradient(ext: &[f64], i: usize, dx: f64) -> f64 {
    let jump = ext[i + 2] - ext[i + 1];
    if jump == 0.0 {
        return 0.0;
    }
    let two_point = jump / dx;
    let theta = (interface_gradient(ext, i, dx) / two_point).clamp(0.0, 2.0);
    theta * two_point
}

/// Copies `u` into `ext` with two ghost cells per side.
pub(crate) fn fill_ghosts(u: &[f64], bc: BoundaryCondition, ext: &mut Vec<f64>) {
    let n = u.len();
    ext.clear();
    ext.reserve(n + 4);
    match bc {
        BoundaryCondition::Outflow => {
            ext.extend([u[0], u[0]]);
            ext.extend_from_slice(u);
            ext.extend([u[n - 1], u[n - 1]]);
        }
        BoundaryCondition::ZeroFlux => {
            ext.extend([u[1.min(n - 1)], u[0]]);
            ext.extend_from_slice(u);
            ext.extend([u[n - 1], u[n.saturating_sub(2)]]);
        }
    }
}

/// `coefficient · ∂ₓₓu` in cell-average form, fourth order in the interior.
pub fn diffusion_4th(cell_averages: &[f64], dx: f64, coefficient: f64, bc: BoundaryCondition) -> Vec<f64> {
    let n = cell_averages.len();
    assert!(n >= 5, "the diffusion stencil needs at least five cells");
    let mut ext = Vec::new();
    fill_ghosts(cell_averages, bc, &mut ext);
    let flux = |i: usize| {
        if bc == BoundaryCondition::ZeroFlux && (i == 0 || i == n) {
            0.0
        } else {
            coefficient * interface_gradient(&ext, i, dx)
        }
    };
    (0..n).map(|j| (flux(j + 1) - flux(j)) / dx).collect()
}
