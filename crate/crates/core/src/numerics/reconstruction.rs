//! Third-order CWENO reconstruction from three cell averages.
//!
//! The optimal parabola is blended with the two one-sided linear
//! polynomials using linear weights (1/4, 1/2, 1/4) and Jiang-Shu type
//! smoothness indicators with exponent two.

use serde::{Deserialize, Serialize};

use super::quadrature::GAUSS3_NODES;

const WEIGHT_LEFT: f64 = 0.25;
const WEIGHT_CENTRAL: f64 = 0.5;
const WEIGHT_RIGHT: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Reconstruction {
    /// Piecewise constant (monotone first-order building block).
    FirstOrder,
    #[default]
    Cweno3,
}

/// Reconstructed quadratic `P(ξ) = c0 + c1 ξ + c2 ξ²` on the reference
/// cell `ξ ∈ [-1/2, 1/2]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cweno3 {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Cweno3 {
    pub fn constant(v: f64) -> Self {
        Cweno3 {
            c0: v,
            c1: 0.0,
            c2: 0.0,
        }
    }

    #[inline]
    pub fn at(&self, xi: f64) -> f64 {
        self.c0 + xi * (self.c1 + xi * self.c2)
    }

    /// Boundary-extrapolated value at the left interface.
    #[inline]
    pub fn left(&self) -> f64 {
        self.at(-0.5)
    }

    /// Boundary-extrapolated value at the right interface.
    #[inline]
    pub fn right(&self) -> f64 {
        self.at(0.5)
    }

    pub fn center(&self) -> f64 {
        self.c0
    }

    /// Scales the polynomial towards its cell average just enough that both
    /// interface values are non-negative. Cells with a negative average, or
    /// already non-negative edges, are returned unchanged.
    pub fn limited_to_nonnegative(self) -> Self {
        let mean = self.c0 + self.c2 / 12.0;
        let low = self.left().min(self.right());
        if low >= 0.0 || mean < 0.0 {
            return self;
        }
        let theta = mean / (mean - low);
        Cweno3 {
            c0: mean + theta * (self.c0 - mean),
            c1: theta * self.c1,
            c2: theta * self.c2,
        }
    }

    /// Point values at the three Gauss nodes of the cell.
    pub fn gauss_values(&self) -> [f64; 3] {
        GAUSS3_NODES.map(|xi| self.at(xi))
    }
}

/// Reconstructs cell `j` from `[ū_{j-1}, ū_j, ū_{j+1}]`; `eps` regularises
/// the nonlinear weights (use `Δx²`).
pub fn cweno3_reconstruct(window: [f64; 3], eps: f64) -> Cweno3 {
    let [a, m, c] = window;
    let dl = m - a;
    let dr = c - m;
    let curv = c - 2.0 * m + a;
    let slope = 0.5 * (c - a);

    // P_0 = (P_opt - ¼ P_L - ¼ P_R) / ½ has slope `slope` and ξ² coefficient `curv`.
    let beta_l = dl * dl;
    let beta_r = dr * dr;
    let beta_0 = slope * slope + 13.0 / 3.0 * curv * curv;

    let al = WEIGHT_LEFT / ((eps + beta_l) * (eps + beta_l));
    let ar = WEIGHT_RIGHT / ((eps + beta_r) * (eps + beta_r));
    let a0 = WEIGHT_CENTRAL / ((eps + beta_0) * (eps + beta_0));
    let sum = al + ar + a0;
    let (wl, wr, w0) = (al / sum, ar / sum, a0 / sum);

    // P_0 = m - curv/12 + slope ξ + curv ξ²
    Cweno3 {
        c0: m - w0 * curv / 12.0,
        c1: wl * dl + wr * dr + w0 * slope,
        c2: w0 * curv,
    }
}

#[inline]
pub(crate) fn reconstruct(kind: Reconstruction, window: [f64; 3], eps: f64) -> Cweno3 {
    match kind {
        Reconstruction::FirstOrder => Cweno3::constant(window[1]),
        Reconstruction::Cweno3 => cweno3_reconstruct(window, eps),
    }
}
