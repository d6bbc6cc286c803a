use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest per-axis cell count the CWENO stencil (plus two ghost cells)
/// can run on.
pub const MIN_SOLVER_CELLS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lower: f64,
    pub upper: f64,
    pub cells: usize,
}

impl Axis {
    pub fn new(lower: f64, upper: f64, cells: usize) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite()) || upper <= lower {
            return Err(Error::invalid(
                "axis",
                format!("bounds [{lower}, {upper}] must be finite and increasing"),
            ));
        }
        if cells == 0 {
            return Err(Error::invalid("cells", "must be at least 1"));
        }
        Ok(Axis {
            lower,
            upper,
            cells,
        })
    }

    #[inline]
    pub fn width(&self) -> f64 {
        (self.upper - self.lower) / self.cells as f64
    }

    #[inline]
    pub fn center(&self, j: usize) -> f64 {
        self.lower + (j as f64 + 0.5) * self.width()
    }

    /// Position of interface `i`, `0 ..= cells`.
    #[inline]
    pub fn edge(&self, i: usize) -> f64 {
        self.lower + i as f64 * self.width()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.cells).map(|j| self.center(j)).collect()
    }

    pub fn edges(&self) -> Vec<f64> {
        (0..=self.cells).map(|i| self.edge(i)).collect()
    }

    /// Cell containing `x` with half-open cells `[x_{j-1/2}, x_{j+1/2})`;
    /// the upper bound itself belongs to the last cell.
    pub fn locate(&self, x: f64) -> Option<usize> {
        if !(x >= self.lower && x <= self.upper) {
            return None;
        }
        let j = ((x - self.lower) / self.width()).floor() as usize;
        Some(j.min(self.cells - 1))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    axes: Vec<Axis>,
}

impl Grid {
    pub fn line(lower: f64, upper: f64, cells: usize) -> Result<Self> {
        Ok(Grid {
            axes: vec![Axis::new(lower, upper, cells)?],
        })
    }

    pub fn plane(x: Axis, y: Axis) -> Self {
        Grid { axes: vec![x, y] }
    }

    pub fn from_axes(axes: Vec<Axis>) -> Result<Self> {
        if !(1..=2).contains(&axes.len()) {
            return Err(Error::invalid("grid", format!("{} axes, need 1 or 2", axes.len())));
        }
        for a in &axes {
            Axis::new(a.lower, a.upper, a.cells)?;
        }
        Ok(Grid { axes })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn x(&self) -> &Axis {
        &self.axes[0]
    }

    pub fn y(&self) -> Option<&Axis> {
        self.axes.get(1)
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.cells).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(Axis::width).product()
    }

    pub fn require_solver_ready(&self) -> Result<()> {
        for a in &self.axes {
            if a.cells < MIN_SOLVER_CELLS {
                return Err(Error::invalid(
                    "cells",
                    format!("{} cells per axis, the solver needs at least {MIN_SOLVER_CELLS}", a.cells),
                ));
            }
        }
        Ok(())
    }

    /// Flat index of the cell containing `point`, if inside.
    pub fn locate(&self, point: &[f64]) -> Option<usize> {
        match self.axes.as_slice() {
            [x] => x.locate(point[0]),
            [x, y] => {
                let ix = x.locate(point[0])?;
                let iy = y.locate(point[1])?;
                Some(iy * x.cells + ix)
            }
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryCondition {
    /// Zeroth-order extrapolation into the ghost cells.
    #[default]
    Outflow,
    /// Mirrored ghost cells and a wall flux pinned to zero.
    ZeroFlux,
}

/// Cell-averaged density. 2D values are stored row-major, `index = iy * nx + ix`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityField {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub boundary: BoundaryCondition,
}

impl DensityField {
    pub fn new(grid: Grid, values: Vec<f64>, boundary: BoundaryCondition) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} cells",
                values.len(),
                grid.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "density",
                index,
            });
        }
        Ok(DensityField {
            grid,
            values,
            boundary,
        })
    }

    pub fn zeros(grid: Grid, boundary: BoundaryCondition) -> Self {
        let n = grid.len();
        DensityField {
            grid,
            values: vec![0.0; n],
            boundary,
        }
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let m = self.mass();
        if !(m > 0.0) {
            return Err(Error::invalid("density", format!("cannot normalize mass {m}")));
        }
        self.values.iter_mut().for_each(|v| *v /= m);
        Ok(())
    }

    /// Midpoint-rule mean (x, y); `y` is 0 in 1D.
    pub fn mean(&self) -> [f64; 2] {
        mean_of(&self.grid, &self.values)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn same_grid(&self, other: &DensityField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("fields live on different grids".into()));
        }
        Ok(())
    }

    /// Sum of `|a - b|` over cells times the cell volume.
    pub fn l1_distance(&self, other: &DensityField) -> Result<f64> {
        self.same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * self.grid.cell_volume())
    }
}

pub(crate) fn mean_of(grid: &Grid, values: &[f64]) -> [f64; 2] {
    let vol = grid.cell_volume();
    let mass: f64 = values.iter().sum::<f64>() * vol;
    if mass == 0.0 {
        return [0.0; 2];
    }
    match grid.axes() {
        [x] => {
            let m1: f64 = values.iter().enumerate().map(|(j, v)| x.center(j) * v).sum::<f64>() * vol;
            [m1 / mass, 0.0]
        }
        [x, y] => {
            let nx = x.cells;
            let (mut sx, mut sy) = (0.0, 0.0);
            for (k, v) in values.iter().enumerate() {
                sx += x.center(k % nx) * v;
                sy += y.center(k / nx) * v;
            }
            [sx * vol / mass, sy * vol / mass]
        }
        _ => [0.0; 2],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn locate_uses_half_open_cells() {
        let a = Axis::new(0.0, 2.0, 4).unwrap();
        assert_eq!(a.locate(0.5), Some(1));
        assert_eq!(a.locate(0.4999), Some(0));
        assert_eq!(a.locate(2.0), Some(3));
        assert_eq!(a.locate(2.0001), None);
        assert_eq!(a.locate(-1e-12), None);
        assert_eq!(a.locate(f64::NAN), None);
    }

    #[test]
    fn axis_validation() {
        assert!(Axis::new(1.0, 1.0, 4).is_err());
        assert!(Axis::new(0.0, 1.0, 0).is_err());
        let g = Grid::line(0.0, 1.0, 6).unwrap();
        assert!(g.require_solver_ready().is_err());
        assert!(Grid::line(0.0, 1.0, 8).unwrap().require_solver_ready().is_ok());
    }

    #[test]
    fn plane_indexing() {
        let g = Grid::plane(Axis::new(0.0, 1.0, 4).unwrap(), Axis::new(0.0, 2.0, 2).unwrap());
        assert_eq!(g.len(), 8);
        assert_eq!(g.locate(&[0.3, 1.5]), Some(4 + 1));
        assert!((g.cell_volume() - 0.25).abs() < 1e-15);
    }
}
