//! Named initial densities: cell averages via three-point Gauss quadrature
//! and exact sampling for particle runs, plus a Gaussian KDE for data.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::numerics::{cell_averages_1d, cell_averages_2d, Axis, BoundaryCondition, DensityField, Grid};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Profile {
    Gaussian { mean: f64, std: f64 },
    Uniform { lower: f64, upper: f64 },
    /// Equal-weight mixture of two normals with a common spread.
    Bimodal { left: f64, right: f64, std: f64 },
    /// Product of independent normals in the plane.
    Gaussian2d { mean: [f64; 2], std: [f64; 2] },
}

fn normal_pdf(x: f64, mean: f64, std: f64) -> f64 {
    let z = (x - mean) / std;
    (-0.5 * z * z).exp() / (std * (2.0 * std::f64::consts::PI).sqrt())
}

impl Profile {
    pub fn dim(&self) -> usize {
        match self {
            Profile::Gaussian2d { .. } => 2,
            _ => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Profile::Gaussian { mean, std } => mean.is_finite() && std > 0.0 && std.is_finite(),
            Profile::Uniform { lower, upper } => lower.is_finite() && upper.is_finite() && upper > lower,
            Profile::Bimodal { left, right, std } => left.is_finite() && right.is_finite() && std > 0.0,
            Profile::Gaussian2d { mean, std } => {
                mean.iter().all(|m| m.is_finite()) && std.iter().all(|s| *s > 0.0 && s.is_finite())
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("profile", format!("{self:?} has invalid parameters")))
        }
    }

    /// Density at a point (`y` ignored in 1D).
    pub fn pdf(&self, x: f64, y: f64) -> f64 {
        match *self {
            Profile::Gaussian { mean, std } => normal_pdf(x, mean, std),
            Profile::Uniform { lower, upper } => {
                if (lower..upper).contains(&x) {
                    1.0 / (upper - lower)
                } else {
                    0.0
                }
            }
            Profile::Bimodal { left, right, std } => 0.5 * (normal_pdf(x, left, std) + normal_pdf(x, right, std)),
            Profile::Gaussian2d { mean, std } => normal_pdf(x, mean[0], std[0]) * normal_pdf(y, mean[1], std[1]),
        }
    }

    /// Cell averages on `grid`. The uniform family is integrated exactly so
    /// that edges falling inside a cell are not smeared by the quadrature.
    pub fn cell_averages(&self, grid: &Grid) -> Result<Vec<f64>> {
        self.validate()?;
        if grid.dim() != self.dim() {
            return Err(Error::GridMismatch(format!(
                "{}-D profile on a {}-D grid",
                self.dim(),
                grid.dim()
            )));
        }
        Ok(match (self, grid.axes()) {
            (Profile::Uniform { lower, upper }, [x]) => (0..x.cells)
                .map(|j| {
                    let (a, b) = (x.edge(j), x.edge(j + 1));
                    let overlap = (b.min(*upper) - a.max(*lower)).max(0.0);
                    overlap / (upper - lower) / x.width()
                })
                .collect(),
            (_, [x]) => cell_averages_1d(x, |s| self.pdf(s, 0.0)),
            (_, [x, y]) => cell_averages_2d(x, y, |s, t| self.pdf(s, t)),
            _ => unreachable!("grids are 1D or 2D"),
        })
    }

    /// Discretised field, renormalised to unit mass on the grid.
    pub fn field(&self, grid: &Grid, boundary: BoundaryCondition) -> Result<DensityField> {
        let mut f = DensityField::new(grid.clone(), self.cell_averages(grid)?, boundary)?;
        f.normalize()?;
        Ok(f)
    }

    /// `n` independent samples, flat (`d` coordinates per sample).
    pub fn sample<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        let mut out = Vec::with_capacity(n * self.dim());
        for _ in 0..n {
            match *self {
                Profile::Gaussian { mean, std } => {
                    let z: f64 = StandardNormal.sample(rng);
                    out.push(mean + std * z);
                }
                Profile::Uniform { lower, upper } => out.push(rng.random_range(lower..upper)),
                Profile::Bimodal { left, right, std } => {
                    let z: f64 = StandardNormal.sample(rng);
                    let c = if rng.random::<bool>() { right } else { left };
                    out.push(c + std * z);
                }
                Profile::Gaussian2d { mean, std } => {
                    for d in 0..2 {
                        let z: f64 = StandardNormal.sample(rng);
                        out.push(mean[d] + std[d] * z);
                    }
                }
            }
        }
        out
    }
}

/// Average of the `N(mean, h²)` density over `[a, b]`, exact via `erf`.
fn normal_cell_average(a: f64, b: f64, mean: f64, h: f64) -> f64 {
    let s = h * std::f64::consts::SQRT_2;
    0.5 * (erf((b - mean) / s) - erf((a - mean) / s)) / (b - a)
}

/// Silverman's rule-of-thumb bandwidth.
pub fn silverman_bandwidth(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    1.06 * var.sqrt() * n.powf(-0.2)
}

fn kernel_row(axis: &Axis, center: f64, h: f64) -> (usize, Vec<f64>) {
    // only cells within 8 bandwidths carry weight worth adding
    let lo = axis.locate((center - 8.0 * h).max(axis.lower)).unwrap_or(0);
    let hi = axis
        .locate((center + 8.0 * h).min(axis.upper))
        .unwrap_or(axis.cells - 1);
    if center + 8.0 * h < axis.lower || center - 8.0 * h > axis.upper {
        return (0, Vec::new());
    }
    let row = (lo..=hi)
        .map(|j| normal_cell_average(axis.edge(j), axis.edge(j + 1), center, h))
        .collect();
    (lo, row)
}

/// Gaussian kernel density estimate with exact cell averages of each
/// kernel. `samples` is flat with `grid.dim()` coordinates per point and
/// `bandwidth` holds one bandwidth per axis. The result is normalised to
/// unit mass on the grid.
pub fn kde_field(samples: &[f64], grid: &Grid, bandwidth: &[f64], boundary: BoundaryCondition) -> Result<DensityField> {
    let d = grid.dim();
    if samples.is_empty() {
        return Err(Error::EmptySample("kde samples"));
    }
    if samples.len() % d != 0 || bandwidth.len() != d {
        return Err(Error::GridMismatch("sample or bandwidth dimension differs from the grid".into()));
    }
    if bandwidth.iter().any(|h| !(*h > 0.0)) {
        return Err(Error::invalid("bandwidth", "must be positive"));
    }
    let mut values = vec![0.0; grid.len()];
    match grid.axes() {
        [x] => {
            for &s in samples {
                let (lo, row) = kernel_row(x, s, bandwidth[0]);
                for (k, v) in row.iter().enumerate() {
                    values[lo + k] += v;
                }
            }
        }
        [x, y] => {
            let nx = x.cells;
            for p in samples.chunks(2) {
                let (lx, rx) = kernel_row(x, p[0], bandwidth[0]);
                let (ly, ry) = kernel_row(y, p[1], bandwidth[1]);
                for (ky, vy) in ry.iter().enumerate() {
                    let base = (ly + ky) * nx + lx;
                    for (kx, vx) in rx.iter().enumerate() {
                        values[base + kx] += vx * vy;
                    }
                }
            }
        }
        _ => unreachable!("grids are 1D or 2D"),
    }
    let mut f = DensityField::new(grid.clone(), values, boundary)?;
    f.normalize()?;
    Ok(f)
}

/// Normal samples with a given mean and standard deviation.
pub fn normal_samples<R: Rng>(n: usize, mean: f64, std: f64, rng: &mut R) -> Result<Vec<f64>> {
    let dist = Normal::new(mean, std).map_err(|e| Error::invalid("std", e.to_string()))?;
    Ok((0..n).map(|_| dist.sample(rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gaussian_field_has_expected_moments() {
        let grid = Grid::line(-6.0, 8.0, 400).unwrap();
        let f = Profile::Gaussian { mean: 1.0, std: 1.0 }.field(&grid, BoundaryCondition::ZeroFlux).unwrap();
        assert!((f.mass() - 1.0).abs() < 1e-12);
        assert!((f.mean()[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn uniform_cells_are_exact() {
        let grid = Grid::line(2.0, 8.0, 12).unwrap();
        let f = Profile::Uniform { lower: 2.0, upper: 8.0 }.cell_averages(&grid).unwrap();
        assert!(f.iter().all(|v| (v - 1.0 / 6.0).abs() < 1e-15));
        let grid = Grid::line(-2.0, 0.0, 8).unwrap();
        let f = Profile::Uniform { lower: -1.0, upper: -0.6 }.cell_averages(&grid).unwrap();
        // cells of width 0.25: [-1,-0.75] full, [-0.75,-0.5] partly
        assert!((f[4] - 2.5).abs() < 1e-12);
        assert!((f[5] - 0.6 * 2.5).abs() < 1e-12);
    }

    #[test]
    fn kde_matches_smooth_profile() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs = normal_samples(20_000, 0.0, 1.0, &mut rng).unwrap();
        let grid = Grid::line(-6.0, 6.0, 120).unwrap();
        let f = kde_field(&xs, &grid, &[silverman_bandwidth(&xs)], BoundaryCondition::Outflow).unwrap();
        let g = Profile::Gaussian { mean: 0.0, std: 1.0 }.field(&grid, BoundaryCondition::Outflow).unwrap();
        assert!(f.l1_distance(&g).unwrap() < 0.05);
    }

    #[test]
    fn samples_follow_profile() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = Profile::Bimodal { left: -2.0, right: 2.0, std: 0.5 }.sample(50_000, &mut rng);
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        let var = s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / s.len() as f64;
        assert!(mean.abs() < 0.05);
        assert!((var - 4.25).abs() < 0.1);
    }
}
