//! Fokker-Planck equation `∂_t g + ∂_x[B g − D ∂_x g] = 0` with
//! `B = σ(w x + b) − (ν²/2)(K²)'` and `D = ν² K²/2`, and its closed-form
//! steady states.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::activations::Activation;
use crate::boltzmann::DiffusionFn;
use crate::error::{Error, Result};
use crate::meanfield::MeanFieldSolution;
use crate::numerics::{
    cell_averages_1d, composite_gauss3, mean_of, march, BoundaryCondition, DensityField, Grid, MarchOptions,
    Reconstruction, Transport1d, DEFAULT_CFL,
};
use crate::params::NetworkParams;

#[derive(Clone, Debug)]
pub struct FokkerPlanckProblem {
    pub initial: DensityField,
    pub params: NetworkParams,
    pub activation: Activation,
    pub diffusion: DiffusionFn,
    /// Noise variance `ν²`.
    pub nu2: f64,
    pub final_time: f64,
    pub reconstruction: Reconstruction,
    pub cfl: f64,
    /// Abort if any cell drops below `-negativity_tolerance`.
    pub negativity_tolerance: f64,
}

impl FokkerPlanckProblem {
    pub fn new(
        initial: DensityField,
        params: NetworkParams,
        activation: Activation,
        diffusion: DiffusionFn,
        nu2: f64,
        final_time: f64,
    ) -> Self {
        FokkerPlanckProblem {
            initial,
            params,
            activation,
            diffusion,
            nu2,
            final_time,
            reconstruction: Reconstruction::Cweno3,
            cfl: DEFAULT_CFL,
            negativity_tolerance: 1e-8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let grid = &self.initial.grid;
        if grid.dim() != 1 || self.params.dim != 1 {
            return Err(Error::Unsupported("the Fokker-Planck solver is 1D".into()));
        }
        grid.require_solver_ready()?;
        self.params.validate()?;
        let mass = self.initial.mass();
        if (mass - 1.0).abs() > 1e-10 {
            return Err(Error::invalid("initial_density", format!("mass {mass} differs from 1")));
        }
        if !(self.nu2 > 0.0 && self.nu2.is_finite()) {
            return Err(Error::invalid("nu2", format!("{} must be positive", self.nu2)));
        }
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return Err(Error::invalid("final_time", format!("{} must be positive", self.final_time)));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::invalid("cfl", format!("{} not in (0, 1]", self.cfl)));
        }
        Ok(())
    }

    fn operator(&self) -> Transport1d<'_> {
        let x = *self.initial.grid.x();
        let grid = self.initial.grid.clone();
        let (act, k, nu2, params) = (self.activation, self.diffusion, self.nu2, &self.params);
        let d: Vec<f64> = x.edges().iter().map(|&e| 0.5 * nu2 * k.square(e)).collect();
        Transport1d::new(
            x,
            self.initial.boundary,
            self.reconstruction,
            self.cfl,
            Box::new(move |t, u: &[f64], v: &mut [f64]| {
                let mean = if params.needs_mean() { mean_of(&grid, u) } else { [0.0; 2] };
                let layer = params.resolve(t, mean);
                for (i, vi) in v.iter_mut().enumerate() {
                    let e = x.edge(i);
                    *vi = act.eval(layer.apply1(e))? - 0.5 * nu2 * k.square_derivative(e);
                }
                Ok(())
            }),
        )
        .with_diffusion(d)
    }
}

/// Solves the Fokker-Planck problem, returning snapshots at the given times.
pub fn solve_fp(prob: &FokkerPlanckProblem, snapshot_times: &[f64]) -> Result<MeanFieldSolution> {
    prob.validate()?;
    if snapshot_times.is_empty()
        || snapshot_times.windows(2).any(|w| w[1] < w[0])
        || snapshot_times[0] < 0.0
        || *snapshot_times.last().unwrap() > prob.final_time * (1.0 + 1e-12)
    {
        return Err(Error::invalid(
            "snapshot_times",
            format!("must be sorted and lie in [0, {}]", prob.final_time),
        ));
    }
    let op = prob.operator();
    let opts = MarchOptions {
        cell_volume: prob.initial.grid.cell_volume(),
        negativity_tolerance: Some(prob.negativity_tolerance),
        ..Default::default()
    };
    let (states, stats) = march(&op, prob.initial.values.clone(), 0.0, snapshot_times, opts, |_, _, _| {})?;
    let snapshots = states
        .into_iter()
        .map(|v| DensityField::new(prob.initial.grid.clone(), v, prob.initial.boundary))
        .collect::<Result<Vec<_>>>()?;
    Ok(MeanFieldSolution {
        times: snapshot_times.to_vec(),
        snapshots,
        stats,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SteadyFamily {
    /// Identity activation, `K = 1`, `w < 0`.
    Gaussian,
    /// Identity activation, `K = x`, `w < 0`, `b > 0`.
    InverseGamma,
    /// ReLU, `K = x`, `w < 0`, `b > 0`; tail on `x ≥ −b/w`.
    Pareto,
    /// `σ_N`, `K = x`; normalised numerically on a finite support.
    GeneralizedGamma,
}

/// Closed-form steady state with its normalisation constant `C`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateModel {
    pub family: SteadyFamily,
    pub w: f64,
    pub b: f64,
    pub nu2: f64,
    pub activation: Activation,
    pub diffusion: DiffusionFn,
    /// `C`.
    pub normalization: f64,
    /// Finite support used by the numerically normalised family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<[f64; 2]>,
}

/// Tolerance of the construction-time normalisation check.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-8;

impl SteadyStateModel {
    /// Gaussian steady state, `C = √(−w/ν²) exp(b²/(w ν²)) / √π`.
    pub fn gaussian(w: f64, b: f64, nu2: f64) -> Result<Self> {
        check_nu2(nu2)?;
        if !(w < 0.0) {
            return Err(Error::Precondition(format!("Gaussian steady state needs w∞ < 0, got {w}")));
        }
        let c = (-w / nu2).sqrt() * (b * b / (w * nu2)).exp() / std::f64::consts::PI.sqrt();
        Self::checked(SteadyStateModel {
            family: SteadyFamily::Gaussian,
            w,
            b,
            nu2,
            activation: Activation::Identity,
            diffusion: DiffusionFn::One,
            normalization: c,
            support: None,
        })
    }

    /// Inverse-Gamma steady state with shape `μ = 1 − 2w/ν²`, rate
    /// `β = 2b/ν²` and `C = β^μ / Γ(μ)`.
    pub fn inverse_gamma(w: f64, b: f64, nu2: f64) -> Result<Self> {
        check_nu2(nu2)?;
        if !(w < 0.0) {
            return Err(Error::Precondition(format!("inverse-Gamma steady state needs w∞ < 0, got {w}")));
        }
        if !(b > 0.0) {
            return Err(Error::Precondition(format!("inverse-Gamma steady state needs b∞ > 0, got {b}")));
        }
        let (mu, beta) = (1.0 - 2.0 * w / nu2, 2.0 * b / nu2);
        Self::checked(SteadyStateModel {
            family: SteadyFamily::InverseGamma,
            w,
            b,
            nu2,
            activation: Activation::Identity,
            diffusion: DiffusionFn::Linear,
            normalization: beta.powf(mu) / gamma(mu),
            support: None,
        })
    }

    /// Pareto tail `(−b/w)/x²` on `x ≥ −b/w`.
    pub fn pareto(w: f64, b: f64, nu2: f64) -> Result<Self> {
        check_nu2(nu2)?;
        if !(w < 0.0) {
            return Err(Error::Precondition(format!("Pareto steady state needs w∞ < 0, got {w}")));
        }
        if !(b > 0.0) {
            return Err(Error::Precondition(format!(
                "Pareto steady state needs a positive edge −b∞/w∞, got b∞ = {b}"
            )));
        }
        Self::checked(SteadyStateModel {
            family: SteadyFamily::Pareto,
            w,
            b,
            nu2,
            activation: Activation::Relu,
            diffusion: DiffusionFn::Linear,
            normalization: -b / w,
            support: None,
        })
    }

    /// Steady state `x⁻² exp(∫ 2σ_N(w x + b)/(ν² x²) dx)` normalised on
    /// `[lower, upper] ⊂ (0, ∞)`. No closed-form constant is used.
    pub fn generalized_gamma(w: f64, b: f64, nu2: f64, delta: f64, c: f64, support: [f64; 2]) -> Result<Self> {
        check_nu2(nu2)?;
        let activation = Activation::sigma_n(delta, c)?;
        let [lo, hi] = support;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::Precondition(format!("support [{lo}, {hi}] must lie in (0, ∞)")));
        }
        if w * lo + b < 0.0 || w * hi + b < 0.0 {
            return Err(Error::Precondition("σ_N needs w∞ x + b∞ ≥ 0 on the support".into()));
        }
        let mut model = SteadyStateModel {
            family: SteadyFamily::GeneralizedGamma,
            w,
            b,
            nu2,
            activation,
            diffusion: DiffusionFn::Linear,
            normalization: 1.0,
            support: Some(support),
        };
        let mass = model.total_mass();
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::Precondition(format!("unnormalisable on the support (mass {mass})")));
        }
        model.normalization = 1.0 / mass;
        Self::checked(model)
    }

    fn checked(model: Self) -> Result<Self> {
        model.check_normalization()?;
        Ok(model)
    }

    /// Same model with `C` multiplied by `factor` and no mass check, for
    /// diagnostics.
    pub fn with_scaled_constant(&self, factor: f64) -> Self {
        let mut m = self.clone();
        m.normalization *= factor;
        m
    }

    /// Left edge of the support.
    pub fn lower_edge(&self) -> f64 {
        match self.family {
            SteadyFamily::Gaussian => f64::NEG_INFINITY,
            SteadyFamily::InverseGamma => 0.0,
            SteadyFamily::Pareto => -self.b / self.w,
            SteadyFamily::GeneralizedGamma => self.support.map_or(0.0, |s| s[0]),
        }
    }

    /// Unnormalised log-density `ln(g/C)`, valid inside the support.
    fn log_shape(&self, x: f64) -> f64 {
        let (w, b, nu2) = (self.w, self.b, self.nu2);
        match self.family {
            SteadyFamily::Gaussian => (w * x * x + 2.0 * b * x) / nu2,
            SteadyFamily::InverseGamma => {
                let mu = 1.0 - 2.0 * w / nu2;
                -(1.0 + mu) * x.ln() - 2.0 * b / (nu2 * x)
            }
            SteadyFamily::Pareto => -2.0 * x.ln(),
            SteadyFamily::GeneralizedGamma => {
                let lo = self.support.expect("support is set at construction")[0];
                let act = self.activation;
                let f = |s: f64| 2.0 * act.value(w * s + b) / (nu2 * s * s);
                let panels = (((x - lo) / lo).ceil() as usize).clamp(8, 4096);
                -2.0 * x.ln() + composite_gauss3(f, lo, x, panels)
            }
        }
    }

    fn in_support(&self, x: f64) -> bool {
        match self.family {
            SteadyFamily::Gaussian => true,
            SteadyFamily::InverseGamma => x > 0.0,
            SteadyFamily::Pareto => x >= self.lower_edge(),
            SteadyFamily::GeneralizedGamma => {
                let [lo, hi] = self.support.expect("support is set at construction");
                (lo..=hi).contains(&x)
            }
        }
    }

    /// Density value; zero outside the support.
    pub fn pdf(&self, x: f64) -> f64 {
        if !self.in_support(x) {
            return 0.0;
        }
        self.normalization * self.log_shape(x).exp()
    }

    /// `∫ g` over the support by composite Gauss quadrature (in `ln x` for
    /// the half-line families).
    pub fn total_mass(&self) -> f64 {
        match self.family {
            SteadyFamily::Gaussian => {
                let mean = -self.b / self.w;
                let sd = (self.nu2 / (-2.0 * self.w)).sqrt();
                composite_gauss3(|x| self.pdf(x), mean - 40.0 * sd, mean + 40.0 * sd, 4000)
            }
            SteadyFamily::InverseGamma | SteadyFamily::Pareto => {
                let scale = match self.family {
                    SteadyFamily::Pareto => self.lower_edge(),
                    _ => 2.0 * self.b / self.nu2,
                };
                let lo = if self.family == SteadyFamily::Pareto { scale.ln() } else { (scale * 1e-4).ln() };
                let hi = (scale * 1e12).ln();
                composite_gauss3(|s| self.pdf(s.exp()) * s.exp(), lo, hi, 8000)
            }
            SteadyFamily::GeneralizedGamma => {
                let [lo, hi] = self.support.expect("support is set at construction");
                // one cumulative sweep instead of re-integrating the potential per node
                let panels = 4000;
                let h = (hi - lo) / panels as f64;
                let mut total = 0.0;
                for p in 0..panels {
                    let a = lo + p as f64 * h;
                    total += composite_gauss3(|x| self.pdf(x), a, a + h, 1);
                }
                total
            }
        }
    }

    pub fn check_normalization(&self) -> Result<()> {
        let mass = self.total_mass();
        if (mass - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::Precondition(format!(
                "{:?} steady state integrates to {mass}, not 1",
                self.family
            )));
        }
        Ok(())
    }

    /// Cell averages of the pdf on a 1D grid.
    pub fn field(&self, grid: &Grid, boundary: BoundaryCondition) -> Result<DensityField> {
        if grid.dim() != 1 {
            return Err(Error::Unsupported("steady states are 1D".into()));
        }
        let x = grid.x();
        // split cells that straddle the support edge
        let edge = self.lower_edge();
        let values = cell_averages_1d(x, |s| self.pdf(s))
            .into_iter()
            .enumerate()
            .map(|(j, v)| {
                let (a, b) = (x.edge(j), x.edge(j + 1));
                if edge > a && edge < b {
                    composite_gauss3(|s| self.pdf(s), edge, b, 4) / (b - a)
                } else {
                    v
                }
            })
            .collect();
        DensityField::new(grid.clone(), values, boundary)
    }
}

fn check_nu2(nu2: f64) -> Result<()> {
    if !(nu2 > 0.0 && nu2.is_finite()) {
        return Err(Error::invalid("nu2", format!("{nu2} must be positive")));
    }
    Ok(())
}

/// Largest stationary-flux residual `|B g − D g'|` over interior cell
/// centres of `grid`, with `g'` from fourth-order central differences of
/// the pdf. Cells whose stencil leaves the support are skipped.
pub fn verify_steady_state(model: &SteadyStateModel, grid: &Grid) -> Result<f64> {
    if grid.dim() != 1 {
        return Err(Error::Unsupported("steady states are 1D".into()));
    }
    let x = grid.x();
    let h = x.width();
    let g: Vec<f64> = x.centers().iter().map(|&c| model.pdf(c)).collect();
    let edge = model.lower_edge();
    let upper = model.support.map_or(f64::INFINITY, |s| s[1]);
    let mut worst: f64 = 0.0;
    for j in 2..x.cells.saturating_sub(2) {
        if x.center(j - 2) < edge || x.center(j + 2) > upper {
            continue;
        }
        let c = x.center(j);
        let dg = (-g[j + 2] + 8.0 * g[j + 1] - 8.0 * g[j - 1] + g[j - 2]) / (12.0 * h);
        let drift = model.activation.eval(model.w * c + model.b)?
            - 0.5 * model.nu2 * model.diffusion.square_derivative(c);
        let d = 0.5 * model.nu2 * model.diffusion.square(c);
        worst = worst.max((drift * g[j] - d * dg).abs());
    }
    Ok(worst)
}

/// Target summary used by [`fit_target`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TargetStats {
    pub mean: f64,
    pub variance: f64,
    /// Smallest sample, or the left edge of the first populated cell.
    pub min: f64,
    /// Standard error of the mean, used to judge "zero mean".
    pub mean_error: f64,
}

impl TargetStats {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::EmptySample("target samples"));
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let variance = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Ok(TargetStats {
            mean,
            variance,
            min: samples.iter().copied().fold(f64::INFINITY, f64::min),
            mean_error: (variance / n).sqrt(),
        })
    }

    pub fn from_field(f: &DensityField) -> Result<Self> {
        if f.grid.dim() != 1 {
            return Err(Error::Unsupported("fitting is 1D".into()));
        }
        let x = f.grid.x();
        let mass = f.mass();
        if !(mass > 0.0) {
            return Err(Error::invalid("target", "zero mass"));
        }
        let m1 = crate::meanfield::field_moment(f, 1) / mass;
        let m2 = crate::meanfield::field_moment(f, 2) / mass;
        let first = f.values.iter().position(|v| *v > 0.0).unwrap_or(0);
        Ok(TargetStats {
            mean: m1,
            variance: m2 - m1 * m1,
            min: x.edge(first),
            mean_error: x.width(),
        })
    }
}

/// Noise variance used for the Pareto fit, which does not constrain `ν²`.
pub const PARETO_FIT_NU2: f64 = 1.0;

/// Moment-matching fit of a steady-state family with `w∞ = −1`.
pub fn fit_target(target: &TargetStats, family: SteadyFamily) -> Result<SteadyStateModel> {
    let w = -1.0;
    match family {
        SteadyFamily::Gaussian => {
            let tol = (3.0 * target.mean_error).max(1e-2 * target.variance.sqrt());
            if target.mean.abs() > tol {
                return Err(Error::Infeasible(format!(
                    "Gaussian family needs a zero-mean target under b∞ = 0, target mean is {}",
                    target.mean
                )));
            }
            SteadyStateModel::gaussian(w, 0.0, 2.0 * target.variance * -w)
        }
        SteadyFamily::Pareto => {
            if !(target.min > 0.0) {
                return Err(Error::Infeasible(format!(
                    "Pareto family needs a positive support edge, got {}",
                    target.min
                )));
            }
            SteadyStateModel::pareto(w, target.min, PARETO_FIT_NU2)
        }
        SteadyFamily::InverseGamma => {
            if !(target.min > 0.0 && target.mean > 0.0 && target.variance > 0.0) {
                return Err(Error::Infeasible("inverse-Gamma family needs a positive target".into()));
            }
            // mean = β/(μ−1), variance = mean²/(μ−2)
            let mu = 2.0 + target.mean * target.mean / target.variance;
            let beta = target.mean * (mu - 1.0);
            let nu2 = -2.0 * w / (mu - 1.0);
            SteadyStateModel::inverse_gamma(w, beta * nu2 / 2.0, nu2)
        }
        SteadyFamily::GeneralizedGamma => Err(Error::Unsupported(
            "fitting the generalized-Gamma family is not supported".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_constant() {
        let m = SteadyStateModel::gaussian(-1.0, 0.0, 2.0).unwrap();
        assert!((m.normalization - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-15);
        assert!((m.pdf(0.0) - 0.398_942_28).abs() < 1e-8);
        // nonzero bias shifts the mean to −b/w
        let s = SteadyStateModel::gaussian(-2.0, 1.0, 1.0).unwrap();
        assert!((s.total_mass() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn inverse_gamma_example() {
        let m = SteadyStateModel::inverse_gamma(-1.0, 0.5, 1.0).unwrap();
        assert!((m.normalization - 0.5).abs() < 1e-12);
        let x = 1.7f64;
        assert!((m.pdf(x) - 0.5 * x.powi(-4) * (-1.0 / x).exp()).abs() < 1e-14);
        assert_eq!(m.pdf(-1.0), 0.0);
    }

    #[test]
    fn pareto_example() {
        let m = SteadyStateModel::pareto(-1.0, 2.0, 1.0).unwrap();
        assert_eq!(m.pdf(1.99), 0.0);
        assert!((m.pdf(4.0) - 2.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn preconditions_are_named() {
        assert!(matches!(SteadyStateModel::gaussian(1.0, 0.0, 2.0), Err(Error::Precondition(s)) if s.contains("w∞ < 0")));
        assert!(matches!(SteadyStateModel::inverse_gamma(-1.0, -1.0, 2.0), Err(Error::Precondition(s)) if s.contains("b∞ > 0")));
    }

    #[test]
    fn residuals() {
        let g = SteadyStateModel::gaussian(-1.0, 0.0, 2.0).unwrap();
        let grid = Grid::line(-6.0, 6.0, 400).unwrap();
        assert!(verify_steady_state(&g, &grid).unwrap() < 1e-3);
        let p = SteadyStateModel::pareto(-1.0, 2.0, 1.0).unwrap();
        assert!(verify_steady_state(&p, &Grid::line(2.1, 50.0, 400).unwrap()).unwrap() < 1e-3);
        let ig = SteadyStateModel::inverse_gamma(-1.0, 0.5, 1.0).unwrap();
        assert!(verify_steady_state(&ig, &Grid::line(0.05, 10.0, 2000).unwrap()).unwrap() < 1e-3);
        // a wrong constant leaves the flux null but breaks the mass check
        let wrong = g.with_scaled_constant(2.0);
        assert!(verify_steady_state(&wrong, &grid).unwrap() < 1e-3);
        assert!(wrong.check_normalization().is_err());
    }

    #[test]
    fn generalized_gamma_numeric() {
        let m = SteadyStateModel::generalized_gamma(1.0, 0.0, 4.0, 0.5, 1.0, [0.2, 6.0]).unwrap();
        assert!((m.total_mass() - 1.0).abs() < 1e-8);
        assert!(verify_steady_state(&m, &Grid::line(0.2, 6.0, 400).unwrap()).unwrap() < 1e-2);
    }

    #[test]
    fn fits() {
        let t = TargetStats { mean: 0.0, variance: 1.0, min: -5.0, mean_error: 0.01 };
        let m = fit_target(&t, SteadyFamily::Gaussian).unwrap();
        assert_eq!((m.w, m.b, m.nu2, m.diffusion), (-1.0, 0.0, 2.0, DiffusionFn::One));
        let t = TargetStats { mean: 3.0, variance: 1.0, min: -1.0, mean_error: 0.01 };
        assert!(matches!(fit_target(&t, SteadyFamily::Gaussian), Err(Error::Infeasible(_))));
        let t = TargetStats { mean: f64::INFINITY, variance: f64::INFINITY, min: 2.0, mean_error: 0.0 };
        let m = fit_target(&t, SteadyFamily::Pareto).unwrap();
        assert_eq!((m.w, m.b), (-1.0, 2.0));
        // inverse Gamma with shape 3, rate 1: mean 1/2, variance 1/4
        let t = TargetStats { mean: 0.5, variance: 0.25, min: 0.01, mean_error: 0.0 };
        let m = fit_target(&t, SteadyFamily::InverseGamma).unwrap();
        assert!((m.nu2 - 1.0).abs() < 1e-12 && (m.b - 0.5).abs() < 1e-12);
    }

    #[test]
    fn heat_equation_variance() {
        let grid = Grid::line(-8.0, 8.0, 200).unwrap();
        let g0 = crate::profiles::Profile::Gaussian { mean: 0.0, std: 1.0 }
            .field(&grid, BoundaryCondition::ZeroFlux)
            .unwrap();
        let var0 = crate::meanfield::field_moment(&g0, 2);
        let prob = FokkerPlanckProblem::new(g0, NetworkParams::constant_1d(0.0, 0.0), Activation::Identity, DiffusionFn::One, 0.5, 1.0);
        let sol = solve_fp(&prob, &[1.0]).unwrap();
        let var1 = crate::meanfield::field_moment(&sol.snapshots[0], 2);
        assert!((var1 - var0 - 0.5).abs() < 1e-2);
    }
}
