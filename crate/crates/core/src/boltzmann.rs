//! Monte Carlo for the linear Boltzmann-type model with noisy interactions
//! and a numerical check of its grazing (Fokker-Planck) limit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::activations::Activation;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fokkerplanck::{solve_fp, FokkerPlanckProblem};
use crate::meanfield::{solve_meanfield, MeanFieldProblem};
use crate::numerics::{BoundaryCondition, Grid};
use crate::particles::{step_stochastic, wasserstein1_to_field, NoiseSource, ParticleEnsemble};
use crate::params::NetworkParams;
use crate::profiles::Profile;

/// Diffusion function `K` of the noisy rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DiffusionFn {
    /// `K(x) = 1`.
    #[default]
    One,
    /// `K(x) = x`.
    Linear,
}

impl DiffusionFn {
    #[inline]
    pub fn value(self, x: f64) -> f64 {
        match self {
            DiffusionFn::One => 1.0,
            DiffusionFn::Linear => x,
        }
    }

    /// `K²(x)`.
    #[inline]
    pub fn square(self, x: f64) -> f64 {
        let k = self.value(x);
        k * k
    }

    /// `(K²)'(x)`.
    #[inline]
    pub fn square_derivative(self, x: f64) -> f64 {
        match self {
            DiffusionFn::One => 0.0,
            DiffusionFn::Linear => 2.0 * x,
        }
    }
}

/// Default safety box for Monte Carlo runs.
pub const SAFETY_BOX: (f64, f64) = (-50.0, 50.0);

/// Kinetic parameters; the interaction rate is fixed to 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KineticConfig {
    pub eps: f64,
    /// Noise standard deviation `ν`.
    pub nu: f64,
    pub diffusion: DiffusionFn,
    pub safety_box: (f64, f64),
}

impl KineticConfig {
    pub fn new(eps: f64, nu: f64, diffusion: DiffusionFn) -> Self {
        KineticConfig {
            eps,
            nu,
            diffusion,
            safety_box: SAFETY_BOX,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(Error::invalid("eps", format!("{} not in (0, 1]", self.eps)));
        }
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return Err(Error::invalid("nu", format!("{} must be non-negative", self.nu)));
        }
        if !(self.safety_box.0 < self.safety_box.1) {
            return Err(Error::invalid("safety_box", "lower bound must be below upper bound"));
        }
        Ok(())
    }
}

/// Number of interaction rounds covering the scaled time.
pub fn rounds_for(scaled_final_time: f64, eps: f64) -> u64 {
    ((scaled_final_time / eps) * (1.0 - 1e-12)).ceil().max(1.0) as u64
}

/// Applies `⌈T/ε⌉` interaction rounds; every particle interacts once per
/// round. Output depends only on the seed, not on the thread count.
#[allow(clippy::too_many_arguments)]
pub fn mc_evolve(
    e: &ParticleEnsemble,
    p: &NetworkParams,
    act: &Activation,
    kc: &KineticConfig,
    scaled_final_time: f64,
    seed: u64,
    exec: Execution,
) -> Result<ParticleEnsemble> {
    kc.validate()?;
    if e.dim() != 1 {
        return Err(Error::Unsupported("Monte Carlo is 1D".into()));
    }
    if !(scaled_final_time > 0.0 && scaled_final_time.is_finite()) {
        return Err(Error::invalid("scaled_final_time", format!("{scaled_final_time} must be positive")));
    }
    let noise = NoiseSource::new(seed);
    let (lo, hi) = kc.safety_box;
    let mut cur = e.clone();
    for round in 0..rounds_for(scaled_final_time, kc.eps) {
        cur = step_stochastic(&cur, p, act, kc.eps, kc.nu, kc.diffusion, &noise, round, exec)?;
        let escaped = cur.states().iter().filter(|x| !(lo..=hi).contains(*x)).count();
        if escaped > 0 {
            return Err(Error::Escaped {
                count: escaped,
                lower: lo,
                upper: hi,
            });
        }
    }
    Ok(cur)
}

/// `2/√M`, the Monte Carlo resolution of a W₁ estimate.
pub fn noise_floor(m: usize) -> f64 {
    2.0 / (m as f64).sqrt()
}

/// Everything except `ε` needed for a grazing-limit comparison.
#[derive(Clone, Debug)]
pub struct GrazingSetup {
    pub initial: Profile,
    pub params: NetworkParams,
    pub activation: Activation,
    pub diffusion: DiffusionFn,
    pub nu2: f64,
    pub scaled_time: f64,
    /// Grid for the deterministic reference solve.
    pub grid: Grid,
    pub exec: Execution,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrazingRow {
    pub eps: f64,
    pub w1: f64,
    pub particles: usize,
    pub scaled_time: f64,
    pub noise_floor: f64,
}

/// Stream offset separating initial-sample draws from interaction noise.
const INITIAL_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Initial ensemble drawn from the setup's profile.
pub fn initial_ensemble(setup: &GrazingSetup, m: usize, seed: u64) -> Result<ParticleEnsemble> {
    setup.initial.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ INITIAL_SEED_SALT);
    ParticleEnsemble::from_positions(setup.initial.sample(m, &mut rng))
}

/// W₁ between the Monte Carlo ensemble and the PDE solution at the same
/// scaled time, for each `ε` (which must be descending). With `ν = 0` the
/// reference is the mean-field transport solve.
pub fn grazing_convergence_study(setup: &GrazingSetup, eps_list: &[f64], m: usize, seed: u64) -> Result<Vec<GrazingRow>> {
    if eps_list.is_empty() || eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("eps_list", "must be non-empty and strictly descending"));
    }
    if !(setup.nu2 >= 0.0) {
        return Err(Error::invalid("nu2", "must be non-negative"));
    }
    let g0 = setup.initial.field(&setup.grid, BoundaryCondition::ZeroFlux)?;
    let reference = if setup.nu2 > 0.0 {
        let prob = FokkerPlanckProblem::new(
            g0,
            setup.params.clone(),
            setup.activation,
            setup.diffusion,
            setup.nu2,
            setup.scaled_time,
        );
        solve_fp(&prob, &[setup.scaled_time])?
    } else {
        let prob = MeanFieldProblem::new(g0, setup.params.clone(), setup.activation, setup.scaled_time);
        solve_meanfield(&prob, &[setup.scaled_time])?
    };
    let target = &reference.snapshots[0];
    let start = initial_ensemble(setup, m, seed)?;
    let nu = setup.nu2.sqrt();
    eps_list
        .iter()
        .map(|&eps| {
            let kc = KineticConfig::new(eps, nu, setup.diffusion);
            let end = mc_evolve(&start, &setup.params, &setup.activation, &kc, setup.scaled_time, seed, setup.exec)?;
            Ok(GrazingRow {
                eps,
                w1: wasserstein1_to_field(end.states(), target)?,
                particles: m,
                scaled_time: setup.scaled_time,
                noise_floor: noise_floor(m),
            })
        })
        .collect()
}
