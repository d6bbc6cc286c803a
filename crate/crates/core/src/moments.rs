//! Closed-form moment dynamics of the 1D mean-field equation with the
//! identity activation, the clustering/aggregation taxonomy and threshold
//! times.
//!
//! With `σ(x) = x` every characteristic is affine in its starting point on
//! a segment of constant `(w, b)`: `x(t) = a x₀ + c` with `a = e^{w t}` and
//! `c = (b/w)(e^{w t} − 1)`. Pushing the initial moments through the
//! composed map gives the exact solution of the moment hierarchy.

use crate::activations::Activation;
use crate::error::{Error, Result};
use crate::params::{Affine, BiasLaw, NetworkParams, Schedule};

/// Highest moment tracked unless asked otherwise.
pub const DEFAULT_MAX_ORDER: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct MomentState {
    pub time: f64,
    /// `m₀ ..= m_K`.
    pub moments: Vec<f64>,
}

impl MomentState {
    pub fn variance(&self) -> f64 {
        self.moments[2] - self.moments[1] * self.moments[1]
    }
}

/// `d/dt m_k = k (w m_k + b m_{k-1})`.
pub fn moment_ode_rhs(k: usize, w: f64, b: f64, m_k: f64, m_km1: f64) -> f64 {
    k as f64 * (w * m_k + b * m_km1)
}

/// `Φ_k(t) = k ∫₀ᵗ w(s) ds` for a piecewise-constant weight schedule,
/// integrated exactly segment by segment.
#[derive(Clone, Debug)]
pub struct PhiIntegral {
    schedule: Schedule,
}

impl PhiIntegral {
    pub fn new(params: &NetworkParams) -> Self {
        PhiIntegral {
            schedule: params.schedule.clone(),
        }
    }

    pub fn constant(w: f64) -> Self {
        PhiIntegral {
            schedule: Schedule::constant(Affine::scalar(w, 0.0)),
        }
    }

    pub fn eval(&self, k: usize, t: f64) -> f64 {
        let one: f64 = self
            .schedule
            .segments_until(t)
            .iter()
            .map(|(s, e, l)| l.w[0][0] * (e - s))
            .sum();
        k as f64 * one
    }
}

/// Affine characteristic map `x ↦ a x + c` of one constant segment.
fn segment_map(w: f64, b: f64, dt: f64) -> (f64, f64) {
    let a = (w * dt).exp();
    let c = if w.abs() * dt < 1e-8 {
        // series of (e^{w dt} − 1)/w, avoids cancellation
        b * dt * (1.0 + 0.5 * w * dt)
    } else {
        b / w * (a - 1.0)
    };
    (a, c)
}

fn check_scalar(params: &NetworkParams) -> Result<()> {
    if params.dim != 1 {
        return Err(Error::Unsupported("moment dynamics are 1D only".into()));
    }
    Ok(())
}

/// Composed characteristic map from `0` to `t`.
fn characteristic_map(params: &NetworkParams, t: f64, m1_initial: f64) -> (f64, f64) {
    let mut a = 1.0;
    let mut c = 0.0;
    for (s, e, l) in params.schedule.segments_until(t) {
        let w = l.w[0][0];
        let b = match params.bias_law {
            BiasLaw::Fixed => l.b[0],
            // the mean is conserved, so the bias is frozen at −w m₁(0)
            BiasLaw::MeanPreserving => -w * m1_initial,
        };
        let (sa, sc) = segment_map(w, b, e - s);
        a *= sa;
        c = sa * c + sc;
    }
    (a, c)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Exact moments `m₀ ..= m_K` at time `t` (with `K + 1 = initial.len()`).
pub fn moments_at(params: &NetworkParams, t: f64, initial: &[f64]) -> Result<Vec<f64>> {
    check_scalar(params)?;
    if initial.is_empty() {
        return Err(Error::EmptySample("initial moments"));
    }
    if params.needs_mean() && initial.len() < 2 {
        return Err(Error::Precondition("mean-preserving bias needs m₁(0)".into()));
    }
    let m1 = initial.get(1).copied().unwrap_or(0.0);
    let (a, c) = characteristic_map(params, t, m1);
    Ok((0..initial.len())
        .map(|k| {
            (0..=k)
                .map(|j| binomial(k, j) * a.powi(j as i32) * c.powi((k - j) as i32) * initial[j])
                .sum()
        })
        .collect())
}

/// `m_k(t)` from the separation-of-variables formula, evaluated exactly
/// for piecewise-constant `(w, b)`.
pub fn moment_closed_solution(k: usize, t: f64, params: &NetworkParams, initial: &[f64]) -> Result<f64> {
    if k >= initial.len() {
        return Err(Error::Precondition(format!(
            "m_{k} needs initial moments up to order {k}, got {}",
            initial.len().saturating_sub(1)
        )));
    }
    Ok(moments_at(params, t, &initial[..=k.max(1).min(initial.len() - 1)])?[k])
}

/// Moment time series at the requested times.
pub fn moment_trajectory(params: &NetworkParams, initial: &[f64], times: &[f64]) -> Result<Vec<MomentState>> {
    times
        .iter()
        .map(|&t| {
            Ok(MomentState {
                time: t,
                moments: moments_at(params, t, initial)?,
            })
        })
        .collect()
}

/// Moments `m₀ ..= m_K` of a normal distribution.
pub fn gaussian_moments(mean: f64, variance: f64, max_order: usize) -> Vec<f64> {
    // m_k = μ m_{k-1} + (k−1) s² m_{k-2}
    let mut m = vec![1.0];
    for k in 1..=max_order {
        let prev2 = if k >= 2 { m[k - 2] } else { 0.0 };
        m.push(mean * m[k - 1] + (k - 1) as f64 * variance * prev2);
    }
    m
}

/// Flags of the clustering/aggregation taxonomy.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct BehaviorFlags {
    pub local_energy_bound: bool,
    pub energy_decay: bool,
    pub local_aggregation: bool,
    pub aggregation: bool,
    pub clustering: bool,
    /// Location of the limiting Dirac delta when clustering.
    pub delta_location: Option<f64>,
}

/// Evaluates the taxonomy from the closed solutions. Local flags compare
/// time 0 with the fixed time `t1`; energy decay and aggregation require
/// the analytic criterion (`w < 0` on every segment, positive initial
/// variance) and are cross-checked on `t1 < t2`. Clustering uses
/// `lim Φ₁ = −∞`, i.e. a negative weight on the final segment.
///
/// Only `b ≡ 0` and the mean-preserving bias are supported.
pub fn classify_behavior(params: &NetworkParams, initial: &[f64], t1: f64, t2: f64) -> Result<BehaviorFlags> {
    check_scalar(params)?;
    if !(t1 < t2) || t1 < 0.0 {
        return Err(Error::Precondition(format!("need 0 <= t1 < t2, got {t1}, {t2}")));
    }
    if initial.len() < 3 {
        return Err(Error::Precondition("classification needs m₀, m₁, m₂".into()));
    }
    let zero_bias = params.bias_law == BiasLaw::Fixed && params.schedule.layers().iter().all(|l| l.b[0] == 0.0);
    if !zero_bias && params.bias_law != BiasLaw::MeanPreserving {
        return Err(Error::Unsupported(
            "classification covers b ≡ 0 and the mean-preserving bias only".into(),
        ));
    }
    let m = &initial[..3];
    let state = |t: f64| -> Result<MomentState> {
        Ok(MomentState {
            time: t,
            moments: moments_at(params, t, m)?,
        })
    };
    let (s0, s1, s2) = (state(0.0)?, state(t1)?, state(t2)?);
    let v0 = s0.variance();
    let all_negative = params.schedule.layers().iter().all(|l| l.w[0][0] < 0.0);
    let decay = all_negative && v0 > 0.0;
    let clustering = params.schedule.final_layer().w[0][0] < 0.0;
    Ok(BehaviorFlags {
        local_energy_bound: s0.moments[2] > s1.moments[2],
        energy_decay: decay && s1.moments[2] > s2.moments[2],
        local_aggregation: v0 > s1.variance(),
        aggregation: decay && s1.variance() > s2.variance(),
        clustering,
        delta_location: clustering.then(|| if zero_bias { 0.0 } else { m[1] }),
    })
}

/// Which bound of the threshold-time corollary to invert.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThresholdCase {
    /// `b ≡ 0`, second moment below `V`.
    ZeroBiasEnergy,
    /// `b ≡ 0`, variance below `V`.
    ZeroBiasVariance,
    /// Mean-preserving bias, second moment below `V` (needs `V > m₁(0)²`).
    MeanPreservingEnergy,
    /// Mean-preserving bias, variance below `V`.
    MeanPreservingVariance,
}

/// Smallest `t ≥ 0` with `Φ₂(t) = 2 w t` below the bound of the chosen
/// case, for constant `w < 0`. Returns 0 when the level already holds.
pub fn threshold_time(level: f64, w: f64, case: ThresholdCase, initial: &[f64]) -> Result<f64> {
    if !(w < 0.0) {
        return Err(Error::Precondition(format!("threshold times need w < 0, got {w}")));
    }
    if !(level > 0.0) {
        return Err(Error::Precondition(format!("level V = {level} must be positive")));
    }
    if initial.len() < 3 {
        return Err(Error::Precondition("threshold times need m₀, m₁, m₂".into()));
    }
    let (m1, m2) = (initial[1], initial[2]);
    let v0 = m2 - m1 * m1;
    let ratio = match case {
        ThresholdCase::ZeroBiasEnergy => level / m2,
        ThresholdCase::ZeroBiasVariance | ThresholdCase::MeanPreservingVariance => level / v0,
        ThresholdCase::MeanPreservingEnergy => {
            if !(level > m1 * m1) {
                return Err(Error::Precondition(format!(
                    "energy bound with mean-preserving bias requires V > m₁(0)² = {}",
                    m1 * m1
                )));
            }
            (level - m1 * m1) / v0
        }
    };
    if !(ratio > 0.0) {
        return Err(Error::Precondition(format!("non-positive ratio {ratio} in the bound")));
    }
    Ok((ratio.ln() / (2.0 * w)).max(0.0))
}

/// Affine surrogate `σ(x) ≈ intercept + slope x` used to reuse the moment
/// machinery for smooth activations near the origin.
pub fn linearized_activation(act: &Activation) -> Result<(f64, f64)> {
    match act {
        Activation::Identity | Activation::Tanh => Ok((1.0, 0.0)),
        Activation::Sigmoid => Ok((0.25, 0.5)),
        other => Err(Error::Unsupported(format!("no linear surrogate for {other}"))),
    }
}

/// Network parameters with the surrogate folded in:
/// `w ← slope·w`, `b ← slope·b + intercept`.
pub fn linearize_params(params: &NetworkParams, act: &Activation) -> Result<NetworkParams> {
    let (slope, intercept) = linearized_activation(act)?;
    if params.bias_law != BiasLaw::Fixed {
        return Err(Error::Unsupported("linearization with a mean-preserving bias".into()));
    }
    let ends: Vec<f64> = params.schedule.breaks().iter().copied().chain([f64::INFINITY]).collect();
    let segments = params
        .schedule
        .layers()
        .iter()
        .zip(ends)
        .map(|(l, end)| (end, Affine::scalar(slope * l.w[0][0], slope * l.b[0] + intercept)))
        .collect();
    Ok(NetworkParams {
        dim: 1,
        schedule: Schedule::piecewise(segments)?,
        bias_law: BiasLaw::Fixed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const N11: [f64; 5] = [1.0, 1.0, 2.0, 4.0, 10.0];

    #[test]
    fn rhs_examples() {
        assert_eq!(moment_ode_rhs(1, -1.0, 0.0, 1.0, 1.0), -1.0);
        assert_eq!(moment_ode_rhs(2, -1.0, 0.0, 2.0, 1.0), -4.0);
        assert_eq!(moment_ode_rhs(1, -1.0, 0.5, 1.0, 1.0), -0.5);
    }

    #[test]
    fn gaussian_moment_table() {
        assert_eq!(gaussian_moments(1.0, 1.0, 4), N11.to_vec());
    }

    #[test]
    fn closed_solution_examples() {
        let p = NetworkParams::constant_1d(-1.0, 0.0);
        assert!((moment_closed_solution(1, 1.0, &p, &[1.0, 1.0]).unwrap() - (-1f64).exp()).abs() < 1e-15);
        assert!((moment_closed_solution(2, 1.0, &p, &[1.0, 1.0, 2.0]).unwrap() - 2.0 * (-2f64).exp()).abs() < 1e-15);
        let mp = NetworkParams::mean_preserving_1d(-1.0);
        for t in [0.0, 0.5, 3.0, 10.0] {
            assert!((moment_closed_solution(1, t, &mp, &N11).unwrap() - 1.0).abs() < 1e-14);
        }
        // m₂ = e^{Φ₂} V(0) + m₁(0)²
        let m2 = moment_closed_solution(2, 3.0, &mp, &N11).unwrap();
        assert!((m2 - ((-6f64).exp() + 1.0)).abs() < 1e-14);
    }

    #[test]
    fn matches_integrated_ode_with_bias() {
        // RK4 on the hierarchy as an independent oracle
        let (w, b) = (0.7, -1.3);
        let p = NetworkParams::constant_1d(w, b);
        let mut m = N11.to_vec();
        let h = 1e-4;
        let rhs = |m: &[f64]| -> Vec<f64> {
            (0..m.len())
                .map(|k| if k == 0 { 0.0 } else { moment_ode_rhs(k, w, b, m[k], m[k - 1]) })
                .collect()
        };
        for _ in 0..10_000 {
            let k1 = rhs(&m);
            let a: Vec<f64> = m.iter().zip(&k1).map(|(x, k)| x + 0.5 * h * k).collect();
            let k2 = rhs(&a);
            let a: Vec<f64> = m.iter().zip(&k2).map(|(x, k)| x + 0.5 * h * k).collect();
            let k3 = rhs(&a);
            let a: Vec<f64> = m.iter().zip(&k3).map(|(x, k)| x + h * k).collect();
            let k4 = rhs(&a);
            for i in 0..m.len() {
                m[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        let exact = moments_at(&p, 1.0, &N11).unwrap();
        for (a, e) in m.iter().zip(&exact) {
            assert!((a - e).abs() < 1e-9 * e.abs().max(1.0), "{a} vs {e}");
        }
    }

    #[test]
    fn piecewise_schedule_composes() {
        let p = NetworkParams {
            dim: 1,
            schedule: Schedule::piecewise(vec![(1.0, Affine::scalar(-1.0, 0.5)), (0.0, Affine::scalar(0.5, -0.2))]).unwrap(),
            bias_law: BiasLaw::Fixed,
        };
        let mid = moments_at(&p, 1.0, &N11).unwrap();
        let q = NetworkParams::constant_1d(0.5, -0.2);
        let direct = moments_at(&q, 1.5, &mid).unwrap();
        let composed = moments_at(&p, 2.5, &N11).unwrap();
        for (a, b) in direct.iter().zip(&composed) {
            assert!((a - b).abs() < 1e-12);
        }
        let phi = PhiIntegral::new(&p);
        assert!((phi.eval(1, 2.5) - (-1.0 + 0.75)).abs() < 1e-15);
        assert_eq!(phi.eval(3, 0.0), 0.0);
    }

    #[test]
    fn classification_examples() {
        let f = classify_behavior(&NetworkParams::constant_1d(-1.0, 0.0), &N11, 1.0, 2.0).unwrap();
        assert!(f.local_energy_bound && f.energy_decay && f.local_aggregation && f.aggregation && f.clustering);
        assert_eq!(f.delta_location, Some(0.0));
        let f = classify_behavior(&NetworkParams::mean_preserving_1d(-1.0), &N11, 1.0, 2.0).unwrap();
        assert!(f.clustering);
        assert_eq!(f.delta_location, Some(1.0));
        let f = classify_behavior(&NetworkParams::constant_1d(1.0, 0.0), &N11, 1.0, 2.0).unwrap();
        assert_eq!(f, BehaviorFlags::default());
        assert!(matches!(
            classify_behavior(&NetworkParams::constant_1d(-1.0, 0.3), &N11, 1.0, 2.0),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn threshold_examples() {
        let m = [1.0, 0.0, 1.0];
        let t = threshold_time(0.01, -1.0, ThresholdCase::ZeroBiasVariance, &m).unwrap();
        assert!((t - 2.302585).abs() < 1e-6);
        assert_eq!(threshold_time(1.0, -1.0, ThresholdCase::ZeroBiasEnergy, &m).unwrap(), 0.0);
        let err = threshold_time(0.5, -1.0, ThresholdCase::MeanPreservingEnergy, &[1.0, 1.0, 2.0]).unwrap_err();
        assert!(matches!(err, Error::Precondition(ref s) if s.contains("V > m₁(0)²")));
        assert!(threshold_time(0.5, 1.0, ThresholdCase::ZeroBiasEnergy, &m).is_err());
    }

    #[test]
    fn threshold_inverts_closed_variance() {
        let p = NetworkParams::constant_1d(-0.8, 0.0);
        let t = threshold_time(0.05, -0.8, ThresholdCase::ZeroBiasVariance, &N11).unwrap();
        let s = MomentState { time: t, moments: moments_at(&p, t, &N11).unwrap() };
        assert!((s.variance() - 0.05).abs() < 1e-9);
    }

    #[test]
    fn surrogates() {
        assert_eq!(linearized_activation(&Activation::Tanh).unwrap(), (1.0, 0.0));
        assert_eq!(linearized_activation(&Activation::Sigmoid).unwrap(), (0.25, 0.5));
        assert_eq!(linearized_activation(&Activation::Identity).unwrap(), (1.0, 0.0));
        assert!(linearized_activation(&Activation::Relu).is_err());
        let p = linearize_params(&NetworkParams::constant_1d(2.0, 1.0), &Activation::Sigmoid).unwrap();
        assert_eq!(p.as_constant_scalar(), Some((0.5, 0.75)));
    }
}
