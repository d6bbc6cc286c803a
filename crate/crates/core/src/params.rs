//! Weight and bias trajectories of the continuous network.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Affine map `x ↦ w x + b` in one or two dimensions. Only the leading
/// `dim × dim` block of `w` and the first `dim` entries of `b` are used.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub w: [[f64; 2]; 2],
    pub b: [f64; 2],
}

impl Affine {
    pub fn scalar(w: f64, b: f64) -> Self {
        Affine {
            w: [[w, 0.0], [0.0, 0.0]],
            b: [b, 0.0],
        }
    }

    pub fn planar(w: [[f64; 2]; 2], b: [f64; 2]) -> Self {
        Affine { w, b }
    }

    #[inline]
    pub fn apply1(&self, x: f64) -> f64 {
        self.w[0][0] * x + self.b[0]
    }

    #[inline]
    pub fn apply2(&self, x: f64, y: f64) -> [f64; 2] {
        [
            self.w[0][0] * x + self.w[0][1] * y + self.b[0],
            self.w[1][0] * x + self.w[1][1] * y + self.b[1],
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.w.iter().flatten().chain(self.b.iter()).all(|v| v.is_finite())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = *self;
        out.w.iter_mut().flatten().for_each(|v| *v *= factor);
        out.b.iter_mut().for_each(|v| *v *= factor);
        out
    }
}

/// How the bias is obtained at time `t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BiasLaw {
    /// The bias stored in the schedule.
    #[default]
    Fixed,
    /// `b(t) = -w(t) m₁(t)`, which keeps the first moment constant.
    MeanPreserving,
}

/// Piecewise-constant schedule. Segment `i` is active on
/// `[breaks[i-1], breaks[i])`; the last segment extends to infinity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    breaks: Vec<f64>,
    layers: Vec<Affine>,
}

impl Schedule {
    pub fn constant(layer: Affine) -> Self {
        Schedule {
            breaks: Vec::new(),
            layers: vec![layer],
        }
    }

    /// `segments` holds `(end_time, layer)`; the last end time is ignored
    /// and the final layer persists forever.
    pub fn piecewise(segments: Vec<(f64, Affine)>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::invalid("schedule", "needs at least one segment"));
        }
        let n = segments.len();
        let mut breaks = Vec::with_capacity(n - 1);
        let mut layers = Vec::with_capacity(n);
        let mut last = 0.0;
        for (i, (end, layer)) in segments.into_iter().enumerate() {
            if !layer.is_finite() {
                return Err(Error::invalid("schedule", format!("segment {i} is not finite")));
            }
            if i + 1 < n {
                if !(end > last) || !end.is_finite() {
                    return Err(Error::invalid(
                        "schedule",
                        format!("segment end times must increase (segment {i} ends at {end})"),
                    ));
                }
                breaks.push(end);
                last = end;
            }
            layers.push(layer);
        }
        Ok(Schedule { breaks, layers })
    }

    pub fn at(&self, t: f64) -> Affine {
        let idx = self.breaks.partition_point(|&b| b <= t);
        self.layers[idx]
    }

    pub fn is_constant(&self) -> bool {
        self.layers.len() == 1
    }

    pub fn final_layer(&self) -> Affine {
        *self.layers.last().expect("schedule is never empty")
    }

    /// `(start, end, layer)` for every segment intersecting `[0, t]`.
    pub fn segments_until(&self, t: f64) -> Vec<(f64, f64, Affine)> {
        let mut out = Vec::new();
        let mut start = 0.0;
        for (i, layer) in self.layers.iter().enumerate() {
            let end = self.breaks.get(i).copied().unwrap_or(f64::INFINITY).min(t);
            if end > start {
                out.push((start, end, *layer));
            }
            start = end;
            if start >= t {
                break;
            }
        }
        out
    }

    pub fn layers(&self) -> &[Affine] {
        &self.layers
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub dim: usize,
    pub schedule: Schedule,
    pub bias_law: BiasLaw,
}

impl NetworkParams {
    pub fn constant_1d(w: f64, b: f64) -> Self {
        NetworkParams {
            dim: 1,
            schedule: Schedule::constant(Affine::scalar(w, b)),
            bias_law: BiasLaw::Fixed,
        }
    }

    pub fn constant_2d(w: [[f64; 2]; 2], b: [f64; 2]) -> Self {
        NetworkParams {
            dim: 2,
            schedule: Schedule::constant(Affine::planar(w, b)),
            bias_law: BiasLaw::Fixed,
        }
    }

    /// 1D network whose bias keeps the mean fixed: `b(t) = -w m₁(t)`.
    pub fn mean_preserving_1d(w: f64) -> Self {
        NetworkParams {
            dim: 1,
            schedule: Schedule::constant(Affine::scalar(w, 0.0)),
            bias_law: BiasLaw::MeanPreserving,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.dim) {
            return Err(Error::invalid("dim", format!("{} not in {{1, 2}}", self.dim)));
        }
        if self.schedule.layers().iter().any(|l| !l.is_finite()) {
            return Err(Error::invalid("params", "non-finite weight or bias"));
        }
        Ok(())
    }

    /// The affine map in effect at time `t`, given the current mean of the
    /// state (only read under [`BiasLaw::MeanPreserving`]).
    pub fn resolve(&self, t: f64, mean: [f64; 2]) -> Affine {
        let mut layer = self.schedule.at(t);
        if self.bias_law == BiasLaw::MeanPreserving {
            let [x, y] = mean;
            layer.b = [
                -(layer.w[0][0] * x + layer.w[0][1] * y),
                -(layer.w[1][0] * x + layer.w[1][1] * y),
            ];
        }
        layer
    }

    pub fn needs_mean(&self) -> bool {
        self.bias_law == BiasLaw::MeanPreserving
    }

    /// Constant scalar `(w, b)`, if this is a 1D network with a fixed
    /// constant schedule.
    pub fn as_constant_scalar(&self) -> Option<(f64, f64)> {
        if self.dim == 1 && self.schedule.is_constant() && self.bias_law == BiasLaw::Fixed {
            let l = self.schedule.final_layer();
            Some((l.w[0][0], l.b[0]))
        } else {
            None
        }
    }
}
