//! Activation functions with exact derivatives and analytic zero sets.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Activation {
    Identity,
    Relu,
    Sigmoid,
    Tanh,
    /// Growing cosine unit, `x cos x`.
    Gcu,
    /// `[(1/delta) (x/c)^delta - 1] x`, defined for `x >= 0`.
    SigmaN { delta: f64, c: f64 },
}

/// Zeros of an activation inside an interval.
#[derive(Clone, Debug, PartialEq)]
pub struct ZeroSet {
    pub points: Vec<f64>,
    /// Set for ReLU: the function vanishes on all of `(-inf, 0]` and
    /// `points` only holds a representative.
    pub vanishes_on_negative_half_line: bool,
}

impl Activation {
    pub fn sigma_n(delta: f64, c: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::invalid("delta", format!("{delta} not in (0, 1)")));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::invalid("c", format!("{c} must be positive")));
        }
        Ok(Activation::SigmaN { delta, c })
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        Ok(match *self {
            Activation::SigmaN { delta, c } => {
                check_sigma_n_domain(self, x)?;
                ((x / c).powf(delta) / delta - 1.0) * x
            }
            _ => self.value(x),
        })
    }

    /// Infallible evaluation for the activations defined on all of R.
    /// `SigmaN` returns NaN for negative input; use [`Activation::eval`]
    /// where that can happen.
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Activation::Identity => x,
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => sigmoid(x),
            Activation::Tanh => x.tanh(),
            Activation::Gcu => x * x.cos(),
            Activation::SigmaN { delta, c } => {
                if x < 0.0 {
                    f64::NAN
                } else {
                    ((x / c).powf(delta) / delta - 1.0) * x
                }
            }
        }
    }

    /// Exact derivative. ReLU uses the convention `σ'(0) = 0`.
    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Activation::Gcu => x.cos() - x * x.sin(),
            Activation::SigmaN { delta, c } => {
                if x < 0.0 {
                    f64::NAN
                } else {
                    (delta + 1.0) / delta * (x / c).powf(delta) - 1.0
                }
            }
        }
    }

    pub fn checked_derivative(&self, x: f64) -> Result<f64> {
        if let Activation::SigmaN { .. } = self {
            check_sigma_n_domain(self, x)?;
        }
        Ok(self.derivative(x))
    }

    /// All zeros in `[lower, upper]`, sorted ascending.
    pub fn zeros(&self, lower: f64, upper: f64) -> Result<ZeroSet> {
        if !(lower.is_finite() && upper.is_finite()) || lower > upper {
            return Err(Error::invalid(
                "interval",
                format!("[{lower}, {upper}] is not a finite interval"),
            ));
        }
        let inside = |z: f64| z >= lower && z <= upper;
        let mut set = ZeroSet {
            points: Vec::new(),
            vanishes_on_negative_half_line: false,
        };
        match *self {
            Activation::Identity | Activation::Tanh => {
                if inside(0.0) {
                    set.points.push(0.0);
                }
            }
            Activation::Sigmoid => {}
            Activation::Relu => {
                if lower <= 0.0 {
                    set.points.push(upper.min(0.0));
                    set.vanishes_on_negative_half_line = true;
                }
            }
            Activation::Gcu => {
                // x cos x = 0  <=>  x = 0 or x = π/2 + kπ
                let k_lo = ((lower - FRAC_PI_2) / PI).ceil() as i64;
                let k_hi = ((upper - FRAC_PI_2) / PI).floor() as i64;
                for k in k_lo..=k_hi {
                    set.points.push(FRAC_PI_2 + k as f64 * PI);
                }
                if inside(0.0) {
                    set.points.push(0.0);
                }
                set.points.sort_by(f64::total_cmp);
            }
            Activation::SigmaN { delta, c } => {
                for z in [0.0, c * delta.powf(1.0 / delta)] {
                    if inside(z) {
                        set.points.push(z);
                    }
                }
            }
        }
        Ok(set)
    }

    pub fn is_differentiable(&self) -> bool {
        !matches!(self, Activation::Relu)
    }

    pub fn key(&self) -> String {
        self.to_string()
    }
}

fn check_sigma_n_domain(act: &Activation, x: f64) -> Result<()> {
    if x < 0.0 {
        return Err(Error::Domain {
            activation: act.to_string(),
            x,
            reason: "sigma_n is only defined on the non-negative half-line",
        });
    }
    Ok(())
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Activation::Identity => f.write_str("identity"),
            Activation::Relu => f.write_str("relu"),
            Activation::Sigmoid => f.write_str("sigmoid"),
            Activation::Tanh => f.write_str("tanh"),
            Activation::Gcu => f.write_str("gcu"),
            Activation::SigmaN { delta, c } => write!(f, "sigma_n({delta},{c})"),
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        match key.as_str() {
            "identity" => return Ok(Activation::Identity),
            "relu" => return Ok(Activation::Relu),
            "sigmoid" => return Ok(Activation::Sigmoid),
            "tanh" => return Ok(Activation::Tanh),
            "gcu" => return Ok(Activation::Gcu),
            _ => {}
        }
        let bad = || Error::invalid("activation", format!("unknown activation key `{s}`"));
        let args = key
            .strip_prefix("sigma_n(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(bad)?;
        let (d, c) = args.split_once(',').ok_or_else(bad)?;
        let delta: f64 = d.trim().parse().map_err(|_| bad())?;
        let c: f64 = c.trim().parse().map_err(|_| bad())?;
        Activation::sigma_n(delta, c)
    }
}

impl TryFrom<String> for Activation {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Activation> for String {
    fn from(a: Activation) -> String {
        a.to_string()
    }
}
