pub mod activations;
pub mod error;
pub mod exec;
pub mod numerics;
pub mod params;
pub mod particles;
pub mod moments;
pub mod profiles;
pub mod meanfield;
pub mod fokkerplanck;
pub mod boltzmann;
pub mod adjoint;

pub use activations::Activation;
pub use error::{Error, Result};
pub use exec::Execution;
