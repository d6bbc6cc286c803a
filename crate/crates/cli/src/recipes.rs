//! Experiment configs shipped with the binary.

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

pub struct Recipe {
    pub name: &'static str,
    pub toml: &'static str,
}

macro_rules! recipe {
    ($name:literal) => {
        Recipe {
            name: $name,
            toml: include_str!(concat!("../recipes/", $name, ".toml")),
        }
    };
}

pub const RECIPES: &[Recipe] = &[
    recipe!("moments_fig1_left"),
    recipe!("moments_fig1_right"),
    recipe!("thresholds_fig2"),
    recipe!("classification_fig3_fig4"),
    recipe!("regression_fig5_fig6"),
    recipe!("retrain_fig7"),
    recipe!("fokker_planck_fig8"),
    recipe!("grazing_study"),
];

pub fn find(name: &str) -> Option<&'static Recipe> {
    RECIPES.iter().find(|r| r.name == name)
}

impl Recipe {
    /// Parsed and validated config.
    pub fn config(&self) -> CliResult<ExperimentConfig> {
        let mut cfg = ExperimentConfig::from_toml(self.toml, self.name)?;
        cfg.resolve(None);
        cfg.check()?;
        Ok(cfg)
    }
}

/// Loads a config from a path, or from a shipped recipe of that name.
pub fn load(arg: &str) -> CliResult<ExperimentConfig> {
    let path = std::path::Path::new(arg);
    if path.exists() {
        return ExperimentConfig::load(path);
    }
    match find(arg) {
        Some(r) => r.config(),
        None if arg.ends_with(".toml") || arg.contains(std::path::MAIN_SEPARATOR) => Err(CliError::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
        )),
        None => Err(CliError::UnknownRecipe(arg.to_string())),
    }
}
