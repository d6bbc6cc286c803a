//! Turning measurement files into densities and regression samples.

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use kresnet_core::numerics::{BoundaryCondition, DensityField, Grid};
use kresnet_core::particles::{empirical_density, ParticleEnsemble};

use crate::error::{CliError, CliResult};

/// Non-numeric lines quoted in an error message before truncating.
const MAX_REPORTED_LINES: usize = 10;

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn report_bad_lines(path: &Path, bad: &[(usize, String)]) -> CliError {
    if bad.len() == 1 {
        return CliError::Input {
            path: path.display().to_string(),
            line: bad[0].0,
            message: format!("not a number: `{}`", bad[0].1),
        };
    }
    let mut listed: Vec<String> = bad
        .iter()
        .take(MAX_REPORTED_LINES)
        .map(|(n, s)| format!("line {n} (`{s}`)"))
        .collect();
    if bad.len() > MAX_REPORTED_LINES {
        listed.push(format!("and {} more", bad.len() - MAX_REPORTED_LINES));
    }
    CliError::BadFile {
        path: path.display().to_string(),
        message: format!("{} non-numeric lines: {}", bad.len(), listed.join(", ")),
    }
}

/// One sample per line. Blank lines and `#` comments are skipped; every
/// other non-numeric line is reported with its 1-based line number.
pub fn parse_samples(text: &str, path: &Path) -> CliResult<Vec<f64>> {
    let mut out = Vec::new();
    let mut bad = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let s = line.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            _ => bad.push((i + 1, s.to_string())),
        }
    }
    if !bad.is_empty() {
        return Err(report_bad_lines(path, &bad));
    }
    if out.is_empty() {
        return Err(CliError::BadFile {
            path: path.display().to_string(),
            message: "no samples".into(),
        });
    }
    Ok(out)
}

pub fn read_samples(path: &Path) -> CliResult<Vec<f64>> {
    parse_samples(&read_text(path)?, path)
}

/// Histogram of 1D samples on the grid, normalised to unit mass.
///
/// Cells are half-open except the last, which also holds the upper bound.
/// The values are already exact cell averages of the empirical measure,
/// and a conservative reconstruction reproduces cell averages, so no
/// further smoothing changes them.
pub fn ingest_histogram(samples: &[f64], grid: &Grid, boundary: BoundaryCondition) -> CliResult<DensityField> {
    if grid.dim() != 1 {
        return Err(CliError::Core(kresnet_core::Error::Unsupported(
            "histograms are ingested on 1D grids".into(),
        )));
    }
    let e = ParticleEnsemble::from_positions(samples.to_vec())?;
    let h = empirical_density(&e, grid)?;
    Ok(DensityField::new(grid.clone(), h.values, boundary)?)
}

/// Slope/intercept samples extracted from point pairs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RegressionSamples {
    /// `(m, q)` per usable pair.
    pub pairs: Vec<[f64; 2]>,
    /// Pairs with `x₂ = x₁`, which have no slope.
    pub vertical_skipped: usize,
    /// A trailing point without a partner.
    pub unpaired: bool,
}

impl RegressionSamples {
    pub fn slopes(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p[0]).collect()
    }

    pub fn intercepts(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p[1]).collect()
    }

    /// Flat `(m, q)` samples for a 2D density estimate.
    pub fn flat(&self) -> Vec<f64> {
        self.pairs.iter().flatten().copied().collect()
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.vertical_skipped > 0 {
            w.push(format!("skipped {} vertical pair(s) with x2 = x1", self.vertical_skipped));
        }
        if self.unpaired {
            w.push("ignored a trailing point without a partner".into());
        }
        w
    }
}

/// Consecutive, non-overlapping pairs `(p₀, p₁), (p₂, p₃), …` give
/// `m = (y₂ − y₁)/(x₂ − x₁)` and `q = y₁ − m x₁`.
pub fn regression_preprocess(points: &[[f64; 2]]) -> RegressionSamples {
    let mut out = RegressionSamples {
        unpaired: points.len() % 2 == 1,
        ..Default::default()
    };
    for pair in points.chunks_exact(2) {
        let ([x1, y1], [x2, y2]) = (pair[0], pair[1]);
        if x2 == x1 {
            out.vertical_skipped += 1;
            continue;
        }
        let m = (y2 - y1) / (x2 - x1);
        out.pairs.push([m, y1 - m * x1]);
    }
    out
}

/// Two numeric columns per row, comma or whitespace separated. A
/// non-numeric first row is taken as a header.
pub fn parse_points(text: &str, path: &Path) -> CliResult<Vec<[f64; 2]>> {
    let mut out = Vec::new();
    let mut bad = Vec::new();
    let mut first = true;
    for (i, line) in text.lines().enumerate() {
        let s = line.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = s.split(|c: char| c == ',' || c.is_whitespace()).filter(|f| !f.is_empty()).collect();
        let parsed = match fields.as_slice() {
            [a, b] => a.parse::<f64>().ok().zip(b.parse::<f64>().ok()),
            _ => None,
        };
        match parsed {
            Some((x, y)) if x.is_finite() && y.is_finite() => out.push([x, y]),
            _ if first => {}
            _ => bad.push((i + 1, s.to_string())),
        }
        first = false;
    }
    if !bad.is_empty() {
        return Err(report_bad_lines(path, &bad));
    }
    if out.is_empty() {
        return Err(CliError::BadFile {
            path: path.display().to_string(),
            message: "no points".into(),
        });
    }
    Ok(out)
}

pub fn read_points(path: &Path) -> CliResult<Vec<[f64; 2]>> {
    parse_points(&read_text(path)?, path)
}

/// Noisy measurements of `y = slope x + intercept` at the two abscissae,
/// `pairs` times, in pair order.
pub fn line_pair_points<R: Rng>(
    pairs: usize,
    slope: f64,
    intercept: f64,
    noise: f64,
    abscissae: [f64; 2],
    rng: &mut R,
) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(2 * pairs);
    for _ in 0..pairs {
        for x in abscissae {
            let z: f64 = StandardNormal.sample(rng);
            out.push([x, slope * x + intercept + noise * z]);
        }
    }
    out
}
