//! Three-point Gauss-Legendre rules.

/// Nodes on the reference cell `[-1/2, 1/2]`.
pub const GAUSS3_NODES: [f64; 3] = [-0.387_298_334_620_741_7, 0.0, 0.387_298_334_620_741_7];
/// Weights normalised to sum to one.
pub const GAUSS3_WEIGHTS: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];

/// `(1/|b-a|) ∫_a^b f`, exact for polynomials up to degree five.
pub fn gauss3_cell_average<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let h = b - a;
    GAUSS3_NODES
        .iter()
        .zip(GAUSS3_WEIGHTS)
        .map(|(xi, w)| w * f(mid + xi * h))
        .sum()
}

/// Composite Gauss-3 approximation of `∫_a^b f` on `panels` equal panels.
pub fn composite_gauss3<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let lo = a + p as f64 * h;
            gauss3_cell_average(&f, lo, lo + h) * h
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_polynomials() {
        assert!((gauss3_cell_average(|_| 1.0, -3.0, 7.0) - 1.0).abs() < 1e-15);
        assert!((gauss3_cell_average(|x| x.powi(5), 0.0, 1.0) - 1.0 / 6.0).abs() < 1e-15);
        // degree six is no longer exact
        assert!((gauss3_cell_average(|x| x.powi(6), 0.0, 1.0) - 1.0 / 7.0).abs() > 1e-6);
    }

    #[test]
    fn normal_mass_on_unit_cell() {
        // oracle: 2000-panel composite Simpson of the standard normal pdf
        let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let n = 2000;
        let h = 1.0 / n as f64;
        let simpson: f64 = (0..n)
            .map(|i| {
                let a = -0.5 + i as f64 * h;
                h / 6.0 * (pdf(a) + 4.0 * pdf(a + 0.5 * h) + pdf(a + h))
            })
            .sum();
        assert!((simpson - 0.3829).abs() < 1e-4);
        let g = gauss3_cell_average(pdf, -0.5, 0.5);
        assert!((g - simpson).abs() < 1e-4, "{g} vs {simpson}");
    }
}
