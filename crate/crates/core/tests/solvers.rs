use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use kresnet_core::boltzmann::{mc_evolve, noise_floor, DiffusionFn, KineticConfig};
use kresnet_core::fokkerplanck::{solve_fp, verify_steady_state, FokkerPlanckProblem, SteadyStateModel};
use kresnet_core::meanfield::{delta_steady_states, field_moment, solve_meanfield, MeanFieldProblem};
use kresnet_core::moments::{gaussian_moments, moment_closed_solution};
use kresnet_core::numerics::{BoundaryCondition, DensityField, Grid};
use kresnet_core::params::NetworkParams;
use kresnet_core::particles::{integrate_ode, wasserstein1_to_field, OdeOptions, ParticleEnsemble};
use kresnet_core::profiles::Profile;
use kresnet_core::{Activation, Execution};

fn line() -> Grid {
    Grid::line(-6.0, 6.0, 400).unwrap()
}

fn field(p: Profile, grid: &Grid, bc: BoundaryCondition) -> DensityField {
    p.field(grid, bc).unwrap()
}

#[test]
fn zero_flux_mass_and_moments() {
    let g0 = field(Profile::Gaussian { mean: 1.0, std: 1.0 }, &line(), BoundaryCondition::ZeroFlux);
    let times: Vec<f64> = (1..=10).map(|k| 0.3 * k as f64).collect();
    let p = NetworkParams::constant_1d(-1.0, 0.5);
    let sol = solve_meanfield(&MeanFieldProblem::new(g0, p.clone(), Activation::Identity, 3.0), &times).unwrap();
    let m0 = gaussian_moments(1.0, 1.0, 2);
    let mut last_var = f64::INFINITY;
    for (t, s) in times.iter().zip(&sol.snapshots) {
        assert!((s.mass() - 1.0).abs() <= 1e-10);
        for k in 1..=2u32 {
            let exact = moment_closed_solution(k as usize, *t, &p, &m0).unwrap();
            assert!((field_moment(s, k) - exact).abs() < 1e-2, "k={k} t={t}");
        }
        let var = field_moment(s, 2) - field_moment(s, 1).powi(2);
        assert!(var < last_var);
        last_var = var;
    }
}

#[test]
fn delta_locations_ignore_positive_rescaling() {
    let grid = line();
    for act in [Activation::Tanh, Activation::Identity] {
        let base = delta_steady_states(&act, [[-1.5, 0.0], [0.0, 0.0]], [0.75, 0.0], &grid).unwrap();
        for s in [0.1, 2.0, 37.0] {
            let scaled = delta_steady_states(&act, [[-1.5 * s, 0.0], [0.0, 0.0]], [0.75 * s, 0.0], &grid).unwrap();
            assert_eq!(base.len(), scaled.len());
            for (a, b) in base.iter().zip(&scaled) {
                assert!((a[0] - b[0]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn particles_approach_the_mean_field_density() {
    let grid = line();
    let p = NetworkParams::constant_1d(-1.0, 0.0);
    let g0 = field(Profile::Gaussian { mean: 1.0, std: 1.0 }, &grid, BoundaryCondition::Outflow);
    let g1 = solve_meanfield(&MeanFieldProblem::new(g0, p.clone(), Activation::Identity, 1.0), &[1.0]).unwrap();
    let mut previous = f64::INFINITY;
    for m in [100, 1_000, 10_000] {
        let mut total = 0.0;
        for seed in 0..10u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let xs = Profile::Gaussian { mean: 1.0, std: 1.0 }.sample(m, &mut rng);
            let e = ParticleEnsemble::from_positions(xs).unwrap();
            let traj = integrate_ode(&e, &p, &Activation::Identity, 1.0, 1e-3, OdeOptions { record_every: usize::MAX, ..Default::default() }).unwrap();
            total += wasserstein1_to_field(traj.last().unwrap().states(), &g1.snapshots[0]).unwrap();
        }
        let mean = total / 10.0;
        assert!(mean < previous, "M={m}: {mean} vs {previous}");
        previous = mean;
    }
}

#[test]
fn monte_carlo_mean_decays() {
    let m = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let e = ParticleEnsemble::from_positions(Profile::Gaussian { mean: 1.0, std: 1.0 }.sample(m, &mut rng)).unwrap();
    let m1 = e.mean()[0];
    let p = NetworkParams::constant_1d(-1.0, 0.0);
    let kc = KineticConfig::new(0.05, 2f64.sqrt(), DiffusionFn::One);
    let out = mc_evolve(&e, &p, &Activation::Identity, &kc, 2.0, 17, Execution::Parallel).unwrap();
    let expected = m1 * (-2.0f64).exp();
    assert!((out.mean()[0] - expected).abs() < 3.0 * noise_floor(m));
}

#[test]
fn steady_models_have_null_flux() {
    let cases = [
        (SteadyStateModel::gaussian(-1.0, 0.0, 2.0).unwrap(), Grid::line(-6.0, 6.0, 400).unwrap(), 1e-3),
        (SteadyStateModel::gaussian(-2.0, 1.0, 0.5).unwrap(), Grid::line(-3.0, 4.0, 400).unwrap(), 1e-3),
        (SteadyStateModel::inverse_gamma(-1.0, 0.5, 1.0).unwrap(), Grid::line(0.2, 10.0, 400).unwrap(), 1e-3),
        (SteadyStateModel::pareto(-1.0, 2.0, 1.0).unwrap(), Grid::line(2.1, 50.0, 400).unwrap(), 1e-3),
        (
            SteadyStateModel::generalized_gamma(1.0, 0.0, 4.0, 0.5, 1.0, [0.2, 6.0]).unwrap(),
            Grid::line(0.2, 6.0, 400).unwrap(),
            1e-2,
        ),
    ];
    for (model, grid, tol) in cases {
        let r = verify_steady_state(&model, &grid).unwrap();
        assert!(r < tol, "{:?}: {r}", model.family);
        model.check_normalization().unwrap();
    }
}

#[test]
fn fokker_planck_forgets_its_initial_data() {
    let grid = Grid::line(-6.0, 6.0, 200).unwrap();
    let target = SteadyStateModel::gaussian(-1.0, 0.0, 2.0).unwrap().field(&grid, BoundaryCondition::ZeroFlux).unwrap();
    let starts = [
        Profile::Uniform { lower: -1.0, upper: -0.5 },
        Profile::Bimodal { left: -2.0, right: 2.0, std: 0.4 },
        Profile::Gaussian { mean: 2.5, std: 0.5 },
    ];
    for start in starts {
        let g0 = field(start.clone(), &grid, BoundaryCondition::ZeroFlux);
        let prob = FokkerPlanckProblem::new(g0, NetworkParams::constant_1d(-1.0, 0.0), Activation::Identity, DiffusionFn::One, 2.0, 10.0);
        let sol = solve_fp(&prob, &[10.0]).unwrap();
        let g = &sol.snapshots[0];
        assert!(g.l1_distance(&target).unwrap() < 5e-2, "{start:?}");
        assert!((g.mass() - 1.0).abs() < 1e-10);
        let (m1, m2) = (field_moment(g, 1), field_moment(g, 2));
        assert!(m1.abs() < 2e-2);
        assert!((m2 - m1 * m1 - 1.0).abs() < 2e-2);
    }
}
