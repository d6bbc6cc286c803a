use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use kresnet_core::boltzmann::DiffusionFn;
use kresnet_core::meanfield::MeanFieldProblem;
use kresnet_core::numerics::{Axis, BoundaryCondition, Grid};
use kresnet_core::params::NetworkParams;
use kresnet_core::particles::{step_resnet, step_stochastic, NoiseSource, ParticleEnsemble};
use kresnet_core::profiles::Profile;
use kresnet_core::{Activation, Execution};

const MODES: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

fn ensemble(m: usize) -> ParticleEnsemble {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    ParticleEnsemble::from_positions(Profile::Gaussian { mean: 1.0, std: 1.0 }.sample(m, &mut rng)).unwrap()
}

fn resnet_layer(c: &mut Criterion) {
    let mut group = c.benchmark_group("step_resnet");
    let p = NetworkParams::constant_1d(-1.0, 0.5);
    for m in [10_000, 1_000_000] {
        let e = ensemble(m);
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, m), &e, |b, e| {
                b.iter(|| step_resnet(black_box(e), &p, &Activation::Tanh, 0.01, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn interaction_round(c: &mut Criterion) {
    let mut group = c.benchmark_group("mc_round");
    let p = NetworkParams::constant_1d(-1.0, 0.0);
    let noise = NoiseSource::new(7);
    let e = ensemble(100_000);
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| {
                step_stochastic(black_box(&e), &p, &Activation::Identity, 0.05, 2f64.sqrt(), DiffusionFn::One, &noise, 3, exec)
                    .unwrap()
            })
        });
    }
    group.finish();
}

fn plane_rhs(c: &mut Criterion) {
    let mut group = c.benchmark_group("transport2d_rhs");
    let grid = Grid::plane(Axis::new(-1.0, 3.0, 200).unwrap(), Axis::new(-3.0, 3.0, 200).unwrap());
    let g0 = Profile::Gaussian2d { mean: [1.0, 0.0], std: [0.7, 0.7] }
        .field(&grid, BoundaryCondition::Outflow)
        .unwrap();
    let params = NetworkParams::constant_2d([[-1.0, 0.0], [0.0, -1.0]], [1.0, 0.0]);
    let mut out = vec![0.0; grid.len()];
    for (name, exec) in MODES {
        let mut prob = MeanFieldProblem::new(g0.clone(), params.clone(), Activation::Tanh, 1.0);
        prob.exec = exec;
        let op = prob.operator();
        group.bench_function(name, |b| b.iter(|| op.rhs(0.0, black_box(&g0.values), &mut out).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, resnet_layer, interaction_round, plane_rhs);
criterion_main!(benches);
