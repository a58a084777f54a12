//! Sequential against data-parallel execution of the heavy loops.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use tonelli_core::mather::{alpha_table, critical_value, TensorGrid, ValueIteration};
use tonelli_core::schwartzman::{hamiltonian_ensemble, EnsembleConfig};
use tonelli_core::tonelli::MechanicalModel;
use tonelli_core::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn params(exec: Execution) -> ValueIteration {
    ValueIteration {
        n: 128,
        dt: 0.05,
        v_max: 3.0,
        exec,
        ..ValueIteration::default()
    }
}

fn alpha_tables(c: &mut Criterion) {
    let l = MechanicalModel::pendulum(1.0).unwrap();
    let grid = TensorGrid::uniform(1, -2.0, 2.0, 33).unwrap();
    let mut group = c.benchmark_group("alpha_table");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| alpha_table(&l, "pendulum", black_box(&grid), &params(exec)).unwrap())
        });
    }
    group.finish();
}

fn value_iteration_2d(c: &mut Criterion) {
    let l = MechanicalModel::two_dof_pendulum(1.0).unwrap();
    let mut group = c.benchmark_group("critical_value_2d");
    group.sample_size(10);
    for (name, exec) in MODES {
        let p = ValueIteration {
            n: 32,
            dt: 0.1,
            v_max: 3.0,
            exec,
            ..ValueIteration::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(name), &p, |b, p| {
            b.iter(|| critical_value(&l, black_box(&[0.5, 0.25]), p).unwrap())
        });
    }
    group.finish();
}

fn ensembles(c: &mut Criterion) {
    let h = MechanicalModel::pendulum(1.0).unwrap();
    let cfg = EnsembleConfig {
        window: 10.0,
        ..EnsembleConfig::default()
    };
    let mut group = c.benchmark_group("hamiltonian_ensemble");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| hamiltonian_ensemble(&h, black_box(&cfg), exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, alpha_tables, value_iteration_2d, ensembles);
criterion_main!(benches);
