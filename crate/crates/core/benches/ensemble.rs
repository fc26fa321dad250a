use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use monfer::engine::{EngineKind, ModelKind, SimParams};
use monfer::ensemble::{current_workers, Execution};
use monfer::experiment::{run_blocks, run_sampled, MeasurementPlan};

fn params(model: ModelKind) -> SimParams {
    SimParams {
        t_burn: 10.0,
        t_sample: 8.0,
        dt_sample: 2.0,
        n_traj: 16,
        ..SimParams::new(64, 1.0, model, 7)
    }
}

fn steady_state(c: &mut Criterion) {
    let mut g = c.benchmark_group("steady_state_L64_16traj");
    g.sample_size(10);
    let plan = MeasurementPlan::standard(64, 12).unwrap();
    for model in [ModelKind::FermionCounting, ModelKind::OccupationMeasurement] {
        let p = params(model);
        for exec in [Execution::Sequential, Execution::Parallel] {
            let id = BenchmarkId::new(format!("{model:?}"), format!("{exec:?}x{}", current_workers()));
            g.bench_function(id, |b| {
                b.iter(|| run_blocks(&p, EngineKind::Slater, &plan, 0, p.n_traj as u64, exec).unwrap())
            });
        }
    }
    g.finish();
}

fn engines(c: &mut Criterion) {
    let mut g = c.benchmark_group("sampled_L64_fc");
    g.sample_size(10);
    let p = params(ModelKind::FermionCounting);
    for kind in [EngineKind::Density, EngineKind::Slater] {
        for exec in [Execution::Sequential, Execution::Parallel] {
            g.bench_function(BenchmarkId::new(format!("{kind:?}"), format!("{exec:?}")), |b| {
                b.iter(|| run_sampled(&p, kind, 0, 8, exec).unwrap())
            });
        }
    }
    g.finish();
}

criterion_group!(benches, steady_state, engines);
criterion_main!(benches);
