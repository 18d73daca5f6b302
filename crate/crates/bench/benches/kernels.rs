use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use crowdctl_bench::bench_room;
use crowdctl_core::interaction::interaction_velocity;
use crowdctl_core::pathplan::{feedback_velocity, solve_drift_hjb, solve_eikonal};
use crowdctl_core::transport::{cfl_dt, project_velocity, step_density};
use crowdctl_core::{
    classify_cells, initial_density, simulate, BehaviorSpec, ExitLedger, HjbConfig,
    InteractionParams, VelocityField,
};

fn pathplan(c: &mut Criterion) {
    let cfg = HjbConfig::default();
    let mut group = c.benchmark_group("pathplan");
    for n in [50, 100] {
        let s = bench_room(n);
        let g = classify_cells(&s, None);
        group.bench_with_input(BenchmarkId::new("eikonal", n), &g, |b, g| {
            b.iter(|| solve_eikonal(black_box(g), &cfg))
        });
        let drift = VelocityField::uniform(n, n, [-0.2, 0.1]);
        group.bench_with_input(BenchmarkId::new("drift_hjb", n), &g, |b, g| {
            b.iter(|| solve_drift_hjb(black_box(g), &drift, &cfg))
        });
    }
    group.finish();
}

fn interaction_and_transport(c: &mut Criterion) {
    let s = bench_room(100);
    let g = classify_cells(&s, None);
    let cfg = HjbConfig::default();
    let phi = solve_eikonal(&g, &cfg);
    let vb = feedback_velocity(&phi, &g, None, &cfg);
    let rho = initial_density(&s, &g);
    let params = InteractionParams::from_scenario(&s);
    c.bench_function("interaction_velocity_100", |b| {
        b.iter(|| interaction_velocity(black_box(&rho), &vb, &params, &g))
    });
    let v = project_velocity(&vb.add(&interaction_velocity(&rho, &vb, &params, &g)), &g);
    let dt = cfl_dt(&v, s.spacing(), 0.45, 0.5 * s.spacing());
    c.bench_function("transport_step_100", |b| {
        b.iter(|| {
            let mut ledger = ExitLedger::new(g.n_exits());
            step_density(black_box(&rho), &v, dt, &g, &mut ledger).unwrap()
        })
    });
}

fn full_runs(c: &mut Criterion) {
    let s = bench_room(50);
    let mut group = c.benchmark_group("simulate_50");
    group.sample_size(10);
    group.bench_function("basic", |b| {
        b.iter(|| simulate(black_box(&s), &BehaviorSpec::basic(), None).unwrap())
    });
    group.bench_function("rational", |b| {
        b.iter(|| simulate(black_box(&s), &BehaviorSpec::rational(), None).unwrap())
    });
    group.finish();
}

criterion_group!(benches, pathplan, interaction_and_transport, full_runs);
criterion_main!(benches);
