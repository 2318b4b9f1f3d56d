use chenflow_core::flowmodel::assemble_operator;
use chenflow_core::initialdata::{generate, CurveSpec, Shape};
use chenflow_core::linsolve::{Factorization, SolverOptions};
use chenflow_core::stepper::{step, FlowState};
use chenflow_core::ModelParams;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn ellipse(n: usize) -> chenflow_core::DiscreteCurve {
    generate(&CurveSpec::new(Shape::Ellipse { axis_ratio: 2.0 }, n).resampled()).unwrap()
}

fn bench_step(c: &mut Criterion) {
    let params = ModelParams::default();
    let mut group = c.benchmark_group("step");
    for n in [64, 256, 1024] {
        let state = FlowState::initial(ellipse(n));
        let ds = 1.0 / (n as f64 * 100.0);
        group.bench_with_input(BenchmarkId::from_parameter(n), &state, |b, s| {
            b.iter(|| step(s, &params, ds, SolverOptions::default()).unwrap())
        });
    }
    group.finish();
}

fn bench_solve(c: &mut Criterion) {
    let params = ModelParams::default();
    let curve = ellipse(256);
    let op = assemble_operator(&curve, &params).unwrap();
    let m = op.matrix.scale_shift(-1e-4, 1.0);
    let rhs = curve.coords().to_vec();
    c.bench_function("assemble/256", |b| {
        b.iter(|| assemble_operator(&curve, &params).unwrap())
    });
    c.bench_function("factor_solve/256", |b| {
        b.iter(|| {
            Factorization::new(&m, SolverOptions::default())
                .unwrap()
                .solve(&rhs)
                .unwrap()
        })
    });
}

criterion_group!(benches, bench_step, bench_solve);
criterion_main!(benches);
