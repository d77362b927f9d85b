use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use speedlab::coeffs::CoefficientField;
use speedlab::eigen::{lambda_curve, EigenOptions};
use speedlab::orbits::logistic_orbit;
use speedlab::pde::{Form, LineModel};
use speedlab::{Exec, ModelExprs, SystemSpec};

fn mu_sweep(c: &mut Criterion) {
    let (nt, nx) = (100, 64);
    let f = |e: &str| CoefficientField::build(e, 1.0, 1.0, nt, nx).unwrap();
    let (d, g, m) = (f("1 + 0.3*cos(2*pi*x)"), f("0.5*sin(2*pi*(x - t))"), f("1 + cos(2*pi*x)"));
    let mus: Vec<f64> = (0..16).map(|i| 0.125 * (i + 1) as f64).collect();
    let opts = EigenOptions::default();
    let mut group = c.benchmark_group("mu_sweep");
    group.sample_size(10);
    for exec in [Exec::Sequential, Exec::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| lambda_curve(&d, &g, &m, &mus, &opts, exec).unwrap())
        });
    }
    group.finish();
}

fn front_period(c: &mut Criterion) {
    let mut m = ModelExprs::constants(1.0, 0.5, 2.0, 1.0, 1.0, 0.3, 1.2, 1.0);
    m.b1 = "2 + 0.5*cos(2*pi*x)".into();
    let sys = SystemSpec::from_exprs(&m, 40, 32).unwrap();
    let u2 = logistic_orbit(&sys.d2, &sys.g2, &sys.b2, &sys.a22).unwrap();
    let mut group = c.benchmark_group("line_period");
    group.sample_size(10);
    for exec in [Exec::Sequential, Exec::Parallel] {
        let model = LineModel::aligned(&sys, -200.0, 200.0)
            .unwrap()
            .with_u2_star(u2.as_field())
            .unwrap()
            .with_exec(exec);
        let mut start = model.zero_state(0.0, Form::Cooperative);
        for i in 0..model.len() {
            start.first[i] = if model.x(i) < 0.0 { 1.0 } else { 0.0 };
        }
        group.bench_function(BenchmarkId::from_parameter(format!("{exec:?}")), |b| {
            b.iter(|| {
                let mut s = start.clone();
                model.evolve(&mut s, 1.0).unwrap();
                s
            })
        });
    }
    group.finish();
}

criterion_group!(benches, mu_sweep, front_period);
criterion_main!(benches);
