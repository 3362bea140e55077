use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use nullcert::certsolver::{certify_exact, MembershipProblem};
use nullcert::hefer::hefer_tuple;
use nullcert::polyring::Poly;
use nullcert::quad::{calibrate, certify_integral, CalibrationStore, QuadConfig, Strategy};

fn p(vars: &[&str], terms: &[(i64, &[u32])]) -> Poly {
    Poly::from_int_terms(vars, terms)
}

fn exact(c: &mut Criterion) {
    let v = ["x", "y"];
    // x^2 - 1, y^2 - 1, x y + 1 generate (1)
    let f = [
        p(&v, &[(1, &[2, 0]), (-1, &[0, 0])]),
        p(&v, &[(1, &[0, 2]), (-1, &[0, 0])]),
        p(&v, &[(1, &[1, 1]), (1, &[0, 0])]),
    ];
    let one = p(&v, &[(1, &[0, 0])]);
    let mut g = c.benchmark_group("exact");
    for rho in [2, 3, 4] {
        g.bench_function(format!("certify_rho{rho}"), |b| b.iter(|| certify_exact(black_box(&f), &one, rho).unwrap()));
    }
    let homogeneous: Vec<Poly> = MembershipProblem::ideal(&f, &one)
        .unwrap()
        .homogeneous_columns()
        .unwrap()
        .into_iter()
        .map(|c| c[0].clone())
        .collect();
    g.bench_function("hefer", |b| b.iter(|| hefer_tuple(black_box(&homogeneous)).unwrap()));
    g.finish();
}

fn integral(c: &mut Criterion) {
    let v = ["x"];
    let f = [p(&v, &[(1, &[1])]), p(&v, &[(1, &[1]), (-1, &[0])])];
    let problem = MembershipProblem::ideal(&f, &p(&v, &[(1, &[0])])).unwrap();
    let config = QuadConfig::new(Strategy::ChartGrid, 20_000, 1);
    let mut store = CalibrationStore::new();
    store.insert(calibrate(1, &config).unwrap());
    let mut g = c.benchmark_group("integral");
    g.sample_size(10);
    g.bench_function("line_grid_20k", |b| b.iter(|| certify_integral(&problem, 1, None, &config, &store).unwrap()));
    g.finish();
}

criterion_group!(benches, exact, integral);
criterion_main!(benches);
