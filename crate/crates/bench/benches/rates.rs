use std::hint::black_box;

use backhaul_core::quadrature::periodic_even_mean;
use backhaul_core::{
    rate_dec_timeshare, solve_fixed_point, LocalRateParams, Model, MonteCarloCfg, MonteCarloEnsemble,
    RateFunctional, SystemParams,
};
use criterion::{criterion_group, criterion_main, Criterion};

fn fixed_point(c: &mut Criterion) {
    let p = SystemParams::gaussian(Model::Wyner, 0.4, 10.0, 3.0);
    let f = RateFunctional::WynerGaussian {
        alpha: p.alpha,
        p: p.p,
    };
    c.bench_function("fixed_point_wyner_gaussian", |b| {
        b.iter(|| solve_fixed_point(black_box(&f), black_box(3.0)).unwrap())
    });
    c.bench_function("timeshare_wyner_gaussian", |b| {
        b.iter(|| rate_dec_timeshare(black_box(&p), &f, &LocalRateParams::default()).unwrap())
    });
}

fn montecarlo(c: &mut Criterion) {
    let p = SystemParams::rayleigh(Model::Wyner, 0.4, 10.0, 3.0, 5);
    let ensemble = MonteCarloEnsemble::new(&p, &MonteCarloCfg::default()).unwrap();
    c.bench_function("montecarlo_functional_eval", |b| {
        b.iter(|| ensemble.rate(black_box(9.0)).unwrap())
    });
    c.bench_function("montecarlo_ensemble_build", |b| {
        b.iter(|| MonteCarloEnsemble::new(black_box(&p), &MonteCarloCfg::default()).unwrap())
    });
}

fn quadrature(c: &mut Criterion) {
    c.bench_function("wyner_spectrum_quadrature", |b| {
        b.iter(|| {
            let (alpha, x) = (black_box(0.4), black_box(9.0));
            periodic_even_mean(
                |t| (1.0 + x * (1.0 + 2.0 * alpha * (std::f64::consts::TAU * t).cos()).powi(2)).log2(),
                1e-12,
            )
            .unwrap()
        })
    });
}

criterion_group!(benches, fixed_point, montecarlo, quadrature);
criterion_main!(benches);
