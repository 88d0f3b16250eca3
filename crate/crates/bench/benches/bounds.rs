use criterion::{black_box, criterion_group, criterion_main, Criterion};

use photoiso_core::bounds::{
    gamma_embed_optimize, gamma_markov, gamma_star, gamma_star_bruteforce, EmbedOptions,
};
use photoiso_core::curve::{build_curve, thermomajorizes};
use photoiso_core::gibbs::{exp_rate, gs3_from_params, sample_gs3, spectrum3, thermal_rate_matrix};
use photoiso_core::markov::{max_yield_search, ReachOptions};
use photoiso_core::thermo::YIELD_LEVEL;
use photoiso_core::{PhotoisomerInstance, PopulationVector};

fn bench_closed_forms(c: &mut Criterion) {
    let instance = PhotoisomerInstance::new(1.0, 3.0, 0.5).unwrap();
    c.bench_function("gamma_star_closed_form", |b| {
        b.iter(|| gamma_star(black_box(&instance)))
    });
    c.bench_function("gamma_markov_closed_form", |b| {
        b.iter(|| gamma_markov(black_box(&instance)))
    });
    c.bench_function("gamma_star_bruteforce_200", |b| {
        b.iter(|| gamma_star_bruteforce(black_box(&instance), 200))
    });
}

fn bench_curves(c: &mut Criterion) {
    let instance = PhotoisomerInstance::new(1.0, 3.0, 0.5).unwrap();
    let system = instance.system();
    let p = instance.initial_state();
    let q = PopulationVector::new(vec![0.4, 0.25, 0.35]).unwrap();
    c.bench_function("build_curve", |b| {
        b.iter(|| build_curve(black_box(&p), black_box(&system)).unwrap())
    });
    c.bench_function("thermomajorizes", |b| {
        b.iter(|| thermomajorizes(black_box(&p), black_box(&q), black_box(&system)).unwrap())
    });
}

fn bench_matrices(c: &mut Criterion) {
    let instance = PhotoisomerInstance::new(1.0, 3.0, 0.5).unwrap();
    let system = instance.system();
    let params = sample_gs3(7, &instance).unwrap();
    let rates = vec![
        vec![0.0, 1.0, 0.5],
        vec![1.0, 0.0, 2.0],
        vec![0.5, 2.0, 0.0],
    ];
    let rate_matrix = thermal_rate_matrix(&system, &rates).unwrap();
    let g = gs3_from_params(&params, &instance).unwrap();
    c.bench_function("gs3_from_params", |b| {
        b.iter(|| gs3_from_params(black_box(&params), black_box(&instance)).unwrap())
    });
    c.bench_function("exp_rate", |b| {
        b.iter(|| exp_rate(black_box(&rate_matrix), black_box(1.7)).unwrap())
    });
    c.bench_function("spectrum3", |b| b.iter(|| spectrum3(black_box(&g)).unwrap()));
}

fn bench_optimizers(c: &mut Criterion) {
    let instance = PhotoisomerInstance::new(1.0, 3.0, 0.5).unwrap();
    let system = instance.system();
    let small = EmbedOptions {
        grid_n: 100,
        refine_rounds: 2,
        refine_n: 21,
    };
    c.bench_function("gamma_embed_optimize_100", |b| {
        b.iter(|| gamma_embed_optimize(black_box(1.0), black_box(0.5), &small).unwrap())
    });
    let mut group = c.benchmark_group("search");
    group.sample_size(10);
    group.bench_function("max_yield_search_default", |b| {
        b.iter(|| {
            max_yield_search(
                black_box(&instance.initial_state()),
                black_box(&system),
                YIELD_LEVEL,
                &ReachOptions::default(),
            )
            .unwrap()
        })
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_closed_forms,
    bench_curves,
    bench_matrices,
    bench_optimizers
);
criterion_main!(benches);
