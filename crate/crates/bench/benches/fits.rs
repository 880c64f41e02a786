use criterion::{black_box, criterion_group, criterion_main, Criterion};
use tidyfit_bench::{mixture_sample, mpg_on_wt_qsec, reciprocal_mpg, synthetic_regression};
use tidyfit_core::fixtures::mtcars;
use tidyfit_core::prelude::*;

fn bench_ols(c: &mut Criterion) {
    let data = mtcars();
    let formula = mpg_on_wt_qsec();
    c.bench_function("lm_fit_mtcars", |b| {
        b.iter(|| fit_lm(black_box(&formula), black_box(&data)).unwrap())
    });

    let fit = fit_lm(&formula, &data).unwrap();
    c.bench_function("lm_tidiers_mtcars", |b| {
        b.iter(|| {
            let tidy = tidy_lm(black_box(&fit), Some(0.95)).unwrap();
            let augment = augment_lm(black_box(&fit)).unwrap();
            let glance = glance_lm(black_box(&fit)).unwrap();
            (tidy, augment, glance)
        })
    });

    let wide = synthetic_regression(2000, 8, 17);
    let formula = match parse_formula(
        "y ~ x0 + x1 + x2 + x3 + x4 + x5 + x6 + x7",
        None,
    )
    .unwrap()
    {
        Formula::Linear(f) => f,
        _ => unreachable!(),
    };
    c.bench_function("lm_fit_2000x8", |b| {
        b.iter(|| fit_lm(black_box(&formula), black_box(&wide)).unwrap())
    });
}

fn bench_nls(c: &mut Criterion) {
    let data = mtcars();
    let formula = reciprocal_mpg();
    let controls = NlsControls::default();
    c.bench_function("nls_fit_mtcars", |b| {
        b.iter(|| fit_nls(black_box(&formula), black_box(&data), &controls).unwrap())
    });
}

fn bench_kmeans(c: &mut Criterion) {
    let (_, x) = mixture_sample(2014);
    c.bench_function("kmeans_300x2_k3_nstart5", |b| {
        b.iter(|| fit_kmeans(black_box(&x), 3, 5, 100, 42).unwrap())
    });
}

criterion_group!(benches, bench_ols, bench_nls, bench_kmeans);
criterion_main!(benches);
