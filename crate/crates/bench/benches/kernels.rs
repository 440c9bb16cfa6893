use std::hint::black_box;

use bilinear_pdo::battery::{invariance_symbols, isotropic_gaussian};
use bilinear_pdo::closed_form::FunctionSpec;
use bilinear_pdo::fourier::forward_ft_all;
use bilinear_pdo::quantization::{apply_bilinear, apply_bilinear_direct_fn, convert_symbol, QuantizationPair};
use bilinear_pdo::symbols::{gamma_norm_estimate, GevreyClassSpec};
use bilinear_pdo::timefreq::{gaussian_window, mixed_norm, stft, MixedExponents};
use bilinear_pdo::weights::{smooth_weight, WeightModel};
use bilinear_pdo::{AxisSpec, GridSpec, SampledField};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn line(axis: AxisSpec) -> GridSpec {
    GridSpec::new(vec![axis]).unwrap()
}

fn pair_of(axis: AxisSpec) -> (SampledField, SampledField) {
    let grid = line(axis);
    (
        FunctionSpec::gaussian(0.3, 0.5, 0.9).sample(&grid).unwrap(),
        FunctionSpec::gaussian(-0.2, -0.4, 1.1).sample(&grid).unwrap(),
    )
}

fn fourier(c: &mut Criterion) {
    let mut g = c.benchmark_group("forward_ft");
    for n in [256, 4096] {
        let f = FunctionSpec::gaussian(0.0, 1.0, 1.0)
            .sample(&line(AxisSpec::new(12.0, n).unwrap()))
            .unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &f, |b, f| b.iter(|| forward_ft_all(black_box(f)).unwrap()));
    }
    g.finish();
}

fn timefreq(c: &mut Criterion) {
    let grid = line(AxisSpec::new(12.0, 128).unwrap());
    let f = FunctionSpec::gaussian(0.5, 1.0, 1.0).sample(&grid).unwrap();
    let window = gaussian_window(&grid, 1.0).unwrap();
    c.bench_function("stft/128", |b| b.iter(|| stft(black_box(&f), &window).unwrap()));
    let v = stft(&f, &window).unwrap();
    let w = WeightModel::polynomial(vec![0, 1], 1.0);
    let pq = MixedExponents::new(1.0, 2.0).unwrap();
    c.bench_function("mixed_norm/128", |b| b.iter(|| mixed_norm(black_box(&v), &w, pq).unwrap()));
}

fn quantization(c: &mut Criterion) {
    let weyl = QuantizationPair::new(0.5, 0.5).unwrap();
    let kn = QuantizationPair::KOHN_NIRENBERG;
    let mut g = c.benchmark_group("convert_symbol");
    for n in [32, 48] {
        let a = isotropic_gaussian().sample(AxisSpec::balanced(n).unwrap()).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &a, |b, a| {
            b.iter(|| convert_symbol(black_box(a), kn, weyl).unwrap())
        });
    }
    g.finish();

    let mut g = c.benchmark_group("apply_bilinear");
    for n in [32, 64] {
        let axis = AxisSpec::balanced(n).unwrap();
        let a = isotropic_gaussian().sample(axis).unwrap();
        let (f, h) = pair_of(axis);
        g.bench_with_input(BenchmarkId::from_parameter(n), &a, |b, a| {
            b.iter(|| apply_bilinear(black_box(a), weyl, &f, &h).unwrap())
        });
    }
    g.finish();

    let axis = AxisSpec::balanced(16).unwrap();
    let symbol = invariance_symbols().swap_remove(0);
    let (f, h) = pair_of(axis);
    c.bench_function("apply_bilinear_direct/16", |b| {
        b.iter(|| apply_bilinear_direct_fn(|x, xi, eta| symbol.eval(x, xi, eta), weyl, black_box(&f), &h).unwrap())
    });
}

fn classes(c: &mut Criterion) {
    let a = isotropic_gaussian().sample(AxisSpec::balanced(32).unwrap()).unwrap();
    let spec = GevreyClassSpec::gaussian_class_spec();
    c.bench_function("gamma_norm_estimate/32/order4", |b| {
        b.iter(|| gamma_norm_estimate(black_box(&a), &spec, 4).unwrap())
    });
    let grid = line(AxisSpec::new(12.0, 256).unwrap());
    let w = WeightModel::exponential(vec![0], 0.5, 1.0);
    c.bench_function("smooth_weight/256", |b| b.iter(|| smooth_weight(black_box(&w), &[0.5], &grid).unwrap()));
}

criterion_group! {
    name = kernels;
    config = Criterion::default().sample_size(10);
    targets = fourier, timefreq, quantization, classes
}
criterion_main!(kernels);
