use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use wbfm_core::{
    gabor, make_modulation, make_window, noise_cov, shifted_total_cov, signal_cov, synthesize, GaborSystem,
    ModulationKind, SpectrumShape, WindowKind,
};

const LEN: usize = 4096;

fn reference() -> GaborSystem {
    GaborSystem::new(LEN, 32, 8, make_window(WindowKind::Gauss, LEN, 128.0).unwrap()).unwrap()
}

fn kernels(c: &mut Criterion) {
    let sys = reference();
    let spec = SpectrumShape::Bands { lo: 100, hi: 2000, count: 4, taper: 8 }.build(LEN, 1.0, 0).unwrap();
    let law = make_modulation(LEN, &ModulationKind::SineFm { k0: 200.0, amplitude: 15.0, cycles: 1.0, phase: 0.0 })
        .unwrap();
    let y = synthesize(&spec, &law, 0.1, 1).unwrap().y;

    c.bench_function("gabor_one_offset", |b| b.iter(|| gabor(black_box(&y), &sys, 0).unwrap()));

    c.bench_function("signal_cov", |b| b.iter(|| signal_cov(&sys, black_box(&spec), 0).unwrap()));

    let cov = shifted_total_cov(&signal_cov(&sys, &spec, 0).unwrap(), &noise_cov(&sys, 0.1), 0).unwrap();
    let tf = gabor(&y, &sys, 0).unwrap();
    c.bench_function("shift_scores", |b| b.iter(|| cov.shift_scores(black_box(tf.slice(10))).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = kernels
}
criterion_main!(benches);
