use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use mdwc_core::par::Exec;
use mdwc_core::rd::{rd_sweep, Options};
use mdwc_core::transform::{forward_dwt97_real, inverse_dwt97_with};
use mdwc_core::weights::Weights;
use mdwc_core::ImagePlane;

const POLICIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn test_image() -> ImagePlane {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/lena.pgm");
    ImagePlane::read_pgm(path).expect("bundled test image")
}

fn transform(c: &mut Criterion) {
    let img = test_image();
    let x = img.to_real();
    let mut g = c.benchmark_group("dwt97_512");
    for (name, exec) in POLICIES {
        g.bench_function(BenchmarkId::new("forward", name), |b| {
            b.iter(|| forward_dwt97_real(black_box(&x), 512, 512, 5, exec).unwrap())
        });
        let p = forward_dwt97_real(&x, 512, 512, 5, exec).unwrap();
        g.bench_function(BenchmarkId::new("inverse", name), |b| {
            b.iter(|| inverse_dwt97_with(black_box(&p), exec).unwrap())
        });
    }
    g.finish();
}

fn training(c: &mut Criterion) {
    let img = test_image();
    let p = forward_dwt97_real(&img.to_real(), 512, 512, 5, Exec::Sequential).unwrap();
    let mut g = c.benchmark_group("weight_training_512");
    for (name, exec) in POLICIES {
        g.bench_function(name, |b| b.iter(|| Weights::train(black_box(&p), exec)));
    }
    g.finish();
}

fn sweep(c: &mut Criterion) {
    let img = test_image();
    let rates = [0.125, 0.25, 0.5, 1.0, 2.0];
    let mut g = c.benchmark_group("rd_sweep_512");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        let opts = Options { exec, ..Options::default() };
        g.bench_function(name, |b| b.iter(|| rd_sweep(black_box(&img), &rates, &opts).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, transform, training, sweep);
criterion_main!(benches);
