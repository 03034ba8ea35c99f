use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use equikernel::bench::{Kernel, KernelFixture};
use equikernel::graph::random_structure;
use equikernel::model::{Model, ModelConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const CHANNELS: usize = 4;

fn convolution(c: &mut Criterion) {
    for kernel in Kernel::ALL {
        let mut group = c.benchmark_group(kernel.name());
        for l in [2, 4, 6, 8] {
            let fixture = KernelFixture::new(l, l, CHANNELS, 0).unwrap();
            group.bench_with_input(BenchmarkId::from_parameter(l), &fixture, |b, f| {
                b.iter(|| f.run(kernel).unwrap())
            });
        }
        group.finish();
    }
}

fn forward(c: &mut Criterion) {
    let model = Model::random(&ModelConfig::tiny(), 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let s = random_structure(&mut rng, 8, 4.0, 1.0, &[1, 6, 8]).unwrap();
    let mut group = c.benchmark_group("model");
    group.sample_size(10);
    group.bench_function("tiny_forward_8_atoms", |b| b.iter(|| model.predict(&s).unwrap()));
    group.finish();
}

criterion_group!(benches, convolution, forward);
criterion_main!(benches);
