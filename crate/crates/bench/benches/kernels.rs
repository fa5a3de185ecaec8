use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rirabs::dsp;
use rirabs::nn::{ModelSpec, Network, OutputHead};
use rirabs::sampler::{sample_room, SamplingStrategy};
use rirabs::sim::{self, enumerate_image_sources, trace_diffuse_rain};
use rirabs::{RoomSpec, SimConfig};

fn room() -> RoomSpec {
    sample_room(&mut ChaCha8Rng::seed_from_u64(7), &SamplingStrategy::rb()).unwrap()
}

fn simulator(c: &mut Criterion) {
    let spec = room();
    let fast = SimConfig::fast();
    let mut g = c.benchmark_group("sim");
    g.sample_size(10);
    g.bench_function("image_sources_0.5s", |b| b.iter(|| enumerate_image_sources(&spec, &fast)));
    g.bench_function("image_sources_order50_2.5s", |b| {
        let cfg = SimConfig {
            max_time: 2.5,
            ..SimConfig::paper()
        };
        b.iter(|| enumerate_image_sources(&spec, &cfg))
    });
    g.bench_function("diffuse_rain_10k_rays", |b| b.iter(|| trace_diffuse_rain(&spec, &fast, 1)));
    g.bench_function("simulate_fast", |b| b.iter(|| sim::simulate(&spec, &fast, 1).unwrap()));
    g.finish();
}

fn preprocessing(c: &mut Criterion) {
    let rir = sim::simulate(&room(), &SimConfig::fast(), 1).unwrap();
    c.bench_function("preprocess", |b| {
        b.iter_batched(
            || ChaCha8Rng::seed_from_u64(3),
            |mut rng| dsp::preprocess(&rir, 30.0, &mut rng).unwrap(),
            BatchSize::SmallInput,
        )
    });
    c.bench_function("octave_filter_bank", |b| b.iter(|| dsp::octave_filter_bank(&rir).unwrap()));
}

fn networks(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut g = c.benchmark_group("nn");
    g.sample_size(10);
    for (name, spec) in [
        ("cnn", ModelSpec::cnn(OutputHead::Alpha)),
        ("mlp", ModelSpec::mlp(OutputHead::Alpha)),
    ] {
        let net: Network<f32> = Network::new(&spec, &mut rng).unwrap();
        let n = 16;
        let x: Vec<f32> = (0..n * spec.input_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let t: Vec<f32> = (0..n * spec.head.dim()).map(|_| rng.gen_range(0.0..1.0)).collect();
        g.bench_function(format!("{name}_forward_16"), |b| b.iter(|| net.forward(&x).unwrap()));
        g.bench_function(format!("{name}_grad_16"), |b| b.iter(|| net.mse_and_grad(&x, &t).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, simulator, preprocessing, networks);
criterion_main!(benches);
