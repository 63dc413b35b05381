use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use pac_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_bits(len: usize, rng: &mut ChaCha8Rng) -> BitWord {
    BitWord::from_bits((0..len).map(|_| rng.random_range(0..2u8)).collect()).unwrap()
}

fn encoding(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let u = random_bits(1024, &mut rng);
    c.bench_function("polar_encode N=1024", |b| b.iter(|| polar_encode(black_box(&u)).unwrap()));

    let spec = CodeSpec::new(rm_profile(256, 93).unwrap(), "3211".parse().unwrap()).unwrap();
    let d = random_bits(93, &mut rng);
    c.bench_function("pac_encode (256,93)", |b| b.iter(|| spec.encode(black_box(&d)).unwrap()));
}

fn demapper(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let llrs: Vec<f64> = (0..256).map(|_| rng.random_range(-6.0..6.0)).collect();
    let bits: Vec<u8> = (0..256).map(|_| rng.random_range(0..2u8)).collect();
    c.bench_function("lattice full pass N=256", |b| {
        b.iter_batched(
            || LlrLattice::init(&llrs).unwrap(),
            |mut lat| {
                for &u in &bits {
                    black_box(lat.soft_out().unwrap());
                    lat.advance(u).unwrap();
                }
            },
            BatchSize::SmallInput,
        )
    });
}

fn fano(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (n, k) = (128, 64);
    let spec = CodeSpec::new(rm_profile(n, k).unwrap(), "3211".parse().unwrap()).unwrap();
    let esn0 = ebn0_to_esn0(3.0, 0.5).unwrap();
    let cfg = FanoConfig::new(bias_vector(&ChannelModel::biawgn(esn0).unwrap(), n, 50_000, 3).unwrap());
    let frames: Vec<Vec<f64>> = (0..64)
        .map(|frame| {
            let (_, _, x) = spec.encode(&random_bits(k, &mut rng)).unwrap();
            transmit(&x, esn0, Lineage { seed: 3, frame }).unwrap().llrs
        })
        .collect();
    let mut next = 0;
    c.bench_function("fano decode PAC(128,64) 3 dB", |b| {
        b.iter(|| {
            next = (next + 1) % frames.len();
            decode(LlrLattice::init(&frames[next]).unwrap(), &spec, &cfg).unwrap()
        })
    });
}

fn construction(c: &mut Criterion) {
    let ch = ChannelModel::biawgn(0.5).unwrap();
    let mut group = c.benchmark_group("construction");
    group.sample_size(10);
    group.bench_function("node_cutoff_tree N=256 level 4, 1e5 samples", |b| {
        b.iter(|| node_cutoff_tree(&ch, 256, 4, 0.1, 100_000, 1).unwrap())
    });
    group.finish();
}

criterion_group!(benches, encoding, demapper, fano, construction);
criterion_main!(benches);
