use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use relbc_core::adversary::{attack_base, padded_attack};
use relbc_core::analysis::{exact_cheat_probability, mc_cheat_probability};
use relbc_core::games::{brute_force_value, win_probability};
use relbc_core::{CausalModel, DetStrategy, Field, GameDist, ProtocolParams};

fn scrambled(q: u32, salt: u32) -> Vec<u32> {
    (0..q).map(|i| i.wrapping_mul(2_654_435_761).wrapping_add(salt) % q).collect()
}

fn field_mul(c: &mut Criterion) {
    let mut g = c.benchmark_group("field_mul");
    for q in [4u32, 256, 1 << 20] {
        let f = Field::with_order(q).unwrap();
        let xs: Vec<_> = (0..1024u32)
            .map(|i| f.elem(i.wrapping_mul(2_654_435_761) % q))
            .filter(|x| !x.is_zero())
            .collect();
        g.bench_with_input(BenchmarkId::new("table", q), &xs, |b, xs| {
            b.iter(|| xs.iter().fold(f.one(), |acc, &x| f.mul(acc, black_box(x))))
        });
        g.bench_with_input(BenchmarkId::new("schoolbook", q), &xs, |b, xs| {
            b.iter(|| xs.iter().fold(f.one(), |acc, &x| f.mul_reference(acc, black_box(x))))
        });
    }
    g.finish();
}

fn games(c: &mut Criterion) {
    let dist4 = GameDist::uniform(Field::with_order(4).unwrap());
    c.bench_function("brute_force_value/Q=4", |b| {
        b.iter(|| brute_force_value(black_box(&dist4)).unwrap())
    });

    let mut g = c.benchmark_group("win_probability");
    for q in [16u32, 64, 256] {
        let f = Field::with_order(q).unwrap();
        let dist = GameDist::for_propagation(f.clone(), 2).unwrap();
        let s = DetStrategy::from_indices(f, &scrambled(q, 1), &scrambled(q, 7)).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(q), &s, |b, s| {
            b.iter(|| win_probability(black_box(s), &dist).unwrap())
        });
    }
    g.finish();
}

fn attacks(c: &mut Criterion) {
    let f2 = Field::with_order(2).unwrap();
    let game2 = brute_force_value(&GameDist::for_propagation(f2.clone(), 2).unwrap()).unwrap().strategy;
    let mut g = c.benchmark_group("exact_tower");
    g.sample_size(10);
    for m in [6usize, 12, 18] {
        let s = attack_base(&ProtocolParams::symmetrized(f2.clone(), m).unwrap(), game2.clone()).unwrap();
        g.bench_with_input(BenchmarkId::new("Q=2", m), &s, |b, s| b.iter(|| exact_cheat_probability(s).unwrap()));
    }
    g.finish();

    let f16 = Field::with_order(16).unwrap();
    let game16 = DetStrategy::from_indices(f16.clone(), &scrambled(16, 3), &scrambled(16, 5)).unwrap();
    let s = padded_attack(&ProtocolParams::standard(f16, 13).unwrap(), CausalModel::base(), game16).unwrap();
    let mut g = c.benchmark_group("monte_carlo");
    g.sample_size(10);
    g.bench_function("Q=16 m=13 100k", |b| b.iter(|| mc_cheat_probability(&s, 100_000, 1).unwrap()));
    g.finish();
}

criterion_group!(benches, field_mul, games, attacks);
criterion_main!(benches);
