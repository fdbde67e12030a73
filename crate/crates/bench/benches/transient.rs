use criterion::{black_box, criterion_group, criterion_main, Criterion};
use crn_cex::transient::poisson::fox_glynn;
use crn_cex_bench::{birth_death, futile_cycle_space, single_species_space};

fn poisson(c: &mut Criterion) {
    c.bench_function("fox_glynn/1e4", |b| {
        b.iter(|| fox_glynn(black_box(1e4), 1e-10, 10_000_000).unwrap())
    });
}

fn uniformization(c: &mut Criterion) {
    let space = single_species_space();
    c.bench_function("reach/single_species_T100", |b| {
        b.iter(|| space.ctmc.reach_probability(black_box(100.0)).unwrap())
    });
    let space = futile_cycle_space();
    c.bench_function("reach/futile_cycle_T100", |b| {
        b.iter(|| space.ctmc.reach_probability(black_box(100.0)).unwrap())
    });
    let chain = birth_death(200, 1.0, 0.01);
    c.bench_function("reach/birth_death_200", |b| {
        b.iter(|| chain.reach_probability(black_box(50.0)).unwrap())
    });
}

criterion_group!(benches, poisson, uniformization);
criterion_main!(benches);
