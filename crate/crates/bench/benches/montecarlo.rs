use criterion::{criterion_group, criterion_main, Criterion};
use rfiot_core::montecarlo::{SimConfig, Simulator};
use rfiot_core::{Mode, SlotPartition, SystemParams};
use std::hint::black_box;

fn trials(c: &mut Criterion) {
    let p = SystemParams::paper_defaults();
    let mut g = c.benchmark_group("montecarlo");
    g.sample_size(10);
    for (name, slots, mode) in [
        ("dl_1e4", SlotPartition::downlink(0.1).unwrap(), Mode::Downlink),
        ("ul_1e4", SlotPartition::uplink(0.3).unwrap(), Mode::Uplink),
        ("joint_1e4", SlotPartition::joint(0.4, 0.3).unwrap(), Mode::Joint),
    ] {
        let sim = Simulator::new(SimConfig::new(p, slots, mode, 10_000, 1)).unwrap();
        g.bench_function(name, |b| b.iter(|| black_box(&sim).estimate().unwrap()));
    }
    g.finish();
}

criterion_group!(benches, trials);
criterion_main!(benches);
