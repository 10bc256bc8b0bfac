use criterion::{black_box, criterion_group, criterion_main, Criterion, Throughput};

use csaf_bench::{alternating_trace, random_branches};
use csaf_core::*;

fn predictor_updates(c: &mut Criterion) {
    let events = random_branches(100_000, 4096, 1);
    let mut group = c.benchmark_group("predictor_update");
    group.throughput(Throughput::Elements(events.len() as u64));
    for family in PredictorFamily::ALL {
        group.bench_function(family.as_str(), |b| {
            b.iter(|| {
                let mut p = Predictor::new(PredictorConfig::new(family, 1024)).unwrap();
                let mut wrong = 0u64;
                for ev in &events {
                    wrong += (p.predict(ev.pc) != ev.outcome) as u64;
                    p.update(ev.pc, ev.outcome);
                }
                black_box(wrong)
            })
        });
    }
    group.finish();
}

fn full_simulation(c: &mut Criterion) {
    let trace = alternating_trace(200_000, 10_000, 2);
    let mut group = c.benchmark_group("run_simulation");
    group.throughput(Throughput::Elements(200_000));
    for mode in [CsafMode::Baseline, CsafMode::Csaf, CsafMode::AlwaysResetFull] {
        let config = SimConfig {
            predictor: PredictorConfig::new(PredictorFamily::Bimode, 128),
            csaf: CsafConfig {
                mode,
                ..CsafConfig::default()
            },
            window: 1000,
        };
        group.bench_function(mode.as_str(), |b| {
            b.iter(|| black_box(run_simulation(&trace, &config).unwrap()))
        });
    }
    group.finish();
}

fn transition_table_ops(c: &mut Criterion) {
    let keys: Vec<(Pid, Pid)> = random_branches(10_000, 24, 3)
        .iter()
        .zip(random_branches(10_000, 24, 4).iter())
        .map(|(a, b)| (Pid(a.pc as u32), Pid(b.pc as u32)))
        .collect();
    let mut group = c.benchmark_group("transition_table");
    group.throughput(Throughput::Elements(keys.len() as u64));
    group.bench_function("record_outcome_cap64", |b| {
        b.iter(|| {
            let mut table = TransitionTable::new(64);
            for (i, &key) in keys.iter().enumerate() {
                table.record_outcome(key, i % 200, 0.25);
            }
            black_box(table.len())
        })
    });
    group.finish();
}

criterion_group!(benches, predictor_updates, full_simulation, transition_table_ops);
criterion_main!(benches);
