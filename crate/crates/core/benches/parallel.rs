use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use stratswitch::cert::{certify, simplex_grid, CertifyOptions};
use stratswitch::exec::{self, Mode};
use stratswitch::fixtures::{corpus_params, winning_corpus, RandomGameParams};
use stratswitch::synthesis::Synthesizer;

const MODES: [(&str, Mode); 2] = [("parallel", Mode::Parallel), ("sequential", Mode::Sequential)];

fn synthesizers() -> Vec<Synthesizer> {
    let params = RandomGameParams { min_states: 30, max_states: 60, max_goal_size: 3, ..corpus_params() };
    winning_corpus(8, 1, &params).into_iter().map(|(_, g, s)| Synthesizer::new(&g, &s).unwrap()).collect()
}

fn synthesize_grid(c: &mut Criterion) {
    let synths = synthesizers();
    let mut group = c.benchmark_group("synthesize_grid");
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                for synth in &synths {
                    let grid = simplex_grid(synth.num_scenarios(), 10);
                    let out = exec::map(mode, &grid, |p| synth.synthesize(p).map(|s| s.memory_count()));
                    black_box(out);
                }
            })
        });
    }
    group.finish();
}

fn certify_corpus(c: &mut Criterion) {
    let synths = synthesizers();
    let mut group = c.benchmark_group("certify");
    for (name, mode) in MODES {
        let opts = CertifyOptions { grid: 8, mode, ..CertifyOptions::default() };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                for synth in &synths {
                    let cands = simplex_grid(synth.num_scenarios(), 2);
                    black_box(certify(synth, cands, &opts).unwrap());
                }
            })
        });
    }
    group.finish();
}

criterion_group!(benches, synthesize_grid, certify_corpus);
criterion_main!(benches);
