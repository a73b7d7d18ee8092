use std::path::PathBuf;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_pcg::Pcg32;
use rg_core::engine::{Cache, Game, Options};
use rg_core::prepare_text;
use rg_core::transforms::{run_pipeline, PipelineConfig};

fn corpus(name: &str) -> rg_core::GameDescription {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "corpus", name].iter().collect();
    prepare_text(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn playouts(c: &mut Criterion) {
    for name in ["tictactoe.rg", "coinflip.rg", "hiddencoin.rg", "turing_n4.rg"] {
        let raw = corpus(name);
        let opt = run_pipeline(&raw, &PipelineConfig::default()).unwrap().game;
        for (label, desc) in [("raw", raw), ("optimized", opt)] {
            let game = Game::compile(&desc).unwrap();
            let start = game.initial_state();
            let mut cache = Cache::new(Options::default());
            let mut rng = Pcg32::seed_from_u64(1);
            c.bench_function(&format!("{name}/{label}"), |b| {
                b.iter(|| game.random_playout(&start, &mut rng, &mut cache).unwrap())
            });
        }
    }
}

criterion_group!(benches, playouts);
criterion_main!(benches);
