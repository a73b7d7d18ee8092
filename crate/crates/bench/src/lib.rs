//! Flat Monte Carlo playout benchmarks: throughput of uniformly random
//! playouts and raw-versus-optimized comparisons.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_pcg::Pcg32;
use rg_core::engine::{Cache, Game, Options};
use serde::Serialize;
use thiserror::Error;

/// Identifier of the generator used for every playout.
pub const RNG_NAME: &str = "pcg32 (Lcg64Xsh32), seeded per playout by splitmix64(splitmix64(seed) + k)";

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mode {
    /// Run until the wall clock passes the duration.
    Duration(Duration),
    /// Run exactly this many playouts.
    Count(u64),
}

#[derive(Clone, Copy, Debug)]
pub struct BenchConfig {
    pub mode: Mode,
    pub seed: u64,
    pub workers: usize,
    pub options: Options,
}

impl BenchConfig {
    pub fn count(playouts: u64, seed: u64) -> BenchConfig {
        BenchConfig { mode: Mode::Count(playouts), seed, workers: 1, options: Options::default() }
    }

    pub fn duration(d: Duration, seed: u64) -> BenchConfig {
        BenchConfig { mode: Mode::Duration(d), seed, workers: 1, options: Options::default() }
    }
}

/// Wall-clock measurements. Never part of a determinism comparison.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Timing {
    pub seconds: f64,
    pub playouts_per_sec: f64,
    pub states_per_sec: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub game: String,
    pub mode: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration_secs: Option<f64>,
    pub seed: u64,
    pub rng: &'static str,
    pub workers: usize,
    pub playouts: u64,
    /// Playouts that hit the traversal budget; they count as not completed.
    pub failed: u64,
    pub mean_length: f64,
    /// Transitions taken by the move generator.
    pub states_visited: u64,
    /// Final goals, rendered `player=score` in `Player` order, to count.
    pub histogram: BTreeMap<String, u64>,
    pub timing: Timing,
}

impl BenchReport {
    /// Report without its `timing` part, as JSON.
    pub fn deterministic_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v.as_object_mut().expect("object").remove("timing");
        v
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "game            {}", self.game);
        match self.duration_secs {
            Some(d) => {
                let _ = writeln!(s, "mode            {} ({d:.1} s)", self.mode);
            }
            None => {
                let _ = writeln!(s, "mode            {}", self.mode);
            }
        }
        let _ = writeln!(s, "seed            {}", self.seed);
        let _ = writeln!(s, "workers         {}", self.workers);
        let _ = writeln!(s, "playouts        {}", self.playouts);
        if self.failed > 0 {
            let _ = writeln!(s, "failed          {}", self.failed);
        }
        let _ = writeln!(s, "playouts/sec    {:.1}", self.timing.playouts_per_sec);
        let _ = writeln!(s, "states/sec      {:.1}", self.timing.states_per_sec);
        let _ = writeln!(s, "mean length     {:.3}", self.mean_length);
        for (goals, n) in &self.histogram {
            let _ = writeln!(s, "  {n:>10}  {goals}");
        }
        s
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("goal histograms differ between raw and optimized games")]
    HistogramMismatch { raw: BTreeMap<String, u64>, optimized: BTreeMap<String, u64> },
}

/// splitmix64 finalizer over `x`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for playout number `k`. Seeding per playout makes the results
/// of a fixed-count run independent of how playouts are split over workers;
/// mixing `seed` first keeps nearby seeds from sharing playouts.
pub fn playout_rng(seed: u64, k: u64) -> Pcg32 {
    Pcg32::seed_from_u64(splitmix64(splitmix64(seed).wrapping_add(k)))
}

#[derive(Default)]
struct Tally {
    playouts: u64,
    failed: u64,
    length: u64,
    states: u64,
    histogram: BTreeMap<Vec<u32>, u64>,
}

impl Tally {
    fn merge(&mut self, other: Tally) {
        self.playouts += other.playouts;
        self.failed += other.failed;
        self.length += other.length;
        self.states += other.states;
        for (k, v) in other.histogram {
            *self.histogram.entry(k).or_default() += v;
        }
    }
}

fn worker(game: &Game, cfg: &BenchConfig, index: usize, deadline: Option<Instant>) -> Tally {
    let mut c = Cache::new(cfg.options);
    let mut t = Tally::default();
    let start = game.initial_state();
    let step = cfg.workers as u64;
    let mut k = index as u64;
    loop {
        match cfg.mode {
            Mode::Count(n) if k >= n => break,
            Mode::Duration(_) if deadline.is_some_and(|d| Instant::now() >= d) => break,
            _ => {}
        }
        let mut rng = playout_rng(cfg.seed, k);
        match game.random_playout(&start, &mut rng, &mut c) {
            Ok(p) => {
                t.playouts += 1;
                t.length += u64::from(p.length);
                *t.histogram.entry(p.goals).or_default() += 1;
            }
            Err(_) => t.failed += 1,
        }
        k += step;
    }
    t.states = c.total_transitions();
    t
}

/// Runs random playouts from the initial state and reports throughput and
/// the distribution of final goals. Only the playout loop is timed.
pub fn benchmark(game: &Game, name: &str, cfg: &BenchConfig) -> BenchReport {
    let workers = cfg.workers.max(1);
    let cfg = BenchConfig { workers, ..*cfg };
    let began = Instant::now();
    let deadline = match cfg.mode {
        Mode::Duration(d) => Some(began + d),
        Mode::Count(_) => None,
    };
    let mut total = Tally::default();
    if workers == 1 {
        total = worker(game, &cfg, 0, deadline);
    } else {
        let parts: Vec<Tally> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..workers).map(|i| s.spawn(move || worker(game, &cfg, i, deadline))).collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        });
        for p in parts {
            total.merge(p);
        }
    }
    let seconds = began.elapsed().as_secs_f64().max(f64::MIN_POSITIVE);
    let players = game.players();
    let histogram = total
        .histogram
        .into_iter()
        .map(|(goals, n)| {
            let text: Vec<String> =
                players.iter().zip(goals).map(|(p, g)| format!("{p}={}", game.symbol_name(g))).collect();
            (text.join(" "), n)
        })
        .collect();
    BenchReport {
        game: name.to_string(),
        mode: match cfg.mode {
            Mode::Duration(_) => "duration",
            Mode::Count(_) => "count",
        },
        duration_secs: match cfg.mode {
            Mode::Duration(d) => Some(d.as_secs_f64()),
            Mode::Count(_) => None,
        },
        seed: cfg.seed,
        rng: RNG_NAME,
        workers,
        playouts: total.playouts,
        failed: total.failed,
        mean_length: if total.playouts == 0 { 0.0 } else { total.length as f64 / total.playouts as f64 },
        states_visited: total.states,
        histogram,
        timing: Timing {
            seconds,
            playouts_per_sec: total.playouts as f64 / seconds,
            states_per_sec: total.states as f64 / seconds,
        },
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Comparison {
    pub raw: BenchReport,
    pub optimized: BenchReport,
    /// Optimized over raw playouts per second.
    pub ratio: f64,
}

/// Benchmarks both games with the same configuration. In fixed-count mode
/// the goal histograms must agree.
pub fn compare(raw: &Game, optimized: &Game, name: &str, cfg: &BenchConfig) -> Result<Comparison, BenchError> {
    let r = benchmark(raw, name, cfg);
    let o = benchmark(optimized, name, cfg);
    if matches!(cfg.mode, Mode::Count(_)) && r.histogram != o.histogram {
        return Err(BenchError::HistogramMismatch { raw: r.histogram, optimized: o.histogram });
    }
    let ratio = o.timing.playouts_per_sec / r.timing.playouts_per_sec.max(f64::MIN_POSITIVE);
    Ok(Comparison { raw: r, optimized: o, ratio })
}
