//! Acceptance suite: one line per criterion, exit status 1 if any fails.

mod oracles;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use proptest::collection::{btree_map, btree_set, vec};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::Rng;
use rg_bench::{benchmark, compare, playout_rng, BenchConfig};
use rg_cli::manifest::{CorpusManifest, ManifestEntry};
use rg_cli::play::{play, seat_map, Seat};
use rg_core::engine::{Cache, EngineError, Game, GameState, Move, Options, Perft};
use rg_core::transforms::{
    analyze, check_laws, flow_edges, run_pass, run_pipeline, Analysis, ConstantValues, Def, Knowledge, Known, PassId,
    PipelineConfig, Positions, ReachingDefinitions, TagPositions, TransformError,
};
use rg_core::validate::{check_proper, reproduces, Condition, ProperBudget, Verdict};
use rg_core::{parse_game, parse_strict, prepare_text, render_game, Action, GameDescription, Name};

use oracles::turing::Rule;

type Outcome = Result<String, String>;

fn corpus_dir() -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "..", "..", "corpus"].iter().collect()
}

fn manifest() -> CorpusManifest {
    CorpusManifest::load(&corpus_dir().join("manifest.json")).expect("manifest")
}

fn text(file: &str) -> String {
    std::fs::read_to_string(corpus_dir().join(file)).expect("corpus file")
}

fn prepared(file: &str) -> GameDescription {
    prepare_text(&text(file)).expect("corpus game is valid")
}

fn compile(g: &GameDescription) -> Game {
    Game::compile(g).expect("compiles")
}

fn cache() -> Cache {
    Cache::new(Options::default())
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn positives(m: &CorpusManifest) -> Vec<&ManifestEntry> {
    m.games.iter().filter(|e| !e.is_negative()).collect()
}

fn c1_parser() -> Outcome {
    let m = manifest();
    ensure(m.games.len() == 9, || format!("expected 9 corpus files, found {}", m.games.len()))?;
    for e in &m.games {
        let once = parse_strict(&text(&e.file)).map_err(|d| format!("{}: {:?}", e.file, d[0]))?;
        let twice = parse_strict(&render_game(&once)).map_err(|d| format!("{} rendered: {:?}", e.file, d[0]))?;
        ensure(once == twice, || format!("{}: round trip changed the description", e.file))?;
    }

    let seeds: Vec<String> = m.games.iter().map(|e| text(&e.file)).collect();
    const WORDS: &[&str] = &[
        "type", "const", "var", "begin", "end", "player", "keeper", "random", "goals", "visible", "=", "==", "!=",
        "->", "?", "!", "$", "$$", ":", ";", ",", "{", "}", "[", "]", "(", ")", "*", "@", "x", "0", "1", "Bool", "//",
        "/*", "*/", "\n", " ", "é", "\u{0}",
    ];
    let mut rng = playout_rng(0xf022, 0);
    for k in 0..10_000u32 {
        let len = rng.random_range(0..=1024usize);
        let input: String = match k % 3 {
            0 => {
                let bytes: Vec<u8> = (0..len).map(|_| rng.random()).collect();
                String::from_utf8_lossy(&bytes).into_owned()
            }
            1 => {
                let mut s = String::new();
                while s.len() < len {
                    s.push_str(WORDS[rng.random_range(0..WORDS.len())]);
                    if rng.random_bool(0.5) {
                        s.push(' ');
                    }
                }
                s
            }
            _ => {
                let src = seeds[rng.random_range(0..seeds.len())].as_bytes();
                let a = rng.random_range(0..src.len());
                let b = (a + len).min(src.len());
                let mut bytes = src[a..b].to_vec();
                for _ in 0..rng.random_range(0..4) {
                    if !bytes.is_empty() {
                        let i = rng.random_range(0..bytes.len());
                        bytes[i] = rng.random();
                    }
                }
                String::from_utf8_lossy(&bytes).into_owned()
            }
        };
        let input: String = input.chars().take(1024).collect();
        let result = catch_unwind(AssertUnwindSafe(|| {
            let (g, diags) = parse_game(&input);
            if diags.iter().all(|d| !d.is_error()) {
                let _ = prepare_text(&input);
                let _ = render_game(&g);
            }
        }));
        ensure(result.is_ok(), || format!("parser panicked on fuzz input {k}: {input:?}"))?;
    }
    Ok("9 round trips, 10000 fuzz inputs".into())
}

fn c2_minimal() -> Outcome {
    let g = compile(&prepared("minimal.rg"));
    let mut c = cache();
    let s = g.initial_state();
    ensure(g.is_keeper_turn(&s), || "keeper is not on move".into())?;
    let moves = g.legal_moves(&s, &mut c).map_err(|e| e.to_string())?;
    ensure(moves == vec![Move::default()], || format!("moves: {moves:?}"))?;
    let next = g.apply_move(&s, &moves[0], &mut c, true).map_err(|e| e.to_string())?.next;
    let obs = g.observe(&next);
    let goals: BTreeMap<String, String> = obs.goals.iter().map(|(p, s)| (p.to_string(), s.to_string())).collect();
    ensure(obs.terminal, || "not terminal after the keeper move".into())?;
    ensure(goals == BTreeMap::from([("x".to_string(), "0".to_string())]), || format!("goals {goals:?}"))?;
    Ok("one keeper move, terminal, goals x=0".into())
}

fn c3_tictactoe() -> Outcome {
    let (counts, plays) = oracles::tictactoe::enumerate(5);
    ensure(counts == [9, 72, 504, 3024, 15120], || format!("oracle counts {counts:?}"))?;
    ensure(plays == 255_168, || format!("oracle plays {plays}"))?;
    let g = compile(&prepared("tictactoe.rg"));
    let mut c = cache();
    let s = g.initial_state();
    let p = g.perft(&s, 5, &mut c).map_err(|e| e.to_string())?;
    ensure(p.counts == counts, || format!("engine perft {:?}", p.counts))?;
    let n = g.count_complete_plays(&s, &mut c).map_err(|e| e.to_string())?;
    ensure(n == plays, || format!("engine plays {n}"))?;
    Ok(format!("perft {counts:?}, {plays} complete plays"))
}

fn c4_proper() -> Outcome {
    let m = manifest();
    let mut states = 0;
    for e in &m.games {
        let game = compile(&prepared(&e.file));
        let report = check_proper(&game, &ProperBudget::default());
        states += report.states;
        for r in &report.results {
            let want = e.verdicts.get(&r.condition.number().to_string()).map(String::as_str);
            let got = match r.verdict {
                Verdict::Pass => "pass",
                Verdict::Fail => "fail",
                Verdict::Unknown => "unknown",
            };
            ensure(want == Some(got), || {
                format!("{} condition {}: {got}, expected {want:?}", e.file, r.condition.number())
            })?;
        }
        if let Some(n) = e.negative_condition() {
            let cond = Condition::from_number(n).ok_or("bad condition number")?;
            ensure(report.failed() == vec![cond], || format!("{}: failed {:?}", e.file, report.failed()))?;
            ensure(reproduces(&game, report.get(cond)), || format!("{}: witness does not reproduce", e.file))?;
        }
    }
    Ok(format!("{} games, {states} states explored", m.games.len()))
}

fn perft(g: &GameDescription, depth: usize) -> Perft {
    let game = compile(g);
    game.perft(&game.initial_state(), depth, &mut cache()).expect("perft")
}

/// Longest play counted in non-keeper moves, at least 1.
fn max_play_length(g: &Game) -> u32 {
    fn rec(g: &Game, st: &GameState, c: &mut Cache) -> u32 {
        if g.is_terminal(st) {
            return 0;
        }
        let mut best = 0;
        for (_, next) in g.successors(st, c).expect("successors") {
            let next = g.settle(&next, c).expect("keeper");
            best = best.max(1 + rec(g, &next, c));
        }
        best
    }
    let mut c = cache();
    let start = g.settle(&g.initial_state(), &mut c).expect("keeper");
    rec(g, &start, &mut c).max(1)
}

fn c5_preservation() -> Outcome {
    let m = manifest();
    let mut checked = 0;
    for e in positives(&m) {
        let g = prepared(&e.file);
        let want = e.perft.as_ref().ok_or_else(|| format!("{}: no perft in manifest", e.file))?;
        let base = perft(&g, want.depth);
        ensure(base.counts == want.counts, || format!("{}: perft {:?}", e.file, base.counts))?;

        let game = compile(&g);
        if let Some(n) = e.complete_plays {
            let got = game.count_complete_plays(&game.initial_state(), &mut cache()).map_err(|e| e.to_string())?;
            ensure(got == n, || format!("{}: {got} complete plays", e.file))?;
        }
        if let Some(n) = e.max_play_length {
            let got = max_play_length(&game);
            ensure(got == n, || format!("{}: max play length {got}", e.file))?;
        }

        for &pass in PassId::ALL.iter().filter(|p| p.is_safe()) {
            let out = match run_pass(&g, pass) {
                Ok((out, _)) => out,
                Err(TransformError::PassPreconditionUnmet { .. }) => continue,
                Err(err) => return Err(format!("{} {pass}: {err}", e.file)),
            };
            ensure(perft(&out, want.depth) == base, || format!("{} changed by {pass}", e.file))?;
            checked += 1;
        }
        let opt = run_pipeline(&g, &PipelineConfig::default()).map_err(|err| err.to_string())?.game;
        ensure(perft(&opt, want.depth) == base, || format!("{} changed by the pipeline", e.file))?;
        compare(&game, &compile(&opt), &e.file, &BenchConfig::count(5_000, 1))
            .map_err(|err| format!("{}: {err}", e.file))?;
    }
    Ok(format!("{checked} single-pass runs, pipeline and histograms identical"))
}

fn c6_shorthands() -> Outcome {
    let src = "type Player = {p}; type Score = {0}; type Coord = {0, 1, 2}; var pos: Coord = 0;\n\
               begin, a: player = p; a, b: pos = Coord(*); b, c: $$ pos; c, end: player = keeper;";
    let g =
        rg_core::validate::prepare(&parse_strict(src).map_err(|d| format!("{d:?}"))?).map_err(|d| format!("{d:?}"))?;

    let (any, _) = run_pass(&g, PassId::ExpandAnyAssignment).map_err(|e| e.to_string())?;
    let from_a: Vec<_> = any.edges.iter().filter(|e| e.from.as_str() == "a").collect();
    ensure(from_a.len() == 3 && from_a.iter().all(|e| e.to.as_str() == "b"), || format!("{from_a:?}"))?;
    let assigned: BTreeSet<String> = from_a
        .iter()
        .map(|e| match &e.action {
            Action::Assign { rhs, .. } => Ok(rhs.to_string()),
            other => Err(format!("not an assignment: {other}")),
        })
        .collect::<Result<_, _>>()?;
    ensure(assigned.len() == 3, || format!("{assigned:?}"))?;
    ensure(any.edges.len() == g.edges.len() + 2, || "edge count".into())?;

    let (tags, _) = run_pass(&g, PassId::ExpandVariableTags).map_err(|e| e.to_string())?;
    let from_b: Vec<_> = tags.edges.iter().filter(|e| e.from.as_str() == "b").collect();
    ensure(from_b.len() == 3, || format!("{from_b:?}"))?;
    let mut tagged = BTreeSet::new();
    for e in &from_b {
        ensure(matches!(e.action, Action::Compare { .. }), || format!("not a comparison: {}", e.action))?;
        ensure(!g.nodes().contains(&e.to), || format!("`{}` is not fresh", e.to))?;
        let next: Vec<_> = tags.edges.iter().filter(|x| x.from == e.to).collect();
        ensure(next.len() == 1 && next[0].to.as_str() == "c", || format!("{next:?}"))?;
        match &next[0].action {
            Action::Tag(t) => tagged.insert(t.to_string()),
            other => return Err(format!("not a tag: {other}")),
        };
    }
    ensure(tagged == BTreeSet::from(["0".into(), "1".into(), "2".into()]), || format!("{tagged:?}"))?;
    Ok("3 parallel assignments, 3 comparison+tag paths".into())
}

fn c7_randomness() -> Outcome {
    let g = compile(&prepared("coinflip.rg"));
    let mut freqs = Vec::new();
    for seed in 1..=10u64 {
        let r = benchmark(&g, "coinflip", &BenchConfig::count(100_000, seed));
        let heads = r.histogram.get("p=1").copied().unwrap_or(0);
        let f = heads as f64 / r.playouts as f64;
        ensure((0.48..=0.52).contains(&f), || format!("seed {seed}: heads frequency {f}"))?;
        freqs.push(f);
    }
    let (lo, hi) = freqs.iter().fold((1.0f64, 0.0f64), |(l, h), f| (l.min(*f), h.max(*f)));
    Ok(format!("heads frequency in [{lo:.4}, {hi:.4}] over 10 seeds"))
}

fn c8_hidden() -> Outcome {
    let g = compile(&prepared("hiddencoin.rg"));
    let seats = seat_map(&g, &[], Seat::Random).map_err(|e| e.to_string())?;
    let placements = ["left", "right"];
    for seed in 0..1000u64 {
        let mut rng = playout_rng(seed, 0);
        let log = play(&g, &seats, Options::default(), &mut rng, std::io::empty(), std::io::sink())
            .map_err(|e| e.to_string())?;
        ensure(log.finished, || format!("session {seed} did not finish"))?;
        let from_hider = |seat: &str| -> Vec<Vec<String>> {
            log.histories
                .get(&Name::new(seat))
                .into_iter()
                .flatten()
                .filter(|s| s.mover.as_str() == "hider")
                .map(|s| s.tags.iter().map(|t| t.to_string()).collect())
                .collect()
        };
        let guesser = from_hider("guesser");
        ensure(guesser == vec![vec!["hidden".to_string()]], || format!("session {seed}: guesser saw {guesser:?}"))?;
        let hider = from_hider("hider");
        ensure(hider.len() == 1 && placements.contains(&hider[0][0].as_str()), || {
            format!("session {seed}: hider saw {hider:?}")
        })?;
    }
    Ok("1000 sessions, placement hidden from the guesser".into())
}

type Samples = (Vec<Knowledge>, Vec<BTreeSet<(Name, Def)>>, Vec<Positions>);

fn strategies() -> impl Strategy<Value = Samples> {
    let symbol = prop::sample::select(vec!["0", "1", "e", "x", "o", "i0", "heads"]).prop_map(Name::new);
    let var = prop::sample::select(vec!["a", "b", "c", "board", "me"]).prop_map(Name::new);
    let known = prop_oneof![symbol.clone().prop_map(Known::Const), Just(Known::Varies)];
    let knowledge = prop_oneof![
        1 => Just(Knowledge::Unreached),
        6 => btree_map(var.clone(), known, 0..5).prop_map(Knowledge::Reached),
    ];
    let def = prop_oneof![Just(Def::Init), (0usize..60).prop_map(Def::Edge)];
    let defs = btree_set((var, def), 0..6);
    let node = prop::sample::select(vec!["begin", "end", "a", "b", "c", "judge"]).prop_map(Name::new);
    let positions = prop_oneof![
        1 => Just(Positions::Many),
        6 => btree_set((node, 0u32..34), 0..5).prop_map(Positions::Set),
    ];
    (vec(knowledge, 3), vec(defs, 3), vec(positions, 3))
}

/// Constant-value knowledge over a fixed variable set, as the analysis
/// produces it.
fn complete(k: Knowledge, vars: &BTreeSet<Name>) -> Knowledge {
    match k {
        Knowledge::Unreached => Knowledge::Unreached,
        Knowledge::Reached(m) => {
            Knowledge::Reached(vars.iter().map(|v| (v.clone(), m.get(v).cloned().unwrap_or(Known::Varies))).collect())
        }
    }
}

/// Samples plus joins of them, so ordered pairs (chains) are present.
fn with_chains<A: Analysis>(a: &A, mut xs: Vec<A::Domain>) -> Vec<A::Domain> {
    let ab = a.join(&xs[0], &xs[1]);
    let abc = a.join(&ab, &xs[2]);
    xs.push(ab);
    xs.push(abc);
    xs
}

fn c9_dataflow() -> Outcome {
    let m = manifest();
    let mut games = Vec::new();
    for e in &m.games {
        let g = prepared(&e.file);
        if !e.is_negative() {
            let opt = run_pipeline(&g, &PipelineConfig::default()).map_err(|err| err.to_string())?.game;
            games.push((format!("{} (optimized)", e.file), opt));
        }
        games.push((e.file.clone(), g));
    }
    fn same<A: Analysis>(name: &str, g: &GameDescription, a: &A, label: &str) -> Result<(), String> {
        let fast = analyze(g, a).map_err(|e| format!("{name} {label}: {e}"))?;
        ensure(fast == oracles::round_robin(g, a), || format!("{name}: {label} differs from round robin"))
    }
    for (name, g) in &games {
        same(name, g, &ConstantValues::new(g), "constant values")?;
        same(name, g, &ReachingDefinitions::new(g), "reaching definitions")?;
        same(name, g, &TagPositions::new(g), "tag positions")?;
    }

    let ttt = prepared("tictactoe.rg");
    let flows = flow_edges(&ttt);
    let cv = ConstantValues::new(&ttt);
    let Knowledge::Reached(init) = cv.extreme() else { return Err("extreme is unreached".into()) };
    let vars: BTreeSet<Name> = init.keys().cloned().collect();
    let rd = ReachingDefinitions::new(&ttt);
    let tp = TagPositions::new(&ttt);

    let mut runner = TestRunner::new_with_rng(
        Config { failure_persistence: None, ..Config::with_cases(10_000) },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    );
    runner
        .run(&strategies(), |(k, d, p)| {
            let k: Vec<Knowledge> = k.into_iter().map(|x| complete(x, &vars)).collect();
            check_laws(&cv, &with_chains(&cv, k), &flows).map_err(TestCaseError::fail)?;
            check_laws(&rd, &with_chains(&rd, d), &flows).map_err(TestCaseError::fail)?;
            check_laws(&tp, &with_chains(&tp, p), &flows).map_err(TestCaseError::fail)?;
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(format!("{} descriptions x 3 analyses match round robin; 10000 lattice cases", games.len()))
}

fn rule(state: u8, read: u8, next: u8, write: u8, right: bool) -> Rule {
    Rule { state, read, next, write, right }
}

fn c10_turing() -> Outcome {
    let accepting =
        vec![rule(0, 0, 1, 1, true), rule(1, 0, 2, 1, false), rule(2, 1, 0, 1, true), rule(0, 1, 3, 0, true)];
    let machines: Vec<(&str, Vec<Rule>)> = vec![
        ("corpus", accepting.clone()),
        ("halts without a rule", accepting[..3].to_vec()),
        ("leaves the tape", vec![rule(0, 0, 1, 1, false), rule(1, 0, 3, 1, true)]),
        ("accepts off the tape", vec![rule(0, 0, 3, 1, false)]),
        (
            "borrows moving left",
            vec![rule(0, 0, 1, 1, true), rule(1, 0, 2, 1, true), rule(2, 0, 0, 1, false), rule(0, 1, 3, 0, true)],
        ),
        ("walks off the right end", vec![rule(0, 0, 0, 1, true)]),
    ];
    let generated = oracles::turing::game(&accepting);
    let corpus = parse_strict(&text("turing_n4.rg")).map_err(|d| format!("{d:?}"))?;
    ensure(parse_strict(&generated).map_err(|d| format!("{d:?}"))? == corpus, || {
        "corpus machine differs from the generated encoding".into()
    })?;
    let (mut yes, mut no) = (0, 0);
    for (label, rules) in &machines {
        let expected = oracles::turing::accepts(rules);
        let game = compile(&prepare_text(&oracles::turing::game(rules)).map_err(|e| format!("{label}: {e}"))?);
        let mut c = cache();
        let start = game.settle(&game.initial_state(), &mut c).map_err(|e| format!("{label}: {e}"))?;
        let moves = game.legal_moves(&start, &mut c).map_err(|e| format!("{label}: {e}"))?;
        ensure(!moves.is_empty() == expected, || format!("{label}: simulator says {expected}, moves {moves:?}"))?;
        if expected {
            yes += 1;
        } else {
            no += 1;
        }
    }
    ensure(yes >= 1 && no >= 1, || "need accepting and rejecting machines".into())?;

    // A machine that cycles while emitting tags has unboundedly many walk
    // prefixes; the search must stop at the budget rather than report a move.
    let looping = vec![rule(0, 0, 1, 0, true), rule(1, 0, 0, 0, false)];
    ensure(!oracles::turing::accepts(&looping), || "looping machine accepted".into())?;
    let game = compile(&prepare_text(&oracles::turing::game(&looping)).map_err(|e| e.to_string())?);
    let mut c = Cache::new(Options { budget: 100_000, ..Options::default() });
    let start = game.settle(&game.initial_state(), &mut c).map_err(|e| e.to_string())?;
    let r = game.legal_moves(&start, &mut c);
    ensure(matches!(r, Err(EngineError::BudgetExceeded(_))), || format!("looping machine: {r:?}"))?;
    Ok(format!("{yes} accepting, {no} rejecting machines agree with the simulator"))
}

fn c11_throughput() -> Outcome {
    let m = manifest();
    let mut ratios = Vec::new();
    for e in positives(&m) {
        let g = prepared(&e.file);
        let raw = compile(&g);
        let opt = compile(&run_pipeline(&g, &PipelineConfig::default()).map_err(|err| err.to_string())?.game);
        let cfg = BenchConfig::duration(Duration::from_millis(400), 1);
        let (mut best_raw, mut best_opt) = (0.0f64, 0.0f64);
        for _ in 0..3 {
            best_raw = best_raw.max(benchmark(&raw, &e.file, &cfg).timing.playouts_per_sec);
            best_opt = best_opt.max(benchmark(&opt, &e.file, &cfg).timing.playouts_per_sec);
        }
        let ratio = best_opt / best_raw;
        ensure(ratio >= 0.9, || format!("{}: ratio {ratio:.3}", e.file))?;
        ratios.push(format!("{} {ratio:.2}", Path::new(&e.file).file_stem().unwrap().to_string_lossy()));
    }
    Ok(ratios.join(", "))
}

fn main() {
    type Criterion = (u32, &'static str, fn() -> Outcome, u64);
    let criteria: [Criterion; 11] = [
        (1, "parser round trip and fuzz", c1_parser, 10),
        (2, "minimal game", c2_minimal, 10),
        (3, "tic-tac-toe oracles", c3_tictactoe, 60),
        (4, "proper-description checker", c4_proper, 120),
        (5, "optimization preserves semantics", c5_preservation, 600),
        (6, "shorthand expansion", c6_shorthands, 10),
        (7, "randomness", c7_randomness, 30),
        (8, "imperfect information", c8_hidden, 60),
        (9, "data-flow framework", c9_dataflow, 60),
        (10, "turing machine game", c10_turing, 60),
        (11, "throughput non-regression", c11_throughput, 300),
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (n, title, f, limit) in criteria {
        if !filter.is_empty() && !filter.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(f).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        let result = match result {
            Ok(_) if secs > limit as f64 => Err(format!("took {secs:.1} s, limit {limit} s")),
            other => other,
        };
        match result {
            Ok(detail) => println!("criterion {n:>2} PASS ({secs:6.2} s) {title}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {n:>2} FAIL ({secs:6.2} s) {title}: {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
