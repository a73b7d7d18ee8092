use std::path::PathBuf;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rg_core::engine::{Cache, Game, GameState, Options};
use rg_core::{load, parse_strict, render_game};

fn corpus(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "corpus", name].iter().collect();
    std::fs::read_to_string(path).unwrap()
}

fn name() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["a", "b", "c", "x", "y", "n0", "node_1", "q"]).prop_map(str::to_string)
}

fn action() -> impl Strategy<Value = String> {
    let sym = prop::sample::select(vec!["0", "1", "2"]);
    prop_oneof![
        Just(String::new()),
        sym.clone().prop_map(|s| format!("v == {s}")),
        sym.clone().prop_map(|s| format!("v != {s}")),
        sym.clone().prop_map(|s| format!("v = {s}")),
        sym.clone().prop_map(|s| format!("m[v] = {s}")),
        sym.clone().prop_map(|s| format!("m[N({s})] == m[v]")),
        sym.prop_map(|s| format!("$ {s}")),
        Just("$$ v".to_string()),
        Just("v = N(*)".to_string()),
        (name(), name(), any::<bool>()).prop_map(|(a, b, neg)| format!("{} {a} -> {b}", if neg { "!" } else { "?" })),
        Just("player = keeper".to_string()),
        Just("player = p".to_string()),
        Just("goals[p] = 1".to_string()),
    ]
}

prop_compose! {
    fn description()(edges in prop::collection::vec((name(), name(), action()), 1..20),
                     init in prop::sample::select(vec!["0", "1", "2"]),
                     pragma in any::<bool>()) -> String {
        let mut s = format!(
            "type Player = {{p}};\ntype Score = {{0, 1}};\ntype N = {{0, 1, 2}};\n\
             const k: N -> N = {{0: 1, :2}};\nvar v: N = {init};\nvar m: N -> N = {{:{init}}};\n"
        );
        if pragma {
            s.push_str("@disjoint a b;\n");
        }
        for (from, to, a) in edges {
            s.push_str(&format!("{from}, {to}: {a};\n"));
        }
        s
    }
}

/// A state reached by `steps` random moves from the start.
fn random_state(g: &Game, seed: u64, steps: usize, c: &mut Cache) -> GameState {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut st = g.settle(&g.initial_state(), c).unwrap();
    for _ in 0..steps {
        if g.is_terminal(&st) {
            break;
        }
        let mut succ = g.successors(&st, c).unwrap();
        let i = rng.random_range(0..succ.len());
        st = g.settle(&succ.swap_remove(i).1, c).unwrap();
    }
    st
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 512, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn render_then_parse_is_identity(text in description()) {
        let g = parse_strict(&text).unwrap();
        let rendered = render_game(&g);
        prop_assert_eq!(parse_strict(&rendered).unwrap(), g);
        prop_assert_eq!(render_game(&parse_strict(&rendered).unwrap()), rendered);
    }

    #[test]
    fn state_json_round_trips(seed in any::<u64>(), steps in 0usize..9) {
        let g = load(&corpus("tictactoe.rg")).unwrap();
        let mut c = Cache::new(Options::default());
        let st = random_state(&g, seed, steps, &mut c);
        let back = g.state_from_json(&g.state_json(&st)).unwrap();
        prop_assert_eq!(back.fingerprint(), st.fingerprint());
        prop_assert!(back == st);
    }

    #[test]
    fn legal_moves_are_sorted_distinct_and_applicable(seed in any::<u64>(), steps in 0usize..8) {
        let g = load(&corpus("tictactoe.rg")).unwrap();
        let mut c = Cache::new(Options::default());
        let st = random_state(&g, seed, steps, &mut c);
        let moves = g.legal_moves(&st, &mut c).unwrap();
        prop_assert!(moves.windows(2).all(|w| w[0] < w[1]));
        if !g.is_terminal(&st) {
            prop_assert!(!moves.is_empty());
        }
        for m in &moves {
            let r = g.apply_move(&st, m, &mut c, true).unwrap();
            prop_assert_eq!(r.views.len(), 2);
            prop_assert!(r.views.iter().all(|v| v == m));
        }
    }

    #[test]
    fn guesser_never_sees_the_placement(seed in any::<u64>()) {
        let g = load(&corpus("hiddencoin.rg")).unwrap();
        let mut c = Cache::new(Options::default());
        let st = g.settle(&g.initial_state(), &mut c).unwrap();
        let moves = g.legal_moves(&st, &mut c).unwrap();
        let m = &moves[(seed % moves.len() as u64) as usize];
        let r = g.apply_move(&st, m, &mut c, true).unwrap();
        let guesser = g.players().iter().position(|p| p.as_str() == "guesser").unwrap();
        prop_assert_eq!(g.format_move(&r.views[guesser]), "hidden");
    }
}
