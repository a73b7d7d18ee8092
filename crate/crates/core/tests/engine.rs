use std::path::PathBuf;

use rg_core::engine::{Cache, Game, Move, Options};
use rg_core::load;

fn corpus(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "corpus", name].iter().collect();
    std::fs::read_to_string(path).unwrap()
}

fn game(name: &str) -> Game {
    load(&corpus(name)).unwrap()
}

fn cache() -> Cache {
    Cache::new(Options::default())
}

#[test]
fn minimal_game_has_one_empty_keeper_move() {
    let g = game("minimal.rg");
    let mut c = cache();
    let s = g.initial_state();
    assert!(g.is_keeper_turn(&s));
    assert_eq!(g.legal_moves(&s, &mut c).unwrap(), vec![Move::default()]);
    let next = g.apply_move(&s, &Move::default(), &mut c, true).unwrap().next;
    let obs = g.observe(&next);
    assert!(obs.terminal);
    assert_eq!(obs.goals.len(), 1);
    assert_eq!(obs.goals[&rg_core::Name::new("x")].as_str(), "0");
}

#[test]
fn tictactoe_counts() {
    let g = game("tictactoe.rg");
    let mut c = cache();
    let s = g.initial_state();
    let p = g.perft(&s, 5, &mut c).unwrap();
    assert_eq!(p.counts, vec![9, 72, 504, 3024, 15120]);
    assert_eq!(g.count_complete_plays(&s, &mut c).unwrap(), 255168);
}

#[test]
fn turing_machine_move() {
    let g = game("turing_n4.rg");
    let mut c = cache();
    let s = g.settle(&g.initial_state(), &mut c).unwrap();
    let moves = g.legal_moves(&s, &mut c).unwrap();
    let names: Vec<String> = moves.iter().map(|m| g.format_move(m)).collect();
    assert_eq!(names, ["r1 r2 r3 r4"]);
}

#[test]
fn hidden_coin_views() {
    let g = game("hiddencoin.rg");
    let mut c = cache();
    let s = g.settle(&g.initial_state(), &mut c).unwrap();
    let moves = g.legal_moves(&s, &mut c).unwrap();
    assert_eq!(moves.len(), 2);
    let r = g.apply_move(&s, &moves[0], &mut c, true).unwrap();
    let views: Vec<String> = r.views.iter().map(|m| g.format_move(m)).collect();
    assert_eq!(views, ["left hidden", "hidden"]);
}
