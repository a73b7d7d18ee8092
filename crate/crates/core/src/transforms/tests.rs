use super::*;
use crate::model::Expr;
use crate::parser::parse_strict;
use crate::validate::prepare;

const HEADER: &str = "type Player = {p}; type Score = {0}; type N = {0, 1, 2, 4};\n";

fn game(src: &str) -> GameDescription {
    let g = parse_strict(&format!("{HEADER}{src}")).unwrap();
    prepare(&g).unwrap()
}

fn edges(g: &GameDescription) -> Vec<String> {
    g.edges.iter().map(ToString::to_string).collect()
}

fn pass(src: &str, p: PassId) -> Vec<String> {
    let (out, _) = run_pass(&game(src), p).unwrap();
    edges(&out)
}

#[test]
fn compact_comparisons_uses_the_complement() {
    let out =
        pass("type A = {1, 2, 3}; var x: A = 1; begin, end: x == 1; begin, end: x == 2;", PassId::CompactComparisons);
    assert_eq!(out, vec!["begin, end: x != 3;"]);
}

#[test]
fn compact_comparisons_keeps_a_shorter_form() {
    let src = "type A = {1, 2, 3}; var x: A = 1; begin, end: x == 1;";
    let (_, changed) = run_pass(&game(src), PassId::CompactComparisons).unwrap();
    assert!(!changed);
}

#[test]
fn inline_assignment_replaces_uses() {
    let src = "type C = {0, 1}; const board: C -> C = {:1}; const up: C -> C = {0:1, :0};
        var x: C = 0; var coordX: C = 0; var coordY: C = 0;
        begin, a: coordX = board[x];
        a, b: coordX != coordY;
        b, c: coordX = up[coordX];
        c, d: x = 1;
        d, end: coordX == 1;";
    let out = pass(src, PassId::InlineAssignment);
    assert_eq!(&out[..3], ["begin, a: ;", "a, b: board[x] != coordY;", "b, c: coordX = up[board[x]];"]);
}

#[test]
fn merge_accesses_builds_the_composition() {
    let src = "type A = {1, 2}; type B = {1, 2}; type C = {2, 3, 4};
        const MapAB: A -> B = {1: 1, :2};
        const MapBC: B -> C = {1: 2, 2: 3, :4};
        var x: C = 2;
        begin, end: x = MapBC[MapAB[1]];";
    let (out, changed) = run_pass(&game(src), PassId::MergeAccesses).unwrap();
    assert!(changed);
    assert_eq!(edges(&out), vec!["begin, end: x = _MapBC_MapAB[1];"]);
    let merged = &out.constants[&Name::new("_MapBC_MapAB")];
    assert_eq!(merged.ty.to_string(), "A -> C");
    let env = Env::new(&out).0;
    let s = env.initial_semistate();
    for (key, want) in [("1", "2"), ("2", "3")] {
        let e = Expr::access(Expr::reference("_MapBC_MapAB"), Expr::reference(key));
        let v = crate::model::eval_expr(&e, &env, &s, crate::model::EvalMode::Checked).unwrap();
        assert_eq!(v.to_string(), want);
    }
}

#[test]
fn propagate_constants_folds_known_accesses() {
    let src = "type A = {1, 2, 3, 4}; const down: A -> A = {4: 3, 3: 2, :1};
        var x: A = 3; var y: A = 1;
        begin, a: y = A(*);
        a, b: y == down[x];
        b, end: player = keeper;";
    let g = expand_shorthands(&game(src));
    let (out, _) = run_pass(&g, PassId::PropagateConstants).unwrap();
    assert!(edges(&out).contains(&"a, b: y == 2;".to_string()));
}

#[test]
fn reorder_conditions_hoists_a_shared_label() {
    let src = "begin, a: 4 == 4; begin, b: 2 == 2; a, a1: 1 == 1; b, b1: 4 == 4;
        a1, end: player = keeper; b1, end: player = keeper;";
    let out = pass(src, PassId::ReorderConditions);
    assert_eq!(&out[..4], ["begin, a: 4 == 4;", "begin, b: 4 == 4;", "a, a1: 1 == 1;", "b, b1: 2 == 2;"]);
    assert!(!PassId::ReorderConditions.is_safe());
    assert!(!PipelineConfig::default().passes.contains(&PassId::ReorderConditions));
}

#[test]
fn skip_self_assign_compare() {
    let src = "type A = {1, 2}; var x: A = 1;
        begin, a1: x == x; begin, a2: x != x; begin, a3: x = x;
        a1, end: player = keeper; a3, end: player = keeper; a2, end: player = keeper;";
    let out = pass(src, PassId::SkipSelfAssignCompare);
    assert_eq!(&out[..2], ["begin, a1: ;", "begin, a3: ;"]);
    assert_eq!(out.len(), 5);
}

#[test]
fn join_exclusive_edges() {
    let src = "type A = {1, 2}; var x: A = 1; var y: A = 2;
        begin, end: ? a -> b;
        begin, end: ! a -> b;
        c, d: x == y;
        c, d: x != y;
        a, b: ;";
    let out = pass(src, PassId::JoinExclusiveEdges);
    assert_eq!(out, vec!["begin, end: ;", "c, d: ;", "a, b: ;"]);
}

#[test]
fn join_fork_prefixes() {
    let src = "begin, b: 1 == 1; begin, c: 1 == 1; b, end: 2 == 2; c, d: ;";
    // `c` has no other entry, so it merges into `b` instead of gaining a skip
    let out = pass(src, PassId::JoinForkPrefixes);
    assert_eq!(out, vec!["begin, b: 1 == 1;", "b, end: 2 == 2;", "b, d: ;"]);
}

#[test]
fn join_fork_suffixes() {
    let src = "type A = {1, 2}; var x: A = 1;
        begin, a1: x == 1; begin, a2: x == 2; a1, end: 0 == 0; a2, end: 0 == 0;";
    let out = pass(src, PassId::JoinForkSuffixes);
    assert_eq!(out, vec!["begin, a1: x == 1;", "begin, a1: x == 2;", "a1, end: 0 == 0;"]);
}

#[test]
fn compact_skip_edges() {
    let out = pass("begin, b: 1 == 1; b, c: ; c, end: 2 == 2;", PassId::CompactSkipEdges);
    assert_eq!(out, vec!["begin, c: 1 == 1;", "c, end: 2 == 2;"]);
}

#[test]
fn prune_unreachable_nodes() {
    let src = "begin, b: ? r1 -> target; b, end: ; a, end: ; r1, r2: ; r1, target: ;";
    let out = pass(src, PassId::PruneUnreachableNodes);
    assert_eq!(out, vec!["begin, b: ? r1 -> target;", "b, end: ;", "r1, target: ;"]);
}

#[test]
fn prune_unused_consts_vars() {
    let src = "type A = {1, 2}; const k: A -> A = {:1}; var unused: A = 1; var used: A = 1;
        begin, a: unused = 2; a, b: used == 1; b, end: player = keeper;";
    let (out, changed) = run_pass(&game(src), PassId::PruneUnusedConstsVars).unwrap();
    assert!(changed);
    assert!(!out.constants.contains_key(&Name::new("k")));
    assert!(!out.variables.contains_key(&Name::new("unused")));
    assert!(out.variables.contains_key(&Name::new("used")));
    assert_eq!(edges(&out)[0], "begin, a: ;");
}

#[test]
fn skip_artificial_tags() {
    let src = "begin, a: $ t; a, end: player = keeper; @artificialTag t;";
    let out = pass(src, PassId::SkipArtificialTags);
    assert_eq!(out[0], "begin, a: ;");
}

#[test]
fn skip_unused_tags_inside_checks() {
    let src = "begin, a: ? r1 -> r2; r1, r2: $ t; a, end: player = keeper;";
    let out = pass(src, PassId::SkipUnusedTags);
    assert_eq!(out[1], "r1, r2: ;");
}

#[test]
fn compact_reachability_drops_a_lone_skip() {
    let src = "type A = {1, 2}; var x: A = 1;
        begin, a: ? r0 -> r2; r0, r1: ; r1, r2: x == 1; a, end: player = keeper;";
    let out = pass(src, PassId::CompactReachability);
    assert_eq!(out[0], "begin, a: ? r1 -> r2;");
}

#[test]
fn expand_any_assignment_shape() {
    let src = "type Coord = {0, 1, 2}; var posX: Coord = 0;
        q1, q2: posX = Coord(*); begin, q1: ; q2, end: player = keeper;";
    let out = pass(src, PassId::ExpandAnyAssignment);
    let parallel: Vec<&String> = out.iter().filter(|e| e.starts_with("q1, q2:")).collect();
    assert_eq!(parallel, ["q1, q2: posX = 0;", "q1, q2: posX = 1;", "q1, q2: posX = 2;"]);
}

#[test]
fn expand_variable_tags_shape() {
    let src = "type Coord = {0, 1, 2}; var posX: Coord = 0;
        q1, q2: $$ posX; begin, q1: ; q2, end: player = keeper;";
    let out = pass(src, PassId::ExpandVariableTags);
    let expanded: Vec<&str> =
        out.iter().map(String::as_str).filter(|e| !e.starts_with("begin") && !e.starts_with("q2,")).collect();
    assert_eq!(
        expanded,
        [
            "q1, _q1_0: posX == Coord(0);",
            "_q1_0, q2: $ 0;",
            "q1, _q1_1: posX == Coord(1);",
            "_q1_1, q2: $ 1;",
            "q1, _q1_2: posX == Coord(2);",
            "_q1_2, q2: $ 2;",
        ]
    );
}

#[test]
fn add_explicit_casts_wraps_operands() {
    let src = "type A = {1, 2}; var x: A = 1; begin, a: x == 1; a, end: player = keeper;";
    let out = pass(src, PassId::AddExplicitCasts);
    assert_eq!(out[0], "begin, a: A(x) == A(1);");
}

#[test]
fn normalize_constants_hoists_nested_maps() {
    let src = "type C = {0, 1}; type P = {e, x}; const init: C -> C -> P = {:{:e}};
        var board: C -> C -> P = init; begin, end: player = keeper;";
    let (out, changed) = run_pass(&game(src), PassId::NormalizeConstants).unwrap();
    assert!(changed);
    assert_eq!(out.constants[&Name::new("init")].value.to_string(), "{:_Hoisted_1}");
}

#[test]
fn normalize_types_names_arrow_sides() {
    let src = "type C = {0, 1}; var board: C -> C -> C = {:{:0}}; begin, end: player = keeper;";
    let (out, changed) = run_pass(&game(src), PassId::NormalizeTypes).unwrap();
    assert!(changed);
    assert!(matches!(out.variables[&Name::new("board")].ty, TypeExpr::Alias(_)));
    for d in out.types.values() {
        if let TypeExpr::Arrow(a, b) = &d.ty {
            assert!(matches!(**a, TypeExpr::Alias(_) | TypeExpr::Set(_)));
            assert!(matches!(**b, TypeExpr::Alias(_)));
        }
    }
}

#[test]
fn mangle_keeps_tags_and_special_names() {
    let src = "type A = {1, 2}; var counter: A = 1;
        begin, a: player = p; a, b: $ go; b, c: counter = 2; c, end: player = keeper;";
    let (out, _) = run_pass(&game(src), PassId::MangleSymbols).unwrap();
    let text = render_game(&out);
    assert!(text.contains("$ go"));
    assert!(text.contains("player = keeper"));
    assert!(!text.contains("counter"));
}

#[test]
fn empty_config_runs_no_iterations() {
    let g = game("begin, b: 1 == 1; b, c: ; c, end: 2 == 2;");
    let r = run_pipeline(&g, &PipelineConfig::none()).unwrap();
    assert_eq!(r.iterations, 0);
    assert_eq!(r.game, g);
    assert!(r.snapshots.is_empty());
}

#[test]
fn pipeline_reaches_a_fixed_point() {
    let g = game(
        "type A = {1, 2, 3}; var x: A = 1;
        begin, b: x == 1; begin, b: x == 2; b, c: ; c, d: x == x; d, end: player = keeper;",
    );
    let r = run_pipeline(&g, &PipelineConfig::default()).unwrap();
    assert!(r.warning.is_none());
    assert!(r.game.edges.len() < g.edges.len());
    let again = run_pipeline(&r.game, &PipelineConfig::default()).unwrap();
    assert_eq!(again.game, r.game);
}

#[test]
fn pass_names_parse_back() {
    for &p in PassId::ALL {
        assert_eq!(p.name().parse::<PassId>().unwrap(), p);
        assert_eq!(p.slug().parse::<PassId>().unwrap(), p);
    }
    assert!(matches!("nonsense".parse::<PassId>(), Err(TransformError::UnknownPass(_))));
}

#[test]
fn snapshot_files_are_numbered() {
    let g = game("begin, b: 1 == 1; b, c: ; c, end: 2 == 2;");
    let r = run_pipeline(&g, &PipelineConfig::only([PassId::CompactSkipEdges])).unwrap();
    let files = r.snapshot_files();
    assert_eq!(files.len(), 1);
    assert_eq!(files[0].0, "01_compact_skip_edges.rg");
    assert!(parse_strict(files[0].1).is_ok());
}
