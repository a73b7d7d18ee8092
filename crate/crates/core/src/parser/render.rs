use crate::model::GameDescription;

/// Canonical text form: declarations sorted by kind and name, then edges in
/// order, then pragmas.
pub fn render_game(g: &GameDescription) -> String {
    let mut out = String::new();
    let section = |out: &mut String, lines: Vec<String>| {
        if lines.is_empty() {
            return;
        }
        if !out.is_empty() {
            out.push('\n');
        }
        for l in lines {
            out.push_str(&l);
            out.push('\n');
        }
    };
    section(&mut out, g.types.iter().map(|(n, d)| format!("type {n} = {};", d.ty)).collect());
    section(&mut out, g.constants.iter().map(|(n, d)| format!("const {n}: {} = {};", d.ty, d.value)).collect());
    section(&mut out, g.variables.iter().map(|(n, d)| format!("var {n}: {} = {};", d.ty, d.init)).collect());
    section(&mut out, g.edges.iter().map(|e| e.to_string()).collect());
    section(&mut out, g.pragmas.iter().map(|p| p.to_string()).collect());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_strict;

    #[test]
    fn round_trip() {
        let src = "var board: Board = {:e, 1: X};\n@disjoint p1 : q1 q2 q3;\nbegin, end: player = keeper;\ntype Board = Coord -> Piece;\n";
        let g = parse_strict(src).unwrap();
        let text = render_game(&g);
        assert!(text.contains("{:e, 1: X}"));
        assert!(text.contains("@disjoint p1 : q1 q2 q3;"));
        assert_eq!(parse_strict(&text).unwrap(), g);
    }
}
