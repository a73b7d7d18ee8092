use crate::diag::{Code, Diagnostic, Span};
use crate::model::{builtin::*, resolve_type, type_equal, GameDescription, Name, TypeExpr, Value};

/// Adds the built-in declarations a description omits and checks the ones
/// it provides. Running it twice changes nothing.
pub fn inject_implicit_definitions(g: &GameDescription) -> (GameDescription, Vec<Diagnostic>) {
    let mut out = g.clone();
    let mut diags = Vec::new();

    let player = required_set(g, PLAYER_TYPE, Code::MissingPlayerType, &mut diags);
    let score = required_set(g, SCORE_TYPE, Code::MissingScoreType, &mut diags);
    let (Some(player), Some(score)) = (player, score) else {
        return (out, diags);
    };
    if let Some(s) = player.iter().find(|s| [KEEPER, RANDOM].contains(&s.as_str())) {
        diags.push(mismatch(g, PLAYER_TYPE, format!("`Player` must not contain `{s}`")));
    }

    let bool_type = TypeExpr::set(["0", "1"]);
    let mut system = player.clone();
    system.extend([Name::new(KEEPER), Name::new(RANDOM)]);
    let builtins_types = [
        (BOOL_TYPE, bool_type.clone(), bool_type.clone()),
        (
            GOALS_TYPE,
            TypeExpr::arrow(TypeExpr::alias(PLAYER_TYPE), TypeExpr::alias(SCORE_TYPE)),
            TypeExpr::arrow(TypeExpr::Set(player.clone()), TypeExpr::Set(score.clone())),
        ),
        (PLAYER_OR_SYSTEM, TypeExpr::Set(system.clone()), TypeExpr::Set(system)),
        (
            VISIBILITY_TYPE,
            TypeExpr::arrow(TypeExpr::alias(PLAYER_TYPE), TypeExpr::alias(BOOL_TYPE)),
            TypeExpr::arrow(TypeExpr::Set(player.clone()), bool_type),
        ),
    ];
    for (name, declared, expected) in builtins_types {
        match g.types.get(name) {
            None => out.add_type(name, declared),
            Some(decl) => match resolve_type(&decl.ty, &g.types) {
                Ok(t) if type_equal(&t, &expected) => {}
                Ok(_) => diags.push(mismatch(g, name, format!("`{name}` must be `{expected}`"))),
                // reported by the static checks
                Err(_) => {}
            },
        }
    }

    let builtin_vars = [
        (GOALS, GOALS_TYPE, Value::map(Value::Symbol(score[0].clone()), []), false),
        (PLAYER, PLAYER_OR_SYSTEM, Value::symbol(KEEPER), true),
        (VISIBLE, VISIBILITY_TYPE, Value::map(Value::symbol("1"), []), false),
    ];
    for (name, type_name, init, fixed_init) in builtin_vars {
        match g.variables.get(name) {
            None => out.add_variable(name, TypeExpr::alias(type_name), init),
            Some(decl) => {
                let declared = resolve_type(&decl.ty, &out.types);
                let expected = resolve_type(&TypeExpr::alias(type_name), &out.types);
                if let (Ok(d), Ok(e)) = (declared, expected) {
                    if !type_equal(&d, &e) {
                        diags.push(Diagnostic::error(
                            Code::MismatchedBuiltin,
                            decl.span,
                            format!("variable `{name}` must have type `{type_name}`"),
                        ));
                    }
                }
                if fixed_init && decl.init != init {
                    diags.push(Diagnostic::error(
                        Code::MismatchedBuiltin,
                        decl.span,
                        format!("variable `{name}` must start as `{init}`"),
                    ));
                }
            }
        }
    }
    (out, diags)
}

fn required_set(g: &GameDescription, name: &str, missing: Code, diags: &mut Vec<Diagnostic>) -> Option<Vec<Name>> {
    let Some(decl) = g.types.get(name) else {
        diags.push(Diagnostic::error(missing, Span::default(), format!("type `{name}` is not declared")));
        return None;
    };
    match resolve_type(&decl.ty, &g.types) {
        Ok(TypeExpr::Set(symbols)) if !symbols.is_empty() => Some(symbols),
        Ok(_) => {
            diags.push(mismatch(g, name, format!("`{name}` must be a non-empty set type")));
            None
        }
        Err(e) => {
            diags.push(e.at(decl.span));
            None
        }
    }
}

fn mismatch(g: &GameDescription, name: &str, message: String) -> Diagnostic {
    let span = g.types.get(name).map(|d| d.span).unwrap_or_default();
    Diagnostic::error(Code::MismatchedBuiltin, span, message)
}
