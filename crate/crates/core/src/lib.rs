//! Regular Games: parsing, validation, optimization and interpretation of
//! finite-automaton game descriptions.

pub mod diag;
pub mod dot;
pub mod engine;
pub mod graph;
pub mod model;
pub mod parser;
pub mod transforms;
pub mod validate;

use thiserror::Error;

pub use diag::{Code, Diagnostic, Severity, Span};
pub use model::{Action, Edge, Expr, ExprKind, GameDescription, Name, Pragma, TypeExpr, Value};
pub use parser::{parse_game, parse_strict, render_game};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{} error(s), first: {}", .0.iter().filter(|d| d.is_error()).count(), first_error(.0))]
    Invalid(Vec<Diagnostic>),
    #[error(transparent)]
    Compile(#[from] engine::CompileError),
}

fn first_error(diags: &[Diagnostic]) -> String {
    diags.iter().find(|d| d.is_error()).map(ToString::to_string).unwrap_or_default()
}

/// Parses, validates and expands a description. The result is ready for
/// [`engine::Game::compile`] and for the optimizer.
pub fn prepare_text(text: &str) -> Result<GameDescription, LoadError> {
    let g = parse_strict(text).map_err(LoadError::Invalid)?;
    let g = validate::prepare(&g).map_err(LoadError::Invalid)?;
    Ok(transforms::expand_shorthands(&g))
}

/// Text to a playable game.
pub fn load(text: &str) -> Result<engine::Game, LoadError> {
    Ok(engine::Game::compile(&prepare_text(text)?)?)
}
