//! `.rg` text to [`GameDescription`] and back.

mod lexer;
mod render;

use std::collections::btree_map::Entry;
use std::collections::VecDeque;

use crate::diag::{has_errors, Code, Diagnostic, Span};
use crate::model::{
    Action, CompareOp, ConstDecl, Edge, Expr, ExprKind, GameDescription, Name, Pragma, TypeDecl, TypeExpr, Value,
    VarDecl,
};
use lexer::{Lexer, Tok, Token};

pub use render::render_game;

/// Deepest nesting of types, values or expressions accepted.
const MAX_DEPTH: usize = 200;

/// Parses a complete description. Never fails outright: problems are
/// reported as diagnostics and parsing resumes after the next `;`.
pub fn parse_game(text: &str) -> (GameDescription, Vec<Diagnostic>) {
    let mut p = Parser {
        lexer: Lexer::new(text),
        ahead: VecDeque::new(),
        diags: Vec::new(),
        game: GameDescription::default(),
        depth: 0,
    };
    p.game();
    (p.game, p.diags)
}

/// Parses and fails if any error was reported.
pub fn parse_strict(text: &str) -> Result<GameDescription, Vec<Diagnostic>> {
    let (g, diags) = parse_game(text);
    if has_errors(&diags) {
        Err(diags)
    } else {
        Ok(g)
    }
}

/// Marker for an already reported syntax error.
struct Reported;

type PResult<T> = Result<T, Reported>;

struct Parser<'a> {
    lexer: Lexer<'a>,
    ahead: VecDeque<Token>,
    diags: Vec<Diagnostic>,
    game: GameDescription,
    depth: usize,
}

enum NameKind {
    /// Type, constant or variable being declared, or a type reference.
    Declared,
    /// Symbol, node or tag.
    Free,
}

impl Parser<'_> {
    fn fill(&mut self, n: usize) {
        while self.ahead.len() <= n {
            let t = self.lexer.next_token(&mut self.diags);
            self.ahead.push_back(t);
        }
    }

    fn peek(&mut self) -> &Tok {
        self.peek_at(0)
    }

    fn peek_at(&mut self, n: usize) -> &Tok {
        self.fill(n);
        &self.ahead[n].tok
    }

    fn peek_span(&mut self) -> Span {
        self.fill(0);
        self.ahead[0].span
    }

    fn next(&mut self) -> Token {
        self.fill(0);
        self.ahead.pop_front().expect("filled")
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.next();
            true
        } else {
            false
        }
    }

    fn error(&mut self, code: Code, span: Span, message: impl Into<String>) -> Reported {
        self.diags.push(Diagnostic::error(code, span, message));
        Reported
    }

    fn unexpected(&mut self, expected: &str) -> Reported {
        let span = self.peek_span();
        let found = self.peek().describe();
        let code = if matches!(self.peek(), Tok::Eof) { Code::UnterminatedStatement } else { Code::UnexpectedToken };
        self.error(code, span, format!("expected {expected}, found {found}"))
    }

    fn expect(&mut self, tok: &Tok) -> PResult<Span> {
        if self.peek() == tok {
            Ok(self.next().span)
        } else {
            Err(self.unexpected(&tok.describe()))
        }
    }

    fn expect_semi(&mut self) -> PResult<Span> {
        if self.peek() == &Tok::Semi {
            return Ok(self.next().span);
        }
        let span = self.peek_span();
        let found = self.peek().describe();
        Err(self.error(Code::UnterminatedStatement, span, format!("expected `;` to end the statement, found {found}")))
    }

    fn name(&mut self, kind: NameKind) -> PResult<(Name, Span)> {
        let Tok::Ident(text) = self.peek().clone() else {
            return Err(self.unexpected("a name"));
        };
        let span = self.next().span;
        if Name::is_keyword(&text) {
            return Err(self.error(Code::ReservedKeyword, span, format!("`{text}` is a reserved keyword")));
        }
        if matches!(kind, NameKind::Declared) && !Name::is_declarable(&text) {
            return Err(self.error(Code::InvalidName, span, format!("`{text}` cannot start with a digit")));
        }
        Ok((Name::new(text), span))
    }

    /// Skips to just past the next `;`.
    fn synchronize(&mut self) {
        loop {
            match self.peek() {
                Tok::Eof => return,
                Tok::Semi => {
                    self.next();
                    return;
                }
                _ => {
                    self.next();
                }
            }
        }
    }

    fn nested<T>(&mut self, f: impl FnOnce(&mut Self) -> PResult<T>) -> PResult<T> {
        if self.depth >= MAX_DEPTH {
            let span = self.peek_span();
            return Err(self.error(Code::UnexpectedToken, span, "nesting is too deep"));
        }
        self.depth += 1;
        let r = f(self);
        self.depth -= 1;
        r
    }

    fn game(&mut self) {
        loop {
            let start = self.peek_span();
            let result = match self.peek().clone() {
                Tok::Eof => return,
                Tok::Pragma { name, tokens, terminated } => {
                    let span = self.next().span;
                    self.pragma(name, tokens, terminated, span);
                    Ok(())
                }
                Tok::Ident(word) if word == "type" => self.type_decl(start),
                Tok::Ident(word) if word == "const" => self.const_decl(start),
                Tok::Ident(word) if word == "var" => self.var_decl(start),
                Tok::Ident(_) => self.edge(start),
                _ => Err(self.unexpected("a declaration, an edge or a pragma")),
            };
            if result.is_err() {
                self.synchronize();
            }
        }
    }

    fn pragma(&mut self, name: Option<String>, tokens: Vec<String>, terminated: bool, span: Span) {
        let Some(name) = name else {
            self.error(Code::UnexpectedToken, span, "expected a pragma name after `@`");
            return;
        };
        if !terminated {
            self.error(Code::UnterminatedStatement, span, "pragma is missing its closing `;`");
            return;
        }
        self.game.pragmas.push(Pragma { name: Name::new(name), tokens, span });
    }

    fn duplicate(&mut self, what: &str, name: &Name, span: Span) {
        self.error(Code::DuplicateDefinition, span, format!("{what} `{name}` is already defined"));
    }

    fn type_decl(&mut self, start: Span) -> PResult<()> {
        self.next();
        let (name, _) = self.name(NameKind::Declared)?;
        self.expect(&Tok::Assign)?;
        let ty = self.type_expr()?;
        let end = self.expect_semi()?;
        let span = start.to(end);
        match self.game.types.entry(name) {
            Entry::Occupied(o) => {
                let name = o.key().clone();
                self.duplicate("type", &name, span);
            }
            Entry::Vacant(v) => {
                v.insert(TypeDecl { ty, span });
            }
        }
        Ok(())
    }

    fn const_decl(&mut self, start: Span) -> PResult<()> {
        self.next();
        let (name, _) = self.name(NameKind::Declared)?;
        self.expect(&Tok::Colon)?;
        let ty = self.type_expr()?;
        self.expect(&Tok::Assign)?;
        let value = self.value()?;
        let end = self.expect_semi()?;
        let span = start.to(end);
        match self.game.constants.entry(name) {
            Entry::Occupied(o) => {
                let name = o.key().clone();
                self.duplicate("constant", &name, span);
            }
            Entry::Vacant(v) => {
                v.insert(ConstDecl { ty, value, span });
            }
        }
        Ok(())
    }

    fn var_decl(&mut self, start: Span) -> PResult<()> {
        self.next();
        let (name, _) = self.name(NameKind::Declared)?;
        self.expect(&Tok::Colon)?;
        let ty = self.type_expr()?;
        self.expect(&Tok::Assign)?;
        let init = self.value()?;
        let end = self.expect_semi()?;
        let span = start.to(end);
        match self.game.variables.entry(name) {
            Entry::Occupied(o) => {
                let name = o.key().clone();
                self.duplicate("variable", &name, span);
            }
            Entry::Vacant(v) => {
                v.insert(VarDecl { ty, init, span });
            }
        }
        Ok(())
    }

    fn type_expr(&mut self) -> PResult<TypeExpr> {
        self.nested(|p| {
            let source = match p.peek() {
                Tok::LBrace => {
                    p.next();
                    let mut symbols = vec![p.name(NameKind::Free)?.0];
                    while p.eat(&Tok::Comma) {
                        symbols.push(p.name(NameKind::Free)?.0);
                    }
                    p.expect(&Tok::RBrace)?;
                    TypeExpr::Set(symbols)
                }
                Tok::Ident(_) => TypeExpr::Alias(p.name(NameKind::Declared)?.0),
                _ => return Err(p.unexpected("a type")),
            };
            if p.eat(&Tok::Arrow) {
                let dest = p.type_expr()?;
                Ok(TypeExpr::arrow(source, dest))
            } else {
                Ok(source)
            }
        })
    }

    fn value(&mut self) -> PResult<Value> {
        self.nested(|p| {
            if !matches!(p.peek(), Tok::LBrace) {
                return Ok(Value::Symbol(p.name(NameKind::Free)?.0));
            }
            let open = p.next().span;
            let mut default: Option<Value> = None;
            let mut entries = Vec::new();
            if !matches!(p.peek(), Tok::RBrace) {
                loop {
                    if p.peek() == &Tok::Colon {
                        let span = p.next().span;
                        let v = p.value()?;
                        if default.is_some() {
                            return Err(p.error(Code::DuplicateDefault, span, "map has more than one default value"));
                        }
                        default = Some(v);
                    } else {
                        let (key, _) = p.name(NameKind::Free)?;
                        p.expect(&Tok::Colon)?;
                        entries.push((key, p.value()?));
                    }
                    if !p.eat(&Tok::Comma) {
                        break;
                    }
                }
            }
            let close = p.expect(&Tok::RBrace)?;
            match default {
                Some(default) => Ok(Value::map(default, entries)),
                None => Err(p.error(Code::MissingDefault, open.to(close), "map value has no default (`:value`) entry")),
            }
        })
    }

    fn edge(&mut self, start: Span) -> PResult<()> {
        let (from, _) = self.name(NameKind::Free)?;
        self.expect(&Tok::Comma)?;
        let (to, _) = self.name(NameKind::Free)?;
        self.expect(&Tok::Colon)?;
        let action = self.action()?;
        let end = self.expect_semi()?;
        self.game.edges.push(Edge { from, to, action, span: start.to(end) });
        Ok(())
    }

    fn action(&mut self) -> PResult<Action> {
        match self.peek() {
            Tok::Semi => Ok(Action::Empty),
            Tok::Question | Tok::Bang => {
                let negated = self.next().tok == Tok::Bang;
                let (from, _) = self.name(NameKind::Free)?;
                self.expect(&Tok::Arrow)?;
                let (to, _) = self.name(NameKind::Free)?;
                Ok(Action::Reach { from, to, negated })
            }
            Tok::Dollar => {
                self.next();
                Ok(Action::Tag(self.name(NameKind::Free)?.0))
            }
            Tok::DollarDollar => {
                self.next();
                Ok(Action::VarTag(self.name(NameKind::Declared)?.0))
            }
            _ => {
                let lhs = self.expr()?;
                match self.peek() {
                    Tok::EqEq | Tok::NotEq => {
                        let op = if self.next().tok == Tok::EqEq { CompareOp::Eq } else { CompareOp::Ne };
                        let rhs = self.expr()?;
                        Ok(Action::Compare { lhs, rhs, op })
                    }
                    Tok::Assign => {
                        self.next();
                        let any = matches!(self.peek(), Tok::Ident(_))
                            && self.peek_at(1) == &Tok::LParen
                            && self.peek_at(2) == &Tok::Star;
                        if any {
                            let (domain, _) = self.name(NameKind::Declared)?;
                            self.expect(&Tok::LParen)?;
                            self.expect(&Tok::Star)?;
                            self.expect(&Tok::RParen)?;
                            Ok(Action::AnyAssign { lhs, domain: TypeExpr::Alias(domain) })
                        } else {
                            let rhs = self.expr()?;
                            Ok(Action::Assign { lhs, rhs })
                        }
                    }
                    _ => Err(self.unexpected("`==`, `!=` or `=`")),
                }
            }
        }
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.nested(|p| {
            let (name, span) = p.name(NameKind::Free)?;
            let mut e = if p.peek() == &Tok::LParen {
                if !Name::is_declarable(&name) {
                    return Err(p.error(Code::InvalidName, span, format!("`{name}` cannot name a cast target type")));
                }
                p.next();
                let inner = p.expr()?;
                let close = p.expect(&Tok::RParen)?;
                Expr::new(ExprKind::Cast(TypeExpr::Alias(name), Box::new(inner)), span.to(close))
            } else {
                Expr::new(ExprKind::Ref(name), span)
            };
            while p.peek() == &Tok::LBracket {
                p.next();
                let key = p.expr()?;
                let close = p.expect(&Tok::RBracket)?;
                let span = e.span.to(close);
                e = Expr::new(ExprKind::Access(Box::new(e), Box::new(key)), span);
            }
            Ok(e)
        })
    }
}
