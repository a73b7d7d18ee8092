use crate::diag::{Code, Diagnostic, Span};

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Semi,
    Assign,
    EqEq,
    NotEq,
    Arrow,
    Question,
    Bang,
    Dollar,
    DollarDollar,
    Star,
    /// A complete `@name tokens... ;` statement.
    Pragma {
        name: Option<String>,
        tokens: Vec<String>,
        terminated: bool,
    },
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Assign => "`=`".into(),
            Tok::EqEq => "`==`".into(),
            Tok::NotEq => "`!=`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Question => "`?`".into(),
            Tok::Bang => "`!`".into(),
            Tok::Dollar => "`$`".into(),
            Tok::DollarDollar => "`$$`".into(),
            Tok::Star => "`*`".into(),
            Tok::Pragma { .. } => "pragma".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: Span,
}

pub(crate) struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col: usize,
}

fn is_name_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

impl<'a> Lexer<'a> {
    pub(crate) fn new(src: &'a str) -> Lexer<'a> {
        Lexer { src, pos: 0, line: 1, col: 1 }
    }

    fn peek_byte(&self, ahead: usize) -> Option<u8> {
        self.src.as_bytes().get(self.pos + ahead).copied()
    }

    fn bump(&mut self) {
        let c = self.src[self.pos..].chars().next().expect("bump past end");
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += c.len_utf8();
        }
    }

    fn bump_n(&mut self, n: usize) {
        for _ in 0..n {
            self.bump();
        }
    }

    fn here(&self) -> Span {
        Span::new(self.pos, 0, self.line, self.col)
    }

    fn close(&self, start: Span) -> Span {
        Span { len: (self.pos - start.offset as usize) as u32, ..start }
    }

    /// Skips whitespace and `//` comments.
    fn skip_trivia(&mut self) {
        loop {
            match self.peek_byte(0) {
                Some(b) if b.is_ascii_whitespace() => self.bump(),
                Some(b'/') if self.peek_byte(1) == Some(b'/') => {
                    while self.peek_byte(0).is_some_and(|b| b != b'\n') {
                        self.bump();
                    }
                }
                _ => return,
            }
        }
    }

    fn name(&mut self) -> String {
        let start = self.pos;
        while self.peek_byte(0).is_some_and(is_name_byte) {
            self.bump();
        }
        self.src[start..self.pos].to_string()
    }

    pub(crate) fn next_token(&mut self, diags: &mut Vec<Diagnostic>) -> Token {
        loop {
            self.skip_trivia();
            let start = self.here();
            let Some(b) = self.peek_byte(0) else {
                return Token { tok: Tok::Eof, span: start };
            };
            let (tok, width) = match b {
                b'{' => (Tok::LBrace, 1),
                b'}' => (Tok::RBrace, 1),
                b'(' => (Tok::LParen, 1),
                b')' => (Tok::RParen, 1),
                b'[' => (Tok::LBracket, 1),
                b']' => (Tok::RBracket, 1),
                b',' => (Tok::Comma, 1),
                b':' => (Tok::Colon, 1),
                b';' => (Tok::Semi, 1),
                b'*' => (Tok::Star, 1),
                b'?' => (Tok::Question, 1),
                b'=' if self.peek_byte(1) == Some(b'=') => (Tok::EqEq, 2),
                b'=' => (Tok::Assign, 1),
                b'!' if self.peek_byte(1) == Some(b'=') => (Tok::NotEq, 2),
                b'!' => (Tok::Bang, 1),
                b'-' if self.peek_byte(1) == Some(b'>') => (Tok::Arrow, 2),
                b'$' if self.peek_byte(1) == Some(b'$') => (Tok::DollarDollar, 2),
                b'$' => (Tok::Dollar, 1),
                b'@' => {
                    self.bump();
                    let tok = self.pragma();
                    return Token { tok, span: self.close(start) };
                }
                b if is_name_byte(b) => {
                    let text = self.name();
                    return Token { tok: Tok::Ident(text), span: self.close(start) };
                }
                _ => {
                    let c = self.src[self.pos..].chars().next().expect("non-empty");
                    self.bump();
                    diags.push(Diagnostic::error(
                        Code::InvalidCharacter,
                        self.close(start),
                        format!("unexpected character {c:?}"),
                    ));
                    continue;
                }
            };
            self.bump_n(width);
            return Token { tok, span: self.close(start) };
        }
    }

    /// Raw pragma body: whitespace-separated chunks up to the first `;`.
    fn pragma(&mut self) -> Tok {
        self.skip_trivia();
        let name = match self.peek_byte(0) {
            Some(b) if is_name_byte(b) => Some(self.name()),
            _ => None,
        };
        let mut tokens = Vec::new();
        loop {
            self.skip_trivia();
            match self.peek_byte(0) {
                None => return Tok::Pragma { name, tokens, terminated: false },
                Some(b';') => {
                    self.bump();
                    return Tok::Pragma { name, tokens, terminated: true };
                }
                Some(_) => {
                    let start = self.pos;
                    while let Some(b) = self.peek_byte(0) {
                        if b.is_ascii_whitespace() || b == b';' {
                            break;
                        }
                        if b == b'/' && self.peek_byte(1) == Some(b'/') {
                            break;
                        }
                        self.bump();
                    }
                    tokens.push(self.src[start..self.pos].to_string());
                }
            }
        }
    }
}
