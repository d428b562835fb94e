//! Tokenizer shared by the program and net text formats.

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Semi,
    Colon,
    Comma,
    Arrow,
    Dash,
    Pipe,
    Eq,
    Star,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Dash => "`-`".into(),
            Tok::Pipe => "`|`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Star => "`*`".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

#[derive(Debug)]
pub(crate) struct LexError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

pub(crate) fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || "_.'/@[]$".contains(c)
}

pub(crate) fn lex(src: &str) -> Result<Vec<Spanned>, LexError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (l, cl) = (line, col);
        let push = |out: &mut Vec<Spanned>, tok| out.push(Spanned { tok, line: l, col: cl });
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c == '~' || is_ident_char(c) {
            let start = i;
            i += 1;
            while i < chars.len() && is_ident_char(chars[i]) {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            if s == "~" {
                return Err(LexError { line: l, col: cl, msg: "`~` must be followed by a handler name".into() });
            }
            col += i - start;
            push(&mut out, Tok::Ident(s));
            continue;
        }
        let tok = match c {
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ';' => Tok::Semi,
            ':' => Tok::Colon,
            ',' => Tok::Comma,
            '|' => Tok::Pipe,
            '=' => Tok::Eq,
            '*' => Tok::Star,
            '-' if chars.get(i + 1) == Some(&'>') => {
                i += 1;
                col += 1;
                Tok::Arrow
            }
            '-' => Tok::Dash,
            _ => return Err(LexError { line: l, col: cl, msg: format!("unexpected character `{c}`") }),
        };
        push(&mut out, tok);
        i += 1;
        col += 1;
    }
    Ok(out)
}

/// A cursor over tokens with position-aware errors.
pub(crate) struct Cursor {
    toks: Vec<Spanned>,
    pos: usize,
    end: (usize, usize),
}

impl Cursor {
    pub fn new(toks: Vec<Spanned>, src: &str) -> Self {
        let lines = src.split('\n').count();
        let last = src.split('\n').next_back().map_or(0, |l| l.chars().count());
        Cursor { toks, pos: 0, end: (lines, last + 1) }
    }

    pub fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    pub fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|s| &s.tok)
    }

    pub fn here(&self) -> (usize, usize) {
        self.toks.get(self.pos).map_or(self.end, |s| (s.line, s.col))
    }

    pub fn next(&mut self) -> Option<Spanned> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn err(&self, msg: String) -> LexError {
        let (line, col) = self.here();
        LexError { line, col, msg }
    }

    pub fn expect(&mut self, t: &Tok) -> Result<(), LexError> {
        if self.eat(t) {
            Ok(())
        } else {
            let found = self.peek().map_or("end of input".to_string(), |f| f.describe());
            Err(self.err(format!("expected {}, found {found}", t.describe())))
        }
    }

    pub fn ident(&mut self) -> Result<(String, usize, usize), LexError> {
        match self.toks.get(self.pos) {
            Some(Spanned { tok: Tok::Ident(s), line, col }) => {
                let r = (s.clone(), *line, *col);
                self.pos += 1;
                Ok(r)
            }
            other => {
                let found = other.map_or("end of input".to_string(), |f| f.tok.describe());
                Err(self.err(format!("expected a name, found {found}")))
            }
        }
    }

    pub fn keyword(&mut self, kw: &str) -> Result<(), LexError> {
        let (s, line, col) = self.ident()?;
        if s == kw {
            Ok(())
        } else {
            Err(LexError { line, col, msg: format!("expected `{kw}`, found `{s}`") })
        }
    }

    pub fn number(&mut self) -> Result<u64, LexError> {
        let (s, line, col) = self.ident()?;
        s.parse().map_err(|_| LexError { line, col, msg: format!("expected a count, found `{s}`") })
    }
}
