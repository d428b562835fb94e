//! Program text format.
//!
//! ```text
//! program {
//!   states: d0 d1;  init: d0;
//!   handlers: h1 h2;  internal: s;  cancels: off;
//!   buffer: h1:1;
//!   grammar { Xh1 -> A B | eps; A -> h2; B -> s; Xh2 -> ~h1; }
//!   flow { d0 -h2-> d1; * -h1-> *; }
//! }
//! ```

use std::collections::HashMap;

use super::{AsyncProgram, Letter, ModelError, ProgramBuilder, Rhs, State, Sym};
use crate::text::{lex, Cursor, LexError, Tok};

impl From<LexError> for ModelError {
    fn from(e: LexError) -> Self {
        ModelError::Syntax { line: e.line, col: e.col, msg: e.msg }
    }
}

type Name = (String, usize, usize);

#[derive(Default)]
struct Ast {
    states: Vec<Name>,
    init: Option<Name>,
    handlers: Vec<Name>,
    internals: Vec<Name>,
    cancels: bool,
    buffer: Vec<(Name, u64)>,
    rules: Vec<(Name, Vec<Vec<Name>>)>,
    starts: Vec<(Name, Name)>,
    flow: Vec<(Option<Name>, Name, Option<Name>)>,
}

fn name_list(c: &mut Cursor) -> Result<Vec<Name>, LexError> {
    let mut out = Vec::new();
    while !c.eat(&Tok::Semi) {
        out.push(c.ident()?);
        c.eat(&Tok::Comma);
    }
    Ok(out)
}

fn state_or_star(c: &mut Cursor) -> Result<Option<Name>, LexError> {
    if c.eat(&Tok::Star) {
        Ok(None)
    } else {
        c.ident().map(Some)
    }
}

fn parse_start(c: &mut Cursor, ast: &mut Ast) -> Result<(), LexError> {
    let h = c.ident()?;
    c.expect(&Tok::Eq)?;
    let v = c.ident()?;
    c.expect(&Tok::Semi)?;
    ast.starts.push((h, v));
    Ok(())
}

fn parse_ast(c: &mut Cursor) -> Result<Ast, LexError> {
    let mut ast = Ast::default();
    c.keyword("program")?;
    c.expect(&Tok::LBrace)?;
    while !c.eat(&Tok::RBrace) {
        let (kw, line, col) = c.ident()?;
        match kw.as_str() {
            "states" | "handlers" | "internal" => {
                c.expect(&Tok::Colon)?;
                let names = name_list(c)?;
                match kw.as_str() {
                    "states" => ast.states.extend(names),
                    "handlers" => ast.handlers.extend(names),
                    _ => ast.internals.extend(names),
                }
            }
            "init" => {
                c.expect(&Tok::Colon)?;
                ast.init = Some(c.ident()?);
                c.expect(&Tok::Semi)?;
            }
            "cancels" => {
                c.expect(&Tok::Colon)?;
                let (v, l, cl) = c.ident()?;
                ast.cancels = match v.as_str() {
                    "on" => true,
                    "off" => false,
                    _ => return Err(LexError { line: l, col: cl, msg: format!("expected `on` or `off`, found `{v}`") }),
                };
                c.expect(&Tok::Semi)?;
            }
            "buffer" => {
                c.expect(&Tok::Colon)?;
                while !c.eat(&Tok::Semi) {
                    let h = c.ident()?;
                    let n = if c.eat(&Tok::Colon) { c.number()? } else { 1 };
                    ast.buffer.push((h, n));
                    c.eat(&Tok::Comma);
                }
            }
            "start" => parse_start(c, &mut ast)?,
            "grammar" => {
                c.expect(&Tok::LBrace)?;
                while !c.eat(&Tok::RBrace) {
                    if c.peek() == Some(&Tok::Ident("start".into())) && c.peek_at(2) == Some(&Tok::Eq) {
                        c.next();
                        parse_start(c, &mut ast)?;
                        continue;
                    }
                    let lhs = c.ident()?;
                    c.expect(&Tok::Arrow)?;
                    let mut alts = vec![Vec::new()];
                    loop {
                        match c.peek() {
                            Some(Tok::Semi) => {
                                c.next();
                                break;
                            }
                            Some(Tok::Pipe) => {
                                c.next();
                                alts.push(Vec::new());
                            }
                            _ => alts.last_mut().unwrap().push(c.ident()?),
                        }
                    }
                    ast.rules.push((lhs, alts));
                }
            }
            "flow" => {
                c.expect(&Tok::LBrace)?;
                while !c.eat(&Tok::RBrace) {
                    let from = state_or_star(c)?;
                    c.expect(&Tok::Dash)?;
                    let letter = c.ident()?;
                    c.expect(&Tok::Arrow)?;
                    let to = state_or_star(c)?;
                    c.expect(&Tok::Semi)?;
                    ast.flow.push((from, letter, to));
                }
            }
            _ => return Err(LexError { line, col, msg: format!("unknown section `{kw}`") }),
        }
    }
    if !c.at_end() {
        return Err(c.err("trailing input after program".into()));
    }
    Ok(ast)
}

fn undeclared(n: &Name) -> ModelError {
    ModelError::Undeclared { line: n.1, col: n.2, name: n.0.clone() }
}

/// Parses the program text format into a normalized [`AsyncProgram`].
pub fn parse_program(src: &str) -> Result<AsyncProgram, ModelError> {
    let toks = lex(src)?;
    let mut cur = Cursor::new(toks, src);
    let ast = parse_ast(&mut cur)?;

    let mut b = ProgramBuilder::new();
    for s in &ast.states {
        b.state(&s.0)?;
    }
    for h in &ast.handlers {
        b.handler(&h.0)?;
    }
    for i in &ast.internals {
        b.internal(&i.0)?;
    }
    b.enable_cancels(ast.cancels);
    if let Some(init) = &ast.init {
        let d = b.find_state(&init.0).ok_or_else(|| undeclared(init))?;
        b.init_state(d);
    }
    for (h, n) in &ast.buffer {
        let hid = b.find_handler(&h.0).ok_or_else(|| undeclared(h))?;
        b.buffer(hid, *n);
    }

    let letter = |b: &ProgramBuilder, n: &Name| -> Result<Option<Letter>, ModelError> {
        if let Some(h) = b.find_handler(&n.0) {
            return Ok(Some(Letter::Post(h)));
        }
        if let Some(i) = b.find_internal(&n.0) {
            return Ok(Some(Letter::Internal(i)));
        }
        if let Some(rest) = n.0.strip_prefix('~') {
            let h = b.find_handler(rest).ok_or_else(|| undeclared(n))?;
            if !ast.cancels {
                return Err(ModelError::Syntax {
                    line: n.1,
                    col: n.2,
                    msg: format!("cancel `{}` requires `cancels: on`", n.0),
                });
            }
            return Ok(Some(Letter::Cancel(h)));
        }
        Ok(None)
    };

    let mut defined: HashMap<String, ()> = HashMap::new();
    for (lhs, _) in &ast.rules {
        if b.is_terminal_name(&lhs.0) || lhs.0.starts_with('~') || lhs.0 == "eps" {
            return Err(ModelError::Syntax {
                line: lhs.1,
                col: lhs.2,
                msg: format!("`{}` is a terminal and cannot head a production", lhs.0),
            });
        }
        defined.insert(lhs.0.clone(), ());
        b.var(&lhs.0);
    }
    for (lhs, alts) in &ast.rules {
        let l = b.var(&lhs.0);
        for alt in alts {
            let mut rhs = Vec::new();
            for n in alt {
                if n.0 == "eps" {
                    continue;
                }
                match letter(&b, n)? {
                    Some(t) => rhs.push(Sym::Term(t)),
                    None => {
                        if !defined.contains_key(&n.0) {
                            return Err(undeclared(n));
                        }
                        rhs.push(Sym::Var(b.var(&n.0)));
                    }
                }
            }
            b.rule(l, rhs);
        }
    }
    for (h, v) in &ast.starts {
        let hid = b.find_handler(&h.0).ok_or_else(|| undeclared(h))?;
        if !defined.contains_key(&v.0) {
            return Err(undeclared(v));
        }
        let var = b.var(&v.0);
        b.set_start(hid, var);
    }
    let all_states: Vec<State> = (0..b.num_states() as u32).map(State).collect();
    for (from, l, to) in &ast.flow {
        let lt = letter(&b, l)?.ok_or_else(|| undeclared(l))?;
        let resolve = |n: &Option<Name>| -> Result<Option<State>, ModelError> {
            match n {
                None => Ok(None),
                Some(n) => b.find_state(&n.0).map(Some).ok_or_else(|| undeclared(n)),
            }
        };
        match (resolve(from)?, resolve(to)?) {
            (Some(d), Some(e)) => b.flow(d, lt, e),
            (None, None) => {
                for &d in &all_states {
                    b.flow(d, lt, d);
                }
            }
            (None, Some(e)) => {
                for &d in &all_states {
                    b.flow(d, lt, e);
                }
            }
            (Some(_), None) => {
                return Err(ModelError::Syntax {
                    line: l.1,
                    col: l.2,
                    msg: "a `*` target requires a `*` source".into(),
                });
            }
        }
    }
    b.build()
}

/// Prints a program in the text format; the grammar is printed in normal form.
pub fn print_program(p: &AsyncProgram) -> String {
    let mut s = String::from("program {\n");
    s += &format!("  states: {};\n", p.states().join(" "));
    s += &format!("  init: {};\n", p.state_name(p.init_state()));
    s += &format!("  handlers: {};\n", p.handlers().join(" "));
    if !p.internals().is_empty() {
        s += &format!("  internal: {};\n", p.internals().join(" "));
    }
    s += &format!("  cancels: {};\n", if p.has_cancels() { "on" } else { "off" });
    let buf: Vec<String> =
        p.init_buffer().iter().map(|(h, n)| format!("{}:{}", p.handler_name(h), n)).collect();
    s += &format!("  buffer: {};\n", buf.join(" "));
    s += "  grammar {\n";
    for h in p.handler_ids() {
        s += &format!("    start {} = {};\n", p.handler_name(h), p.grammar().name(p.start(h)));
    }
    let g = p.grammar();
    for v in g.vars() {
        let alts: Vec<String> = g
            .rules_of(v)
            .map(|pr| match &pr.rhs {
                Rhs::Pair(a, b) => format!("{} {}", g.name(*a), g.name(*b)),
                Rhs::Term(t) => p.letter_name(*t),
                Rhs::Eps => "eps".into(),
            })
            .collect();
        if !alts.is_empty() {
            s += &format!("    {} -> {};\n", g.name(v), alts.join(" | "));
        }
    }
    s += "  }\n  flow {\n";
    for (d, l, e) in p.flow().rules() {
        s += &format!("    {} -{}-> {};\n", p.state_name(d), p.letter_name(l), p.state_name(e));
    }
    s += "  }\n}\n";
    s
}
