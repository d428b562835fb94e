//! Net text format.
//!
//! ```text
//! net {
//!   places: p q r;
//!   init: p:1;
//!   trans t1 { in: p:1; out: q:2; reset: r; label: dispatch(h); }
//! }
//! ```

use super::{Label, Marking, NetError, PetriNet, Transition};
use crate::text::{lex, Cursor, LexError, Tok};

impl From<LexError> for NetError {
    fn from(e: LexError) -> Self {
        NetError::Syntax { line: e.line, col: e.col, msg: e.msg }
    }
}

fn marking(c: &mut Cursor, n: &PetriNet) -> Result<Marking, LexError> {
    let mut m = Marking::new();
    while !c.eat(&Tok::Semi) {
        let (name, line, col) = c.ident()?;
        let p = n.place(&name).ok_or(LexError { line, col, msg: format!("undeclared place `{name}`") })?;
        let k = if c.eat(&Tok::Colon) { c.number()? } else { 1 };
        m.add(p, k);
        c.eat(&Tok::Comma);
    }
    Ok(m)
}

fn label(c: &mut Cursor) -> Result<Label, LexError> {
    let (kw, line, col) = c.ident()?;
    let l = match kw.as_str() {
        "plain" => Label::Plain,
        "widget" => Label::Widget,
        "structural" => Label::Structural,
        "dispatch" => {
            c.expect(&Tok::LParen)?;
            let (h, _, _) = c.ident()?;
            c.expect(&Tok::RParen)?;
            Label::Dispatch(h)
        }
        _ => return Err(LexError { line, col, msg: format!("unknown label `{kw}`") }),
    };
    c.expect(&Tok::Semi)?;
    Ok(l)
}

fn transition(c: &mut Cursor, n: &PetriNet) -> Result<Transition, LexError> {
    let (name, _, _) = c.ident()?;
    c.expect(&Tok::LBrace)?;
    let mut t = Transition::new(name, Marking::new(), Marking::new());
    while !c.eat(&Tok::RBrace) {
        let (field, line, col) = c.ident()?;
        c.expect(&Tok::Colon)?;
        match field.as_str() {
            "in" => t.input = t.input.sum(&marking(c, n)?),
            "out" => t.output = t.output.sum(&marking(c, n)?),
            "reset" => {
                let m = marking(c, n)?;
                t = t.with_reset(m.support().collect());
            }
            "label" => t.label = label(c)?,
            _ => return Err(LexError { line, col, msg: format!("unknown field `{field}`") }),
        }
    }
    Ok(t)
}

fn parse(src: &str) -> Result<PetriNet, LexError> {
    let mut c = Cursor::new(lex(src)?, src);
    c.keyword("net")?;
    c.expect(&Tok::LBrace)?;
    let mut n = PetriNet::new();
    while !c.eat(&Tok::RBrace) {
        let (kw, line, col) = c.ident()?;
        match kw.as_str() {
            "places" => {
                c.expect(&Tok::Colon)?;
                while !c.eat(&Tok::Semi) {
                    let (p, line, col) = c.ident()?;
                    if n.place(&p).is_some() {
                        return Err(LexError { line, col, msg: format!("duplicate place `{p}`") });
                    }
                    n.add_place(&p);
                    c.eat(&Tok::Comma);
                }
            }
            "init" => {
                c.expect(&Tok::Colon)?;
                n.initial = n.initial.sum(&marking(&mut c, &n)?);
            }
            "trans" => {
                let t = transition(&mut c, &n)?;
                n.add_transition(t);
            }
            _ => return Err(LexError { line, col, msg: format!("expected `places`, `init` or `trans`, found `{kw}`") }),
        }
    }
    if !c.at_end() {
        return Err(c.err("trailing input after the net".into()));
    }
    Ok(n)
}

pub fn parse_net(src: &str) -> Result<PetriNet, NetError> {
    Ok(parse(src)?)
}

fn fmt_marking(n: &PetriNet, m: &Marking) -> String {
    let parts: Vec<String> = m.iter().map(|(p, k)| format!("{}:{k}", n.place_name(p))).collect();
    parts.join(" ")
}

pub fn print_net(n: &PetriNet) -> String {
    let mut out = String::from("net {\n");
    let names: Vec<&str> = n.places().map(|p| n.place_name(p)).collect();
    out.push_str(&format!("  places: {};\n", names.join(" ")));
    out.push_str(&format!("  init: {};\n", fmt_marking(n, &n.initial)));
    for t in n.transitions() {
        out.push_str(&format!("  trans {} {{", t.name));
        if !t.input.is_empty() {
            out.push_str(&format!(" in: {};", fmt_marking(n, &t.input)));
        }
        if !t.output.is_empty() {
            out.push_str(&format!(" out: {};", fmt_marking(n, &t.output)));
        }
        if !t.reset.is_empty() {
            let r: Vec<&str> = t.reset.iter().map(|&p| n.place_name(p)).collect();
            out.push_str(&format!(" reset: {};", r.join(" ")));
        }
        match &t.label {
            Label::Plain => {}
            Label::Dispatch(h) => out.push_str(&format!(" label: dispatch({h});")),
            Label::Widget => out.push_str(" label: widget;"),
            Label::Structural => out.push_str(" label: structural;"),
        }
        out.push_str(" }\n");
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SRC: &str = "net {\n  places: p q r;\n  init: p:1;\n  trans t1 { in: p:1; out: q:2; reset: r; label: dispatch(h); }\n  trans t2 { in: q; }\n}\n";

    #[test]
    fn parse_and_print() {
        let n = parse_net(SRC).unwrap();
        assert_eq!(n.num_places(), 3);
        assert_eq!(n.transitions().len(), 2);
        assert_eq!(n.transition(0).label, Label::Dispatch("h".into()));
        assert_eq!(n.transition(0).output.get(n.place("q").unwrap()), 2);
        let printed = print_net(&n);
        let again = parse_net(&printed).unwrap();
        assert_eq!(print_net(&again), printed);
    }

    #[test]
    fn undeclared_place() {
        let e = parse_net("net { places: p; init: z; }").unwrap_err();
        assert!(matches!(e, NetError::Syntax { line: 1, col: 24, .. }), "{e:?}");
    }
}
