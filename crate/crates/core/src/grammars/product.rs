//! The product of the handler grammar with the transfer relation.

use std::collections::{HashMap, HashSet};

use crate::model::{AsyncProgram, Cfg, Handler, Letter, RegularGrammar, Rhs, State, Var};

/// A context `(d, σ, d')`: handler σ dispatched in `d` and returning in `d'`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Context {
    pub from: State,
    pub handler: Handler,
    pub to: State,
}

impl Context {
    pub fn new(from: State, handler: Handler, to: State) -> Self {
        Context { from, handler, to }
    }

    pub fn describe(&self, p: &AsyncProgram) -> String {
        format!("({}, {}, {})", p.state_name(self.from), p.handler_name(self.handler), p.state_name(self.to))
    }
}

/// `G^R` with variables `[d X d']`, restricted to productive triples.
///
/// Internal letters are projected away, so terminals are posts and cancels only.
#[derive(Clone, Debug)]
pub struct ProductGrammar {
    cfg: Cfg<Letter>,
    triples: HashMap<(State, Var, State), Var>,
}

/// The grammar `G^c` of one context, pruned to useful variables. Its start is `Var(0)`.
#[derive(Clone, Debug)]
pub struct ContextGrammar {
    pub context: Context,
    pub cfg: Cfg<Letter>,
    pub start: Var,
}

impl ContextGrammar {
    /// `|X^c|`, the number of variables after pruning.
    pub fn num_vars(&self) -> usize {
        self.cfg.num_vars()
    }
}

type Triple = (State, Var, State);

fn found(
    t: Triple,
    known: &mut HashSet<Triple>,
    fwd: &mut HashMap<(Var, State), Vec<State>>,
    bwd: &mut HashMap<(Var, State), Vec<State>>,
    work: &mut Vec<Triple>,
) {
    if known.insert(t) {
        fwd.entry((t.1, t.0)).or_default().push(t.2);
        bwd.entry((t.1, t.2)).or_default().push(t.0);
        work.push(t);
    }
}

fn project(l: Letter) -> Rhs<Letter> {
    match l {
        Letter::Internal(_) => Rhs::Eps,
        other => Rhs::Term(other),
    }
}

/// Builds `G^R` for grammar `g` and transfer relation `r` over `states`.
///
/// Only triples that derive some word are materialized; the languages of all
/// remaining triples are exactly those of the full least production set.
pub fn build_product(g: &Cfg<Letter>, r: &RegularGrammar, states: &[String]) -> ProductGrammar {
    let n = states.len() as u32;
    let mut left: Vec<Vec<(Var, Var)>> = vec![Vec::new(); g.num_vars()];
    let mut right: Vec<Vec<(Var, Var)>> = vec![Vec::new(); g.num_vars()];
    for p in g.productions() {
        if let Rhs::Pair(a, b) = p.rhs {
            left[a.index()].push((p.lhs, b));
            right[b.index()].push((p.lhs, a));
        }
    }

    let mut known: HashSet<Triple> = HashSet::new();
    let mut fwd: HashMap<(Var, State), Vec<State>> = HashMap::new();
    let mut bwd: HashMap<(Var, State), Vec<State>> = HashMap::new();
    let mut work: Vec<Triple> = Vec::new();
    for p in g.productions() {
        match p.rhs {
            Rhs::Eps => {
                for d in 0..n {
                    found((State(d), p.lhs, State(d)), &mut known, &mut fwd, &mut bwd, &mut work);
                }
            }
            Rhs::Term(a) => {
                for &(d, e) in r.moves(a) {
                    found((d, p.lhs, e), &mut known, &mut fwd, &mut bwd, &mut work);
                }
            }
            Rhs::Pair(..) => {}
        }
    }
    while let Some((d, v, e)) = work.pop() {
        for &(x, b) in &left[v.index()] {
            let ends = fwd.get(&(b, e)).cloned().unwrap_or_default();
            for f in ends {
                found((d, x, f), &mut known, &mut fwd, &mut bwd, &mut work);
            }
        }
        for &(x, a) in &right[v.index()] {
            let starts = bwd.get(&(a, d)).cloned().unwrap_or_default();
            for c in starts {
                found((c, x, e), &mut known, &mut fwd, &mut bwd, &mut work);
            }
        }
    }

    let mut sorted: Vec<(State, Var, State)> = known.into_iter().collect();
    sorted.sort();
    let mut cfg = Cfg::new();
    let mut triples = HashMap::new();
    for &(d, x, e) in &sorted {
        let v = cfg.var(&format!("[{}|{}|{}]", states[d.index()], g.name(x), states[e.index()]));
        triples.insert((d, x, e), v);
    }
    for p in g.productions() {
        match p.rhs {
            Rhs::Eps => {
                for d in 0..n {
                    cfg.add(triples[&(State(d), p.lhs, State(d))], Rhs::Eps);
                }
            }
            Rhs::Term(a) => {
                for &(d, e) in r.moves(a) {
                    cfg.add(triples[&(d, p.lhs, e)], project(a));
                }
            }
            Rhs::Pair(a, b) => {
                for d in (0..n).map(State) {
                    let Some(mids) = fwd.get(&(a, d)) else { continue };
                    for &e in mids {
                        let Some(ends) = fwd.get(&(b, e)) else { continue };
                        for &f in ends {
                            cfg.add(triples[&(d, p.lhs, f)], Rhs::Pair(triples[&(d, a, e)], triples[&(e, b, f)]));
                        }
                    }
                }
            }
        }
    }
    ProductGrammar { cfg, triples }
}

impl ProductGrammar {
    pub fn of_program(p: &AsyncProgram) -> Self {
        build_product(p.grammar(), p.flow(), p.states())
    }

    pub fn cfg(&self) -> &Cfg<Letter> {
        &self.cfg
    }

    /// The variable `[d X d']`, if it derives some word.
    pub fn triple(&self, d: State, x: Var, e: State) -> Option<Var> {
        self.triples.get(&(d, x, e)).copied()
    }

    /// The start variable `[d1 X_σ d2]` of context `c`, if `L(G^c)` is non-empty.
    pub fn context_start(&self, p: &AsyncProgram, c: Context) -> Option<Var> {
        self.triple(c.from, p.start(c.handler), c.to)
    }

    /// `G^c`, or `None` when its language is empty.
    pub fn context_grammar(&self, p: &AsyncProgram, c: Context) -> Option<ContextGrammar> {
        let start = self.context_start(p, c)?;
        let (cfg, map) = self.cfg.restrict(&[start]);
        Some(ContextGrammar { context: c, cfg, start: map[start.index()].expect("productive start") })
    }

    /// All contexts with a non-empty language, in sorted order.
    pub fn contexts(&self, p: &AsyncProgram) -> Vec<Context> {
        let mut out = Vec::new();
        for d in p.state_ids() {
            for h in p.handler_ids() {
                for e in p.state_ids() {
                    let c = Context::new(d, h, e);
                    if self.context_start(p, c).is_some() {
                        out.push(c);
                    }
                }
            }
        }
        out
    }
}
