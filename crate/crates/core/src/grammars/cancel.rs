//! Tracking cancels: the product of the reversed context grammar with the
//! automaton that records which handlers have been cancelled.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{AsyncProgram, Cfg, Handler, Letter, Rhs, Var};
use crate::multiset::Multiset;

use super::product::{Context, ContextGrammar, ProductGrammar};

/// A set of cancelled handlers.
pub type HandlerSet = BTreeSet<Handler>;

/// The grammar `r(G^c) × C` over posts. Each start derives, for its set `S`,
/// the posts that survive the handler run: posts of `b ∉ S` all survive, posts
/// of `b ∈ S` survive only after the last cancel of `b`.
#[derive(Clone, Debug)]
pub struct CancelProductGrammar {
    pub cfg: Cfg<Handler>,
    /// `[Y_∅ start Y_S]` for every derivable `S`, sorted by `S`.
    pub starts: Vec<(HandlerSet, Var)>,
}

type Key = (Var, HandlerSet);

fn fmt_set(s: &HandlerSet, names: &[String]) -> String {
    let v: Vec<&str> = s.iter().map(|h| names[h.index()].as_str()).collect();
    format!("{{{}}}", v.join(","))
}

/// Builds the cancel product for a context grammar. Only sets reachable from
/// `Y_∅` are materialized.
pub fn cancel_product_of(cg: &ContextGrammar, handler_names: &[String]) -> CancelProductGrammar {
    let g = &cg.cfg;
    let mut exits: BTreeMap<Key, BTreeSet<HandlerSet>> = BTreeMap::new();
    exits.insert((cg.start, HandlerSet::new()), BTreeSet::new());
    loop {
        let mut changed = false;
        let keys: Vec<Key> = exits.keys().cloned().collect();
        for (v, s1) in keys {
            let mut out: BTreeSet<HandlerSet> = BTreeSet::new();
            let mut demand: Vec<Key> = Vec::new();
            for p in g.rules_of(v) {
                match &p.rhs {
                    Rhs::Eps | Rhs::Term(Letter::Post(_)) | Rhs::Term(Letter::Internal(_)) => {
                        out.insert(s1.clone());
                    }
                    Rhs::Term(Letter::Cancel(h)) => {
                        let mut s2 = s1.clone();
                        s2.insert(*h);
                        out.insert(s2);
                    }
                    // Reversed: V -> B A, so B runs first.
                    Rhs::Pair(a, b) => match exits.get(&(*b, s1.clone())) {
                        None => demand.push((*b, s1.clone())),
                        Some(mids) => {
                            for mid in mids {
                                match exits.get(&(*a, mid.clone())) {
                                    None => demand.push((*a, mid.clone())),
                                    Some(ends) => out.extend(ends.iter().cloned()),
                                }
                            }
                        }
                    },
                }
            }
            for d in demand {
                exits.entry(d).or_insert_with(|| {
                    changed = true;
                    BTreeSet::new()
                });
            }
            let cur = exits.get_mut(&(v, s1)).unwrap();
            let before = cur.len();
            cur.extend(out);
            if cur.len() != before {
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let mut cfg: Cfg<Handler> = Cfg::new();
    let mut var_of = BTreeMap::new();
    for ((v, s1), ends) in &exits {
        for s2 in ends {
            let name = format!("[{}|{}|{}]", fmt_set(s1, handler_names), g.name(*v), fmt_set(s2, handler_names));
            var_of.insert((*v, s1.clone(), s2.clone()), cfg.var(&name));
        }
    }
    for ((v, s1), ends) in &exits {
        for s2 in ends {
            let lhs = var_of[&(*v, s1.clone(), s2.clone())];
            for p in g.rules_of(*v) {
                match &p.rhs {
                    Rhs::Eps | Rhs::Term(Letter::Internal(_)) => {
                        if s1 == s2 {
                            cfg.add(lhs, Rhs::Eps);
                        }
                    }
                    Rhs::Term(Letter::Post(h)) => {
                        if s1 == s2 {
                            cfg.add(lhs, if s1.contains(h) { Rhs::Eps } else { Rhs::Term(*h) });
                        }
                    }
                    Rhs::Term(Letter::Cancel(h)) => {
                        let mut s = s1.clone();
                        s.insert(*h);
                        if &s == s2 {
                            cfg.add(lhs, Rhs::Eps);
                        }
                    }
                    Rhs::Pair(a, b) => {
                        let Some(mids) = exits.get(&(*b, s1.clone())) else { continue };
                        for mid in mids {
                            if let (Some(&first), Some(&second)) =
                                (var_of.get(&(*b, s1.clone(), mid.clone())), var_of.get(&(*a, mid.clone(), s2.clone())))
                            {
                                cfg.add(lhs, Rhs::Pair(first, second));
                            }
                        }
                    }
                }
            }
        }
    }
    let start_key = (cg.start, HandlerSet::new());
    let raw_starts: Vec<(HandlerSet, Var)> =
        exits[&start_key].iter().map(|s| (s.clone(), var_of[&(cg.start, HandlerSet::new(), s.clone())])).collect();
    let start_vars: Vec<Var> = raw_starts.iter().map(|x| x.1).collect();
    let (pruned, map) = cfg.restrict(&start_vars);
    let starts = raw_starts.into_iter().filter_map(|(s, v)| map[v.index()].map(|nv| (s, nv))).collect();
    CancelProductGrammar { cfg: pruned, starts }
}

/// The cancel product of context `c`, or `None` when `L(G^c)` is empty.
pub fn build_cancel_product(p: &AsyncProgram, pg: &ProductGrammar, c: Context) -> Option<CancelProductGrammar> {
    pg.context_grammar(p, c).map(|cg| cancel_product_of(&cg, p.handlers()))
}

/// The buffer after a handler run: `m'(b) = m(b) + w(b)` if `b ∉ S`, else `w(b)`.
pub fn successor_buffer_cancel(m: &Multiset<Handler>, w: &Multiset<Handler>, s: &HandlerSet) -> Multiset<Handler> {
    m.filter(|b| !s.contains(&b)).sum(w)
}
