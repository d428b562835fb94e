//! Bounded Parikh images of context-free languages.

use std::collections::{BTreeSet, VecDeque};
use std::hash::Hash;

use crate::model::{Cfg, Handler, Letter, Rhs, Var};
use crate::multiset::Multiset;

use super::product::{Context, ProductGrammar};
use crate::model::AsyncProgram;

fn users<T: Clone + Eq + Hash>(g: &Cfg<T>) -> Vec<Vec<Var>> {
    let mut users = vec![Vec::new(); g.num_vars()];
    for p in g.productions() {
        if let Rhs::Pair(a, b) = p.rhs {
            users[a.index()].push(p.lhs);
            if b != a {
                users[b.index()].push(p.lhs);
            }
        }
    }
    for u in &mut users {
        u.sort();
        u.dedup();
    }
    users
}

/// For every variable, the Parikh images of its words whose Parikh image
/// satisfies `keep`. `keep` must be downward closed (e.g. a size bound).
pub fn parikh_sets_filtered<T: Copy + Ord + Hash>(
    g: &Cfg<T>,
    keep: impl Fn(&Multiset<T>) -> bool,
) -> Vec<BTreeSet<Multiset<T>>> {
    let users = users(g);
    let mut sets: Vec<BTreeSet<Multiset<T>>> = vec![BTreeSet::new(); g.num_vars()];
    let mut queued = vec![true; g.num_vars()];
    let mut queue: VecDeque<Var> = g.vars().collect();
    while let Some(x) = queue.pop_front() {
        queued[x.index()] = false;
        let mut new: Vec<Multiset<T>> = Vec::new();
        for p in g.rules_of(x) {
            match &p.rhs {
                Rhs::Eps => new.push(Multiset::new()),
                Rhs::Term(t) => new.push(Multiset::singleton(*t)),
                Rhs::Pair(a, b) => {
                    for ma in &sets[a.index()] {
                        for mb in &sets[b.index()] {
                            new.push(ma.sum(mb));
                        }
                    }
                }
            }
        }
        let mut changed = false;
        for m in new {
            if keep(&m) && sets[x.index()].insert(m) {
                changed = true;
            }
        }
        if changed {
            for &u in &users[x.index()] {
                if !queued[u.index()] {
                    queued[u.index()] = true;
                    queue.push_back(u);
                }
            }
        }
    }
    sets
}

/// For every variable, `{Parikh(w) | X ⇒* w, |w| ≤ bound}`.
pub fn parikh_sets<T: Copy + Ord + Hash>(g: &Cfg<T>, bound: u64) -> Vec<BTreeSet<Multiset<T>>> {
    parikh_sets_filtered(g, |m| m.size() <= bound)
}

/// Whether `target` is the Parikh image of some word derived from `start`.
pub fn parikh_member<T: Copy + Ord + Hash>(g: &Cfg<T>, start: Var, target: &Multiset<T>) -> bool {
    parikh_sets_filtered(g, |m| m.le(target))[start.index()].contains(target)
}

/// For every variable, the length of its longest word, capped at `cap`
/// (`Some(cap)` means "at least `cap`"); `None` for unproductive variables.
pub fn max_word_len<T: Clone + Eq + Hash>(g: &Cfg<T>, cap: u64) -> Vec<Option<u64>> {
    let mut len: Vec<Option<u64>> = vec![None; g.num_vars()];
    let mut changed = true;
    while changed {
        changed = false;
        for p in g.productions() {
            let v = match &p.rhs {
                Rhs::Eps => Some(0),
                Rhs::Term(_) => Some(1),
                Rhs::Pair(a, b) => match (len[a.index()], len[b.index()]) {
                    (Some(x), Some(y)) => Some((x + y).min(cap)),
                    _ => None,
                },
            };
            if let Some(v) = v {
                let cur = &mut len[p.lhs.index()];
                if cur.is_none_or(|c| c < v) {
                    *cur = Some(v);
                    changed = true;
                }
            }
        }
    }
    len
}

/// Parikh images of words of length at most `bound` that have a derivation of
/// index at most `k` (every sentential form holds at most `k` variables).
///
/// A tree whose root splits into subtrees of index `i` and `j` has index
/// `min(max(i + 1, j), max(i, j + 1))`, so level `k` is the least fixpoint of
/// `X -> A B` combining level `k - 1` on one side with level `k` on the other.
pub fn bounded_index_parikh<T: Copy + Ord + Hash>(
    g: &Cfg<T>,
    start: Var,
    k: usize,
    bound: u64,
) -> BTreeSet<Multiset<T>> {
    let n = g.num_vars();
    let mut prev: Vec<BTreeSet<Multiset<T>>> = vec![BTreeSet::new(); n];
    for _ in 0..k {
        let mut cur: Vec<BTreeSet<Multiset<T>>> = vec![BTreeSet::new(); n];
        let mut changed = true;
        while changed {
            changed = false;
            for p in g.productions() {
                let mut new: Vec<Multiset<T>> = Vec::new();
                match &p.rhs {
                    Rhs::Eps => new.push(Multiset::new()),
                    Rhs::Term(t) => new.push(Multiset::singleton(*t)),
                    Rhs::Pair(a, b) => {
                        for (x, y) in [(&prev[a.index()], &cur[b.index()]), (&cur[a.index()], &prev[b.index()])] {
                            for ma in x {
                                for mb in y {
                                    new.push(ma.sum(mb));
                                }
                            }
                        }
                    }
                }
                for m in new {
                    if m.size() <= bound && cur[p.lhs.index()].insert(m) {
                        changed = true;
                    }
                }
            }
        }
        // Levels only depend on the one below, so equal levels stay equal.
        if cur == prev {
            break;
        }
        prev = cur;
    }
    prev.swap_remove(start.index())
}

fn to_handlers(m: &Multiset<Letter>) -> Multiset<Handler> {
    m.map(|l| match l {
        Letter::Post(h) | Letter::Cancel(h) => h,
        Letter::Internal(_) => unreachable!("internal letters are projected away"),
    })
}

/// `{Parikh(w) | w ∈ L(G^c), |w| ≤ bound}` for a program without cancels.
pub fn context_language_parikh(
    p: &AsyncProgram,
    pg: &ProductGrammar,
    c: Context,
    bound: u64,
) -> BTreeSet<Multiset<Handler>> {
    match pg.context_grammar(p, c) {
        None => BTreeSet::new(),
        Some(cg) => parikh_sets(&cg.cfg, bound)[cg.start.index()].iter().map(to_handlers).collect(),
    }
}
