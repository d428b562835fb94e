#![allow(clippy::needless_range_loop)]

mod common;

use std::collections::{BTreeSet, HashSet};

use asyncver::grammars::{bounded_index_parikh, build_cancel_product, context_language_parikh, parikh_sets, Context, ProductGrammar};
use asyncver::model::{Handler, State};
use asyncver::Multiset;
use common::{cfg_words, effects, parikh, random_program, random_raw, raw_words, rng, Eff, Shape};

#[test]
fn normalization_preserves_words() {
    let mut r = rng(11);
    for _ in 0..150 {
        let (raw, rules) = random_raw(&mut r);
        let g = raw.normalize(&HashSet::new());
        let expected = raw_words(raw.num_vars(), &rules, 6);
        let got = cfg_words(&g, 6);
        for v in 0..raw.num_vars() {
            let nv = g.lookup(&format!("A{v}")).unwrap();
            assert_eq!(got[nv.index()], expected[v], "variable A{v}");
        }
        for p in g.productions() {
            if let asyncver::model::Rhs::Pair(a, b) = p.rhs {
                assert!(a.index() < g.num_vars() && b.index() < g.num_vars());
            }
        }
    }
}

#[test]
fn product_grammar_matches_run_oracle() {
    let mut r = rng(12);
    for cancels in [false, true] {
        for _ in 0..80 {
            let rp = random_program(&mut r, &Shape { cancels, ..Shape::default() });
            let p = &rp.program;
            let pg = ProductGrammar::of_program(p);
            let words = cfg_words(pg.cfg(), 5);
            let oracle = common::product_words(&rp, 5);
            for (x, name) in rp.var_names.iter().enumerate() {
                let v = p.grammar().lookup(name).unwrap();
                for d in 0..rp.states {
                    for e in 0..rp.states {
                        let got = pg
                            .triple(State(d as u32), v, State(e as u32))
                            .map(|t| words[t.index()].clone())
                            .unwrap_or_default();
                        let want = oracle.get(&(d, x, e)).cloned().unwrap_or_default();
                        assert_eq!(got, want, "[d{d} {name} d{e}] in\n{p}");
                    }
                }
            }
        }
    }
}

#[test]
fn context_parikh_matches_effects() {
    let mut r = rng(13);
    for _ in 0..150 {
        let rp = random_program(&mut r, &Shape::default());
        let p = &rp.program;
        let pg = ProductGrammar::of_program(p);
        let eff = effects(&rp, 4);
        for d in 0..rp.states {
            for h in 0..rp.handlers {
                for e in 0..rp.states {
                    let c = Context::new(State(d as u32), Handler(h as u32), State(e as u32));
                    let got = context_language_parikh(p, &pg, c, 4);
                    let want: BTreeSet<Multiset<Handler>> =
                        eff.get(&(d, h, e)).into_iter().flatten().map(Eff::multiset).collect();
                    assert_eq!(got, want, "{} in\n{p}", c.describe(p));
                }
            }
        }
    }
}

#[test]
fn cancel_product_matches_effects() {
    let mut r = rng(14);
    for _ in 0..120 {
        let rp = random_program(&mut r, &Shape { cancels: true, ..Shape::default() });
        let p = &rp.program;
        let pg = ProductGrammar::of_program(p);
        let eff = effects(&rp, 4);
        for d in 0..rp.states {
            for h in 0..rp.handlers {
                for e in 0..rp.states {
                    let c = Context::new(State(d as u32), Handler(h as u32), State(e as u32));
                    let mut got = BTreeSet::new();
                    if let Some(cp) = build_cancel_product(p, &pg, c) {
                        let sets = parikh_sets(&cp.cfg, 4);
                        for (s, v) in &cp.starts {
                            for m in &sets[v.index()] {
                                let cancelled = s.iter().map(|b| b.index()).collect();
                                let posts = (0..rp.handlers).map(|b| m.get(Handler(b as u32)) as u8).collect();
                                got.insert(Eff { cancelled, posts });
                            }
                        }
                    }
                    let want = eff.get(&(d, h, e)).cloned().unwrap_or_default();
                    assert_eq!(got, want, "{} in\n{p}", c.describe(p));
                }
            }
        }
    }
}

/// Index `|X| + 1` loses no Parikh image.
#[test]
fn bounded_index_law_on_random_grammars() {
    let mut r = rng(15);
    for _ in 0..150 {
        let (raw, rules) = random_raw(&mut r);
        let g = raw.normalize(&HashSet::new());
        let words = raw_words(raw.num_vars(), &rules, 6);
        for v in 0..raw.num_vars() {
            let start = g.lookup(&format!("A{v}")).unwrap();
            let want: BTreeSet<Multiset<char>> = words[v].iter().map(|w| parikh(w)).collect();
            let got = bounded_index_parikh(&g, start, g.num_vars() + 1, 6);
            assert_eq!(got, want, "A{v}");
            let mut prev = BTreeSet::new();
            for k in 1..=g.num_vars() + 1 {
                let cur = bounded_index_parikh(&g, start, k, 6);
                assert!(prev.is_subset(&cur), "index {k} lost images");
                prev = cur;
            }
        }
    }
}

#[test]
fn bounded_index_law_on_context_grammars() {
    let mut r = rng(16);
    for _ in 0..60 {
        let rp = random_program(&mut r, &Shape::default());
        let p = &rp.program;
        let pg = ProductGrammar::of_program(p);
        for c in pg.contexts(p) {
            let cg = pg.context_grammar(p, c).unwrap();
            let want: BTreeSet<_> = cfg_words(&cg.cfg, 6)[cg.start.index()].iter().map(|w| parikh(w)).collect();
            assert_eq!(bounded_index_parikh(&cg.cfg, cg.start, cg.num_vars() + 1, 6), want);
        }
    }
}

/// Parikh images reachable through sentential forms with at most `k`
/// variables, explored up to commutation.
fn index_oracle(g: &asyncver::model::Cfg<char>, start: asyncver::model::Var, k: usize, bound: u64) -> BTreeSet<Multiset<char>> {
    use asyncver::model::Rhs;
    type Form = (Vec<usize>, Multiset<char>);
    let init: Form = (vec![start.index()], Multiset::new());
    let mut seen: HashSet<Form> = HashSet::from([init.clone()]);
    let mut stack = vec![init];
    let mut out = BTreeSet::new();
    while let Some((vars, terms)) = stack.pop() {
        if vars.is_empty() {
            out.insert(terms);
            continue;
        }
        for i in 0..vars.len() {
            let mut rest = vars.clone();
            let x = rest.remove(i);
            for p in g.productions().iter().filter(|p| p.lhs.index() == x) {
                let mut v2 = rest.clone();
                let mut t2 = terms.clone();
                match &p.rhs {
                    Rhs::Eps => {}
                    Rhs::Term(c) => t2.add(*c, 1),
                    Rhs::Pair(a, b) => v2.extend([a.index(), b.index()]),
                }
                v2.sort();
                if v2.len() > k || t2.size() > bound {
                    continue;
                }
                let f = (v2, t2);
                if seen.insert(f.clone()) {
                    stack.push(f);
                }
            }
        }
    }
    out
}

#[test]
fn index_levels_match_sentential_forms() {
    let mut r = rng(17);
    for _ in 0..150 {
        let (raw, _) = random_raw(&mut r);
        let g = raw.normalize(&HashSet::new());
        for v in 0..raw.num_vars() {
            let start = g.lookup(&format!("A{v}")).unwrap();
            for k in 1..=3 {
                assert_eq!(bounded_index_parikh(&g, start, k, 5), index_oracle(&g, start, k, 5), "A{v} index {k}");
            }
        }
    }
}
