use std::collections::{HashMap, HashSet, VecDeque};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use super::lasso::is_fair_period;
use super::{
    check_termination, exact_graph, handler_named, refuse_cancel, AnalysisError, Answer, Budgets, LassoWitness, Query,
    Step, Verdict, Witness,
};
use crate::grammars::ProductGrammar;
use crate::model::{AsyncProgram, BudgetsHit, Cfg, ConfigGraph, Configuration, Handler, Letter, Rhs, Semantics, State};

type NodeOk<'a> = &'a dyn Fn(&Configuration) -> bool;
type EdgeOk<'a> = &'a dyn Fn(&Configuration, Handler) -> bool;

fn steps_to(g: &ConfigGraph, v: usize) -> Vec<Step> {
    g.path_to(v).into_iter().map(|(h, u)| (h, g.nodes[u].clone())).collect()
}

/// Shortest path inside `allowed` from `from` to `to`, as `(handler, node)` edges.
fn inner_path(
    g: &ConfigGraph,
    allowed: &HashSet<usize>,
    edge_ok: EdgeOk,
    from: usize,
    to: usize,
) -> Vec<(Handler, usize)> {
    let mut prev: HashMap<usize, (usize, Handler)> = HashMap::new();
    let mut queue = VecDeque::from([from]);
    let mut seen = HashSet::from([from]);
    while let Some(u) = queue.pop_front() {
        if u == to {
            break;
        }
        for &(h, v) in &g.succ[u] {
            if allowed.contains(&v) && edge_ok(&g.nodes[u], h) && seen.insert(v) {
                prev.insert(v, (u, h));
                queue.push_back(v);
            }
        }
    }
    let mut path = Vec::new();
    let mut cur = to;
    while cur != from {
        let (u, h) = prev[&cur];
        path.push((h, cur));
        cur = u;
    }
    path.reverse();
    path
}

/// A fair cycle in a complete configuration graph, restricted to nodes and
/// edges accepted by the filters, as a lasso with an unrestricted stem.
///
/// A non-trivial SCC holds a fair cycle iff every handler is dispatched on
/// one of its edges or is absent at one of its nodes.
pub fn fair_scc_lasso(p: &AsyncProgram, g: &ConfigGraph, node_ok: NodeOk, edge_ok: EdgeOk) -> Option<LassoWitness> {
    let mut dg: DiGraph<usize, Handler> = DiGraph::new();
    let mut ix: HashMap<usize, NodeIndex> = HashMap::new();
    for v in 0..g.nodes.len() {
        if node_ok(&g.nodes[v]) {
            ix.insert(v, dg.add_node(v));
        }
    }
    for (u, out) in g.succ.iter().enumerate() {
        let Some(&a) = ix.get(&u) else { continue };
        for &(h, v) in out {
            if let Some(&b) = ix.get(&v) {
                if edge_ok(&g.nodes[u], h) {
                    dg.add_edge(a, b, h);
                }
            }
        }
    }
    let mut sccs = tarjan_scc(&dg);
    // Prefer components close to the root, for short stems.
    sccs.sort_by_key(|c| c.iter().map(|&n| g.depth[dg[n]]).min());
    for comp in sccs {
        let members: HashSet<usize> = comp.iter().map(|&n| dg[n]).collect();
        let inner: Vec<(usize, Handler, usize)> = members
            .iter()
            .flat_map(|&u| g.succ[u].iter().map(move |&(h, v)| (u, h, v)))
            .filter(|&(u, h, v)| members.contains(&v) && edge_ok(&g.nodes[u], h))
            .collect();
        if inner.is_empty() {
            continue;
        }
        let mut targets = Vec::new();
        let mut fair = true;
        for b in p.handler_ids() {
            let mut edges: Vec<_> = inner.iter().filter(|e| e.1 == b).copied().collect();
            if !edges.is_empty() {
                edges.sort();
                targets.push(edges[0]);
            } else if !members.iter().any(|&v| g.nodes[v].buffer.get(b) == 0) {
                fair = false;
                break;
            }
        }
        if !fair {
            continue;
        }
        let mut sorted: Vec<usize> = members.iter().copied().collect();
        sorted.sort_by_key(|&v| (g.depth[v], v));
        let head = sorted[0];
        if targets.is_empty() {
            let mut first = inner.clone();
            first.sort();
            targets.push(first[0]);
        }
        let mut period = Vec::new();
        let mut cur = head;
        for (u, h, v) in targets {
            period.extend(inner_path(g, &members, edge_ok, cur, u));
            period.push((h, v));
            cur = v;
        }
        period.extend(inner_path(g, &members, edge_ok, cur, head));
        return Some(LassoWitness {
            start: g.nodes[0].clone(),
            stem: steps_to(g, head),
            period: period.into_iter().map(|(h, v)| (h, g.nodes[v].clone())).collect(),
        });
    }
    None
}

/// Searches the explored graph for a pumpable fair period: from a head,
/// track the handlers dispatched and the handlers seen pending, until a
/// configuration covering the head in the same state closes a fair loop.
fn search_fair_lasso(
    p: &AsyncProgram,
    g: &ConfigGraph,
    node_ok: NodeOk,
    edge_ok: EdgeOk,
    max_work: usize,
) -> Option<LassoWitness> {
    let n = p.handlers().len();
    if n > 64 {
        return None;
    }
    let all: u64 = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mask = |c: &Configuration| c.buffer.iter().fold(0u64, |m, (h, _)| m | (1 << h.index()));
    let mut work = 0usize;
    for head in 0..g.nodes.len() {
        let hc = &g.nodes[head];
        if !node_ok(hc) {
            continue;
        }
        // Handlers that may go unserved in the period: absent at the head.
        let absent = all & !mask(hc);
        type Key = (usize, u64, u64);
        let mut prev: HashMap<Key, (Key, Handler)> = HashMap::new();
        let start: Key = (head, 0, 0);
        let mut queue = VecDeque::from([start]);
        while let Some(key @ (u, done, seen)) = queue.pop_front() {
            work += 1;
            if work > max_work {
                return None;
            }
            for &(h, v) in &g.succ[u] {
                let c = &g.nodes[v];
                if !edge_ok(&g.nodes[u], h) || !node_ok(c) {
                    continue;
                }
                let next: Key = (v, done | (1 << h.index()), seen | mask(c));
                if prev.contains_key(&next) || next == start {
                    continue;
                }
                prev.insert(next, (key, h));
                let (_, d, s) = next;
                let served = d | (absent & !s);
                if c.state == hc.state && hc.buffer.le(&c.buffer) && served == all {
                    let mut period = Vec::new();
                    let mut cur = next;
                    while cur != start {
                        let (k, h) = prev[&cur];
                        period.push((h, g.nodes[cur.0].clone()));
                        cur = k;
                    }
                    period.reverse();
                    debug_assert!(is_fair_period(p, hc, &period));
                    return Some(LassoWitness { start: g.nodes[0].clone(), stem: steps_to(g, head), period });
                }
                queue.push_back(next);
            }
        }
    }
    None
}

/// States from which no handler posts anything, closed under transfer:
/// every run entering them is finite.
pub fn quiet_states(p: &AsyncProgram) -> HashSet<State> {
    let pg = ProductGrammar::of_program(p);
    let contexts = pg.contexts(p);
    let mut quiet: HashSet<State> = p.state_ids().collect();
    let posts_nothing: HashMap<_, bool> = contexts
        .iter()
        .map(|&c| {
            let cg = pg.context_grammar(p, c).expect("non-empty context");
            let lens = crate::grammars::max_word_len(&cg.cfg, 1);
            (c, lens[cg.start.index()] == Some(0))
        })
        .collect();
    loop {
        let bad: Vec<State> = contexts
            .iter()
            .filter(|c| quiet.contains(&c.from) && (!posts_nothing[c] || !quiet.contains(&c.to)))
            .map(|c| c.from)
            .collect();
        if bad.is_empty() {
            return quiet;
        }
        for d in bad {
            quiet.remove(&d);
        }
    }
}

/// Whether every word of `cfg` from `start` posts `b`.
fn always_posts(cfg: &Cfg<Letter>, start: crate::model::Var, b: Handler) -> bool {
    let mut without: Cfg<Letter> = Cfg::new();
    for v in cfg.vars() {
        without.var(cfg.name(v));
    }
    for pr in cfg.productions() {
        if pr.rhs != Rhs::Term(Letter::Post(b)) {
            without.add(pr.lhs, pr.rhs.clone());
        }
    }
    !without.productive()[start.index()]
}

/// Proof that no fair infinite run exists: an infinite run eventually stays
/// in one strongly connected set of non-quiet states, and each such set has
/// a handler that every context inside it posts but none dispatches.
fn starving_components(p: &AsyncProgram) -> Option<String> {
    let pg = ProductGrammar::of_program(p);
    let quiet = quiet_states(p);
    let contexts: Vec<_> =
        pg.contexts(p).into_iter().filter(|c| !quiet.contains(&c.from) && !quiet.contains(&c.to)).collect();
    let mut dg: DiGraph<State, ()> = DiGraph::new();
    let ix: HashMap<State, NodeIndex> =
        p.state_ids().filter(|d| !quiet.contains(d)).map(|d| (d, dg.add_node(d))).collect();
    for c in &contexts {
        dg.update_edge(ix[&c.from], ix[&c.to], ());
    }
    let mut notes = Vec::new();
    for comp in tarjan_scc(&dg) {
        let members: HashSet<State> = comp.iter().map(|&n| dg[n]).collect();
        let inside: Vec<_> = contexts.iter().filter(|c| members.contains(&c.from) && members.contains(&c.to)).collect();
        if inside.is_empty() {
            continue;
        }
        let b = p.handler_ids().find(|&b| {
            inside.iter().all(|c| {
                c.handler != b && {
                    let cg = pg.context_grammar(p, **c).expect("non-empty context");
                    always_posts(&cg.cfg, cg.start, b)
                }
            })
        })?;
        let mut names: Vec<&str> = members.iter().map(|&d| p.state_name(d)).collect();
        names.sort();
        notes.push(format!("{{{}}} starves {}", names.join(","), p.handler_name(b)));
    }
    Some(format!("quiet states {}; {}", quiet.len(), if notes.is_empty() { "no cycles".into() } else { notes.join("; ") }))
}

/// Is there a fair infinite run?
///
/// Exact on bounded programs via fair SCCs of the configuration graph;
/// otherwise a fair-lasso search, then a structural refutation, else UNKNOWN.
pub fn check_fair_termination(p: &AsyncProgram, budgets: &Budgets) -> Result<Verdict, AnalysisError> {
    refuse_cancel(p, "fair termination")?;
    let query = Query::FairTermination;
    let term = check_termination(p, budgets)?;
    if term.answer == Answer::No {
        return Ok(Verdict::new(query, Answer::No).with_certificate("no infinite run"));
    }
    let yes = |l: LassoWitness, how: &str| {
        Verdict::new(Query::FairTermination, Answer::Yes).with_witness(Witness::Lasso(l)).with_certificate(how)
    };
    if let Some(g) = exact_graph(p, budgets) {
        return Ok(match fair_scc_lasso(p, &g, &|_| true, &|_, _| true) {
            Some(l) => yes(l, "fair SCC of the exact configuration graph"),
            None => Verdict::new(query, Answer::No)
                .with_certificate(format!("no fair SCC among {} configurations", g.nodes.len())),
        });
    }
    let (found, hit) = staged_search(p, budgets, &|_| true, &|_, _| true);
    if let Some(l) = found {
        return Ok(yes(l, "pumpable fair lasso"));
    }
    if let Some(proof) = starving_components(p) {
        return Ok(Verdict::new(query, Answer::No).with_certificate(proof));
    }
    Ok(Verdict::new(query, Answer::Unknown).with_budgets(hit))
}

/// Fair-lasso search on graphs explored with growing state budgets, so
/// short lassos are found without exploring the whole budget.
fn staged_search(p: &AsyncProgram, budgets: &Budgets, node_ok: NodeOk, edge_ok: EdgeOk) -> (Option<LassoWitness>, BudgetsHit) {
    let sem = Semantics::new(p, budgets.post_budget);
    let mut limit = budgets.max_states.min(1000);
    loop {
        let g = ConfigGraph::explore(&sem, limit, budgets.max_depth);
        if let Some(l) = search_fair_lasso(p, &g, node_ok, edge_ok, limit) {
            return (Some(l), g.hit);
        }
        if limit >= budgets.max_states || !g.hit.states {
            return (None, g.hit);
        }
        limit = budgets.max_states.min(limit * 10);
    }
}

/// Is there a fair infinite run along which one pending instance of `a` is
/// never dispatched? From some point on `a` stays pending and every
/// dispatch of `a` happens with at least two instances pending.
pub fn check_fair_starvation(p: &AsyncProgram, a: &str, budgets: &Budgets) -> Result<Verdict, AnalysisError> {
    refuse_cancel(p, "starvation")?;
    let h = handler_named(p, a)?;
    let query = Query::Starvation(a.to_string());
    let fair = check_fair_termination(p, budgets)?;
    if fair.answer == Answer::No {
        let why = fair.certificate.unwrap_or_default();
        return Ok(Verdict::new(query, Answer::No).with_certificate(format!("no fair infinite run ({why})")));
    }
    let node_ok = |c: &Configuration| c.buffer.get(h) >= 1;
    let edge_ok = |c: &Configuration, d: Handler| d != h || c.buffer.get(h) >= 2;
    let yes = |l: LassoWitness, how: &str| {
        Verdict::new(Query::Starvation(a.to_string()), Answer::Yes).with_witness(Witness::Lasso(l)).with_certificate(how)
    };
    if let Some(g) = exact_graph(p, budgets) {
        return Ok(match fair_scc_lasso(p, &g, &node_ok, &edge_ok) {
            Some(l) => yes(l, "starving fair SCC of the exact configuration graph"),
            None => Verdict::new(query, Answer::No)
                .with_certificate(format!("no starving fair SCC among {} configurations", g.nodes.len())),
        });
    }
    let (found, hit) = staged_search(p, budgets, &node_ok, &edge_ok);
    if let Some(l) = found {
        return Ok(yes(l, "pumpable starving fair lasso"));
    }
    Ok(Verdict::new(query, Answer::Unknown).with_budgets(hit))
}
