use std::collections::HashSet;

use super::{find_lasso, refuse_cancel, AnalysisError, Answer, Budgets, Query, Verdict, Witness};
use crate::compile::{stitch, stitch_cancel, CompiledNet};
use crate::grammars::{Context, ProductGrammar};
use crate::model::{AsyncProgram, BudgetsHit, Configuration, ConfigGraph, Handler, Semantics, State};
use crate::petri::{backward_cover_with, cover_overapprox, karp_miller_with, CoverCertificate, Count, KmLimits, UpwardBasis};

fn compiled(p: &AsyncProgram) -> CompiledNet {
    if p.has_cancels() {
        stitch_cancel(p)
    } else {
        stitch(p).expect("program without cancels")
    }
}

/// Shortest run reaching a configuration accepted by `goal`, by breadth-first search.
fn search_run(
    p: &AsyncProgram,
    budgets: &Budgets,
    goal: impl Fn(&Configuration) -> bool,
) -> (Option<Vec<super::Step>>, BudgetsHit) {
    let sem = Semantics::new(p, budgets.post_budget);
    let g = ConfigGraph::explore(&sem, budgets.max_states, budgets.max_depth);
    let found = (0..g.nodes.len()).find(|&v| goal(&g.nodes[v]));
    let run = found.map(|v| g.path_to(v).into_iter().map(|(h, u)| (h, g.nodes[u].clone())).collect());
    (run, g.hit)
}

/// Is a configuration with state `d_f` reachable? A bounded forward search,
/// a Karp-Miller over-approximation, then backward coverability of `↑⟦d_f⟧` on the compiled (reset) net.
pub fn check_safety(p: &AsyncProgram, d_f: &str, budgets: &Budgets) -> Result<Verdict, AnalysisError> {
    let d = p.state_by_name(d_f).ok_or_else(|| AnalysisError::UnknownState(d_f.to_string()))?;
    let query = Query::Safety(d_f.to_string());
    // Short runs are common; find them before the backward search.
    let quick = Budgets { max_states: budgets.max_states.min(2000), ..*budgets };
    if let (Some(run), _) = search_run(p, &quick, |c| c.state == d) {
        return Ok(Verdict::new(query, Answer::Yes).with_witness(Witness::Run(run)).with_certificate("forward search"));
    }
    if !control_reachable(p).contains(&d) {
        return Ok(Verdict::new(query, Answer::No).with_certificate("unreachable in the context graph"));
    }
    let cn = compiled(p);
    let goal = cn.marking_of(&Configuration::new(d, Default::default()));
    let over = cover_overapprox(&cn.net, KmLimits { max_nodes: budgets.max_states });
    if over.complete() && !over.nodes.iter().any(|m| m.covers(&goal)) {
        return Ok(Verdict::new(query, Answer::No)
            .with_certificate(format!("coverability over-approximation: {} nodes", over.nodes.len())));
    }
    let target = UpwardBasis::singleton(goal);
    let res = backward_cover_with(&cn.net, &target, &|m| cn.may_cover(m), budgets.max_states);
    match res.coverable {
        Some(true) => {
            let mut v = Verdict::new(query, Answer::Yes);
            let run = match &res.certificate {
                CoverCertificate::Firing(seq) => cn.dispatches(seq),
                _ => None,
            };
            let run = run.or_else(|| search_run(p, budgets, |c| c.state == d).0);
            if let Some(run) = run {
                v = v.with_witness(Witness::Run(run));
            }
            Ok(v.with_certificate(format!("backward coverability: {}", res.certificate)))
        }
        Some(false) => Ok(Verdict::new(query, Answer::No).with_certificate(format!(
            "backward coverability: {} generated, {}",
            res.generated, res.certificate
        ))),
        None => Ok(Verdict::new(query, Answer::Unknown)
            .with_budgets(BudgetsHit { states: true, ..Default::default() })
            .with_certificate(format!("backward coverability stopped after {} elements", res.generated))),
    }
}

/// States reachable through contexts with a non-empty language whose
/// handler is initially pending or posted somewhere.
fn control_reachable(p: &AsyncProgram) -> HashSet<State> {
    let pg = ProductGrammar::of_program(p);
    let live = |h: Handler| p.init_buffer().get(h) > 0 || p.is_posted(h);
    let edges: Vec<Context> = pg.contexts(p).into_iter().filter(|c| live(c.handler)).collect();
    let mut seen = HashSet::from([p.init_state()]);
    let mut stack = vec![p.init_state()];
    while let Some(d) = stack.pop() {
        for c in edges.iter().filter(|c| c.from == d) {
            if seen.insert(c.to) {
                stack.push(c.to);
            }
        }
    }
    seen
}

/// Is the task buffer bounded? Karp-Miller on the compiled net.
pub fn check_boundedness(p: &AsyncProgram, budgets: &Budgets) -> Result<Verdict, AnalysisError> {
    refuse_cancel(p, "boundedness")?;
    let cn = compiled(p);
    let km = karp_miller_with(&cn.net, KmLimits { max_nodes: budgets.max_states }, |m| m.has_omega())
        .expect("plain net");
    let query = Query::Boundedness;
    if let Some(v) = km.stopped_at {
        let places: Vec<String> = km.nodes[v].omega_places().map(|q| cn.net.place_name(q).to_string()).collect();
        let mut verdict = Verdict::new(query, Answer::No).with_certificate(format!(
            "karp-miller: ω on {} after {} firings",
            places.join(" "),
            km.path_to(v).len()
        ));
        let sem = Semantics::new(p, budgets.post_budget);
        let (lasso, hit) = find_lasso(&sem, budgets, true);
        if let Some(l) = lasso {
            verdict = verdict.with_witness(Witness::Lasso(l));
        } else {
            verdict = verdict.with_budgets(hit);
        }
        return Ok(verdict);
    }
    if km.truncated {
        return Ok(Verdict::new(query, Answer::Unknown)
            .with_budgets(BudgetsHit { states: true, ..Default::default() })
            .with_certificate(format!("karp-miller stopped after {} nodes", km.nodes.len())));
    }
    Ok(Verdict::new(query, Answer::Yes).with_certificate(format!("karp-miller: {} nodes, no ω", km.nodes.len())))
}

/// Is there an infinite run? Karp-Miller on the compiled net with a
/// monitor place marked by every dispatch; ω there means an infinite run.
pub fn check_termination(p: &AsyncProgram, budgets: &Budgets) -> Result<Verdict, AnalysisError> {
    refuse_cancel(p, "termination")?;
    let mut cn = compiled(p);
    let pw = cn.add_monitor();
    let km = karp_miller_with(&cn.net, KmLimits { max_nodes: budgets.max_states }, |m| m.get(pw) == Count::Omega)
        .expect("plain net");
    let query = Query::Termination;
    if let Some(v) = km.stopped_at {
        let mut verdict = Verdict::new(query, Answer::Yes)
            .with_certificate(format!("karp-miller: ω on p_w after {} firings", km.path_to(v).len()));
        let sem = Semantics::new(p, budgets.post_budget);
        let (lasso, hit) = find_lasso(&sem, budgets, false);
        if let Some(l) = lasso {
            verdict = verdict.with_witness(Witness::Lasso(l));
        } else {
            verdict = verdict.with_budgets(hit);
        }
        return Ok(verdict);
    }
    if km.truncated {
        return Ok(Verdict::new(query, Answer::Unknown)
            .with_budgets(BudgetsHit { states: true, ..Default::default() })
            .with_certificate(format!("karp-miller stopped after {} nodes", km.nodes.len())));
    }
    Ok(Verdict::new(query, Answer::No).with_certificate(format!("karp-miller: {} nodes, p_w bounded", km.nodes.len())))
}

/// The full reachable configuration graph of a bounded program without
/// cancels. The post budget is the largest buffer size in the coverability
/// graph, so no dispatch is truncated. `None` if the program is unbounded or
/// a budget runs out.
pub fn exact_graph(p: &AsyncProgram, budgets: &Budgets) -> Option<ConfigGraph> {
    if p.has_cancels() {
        return None;
    }
    let cn = compiled(p);
    let km = karp_miller_with(&cn.net, KmLimits { max_nodes: budgets.max_states }, |m| m.has_omega()).ok()?;
    if km.stopped_at.is_some() || km.truncated {
        return None;
    }
    let posts: u64 = km
        .nodes
        .iter()
        .map(|m| {
            cn.handler_places
                .iter()
                .map(|&h| match m.get(h) {
                    Count::Fin(n) => n,
                    Count::Omega => unreachable!("bounded"),
                })
                .sum::<u64>()
        })
        .max()
        .unwrap_or(0);
    let sem = Semantics::new(p, posts);
    let mut g = ConfigGraph::explore(&sem, budgets.max_states, usize::MAX);
    // Posts never exceed the largest reachable buffer.
    g.hit.posts = false;
    g.exhausted().then_some(g)
}

/// Is configuration `c` reachable? Exact on bounded programs; otherwise a
/// bounded search, with backward coverability as a refutation.
pub fn check_config_reachability(
    p: &AsyncProgram,
    c: &Configuration,
    budgets: &Budgets,
) -> Result<Verdict, AnalysisError> {
    let query = Query::Reachability(p.fmt_config(c));
    if let Some(g) = exact_graph(p, budgets) {
        return Ok(match g.index.get(c) {
            Some(&v) => Verdict::new(query, Answer::Yes)
                .with_witness(Witness::Run(g.path_to(v).into_iter().map(|(h, u)| (h, g.nodes[u].clone())).collect()))
                .with_certificate("exact configuration graph"),
            None => Verdict::new(query, Answer::No)
                .with_certificate(format!("exact configuration graph with {} configurations", g.nodes.len())),
        });
    }
    let (run, hit) = search_run(p, budgets, |x| x == c);
    if let Some(run) = run {
        return Ok(Verdict::new(query, Answer::Yes).with_witness(Witness::Run(run)));
    }
    if !hit.any() {
        return Ok(Verdict::new(query, Answer::No).with_certificate("exhaustive enumeration"));
    }
    let cn = compiled(p);
    let target = UpwardBasis::singleton(cn.marking_of(c));
    let res = backward_cover_with(&cn.net, &target, &|m| cn.may_cover(m), budgets.max_states);
    if res.coverable == Some(false) {
        return Ok(Verdict::new(query, Answer::No).with_certificate(format!("not coverable: {}", res.certificate)));
    }
    Ok(Verdict::new(query, Answer::Unknown).with_budgets(hit))
}
