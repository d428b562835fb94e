use std::collections::{HashMap, VecDeque};

use super::{final_config, AnalysisError, Budgets};
use crate::model::{AsyncProgram, BudgetsHit, Configuration, Handler, Semantics};

/// A dispatched handler and the configuration reached when it returns.
pub type Step = (Handler, Configuration);

/// A run `start -stem-> head -period-> end` with `end ⪰ head` in the same
/// state, so the period can be repeated forever.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LassoWitness {
    pub start: Configuration,
    pub stem: Vec<Step>,
    pub period: Vec<Step>,
}

impl LassoWitness {
    pub fn head(&self) -> &Configuration {
        final_config(&self.start, &self.stem)
    }

    pub fn end(&self) -> &Configuration {
        final_config(self.head(), &self.period)
    }

    /// Checks every step against the exact transition relation, and that the
    /// period is non-empty and pumpable.
    pub fn replay(&self, p: &AsyncProgram) -> Result<(), AnalysisError> {
        if self.start != p.initial() {
            return Err(AnalysisError::NotReplayable("the stem does not start at the initial configuration".into()));
        }
        replay_run(p, &self.start, &self.stem)?;
        replay_run(p, self.head(), &self.period)?;
        if self.period.is_empty() {
            return Err(AnalysisError::NotReplayable("empty period".into()));
        }
        let (h, e) = (self.head(), self.end());
        if h.state != e.state || !h.buffer.le(&e.buffer) {
            return Err(AnalysisError::NotReplayable("the period does not return above its head".into()));
        }
        Ok(())
    }
}

/// Checks that each step is a transition of `p`.
pub fn replay_run(p: &AsyncProgram, start: &Configuration, steps: &[Step]) -> Result<(), AnalysisError> {
    let sem = Semantics::new(p, 0);
    let mut cur = start;
    for (i, (h, next)) in steps.iter().enumerate() {
        if !sem.is_step(cur, *h, next) {
            return Err(AnalysisError::NotReplayable(format!(
                "step {} dispatching {} from {} to {} is not a transition",
                i + 1,
                p.handler_name(*h),
                p.fmt_config(cur),
                p.fmt_config(next)
            )));
        }
        cur = next;
    }
    Ok(())
}

/// Whether repeating the period forever is a fair run: the period
/// dispatches something, and every handler is dispatched in the period or
/// is absent at the head and never posted in the period.
pub fn fair_lasso_check(p: &AsyncProgram, lasso: &LassoWitness) -> Result<bool, AnalysisError> {
    lasso.replay(p)?;
    Ok(is_fair_period(p, lasso.head(), &lasso.period))
}

pub(crate) fn is_fair_period(p: &AsyncProgram, head: &Configuration, period: &[Step]) -> bool {
    !period.is_empty()
        && p.handler_ids().all(|b| {
            period.iter().any(|(h, _)| *h == b)
                || (head.buffer.get(b) == 0 && period.iter().all(|(_, c)| c.buffer.get(b) == 0))
        })
}

struct Tree {
    nodes: Vec<Configuration>,
    parent: Vec<Option<(usize, Handler)>>,
}

impl Tree {
    /// Steps along the tree from ancestor `from` down to `to`.
    fn path(&self, from: usize, to: usize) -> Vec<Step> {
        let mut steps = Vec::new();
        let mut cur = to;
        while cur != from {
            let (u, h) = self.parent[cur].expect("ancestor on the tree path");
            steps.push((h, self.nodes[cur].clone()));
            cur = u;
        }
        steps.reverse();
        steps
    }
}

type Closing = (usize, usize, Handler, Configuration);

/// Grows a breadth-first tree from `root` until some edge `u -h-> c` has a
/// tree ancestor `x` of `u` with `c ⪰ x` in the same state.
fn grow(sem: &Semantics, root: Configuration, max_states: usize, max_depth: usize, strict: bool) -> (Tree, Option<Closing>, BudgetsHit) {
    let mut tree = Tree { nodes: vec![root.clone()], parent: vec![None] };
    let mut index: HashMap<Configuration, usize> = HashMap::from([(root, 0)]);
    let mut depth = vec![0usize];
    let mut hit = BudgetsHit::default();
    let mut queue = VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        if depth[u] >= max_depth {
            hit.depth = true;
            continue;
        }
        let succ = sem.step(&tree.nodes[u]);
        hit.posts |= succ.truncated;
        for (h, c) in succ.moves {
            let mut anc = Some(u);
            while let Some(x) = anc {
                let a = &tree.nodes[x];
                if a.state == c.state && a.buffer.le(&c.buffer) && (!strict || a.buffer != c.buffer) {
                    return (tree, Some((x, u, h, c)), hit);
                }
                anc = tree.parent[x].map(|e| e.0);
            }
            if !index.contains_key(&c) {
                if tree.nodes.len() >= max_states {
                    hit.states = true;
                    continue;
                }
                index.insert(c.clone(), tree.nodes.len());
                tree.nodes.push(c);
                tree.parent.push(Some((u, h)));
                depth.push(depth[u] + 1);
                queue.push_back(tree.nodes.len() - 1);
            }
        }
    }
    (tree, None, hit)
}

/// Searches for a lasso whose end covers its head (strictly, if `strict`).
///
/// A breadth-first search checks each new edge against the tree ancestors
/// of its source. Cycles closed by cross edges are caught by re-rooting the
/// search at each explored configuration.
pub fn find_lasso(sem: &Semantics, budgets: &Budgets, strict: bool) -> (Option<LassoWitness>, BudgetsHit) {
    let start = sem.program().initial();
    let (tree, closing, hit) = grow(sem, start.clone(), budgets.max_states, budgets.max_depth, strict);
    if let Some((x, u, h, c)) = closing {
        let mut period = tree.path(x, u);
        period.push((h, c));
        return (Some(LassoWitness { start, stem: tree.path(0, x), period }), hit);
    }
    let per_root = (budgets.max_states / 50).max(500);
    for r in 1..tree.nodes.len().min(2000) {
        let (sub, closing, _) = grow(sem, tree.nodes[r].clone(), per_root, budgets.max_depth, strict);
        if let Some((x, u, h, c)) = closing {
            let mut stem = tree.path(0, r);
            stem.extend(sub.path(0, x));
            let mut period = sub.path(x, u);
            period.push((h, c));
            return (Some(LassoWitness { start, stem, period }), hit);
        }
    }
    (None, hit)
}
