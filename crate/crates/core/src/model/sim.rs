//! Explicit-state semantics: successors of configurations and bounded exploration.

use std::collections::{BTreeSet, HashMap, VecDeque};

use super::{AsyncProgram, Configuration, Handler, Letter, State};
use crate::grammars::{
    cancel_product_of, max_word_len, parikh_member, parikh_sets, successor_buffer_cancel, Context, HandlerSet,
    ProductGrammar,
};
use crate::multiset::Multiset;

/// What one handler run does to the buffer: clear `cleared`, then add `posts`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Effect {
    pub posts: Multiset<Handler>,
    pub cleared: HandlerSet,
}

#[derive(Clone, Debug)]
struct Entry {
    to: State,
    effects: Vec<Effect>,
    truncated: bool,
}

/// The transition relation of a program, with per-dispatch posts bounded by a budget.
#[derive(Clone, Debug)]
pub struct Semantics<'p> {
    program: &'p AsyncProgram,
    product: ProductGrammar,
    post_budget: u64,
    table: HashMap<(State, Handler), Vec<Entry>>,
}

/// Successors of one configuration.
#[derive(Clone, Debug, Default)]
pub struct Successors {
    pub moves: Vec<(Handler, Configuration)>,
    /// Some dispatch could post more than the budget allows.
    pub truncated: bool,
}

impl<'p> Semantics<'p> {
    pub fn new(program: &'p AsyncProgram, post_budget: u64) -> Self {
        let product = ProductGrammar::of_program(program);
        let mut table: HashMap<(State, Handler), Vec<Entry>> = HashMap::new();
        if program.has_cancels() {
            for c in product.contexts(program) {
                let cg = product.context_grammar(program, c).expect("non-empty context");
                let cp = cancel_product_of(&cg, program.handlers());
                let sets = parikh_sets(&cp.cfg, post_budget);
                let lens = max_word_len(&cp.cfg, post_budget + 1);
                let mut effects = Vec::new();
                let mut truncated = false;
                for (s, v) in &cp.starts {
                    truncated |= lens[v.index()].is_some_and(|l| l > post_budget);
                    for m in &sets[v.index()] {
                        effects.push(Effect { posts: m.clone(), cleared: s.clone() });
                    }
                }
                effects.sort();
                table.entry((c.from, c.handler)).or_default().push(Entry { to: c.to, effects, truncated });
            }
        } else {
            let sets = parikh_sets(product.cfg(), post_budget);
            let lens = max_word_len(product.cfg(), post_budget + 1);
            for c in product.contexts(program) {
                let v = product.context_start(program, c).unwrap();
                let effects = sets[v.index()]
                    .iter()
                    .map(|m| Effect { posts: letters_to_handlers(m), cleared: HandlerSet::new() })
                    .collect();
                let truncated = lens[v.index()].is_some_and(|l| l > post_budget);
                table.entry((c.from, c.handler)).or_default().push(Entry { to: c.to, effects, truncated });
            }
        }
        Semantics { program, product, post_budget, table }
    }

    pub fn program(&self) -> &'p AsyncProgram {
        self.program
    }

    pub fn product(&self) -> &ProductGrammar {
        &self.product
    }

    pub fn post_budget(&self) -> u64 {
        self.post_budget
    }

    /// Handler runs from `(d, σ)`: target state, possible effects, truncation flag.
    pub fn runs(&self, d: State, h: Handler) -> impl Iterator<Item = (State, &[Effect], bool)> {
        self.table.get(&(d, h)).into_iter().flatten().map(|e| (e.to, e.effects.as_slice(), e.truncated))
    }

    /// All successors of `c`, sorted and without duplicates.
    pub fn step(&self, c: &Configuration) -> Successors {
        let mut out = Successors::default();
        for h in c.buffer.support() {
            let mut rest = c.buffer.clone();
            rest.remove(h, 1);
            let mut seen = BTreeSet::new();
            for (to, effects, truncated) in self.runs(c.state, h) {
                out.truncated |= truncated;
                for e in effects {
                    let buffer = successor_buffer_cancel(&rest, &e.posts, &e.cleared);
                    seen.insert(Configuration::new(to, buffer));
                }
            }
            out.moves.extend(seen.into_iter().map(|s| (h, s)));
        }
        out
    }

    /// Whether dispatching `h` can lead from `from` to `to`, regardless of the post budget.
    pub fn is_step(&self, from: &Configuration, h: Handler, to: &Configuration) -> bool {
        let mut rest = from.buffer.clone();
        if !rest.remove(h, 1) {
            return false;
        }
        let c = Context::new(from.state, h, to.state);
        let Some(cg) = self.product.context_grammar(self.program, c) else { return false };
        if !self.program.has_cancels() {
            let Some(posts) = to.buffer.checked_sub(&rest) else { return false };
            let target = posts.map(Letter::Post);
            return parikh_member(&cg.cfg, cg.start, &target);
        }
        let cp = cancel_product_of(&cg, self.program.handlers());
        for (s, v) in &cp.starts {
            let kept = rest.filter(|b| !s.contains(&b));
            if let Some(posts) = to.buffer.checked_sub(&kept) {
                if parikh_member(&cp.cfg, *v, &posts) {
                    return true;
                }
            }
        }
        false
    }
}

pub(crate) fn letters_to_handlers(m: &Multiset<Letter>) -> Multiset<Handler> {
    m.map(|l| match l {
        Letter::Post(h) | Letter::Cancel(h) => h,
        Letter::Internal(_) => unreachable!("internal letters are projected away"),
    })
}

/// Successors of `c` for program `p`, posting at most `post_budget` handlers per dispatch.
pub fn step(p: &AsyncProgram, c: &Configuration, post_budget: u64) -> Vec<(Handler, Configuration)> {
    Semantics::new(p, post_budget).step(c).moves
}

/// Which exploration bound stopped a search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct BudgetsHit {
    pub states: bool,
    pub depth: bool,
    pub posts: bool,
}

impl BudgetsHit {
    pub fn any(&self) -> bool {
        self.states || self.depth || self.posts
    }

    pub fn merge(&mut self, o: BudgetsHit) {
        self.states |= o.states;
        self.depth |= o.depth;
        self.posts |= o.posts;
    }

    pub fn describe(&self) -> String {
        let mut v = Vec::new();
        if self.states {
            v.push("max-states");
        }
        if self.depth {
            v.push("max-depth");
        }
        if self.posts {
            v.push("post-budget");
        }
        if v.is_empty() {
            "none".into()
        } else {
            v.join(",")
        }
    }
}

/// The reachable configuration graph explored breadth-first.
#[derive(Clone, Debug, Default)]
pub struct ConfigGraph {
    pub nodes: Vec<Configuration>,
    pub index: HashMap<Configuration, usize>,
    /// Outgoing edges; only complete for expanded nodes.
    pub succ: Vec<Vec<(Handler, usize)>>,
    pub parent: Vec<Option<(usize, Handler)>>,
    pub depth: Vec<usize>,
    pub expanded: Vec<bool>,
    pub hit: BudgetsHit,
}

impl ConfigGraph {
    /// Explores from the initial configuration up to `max_states` nodes and `max_depth` dispatches.
    pub fn explore(sem: &Semantics, max_states: usize, max_depth: usize) -> Self {
        Self::explore_from(sem, sem.program().initial(), max_states, max_depth)
    }

    pub fn explore_from(sem: &Semantics, root: Configuration, max_states: usize, max_depth: usize) -> Self {
        let mut g = ConfigGraph::default();
        g.add(root, None, 0);
        let mut queue = VecDeque::from([0usize]);
        while let Some(u) = queue.pop_front() {
            if g.depth[u] >= max_depth {
                g.hit.depth = true;
                continue;
            }
            let s = sem.step(&g.nodes[u]);
            g.hit.posts |= s.truncated;
            let mut complete = true;
            for (h, c) in s.moves {
                let v = match g.index.get(&c) {
                    Some(&v) => v,
                    None => {
                        if g.nodes.len() >= max_states {
                            g.hit.states = true;
                            complete = false;
                            continue;
                        }
                        let v = g.add(c, Some((u, h)), g.depth[u] + 1);
                        queue.push_back(v);
                        v
                    }
                };
                g.succ[u].push((h, v));
            }
            g.expanded[u] = complete;
        }
        g
    }

    fn add(&mut self, c: Configuration, parent: Option<(usize, Handler)>, depth: usize) -> usize {
        let i = self.nodes.len();
        self.index.insert(c.clone(), i);
        self.nodes.push(c);
        self.succ.push(Vec::new());
        self.parent.push(parent);
        self.depth.push(depth);
        self.expanded.push(false);
        i
    }

    /// The graph is the full reachable graph.
    pub fn exhausted(&self) -> bool {
        !self.hit.any()
    }

    /// Dispatches along the BFS tree from the root to `v`.
    pub fn path_to(&self, v: usize) -> Vec<(Handler, usize)> {
        let mut path = Vec::new();
        let mut cur = v;
        while let Some((u, h)) = self.parent[cur] {
            path.push((h, cur));
            cur = u;
        }
        path.reverse();
        path
    }
}

/// The configurations reachable from the initial one, and whether the
/// exploration completed within both bounds without truncating any dispatch.
pub fn enumerate_reachable(p: &AsyncProgram, max_states: usize, post_budget: u64) -> (BTreeSet<Configuration>, bool) {
    let sem = Semantics::new(p, post_budget);
    let g = ConfigGraph::explore(&sem, max_states, usize::MAX);
    let exhausted = g.exhausted();
    (g.nodes.into_iter().collect(), exhausted)
}
