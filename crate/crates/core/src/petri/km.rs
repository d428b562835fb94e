use std::collections::{BTreeSet, HashMap, VecDeque};

use super::{escape, Count, Marking, NetError, OmegaMarking, PetriNet, Place};

/// Exploration bound for [`karp_miller_with`].
#[derive(Clone, Copy, Debug)]
pub struct KmLimits {
    pub max_nodes: usize,
}

impl Default for KmLimits {
    fn default() -> Self {
        KmLimits { max_nodes: usize::MAX }
    }
}

/// A Karp-Miller coverability graph: the classical tree with ancestor
/// acceleration, with nodes of equal ω-marking merged.
#[derive(Clone, Debug, Default)]
pub struct CoverabilityGraph {
    pub nodes: Vec<OmegaMarking>,
    /// Outgoing `(transition, node)` edges.
    pub edges: Vec<Vec<(usize, usize)>>,
    /// Tree parent and the transition leading from it.
    pub parent: Vec<Option<(usize, usize)>>,
    /// The node budget ran out.
    pub truncated: bool,
    /// Exploration stopped at this node because the stop predicate held.
    pub stopped_at: Option<usize>,
}

pub fn karp_miller(n: &PetriNet) -> Result<CoverabilityGraph, NetError> {
    karp_miller_with(n, KmLimits::default(), |_| false)
}

/// Karp-Miller with a node budget, stopping early at the first node
/// satisfying `stop`.
pub fn karp_miller_with(
    n: &PetriNet,
    limits: KmLimits,
    stop: impl Fn(&OmegaMarking) -> bool,
) -> Result<CoverabilityGraph, NetError> {
    if n.has_resets() {
        return Err(NetError::ResetArcs);
    }
    Ok(build(n, limits, stop))
}

/// The Karp-Miller construction on a net that may have reset arcs. Firing
/// stays monotone, so every reachable marking is covered by some node, but
/// ω entries need not be realizable: use it only to refute coverability.
pub fn cover_overapprox(n: &PetriNet, limits: KmLimits) -> CoverabilityGraph {
    build(n, limits, |_| false)
}

fn build(n: &PetriNet, limits: KmLimits, stop: impl Fn(&OmegaMarking) -> bool) -> CoverabilityGraph {
    let mut g = CoverabilityGraph::default();
    let mut index: HashMap<OmegaMarking, usize> = HashMap::new();
    let root = OmegaMarking::from(&n.initial);
    index.insert(root.clone(), 0);
    g.push(root, None);
    if stop(&g.nodes[0]) {
        g.stopped_at = Some(0);
        return g;
    }
    let mut queue = VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for (ti, t) in n.transitions().iter().enumerate() {
            let Some(mut m) = g.nodes[u].fire(t) else { continue };
            g.accelerate(u, &mut m);
            let v = match index.get(&m) {
                Some(&v) => v,
                None => {
                    if g.nodes.len() >= limits.max_nodes {
                        g.truncated = true;
                        continue;
                    }
                    let v = g.push(m.clone(), Some((u, ti)));
                    index.insert(m, v);
                    if stop(&g.nodes[v]) {
                        g.edges[u].push((ti, v));
                        g.stopped_at = Some(v);
                        return g;
                    }
                    queue.push_back(v);
                    v
                }
            };
            g.edges[u].push((ti, v));
        }
    }
    g
}

impl CoverabilityGraph {
    fn push(&mut self, m: OmegaMarking, parent: Option<(usize, usize)>) -> usize {
        self.nodes.push(m);
        self.edges.push(Vec::new());
        self.parent.push(parent);
        self.nodes.len() - 1
    }

    fn accelerate(&self, from: usize, m: &mut OmegaMarking) {
        loop {
            let mut changed = false;
            let mut cur = Some(from);
            while let Some(a) = cur {
                let anc = &self.nodes[a];
                if anc != m && anc.le(m) {
                    let grow: Vec<Place> = m.iter().filter(|&(p, c)| c != Count::Omega && c > anc.get(p)).map(|e| e.0).collect();
                    for p in grow {
                        m.set(p, Count::Omega);
                        changed = true;
                    }
                }
                cur = self.parent[a].map(|x| x.0);
            }
            if !changed {
                return;
            }
        }
    }

    /// Whether the graph was built completely.
    pub fn complete(&self) -> bool {
        !self.truncated && self.stopped_at.is_none()
    }

    /// `Some(false)` if some node has ω, `Some(true)` if complete without ω.
    pub fn is_bounded(&self) -> Option<bool> {
        if self.nodes.iter().any(OmegaMarking::has_omega) {
            Some(false)
        } else if self.truncated {
            None
        } else {
            Some(true)
        }
    }

    /// Whether `m` is coverable, if the graph decides it.
    pub fn covers(&self, m: &Marking) -> Option<bool> {
        if self.nodes.iter().any(|n| n.covers(m)) {
            Some(true)
        } else if self.complete() {
            Some(false)
        } else {
            None
        }
    }

    pub fn unbounded_places(&self) -> BTreeSet<Place> {
        self.nodes.iter().flat_map(|n| n.omega_places().collect::<Vec<_>>()).collect()
    }

    /// The largest finite count per place, over all nodes.
    pub fn max_finite(&self, p: Place) -> Option<u64> {
        self.nodes.iter().try_fold(0, |acc, n| match n.get(p) {
            Count::Fin(v) => Some(acc.max(v)),
            Count::Omega => None,
        })
    }

    /// Transitions along the tree from the root to `v`.
    pub fn path_to(&self, v: usize) -> Vec<usize> {
        let mut path = Vec::new();
        let mut cur = v;
        while let Some((u, t)) = self.parent[cur] {
            path.push(t);
            cur = u;
        }
        path.reverse();
        path
    }

    pub fn to_dot(&self, n: &PetriNet) -> String {
        let mut out = String::from("digraph coverability {\n");
        for (i, m) in self.nodes.iter().enumerate() {
            let label = m.display_with(|p| n.place_name(p).to_string());
            out.push_str(&format!("  n{i} [shape=box,label=\"{}\"];\n", escape(&label)));
        }
        for (u, es) in self.edges.iter().enumerate() {
            for &(t, v) in es {
                out.push_str(&format!("  n{u} -> n{v} [label=\"{}\"];\n", escape(&n.transition(t).name)));
            }
        }
        out.push_str("}\n");
        out
    }
}
