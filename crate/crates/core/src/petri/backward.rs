use std::fmt;

use super::{Marking, PetriNet, Transition};
use crate::multiset::minimize;

/// A finite antichain of markings standing for its upward closure.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct UpwardBasis {
    elems: Vec<Marking>,
}

impl UpwardBasis {
    pub fn new(elems: Vec<Marking>) -> Self {
        UpwardBasis { elems: minimize(elems) }
    }

    pub fn singleton(m: Marking) -> Self {
        UpwardBasis { elems: vec![m] }
    }

    pub fn elements(&self) -> &[Marking] {
        &self.elems
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    /// Membership of `m` in the upward closure.
    pub fn contains(&self, m: &Marking) -> bool {
        self.elems.iter().any(|e| e.le(m))
    }

    pub fn union(&self, other: &UpwardBasis) -> UpwardBasis {
        UpwardBasis::new(self.elems.iter().chain(&other.elems).cloned().collect())
    }
}

/// Evidence attached to a backward coverability answer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CoverCertificate {
    /// A firing sequence from the initial marking that covers the target.
    Firing(Vec<usize>),
    /// Coverable, but the firing sequence could not be rebuilt.
    BasisOnly,
    /// Not coverable: the fixpoint basis of all markings that can cover the target.
    Basis(UpwardBasis),
    /// The element budget ran out.
    None,
}

#[derive(Clone, Debug)]
pub struct CoverResult {
    /// `None` when the element budget ran out first.
    pub coverable: Option<bool>,
    pub certificate: CoverCertificate,
    /// Number of basis elements generated.
    pub generated: usize,
}

impl fmt::Display for CoverCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoverCertificate::Firing(s) => write!(f, "firing sequence of length {}", s.len()),
            CoverCertificate::BasisOnly => f.write_str("basis-only"),
            CoverCertificate::Basis(b) => write!(f, "upward-closed basis with {} elements", b.len()),
            CoverCertificate::None => f.write_str("none"),
        }
    }
}

/// The minimal marking from which firing `t` reaches `↑e`, if any.
fn pre_image(e: &Marking, t: &Transition) -> Option<Marking> {
    if t.reset.iter().any(|&p| e.get(p) > t.output.get(p)) {
        return None;
    }
    let mut m = Marking::new();
    for (p, n) in e.iter() {
        if !t.resets(p) {
            let o = t.output.get(p);
            if n > o {
                m.add(p, n - o);
            }
        }
    }
    Some(m.sum(&t.input))
}

pub fn backward_cover(n: &PetriNet, target: &UpwardBasis) -> CoverResult {
    backward_cover_with(n, target, &|_| true, usize::MAX)
}

/// The basis under construction, indexed by place for fast subsumption.
struct Store {
    gen: Vec<(Marking, Option<(usize, usize)>)>,
    alive: Vec<bool>,
    /// Live candidates whose smallest support place is the key.
    by_min: Vec<Vec<usize>>,
    /// Candidates containing the key place.
    by_place: Vec<Vec<usize>>,
    /// A live element with empty support covers everything.
    zero: bool,
}

impl Store {
    fn new(places: usize) -> Self {
        Store { gen: Vec::new(), alive: Vec::new(), by_min: vec![Vec::new(); places], by_place: vec![Vec::new(); places], zero: false }
    }

    /// Some live element is below `m`.
    fn subsumed(&self, m: &Marking) -> bool {
        self.zero
            || m.support().any(|p| self.by_min[p.index()].iter().any(|&b| self.alive[b] && self.gen[b].0.le(m)))
    }

    fn insert(&mut self, m: Marking, from: Option<(usize, usize)>) -> usize {
        // Drop elements above `m`; they all contain its rarest place.
        match m.support().min_by_key(|p| self.by_place[p.index()].len()) {
            None => self.alive.iter_mut().for_each(|a| *a = false),
            Some(p) => {
                for &b in &self.by_place[p.index()] {
                    if self.alive[b] && m.le(&self.gen[b].0) {
                        self.alive[b] = false;
                    }
                }
            }
        }
        let id = self.gen.len();
        match m.support().next() {
            None => self.zero = true,
            Some(p) => self.by_min[p.index()].push(id),
        }
        for p in m.support() {
            self.by_place[p.index()].push(id);
        }
        self.gen.push((m, from));
        self.alive.push(true);
        id
    }
}

/// Per place, an upper bound on its content in every reachable marking when
/// no transition can increase it.
fn static_bounds(n: &PetriNet) -> Vec<Option<u64>> {
    let mut grows = vec![false; n.num_places()];
    for t in n.transitions() {
        for (p, k) in t.output.iter() {
            if k > t.input.get(p) || t.resets(p) {
                grows[p.index()] = true;
            }
        }
    }
    n.places().map(|p| (!grows[p.index()]).then(|| n.initial.get(p))).collect()
}

/// Backward coverability. `keep` discards basis elements that no reachable
/// marking can cover; it must be sound for the net at hand. At most
/// `max_elems` elements are generated.
pub fn backward_cover_with(
    n: &PetriNet,
    target: &UpwardBasis,
    keep: &dyn Fn(&Marking) -> bool,
    max_elems: usize,
) -> CoverResult {
    let mut touch: Vec<Vec<usize>> = vec![Vec::new(); n.num_places()];
    for (i, t) in n.transitions().iter().enumerate() {
        for p in t.output.support().chain(t.reset.iter().copied()) {
            touch[p.index()].push(i);
        }
    }
    let bounds = static_bounds(n);
    let viable = |m: &Marking| m.iter().all(|(p, k)| bounds[p.index()].is_none_or(|b| k <= b)) && keep(m);

    // Every generated element with the element it was derived from.
    let mut st = Store::new(n.num_places());
    let mut frontier = Vec::new();
    for e in target.elements() {
        if viable(e) && !st.subsumed(e) {
            frontier.push(st.insert(e.clone(), None));
        }
    }
    if let Some(&hit) = frontier.iter().find(|&&b| st.alive[b] && st.gen[b].0.le(&n.initial)) {
        return found(n, target, &st.gen, hit);
    }
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for gi in frontier {
            if !st.alive[gi] {
                continue;
            }
            let e = st.gen[gi].0.clone();
            let mut cands: Vec<usize> = e.support().flat_map(|p| touch[p.index()].iter().copied()).collect();
            cands.sort_unstable();
            cands.dedup();
            for t in cands {
                let Some(pre) = pre_image(&e, n.transition(t)) else { continue };
                if !viable(&pre) || st.subsumed(&pre) {
                    continue;
                }
                if st.gen.len() >= max_elems {
                    return CoverResult { coverable: None, certificate: CoverCertificate::None, generated: st.gen.len() };
                }
                let covered = pre.le(&n.initial);
                let id = st.insert(pre, Some((gi, t)));
                if covered {
                    return found(n, target, &st.gen, id);
                }
                next.push(id);
            }
        }
        frontier = next;
    }
    let elems = (0..st.gen.len()).filter(|&b| st.alive[b]).map(|b| st.gen[b].0.clone()).collect();
    CoverResult {
        coverable: Some(false),
        certificate: CoverCertificate::Basis(UpwardBasis::new(elems)),
        generated: st.gen.len(),
    }
}

/// Rebuilds the firing sequence along the derivation chain of `id` and
/// checks it by replay.
fn found(n: &PetriNet, target: &UpwardBasis, gen: &[(Marking, Option<(usize, usize)>)], id: usize) -> CoverResult {
    let mut seq = Vec::new();
    let mut cur = id;
    while let Some((child, t)) = gen[cur].1 {
        seq.push(t);
        cur = child;
    }
    let ok = n.replay(&seq).is_ok_and(|m| target.contains(&m));
    let certificate = if ok { CoverCertificate::Firing(seq) } else { CoverCertificate::BasisOnly };
    CoverResult { coverable: Some(true), certificate, generated: gen.len() }
}
