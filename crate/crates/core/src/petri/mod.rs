//! Petri nets with optional reset arcs.

mod backward;
mod boolean;
mod km;
mod omega;
mod text;

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::multiset::Multiset;

pub use backward::{backward_cover, backward_cover_with, CoverCertificate, CoverResult, UpwardBasis};
pub use boolean::{to_boolean, BoolMode, Booleanized};
pub use km::{cover_overapprox, karp_miller, karp_miller_with, CoverabilityGraph, KmLimits};
pub use omega::{Count, OmegaMarking};
pub use text::{parse_net, print_net};

/// A place of a net.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Place(pub u32);

impl Place {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A token distribution over places.
pub type Marking = Multiset<Place>;

/// Classification of a transition.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Plain,
    /// Completes a dispatch of the named handler.
    Dispatch(String),
    /// Internal to a widget.
    Widget,
    /// Bookkeeping added by a construction.
    Structural,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub name: String,
    pub input: Marking,
    pub output: Marking,
    /// Places emptied on firing, sorted.
    pub reset: Vec<Place>,
    pub label: Label,
}

impl Transition {
    pub fn new(name: impl Into<String>, input: Marking, output: Marking) -> Self {
        Transition { name: name.into(), input, output, reset: Vec::new(), label: Label::Plain }
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.label = label;
        self
    }

    pub fn with_reset(mut self, mut reset: Vec<Place>) -> Self {
        reset.sort();
        reset.dedup();
        self.reset = reset;
        self
    }

    pub fn resets(&self, p: Place) -> bool {
        self.reset.binary_search(&p).is_ok()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetError {
    #[error("transition `{0}` is not enabled")]
    NotEnabled(String),
    #[error("the net has reset arcs, which this operation does not support")]
    ResetArcs,
    #[error("the net is not Boolean: {0}")]
    NotBoolean(String),
    #[error("transition `{0}` has an empty precondition")]
    EmptyPreset(String),
    #[error("a target marking is required for this mode")]
    MissingTarget,
    #[error("unknown place `{0}`")]
    UnknownPlace(String),
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
}

/// An initialized Petri net, possibly with reset arcs.
#[derive(Clone, Debug, Default)]
pub struct PetriNet {
    places: Vec<String>,
    groups: Vec<Option<String>>,
    index: HashMap<String, Place>,
    transitions: Vec<Transition>,
    pub initial: Marking,
}

impl PetriNet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a place. A name already in use gets primes appended.
    pub fn add_place(&mut self, name: &str) -> Place {
        let mut n = name.to_string();
        while self.index.contains_key(&n) {
            n.push('\'');
        }
        let p = Place(self.places.len() as u32);
        self.index.insert(n.clone(), p);
        self.places.push(n);
        self.groups.push(None);
        p
    }

    /// Adds a place that belongs to a named group (a widget, for instance).
    pub fn add_place_in(&mut self, name: &str, group: &str) -> Place {
        let p = self.add_place(name);
        self.groups[p.index()] = Some(group.to_string());
        p
    }

    pub fn add_transition(&mut self, t: Transition) -> usize {
        self.transitions.push(t);
        self.transitions.len() - 1
    }

    pub fn place(&self, name: &str) -> Option<Place> {
        self.index.get(name).copied()
    }

    pub fn place_name(&self, p: Place) -> &str {
        &self.places[p.index()]
    }

    pub fn place_group(&self, p: Place) -> Option<&str> {
        self.groups[p.index()].as_deref()
    }

    pub fn num_places(&self) -> usize {
        self.places.len()
    }

    pub fn places(&self) -> impl Iterator<Item = Place> {
        (0..self.places.len() as u32).map(Place)
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn transition(&self, i: usize) -> &Transition {
        &self.transitions[i]
    }

    pub fn transition_mut(&mut self, i: usize) -> &mut Transition {
        &mut self.transitions[i]
    }

    pub fn has_resets(&self) -> bool {
        self.transitions.iter().any(|t| !t.reset.is_empty())
    }

    /// Initial marking and every pre- and postset have counts at most one.
    pub fn is_boolean(&self) -> bool {
        self.initial.max_count() <= 1
            && self.transitions.iter().all(|t| t.input.max_count() <= 1 && t.output.max_count() <= 1)
    }

    pub fn enabled(&self, m: &Marking, t: usize) -> bool {
        self.transitions[t].input.le(m)
    }

    /// Subtract the preset, empty the reset places, add the postset.
    pub fn fire(&self, m: &Marking, t: usize) -> Result<Marking, NetError> {
        let tr = &self.transitions[t];
        let mut rest = m.checked_sub(&tr.input).ok_or_else(|| NetError::NotEnabled(tr.name.clone()))?;
        for &p in &tr.reset {
            rest.set(p, 0);
        }
        Ok(rest.sum(&tr.output))
    }

    /// Fires a sequence from the initial marking.
    pub fn replay(&self, seq: &[usize]) -> Result<Marking, NetError> {
        seq.iter().try_fold(self.initial.clone(), |m, &t| self.fire(&m, t))
    }

    /// Size measure: places plus all arc entries.
    pub fn size(&self) -> usize {
        self.places.len()
            + self
                .transitions
                .iter()
                .map(|t| 1 + t.input.iter().count() + t.output.iter().count() + t.reset.len())
                .sum::<usize>()
    }

    pub fn fmt_marking(&self, m: &Marking) -> String {
        m.display_with(|p| self.place_name(p).to_string()).to_string()
    }

    /// Parses a marking such as `p:2 q`.
    pub fn parse_marking(&self, s: &str) -> Result<Marking, NetError> {
        let mut m = Marking::new();
        for item in s.split(|c: char| c.is_whitespace() || c == ',').filter(|x| !x.is_empty()) {
            let (name, n) = match item.rsplit_once(':') {
                Some((a, b)) => (a, b.parse().map_err(|_| NetError::UnknownPlace(item.to_string()))?),
                None => (item, 1),
            };
            let p = self.place(name).ok_or_else(|| NetError::UnknownPlace(name.to_string()))?;
            m.add(p, n);
        }
        Ok(m)
    }

    /// Graphviz rendering; grouped places become clusters.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph net {\n  rankdir=LR;\n");
        let mut groups: Vec<&str> = self.groups.iter().flatten().map(String::as_str).collect();
        groups.sort();
        groups.dedup();
        let place_line = |p: Place| {
            let n = self.initial.get(p);
            let label = if n > 0 { format!("{}\\n{}", self.place_name(p), n) } else { self.place_name(p).to_string() };
            format!("p{} [shape=circle,label=\"{}\"];", p.0, escape(&label))
        };
        for g in &groups {
            out.push_str(&format!("  subgraph \"cluster_{}\" {{\n    label=\"{}\";\n", escape(g), escape(g)));
            for p in self.places().filter(|&p| self.place_group(p) == Some(g)) {
                out.push_str(&format!("    {}\n", place_line(p)));
            }
            out.push_str("  }\n");
        }
        for p in self.places().filter(|&p| self.place_group(p).is_none()) {
            out.push_str(&format!("  {}\n", place_line(p)));
        }
        for (i, t) in self.transitions.iter().enumerate() {
            let style = match t.label {
                Label::Dispatch(_) => ",style=filled,fillcolor=lightblue",
                _ => "",
            };
            out.push_str(&format!("  t{i} [shape=box,label=\"{}\"{style}];\n", escape(&t.name)));
            for (p, n) in t.input.iter() {
                out.push_str(&format!("  p{} -> t{i}{};\n", p.0, arc_label(n)));
            }
            for (p, n) in t.output.iter() {
                out.push_str(&format!("  t{i} -> p{}{};\n", p.0, arc_label(n)));
            }
            for p in &t.reset {
                out.push_str(&format!("  t{i} -> p{} [style=dashed,arrowhead=odot];\n", p.0));
            }
        }
        out.push_str("}\n");
        out
    }
}

fn arc_label(n: u64) -> String {
    if n == 1 {
        String::new()
    } else {
        format!(" [label=\"{n}\"]")
    }
}

pub(crate) fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

impl fmt::Display for PetriNet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_net(self))
    }
}

/// Forward enumeration of reachable markings, up to `max` markings.
/// Returns the set and whether it is complete.
pub fn enumerate_markings(n: &PetriNet, max: usize) -> (HashSet<Marking>, bool) {
    let mut seen: HashSet<Marking> = HashSet::from([n.initial.clone()]);
    let mut queue = VecDeque::from([n.initial.clone()]);
    while let Some(m) = queue.pop_front() {
        for t in 0..n.transitions.len() {
            if let Ok(m2) = n.fire(&m, t) {
                if !seen.contains(&m2) {
                    if seen.len() >= max {
                        return (seen, false);
                    }
                    seen.insert(m2.clone());
                    queue.push_back(m2);
                }
            }
        }
    }
    (seen, true)
}

/// Places that carry more than one token in some reachable marking of a
/// complete enumeration.
pub fn multi_token_places(markings: &HashSet<Marking>) -> BTreeSet<Place> {
    markings.iter().flat_map(|m| m.iter().filter(|&(_, n)| n > 1).map(|(p, _)| p)).collect()
}
