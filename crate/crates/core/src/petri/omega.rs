use std::cmp::Ordering;
use std::fmt;

use super::{Marking, Place, Transition};

/// A natural number or ω.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Count {
    Fin(u64),
    Omega,
}

impl PartialOrd for Count {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Count {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Count::Fin(a), Count::Fin(b)) => a.cmp(b),
            (Count::Fin(_), Count::Omega) => Ordering::Less,
            (Count::Omega, Count::Fin(_)) => Ordering::Greater,
            (Count::Omega, Count::Omega) => Ordering::Equal,
        }
    }
}

impl fmt::Display for Count {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Count::Fin(n) => write!(f, "{n}"),
            Count::Omega => f.write_str("ω"),
        }
    }
}

/// A marking whose entries may be ω. Sorted, no zero entries.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct OmegaMarking {
    entries: Vec<(Place, Count)>,
}

impl From<&Marking> for OmegaMarking {
    fn from(m: &Marking) -> Self {
        OmegaMarking { entries: m.iter().map(|(p, n)| (p, Count::Fin(n))).collect() }
    }
}

impl OmegaMarking {
    pub fn get(&self, p: Place) -> Count {
        match self.entries.binary_search_by_key(&p, |e| e.0) {
            Ok(i) => self.entries[i].1,
            Err(_) => Count::Fin(0),
        }
    }

    pub fn set(&mut self, p: Place, c: Count) {
        match self.entries.binary_search_by_key(&p, |e| e.0) {
            Ok(i) if c == Count::Fin(0) => {
                self.entries.remove(i);
            }
            Ok(i) => self.entries[i].1 = c,
            Err(_) if c == Count::Fin(0) => {}
            Err(i) => self.entries.insert(i, (p, c)),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Place, Count)> + '_ {
        self.entries.iter().copied()
    }

    pub fn has_omega(&self) -> bool {
        self.entries.iter().any(|e| e.1 == Count::Omega)
    }

    pub fn omega_places(&self) -> impl Iterator<Item = Place> + '_ {
        self.entries.iter().filter(|e| e.1 == Count::Omega).map(|e| e.0)
    }

    /// Pointwise `self ≤ other`.
    pub fn le(&self, other: &OmegaMarking) -> bool {
        self.entries.iter().all(|&(p, c)| c <= other.get(p))
    }

    /// Whether `m ≤ self` for a finite marking.
    pub fn covers(&self, m: &Marking) -> bool {
        m.iter().all(|(p, n)| Count::Fin(n) <= self.get(p))
    }

    /// Fires `t`; ω absorbs every change.
    pub fn fire(&self, t: &Transition) -> Option<OmegaMarking> {
        if !self.covers(&t.input) {
            return None;
        }
        let mut out = self.clone();
        for (p, n) in t.input.iter() {
            if let Count::Fin(v) = out.get(p) {
                out.set(p, Count::Fin(v - n));
            }
        }
        for &p in &t.reset {
            out.set(p, Count::Fin(0));
        }
        for (p, n) in t.output.iter() {
            if let Count::Fin(v) = out.get(p) {
                out.set(p, Count::Fin(v + n));
            }
        }
        Some(out)
    }

    pub fn display_with<'a>(&'a self, name: impl Fn(Place) -> String + 'a) -> String {
        let parts: Vec<String> = self
            .entries
            .iter()
            .map(|&(p, c)| format!("{}:{c}", name(p)))
            .collect();
        format!("{{{}}}", parts.join(", "))
    }
}
