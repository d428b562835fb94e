//! Finite multisets over dense integer symbols.

use std::fmt;

/// A finite multiset stored as a sorted list of `(symbol, count)` pairs.
///
/// Zero counts are never stored, so structural equality is multiset equality.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Multiset<K> {
    entries: Vec<(K, u64)>,
}

impl<K> Default for Multiset<K> {
    fn default() -> Self {
        Multiset { entries: Vec::new() }
    }
}

impl<K: Copy + Ord> Multiset<K> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn singleton(k: K) -> Self {
        Multiset { entries: vec![(k, 1)] }
    }

    /// Builds a multiset from `(symbol, count)` pairs; repeated symbols add up.
    pub fn from_counts<I: IntoIterator<Item = (K, u64)>>(it: I) -> Self {
        let mut m = Self::new();
        for (k, n) in it {
            m.add(k, n);
        }
        m
    }

    /// The Parikh image of a word.
    pub fn parikh<I: IntoIterator<Item = K>>(word: I) -> Self {
        Self::from_counts(word.into_iter().map(|k| (k, 1)))
    }

    pub fn get(&self, k: K) -> u64 {
        match self.entries.binary_search_by(|e| e.0.cmp(&k)) {
            Ok(i) => self.entries[i].1,
            Err(_) => 0,
        }
    }

    pub fn add(&mut self, k: K, n: u64) {
        if n == 0 {
            return;
        }
        match self.entries.binary_search_by(|e| e.0.cmp(&k)) {
            Ok(i) => self.entries[i].1 += n,
            Err(i) => self.entries.insert(i, (k, n)),
        }
    }

    pub fn set(&mut self, k: K, n: u64) {
        match self.entries.binary_search_by(|e| e.0.cmp(&k)) {
            Ok(i) if n == 0 => {
                self.entries.remove(i);
            }
            Ok(i) => self.entries[i].1 = n,
            Err(_) if n == 0 => {}
            Err(i) => self.entries.insert(i, (k, n)),
        }
    }

    /// Removes `n` copies of `k`; returns false (leaving `self` unchanged) if fewer are present.
    pub fn remove(&mut self, k: K, n: u64) -> bool {
        if n == 0 {
            return true;
        }
        match self.entries.binary_search_by(|e| e.0.cmp(&k)) {
            Ok(i) if self.entries[i].1 >= n => {
                self.entries[i].1 -= n;
                if self.entries[i].1 == 0 {
                    self.entries.remove(i);
                }
                true
            }
            _ => false,
        }
    }

    /// Multiset sum `self ⊕ other`.
    pub fn sum(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.entries.len() + other.entries.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.entries, &other.entries);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Multiset { entries: out }
    }

    /// `self - other` if `other ⪯ self`.
    pub fn checked_sub(&self, other: &Self) -> Option<Self> {
        if !other.le(self) {
            return None;
        }
        Some(self.saturating_sub(other))
    }

    /// Pointwise `max(self - other, 0)`.
    pub fn saturating_sub(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.entries.len());
        for &(k, n) in &self.entries {
            let m = other.get(k);
            if n > m {
                out.push((k, n - m));
            }
        }
        Multiset { entries: out }
    }

    /// Pointwise maximum.
    pub fn join(&self, other: &Self) -> Self {
        let mut m = self.clone();
        for &(k, n) in &other.entries {
            if m.get(k) < n {
                m.set(k, n);
            }
        }
        m
    }

    /// The sub-multiset order `self ⪯ other`.
    pub fn le(&self, other: &Self) -> bool {
        if self.entries.len() > other.entries.len() {
            return false;
        }
        let mut j = 0;
        for &(k, n) in &self.entries {
            while j < other.entries.len() && other.entries[j].0 < k {
                j += 1;
            }
            if j == other.entries.len() || other.entries[j].0 != k || other.entries[j].1 < n {
                return false;
            }
            j += 1;
        }
        true
    }

    pub fn size(&self) -> u64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (K, u64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn support(&self) -> impl Iterator<Item = K> + '_ {
        self.entries.iter().map(|e| e.0)
    }

    pub fn max_count(&self) -> u64 {
        self.entries.iter().map(|e| e.1).max().unwrap_or(0)
    }

    /// Keeps only the symbols satisfying `keep`.
    pub fn filter(&self, mut keep: impl FnMut(K) -> bool) -> Self {
        Multiset { entries: self.entries.iter().copied().filter(|e| keep(e.0)).collect() }
    }

    /// Renames symbols; the map need not be injective.
    pub fn map<L: Copy + Ord>(&self, mut f: impl FnMut(K) -> L) -> Multiset<L> {
        Multiset::from_counts(self.entries.iter().map(|&(k, n)| (f(k), n)))
    }

    /// Renders with a naming function, e.g. `{h1:2, h2:1}`.
    pub fn display_with<'a, F: Fn(K) -> String + 'a>(&'a self, name: F) -> impl fmt::Display + 'a {
        DisplayWith { m: self, name }
    }
}

struct DisplayWith<'a, K, F> {
    m: &'a Multiset<K>,
    name: F,
}

impl<K: Copy + Ord, F: Fn(K) -> String> fmt::Display for DisplayWith<'_, K, F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (k, n)) in self.m.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}:{}", (self.name)(k), n)?;
        }
        write!(f, "}}")
    }
}

impl<K: Copy + Ord + fmt::Debug> fmt::Debug for Multiset<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.entries.iter().map(|(k, n)| (k, n))).finish()
    }
}

impl<K: Copy + Ord> FromIterator<K> for Multiset<K> {
    fn from_iter<I: IntoIterator<Item = K>>(iter: I) -> Self {
        Self::parikh(iter)
    }
}

/// Removes every element that strictly dominates another one and sorts the rest.
pub fn minimize<K: Copy + Ord>(elems: Vec<Multiset<K>>) -> Vec<Multiset<K>> {
    let mut elems = elems;
    elems.sort_by(|a, b| a.size().cmp(&b.size()).then_with(|| a.cmp(b)));
    elems.dedup();
    let mut kept: Vec<Multiset<K>> = Vec::new();
    for e in elems {
        if !kept.iter().any(|k| k.le(&e)) {
            kept.push(e);
        }
    }
    kept.sort();
    kept
}
