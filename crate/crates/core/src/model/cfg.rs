//! Context-free grammars in the binary normal form (`X -> A B | a | eps`).

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::hash::Hash;

/// A grammar variable (non-terminal), dense per grammar.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Var(pub u32);

impl Var {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Rhs<T> {
    Pair(Var, Var),
    Term(T),
    Eps,
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Production<T> {
    pub lhs: Var,
    pub rhs: Rhs<T>,
}

/// A symbol on the right-hand side of a pre-normal production.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Sym<T> {
    Var(Var),
    Term(T),
}

/// Variable names with a name index, shared by both grammar forms.
#[derive(Clone, Debug, Default)]
struct Names {
    names: Vec<String>,
    index: HashMap<String, Var>,
}

impl Names {
    fn var(&mut self, name: &str) -> Var {
        if let Some(&v) = self.index.get(name) {
            return v;
        }
        let v = Var(self.names.len() as u32);
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), v);
        v
    }

    fn fresh(&mut self, base: &str, avoid: &HashSet<String>) -> Var {
        let mut n = self.names.len();
        loop {
            let cand = format!("{base}{n}");
            if !self.index.contains_key(&cand) && !avoid.contains(&cand) {
                return self.var(&cand);
            }
            n += 1;
        }
    }
}

/// A normalized context-free grammar over terminals `T`.
#[derive(Clone, Debug)]
pub struct Cfg<T> {
    names: Names,
    prods: Vec<Production<T>>,
    by_lhs: Vec<Vec<usize>>,
    seen: HashSet<Production<T>>,
}

impl<T: Clone + Eq + Hash> Default for Cfg<T> {
    fn default() -> Self {
        Cfg { names: Names::default(), prods: Vec::new(), by_lhs: Vec::new(), seen: HashSet::new() }
    }
}

impl<T: Clone + Eq + Hash> Cfg<T> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the variable called `name`, creating it if needed.
    pub fn var(&mut self, name: &str) -> Var {
        let v = self.names.var(name);
        while self.by_lhs.len() < self.names.names.len() {
            self.by_lhs.push(Vec::new());
        }
        v
    }

    pub fn fresh_var(&mut self, base: &str, avoid: &HashSet<String>) -> Var {
        let v = self.names.fresh(base, avoid);
        while self.by_lhs.len() < self.names.names.len() {
            self.by_lhs.push(Vec::new());
        }
        v
    }

    pub fn lookup(&self, name: &str) -> Option<Var> {
        self.names.index.get(name).copied()
    }

    pub fn name(&self, v: Var) -> &str {
        &self.names.names[v.index()]
    }

    pub fn num_vars(&self) -> usize {
        self.names.names.len()
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> {
        (0..self.num_vars() as u32).map(Var)
    }

    /// Adds a production; duplicates are ignored. Returns whether it was new.
    pub fn add(&mut self, lhs: Var, rhs: Rhs<T>) -> bool {
        let p = Production { lhs, rhs };
        if self.seen.contains(&p) {
            return false;
        }
        self.seen.insert(p.clone());
        self.by_lhs[lhs.index()].push(self.prods.len());
        self.prods.push(p);
        true
    }

    pub fn productions(&self) -> &[Production<T>] {
        &self.prods
    }

    pub fn rules_of(&self, v: Var) -> impl Iterator<Item = &Production<T>> + '_ {
        self.by_lhs[v.index()].iter().map(move |&i| &self.prods[i])
    }

    /// Variables deriving at least one terminal word.
    pub fn productive(&self) -> Vec<bool> {
        let mut prod = vec![false; self.num_vars()];
        let mut changed = true;
        while changed {
            changed = false;
            for p in &self.prods {
                if prod[p.lhs.index()] {
                    continue;
                }
                let ok = match &p.rhs {
                    Rhs::Pair(a, b) => prod[a.index()] && prod[b.index()],
                    _ => true,
                };
                if ok {
                    prod[p.lhs.index()] = true;
                    changed = true;
                }
            }
        }
        prod
    }

    /// Variables reachable from `starts` using only productions whose variables are all productive.
    pub fn useful_from(&self, starts: &[Var]) -> Vec<bool> {
        let prod = self.productive();
        let mut seen = vec![false; self.num_vars()];
        let mut stack: Vec<Var> = starts.iter().copied().filter(|v| prod[v.index()]).collect();
        for v in &stack {
            seen[v.index()] = true;
        }
        while let Some(v) = stack.pop() {
            for p in self.rules_of(v) {
                if let Rhs::Pair(a, b) = p.rhs {
                    if prod[a.index()] && prod[b.index()] {
                        for x in [a, b] {
                            if !seen[x.index()] {
                                seen[x.index()] = true;
                                stack.push(x);
                            }
                        }
                    }
                }
            }
        }
        seen
    }

    /// The sub-grammar of useful variables for `starts`, with fresh dense ids.
    /// The returned map sends old variables to new ones.
    pub fn restrict(&self, starts: &[Var]) -> (Cfg<T>, Vec<Option<Var>>) {
        let useful = self.useful_from(starts);
        let mut out = Cfg::new();
        let mut map = vec![None; self.num_vars()];
        // Starts first so that they get the smallest ids.
        let order = starts.iter().copied().chain(self.vars());
        for v in order {
            if useful[v.index()] && map[v.index()].is_none() {
                map[v.index()] = Some(out.var(self.name(v)));
            }
        }
        for p in &self.prods {
            let Some(lhs) = map[p.lhs.index()] else { continue };
            let rhs = match &p.rhs {
                Rhs::Pair(a, b) => match (map[a.index()], map[b.index()]) {
                    (Some(a), Some(b)) => Rhs::Pair(a, b),
                    _ => continue,
                },
                Rhs::Term(t) => Rhs::Term(t.clone()),
                Rhs::Eps => Rhs::Eps,
            };
            out.add(lhs, rhs);
        }
        (out, map)
    }

    /// Relabels terminals; `None` turns the terminal into `eps`.
    pub fn map_terminals<U: Clone + Eq + Hash>(&self, mut f: impl FnMut(&T) -> Option<U>) -> Cfg<U> {
        let mut out = Cfg::new();
        for v in self.vars() {
            out.var(self.name(v));
        }
        for p in &self.prods {
            let rhs = match &p.rhs {
                Rhs::Pair(a, b) => Rhs::Pair(*a, *b),
                Rhs::Term(t) => f(t).map_or(Rhs::Eps, Rhs::Term),
                Rhs::Eps => Rhs::Eps,
            };
            out.add(p.lhs, rhs);
        }
        out
    }

    /// Total number of symbols over all productions, a size measure.
    pub fn size(&self) -> usize {
        self.prods
            .iter()
            .map(|p| match p.rhs {
                Rhs::Pair(..) => 3,
                _ => 2,
            })
            .sum()
    }

    /// Renders productions as `lhs -> rhs;` lines, grouped by left-hand side.
    pub fn display_with<'a, F: Fn(&T) -> String + 'a>(&'a self, term: F) -> impl fmt::Display + 'a {
        CfgDisplay { g: self, term }
    }
}

struct CfgDisplay<'a, T, F> {
    g: &'a Cfg<T>,
    term: F,
}

impl<T: Clone + Eq + Hash, F: Fn(&T) -> String> fmt::Display for CfgDisplay<'_, T, F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in self.g.vars() {
            let alts: Vec<String> = self
                .g
                .rules_of(v)
                .map(|p| match &p.rhs {
                    Rhs::Pair(a, b) => format!("{} {}", self.g.name(*a), self.g.name(*b)),
                    Rhs::Term(t) => (self.term)(t),
                    Rhs::Eps => "eps".to_string(),
                })
                .collect();
            if !alts.is_empty() {
                writeln!(f, "{} -> {};", self.g.name(v), alts.join(" | "))?;
            }
        }
        Ok(())
    }
}

/// A grammar with arbitrary right-hand sides, before normalization.
#[derive(Clone, Debug)]
pub struct RawCfg<T> {
    names: Names,
    prods: Vec<(Var, Vec<Sym<T>>)>,
}

impl<T> Default for RawCfg<T> {
    fn default() -> Self {
        RawCfg { names: Names::default(), prods: Vec::new() }
    }
}

impl<T: Clone + Eq + Hash> RawCfg<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn var(&mut self, name: &str) -> Var {
        self.names.var(name)
    }

    pub fn lookup(&self, name: &str) -> Option<Var> {
        self.names.index.get(name).copied()
    }

    pub fn name(&self, v: Var) -> &str {
        &self.names.names[v.index()]
    }

    pub fn num_vars(&self) -> usize {
        self.names.names.len()
    }

    pub fn add(&mut self, lhs: Var, rhs: Vec<Sym<T>>) {
        self.prods.push((lhs, rhs));
    }

    pub fn productions(&self) -> &[(Var, Vec<Sym<T>>)] {
        &self.prods
    }

    /// Brings every production into the form `X -> A B | a | eps`.
    ///
    /// Original variables keep their ids. Terminals inside longer right-hand
    /// sides get wrapper variables, long right-hand sides are split into a
    /// right-leaning chain, and unit productions `X -> Y` become `X -> Y E`
    /// with `E -> eps`. Fresh names avoid everything in `avoid`.
    pub fn normalize(&self, avoid: &HashSet<String>) -> Cfg<T> {
        let mut g: Cfg<T> = Cfg::new();
        for n in &self.names.names {
            g.var(n);
        }
        let mut wrappers: HashMap<T, Var> = HashMap::new();
        let mut eps_var: Option<Var> = None;
        for (lhs, rhs) in &self.prods {
            match rhs.as_slice() {
                [] => {
                    g.add(*lhs, Rhs::Eps);
                }
                [Sym::Term(t)] => {
                    g.add(*lhs, Rhs::Term(t.clone()));
                }
                [Sym::Var(y)] => {
                    let e = *eps_var.get_or_insert_with(|| {
                        let e = g.fresh_var("_e", avoid);
                        g.add(e, Rhs::Eps);
                        e
                    });
                    g.add(*lhs, Rhs::Pair(*y, e));
                }
                syms => {
                    let vars: Vec<Var> = syms
                        .iter()
                        .map(|s| match s {
                            Sym::Var(v) => *v,
                            Sym::Term(t) => *wrappers.entry(t.clone()).or_insert_with(|| {
                                let w = g.fresh_var("_t", avoid);
                                g.add(w, Rhs::Term(t.clone()));
                                w
                            }),
                        })
                        .collect();
                    let mut cur = *lhs;
                    for &x in &vars[..vars.len() - 2] {
                        let next = g.fresh_var("_b", avoid);
                        g.add(cur, Rhs::Pair(x, next));
                        cur = next;
                    }
                    g.add(cur, Rhs::Pair(vars[vars.len() - 2], vars[vars.len() - 1]));
                }
            }
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_two_terminals() {
        let mut r: RawCfg<char> = RawCfg::new();
        let x = r.var("X");
        r.add(x, vec![Sym::Term('a'), Sym::Term('b')]);
        let g = r.normalize(&HashSet::new());
        assert_eq!(g.num_vars(), 3);
        assert_eq!(g.rules_of(x).count(), 1);
        assert!(matches!(g.rules_of(x).next().unwrap().rhs, Rhs::Pair(..)));
    }

    #[test]
    fn normalize_keeps_normal_form() {
        let mut r: RawCfg<char> = RawCfg::new();
        let x = r.var("X");
        r.add(x, vec![Sym::Term('a')]);
        let g = r.normalize(&HashSet::new());
        assert_eq!(g.num_vars(), 1);
        assert_eq!(g.productions(), &[Production { lhs: x, rhs: Rhs::Term('a') }]);
    }

    #[test]
    fn binarize_three_vars_adds_one_fresh() {
        let mut r: RawCfg<char> = RawCfg::new();
        let (x, y, z, w) = (r.var("X"), r.var("Y"), r.var("Z"), r.var("W"));
        r.add(x, vec![Sym::Var(y), Sym::Var(z), Sym::Var(w)]);
        let g = r.normalize(&HashSet::new());
        assert_eq!(g.num_vars(), 5);
        assert_eq!(g.productions().len(), 2);
    }

    #[test]
    fn restrict_drops_useless() {
        let mut g: Cfg<char> = Cfg::new();
        let (s, a, b, c) = (g.var("S"), g.var("A"), g.var("B"), g.var("C"));
        g.add(s, Rhs::Pair(a, b));
        g.add(s, Rhs::Term('x'));
        g.add(a, Rhs::Term('a'));
        g.add(c, Rhs::Eps);
        // B is not productive, C is unreachable.
        let (r, map) = g.restrict(&[s]);
        assert_eq!(r.num_vars(), 1);
        assert_eq!(map[a.index()], None);
        assert_eq!(r.productions().len(), 1);
    }
}
