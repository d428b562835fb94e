//! Random instance generators and brute-force oracles shared by the
//! integration tests. Nothing here calls into the library's analyses.
#![allow(dead_code, clippy::needless_range_loop, clippy::type_complexity)]

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use asyncver::model::{Handler, Internal, Letter, ProgramBuilder, RawCfg, State, Sym, Var};
use asyncver::petri::{Marking, PetriNet, Place, Transition};
use asyncver::{AsyncProgram, Multiset};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Seeded generator; `ASYNCVER_SEED` overrides the per-test default.
pub fn rng(default: u64) -> StdRng {
    let seed = std::env::var("ASYNCVER_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(default);
    StdRng::seed_from_u64(seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RSym {
    Var(usize),
    Post(usize),
    Cancel(usize),
    Int(usize),
}

/// A program together with the pre-normal description it was built from.
/// Variables `0..handlers` are the handler start variables.
#[derive(Clone, Debug)]
pub struct RandProg {
    pub program: AsyncProgram,
    pub states: usize,
    pub handlers: usize,
    pub internals: usize,
    pub vars: usize,
    pub var_names: Vec<String>,
    pub rules: Vec<(usize, Vec<RSym>)>,
    pub flow: Vec<(usize, RSym, usize)>,
}

pub struct Shape {
    pub max_states: usize,
    pub max_handlers: usize,
    pub max_rules: usize,
    pub cancels: bool,
}

impl Default for Shape {
    fn default() -> Self {
        Shape { max_states: 3, max_handlers: 3, max_rules: 10, cancels: false }
    }
}

pub fn random_program(rng: &mut StdRng, shape: &Shape) -> RandProg {
    let states = rng.random_range(1..=shape.max_states);
    let handlers = rng.random_range(1..=shape.max_handlers);
    let internals = rng.random_range(1..=2);
    let extra = rng.random_range(0..=2usize);
    let vars = handlers + extra;
    let mut var_names: Vec<String> = (0..handlers).map(|h| format!("Xh{h}")).collect();
    var_names.extend((0..extra).map(|i| format!("V{i}")));

    let mut rules = Vec::new();
    for v in 0..vars {
        rules.push((v, random_rhs(rng, vars, handlers, internals, shape.cancels)));
    }
    let budget = shape.max_rules.saturating_sub(rules.len());
    for _ in 0..rng.random_range(0..=budget) {
        let v = rng.random_range(0..vars);
        rules.push((v, random_rhs(rng, vars, handlers, internals, shape.cancels)));
    }

    let mut letters: Vec<RSym> = (0..handlers).map(RSym::Post).chain((0..internals).map(RSym::Int)).collect();
    if shape.cancels {
        letters.extend((0..handlers).map(RSym::Cancel));
    }
    let mut flow = Vec::new();
    for d in 0..states {
        for &l in &letters {
            let n = match rng.random_range(0..20) {
                0..=2 => 0,
                3..=15 => 1,
                _ => 2,
            };
            let mut targets = BTreeSet::new();
            for _ in 0..n {
                // Posts mostly keep the state so contexts are not all empty.
                let t = if matches!(l, RSym::Post(_)) && rng.random_bool(0.6) { d } else { rng.random_range(0..states) };
                targets.insert(t);
            }
            flow.extend(targets.into_iter().map(|t| (d, l, t)));
        }
    }

    let mut b = ProgramBuilder::new();
    for d in 0..states {
        b.state(&format!("d{d}")).unwrap();
    }
    for h in 0..handlers {
        b.handler(&format!("h{h}")).unwrap();
    }
    for i in 0..internals {
        b.internal(&format!("i{i}")).unwrap();
    }
    b.enable_cancels(shape.cancels);
    let vs: Vec<Var> = var_names.iter().map(|n| b.var(n)).collect();
    for (h, &v) in vs.iter().enumerate().take(handlers) {
        b.set_start(Handler(h as u32), v);
    }
    for (v, rhs) in &rules {
        let syms = rhs
            .iter()
            .map(|s| match *s {
                RSym::Var(x) => Sym::Var(vs[x]),
                other => Sym::Term(letter(other)),
            })
            .collect();
        b.rule(vs[*v], syms);
    }
    for &(d, l, e) in &flow {
        b.flow(State(d as u32), letter(l), State(e as u32));
    }
    b.init_state(State(rng.random_range(0..states) as u32));
    for _ in 0..rng.random_range(1..=2) {
        b.buffer(Handler(rng.random_range(0..handlers) as u32), rng.random_range(1..=2));
    }
    let program = b.build().expect("generated program is well formed");
    RandProg { program, states, handlers, internals, vars, var_names, rules, flow }
}

fn random_rhs(rng: &mut StdRng, vars: usize, handlers: usize, internals: usize, cancels: bool) -> Vec<RSym> {
    let len = rng.random_range(0..=3);
    (0..len)
        .map(|_| {
            let r: f64 = rng.random();
            if r < 0.3 {
                RSym::Var(rng.random_range(0..vars))
            } else if r < 0.65 {
                RSym::Post(rng.random_range(0..handlers))
            } else if cancels && r < 0.8 {
                RSym::Cancel(rng.random_range(0..handlers))
            } else {
                RSym::Int(rng.random_range(0..internals))
            }
        })
        .collect()
}

pub fn letter(s: RSym) -> Letter {
    match s {
        RSym::Post(h) => Letter::Post(Handler(h as u32)),
        RSym::Cancel(h) => Letter::Cancel(Handler(h as u32)),
        RSym::Int(i) => Letter::Internal(Internal(i as u32)),
        RSym::Var(_) => panic!("not a terminal"),
    }
}

/// What a handler run does to the buffer: the handlers it cancels and the
/// posts that survive, with counts saturating at `cap`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Eff {
    pub cancelled: BTreeSet<usize>,
    pub posts: Vec<u8>,
}

impl Eff {
    fn unit(handlers: usize) -> Self {
        Eff { cancelled: BTreeSet::new(), posts: vec![0; handlers] }
    }

    /// `self` followed by `next`. Saturating counts commute with both the
    /// sum and the reset, so composition is exact below the cap.
    fn then(&self, next: &Eff, cap: u8) -> Eff {
        let posts = (0..self.posts.len())
            .map(|b| {
                if next.cancelled.contains(&b) {
                    next.posts[b]
                } else {
                    (self.posts[b] + next.posts[b]).min(cap)
                }
            })
            .collect();
        Eff { cancelled: self.cancelled.union(&next.cancelled).cloned().collect(), posts }
    }

    pub fn multiset(&self) -> Multiset<Handler> {
        Multiset::from_counts(self.posts.iter().enumerate().map(|(b, &n)| (Handler(b as u32), n as u64)))
    }

    pub fn size(&self) -> u64 {
        self.posts.iter().map(|&n| n as u64).sum()
    }
}

/// For every `(d, X, d')`, the effects of words `w` with `X ⇒* w` and
/// `d -w->* d'`, exact for effects with at most `bound` surviving posts.
pub fn effects(rp: &RandProg, bound: u64) -> HashMap<(usize, usize, usize), BTreeSet<Eff>> {
    let mut w = saturated_effects(rp, bound);
    for set in w.values_mut() {
        set.retain(|e| e.size() <= bound);
    }
    w
}

/// Whether some handler run posts more than `bound` surviving handlers.
pub fn posts_exceed(rp: &RandProg, bound: u64) -> bool {
    saturated_effects(rp, bound).values().flatten().any(|e| e.size() > bound)
}

fn saturated_effects(rp: &RandProg, bound: u64) -> HashMap<(usize, usize, usize), BTreeSet<Eff>> {
    let cap = (bound + 1).min(u8::MAX as u64) as u8;
    let mut term: HashMap<RSym, Vec<(usize, usize)>> = HashMap::new();
    for &(d, l, e) in &rp.flow {
        term.entry(l).or_default().push((d, e));
    }
    let term_eff = |s: RSym| {
        let mut e = Eff::unit(rp.handlers);
        match s {
            RSym::Post(h) => e.posts[h] = 1,
            RSym::Cancel(h) => {
                e.cancelled.insert(h);
            }
            _ => {}
        }
        e
    };
    let mut w: HashMap<(usize, usize, usize), BTreeSet<Eff>> = HashMap::new();
    loop {
        let mut changed = false;
        for (x, rhs) in &rp.rules {
            for d in 0..rp.states {
                let mut cur: BTreeSet<(usize, Eff)> = BTreeSet::from([(d, Eff::unit(rp.handlers))]);
                for &s in rhs {
                    let mut next = BTreeSet::new();
                    for (e, eff) in &cur {
                        match s {
                            RSym::Var(y) => {
                                for e2 in 0..rp.states {
                                    if let Some(set) = w.get(&(*e, y, e2)) {
                                        for f in set {
                                            next.insert((e2, eff.then(f, cap)));
                                        }
                                    }
                                }
                            }
                            t => {
                                for &(a, b) in term.get(&t).map(|v| v.as_slice()).unwrap_or(&[]) {
                                    if a == *e {
                                        next.insert((b, eff.then(&term_eff(t), cap)));
                                    }
                                }
                            }
                        }
                    }
                    cur = next;
                }
                for (e, eff) in cur {
                    changed |= w.entry((d, *x, e)).or_default().insert(eff);
                }
            }
        }
        if !changed {
            return w;
        }
    }
}

/// Projected words of `G^R`: for every `(d, X, d')`, the words over posts
/// and cancels of length at most `bound`.
pub fn product_words(rp: &RandProg, bound: usize) -> HashMap<(usize, usize, usize), BTreeSet<Vec<Letter>>> {
    let mut term: HashMap<RSym, Vec<(usize, usize)>> = HashMap::new();
    for &(d, l, e) in &rp.flow {
        term.entry(l).or_default().push((d, e));
    }
    let mut w: HashMap<(usize, usize, usize), BTreeSet<Vec<Letter>>> = HashMap::new();
    loop {
        let mut changed = false;
        for (x, rhs) in &rp.rules {
            for d in 0..rp.states {
                let mut cur: BTreeSet<(usize, Vec<Letter>)> = BTreeSet::from([(d, Vec::new())]);
                for &s in rhs {
                    let mut next = BTreeSet::new();
                    for (e, word) in &cur {
                        match s {
                            RSym::Var(y) => {
                                for e2 in 0..rp.states {
                                    for u in w.get(&(*e, y, e2)).into_iter().flatten() {
                                        if word.len() + u.len() <= bound {
                                            let mut v = word.clone();
                                            v.extend(u);
                                            next.insert((e2, v));
                                        }
                                    }
                                }
                            }
                            t => {
                                for &(a, b) in term.get(&t).map(|v| v.as_slice()).unwrap_or(&[]) {
                                    if a != *e {
                                        continue;
                                    }
                                    let mut v = word.clone();
                                    if !matches!(t, RSym::Int(_)) {
                                        v.push(letter(t));
                                    }
                                    if v.len() <= bound {
                                        next.insert((b, v));
                                    }
                                }
                            }
                        }
                    }
                    cur = next;
                }
                for (e, word) in cur {
                    changed |= w.entry((d, *x, e)).or_default().insert(word);
                }
            }
        }
        if !changed {
            return w;
        }
    }
}

/// Words of length at most `bound` derivable from each variable of a
/// pre-normal rule list.
pub fn raw_words<T: Clone + Ord>(vars: usize, rules: &[(usize, Vec<Result<usize, T>>)], bound: usize) -> Vec<BTreeSet<Vec<T>>> {
    let mut w: Vec<BTreeSet<Vec<T>>> = vec![BTreeSet::new(); vars];
    loop {
        let mut changed = false;
        for (x, rhs) in rules {
            let mut cur: BTreeSet<Vec<T>> = BTreeSet::from([Vec::new()]);
            for s in rhs {
                let mut next = BTreeSet::new();
                for word in &cur {
                    match s {
                        Ok(y) => {
                            for u in &w[*y] {
                                if word.len() + u.len() <= bound {
                                    let mut v = word.clone();
                                    v.extend(u.iter().cloned());
                                    next.insert(v);
                                }
                            }
                        }
                        Err(t) => {
                            if word.len() < bound {
                                let mut v = word.clone();
                                v.push(t.clone());
                                next.insert(v);
                            }
                        }
                    }
                }
                cur = next;
            }
            for word in cur {
                changed |= w[*x].insert(word);
            }
        }
        if !changed {
            return w;
        }
    }
}

/// Words of a normal-form grammar, by the same fixpoint.
pub fn cfg_words<T: Clone + Ord + std::hash::Hash>(g: &asyncver::model::Cfg<T>, bound: usize) -> Vec<BTreeSet<Vec<T>>> {
    use asyncver::model::Rhs;
    let rules: Vec<(usize, Vec<Result<usize, T>>)> = g
        .productions()
        .iter()
        .map(|p| {
            let rhs = match &p.rhs {
                Rhs::Pair(a, b) => vec![Ok(a.index()), Ok(b.index())],
                Rhs::Term(t) => vec![Err(t.clone())],
                Rhs::Eps => vec![],
            };
            (p.lhs.index(), rhs)
        })
        .collect();
    raw_words(g.num_vars(), &rules, bound)
}

pub fn parikh<T: Copy + Ord>(w: &[T]) -> Multiset<T> {
    Multiset::parikh(w.iter().copied())
}

/// A random net over at most `max_places` places with arc weights and
/// initial counts in `0..=max_count`.
pub fn random_net(rng: &mut StdRng, max_places: usize, max_count: u64, resets: bool) -> PetriNet {
    let mut n = PetriNet::new();
    let places: Vec<Place> = (0..rng.random_range(1..=max_places)).map(|i| n.add_place(&format!("p{i}"))).collect();
    let arcs = |rng: &mut StdRng| -> Marking {
        let mut m = Marking::new();
        for &p in &places {
            if rng.random_bool(0.35) {
                m.add(p, rng.random_range(1..=max_count.max(1)));
            }
        }
        m
    };
    for i in 0..rng.random_range(1..=4) {
        let mut t = Transition::new(format!("t{i}"), arcs(rng), arcs(rng));
        if resets && rng.random_bool(0.4) {
            let p = places[rng.random_range(0..places.len())];
            t = t.with_reset(vec![p]);
        }
        n.add_transition(t);
    }
    for &p in &places {
        if rng.random_bool(0.5) {
            n.initial.add(p, rng.random_range(0..=max_count));
        }
    }
    n
}

/// A Boolean net whose transitions have nonempty presets.
pub fn random_boolean_net(rng: &mut StdRng, max_places: usize) -> PetriNet {
    let mut n = PetriNet::new();
    let k = rng.random_range(2..=max_places);
    let places: Vec<Place> = (0..k).map(|i| n.add_place(&format!("p{i}"))).collect();
    for i in 0..rng.random_range(1..=5) {
        let mut input = Marking::new();
        let mut output = Marking::new();
        for &p in &places {
            if rng.random_bool(0.3) {
                input.add(p, 1);
            }
            if rng.random_bool(0.3) {
                output.add(p, 1);
            }
        }
        if input.is_empty() {
            input.add(places[rng.random_range(0..k)], 1);
        }
        n.add_transition(Transition::new(format!("t{i}"), input, output));
    }
    for &p in &places {
        if rng.random_bool(0.5) {
            n.initial.add(p, 1);
        }
    }
    n
}

/// Explicit marking vectors, independent of the library's firing code.
pub type Vector = Vec<u64>;

pub fn vector(n: &PetriNet, m: &Marking) -> Vector {
    n.places().map(|p| m.get(p)).collect()
}

fn fire_vec(n: &PetriNet, m: &Vector, t: &Transition) -> Option<Vector> {
    let mut out = m.clone();
    for (p, k) in t.input.iter() {
        out[p.index()] = out[p.index()].checked_sub(k)?;
    }
    for &p in &t.reset {
        out[p.index()] = 0;
    }
    for (p, k) in t.output.iter() {
        out[p.index()] += k;
    }
    let _ = n;
    Some(out)
}

pub struct Explored {
    pub markings: Vec<Vector>,
    pub parent: Vec<Option<usize>>,
    /// The whole reachable set was enumerated.
    pub complete: bool,
    /// Some marking strictly covers one of its ancestors.
    pub pumping: bool,
}

/// Breadth-first enumeration up to `max` markings. With `pump` set, stops
/// at the first marking that covers one of its ancestors.
pub fn explore(n: &PetriNet, max: usize, pump: bool) -> Explored {
    let init = vector(n, &n.initial);
    let mut index: HashMap<Vector, usize> = HashMap::from([(init.clone(), 0)]);
    let mut ex = Explored { markings: vec![init], parent: vec![None], complete: true, pumping: false };
    let mut queue = VecDeque::from([0usize]);
    while let Some(v) = queue.pop_front() {
        for t in n.transitions() {
            let Some(m2) = fire_vec(n, &ex.markings[v], t) else { continue };
            if index.contains_key(&m2) {
                continue;
            }
            let mut a = if pump { Some(v) } else { None };
            while let Some(u) = a {
                if ex.markings[u].iter().zip(&m2).all(|(x, y)| x <= y) {
                    ex.pumping = true;
                    ex.complete = false;
                    return ex;
                }
                a = ex.parent[u];
            }
            if ex.markings.len() >= max {
                ex.complete = false;
                return ex;
            }
            index.insert(m2.clone(), ex.markings.len());
            ex.markings.push(m2);
            ex.parent.push(Some(v));
            queue.push_back(ex.markings.len() - 1);
        }
    }
    ex
}

/// Ground truth for boundedness of a net without resets: `Some(true)` after a
/// complete enumeration, `Some(false)` once a marking covers an ancestor.
pub fn bounded_truth(n: &PetriNet, max: usize) -> Option<bool> {
    let ex = explore(n, max, true);
    if ex.complete {
        Some(true)
    } else if ex.pumping {
        Some(false)
    } else {
        None
    }
}

/// Ground truth for coverability; `None` if enumeration is cut before the
/// target is met.
pub fn cover_truth(n: &PetriNet, target: &Marking, max: usize) -> Option<bool> {
    let t = vector(n, target);
    let ex = explore(n, max, false);
    if ex.markings.iter().any(|m| m.iter().zip(&t).all(|(x, y)| x >= y)) {
        Some(true)
    } else if ex.complete {
        Some(false)
    } else {
        None
    }
}

pub fn random_target(rng: &mut StdRng, n: &PetriNet, max_count: u64) -> Marking {
    let mut m = Marking::new();
    for p in n.places() {
        if rng.random_bool(0.4) {
            m.add(p, rng.random_range(1..=max_count.max(1)));
        }
    }
    m
}

/// Configurations reachable by brute force over [`effects`] when every
/// dispatch posts at most `bound` handlers. `None` past `max` configurations.
pub fn brute_configs(rp: &RandProg, bound: u64, max: usize) -> Option<BTreeSet<(usize, Vec<u64>)>> {
    let eff = effects(rp, bound);
    let p = &rp.program;
    let init_buf: Vec<u64> = (0..rp.handlers).map(|h| p.init_buffer().get(Handler(h as u32))).collect();
    let init = (p.init_state().index(), init_buf);
    let mut seen = BTreeSet::from([init.clone()]);
    let mut queue = VecDeque::from([init]);
    while let Some((d, buf)) = queue.pop_front() {
        for h in 0..rp.handlers {
            if buf[h] == 0 {
                continue;
            }
            for d2 in 0..rp.states {
                for e in eff.get(&(d, h, d2)).into_iter().flatten() {
                    let mut next = buf.clone();
                    next[h] -= 1;
                    for b in 0..rp.handlers {
                        if e.cancelled.contains(&b) {
                            next[b] = 0;
                        }
                        next[b] += e.posts[b] as u64;
                    }
                    let c = (d2, next);
                    if seen.insert(c.clone()) {
                        if seen.len() > max {
                            return None;
                        }
                        queue.push_back(c);
                    }
                }
            }
        }
    }
    Some(seen)
}

pub fn config_key(c: &asyncver::Configuration, handlers: usize) -> (usize, Vec<u64>) {
    (c.state.index(), (0..handlers).map(|h| c.buffer.get(Handler(h as u32))).collect())
}

pub fn count_by<K: Ord + Clone>(it: impl IntoIterator<Item = K>) -> BTreeMap<K, usize> {
    let mut m = BTreeMap::new();
    for k in it {
        *m.entry(k).or_insert(0) += 1;
    }
    m
}

pub fn set_of<T: std::hash::Hash + Eq + Clone>(v: &[T]) -> HashSet<T> {
    v.iter().cloned().collect()
}

/// Effects a compiled widget can produce from `⟦begin⟧`, restricted to at
/// most `bound` posts.
///
/// With `full`, every interleaving is enumerated, with handler places
/// starting at `bound + 2` tokens so that resets stay visible below the prune
/// threshold. Otherwise the widget is evaluated one token at a time: a token
/// `v` with `a` free budget tokens is run to completion before its sibling,
/// trying both sibling orders, which realizes every derivation tree at its
/// optimal index. Transitions are read off the net, never the grammar.
pub fn widget_effects(cn: &asyncver::compile::CompiledNet, w: usize, bound: u64, full: bool) -> BTreeSet<Eff> {
    use asyncver::petri::Label;
    let wd = &cn.widgets[w];
    let n = &cn.net;
    let var_set: HashSet<Place> = wd.vars.iter().copied().collect();
    let inner: HashSet<Place> = wd.vars.iter().copied().chain([wd.begin, wd.budget]).collect();
    let ts: Vec<&Transition> = n
        .transitions()
        .iter()
        .filter(|t| t.label == Label::Widget && !t.input.is_empty() && t.input.support().all(|p| inner.contains(&p)))
        .collect();
    let hidx: HashMap<Place, usize> = cn.handler_places.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let nh = cn.handler_places.len();
    if full {
        return widget_enumerate(cn, w, &ts, bound);
    }
    let k = wd.k as u64;
    let posts_of = |t: &Transition| -> Vec<u64> {
        let mut v = vec![0; nh];
        for (p, c) in t.output.iter() {
            if let Some(&h) = hidx.get(&p) {
                v[h] += c;
            }
        }
        v
    };
    let add = |x: &[u64], y: &[u64]| -> Vec<u64> { x.iter().zip(y).map(|(a, b)| a + b).collect() };
    let fits = |x: &[u64]| x.iter().sum::<u64>() <= bound;
    // out[a][v]: posts of a complete run of one token `v` with `a` free budget
    // tokens, which ends with `a + 1` free tokens.
    let mut out: Vec<HashMap<Place, BTreeSet<Vec<u64>>>> = Vec::new();
    for a in 0..=k {
        let mut cur: HashMap<Place, BTreeSet<Vec<u64>>> = HashMap::new();
        loop {
            let mut changed = false;
            for t in &ts {
                let vin: Vec<Place> = t.input.support().filter(|p| var_set.contains(p)).collect();
                if vin.len() != 1 || t.input.get(vin[0]) != 1 {
                    continue;
                }
                let v = vin[0];
                let bin = t.input.get(wd.budget);
                if bin > a {
                    continue;
                }
                let born: Vec<Place> = t.output.iter().filter(|(p, _)| var_set.contains(p)).flat_map(|(p, c)| std::iter::repeat_n(p, c as usize)).collect();
                let bout = t.output.get(wd.budget);
                let own = posts_of(t);
                let free = a - bin + bout;
                let mut new: Vec<Vec<u64>> = Vec::new();
                match born.as_slice() {
                    [] => {
                        assert_eq!(free, a + 1, "{} breaks token conservation", t.name);
                        new.push(own);
                    }
                    [x] => {
                        assert_eq!(free, a, "{} breaks token conservation", t.name);
                        for r in cur.get(x).into_iter().flatten() {
                            new.push(add(&own, r));
                        }
                    }
                    [x, y] => {
                        assert_eq!(free + 1, a, "{} breaks token conservation", t.name);
                        // The first sibling runs with `free` tokens, the second
                        // with one more once the first has returned its token.
                        for (first, second) in [(x, y), (y, x)] {
                            for r1 in out[free as usize].get(first).into_iter().flatten() {
                                for r2 in cur.get(second).into_iter().flatten() {
                                    new.push(add(&add(&own, r1), r2));
                                }
                            }
                        }
                    }
                    _ => panic!("{} creates more than two tokens", t.name),
                }
                for x in new {
                    if fits(&x) && cur.entry(v).or_default().insert(x) {
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        out.push(cur);
    }
    let done = n.transition(wd.leave);
    assert_eq!(done.input.get(wd.budget), k + 1);
    let mut res = BTreeSet::new();
    for t in ts.iter().filter(|t| t.input.get(wd.begin) == 1) {
        let born: Vec<Place> = t.output.support().filter(|p| var_set.contains(p)).collect();
        assert_eq!(born.len(), 1);
        assert_eq!(t.output.get(wd.budget), k);
        let cancelled: BTreeSet<usize> = t.reset.iter().map(|p| hidx[p]).collect();
        for r in out[k as usize].get(&born[0]).into_iter().flatten() {
            res.insert(Eff { cancelled: cancelled.clone(), posts: r.iter().map(|&c| c as u8).collect() });
        }
    }
    res
}

fn widget_enumerate(cn: &asyncver::compile::CompiledNet, w: usize, ts: &[&Transition], bound: u64) -> BTreeSet<Eff> {
    let wd = &cn.widgets[w];
    let n = &cn.net;
    let base = bound + 2;
    let mut init = vec![0u64; n.num_places()];
    init[wd.begin.index()] = 1;
    for &h in &cn.handler_places {
        init[h.index()] = base;
    }
    let posted = |m: &Vector| -> u64 {
        cn.handler_places.iter().map(|h| if m[h.index()] >= base { m[h.index()] - base } else { m[h.index()] }).sum()
    };
    let mut out = BTreeSet::new();
    let mut seen = HashSet::from([init.clone()]);
    let mut stack = vec![init];
    while let Some(m) = stack.pop() {
        let clean = n.places().all(|p| p == wd.end || cn.handler_places.contains(&p) || m[p.index()] == 0);
        if m[wd.end.index()] == 1 && clean {
            let mut e = Eff { cancelled: BTreeSet::new(), posts: Vec::new() };
            for (b, h) in cn.handler_places.iter().enumerate() {
                let c = m[h.index()];
                if c >= base {
                    e.posts.push((c - base) as u8);
                } else {
                    e.cancelled.insert(b);
                    e.posts.push(c as u8);
                }
            }
            out.insert(e);
        }
        for t in ts {
            let Some(m2) = fire_vec(n, &m, t) else { continue };
            if posted(&m2) <= bound && seen.insert(m2.clone()) {
                stack.push(m2);
            }
        }
    }
    out
}

/// The whole configuration graph of a program, when it is finite and no
/// dispatch posts more than `max_posts` handlers.
pub struct ExactGraph {
    pub nodes: Vec<(usize, Vec<u64>)>,
    /// `(handler, target)` edges.
    pub succ: Vec<Vec<(usize, usize)>>,
}

pub fn exact_graph(rp: &RandProg, max_posts: u64, max: usize) -> Option<ExactGraph> {
    if posts_exceed(rp, max_posts) {
        return None;
    }
    let (nodes, succ, complete) = explore_configs(rp, max_posts, max);
    complete.then_some(ExactGraph { nodes, succ })
}

pub type ConfigVec = (usize, Vec<u64>);

pub fn explore_configs(rp: &RandProg, bound: u64, max: usize) -> (Vec<ConfigVec>, Vec<Vec<(usize, usize)>>, bool) {
    let eff = effects(rp, bound);
    let p = &rp.program;
    let init = (p.init_state().index(), (0..rp.handlers).map(|h| p.init_buffer().get(Handler(h as u32))).collect::<Vec<u64>>());
    let mut index: HashMap<ConfigVec, usize> = HashMap::from([(init.clone(), 0)]);
    let mut nodes = vec![init];
    let mut succ: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
    let mut v = 0;
    while v < nodes.len() {
        let (d, buf) = nodes[v].clone();
        for h in (0..rp.handlers).filter(|&h| buf[h] > 0) {
            for d2 in 0..rp.states {
                for e in eff.get(&(d, h, d2)).into_iter().flatten() {
                    let mut next = buf.clone();
                    next[h] -= 1;
                    for b in 0..rp.handlers {
                        if e.cancelled.contains(&b) {
                            next[b] = 0;
                        }
                        next[b] += e.posts[b] as u64;
                    }
                    let c = (d2, next);
                    let u = match index.get(&c) {
                        Some(&u) => u,
                        None => {
                            if nodes.len() >= max {
                                return (nodes, succ, false);
                            }
                            index.insert(c.clone(), nodes.len());
                            nodes.push(c);
                            succ.push(Vec::new());
                            nodes.len() - 1
                        }
                    };
                    if !succ[v].contains(&(h, u)) {
                        succ[v].push((h, u));
                    }
                }
            }
        }
        v += 1;
    }
    (nodes, succ, true)
}

/// Searches the breadth-first tree for a configuration that covers an
/// ancestor in the same state: `(strictly larger found, any found)`.
/// Sound for programs without cancels.
pub fn pumping(rp: &RandProg, bound: u64, max: usize) -> (bool, bool) {
    let (nodes, succ, _) = explore_configs(rp, bound, max);
    let mut parent: Vec<Option<usize>> = vec![None; nodes.len()];
    let mut seen = vec![false; nodes.len()];
    seen[0] = true;
    let mut queue = VecDeque::from([0usize]);
    let (mut strict, mut weak) = (false, false);
    while let Some(v) = queue.pop_front() {
        for &(_, u) in &succ[v] {
            let mut a = Some(v);
            while let Some(x) = a {
                let (dx, bx) = &nodes[x];
                let (du, bu) = &nodes[u];
                if dx == du && bx.iter().zip(bu).all(|(p, q)| p <= q) {
                    weak = true;
                    strict |= bx != bu;
                }
                a = parent[x];
            }
            if !seen[u] {
                seen[u] = true;
                parent[u] = Some(v);
                queue.push_back(u);
            }
        }
    }
    (strict, weak)
}

/// Strongly connected components, by iterative Kosaraju.
pub fn sccs(n: usize, edges: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut order = Vec::new();
    let mut seen = vec![false; n];
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut stack = vec![(s, 0usize)];
        while let Some((v, i)) = stack.pop() {
            if i < edges[v].len() {
                stack.push((v, i + 1));
                let u = edges[v][i];
                if !seen[u] {
                    seen[u] = true;
                    stack.push((u, 0));
                }
            } else {
                order.push(v);
            }
        }
    }
    let mut rev = vec![Vec::new(); n];
    for v in 0..n {
        for &u in &edges[v] {
            rev[u].push(v);
        }
    }
    let mut comp = vec![usize::MAX; n];
    let mut out = Vec::new();
    for &s in order.iter().rev() {
        if comp[s] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut members = vec![s];
        comp[s] = id;
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            for &u in &rev[v] {
                if comp[u] == usize::MAX {
                    comp[u] = id;
                    members.push(u);
                    stack.push(u);
                }
            }
        }
        out.push(members);
    }
    out
}

impl ExactGraph {
    pub fn has_cycle(&self) -> bool {
        let edges: Vec<Vec<usize>> = self.succ.iter().map(|s| s.iter().map(|&(_, u)| u).collect()).collect();
        sccs(self.nodes.len(), &edges)
            .iter()
            .any(|c| c.len() > 1 || edges[c[0]].contains(&c[0]))
    }

    /// Whether some cycle through allowed nodes and edges dispatches every
    /// handler or passes a configuration where it is not pending.
    pub fn fair_cycle(&self, handlers: usize, node_ok: impl Fn(usize) -> bool, edge_ok: impl Fn(usize, usize) -> bool) -> bool {
        let n = self.nodes.len();
        let edges: Vec<Vec<usize>> = (0..n)
            .map(|v| {
                if !node_ok(v) {
                    return Vec::new();
                }
                self.succ[v].iter().filter(|&&(h, u)| node_ok(u) && edge_ok(v, h)).map(|&(_, u)| u).collect()
            })
            .collect();
        for c in sccs(n, &edges) {
            if !node_ok(c[0]) {
                continue;
            }
            let members: HashSet<usize> = c.iter().copied().collect();
            let mut ok = vec![false; handlers];
            let mut inner = false;
            for &v in &c {
                for (b, flag) in ok.iter_mut().enumerate() {
                    *flag |= self.nodes[v].1[b] == 0;
                }
                for &(h, u) in &self.succ[v] {
                    if members.contains(&u) && node_ok(u) && edge_ok(v, h) {
                        inner = true;
                        ok[h] = true;
                    }
                }
            }
            if inner && ok.iter().all(|&x| x) {
                return true;
            }
        }
        false
    }
}

/// A random pre-normal grammar over `{a, b}` with unit, empty and long rules.
pub fn random_raw(rng: &mut StdRng) -> (RawCfg<char>, Vec<(usize, Vec<Result<usize, char>>)>) {
    let nv = rng.random_range(1..=4);
    let mut g = RawCfg::new();
    let vars: Vec<_> = (0..nv).map(|i| g.var(&format!("A{i}"))).collect();
    let mut rules = Vec::new();
    for i in 0..rng.random_range(nv..=8) {
        let lhs = if i < nv { i } else { rng.random_range(0..nv) };
        let rhs: Vec<Result<usize, char>> = (0..rng.random_range(0..=4))
            .map(|_| if rng.random_bool(0.4) { Ok(rng.random_range(0..nv)) } else { Err(if rng.random_bool(0.5) { 'a' } else { 'b' }) })
            .collect();
        g.add(vars[lhs], rhs.iter().map(|s| match s { Ok(v) => Sym::Var(vars[*v]), Err(c) => Sym::Term(*c) }).collect());
        rules.push((lhs, rhs));
    }
    (g, rules)
}

/// `A_n` doubles `n` times, so `main` posts `a` exactly `2^n` times.
pub fn a_n_program(n: usize) -> String {
    let mut rules = vec!["    A0 -> a;".to_string()];
    for i in 1..=n {
        rules.push(format!("    A{i} -> A{} A{};", i - 1, i - 1));
    }
    format!(
        "program {{\n  states: d;\n  init: d;\n  handlers: main a;\n  buffer: main;\n  grammar {{\n    Xmain -> A{n};\n    Xa -> ;\n{}\n  }}\n  flow {{\n    * -a-> *;\n    * -main-> *;\n  }}\n}}\n",
        rules.join("\n")
    )
}
