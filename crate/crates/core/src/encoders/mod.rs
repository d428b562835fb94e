//! Reverse reductions: Boolean Petri nets encoded as asynchronous programs.
//!
//! Each place becomes a handler whose pending instances are the tokens. A
//! global variable `st = (t, w)` records the transition being fired and the
//! places of its preset still to be consumed.

use std::collections::HashSet;

use crate::model::{AsyncProgram, Configuration, Handler, Internal, Letter, ModelError, ProgramBuilder, State, Sym};
use crate::petri::{Marking, NetError, PetriNet, Place, Transition};

/// One value of the global variables of an encoding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StValue {
    /// `None` for `ε`.
    pub transition: Option<String>,
    /// The preset places still to be consumed, in place order.
    pub pending: Vec<String>,
    /// Flags of the fair-termination encoding.
    pub p1_is_null: Option<bool>,
    pub terminate: Option<bool>,
}

#[derive(Clone, Debug)]
pub struct EncodedProgram {
    pub program: AsyncProgram,
    /// The value encoded by each global state, indexed by state id.
    pub state_map: Vec<StValue>,
    /// The handler simulating each place.
    pub handler_map: Vec<(Place, Handler)>,
    /// The encoded net; differs from the input when places were added.
    pub net: PetriNet,
}

impl EncodedProgram {
    /// The marking given by the pending place handlers of `c`.
    pub fn marking_of(&self, c: &Configuration) -> Marking {
        let mut m = Marking::new();
        for &(p, h) in &self.handler_map {
            m.add(p, c.buffer.get(h));
        }
        m
    }

    /// The state `st = (t, ε)`, with both flags false if there are flags.
    pub fn settled_state(&self, t: Option<&str>) -> Option<State> {
        self.state_map
            .iter()
            .position(|v| {
                v.transition.as_deref() == t
                    && v.pending.is_empty()
                    && v.p1_is_null != Some(true)
                    && v.terminate != Some(true)
            })
            .map(|i| State(i as u32))
    }

    /// `st` has no preset left to consume.
    pub fn is_settled(&self, d: State) -> bool {
        self.state_map[d.index()].pending.is_empty()
    }

    /// `(p1_is_null, terminate)` of state `d`, false when absent.
    pub fn flags(&self, d: State) -> (bool, bool) {
        let v = &self.state_map[d.index()];
        (v.p1_is_null.unwrap_or(false), v.terminate.unwrap_or(false))
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum EncodeError {
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn sanitize(s: &str) -> String {
    s.chars().map(|c| if crate::text::is_ident_char(c) { c } else { '.' }).collect()
}

/// `(t, position in Î(t))`; `t = None` is `ε`.
type St = (Option<usize>, usize);
/// `(p1_is_null, terminate)`.
type Flags = (bool, bool);

struct Enc<'a> {
    n: &'a PetriNet,
    /// `Î(t)` per transition.
    pre: Vec<Vec<Place>>,
    b: ProgramBuilder,
    taken: HashSet<String>,
    hnames: Vec<String>,
    states: Vec<(St, Flags)>,
    map: Vec<StValue>,
    place_h: Vec<Handler>,
    fair: bool,
}

fn check(n: &PetriNet) -> Result<(), NetError> {
    if n.has_resets() {
        return Err(NetError::ResetArcs);
    }
    if !n.is_boolean() {
        let bad = n.transitions().iter().find(|t| t.input.max_count() > 1 || t.output.max_count() > 1);
        return Err(NetError::NotBoolean(bad.map_or("initial marking".into(), |t| t.name.clone())));
    }
    if let Some(t) = n.transitions().iter().find(|t| t.input.is_empty()) {
        return Err(NetError::EmptyPreset(t.name.clone()));
    }
    Ok(())
}

impl<'a> Enc<'a> {
    fn new(n: &'a PetriNet, fair: bool) -> Result<Self, EncodeError> {
        check(n)?;
        let mut e = Enc {
            n,
            pre: n.transitions().iter().map(|t| t.input.support().collect()).collect(),
            b: ProgramBuilder::new(),
            taken: HashSet::new(),
            hnames: Vec::new(),
            states: Vec::new(),
            map: Vec::new(),
            place_h: Vec::new(),
            fair,
        };
        e.declare_states()?;
        for p in n.places() {
            let h = e.handler(n.place_name(p))?;
            e.place_h.push(h);
        }
        Ok(e)
    }

    fn fresh(&mut self, base: &str) -> String {
        let mut name = sanitize(base);
        while !self.taken.insert(name.clone()) {
            name.push('\'');
        }
        name
    }

    fn handler(&mut self, base: &str) -> Result<Handler, EncodeError> {
        let name = self.fresh(base);
        let h = self.b.handler(&name)?;
        let x = self.b.var(&format!("X{name}"));
        self.b.set_start(h, x);
        self.hnames.push(name);
        Ok(h)
    }

    fn internal(&mut self, base: &str) -> Result<Internal, EncodeError> {
        let name = self.fresh(base);
        Ok(self.b.internal(&name)?)
    }

    fn declare_states(&mut self) -> Result<(), EncodeError> {
        let mut sts: Vec<St> = vec![(None, 0)];
        for (t, pre) in self.pre.iter().enumerate() {
            sts.extend((0..=pre.len()).map(|i| (Some(t), i)));
        }
        let flags: &[Flags] =
            if self.fair { &[(false, false), (false, true), (true, false), (true, true)] } else { &[(false, false)] };
        for &f in flags {
            for &st in &sts {
                let (t, i) = st;
                let tname = t.map(|t| self.n.transition(t).name.clone());
                let pending: Vec<String> =
                    t.map_or(vec![], |t| self.pre[t][i..].iter().map(|&p| self.n.place_name(p).to_string()).collect());
                let w = if pending.is_empty() { "eps".to_string() } else { pending.join(".") };
                let mut name = sanitize(&format!("{}/{}", tname.as_deref().unwrap_or("eps"), w));
                if self.fair {
                    name.push_str(&format!("@{}{}", f.0 as u8, f.1 as u8));
                }
                while self.b.find_state(&name).is_some() {
                    name.push('\'');
                }
                self.b.state(&name)?;
                self.states.push((st, f));
                self.map.push(StValue {
                    transition: tname,
                    pending,
                    p1_is_null: self.fair.then_some(f.0),
                    terminate: self.fair.then_some(f.1),
                });
            }
        }
        Ok(())
    }

    fn state(&self, st: St, f: Flags) -> State {
        State(self.states.iter().position(|&s| s == (st, f)).expect("declared state") as u32)
    }

    /// `w = ε`.
    fn settled(&self, (t, i): St) -> bool {
        t.is_none_or(|t| i == self.pre[t].len())
    }

    /// The first pending place of `st`.
    fn head(&self, (t, i): St) -> Option<Place> {
        t.and_then(|t| self.pre[t].get(i).copied())
    }

    /// Adds `from -guard-> to` for every state accepted by `edge`.
    fn guard(&mut self, base: &str, edge: impl Fn(&Self, St, Flags) -> Option<(St, Flags)>) -> Result<Internal, EncodeError> {
        let g = self.internal(base)?;
        for (st, f) in self.states.clone() {
            if let Some((st2, f2)) = edge(self, st, f) {
                let (from, to) = (self.state(st, f), self.state(st2, f2));
                self.b.flow(from, Letter::Internal(g), to);
            }
        }
        Ok(g)
    }

    /// Alternative `X_h -> guard posts...`.
    fn alt(&mut self, h: Handler, guard: Internal, posts: &[Handler]) {
        let x = self.b.var(&format!("X{}", self.hnames[h.index()]));
        let mut rhs = vec![Sym::Term(Letter::Internal(guard))];
        rhs.extend(posts.iter().map(|&q| Sym::Term(Letter::Post(q))));
        self.b.rule(x, rhs);
    }

    fn outputs(&self, t: usize) -> Vec<Handler> {
        self.n.transition(t).output.support().map(|p| self.place_h[p.index()]).collect()
    }

    fn run_pn(&mut self, run: Handler) -> Result<(), EncodeError> {
        for t in 0..self.pre.len() {
            let name = format!("pick.{}", self.n.transition(t).name);
            let g = self.guard(&name, |e, st, f| (e.settled(st) && !f.0).then_some(((Some(t), 0), f)))?;
            self.alt(run, g, &[run]);
        }
        let g = self.guard("busy", |e, st, f| (!e.settled(st) && !f.0).then_some((st, f)))?;
        self.alt(run, g, &[run]);
        if self.fair {
            let g = self.guard("off", |_, st, f| f.0.then_some((st, f)))?;
            self.alt(run, g, &[]);
        }
        Ok(())
    }

    /// The body of the handler of place `p`; `p1` is the watched place of
    /// the fair-termination encoding.
    fn place_body(&mut self, p: Place, p1: bool) -> Result<(), EncodeError> {
        let h = self.place_h[p.index()];
        let pname = self.n.place_name(p).to_string();
        // The matching branch runs unless p1 was declared empty.
        let live = move |f: Flags| !(p1 && f.0);
        if p1 {
            let g = self.guard(&format!("kill.{pname}"), |_, st, f| f.0.then_some((st, (true, true))))?;
            self.alt(h, g, &[]);
        }
        let g = self.guard(&format!("adv.{pname}"), |e, st, f| {
            let (t, i) = st;
            (live(f) && e.head(st) == Some(p) && i + 1 < e.pre[t.unwrap()].len()).then_some(((t, i + 1), f))
        })?;
        self.alt(h, g, &[]);
        for t in 0..self.pre.len() {
            if self.pre[t].last() != Some(&p) {
                continue;
            }
            let last = self.pre[t].len() - 1;
            let name = format!("fire.{}", self.n.transition(t).name);
            let g = self.guard(&name, |_, st, f| (live(f) && st == (Some(t), last)).then_some(((Some(t), last + 1), f)))?;
            let posts = self.outputs(t);
            self.alt(h, g, &posts);
        }
        let g = self.guard(&format!("skip.{pname}"), |e, st, f| (live(f) && e.head(st) != Some(p) && !f.1).then_some((st, f)))?;
        self.alt(h, g, &[h]);
        if self.fair {
            let g =
                self.guard(&format!("drop.{pname}"), |e, st, f| (live(f) && e.head(st) != Some(p) && f.1).then_some((st, f)))?;
            self.alt(h, g, &[]);
        }
        Ok(())
    }

    fn finish(mut self, init: State) -> Result<EncodedProgram, EncodeError> {
        for d in 0..self.states.len() {
            for h in 0..self.hnames.len() {
                let d = State(d as u32);
                self.b.flow(d, Letter::Post(Handler(h as u32)), d);
            }
        }
        self.b.init_state(init);
        let handler_map = self.n.places().map(|p| (p, self.place_h[p.index()])).collect();
        Ok(EncodedProgram { program: self.b.build()?, state_map: self.map, handler_map, net: self.n.clone() })
    }
}

/// Encodes a Boolean net whose transitions all have a non-empty preset.
/// Initially `st = (ε, ε)` and the buffer holds the initial marking and `runPN`.
pub fn encode_pn(n: &PetriNet) -> Result<EncodedProgram, EncodeError> {
    let mut e = Enc::new(n, false)?;
    let run = e.handler("runPN")?;
    e.run_pn(run)?;
    for p in n.places() {
        e.place_body(p, false)?;
    }
    for (p, k) in n.initial.iter() {
        e.b.buffer(e.place_h[p.index()], k);
    }
    e.b.buffer(run, 1);
    let init = e.state((None, 0), (false, false));
    e.finish(init)
}

/// Encodes `n` extended with a transition `t_c` consuming `target`; the
/// target is coverable iff the returned state `(t_c, ε)` is reachable.
pub fn encode_pn_cover(n: &PetriNet, target: &Marking) -> Result<(EncodedProgram, State), EncodeError> {
    if target.is_empty() {
        return Err(NetError::EmptyPreset("t_c".into()).into());
    }
    let mut ext = n.clone();
    let mut name = "t_c".to_string();
    while ext.transitions().iter().any(|t| t.name == name) {
        name.push('\'');
    }
    let p_c = ext.add_place("p_c");
    ext.add_transition(Transition::new(&name, target.clone(), Marking::singleton(p_c)));
    let enc = encode_pn(&ext)?;
    let d = enc.settled_state(Some(&name)).expect("state of t_c");
    Ok((enc, d))
}

/// The fair-termination encoding: the program has a fair infinite run iff
/// some reachable marking has no token in `p1`. A guard place, marked
/// initially and connected to nothing, is added to the net.
pub fn encode_pn_fairterm(n: &PetriNet, p1: &str) -> Result<EncodedProgram, EncodeError> {
    check(n)?;
    let watched = n.place(p1).ok_or_else(|| NetError::UnknownPlace(p1.to_string()))?;
    let mut ext = n.clone();
    let guard = ext.add_place("p_g");
    ext.initial.add(guard, 1);
    let mut e = Enc::new(&ext, true)?;
    let main = e.handler("main")?;
    let guess = e.handler("guess")?;
    let run = e.handler("runPN")?;
    let start = ((None, 0), (false, false));
    let g = e.guard("init", |_, _, _| Some(start))?;
    e.alt(main, g, &[run, guess]);
    let g = e.guard("guess_ok", |e, st, f| e.settled(st).then_some((st, (true, f.1))))?;
    e.alt(guess, g, &[]);
    let g = e.guard("guess_bad", |e, st, _| (!e.settled(st)).then_some((st, (true, true))))?;
    e.alt(guess, g, &[]);
    e.run_pn(run)?;
    for p in ext.places() {
        e.place_body(p, p == watched)?;
    }
    for (p, k) in ext.initial.iter() {
        e.b.buffer(e.place_h[p.index()], k);
    }
    e.b.buffer(main, 1);
    let init = e.state(start.0, start.1);
    e.finish(init)
}
