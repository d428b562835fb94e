//! Asynchronous programs: data model, text format, flow-graph front end and
//! an explicit-state simulator.

pub mod cfg;
pub mod flowgraph;
mod parse;
pub mod sim;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

pub use cfg::{Cfg, Production, RawCfg, Rhs, Sym, Var};
pub use parse::{parse_program, print_program};
pub use sim::{enumerate_reachable, step, BudgetsHit, ConfigGraph, Effect, Semantics, Successors};

use crate::multiset::Multiset;

macro_rules! id_type {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
        pub struct $name(pub u32);

        impl $name {
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }
    };
}

id_type!(
    /// A global state.
    State
);
id_type!(
    /// A handler name.
    Handler
);
id_type!(
    /// An internal action.
    Internal
);

/// A terminal of the handler grammar.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Letter {
    Post(Handler),
    Cancel(Handler),
    Internal(Internal),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("line {line}, column {col}: undeclared symbol `{name}`")]
    Undeclared { line: usize, col: usize, name: String },
    #[error("duplicate declaration of `{0}`")]
    Duplicate(String),
    #[error("missing start variable X{0} for handler `{0}`")]
    MissingStart(String),
    #[error("{0}")]
    Invalid(String),
}

/// The transfer relation over global states, as a set of `d -letter-> d'` rules.
#[derive(Clone, Debug, Default)]
pub struct RegularGrammar {
    rules: BTreeSet<(State, Letter, State)>,
    by_letter: HashMap<Letter, Vec<(State, State)>>,
}

impl RegularGrammar {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, from: State, letter: Letter, to: State) {
        if self.rules.insert((from, letter, to)) {
            self.by_letter.entry(letter).or_default().push((from, to));
        }
    }

    pub fn rules(&self) -> impl Iterator<Item = (State, Letter, State)> + '_ {
        self.rules.iter().copied()
    }

    /// All `(d, d')` with `d -letter-> d'`.
    pub fn moves(&self, letter: Letter) -> &[(State, State)] {
        self.by_letter.get(&letter).map_or(&[], |v| v.as_slice())
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

/// A configuration `(d, m)`: global state and pending handler instances.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Configuration {
    pub state: State,
    pub buffer: Multiset<Handler>,
}

impl Configuration {
    pub fn new(state: State, buffer: Multiset<Handler>) -> Self {
        Configuration { state, buffer }
    }

    /// `self ⊑ other`: same state and smaller buffer.
    pub fn covered_by(&self, other: &Configuration) -> bool {
        self.state == other.state && self.buffer.le(&other.buffer)
    }
}

/// An asynchronous program `(D, Σ, Σi, G, R, d0, m0)`, optionally with cancel letters.
#[derive(Clone, Debug)]
pub struct AsyncProgram {
    states: Vec<String>,
    handlers: Vec<String>,
    internals: Vec<String>,
    cancels: bool,
    grammar: Cfg<Letter>,
    starts: Vec<Var>,
    flow: RegularGrammar,
    init_state: State,
    init_buffer: Multiset<Handler>,
}

impl AsyncProgram {
    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn handlers(&self) -> &[String] {
        &self.handlers
    }

    pub fn internals(&self) -> &[String] {
        &self.internals
    }

    pub fn has_cancels(&self) -> bool {
        self.cancels
    }

    pub fn grammar(&self) -> &Cfg<Letter> {
        &self.grammar
    }

    /// The start variable `X_σ` of a handler.
    pub fn start(&self, h: Handler) -> Var {
        self.starts[h.index()]
    }

    pub fn flow(&self) -> &RegularGrammar {
        &self.flow
    }

    pub fn init_state(&self) -> State {
        self.init_state
    }

    pub fn init_buffer(&self) -> &Multiset<Handler> {
        &self.init_buffer
    }

    pub fn initial(&self) -> Configuration {
        Configuration::new(self.init_state, self.init_buffer.clone())
    }

    pub fn state_ids(&self) -> impl Iterator<Item = State> {
        (0..self.states.len() as u32).map(State)
    }

    pub fn handler_ids(&self) -> impl Iterator<Item = Handler> {
        (0..self.handlers.len() as u32).map(Handler)
    }

    pub fn state_name(&self, d: State) -> &str {
        &self.states[d.index()]
    }

    pub fn handler_name(&self, h: Handler) -> &str {
        &self.handlers[h.index()]
    }

    pub fn state_by_name(&self, name: &str) -> Option<State> {
        self.states.iter().position(|s| s == name).map(|i| State(i as u32))
    }

    pub fn handler_by_name(&self, name: &str) -> Option<Handler> {
        self.handlers.iter().position(|s| s == name).map(|i| Handler(i as u32))
    }

    pub fn letter_name(&self, l: Letter) -> String {
        match l {
            Letter::Post(h) => self.handlers[h.index()].clone(),
            Letter::Cancel(h) => format!("~{}", self.handlers[h.index()]),
            Letter::Internal(i) => self.internals[i.index()].clone(),
        }
    }

    pub fn fmt_buffer(&self, m: &Multiset<Handler>) -> String {
        m.display_with(|h| self.handler_name(h).to_string()).to_string()
    }

    pub fn fmt_config(&self, c: &Configuration) -> String {
        format!("({}, {})", self.state_name(c.state), self.fmt_buffer(&c.buffer))
    }

    /// Parses a configuration written as `state {h:n, ...}` or `state h:n ...`.
    pub fn parse_config(&self, text: &str) -> Result<Configuration, ModelError> {
        let cleaned: String = text.chars().map(|c| if "{},()".contains(c) { ' ' } else { c }).collect();
        let mut words = cleaned.split_whitespace();
        let first = words.next().ok_or_else(|| ModelError::Invalid("empty configuration".into()))?;
        let state = self
            .state_by_name(first)
            .ok_or_else(|| ModelError::Invalid(format!("unknown state `{first}`")))?;
        let mut buffer = Multiset::new();
        for w in words {
            let (name, count) = match w.split_once(':') {
                Some((n, c)) => {
                    (n, c.parse::<u64>().map_err(|_| ModelError::Invalid(format!("bad count in `{w}`")))?)
                }
                None => (w, 1),
            };
            let h = self
                .handler_by_name(name)
                .ok_or_else(|| ModelError::Invalid(format!("unknown handler `{name}`")))?;
            buffer.add(h, count);
        }
        Ok(Configuration::new(state, buffer))
    }

    /// A size measure: states, handlers, grammar symbols and transfer rules.
    pub fn size(&self) -> usize {
        self.states.len() + self.handlers.len() + self.internals.len() + self.grammar.size() + self.flow.len()
    }

    /// Whether some production posts `h`.
    pub fn is_posted(&self, h: Handler) -> bool {
        self.grammar.productions().iter().any(|p| p.rhs == Rhs::Term(Letter::Post(h)))
    }

    /// An equivalent program that starts with a single instance of a fresh
    /// root handler, never posted, in a fresh state. The root posts the
    /// initial buffer and moves to the initial state with an internal step.
    /// Existing states and handlers keep their ids. Returns the root.
    pub fn rooted(&self) -> (AsyncProgram, Handler) {
        let mut taken: HashSet<String> =
            self.states.iter().chain(&self.handlers).chain(&self.internals).cloned().collect();
        taken.extend(self.grammar.vars().map(|v| self.grammar.name(v).to_string()));
        let fresh = |base: &str, taken: &mut HashSet<String>| {
            let mut n = base.to_string();
            while taken.contains(&n) {
                n.push('\'');
            }
            taken.insert(n.clone());
            n
        };
        let mut p = self.clone();
        let d_init = State(p.states.len() as u32);
        p.states.push(fresh("init", &mut taken));
        let root = Handler(p.handlers.len() as u32);
        p.handlers.push(fresh("root", &mut taken));
        let go = Internal(p.internals.len() as u32);
        p.internals.push(fresh("go", &mut taken));

        let g = &mut p.grammar;
        let mut parts: Vec<Var> = Vec::new();
        for (h, n) in self.init_buffer.iter() {
            // Doubling chain: pow[j] derives h^(2^j).
            let mut pow = vec![g.fresh_var(&format!("_root_{}_0", self.handlers[h.index()]), &taken)];
            g.add(pow[0], Rhs::Term(Letter::Post(h)));
            for j in 1..(u64::BITS - n.leading_zeros()) as usize {
                let v = g.fresh_var(&format!("_root_{}_{j}", self.handlers[h.index()]), &taken);
                g.add(v, Rhs::Pair(pow[j - 1], pow[j - 1]));
                pow.push(v);
            }
            parts.extend((0..pow.len()).filter(|&j| (n >> j) & 1 == 1).map(|j| pow[j]));
        }
        let last = g.fresh_var("_root_go", &taken);
        g.add(last, Rhs::Term(Letter::Internal(go)));
        let mut body = last;
        for &v in parts.iter().rev() {
            let x = g.fresh_var("_root", &taken);
            g.add(x, Rhs::Pair(v, body));
            body = x;
        }
        p.starts.push(body);

        for h in self.handler_ids() {
            p.flow.add(d_init, Letter::Post(h), d_init);
        }
        p.flow.add(d_init, Letter::Internal(go), self.init_state);
        p.init_state = d_init;
        p.init_buffer = Multiset::singleton(root);
        (p, root)
    }
}

impl fmt::Display for AsyncProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_program(self))
    }
}

/// Incremental construction of an [`AsyncProgram`].
///
/// Grammar rules are pre-normal; [`ProgramBuilder::build`] normalizes them.
#[derive(Clone, Debug, Default)]
pub struct ProgramBuilder {
    states: Vec<String>,
    handlers: Vec<String>,
    internals: Vec<String>,
    cancels: bool,
    raw: RawCfg<Letter>,
    starts: HashMap<Handler, Var>,
    flow: RegularGrammar,
    init_state: Option<State>,
    init_buffer: Multiset<Handler>,
    names: HashSet<String>,
}

impl ProgramBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn declare(list: &mut Vec<String>, names: &mut HashSet<String>, name: &str) -> Result<u32, ModelError> {
        if !names.insert(name.to_string()) {
            return Err(ModelError::Duplicate(name.to_string()));
        }
        list.push(name.to_string());
        Ok(list.len() as u32 - 1)
    }

    pub fn state(&mut self, name: &str) -> Result<State, ModelError> {
        if self.states.iter().any(|s| s == name) {
            return Err(ModelError::Duplicate(name.to_string()));
        }
        self.states.push(name.to_string());
        Ok(State(self.states.len() as u32 - 1))
    }

    pub fn handler(&mut self, name: &str) -> Result<Handler, ModelError> {
        Self::declare(&mut self.handlers, &mut self.names, name).map(Handler)
    }

    pub fn internal(&mut self, name: &str) -> Result<Internal, ModelError> {
        Self::declare(&mut self.internals, &mut self.names, name).map(Internal)
    }

    pub fn enable_cancels(&mut self, on: bool) {
        self.cancels = on;
    }

    pub fn find_state(&self, name: &str) -> Option<State> {
        self.states.iter().position(|s| s == name).map(|i| State(i as u32))
    }

    pub fn find_handler(&self, name: &str) -> Option<Handler> {
        self.handlers.iter().position(|s| s == name).map(|i| Handler(i as u32))
    }

    pub fn find_internal(&self, name: &str) -> Option<Internal> {
        self.internals.iter().position(|s| s == name).map(|i| Internal(i as u32))
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn is_terminal_name(&self, name: &str) -> bool {
        self.names.contains(name)
    }

    pub fn var(&mut self, name: &str) -> Var {
        self.raw.var(name)
    }

    pub fn has_var(&self, name: &str) -> bool {
        self.raw.lookup(name).is_some()
    }

    pub fn rule(&mut self, lhs: Var, rhs: Vec<Sym<Letter>>) {
        self.raw.add(lhs, rhs);
    }

    pub fn set_start(&mut self, h: Handler, v: Var) {
        self.starts.insert(h, v);
    }

    pub fn flow(&mut self, from: State, letter: Letter, to: State) {
        self.flow.add(from, letter, to);
    }

    pub fn init_state(&mut self, d: State) {
        self.init_state = Some(d);
    }

    pub fn buffer(&mut self, h: Handler, n: u64) {
        self.init_buffer.add(h, n);
    }

    pub fn build(self) -> Result<AsyncProgram, ModelError> {
        if self.states.is_empty() {
            return Err(ModelError::Invalid("a program needs at least one state".into()));
        }
        let init_state = self.init_state.unwrap_or(State(0));
        let mut starts = Vec::with_capacity(self.handlers.len());
        for (i, h) in self.handlers.iter().enumerate() {
            let v = match self.starts.get(&Handler(i as u32)) {
                Some(v) => *v,
                None => self.raw.lookup(&format!("X{h}")).ok_or_else(|| ModelError::MissingStart(h.clone()))?,
            };
            starts.push(v);
        }
        for (_, rhs) in self.raw.productions() {
            for s in rhs {
                if let Sym::Term(Letter::Cancel(h)) = s {
                    if !self.cancels {
                        return Err(ModelError::Invalid(format!(
                            "cancel of `{}` used but cancels are off",
                            self.handlers[h.index()]
                        )));
                    }
                }
            }
        }
        let mut avoid = self.names.clone();
        avoid.insert("eps".to_string());
        let grammar = self.raw.normalize(&avoid);
        Ok(AsyncProgram {
            states: self.states,
            handlers: self.handlers,
            internals: self.internals,
            cancels: self.cancels,
            grammar,
            starts,
            flow: self.flow,
            init_state,
            init_buffer: self.init_buffer,
        })
    }
}
