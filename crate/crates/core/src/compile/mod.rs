//! Compilation of asynchronous programs into Petri nets.
//!
//! Each context `(d1, a, d2)` with a non-empty language gets a widget whose
//! runs from its begin place to its end place produce exactly the Parikh
//! images of the context language. Stitching connects widgets to state and
//! handler places.

use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;

use thiserror::Error;

use crate::grammars::{cancel_product_of, Context, ProductGrammar};
use crate::model::{AsyncProgram, Cfg, Configuration, Handler, Letter, Rhs, Var};
use crate::multiset::Multiset;
use crate::petri::{Label, Marking, PetriNet, Place, Transition};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CompileError {
    #[error("the index bound must be positive")]
    ZeroIndex,
    #[error("the program uses cancels; only the reset-net construction applies")]
    HasCancels,
    #[error("unknown handler `{0}`")]
    UnknownHandler(String),
}

/// Replaces characters that the net text format does not accept in names.
pub(crate) fn safe(s: &str) -> String {
    s.chars().map(|c| if crate::text::is_ident_char(c) || c == '~' { c } else { '.' }).collect()
}

/// The net `N^k_G` of a grammar with places for variables, terminals and a budget.
#[derive(Clone, Debug)]
pub struct IndexNet<T> {
    pub net: PetriNet,
    pub vars: Vec<Place>,
    pub terminals: BTreeMap<T, Place>,
    pub budget: Place,
}

/// Adds one transition per production; variables are `vars`, the budget is `budget`.
fn production_transitions<T: Clone + Eq + Hash>(
    net: &mut PetriNet,
    g: &Cfg<T>,
    vars: &[Place],
    budget: Place,
    term: impl Fn(&T) -> Marking,
    prefix: &str,
    label: Label,
) {
    for (i, p) in g.productions().iter().enumerate() {
        let x = vars[p.lhs.index()];
        let (input, output) = match &p.rhs {
            Rhs::Pair(a, b) => (
                Marking::from_counts([(x, 1), (budget, 1)]),
                Marking::singleton(vars[a.index()]).sum(&Marking::singleton(vars[b.index()])),
            ),
            Rhs::Term(t) => (Marking::singleton(x), term(t).sum(&Marking::singleton(budget))),
            Rhs::Eps => (Marking::singleton(x), Marking::singleton(budget)),
        };
        net.add_transition(Transition::new(format!("{prefix}p{i}"), input, output).with_label(label.clone()));
    }
}

/// `N^k_G`: from `⟦start⟧ ⊕ ⟦$^(k-1)⟧`, the marking `m ⊕ ⟦$^k⟧` is reachable
/// iff `m` is the Parikh image of a word with a derivation of index at most `k`.
pub fn index_net<T: Copy + Ord + Hash>(
    g: &Cfg<T>,
    start: Var,
    k: usize,
    name: impl Fn(T) -> String,
) -> Result<IndexNet<T>, CompileError> {
    if k == 0 {
        return Err(CompileError::ZeroIndex);
    }
    let mut net = PetriNet::new();
    let vars: Vec<Place> = g.vars().map(|v| net.add_place(&safe(g.name(v)))).collect();
    let mut terminals = BTreeMap::new();
    for p in g.productions() {
        if let Rhs::Term(t) = p.rhs {
            terminals.entry(t).or_insert_with(|| net.add_place(&safe(&name(t))));
        }
    }
    let budget = net.add_place("$");
    production_transitions(&mut net, g, &vars, budget, |t| Marking::singleton(terminals[t]), "", Label::Plain);
    net.initial = Marking::from_counts([(vars[start.index()], 1), (budget, k as u64 - 1)]);
    Ok(IndexNet { net, vars, terminals, budget })
}

/// The places and transitions of one context widget.
#[derive(Clone, Debug)]
pub struct Widget {
    pub context: Context,
    pub begin: Place,
    pub end: Place,
    pub budget: Place,
    pub vars: Vec<Place>,
    /// `|X^c|` after pruning; the widget holds `k + 1` tokens while running.
    pub k: usize,
    /// `t_c^<` (two variants in the starvation net).
    pub enter: Vec<usize>,
    /// Entry transitions `t_i`, one per cancel set for reset widgets.
    pub entries: Vec<usize>,
    /// `t_e`.
    pub leave: usize,
    /// `t_c^>`, the dispatch-labelled transition.
    pub exit: usize,
}

/// Places added by the starvation construction.
#[derive(Clone, Debug)]
pub struct Starvation {
    pub handler: Handler,
    pub p_f: Place,
    pub p_inf: Place,
    /// `t^{f/∞}`.
    pub switch: usize,
}

/// A program compiled into a net.
#[derive(Clone, Debug)]
pub struct CompiledNet {
    pub net: PetriNet,
    /// The compiled program; differs from the input when it had to be rooted.
    pub program: AsyncProgram,
    pub state_places: Vec<Place>,
    pub handler_places: Vec<Place>,
    pub widgets: Vec<Widget>,
    pub starvation: Option<Starvation>,
    pub monitor: Option<Place>,
    exits: HashMap<usize, usize>,
}

fn context_name(p: &AsyncProgram, c: Context) -> String {
    safe(&format!("{}.{}.{}", p.state_name(c.from), p.handler_name(c.handler), p.state_name(c.to)))
}

fn build(p: &AsyncProgram, cancel: bool, starving: Option<Handler>) -> CompiledNet {
    let pg = ProductGrammar::of_program(p);
    let mut net = PetriNet::new();
    let state_places: Vec<Place> = p.states().iter().map(|d| net.add_place(&format!("st.{}", safe(d)))).collect();
    let handler_places: Vec<Place> = p.handlers().iter().map(|h| net.add_place(&safe(h))).collect();
    let starvation = starving.map(|a| {
        let p_f = net.add_place("p_f");
        let p_inf = net.add_place("p_inf");
        let t = Transition::new("t_f_inf", Marking::singleton(p_f), Marking::singleton(p_inf));
        let switch = net.add_transition(t.with_label(Label::Structural));
        Starvation { handler: a, p_f, p_inf, switch }
    });

    let mut widgets = Vec::new();
    let mut exits = HashMap::new();
    for c in pg.contexts(p) {
        let cg = pg.context_grammar(p, c).expect("listed contexts are non-empty");
        let name = context_name(p, c);
        let group = format!("widget {name}");
        let begin = net.add_place_in(&format!("begin[{name}]"), &group);
        let end = net.add_place_in(&format!("end[{name}]"), &group);
        let budget = net.add_place_in(&format!("$[{name}]"), &group);
        let d1 = state_places[c.from.index()];
        let a = handler_places[c.handler.index()];

        let mut enter = Vec::new();
        let begin_m = Marking::singleton(begin);
        match &starvation {
            Some(s) if s.handler == c.handler => {
                let f = Transition::new(
                    format!("enter_f[{name}]"),
                    Marking::from_counts([(d1, 1), (a, 1), (s.p_f, 1)]),
                    begin_m.sum(&Marking::singleton(s.p_f)),
                );
                enter.push(net.add_transition(f.with_label(Label::Structural)));
                let inf = Transition::new(
                    format!("enter_inf[{name}]"),
                    Marking::from_counts([(d1, 1), (a, 2), (s.p_inf, 1)]),
                    begin_m.sum(&Marking::from_counts([(a, 1), (s.p_inf, 1)])),
                );
                enter.push(net.add_transition(inf.with_label(Label::Structural)));
            }
            _ => {
                let t = Transition::new(format!("enter[{name}]"), Marking::from_counts([(d1, 1), (a, 1)]), begin_m.clone());
                enter.push(net.add_transition(t.with_label(Label::Structural)));
            }
        }

        let mut entries = Vec::new();
        let (vars, k) = if cancel {
            let cp = cancel_product_of(&cg, p.handlers());
            let vars: Vec<Place> =
                cp.cfg.vars().map(|v| net.add_place_in(&format!("{}@{name}", safe(cp.cfg.name(v))), &group)).collect();
            let k = vars.len() as u64;
            for (s, v) in &cp.starts {
                let set: Vec<&str> = s.iter().map(|h| p.handler_name(*h)).collect();
                let out = Marking::from_counts([(vars[v.index()], 1), (budget, k)]);
                let t = Transition::new(format!("init/{}[{name}]", safe(&set.join("."))), begin_m.clone(), out)
                    .with_reset(s.iter().map(|h| handler_places[h.index()]).collect())
                    .with_label(Label::Widget);
                entries.push(net.add_transition(t));
            }
            let term = |h: &Handler| Marking::singleton(handler_places[h.index()]);
            production_transitions(&mut net, &cp.cfg, &vars, budget, term, &format!("[{name}]"), Label::Widget);
            (vars, k)
        } else {
            let vars: Vec<Place> =
                cg.cfg.vars().map(|v| net.add_place_in(&format!("{}@{name}", safe(cg.cfg.name(v))), &group)).collect();
            let k = vars.len() as u64;
            let out = Marking::from_counts([(vars[cg.start.index()], 1), (budget, k)]);
            let t = Transition::new(format!("init[{name}]"), begin_m.clone(), out).with_label(Label::Widget);
            entries.push(net.add_transition(t));
            let term = |l: &Letter| match l {
                Letter::Post(h) => Marking::singleton(handler_places[h.index()]),
                _ => unreachable!("only posts survive in a program without cancels"),
            };
            production_transitions(&mut net, &cg.cfg, &vars, budget, term, &format!("[{name}]"), Label::Widget);
            (vars, k)
        };
        let t_e = Transition::new(format!("done[{name}]"), Marking::from_counts([(budget, k + 1)]), Marking::singleton(end));
        let leave = net.add_transition(t_e.with_label(Label::Widget));
        let t_exit = Transition::new(format!("exit[{name}]"), Marking::singleton(end), Marking::singleton(state_places[c.to.index()]))
            .with_label(Label::Dispatch(p.handler_name(c.handler).to_string()));
        let exit = net.add_transition(t_exit);
        exits.insert(exit, widgets.len());
        widgets.push(Widget { context: c, begin, end, budget, vars, k: k as usize, enter, entries, leave, exit });
    }

    let mut cn = CompiledNet {
        net,
        program: p.clone(),
        state_places,
        handler_places,
        widgets,
        starvation,
        monitor: None,
        exits,
    };
    let mut init = cn.marking_of(&p.initial());
    if let Some(s) = &cn.starvation {
        init.add(s.p_f, 1);
    }
    cn.net.initial = init;
    cn
}

/// Constr. of the program net for a program without cancels.
pub fn stitch(p: &AsyncProgram) -> Result<CompiledNet, CompileError> {
    if p.has_cancels() {
        return Err(CompileError::HasCancels);
    }
    Ok(build(p, false, None))
}

/// The reset net of a program with cancels. Widget entries reset the
/// handlers cancelled during the run.
pub fn stitch_cancel(p: &AsyncProgram) -> CompiledNet {
    build(p, true, None)
}

/// The starvation net for handler `a`. Programs whose initial buffer is not
/// a single instance of a never-posted handler are rooted first.
pub fn stitch_starvation(p: &AsyncProgram, a: Handler) -> Result<CompiledNet, CompileError> {
    if p.has_cancels() {
        return Err(CompileError::HasCancels);
    }
    if a.index() >= p.handlers().len() {
        return Err(CompileError::UnknownHandler(format!("#{}", a.0)));
    }
    let m0 = p.init_buffer();
    let single = m0.size() == 1 && m0.support().all(|h| !p.is_posted(h));
    if single {
        Ok(build(p, false, Some(a)))
    } else {
        Ok(build(&p.rooted().0, false, Some(a)))
    }
}

impl CompiledNet {
    /// `⟦d⟧ ⊕ m`.
    pub fn marking_of(&self, c: &Configuration) -> Marking {
        let mut m = Marking::singleton(self.state_places[c.state.index()]);
        for (h, n) in c.buffer.iter() {
            m.add(self.handler_places[h.index()], n);
        }
        m
    }

    /// The configuration of a marking with one state token and empty widgets.
    /// Monitor and starvation-mode places are ignored.
    pub fn config_of(&self, m: &Marking) -> Option<Configuration> {
        let mut state = None;
        let mut buffer = Multiset::new();
        let handler_of: HashMap<Place, usize> = self.handler_places.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        for (pl, n) in m.iter() {
            if let Some(d) = self.state_places.iter().position(|&s| s == pl) {
                if n != 1 || state.is_some() {
                    return None;
                }
                state = Some(crate::model::State(d as u32));
            } else if let Some(&h) = handler_of.get(&pl) {
                buffer.add(Handler(h as u32), n);
            } else if Some(pl) == self.monitor
                || self.starvation.as_ref().is_some_and(|s| pl == s.p_f || pl == s.p_inf)
            {
            } else {
                return None;
            }
        }
        state.map(|d| Configuration::new(d, buffer))
    }

    /// The context dispatched by exit transition `t`.
    pub fn dispatch_of(&self, t: usize) -> Option<Context> {
        self.exits.get(&t).map(|&w| self.widgets[w].context)
    }

    /// Adds `p_w`, produced by every dispatch-labelled transition and never consumed.
    pub fn add_monitor(&mut self) -> Place {
        if let Some(p) = self.monitor {
            return p;
        }
        let p = self.net.add_place("p_w");
        for &t in self.exits.keys() {
            self.net.transition_mut(t).output.add(p, 1);
        }
        self.monitor = Some(p);
        p
    }

    /// Whether some reachable marking can cover `m`, judged by the control
    /// invariant: exactly one of a state token, a begin token, a running
    /// widget holding `k + 1` tokens, or an end token.
    pub fn may_cover(&self, m: &Marking) -> bool {
        let mut units: u64 = self.state_places.iter().map(|&p| m.get(p)).sum();
        for w in &self.widgets {
            units += m.get(w.begin) + m.get(w.end);
            let inside: u64 = m.get(w.budget) + w.vars.iter().map(|&p| m.get(p)).sum::<u64>();
            if inside > w.k as u64 + 1 {
                return false;
            }
            units += (inside > 0) as u64;
            if units > 1 {
                return false;
            }
        }
        if let Some(s) = &self.starvation {
            if m.get(s.p_f) + m.get(s.p_inf) > 1 {
                return false;
            }
        }
        true
    }

    /// Replays a firing sequence and lists the dispatches it performs, each
    /// with the configuration reached when the handler returns.
    pub fn dispatches(&self, seq: &[usize]) -> Option<Vec<(Handler, Configuration)>> {
        let mut m = self.net.initial.clone();
        let mut out = Vec::new();
        for &t in seq {
            m = self.net.fire(&m, t).ok()?;
            if let Some(c) = self.dispatch_of(t) {
                out.push((c.handler, self.config_of(&m)?));
            }
        }
        Some(out)
    }

    pub fn to_dot(&self) -> String {
        self.net.to_dot()
    }
}
