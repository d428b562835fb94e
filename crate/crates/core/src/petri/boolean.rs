//! Conversion to Boolean nets: markings and arc weights at most one.
//!
//! A transition with heavy arcs becomes a chain of stages, one per place of
//! its preset (first) and postset (after). A stage moving `n > 1` tokens
//! loads `n` into a binary counter and moves one token per decrement.

use super::{Label, Marking, NetError, PetriNet, Place, Transition};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoolMode {
    /// Preserve boundedness.
    Bound,
    /// Preserve coverability of the target.
    Cover,
    /// Preserve reachability of the target.
    Reach,
}

#[derive(Clone, Debug)]
pub struct Booleanized {
    /// Original places keep their ids.
    pub net: PetriNet,
    /// The Boolean target, for `Cover` and `Reach`.
    pub target: Option<Marking>,
}

struct Builder {
    net: PetriNet,
    ctl: Option<Place>,
}

impl Builder {
    fn ctl(&mut self) -> Place {
        match self.ctl {
            Some(c) => c,
            None => {
                let c = self.net.add_place("ctl");
                self.ctl = Some(c);
                c
            }
        }
    }

    /// Adds `t`, replacing it by a chain if it is not Boolean. With
    /// `hold_ctl` false the chain does not give the control token back.
    fn add(&mut self, t: Transition, hold_ctl: bool) {
        if t.input.max_count() <= 1 && t.output.max_count() <= 1 {
            let mut t = t;
            if !hold_ctl {
                let c = self.ctl();
                t.input.add(c, 1);
            }
            self.net.add_transition(t);
            return;
        }
        let ctl = self.ctl();
        let stages: Vec<(Place, u64, bool)> =
            t.input.iter().map(|(p, n)| (p, n, true)).chain(t.output.iter().map(|(p, n)| (p, n, false))).collect();
        let group = format!("chain {}", t.name);
        let mut cur = ctl;
        for (j, &(p, n, consume)) in stages.iter().enumerate() {
            let last = j + 1 == stages.len();
            let next = match (last, hold_ctl) {
                (true, true) => Some(ctl),
                (true, false) => None,
                _ => Some(self.net.add_place_in(&format!("{}.c{}", t.name, j + 1), &group)),
            };
            let label = if last { t.label.clone() } else { Label::Structural };
            let unit = Marking::singleton(p);
            let (take, give) = if consume { (unit, Marking::new()) } else { (Marking::new(), unit) };
            let next_m = next.map(Marking::singleton).unwrap_or_default();
            let name = format!("{}.s{j}", t.name);
            if n == 1 {
                let tr = Transition::new(&name, take.sum(&Marking::singleton(cur)), give.sum(&next_m));
                self.net.add_transition(tr.with_label(label));
            } else {
                self.counter(&name, &group, cur, &next_m, n, &take, &give, label);
            }
            if let Some(nx) = next {
                cur = nx;
            }
        }
    }

    /// A stage that repeats `take -> give` exactly `n` times.
    #[allow(clippy::too_many_arguments)]
    fn counter(
        &mut self,
        name: &str,
        group: &str,
        from: Place,
        to: &Marking,
        n: u64,
        take: &Marking,
        give: &Marking,
        label: Label,
    ) {
        let bits = (u64::BITS - n.leading_zeros()) as usize;
        let run = self.net.add_place_in(&format!("{name}.run"), group);
        let col: Vec<[Place; 2]> = (0..bits)
            .map(|i| {
                [
                    self.net.add_place_in(&format!("{name}.b{i}_0"), group),
                    self.net.add_place_in(&format!("{name}.b{i}_1"), group),
                ]
            })
            .collect();
        let mut load = Marking::singleton(run);
        for (i, c) in col.iter().enumerate() {
            load.add(c[((n >> i) & 1) as usize], 1);
        }
        let tr = Transition::new(format!("{name}.load"), Marking::singleton(from), load);
        self.net.add_transition(tr.with_label(Label::Structural));
        for j in 0..bits {
            let mut i = Marking::from_counts([(run, 1), (col[j][1], 1)]);
            let mut o = Marking::from_counts([(run, 1), (col[j][0], 1)]);
            for c in &col[..j] {
                i.add(c[0], 1);
                o.add(c[1], 1);
            }
            let tr = Transition::new(format!("{name}.dec{j}"), i.sum(take), o.sum(give));
            self.net.add_transition(tr.with_label(Label::Structural));
        }
        let mut zero = Marking::singleton(run);
        for c in &col {
            zero.add(c[0], 1);
        }
        self.net.add_transition(Transition::new(format!("{name}.done"), zero, to.clone()).with_label(label));
    }
}

/// Builds a Boolean net equivalent to `n` for the given question.
pub fn to_boolean(n: &PetriNet, mode: BoolMode, target: Option<&Marking>) -> Result<Booleanized, NetError> {
    if n.has_resets() {
        return Err(NetError::ResetArcs);
    }
    let target = match (mode, target) {
        (BoolMode::Bound, _) => None,
        (_, Some(t)) => Some(t.clone()),
        (_, None) => return Err(NetError::MissingTarget),
    };
    let mut net = PetriNet::new();
    for p in n.places() {
        match n.place_group(p) {
            Some(g) => net.add_place_in(n.place_name(p), g),
            None => net.add_place(n.place_name(p)),
        };
    }
    let p_i = net.add_place("p_i");
    let p_r = (mode == BoolMode::Reach).then(|| net.add_place("p_r"));
    let mut b = Builder { net, ctl: None };

    for t in n.transitions() {
        let mut t = t.clone();
        if let Some(r) = p_r {
            t.input.add(r, 1);
            t.output.add(r, 1);
        }
        b.add(t, true);
    }
    let t_i = Transition::new("t_i", Marking::singleton(p_i), n.initial.clone());
    b.add(t_i.with_label(Label::Structural), true);
    let mut initial = Marking::singleton(p_i);
    if let Some(r) = p_r {
        initial.add(r, 1);
    }
    let new_target = match (mode, target) {
        (BoolMode::Cover, Some(m)) => {
            let p_c = b.net.add_place("p_c");
            b.add(Transition::new("t_c", m, Marking::singleton(p_c)).with_label(Label::Structural), true);
            Some(Marking::singleton(p_c))
        }
        (BoolMode::Reach, Some(m)) => {
            let consume = m.sum(&Marking::singleton(p_r.unwrap()));
            let t_r = Transition::new("t_r", consume, Marking::new()).with_label(Label::Structural);
            // The final transition also swallows the control token, if any.
            let hold = b.ctl.is_none() && t_r.input.max_count() <= 1;
            b.add(t_r, hold);
            Some(Marking::new())
        }
        _ => None,
    };
    if let Some(c) = b.ctl {
        initial.add(c, 1);
    }
    b.net.initial = initial;
    Ok(Booleanized { net: b.net, target: new_target })
}
