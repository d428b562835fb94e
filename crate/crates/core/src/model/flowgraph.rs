//! Control-flow-graph front end.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{AsyncProgram, Letter, ModelError, ProgramBuilder, Sym};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EdgeLabel {
    /// A statement interpreted by the transfer function.
    Stmt(String),
    /// A synchronous call, executed immediately.
    Sync(String),
    /// An asynchronous call, added to the task buffer.
    Async(String),
}

#[derive(Clone, Debug)]
pub struct Procedure {
    pub name: String,
    pub nodes: Vec<String>,
    pub entry: usize,
    pub exit: usize,
    pub edges: Vec<(usize, EdgeLabel, usize)>,
}

/// Procedures with a finite abstract domain and transfer function.
#[derive(Clone, Debug)]
pub struct FlowGraph {
    pub procedures: Vec<Procedure>,
    pub domain: Vec<String>,
    /// `(value, label) -> value`, where a label is a statement or a procedure name.
    pub transfer: BTreeMap<(String, String), String>,
    pub initial: String,
    pub main: String,
}

fn check_well_formed(p: &Procedure) -> Result<(), ModelError> {
    let n = p.nodes.len();
    let bad = |what: &str, i: usize| {
        ModelError::Invalid(format!("procedure `{}`: node `{}` is not {what}", p.name, p.nodes[i]))
    };
    for (fwd, start, what) in [(true, p.entry, "reachable from the entry"), (false, p.exit, "co-reachable from the exit")]
    {
        let mut seen = vec![false; n];
        seen[start] = true;
        let mut q = VecDeque::from([start]);
        while let Some(u) = q.pop_front() {
            for (a, _, b) in &p.edges {
                let (from, to) = if fwd { (*a, *b) } else { (*b, *a) };
                if from == u && !seen[to] {
                    seen[to] = true;
                    q.push_back(to);
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(bad(what, i));
        }
    }
    Ok(())
}

/// Translates flow graphs into an asynchronous program: nodes become variables,
/// edges become productions, and the transfer function becomes the regular grammar.
pub fn compile_flowgraph(fg: &FlowGraph) -> Result<AsyncProgram, ModelError> {
    let mut b = ProgramBuilder::new();
    for d in &fg.domain {
        b.state(d)?;
    }
    for p in &fg.procedures {
        b.handler(&p.name)?;
    }
    let mut stmts = BTreeSet::new();
    for p in &fg.procedures {
        check_well_formed(p)?;
        for (_, l, _) in &p.edges {
            match l {
                EdgeLabel::Stmt(s) => {
                    stmts.insert(s.clone());
                }
                EdgeLabel::Sync(q) | EdgeLabel::Async(q) => {
                    if b.find_handler(q).is_none() {
                        return Err(ModelError::Invalid(format!("call to unknown procedure `{q}`")));
                    }
                }
            }
        }
    }
    for s in &stmts {
        b.internal(s)?;
    }
    let node_var = |b: &mut ProgramBuilder, p: &Procedure, i: usize| b.var(&format!("{}.{}", p.name, p.nodes[i]));
    for p in &fg.procedures {
        let h = b.find_handler(&p.name).unwrap();
        let entry = node_var(&mut b, p, p.entry);
        b.set_start(h, entry);
        let exit = node_var(&mut b, p, p.exit);
        b.rule(exit, vec![]);
        for (x, l, y) in &p.edges {
            let (xv, yv) = (node_var(&mut b, p, *x), node_var(&mut b, p, *y));
            let first = match l {
                EdgeLabel::Stmt(s) => Sym::Term(Letter::Internal(b.find_internal(s).unwrap())),
                EdgeLabel::Async(q) => Sym::Term(Letter::Post(b.find_handler(q).unwrap())),
                EdgeLabel::Sync(q) => {
                    let callee = fg.procedures.iter().find(|c| &c.name == q).unwrap();
                    Sym::Var(node_var(&mut b, callee, callee.entry))
                }
            };
            b.rule(xv, vec![first, Sym::Var(yv)]);
        }
    }

    // Labels that go through the transfer function: statements and async posts.
    let mut labels: Vec<(String, Letter)> = Vec::new();
    for s in &stmts {
        labels.push((s.clone(), Letter::Internal(b.find_internal(s).unwrap())));
    }
    for p in &fg.procedures {
        if fg.procedures.iter().any(|q| q.edges.iter().any(|(_, l, _)| l == &EdgeLabel::Async(p.name.clone()))) {
            labels.push((p.name.clone(), Letter::Post(b.find_handler(&p.name).unwrap())));
        }
    }
    let init = b.find_state(&fg.initial).ok_or_else(|| ModelError::Invalid(format!("unknown value `{}`", fg.initial)))?;
    b.init_state(init);
    let main = b.find_handler(&fg.main).ok_or_else(|| ModelError::Invalid(format!("unknown procedure `{}`", fg.main)))?;
    b.buffer(main, 1);

    let mut seen = BTreeSet::from([fg.initial.clone()]);
    let mut queue = VecDeque::from([fg.initial.clone()]);
    while let Some(d) = queue.pop_front() {
        for (l, letter) in &labels {
            let Some(e) = fg.transfer.get(&(d.clone(), l.clone())) else {
                return Err(ModelError::Invalid(format!("transfer function undefined on ({d}, {l})")));
            };
            let (from, to) = (
                b.find_state(&d).unwrap(),
                b.find_state(e).ok_or_else(|| ModelError::Invalid(format!("unknown value `{e}`")))?,
            );
            b.flow(from, *letter, to);
            if seen.insert(e.clone()) {
                queue.push_back(e.clone());
            }
        }
    }
    b.build()
}
