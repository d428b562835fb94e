//! Decision procedures and semi-decisions over compiled programs.

mod checks;
mod fair;
mod lasso;

use std::fmt;

use thiserror::Error;

use crate::model::{AsyncProgram, BudgetsHit, Configuration, Handler};

pub use checks::{check_boundedness, check_config_reachability, check_safety, check_termination, exact_graph};
pub use fair::{check_fair_starvation, check_fair_termination, fair_scc_lasso, quiet_states};
pub use lasso::{fair_lasso_check, find_lasso, replay_run, LassoWitness, Step};

/// Exploration bounds shared by all analyses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budgets {
    pub max_states: usize,
    pub max_depth: usize,
    /// Largest number of posts enumerated per dispatch.
    pub post_budget: u64,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets { max_states: 100_000, max_depth: 10_000, post_budget: 16 }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("{0} is undecidable for programs with cancel; refusing")]
    CancelRefused(&'static str),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("unknown handler `{0}`")]
    UnknownHandler(String),
    #[error("the lasso does not replay: {0}")]
    NotReplayable(String),
}

/// The question asked.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Query {
    Safety(String),
    Boundedness,
    Termination,
    FairTermination,
    Starvation(String),
    Reachability(String),
}

impl Query {
    pub fn name(&self) -> String {
        match self {
            Query::Safety(d) => format!("safety({d})"),
            Query::Boundedness => "boundedness".into(),
            Query::Termination => "termination".into(),
            Query::FairTermination => "fair-termination".into(),
            Query::Starvation(a) => format!("starvation({a})"),
            Query::Reachability(c) => format!("reachability({c})"),
        }
    }

    /// Verdict names for a YES and a NO answer.
    fn labels(&self) -> (&'static str, &'static str) {
        match self {
            Query::Safety(_) => ("UNSAFE", "SAFE"),
            Query::Boundedness => ("BOUNDED", "UNBOUNDED"),
            Query::Termination => ("NONTERMINATING", "TERMINATING"),
            Query::FairTermination => ("FAIR-NONTERMINATING", "FAIR-TERMINATING"),
            Query::Starvation(_) => ("STARVES", "NO-STARVATION"),
            Query::Reachability(_) => ("REACHED", "UNREACHED"),
        }
    }

    /// Whether a YES answer means the property holds.
    fn yes_holds(&self) -> bool {
        matches!(self, Query::Boundedness)
    }
}

/// Answer to the question as posed: is `d_f` reachable, is the buffer
/// bounded, is there an infinite run, a fair infinite run, a starving fair
/// run, is the configuration reachable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Answer {
    Yes,
    No,
    Unknown,
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Answer::Yes => "YES",
            Answer::No => "NO",
            Answer::Unknown => "UNKNOWN",
        })
    }
}

/// Evidence for a verdict.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    /// Dispatches from the initial configuration.
    Run(Vec<Step>),
    Lasso(LassoWitness),
}

#[derive(Clone, Debug)]
pub struct Verdict {
    pub query: Query,
    pub answer: Answer,
    pub witness: Option<Witness>,
    pub certificate: Option<String>,
    pub budgets_hit: BudgetsHit,
}

impl Verdict {
    pub(crate) fn new(query: Query, answer: Answer) -> Self {
        Verdict { query, answer, witness: None, certificate: None, budgets_hit: BudgetsHit::default() }
    }

    pub(crate) fn with_witness(mut self, w: Witness) -> Self {
        self.witness = Some(w);
        self
    }

    pub(crate) fn with_certificate(mut self, c: impl Into<String>) -> Self {
        self.certificate = Some(c.into());
        self
    }

    pub(crate) fn with_budgets(mut self, b: BudgetsHit) -> Self {
        self.budgets_hit = b;
        self
    }

    /// `UNSAFE`, `BOUNDED`, ... or `UNKNOWN`.
    pub fn label(&self) -> &'static str {
        let (yes, no) = self.query.labels();
        match self.answer {
            Answer::Yes => yes,
            Answer::No => no,
            Answer::Unknown => "UNKNOWN",
        }
    }

    /// `Some(true)` if the property holds, `Some(false)` if violated.
    pub fn holds(&self) -> Option<bool> {
        match self.answer {
            Answer::Yes => Some(self.query.yes_holds()),
            Answer::No => Some(!self.query.yes_holds()),
            Answer::Unknown => None,
        }
    }

    /// 0 holds, 1 violated, 2 unknown.
    pub fn exit_code(&self) -> i32 {
        match self.holds() {
            Some(true) => 0,
            Some(false) => 1,
            None => 2,
        }
    }

    /// Whether the witness, if any, replays in the simulator.
    pub fn audit(&self, p: &AsyncProgram) -> bool {
        match &self.witness {
            None => true,
            Some(Witness::Run(steps)) => replay_run(p, &p.initial(), steps).is_ok(),
            Some(Witness::Lasso(l)) => l.replay(p).is_ok(),
        }
    }

    /// Line-oriented `key: value` record with a fixed field order.
    pub fn record(&self, p: &AsyncProgram) -> String {
        let mut out = format!("query: {}\nanswer: {}\nverdict: {}\n", self.query.name(), self.answer, self.label());
        if let Some(w) = &self.witness {
            out.push_str(&format!("witness: {}\n", describe_witness(p, w)));
        }
        if let Some(c) = &self.certificate {
            out.push_str(&format!("certificate: {c}\n"));
        }
        out.push_str(&format!("budgets_hit: {}\n", self.budgets_hit.describe()));
        out
    }
}

pub(crate) fn describe_steps(p: &AsyncProgram, steps: &[Step]) -> String {
    let parts: Vec<String> = steps.iter().map(|(h, c)| format!("{} => {}", p.handler_name(*h), p.fmt_config(c))).collect();
    format!("[{}]", parts.join("; "))
}

pub fn describe_witness(p: &AsyncProgram, w: &Witness) -> String {
    match w {
        Witness::Run(steps) => format!("run {}", describe_steps(p, steps)),
        Witness::Lasso(l) => format!(
            "lasso from {} stem {} period {}",
            p.fmt_config(&l.start),
            describe_steps(p, &l.stem),
            describe_steps(p, &l.period)
        ),
    }
}

pub(crate) fn refuse_cancel(p: &AsyncProgram, what: &'static str) -> Result<(), AnalysisError> {
    if p.has_cancels() {
        Err(AnalysisError::CancelRefused(what))
    } else {
        Ok(())
    }
}

pub(crate) fn handler_named(p: &AsyncProgram, name: &str) -> Result<Handler, AnalysisError> {
    p.handler_by_name(name).ok_or_else(|| AnalysisError::UnknownHandler(name.to_string()))
}

pub(crate) fn final_config<'a>(start: &'a Configuration, steps: &'a [Step]) -> &'a Configuration {
    steps.last().map_or(start, |s| &s.1)
}
