//! Deciding validity and satisfiability: a labeled tableau and a bounded
//! countermodel search, run together by [`classify`] with a mandatory
//! agreement check.

pub mod search;
pub mod tableau;

use std::collections::{BTreeSet, HashMap};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::checker::eval;
use crate::formula::{AgentId, Formula};
use crate::parser::render;
use crate::structure::VagueStructure;

pub use search::{find_countermodel, find_model, SearchBounds, SearchOptions, SearchOutcome, SearchStats, Witness};
pub use tableau::{tableau_sat, tableau_valid, OpenHint, SatOutcome, TableauResult, TableauStats};

pub const DEFAULT_TABLEAU_BUDGET: u64 = 200_000;
pub const DEFAULT_SEARCH_BUDGET: u64 = 200_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecisionError {
    #[error("formula mentions agent {agent}, but only {n} agents are configured")]
    AgentOutOfRange { agent: u32, n: usize },
    #[error("budget must be positive")]
    ZeroBudget,
    #[error("bad search bounds: {0}")]
    BadBounds(String),
    #[error("engines disagree on `{formula}`: tableau closed but search found {witness}")]
    Contradiction { formula: String, witness: String },
    #[error("tableau countermodel for `{formula}` fails re-checking: {structure}")]
    HintRejected { formula: String, structure: String },
}

pub(crate) fn check_agents(f: &Formula, n: usize) -> Result<(), DecisionError> {
    let max = f.max_agent();
    if n == 0 || max as usize > n {
        return Err(DecisionError::AgentOutOfRange { agent: max, n });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Interned desugared formulas, children before parents.

pub(crate) type Fid = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum Node {
    True,
    False,
    Prop(u32),
    Not(Fid),
    And(Fid, Fid),
    Report(u32, Fid),
    Def(u32, Fid),
}

pub(crate) struct Arena {
    pub nodes: Vec<Node>,
    index: HashMap<Node, Fid>,
    pub props: Vec<String>,
    pub objective: Vec<bool>,
    objective_names: BTreeSet<String>,
}

impl Arena {
    pub fn new(objective: &BTreeSet<String>) -> Arena {
        Arena {
            nodes: Vec::new(),
            index: HashMap::new(),
            props: Vec::new(),
            objective: Vec::new(),
            objective_names: objective.clone(),
        }
    }

    fn add(&mut self, node: Node) -> Fid {
        if let Some(&id) = self.index.get(&node) {
            return id;
        }
        let id = self.nodes.len() as Fid;
        self.nodes.push(node);
        self.index.insert(node, id);
        id
    }

    pub fn lookup(&self, node: &Node) -> Option<Fid> {
        self.index.get(node).copied()
    }

    /// Interns a desugared formula.
    pub fn intern(&mut self, f: &Formula) -> Fid {
        let node = match f {
            Formula::True => Node::True,
            Formula::False => Node::False,
            Formula::Prop(p) => {
                let pid = match self.props.iter().position(|q| q == p) {
                    Some(i) => i,
                    None => {
                        self.props.push(p.clone());
                        self.objective.push(self.objective_names.contains(p));
                        self.props.len() - 1
                    }
                };
                Node::Prop(pid as u32)
            }
            Formula::Not(a) => Node::Not(self.intern(a)),
            Formula::And(a, b) => {
                let a = self.intern(a);
                Node::And(a, self.intern(b))
            }
            Formula::Report(j, a) => Node::Report(j.slot() as u32, self.intern(a)),
            Formula::Def(j, a) => Node::Def(j.slot() as u32, self.intern(a)),
            Formula::Or(..) | Formula::Implies(..) => unreachable!("arena input is desugared"),
        };
        self.add(node)
    }
}

// ---------------------------------------------------------------------------
// Classification

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Validity,
    Satisfiability,
}

#[derive(Debug, Clone)]
pub struct ClassifyOptions {
    pub bounds: SearchBounds,
    pub tableau_budget: u64,
    pub search_budget: u64,
    pub objective_props: BTreeSet<String>,
}

impl ClassifyOptions {
    pub fn new(agents: usize) -> Self {
        ClassifyOptions {
            bounds: SearchBounds::default_for(agents),
            tableau_budget: DEFAULT_TABLEAU_BUDGET,
            search_budget: DEFAULT_SEARCH_BUDGET,
            objective_props: BTreeSet::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictKind {
    Valid,
    Unsatisfiable,
    Satisfiable,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WitnessSource {
    Search,
    Tableau,
}

#[derive(Debug, Clone)]
pub struct VerdictWitness {
    pub structure: VagueStructure,
    pub world: usize,
    pub agent: AgentId,
    pub source: WitnessSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ClassifyStats {
    pub nodes: u64,
    pub structures: u64,
    pub search_units: u64,
    pub tableau_complete: bool,
    pub search_complete: bool,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone)]
pub struct Verdict {
    pub mode: Mode,
    pub kind: VerdictKind,
    /// The formula the witness satisfies: the input, or its negation in
    /// validity mode.
    pub target: Formula,
    pub witness: Option<VerdictWitness>,
    pub stats: ClassifyStats,
}

impl Verdict {
    pub fn to_json(&self, timing: bool) -> Value {
        let mut stats = json!({
            "nodes": self.stats.nodes,
            "structures": self.stats.structures,
            "searchUnits": self.stats.search_units,
            "tableauComplete": self.stats.tableau_complete,
            "searchComplete": self.stats.search_complete,
        });
        if timing {
            stats["elapsed_ms"] = json!(self.stats.elapsed_ms);
        }
        let mut out = json!({
            "verdict": self.kind,
            "mode": self.mode,
            "stats": stats,
        });
        if let Some(w) = &self.witness {
            let mut obj = serde_json::to_value(w.structure.to_json()).expect("structure serializes");
            obj["world"] = json!(w.world);
            obj["agent"] = json!(w.agent);
            obj["source"] = json!(w.source);
            obj["satisfies"] = json!(render(&self.target));
            out["witness"] = obj;
        }
        out
    }
}

fn confirm(m: &VagueStructure, world: usize, agent: AgentId, f: &Formula) -> bool {
    m.is_valid() && eval(m, world, agent, f).unwrap_or(false)
}

/// Runs both engines on `f` with `n` agents. In validity mode the search
/// looks for a model of `~f`; in satisfiability mode for a model of `f`.
pub fn classify(f: &Formula, n: usize, mode: Mode, opts: &ClassifyOptions) -> Result<Verdict, DecisionError> {
    check_agents(f, n)?;
    if opts.bounds.agents != n {
        return Err(DecisionError::BadBounds(format!(
            "bounds are for {} agents, formula is classified with {n}",
            opts.bounds.agents
        )));
    }
    let start = Instant::now();
    let target = match mode {
        Mode::Validity => Formula::not(f.clone()),
        Mode::Satisfiability => f.clone(),
    };
    let tab = tableau_sat(&target, n, &opts.objective_props, opts.tableau_budget)?;
    let search_opts = SearchOptions {
        objective_props: opts.objective_props.clone(),
        full_plausibility: false,
        budget: opts.search_budget,
    };
    let (found, sstats) = find_model(&target, &opts.bounds, &search_opts)?;

    let (tab_stats, closed, hint) = match tab {
        SatOutcome::Closed(s) => (s, true, None),
        SatOutcome::Open(h, s) => (s, false, Some(h)),
        SatOutcome::Unknown(s) => (s, false, None),
    };
    let mut stats = ClassifyStats {
        nodes: tab_stats.nodes,
        structures: sstats.frames,
        search_units: sstats.units,
        tableau_complete: closed || hint.is_some(),
        search_complete: !matches!(found, SearchOutcome::BudgetExhausted),
        elapsed_ms: 0,
    };

    let witness = match found {
        SearchOutcome::Found(w) => {
            if closed {
                return Err(DecisionError::Contradiction {
                    formula: render(f),
                    witness: serde_json::to_string(&w.structure.to_json()).expect("structure serializes"),
                });
            }
            Some(VerdictWitness { structure: w.structure, world: w.world, agent: w.agent, source: WitnessSource::Search })
        }
        _ => match hint {
            Some(h) => {
                if !confirm(&h.structure, h.world, h.agent, &target) {
                    return Err(DecisionError::HintRejected {
                        formula: render(f),
                        structure: serde_json::to_string(&h.structure.to_json()).expect("structure serializes"),
                    });
                }
                Some(VerdictWitness { structure: h.structure, world: h.world, agent: h.agent, source: WitnessSource::Tableau })
            }
            None => None,
        },
    };
    let kind = match (&witness, closed, mode) {
        (Some(_), _, _) => VerdictKind::Satisfiable,
        (None, true, Mode::Validity) => VerdictKind::Valid,
        (None, true, Mode::Satisfiability) => VerdictKind::Unsatisfiable,
        (None, false, _) => VerdictKind::Unknown,
    };
    stats.elapsed_ms = start.elapsed().as_millis() as u64;
    Ok(Verdict { mode, kind, target, witness, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    fn run(text: &str, n: usize, mode: Mode) -> Verdict {
        classify(&parse(text).unwrap(), n, mode, &ClassifyOptions::new(n)).unwrap()
    }

    #[test]
    fn classify_examples() {
        assert_eq!(run("p | ~p", 1, Mode::Validity).kind, VerdictKind::Valid);
        assert_eq!(run("p & ~p", 1, Mode::Satisfiability).kind, VerdictKind::Unsatisfiable);
        assert_eq!(run("D1 p -> p", 1, Mode::Validity).kind, VerdictKind::Valid);
        let v = run("D1 p -> p", 2, Mode::Validity);
        assert_eq!(v.kind, VerdictKind::Satisfiable);
        let w = v.witness.unwrap();
        assert_eq!(w.structure.world_count(), 1);
        assert_eq!((w.world, w.agent.get()), (0, 2));
    }

    #[test]
    fn conflicting_reports_need_implausible_worlds() {
        let f = parse("R1 p & R2 ~p").unwrap();
        let mut opts = ClassifyOptions::new(2);
        opts.objective_props.insert("p".into());
        let v = classify(&f, 2, Mode::Satisfiability, &opts).unwrap();
        assert_eq!(v.kind, VerdictKind::Satisfiable);
        let m = &v.witness.unwrap().structure;
        assert_eq!(m.world_count(), 2);
        assert!(AgentId::all(2).any(|i| m.plausible_set(i).len() < m.world_count()));
    }

    #[test]
    fn agent_bound_is_checked() {
        let err = classify(&parse("R3 p").unwrap(), 2, Mode::Validity, &ClassifyOptions::new(2)).unwrap_err();
        assert_eq!(err, DecisionError::AgentOutOfRange { agent: 3, n: 2 });
    }

    #[test]
    fn verdict_json_shape() {
        let v = run("D1 p -> p", 2, Mode::Validity);
        let j = v.to_json(false);
        assert_eq!(j["verdict"], "satisfiable");
        assert_eq!(j["witness"]["world"], 0);
        assert_eq!(j["witness"]["agent"], 2);
        assert!(j["stats"].get("elapsed_ms").is_none());
        assert!(v.to_json(true)["stats"].get("elapsed_ms").is_some());
    }
}
