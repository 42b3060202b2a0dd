//! Finite vagueness structures: worlds factored into an objective state
//! and one subjective state per agent, per-agent plausibility sets and
//! per-agent valuations.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::AgentId;

/// A world `(o, s_1, ..., s_n)`; identity is the whole coordinate tuple.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct World {
    pub o: usize,
    pub s: Vec<usize>,
}

impl World {
    pub fn new(o: usize, s: Vec<usize>) -> Self {
        World { o, s }
    }

    pub fn subjective(&self, agent: AgentId) -> usize {
        self.s[agent.slot()]
    }
}

impl fmt::Display for World {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.o)?;
        for s in &self.s {
            write!(f, ",{s}")?;
        }
        write!(f, ")")
    }
}

/// Errors that prevent a structure from being built at all. Semantic
/// constraint failures are reported by [`VagueStructure::validate`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("agent count must be at least 1")]
    NoAgents,
    #[error("expected {expected} per-agent entries in `{field}`, found {found}")]
    AgentArity {
        field: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("world {world} has {found} coordinates, expected {expected}")]
    WorldArity {
        world: usize,
        expected: usize,
        found: usize,
    },
    #[error("world {world}: {sort} index {index} out of range")]
    StateOutOfRange {
        world: usize,
        sort: String,
        index: usize,
    },
    #[error("world {second} duplicates world {first}")]
    DuplicateWorld { first: usize, second: usize },
    #[error("`{field}` refers to world index {index}, but there are {count} worlds")]
    WorldOutOfRange {
        field: String,
        index: usize,
        count: usize,
    },
    #[error("objective proposition `{0}` has no valuation")]
    UndeclaredObjective(String),
    #[error("unknown world {0}")]
    UnknownWorld(usize),
    #[error("agent {agent} out of range for {n} agents")]
    UnknownAgent { agent: u32, n: usize },
}

/// Per-agent extension of one primitive proposition: `ext[agent slot][world]`.
pub type Extension = Vec<Vec<bool>>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VagueStructure {
    n: usize,
    objective_labels: Vec<String>,
    subjective_labels: Vec<Vec<String>>,
    worlds: Vec<World>,
    plausible: Vec<Vec<bool>>,
    valuation: BTreeMap<String, Extension>,
    objective_props: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    PlausibilityNonempty,
    ValuationLocality,
    ObjectiveAgreement,
    ObjectiveLocality,
    ReportSeriality,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ViolationKind::PlausibilityNonempty => "plausibility-nonempty",
            ViolationKind::ValuationLocality => "valuation-locality",
            ViolationKind::ObjectiveAgreement => "objective-agreement",
            ViolationKind::ObjectiveLocality => "objective-locality",
            ViolationKind::ReportSeriality => "report-seriality",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agent: Option<u32>,
    pub worlds: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proposition: Option<String>,
    pub message: String,
}

impl VagueStructure {
    /// Checks shapes and index ranges only; see [`validate`](Self::validate)
    /// for the semantic constraints.
    pub fn new(
        n: usize,
        objective_labels: Vec<String>,
        subjective_labels: Vec<Vec<String>>,
        worlds: Vec<World>,
        plausible: Vec<Vec<bool>>,
        valuation: BTreeMap<String, Extension>,
        objective_props: BTreeSet<String>,
    ) -> Result<Self, StructureError> {
        if n == 0 {
            return Err(StructureError::NoAgents);
        }
        let arity = |field, found| {
            if found != n {
                Err(StructureError::AgentArity { field, expected: n, found })
            } else {
                Ok(())
            }
        };
        arity("subjective", subjective_labels.len())?;
        arity("plausible", plausible.len())?;
        let mut seen: HashMap<&World, usize> = HashMap::new();
        for (idx, w) in worlds.iter().enumerate() {
            if w.s.len() != n {
                return Err(StructureError::WorldArity { world: idx, expected: n, found: w.s.len() });
            }
            if w.o >= objective_labels.len() {
                return Err(StructureError::StateOutOfRange { world: idx, sort: "objective".into(), index: w.o });
            }
            for (slot, &s) in w.s.iter().enumerate() {
                if s >= subjective_labels[slot].len() {
                    return Err(StructureError::StateOutOfRange {
                        world: idx,
                        sort: format!("subjective[{}]", slot + 1),
                        index: s,
                    });
                }
            }
            if let Some(&first) = seen.get(w) {
                return Err(StructureError::DuplicateWorld { first, second: idx });
            }
            seen.insert(w, idx);
        }
        let count = worlds.len();
        for (slot, row) in plausible.iter().enumerate() {
            if row.len() != count {
                return Err(StructureError::WorldOutOfRange {
                    field: format!("plausible[{}]", slot + 1),
                    index: row.len(),
                    count,
                });
            }
        }
        for (p, ext) in &valuation {
            arity("valuation", ext.len())?;
            for row in ext {
                if row.len() != count {
                    return Err(StructureError::WorldOutOfRange {
                        field: format!("valuation.{p}"),
                        index: row.len(),
                        count,
                    });
                }
            }
        }
        if let Some(p) = objective_props.iter().find(|p| !valuation.contains_key(*p)) {
            return Err(StructureError::UndeclaredObjective(p.clone()));
        }
        Ok(VagueStructure {
            n,
            objective_labels,
            subjective_labels,
            worlds,
            plausible,
            valuation,
            objective_props,
        })
    }

    pub fn agents(&self) -> usize {
        self.n
    }

    pub fn objective_labels(&self) -> &[String] {
        &self.objective_labels
    }

    pub fn subjective_labels(&self) -> &[Vec<String>] {
        &self.subjective_labels
    }

    pub fn worlds(&self) -> &[World] {
        &self.worlds
    }

    pub fn world_count(&self) -> usize {
        self.worlds.len()
    }

    pub fn world(&self, idx: usize) -> Result<&World, StructureError> {
        self.worlds.get(idx).ok_or(StructureError::UnknownWorld(idx))
    }

    pub fn world_index(&self, w: &World) -> Option<usize> {
        self.worlds.iter().position(|x| x == w)
    }

    pub fn objective_props(&self) -> &BTreeSet<String> {
        &self.objective_props
    }

    pub fn valuation(&self) -> &BTreeMap<String, Extension> {
        &self.valuation
    }

    pub fn has_prop(&self, p: &str) -> bool {
        self.valuation.contains_key(p)
    }

    /// `w ∈ π_i(p)`; `None` for an undeclared proposition.
    pub fn holds(&self, p: &str, world: usize, agent: AgentId) -> Option<bool> {
        self.valuation.get(p).map(|ext| ext[agent.slot()][world])
    }

    pub fn is_plausible(&self, agent: AgentId, world: usize) -> bool {
        self.plausible[agent.slot()][world]
    }

    pub fn plausible_set(&self, agent: AgentId) -> Vec<usize> {
        (0..self.worlds.len()).filter(|&w| self.plausible[agent.slot()][w]).collect()
    }

    fn check_agent(&self, agent: AgentId) -> Result<(), StructureError> {
        if agent.slot() < self.n {
            Ok(())
        } else {
            Err(StructureError::UnknownAgent { agent: agent.get(), n: self.n })
        }
    }

    /// Same objective state.
    pub fn sim_o(&self, a: usize, b: usize) -> Result<bool, StructureError> {
        Ok(self.world(a)?.o == self.world(b)?.o)
    }

    /// Same subjective state for `agent`.
    pub fn sim_agent(&self, agent: AgentId, a: usize, b: usize) -> Result<bool, StructureError> {
        self.check_agent(agent)?;
        Ok(self.world(a)?.subjective(agent) == self.world(b)?.subjective(agent))
    }

    /// `{w' ∈ P_j : w ∼_j w'}`, in world order.
    pub fn report_neighbors(&self, agent: AgentId, w: usize) -> Result<Vec<usize>, StructureError> {
        self.check_agent(agent)?;
        let s = self.world(w)?.subjective(agent);
        Ok((0..self.worlds.len())
            .filter(|&v| self.plausible[agent.slot()][v] && self.worlds[v].subjective(agent) == s)
            .collect())
    }

    /// `{w' : w ∼_o w'}`, in world order.
    pub fn def_neighbors(&self, w: usize) -> Result<Vec<usize>, StructureError> {
        let o = self.world(w)?.o;
        Ok((0..self.worlds.len()).filter(|&v| self.worlds[v].o == o).collect())
    }

    /// Empty iff every semantic constraint holds.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for agent in AgentId::all(self.n) {
            if self.plausible_set(agent).is_empty() {
                out.push(Violation {
                    kind: ViolationKind::PlausibilityNonempty,
                    agent: Some(agent.get()),
                    worlds: vec![],
                    proposition: None,
                    message: format!("P_{agent} is empty"),
                });
            }
        }
        for (p, ext) in &self.valuation {
            for agent in AgentId::all(self.n) {
                let row = &ext[agent.slot()];
                let mut classes: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
                for (idx, w) in self.worlds.iter().enumerate() {
                    classes.entry((w.o, w.subjective(agent))).or_default().push(idx);
                }
                for members in classes.values() {
                    let (inside, outside): (Vec<usize>, Vec<usize>) =
                        members.iter().partition(|&&w| row[w]);
                    if !inside.is_empty() && !outside.is_empty() {
                        out.push(Violation {
                            kind: ViolationKind::ValuationLocality,
                            agent: Some(agent.get()),
                            worlds: vec![inside[0], outside[0]],
                            proposition: Some(p.clone()),
                            message: format!(
                                "worlds {} and {} agree on the objective state and agent {agent}'s \
                                 subjective state but disagree on {p} for agent {agent}",
                                inside[0], outside[0]
                            ),
                        });
                    }
                }
            }
            if self.objective_props.contains(p) {
                out.extend(self.objective_violations(p, ext));
            }
        }
        for agent in AgentId::all(self.n) {
            let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for (idx, w) in self.worlds.iter().enumerate() {
                classes.entry(w.subjective(agent)).or_default().push(idx);
            }
            for (s, members) in classes {
                if !members.iter().any(|&w| self.plausible[agent.slot()][w]) {
                    out.push(Violation {
                        kind: ViolationKind::ReportSeriality,
                        agent: Some(agent.get()),
                        worlds: members,
                        proposition: None,
                        message: format!(
                            "no world with agent {agent}'s subjective state {} is in P_{agent}",
                            self.subjective_labels[agent.slot()][s]
                        ),
                    });
                }
            }
        }
        out
    }

    fn objective_violations(&self, p: &str, ext: &Extension) -> Vec<Violation> {
        let mut out = Vec::new();
        for agent in AgentId::all(self.n).skip(1) {
            if let Some(w) = (0..self.worlds.len()).find(|&w| ext[agent.slot()][w] != ext[0][w]) {
                out.push(Violation {
                    kind: ViolationKind::ObjectiveAgreement,
                    agent: Some(agent.get()),
                    worlds: vec![w],
                    proposition: Some(p.to_string()),
                    message: format!("objective {p} differs between agents 1 and {agent} at world {w}"),
                });
            }
        }
        for agent in AgentId::all(self.n) {
            let row = &ext[agent.slot()];
            let mut first: HashMap<usize, usize> = HashMap::new();
            for (idx, w) in self.worlds.iter().enumerate() {
                match first.get(&w.o) {
                    Some(&rep) if row[rep] != row[idx] => {
                        out.push(Violation {
                            kind: ViolationKind::ObjectiveLocality,
                            agent: Some(agent.get()),
                            worlds: vec![rep, idx],
                            proposition: Some(p.to_string()),
                            message: format!(
                                "objective {p} differs between worlds {rep} and {idx}, \
                                 which share the objective state"
                            ),
                        });
                        break;
                    }
                    Some(_) => {}
                    None => {
                        first.insert(w.o, idx);
                    }
                }
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }
}

/// Builds a per-agent extension from a predicate on `(o, s_agent)`, which
/// makes the result local by construction.
pub fn extension_from_classes(
    worlds: &[World],
    n: usize,
    mut holds: impl FnMut(AgentId, usize, usize) -> bool,
) -> Extension {
    AgentId::all(n)
        .map(|agent| worlds.iter().map(|w| holds(agent, w.o, w.subjective(agent))).collect())
        .collect()
}

// ---------------------------------------------------------------------------
// JSON interchange

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureJson {
    pub agents: usize,
    pub objective: Vec<String>,
    pub subjective: Vec<Vec<String>>,
    pub worlds: Vec<Vec<usize>>,
    pub plausible: Vec<Vec<usize>>,
    pub valuation: BTreeMap<String, Vec<Vec<usize>>>,
    #[serde(default)]
    pub objective_props: Vec<String>,
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("malformed structure JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Structure(#[from] StructureError),
}

impl TryFrom<StructureJson> for VagueStructure {
    type Error = StructureError;

    fn try_from(j: StructureJson) -> Result<Self, StructureError> {
        let n = j.agents;
        if n == 0 {
            return Err(StructureError::NoAgents);
        }
        let mut worlds = Vec::with_capacity(j.worlds.len());
        for (idx, coords) in j.worlds.iter().enumerate() {
            if coords.len() != n + 1 {
                return Err(StructureError::WorldArity { world: idx, expected: n, found: coords.len().saturating_sub(1) });
            }
            worlds.push(World::new(coords[0], coords[1..].to_vec()));
        }
        let count = worlds.len();
        let to_mask = |field: String, list: &[usize]| -> Result<Vec<bool>, StructureError> {
            let mut mask = vec![false; count];
            for &w in list {
                if w >= count {
                    return Err(StructureError::WorldOutOfRange { field: field.clone(), index: w, count });
                }
                mask[w] = true;
            }
            Ok(mask)
        };
        if j.plausible.len() != n {
            return Err(StructureError::AgentArity { field: "plausible", expected: n, found: j.plausible.len() });
        }
        let plausible = j
            .plausible
            .iter()
            .enumerate()
            .map(|(slot, list)| to_mask(format!("plausible[{}]", slot + 1), list))
            .collect::<Result<Vec<_>, _>>()?;
        let mut valuation = BTreeMap::new();
        for (p, per_agent) in &j.valuation {
            if per_agent.len() != n {
                return Err(StructureError::AgentArity { field: "valuation", expected: n, found: per_agent.len() });
            }
            let ext = per_agent
                .iter()
                .enumerate()
                .map(|(slot, list)| to_mask(format!("valuation.{p}[{}]", slot + 1), list))
                .collect::<Result<Vec<_>, _>>()?;
            valuation.insert(p.clone(), ext);
        }
        VagueStructure::new(
            n,
            j.objective,
            j.subjective,
            worlds,
            plausible,
            valuation,
            j.objective_props.into_iter().collect(),
        )
    }
}

impl From<&VagueStructure> for StructureJson {
    fn from(m: &VagueStructure) -> Self {
        let list = |mask: &[bool]| (0..mask.len()).filter(|&w| mask[w]).collect::<Vec<_>>();
        StructureJson {
            agents: m.n,
            objective: m.objective_labels.clone(),
            subjective: m.subjective_labels.clone(),
            worlds: m
                .worlds
                .iter()
                .map(|w| std::iter::once(w.o).chain(w.s.iter().copied()).collect())
                .collect(),
            plausible: m.plausible.iter().map(|row| list(row)).collect(),
            valuation: m
                .valuation
                .iter()
                .map(|(p, ext)| (p.clone(), ext.iter().map(|row| list(row)).collect()))
                .collect(),
            objective_props: m.objective_props.iter().cloned().collect(),
        }
    }
}

impl VagueStructure {
    pub fn from_json_str(text: &str) -> Result<Self, LoadError> {
        let j: StructureJson = serde_json::from_str(text)?;
        Ok(VagueStructure::try_from(j)?)
    }

    pub fn to_json(&self) -> StructureJson {
        StructureJson::from(self)
    }
}

// ---------------------------------------------------------------------------
// Random generation

#[derive(Debug, Clone)]
pub struct RandomParams {
    pub agents: usize,
    pub max_objective: usize,
    pub max_subjective: usize,
    pub props: Vec<String>,
    pub objective_props: Vec<String>,
    /// Probability that a cell of `O × S_1 × ... × S_n` becomes a world.
    pub world_density: f64,
    /// Probability that a world is plausible for an agent (beyond the one
    /// forced per subjective class).
    pub plausible_density: f64,
    /// Probability that a proposition holds on an `(o, s_i)` class.
    pub truth_density: f64,
    /// Cap on the number of cells considered; 0 means no cap.
    pub max_worlds: usize,
}

impl RandomParams {
    pub fn small(agents: usize, props: &[&str]) -> Self {
        RandomParams {
            agents,
            max_objective: 3,
            max_subjective: 3,
            props: props.iter().map(|s| s.to_string()).collect(),
            objective_props: vec![],
            world_density: 0.5,
            plausible_density: 0.5,
            truth_density: 0.5,
            max_worlds: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenerateError {
    #[error("bounds too small: agents, objective and subjective state counts must all be at least 1")]
    BoundsTooSmall,
    #[error("objective proposition `{0}` is not among the generated propositions")]
    UnknownObjective(String),
}

/// A valid structure determined entirely by `params` and `seed`.
pub fn random_structure(params: &RandomParams, seed: u64) -> Result<VagueStructure, GenerateError> {
    let n = params.agents;
    if n == 0 || params.max_objective == 0 || params.max_subjective == 0 {
        return Err(GenerateError::BoundsTooSmall);
    }
    if let Some(p) = params.objective_props.iter().find(|p| !params.props.contains(p)) {
        return Err(GenerateError::UnknownObjective(p.clone()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let o_count = rng.gen_range(1..=params.max_objective);
    let s_counts: Vec<usize> = (0..n).map(|_| rng.gen_range(1..=params.max_subjective)).collect();

    let mut cells = vec![World::new(0, vec![0; n])];
    for slot in 0..=n {
        let radix = if slot == 0 { o_count } else { s_counts[slot - 1] };
        cells = cells
            .into_iter()
            .flat_map(|w| {
                (0..radix).map(move |v| {
                    let mut w = w.clone();
                    if slot == 0 {
                        w.o = v;
                    } else {
                        w.s[slot - 1] = v;
                    }
                    w
                })
            })
            .collect();
    }
    let mut worlds: Vec<World> = cells
        .iter()
        .filter(|_| rng.gen_bool(params.world_density))
        .cloned()
        .collect();
    if worlds.is_empty() {
        worlds.push(cells[rng.gen_range(0..cells.len())].clone());
    }
    if params.max_worlds > 0 && worlds.len() > params.max_worlds {
        while worlds.len() > params.max_worlds {
            let i = rng.gen_range(0..worlds.len());
            worlds.remove(i);
        }
    }

    let mut plausible = vec![vec![false; worlds.len()]; n];
    for agent in AgentId::all(n) {
        let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (idx, w) in worlds.iter().enumerate() {
            classes.entry(w.subjective(agent)).or_default().push(idx);
        }
        for members in classes.values() {
            let forced = members[rng.gen_range(0..members.len())];
            for &w in members {
                plausible[agent.slot()][w] = w == forced || rng.gen_bool(params.plausible_density);
            }
        }
    }

    let objective: HashSet<&String> = params.objective_props.iter().collect();
    let mut valuation = BTreeMap::new();
    for p in &params.props {
        let ext = if objective.contains(p) {
            let by_o: Vec<bool> = (0..o_count).map(|_| rng.gen_bool(params.truth_density)).collect();
            extension_from_classes(&worlds, n, |_, o, _| by_o[o])
        } else {
            let table: Vec<Vec<Vec<bool>>> = (0..n)
                .map(|slot| {
                    (0..o_count)
                        .map(|_| (0..s_counts[slot]).map(|_| rng.gen_bool(params.truth_density)).collect())
                        .collect()
                })
                .collect();
            extension_from_classes(&worlds, n, |agent, o, s| table[agent.slot()][o][s])
        };
        valuation.insert(p.clone(), ext);
    }

    let m = VagueStructure::new(
        n,
        (0..o_count).map(|o| format!("o{o}")).collect(),
        s_counts.iter().map(|&c| (0..c).map(|s| format!("s{s}")).collect()).collect(),
        worlds,
        plausible,
        valuation,
        params.objective_props.iter().cloned().collect(),
    )
    .expect("generated structure is well-formed");
    debug_assert!(m.is_valid());
    Ok(m)
}
