//! Exact model checking of `(M, w, i) ⊨ φ`, model-level validity,
//! agent-independence and degrees of truth.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_rational::Ratio;
use serde::Serialize;
use thiserror::Error;

use crate::formula::{desugar, AgentId, Formula};
use crate::structure::{StructureError, VagueStructure};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("formula mentions agent {agent}, but the structure has {n} agents")]
    AgentOutOfRange { agent: u32, n: usize },
    #[error("unknown world {0}")]
    UnknownWorld(usize),
    #[error("unknown proposition `{0}`")]
    UnknownProposition(String),
    #[error("world {0} is outside the support objective state")]
    SupportMismatch(usize),
    #[error("distribution weights sum to {0}, expected 1")]
    NotNormalized(Ratio<i64>),
    #[error("negative weight at world {0}")]
    NegativeWeight(usize),
}

impl From<StructureError> for EvalError {
    fn from(e: StructureError) -> Self {
        match e {
            StructureError::UnknownWorld(w) => EvalError::UnknownWorld(w),
            StructureError::UnknownAgent { agent, n } => EvalError::AgentOutOfRange { agent, n },
            other => unreachable!("not produced by queries: {other}"),
        }
    }
}

/// A point of evaluation `(w, i)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct EvalPoint {
    pub world: usize,
    pub agent: AgentId,
}

/// Fraction of agents at which a formula holds; the denominator is always
/// the agent count, even when the fraction could be reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Degree {
    holding: usize,
    agents: usize,
}

impl Degree {
    pub fn new(holding: usize, agents: usize) -> Self {
        assert!(agents >= 1 && holding <= agents);
        Degree { holding, agents }
    }

    pub fn holding(&self) -> usize {
        self.holding
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn value(&self) -> Ratio<i64> {
        Ratio::new(self.holding as i64, self.agents as i64)
    }

    pub fn is_crisp(&self) -> bool {
        self.holding == 0 || self.holding == self.agents
    }
}

impl fmt::Display for Degree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.holding, self.agents)
    }
}

/// Checks agent indices and proposition names before evaluation.
pub fn check_formula(m: &VagueStructure, f: &Formula) -> Result<(), EvalError> {
    let max = f.max_agent();
    if max as usize > m.agents() {
        return Err(EvalError::AgentOutOfRange { agent: max, n: m.agents() });
    }
    if let Some(p) = f.props().into_iter().find(|p| !m.has_prop(p)) {
        return Err(EvalError::UnknownProposition(p));
    }
    Ok(())
}

/// Truth table of one formula over all points, indexed `world * n + slot`.
#[derive(Debug, Clone)]
pub struct Extension {
    n: usize,
    bits: Vec<bool>,
}

impl Extension {
    pub fn at(&self, world: usize, agent: AgentId) -> bool {
        self.bits[world * self.n + agent.slot()]
    }

    /// First point where the formula fails, in (world, agent) order.
    pub fn first_failure(&self) -> Option<EvalPoint> {
        self.bits.iter().position(|b| !b).map(|k| EvalPoint {
            world: k / self.n,
            agent: AgentId::from_slot(k % self.n),
        })
    }
}

/// Evaluates formulas over one structure, memoizing the extension of every
/// subformula seen. Intended to live for a single query.
pub struct Evaluator<'m> {
    m: &'m VagueStructure,
    cache: HashMap<Formula, Vec<bool>>,
    report_classes: Vec<Vec<Vec<usize>>>,
    def_classes: Vec<Vec<usize>>,
}

impl<'m> Evaluator<'m> {
    pub fn new(m: &'m VagueStructure) -> Self {
        let worlds = m.world_count();
        let report_classes = AgentId::all(m.agents())
            .map(|j| (0..worlds).map(|w| m.report_neighbors(j, w).expect("world in range")).collect())
            .collect();
        let def_classes = (0..worlds).map(|w| m.def_neighbors(w).expect("world in range")).collect();
        Evaluator { m, cache: HashMap::new(), report_classes, def_classes }
    }

    pub fn extension(&mut self, f: &Formula) -> Result<Extension, EvalError> {
        check_formula(self.m, f)?;
        let core = desugar(f);
        let bits = self.ext(&core);
        Ok(Extension { n: self.m.agents(), bits })
    }

    fn ext(&mut self, f: &Formula) -> Vec<bool> {
        if let Some(v) = self.cache.get(f) {
            return v.clone();
        }
        let n = self.m.agents();
        let worlds = self.m.world_count();
        let points = worlds * n;
        let bits: Vec<bool> = match f {
            Formula::True => vec![true; points],
            Formula::False => vec![false; points],
            Formula::Prop(p) => {
                let ext = &self.m.valuation()[p];
                (0..points).map(|k| ext[k % n][k / n]).collect()
            }
            Formula::Not(a) => self.ext(a).into_iter().map(|b| !b).collect(),
            Formula::And(a, b) => {
                let x = self.ext(a);
                let y = self.ext(b);
                x.into_iter().zip(y).map(|(a, b)| a && b).collect()
            }
            Formula::Report(j, a) => {
                let body = self.ext(a);
                let classes = &self.report_classes[j.slot()];
                let per_world: Vec<bool> = (0..worlds)
                    .map(|w| classes[w].iter().all(|&v| body[v * n + j.slot()]))
                    .collect();
                (0..points).map(|k| per_world[k / n]).collect()
            }
            Formula::Def(j, a) => {
                let body = self.ext(a);
                let per_world: Vec<bool> = (0..worlds)
                    .map(|w| self.def_classes[w].iter().all(|&v| body[v * n + j.slot()]))
                    .collect();
                (0..points).map(|k| per_world[k / n]).collect()
            }
            Formula::Or(..) | Formula::Implies(..) => unreachable!("evaluator input is desugared"),
        };
        self.cache.insert(f.clone(), bits.clone());
        bits
    }
}

fn check_point(m: &VagueStructure, world: usize, agent: AgentId) -> Result<(), EvalError> {
    if world >= m.world_count() {
        return Err(EvalError::UnknownWorld(world));
    }
    if agent.slot() >= m.agents() {
        return Err(EvalError::AgentOutOfRange { agent: agent.get(), n: m.agents() });
    }
    Ok(())
}

/// `(M, w, i) ⊨ φ`.
pub fn eval(m: &VagueStructure, world: usize, agent: AgentId, f: &Formula) -> Result<bool, EvalError> {
    check_point(m, world, agent)?;
    Ok(Evaluator::new(m).extension(f)?.at(world, agent))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ModelValidity {
    Valid,
    CounterWitness(EvalPoint),
}

impl ModelValidity {
    pub fn is_valid(&self) -> bool {
        matches!(self, ModelValidity::Valid)
    }
}

/// Truth at every point; otherwise the first failing point in
/// (world index, agent) order.
pub fn valid_in_model(m: &VagueStructure, f: &Formula) -> Result<ModelValidity, EvalError> {
    let ext = Evaluator::new(m).extension(f)?;
    Ok(match ext.first_failure() {
        None => ModelValidity::Valid,
        Some(p) => ModelValidity::CounterWitness(p),
    })
}

pub fn agent_independent_in_model(m: &VagueStructure, f: &Formula) -> Result<bool, EvalError> {
    let ext = Evaluator::new(m).extension(f)?;
    let n = m.agents();
    Ok((0..m.world_count()).all(|w| {
        let first = ext.at(w, AgentId::from_slot(0));
        AgentId::all(n).all(|i| ext.at(w, i) == first)
    }))
}

pub fn degree(m: &VagueStructure, world: usize, f: &Formula) -> Result<Degree, EvalError> {
    check_point(m, world, AgentId::from_slot(0))?;
    let ext = Evaluator::new(m).extension(f)?;
    let holding = AgentId::all(m.agents()).filter(|&i| ext.at(world, i)).count();
    Ok(Degree::new(holding, m.agents()))
}

/// Expected degree over the worlds sharing objective state `o`, under a
/// distribution supported exactly on those worlds.
pub fn expected_degree(
    m: &VagueStructure,
    o: usize,
    dist: &BTreeMap<usize, Ratio<i64>>,
    f: &Formula,
) -> Result<Ratio<i64>, EvalError> {
    for (&w, weight) in dist {
        let world = m.world(w)?;
        if world.o != o {
            return Err(EvalError::SupportMismatch(w));
        }
        if *weight < Ratio::from_integer(0) {
            return Err(EvalError::NegativeWeight(w));
        }
    }
    if let Some(w) = (0..m.world_count()).find(|&w| m.worlds()[w].o == o && !dist.contains_key(&w)) {
        return Err(EvalError::SupportMismatch(w));
    }
    let total: Ratio<i64> = dist.values().copied().sum();
    if total != Ratio::from_integer(1) {
        return Err(EvalError::NotNormalized(total));
    }
    let ext = Evaluator::new(m).extension(f)?;
    let n = m.agents() as i64;
    Ok(dist
        .iter()
        .map(|(&w, &weight)| {
            let holding = AgentId::all(m.agents()).filter(|&i| ext.at(w, i)).count() as i64;
            weight * Ratio::new(holding, n)
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;
    use crate::structure::World;
    use std::collections::BTreeSet;

    fn a(i: u32) -> AgentId {
        AgentId::new(i).unwrap()
    }

    /// n = 2, one world, π_1(p) = {w}, π_2(p) = ∅.
    fn split_world() -> VagueStructure {
        let mut val = BTreeMap::new();
        val.insert("p".to_string(), vec![vec![true], vec![false]]);
        val.insert("q".to_string(), vec![vec![false], vec![true]]);
        VagueStructure::new(
            2,
            vec!["o".into()],
            vec![vec!["a".into()], vec!["b".into()]],
            vec![World::new(0, vec![0, 0])],
            vec![vec![true], vec![true]],
            val,
            BTreeSet::new(),
        )
        .unwrap()
    }

    #[test]
    fn definitely_does_not_imply_truth_across_agents() {
        let m = split_world();
        assert!(eval(&m, 0, a(2), &parse("D1 p").unwrap()).unwrap());
        assert!(!eval(&m, 0, a(2), &parse("p").unwrap()).unwrap());
        assert!(!eval(&m, 0, a(2), &parse("D1 p -> p").unwrap()).unwrap());
        assert_eq!(
            valid_in_model(&m, &parse("D1 p -> p").unwrap()).unwrap(),
            ModelValidity::CounterWitness(EvalPoint { world: 0, agent: a(2) })
        );
    }

    #[test]
    fn literals() {
        let m = split_world();
        for i in AgentId::all(2) {
            assert!(eval(&m, 0, i, &Formula::True).unwrap());
            assert!(!eval(&m, 0, i, &Formula::False).unwrap());
        }
    }

    #[test]
    fn report_over_plausible_neighbours_only() {
        // w1, w2 share s_1; P_1 = {w2}; π_1(p) = {w1}.
        let mut val = BTreeMap::new();
        val.insert("p".to_string(), vec![vec![true, false]]);
        let m = VagueStructure::new(
            1,
            vec!["o1".into(), "o2".into()],
            vec![vec!["s".into()]],
            vec![World::new(0, vec![0]), World::new(1, vec![0])],
            vec![vec![false, true]],
            val,
            BTreeSet::new(),
        )
        .unwrap();
        assert!(!eval(&m, 0, a(1), &parse("R1 p").unwrap()).unwrap());
        assert!(eval(&m, 0, a(1), &parse("R1 ~p").unwrap()).unwrap());
    }

    #[test]
    fn errors_are_distinct() {
        let m = split_world();
        assert_eq!(
            eval(&m, 0, a(1), &parse("R3 p").unwrap()),
            Err(EvalError::AgentOutOfRange { agent: 3, n: 2 })
        );
        assert_eq!(
            eval(&m, 0, a(1), &parse("zz").unwrap()),
            Err(EvalError::UnknownProposition("zz".into()))
        );
        assert_eq!(eval(&m, 4, a(1), &parse("p").unwrap()), Err(EvalError::UnknownWorld(4)));
        assert!(eval(&m, 0, a(5), &parse("p").unwrap()).is_err());
    }

    #[test]
    fn valid_in_model_examples() {
        let m = split_world();
        assert!(valid_in_model(&m, &parse("p | ~p").unwrap()).unwrap().is_valid());
        // D6 with every body p.
        assert!(valid_in_model(&m, &parse("(D1 p -> p) | (D2 p -> p)").unwrap()).unwrap().is_valid());
    }

    #[test]
    fn agent_independence() {
        let m = split_world();
        assert!(agent_independent_in_model(&m, &parse("R1 p").unwrap()).unwrap());
        assert!(!agent_independent_in_model(&m, &parse("p").unwrap()).unwrap());
    }

    #[test]
    fn objective_props_are_agent_independent() {
        let mut val = BTreeMap::new();
        val.insert("p".to_string(), vec![vec![true, false], vec![true, false]]);
        let m = VagueStructure::new(
            2,
            vec!["o1".into(), "o2".into()],
            vec![vec!["a".into()], vec!["b".into()]],
            vec![World::new(0, vec![0, 0]), World::new(1, vec![0, 0])],
            vec![vec![true, true], vec![true, true]],
            val,
            ["p".to_string()].into_iter().collect(),
        )
        .unwrap();
        assert!(m.is_valid());
        assert!(agent_independent_in_model(&m, &parse("p").unwrap()).unwrap());
    }

    #[test]
    fn degree_examples() {
        let m = split_world();
        let p = parse("p").unwrap();
        let d = degree(&m, 0, &p).unwrap();
        assert_eq!(d.value(), Ratio::new(1, 2));
        assert_eq!(d.to_string(), "1/2");
        let not_p = degree(&m, 0, &parse("~p").unwrap()).unwrap();
        assert_eq!(not_p.value(), Ratio::from_integer(1) - d.value());
        // Conjunction degree is not a function of the conjunct degrees.
        assert_eq!(degree(&m, 0, &parse("q").unwrap()).unwrap().value(), Ratio::new(1, 2));
        assert_eq!(degree(&m, 0, &parse("p & q").unwrap()).unwrap().value(), Ratio::from_integer(0));
        assert_eq!(degree(&m, 0, &parse("p & p").unwrap()).unwrap().value(), Ratio::new(1, 2));
    }

    fn two_world_same_o() -> VagueStructure {
        // Same o; p holds for agent 1 only at world 1.
        let mut val = BTreeMap::new();
        val.insert("p".to_string(), vec![vec![false, true]]);
        VagueStructure::new(
            1,
            vec!["o".into()],
            vec![vec!["a".into(), "b".into()]],
            vec![World::new(0, vec![0]), World::new(0, vec![1])],
            vec![vec![true, true]],
            val,
            BTreeSet::new(),
        )
        .unwrap()
    }

    #[test]
    fn expected_degree_examples() {
        let m = two_world_same_o();
        let p = parse("p").unwrap();
        let point: BTreeMap<usize, Ratio<i64>> = [(0, Ratio::from_integer(1)), (1, Ratio::from_integer(0))].into();
        assert_eq!(expected_degree(&m, 0, &point, &p).unwrap(), degree(&m, 0, &p).unwrap().value());
        let uniform: BTreeMap<usize, Ratio<i64>> = [(0, Ratio::new(1, 2)), (1, Ratio::new(1, 2))].into();
        assert_eq!(expected_degree(&m, 0, &uniform, &p).unwrap(), Ratio::new(1, 2));
        assert_eq!(expected_degree(&m, 0, &uniform, &Formula::True).unwrap(), Ratio::from_integer(1));
    }

    #[test]
    fn expected_degree_rejects_bad_distributions() {
        let m = two_world_same_o();
        let p = parse("p").unwrap();
        let partial: BTreeMap<usize, Ratio<i64>> = [(0, Ratio::from_integer(1))].into();
        assert_eq!(expected_degree(&m, 0, &partial, &p), Err(EvalError::SupportMismatch(1)));
        let heavy: BTreeMap<usize, Ratio<i64>> = [(0, Ratio::from_integer(1)), (1, Ratio::from_integer(1))].into();
        assert!(matches!(expected_degree(&m, 0, &heavy, &p), Err(EvalError::NotNormalized(_))));
        let neg: BTreeMap<usize, Ratio<i64>> = [(0, Ratio::from_integer(2)), (1, Ratio::from_integer(-1))].into();
        assert_eq!(expected_degree(&m, 0, &neg, &p), Err(EvalError::NegativeWeight(1)));
    }
}
