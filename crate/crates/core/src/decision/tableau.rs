//! Labeled tableau for satisfiability at a point.
//!
//! A branch is a set of worlds, each with an objective class and one
//! subjective class per agent, plus signed formulas at points `(w, i)`.
//! Modal formulas are recorded per class (`D_j` per objective class, `R_j`
//! per `s_j` class) since their truth does not depend on the evaluating
//! agent. Every new world shares exactly one class with an existing world,
//! so an open saturated branch reads off directly as a structure.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use serde::Serialize;

use super::{Arena, DecisionError, Fid, Node};
use crate::formula::{desugar, AgentId, Formula};
use crate::structure::{VagueStructure, World};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TableauStats {
    pub nodes: u64,
    pub closed_branches: u64,
    pub roots: usize,
}

/// A countermodel read off an open branch, with the point where the input
/// formula holds.
#[derive(Debug, Clone)]
pub struct OpenHint {
    pub structure: VagueStructure,
    pub world: usize,
    pub agent: AgentId,
}

#[derive(Debug, Clone)]
pub enum SatOutcome {
    /// Every branch of every root closed.
    Closed(TableauStats),
    Open(Box<OpenHint>, TableauStats),
    Unknown(TableauStats),
}

/// Outcome of a validity query; `Open` carries a countermodel hint for the
/// negation.
#[derive(Debug, Clone)]
pub enum TableauResult {
    Valid(TableauStats),
    Open(Box<OpenHint>, TableauStats),
    Unknown(TableauStats),
}

#[derive(Clone)]
struct TWorld {
    o: usize,
    s: Vec<usize>,
    plausible: Vec<bool>,
}

type Label = (u32, u32, bool, Fid);

#[derive(Clone)]
struct Branch {
    worlds: Vec<TWorld>,
    next_o: usize,
    next_s: Vec<usize>,
    facts: HashSet<Label>,
    todo: VecDeque<Label>,
    betas: Vec<(u32, u32, Fid, Fid)>,
    rbox: BTreeMap<(usize, usize), BTreeSet<Fid>>,
    rdia: BTreeMap<(usize, usize), BTreeSet<Fid>>,
    dbox: BTreeMap<usize, BTreeSet<(usize, Fid)>>,
    ddia: BTreeMap<usize, BTreeSet<(usize, Fid)>>,
    objective: HashMap<(usize, u32), bool>,
}

struct Clash;

enum Step {
    Closed,
    Open,
    Split(Box<Branch>),
    OutOfBudget,
}

impl Branch {
    fn root(n: usize) -> Branch {
        Branch {
            worlds: vec![TWorld { o: 0, s: vec![0; n], plausible: vec![false; n] }],
            next_o: 1,
            next_s: vec![1; n],
            facts: HashSet::new(),
            todo: VecDeque::new(),
            betas: Vec::new(),
            rbox: BTreeMap::new(),
            rdia: BTreeMap::new(),
            dbox: BTreeMap::new(),
            ddia: BTreeMap::new(),
            objective: HashMap::new(),
        }
    }

    fn push(&mut self, w: usize, agent: usize, sign: bool, f: Fid) {
        self.todo.push_back((w as u32, agent as u32, sign, f));
    }

    fn process(&mut self, arena: &Arena, label: Label) -> Result<(), Clash> {
        let (w, i, sign, f) = label;
        if self.facts.contains(&label) {
            return Ok(());
        }
        if self.facts.contains(&(w, i, !sign, f)) {
            return Err(Clash);
        }
        self.facts.insert(label);
        let wu = w as usize;
        match arena.nodes[f as usize] {
            Node::True if !sign => return Err(Clash),
            Node::False if sign => return Err(Clash),
            Node::True | Node::False => {}
            Node::Prop(p) => {
                if arena.objective[p as usize] {
                    let key = (self.worlds[wu].o, p);
                    match self.objective.get(&key) {
                        Some(&v) if v != sign => return Err(Clash),
                        _ => {
                            self.objective.insert(key, sign);
                        }
                    }
                }
            }
            Node::Not(a) => self.push(wu, i as usize, !sign, a),
            Node::And(a, b) => {
                if sign {
                    self.push(wu, i as usize, true, a);
                    self.push(wu, i as usize, true, b);
                } else {
                    self.betas.push((w, i, a, b));
                }
            }
            Node::Report(j, a) => {
                let j = j as usize;
                let key = (j, self.worlds[wu].s[j]);
                if sign {
                    if self.rdia.get(&key).is_some_and(|s| s.contains(&a)) {
                        return Err(Clash);
                    }
                    if self.rbox.entry(key).or_default().insert(a) {
                        let targets: Vec<usize> = (0..self.worlds.len())
                            .filter(|&v| self.worlds[v].s[j] == key.1 && self.worlds[v].plausible[j])
                            .collect();
                        for v in targets {
                            self.push(v, j, true, a);
                        }
                    }
                } else {
                    if self.rbox.get(&key).is_some_and(|s| s.contains(&a)) {
                        return Err(Clash);
                    }
                    self.rdia.entry(key).or_default().insert(a);
                }
            }
            Node::Def(j, a) => {
                let j = j as usize;
                let o = self.worlds[wu].o;
                if sign {
                    if self.ddia.get(&o).is_some_and(|s| s.contains(&(j, a))) {
                        return Err(Clash);
                    }
                    if self.dbox.entry(o).or_default().insert((j, a)) {
                        let targets: Vec<usize> = (0..self.worlds.len()).filter(|&v| self.worlds[v].o == o).collect();
                        for v in targets {
                            self.push(v, j, true, a);
                        }
                    }
                } else {
                    if self.dbox.get(&o).is_some_and(|s| s.contains(&(j, a))) {
                        return Err(Clash);
                    }
                    self.ddia.entry(o).or_default().insert((j, a));
                }
            }
        }
        Ok(())
    }

    fn has(&self, w: usize, agent: usize, sign: bool, f: Fid) -> bool {
        self.facts.contains(&(w as u32, agent as u32, sign, f))
    }

    /// A world in `s_j` class `s`, plausible for `j`, with fresh other classes.
    fn report_witness(&mut self, j: usize, s: usize) -> usize {
        let n = self.next_s.len();
        let mut coords = Vec::with_capacity(n);
        for k in 0..n {
            if k == j {
                coords.push(s);
            } else {
                coords.push(self.next_s[k]);
                self.next_s[k] += 1;
            }
        }
        let mut plausible = vec![false; n];
        plausible[j] = true;
        self.worlds.push(TWorld { o: self.next_o, s: coords, plausible });
        self.next_o += 1;
        let w = self.worlds.len() - 1;
        let bodies: Vec<Fid> = self.rbox.get(&(j, s)).map(|b| b.iter().copied().collect()).unwrap_or_default();
        for b in bodies {
            self.push(w, j, true, b);
        }
        w
    }

    /// A world in objective class `o` with fresh subjective classes.
    fn def_witness(&mut self, o: usize) -> usize {
        let n = self.next_s.len();
        let coords: Vec<usize> = (0..n)
            .map(|k| {
                self.next_s[k] += 1;
                self.next_s[k] - 1
            })
            .collect();
        self.worlds.push(TWorld { o, s: coords, plausible: vec![false; n] });
        let w = self.worlds.len() - 1;
        let bodies: Vec<(usize, Fid)> = self.dbox.get(&o).map(|b| b.iter().copied().collect()).unwrap_or_default();
        for (j, b) in bodies {
            self.push(w, j, true, b);
        }
        w
    }

    /// Creates at most one world for an unmet demand; false when none is left.
    fn expand_demand(&mut self) -> bool {
        let mut demand = None;
        'r: for (&(j, s), bodies) in &self.rdia {
            for &a in bodies {
                let met = (0..self.worlds.len()).any(|v| {
                    self.worlds[v].s[j] == s && self.worlds[v].plausible[j] && self.has(v, j, false, a)
                });
                if !met {
                    demand = Some((j, s, a));
                    break 'r;
                }
            }
        }
        if let Some((j, s, a)) = demand {
            let w = self.report_witness(j, s);
            self.push(w, j, false, a);
            return true;
        }
        let mut demand = None;
        'd: for (&o, bodies) in &self.ddia {
            for &(j, a) in bodies {
                let met = (0..self.worlds.len()).any(|v| self.worlds[v].o == o && self.has(v, j, false, a));
                if !met {
                    demand = Some((o, j, a));
                    break 'd;
                }
            }
        }
        if let Some((o, j, a)) = demand {
            let w = self.def_witness(o);
            self.push(w, j, false, a);
            return true;
        }
        // Seriality: a class constrained by `R_j` facts needs a plausible world.
        let serial = self.rbox.iter().find_map(|(&(j, s), bodies)| {
            let covered = self.worlds.iter().any(|w| w.s[j] == s && w.plausible[j]);
            (!bodies.is_empty() && !covered).then_some((j, s))
        });
        if let Some((j, s)) = serial {
            self.report_witness(j, s);
            return true;
        }
        false
    }

    fn step(&mut self, arena: &Arena, nodes: &mut u64, budget: u64) -> Step {
        loop {
            while let Some(label) = self.todo.pop_front() {
                *nodes += 1;
                if *nodes > budget {
                    return Step::OutOfBudget;
                }
                if self.process(arena, label).is_err() {
                    return Step::Closed;
                }
            }
            while let Some(&(w, i, a, b)) = self.betas.last() {
                let (w, i) = (w as usize, i as usize);
                if self.has(w, i, false, a) || self.has(w, i, false, b) {
                    self.betas.pop();
                    continue;
                }
                self.betas.pop();
                let mut left = self.clone();
                left.push(w, i, false, a);
                self.push(w, i, true, a);
                self.push(w, i, false, b);
                // The caller explores `left` first; `self` becomes the right branch.
                let right = std::mem::replace(self, left);
                return Step::Split(Box::new(right));
            }
            if !self.expand_demand() {
                return Step::Open;
            }
        }
    }

    fn into_structure(self, arena: &Arena) -> VagueStructure {
        let n = self.next_s.len();
        let mut plausible: Vec<Vec<bool>> = (0..n).map(|j| self.worlds.iter().map(|w| w.plausible[j]).collect()).collect();
        for (j, row) in plausible.iter_mut().enumerate() {
            for s in 0..self.next_s[j] {
                let members: Vec<usize> = (0..self.worlds.len()).filter(|&v| self.worlds[v].s[j] == s).collect();
                if !members.is_empty() && !members.iter().any(|&v| row[v]) {
                    debug_assert!(self.rbox.get(&(j, s)).is_none_or(|b| b.is_empty()));
                    row[members[0]] = true;
                }
            }
        }
        let mut valuation = BTreeMap::new();
        let mut objective_props = BTreeSet::new();
        for (pid, name) in arena.props.iter().enumerate() {
            let fid = arena.lookup(&Node::Prop(pid as u32));
            let ext: Vec<Vec<bool>> = if arena.objective[pid] {
                objective_props.insert(name.clone());
                let row: Vec<bool> = self
                    .worlds
                    .iter()
                    .map(|w| self.objective.get(&(w.o, pid as u32)) == Some(&true))
                    .collect();
                vec![row; n]
            } else {
                (0..n)
                    .map(|i| {
                        (0..self.worlds.len())
                            .map(|w| fid.is_some_and(|f| self.has(w, i, true, f)))
                            .collect()
                    })
                    .collect()
            };
            valuation.insert(name.clone(), ext);
        }
        VagueStructure::new(
            n,
            (0..self.next_o).map(|o| format!("o{o}")).collect(),
            self.next_s.iter().map(|&c| (0..c).map(|s| format!("s{s}")).collect()).collect(),
            self.worlds.iter().map(|w| World::new(w.o, w.s.clone())).collect(),
            plausible,
            valuation,
            objective_props,
        )
        .expect("tableau worlds have distinct coordinates")
    }
}

/// Satisfiability of `f` at some point `(w, i)` of some structure with `n`
/// agents; `objective` lists propositions constrained to be objective.
pub fn tableau_sat(
    f: &Formula,
    n: usize,
    objective: &BTreeSet<String>,
    budget: u64,
) -> Result<SatOutcome, DecisionError> {
    super::check_agents(f, n)?;
    if budget == 0 {
        return Err(DecisionError::ZeroBudget);
    }
    let mut arena = Arena::new(objective);
    let root = arena.intern(&desugar(f));
    let mut stats = TableauStats { nodes: 0, closed_branches: 0, roots: 0 };
    for agent in 0..n {
        stats.roots += 1;
        let mut start = Branch::root(n);
        start.push(0, agent, true, root);
        let mut stack = vec![start];
        while let Some(mut branch) = stack.pop() {
            match branch.step(&arena, &mut stats.nodes, budget) {
                Step::Closed => stats.closed_branches += 1,
                Step::Split(right) => {
                    stack.push(*right);
                    stack.push(branch);
                }
                Step::Open => {
                    let hint = OpenHint {
                        structure: branch.into_structure(&arena),
                        world: 0,
                        agent: AgentId::from_slot(agent),
                    };
                    return Ok(SatOutcome::Open(Box::new(hint), stats));
                }
                Step::OutOfBudget => return Ok(SatOutcome::Unknown(stats)),
            }
        }
    }
    Ok(SatOutcome::Closed(stats))
}

/// Validity: the negation is refuted at every agent.
pub fn tableau_valid(
    f: &Formula,
    n: usize,
    objective: &BTreeSet<String>,
    budget: u64,
) -> Result<TableauResult, DecisionError> {
    Ok(match tableau_sat(&Formula::not(f.clone()), n, objective, budget)? {
        SatOutcome::Closed(s) => TableauResult::Valid(s),
        SatOutcome::Open(h, s) => TableauResult::Open(h, s),
        SatOutcome::Unknown(s) => TableauResult::Unknown(s),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checker::eval;
    use crate::parser::parse;

    fn valid(text: &str, n: usize) -> bool {
        matches!(
            tableau_valid(&parse(text).unwrap(), n, &BTreeSet::new(), 200_000).unwrap(),
            TableauResult::Valid(_)
        )
    }

    fn hint(text: &str, n: usize) -> OpenHint {
        match tableau_valid(&parse(text).unwrap(), n, &BTreeSet::new(), 200_000).unwrap() {
            TableauResult::Open(h, _) => *h,
            other => panic!("expected open, got {other:?}"),
        }
    }

    #[test]
    fn kd45_and_s5_validities() {
        for f in [
            "p | ~p",
            "R1 (p -> q) -> (R1 p -> R1 q)",
            "R1 p -> R1 R1 p",
            "~R1 p -> R1 ~R1 p",
            "~R1 false",
            "D1 p -> D1 D1 p",
            "~D1 p -> D1 ~D1 p",
            "~D1 false",
            "D1 R2 p -> R2 p",
            "R1 R1 p -> R1 p",
            "D1 R1 D1 R1 p -> D1 R1 p",
        ] {
            assert!(valid(f, 2), "{f}");
        }
        assert!(valid("D1 p -> p", 1));
        assert!(valid("(D1 p -> p) | (D2 q -> q)", 2));
    }

    #[test]
    fn non_validities_have_checked_hints() {
        for (f, n) in [
            ("D1 p -> p", 2),
            ("R1 p -> p", 1),
            ("p -> D1 R1 p", 1),
            ("D1 R1 p -> D1 R1 D1 R1 p", 1),
            ("p & q", 1),
            ("R1 p -> R2 p", 2),
        ] {
            let h = hint(f, n);
            assert!(h.structure.is_valid(), "{f}: {:?}", h.structure.validate());
            let neg = Formula::not(parse(f).unwrap());
            assert!(eval(&h.structure, h.world, h.agent, &neg).unwrap(), "{f}");
        }
    }

    #[test]
    fn objective_props_are_shared_across_agents() {
        let objective: BTreeSet<String> = ["p".to_string()].into();
        let f = parse("D1 p -> p").unwrap();
        assert!(matches!(tableau_valid(&f, 2, &objective, 10_000).unwrap(), TableauResult::Valid(_)));
        let f = parse("R1 p & R2 ~p").unwrap();
        match tableau_sat(&f, 2, &objective, 10_000).unwrap() {
            SatOutcome::Open(h, _) => assert!(eval(&h.structure, h.world, h.agent, &f).unwrap()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn budget_exhaustion_is_unknown() {
        let f = parse("(p | q) & (r | s) & (R1 p | R1 q)").unwrap();
        assert!(matches!(tableau_sat(&f, 1, &BTreeSet::new(), 2).unwrap(), SatOutcome::Unknown(_)));
        assert_eq!(tableau_sat(&f, 1, &BTreeSet::new(), 0).unwrap_err(), DecisionError::ZeroBudget);
    }
}
