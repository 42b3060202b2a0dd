//! Abstract syntax of the report/definitely modal language and the purely
//! syntactic analyses used by the checker, the proof checker and the
//! decision procedures.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

/// A 1-based agent index, as in `R1`, `D2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct AgentId(u32);

impl AgentId {
    /// Returns `None` for index 0.
    pub fn new(index: u32) -> Option<Self> {
        (index >= 1).then_some(AgentId(index))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// Zero-based position, for indexing per-agent tables.
    pub fn slot(self) -> usize {
        (self.0 - 1) as usize
    }

    pub fn from_slot(slot: usize) -> Self {
        AgentId(slot as u32 + 1)
    }

    /// All agents `1..=n`.
    pub fn all(n: usize) -> impl Iterator<Item = AgentId> {
        (0..n).map(AgentId::from_slot)
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Prop(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    /// `R_j φ`: agent j reports φ.
    Report(AgentId, Box<Formula>),
    /// `D_j φ`: according to agent j, φ is definitely the case.
    Def(AgentId, Box<Formula>),
}

impl Formula {
    pub fn prop(name: impl Into<String>) -> Formula {
        Formula::Prop(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    /// Panics on agent index 0; use [`AgentId::new`] for untrusted input.
    pub fn report(agent: u32, f: Formula) -> Formula {
        Formula::Report(AgentId::new(agent).expect("agent index must be >= 1"), Box::new(f))
    }

    /// Panics on agent index 0; use [`AgentId::new`] for untrusted input.
    pub fn def(agent: u32, f: Formula) -> Formula {
        Formula::Def(AgentId::new(agent).expect("agent index must be >= 1"), Box::new(f))
    }

    pub fn is_modal(&self) -> bool {
        matches!(self, Formula::Report(..) | Formula::Def(..))
    }

    /// Immediate subformulas, left to right.
    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::True | Formula::False | Formula::Prop(_) => vec![],
            Formula::Not(a) | Formula::Report(_, a) | Formula::Def(_, a) => vec![a],
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => vec![a, b],
        }
    }

    /// Largest agent index mentioned, 0 if none.
    pub fn max_agent(&self) -> u32 {
        let own = match self {
            Formula::Report(j, _) | Formula::Def(j, _) => j.get(),
            _ => 0,
        };
        self.children()
            .into_iter()
            .map(Formula::max_agent)
            .fold(own, u32::max)
    }

    /// Names of the primitive propositions, sorted.
    pub fn props(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_props(&mut out);
        out
    }

    fn collect_props(&self, out: &mut BTreeSet<String>) {
        if let Formula::Prop(p) = self {
            out.insert(p.clone());
        }
        for c in self.children() {
            c.collect_props(out);
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children().into_iter().map(Formula::size).sum::<usize>()
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::parser::render(self))
    }
}

/// Eliminates `Or` and `Implies` using their classical definitions.
pub fn desugar(f: &Formula) -> Formula {
    match f {
        Formula::True | Formula::False | Formula::Prop(_) => f.clone(),
        Formula::Not(a) => Formula::not(desugar(a)),
        Formula::And(a, b) => Formula::and(desugar(a), desugar(b)),
        Formula::Or(a, b) => Formula::not(Formula::and(
            Formula::not(desugar(a)),
            Formula::not(desugar(b)),
        )),
        Formula::Implies(a, b) => {
            Formula::not(Formula::and(desugar(a), Formula::not(desugar(b))))
        }
        Formula::Report(j, a) => Formula::Report(*j, Box::new(desugar(a))),
        Formula::Def(j, a) => Formula::Def(*j, Box::new(desugar(a))),
    }
}

/// Distinct subtrees, each once, children before parents.
pub fn subformulas(f: &Formula) -> Vec<Formula> {
    fn walk(f: &Formula, seen: &mut BTreeSet<Formula>, out: &mut Vec<Formula>) {
        if seen.contains(f) {
            return;
        }
        for c in f.children() {
            walk(c, seen, out);
        }
        seen.insert(f.clone());
        out.push(f.clone());
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    walk(f, &mut seen, &mut out);
    out
}

/// Maximum nesting of `R`/`D` along any root-to-leaf path.
pub fn modal_depth(f: &Formula) -> usize {
    let below = f
        .children()
        .into_iter()
        .map(modal_depth)
        .max()
        .unwrap_or(0);
    if f.is_modal() {
        below + 1
    } else {
        below
    }
}

/// Boolean combination of `R_j`/`D_j` formulas (and literals); such a
/// formula has the same truth value for every evaluating agent.
pub fn is_nec_agent_independent(f: &Formula) -> bool {
    match f {
        Formula::True | Formula::False => true,
        Formula::Prop(_) => false,
        Formula::Report(..) | Formula::Def(..) => true,
        Formula::Not(a) => is_nec_agent_independent(a),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
            is_nec_agent_independent(a) && is_nec_agent_independent(b)
        }
    }
}

/// Propositional skeleton of a formula: primitives and maximal modal
/// subformulas become opaque atoms.
#[derive(Debug, Clone)]
pub struct Skeleton {
    pub atoms: Vec<Formula>,
    root: SkelNode,
}

#[derive(Debug, Clone)]
enum SkelNode {
    Const(bool),
    Atom(usize),
    Not(Box<SkelNode>),
    And(Box<SkelNode>, Box<SkelNode>),
}

impl Skeleton {
    /// Built over the desugared formula, so `Or`/`Implies` spelled inside a
    /// modal atom do not split atoms that are equal after desugaring.
    pub fn of(f: &Formula) -> Skeleton {
        let mut index: HashMap<Formula, usize> = HashMap::new();
        let mut atoms = Vec::new();
        let root = Self::build(&desugar(f), &mut index, &mut atoms);
        Skeleton { atoms, root }
    }

    fn build(f: &Formula, index: &mut HashMap<Formula, usize>, atoms: &mut Vec<Formula>) -> SkelNode {
        match f {
            Formula::True => SkelNode::Const(true),
            Formula::False => SkelNode::Const(false),
            Formula::Not(a) => SkelNode::Not(Box::new(Self::build(a, index, atoms))),
            Formula::And(a, b) => SkelNode::And(
                Box::new(Self::build(a, index, atoms)),
                Box::new(Self::build(b, index, atoms)),
            ),
            Formula::Or(..) | Formula::Implies(..) => unreachable!("skeleton input is desugared"),
            Formula::Prop(_) | Formula::Report(..) | Formula::Def(..) => {
                let next = atoms.len();
                let id = *index.entry(f.clone()).or_insert_with(|| {
                    atoms.push(f.clone());
                    next
                });
                SkelNode::Atom(id)
            }
        }
    }

    pub fn eval(&self, assignment: &[bool]) -> bool {
        fn go(n: &SkelNode, a: &[bool]) -> bool {
            match n {
                SkelNode::Const(b) => *b,
                SkelNode::Atom(i) => a[*i],
                SkelNode::Not(x) => !go(x, a),
                SkelNode::And(x, y) => go(x, a) && go(y, a),
            }
        }
        go(&self.root, assignment)
    }

    /// First falsifying row of the truth table, if any.
    pub fn falsifying_row(&self) -> Option<Vec<bool>> {
        let k = self.atoms.len();
        assert!(k < 64, "too many atoms for a truth table: {k}");
        let mut row = vec![false; k];
        for bits in 0u64..(1u64 << k) {
            for (i, slot) in row.iter_mut().enumerate() {
                *slot = bits >> i & 1 == 1;
            }
            if !self.eval(&row) {
                return Some(row);
            }
        }
        None
    }
}

/// Truth-table tautology check over primitives and maximal modal atoms.
pub fn is_prop_tautology(f: &Formula) -> bool {
    Skeleton::of(f).falsifying_row().is_none()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> Formula {
        Formula::prop("p")
    }
    fn q() -> Formula {
        Formula::prop("q")
    }

    #[test]
    fn desugar_examples() {
        assert_eq!(
            desugar(&Formula::implies(p(), q())),
            Formula::not(Formula::and(p(), Formula::not(q())))
        );
        assert_eq!(
            desugar(&Formula::or(p(), q())),
            Formula::not(Formula::and(Formula::not(p()), Formula::not(q())))
        );
        let r = Formula::report(1, p());
        assert_eq!(desugar(&r), r);
    }

    #[test]
    fn desugar_keeps_literals() {
        let f = Formula::implies(Formula::True, Formula::False);
        assert_eq!(
            desugar(&f),
            Formula::not(Formula::and(Formula::True, Formula::not(Formula::False)))
        );
    }

    #[test]
    fn subformula_examples() {
        assert_eq!(subformulas(&p()), vec![p()]);
        let f = Formula::and(p(), Formula::not(p()));
        assert_eq!(subformulas(&f), vec![p(), Formula::not(p()), f.clone()]);
        let g = Formula::def(1, Formula::report(2, p()));
        assert_eq!(subformulas(&g), vec![p(), Formula::report(2, p()), g.clone()]);
    }

    #[test]
    fn nec_agent_independent_examples() {
        // (~R1 D2 p & D1 p) | R2 p
        let f = Formula::or(
            Formula::and(
                Formula::not(Formula::report(1, Formula::def(2, p()))),
                Formula::def(1, p()),
            ),
            Formula::report(2, p()),
        );
        assert!(is_nec_agent_independent(&f));
        assert!(!is_nec_agent_independent(&p()));
        assert!(!is_nec_agent_independent(&Formula::and(Formula::def(1, p()), q())));
        assert!(is_nec_agent_independent(&Formula::True));
    }

    #[test]
    fn tautology_examples() {
        assert!(is_prop_tautology(&Formula::implies(p(), p())));
        let r = Formula::report(1, p());
        assert!(is_prop_tautology(&Formula::or(r.clone(), Formula::not(r))));
        assert!(!is_prop_tautology(&Formula::implies(Formula::def(1, p()), p())));
        assert!(!is_prop_tautology(&p()));
        assert!(is_prop_tautology(&Formula::not(Formula::False)));
    }

    #[test]
    fn tautology_atoms_compare_after_desugaring() {
        let a = Formula::report(1, Formula::implies(p(), q()));
        let b = Formula::report(1, Formula::not(Formula::and(p(), Formula::not(q()))));
        assert!(is_prop_tautology(&Formula::implies(a, b)));
    }

    #[test]
    fn depth_examples() {
        assert_eq!(modal_depth(&p()), 0);
        assert_eq!(modal_depth(&Formula::def(1, Formula::report(1, p()))), 2);
        let f = Formula::def(1, Formula::report(1, Formula::def(1, Formula::report(1, p()))));
        assert_eq!(modal_depth(&f), 4);
    }

    #[test]
    fn agent_id_rejects_zero() {
        assert!(AgentId::new(0).is_none());
        assert_eq!(AgentId::new(3).unwrap().slot(), 2);
    }
}
