//! The axiom system AX: schema recognition, Hilbert-style proof checking and
//! sampling of axiom instances.
//!
//! All matching is structural on desugared formulas, where `a -> b` is
//! `~(a & ~b)` and `a | b` is `~(~a & ~b)`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{desugar, is_nec_agent_independent, is_prop_tautology, AgentId, Formula};
use crate::gen::{random_formula, random_nec_independent, PoolParams};
use crate::parser::{parse, render, ParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AxiomName {
    Taut,
    R1,
    R2,
    R3,
    R4,
    D1,
    D2,
    D3,
    D4,
    D5,
    D6,
}

impl AxiomName {
    pub const ALL: [AxiomName; 11] = [
        AxiomName::Taut,
        AxiomName::R1,
        AxiomName::R2,
        AxiomName::R3,
        AxiomName::R4,
        AxiomName::D1,
        AxiomName::D2,
        AxiomName::D3,
        AxiomName::D4,
        AxiomName::D5,
        AxiomName::D6,
    ];
}

impl fmt::Display for AxiomName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown axiom name `{0}`")]
pub struct UnknownAxiom(pub String);

impl FromStr for AxiomName {
    type Err = UnknownAxiom;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AxiomName::ALL
            .into_iter()
            .find(|a| a.to_string() == s)
            .ok_or_else(|| UnknownAxiom(s.to_string()))
    }
}

// ---------------------------------------------------------------------------
// Shapes over desugared formulas

fn as_not(f: &Formula) -> Option<&Formula> {
    match f {
        Formula::Not(a) => Some(a),
        _ => None,
    }
}

/// `~(a & ~b)` read as `a -> b`.
fn as_imp(f: &Formula) -> Option<(&Formula, &Formula)> {
    match as_not(f)? {
        Formula::And(a, nb) => Some((a, as_not(nb)?)),
        _ => None,
    }
}

/// `~(~a & ~b)` read as `a | b`.
fn as_or(f: &Formula) -> Option<(&Formula, &Formula)> {
    match as_not(f)? {
        Formula::And(na, nb) => Some((as_not(na)?, as_not(nb)?)),
        _ => None,
    }
}

#[derive(Clone, Copy)]
enum Op {
    R,
    D,
}

fn as_box(op: Op, f: &Formula) -> Option<(AgentId, &Formula)> {
    match (op, f) {
        (Op::R, Formula::Report(j, a)) | (Op::D, Formula::Def(j, a)) => Some((*j, a)),
        _ => None,
    }
}

/// `B_j(a -> b) -> (B_j a -> B_j b)`.
fn is_k(op: Op, f: &Formula) -> bool {
    (|| {
        let (lhs, rhs) = as_imp(f)?;
        let (j, body) = as_box(op, lhs)?;
        let (a, b) = as_imp(body)?;
        let (ba, bb) = as_imp(rhs)?;
        let (j1, a1) = as_box(op, ba)?;
        let (j2, b1) = as_box(op, bb)?;
        Some(j == j1 && j == j2 && a == a1 && b == b1)
    })()
    .unwrap_or(false)
}

/// `B_j a -> B_j B_j a`.
fn is_four(op: Op, f: &Formula) -> bool {
    (|| {
        let (lhs, rhs) = as_imp(f)?;
        let (j, _) = as_box(op, lhs)?;
        let (j1, inner) = as_box(op, rhs)?;
        Some(j == j1 && inner == lhs)
    })()
    .unwrap_or(false)
}

/// `~B_j a -> B_j ~B_j a`.
fn is_five(op: Op, f: &Formula) -> bool {
    (|| {
        let (lhs, rhs) = as_imp(f)?;
        let boxed = as_not(lhs)?;
        let (j, _) = as_box(op, boxed)?;
        let (j1, inner) = as_box(op, rhs)?;
        Some(j == j1 && inner == lhs)
    })()
    .unwrap_or(false)
}

/// `~B_j false`.
fn is_serial(op: Op, f: &Formula) -> bool {
    (|| {
        let (_, a) = as_box(op, as_not(f)?)?;
        Some(*a == Formula::False)
    })()
    .unwrap_or(false)
}

/// `D_j a -> a`, returning `a`.
fn as_def_implication(f: &Formula) -> Option<(AgentId, &Formula)> {
    let (lhs, rhs) = as_imp(f)?;
    let (j, a) = as_box(Op::D, lhs)?;
    (a == rhs).then_some((j, a))
}

fn is_d6(f: &Formula, n: usize) -> bool {
    if n == 0 {
        return false;
    }
    let mut rest = f;
    for slot in 0..n {
        let disjunct = if slot + 1 == n {
            rest
        } else {
            match as_or(rest) {
                Some((d, r)) => {
                    rest = r;
                    d
                }
                None => return false,
            }
        };
        match as_def_implication(disjunct) {
            Some((j, _)) if j.slot() == slot => {}
            _ => return false,
        }
    }
    true
}

/// Every schema `f` instantiates, for `n` agents.
pub fn match_axiom(f: &Formula, n: usize) -> BTreeSet<AxiomName> {
    let d = desugar(f);
    let mut out = BTreeSet::new();
    if is_prop_tautology(&d) {
        out.insert(AxiomName::Taut);
    }
    let table = [
        (AxiomName::R1, is_k(Op::R, &d)),
        (AxiomName::R2, is_four(Op::R, &d)),
        (AxiomName::R3, is_five(Op::R, &d)),
        (AxiomName::R4, is_serial(Op::R, &d)),
        (AxiomName::D1, is_k(Op::D, &d)),
        (AxiomName::D2, is_four(Op::D, &d)),
        (AxiomName::D3, is_five(Op::D, &d)),
        (AxiomName::D4, is_serial(Op::D, &d)),
        (
            AxiomName::D5,
            as_def_implication(&d).is_some_and(|(_, a)| is_nec_agent_independent(a)),
        ),
        (AxiomName::D6, is_d6(&d, n)),
    ];
    out.extend(table.into_iter().filter(|(_, hit)| *hit).map(|(a, _)| a));
    out
}

// ---------------------------------------------------------------------------
// Proofs

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Justification {
    Axiom(AxiomName),
    /// Premise `φ` at the first line, `φ -> ψ` at the second.
    Mp(usize, usize),
    NecR(usize, AgentId),
    NecD(usize, AgentId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofLine {
    pub formula: Formula,
    pub by: Justification,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Proof {
    pub agents: usize,
    pub lines: Vec<ProofLine>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LineFault {
    #[error("line reference {0} is not an earlier line")]
    BadReference(usize),
    #[error("agent {agent} is out of range for {n} agents")]
    AgentOutOfRange { agent: u32, n: usize },
    #[error("not a tautology")]
    NotTautology,
    #[error("not an instance of {axiom}")]
    NotInstance { axiom: AxiomName },
    #[error("justification mismatch: expected `{expected}`, found `{found}`")]
    Mismatch { expected: String, found: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {fault}")]
pub struct ProofError {
    pub line: usize,
    pub fault: LineFault,
}

fn check_line(proof: &Proof, idx: usize) -> Result<(), LineFault> {
    let line = &proof.lines[idx];
    let n = proof.agents;
    let earlier = |k: usize| {
        if k < idx {
            Ok(&proof.lines[k].formula)
        } else {
            Err(LineFault::BadReference(k))
        }
    };
    let agent_ok = |j: AgentId| {
        if j.slot() < n {
            Ok(())
        } else {
            Err(LineFault::AgentOutOfRange { agent: j.get(), n })
        }
    };
    if line.formula.max_agent() as usize > n {
        return Err(LineFault::AgentOutOfRange { agent: line.formula.max_agent(), n });
    }
    let found = desugar(&line.formula);
    let expect = |expected: Formula| {
        if desugar(&expected) == found {
            Ok(())
        } else {
            Err(LineFault::Mismatch { expected: render(&expected), found: render(&line.formula) })
        }
    };
    match line.by {
        Justification::Axiom(AxiomName::Taut) => {
            if is_prop_tautology(&found) {
                Ok(())
            } else {
                Err(LineFault::NotTautology)
            }
        }
        Justification::Axiom(axiom) => {
            if match_axiom(&line.formula, n).contains(&axiom) {
                Ok(())
            } else {
                Err(LineFault::NotInstance { axiom })
            }
        }
        Justification::Mp(i, j) => {
            let premise = desugar(earlier(i)?);
            let implication = earlier(j)?;
            let d = desugar(implication);
            match as_imp(&d) {
                Some((a, b)) if *a == premise => {
                    if *b == found {
                        Ok(())
                    } else {
                        Err(LineFault::Mismatch { expected: render(b), found: render(&line.formula) })
                    }
                }
                _ => Err(LineFault::Mismatch {
                    expected: format!("({}) -> ...", render(&premise)),
                    found: render(implication),
                }),
            }
        }
        Justification::NecR(i, j) => {
            agent_ok(j)?;
            expect(Formula::Report(j, Box::new(earlier(i)?.clone())))
        }
        Justification::NecD(i, j) => {
            agent_ok(j)?;
            expect(Formula::Def(j, Box::new(earlier(i)?.clone())))
        }
    }
}

/// Ok, or the first failing line with the reason.
pub fn check_proof(proof: &Proof) -> Result<(), ProofError> {
    for line in 0..proof.lines.len() {
        check_line(proof, line).map_err(|fault| ProofError { line, fault })?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// JSON

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ByJson {
    Axiom(String),
    Rule(RuleJson),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub enum RuleJson {
    Mp([usize; 2]),
    NecR([usize; 2]),
    NecD([usize; 2]),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineJson {
    pub formula: String,
    pub by: ByJson,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProofJson {
    pub agents: usize,
    pub lines: Vec<LineJson>,
}

#[derive(Debug, Error)]
pub enum ProofLoadError {
    #[error("invalid proof JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("line {line}: {source}")]
    Formula { line: usize, source: ParseError },
    #[error("line {line}: {source}")]
    Axiom { line: usize, source: UnknownAxiom },
    #[error("line {line}: agent index must be at least 1")]
    BadAgent { line: usize },
}

impl TryFrom<ProofJson> for Proof {
    type Error = ProofLoadError;

    fn try_from(p: ProofJson) -> Result<Self, Self::Error> {
        let lines = p
            .lines
            .into_iter()
            .enumerate()
            .map(|(line, l)| {
                let formula = parse(&l.formula).map_err(|source| ProofLoadError::Formula { line, source })?;
                let agent = |j: usize| {
                    u32::try_from(j)
                        .ok()
                        .and_then(AgentId::new)
                        .ok_or(ProofLoadError::BadAgent { line })
                };
                let by = match l.by {
                    ByJson::Axiom(name) => Justification::Axiom(
                        name.parse().map_err(|source| ProofLoadError::Axiom { line, source })?,
                    ),
                    ByJson::Rule(RuleJson::Mp([i, j])) => Justification::Mp(i, j),
                    ByJson::Rule(RuleJson::NecR([i, j])) => Justification::NecR(i, agent(j)?),
                    ByJson::Rule(RuleJson::NecD([i, j])) => Justification::NecD(i, agent(j)?),
                };
                Ok::<_, ProofLoadError>(ProofLine { formula, by })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Proof { agents: p.agents, lines })
    }
}

impl From<&Proof> for ProofJson {
    fn from(p: &Proof) -> Self {
        ProofJson {
            agents: p.agents,
            lines: p
                .lines
                .iter()
                .map(|l| LineJson {
                    formula: render(&l.formula),
                    by: match l.by {
                        Justification::Axiom(a) => ByJson::Axiom(a.to_string()),
                        Justification::Mp(i, j) => ByJson::Rule(RuleJson::Mp([i, j])),
                        Justification::NecR(i, j) => ByJson::Rule(RuleJson::NecR([i, j.get() as usize])),
                        Justification::NecD(i, j) => ByJson::Rule(RuleJson::NecD([i, j.get() as usize])),
                    },
                })
                .collect(),
        }
    }
}

impl Proof {
    pub fn from_json_str(text: &str) -> Result<Self, ProofLoadError> {
        serde_json::from_str::<ProofJson>(text)?.try_into()
    }
}

// ---------------------------------------------------------------------------
// Instances

fn boxed(op: Op, j: AgentId, f: Formula) -> Formula {
    match op {
        Op::R => Formula::Report(j, Box::new(f)),
        Op::D => Formula::Def(j, Box::new(f)),
    }
}

fn schema(op: Op, shape: u8, j: AgentId, a: Formula, b: Formula) -> Formula {
    match shape {
        1 => Formula::implies(
            boxed(op, j, Formula::implies(a.clone(), b.clone())),
            Formula::implies(boxed(op, j, a), boxed(op, j, b)),
        ),
        2 => Formula::implies(boxed(op, j, a.clone()), boxed(op, j, boxed(op, j, a))),
        3 => {
            let neg = Formula::not(boxed(op, j, a));
            Formula::implies(neg.clone(), boxed(op, j, neg))
        }
        _ => Formula::not(boxed(op, j, Formula::False)),
    }
}

fn tautology<R: Rng>(rng: &mut R, a: Formula, b: Formula, c: Formula) -> Formula {
    use Formula as F;
    let shapes: [fn(F, F, F) -> F; 8] = [
        |a, _, _| F::or(a.clone(), F::not(a)),
        |a, b, _| F::implies(a.clone(), F::implies(b, a)),
        |a, b, c| {
            F::implies(
                F::implies(a.clone(), F::implies(b.clone(), c.clone())),
                F::implies(F::implies(a.clone(), b), F::implies(a, c)),
            )
        },
        |a, b, _| F::implies(F::implies(F::not(b.clone()), F::not(a.clone())), F::implies(a, b)),
        |a, b, _| F::implies(F::and(a.clone(), b), a),
        |a, b, _| F::implies(a.clone(), F::or(b, a)),
        |a, _, _| F::implies(F::not(F::not(a.clone())), a),
        |a, b, _| F::or(F::implies(a, b.clone()), F::implies(b, F::True)),
    ];
    (shapes.choose(rng).expect("nonempty"))(a, b, c)
}

/// A random instance of `axiom` over `params.agents` agents. D5 bodies are
/// drawn from the necessarily-agent-independent fragment.
pub fn sample_instance<R: Rng>(rng: &mut R, axiom: AxiomName, params: &PoolParams) -> Formula {
    let n = params.agents;
    let j = AgentId::from_slot(rng.gen_range(0..n));
    let mut f = || random_formula(rng, params);
    match axiom {
        AxiomName::Taut => {
            let (a, b, c) = (f(), f(), f());
            tautology(rng, a, b, c)
        }
        AxiomName::R1 => schema(Op::R, 1, j, f(), f()),
        AxiomName::R2 => schema(Op::R, 2, j, f(), Formula::True),
        AxiomName::R3 => schema(Op::R, 3, j, f(), Formula::True),
        AxiomName::R4 => schema(Op::R, 4, j, Formula::True, Formula::True),
        AxiomName::D1 => schema(Op::D, 1, j, f(), f()),
        AxiomName::D2 => schema(Op::D, 2, j, f(), Formula::True),
        AxiomName::D3 => schema(Op::D, 3, j, f(), Formula::True),
        AxiomName::D4 => schema(Op::D, 4, j, Formula::True, Formula::True),
        AxiomName::D5 => {
            let body = random_nec_independent(rng, params);
            Formula::implies(Formula::Def(j, Box::new(body.clone())), body)
        }
        AxiomName::D6 => {
            let disjuncts: Vec<Formula> = AgentId::all(n)
                .map(|k| {
                    let body = random_formula(rng, params);
                    Formula::implies(Formula::Def(k, Box::new(body.clone())), body)
                })
                .collect();
            d6_chain(disjuncts)
        }
    }
}

/// Right-associated disjunction of the given disjuncts.
pub fn d6_chain(mut disjuncts: Vec<Formula>) -> Formula {
    let mut acc = disjuncts.pop().expect("at least one disjunct");
    while let Some(d) = disjuncts.pop() {
        acc = Formula::or(d, acc);
    }
    acc
}
