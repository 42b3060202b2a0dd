//! The sorites as a single-agent structure: objective state is the grain
//! count, subjective state is (sensor reading, times asked). Grain removal is
//! a transition relation on worlds.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use super::sensor::{SensorError, SensorModel};
use crate::checker::{EvalError, Evaluator};
use crate::formula::{AgentId, Formula};
use crate::structure::{VagueStructure, Violation, World};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ReportPolicy {
    /// Heap iff the reading is at least `min`.
    Threshold { min: i64 },
    /// Heap iff the reading is at least `first` on the first ask and at
    /// least `first - 1` afterwards.
    Sticky { first: i64 },
    Constant { heap: bool },
}

impl ReportPolicy {
    /// `asked` counts earlier questions, so the first ask has `asked = 0`.
    pub fn heap(&self, reading: i64, asked: u32) -> bool {
        match *self {
            ReportPolicy::Threshold { min } => reading >= min,
            ReportPolicy::Sticky { first } => reading >= if asked == 0 { first } else { first - 1 },
            ReportPolicy::Constant { heap } => heap,
        }
    }
}

impl fmt::Display for ReportPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReportPolicy::Threshold { min } => write!(f, "threshold:{min}"),
            ReportPolicy::Sticky { first } => write!(f, "sticky:{first}"),
            ReportPolicy::Constant { heap } => write!(f, "constant:{heap}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bad policy `{0}`; expected threshold:<k>, sticky:<k> or constant:<true|false>")]
pub struct BadPolicy(pub String);

impl FromStr for ReportPolicy {
    type Err = BadPolicy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || BadPolicy(s.to_string());
        let (kind, arg) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "threshold" => Ok(ReportPolicy::Threshold { min: arg.parse().map_err(|_| bad())? }),
            "sticky" => Ok(ReportPolicy::Sticky { first: arg.parse().map_err(|_| bad())? }),
            "constant" => Ok(ReportPolicy::Constant { heap: arg.parse().map_err(|_| bad())? }),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SoritesConfig {
    pub max_grains: i64,
    pub ask_cap: u32,
    pub policy: ReportPolicy,
    pub sensor: SensorModel,
}

impl Default for SoritesConfig {
    fn default() -> Self {
        SoritesConfig {
            max_grains: 60,
            ask_cap: 2,
            policy: ReportPolicy::Threshold { min: 3 },
            sensor: SensorModel::midpoint(10).expect("valid sensor"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SoritesError {
    #[error("at least two grains are needed, got {0}")]
    TooFewGrains(i64),
    #[error(transparent)]
    Sensor(#[from] SensorError),
    #[error("policy must report a heap at {grains} grains (reading {reading}, asked {asked})")]
    NoHeapAtTop { grains: i64, reading: i64, asked: u32 },
    #[error("policy must not report a heap at 1 grain (reading {reading}, asked {asked})")]
    HeapAtOneGrain { reading: i64, asked: u32 },
    #[error("built structure is invalid: {0:?}")]
    Invalid(Vec<Violation>),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// A world's coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct SoritesWorld {
    pub grains: i64,
    pub reading: i64,
    pub asked: u32,
}

pub struct SoritesModel {
    pub config: SoritesConfig,
    pub structure: VagueStructure,
    pub worlds: Vec<SoritesWorld>,
    index: BTreeMap<SoritesWorld, usize>,
}

pub fn heap() -> Formula {
    Formula::prop("Heap")
}

pub fn pile(n: i64) -> Formula {
    Formula::prop(format!("Pile{n}"))
}

/// `S(n) = Pile(n) -> R1 Heap`.
pub fn s(n: i64) -> Formula {
    Formula::implies(pile(n), Formula::report(1, heap()))
}

/// The finite conjunction of `S(n) -> S(n-1)` over `n` in `2..=max`.
pub fn inductive_step(max: i64) -> Formula {
    (3..=max).fold(Formula::implies(s(2), s(1)), |acc, n| Formula::and(acc, Formula::implies(s(n), s(n - 1))))
}

impl SoritesConfig {
    fn check(&self) -> Result<(), SoritesError> {
        if self.max_grains < 2 {
            return Err(SoritesError::TooFewGrains(self.max_grains));
        }
        self.sensor.validated()?;
        for reading in self.sensor.readings(self.max_grains) {
            for asked in 0..=self.ask_cap {
                if !self.policy.heap(reading, asked) {
                    return Err(SoritesError::NoHeapAtTop { grains: self.max_grains, reading, asked });
                }
            }
        }
        for reading in self.sensor.readings(1) {
            for asked in 0..=self.ask_cap {
                if self.policy.heap(reading, asked) {
                    return Err(SoritesError::HeapAtOneGrain { reading, asked });
                }
            }
        }
        Ok(())
    }
}

pub fn build_sorites_structure(config: &SoritesConfig) -> Result<SoritesModel, SoritesError> {
    config.check()?;
    let mut worlds = Vec::new();
    for grains in 0..=config.max_grains {
        for reading in config.sensor.readings(grains) {
            for asked in 0..=config.ask_cap {
                worlds.push(SoritesWorld { grains, reading, asked });
            }
        }
    }
    let subjective: BTreeSet<(i64, u32)> = worlds.iter().map(|w| (w.reading, w.asked)).collect();
    let s_index: BTreeMap<(i64, u32), usize> = subjective.iter().enumerate().map(|(i, &k)| (k, i)).collect();
    let coords: Vec<World> = worlds
        .iter()
        .map(|w| World::new(w.grains as usize, vec![s_index[&(w.reading, w.asked)]]))
        .collect();

    let mut valuation = BTreeMap::new();
    valuation.insert(
        "Heap".to_string(),
        vec![worlds.iter().map(|w| config.policy.heap(w.reading, w.asked)).collect()],
    );
    let mut objective = BTreeSet::new();
    for k in 0..=config.max_grains {
        let name = format!("Pile{k}");
        valuation.insert(name.clone(), vec![worlds.iter().map(|w| w.grains == k).collect()]);
        objective.insert(name);
    }
    let structure = VagueStructure::new(
        1,
        (0..=config.max_grains).map(|n| n.to_string()).collect(),
        vec![subjective.iter().map(|(r, a)| format!("r{r}a{a}")).collect()],
        coords,
        vec![vec![true; worlds.len()]],
        valuation,
        objective,
    )
    .expect("coordinates are in range and distinct");
    let violations = structure.validate();
    if !violations.is_empty() {
        return Err(SoritesError::Invalid(violations));
    }
    let index = worlds.iter().enumerate().map(|(i, &w)| (w, i)).collect();
    Ok(SoritesModel { config: *config, structure, worlds, index })
}

impl SoritesModel {
    pub fn world_index(&self, w: &SoritesWorld) -> Option<usize> {
        self.index.get(w).copied()
    }

    /// Worlds reachable by removing one grain and asking once more; the
    /// ask count saturates at the cap.
    pub fn remove_grain(&self, w: usize) -> Vec<usize> {
        let from = self.worlds[w];
        if from.grains == 0 {
            return vec![];
        }
        let asked = (from.asked + 1).min(self.config.ask_cap);
        self.config
            .sensor
            .readings(from.grains - 1)
            .filter_map(|reading| self.world_index(&SoritesWorld { grains: from.grains - 1, reading, asked }))
            .collect()
    }

    /// Pairs `(w, w')` with `w'` a grain removal from `w`, the heap reported
    /// at `w` and not at `w'`.
    pub fn induction_failure_points(&self) -> Result<Vec<(usize, usize)>, SoritesError> {
        let ext = Evaluator::new(&self.structure).extension(&Formula::report(1, heap()))?;
        let a = AgentId::from_slot(0);
        let mut out = Vec::new();
        for w in 0..self.worlds.len() {
            if !ext.at(w, a) {
                continue;
            }
            for next in self.remove_grain(w) {
                if !ext.at(next, a) {
                    out.push((w, next));
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FailurePair {
    pub from: SoritesWorld,
    pub to: SoritesWorld,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SoritesReport {
    pub threshold_policy: String,
    pub max_grains: i64,
    pub worlds: usize,
    pub failure_pairs: Vec<FailurePair>,
    /// `S(N)` at every world and `~R1 Heap` at every one-grain world.
    pub extremes_ok: bool,
    pub inductive_step_falsified: bool,
    /// At some one-grain world `S(2)` holds while `S(1)` fails.
    pub vacuous_instance_ok: bool,
}

pub fn sorites_report(config: &SoritesConfig) -> Result<SoritesReport, SoritesError> {
    let model = build_sorites_structure(config)?;
    let m = &model.structure;
    let a = AgentId::from_slot(0);
    let mut ev = Evaluator::new(m);
    let top = ev.extension(&s(config.max_grains))?;
    let report_heap = ev.extension(&Formula::report(1, heap()))?;
    let one_grain: Vec<usize> = (0..model.worlds.len()).filter(|&w| model.worlds[w].grains == 1).collect();
    let extremes_ok =
        (0..model.worlds.len()).all(|w| top.at(w, a)) && one_grain.iter().all(|&w| !report_heap.at(w, a));
    let step = ev.extension(&inductive_step(config.max_grains))?;
    let inductive_step_falsified = step.first_failure().is_some();
    let s2 = ev.extension(&s(2))?;
    let s1 = ev.extension(&s(1))?;
    let vacuous_instance_ok = one_grain.iter().any(|&w| s2.at(w, a) && !s1.at(w, a));
    let failure_pairs = model
        .induction_failure_points()?
        .into_iter()
        .map(|(w, v)| FailurePair { from: model.worlds[w], to: model.worlds[v] })
        .collect();
    Ok(SoritesReport {
        threshold_policy: config.policy.to_string(),
        max_grains: config.max_grains,
        worlds: model.worlds.len(),
        failure_pairs,
        extremes_ok,
        inductive_step_falsified,
        vacuous_instance_ok,
    })
}
