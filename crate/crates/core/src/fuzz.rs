//! Soundness fuzzing: sampled axiom instances must hold at every point of
//! sampled valid structures.

use std::collections::BTreeMap;
use std::thread;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::axioms::{match_axiom, sample_instance, AxiomName};
use crate::checker::{valid_in_model, EvalPoint, ModelValidity};
use crate::gen::PoolParams;
use crate::parser::render;
use crate::structure::{random_structure, RandomParams, StructureJson};

#[derive(Debug, Clone)]
pub struct FuzzParams {
    pub max_agents: usize,
    pub props: Vec<String>,
    pub max_depth: usize,
    pub max_objective: usize,
    pub max_subjective: usize,
    /// Worker threads; 0 picks the available parallelism.
    pub threads: usize,
}

impl Default for FuzzParams {
    fn default() -> Self {
        FuzzParams {
            max_agents: 3,
            props: vec!["p".into(), "q".into(), "r".into()],
            max_depth: 3,
            max_objective: 3,
            max_subjective: 2,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FuzzViolation {
    /// The sampler produced a formula the matcher does not accept.
    MatcherRejected { trial: u64, axiom: AxiomName, agents: usize, formula: String },
    /// An accepted instance fails somewhere in a valid structure.
    NotValid {
        trial: u64,
        axiom: AxiomName,
        formula: String,
        structure: StructureJson,
        point: EvalPoint,
    },
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct FuzzReport {
    pub trials: u64,
    pub seed: u64,
    pub per_axiom: BTreeMap<AxiomName, u64>,
    pub per_agents: BTreeMap<usize, u64>,
    pub violations: Vec<FuzzViolation>,
}

/// Seed of one trial, a function of the master seed and trial index only.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    // SplitMix64 finaliser over the combined input.
    let mut z = master ^ trial.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Outcome {
    axiom: AxiomName,
    agents: usize,
    violation: Option<FuzzViolation>,
}

fn run_trial(trial: u64, master: u64, params: &FuzzParams) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(master, trial));
    let n = rng.gen_range(1..=params.max_agents);
    let axiom = AxiomName::ALL[rng.gen_range(0..AxiomName::ALL.len())];
    let props: Vec<&str> = params.props.iter().map(String::as_str).collect();
    let pool = PoolParams::new(n, &props, params.max_depth);
    let formula = sample_instance(&mut rng, axiom, &pool);

    if !match_axiom(&formula, n).contains(&axiom) {
        return Outcome {
            axiom,
            agents: n,
            violation: Some(FuzzViolation::MatcherRejected { trial, axiom, agents: n, formula: render(&formula) }),
        };
    }

    let mut sp = RandomParams::small(n, &props);
    sp.max_objective = params.max_objective;
    sp.max_subjective = params.max_subjective;
    sp.world_density = rng.gen_range(0.3..=1.0);
    sp.plausible_density = rng.gen_range(0.0..=1.0);
    if rng.gen_bool(0.5) {
        sp.objective_props = vec![params.props[0].clone()];
    }
    let m = random_structure(&sp, rng.gen()).expect("fuzz parameters are in range");
    let violation = match valid_in_model(&m, &formula).expect("formula fits the structure") {
        ModelValidity::Valid => None,
        ModelValidity::CounterWitness(point) => Some(FuzzViolation::NotValid {
            trial,
            axiom,
            formula: render(&formula),
            structure: m.to_json(),
            point,
        }),
    };
    Outcome { axiom, agents: n, violation }
}

/// Runs `trials` independent trials; the report does not depend on the
/// thread count.
pub fn soundness_fuzz(trials: u64, seed: u64, params: &FuzzParams) -> FuzzReport {
    assert!(trials > 0, "trials must be positive");
    let threads = match params.threads {
        0 => thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        t => t,
    }
    .min(trials as usize)
    .max(1);

    let mut outcomes: Vec<(u64, Outcome)> = thread::scope(|scope| {
        let handles: Vec<_> = (0..threads as u64)
            .map(|worker| {
                scope.spawn(move || {
                    (worker..trials)
                        .step_by(threads)
                        .map(|t| (t, run_trial(t, seed, params)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("fuzz worker panicked")).collect()
    });
    outcomes.sort_by_key(|(t, _)| *t);

    let mut report = FuzzReport {
        trials,
        seed,
        per_axiom: BTreeMap::new(),
        per_agents: BTreeMap::new(),
        violations: Vec::new(),
    };
    for (_, o) in outcomes {
        *report.per_axiom.entry(o.axiom).or_default() += 1;
        *report.per_agents.entry(o.agents).or_default() += 1;
        report.violations.extend(o.violation);
    }
    report
}
