use std::collections::BTreeSet;

use num_rational::Ratio;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use vague_logic::axioms::{match_axiom, sample_instance, AxiomName};
use vague_logic::checker::{agent_independent_in_model, degree, eval, valid_in_model};
use vague_logic::decision::{find_model, SearchBounds, SearchOptions, SearchOutcome};
use vague_logic::formula::{desugar, is_nec_agent_independent};
use vague_logic::gen::{random_nec_independent, PoolParams};
use vague_logic::parser::{parse, render, render_explicit};
use vague_logic::scenarios::sensor::{SensorMode, SensorModel};
use vague_logic::structure::{random_structure, RandomParams};
use vague_logic::{AgentId, Formula, VagueStructure};

const PROPS: [&str; 3] = ["p", "q", "r"];

fn formula(agents: u32) -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        1 => Just(Formula::True),
        1 => Just(Formula::False),
        6 => prop::sample::select(PROPS.to_vec()).prop_map(Formula::prop),
    ];
    leaf.prop_recursive(4, 24, 2, move |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
            (1..=agents, inner.clone()).prop_map(|(j, a)| Formula::report(j, a)),
            (1..=agents, inner).prop_map(|(j, a)| Formula::def(j, a)),
        ]
    })
}

fn structure(agents: usize, seed: u64, objective_p: bool) -> VagueStructure {
    let mut params = RandomParams::small(agents, &PROPS);
    if objective_p {
        params.objective_props = vec!["p".into()];
    }
    random_structure(&params, seed).expect("parameters are valid")
}

/// Truth at `(w, i)` read straight off the semantic clauses.
fn reference(m: &VagueStructure, w: usize, i: AgentId, f: &Formula) -> bool {
    let worlds = m.worlds();
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Prop(p) => m.valuation()[p][i.slot()][w],
        Formula::Not(a) => !reference(m, w, i, a),
        Formula::And(a, b) => reference(m, w, i, a) && reference(m, w, i, b),
        Formula::Or(a, b) => reference(m, w, i, a) || reference(m, w, i, b),
        Formula::Implies(a, b) => !reference(m, w, i, a) || reference(m, w, i, b),
        Formula::Report(j, a) => (0..worlds.len())
            .filter(|&v| worlds[v].s[j.slot()] == worlds[w].s[j.slot()] && m.is_plausible(*j, v))
            .all(|v| reference(m, v, *j, a)),
        Formula::Def(j, a) => (0..worlds.len())
            .filter(|&v| worlds[v].o == worlds[w].o)
            .all(|v| reference(m, v, *j, a)),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn render_then_parse_is_identity(f in formula(3)) {
        prop_assert_eq!(parse(&render(&f)).unwrap(), f.clone());
        prop_assert_eq!(parse(&render_explicit(&f)).unwrap(), f);
    }

    #[test]
    fn desugar_is_idempotent(f in formula(3)) {
        let once = desugar(&f);
        prop_assert_eq!(desugar(&once), once);
    }

    #[test]
    fn eval_matches_reference(f in formula(2), seed in any::<u64>(), objective in any::<bool>()) {
        let m = structure(2, seed, objective);
        for w in 0..m.world_count() {
            for i in AgentId::all(2) {
                prop_assert_eq!(eval(&m, w, i, &f).unwrap(), reference(&m, w, i, &f));
                prop_assert_eq!(eval(&m, w, i, &desugar(&f)).unwrap(), eval(&m, w, i, &f).unwrap());
            }
        }
    }

    #[test]
    fn necessarily_independent_formulas_are_independent(seed in any::<u64>(), fseed in any::<u64>(), n in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(fseed);
        let f = random_nec_independent(&mut rng, &PoolParams::new(n, &PROPS, 2));
        prop_assert!(is_nec_agent_independent(&f));
        let m = structure(n, seed, false);
        prop_assert!(agent_independent_in_model(&m, &f).unwrap());
    }

    #[test]
    fn axiom_instances_hold_in_every_structure(
        seed in any::<u64>(),
        fseed in any::<u64>(),
        n in 1usize..=3,
        axiom in prop::sample::select(AxiomName::ALL.to_vec()),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(fseed);
        let f = sample_instance(&mut rng, axiom, &PoolParams::new(n, &PROPS, 2));
        prop_assert!(match_axiom(&f, n).contains(&axiom), "{} not matched as {}", render(&f), axiom);
        let m = structure(n, seed, fseed % 2 == 0);
        prop_assert!(valid_in_model(&m, &f).unwrap().is_valid(), "{} fails", render(&f));
    }

    #[test]
    fn degree_complement_law(f in formula(3), seed in any::<u64>(), n in 1usize..=3) {
        prop_assume!(f.max_agent() as usize <= n);
        let m = structure(n, seed, false);
        for w in 0..m.world_count() {
            let d = degree(&m, w, &f).unwrap().value();
            let nd = degree(&m, w, &Formula::not(f.clone())).unwrap().value();
            prop_assert_eq!(nd, Ratio::from_integer(1) - d);
        }
    }

    #[test]
    fn search_witnesses_recheck(f in formula(2)) {
        let bounds = SearchBounds::new(2, 2, 3, 2).unwrap();
        let opts = SearchOptions { budget: 20_000, ..SearchOptions::default() };
        let (outcome, _) = find_model(&f, &bounds, &opts).unwrap();
        if let SearchOutcome::Found(w) = outcome {
            prop_assert!(w.structure.is_valid());
            prop_assert!(eval(&w.structure, w.world, w.agent, &f).unwrap());
        }
    }

    #[test]
    fn single_grain_stability(g in 1i64..=20, d in 0i64..20, n in 1i64..=400) {
        let m = SensorModel::new(g, d.min(g - 1), true, SensorMode::Possibilistic).unwrap();
        let (a, b) = (m.readings(n), m.readings(n - 1));
        let stable = a.end() - b.start() <= 1 && b.end() - a.start() <= 1;
        if 2 * m.delta < g {
            prop_assert!(stable);
        }
    }
}

#[test]
fn random_structures_are_valid_and_seeded() {
    for seed in 0..200 {
        for n in 1..=3 {
            let m = structure(n, seed, seed % 3 == 0);
            assert!(m.is_valid(), "seed {seed} n {n}");
            assert_eq!(m, structure(n, seed, seed % 3 == 0));
        }
    }
    let objective: BTreeSet<String> = ["p".to_string()].into();
    assert_eq!(structure(2, 7, true).objective_props(), &objective);
}
