//! Seeded random formulas, used by the soundness fuzzer and test corpora.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::formula::{AgentId, Formula};

#[derive(Debug, Clone)]
pub struct PoolParams {
    pub agents: usize,
    pub props: Vec<String>,
    pub max_depth: usize,
}

impl PoolParams {
    pub fn new(agents: usize, props: &[&str], max_depth: usize) -> Self {
        PoolParams {
            agents,
            props: props.iter().map(|s| s.to_string()).collect(),
            max_depth,
        }
    }
}

fn agent<R: Rng>(rng: &mut R, n: usize) -> AgentId {
    AgentId::from_slot(rng.gen_range(0..n))
}

/// A random formula of syntactic height at most `params.max_depth`, using
/// every connective including the surface `|` and `->`.
pub fn random_formula<R: Rng>(rng: &mut R, params: &PoolParams) -> Formula {
    gen(rng, params, params.max_depth)
}

fn leaf<R: Rng>(rng: &mut R, params: &PoolParams) -> Formula {
    match rng.gen_range(0..10) {
        0 => Formula::True,
        1 => Formula::False,
        _ => Formula::Prop(params.props.choose(rng).expect("at least one proposition").clone()),
    }
}

fn gen<R: Rng>(rng: &mut R, params: &PoolParams, depth: usize) -> Formula {
    if depth == 0 || rng.gen_range(0..4) == 0 {
        return leaf(rng, params);
    }
    let d = depth - 1;
    match rng.gen_range(0..7) {
        0 => Formula::not(gen(rng, params, d)),
        1 => Formula::and(gen(rng, params, d), gen(rng, params, d)),
        2 => Formula::or(gen(rng, params, d), gen(rng, params, d)),
        3 => Formula::implies(gen(rng, params, d), gen(rng, params, d)),
        4 => Formula::Report(agent(rng, params.agents), Box::new(gen(rng, params, d))),
        _ => Formula::Def(agent(rng, params.agents), Box::new(gen(rng, params, d))),
    }
}

/// A random Boolean combination of `R_j`/`D_j` formulas.
pub fn random_nec_independent<R: Rng>(rng: &mut R, params: &PoolParams) -> Formula {
    fn go<R: Rng>(rng: &mut R, params: &PoolParams, depth: usize) -> Formula {
        if depth == 0 || rng.gen_range(0..3) == 0 {
            let body = gen(rng, params, params.max_depth.saturating_sub(1));
            let j = agent(rng, params.agents);
            return if rng.gen_bool(0.5) {
                Formula::Report(j, Box::new(body))
            } else {
                Formula::Def(j, Box::new(body))
            };
        }
        match rng.gen_range(0..4) {
            0 => Formula::not(go(rng, params, depth - 1)),
            1 => Formula::and(go(rng, params, depth - 1), go(rng, params, depth - 1)),
            2 => Formula::or(go(rng, params, depth - 1), go(rng, params, depth - 1)),
            _ => Formula::implies(go(rng, params, depth - 1), go(rng, params, depth - 1)),
        }
    }
    go(rng, params, 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::is_nec_agent_independent;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn respects_bounds() {
        let params = PoolParams::new(2, &["p", "q"], 3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let f = random_formula(&mut rng, &params);
            assert!(f.max_agent() <= 2);
            assert!(f.props().iter().all(|p| p == "p" || p == "q"));
            assert!(crate::formula::modal_depth(&f) <= 3);
        }
    }

    #[test]
    fn nec_independent_generator_is_in_class() {
        let params = PoolParams::new(3, &["p"], 2);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..500 {
            assert!(is_nec_agent_independent(&random_nec_independent(&mut rng, &params)));
        }
    }
}
