//! Bounded model search over finite vagueness structures.
//!
//! Frames (world sets) are generated by increasing size as subsets of the
//! cell grid `O × S_1 × … × S_n`, keeping only the lexicographically least
//! representative under relabeling of each sort. For each frame a
//! three-valued DPLL over plausibility and valuation bits looks for a point
//! where the target holds.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{check_agents, Arena, DecisionError, Fid, Node};
use crate::checker::eval;
use crate::formula::{desugar, AgentId, Formula};
use crate::structure::{VagueStructure, World};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SearchBounds {
    pub max_objective: usize,
    pub max_subjective: usize,
    pub max_worlds: usize,
    pub agents: usize,
}

impl SearchBounds {
    pub fn new(max_objective: usize, max_subjective: usize, max_worlds: usize, agents: usize) -> Result<Self, DecisionError> {
        if max_objective == 0 || max_subjective == 0 || max_worlds == 0 || agents == 0 {
            return Err(DecisionError::BadBounds("all bounds must be positive".into()));
        }
        let cells = (max_objective as u128).saturating_mul((max_subjective as u128).saturating_pow(agents as u32));
        if max_worlds as u128 > cells {
            return Err(DecisionError::BadBounds(format!(
                "{max_worlds} worlds do not fit in {cells} cells"
            )));
        }
        Ok(SearchBounds { max_objective, max_subjective, max_worlds, agents })
    }

    /// `|O| ≤ 3`, `|S_i| ≤ 3`, at most 6 worlds.
    pub fn default_for(agents: usize) -> Self {
        SearchBounds::new(3, 3, 6, agents).expect("default bounds are consistent")
    }

    fn cell_count(&self) -> usize {
        self.max_objective * self.max_subjective.pow(self.agents as u32)
    }
}

#[derive(Debug, Clone)]
pub struct SearchOptions {
    pub objective_props: BTreeSet<String>,
    /// Restrict to structures with `P_i = W` for every agent.
    pub full_plausibility: bool,
    /// Cap on frames plus DPLL nodes.
    pub budget: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { objective_props: BTreeSet::new(), full_plausibility: false, budget: super::DEFAULT_SEARCH_BUDGET }
    }
}

#[derive(Debug, Clone)]
pub struct Witness {
    pub structure: VagueStructure,
    pub world: usize,
    pub agent: AgentId,
}

#[derive(Debug, Clone)]
pub enum SearchOutcome {
    Found(Box<Witness>),
    NoneWithinBounds,
    BudgetExhausted,
}

impl SearchOutcome {
    pub fn witness(&self) -> Option<&Witness> {
        match self {
            SearchOutcome::Found(w) => Some(w),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    pub frames: u64,
    pub units: u64,
}

struct OutOfBudget;

struct Grid {
    n: usize,
    o: usize,
    s: usize,
    /// Cell maps of every non-identity relabeling.
    actions: Vec<Vec<usize>>,
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for len in 1..=k {
        out = out
            .into_iter()
            .flat_map(|p: Vec<usize>| {
                (0..len).map(move |pos| {
                    let mut q = p.clone();
                    q.insert(pos, len - 1);
                    q
                })
            })
            .collect();
    }
    out.sort();
    out
}

impl Grid {
    fn new(b: &SearchBounds) -> Grid {
        let mut g = Grid { n: b.agents, o: b.max_objective, s: b.max_subjective, actions: vec![] };
        let po = permutations(g.o);
        let ps = permutations(g.s);
        let mut choice = vec![0usize; g.n + 1];
        loop {
            let table: Vec<usize> = (0..b.cell_count())
                .map(|c| {
                    let mut coords = g.coords(c);
                    coords[0] = po[choice[0]][coords[0]];
                    for k in 1..=g.n {
                        coords[k] = ps[choice[k]][coords[k]];
                    }
                    g.cell(&coords)
                })
                .collect();
            if table.iter().enumerate().any(|(i, &c)| i != c) {
                g.actions.push(table);
            }
            let mut k = 0;
            loop {
                if k > g.n {
                    return g;
                }
                choice[k] += 1;
                let limit = if k == 0 { po.len() } else { ps.len() };
                if choice[k] < limit {
                    break;
                }
                choice[k] = 0;
                k += 1;
            }
        }
    }

    fn coords(&self, mut c: usize) -> Vec<usize> {
        let mut out = vec![0; self.n + 1];
        for k in (1..=self.n).rev() {
            out[k] = c % self.s;
            c /= self.s;
        }
        out[0] = c;
        out
    }

    fn cell(&self, coords: &[usize]) -> usize {
        coords[1..].iter().fold(coords[0], |acc, &x| acc * self.s + x)
    }

    fn is_canonical(&self, set: &[usize]) -> bool {
        let mut image = vec![0; set.len()];
        self.actions.iter().all(|t| {
            for (slot, &c) in image.iter_mut().zip(set) {
                *slot = t[c];
            }
            image.sort_unstable();
            image.as_slice() >= set
        })
    }
}

const F: u8 = 0;
const T: u8 = 1;
const U: u8 = 2;

fn and3(a: u8, b: u8) -> u8 {
    if a == F || b == F {
        F
    } else if a == T && b == T {
        T
    } else {
        U
    }
}

fn not3(a: u8) -> u8 {
    if a == U {
        U
    } else {
        1 - a
    }
}

/// One frame and its propositional encoding.
struct Frame<'a> {
    arena: &'a Arena,
    root: Fid,
    n: usize,
    worlds: Vec<Vec<usize>>,
    /// Variable of `P_j(w)`, or `None` when fixed true.
    pvar: Vec<Vec<Option<usize>>>,
    /// Variable of prop `p` at `(w, i)`: `valvar[p][i][w]`.
    valvar: Vec<Vec<Vec<usize>>>,
    var_count: usize,
    p_count: usize,
    rclass: Vec<Vec<Vec<usize>>>,
    oclass: Vec<Vec<usize>>,
}

impl<'a> Frame<'a> {
    fn new(arena: &'a Arena, root: Fid, grid: &Grid, cells: &[usize], full_plausibility: bool) -> Frame<'a> {
        let n = grid.n;
        let worlds: Vec<Vec<usize>> = cells.iter().map(|&c| grid.coords(c)).collect();
        let k = worlds.len();
        let mut next = 0;
        let pvar: Vec<Vec<Option<usize>>> = (0..n)
            .map(|_| {
                (0..k)
                    .map(|_| {
                        (!full_plausibility).then(|| {
                            next += 1;
                            next - 1
                        })
                    })
                    .collect()
            })
            .collect();
        let p_count = next;
        let mut valvar = Vec::new();
        for pid in 0..arena.props.len() {
            let mut per_agent = vec![vec![0; k]; n];
            if arena.objective[pid] {
                let mut by_o: BTreeMap<usize, usize> = BTreeMap::new();
                for w in 0..k {
                    let v = *by_o.entry(worlds[w][0]).or_insert_with(|| {
                        next += 1;
                        next - 1
                    });
                    for row in per_agent.iter_mut() {
                        row[w] = v;
                    }
                }
            } else {
                for (i, row) in per_agent.iter_mut().enumerate() {
                    let mut by_class: BTreeMap<(usize, usize), usize> = BTreeMap::new();
                    for w in 0..k {
                        row[w] = *by_class.entry((worlds[w][0], worlds[w][1 + i])).or_insert_with(|| {
                            next += 1;
                            next - 1
                        });
                    }
                }
            }
            valvar.push(per_agent);
        }
        let rclass = (0..n)
            .map(|j| (0..k).map(|w| (0..k).filter(|&v| worlds[v][1 + j] == worlds[w][1 + j]).collect()).collect())
            .collect();
        let oclass = (0..k).map(|w| (0..k).filter(|&v| worlds[v][0] == worlds[w][0]).collect()).collect();
        Frame { arena, root, n, worlds, pvar, valvar, var_count: next, p_count, rclass, oclass }
    }

    fn plaus(&self, assign: &[u8], j: usize, w: usize) -> u8 {
        self.pvar[j][w].map_or(T, |v| assign[v])
    }

    /// Kleene extension of the root over all points, indexed `w * n + i`.
    fn eval(&self, assign: &[u8]) -> Vec<u8> {
        let n = self.n;
        let k = self.worlds.len();
        let points = k * n;
        let mut ext: Vec<Vec<u8>> = Vec::with_capacity(self.root as usize + 1);
        for node in &self.arena.nodes[..=self.root as usize] {
            let row: Vec<u8> = match *node {
                Node::True => vec![T; points],
                Node::False => vec![F; points],
                Node::Prop(p) => (0..points).map(|x| assign[self.valvar[p as usize][x % n][x / n]]).collect(),
                Node::Not(a) => ext[a as usize].iter().map(|&x| not3(x)).collect(),
                Node::And(a, b) => ext[a as usize].iter().zip(&ext[b as usize]).map(|(&x, &y)| and3(x, y)).collect(),
                Node::Report(j, a) => {
                    let j = j as usize;
                    let body = &ext[a as usize];
                    let per_world: Vec<u8> = (0..k)
                        .map(|w| {
                            self.rclass[j][w].iter().fold(T, |acc, &v| {
                                let implied = not3(and3(self.plaus(assign, j, v), not3(body[v * n + j])));
                                and3(acc, implied)
                            })
                        })
                        .collect();
                    (0..points).map(|x| per_world[x / n]).collect()
                }
                Node::Def(j, a) => {
                    let j = j as usize;
                    let body = &ext[a as usize];
                    let per_world: Vec<u8> =
                        (0..k).map(|w| self.oclass[w].iter().fold(T, |acc, &v| and3(acc, body[v * n + j]))).collect();
                    (0..points).map(|x| per_world[x / n]).collect()
                }
            };
            ext.push(row);
        }
        ext.swap_remove(self.root as usize)
    }

    fn serial_violated(&self, assign: &[u8]) -> bool {
        (0..self.n).any(|j| {
            (0..self.worlds.len()).any(|w| self.rclass[j][w].iter().all(|&v| self.plaus(assign, j, v) == F))
        })
    }

    fn dpll(&self, assign: &mut Vec<u8>, next: usize, units: &mut u64, budget: u64) -> Result<Option<usize>, OutOfBudget> {
        *units += 1;
        if *units > budget {
            return Err(OutOfBudget);
        }
        if self.serial_violated(assign) {
            return Ok(None);
        }
        let ext = self.eval(assign);
        if ext.iter().all(|&x| x == F) {
            return Ok(None);
        }
        if ext.contains(&T) {
            for (v, slot) in assign.iter_mut().enumerate() {
                if *slot == U {
                    *slot = if v < self.p_count { T } else { F };
                }
            }
            let full = self.eval(assign);
            return Ok(full.iter().position(|&x| x == T));
        }
        debug_assert!(next < self.var_count, "complete assignments are two-valued");
        let order = if next < self.p_count { [T, F] } else { [F, T] };
        for value in order {
            assign[next] = value;
            if let Some(point) = self.dpll(assign, next + 1, units, budget)? {
                return Ok(Some(point));
            }
        }
        assign[next] = U;
        Ok(None)
    }

    fn structure(&self, assign: &[u8], objective: &BTreeSet<String>) -> VagueStructure {
        let n = self.n;
        let compact = |slot: usize| -> BTreeMap<usize, usize> {
            let used: BTreeSet<usize> = self.worlds.iter().map(|w| w[slot]).collect();
            used.into_iter().enumerate().map(|(i, v)| (v, i)).collect()
        };
        let omap = compact(0);
        let smaps: Vec<_> = (1..=n).map(compact).collect();
        let worlds: Vec<World> = self
            .worlds
            .iter()
            .map(|w| World::new(omap[&w[0]], (0..n).map(|i| smaps[i][&w[1 + i]]).collect()))
            .collect();
        let plausible = (0..n).map(|j| (0..worlds.len()).map(|w| self.plaus(assign, j, w) == T).collect()).collect();
        let valuation = self
            .arena
            .props
            .iter()
            .enumerate()
            .map(|(pid, name)| {
                let ext = (0..n)
                    .map(|i| (0..worlds.len()).map(|w| assign[self.valvar[pid][i][w]] == T).collect())
                    .collect();
                (name.clone(), ext)
            })
            .collect();
        let objective_props = self.arena.props.iter().filter(|p| objective.contains(*p)).cloned().collect();
        VagueStructure::new(
            n,
            (0..omap.len()).map(|o| format!("o{o}")).collect(),
            smaps.iter().map(|m| (0..m.len()).map(|s| format!("s{s}")).collect()).collect(),
            worlds,
            plausible,
            valuation,
            objective_props,
        )
        .expect("frames have distinct in-range cells")
    }
}

/// First model of `f` within `bounds`: fewest worlds, then canonical frame
/// order, then search order over plausibility and valuation bits. The point
/// is the first in (world, agent) order.
pub fn find_model(
    f: &Formula,
    bounds: &SearchBounds,
    opts: &SearchOptions,
) -> Result<(SearchOutcome, SearchStats), DecisionError> {
    check_agents(f, bounds.agents)?;
    if opts.budget == 0 {
        return Err(DecisionError::ZeroBudget);
    }
    let mut arena = Arena::new(&opts.objective_props);
    let root = arena.intern(&desugar(f));
    let grid = Grid::new(bounds);
    let cells = bounds.cell_count();
    let mut stats = SearchStats::default();

    let mut level: Vec<Vec<usize>> = vec![vec![]];
    for _size in 1..=bounds.max_worlds {
        let mut next_level = Vec::new();
        for set in &level {
            let start = set.last().map_or(0, |&c| c + 1);
            for c in start..cells {
                stats.units += 1;
                if stats.units > opts.budget {
                    return Ok((SearchOutcome::BudgetExhausted, stats));
                }
                let mut cand = set.clone();
                cand.push(c);
                if grid.is_canonical(&cand) {
                    next_level.push(cand);
                }
            }
        }
        for cand in &next_level {
            stats.frames += 1;
            let frame = Frame::new(&arena, root, &grid, cand, opts.full_plausibility);
            let mut assign = vec![U; frame.var_count];
            match frame.dpll(&mut assign, 0, &mut stats.units, opts.budget) {
                Err(OutOfBudget) => return Ok((SearchOutcome::BudgetExhausted, stats)),
                Ok(None) => {}
                Ok(Some(point)) => {
                    let structure = frame.structure(&assign, &opts.objective_props);
                    let (world, agent) = (point / bounds.agents, AgentId::from_slot(point % bounds.agents));
                    assert!(structure.is_valid(), "search produced an invalid structure");
                    assert!(
                        eval(&structure, world, agent, f).expect("witness covers the formula"),
                        "search witness fails re-checking"
                    );
                    return Ok((SearchOutcome::Found(Box::new(Witness { structure, world, agent })), stats));
                }
            }
        }
        level = next_level;
    }
    Ok((SearchOutcome::NoneWithinBounds, stats))
}

/// A model of `~f`.
pub fn find_countermodel(
    f: &Formula,
    bounds: &SearchBounds,
    opts: &SearchOptions,
) -> Result<(SearchOutcome, SearchStats), DecisionError> {
    find_model(&Formula::not(f.clone()), bounds, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    fn counter(text: &str, b: SearchBounds) -> SearchOutcome {
        find_countermodel(&parse(text).unwrap(), &b, &SearchOptions::default()).unwrap().0
    }

    #[test]
    fn canonical_frames_are_orbit_representatives() {
        let b = SearchBounds::new(2, 2, 4, 1).unwrap();
        let g = Grid::new(&b);
        assert_eq!(g.actions.len(), 3);
        assert!(g.is_canonical(&[0]));
        assert!(!g.is_canonical(&[3]));
        assert!(g.is_canonical(&[0, 3]));
        assert!(!g.is_canonical(&[1, 2]));
    }

    #[test]
    fn one_world_countermodel_for_cross_agent_definiteness() {
        let w = match counter("D1 p -> p", SearchBounds::new(1, 1, 1, 2).unwrap()) {
            SearchOutcome::Found(w) => w,
            other => panic!("{other:?}"),
        };
        assert_eq!(w.structure.world_count(), 1);
        assert_eq!((w.world, w.agent.get()), (0, 2));
        let p = &w.structure.valuation()["p"];
        assert_eq!(p, &vec![vec![true], vec![false]]);
    }

    #[test]
    fn single_agent_definiteness_has_no_countermodel() {
        assert!(matches!(counter("D1 p -> p", SearchBounds::default_for(1)), SearchOutcome::NoneWithinBounds));
    }

    #[test]
    fn vagueness_witness_has_two_worlds() {
        let w = match counter("p -> D1 R1 p", SearchBounds::default_for(1)) {
            SearchOutcome::Found(w) => w,
            other => panic!("{other:?}"),
        };
        assert_eq!(w.structure.world_count(), 2);
        let ws = w.structure.worlds();
        assert_eq!(ws[0].o, ws[1].o);
        assert_ne!(ws[0].s, ws[1].s);
    }

    #[test]
    fn full_plausibility_blocks_conflicting_objective_reports() {
        let opts = SearchOptions {
            objective_props: ["p".to_string()].into(),
            full_plausibility: true,
            budget: 10_000_000,
        };
        let f = parse("R1 p & R2 ~p").unwrap();
        let (out, stats) = find_model(&f, &SearchBounds::default_for(2), &opts).unwrap();
        assert!(matches!(out, SearchOutcome::NoneWithinBounds), "{stats:?}");
    }

    #[test]
    fn budget_is_reported() {
        let opts = SearchOptions { budget: 3, ..SearchOptions::default() };
        let (out, _) = find_model(&parse("R1 p & ~p & R1 ~q & q").unwrap(), &SearchBounds::default_for(1), &opts).unwrap();
        assert!(matches!(out, SearchOutcome::BudgetExhausted));
    }

    #[test]
    fn bounds_are_checked() {
        assert!(SearchBounds::new(1, 1, 2, 1).is_err());
        assert!(SearchBounds::new(0, 1, 1, 1).is_err());
    }
}
