//! The height model: worlds are pairs `(t, t')` of an actual height and an
//! estimate at most `α/2` apart, with the clarity operator `C` taken over
//! the metric `d((t,t'),(u,u')) = |t - u|`.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Ratio;
use serde::Serialize;
use thiserror::Error;

use crate::checker::{EvalError, Evaluator};
use crate::formula::{AgentId, Formula};
use crate::structure::{VagueStructure, Violation, World};

pub type Height = Ratio<i64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WilliamsonConfig {
    pub threshold: Height,
    pub alpha: Height,
    pub step: Height,
    pub lo: Height,
    pub hi: Height,
}

impl Default for WilliamsonConfig {
    fn default() -> Self {
        WilliamsonConfig {
            threshold: Ratio::from_integer(170),
            alpha: Ratio::from_integer(2),
            step: Ratio::new(1, 2),
            lo: Ratio::from_integer(160),
            hi: Ratio::from_integer(180),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WilliamsonError {
    #[error("alpha and the grid step must be positive")]
    NonPositive,
    #[error("grid step {step} does not divide alpha/2 = {half}")]
    StepDoesNotDivide { step: String, half: String },
    #[error("grid range [{lo}, {hi}] is empty or not a whole number of steps")]
    BadRange { lo: String, hi: String },
    #[error("grid has {0} points; the limit is 100000")]
    TooLarge(i64),
    #[error("`{0}` is not a decimal number")]
    BadNumber(String),
    #[error("formula `{0}` is not agent-independent in this structure")]
    NotAgentIndependent(String),
    #[error("formula `{0}` depends on more than the objective state")]
    NotObjective(String),
    #[error("built structure is invalid: {0:?}")]
    Invalid(Vec<Violation>),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Parses `170`, `-3`, `0.5` or `341/2` exactly.
pub fn parse_height(s: &str) -> Result<Height, WilliamsonError> {
    let bad = || WilliamsonError::BadNumber(s.to_string());
    let t = s.trim();
    if let Some((n, d)) = t.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| bad())?;
        let d: i64 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(Ratio::new(n, d));
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) || frac.len() > 12 {
        return Err(bad());
    }
    let digits: i64 = format!("{int}{frac}").parse().map_err(|_| bad())?;
    let v = Ratio::new(digits, 10i64.pow(frac.len() as u32));
    Ok(if neg { -v } else { v })
}

/// Decimal rendering when it terminates within six places, `a/b` otherwise.
pub fn format_height(h: &Height) -> String {
    for places in 0..=6u32 {
        let scaled = *h * Ratio::from_integer(10i64.pow(places));
        if scaled.is_integer() {
            let v = scaled.to_integer();
            if places == 0 {
                return v.to_string();
            }
            let sign = if v < 0 { "-" } else { "" };
            let v = v.unsigned_abs();
            let unit = 10u64.pow(places);
            return format!("{sign}{}.{:0width$}", v / unit, v % unit, width = places as usize);
        }
    }
    h.to_string()
}

impl WilliamsonConfig {
    fn grid(&self) -> Result<Vec<Height>, WilliamsonError> {
        let zero = Ratio::from_integer(0);
        if self.alpha <= zero || self.step <= zero {
            return Err(WilliamsonError::NonPositive);
        }
        let half = self.alpha / 2;
        if !(half / self.step).is_integer() {
            return Err(WilliamsonError::StepDoesNotDivide {
                step: format_height(&self.step),
                half: format_height(&half),
            });
        }
        let span = (self.hi - self.lo) / self.step;
        if self.hi < self.lo || !span.is_integer() {
            return Err(WilliamsonError::BadRange { lo: format_height(&self.lo), hi: format_height(&self.hi) });
        }
        let count = span.to_integer() + 1;
        if count > 100_000 {
            return Err(WilliamsonError::TooLarge(count));
        }
        Ok((0..count).map(|k| self.lo + self.step * k).collect())
    }
}

pub struct WilliamsonModel {
    pub config: WilliamsonConfig,
    pub structure: VagueStructure,
    /// `(t, t')` per world.
    pub points: Vec<(Height, Height)>,
}

fn gap(a: Height, b: Height) -> Height {
    if a >= b { a - b } else { b - a }
}

pub fn tall() -> Formula {
    Formula::prop("Tall")
}

pub fn build_williamson_model(config: &WilliamsonConfig) -> Result<WilliamsonModel, WilliamsonError> {
    let grid = config.grid()?;
    let half = config.alpha / 2;
    let mut points = Vec::new();
    let mut coords = Vec::new();
    for (i, &t) in grid.iter().enumerate() {
        for (k, &t2) in grid.iter().enumerate() {
            if gap(t, t2) <= half {
                points.push((t, t2));
                coords.push(World::new(i, vec![k]));
            }
        }
    }
    let labels: Vec<String> = grid.iter().map(format_height).collect();
    let mut valuation = BTreeMap::new();
    valuation.insert("Tall".to_string(), vec![points.iter().map(|(t, _)| *t >= config.threshold).collect()]);
    let structure = VagueStructure::new(
        1,
        labels.clone(),
        vec![labels],
        coords,
        vec![vec![true; points.len()]],
        valuation,
        BTreeSet::from(["Tall".to_string()]),
    )
    .expect("grid coordinates are in range and distinct");
    let violations = structure.validate();
    if !violations.is_empty() {
        return Err(WilliamsonError::Invalid(violations));
    }
    Ok(WilliamsonModel { config: *config, structure, points })
}

impl WilliamsonModel {
    pub fn d(&self, a: usize, b: usize) -> Height {
        gap(self.points[a].0, self.points[b].0)
    }

    /// The α-ball around the world lies inside the grid.
    pub fn is_interior(&self, w: usize) -> bool {
        let t = self.points[w].0;
        t - self.config.alpha >= self.config.lo && t + self.config.alpha <= self.config.hi
    }

    fn require_independent(&self, f: &Formula) -> Result<Vec<bool>, WilliamsonError> {
        let ext = Evaluator::new(&self.structure).extension(f)?;
        // One agent: every formula is agent-independent, kept for the contract.
        let n = self.structure.agents();
        let bits: Vec<bool> = (0..self.points.len()).map(|w| ext.at(w, AgentId::from_slot(0))).collect();
        if !(0..self.points.len()).all(|w| AgentId::all(n).all(|i| ext.at(w, i) == bits[w])) {
            return Err(WilliamsonError::NotAgentIndependent(crate::parser::render(f)));
        }
        Ok(bits)
    }

    fn c_extension(&self, bits: &[bool]) -> Vec<bool> {
        let alpha = self.config.alpha;
        (0..self.points.len())
            .map(|w| (0..self.points.len()).all(|v| self.d(w, v) > alpha || bits[v]))
            .collect()
    }

    pub fn c_eval(&self, w: usize, f: &Formula) -> Result<bool, WilliamsonError> {
        let bits = self.require_independent(f)?;
        Ok(self.c_extension(&bits)[w])
    }

    pub fn check_c_dr_equivalence(&self, f: &Formula) -> Result<EquivalenceCheck, WilliamsonError> {
        let bits = self.require_independent(f)?;
        let objective = self.structure.worlds();
        for a in 0..bits.len() {
            for b in a + 1..bits.len() {
                if objective[a].o == objective[b].o && bits[a] != bits[b] {
                    return Err(WilliamsonError::NotObjective(crate::parser::render(f)));
                }
            }
        }
        let c = self.c_extension(&bits);
        let dr = Evaluator::new(&self.structure).extension(&Formula::def(1, Formula::report(1, f.clone())))?;
        let mut check = EquivalenceCheck::default();
        for w in 0..bits.len() {
            let agree = c[w] == dr.at(w, AgentId::from_slot(0));
            if self.is_interior(w) {
                check.interior += 1;
                if !agree {
                    check.interior_counterexamples.push(w);
                }
            } else {
                check.boundary += 1;
                if !agree {
                    check.boundary_counterexamples.push(w);
                }
            }
        }
        Ok(check)
    }

    /// `{u : ∃u' (u,u') ∈ W, |t-u| ≤ α}` against
    /// `{u : ∃u' (u,u') ∈ W, |t-u'| ≤ α/2}` at every interior `t`.
    pub fn set_identity_holds(&self) -> bool {
        let alpha = self.config.alpha;
        let heights: BTreeSet<Height> = self.points.iter().map(|p| p.0).collect();
        heights
            .iter()
            .filter(|&&t| t - alpha >= self.config.lo && t + alpha <= self.config.hi)
            .all(|&t| {
                let near: BTreeSet<Height> =
                    self.points.iter().filter(|(u, _)| gap(t, *u) <= alpha).map(|p| p.0).collect();
                let via: BTreeSet<Height> =
                    self.points.iter().filter(|(_, u2)| gap(t, *u2) <= alpha / 2).map(|p| p.0).collect();
                near == via
            })
    }

    pub fn metric_report(&self) -> MetricReport {
        let n = self.points.len();
        let zero = Ratio::from_integer(0);
        let mut r = MetricReport { symmetric: true, triangle: true, self_distance_zero: true, zero_distance_distinct_pairs: 0 };
        for a in 0..n {
            r.self_distance_zero &= self.d(a, a) == zero;
            for b in 0..n {
                let dab = self.d(a, b);
                r.symmetric &= dab == self.d(b, a);
                if a < b && dab == zero {
                    r.zero_distance_distinct_pairs += 1;
                }
            }
        }
        // Distances depend on heights only, so the triangle check runs on those.
        let heights: Vec<Height> = self.points.iter().map(|p| p.0).collect::<BTreeSet<_>>().into_iter().collect();
        for &x in &heights {
            for &y in &heights {
                for &z in &heights {
                    r.triangle &= gap(x, z) <= gap(x, y) + gap(y, z);
                }
            }
        }
        r
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EquivalenceCheck {
    pub interior: usize,
    pub boundary: usize,
    pub interior_counterexamples: Vec<usize>,
    pub boundary_counterexamples: Vec<usize>,
}

impl EquivalenceCheck {
    pub fn interior_ok(&self) -> bool {
        self.interior_counterexamples.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MetricReport {
    pub symmetric: bool,
    pub triangle: bool,
    pub self_distance_zero: bool,
    /// Distinct worlds sharing a height; nonzero means `d` is only a
    /// pseudometric.
    pub zero_distance_distinct_pairs: usize,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct WorldPoint {
    pub world: usize,
    pub t: String,
    pub estimate: String,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DrThreshold {
    /// Least height whose worlds all satisfy `D1 R1 Tall`.
    pub observed: Option<String>,
    pub expected: String,
    /// `D1 R1 Tall` holds exactly when `t ≥ t* + α` on interior worlds.
    pub law_holds_on_interior: bool,
    pub law_holds_everywhere: bool,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct WilliamsonReport {
    pub threshold: String,
    pub alpha: String,
    pub step: String,
    pub lo: String,
    pub hi: String,
    pub worlds: usize,
    pub interior_worlds: usize,
    pub boundary_worlds: usize,
    pub equivalence_ok: bool,
    pub interior_counterexamples: Vec<WorldPoint>,
    pub boundary_exceptions: Vec<WorldPoint>,
    pub dr_threshold: DrThreshold,
    pub set_identity_ok: bool,
    pub metric: MetricReport,
}

pub fn williamson_report(config: &WilliamsonConfig) -> Result<WilliamsonReport, WilliamsonError> {
    let model = build_williamson_model(config)?;
    let check = model.check_c_dr_equivalence(&tall())?;
    let point = |w: usize| WorldPoint {
        world: w,
        t: format_height(&model.points[w].0),
        estimate: format_height(&model.points[w].1),
    };
    let dr = Evaluator::new(&model.structure).extension(&Formula::def(1, Formula::report(1, tall())))?;
    let a = AgentId::from_slot(0);
    let bound = config.threshold + config.alpha;
    let law = |w: usize| dr.at(w, a) == (model.points[w].0 >= bound);
    let all: Vec<usize> = (0..model.points.len()).collect();
    let observed = model
        .points
        .iter()
        .map(|p| p.0)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .find(|&t| all.iter().filter(|&&w| model.points[w].0 >= t).all(|&w| dr.at(w, a)));
    Ok(WilliamsonReport {
        threshold: format_height(&config.threshold),
        alpha: format_height(&config.alpha),
        step: format_height(&config.step),
        lo: format_height(&config.lo),
        hi: format_height(&config.hi),
        worlds: model.points.len(),
        interior_worlds: check.interior,
        boundary_worlds: check.boundary,
        equivalence_ok: check.interior_ok(),
        interior_counterexamples: check.interior_counterexamples.iter().map(|&w| point(w)).collect(),
        boundary_exceptions: check.boundary_counterexamples.iter().map(|&w| point(w)).collect(),
        dr_threshold: DrThreshold {
            observed: observed.map(|t| format_height(&t)),
            expected: format_height(&bound),
            law_holds_on_interior: all.iter().filter(|&&w| model.is_interior(w)).all(|&w| law(w)),
            law_holds_everywhere: all.iter().all(|&w| law(w)),
        },
        set_identity_ok: model.set_identity_holds(),
        metric: model.metric_report(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checker::eval;
    use crate::parser::parse;

    fn h(s: &str) -> Height {
        parse_height(s).unwrap()
    }

    fn world_at(m: &WilliamsonModel, t: &str) -> usize {
        let t = h(t);
        m.points.iter().position(|&(a, b)| a == t && b == t).unwrap()
    }

    #[test]
    fn decimal_heights() {
        assert_eq!(h("0.5"), Ratio::new(1, 2));
        assert_eq!(h("-1.25"), Ratio::new(-5, 4));
        assert_eq!(h("341/2"), Ratio::new(341, 2));
        assert!(parse_height("1.2.3").is_err());
        assert!(parse_height("").is_err());
        assert_eq!(format_height(&h("170.5")), "170.5");
        assert_eq!(format_height(&h("-0.25")), "-0.25");
        assert_eq!(format_height(&Ratio::new(1, 3)), "1/3");
    }

    #[test]
    fn dr_tall_threshold() {
        let m = build_williamson_model(&WilliamsonConfig::default()).unwrap();
        let dr = Formula::def(1, Formula::report(1, tall()));
        let a = AgentId::from_slot(0);
        assert!(eval(&m.structure, world_at(&m, "172"), a, &dr).unwrap());
        assert!(!eval(&m.structure, world_at(&m, "171.5"), a, &dr).unwrap());
    }

    #[test]
    fn c_eval_examples() {
        let m = build_williamson_model(&WilliamsonConfig::default()).unwrap();
        assert!((0..m.points.len()).all(|w| m.c_eval(w, &Formula::True).unwrap()));
        assert!(m.c_eval(world_at(&m, "172"), &tall()).unwrap());
        assert!(!m.c_eval(world_at(&m, "170"), &tall()).unwrap());
    }

    #[test]
    fn equivalence_on_full_and_truncated_grids() {
        let r = williamson_report(&WilliamsonConfig::default()).unwrap();
        assert!(r.equivalence_ok && r.set_identity_ok);
        assert!(r.dr_threshold.law_holds_on_interior);
        assert_eq!(r.dr_threshold.observed.as_deref(), Some("172"));
        assert!(r.metric.symmetric && r.metric.triangle && r.metric.self_distance_zero);
        assert!(r.metric.zero_distance_distinct_pairs > 0);

        let cut = WilliamsonConfig { lo: h("169"), hi: h("173"), ..WilliamsonConfig::default() };
        let r = williamson_report(&cut).unwrap();
        assert!(r.equivalence_ok);
        assert!(r.boundary_worlds > 0);
        assert!(r.boundary_exceptions.is_empty());
    }

    #[test]
    fn contradiction_is_trivially_equivalent() {
        let m = build_williamson_model(&WilliamsonConfig::default()).unwrap();
        let check = m.check_c_dr_equivalence(&parse("Tall & ~Tall").unwrap()).unwrap();
        assert!(check.interior_ok() && check.boundary_counterexamples.is_empty());
    }

    #[test]
    fn subjective_formulas_are_rejected() {
        let m = build_williamson_model(&WilliamsonConfig::default()).unwrap();
        let f = Formula::report(1, tall());
        assert!(matches!(m.check_c_dr_equivalence(&f), Err(WilliamsonError::NotObjective(_))));
    }

    #[test]
    fn bad_grids() {
        let odd = WilliamsonConfig { step: h("0.3"), ..WilliamsonConfig::default() };
        assert!(matches!(build_williamson_model(&odd), Err(WilliamsonError::StepDoesNotDivide { .. })));
        let flipped = WilliamsonConfig { lo: h("180"), hi: h("160"), ..WilliamsonConfig::default() };
        assert!(matches!(build_williamson_model(&flipped), Err(WilliamsonError::BadRange { .. })));
    }
}
