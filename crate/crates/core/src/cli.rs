//! The `vl` command line. Every successful invocation writes one JSON
//! document to stdout; diagnostics go to stderr.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::axioms::{check_proof, Proof};
use crate::checker::{degree, eval, valid_in_model, ModelValidity};
use crate::decision::{classify, ClassifyOptions, DecisionError, Mode, SearchBounds, VerdictKind};
use crate::formula::{is_nec_agent_independent, modal_depth, AgentId, Formula};
use crate::fuzz::{soundness_fuzz, FuzzParams};
use crate::parser::{parse, parse_corpus, render, render_explicit};
use crate::scenarios::sensor::{
    inequivalence_threshold, intransitivity_witness, reading_equality_transitive, single_grain_instability,
    SensorMode, SensorModel,
};
use crate::scenarios::sorites::{sorites_report, BadPolicy, ReportPolicy, SoritesConfig};
use crate::scenarios::williamson::{parse_height, williamson_report, WilliamsonConfig};
use crate::structure::VagueStructure;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FALSIFIED: i32 = 2;
pub const EXIT_UNKNOWN: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "vl", version, about = "Vagueness logic toolkit")]
struct Cli {
    /// Print nothing; only the exit code is meaningful.
    #[arg(long, global = true)]
    quiet: bool,
    /// Read the formula from a file (one formula; `#` starts a comment).
    #[arg(long, global = true, value_name = "PATH")]
    file: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and normalize a formula.
    Parse { formula: Option<String> },
    /// Evaluate a formula at one point of a structure.
    Check {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        world: usize,
        #[arg(long)]
        agent: u32,
        formula: Option<String>,
    },
    /// Check whether a formula holds at every point of a structure.
    Validmodel {
        #[arg(long)]
        model: PathBuf,
        formula: Option<String>,
    },
    /// Fraction of agents at which a formula holds at a world.
    Degree {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        world: usize,
        formula: Option<String>,
    },
    /// Check a structure against the semantic constraints.
    Validate {
        #[arg(long)]
        model: PathBuf,
    },
    /// Decide validity (or satisfiability with --sat).
    Classify(ClassifyArgs),
    /// Check a Hilbert-style proof.
    Prove {
        #[arg(long)]
        proof: PathBuf,
    },
    /// Sample axiom instances and structures and check soundness.
    Fuzz {
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads; defaults to VL_THREADS or the available parallelism.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run one of the built-in scenario analyses.
    #[command(subcommand)]
    Scenario(Scenario),
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    formula: Option<String>,
    #[arg(long)]
    agents: usize,
    /// Search bounds `objective,subjective,worlds`.
    #[arg(long, value_name = "O,S,W")]
    bounds: Option<String>,
    /// Node budget for the tableau and unit budget for the search.
    #[arg(long)]
    budget: Option<u64>,
    /// Comma-separated objective propositions.
    #[arg(long, value_delimiter = ',')]
    objective: Vec<String>,
    /// Decide satisfiability instead of validity.
    #[arg(long)]
    sat: bool,
    /// Omit elapsed_ms so identical runs print identical output.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Possibilistic,
    Midpoint,
}

#[derive(Debug, Args)]
struct SensorArgs {
    #[arg(long)]
    granularity: Option<i64>,
    #[arg(long)]
    delta: Option<i64>,
    /// Allow negative readings near zero.
    #[arg(long)]
    no_clamp: bool,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Readings at most this far apart are reported equivalent.
    #[arg(long)]
    tolerance: Option<i64>,
}

impl SensorArgs {
    fn model(&self, default: SensorModel) -> Result<SensorModel, String> {
        SensorModel {
            granularity: self.granularity.unwrap_or(default.granularity),
            delta: self.delta.unwrap_or(default.delta),
            clamp: !self.no_clamp,
            mode: match self.mode {
                Some(ModeArg::Possibilistic) => SensorMode::Possibilistic,
                Some(ModeArg::Midpoint) => SensorMode::Midpoint,
                None => default.mode,
            },
            tolerance: self.tolerance.unwrap_or(default.tolerance),
        }
        .validated()
        .map_err(|e| e.to_string())
    }
}

#[derive(Debug, Subcommand)]
enum Scenario {
    /// Sensor readings, intransitive reports and the inequivalence threshold.
    Sensor {
        #[command(flatten)]
        sensor: SensorArgs,
        /// Grain counts searched by the brute-force analyses.
        #[arg(long, default_value_t = 200)]
        cap: i64,
        /// Grain counts listed in the readings table.
        #[arg(long, default_value_t = 30)]
        table: i64,
    },
    /// The sorites pile with grain-removal transitions.
    Sorites {
        #[arg(long, default_value_t = 60)]
        grains: i64,
        #[arg(long, default_value_t = 2)]
        ask_cap: u32,
        /// threshold:<k>, sticky:<k> or constant:<bool>.
        #[arg(long, default_value = "threshold:3")]
        policy: String,
        #[command(flatten)]
        sensor: SensorArgs,
    },
    /// The height model and the clarity operator.
    Williamson {
        #[arg(long, default_value = "170")]
        threshold: String,
        #[arg(long, default_value = "2")]
        alpha: String,
        #[arg(long, default_value = "0.5")]
        step: String,
        #[arg(long, default_value = "160")]
        lo: String,
        #[arg(long, default_value = "180")]
        hi: String,
    },
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

struct Failure {
    code: i32,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

type Step = Result<(i32, Value), Failure>;

pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome { code, stdout: String::new(), stderr: text }
            } else {
                Outcome { code, stdout: text, stderr: String::new() }
            };
        }
    };
    let quiet = cli.quiet;
    let result = dispatch(cli);
    let mut out = match result {
        Ok((code, value)) => Outcome {
            code,
            stdout: serde_json::to_string_pretty(&value).expect("JSON value serializes") + "\n",
            stderr: String::new(),
        },
        Err(f) => Outcome { code: f.code, stdout: String::new(), stderr: format!("vl: {}\n", f.message) },
    };
    if quiet {
        out.stdout.clear();
        out.stderr.clear();
    }
    out
}

fn dispatch(cli: Cli) -> Step {
    let file = cli.file.as_deref();
    match cli.command {
        Command::Parse { formula } => cmd_parse(&read_formula(formula, file)?),
        Command::Check { model, world, agent, formula } => {
            let f = read_formula(formula, file)?;
            let m = load_model(&model)?;
            let agent = AgentId::new(agent).ok_or_else(|| usage("agent indices start at 1"))?;
            let holds = eval(&m, world, agent, &f).map_err(|e| usage(e.to_string()))?;
            let code = if holds { EXIT_OK } else { EXIT_FALSIFIED };
            Ok((code, json!({ "formula": render(&f), "world": world, "agent": agent, "holds": holds })))
        }
        Command::Validmodel { model, formula } => {
            let f = read_formula(formula, file)?;
            let m = load_model(&model)?;
            match valid_in_model(&m, &f).map_err(|e| usage(e.to_string()))? {
                ModelValidity::Valid => Ok((EXIT_OK, json!({ "formula": render(&f), "valid": true }))),
                ModelValidity::CounterWitness(p) => Ok((
                    EXIT_FALSIFIED,
                    json!({ "formula": render(&f), "valid": false, "counterWitness": p }),
                )),
            }
        }
        Command::Degree { model, world, formula } => {
            let f = read_formula(formula, file)?;
            let m = load_model(&model)?;
            let d = degree(&m, world, &f).map_err(|e| usage(e.to_string()))?;
            Ok((EXIT_OK, json!({ "formula": render(&f), "world": world, "degree": d.to_string() })))
        }
        Command::Validate { model } => {
            let m = load_structure(&model)?;
            let violations = m.validate();
            let code = if violations.is_empty() { EXIT_OK } else { EXIT_FALSIFIED };
            Ok((code, json!({ "valid": violations.is_empty(), "violations": violations })))
        }
        Command::Classify(args) => cmd_classify(args, file),
        Command::Prove { proof } => {
            let text = read_file(&proof)?;
            let p = Proof::from_json_str(&text).map_err(|e| usage(format!("{}: {e}", proof.display())))?;
            match check_proof(&p) {
                Ok(()) => Ok((EXIT_OK, json!({ "ok": true, "lines": p.lines.len() }))),
                Err(e) => Ok((
                    EXIT_FALSIFIED,
                    json!({ "ok": false, "line": e.line, "error": e.fault.to_string() }),
                )),
            }
        }
        Command::Fuzz { trials, seed, threads } => {
            if trials == 0 {
                return Err(usage("--trials must be positive"));
            }
            let threads = match threads {
                Some(t) => t,
                None => std::env::var("VL_THREADS").ok().and_then(|v| v.parse().ok()).unwrap_or(0),
            };
            let report = soundness_fuzz(trials, seed, &FuzzParams { threads, ..FuzzParams::default() });
            let code = if report.violations.is_empty() { EXIT_OK } else { EXIT_FALSIFIED };
            Ok((code, to_value(&report)))
        }
        Command::Scenario(s) => cmd_scenario(s),
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn read_formula(inline: Option<String>, file: Option<&Path>) -> Result<Formula, Failure> {
    match (inline, file) {
        (Some(text), None) => parse(&text).map_err(|e| usage(format!("{e}\n  {text}"))),
        (None, Some(path)) => {
            let text = read_file(path)?;
            let mut all = parse_corpus(&text)
                .map_err(|(line, e)| usage(format!("{}:{line}: {e}", path.display())))?;
            if all.len() != 1 {
                return Err(usage(format!("{} must contain exactly one formula, found {}", path.display(), all.len())));
            }
            Ok(all.remove(0))
        }
        (Some(_), Some(_)) => Err(usage("give the formula inline or with --file, not both")),
        (None, None) => Err(usage("missing formula")),
    }
}

fn load_structure(path: &Path) -> Result<VagueStructure, Failure> {
    VagueStructure::from_json_str(&read_file(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Loads a structure and refuses ones that violate the semantic constraints.
fn load_model(path: &Path) -> Result<VagueStructure, Failure> {
    let m = load_structure(path)?;
    let violations = m.validate();
    if let Some(v) = violations.first() {
        return Err(Failure {
            code: EXIT_FALSIFIED,
            message: format!("{}: invalid structure ({} violations): {}", path.display(), violations.len(), v.message),
        });
    }
    Ok(m)
}

fn cmd_parse(f: &Formula) -> Step {
    Ok((
        EXIT_OK,
        json!({
            "normalized": render_explicit(f),
            "minimal": render(f),
            "depth": modal_depth(f),
            "agents": f.max_agent(),
            "props": f.props(),
            "size": f.size(),
            "necAgentIndependent": is_nec_agent_independent(f),
        }),
    ))
}

fn parse_bounds(text: &str, agents: usize) -> Result<SearchBounds, Failure> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let nums = parts
        .iter()
        .map(|p| p.parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| usage(format!("--bounds expects three integers O,S,W, got `{text}`")))?;
    match nums[..] {
        [o, s, w] => SearchBounds::new(o, s, w, agents).map_err(|e| usage(e.to_string())),
        _ => Err(usage(format!("--bounds expects three integers O,S,W, got `{text}`"))),
    }
}

fn cmd_classify(args: ClassifyArgs, file: Option<&Path>) -> Step {
    let f = read_formula(args.formula, file)?;
    let n = args.agents;
    let mut opts = ClassifyOptions::new(n.max(1));
    if let Some(b) = &args.bounds {
        opts.bounds = parse_bounds(b, n)?;
    }
    if let Some(budget) = args.budget {
        opts.tableau_budget = budget;
        opts.search_budget = budget;
    }
    opts.objective_props = args.objective.iter().map(|p| p.trim().to_string()).collect::<BTreeSet<_>>();
    let mode = if args.sat { Mode::Satisfiability } else { Mode::Validity };
    match classify(&f, n, mode, &opts) {
        Ok(v) => {
            let code = match (v.kind, mode) {
                (VerdictKind::Valid, _) => EXIT_OK,
                (VerdictKind::Satisfiable, Mode::Satisfiability) => EXIT_OK,
                (VerdictKind::Satisfiable, Mode::Validity) => EXIT_FALSIFIED,
                (VerdictKind::Unsatisfiable, _) => EXIT_FALSIFIED,
                (VerdictKind::Unknown, _) => EXIT_UNKNOWN,
            };
            Ok((code, v.to_json(!args.no_timing)))
        }
        Err(e @ (DecisionError::Contradiction { .. } | DecisionError::HintRejected { .. })) => {
            Err(Failure { code: EXIT_UNKNOWN, message: format!("internal error: {e}") })
        }
        Err(e) => Err(usage(e.to_string())),
    }
}

fn cmd_scenario(s: Scenario) -> Step {
    match s {
        Scenario::Sensor { sensor, cap, table } => {
            if cap < 0 || table < 0 {
                return Err(usage("--cap and --table must be non-negative"));
            }
            let model = sensor.model(SensorModel::default()).map_err(usage)?;
            let readings: Vec<Value> = (0..=table)
                .map(|n| {
                    let r = model.readings(n);
                    json!({ "grains": n, "readings": [r.start(), r.end()] })
                })
                .collect();
            let triple = intransitivity_witness(&model, cap);
            let threshold = inequivalence_threshold(&model, cap);
            let unstable = single_grain_instability(&model, cap);
            let midpoint = SensorModel::midpoint(model.granularity).map_err(|e| usage(e.to_string()))?;
            let transitive = reading_equality_transitive(&midpoint, cap);
            let sharing_transitive = reading_equality_transitive(&model, cap);
            let ok = unstable.is_none() && transitive;
            Ok((
                if ok { EXIT_OK } else { EXIT_FALSIFIED },
                json!({
                    "sensor": model,
                    "readingsTable": readings,
                    "intransitivityTriple": triple,
                    "inequivalenceThreshold": threshold,
                    "singleGrainStable": unstable.is_none(),
                    "firstUnstableGrain": unstable,
                    "readingEqualityTransitive": transitive,
                    "sharedReadingTransitive": sharing_transitive,
                }),
            ))
        }
        Scenario::Sorites { grains, ask_cap, policy, sensor } => {
            let policy: ReportPolicy = policy.parse().map_err(|e: BadPolicy| usage(e.to_string()))?;
            let default_sensor = SensorModel::midpoint(10).expect("valid sensor");
            let config = SoritesConfig {
                max_grains: grains,
                ask_cap,
                policy,
                sensor: sensor.model(default_sensor).map_err(usage)?,
            };
            let report = sorites_report(&config).map_err(|e| usage(e.to_string()))?;
            let ok = report.extremes_ok && report.inductive_step_falsified && !report.failure_pairs.is_empty();
            Ok((if ok { EXIT_OK } else { EXIT_FALSIFIED }, to_value(&report)))
        }
        Scenario::Williamson { threshold, alpha, step, lo, hi } => {
            let h = |s: &str| parse_height(s).map_err(|e| usage(e.to_string()));
            let config = WilliamsonConfig {
                threshold: h(&threshold)?,
                alpha: h(&alpha)?,
                step: h(&step)?,
                lo: h(&lo)?,
                hi: h(&hi)?,
            };
            let report = williamson_report(&config).map_err(|e| usage(e.to_string()))?;
            let ok = report.equivalence_ok && report.dr_threshold.law_holds_on_interior && report.set_identity_ok;
            Ok((if ok { EXIT_OK } else { EXIT_FALSIFIED }, to_value(&report)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vl(args: &[&str]) -> (i32, Value) {
        let out = run(std::iter::once("vl").chain(args.iter().copied()));
        let v = if out.stdout.is_empty() { Value::Null } else { serde_json::from_str(&out.stdout).unwrap() };
        (out.code, v)
    }

    #[test]
    fn parse_normalizes() {
        let (code, v) = vl(&["parse", "p & q | r"]);
        assert_eq!(code, 0);
        assert_eq!(v["normalized"], "(p & q) | r");
        assert_eq!(v["depth"], 0);
    }

    #[test]
    fn classify_exit_codes() {
        assert_eq!(vl(&["classify", "D1 p -> p", "--agents", "1"]).0, EXIT_OK);
        let (code, v) = vl(&["classify", "D1 p -> p", "--agents", "2", "--no-timing"]);
        assert_eq!(code, EXIT_FALSIFIED);
        assert_eq!(v["witness"]["worlds"].as_array().unwrap().len(), 1);
        assert_eq!(vl(&["classify", "p & ~p", "--agents", "1", "--sat"]).0, EXIT_FALSIFIED);
        assert_eq!(vl(&["classify", "p", "--agents", "1", "--sat"]).0, EXIT_OK);
    }

    #[test]
    fn usage_errors() {
        assert_eq!(vl(&["classify", "p &", "--agents", "1"]).0, EXIT_USAGE);
        assert_eq!(vl(&["classify", "R3 p", "--agents", "2"]).0, EXIT_USAGE);
        assert_eq!(vl(&["classify", "p", "--agents", "1", "--bounds", "1,2"]).0, EXIT_USAGE);
        assert_eq!(vl(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(vl(&["scenario", "sorites", "--policy", "constant:true"]).0, EXIT_USAGE);
    }

    #[test]
    fn quiet_prints_nothing() {
        let out = run(["vl", "--quiet", "parse", "p"]);
        assert_eq!(out, Outcome { code: 0, stdout: String::new(), stderr: String::new() });
    }

    #[test]
    fn repeated_runs_are_identical() {
        let a = run(["vl", "classify", "p -> D1 R1 p", "--agents", "1", "--no-timing"]);
        let b = run(["vl", "classify", "p -> D1 R1 p", "--agents", "1", "--no-timing"]);
        assert_eq!(a, b);
    }
}
