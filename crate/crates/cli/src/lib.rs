//! Suite runner behind the `pluri` binary.
//!
//! Every suite turns into one or more [`SuiteResult`]s carrying the core
//! report as JSON. Reports hold no timings or paths, so identical
//! configurations serialize to identical bytes.

use std::fmt;
use std::path::PathBuf;

use clap::ValueEnum;
use pluri_core::closed_forms::{self, FormulaSet};
use pluri_core::flower::{self, Flower};
use pluri_core::forms::family_by_name;
use pluri_core::quad_systems::{self, Pairing};
use pluri_core::report::{CheckReport, TrialStatus};
use pluri_core::variational::{self, ConsistencyReport};
use pluri_core::{FormParameters, QuadSystem, TwoForm};
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    OctahedronConsistency,
    Closedness,
    PushforwardIdentity,
    QuadConsistency,
    TetrahedronProperty,
    ThreeLeg,
    QuadImpliesCorner,
    FlowerDecompose,
    ElSum,
    /// Printed closed-form corner equations against computed residuals.
    PrintedFormulas,
    /// Flip involution and flipped side-face equations.
    Flip,
    All,
}

impl Suite {
    const EACH: [Suite; 11] = [
        Suite::OctahedronConsistency,
        Suite::Closedness,
        Suite::PushforwardIdentity,
        Suite::QuadConsistency,
        Suite::TetrahedronProperty,
        Suite::ThreeLeg,
        Suite::QuadImpliesCorner,
        Suite::FlowerDecompose,
        Suite::ElSum,
        Suite::PrintedFormulas,
        Suite::Flip,
    ];

    pub fn name(self) -> String {
        self.to_possible_value()
            .map(|v| v.get_name().to_string())
            .unwrap_or_default()
    }
}

/// Everything that determines a run; echoed at the top of the report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub suite: Suite,
    pub family: Option<String>,
    pub system: Option<String>,
    pub trials: u64,
    pub seed: u64,
    /// `builtin` or a path to a JSON array of flowers.
    pub corpus: String,
    pub rational: bool,
    /// Replaces the pass threshold of suites whose trials carry one checked value.
    pub tolerance: Option<f64>,
    /// Edge length of the patch used by `quad-implies-corner`.
    pub extent: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            suite: Suite::All,
            family: None,
            system: None,
            trials: 100,
            seed: 42,
            corpus: "builtin".into(),
            rational: false,
            tolerance: None,
            extent: 2,
        }
    }
}

/// A configuration the runner refuses to execute (exit status 2).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl From<pluri_core::Error> for ConfigError {
    fn from(e: pluri_core::Error) -> Self {
        Self(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub suite: String,
    pub subject: String,
    pub passed: bool,
    pub trials_passed: usize,
    pub trials_failed: usize,
    pub trials_inconclusive: usize,
    /// Largest checked deviation over conclusive trials.
    pub max_deviation: f64,
    pub report: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub suites_passed: usize,
    pub suites_failed: usize,
    pub trials_passed: usize,
    pub trials_failed: usize,
    pub trials_inconclusive: usize,
    pub all_passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub results: Vec<SuiteResult>,
    pub summary: Summary,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.summary.all_passed {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

const BUILTIN_FAMILIES: [&str; 2] = ["cross_ratio_log", "mixed_q_a3"];

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn from_check(suite: Suite, report: CheckReport, tolerance: Option<f64>) -> SuiteResult {
    let report = match tolerance {
        Some(t) => retune(report, t),
        None => report,
    };
    SuiteResult {
        suite: suite.name(),
        subject: report.subject.clone(),
        passed: report.all_passed(),
        trials_passed: report.passed,
        trials_failed: report.failed,
        trials_inconclusive: report.inconclusive,
        max_deviation: report.max_value,
        report: to_value(&report),
    }
}

/// Re-judges every conclusive trial against a new threshold.
pub fn retune(report: CheckReport, tolerance: f64) -> CheckReport {
    let trials = report
        .trials
        .into_iter()
        .map(|mut t| {
            if t.status != TrialStatus::Inconclusive {
                t.status = if t.value <= tolerance {
                    TrialStatus::Pass
                } else {
                    TrialStatus::Fail
                };
            }
            t
        })
        .collect();
    CheckReport::from_trials(report.check, report.subject, report.seed, tolerance, trials)
}

fn from_consistency(report: &ConsistencyReport) -> SuiteResult {
    let max = report
        .trials
        .iter()
        .filter(|t| t.status != TrialStatus::Inconclusive)
        .map(|t| t.max_residual)
        .fold(0.0, f64::max);
    SuiteResult {
        suite: Suite::OctahedronConsistency.name(),
        subject: report.family.clone(),
        passed: report.all_passed(),
        trials_passed: report.passed,
        trials_failed: report.failed,
        trials_inconclusive: report.inconclusive,
        max_deviation: max,
        report: to_value(report),
    }
}

/// Closedness values at the consistency solutions as a one-value-per-trial report.
fn closedness_report(c: &ConsistencyReport) -> CheckReport {
    const CLOSEDNESS_TOLERANCE: f64 = 1e-9;
    let trials = c
        .trials
        .iter()
        .map(|t| {
            let (status, value, note) = match t.closedness_value {
                Some(v) if v.abs() <= CLOSEDNESS_TOLERANCE => (TrialStatus::Pass, v.abs(), None),
                Some(v) => (TrialStatus::Fail, v.abs(), None),
                None => (
                    TrialStatus::Inconclusive,
                    f64::NAN,
                    Some(
                        t.note
                            .clone()
                            .unwrap_or_else(|| "no solution of the corner system".into()),
                    ),
                ),
            };
            pluri_core::report::CheckTrial {
                index: t.index,
                seed: t.seed,
                attempts: t.attempts,
                status,
                value,
                note,
            }
        })
        .collect();
    CheckReport::from_trials(
        "closedness",
        c.family.clone(),
        c.seed,
        CLOSEDNESS_TOLERANCE,
        trials,
    )
}

struct Context {
    families: Vec<String>,
    systems: Vec<String>,
    corpus: Vec<(String, Flower)>,
}

fn resolve(config: &RunConfig) -> Result<Context, ConfigError> {
    if config.trials == 0 {
        return Err(ConfigError("--trials must be at least 1".into()));
    }
    if config.extent == 0 {
        return Err(ConfigError("--extent must be at least 1".into()));
    }
    if let Some(t) = config.tolerance {
        if !(t.is_finite() && t >= 0.0) {
            return Err(ConfigError(format!(
                "tolerance must be a non-negative number, got {t}"
            )));
        }
    }
    let families = match &config.family {
        Some(f) => vec![family_by_name(f)?.name().to_string()],
        None => BUILTIN_FAMILIES.iter().map(|s| s.to_string()).collect(),
    };
    let systems = match &config.system {
        Some(s) => vec![QuadSystem::by_name(s)?.name],
        None => QuadSystem::builtin_names()
            .iter()
            .map(|s| s.to_string())
            .collect(),
    };
    let needs_corpus = matches!(
        config.suite,
        Suite::FlowerDecompose | Suite::ElSum | Suite::All
    );
    let corpus = if !needs_corpus {
        Vec::new()
    } else if config.corpus == "builtin" {
        flower::builtin_corpus()
    } else {
        let path = PathBuf::from(&config.corpus);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| ConfigError(format!("cannot read corpus {}: {e}", path.display())))?;
        flower::corpus_from_json(&text)?
    };
    Ok(Context {
        families,
        systems,
        corpus,
    })
}

fn form(family: &str) -> Result<TwoForm, ConfigError> {
    Ok(TwoForm::new(
        family_by_name(family)?,
        FormParameters::default(),
    ))
}

fn run_suite(
    suite: Suite,
    config: &RunConfig,
    ctx: &Context,
) -> Result<Vec<SuiteResult>, ConfigError> {
    let (trials, seed, tol) = (config.trials, config.seed, config.tolerance);
    let mut out = Vec::new();
    match suite {
        Suite::OctahedronConsistency => {
            for f in &ctx.families {
                out.push(from_consistency(
                    &variational::octahedron_consistency_check(&form(f)?, trials, seed)?,
                ));
            }
        }
        Suite::Closedness => {
            for f in &ctx.families {
                let c = variational::octahedron_consistency_check(&form(f)?, trials, seed)?;
                out.push(from_check(suite, closedness_report(&c), tol));
            }
        }
        Suite::PushforwardIdentity => {
            for f in &ctx.families {
                for dropped in 0..4 {
                    let r =
                        variational::pushforward_identity_check(&form(f)?, dropped, trials, seed)?;
                    let ok = |t: &variational::PushforwardTrial| {
                        t.identity_error <= r.identity_tolerance
                            && t.action_error <= r.identity_tolerance
                            && t.passive_residual <= r.passive_tolerance
                    };
                    let good = r.trials.iter().filter(|t| ok(t)).count();
                    out.push(SuiteResult {
                        suite: suite.name(),
                        subject: format!("{f} via P_{dropped}"),
                        passed: r.passed,
                        trials_passed: good,
                        trials_failed: r.trials.len() - good,
                        trials_inconclusive: 0,
                        max_deviation: r
                            .max_identity_error
                            .max(r.max_passive_residual)
                            .max(r.max_action_error),
                        report: to_value(&r),
                    });
                }
            }
        }
        Suite::QuadConsistency => {
            for s in &ctx.systems {
                let sys = QuadSystem::by_name(s)?;
                out.push(from_check(
                    suite,
                    quad_systems::consistency_batch(&sys, trials, seed, config.rational),
                    tol,
                ));
            }
        }
        Suite::TetrahedronProperty => {
            for s in &ctx.systems {
                let sys = QuadSystem::by_name(s)?;
                out.push(from_check(
                    suite,
                    quad_systems::tetrahedron_batch(&sys, trials, seed),
                    tol,
                ));
            }
        }
        Suite::ThreeLeg => {
            for s in &ctx.systems {
                let set = closed_forms::three_leg_set_for_system(s)?;
                out.push(from_check(
                    suite,
                    closed_forms::three_leg_check(set, trials, seed),
                    tol,
                ));
            }
        }
        Suite::QuadImpliesCorner => {
            for s in &ctx.systems {
                let pairing = Pairing::for_system(s)?;
                let r = quad_systems::quad_solutions_satisfy_corners(
                    &pairing,
                    config.extent,
                    trials,
                    seed,
                );
                out.push(from_check(suite, r, tol));
            }
            out.push(witness_result(seed));
        }
        Suite::FlowerDecompose => {
            out.push(from_check(
                suite,
                flower::decomposition_check(&ctx.corpus),
                tol,
            ));
        }
        Suite::ElSum => {
            for f in &ctx.families {
                out.push(from_check(
                    suite,
                    flower::el_sum_batch(&form(f)?, &ctx.corpus, seed),
                    tol,
                ));
            }
        }
        Suite::PrintedFormulas => {
            for set in FormulaSet::ALL {
                out.push(from_check(
                    suite,
                    closed_forms::printed_formula_check(set, trials, seed),
                    tol,
                ));
            }
        }
        Suite::Flip => {
            let sys = QuadSystem::kdv_all();
            out.push(from_check(
                suite,
                quad_systems::flip_batch(&sys, trials, seed),
                tol,
            ));
        }
        Suite::All => {
            for s in Suite::EACH {
                out.extend(run_suite(s, config, ctx)?);
            }
        }
    }
    Ok(out)
}

/// The corner-system solution that is not a cross-ratio quad solution.
fn witness_result(seed: u64) -> SuiteResult {
    let subject = "non-inclusion witness (cross_ratio_all)".to_string();
    match quad_systems::non_inclusion_witness(seed) {
        Ok(w) => {
            let ok = w.max_quad_residual > quad_systems::WITNESS_THRESHOLD
                && w.max_corner_residual <= quad_systems::INCLUSION_TOLERANCE;
            SuiteResult {
                suite: Suite::QuadImpliesCorner.name(),
                subject,
                passed: ok,
                trials_passed: usize::from(ok),
                trials_failed: usize::from(!ok),
                trials_inconclusive: 0,
                max_deviation: w.max_corner_residual,
                report: to_value(&w),
            }
        }
        Err(e) => SuiteResult {
            suite: Suite::QuadImpliesCorner.name(),
            subject,
            passed: false,
            trials_passed: 0,
            trials_failed: 0,
            trials_inconclusive: 1,
            max_deviation: 0.0,
            report: Value::String(e.to_string()),
        },
    }
}

pub fn run(config: &RunConfig) -> Result<RunReport, ConfigError> {
    let ctx = resolve(config)?;
    let results = run_suite(config.suite, config, &ctx)?;
    let sum = |f: fn(&SuiteResult) -> usize| results.iter().map(f).sum::<usize>();
    let suites_passed = results.iter().filter(|r| r.passed).count();
    let summary = Summary {
        suites_passed,
        suites_failed: results.len() - suites_passed,
        trials_passed: sum(|r| r.trials_passed),
        trials_failed: sum(|r| r.trials_failed),
        trials_inconclusive: sum(|r| r.trials_inconclusive),
        all_passed: suites_passed == results.len(),
    };
    Ok(RunReport {
        config: config.clone(),
        results,
        summary,
    })
}
