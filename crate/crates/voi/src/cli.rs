//! Run configuration, analysis orchestration, and artifact emission for the
//! command-line front end. The orchestrator itself is single-threaded;
//! per-factor analyses run in parallel and are order-independent, so output
//! is deterministic for a fixed seed regardless of thread count.

use crate::continuous::{self, ContinuousMode, ContinuousUtility, OptimalDecisionMap};
use crate::discrete::{relative_iv, DiscreteVoi, Estimate, Estimator, VoiError};
use crate::model::{
    evaluate_utilities, sample_factors, working_example_full_y, DecisionSpace, ModelError,
    Problem, SampleTable, UtilityModel,
};
use crate::prob::{ProbError, RandomSource};
use crate::report::{FactorDiagnostics, FactorEntry, SampleInfoEntry, VoiReport};
use crate::smooth::{SmoothError, SmootherConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write as _;
use std::path::Path;

pub const SCENARIO_DISCRETE: &str = "working-example-discrete";
pub const SCENARIO_CONTINUOUS: &str = "working-example-continuous";
pub const DEFAULT_N_SAMPLES: usize = 100_000;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Configuration or schema problems: exit code 1.
    #[error("{0}")]
    Config(String),
    /// Numeric failures (non-convergence, degeneracy): exit code 2.
    #[error("{0}")]
    Numeric(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numeric(_) | CliError::Io(_) => 2,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Prob(ProbError::QuadratureNonConvergence { .. }) => {
                CliError::Numeric(e.to_string())
            }
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<SmoothError> for CliError {
    fn from(e: SmoothError) -> Self {
        match e {
            SmoothError::InvalidConfig(_) | SmoothError::UnsupportedDimension(_) => {
                CliError::Config(e.to_string())
            }
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<VoiError> for CliError {
    fn from(e: VoiError) -> Self {
        match e {
            VoiError::Model(m) => m.into(),
            VoiError::Smooth(s) => s.into(),
            VoiError::GroupTooLarge(_) | VoiError::ContinuousUnsupported => {
                CliError::Config(e.to_string())
            }
            other => CliError::Numeric(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FactorSelection {
    Keyword(String),
    List(Vec<String>),
}

impl Default for FactorSelection {
    fn default() -> Self {
        Self::Keyword("all".into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalizer {
    Evpi,
    Evpm,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleInfoRequest {
    pub factor: String,
    pub n_s: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisConfig {
    #[serde(default)]
    pub factors: FactorSelection,
    /// Joint-information groups of at most two factors.
    #[serde(default)]
    pub groups: Vec<Vec<String>>,
    #[serde(default)]
    pub estimator: Estimator,
    #[serde(default)]
    pub smoother: SmootherConfig,
    #[serde(default = "default_n_samples")]
    pub n_samples: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub sample_information: Vec<SampleInfoRequest>,
    #[serde(default = "default_normalizer")]
    pub normalizer: Normalizer,
    /// Whether ingested utility columns are conditional expectations over the
    /// aleatory variables (enables EVPM on ingested tables).
    #[serde(default = "default_true")]
    pub aleatory_reduced: bool,
}

fn default_n_samples() -> usize {
    DEFAULT_N_SAMPLES
}
fn default_seed() -> u64 {
    DEFAULT_SEED
}
fn default_normalizer() -> Normalizer {
    Normalizer::Evpm
}
fn default_true() -> bool {
    true
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<Problem>,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

impl RunConfig {
    pub fn scenario(name: &str) -> Self {
        Self {
            scenario: Some(name.to_string()),
            problem: None,
            analysis: AnalysisConfig::default(),
        }
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_problem(&self) -> Result<Problem, CliError> {
        match (&self.scenario, &self.problem) {
            (Some(s), None) => match s.as_str() {
                SCENARIO_DISCRETE => Ok(Problem::working_example_discrete()),
                SCENARIO_CONTINUOUS => Ok(Problem::working_example_continuous()),
                other => Err(CliError::Config(format!(
                    "unknown scenario '{other}' (expected {SCENARIO_DISCRETE} or {SCENARIO_CONTINUOUS})"
                ))),
            },
            (None, Some(p)) => {
                p.validate()?;
                Ok(p.clone())
            }
            (Some(_), Some(_)) => Err(CliError::Config(
                "config sets both 'scenario' and 'problem'; pick one".into(),
            )),
            (None, None) => Err(CliError::Config(
                "config needs either 'scenario' or 'problem'".into(),
            )),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if let FactorSelection::Keyword(k) = &self.analysis.factors {
            if k != "all" {
                return Err(CliError::Config(format!(
                    "factor selection keyword must be \"all\", got \"{k}\""
                )));
            }
        }
        if self.analysis.n_samples == 0 {
            return Err(CliError::Config("n_samples must be positive".into()));
        }
        Ok(())
    }

    fn selected_factors(&self, available: &[String]) -> Result<Vec<String>, CliError> {
        match &self.analysis.factors {
            FactorSelection::Keyword(_) => Ok(available.to_vec()),
            FactorSelection::List(list) => {
                for f in list {
                    if !available.iter().any(|a| a == f) {
                        return Err(CliError::Config(format!(
                            "unknown factor name '{f}' (available: {})",
                            available.join(", ")
                        )));
                    }
                }
                Ok(list.clone())
            }
        }
    }
}

/// Everything `run` produces before it is written to disk.
#[derive(Debug)]
pub struct RunArtifacts {
    pub report: VoiReport,
    pub plot_files: Vec<(String, String)>,
}

/// Full analysis for a configuration: builds or ingests the sample table,
/// dispatches on the decision space, and assembles the report.
pub fn execute(cfg: &RunConfig, ingested: Option<SampleTable>) -> Result<RunArtifacts, CliError> {
    cfg.validate()?;
    let src = RandomSource::new(cfg.analysis.seed);
    if let Some(table) = ingested {
        // External-model workflow: factors and utilities come from the file.
        return analyze_discrete_table(cfg, &table, None, &src);
    }
    let problem = cfg.resolve_problem()?;
    let samples = sample_factors(&problem, cfg.analysis.n_samples, &src)?;
    let table = evaluate_utilities(&problem, &samples, &src)?;
    match &problem.decision {
        DecisionSpace::Discrete { .. } => analyze_discrete_table(cfg, &table, Some(&problem), &src),
        DecisionSpace::Continuous { min, max } => {
            analyze_continuous(cfg, &problem, &table, (*min, *max), &src)
        }
    }
}

fn factor_names(table: &SampleTable) -> Vec<String> {
    table
        .names()
        .iter()
        .filter(|n| !is_utility_name(n) && n.as_str() != "S")
        .cloned()
        .collect()
}

fn is_utility_name(n: &str) -> bool {
    n.strip_prefix("u_a")
        .map_or(false, |rest| rest.parse::<usize>().is_ok())
}

fn analyze_discrete_table(
    cfg: &RunConfig,
    table: &SampleTable,
    problem: Option<&Problem>,
    src: &RandomSource,
) -> Result<RunArtifacts, CliError> {
    let voi = DiscreteVoi::new(table)?;
    let available = factor_names(table);
    let selected = cfg.selected_factors(&available)?;
    let smoother = &cfg.analysis.smoother;
    let estimator = cfg.analysis.estimator;
    let a_opt = voi.a_opt();
    let output_col = format!("u_a{}", a_opt + 1);
    let mut warnings = Vec::new();

    let evpm = if table.aleatory_reduced {
        Some(voi.evpm()?)
    } else {
        None
    };
    // For the built-in discrete scenario the full-model EVPI needs the load
    // sampled explicitly; generic tables use the row-wise optimum directly.
    let evpi = if cfg.scenario.as_deref() == Some(SCENARIO_DISCRETE) {
        let full = working_example_full_y(voi.n(), &src.split(7_001))?;
        let full_voi = DiscreteVoi::new(&full)?;
        Some(full_voi.evpi())
    } else if table.aleatory_reduced {
        None
    } else {
        Some(voi.evpi())
    };
    let normalizer = match cfg.analysis.normalizer {
        Normalizer::Evpm => evpm,
        Normalizer::Evpi => evpi,
    };

    type FactorResult = Result<(FactorEntry, Vec<(String, Vec<f64>, Vec<f64>)>), VoiError>;
    let mut targets: Vec<Vec<String>> = selected.iter().map(|f| vec![f.clone()]).collect();
    for g in &cfg.analysis.groups {
        for f in g {
            if !available.iter().any(|a| a == f) {
                return Err(CliError::Config(format!("unknown factor name '{f}'")));
            }
        }
        targets.push(g.clone());
    }

    let results: Vec<FactorResult> = targets
        .par_iter()
        .map(|group| {
            let refs: Vec<&str> = group.iter().map(String::as_str).collect();
            let out = voi.evppi(&refs, estimator, smoother)?;
            let sobol = if group.len() == 1 {
                match voi.sobol_first_order(&group[0], &output_col, smoother) {
                    Ok(s) => Some(s),
                    Err(VoiError::ZeroOutputVariance) => None,
                    Err(e) => return Err(e),
                }
            } else {
                None
            };
            let relative_v = normalizer
                .and_then(|nrm| relative_iv(out.estimate.value, nrm).ok());
            let entry = FactorEntry {
                name: group.join("+"),
                v: out.estimate.value,
                v_se: out.estimate.se,
                relative_v,
                dc: Some(out.dc),
                sobol_first: sobol.map(|s| s.value),
                diagnostics: FactorDiagnostics {
                    raw: out.estimate.raw,
                    plugin: Some(out.plugin.value),
                    sobol_se: sobol.map(|s| s.se),
                },
            };
            Ok((entry, Vec::new()))
        })
        .collect();

    let mut factors = Vec::new();
    for r in results {
        let (entry, _) = r?;
        factors.push(entry);
    }

    let mut sample_information = Vec::new();
    for req in &cfg.analysis.sample_information {
        if cfg.scenario.as_deref() != Some(SCENARIO_DISCRETE) || req.factor != "M" {
            return Err(CliError::Config(format!(
                "sample information value is built in for factor 'M' of the {SCENARIO_DISCRETE} scenario only; requested '{}'",
                req.factor
            )));
        }
        for (j, &n_s) in req.n_s.iter().enumerate() {
            let out = sample_information_value_load(
                &voi,
                n_s,
                &src.split(9_000 + j as u64),
                estimator,
                smoother,
            )?;
            sample_information.push(SampleInfoEntry {
                factor: req.factor.clone(),
                n_s,
                v_z: out.value,
                v_z_se: out.se,
            });
        }
    }

    if voi.n() < 1_000 {
        warnings.push(format!(
            "only {} samples; standard errors will be large",
            voi.n()
        ));
    }

    let report = VoiReport {
        factors,
        a_opt: serde_json::json!(a_opt + 1),
        evpi: evpi.map(|e| e.value),
        evpm: evpm.map(|e| e.value),
        expected_utilities: voi.expected_utilities().to_vec(),
        sample_information,
        warnings,
        config_echo: serde_json::to_value(cfg).expect("config serializes"),
    };

    let plot_files = plot_data_discrete(&voi, table, &selected, smoother)?;
    let _ = problem;
    Ok(RunArtifacts { report, plot_files })
}

/// Information value of `n_s` noisy load observations in the built-in
/// discrete scenario: data are unit-scale Gumbel draws around the location
/// factor, reduced by their sufficient statistic sum(exp(-s_i)).
pub fn sample_information_value_load(
    voi: &DiscreteVoi,
    n_s: usize,
    src: &RandomSource,
    estimator: Estimator,
    smoother: &SmootherConfig,
) -> Result<Estimate, VoiError> {
    let out = voi.sample_information_value(
        "M",
        n_s,
        |rng, m| {
            let u = loop {
                let u = rand::Rng::gen::<f64>(rng);
                if u > 0.0 && u < 1.0 {
                    break u;
                }
            };
            m - (-u.ln()).ln()
        },
        |data| data.iter().map(|s| (-s).exp()).sum::<f64>(),
        src,
        estimator,
        smoother,
    )?;
    Ok(out.estimate)
}

fn analyze_continuous(
    cfg: &RunConfig,
    problem: &Problem,
    table: &SampleTable,
    bounds: (f64, f64),
    src: &RandomSource,
) -> Result<RunArtifacts, CliError> {
    let utility = ContinuousUtility::from_problem(problem, table)?;
    let available = factor_names(table);
    let selected = cfg.selected_factors(&available)?;
    let smoother = &cfg.analysis.smoother;
    let mut warnings = Vec::new();

    let prior = continuous::prior_optimum_continuous(&utility, bounds);
    if prior.at_bound {
        warnings.push("a-priori optimum sits on a decision bound; widen the interval".into());
    }
    let augmented = continuous::augment(table, &utility, bounds, &src.split(501))?;

    let evpm = match &problem.utility {
        UtilityModel::ContinuousWorkingExample => {
            let e = continuous::evpm_continuous_we(&utility, &prior)?;
            if e.excluded > 0 {
                warnings.push(format!(
                    "{} samples excluded from EVPM: conditional optimum undefined there",
                    e.excluded
                ));
            }
            Some(e.estimate)
        }
        _ => None,
    };
    let evpi = match &problem.utility {
        UtilityModel::ClosedForm { .. } => {
            Some(continuous::evpi_continuous_closed_form(&utility, &prior)?)
        }
        _ => None,
    };
    let normalizer = match cfg.analysis.normalizer {
        Normalizer::Evpm => evpm,
        Normalizer::Evpi => evpi,
    };

    // Sobol' indices of the model output at the a-priori optimal decision.
    let mut sobol_table = table.clone();
    let n = table.n();
    let u_opt: Vec<f64> = (0..n).map(|k| utility.eval(k, prior.a_opt)).collect();
    sobol_table.push_column("__u_opt", u_opt)?;

    let mode = match &problem.utility {
        UtilityModel::ClosedForm { form, .. } => match form {
            crate::model::ClosedFormUtility::Quadratic { .. } => ContinuousMode::ClosedFormQuadratic,
            crate::model::ClosedFormUtility::Linex { .. } => ContinuousMode::ClosedFormLinex,
        },
        _ => ContinuousMode::SmoothedProfile,
    };

    type FactorResult = Result<(FactorEntry, Option<OptimalDecisionMap>, bool), VoiError>;
    let results: Vec<FactorResult> = selected
        .par_iter()
        .map(|f| {
            let out = continuous::evppi_continuous(
                table,
                Some(&augmented),
                &utility,
                f,
                mode,
                cfg.analysis.estimator,
                &prior,
                bounds,
                smoother,
            )?;
            let sobol = match crate::discrete::sobol_first_order(&sobol_table, f, "__u_opt", smoother)
            {
                Ok(s) => Some(s),
                Err(VoiError::ZeroOutputVariance) => None,
                Err(e) => return Err(e),
            };
            let relative_v = normalizer
                .and_then(|nrm| relative_iv(out.estimate.value, nrm).ok());
            let warn = out.map.as_ref().map_or(false, |m| m.warn_bounds());
            let entry = FactorEntry {
                name: f.clone(),
                v: out.estimate.value,
                v_se: out.estimate.se,
                relative_v,
                dc: None,
                sobol_first: sobol.map(|s| s.value),
                diagnostics: FactorDiagnostics {
                    raw: out.estimate.raw,
                    plugin: None,
                    sobol_se: sobol.map(|s| s.se),
                },
            };
            Ok((entry, out.map, warn))
        })
        .collect();

    let mut factors = Vec::new();
    let mut maps = Vec::new();
    for (f, r) in selected.iter().zip(results) {
        let (entry, map, warn) = r?;
        if warn {
            warnings.push(format!(
                "conditional optimum for '{f}' hits the decision bounds often; widen the interval"
            ));
        }
        factors.push(entry);
        if let Some(m) = map {
            maps.push((f.clone(), m));
        }
    }

    if !cfg.analysis.sample_information.is_empty() {
        return Err(CliError::Config(
            "sample information value is available for the discrete scenario only".into(),
        ));
    }

    let report = VoiReport {
        factors,
        a_opt: serde_json::json!(prior.a_opt),
        evpi: evpi.map(|e| e.value),
        evpm: evpm.map(|e| e.value),
        expected_utilities: vec![prior.expected_utility],
        sample_information: Vec::new(),
        warnings,
        config_echo: serde_json::to_value(cfg).expect("config serializes"),
    };

    let plot_files = plot_data_continuous(&augmented, &maps)?;
    Ok(RunArtifacts { report, plot_files })
}

const PLOT_GRID: usize = 101;
const SCATTER_MAX: usize = 2_000;

/// Conditional-utility profiles, CVPPI profiles, and scatter downsamples with
/// smoother overlays. Each CSV carries a header row and a units row.
fn plot_data_discrete(
    voi: &DiscreteVoi,
    table: &SampleTable,
    factors: &[String],
    smoother: &SmootherConfig,
) -> Result<Vec<(String, String)>, CliError> {
    let m = voi.expected_utilities().len();
    let mut files = Vec::new();
    for f in factors {
        let x = table.column(f)?;
        let smoothers = voi.fit_smoothers(x, 1, smoother)?;
        let mut sorted = x.to_vec();
        sorted.sort_by(f64::total_cmp);
        let grid: Vec<f64> = (0..PLOT_GRID)
            .map(|i| sorted[i * (sorted.len() - 1) / (PLOT_GRID - 1)])
            .collect();

        let mut profile = String::new();
        let names: Vec<String> = (1..=m).map(|a| format!("u_a{a}")).collect();
        profile.push_str(&format!("{f},{}\n", names.join(",")));
        profile.push_str(&format!("-,{}\n", vec!["currency"; m].join(",")));
        let mut cvppi = format!("{f},cvppi\n-,currency\n");
        for &g in &grid {
            let preds: Vec<f64> = smoothers
                .iter()
                .map(|s| s.predict(&[g]))
                .collect::<Result<_, _>>()
                .map_err(VoiError::from)?;
            let row: Vec<String> = preds.iter().map(|v| format!("{v:.6e}")).collect();
            profile.push_str(&format!("{g:.6e},{}\n", row.join(",")));
            let c = voi.cvppi(&smoothers, &[g])?;
            cvppi.push_str(&format!("{g:.6e},{c:.6e}\n"));
        }
        files.push((format!("profile_{f}.csv"), profile));
        files.push((format!("cvppi_{f}.csv"), cvppi));

        let mut scatter = String::new();
        scatter.push_str(&format!("{f},{},{}\n", names.join(","), {
            let s: Vec<String> = (1..=m).map(|a| format!("smooth_a{a}")).collect();
            s.join(",")
        }));
        scatter.push_str(&format!("-,{}\n", vec!["currency"; 2 * m].join(",")));
        let stride = (x.len() / SCATTER_MAX).max(1);
        let utilities = table.utility_columns()?;
        let mut k = 0;
        while k < x.len() {
            let raw: Vec<String> = utilities.iter().map(|u| format!("{:.6e}", u[k])).collect();
            let sm: Vec<String> = smoothers
                .iter()
                .map(|s| s.predict(&[x[k]]).map(|v| format!("{v:.6e}")))
                .collect::<Result<_, _>>()
                .map_err(VoiError::from)?;
            scatter.push_str(&format!(
                "{:.6e},{},{}\n",
                x[k],
                raw.join(","),
                sm.join(",")
            ));
            k += stride;
        }
        files.push((format!("scatter_{f}.csv"), scatter));
    }
    Ok(files)
}

/// Conditional-optimum maps and (factor, decision, utility) scatter
/// downsamples for the continuous case.
fn plot_data_continuous(
    augmented: &SampleTable,
    maps: &[(String, OptimalDecisionMap)],
) -> Result<Vec<(String, String)>, CliError> {
    let mut files = Vec::new();
    for (f, map) in maps {
        let mut csv = format!("{f},a_opt\n-,decision\n");
        for (x, a) in map.knots.iter().zip(&map.values) {
            csv.push_str(&format!("{x:.6e},{a:.6e}\n"));
        }
        files.push((format!("optimum_map_{f}.csv"), csv));

        let x = augmented.column(f)?;
        let a = augmented.column("a")?;
        let u = augmented.column("u")?;
        let mut scatter = format!("{f},a,u\n-,decision,currency\n");
        let stride = (x.len() / SCATTER_MAX).max(1);
        let mut k = 0;
        while k < x.len() {
            scatter.push_str(&format!("{:.6e},{:.6e},{:.6e}\n", x[k], a[k], u[k]));
            k += stride;
        }
        files.push((format!("scatter_{f}.csv"), scatter));
    }
    Ok(files)
}

/// Atomic write: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().map(|s| s.to_string_lossy()).unwrap_or_default()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// The `run` / `ingest-run` entry point: analysis plus artifact emission.
pub fn run_to_dir(
    cfg: &RunConfig,
    ingested: Option<SampleTable>,
    out_dir: &Path,
    with_plot_data: bool,
) -> Result<VoiReport, CliError> {
    let artifacts = execute(cfg, ingested)?;
    write_atomic(&out_dir.join("report.json"), &artifacts.report.to_json())?;
    write_atomic(&out_dir.join("report.txt"), &artifacts.report.to_text())?;
    if with_plot_data {
        for (name, contents) in &artifacts.plot_files {
            write_atomic(&out_dir.join(name), contents)?;
        }
    }
    Ok(artifacts.report)
}

/// Reads a sample CSV for the external-model workflow.
pub fn ingest(path: &Path, cfg: &RunConfig) -> Result<SampleTable, CliError> {
    let file = fs::File::open(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let table = SampleTable::read_csv(file, cfg.analysis.aleatory_reduced)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    table.utility_columns().map_err(CliError::from)?;
    Ok(table)
}

/// Regression-harness tables for the built-in scenarios: expected utilities
/// and losses, per-factor information values with standard errors, and the
/// normalizers.
pub fn emit_scenario_tables(scenario: &str, n: usize, seed: u64) -> Result<String, CliError> {
    let mut cfg = RunConfig::scenario(scenario);
    cfg.analysis.n_samples = n;
    cfg.analysis.seed = seed;
    emit_tables_for_config(&cfg)
}

/// Like [`emit_scenario_tables`] but honoring the full analysis configuration.
pub fn emit_tables_for_config(cfg: &RunConfig) -> Result<String, CliError> {
    let scenario = cfg.scenario.as_deref().unwrap_or_default();
    let artifacts = execute(cfg, None)?;
    let mut out = String::new();
    if scenario == SCENARIO_DISCRETE {
        out.push_str("Expected utilities and losses per alternative\n");
        out.push_str("alt   E[utility]      E[loss]        cost\n");
        for (i, &eu) in artifacts.report.expected_utilities.iter().enumerate() {
            let cost = crate::model::WE_COSTS[i];
            let loss = -eu - cost;
            out.push_str(&format!(
                "a{}  {:>12.4e}  {:>12.4e}  {:>10.3e}\n",
                i + 1,
                eu,
                loss,
                cost
            ));
        }
        out.push('\n');
    }
    out.push_str(&artifacts.report.to_text());
    Ok(out)
}
