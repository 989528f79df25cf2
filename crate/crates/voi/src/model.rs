//! Problem definition: factors, decision space, utility models, sample tables,
//! and the built-in working-example models (discrete protection-system choice
//! and its continuous-design variant).

use crate::prob::{integrate, DistributionSpec, ProbError, RandomSource};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("empty sample table")]
    EmptyTable,
    #[error("missing column '{0}'")]
    MissingColumn(String),
    #[error("duplicate factor name '{0}'")]
    DuplicateFactor(String),
    #[error("schema error at row {row}, column {col}: {msg}")]
    Schema { row: usize, col: usize, msg: String },
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorClass {
    Aleatory,
    Epistemic,
}

/// A named uncertain input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorSpec {
    pub name: String,
    pub dist: DistributionSpec,
    pub class: FactorClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionSpace {
    Discrete { alternatives: Vec<String> },
    Continuous { min: f64, max: f64 },
}

impl DecisionSpace {
    pub fn discrete(n: usize) -> Self {
        Self::Discrete {
            alternatives: (1..=n).map(|k| format!("a{k}")).collect(),
        }
    }

    pub fn n_alternatives(&self) -> Option<usize> {
        match self {
            Self::Discrete { alternatives } => Some(alternatives.len()),
            Self::Continuous { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            Self::Discrete { alternatives } if alternatives.len() < 2 => Err(
                ModelError::Invalid("discrete decision space needs at least 2 alternatives".into()),
            ),
            Self::Continuous { min, max } if !(min < max) => Err(ModelError::Invalid(
                "continuous decision space needs min < max".into(),
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum ClosedFormUtility {
    /// u = -c (y - a)^2
    Quadratic { c: f64 },
    /// u = -c { exp[g (y - a)] - g (y - a) - 1 }
    Linex { c: f64, gamma: f64 },
}

impl ClosedFormUtility {
    pub fn eval(&self, y: f64, a: f64) -> f64 {
        match *self {
            Self::Quadratic { c } => -c * (y - a) * (y - a),
            Self::Linex { c, gamma } => {
                let d = gamma * (y - a);
                -c * (d.exp() - d - 1.0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum UtilityModel {
    /// Three protection systems; utility -Y_e(a) - c_a with the load integrated
    /// out by quadrature.
    DiscreteWorkingExample,
    /// Design parameter scales the resistance; cost a*1e6 + 3e6.
    ContinuousWorkingExample,
    /// Utility columns supplied per sample per decision in the input table.
    Tabulated,
    /// Closed-form utility acting on an outcome column.
    ClosedForm {
        #[serde(flatten)]
        form: ClosedFormUtility,
        outcome: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub factors: Vec<FactorSpec>,
    pub decision: DecisionSpace,
    pub utility: UtilityModel,
}

impl Problem {
    pub fn validate(&self) -> Result<(), ModelError> {
        self.decision.validate()?;
        let mut seen = std::collections::HashSet::new();
        for f in &self.factors {
            if !seen.insert(f.name.as_str()) {
                return Err(ModelError::DuplicateFactor(f.name.clone()));
            }
        }
        Ok(())
    }

    pub fn factor(&self, name: &str) -> Option<&FactorSpec> {
        self.factors.iter().find(|f| f.name == name)
    }

    /// The discrete working example: load location M, three lognormal
    /// resistances, lognormal failure-cost factor.
    pub fn working_example_discrete() -> Self {
        let e = FactorClass::Epistemic;
        let f = |name: &str, dist: DistributionSpec| FactorSpec {
            name: name.into(),
            dist,
            class: e,
        };
        Problem {
            factors: vec![
                f("M", DistributionSpec::normal(7.5, 1.0).unwrap()),
                f("R1", DistributionSpec::lognormal(10.0, 1.0).unwrap()),
                f("R2", DistributionSpec::lognormal(12.0, 1.0).unwrap()),
                f("R3", DistributionSpec::lognormal(14.0, 1.0).unwrap()),
                f("CF", DistributionSpec::lognormal(3e7, 1e7).unwrap()),
            ],
            decision: DecisionSpace::discrete(3),
            utility: UtilityModel::DiscreteWorkingExample,
        }
    }

    /// The continuous variant: resistance is a * X_R, cost c_a(a) = a*1e6 + 3e6.
    pub fn working_example_continuous() -> Self {
        let e = FactorClass::Epistemic;
        let f = |name: &str, dist: DistributionSpec| FactorSpec {
            name: name.into(),
            dist,
            class: e,
        };
        Problem {
            factors: vec![
                f("M", DistributionSpec::normal(7.5, 1.0).unwrap()),
                f("XR", DistributionSpec::lognormal(1.0, 0.1).unwrap()),
                f("CF", DistributionSpec::lognormal(3e7, 1e7).unwrap()),
            ],
            decision: DecisionSpace::Continuous { min: 4.0, max: 20.0 },
            utility: UtilityModel::ContinuousWorkingExample,
        }
    }
}

/// Alternative costs of the discrete working example, in currency units.
pub const WE_COSTS: [f64; 3] = [13e6, 15e6, 17e6];

/// Continuous working-example design cost c_a(a).
pub fn we_continuous_cost(a: f64) -> f64 {
    a * 1e6 + 3e6
}

/// Expected loss c_f * E[(S - r)^+] for a unit-scale Gumbel load with
/// location m.
///
/// Uses the tail identity E[(S-r)^+] = int_r^inf (1 - F_S(s)) ds and the
/// substitution u = exp(-(s - m)), which turns the integrand into the smooth
/// function (1 - e^-u)/u on (0, e^(m-r)].
pub fn exceedance_expected_loss(m: f64, r: f64, c_f: f64) -> f64 {
    debug_assert!(c_f >= 0.0);
    if c_f == 0.0 {
        return 0.0;
    }
    c_f * gumbel_mean_exceedance(r - m)
}

/// E[(S - r)^+] for S ~ Gumbel(location 0, scale 1), with d = r - location.
fn gumbel_mean_exceedance(d: f64) -> f64 {
    let u_r = (-d).exp();
    let integrand = |u: f64| {
        if u == 0.0 {
            1.0
        } else {
            -(-u).exp_m1() / u
        }
    };
    integrate(integrand, 0.0, u_r, 1e-10).unwrap_or_else(|e| match e {
        ProbError::QuadratureNonConvergence { best, .. } => best,
        _ => unreachable!("finite smooth integrand"),
    })
}

/// Utility of the continuous working example at one epistemic sample.
pub fn we_continuous_utility(m: f64, x_r: f64, c_f: f64, a: f64) -> f64 {
    -exceedance_expected_loss(m, a * x_r, c_f) - we_continuous_cost(a)
}

/// Matrix of factor draws with optional outcome and per-decision utility
/// columns. Column-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTable {
    names: Vec<String>,
    cols: Vec<Vec<f64>>,
    /// True when utilities are conditional expectations over aleatory factors
    /// (the Y_e path) rather than realizations of the full model.
    pub aleatory_reduced: bool,
}

impl SampleTable {
    pub fn new(aleatory_reduced: bool) -> Self {
        Self {
            names: Vec::new(),
            cols: Vec::new(),
            aleatory_reduced,
        }
    }

    pub fn n(&self) -> usize {
        self.cols.first().map_or(0, Vec::len)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn push_column(&mut self, name: impl Into<String>, data: Vec<f64>) -> Result<(), ModelError> {
        let name = name.into();
        if self.names.iter().any(|n| *n == name) {
            return Err(ModelError::DuplicateFactor(name));
        }
        if !self.cols.is_empty() && data.len() != self.n() {
            return Err(ModelError::Invalid(format!(
                "column '{}' has {} rows, table has {}",
                name,
                data.len(),
                self.n()
            )));
        }
        self.names.push(name);
        self.cols.push(data);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Result<&[f64], ModelError> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.cols[i].as_slice())
            .ok_or_else(|| ModelError::MissingColumn(name.to_string()))
    }

    pub fn column_mut(&mut self, name: &str) -> Result<&mut Vec<f64>, ModelError> {
        let i = self
            .names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| ModelError::MissingColumn(name.to_string()))?;
        Ok(&mut self.cols[i])
    }

    /// Per-decision utility columns "u_a1", "u_a2", ... in decision order.
    pub fn utility_columns(&self) -> Result<Vec<&[f64]>, ModelError> {
        let mut found: Vec<(usize, &[f64])> = Vec::new();
        for (name, col) in self.names.iter().zip(&self.cols) {
            if let Some(idx) = name.strip_prefix("u_a").and_then(|s| s.parse::<usize>().ok()) {
                found.push((idx, col.as_slice()));
            }
        }
        if found.is_empty() {
            return Err(ModelError::MissingColumn("u_a<k>".into()));
        }
        found.sort_by_key(|(idx, _)| *idx);
        for (want, (got, _)) in (1..).zip(&found) {
            if *got != want {
                return Err(ModelError::MissingColumn(format!("u_a{want}")));
            }
        }
        Ok(found.into_iter().map(|(_, c)| c).collect())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<(), ModelError> {
        let mut wtr = csv::Writer::from_writer(&mut w);
        wtr.write_record(&self.names)
            .map_err(|e| ModelError::Csv(e.to_string()))?;
        for row in 0..self.n() {
            let rec: Vec<String> = self.cols.iter().map(|c| format!("{:.17e}", c[row])).collect();
            wtr.write_record(&rec)
                .map_err(|e| ModelError::Csv(e.to_string()))?;
        }
        wtr.flush().map_err(|e| ModelError::Csv(e.to_string()))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R, aleatory_reduced: bool) -> Result<Self, ModelError> {
        let mut rdr = csv::Reader::from_reader(r);
        let headers: Vec<String> = rdr
            .headers()
            .map_err(|e| ModelError::Csv(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        if headers.is_empty() {
            return Err(ModelError::EmptyTable);
        }
        let mut cols: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
        for (row_idx, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| ModelError::Csv(e.to_string()))?;
            if rec.len() != headers.len() {
                return Err(ModelError::Schema {
                    row: row_idx + 1,
                    col: rec.len(),
                    msg: format!("expected {} fields, got {}", headers.len(), rec.len()),
                });
            }
            for (col_idx, field) in rec.iter().enumerate() {
                let v: f64 = field.trim().parse().map_err(|_| ModelError::Schema {
                    row: row_idx + 1,
                    col: col_idx,
                    msg: format!("non-numeric cell '{field}'"),
                })?;
                cols[col_idx].push(v);
            }
        }
        if cols[0].is_empty() {
            return Err(ModelError::EmptyTable);
        }
        Ok(Self {
            names: headers,
            cols,
            aleatory_reduced,
        })
    }
}

/// Draws epistemic factor columns for a problem. Each factor gets its own
/// substream, so results do not depend on factor evaluation order elsewhere.
pub fn sample_factors(problem: &Problem, n: usize, src: &RandomSource) -> Result<SampleTable, ModelError> {
    problem.validate()?;
    let mut table = SampleTable::new(true);
    for (i, f) in problem.factors.iter().enumerate() {
        if f.class == FactorClass::Aleatory {
            continue;
        }
        table.push_column(f.name.clone(), f.dist.sample(n, &src.split(i as u64)))?;
    }
    Ok(table)
}

/// Fills per-decision utility columns (discrete) or validates the ingredients
/// for per-sample utility evaluation (continuous / closed form).
///
/// For the built-in models the aleatory load is integrated out by quadrature;
/// it is never sampled here.
pub fn evaluate_utilities(
    problem: &Problem,
    samples: &SampleTable,
    _src: &RandomSource,
) -> Result<SampleTable, ModelError> {
    if samples.n() == 0 {
        return Err(ModelError::EmptyTable);
    }
    let mut table = samples.clone();
    match &problem.utility {
        UtilityModel::DiscreteWorkingExample => {
            let m = table.column("M")?.to_vec();
            let cf = table.column("CF")?.to_vec();
            let rs: Vec<Vec<f64>> = (1..=3)
                .map(|k| table.column(&format!("R{k}")).map(<[f64]>::to_vec))
                .collect::<Result<_, _>>()?;
            for (a_idx, r) in rs.iter().enumerate() {
                let u: Vec<f64> = (0..table.n())
                    .map(|k| -exceedance_expected_loss(m[k], r[k], cf[k]) - WE_COSTS[a_idx])
                    .collect();
                table.push_column(format!("u_a{}", a_idx + 1), u)?;
            }
            table.aleatory_reduced = true;
        }
        UtilityModel::ContinuousWorkingExample => {
            table.column("M")?;
            table.column("XR")?;
            table.column("CF")?;
            table.aleatory_reduced = true;
        }
        UtilityModel::Tabulated => match &problem.decision {
            DecisionSpace::Discrete { alternatives } => {
                let cols = table.utility_columns()?;
                if cols.len() != alternatives.len() {
                    return Err(ModelError::MissingColumn(format!(
                        "u_a{}",
                        cols.len() + 1
                    )));
                }
            }
            DecisionSpace::Continuous { .. } => {
                return Err(ModelError::Invalid(
                    "tabulated utilities require a discrete decision space".into(),
                ))
            }
        },
        UtilityModel::ClosedForm { outcome, .. } => {
            table.column(outcome)?;
        }
    }
    Ok(table)
}

/// Column means of the per-decision utilities.
pub fn prior_expected_utilities(table: &SampleTable) -> Result<Vec<f64>, ModelError> {
    if table.n() == 0 {
        return Err(ModelError::EmptyTable);
    }
    let cols = table.utility_columns()?;
    Ok(cols
        .iter()
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect())
}

/// Index of the a-priori optimal alternative (0-based); ties break toward the
/// lowest index.
pub fn prior_optimum(table: &SampleTable) -> Result<usize, ModelError> {
    let eu = prior_expected_utilities(table)?;
    Ok(argmax(&eu))
}

/// First index achieving the maximum.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Discrete working example with the load sampled explicitly (the full-Y
/// path). Used only for the full-model value of perfect information and the
/// information value of the load itself.
pub fn working_example_full_y(n: usize, src: &RandomSource) -> Result<SampleTable, ModelError> {
    let problem = Problem::working_example_discrete();
    let mut table = sample_factors(&problem, n, src)?;
    let m = table.column("M")?.to_vec();
    let mut rng = src.split(1000).rng();
    let s: Vec<f64> = m
        .iter()
        .map(|&mk| {
            let u = loop {
                let u = rand::Rng::gen::<f64>(&mut rng);
                if u > 0.0 && u < 1.0 {
                    break u;
                }
            };
            mk - (-u.ln()).ln()
        })
        .collect();
    table.push_column("S", s.clone())?;
    let cf = table.column("CF")?.to_vec();
    for a_idx in 0..3 {
        let r = table.column(&format!("R{}", a_idx + 1))?.to_vec();
        let u: Vec<f64> = (0..table.n())
            .map(|k| {
                let y = cf[k] * (s[k] - r[k]).max(0.0);
                -y - WE_COSTS[a_idx]
            })
            .collect();
        table.push_column(format!("u_a{}", a_idx + 1), u)?;
    }
    table.aleatory_reduced = false;
    Ok(table)
}
