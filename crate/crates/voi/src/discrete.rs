//! Discrete-decision information-value stack: CVPPI profiles, EVPPI (plug-in
//! and re-optimization estimators), group information values, EVPI, EVPM,
//! relative information value, decision-change probability, sample information
//! value and the comparison first-order Sobol' index.

use crate::model::{argmax, prior_expected_utilities, prior_optimum, ModelError, SampleTable};
use crate::prob::RandomSource;
use crate::smooth::{SmoothError, Smoother, SmootherConfig};
use rand::RngCore;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VoiError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Smooth(#[from] SmoothError),
    #[error("factor group of size {0} not supported (at most 2)")]
    GroupTooLarge(usize),
    #[error("table is not aleatory-reduced; EVPM on a full-model table would silently compute the EVPI")]
    NotAleatoryReduced,
    #[error("normalizer {0} is at or below the noise floor; relative value undefined")]
    UndefinedNormalizer(f64),
    #[error("output column has zero variance; Sobol' index undefined")]
    ZeroOutputVariance,
    #[error("operation requires a discrete decision space")]
    ContinuousUnsupported,
    #[error("prior density vanishes at x = {x}; conditional event probability undefined there")]
    UndefinedDensity { x: f64 },
}

/// A Monte Carlo estimate with its standard error.
///
/// `value` is the headline number: negative means are clipped at zero and
/// estimates within two standard errors of zero are reported as zero. `raw`
/// keeps the unclipped mean.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub raw: f64,
    pub se: f64,
}

impl Estimate {
    pub fn from_contributions(contribs: &[f64]) -> Self {
        let n = contribs.len() as f64;
        let mean = contribs.iter().sum::<f64>() / n;
        let var = contribs.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / (n - 1.0).max(1.0);
        let se = (var / n).sqrt();
        let value = if mean <= 0.0 || mean.abs() < 2.0 * se {
            0.0
        } else {
            mean
        };
        Self { value, raw: mean, se }
    }

    pub fn zero() -> Self {
        Self { value: 0.0, raw: 0.0, se: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Plugin,
    Reoptimize,
}

impl Default for Estimator {
    fn default() -> Self {
        Self::Reoptimize
    }
}

/// Result of one EVPPI evaluation. Both estimators are computed from the same
/// smoothers; `estimate` is the one that was requested.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EvppiOutcome {
    pub estimate: Estimate,
    pub plugin: Estimate,
    pub reoptimize: Estimate,
    /// Probability that the conditionally optimal decision differs from the
    /// a-priori optimum.
    pub dc: f64,
}

/// Discrete-decision analysis over an immutable sample table.
pub struct DiscreteVoi<'t> {
    table: &'t SampleTable,
    utilities: Vec<&'t [f64]>,
    expected_utilities: Vec<f64>,
    a_opt: usize,
}

impl<'t> DiscreteVoi<'t> {
    pub fn new(table: &'t SampleTable) -> Result<Self, VoiError> {
        let utilities = table.utility_columns()?;
        let expected_utilities = prior_expected_utilities(table)?;
        let a_opt = prior_optimum(table)?;
        Ok(Self { table, utilities, expected_utilities, a_opt })
    }

    pub fn n(&self) -> usize {
        self.table.n()
    }

    pub fn a_opt(&self) -> usize {
        self.a_opt
    }

    pub fn expected_utilities(&self) -> &[f64] {
        &self.expected_utilities
    }

    /// One conditional-expectation smoother per decision alternative, fitted
    /// on (x_v, u(., a)).
    pub fn fit_smoothers(
        &self,
        cond: &[f64],
        d: usize,
        cfg: &SmootherConfig,
    ) -> Result<Vec<Smoother>, VoiError> {
        self.utilities
            .iter()
            .map(|u| Smoother::fit(cond, u, d, cfg).map_err(VoiError::from))
            .collect()
    }

    /// CVPPI(x) = max_a S(x, a) - S(x, a_opt); nonnegative by construction.
    pub fn cvppi(&self, smoothers: &[Smoother], x: &[f64]) -> Result<f64, VoiError> {
        let preds: Vec<f64> = smoothers
            .iter()
            .map(|s| s.predict(x))
            .collect::<Result<_, _>>()?;
        let best = preds.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(best - preds[self.a_opt])
    }

    /// EVPPI of a factor group (at most two factors).
    pub fn evppi(
        &self,
        factors: &[&str],
        estimator: Estimator,
        cfg: &SmootherConfig,
    ) -> Result<EvppiOutcome, VoiError> {
        if factors.is_empty() || factors.len() > 2 {
            return Err(VoiError::GroupTooLarge(factors.len()));
        }
        let d = factors.len();
        let cols: Vec<&[f64]> = factors
            .iter()
            .map(|f| self.table.column(f))
            .collect::<Result<_, _>>()?;
        let n = self.n();
        let mut cond = Vec::with_capacity(n * d);
        for k in 0..n {
            for c in &cols {
                cond.push(c[k]);
            }
        }
        self.evppi_on_conditioner(&cond, d, estimator, cfg)
    }

    /// EVPPI with an arbitrary conditioning variable (one value, or pair of
    /// values, per sample row). This is the common path for factor EVPPI and
    /// for the sample information value.
    pub fn evppi_on_conditioner(
        &self,
        cond: &[f64],
        d: usize,
        estimator: Estimator,
        cfg: &SmootherConfig,
    ) -> Result<EvppiOutcome, VoiError> {
        let smoothers = self.fit_smoothers(cond, d, cfg)?;
        let n = self.n();
        let mut plugin = Vec::with_capacity(n);
        let mut reopt = Vec::with_capacity(n);
        let mut changed = 0usize;
        let mut preds = vec![0.0; smoothers.len()];
        for k in 0..n {
            let x = &cond[k * d..(k + 1) * d];
            for (a, s) in smoothers.iter().enumerate() {
                preds[a] = s.predict(x)?;
            }
            let cond_opt = argmax(&preds);
            plugin.push(preds[cond_opt] - preds[self.a_opt]);
            reopt.push(self.utilities[cond_opt][k] - self.utilities[self.a_opt][k]);
            if cond_opt != self.a_opt {
                changed += 1;
            }
        }
        let plugin = Estimate::from_contributions(&plugin);
        let reoptimize = Estimate::from_contributions(&reopt);
        Ok(EvppiOutcome {
            estimate: match estimator {
                Estimator::Plugin => plugin,
                Estimator::Reoptimize => reoptimize,
            },
            plugin,
            reoptimize,
            dc: changed as f64 / n as f64,
        })
    }

    /// Probability of a decision change given knowledge of the factor group.
    pub fn decision_change_probability(
        &self,
        factors: &[&str],
        cfg: &SmootherConfig,
    ) -> Result<f64, VoiError> {
        Ok(self.evppi(factors, Estimator::Reoptimize, cfg)?.dc)
    }

    /// Expected value of perfect information on all inputs: row-wise argmax.
    pub fn evpi(&self) -> Estimate {
        let n = self.n();
        let mut contribs = Vec::with_capacity(n);
        for k in 0..n {
            let best = self
                .utilities
                .iter()
                .map(|u| u[k])
                .fold(f64::NEG_INFINITY, f64::max);
            contribs.push(best - self.utilities[self.a_opt][k]);
        }
        Estimate::from_contributions(&contribs)
    }

    /// Expected value of the perfect model. Requires an aleatory-reduced
    /// table (utilities that are conditional expectations over the aleatory
    /// factors); on such a table the EVPM equals the EVPI.
    pub fn evpm(&self) -> Result<Estimate, VoiError> {
        if !self.table.aleatory_reduced {
            return Err(VoiError::NotAleatoryReduced);
        }
        Ok(self.evpi())
    }

    /// Information value of data about a factor: draw `n_s` data points per
    /// sample conditional on the factor value, reduce them to a scalar
    /// sufficient statistic, and compute the EVPPI of that statistic.
    pub fn sample_information_value<D, T>(
        &self,
        factor: &str,
        n_s: usize,
        mut draw: D,
        statistic: T,
        src: &RandomSource,
        estimator: Estimator,
        cfg: &SmootherConfig,
    ) -> Result<EvppiOutcome, VoiError>
    where
        D: FnMut(&mut dyn RngCore, f64) -> f64,
        T: Fn(&[f64]) -> f64,
    {
        if n_s == 0 {
            return Ok(EvppiOutcome {
                estimate: Estimate::zero(),
                plugin: Estimate::zero(),
                reoptimize: Estimate::zero(),
                dc: 0.0,
            });
        }
        let xs = self.table.column(factor)?;
        let mut rng = src.rng();
        let mut data = Vec::with_capacity(n_s);
        let mut z = Vec::with_capacity(self.n());
        for &x in xs {
            data.clear();
            for _ in 0..n_s {
                data.push(draw(&mut rng, x));
            }
            z.push(statistic(&data));
        }
        // A monotone transform of the statistic conditions on the same
        // sigma-algebra; the log substantially improves smoothing for
        // heavy-tailed positive statistics.
        if z.iter().all(|&v| v > 0.0) {
            for v in &mut z {
                *v = v.ln();
            }
        }
        self.evppi_on_conditioner(&z, 1, estimator, cfg)
    }

    /// First-order Sobol' index of an output column with respect to a factor,
    /// estimated as Var[S(x_i)] / Var[y] with S a fitted smoother.
    pub fn sobol_first_order(
        &self,
        factor: &str,
        output: &str,
        cfg: &SmootherConfig,
    ) -> Result<SobolResult, VoiError> {
        sobol_first_order(self.table, factor, output, cfg)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SobolResult {
    /// Clipped to [0, 1].
    pub value: f64,
    pub raw: f64,
    pub se: f64,
}

pub fn sobol_first_order(
    table: &SampleTable,
    factor: &str,
    output: &str,
    cfg: &SmootherConfig,
) -> Result<SobolResult, VoiError> {
    let x = table.column(factor)?;
    let y = table.column(output)?;
    let n = y.len();
    let var_y = variance(y);
    if var_y <= 0.0 {
        return Err(VoiError::ZeroOutputVariance);
    }
    let s = Smoother::fit_1d(x, y, cfg)?;
    let fitted: Vec<f64> = x.iter().map(|&q| s.predict(&[q])).collect::<Result<_, _>>()?;
    let raw = variance(&fitted) / var_y;
    // Block standard error: the index recomputed on contiguous sample blocks.
    let blocks = 10.min(n / 20).max(2);
    let mut vals = Vec::with_capacity(blocks);
    for b in 0..blocks {
        let lo = b * n / blocks;
        let hi = (b + 1) * n / blocks;
        let vy = variance(&y[lo..hi]);
        if vy > 0.0 {
            vals.push(variance(&fitted[lo..hi]) / vy);
        }
    }
    let se = if vals.len() > 1 {
        let m = vals.iter().sum::<f64>() / vals.len() as f64;
        let v = vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (vals.len() - 1) as f64;
        (v / vals.len() as f64).sqrt()
    } else {
        0.0
    };
    Ok(SobolResult { value: raw.clamp(0.0, 1.0), raw, se })
}

fn variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0).max(1.0)
}

/// V / normalizer; errors when the normalizer is at or below the noise floor.
pub fn relative_iv(v: f64, normalizer: Estimate) -> Result<f64, VoiError> {
    if normalizer.value <= 0.0 {
        return Err(VoiError::UndefinedNormalizer(normalizer.raw));
    }
    Ok(v / normalizer.value)
}
