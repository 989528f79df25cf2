//! Information value when utilities hinge on a rare event: conditional event
//! probabilities are recovered from event-conditioned samples by a kernel
//! density ratio, so the smoothed conditional utility never has to resolve
//! the small probability directly from the raw indicator.

use crate::discrete::{Estimate, Estimator, VoiError};
use crate::model::{argmax, ModelError, SampleTable};
use crate::prob::DistributionSpec;
use serde::{Deserialize, Serialize};

/// Utilities of one alternative in the binary-event setting.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EventUtilities {
    /// Utility when the event occurs.
    pub on_event: f64,
    /// Utility when it does not.
    pub no_event: f64,
}

/// A decision problem whose utility depends on the factors only through a
/// rare binary event. Per alternative: the marginal event probability, the
/// event-conditioned factor samples, and the two utility levels.
pub struct RareEventProblem {
    pub factor: String,
    pub prior: DistributionSpec,
    pub p_event: Vec<f64>,
    /// Event-conditioned samples of the factor, one set per alternative.
    pub conditioned: Vec<Vec<f64>>,
    pub utilities: Vec<EventUtilities>,
}

/// Minimum recommended number of event-conditioned samples per alternative.
pub const MIN_CONDITIONED: usize = 200;

pub struct RareEventAnalysis {
    pub expected_utilities: Vec<f64>,
    pub a_opt: usize,
    /// Alternatives with fewer than [`MIN_CONDITIONED`] conditioned samples.
    pub sparse_alternatives: Vec<usize>,
}

/// Two-term mixture u(event) p + u(no event) (1 - p).
pub fn expected_utility_rare(p_cond: f64, u: EventUtilities) -> f64 {
    u.on_event * p_cond + u.no_event * (1.0 - p_cond)
}

/// One-dimensional Gaussian kernel density estimate with Silverman's
/// bandwidth.
pub struct Kde {
    points: Vec<f64>,
    bandwidth: f64,
}

impl Kde {
    pub fn fit(points: &[f64]) -> Result<Self, VoiError> {
        if points.len() < 2 {
            return Err(VoiError::Model(ModelError::Invalid(
                "density estimation needs at least two samples".into(),
            )));
        }
        let n = points.len() as f64;
        let mean = points.iter().sum::<f64>() / n;
        let var = points.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        let std = var.sqrt();
        let mut sorted = points.to_vec();
        sorted.sort_by(f64::total_cmp);
        let q = |p: f64| sorted[((p * (n - 1.0)).round() as usize).min(points.len() - 1)];
        let iqr = q(0.75) - q(0.25);
        let spread = if iqr > 0.0 { std.min(iqr / 1.349) } else { std };
        if !(spread > 0.0) {
            return Err(VoiError::Model(ModelError::Invalid(
                "density estimation needs non-degenerate samples".into(),
            )));
        }
        let bandwidth = 0.9 * spread * n.powf(-0.2);
        Ok(Self {
            points: sorted,
            bandwidth,
        })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn density(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let norm = 1.0 / ((self.points.len() as f64) * h * (2.0 * std::f64::consts::PI).sqrt());
        // Kernel support is effectively +-8 bandwidths.
        let lo = self.points.partition_point(|&p| p < x - 8.0 * h);
        let hi = self.points.partition_point(|&p| p <= x + 8.0 * h);
        let mut sum = 0.0;
        for &p in &self.points[lo..hi] {
            let z = (x - p) / h;
            sum += (-0.5 * z * z).exp();
        }
        norm * sum
    }
}

impl RareEventProblem {
    pub fn validate(&self) -> Result<(), VoiError> {
        let m = self.p_event.len();
        if m == 0 || self.conditioned.len() != m || self.utilities.len() != m {
            return Err(VoiError::Model(ModelError::Invalid(
                "event probabilities, conditioned samples and utilities must align".into(),
            )));
        }
        for (i, &p) in self.p_event.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                return Err(VoiError::Model(ModelError::Invalid(format!(
                    "event probability {p} of alternative {} is outside [0, 1]",
                    i + 1
                ))));
            }
        }
        Ok(())
    }

    /// Unconditional expected utilities and a-priori optimum. Needs no
    /// samples: E[u] = u_event p + u_no_event (1 - p).
    pub fn analyze(&self) -> Result<RareEventAnalysis, VoiError> {
        self.validate()?;
        let expected_utilities: Vec<f64> = self
            .p_event
            .iter()
            .zip(&self.utilities)
            .map(|(&p, u)| u.on_event * p + u.no_event * (1.0 - p))
            .collect();
        let a_opt = argmax(&expected_utilities);
        let sparse_alternatives = self
            .conditioned
            .iter()
            .enumerate()
            .filter(|(_, c)| c.len() < MIN_CONDITIONED)
            .map(|(i, _)| i)
            .collect();
        Ok(RareEventAnalysis {
            expected_utilities,
            a_opt,
            sparse_alternatives,
        })
    }

    /// Event probability conditional on the factor value, for one
    /// alternative: p(x) = p_F f_{X|event}(x) / f_X(x), clipped to [0, 1].
    pub fn conditional_event_probability(
        &self,
        alternative: usize,
        kde: &Kde,
        x: f64,
    ) -> Result<f64, VoiError> {
        let f_prior = self.prior.pdf(x);
        if !(f_prior > 1e-300) {
            return Err(VoiError::UndefinedDensity { x });
        }
        let p = self.p_event[alternative] * kde.density(x) / f_prior;
        Ok(p.clamp(0.0, 1.0))
    }

    /// Conditional expected utility of one alternative given the factor.
    pub fn conditional_expected_utility(
        &self,
        alternative: usize,
        kde: &Kde,
        x: f64,
    ) -> Result<f64, VoiError> {
        let p = self.conditional_event_probability(alternative, kde, x)?;
        Ok(expected_utility_rare(p, self.utilities[alternative]))
    }

    /// EVPPI of the factor. The density-ratio mixture plays the role of the
    /// smoothed conditional utility; the value is the mean conditional
    /// improvement over the a-priori optimum, evaluated on prior samples of
    /// the factor.
    pub fn evppi(
        &self,
        prior_samples: &[f64],
        _estimator: Estimator,
    ) -> Result<RareEvppi, VoiError> {
        let analysis = self.analyze()?;
        if prior_samples.is_empty() {
            return Err(VoiError::Model(ModelError::EmptyTable));
        }
        let kdes: Vec<Kde> = self
            .conditioned
            .iter()
            .map(|c| Kde::fit(c))
            .collect::<Result<_, _>>()?;
        let m = self.p_event.len();
        let mut contribs = Vec::with_capacity(prior_samples.len());
        let mut dc_count = 0usize;
        let mut cond = vec![0.0; m];
        for &x in prior_samples {
            for a in 0..m {
                cond[a] = self.conditional_expected_utility(a, &kdes[a], x)?;
            }
            let a_star = argmax(&cond);
            if a_star != analysis.a_opt {
                dc_count += 1;
            }
            contribs.push(cond[a_star] - cond[analysis.a_opt]);
        }
        Ok(RareEvppi {
            estimate: Estimate::from_contributions(&contribs),
            dc: dc_count as f64 / prior_samples.len() as f64,
            analysis,
        })
    }
}

pub struct RareEvppi {
    pub estimate: Estimate,
    pub dc: f64,
    pub analysis: RareEventAnalysis,
}

/// Builds a rare-event problem from a long-format table of event-conditioned
/// samples: a "decision" column with alternative indices 1..m and a factor
/// column. Event probabilities and utilities are supplied alongside.
pub fn problem_from_table(
    table: &SampleTable,
    factor: &str,
    prior: DistributionSpec,
    p_event: Vec<f64>,
    utilities: Vec<EventUtilities>,
) -> Result<RareEventProblem, VoiError> {
    let decisions = table.column("decision")?;
    let x = table.column(factor)?;
    let m = p_event.len();
    let mut conditioned = vec![Vec::new(); m];
    for (row, (&d, &v)) in decisions.iter().zip(x).enumerate() {
        let idx = d.round();
        if (idx - d).abs() > 1e-9 || idx < 1.0 || idx > m as f64 {
            return Err(VoiError::Model(ModelError::Invalid(format!(
                "row {}: expected a decision index in 1..={m}, got {d}",
                row + 2
            ))));
        }
        conditioned[idx as usize - 1].push(v);
    }
    Ok(RareEventProblem {
        factor: factor.to_string(),
        prior,
        p_event,
        conditioned,
        utilities,
    })
}
