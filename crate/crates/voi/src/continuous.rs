//! Information value for continuous decision spaces: decision-as-random-
//! variable augmentation, smoothed profile optimization, closed-form
//! conditional optima for quadratic and LINEX utilities, and continuous
//! EVPI / EVPM.

use crate::discrete::{Estimate, Estimator, VoiError};
use crate::model::{
    we_continuous_utility, ClosedFormUtility, ModelError, Problem, SampleTable, UtilityModel,
};
use crate::prob::RandomSource;
use crate::smooth::{Smoother, SmootherConfig};
use rand::RngCore;
use serde::Serialize;

/// Per-sample utility evaluation u(x^(k), a), cheap in `a`.
pub enum ContinuousUtility<'t> {
    WorkingExample {
        m: &'t [f64],
        xr: &'t [f64],
        cf: &'t [f64],
    },
    ClosedForm {
        form: ClosedFormUtility,
        y: &'t [f64],
    },
}

impl<'t> ContinuousUtility<'t> {
    pub fn from_problem(problem: &Problem, table: &'t SampleTable) -> Result<Self, VoiError> {
        match &problem.utility {
            UtilityModel::ContinuousWorkingExample => Ok(Self::WorkingExample {
                m: table.column("M")?,
                xr: table.column("XR")?,
                cf: table.column("CF")?,
            }),
            UtilityModel::ClosedForm { form, outcome } => Ok(Self::ClosedForm {
                form: *form,
                y: table.column(outcome)?,
            }),
            other => Err(VoiError::Model(ModelError::Invalid(format!(
                "utility model {other:?} has no per-sample continuous evaluation"
            )))),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Self::WorkingExample { m, .. } => m.len(),
            Self::ClosedForm { y, .. } => y.len(),
        }
    }

    pub fn eval(&self, k: usize, a: f64) -> f64 {
        match self {
            Self::WorkingExample { m, xr, cf } => we_continuous_utility(m[k], xr[k], cf[k], a),
            Self::ClosedForm { form, y } => form.eval(y[k], a),
        }
    }

    /// Mean utility over a deterministic subsample, used inside optimizers.
    fn mean_utility_strided(&self, a: f64, stride: usize) -> f64 {
        let n = self.n();
        let mut sum = 0.0;
        let mut count = 0usize;
        let mut k = 0;
        while k < n {
            sum += self.eval(k, a);
            count += 1;
            k += stride;
        }
        sum / count as f64
    }
}

/// Coarse grid scan followed by golden-section refinement.
pub fn maximize_1d<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, grid: usize, tol: f64) -> (f64, f64) {
    let grid = grid.max(4);
    let mut best_i = 0;
    let mut best_v = f64::NEG_INFINITY;
    let at = |i: usize| lo + (hi - lo) * i as f64 / (grid - 1) as f64;
    for i in 0..grid {
        let v = f(at(i));
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    let mut a = at(best_i.saturating_sub(1));
    let mut b = at((best_i + 1).min(grid - 1));
    // Golden-section on the bracketing interval.
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Adds a uniformly drawn decision column "a" and the realized utility column
/// "u" to the table.
pub fn augment(
    table: &SampleTable,
    utility: &ContinuousUtility,
    bounds: (f64, f64),
    src: &RandomSource,
) -> Result<SampleTable, VoiError> {
    let (a_min, a_max) = bounds;
    if !(a_min < a_max) {
        return Err(VoiError::Model(ModelError::Invalid(
            "augmentation bounds need min < max".into(),
        )));
    }
    let n = table.n();
    let mut rng = src.rng();
    let a: Vec<f64> = (0..n)
        .map(|_| {
            let u = ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0);
            a_min + u * (a_max - a_min)
        })
        .collect();
    let u: Vec<f64> = a.iter().enumerate().map(|(k, &ak)| utility.eval(k, ak)).collect();
    let mut out = table.clone();
    out.push_column("a", a)?;
    out.push_column("u", u)?;
    Ok(out)
}

/// Interpolated map x -> conditionally optimal decision, built from profile
/// optimizations at quantile knots. Monotone cubic (Fritsch-Carlson)
/// interpolation between knots.
#[derive(Debug, Clone, Serialize)]
pub struct OptimalDecisionMap {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
    derivs: Vec<f64>,
    pub bounds: (f64, f64),
    /// Knots whose optimizer landed on a decision bound; many of these mean
    /// the bounds are too tight.
    pub bound_hits: usize,
}

impl OptimalDecisionMap {
    fn new(knots: Vec<f64>, values: Vec<f64>, bounds: (f64, f64), bound_hits: usize) -> Self {
        let derivs = pchip_derivatives(&knots, &values);
        Self { knots, values, derivs, bounds, bound_hits }
    }

    /// Builds a map from externally computed knot optima.
    pub fn from_knots(knots: Vec<f64>, values: Vec<f64>, bounds: (f64, f64)) -> Self {
        Self::new(knots, values, bounds, 0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let m = self.knots.len();
        if x <= self.knots[0] {
            return self.values[0];
        }
        if x >= self.knots[m - 1] {
            return self.values[m - 1];
        }
        let i = self.knots.partition_point(|&k| k <= x) - 1;
        let h = self.knots[i + 1] - self.knots[i];
        let t = (x - self.knots[i]) / h;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.derivs[i], self.derivs[i + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * h * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * h * d1;
        v.clamp(self.bounds.0, self.bounds.1)
    }

    pub fn warn_bounds(&self) -> bool {
        self.bound_hits * 20 > self.knots.len()
    }
}

/// Fritsch-Carlson monotone derivative limiter.
fn pchip_derivatives(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 1 {
        return vec![0.0];
    }
    let h: Vec<f64> = (0..n - 1).map(|i| x[i + 1] - x[i]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut d = vec![0.0; n];
    d[0] = delta[0];
    d[n - 1] = delta[n - 2];
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] <= 0.0 {
            d[i] = 0.0;
        } else {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    for i in 0..n - 1 {
        if delta[i] == 0.0 {
            d[i] = 0.0;
            d[i + 1] = 0.0;
        } else {
            let a = d[i] / delta[i];
            let b = d[i + 1] / delta[i];
            let s = a * a + b * b;
            if s > 9.0 {
                let tau = 3.0 / s.sqrt();
                d[i] = tau * a * delta[i];
                d[i + 1] = tau * b * delta[i];
            }
        }
    }
    d
}

pub const DEFAULT_KNOTS: usize = 50;
const PROFILE_GRID: usize = 64;

/// Conditionally optimal decision map for one factor, fitted on the augmented
/// table.
///
/// At each of `n_knots` equal-probability knots of the factor, the value
/// profile over the decision is estimated by a product-kernel local
/// regression: tricube weights over the nearest span-fraction of samples in
/// the factor, and within that window a locally weighted quadratic in the
/// decision. The profile is maximized by a coarse grid and golden-section
/// refinement, and the knot optima are interpolated monotonically.
pub fn conditional_optimum(
    augmented: &SampleTable,
    factor: &str,
    bounds: (f64, f64),
    cfg: &SmootherConfig,
    n_knots: usize,
) -> Result<OptimalDecisionMap, VoiError> {
    let x = augmented.column(factor)?;
    let a = augmented.column("a")?;
    let u = augmented.column("u")?;
    let n = x.len();
    if n < 50 {
        return Err(VoiError::Smooth(crate::smooth::SmoothError::TooFewSamples {
            need: 50,
            got: n,
        }));
    }
    let span = cfg.profile_span.clamp(0.05, 1.0);

    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_by(|&i, &j| x[i as usize].total_cmp(&x[j as usize]));
    let xs: Vec<f64> = order.iter().map(|&i| x[i as usize]).collect();
    let as_: Vec<f64> = order.iter().map(|&i| a[i as usize]).collect();
    let us: Vec<f64> = order.iter().map(|&i| u[i as usize]).collect();

    let n_knots = n_knots.max(4);
    let mut knots = Vec::with_capacity(n_knots);
    for i in 0..n_knots {
        let pos = i * (n - 1) / (n_knots - 1);
        knots.push(xs[pos]);
    }
    knots.dedup();

    let k_x = ((span * n as f64).ceil() as usize).clamp(50, n);
    let tol = 1e-4 * (bounds.1 - bounds.0);
    let mut values = Vec::with_capacity(knots.len());
    let mut bound_hits = 0usize;
    // Scratch triples (a, u, weight) for the current factor window.
    let mut win: Vec<(f64, f64, f64)> = Vec::with_capacity(k_x);
    for &xk in &knots {
        let (lo, hi) = contiguous_window(&xs, xk, k_x);
        let dmax = xs[lo..hi]
            .iter()
            .map(|v| (v - xk).abs())
            .fold(0.0f64, f64::max)
            .max(1e-300);
        win.clear();
        for i in lo..hi {
            win.push((as_[i], us[i], tricube((xs[i] - xk).abs() / dmax)));
        }
        win.sort_by(|p, q| p.0.total_cmp(&q.0));
        let k_a = ((span * win.len() as f64).ceil() as usize).clamp(30, win.len());
        let profile = |a0: f64| local_profile_value(&win, a0, k_a);
        let (a_star, _) = maximize_1d(profile, bounds.0, bounds.1, PROFILE_GRID, tol);
        if (a_star - bounds.0).abs() < 2.0 * tol || (bounds.1 - a_star).abs() < 2.0 * tol {
            bound_hits += 1;
        }
        values.push(a_star);
    }
    Ok(OptimalDecisionMap::new(knots, values, bounds, bound_hits))
}

/// Contiguous window of the `k` samples nearest to `x0` in a sorted slice.
fn contiguous_window(xs: &[f64], x0: f64, k: usize) -> (usize, usize) {
    let n = xs.len();
    let k = k.min(n);
    let mut hi = xs.partition_point(|&v| v < x0);
    let mut lo = hi;
    while hi - lo < k {
        if lo == 0 {
            hi = k;
            break;
        }
        if hi == n {
            lo = n - k;
            break;
        }
        if x0 - xs[lo - 1] <= xs[hi] - x0 {
            lo -= 1;
        } else {
            hi += 1;
        }
    }
    (lo, hi)
}

fn tricube(t: f64) -> f64 {
    if t >= 1.0 {
        return 0.0;
    }
    let c = 1.0 - t * t * t;
    c * c * c
}

/// Locally weighted quadratic value profile at decision `a0`, over triples
/// (a, u, factor-weight) sorted by a.
fn local_profile_value(win: &[(f64, f64, f64)], a0: f64, k_a: usize) -> f64 {
    let n = win.len();
    let k_a = k_a.min(n);
    // Contiguous nearest-k window in a.
    let mut hi = win.partition_point(|p| p.0 < a0);
    let mut lo = hi;
    while hi - lo < k_a {
        if lo == 0 {
            hi = k_a;
            break;
        }
        if hi == n {
            lo = n - k_a;
            break;
        }
        if a0 - win[lo - 1].0 <= win[hi].0 - a0 {
            lo -= 1;
        } else {
            hi += 1;
        }
    }
    let da_max = win[lo..hi]
        .iter()
        .map(|p| (p.0 - a0).abs())
        .fold(0.0f64, f64::max)
        .max(1e-300);
    // Weighted quadratic regression of u on (a - a0); the profile value at a0
    // is the intercept.
    let mut s = [0.0f64; 5];
    let mut t = [0.0f64; 3];
    for p in &win[lo..hi] {
        let w = p.2 * tricube((p.0 - a0).abs() / da_max);
        if w <= 0.0 {
            continue;
        }
        let d = p.0 - a0;
        let d2 = d * d;
        s[0] += w;
        s[1] += w * d;
        s[2] += w * d2;
        s[3] += w * d2 * d;
        s[4] += w * d2 * d2;
        t[0] += w * p.1;
        t[1] += w * d * p.1;
        t[2] += w * d2 * p.1;
    }
    if s[0] <= 0.0 {
        return f64::NEG_INFINITY;
    }
    // 3x3 symmetric solve by Cramer's rule.
    let (m00, m01, m02, m11, m12, m22) = (s[0], s[1], s[2], s[2], s[3], s[4]);
    let det = m00 * (m11 * m22 - m12 * m12) - m01 * (m01 * m22 - m12 * m02)
        + m02 * (m01 * m12 - m11 * m02);
    if det.abs() < 1e-12 * (m00 * m11 * m22).abs().max(1e-300) {
        return t[0] / s[0];
    }
    let d0 = t[0] * (m11 * m22 - m12 * m12) - m01 * (t[1] * m22 - m12 * t[2])
        + m02 * (t[1] * m12 - m11 * t[2]);
    d0 / det
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ContinuousMode {
    SmoothedProfile,
    ClosedFormQuadratic,
    ClosedFormLinex,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuousEvppi {
    pub estimate: Estimate,
    #[serde(skip)]
    pub map: Option<OptimalDecisionMap>,
}

/// A-priori optimal continuous decision and the associated expected utility.
pub struct PriorOptimum {
    pub a_opt: f64,
    pub expected_utility: f64,
    pub at_bound: bool,
}

/// Maximizes the Monte Carlo mean utility profile over the decision interval.
/// Quadratic and LINEX utilities use their closed forms.
pub fn prior_optimum_continuous(
    utility: &ContinuousUtility,
    bounds: (f64, f64),
) -> PriorOptimum {
    match utility {
        ContinuousUtility::ClosedForm { form, y } => {
            let a_opt = match form {
                ClosedFormUtility::Quadratic { .. } => y.iter().sum::<f64>() / y.len() as f64,
                ClosedFormUtility::Linex { gamma, .. } => ln_mean_exp_scaled(y, *gamma),
            };
            PriorOptimum {
                a_opt,
                expected_utility: mean_utility(utility, a_opt),
                at_bound: false,
            }
        }
        ContinuousUtility::WorkingExample { m, .. } => {
            // Search on a subsample, evaluate the expectation on all samples.
            let stride = (m.len() / 20_000).max(1);
            let tol = 1e-4 * (bounds.1 - bounds.0);
            let (a_opt, _) = maximize_1d(
                |a| utility.mean_utility_strided(a, stride),
                bounds.0,
                bounds.1,
                PROFILE_GRID,
                tol,
            );
            let at_bound = (a_opt - bounds.0).abs() < 2.0 * tol || (bounds.1 - a_opt).abs() < 2.0 * tol;
            PriorOptimum {
                a_opt,
                expected_utility: mean_utility(utility, a_opt),
                at_bound,
            }
        }
    }
}

fn mean_utility(utility: &ContinuousUtility, a: f64) -> f64 {
    let n = utility.n();
    (0..n).map(|k| utility.eval(k, a)).sum::<f64>() / n as f64
}

/// (1/g) ln E[exp(g y)], max-shifted against overflow.
fn ln_mean_exp_scaled(y: &[f64], gamma: f64) -> f64 {
    let ymax = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = y.iter().map(|&v| (gamma * (v - ymax)).exp()).sum::<f64>() / y.len() as f64;
    ymax + mean.ln() / gamma
}

/// EVPPI of a factor for a continuous decision.
///
/// `SmoothedProfile` builds the conditional-optimum map from the augmented
/// table; the re-optimization estimator then recomputes per-sample utilities
/// at the mapped decision, the plug-in variant stays on the smoother.
pub fn evppi_continuous(
    table: &SampleTable,
    augmented: Option<&SampleTable>,
    utility: &ContinuousUtility,
    factor: &str,
    mode: ContinuousMode,
    estimator: Estimator,
    prior: &PriorOptimum,
    bounds: (f64, f64),
    cfg: &SmootherConfig,
) -> Result<ContinuousEvppi, VoiError> {
    let x = table.column(factor)?;
    let n = x.len();
    match mode {
        ContinuousMode::SmoothedProfile => {
            let augmented = augmented.ok_or_else(|| {
                VoiError::Model(ModelError::Invalid(
                    "smoothed-profile mode needs an augmented table".into(),
                ))
            })?;
            let map = conditional_optimum(augmented, factor, bounds, cfg, DEFAULT_KNOTS)?;
            let contribs: Vec<f64> = match estimator {
                Estimator::Reoptimize => (0..n)
                    .map(|k| {
                        let a_hat = map.eval(x[k]);
                        utility.eval(k, a_hat) - utility.eval(k, prior.a_opt)
                    })
                    .collect(),
                Estimator::Plugin => {
                    let a_col = augmented.column("a")?;
                    let u_col = augmented.column("u")?;
                    let mut xy = Vec::with_capacity(2 * n);
                    for k in 0..n {
                        xy.push(x[k]);
                        xy.push(a_col[k]);
                    }
                    let mut cfg2 = *cfg;
                    cfg2.degree = 2;
                    cfg2.span = cfg.span.max(0.2);
                    let s = Smoother::fit(&xy, u_col, 2, &cfg2)?;
                    (0..n)
                        .map(|k| {
                            let a_hat = map.eval(x[k]);
                            let hi = s.predict(&[x[k], a_hat]).unwrap_or(f64::NAN);
                            let lo = s.predict(&[x[k], prior.a_opt]).unwrap_or(f64::NAN);
                            hi - lo
                        })
                        .collect()
                }
            };
            Ok(ContinuousEvppi {
                estimate: Estimate::from_contributions(&contribs),
                map: Some(map),
            })
        }
        ContinuousMode::ClosedFormQuadratic => {
            let ContinuousUtility::ClosedForm { form: ClosedFormUtility::Quadratic { .. }, y } =
                utility
            else {
                return Err(VoiError::Model(ModelError::Invalid(
                    "closed-form quadratic mode needs a quadratic utility".into(),
                )));
            };
            let s = Smoother::fit_1d(x, y, cfg)?;
            let contribs: Vec<f64> = (0..n)
                .map(|k| {
                    let a_hat = s.predict(&[x[k]]).unwrap_or(prior.a_opt);
                    utility.eval(k, a_hat) - utility.eval(k, prior.a_opt)
                })
                .collect();
            Ok(ContinuousEvppi {
                estimate: Estimate::from_contributions(&contribs),
                map: None,
            })
        }
        ContinuousMode::ClosedFormLinex => {
            let ContinuousUtility::ClosedForm { form: ClosedFormUtility::Linex { gamma, .. }, y } =
                utility
            else {
                return Err(VoiError::Model(ModelError::Invalid(
                    "closed-form LINEX mode needs a LINEX utility".into(),
                )));
            };
            if !(*gamma > 0.0) {
                return Err(VoiError::Model(ModelError::Invalid(format!(
                    "LINEX gamma must be positive, got {gamma}"
                ))));
            }
            // Smooth exp(g (y - ymax)); shift keeps the exponentials bounded.
            let ymax = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = y.iter().map(|&v| (gamma * (v - ymax)).exp()).collect();
            let s = Smoother::fit_1d(x, &e, cfg)?;
            let contribs: Vec<f64> = (0..n)
                .map(|k| {
                    let pred = s.predict(&[x[k]]).unwrap_or(1.0).max(1e-300);
                    let a_hat = ymax + pred.ln() / gamma;
                    utility.eval(k, a_hat) - utility.eval(k, prior.a_opt)
                })
                .collect();
            Ok(ContinuousEvppi {
                estimate: Estimate::from_contributions(&contribs),
                map: None,
            })
        }
    }
}

/// Continuous EVPI: per-sample deterministic optimum a = Y(x) for closed-form
/// utilities.
pub fn evpi_continuous_closed_form(
    utility: &ContinuousUtility,
    prior: &PriorOptimum,
) -> Result<Estimate, VoiError> {
    let ContinuousUtility::ClosedForm { y, .. } = utility else {
        return Err(VoiError::Model(ModelError::Invalid(
            "per-sample deterministic optimum is only closed-form for quadratic/LINEX".into(),
        )));
    };
    let contribs: Vec<f64> = (0..y.len())
        .map(|k| utility.eval(k, y[k]) - utility.eval(k, prior.a_opt))
        .collect();
    Ok(Estimate::from_contributions(&contribs))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EvpmContinuous {
    pub estimate: Estimate,
    /// Samples where the analytic conditional optimum is undefined (marginal
    /// cost exceeds any achievable marginal risk reduction).
    pub excluded: usize,
}

/// EVPM of the continuous working example on the aleatory-reduced path, using
/// the analytic conditional optimum
/// a = [-ln(-ln(1 - 1e6/(cF xR))) + m] / xR, valid when cF xR > 1e6.
pub fn evpm_continuous_we(
    utility: &ContinuousUtility,
    prior: &PriorOptimum,
) -> Result<EvpmContinuous, VoiError> {
    let ContinuousUtility::WorkingExample { m, xr, cf } = utility else {
        return Err(VoiError::Model(ModelError::Invalid(
            "analytic EVPM optimum applies to the built-in continuous model".into(),
        )));
    };
    let mut contribs = Vec::with_capacity(m.len());
    let mut excluded = 0usize;
    for k in 0..m.len() {
        match we_conditional_optimum(m[k], xr[k], cf[k]) {
            Some(a_e) => {
                contribs.push(utility.eval(k, a_e) - utility.eval(k, prior.a_opt));
            }
            None => excluded += 1,
        }
    }
    if contribs.is_empty() {
        return Err(VoiError::Model(ModelError::EmptyTable));
    }
    Ok(EvpmContinuous {
        estimate: Estimate::from_contributions(&contribs),
        excluded,
    })
}

/// Analytic per-sample optimum of the continuous working example given the
/// epistemic factors; None when the marginal-cost condition fails.
pub fn we_conditional_optimum(m: f64, xr: f64, cf: f64) -> Option<f64> {
    let arg = 1.0 - 1e6 / (cf * xr);
    if !(arg > 0.0 && arg < 1.0) {
        return None;
    }
    Some((-(-arg.ln()).ln() + m) / xr)
}

/// Full-model EVPI of the continuous working example when the load is sampled:
/// deterministic optimum a = s / x_R per sample.
pub fn evpi_continuous_we_full(
    table: &SampleTable,
    prior_a_opt: f64,
) -> Result<Estimate, VoiError> {
    let s = table.column("S")?;
    let xr = table.column("XR")?;
    let cf = table.column("CF")?;
    let n = s.len();
    let u = |k: usize, a: f64| {
        let y = cf[k] * (s[k] - a * xr[k]).max(0.0);
        -y - crate::model::we_continuous_cost(a)
    };
    let contribs: Vec<f64> = (0..n)
        .map(|k| u(k, s[k] / xr[k]) - u(k, prior_a_opt))
        .collect();
    Ok(Estimate::from_contributions(&contribs))
}
