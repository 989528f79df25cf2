//! Distributions, deterministic random streams and one-dimensional quadrature.
//!
//! Everything here is pure given the inputs: the same `DistributionSpec` and
//! `RandomSource` produce the same draws regardless of how callers schedule
//! the work.

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProbError {
    #[error("invalid distribution parameters: {0}")]
    InvalidParams(String),
    #[error("probability {0} outside (0, 1)")]
    ProbabilityOutOfRange(f64),
    #[error("quadrature did not converge (best estimate {best}, error estimate {err})")]
    QuadratureNonConvergence { best: f64, err: f64 },
}

/// A univariate distribution, parameterized as the problem tables report it.
///
/// Lognormal takes the mean and standard deviation of the variable itself and
/// converts to log-space internally.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionSpec {
    Gumbel { location: f64, scale: f64 },
    Normal { mean: f64, std: f64 },
    Lognormal { mean: f64, std: f64 },
    Uniform { lower: f64, upper: f64 },
}

impl DistributionSpec {
    pub fn gumbel(location: f64, scale: f64) -> Result<Self, ProbError> {
        if !(scale > 0.0) || !location.is_finite() {
            return Err(ProbError::InvalidParams(format!(
                "gumbel location={location} scale={scale}"
            )));
        }
        Ok(Self::Gumbel { location, scale })
    }

    pub fn normal(mean: f64, std: f64) -> Result<Self, ProbError> {
        if !(std > 0.0) || !mean.is_finite() {
            return Err(ProbError::InvalidParams(format!("normal mean={mean} std={std}")));
        }
        Ok(Self::Normal { mean, std })
    }

    /// Lognormal from the mean and standard deviation of the variable.
    pub fn lognormal(mean: f64, std: f64) -> Result<Self, ProbError> {
        if !(mean > 0.0) || !(std > 0.0) {
            return Err(ProbError::InvalidParams(format!(
                "lognormal mean={mean} std={std}"
            )));
        }
        Ok(Self::Lognormal { mean, std })
    }

    pub fn uniform(lower: f64, upper: f64) -> Result<Self, ProbError> {
        if !(lower < upper) {
            return Err(ProbError::InvalidParams(format!(
                "uniform lower={lower} upper={upper}"
            )));
        }
        Ok(Self::Uniform { lower, upper })
    }

    /// Log-space (mu, sigma) of a lognormal given (mean, std) of the variable.
    pub fn lognormal_log_params(mean: f64, std: f64) -> (f64, f64) {
        let sigma2 = (1.0 + (std / mean).powi(2)).ln();
        let mu = mean.ln() - 0.5 * sigma2;
        (mu, sigma2.sqrt())
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Gumbel { location, scale } => location + scale * EULER_GAMMA,
            Self::Normal { mean, .. } => mean,
            Self::Lognormal { mean, .. } => mean,
            Self::Uniform { lower, upper } => 0.5 * (lower + upper),
        }
    }

    pub fn std(&self) -> f64 {
        match *self {
            Self::Gumbel { scale, .. } => scale * std::f64::consts::PI / 6f64.sqrt(),
            Self::Normal { std, .. } => std,
            Self::Lognormal { std, .. } => std,
            Self::Uniform { lower, upper } => (upper - lower) / 12f64.sqrt(),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            Self::Gumbel { location, scale } => {
                let z = (x - location) / scale;
                ((-z - (-z).exp()).exp()) / scale
            }
            Self::Normal { mean, std } => std_normal(mean, std).pdf(x),
            Self::Lognormal { mean, std } => {
                if x <= 0.0 {
                    return 0.0;
                }
                let (mu, sigma) = Self::lognormal_log_params(mean, std);
                std_normal(mu, sigma).pdf(x.ln()) / x
            }
            Self::Uniform { lower, upper } => {
                if x >= lower && x <= upper {
                    1.0 / (upper - lower)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Self::Gumbel { location, scale } => {
                let z = (x - location) / scale;
                (-(-z).exp()).exp()
            }
            Self::Normal { mean, std } => std_normal(mean, std).cdf(x),
            Self::Lognormal { mean, std } => {
                if x <= 0.0 {
                    return 0.0;
                }
                let (mu, sigma) = Self::lognormal_log_params(mean, std);
                std_normal(mu, sigma).cdf(x.ln())
            }
            Self::Uniform { lower, upper } => ((x - lower) / (upper - lower)).clamp(0.0, 1.0),
        }
    }

    pub fn quantile(&self, p: f64) -> Result<f64, ProbError> {
        if !(p > 0.0 && p < 1.0) {
            return Err(ProbError::ProbabilityOutOfRange(p));
        }
        Ok(match *self {
            Self::Gumbel { location, scale } => location - scale * (-p.ln()).ln(),
            Self::Normal { mean, std } => std_normal(mean, std).inverse_cdf(p),
            Self::Lognormal { mean, std } => {
                let (mu, sigma) = Self::lognormal_log_params(mean, std);
                std_normal(mu, sigma).inverse_cdf(p).exp()
            }
            Self::Uniform { lower, upper } => lower + p * (upper - lower),
        })
    }

    /// Support bounds, for quadrature over the density.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Self::Gumbel { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Self::Normal { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Self::Lognormal { .. } => (0.0, f64::INFINITY),
            Self::Uniform { lower, upper } => (lower, upper),
        }
    }

    /// Inverse-transform draws; identical (seed, stream, n) gives identical output.
    pub fn sample(&self, n: usize, src: &RandomSource) -> Vec<f64> {
        let mut rng = src.rng();
        (0..n)
            .map(|_| {
                let u = unit_open(&mut rng);
                self.quantile(u).expect("u in (0,1)")
            })
            .collect()
    }
}

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

fn std_normal(mean: f64, std: f64) -> Normal {
    Normal::new(mean, std).expect("validated at construction")
}

/// Uniform draw strictly inside (0, 1).
fn unit_open(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
}

/// A named, splittable deterministic random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomSource {
    pub seed: u64,
    pub stream_id: u64,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream_id: 0 }
    }

    /// Independent substream `i`; substreams of distinct parents do not collide
    /// in practice (splitmix64 mixing of the parent id).
    pub fn split(&self, i: u64) -> Self {
        Self {
            seed: self.seed,
            stream_id: splitmix64(self.stream_id ^ splitmix64(i.wrapping_add(1))),
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

// Gauss-Kronrod 7-15 nodes and weights on [-1, 1] (positive half).
const GK_NODES: [f64; 8] = [
    0.991_455_371_120_813,
    0.949_107_912_342_759,
    0.864_864_423_359_769,
    0.741_531_185_599_394,
    0.586_087_235_467_691,
    0.405_845_151_377_397,
    0.207_784_955_007_898,
    0.0,
];
const K_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529,
    0.063_092_092_629_979,
    0.104_790_010_322_250,
    0.140_653_259_715_525,
    0.169_004_726_639_267,
    0.190_350_578_064_785,
    0.204_432_940_075_298,
    0.209_482_141_084_728,
];
const G_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_870,
    0.279_705_391_489_277,
    0.381_830_050_505_119,
    0.417_959_183_673_469,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kronrod = 0.0;
    let mut gauss = 0.0;
    for (i, &x) in GK_NODES.iter().enumerate() {
        let (fl, fr) = (f(c - h * x), f(c + h * x));
        let pair = if i == 7 { f(c) } else { fl + fr };
        kronrod += K_WEIGHTS[i] * pair;
        if i % 2 == 1 {
            gauss += G_WEIGHTS[i / 2] * pair;
        }
    }
    let kronrod = kronrod * h;
    let gauss = gauss * h;
    (kronrod, (kronrod - gauss).abs())
}

/// Adaptive Gauss-Kronrod integration of `f` over `[lower, upper]`.
///
/// Semi-infinite and doubly infinite domains are mapped to a finite interval
/// by rational substitution before refinement.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    lower: f64,
    upper: f64,
    rel_tol: f64,
) -> Result<f64, ProbError> {
    assert!(rel_tol > 0.0, "rel_tol must be positive");
    if lower == upper {
        return Ok(0.0);
    }
    match (lower.is_infinite(), upper.is_infinite()) {
        (false, false) => integrate_finite(&f, lower, upper, rel_tol),
        (false, true) => {
            // x = a + t/(1-t), dx = dt/(1-t)^2, t in [0,1)
            let g = |t: f64| {
                let om = 1.0 - t;
                f(lower + t / om) / (om * om)
            };
            integrate_finite(&g, 0.0, 1.0 - 1e-15, rel_tol)
        }
        (true, false) => {
            let g = |t: f64| {
                let om = 1.0 - t;
                f(upper - t / om) / (om * om)
            };
            integrate_finite(&g, 0.0, 1.0 - 1e-15, rel_tol)
        }
        (true, true) => {
            // x = t/(1-t^2), dx = (1+t^2)/(1-t^2)^2 dt, t in (-1,1)
            let g = |t: f64| {
                let om = 1.0 - t * t;
                f(t / om) * (1.0 + t * t) / (om * om)
            };
            integrate_finite(&g, -1.0 + 1e-15, 1.0 - 1e-15, rel_tol)
        }
    }
}

fn integrate_finite<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    rel_tol: f64,
) -> Result<f64, ProbError> {
    // Interval stack with per-interval error; refine worst-first.
    let (v, e) = gk15(f, a, b);
    let mut intervals = vec![(a, b, v, e)];
    let max_intervals = 4000;
    loop {
        let total: f64 = intervals.iter().map(|t| t.2).sum();
        let err: f64 = intervals.iter().map(|t| t.3).sum();
        let scale = total.abs().max(1e-300);
        if err <= rel_tol * scale || err <= 1e-300 {
            return Ok(total);
        }
        if intervals.len() >= max_intervals {
            return Err(ProbError::QuadratureNonConvergence { best: total, err });
        }
        let (worst, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("nonempty");
        let (ia, ib, _, _) = intervals.swap_remove(worst);
        let mid = 0.5 * (ia + ib);
        if mid <= ia || mid >= ib {
            // Interval at floating-point resolution; keep best estimate.
            let (v, e) = gk15(f, ia, ib);
            intervals.push((ia, ib, v, e * f64::EPSILON));
            continue;
        }
        let (v1, e1) = gk15(f, ia, mid);
        let (v2, e2) = gk15(f, mid, ib);
        intervals.push((ia, mid, v1, e1));
        intervals.push((mid, ib, v2, e2));
    }
}
