//! Conditional-expectation estimators fitted to scatter samples: moving
//! average, linear regression, LOESS and Gaussian kernel regression, in one or
//! two input dimensions.
//!
//! One-dimensional smoothers are evaluated at equal-probability knots of the
//! training inputs and linearly interpolated in between; queries outside the
//! training hull are clamped to the boundary.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SmoothError {
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("input column {0} has zero variance")]
    DegenerateInput(usize),
    #[error("input dimension {0} not supported (d must be 1 or 2)")]
    UnsupportedDimension(usize),
    #[error("query dimension {got}, smoother fitted with {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("method {0:?} is only available for one-dimensional inputs")]
    MethodNeedsOneDim(SmoothMethod),
    #[error("invalid smoother config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothMethod {
    MovingAverage,
    Linear,
    Loess,
    Kernel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmootherConfig {
    pub method: SmoothMethod,
    /// Fraction of points per local fit (loess).
    #[serde(default = "default_span")]
    pub span: f64,
    /// Bandwidth for kernel and moving-average methods; Silverman-style rule
    /// when absent.
    #[serde(default)]
    pub bandwidth: Option<f64>,
    /// Local polynomial degree for loess (1 or 2).
    #[serde(default = "default_degree")]
    pub degree: u8,
    /// Cap on training points for two-dimensional local fits; larger tables
    /// are strided down deterministically.
    #[serde(default = "default_max_fit_points")]
    pub max_fit_points: usize,
    /// Window fraction for conditional-optimum profile fits over
    /// (factor, decision). Wider than `span` because each window must support
    /// a full value-profile fit along the decision coordinate.
    #[serde(default = "default_profile_span")]
    pub profile_span: f64,
}

fn default_span() -> f64 {
    0.3
}
fn default_degree() -> u8 {
    2
}
fn default_max_fit_points() -> usize {
    20_000
}
fn default_profile_span() -> f64 {
    0.55
}

impl Default for SmootherConfig {
    fn default() -> Self {
        Self {
            method: SmoothMethod::Loess,
            span: default_span(),
            bandwidth: None,
            degree: default_degree(),
            max_fit_points: default_max_fit_points(),
            profile_span: default_profile_span(),
        }
    }
}

impl SmootherConfig {
    pub fn loess(span: f64, degree: u8) -> Self {
        Self {
            method: SmoothMethod::Loess,
            span,
            degree,
            ..Self::default()
        }
    }

    pub fn kernel(bandwidth: f64) -> Self {
        Self {
            method: SmoothMethod::Kernel,
            bandwidth: Some(bandwidth),
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<(), SmoothError> {
        if !(self.span > 0.0 && self.span <= 1.0) {
            return Err(SmoothError::InvalidConfig(format!("span {}", self.span)));
        }
        if !(self.profile_span > 0.0 && self.profile_span <= 1.0) {
            return Err(SmoothError::InvalidConfig(format!(
                "profile_span {}",
                self.profile_span
            )));
        }
        if let Some(h) = self.bandwidth {
            if !(h > 0.0) {
                return Err(SmoothError::InvalidConfig(format!("bandwidth {h}")));
            }
        }
        if !matches!(self.degree, 1 | 2) {
            return Err(SmoothError::InvalidConfig(format!("degree {}", self.degree)));
        }
        Ok(())
    }
}

const MIN_SAMPLES: usize = 20;
const KNOTS_1D: usize = 401;

/// A fitted conditional-expectation estimator.
#[derive(Debug, Clone)]
pub struct Smoother {
    state: State,
    dim: usize,
}

#[derive(Debug, Clone)]
enum State {
    /// OLS plane: intercept + slopes.
    Linear {
        intercept: f64,
        slopes: Vec<f64>,
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// Knot-interpolated one-dimensional fit.
    Interp1 { knots: Vec<f64>, values: Vec<f64> },
    /// On-demand two-dimensional local regression.
    Local2 {
        x: Vec<[f64; 2]>,
        y: Vec<f64>,
        scale: [f64; 2],
        lo: [f64; 2],
        hi: [f64; 2],
        span: f64,
        degree: u8,
    },
}

impl Smoother {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Fits to `n` rows of `d`-dimensional inputs. `x` is row-major with
    /// `d` entries per row.
    pub fn fit(x: &[f64], y: &[f64], d: usize, cfg: &SmootherConfig) -> Result<Self, SmoothError> {
        cfg.validate()?;
        if !matches!(d, 1 | 2) {
            return Err(SmoothError::UnsupportedDimension(d));
        }
        let n = y.len();
        if x.len() != n * d {
            return Err(SmoothError::DimensionMismatch { got: x.len() / n.max(1), want: d });
        }
        if n < MIN_SAMPLES {
            return Err(SmoothError::TooFewSamples { need: MIN_SAMPLES, got: n });
        }
        for j in 0..d {
            let first = x[j];
            if (0..n).all(|i| x[i * d + j] == first) {
                return Err(SmoothError::DegenerateInput(j));
            }
        }
        let state = match (cfg.method, d) {
            (SmoothMethod::Linear, _) => fit_linear(x, y, d),
            (_, 2) if cfg.method != SmoothMethod::Loess => {
                return Err(SmoothError::MethodNeedsOneDim(cfg.method))
            }
            (SmoothMethod::Loess, 2) => fit_local2(x, y, cfg),
            (_, 1) => fit_knots_1d(x, y, cfg),
            _ => unreachable!(),
        };
        Ok(Self { state, dim: d })
    }

    pub fn fit_1d(x: &[f64], y: &[f64], cfg: &SmootherConfig) -> Result<Self, SmoothError> {
        Self::fit(x, y, 1, cfg)
    }

    pub fn predict(&self, q: &[f64]) -> Result<f64, SmoothError> {
        if q.len() != self.dim {
            return Err(SmoothError::DimensionMismatch { got: q.len(), want: self.dim });
        }
        Ok(match &self.state {
            State::Linear { intercept, slopes, lo, hi } => {
                let mut v = *intercept;
                for j in 0..slopes.len() {
                    v += slopes[j] * q[j].clamp(lo[j], hi[j]);
                }
                v
            }
            State::Interp1 { knots, values } => interp_clamped(knots, values, q[0]),
            State::Local2 { .. } => self.predict_local2(q[0], q[1]),
        })
    }

    pub fn predict_batch(&self, qs: &[f64]) -> Result<Vec<f64>, SmoothError> {
        qs.chunks(self.dim).map(|q| self.predict(q)).collect()
    }

    fn predict_local2(&self, q0: f64, q1: f64) -> f64 {
        let State::Local2 { x, y, scale, lo, hi, span, degree } = &self.state else {
            unreachable!()
        };
        let q = [
            q0.clamp(lo[0], hi[0]) / scale[0],
            q1.clamp(lo[1], hi[1]) / scale[1],
        ];
        let n = x.len();
        let k = ((span * n as f64).ceil() as usize).clamp(12, n);
        let mut idx: Vec<u32> = (0..n as u32).collect();
        let d2 = |i: u32| {
            let p = x[i as usize];
            let (dx, dy) = (p[0] - q[0], p[1] - q[1]);
            dx * dx + dy * dy
        };
        if k < n {
            idx.select_nth_unstable_by(k - 1, |&a, &b| d2(a).total_cmp(&d2(b)));
            idx.truncate(k);
        }
        let dmax2 = idx.iter().map(|&i| d2(i)).fold(0.0f64, f64::max);
        let dmax = dmax2.sqrt().max(1e-300);
        local_polyfit_2d(x, y, &idx, q, dmax, *degree)
    }
}

fn interp_clamped(knots: &[f64], values: &[f64], q: f64) -> f64 {
    let m = knots.len();
    if q <= knots[0] {
        return values[0];
    }
    if q >= knots[m - 1] {
        return values[m - 1];
    }
    let i = knots.partition_point(|&k| k <= q).min(m - 1);
    let (x0, x1) = (knots[i - 1], knots[i]);
    if x1 == x0 {
        return values[i];
    }
    let t = (q - x0) / (x1 - x0);
    values[i - 1] + t * (values[i] - values[i - 1])
}

fn fit_linear(x: &[f64], y: &[f64], d: usize) -> State {
    // Normal equations on centered inputs.
    let n = y.len();
    let mut mean_x = vec![0.0; d];
    for row in 0..n {
        for j in 0..d {
            mean_x[j] += x[row * d + j];
        }
    }
    for m in &mut mean_x {
        *m /= n as f64;
    }
    let p = d + 1;
    let mut ata = vec![0.0; p * p];
    let mut atb = vec![0.0; p];
    for row in 0..n {
        let mut feats = vec![1.0];
        for j in 0..d {
            feats.push(x[row * d + j] - mean_x[j]);
        }
        for i in 0..p {
            atb[i] += feats[i] * y[row];
            for j in 0..p {
                ata[i * p + j] += feats[i] * feats[j];
            }
        }
    }
    let coef = solve_symmetric(&mut ata, &mut atb, p);
    let mut intercept = coef[0];
    let slopes: Vec<f64> = coef[1..].to_vec();
    for j in 0..d {
        intercept -= slopes[j] * mean_x[j];
    }
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for row in 0..n {
        for j in 0..d {
            lo[j] = lo[j].min(x[row * d + j]);
            hi[j] = hi[j].max(x[row * d + j]);
        }
    }
    State::Linear { intercept, slopes, lo, hi }
}

fn fit_knots_1d(x: &[f64], y: &[f64], cfg: &SmootherConfig) -> State {
    let n = y.len();
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_by(|&a, &b| x[a as usize].total_cmp(&x[b as usize]));
    let xs: Vec<f64> = order.iter().map(|&i| x[i as usize]).collect();
    let ys: Vec<f64> = order.iter().map(|&i| y[i as usize]).collect();

    let mut knots: Vec<f64> = Vec::with_capacity(KNOTS_1D);
    let m = KNOTS_1D.min(n);
    for i in 0..m {
        let pos = if m == 1 { 0 } else { i * (n - 1) / (m - 1) };
        knots.push(xs[pos]);
    }
    knots.dedup();

    let values: Vec<f64> = match cfg.method {
        SmoothMethod::MovingAverage => {
            let h = cfg.bandwidth.unwrap_or_else(|| silverman(&xs));
            knots
                .iter()
                .map(|&q| window_mean(&xs, &ys, q, h))
                .collect()
        }
        SmoothMethod::Kernel => {
            let h = cfg.bandwidth.unwrap_or_else(|| silverman(&xs));
            knots
                .iter()
                .map(|&q| nadaraya_watson(&xs, &ys, q, h))
                .collect()
        }
        SmoothMethod::Loess => {
            let k = ((cfg.span * n as f64).ceil() as usize).clamp(cfg.degree as usize + 2, n);
            knots
                .iter()
                .map(|&q| loess_point(&xs, &ys, q, k, cfg.degree))
                .collect()
        }
        SmoothMethod::Linear => unreachable!("handled before dispatch"),
    };
    State::Interp1 { knots, values }
}

fn silverman(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let iqr = quantile_sorted(xs, 0.75) - quantile_sorted(xs, 0.25);
    let sigma = var.sqrt().min(iqr / 1.349).max(var.sqrt() * 1e-6);
    (1.06 * sigma * n.powf(-0.2)).max(1e-300)
}

fn quantile_sorted(xs: &[f64], p: f64) -> f64 {
    let n = xs.len();
    let pos = p * (n - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < n {
        xs[i] * (1.0 - frac) + xs[i + 1] * frac
    } else {
        xs[n - 1]
    }
}

/// Mean of y over the window |x - q| <= h; widens to the nearest point when
/// the window is empty.
fn window_mean(xs: &[f64], ys: &[f64], q: f64, h: f64) -> f64 {
    let lo = xs.partition_point(|&v| v < q - h);
    let hi = xs.partition_point(|&v| v <= q + h);
    if lo >= hi {
        let i = nearest_index(xs, q);
        return ys[i];
    }
    ys[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
}

fn nearest_index(xs: &[f64], q: f64) -> usize {
    let i = xs.partition_point(|&v| v < q);
    if i == 0 {
        0
    } else if i >= xs.len() {
        xs.len() - 1
    } else if (q - xs[i - 1]).abs() <= (xs[i] - q).abs() {
        i - 1
    } else {
        i
    }
}

fn nadaraya_watson(xs: &[f64], ys: &[f64], q: f64, h: f64) -> f64 {
    // Gaussian kernel truncated at 8 bandwidths.
    let lo = xs.partition_point(|&v| v < q - 8.0 * h);
    let hi = xs.partition_point(|&v| v <= q + 8.0 * h);
    let (mut sw, mut swy) = (0.0, 0.0);
    for i in lo..hi {
        let z = (xs[i] - q) / h;
        let w = (-0.5 * z * z).exp();
        sw += w;
        swy += w * ys[i];
    }
    if sw <= 0.0 {
        return ys[nearest_index(xs, q)];
    }
    swy / sw
}

fn loess_point(xs: &[f64], ys: &[f64], q: f64, k: usize, degree: u8) -> f64 {
    let n = xs.len();
    // Contiguous window of the k nearest x values.
    let center = nearest_index(xs, q);
    let (mut lo, mut hi) = (center, center + 1);
    while hi - lo < k {
        let extend_left = lo > 0 && (hi >= n || q - xs[lo - 1] <= xs[hi] - q);
        if extend_left {
            lo -= 1;
        } else if hi < n {
            hi += 1;
        } else {
            lo -= 1;
        }
    }
    let dmax = (q - xs[lo]).abs().max((xs[hi - 1] - q).abs()).max(1e-300);
    let p = degree as usize + 1;
    let mut ata = [0.0f64; 9];
    let mut atb = [0.0f64; 3];
    for i in lo..hi {
        let t = (xs[i] - q).abs() / dmax;
        let w = if t >= 1.0 {
            0.0
        } else {
            let c = 1.0 - t * t * t;
            c * c * c
        };
        if w == 0.0 {
            continue;
        }
        let dx = xs[i] - q;
        let feats = [1.0, dx, dx * dx];
        for r in 0..p {
            atb[r] += w * feats[r] * ys[i];
            for c in 0..p {
                ata[r * p + c] += w * feats[r] * feats[c];
            }
        }
    }
    if ata[0] == 0.0 {
        // All tricube weights vanished (heavy ties); plain window mean.
        return ys[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
    }
    let mut a = ata[..p * p].to_vec();
    let mut b = atb[..p].to_vec();
    let coef = solve_symmetric(&mut a, &mut b, p);
    coef[0]
}

fn fit_local2(x: &[f64], y: &[f64], cfg: &SmootherConfig) -> State {
    let n = y.len();
    // Deterministic stride-down when the table is larger than the local-fit cap.
    let stride = n.div_ceil(cfg.max_fit_points);
    let keep: Vec<usize> = (0..n).step_by(stride.max(1)).collect();
    let col0: Vec<f64> = keep.iter().map(|&i| x[i * 2]).collect();
    let col1: Vec<f64> = keep.iter().map(|&i| x[i * 2 + 1]).collect();
    let scale0 = robust_scale(&mut col0.clone());
    let scale1 = robust_scale(&mut col1.clone());
    let lo = [
        col0.iter().copied().fold(f64::INFINITY, f64::min),
        col1.iter().copied().fold(f64::INFINITY, f64::min),
    ];
    let hi = [
        col0.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        col1.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    ];
    let pts: Vec<[f64; 2]> = keep
        .iter()
        .map(|&i| [x[i * 2] / scale0, x[i * 2 + 1] / scale1])
        .collect();
    let ys: Vec<f64> = keep.iter().map(|&i| y[i]).collect();
    State::Local2 {
        x: pts,
        y: ys,
        scale: [scale0, scale1],
        lo,
        hi,
        span: cfg.span.max(0.2),
        degree: cfg.degree,
    }
}

/// Interquartile range, falling back to the standard deviation for heavily
/// tied data.
fn robust_scale(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(xs, 0.75) - quantile_sorted(xs, 0.25);
    if iqr > 0.0 {
        return iqr;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    var.sqrt().max(1e-300)
}

fn local_polyfit_2d(x: &[[f64; 2]], y: &[f64], idx: &[u32], q: [f64; 2], dmax: f64, degree: u8) -> f64 {
    let p = if degree == 1 { 3 } else { 6 };
    let mut ata = vec![0.0f64; p * p];
    let mut atb = vec![0.0f64; p];
    let mut sw = 0.0;
    let mut swy = 0.0;
    for &i in idx {
        let pt = x[i as usize];
        let (dx, dy) = (pt[0] - q[0], pt[1] - q[1]);
        let t = (dx * dx + dy * dy).sqrt() / dmax;
        let w = if t >= 1.0 {
            0.0
        } else {
            let c = 1.0 - t * t * t;
            c * c * c
        };
        if w == 0.0 {
            continue;
        }
        let yi = y[i as usize];
        sw += w;
        swy += w * yi;
        let feats = [1.0, dx, dy, dx * dx, dx * dy, dy * dy];
        for r in 0..p {
            atb[r] += w * feats[r] * yi;
            for c in 0..p {
                ata[r * p + c] += w * feats[r] * feats[c];
            }
        }
    }
    if sw <= 0.0 {
        // Query collides with the nearest neighbours; plain mean over them.
        let s: f64 = idx.iter().map(|&i| y[i as usize]).sum();
        return s / idx.len() as f64;
    }
    // Ridge floor keeps the system solvable for degenerate neighbourhoods.
    let ridge = 1e-10 * ata[0].max(1.0);
    for r in 1..p {
        ata[r * p + r] += ridge;
    }
    let coef = solve_symmetric(&mut ata, &mut atb, p);
    if coef[0].is_finite() {
        coef[0]
    } else {
        swy / sw
    }
}

/// Gaussian elimination with partial pivoting; returns the mean fallback on a
/// singular system by zeroing the offending pivot row.
fn solve_symmetric(a: &mut [f64], b: &mut [f64], p: usize) -> Vec<f64> {
    for col in 0..p {
        let mut piv = col;
        for r in col + 1..p {
            if a[r * p + col].abs() > a[piv * p + col].abs() {
                piv = r;
            }
        }
        if a[piv * p + col].abs() < 1e-300 {
            continue;
        }
        if piv != col {
            for c in 0..p {
                a.swap(col * p + c, piv * p + c);
            }
            b.swap(col, piv);
        }
        let d = a[col * p + col];
        for r in 0..p {
            if r == col {
                continue;
            }
            let f = a[r * p + col] / d;
            if f == 0.0 {
                continue;
            }
            for c in col..p {
                a[r * p + c] -= f * a[col * p + c];
            }
            b[r] -= f * b[col];
        }
    }
    (0..p)
        .map(|i| {
            let d = a[i * p + i];
            if d.abs() < 1e-300 {
                0.0
            } else {
                b[i] / d
            }
        })
        .collect()
}
