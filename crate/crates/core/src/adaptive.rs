//! NSAF, NSPN and FoNSPN weight updates over subband frames.
//!
//! All three share the form
//!
//! ```text
//! h <- h + mu * sum_i g(e_i) * W_i x_i / (||x_i||_p^p + eps)
//! ```
//!
//! * NSAF:   g(e) = e,                  W_i = I,            p = 2
//! * NSPN:   g(e) = sgn(e) |e|^(p-1),   W_i = I
//! * FoNSPN: g(e) = sgn(e) |e|^(p-beta), W_i = diag((|x_ij| + eps)^(beta-1))
//!
//! The Gamma ratio of the fractional derivative is folded into `mu`. Each rule
//! is written out separately; with `beta = 1` (and `p = 2`) FoNSPN reproduces
//! the others bit for bit because `y^0 == 1` and `|e|^1 == |e|` are exact.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{domain, Error, Result};
use crate::filterbank::SubbandFrame;

pub const DEFAULT_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Nsaf,
    Nspn,
    Fonspn,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Nsaf => "nsaf",
            Algorithm::Nspn => "nspn",
            Algorithm::Fonspn => "fonspn",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nsaf" => Ok(Algorithm::Nsaf),
            "nspn" => Ok(Algorithm::Nspn),
            "fonspn" => Ok(Algorithm::Fonspn),
            other => Err(Error::Config(format!("unknown algorithm {other:?}"))),
        }
    }
}

fn default_eps() -> f64 {
    DEFAULT_EPS
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgoConfig {
    pub algorithm: Algorithm,
    pub mu: f64,
    #[serde(default = "two")]
    pub p: f64,
    #[serde(default = "one")]
    pub beta: f64,
    pub taps: usize,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

impl AlgoConfig {
    pub fn nsaf(mu: f64, taps: usize) -> Self {
        Self {
            algorithm: Algorithm::Nsaf,
            mu,
            p: 2.0,
            beta: 1.0,
            taps,
            eps: DEFAULT_EPS,
        }
    }

    pub fn nspn(mu: f64, p: f64, taps: usize) -> Self {
        Self {
            algorithm: Algorithm::Nspn,
            p,
            ..Self::nsaf(mu, taps)
        }
    }

    pub fn fonspn(mu: f64, p: f64, beta: f64, taps: usize) -> Self {
        Self {
            algorithm: Algorithm::Fonspn,
            p,
            beta,
            ..Self::nsaf(mu, taps)
        }
    }

    pub fn with_eps(self, eps: f64) -> Self {
        Self { eps, ..self }
    }

    /// Norm exponent actually used by the update.
    pub fn effective_p(&self) -> f64 {
        match self.algorithm {
            Algorithm::Nsaf => 2.0,
            _ => self.p,
        }
    }

    /// Fractional order actually used by the update.
    pub fn effective_beta(&self) -> f64 {
        match self.algorithm {
            Algorithm::Fonspn => self.beta,
            _ => 1.0,
        }
    }

    /// Structural checks. `beta > p` is accepted here: the robustness
    /// experiments run FoNSPN outside the admissible interval on purpose.
    /// Use [`AlgoConfig::check_beta_interval`] to enforce it.
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(domain(format!(
                "step size must be positive, got {}",
                self.mu
            )));
        }
        if self.taps == 0 {
            return Err(domain("tap count must be positive"));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(domain(format!(
                "eps must be non-negative, got {}",
                self.eps
            )));
        }
        if !(self.effective_p() > 0.0 && self.effective_p().is_finite()) {
            return Err(domain(format!("p must be positive, got {}", self.p)));
        }
        if !(self.effective_beta() > 0.0 && self.effective_beta().is_finite()) {
            return Err(domain(format!("beta must be positive, got {}", self.beta)));
        }
        Ok(())
    }

    /// Requires `p - alpha/2 < beta <= p` for noise exponent `alpha`.
    pub fn check_beta_interval(&self, alpha: f64) -> Result<()> {
        let range = crate::theory::beta_range(self.effective_p(), alpha)?;
        if range.contains(self.effective_beta()) {
            Ok(())
        } else {
            Err(domain(format!(
                "beta = {} outside the admissible interval {range}",
                self.effective_beta()
            )))
        }
    }
}

/// Adaptive weights `h_k` and the number of updates applied so far.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    pub weights: Vec<f64>,
    pub update_count: usize,
    diverged: bool,
}

impl FilterState {
    /// Zero initial weights.
    pub fn new(taps: usize) -> Self {
        Self::with_weights(vec![0.0; taps])
    }

    pub fn with_weights(weights: Vec<f64>) -> Self {
        let diverged = weights.iter().any(|w| !w.is_finite());
        Self {
            weights,
            update_count: 0,
            diverged,
        }
    }

    pub fn taps(&self) -> usize {
        self.weights.len()
    }

    /// Set once a non-finite weight appears; later updates are no-ops.
    pub fn diverged(&self) -> bool {
        self.diverged
    }

    pub fn mark_diverged(&mut self) {
        self.diverged = true;
    }
}

fn check_frame(state: &FilterState, frame: &SubbandFrame) -> Result<()> {
    if frame.band_inputs.len() != frame.band_desired.len() {
        return Err(Error::Shape {
            what: "bands in frame",
            expected: frame.band_desired.len(),
            got: frame.band_inputs.len(),
        });
    }
    for x in &frame.band_inputs {
        if x.len() != state.taps() {
            return Err(Error::Shape {
                what: "regressor length",
                expected: state.taps(),
                got: x.len(),
            });
        }
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `e_i = d_i - x_i^T h` for every band.
pub fn subband_errors(state: &FilterState, frame: &SubbandFrame) -> Result<Vec<f64>> {
    check_frame(state, frame)?;
    Ok(frame
        .band_inputs
        .iter()
        .zip(&frame.band_desired)
        .map(|(x, d)| d - dot(x, &state.weights))
        .collect())
}

/// `sgn(e) |e|^exponent`, zero at `e = 0` whatever the exponent.
pub(crate) fn signed_power(e: f64, exponent: f64) -> f64 {
    if e == 0.0 {
        0.0
    } else {
        e.signum() * e.abs().powf(exponent)
    }
}

/// FoNSPN error nonlinearity `sgn(e) |e|^(p - beta)`.
pub fn gain(e: f64, p: f64, beta: f64) -> Result<f64> {
    if p < beta {
        return Err(domain(format!(
            "gain needs p >= beta, got p = {p}, beta = {beta}"
        )));
    }
    Ok(signed_power(e, p - beta))
}

/// `sum_j |x_j|^p`, with the square computed as a product.
pub(crate) fn p_norm_pow(x: &[f64], p: f64) -> f64 {
    if p == 2.0 {
        x.iter().map(|v| v * v).sum()
    } else {
        x.iter().map(|v| v.abs().powf(p)).sum()
    }
}

/// `X^(beta-1) x` with each diagonal entry regularised to `|x_j| + eps`.
pub fn fractional_direction(x: &[f64], beta: f64, eps: f64) -> Vec<f64> {
    x.iter()
        .map(|&v| (v.abs() + eps).powf(beta - 1.0) * v)
        .collect()
}

fn apply(state: &mut FilterState, increment: &[f64]) {
    for (w, dw) in state.weights.iter_mut().zip(increment) {
        *w += dw;
    }
    state.update_count += 1;
    if state.weights.iter().any(|w| !w.is_finite()) {
        state.diverged = true;
    }
}

/// Weight increment of the configured rule for one frame.
pub fn increment(state: &FilterState, frame: &SubbandFrame, cfg: &AlgoConfig) -> Result<Vec<f64>> {
    let errors = subband_errors(state, frame)?;
    let mut inc = vec![0.0; state.taps()];
    match cfg.algorithm {
        Algorithm::Nsaf => {
            for (x, e) in frame.band_inputs.iter().zip(&errors) {
                let coef = cfg.mu * e / (x.iter().map(|v| v * v).sum::<f64>() + cfg.eps);
                for (dw, v) in inc.iter_mut().zip(x) {
                    *dw += coef * v;
                }
            }
        }
        Algorithm::Nspn => {
            for (x, &e) in frame.band_inputs.iter().zip(&errors) {
                let coef = cfg.mu * signed_power(e, cfg.p - 1.0) / (p_norm_pow(x, cfg.p) + cfg.eps);
                for (dw, v) in inc.iter_mut().zip(x) {
                    *dw += coef * v;
                }
            }
        }
        Algorithm::Fonspn => {
            for (x, &e) in frame.band_inputs.iter().zip(&errors) {
                let coef =
                    cfg.mu * signed_power(e, cfg.p - cfg.beta) / (p_norm_pow(x, cfg.p) + cfg.eps);
                for (dw, &v) in inc.iter_mut().zip(x) {
                    *dw += coef * ((v.abs() + cfg.eps).powf(cfg.beta - 1.0) * v);
                }
            }
        }
    }
    Ok(inc)
}

/// Applies one update. A non-finite result sets the divergence flag instead
/// of failing; a diverged state is left untouched.
pub fn update(state: &mut FilterState, frame: &SubbandFrame, cfg: &AlgoConfig) -> Result<()> {
    if state.diverged {
        check_frame(state, frame)?;
        return Ok(());
    }
    let inc = increment(state, frame, cfg)?;
    apply(state, &inc);
    Ok(())
}

/// `D^beta x^n = Gamma(n+1) / Gamma(n+1-beta) * x^(n-beta)` for
/// `n > 0`, `beta <= n`, `x > 0`.
///
/// Only used to check the power rule; the update absorbs the Gamma ratio
/// into the step size.
pub fn fractional_power_derivative(n: f64, beta: f64, x: f64) -> Result<f64> {
    if !(n > 0.0) || !(beta <= n) || !(x > 0.0) {
        return Err(domain(format!(
            "fractional derivative needs n > 0, beta <= n, x > 0 (n = {n}, beta = {beta}, x = {x})"
        )));
    }
    Ok(gamma(n + 1.0) / gamma(n + 1.0 - beta) * x.powf(n - beta))
}

/// Owned configuration plus state, for callers that drive frames by hand.
#[derive(Debug, Clone)]
pub struct AdaptiveFilter {
    pub config: AlgoConfig,
    pub state: FilterState,
}

impl AdaptiveFilter {
    pub fn new(config: AlgoConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            state: FilterState::new(config.taps),
            config,
        })
    }

    /// Returns the a-priori subband errors of the frame.
    pub fn step(&mut self, frame: &SubbandFrame) -> Result<Vec<f64>> {
        let errors = subband_errors(&self.state, frame)?;
        update(&mut self.state, frame, &self.config)?;
        Ok(errors)
    }
}
