//! Closed-form predictions for FoNSPN: the admissible fractional-order
//! interval, the mean-square step-size bound and the steady-state MSD.
//!
//! The step-size bound and the steady-state MSD are derived assuming
//! `p - beta = 1`. Both functions accept other settings but attach
//! [`TheoryWarning::ModelAssumption`] to the result.

use std::fmt;

use crate::adaptive::p_norm_pow;
use crate::error::{domain, Error, Result};
use crate::filterbank::{FilterBank, SubbandAnalyzer};
use crate::signalgen::{substream, SourceConfig};

pub const MIN_MOMENT_FRAMES: usize = 10_000;
pub const DEFAULT_MOMENT_FRAMES: usize = 50_000;

/// The half-open interval `(lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaInterval {
    pub lower: f64,
    pub upper: f64,
}

impl BetaInterval {
    pub fn contains(&self, beta: f64) -> bool {
        beta > self.lower && beta <= self.upper
    }
}

impl fmt::Display for BetaInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}]", self.lower, self.upper)
    }
}

/// Fractional orders for which `E{g^2(e)}` stays finite under
/// alpha-stable noise: `p - alpha/2 < beta <= p`.
pub fn beta_range(p: f64, alpha: f64) -> Result<BetaInterval> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(domain(format!("alpha must lie in (0, 2], got {alpha}")));
    }
    if !(p >= 0.0 && p <= alpha) {
        return Err(domain(format!(
            "p must lie in [0, alpha], got p = {p}, alpha = {alpha}"
        )));
    }
    Ok(BetaInterval {
        lower: p - alpha / 2.0,
        upper: p,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TheoryWarning {
    /// `p - beta != 1`: the closed forms were derived for `p - beta = 1`.
    ModelAssumption { p: f64, beta: f64 },
    /// Alpha-stable signals with `alpha < 2`; some moments are infinite in
    /// theory and the finite sample values are not meaningful.
    HeavyTail,
}

impl fmt::Display for TheoryWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TheoryWarning::ModelAssumption { p, beta } => {
                write!(f, "model assumes p - beta = 1 (p = {p}, beta = {beta})")
            }
            TheoryWarning::HeavyTail => {
                write!(f, "heavy-tailed signals: moments diverge in theory")
            }
        }
    }
}

/// A value plus the caveats that apply to it.
#[derive(Debug, Clone, PartialEq)]
pub struct Checked<T> {
    pub value: T,
    pub warnings: Vec<TheoryWarning>,
}

/// Per-band moments of the subband input and noise.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BandMoments {
    /// `E{|x|^(beta+1)}`
    pub m_beta_plus_1: f64,
    /// `E{|x|^(2 beta)}`
    pub m_2beta: f64,
    /// `E{||x||_p^p}` over the length-`L` regressor
    pub m_pnorm: f64,
    /// `E{||x||_p^(2p)}`
    pub m_pnorm_sq: f64,
    pub var_x: f64,
    pub var_n: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubbandMoments {
    pub p: f64,
    pub beta: f64,
    pub taps: usize,
    pub bands: Vec<BandMoments>,
    pub frames: usize,
    pub heavy_tail: bool,
}

impl SubbandMoments {
    fn warnings(&self) -> Vec<TheoryWarning> {
        let mut w = Vec::new();
        if self.p - self.beta != 1.0 {
            w.push(TheoryWarning::ModelAssumption {
                p: self.p,
                beta: self.beta,
            });
        }
        if self.heavy_tail {
            w.push(TheoryWarning::HeavyTail);
        }
        w
    }

    fn check(&self, taps: usize, beta: f64) -> Result<()> {
        if self.bands.is_empty() {
            return Err(Error::Estimation("no bands".into()));
        }
        if taps == 0 {
            return Err(domain("tap count must be positive"));
        }
        if beta != self.beta {
            return Err(domain(format!(
                "moments were estimated at beta = {}, asked for beta = {beta}",
                self.beta
            )));
        }
        Ok(())
    }
}

/// Step-size bound with the initial deviation `||h0||^2` dropped:
/// `min_i 2 E|x|^(b+1) / ((var_x + var_n) L E|x|^(2b) / E||x||_p^p)`.
pub fn step_size_bound(moments: &SubbandMoments, taps: usize, beta: f64) -> Result<Checked<f64>> {
    bound_impl(moments, taps, beta, None)
}

/// Variant keeping `MSD_0 = ||h0||^2` explicit.
pub fn step_size_bound_with_h0(
    moments: &SubbandMoments,
    taps: usize,
    beta: f64,
    h0_norm_sq: f64,
) -> Result<Checked<f64>> {
    if !(h0_norm_sq > 0.0) {
        return Err(domain("||h0||^2 must be positive"));
    }
    bound_impl(moments, taps, beta, Some(h0_norm_sq))
}

fn bound_impl(
    moments: &SubbandMoments,
    taps: usize,
    beta: f64,
    h0_norm_sq: Option<f64>,
) -> Result<Checked<f64>> {
    moments.check(taps, beta)?;
    let l = taps as f64;
    let mut bound = f64::INFINITY;
    for (i, b) in moments.bands.iter().enumerate() {
        let (num, power) = match h0_norm_sq {
            None => (2.0 * b.m_beta_plus_1, b.var_x + b.var_n),
            Some(h) => (2.0 * b.m_beta_plus_1 * h, b.var_x * h + b.var_n),
        };
        let den = power * l * b.m_2beta / b.m_pnorm;
        if !(den > 0.0 && den.is_finite()) {
            return Err(Error::Estimation(format!(
                "band {i}: step-size bound denominator is {den}"
            )));
        }
        bound = bound.min(num / den);
    }
    Ok(Checked {
        value: bound,
        warnings: moments.warnings(),
    })
}

/// Steady-state MSD:
///
/// ```text
///              mu L sum_i (E|x|^(2b) / E||x||_p^(2p)) var_n,i
/// MSD_inf = ------------------------------------------------------------------
///           2 sum_i E|x|^(1+b) / E||x||_p^p - mu L sum_i (E|x|^(2b) / E||x||_p^(2p)) var_x,i
/// ```
pub fn steady_state_msd(
    moments: &SubbandMoments,
    taps: usize,
    mu: f64,
    beta: f64,
) -> Result<Checked<f64>> {
    moments.check(taps, beta)?;
    if !(mu > 0.0) {
        return Err(domain(format!("step size must be positive, got {mu}")));
    }
    let l = taps as f64;
    let mut noise_term = 0.0;
    let mut drift = 0.0;
    let mut input_term = 0.0;
    for b in &moments.bands {
        let ratio = b.m_2beta / b.m_pnorm_sq;
        noise_term += ratio * b.var_n;
        input_term += ratio * b.var_x;
        drift += b.m_beta_plus_1 / b.m_pnorm;
    }
    let denominator = 2.0 * drift - mu * l * input_term;
    if !(denominator > 0.0) {
        return Err(Error::Unstable { denominator });
    }
    Ok(Checked {
        value: mu * l * noise_term / denominator,
        warnings: moments.warnings(),
    })
}

#[derive(Default, Clone, Copy)]
struct Accum {
    m_beta_plus_1: f64,
    m_2beta: f64,
    m_pnorm: f64,
    m_pnorm_sq: f64,
    sum_x: f64,
    sum_x2: f64,
    sum_n: f64,
    sum_n2: f64,
}

/// Ensemble-average moment estimates from `frames` decimated frames of
/// freshly generated input and noise. Input and noise use substreams 0 and 1
/// of `seed`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_moments(
    bank: &FilterBank,
    input: &SourceConfig,
    noise: &SourceConfig,
    p: f64,
    beta: f64,
    taps: usize,
    frames: usize,
    seed: u64,
) -> Result<SubbandMoments> {
    input.validate()?;
    noise.validate()?;
    if frames < MIN_MOMENT_FRAMES {
        return Err(domain(format!(
            "moment estimation needs at least {MIN_MOMENT_FRAMES} frames, got {frames}"
        )));
    }
    if !(p > 0.0 && beta > 0.0) {
        return Err(domain("p and beta must be positive"));
    }
    let n = bank.decimation();
    let settle = input
        .ar1_pole
        .map_or(0, |pole| (10.0 / (1.0 - pole)).ceil() as usize);
    let warmup = bank.length() + n * taps + settle;
    let mut analyzer = SubbandAnalyzer::new(bank, taps)?;
    let mut acc = vec![Accum::default(); bank.num_bands()];
    let mut xs = input.stream(substream(seed, 0));
    let mut ns = noise.stream(substream(seed, 1));
    let mut used = 0;
    while used < frames {
        let (x, v) = (xs.next().unwrap_or(0.0), ns.next().unwrap_or(0.0));
        let after_warmup = analyzer.time() >= warmup;
        let Some(frame) = analyzer.push(x, v) else {
            continue;
        };
        if !after_warmup {
            continue;
        }
        for ((a, reg), &nd) in acc
            .iter_mut()
            .zip(&frame.band_inputs)
            .zip(&frame.band_desired)
        {
            let s = reg[0].abs();
            a.m_beta_plus_1 += s.powf(beta + 1.0);
            a.m_2beta += s.powf(2.0 * beta);
            let pn = p_norm_pow(reg, p);
            a.m_pnorm += pn;
            a.m_pnorm_sq += pn * pn;
            a.sum_x += reg[0];
            a.sum_x2 += reg[0] * reg[0];
            a.sum_n += nd;
            a.sum_n2 += nd * nd;
        }
        used += 1;
    }
    let f = frames as f64;
    let bands = acc
        .iter()
        .map(|a| BandMoments {
            m_beta_plus_1: a.m_beta_plus_1 / f,
            m_2beta: a.m_2beta / f,
            m_pnorm: a.m_pnorm / f,
            m_pnorm_sq: a.m_pnorm_sq / f,
            var_x: (a.sum_x2 / f - (a.sum_x / f).powi(2)).max(0.0),
            var_n: (a.sum_n2 / f - (a.sum_n / f).powi(2)).max(0.0),
        })
        .collect();
    Ok(SubbandMoments {
        p,
        beta,
        taps,
        bands,
        frames,
        heavy_tail: input.noise.alpha() < 2.0 || noise.noise.alpha() < 2.0,
    })
}
