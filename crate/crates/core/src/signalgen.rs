//! Seedable generators for Gaussian, symmetric alpha-stable and AR(1)-colored
//! signals.
//!
//! Alpha-stable draws use the Chambers-Mallows-Stuck transform. With scale
//! `zeta^(1/alpha)` the characteristic function is exactly
//! `exp(-zeta |t|^alpha)`.
//!
//! All generators are ChaCha8 based. A Monte Carlo trial gets its own
//! substream through [`substream`], so trials can run in any order or in
//! parallel and still reproduce.

use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Characteristic exponent and scale of a symmetric alpha-stable law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaStableParams {
    pub alpha: f64,
    pub zeta: f64,
}

impl AlphaStableParams {
    pub fn new(alpha: f64, zeta: f64) -> Result<Self> {
        let params = Self { alpha, zeta };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return Err(domain(format!(
                "alpha must lie in (0, 2], got {}",
                self.alpha
            )));
        }
        if !(self.zeta > 0.0 && self.zeta.is_finite()) {
            return Err(domain(format!("zeta must be positive, got {}", self.zeta)));
        }
        Ok(())
    }

    /// Scale of the standard CMS variate, `zeta^(1/alpha)`.
    pub fn cms_scale(&self) -> f64 {
        self.zeta.powf(1.0 / self.alpha)
    }

    /// `exp(-zeta |t|^alpha)`.
    pub fn characteristic_function(&self, t: f64) -> f64 {
        (-self.zeta * t.abs().powf(self.alpha)).exp()
    }
}

/// White driving noise of a signal source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseKind {
    Gaussian { variance: f64 },
    AlphaStable { alpha: f64, zeta: f64 },
}

impl NoiseKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseKind::Gaussian { variance } => check_variance(variance),
            NoiseKind::AlphaStable { alpha, zeta } => AlphaStableParams { alpha, zeta }.validate(),
        }
    }

    /// Characteristic exponent; 2 for Gaussian noise.
    pub fn alpha(&self) -> f64 {
        match *self {
            NoiseKind::Gaussian { .. } => 2.0,
            NoiseKind::AlphaStable { alpha, .. } => alpha,
        }
    }

    /// Variance of the white noise, `None` when it is infinite (alpha < 2).
    pub fn variance(&self) -> Option<f64> {
        match *self {
            NoiseKind::Gaussian { variance } => Some(variance),
            NoiseKind::AlphaStable { alpha, zeta } if alpha == 2.0 => Some(2.0 * zeta),
            NoiseKind::AlphaStable { .. } => None,
        }
    }
}

/// First-order auto-regressive coloring `y[k] = pole * y[k-1] + w[k]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ar1Params {
    pub pole: f64,
    pub driving: NoiseKind,
}

impl Ar1Params {
    pub fn new(pole: f64, driving: NoiseKind) -> Result<Self> {
        check_pole(pole)?;
        driving.validate()?;
        Ok(Self { pole, driving })
    }
}

/// A complete signal source: white driving noise, optionally AR(1) colored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceConfig {
    #[serde(flatten)]
    pub noise: NoiseKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ar1_pole: Option<f64>,
}

impl SourceConfig {
    pub fn white(noise: NoiseKind) -> Self {
        Self {
            noise,
            ar1_pole: None,
        }
    }

    pub fn colored(noise: NoiseKind, pole: f64) -> Self {
        Self {
            noise,
            ar1_pole: Some(pole),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.noise.validate()?;
        if let Some(pole) = self.ar1_pole {
            check_pole(pole)?;
        }
        Ok(())
    }

    /// An endless sample stream drawing from `rng`.
    pub fn stream<R: Rng>(&self, rng: R) -> SignalStream<R> {
        let sampler = match self.noise {
            NoiseKind::Gaussian { variance } => Sampler::Gaussian {
                std: variance.sqrt(),
            },
            NoiseKind::AlphaStable { alpha, zeta } => {
                Sampler::Stable(SymmetricStable::new(AlphaStableParams { alpha, zeta }))
            }
        };
        SignalStream {
            rng,
            sampler,
            pole: self.ar1_pole.unwrap_or(0.0),
            last: 0.0,
        }
    }
}

fn check_variance(variance: f64) -> Result<()> {
    if variance >= 0.0 && variance.is_finite() {
        Ok(())
    } else {
        Err(domain(format!(
            "variance must be non-negative, got {variance}"
        )))
    }
}

fn check_pole(pole: f64) -> Result<()> {
    if (0.0..1.0).contains(&pole) {
        Ok(())
    } else {
        Err(domain(format!("AR(1) pole must lie in [0, 1), got {pole}")))
    }
}

/// Generator for a plain integer seed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent generator for `(master_seed, index)`. The index selects the
/// ChaCha stream, so substreams never overlap.
pub fn substream(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Symmetric alpha-stable law via the Chambers-Mallows-Stuck transform.
#[derive(Debug, Clone, Copy)]
pub struct SymmetricStable {
    alpha: f64,
    scale: f64,
}

impl SymmetricStable {
    pub fn new(params: AlphaStableParams) -> Self {
        Self {
            alpha: params.alpha,
            scale: params.cms_scale(),
        }
    }
}

impl Distribution<f64> for SymmetricStable {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        // V uniform on the open interval (-pi/2, pi/2)
        let v = loop {
            let u: f64 = rng.random();
            if u > 0.0 {
                break (u - 0.5) * std::f64::consts::PI;
            }
        };
        // W standard exponential; 1 - u lies in (0, 1]
        let w = -(1.0 - rng.random::<f64>()).ln();
        let alpha = self.alpha;
        let x = if alpha == 1.0 {
            v.tan()
        } else {
            let head = (alpha * v).sin() / v.cos().powf(1.0 / alpha);
            let tail = (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha);
            head * tail
        };
        debug_assert!(v.abs() < FRAC_PI_2);
        self.scale * x
    }
}

#[derive(Debug, Clone, Copy)]
enum Sampler {
    Gaussian { std: f64 },
    Stable(SymmetricStable),
}

/// Endless stream produced by [`SourceConfig::stream`].
#[derive(Debug, Clone)]
pub struct SignalStream<R> {
    rng: R,
    sampler: Sampler,
    pole: f64,
    last: f64,
}

impl<R: Rng> Iterator for SignalStream<R> {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let white = match self.sampler {
            Sampler::Gaussian { std } => {
                let z: f64 = StandardNormal.sample(&mut self.rng);
                std * z
            }
            Sampler::Stable(ref s) => s.sample(&mut self.rng),
        };
        self.last = self.pole * self.last + white;
        Some(self.last)
    }
}

/// `count` i.i.d. symmetric alpha-stable draws.
pub fn sample_sas(params: AlphaStableParams, count: usize, seed: u64) -> Result<Vec<f64>> {
    params.validate()?;
    check_count(count)?;
    let dist = SymmetricStable::new(params);
    Ok(dist.sample_iter(rng_from_seed(seed)).take(count).collect())
}

/// `count` i.i.d. zero-mean Gaussian draws with the given variance.
pub fn sample_gaussian(variance: f64, count: usize, seed: u64) -> Result<Vec<f64>> {
    check_variance(variance)?;
    check_count(count)?;
    let std = variance.sqrt();
    Ok(StandardNormal
        .sample_iter(rng_from_seed(seed))
        .take(count)
        .map(|z: f64| std * z)
        .collect())
}

/// Runs `white` through the AR(1) recursion with zero initial state.
pub fn color_ar1(white: &[f64], params: &Ar1Params) -> Result<Vec<f64>> {
    check_pole(params.pole)?;
    if white.is_empty() {
        return Err(domain("AR(1) coloring needs a nonempty input"));
    }
    let mut last = 0.0;
    Ok(white
        .iter()
        .map(|&w| {
            last = params.pole * last + w;
            last
        })
        .collect())
}

fn check_count(count: usize) -> Result<()> {
    if count == 0 {
        Err(domain("sample count must be positive"))
    } else {
        Ok(())
    }
}
