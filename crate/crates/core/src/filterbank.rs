//! Cosine-modulated (pseudo-QMF) analysis filter banks and critically
//! decimated subband decomposition.

use std::f64::consts::{FRAC_PI_4, PI};

use crate::error::{Error, Result};

/// Frequency grid used to judge power complementarity.
pub const RIPPLE_GRID: usize = 1024;

/// `N` analysis filters of `D` taps each. Decimation is always `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    coeffs: Vec<Vec<f64>>,
    length: usize,
}

impl FilterBank {
    /// Wraps explicit impulse responses, all of the same length.
    pub fn from_coeffs(coeffs: Vec<Vec<f64>>) -> Result<Self> {
        let length = coeffs.first().map(Vec::len).unwrap_or(0);
        if coeffs.is_empty() || length == 0 {
            return Err(Error::Design(
                "a bank needs at least one nonempty filter".into(),
            ));
        }
        if let Some(bad) = coeffs.iter().find(|f| f.len() != length) {
            return Err(Error::Shape {
                what: "filter length",
                expected: length,
                got: bad.len(),
            });
        }
        Ok(Self { coeffs, length })
    }

    /// Single band, `f = (1, 0, ..., 0)`.
    pub fn identity(length: usize) -> Self {
        let mut f = vec![0.0; length.max(1)];
        f[0] = 1.0;
        Self {
            length: f.len(),
            coeffs: vec![f],
        }
    }

    pub fn num_bands(&self) -> usize {
        self.coeffs.len()
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn decimation(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    pub fn band(&self, i: usize) -> &[f64] {
        &self.coeffs[i]
    }

    /// `||f_i||_2^2` for every band.
    pub fn band_energies(&self) -> Vec<f64> {
        self.coeffs
            .iter()
            .map(|f| f.iter().map(|c| c * c).sum())
            .collect()
    }

    /// `|F_i(e^{jw})|^2`.
    pub fn power_response(&self, band: usize, omega: f64) -> f64 {
        power_response(&self.coeffs[band], omega)
    }

    /// Relative deviation of `sum_i |F_i|^2` from its mid-band value on a
    /// [`RIPPLE_GRID`]-point grid over `[0, pi]`.
    pub fn power_complementarity_ripple(&self) -> f64 {
        complementarity_ripple(&self.coeffs)
    }
}

fn power_response(f: &[f64], omega: f64) -> f64 {
    let (re, im) = f.iter().enumerate().fold((0.0, 0.0), |(re, im), (n, &c)| {
        let (s, co) = (omega * n as f64).sin_cos();
        (re + c * co, im - c * s)
    });
    re * re + im * im
}

fn complementarity_ripple(coeffs: &[Vec<f64>]) -> f64 {
    RippleGrid::new(coeffs.first().map_or(0, Vec::len)).ripple(coeffs)
}

/// `cos(w n)` and `sin(w n)` on the ripple grid, reused across the many
/// ripple evaluations of the cutoff search.
struct RippleGrid {
    cos: Vec<f64>,
    sin: Vec<f64>,
    length: usize,
}

impl RippleGrid {
    fn new(length: usize) -> Self {
        let mut cos = Vec::with_capacity(RIPPLE_GRID * length);
        let mut sin = Vec::with_capacity(RIPPLE_GRID * length);
        for j in 0..RIPPLE_GRID {
            let omega = PI * j as f64 / (RIPPLE_GRID - 1) as f64;
            for n in 0..length {
                let (s, c) = (omega * n as f64).sin_cos();
                cos.push(c);
                sin.push(s);
            }
        }
        Self { cos, sin, length }
    }

    fn ripple(&self, coeffs: &[Vec<f64>]) -> f64 {
        let total: Vec<f64> = (0..RIPPLE_GRID)
            .map(|j| {
                let row = j * self.length..(j + 1) * self.length;
                let (c, s) = (&self.cos[row.clone()], &self.sin[row]);
                coeffs
                    .iter()
                    .map(|f| {
                        let re: f64 = f.iter().zip(c).map(|(a, b)| a * b).sum();
                        let im: f64 = f.iter().zip(s).map(|(a, b)| a * b).sum();
                        re * re + im * im
                    })
                    .sum()
            })
            .collect();
        let mid = total[(RIPPLE_GRID - 1) / 2];
        total.iter().map(|t| (t - mid).abs()).fold(0.0, f64::max) / mid
    }
}

/// Hamming-windowed sinc lowpass with unit DC gain.
fn prototype(length: usize, cutoff: f64) -> Vec<f64> {
    let center = (length as f64 - 1.0) / 2.0;
    let mut p: Vec<f64> = (0..length)
        .map(|n| {
            let t = n as f64 - center;
            let sinc = if t == 0.0 {
                cutoff / PI
            } else {
                (cutoff * t).sin() / (PI * t)
            };
            let window = if length == 1 {
                1.0
            } else {
                0.54 - 0.46 * (2.0 * PI * n as f64 / (length as f64 - 1.0)).cos()
            };
            sinc * window
        })
        .collect();
    let dc: f64 = p.iter().sum();
    p.iter_mut().for_each(|c| *c /= dc);
    p
}

fn modulate(p: &[f64], num_bands: usize) -> Vec<Vec<f64>> {
    let center = (p.len() as f64 - 1.0) / 2.0;
    (1..=num_bands)
        .map(|i| {
            let freq = (2 * i - 1) as f64 * PI / (2 * num_bands) as f64;
            let phase = if i % 2 == 1 { FRAC_PI_4 } else { -FRAC_PI_4 };
            p.iter()
                .enumerate()
                .map(|(n, &pn)| 2.0 * pn * (freq * (n as f64 - center) + phase).cos())
                .collect()
        })
        .collect()
}

/// Designs an `N`-band cosine-modulated bank with `D`-tap filters.
///
/// The prototype is a Hamming-windowed sinc with unit DC gain, so each band
/// has unit gain at its center frequency. Its cutoff is the value in
/// `[pi/4N, pi/N]` minimising the power-complementarity ripple: a coarse
/// scan followed by golden-section refinement.
pub fn design_bank(num_bands: usize, length: usize) -> Result<FilterBank> {
    if num_bands == 0 || length == 0 || !length.is_multiple_of(2 * num_bands) {
        return Err(Error::Design(format!(
            "length {length} must be a positive multiple of 2 * bands ({num_bands})"
        )));
    }
    let grid = RippleGrid::new(length);
    let ripple_at = |cutoff: f64| grid.ripple(&modulate(&prototype(length, cutoff), num_bands));

    let lo = PI / (4 * num_bands) as f64;
    let hi = PI / num_bands as f64;
    const SCAN: usize = 48;
    let step = (hi - lo) / SCAN as f64;
    let best = (0..=SCAN)
        .map(|j| lo + step * j as f64)
        .min_by(|a, b| ripple_at(*a).total_cmp(&ripple_at(*b)))
        .expect("nonempty scan");

    let (mut a, mut b) = ((best - step).max(lo), (best + step).min(hi));
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (ripple_at(c), ripple_at(d));
    for _ in 0..40 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = ripple_at(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = ripple_at(d);
        }
    }
    let cutoff = if fc < fd { c } else { d };
    Ok(FilterBank {
        coeffs: modulate(&prototype(length, cutoff), num_bands),
        length,
    })
}

/// Newest-first delay line backed by a doubled buffer so the window is
/// always one contiguous slice.
#[derive(Debug, Clone)]
pub(crate) struct DelayLine {
    buf: Vec<f64>,
    len: usize,
    head: usize,
}

impl DelayLine {
    pub(crate) fn new(len: usize) -> Self {
        Self {
            buf: vec![0.0; 2 * len],
            len,
            head: 0,
        }
    }

    pub(crate) fn push(&mut self, x: f64) {
        self.head = if self.head == 0 {
            self.len - 1
        } else {
            self.head - 1
        };
        self.buf[self.head] = x;
        self.buf[self.head + self.len] = x;
    }

    /// `[newest, ..., oldest]`.
    pub(crate) fn window(&self) -> &[f64] {
        &self.buf[self.head..self.head + self.len]
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One decimated time step of the subband decomposition.
///
/// `band_inputs[i]` is the regressor `[u_i(kN), u_i(kN-1), ..., u_i(kN-L+1)]`
/// of the band-`i` filtered input (undecimated), `band_desired[i]` the band-`i`
/// filtered desired signal sampled at `kN`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandFrame {
    pub band_inputs: Vec<Vec<f64>>,
    pub band_desired: Vec<f64>,
    pub frame_index: usize,
}

impl SubbandFrame {
    pub fn zeros(num_bands: usize, taps: usize) -> Self {
        Self {
            band_inputs: vec![vec![0.0; taps]; num_bands],
            band_desired: vec![0.0; num_bands],
            frame_index: 0,
        }
    }

    pub fn num_bands(&self) -> usize {
        self.band_desired.len()
    }
}

/// Streaming analysis of an (input, desired) pair. Signals are zero before
/// the first pushed sample. A frame is emitted at every fullband time that is
/// a multiple of `N`, so frame `k` belongs to time `k * N`.
#[derive(Debug, Clone)]
pub struct SubbandAnalyzer {
    bank: FilterBank,
    input_line: DelayLine,
    desired_line: DelayLine,
    regressors: Vec<DelayLine>,
    time: usize,
    frame: SubbandFrame,
}

impl SubbandAnalyzer {
    pub fn new(bank: &FilterBank, taps: usize) -> Result<Self> {
        if taps == 0 {
            return Err(crate::error::domain("tap count must be positive"));
        }
        let n = bank.num_bands();
        Ok(Self {
            bank: bank.clone(),
            input_line: DelayLine::new(bank.length()),
            desired_line: DelayLine::new(bank.length()),
            regressors: (0..n).map(|_| DelayLine::new(taps)).collect(),
            time: 0,
            frame: SubbandFrame::zeros(n, taps),
        })
    }

    /// Feeds one fullband sample pair; returns the new frame on decimation
    /// instants.
    pub fn push(&mut self, input: f64, desired: f64) -> Option<&SubbandFrame> {
        self.input_line.push(input);
        self.desired_line.push(desired);
        let x = self.input_line.window();
        for (f, line) in self.bank.coeffs.iter().zip(&mut self.regressors) {
            line.push(dot(f, x));
        }
        let t = self.time;
        self.time += 1;
        if !t.is_multiple_of(self.bank.decimation()) {
            return None;
        }
        let d = self.desired_line.window();
        for (i, f) in self.bank.coeffs.iter().enumerate() {
            self.frame.band_inputs[i].copy_from_slice(self.regressors[i].window());
            self.frame.band_desired[i] = dot(f, d);
        }
        self.frame.frame_index = t / self.bank.decimation();
        Some(&self.frame)
    }

    pub fn time(&self) -> usize {
        self.time
    }
}

/// Iterator over the frames of a finite signal pair; ends when the samples
/// run out.
#[derive(Debug, Clone)]
pub struct SubbandFrames<'a> {
    analyzer: SubbandAnalyzer,
    input: &'a [f64],
    desired: &'a [f64],
    pos: usize,
}

impl Iterator for SubbandFrames<'_> {
    type Item = SubbandFrame;

    fn next(&mut self) -> Option<SubbandFrame> {
        while self.pos < self.input.len() {
            let (x, d) = (self.input[self.pos], self.desired[self.pos]);
            self.pos += 1;
            if let Some(frame) = self.analyzer.push(x, d) {
                return Some(frame.clone());
            }
        }
        None
    }
}

/// Decomposes one fullband signal; each frame's desired entries are the
/// decimated band outputs of that same signal.
pub fn analyze<'a>(
    bank: &FilterBank,
    fullband: &'a [f64],
    taps: usize,
) -> Result<SubbandFrames<'a>> {
    analyze_pair(bank, fullband, fullband, taps)
}

/// Decomposes an input/desired pair of equal length.
pub fn analyze_pair<'a>(
    bank: &FilterBank,
    input: &'a [f64],
    desired: &'a [f64],
    taps: usize,
) -> Result<SubbandFrames<'a>> {
    if input.len() != desired.len() {
        return Err(Error::Shape {
            what: "desired signal length",
            expected: input.len(),
            got: desired.len(),
        });
    }
    Ok(SubbandFrames {
        analyzer: SubbandAnalyzer::new(bank, taps)?,
        input,
        desired,
        pos: 0,
    })
}

/// Band outputs `(f_i * s)[kN]` for every frame `k`, one vector per band.
pub fn decimated_bands(bank: &FilterBank, signal: &[f64]) -> Vec<Vec<f64>> {
    let n = bank.decimation();
    let mut line = DelayLine::new(bank.length());
    let mut out = vec![Vec::with_capacity(signal.len() / n + 1); bank.num_bands()];
    for (t, &s) in signal.iter().enumerate() {
        line.push(s);
        if t % n == 0 {
            for (band, f) in out.iter_mut().zip(&bank.coeffs) {
                band.push(dot(f, line.window()));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signalgen::{rng_from_seed, sample_gaussian, NoiseKind, SourceConfig};

    fn db(x: f64) -> f64 {
        10.0 * x.log10()
    }

    #[test]
    fn rejects_bad_lengths() {
        assert!(design_bank(4, 30).is_err());
        assert!(design_bank(0, 32).is_err());
        assert!(design_bank(4, 0).is_err());
        assert!(FilterBank::from_coeffs(vec![vec![1.0, 2.0], vec![1.0]]).is_err());
        assert!(FilterBank::from_coeffs(vec![]).is_err());
    }

    #[test]
    fn four_band_design_shape_and_dc_response() {
        let bank = design_bank(4, 32).unwrap();
        assert_eq!(bank.num_bands(), 4);
        assert!(bank.coeffs().iter().all(|f| f.len() == 32));
        assert!(db(bank.power_response(0, 0.0)).abs() < 1.0);
        for i in 1..4 {
            assert!(db(bank.power_response(i, 0.0)) < -20.0, "band {i}");
        }
        let total: f64 = bank.band_energies().iter().sum();
        assert!((total - 1.0).abs() < 0.01, "total energy {total}");
        assert_eq!(bank, design_bank(4, 32).unwrap());
    }

    #[test]
    fn power_complementary() {
        let ripple = design_bank(4, 32).unwrap().power_complementarity_ripple();
        assert!(ripple < 0.05, "ripple {ripple}");
    }

    #[test]
    fn single_band_is_allpass_like() {
        let bank = design_bank(1, 16).unwrap();
        for j in 0..16 {
            let g = bank.power_response(0, PI * j as f64 / 15.0);
            assert!(db(g).abs() < 1.0, "{j}: {g}");
        }
    }

    #[test]
    fn identity_bank_passes_signal_through() {
        let s = sample_gaussian(1.0, 40, 1).unwrap();
        let frames: Vec<_> = analyze(&FilterBank::identity(8), &s, 3).unwrap().collect();
        assert_eq!(frames.len(), 40);
        for (k, fr) in frames.iter().enumerate() {
            assert_eq!(fr.frame_index, k);
            assert_eq!(fr.band_desired[0], s[k]);
            assert_eq!(fr.band_inputs[0][0], s[k]);
            if k >= 2 {
                assert_eq!(fr.band_inputs[0], vec![s[k], s[k - 1], s[k - 2]]);
            }
        }
    }

    #[test]
    fn zero_input_gives_zero_frames() {
        let bank = design_bank(4, 32).unwrap();
        let zeros = vec![0.0; 200];
        let frames: Vec<_> = analyze(&bank, &zeros, 5).unwrap().collect();
        assert_eq!(frames.len(), 50);
        assert!(frames
            .iter()
            .all(|f| f.band_desired.iter().all(|&d| d == 0.0)
                && f.band_inputs.iter().flatten().all(|&x| x == 0.0)));
    }

    #[test]
    fn mismatched_pair_is_a_shape_error() {
        let bank = design_bank(2, 8).unwrap();
        assert!(analyze_pair(&bank, &[0.0; 4], &[0.0; 3], 2).is_err());
    }

    #[test]
    fn linear_in_the_signal() {
        let bank = design_bank(4, 32).unwrap();
        let u = sample_gaussian(1.0, 400, 2).unwrap();
        let v = sample_gaussian(1.0, 400, 3).unwrap();
        let (a, b) = (0.7, -2.5);
        let w: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
        let fu: Vec<_> = analyze(&bank, &u, 6).unwrap().collect();
        let fv: Vec<_> = analyze(&bank, &v, 6).unwrap().collect();
        let fw: Vec<_> = analyze(&bank, &w, 6).unwrap().collect();
        for ((x, y), z) in fu.iter().zip(&fv).zip(&fw) {
            for i in 0..4 {
                let want = a * x.band_desired[i] + b * y.band_desired[i];
                assert!((z.band_desired[i] - want).abs() < 1e-12 * (1.0 + want.abs()));
                for j in 0..6 {
                    let want = a * x.band_inputs[i][j] + b * y.band_inputs[i][j];
                    assert!((z.band_inputs[i][j] - want).abs() < 1e-12 * (1.0 + want.abs()));
                }
            }
        }
    }

    #[test]
    fn shift_by_n_shifts_one_frame() {
        let bank = design_bank(4, 32).unwrap();
        let s = sample_gaussian(1.0, 300, 4).unwrap();
        let mut delayed = vec![0.0; 4];
        delayed.extend_from_slice(&s);
        let a: Vec<_> = analyze(&bank, &s, 5).unwrap().collect();
        let b: Vec<_> = analyze(&bank, &delayed, 5).unwrap().collect();
        assert!(b[0].band_desired.iter().all(|&d| d == 0.0));
        for (k, fa) in a.iter().enumerate() {
            assert_eq!(fa.band_desired, b[k + 1].band_desired);
            assert_eq!(fa.band_inputs, b[k + 1].band_inputs);
        }
    }

    fn lag1(xs: &[f64]) -> f64 {
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let c0: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
        let c1: f64 = xs.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
        c1 / c0
    }

    #[test]
    fn bands_whiten_the_input() {
        let bank = design_bank(4, 32).unwrap();
        let white = sample_gaussian(1.0, 200_000, 5).unwrap();
        for band in decimated_bands(&bank, &white) {
            assert!(lag1(&band).abs() < 0.2);
        }
        let colored: Vec<f64> = SourceConfig::colored(NoiseKind::Gaussian { variance: 1.0 }, 0.999)
            .stream(rng_from_seed(5))
            .take(200_000)
            .collect();
        assert!(lag1(&colored) > 0.99);
    }

    #[test]
    fn subband_noise_variance_scales_with_band_energy() {
        let bank = design_bank(4, 32).unwrap();
        let var = 0.001;
        let noise = sample_gaussian(var, 1_000_000, 6).unwrap();
        for (band, energy) in decimated_bands(&bank, &noise)
            .iter()
            .zip(bank.band_energies())
        {
            let v = band.iter().map(|x| x * x).sum::<f64>() / band.len() as f64;
            assert!((v / (var * energy) - 1.0).abs() < 0.05);
        }
    }
}
