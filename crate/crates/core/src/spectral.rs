//! Short-time Fourier analysis, overlap-add synthesis and the adjoint of the
//! analysis map.
//!
//! Framing convention: the signal is reflection-padded by `win_length / 2`
//! samples at both ends, frame `t` covers padded samples
//! `t * hop .. t * hop + win_length`, and each windowed frame is zero-padded
//! on the right to `fft_size` before a one-sided DFT. Bin `k` of frame `t` is
//! therefore
//!
//! ```text
//! S[t, k] = Σ_m w[m] · x̃[t·hop + m] · exp(-2πi·k·m / fft_size)
//! ```
//!
//! with `x̃` the padded signal and `k = 0 ..= fft_size / 2`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::audio_io::Waveform;
use crate::error::{Error, Result};
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    Hann,
    Rectangular,
}

impl WindowKind {
    /// Periodic window of length `len`.
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            WindowKind::Rectangular => vec![1.0; len],
            WindowKind::Hann => (0..len)
                .map(|m| 0.5 - 0.5 * (2.0 * PI * m as f64 / len as f64).cos())
                .collect(),
        }
    }
}

impl fmt::Display for WindowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WindowKind::Hann => "hann",
            WindowKind::Rectangular => "rectangular",
        })
    }
}

/// One analysis resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StftConfig {
    pub fft_size: usize,
    pub hop: usize,
    pub win_length: usize,
    pub window: WindowKind,
}

impl StftConfig {
    pub fn new(fft_size: usize, hop: usize, win_length: usize, window: WindowKind) -> Result<Self> {
        let cfg = StftConfig {
            fft_size,
            hop,
            win_length,
            window,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn hann(fft_size: usize, hop: usize, win_length: usize) -> Result<Self> {
        Self::new(fft_size, hop, win_length, WindowKind::Hann)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.fft_size.is_power_of_two() || self.fft_size < 2 {
            return Err(Error::InvalidConfig(format!(
                "fft_size {} is not a power of two",
                self.fft_size
            )));
        }
        if self.hop == 0 || self.hop > self.win_length || self.win_length > self.fft_size {
            return Err(Error::InvalidConfig(format!(
                "need 0 < hop ({}) <= win_length ({}) <= fft_size ({})",
                self.hop, self.win_length, self.fft_size
            )));
        }
        Ok(())
    }

    /// Number of one-sided bins, `fft_size / 2 + 1`.
    pub fn bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Reflection padding applied at each end.
    pub fn pad(&self) -> usize {
        self.win_length / 2
    }

    pub fn frame_count(&self, source_length: usize) -> usize {
        let padded = source_length + 2 * self.pad();
        if padded < self.win_length {
            0
        } else {
            1 + (padded - self.win_length) / self.hop
        }
    }

    pub fn window_coefficients(&self) -> Vec<f64> {
        self.window.coefficients(self.win_length)
    }

    /// Whether overlap-add with squared-window normalization inverts the
    /// analysis: any hop for a rectangular window, at most half the window
    /// for Hann.
    pub fn satisfies_cola(&self) -> bool {
        match self.window {
            WindowKind::Rectangular => self.hop <= self.win_length,
            WindowKind::Hann => 2 * self.hop <= self.win_length,
        }
    }
}

impl fmt::Display for StftConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "fft={} hop={} win={} {}",
            self.fft_size, self.hop, self.win_length, self.window
        )
    }
}

/// An ordered, duplicate-free set of resolutions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<StftConfig>", into = "Vec<StftConfig>")]
pub struct MultiResConfig {
    resolutions: Vec<StftConfig>,
}

impl MultiResConfig {
    pub fn new(resolutions: Vec<StftConfig>) -> Result<Self> {
        if resolutions.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one resolution is required".into(),
            ));
        }
        for (i, r) in resolutions.iter().enumerate() {
            r.validate()?;
            if resolutions[..i].contains(r) {
                return Err(Error::InvalidConfig(format!("duplicate resolution {r}")));
            }
        }
        Ok(MultiResConfig { resolutions })
    }

    pub fn resolutions(&self) -> &[StftConfig] {
        &self.resolutions
    }

    pub fn len(&self) -> usize {
        self.resolutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.resolutions.is_empty()
    }
}

impl Default for MultiResConfig {
    /// FFT sizes 512/1024/2048 with hops 50/120/240 and Hann windows of
    /// 240/600/1200 samples.
    fn default() -> Self {
        let resolutions = [(512, 50, 240), (1024, 120, 600), (2048, 240, 1200)]
            .into_iter()
            .map(|(fft_size, hop, win_length)| StftConfig {
                fft_size,
                hop,
                win_length,
                window: WindowKind::Hann,
            })
            .collect();
        MultiResConfig { resolutions }
    }
}

impl TryFrom<Vec<StftConfig>> for MultiResConfig {
    type Error = Error;

    fn try_from(v: Vec<StftConfig>) -> Result<Self> {
        MultiResConfig::new(v)
    }
}

impl From<MultiResConfig> for Vec<StftConfig> {
    fn from(m: MultiResConfig) -> Self {
        m.resolutions
    }
}

/// One-sided STFT of a waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrogram {
    values: Grid<Complex64>,
    config: StftConfig,
    source_length: usize,
}

impl ComplexSpectrogram {
    /// Builds a spectrogram from raw values, checking the grid shape against
    /// `config` and `source_length`.
    pub fn from_parts(
        values: Grid<Complex64>,
        config: StftConfig,
        source_length: usize,
    ) -> Result<Self> {
        config.validate()?;
        let expected = (config.frame_count(source_length), config.bins());
        if values.shape() != expected {
            return Err(Error::invalid(format!(
                "spectrogram shape {:?} does not match {:?} for {source_length} samples",
                values.shape(),
                expected
            )));
        }
        if values.as_slice().iter().any(|z| !z.is_finite()) {
            return Err(Error::invalid("spectrogram contains non-finite values"));
        }
        Ok(ComplexSpectrogram {
            values,
            config,
            source_length,
        })
    }

    pub fn values(&self) -> &Grid<Complex64> {
        &self.values
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    pub fn source_length(&self) -> usize {
        self.source_length
    }

    pub fn frames(&self) -> usize {
        self.values.frames()
    }

    pub fn bins(&self) -> usize {
        self.values.bins()
    }

    pub fn magnitudes(&self) -> Grid {
        self.values.map(|z| z.norm())
    }

    /// Applies `f` to every value, keeping the configuration.
    pub fn map(&self, f: impl FnMut(&Complex64) -> Complex64) -> Result<Self> {
        Self::from_parts(self.values.map(f), self.config, self.source_length)
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn forward_plan(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n))
}

fn inverse_plan(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n))
}

/// Maps a position relative to the unpadded signal onto the signal by
/// mirror reflection (edge samples are not repeated). Inputs shorter than the
/// padding reflect repeatedly.
pub(crate) fn reflect_index(pos: isize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let m = pos.rem_euclid(period) as usize;
    if m < len {
        m
    } else {
        period as usize - m
    }
}

/// Raw (unwindowed) samples of frame `t` under the padding convention.
pub(crate) fn frame_samples(samples: &[f64], cfg: &StftConfig, t: usize) -> Vec<f64> {
    let start = (t * cfg.hop) as isize - cfg.pad() as isize;
    (0..cfg.win_length)
        .map(|m| samples[reflect_index(start + m as isize, samples.len())])
        .collect()
}

fn check_samples(samples: &[f64]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::EmptyWaveform);
    }
    if samples.iter().any(|s| !s.is_finite()) {
        return Err(Error::invalid("non-finite sample"));
    }
    Ok(())
}

/// STFT of a raw sample buffer.
pub fn stft_samples(samples: &[f64], cfg: &StftConfig) -> Result<ComplexSpectrogram> {
    cfg.validate()?;
    check_samples(samples)?;
    let n = cfg.fft_size;
    let frames = cfg.frame_count(samples.len());
    let bins = cfg.bins();
    let window = cfg.window_coefficients();
    let fft = forward_plan(n);

    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut values = Vec::with_capacity(frames * bins);
    for t in 0..frames {
        let start = (t * cfg.hop) as isize - cfg.pad() as isize;
        for (m, slot) in buf.iter_mut().enumerate() {
            *slot = if m < cfg.win_length {
                let x = samples[reflect_index(start + m as isize, samples.len())];
                Complex64::new(window[m] * x, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        values.extend_from_slice(&buf[..bins]);
    }
    let values = Grid::from_vec(frames, bins, values).expect("shape by construction");
    Ok(ComplexSpectrogram {
        values,
        config: *cfg,
        source_length: samples.len(),
    })
}

pub fn stft(w: &Waveform, cfg: &StftConfig) -> Result<ComplexSpectrogram> {
    stft_samples(w.samples(), cfg)
}

/// Overlap-add resynthesis normalized by the summed squared window.
///
/// Returns the samples of the original (unpadded) signal. Configurations
/// failing [`StftConfig::satisfies_cola`] are rejected.
pub fn istft_samples(s: &ComplexSpectrogram) -> Result<Vec<f64>> {
    let cfg = s.config();
    if !cfg.satisfies_cola() {
        return Err(Error::UnsupportedConfig(format!(
            "{cfg} does not satisfy the overlap-add condition"
        )));
    }
    let n = cfg.fft_size;
    let bins = cfg.bins();
    let window = cfg.window_coefficients();
    let pad = cfg.pad();
    let padded_len = s.source_length() + 2 * pad;
    let ifft = inverse_plan(n);

    let mut acc = vec![0.0; padded_len];
    let mut norm = vec![0.0; padded_len];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); ifft.get_inplace_scratch_len()];
    for t in 0..s.frames() {
        let frame = s.values().frame(t);
        buf[..bins].copy_from_slice(frame);
        for k in 1..n - bins + 1 {
            buf[n - k] = frame[k].conj();
        }
        ifft.process_with_scratch(&mut buf, &mut scratch);
        let start = t * cfg.hop;
        for m in 0..cfg.win_length.min(padded_len - start) {
            acc[start + m] += window[m] * buf[m].re / n as f64;
            norm[start + m] += window[m] * window[m];
        }
    }

    let mut out = Vec::with_capacity(s.source_length());
    for i in pad..pad + s.source_length() {
        if norm[i] < 1e-10 {
            return Err(Error::UnsupportedConfig(format!(
                "{cfg} leaves sample {} without window coverage",
                i - pad
            )));
        }
        out.push(acc[i] / norm[i]);
    }
    Ok(out)
}

pub fn istft(s: &ComplexSpectrogram, sample_rate: u32) -> Result<Waveform> {
    Waveform::new(istft_samples(s)?, sample_rate)
}

/// Transpose of the analysis map.
///
/// `grad[t, k]` holds `∂L/∂Re S[t,k] + i·∂L/∂Im S[t,k]` for a real scalar
/// `L`; the result is `∂L/∂x` for the `source_length` input samples. Window,
/// zero-padding and the reflection fold-back are all accounted for, so
/// `⟨stft(x), G⟩ = ⟨x, stft_adjoint(G)⟩` with the real inner product
/// `Σ Re(S · conj(G))`.
pub fn stft_adjoint(
    grad: &Grid<Complex64>,
    cfg: &StftConfig,
    source_length: usize,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if source_length == 0 {
        return Err(Error::EmptyWaveform);
    }
    let expected = (cfg.frame_count(source_length), cfg.bins());
    if grad.shape() != expected {
        return Err(Error::invalid(format!(
            "gradient shape {:?} does not match spectrogram shape {:?}",
            grad.shape(),
            expected
        )));
    }
    let n = cfg.fft_size;
    let bins = cfg.bins();
    let window = cfg.window_coefficients();
    let ifft = inverse_plan(n);

    let mut out = vec![0.0; source_length];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); ifft.get_inplace_scratch_len()];
    for t in 0..grad.frames() {
        let g = grad.frame(t);
        if g.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
            continue;
        }
        buf[..bins].copy_from_slice(g);
        buf[bins..].fill(Complex64::new(0.0, 0.0));
        // Σ_k G[k]·exp(+2πikm/n), the conjugate-transpose of the DFT rows.
        ifft.process_with_scratch(&mut buf, &mut scratch);
        let start = (t * cfg.hop) as isize - cfg.pad() as isize;
        for m in 0..cfg.win_length {
            out[reflect_index(start + m as isize, source_length)] += window[m] * buf[m].re;
        }
    }
    Ok(out)
}
