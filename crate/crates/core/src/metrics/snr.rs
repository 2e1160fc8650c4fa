use serde::{Deserialize, Serialize};

use crate::audio_io::Waveform;
use crate::error::{Error, Result};
use crate::spectral::{stft, StftConfig};

/// Per-frame SNR clamp, in dB.
pub const SNR_MIN_DB: f64 = -10.0;
pub const SNR_MAX_DB: f64 = 35.0;

/// A frame is silent unless its clean energy exceeds this fraction of the
/// mean frame energy.
pub const SILENCE_FLOOR: f64 = 1e-8;

fn check_pair(clean: &Waveform, enhanced: &Waveform) -> Result<()> {
    if clean.len() != enhanced.len() {
        return Err(Error::LengthMismatch(clean.len(), enhanced.len()));
    }
    Ok(())
}

/// `10·log10(signal / noise)` clamped to the segmental range. A zero noise
/// energy maps to the upper clamp.
pub fn clamped_snr_db(signal: f64, noise: f64) -> f64 {
    if noise == 0.0 {
        return SNR_MAX_DB;
    }
    (10.0 * (signal / noise).log10()).clamp(SNR_MIN_DB, SNR_MAX_DB)
}

fn frame_starts(len: usize, frame: usize, hop: usize) -> Vec<(usize, usize)> {
    if len <= frame {
        return vec![(0, len)];
    }
    (0..=(len - frame) / hop)
        .map(|i| (i * hop, i * hop + frame))
        .collect()
}

/// Segmental SNR over non-overlapping (or hopped) rectangular frames.
///
/// An input shorter than one frame is treated as a single frame.
pub fn snrseg(clean: &Waveform, enhanced: &Waveform, frame: usize, hop: usize) -> Result<f64> {
    check_pair(clean, enhanced)?;
    if frame == 0 || hop == 0 {
        return Err(Error::InvalidConfig(
            "frame and hop must be positive".into(),
        ));
    }
    let (c, e) = (clean.samples(), enhanced.samples());
    let stats: Vec<(f64, f64)> = frame_starts(c.len(), frame, hop)
        .into_iter()
        .map(|(a, b)| {
            let signal: f64 = c[a..b].iter().map(|v| v * v).sum();
            let noise: f64 = c[a..b]
                .iter()
                .zip(&e[a..b])
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
            (signal, noise)
        })
        .collect();
    let mean_energy = stats.iter().map(|s| s.0).sum::<f64>() / stats.len() as f64;
    let floor = SILENCE_FLOOR * mean_energy;
    let voiced: Vec<f64> = stats
        .iter()
        .filter(|(signal, _)| *signal > floor)
        .map(|&(signal, noise)| clamped_snr_db(signal, noise))
        .collect();
    if voiced.is_empty() {
        return Err(Error::UndefinedMetric(
            "snrseg: no non-silent frames".into(),
        ));
    }
    Ok(voiced.iter().sum::<f64>() / voiced.len() as f64)
}

/// Triangular filterbank on the mel scale used by [`fwsnrseg`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterbankSpec {
    pub bands: usize,
    pub low_hz: f64,
    pub high_hz: f64,
    /// Band weights are the clean band magnitude raised to this power.
    pub exponent: f64,
}

impl Default for FilterbankSpec {
    fn default() -> Self {
        FilterbankSpec {
            bands: 25,
            low_hz: 50.0,
            high_hz: 8000.0,
            exponent: 0.2,
        }
    }
}

fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

impl FilterbankSpec {
    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        let nyquist = f64::from(sample_rate) / 2.0;
        // Written so that NaN fields are rejected too.
        let valid = self.low_hz >= 0.0
            && self.low_hz < self.high_hz.min(nyquist)
            && self.exponent >= 0.0;
        if self.bands == 0 || !valid {
            return Err(Error::InvalidConfig(format!(
                "bad filterbank {self:?} at {sample_rate} Hz"
            )));
        }
        Ok(())
    }

    /// `bands × bins` triangular weights. The upper edge is capped at the
    /// Nyquist frequency.
    pub fn weights(&self, fft_size: usize, sample_rate: u32) -> Result<Vec<Vec<f64>>> {
        self.validate(sample_rate)?;
        let sr = f64::from(sample_rate);
        let high = self.high_hz.min(sr / 2.0);
        let (lo, hi) = (hz_to_mel(self.low_hz), hz_to_mel(high));
        let edges: Vec<f64> = (0..self.bands + 2)
            .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (self.bands + 1) as f64))
            .collect();
        let bins = fft_size / 2 + 1;
        Ok((0..self.bands)
            .map(|b| {
                let (left, peak, right) = (edges[b], edges[b + 1], edges[b + 2]);
                (0..bins)
                    .map(|k| {
                        let f = k as f64 * sr / fft_size as f64;
                        if f < left || f > right {
                            0.0
                        } else if f <= peak {
                            (f - left) / (peak - left)
                        } else {
                            (right - f) / (right - peak)
                        }
                    })
                    .collect()
            })
            .collect())
    }
}

/// Frequency-weighted segmental SNR.
///
/// Per frame, band magnitudes `X_b`, `Y_b` are the filterbank-weighted sums
/// of the clean and enhanced STFT magnitudes; band SNRs
/// `10·log10(X_b² / (X_b − Y_b)²)` are clamped and averaged with weights
/// `X_b^exponent`. Frames whose clean spectral energy is below the silence
/// floor are skipped.
pub fn fwsnrseg(
    clean: &Waveform,
    enhanced: &Waveform,
    cfg: &StftConfig,
    bands: &FilterbankSpec,
) -> Result<f64> {
    check_pair(clean, enhanced)?;
    let fb = bands.weights(cfg.fft_size, clean.sample_rate())?;
    let s = stft(clean, cfg)?;
    let s_hat = stft(enhanced, cfg)?;
    let (m, m_hat) = (s.magnitudes(), s_hat.magnitudes());

    let energies: Vec<f64> = (0..m.frames())
        .map(|t| m.frame(t).iter().map(|v| v * v).sum())
        .collect();
    let floor = SILENCE_FLOOR * energies.iter().sum::<f64>() / energies.len() as f64;

    let mut frame_scores = Vec::new();
    for (t, &energy) in energies.iter().enumerate() {
        if energy <= floor {
            continue;
        }
        let (x, y) = (m.frame(t), m_hat.frame(t));
        let mut weighted = 0.0;
        let mut total_weight = 0.0;
        for h in &fb {
            let xb: f64 = h.iter().zip(x).map(|(w, v)| w * v).sum();
            let yb: f64 = h.iter().zip(y).map(|(w, v)| w * v).sum();
            let w = xb.powf(bands.exponent);
            weighted += w * clamped_snr_db(xb * xb, (xb - yb) * (xb - yb));
            total_weight += w;
        }
        if total_weight > 0.0 {
            frame_scores.push(weighted / total_weight);
        }
    }
    if frame_scores.is_empty() {
        return Err(Error::UndefinedMetric(
            "fwsnrseg: no non-silent frames".into(),
        ));
    }
    Ok(frame_scores.iter().sum::<f64>() / frame_scores.len() as f64)
}

/// Whole-utterance signal-to-distortion ratio in dB; `+∞` when the estimate
/// is exact.
pub fn sdr(clean: &Waveform, enhanced: &Waveform) -> Result<f64> {
    check_pair(clean, enhanced)?;
    let signal: f64 = clean.samples().iter().map(|v| v * v).sum();
    if signal == 0.0 {
        return Err(Error::invalid("SDR needs a clean reference with energy"));
    }
    let noise: f64 = clean
        .samples()
        .iter()
        .zip(enhanced.samples())
        .map(|(c, e)| (c - e) * (c - e))
        .sum();
    if noise == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (signal / noise).log10())
}

/// `sdr(clean, enhanced) − sdr(clean, noisy)`; exactly 0 when both are
/// infinite.
pub fn sdri(clean: &Waveform, enhanced: &Waveform, noisy: &Waveform) -> Result<f64> {
    let a = sdr(clean, enhanced)?;
    let b = sdr(clean, noisy)?;
    if a == b {
        return Ok(0.0);
    }
    Ok(a - b)
}
