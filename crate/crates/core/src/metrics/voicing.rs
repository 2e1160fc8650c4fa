use serde::{Deserialize, Serialize};

use crate::audio_io::Waveform;
use crate::error::{Error, Result};
use crate::spectral::{frame_samples, StftConfig};

/// Thresholds of the energy-and-periodicity voicing detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VoicingParams {
    /// Frame RMS must exceed this fraction of the loudest frame's RMS.
    pub energy_ratio: f64,
    /// Minimum normalized autocorrelation peak.
    pub periodicity: f64,
    pub min_f0_hz: f64,
    pub max_f0_hz: f64,
}

impl Default for VoicingParams {
    fn default() -> Self {
        VoicingParams {
            energy_ratio: 0.03,
            periodicity: 0.45,
            min_f0_hz: 50.0,
            max_f0_hz: 400.0,
        }
    }
}

impl VoicingParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.energy_ratio >= 0.0
            && (0.0..=1.0).contains(&self.periodicity)
            && self.min_f0_hz > 0.0
            && self.min_f0_hz < self.max_f0_hz;
        if !ok {
            return Err(Error::InvalidConfig(format!(
                "bad voicing parameters {self:?}"
            )));
        }
        Ok(())
    }

    /// Autocorrelation lag range for a frame of `win_length` samples. Lags
    /// are capped at half the frame so every correlation sums over at least
    /// half of it.
    pub fn lag_range(&self, sample_rate: u32, win_length: usize) -> (usize, usize) {
        let sr = f64::from(sample_rate);
        let lo = ((sr / self.max_f0_hz).ceil() as usize).max(1);
        let hi = ((sr / self.min_f0_hz).floor() as usize).min(win_length / 2);
        (lo, hi)
    }
}

/// Per-frame voicing decisions on a STFT frame grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoicedMask(pub Vec<bool>);

impl VoicedMask {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn voiced_count(&self) -> usize {
        self.0.iter().filter(|&&v| v).count()
    }

    pub fn is_voiced(&self, t: usize) -> bool {
        self.0[t]
    }
}

/// Largest normalized autocorrelation of the mean-removed frame over
/// `lags`.
pub fn periodicity_peak(frame: &[f64], lags: (usize, usize)) -> f64 {
    let mean = frame.iter().sum::<f64>() / frame.len() as f64;
    let y: Vec<f64> = frame.iter().map(|v| v - mean).collect();
    let mut best = f64::NEG_INFINITY;
    for lag in lags.0..=lags.1 {
        if lag >= y.len() {
            break;
        }
        let (head, tail) = (&y[..y.len() - lag], &y[lag..]);
        let cross: f64 = head.iter().zip(tail).map(|(a, b)| a * b).sum();
        let e0: f64 = head.iter().map(|v| v * v).sum();
        let e1: f64 = tail.iter().map(|v| v * v).sum();
        let denom = (e0 * e1).sqrt();
        if denom > 0.0 {
            best = best.max(cross / denom);
        }
    }
    best
}

/// Marks frames that are both energetic (RMS above `energy_ratio` times the
/// loudest frame) and periodic (autocorrelation peak above `periodicity` for
/// pitch periods in `[min_f0_hz, max_f0_hz]`). Frames follow the STFT
/// framing of `cfg`, including reflection padding.
pub fn voiced_mask(
    clean: &Waveform,
    cfg: &StftConfig,
    params: &VoicingParams,
) -> Result<VoicedMask> {
    cfg.validate()?;
    params.validate()?;
    let frames = cfg.frame_count(clean.len());
    let lags = params.lag_range(clean.sample_rate(), cfg.win_length);
    let raw: Vec<Vec<f64>> = (0..frames)
        .map(|t| frame_samples(clean.samples(), cfg, t))
        .collect();
    let rms: Vec<f64> = raw
        .iter()
        .map(|f| (f.iter().map(|v| v * v).sum::<f64>() / f.len() as f64).sqrt())
        .collect();
    let gate = params.energy_ratio * rms.iter().cloned().fold(0.0, f64::max);
    Ok(VoicedMask(
        raw.iter()
            .zip(&rms)
            .map(|(f, &r)| r > gate && periodicity_peak(f, lags) > params.periodicity)
            .collect(),
    ))
}
