use std::f64::consts::PI;

use crate::audio_io::Waveform;
use crate::error::{Error, Result};
use crate::metrics::voicing::VoicedMask;
use crate::phase::{derivative_fields, principal_value, unwrap_phase, Axis, MAGNITUDE_EPS};
use crate::spectral::{stft, ComplexSpectrogram, StftConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseMetrics {
    /// RMSE of frequency-unwrapped phases, radians.
    pub unrmse: f64,
    /// RMSE of wrapped group-delay differences divided by 2π.
    pub gd_rmse: f64,
    /// RMSE of wrapped instantaneous-frequency differences divided by 2π.
    pub if_rmse: f64,
}

#[derive(Default)]
struct Rms {
    sum: f64,
    count: usize,
}

impl Rms {
    fn push(&mut self, d: f64) {
        self.sum += d * d;
        self.count += 1;
    }

    fn finish(self, what: &str) -> Result<f64> {
        if self.count == 0 {
            return Err(Error::UndefinedMetric(format!(
                "{what}: no voiced active bins"
            )));
        }
        Ok((self.sum / self.count as f64).sqrt())
    }
}

/// Phase metrics from precomputed spectrograms.
///
/// A bin is active when both spectra exceed `MAGNITUDE_EPS` there. UnRMSE
/// uses voiced frames and active bins; the group-delay term additionally
/// needs bin `k - 1` active and `k ≥ 1`, the instantaneous-frequency term
/// needs frame `t - 1` active and `t ≥ 1`.
pub fn phase_metrics_from_spectra(
    clean: &ComplexSpectrogram,
    enhanced: &ComplexSpectrogram,
    mask: &VoicedMask,
) -> Result<PhaseMetrics> {
    if clean.values().shape() != enhanced.values().shape() {
        return Err(Error::invalid("spectrogram shapes differ"));
    }
    if mask.len() != clean.frames() {
        return Err(Error::invalid(format!(
            "voicing mask has {} frames, spectrogram has {}",
            mask.len(),
            clean.frames()
        )));
    }
    if mask.voiced_count() == 0 {
        return Err(Error::UndefinedMetric("no voiced frames".into()));
    }

    let (m, m_hat) = (clean.magnitudes(), enhanced.magnitudes());
    let active = |t: usize, k: usize| m[(t, k)] > MAGNITUDE_EPS && m_hat[(t, k)] > MAGNITUDE_EPS;
    let (u, u_hat) = (
        unwrap_phase(clean, Axis::Frequency),
        unwrap_phase(enhanced, Axis::Frequency),
    );
    let (d, d_hat) = (derivative_fields(clean), derivative_fields(enhanced));

    let (mut un, mut gd, mut inst) = (Rms::default(), Rms::default(), Rms::default());
    for t in (0..clean.frames()).filter(|&t| mask.is_voiced(t)) {
        for k in 0..clean.bins() {
            if !active(t, k) {
                continue;
            }
            un.push(u[(t, k)] - u_hat[(t, k)]);
            if k > 0 && active(t, k - 1) {
                gd.push(principal_value(d.gd_vals[(t, k)] - d_hat.gd_vals[(t, k)]));
            }
            if t > 0 && active(t - 1, k) {
                inst.push(principal_value(d.if_vals[(t, k)] - d_hat.if_vals[(t, k)]));
            }
        }
    }
    Ok(PhaseMetrics {
        unrmse: un.finish("unrmse")?,
        gd_rmse: gd.finish("gd_rmse")? / (2.0 * PI),
        if_rmse: inst.finish("if_rmse")? / (2.0 * PI),
    })
}

pub fn phase_metrics(
    clean: &Waveform,
    enhanced: &Waveform,
    cfg: &StftConfig,
    mask: &VoicedMask,
) -> Result<PhaseMetrics> {
    if clean.len() != enhanced.len() {
        return Err(Error::LengthMismatch(clean.len(), enhanced.len()));
    }
    phase_metrics_from_spectra(&stft(clean, cfg)?, &stft(enhanced, cfg)?, mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_must_align() {
        let w =
            Waveform::new((0..2000).map(|i| (i as f64 * 0.05).sin()).collect(), 16_000).unwrap();
        let cfg = StftConfig::hann(256, 64, 256).unwrap();
        let frames = cfg.frame_count(2000);
        assert!(phase_metrics(&w, &w, &cfg, &VoicedMask(vec![true; frames + 1])).is_err());
        assert!(matches!(
            phase_metrics(&w, &w, &cfg, &VoicedMask(vec![false; frames])),
            Err(Error::UndefinedMetric(_))
        ));
        let m = phase_metrics(&w, &w, &cfg, &VoicedMask(vec![true; frames])).unwrap();
        assert_eq!((m.unrmse, m.gd_rmse, m.if_rmse), (0.0, 0.0, 0.0));
    }
}
