//! Evaluation metrics computed from first principles: segmental SNRs, SDR
//! and SDR improvement, and phase-error metrics on voiced frames.

mod phase;
mod snr;
mod voicing;

pub use phase::{phase_metrics, phase_metrics_from_spectra, PhaseMetrics};
pub use snr::{
    clamped_snr_db, fwsnrseg, sdr, sdri, snrseg, FilterbankSpec, SILENCE_FLOOR, SNR_MAX_DB,
    SNR_MIN_DB,
};
pub use voicing::{periodicity_peak, voiced_mask, VoicedMask, VoicingParams};

use serde::{Deserialize, Serialize};

use crate::audio_io::Waveform;
use crate::error::{Error, Result};
use crate::spectral::{StftConfig, WindowKind};

/// Serialized stand-in for an infinite SDR.
pub const SDR_CAP_DB: f64 = 99.0;

/// Analysis settings for [`compute_metrics`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricParams {
    pub snr_frame: usize,
    pub snr_hop: usize,
    pub fwsnr_stft: StftConfig,
    pub filterbank: FilterbankSpec,
    pub phase_stft: StftConfig,
    pub voicing: VoicingParams,
}

impl Default for MetricParams {
    fn default() -> Self {
        MetricParams {
            snr_frame: 320,
            snr_hop: 320,
            fwsnr_stft: StftConfig {
                fft_size: 512,
                hop: 120,
                win_length: 480,
                window: WindowKind::Hann,
            },
            filterbank: FilterbankSpec::default(),
            phase_stft: StftConfig {
                fft_size: 1024,
                hop: 160,
                win_length: 640,
                window: WindowKind::Hann,
            },
            voicing: VoicingParams::default(),
        }
    }
}

impl MetricParams {
    pub fn validate(&self) -> Result<()> {
        if self.snr_frame == 0 || self.snr_hop == 0 {
            return Err(Error::InvalidConfig(
                "snr frame and hop must be positive".into(),
            ));
        }
        self.fwsnr_stft.validate()?;
        self.phase_stft.validate()?;
        self.voicing.validate()
    }
}

/// Per-utterance metrics. `None` marks a metric that is undefined for the
/// input (for example no voiced frames) or, for `sdri`, not requested.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub snrseg: Option<f64>,
    pub fwsnrseg: Option<f64>,
    /// May be `+∞`; see [`MetricReport::flat_record`] for the serialized cap.
    pub sdr: f64,
    pub sdri: Option<f64>,
    pub unrmse: Option<f64>,
    pub gd_rmse: Option<f64>,
    pub if_rmse: Option<f64>,
    pub voiced_frame_count: usize,
}

fn defined(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::UndefinedMetric(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn cap_sdr(v: f64) -> f64 {
    v.clamp(-SDR_CAP_DB, SDR_CAP_DB)
}

impl MetricReport {
    /// Column names and values with SDR values capped at ±`SDR_CAP_DB`.
    /// `sdri` is included only when `with_sdri` is set.
    pub fn flat_record(&self, with_sdri: bool) -> Vec<(&'static str, Option<f64>)> {
        let mut out = vec![
            ("snrseg", self.snrseg),
            ("fwsnrseg", self.fwsnrseg),
            ("sdr", Some(cap_sdr(self.sdr))),
        ];
        if with_sdri {
            out.push(("sdri", self.sdri.map(cap_sdr)));
        }
        out.extend([
            ("unrmse", self.unrmse),
            ("gd_rmse", self.gd_rmse),
            ("if_rmse", self.if_rmse),
            ("voiced_frames", Some(self.voiced_frame_count as f64)),
        ]);
        out
    }
}

/// Every metric for one utterance. `sdri` is computed only when `noisy` is
/// given.
pub fn compute_metrics(
    clean: &Waveform,
    enhanced: &Waveform,
    noisy: Option<&Waveform>,
    params: &MetricParams,
) -> Result<MetricReport> {
    params.validate()?;
    let mask = voiced_mask(clean, &params.phase_stft, &params.voicing)?;
    let phase = match phase_metrics(clean, enhanced, &params.phase_stft, &mask) {
        Ok(p) => Some(p),
        Err(Error::UndefinedMetric(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(MetricReport {
        snrseg: defined(snrseg(clean, enhanced, params.snr_frame, params.snr_hop))?,
        fwsnrseg: defined(fwsnrseg(
            clean,
            enhanced,
            &params.fwsnr_stft,
            &params.filterbank,
        ))?,
        sdr: sdr(clean, enhanced)?,
        sdri: noisy.map(|n| sdri(clean, enhanced, n)).transpose()?,
        unrmse: phase.map(|p| p.unrmse),
        gd_rmse: phase.map(|p| p.gd_rmse),
        if_rmse: phase.map(|p| p.if_rmse),
        voiced_frame_count: mask.voiced_count(),
    })
}
