//! Phase-aware training criteria and evaluation metrics for speech
//! enhancement.
//!
//! The crate provides
//!
//! - a reflection-padded STFT with its exact adjoint ([`spectral`]),
//! - wrapped-phase images, the 3×3 phase-continuity kernel and phase
//!   derivatives ([`phase`]),
//! - waveform L1, multi-resolution STFT, phase and phase-continuity losses
//!   with analytic gradients ([`losses`]),
//! - segmental SNR, frequency-weighted segmental SNR, SDR/SDRi and phase
//!   error metrics on voiced frames ([`metrics`]),
//! - WAV input/output and corpus pairing ([`audio_io`]).
//!
//! ```
//! use phaseloss::{total_loss, LossWeights, MultiResConfig, Waveform};
//!
//! let clean: Vec<f64> = (0..4000).map(|i| (i as f64 * 0.07).sin() * 0.5).collect();
//! let noisy: Vec<f64> = clean.iter().enumerate()
//!     .map(|(i, s)| s + 0.01 * ((i * 7919 % 13) as f64 - 6.0))
//!     .collect();
//! let target = Waveform::new(clean, 16_000)?;
//! let estimate = Waveform::new(noisy, 16_000)?;
//!
//! let out = total_loss(&target, &estimate, None, &LossWeights::PL_PCL, &MultiResConfig::default())?;
//! assert!(out.report.total > 0.0);
//! assert_eq!(out.gradient.len(), target.len());
//! # Ok::<(), phaseloss::Error>(())
//! ```

pub mod audio_io;
mod error;
pub mod grid;
pub mod losses;
pub mod metrics;
pub mod phase;
pub mod spectral;

pub use audio_io::{
    pair_directories, read_wav, write_wav, Pairing, SkippedPair, UtterancePaths, UtteranceTriple,
    Waveform,
};
pub use error::{Error, Result};
pub use grid::Grid;
pub use losses::{
    l1_loss, log_magnitude_loss, loss_report, mrstft_loss, noisy_referenced_phase_loss,
    phase_continuity_loss, phase_continuity_loss_from_spectra, phase_loss, phase_loss_from_spectra,
    spectral_convergence_loss, total_loss, Differentiable, LossReport, LossWeights, TotalLoss,
};
pub use metrics::{compute_metrics, MetricParams, MetricReport};
pub use phase::{
    continuity_kernel, derivative_fields, phase_field, unwrap_phase, Axis, DerivativeField,
    KernelStack, PhaseField,
};
pub use spectral::{
    istft, stft, stft_adjoint, ComplexSpectrogram, MultiResConfig, StftConfig, WindowKind,
};

/// Chapters of the guide in `book/`, compiled here so their code listings
/// run as doc tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/stft.md")]
    mod stft {}
    #[doc = include_str!("../../../book/src/phase.md")]
    mod phase {}
    #[doc = include_str!("../../../book/src/losses.md")]
    mod losses {}
    #[doc = include_str!("../../../book/src/gradients.md")]
    mod gradients {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
