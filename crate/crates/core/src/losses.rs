//! Training criteria with analytic gradients with respect to the enhanced
//! waveform: waveform L1, multi-resolution STFT magnitude losses, the wrapped
//! phase loss and the phase continuity loss.
//!
//! Every spectral term is first differentiated with respect to the enhanced
//! spectrogram (as `∂L/∂Re + i·∂L/∂Im` per bin) and then carried back to the
//! samples with [`stft_adjoint`]. Phase terms see the spectrum only through
//! its unit-circle images `z / |z|`, so they are invariant to 2π shifts and
//! have no angle-extraction singularity; bins with `|z| ≤ MAGNITUDE_EPS` are
//! held at `(0, 0)` and contribute no gradient.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::audio_io::Waveform;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::phase::{phase_field, PhaseField, KERNEL_SIZE, MAGNITUDE_EPS};
use crate::spectral::{stft, stft_adjoint, ComplexSpectrogram, MultiResConfig, StftConfig};

/// Floor added to magnitudes inside the logarithm of the log-magnitude loss.
pub const LOG_MAG_FLOOR: f64 = 1e-7;

/// A scalar loss together with its gradient with respect to the enhanced
/// samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Differentiable {
    pub value: f64,
    pub gradient: Vec<f64>,
}

/// Relative weights of the combined criterion
/// `λ0·L1 + λ1·STFT + λ2·(λp·PL + λpc·PCL)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossWeights {
    pub lambda0: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda_p: f64,
    pub lambda_pc: f64,
}

impl LossWeights {
    /// Phase loss only: `λ0:λ1:λ2 = 0.02:1:1`, `λpc = 0`.
    pub const PL: LossWeights = LossWeights {
        lambda0: 0.02,
        lambda1: 1.0,
        lambda2: 1.0,
        lambda_p: 1.0,
        lambda_pc: 0.0,
    };

    /// Phase loss plus continuity loss: `λ0:λ1:λ2 = 0.01:1:0.1`,
    /// `λp:λpc = 1:0.5`.
    pub const PL_PCL: LossWeights = LossWeights {
        lambda0: 0.01,
        lambda1: 1.0,
        lambda2: 0.1,
        lambda_p: 1.0,
        lambda_pc: 0.5,
    };

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.lambda0,
            self.lambda1,
            self.lambda2,
            self.lambda_p,
            self.lambda_pc,
        ];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidConfig(
                "loss weights must be finite and non-negative".into(),
            ));
        }
        if all.iter().all(|&w| w == 0.0) {
            return Err(Error::InvalidConfig("all loss weights are zero".into()));
        }
        Ok(())
    }
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights::PL_PCL
    }
}

fn check_pair(target: &Waveform, enhanced: &Waveform) -> Result<()> {
    if target.len() != enhanced.len() {
        return Err(Error::LengthMismatch(target.len(), enhanced.len()));
    }
    Ok(())
}

/// Mean absolute sample difference. The subgradient at ties is 0.
pub fn l1_loss(target: &Waveform, enhanced: &Waveform) -> Result<Differentiable> {
    check_pair(target, enhanced)?;
    let n = target.len() as f64;
    let mut value = 0.0;
    let mut gradient = Vec::with_capacity(target.len());
    for (&t, &e) in target.samples().iter().zip(enhanced.samples()) {
        let d = e - t;
        value += d.abs();
        gradient.push(if d > 0.0 {
            1.0 / n
        } else if d < 0.0 {
            -1.0 / n
        } else {
            0.0
        });
    }
    Ok(Differentiable {
        value: value / n,
        gradient,
    })
}

// ---------------------------------------------------------------------------
// Spectral-domain terms. Each returns the value and ∂L/∂Ŝ on the grid.

type SpectralGrad = Grid<Complex64>;

/// Pulls `∂L/∂|Ŝ|` back to `∂L/∂Ŝ`.
fn through_magnitude(enhanced: &ComplexSpectrogram, d_mag: &Grid) -> SpectralGrad {
    let z = enhanced.values();
    Grid::from_fn(z.frames(), z.bins(), |t, k| {
        let v = z[(t, k)];
        let r = v.norm();
        if r > 0.0 {
            v * (d_mag[(t, k)] / r)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Pulls `∂L/∂cos θ̂` and `∂L/∂sin θ̂` back to `∂L/∂Ŝ`. For `u = z/|z|`
/// the result is `i·q·z` with `q = (g_sin·Re z − g_cos·Im z) / |z|³`.
fn through_phase_images(enhanced: &ComplexSpectrogram, d_cos: &Grid, d_sin: &Grid) -> SpectralGrad {
    let z = enhanced.values();
    Grid::from_fn(z.frames(), z.bins(), |t, k| {
        let v = z[(t, k)];
        let r = v.norm();
        if r > MAGNITUDE_EPS {
            let q = (d_sin[(t, k)] * v.re - d_cos[(t, k)] * v.im) / (r * r * r);
            Complex64::new(-q * v.im, q * v.re)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

fn spectral_convergence_term(
    target: &ComplexSpectrogram,
    enhanced: &ComplexSpectrogram,
    grad: bool,
) -> Result<(f64, Option<SpectralGrad>)> {
    let m = target.magnitudes();
    let m_hat = enhanced.magnitudes();
    let den: f64 = m.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt();
    if den == 0.0 {
        return Err(Error::invalid(format!(
            "spectral convergence undefined: target magnitude is zero at {}",
            target.config()
        )));
    }
    let num: f64 = m
        .as_slice()
        .iter()
        .zip(m_hat.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let g = grad.then(|| {
        let d_mag = Grid::from_fn(m.frames(), m.bins(), |t, k| {
            if num > 0.0 {
                (m_hat[(t, k)] - m[(t, k)]) / (num * den)
            } else {
                0.0
            }
        });
        through_magnitude(enhanced, &d_mag)
    });
    Ok((num / den, g))
}

fn log_magnitude_term(
    target: &ComplexSpectrogram,
    enhanced: &ComplexSpectrogram,
    grad: bool,
) -> (f64, Option<SpectralGrad>) {
    let m = target.magnitudes();
    let m_hat = enhanced.magnitudes();
    let n = m.as_slice().len() as f64;
    let diff = |t, k| (m[(t, k)] + LOG_MAG_FLOOR).ln() - (m_hat[(t, k)] + LOG_MAG_FLOOR).ln();
    let d = Grid::from_fn(m.frames(), m.bins(), diff);
    let value = d.as_slice().iter().map(|v| v.abs()).sum::<f64>() / n;
    let g = grad.then(|| {
        let d_mag = Grid::from_fn(m.frames(), m.bins(), |t, k| {
            let e = m_hat[(t, k)] + LOG_MAG_FLOOR;
            match d[(t, k)] {
                v if v > 0.0 => -1.0 / (n * e),
                v if v < 0.0 => 1.0 / (n * e),
                _ => 0.0,
            }
        });
        through_magnitude(enhanced, &d_mag)
    });
    (value, g)
}

/// Phase-loss value, number of active bins and (optionally) the spectral
/// gradient.
fn phase_term(
    target: &PhaseField,
    enhanced_field: &PhaseField,
    enhanced: &ComplexSpectrogram,
    grad: bool,
) -> (f64, usize, Option<SpectralGrad>) {
    let (frames, bins) = target.shape();
    let mask = |t, k| target.is_active(t, k) && enhanced_field.is_active(t, k);
    let mut active = 0usize;
    let mut sum = 0.0;
    for t in 0..frames {
        for k in 0..bins {
            if mask(t, k) {
                let dc = target.cos()[(t, k)] - enhanced_field.cos()[(t, k)];
                let ds = target.sin()[(t, k)] - enhanced_field.sin()[(t, k)];
                sum += dc * dc + ds * ds;
                active += 1;
            }
        }
    }
    if active == 0 {
        return (0.0, 0, grad.then(|| Grid::zeros(frames, bins)));
    }
    let g = grad.then(|| {
        let scale = -2.0 / active as f64;
        let d_cos = Grid::from_fn(frames, bins, |t, k| {
            if mask(t, k) {
                scale * (target.cos()[(t, k)] - enhanced_field.cos()[(t, k)])
            } else {
                0.0
            }
        });
        let d_sin = Grid::from_fn(frames, bins, |t, k| {
            if mask(t, k) {
                scale * (target.sin()[(t, k)] - enhanced_field.sin()[(t, k)])
            } else {
                0.0
            }
        });
        through_phase_images(enhanced, &d_cos, &d_sin)
    });
    (sum / active as f64, active, g)
}

/// Noisy-referenced variant: compares `(cos, sin)(θ − θ_noisy)` with
/// `(cos, sin)(θ − θ̂)`, using the angle-difference identities on the images.
fn noisy_referenced_phase_term(
    target: &PhaseField,
    noisy: &PhaseField,
    enhanced_field: &PhaseField,
    enhanced: &ComplexSpectrogram,
    grad: bool,
) -> (f64, usize, Option<SpectralGrad>) {
    let (frames, bins) = target.shape();
    let mut active = 0usize;
    let mut sum = 0.0;
    let mut residuals = Vec::new();
    for t in 0..frames {
        for k in 0..bins {
            if !(target.is_active(t, k) && noisy.is_active(t, k) && enhanced_field.is_active(t, k))
            {
                continue;
            }
            let (ct, st) = (target.cos()[(t, k)], target.sin()[(t, k)]);
            let (cn, sn) = (noisy.cos()[(t, k)], noisy.sin()[(t, k)]);
            let (ce, se) = (enhanced_field.cos()[(t, k)], enhanced_field.sin()[(t, k)]);
            let ref_cos = ct * cn + st * sn;
            let ref_sin = st * cn - ct * sn;
            let est_cos = ct * ce + st * se;
            let est_sin = st * ce - ct * se;
            let r1 = ref_cos - est_cos;
            let r2 = ref_sin - est_sin;
            sum += r1 * r1 + r2 * r2;
            active += 1;
            if grad {
                residuals.push((t, k, ct, st, r1, r2));
            }
        }
    }
    if active == 0 {
        return (0.0, 0, grad.then(|| Grid::zeros(frames, bins)));
    }
    let g = grad.then(|| {
        let scale = -2.0 / active as f64;
        let mut d_cos = Grid::zeros(frames, bins);
        let mut d_sin = Grid::zeros(frames, bins);
        for (t, k, ct, st, r1, r2) in residuals {
            let (g1, g2) = (scale * r1, scale * r2);
            d_cos[(t, k)] = g1 * ct + g2 * st;
            d_sin[(t, k)] = g1 * st - g2 * ct;
        }
        through_phase_images(enhanced, &d_cos, &d_sin)
    });
    (sum / active as f64, active, g)
}

fn continuity_term(
    target: &PhaseField,
    enhanced_field: &PhaseField,
    enhanced: &ComplexSpectrogram,
    grad: bool,
) -> Result<(f64, Option<SpectralGrad>)> {
    let (frames, bins) = target.shape();
    if frames < KERNEL_SIZE || bins < KERNEL_SIZE {
        return Err(Error::FieldTooSmall { frames, bins });
    }
    let entries = ((frames - 2) * (bins - 2) * KERNEL_SIZE * KERNEL_SIZE) as f64;
    let scale = 2.0 / entries;

    let mut value = 0.0;
    let mut d_cos = Grid::zeros(frames, bins);
    let mut d_sin = Grid::zeros(frames, bins);
    let images = [
        (target.cos(), enhanced_field.cos(), &mut d_cos),
        (target.sin(), enhanced_field.sin(), &mut d_sin),
    ];
    for (clean, est, g) in images {
        let mut sum = 0.0;
        for n in 1..frames - 1 {
            for k in 1..bins - 1 {
                let (c0, e0) = (clean[(n, k)], est[(n, k)]);
                let mut centre = 0.0;
                for kk in [k + 1, k, k - 1] {
                    for nn in [n - 1, n, n + 1] {
                        let diff = (clean[(nn, kk)] - c0) - (est[(nn, kk)] - e0);
                        sum += diff * diff;
                        if grad {
                            // ∂/∂est[nb] = -2·diff, ∂/∂est[centre] = +2·diff.
                            g[(nn, kk)] -= scale * diff;
                            centre += scale * diff;
                        }
                    }
                }
                if grad {
                    g[(n, k)] += centre;
                }
            }
        }
        value += sum / entries;
    }
    let g = grad.then(|| through_phase_images(enhanced, &d_cos, &d_sin));
    Ok((value, g))
}

fn spectra(
    target: &Waveform,
    enhanced: &Waveform,
    cfg: &StftConfig,
) -> Result<(ComplexSpectrogram, ComplexSpectrogram)> {
    check_pair(target, enhanced)?;
    Ok((stft(target, cfg)?, stft(enhanced, cfg)?))
}

fn to_samples(grad: &SpectralGrad, cfg: &StftConfig, len: usize) -> Result<Vec<f64>> {
    stft_adjoint(grad, cfg, len)
}

/// `‖M − M̂‖_F / ‖M‖_F` on magnitude spectrograms.
pub fn spectral_convergence_loss(
    target: &Waveform,
    enhanced: &Waveform,
    cfg: &StftConfig,
) -> Result<Differentiable> {
    let (s, s_hat) = spectra(target, enhanced, cfg)?;
    let (value, g) = spectral_convergence_term(&s, &s_hat, true)?;
    Ok(Differentiable {
        value,
        gradient: to_samples(&g.expect("requested"), cfg, target.len())?,
    })
}

/// Mean of `|log(M + δ) − log(M̂ + δ)|` with `δ = LOG_MAG_FLOOR`.
pub fn log_magnitude_loss(
    target: &Waveform,
    enhanced: &Waveform,
    cfg: &StftConfig,
) -> Result<Differentiable> {
    let (s, s_hat) = spectra(target, enhanced, cfg)?;
    let (value, g) = log_magnitude_term(&s, &s_hat, true);
    Ok(Differentiable {
        value,
        gradient: to_samples(&g.expect("requested"), cfg, target.len())?,
    })
}

/// Per-resolution magnitude losses. `value` and `gradient` refer to
/// `mean(sc) + mean(log_mag)` over resolutions.
#[derive(Debug, Clone, PartialEq)]
pub struct MrStftLoss {
    pub sc: Vec<f64>,
    pub log_mag: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
}

pub fn mrstft_loss(
    target: &Waveform,
    enhanced: &Waveform,
    cfg: &MultiResConfig,
) -> Result<MrStftLoss> {
    check_pair(target, enhanced)?;
    let r = cfg.len() as f64;
    let mut out = MrStftLoss {
        sc: Vec::with_capacity(cfg.len()),
        log_mag: Vec::with_capacity(cfg.len()),
        value: 0.0,
        gradient: vec![0.0; target.len()],
    };
    for res in cfg.resolutions() {
        let (s, s_hat) = spectra(target, enhanced, res)?;
        let (sc, g_sc) = spectral_convergence_term(&s, &s_hat, true)?;
        let (lm, g_lm) = log_magnitude_term(&s, &s_hat, true);
        let combined = combine(&[
            (1.0 / r, &g_sc.expect("requested")),
            (1.0 / r, &g_lm.expect("requested")),
        ]);
        accumulate(
            &mut out.gradient,
            &to_samples(&combined, res, target.len())?,
        );
        out.sc.push(sc);
        out.log_mag.push(lm);
    }
    out.value = out.sc.iter().sum::<f64>() / r + out.log_mag.iter().sum::<f64>() / r;
    Ok(out)
}

/// Phase loss on one resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseLoss {
    pub value: f64,
    pub gradient: Vec<f64>,
    /// Bins where every compared spectrum exceeds `MAGNITUDE_EPS`.
    pub active_bins: usize,
}

impl PhaseLoss {
    /// True when no bin was active and the value is a placeholder 0.
    pub fn is_degenerate(&self) -> bool {
        self.active_bins == 0
    }
}

/// Mean over active bins of `(cos θ − cos θ̂)² + (sin θ − sin θ̂)²`.
pub fn phase_loss(target: &Waveform, enhanced: &Waveform, cfg: &StftConfig) -> Result<PhaseLoss> {
    let (s, s_hat) = spectra(target, enhanced, cfg)?;
    let (value, active_bins, g) = phase_term(&phase_field(&s), &phase_field(&s_hat), &s_hat, true);
    Ok(PhaseLoss {
        value,
        gradient: to_samples(&g.expect("requested"), cfg, target.len())?,
        active_bins,
    })
}

/// Phase loss on phase differences relative to the noisy input: compares
/// the images of `θ − θ_noisy` and `θ − θ̂`.
pub fn noisy_referenced_phase_loss(
    target: &Waveform,
    noisy: &Waveform,
    enhanced: &Waveform,
    cfg: &StftConfig,
) -> Result<PhaseLoss> {
    check_pair(target, noisy)?;
    let (s, s_hat) = spectra(target, enhanced, cfg)?;
    let s_noisy = stft(noisy, cfg)?;
    let (value, active_bins, g) = noisy_referenced_phase_term(
        &phase_field(&s),
        &phase_field(&s_noisy),
        &phase_field(&s_hat),
        &s_hat,
        true,
    );
    Ok(PhaseLoss {
        value,
        gradient: to_samples(&g.expect("requested"), cfg, target.len())?,
        active_bins,
    })
}

/// Mean squared difference between the target and enhanced continuity
/// kernels, summed over the cosine and sine kernels. Each 3×3 block
/// contributes nine entries (the centre entry is identically zero).
pub fn phase_continuity_loss(
    target: &Waveform,
    enhanced: &Waveform,
    cfg: &StftConfig,
) -> Result<Differentiable> {
    let (s, s_hat) = spectra(target, enhanced, cfg)?;
    let (value, g) = continuity_term(&phase_field(&s), &phase_field(&s_hat), &s_hat, true)?;
    Ok(Differentiable {
        value,
        gradient: to_samples(&g.expect("requested"), cfg, target.len())?,
    })
}

fn check_spectra(target: &ComplexSpectrogram, enhanced: &ComplexSpectrogram) -> Result<()> {
    if target.values().shape() != enhanced.values().shape() {
        return Err(Error::invalid(format!(
            "spectrogram shapes differ: {:?} vs {:?}",
            target.values().shape(),
            enhanced.values().shape()
        )));
    }
    Ok(())
}

/// [`phase_loss`] value and active-bin count on precomputed spectrograms.
pub fn phase_loss_from_spectra(
    target: &ComplexSpectrogram,
    enhanced: &ComplexSpectrogram,
) -> Result<(f64, usize)> {
    check_spectra(target, enhanced)?;
    let (value, active, _) = phase_term(
        &phase_field(target),
        &phase_field(enhanced),
        enhanced,
        false,
    );
    Ok((value, active))
}

/// [`phase_continuity_loss`] value on precomputed spectrograms.
pub fn phase_continuity_loss_from_spectra(
    target: &ComplexSpectrogram,
    enhanced: &ComplexSpectrogram,
) -> Result<f64> {
    check_spectra(target, enhanced)?;
    continuity_term(
        &phase_field(target),
        &phase_field(enhanced),
        enhanced,
        false,
    )
    .map(|(v, _)| v)
}

fn combine(parts: &[(f64, &SpectralGrad)]) -> SpectralGrad {
    let (frames, bins) = parts[0].1.shape();
    let mut out = Grid::zeros(frames, bins);
    for (w, g) in parts {
        if *w == 0.0 {
            continue;
        }
        for (o, v) in out.as_mut_slice().iter_mut().zip(g.as_slice()) {
            *o += v * *w;
        }
    }
    out
}

fn accumulate(acc: &mut [f64], add: &[f64]) {
    for (a, b) in acc.iter_mut().zip(add) {
        *a += b;
    }
}

/// Loss terms of one resolution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolutionTerms {
    pub config: StftConfig,
    pub sc: f64,
    pub log_mag: f64,
    pub pl: f64,
    /// Number of bins entering the phase loss; 0 means `pl` is a placeholder.
    pub pl_active_bins: usize,
    /// `None` only when the grid is too small for a kernel and the continuity
    /// term carries zero weight.
    pub pcl: Option<f64>,
}

/// Itemized combined criterion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossReport {
    pub weights: LossWeights,
    pub l1: f64,
    pub resolutions: Vec<ResolutionTerms>,
    /// `λ1 · mean_r(sc + log_mag)`.
    pub stft_term: f64,
    /// `λ2 · mean_r(λp·pl + λpc·pcl)`.
    pub phase_term: f64,
    pub total: f64,
}

impl LossReport {
    /// One key per term (`sc_r0`, `pcl_r2`, ...) plus the weighted
    /// contributions and the total, in a fixed order.
    pub fn flat_record(&self) -> Vec<(String, Option<f64>)> {
        let mut out = vec![("l1".to_string(), Some(self.l1))];
        for (i, r) in self.resolutions.iter().enumerate() {
            out.push((format!("sc_r{i}"), Some(r.sc)));
            out.push((format!("log_mag_r{i}"), Some(r.log_mag)));
            out.push((format!("pl_r{i}"), Some(r.pl)));
            out.push((format!("pcl_r{i}"), r.pcl));
        }
        out.push(("stft_term".into(), Some(self.stft_term)));
        out.push(("phase_term".into(), Some(self.phase_term)));
        out.push(("total".into(), Some(self.total)));
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TotalLoss {
    pub report: LossReport,
    pub gradient: Vec<f64>,
}

/// The full weighted criterion and its gradient.
///
/// Phase terms use the same resolutions as the magnitude terms, and every
/// spectral term is averaged over resolutions. When `noisy` is given the
/// phase loss uses the noisy-referenced form of
/// [`noisy_referenced_phase_loss`]; otherwise it compares target and
/// enhanced phases directly.
pub fn total_loss(
    target: &Waveform,
    enhanced: &Waveform,
    noisy: Option<&Waveform>,
    weights: &LossWeights,
    cfg: &MultiResConfig,
) -> Result<TotalLoss> {
    let (report, gradient) = evaluate(target, enhanced, noisy, weights, cfg, true)?;
    Ok(TotalLoss {
        report,
        gradient: gradient.expect("requested"),
    })
}

/// The itemized criterion of [`total_loss`] without the gradient.
pub fn loss_report(
    target: &Waveform,
    enhanced: &Waveform,
    noisy: Option<&Waveform>,
    weights: &LossWeights,
    cfg: &MultiResConfig,
) -> Result<LossReport> {
    evaluate(target, enhanced, noisy, weights, cfg, false).map(|(report, _)| report)
}

fn evaluate(
    target: &Waveform,
    enhanced: &Waveform,
    noisy: Option<&Waveform>,
    weights: &LossWeights,
    cfg: &MultiResConfig,
    grad: bool,
) -> Result<(LossReport, Option<Vec<f64>>)> {
    weights.validate()?;
    check_pair(target, enhanced)?;
    if let Some(n) = noisy {
        check_pair(target, n)?;
    }
    let len = target.len();
    let r = cfg.len() as f64;

    let l1 = l1_loss(target, enhanced)?;
    let mut gradient: Option<Vec<f64>> =
        grad.then(|| l1.gradient.iter().map(|g| g * weights.lambda0).collect());

    let w_mag = weights.lambda1 / r;
    let w_pl = weights.lambda2 * weights.lambda_p / r;
    let w_pcl = weights.lambda2 * weights.lambda_pc / r;

    let mut resolutions = Vec::with_capacity(cfg.len());
    for res in cfg.resolutions() {
        let (s, s_hat) = spectra(target, enhanced, res)?;
        let (sc, g_sc) = spectral_convergence_term(&s, &s_hat, grad)?;
        let (log_mag, g_lm) = log_magnitude_term(&s, &s_hat, grad);

        let field = phase_field(&s);
        let field_hat = phase_field(&s_hat);
        let (pl, pl_active_bins, g_pl) = match noisy {
            None => phase_term(&field, &field_hat, &s_hat, grad),
            Some(n) => {
                let field_noisy = phase_field(&stft(n, res)?);
                noisy_referenced_phase_term(&field, &field_noisy, &field_hat, &s_hat, grad)
            }
        };
        let (pcl, g_pcl) = match continuity_term(&field, &field_hat, &s_hat, grad) {
            Ok((v, g)) => (Some(v), g),
            Err(Error::FieldTooSmall { .. }) if w_pcl == 0.0 => {
                (None, grad.then(|| Grid::zeros(s.frames(), s.bins())))
            }
            Err(e) => return Err(e),
        };

        if let (Some(acc), Some(g_sc), Some(g_lm), Some(g_pl), Some(g_pcl)) =
            (gradient.as_mut(), g_sc, g_lm, g_pl, g_pcl)
        {
            let combined = combine(&[
                (w_mag, &g_sc),
                (w_mag, &g_lm),
                (w_pl, &g_pl),
                (w_pcl, &g_pcl),
            ]);
            accumulate(acc, &to_samples(&combined, res, len)?);
        }
        resolutions.push(ResolutionTerms {
            config: *res,
            sc,
            log_mag,
            pl,
            pl_active_bins,
            pcl,
        });
    }

    let mag_sum: f64 = resolutions.iter().map(|t| t.sc + t.log_mag).sum();
    let phase_sum: f64 = resolutions
        .iter()
        .map(|t| weights.lambda_p * t.pl + weights.lambda_pc * t.pcl.unwrap_or(0.0))
        .sum();
    let stft_term = weights.lambda1 * (mag_sum / r);
    let phase_term = weights.lambda2 * (phase_sum / r);
    let total = weights.lambda0 * l1.value + stft_term + phase_term;

    let report = LossReport {
        weights: *weights,
        l1: l1.value,
        resolutions,
        stft_term,
        phase_term,
        total,
    };
    Ok((report, gradient))
}
