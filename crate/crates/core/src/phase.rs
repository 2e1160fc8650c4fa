//! Wrapped-phase images, the 3×3 phase-continuity kernel and phase
//! derivatives (instantaneous frequency and group delay).

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::spectral::{ComplexSpectrogram, StftConfig};

/// Magnitude at or below which a bin's phase is treated as undefined.
pub const MAGNITUDE_EPS: f64 = 1e-8;

/// Side length of the continuity kernel.
pub const KERNEL_SIZE: usize = 3;

/// Principal value of an angle, in (-π, π].
pub fn principal_value(x: f64) -> f64 {
    let wrapped = x - 2.0 * PI * ((x - PI) / (2.0 * PI)).ceil();
    // Rounding can land exactly on -π; fold it to the open end.
    if wrapped <= -PI {
        wrapped + 2.0 * PI
    } else {
        wrapped
    }
}

/// `(cos θ, sin θ)` images of every bin, with `(0, 0)` at degenerate bins.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseField {
    cos: Grid,
    sin: Grid,
    magnitude: Grid,
    config: StftConfig,
}

impl PhaseField {
    /// Assembles a field from precomputed images. Only shapes are checked.
    pub fn from_images(cos: Grid, sin: Grid, magnitude: Grid, config: StftConfig) -> Result<Self> {
        if cos.shape() != sin.shape() || cos.shape() != magnitude.shape() {
            return Err(Error::invalid("phase image shapes disagree"));
        }
        Ok(PhaseField {
            cos,
            sin,
            magnitude,
            config,
        })
    }

    pub fn cos(&self) -> &Grid {
        &self.cos
    }

    pub fn sin(&self) -> &Grid {
        &self.sin
    }

    pub fn magnitude(&self) -> &Grid {
        &self.magnitude
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    pub fn shape(&self) -> (usize, usize) {
        self.cos.shape()
    }

    pub fn is_active(&self, t: usize, k: usize) -> bool {
        self.magnitude[(t, k)] > MAGNITUDE_EPS
    }
}

/// Normalizes each complex bin to the unit circle without extracting an
/// angle.
pub fn phase_field(s: &ComplexSpectrogram) -> PhaseField {
    let values = s.values();
    let magnitude = values.map(|z| z.norm());
    let unit = |f: fn(&num_complex::Complex64) -> f64| {
        Grid::from_fn(values.frames(), values.bins(), |t, k| {
            let r = magnitude[(t, k)];
            if r > MAGNITUDE_EPS {
                f(&values[(t, k)]) / r
            } else {
                0.0
            }
        })
    };
    PhaseField {
        cos: unit(|z| z.re),
        sin: unit(|z| z.im),
        magnitude,
        config: *s.config(),
    }
}

/// Continuity kernels at every interior bin.
///
/// Within each 3×3 block, row `r` holds frequency offset `1 - r` (higher
/// frequency on top) and column `c` holds time offset `c - 1`, so entry
/// `(r, c)` of the block centred at `(n, k)` is
/// `f(θ[n + c - 1, k + 1 - r]) - f(θ[n, k])`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelStack {
    centers_t: usize,
    centers_k: usize,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl KernelStack {
    /// `(T - 2, K - 2)`: the number of interior centres along each axis.
    pub fn centers(&self) -> (usize, usize) {
        (self.centers_t, self.centers_k)
    }

    /// Flat cosine-kernel buffer in `(t, k, row, col)` order.
    pub fn cos_values(&self) -> &[f64] {
        &self.cos
    }

    pub fn sin_values(&self) -> &[f64] {
        &self.sin
    }

    fn offset(&self, t: usize, k: usize) -> usize {
        assert!(
            t < self.centers_t && k < self.centers_k,
            "kernel index out of range"
        );
        (t * self.centers_k + k) * KERNEL_SIZE * KERNEL_SIZE
    }

    fn block(values: &[f64], at: usize) -> [[f64; 3]; 3] {
        let b = &values[at..at + 9];
        [[b[0], b[1], b[2]], [b[3], b[4], b[5]], [b[6], b[7], b[8]]]
    }

    /// Cosine block centred at spectrogram bin `(t + 1, k + 1)`.
    pub fn cos_block(&self, t: usize, k: usize) -> [[f64; 3]; 3] {
        Self::block(&self.cos, self.offset(t, k))
    }

    pub fn sin_block(&self, t: usize, k: usize) -> [[f64; 3]; 3] {
        Self::block(&self.sin, self.offset(t, k))
    }
}

fn kernel_values(image: &Grid) -> Vec<f64> {
    let (frames, bins) = image.shape();
    let mut out = Vec::with_capacity((frames - 2) * (bins - 2) * 9);
    for n in 1..frames - 1 {
        for k in 1..bins - 1 {
            let center = image[(n, k)];
            for r in 0..KERNEL_SIZE {
                let kk = k + 1 - r;
                for c in 0..KERNEL_SIZE {
                    out.push(image[(n + c - 1, kk)] - center);
                }
            }
        }
    }
    out
}

pub fn continuity_kernel(p: &PhaseField) -> Result<KernelStack> {
    let (frames, bins) = p.shape();
    if frames < KERNEL_SIZE || bins < KERNEL_SIZE {
        return Err(Error::FieldTooSmall { frames, bins });
    }
    Ok(KernelStack {
        centers_t: frames - 2,
        centers_k: bins - 2,
        cos: kernel_values(p.cos()),
        sin: kernel_values(p.sin()),
    })
}

/// Four-quadrant angle of every bin; degenerate bins get 0.
pub fn wrapped_angles(s: &ComplexSpectrogram) -> Grid {
    s.values().map(|z| {
        if z.norm() > MAGNITUDE_EPS {
            z.im.atan2(z.re)
        } else {
            0.0
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Time,
    Frequency,
}

/// One-dimensional unwrapping along `axis`, independently for every line.
///
/// Each line starts at its first element's wrapped angle and accumulates
/// principal-value increments. Degenerate bins repeat the previous unwrapped
/// value; the next active bin is unwrapped relative to it.
pub fn unwrap_phase(s: &ComplexSpectrogram, axis: Axis) -> Grid {
    let angles = wrapped_angles(s);
    let mags = s.magnitudes();
    match axis {
        Axis::Frequency => unwrap_lines(&angles, &mags),
        Axis::Time => unwrap_lines(&angles.transposed(), &mags.transposed()).transposed(),
    }
}

// Unwraps along the second (bin) axis.
fn unwrap_lines(angles: &Grid, mags: &Grid) -> Grid {
    let mut out = Grid::zeros(angles.frames(), angles.bins());
    for t in 0..angles.frames() {
        let mut prev = angles[(t, 0)];
        out[(t, 0)] = prev;
        for k in 1..angles.bins() {
            if mags[(t, k)] > MAGNITUDE_EPS {
                prev += principal_value(angles[(t, k)] - prev);
            }
            out[(t, k)] = prev;
        }
    }
    out
}

/// Frame-to-frame (`if_vals`) and bin-to-bin (`gd_vals`) wrapped phase
/// increments. The first frame of `if_vals` and first bin of `gd_vals` are 0.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeField {
    pub if_vals: Grid,
    pub gd_vals: Grid,
}

pub fn derivative_fields(s: &ComplexSpectrogram) -> DerivativeField {
    let theta = wrapped_angles(s);
    let (frames, bins) = theta.shape();
    let if_vals = Grid::from_fn(frames, bins, |t, k| {
        if t == 0 {
            0.0
        } else {
            principal_value(theta[(t, k)] - theta[(t - 1, k)])
        }
    });
    let gd_vals = Grid::from_fn(frames, bins, |t, k| {
        if k == 0 {
            0.0
        } else {
            principal_value(theta[(t, k)] - theta[(t, k - 1)])
        }
    });
    DerivativeField { if_vals, gd_vals }
}
