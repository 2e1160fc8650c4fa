#![allow(dead_code)]

use num_complex::Complex64;
use phaseloss::{ComplexSpectrogram, Waveform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn wave(samples: Vec<f64>) -> Waveform {
    Waveform::new(samples, 16_000).unwrap()
}

pub fn rows(s: &ComplexSpectrogram) -> Vec<Vec<Complex64>> {
    (0..s.frames())
        .map(|t| s.values().frame(t).to_vec())
        .collect()
}

pub fn max_rel_err(a: &[Complex64], b: &[Complex64]) -> f64 {
    let scale = b.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm() / scale)
        .fold(0.0, f64::max)
}

/// Worst relative disagreement between `analytic` and central differences
/// of `f`, over coordinates whose numeric derivative is not negligible.
pub fn gradient_error(f: impl Fn(&[f64]) -> f64, x: &[f64], analytic: &[f64], h: f64) -> f64 {
    let numeric = phaseloss_oracles::central_difference(f, x, h);
    let scale = numeric.iter().map(|v| v.abs()).fold(0.0, f64::max);
    assert!(scale > 0.0, "gradient vanishes everywhere");
    numeric
        .iter()
        .zip(analytic)
        .filter(|(n, _)| n.abs() > 1e-6 * scale)
        .map(|(n, a)| ((n - a) / n.abs().max(1e-3 * scale)).abs())
        .fold(0.0, f64::max)
}
