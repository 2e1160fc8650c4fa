mod common;

use std::f64::consts::PI;

use common::*;
use num_complex::Complex64;
use phaseloss::spectral::{istft_samples, stft_samples};
use phaseloss::{stft_adjoint, ComplexSpectrogram, Grid, MultiResConfig, StftConfig, WindowKind};
use phaseloss_oracles::{central_difference, hann, naive_stft};
use proptest::prelude::*;
use rand::Rng;

fn oracle_window(cfg: &StftConfig) -> Vec<f64> {
    match cfg.window {
        WindowKind::Hann => hann(cfg.win_length),
        WindowKind::Rectangular => vec![1.0; cfg.win_length],
    }
}

#[test]
fn matches_naive_dft_on_random_signal() {
    let mut r = rng(11);
    let x = uniform(&mut r, 64);
    for cfg in [
        StftConfig::hann(32, 8, 24).unwrap(),
        StftConfig::hann(16, 4, 16).unwrap(),
        StftConfig::new(64, 16, 40, WindowKind::Rectangular).unwrap(),
    ] {
        let fast = stft_samples(&x, &cfg).unwrap();
        let slow = naive_stft(&x, cfg.fft_size, cfg.hop, &oracle_window(&cfg));
        assert_eq!(fast.frames(), slow.len());
        let slow: Vec<Complex64> = slow.into_iter().flatten().collect();
        assert!(
            max_rel_err(fast.values().as_slice(), &slow) < 1e-10,
            "{cfg}"
        );
    }
}

#[test]
fn bin_centred_cosine_with_rectangular_window() {
    // Two periods of the frame length; frame 1 sits entirely inside the signal.
    let x: Vec<f64> = (0..16)
        .map(|t| (2.0 * PI * t as f64 * 2.0 / 8.0).cos())
        .collect();
    let cfg = StftConfig::new(8, 8, 8, WindowKind::Rectangular).unwrap();
    let s = stft_samples(&x, &cfg).unwrap();
    let frame = s.values().frame(1);
    for (k, z) in frame.iter().enumerate() {
        if k == 2 {
            assert!((z.norm() - 4.0).abs() < 1e-12);
        } else {
            assert!(z.norm() < 1e-12, "bin {k}: {z}");
        }
    }
}

#[test]
fn round_trip_reference_config() {
    let mut r = rng(3);
    let x = uniform(&mut r, 1024);
    let cfg = StftConfig::hann(512, 128, 512).unwrap();
    let y = istft_samples(&stft_samples(&x, &cfg).unwrap()).unwrap();
    assert_eq!(y.len(), x.len());
    let err = x
        .iter()
        .zip(&y)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(err <= 1e-10, "{err}");
}

#[test]
fn round_trip_every_default_resolution() {
    let mut r = rng(4);
    let x = uniform(&mut r, 5000);
    for cfg in MultiResConfig::default().resolutions() {
        let y = istft_samples(&stft_samples(&x, cfg).unwrap()).unwrap();
        let err = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-10, "{cfg}: {err}");
    }
}

#[test]
fn single_frame_window_spectrum_reconstructs_the_segment() {
    // One frame whose spectrum is the DFT of the window: the analysed
    // segment is constant 1, so synthesis must return ones.
    for window in [WindowKind::Rectangular, WindowKind::Hann] {
        let cfg = StftConfig::new(8, 4, 8, window).unwrap();
        let len = 3;
        assert_eq!(cfg.frame_count(len), 1);
        let w = cfg.window_coefficients();
        let dft: Vec<Complex64> = (0..cfg.bins())
            .map(|k| {
                (0..8)
                    .map(|m| Complex64::from_polar(w[m], -2.0 * PI * (k * m) as f64 / 8.0))
                    .sum()
            })
            .collect();
        let grid = Grid::from_vec(1, cfg.bins(), dft).unwrap();
        let s = ComplexSpectrogram::from_parts(grid, cfg, len).unwrap();
        let y = istft_samples(&s).unwrap();
        for v in y {
            assert!((v - 1.0).abs() < 1e-12, "{window}: {v}");
        }
    }
}

fn inner(s: &[Complex64], g: &[Complex64]) -> f64 {
    s.iter()
        .zip(g)
        .map(|(a, b)| a.re * b.re + a.im * b.im)
        .sum()
}

fn random_grid(r: &mut impl Rng, frames: usize, bins: usize) -> Grid<Complex64> {
    Grid::from_fn(frames, bins, |_, _| {
        Complex64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))
    })
}

#[test]
fn adjoint_identity() {
    let mut r = rng(5);
    let configs = [
        StftConfig::hann(64, 16, 48).unwrap(),
        StftConfig::hann(128, 50, 100).unwrap(),
        StftConfig::new(32, 32, 32, WindowKind::Rectangular).unwrap(),
    ];
    for cfg in configs {
        for len in [1, 7, 40, 301] {
            let x = uniform(&mut r, len);
            let s = stft_samples(&x, &cfg).unwrap();
            let g = random_grid(&mut r, s.frames(), s.bins());
            let lhs = inner(s.values().as_slice(), g.as_slice());
            let adj = stft_adjoint(&g, &cfg, len).unwrap();
            let rhs: f64 = x.iter().zip(&adj).map(|(a, b)| a * b).sum();
            assert!(
                (lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0),
                "{cfg} len {len}: {lhs} vs {rhs}"
            );
        }
    }
}

#[test]
fn adjoint_of_single_bin_is_folded_atom() {
    let cfg = StftConfig::hann(16, 4, 12).unwrap();
    let len = 20;
    let (t0, k0) = (2, 3);
    let mut g = Grid::zeros(cfg.frame_count(len), cfg.bins());
    g[(t0, k0)] = Complex64::new(1.0, 0.0);
    let adj = stft_adjoint(&g, &cfg, len).unwrap();
    let x0 = vec![0.0; len];
    let fd = central_difference(
        |x| stft_samples(x, &cfg).unwrap().values()[(t0, k0)].re,
        &x0,
        1e-3,
    );
    for (a, b) in adj.iter().zip(&fd) {
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
}

#[test]
fn adjoint_gradient_matches_finite_differences() {
    let mut r = rng(6);
    let cfg = StftConfig::hann(64, 16, 64).unwrap();
    let x = uniform(&mut r, 256);
    let s = stft_samples(&x, &cfg).unwrap();
    let weights = random_grid(&mut r, s.frames(), s.bins());
    let loss = |x: &[f64]| {
        inner(
            stft_samples(x, &cfg).unwrap().values().as_slice(),
            weights.as_slice(),
        )
    };
    let analytic = stft_adjoint(&weights, &cfg, 256).unwrap();
    let fd = central_difference(loss, &x, 1e-4);
    for (a, b) in analytic.iter().zip(&fd) {
        assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0), "{a} vs {b}");
    }
}

#[test]
fn zero_gradient_grid() {
    let cfg = StftConfig::hann(64, 16, 64).unwrap();
    let g = Grid::zeros(cfg.frame_count(100), cfg.bins());
    assert_eq!(stft_adjoint(&g, &cfg, 100).unwrap(), vec![0.0; 100]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn linearity(
        x in prop::collection::vec(-1.0f64..1.0, 50..200),
        seed in any::<u64>(),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let mut r = rng(seed);
        let y = uniform(&mut r, x.len());
        let cfg = StftConfig::hann(64, 16, 40).unwrap();
        let combo: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let sc = stft_samples(&combo, &cfg).unwrap();
        let sx = stft_samples(&x, &cfg).unwrap();
        let sy = stft_samples(&y, &cfg).unwrap();
        for ((c, p), q) in sc.values().as_slice().iter().zip(sx.values().as_slice()).zip(sy.values().as_slice()) {
            prop_assert!((c - (p * a + q * b)).norm() < 1e-12);
        }
    }

    #[test]
    fn adjoint_identity_holds(
        x in prop::collection::vec(-1.0f64..1.0, 1..300),
        seed in any::<u64>(),
    ) {
        let mut r = rng(seed);
        let cfg = StftConfig::hann(32, 8, 24).unwrap();
        let s = stft_samples(&x, &cfg).unwrap();
        let g = random_grid(&mut r, s.frames(), s.bins());
        let lhs = inner(s.values().as_slice(), g.as_slice());
        let rhs: f64 = x.iter().zip(stft_adjoint(&g, &cfg, x.len()).unwrap()).map(|(a, b)| a * b).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
    }
}
