//! Slow, direct reference computations for the test suites.
//!
//! Nothing here depends on the library under test: each routine restates a
//! definition as plainly as possible (explicit padding, O(N²) DFTs, nested
//! loops) so that agreement with the optimized code is meaningful.

use std::f64::consts::PI;

use num_complex::Complex64;

pub type Matrix = Vec<Vec<f64>>;

pub fn hann(len: usize) -> Vec<f64> {
    (0..len)
        .map(|m| (PI * m as f64 / len as f64).sin().powi(2))
        .collect()
}

/// Mirror-pads `x` by `pad` on each side, reflecting repeatedly if needed.
pub fn reflect_pad(x: &[f64], pad: usize) -> Vec<f64> {
    let n = x.len();
    let mut out = Vec::with_capacity(n + 2 * pad);
    for i in 0..n + 2 * pad {
        let mut p = i as i64 - pad as i64;
        if n == 1 {
            out.push(x[0]);
            continue;
        }
        loop {
            if p < 0 {
                p = -p;
            } else if p >= n as i64 {
                p = 2 * (n as i64 - 1) - p;
            } else {
                break;
            }
        }
        out.push(x[p as usize]);
    }
    out
}

/// Windowed one-sided DFT of every frame, by direct summation.
pub fn naive_stft(x: &[f64], fft_size: usize, hop: usize, window: &[f64]) -> Vec<Vec<Complex64>> {
    let win = window.len();
    let padded = reflect_pad(x, win / 2);
    let frames = 1 + (padded.len() - win) / hop;
    (0..frames)
        .map(|t| {
            (0..=fft_size / 2)
                .map(|k| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for m in 0..win {
                        let ang = -2.0 * PI * (k * m % fft_size) as f64 / fft_size as f64;
                        acc += Complex64::from_polar(window[m] * padded[t * hop + m], ang);
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

/// `[t][k] -> [t][k][row][col]`, row = frequency offset +1, 0, -1 and
/// column = time offset -1, 0, +1, written out as nine subtractions.
pub fn kernel_oracle(image: &Matrix) -> Vec<f64> {
    let mut out = Vec::new();
    for t in 1..image.len() - 1 {
        for k in 1..image[0].len() - 1 {
            let c = image[t][k];
            out.extend_from_slice(&[
                image[t - 1][k + 1] - c,
                image[t][k + 1] - c,
                image[t + 1][k + 1] - c,
                image[t - 1][k] - c,
                image[t][k] - c,
                image[t + 1][k] - c,
                image[t - 1][k - 1] - c,
                image[t][k - 1] - c,
                image[t + 1][k - 1] - c,
            ]);
        }
    }
    out
}

/// Unit-circle images with the `|z| ≤ eps → (0, 0)` rule.
pub fn images(spectrum: &[Vec<Complex64>], eps: f64) -> (Matrix, Matrix) {
    let f = |g: fn(f64) -> f64| -> Matrix {
        spectrum.iter()
            .map(|row| {
                row.iter()
                    .map(|z| {
                        if z.norm() > eps {
                            g(z.im.atan2(z.re))
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect()
    };
    (f(f64::cos), f(f64::sin))
}

/// Mean over kernel entries of squared kernel differences, cos plus sin.
pub fn pcl_oracle(target: &[Vec<Complex64>], enhanced: &[Vec<Complex64>], eps: f64) -> f64 {
    let (ct, st) = images(target, eps);
    let (ce, se) = images(enhanced, eps);
    let mse = |a: Vec<f64>, b: Vec<f64>| {
        a.iter()
            .zip(&b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            / a.len() as f64
    };
    mse(kernel_oracle(&ct), kernel_oracle(&ce)) + mse(kernel_oracle(&st), kernel_oracle(&se))
}

pub fn pl_oracle(target: &[Vec<Complex64>], enhanced: &[Vec<Complex64>], eps: f64) -> f64 {
    let mut sum = 0.0;
    let mut n = 0;
    for (rt, re) in target.iter().zip(enhanced) {
        for (a, b) in rt.iter().zip(re) {
            if a.norm() > eps && b.norm() > eps {
                let (ta, tb) = (a.arg(), b.arg());
                sum += (ta.cos() - tb.cos()).powi(2) + (ta.sin() - tb.sin()).powi(2);
                n += 1;
            }
        }
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Central differences of `f` at `x`, one coordinate at a time, with step
/// `h` at every coordinate.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub fn clamp_db(signal: f64, noise: f64) -> f64 {
    if noise == 0.0 {
        35.0
    } else {
        (10.0 * (signal / noise).log10()).clamp(-10.0, 35.0)
    }
}

pub fn snrseg_oracle(clean: &[f64], enhanced: &[f64], frame: usize, hop: usize) -> f64 {
    let mut starts = Vec::new();
    if clean.len() <= frame {
        starts.push((0, clean.len()));
    } else {
        let mut s = 0;
        while s + frame <= clean.len() {
            starts.push((s, s + frame));
            s += hop;
        }
    }
    let mut energies = Vec::new();
    for &(a, b) in &starts {
        let mut es = 0.0;
        let mut en = 0.0;
        for i in a..b {
            es += clean[i] * clean[i];
            en += (clean[i] - enhanced[i]) * (clean[i] - enhanced[i]);
        }
        energies.push((es, en));
    }
    let mean = energies.iter().map(|e| e.0).sum::<f64>() / energies.len() as f64;
    let mut total = 0.0;
    let mut count = 0;
    for (es, en) in energies {
        if es > 1e-8 * mean {
            total += clamp_db(es, en);
            count += 1;
        }
    }
    total / count as f64
}

pub fn sdr_oracle(clean: &[f64], enhanced: &[f64]) -> f64 {
    let mut s = 0.0;
    let mut n = 0.0;
    for i in 0..clean.len() {
        s += clean[i] * clean[i];
        n += (clean[i] - enhanced[i]).powi(2);
    }
    10.0 * (s / n).log10()
}

/// Mel-spaced triangular filterbank, `bands × (fft/2 + 1)`.
pub fn mel_filterbank(bands: usize, low: f64, high: f64, fft_size: usize, sr: f64) -> Matrix {
    let mel = |f: f64| 2595.0 * (1.0 + f / 700.0).log10();
    let inv = |m: f64| 700.0 * (10f64.powf(m / 2595.0) - 1.0);
    let high = high.min(sr / 2.0);
    let step = (mel(high) - mel(low)) / (bands + 1) as f64;
    let edge = |i: usize| inv(mel(low) + step * i as f64);
    let mut fb = vec![vec![0.0; fft_size / 2 + 1]; bands];
    for (b, row) in fb.iter_mut().enumerate() {
        let (l, c, r) = (edge(b), edge(b + 1), edge(b + 2));
        for (k, w) in row.iter_mut().enumerate() {
            let f = k as f64 * sr / fft_size as f64;
            *w = if f >= l && f <= c {
                (f - l) / (c - l)
            } else if f > c && f <= r {
                (r - f) / (r - c)
            } else {
                0.0
            };
        }
    }
    fb
}

#[allow(clippy::too_many_arguments)]
pub fn fwsnrseg_oracle(
    clean: &[f64],
    enhanced: &[f64],
    fft_size: usize,
    hop: usize,
    window: &[f64],
    sr: f64,
    bands: usize,
    exponent: f64,
) -> f64 {
    let fb = mel_filterbank(bands, 50.0, 8000.0, fft_size, sr);
    let x = naive_stft(clean, fft_size, hop, window);
    let y = naive_stft(enhanced, fft_size, hop, window);
    let energy: Vec<f64> = x
        .iter()
        .map(|row| row.iter().map(|z| z.norm_sqr()).sum())
        .collect();
    let mean = energy.iter().sum::<f64>() / energy.len() as f64;
    let mut total = 0.0;
    let mut count = 0;
    for t in 0..x.len() {
        if energy[t] <= 1e-8 * mean {
            continue;
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for h in &fb {
            let mut xb = 0.0;
            let mut yb = 0.0;
            for k in 0..h.len() {
                xb += h[k] * x[t][k].norm();
                yb += h[k] * y[t][k].norm();
            }
            let w = xb.powf(exponent);
            num += w * clamp_db(xb * xb, (xb - yb) * (xb - yb));
            den += w;
        }
        if den > 0.0 {
            total += num / den;
            count += 1;
        }
    }
    total / count as f64
}

pub fn wrap(x: f64) -> f64 {
    let mut v = x.rem_euclid(2.0 * PI);
    if v > PI {
        v -= 2.0 * PI;
    }
    v
}

fn angle(z: Complex64, eps: f64) -> f64 {
    if z.norm() > eps {
        z.im.atan2(z.re)
    } else {
        0.0
    }
}

/// `(unrmse, gd_rmse, if_rmse)` by straight loops over voiced frames.
pub fn phase_metrics_oracle(
    clean: &[Vec<Complex64>],
    enhanced: &[Vec<Complex64>],
    voiced: &[bool],
    eps: f64,
) -> (f64, f64, f64) {
    let frames = clean.len();
    let bins = clean[0].len();
    let active = |t: usize, k: usize| clean[t][k].norm() > eps && enhanced[t][k].norm() > eps;
    let unwrap_row = |row: &[Complex64]| -> Vec<f64> {
        let mut out = vec![angle(row[0], eps)];
        for k in 1..row.len() {
            let prev = out[k - 1];
            out.push(if row[k].norm() > eps {
                prev + wrap(angle(row[k], eps) - prev)
            } else {
                prev
            });
        }
        out
    };
    let (mut su, mut nu, mut sg, mut ng, mut si, mut ni) = (0.0, 0, 0.0, 0, 0.0, 0);
    for t in 0..frames {
        if !voiced[t] {
            continue;
        }
        let uc = unwrap_row(&clean[t]);
        let ue = unwrap_row(&enhanced[t]);
        for k in 0..bins {
            if !active(t, k) {
                continue;
            }
            su += (uc[k] - ue[k]).powi(2);
            nu += 1;
            if k > 0 && active(t, k - 1) {
                let gc = wrap(angle(clean[t][k], eps) - angle(clean[t][k - 1], eps));
                let ge = wrap(angle(enhanced[t][k], eps) - angle(enhanced[t][k - 1], eps));
                sg += wrap(gc - ge).powi(2);
                ng += 1;
            }
            if t > 0 && active(t - 1, k) {
                let ic = wrap(angle(clean[t][k], eps) - angle(clean[t - 1][k], eps));
                let ie = wrap(angle(enhanced[t][k], eps) - angle(enhanced[t - 1][k], eps));
                si += wrap(ic - ie).powi(2);
                ni += 1;
            }
        }
    }
    (
        (su / nu as f64).sqrt(),
        (sg / ng as f64).sqrt() / (2.0 * PI),
        (si / ni as f64).sqrt() / (2.0 * PI),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflect_pad_small() {
        assert_eq!(
            reflect_pad(&[0.0, 1.0, 2.0, 3.0], 4),
            [2.0, 3.0, 2.0, 1.0, 0.0, 1.0, 2.0, 3.0, 2.0, 1.0, 0.0, 1.0]
        );
    }

    #[test]
    fn wrap_matches_principal_range() {
        assert!((wrap(-6.0) - (2.0 * PI - 6.0)).abs() < 1e-15);
        assert_eq!(wrap(PI), PI);
    }
}
