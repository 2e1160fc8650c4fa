#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use phaseloss::{write_wav, Waveform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SR: u32 = 16_000;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Vowel-like harmonic stack with a slow amplitude envelope.
pub fn vowel(n: usize, f0: f64) -> Vec<f64> {
    let sr = f64::from(SR);
    (0..n)
        .map(|i| {
            let t = i as f64 / sr;
            let env = 0.7 + 0.3 * (2.0 * PI * 2.0 * t).sin();
            0.25 * env
                * (1..=8)
                    .map(|h| (2.0 * PI * f0 * h as f64 * t + 0.5 * h as f64).sin() / h as f64)
                    .sum::<f64>()
        })
        .collect()
}

pub fn white(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()
}

/// `clean` plus white noise scaled to `snr_db`.
pub fn add_noise(clean: &[f64], snr_db: f64, r: &mut ChaCha8Rng) -> Vec<f64> {
    let noise = white(r, clean.len());
    let ps: f64 = clean.iter().map(|v| v * v).sum();
    let pn: f64 = noise.iter().map(|v| v * v).sum();
    let g = (ps / pn / 10f64.powf(snr_db / 10.0)).sqrt();
    clean.iter().zip(&noise).map(|(c, n)| c + g * n).collect()
}

pub fn wave(samples: Vec<f64>) -> Waveform {
    Waveform::new(samples, SR).unwrap()
}

pub struct Corpus {
    pub dir: tempfile::TempDir,
    pub clean: PathBuf,
    pub noisy: PathBuf,
    pub enhanced: PathBuf,
}

/// `n` utterances `utt00..` of 0.4–0.8 s: clean vowels, noisy at 5 dB and
/// enhanced at 15 dB SNR.
pub fn corpus(n: usize, seed: u64) -> Corpus {
    let dir = tempfile::tempdir().unwrap();
    let [clean, noisy, enhanced] = ["clean", "noisy", "enhanced"].map(|d| dir.path().join(d));
    for d in [&clean, &noisy, &enhanced] {
        std::fs::create_dir(d).unwrap();
    }
    let mut r = rng(seed);
    for i in 0..n {
        let len = r.gen_range(6_400..12_800);
        let c = vowel(len, r.gen_range(100.0..220.0));
        let name = format!("utt{i:02}.wav");
        write_wav(clean.join(&name), &wave(c.clone())).unwrap();
        write_wav(noisy.join(&name), &wave(add_noise(&c, 5.0, &mut r))).unwrap();
        write_wav(enhanced.join(&name), &wave(add_noise(&c, 15.0, &mut r))).unwrap();
    }
    Corpus {
        dir,
        clean,
        noisy,
        enhanced,
    }
}

/// Splits a CSV report into its JSON config header and records.
pub fn parse_csv(text: &str) -> (serde_json::Value, Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# schema: "));
    let config_line = lines.next().unwrap();
    let config = serde_json::from_str(config_line.strip_prefix("# config: ").unwrap()).unwrap();
    let body: String = lines.map(|l| format!("{l}\n")).collect();
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let header = reader.headers().unwrap().iter().map(String::from).collect();
    let rows = reader
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect();
    (config, header, rows)
}

pub fn column(header: &[String], name: &str) -> Option<usize> {
    header.iter().position(|h| h == name)
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}
