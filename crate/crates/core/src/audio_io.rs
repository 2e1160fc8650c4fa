//! WAV input/output and clean/noisy/enhanced utterance pairing.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Largest length difference (in samples) that [`UtteranceTriple::new`]
/// silently truncates away.
pub const MAX_LENGTH_MISMATCH: usize = 512;

const PCM16_SCALE: f64 = 32768.0;

/// Mono audio at a fixed sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl Waveform {
    /// Rejects empty or non-finite sample buffers and a zero sample rate.
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if samples.is_empty() {
            return Err(Error::EmptyWaveform);
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::invalid(format!("sample {i} is not finite")));
        }
        Ok(Waveform {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    fn truncated(mut self, len: usize) -> Self {
        self.samples.truncate(len);
        self
    }
}

fn map_hound(path: &Path, err: hound::Error) -> Error {
    match err {
        hound::Error::IoError(source) => Error::Io {
            path: path.to_owned(),
            source,
        },
        hound::Error::Unsupported => Error::UnsupportedFormat {
            path: path.to_owned(),
            reason: "only linear PCM and IEEE float are supported".into(),
        },
        other => Error::WavFormat {
            path: path.to_owned(),
            reason: other.to_string(),
        },
    }
}

/// Reads a 16-bit PCM or 32-bit float WAV file, averaging channels to mono.
///
/// PCM samples are scaled by 1/32768.
pub fn read_wav(path: impl AsRef<Path>) -> Result<Waveform> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    // The file opened, so read failures past this point mean a truncated or
    // malformed stream.
    let as_format = |e: hound::Error| match e {
        hound::Error::IoError(source) => Error::WavFormat {
            path: path.to_owned(),
            reason: source.to_string(),
        },
        other => map_hound(path, other),
    };
    let reader = hound::WavReader::new(std::io::BufReader::new(file)).map_err(as_format)?;
    let format = reader.spec();
    let channels = usize::from(format.channels);
    if channels == 0 {
        return Err(Error::WavFormat {
            path: path.to_owned(),
            reason: "zero channels".into(),
        });
    }

    let interleaved: Vec<f64> = match (format.sample_format, format.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| f64::from(v) / PCM16_SCALE))
            .collect::<Result<_, _>>()
            .map_err(as_format)?,
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()
            .map_err(as_format)?,
        (format, bits) => {
            return Err(Error::UnsupportedFormat {
                path: path.to_owned(),
                reason: format!("{bits}-bit {format:?} samples"),
            })
        }
    };

    if interleaved.is_empty() {
        return Err(Error::EmptyWaveform);
    }
    let samples = if channels == 1 {
        interleaved
    } else {
        interleaved
            .chunks_exact(channels)
            .map(|frame| frame.iter().sum::<f64>() / channels as f64)
            .collect()
    };
    Waveform::new(samples, format.sample_rate).map_err(|e| match e {
        Error::InvalidInput(reason) => Error::WavFormat {
            path: path.to_owned(),
            reason,
        },
        other => other,
    })
}

/// Quantizes one amplitude to 16-bit PCM, clipping to [-1, 1] first.
pub fn quantize_pcm16(x: f64) -> i16 {
    let clipped = x.clamp(-1.0, 1.0);
    (clipped * PCM16_SCALE)
        .round()
        .clamp(f64::from(i16::MIN), f64::from(i16::MAX)) as i16
}

/// Writes a mono 16-bit PCM WAV with the canonical 44-byte header.
pub fn write_wav(path: impl AsRef<Path>, waveform: &Waveform) -> Result<()> {
    let path = path.as_ref();
    let format = hound::WavSpec {
        channels: 1,
        sample_rate: waveform.sample_rate(),
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, format).map_err(|e| map_hound(path, e))?;
    for &s in waveform.samples() {
        writer
            .write_sample(quantize_pcm16(s))
            .map_err(|e| map_hound(path, e))?;
    }
    writer.finalize().map_err(|e| map_hound(path, e))
}

/// Clean reference, enhanced estimate and (optionally) the noisy input for
/// one utterance, checked for a common sample rate and aligned to a common
/// length.
#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceTriple {
    pub id: String,
    pub clean: Waveform,
    pub noisy: Option<Waveform>,
    pub enhanced: Waveform,
}

impl UtteranceTriple {
    /// Truncates every waveform to the shortest one when lengths differ by at
    /// most [`MAX_LENGTH_MISMATCH`] samples; larger differences and sample-rate
    /// disagreements are errors.
    pub fn new(
        id: impl Into<String>,
        clean: Waveform,
        enhanced: Waveform,
        noisy: Option<Waveform>,
    ) -> Result<Self> {
        let rate = clean.sample_rate();
        for other in std::iter::once(&enhanced).chain(noisy.as_ref()) {
            if other.sample_rate() != rate {
                return Err(Error::SampleRateMismatch(rate, other.sample_rate()));
            }
        }

        let lengths = std::iter::once(clean.len())
            .chain(std::iter::once(enhanced.len()))
            .chain(noisy.as_ref().map(Waveform::len));
        let (min, max) = lengths.fold((usize::MAX, 0), |(lo, hi), n| (lo.min(n), hi.max(n)));
        if max - min > MAX_LENGTH_MISMATCH {
            return Err(Error::LengthMismatch(min, max));
        }

        Ok(UtteranceTriple {
            id: id.into(),
            clean: clean.truncated(min),
            noisy: noisy.map(|w| w.truncated(min)),
            enhanced: enhanced.truncated(min),
        })
    }
}

/// File locations of one matched utterance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UtterancePaths {
    pub id: String,
    pub clean: PathBuf,
    pub enhanced: PathBuf,
    pub noisy: Option<PathBuf>,
}

impl UtterancePaths {
    pub fn load(&self) -> Result<UtteranceTriple> {
        let clean = read_wav(&self.clean)?;
        let enhanced = read_wav(&self.enhanced)?;
        let noisy = self.noisy.as_ref().map(read_wav).transpose()?;
        UtteranceTriple::new(self.id.clone(), clean, enhanced, noisy)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedPair {
    pub id: String,
    pub reason: String,
}

/// Result of matching directories by file name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Pairing {
    pub pairs: Vec<UtterancePaths>,
    pub skipped: Vec<SkippedPair>,
}

fn list_wavs(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let io_err = |source| Error::Io {
        path: dir.to_owned(),
        source,
    };
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(io_err)? {
        let path = entry.map_err(io_err)?.path();
        let is_wav = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("wav"));
        if !is_wav || !path.is_file() {
            continue;
        }
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            out.insert(stem.to_owned(), path);
        }
    }
    Ok(out)
}

/// Matches `*.wav` files with identical base names across directories.
///
/// Output is ordered by id. A clean file without an enhanced (or, when a
/// noisy directory is given, noisy) counterpart is recorded in
/// [`Pairing::skipped`] rather than failing the whole pairing.
pub fn pair_directories(
    clean_dir: &Path,
    enhanced_dir: &Path,
    noisy_dir: Option<&Path>,
) -> Result<Pairing> {
    let clean = list_wavs(clean_dir)?;
    let mut enhanced = list_wavs(enhanced_dir)?;
    let mut noisy = noisy_dir.map(list_wavs).transpose()?;

    let mut pairing = Pairing::default();
    for (id, clean_path) in clean {
        let Some(enhanced_path) = enhanced.remove(&id) else {
            pairing.skipped.push(SkippedPair {
                id,
                reason: "no enhanced counterpart".into(),
            });
            continue;
        };
        let noisy_path = match noisy.as_mut() {
            None => None,
            Some(files) => match files.remove(&id) {
                Some(p) => Some(p),
                None => {
                    pairing.skipped.push(SkippedPair {
                        id,
                        reason: "no noisy counterpart".into(),
                    });
                    continue;
                }
            },
        };
        pairing.pairs.push(UtterancePaths {
            id,
            clean: clean_path,
            enhanced: enhanced_path,
            noisy: noisy_path,
        });
    }
    Ok(pairing)
}
