//! Grid dumps of one file's phase field, continuity kernels or phase
//! derivatives.
//!
//! Every dump has integer `time` (frame) and `frequency` (bin) columns.
//! Kernel dumps add `dt` and `dk`, the time and frequency offsets of the
//! neighbour within the 3×3 block centred at (`time`, `frequency`), so each
//! interior bin contributes nine rows in row-major block order.

use std::path::Path;

use anyhow::Result;
use phaseloss::{continuity_kernel, derivative_fields, phase_field, read_wav, stft, StftConfig};
use serde::Serialize;
use serde_json::json;

use crate::report::{Cell, Table, INSPECT_SCHEMA};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum What {
    /// Magnitude and unit-circle phase images per bin.
    Phase,
    /// Continuity-kernel entries per interior bin.
    Kernel,
    /// Instantaneous frequency and group delay per bin.
    Derivatives,
}

fn index(i: usize) -> Cell {
    Cell::Int(i as i64)
}

pub fn cmd_inspect(file: &Path, cfg: &StftConfig, what: What) -> Result<Table> {
    let w = read_wav(file)?;
    let s = stft(&w, cfg)?;
    let (frames, bins) = (s.frames(), s.bins());
    let mut rows = Vec::new();
    let columns: &[&str] = match what {
        What::Phase => {
            let p = phase_field(&s);
            for t in 0..frames {
                for k in 0..bins {
                    rows.push(vec![
                        index(t),
                        index(k),
                        Cell::Num(Some(p.magnitude()[(t, k)])),
                        Cell::Num(Some(p.cos()[(t, k)])),
                        Cell::Num(Some(p.sin()[(t, k)])),
                    ]);
                }
            }
            &["time", "frequency", "magnitude", "cos", "sin"]
        }
        What::Kernel => {
            let kernel = continuity_kernel(&phase_field(&s))?;
            let (ct, ck) = kernel.centers();
            for t in 0..ct {
                for k in 0..ck {
                    let (cb, sb) = (kernel.cos_block(t, k), kernel.sin_block(t, k));
                    for r in 0..3 {
                        for c in 0..3 {
                            rows.push(vec![
                                index(t + 1),
                                index(k + 1),
                                Cell::Int(c as i64 - 1),
                                Cell::Int(1 - r as i64),
                                Cell::Num(Some(cb[r][c])),
                                Cell::Num(Some(sb[r][c])),
                            ]);
                        }
                    }
                }
            }
            &["time", "frequency", "dt", "dk", "cos", "sin"]
        }
        What::Derivatives => {
            let d = derivative_fields(&s);
            for t in 0..frames {
                for k in 0..bins {
                    rows.push(vec![
                        index(t),
                        index(k),
                        Cell::Num(Some(d.if_vals[(t, k)])),
                        Cell::Num(Some(d.gd_vals[(t, k)])),
                    ]);
                }
            }
            &["time", "frequency", "if", "gd"]
        }
    };
    let sr = f64::from(w.sample_rate());
    Ok(Table {
        schema: INSPECT_SCHEMA,
        config: json!({
            "file": file,
            "what": what,
            "stft": cfg,
            "sample_rate": w.sample_rate(),
            "frames": frames,
            "bins": bins,
            "seconds_per_frame": cfg.hop as f64 / sr,
            "hz_per_bin": sr / cfg.fft_size as f64,
        }),
        columns: columns.iter().map(|c| c.to_string()).collect(),
        rows,
    })
}
