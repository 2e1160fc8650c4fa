//! `loss` and `metrics` over paired corpora.

use std::path::Path;

use anyhow::{bail, Context, Result};
use phaseloss::{
    compute_metrics, loss_report, pair_directories, Pairing, SkippedPair, UtterancePaths,
    UtteranceTriple,
};
use rayon::prelude::*;

use crate::config::{PhaseReference, RunConfig};
use crate::report::{Cell, Table, LOSS_SCHEMA, METRICS_SCHEMA};

/// Columns left empty for standardized metrics computed by external tools.
pub const EXTERNAL_COLUMNS: [&str; 8] = [
    "pesq", "wb_pesq", "stoi", "estoi", "csig", "cbak", "covl", "ncm",
];

/// Identifier of the dataset-mean row.
pub const SUMMARY_ID: &str = "mean";

#[derive(Debug, Clone, PartialEq)]
enum Status {
    Ok(Vec<Option<f64>>),
    Skipped(String),
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
struct Row {
    id: String,
    status: Status,
}

/// A finished batch: the report and its row counts.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutcome {
    pub table: Table,
    pub ok: usize,
    pub skipped: usize,
    pub failed: usize,
}

impl BatchOutcome {
    /// True when at least one utterance was evaluated.
    pub fn succeeded(&self) -> bool {
        self.ok > 0
    }
}

fn stem(path: &Path) -> Result<String> {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .with_context(|| format!("no file name in {}", path.display()))
}

/// Pairs inputs that are either three directories or three single files.
fn gather(clean: &Path, enhanced: &Path, noisy: Option<&Path>) -> Result<Pairing> {
    if clean.is_dir() {
        if !enhanced.is_dir() || noisy.is_some_and(|n| !n.is_dir()) {
            bail!("clean is a directory, so enhanced and noisy must be directories too");
        }
        return Ok(pair_directories(clean, enhanced, noisy)?);
    }
    if enhanced.is_dir() || noisy.is_some_and(Path::is_dir) {
        bail!("clean is a file, so enhanced and noisy must be files too");
    }
    Ok(Pairing {
        pairs: vec![UtterancePaths {
            id: stem(clean)?,
            clean: clean.to_path_buf(),
            enhanced: enhanced.to_path_buf(),
            noisy: noisy.map(Path::to_path_buf),
        }],
        skipped: Vec::new(),
    })
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?)
}

/// Evaluates every pair on `jobs` threads and merges the results, together
/// with the skipped pairs, in utterance-id order.
fn evaluate<F>(pairing: Pairing, jobs: usize, f: F) -> Result<Vec<Row>>
where
    F: Fn(&UtteranceTriple) -> phaseloss::Result<Vec<Option<f64>>> + Sync,
{
    let evaluated: Vec<Row> = pool(jobs)?.install(|| {
        pairing
            .pairs
            .par_iter()
            .map(|p| {
                let status = match p.load().and_then(|t| f(&t)) {
                    Ok(values) => Status::Ok(values),
                    Err(e) => Status::Failed(e.to_string()),
                };
                Row {
                    id: p.id.clone(),
                    status,
                }
            })
            .collect()
    });
    let skipped = pairing
        .skipped
        .into_iter()
        .map(|SkippedPair { id, reason }| Row {
            id,
            status: Status::Skipped(reason),
        });
    let mut rows: Vec<Row> = evaluated.into_iter().chain(skipped).collect();
    rows.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(rows)
}

/// Per-column mean over successful rows, ignoring undefined entries.
fn column_means(rows: &[Row], width: usize) -> Vec<Option<f64>> {
    (0..width)
        .map(|c| {
            let defined: Vec<f64> = rows
                .iter()
                .filter_map(|r| match &r.status {
                    Status::Ok(v) => v[c],
                    _ => None,
                })
                .collect();
            (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
        })
        .collect()
}

fn assemble(
    schema: &'static str,
    config: serde_json::Value,
    value_columns: Vec<String>,
    rows: Vec<Row>,
) -> BatchOutcome {
    let width = value_columns.len();
    let count = |pred: fn(&Status) -> bool| rows.iter().filter(|r| pred(&r.status)).count();
    let ok = count(|s| matches!(s, Status::Ok(_)));
    let skipped = count(|s| matches!(s, Status::Skipped(_)));
    let failed = count(|s| matches!(s, Status::Failed(_)));

    let mut columns = vec!["id".to_string(), "status".to_string(), "reason".to_string()];
    columns.extend(value_columns);
    let line = |id: &str, status: &str, reason: &str, values: Vec<Option<f64>>| {
        let mut cells = vec![
            Cell::Text(id.to_string()),
            Cell::Text(status.to_string()),
            Cell::Text(reason.to_string()),
        ];
        cells.extend(values.into_iter().map(Cell::Num));
        cells
    };
    let mut table_rows: Vec<Vec<Cell>> = rows
        .iter()
        .map(|r| match &r.status {
            Status::Ok(v) => line(&r.id, "ok", "", v.clone()),
            Status::Skipped(why) => line(&r.id, "skipped", why, vec![None; width]),
            Status::Failed(why) => line(&r.id, "failed", why, vec![None; width]),
        })
        .collect();
    table_rows.push(line(
        SUMMARY_ID,
        "summary",
        &format!("ok={ok} skipped={skipped} failed={failed}"),
        column_means(&rows, width),
    ));
    BatchOutcome {
        table: Table {
            schema,
            config,
            columns,
            rows: table_rows,
        },
        ok,
        skipped,
        failed,
    }
}

/// Loss-report column names for `resolutions` STFT resolutions.
pub fn loss_columns(resolutions: usize) -> Vec<String> {
    let mut cols = vec!["l1".to_string()];
    for i in 0..resolutions {
        for term in ["sc", "log_mag", "pl", "pcl"] {
            cols.push(format!("{term}_r{i}"));
        }
    }
    cols.extend(["stft_term", "phase_term", "total"].map(String::from));
    cols
}

/// The combined training criterion for every pair.
pub fn cmd_loss(cfg: &RunConfig) -> Result<BatchOutcome> {
    cfg.validate_loss()?;
    let (clean, enhanced) = (
        cfg.paths.clean.as_deref().expect("validated"),
        cfg.paths.enhanced.as_deref().expect("validated"),
    );
    let noisy = match cfg.loss.phase_reference {
        PhaseReference::Noisy => cfg.paths.noisy.as_deref(),
        PhaseReference::Clean => None,
    };
    let pairing = gather(clean, enhanced, noisy)?;
    let weights = cfg.loss.weights();
    let resolutions = &cfg.stft.resolutions;
    let columns = loss_columns(resolutions.len());
    let rows = evaluate(pairing, cfg.run.jobs, |t| {
        let report = loss_report(
            &t.clean,
            &t.enhanced,
            t.noisy.as_ref(),
            &weights,
            resolutions,
        )?;
        Ok(report.flat_record().into_iter().map(|(_, v)| v).collect())
    })?;
    Ok(assemble(LOSS_SCHEMA, cfg.effective(), columns, rows))
}

/// Metric-report column names.
pub fn metric_columns(with_sdri: bool) -> Vec<String> {
    let mut cols: Vec<String> = ["snrseg", "fwsnrseg", "sdr"].map(String::from).to_vec();
    if with_sdri {
        cols.push("sdri".into());
    }
    cols.extend(["unrmse", "gd_rmse", "if_rmse", "voiced_frames"].map(String::from));
    cols.extend(EXTERNAL_COLUMNS.map(String::from));
    cols
}

/// Evaluation metrics for every pair.
pub fn cmd_metrics(cfg: &RunConfig) -> Result<BatchOutcome> {
    cfg.validate_metrics()?;
    let (clean, enhanced) = (
        cfg.paths.clean.as_deref().expect("validated"),
        cfg.paths.enhanced.as_deref().expect("validated"),
    );
    let with_sdri = cfg.reports_sdri();
    let noisy = if with_sdri {
        cfg.paths.noisy.as_deref()
    } else {
        None
    };
    let pairing = gather(clean, enhanced, noisy)?;
    let params = &cfg.metrics;
    let columns = metric_columns(with_sdri);
    let rows = evaluate(pairing, cfg.run.jobs, |t| {
        let report = compute_metrics(&t.clean, &t.enhanced, t.noisy.as_ref(), params)?;
        let mut values: Vec<Option<f64>> = report
            .flat_record(with_sdri)
            .into_iter()
            .map(|(_, v)| v)
            .collect();
        values.extend([None; EXTERNAL_COLUMNS.len()]);
        Ok(values)
    })?;
    Ok(assemble(METRICS_SCHEMA, cfg.effective(), columns, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use phaseloss::{LossReport, LossWeights, MetricReport};

    #[test]
    fn loss_columns_follow_report_keys() {
        let report = LossReport {
            weights: LossWeights::PL,
            l1: 0.0,
            resolutions: vec![
                phaseloss::losses::ResolutionTerms {
                    config: phaseloss::StftConfig::hann(64, 16, 64).unwrap(),
                    sc: 0.0,
                    log_mag: 0.0,
                    pl: 0.0,
                    pl_active_bins: 0,
                    pcl: None,
                };
                2
            ],
            stft_term: 0.0,
            phase_term: 0.0,
            total: 0.0,
        };
        let keys: Vec<String> = report.flat_record().into_iter().map(|(k, _)| k).collect();
        assert_eq!(keys, loss_columns(2));
    }

    #[test]
    fn metric_columns_follow_report_keys() {
        let report = MetricReport {
            snrseg: None,
            fwsnrseg: None,
            sdr: 0.0,
            sdri: None,
            unrmse: None,
            gd_rmse: None,
            if_rmse: None,
            voiced_frame_count: 0,
        };
        for with_sdri in [false, true] {
            let keys: Vec<String> = report
                .flat_record(with_sdri)
                .into_iter()
                .map(|(k, _)| k.to_string())
                .collect();
            assert_eq!(keys[..], metric_columns(with_sdri)[..keys.len()]);
        }
    }

    #[test]
    fn means_skip_undefined_and_failed_rows() {
        let rows = vec![
            Row {
                id: "a".into(),
                status: Status::Ok(vec![Some(1.0), None]),
            },
            Row {
                id: "b".into(),
                status: Status::Ok(vec![Some(3.0), None]),
            },
            Row {
                id: "c".into(),
                status: Status::Failed("x".into()),
            },
        ];
        assert_eq!(column_means(&rows, 2), vec![Some(2.0), None]);
    }
}
