//! Result emission: one CSV per run, one JSON summary per experiment, and
//! optional SVG curves per metric.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{RadError, Result};
use crate::harness::plot::{render_metric_svg, Series};
use crate::harness::runner::{ExperimentResults, MetricsRecord, RunSeries};

/// Column order of every per-run CSV.
pub const CSV_HEADER: &str = "batch_index,accuracy,accuracy_label_model,accuracy_classifier,\
f1_macro,hot_a,hot_truth_at,queries_used,total_queries,cumulative_training_size";

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Renders one run as CSV text: a header row plus one row per streamed
/// batch. Floats use the shortest representation that parses back to the
/// same value, so re-emitting a parsed file is byte-identical.
pub fn run_to_csv(run: &RunSeries) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &run.records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.batch_index,
            r.accuracy,
            fmt_opt(r.accuracy_label_model),
            r.accuracy_classifier,
            r.f1_macro,
            r.hot_a,
            fmt_opt(r.hot_truth_at),
            r.queries_used,
            r.total_queries,
            r.cumulative_training_size
        )
        .expect("writing to String cannot fail");
    }
    out
}

/// Parses text produced by [`run_to_csv`] back into records.
pub fn records_from_csv(text: &str) -> Result<Vec<MetricsRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => {
            return Err(RadError::InvalidData(format!(
                "unexpected results header: {other:?}"
            )))
        }
    }
    let mut records = Vec::new();
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 10 {
            return Err(RadError::InvalidData(format!(
                "expected 10 columns, found {}: {line}",
                cols.len()
            )));
        }
        let req = |i: usize| -> Result<f64> {
            cols[i]
                .parse()
                .map_err(|e| RadError::InvalidData(format!("column {i} ({}): {e}", cols[i])))
        };
        let opt = |i: usize| -> Result<Option<f64>> {
            if cols[i].is_empty() {
                Ok(None)
            } else {
                req(i).map(Some)
            }
        };
        let int = |i: usize| -> Result<usize> {
            cols[i]
                .parse()
                .map_err(|e| RadError::InvalidData(format!("column {i} ({}): {e}", cols[i])))
        };
        records.push(MetricsRecord {
            batch_index: int(0)?,
            accuracy: req(1)?,
            accuracy_label_model: opt(2)?,
            accuracy_classifier: req(3)?,
            f1_macro: req(4)?,
            hot_a: req(5)?,
            hot_truth_at: opt(6)?,
            queries_used: int(7)?,
            total_queries: int(8)?,
            cumulative_training_size: int(9)?,
        });
    }
    Ok(records)
}

/// Mean and population standard deviation of a statistic across seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

fn mean_std(values: &[f64]) -> Option<MeanStd> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Some(MeanStd { mean, std: var.sqrt(), n: values.len() })
}

/// Final-batch statistics of one run kind, aggregated across seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindSummary {
    pub accuracy: Option<MeanStd>,
    pub accuracy_classifier: Option<MeanStd>,
    pub f1_macro: Option<MeanStd>,
    pub hot_a: Option<MeanStd>,
    pub hot_truth_at: Option<MeanStd>,
    pub total_queries: Option<MeanStd>,
}

/// Aggregates every kind's final-batch metrics across seeds, keyed by the
/// kind's name. Deterministic key order.
pub fn summarize(results: &ExperimentResults) -> BTreeMap<String, KindSummary> {
    let mut kinds: Vec<_> = results.runs.iter().map(|r| r.kind).collect();
    kinds.sort();
    kinds.dedup();
    let mut out = BTreeMap::new();
    for kind in kinds {
        let finals: Vec<&MetricsRecord> = results
            .runs
            .iter()
            .filter(|r| r.kind == kind)
            .filter_map(|r| r.records.last())
            .collect();
        let collect = |f: &dyn Fn(&MetricsRecord) -> Option<f64>| -> Vec<f64> {
            finals.iter().filter_map(|r| f(r)).collect()
        };
        out.insert(
            kind.name().to_string(),
            KindSummary {
                accuracy: mean_std(&collect(&|r| Some(r.accuracy))),
                accuracy_classifier: mean_std(&collect(&|r| Some(r.accuracy_classifier))),
                f1_macro: mean_std(&collect(&|r| Some(r.f1_macro))),
                hot_a: mean_std(&collect(&|r| Some(r.hot_a))),
                hot_truth_at: mean_std(&collect(&|r| r.hot_truth_at)),
                total_queries: mean_std(&collect(&|r| Some(r.total_queries as f64))),
            },
        );
    }
    out
}

fn transcript_to_csv(run: &RunSeries) -> String {
    let mut out = String::from("instance_id,batch_index,answer\n");
    for entry in &run.transcript {
        writeln!(out, "{},{},{}", entry.instance_id, entry.batch_index, entry.answer)
            .expect("writing to String cannot fail");
    }
    out
}

/// Per-kind curve data for one metric: mean across seeds plus the min/max
/// envelope, with `None` where no seed reported a value.
fn metric_series(
    results: &ExperimentResults,
    metric: &dyn Fn(&MetricsRecord) -> Option<f64>,
) -> Vec<Series> {
    let mut kinds: Vec<_> = results.runs.iter().map(|r| r.kind).collect();
    kinds.sort();
    kinds.dedup();
    let mut series = Vec::new();
    for kind in kinds {
        let runs: Vec<&RunSeries> = results.runs.iter().filter(|r| r.kind == kind).collect();
        let n_batches = runs.iter().map(|r| r.records.len()).max().unwrap_or(0);
        let mut points = Vec::with_capacity(n_batches);
        for b in 0..n_batches {
            let values: Vec<f64> =
                runs.iter().filter_map(|r| r.records.get(b)).filter_map(|r| metric(r)).collect();
            if values.is_empty() {
                points.push((b as f64 + 1.0, None));
            } else {
                let mean = values.iter().sum::<f64>() / values.len() as f64;
                let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                points.push((b as f64 + 1.0, Some((mean, lo, hi))));
            }
        }
        series.push(Series { name: kind.name().to_string(), points });
    }
    series
}

/// Writes every artifact of one experiment under `out_dir`:
/// `{kind}_seed{seed}.csv` per run, `{kind}_seed{seed}_oracle.csv` per run
/// that queried the oracle, `summary.json`, and — when `plot` is set — one
/// SVG per metric. Returns the created paths.
pub fn emit_outputs(
    results: &ExperimentResults,
    out_dir: &Path,
    plot: bool,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for run in &results.runs {
        let path = out_dir.join(format!("{}_seed{}.csv", run.kind.name(), run.seed));
        fs::write(&path, run_to_csv(run))?;
        written.push(path);
        if !run.transcript.is_empty() {
            let path = out_dir.join(format!("{}_seed{}_oracle.csv", run.kind.name(), run.seed));
            fs::write(&path, transcript_to_csv(run))?;
            written.push(path);
        }
    }

    let summary = summarize(results);
    let path = out_dir.join("summary.json");
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    fs::write(&path, text)?;
    written.push(path);

    if plot {
        let metrics: [(&str, &dyn Fn(&MetricsRecord) -> Option<f64>); 4] = [
            ("accuracy", &|r| Some(r.accuracy)),
            ("f1_macro", &|r| Some(r.f1_macro)),
            ("hot_a", &|r| Some(r.hot_a)),
            ("hot_truth_at", &|r| r.hot_truth_at),
        ];
        for (name, metric) in metrics {
            let series = metric_series(results, metric);
            let svg = render_metric_svg(name, "batch", &series);
            let path = out_dir.join(format!("{name}.svg"));
            fs::write(&path, svg)?;
            written.push(path);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::RunKind;

    fn fake_run(kind: RunKind, seed: u64, shift: f64) -> RunSeries {
        let records = (1..=3)
            .map(|b| MetricsRecord {
                batch_index: b,
                accuracy: 0.5 + shift + b as f64 * 0.01,
                accuracy_label_model: if kind == RunKind::Slim { None } else { Some(0.6 + shift) },
                accuracy_classifier: 0.7 + shift,
                f1_macro: 0.4 + shift,
                hot_a: 0.9,
                hot_truth_at: if b == 1 { None } else { Some(0.8) },
                queries_used: b,
                total_queries: b * (b + 1) / 2,
                cumulative_training_size: 100 * b,
            })
            .collect();
        let transcript = if kind == RunKind::Active {
            (0..4)
                .map(|i| crate::oracle::TranscriptEntry {
                    instance_id: i,
                    batch_index: 1,
                    answer: i % 3,
                })
                .collect()
        } else {
            Vec::new()
        };
        RunSeries { kind, seed, records, transcript }
    }

    #[test]
    fn csv_round_trips_byte_identically() {
        let run = fake_run(RunKind::Basic, 7, 1.0 / 3.0);
        let text = run_to_csv(&run);
        let parsed = records_from_csv(&text).unwrap();
        assert_eq!(parsed, run.records);
        let again = run_to_csv(&RunSeries { records: parsed, ..run });
        assert_eq!(text, again, "parse + re-emit is byte identical");
    }

    #[test]
    fn csv_rejects_malformed_input() {
        assert!(records_from_csv("nonsense\n1,2,3").is_err());
        let short_row = format!("{CSV_HEADER}\n1,2,3\n");
        assert!(records_from_csv(&short_row).is_err());
    }

    #[test]
    fn summary_aggregates_across_seeds() {
        let results = ExperimentResults {
            config: crate::harness::config::tiny_config(),
            runs: vec![
                fake_run(RunKind::Basic, 1, 0.0),
                fake_run(RunKind::Basic, 2, 0.2),
                fake_run(RunKind::Slim, 1, 0.0),
            ],
        };
        let summary = summarize(&results);
        let basic = &summary["basic"];
        let acc = basic.accuracy.as_ref().unwrap();
        assert_eq!(acc.n, 2);
        assert!((acc.mean - 0.63).abs() < 1e-12);
        assert!((acc.std - 0.1).abs() < 1e-12);
        assert!(summary["slim"].accuracy_classifier.is_some());
    }

    #[test]
    fn emit_writes_expected_files() {
        let dir = tempfile::tempdir().unwrap();
        let results = ExperimentResults {
            config: crate::harness::config::tiny_config(),
            runs: vec![fake_run(RunKind::Active, 1, 0.0), fake_run(RunKind::NoSel, 1, 0.1)],
        };
        let written = emit_outputs(&results, dir.path(), true).unwrap();
        let names: Vec<String> = written
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        assert!(names.contains(&"active_seed1.csv".to_string()));
        assert!(names.contains(&"active_seed1_oracle.csv".to_string()));
        assert!(names.contains(&"no_sel_seed1.csv".to_string()));
        assert!(!names.contains(&"no_sel_seed1_oracle.csv".to_string()), "empty transcript");
        assert!(names.contains(&"summary.json".to_string()));
        for metric in ["accuracy", "f1_macro", "hot_a", "hot_truth_at"] {
            assert!(names.contains(&format!("{metric}.svg")));
        }
        let svg = fs::read_to_string(dir.path().join("accuracy.svg")).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("active"));

        let no_plots = tempfile::tempdir().unwrap();
        let written = emit_outputs(&results, no_plots.path(), false).unwrap();
        assert!(written.iter().all(|p| p.extension().unwrap() != "svg"), "plots are opt-in");
    }

    #[test]
    fn unwritable_directory_is_an_io_error() {
        let results = ExperimentResults {
            config: crate::harness::config::tiny_config(),
            runs: vec![fake_run(RunKind::Basic, 1, 0.0)],
        };
        let err = emit_outputs(&results, Path::new("/proc/definitely/not/writable"), false)
            .unwrap_err();
        assert!(matches!(err, RadError::Io(_)));
    }
}
