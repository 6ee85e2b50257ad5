//! `autothink analyze`: transcript analytics over one JSONL file or a
//! directory of them (one dataset per file), with JSON and CSV reports.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use autothink_core::analytics::{
    analyze_dataset, BenchmarkSummary, Binning, DatasetReport, Ef1Aggregations, Lexicon,
    TranscriptRecord,
};

use crate::output::{write_json, write_manifest, DirLock};
use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct BaselinePair {
    standard: BenchmarkSummary,
    no_thinking: BenchmarkSummary,
}

/// Baselines file: top-level standard/no-thinking summaries, optionally
/// refined per dataset.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct BaselinesFile {
    standard: Option<BenchmarkSummary>,
    no_thinking: Option<BenchmarkSummary>,
    #[serde(default)]
    per_dataset: BTreeMap<String, BaselinePair>,
}

#[derive(Serialize)]
struct AnalysisReport {
    tau: usize,
    levels: usize,
    binning: Binning,
    read_lines: usize,
    skipped_lines: usize,
    datasets: BTreeMap<String, DatasetReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ef1_notice: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ef1_aggregations: Option<Ef1Aggregations>,
}

fn read_jsonl(
    path: &Path,
    skipped: &mut usize,
    read: &mut usize,
) -> Result<Vec<TranscriptRecord>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut records = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        *read += 1;
        match serde_json::from_str::<TranscriptRecord>(line) {
            Ok(r) => records.push(r),
            Err(e) => {
                *skipped += 1;
                log::warn!(
                    "{}:{}: skipping malformed line: {e}",
                    path.display(),
                    lineno + 1
                );
            }
        }
    }
    Ok(records)
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into())
}

pub fn run(
    transcripts: &Path,
    baselines: Option<&Path>,
    out: &Path,
    tau: usize,
    levels: usize,
    binning: Binning,
    lexicon_path: Option<&Path>,
) -> Result<(), CliError> {
    let mut inputs: Vec<PathBuf> = if transcripts.is_dir() {
        fs::read_dir(transcripts)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect()
    } else {
        vec![transcripts.to_path_buf()]
    };
    if inputs.is_empty() {
        return Err(CliError::AllMalformed(format!(
            "no .jsonl files under {}",
            transcripts.display()
        )));
    }

    let lexicon = match lexicon_path {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            Lexicon::from_json(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => Lexicon::default(),
    };
    if lexicon.is_empty() {
        return Err(CliError::Config("lexicon has no categories".into()));
    }

    let baselines_file: Option<BaselinesFile> = match baselines {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            Some(
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
            )
        }
        None => None,
    };

    let mut skipped = 0usize;
    let mut read = 0usize;
    let mut datasets: BTreeMap<String, Vec<TranscriptRecord>> = BTreeMap::new();
    inputs.sort();
    let mut hasher = Sha256::new();
    for path in &inputs {
        hasher.update(fs::read(path)?);
        let records = read_jsonl(path, &mut skipped, &mut read)?;
        datasets.insert(dataset_name(path), records);
    }
    if datasets.values().all(|v| v.is_empty()) {
        return Err(CliError::AllMalformed(format!(
            "no parseable transcript lines in {} ({} lines skipped)",
            transcripts.display(),
            skipped
        )));
    }
    if skipped > 0 {
        log::warn!("skipped {skipped} malformed of {read} lines");
    }

    let _lock = DirLock::acquire(out)?;
    let config_hash: String = {
        hasher.update([tau as u8, levels as u8]);
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    };
    write_manifest(out, "analyze", &config_hash, 0)?;

    let pair_for = |name: &str| -> Option<(BenchmarkSummary, BenchmarkSummary)> {
        let file = baselines_file.as_ref()?;
        if let Some(pair) = file.per_dataset.get(name) {
            return Some((pair.standard, pair.no_thinking));
        }
        Some((file.standard?, file.no_thinking?))
    };

    let mut reports: BTreeMap<String, DatasetReport> = BTreeMap::new();
    let mut ef1_rows: Vec<(BenchmarkSummary, BenchmarkSummary, BenchmarkSummary)> = Vec::new();
    for (name, records) in &datasets {
        if records.is_empty() {
            log::warn!("dataset {name}: no usable lines, skipping");
            continue;
        }
        let pair = pair_for(name);
        let report = analyze_dataset(records, tau, levels, binning, &lexicon, pair)
            .map_err(|e| CliError::Config(format!("dataset {name}: {e}")))?;
        if let (Some(summary), Some((std, no))) = (report.summary, pair) {
            ef1_rows.push((summary, std, no));
        }
        reports.insert(name.clone(), report);
    }

    let ef1_notice = if baselines_file.is_none() {
        Some("E-F1 omitted: no baselines supplied (pass --baselines)".to_string())
    } else {
        None
    };
    let ef1_aggregations = if ef1_rows.len() >= 2 {
        Ef1Aggregations::compute(&ef1_rows)
            .map_err(|e| CliError::Config(format!("E-F1 aggregation: {e}")))
            .map(Some)?
    } else {
        None
    };

    let report = AnalysisReport {
        tau,
        levels,
        binning,
        read_lines: read,
        skipped_lines: skipped,
        datasets: reports,
        ef1_notice,
        ef1_aggregations,
    };
    write_json(out.join("report.json"), &report)?;
    write_csvs(out, &report)?;
    log::info!("report written to {}", out.display());
    Ok(())
}

fn write_csvs(out: &Path, report: &AnalysisReport) -> Result<(), CliError> {
    let csv_err = |e: csv::Error| CliError::Other(format!("csv: {e}"));

    let mut w = csv::Writer::from_path(out.join("summary.csv")).map_err(csv_err)?;
    w.write_record([
        "dataset",
        "transcripts",
        "malformed",
        "thinking_rate",
        "accuracy",
        "mean_tokens",
        "tokens_approximate",
    ])
    .map_err(csv_err)?;
    for (name, r) in &report.datasets {
        let (acc, tokens) = r
            .summary
            .map(|s| {
                (
                    format!("{:.6}", s.accuracy),
                    format!("{:.6}", s.mean_tokens),
                )
            })
            .unwrap_or_else(|| (String::new(), String::new()));
        w.write_record([
            name.as_str(),
            &r.transcripts.to_string(),
            &r.malformed.to_string(),
            &format!("{:.6}", r.thinking_rate),
            &acc,
            &tokens,
            &r.token_counts_approximate.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(out.join("ef1.csv")).map_err(csv_err)?;
    w.write_record(["dataset", "ef1"]).map_err(csv_err)?;
    for (name, r) in &report.datasets {
        if let Some(v) = r.ef1 {
            w.write_record([name.as_str(), &format!("{v:.6}")])
                .map_err(csv_err)?;
        }
    }
    if let Some(agg) = &report.ef1_aggregations {
        w.write_record(["(from averages)", &format!("{:.6}", agg.from_averages)])
            .map_err(csv_err)?;
        w.write_record([
            "(mean of per-dataset)",
            &format!("{:.6}", agg.mean_of_per_benchmark),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(out.join("no_thinking_by_level.csv")).map_err(csv_err)?;
    w.write_record(["dataset", "level", "no_thinking_rate"])
        .map_err(csv_err)?;
    for (name, r) in &report.datasets {
        for (level, rate) in &r.no_thinking_rate_by_level {
            w.write_record([name.as_str(), &level.to_string(), &format!("{rate:.6}")])
                .map_err(csv_err)?;
        }
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(out.join("keyword_rates.csv")).map_err(csv_err)?;
    w.write_record(["dataset", "mode", "category", "rate_per_1000_tokens"])
        .map_err(csv_err)?;
    for (name, r) in &report.datasets {
        for (mode, rates) in &r.keyword_rates {
            for (category, rate) in rates {
                w.write_record([name.as_str(), mode, category, &format!("{rate:.6}")])
                    .map_err(csv_err)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
