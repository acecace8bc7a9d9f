//! On-disk artifact formats: the scored-document CSV, the ROC-curve CSV,
//! and the threshold report JSON. Output is deterministic: column order
//! is fixed, baseline columns are sorted, and floats use the shortest
//! round-trip representation.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roc::{Direction, RocCurve, ThresholdChoice};
use crate::scoring::{Label, ScoredDocument};

pub const SCORED_BASE_COLUMNS: [&str; 6] = [
    "doc_id",
    "label",
    "token_count",
    "log_ppl",
    "x_ppl",
    "binoculars",
];

/// Baseline column names present across a document set, sorted.
pub fn baseline_columns(docs: &[ScoredDocument]) -> Vec<String> {
    let mut set = BTreeSet::new();
    for doc in docs {
        for key in doc.baselines.keys() {
            set.insert(key.clone());
        }
    }
    set.into_iter().collect()
}

pub fn scored_csv_to_string(docs: &[ScoredDocument]) -> Result<String> {
    let baselines = baseline_columns(docs);
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = SCORED_BASE_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend(baselines.iter().cloned());
    writer.write_record(&header)?;
    for doc in docs {
        let mut record = vec![
            doc.doc_id.clone(),
            doc.label.to_string(),
            doc.token_count.to_string(),
            doc.log_ppl.to_string(),
            doc.x_ppl.to_string(),
            doc.binoculars.to_string(),
        ];
        for col in &baselines {
            record.push(
                doc.baselines
                    .get(col)
                    .map(|v| v.to_string())
                    .unwrap_or_default(),
            );
        }
        writer.write_record(&record)?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Parse {
        line: None,
        msg: e.to_string(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_scored_csv(docs: &[ScoredDocument], path: &Path) -> Result<()> {
    std::fs::write(path, scored_csv_to_string(docs)?)?;
    Ok(())
}

/// A row read back from a scored CSV. Third-party score files are
/// accepted: only `label` is required, every numeric column becomes a
/// score field, and `doc_id`/`token_count` are picked up when present.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredRow {
    pub doc_id: String,
    pub label: Label,
    pub token_count: Option<usize>,
    pub scores: BTreeMap<String, f64>,
}

impl ScoredRow {
    pub fn score(&self, field: &str) -> Option<f64> {
        self.scores.get(field).copied()
    }
}

pub fn read_scored_csv(path: &Path) -> Result<Vec<ScoredRow>> {
    let text = std::fs::read_to_string(path)?;
    read_scored_csv_str(&text)
}

pub fn read_scored_csv_str(text: &str) -> Result<Vec<ScoredRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if !headers.iter().any(|h| h == "label") {
        return Err(Error::Parse {
            line: Some(1),
            msg: "scored CSV needs a `label` column".into(),
        });
    }
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let line = idx + 2;
        let mut doc_id = format!("row-{}", idx + 1);
        let mut label = Label::Unknown;
        let mut token_count = None;
        let mut scores = BTreeMap::new();
        for (col, raw) in headers.iter().zip(record.iter()) {
            let raw = raw.trim();
            match col.as_str() {
                "doc_id" => {
                    if !raw.is_empty() {
                        doc_id = raw.to_string();
                    }
                }
                "label" => {
                    label = Label::parse(raw).map_err(|_| Error::Parse {
                        line: Some(line),
                        msg: format!("not a label: {raw:?}"),
                    })?;
                }
                "token_count" => {
                    if !raw.is_empty() {
                        token_count = Some(raw.parse::<usize>().map_err(|_| Error::Parse {
                            line: Some(line),
                            msg: format!("not a token count: {raw:?}"),
                        })?);
                    }
                }
                _ => {
                    if let Ok(value) = raw.parse::<f64>() {
                        scores.insert(col.clone(), value);
                    }
                }
            }
        }
        rows.push(ScoredRow {
            doc_id,
            label,
            token_count,
            scores,
        });
    }
    Ok(rows)
}

/// ROC export: one `threshold,fpr,tpr` row per curve point.
pub fn roc_csv_to_string(curve: &RocCurve) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["threshold", "fpr", "tpr"])?;
    for point in &curve.points {
        writer.write_record(&[
            point.threshold.to_string(),
            point.fpr.to_string(),
            point.tpr.to_string(),
        ])?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Parse {
        line: None,
        msg: e.to_string(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_roc_csv(curve: &RocCurve, path: &Path) -> Result<()> {
    std::fs::write(path, roc_csv_to_string(curve)?)?;
    Ok(())
}

/// Calibration output: AUROC plus one choice per requested method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub score_field: String,
    pub direction: Direction,
    pub auroc: f64,
    pub positive_count: usize,
    pub negative_count: usize,
    pub choices: Vec<ThresholdChoice>,
}

impl ThresholdReport {
    pub fn to_json(&self) -> Result<String> {
        let mut out = serde_json::to_string_pretty(self)?;
        out.push('\n');
        Ok(out)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }
}
