//! Dataset curation: parse, filter (weight cap, unsupported elements),
//! convert potency units, and merge duplicate molecules by mean.

use super::PipelineError;
use crate::chem::{canonical_smiles, parse_smiles};
use crate::descriptors::{mol_weight, pic50_from_ic50};
use std::collections::BTreeMap;

const MAX_WEIGHT_DA: f64 = 1000.0;

/// One curated molecule.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub canonical_smiles: String,
    pub pic50: f64,
    /// Raw measurements merged into this record.
    pub source_count: u32,
}

#[derive(Debug)]
pub struct CurationOutcome {
    pub records: Vec<DatasetRecord>,
    /// Per-row exclusions: (line number, reason).
    pub dropped: Vec<(usize, String)>,
}

impl CurationOutcome {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["canonical_smiles", "pic50", "source_count"]).expect("in-memory");
        for r in &self.records {
            // shortest round-trip float form keeps re-ingestion exact
            w.write_record([
                r.canonical_smiles.clone(),
                format!("{}", r.pic50),
                r.source_count.to_string(),
            ])
            .expect("in-memory");
        }
        String::from_utf8(w.into_inner().expect("flushed")).expect("utf8")
    }

    pub fn log_lines(&self) -> String {
        self.dropped
            .iter()
            .map(|(line, reason)| format!("row {line}: {reason}\n"))
            .collect()
    }
}

/// Curates a raw CSV. Accepts either raw rows (`smiles`, `ic50_nm`) or
/// already-curated rows (`canonical_smiles`, `pic50`), so re-ingesting the
/// output is a fixed point.
pub fn ingest(csv_text: &str) -> Result<CurationOutcome, PipelineError> {
    let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| PipelineError::Io(e.to_string()))?
        .clone();
    let find = |name: &str| headers.iter().position(|h| h == name);

    let (smiles_col, value_col, value_is_pic50) =
        match (find("smiles"), find("ic50_nm"), find("canonical_smiles"), find("pic50")) {
            (Some(s), Some(v), _, _) => (s, v, false),
            (_, _, Some(s), Some(v)) => (s, v, true),
            (Some(_), None, _, _) | (None, Some(_), _, _) => {
                let missing = if find("smiles").is_none() { "smiles" } else { "ic50_nm" };
                return Err(PipelineError::MissingColumn(missing.into()));
            }
            _ => return Err(PipelineError::MissingColumn("smiles".into())),
        };
    let count_col = find("source_count");

    let mut merged: BTreeMap<String, (f64, u32)> = BTreeMap::new();
    let mut dropped = Vec::new();
    for (idx, row) in reader.records().enumerate() {
        let line = idx + 2; // header is line 1
        let row = row.map_err(|e| PipelineError::Io(e.to_string()))?;
        let smiles = row.get(smiles_col).unwrap_or("").trim();
        let raw_value = row.get(value_col).unwrap_or("").trim();

        let mol = match parse_smiles(smiles) {
            Ok(m) => m,
            Err(e) => {
                dropped.push((line, format!("unparseable smiles '{smiles}': {e}")));
                continue;
            }
        };
        let weight = mol_weight(&mol);
        if weight > MAX_WEIGHT_DA {
            dropped.push((line, format!("molecular weight {weight:.1} Da over the cap")));
            continue;
        }
        let value: f64 = match raw_value.parse() {
            Ok(v) => v,
            Err(_) => {
                dropped.push((line, format!("bad numeric value '{raw_value}'")));
                continue;
            }
        };
        let pic50 = if value_is_pic50 {
            value
        } else {
            match pic50_from_ic50(value) {
                Ok(p) => p,
                Err(e) => {
                    dropped.push((line, e.to_string()));
                    continue;
                }
            }
        };
        if !pic50.is_finite() {
            dropped.push((line, format!("non-finite potency {pic50}")));
            continue;
        }
        // curated input carries how many raw rows were already merged
        let weight: u32 = count_col
            .and_then(|c| row.get(c))
            .and_then(|v| v.trim().parse().ok())
            .unwrap_or(1);
        let key = canonical_smiles(&mol).into_string();
        let entry = merged.entry(key).or_insert((0.0, 0));
        entry.0 += pic50 * weight as f64;
        entry.1 += weight;
    }

    let records: Vec<DatasetRecord> = merged
        .into_iter()
        .map(|(canonical_smiles, (sum, count))| DatasetRecord {
            canonical_smiles,
            pic50: sum / count as f64,
            source_count: count,
        })
        .collect();
    if records.is_empty() {
        return Err(PipelineError::EmptyAfterCuration);
    }
    Ok(CurationOutcome { records, dropped })
}

/// Reads a curated CSV back into records.
pub fn read_curated(csv_text: &str) -> Result<Vec<DatasetRecord>, PipelineError> {
    let outcome = ingest(csv_text)?;
    Ok(outcome.records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_measurements_merge_by_mean() {
        let csv = "smiles,ic50_nm\nCCO,10\nOCC,1000\n";
        let out = ingest(csv).unwrap();
        assert_eq!(out.records.len(), 1);
        let r = &out.records[0];
        assert!((r.pic50 - 7.0).abs() < 1e-12, "mean of 8 and 6, got {}", r.pic50);
        assert_eq!(r.source_count, 2);
    }

    #[test]
    fn heavy_molecules_dropped_with_log() {
        // 90 carbons is over 1000 Da
        let big = "C".repeat(90);
        let csv = format!("smiles,ic50_nm\n{big},5\nCCO,5\n");
        let out = ingest(&csv).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.dropped.len(), 1);
        assert!(out.dropped[0].1.contains("weight"));
    }

    #[test]
    fn metal_rows_dropped_with_log() {
        let csv = "smiles,ic50_nm\n[Fe]CC,5\nCCO,5\n";
        let out = ingest(csv).unwrap();
        assert_eq!(out.records.len(), 1);
        assert!(out.dropped[0].1.contains("unparseable"));
    }

    #[test]
    fn all_invalid_is_an_error() {
        let csv = "smiles,ic50_nm\nnot_a_molecule,5\nC(,7\n";
        assert!(matches!(ingest(csv), Err(PipelineError::EmptyAfterCuration)));
    }

    #[test]
    fn missing_column_is_an_error() {
        let csv = "smiles,activity\nCCO,5\n";
        assert!(matches!(ingest(csv), Err(PipelineError::MissingColumn(c)) if c == "ic50_nm"));
    }

    #[test]
    fn nonpositive_ic50_dropped() {
        let csv = "smiles,ic50_nm\nCCO,0\nCCC,-4\nCCN,10\n";
        let out = ingest(csv).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.dropped.len(), 2);
    }

    #[test]
    fn ingest_of_ingest_output_is_fixed_point() {
        let csv = "smiles,ic50_nm\nCCO,10\nOCC,1000\nc1ccccc1,25\nCC(=O)O,3.5\n";
        let first = ingest(csv).unwrap();
        let second = ingest(&first.to_csv()).unwrap();
        assert_eq!(first.records, second.records);
        assert!(second.dropped.is_empty());
        let third = ingest(&second.to_csv()).unwrap();
        assert_eq!(second.records, third.records);
    }
}
