use std::io::Read;

use serde::Serialize;

use super::{feature_key, RuleError};

/// Feature values for one record. Feature names are matched ignoring case
/// and runs of whitespace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatientRecord {
    pub record_id: String,
    features: Vec<(String, f64)>,
}

impl PatientRecord {
    pub fn new<I>(record_id: impl Into<String>, features: I) -> Result<Self, RuleError>
    where
        I: IntoIterator<Item = (String, f64)>,
    {
        let record_id = record_id.into();
        let mut out: Vec<(String, f64)> = Vec::new();
        for (name, v) in features {
            let key = feature_key(&name);
            if out.iter().any(|(n, _)| feature_key(n) == key) {
                return Err(RuleError::DuplicateFeature {
                    record_id,
                    feature: name,
                });
            }
            out.push((name, v));
        }
        Ok(Self {
            record_id,
            features: out,
        })
    }

    pub fn get(&self, feature: &str) -> Option<f64> {
        let key = feature_key(feature);
        self.features
            .iter()
            .find(|(n, _)| feature_key(n) == key)
            .map(|(_, v)| *v)
    }

    pub fn features(&self) -> &[(String, f64)] {
        &self.features
    }
}

/// Read records from CSV: a header row of feature names with the record id
/// in the first column, then one row per record. Empty cells leave the
/// feature unset.
pub fn parse_records<R: Read>(reader: R) -> Result<Vec<PatientRecord>, RuleError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(reader);
    let err = |line: usize, message: String| RuleError::Records { line, message };

    let headers = rdr
        .headers()
        .map_err(|e| err(1, e.to_string()))?
        .clone();
    if headers.len() < 2 {
        return Err(err(1, "header needs a record id column and at least one feature".into()));
    }
    let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    if let Some(empty) = names.iter().position(|n| n.is_empty()) {
        return Err(err(1, format!("column {} has an empty feature name", empty + 2)));
    }

    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let line = row + 2;
        let rec = rec.map_err(|e| err(line, e.to_string()))?;
        let id = rec.get(0).unwrap_or_default().to_string();
        if id.is_empty() {
            return Err(err(line, "empty record id".into()));
        }
        let mut feats = Vec::new();
        for (name, cell) in names.iter().zip(rec.iter().skip(1)) {
            if cell.is_empty() {
                continue;
            }
            let v: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| err(line, format!("{name}: {cell:?} is not a finite number")))?;
            feats.push((name.clone(), v));
        }
        out.push(PatientRecord::new(id, feats)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_rows_and_skips_blank_cells() {
        let csv = "record_id, Albumin, Lipase\nP1, 37, 47.8\nP2, 44.2,\n";
        let recs = parse_records(csv.as_bytes()).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].get("albumin"), Some(37.0));
        assert_eq!(recs[1].get("Lipase"), None);
    }

    #[test]
    fn reports_line_of_bad_cell() {
        let csv = "id,Albumin\nP1,37\nP2,abc\n";
        assert!(matches!(
            parse_records(csv.as_bytes()),
            Err(RuleError::Records { line: 3, .. })
        ));
        assert!(matches!(
            parse_records("id,A,a\nP1,1,2\n".as_bytes()),
            Err(RuleError::DuplicateFeature { .. })
        ));
        assert!(parse_records("id\nP1\n".as_bytes()).is_err());
        assert!(parse_records("id,A\nP1,1,2\n".as_bytes()).is_err());
    }
}
