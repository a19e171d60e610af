//! Feature-matrix table: `label,<bssid...>` header, one row per snapshot,
//! −100 for devices a snapshot did not hear.

use std::fmt::Write as _;
use std::path::Path;

use roomloc_core::features::FeatureMatrix;
use roomloc_core::types::{Bssid, FILL_DBM};

use super::{check_writable, data_lines, malformed, FormatError};

pub fn parse_str(content: &str, origin: &str) -> Result<FeatureMatrix, FormatError> {
    let mut lines = data_lines(content);
    let (header_no, header) = lines
        .next()
        .ok_or_else(|| malformed(origin, 1, "missing header line"))?;
    let mut cols = header.split(',');
    if cols.next() != Some("label") {
        return Err(malformed(
            origin,
            header_no,
            "header must start with 'label'",
        ));
    }
    let device_universe: Vec<Bssid> = cols
        .map(|c| Bssid::parse(c).map_err(|e| malformed(origin, header_no, e.to_string())))
        .collect::<Result<_, _>>()?;

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (line_no, line) in lines {
        let mut fields = line.split(',');
        let label = fields.next().unwrap_or("");
        if label.is_empty() {
            return Err(malformed(origin, line_no, "empty label"));
        }
        let row: Vec<f64> = fields
            .map(|f| {
                let v: f64 = f
                    .parse()
                    .map_err(|_| malformed(origin, line_no, format!("invalid value {f:?}")))?;
                if v != FILL_DBM && !(-99.0..=0.0).contains(&v) {
                    return Err(malformed(
                        origin,
                        line_no,
                        format!("value {v} is neither fill nor in [-99, 0]"),
                    ));
                }
                Ok(v)
            })
            .collect::<Result<_, _>>()?;
        if row.len() != device_universe.len() {
            return Err(malformed(
                origin,
                line_no,
                format!(
                    "expected {} values, found {}",
                    device_universe.len(),
                    row.len()
                ),
            ));
        }
        rows.push(row);
        labels.push(label.to_string());
    }

    let matrix = FeatureMatrix {
        device_universe,
        rows,
        labels,
    };
    matrix
        .validate()
        .map_err(|e| malformed(origin, header_no, e.to_string()))?;
    Ok(matrix)
}

pub fn to_string(matrix: &FeatureMatrix) -> Result<String, FormatError> {
    matrix
        .validate()
        .map_err(|e| malformed("<matrix>", 0, e.to_string()))?;
    let mut out = String::from("label");
    for dev in &matrix.device_universe {
        write!(out, ",{dev}").unwrap();
    }
    out.push('\n');
    for (row, label) in matrix.rows.iter().zip(&matrix.labels) {
        check_writable("label", label)?;
        out.push_str(label);
        for v in row {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn read_file(path: &Path) -> Result<FeatureMatrix, FormatError> {
    let content = std::fs::read_to_string(path)?;
    parse_str(&content, &path.display().to_string())
}

pub fn write_file(path: &Path, matrix: &FeatureMatrix) -> Result<(), FormatError> {
    std::fs::write(path, to_string(matrix)?)?;
    Ok(())
}
