//! Data and curve files. Floats are written with 17 significant digits so a
//! value read back is bit-identical to the one written.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use quantmatch::{DesignSpec, ModelKind};

use crate::error::{CliError, Result};

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub struct DataSet {
    pub y: Vec<f64>,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

impl DataSet {
    pub fn design(&self, model: ModelKind) -> Result<DesignSpec> {
        Ok(DesignSpec::from_labels(self.rows.clone(), self.cols.clone(), model)?)
    }
}

pub fn write_data(path: &Path, y: &[f64], design: &DesignSpec) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(CliError::csv(path))?;
    w.write_record(["index", "row", "col", "y"]).map_err(CliError::csv(path))?;
    for (i, ((v, r), c)) in y.iter().zip(design.rows()).zip(design.cols()).enumerate() {
        w.write_record([i.to_string(), r.to_string(), c.to_string(), fmt_f64(*v)])
            .map_err(CliError::csv(path))?;
    }
    w.flush().map_err(CliError::io(path))
}

pub fn read_data(path: &Path) -> Result<DataSet> {
    let mut r = csv::Reader::from_path(path).map_err(CliError::csv(path))?;
    let headers = r.headers().map_err(CliError::csv(path))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["index", "row", "col", "y"] {
        return Err(CliError::Data(format!(
            "{}: expected header index,row,col,y, found {}",
            path.display(),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let bad = |line: usize, what: &str, raw: &str| {
        CliError::Data(format!("{}: record {line}: cannot parse {what} {raw:?}", path.display()))
    };
    let mut data = DataSet { y: Vec::new(), rows: Vec::new(), cols: Vec::new() };
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(CliError::csv(path))?;
        let index: usize = rec[0].trim().parse().map_err(|_| bad(k + 1, "index", &rec[0]))?;
        if index != k {
            return Err(CliError::Data(format!(
                "{}: record {} has index {index}; indices must run 0, 1, 2, ...",
                path.display(),
                k + 1
            )));
        }
        data.rows.push(rec[1].trim().parse().map_err(|_| bad(k + 1, "row", &rec[1]))?);
        data.cols.push(rec[2].trim().parse().map_err(|_| bad(k + 1, "col", &rec[2]))?);
        data.y.push(rec[3].trim().parse().map_err(|_| bad(k + 1, "y", &rec[3]))?);
    }
    if data.y.is_empty() {
        return Err(CliError::Data(format!("{}: no data rows", path.display())));
    }
    Ok(data)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CurveRow {
    pub param: f64,
    pub value: f64,
    pub det_term: f64,
    pub jacobian_term: f64,
}

/// Failed grid points are written with empty value columns.
pub fn write_curve(path: &Path, rows: &[(f64, Option<CurveRow>)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(CliError::csv(path))?;
    w.write_record(["param", "value", "det_term", "jacobian_term"]).map_err(CliError::csv(path))?;
    for (param, row) in rows {
        let fields = match row {
            Some(r) => [fmt_f64(*param), fmt_f64(r.value), fmt_f64(r.det_term), fmt_f64(r.jacobian_term)],
            None => [fmt_f64(*param), String::new(), String::new(), String::new()],
        };
        w.write_record(&fields).map_err(CliError::csv(path))?;
    }
    w.flush().map_err(CliError::io(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(CliError::io(path))
}

/// `data.csv` -> `data.manifest.json`.
pub fn manifest_path(data: &Path) -> PathBuf {
    data.with_extension("manifest.json")
}

/// `PREFIX` + `suffix`, keeping any directories in the prefix.
pub fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 5.000000000000001, f64::MAX, 6.02214076e23] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        assert_eq!(fmt_f64(1.5), "1.5000000000000000e0");
    }

    #[test]
    fn suffix_keeps_directories() {
        assert_eq!(with_suffix(Path::new("out/run1"), ".curve.csv"), PathBuf::from("out/run1.curve.csv"));
        assert_eq!(manifest_path(Path::new("d/sim.csv")), PathBuf::from("d/sim.manifest.json"));
    }
}
