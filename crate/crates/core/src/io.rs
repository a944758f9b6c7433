//! CSV import and export of survival datasets.
//!
//! Layout: an optional `id` column, `time`, `status` (0/1), then one column
//! per covariate. Empty cells and `NA` read as missing.

use std::path::Path;

use ndarray::Array2;

use crate::data::SurvivalDataset;
use crate::error::{Error, Result};

pub fn write_csv(data: &SurvivalDataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    write_records(data, &mut w, None)?;
    w.flush()?;
    Ok(())
}

/// Writes with the given covariate names (defaults `x1..xp`).
pub fn write_records<W: std::io::Write>(data: &SurvivalDataset, w: &mut csv::Writer<W>, names: Option<&[String]>) -> Result<()> {
    let mut header = vec!["id".to_string(), "time".into(), "status".into()];
    match names {
        Some(n) if n.len() == data.p() => header.extend(n.iter().cloned()),
        Some(n) => return Err(Error::DimensionMismatch(format!("{} names for {} covariates", n.len(), data.p()))),
        None => header.extend((1..=data.p()).map(|j| format!("x{j}"))),
    }
    w.write_record(&header)?;
    for (i, row) in data.covariates().rows().into_iter().enumerate() {
        let mut record = vec![data.ids()[i].clone(), data.times()[i].to_string(), u8::from(data.status()[i]).to_string()];
        record.extend(row.iter().map(|v| if v.is_nan() { String::new() } else { v.to_string() }));
        w.write_record(&record)?;
    }
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<SurvivalDataset> {
    read_records(csv::Reader::from_path(path)?).map(|(d, _)| d)
}

/// Reads a dataset and its covariate names.
pub fn read_records<R: std::io::Read>(mut r: csv::Reader<R>) -> Result<(SurvivalDataset, Vec<String>)> {
    let header = r.headers()?.clone();
    let find = |name: &str| header.iter().position(|h| h.trim().eq_ignore_ascii_case(name));
    let time_col = find("time").ok_or_else(|| Error::InvalidInput("missing 'time' column".into()))?;
    let status_col = find("status").ok_or_else(|| Error::InvalidInput("missing 'status' column".into()))?;
    let id_col = find("id");
    let cov_cols: Vec<usize> = (0..header.len()).filter(|&c| c != time_col && c != status_col && Some(c) != id_col).collect();
    let names: Vec<String> = cov_cols.iter().map(|&c| header[c].to_string()).collect();

    let parse = |s: &str, row: usize, col: usize| -> Result<f64> {
        let s = s.trim();
        if s.is_empty() || s.eq_ignore_ascii_case("na") || s.eq_ignore_ascii_case("nan") {
            return Ok(f64::NAN);
        }
        s.parse::<f64>().map_err(|_| Error::InvalidInput(format!("row {row}, column '{}': cannot parse '{s}'", &header[col])))
    };
    let (mut times, mut codes, mut ids, mut values) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (row, record) in r.records().enumerate() {
        let record = record?;
        times.push(parse(&record[time_col], row, time_col)?);
        let code = parse(&record[status_col], row, status_col)?;
        codes.push(match code {
            c if c == 0.0 => 0u8,
            c if c == 1.0 => 1u8,
            _ => return Err(Error::InvalidInput(format!("row {row}: status '{}' not in {{0,1}}", &record[status_col]))),
        });
        ids.push(id_col.map_or_else(|| format!("obs{}", row + 1), |c| record[c].to_string()));
        for &c in &cov_cols {
            values.push(parse(&record[c], row, c)?);
        }
    }
    let x = Array2::from_shape_vec((times.len(), cov_cols.len()), values).map_err(|e| Error::DimensionMismatch(e.to_string()))?;
    let status = codes.iter().map(|&c| c == 1).collect();
    Ok((SurvivalDataset::with_ids(times, status, x, ids)?, names))
}
