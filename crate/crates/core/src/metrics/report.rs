use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One CSV row: a method evaluated on one dataset. Unmeasured fields are empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub dataset: String,
    pub method: String,
    pub mse: Option<f64>,
    pub psnr_db: Option<f64>,
    pub ssim: Option<f64>,
    pub snr_db: Option<f64>,
    pub es_mean: Option<f64>,
    pub es_std_t: Option<f64>,
}

impl QualityReport {
    pub fn new(dataset: impl Into<String>, method: impl Into<String>) -> Self {
        Self {
            dataset: dataset.into(),
            method: method.into(),
            mse: None,
            psnr_db: None,
            ssim: None,
            snr_db: None,
            es_mean: None,
            es_std_t: None,
        }
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Format(format!("{}: {e}", path.display()))
}

/// Write rows with the header `dataset,method,mse,psnr_db,ssim,snr_db,es_mean,es_std_t`,
/// appending (without a second header) when `append` is set and the file exists.
pub fn write_reports(path: &Path, rows: &[QualityReport], append: bool) -> Result<()> {
    let exists = append && path.exists() && std::fs::metadata(path).map(|m| m.len() > 0).unwrap_or(false);
    let file = std::fs::OpenOptions::new()
        .create(true)
        .write(true)
        .append(append)
        .truncate(!append)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(!exists).from_writer(file);
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_reports(path: &Path) -> Result<Vec<QualityReport>> {
    if !path.exists() {
        return Err(Error::Missing(path.to_path_buf()));
    }
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header: Vec<String> = r
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(String::from)
        .collect();
    let expected = [
        "dataset", "method", "mse", "psnr_db", "ssim", "snr_db", "es_mean", "es_std_t",
    ];
    if header != expected {
        return Err(Error::Format(format!(
            "{}: unexpected columns {header:?}",
            path.display()
        )));
    }
    r.deserialize().map(|row| row.map_err(|e| csv_err(path, e))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_with_append() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("q.csv");
        let mut a = QualityReport::new("v0", "zf");
        a.psnr_db = Some(21.5);
        let mut b = QualityReport::new("v0", "cs");
        b.ssim = Some(0.75);
        write_reports(&p, &[a.clone()], true).unwrap();
        write_reports(&p, &[b.clone()], true).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("dataset,method,mse,psnr_db,ssim,snr_db,es_mean,es_std_t\n"));
        assert_eq!(text.lines().count(), 3);
        assert_eq!(read_reports(&p).unwrap(), vec![a, b]);
    }
}
