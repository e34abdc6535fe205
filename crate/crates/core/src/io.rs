//! Matrix files: raw little-endian row-major f64 (`.bin`) with a JSON
//! sidecar (`.json`) holding the shape and free-form metadata.

use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::datagen::{DataMatrixPair, Provenance};
use crate::error::{Error, Result};

pub const MATRIX_FORMAT: &str = "sdrkit-matrix-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixHeader {
    pub format: String,
    pub rows: usize,
    pub cols: usize,
    pub dtype: String,
    pub order: String,
    #[serde(default)]
    pub meta: serde_json::Value,
}

pub fn sidecar_path(bin: &Path) -> PathBuf {
    bin.with_extension("json")
}

pub fn write_matrix(path: &Path, m: &Array2<f64>, meta: serde_json::Value) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let mut bytes = Vec::with_capacity(m.len() * 8);
    for v in m.iter() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, bytes)?;
    let header = MatrixHeader {
        format: MATRIX_FORMAT.into(),
        rows: m.nrows(),
        cols: m.ncols(),
        dtype: "f64-le".into(),
        order: "row-major".into(),
        meta,
    };
    std::fs::write(sidecar_path(path), serde_json::to_string_pretty(&header)?)?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<(Array2<f64>, MatrixHeader)> {
    let header: MatrixHeader = serde_json::from_str(&std::fs::read_to_string(sidecar_path(path))?)?;
    if header.format != MATRIX_FORMAT {
        return Err(Error::Config(format!("unsupported matrix format `{}`", header.format)));
    }
    let bytes = std::fs::read(path)?;
    if bytes.len() != header.rows * header.cols * 8 {
        return Err(Error::shape(format!(
            "{} holds {} bytes, header says {}x{}",
            path.display(),
            bytes.len(),
            header.rows,
            header.cols
        )));
    }
    let data: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let m = Array2::from_shape_vec((header.rows, header.cols), data).map_err(|e| Error::shape(e.to_string()))?;
    Ok((m, header))
}

/// Plain CSV export without a header.
pub fn write_matrix_csv(path: &Path, m: &Array2<f64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Config(format!("csv: {e}")))?;
    for row in m.rows() {
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(|e| Error::Config(format!("csv: {e}")))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `<dir>/<stem>_x.bin` and `<dir>/<stem>_y.bin` with sidecars
/// carrying provenance and the true MI.
pub fn write_pair(dir: &Path, stem: &str, pair: &DataMatrixPair) -> Result<(PathBuf, PathBuf)> {
    let meta = |view: &str| {
        serde_json::json!({
            "view": view,
            "provenance": pair.provenance,
            "true_mi": pair.true_mi,
        })
    };
    let px = dir.join(format!("{stem}_x.bin"));
    let py = dir.join(format!("{stem}_y.bin"));
    write_matrix(&px, &pair.x, meta("x"))?;
    write_matrix(&py, &pair.y, meta("y"))?;
    if let Some(p) = &pair.shared_latent {
        write_matrix(&dir.join(format!("{stem}_shared.bin")), p, meta("shared_latent"))?;
    }
    Ok((px, py))
}

/// Reads two view files written by [`write_pair`] (or any two matrices
/// with equal row counts).
pub fn read_pair(x_path: &Path, y_path: &Path) -> Result<DataMatrixPair> {
    let (x, hx) = read_matrix(x_path)?;
    let (y, _) = read_matrix(y_path)?;
    if x.nrows() != y.nrows() {
        return Err(Error::shape(format!("views have {} and {} rows", x.nrows(), y.nrows())));
    }
    let provenance = serde_json::from_value::<Provenance>(hx.meta["provenance"].clone())
        .unwrap_or_else(|_| Provenance::new("file", vec![], serde_json::json!({ "x": x_path, "y": y_path })));
    let true_mi = hx.meta["true_mi"].as_f64();
    Ok(DataMatrixPair { x, y, provenance, true_mi, shared_latent: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate_gaussian_pair, GaussianPairSpec};

    #[test]
    fn matrix_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let m = Array2::from_shape_fn((3, 4), |(i, j)| (i as f64 + 0.1).powf(j as f64 + 0.3) - 1.0 / 3.0);
        let p = dir.path().join("a/m.bin");
        write_matrix(&p, &m, serde_json::json!({"k": 1})).unwrap();
        let (back, h) = read_matrix(&p).unwrap();
        assert_eq!(back, m);
        assert_eq!(h.meta["k"], 1);
        assert_eq!(std::fs::metadata(&p).unwrap().len(), 96);
        // First value is stored little-endian at offset 0.
        let raw = std::fs::read(&p).unwrap();
        assert_eq!(f64::from_le_bytes(raw[..8].try_into().unwrap()), m[[0, 0]]);
    }

    #[test]
    fn truncated_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.bin");
        write_matrix(&p, &Array2::zeros((2, 2)), serde_json::Value::Null).unwrap();
        std::fs::write(&p, [0u8; 8]).unwrap();
        assert!(matches!(read_matrix(&p), Err(Error::Shape(_))));
    }

    #[test]
    fn pair_round_trip_keeps_metadata() {
        let dir = tempfile::tempdir().unwrap();
        let d = generate_gaussian_pair(&GaussianPairSpec::uniform(2, 1.0, 10, 4)).unwrap();
        let (px, py) = write_pair(dir.path(), "g", &d).unwrap();
        let back = read_pair(&px, &py).unwrap();
        assert_eq!(back.x, d.x);
        assert_eq!(back.true_mi, d.true_mi);
        assert_eq!(back.provenance, d.provenance);
    }
}
