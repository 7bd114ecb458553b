//! File formats: CSV matrices and vectors (comma separated, `.` decimals, no
//! header) and a JSON model object `{"n": .., "pi": [..], "matrix": [[..]]}`.
//! Partitions travel as JSON lists of 1-based state lists.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::partition::OrbitPartition;

/// JSON model file: a distribution and an optional transition matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub n: usize,
    pub pi: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
}

impl ModelFile {
    pub fn distribution(&self) -> Result<Distribution> {
        if self.pi.len() != self.n {
            return Err(Error::Parse(format!(
                "pi has {} entries, n = {}",
                self.pi.len(),
                self.n
            )));
        }
        Distribution::new(self.pi.clone())
    }

    pub fn matrix(&self) -> Result<Option<DMatrix<f64>>> {
        match &self.matrix {
            None => Ok(None),
            Some(rows) => {
                if rows.len() != self.n || rows.iter().any(|r| r.len() != self.n) {
                    return Err(Error::Parse(format!("matrix is not {0}x{0}", self.n)));
                }
                let flat: Vec<f64> = rows.iter().flatten().copied().collect();
                Ok(Some(DMatrix::from_row_slice(self.n, self.n, &flat)))
            }
        }
    }
}

pub fn read_model_json(path: &Path) -> Result<ModelFile> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn write_model_json(path: &Path, model: &ModelFile) -> Result<()> {
    let text = serde_json::to_string_pretty(model).map_err(|e| Error::Parse(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn parse_float(field: &str, context: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("{context}: `{field}`: {e}")))
}

/// One comma-separated row of floats per line; no header.
pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| parse_float(f, &format!("{}:{}", path.display(), lineno + 1)))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse(format!("{}: empty matrix", path.display())));
    }
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Parse(format!("{}: ragged rows", path.display())));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(rows.len(), ncols, &flat))
}

pub fn write_matrix_csv(path: &Path, matrix: &DMatrix<f64>) -> Result<()> {
    let mut out = String::new();
    for x in 0..matrix.nrows() {
        let row: Vec<String> = (0..matrix.ncols()).map(|y| matrix[(x, y)].to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// One float per line or one comma-separated line.
pub fn read_distribution_csv(path: &Path) -> Result<Distribution> {
    let m = read_matrix_csv(path)?;
    let values: Vec<f64> = if m.ncols() == 1 {
        (0..m.nrows()).map(|x| m[(x, 0)]).collect()
    } else if m.nrows() == 1 {
        (0..m.ncols()).map(|y| m[(0, y)]).collect()
    } else {
        return Err(Error::Parse(format!(
            "{}: expected a vector, found {}x{}",
            path.display(),
            m.nrows(),
            m.ncols()
        )));
    };
    Distribution::new(values)
}

/// JSON list of integer lists with 1-based state indices.
pub fn read_partition_json(path: &Path, n: usize) -> Result<OrbitPartition> {
    let text = std::fs::read_to_string(path)?;
    let raw: Vec<Vec<usize>> = serde_json::from_str(&text)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    partition_from_one_based(n, raw)
}

pub fn partition_from_one_based(n: usize, blocks: Vec<Vec<usize>>) -> Result<OrbitPartition> {
    let zero_based: Vec<Vec<usize>> = blocks
        .into_iter()
        .map(|block| {
            block
                .into_iter()
                .map(|x| {
                    x.checked_sub(1)
                        .ok_or_else(|| Error::Parse("state indices are 1-based".into()))
                })
                .collect::<Result<Vec<usize>>>()
        })
        .collect::<Result<Vec<Vec<usize>>>>()?;
    OrbitPartition::new(n, zero_based)
}

pub fn partition_to_one_based(part: &OrbitPartition) -> Vec<Vec<usize>> {
    part.orbits()
        .iter()
        .map(|o| o.iter().map(|x| x + 1).collect())
        .collect()
}

pub fn write_partition_json(path: &Path, part: &OrbitPartition) -> Result<()> {
    let text = serde_json::to_string(&partition_to_one_based(part))
        .map_err(|e| Error::Parse(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_json_round_trip() {
        let dir = std::env::temp_dir().join("orbit_mcmc_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("model.json");
        let model = ModelFile {
            n: 2,
            pi: vec![0.25, 0.75],
            matrix: Some(vec![vec![0.5, 0.5], vec![1.0 / 6.0, 5.0 / 6.0]]),
        };
        write_model_json(&path, &model).unwrap();
        let back = read_model_json(&path).unwrap();
        assert_eq!(back.pi, model.pi);
        let m = back.matrix().unwrap().unwrap();
        assert!((m[(1, 0)] - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn matrix_csv_round_trip() {
        let dir = std::env::temp_dir().join("orbit_mcmc_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("matrix.csv");
        let m = DMatrix::from_row_slice(2, 2, &[0.1, 0.9, 0.3, 0.7]);
        write_matrix_csv(&path, &m).unwrap();
        let back = read_matrix_csv(&path).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn partition_round_trip_is_one_based() {
        let dir = std::env::temp_dir().join("orbit_mcmc_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("partition.json");
        let part = OrbitPartition::new(4, vec![vec![0, 2], vec![1, 3]]).unwrap();
        write_partition_json(&path, &part).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.trim(), "[[1,3],[2,4]]");
        let back = read_partition_json(&path, 4).unwrap();
        assert_eq!(back.orbits(), part.orbits());
    }

    #[test]
    fn rejects_zero_based_partition_file() {
        assert!(partition_from_one_based(2, vec![vec![0, 1]]).is_err());
    }
}
