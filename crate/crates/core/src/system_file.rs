//! System ingestion: a JSON document `{"A": [[..]], "C": [[..]], "x0": [..]}`
//! or a pair of headerless CSV files holding `A` and `C`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::lti::LtiSystem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemFile {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
}

pub struct LoadedSystem {
    pub system: LtiSystem,
    pub x0: Option<Vector>,
}

pub fn matrix_from_rows(rows: &[Vec<f64>], name: &str) -> Result<Matrix> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || ncols == 0 {
        return Err(Error::Parse(format!("matrix {name} is empty")));
    }
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
        return Err(Error::Parse(format!(
            "matrix {name} is not rectangular: row {i} has {} entries, expected {ncols}",
            r.len()
        )));
    }
    Ok(Matrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

impl SystemFile {
    pub fn from_system(sys: &LtiSystem, x0: Option<&Vector>) -> Self {
        Self {
            a: linalg::to_rows(sys.a()),
            c: linalg::to_rows(sys.c()),
            x0: x0.map(|v| v.iter().copied().collect()),
        }
    }

    pub fn into_system(self) -> Result<LoadedSystem> {
        let system = LtiSystem::new(matrix_from_rows(&self.a, "A")?, matrix_from_rows(&self.c, "C")?)?;
        let x0 = match self.x0 {
            Some(v) if v.len() != system.n() => {
                return Err(Error::DimensionMismatch(format!(
                    "x0 has length {}, expected {}",
                    v.len(),
                    system.n()
                )))
            }
            Some(v) => Some(Vector::from_vec(v)),
            None => None,
        };
        Ok(LoadedSystem { system, x0 })
    }
}

pub fn parse_system_json(text: &str) -> Result<LoadedSystem> {
    let file: SystemFile = serde_json::from_str(text)?;
    file.into_system()
}

pub fn load_system_json(path: &Path) -> Result<LoadedSystem> {
    parse_system_json(&fs::read_to_string(path)?)
}

pub fn parse_matrix_csv(text: &str, name: &str) -> Result<Matrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let row = record
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| Error::Parse(format!("matrix {name}: bad number '{f}'"))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    matrix_from_rows(&rows, name)
}

pub fn load_system_csv(a_path: &Path, c_path: &Path) -> Result<LtiSystem> {
    let a = parse_matrix_csv(&fs::read_to_string(a_path)?, "A")?;
    let c = parse_matrix_csv(&fs::read_to_string(c_path)?, "C")?;
    LtiSystem::new(a, c)
}
