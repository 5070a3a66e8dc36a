//! JSON documents: ensembles, matrices, subspaces and stage artifacts.

use std::fs;
use std::path::Path;

use darktraj_core::channel::{KrausEnsemble, KrausItem};
use darktraj_core::{CMatrix, Subspace, C64};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Matrix as rows of `[re, im]` pairs.
pub type MatrixDoc = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_doc(m: &CMatrix) -> MatrixDoc {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn matrix_from_doc(doc: &MatrixDoc) -> Result<CMatrix, String> {
    let rows = doc.len();
    let cols = doc.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Err("empty matrix".into());
    }
    if doc.iter().any(|r| r.len() != cols) {
        return Err("ragged matrix rows".into());
    }
    Ok(CMatrix::from_fn(rows, cols, |i, j| {
        C64::new(doc[i][j][0], doc[i][j][1])
    }))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct KrausDoc {
    pub weight: f64,
    pub matrix: MatrixDoc,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EnsembleDoc {
    pub dim: usize,
    pub kraus: Vec<KrausDoc>,
}

impl EnsembleDoc {
    pub fn from_ensemble(e: &KrausEnsemble) -> Self {
        EnsembleDoc {
            dim: e.dim(),
            kraus: e
                .items()
                .iter()
                .map(|it| KrausDoc {
                    weight: it.weight,
                    matrix: matrix_to_doc(&it.matrix),
                })
                .collect(),
        }
    }

    /// Builds the ensemble without checking stochasticity.
    pub fn to_ensemble(&self) -> Result<KrausEnsemble, String> {
        let mut items = Vec::with_capacity(self.kraus.len());
        for (k, doc) in self.kraus.iter().enumerate() {
            let m = matrix_from_doc(&doc.matrix).map_err(|e| format!("kraus[{k}]: {e}"))?;
            if m.nrows() != self.dim || m.ncols() != self.dim {
                return Err(format!(
                    "kraus[{k}] is {}x{}, expected {}x{}",
                    m.nrows(),
                    m.ncols(),
                    self.dim,
                    self.dim
                ));
            }
            items.push(KrausItem::new(doc.weight, m));
        }
        KrausEnsemble::new(items).map_err(|e| e.to_string())
    }
}

pub fn read_ensemble(path: &Path) -> Result<KrausEnsemble, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let doc: EnsembleDoc = serde_json::from_str(&text).map_err(|e| CliError::io(path, e))?;
    doc.to_ensemble().map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubspaceDoc {
    pub dim: usize,
    /// Orthonormal columns.
    pub basis: MatrixDoc,
}

impl SubspaceDoc {
    pub fn from_subspace(q: &Subspace) -> Self {
        SubspaceDoc {
            dim: q.dim(),
            basis: matrix_to_doc(q.basis()),
        }
    }

    pub fn to_subspace(&self) -> Result<Subspace, String> {
        let m = matrix_from_doc(&self.basis)?;
        Subspace::span(&m).map_err(|e| e.to_string())
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::io(path, e))
}

/// A header row and numeric rows, written as CSV or as a JSON array of
/// objects.
#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path, format: OutputFormat) -> Result<(), CliError> {
        match format {
            OutputFormat::Csv => {
                let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
                w.write_record(&self.columns).map_err(|e| CliError::io(path, e))?;
                for row in &self.rows {
                    w.write_record(row.iter().map(|x| format_number(*x)))
                        .map_err(|e| CliError::io(path, e))?;
                }
                w.flush().map_err(|e| CliError::io(path, e))
            }
            OutputFormat::Json => {
                let records: Vec<serde_json::Map<String, serde_json::Value>> = self
                    .rows
                    .iter()
                    .map(|row| {
                        self.columns
                            .iter()
                            .zip(row)
                            .map(|(c, x)| (c.clone(), number_value(*x)))
                            .collect()
                    })
                    .collect();
                write_json(path, &records)
            }
        }
    }
}

/// Integers print without a fractional part, everything else with the
/// shortest round-tripping representation.
fn format_number(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x:?}")
    }
}

fn number_value(x: f64) -> serde_json::Value {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        serde_json::Value::from(x as i64)
    } else {
        serde_json::Number::from_f64(x).map_or(serde_json::Value::Null, serde_json::Value::Number)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}
