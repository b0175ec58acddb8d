//! Test suites (covering arrays) and their CSV/JSON forms.
//!
//! On disk, cells are level names rather than indices. The CSV header names
//! the factors; columns may appear in any order. The JSON form embeds the
//! model's factors and the strength the suite was generated for.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Assignment, Model};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SuiteError {
    #[error("suite shape {found:?} does not match model shape {expected:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("row {row} is not a valid assignment for the model")]
    InvalidRow { row: usize },
    #[error("row {row}: unknown level {level:?} for factor {factor:?}")]
    UnknownLevel {
        row: usize,
        factor: String,
        level: String,
    },
    #[error("unknown factor {0:?} in suite header")]
    UnknownFactor(String),
    #[error("factor {0:?} missing from suite header")]
    MissingFactor(String),
    #[error("factor {0:?} appears twice in suite header")]
    DuplicateColumn(String),
    #[error("embedded model does not match the supplied model")]
    ModelMismatch,
    #[error("CSV: {0}")]
    Csv(String),
    #[error("JSON: {0}")]
    Json(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestSuite {
    shape: Vec<usize>,
    strength: Option<usize>,
    rows: Vec<Assignment>,
}

impl TestSuite {
    pub fn new(
        model: &Model,
        rows: Vec<Assignment>,
        strength: Option<usize>,
    ) -> Result<Self, SuiteError> {
        if let Some(row) = rows.iter().position(|r| !model.conforms(r.values())) {
            return Err(SuiteError::InvalidRow { row });
        }
        Ok(TestSuite {
            shape: model.shape(),
            strength,
            rows,
        })
    }

    pub fn empty(model: &Model) -> Self {
        TestSuite {
            shape: model.shape(),
            strength: None,
            rows: Vec::new(),
        }
    }

    /// The suite made of every assignment, in lexicographic order.
    pub fn exhaustive(model: &Model) -> Self {
        TestSuite {
            shape: model.shape(),
            strength: Some(model.k()),
            rows: model.exhaustive_assignments(),
        }
    }

    pub fn rows(&self) -> &[Assignment] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Strength the suite was generated for, if known.
    pub fn strength(&self) -> Option<usize> {
        self.strength
    }

    pub fn with_strength(mut self, strength: Option<usize>) -> Self {
        self.strength = strength;
        self
    }

    pub fn check_shape(&self, model: &Model) -> Result<(), SuiteError> {
        let expected = model.shape();
        if self.shape != expected {
            return Err(SuiteError::ShapeMismatch {
                expected,
                found: self.shape.clone(),
            });
        }
        Ok(())
    }

    /// Removes repeated rows, keeping first occurrences in order.
    pub fn dedup(&mut self) {
        let mut seen = HashSet::with_capacity(self.rows.len());
        self.rows.retain(|r| seen.insert(r.clone()));
    }

    pub fn distinct_rows(&self) -> usize {
        self.rows.iter().collect::<HashSet<_>>().len()
    }

    pub fn to_csv(&self, model: &Model) -> Result<String, SuiteError> {
        self.check_shape(model)?;
        let mut writer = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| SuiteError::Csv(e.to_string());
        writer
            .write_record(model.factors().iter().map(|f| f.name()))
            .map_err(csv_err)?;
        for row in &self.rows {
            writer.write_record(model.level_names(row)).map_err(csv_err)?;
        }
        let bytes = writer
            .into_inner()
            .map_err(|e| SuiteError::Csv(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("names are ASCII"))
    }

    /// Parses a CSV suite. The strength is not recorded in CSV and is left unset.
    pub fn from_csv(text: &str, model: &Model) -> Result<Self, SuiteError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let csv_err = |e: csv::Error| SuiteError::Csv(e.to_string());
        let header = reader.headers().map_err(csv_err)?.clone();
        let mut columns = vec![None; model.k()];
        for (col, name) in header.iter().enumerate() {
            let f = model
                .factor_index(name)
                .ok_or_else(|| SuiteError::UnknownFactor(name.to_string()))?;
            if columns[f].replace(col).is_some() {
                return Err(SuiteError::DuplicateColumn(name.to_string()));
            }
        }
        let columns = columns
            .into_iter()
            .enumerate()
            .map(|(f, c)| c.ok_or_else(|| SuiteError::MissingFactor(model.factor(f).name().into())))
            .collect::<Result<Vec<usize>, _>>()?;
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(csv_err)?;
            let cells: Vec<&str> = columns
                .iter()
                .map(|&c| record.get(c).unwrap_or(""))
                .collect();
            rows.push(resolve_row(model, i, &cells)?);
        }
        TestSuite::new(model, rows, None)
    }

    pub fn to_json(&self, model: &Model) -> Result<String, SuiteError> {
        self.check_shape(model)?;
        let doc = SuiteDoc {
            model: model.clone(),
            strength: self.strength,
            rows: self
                .rows
                .iter()
                .map(|r| model.level_names(r).into_iter().map(String::from).collect())
                .collect(),
        };
        serde_json::to_string_pretty(&doc).map_err(|e| SuiteError::Json(e.to_string()))
    }

    pub fn from_json(text: &str, model: &Model) -> Result<Self, SuiteError> {
        let doc: SuiteDoc =
            serde_json::from_str(text).map_err(|e| SuiteError::Json(e.to_string()))?;
        if doc.model != *model {
            return Err(SuiteError::ModelMismatch);
        }
        let rows = doc
            .rows
            .iter()
            .enumerate()
            .map(|(i, cells)| {
                let cells: Vec<&str> = cells.iter().map(String::as_str).collect();
                resolve_row(model, i, &cells)
            })
            .collect::<Result<Vec<_>, _>>()?;
        TestSuite::new(model, rows, doc.strength)
    }

    /// Loads either format: content starting with `{` is JSON, anything else CSV.
    pub fn parse(text: &str, model: &Model) -> Result<Self, SuiteError> {
        if text.trim_start().starts_with('{') {
            Self::from_json(text, model)
        } else {
            Self::from_csv(text, model)
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SuiteDoc {
    #[serde(flatten)]
    model: Model,
    strength: Option<usize>,
    rows: Vec<Vec<String>>,
}

fn resolve_row(model: &Model, row: usize, cells: &[&str]) -> Result<Assignment, SuiteError> {
    if cells.len() != model.k() {
        return Err(SuiteError::InvalidRow { row });
    }
    cells
        .iter()
        .zip(model.factors())
        .map(|(cell, factor)| {
            factor.level_index(cell).ok_or_else(|| SuiteError::UnknownLevel {
                row,
                factor: factor.name().to_string(),
                level: cell.to_string(),
            })
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Assignment::new)
}
