//! Input models: named factors with ordered, named levels.
//!
//! Two textual forms are accepted. The line grammar is one factor per line,
//!
//! ```text
//! # comment
//! img_format:   raw, qcow, qcow2, luks, vmdk
//! img_protocol: file, nbd
//! ```
//!
//! and the JSON mirror is `{"factors":[{"name":"img_format","levels":["raw", ...]}]}`.
//! Both produce identical [`Model`]s for equivalent content. Internally factors
//! and levels are addressed by position; names only appear at the boundaries.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::plan::env_var_name;
use crate::tuples::Combinations;

/// Environment variables the multiplexer always sets besides the factor values.
pub(crate) const RESERVED_ENV_VARS: [&str; 2] = ["CIT_TEST_INDEX", "CIT_VARIANT_ID"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid JSON model: {0}")]
    Json(String),
    #[error("model has no factors")]
    NoFactors,
    #[error("invalid name {0:?}: names must match [A-Za-z0-9_./-]+")]
    InvalidName(String),
    #[error("duplicate factor name {0:?}")]
    DuplicateFactor(String),
    #[error("factor {factor:?} lists level {level:?} more than once")]
    DuplicateLevel { factor: String, level: String },
    #[error("factor {0:?} has no levels")]
    EmptyLevels(String),
    #[error("factors {first:?} and {second:?} both map to environment variable {var}")]
    EnvCollision {
        first: String,
        second: String,
        var: String,
    },
    #[error("exhaustive size of the model exceeds 2^63-1")]
    TooLarge,
    #[error("strength {t} is outside 1..={k}")]
    StrengthOutOfRange { t: usize, k: usize },
    #[error("tuple count at strength {0} overflows")]
    TupleCountOverflow(usize),
}

pub(crate) fn is_valid_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '/' | '-'))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factor {
    name: String,
    levels: Vec<String>,
}

impl Factor {
    pub fn new<N, L, I>(name: N, levels: I) -> Result<Self, ModelError>
    where
        N: Into<String>,
        L: Into<String>,
        I: IntoIterator<Item = L>,
    {
        let name = name.into();
        if !is_valid_name(&name) {
            return Err(ModelError::InvalidName(name));
        }
        let levels: Vec<String> = levels.into_iter().map(Into::into).collect();
        if levels.is_empty() {
            return Err(ModelError::EmptyLevels(name));
        }
        let mut seen = HashSet::new();
        for level in &levels {
            if !is_valid_name(level) {
                return Err(ModelError::InvalidName(level.clone()));
            }
            if !seen.insert(level.as_str()) {
                return Err(ModelError::DuplicateLevel {
                    factor: name,
                    level: level.clone(),
                });
            }
        }
        Ok(Factor { name, levels })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn levels(&self) -> &[String] {
        &self.levels
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn level_index(&self, level: &str) -> Option<usize> {
        self.levels.iter().position(|l| l == level)
    }
}

/// An ordered list of factors.
///
/// Construction validates every invariant, so a `Model` value is always
/// usable: names are unique, environment-variable names are distinct and
/// the exhaustive size fits in an `i64`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct Model {
    factors: Vec<Factor>,
    exhaustive: u64,
}

#[derive(Serialize, Deserialize)]
struct RawModel {
    factors: Vec<RawFactor>,
}

#[derive(Serialize, Deserialize)]
struct RawFactor {
    name: String,
    levels: Vec<String>,
}

impl TryFrom<RawModel> for Model {
    type Error = ModelError;

    fn try_from(raw: RawModel) -> Result<Self, ModelError> {
        let factors = raw
            .factors
            .into_iter()
            .map(|f| Factor::new(f.name, f.levels))
            .collect::<Result<Vec<_>, _>>()?;
        Model::new(factors)
    }
}

impl From<Model> for RawModel {
    fn from(model: Model) -> Self {
        RawModel {
            factors: model
                .factors
                .into_iter()
                .map(|f| RawFactor {
                    name: f.name,
                    levels: f.levels,
                })
                .collect(),
        }
    }
}

impl Model {
    pub fn new(factors: Vec<Factor>) -> Result<Self, ModelError> {
        if factors.is_empty() {
            return Err(ModelError::NoFactors);
        }
        let mut names = HashSet::new();
        for f in &factors {
            if !names.insert(f.name.as_str()) {
                return Err(ModelError::DuplicateFactor(f.name.clone()));
            }
        }
        let mut vars: Vec<(String, &str)> = RESERVED_ENV_VARS
            .iter()
            .map(|v| (v.to_string(), "<reserved>"))
            .collect();
        for f in &factors {
            let var = env_var_name(&f.name);
            if let Some((_, other)) = vars.iter().find(|(v, _)| *v == var) {
                return Err(ModelError::EnvCollision {
                    first: other.to_string(),
                    second: f.name.clone(),
                    var,
                });
            }
            vars.push((var, &f.name));
        }
        let exhaustive = factors
            .iter()
            .try_fold(1u64, |acc, f| acc.checked_mul(f.level_count() as u64))
            .filter(|&n| n <= i64::MAX as u64)
            .ok_or(ModelError::TooLarge)?;
        Ok(Model {
            factors,
            exhaustive,
        })
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn factor(&self, index: usize) -> &Factor {
        &self.factors[index]
    }

    /// Number of factors, `k`.
    pub fn k(&self) -> usize {
        self.factors.len()
    }

    /// Level counts in factor order.
    pub fn shape(&self) -> Vec<usize> {
        self.factors.iter().map(Factor::level_count).collect()
    }

    pub fn factor_index(&self, name: &str) -> Option<usize> {
        self.factors.iter().position(|f| f.name == name)
    }

    /// Product of all level counts.
    pub fn exhaustive_size(&self) -> u64 {
        self.exhaustive
    }

    /// Number of distinct `t`-way value tuples: the sum over every `t`-subset
    /// of factors of the product of their level counts.
    pub fn tuple_count(&self, t: usize) -> Result<u64, ModelError> {
        self.check_strength(t)?;
        let shape = self.shape();
        let mut total = 0u64;
        for subset in Combinations::new(self.k(), t) {
            // Each product divides the exhaustive size, so only the sum can overflow.
            let product: u64 = subset.iter().map(|&i| shape[i] as u64).product();
            total = total
                .checked_add(product)
                .ok_or(ModelError::TupleCountOverflow(t))?;
        }
        Ok(total)
    }

    pub fn check_strength(&self, t: usize) -> Result<(), ModelError> {
        if t == 0 || t > self.k() {
            return Err(ModelError::StrengthOutOfRange { t, k: self.k() });
        }
        Ok(())
    }

    /// Whether `values` is a complete, in-range assignment for this model.
    pub fn conforms(&self, values: &[usize]) -> bool {
        values.len() == self.k()
            && values
                .iter()
                .zip(&self.factors)
                .all(|(&v, f)| v < f.level_count())
    }

    /// Level names of an assignment, in factor order.
    pub fn level_names<'a>(&'a self, assignment: &Assignment) -> Vec<&'a str> {
        assignment
            .values()
            .iter()
            .zip(&self.factors)
            .map(|(&v, f)| f.levels[v].as_str())
            .collect()
    }

    /// Every assignment of the model in lexicographic order.
    pub fn exhaustive_assignments(&self) -> Vec<Assignment> {
        let shape = self.shape();
        let mut out = Vec::with_capacity(self.exhaustive as usize);
        let mut current = vec![0usize; shape.len()];
        loop {
            out.push(Assignment(current.clone()));
            let mut pos = shape.len();
            loop {
                if pos == 0 {
                    return out;
                }
                pos -= 1;
                current[pos] += 1;
                if current[pos] < shape[pos] {
                    break;
                }
                current[pos] = 0;
            }
        }
    }

    /// Renders the model in the line grammar accepted by [`parse_model`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for f in &self.factors {
            out.push_str(&f.name);
            out.push_str(": ");
            out.push_str(&f.levels.join(", "));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization is infallible")
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// One level index per factor.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment(Vec<usize>);

impl Assignment {
    pub fn new(values: Vec<usize>) -> Self {
        Assignment(values)
    }

    pub fn values(&self) -> &[usize] {
        &self.0
    }

    pub fn into_values(self) -> Vec<usize> {
        self.0
    }
}

impl From<Vec<usize>> for Assignment {
    fn from(values: Vec<usize>) -> Self {
        Assignment(values)
    }
}

/// Parses a model from either the line grammar or its JSON mirror. Content
/// whose first non-blank character is `{` is treated as JSON.
pub fn parse_model(text: &str) -> Result<Model, ModelError> {
    if text.trim_start().starts_with('{') {
        parse_model_json(text)
    } else {
        parse_model_text(text)
    }
}

pub fn parse_model_json(text: &str) -> Result<Model, ModelError> {
    serde_json::from_str::<RawModel>(text)
        .map_err(|e| ModelError::Json(e.to_string()))
        .and_then(Model::try_from)
}

pub fn parse_model_text(text: &str) -> Result<Model, ModelError> {
    let mut factors = Vec::new();
    for (line_no, raw_line) in text.lines().enumerate() {
        let line_no = line_no + 1;
        let content = match raw_line.find('#') {
            Some(i) => &raw_line[..i],
            None => raw_line,
        };
        if content.trim().is_empty() {
            continue;
        }
        let syntax = |byte_offset: usize, message: String| ModelError::Syntax {
            line: line_no,
            column: raw_line[..byte_offset].chars().count() + 1,
            message,
        };
        let colon = content
            .find(':')
            .ok_or_else(|| syntax(content.len(), "expected ':' after factor name".into()))?;
        let name_part = &content[..colon];
        let name = name_part.trim();
        let name_start = name_part.len() - name_part.trim_start().len();
        if name.is_empty() {
            return Err(syntax(name_start, "missing factor name".into()));
        }
        check_token(name).map_err(|off| syntax(name_start + off, format!("invalid character in factor name {name:?}")))?;

        let rest = &content[colon + 1..];
        if rest.trim().is_empty() {
            return Err(ModelError::EmptyLevels(name.to_string()));
        }
        let mut levels = Vec::new();
        let mut offset = colon + 1;
        for piece in rest.split(',') {
            let level = piece.trim();
            let start = offset + (piece.len() - piece.trim_start().len());
            if level.is_empty() {
                return Err(syntax(start, "empty level name".into()));
            }
            check_token(level).map_err(|off| syntax(start + off, format!("invalid character in level name {level:?}")))?;
            levels.push(level.to_string());
            offset += piece.len() + 1;
        }
        factors.push(Factor::new(name, levels)?);
    }
    Model::new(factors)
}

/// Returns the byte offset of the first character not allowed in a name.
fn check_token(token: &str) -> Result<(), usize> {
    match token
        .char_indices()
        .find(|&(_, c)| !(c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '/' | '-')))
    {
        Some((i, _)) => Err(i),
        None => Ok(()),
    }
}
