//! The multiplexer: crosses configuration rows with variant scripts.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Assignment, Model};
use crate::suite::{SuiteError, TestSuite};

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("cannot build a plan from an empty suite")]
    EmptySuite,
    #[error("cannot build a plan without variant scripts")]
    NoScripts,
    #[error("duplicate variant id {0:?}")]
    DuplicateId(String),
    #[error("variant id must be non-empty")]
    EmptyId,
    #[error(transparent)]
    Suite(#[from] SuiteError),
    #[error("script manifest: {0}")]
    Manifest(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// An executable that runs once against every configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantScript {
    pub id: String,
    pub path: PathBuf,
    /// Per-script timeout in seconds; the runner default applies when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeout: Option<f64>,
}

impl VariantScript {
    pub fn new(id: impl Into<String>, path: impl Into<PathBuf>) -> Self {
        VariantScript {
            id: id.into(),
            path: path.into(),
            timeout: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanEntry {
    pub test_index: usize,
    pub assignment: Assignment,
    pub script: VariantScript,
}

/// Row-major cross product: every script for test 0, then test 1, and so on.
#[derive(Debug, Clone, PartialEq)]
pub struct VariantPlan {
    model: Model,
    entries: Vec<PlanEntry>,
}

impl VariantPlan {
    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn entries(&self) -> &[PlanEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn environment(&self, index: usize) -> BTreeMap<String, String> {
        environment_for(&self.model, &self.entries[index])
    }
}

pub fn multiplex(
    model: &Model,
    suite: &TestSuite,
    scripts: &[VariantScript],
) -> Result<VariantPlan, PlanError> {
    suite.check_shape(model)?;
    if suite.is_empty() {
        return Err(PlanError::EmptySuite);
    }
    check_scripts(scripts)?;
    let entries = suite
        .rows()
        .iter()
        .enumerate()
        .flat_map(|(test_index, row)| {
            scripts.iter().map(move |script| PlanEntry {
                test_index,
                assignment: row.clone(),
                script: script.clone(),
            })
        })
        .collect();
    Ok(VariantPlan {
        model: model.clone(),
        entries,
    })
}

fn check_scripts(scripts: &[VariantScript]) -> Result<(), PlanError> {
    if scripts.is_empty() {
        return Err(PlanError::NoScripts);
    }
    let mut ids = HashSet::new();
    for s in scripts {
        if s.id.is_empty() {
            return Err(PlanError::EmptyId);
        }
        if !ids.insert(s.id.as_str()) {
            return Err(PlanError::DuplicateId(s.id.clone()));
        }
    }
    Ok(())
}

/// `CIT_` followed by the factor name upper-cased, with every character
/// outside `[A-Za-z0-9]` replaced by `_`.
pub fn env_var_name(factor: &str) -> String {
    let mut name = String::with_capacity(factor.len() + 4);
    name.push_str("CIT_");
    name.extend(factor.chars().map(|c| {
        if c.is_ascii_alphanumeric() {
            c.to_ascii_uppercase()
        } else {
            '_'
        }
    }));
    name
}

pub fn environment_for(model: &Model, entry: &PlanEntry) -> BTreeMap<String, String> {
    let mut env: BTreeMap<String, String> = model
        .factors()
        .iter()
        .zip(entry.assignment.values())
        .map(|(f, &l)| (env_var_name(f.name()), f.levels()[l].clone()))
        .collect();
    env.insert("CIT_TEST_INDEX".into(), entry.test_index.to_string());
    env.insert("CIT_VARIANT_ID".into(), entry.script.id.clone());
    env
}

/// Parses a JSON manifest `[{"id":..., "path":..., "timeout":...}]`. Relative
/// paths are resolved against `base`.
pub fn parse_manifest(text: &str, base: &Path) -> Result<Vec<VariantScript>, PlanError> {
    let mut scripts: Vec<VariantScript> =
        serde_json::from_str(text).map_err(|e| PlanError::Manifest(e.to_string()))?;
    for s in &mut scripts {
        if s.path.is_relative() {
            s.path = base.join(&s.path);
        }
        if let Some(t) = s.timeout {
            if !(t.is_finite() && t > 0.0) {
                return Err(PlanError::Manifest(format!("script {:?}: timeout must be positive", s.id)));
            }
        }
    }
    check_scripts(&scripts)?;
    Ok(scripts)
}

pub fn load_manifest(path: &Path) -> Result<Vec<VariantScript>, PlanError> {
    let text = fs::read_to_string(path).map_err(|source| PlanError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_manifest(&text, path.parent().unwrap_or(Path::new(".")))
}

/// Every executable regular file in `dir`, id = file name, sorted by id.
pub fn scan_scripts(dir: &Path) -> Result<Vec<VariantScript>, PlanError> {
    let io = |source| PlanError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut scripts = Vec::new();
    for entry in fs::read_dir(dir).map_err(io)? {
        let entry = entry.map_err(io)?;
        let meta = entry.metadata().map_err(io)?;
        if meta.is_file() && is_executable(&meta) {
            scripts.push(VariantScript::new(
                entry.file_name().to_string_lossy().into_owned(),
                entry.path(),
            ));
        }
    }
    scripts.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(scripts)
}

/// A manifest file, a directory holding `manifest.json`, or a directory of executables.
pub fn load_scripts(path: &Path) -> Result<Vec<VariantScript>, PlanError> {
    if path.is_dir() {
        let manifest = path.join("manifest.json");
        if manifest.is_file() {
            load_manifest(&manifest)
        } else {
            scan_scripts(path)
        }
    } else {
        load_manifest(path)
    }
}

#[cfg(unix)]
fn is_executable(meta: &fs::Metadata) -> bool {
    use std::os::unix::fs::PermissionsExt;
    meta.permissions().mode() & 0o111 != 0
}

#[cfg(not(unix))]
fn is_executable(_meta: &fs::Metadata) -> bool {
    true
}
