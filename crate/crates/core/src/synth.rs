//! Synthetic system under test.
//!
//! A fault profile plants always-failing tuples on specific variants. From it
//! this module writes one POSIX shell stub per variant that exits 1 iff its
//! `CIT_*` environment matches one of the variant's planted tuples, and can
//! also evaluate the same rule in-process.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Model;
use crate::plan::{env_var_name, VariantPlan, VariantScript};
use crate::runner::{RunRecord, RunReport, Verdict};
use crate::tuples::Tuple;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("fault profile: {0}")]
    Json(String),
    #[error("fault {index}: unknown factor or level, or repeated factor")]
    InvalidFault { index: usize },
    #[error("fault {index} targets unknown variant {variant:?}")]
    UnknownVariant { index: usize, variant: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct PlantedFault {
    pub variant: String,
    pub tuple: Tuple,
}

#[derive(Serialize, Deserialize)]
struct FaultDoc {
    variant: String,
    factors: Vec<String>,
    levels: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FaultProfile {
    pub faults: Vec<PlantedFault>,
}

impl FaultProfile {
    pub fn new(faults: Vec<PlantedFault>) -> Self {
        FaultProfile { faults }
    }

    /// Parses `[{"variant":..., "factors":[names], "levels":[names]}]`.
    pub fn parse(text: &str, model: &Model) -> Result<Self, SynthError> {
        let docs: Vec<FaultDoc> =
            serde_json::from_str(text).map_err(|e| SynthError::Json(e.to_string()))?;
        let faults = docs
            .into_iter()
            .enumerate()
            .map(|(index, doc)| {
                let factors: Vec<&str> = doc.factors.iter().map(String::as_str).collect();
                let levels: Vec<&str> = doc.levels.iter().map(String::as_str).collect();
                let tuple = Tuple::from_names(model, &factors, &levels)
                    .ok_or(SynthError::InvalidFault { index })?;
                Ok(PlantedFault {
                    variant: doc.variant,
                    tuple,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FaultProfile { faults })
    }

    pub fn to_json(&self, model: &Model) -> String {
        let docs: Vec<FaultDoc> = self
            .faults
            .iter()
            .map(|f| FaultDoc {
                variant: f.variant.clone(),
                factors: f.tuple.factor_names(model).into_iter().map(String::from).collect(),
                levels: f.tuple.level_names(model).into_iter().map(String::from).collect(),
            })
            .collect();
        serde_json::to_string_pretty(&docs).expect("fault profile serializes")
    }

    /// Whether `variant` fails on `assignment`.
    pub fn fails(&self, variant: &str, assignment: &[usize]) -> bool {
        self.faults
            .iter()
            .any(|f| f.variant == variant && f.tuple.contained_in(assignment))
    }

    /// Verdicts the stub scripts would produce for `plan`, without spawning.
    pub fn simulate(&self, plan: &VariantPlan) -> RunReport {
        let started = Instant::now();
        let records = plan
            .entries()
            .iter()
            .map(|e| {
                let fail = self.fails(&e.script.id, e.assignment.values());
                RunRecord {
                    test_index: e.test_index,
                    variant_id: e.script.id.clone(),
                    assignment: e.assignment.clone(),
                    verdict: if fail { Verdict::Fail } else { Verdict::Pass },
                    exit_code: Some(fail as i32),
                    duration: 0.0,
                    stdout_bytes: 0,
                    stderr_bytes: 0,
                    message: None,
                }
            })
            .collect();
        RunReport::new(plan.model().clone(), records, 1, started.elapsed().as_secs_f64())
    }
}

/// `count` zero-padded ids, `001`, `002`, ... (at least three digits).
pub fn variant_ids(count: usize) -> Vec<String> {
    let width = count.to_string().len().max(3);
    (1..=count).map(|i| format!("{i:0width$}")).collect()
}

/// Shell source of the stub for `variant`.
pub fn stub_script(model: &Model, profile: &FaultProfile, variant: &str) -> String {
    let mut out = format!("#!/bin/sh\n# synthetic validation script {variant}\n");
    for fault in profile.faults.iter().filter(|f| f.variant == variant) {
        let conditions: Vec<String> = fault
            .tuple
            .factor_names(model)
            .iter()
            .zip(fault.tuple.level_names(model))
            .map(|(f, l)| format!("[ \"${{{}-}}\" = '{}' ]", env_var_name(f), l))
            .collect();
        out.push_str(&format!(
            "if {}; then\n  echo 'invalid configuration: {}' >&2\n  exit 1\nfi\n",
            conditions.join(" && "),
            fault.tuple.display(model)
        ));
    }
    out.push_str("exit 0\n");
    out
}

/// Writes one executable stub per id plus `manifest.json` into `dir`.
pub fn write_stub_scripts(
    model: &Model,
    profile: &FaultProfile,
    ids: &[String],
    dir: &Path,
) -> Result<Vec<VariantScript>, SynthError> {
    for (index, fault) in profile.faults.iter().enumerate() {
        if !ids.contains(&fault.variant) {
            return Err(SynthError::UnknownVariant {
                index,
                variant: fault.variant.clone(),
            });
        }
    }
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| SynthError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut scripts = Vec::with_capacity(ids.len());
    for id in ids {
        let path = dir.join(format!("{id}.sh"));
        fs::write(&path, stub_script(model, profile, id)).map_err(io(&path))?;
        make_executable(&path).map_err(io(&path))?;
        scripts.push(VariantScript::new(id.clone(), path));
    }
    let manifest: Vec<VariantScript> = scripts
        .iter()
        .map(|s| VariantScript::new(s.id.clone(), s.path.file_name().map(PathBuf::from).unwrap_or_default()))
        .collect();
    let manifest_path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&manifest_path, text).map_err(io(&manifest_path))?;
    Ok(scripts)
}

#[cfg(unix)]
fn make_executable(path: &Path) -> std::io::Result<()> {
    use std::os::unix::fs::PermissionsExt;
    fs::set_permissions(path, fs::Permissions::from_mode(0o755))
}

#[cfg(not(unix))]
fn make_executable(_path: &Path) -> std::io::Result<()> {
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_model;

    fn model() -> Model {
        parse_model("img_format: raw, luks\nimg_protocol: file, nbd\nmisalign: true, false").unwrap()
    }

    #[test]
    fn ids_are_padded() {
        assert_eq!(variant_ids(3), vec!["001", "002", "003"]);
        assert_eq!(variant_ids(1000)[999], "1000");
        assert_eq!(variant_ids(192).len(), 192);
    }

    #[test]
    fn profile_round_trip_and_rule() {
        let m = model();
        let text = r#"[{"variant":"002","factors":["img_protocol","img_format"],"levels":["nbd","luks"]}]"#;
        let profile = FaultProfile::parse(text, &m).unwrap();
        assert_eq!(profile.faults[0].tuple, Tuple::new(vec![0, 1], vec![1, 1]).unwrap());
        assert_eq!(FaultProfile::parse(&profile.to_json(&m), &m).unwrap(), profile);
        assert!(profile.fails("002", &[1, 1, 0]));
        assert!(!profile.fails("001", &[1, 1, 0]));
        assert!(!profile.fails("002", &[0, 1, 0]));
    }

    #[test]
    fn invalid_profiles() {
        let m = model();
        let bad_level = r#"[{"variant":"001","factors":["img_format"],"levels":["qcow"]}]"#;
        assert!(matches!(FaultProfile::parse(bad_level, &m), Err(SynthError::InvalidFault { index: 0 })));
        let repeated = r#"[{"variant":"001","factors":["misalign","misalign"],"levels":["true","false"]}]"#;
        assert!(matches!(FaultProfile::parse(repeated, &m), Err(SynthError::InvalidFault { .. })));
    }

    #[test]
    fn stub_checks_every_coordinate() {
        let m = model();
        let profile = FaultProfile::new(vec![PlantedFault {
            variant: "001".into(),
            tuple: Tuple::new(vec![0, 1], vec![1, 1]).unwrap(),
        }]);
        let script = stub_script(&m, &profile, "001");
        assert!(script.contains("[ \"${CIT_IMG_FORMAT-}\" = 'luks' ] && [ \"${CIT_IMG_PROTOCOL-}\" = 'nbd' ]"));
        assert_eq!(stub_script(&m, &profile, "002").lines().last(), Some("exit 0"));
    }

    #[test]
    fn unknown_variant_is_rejected() {
        let m = model();
        let profile = FaultProfile::new(vec![PlantedFault {
            variant: "009".into(),
            tuple: Tuple::new(vec![0], vec![0]).unwrap(),
        }]);
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            write_stub_scripts(&m, &profile, &variant_ids(2), dir.path()),
            Err(SynthError::UnknownVariant { .. })
        ));
    }
}
