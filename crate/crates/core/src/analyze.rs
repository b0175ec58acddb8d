//! Fault attribution across strengths.
//!
//! A tuple is *suspicious* for a variant when it occurs in at least one FAIL
//! run of that variant and in no PASS run of it. ERROR and TIMEOUT records are
//! ignored on both sides. A failing configuration is *explained* at strength
//! `s` when it contains an `s`-way suspect of its own variant.
//!
//! The attribution chain takes the failures of the `t`-way suite and removes,
//! in turn, those explained by the `(t-1)`-, `(t-2)`- and `(t-3)`-way suites'
//! suspects, never going below strength 2.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Assignment, Model, ModelError};
use crate::runner::{RunReport, Verdict};
use crate::tuples::{Tuple, TupleSet, TupleSpace};

/// Lowest strength the removal chain descends to.
pub const CHAIN_FLOOR: usize = 2;
/// Number of removal steps below each strength.
pub const CHAIN_DEPTH: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalyzeError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("report was produced for a different model")]
    ModelMismatch,
    #[error("record {0} does not conform to the model")]
    InvalidRecord(usize),
}

/// A tuple tied to the variant whose runs made it suspicious.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Suspect {
    pub variant: String,
    pub tuple: Tuple,
}

/// FAIL-verdict configurations of one report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FailureSet {
    pub strength: Option<usize>,
    pub failures: Vec<(Assignment, String)>,
}

impl FailureSet {
    pub fn from_report(report: &RunReport, strength: Option<usize>) -> Self {
        let failures = report
            .records
            .iter()
            .filter(|r| r.verdict == Verdict::Fail)
            .map(|r| (r.assignment.clone(), r.variant_id.clone()))
            .collect();
        FailureSet { strength, failures }
    }

    pub fn len(&self) -> usize {
        self.failures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.failures.is_empty()
    }
}

fn check_report(report: &RunReport, model: &Model) -> Result<(), AnalyzeError> {
    if report.model.shape() != model.shape() {
        return Err(AnalyzeError::ModelMismatch);
    }
    match report
        .records
        .iter()
        .position(|r| !model.conforms(r.assignment.values()))
    {
        Some(i) => Err(AnalyzeError::InvalidRecord(i)),
        None => Ok(()),
    }
}

pub fn suspicious_tuples(
    report: &RunReport,
    model: &Model,
    s: usize,
) -> Result<BTreeSet<Suspect>, AnalyzeError> {
    check_report(report, model)?;
    let space = TupleSpace::new(model, s)?;
    let mut evidence: BTreeMap<&str, (TupleSet, TupleSet)> = BTreeMap::new();
    for r in &report.records {
        let (failing, passing) = evidence
            .entry(r.variant_id.as_str())
            .or_insert_with(|| (TupleSet::new(space.clone()), TupleSet::new(space.clone())));
        match r.verdict {
            Verdict::Fail => {
                failing.cover_row(r.assignment.values());
            }
            Verdict::Pass => {
                passing.cover_row(r.assignment.values());
            }
            Verdict::Error | Verdict::Timeout => {}
        }
    }
    let mut suspects = BTreeSet::new();
    for (variant, (failing, passing)) in &evidence {
        if failing.covered() == 0 {
            continue;
        }
        for rank in 0..space.total() {
            if failing.contains(rank) && !passing.contains(rank) {
                suspects.insert(Suspect {
                    variant: variant.to_string(),
                    tuple: space.unrank(rank),
                });
            }
        }
    }
    Ok(suspects)
}

/// Whether the failing `assignment` of `variant` contains any of `suspects`.
pub fn explained(assignment: &[usize], variant: &str, suspects: &BTreeSet<Suspect>) -> bool {
    suspects
        .iter()
        .any(|s| s.variant == variant && s.tuple.contained_in(assignment))
}

/// Rank lookup of one strength's suspects, keyed by variant.
struct SuspectIndex {
    space: TupleSpace,
    by_variant: HashMap<String, HashSet<usize>>,
}

impl SuspectIndex {
    fn new(model: &Model, s: usize, suspects: &BTreeSet<Suspect>) -> Result<Self, AnalyzeError> {
        let space = TupleSpace::new(model, s)?;
        let mut by_variant: HashMap<String, HashSet<usize>> = HashMap::new();
        for suspect in suspects {
            let rank = space.rank(&suspect.tuple).expect("suspect belongs to this space");
            by_variant.entry(suspect.variant.clone()).or_default().insert(rank);
        }
        Ok(SuspectIndex { space, by_variant })
    }

    fn explains(&self, assignment: &[usize], variant: &str) -> bool {
        self.by_variant
            .get(variant)
            .is_some_and(|ranks| self.space.ranks(assignment).any(|r| ranks.contains(&r)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemovalStep {
    /// Strength whose suspects were removed.
    pub strength: usize,
    /// Failures left afterwards; `None` when that strength's report was absent
    /// and the step was skipped.
    pub remaining: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrengthAttribution {
    pub strength: usize,
    pub failures: usize,
    pub removals: Vec<RemovalStep>,
}

impl StrengthAttribution {
    /// Failures not explained by any lower strength that was available.
    pub fn unexplained(&self) -> usize {
        self.removals
            .iter()
            .rev()
            .find_map(|s| s.remaining)
            .unwrap_or(self.failures)
    }

    /// Counts down the chain, skipping absent steps.
    pub fn chain(&self) -> Vec<usize> {
        std::iter::once(self.failures)
            .chain(self.removals.iter().filter_map(|s| s.remaining))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributionReport {
    pub strengths: Vec<StrengthAttribution>,
    /// Suspects of every strength used as a removal step.
    pub suspects: BTreeMap<usize, BTreeSet<Suspect>>,
}

impl AttributionReport {
    pub fn at(&self, t: usize) -> Option<&StrengthAttribution> {
        self.strengths.iter().find(|a| a.strength == t)
    }

    pub fn to_json(&self, model: &Model) -> String {
        #[derive(Serialize)]
        struct SuspectOut<'a> {
            variant: &'a str,
            factors: Vec<&'a str>,
            levels: Vec<&'a str>,
        }
        #[derive(Serialize)]
        struct SuspectGroup<'a> {
            strength: usize,
            tuples: Vec<SuspectOut<'a>>,
        }
        #[derive(Serialize)]
        struct Doc<'a> {
            strengths: &'a [StrengthAttribution],
            suspects: Vec<SuspectGroup<'a>>,
        }
        let suspects = self
            .suspects
            .iter()
            .map(|(&strength, set)| SuspectGroup {
                strength,
                tuples: set
                    .iter()
                    .map(|s| SuspectOut {
                        variant: &s.variant,
                        factors: s.tuple.factor_names(model),
                        levels: s.tuple.level_names(model),
                    })
                    .collect(),
            })
            .collect();
        let doc = Doc {
            strengths: &self.strengths,
            suspects,
        };
        serde_json::to_string_pretty(&doc).expect("attribution report serializes")
    }

    /// Table with one column per strength and one row per removal step.
    pub fn to_table(&self) -> String {
        let mut out = format!("{:<22}", "");
        for a in &self.strengths {
            let _ = write!(out, "{:>9}", format!("{}-way", a.strength));
        }
        out.push('\n');
        let _ = write!(out, "{:<22}", "Test cases:");
        for a in &self.strengths {
            let _ = write!(out, "{:>9}", a.failures);
        }
        out.push('\n');
        for depth in 1..=CHAIN_DEPTH {
            let _ = write!(out, "{:<22}", format!("removing (t-{depth})-way"));
            for a in &self.strengths {
                let cell = match a.removals.get(depth - 1) {
                    Some(RemovalStep { remaining: Some(n), .. }) => n.to_string(),
                    Some(RemovalStep { remaining: None, .. }) => "n/a".into(),
                    None => "-".into(),
                };
                let _ = write!(out, "{cell:>9}");
            }
            out.push('\n');
        }
        out
    }
}

/// Runs the removal chain for every strength present in `reports`, where
/// `reports[t]` is the run report of the `t`-way suite.
pub fn attribution_chain(
    reports: &BTreeMap<usize, RunReport>,
    model: &Model,
) -> Result<AttributionReport, AnalyzeError> {
    for report in reports.values() {
        check_report(report, model)?;
    }
    let mut suspects = BTreeMap::new();
    let mut indexes: BTreeMap<usize, SuspectIndex> = BTreeMap::new();
    let mut strengths = Vec::new();
    for (&t, report) in reports {
        let failures = FailureSet::from_report(report, Some(t));
        let mut remaining: Vec<&(Assignment, String)> = failures.failures.iter().collect();
        let mut removals = Vec::new();
        for depth in 1..=CHAIN_DEPTH {
            let Some(lower) = t.checked_sub(depth).filter(|&l| l >= CHAIN_FLOOR) else {
                break;
            };
            let Some(lower_report) = reports.get(&lower) else {
                removals.push(RemovalStep {
                    strength: lower,
                    remaining: None,
                });
                continue;
            };
            if !indexes.contains_key(&lower) {
                let set = suspicious_tuples(lower_report, model, lower)?;
                indexes.insert(lower, SuspectIndex::new(model, lower, &set)?);
                suspects.insert(lower, set);
            }
            let index = &indexes[&lower];
            remaining.retain(|(a, v)| !index.explains(a.values(), v));
            removals.push(RemovalStep {
                strength: lower,
                remaining: Some(remaining.len()),
            });
        }
        strengths.push(StrengthAttribution {
            strength: t,
            failures: failures.len(),
            removals,
        });
    }
    Ok(AttributionReport {
        strengths,
        suspects,
    })
}
