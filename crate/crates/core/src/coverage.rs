//! Combinatorial coverage measurement: the proportion of `s`-way tuples a
//! suite contains, for any set of strengths, plus the exact list of missing
//! tuples.
//!
//! Fractions are kept as integer pairs; the 4-place decimal is only produced
//! when rendering.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::generator::GeneratorError;
use crate::model::Model;
use crate::suite::TestSuite;
use crate::tuples::{Tuple, TupleSet, TupleSpace};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrengthCoverage {
    pub s: usize,
    pub covered: u64,
    pub total: u64,
    /// `"covered/total"`.
    pub fraction: String,
}

impl StrengthCoverage {
    fn new(s: usize, covered: u64, total: u64) -> Self {
        StrengthCoverage {
            s,
            covered,
            total,
            fraction: format!("{covered}/{total}"),
        }
    }

    pub fn is_complete(&self) -> bool {
        self.covered == self.total
    }

    pub fn ratio(&self) -> f64 {
        self.covered as f64 / self.total as f64
    }

    /// Exact comparison of the covered fraction against `num/den`.
    pub fn equals_fraction(&self, num: u64, den: u64) -> bool {
        self.covered as u128 * den as u128 == num as u128 * self.total as u128
    }

    pub fn decimal(&self) -> String {
        format!("{:.4}", self.ratio())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageReport {
    #[serde(rename = "N")]
    pub n: usize,
    pub strengths: Vec<StrengthCoverage>,
}

impl CoverageReport {
    pub fn at(&self, s: usize) -> Option<&StrengthCoverage> {
        self.strengths.iter().find(|c| c.s == s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("coverage report serializes")
    }

    /// Plain-text table, one line per strength.
    pub fn to_table(&self) -> String {
        let mut out = format!("suite size N = {}\n", self.n);
        let _ = writeln!(out, "{:>8}  {:>12}  {:>12}  {:>8}", "strength", "covered", "total", "coverage");
        for c in &self.strengths {
            let _ = writeln!(
                out,
                "{:>8}  {:>12}  {:>12}  {:>8}",
                format!("{}-way", c.s),
                c.covered,
                c.total,
                c.decimal()
            );
        }
        out
    }
}

fn cover(suite: &TestSuite, model: &Model, s: usize) -> Result<TupleSet, GeneratorError> {
    suite.check_shape(model)?;
    let mut set = TupleSet::new(TupleSpace::new(model, s)?);
    set.cover_all(suite.rows());
    Ok(set)
}

/// Measures coverage at each requested strength, reported in ascending order.
pub fn measure(
    suite: &TestSuite,
    model: &Model,
    strengths: &[usize],
) -> Result<CoverageReport, GeneratorError> {
    let mut strengths = strengths.to_vec();
    strengths.sort_unstable();
    strengths.dedup();
    let per_strength = strengths
        .into_iter()
        .map(|s| {
            let set = cover(suite, model, s)?;
            Ok(StrengthCoverage::new(s, set.covered() as u64, set.total() as u64))
        })
        .collect::<Result<Vec<_>, GeneratorError>>()?;
    Ok(CoverageReport {
        n: suite.len(),
        strengths: per_strength,
    })
}

/// Every `s`-tuple absent from the suite, sorted by factor subset then levels.
pub fn missing_tuples(
    suite: &TestSuite,
    model: &Model,
    s: usize,
) -> Result<Vec<Tuple>, GeneratorError> {
    let set = cover(suite, model, s)?;
    Ok(set.uncovered_ranks().map(|r| set.space().unrank(r)).collect())
}
