//! Brute-force reference implementations. These deliberately avoid the
//! library's tuple ranking and bitmaps: subsets and level combinations are
//! enumerated recursively and every check scans the rows directly.

#![allow(dead_code)]

use std::collections::BTreeSet;

use citkit::model::{parse_model, Model};
use citkit::runner::{RunReport, Verdict};

pub const QEMU_MODEL: &str = "\
img_format:   raw, qcow, qcow2, luks, vmdk
img_protocol: file, nbd
cache_mode:   none, writeback, writethrough, directsync, unsafe
misalign:     true, false
qemu_img:     /usr/bin/qemu-img, /git/qemu/qemu-img
";

pub fn qemu() -> Model {
    parse_model(QEMU_MODEL).unwrap()
}

/// `(factor indices, level indices)`.
pub type RawTuple = (Vec<usize>, Vec<usize>);

pub fn subsets(k: usize, t: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, k: usize, t: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == t {
            out.push(cur.clone());
            return;
        }
        for f in start..k {
            cur.push(f);
            go(f + 1, k, t, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, k, t, &mut Vec::new(), &mut out);
    out
}

pub fn level_combos(shape: &[usize], subset: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &f in subset {
        let mut next = Vec::new();
        for prefix in &out {
            for l in 0..shape[f] {
                let mut v = prefix.clone();
                v.push(l);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

pub fn all_tuples(shape: &[usize], t: usize) -> Vec<RawTuple> {
    subsets(shape.len(), t)
        .into_iter()
        .flat_map(|s| {
            level_combos(shape, &s)
                .into_iter()
                .map(move |l| (s.clone(), l))
        })
        .collect()
}

pub fn matches(row: &[usize], tuple: &RawTuple) -> bool {
    tuple.0.iter().zip(&tuple.1).all(|(&f, &l)| row[f] == l)
}

/// `(covered, total)` by scanning every row for every tuple.
pub fn coverage(shape: &[usize], rows: &[Vec<usize>], t: usize) -> (usize, usize) {
    let all = all_tuples(shape, t);
    let covered = all
        .iter()
        .filter(|tuple| rows.iter().any(|r| matches(r, tuple)))
        .count();
    (covered, all.len())
}

pub fn missing(shape: &[usize], rows: &[Vec<usize>], t: usize) -> Vec<RawTuple> {
    all_tuples(shape, t)
        .into_iter()
        .filter(|tuple| !rows.iter().any(|r| matches(r, tuple)))
        .collect()
}

/// Tuples present in some FAIL and no PASS record of the same variant.
pub fn suspicious(report: &RunReport, shape: &[usize], s: usize) -> BTreeSet<(String, RawTuple)> {
    let variants: BTreeSet<&str> = report.records.iter().map(|r| r.variant_id.as_str()).collect();
    let mut out = BTreeSet::new();
    for v in variants {
        for tuple in all_tuples(shape, s) {
            let seen = |verdict| {
                report.records.iter().any(|r| {
                    r.variant_id == v && r.verdict == verdict && matches(r.assignment.values(), &tuple)
                })
            };
            if seen(Verdict::Fail) && !seen(Verdict::Pass) {
                out.insert((v.to_string(), tuple));
            }
        }
    }
    out
}

pub fn rows_of(suite: &citkit::TestSuite) -> Vec<Vec<usize>> {
    suite.rows().iter().map(|r| r.values().to_vec()).collect()
}

/// Model with `shape`, factors `f0..`, levels `l0..`.
pub fn model_with_shape(shape: &[usize]) -> Model {
    let text: String = shape
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let levels: Vec<String> = (0..n).map(|l| format!("l{l}")).collect();
            format!("f{i}: {}\n", levels.join(", "))
        })
        .collect();
    parse_model(&text).unwrap()
}
