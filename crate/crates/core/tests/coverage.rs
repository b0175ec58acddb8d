mod common;

use citkit::coverage::{measure, missing_tuples};
use citkit::generator::generate_greedy;
use citkit::{Assignment, TestSuite, Tuple};
use proptest::prelude::*;

use common::{coverage, missing, model_with_shape, qemu, rows_of};

#[test]
fn exhaustive_suite_is_fully_covered() {
    let model = qemu();
    let report = measure(&TestSuite::exhaustive(&model), &model, &[2, 3, 4, 5]).unwrap();
    assert_eq!(report.n, 200);
    for c in &report.strengths {
        assert!(c.is_complete());
        assert_eq!(c.decimal(), "1.0000");
    }
}

#[test]
fn empty_suite_misses_all_singles() {
    let model = qemu();
    let missing = missing_tuples(&TestSuite::empty(&model), &model, 1).unwrap();
    assert_eq!(missing.len(), 16);
    assert_eq!(missing[0], Tuple::new(vec![0], vec![0]).unwrap());
}

#[test]
fn pairwise_suite_at_full_strength_is_row_count_over_200() {
    let model = qemu();
    let suite = generate_greedy(&model, 2, 7).unwrap();
    let report = measure(&suite, &model, &[2, 5]).unwrap();
    assert!(report.at(2).unwrap().is_complete());
    let five = report.at(5).unwrap();
    let (covered, total) = coverage(&model.shape(), &rows_of(&suite), 5);
    assert_eq!((covered, total), (suite.distinct_rows(), 200));
    assert_eq!(five.fraction, format!("{}/200", suite.distinct_rows()));
}

#[test]
fn removing_one_row_leaves_exactly_its_five_tuple() {
    let model = qemu();
    let removed = Assignment::new(vec![3, 1, 2, 0, 1]);
    let rows: Vec<_> = model
        .exhaustive_assignments()
        .into_iter()
        .filter(|r| *r != removed)
        .collect();
    let suite = TestSuite::new(&model, rows, None).unwrap();
    assert_eq!(
        missing_tuples(&suite, &model, 5).unwrap(),
        vec![Tuple::new(vec![0, 1, 2, 3, 4], removed.into_values()).unwrap()]
    );
    for s in 1..=4 {
        assert!(missing_tuples(&suite, &model, s).unwrap().is_empty());
    }
}

fn arb_suite() -> impl Strategy<Value = (Vec<usize>, Vec<Vec<usize>>, u64)> {
    prop::collection::vec(1usize..=4, 1..=5).prop_flat_map(|shape| {
        let row = shape.iter().map(|&n| 0..n).collect::<Vec<_>>();
        (Just(shape), prop::collection::vec(row, 0..=20), any::<u64>())
    })
}

proptest! {
    #[test]
    fn measure_and_missing_agree_with_oracle((shape, rows, _seed) in arb_suite()) {
        let model = model_with_shape(&shape);
        let suite = TestSuite::new(&model, rows.iter().cloned().map(Assignment::new).collect(), None).unwrap();
        let strengths: Vec<usize> = (1..=shape.len()).collect();
        let report = measure(&suite, &model, &strengths).unwrap();
        for c in &report.strengths {
            let (covered, total) = coverage(&shape, &rows, c.s);
            prop_assert_eq!((c.covered, c.total), (covered as u64, total as u64));
            let lib_missing = missing_tuples(&suite, &model, c.s).unwrap();
            prop_assert_eq!(c.covered + lib_missing.len() as u64, c.total);
            let raw: Vec<_> = lib_missing.iter().map(|t| (t.factors().to_vec(), t.levels().to_vec())).collect();
            prop_assert_eq!(raw, missing(&shape, &rows, c.s));
        }
    }

    #[test]
    fn measure_ignores_row_order_and_duplicates((shape, rows, seed) in arb_suite()) {
        let model = model_with_shape(&shape);
        let strengths: Vec<usize> = (1..=shape.len()).collect();
        let original = TestSuite::new(&model, rows.iter().cloned().map(Assignment::new).collect(), None).unwrap();
        let mut shuffled = rows.clone();
        shuffled.rotate_left(if rows.is_empty() { 0 } else { seed as usize % rows.len() });
        shuffled.reverse();
        shuffled.extend(rows.iter().take(3).cloned());
        let other = TestSuite::new(&model, shuffled.into_iter().map(Assignment::new).collect(), None).unwrap();
        let a = measure(&original, &model, &strengths).unwrap();
        let b = measure(&other, &model, &strengths).unwrap();
        prop_assert_eq!(a.strengths, b.strengths);
    }
}
