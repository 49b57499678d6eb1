mod common;

use std::collections::BTreeSet;

use affplan_core::harness::{EvalReport, Rates};
use affplan_core::model::Oam;
use affplan_core::oam::{score_oam, OamError, OamMetrics};
use proptest::prelude::*;

#[test]
fn hand_computed_scores() {
    assert!(common::OAM_CASES.len() >= 20);
    let bad = common::oam_case_mismatches();
    assert!(bad.is_empty(), "{}", bad.join("\n"));
}

#[test]
fn hand_computed_report_rates() {
    let bad = common::rates_mismatches();
    assert!(bad.is_empty(), "{}", bad.join("\n"));
}

#[test]
fn class_sets_must_agree() {
    let err = score_oam(&Oam::parse("a: x\nb: y").unwrap(), &Oam::parse("a: x\nc: y").unwrap()).unwrap_err();
    match err {
        OamError::ClassMismatch {
            only_predicted,
            only_truth,
        } => {
            assert_eq!(only_predicted, vec!["b".to_string()]);
            assert_eq!(only_truth, vec!["c".to_string()]);
        }
        other => panic!("{other}"),
    }
}

#[test]
fn empty_report_rates_are_zero() {
    let r = Rates::of(&[]);
    assert_eq!(r.scenarios, 0);
    assert_eq!(r.success_rate, 0.0);
    assert_eq!(r.minimal_tools_rate, 0.0);
}

const AFFS: &[&str] = &["grasp", "contain", "pour", "support", "drink", "cut"];

fn oam_pair() -> impl Strategy<Value = (Oam, Oam)> {
    prop::collection::vec(
        (
            prop::collection::btree_set(prop::sample::select(AFFS), 0..5),
            prop::collection::btree_set(prop::sample::select(AFFS), 0..5),
        ),
        1..6,
    )
    .prop_map(|rows| {
        let (mut p, mut t) = (Oam::new(), Oam::new());
        for (i, (a, b)) in rows.into_iter().enumerate() {
            p.insert(format!("c{i}"), a);
            t.insert(format!("c{i}"), b);
        }
        (p, t)
    })
}

fn pairs(oam: &Oam) -> BTreeSet<(String, String)> {
    oam.entries
        .iter()
        .flat_map(|(c, affs)| affs.iter().map(move |a| (c.to_string(), a.clone())))
        .collect()
}

proptest! {
    #[test]
    fn score_counts_are_set_algebra((pred, truth) in oam_pair()) {
        let m = score_oam(&pred, &truth).unwrap();
        let (p, t) = (pairs(&pred), pairs(&truth));
        prop_assert_eq!(m.tp, p.intersection(&t).count());
        prop_assert_eq!(m.tp + m.fp, p.len());
        prop_assert_eq!(m.tp + m.fn_, t.len());
        prop_assert_eq!(m, OamMetrics::from_counts(m.tp, m.fp, m.fn_));
        for v in [m.precision, m.recall, m.f1] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        // swapping prediction and truth swaps precision and recall
        let s = score_oam(&truth, &pred).unwrap();
        prop_assert!((s.precision - m.recall).abs() < 1e-12);
        prop_assert!((s.recall - m.precision).abs() < 1e-12);
        prop_assert!((s.f1 - m.f1).abs() < 1e-12);
    }

    #[test]
    fn perfect_prediction_scores_one((pred, _) in oam_pair()) {
        let m = score_oam(&pred, &pred).unwrap();
        let expected = if pairs(&pred).is_empty() { 0.0 } else { 1.0 };
        prop_assert_eq!(m.f1, expected);
    }

    #[test]
    fn report_rates_recount(flags in prop::collection::vec((any::<bool>(), any::<Option<bool>>(), any::<Option<bool>>(), 0u8..3), 0..20)) {
        let template = common::sample_rows().remove(0);
        let rows: Vec<_> = flags
            .iter()
            .enumerate()
            .map(|(i, (success, plan_min, tools_min, subset))| {
                let mut r = template.clone();
                r.id = format!("s{i}");
                r.subset = format!("g{subset}");
                r.success = *success;
                r.plan_minimal = plan_min.filter(|_| *success);
                r.tools_minimal = tools_min.filter(|_| *success);
                r
            })
            .collect();
        let report = EvalReport::from_rows(rows.clone(), 0);
        prop_assert_eq!(report.overall.scenarios, rows.len());
        prop_assert_eq!(report.subsets.values().map(|r| r.scenarios).sum::<usize>(), rows.len());
        prop_assert_eq!(report.subsets.values().map(|r| r.successes).sum::<usize>(), report.overall.successes);
        let successes = rows.iter().filter(|r| r.success).count();
        prop_assert_eq!(report.overall.successes, successes);
        if !rows.is_empty() {
            prop_assert!((report.overall.success_rate - successes as f64 / rows.len() as f64).abs() < 1e-12);
        }
        prop_assert!(report.overall.minimal_plan_rate_all <= report.overall.success_rate + 1e-12);
    }
}
