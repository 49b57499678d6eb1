use std::collections::BTreeSet;

use affplan_core::logic::{to_dnf_with_limit, to_nnf};
use affplan_core::pddl::{Atom, Formula};
use affplan_core::simulator::goal_satisfied;
use proptest::prelude::*;

fn atom(i: usize) -> Atom {
    Atom::new("p", [format!("a{i}")])
}

fn formula() -> impl Strategy<Value = Formula> {
    let leaf = (0usize..8).prop_map(|i| Formula::Atom(atom(i)));
    leaf.prop_recursive(5, 48, 4, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            prop::collection::vec(inner.clone(), 0..4).prop_map(Formula::And),
            prop::collection::vec(inner, 0..4).prop_map(Formula::Or),
        ]
    })
}

/// Independent recursive evaluation.
fn truth(f: &Formula, on: &BTreeSet<Atom>) -> bool {
    match f {
        Formula::Atom(a) => on.contains(a),
        Formula::Not(g) => !truth(g, on),
        Formula::And(cs) => cs.iter().all(|c| truth(c, on)),
        Formula::Or(cs) => cs.iter().any(|c| truth(c, on)),
    }
}

fn negations_only_on_atoms(f: &Formula) -> bool {
    match f {
        Formula::Atom(_) => true,
        Formula::Not(g) => matches!(g.as_ref(), Formula::Atom(_)),
        Formula::And(cs) | Formula::Or(cs) => cs.iter().all(negations_only_on_atoms),
    }
}

/// Every assignment over the formula's atoms.
fn assignments(f: &Formula) -> Vec<BTreeSet<Atom>> {
    let atoms: Vec<Atom> = f.atoms().into_iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    (0u32..1 << atoms.len())
        .map(|bits| {
            atoms
                .iter()
                .enumerate()
                .filter(|(i, _)| bits >> i & 1 == 1)
                .map(|(_, a)| a.clone())
                .collect()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn nnf_is_equivalent_and_normal(f in formula()) {
        let n = to_nnf(&f);
        prop_assert!(negations_only_on_atoms(&n));
        for on in assignments(&f) {
            prop_assert_eq!(truth(&n, &on), truth(&f, &on));
        }
    }

    #[test]
    fn dnf_is_equivalent_and_consistent(f in formula()) {
        let d = to_dnf_with_limit(&f, 1 << 16).unwrap();
        for c in &d.conjuncts {
            let pos: BTreeSet<&Atom> = c.positive().collect();
            prop_assert!(c.negative().all(|a| !pos.contains(a)), "contradictory conjunct {}", c);
        }
        let table = assignments(&f);
        for on in &table {
            prop_assert_eq!(d.satisfied_by(&|a| on.contains(a)), truth(&f, on));
        }
        let satisfiable = table.iter().any(|on| truth(&f, on));
        prop_assert_eq!(d.is_unsatisfiable(), !satisfiable);
    }

    #[test]
    fn goal_satisfied_agrees_with_evaluation(f in formula()) {
        for on in assignments(&f) {
            prop_assert_eq!(goal_satisfied(&on, &f), truth(&f, &on));
            prop_assert_eq!(f.eval(&|a| on.contains(a)), truth(&f, &on));
        }
    }
}

#[test]
fn empty_connectives() {
    let on = BTreeSet::new();
    assert!(goal_satisfied(&on, &Formula::And(vec![])));
    assert!(!goal_satisfied(&on, &Formula::Or(vec![])));
    assert!(to_dnf_with_limit(&Formula::Or(vec![]), 10).unwrap().is_unsatisfiable());
}
