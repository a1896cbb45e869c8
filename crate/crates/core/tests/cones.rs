use proptest::prelude::*;
use seorder_core::cones::{self, Certificate, ConeKind, CpBudget, TriVerdict, Witness};
use seorder_core::linalg;
use seorder_core::nalgebra::DMatrix;

fn symmetric(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    proptest::collection::vec(-1.0..1.0f64, n * n).prop_map(move |v| {
        let a = DMatrix::from_vec(n, n, v);
        (&a + a.transpose()) * 0.5
    })
}

fn any_symmetric() -> impl Strategy<Value = DMatrix<f64>> {
    (1usize..=4).prop_flat_map(symmetric)
}

fn decide(a: &DMatrix<f64>, kind: ConeKind) -> TriVerdict {
    let tol = cones::default_tol(a);
    match kind {
        ConeKind::Copositive => cones::is_copositive(a, tol, cones::DEFAULT_COPOSITIVE_NODES),
        ConeKind::CompletelyPositive => cones::is_completely_positive(a, tol, CpBudget::default()),
        k => cones::in_cone(a, k, tol),
    }
    .unwrap()
}

fn witness_is_valid(a: &DMatrix<f64>, kind: ConeKind, w: &Witness) -> bool {
    let tol = cones::default_tol(a);
    match (kind, w) {
        (ConeKind::Copositive, Witness::Vector(x)) => {
            x.iter().all(|v| *v >= 0.0) && linalg::quad_form(a, x) < -tol * x.iter().map(|v| v * v).sum::<f64>()
        }
        (ConeKind::Psd, Witness::Vector(x)) => linalg::quad_form(a, x) < 0.0,
        (_, Witness::Entry { row, col, value }) => a[(*row, *col)] == *value,
        (ConeKind::CompletelyPositive, Witness::Vector(x)) => linalg::quad_form(a, x) < 0.0,
        _ => false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn psd_or_nonneg_implies_copositive(a in any_symmetric()) {
        let cop = decide(&a, ConeKind::Copositive);
        if decide(&a, ConeKind::Psd).is_yes() || decide(&a, ConeKind::EntrywiseNonneg).is_yes() {
            prop_assert!(cop.is_yes(), "{a}");
        }
    }

    #[test]
    fn completely_positive_is_doubly_nonnegative(a in any_symmetric()) {
        if decide(&a, ConeKind::CompletelyPositive).is_yes() {
            prop_assert!(decide(&a, ConeKind::Psd).is_yes());
            prop_assert!(decide(&a, ConeKind::EntrywiseNonneg).is_yes());
        }
    }

    #[test]
    fn no_verdicts_carry_real_witnesses(a in any_symmetric()) {
        for kind in [ConeKind::Psd, ConeKind::EntrywiseNonneg, ConeKind::Copositive] {
            if let TriVerdict::No(w) = decide(&a, kind) {
                prop_assert!(witness_is_valid(&a, kind, &w), "{kind:?} {w:?} on {a}");
            }
        }
    }

    /// 2x2 copositivity: `a, c >= 0` and `b >= -sqrt(ac)`.
    #[test]
    fn two_by_two_copositive_closed_form(a in -1.0..1.0f64, b in -1.0..1.0f64, c in -1.0..1.0f64) {
        let m = DMatrix::from_row_slice(2, 2, &[a, b, b, c]);
        let margin = if a < 0.0 || c < 0.0 { a.min(c) } else { b + (a * c).sqrt() };
        prop_assume!(margin.abs() > 1e-6);
        let v = decide(&m, ConeKind::Copositive);
        prop_assert_eq!(v.is_yes(), margin > 0.0, "{}", m);
        prop_assert!(!matches!(v, TriVerdict::Unknown(_)));
    }

    #[test]
    fn factor_products_are_completely_positive(n in 1usize..=4, k in 1usize..=5, seed in proptest::collection::vec(0.0..1.0f64, 20)) {
        let b = DMatrix::from_fn(n, k, |i, j| seed[(i * 5 + j) % 20]);
        let a = &b * b.transpose();
        prop_assume!(linalg::max_abs(&a) > 1e-3);
        match decide(&a, ConeKind::CompletelyPositive) {
            TriVerdict::Yes(Certificate::Factor(f)) => {
                prop_assert!(f.iter().all(|v| *v >= 0.0));
                prop_assert!(cones::factor_residual(&f, &a) <= 1e-6 * (1.0 + linalg::max_abs(&a)));
            }
            TriVerdict::Yes(_) => prop_assert!(n <= 4),
            other => prop_assert!(false, "{other:?} for {a}"),
        }
    }

    #[test]
    fn copositive_pairs_nonnegatively_with_completely_positive(a in symmetric(3), seed in proptest::collection::vec(0.0..1.0f64, 9)) {
        let b = DMatrix::from_vec(3, 3, seed);
        let cp = &b * b.transpose();
        if decide(&a, ConeKind::Copositive).is_yes() {
            prop_assert!(cones::dual_pairing(&a, &cp).unwrap() >= -1e-9);
        }
    }
}

#[test]
fn horn_matrix_is_copositive_not_psd() {
    let h = DMatrix::from_row_slice(
        5,
        5,
        &[
            1., -1., 1., 1., -1., -1., 1., -1., 1., 1., 1., -1., 1., -1., 1., 1., 1., -1., 1., -1., -1., 1., 1., -1., 1.,
        ],
    );
    assert!(decide(&h, ConeKind::Copositive).is_yes());
    assert!(decide(&h, ConeKind::Psd).is_no());
}

#[test]
fn sign_pattern_cones() {
    let a = DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]);
    assert!(decide(&a, ConeKind::OffDiagNonnegDiagZero).is_yes());
    assert!(decide(&a, ConeKind::DiagNonnegOffDiagZero).is_no());
    let d = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
    assert!(decide(&d, ConeKind::DiagNonnegOffDiagZero).is_yes());
    assert!(decide(&d, ConeKind::OffDiagNonnegDiagZero).is_no());
}

#[test]
fn non_symmetric_input_is_an_error() {
    let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.1, 1.0]);
    assert!(cones::in_cone(&a, ConeKind::Psd, 1e-9).is_err());
}
