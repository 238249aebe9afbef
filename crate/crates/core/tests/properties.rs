use delaystab_core::criteria::{
    bound_criterion, certify_block_system, certify_second_order, const_criterion, exact_criterion, reduce_second_order,
    sweep_max_tau, CoefficientEnvelope, CrossNorms, Form, SecondOrderSpec,
};
use delaystab_core::linalg::{mat_exp, matrix_measure, norm, q, qi, spectral_abscissa, Matrix, NormKind, Scalar, Q};
use delaystab_core::mmatrix::m_matrix_check;
use delaystab_core::sim::coppel_check;
use num_traits::Signed;
use proptest::prelude::*;

const EXACT: [NormKind; 2] = [NormKind::Inf, NormKind::One];
const ALL: [NormKind; 3] = [NormKind::Inf, NormKind::One, NormKind::Two];

fn rational() -> impl Strategy<Value = Q> {
    (-12i64..=12, 1i64..=4).prop_map(|(n, d)| q(n, d))
}

fn qmatrix(n: usize) -> impl Strategy<Value = Matrix<Q>> {
    proptest::collection::vec(rational(), n * n).prop_map(move |v| Matrix::new(n, n, v).unwrap())
}

fn fmatrix(n: usize) -> impl Strategy<Value = Matrix<f64>> {
    proptest::collection::vec(-3.0f64..3.0, n * n).prop_map(move |v| Matrix::new(n, n, v).unwrap())
}

fn sized_qmatrix() -> impl Strategy<Value = Matrix<Q>> {
    (1usize..=4).prop_flat_map(qmatrix)
}

fn sized_pair() -> impl Strategy<Value = (Matrix<Q>, Matrix<Q>)> {
    (1usize..=4).prop_flat_map(|n| (qmatrix(n), qmatrix(n)))
}

/// Diagonally dominant with positive diagonal, so `mu(-A) < 0` in the inf norm.
fn damping(n: usize) -> impl Strategy<Value = Matrix<Q>> {
    (proptest::collection::vec(rational(), n * n), proptest::collection::vec(1i64..=8, n)).prop_map(move |(v, diag)| {
        let mut m = Matrix::new(n, n, v.into_iter().map(|x| x / qi(4)).collect()).unwrap();
        for i in 0..n {
            let off: Q = (0..n).filter(|&j| j != i).map(|j| m[(i, j)].abs()).fold(qi(0), |a, b| a + b);
            m[(i, i)] = off + qi(diag[i]);
        }
        m
    })
}

fn constant_spec(n: usize) -> impl Strategy<Value = SecondOrderSpec<Q>> {
    (damping(n), qmatrix(n), 0i64..=20).prop_map(|(a, b, t)| {
        let b = b.scale(&q(1, 8));
        SecondOrderSpec::constant(a, b, None, q(t, 400), NormKind::Inf).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn measure_and_norm_are_subadditive((a, b) in sized_pair()) {
        for k in EXACT {
            let s = &a + &b;
            prop_assert!(matrix_measure(&s, k).unwrap() <= matrix_measure(&a, k).unwrap() + matrix_measure(&b, k).unwrap());
            prop_assert!(norm(&s, k).unwrap() <= norm(&a, k).unwrap() + norm(&b, k).unwrap());
        }
        let (fa, fb) = (a.to_f64(), b.to_f64());
        let s = &fa + &fb;
        let lhs = matrix_measure(&s, NormKind::Two).unwrap();
        let rhs = matrix_measure(&fa, NormKind::Two).unwrap() + matrix_measure(&fb, NormKind::Two).unwrap();
        prop_assert!(lhs <= rhs + 1e-9);
    }

    #[test]
    fn measure_is_positively_homogeneous(a in sized_qmatrix(), c in 0i64..=9) {
        for k in EXACT {
            let c = q(c, 3);
            prop_assert_eq!(matrix_measure(&a.scale(&c), k).unwrap(), c * matrix_measure(&a, k).unwrap());
        }
    }

    #[test]
    fn norm_dominates_measure(a in sized_qmatrix()) {
        for k in EXACT {
            prop_assert!(matrix_measure(&a, k).unwrap().abs() <= norm(&a, k).unwrap());
        }
        let f = a.to_f64();
        prop_assert!(matrix_measure(&f, NormKind::Two).unwrap().abs() <= norm(&f, NormKind::Two).unwrap() + 1e-9);
    }

    #[test]
    fn spectral_abscissa_is_below_every_measure(a in (1usize..=5).prop_flat_map(fmatrix)) {
        let s = spectral_abscissa(&a).unwrap();
        for k in ALL {
            prop_assert!(s <= matrix_measure(&a, k).unwrap() + 1e-9);
        }
    }

    #[test]
    fn exponential_obeys_the_measure_bound(d in (1usize..=5).prop_flat_map(fmatrix), t in 0.0f64..10.0) {
        for k in ALL {
            let lhs = norm(&mat_exp(&d, t).unwrap(), k).unwrap();
            let rhs = (t * matrix_measure(&d, k).unwrap()).exp();
            prop_assert!(lhs <= rhs + 1e-9 * rhs.max(1.0), "{k:?}: {lhs} > {rhs}");
        }
        prop_assert!(coppel_check(&d, 10.0, 25, NormKind::Inf).unwrap().holds);
    }

    #[test]
    fn z_matrix_minors_iff_nonnegative_inverse(
        n in 1usize..=4,
        seed in proptest::collection::vec((0i64..=12, 0i64..=4), 16),
    ) {
        let m = Matrix::from_fn(n, n, |i, j| {
            let (d, o) = seed[i * 4 + j];
            if i == j { q(d, 4) } else { q(-o, 4) }
        });
        let rep = m_matrix_check(&m).unwrap();
        let minors = rep.leading_minors.iter().all(|x| x.gt_zero());
        let inverse = rep.inverse.as_ref().is_some_and(|inv| inv.data().iter().all(|x| !x.lt_zero()));
        prop_assert_eq!(minors, inverse);
        prop_assert_eq!(rep.is_m_matrix, minors);
    }

    #[test]
    fn ratio_form_iff_block_test_on_the_reduction(spec in (1usize..=3).prop_flat_map(constant_spec)) {
        let Ok(ratio) = certify_second_order(&spec, Form::Ratio) else { return Ok(()) };
        let block = certify_block_system(&reduce_second_order(&spec).unwrap()).unwrap();
        prop_assert_eq!(ratio.is_certified(), block.is_certified());
    }

    #[test]
    fn shift_equal_to_a_specializes(spec in (1usize..=3).prop_flat_map(constant_spec)) {
        let (a, b) = spec.constant_coefficients().unwrap();
        let c41 = const_criterion(a, b, NormKind::Inf).unwrap().holds(&spec.tau);
        let Ok(t41) = exact_criterion(&spec) else { return Ok(()) };
        prop_assert_eq!(t41.holds(&spec.tau), c41);
        prop_assert_eq!(bound_criterion(&spec).unwrap().holds(&spec.tau), c41);
    }

    #[test]
    fn certified_set_is_an_interval(spec in (1usize..=3).prop_flat_map(constant_spec), t in 0i64..=40) {
        let crit = bound_criterion(&spec).unwrap();
        let tau = q(t, 400);
        if crit.holds(&tau) {
            for s in 0..t {
                prop_assert!(crit.holds(&q(s, 400)));
            }
        }
    }

    #[test]
    fn sweep_matches_the_closed_form(spec in (1usize..=3).prop_flat_map(constant_spec)) {
        let crit = bound_criterion(&spec).unwrap();
        let cf = crit.closed_form();
        let r = sweep_max_tau(|t: &Q| Ok(crit.holds(t)), 5.0, cf.clone()).unwrap();
        if let Some(cf) = cf {
            let c = cf.to_f64_lossy().min(5.0);
            prop_assert!((r.tau_max - c).abs() <= 1e-9 * c.max(1.0));
            prop_assert!(!crit.holds(&cf) || cf.to_f64_lossy() >= 5.0);
        }
    }

    #[test]
    fn bounds_never_beat_exact_constants(spec in (1usize..=3).prop_flat_map(constant_spec), pct in 0i64..=20) {
        let Ok(exact) = certify_second_order(&spec, Form::Bound) else { return Ok(()) };
        let f = q(100 + pct, 100);
        let k = spec.norm;
        let c = spec.cross_norms().unwrap();
        let loose = SecondOrderSpec::with_bounds(
            spec.a.inflated(&f, k).unwrap(),
            CoefficientEnvelope::bounds(spec.b.sup_norm(k).unwrap() * f.clone(), None).unwrap(),
            spec.a_tilde.clone(),
            spec.alpha.clone(),
            spec.tau.clone(),
            k,
            Some(CrossNorms { n_main: c.n_main * f.clone(), n_cross: c.n_cross * f.clone(), n_b: c.n_b * f }),
        )
        .unwrap();
        let loose = certify_second_order(&loose, Form::Bound).unwrap();
        prop_assert!(exact.is_certified() || !loose.is_certified());
    }
}
