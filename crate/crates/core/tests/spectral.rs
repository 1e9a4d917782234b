mod common;

use common::*;
use proptest::prelude::*;
use traceineq::ensembles::{contraction_from_rng, ginibre};
use traceineq::matcore::{
    apply_spectral, hermitian_part, loewner_margin, spectral_decompose, trace_of_product,
    HermitianMatrix, ScalarFunction, C64,
};

fn frob(h: &HermitianMatrix) -> f64 {
    h.frobenius_norm()
}

#[test]
fn reconstruction_and_unitarity() {
    for seed in 0..20 {
        let h = random_hermitian(seed, 5);
        let d = spectral_decompose(&h).unwrap();
        let u = &d.eigenvectors;
        let dev = (u.adjoint() * u - traceineq::matcore::CMatrix::identity(5, 5)).norm();
        assert!(dev <= 1e-10, "unitarity {dev}");
        let rebuilt = d.reconstruct();
        assert!(frob(&rebuilt.sub(&h).unwrap()) <= 1e-10 * frob(&h));
        assert!(d.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn reconstruction_with_clustered_spectra() {
    for seed in 0..500 {
        let u = random_unitary(seed, 4);
        let base = 0.3 + 0.4 * (seed as f64 / 500.0);
        let spectrum = [base, base + 1e-3, base + 2e-7, 0.9];
        let h = diag_in_basis(&u, &spectrum);
        let d = spectral_decompose(&h).unwrap();
        assert!(frob(&d.reconstruct().sub(&h).unwrap()) <= 1e-13, "seed {seed}");
        let sq = apply_spectral(&h, ScalarFunction::Square).unwrap();
        assert!(frob(&sq.sub(&h.square()).unwrap()) <= 1e-13);
    }
}

#[test]
fn eigenvalues_match_jacobi_oracle() {
    for seed in 0..10 {
        let h = random_hermitian(100 + seed, 4);
        let ours = spectral_decompose(&h).unwrap().eigenvalues;
        let oracle = jacobi_eigenvalues(&h);
        for (x, y) in ours.iter().zip(&oracle) {
            assert!((x - y).abs() < 1e-12, "{ours:?} vs {oracle:?}");
        }
    }
}

#[test]
fn decomposition_is_deterministic() {
    let h = random_hermitian(3, 6);
    assert_eq!(spectral_decompose(&h).unwrap(), spectral_decompose(&h).unwrap());
}

#[test]
fn pow_one_is_identity_map() {
    for seed in 0..10 {
        let c = contraction_from_rng(&mut rng(seed), 4, 0.0).into_hermitian();
        let p = apply_spectral(&c, ScalarFunction::Pow(1.0)).unwrap();
        assert!(frob(&p.sub(&c).unwrap()) < 1e-12);
    }
}

#[test]
fn contraction_margin_against_identity() {
    for seed in 0..20 {
        let c = contraction_from_rng(&mut rng(seed), 4, 0.0).into_hermitian();
        let margin = loewner_margin(&c, &HermitianMatrix::identity(4)).unwrap();
        let top = jacobi_eigenvalues(&c).last().copied().unwrap();
        assert!(margin >= 0.0);
        assert!((margin - (1.0 - top)).abs() < 1e-12);
    }
}

#[test]
fn trace_of_hermitian_product_is_real() {
    for seed in 0..20 {
        let p = random_hermitian(seed, 5);
        let q = random_hermitian(seed + 1000, 5);
        let t = trace_of_product(p.as_matrix(), q.as_matrix());
        assert!(t.imag_residual <= 1e-12);
        assert!(p.mul(&q).unwrap().trace_real().imag_residual <= 1e-12);
    }
}

#[test]
fn real_symmetric_inputs_agree_with_complex_path() {
    // real symmetric matrices run through the same complex solver
    let h = HermitianMatrix::from_real_rows(&[
        vec![0.6, 0.1, 0.05],
        vec![0.1, 0.3, -0.02],
        vec![0.05, -0.02, 0.1],
    ])
    .unwrap();
    let l = apply_spectral(&h, ScalarFunction::Log).unwrap();
    assert!(l.as_matrix().iter().all(|z| z.im.abs() < 1e-12));
}

fn function_strategy() -> impl Strategy<Value = ScalarFunction> {
    prop_oneof![
        Just(ScalarFunction::Log),
        (0.05f64..2.0).prop_map(ScalarFunction::Pow),
        (-1.0f64..-0.05).prop_map(ScalarFunction::Pow),
        Just(ScalarFunction::NegXLogX),
        Just(ScalarFunction::XLogSq),
        Just(ScalarFunction::Square),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unitary_covariance(seed in any::<u64>(), dim in 1usize..6, f in function_strategy()) {
        let h = contraction_from_rng(&mut rng(seed), dim, 1e-3).into_hermitian();
        let u = random_unitary(seed, dim);
        let lhs = apply_spectral(&h.conjugate_by(&u), f).unwrap();
        let rhs = apply_spectral(&h, f).unwrap().conjugate_by(&u);
        prop_assert!(frob(&lhs.sub(&rhs).unwrap()) <= 1e-9 * (1.0 + frob(&rhs)));
    }

    #[test]
    fn spectral_mapping(seed in any::<u64>(), dim in 1usize..6, f in function_strategy()) {
        let h = contraction_from_rng(&mut rng(seed), dim, 1e-3).into_hermitian();
        let mut expected: Vec<f64> = jacobi_eigenvalues(&h).iter().map(|&l| f.eval(l, 1e-12)).collect();
        expected.sort_by(f64::total_cmp);
        let got = spectral_decompose(&apply_spectral(&h, f).unwrap()).unwrap().eigenvalues;
        for (g, e) in got.iter().zip(&expected) {
            prop_assert!((g - e).abs() <= 1e-10 * (1.0 + e.abs()), "{got:?} vs {expected:?}");
        }
    }

    #[test]
    fn loewner_margin_sign_symmetry(seed in any::<u64>(), dim in 1usize..6) {
        let a = random_hermitian(seed, dim);
        let b = random_hermitian(seed.wrapping_add(1), dim);
        let lhs = loewner_margin(&a, &b).unwrap();
        let rhs = loewner_margin(&b.neg(), &a.neg()).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12);
    }

    #[test]
    fn hermitization_idempotent(seed in any::<u64>(), dim in 1usize..7) {
        let m = ginibre(&mut rng(seed), dim) * C64::new(3.0, -1.0);
        let once = hermitian_part(&m);
        prop_assert_eq!(hermitian_part(&once), once);
    }
}
