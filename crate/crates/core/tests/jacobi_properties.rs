mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

use ncfree::algebra::{gram_psd_check, tensor_element, AlgElement, AlgebraDescriptor, LinMapRep, C64};
use ncfree::jacobi::{boolean_power, fock_moment, make_named, moment, strip, BWord, JacobiParams, NamedFamily};
use ncfree::scalar::{boolean_cumulants, moments_to_cumulants, scalar_jacobi_moments};

fn scalar_moments(p: &JacobiParams, n_max: usize) -> Vec<f64> {
    let s = AlgebraDescriptor::scalar();
    (0..=n_max).map(|n| moment(p, &BWord::power(s, n)).unwrap().as_scalar().unwrap().re).collect()
}

fn random_scalar_params(seed: u64) -> JacobiParams {
    common::random_params(&mut common::rng(seed), AlgebraDescriptor::scalar())
}

/// Monomials `b_0 X b_1 … X b_n`, `n ≤ max_degree`, with matrix-unit coefficients.
fn unit_monomials(alg: AlgebraDescriptor, max_degree: usize) -> Vec<Vec<AlgElement>> {
    let basis = alg.basis();
    let mut out: Vec<Vec<AlgElement>> = basis.iter().map(|b| vec![b.clone()]).collect();
    let mut layer = out.clone();
    for _ in 0..max_degree {
        layer = layer
            .iter()
            .flat_map(|w| basis.iter().map(move |b| w.iter().cloned().chain(std::iter::once(b.clone())).collect()))
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

/// `P^* Q` as a word.
fn adjoint_product(p: &[AlgElement], q: &[AlgElement]) -> Vec<AlgElement> {
    let mut coeffs: Vec<AlgElement> = p.iter().rev().map(AlgElement::adjoint).collect();
    let last = coeffs.pop().unwrap();
    coeffs.push(&last * &q[0]);
    coeffs.extend(q[1..].iter().cloned());
    coeffs
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partition_sum_matches_fock(seed in any::<u64>(), full in any::<bool>(), degree in 0usize..=6) {
        let alg = common::algebras()[full as usize];
        let mut rng = common::rng(seed);
        let params = common::random_params(&mut rng, alg);
        let w = common::random_word(&mut rng, alg, degree);
        let a = moment(&params, &w).unwrap();
        prop_assert!(a.approx_eq(&fock_moment(&params, &w).unwrap(), 1e-9, 1e-13));
    }

    #[test]
    fn exponential_bound(seed in any::<u64>(), full in any::<bool>(), degree in 0usize..=8) {
        let alg = common::algebras()[full as usize];
        let mut rng = common::rng(seed);
        let params = common::random_params(&mut rng, alg);
        let w = common::random_word(&mut rng, alg, degree);
        let m = params.norm_bound().max(1.0);
        let bound = (4.0 * m).powi(degree as i32) * w.coeffs().iter().map(AlgElement::norm).product::<f64>();
        prop_assert!(moment(&params, &w).unwrap().norm() <= bound * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn stripping_identity(seed in any::<u64>(), full in any::<bool>(), degree in 1usize..=6) {
        // μ[b_0 X W] = b_0 λ_1 μ[W] + Σ_j b_0 α_1(μ_2[b_1 X … X b_{j-1}]) μ[b_j X …]
        let alg = common::algebras()[full as usize];
        let mut rng = common::rng(seed);
        let params = common::random_params(&mut rng, alg);
        let stripped = strip(&params);
        let w = common::random_word(&mut rng, alg, degree);
        let b = w.coeffs();
        let word = |c: &[AlgElement]| BWord::new(alg, c.to_vec()).unwrap();
        let mut rhs = &(&b[0] * params.lambda(1)) * &moment(&params, &word(&b[1..])).unwrap();
        for j in 2..=degree {
            let inner = moment(&stripped, &word(&b[1..j])).unwrap();
            let outer = moment(&params, &word(&b[j..])).unwrap();
            rhs = &rhs + &(&(&b[0] * &params.alpha(1).apply(&inner)) * &outer);
        }
        prop_assert!(moment(&params, &w).unwrap().approx_eq(&rhs, 1e-9, 1e-12));
    }

    #[test]
    fn amplified_moments(seed in any::<u64>(), full in any::<bool>(), degree in 0usize..=5) {
        // coefficients E_{p q} ⊗ b: the moment is E_{p_0 q_0} ⋯ E_{p_n q_n} ⊗ μ[b_0 X … X b_n]
        let alg = common::algebras()[full as usize];
        let mut rng = common::rng(seed);
        let params = common::random_params(&mut rng, alg);
        let w = common::random_word(&mut rng, alg, degree);
        let units: Vec<DMatrix<C64>> = (0..=degree)
            .map(|_| {
                let mut e = DMatrix::zeros(2, 2);
                e[(rng.gen_range(0..2), rng.gen_range(0..2))] = C64::new(1.0, 0.0);
                e
            })
            .collect();
        let big: Vec<AlgElement> = units.iter().zip(w.coeffs()).map(|(e, b)| tensor_element(e, b)).collect();
        let big_word = BWord::new(big[0].algebra(), big).unwrap();
        let lhs = moment(&params.amplify(2), &big_word).unwrap();
        let e = units.iter().skip(1).fold(units[0].clone(), |acc, u| acc * u);
        let rhs = tensor_element(&e, &moment(&params, &w).unwrap());
        prop_assert!(lhs.approx_eq(&rhs, 1e-9, 1e-13));
        let plain = moment(&params.amplify(2), &w.amplify(2)).unwrap();
        prop_assert!(plain.approx_eq(&ncfree::algebra::amplify_element(&moment(&params, &w).unwrap(), 2), 1e-9, 1e-13));
    }

    #[test]
    fn boolean_power_scales_boolean_cumulants(seed in any::<u64>(), t in 0.0f64..3.0) {
        let params = random_scalar_params(seed);
        let s = AlgebraDescriptor::scalar();
        let powered = boolean_power(&params, &LinMapRep::scalar(s, t)).unwrap();
        let b = boolean_cumulants(&scalar_moments(&params, 8)).unwrap();
        let bt = boolean_cumulants(&scalar_moments(&powered, 8)).unwrap();
        for n in 1..=8 {
            prop_assert!((bt[n] - t * b[n]).abs() <= 1e-9 * (1.0 + b[n].abs() * t));
        }
    }

    #[test]
    fn meixner_r_transform_is_quadratic(lambda in -2.0f64..2.0, alpha in -0.9f64..2.0) {
        // R/z² = 1 + λ R/z + α (R/z)², R(z) = Σ κ_n z^n
        let s = AlgebraDescriptor::scalar();
        let p = make_named(&NamedFamily::Meixner {
            lambda: AlgElement::scalar(s, C64::new(lambda, 0.0)),
            alpha: LinMapRep::scalar(s, alpha),
            eta: LinMapRep::identity(s),
        }).unwrap();
        let kappa = moments_to_cumulants(&scalar_moments(&p, 10)).unwrap();
        // r_j = κ_{j+1}: coefficients of R/z; R/z² has coefficients κ_{j+2}
        let r: Vec<f64> = (0..=9).map(|j| kappa[j + 1]).collect();
        for j in 0..=8 {
            let sq: f64 = (0..=j).map(|i| r[i] * r[j - i]).sum();
            let rhs = if j == 0 { 1.0 } else { 0.0 } + lambda * r[j] + alpha * sq;
            prop_assert!((kappa[j + 2] - rhs).abs() <= 1e-8 * (1.0 + rhs.abs()), "j={} {} vs {}", j, kappa[j + 2], rhs);
        }
    }

    #[test]
    fn scalar_routes_agree(seed in any::<u64>()) {
        let params = random_scalar_params(seed);
        let lam: Vec<f64> = (1..=6).map(|i| params.lambda(i).as_scalar().unwrap().re).collect();
        let alp: Vec<f64> = (1..=6).map(|i| params.alpha(i).apply(&AlgElement::one(AlgebraDescriptor::scalar())).as_scalar().unwrap().re).collect();
        let exact = scalar_jacobi_moments(&lam, &alp, 8);
        for (a, b) in exact.iter().zip(scalar_moments(&params, 8)) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn positive_parameters_give_psd_gram(seed in any::<u64>(), full in any::<bool>()) {
        let alg = common::algebras()[full as usize];
        let params = common::random_params(&mut common::rng(seed), alg);
        prop_assume!(params.positive());
        let monomials = unit_monomials(alg, if full { 2 } else { 3 });
        let grid: Vec<Vec<AlgElement>> = monomials
            .iter()
            .map(|p| monomials.iter().map(|q| moment(&params, &BWord::new(alg, adjoint_product(p, q)).unwrap()).unwrap()).collect())
            .collect();
        prop_assert!(gram_psd_check(&grid).unwrap());
    }
}

#[test]
fn negative_variance_breaks_gram_positivity() {
    let alg = AlgebraDescriptor::diagonal(2);
    let p = make_named(&NamedFamily::Semicircular { lambda: None, alpha: LinMapRep::identity(alg).scale(-1.0) }).unwrap();
    let monomials = unit_monomials(alg, 1);
    let grid: Vec<Vec<AlgElement>> = monomials
        .iter()
        .map(|a| monomials.iter().map(|b| moment(&p, &BWord::new(alg, adjoint_product(a, b)).unwrap()).unwrap()).collect())
        .collect();
    assert!(!gram_psd_check(&grid).unwrap());
}
