//! Seeded random instances shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use ncfree::algebra::{AlgElement, AlgebraDescriptor, LinMapRep, Mat, C64};
use ncfree::jacobi::{BWord, JacobiParams};
use ncfree::joint::{ColoredWord, JointModel};
use ncfree::partitions::Color;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn algebras() -> [AlgebraDescriptor; 2] {
    [AlgebraDescriptor::diagonal(2), AlgebraDescriptor::full(2)]
}

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(-1.0..=1.0)
}

fn random_matrix(rng: &mut ChaCha8Rng, alg: AlgebraDescriptor) -> Mat {
    let d = alg.dim;
    let is_diag = alg.kind == ncfree::algebra::AlgebraKind::Diagonal;
    DMatrix::from_fn(d, d, |i, j| {
        if is_diag && i != j {
            C64::new(0.0, 0.0)
        } else if is_diag || d == 1 {
            C64::new(unit(rng), 0.0)
        } else {
            C64::new(unit(rng), unit(rng))
        }
    })
}

/// Any element with entries in the unit box.
pub fn random_element(rng: &mut ChaCha8Rng, alg: AlgebraDescriptor) -> AlgElement {
    AlgElement::new(alg, random_matrix(rng, alg)).unwrap()
}

pub fn random_self_adjoint(rng: &mut ChaCha8Rng, alg: AlgebraDescriptor) -> AlgElement {
    let m = random_matrix(rng, alg);
    AlgElement::new(alg, (&m + m.adjoint()) * C64::new(0.5, 0.0)).unwrap()
}

/// Kraus rank 1 or 2; on the diagonal algebra each operator is diagonal or
/// anti-diagonal so the subalgebra is preserved.
pub fn random_cp_map(rng: &mut ChaCha8Rng, alg: AlgebraDescriptor) -> LinMapRep {
    let rank = rng.gen_range(1..=2);
    let ops = (0..rank)
        .map(|_| {
            if alg.kind == ncfree::algebra::AlgebraKind::Diagonal {
                let d = alg.dim;
                let anti = rng.gen_bool(0.5);
                DMatrix::from_fn(d, d, |i, j| {
                    let on = if anti { i + j == d - 1 } else { i == j };
                    if on {
                        C64::new(unit(rng), 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
            } else {
                random_matrix(rng, AlgebraDescriptor::full(alg.dim))
            }
        })
        .collect();
    LinMapRep::kraus(alg, ops).unwrap()
}

/// Head of length 0..=3; a quarter of the instances are truncated.
pub fn random_params(rng: &mut ChaCha8Rng, alg: AlgebraDescriptor) -> JacobiParams {
    let head = rng.gen_range(0..=3);
    let head_lambda = (0..head).map(|_| random_self_adjoint(rng, alg)).collect();
    let head_alpha = (0..head).map(|_| random_cp_map(rng, alg)).collect();
    let tail_lambda = random_self_adjoint(rng, alg);
    let tail_alpha = if rng.gen_bool(0.25) { LinMapRep::zero(alg) } else { random_cp_map(rng, alg) };
    JacobiParams::auto(alg, head_lambda, head_alpha, tail_lambda, tail_alpha).unwrap()
}

pub fn random_word(rng: &mut ChaCha8Rng, alg: AlgebraDescriptor, degree: usize) -> BWord {
    BWord::new(alg, (0..=degree).map(|_| random_element(rng, alg)).collect()).unwrap()
}

pub fn random_model(rng: &mut ChaCha8Rng, alg: AlgebraDescriptor) -> JointModel {
    JointModel::new(random_params(rng, alg), random_params(rng, alg)).unwrap()
}

pub fn random_colors(rng: &mut ChaCha8Rng, n: usize) -> Vec<Color> {
    (0..n).map(|_| if rng.gen_bool(0.5) { Color::Blue } else { Color::Red }).collect()
}

pub fn random_colored_word(rng: &mut ChaCha8Rng, alg: AlgebraDescriptor, degree: usize) -> ColoredWord {
    let w = random_word(rng, alg, degree);
    ColoredWord::from_word(&w, random_colors(rng, degree)).unwrap()
}
