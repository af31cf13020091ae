#![allow(dead_code)]

use std::collections::BTreeMap;

use finsec::{CoefficientRule, LatticePoint, Operator, Rational, Scalar, StarlikeDomain};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn interval() -> StarlikeDomain {
    StarlikeDomain::interval(Rational::from_integer(-1), Rational::from_integer(1)).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn small_int(rng: &mut ChaCha8Rng) -> Scalar {
    Complex::new(rng.gen_range(-3..=3) as f64, 0.0)
}

/// Random 1-D band operator of exact width `width` with small-integer
/// coefficients; diagonals are constant or periodic with period 2 or 3.
pub fn random_band(rng: &mut ChaCha8Rng, width: i64) -> Operator {
    let mut diagonals = BTreeMap::new();
    for d in -width..=width {
        let edge = d.abs() == width;
        if !edge && rng.gen_bool(0.3) {
            continue;
        }
        let rule = if rng.gen_bool(0.5) {
            let mut c = small_int(rng);
            while edge && c.re == 0.0 {
                c = small_int(rng);
            }
            CoefficientRule::Constant(c)
        } else {
            let period = rng.gen_range(2..=3);
            let mut values: Vec<Scalar> = (0..period).map(|_| small_int(rng)).collect();
            if edge && values.iter().all(|v| v.re == 0.0) {
                values[0] = Complex::new(1.0, 0.0);
            }
            CoefficientRule::Periodic { periods: vec![period], values }
        };
        diagonals.insert(LatticePoint::from(d), rule);
    }
    Operator::band(1, diagonals).unwrap()
}

/// Diagonally dominant variant, so every rectangular section has full column rank.
pub fn dominant_band(rng: &mut ChaCha8Rng, width: i64) -> Operator {
    let mut diagonals = BTreeMap::new();
    for d in 1..=width {
        for s in [-d, d] {
            let c = Complex::new(rng.gen_range(-1.0..1.0) / (2 * width) as f64, rng.gen_range(-1.0..1.0) / (2 * width) as f64);
            diagonals.insert(LatticePoint::from(s), CoefficientRule::Constant(c));
        }
    }
    diagonals.insert(LatticePoint::from(0), CoefficientRule::Constant(Complex::new(2.0 + rng.gen_range(0.0..1.0), 0.0)));
    Operator::band(1, diagonals).unwrap()
}

pub fn random_vector(rng: &mut ChaCha8Rng, len: usize) -> Vec<Scalar> {
    (0..len).map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

pub fn dist(a: &[Scalar], b: &[Scalar]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}
