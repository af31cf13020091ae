mod common;

use finsec::{build_example, AdjacencyGraph, EdgeFamily, ExampleId, LatticePoint, Operator, Vector};
use num_complex::Complex;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn window(dimension: usize, r: i64) -> Vec<LatticePoint> {
    match dimension {
        1 => (-r..=r).map(LatticePoint::from).collect(),
        _ => (-r..=r).flat_map(|x| (-r..=r).map(move |y| LatticePoint::from([x, y]))).collect(),
    }
}

fn random_graph(seed: u64, dimension: usize) -> AdjacencyGraph {
    let mut rng = common::rng(seed);
    let mut points = window(dimension, 4);
    points.shuffle(&mut rng);
    let pairs = rng.gen_range(0..=points.len() / 2);
    let edges = points.chunks(2).take(pairs).map(|c| [c[0].clone(), c[1].clone()]).collect();
    AdjacencyGraph::new(dimension, edges).unwrap()
}

fn random_supported(seed: u64, dimension: usize, r: i64) -> Vector {
    let mut rng = common::rng(seed ^ 0x5eed);
    let mut entries = Vec::new();
    for p in window(dimension, r) {
        if rng.gen_bool(0.6) {
            entries.push((p, Complex::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))));
        }
    }
    Vector::from_entries(dimension, entries)
}

fn operators(seed: u64) -> Vec<Operator> {
    let mut rng = common::rng(seed);
    let width = rng.gen_range(1..=4);
    let band = common::random_band(&mut rng, width);
    let worked = build_example::<f64>(ExampleId::WorkedA, 1).unwrap().operator;
    vec![
        band.clone(),
        band.compose_shift(rng.gen_range(-3..=3)),
        worked.clone(),
        worked.compose_shift(1),
        Operator::shift(rng.gen_range(-3..=3)),
        Operator::AdjacencyGraph(random_graph(seed, 1)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn adjacency_is_an_isometric_involution(seed in any::<u64>(), dimension in 1usize..=2) {
        let g = Operator::AdjacencyGraph(random_graph(seed, dimension));
        let u = random_supported(seed, dimension, 5);
        let v = g.apply(&u).unwrap();
        prop_assert_eq!(g.apply(&v).unwrap(), u.clone());
        prop_assert!((v.norm2() - u.norm2()).abs() <= 1e-12 * (1.0 + u.norm2()));
    }

    #[test]
    fn apply_matches_entries(seed in any::<u64>()) {
        for a in operators(seed) {
            let u = random_supported(seed, 1, 6);
            let au = a.apply(&u).unwrap();
            for i in window(1, 12) {
                let sum = u.iter().fold(Complex::new(0.0, 0.0), |acc, (j, uj)| acc + a.entry(&i, j).unwrap() * uj);
                prop_assert!((au.get(&i) - sum).norm() <= 1e-12, "row {}", i);
            }
        }
    }

    #[test]
    fn adjoint_is_an_involution(seed in any::<u64>()) {
        for a in operators(seed) {
            let back = a.adjoint().adjoint();
            let star = a.adjoint();
            for i in window(1, 8) {
                for j in window(1, 8) {
                    prop_assert_eq!(back.entry(&i, &j).unwrap(), a.entry(&i, &j).unwrap());
                    prop_assert_eq!(star.entry(&i, &j).unwrap(), a.entry(&j, &i).unwrap().conj());
                }
            }
        }
    }

    #[test]
    fn entries_vanish_outside_the_band(seed in any::<u64>()) {
        for a in operators(seed) {
            let w = a.band_width() as i64;
            for i in window(1, 10) {
                for j in window(1, 10) {
                    if (&i - &j).max_norm() > w {
                        prop_assert_eq!(a.entry(&i, &j).unwrap(), Complex::new(0.0, 0.0));
                    }
                }
            }
        }
    }
}

#[test]
fn generated_families_are_banded() {
    for family in EdgeFamily::ALL {
        let g = AdjacencyGraph::generated(family, 12, vec![]).unwrap();
        let r = g.covered_radius().unwrap().min(20);
        let a = Operator::AdjacencyGraph(g);
        let w = a.band_width() as i64;
        for i in window(family.dimension(), r) {
            for (j, _) in a.column(&i).unwrap() {
                assert!((&i - &j).max_norm() <= w, "{family}: {i} -> {j}");
            }
        }
    }
}
