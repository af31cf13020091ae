mod common;

use finsec::rfsm::StudyOptions;
use finsec::{
    adjacency_section_invertible, build_example, fsm_section, fsm_solve, lattice_section, named_domain,
    normal_equations_solve, qmapn_norm, rfsm_section, rfsm_solve, solution_bound, AdjacencyGraph, ExampleId,
    LatticePoint, Operator, Rhs, StarlikeDomain, Vector, DEFAULT_TAU,
};
use num_complex::Complex;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn random_graph(rng: &mut ChaCha8Rng, dimension: usize, r: i64) -> AdjacencyGraph {
    let mut points: Vec<LatticePoint> = match dimension {
        1 => (-r..=r).map(LatticePoint::from).collect(),
        _ => (-r..=r).flat_map(|x| (-r..=r).map(move |y| LatticePoint::from([x, y]))).collect(),
    };
    points.shuffle(rng);
    let pairs = rng.gen_range(0..=points.len() / 2);
    AdjacencyGraph::new(dimension, points.chunks(2).take(pairs).map(|c| [c[0].clone(), c[1].clone()]).collect()).unwrap()
}

fn random_rhs(rng: &mut ChaCha8Rng, index: &finsec::IndexSet) -> Vector {
    Vector::from_dense(index, &common::random_vector(rng, index.len()))
}

/// `1/(d − Σ|c_k|)` for a constant-coefficient band with dominant diagonal `d`.
fn dominant_inverse_bound(a: &Operator) -> f64 {
    let o = LatticePoint::from(0);
    let w = a.band_width() as i64;
    let off: f64 = (-w..=w).filter(|&k| k != 0).map(|k| a.entry(&o, &LatticePoint::from(k)).unwrap().norm()).sum();
    1.0 / (a.entry(&o, &o).unwrap().re - off)
}

fn worked() -> (Operator, StarlikeDomain, Rhs) {
    let case = build_example::<f64>(ExampleId::WorkedA, 1).unwrap();
    (case.operator, common::interval(), case.rhs.unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn edge_criterion_matches_the_spectrum(seed in any::<u64>(), dimension in 1usize..=2) {
        let mut rng = common::rng(seed);
        let (graph, domains, n_max) = match dimension {
            1 => (random_graph(&mut rng, 1, 12), vec![common::interval()], 14),
            _ => (random_graph(&mut rng, 2, 5), vec![named_domain("square").unwrap(), named_domain("diamond").unwrap()], 6),
        };
        let a = Operator::AdjacencyGraph(graph.clone());
        for domain in &domains {
            for n in 1..=n_max {
                let section = fsm_section(&a, domain, n).unwrap();
                let spectrum = section.spectrum();
                let criterion = adjacency_section_invertible(&graph, domain, n).unwrap();
                prop_assert_eq!(criterion, spectrum.invertible(DEFAULT_TAU), "n = {}", n);
                if criterion {
                    prop_assert!((spectrum.sigma_min - 1.0).abs() <= 1e-9);
                    prop_assert!(section.compose(&section).is_identity(1e-9));
                }
            }
        }
    }

    #[test]
    fn fsm_solution_has_small_residual(seed in any::<u64>(), n in 1u64..30) {
        let mut rng = common::rng(seed);
        let width = rng.gen_range(1..=4);
        let a = common::dominant_band(&mut rng, width);
        let domain = common::interval();
        let b = random_rhs(&mut rng, &lattice_section(&domain, n + 3));
        let u = fsm_solve(&a, &b, &domain, n, DEFAULT_TAU).unwrap();
        let section = fsm_section(&a, &domain, n).unwrap();
        let rhs = b.to_dense(section.rows());
        let r = common::dist(&section.matvec(&u.to_dense(section.cols())), &rhs);
        prop_assert!(r <= 1e-8 * (1.0 + b.norm2()));
        prop_assert!(u.iter().all(|(p, _)| section.cols().contains(p)));
    }

    #[test]
    fn band_sections_lose_nothing(seed in any::<u64>(), n in 1u64..25) {
        let mut rng = common::rng(seed);
        let width = rng.gen_range(1..=4);
        let a = common::random_band(&mut rng, width);
        let domain = common::interval();
        let m = n + width as u64;
        prop_assert_eq!(qmapn_norm(&a, &domain, m, n).unwrap(), 0.0);
        let section = rfsm_section(&a, &domain, m, n).unwrap();
        let u = random_rhs(&mut rng, section.cols());
        let full = a.apply(&u).unwrap();
        let cut = Vector::from_dense(section.rows(), &section.matvec(&u.to_dense(section.cols())));
        prop_assert!(full.sub(&cut).norm2() <= 1e-12);
    }

    #[test]
    fn rfsm_beats_trivial_candidates(seed in any::<u64>(), n in 1u64..20, extra in 0u64..5) {
        let mut rng = common::rng(seed);
        let width = rng.gen_range(1..=4);
        let a = common::random_band(&mut rng, width);
        let domain = common::interval();
        let m = n + extra;
        let b: Rhs = random_rhs(&mut rng, &lattice_section(&domain, m + 2)).into();
        let sol = rfsm_solve(&a, &b, &domain, m, n, DEFAULT_TAU).unwrap();
        let rows = lattice_section(&domain, m);
        let pmb = b.to_dense(&rows);
        prop_assert!(sol.residual <= common::dist(&pmb, &vec![Complex::new(0.0, 0.0); pmb.len()]) + 1e-12);
        let section = rfsm_section(&a, &domain, m, n).unwrap();
        for _ in 0..5 {
            let x = common::random_vector(&mut rng, section.cols().len());
            prop_assert!(sol.residual <= common::dist(&section.matvec(&x), &pmb) + 1e-10);
        }
    }

    #[test]
    fn solution_norm_obeys_the_bound(seed in any::<u64>(), n in 2u64..20, extra in 0u64..4) {
        let mut rng = common::rng(seed);
        let width = rng.gen_range(1..=3);
        let a = common::dominant_band(&mut rng, width);
        let domain = common::interval();
        let inv = dominant_inverse_bound(&a);
        let m = n + extra;
        let b: Rhs = random_rhs(&mut rng, &lattice_section(&domain, 2 * n)).into();
        let sol = rfsm_solve(&a, &b, &domain, m, n, DEFAULT_TAU).unwrap();
        let q = qmapn_norm(&a, &domain, m, n).unwrap();
        if let Ok(bound) = solution_bound(inv, b.norm2(), sol.residual, q) {
            prop_assert!(sol.u.norm2() <= bound + 1e-9);
        }
    }

    #[test]
    fn normal_equations_agree_on_dominant_bands(seed in any::<u64>(), n in 1u64..20, extra in 0u64..4) {
        let mut rng = common::rng(seed);
        let width = rng.gen_range(1..=4);
        let a = common::dominant_band(&mut rng, width);
        let domain = common::interval();
        let b: Rhs = random_rhs(&mut rng, &lattice_section(&domain, n + extra + 3)).into();
        let x = rfsm_solve(&a, &b, &domain, n + extra, n, DEFAULT_TAU).unwrap().u;
        let y = normal_equations_solve(&a, &b, &domain, n + extra, n, DEFAULT_TAU).unwrap();
        prop_assert!(x.sub(&y).norm2() <= 1e-8);
    }
}

#[test]
fn preconditioned_sections_converge_componentwise() {
    let (a, domain, b) = worked();
    let shifted = a.compose_shift(1);
    let window = lattice_section(&domain, 90);
    let u = Vector::from_dense(&window, &common::random_vector(&mut common::rng(3), window.len()));
    let inner = lattice_section(&domain, 80);
    let lhs = shifted.apply(&u).unwrap().restrict(&inner);
    let rhs = Operator::shift(1).apply(&a.apply(&u).unwrap()).unwrap().restrict(&inner);
    assert!(lhs.sub(&rhs).norm2() < 1e-12, "compose_shift is V_1 A");

    let reference = rfsm_solve(&a, &b, &domain, 67, 64, DEFAULT_TAU).unwrap().u;
    let b_shifted = Operator::shift(1).apply(&Vector::from_dense(&window, &b.to_dense(&window))).unwrap();
    let probe = lattice_section(&domain, 3);
    let mut previous = f64::INFINITY;
    for n in (4..=40).filter(|n| n % 3 == 1) {
        let un = fsm_solve(&shifted, &b_shifted, &domain, n, DEFAULT_TAU).unwrap();
        let err = probe.iter().map(|p| (un.get(p) - reference.get(p)).norm()).fold(0.0, f64::max);
        assert!(err <= previous * 1.0001 + 1e-14, "n = {n}: {err} after {previous}");
        previous = err;
    }
    assert!(previous < 1e-9, "{previous}");
}

#[test]
fn reference_restriction_is_a_feasible_candidate() {
    let (a, domain, b) = worked();
    let reference = rfsm_solve(&a, &b, &domain, 67, 64, DEFAULT_TAU).unwrap().u;
    for n in 2..=20u64 {
        let m = n + 3;
        let sol = rfsm_solve(&a, &b, &domain, m, n, DEFAULT_TAU).unwrap();
        let section = rfsm_section(&a, &domain, m, n).unwrap();
        let candidate = reference.to_dense(section.cols());
        let r = common::dist(&section.matvec(&candidate), &b.to_dense(section.rows()));
        assert!(sol.residual <= r + 1e-12, "n = {n}");
    }
    let study = finsec::convergence_study(
        &a,
        &b,
        &domain,
        &finsec::Coupling::Band,
        &[2, 5, 9],
        64,
        StudyOptions { tau: DEFAULT_TAU, a_inv_norm: Some(2.0), error_bound: None },
    )
    .unwrap();
    assert!(study.records.iter().all(|r| r.bound.is_some_and(|m| r.norm <= m + 1e-9)));
}

#[test]
fn single_precision_reproduces_parity() {
    let case = build_example::<f32>(ExampleId::BlockDiag, 12).unwrap();
    let report = finsec::stability_scan(&case.operator, &case.domain, &(1..=12).collect::<Vec<_>>(), 1e-5f32).unwrap();
    for r in &report.records {
        assert_eq!(r.invertible, r.n % 2 == 0, "n = {}", r.n);
    }
    let worked = build_example::<f32>(ExampleId::WorkedA, 1).unwrap();
    let sol = rfsm_solve(&worked.operator, worked.rhs.as_ref().unwrap(), &common::interval(), 11, 8, 1e-5f32).unwrap();
    assert!(sol.residual < 0.1);
}
