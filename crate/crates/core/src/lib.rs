//! Finite section methods for band operators on `ℓ^2(Z^N)`.
//!
//! The numeric core is generic over the real type (`f32` or `f64`) behind
//! complex entries; domains use exact rationals. The aliases below fix `f64`.

pub mod catalog;
pub mod fsm;
pub mod geometry;
pub mod linalg;
pub mod operator;
pub mod real;
pub mod report;
pub mod rfsm;
pub mod section;
pub mod vector;

pub use catalog::{build_example, expected_outcomes, named_domain, CatalogError, CheckResult, ExampleCase, ExampleId};
pub use fsm::{
    adjacency_section_invertible, classify_subsequences, fsm_solve, inverse_norm, stability_scan, FsmError,
    StabilityRecord, StabilityReport, Verdict,
};
pub use geometry::{
    boundary_layer, lattice_section, validate_domain, DomainDescription, Facet, GeometryError, IndexSet, LatticePoint,
    Rational, StarlikeDomain,
};
pub use linalg::{DenseMatrix, LinalgError, DEFAULT_TAU};
pub use operator::{AdjacencyGraph, BlockPeriodic, CoefficientRule, EdgeFamily, OperatorError, OperatorSpec};
pub use real::Real;
pub use rfsm::{
    choose_parameters, convergence_study, normal_equations_solve, qmapn_norm, rfsm_solve, solution_bound, Coupling,
    RfsmError, RfsmParameters, RfsmReport, RightHandSide,
};
pub use section::{assemble, fsm_section, overflow_block, rfsm_section, SectionMatrix};
pub use vector::SupportedVector;

pub type Scalar = num_complex::Complex<f64>;
pub type Operator = OperatorSpec<f64>;
pub type Matrix = DenseMatrix<f64>;
pub type Vector = SupportedVector<f64>;
pub type Section = SectionMatrix<f64>;
pub type Rhs = RightHandSide<f64>;
pub type Example = ExampleCase<f64>;
