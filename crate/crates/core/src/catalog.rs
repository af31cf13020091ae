//! Registry of the reference examples with machine-checkable expectations.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use num_traits::One;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fsm::{adjacency_section_invertible, classify_subsequences, stability_scan, FsmError, Verdict};
use crate::geometry::{DomainDescription, Rational, StarlikeDomain};
use crate::linalg::{min_singular_value, DenseMatrix};
use crate::operator::{AdjacencyGraph, BlockPeriodic, EdgeFamily, OperatorError, OperatorSpec};
use crate::real::Real;
use crate::rfsm::{convergence_study, Coupling, RfsmError, RightHandSide, StudyOptions};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CatalogError {
    #[error("unknown example '{0}'")]
    UnknownId(String),
    #[error("unknown domain '{0}'")]
    UnknownDomain(String),
    #[error("generator bound must be at least 1")]
    ZeroBound,
    #[error(transparent)]
    Fsm(#[from] FsmError),
    #[error(transparent)]
    Rfsm(#[from] RfsmError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExampleId {
    #[serde(rename = "shift")]
    Shift,
    #[serde(rename = "blockdiag")]
    BlockDiag,
    #[serde(rename = "rarosi")]
    RaRoSi,
    #[serde(rename = "sierror")]
    SiError,
    #[serde(rename = "diamond")]
    Diamond,
    #[serde(rename = "worked_A")]
    WorkedA,
    #[serde(rename = "worked_Aprime")]
    WorkedAPrime,
}

impl ExampleId {
    pub const ALL: [ExampleId; 7] = [
        Self::Shift,
        Self::BlockDiag,
        Self::RaRoSi,
        Self::SiError,
        Self::Diamond,
        Self::WorkedA,
        Self::WorkedAPrime,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Shift => "shift",
            Self::BlockDiag => "blockdiag",
            Self::RaRoSi => "rarosi",
            Self::SiError => "sierror",
            Self::Diamond => "diamond",
            Self::WorkedA => "worked_A",
            Self::WorkedAPrime => "worked_Aprime",
        }
    }

    fn family(self) -> Option<EdgeFamily> {
        match self {
            Self::BlockDiag => Some(EdgeFamily::BlockDiag),
            Self::RaRoSi => Some(EdgeFamily::RaRoSi),
            Self::SiError => Some(EdgeFamily::SiError),
            Self::Diamond => Some(EdgeFamily::Diamond),
            _ => None,
        }
    }
}

impl FromStr for ExampleId {
    type Err = CatalogError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| CatalogError::UnknownId(s.to_string()))
    }
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Named domains: `interval` `[-1,1]`, `interval-open` `[-1,1)`, `square`
/// `[-1,1]^2`, `diamond` (unit 1-norm ball) and `triangle`.
pub fn named_domain(name: &str) -> Result<StarlikeDomain, CatalogError> {
    let r = |p: i64, q: i64| Rational::new(p, q);
    let description = match name {
        "interval" => return Ok(StarlikeDomain::interval(-Rational::one(), Rational::one()).expect("valid interval")),
        "square" => return Ok(StarlikeDomain::cube(2).expect("valid square")),
        "interval-open" => DomainDescription::Facets {
            dimension: 1,
            facets: vec![
                crate::geometry::Facet::open(vec![r(1, 1)], r(1, 1)),
                crate::geometry::Facet::closed(vec![r(-1, 1)], r(1, 1)),
            ],
        },
        "diamond" => DomainDescription::Vertices {
            dimension: 2,
            vertices: vec![vec![r(1, 1), r(0, 1)], vec![r(0, 1), r(1, 1)], vec![r(-1, 1), r(0, 1)], vec![r(0, 1), r(-1, 1)]],
        },
        "triangle" => DomainDescription::Vertices {
            dimension: 2,
            vertices: vec![vec![r(1, 1), r(0, 1)], vec![r(-1, 2), r(1, 1)], vec![r(-1, 2), r(-1, 1)]],
        },
        other => return Err(CatalogError::UnknownDomain(other.to_string())),
    };
    Ok(crate::geometry::validate_domain(&description).expect("named domains are valid"))
}

/// Membership rule for the cut-off `n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexRule {
    All,
    Never,
    Even,
    Squares,
    NotSquare,
    Residue { modulus: u64, residue: u64 },
}

impl IndexRule {
    pub fn holds(&self, n: u64) -> bool {
        match *self {
            Self::All => true,
            Self::Never => false,
            Self::Even => n % 2 == 0,
            Self::Squares => {
                let r = (n as f64).sqrt().round() as u64;
                r * r == n
            }
            Self::NotSquare => !Self::Squares.holds(n),
            Self::Residue { modulus, residue } => n % modulus == residue,
        }
    }
}

/// A claim about an example and the operation that checks it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Check {
    /// Over `n = 1..=n_max`, sections pass the invertibility test exactly when `rule` holds;
    /// optionally every invertible section has inverse norm 1 and squares to the identity.
    FsmInvertibleWhen { domain: String, rule: IndexRule, unit_inverse: bool },
    /// Every section with `rule(n)` fails the invertibility test.
    FsmSingularAt { domain: String, rule: IndexRule },
    /// The edge criterion holds exactly when `rule` holds and agrees with the numeric test.
    CriterionWhen { domain: String, rule: IndexRule },
    /// Verdicts of the residue classes mod `modulus`: the listed classes are
    /// stable-so-far (with constant inverse norm when `constant_norm` is set), all others are not.
    ResidueClasses { domain: String, modulus: u64, stable: Vec<u64>, norm_cap: f64, constant_norm: Option<f64> },
    /// rFSM errors stay below the closed-form bound for `n = 2..=min(n_max, 20)`.
    RfsmBound { domain: String, reference_n: u64 },
}

impl Check {
    pub fn operation(&self) -> &'static str {
        match self {
            Self::FsmInvertibleWhen { .. } | Self::FsmSingularAt { .. } => "stability_scan",
            Self::CriterionWhen { .. } => "adjacency_section_invertible",
            Self::ResidueClasses { .. } => "classify_subsequences",
            Self::RfsmBound { .. } => "convergence_study",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub claim: String,
    pub check: Check,
}

/// Certified operator norm bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifiedNorms {
    pub a_norm: f64,
    pub a_inv_norm: f64,
}

#[derive(Debug, Clone)]
pub struct ExampleCase<T: Real> {
    pub id: ExampleId,
    pub operator: OperatorSpec<T>,
    pub domain: StarlikeDomain,
    pub domain_name: String,
    pub rhs: Option<RightHandSide<T>>,
    pub norms: Option<CertifiedNorms>,
    pub expectations: Vec<Expectation>,
}

fn real_block<T: Real>(rows: [[f64; 3]; 3]) -> Vec<Complex<T>> {
    rows.iter().flatten().map(|&x| Complex::new(T::lit(x), T::zero())).collect()
}

pub const BLOCK_B: [[f64; 3]; 3] = [[1.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]];
pub const BLOCK_C: [[f64; 3]; 3] = [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [1.0, 1.0, 1.0]];
pub const BLOCK_D: [[f64; 3]; 3] = [[1.0, 1.0, 1.0], [1.0, 1.0, 0.0], [1.0, 0.0, 0.0]];

/// Error bound `49 / 2^{n+2}` for the worked example with `m = n + 3`.
pub fn worked_error_bound(n: u64) -> f64 {
    49.0 / 2f64.powi(n as i32 + 2)
}

/// `max(1, 1/σ_min(D))`, the inverse norm of every stable section of the preconditioned example.
pub fn block_d_inverse_norm() -> f64 {
    let d = DenseMatrix::<f64>::from_real_rows(&BLOCK_D.iter().map(|r| r.to_vec()).collect::<Vec<_>>());
    1f64.max(1.0 / min_singular_value(&d).expect("square"))
}

fn worked_a<T: Real>() -> OperatorSpec<T> {
    let mut blocks = BTreeMap::new();
    blocks.insert(0, real_block(BLOCK_B));
    blocks.insert(1, real_block(BLOCK_C));
    OperatorSpec::BlockPeriodic(BlockPeriodic::centered(3, blocks).expect("3x3 blocks"))
}

fn expect(claim: &str, check: Check) -> Expectation {
    Expectation { claim: claim.to_string(), check }
}

/// Builds an example. `bound` is the edge-family parameter bound `K`; the
/// block and shift operators are represented symbolically and ignore it.
pub fn build_example<T: Real>(id: ExampleId, bound: u64) -> Result<ExampleCase<T>, CatalogError> {
    if bound == 0 {
        return Err(CatalogError::ZeroBound);
    }
    let interval = || "interval".to_string();
    let square = || "square".to_string();
    let (operator, domain_name, rhs, norms, expectations) = match id {
        ExampleId::Shift => (
            OperatorSpec::shift(1),
            interval(),
            None,
            None,
            vec![expect(
                "every square section is singular",
                Check::FsmInvertibleWhen { domain: interval(), rule: IndexRule::Never, unit_inverse: false },
            )],
        ),
        ExampleId::BlockDiag => (
            OperatorSpec::AdjacencyGraph(AdjacencyGraph::generated(EdgeFamily::BlockDiag, bound, vec![])?),
            interval(),
            None,
            None,
            vec![
                expect(
                    "sections are invertible involutions of norm 1 exactly at even n",
                    Check::FsmInvertibleWhen { domain: interval(), rule: IndexRule::Even, unit_inverse: true },
                ),
                expect(
                    "edge criterion holds exactly at even n",
                    Check::CriterionWhen { domain: interval(), rule: IndexRule::Even },
                ),
            ],
        ),
        ExampleId::RaRoSi => (
            OperatorSpec::AdjacencyGraph(AdjacencyGraph::generated(EdgeFamily::RaRoSi, bound, vec![])?),
            square(),
            None,
            None,
            vec![
                expect("edge criterion holds for every n", Check::CriterionWhen { domain: square(), rule: IndexRule::All }),
                expect(
                    "every section is invertible with inverse norm 1",
                    Check::FsmInvertibleWhen { domain: square(), rule: IndexRule::All, unit_inverse: true },
                ),
            ],
        ),
        ExampleId::SiError => (
            OperatorSpec::AdjacencyGraph(AdjacencyGraph::generated(EdgeFamily::SiError, bound, vec![])?),
            square(),
            None,
            None,
            vec![expect(
                "edge criterion fails exactly at perfect squares",
                Check::CriterionWhen { domain: square(), rule: IndexRule::NotSquare },
            )],
        ),
        ExampleId::Diamond => (
            OperatorSpec::AdjacencyGraph(AdjacencyGraph::generated(EdgeFamily::Diamond, bound, vec![])?),
            square(),
            None,
            None,
            vec![
                expect(
                    "edge criterion fails for every n on the square",
                    Check::CriterionWhen { domain: square(), rule: IndexRule::Never },
                ),
                expect(
                    "edge criterion holds for every n on the 1-norm ball",
                    Check::CriterionWhen { domain: "diamond".into(), rule: IndexRule::All },
                ),
            ],
        ),
        ExampleId::WorkedA => (
            worked_a(),
            interval(),
            Some(RightHandSide::Geometric { ratio: T::lit(0.5) }),
            Some(CertifiedNorms { a_norm: 3.0, a_inv_norm: 2.0 }),
            vec![
                expect(
                    "sections at n = 1 mod 3 are singular",
                    Check::FsmSingularAt { domain: interval(), rule: IndexRule::Residue { modulus: 3, residue: 1 } },
                ),
                expect(
                    "no residue class mod 3 is stable",
                    Check::ResidueClasses {
                        domain: interval(),
                        modulus: 3,
                        stable: vec![],
                        norm_cap: crate::fsm::DEFAULT_NORM_CAP,
                        constant_norm: None,
                    },
                ),
                expect(
                    "rectangular sections with m = n + 3 meet the error bound 49/2^(n+2)",
                    Check::RfsmBound { domain: interval(), reference_n: 64 },
                ),
            ],
        ),
        ExampleId::WorkedAPrime => (
            worked_a::<T>().compose_shift(1),
            interval(),
            Some(RightHandSide::Geometric { ratio: T::lit(0.5) }),
            None,
            vec![expect(
                "only the class n = 1 mod 3 is stable, with constant inverse norm",
                Check::ResidueClasses {
                    domain: interval(),
                    modulus: 3,
                    stable: vec![1],
                    norm_cap: 10.0 * block_d_inverse_norm(),
                    constant_norm: Some(block_d_inverse_norm()),
                },
            )],
        ),
    };
    let domain = named_domain(&domain_name)?;
    Ok(ExampleCase { id, operator, domain, domain_name, rhs, norms, expectations })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub claim: String,
    pub operation: String,
    pub passed: bool,
    pub measured: String,
}

fn list(ns: impl IntoIterator<Item = u64>) -> String {
    let v: Vec<String> = ns.into_iter().map(|n| n.to_string()).collect();
    format!("[{}]", v.join(","))
}

const TOL: f64 = 1e-9;

/// Evaluates every expectation of `case` over `n = 1..=n_max`.
pub fn expected_outcomes<T: Real>(case: &ExampleCase<T>, n_max: u64) -> Result<Vec<CheckResult>, CatalogError> {
    let ns: Vec<u64> = (1..=n_max).collect();
    let tau = T::lit(crate::linalg::DEFAULT_TAU);
    let mut out = Vec::new();
    for e in &case.expectations {
        if let Some(covered) = case.operator_covered_radius() {
            let domain = match &e.check {
                Check::FsmInvertibleWhen { domain, .. }
                | Check::FsmSingularAt { domain, .. }
                | Check::CriterionWhen { domain, .. }
                | Check::ResidueClasses { domain, .. }
                | Check::RfsmBound { domain, .. } => named_domain(domain)?,
            };
            let required = domain.box_radius(n_max);
            if covered < required {
                return Err(FsmError::GeneratorBoundTooSmall { n: n_max, required, covered }.into());
            }
        }
        let (passed, measured) = match &e.check {
            Check::FsmInvertibleWhen { domain, rule, unit_inverse } => {
                let report = stability_scan(&case.operator, &named_domain(domain)?, &ns, tau)?;
                let wrong: Vec<u64> = report.records.iter().filter(|r| r.invertible != rule.holds(r.n)).map(|r| r.n).collect();
                let mut bad_norm = Vec::new();
                if *unit_inverse {
                    for r in report.records.iter().filter(|r| r.invertible) {
                        let section = crate::section::fsm_section(&case.operator, &named_domain(domain)?, r.n)?;
                        let involution = section.compose(&section).is_identity(T::lit(TOL));
                        if !involution || (r.inverse_norm.unwrap_or(f64::INFINITY) - 1.0).abs() > TOL {
                            bad_norm.push(r.n);
                        }
                    }
                }
                let singular = report.records.iter().filter(|r| !r.invertible).map(|r| r.n);
                (
                    wrong.is_empty() && bad_norm.is_empty(),
                    format!("singular at {}; mismatches {}; norm failures {}", list(singular), list(wrong), list(bad_norm)),
                )
            }
            Check::FsmSingularAt { domain, rule } => {
                let report = stability_scan(&case.operator, &named_domain(domain)?, &ns, tau)?;
                let wrong: Vec<u64> =
                    report.records.iter().filter(|r| rule.holds(r.n) && r.invertible).map(|r| r.n).collect();
                let singular = report.records.iter().filter(|r| !r.invertible).map(|r| r.n);
                (wrong.is_empty(), format!("singular at {}; invertible but expected singular {}", list(singular), list(wrong)))
            }
            Check::CriterionWhen { domain, rule } => {
                let graph = match &case.operator {
                    OperatorSpec::AdjacencyGraph(g) => g,
                    _ => return Err(CatalogError::UnknownId(format!("{} is not an adjacency example", case.id))),
                };
                let omega = named_domain(domain)?;
                let report = stability_scan(&case.operator, &omega, &ns, tau)?;
                let mut failing = Vec::new();
                let mut wrong = Vec::new();
                for r in &report.records {
                    let crit = adjacency_section_invertible(graph, &omega, r.n)?;
                    if !crit {
                        failing.push(r.n);
                    }
                    if crit != rule.holds(r.n) || crit != r.invertible {
                        wrong.push(r.n);
                    }
                }
                (wrong.is_empty(), format!("criterion fails at {}; mismatches {}", list(failing), list(wrong)))
            }
            Check::ResidueClasses { domain, modulus, stable, norm_cap, constant_norm } => {
                let report = stability_scan(&case.operator, &named_domain(domain)?, &ns, tau)?;
                let verdicts = classify_subsequences(&report, *modulus, *norm_cap)?;
                let mut ok = verdicts
                    .iter()
                    .all(|(res, v)| (*v == Verdict::StableSoFar) == stable.contains(res));
                if let Some(value) = constant_norm {
                    ok &= report
                        .records
                        .iter()
                        .filter(|r| stable.contains(&(r.n % modulus)))
                        .all(|r| r.inverse_norm.is_some_and(|x| (x - value).abs() <= TOL));
                }
                let shown: Vec<String> = verdicts.iter().map(|(r, v)| format!("{r}:{}", v.name())).collect();
                (ok, format!("{{{}}}", shown.join(", ")))
            }
            Check::RfsmBound { domain, reference_n } => {
                let rhs = case.rhs.as_ref().expect("bound checks carry a right-hand side");
                let ns: Vec<u64> = (2..=n_max.min(20)).collect();
                let bound = |n: u64| worked_error_bound(n);
                let opts = StudyOptions {
                    tau,
                    a_inv_norm: case.norms.map(|c| T::lit(c.a_inv_norm)),
                    error_bound: Some(&bound),
                };
                let report =
                    convergence_study(&case.operator, rhs, &named_domain(domain)?, &Coupling::Band, &ns, *reference_n, opts)?;
                let worst = report
                    .records
                    .iter()
                    .map(|r| r.error / r.error_bound.unwrap_or(f64::INFINITY))
                    .fold(0.0, f64::max);
                (
                    report.records.iter().all(|r| r.error_bound.is_some_and(|b| r.error <= b)),
                    format!("max error/bound ratio {worst:.6}"),
                )
            }
        };
        out.push(CheckResult { claim: e.claim.clone(), operation: e.check.operation().to_string(), passed, measured });
    }
    Ok(out)
}

impl<T: Real> ExampleCase<T> {
    fn operator_covered_radius(&self) -> Option<i64> {
        match &self.operator {
            OperatorSpec::AdjacencyGraph(g) => g.covered_radius(),
            _ => None,
        }
    }

    /// Smallest generator bound covering `n_max` on every domain the case uses.
    pub fn bound_for(id: ExampleId, n_max: u64) -> u64 {
        id.family().map_or(1, |f| f.bound_for_radius(n_max as i64))
    }
}
