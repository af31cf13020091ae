//! Square finite sections: solves, inverse norms, stability scans and the
//! exact edge criterion for adjacency operators.

use std::collections::BTreeMap;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{lattice_section, StarlikeDomain};
use crate::linalg::LinalgError;
use crate::operator::{AdjacencyGraph, OperatorError, OperatorSpec};
use crate::real::Real;
use crate::report::{fmt_opt, fmt_real};
use crate::section::fsm_section;
use crate::vector::SupportedVector;

pub const DEFAULT_NORM_CAP: f64 = 1e6;
pub const DEFAULT_MODULI: [u64; 3] = [1, 2, 3];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FsmError {
    #[error("section at n = {n} is singular (sigma_min = {sigma_min:e}, threshold {threshold:e})")]
    SingularSection { n: u64, sigma_min: f64, threshold: f64 },
    #[error("generator covers radius {covered}, but n = {n} needs radius {required}")]
    GeneratorBoundTooSmall { n: u64, required: i64, covered: i64 },
    #[error("residue {residue} mod {modulus} has {count} samples, need at least 3")]
    InsufficientData { modulus: u64, residue: u64, count: usize },
    #[error("modulus must be positive")]
    ZeroModulus,
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `ũ_n` with `P_n A P_n ũ_n = P_n b`, supported in `Ω_n`.
pub fn fsm_solve<T: Real>(
    a: &OperatorSpec<T>,
    b: &SupportedVector<T>,
    domain: &StarlikeDomain,
    n: u64,
    tau: T,
) -> Result<SupportedVector<T>, FsmError> {
    if b.dimension() != a.dimension() {
        return Err(OperatorError::DimensionMismatch { expected: a.dimension(), actual: b.dimension() }.into());
    }
    let section = fsm_section(a, domain, n)?;
    let rhs = b.to_dense(section.cols());
    match section.solve_square(&rhs, tau) {
        Ok(u) => Ok(SupportedVector::from_dense(section.cols(), &u)),
        Err(LinalgError::SingularMatrix { sigma_min, threshold }) => {
            Err(FsmError::SingularSection { n, sigma_min, threshold })
        }
        Err(e) => Err(e.into()),
    }
}

/// `max(1, 1/σ_min)` of the square section, i.e. `‖(P_n A P_n + Q_n)^{-1}‖`.
pub fn inverse_norm<T: Real>(a: &OperatorSpec<T>, domain: &StarlikeDomain, n: u64, tau: T) -> Result<T, FsmError> {
    let record = scan_one(a, domain, n, tau)?;
    match record.inverse_norm {
        Some(v) => Ok(T::lit(v)),
        None => Err(FsmError::SingularSection {
            n,
            sigma_min: record.sigma_min,
            threshold: tau.to_f64_lossy() * record.sigma_max.max(1.0),
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityRecord {
    pub n: u64,
    pub invertible: bool,
    pub inverse_norm: Option<f64>,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub domain: String,
    pub operator: String,
    pub tau_rel: f64,
    pub records: Vec<StabilityRecord>,
}

fn scan_one<T: Real>(a: &OperatorSpec<T>, domain: &StarlikeDomain, n: u64, tau: T) -> Result<StabilityRecord, FsmError> {
    let spec = fsm_section(a, domain, n)?.spectrum();
    let invertible = spec.invertible(tau);
    Ok(StabilityRecord {
        n,
        invertible,
        inverse_norm: invertible.then(|| T::one().max(T::one() / spec.sigma_min).to_f64_lossy()),
        sigma_min: spec.sigma_min.to_f64_lossy(),
        sigma_max: spec.sigma_max.to_f64_lossy(),
    })
}

/// One record per `n`, in the order given. Singular sections are recorded, not raised.
pub fn stability_scan<T: Real>(
    a: &OperatorSpec<T>,
    domain: &StarlikeDomain,
    n_list: &[u64],
    tau: T,
) -> Result<StabilityReport, FsmError> {
    let records = n_list
        .par_iter()
        .map(|&n| scan_one(a, domain, n, tau))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(StabilityReport {
        domain: "custom".into(),
        operator: "custom".into(),
        tau_rel: tau.to_f64_lossy(),
        records,
    })
}

impl StabilityReport {
    pub fn labeled(mut self, domain: impl Into<String>, operator: impl Into<String>) -> Self {
        self.domain = domain.into();
        self.operator = operator.into();
        self
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "n,invertible,inverse_norm,sigma_min,sigma_max")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.n,
                r.invertible,
                fmt_opt(r.inverse_norm),
                fmt_real(r.sigma_min),
                fmt_real(r.sigma_max)
            )?;
        }
        Ok(())
    }
}

/// Edge criterion: the section of `Adj(G)` is invertible iff no edge has
/// exactly one endpoint in `Ω_n`.
pub fn adjacency_section_invertible(graph: &AdjacencyGraph, domain: &StarlikeDomain, n: u64) -> Result<bool, FsmError> {
    if graph.dimension() != domain.dimension() {
        return Err(OperatorError::DimensionMismatch { expected: graph.dimension(), actual: domain.dimension() }.into());
    }
    let required = domain.box_radius(n);
    if let Some(covered) = graph.covered_radius() {
        if covered < required {
            return Err(FsmError::GeneratorBoundTooSmall { n, required, covered });
        }
    }
    let omega = lattice_section(domain, n);
    Ok(graph.edges().iter().all(|[p, q]| omega.contains(p) == omega.contains(q)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    StableSoFar,
    ContainsSingular,
    NormExceedsCap,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Self::StableSoFar => "stable-so-far",
            Self::ContainsSingular => "contains-singular",
            Self::NormExceedsCap => "norm-exceeds-cap",
        }
    }
}

/// Verdict per residue class `n mod modulus` over the scanned records.
pub fn classify_subsequences(
    report: &StabilityReport,
    modulus: u64,
    norm_cap: f64,
) -> Result<BTreeMap<u64, Verdict>, FsmError> {
    if modulus == 0 {
        return Err(FsmError::ZeroModulus);
    }
    let mut out = BTreeMap::new();
    for residue in 0..modulus {
        let class: Vec<&StabilityRecord> = report.records.iter().filter(|r| r.n % modulus == residue).collect();
        if class.len() < 3 {
            return Err(FsmError::InsufficientData { modulus, residue, count: class.len() });
        }
        let verdict = if class.iter().any(|r| !r.invertible) {
            Verdict::ContainsSingular
        } else if class.iter().any(|r| r.inverse_norm.is_some_and(|v| v > norm_cap)) {
            Verdict::NormExceedsCap
        } else {
            Verdict::StableSoFar
        };
        out.insert(residue, verdict);
    }
    Ok(out)
}
