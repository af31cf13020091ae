//! Rectangular finite sections `P_m A P_n` solved in the least-squares sense.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{lattice_section, IndexSet, LatticePoint, StarlikeDomain};
use crate::linalg::LinalgError;
use crate::operator::{OperatorError, OperatorSpec};
use crate::real::{norm2, Real};
use crate::report::{fmt_opt, fmt_real};
use crate::section::{assemble, overflow_block, rfsm_section};
use crate::vector::SupportedVector;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RfsmError {
    #[error("bound hypothesis violated: |Q_m A P_n| = {qmapn:e} is not below 1/|A^-1| = {limit:e}")]
    HypothesisViolated { qmapn: f64, limit: f64 },
    #[error("no admissible column cut-off n up to {ceiling}")]
    NoFeasibleN { ceiling: u64 },
    #[error("no admissible row cut-off m up to {ceiling}")]
    NoFeasibleM { ceiling: u64 },
    #[error("Gram matrix of the normal equations is singular (sigma_min = {sigma_min:e})")]
    SingularGram { sigma_min: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("explicit coupling lists {available} row cut-offs, but {needed} are needed")]
    CouplingLength { available: usize, needed: usize },
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// How the row cut-off `m` follows the column cut-off `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Coupling {
    /// `m = n + w` with `w` the band width.
    Band,
    /// `m = ⌈6n/5⌉`.
    SixFifths,
    /// One `m` per entry of the `n` list.
    Explicit(Vec<u64>),
}

impl Coupling {
    /// Row cut-off for the `index`-th column cut-off `n`.
    pub fn rows_for(&self, n: u64, index: usize, band_width: usize) -> Result<u64, RfsmError> {
        match self {
            Self::Band => Ok(n + band_width as u64),
            Self::SixFifths => Ok((6 * n).div_ceil(5)),
            Self::Explicit(ms) => ms
                .get(index)
                .copied()
                .ok_or(RfsmError::CouplingLength { available: ms.len(), needed: index + 1 }),
        }
    }
}

impl fmt::Display for Coupling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Band => f.write_str("band"),
            Self::SixFifths => f.write_str("sixfifths"),
            Self::Explicit(ms) => {
                let list: Vec<String> = ms.iter().map(u64::to_string).collect();
                write!(f, "explicit:{}", list.join(","))
            }
        }
    }
}

impl FromStr for Coupling {
    type Err = RfsmError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "band" => Ok(Self::Band),
            "sixfifths" => Ok(Self::SixFifths),
            _ => {
                let list = s
                    .strip_prefix("explicit:")
                    .ok_or_else(|| RfsmError::InvalidParameter(format!("unknown coupling '{s}'")))?;
                list.split(',')
                    .map(|t| match t.trim().parse::<u64>() {
                        Ok(m) if m >= 1 => Ok(m),
                        _ => Err(RfsmError::InvalidParameter(format!("bad row cut-off '{t}'"))),
                    })
                    .collect::<Result<Vec<_>, _>>()
                    .map(Self::Explicit)
            }
        }
    }
}

impl Serialize for Coupling {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Coupling {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfsmParameters {
    pub epsilon: f64,
    pub delta: f64,
    pub n: u64,
    pub m: u64,
    pub coupling: Coupling,
}

/// Right-hand side `b ∈ ℓ^2(Z^N)`: finitely supported, or the two-sided
/// geometric sequence `b(i) = ratio^{|i|}` on `Z`.
#[derive(Debug, Clone, PartialEq)]
pub enum RightHandSide<T: Real> {
    Supported(SupportedVector<T>),
    Geometric { ratio: T },
}

impl<T: Real> From<SupportedVector<T>> for RightHandSide<T> {
    fn from(v: SupportedVector<T>) -> Self {
        Self::Supported(v)
    }
}

impl<T: Real> RightHandSide<T> {
    pub fn dimension(&self) -> usize {
        match self {
            Self::Supported(v) => v.dimension(),
            Self::Geometric { .. } => 1,
        }
    }

    pub fn value(&self, p: &LatticePoint) -> Complex<T> {
        match self {
            Self::Supported(v) => v.get(p),
            Self::Geometric { ratio } => Complex::new(ratio.powi(p.coords()[0].unsigned_abs() as i32), T::zero()),
        }
    }

    pub fn to_dense(&self, index: &IndexSet) -> Vec<Complex<T>> {
        index.iter().map(|p| self.value(p)).collect()
    }

    pub fn norm2(&self) -> T {
        match self {
            Self::Supported(v) => v.norm2(),
            Self::Geometric { ratio } => {
                let r2 = *ratio * *ratio;
                ((T::one() + r2) / (T::one() - r2)).sqrt()
            }
        }
    }

    /// `‖Q_m b‖_2` for the section `Ω_m` of `domain`.
    pub fn tail_norm(&self, domain: &StarlikeDomain, m: u64) -> T {
        match self {
            Self::Supported(v) => {
                let outside: Vec<Complex<T>> =
                    v.iter().filter(|(p, _)| !domain.contains_scaled(p, m)).map(|(_, z)| *z).collect();
                norm2(&outside)
            }
            Self::Geometric { ratio } => {
                let omega = lattice_section(domain, m);
                let (lo, hi) = match (omega.points().first(), omega.points().last()) {
                    (Some(a), Some(b)) => (a.coords()[0], b.coords()[0]),
                    _ => return self.norm2(),
                };
                let r2 = *ratio * *ratio;
                let right = r2.powi((hi + 1) as i32);
                let left = r2.powi((1 - lo) as i32);
                ((right + left) / (T::one() - r2)).sqrt()
            }
        }
    }

    fn check(&self) -> Result<(), RfsmError> {
        match self {
            Self::Geometric { ratio } if !(ratio.abs() < T::one()) => {
                Err(RfsmError::InvalidParameter("geometric ratio must satisfy |ratio| < 1".into()))
            }
            _ => Ok(()),
        }
    }
}

/// `‖Q_m A P_n‖_2`, exact through the overflow block.
pub fn qmapn_norm<T: Real>(a: &OperatorSpec<T>, domain: &StarlikeDomain, m: u64, n: u64) -> Result<T, OperatorError> {
    Ok(overflow_block(a, domain, m, n)?.spectral_norm())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RfsmSolution<T: Real> {
    pub u: SupportedVector<T>,
    /// `‖P_m A P_n u − P_m b‖_2`.
    pub residual: T,
}

/// Minimum-norm minimizer of `‖P_m A P_n u − P_m b‖_2` over `u ∈ im P_n`.
pub fn rfsm_solve<T: Real>(
    a: &OperatorSpec<T>,
    b: &RightHandSide<T>,
    domain: &StarlikeDomain,
    m: u64,
    n: u64,
    tau_rank: T,
) -> Result<RfsmSolution<T>, RfsmError> {
    b.check()?;
    if b.dimension() != a.dimension() {
        return Err(OperatorError::DimensionMismatch { expected: a.dimension(), actual: b.dimension() }.into());
    }
    let section = rfsm_section(a, domain, m, n)?;
    let rhs = b.to_dense(section.rows());
    let x = section.least_squares(&rhs, tau_rank)?;
    let r: Vec<Complex<T>> = section.matvec(&x).into_iter().zip(&rhs).map(|(y, b)| y - b).collect();
    Ok(RfsmSolution { u: SupportedVector::from_dense(section.cols(), &x), residual: norm2(&r) })
}

/// `M = (‖b‖ + δ) / (1/‖A^{-1}‖ − ‖Q_m A P_n‖)`.
pub fn solution_bound<T: Real>(a_inv_norm: T, b_norm: T, delta: T, qmapn: T) -> Result<T, RfsmError> {
    let limit = T::one() / a_inv_norm;
    if !(qmapn < limit) {
        return Err(RfsmError::HypothesisViolated { qmapn: qmapn.to_f64_lossy(), limit: limit.to_f64_lossy() });
    }
    Ok((b_norm + delta) / (limit - qmapn))
}

/// Scan ceilings for [`choose_parameters`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchLimits {
    pub n_max: u64,
    pub m_max: u64,
}

impl Default for SearchLimits {
    fn default() -> Self {
        Self { n_max: 512, m_max: 1024 }
    }
}

/// Cut-offs guaranteeing `‖u − A^{-1}b‖ < ε` for every `u` with
/// `‖P_m A P_n u − P_m b‖ < δ`.
///
/// `tail_oracle(n)` must bound `‖Q_n A^{-1} b‖_2` from above.
#[allow(clippy::too_many_arguments)]
pub fn choose_parameters<T: Real>(
    epsilon: T,
    a_norm: T,
    a_inv_norm: T,
    b: &RightHandSide<T>,
    tail_oracle: impl Fn(u64) -> T,
    a: &OperatorSpec<T>,
    domain: &StarlikeDomain,
    limits: SearchLimits,
) -> Result<RfsmParameters, RfsmError> {
    if !(epsilon > T::zero()) || !(a_norm > T::zero()) || !(a_inv_norm > T::zero()) {
        return Err(RfsmError::InvalidParameter("epsilon and the operator norms must be positive".into()));
    }
    b.check()?;
    let three = T::lit(3.0);
    let delta0 = epsilon / (three * a_inv_norm);
    let delta = delta0 / T::lit(2.0);
    let n = (1..=limits.n_max)
        .find(|&n| tail_oracle(n) <= delta / a_norm)
        .ok_or(RfsmError::NoFeasibleN { ceiling: limits.n_max })?;
    let b_norm = b.norm2();
    let tail_cap = epsilon / (three * a_inv_norm);
    let q_cap = (T::one() / a_inv_norm) * (T::one() - T::one() / (T::one() + epsilon / (three * (b_norm + delta) * a_inv_norm)));
    let mut m = None;
    for cand in n..=limits.m_max {
        if b.tail_norm(domain, cand) < tail_cap && qmapn_norm(a, domain, cand, n)? < q_cap {
            m = Some(cand);
            break;
        }
    }
    let m = m.ok_or(RfsmError::NoFeasibleM { ceiling: limits.m_max })?;
    Ok(RfsmParameters {
        epsilon: epsilon.to_f64_lossy(),
        delta: delta.to_f64_lossy(),
        n,
        m,
        coupling: Coupling::Explicit(vec![m]),
    })
}

/// Solves `P_n A* P_m A P_n u = P_n A* P_m b`.
pub fn normal_equations_solve<T: Real>(
    a: &OperatorSpec<T>,
    b: &RightHandSide<T>,
    domain: &StarlikeDomain,
    m: u64,
    n: u64,
    tau: T,
) -> Result<SupportedVector<T>, RfsmError> {
    b.check()?;
    let section = rfsm_section(a, domain, m, n)?;
    let adjoint = assemble(&a.adjoint(), section.cols(), section.rows())?;
    let gram = adjoint.compose(&section);
    let rhs = adjoint.matvec(&b.to_dense(section.rows()));
    match gram.solve_square(&rhs, tau) {
        Ok(u) => Ok(SupportedVector::from_dense(section.cols(), &u)),
        Err(LinalgError::SingularMatrix { sigma_min, .. }) => Err(RfsmError::SingularGram { sigma_min }),
        Err(e) => Err(e.into()),
    }
}

/// `n ↦ 2‖Q_n u_ref‖_2`, the default surrogate for `‖Q_n A^{-1} b‖_2`.
pub fn reference_tail_oracle<'a, T: Real>(u_ref: &'a SupportedVector<T>, domain: &'a StarlikeDomain) -> impl Fn(u64) -> T + 'a {
    move |n| {
        let outside: Vec<Complex<T>> =
            u_ref.iter().filter(|(p, _)| !domain.contains_scaled(p, n)).map(|(_, z)| *z).collect();
        T::lit(2.0) * norm2(&outside)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfsmRecord {
    pub n: u64,
    pub m: u64,
    pub residual: f64,
    pub norm: f64,
    /// Norm bound `M` evaluated at `δ = residual`, when its hypothesis holds.
    pub bound: Option<f64>,
    pub error: f64,
    /// A known a-priori bound on `error` at this `n`, if one was supplied.
    pub error_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfsmReport {
    pub domain: String,
    pub operator: String,
    pub coupling: Coupling,
    pub reference_n: u64,
    pub tau_rel: f64,
    pub records: Vec<RfsmRecord>,
}

impl RfsmReport {
    pub fn labeled(mut self, domain: impl Into<String>, operator: impl Into<String>) -> Self {
        self.domain = domain.into();
        self.operator = operator.into();
        self
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "n,m,residual,norm,M,error,error_bound")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.n,
                r.m,
                fmt_real(r.residual),
                fmt_real(r.norm),
                fmt_opt(r.bound),
                fmt_real(r.error),
                fmt_opt(r.error_bound)
            )?;
        }
        Ok(())
    }
}

/// Optional inputs of a [`convergence_study`].
#[derive(Clone, Copy)]
pub struct StudyOptions<'a, T> {
    pub tau: T,
    /// Certified `‖A^{-1}‖`; enables the `M` column.
    pub a_inv_norm: Option<T>,
    pub error_bound: Option<&'a (dyn Fn(u64) -> f64 + Sync)>,
}

/// Errors `‖u_n − u_ref‖_2` against the solve at `(reference_n + w, reference_n)`.
pub fn convergence_study<T: Real>(
    a: &OperatorSpec<T>,
    b: &RightHandSide<T>,
    domain: &StarlikeDomain,
    coupling: &Coupling,
    n_list: &[u64],
    reference_n: u64,
    options: StudyOptions<'_, T>,
) -> Result<RfsmReport, RfsmError> {
    let w = a.band_width();
    let reference = rfsm_solve(a, b, domain, reference_n + w as u64, reference_n, options.tau)?;
    let b_norm = b.norm2();
    let records = n_list
        .par_iter()
        .enumerate()
        .map(|(index, &n)| {
            let m = coupling.rows_for(n, index, w)?;
            let sol = rfsm_solve(a, b, domain, m, n, options.tau)?;
            let bound = match options.a_inv_norm {
                Some(inv) => solution_bound(inv, b_norm, sol.residual, qmapn_norm(a, domain, m, n)?)
                    .ok()
                    .map(Real::to_f64_lossy),
                None => None,
            };
            Ok(RfsmRecord {
                n,
                m,
                residual: sol.residual.to_f64_lossy(),
                norm: sol.u.norm2().to_f64_lossy(),
                bound,
                error: sol.u.sub(&reference.u).norm2().to_f64_lossy(),
                error_bound: options.error_bound.map(|f| f(n)),
            })
        })
        .collect::<Result<Vec<_>, RfsmError>>()?;
    Ok(RfsmReport {
        domain: "custom".into(),
        operator: "custom".into(),
        coupling: coupling.clone(),
        reference_n,
        tau_rel: options.tau.to_f64_lossy(),
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{build_example, ExampleId};
    use crate::geometry::Rational;

    fn interval() -> StarlikeDomain {
        StarlikeDomain::interval(Rational::from_integer(-1), Rational::from_integer(1)).unwrap()
    }

    fn decaying() -> RightHandSide<f64> {
        RightHandSide::Geometric { ratio: 0.5 }
    }

    #[test]
    fn coupling_rules_and_strings() {
        assert_eq!(Coupling::Band.rows_for(5, 0, 3).unwrap(), 8);
        assert_eq!(Coupling::SixFifths.rows_for(5, 0, 3).unwrap(), 6);
        assert_eq!(Coupling::SixFifths.rows_for(6, 0, 3).unwrap(), 8);
        assert!(Coupling::Explicit(vec![4]).rows_for(2, 1, 0).is_err());
        for s in ["band", "sixfifths", "explicit:3,5,8"] {
            assert_eq!(s.parse::<Coupling>().unwrap().to_string(), s);
        }
        assert!("explicit:0".parse::<Coupling>().is_err());
        assert!("ratio".parse::<Coupling>().is_err());
    }

    #[test]
    fn geometric_norms() {
        let b = decaying();
        assert!((b.norm2() - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let direct: f64 = (-200i64..=200)
            .filter(|i| i.abs() > 4)
            .map(|i| 0.25f64.powi(i.abs() as i32))
            .sum::<f64>()
            .sqrt();
        assert!((b.tail_norm(&interval(), 4) - direct).abs() < 1e-15);
        for n in 1..30 {
            assert!(b.tail_norm(&interval(), n) <= 0.5f64.powi(n as i32));
        }
        assert!(rfsm_solve(&OperatorSpec::identity(1), &RightHandSide::Geometric { ratio: 1.0 }, &interval(), 2, 2, 1e-10).is_err());
    }

    #[test]
    fn qmapn_examples() {
        let shift = OperatorSpec::<f64>::shift(1);
        assert_eq!(qmapn_norm(&shift, &interval(), 5, 5).unwrap(), 1.0);
        assert_eq!(qmapn_norm(&shift, &interval(), 6, 5).unwrap(), 0.0);
        let case = build_example::<f64>(ExampleId::WorkedA, 1).unwrap();
        assert_eq!(qmapn_norm(&case.operator, &interval(), 7, 4).unwrap(), 0.0);
        // n = m = 1: the C block of the next period sits in row 2, columns -1..=1
        assert!((qmapn_norm(&case.operator, &interval(), 1, 1).unwrap() - 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn identity_and_shift_solves() {
        let b = decaying();
        let sol = rfsm_solve(&OperatorSpec::identity(1), &b, &interval(), 6, 4, 1e-10).unwrap();
        for i in -4..=4 {
            assert!((sol.u.get(&LatticePoint::from(i)).re - 0.5f64.powi(i.abs() as i32)).abs() < 1e-15);
        }
        assert_eq!(sol.u.support_len(), 9);
        let expected = (2.0 * (0.25f64.powi(5) + 0.25f64.powi(6))).sqrt();
        assert!((sol.residual - expected).abs() < 1e-15);

        let e1 = RightHandSide::from(SupportedVector::<f64>::unit(LatticePoint::from(1)));
        let sol = rfsm_solve(&OperatorSpec::shift(1), &e1, &interval(), 4, 3, 1e-10).unwrap();
        assert_eq!(sol.u, SupportedVector::unit(LatticePoint::from(0)));
        assert_eq!(sol.residual, 0.0);
    }

    #[test]
    fn bound_formula() {
        assert!((solution_bound(2.0f64, 1.0, 0.1, 0.0).unwrap() - 2.2).abs() < 1e-15);
        assert!(matches!(solution_bound(2.0, 1.0, 0.1, 0.5), Err(RfsmError::HypothesisViolated { .. })));
    }

    #[test]
    fn parameter_choice() {
        let id = OperatorSpec::<f64>::identity(1);
        let b = RightHandSide::from(SupportedVector::unit(LatticePoint::origin(1)));
        let p = choose_parameters(1e-3, 1.0, 1.0, &b, |_| 0.0, &id, &interval(), SearchLimits::default()).unwrap();
        assert_eq!((p.n, p.m), (1, 1));
        assert!((p.delta - 1e-3 / 6.0).abs() < 1e-18);

        let err = choose_parameters(
            1e-12,
            1.0,
            1.0,
            &decaying(),
            |_| 0.0,
            &id,
            &interval(),
            SearchLimits { n_max: 10, m_max: 2 },
        )
        .unwrap_err();
        assert_eq!(err, RfsmError::NoFeasibleM { ceiling: 2 });
        let err = choose_parameters(1e-3, 1.0, 1.0, &b, |_| 1.0, &id, &interval(), SearchLimits { n_max: 4, m_max: 8 })
            .unwrap_err();
        assert_eq!(err, RfsmError::NoFeasibleN { ceiling: 4 });
    }

    #[test]
    fn normal_equations() {
        let id = OperatorSpec::<f64>::identity(1);
        let u = normal_equations_solve(&id, &decaying(), &interval(), 5, 3, 1e-10).unwrap();
        assert_eq!(u.support_len(), 7);
        let err = normal_equations_solve(&OperatorSpec::shift(1), &decaying(), &interval(), 3, 3, 1e-10).unwrap_err();
        assert!(matches!(err, RfsmError::SingularGram { .. }));
    }

    #[test]
    fn identity_study_error_is_tail() {
        let id = OperatorSpec::<f64>::identity(1);
        let b = decaying();
        let opts = StudyOptions { tau: 1e-10, a_inv_norm: Some(1.0), error_bound: None };
        let report = convergence_study(&id, &b, &interval(), &Coupling::Band, &[1, 2, 3, 4], 40, opts).unwrap();
        for r in &report.records {
            assert_eq!(r.m, r.n);
            let tail = (b.tail_norm(&interval(), r.n).powi(2) - b.tail_norm(&interval(), 40).powi(2)).sqrt();
            assert!((r.error - tail).abs() < 1e-14, "n = {}", r.n);
            assert!(r.bound.is_some());
        }
        let json = serde_json::to_string(&report).unwrap();
        assert_eq!(serde_json::from_str::<RfsmReport>(&json).unwrap(), report);
    }
}
