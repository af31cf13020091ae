//! Run configuration: a TOML file, overridden by command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use finsec::{
    build_example, named_domain, validate_domain, AdjacencyGraph, BlockPeriodic, CoefficientRule, Coupling,
    DomainDescription, EdgeFamily, Example, ExampleId, Facet, LatticePoint, Operator, Rational, Rhs, Scalar,
    StarlikeDomain, Vector, DEFAULT_TAU,
};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub example: Option<String>,
    pub omega: Option<String>,
    pub domain: Option<DomainConfig>,
    pub operator: Option<OperatorConfig>,
    /// Left shift `V_k` applied to the operator (and to `b`).
    pub precondition: Option<Vec<i64>>,
    pub rhs: Option<RhsConfig>,
    pub nmin: Option<u64>,
    pub nmax: Option<u64>,
    pub n: Option<u64>,
    pub m: Option<u64>,
    #[serde(default)]
    pub modulus: Vec<u64>,
    pub coupling: Option<String>,
    pub delta: Option<f64>,
    pub epsilon: Option<f64>,
    pub tau_rel: Option<f64>,
    pub norm_cap: Option<f64>,
    pub reference_n: Option<u64>,
    pub a_norm: Option<f64>,
    pub a_inv_norm: Option<f64>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub dimension: usize,
    #[serde(default)]
    pub facets: Vec<FacetConfig>,
    #[serde(default)]
    pub vertices: Vec<Vec<String>>,
}

/// `normal · x ≤ offset`, strict when `open`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FacetConfig {
    pub normal: Vec<String>,
    pub offset: String,
    #[serde(default)]
    pub open: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OperatorConfig {
    Identity { dimension: usize },
    Shift { by: Vec<i64> },
    Band { dimension: usize, diagonals: Vec<DiagonalConfig> },
    BlockPeriodic { block_size: usize, origin: Option<i64>, blocks: Vec<BlockConfig> },
    Adjacency { dimension: usize, edges: Vec<[Vec<i64>; 2]> },
    Family { family: String, bound: u64 },
}

/// One diagonal: a constant `value`, or `values` indexed by residues mod `periods`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagonalConfig {
    pub offset: Vec<i64>,
    pub value: Option<String>,
    pub periods: Option<Vec<i64>>,
    pub values: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockConfig {
    pub offset: i64,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhsConfig {
    /// `b(i) = ratio^{|i|}` on Z.
    pub geometric: Option<f64>,
    #[serde(default)]
    pub entries: Vec<EntryConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryConfig {
    pub at: Vec<i64>,
    pub value: String,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    /// Fields set in `flags` win.
    pub fn merge(self, flags: RunConfig) -> Self {
        RunConfig {
            example: flags.example.or(self.example),
            omega: flags.omega.or(self.omega),
            domain: flags.domain.or(self.domain),
            operator: flags.operator.or(self.operator),
            precondition: flags.precondition.or(self.precondition),
            rhs: flags.rhs.or(self.rhs),
            nmin: flags.nmin.or(self.nmin),
            nmax: flags.nmax.or(self.nmax),
            n: flags.n.or(self.n),
            m: flags.m.or(self.m),
            modulus: if flags.modulus.is_empty() { self.modulus } else { flags.modulus },
            coupling: flags.coupling.or(self.coupling),
            delta: flags.delta.or(self.delta),
            epsilon: flags.epsilon.or(self.epsilon),
            tau_rel: flags.tau_rel.or(self.tau_rel),
            norm_cap: flags.norm_cap.or(self.norm_cap),
            reference_n: flags.reference_n.or(self.reference_n),
            a_norm: flags.a_norm.or(self.a_norm),
            a_inv_norm: flags.a_inv_norm.or(self.a_inv_norm),
            format: flags.format.or(self.format),
            out: flags.out.or(self.out),
        }
    }

    pub fn tau(&self) -> Result<f64, CliError> {
        positive("tau-rel", self.tau_rel.unwrap_or(DEFAULT_TAU))
    }

    pub fn norm_cap(&self) -> Result<f64, CliError> {
        positive("norm-cap", self.norm_cap.unwrap_or(finsec::fsm::DEFAULT_NORM_CAP))
    }

    /// `nmin..=nmax`, checked non-empty.
    pub fn n_range(&self, default_max: u64) -> Result<Vec<u64>, CliError> {
        let lo = self.nmin.unwrap_or(1);
        let hi = self.nmax.unwrap_or(default_max);
        if lo == 0 || lo > hi {
            return Err(CliError::Validation(format!("empty n-range {lo}..={hi} (n starts at 1)")));
        }
        Ok((lo..=hi).collect())
    }

    pub fn coupling(&self) -> Result<Coupling, CliError> {
        self.coupling.as_deref().unwrap_or("band").parse().map_err(|e| CliError::Validation(format!("{e}")))
    }

    pub fn example_case(&self, n_max: u64) -> Result<Option<Example>, CliError> {
        let Some(name) = &self.example else { return Ok(None) };
        let id: ExampleId = name.parse().map_err(|e| CliError::Validation(format!("{e}")))?;
        build_example(id, Example::bound_for(id, n_max)).map(Some).map_err(|e| CliError::Validation(e.to_string()))
    }

    /// The problem: operator, domain and right-hand side, from an example or
    /// from the explicit descriptions. Explicit parts override the example.
    pub fn problem(&self, n_max: u64) -> Result<Problem, CliError> {
        let example = self.example_case(n_max)?;
        let domain = match (&self.domain, &self.omega, &example) {
            (Some(d), _, _) => (d.build()?, "custom".to_string()),
            (None, Some(name), _) => (named_domain(name).map_err(|e| CliError::Validation(e.to_string()))?, name.clone()),
            (None, None, Some(case)) => (case.domain.clone(), case.domain_name.clone()),
            (None, None, None) => return Err(CliError::Validation("no domain: pass --omega, --example or a [domain] table".into())),
        };
        let (mut operator, mut label) = match (&self.operator, &example) {
            (Some(op), _) => (op.build()?, op.label()),
            (None, Some(case)) => (case.operator.clone(), case.id.to_string()),
            (None, None) => return Err(CliError::Validation("no operator: pass --operator, --example or an [operator] table".into())),
        };
        let mut rhs = match (&self.rhs, &example) {
            (Some(r), _) => r.build(operator.dimension())?,
            (None, Some(case)) if case.rhs.is_some() => case.rhs.clone().expect("checked"),
            _ => Rhs::Supported(Vector::unit(LatticePoint::origin(operator.dimension()))),
        };
        if let Some(by) = &self.precondition {
            let by = LatticePoint::from(by.clone());
            if by.dimension() != operator.dimension() {
                return Err(CliError::Validation("precondition shift has the wrong dimension".into()));
            }
            operator = operator.compose_shift(by.clone());
            rhs = shift_rhs(&rhs, &by, &domain.0, n_max)?;
            label = format!("V{by}{label}");
        }
        if domain.0.dimension() != operator.dimension() {
            return Err(CliError::Validation(format!(
                "domain has dimension {}, operator {}",
                domain.0.dimension(),
                operator.dimension()
            )));
        }
        let norms = example.as_ref().and_then(|c| c.norms);
        Ok(Problem {
            operator,
            operator_label: label,
            domain: domain.0,
            domain_label: domain.1,
            rhs,
            a_norm: self.a_norm.or(norms.map(|n| n.a_norm)),
            a_inv_norm: self.a_inv_norm.or(norms.map(|n| n.a_inv_norm)),
            example: example.map(|c| c.id),
        })
    }
}

pub struct Problem {
    pub operator: Operator,
    pub operator_label: String,
    pub domain: StarlikeDomain,
    pub domain_label: String,
    pub rhs: Rhs,
    pub a_norm: Option<f64>,
    pub a_inv_norm: Option<f64>,
    pub example: Option<ExampleId>,
}

/// `V_k b`, truncated generously beyond every section the run touches.
fn shift_rhs(rhs: &Rhs, by: &LatticePoint, domain: &StarlikeDomain, n_max: u64) -> Result<Rhs, CliError> {
    let v = match rhs {
        Rhs::Supported(v) => v.clone(),
        Rhs::Geometric { .. } => {
            let window = finsec::lattice_section(domain, 2 * n_max + 64);
            Vector::from_dense(&window, &rhs.to_dense(&window))
        }
    };
    Operator::shift(by.clone()).apply(&v).map(Rhs::Supported).map_err(|e| CliError::Validation(e.to_string()))
}

fn positive(name: &str, x: f64) -> Result<f64, CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::Validation(format!("{name} must be positive, got {x}")))
    }
}

pub fn parse_rational(s: &str) -> Result<Rational, CliError> {
    s.trim().parse().map_err(|_| CliError::Validation(format!("bad rational '{s}' (expected p or p/q)")))
}

/// `re`, `imi`, `re+imi` or `re-imi`.
pub fn parse_scalar(s: &str) -> Result<Scalar, CliError> {
    let bad = || CliError::Validation(format!("bad scalar '{s}' (expected re or re+imi)"));
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let Some(body) = t.strip_suffix('i') else {
        return t.parse().map(|re| Complex::new(re, 0.0)).map_err(|_| bad());
    };
    // split before the last sign that is not part of an exponent
    let split = body
        .char_indices()
        .rev()
        .find(|&(k, c)| k > 0 && (c == '+' || c == '-') && !matches!(body.as_bytes()[k - 1], b'e' | b'E'))
        .map(|(k, _)| k);
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => "1",
        "-" => "-1",
        other => other,
    };
    Ok(Complex::new(re.parse().map_err(|_| bad())?, im.parse().map_err(|_| bad())?))
}

impl DomainConfig {
    pub fn build(&self) -> Result<StarlikeDomain, CliError> {
        let description = match (self.facets.is_empty(), self.vertices.is_empty()) {
            (false, true) => DomainDescription::Facets {
                dimension: self.dimension,
                facets: self
                    .facets
                    .iter()
                    .map(|f| {
                        let normal = f.normal.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>, _>>()?;
                        let offset = parse_rational(&f.offset)?;
                        Ok(if f.open { Facet::open(normal, offset) } else { Facet::closed(normal, offset) })
                    })
                    .collect::<Result<_, CliError>>()?,
            },
            (true, false) => DomainDescription::Vertices {
                dimension: self.dimension,
                vertices: self
                    .vertices
                    .iter()
                    .map(|v| v.iter().map(|s| parse_rational(s)).collect())
                    .collect::<Result<_, _>>()?,
            },
            _ => return Err(CliError::Validation("a domain needs either facets or vertices".into())),
        };
        validate_domain(&description).map_err(|e| CliError::Validation(e.to_string()))
    }
}

impl OperatorConfig {
    pub fn label(&self) -> String {
        match self {
            Self::Identity { .. } => "identity".into(),
            Self::Shift { by } => format!("shift{}", LatticePoint::from(by.clone())),
            Self::Band { .. } => "band".into(),
            Self::BlockPeriodic { .. } => "block-periodic".into(),
            Self::Adjacency { .. } => "adjacency".into(),
            Self::Family { family, .. } => family.clone(),
        }
    }

    pub fn build(&self) -> Result<Operator, CliError> {
        let op = |r: Result<Operator, finsec::OperatorError>| r.map_err(|e| CliError::Validation(e.to_string()));
        match self {
            Self::Identity { dimension } if *dimension > 0 => Ok(Operator::identity(*dimension)),
            Self::Identity { .. } => Err(CliError::Validation("dimension must be at least 1".into())),
            Self::Shift { by } if !by.is_empty() => Ok(Operator::shift(LatticePoint::from(by.clone()))),
            Self::Shift { .. } => Err(CliError::Validation("shift needs at least one coordinate".into())),
            Self::Band { dimension, diagonals } => {
                let mut table = BTreeMap::new();
                for d in diagonals {
                    let rule = match (&d.value, &d.periods, &d.values) {
                        (Some(v), None, None) => CoefficientRule::Constant(parse_scalar(v)?),
                        (None, Some(periods), Some(values)) => CoefficientRule::Periodic {
                            periods: periods.clone(),
                            values: values.iter().map(|s| parse_scalar(s)).collect::<Result<_, _>>()?,
                        },
                        _ => {
                            return Err(CliError::Validation(
                                "a diagonal needs either value or periods with values".into(),
                            ))
                        }
                    };
                    if table.insert(LatticePoint::from(d.offset.clone()), rule).is_some() {
                        return Err(CliError::Validation(format!("diagonal {:?} given twice", d.offset)));
                    }
                }
                op(Operator::band(*dimension, table))
            }
            Self::BlockPeriodic { block_size, origin, blocks } => {
                let mut table = BTreeMap::new();
                for b in blocks {
                    let entries = b.rows.iter().flatten().map(|s| parse_scalar(s)).collect::<Result<Vec<_>, _>>()?;
                    table.insert(b.offset, entries);
                }
                let block = match origin {
                    Some(o) => BlockPeriodic::new(*block_size, *o, table),
                    None => BlockPeriodic::centered(*block_size, table),
                };
                block.map(Operator::BlockPeriodic).map_err(|e| CliError::Validation(e.to_string()))
            }
            Self::Adjacency { dimension, edges } => {
                let edges = edges.iter().map(|[p, q]| [LatticePoint::from(p.clone()), LatticePoint::from(q.clone())]).collect();
                AdjacencyGraph::new(*dimension, edges)
                    .map(Operator::AdjacencyGraph)
                    .map_err(|e| CliError::Validation(e.to_string()))
            }
            Self::Family { family, bound } => {
                let family: EdgeFamily = family.parse().map_err(|e: finsec::OperatorError| CliError::Validation(e.to_string()))?;
                AdjacencyGraph::generated(family, *bound, vec![])
                    .map(Operator::AdjacencyGraph)
                    .map_err(|e| CliError::Validation(e.to_string()))
            }
        }
    }

    /// `identity[:N]`, `shift:k[,k..]` or `family:NAME:K`.
    pub fn from_flag(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::Validation(format!("bad operator '{s}' (identity[:N], shift:k[,k..], family:NAME:K)"));
        let mut parts = s.split(':');
        let config = match (parts.next(), parts.next(), parts.next()) {
            (Some("identity"), None, None) => Self::Identity { dimension: 1 },
            (Some("identity"), Some(d), None) => Self::Identity { dimension: d.parse().map_err(|_| bad())? },
            (Some("shift"), Some(by), None) => Self::Shift {
                by: by.split(',').map(|k| k.trim().parse()).collect::<Result<_, _>>().map_err(|_| bad())?,
            },
            (Some("family"), Some(name), Some(k)) => Self::Family { family: name.into(), bound: k.parse().map_err(|_| bad())? },
            _ => return Err(bad()),
        };
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(config)
    }
}

impl RhsConfig {
    pub fn build(&self, dimension: usize) -> Result<Rhs, CliError> {
        match (self.geometric, self.entries.is_empty()) {
            (Some(ratio), true) if dimension == 1 && ratio.abs() < 1.0 => Ok(Rhs::Geometric { ratio }),
            (Some(_), true) => Err(CliError::Validation("geometric right-hand sides need dimension 1 and |ratio| < 1".into())),
            (None, _) => {
                let mut entries = Vec::new();
                for e in &self.entries {
                    if e.at.len() != dimension {
                        return Err(CliError::Validation(format!("rhs entry {:?} has the wrong dimension", e.at)));
                    }
                    entries.push((LatticePoint::from(e.at.clone()), parse_scalar(&e.value)?));
                }
                Ok(Rhs::Supported(Vector::from_entries(dimension, entries)))
            }
            _ => Err(CliError::Validation("rhs takes either geometric or entries".into())),
        }
    }
}
