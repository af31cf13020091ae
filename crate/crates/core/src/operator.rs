//! Symbolic band operators on `ℓ^2(Z^N)` with complex scalar entries.
//!
//! Every variant answers `entry(i, j)` and the nonzero pattern of a column in
//! closed form, so sections of any size can be realized without storing the
//! infinite matrix.

use std::collections::BTreeMap;

use rustc_hash::FxHashMap as HashMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use thiserror::Error;

use crate::geometry::{box_points, LatticePoint};
use crate::real::{cone, czero, is_zero, Real};
use crate::vector::SupportedVector;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OperatorError {
    #[error("dimension mismatch: operator has dimension {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("entry requested at {point} lies beyond the generated region of radius {radius}")]
    UnboundedBand { point: LatticePoint, radius: i64 },
    #[error("vertex {point} occurs in more than one edge")]
    OverlappingEdges { point: LatticePoint },
    #[error("edge {{{point}, {point}}} is not a doubleton")]
    SelfLoop { point: LatticePoint },
    #[error("block at offset {offset} has {actual} entries, expected {expected}")]
    BadBlock { offset: i64, expected: usize, actual: usize },
    #[error("block-periodic operators require block size >= 1 and dimension 1")]
    BadBlockSize,
    #[error("periodic coefficient table is inconsistent with its periods")]
    BadPeriodicTable,
    #[error("unknown edge family '{0}'")]
    UnknownFamily(String),
}

/// Coefficient `f_d(i)` of one stored diagonal, as a function of the row index.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientRule<T: Real> {
    Constant(Complex<T>),
    /// `values` are indexed row-major by the residues `i_k mod periods_k`.
    Periodic { periods: Vec<i64>, values: Vec<Complex<T>> },
    Table { entries: BTreeMap<LatticePoint, Complex<T>>, default: Complex<T> },
}

impl<T: Real> CoefficientRule<T> {
    fn residue_ordinal(periods: &[i64], i: &LatticePoint) -> usize {
        periods
            .iter()
            .zip(i.coords())
            .fold(0usize, |acc, (&p, &c)| acc * p as usize + c.rem_euclid(p) as usize)
    }

    fn validate(&self, dimension: usize) -> Result<(), OperatorError> {
        match self {
            Self::Constant(_) => Ok(()),
            Self::Periodic { periods, values } => {
                let count: i64 = periods.iter().product();
                if periods.len() != dimension || periods.iter().any(|&p| p < 1) || count as usize != values.len() {
                    return Err(OperatorError::BadPeriodicTable);
                }
                Ok(())
            }
            Self::Table { entries, .. } => {
                for p in entries.keys() {
                    if p.dimension() != dimension {
                        return Err(OperatorError::DimensionMismatch { expected: dimension, actual: p.dimension() });
                    }
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, i: &LatticePoint) -> Complex<T> {
        match self {
            Self::Constant(c) => *c,
            Self::Periodic { periods, values } => values[Self::residue_ordinal(periods, i)],
            Self::Table { entries, default } => entries.get(i).copied().unwrap_or(*default),
        }
    }

    /// The rule `i ↦ conj(f(i - shift))`.
    fn conj_shifted(&self, shift: &LatticePoint) -> Self {
        match self {
            Self::Constant(c) => Self::Constant(c.conj()),
            Self::Periodic { periods, values } => {
                let residues = box_points(&periods.iter().map(|&p| (0, p - 1)).collect::<Vec<_>>());
                let values = residues
                    .iter()
                    .map(|r| values[Self::residue_ordinal(periods, &(r - shift))].conj())
                    .collect();
                Self::Periodic { periods: periods.clone(), values }
            }
            Self::Table { entries, default } => Self::Table {
                entries: entries.iter().map(|(k, v)| (k + shift, v.conj())).collect(),
                default: default.conj(),
            },
        }
    }

    fn may_be_nonzero(&self) -> bool {
        match self {
            Self::Constant(c) => !is_zero(*c),
            Self::Periodic { values, .. } => values.iter().any(|v| !is_zero(*v)),
            Self::Table { entries, default } => !is_zero(*default) || entries.values().any(|v| !is_zero(*v)),
        }
    }
}

/// `q × q` blocks repeated along the diagonal of a one-dimensional operator.
/// Block row `r` covers indices `origin + r q .. origin + r q + q - 1`, and
/// `blocks[t]` sits in block row `r`, block column `r + t`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPeriodic<T: Real> {
    block_size: usize,
    origin: i64,
    blocks: BTreeMap<i64, Vec<Complex<T>>>,
}

impl<T: Real> BlockPeriodic<T> {
    pub fn new(block_size: usize, origin: i64, blocks: BTreeMap<i64, Vec<Complex<T>>>) -> Result<Self, OperatorError> {
        if block_size == 0 {
            return Err(OperatorError::BadBlockSize);
        }
        for (&offset, b) in &blocks {
            if b.len() != block_size * block_size {
                return Err(OperatorError::BadBlock { offset, expected: block_size * block_size, actual: b.len() });
            }
        }
        Ok(Self { block_size, origin, blocks })
    }

    /// Centered alignment: block 0 occupies `-(q-1)/2 ..`, i.e. `{-1, 0, 1}` for `q = 3`.
    pub fn centered(block_size: usize, blocks: BTreeMap<i64, Vec<Complex<T>>>) -> Result<Self, OperatorError> {
        Self::new(block_size, -((block_size as i64 - 1) / 2), blocks)
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn origin(&self) -> i64 {
        self.origin
    }

    pub fn blocks(&self) -> &BTreeMap<i64, Vec<Complex<T>>> {
        &self.blocks
    }

    fn locate(&self, i: i64) -> (i64, usize) {
        let q = self.block_size as i64;
        let rel = i - self.origin;
        (rel.div_euclid(q), rel.rem_euclid(q) as usize)
    }

    fn entry(&self, i: i64, j: i64) -> Complex<T> {
        let (r, lr) = self.locate(i);
        let (c, lc) = self.locate(j);
        self.blocks
            .get(&(c - r))
            .map(|b| b[lr * self.block_size + lc])
            .unwrap_or_else(czero)
    }

    fn column(&self, j: i64) -> Vec<(LatticePoint, Complex<T>)> {
        let q = self.block_size;
        let (c, lc) = self.locate(j);
        let mut out = Vec::new();
        for (&t, b) in &self.blocks {
            let r = c - t;
            for lr in 0..q {
                let v = b[lr * q + lc];
                if !is_zero(v) {
                    out.push((LatticePoint::from(self.origin + r * q as i64 + lr as i64), v));
                }
            }
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    fn band_width(&self) -> usize {
        let q = self.block_size as i64;
        let mut w = 0;
        for (&t, b) in &self.blocks {
            for lr in 0..q {
                for lc in 0..q {
                    if !is_zero(b[(lr * q + lc) as usize]) {
                        w = w.max((t * q + lc - lr).unsigned_abs() as usize);
                    }
                }
            }
        }
        w
    }

    fn adjoint(&self) -> Self {
        let q = self.block_size;
        let blocks = self
            .blocks
            .iter()
            .map(|(&t, b)| {
                let mut bt = vec![czero(); q * q];
                for r in 0..q {
                    for c in 0..q {
                        bt[c * q + r] = b[r * q + c].conj();
                    }
                }
                (-t, bt)
            })
            .collect();
        Self { block_size: q, origin: self.origin, blocks }
    }
}

/// Parametric edge families `{e_k : k = 1, 2, ...}` with a known band width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeFamily {
    /// `{(k²-k-1, k²), (k²-k, k²)}` in `Z^2`.
    RaRoSi,
    /// `{(k²-k, k²), (k²-k, k²+1)}` in `Z^2`.
    SiError,
    /// `{(k, 1), (k+1, 0)}` in `Z^2`.
    Diamond,
    /// `{2k-1, 2k}` and `{-2k, -2k+1}` in `Z`.
    BlockDiag,
}

impl EdgeFamily {
    pub const ALL: [EdgeFamily; 4] = [Self::RaRoSi, Self::SiError, Self::Diamond, Self::BlockDiag];

    pub fn name(self) -> &'static str {
        match self {
            Self::RaRoSi => "rarosi",
            Self::SiError => "sierror",
            Self::Diamond => "diamond",
            Self::BlockDiag => "blockdiag",
        }
    }

    pub fn dimension(self) -> usize {
        match self {
            Self::BlockDiag => 1,
            _ => 2,
        }
    }

    /// Edges contributed by parameter `k ≥ 1`.
    pub fn edges(self, k: u64) -> Vec<[LatticePoint; 2]> {
        let k = k as i64;
        match self {
            Self::RaRoSi => vec![[LatticePoint::from([k * k - k - 1, k * k]), LatticePoint::from([k * k - k, k * k])]],
            Self::SiError => vec![[LatticePoint::from([k * k - k, k * k]), LatticePoint::from([k * k - k, k * k + 1])]],
            Self::Diamond => vec![[LatticePoint::from([k, 1]), LatticePoint::from([k + 1, 0])]],
            Self::BlockDiag => vec![
                [LatticePoint::from(2 * k - 1), LatticePoint::from(2 * k)],
                [LatticePoint::from(-2 * k), LatticePoint::from(-2 * k + 1)],
            ],
        }
    }

    /// Largest `r` such that every edge touching the max-norm ball of radius `r`
    /// has parameter `k ≤ bound`.
    pub fn covered_radius(self, bound: u64) -> i64 {
        self.edges(bound + 1)
            .iter()
            .flat_map(|e| e.iter().map(LatticePoint::max_norm))
            .min()
            .expect("families produce at least one edge")
            - 1
    }

    /// Smallest bound whose covered radius reaches `radius`.
    pub fn bound_for_radius(self, radius: i64) -> u64 {
        (1..).find(|&k| self.covered_radius(k) >= radius).expect("covered radius grows without bound")
    }

    /// `sup |i - j|` over all edges of the infinite family.
    pub fn band_width(self) -> usize {
        1
    }
}

impl FromStr for EdgeFamily {
    type Err = OperatorError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| OperatorError::UnknownFamily(s.to_string()))
    }
}

impl fmt::Display for EdgeFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Generator {
    pub family: EdgeFamily,
    pub bound: u64,
}

/// Graph on `Z^N` whose edges are pairwise disjoint doubletons.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyGraph {
    dimension: usize,
    edges: Vec<[LatticePoint; 2]>,
    partner: HashMap<LatticePoint, LatticePoint>,
    generator: Option<Generator>,
}

impl AdjacencyGraph {
    pub fn new(dimension: usize, edges: Vec<[LatticePoint; 2]>) -> Result<Self, OperatorError> {
        let mut graph = Self { dimension, edges: Vec::new(), partner: HashMap::default(), generator: None };
        for e in edges {
            graph.push_edge(e)?;
        }
        Ok(graph)
    }

    /// Materializes a named family for `k = 1..=bound`, plus optional extra edges.
    pub fn generated(family: EdgeFamily, bound: u64, extra: Vec<[LatticePoint; 2]>) -> Result<Self, OperatorError> {
        let mut graph = Self::new(family.dimension(), extra)?;
        for k in 1..=bound {
            for e in family.edges(k) {
                graph.push_edge(e)?;
            }
        }
        graph.generator = Some(Generator { family, bound });
        Ok(graph)
    }

    fn push_edge(&mut self, [a, b]: [LatticePoint; 2]) -> Result<(), OperatorError> {
        for p in [&a, &b] {
            if p.dimension() != self.dimension {
                return Err(OperatorError::DimensionMismatch { expected: self.dimension, actual: p.dimension() });
            }
            if self.partner.contains_key(p) {
                return Err(OperatorError::OverlappingEdges { point: p.clone() });
            }
        }
        if a == b {
            return Err(OperatorError::SelfLoop { point: a });
        }
        self.partner.insert(a.clone(), b.clone());
        self.partner.insert(b.clone(), a.clone());
        self.edges.push([a, b]);
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn edges(&self) -> &[[LatticePoint; 2]] {
        &self.edges
    }

    pub fn generator(&self) -> Option<Generator> {
        self.generator
    }

    /// Radius of the max-norm ball on which the partner map is complete.
    pub fn covered_radius(&self) -> Option<i64> {
        self.generator.map(|g| g.family.covered_radius(g.bound))
    }

    /// Partner of `p` under the edge set, if `p` lies in some edge.
    pub fn partner(&self, p: &LatticePoint) -> Result<Option<&LatticePoint>, OperatorError> {
        if let Some(radius) = self.covered_radius() {
            if p.max_norm() > radius && !self.partner.contains_key(p) {
                return Err(OperatorError::UnboundedBand { point: p.clone(), radius });
            }
        }
        Ok(self.partner.get(p))
    }

    fn entry<T: Real>(&self, i: &LatticePoint, j: &LatticePoint) -> Result<Complex<T>, OperatorError> {
        let one = |b: bool| if b { cone() } else { czero() };
        if i == j {
            return Ok(one(self.partner(i)?.is_none()));
        }
        match self.partner(i) {
            Ok(p) => Ok(one(p == Some(j))),
            Err(_) => Ok(one(self.partner(j)? == Some(i))),
        }
    }

    fn band_width(&self) -> usize {
        let explicit = self
            .edges
            .iter()
            .map(|[a, b]| (a - b).max_norm() as usize)
            .max()
            .unwrap_or(0);
        match self.generator {
            Some(g) => explicit.max(g.family.band_width()),
            None => explicit,
        }
    }
}

/// Symbolic description of a band operator `A` with matrix `[A] = (a_ij)`.
#[derive(Debug, Clone, PartialEq)]
pub enum OperatorSpec<T: Real> {
    /// `a_ij = f_{i-j}(i)` for stored offsets, zero elsewhere.
    BandDiagonals { dimension: usize, diagonals: BTreeMap<LatticePoint, CoefficientRule<T>> },
    BlockPeriodic(BlockPeriodic<T>),
    /// Extended adjacency matrix: `a_ij = 1` iff `{i, j}` is an edge or `i = j` lies in no edge.
    AdjacencyGraph(AdjacencyGraph),
    /// `V_c`: `a_ij = 1` iff `j = i - c`.
    Shift { by: LatticePoint },
    /// `V_left · inner · V_right`, with `a_ij = inner_{i - left, j + right}`.
    ShiftComposed { left: LatticePoint, inner: Box<OperatorSpec<T>>, right: LatticePoint },
}

impl<T: Real> OperatorSpec<T> {
    pub fn identity(dimension: usize) -> Self {
        let mut diagonals = BTreeMap::new();
        diagonals.insert(LatticePoint::origin(dimension), CoefficientRule::Constant(cone()));
        Self::BandDiagonals { dimension, diagonals }
    }

    pub fn band(dimension: usize, diagonals: BTreeMap<LatticePoint, CoefficientRule<T>>) -> Result<Self, OperatorError> {
        for (d, rule) in &diagonals {
            if d.dimension() != dimension {
                return Err(OperatorError::DimensionMismatch { expected: dimension, actual: d.dimension() });
            }
            rule.validate(dimension)?;
        }
        Ok(Self::BandDiagonals { dimension, diagonals })
    }

    pub fn shift(by: impl Into<LatticePoint>) -> Self {
        Self::Shift { by: by.into() }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Self::BandDiagonals { dimension, .. } => *dimension,
            Self::BlockPeriodic(_) => 1,
            Self::AdjacencyGraph(g) => g.dimension(),
            Self::Shift { by } => by.dimension(),
            Self::ShiftComposed { left, .. } => left.dimension(),
        }
    }

    fn check(&self, p: &LatticePoint) -> Result<(), OperatorError> {
        if p.dimension() != self.dimension() {
            return Err(OperatorError::DimensionMismatch { expected: self.dimension(), actual: p.dimension() });
        }
        Ok(())
    }

    /// The matrix entry `a_ij`.
    pub fn entry(&self, i: &LatticePoint, j: &LatticePoint) -> Result<Complex<T>, OperatorError> {
        self.check(i)?;
        self.check(j)?;
        Ok(match self {
            Self::BandDiagonals { diagonals, .. } => {
                diagonals.get(&(i - j)).map(|rule| rule.eval(i)).unwrap_or_else(czero)
            }
            Self::BlockPeriodic(b) => b.entry(i.coords()[0], j.coords()[0]),
            Self::AdjacencyGraph(g) => g.entry(i, j)?,
            Self::Shift { by } => {
                if &(i - j) == by {
                    cone()
                } else {
                    czero()
                }
            }
            Self::ShiftComposed { left, inner, right } => inner.entry(&(i - left), &(j + right))?,
        })
    }

    /// Nonzero entries `(i, a_ij)` of column `j`, sorted by row.
    pub fn column(&self, j: &LatticePoint) -> Result<Vec<(LatticePoint, Complex<T>)>, OperatorError> {
        self.check(j)?;
        let mut out = match self {
            Self::BandDiagonals { diagonals, .. } => diagonals
                .iter()
                .filter_map(|(d, rule)| {
                    let i = j + d;
                    let v = rule.eval(&i);
                    (!is_zero(v)).then_some((i, v))
                })
                .collect(),
            Self::BlockPeriodic(b) => b.column(j.coords()[0]),
            Self::AdjacencyGraph(g) => {
                let i = g.partner(j)?.cloned().unwrap_or_else(|| j.clone());
                vec![(i, cone())]
            }
            Self::Shift { by } => vec![(j + by, cone())],
            Self::ShiftComposed { left, inner, right } => inner
                .column(&(j + right))?
                .into_iter()
                .map(|(k, v)| (&k + left, v))
                .collect(),
        };
        out.sort_by(|a: &(LatticePoint, Complex<T>), b| a.0.cmp(&b.0));
        Ok(out)
    }

    /// Least `w` with `a_ij = 0` whenever `|i - j|_∞ > w`.
    pub fn band_width(&self) -> usize {
        match self {
            Self::BandDiagonals { diagonals, .. } => diagonals
                .iter()
                .filter(|(_, rule)| rule.may_be_nonzero())
                .map(|(d, _)| d.max_norm() as usize)
                .max()
                .unwrap_or(0),
            Self::BlockPeriodic(b) => b.band_width(),
            Self::AdjacencyGraph(g) => g.band_width(),
            Self::Shift { by } => by.max_norm() as usize,
            Self::ShiftComposed { left, inner, right } => {
                inner.band_width() + (left.max_norm() + right.max_norm()) as usize
            }
        }
    }

    /// `A u` for finitely supported `u`.
    pub fn apply(&self, u: &SupportedVector<T>) -> Result<SupportedVector<T>, OperatorError> {
        if u.dimension() != self.dimension() {
            return Err(OperatorError::DimensionMismatch { expected: self.dimension(), actual: u.dimension() });
        }
        let mut out = SupportedVector::zeros(self.dimension());
        for (j, uj) in u.iter() {
            for (i, a) in self.column(j)? {
                out.add_at(i, a * uj);
            }
        }
        Ok(out)
    }

    /// `A*`, with `entry(A*, i, j) = conj(entry(A, j, i))`.
    pub fn adjoint(&self) -> Self {
        match self {
            Self::BandDiagonals { dimension, diagonals } => Self::BandDiagonals {
                dimension: *dimension,
                diagonals: diagonals
                    .iter()
                    .map(|(d, rule)| {
                        let e = -d;
                        let g = rule.conj_shifted(&e);
                        (e, g)
                    })
                    .collect(),
            },
            Self::BlockPeriodic(b) => Self::BlockPeriodic(b.adjoint()),
            Self::AdjacencyGraph(g) => Self::AdjacencyGraph(g.clone()),
            Self::Shift { by } => Self::Shift { by: -by },
            Self::ShiftComposed { left, inner, right } => Self::ShiftComposed {
                left: -right,
                inner: Box::new(inner.adjoint()),
                right: -left,
            },
        }
    }

    /// `V_c · A`: shifts every row of the system down by `c`.
    pub fn compose_shift(&self, by: impl Into<LatticePoint>) -> Self {
        let by = by.into();
        match self {
            Self::ShiftComposed { left, inner, right } => Self::ShiftComposed {
                left: &by + left,
                inner: inner.clone(),
                right: right.clone(),
            },
            other => Self::ShiftComposed {
                right: LatticePoint::origin(by.dimension()),
                left: by,
                inner: Box::new(other.clone()),
            },
        }
    }
}
