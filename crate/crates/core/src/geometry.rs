//! Lattice geometry: starlike polytopes `Ω`, their lattice sections `nΩ ∩ Z^N`
//! and the boundary layers `(n∂Ω + H) ∩ Z^N` with `H = (-1/2, 1/2]^N`.
//!
//! Domains are convex polytopes given by rational half-spaces. All membership
//! decisions are made in exact integer/rational arithmetic.

use std::collections::BTreeSet;

use rustc_hash::FxHashMap as HashMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use smallvec::{smallvec, SmallVec};
use thiserror::Error;

/// Exact rational used for domain descriptions.
pub type Rational = Ratio<i64>;

type Q = Ratio<i128>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("domain description is empty")]
    Empty,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("0 is not an interior point of the domain (facet {facet})")]
    ZeroNotInterior { facet: usize },
    #[error("domain is unbounded: facet normals do not positively span R^{dimension}")]
    Unbounded { dimension: usize },
    #[error("open facets are only supported in dimension 1")]
    OpenFacetDimension,
    #[error("boundary layer is undefined for domains with open facets")]
    OpenFacet,
    #[error("dimension must be at least 1")]
    ZeroDimension,
}

/// A point of the integer lattice `Z^N`, ordered lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatticePoint(Coords);

type Coords = SmallVec<[i64; 3]>;

impl LatticePoint {
    pub fn new(coords: Vec<i64>) -> Self {
        Self(Coords::from_vec(coords))
    }

    pub fn origin(dimension: usize) -> Self {
        Self(smallvec![0; dimension])
    }

    /// The unit vector `e_axis` scaled by `value`.
    pub fn axis(dimension: usize, axis: usize, value: i64) -> Self {
        let mut coords: Coords = smallvec![0; dimension];
        coords[axis] = value;
        Self(coords)
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn max_norm(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).max().unwrap_or(0)
    }

    pub fn is_origin(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }
}

impl From<Vec<i64>> for LatticePoint {
    fn from(coords: Vec<i64>) -> Self {
        Self::new(coords)
    }
}

impl From<i64> for LatticePoint {
    fn from(coord: i64) -> Self {
        Self(smallvec![coord])
    }
}

impl<const N: usize> From<[i64; N]> for LatticePoint {
    fn from(coords: [i64; N]) -> Self {
        Self(Coords::from_slice(&coords))
    }
}

impl Add for &LatticePoint {
    type Output = LatticePoint;
    fn add(self, rhs: &LatticePoint) -> LatticePoint {
        debug_assert_eq!(self.dimension(), rhs.dimension());
        LatticePoint(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &LatticePoint {
    type Output = LatticePoint;
    fn sub(self, rhs: &LatticePoint) -> LatticePoint {
        debug_assert_eq!(self.dimension(), rhs.dimension());
        LatticePoint(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &LatticePoint {
    type Output = LatticePoint;
    fn neg(self) -> LatticePoint {
        LatticePoint(self.0.iter().map(|a| -a).collect())
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() == 1 {
            return write!(f, "{}", self.0[0]);
        }
        write!(f, "(")?;
        for (k, c) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Half-space `normal·x ≤ offset` (strict when `closed` is false).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Facet {
    pub normal: Vec<Rational>,
    pub offset: Rational,
    pub closed: bool,
}

impl Facet {
    pub fn closed(normal: Vec<Rational>, offset: Rational) -> Self {
        Self { normal, offset, closed: true }
    }

    pub fn open(normal: Vec<Rational>, offset: Rational) -> Self {
        Self { normal, offset, closed: false }
    }
}

/// How a domain is handed to [`validate_domain`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum DomainDescription {
    Facets { dimension: usize, facets: Vec<Facet> },
    Vertices { dimension: usize, vertices: Vec<Vec<Rational>> },
}

/// Facet scaled to coprime integers.
#[derive(Debug, Clone, PartialEq, Eq)]
struct IntFacet {
    normal: Vec<i128>,
    offset: i128,
    closed: bool,
}

/// A bounded convex polytope with 0 in its interior.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StarlikeDomain {
    dimension: usize,
    facets: Vec<Facet>,
    vertices: Vec<Vec<Rational>>,
    int_facets: Vec<IntFacet>,
    /// Per coordinate (min, max) over the closure.
    bounds: Vec<(Rational, Rational)>,
}

/// Sorted, duplicate-free set of lattice points with its inverse position map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSet {
    dimension: usize,
    points: Vec<LatticePoint>,
    positions: HashMap<LatticePoint, usize>,
}

impl IndexSet {
    pub fn new(dimension: usize, points: impl IntoIterator<Item = LatticePoint>) -> Self {
        let mut points: Vec<LatticePoint> = points.into_iter().collect();
        assert!(
            points.iter().all(|p| p.dimension() == dimension),
            "index set points must all have dimension {dimension}"
        );
        points.sort_unstable();
        points.dedup();
        Self::from_sorted(dimension, points)
    }

    fn from_sorted(dimension: usize, points: Vec<LatticePoint>) -> Self {
        let positions = points.iter().enumerate().map(|(k, p)| (p.clone(), k)).collect();
        Self { dimension, points, positions }
    }

    pub fn empty(dimension: usize) -> Self {
        Self::from_sorted(dimension, Vec::new())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[LatticePoint] {
        &self.points
    }

    pub fn iter(&self) -> std::slice::Iter<'_, LatticePoint> {
        self.points.iter()
    }

    pub fn get(&self, ordinal: usize) -> Option<&LatticePoint> {
        self.points.get(ordinal)
    }

    pub fn position(&self, point: &LatticePoint) -> Option<usize> {
        self.positions.get(point).copied()
    }

    pub fn contains(&self, point: &LatticePoint) -> bool {
        self.positions.contains_key(point)
    }

    pub fn is_subset(&self, other: &IndexSet) -> bool {
        self.points.iter().all(|p| other.contains(p))
    }

    /// Points of `self` not in `other`.
    pub fn difference(&self, other: &IndexSet) -> IndexSet {
        let points = self.points.iter().filter(|p| !other.contains(p)).cloned().collect();
        Self::from_sorted(self.dimension, points)
    }

    /// Minkowski sum with the max-norm ball of the given radius.
    pub fn expand(&self, radius: usize) -> IndexSet {
        let r = radius as i64;
        let ball = box_points(&vec![(-r, r); self.dimension]);
        let mut out = BTreeSet::new();
        for p in &self.points {
            for d in &ball {
                out.insert(p + d);
            }
        }
        Self::from_sorted(self.dimension, out.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a IndexSet {
    type Item = &'a LatticePoint;
    type IntoIter = std::slice::Iter<'a, LatticePoint>;
    fn into_iter(self) -> Self::IntoIter {
        self.points.iter()
    }
}

/// All lattice points of the box `∏ [lo_k, hi_k]`, in lexicographic order.
pub(crate) fn box_points(bounds: &[(i64, i64)]) -> Vec<LatticePoint> {
    let mut out: Vec<Coords> = vec![Coords::new()];
    for &(lo, hi) in bounds {
        let mut next = Vec::with_capacity(out.len() * (hi - lo + 1).max(0) as usize);
        for prefix in &out {
            for c in lo..=hi {
                let mut p = prefix.clone();
                p.push(c);
                next.push(p);
            }
        }
        out = next;
    }
    out.into_iter().map(LatticePoint).collect()
}

fn q(r: Rational) -> Q {
    Q::new(*r.numer() as i128, *r.denom() as i128)
}

fn to_rational(x: Q) -> Rational {
    Rational::new(*x.numer() as i64, *x.denom() as i64)
}

/// Reduced row echelon basis of the nullspace of `rows` (each of length `cols`).
fn nullspace(rows: &[Vec<Q>], cols: usize) -> Vec<Vec<Q>> {
    let mut m: Vec<Vec<Q>> = rows.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for x in m[r].iter_mut() {
            *x *= inv;
        }
        for i in 0..m.len() {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c];
                for k in 0..cols {
                    let v = m[r][k];
                    m[i][k] -= f * v;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == m.len() {
            break;
        }
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Q::zero(); cols];
            v[f] = Q::one();
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[row][f];
            }
            v
        })
        .collect()
}

fn rank(rows: &[Vec<Q>], cols: usize) -> usize {
    cols - nullspace(rows, cols).len()
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

fn dot(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).fold(Q::zero(), |acc, (x, y)| acc + x * y)
}

/// Scale `(normal, offset)` to coprime integers, keeping orientation.
fn integer_facet(normal: &[Q], offset: Q, closed: bool) -> IntFacet {
    let lcm = normal
        .iter()
        .chain(std::iter::once(&offset))
        .fold(1i128, |acc, x| acc.lcm(x.denom()));
    let mut ints: Vec<i128> = normal.iter().map(|x| (x * lcm).to_integer()).collect();
    let mut off = (offset * lcm).to_integer();
    let g = ints.iter().fold(off.abs(), |acc, x| acc.gcd(x));
    if g > 1 {
        for x in ints.iter_mut() {
            *x /= g;
        }
        off /= g;
    }
    IntFacet { normal: ints, offset: off, closed }
}

/// Convex hull facets of a full-dimensional finite point set, via supporting
/// hyperplanes through every affinely independent `N`-subset.
fn hull_facets(dimension: usize, vertices: &[Vec<Q>]) -> Vec<(Vec<Q>, Q)> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for subset in combinations(vertices.len(), dimension) {
        // unknowns (a_1..a_N, c): a·v - c = 0 for v in subset
        let rows: Vec<Vec<Q>> = subset
            .iter()
            .map(|&i| {
                let mut row = vertices[i].clone();
                row.push(-Q::one());
                row
            })
            .collect();
        let ns = nullspace(&rows, dimension + 1);
        if ns.len() != 1 {
            continue;
        }
        let mut a: Vec<Q> = ns[0][..dimension].to_vec();
        let mut c = ns[0][dimension];
        if a.iter().all(|x| x.is_zero()) {
            continue;
        }
        let values: Vec<Q> = vertices.iter().map(|v| dot(&a, v)).collect();
        let below = values.iter().all(|&s| s <= c);
        let above = values.iter().all(|&s| s >= c);
        if !(below || above) {
            continue;
        }
        if !below {
            a.iter_mut().for_each(|x| *x = -*x);
            c = -c;
        }
        let f = integer_facet(&a, c, true);
        if seen.insert((f.normal.clone(), f.offset)) {
            out.push((
                f.normal.iter().map(|&x| Q::from_integer(x)).collect(),
                Q::from_integer(f.offset),
            ));
        }
    }
    out
}

/// Builds and validates a domain from facets or vertices.
pub fn validate_domain(description: &DomainDescription) -> Result<StarlikeDomain, GeometryError> {
    let (dimension, facets): (usize, Vec<(Vec<Q>, Q, bool)>) = match description {
        DomainDescription::Facets { dimension, facets } => {
            let dimension = *dimension;
            if dimension == 0 {
                return Err(GeometryError::ZeroDimension);
            }
            if facets.is_empty() {
                return Err(GeometryError::Empty);
            }
            for f in facets {
                if f.normal.len() != dimension {
                    return Err(GeometryError::DimensionMismatch {
                        expected: dimension,
                        actual: f.normal.len(),
                    });
                }
            }
            let facets = facets
                .iter()
                .map(|f| (f.normal.iter().map(|&x| q(x)).collect(), q(f.offset), f.closed))
                .collect();
            (dimension, facets)
        }
        DomainDescription::Vertices { dimension, vertices } => {
            let dimension = *dimension;
            if dimension == 0 {
                return Err(GeometryError::ZeroDimension);
            }
            if vertices.is_empty() {
                return Err(GeometryError::Empty);
            }
            for v in vertices {
                if v.len() != dimension {
                    return Err(GeometryError::DimensionMismatch {
                        expected: dimension,
                        actual: v.len(),
                    });
                }
            }
            let vs: Vec<Vec<Q>> = vertices.iter().map(|v| v.iter().map(|&x| q(x)).collect()).collect();
            let diffs: Vec<Vec<Q>> = vs[1..]
                .iter()
                .map(|v| v.iter().zip(&vs[0]).map(|(a, b)| a - b).collect())
                .collect();
            if rank(&diffs, dimension) < dimension {
                // lower-dimensional hull has no interior at all
                return Err(GeometryError::ZeroNotInterior { facet: 0 });
            }
            let facets = hull_facets(dimension, &vs).into_iter().map(|(a, c)| (a, c, true)).collect();
            (dimension, facets)
        }
    };

    if dimension > 1 && facets.iter().any(|f| !f.2) {
        return Err(GeometryError::OpenFacetDimension);
    }
    for (k, (_, offset, _)) in facets.iter().enumerate() {
        if !offset.is_positive() {
            return Err(GeometryError::ZeroNotInterior { facet: k });
        }
    }
    let normals: Vec<Vec<Q>> = facets.iter().map(|f| f.0.clone()).collect();
    if !positively_spans(dimension, &normals) {
        return Err(GeometryError::Unbounded { dimension });
    }

    let vertices = polytope_vertices(dimension, &facets);
    let bounds = (0..dimension)
        .map(|k| {
            let lo = vertices.iter().map(|v| v[k]).min().expect("bounded polytope has vertices");
            let hi = vertices.iter().map(|v| v[k]).max().expect("bounded polytope has vertices");
            (to_rational(lo), to_rational(hi))
        })
        .collect();
    let int_facets = facets.iter().map(|(a, c, closed)| integer_facet(a, *c, *closed)).collect();
    Ok(StarlikeDomain {
        dimension,
        facets: facets
            .iter()
            .map(|(a, c, closed)| Facet {
                normal: a.iter().map(|&x| to_rational(x)).collect(),
                offset: to_rational(*c),
                closed: *closed,
            })
            .collect(),
        vertices: vertices.iter().map(|v| v.iter().map(|&x| to_rational(x)).collect()).collect(),
        int_facets,
        bounds,
    })
}

/// True iff the recession cone `{d : normal·d ≤ 0 for all normals}` is `{0}`.
fn positively_spans(dimension: usize, normals: &[Vec<Q>]) -> bool {
    if rank(normals, dimension) < dimension {
        return false;
    }
    // A pointed non-trivial cone has an extreme ray cut out by N-1 independent constraints.
    for subset in combinations(normals.len(), dimension - 1) {
        let rows: Vec<Vec<Q>> = subset.iter().map(|&i| normals[i].clone()).collect();
        let ns = nullspace(&rows, dimension);
        if ns.len() != 1 {
            continue;
        }
        for sign in [Q::one(), -Q::one()] {
            let d: Vec<Q> = ns[0].iter().map(|x| x * sign).collect();
            if normals.iter().all(|a| !dot(a, &d).is_positive()) {
                return false;
            }
        }
    }
    true
}

fn polytope_vertices(dimension: usize, facets: &[(Vec<Q>, Q, bool)]) -> Vec<Vec<Q>> {
    let mut out = BTreeSet::new();
    for subset in combinations(facets.len(), dimension) {
        // solve [a_S] x = c_S through the augmented nullspace
        let rows: Vec<Vec<Q>> = subset
            .iter()
            .map(|&i| {
                let mut row = facets[i].0.clone();
                row.push(-facets[i].1);
                row
            })
            .collect();
        let ns = nullspace(&rows, dimension + 1);
        if ns.len() != 1 || ns[0][dimension].is_zero() {
            continue;
        }
        let t = ns[0][dimension];
        let x: Vec<Q> = ns[0][..dimension].iter().map(|v| v / t).collect();
        if facets.iter().all(|(a, c, _)| dot(a, &x) <= *c) {
            out.insert(x);
        }
    }
    out.into_iter().collect()
}

impl StarlikeDomain {
    /// The interval `[lo, hi]` with `lo < 0 < hi`.
    pub fn interval(lo: Rational, hi: Rational) -> Result<Self, GeometryError> {
        validate_domain(&DomainDescription::Facets {
            dimension: 1,
            facets: vec![
                Facet::closed(vec![Rational::one()], hi),
                Facet::closed(vec![-Rational::one()], -lo),
            ],
        })
    }

    /// The max-norm cube `[-1, 1]^N`.
    pub fn cube(dimension: usize) -> Result<Self, GeometryError> {
        let facets = (0..dimension)
            .flat_map(|k| {
                [Rational::one(), -Rational::one()].into_iter().map(move |s| {
                    let mut normal = vec![Rational::zero(); dimension];
                    normal[k] = s;
                    Facet::closed(normal, Rational::one())
                })
            })
            .collect();
        validate_domain(&DomainDescription::Facets { dimension, facets })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn vertices(&self) -> &[Vec<Rational>] {
        &self.vertices
    }

    pub fn has_open_facet(&self) -> bool {
        self.int_facets.iter().any(|f| !f.closed)
    }

    /// Whether `x ∈ nΩ`.
    pub fn contains_scaled(&self, x: &LatticePoint, n: u64) -> bool {
        debug_assert_eq!(x.dimension(), self.dimension);
        let n = n as i128;
        self.int_facets.iter().all(|f| {
            let s: i128 = f.normal.iter().zip(x.coords()).map(|(a, &c)| a * c as i128).sum();
            if f.closed {
                s <= n * f.offset
            } else {
                s < n * f.offset
            }
        })
    }

    /// Integer box containing `nΩ`.
    pub fn bounding_box(&self, n: u64) -> Vec<(i64, i64)> {
        let n = Rational::from_integer(n as i64);
        self.bounds
            .iter()
            .map(|&(lo, hi)| ((lo * n).floor().to_integer(), (hi * n).ceil().to_integer()))
            .collect()
    }

    /// Max-norm radius of [`bounding_box`](Self::bounding_box).
    pub fn box_radius(&self, n: u64) -> i64 {
        self.bounding_box(n)
            .iter()
            .map(|&(lo, hi)| lo.abs().max(hi.abs()))
            .max()
            .unwrap_or(0)
    }
}

/// `Ω_n = nΩ ∩ Z^N`, sorted lexicographically.
pub fn lattice_section(domain: &StarlikeDomain, n: u64) -> IndexSet {
    let points = box_points(&domain.bounding_box(n))
        .into_iter()
        .filter(|p| domain.contains_scaled(p, n))
        .collect();
    IndexSet::from_sorted(domain.dimension, points)
}

/// `Γ_n = (n∂Ω + H) ∩ Z^N` with `H = (-1/2, 1/2]^N`.
///
/// `z ∈ Γ_n` iff the half-open box `z - H = ∏[z_k - 1/2, z_k + 1/2)` meets
/// `n∂Ω`. Since the box is convex this holds iff it meets the closed polytope
/// and is not contained in its interior.
pub fn boundary_layer(domain: &StarlikeDomain, n: u64) -> Result<IndexSet, GeometryError> {
    if domain.has_open_facet() {
        return Err(GeometryError::OpenFacet);
    }
    let bounds: Vec<(i64, i64)> = domain.bounding_box(n).iter().map(|&(lo, hi)| (lo - 1, hi + 1)).collect();
    let half = Q::new(1, 2);
    let nn = n as i128;
    let points = box_points(&bounds)
        .into_iter()
        .filter(|z| {
            let zq: Vec<Q> = z.coords().iter().map(|&c| Q::from_integer(c as i128)).collect();
            let leaves_interior = domain.int_facets.iter().any(|f| {
                let mut sup = Q::zero();
                let mut attained = true;
                for (a, zk) in f.normal.iter().zip(&zq) {
                    let a = Q::from_integer(*a);
                    if a.is_positive() {
                        sup += a * (zk + half);
                        attained = false;
                    } else if a.is_negative() {
                        sup += a * (zk - half);
                    }
                }
                let bound = Q::from_integer(nn * f.offset);
                if attained {
                    sup >= bound
                } else {
                    sup > bound
                }
            });
            if !leaves_interior {
                return false;
            }
            let mut system = Vec::with_capacity(2 * domain.dimension + domain.int_facets.len());
            for (k, zk) in zq.iter().enumerate() {
                let mut lo = vec![Q::zero(); domain.dimension];
                lo[k] = -Q::one();
                system.push(Inequality { coef: lo, rhs: -(zk - half), strict: false });
                let mut hi = vec![Q::zero(); domain.dimension];
                hi[k] = Q::one();
                system.push(Inequality { coef: hi, rhs: zk + half, strict: true });
            }
            for f in &domain.int_facets {
                system.push(Inequality {
                    coef: f.normal.iter().map(|&a| Q::from_integer(a)).collect(),
                    rhs: Q::from_integer(nn * f.offset),
                    strict: false,
                });
            }
            feasible(system)
        })
        .collect();
    Ok(IndexSet::from_sorted(domain.dimension, points))
}

#[derive(Debug, Clone)]
struct Inequality {
    coef: Vec<Q>,
    rhs: Q,
    strict: bool,
}

/// Fourier–Motzkin feasibility for mixed strict/non-strict linear inequalities.
fn feasible(mut system: Vec<Inequality>) -> bool {
    while system.first().is_some_and(|i| !i.coef.is_empty()) {
        let (mut upper, mut lower, mut rest) = (Vec::new(), Vec::new(), Vec::new());
        for mut ineq in system {
            let a = ineq.coef.pop().expect("non-empty coefficient vector");
            if a.is_positive() {
                upper.push((ineq, a));
            } else if a.is_negative() {
                lower.push((ineq, -a));
            } else {
                rest.push(ineq);
            }
        }
        for (u, au) in &upper {
            for (l, al) in &lower {
                let coef = u.coef.iter().zip(&l.coef).map(|(x, y)| x / au + y / al).collect();
                rest.push(Inequality {
                    coef,
                    rhs: u.rhs / au + l.rhs / al,
                    strict: u.strict || l.strict,
                });
            }
        }
        system = rest;
    }
    system
        .iter()
        .all(|i| if i.strict { i.rhs.is_positive() } else { !i.rhs.is_negative() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64) -> Rational {
        Rational::from_integer(n)
    }

    fn vertices(points: &[(i64, i64)]) -> DomainDescription {
        DomainDescription::Vertices {
            dimension: 2,
            vertices: points.iter().map(|&(x, y)| vec![r(x), r(y)]).collect(),
        }
    }

    #[test]
    fn interval_is_valid() {
        let d = StarlikeDomain::interval(r(-1), r(1)).unwrap();
        assert_eq!(d.vertices().len(), 2);
    }

    #[test]
    fn interval_touching_zero_is_rejected() {
        let err = StarlikeDomain::interval(r(0), r(1)).unwrap_err();
        assert!(matches!(err, GeometryError::ZeroNotInterior { .. }));
        let err = validate_domain(&DomainDescription::Vertices { dimension: 1, vertices: vec![vec![r(0)], vec![r(1)]] })
            .unwrap_err();
        assert!(matches!(err, GeometryError::ZeroNotInterior { .. }));
    }

    #[test]
    fn triangle_from_vertices() {
        let d = validate_domain(&vertices(&[(0, 2), (2, -2), (-2, -2)])).unwrap();
        assert_eq!(d.facets().len(), 3);
        assert_eq!(d.vertices().len(), 3);
        assert!(d.contains_scaled(&LatticePoint::from([0, 2]), 1));
        assert!(!d.contains_scaled(&LatticePoint::from([1, 1]), 1));
    }

    #[test]
    fn half_plane_is_unbounded() {
        let err = validate_domain(&DomainDescription::Facets {
            dimension: 2,
            facets: vec![Facet::closed(vec![r(1), r(0)], r(1)), Facet::closed(vec![r(-1), r(0)], r(1))],
        })
        .unwrap_err();
        assert_eq!(err, GeometryError::Unbounded { dimension: 2 });
        // a wedge spans R^2 linearly but not positively
        let err = validate_domain(&DomainDescription::Facets {
            dimension: 2,
            facets: vec![Facet::closed(vec![r(1), r(1)], r(1)), Facet::closed(vec![r(1), r(-1)], r(1))],
        })
        .unwrap_err();
        assert_eq!(err, GeometryError::Unbounded { dimension: 2 });
    }

    #[test]
    fn open_facets_only_in_one_dimension() {
        let err = validate_domain(&DomainDescription::Facets {
            dimension: 2,
            facets: vec![
                Facet::open(vec![r(1), r(0)], r(1)),
                Facet::closed(vec![r(-1), r(0)], r(1)),
                Facet::closed(vec![r(0), r(1)], r(1)),
                Facet::closed(vec![r(0), r(-1)], r(1)),
            ],
        })
        .unwrap_err();
        assert_eq!(err, GeometryError::OpenFacetDimension);
    }

    #[test]
    fn interval_section() {
        let d = StarlikeDomain::interval(r(-1), r(1)).unwrap();
        let s = lattice_section(&d, 3);
        let expected: Vec<LatticePoint> = (-3..=3).map(LatticePoint::from).collect();
        assert_eq!(s.points(), &expected[..]);
    }

    #[test]
    fn half_open_interval_section() {
        let d = validate_domain(&DomainDescription::Facets {
            dimension: 1,
            facets: vec![Facet::open(vec![r(1)], r(1)), Facet::closed(vec![r(-1)], r(1))],
        })
        .unwrap();
        let s = lattice_section(&d, 1);
        assert_eq!(s.points(), &[LatticePoint::from(-1), LatticePoint::from(0)]);
        assert_eq!(boundary_layer(&d, 1).unwrap_err(), GeometryError::OpenFacet);
    }

    #[test]
    fn rational_offsets_scale_exactly() {
        let d = StarlikeDomain::interval(Rational::new(-1, 3), Rational::new(2, 3)).unwrap();
        let s = lattice_section(&d, 3);
        let expected: Vec<LatticePoint> = (-1..=2).map(LatticePoint::from).collect();
        assert_eq!(s.points(), &expected[..]);
    }

    #[test]
    fn diamond_section_matches_enumeration() {
        let d = validate_domain(&vertices(&[(1, 0), (0, 1), (-1, 0), (0, -1)])).unwrap();
        let s = lattice_section(&d, 2);
        let oracle: Vec<LatticePoint> = (-2..=2i64)
            .flat_map(|x| (-2..=2i64).map(move |y| (x, y)))
            .filter(|(x, y)| x.abs() + y.abs() <= 2)
            .map(|(x, y)| LatticePoint::from([x, y]))
            .collect();
        assert_eq!(s.len(), 13);
        assert_eq!(s.points(), &oracle[..]);
    }

    #[test]
    fn boundary_layer_of_interval() {
        let d = StarlikeDomain::interval(r(-1), r(1)).unwrap();
        let g = boundary_layer(&d, 3).unwrap();
        assert_eq!(g.points(), &[LatticePoint::from(-3), LatticePoint::from(3)]);
    }

    #[test]
    fn boundary_layer_half_integer_boundary_goes_up() {
        // n∂Ω = {-5/2, 5/2}; the half-open box [z - 1/2, z + 1/2) claims 5/2 for z = 3
        let d = StarlikeDomain::interval(Rational::new(-1, 2), Rational::new(1, 2)).unwrap();
        let g = boundary_layer(&d, 5).unwrap();
        assert_eq!(g.points(), &[LatticePoint::from(-2), LatticePoint::from(3)]);
    }

    #[test]
    fn boundary_layer_of_square() {
        let d = StarlikeDomain::cube(2).unwrap();
        for n in [1u64, 2] {
            let g = boundary_layer(&d, n).unwrap();
            let n = n as i64;
            let expected: Vec<LatticePoint> = (-n..=n)
                .flat_map(|x| (-n..=n).map(move |y| (x, y)))
                .filter(|(x, y)| x.abs().max(y.abs()) == n)
                .map(|(x, y)| LatticePoint::from([x, y]))
                .collect();
            assert_eq!(g.points(), &expected[..], "n = {n}");
        }
        assert_eq!(boundary_layer(&d, 2).unwrap().len(), 16);
        assert_eq!(boundary_layer(&d, 1).unwrap().len(), 8);
    }

    #[test]
    fn index_set_difference_and_expand() {
        let d = StarlikeDomain::interval(r(-1), r(1)).unwrap();
        let s1 = lattice_section(&d, 1);
        let s3 = lattice_section(&d, 3);
        assert_eq!(s1.expand(2), s3);
        let ring = s3.difference(&s1);
        assert_eq!(ring.len(), 4);
        assert_eq!(ring.position(&LatticePoint::from(2)), Some(2));
        assert!(s1.is_subset(&s3));
    }
}
