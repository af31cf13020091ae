//! Finite blocks `P_rows A P_cols` of an operator, with their lattice index maps.
//!
//! Sections are stored column-sparse. The numeric routines split a section into
//! the connected components of its nonzero pattern: after a row and column
//! permutation the section is block diagonal, so singular values, square solves
//! and minimum-norm least squares all decouple exactly across components.

use std::io::{self, Write};

use num_complex::Complex;

use crate::geometry::{lattice_section, IndexSet, StarlikeDomain};
use crate::linalg::{self, passes_invertibility_test, DenseMatrix, LinalgError};
use crate::operator::{OperatorError, OperatorSpec};
use crate::real::{czero, is_zero, norm2, Real};

/// Realized block of `[A]` with rows and columns indexed by lattice points.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionMatrix<T: Real> {
    rows: IndexSet,
    cols: IndexSet,
    /// Per column: `(row ordinal, value)`, nonzero, sorted by row.
    columns: Vec<Vec<(usize, Complex<T>)>>,
}

/// Rows and columns (ordinals) of one connected block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

/// Extreme singular values of a section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spectrum<T> {
    pub sigma_min: T,
    pub sigma_max: T,
}

impl<T: Real> Spectrum<T> {
    pub fn invertible(&self, tau: T) -> bool {
        passes_invertibility_test(self.sigma_min, self.sigma_max, tau)
    }
}

/// `P_rows A P_cols` as a section matrix.
pub fn assemble<T: Real>(a: &OperatorSpec<T>, rows: &IndexSet, cols: &IndexSet) -> Result<SectionMatrix<T>, OperatorError> {
    for set in [rows, cols] {
        if set.dimension() != a.dimension() {
            return Err(OperatorError::DimensionMismatch { expected: a.dimension(), actual: set.dimension() });
        }
    }
    let columns = cols
        .iter()
        .map(|j| {
            Ok(a.column(j)?
                .into_iter()
                .filter_map(|(i, v)| rows.position(&i).map(|r| (r, v)))
                .collect())
        })
        .collect::<Result<Vec<_>, OperatorError>>()?;
    Ok(SectionMatrix { rows: rows.clone(), cols: cols.clone(), columns })
}

fn check_domain<T: Real>(a: &OperatorSpec<T>, domain: &StarlikeDomain) -> Result<(), OperatorError> {
    if domain.dimension() != a.dimension() {
        return Err(OperatorError::DimensionMismatch { expected: a.dimension(), actual: domain.dimension() });
    }
    Ok(())
}

/// Square section `P_n A P_n`.
pub fn fsm_section<T: Real>(a: &OperatorSpec<T>, domain: &StarlikeDomain, n: u64) -> Result<SectionMatrix<T>, OperatorError> {
    check_domain(a, domain)?;
    let omega = lattice_section(domain, n);
    assemble(a, &omega, &omega)
}

/// Rectangular section `P_m A P_n`.
pub fn rfsm_section<T: Real>(
    a: &OperatorSpec<T>,
    domain: &StarlikeDomain,
    m: u64,
    n: u64,
) -> Result<SectionMatrix<T>, OperatorError> {
    check_domain(a, domain)?;
    assemble(a, &lattice_section(domain, m), &lattice_section(domain, n))
}

/// The rows of `A P_n` outside `Ω_m`; carries every nonzero of `Q_m A P_n`.
pub fn overflow_block<T: Real>(
    a: &OperatorSpec<T>,
    domain: &StarlikeDomain,
    m: u64,
    n: u64,
) -> Result<SectionMatrix<T>, OperatorError> {
    check_domain(a, domain)?;
    let cols = lattice_section(domain, n);
    let rows = cols.expand(a.band_width()).difference(&lattice_section(domain, m));
    assemble(a, &rows, &cols)
}

impl<T: Real> SectionMatrix<T> {
    pub fn rows(&self) -> &IndexSet {
        &self.rows
    }

    pub fn cols(&self) -> &IndexSet {
        &self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows.len(), self.cols.len())
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    pub fn get(&self, r: usize, c: usize) -> Complex<T> {
        self.columns[c]
            .binary_search_by_key(&r, |e| e.0)
            .map(|k| self.columns[c][k].1)
            .unwrap_or_else(|_| czero())
    }

    /// Nonzero entries as `(row ordinal, column ordinal, value)`, column-major.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex<T>)> + '_ {
        self.columns
            .iter()
            .enumerate()
            .flat_map(|(c, col)| col.iter().map(move |&(r, v)| (r, c, v)))
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let (rows, cols) = self.shape();
        let mut m = DenseMatrix::zeros(rows, cols);
        for (r, c, v) in self.entries() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn conj_transpose(&self) -> Self {
        let mut columns = vec![Vec::new(); self.rows.len()];
        for (r, c, v) in self.entries() {
            columns[r].push((c, v.conj()));
        }
        Self { rows: self.cols.clone(), cols: self.rows.clone(), columns }
    }

    pub fn matvec(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(x.len(), self.cols.len(), "vector length differs from column count");
        let mut y = vec![czero(); self.rows.len()];
        for (r, c, v) in self.entries() {
            y[r] += v * x[c];
        }
        y
    }

    /// Whether the section is a square identity matrix up to `tol`.
    pub fn is_identity(&self, tol: T) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let dense_ok = self.entries().all(|(r, c, v)| {
            let target = if r == c { Complex::new(T::one(), T::zero()) } else { czero() };
            (v - target).norm() <= tol
        });
        dense_ok && (0..self.cols.len()).all(|k| (self.get(k, k) - Complex::new(T::one(), T::zero())).norm() <= tol)
    }

    /// Product of two sections whose inner index sets agree.
    pub fn compose(&self, right: &Self) -> Self {
        assert_eq!(self.cols, right.rows, "inner index sets differ");
        let mut acc = vec![czero::<T>(); self.rows.len()];
        let mut hit = vec![false; self.rows.len()];
        let mut columns = Vec::with_capacity(right.columns.len());
        for col in &right.columns {
            let mut touched = Vec::new();
            for &(k, b) in col {
                for &(r, a) in &self.columns[k] {
                    if !hit[r] {
                        hit[r] = true;
                        touched.push(r);
                    }
                    acc[r] += a * b;
                }
            }
            touched.sort_unstable();
            let mut out = Vec::with_capacity(touched.len());
            for r in touched {
                if !is_zero(acc[r]) {
                    out.push((r, acc[r]));
                }
                acc[r] = czero();
                hit[r] = false;
            }
            columns.push(out);
        }
        Self { rows: self.rows.clone(), cols: right.cols.clone(), columns }
    }

    /// Connected components of the bipartite row/column nonzero graph.
    /// Zero rows and zero columns form their own (rectangular) components.
    pub fn components(&self) -> Vec<Component> {
        let (nr, nc) = self.shape();
        let mut parent: Vec<usize> = (0..nr + nc).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (r, c, _) in self.entries() {
            let (a, b) = (find(&mut parent, r), find(&mut parent, nr + c));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut slot = vec![usize::MAX; nr + nc];
        let mut out: Vec<Component> = Vec::new();
        for x in 0..nr + nc {
            let root = find(&mut parent, x);
            if slot[root] == usize::MAX {
                slot[root] = out.len();
                out.push(Component { rows: Vec::new(), cols: Vec::new() });
            }
            let comp = &mut out[slot[root]];
            if x < nr {
                comp.rows.push(x);
            } else {
                comp.cols.push(x - nr);
            }
        }
        out
    }

    fn block(&self, comp: &Component) -> DenseMatrix<T> {
        let mut local = rustc_hash::FxHashMap::default();
        for (k, &r) in comp.rows.iter().enumerate() {
            local.insert(r, k);
        }
        let mut m = DenseMatrix::zeros(comp.rows.len(), comp.cols.len());
        for (k, &c) in comp.cols.iter().enumerate() {
            for &(r, v) in &self.columns[c] {
                m[(local[&r], k)] = v;
            }
        }
        m
    }

    /// Extreme singular values. `sigma_min` is the smallest of the
    /// `min(rows, cols)` singular values (0 when the rank pattern forces it).
    pub fn spectrum(&self) -> Spectrum<T> {
        let (nr, nc) = self.shape();
        let full = nr.min(nc);
        let mut count = 0;
        let mut smax = T::zero();
        let mut smin = T::infinity();
        for comp in self.components() {
            if comp.rows.is_empty() || comp.cols.is_empty() {
                continue;
            }
            let sv = if comp.rows.len() == 1 && comp.cols.len() == 1 {
                vec![self.get(comp.rows[0], comp.cols[0]).norm()]
            } else {
                linalg::singular_values(&self.block(&comp))
            };
            count += sv.len();
            if let (Some(&hi), Some(&lo)) = (sv.first(), sv.last()) {
                smax = smax.max(hi);
                smin = smin.min(lo);
            }
        }
        if count < full || full == 0 {
            smin = T::zero();
        }
        Spectrum { sigma_min: smin, sigma_max: smax }
    }

    /// `‖section‖_2`.
    pub fn spectral_norm(&self) -> T {
        self.spectrum().sigma_max
    }

    /// Solves the square system after the invertibility test.
    pub fn solve_square(&self, rhs: &[Complex<T>], tau: T) -> Result<Vec<Complex<T>>, LinalgError> {
        let (nr, nc) = self.shape();
        if nr != nc {
            return Err(LinalgError::NotSquare { rows: nr, cols: nc });
        }
        if rhs.len() != nr {
            return Err(LinalgError::RhsLength { expected: nr, actual: rhs.len() });
        }
        let spec = self.spectrum();
        if !spec.invertible(tau) {
            return Err(LinalgError::SingularMatrix {
                sigma_min: spec.sigma_min.to_f64_lossy(),
                threshold: (tau * spec.sigma_max.max(T::one())).to_f64_lossy(),
            });
        }
        let mut x = vec![czero(); nc];
        for comp in self.components() {
            let b: Vec<Complex<T>> = comp.rows.iter().map(|&r| rhs[r]).collect();
            let y = linalg::lu_solve(self.block(&comp), b);
            for (&c, v) in comp.cols.iter().zip(y) {
                x[c] = v;
            }
        }
        Ok(x)
    }

    /// Minimum-norm least-squares solution; the rank cut is relative to the
    /// largest column norm of the whole section.
    pub fn least_squares(&self, rhs: &[Complex<T>], tau_rank: T) -> Result<Vec<Complex<T>>, LinalgError> {
        let (nr, nc) = self.shape();
        if rhs.len() != nr {
            return Err(LinalgError::RhsLength { expected: nr, actual: rhs.len() });
        }
        let lead = self
            .columns
            .iter()
            .map(|col| norm2(&col.iter().map(|e| e.1).collect::<Vec<_>>()))
            .fold(T::zero(), T::max);
        let mut x = vec![czero(); nc];
        for comp in self.components() {
            if comp.cols.is_empty() || comp.rows.is_empty() {
                continue;
            }
            let b: Vec<Complex<T>> = comp.rows.iter().map(|&r| rhs[r]).collect();
            let y = linalg::least_squares_with_threshold(&self.block(&comp), &b, tau_rank * lead)?;
            for (&c, v) in comp.cols.iter().zip(y) {
                x[c] = v;
            }
        }
        Ok(x)
    }

    /// CSV dump of the nonzero entries: row coordinates, column coordinates, re, im.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let dim = self.rows.dimension();
        let header: Vec<String> = (0..dim)
            .map(|k| format!("row_{k}"))
            .chain((0..dim).map(|k| format!("col_{k}")))
            .chain(["re".to_string(), "im".to_string()])
            .collect();
        writeln!(out, "{}", header.join(","))?;
        let mut entries: Vec<_> = self.entries().collect();
        entries.sort_by_key(|e| (e.0, e.1));
        for (r, c, v) in entries {
            let coords = self.rows.points()[r].coords().iter().chain(self.cols.points()[c].coords());
            let mut line: Vec<String> = coords.map(|x| x.to_string()).collect();
            line.push(crate::report::fmt_real(v.re));
            line.push(crate::report::fmt_real(v.im));
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{build_example, ExampleId};
    use crate::geometry::{LatticePoint, Rational};

    fn interval() -> StarlikeDomain {
        StarlikeDomain::interval(Rational::from_integer(-1), Rational::from_integer(1)).unwrap()
    }

    fn dense_rows(m: &DenseMatrix<f64>) -> Vec<Vec<f64>> {
        (0..m.rows()).map(|r| (0..m.cols()).map(|c| m[(r, c)].re).collect()).collect()
    }

    fn set(points: impl IntoIterator<Item = i64>) -> IndexSet {
        IndexSet::new(1, points.into_iter().map(LatticePoint::from))
    }

    #[test]
    fn identity_window() {
        let id = OperatorSpec::<f64>::identity(1);
        let s = assemble(&id, &set(-1..=1), &set(-1..=1)).unwrap();
        assert!(s.is_identity(0.0));
        let s = fsm_section(&id, &interval(), 4).unwrap();
        assert_eq!(s.shape(), (9, 9));
        assert!(s.is_identity(0.0));
    }

    #[test]
    fn shift_window() {
        let s = assemble(&OperatorSpec::<f64>::shift(1), &set(-1..=1), &set(-1..=1)).unwrap();
        assert_eq!(dense_rows(&s.to_dense()), vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]);
    }

    #[test]
    fn worked_example_window_is_b() {
        let case = build_example::<f64>(ExampleId::WorkedA, 4).unwrap();
        let s = assemble(&case.operator, &set(-1..=1), &set(-1..=1)).unwrap();
        assert_eq!(dense_rows(&s.to_dense()), vec![vec![1.0, 1.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 0.0]]);
        let r = rfsm_section(&case.operator, &interval(), 4, 1).unwrap();
        assert_eq!(r.shape(), (9, 3));
        // rows -1..=1 hold B, row 2 (local row 2 of block 1's predecessor) holds C's ones
        let d = dense_rows(&r.to_dense());
        assert_eq!(&d[3..6], &[vec![1.0, 1.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 0.0]]);
        assert_eq!(d[2], vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn blockdiag_sections_by_parity() {
        let case = build_example::<f64>(ExampleId::BlockDiag, 4).unwrap();
        let even = dense_rows(&fsm_section(&case.operator, &interval(), 2).unwrap().to_dense());
        let expected_even = vec![
            vec![0.0, 1.0, 0.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 0.0, 1.0],
            vec![0.0, 0.0, 0.0, 1.0, 0.0],
        ];
        assert_eq!(even, expected_even);
        let odd = dense_rows(&fsm_section(&case.operator, &interval(), 1).unwrap().to_dense());
        assert_eq!(odd, vec![vec![0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 0.0]]);
    }

    #[test]
    fn rectangular_shift_section() {
        let s = rfsm_section(&OperatorSpec::<f64>::shift(1), &interval(), 2, 1).unwrap();
        assert_eq!(s.shape(), (5, 3));
        let d = dense_rows(&s.to_dense());
        assert_eq!(d, vec![
            vec![0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ]);
        let same = rfsm_section(&OperatorSpec::<f64>::shift(1), &interval(), 3, 3).unwrap();
        assert_eq!(same, fsm_section(&OperatorSpec::<f64>::shift(1), &interval(), 3).unwrap());
    }

    #[test]
    fn overflow_blocks() {
        let shift = OperatorSpec::<f64>::shift(1);
        let o = overflow_block(&shift, &interval(), 3, 3).unwrap();
        assert_eq!(o.rows().points(), &[LatticePoint::from(-4), LatticePoint::from(4)]);
        assert_eq!(o.nnz(), 1);
        assert!((o.spectral_norm() - 1.0).abs() < 1e-15);
        let o = overflow_block(&shift, &interval(), 4, 3).unwrap();
        assert_eq!(o.nnz(), 0);
        assert_eq!(o.spectral_norm(), 0.0);

        let case = build_example::<f64>(ExampleId::BlockDiag, 8).unwrap();
        let o = overflow_block(&case.operator, &interval(), 3, 3).unwrap();
        let escaping: Vec<LatticePoint> = o.entries().map(|(r, _, _)| o.rows().points()[r].clone()).collect();
        assert_eq!(escaping, vec![LatticePoint::from(-4), LatticePoint::from(4)]);
    }

    #[test]
    fn spectrum_of_rank_deficient_pattern() {
        let s = fsm_section(&OperatorSpec::<f64>::shift(1), &interval(), 3).unwrap();
        let spec = s.spectrum();
        assert_eq!(spec.sigma_min, 0.0);
        assert!((spec.sigma_max - 1.0).abs() < 1e-15);
        assert!(!spec.invertible(1e-10));
    }

    #[test]
    fn component_solve_matches_dense() {
        let case = build_example::<f64>(ExampleId::WorkedAPrime, 8).unwrap();
        let s = fsm_section(&case.operator, &interval(), 7).unwrap();
        assert!(s.components().len() > 1);
        let rhs: Vec<Complex<f64>> = (0..s.shape().0).map(|k| Complex::new(k as f64 - 3.0, 0.5)).collect();
        let x = s.solve_square(&rhs, 1e-10).unwrap();
        let y = linalg::solve_square(&s.to_dense(), &rhs, 1e-10).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).norm() < 1e-12);
        }
        let ls = s.least_squares(&rhs, 1e-10).unwrap();
        for (a, b) in ls.iter().zip(&y) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn csv_dump_lists_nonzeros() {
        let s = fsm_section(&OperatorSpec::<f64>::shift(1), &interval(), 1).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "row_0,col_0,re,im");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0,-1,"));
    }
}
