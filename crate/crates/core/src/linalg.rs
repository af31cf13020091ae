//! Dense complex kernels: square solves, minimum-norm least squares and
//! extreme singular values.
//!
//! Singular values come from one-sided (Hestenes) Jacobi, which delivers small
//! singular values to high relative accuracy. Least squares uses Householder QR
//! with column pivoting followed by a complete orthogonal decomposition.

use std::ops::{Index, IndexMut};

use num_complex::Complex;
use thiserror::Error;

use crate::real::{czero, norm2, Real};

/// Relative threshold for the invertibility test and the least-squares rank.
pub const DEFAULT_TAU: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("right-hand side has length {actual}, expected {expected}")]
    RhsLength { expected: usize, actual: usize },
    #[error("matrix is numerically singular: sigma_min = {sigma_min:e}, threshold = {threshold:e}")]
    SingularMatrix { sigma_min: f64, threshold: f64 },
}

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T: Real> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![czero(); rows * cols] }
    }

    pub fn identity(size: usize) -> Self {
        let mut m = Self::zeros(size, size);
        for k in 0..size {
            m[(k, k)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Self {
        assert_eq!(data.len(), rows * cols, "storage does not match shape");
        Self { rows, cols, data }
    }

    /// Real matrix from nested rows.
    pub fn from_real_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let data = rows
            .iter()
            .flat_map(|row| {
                assert_eq!(row.len(), c, "ragged rows");
                row.iter().map(|&x| Complex::new(x, T::zero()))
            })
            .collect();
        Self { rows: r, cols: c, data }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Complex<T>) -> Self {
        let data = (0..rows).flat_map(|r| (0..cols).map(move |c| (r, c))).map(|(r, c)| f(r, c)).collect();
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == czero() {
                    continue;
                }
                for c in 0..other.cols {
                    out[(r, c)] += a * other[(k, c)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(self.cols, x.len(), "vector length differs from column count");
        (0..self.rows)
            .map(|r| (0..self.cols).fold(czero(), |acc, c| acc + self[(r, c)] * x[c]))
            .collect()
    }

    fn column(&self, c: usize) -> Vec<Complex<T>> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    fn max_abs(&self) -> T {
        self.data.iter().map(|z| z.norm()).fold(T::zero(), T::max)
    }
}

impl<T: Real> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = Complex<T>;
    fn index(&self, (r, c): (usize, usize)) -> &Complex<T> {
        &self.data[r * self.cols + c]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[r * self.cols + c]
    }
}

/// All `min(rows, cols)` singular values, in descending order.
pub fn singular_values<T: Real>(m: &DenseMatrix<T>) -> Vec<T> {
    // Work on columns of the taller orientation.
    let a = if m.rows >= m.cols { m.clone() } else { m.conj_transpose() };
    let (rows, cols) = a.shape();
    if cols == 0 {
        return Vec::new();
    }
    let scale = a.max_abs();
    if scale == T::zero() {
        return vec![T::zero(); cols];
    }
    let mut columns: Vec<Vec<Complex<T>>> = (0..cols).map(|c| a.column(c).iter().map(|z| z / scale).collect()).collect();
    let eps = T::epsilon();
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let alpha: T = columns[p].iter().map(|z| z.norm_sqr()).fold(T::zero(), |s, x| s + x);
                let beta: T = columns[q].iter().map(|z| z.norm_sqr()).fold(T::zero(), |s, x| s + x);
                let gamma: Complex<T> = columns[p]
                    .iter()
                    .zip(&columns[q])
                    .fold(czero(), |s, (x, y)| s + x.conj() * y);
                let g = gamma.norm();
                if g == T::zero() || g <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // rotate a_p and e^{-iφ} a_q so their real inner product vanishes
                let phase = gamma / g;
                let zeta = (beta - alpha) / (g + g);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let cs = T::one() / (T::one() + t * t).sqrt();
                let sn = cs * t;
                let (left, right) = columns.split_at_mut(q);
                let (cp, cq) = (&mut left[p], &mut right[0]);
                for k in 0..rows {
                    let x = cp[k];
                    let y = cq[k] * phase.conj();
                    cp[k] = x * cs - y * sn;
                    cq[k] = (x * sn + y * cs) * phase;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<T> = columns.iter().map(|c| norm2(c) * scale).collect();
    sv.sort_by(|a, b| b.partial_cmp(a).expect("singular values are finite"));
    sv
}

/// Largest singular value `‖M‖_2` (0 for empty matrices).
pub fn spectral_norm<T: Real>(m: &DenseMatrix<T>) -> T {
    singular_values(m).first().copied().unwrap_or_else(T::zero)
}

/// Smallest singular value of a square matrix.
pub fn min_singular_value<T: Real>(m: &DenseMatrix<T>) -> Result<T, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare { rows: m.rows, cols: m.cols });
    }
    Ok(singular_values(m).last().copied().unwrap_or_else(T::one))
}

/// Invertibility proxy: `σ_min > τ · max(σ_max, 1)`.
pub fn passes_invertibility_test<T: Real>(sigma_min: T, sigma_max: T, tau: T) -> bool {
    sigma_min > tau * sigma_max.max(T::one())
}

/// Solves `M x = rhs` by LU with partial pivoting, after the singular value
/// based invertibility test.
pub fn solve_square<T: Real>(m: &DenseMatrix<T>, rhs: &[Complex<T>], tau: T) -> Result<Vec<Complex<T>>, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare { rows: m.rows, cols: m.cols });
    }
    if rhs.len() != m.rows {
        return Err(LinalgError::RhsLength { expected: m.rows, actual: rhs.len() });
    }
    let sv = singular_values(m);
    if let (Some(&smax), Some(&smin)) = (sv.first(), sv.last()) {
        if !passes_invertibility_test(smin, smax, tau) {
            return Err(LinalgError::SingularMatrix {
                sigma_min: smin.to_f64_lossy(),
                threshold: (tau * smax.max(T::one())).to_f64_lossy(),
            });
        }
    }
    Ok(lu_solve(m.clone(), rhs.to_vec()))
}

pub(crate) fn lu_solve<T: Real>(mut a: DenseMatrix<T>, mut b: Vec<Complex<T>>) -> Vec<Complex<T>> {
    let n = a.rows;
    for k in 0..n {
        let pivot = (k..n)
            .max_by(|&i, &j| a[(i, k)].norm().partial_cmp(&a[(j, k)].norm()).expect("finite entries"))
            .expect("non-empty pivot range");
        if pivot != k {
            for c in 0..n {
                let tmp = a[(k, c)];
                a[(k, c)] = a[(pivot, c)];
                a[(pivot, c)] = tmp;
            }
            b.swap(k, pivot);
        }
        let d = a[(k, k)];
        for i in (k + 1)..n {
            let f = a[(i, k)] / d;
            if f == czero() {
                continue;
            }
            for c in (k + 1)..n {
                let v = a[(k, c)];
                a[(i, c)] -= f * v;
            }
            let bk = b[k];
            b[i] -= f * bk;
        }
    }
    let mut x = vec![czero(); n];
    for k in (0..n).rev() {
        let s = ((k + 1)..n).fold(b[k], |acc, c| acc - a[(k, c)] * x[c]);
        x[k] = s / a[(k, k)];
    }
    x
}

/// Householder reflector `H = I - τ v v^H` mapping `x` onto a multiple of `e_1`.
struct Reflector<T: Real> {
    v: Vec<Complex<T>>,
    tau: T,
}

impl<T: Real> Reflector<T> {
    fn new(x: &[Complex<T>]) -> (Self, Complex<T>) {
        let s = norm2(x);
        if s == T::zero() {
            return (Self { v: vec![czero(); x.len()], tau: T::zero() }, czero());
        }
        let x0 = x[0];
        let phase = if x0.norm() == T::zero() { Complex::new(T::one(), T::zero()) } else { x0 / x0.norm() };
        let alpha = -phase * s;
        let mut v = x.to_vec();
        v[0] = x0 - alpha;
        let vnorm = v.iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b);
        (Self { v, tau: T::lit(2.0) / vnorm }, alpha)
    }

    /// `y ← H y` on the trailing part starting at `offset`.
    fn apply(&self, y: &mut [Complex<T>]) {
        if self.tau == T::zero() {
            return;
        }
        let dot = self.v.iter().zip(y.iter()).fold(czero(), |acc, (v, y)| acc + v.conj() * y);
        let f = dot * self.tau;
        for (yk, vk) in y.iter_mut().zip(&self.v) {
            *yk -= vk * f;
        }
    }
}

/// QR with column pivoting: `M P = Q R`.
struct PivotedQr<T: Real> {
    r: DenseMatrix<T>,
    reflectors: Vec<Reflector<T>>,
    perm: Vec<usize>,
}

fn pivoted_qr<T: Real>(m: &DenseMatrix<T>, pivoting: bool) -> PivotedQr<T> {
    let (rows, cols) = m.shape();
    let mut a = m.clone();
    let mut perm: Vec<usize> = (0..cols).collect();
    let mut reflectors = Vec::new();
    for k in 0..rows.min(cols) {
        if pivoting {
            let best = (k..cols)
                .map(|c| (c, norm2(&(k..rows).map(|r| a[(r, c)]).collect::<Vec<_>>())))
                .max_by(|x, y| x.1.partial_cmp(&y.1).expect("finite norms"))
                .map(|(c, _)| c)
                .expect("non-empty column range");
            if best != k {
                for r in 0..rows {
                    let tmp = a[(r, k)];
                    a[(r, k)] = a[(r, best)];
                    a[(r, best)] = tmp;
                }
                perm.swap(k, best);
            }
        }
        let x: Vec<Complex<T>> = (k..rows).map(|r| a[(r, k)]).collect();
        let (h, alpha) = Reflector::new(&x);
        a[(k, k)] = alpha;
        for r in (k + 1)..rows {
            a[(r, k)] = czero();
        }
        for c in (k + 1)..cols {
            let mut col: Vec<Complex<T>> = (k..rows).map(|r| a[(r, c)]).collect();
            h.apply(&mut col);
            for (r, v) in (k..rows).zip(col) {
                a[(r, c)] = v;
            }
        }
        reflectors.push(h);
    }
    PivotedQr { r: a, reflectors, perm }
}

/// Minimum-norm minimizer of `‖M x - rhs‖_2` (the pseudo-inverse solution).
/// Columns whose pivot falls below `tau_rank · |R_00|` are treated as rank deficient.
pub fn least_squares<T: Real>(m: &DenseMatrix<T>, rhs: &[Complex<T>], tau_rank: T) -> Result<Vec<Complex<T>>, LinalgError> {
    // |R_00| after column pivoting is the largest column norm
    let lead = (0..m.cols)
        .map(|c| norm2(&(0..m.rows).map(|r| m[(r, c)]).collect::<Vec<_>>()))
        .fold(T::zero(), T::max);
    least_squares_with_threshold(m, rhs, tau_rank * lead)
}

/// As [`least_squares`], with an absolute pivot threshold.
pub(crate) fn least_squares_with_threshold<T: Real>(
    m: &DenseMatrix<T>,
    rhs: &[Complex<T>],
    threshold: T,
) -> Result<Vec<Complex<T>>, LinalgError> {
    let (rows, cols) = m.shape();
    if rhs.len() != rows {
        return Err(LinalgError::RhsLength { expected: rows, actual: rhs.len() });
    }
    if cols == 0 {
        return Ok(Vec::new());
    }
    let qr = pivoted_qr(m, true);
    let steps = rows.min(cols);
    let rank = (0..steps).take_while(|&k| qr.r[(k, k)].norm() > threshold).count();
    if rank == 0 {
        return Ok(vec![czero(); cols]);
    }

    let mut c = rhs.to_vec();
    for (k, h) in qr.reflectors.iter().enumerate() {
        h.apply(&mut c[k..]);
    }

    // y solves [R11 R12] y = c[..rank] with minimum norm
    let y = if rank == cols {
        let mut y = vec![czero(); cols];
        for k in (0..rank).rev() {
            let s = ((k + 1)..cols).fold(c[k], |acc, j| acc - qr.r[(k, j)] * y[j]);
            y[k] = s / qr.r[(k, k)];
        }
        y
    } else {
        // [R11 R12]^H = Z [T; 0]  ⇒  [R11 R12] = [T^H 0] Z^H
        let w = DenseMatrix::from_fn(cols, rank, |r, k| qr.r[(k, r)].conj());
        let wqr = pivoted_qr(&w, false);
        let mut z = vec![czero(); cols];
        for k in 0..rank {
            // forward substitution with the lower triangular T^H
            let s = (0..k).fold(c[k], |acc, j| acc - wqr.r[(j, k)].conj() * z[j]);
            z[k] = s / wqr.r[(k, k)].conj();
        }
        for (k, h) in wqr.reflectors.iter().enumerate().rev() {
            h.apply(&mut z[k..]);
        }
        z
    };
    let mut x = vec![czero(); cols];
    for (k, &p) in qr.perm.iter().enumerate() {
        x[p] = y[k];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(rows: &[&[f64]]) -> DenseMatrix<f64> {
        DenseMatrix::from_real_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
    }

    fn c(x: f64) -> Complex<f64> {
        Complex::new(x, 0.0)
    }

    #[test]
    fn solve_identity_and_small_system() {
        let rhs = vec![c(1.0), Complex::new(2.0, -1.0)];
        assert_eq!(solve_square(&DenseMatrix::identity(2), &rhs, 1e-10).unwrap(), rhs);
        let x = solve_square(&real(&[&[2.0, 1.0], &[1.0, 1.0]]), &[c(3.0), c(2.0)], 1e-10).unwrap();
        assert!((x[0] - c(1.0)).norm() < 1e-14 && (x[1] - c(1.0)).norm() < 1e-14);
    }

    #[test]
    fn solve_rejects_singular() {
        let err = solve_square(&real(&[&[0.0, 1.0], &[0.0, 0.0]]), &[c(1.0), c(1.0)], 1e-10).unwrap_err();
        assert!(matches!(err, LinalgError::SingularMatrix { .. }));
        let err = solve_square(&real(&[&[1.0, 2.0]]), &[c(1.0)], 1e-10).unwrap_err();
        assert!(matches!(err, LinalgError::NotSquare { .. }));
    }

    #[test]
    fn least_squares_examples() {
        let x = least_squares(&real(&[&[1.0], &[1.0]]), &[c(1.0), c(3.0)], 1e-10).unwrap();
        assert!((x[0] - c(2.0)).norm() < 1e-14);
        let x = least_squares(&DenseMatrix::zeros(3, 2), &[c(1.0), c(2.0), c(3.0)], 1e-10).unwrap();
        assert_eq!(x, vec![c(0.0), c(0.0)]);
        let m = real(&[&[2.0, 1.0], &[1.0, 1.0]]);
        let a = least_squares(&m, &[c(3.0), c(2.0)], 1e-10).unwrap();
        let b = solve_square(&m, &[c(3.0), c(2.0)], 1e-10).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).norm() < 1e-10);
        }
    }

    #[test]
    fn least_squares_rank_deficient_is_minimum_norm() {
        // x1 + x2 = 2 has minimum-norm solution (1, 1)
        let x = least_squares(&real(&[&[1.0, 1.0]]), &[c(2.0)], 1e-10).unwrap();
        assert!((x[0] - c(1.0)).norm() < 1e-14 && (x[1] - c(1.0)).norm() < 1e-14);
        // duplicated column with a zero column
        let m = real(&[&[1.0, 1.0, 0.0], &[1.0, 1.0, 0.0], &[0.0, 0.0, 0.0]]);
        let x = least_squares(&m, &[c(2.0), c(4.0), c(5.0)], 1e-10).unwrap();
        assert!((x[0] - c(1.5)).norm() < 1e-13 && (x[1] - c(1.5)).norm() < 1e-13 && x[2].norm() < 1e-13);
    }

    #[test]
    fn singular_value_examples() {
        assert!((spectral_norm(&DenseMatrix::<f64>::identity(4)) - 1.0).abs() < 1e-15);
        assert!((spectral_norm(&real(&[&[0.0, 1.0], &[1.0, 0.0]])) - 1.0).abs() < 1e-15);
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((spectral_norm(&real(&[&[1.0, 1.0], &[0.0, 1.0]])) - golden).abs() < 1e-14);
        assert_eq!(min_singular_value(&real(&[&[1.0, 2.0], &[0.0, 0.0]])).unwrap(), 0.0);
        assert!((min_singular_value(&DenseMatrix::<f64>::identity(3)).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn d_block_smallest_singular_value() {
        let d = real(&[&[1.0, 1.0, 1.0], &[1.0, 1.0, 0.0], &[1.0, 0.0, 0.0]]);
        let d_inv = real(&[&[0.0, 0.0, 1.0], &[0.0, 1.0, -1.0], &[1.0, -1.0, 0.0]]);
        let prod = d.matmul(&d_inv);
        for r in 0..3 {
            for cc in 0..3 {
                let expect = if r == cc { 1.0 } else { 0.0 };
                assert_eq!(prod[(r, cc)], c(expect));
            }
        }
        let smin = min_singular_value(&d).unwrap();
        assert!((smin - 1.0 / spectral_norm(&d_inv)).abs() < 1e-14);
    }

    #[test]
    fn complex_entries() {
        // unitary diag(i, -1) has all singular values 1
        let m = DenseMatrix::from_row_major(2, 2, vec![Complex::new(0.0, 1.0), c(0.0), c(0.0), c(-1.0)]);
        let sv = singular_values(&m);
        assert!(sv.iter().all(|s| (s - 1.0).abs() < 1e-15));
        let x = least_squares(&m, &[c(1.0), c(1.0)], 1e-10).unwrap();
        assert!((x[0] - Complex::new(0.0, -1.0)).norm() < 1e-15);
        assert!((x[1] - c(-1.0)).norm() < 1e-15);
    }

    #[test]
    fn works_in_single_precision() {
        let m = DenseMatrix::<f32>::from_real_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]);
        let golden = (1.0 + 5f32.sqrt()) / 2.0;
        assert!((spectral_norm(&m) - golden).abs() < 1e-6);
    }
}
