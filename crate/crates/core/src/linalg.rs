//! Small dense linear algebra for the per-group Gram matrices.
//!
//! Dimensions here are tiny (d is rarely above 16), so everything is a flat
//! row-major `Vec` and the algorithms are the textbook ones: Cholesky for
//! solves and determinants, cyclic Jacobi for the spectrum.

use crate::scalar::Scalar;

/// Square matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![T::zero(); dim * dim] }
    }

    pub fn scaled_identity(dim: usize, scale: T) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = scale;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let dim = rows.len();
        let mut m = Self::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), dim, "matrix must be square");
            m.data[i * dim..(i + 1) * dim].copy_from_slice(row);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        debug_assert_eq!(v.len(), self.dim);
        self.data
            .chunks_exact(self.dim)
            .map(|row| row.iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    /// `v' A v`.
    pub fn quad_form(&self, v: &[T]) -> T {
        let mut acc = T::zero();
        for (i, row) in self.data.chunks_exact(self.dim).enumerate() {
            let inner: T = row.iter().zip(v).map(|(&a, &b)| a * b).sum();
            acc += v[i] * inner;
        }
        acc
    }

    /// `A += alpha * u u'`.
    pub fn rank_one_update(&mut self, alpha: T, u: &[T]) {
        let d = self.dim;
        for i in 0..d {
            let ui = alpha * u[i];
            for j in 0..d {
                self.data[i * d + j] += ui * u[j];
            }
        }
    }

    pub fn symmetrize(&mut self) {
        let d = self.dim;
        let half = T::of(0.5);
        for i in 0..d {
            for j in (i + 1)..d {
                let avg = (self.data[i * d + j] + self.data[j * d + i]) * half;
                self.data[i * d + j] = avg;
                self.data[j * d + i] = avg;
            }
        }
    }

    /// Eigenvalues of a symmetric matrix, ascending, by cyclic Jacobi rotations.
    pub fn symmetric_eigenvalues(&self) -> Vec<T> {
        let d = self.dim;
        let mut a = self.data.clone();
        let tol = T::epsilon() * T::of(1e-2);
        for _sweep in 0..100 {
            let mut off = T::zero();
            let mut diag = T::zero();
            for i in 0..d {
                diag += a[i * d + i] * a[i * d + i];
                for j in (i + 1)..d {
                    off += a[i * d + j] * a[i * d + j];
                }
            }
            if off <= tol * tol * diag || off == T::zero() {
                break;
            }
            for p in 0..d {
                for q in (p + 1)..d {
                    let apq = a[p * d + q];
                    if apq == T::zero() {
                        continue;
                    }
                    let app = a[p * d + p];
                    let aqq = a[q * d + q];
                    let theta = (aqq - app) / (T::of(2.0) * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    for k in 0..d {
                        let akp = a[k * d + p];
                        let akq = a[k * d + q];
                        a[k * d + p] = c * akp - s * akq;
                        a[k * d + q] = s * akp + c * akq;
                    }
                    for k in 0..d {
                        let apk = a[p * d + k];
                        let aqk = a[q * d + k];
                        a[p * d + k] = c * apk - s * aqk;
                        a[q * d + k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut eig: Vec<T> = (0..d).map(|i| a[i * d + i]).collect();
        eig.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
        eig
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.dim + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.dim + j]
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    lower: Matrix<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Returns `None` when the matrix is not numerically positive definite.
    pub fn factor(a: &Matrix<T>) -> Option<Self> {
        let d = a.dim();
        let mut l = Matrix::zeros(d);
        for j in 0..d {
            let mut diag = a[(j, j)];
            for k in 0..j {
                diag -= l[(j, k)] * l[(j, k)];
            }
            if !(diag > T::zero()) {
                return None;
            }
            let ljj = diag.sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..d {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Some(Self { lower: l })
    }

    pub fn lower(&self) -> &Matrix<T> {
        &self.lower
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let d = self.lower.dim();
        let l = &self.lower;
        let mut y = b.to_vec();
        for i in 0..d {
            let mut s = y[i];
            for k in 0..i {
                s -= l[(i, k)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        for i in (0..d).rev() {
            let mut s = y[i];
            for k in (i + 1)..d {
                s -= l[(k, i)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        y
    }

    pub fn inverse(&self) -> Matrix<T> {
        let d = self.lower.dim();
        let mut inv = Matrix::zeros(d);
        let mut e = vec![T::zero(); d];
        for j in 0..d {
            e.iter_mut().for_each(|v| *v = T::zero());
            e[j] = T::one();
            let col = self.solve(&e);
            for (i, v) in col.into_iter().enumerate() {
                inv[(i, j)] = v;
            }
        }
        inv.symmetrize();
        inv
    }

    /// `log det A = 2 Σ log L_ii`.
    pub fn log_det(&self) -> T {
        let d = self.lower.dim();
        let two = T::of(2.0);
        (0..d).map(|i| self.lower[(i, i)].ln()).sum::<T>() * two
    }
}
