//! Small dense vector and matrix helpers. Vectors are plain `Vec<T>` / `&[T]`.

use crate::rng::Lcg64;
use crate::scalar::Scalar;

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

#[inline]
pub fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub fn add<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

pub fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn scale<T: Scalar>(c: T, a: &[T]) -> Vec<T> {
    a.iter().map(|&x| c * x).collect()
}

/// `a + c·b`
pub fn axpy<T: Scalar>(a: &[T], c: T, b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + c * y).collect()
}

pub fn dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<T>()
        .sqrt()
}

pub fn max_abs_diff<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |m, (&x, &y)| m.max((x - y).abs()))
}

pub fn is_finite<T: Scalar>(a: &[T]) -> bool {
    a.iter().all(|x| x.is_finite())
}

pub fn from_f64<T: Scalar>(v: &[f64]) -> Vec<T> {
    v.iter().map(|&x| T::lit(x)).collect()
}

pub fn unit<T: Scalar>(n: usize, i: usize) -> Vec<T> {
    let mut e = vec![T::zero(); n];
    e[i] = T::one();
    e
}

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn diagonal(d: &[T]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "matrix must be square");
        Self {
            n,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.n, "dimension mismatch");
        (0..self.n).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    /// `Qᵀ diag(λ) Q`, symmetrized exactly by mirroring the upper triangle.
    pub fn congruence(q: &Self, eigenvalues: &[T]) -> Self {
        let n = q.n;
        assert_eq!(eigenvalues.len(), n);
        let mut a = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v: T = (0..n).map(|k| q[(k, i)] * eigenvalues[k] * q[(k, j)]).sum();
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        a
    }

    /// Orthogonal matrix from modified Gram–Schmidt on the rows of a seeded Gaussian matrix.
    ///
    /// Gaussian entries are drawn row by row from [`Lcg64::normal`]. A seed of zero still
    /// produces a random rotation; the identity is available via [`Matrix::identity`].
    pub fn random_orthogonal(n: usize, seed: u64) -> Self {
        let mut rng = Lcg64::new(seed);
        let mut rows: Vec<Vec<f64>> = (0..n).map(|_| rng.normal_vec(n)).collect();
        for i in 0..n {
            for j in 0..i {
                let (done, rest) = rows.split_at_mut(i);
                let proj = dot(&rest[0], &done[j]);
                for (x, &q) in rest[0].iter_mut().zip(&done[j]) {
                    *x -= proj * q;
                }
            }
            let nrm = norm(&rows[i]);
            assert!(nrm > 1e-12, "degenerate Gaussian draw");
            rows[i].iter_mut().for_each(|x| *x /= nrm);
        }
        let rows: Vec<Vec<T>> = rows.iter().map(|r| from_f64(r)).collect();
        Self::from_rows(&rows)
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}
