//! Dense matrices over an exact ring, with field operations (solve, rank,
//! kernel, inverse) available over `Scalar`.

use num_traits::{One, Zero};
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::CalcError;
use crate::scalar::Scalar;

pub trait Ring:
    Clone
    + PartialEq
    + Zero
    + One
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
}

impl<T> Ring for T where
    T: Clone
        + PartialEq
        + Zero
        + One
        + for<'a> Add<&'a T, Output = T>
        + for<'a> Sub<&'a T, Output = T>
        + for<'a> Mul<&'a T, Output = T>
        + Neg<Output = T>
        + Send
        + Sync
        + 'static
{
}

#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    pub rows: usize,
    pub cols: usize,
    data: Vec<T>,
}

impl<T: Ring> Matrix<T> {
    pub fn zero(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zero(n, n);
        for i in 0..n {
            *m.get_mut(i, i) = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Matrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.cols + j]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut T {
        &mut self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix::from_fn(self.rows, self.cols, |i, j| {
            self.get(i, j).clone() + other.get(i, j)
        })
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix::from_fn(self.rows, self.cols, |i, j| {
            self.get(i, j).clone() - other.get(i, j)
        })
    }

    pub fn neg(&self) -> Self {
        Matrix::from_fn(self.rows, self.cols, |i, j| -self.get(i, j).clone())
    }

    pub fn scale(&self, s: &T) -> Self {
        Matrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).clone() * s)
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matrix dims");
        Matrix::from_fn(self.rows, other.cols, |i, j| {
            let mut acc = T::zero();
            for k in 0..self.cols {
                acc = acc + &(self.get(i, k).clone() * other.get(k, j));
            }
            acc
        })
    }

    pub fn apply(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "matrix-vector dims");
        (0..self.rows)
            .map(|i| {
                let mut acc = T::zero();
                for k in 0..self.cols {
                    acc = acc + &(self.get(i, k).clone() * &v[k]);
                }
                acc
            })
            .collect()
    }

    pub fn transpose(&self) -> Self {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn pow(&self, mut k: u32) -> Self {
        assert_eq!(self.rows, self.cols);
        let mut acc = Matrix::identity(self.rows);
        let mut base = self.clone();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            k >>= 1;
        }
        acc
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    /// Σ_{k<=order} (a^k / k!) with exact scalar division on coefficients;
    /// terminates early once a^k = 0 (nilpotent argument).
    pub fn exp_nilpotent(&self, max_order: u32, scale_fact: impl Fn(u32) -> T) -> Self {
        assert_eq!(self.rows, self.cols);
        let mut acc = Matrix::identity(self.rows);
        let mut pw = Matrix::identity(self.rows);
        for k in 1..=max_order {
            pw = pw.mul(self);
            if pw.is_zero() {
                break;
            }
            acc = acc.add(&pw.scale(&scale_fact(k)));
        }
        acc
    }
}

impl Matrix<Scalar> {
    /// Row-reduce a copy, returning (reduced matrix, pivot columns).
    fn row_echelon(&self) -> (Matrix<Scalar>, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..m.cols {
            if row >= m.rows {
                break;
            }
            let Some(p) = (row..m.rows).find(|&r| !m.get(r, col).is_zero()) else {
                continue;
            };
            for j in 0..m.cols {
                let a = m.get(row, j).clone();
                let b = m.get(p, j).clone();
                m.set(row, j, b);
                m.set(p, j, a);
            }
            let inv = m.get(row, col).inv().expect("pivot nonzero");
            for j in 0..m.cols {
                let v = m.get(row, j) * &inv;
                m.set(row, j, v);
            }
            for r in 0..m.rows {
                if r != row && !m.get(r, col).is_zero() {
                    let f = m.get(r, col).clone();
                    for j in 0..m.cols {
                        let v = m.get(r, j) - &(&f * m.get(row, j));
                        m.set(r, j, v);
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.row_echelon().1.len()
    }

    /// Basis of the right kernel.
    pub fn kernel(&self) -> Vec<Vec<Scalar>> {
        let (m, pivots) = self.row_echelon();
        let mut basis = Vec::new();
        let pivot_set: std::collections::BTreeSet<usize> = pivots.iter().copied().collect();
        for free in 0..self.cols {
            if pivot_set.contains(&free) {
                continue;
            }
            let mut v = vec![Scalar::zero(); self.cols];
            v[free] = Scalar::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -m.get(r, free).clone();
            }
            basis.push(v);
        }
        basis
    }

    pub fn inverse(&self) -> Result<Matrix<Scalar>, CalcError> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut aug = Matrix::from_fn(n, 2 * n, |i, j| {
            if j < n {
                self.get(i, j).clone()
            } else if j - n == i {
                Scalar::one()
            } else {
                Scalar::zero()
            }
        });
        let (red, pivots) = aug.row_echelon();
        if pivots.len() < n || pivots.iter().enumerate().any(|(i, &p)| p != i) {
            return Err(CalcError::Domain("matrix is singular".into()));
        }
        aug = red;
        Ok(Matrix::from_fn(n, n, |i, j| aug.get(i, j + n).clone()))
    }

    /// Solve `self * x = rhs`; returns None when inconsistent.
    pub fn solve(&self, rhs: &[Scalar]) -> Option<Vec<Scalar>> {
        assert_eq!(self.rows, rhs.len());
        let aug = Matrix::from_fn(self.rows, self.cols + 1, |i, j| {
            if j < self.cols {
                self.get(i, j).clone()
            } else {
                rhs[i].clone()
            }
        });
        let (red, pivots) = aug.row_echelon();
        if pivots.contains(&self.cols) {
            return None; // pivot in the rhs column: inconsistent
        }
        let mut x = vec![Scalar::zero(); self.cols];
        for (r, &pc) in pivots.iter().enumerate() {
            x[pc] = red.get(r, self.cols).clone();
        }
        Some(x)
    }
}

impl<T: Ring> std::fmt::Debug for Matrix<T>
where
    T: std::fmt::Debug,
{
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "[")?;
        for i in 0..self.rows {
            write!(f, "  [")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{:?}", self.get(i, j))?;
            }
            writeln!(f, "]")?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: Vec<Vec<i64>>) -> Matrix<Scalar> {
        Matrix::from_rows(
            rows.into_iter()
                .map(|r| r.into_iter().map(Scalar::from_int).collect())
                .collect(),
        )
    }

    #[test]
    fn inverse_and_solve() {
        let a = m(vec![vec![2, 1], vec![1, 1]]);
        let inv = a.inverse().unwrap();
        assert_eq!(a.mul(&inv), Matrix::identity(2));
        let x = a.solve(&[Scalar::from_int(3), Scalar::from_int(2)]).unwrap();
        assert_eq!(x, vec![Scalar::from_int(1), Scalar::from_int(1)]);
    }

    #[test]
    fn kernel_dimensions() {
        let a = m(vec![vec![1, 2, 3], vec![2, 4, 6]]);
        assert_eq!(a.rank(), 1);
        let k = a.kernel();
        assert_eq!(k.len(), 2);
        for v in k {
            assert!(a.apply(&v).iter().all(|x| x.is_zero()));
        }
    }

    #[test]
    fn nilpotent_exponentials_invert() {
        let n = m(vec![vec![0, 1, 0], vec![0, 0, 1], vec![0, 0, 0]]);
        let fact = |k: u32| {
            let f = crate::comb::factorial_scalar(k as u64);
            f.inv().unwrap()
        };
        let e = n.exp_nilpotent(10, fact);
        let e_inv = n.neg().exp_nilpotent(10, fact);
        assert_eq!(e.mul(&e_inv), Matrix::identity(3));
    }
}
