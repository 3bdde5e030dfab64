use std::ops::{Mul, Neg};

use num_complex::Complex;
use num_traits::Num;
use serde::{Deserialize, Serialize};

use crate::complex::ComplexExt;
use crate::scalar::Real;

/// Row-major 2×2 matrix over any commutative ring.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mat2<T> {
    pub m: [[T; 2]; 2],
}

impl<T: Clone + Num> Mat2<T> {
    pub fn new(a: T, b: T, c: T, d: T) -> Self {
        Mat2 { m: [[a, b], [c, d]] }
    }

    pub fn identity() -> Self {
        Self::new(T::one(), T::zero(), T::zero(), T::one())
    }

    pub fn diag(a: T, d: T) -> Self {
        Self::new(a, T::zero(), T::zero(), d)
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.m[i][j]
    }

    pub fn det(&self) -> T {
        self.m[0][0].clone() * self.m[1][1].clone() - self.m[0][1].clone() * self.m[1][0].clone()
    }

    /// Adjugate: `adj(A)·A = det(A)·I`.
    pub fn adjugate(&self) -> Self
    where
        T: Neg<Output = T>,
    {
        Self::new(
            self.m[1][1].clone(),
            -self.m[0][1].clone(),
            -self.m[1][0].clone(),
            self.m[0][0].clone(),
        )
    }

    pub fn inverse(&self) -> Option<Self>
    where
        T: Neg<Output = T>,
    {
        let d = self.det();
        if d.is_zero() {
            return None;
        }
        Some(self.adjugate().map(|x| x.clone() / d.clone()))
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Mat2<U> {
        Mat2 {
            m: [
                [f(&self.m[0][0]), f(&self.m[0][1])],
                [f(&self.m[1][0]), f(&self.m[1][1])],
            ],
        }
    }

    pub fn scale(&self, s: &T) -> Self {
        self.map(|x| x.clone() * s.clone())
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self::new(
            self.m[0][0].clone() - o.m[0][0].clone(),
            self.m[0][1].clone() - o.m[0][1].clone(),
            self.m[1][0].clone() - o.m[1][0].clone(),
            self.m[1][1].clone() - o.m[1][1].clone(),
        )
    }

    pub fn row(&self, i: usize) -> [T; 2] {
        self.m[i].clone()
    }

    pub fn col(&self, j: usize) -> [T; 2] {
        [self.m[0][j].clone(), self.m[1][j].clone()]
    }

    /// Row vector times matrix.
    pub fn left_mul_row(&self, v: &[T; 2]) -> [T; 2] {
        [
            v[0].clone() * self.m[0][0].clone() + v[1].clone() * self.m[1][0].clone(),
            v[0].clone() * self.m[0][1].clone() + v[1].clone() * self.m[1][1].clone(),
        ]
    }

    pub fn entries(&self) -> [T; 4] {
        [
            self.m[0][0].clone(),
            self.m[0][1].clone(),
            self.m[1][0].clone(),
            self.m[1][1].clone(),
        ]
    }
}

impl<'a, T: Clone + Num> Mul<&'a Mat2<T>> for &'a Mat2<T> {
    type Output = Mat2<T>;
    fn mul(self, o: &'a Mat2<T>) -> Mat2<T> {
        let a = &self.m;
        let b = &o.m;
        let e = |i: usize, j: usize| a[i][0].clone() * b[0][j].clone() + a[i][1].clone() * b[1][j].clone();
        Mat2::new(e(0, 0), e(0, 1), e(1, 0), e(1, 1))
    }
}

impl<T: Clone + Num> Mul for Mat2<T> {
    type Output = Mat2<T>;
    fn mul(self, o: Mat2<T>) -> Mat2<T> {
        &self * &o
    }
}

pub type IntMat2 = Mat2<i64>;

impl IntMat2 {
    pub fn to_complex<R: Real>(&self, bits: u32) -> Mat2<Complex<R>> {
        self.map(|&x| Complex::new(R::from_i64_prec(x, bits), R::zero()))
    }
}

impl<R: Real> Mat2<Complex<R>> {
    /// Largest entry modulus.
    pub fn max_norm(&self) -> R {
        self.entries()
            .iter()
            .map(ComplexExt::abs)
            .fold(R::zero(), |a, b| a.max_of(b))
    }
}
