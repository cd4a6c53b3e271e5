//! Small fixed-size linear algebra and the float functions `core` lacks.

use core::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

pub type Vec2 = [f64; 2];

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

/// Integer power by repeated multiplication; `powi(0.0, 0) == 1.0`.
#[inline]
pub fn powi(x: f64, n: u32) -> f64 {
    let mut acc = 1.0;
    for _ in 0..n {
        acc *= x;
    }
    acc
}

#[inline]
pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm(a: Vec2) -> f64 {
    sqrt(dot(a, a))
}

#[inline]
pub fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

/// Row-major 2×2 tensor. Index as `t[(i, j)]` or `t.0[i][j]`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Tensor2(pub [[f64; 2]; 2]);

impl Tensor2 {
    pub const ZERO: Tensor2 = Tensor2([[0.0; 2]; 2]);
    pub const IDENTITY: Tensor2 = Tensor2([[1.0, 0.0], [0.0, 1.0]]);

    pub const fn new(a00: f64, a01: f64, a10: f64, a11: f64) -> Self {
        Tensor2([[a00, a01], [a10, a11]])
    }

    pub const fn diag(a: f64, b: f64) -> Self {
        Tensor2([[a, 0.0], [0.0, b]])
    }

    /// Tensor with row `r` equal to `v` and zeros elsewhere.
    pub fn from_row(r: usize, v: Vec2) -> Self {
        let mut t = Tensor2::ZERO;
        t.0[r] = v;
        t
    }

    pub fn outer(a: Vec2, b: Vec2) -> Self {
        Tensor2([[a[0] * b[0], a[0] * b[1]], [a[1] * b[0], a[1] * b[1]]])
    }

    pub fn row(&self, r: usize) -> Vec2 {
        self.0[r]
    }

    pub fn det(&self) -> f64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn transpose(&self) -> Self {
        Tensor2([[self.0[0][0], self.0[1][0]], [self.0[0][1], self.0[1][1]]])
    }

    /// Closed-form inverse; `None` when the determinant is exactly zero.
    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        let a = &self.0;
        Some(Tensor2([[a[1][1] / d, -a[0][1] / d], [-a[1][0] / d, a[0][0] / d]]))
    }

    /// Inverse transpose `A^{-T}`.
    pub fn inverse_transpose(&self) -> Option<Self> {
        self.inverse().map(|i| i.transpose())
    }

    /// Frobenius product `A : B`.
    pub fn ddot(&self, other: &Tensor2) -> f64 {
        let (a, b) = (&self.0, &other.0);
        a[0][0] * b[0][0] + a[0][1] * b[0][1] + a[1][0] * b[1][0] + a[1][1] * b[1][1]
    }

    pub fn norm_sq(&self) -> f64 {
        self.ddot(self)
    }

    pub fn matmul(&self, other: &Tensor2) -> Tensor2 {
        let (a, b) = (&self.0, &other.0);
        let mut c = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Tensor2(c)
    }

    pub fn apply(&self, v: Vec2) -> Vec2 {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }

    pub fn scale(&self, s: f64) -> Tensor2 {
        Tensor2([
            [self.0[0][0] * s, self.0[0][1] * s],
            [self.0[1][0] * s, self.0[1][1] * s],
        ])
    }

    pub fn max_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for r in &self.0 {
            for v in r {
                m = m.max(v.abs());
            }
        }
        m
    }
}

impl Index<(usize, usize)> for Tensor2 {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for Tensor2 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.0[i][j]
    }
}

impl Add for Tensor2 {
    type Output = Tensor2;
    fn add(self, o: Tensor2) -> Tensor2 {
        let mut c = self;
        c += o;
        c
    }
}

impl AddAssign for Tensor2 {
    fn add_assign(&mut self, o: Tensor2) {
        for i in 0..2 {
            for j in 0..2 {
                self.0[i][j] += o.0[i][j];
            }
        }
    }
}

impl Sub for Tensor2 {
    type Output = Tensor2;
    fn sub(self, o: Tensor2) -> Tensor2 {
        let mut c = self;
        c -= o;
        c
    }
}

impl SubAssign for Tensor2 {
    fn sub_assign(&mut self, o: Tensor2) {
        for i in 0..2 {
            for j in 0..2 {
                self.0[i][j] -= o.0[i][j];
            }
        }
    }
}

impl Neg for Tensor2 {
    type Output = Tensor2;
    fn neg(self) -> Tensor2 {
        self.scale(-1.0)
    }
}

impl Mul<f64> for Tensor2 {
    type Output = Tensor2;
    fn mul(self, s: f64) -> Tensor2 {
        self.scale(s)
    }
}

impl Mul<Tensor2> for f64 {
    type Output = Tensor2;
    fn mul(self, t: Tensor2) -> Tensor2 {
        t.scale(self)
    }
}

/// Dense LU with partial pivoting, used for element-level inversions and as
/// an independent oracle for the sparse backends.
#[derive(Clone, Debug)]
pub struct DenseLu {
    n: usize,
    lu: alloc::vec::Vec<f64>,
    perm: alloc::vec::Vec<usize>,
}

impl DenseLu {
    /// Factorises the row-major `n × n` matrix `a`. Returns the offending
    /// pivot column when the matrix is singular to working precision.
    pub fn factor(n: usize, a: &[f64]) -> Result<Self, usize> {
        assert_eq!(a.len(), n * n);
        let mut lu = a.to_vec();
        let mut perm: alloc::vec::Vec<usize> = (0..n).collect();
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        for k in 0..n {
            let mut p = k;
            let mut best = lu[k * n + k].abs();
            for i in k + 1..n {
                let v = lu[i * n + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= 1e-14 * scale {
                return Err(k);
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / pivot;
                lu[i * n + k] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        lu[i * n + j] -= f * lu[k * n + j];
                    }
                }
            }
        }
        Ok(DenseLu { n, lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> alloc::vec::Vec<f64> {
        let n = self.n;
        let mut x: alloc::vec::Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        x
    }

    /// Inverse as a row-major matrix.
    pub fn inverse(&self) -> alloc::vec::Vec<f64> {
        let n = self.n;
        let mut inv = alloc::vec![0.0; n * n];
        let mut e = alloc::vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e);
            for i in 0..n {
                inv[i * n + j] = col[i];
            }
        }
        inv
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_diag() {
        let t = Tensor2::diag(2.0, 1.0);
        assert_eq!(t.inverse().unwrap(), Tensor2::diag(0.5, 1.0));
        assert!(Tensor2::ZERO.inverse().is_none());
    }

    #[test]
    fn dense_lu_pivots() {
        // zero leading entry forces a row swap
        let a = [0.0, 1.0, 2.0, 3.0];
        let lu = DenseLu::factor(2, &a).unwrap();
        let x = lu.solve(&[1.0, 8.0]);
        assert!((x[0] - 2.5).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
        assert_eq!(DenseLu::factor(2, &[1.0, 2.0, 2.0, 4.0]).unwrap_err(), 1);
    }
}
