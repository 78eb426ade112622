//! Scalar types for residual code written once and evaluated either on plain
//! values or with forward-mode derivatives.

use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn cst(x: f64) -> Self;
    fn val(self) -> f64;
    fn exp(self) -> Self;
    fn sqrt(self) -> Self;

    fn sq(self) -> Self {
        self * self
    }
}

impl Real for f64 {
    fn cst(x: f64) -> Self {
        x
    }
    fn val(self) -> f64 {
        self
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
}

/// Value with one directional derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub d: f64,
}

impl Dual {
    pub fn new(v: f64, d: f64) -> Self {
        Self { v, d }
    }
}

impl Add for Dual {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.v + o.v, self.d + o.d)
    }
}
impl Sub for Dual {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.v - o.v, self.d - o.d)
    }
}
impl Mul for Dual {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(self.v * o.v, self.d * o.v + self.v * o.d)
    }
}
impl Div for Dual {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let q = self.v / o.v;
        Self::new(q, (self.d - q * o.d) / o.v)
    }
}
impl Neg for Dual {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.v, -self.d)
    }
}
impl Add<f64> for Dual {
    type Output = Self;
    fn add(self, c: f64) -> Self {
        Self::new(self.v + c, self.d)
    }
}
impl Sub<f64> for Dual {
    type Output = Self;
    fn sub(self, c: f64) -> Self {
        Self::new(self.v - c, self.d)
    }
}
impl Mul<f64> for Dual {
    type Output = Self;
    fn mul(self, c: f64) -> Self {
        Self::new(self.v * c, self.d * c)
    }
}
impl Div<f64> for Dual {
    type Output = Self;
    fn div(self, c: f64) -> Self {
        Self::new(self.v / c, self.d / c)
    }
}

impl Real for Dual {
    fn cst(x: f64) -> Self {
        Self::new(x, 0.0)
    }
    fn val(self) -> f64 {
        self.v
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        Self::new(e, e * self.d)
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        Self::new(s, self.d / (2.0 * s))
    }
}

/// Capacity of [`Sparse`] gradients. Every intermediate in the residual
/// evaluation depends on a handful of neighbouring unknowns.
pub const SPARSE_CAP: usize = 48;

/// Value with a short sparse gradient, indices kept sorted.
#[derive(Debug, Clone, Copy)]
pub struct Sparse {
    pub v: f64,
    len: u8,
    idx: [u32; SPARSE_CAP],
    grad: [f64; SPARSE_CAP],
}

impl Sparse {
    pub fn constant(v: f64) -> Self {
        Self {
            v,
            len: 0,
            idx: [0; SPARSE_CAP],
            grad: [0.0; SPARSE_CAP],
        }
    }

    /// Independent variable number `index` with value `v`.
    pub fn variable(v: f64, index: usize) -> Self {
        let mut s = Self::constant(v);
        s.len = 1;
        s.idx[0] = index as u32;
        s.grad[0] = 1.0;
        s
    }

    pub fn gradient(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        let n = self.len as usize;
        self.idx[..n]
            .iter()
            .zip(&self.grad[..n])
            .map(|(&i, &g)| (i as usize, g))
    }

    /// `a * x + b * y` on gradients, with value `v`.
    fn combine(v: f64, a: f64, x: &Self, b: f64, y: &Self) -> Self {
        let mut out = Self::constant(v);
        let (nx, ny) = (x.len as usize, y.len as usize);
        let (mut i, mut j, mut k) = (0, 0, 0);
        while i < nx || j < ny {
            let (ix, iy) = (
                if i < nx { x.idx[i] } else { u32::MAX },
                if j < ny { y.idx[j] } else { u32::MAX },
            );
            let (id, g) = if ix == iy {
                i += 1;
                j += 1;
                (ix, a * x.grad[i - 1] + b * y.grad[j - 1])
            } else if ix < iy {
                i += 1;
                (ix, a * x.grad[i - 1])
            } else {
                j += 1;
                (iy, b * y.grad[j - 1])
            };
            assert!(k < SPARSE_CAP, "sparse gradient capacity exceeded");
            out.idx[k] = id;
            out.grad[k] = g;
            k += 1;
        }
        out.len = k as u8;
        out
    }

    fn scaled(&self, v: f64, a: f64) -> Self {
        let mut out = *self;
        out.v = v;
        for g in &mut out.grad[..self.len as usize] {
            *g *= a;
        }
        out
    }
}

impl Add for Sparse {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::combine(self.v + o.v, 1.0, &self, 1.0, &o)
    }
}
impl Sub for Sparse {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::combine(self.v - o.v, 1.0, &self, -1.0, &o)
    }
}
impl Mul for Sparse {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::combine(self.v * o.v, o.v, &self, self.v, &o)
    }
}
impl Div for Sparse {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let q = self.v / o.v;
        Self::combine(q, 1.0 / o.v, &self, -q / o.v, &o)
    }
}
impl Neg for Sparse {
    type Output = Self;
    fn neg(self) -> Self {
        self.scaled(-self.v, -1.0)
    }
}
impl Add<f64> for Sparse {
    type Output = Self;
    fn add(self, c: f64) -> Self {
        let mut out = self;
        out.v += c;
        out
    }
}
impl Sub<f64> for Sparse {
    type Output = Self;
    fn sub(self, c: f64) -> Self {
        let mut out = self;
        out.v -= c;
        out
    }
}
impl Mul<f64> for Sparse {
    type Output = Self;
    fn mul(self, c: f64) -> Self {
        self.scaled(self.v * c, c)
    }
}
impl Div<f64> for Sparse {
    type Output = Self;
    fn div(self, c: f64) -> Self {
        self.scaled(self.v / c, 1.0 / c)
    }
}

impl Real for Sparse {
    fn cst(x: f64) -> Self {
        Self::constant(x)
    }
    fn val(self) -> f64 {
        self.v
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.scaled(e, e)
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.scaled(s, 0.5 / s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f<T: Real>(x: T, y: T) -> T {
        (x * y + 3.0).sqrt() / (x - y * 2.0).exp() - x.sq() * 0.5
    }

    #[test]
    fn dual_and_sparse_agree_with_each_other() {
        let (x, y) = (0.7, -0.3);
        let s = f(Sparse::variable(x, 4), Sparse::variable(y, 1));
        let dx = f(Dual::new(x, 1.0), Dual::new(y, 0.0)).d;
        let dy = f(Dual::new(x, 0.0), Dual::new(y, 1.0)).d;
        let g: Vec<(usize, f64)> = s.gradient().collect();
        assert_eq!(g.len(), 2);
        assert_eq!(g[0].0, 1);
        assert!((g[0].1 - dy).abs() < 1e-14);
        assert!((g[1].1 - dx).abs() < 1e-14);
        assert_eq!(s.v, f(x, y));
    }

    #[test]
    fn dual_matches_central_difference() {
        let x = 1.3;
        let d = f(Dual::new(x, 1.0), Dual::cst(0.2)).d;
        let h = 1e-6;
        let fd = (f(x + h, 0.2) - f(x - h, 0.2)) / (2.0 * h);
        assert!((d - fd).abs() < 1e-8);
    }
}
