//! Truncated Taylor polynomials: `v(x0 + d) = sum_m c_m d^m`, kept to order `M`.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct PolyValue {
    c: Vec<f64>,
}

impl PolyValue {
    /// The constant `v` at truncation order `order`.
    pub fn constant(v: f64, order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        c[0] = v;
        PolyValue { c }
    }

    /// `v + d`: the independent variable shifted to `v`.
    pub fn variable(v: f64, order: usize) -> Self {
        Self::affine(v, 1.0, order)
    }

    /// `v + slope * d`.
    pub fn affine(v: f64, slope: f64, order: usize) -> Self {
        let mut p = Self::constant(v, order);
        if order >= 1 {
            p.c[1] = slope;
        }
        p
    }

    pub fn from_coeffs(c: Vec<f64>) -> Result<Self> {
        if c.is_empty() {
            return Err(Error::invalid("a polynomial needs at least one coefficient"));
        }
        Ok(PolyValue { c })
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    /// `d^m v / dx^m = m! c_m`.
    pub fn derivative(&self, m: usize) -> f64 {
        self.c.get(m).map_or(0.0, |v| v * factorial(m))
    }

    pub fn scale(&self, s: f64) -> Self {
        PolyValue { c: self.c.iter().map(|v| v * s).collect() }
    }

    /// Truncated reciprocal; requires a nonzero constant term.
    pub fn recip(&self) -> Result<Self> {
        let a0 = self.c[0];
        if a0 == 0.0 {
            return Err(Error::numerical("reciprocal of a polynomial with zero constant term"));
        }
        let n = self.c.len();
        let mut r = vec![0.0; n];
        r[0] = 1.0 / a0;
        for m in 1..n {
            let s: f64 = (1..=m).map(|k| self.c[k] * r[m - k]).sum();
            r[m] = -s / a0;
        }
        Ok(PolyValue { c: r })
    }

    fn check_order(&self, other: &Self) {
        assert_eq!(self.c.len(), other.c.len(), "polynomial truncation orders differ");
    }
}

pub fn factorial(m: usize) -> f64 {
    (1..=m).map(|k| k as f64).product()
}

/// `m choose q` as a float.
pub fn binomial(m: usize, q: usize) -> f64 {
    factorial(m) / (factorial(q) * factorial(m - q))
}

impl Add for &PolyValue {
    type Output = PolyValue;
    fn add(self, o: &PolyValue) -> PolyValue {
        self.check_order(o);
        PolyValue { c: self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &PolyValue {
    type Output = PolyValue;
    fn sub(self, o: &PolyValue) -> PolyValue {
        self.check_order(o);
        PolyValue { c: self.c.iter().zip(&o.c).map(|(a, b)| a - b).collect() }
    }
}

impl Mul for &PolyValue {
    type Output = PolyValue;
    fn mul(self, o: &PolyValue) -> PolyValue {
        self.check_order(o);
        let n = self.c.len();
        let mut c = vec![0.0; n];
        for (i, a) in self.c.iter().enumerate() {
            for (j, b) in o.c[..n - i].iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        PolyValue { c }
    }
}

impl Neg for &PolyValue {
    type Output = PolyValue;
    fn neg(self) -> PolyValue {
        self.scale(-1.0)
    }
}
