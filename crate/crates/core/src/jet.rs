//! Truncated multivariate Taylor series ("jets") and a small scalar
//! abstraction so the same formulas run on numbers and on jets.
//!
//! A jet of order `k` in `v` variables carries every Taylor coefficient of
//! total degree `≤ k`; products drop higher terms. Derivatives read off a jet
//! are exact up to rounding, which makes jets the derivative oracle for the
//! holomorphic identities checked elsewhere.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use crate::linalg::{binomial, C64};

pub trait Scalar:
    Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    /// A constant with the same shape as `self`.
    fn lift(&self, c: C64) -> Self;
    fn scale(&self, c: C64) -> Self;
    /// Constant term.
    fn value(&self) -> C64;
    fn recip(&self) -> Self;
    fn exp(&self) -> Self;
    /// Principal logarithm at the constant term, continued analytically.
    fn ln(&self) -> Self;
}

impl Scalar for C64 {
    fn lift(&self, c: C64) -> Self {
        c
    }
    fn scale(&self, c: C64) -> Self {
        self * c
    }
    fn value(&self) -> C64 {
        *self
    }
    fn recip(&self) -> Self {
        C64::new(1.0, 0.0) / self
    }
    fn exp(&self) -> Self {
        C64::exp(*self)
    }
    fn ln(&self) -> Self {
        C64::ln(*self)
    }
}

pub type Multi = Vec<u32>;

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub nvars: usize,
    pub order: u32,
    pub terms: BTreeMap<Multi, C64>,
}

fn degree(m: &Multi) -> u32 {
    m.iter().sum()
}

impl Jet {
    pub fn constant(nvars: usize, order: u32, c: C64) -> Self {
        let mut terms = BTreeMap::new();
        if c != C64::new(0.0, 0.0) {
            terms.insert(vec![0; nvars], c);
        }
        Self { nvars, order, terms }
    }

    /// `c + t_i`.
    pub fn variable(nvars: usize, order: u32, i: usize, c: C64) -> Self {
        let mut j = Self::constant(nvars, order, c);
        if order >= 1 {
            let mut m = vec![0; nvars];
            m[i] = 1;
            j.terms.insert(m, C64::new(1.0, 0.0));
        }
        j
    }

    pub fn coeff(&self, m: &[u32]) -> C64 {
        self.terms.get(m).copied().unwrap_or_default()
    }

    /// `∂^m f(0)` = `m! · coeff_m`.
    pub fn derivative(&self, m: &[u32]) -> C64 {
        let f: f64 = m.iter().map(|&k| (1..=k).product::<u32>() as f64).product();
        self.coeff(m) * f
    }

    fn without_constant(&self) -> Self {
        let mut e = self.clone();
        e.terms.remove(&vec![0; self.nvars]);
        e
    }

    fn series(&self, coeffs: impl Fn(usize) -> C64) -> Self {
        // Σ_k coeffs(k) ε^k with ε = self − a0 nilpotent of index order+1.
        let eps = self.without_constant();
        let mut acc = Self::constant(self.nvars, self.order, coeffs(0));
        let mut pow = Self::constant(self.nvars, self.order, C64::new(1.0, 0.0));
        for k in 1..=self.order as usize {
            pow = pow * eps.clone();
            acc = acc + pow.scale(coeffs(k));
        }
        acc
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, rhs: Jet) -> Jet {
        for (m, v) in rhs.terms {
            *self.terms.entry(m).or_default() += v;
        }
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        self + (-rhs)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        self.terms.values_mut().for_each(|v| *v = -*v);
        self
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let order = self.order.min(rhs.order);
        let mut out = BTreeMap::new();
        for (ma, va) in &self.terms {
            let da = degree(ma);
            for (mb, vb) in &rhs.terms {
                if da + degree(mb) > order {
                    continue;
                }
                let m: Multi = ma.iter().zip(mb).map(|(a, b)| a + b).collect();
                *out.entry(m).or_insert(C64::new(0.0, 0.0)) += va * vb;
            }
        }
        Jet { nvars: self.nvars, order, terms: out }
    }
}

impl Scalar for Jet {
    fn lift(&self, c: C64) -> Self {
        Jet::constant(self.nvars, self.order, c)
    }
    fn scale(&self, c: C64) -> Self {
        let mut j = self.clone();
        j.terms.values_mut().for_each(|v| *v *= c);
        j
    }
    fn value(&self) -> C64 {
        self.coeff(&vec![0; self.nvars])
    }
    fn recip(&self) -> Self {
        let a0 = self.value();
        let inv = C64::new(1.0, 0.0) / a0;
        self.series(|k| inv * (-inv).powu(k as u32))
    }
    fn exp(&self) -> Self {
        let a0 = self.value();
        let e = a0.exp();
        let mut fact = 1.0;
        let coeffs: Vec<C64> = (0..=self.order as usize)
            .map(|k| {
                if k > 0 {
                    fact *= k as f64;
                }
                e / fact
            })
            .collect();
        self.series(|k| coeffs[k])
    }
    fn ln(&self) -> Self {
        let a0 = self.value();
        let inv = C64::new(1.0, 0.0) / a0;
        self.series(|k| {
            if k == 0 {
                a0.ln()
            } else {
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                inv.powu(k as u32) * (sign / k as f64)
            }
        })
    }
}

/// Row-major product of `r×k` and `k×c` matrices over any scalar.
pub fn mat_mul<T: Scalar>(a: &[T], b: &[T], r: usize, k: usize, cc: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(r * cc);
    for i in 0..r {
        for j in 0..cc {
            let mut acc = a[i * k].clone() * b[j].clone();
            for l in 1..k {
                acc = acc + a[i * k + l].clone() * b[l * cc + j].clone();
            }
            out.push(acc);
        }
    }
    out
}

/// Gauss–Jordan inverse of a row-major `n×n` matrix, pivoting on constant terms.
pub fn mat_inv<T: Scalar>(a: &[T], n: usize) -> Vec<T> {
    let mut m: Vec<T> = a.to_vec();
    let one = a[0].lift(C64::new(1.0, 0.0));
    let zero = a[0].lift(C64::new(0.0, 0.0));
    let mut inv: Vec<T> = (0..n * n)
        .map(|i| if i / n == i % n { one.clone() } else { zero.clone() })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| {
                m[x * n + col].value().norm().partial_cmp(&m[y * n + col].value().norm()).unwrap()
            })
            .unwrap();
        if piv != col {
            for j in 0..n {
                m.swap(col * n + j, piv * n + j);
                inv.swap(col * n + j, piv * n + j);
            }
        }
        let p = m[col * n + col].recip();
        for j in 0..n {
            m[col * n + j] = m[col * n + j].clone() * p.clone();
            inv[col * n + j] = inv[col * n + j].clone() * p.clone();
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = m[row * n + col].clone();
            for j in 0..n {
                m[row * n + j] = m[row * n + j].clone() - f.clone() * m[col * n + j].clone();
                inv[row * n + j] = inv[row * n + j].clone() - f.clone() * inv[col * n + j].clone();
            }
        }
    }
    inv
}

/// `m`-th symmetric power of a `2×2` matrix (row-major), in the orthonormal
/// basis `√C(m,k) x^{m−k} y^k` of binary forms. For `n = 1` only `m = 0`
/// exists and the result is `[1]`.
pub fn sym_power<T: Scalar>(m: usize, a: &[T], n: usize) -> Vec<T> {
    let one = a[0].lift(C64::new(1.0, 0.0));
    let zero = a[0].lift(C64::new(0.0, 0.0));
    if m == 0 {
        return vec![one];
    }
    assert_eq!(n, 2, "symmetric powers beyond degree 0 need n = 2");
    // Images of x and y: A e1 = A11 x + A21 y, A e2 = A12 x + A22 y.
    let ex = [a[0].clone(), a[2].clone()];
    let ey = [a[1].clone(), a[3].clone()];
    let poly_mul = |p: &[T], q: &[T]| -> Vec<T> {
        let mut out = vec![zero.clone(); p.len() + q.len() - 1];
        for (i, pi) in p.iter().enumerate() {
            for (j, qj) in q.iter().enumerate() {
                out[i + j] = out[i + j].clone() + pi.clone() * qj.clone();
            }
        }
        out
    };
    let dim = m + 1;
    let mut s = vec![zero.clone(); dim * dim];
    for k in 0..dim {
        let mut img = vec![one.clone()];
        for _ in 0..(m - k) {
            img = poly_mul(&img, &ex);
        }
        for _ in 0..k {
            img = poly_mul(&img, &ey);
        }
        for (i, v) in img.into_iter().enumerate() {
            let w = (binomial(m, k) / binomial(m, i)).sqrt();
            s[i * dim + k] = v.scale(C64::new(w, 0.0));
        }
    }
    s
}
