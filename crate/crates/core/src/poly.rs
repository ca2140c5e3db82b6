//! Matrix-valued multivariate polynomials and constant-coefficient matrix
//! differential operators.

use std::collections::BTreeMap;

use crate::jet::Multi;
use crate::linalg::{c, frob, kron, CMat, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct MatPoly {
    pub nvars: usize,
    pub rows: usize,
    pub cols: usize,
    pub terms: BTreeMap<Multi, CMat>,
}

fn add_multi(a: &[u32], b: &[u32]) -> Multi {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn total_degree(m: &[u32]) -> u32 {
    m.iter().sum()
}

/// Every multi-index in `nvars` variables of total degree exactly `d`, in a fixed order.
pub fn multis_of_degree(nvars: usize, d: u32) -> Vec<Multi> {
    if nvars == 0 {
        return if d == 0 { vec![vec![]] } else { vec![] };
    }
    if nvars == 1 {
        return vec![vec![d]];
    }
    let mut out = Vec::new();
    for first in (0..=d).rev() {
        for mut rest in multis_of_degree(nvars - 1, d - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// `m!` for a multi-index.
pub fn multi_factorial(m: &[u32]) -> f64 {
    m.iter().map(|&k| (1..=k).map(f64::from).product::<f64>()).product()
}

impl MatPoly {
    pub fn zero(nvars: usize, rows: usize, cols: usize) -> Self {
        Self { nvars, rows, cols, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, m: CMat) -> Self {
        Self::monomial(vec![0; nvars], m)
    }

    pub fn monomial(exp: Multi, m: CMat) -> Self {
        let (rows, cols) = m.shape();
        let mut terms = BTreeMap::new();
        terms.insert(exp.clone(), m);
        Self { nvars: exp.len(), rows, cols, terms }
    }

    /// Scalar variable `x_i` as a `1×1` polynomial.
    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self::monomial(e, CMat::identity(1, 1))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| total_degree(m)).max().unwrap_or(0)
    }

    pub fn add_term(&mut self, exp: Multi, m: &CMat) {
        debug_assert_eq!(m.shape(), (self.rows, self.cols));
        match self.terms.get_mut(&exp) {
            Some(v) => *v += m,
            None => {
                self.terms.insert(exp, m.clone());
            }
        }
    }

    pub fn add_assign(&mut self, other: &MatPoly) {
        for (e, m) in &other.terms {
            self.add_term(e.clone(), m);
        }
    }

    pub fn add(&self, other: &MatPoly) -> MatPoly {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn sub(&self, other: &MatPoly) -> MatPoly {
        self.add(&other.scale(c(-1.0)))
    }

    pub fn scale(&self, s: C64) -> MatPoly {
        let mut out = self.clone();
        out.terms.values_mut().for_each(|m| *m *= s);
        out
    }

    pub fn mul(&self, other: &MatPoly) -> MatPoly {
        assert_eq!(self.cols, other.rows, "polynomial matrix product shape");
        let mut out = MatPoly::zero(self.nvars, self.rows, other.cols);
        for (ea, ma) in &self.terms {
            for (eb, mb) in &other.terms {
                out.add_term(add_multi(ea, eb), &(ma * mb));
            }
        }
        out
    }

    /// Multiply by a scalar (`1×1`) polynomial.
    pub fn mul_scalar_poly(&self, s: &MatPoly) -> MatPoly {
        assert_eq!((s.rows, s.cols), (1, 1));
        let mut out = MatPoly::zero(self.nvars, self.rows, self.cols);
        for (ea, ma) in &self.terms {
            for (eb, mb) in &s.terms {
                out.add_term(add_multi(ea, eb), &(ma * mb[(0, 0)]));
            }
        }
        out
    }

    pub fn left_mul(&self, a: &CMat) -> MatPoly {
        let mut out = MatPoly::zero(self.nvars, a.nrows(), self.cols);
        for (e, m) in &self.terms {
            out.terms.insert(e.clone(), a * m);
        }
        out
    }

    pub fn right_mul(&self, a: &CMat) -> MatPoly {
        let mut out = MatPoly::zero(self.nvars, self.rows, a.ncols());
        for (e, m) in &self.terms {
            out.terms.insert(e.clone(), m * a);
        }
        out
    }

    pub fn kron(&self, other: &MatPoly) -> MatPoly {
        let mut out = MatPoly::zero(self.nvars, self.rows * other.rows, self.cols * other.cols);
        for (ea, ma) in &self.terms {
            for (eb, mb) in &other.terms {
                out.add_term(add_multi(ea, eb), &kron(ma, mb));
            }
        }
        out
    }

    /// `∂^a` applied termwise.
    pub fn derivative(&self, a: &[u32]) -> MatPoly {
        let mut out = MatPoly::zero(self.nvars, self.rows, self.cols);
        for (e, m) in &self.terms {
            if e.iter().zip(a).any(|(x, y)| x < y) {
                continue;
            }
            let mut f = 1.0;
            let mut ne = e.clone();
            for (k, (&x, &y)) in e.iter().zip(a).enumerate() {
                for t in 0..y {
                    f *= f64::from(x - t);
                }
                ne[k] = x - y;
            }
            out.add_term(ne, &(m * c(f)));
        }
        out
    }

    pub fn partial(&self, var: usize) -> MatPoly {
        let mut a = vec![0; self.nvars];
        a[var] = 1;
        self.derivative(&a)
    }

    pub fn eval(&self, x: &[C64]) -> CMat {
        let mut out = CMat::zeros(self.rows, self.cols);
        for (e, m) in &self.terms {
            let mut mono = c(1.0);
            for (xi, &k) in x.iter().zip(e) {
                mono *= xi.powu(k);
            }
            out += m * mono;
        }
        out
    }

    pub fn truncate(&self, max_degree: u32) -> MatPoly {
        let mut out = self.clone();
        out.terms.retain(|e, _| total_degree(e) <= max_degree);
        out
    }

    /// Drop coefficients whose Frobenius norm is at most `tol`.
    pub fn prune(&mut self, tol: f64) {
        self.terms.retain(|_, m| frob(m) > tol);
    }

    /// Place `self` at block offset `(r0, c0)` inside a `rows×cols` zero polynomial.
    pub fn embed(&self, rows: usize, cols: usize, r0: usize, c0: usize) -> MatPoly {
        let mut out = MatPoly::zero(self.nvars, rows, cols);
        for (e, m) in &self.terms {
            let mut big = CMat::zeros(rows, cols);
            big.view_mut((r0, c0), m.shape()).copy_from(m);
            out.terms.insert(e.clone(), big);
        }
        out
    }

    /// Rows `r0..r0+nr` and columns `c0..c0+nc`.
    pub fn block(&self, r0: usize, nr: usize, c0: usize, nc: usize) -> MatPoly {
        let mut out = MatPoly::zero(self.nvars, nr, nc);
        for (e, m) in &self.terms {
            let b = m.view((r0, c0), (nr, nc)).into_owned();
            if b.iter().any(|x| *x != c(0.0)) {
                out.terms.insert(e.clone(), b);
            }
        }
        out
    }

    /// Largest coefficient norm, for residual checks.
    pub fn max_coeff(&self) -> f64 {
        self.terms.values().map(frob).fold(0.0, f64::max)
    }
}

/// `Σ_a G_a ∂^a` with constant matrix coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffOp {
    pub nvars: usize,
    pub rows: usize,
    pub cols: usize,
    pub terms: BTreeMap<Multi, CMat>,
}

impl DiffOp {
    pub fn zero(nvars: usize, rows: usize, cols: usize) -> Self {
        Self { nvars, rows, cols, terms: BTreeMap::new() }
    }

    pub fn identity(nvars: usize, dim: usize) -> Self {
        let mut d = Self::zero(nvars, dim, dim);
        d.terms.insert(vec![0; nvars], CMat::identity(dim, dim));
        d
    }

    pub fn add_term(&mut self, a: Multi, m: &CMat) {
        match self.terms.get_mut(&a) {
            Some(v) => *v += m,
            None => {
                self.terms.insert(a, m.clone());
            }
        }
    }

    pub fn add_assign(&mut self, other: &DiffOp) {
        for (a, m) in &other.terms {
            self.add_term(a.clone(), m);
        }
    }

    pub fn scale(&self, s: C64) -> DiffOp {
        let mut out = self.clone();
        out.terms.values_mut().for_each(|m| *m *= s);
        out
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &DiffOp) -> DiffOp {
        assert_eq!(self.cols, other.rows, "operator composition shape");
        let mut out = DiffOp::zero(self.nvars, self.rows, other.cols);
        for (a, ma) in &self.terms {
            for (b, mb) in &other.terms {
                out.add_term(add_multi(a, b), &(ma * mb));
            }
        }
        out
    }

    /// `Y ⊗ self` with a constant matrix on the outer factor.
    pub fn kron_left(&self, y: &CMat) -> DiffOp {
        let mut out = DiffOp::zero(self.nvars, y.nrows() * self.rows, y.ncols() * self.cols);
        for (a, m) in &self.terms {
            out.terms.insert(a.clone(), kron(y, m));
        }
        out
    }

    pub fn embed(&self, rows: usize, cols: usize, r0: usize, c0: usize) -> DiffOp {
        let mut out = DiffOp::zero(self.nvars, rows, cols);
        for (a, m) in &self.terms {
            let mut big = CMat::zeros(rows, cols);
            big.view_mut((r0, c0), m.shape()).copy_from(m);
            out.terms.insert(a.clone(), big);
        }
        out
    }

    pub fn order(&self) -> u32 {
        self.terms.keys().map(|a| total_degree(a)).max().unwrap_or(0)
    }

    /// Apply to a polynomial whose rows are the operator's input index.
    pub fn apply(&self, f: &MatPoly) -> MatPoly {
        assert_eq!(self.cols, f.rows, "operator/section shape");
        let mut out = MatPoly::zero(f.nvars, self.rows, f.cols);
        for (a, g) in &self.terms {
            let d = f.derivative(a);
            for (e, m) in &d.terms {
                out.add_term(e.clone(), &(g * m));
            }
        }
        out
    }
}
