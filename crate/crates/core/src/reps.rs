//! Irreducible holomorphic representations of `K̃^C` for the ball, the
//! Clebsch–Gordan partial isometries `P: p- ⊗ W^α → W^β` and the maps `ρ̃`.
//!
//! `W^α = Sym^m(C²)` carries the `SU(2)`-invariant inner product, and every
//! matrix here is written in the orthonormal basis `√C(m,k) x^{m−k} y^k`.
//! `p-` carries the restriction of `B_ν`, whose orthonormal basis is
//! `F(ε_β)/√(2p)`.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::sym_power;
use crate::lie::{DomainConstants, KPart};
use crate::linalg::{binomial, c, frob, kron, null_space, CMat, CVec, C64};
use crate::mobius::KFactor;

/// `χ_λ ⊗ Sym^m`, with `δ`-exponent `u = (pλ − m)/n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IrrepLabel {
    pub n: usize,
    pub m: usize,
    pub lambda: f64,
}

impl IrrepLabel {
    pub fn new(n: usize, m: usize, lambda: f64) -> Result<Self> {
        check_support(n, m)?;
        Ok(Self { n, m, lambda })
    }

    pub fn from_u(n: usize, m: usize, u: f64) -> Result<Self> {
        let p = DomainConstants::ball(n).pf();
        Self::new(n, m, (n as f64 * u + m as f64) / p)
    }

    pub fn u(&self) -> f64 {
        let p = DomainConstants::ball(self.n).pf();
        (p * self.lambda - self.m as f64) / self.n as f64
    }

    pub fn dim(&self) -> usize {
        self.m + 1
    }

    /// `ℓ = −pλ/n`, the exponent of the scalar kernel `h^{−ℓ}`.
    pub fn ell(&self) -> f64 {
        -DomainConstants::ball(self.n).pf() * self.lambda / self.n as f64
    }

    pub fn shifted(&self, dl: f64) -> Self {
        Self { lambda: self.lambda + dl, ..*self }
    }
}

fn check_support(n: usize, m: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::UnsupportedDimension("n must be positive".into()));
    }
    if m > 0 && n != 2 {
        return Err(Error::UnsupportedDimension(format!(
            "non-scalar layer Sym^{m} requires n = 2 (got n = {n})"
        )));
    }
    Ok(())
}

/// `Sym^m(A)` in the orthonormal monomial basis.
pub fn sym_rep(m: usize, a: &CMat) -> Result<CMat> {
    let n = a.nrows();
    check_support(n, m)?;
    let flat: Vec<C64> = (0..n * n).map(|i| a[(i / n, i % n)]).collect();
    let s = sym_power(m, &flat, n);
    Ok(CMat::from_row_slice(m + 1, m + 1, &s))
}

/// Derivative of `Sym^m` at the identity, applied to `X` (`n = 2`, or `m = 0`).
pub fn dsym(m: usize, x: &CMat) -> CMat {
    let dim = m + 1;
    let mut d = CMat::zeros(dim, dim);
    if m == 0 {
        return d;
    }
    // x ↦ X11 x + X21 y, y ↦ X12 x + X22 y, extended as a derivation.
    for k in 0..dim {
        let (mk, kf) = ((m - k) as f64, k as f64);
        d[(k, k)] += x[(0, 0)] * mk + x[(1, 1)] * kf;
        if k < m {
            d[(k + 1, k)] += x[(1, 0)] * mk;
        }
        if k > 0 {
            d[(k - 1, k)] += x[(0, 1)] * kf;
        }
    }
    // Conjugate into the orthonormal basis.
    CMat::from_fn(dim, dim, |i, k| d[(i, k)] * (binomial(m, k) / binomial(m, i)).sqrt())
}

/// `(χ_λ ⊗ Sym^m)(k) = exp(−u·log δ) Sym^m(A)`.
pub fn eval_irrep(label: &IrrepLabel, k: &KFactor) -> CMat {
    let s = sym_rep(label.m, &k.a).expect("label support checked at construction");
    s * (-k.log_delta * label.u()).exp()
}

/// Derived representation on `diag(Z_A, z_δ) ∈ k^C`.
pub fn derived_irrep(label: &IrrepLabel, z: &KPart) -> CMat {
    dsym(label.m, &z.a_block) - CMat::identity(label.dim(), label.dim()) * (z.a * label.u())
}

/// Adjoint action of `(A, δ)` on `p-` in column coordinates.
pub fn ad_pminus(a: &CMat, delta: C64) -> CMat {
    a.clone().try_inverse().expect("invertible").transpose() * delta
}

pub fn admissible(n: usize, source_m: usize, target_m: usize) -> bool {
    match n {
        1 => source_m == 0 && target_m == 0,
        2 => source_m.abs_diff(target_m) == 1,
        _ => false,
    }
}

/// Equivariant partial isometry `p- ⊗ W^{source} → W^{target}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CGProjection {
    pub n: usize,
    pub source_m: usize,
    pub target_m: usize,
    /// `(target dim) × (n · source dim)`, `p-` index outer.
    pub p: CMat,
}

impl CGProjection {
    pub fn source_dim(&self) -> usize {
        self.source_m + 1
    }

    pub fn target_dim(&self) -> usize {
        self.target_m + 1
    }

    /// Block `P_β` acting on `ε_β ⊗ W^{source}` (orthonormal `p-` coordinates).
    pub fn block(&self, beta: usize) -> CMat {
        let s = self.source_dim();
        self.p.columns(beta * s, s).into_owned()
    }

    /// Matrix of `v ↦ ρ̃(Y)v` for `Y = F(η)`.
    pub fn rho_matrix(&self, eta: &CVec) -> CMat {
        let scale = (2.0 * DomainConstants::ball(self.n).pf()).sqrt();
        let mut out = CMat::zeros(self.target_dim(), self.source_dim());
        for beta in 0..self.n {
            out += self.block(beta) * (eta[beta] * scale);
        }
        out
    }
}

type CgTable = RwLock<HashMap<(usize, usize, usize), Arc<CGProjection>>>;

fn table() -> &'static CgTable {
    static TABLE: OnceLock<CgTable> = OnceLock::new();
    TABLE.get_or_init(|| RwLock::new(HashMap::new()))
}

pub fn cg_projection(n: usize, source_m: usize, target_m: usize) -> Result<Arc<CGProjection>> {
    if !admissible(n, source_m, target_m) {
        return Err(Error::NotAdmissible { source_m, target_m });
    }
    let key = (n, source_m, target_m);
    if let Some(p) = table().read().expect("cg table lock").get(&key) {
        return Ok(p.clone());
    }
    let built = Arc::new(build_cg(n, source_m, target_m)?);
    table().write().expect("cg table lock").entry(key).or_insert(built.clone());
    Ok(built)
}

/// Fixed elements generating a dense subgroup of `SU(2)`.
fn su2_probes() -> Vec<CMat> {
    let (a, b, t) = (0.7_f64, 1.1_f64, 0.4_f64);
    vec![
        CMat::from_row_slice(2, 2, &[c(a.cos()), C64::new(0.0, a.sin()), C64::new(0.0, a.sin()), c(a.cos())]),
        CMat::from_row_slice(2, 2, &[c(b.cos()), c(-b.sin()), c(b.sin()), c(b.cos())]),
        CMat::from_row_slice(2, 2, &[C64::from_polar(1.0, t), c(0.0), c(0.0), C64::from_polar(1.0, -t)]),
    ]
}

fn build_cg(n: usize, source_m: usize, target_m: usize) -> Result<CGProjection> {
    if n == 1 {
        return Ok(CGProjection { n, source_m, target_m, p: CMat::identity(1, 1) });
    }
    let (s, t) = (source_m + 1, target_m + 1);
    let cols = n * s;
    // P X_k − T_k P = 0, vectorized column-major.
    let mut rows: Vec<CMat> = Vec::new();
    for a in su2_probes() {
        let x = kron(&ad_pminus(&a, c(1.0)), &sym_rep(source_m, &a)?);
        let tk = sym_rep(target_m, &a)?;
        rows.push(kron(&x.transpose(), &CMat::identity(t, t)) - kron(&CMat::identity(cols, cols), &tk));
    }
    let total: usize = rows.iter().map(|r| r.nrows()).sum();
    let mut sys = CMat::zeros(total, t * cols);
    let mut off = 0;
    for r in &rows {
        sys.view_mut((off, 0), (r.nrows(), r.ncols())).copy_from(r);
        off += r.nrows();
    }
    let (ns, _) = null_space(&sys, 1e-10);
    if ns.ncols() != 1 {
        return Err(Error::NotAdmissible { source_m, target_m });
    }
    let mut p = CMat::from_fn(t, cols, |i, j| ns[(j * t + i, 0)]);
    let scale = (&p * p.adjoint())[(0, 0)].re.sqrt();
    p /= c(scale);
    // Phase: the first noticeable entry of the top-weight row is real positive.
    let lead = (0..cols).map(|j| p[(0, j)]).find(|x| x.norm() > 1e-9).unwrap_or(c(1.0));
    p *= lead.conj() / c(lead.norm());
    Ok(CGProjection { n, source_m, target_m, p })
}

/// `P(Y ⊗ v)` with `Y = F(η)`.
pub fn rho_tilde(cg: &CGProjection, eta: &CVec, v: &CVec) -> Result<CVec> {
    if v.len() != cg.source_dim() {
        return Err(Error::DimensionMismatch { expected: cg.source_dim(), got: v.len() });
    }
    if eta.len() != cg.n {
        return Err(Error::DimensionMismatch { expected: cg.n, got: eta.len() });
    }
    Ok(cg.rho_matrix(eta) * v)
}

fn unit(n: usize, i: usize) -> CVec {
    let mut v = CVec::zeros(n);
    v[i] = c(1.0);
    v
}

/// Largest commutator `ρ̃_{bc}(Y′)ρ̃_{ab}(Y) − ρ̃_{bc}(Y)ρ̃_{ab}(Y′)` over basis pairs.
pub fn filiform_defect(n: usize, a: usize, b: usize, cm: usize) -> Result<f64> {
    let first = cg_projection(n, a, b)?;
    let second = cg_projection(n, b, cm)?;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let (y, yp) = (unit(n, i), unit(n, j));
            let lhs = second.rho_matrix(&yp) * first.rho_matrix(&y);
            let rhs = second.rho_matrix(&y) * first.rho_matrix(&yp);
            worst = worst.max(frob(&(lhs - rhs)));
        }
    }
    Ok(worst)
}

pub fn is_filiform_triple(n: usize, a: usize, b: usize, cm: usize) -> Result<bool> {
    Ok(filiform_defect(n, a, b, cm)? < 1e-10)
}
