//! Kernels `Σ h(z,w)^{−s} P(z, w̄)` with matrix polynomial `P`, closed under
//! `∂_z`, `∂_w̄` and `♯`; Gram certificates, named identities and the
//! positivity threshold scan.

use std::collections::BTreeMap;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bundle::{multiplier, BundleSpec};
use crate::error::{Error, Result};
use crate::gamma::{c_constant, gamma, p_iota_d};
use crate::jet::{sym_power, Jet, Multi, Scalar};
use crate::lie::{killing_pairing, DomainConstants};
use crate::linalg::{c, frob, hermitian_eigenvalues, CMat, CVec, C64};
use crate::mobius::{act, kcal};
use crate::poly::{multis_of_degree, DiffOp, MatPoly};
use crate::reps::{cg_projection, IrrepLabel};
use crate::sampling::Sampler;

const PRUNE_TOL: f64 = 1e-14;

fn s_key(s: f64) -> i64 {
    (s * 1e6).round() as i64
}

/// `Σ_s h^{−s} P_s(z, w̄)`; polynomial variables are `z_1..z_n, w̄_1..w̄_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelExpr {
    pub n: usize,
    pub rows: usize,
    pub cols: usize,
    pub terms: BTreeMap<i64, (f64, MatPoly)>,
}

impl KernelExpr {
    pub fn zero(n: usize, rows: usize, cols: usize) -> Self {
        Self { n, rows, cols, terms: BTreeMap::new() }
    }

    pub fn term(n: usize, s: f64, poly: MatPoly) -> Self {
        let mut k = Self::zero(n, poly.rows, poly.cols);
        k.add_term(s, &poly);
        k
    }

    /// Scalar `h^{−s}`.
    pub fn h_power(n: usize, s: f64) -> Self {
        Self::term(n, s, MatPoly::constant(2 * n, CMat::identity(1, 1)))
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn add_term(&mut self, s: f64, poly: &MatPoly) {
        assert_eq!((poly.rows, poly.cols), (self.rows, self.cols), "kernel term shape");
        let entry = self
            .terms
            .entry(s_key(s))
            .or_insert_with(|| (s, MatPoly::zero(2 * self.n, self.rows, self.cols)));
        entry.1.add_assign(poly);
        entry.1.prune(PRUNE_TOL);
        if entry.1.is_zero() {
            self.terms.remove(&s_key(s));
        }
    }

    pub fn add(&self, other: &KernelExpr) -> KernelExpr {
        let mut out = self.clone();
        for (s, p) in other.terms.values() {
            out.add_term(*s, p);
        }
        out
    }

    pub fn sub(&self, other: &KernelExpr) -> KernelExpr {
        self.add(&other.scale(c(-1.0)))
    }

    pub fn scale(&self, a: C64) -> KernelExpr {
        self.map(self.rows, self.cols, |p| p.scale(a))
    }

    fn map(&self, rows: usize, cols: usize, f: impl Fn(&MatPoly) -> MatPoly) -> KernelExpr {
        let mut out = KernelExpr::zero(self.n, rows, cols);
        for (s, p) in self.terms.values() {
            out.add_term(*s, &f(p));
        }
        out
    }

    pub fn left_mul(&self, a: &CMat) -> KernelExpr {
        self.map(a.nrows(), self.cols, |p| p.left_mul(a))
    }

    pub fn right_mul(&self, a: &CMat) -> KernelExpr {
        self.map(self.rows, a.ncols(), |p| p.right_mul(a))
    }

    pub fn mul_scalar_poly(&self, q: &MatPoly) -> KernelExpr {
        self.map(self.rows, self.cols, |p| p.mul_scalar_poly(q))
    }

    /// `A ⊗ K` with a constant matrix on the outer factor.
    pub fn kron_left(&self, a: &CMat) -> KernelExpr {
        let ap = MatPoly::constant(2 * self.n, a.clone());
        self.map(a.nrows() * self.rows, a.ncols() * self.cols, |p| ap.kron(p))
    }

    pub fn embed(&self, rows: usize, cols: usize, r0: usize, c0: usize) -> KernelExpr {
        self.map(rows, cols, |p| p.embed(rows, cols, r0, c0))
    }

    pub fn block(&self, r0: usize, nr: usize, c0: usize, nc: usize) -> KernelExpr {
        self.map(nr, nc, |p| p.block(r0, nr, c0, nc))
    }

    /// `∂` in polynomial variable `var` (`z_i` is `i`, `w̄_i` is `n + i`).
    fn partial_var(&self, var: usize) -> KernelExpr {
        let n = self.n;
        let partner = if var < n { var + n } else { var - n };
        let mult = MatPoly::var(2 * n, partner);
        let mut out = KernelExpr::zero(n, self.rows, self.cols);
        for (s, p) in self.terms.values() {
            if *s != 0.0 {
                out.add_term(s + 1.0, &p.mul_scalar_poly(&mult).scale(c(*s)));
            }
            out.add_term(*s, &p.partial(var));
        }
        out
    }

    pub fn dz(&self, i: usize) -> KernelExpr {
        self.partial_var(i)
    }

    pub fn dwb(&self, i: usize) -> KernelExpr {
        self.partial_var(self.n + i)
    }

    fn multi_derivative(&self, a: &[u32], offset: usize) -> KernelExpr {
        let mut k = self.clone();
        for (i, &ai) in a.iter().enumerate() {
            for _ in 0..ai {
                k = k.partial_var(offset + i);
            }
        }
        k
    }

    /// `K^♯(z,w) = K(w,z)*`.
    pub fn sharp(&self) -> KernelExpr {
        let n = self.n;
        self.map(self.cols, self.rows, |p| {
            let mut q = MatPoly::zero(2 * n, p.cols, p.rows);
            for (e, m) in &p.terms {
                let swapped: Multi = e[n..].iter().chain(&e[..n]).copied().collect();
                q.add_term(swapped, &m.adjoint());
            }
            q
        })
    }

    /// `Σ_a G_a ∂_z^a K`.
    pub fn apply_z(&self, op: &DiffOp) -> KernelExpr {
        let mut out = KernelExpr::zero(self.n, op.rows, self.cols);
        for (a, g) in &op.terms {
            out = out.add(&self.multi_derivative(a, 0).left_mul(g));
        }
        out
    }

    /// `T^{(w)♯} K = Σ_a (∂_w̄^a K) G_a*`.
    pub fn apply_w_sharp(&self, op: &DiffOp) -> KernelExpr {
        let mut out = KernelExpr::zero(self.n, self.rows, op.rows);
        for (a, g) in &op.terms {
            out = out.add(&self.multi_derivative(a, self.n).right_mul(&g.adjoint()));
        }
        out
    }

    /// `ιD^{(z)} (ιD^{(w)})^♯ K`: block `(β,γ)` is `(1/2p) ∂_{z_β} ∂_{w̄_γ} K`.
    pub fn iota_d_pair(&self) -> KernelExpr {
        let n = self.n;
        let inv = c(1.0 / (2.0 * DomainConstants::ball(n).pf()));
        let mut out = KernelExpr::zero(n, n * self.rows, n * self.cols);
        for b in 0..n {
            for g in 0..n {
                let blk = self.dz(b).dwb(g).scale(inv);
                out = out.add(&blk.embed(n * self.rows, n * self.cols, b * self.rows, g * self.cols));
            }
        }
        out
    }

    pub fn eval(&self, z: &CVec, w: &CVec) -> CMat {
        let hz = crate::mobius::h(z, w);
        let lh = hz.ln();
        let x: Vec<C64> = z.iter().copied().chain(w.iter().map(|v| v.conj())).collect();
        let mut out = CMat::zeros(self.rows, self.cols);
        for (s, p) in self.terms.values() {
            out += p.eval(&x) * (-s * lh).exp();
        }
        out
    }

    /// Coefficient of `z^α w̄^β` in the power-series expansion at the origin.
    pub fn coefficient(&self, alpha: &[u32], beta: &[u32]) -> CMat {
        let n = self.n;
        let mut out = CMat::zeros(self.rows, self.cols);
        for (s, p) in self.terms.values() {
            for (e, m) in &p.terms {
                let (a, b) = (&e[..n], &e[n..]);
                let cvec: Vec<i64> = (0..n).map(|i| i64::from(alpha[i]) - i64::from(a[i])).collect();
                if cvec.iter().any(|&x| x < 0) || (0..n).any(|i| i64::from(beta[i]) - i64::from(b[i]) != cvec[i]) {
                    continue;
                }
                let cm: Vec<u32> = cvec.iter().map(|&x| x as u32).collect();
                out += m * c(h_series_coeff(*s, &cm));
            }
        }
        out
    }

    pub fn max_coeff(&self) -> f64 {
        self.terms.values().map(|(_, p)| p.max_coeff()).fold(0.0, f64::max)
    }

    /// Largest `s` present.
    pub fn max_s(&self) -> f64 {
        self.terms.values().map(|(s, _)| *s).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Coefficient of `z^c w̄^c` in `h^{−s}`: `(s)_{|c|} / c!`.
pub fn h_series_coeff(s: f64, cm: &[u32]) -> f64 {
    let k: u32 = cm.iter().sum();
    let mut v = 1.0;
    for i in 0..k {
        v *= (s + f64::from(i)) / f64::from(i + 1);
    }
    // multinomial |c|!/c!
    let mut rest = k;
    for &ci in cm {
        for t in 0..ci {
            v *= f64::from(rest - t) / f64::from(t + 1);
        }
        rest -= ci;
    }
    v
}

/// `(χ_λ ⊗ Sym^m)(𝒦̃(z,w)) = h^{(pλ−m)/n} Sym^m(I − z w*)`.
pub fn k_irred(label: &IrrepLabel) -> Result<KernelExpr> {
    let n = label.n;
    if label.m > 0 && n != 2 {
        return Err(Error::UnsupportedDimension(format!("Sym^{} kernels need n = 2", label.m)));
    }
    let nv = 2 * n;
    let order = 2 * label.m as u32;
    let a: Vec<Jet> = (0..n * n)
        .map(|idx| {
            let (i, k) = (idx / n, idx % n);
            let one = Jet::constant(nv, order, c(if i == k { 1.0 } else { 0.0 }));
            let z = Jet::variable(nv, order, i, c(0.0));
            let wb = Jet::variable(nv, order, n + k, c(0.0));
            one - z * wb
        })
        .collect();
    let s = sym_power(label.m, &a, n);
    let dim = label.dim();
    let mut poly = MatPoly::zero(nv, dim, dim);
    for (idx, jet) in s.iter().enumerate() {
        for (e, v) in &jet.terms {
            let mut m = CMat::zeros(dim, dim);
            m[(idx / dim, idx % dim)] = *v;
            poly.add_term(e.clone(), &m);
        }
    }
    poly.prune(PRUNE_TOL);
    Ok(KernelExpr::term(n, -label.u(), poly))
}

/// `K⁰_μ = ⊕ μ_{jα}⁻¹ ⊗ K^{(α, λ−j)}`.
pub fn k0(spec: &BundleSpec) -> Result<KernelExpr> {
    let dim = spec.dim();
    let mut out = KernelExpr::zero(spec.n, dim, dim);
    for b in spec.blocks() {
        let mu_inv = match spec.mu.get(&(b.j, b.alpha)) {
            Some(mu) => mu.clone().try_inverse().ok_or_else(|| Error::ShapeMismatch("singular mu".into()))?,
            None => CMat::identity(b.mult, b.mult),
        };
        let blk = k_irred(&b.label)?.kron_left(&mu_inv);
        out = out.add(&blk.embed(dim, dim, b.offset, b.offset));
    }
    Ok(out)
}

/// `K^y_μ = Γ^{(z)} Γ^{(w)♯} K⁰_μ`.
pub fn ky(spec: &BundleSpec) -> Result<KernelExpr> {
    let base = k0(spec)?;
    let g = gamma(spec)?;
    if g == DiffOp::identity(spec.n, spec.dim()) {
        return Ok(base);
    }
    Ok(base.apply_w_sharp(&g).apply_z(&g))
}

/// `A(z,w) = ρ̃(Y_{zw}) K^{src}(z,w) ρ̃(Y_{wz})*` with `Y_{zw} = −w̄/h`.
pub fn a_kernel(src: &IrrepLabel, tgt_m: usize) -> Result<KernelExpr> {
    let n = src.n;
    let cg = cg_projection(n, src.m, tgt_m)?;
    let ks = k_irred(src)?;
    let two_p = 2.0 * DomainConstants::ball(n).pf();
    let mut out = KernelExpr::zero(n, cg.target_dim(), cg.target_dim());
    for b in 0..n {
        for g in 0..n {
            let mono = MatPoly::var(2 * n, n + b).mul(&MatPoly::var(2 * n, g)).scale(c(two_p));
            let inner = ks.left_mul(&cg.block(b)).right_mul(&cg.block(g).adjoint()).mul_scalar_poly(&mono);
            for (s, p) in inner.terms.values() {
                out.add_term(s + 2.0, p);
            }
        }
    }
    Ok(out)
}

/// `Ad_{p⁻}(𝒦̃(z,w)) = h⁻¹ I + h⁻² w̄ zᵀ` as a kernel.
pub fn ad_pminus_kernel(n: usize) -> KernelExpr {
    let nv = 2 * n;
    let mut out = KernelExpr::term(n, 1.0, MatPoly::constant(nv, CMat::identity(n, n)));
    let mut outer = MatPoly::zero(nv, n, n);
    for b in 0..n {
        for g in 0..n {
            let mut m = CMat::zeros(n, n);
            m[(b, g)] = c(1.0);
            outer.add_assign(&MatPoly::var(nv, n + b).mul(&MatPoly::var(nv, g)).kron(&MatPoly::constant(nv, m)));
        }
    }
    out.add_term(2.0, &outer);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Positive,
    Indefinite,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GramReport {
    pub min_eig: f64,
    pub max_eig: f64,
    pub verdict: Verdict,
    pub tolerance: f64,
    pub points: Vec<Vec<[f64; 2]>>,
    pub seed: Option<u64>,
    #[serde(skip)]
    pub gram: CMat,
}

impl GramReport {
    pub fn is_positive(&self) -> bool {
        self.verdict == Verdict::Positive
    }
}

pub const GRAM_REL_TOL: f64 = 1e-9;

/// Default sample: `count` seeded points of radius below `0.8`.
pub fn sample_points(n: usize, count: usize, seed: u64) -> Vec<CVec> {
    let mut s = Sampler::new(seed);
    (0..count).map(|_| s.point(n, 0.8)).collect()
}

pub fn verdict_for(min_eig: f64, max_eig: f64) -> Verdict {
    if min_eig >= -GRAM_REL_TOL * (max_eig.abs() + 1.0) {
        Verdict::Positive
    } else {
        Verdict::Indefinite
    }
}

/// Block Gram `[K(z_i, z_j)]`, contracted to `[v_i* K(z_i,z_j) v_j]` when vectors are given.
pub fn gram(k: &KernelExpr, points: &[CVec], vectors: Option<&[CVec]>) -> GramReport {
    let np = points.len();
    let pairs: Vec<(usize, usize)> = (0..np).flat_map(|i| (0..np).map(move |j| (i, j))).collect();
    let blocks: Vec<CMat> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let m = k.eval(&points[i], &points[j]);
            match vectors {
                Some(v) => CMat::from_element(1, 1, (v[i].adjoint() * m * &v[j])[(0, 0)]),
                None => m,
            }
        })
        .collect();
    let (br, bc) = blocks.first().map(|b| b.shape()).unwrap_or((0, 0));
    let mut g = CMat::zeros(np * br, np * bc);
    for (&(i, j), b) in pairs.iter().zip(&blocks) {
        g.view_mut((i * br, j * bc), (br, bc)).copy_from(b);
    }
    let eig = hermitian_eigenvalues(&g);
    let (min_eig, max_eig) = (eig.first().copied().unwrap_or(0.0), eig.last().copied().unwrap_or(0.0));
    GramReport {
        min_eig,
        max_eig,
        verdict: verdict_for(min_eig, max_eig),
        tolerance: GRAM_REL_TOL,
        points: points.iter().map(|p| p.iter().map(|x| [x.re, x.im]).collect()).collect(),
        seed: None,
        gram: g,
    }
}

/// Gram report for `c² K1 − K0`.
pub fn dominance(k0: &KernelExpr, k1: &KernelExpr, cval: f64, points: &[CVec]) -> Result<GramReport> {
    if k0.shape() != k1.shape() {
        return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", k0.shape(), k1.shape())));
    }
    Ok(gram(&k1.scale(c(cval * cval)).sub(k0), points, None))
}

/// `ν_m = ‖z^m‖²` from the diagonal of a scalar kernel's expansion.
pub fn monomial_norms(k: &KernelExpr, max_degree: u32) -> Result<BTreeMap<Multi, f64>> {
    if k.shape() != (1, 1) {
        return Err(Error::ShapeMismatch("monomial norms need a scalar kernel".into()));
    }
    let all: Vec<Multi> = (0..=max_degree).flat_map(|d| multis_of_degree(k.n, d)).collect();
    let mut out = BTreeMap::new();
    for a in &all {
        for b in &all {
            let v = k.coefficient(a, b)[(0, 0)];
            if a != b && v.norm() > 1e-12 {
                return Err(Error::NonDiagonalExpansion(v.norm()));
            }
        }
        out.insert(a.clone(), 1.0 / k.coefficient(a, a)[(0, 0)].re);
    }
    Ok(out)
}

/// The kernel identities checked by [`verify_identity`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Identity {
    AdjointLogKernel,
    LogKernelExpansion,
    PairingIdentity,
    AKernelDecomposition,
    ScalarDominanceGap,
    QuasiInvariance,
}

impl Identity {
    pub const ALL: [Identity; 6] = [
        Identity::AdjointLogKernel,
        Identity::LogKernelExpansion,
        Identity::PairingIdentity,
        Identity::AKernelDecomposition,
        Identity::ScalarDominanceGap,
        Identity::QuasiInvariance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Identity::AdjointLogKernel => "adjoint_log_kernel",
            Identity::LogKernelExpansion => "log_kernel_expansion",
            Identity::PairingIdentity => "pairing_identity",
            Identity::AKernelDecomposition => "a_kernel_decomposition",
            Identity::ScalarDominanceGap => "scalar_dominance_gap",
            Identity::QuasiInvariance => "quasi_invariance",
        }
    }

    pub fn formula(self) -> &'static str {
        match self {
            Identity::AdjointLogKernel => "Ad_{p-}(K~(z,w)) = -2p iD^(z) (iD^(w))^# log h(z,w)",
            Identity::LogKernelExpansion => "-iD (iD)^# log h = h^-2 (iD h)((iD)^# h) - h^-1 iD (iD)^# h",
            Identity::PairingIdentity => "iD^(z) (iD^(w))^# <z,w> = I",
            Identity::AKernelDecomposition => {
                "(P iD^(z))(P iD^(w))^# K_src = |c1|^2 A(z,w) + conj(c1) K_tgt"
            }
            Identity::ScalarDominanceGap => {
                "C h^-l Ad_{p-}(K~) - iD (iD)^# h^-l = (l^2/2p) h^(-l-1) I, C = l(l+1)/2p"
            }
            Identity::QuasiInvariance => "K(gz,gw) = m(g,z) K(z,w) m(g,w)^*",
        }
    }
}

impl FromStr for Identity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Identity::ALL
            .iter()
            .copied()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::UnknownIdentity(s.to_string()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentityReport {
    pub identity: Identity,
    pub formula: String,
    pub residual: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Jets of `h(z,w)` in the `2n` variables `(z, w̄)` around a sample pair.
fn h_jet(z: &CVec, w: &CVec, order: u32) -> Jet {
    let n = z.len();
    let nv = 2 * n;
    let mut h = Jet::constant(nv, order, c(1.0));
    for i in 0..n {
        h = h - Jet::variable(nv, order, i, z[i]) * Jet::variable(nv, order, n + i, w[i].conj());
    }
    h
}

fn mixed(j: &Jet, n: usize, b: usize, g: usize) -> C64 {
    let mut a = vec![0; 2 * n];
    a[b] += 1;
    a[n + g] += 1;
    j.derivative(&a)
}

fn first(j: &Jet, n: usize, var: usize) -> C64 {
    let mut a = vec![0; 2 * n];
    a[var] = 1;
    j.derivative(&a)
}

fn sample_pairs(n: usize, count: usize, seed: u64) -> Vec<(CVec, CVec)> {
    let mut s = Sampler::new(seed);
    (0..count).map(|_| (s.point(n, 0.8), s.point(n, 0.8))).collect()
}

/// Worst residual of `id` over `samples` seeded pairs (or group samples).
pub fn verify_identity(id: Identity, n: usize, samples: usize, seed: u64) -> Result<IdentityReport> {
    let two_p = 2.0 * DomainConstants::ball(n).pf();
    let pairs = sample_pairs(n, samples, seed);
    let residual = match id {
        Identity::AdjointLogKernel => pairs
            .iter()
            .map(|(z, w)| {
                let lhs = kcal(z, w).ad_pminus();
                let lj = h_jet(z, w, 2).ln();
                let rhs = CMat::from_fn(n, n, |b, g| mixed(&lj, n, b, g) * c(-1.0));
                frob(&(lhs - rhs))
            })
            .fold(0.0, f64::max),
        Identity::LogKernelExpansion => pairs
            .iter()
            .map(|(z, w)| {
                let hj = h_jet(z, w, 2);
                let lj = hj.ln();
                let h0 = hj.value();
                let lhs = CMat::from_fn(n, n, |b, g| -mixed(&lj, n, b, g) / two_p);
                let rhs = CMat::from_fn(n, n, |b, g| {
                    first(&hj, n, b) * first(&hj, n, n + g) / (two_p * h0 * h0) - mixed(&hj, n, b, g) / (two_p * h0)
                });
                frob(&(lhs - rhs))
            })
            .fold(0.0, f64::max),
        Identity::PairingIdentity => {
            let d = DomainConstants::ball(n);
            let mut poly = MatPoly::zero(2 * n, 1, 1);
            for i in 0..n {
                let e = CVec::from_fn(n, |k, _| c(if k == i { 1.0 } else { 0.0 }));
                let coeff = killing_pairing(&d, &e, &e);
                poly.add_assign(&MatPoly::var(2 * n, i).mul(&MatPoly::var(2 * n, n + i)).scale(coeff));
            }
            let k = KernelExpr::term(n, 0.0, poly).iota_d_pair();
            let symbolic = k.sub(&KernelExpr::term(n, 0.0, MatPoly::constant(2 * n, CMat::identity(n, n))));
            pairs
                .iter()
                .map(|(z, w)| frob(&(k.eval(z, w) - CMat::identity(n, n))))
                .fold(symbolic.max_coeff(), f64::max)
        }
        Identity::AKernelDecomposition => {
            let cases: Vec<(usize, usize)> = if n == 2 { vec![(0, 1), (1, 2), (1, 0)] } else { vec![(0, 0)] };
            let mut worst: f64 = 0.0;
            for (sm, tm) in cases {
                worst = worst.max(a_kernel_residual(&IrrepLabel::new(n, sm, -3.0)?, tm, &pairs)?);
            }
            worst
        }
        Identity::ScalarDominanceGap => {
            let mut worst: f64 = 0.0;
            for ell in [0.5, 1.0, 3.0] {
                worst = worst.max(dominance_gap(n, ell, ell * (ell + 1.0) / two_p, &pairs)?);
            }
            worst
        }
        Identity::QuasiInvariance => {
            let spec = BundleSpec::disc_chain(1, -3.0, 1.0);
            let spec = if n == 1 { spec } else { BundleSpec::chain(n, -3.0, &[0], &[]) };
            quasi_invariance_residual(&spec, &ky(&spec)?, samples, seed)?
        }
    };
    Ok(IdentityReport { identity: id, formula: id.formula().to_string(), residual, samples, seed })
}

/// `‖(P ιD^{(z)})(P ιD^{(w)})^♯ K_src − |c₁|² A − c̄₁ K_tgt‖` over sample pairs.
pub fn a_kernel_residual(src: &IrrepLabel, tgt_m: usize, pairs: &[(CVec, CVec)]) -> Result<f64> {
    let n = src.n;
    let cg = cg_projection(n, src.m, tgt_m)?;
    let pid = p_iota_d(&cg);
    let lhs = k_irred(src)?.apply_w_sharp(&pid).apply_z(&pid);
    let c1 = c_constant(n, src.m, tgt_m, src.lambda)?;
    let a = a_kernel(src, tgt_m)?;
    let kt = k_irred(&IrrepLabel::new(n, tgt_m, src.lambda - 1.0)?)?;
    let diff = lhs.sub(&a.scale(c(c1 * c1))).sub(&kt.scale(c(c1)));
    Ok(pairs.iter().map(|(z, w)| frob(&diff.eval(z, w))).fold(0.0, f64::max))
}

/// `‖C h^{−ℓ} Ad − ιD(ιD)^♯ h^{−ℓ} − (ℓ²/2p) h^{−ℓ−1} I‖` over sample pairs.
pub fn dominance_gap(n: usize, ell: f64, cval: f64, pairs: &[(CVec, CVec)]) -> Result<f64> {
    let two_p = 2.0 * DomainConstants::ball(n).pf();
    let (k0, k1) = scalar_dominance_pair(n, ell);
    let gap = KernelExpr::term(n, ell + 1.0, MatPoly::constant(2 * n, CMat::identity(n, n) * c(ell * ell / two_p)));
    let diff = k1.scale(c(cval)).sub(&k0).sub(&gap);
    Ok(pairs.iter().map(|(z, w)| frob(&diff.eval(z, w))).fold(0.0, f64::max))
}

/// `(ιD(ιD)^♯ h^{−ℓ}, h^{−ℓ} Ad_{p⁻}(𝒦̃))`.
pub fn scalar_dominance_pair(n: usize, ell: f64) -> (KernelExpr, KernelExpr) {
    let base = KernelExpr::h_power(n, ell);
    let k0 = base.iota_d_pair();
    let mut k1 = KernelExpr::zero(n, n, n);
    for (s, p) in ad_pminus_kernel(n).terms.values() {
        k1.add_term(s + ell, p);
    }
    (k0, k1)
}

/// Worst `‖K(gz,gw) − m(g,z) K(z,w) m(g,w)*‖` over seeded `(g, z, w)`.
pub fn quasi_invariance_residual(spec: &BundleSpec, k: &KernelExpr, samples: usize, seed: u64) -> Result<f64> {
    let mut s = Sampler::new(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let g = s.group(spec.n, 0.5);
        let (z, w) = (s.point(spec.n, 0.6), s.point(spec.n, 0.6));
        let lhs = k.eval(&act(&g, &z)?, &act(&g, &w)?);
        let rhs = multiplier(spec, &g, &z)? * k.eval(&z, &w) * multiplier(spec, &g, &w)?.adjoint();
        worst = worst.max(frob(&(lhs - rhs)));
    }
    Ok(worst)
}

/// Positivity of `K^{(α,λ)}` certified two ways: expansion blocks up to
/// `levels` are positive definite and the pointwise Gram is positive.
pub fn irrep_kernel_positive(label: &IrrepLabel, points: &[CVec], levels: u32) -> Result<bool> {
    let k = k_irred(label)?;
    for d in 0..=levels {
        let ms = multis_of_degree(label.n, d);
        let dim = label.dim();
        let size = ms.len() * dim;
        let mut cmat = CMat::zeros(size, size);
        for (i, a) in ms.iter().enumerate() {
            for (j, b) in ms.iter().enumerate() {
                cmat.view_mut((i * dim, j * dim), (dim, dim)).copy_from(&k.coefficient(a, b));
            }
        }
        let eig = hermitian_eigenvalues(&cmat);
        let top = eig.last().copied().unwrap_or(0.0).abs();
        if eig.first().copied().unwrap_or(0.0) <= 1e-13 * (1.0 + top) {
            return Ok(false);
        }
    }
    Ok(gram(&k, points, None).is_positive())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanReport {
    pub n: usize,
    pub m: usize,
    pub lambda_hat: f64,
    pub bracket: [f64; 2],
    pub iterations: usize,
    pub levels: u32,
}

/// Bisection for the largest `λ` at which `K^{(α,λ)}` is still certified positive.
pub fn threshold_scan(n: usize, m: usize, lo: f64, hi: f64, width: f64, points: &[CVec], levels: u32) -> Result<ScanReport> {
    let positive = |l: f64| irrep_kernel_positive(&IrrepLabel::new(n, m, l)?, points, levels);
    if !positive(lo)? || positive(hi)? {
        return Err(Error::DegenerateTest(format!("positivity does not change sign on [{lo}, {hi}]")));
    }
    let (mut a, mut b, mut it) = (lo, hi, 0);
    while b - a > width {
        let mid = 0.5 * (a + b);
        if positive(mid)? {
            a = mid;
        } else {
            b = mid;
        }
        it += 1;
    }
    Ok(ScanReport { n, m, lambda_hat: 0.5 * (a + b), bracket: [a, b], iterations: it, levels })
}

/// `T^{(z)} T^{(w)♯} K`.
pub fn transport(k: &KernelExpr, op: &DiffOp) -> KernelExpr {
    k.apply_w_sharp(op).apply_z(op)
}

/// `(c² − z_i w̄_i) K`.
pub fn shifted_by_coordinate(k: &KernelExpr, i: usize, cval: f64) -> KernelExpr {
    let n = k.n;
    let mono = MatPoly::var(2 * n, i).mul(&MatPoly::var(2 * n, n + i));
    k.scale(c(cval * cval)).sub(&k.mul_scalar_poly(&mono))
}

/// `I_d ⊗ K` used when a scalar kernel is lifted to a multiplicity space.
pub fn lift(k: &KernelExpr, d: usize) -> KernelExpr {
    k.kron_left(&CMat::identity(d, d))
}
