//! Truncated Hilbert-space models of the multiplication tuple `(M_1, …, M_n)`.
//!
//! The space induced by a kernel `K(z,w) = Σ z^a C_{ab} w̄^b` is graded by
//! level `|a| + j`, where `j` is the layer of the component. Distinct levels
//! are orthogonal, so every quantity is computed level by level: the
//! coefficient block `C_L` is inverted exactly to give the Gram `G_L`.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::bundle::{act, act_fn, BundleSpec, PolySection};
use crate::error::{Error, Result};
use crate::gamma::p_iota_d;
use crate::jet::Multi;
use crate::kernel::{k0, k_irred, ky, KernelExpr};
use crate::linalg::{c, generalized_eigenvalues, hermitian_eigenvalues, CMat, CVec, C64};
use crate::mobius::{act as mobius_act, GroupElement};
use crate::poly::{multis_of_degree, DiffOp, MatPoly};
use crate::reps::{cg_projection, IrrepLabel};
use crate::sampling::Sampler;

/// A monomial times a unit vector of `V`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BasisElem {
    pub exp: Multi,
    pub comp: usize,
}

#[derive(Debug, Clone)]
pub struct LevelBlock {
    pub level: usize,
    pub basis: Vec<BasisElem>,
    index: HashMap<BasisElem, usize>,
    /// Kernel coefficients `C_L`.
    pub coeff: CMat,
    /// `G_L = C_L⁻¹`.
    pub gram: CMat,
}

impl LevelBlock {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn position(&self, e: &BasisElem) -> Option<usize> {
        self.index.get(e).copied()
    }

    /// `‖x‖²` for a coordinate vector at this level.
    pub fn norm_sq(&self, x: &CVec) -> f64 {
        (x.adjoint() * &self.gram * x)[(0, 0)].re
    }
}

#[derive(Debug, Clone)]
pub struct TruncatedSpace {
    pub n: usize,
    pub dim_v: usize,
    /// Layer index of each component of `V`.
    pub layer_of: Vec<usize>,
    pub max_level: usize,
    pub levels: Vec<LevelBlock>,
}

/// Layer of every component of `V`.
pub fn component_layers(spec: &BundleSpec) -> Vec<usize> {
    spec.blocks().iter().flat_map(|b| std::iter::repeat_n(b.j, b.size())).collect()
}

fn level_basis(n: usize, layer_of: &[usize], level: usize) -> Vec<BasisElem> {
    let mut out = Vec::new();
    for (comp, &j) in layer_of.iter().enumerate() {
        if j > level {
            continue;
        }
        for exp in multis_of_degree(n, (level - j) as u32) {
            out.push(BasisElem { exp, comp });
        }
    }
    out
}

fn coefficient_block(k: &KernelExpr, basis: &[BasisElem]) -> CMat {
    let mut monos: Vec<&Multi> = basis.iter().map(|b| &b.exp).collect();
    monos.sort();
    monos.dedup();
    let mut cache: HashMap<(&Multi, &Multi), CMat> = HashMap::new();
    for a in &monos {
        for b in &monos {
            cache.insert((a, b), k.coefficient(a, b));
        }
    }
    let d = basis.len();
    CMat::from_fn(d, d, |r, s| cache[&(&basis[r].exp, &basis[s].exp)][(basis[r].comp, basis[s].comp)])
}

/// Build the truncated space of levels `0..=max_level` from a kernel on a bundle
/// whose components are graded by `layer_of`.
pub fn build_graded(n: usize, layer_of: Vec<usize>, k: &KernelExpr, max_level: usize) -> Result<TruncatedSpace> {
    let dim_v = layer_of.len();
    if k.shape() != (dim_v, dim_v) {
        return Err(Error::DimensionMismatch { expected: dim_v, got: k.shape().0 });
    }
    let levels = (0..=max_level)
        .into_par_iter()
        .map(|level| {
            let basis = level_basis(n, &layer_of, level);
            let coeff = coefficient_block(k, &basis);
            let coeff = (&coeff + coeff.adjoint()) * c(0.5);
            let ev = hermitian_eigenvalues(&coeff);
            let (lo, hi) = (ev.first().copied().unwrap_or(1.0), ev.last().copied().unwrap_or(1.0));
            if lo <= 1e-13 * hi.abs().max(1e-300) {
                return Err(Error::IndefiniteGram { eigenvalue: lo, level });
            }
            let gram = coeff.clone().cholesky().expect("positive definite block").inverse();
            let gram = (&gram + gram.adjoint()) * c(0.5);
            let index = basis.iter().cloned().enumerate().map(|(i, b)| (b, i)).collect();
            Ok(LevelBlock { level, basis, index, coeff, gram })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TruncatedSpace { n, dim_v, layer_of, max_level, levels })
}

/// Truncated space of the bundle's kernel `k` through level `max_level`.
pub fn build_space(spec: &BundleSpec, k: &KernelExpr, max_level: usize) -> Result<TruncatedSpace> {
    build_graded(spec.n, component_layers(spec), k, max_level)
}

impl TruncatedSpace {
    pub fn level(&self, l: usize) -> &LevelBlock {
        &self.levels[l]
    }

    /// Coordinates of a `dim V × 1` polynomial at level `l`; terms off the level are ignored.
    pub fn coords(&self, f: &MatPoly, l: usize) -> CVec {
        let blk = &self.levels[l];
        let mut x = CVec::zeros(blk.dim());
        for (e, m) in &f.terms {
            for comp in 0..self.dim_v {
                if let Some(p) = blk.position(&BasisElem { exp: e.clone(), comp }) {
                    x[p] += m[(comp, 0)];
                }
            }
        }
        x
    }

    /// Basis element as a polynomial section.
    pub fn basis_poly(&self, e: &BasisElem) -> MatPoly {
        let mut m = CMat::zeros(self.dim_v, 1);
        m[(e.comp, 0)] = c(1.0);
        MatPoly::monomial(e.exp.clone(), m)
    }

    /// Largest modulus of a kernel coefficient pairing two basis elements of different levels.
    pub fn level_leakage(&self, k: &KernelExpr) -> f64 {
        let all: Vec<(usize, &BasisElem)> =
            self.levels.iter().flat_map(|b| b.basis.iter().map(move |e| (b.level, e))).collect();
        let mut worst: f64 = 0.0;
        for (la, a) in &all {
            for (lb, b) in &all {
                if la != lb {
                    worst = worst.max(k.coefficient(&a.exp, &b.exp)[(a.comp, b.comp)].norm());
                }
            }
        }
        worst
    }
}

/// Matrix of a linear map on polynomial sections, level `l` of `src` into `target_level` of `tgt`.
fn level_matrix(
    src: &TruncatedSpace,
    tgt: &TruncatedSpace,
    l: usize,
    target_level: usize,
    map: &(dyn Fn(&MatPoly) -> MatPoly + Sync),
) -> CMat {
    let sb = &src.levels[l];
    let mut out = CMat::zeros(tgt.levels[target_level].dim(), sb.dim());
    for (col, e) in sb.basis.iter().enumerate() {
        let img = map(&src.basis_poly(e));
        out.set_column(col, &tgt.coords(&img, target_level));
    }
    out
}

/// Multiplication by `z_i` (0-based), level by level: `per_level[L]` maps level `L` into `L+1`.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub i: usize,
    pub per_level: Vec<CMat>,
}

fn times_coordinate(f: &MatPoly, i: usize) -> MatPoly {
    let mut out = MatPoly::zero(f.nvars, f.rows, f.cols);
    for (e, m) in &f.terms {
        let mut e = e.clone();
        e[i] += 1;
        out.add_term(e, m);
    }
    out
}

pub fn mult_op(space: &TruncatedSpace, i: usize) -> OperatorMatrix {
    let per_level = (0..space.max_level)
        .into_par_iter()
        .map(|l| level_matrix(space, space, l, l + 1, &|f| times_coordinate(f, i)))
        .collect();
    OperatorMatrix { i, per_level }
}

impl OperatorMatrix {
    /// Gram adjoint `G_L⁻¹ Mᴴ G_{L+1}` from level `L+1` back to level `L`.
    pub fn adjoint_block(&self, space: &TruncatedSpace, l: usize) -> CMat {
        &space.levels[l].coeff * self.per_level[l].adjoint() * &space.levels[l + 1].gram
    }

    /// Norm of the block at level `L`.
    pub fn level_norm(&self, space: &TruncatedSpace, l: usize) -> f64 {
        let m = &self.per_level[l];
        block_norm(m, &space.levels[l].gram, &space.levels[l + 1].gram)
    }
}

/// `sup ‖Mx‖_t / ‖x‖_s` from the largest generalized eigenvalue of `(Mᴴ G_t M, G_s)`.
fn block_norm(m: &CMat, gs: &CMat, gt: &CMat) -> f64 {
    if m.ncols() == 0 {
        return 0.0;
    }
    let a = m.adjoint() * gt * m;
    let ev = generalized_eigenvalues(&a, gs).expect("Gram blocks are positive definite");
    ev.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// Running norm of `M_i` on levels `≤ d`, one value per `d = 0..max_level−1`.
#[derive(Debug, Clone, Serialize)]
pub struct NormSequence {
    pub i: usize,
    pub norm: f64,
    pub sequence: Vec<f64>,
}

/// Norm of `M_i : H_N → H_{N+1}` with `N = space.max_level − 1`.
pub fn op_norm_estimate(space: &TruncatedSpace, i: usize) -> NormSequence {
    let m = mult_op(space, i);
    let per: Vec<f64> = (0..space.max_level).into_par_iter().map(|l| m.level_norm(space, l)).collect();
    let sequence: Vec<f64> = per
        .iter()
        .scan(0.0_f64, |acc, &v| {
            *acc = acc.max(v);
            Some(*acc)
        })
        .collect();
    NormSequence { i, norm: sequence.last().copied().unwrap_or(0.0), sequence }
}

/// Largest `|⟨M_i f, g⟩ − ⟨f, M_i^* g⟩|` over random level-homogeneous pairs, relative to `‖f‖‖g‖`.
pub fn adjoint_consistency(space: &TruncatedSpace, i: usize, seed: u64) -> f64 {
    let m = mult_op(space, i);
    let mut s = Sampler::new(seed);
    let mut worst: f64 = 0.0;
    for l in 0..space.max_level {
        let (sl, tl) = (&space.levels[l], &space.levels[l + 1]);
        let f = s.vector(sl.dim());
        let g = s.vector(tl.dim());
        let lhs = (g.adjoint() * &tl.gram * &m.per_level[l] * &f)[(0, 0)];
        let mg = m.adjoint_block(space, l) * &g;
        let rhs = (mg.adjoint() * &sl.gram * &f)[(0, 0)];
        let scale = (sl.norm_sq(&f) * tl.norm_sq(&g)).sqrt().max(1e-300);
        worst = worst.max((lhs - rhs).norm() / scale);
    }
    worst
}

/// `‖M_i^* P_N(K_w v) − w̄_i P_N(K_w v)‖ / ‖P_N(K_w v)‖` with `N = space.max_level`.
pub fn eigenvector_check(space: &TruncatedSpace, w: &CVec, v: &CVec, i: usize) -> f64 {
    let m = mult_op(space, i);
    // K_w v at level L has coordinates C_L x_L with x_{(b,k)} = conj(w^b) v_k.
    let alpha: Vec<CVec> = space
        .levels
        .iter()
        .map(|blk| {
            let x = CVec::from_iterator(
                blk.dim(),
                blk.basis.iter().map(|e| {
                    let wb: C64 = e.exp.iter().zip(w.iter()).map(|(&p, wi)| wi.powu(p)).product();
                    wb.conj() * v[e.comp]
                }),
            );
            &blk.coeff * x
        })
        .collect();
    let wi_bar = w[i].conj();
    let (mut res, mut total) = (0.0, 0.0);
    for (l, blk) in space.levels.iter().enumerate() {
        let image = if l < space.max_level { m.adjoint_block(space, l) * &alpha[l + 1] } else { CVec::zeros(blk.dim()) };
        let r = image - &alpha[l] * wi_bar;
        res += blk.norm_sq(&r);
        total += blk.norm_sq(&alpha[l]);
    }
    (res / total.max(1e-300)).sqrt()
}

/// Eigenvector residuals at truncations `N, N+2, N+4`.
#[derive(Debug, Clone, Serialize)]
pub struct EigenvectorDecay {
    pub levels: [usize; 3],
    pub residuals: [f64; 3],
}

impl EigenvectorDecay {
    /// `residual(N+4) / residual(N)`.
    pub fn ratio(&self) -> f64 {
        self.residuals[2] / self.residuals[0]
    }
}

pub fn eigenvector_decay(
    spec: &BundleSpec,
    k: &KernelExpr,
    n_base: usize,
    w: &CVec,
    v: &CVec,
    i: usize,
) -> Result<EigenvectorDecay> {
    let full = build_space(spec, k, n_base + 4)?;
    let levels = [n_base, n_base + 2, n_base + 4];
    let residuals = levels.map(|n| eigenvector_check(&full.prefix(n), w, v, i));
    Ok(EigenvectorDecay { levels, residuals })
}

impl TruncatedSpace {
    /// The same space truncated at a lower level.
    pub fn prefix(&self, max_level: usize) -> TruncatedSpace {
        TruncatedSpace {
            n: self.n,
            dim_v: self.dim_v,
            layer_of: self.layer_of.clone(),
            max_level,
            levels: self.levels[..=max_level].to_vec(),
        }
    }
}

/// Worst `‖(M_i U_g f)(z) − (U_g g(M)_i f)(z)‖` over coordinates, random sections and points.
pub fn homogeneity_residual(spec: &BundleSpec, g: &GroupElement, samples: usize, seed: u64) -> Result<f64> {
    let mut s = Sampler::new(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let f = PolySection::random(spec, 3, &mut s);
        let z = s.point(spec.n, 0.6);
        let ugf = act(spec, g, &f, &z)?;
        for i in 0..spec.n {
            let lhs = &ugf * z[i];
            let twisted = |zeta: &CVec| -> Result<CVec> { Ok(f.eval(zeta) * mobius_act(g, zeta)?[i]) };
            let rhs = act_fn(spec, g, twisted, &z)?;
            worst = worst.max((lhs - rhs).norm());
        }
    }
    Ok(worst)
}

/// Extremes of `‖f‖_{K^y} / ‖f‖_{K⁰}` over each level.
#[derive(Debug, Clone, Serialize)]
pub struct LevelRatio {
    pub level: usize,
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimilarityReport {
    pub max_level: usize,
    pub ratio_low: f64,
    pub ratio_high: f64,
    pub per_degree: Vec<LevelRatio>,
}

impl SimilarityReport {
    pub fn spread(&self) -> f64 {
        self.ratio_high / self.ratio_low
    }
}

/// Compare the Grams of `K⁰` and `K^y` level by level through `max_level`.
pub fn similarity_report(spec: &BundleSpec, max_level: usize) -> Result<SimilarityReport> {
    let base = build_space(spec, &k0(spec)?, max_level)?;
    let twisted = build_space(spec, &ky(spec)?, max_level)?;
    let per_degree: Vec<LevelRatio> = base
        .levels
        .par_iter()
        .zip(twisted.levels.par_iter())
        .map(|(b, t)| {
            if b.gram == t.gram {
                return LevelRatio { level: b.level, low: 1.0, high: 1.0 };
            }
            let ev = generalized_eigenvalues(&t.gram, &b.gram).expect("positive definite");
            LevelRatio { level: b.level, low: ev[0].max(0.0).sqrt(), high: ev[ev.len() - 1].sqrt() }
        })
        .collect();
    let ratio_low = per_degree.iter().map(|r| r.low).fold(f64::INFINITY, f64::min);
    let ratio_high = per_degree.iter().map(|r| r.high).fold(0.0, f64::max);
    Ok(SimilarityReport { max_level, ratio_low, ratio_high, per_degree })
}

/// Norms of `P ι D` from `H(K^{(α,λ)})` into `H(K^{(β,λ−1)})`, one value per source degree `1..=max_degree`.
pub fn p_iota_d_norms(src: &IrrepLabel, tgt_m: usize, max_degree: usize) -> Result<Vec<f64>> {
    let n = src.n;
    let tgt = IrrepLabel { n, m: tgt_m, lambda: src.lambda - 1.0 };
    let s_space = build_graded(n, vec![0; src.dim()], &k_irred(src)?, max_degree)?;
    let t_space = build_graded(n, vec![0; tgt.dim()], &k_irred(&tgt)?, max_degree.saturating_sub(1))?;
    let op: DiffOp = p_iota_d(&*cg_projection(n, src.m, tgt_m)?);
    let per: Vec<f64> = (1..=max_degree)
        .into_par_iter()
        .map(|l| {
            let d = level_matrix(&s_space, &t_space, l, l - 1, &|f| op.apply(f));
            block_norm(&d, &s_space.levels[l].gram, &t_space.levels[l - 1].gram)
        })
        .collect();
    Ok(per)
}

/// Rows `(degree, value)` for a sequence indexed from `first`.
pub fn sequence_csv(first: usize, values: &[f64]) -> String {
    let mut out = String::from("degree,value\n");
    for (k, v) in values.iter().enumerate() {
        out.push_str(&format!("{},{:e}\n", first + k, v));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::total_degree;

    fn scalar(n: usize, ell: f64) -> (BundleSpec, KernelExpr) {
        (BundleSpec::scalar(n, -ell * n as f64 / (n + 1) as f64), KernelExpr::h_power(n, ell))
    }

    #[test]
    fn disc_weight_one_gives_identity_gram() {
        let (spec, k) = scalar(1, 1.0);
        let sp = build_space(&spec, &k, 5).unwrap();
        for blk in &sp.levels {
            assert!((blk.gram[(0, 0)].re - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn disc_weight_one_shift_is_unweighted() {
        let (spec, k) = scalar(1, 1.0);
        let sp = build_space(&spec, &k, 6).unwrap();
        let seq = op_norm_estimate(&sp, 0);
        assert!(seq.sequence.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn ball_gram_is_diagonal_with_monomial_norms() {
        let (spec, k) = scalar(2, 2.0);
        let sp = build_space(&spec, &k, 3).unwrap();
        for blk in &sp.levels {
            for (r, e) in blk.basis.iter().enumerate() {
                let expected = crate::poly::multi_factorial(&e.exp)
                    / (0..total_degree(&e.exp)).map(|k| 2.0 + f64::from(k)).product::<f64>();
                for s in 0..blk.dim() {
                    let want = if r == s { expected } else { 0.0 };
                    assert!((blk.gram[(r, s)].re - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn negative_weight_is_indefinite() {
        let (spec, _) = scalar(1, 1.0);
        let err = build_space(&spec, &KernelExpr::h_power(1, -0.5), 4).unwrap_err();
        assert!(matches!(err, Error::IndefiniteGram { level: 1, .. }), "{err}");
    }

    #[test]
    fn eigenvector_at_origin_is_exact() {
        let (spec, k) = scalar(2, 2.0);
        let sp = build_space(&spec, &k, 4).unwrap();
        let r = eigenvector_check(&sp, &CVec::zeros(2), &CVec::from_element(1, c(1.0)), 1);
        assert_eq!(r, 0.0);
    }

    #[test]
    fn homogeneity_at_identity_vanishes() {
        let spec = BundleSpec::disc_chain(1, -3.0, 1.0);
        let r = homogeneity_residual(&spec, &GroupElement::identity(1), 5, 1).unwrap();
        assert!(r < 1e-14);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let s = sequence_csv(1, &[1.0, 2.0]);
        assert_eq!(s.lines().count(), 3);
        assert!(s.starts_with("degree,value"));
    }
}
