//! The constants `c_k(λ)`, path coefficients, the operators `P ι D` and the
//! intertwiner `Γ` between the direct-sum action `U⁰` and the twisted action
//! `U^y`.

use crate::bundle::{act, BundleSpec, PolySection};
use crate::error::{Error, Result};
use crate::jet::{mat_inv, sym_power, Jet, Scalar};
use crate::lie::{bracket, embed_pminus, embed_pplus, DomainConstants};
use crate::linalg::{c, factorial, frob, vnorm, CMat, CVec, C64};
use crate::mobius::{factorize, factorize_jet, z_jets, GroupElement, JetFactorization};
use crate::poly::{DiffOp, MatPoly};
use crate::reps::{cg_projection, derived_irrep, eval_irrep, CGProjection, IrrepLabel};
use crate::sampling::Sampler;

const SINGULAR_TOL: f64 = 1e-12;

fn unit(n: usize, i: usize) -> CVec {
    let mut v = CVec::zeros(n);
    v[i] = c(1.0);
    v
}

/// Value of `c` together with its spread over the probe set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CConstant {
    pub value: f64,
    /// Largest deviation of a single probe (including imaginary parts).
    pub spread: f64,
}

/// Scalar `c` with `Σ_β ρ̃(e′_{−β}) ϱ⁰_src([Y, e_β]) = c ρ̃(Y)`, where the
/// source irrep sits at `lambda_src` and the target one step lower.
pub fn c_constant_report(n: usize, src_m: usize, tgt_m: usize, lambda_src: f64) -> Result<CConstant> {
    let cg = cg_projection(n, src_m, tgt_m)?;
    let src = IrrepLabel::new(n, src_m, lambda_src)?;
    let two_p = 2.0 * DomainConstants::ball(n).pf();
    let mut s = Sampler::new(0x005e_edc0);
    let mut values = Vec::new();
    for _ in 0..3 {
        let eta = s.vector(n);
        let y = embed_pminus(&eta);
        let mut lhs = CMat::zeros(cg.target_dim(), cg.source_dim());
        for beta in 0..n {
            let k = bracket(&y, &embed_pplus(&unit(n, beta))).decompose().k;
            lhs += cg.rho_matrix(&unit(n, beta)) * derived_irrep(&src, &k) / c(two_p);
        }
        let rho = cg.rho_matrix(&eta);
        let norm2 = rho.iter().map(|x| x.norm_sqr()).sum::<f64>();
        if norm2 < 1e-20 {
            continue;
        }
        let coeff = rho.iter().zip(lhs.iter()).map(|(r, l)| r.conj() * l).sum::<C64>() / c(norm2);
        let fit = frob(&(lhs - &rho * coeff)) / norm2.sqrt();
        values.push((coeff, fit));
    }
    if values.is_empty() {
        return Err(Error::DegenerateTest("every probe gives ρ̃(Y) = 0".into()));
    }
    let value = values[0].0.re;
    let spread = values
        .iter()
        .map(|(v, fit)| (v - c(value)).norm().max(*fit))
        .fold(0.0, f64::max);
    Ok(CConstant { value, spread })
}

pub fn c_constant(n: usize, src_m: usize, tgt_m: usize, lambda_src: f64) -> Result<f64> {
    c_constant_report(n, src_m, tgt_m, lambda_src).map(|r| r.value)
}

/// A multiplicity-free chain `α_0, …, α_m` with `α_k` at `λ − k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub n: usize,
    pub lambda: f64,
    pub ms: Vec<usize>,
}

impl Chain {
    pub fn new(n: usize, lambda: f64, ms: &[usize]) -> Self {
        Self { n, lambda, ms: ms.to_vec() }
    }

    pub fn len(&self) -> usize {
        self.ms.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `c_k(λ)` for the step `α_{k−1} → α_k`, `1 ≤ k ≤ m`.
    pub fn c(&self, k: usize) -> Result<f64> {
        c_constant(self.n, self.ms[k - 1], self.ms[k], self.lambda - (k - 1) as f64)
    }

    pub fn cs(&self) -> Result<Vec<f64>> {
        (1..=self.len()).map(|k| self.c(k)).collect()
    }
}

/// `c_k(λ) = intercept_k + slope·λ` per step, and `u`, `w` with
/// `c_k(λ) = u + (k−1)w − λ/2n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainConstants {
    pub intercepts: Vec<f64>,
    pub slopes: Vec<f64>,
    pub u: f64,
    /// Absent for chains with a single step.
    pub w: Option<f64>,
}

impl ChainConstants {
    pub fn of(chain: &Chain) -> Result<Self> {
        let at = |lambda: f64| Chain { lambda, ..chain.clone() }.cs();
        let (c0, c1) = (at(0.0)?, at(1.0)?);
        let slopes: Vec<f64> = c0.iter().zip(&c1).map(|(a, b)| b - a).collect();
        let u = c0.first().copied().unwrap_or(0.0);
        let w = (c0.len() >= 2).then(|| c0[1] - c0[0]);
        Ok(Self { intercepts: c0, slopes, u, w })
    }

    /// `u + (k−1)w − λ/2n`, extended past the chain end.
    pub fn linear(&self, n: usize, k: usize, lambda: f64) -> f64 {
        self.u + (k as f64 - 1.0) * self.w.unwrap_or(0.0) - lambda / (2.0 * n as f64)
    }

    /// Worst disagreement between direct evaluation and the linear form at `lambdas`.
    pub fn linearity_residual(&self, chain: &Chain, lambdas: &[f64]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for &l in lambdas {
            let cs = Chain { lambda: l, ..chain.clone() }.cs()?;
            for (k, ck) in cs.iter().enumerate() {
                worst = worst.max((ck - self.linear(chain.n, k + 1, l)).abs());
            }
        }
        Ok(worst)
    }

    /// Worst deviation of `c_{k+1} − c_k` from a constant.
    pub fn progression_residual(&self) -> f64 {
        let d: Vec<f64> = self.intercepts.windows(2).map(|w| w[1] - w[0]).collect();
        d.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max)
    }
}

/// `c_{ij}` from the step constants `cs[k−1] = c_{j+k}`, `k = 1..i−j`.
/// Reports every vanishing factor.
pub fn coefficient_from_steps(cs: &[f64]) -> std::result::Result<f64, Vec<usize>> {
    let len = cs.len();
    if len == 0 {
        return Ok(1.0);
    }
    let bad: Vec<usize> = (1..=len).filter(|&k| (cs[0] + cs[k - 1]).abs() < SINGULAR_TOL).collect();
    if !bad.is_empty() {
        return Err(bad);
    }
    let prod: f64 = (1..=len).map(|k| 1.0 / (cs[0] + cs[k - 1])).product();
    Ok(2f64.powi(len as i32) / factorial(len) * prod)
}

/// `c_{ij}(λ)` along a chain, `j ≤ i`.
pub fn path_coefficient(chain: &Chain, i: usize, j: usize) -> Result<f64> {
    if j > i || i > chain.len() {
        return Err(Error::ShapeMismatch(format!("need j ≤ i ≤ {}, got ({i}, {j})", chain.len())));
    }
    let cs: Vec<f64> = ((j + 1)..=i).map(|k| chain.c(k)).collect::<Result<_>>()?;
    coefficient_from_steps(&cs).map_err(|bad| Error::SingularLambda {
        witnesses: bad
            .iter()
            .map(|k| format!("c_{} + c_{} = 0 at λ = {}", j + 1, j + k, chain.lambda))
            .collect(),
    })
}

/// `c_{ij}` computed from a step function `c(k)`; zero for `i < j`.
pub fn coefficient_with(cfun: &impl Fn(usize) -> f64, i: usize, j: usize) -> f64 {
    if i < j {
        return 0.0;
    }
    let cs: Vec<f64> = ((j + 1)..=i).map(cfun).collect();
    coefficient_from_steps(&cs).unwrap_or(f64::NAN)
}

/// `((ℓ−i+1)/2) c_{ij} (c_{i+1} + c_{ℓ+1}) + c_{i−1,j} − (c_{ℓj}/c_{ℓ+1,j}) c_{ij}`.
pub fn recursion_residual(cfun: &impl Fn(usize) -> f64, i: usize, j: usize, l: usize) -> f64 {
    let cij = coefficient_with(cfun, i, j);
    let prev = if i == 0 { 0.0 } else { coefficient_with(cfun, i - 1, j) };
    let lhs = (l as f64 - i as f64 + 1.0) / 2.0 * cij * (cfun(i + 1) + cfun(l + 1)) + prev;
    let rhs = coefficient_with(cfun, l, j) / coefficient_with(cfun, l + 1, j) * cij;
    (lhs - rhs).abs()
}

/// A path `α_j → … → α_ℓ` through blocks of consecutive layers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPath {
    pub start: usize,
    pub blocks: Vec<usize>,
}

impl BlockPath {
    pub fn end(&self) -> usize {
        self.start + self.blocks.len() - 1
    }
}

impl std::fmt::Display for BlockPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> =
            self.blocks.iter().enumerate().map(|(k, a)| format!("({},{a})", self.start + k)).collect();
        write!(f, "{}", parts.join("→"))
    }
}

fn edge_y(spec: &BundleSpec, j: usize, from: usize, to: usize) -> Option<&CMat> {
    spec.edges
        .iter()
        .find(|e| e.j == j && e.from == from && e.to == to && frob(&e.y) > SINGULAR_TOL)
        .map(|e| &e.y)
}

/// Every path of length `≥ 1` along nonzero edges.
pub fn paths(spec: &BundleSpec) -> Vec<BlockPath> {
    fn extend(spec: &BundleSpec, path: BlockPath, out: &mut Vec<BlockPath>) {
        let (end, last) = (path.end(), *path.blocks.last().expect("nonempty"));
        if end + 1 >= spec.layers.len() {
            return;
        }
        for to in 0..spec.layers[end + 1].len() {
            if edge_y(spec, end + 1, last, to).is_some() {
                let mut next = path.clone();
                next.blocks.push(to);
                out.push(next.clone());
                extend(spec, next, out);
            }
        }
    }
    let mut out = Vec::new();
    for (j, layer) in spec.layers.iter().enumerate() {
        for alpha in 0..layer.len() {
            extend(spec, BlockPath { start: j, blocks: vec![alpha] }, &mut out);
        }
    }
    out
}

/// `y^𝛂 = y_ℓ ⋯ y_{j+1}` along a path.
pub fn y_product(spec: &BundleSpec, path: &BlockPath) -> CMat {
    let first = spec.layers[path.start][path.blocks[0]].mult;
    let mut acc = CMat::identity(first, first);
    for k in 1..path.blocks.len() {
        let j = path.start + k;
        acc = edge_y(spec, j, path.blocks[k - 1], path.blocks[k]).expect("path edge") * acc;
    }
    acc
}

fn path_steps(spec: &BundleSpec, path: &BlockPath) -> Result<Vec<f64>> {
    (1..path.blocks.len())
        .map(|k| {
            let j = path.start + k;
            c_constant(
                spec.n,
                spec.layers[j - 1][path.blocks[k - 1]].m,
                spec.layers[j][path.blocks[k]].m,
                spec.lambda - (j - 1) as f64,
            )
        })
        .collect()
}

/// `c^𝛂_{ℓj}(λ)` for a bundle path.
pub fn bundle_path_coefficient(spec: &BundleSpec, path: &BlockPath) -> Result<f64> {
    coefficient_from_steps(&path_steps(spec, path)?).map_err(|bad| Error::SingularLambda {
        witnesses: bad
            .iter()
            .map(|k| format!("path {path}: c_{} + c_{} = 0 at λ = {}", path.start + 1, path.start + k, spec.lambda))
            .collect(),
    })
}

/// Every `λ` at which a factor `c_{j+1} + c_{j+k}` of some path coefficient vanishes, ascending.
pub fn singular_lambdas(spec: &BundleSpec) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for p in paths(spec) {
        if frob(&y_product(spec, &p)) <= SINGULAR_TOL {
            continue;
        }
        let (s0, s1) = (path_steps(&spec.with_lambda(0.0), &p)?, path_steps(&spec.with_lambda(1.0), &p)?);
        for k in 0..s0.len() {
            let (a, b) = (s0[0] + s0[k], s1[0] + s1[k]);
            if (b - a).abs() > SINGULAR_TOL {
                out.push(-a / (b - a));
            }
        }
    }
    out.sort_by(|x, y| x.partial_cmp(y).expect("finite roots"));
    out.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport {
    pub regular: bool,
    pub witnesses: Vec<String>,
}

pub fn is_regular(spec: &BundleSpec) -> RegularityReport {
    let mut witnesses = Vec::new();
    for p in paths(spec) {
        if frob(&y_product(spec, &p)) <= SINGULAR_TOL {
            continue;
        }
        match bundle_path_coefficient(spec, &p) {
            Ok(_) => {}
            Err(Error::SingularLambda { witnesses: w }) => witnesses.extend(w),
            Err(e) => witnesses.push(format!("path {p}: {e}")),
        }
    }
    RegularityReport { regular: witnesses.is_empty(), witnesses }
}

/// `P ι D = Σ_β P(e′_{−β} ⊗ ∂_β ·)` as a differential operator `W^source → W^target`.
pub fn p_iota_d(cg: &CGProjection) -> DiffOp {
    let n = cg.n;
    let scale = 1.0 / (2.0 * DomainConstants::ball(n).pf()).sqrt();
    let mut op = DiffOp::zero(n, cg.target_dim(), cg.source_dim());
    for beta in 0..n {
        let mut a = vec![0; n];
        a[beta] = 1;
        op.add_term(a, &(cg.block(beta) * c(scale)));
    }
    op
}

pub fn p_iota_d_apply(cg: &CGProjection, f: &MatPoly) -> MatPoly {
    p_iota_d(cg).apply(f)
}

/// `D^𝛂 = (P ι D) ⋯ (P ι D)` along a path.
pub fn path_operator(spec: &BundleSpec, path: &BlockPath) -> Result<DiffOp> {
    let first = spec.label(path.start, path.blocks[0]).dim();
    let mut op = DiffOp::identity(spec.n, first);
    for k in 1..path.blocks.len() {
        let j = path.start + k;
        let (sm, tm) = (spec.layers[j - 1][path.blocks[k - 1]].m, spec.layers[j][path.blocks[k]].m);
        op = p_iota_d(&*cg_projection(spec.n, sm, tm)?).compose(&op);
    }
    Ok(op)
}

/// `Γ = I + Σ_𝛂 c^𝛂 y^𝛂 ⊗ D^𝛂` on `V`-valued sections.
pub fn gamma(spec: &BundleSpec) -> Result<DiffOp> {
    let report = is_regular(spec);
    if !report.regular {
        return Err(Error::SingularLambda { witnesses: report.witnesses });
    }
    let dim = spec.dim();
    let mut op = DiffOp::identity(spec.n, dim);
    for p in paths(spec) {
        let y = y_product(spec, &p);
        if frob(&y) <= SINGULAR_TOL {
            continue;
        }
        let coeff = bundle_path_coefficient(spec, &p)?;
        let (src, tgt) = (spec.block(p.start, p.blocks[0]), spec.block(p.end(), *p.blocks.last().unwrap()));
        let term = path_operator(spec, &p)?.kron_left(&y).scale(c(coeff));
        op.add_assign(&term.embed(dim, dim, tgt.offset, src.offset));
    }
    Ok(op)
}

/// `Γ⁻¹ = Σ_k (I − Γ)^k`, finite since `Γ − I` is strictly block-lower.
pub fn gamma_inverse_op(spec: &BundleSpec) -> Result<DiffOp> {
    let g = gamma(spec)?;
    let dim = spec.dim();
    let mut neg_n = DiffOp::identity(spec.n, dim);
    neg_n.add_assign(&g.scale(c(-1.0)));
    let mut out = DiffOp::identity(spec.n, dim);
    let mut pow = DiffOp::identity(spec.n, dim);
    for _ in 0..spec.depth() {
        pow = pow.compose(&neg_n);
        out.add_assign(&pow);
    }
    out.terms.retain(|_, m| frob(m) > 0.0);
    Ok(out)
}

pub fn gamma_apply(spec: &BundleSpec, f: &PolySection) -> Result<PolySection> {
    Ok(PolySection { poly: gamma(spec)?.apply(&f.poly) })
}

pub fn gamma_inverse(spec: &BundleSpec, f: &PolySection) -> Result<PolySection> {
    Ok(PolySection { poly: gamma_inverse_op(spec)?.apply(&f.poly) })
}

/// Jets of the entries of a column polynomial at `zj`.
pub fn eval_poly_jets(poly: &MatPoly, zj: &[Jet]) -> Vec<Jet> {
    let proto = &zj[0];
    let deg = poly.degree() as usize;
    let powers: Vec<Vec<Jet>> = zj
        .iter()
        .map(|z| {
            let mut p = vec![proto.lift(c(1.0))];
            for k in 1..=deg {
                p.push(p[k - 1].clone() * z.clone());
            }
            p
        })
        .collect();
    let mut out = vec![proto.lift(c(0.0)); poly.rows];
    for (e, m) in &poly.terms {
        let mono = e.iter().enumerate().fold(proto.lift(c(1.0)), |acc, (i, &k)| acc * powers[i][k as usize].clone());
        for (r, slot) in out.iter_mut().enumerate() {
            if m[(r, 0)] != c(0.0) {
                *slot = slot.clone() + mono.scale(m[(r, 0)]);
            }
        }
    }
    out
}

/// `ϱ⁰(k̃⁻¹)` for one irrep, on jets, row-major.
fn irrep_inverse_jet(label: &IrrepLabel, jf: &JetFactorization) -> Vec<Jet> {
    let n = label.n;
    let scalar = (jf.log_delta.scale(c(label.u()))).exp();
    sym_power(label.m, &mat_inv(&jf.ka, n), n).into_iter().map(|x| x * scalar.clone()).collect()
}

fn mat_vec_jets(m: &[Jet], v: &[Jet]) -> Vec<Jet> {
    let cols = v.len();
    (0..m.len() / cols)
        .map(|i| (1..cols).fold(m[i * cols].clone() * v[0].clone(), |acc, k| acc + m[i * cols + k].clone() * v[k].clone()))
        .collect()
}

/// Jets of `ϱ⁰(k̃(g,z)⁻¹) f(g·z)` around `z0` (all `n` coordinate directions).
pub fn twisted_pullback_jets(spec: &BundleSpec, g: &GroupElement, f: &PolySection, z0: &CVec, order: u32) -> Result<Vec<Jet>> {
    let n = spec.n;
    let dirs: Vec<CVec> = (0..n).map(|i| unit(n, i)).collect();
    let jf = factorize_jet(g, &z_jets(z0, &dirs, order))?;
    let fv = eval_poly_jets(&f.poly, &jf.gz);
    let mut out = Vec::with_capacity(fv.len());
    for b in spec.blocks() {
        let rho = irrep_inverse_jet(&b.label, &jf);
        let w = b.wdim();
        for r in 0..b.mult {
            let start = b.offset + r * w;
            out.extend(mat_vec_jets(&rho, &fv[start..start + w]));
        }
    }
    Ok(out)
}

/// Evaluates a constant-coefficient operator on jets at the expansion point.
pub fn apply_at_point(op: &DiffOp, jets: &[Jet]) -> CVec {
    let mut out = CVec::zeros(op.rows);
    for (a, g) in &op.terms {
        let d = CVec::from_iterator(jets.len(), jets.iter().map(|j| j.derivative(a)));
        out += g * d;
    }
    out
}

/// `‖Γ(U⁰_g f)(z0) − (U^y_g Γf)(z0)‖` and the size of the right-hand side.
pub fn intertwining_residual(spec: &BundleSpec, gop: &DiffOp, f: &PolySection, g: &GroupElement, z0: &CVec) -> Result<(f64, f64)> {
    // U⁰_g f(z) = ϱ⁰(k̃(g⁻¹,z))⁻¹ f(g⁻¹z).
    let jets = twisted_pullback_jets(spec, &g.inverse(), f, z0, gop.order())?;
    let lhs = apply_at_point(gop, &jets);
    let gf = PolySection { poly: gop.apply(&f.poly) };
    let rhs = act(spec, g, &gf, z0)?;
    Ok((vnorm(&(&lhs - &rhs)), vnorm(&rhs)))
}

/// Residual of the product rule for `P ι D` applied to `ϱ⁰_j(k̃(g,z)⁻¹) F(g·z)`.
pub fn pullback_rule_residual(src: &IrrepLabel, tgt_m: usize, g: &GroupElement, f: &MatPoly, z0: &CVec) -> Result<f64> {
    let n = src.n;
    let cg = cg_projection(n, src.m, tgt_m)?;
    let tgt = IrrepLabel::new(n, tgt_m, src.lambda - 1.0)?;
    let single = BundleSpec::chain(n, src.lambda, &[src.m], &[]);
    let jets = twisted_pullback_jets(&single, g, &PolySection { poly: f.clone() }, z0, 1)?;
    let lhs = apply_at_point(&p_iota_d(&cg), &jets);
    let fac = factorize(g, z0)?;
    let phi = CVec::from_iterator(jets.len(), jets.iter().map(|j| j.value()));
    let cj = c_constant(n, src.m, tgt_m, src.lambda)?;
    let pf = p_iota_d_apply(&cg, f);
    let rhs = cg.rho_matrix(&fac.y) * phi * c(-cj)
        + eval_irrep(&tgt, &fac.k.inverse()) * pf.eval(fac.gz.as_slice()).column(0);
    Ok(vnorm(&(lhs - rhs)))
}

/// Residual of `P_{j+1} ι D ρ̃_j(Y(g,z)) = −(w/2) ρ̃_{j+1}(Y) ρ̃_j(Y)` for step `j` of a chain.
pub fn derivative_of_y_residual(chain: &Chain, j: usize, g: &GroupElement, z0: &CVec) -> Result<f64> {
    let n = chain.n;
    if j == 0 || j + 1 > chain.len() {
        return Err(Error::ShapeMismatch(format!("step {j} needs 1 ≤ j < {}", chain.len())));
    }
    let first = cg_projection(n, chain.ms[j - 1], chain.ms[j])?;
    let second = cg_projection(n, chain.ms[j], chain.ms[j + 1])?;
    let dirs: Vec<CVec> = (0..n).map(|i| unit(n, i)).collect();
    let jf = factorize_jet(g, &z_jets(z0, &dirs, 1))?;
    let y = CVec::from_iterator(n, jf.y.iter().map(|x| x.value()));
    let scale = 1.0 / (2.0 * DomainConstants::ball(n).pf()).sqrt();
    let mut lhs = CMat::zeros(second.target_dim(), first.source_dim());
    for beta in 0..n {
        let mut a = vec![0; n];
        a[beta] = 1;
        let dy = CVec::from_iterator(n, jf.y.iter().map(|x| x.derivative(&a)));
        lhs += second.block(beta) * first.rho_matrix(&dy) * c(scale);
    }
    let w = chain.c(j + 1)? - chain.c(j)?;
    let rhs = second.rho_matrix(&y) * first.rho_matrix(&y) * c(-w / 2.0);
    Ok(frob(&(lhs - rhs)))
}
