//! `sl(n+1, C)` graded as `p+ ⊕ k ⊕ p-`, with the Killing form, the central
//! element `ẑ`, the compact conjugation and the dual bases used for `ι D`.

use crate::linalg::{c, CMat, CVec, C64, I};

/// Bookkeeping for the unit ball `B_n` (rank one).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DomainConstants {
    pub n: usize,
    pub r: usize,
    pub a: usize,
    pub b: usize,
    pub p: usize,
}

impl DomainConstants {
    pub fn ball(n: usize) -> Self {
        assert!(n >= 1, "ball dimension must be positive");
        let (r, a, b) = (1, 0, n - 1);
        let p = (r - 1) * a + b + 2;
        Self { n, r, a, b, p }
    }

    pub fn pf(&self) -> f64 {
        self.p as f64
    }
}

/// Traceless `(n+1)×(n+1)` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LieElement {
    pub mat: CMat,
}

/// Block-diagonal part `diag(A, a)` of an element of `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct KPart {
    pub a_block: CMat,
    pub a: C64,
}

/// The three graded pieces of a Lie element.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub pplus: CVec,
    pub k: KPart,
    pub pminus: CVec,
}

impl LieElement {
    pub fn new(mat: CMat) -> Self {
        debug_assert!(mat.trace().norm() < 1e-9, "sl element must be traceless");
        Self { mat }
    }

    pub fn zero(n: usize) -> Self {
        Self { mat: CMat::zeros(n + 1, n + 1) }
    }

    pub fn n(&self) -> usize {
        self.mat.nrows() - 1
    }

    pub fn decompose(&self) -> Decomposition {
        let n = self.n();
        Decomposition {
            pplus: self.mat.view((0, n), (n, 1)).column(0).into_owned(),
            k: KPart {
                a_block: self.mat.view((0, 0), (n, n)).into_owned(),
                a: self.mat[(n, n)],
            },
            pminus: self.mat.view((n, 0), (1, n)).row(0).transpose(),
        }
    }

    pub fn from_k(k: &KPart) -> Self {
        let n = k.a_block.nrows();
        let mut m = CMat::zeros(n + 1, n + 1);
        m.view_mut((0, 0), (n, n)).copy_from(&k.a_block);
        m[(n, n)] = k.a;
        Self { mat: m }
    }
}

impl std::ops::Add for &LieElement {
    type Output = LieElement;
    fn add(self, rhs: &LieElement) -> LieElement {
        LieElement { mat: &self.mat + &rhs.mat }
    }
}

impl std::ops::Mul<C64> for &LieElement {
    type Output = LieElement;
    fn mul(self, s: C64) -> LieElement {
        LieElement { mat: &self.mat * s }
    }
}

/// `ζ` placed in the top-right `n×1` block.
pub fn embed_pplus(zeta: &CVec) -> LieElement {
    let n = zeta.len();
    let mut m = CMat::zeros(n + 1, n + 1);
    for i in 0..n {
        m[(i, n)] = zeta[i];
    }
    LieElement { mat: m }
}

/// `η` placed in the bottom-left `1×n` block.
pub fn embed_pminus(eta: &CVec) -> LieElement {
    let n = eta.len();
    let mut m = CMat::zeros(n + 1, n + 1);
    for i in 0..n {
        m[(n, i)] = eta[i];
    }
    LieElement { mat: m }
}

/// `ẑ = (i/(n+1)) diag(1, …, 1, −n)`.
pub fn zhat(n: usize) -> LieElement {
    let s = I / c((n + 1) as f64);
    let mut m = CMat::zeros(n + 1, n + 1);
    for i in 0..n {
        m[(i, i)] = s;
    }
    m[(n, n)] = -s * c(n as f64);
    LieElement { mat: m }
}

pub fn bracket(x: &LieElement, y: &LieElement) -> LieElement {
    LieElement { mat: &x.mat * &y.mat - &y.mat * &x.mat }
}

pub fn killing(x: &LieElement, y: &LieElement) -> C64 {
    let n = x.n();
    c(2.0 * (n + 1) as f64) * (&x.mat * &y.mat).trace()
}

/// Conjugation with respect to `su(n+1)`.
pub fn nu(y: &LieElement) -> LieElement {
    LieElement { mat: -y.mat.adjoint() }
}

/// Conjugation with respect to `su(n,1)`: `X ↦ −J X* J`.
pub fn bar(y: &LieElement) -> LieElement {
    let n = y.n();
    let mut m = -y.mat.adjoint();
    for i in 0..=n {
        for j in 0..=n {
            let sign = if (i == n) != (j == n) { -1.0 } else { 1.0 };
            m[(i, j)] *= sign;
        }
    }
    LieElement { mat: m }
}

/// `B_ν(X, Y) = −B(X, νY)`, linear in `X`, conjugate-linear in `Y`.
pub fn b_nu(x: &LieElement, y: &LieElement) -> C64 {
    -killing(x, &nu(y))
}

/// Pairs `(e_β, e′_{−β})` with `B(e′_{−β}, e_γ) = δ_{βγ}`.
pub fn dual_basis(d: &DomainConstants) -> Vec<(LieElement, LieElement)> {
    (0..d.n)
        .map(|beta| {
            let mut eps = CVec::zeros(d.n);
            eps[beta] = c(1.0);
            let e = embed_pplus(&eps);
            let ep = &embed_pminus(&eps) * c(1.0 / (2.0 * d.pf()));
            (e, ep)
        })
        .collect()
}

/// Standard ball coordinates to the Killing-normalized pairing: `⟨z,w⟩ = 2p·w*z`.
pub fn killing_pairing(d: &DomainConstants, z: &CVec, w: &CVec) -> C64 {
    c(2.0 * d.pf()) * w.dotc(z)
}

/// The standard basis `E_{ij} − δ_{ij}E_{n+1,n+1}`-style spanning set of `sl(n+1)`.
pub fn sl_basis(n: usize) -> Vec<LieElement> {
    let dim = n + 1;
    let mut out = Vec::with_capacity(dim * dim - 1);
    for i in 0..dim {
        for j in 0..dim {
            if i != j {
                let mut m = CMat::zeros(dim, dim);
                m[(i, j)] = c(1.0);
                out.push(LieElement { mat: m });
            }
        }
    }
    for i in 0..n {
        let mut m = CMat::zeros(dim, dim);
        m[(i, i)] = c(1.0);
        m[(i + 1, i + 1)] = c(-1.0);
        out.push(LieElement { mat: m });
    }
    out
}

/// Worst residuals of the structural identities over the spanning set.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct StructureReport {
    pub grading: f64,
    pub jacobi: f64,
    pub invariance: f64,
    /// `|B(ẑ,ẑ) + 2n|`
    pub zhat: f64,
    pub duality: f64,
}

impl StructureReport {
    pub fn worst(&self) -> f64 {
        [self.grading, self.jacobi, self.invariance, self.zhat, self.duality].into_iter().fold(0.0, f64::max)
    }
}

fn off_grade(x: &LieElement, keep: Grade) -> f64 {
    let d = x.decompose();
    let norm = |v: &CVec| v.norm();
    let k = (d.k.a_block.norm_squared() + d.k.a.norm_sqr()).sqrt();
    match keep {
        Grade::Plus => k + norm(&d.pminus),
        Grade::Zero => norm(&d.pplus) + norm(&d.pminus),
        Grade::Minus => k + norm(&d.pplus),
        Grade::Nothing => k + norm(&d.pplus) + norm(&d.pminus),
    }
}

#[derive(Clone, Copy)]
enum Grade {
    Plus,
    Zero,
    Minus,
    Nothing,
}

fn grade_of(x: &LieElement) -> i32 {
    let d = x.decompose();
    if d.pplus.norm() > 0.0 {
        1
    } else if d.pminus.norm() > 0.0 {
        -1
    } else {
        0
    }
}

pub fn structure_check(n: usize) -> StructureReport {
    let basis = sl_basis(n);
    let mut grading: f64 = 0.0;
    let mut jacobi: f64 = 0.0;
    let mut invariance: f64 = 0.0;
    for x in &basis {
        for y in &basis {
            let xy = bracket(x, y);
            let keep = match grade_of(x) + grade_of(y) {
                1 => Grade::Plus,
                0 => Grade::Zero,
                -1 => Grade::Minus,
                _ => Grade::Nothing,
            };
            grading = grading.max(off_grade(&xy, keep));
            for z in &basis {
                let j = &(&bracket(x, &bracket(y, z)) + &bracket(y, &bracket(z, x))) + &bracket(z, &xy);
                jacobi = jacobi.max(j.mat.norm());
                invariance = invariance.max((killing(&xy, z) + killing(y, &bracket(x, z))).norm());
            }
        }
    }
    let zh = zhat(n);
    let zhat_res = (killing(&zh, &zh) + c(2.0 * n as f64)).norm();
    let pairs = dual_basis(&DomainConstants::ball(n));
    let mut duality: f64 = 0.0;
    for (b, (_, ep)) in pairs.iter().enumerate() {
        for (g, (e, _)) in pairs.iter().enumerate() {
            let want = if b == g { 1.0 } else { 0.0 };
            duality = duality.max((killing(ep, e) - c(want)).norm());
        }
    }
    StructureReport { grading, jacobi, invariance, zhat: zhat_res, duality }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize, i: usize) -> CVec {
        let mut v = CVec::zeros(n);
        v[i] = c(1.0);
        v
    }

    #[test]
    fn pplus_placement_for_disc() {
        let e = embed_pplus(&unit(1, 0));
        assert_eq!(e.mat, CMat::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]));
    }

    #[test]
    fn disc_bracket_is_diagonal() {
        let h = bracket(&embed_pplus(&unit(1, 0)), &embed_pminus(&unit(1, 0)));
        assert_eq!(h.mat, CMat::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]));
    }

    #[test]
    fn domain_constants() {
        let d = DomainConstants::ball(3);
        assert_eq!((d.r, d.a, d.b, d.p), (1, 0, 2, 4));
    }

    #[test]
    fn killing_of_zhat() {
        for n in 1..=4 {
            let z = zhat(n);
            assert!((killing(&z, &z) - c(-2.0 * n as f64)).norm() < 1e-12);
        }
    }

    #[test]
    fn decompose_roundtrip() {
        let basis = sl_basis(2);
        let mut x = LieElement::zero(2);
        for (k, b) in basis.iter().enumerate() {
            x = &x + &(b * C64::new(k as f64, 0.5));
        }
        let d = x.decompose();
        let back = &(&embed_pplus(&d.pplus) + &LieElement::from_k(&d.k)) + &embed_pminus(&d.pminus);
        assert_eq!(back.mat, x.mat);
    }

    #[test]
    fn structure_identities_hold() {
        for n in 1..=3 {
            assert!(structure_check(n).worst() < 1e-10);
        }
    }

    #[test]
    fn bar_maps_pplus_to_pminus() {
        let w = CVec::from_vec(vec![C64::new(0.2, 0.1), C64::new(-0.3, 0.4)]);
        let wb = bar(&embed_pplus(&w));
        let expect = embed_pminus(&w.map(|x| x.conj()));
        assert!((wb.mat - expect.mat).norm() < 1e-15);
    }
}
