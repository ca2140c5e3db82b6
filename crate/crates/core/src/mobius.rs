//! `SU(n,1)` acting on the ball, and the factorization
//! `g·exp z = exp(g·z) · k̃(g,z) · exp Y(g,z)` read off a block LDU.
//!
//! Group elements carry a continuous logarithm of their bottom-right entry
//! `d`. This is enough to work on the universal cover: the logarithm of the
//! `δ` factor is `log d + Log(1 + c·z/d)`, and `|c·z/d| < 1` on the ball keeps
//! the principal branch valid.

use crate::error::{Error, Result};
use crate::jet::{mat_inv, sym_power, Jet, Scalar};
use crate::lie::LieElement;
use crate::linalg::{c, frob, vnorm, CMat, CVec, C64};
use crate::reps::dsym;

const PIVOT_FLOOR: f64 = 1e-14;
const PATH_STEPS: usize = 64;

#[derive(Debug, Clone)]
pub struct GroupElement {
    pub mat: CMat,
    /// Continuous logarithm of `mat[(n,n)]`.
    pub log_d: C64,
    pub generator: Option<LieElement>,
}

impl GroupElement {
    pub fn identity(n: usize) -> Self {
        Self { mat: CMat::identity(n + 1, n + 1), log_d: c(0.0), generator: Some(LieElement::zero(n)) }
    }

    pub fn n(&self) -> usize {
        self.mat.nrows() - 1
    }

    /// `exp(X)`, with `log d` continued along `t ↦ exp(tX)`.
    pub fn from_generator(x: &LieElement) -> Self {
        let n = x.n();
        let mut log_d = c(0.0);
        let mut prev = c(1.0);
        for k in 1..=PATH_STEPS {
            let t = k as f64 / PATH_STEPS as f64;
            let d = (&x.mat * c(t)).exp()[(n, n)];
            log_d += (d / prev).ln();
            prev = d;
        }
        Self { mat: x.mat.exp(), log_d, generator: Some(x.clone()) }
    }

    /// A bare matrix, with the principal logarithm of `d`.
    pub fn from_matrix(mat: CMat) -> Self {
        let n = mat.nrows() - 1;
        let log_d = mat[(n, n)].ln();
        Self { mat, log_d, generator: None }
    }

    /// `exp(−w̄) = [[I, 0], [−w*, 1]]`.
    pub fn exp_neg_wbar(w: &CVec) -> Self {
        let n = w.len();
        let mut m = CMat::identity(n + 1, n + 1);
        for i in 0..n {
            m[(n, i)] = -w[i].conj();
        }
        Self { mat: m, log_d: c(0.0), generator: None }
    }

    fn blocks(&self) -> (CMat, CVec, CVec, C64) {
        let n = self.n();
        let a = self.mat.view((0, 0), (n, n)).into_owned();
        let b = self.mat.view((0, n), (n, 1)).column(0).into_owned();
        let cc = self.mat.view((n, 0), (1, n)).row(0).transpose();
        (a, b, cc, self.mat[(n, n)])
    }

    pub fn compose(&self, other: &GroupElement) -> GroupElement {
        let (_, _, c1, d1) = self.blocks();
        let (_, b2, _, d2) = other.blocks();
        let corr = (c(1.0) + c1.dot(&b2) / (d1 * d2)).ln();
        GroupElement { mat: &self.mat * &other.mat, log_d: self.log_d + other.log_d + corr, generator: None }
    }

    /// Inverse inside `SU(n,1)`: `g⁻¹ = J g* J` and `log d` conjugates.
    pub fn inverse(&self) -> GroupElement {
        let n = self.n();
        let mut m = self.mat.adjoint();
        for i in 0..=n {
            for j in 0..=n {
                if (i == n) != (j == n) {
                    m[(i, j)] = -m[(i, j)];
                }
            }
        }
        let generator = self.generator.as_ref().map(|x| LieElement { mat: -&x.mat });
        GroupElement { mat: m, log_d: self.log_d.conj(), generator }
    }

    /// `‖g* J g − J‖ + |det g − 1|`.
    pub fn membership_residual(&self) -> f64 {
        let n = self.n();
        let mut j = CMat::identity(n + 1, n + 1);
        j[(n, n)] = c(-1.0);
        frob(&(self.mat.adjoint() * &j * &self.mat - &j)) + (self.mat.determinant() - c(1.0)).norm()
    }
}

/// An element of `K̃^C`: `diag(A, δ)` with a tracked `log δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct KFactor {
    pub a: CMat,
    pub delta: C64,
    pub log_delta: C64,
}

impl KFactor {
    pub fn identity(n: usize) -> Self {
        Self { a: CMat::identity(n, n), delta: c(1.0), log_delta: c(0.0) }
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn compose(&self, other: &KFactor) -> KFactor {
        KFactor {
            a: &self.a * &other.a,
            delta: self.delta * other.delta,
            log_delta: self.log_delta + other.log_delta,
        }
    }

    pub fn inverse(&self) -> KFactor {
        KFactor {
            a: self.a.clone().try_inverse().expect("K-factor A block is invertible"),
            delta: c(1.0) / self.delta,
            log_delta: -self.log_delta,
        }
    }

    pub fn matrix(&self) -> CMat {
        let n = self.n();
        let mut m = CMat::zeros(n + 1, n + 1);
        m.view_mut((0, 0), (n, n)).copy_from(&self.a);
        m[(n, n)] = self.delta;
        m
    }

    /// Adjoint action on `p+`: `ζ ↦ Aζ/δ`.
    pub fn ad_pplus(&self) -> CMat {
        &self.a / self.delta
    }

    /// Adjoint action on `p-` in column coordinates: `η ↦ δ A^{−T} η`.
    pub fn ad_pminus(&self) -> CMat {
        self.a.clone().try_inverse().expect("invertible A").transpose() * self.delta
    }
}

#[derive(Debug, Clone)]
pub struct Factorization {
    pub gz: CVec,
    pub k: KFactor,
    /// Row data of `Y(g,z) ∈ p-`.
    pub y: CVec,
}

impl Factorization {
    /// `exp(gz) · diag(A, δ) · exp(Y)` as a matrix.
    pub fn recompose(&self) -> CMat {
        let n = self.gz.len();
        let mut e = CMat::identity(n + 1, n + 1);
        for i in 0..n {
            e[(i, n)] = self.gz[i];
        }
        let mut f = CMat::identity(n + 1, n + 1);
        for i in 0..n {
            f[(n, i)] = self.y[i];
        }
        e * self.k.matrix() * f
    }

    pub fn b_tilde(&self) -> BTilde {
        BTilde { k: self.k.clone(), y: self.y.clone() }
    }
}

/// `k̃ · exp(Y)` in `K̃^C P-`.
#[derive(Debug, Clone)]
pub struct BTilde {
    pub k: KFactor,
    pub y: CVec,
}

impl BTilde {
    /// `(k₁ e^{Y₁})(k₂ e^{Y₂}) = k₁k₂ · exp(Ad(k₂⁻¹)Y₁ + Y₂)`.
    pub fn compose(&self, other: &BTilde) -> BTilde {
        let moved = (self.y.transpose() * &other.k.a).transpose() / other.k.delta;
        BTilde { k: self.k.compose(&other.k), y: moved + &other.y }
    }

    pub fn matrix(&self) -> CMat {
        let n = self.y.len();
        let mut f = CMat::identity(n + 1, n + 1);
        for i in 0..n {
            f[(n, i)] = self.y[i];
        }
        self.k.matrix() * f
    }
}

fn pivot(g: &GroupElement, z: &CVec) -> Result<C64> {
    let (_, _, cc, d) = g.blocks();
    let m22 = cc.dot(z) + d;
    if m22.norm() < PIVOT_FLOOR {
        return Err(Error::SingularFactorization { pivot: m22.norm() });
    }
    Ok(m22)
}

pub fn act(g: &GroupElement, z: &CVec) -> Result<CVec> {
    let (a, b, _, _) = g.blocks();
    let m22 = pivot(g, z)?;
    Ok((a * z + b) / m22)
}

pub fn factorize(g: &GroupElement, z: &CVec) -> Result<Factorization> {
    let n = g.n();
    let (a, b, cc, d) = g.blocks();
    let m22 = pivot(g, z)?;
    let m12 = &a * z + b;
    let ka = a - &m12 * cc.transpose() / m22;
    let log_delta = g.log_d + (c(1.0) + cc.dot(z) / d).ln();
    debug_assert_eq!(ka.nrows(), n);
    Ok(Factorization {
        gz: m12 / m22,
        k: KFactor { a: ka, delta: m22, log_delta },
        y: cc / m22,
    })
}

/// `h(z,w) = 1 − w*z`.
pub fn h(z: &CVec, w: &CVec) -> C64 {
    c(1.0) - w.dotc(z)
}

/// `𝒦̃(z,w) = k̃(exp −w̄, z)⁻¹` in closed form.
pub fn kcal(z: &CVec, w: &CVec) -> KFactor {
    let n = z.len();
    let hz = h(z, w);
    KFactor { a: CMat::identity(n, n) - z * w.adjoint(), delta: c(1.0) / hz, log_delta: -hz.ln() }
}

/// Row data of `Y_{z,w} = Y(exp −w̄, z)`: `−w̄ / h(z,w)`.
pub fn y_zw(z: &CVec, w: &CVec) -> CVec {
    -w.map(|x| x.conj()) / h(z, w)
}

/// Holomorphic Jacobian of `z ↦ g·z`, equal to `Ad_{p+} k̃(g,z)`.
pub fn jacobian(g: &GroupElement, z: &CVec) -> Result<CMat> {
    Ok(factorize(g, z)?.k.ad_pplus())
}

/// Orientation of the conjugate-transposed `Y` that reproduces `exp(−w̄)·z`.
#[derive(Debug, Clone, Copy)]
pub struct Orientation {
    /// `‖exp(−w̄)·z + conj(Y_{w,z})‖`
    pub swapped: f64,
    /// `‖exp(−w̄)·z + conj(Y_{z,w})‖`
    pub printed: f64,
}

pub fn orientation_check(z: &CVec, w: &CVec) -> Result<Orientation> {
    let lhs = act(&GroupElement::exp_neg_wbar(w), z)?;
    let swapped = vnorm(&(&lhs + y_zw(w, z).map(|x| x.conj())));
    let printed = vnorm(&(&lhs + y_zw(z, w).map(|x| x.conj())));
    Ok(Orientation { swapped, printed })
}

/// Jet-valued factorization along `z(t) = z₀ + Σ_k t_k·dirs[k]`.
#[derive(Debug, Clone)]
pub struct JetFactorization {
    pub gz: Vec<Jet>,
    /// Row-major `n×n`.
    pub ka: Vec<Jet>,
    pub delta: Jet,
    pub log_delta: Jet,
    pub y: Vec<Jet>,
}

pub fn z_jets(z0: &CVec, dirs: &[CVec], order: u32) -> Vec<Jet> {
    let nv = dirs.len();
    (0..z0.len())
        .map(|i| {
            let mut j = Jet::constant(nv, order, z0[i]);
            for (k, d) in dirs.iter().enumerate() {
                j = j + Jet::variable(nv, order, k, c(0.0)).scale(d[i]);
            }
            j
        })
        .collect()
}

pub fn factorize_jet(g: &GroupElement, zj: &[Jet]) -> Result<JetFactorization> {
    let n = g.n();
    let (a, b, cc, d) = g.blocks();
    let z0 = CVec::from_iterator(n, zj.iter().map(|j| j.value()));
    pivot(g, &z0)?;
    let proto = &zj[0];
    let lin = |row: &[C64], off: C64| -> Jet {
        let mut acc = proto.lift(off);
        for (k, r) in row.iter().enumerate() {
            acc = acc + zj[k].scale(*r);
        }
        acc
    };
    let crow: Vec<C64> = cc.iter().copied().collect();
    let m22 = lin(&crow, d);
    let inv22 = m22.recip();
    let m12: Vec<Jet> = (0..n)
        .map(|i| {
            let row: Vec<C64> = (0..n).map(|k| a[(i, k)]).collect();
            lin(&row, b[i])
        })
        .collect();
    let gz = m12.iter().map(|x| x.clone() * inv22.clone()).collect();
    let mut ka = Vec::with_capacity(n * n);
    for i in 0..n {
        for k in 0..n {
            ka.push(proto.lift(a[(i, k)]) - (m12[i].clone() * inv22.clone()).scale(cc[k]));
        }
    }
    let y = cc.iter().map(|ck| inv22.scale(*ck)).collect();
    let ratio = lin(&crow, c(0.0)).scale(c(1.0) / d);
    let log_delta = (proto.lift(c(1.0)) + ratio).ln() + proto.lift(g.log_d);
    Ok(JetFactorization { gz, ka, delta: m22, log_delta, y })
}

/// Holomorphic representation of `K^C` used in the derivative identities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tau {
    /// Adjoint action on `p-`.
    AdPMinus,
    /// `Sym^m` of the `A` block (`n = 2`).
    SymA(usize),
}

impl Tau {
    fn on_inverse<T: Scalar>(&self, ka: &[T], delta: &T, n: usize) -> Vec<T> {
        match self {
            // Ad_{p-}(k⁻¹) = δ⁻¹ Aᵀ.
            Tau::AdPMinus => {
                let inv = delta.recip();
                (0..n * n).map(|idx| ka[(idx % n) * n + idx / n].clone() * inv.clone()).collect()
            }
            Tau::SymA(m) => sym_power(*m, &mat_inv(ka, n), n),
        }
    }

    fn derived(&self, za: &CMat, zd: C64) -> CMat {
        match self {
            Tau::AdPMinus => CMat::identity(za.nrows(), za.nrows()) * zd - za.transpose(),
            Tau::SymA(m) => dsym(*m, za),
        }
    }

    fn dim(&self, n: usize) -> usize {
        match self {
            Tau::AdPMinus => n,
            Tau::SymA(m) => m + 1,
        }
    }
}

/// Residuals of `D_X τ(k̃⁻¹) = −τ([Y,X]) τ(k̃⁻¹)` and `D_X Y = ½[Y,[Y,X]]`.
pub fn derivative_rule_residuals(tau: Tau, g: &GroupElement, z: &CVec, x: &CVec) -> Result<(f64, f64)> {
    let n = g.n();
    if let Tau::SymA(m) = tau {
        if m > 0 && n != 2 {
            return Err(Error::UnsupportedDimension(format!("Sym^{m} of the A block needs n = 2")));
        }
    }
    let jf = factorize_jet(g, &z_jets(z, std::slice::from_ref(x), 1))?;
    let t = tau.on_inverse(&jf.ka, &jf.delta, n);
    let dim = tau.dim(n);
    let val = CMat::from_fn(dim, dim, |i, j| t[i * dim + j].value());
    let dval = CMat::from_fn(dim, dim, |i, j| t[i * dim + j].coeff(&[1]));
    let y = CVec::from_iterator(n, jf.y.iter().map(|j| j.value()));
    let dy = CVec::from_iterator(n, jf.y.iter().map(|j| j.coeff(&[1])));
    // [Y, X] = diag(−x y, y·x).
    let yx = y.dot(x);
    let za = -(x * y.transpose());
    let res_a = frob(&(dval + tau.derived(&za, yx) * &val));
    let res_b = vnorm(&(dy + y * yx));
    Ok((res_a, res_b))
}

/// `‖LDU(g,z) − g·exp(z)‖`.
pub fn recomposition_residual(g: &GroupElement, z: &CVec) -> Result<f64> {
    let n = z.len();
    let mut e = CMat::identity(n + 1, n + 1);
    for i in 0..n {
        e[(i, n)] = z[i];
    }
    Ok(frob(&(factorize(g, z)?.recompose() - &g.mat * e)))
}

/// `‖Ad_{p+} k̃(g,z) − ∂(g·z)/∂z‖` with the derivative taken by jets.
pub fn jacobian_residual(g: &GroupElement, z: &CVec) -> Result<f64> {
    let n = z.len();
    let dirs: Vec<CVec> = (0..n)
        .map(|k| {
            let mut d = CVec::zeros(n);
            d[k] = c(1.0);
            d
        })
        .collect();
    let jf = factorize_jet(g, &z_jets(z, &dirs, 1))?;
    let numeric = CMat::from_fn(n, n, |i, k| {
        let mut a = vec![0; n];
        a[k] = 1;
        jf.gz[i].derivative(&a)
    });
    Ok(frob(&(jacobian(g, z)? - numeric)))
}

/// `‖b̃(gg′, z) − b̃(g, g′z) b̃(g′, z)‖`.
pub fn cocycle_residual(g: &GroupElement, gp: &GroupElement, z: &CVec) -> Result<f64> {
    let lhs = factorize(&g.compose(gp), z)?.b_tilde();
    let rhs = factorize(g, &act(gp, z)?)?.b_tilde().compose(&factorize(gp, z)?.b_tilde());
    Ok(frob(&(lhs.matrix() - rhs.matrix())) + (lhs.k.log_delta - rhs.k.log_delta).norm())
}
