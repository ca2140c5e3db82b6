//! Dense complex linear algebra shared by every module.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn frob(m: &CMat) -> f64 {
    m.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vnorm(v: &CVec) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// `A ⊗ B` with the first factor as the outer index.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMat::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            if s == C64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = s * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Symmetrize and return the ascending real spectrum of a Hermitian matrix.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let h = (m + m.adjoint()) * c(0.5);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// Eigenvalues of the pencil `(a, b)` with `b` Hermitian positive definite.
/// Returns `None` when `b` is not positive definite.
pub fn generalized_eigenvalues(a: &CMat, b: &CMat) -> Option<Vec<f64>> {
    let b = (b + b.adjoint()) * c(0.5);
    let chol = b.cholesky()?;
    let l = chol.l();
    let linv = l.clone().try_inverse()?;
    let m = &linv * a * linv.adjoint();
    Some(hermitian_eigenvalues(&m))
}

/// Orthonormal basis (columns) of the numerical null space of `m`,
/// using singular values below `tol` times the largest one.
pub fn null_space(m: &CMat, tol: f64) -> (CMat, Vec<f64>) {
    // The SVD of a wide matrix only exposes min(r, c) right vectors, so pad to square.
    let cols = m.ncols();
    let rows = m.nrows().max(cols);
    let mut sq = CMat::zeros(rows, cols);
    sq.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
    let svd = sq.svd(false, true);
    let vt = svd.v_t.expect("requested right singular vectors");
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let smax = sv.iter().cloned().fold(0.0, f64::max).max(1e-300);
    let idx: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] <= tol * smax).collect();
    let mut basis = CMat::zeros(cols, idx.len());
    for (k, &i) in idx.iter().enumerate() {
        for j in 0..cols {
            basis[(j, k)] = vt[(i, j)].conj();
        }
    }
    let mut sorted = sv;
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    (basis, sorted)
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// Rising factorial `(x)_k`.
pub fn pochhammer(x: f64, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (x + i as f64))
}
