//! Seeded random points, vectors and near-identity group elements.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::lie::LieElement;
use crate::linalg::{c, frob, vnorm, CMat, CVec, C64};
use crate::mobius::GroupElement;

pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }

    pub fn complex(&mut self) -> C64 {
        C64::new(self.rng.sample(StandardNormal), self.rng.sample(StandardNormal))
    }

    pub fn vector(&mut self, dim: usize) -> CVec {
        CVec::from_iterator(dim, (0..dim).map(|_| self.complex()))
    }

    /// Point of the ball with radius drawn uniformly from `[0, rmax)`.
    pub fn point(&mut self, n: usize, rmax: f64) -> CVec {
        let v = self.vector(n);
        let r = self.uniform(0.0, rmax);
        &v * c(r / vnorm(&v))
    }

    /// Point with prescribed radius.
    pub fn point_on_sphere(&mut self, n: usize, radius: f64) -> CVec {
        let v = self.vector(n);
        &v * c(radius / vnorm(&v))
    }

    /// Element of `su(n,1)` with Frobenius norm in `[max_norm/5, max_norm]`.
    pub fn generator(&mut self, n: usize, max_norm: f64) -> LieElement {
        let dim = n + 1;
        let mut x = CMat::zeros(dim, dim);
        for i in 0..n {
            for j in 0..n {
                x[(i, j)] = self.complex();
            }
        }
        let skew = (&x - x.adjoint()) * c(0.5);
        x.fill(c(0.0));
        x.view_mut((0, 0), (n, n)).copy_from(&skew.view((0, 0), (n, n)));
        let b = self.vector(n);
        for i in 0..n {
            x[(i, n)] = b[i];
            x[(n, i)] = b[i].conj();
        }
        let tr = x.trace();
        x[(n, n)] = -tr;
        let target = self.uniform(max_norm / 5.0, max_norm);
        let scale = target / frob(&x);
        LieElement::new(x * c(scale))
    }

    pub fn group(&mut self, n: usize, max_norm: f64) -> GroupElement {
        let x = self.generator(n, max_norm);
        GroupElement::from_generator(&x)
    }

    /// Element of `su(2)` (trace-free skew-Hermitian) exponentiated.
    pub fn su2(&mut self) -> CMat {
        let mut x = CMat::zeros(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                x[(i, j)] = self.complex();
            }
        }
        let mut s = (&x - x.adjoint()) * c(0.5);
        let tr = s.trace() / c(2.0);
        s[(0, 0)] -= tr;
        s[(1, 1)] -= tr;
        s.exp()
    }
}
