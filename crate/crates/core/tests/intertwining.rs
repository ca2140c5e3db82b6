use hhvb_core::bundle::{act, multiplier, validate, BundleSpec, PolySection};
use hhvb_core::gamma::{
    derivative_of_y_residual, gamma, intertwining_residual, pullback_rule_residual, Chain, ChainConstants,
};
use hhvb_core::linalg::{c, frob, vnorm};
use hhvb_core::mobius::act as mobius_act;
use hhvb_core::reps::IrrepLabel;
use hhvb_core::sampling::Sampler;

fn worst_intertwining(spec: &BundleSpec, seed: u64) -> f64 {
    assert!(validate(spec).is_valid());
    let op = gamma(spec).unwrap();
    let mut s = Sampler::new(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..30 {
        let f = PolySection::random(spec, 4, &mut s);
        let g = s.group(spec.n, 0.5);
        let z = s.point(spec.n, 0.6);
        let (r, _) = intertwining_residual(spec, &op, &f, &g, &z).unwrap();
        worst = worst.max(r);
    }
    worst
}

#[test]
fn gamma_intertwines_disc_chain() {
    let spec = BundleSpec::disc_chain(2, -3.0, 1.0);
    let r = worst_intertwining(&spec, 11);
    assert!(r < 1e-8, "{r:e}");
}

#[test]
fn gamma_intertwines_ball_chain() {
    let spec = BundleSpec::chain(2, -3.0, &[0, 1, 2], &[c(1.0), c(0.8)]);
    let r = worst_intertwining(&spec, 12);
    assert!(r < 1e-8, "{r:e}");
}

#[test]
fn gamma_intertwines_descending_chain() {
    let spec = BundleSpec::chain(2, -4.0, &[2, 1, 0], &[c(0.7), c(-1.2)]);
    let r = worst_intertwining(&spec, 13);
    assert!(r < 1e-8, "{r:e}");
}

#[test]
fn without_gamma_the_actions_differ() {
    let spec = BundleSpec::disc_chain(1, -3.0, 1.0);
    let id = hhvb_core::poly::DiffOp::identity(1, 2);
    let mut s = Sampler::new(3);
    let f = PolySection::random(&spec, 3, &mut s);
    let (r, _) = intertwining_residual(&spec, &id, &f, &s.group(1, 0.5), &s.point(1, 0.6)).unwrap();
    assert!(r > 1e-4);
}

#[test]
fn pullback_product_rule() {
    let mut s = Sampler::new(21);
    for (n, sm, tm, lambda) in [(1, 0, 0, -2.0), (2, 0, 1, -3.0), (2, 1, 2, -2.5), (2, 2, 1, -4.0)] {
        let src = IrrepLabel::new(n, sm, lambda).unwrap();
        for _ in 0..5 {
            let f = PolySection::random(&BundleSpec::chain(n, lambda, &[sm], &[]), 3, &mut s).poly;
            let r = pullback_rule_residual(&src, tm, &s.group(n, 0.5), &f, &s.point(n, 0.6)).unwrap();
            assert!(r < 1e-8, "{n} {sm}->{tm}: {r:e}");
        }
    }
}

#[test]
fn derivative_of_y_along_chains() {
    let mut s = Sampler::new(22);
    for chain in [Chain::new(1, -2.0, &[0, 0, 0]), Chain::new(2, -3.0, &[0, 1, 2]), Chain::new(2, -3.0, &[2, 1, 0])] {
        for _ in 0..5 {
            let r = derivative_of_y_residual(&chain, 1, &s.group(chain.n, 0.5), &s.point(chain.n, 0.6)).unwrap();
            assert!(r < 1e-8, "{chain:?}: {r:e}");
        }
        let cc = ChainConstants::of(&chain).unwrap();
        println!("{:?}: u = {}, w = {:?}", chain.ms, cc.u, cc.w);
    }
}

#[test]
fn multiplier_cocycle() {
    let spec = BundleSpec::chain(2, -3.0, &[0, 1, 2], &[c(1.0), c(0.8)]);
    let mut s = Sampler::new(23);
    for _ in 0..10 {
        let (g, gp, z) = (s.group(2, 0.5), s.group(2, 0.5), s.point(2, 0.6));
        let lhs = multiplier(&spec, &g.compose(&gp), &z).unwrap();
        let rhs = multiplier(&spec, &g, &mobius_act(&gp, &z).unwrap()).unwrap() * multiplier(&spec, &gp, &z).unwrap();
        assert!(frob(&(lhs - rhs)) < 1e-9);
    }
}

#[test]
fn action_is_a_representation() {
    let spec = BundleSpec::chain(2, -3.0, &[0, 1, 2], &[c(1.0), c(0.8)]);
    let mut s = Sampler::new(24);
    let f = PolySection::random(&spec, 3, &mut s);
    for _ in 0..10 {
        let (g, gp, z) = (s.group(2, 0.5), s.group(2, 0.5), s.point(2, 0.6));
        let inner = |w: &hhvb_core::linalg::CVec| act(&spec, &gp, &f, w);
        let lhs = hhvb_core::bundle::act_fn(&spec, &g, inner, &z).unwrap();
        let rhs = act(&spec, &g.compose(&gp), &f, &z).unwrap();
        assert!(vnorm(&(lhs - rhs)) < 1e-8);
    }
}
