use hhvb_core::bundle::file::parse;
use hhvb_core::bundle::{BundleSpec, PolySection};
use hhvb_core::gamma::{gamma, gamma_inverse_op, Chain, ChainConstants};
use hhvb_core::kernel::KernelExpr;
use hhvb_core::linalg::{c, frob, C64};
use hhvb_core::mobius::cocycle_residual;
use hhvb_core::sampling::Sampler;
use hhvb_core::tuples::{build_space, op_norm_estimate};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gamma_round_trip(y1 in -2.0f64..2.0, y2 in -2.0f64..2.0, seed in 0u64..1000) {
        let spec = BundleSpec::chain(2, -3.5, &[0, 1, 2], &[c(y1), c(y2)]);
        let f = PolySection::random(&spec, 3, &mut Sampler::new(seed));
        let back = gamma_inverse_op(&spec).unwrap().apply(&gamma(&spec).unwrap().apply(&f.poly));
        prop_assert!(back.sub(&f.poly).max_coeff() < 1e-10);
    }

    #[test]
    fn scalar_kernel_is_hermitian(ell in 0.1f64..5.0, seed in 0u64..1000) {
        let k = KernelExpr::h_power(2, ell);
        let mut s = Sampler::new(seed);
        let (z, w) = (s.point(2, 0.9), s.point(2, 0.9));
        prop_assert!(frob(&(k.eval(&z, &w) - k.eval(&w, &z).adjoint())) < 1e-12);
    }

    #[test]
    fn factorization_cocycle(seed in 0u64..1000, n in 1usize..4) {
        let mut s = Sampler::new(seed);
        let (g, gp, z) = (s.group(n, 0.5), s.group(n, 0.5), s.point(n, 0.8));
        prop_assert!(cocycle_residual(&g, &gp, &z).unwrap() < 1e-9);
    }

    #[test]
    fn constants_affine_in_lambda(lambda in -6.0f64..-0.5) {
        let chain = Chain::new(2, lambda, &[0, 1, 2]);
        let cc = ChainConstants::of(&chain).unwrap();
        prop_assert!(cc.u.is_finite());
        prop_assert!(cc.linearity_residual(&chain, &[lambda, lambda - 1.0, lambda - 2.5]).unwrap() < 1e-10);
    }

    #[test]
    fn disc_norms_bounded_by_closed_form(ell in 0.2f64..4.0) {
        let sp = build_space(&BundleSpec::scalar(1, -ell / 2.0), &KernelExpr::h_power(1, ell), 40).unwrap();
        let norm = op_norm_estimate(&sp, 0).norm;
        prop_assert!(norm <= 1f64.max(ell.powf(-0.5)) + 1e-12);
    }

    #[test]
    fn spec_text_round_trip(lambda in -8.0f64..-0.5, y in -3.0f64..3.0) {
        let text = format!(
            r#"{{"n": 1, "lambda": {lambda}, "layers": [[{{"m": 0, "d": 1}}], [{{"m": 0, "d": 1}}]],
                "edges": [{{"j": 1, "from": 0, "to": 0, "y": [[{y}, 0.0]]}}]}}"#
        );
        let spec = parse(&text).unwrap();
        prop_assert_eq!(spec.lambda, lambda);
        prop_assert_eq!(spec.edges[0].y[(0, 0)], C64::new(y, 0.0));
    }
}

#[test]
fn bundled_specs_load_and_validate() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let spec = hhvb_core::bundle::file::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(hhvb_core::gamma::is_regular(&spec).regular);
        count += 1;
    }
    assert!(count >= 4);
}
