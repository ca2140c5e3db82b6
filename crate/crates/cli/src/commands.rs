use hhvb_core::bundle::{file, validate, BundleSpec, PolySection};
use hhvb_core::gamma::{
    c_constant, gamma, gamma_inverse_op, intertwining_residual, is_regular, singular_lambdas,
};
use hhvb_core::kernel::{
    dominance, gram, k0, ky, monomial_norms, quasi_invariance_residual, sample_points, scalar_dominance_pair,
    threshold_scan, verify_identity, Identity, KernelExpr,
};
use hhvb_core::lie::structure_check;
use hhvb_core::linalg::{c, pochhammer, CVec};
use hhvb_core::mobius::{cocycle_residual, jacobian_residual, recomposition_residual, derivative_rule_residuals, Tau};
use hhvb_core::poly::{multi_factorial, DiffOp};
use hhvb_core::sampling::Sampler;
use hhvb_core::tuples::{
    adjoint_consistency, build_space, eigenvector_decay, homogeneity_residual, op_norm_estimate, similarity_report,
};
use hhvb_core::{DomainConstants, Error};
use serde::Serialize;

use crate::report::{Collector, Record};

/// Resolved settings echoed into every report.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub spec: Option<String>,
    pub n: usize,
    pub lambda: Option<f64>,
    pub samples: usize,
    pub seed: u64,
    pub max_degree: Option<usize>,
    pub tol: Option<f64>,
}

/// A failure that is the caller's fault rather than a failed check.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<Error> for ConfigError {
    fn from(e: Error) -> Self {
        ConfigError(e.to_string())
    }
}

type CmdResult = Result<Collector, ConfigError>;

impl RunConfig {
    fn load_spec(&self) -> Result<Option<BundleSpec>, ConfigError> {
        let Some(path) = &self.spec else { return Ok(None) };
        let mut spec = file::load(std::path::Path::new(path))?;
        if let Some(l) = self.lambda {
            spec = spec.with_lambda(l);
        }
        Ok(Some(spec))
    }

    /// The spec file, or a scalar line bundle on `B_n` with weight one by default.
    fn spec_or_scalar(&self) -> Result<BundleSpec, ConfigError> {
        match self.load_spec()? {
            Some(s) => Ok(s),
            None => {
                let p = DomainConstants::ball(self.n).pf();
                Ok(BundleSpec::scalar(self.n, self.lambda.unwrap_or(-(self.n as f64) / p)))
            }
        }
    }
}

/// `ℓ` for which the kernel of a scalar spec is `h^{−ℓ}`.
fn scalar_weight(spec: &BundleSpec) -> Option<f64> {
    (spec.layers.len() == 1 && spec.layers[0].len() == 1 && spec.layers[0][0].m == 0 && spec.layers[0][0].mult == 1)
        .then(|| spec.label(0, 0).ell())
}

fn error_record(name: &str, anchor: &str, e: &Error) -> Record {
    let verdict = match e {
        Error::SingularLambda { .. } => "singular_lambda",
        Error::IndefiniteGram { .. } => "indefinite",
        _ => "error",
    };
    Record::verdict(name, anchor, verdict, false).with_detail(e.to_string())
}

pub fn verify_identities(cfg: &RunConfig) -> CmdResult {
    let n = cfg.n;
    let mut out = Collector::default();
    let st = structure_check(n);
    for (name, anchor, r) in [
        ("structure.grading", "[g_i, g_j] ⊂ g_{i+j}", st.grading),
        ("structure.jacobi", "[X,[Y,Z]] + [Y,[Z,X]] + [Z,[X,Y]] = 0", st.jacobi),
        ("structure.killing_invariance", "B([X,Y],Z) + B(Y,[X,Z]) = 0", st.invariance),
        ("structure.zhat_norm", "B(ẑ,ẑ) = −2n", st.zhat),
        ("structure.dual_basis", "B(e′_{−β}, e_γ) = δ_{βγ}", st.duality),
    ] {
        out.push(Record::below(name, anchor, r, 1e-10));
    }

    let mut s = Sampler::new(cfg.seed);
    let taus: Vec<Tau> = if n == 2 { vec![Tau::AdPMinus, Tau::SymA(1), Tau::SymA(2)] } else { vec![Tau::AdPMinus] };
    let (mut ldu, mut jac, mut coc, mut da, mut db) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for _ in 0..cfg.samples {
        let (g, gp, z, x) = (s.group(n, 0.5), s.group(n, 0.5), s.point(n, 0.8), s.vector(n));
        ldu = ldu.max(recomposition_residual(&g, &z)?);
        jac = jac.max(jacobian_residual(&g, &z)?);
        coc = coc.max(cocycle_residual(&g, &gp, &z)?);
        for &t in &taus {
            let (a, b) = derivative_rule_residuals(t, &g, &z, &x)?;
            da = da.max(a);
            db = db.max(b);
        }
    }
    out.push(Record::below("factorization.ldu", "g·exp(z) = exp(gz) k̃(g,z) exp(Y(g,z))", ldu, 1e-10));
    out.push(Record::below("factorization.k_derivative", "D_X τ(k̃⁻¹) = −τ([Y,X]) τ(k̃⁻¹)", da, 1e-8));
    out.push(Record::below("factorization.y_derivative", "D_X Y = ½[Y,[Y,X]]", db, 1e-8));
    out.push(Record::below("factorization.jacobian", "∂(g·z)/∂z = Ad_{p+} k̃(g,z)", jac, 1e-8));
    out.push(Record::below("factorization.cocycle", "b̃(gg′,z) = b̃(g,g′z) b̃(g′,z)", coc, 1e-9));

    for id in Identity::ALL {
        let tol = match id {
            Identity::PairingIdentity => 0.0,
            Identity::ScalarDominanceGap => 1e-10,
            _ => 1e-8,
        };
        match verify_identity(id, n, cfg.samples, cfg.seed) {
            Ok(r) => out.push(Record::below(format!("kernel.{}", id.name()), id.formula(), r.residual, tol)),
            Err(e) => out.push(error_record(&format!("kernel.{}", id.name()), id.formula(), &e)),
        }
    }
    Ok(out)
}

const INTERTWINE_ANCHOR: &str = "Γ U⁰_g f = U^y_g Γ f";

pub fn gamma_intertwine(cfg: &RunConfig) -> CmdResult {
    let spec = cfg.load_spec()?.ok_or_else(|| ConfigError("gamma-intertwine needs --spec".into()))?;
    let mut out = Collector::default();
    let report = validate(&spec);
    if !report.is_valid() {
        return Err(ConfigError(format!("invalid spec: {:?}", report.violations)));
    }
    let reg = is_regular(&spec);
    out.push(
        Record::verdict("gamma.regularity", "c_{ℓj}(λ) finite on every path", if reg.regular { "regular" } else { "singular_lambda" }, reg.regular)
            .with_detail(&reg.witnesses),
    );
    match gamma(&spec) {
        Ok(op) => {
            let deg = cfg.max_degree.unwrap_or(4) as u32;
            let mut s = Sampler::new(cfg.seed);
            let (mut worst, mut control) = (0.0_f64, f64::INFINITY);
            let identity = DiffOp::identity(spec.n, spec.dim());
            for _ in 0..cfg.samples {
                let f = PolySection::random(&spec, deg, &mut s);
                let (g, z) = (s.group(spec.n, 0.5), s.point(spec.n, 0.6));
                worst = worst.max(intertwining_residual(&spec, &op, &f, &g, &z)?.0);
                control = control.min(intertwining_residual(&spec, &identity, &f, &g, &z)?.0);
            }
            out.push(Record::below("gamma.intertwining", INTERTWINE_ANCHOR, worst, 1e-8));
            let f = PolySection::random(&spec, deg, &mut s);
            let back = gamma_inverse_op(&spec)?.apply(&op.apply(&f.poly));
            out.push(Record::below("gamma.round_trip", "Γ⁻¹ Γ = I on polynomials", back.sub(&f.poly).max_coeff(), 1e-10));
            if op != identity {
                out.push_control(Record::above("gamma.untwisted_control", "U⁰_g ≠ U^y_g when y ≠ 0", control, 1e-6));
            }
        }
        Err(e) => out.push(error_record("gamma.construction", INTERTWINE_ANCHOR, &e)),
    }

    let roots = singular_lambdas(&spec)?;
    if let Some(&root) = roots.iter().min_by(|a, b| (*a - spec.lambda).abs().total_cmp(&(*b - spec.lambda).abs())) {
        let anchor = "c_{j+1} + c_{j+k} = 0 makes Γ undefined";
        let (verdict, pass, witnesses) = match gamma(&spec.with_lambda(root)) {
            Err(Error::SingularLambda { witnesses }) => ("singular_lambda", true, witnesses),
            Err(e) => ("error", false, vec![e.to_string()]),
            Ok(_) => ("not_detected", false, Vec::new()),
        };
        out.push(
            Record::verdict("gamma.singular_probe", anchor, verdict, pass)
                .with_detail(serde_json::json!({ "lambda": root, "roots": roots, "witnesses": witnesses })),
        );
    }
    Ok(out)
}

pub fn kernel_suite(cfg: &RunConfig) -> CmdResult {
    let spec = cfg.spec_or_scalar()?;
    let n = spec.n;
    let mut out = Collector::default();
    let k = match ky(&spec) {
        Ok(k) => k,
        Err(e) => {
            out.push(error_record("kernel.construction", "K^y = Γ^(z) Γ^(w)♯ K⁰", &e));
            return Ok(out);
        }
    };
    let pts = sample_points(n, 12, cfg.seed);
    let g = gram(&k, &pts, None);
    out.push(
        Record::verdict("kernel.gram", "[K(z_i,z_j)] ⪰ 0", format!("{:?}", g.verdict).to_lowercase(), g.is_positive())
            .with_detail(serde_json::json!({ "min_eig": g.min_eig, "max_eig": g.max_eig, "tolerance": g.tolerance })),
    );
    let origin = CVec::zeros(n);
    let at0 = k.eval(&origin, &origin);
    let sv = at0.clone().svd(false, false).singular_values;
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    out.push(Record::verdict("kernel.origin_invertible", "K(0,0) invertible", format!("σ_min = {smin:e}"), smin > 1e-12));
    let qi = quasi_invariance_residual(&spec, &k, cfg.samples, cfg.seed)?;
    out.push(Record::below("kernel.quasi_invariance", Identity::QuasiInvariance.formula(), qi, 1e-8));
    let flat = spec.with_scaled_edges(0.0);
    let reduces = ky(&flat)? == k0(&flat)?;
    out.push(Record::verdict("kernel.reduces_without_edges", "y = 0 ⇒ K^y = K⁰", if reduces { "identical" } else { "different" }, reduces));

    if let Some(ell) = scalar_weight(&spec) {
        if ell > 0.0 {
            let deg = cfg.max_degree.unwrap_or(8) as u32;
            let mut worst: f64 = 0.0;
            for (m, v) in monomial_norms(&KernelExpr::h_power(n, ell), deg)? {
                let want = multi_factorial(&m) / pochhammer(ell, m.iter().sum::<u32>() as usize);
                worst = worst.max((v - want).abs() / want.max(1.0));
            }
            out.push(Record::below("kernel.monomial_norms", "‖z^m‖² = m!/(ℓ)_{|m|}", worst, 1e-12));
            let (d0, d1) = scalar_dominance_pair(n, ell);
            let cval = (ell * (ell + 1.0) / (2.0 * DomainConstants::ball(n).pf())).sqrt();
            let dom = dominance(&d0, &d1, cval, &pts)?;
            out.push(
                Record::verdict("kernel.derivative_dominance", "ιD (ιD)^♯ h^−ℓ ≤ C h^−ℓ Ad_{p-}(K̃)", format!("{:?}", dom.verdict).to_lowercase(), dom.is_positive())
                    .with_detail(serde_json::json!({ "c": cval, "min_eig": dom.min_eig })),
            );
        }
    }
    Ok(out)
}

pub fn tuple_suite(cfg: &RunConfig) -> CmdResult {
    let spec = cfg.spec_or_scalar()?;
    let n = spec.n;
    let big_n = cfg.max_degree.unwrap_or(12);
    let mut out = Collector::default();
    let k = match ky(&spec) {
        Ok(k) => k,
        Err(e) => {
            out.push(error_record("tuple.kernel", "K^y = Γ^(z) Γ^(w)♯ K⁰", &e));
            return Ok(out);
        }
    };
    let space = match build_space(&spec, &k, big_n + 1) {
        Ok(s) => s,
        Err(e) => {
            out.push(error_record("tuple.space", "Gram of the kernel expansion positive definite", &e));
            return Ok(out);
        }
    };
    out.push(Record::verdict("tuple.space", "Gram of the kernel expansion positive definite", "positive", true));
    let ell = scalar_weight(&spec);
    for i in 0..n {
        let seq = op_norm_estimate(&space, i);
        let monotone = seq.sequence.windows(2).all(|w| w[1] >= w[0]);
        out.push(Record::verdict(format!("tuple.norm_monotone.{i}"), "M_i bounded on H", if monotone { "nondecreasing" } else { "decreasing" }, monotone && seq.norm.is_finite()).with_detail(seq.norm));
        if let Some(l) = ell {
            let closed = (0..=big_n).map(|k| ((k as f64 + 1.0) / (l + k as f64)).sqrt()).fold(0.0, f64::max);
            out.push(Record::below(format!("tuple.norm_oracle.{i}"), "‖z_i z^m‖/‖z^m‖ = √((m_i+1)/(ℓ+|m|))", (seq.norm - closed).abs(), 1e-9));
        }
        out.sequence(format!("norm.M{}", i + 1), 0, seq.sequence);
        out.push(Record::below(format!("tuple.adjoint.{i}"), "⟨M_i f, g⟩ = ⟨f, M_i^* g⟩", adjoint_consistency(&space, i, cfg.seed), 1e-11));
    }

    let mut s = Sampler::new(cfg.seed);
    let mut w = s.point_on_sphere(n, 0.5);
    if n == 1 {
        w = CVec::from_element(1, c(0.5));
    }
    let v = s.vector(spec.dim());
    let base = big_n.saturating_sub(4).max(1);
    let decay = eigenvector_decay(&spec, &k, base, &w, &v, 0)?;
    let decreasing = decay.residuals.windows(2).all(|r| r[1] < r[0]);
    out.push(Record::verdict("tuple.eigenvector_decay", "M_i^* K_w v = w̄_i K_w v", if decreasing { "decreasing" } else { "not_decreasing" }, decreasing).with_detail(&decay));
    if ell.is_some() {
        out.push(Record::below("tuple.eigenvector_geometric", "tail of K_w v decays like |w|^N", decay.ratio(), 0.5f64.powi(4) * 1.5));
    }

    let mut worst: f64 = 0.0;
    for _ in 0..cfg.samples.min(20) {
        let g = s.group(n, 0.5);
        worst = worst.max(homogeneity_residual(&spec, &g, 3, s.uniform(0.0, 1e6) as u64)?);
    }
    out.push(Record::below("tuple.homogeneity", "(M_i U_g f)(z) = z_i m(g⁻¹,z)⁻¹ f(g⁻¹z)", worst, 1e-8));

    if !spec.edges.is_empty() {
        match similarity_report(&spec, big_n) {
            Ok(r) => {
                let inside = r.ratio_low > 1e-3 && r.ratio_high < 1e3;
                out.push(
                    Record::verdict("tuple.similarity", "‖f‖_{K^y} ≍ ‖f‖_{K⁰}", format!("[{:.4}, {:.4}]", r.ratio_low, r.ratio_high), inside)
                        .with_detail(&r),
                );
                out.sequence("similarity.low", 0, r.per_degree.iter().map(|x| x.low).collect());
                out.sequence("similarity.high", 0, r.per_degree.iter().map(|x| x.high).collect());
            }
            Err(e) => out.push(error_record("tuple.similarity", "‖f‖_{K^y} ≍ ‖f‖_{K⁰}", &e)),
        }
    }
    Ok(out)
}

pub fn regularity_scan(cfg: &RunConfig) -> CmdResult {
    let mut out = Collector::default();
    if let Some(spec) = cfg.load_spec()? {
        let reg = is_regular(&spec);
        out.push(
            Record::verdict("scan.regularity", "c_{ℓj}(λ) finite on every path", if reg.regular { "regular" } else { "singular_lambda" }, reg.regular)
                .with_detail(serde_json::json!({ "witnesses": reg.witnesses, "singular_lambdas": singular_lambdas(&spec)? })),
        );
    }
    let n = cfg.n;
    let pts = sample_points(n, 12, cfg.seed);
    let ms: &[usize] = if n == 2 { &[0, 1, 2] } else { &[0] };
    for &m in ms {
        let (lo, hi) = if m == 0 { (-2.0, 2.0) } else { (-4.0, 4.0) };
        let name = format!("scan.threshold.m{m}");
        match threshold_scan(n, m, lo, hi, 1e-3, &pts, 6) {
            Ok(r) => {
                let width = r.bracket[1] - r.bracket[0];
                if m == 0 {
                    out.push(Record::below(name, "scalar positivity iff λ < 0", r.lambda_hat.abs(), 1e-3).with_detail(&r));
                } else {
                    out.push(Record::below(name, "largest λ with K^{(α,λ)} ⪰ 0", width, 1e-3).with_detail(&r));
                }
            }
            Err(e) => out.push(error_record(&name, "largest λ with K^{(α,λ)} ⪰ 0", &e)),
        }
    }
    let c1 = c_constant(n, 0, if n == 2 { 1 } else { 0 }, -1.0)?;
    out.push(Record::verdict("scan.first_constant", "c₁(λ) > 0 for λ < 0", format!("{c1:.6}"), c1 > 0.0));
    Ok(out)
}
