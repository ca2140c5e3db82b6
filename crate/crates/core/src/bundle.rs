//! Bundle data `(ϱ, V)`: layers of irreducible `K̃^C`-modules with
//! multiplicities, edge coefficients `y`, the multiplier `ϱ(b̃(g,z))` and the
//! action on sections.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::linalg::{c, frob, hermitian_eigenvalues, kron, CMat, CVec, C64};
use crate::mobius::{act as mobius_act, factorize, GroupElement, KFactor};
use crate::poly::MatPoly;
use crate::reps::{admissible, cg_projection, eval_irrep, is_filiform_triple, IrrepLabel};

#[derive(Debug, Clone, PartialEq)]
pub struct LayerBlock {
    pub m: usize,
    pub mult: usize,
}

/// `y_j^{αβ}`: from block `from` of layer `j−1` to block `to` of layer `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub j: usize,
    pub from: usize,
    pub to: usize,
    pub y: CMat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BundleSpec {
    pub n: usize,
    pub lambda: f64,
    pub layers: Vec<Vec<LayerBlock>>,
    pub edges: Vec<Edge>,
    /// Keyed by `(j, α)`; identity when absent.
    pub hermitian: BTreeMap<(usize, usize), CMat>,
    pub mu: BTreeMap<(usize, usize), CMat>,
    pub indecomposable: bool,
}

/// Position of one `(j, α)` block inside `V = ⊕ C^d ⊗ W^α`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockInfo {
    pub j: usize,
    pub alpha: usize,
    pub label: IrrepLabel,
    pub mult: usize,
    pub offset: usize,
}

impl BlockInfo {
    pub fn wdim(&self) -> usize {
        self.label.dim()
    }

    pub fn size(&self) -> usize {
        self.mult * self.wdim()
    }
}

impl BundleSpec {
    /// One scalar layer.
    pub fn scalar(n: usize, lambda: f64) -> Self {
        Self::chain(n, lambda, &[0], &[])
    }

    /// Multiplicity-free chain with `Sym`-degrees `ms` and scalar edges `ys`.
    pub fn chain(n: usize, lambda: f64, ms: &[usize], ys: &[C64]) -> Self {
        assert_eq!(ys.len() + 1, ms.len().max(1), "one edge per adjacent pair");
        let layers = ms.iter().map(|&m| vec![LayerBlock { m, mult: 1 }]).collect();
        let edges = ys
            .iter()
            .enumerate()
            .map(|(i, &y)| Edge { j: i + 1, from: 0, to: 0, y: CMat::from_element(1, 1, y) })
            .collect();
        Self {
            n,
            lambda,
            layers,
            edges,
            hermitian: BTreeMap::new(),
            mu: BTreeMap::new(),
            indecomposable: false,
        }
    }

    /// Disc chain of length `m+1` with every edge equal to `y`.
    pub fn disc_chain(m: usize, lambda: f64, y: f64) -> Self {
        Self::chain(1, lambda, &vec![0; m + 1], &vec![c(y); m])
    }

    pub fn depth(&self) -> usize {
        self.layers.len().saturating_sub(1)
    }

    pub fn label(&self, j: usize, alpha: usize) -> IrrepLabel {
        IrrepLabel { n: self.n, m: self.layers[j][alpha].m, lambda: self.lambda - j as f64 }
    }

    pub fn blocks(&self) -> Vec<BlockInfo> {
        let mut out = Vec::new();
        let mut offset = 0;
        for (j, layer) in self.layers.iter().enumerate() {
            for (alpha, b) in layer.iter().enumerate() {
                let info = BlockInfo { j, alpha, label: self.label(j, alpha), mult: b.mult, offset };
                offset += info.size();
                out.push(info);
            }
        }
        out
    }

    pub fn block(&self, j: usize, alpha: usize) -> BlockInfo {
        self.blocks().into_iter().find(|b| b.j == j && b.alpha == alpha).expect("block exists")
    }

    pub fn dim(&self) -> usize {
        self.blocks().iter().map(BlockInfo::size).sum()
    }

    pub fn with_scaled_edges(&self, t: f64) -> Self {
        let mut s = self.clone();
        s.edges.iter_mut().for_each(|e| e.y *= c(t));
        s
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { lambda, ..self.clone() }
    }

    /// `ϱ⁰(k)`: block-diagonal `I_d ⊗ (χ ⊗ α)(k)`.
    pub fn rho0(&self, k: &KFactor) -> CMat {
        let dim = self.dim();
        let mut out = CMat::zeros(dim, dim);
        for b in self.blocks() {
            let blk = kron(&CMat::identity(b.mult, b.mult), &eval_irrep(&b.label, k));
            out.view_mut((b.offset, b.offset), (b.size(), b.size())).copy_from(&blk);
        }
        out
    }

    /// `ϱ⁻(Y)` for `Y = F(η)`: strictly block-lower-triangular.
    pub fn rho_minus(&self, eta: &CVec) -> CMat {
        let dim = self.dim();
        let mut out = CMat::zeros(dim, dim);
        for e in &self.edges {
            let src = self.block(e.j - 1, e.from);
            let tgt = self.block(e.j, e.to);
            let cg = cg_projection(self.n, src.label.m, tgt.label.m).expect("validated edge");
            let blk = kron(&e.y, &cg.rho_matrix(eta));
            let mut view = out.view_mut((tgt.offset, src.offset), (tgt.size(), src.size()));
            view += blk;
        }
        out
    }
}

/// `exp` of a nilpotent matrix of index `≤ order + 1`.
pub fn nilpotent_exp(nm: &CMat, order: usize) -> CMat {
    let dim = nm.nrows();
    let mut out = CMat::identity(dim, dim);
    let mut pow = CMat::identity(dim, dim);
    for k in 1..=order {
        pow = &pow * nm / c(k as f64);
        out += &pow;
    }
    out
}

/// `ϱ(b̃(g,z)) = ϱ⁰(k̃) · exp ϱ⁻(Y)`.
pub fn multiplier(spec: &BundleSpec, g: &GroupElement, z: &CVec) -> Result<CMat> {
    let f = factorize(g, z)?;
    Ok(spec.rho0(&f.k) * nilpotent_exp(&spec.rho_minus(&f.y), spec.depth()))
}

/// `ϱ(b̃(g,z))⁻¹ = exp(−ϱ⁻(Y)) · ϱ⁰(k̃⁻¹)`.
pub fn multiplier_inverse(spec: &BundleSpec, g: &GroupElement, z: &CVec) -> Result<CMat> {
    let f = factorize(g, z)?;
    Ok(nilpotent_exp(&(-spec.rho_minus(&f.y)), spec.depth()) * spec.rho0(&f.k.inverse()))
}

/// A `V`-valued polynomial section (a `dim V × 1` polynomial in `n` variables).
#[derive(Debug, Clone, PartialEq)]
pub struct PolySection {
    pub poly: MatPoly,
}

impl PolySection {
    pub fn zero(spec: &BundleSpec) -> Self {
        Self { poly: MatPoly::zero(spec.n, spec.dim(), 1) }
    }

    pub fn eval(&self, z: &CVec) -> CVec {
        self.poly.eval(z.as_slice()).column(0).into_owned()
    }

    /// Component in block `(j, α)`.
    pub fn component(&self, spec: &BundleSpec, j: usize, alpha: usize) -> MatPoly {
        let b = spec.block(j, alpha);
        self.poly.block(b.offset, b.size(), 0, 1)
    }

    /// Random section of degree `≤ deg` from a seeded sampler.
    pub fn random(spec: &BundleSpec, deg: u32, s: &mut crate::sampling::Sampler) -> Self {
        let mut poly = MatPoly::zero(spec.n, spec.dim(), 1);
        for d in 0..=deg {
            for e in crate::poly::multis_of_degree(spec.n, d) {
                let v = s.vector(spec.dim()) * c(0.5);
                poly.add_term(e, &CMat::from_column_slice(spec.dim(), 1, v.as_slice()));
            }
        }
        Self { poly }
    }
}

/// `(U_g f)(z) = ϱ(b̃(g⁻¹,z))⁻¹ f(g⁻¹·z)`.
pub fn act(spec: &BundleSpec, g: &GroupElement, f: &PolySection, z: &CVec) -> Result<CVec> {
    let gi = g.inverse();
    let w = mobius_act(&gi, z)?;
    Ok(multiplier_inverse(spec, &gi, z)? * f.eval(&w))
}

/// Same action for a section given pointwise.
pub fn act_fn(
    spec: &BundleSpec,
    g: &GroupElement,
    f: impl Fn(&CVec) -> Result<CVec>,
    z: &CVec,
) -> Result<CVec> {
    let gi = g.inverse();
    let w = mobius_act(&gi, z)?;
    Ok(multiplier_inverse(spec, &gi, z)? * f(&w)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub location: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation { location: location.into(), message: message.into() });
    }
}

fn positive_definite(m: &CMat) -> bool {
    m.is_square()
        && frob(&(m - m.adjoint())) <= 1e-12 * (1.0 + frob(m))
        && hermitian_eigenvalues(m).first().is_some_and(|&e| e > 0.0)
}

pub fn validate(spec: &BundleSpec) -> ValidationReport {
    let mut r = ValidationReport::default();
    if spec.n == 0 {
        r.push("n", "dimension must be positive");
        return r;
    }
    if spec.layers.is_empty() {
        r.push("layers", "at least one layer is required");
    }
    for (j, layer) in spec.layers.iter().enumerate() {
        if layer.is_empty() {
            r.push(format!("layers[{j}]"), "empty layer");
        }
        for (a, b) in layer.iter().enumerate() {
            if b.mult == 0 {
                r.push(format!("layers[{j}][{a}]"), "multiplicity must be positive");
            }
            if b.m > 0 && spec.n != 2 {
                r.push(format!("layers[{j}][{a}]"), format!("Sym^{} layers need n = 2", b.m));
            }
        }
    }
    if !r.is_valid() {
        return r;
    }
    let mut seen = BTreeSet::new();
    let mut edge_ok = vec![false; spec.edges.len()];
    for (i, e) in spec.edges.iter().enumerate() {
        let loc = format!("edges[{i}]");
        if e.j == 0 || e.j >= spec.layers.len() {
            r.push(loc, format!("layer index {} out of range 1..{}", e.j, spec.layers.len()));
            continue;
        }
        if e.from >= spec.layers[e.j - 1].len() || e.to >= spec.layers[e.j].len() {
            r.push(loc, "block index out of range");
            continue;
        }
        if !seen.insert((e.j, e.from, e.to)) {
            r.push(loc.clone(), "duplicate edge");
        }
        let (ma, mb) = (spec.layers[e.j - 1][e.from].m, spec.layers[e.j][e.to].m);
        if !admissible(spec.n, ma, mb) {
            r.push(loc, format!("pair (Sym^{ma}, Sym^{mb}) is not admissible"));
            continue;
        }
        let shape = (spec.layers[e.j][e.to].mult, spec.layers[e.j - 1][e.from].mult);
        if e.y.shape() != shape {
            r.push(loc, format!("y has shape {:?}, expected {:?}", e.y.shape(), shape));
            continue;
        }
        edge_ok[i] = true;
    }
    for (i1, e1) in spec.edges.iter().enumerate() {
        for (i2, e2) in spec.edges.iter().enumerate() {
            if !(edge_ok[i1] && edge_ok[i2]) || e2.j != e1.j + 1 || e2.from != e1.to {
                continue;
            }
            let ms = (
                spec.layers[e1.j - 1][e1.from].m,
                spec.layers[e1.j][e1.to].m,
                spec.layers[e2.j][e2.to].m,
            );
            let filiform = is_filiform_triple(spec.n, ms.0, ms.1, ms.2).unwrap_or(false);
            let prod = frob(&(&e2.y * &e1.y));
            if !filiform && prod > 1e-12 {
                r.push(
                    format!("edges[{i1}]→edges[{i2}]"),
                    format!(
                        "(Sym^{}, Sym^{}, Sym^{}) is not filiform but the y-product has norm {prod:e}",
                        ms.0, ms.1, ms.2
                    ),
                );
            }
        }
    }
    for (name, map) in [("hermitian", &spec.hermitian), ("mu", &spec.mu)] {
        for (&(j, a), m) in map {
            let loc = format!("{name}[{j},{a}]");
            match spec.layers.get(j).and_then(|l| l.get(a)) {
                None => r.push(loc, "no such block"),
                Some(b) if m.shape() != (b.mult, b.mult) => r.push(loc, "shape does not match multiplicity"),
                Some(_) if !positive_definite(m) => r.push(loc, "matrix is not positive definite"),
                _ => {}
            }
        }
    }
    if spec.indecomposable && !connected(spec) {
        r.push("edges", "flagged indecomposable but the nonzero-edge graph is disconnected");
    }
    r
}

fn connected(spec: &BundleSpec) -> bool {
    let nodes: Vec<(usize, usize)> =
        spec.layers.iter().enumerate().flat_map(|(j, l)| (0..l.len()).map(move |a| (j, a))).collect();
    let mut reached = BTreeSet::new();
    let mut stack = vec![nodes[0]];
    while let Some(v) = stack.pop() {
        if !reached.insert(v) {
            continue;
        }
        for e in spec.edges.iter().filter(|e| frob(&e.y) > 1e-12) {
            let (a, b) = ((e.j - 1, e.from), (e.j, e.to));
            if a == v {
                stack.push(b);
            }
            if b == v {
                stack.push(a);
            }
        }
    }
    reached.len() == nodes.len()
}

/// Outcome of comparing two specs up to `y′ = a_j^β⁻¹ y a_{j−1}^α`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaugeVerdict {
    Isomorphic,
    Different,
    /// Only multiplicity-one blocks are decided.
    Undetermined,
}

pub fn gauge_equivalent(a: &BundleSpec, b: &BundleSpec) -> GaugeVerdict {
    if a.n != b.n || a.lambda != b.lambda || a.layers != b.layers {
        return GaugeVerdict::Different;
    }
    if a.layers.iter().flatten().any(|blk| blk.mult != 1) {
        return GaugeVerdict::Undetermined;
    }
    let edge_map = |s: &BundleSpec| -> BTreeMap<(usize, usize, usize), C64> {
        s.edges
            .iter()
            .filter(|e| e.y[(0, 0)].norm() > 1e-12)
            .map(|e| ((e.j, e.from, e.to), e.y[(0, 0)]))
            .collect()
    };
    let (ea, eb) = (edge_map(a), edge_map(b));
    if ea.keys().collect::<Vec<_>>() != eb.keys().collect::<Vec<_>>() {
        return GaugeVerdict::Different;
    }
    // Propagate scalars a_{jα} over a spanning forest, then check every edge.
    let mut scale: BTreeMap<(usize, usize), C64> = BTreeMap::new();
    for (j, layer) in a.layers.iter().enumerate() {
        for alpha in 0..layer.len() {
            if scale.contains_key(&(j, alpha)) {
                continue;
            }
            scale.insert((j, alpha), c(1.0));
            let mut changed = true;
            while changed {
                changed = false;
                for (&(ej, from, to), &ya) in &ea {
                    let yb = eb[&(ej, from, to)];
                    let (s, t) = ((ej - 1, from), (ej, to));
                    // yb = ya · a_s / a_t
                    match (scale.get(&s).copied(), scale.get(&t).copied()) {
                        (Some(x), None) => {
                            scale.insert(t, ya * x / yb);
                            changed = true;
                        }
                        (None, Some(x)) => {
                            scale.insert(s, yb * x / ya);
                            changed = true;
                        }
                        _ => {}
                    }
                }
            }
        }
    }
    let consistent = ea.iter().all(|(&(ej, from, to), &ya)| {
        let yb = eb[&(ej, from, to)];
        (ya * scale[&(ej - 1, from)] / scale[&(ej, to)] - yb).norm() <= 1e-10 * (1.0 + yb.norm())
    });
    if consistent {
        GaugeVerdict::Isomorphic
    } else {
        GaugeVerdict::Different
    }
}

pub mod file {
    //! JSON spec files.

    use serde::{Deserialize, Serialize};

    use super::*;

    #[derive(Debug, Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct RawBlock {
        pub m: usize,
        pub d: usize,
    }

    #[derive(Debug, Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct RawEdge {
        pub j: usize,
        pub from: usize,
        pub to: usize,
        /// Row-major `[re, im]` pairs.
        pub y: Vec<[f64; 2]>,
    }

    #[derive(Debug, Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct RawMatrix {
        pub j: usize,
        pub block: usize,
        pub matrix: Vec<[f64; 2]>,
    }

    #[derive(Debug, Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct RawSpec {
        pub n: usize,
        pub lambda: f64,
        pub layers: Vec<Vec<RawBlock>>,
        #[serde(default)]
        pub edges: Vec<RawEdge>,
        #[serde(default)]
        pub hermitian: Option<Vec<RawMatrix>>,
        #[serde(default)]
        pub mu: Option<Vec<RawMatrix>>,
        #[serde(default)]
        pub indecomposable: bool,
    }

    /// 1-based line of the `k`-th occurrence of `"key"` at or after `start`.
    fn line_of(text: &str, key: &str, k: usize, start: usize) -> usize {
        let pat = format!("\"{key}\"");
        let pos = text[start..].match_indices(&pat).nth(k).map(|(p, _)| p + start).unwrap_or(0);
        text[..pos].matches('\n').count() + 1
    }

    fn square(entries: &[[f64; 2]], rows: usize, cols: usize) -> Option<CMat> {
        (entries.len() == rows * cols)
            .then(|| CMat::from_row_iterator(rows, cols, entries.iter().map(|e| C64::new(e[0], e[1]))))
    }

    pub fn parse(text: &str) -> Result<BundleSpec> {
        let raw: RawSpec = serde_json::from_str(text).map_err(|e| Error::SpecParse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let err = |line: usize, message: String| Error::SpecParse { line, column: 1, message };
        let layers: Vec<Vec<LayerBlock>> = raw
            .layers
            .iter()
            .map(|l| l.iter().map(|b| LayerBlock { m: b.m, mult: b.d }).collect())
            .collect();
        let mult = |j: usize, a: usize| layers.get(j).and_then(|l| l.get(a)).map(|b| b.mult);
        let mut edges = Vec::new();
        for (i, e) in raw.edges.iter().enumerate() {
            let line = line_of(text, "from", i, 0);
            let (Some(dt), Some(ds)) = (mult(e.j, e.to), e.j.checked_sub(1).and_then(|jj| mult(jj, e.from)))
            else {
                return Err(err(line, format!("edges[{i}] refers to a missing block")));
            };
            let y = square(&e.y, dt, ds)
                .ok_or_else(|| err(line, format!("edges[{i}].y needs {} entries, found {}", dt * ds, e.y.len())))?;
            edges.push(Edge { j: e.j, from: e.from, to: e.to, y });
        }
        let mut maps = [BTreeMap::new(), BTreeMap::new()];
        for (slot, (name, list)) in [("hermitian", &raw.hermitian), ("mu", &raw.mu)].into_iter().enumerate() {
            let anchor = text.find(&format!("\"{name}\"")).unwrap_or(0);
            for (i, m) in list.iter().flatten().enumerate() {
                let line = line_of(text, "matrix", i, anchor);
                let d = mult(m.j, m.block).ok_or_else(|| err(line, format!("{name}[{i}] refers to a missing block")))?;
                let mat = square(&m.matrix, d, d)
                    .ok_or_else(|| err(line, format!("{name}[{i}].matrix needs {} entries", d * d)))?;
                maps[slot].insert((m.j, m.block), mat);
            }
        }
        let [hermitian, mu] = maps;
        let spec = BundleSpec {
            n: raw.n,
            lambda: raw.lambda,
            layers,
            edges,
            hermitian,
            mu,
            indecomposable: raw.indecomposable,
        };
        let report = validate(&spec);
        if !report.is_valid() {
            let msgs = report
                .violations
                .iter()
                .map(|v| {
                    let line = v
                        .location
                        .strip_prefix("edges[")
                        .and_then(|s| s.split(']').next())
                        .and_then(|s| s.parse::<usize>().ok())
                        .map(|i| line_of(text, "from", i, 0))
                        .unwrap_or(1);
                    format!("line {line}: {}: {}", v.location, v.message)
                })
                .collect();
            return Err(Error::InvalidSpec(msgs));
        }
        Ok(spec)
    }

    pub fn load(path: &std::path::Path) -> Result<BundleSpec> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::SpecParse {
            line: 0,
            column: 0,
            message: format!("{}: {e}", path.display()),
        })?;
        parse(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::Sampler;

    #[test]
    fn identity_multiplier() {
        let spec = BundleSpec::chain(2, -3.0, &[0, 1, 2], &[c(1.0), c(0.7)]);
        let m = multiplier(&spec, &GroupElement::identity(2), &CVec::from_vec(vec![c(0.1), c(0.2)])).unwrap();
        assert!(frob(&(m - CMat::identity(6, 6))) < 1e-14);
    }

    #[test]
    fn multiplier_is_lower_triangular() {
        let spec = BundleSpec::chain(2, -3.0, &[0, 1, 2], &[c(1.0), c(0.7)]);
        let mut s = Sampler::new(4);
        let m = multiplier(&spec, &s.group(2, 0.5), &s.point(2, 0.8)).unwrap();
        for b in spec.blocks() {
            for b2 in spec.blocks().iter().filter(|b2| b2.j > b.j) {
                let v = m.view((b.offset, b2.offset), (b.size(), b2.size()));
                assert!(v.iter().all(|x| x.norm() < 1e-15));
            }
        }
    }

    #[test]
    fn validator_rejects_non_filiform_product() {
        let bad = BundleSpec::chain(2, -3.0, &[1, 2, 1], &[c(1.0), c(1.0)]);
        let r = validate(&bad);
        assert!(!r.is_valid());
        assert!(r.violations[0].message.contains("not filiform"));
        let ok = BundleSpec::chain(2, -3.0, &[1, 2, 1], &[c(1.0), c(0.0)]);
        assert!(validate(&ok).is_valid());
    }

    #[test]
    fn disc_chain_is_valid() {
        assert!(validate(&BundleSpec::disc_chain(2, -2.0, 1.0)).is_valid());
        assert!(validate(&BundleSpec::scalar(3, -1.0)).is_valid());
    }

    #[test]
    fn parse_reports_lines() {
        let text = "{\n \"n\": 2,\n \"lambda\": -3,\n \"layers\": [[{\"m\":0,\"d\":1}],[{\"m\":1,\"d\":1}]],\n \"edges\": [\n  {\"j\":1,\"from\":0,\"to\":0,\"y\":[[1,0],[2,0]]}\n ]\n}";
        match file::parse(text) {
            Err(Error::SpecParse { line, .. }) => assert_eq!(line, 6),
            other => panic!("unexpected {other:?}"),
        }
        let syntax = "{\n \"n\": 2,\n \"lambda\": oops\n}";
        assert!(matches!(file::parse(syntax), Err(Error::SpecParse { line: 3, .. })));
    }

    #[test]
    fn gauge_comparison() {
        let a = BundleSpec::disc_chain(2, -3.0, 1.0);
        let b = BundleSpec::chain(1, -3.0, &[0, 0, 0], &[c(2.0), C64::new(0.0, 5.0)]);
        assert_eq!(gauge_equivalent(&a, &b), GaugeVerdict::Isomorphic);
        let z = BundleSpec::chain(1, -3.0, &[0, 0, 0], &[c(2.0), c(0.0)]);
        assert_eq!(gauge_equivalent(&a, &z), GaugeVerdict::Different);
    }
}
