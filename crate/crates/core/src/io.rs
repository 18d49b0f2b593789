//! Single-file JSON instance documents.
//!
//! Objects live in named sections and refer to each other by name. Complex entries are
//! `[re, im]` pairs of finite doubles; matrices are lists of rows. Unknown fields are
//! rejected, and every error names the JSON path it arose at.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::action_space::{
    solve_transporters, verify_bispace, verify_equivalence, verify_preequivalence, BispaceParts, GroupoidBispace,
    GroupoidEquivalence, PreEquivalence,
};
use crate::equiv_bundle::{verify_equivalence_bundle, verify_hypoequivalence, BundleSpace};
use crate::error::{Error, Result};
use crate::fell_bundle::{verify_fell_bundle, FellBundle};
use crate::groupoid::{verify_groupoid, FiniteGroupoid, GroupoidParts};
use crate::linalg::{CMat, MatrixSubspace};
use crate::quotient_bundle::{build_quotient_bundle, morita_witness, verify_equivalence_p, MoritaWitness, QuotientBundle};
use crate::report::{Report, Status};
use crate::scalar::{Real, C};
use crate::tensor_compose::{verify_hypoequiv_k, TensorBundle};

pub const FORMAT_VERSION: &str = "1";

pub type Table = Vec<Vec<Option<usize>>>;
pub type MatrixDoc = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDocument {
    pub version: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub groupoids: Vec<GroupoidDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bispaces: Vec<BispaceDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub preequivalences: Vec<PreequivalenceDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub equivalences: Vec<EquivalenceDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fell_bundles: Vec<FellBundleDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bundle_spaces: Vec<BundleSpaceDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub certificates: Vec<CertificateDoc>,
}

impl Default for InstanceDocument {
    fn default() -> Self {
        InstanceDocument {
            version: FORMAT_VERSION.into(),
            groupoids: Vec::new(),
            bispaces: Vec::new(),
            preequivalences: Vec::new(),
            equivalences: Vec::new(),
            fell_bundles: Vec::new(),
            bundle_spaces: Vec::new(),
            certificates: Vec::new(),
        }
    }
}

/// Arrows are `0..src.len()`; `comp[g][h]` is `g∘h` (first `h`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupoidDoc {
    pub name: String,
    pub units: Vec<usize>,
    pub src: Vec<usize>,
    pub rng: Vec<usize>,
    pub inv: Vec<usize>,
    pub comp: Table,
}

/// `left_act[g][x]` is `g·x`, `right_act[x][h]` is `x·h`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BispaceDoc {
    pub name: String,
    pub left: String,
    pub right: String,
    pub r: Vec<usize>,
    pub s: Vec<usize>,
    pub left_act: Table,
    pub right_act: Table,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreequivalenceDoc {
    pub name: String,
    pub space: String,
    pub lam_left: Table,
    pub lam_right: Table,
}

/// Transporters are solved from the actions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquivalenceDoc {
    pub name: String,
    pub space: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubspaceDoc {
    pub rows: usize,
    pub cols: usize,
    /// A spanning set; it is orthonormalized on load.
    pub basis: Vec<MatrixDoc>,
}

/// One fibre per arrow; unit dimensions are read off the unit fibres.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FellBundleDoc {
    pub name: String,
    pub groupoid: String,
    pub fibres: Vec<SubspaceDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

fn one() -> f64 {
    1.0
}

fn is_one(w: &f64) -> bool {
    *w == 1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleSpaceDoc {
    pub name: String,
    /// A pre-equivalence or an equivalence.
    pub base: String,
    pub left: String,
    pub right: String,
    pub fibres: Vec<SubspaceDoc>,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub left_weight: f64,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub right_weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateDoc {
    pub target: String,
    pub kind: String,
    pub report: Report,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub morita: Vec<MoritaWitness>,
}

fn parse_err(path: impl Into<String>, msg: impl Into<String>) -> Error {
    Error::Parse { path: path.into(), msg: msg.into() }
}

pub fn parse_instance(text: &str) -> Result<InstanceDocument> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: InstanceDocument = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        parse_err(path, e.into_inner().to_string())
    })?;
    if doc.version != FORMAT_VERSION {
        return Err(parse_err("version", format!("unsupported version {:?}", doc.version)));
    }
    check_finite(&doc)?;
    Ok(doc)
}

pub fn emit_instance(doc: &InstanceDocument) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("documents always serialize");
    s.push('\n');
    s
}

fn check_finite(doc: &InstanceDocument) -> Result<()> {
    let subspaces = |section: &str, i: usize, fibres: &[SubspaceDoc]| -> Result<()> {
        for (f, sub) in fibres.iter().enumerate() {
            for (b, m) in sub.basis.iter().enumerate() {
                for (r, row) in m.iter().enumerate() {
                    for (c, z) in row.iter().enumerate() {
                        if !z[0].is_finite() || !z[1].is_finite() {
                            return Err(parse_err(
                                format!("{section}[{i}].fibres[{f}].basis[{b}][{r}][{c}]"),
                                "complex entries must be finite",
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    };
    for (i, b) in doc.fell_bundles.iter().enumerate() {
        subspaces("fell_bundles", i, &b.fibres)?;
        if b.tol.is_some_and(|t| !(t.is_finite() && t > 0.0)) {
            return Err(parse_err(format!("fell_bundles[{i}].tol"), "tolerance must be positive"));
        }
    }
    for (i, b) in doc.bundle_spaces.iter().enumerate() {
        subspaces("bundle_spaces", i, &b.fibres)?;
        for (w, field) in [(b.left_weight, "left_weight"), (b.right_weight, "right_weight")] {
            if !(w.is_finite() && w > 0.0) {
                return Err(parse_err(format!("bundle_spaces[{i}].{field}"), "weights must be positive and finite"));
            }
        }
        if b.tol.is_some_and(|t| !(t.is_finite() && t > 0.0)) {
            return Err(parse_err(format!("bundle_spaces[{i}].tol"), "tolerance must be positive"));
        }
    }
    Ok(())
}

fn flatten(t: &Table, rows: usize, cols: usize, path: &str) -> Result<Vec<Option<usize>>> {
    if t.len() != rows || t.iter().any(|r| r.len() != cols) {
        return Err(parse_err(path, format!("expected a {rows}×{cols} table")));
    }
    Ok(t.iter().flatten().copied().collect())
}

fn unflatten(v: &[Option<usize>], cols: usize) -> Table {
    if cols == 0 {
        return Vec::new();
    }
    v.chunks(cols).map(<[_]>::to_vec).collect()
}

fn matrix_from_doc(m: &MatrixDoc, rows: usize, cols: usize, path: &str) -> Result<CMat<f64>> {
    if m.len() != rows || m.iter().any(|r| r.len() != cols) {
        return Err(parse_err(path, format!("expected a {rows}×{cols} matrix")));
    }
    Ok(CMat::from_fn(rows, cols, |i, j| C::new(m[i][j][0], m[i][j][1])))
}

pub fn matrix_to_doc(m: &CMat<f64>) -> MatrixDoc {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

fn subspace_from_doc(s: &SubspaceDoc, tol: f64, path: &str) -> Result<MatrixSubspace<f64>> {
    let gens = s
        .basis
        .iter()
        .enumerate()
        .map(|(b, m)| matrix_from_doc(m, s.rows, s.cols, &format!("{path}.basis[{b}]")))
        .collect::<Result<Vec<_>>>()?;
    MatrixSubspace::span(s.rows, s.cols, &gens, tol).map_err(|e| parse_err(path, e.to_string()))
}

pub fn subspace_to_doc(s: &MatrixSubspace<f64>) -> SubspaceDoc {
    let (rows, cols) = s.shape();
    SubspaceDoc { rows, cols, basis: s.basis().iter().map(matrix_to_doc).collect() }
}

/// Which section a name was declared in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Kind {
    Groupoid,
    Bispace,
    Preequivalence,
    Equivalence,
    FellBundle,
    BundleSpace,
}

impl Kind {
    pub fn label(self) -> &'static str {
        match self {
            Kind::Groupoid => "groupoid",
            Kind::Bispace => "bispace",
            Kind::Preequivalence => "preequivalence",
            Kind::Equivalence => "equivalence",
            Kind::FellBundle => "fell_bundle",
            Kind::BundleSpace => "bundle_space",
        }
    }
}

/// A document with every reference resolved.
#[derive(Clone, Debug)]
pub struct Instance {
    pub groupoids: BTreeMap<String, Arc<FiniteGroupoid>>,
    pub bispaces: BTreeMap<String, GroupoidBispace>,
    /// Pre-equivalences and equivalences; the latter with solved transporters.
    pub bases: BTreeMap<String, PreEquivalence>,
    pub fell_bundles: BTreeMap<String, Arc<FellBundle<f64>>>,
    pub bundle_spaces: BTreeMap<String, BundleSpace<f64>>,
    /// Base name of each bundle space.
    pub bundle_bases: BTreeMap<String, String>,
    /// Every object in document order.
    pub objects: Vec<(Kind, String)>,
}

impl Instance {
    pub fn kind_of(&self, name: &str) -> Option<Kind> {
        self.objects.iter().find(|(_, n)| n == name).map(|(k, _)| *k)
    }

    pub fn resolve(doc: &InstanceDocument) -> Result<Self> {
        Self::resolve_with_tol(doc, None)
    }

    /// `tol` overrides every tolerance given in the document.
    pub fn resolve_with_tol(doc: &InstanceDocument, tol: Option<f64>) -> Result<Self> {
        let mut inst = Instance {
            groupoids: BTreeMap::new(),
            bispaces: BTreeMap::new(),
            bases: BTreeMap::new(),
            fell_bundles: BTreeMap::new(),
            bundle_spaces: BTreeMap::new(),
            bundle_bases: BTreeMap::new(),
            objects: Vec::new(),
        };
        let mut declare = |kind: Kind, name: &str, path: String| -> Result<()> {
            if inst.objects.iter().any(|(_, n)| n == name) {
                return Err(parse_err(path, format!("duplicate name {name:?}")));
            }
            inst.objects.push((kind, name.to_string()));
            Ok(())
        };
        for (i, g) in doc.groupoids.iter().enumerate() {
            declare(Kind::Groupoid, &g.name, format!("groupoids[{i}].name"))?;
        }
        for (i, b) in doc.bispaces.iter().enumerate() {
            declare(Kind::Bispace, &b.name, format!("bispaces[{i}].name"))?;
        }
        for (i, p) in doc.preequivalences.iter().enumerate() {
            declare(Kind::Preequivalence, &p.name, format!("preequivalences[{i}].name"))?;
        }
        for (i, e) in doc.equivalences.iter().enumerate() {
            declare(Kind::Equivalence, &e.name, format!("equivalences[{i}].name"))?;
        }
        for (i, b) in doc.fell_bundles.iter().enumerate() {
            declare(Kind::FellBundle, &b.name, format!("fell_bundles[{i}].name"))?;
        }
        for (i, b) in doc.bundle_spaces.iter().enumerate() {
            declare(Kind::BundleSpace, &b.name, format!("bundle_spaces[{i}].name"))?;
        }

        for (i, g) in doc.groupoids.iter().enumerate() {
            let n = g.src.len();
            let path = format!("groupoids[{i}]");
            let comp = flatten(&g.comp, n, n, &format!("{path}.comp"))?;
            let parts = GroupoidParts { src: g.src.clone(), rng: g.rng.clone(), inv: g.inv.clone(), comp, units: g.units.clone() };
            let gpd = FiniteGroupoid::from_parts(parts).map_err(|e| parse_err(&path, e.to_string()))?;
            inst.groupoids.insert(g.name.clone(), Arc::new(gpd));
        }
        let groupoid = |inst: &Instance, name: &str, path: String| {
            inst.groupoids.get(name).cloned().ok_or_else(|| parse_err(path, format!("unknown groupoid {name:?}")))
        };
        for (i, b) in doc.bispaces.iter().enumerate() {
            let path = format!("bispaces[{i}]");
            let left = groupoid(&inst, &b.left, format!("{path}.left"))?;
            let right = groupoid(&inst, &b.right, format!("{path}.right"))?;
            let n = b.r.len();
            let parts = BispaceParts {
                left_act: flatten(&b.left_act, left.n_arrows(), n, &format!("{path}.left_act"))?,
                right_act: flatten(&b.right_act, n, right.n_arrows(), &format!("{path}.right_act"))?,
                left,
                right,
                r: b.r.clone(),
                s: b.s.clone(),
            };
            let sp = GroupoidBispace::from_parts(parts).map_err(|e| parse_err(&path, e.to_string()))?;
            inst.bispaces.insert(b.name.clone(), sp);
        }
        let bispace = |inst: &Instance, name: &str, path: String| {
            inst.bispaces.get(name).cloned().ok_or_else(|| parse_err(path, format!("unknown bispace {name:?}")))
        };
        for (i, p) in doc.preequivalences.iter().enumerate() {
            let path = format!("preequivalences[{i}]");
            let sp = bispace(&inst, &p.space, format!("{path}.space"))?;
            let n = sp.n_points();
            let ll = flatten(&p.lam_left, n, n, &format!("{path}.lam_left"))?;
            let lr = flatten(&p.lam_right, n, n, &format!("{path}.lam_right"))?;
            let pre = PreEquivalence::from_parts(sp, ll, lr).map_err(|e| parse_err(&path, e.to_string()))?;
            inst.bases.insert(p.name.clone(), pre);
        }
        for (i, e) in doc.equivalences.iter().enumerate() {
            let path = format!("equivalences[{i}]");
            let sp = bispace(&inst, &e.space, format!("{path}.space"))?;
            let pre = solve_transporters(sp).map_err(|err| parse_err(&path, err.to_string()))?;
            inst.bases.insert(e.name.clone(), pre);
        }
        for (i, b) in doc.fell_bundles.iter().enumerate() {
            let path = format!("fell_bundles[{i}]");
            let g = groupoid(&inst, &b.groupoid, format!("{path}.groupoid"))?;
            let t = tol.or(b.tol).unwrap_or(f64::default_tol());
            if b.fibres.len() != g.n_arrows() {
                return Err(parse_err(format!("{path}.fibres"), format!("expected {} fibres", g.n_arrows())));
            }
            let fibres = b
                .fibres
                .iter()
                .enumerate()
                .map(|(f, s)| subspace_from_doc(s, t, &format!("{path}.fibres[{f}]")))
                .collect::<Result<Vec<_>>>()?;
            let dims = g.units().iter().map(|&u| (u, fibres[u].shape().0)).collect();
            let fb = FellBundle::new(g, dims, fibres).map_err(|e| parse_err(&path, e.to_string()))?.with_tol(t);
            inst.fell_bundles.insert(b.name.clone(), Arc::new(fb));
        }
        for (i, b) in doc.bundle_spaces.iter().enumerate() {
            let path = format!("bundle_spaces[{i}]");
            let base = inst
                .bases
                .get(&b.base)
                .cloned()
                .ok_or_else(|| parse_err(format!("{path}.base"), format!("unknown base {:?}", b.base)))?;
            let bundle = |name: &str, field: &str| {
                inst.fell_bundles
                    .get(name)
                    .cloned()
                    .ok_or_else(|| parse_err(format!("{path}.{field}"), format!("unknown fell bundle {name:?}")))
            };
            let (left, right) = (bundle(&b.left, "left")?, bundle(&b.right, "right")?);
            let t = tol.or(b.tol).unwrap_or(f64::default_tol());
            let fibres = b
                .fibres
                .iter()
                .enumerate()
                .map(|(f, s)| subspace_from_doc(s, t, &format!("{path}.fibres[{f}]")))
                .collect::<Result<Vec<_>>>()?;
            let m = BundleSpace::new(base, left, right, fibres)
                .and_then(|m| m.with_weights(b.left_weight, b.right_weight))
                .map_err(|e| parse_err(&path, e.to_string()))?
                .with_tol(t);
            inst.bundle_spaces.insert(b.name.clone(), m);
            inst.bundle_bases.insert(b.name.clone(), b.base.clone());
        }
        Ok(inst)
    }

    /// The verification suite matching the object's section.
    pub fn verify(&self, name: &str) -> Result<Report> {
        let kind = self.kind_of(name).ok_or_else(|| Error::Lookup(format!("no object named {name:?}")))?;
        let mut r = match kind {
            Kind::Groupoid => verify_groupoid(&self.groupoids[name]),
            Kind::Bispace => verify_bispace(&self.bispaces[name], false),
            Kind::Preequivalence => verify_preequivalence(&self.bases[name]),
            Kind::Equivalence => verify_equivalence(&self.bases[name]),
            Kind::FellBundle => verify_fell_bundle(&self.fell_bundles[name]),
            Kind::BundleSpace => {
                let m = &self.bundle_spaces[name];
                if self.is_equivalence_base(name) {
                    verify_equivalence_bundle(m)
                } else {
                    verify_hypoequivalence(m)
                }
            }
        };
        r.subject = format!("{} {name}: {}", kind.label(), r.subject);
        Ok(r)
    }

    fn is_equivalence_base(&self, bundle_space: &str) -> bool {
        self.bundle_bases.get(bundle_space).is_some_and(|b| self.kind_of(b) == Some(Kind::Equivalence))
    }
}

/// Exit status of a report: 0 pass, 1 axiom failure, 2 structural failure.
pub fn exit_code(status: Status) -> i32 {
    match status {
        Status::Pass => 0,
        Status::AxiomFail => 1,
        Status::StructuralFail => 2,
    }
}

/// The most severe of several statuses.
pub fn worst(statuses: impl IntoIterator<Item = Status>) -> Status {
    statuses.into_iter().fold(Status::Pass, |acc, s| match (acc, s) {
        (Status::StructuralFail, _) | (_, Status::StructuralFail) => Status::StructuralFail,
        (Status::AxiomFail, _) | (_, Status::AxiomFail) => Status::AxiomFail,
        _ => Status::Pass,
    })
}

pub struct DocBuilder {
    pub doc: InstanceDocument,
}

impl DocBuilder {
    pub fn new() -> Self {
        DocBuilder { doc: InstanceDocument::default() }
    }

    pub fn from_doc(doc: InstanceDocument) -> Self {
        DocBuilder { doc }
    }

    pub fn groupoid(&mut self, name: &str, g: &FiniteGroupoid) -> &mut Self {
        let p = g.parts();
        let n = p.src.len();
        self.doc.groupoids.push(GroupoidDoc {
            name: name.into(),
            units: p.units,
            src: p.src,
            rng: p.rng,
            inv: p.inv,
            comp: unflatten(&p.comp, n),
        });
        self
    }

    pub fn bispace(&mut self, name: &str, left: &str, right: &str, b: &GroupoidBispace) -> &mut Self {
        let p = b.parts();
        self.doc.bispaces.push(BispaceDoc {
            name: name.into(),
            left: left.into(),
            right: right.into(),
            left_act: unflatten(&p.left_act, p.r.len()),
            right_act: unflatten(&p.right_act, p.right.n_arrows()),
            r: p.r,
            s: p.s,
        });
        self
    }

    pub fn preequivalence(&mut self, name: &str, space: &str, pre: &PreEquivalence) -> &mut Self {
        let n = pre.n_points();
        let (_, ll, lr) = pre.clone().into_parts();
        self.doc.preequivalences.push(PreequivalenceDoc {
            name: name.into(),
            space: space.into(),
            lam_left: unflatten(&ll, n),
            lam_right: unflatten(&lr, n),
        });
        self
    }

    pub fn equivalence(&mut self, name: &str, space: &str) -> &mut Self {
        self.doc.equivalences.push(EquivalenceDoc { name: name.into(), space: space.into() });
        self
    }

    pub fn fell_bundle(&mut self, name: &str, groupoid: &str, b: &FellBundle<f64>) -> &mut Self {
        self.doc.fell_bundles.push(FellBundleDoc {
            name: name.into(),
            groupoid: groupoid.into(),
            fibres: b.fibres().iter().map(subspace_to_doc).collect(),
            tol: None,
        });
        self
    }

    pub fn bundle_space(&mut self, name: &str, base: &str, left: &str, right: &str, m: &BundleSpace<f64>) -> &mut Self {
        let (lw, rw) = m.weights();
        self.doc.bundle_spaces.push(BundleSpaceDoc {
            name: name.into(),
            base: base.into(),
            left: left.into(),
            right: right.into(),
            fibres: m.fibres().iter().map(subspace_to_doc).collect(),
            left_weight: lw,
            right_weight: rw,
            tol: None,
        });
        self
    }

    pub fn build(self) -> InstanceDocument {
        self.doc
    }
}

impl Default for DocBuilder {
    fn default() -> Self {
        Self::new()
    }
}

/// Everything `compose` produces for a pair of bundle spaces.
pub struct Composition {
    pub name: String,
    pub tensor: Arc<TensorBundle<f64>>,
    pub quotient: QuotientBundle<f64>,
    pub certificates: Vec<CertificateDoc>,
    /// The input document extended by the balanced-product equivalence, the realized
    /// quotient bundle when every fibre has a product realization, and the certificates.
    pub document: InstanceDocument,
    pub status: Status,
}

/// Builds `K = M ⊗ N`, the rebalancing maps and the quotient `P`, and certifies each stage.
pub fn compose_instance(doc: &InstanceDocument, inst: &Instance, left: &str, right: &str) -> Result<Composition> {
    let find = |name: &str| {
        let m = inst.bundle_spaces.get(name).ok_or_else(|| Error::Lookup(format!("no bundle space {name:?}")))?;
        let d = doc.bundle_spaces.iter().find(|b| b.name == name).expect("resolved from this document");
        if inst.kind_of(&d.base) != Some(Kind::Equivalence) {
            return Err(Error::Precondition(format!("{name} is not over a declared equivalence")));
        }
        Ok((m, d))
    };
    let ((m, md), (n, nd)) = (find(left)?, find(right)?);
    if md.right != nd.left {
        return Err(Error::Composition(format!("{left} ends at {} but {right} starts at {}", md.right, nd.left)));
    }
    let x_eq = GroupoidEquivalence::from_preequivalence(inst.bases[&md.base].clone())?;
    let y_eq = GroupoidEquivalence::from_preequivalence(inst.bases[&nd.base].clone())?;
    let k = Arc::new(TensorBundle::new(Arc::new(m.clone()), Arc::new(n.clone()))?);
    let p = build_quotient_bundle(k.clone(), &x_eq, &y_eq)?;
    let name = format!("{left}*{right}");

    let mut certificates = Vec::new();
    let k_report = verify_hypoequiv_k(&k);
    let p_report = verify_equivalence_p(&p);
    let status = worst([k_report.status, p_report.status]);
    certificates.push(CertificateDoc { target: name.clone(), kind: "tensor-hypo-equivalence".into(), report: k_report, morita: Vec::new() });
    let mut morita = Vec::new();
    let mut notes = Vec::new();
    for c in 0..p.n_classes() {
        match morita_witness(&p, c) {
            Ok(w) => morita.push(w),
            Err(e) => notes.push(format!("class {c}: {e}")),
        }
    }
    let mut p_report = p_report;
    p_report.notes.extend(notes);
    certificates.push(CertificateDoc { target: name.clone(), kind: "quotient-equivalence".into(), report: p_report, morita });

    let mut b = DocBuilder::from_doc(doc.clone());
    let g_name = doc.fell_bundles.iter().find(|f| f.name == md.left).map(|f| f.groupoid.clone()).expect("resolved");
    let d_name = doc.fell_bundles.iter().find(|f| f.name == nd.right).map(|f| f.groupoid.clone()).expect("resolved");
    let space_name = format!("{name}.space");
    let base_name = format!("{name}.base");
    b.bispace(&space_name, &g_name, &d_name, p.balanced().equivalence().space());
    b.equivalence(&base_name, &space_name);
    let realized: Result<Vec<MatrixSubspace<f64>>> = (0..p.n_classes()).map(|c| Ok(p.realize_as_products(c)?.span)).collect();
    match realized.and_then(|fibres| BundleSpace::new(p.balanced().equivalence().pre().clone(), m.left_arc().clone(), n.right_arc().clone(), fibres)) {
        Ok(real) => {
            b.bundle_space(&name, &base_name, &md.left, &nd.right, &real);
        }
        Err(e) => {
            if let Some(c) = certificates.last_mut() {
                c.report.notes.push(format!("no matrix realization emitted: {e}"));
            }
        }
    }
    b.doc.certificates.extend(certificates.iter().cloned());
    Ok(Composition { name, tensor: k, quotient: p, certificates, document: b.build(), status })
}

/// Human-readable summary of a document and its certificates.
pub fn summarize(doc: &InstanceDocument) -> String {
    let mut s = format!("instance document, version {}\n", doc.version);
    for g in &doc.groupoids {
        s.push_str(&format!("groupoid {}: {} arrows, {} units\n", g.name, g.src.len(), g.units.len()));
    }
    for b in &doc.bispaces {
        s.push_str(&format!("bispace {}: {} points, {} -> {}\n", b.name, b.r.len(), b.left, b.right));
    }
    for p in &doc.preequivalences {
        s.push_str(&format!("preequivalence {} over {}\n", p.name, p.space));
    }
    for e in &doc.equivalences {
        s.push_str(&format!("equivalence {} over {}\n", e.name, e.space));
    }
    for b in &doc.fell_bundles {
        let dims: Vec<usize> = b.fibres.iter().map(|f| f.basis.len()).collect();
        s.push_str(&format!("fell bundle {} over {}: fibre spans {:?}\n", b.name, b.groupoid, dims));
    }
    for b in &doc.bundle_spaces {
        let dims: Vec<usize> = b.fibres.iter().map(|f| f.basis.len()).collect();
        s.push_str(&format!("bundle space {} over {} ({} | {}): fibre spans {:?}\n", b.name, b.base, b.left, b.right, dims));
    }
    if doc.certificates.is_empty() {
        s.push_str("no certificates\n");
    }
    for c in &doc.certificates {
        s.push_str(&format!("\ncertificate {} for {}\n{}", c.kind, c.target, c.report));
        for w in &c.morita {
            s.push_str(&format!(
                "  morita class {}: dim {}, spans {}/{} and {}/{}, compatibility {:.3e}, norms {:.3e}, transporters {}\n",
                w.class,
                w.dim,
                w.fullness_left,
                w.target_left,
                w.fullness_right,
                w.target_right,
                w.compatibility_residual,
                w.norm_residual,
                &w.transporter_table_digest[..16]
            ));
        }
    }
    s
}
