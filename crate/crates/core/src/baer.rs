//! Extensions with abelian kernel: Schreier congruences and their Mal'tsev
//! operation, directions, monoid actions and semidirect products, extension
//! equivalence, Baer sums and push forwards.

use std::sync::Arc;

use crate::algebra::{subalgebra, Algebra, El, Kind, Table};
use crate::congruence::{kernel_pair, quotient, Congruence};
use crate::error::{Error, Result};
use crate::hom::{all_homs, Hom};
use crate::points::{classify, Point, SigmaClass};
use crate::relation::{pullback, Relation};

/// A congruence whose `(d0, s0)` point is Schreier, carrying the translator
/// form of the retraction: `q[i]` is the unique kernel element `t` with
/// `t * u = v` for the i-th pair `(u, v)`.
#[derive(Debug, Clone)]
pub struct SchreierCongruence {
    pub rel: Relation,
    pub q: Vec<El>,
    /// `T = {t : unit R t}`, the kernel of `d0` seen inside the base carrier.
    pub kernel: Vec<El>,
}

pub fn schreier_congruence(rel: Relation) -> Result<SchreierCongruence> {
    if !rel.base().kind().is_pointed() {
        return Err(Error::UnsupportedKind("Schreier congruences need a pointed kind"));
    }
    if !rel.is_equivalence() {
        return Err(Error::Shape("relation is not an equivalence".into()));
    }
    let cls = classify(&rel.point(), SigmaClass::Schreier)?;
    let Some(retraction) = cls.retraction else {
        return Err(Error::NotSchreier);
    };
    // retraction[i] is the pair-carrier index of (unit, t); keep t.
    let q: Vec<El> = retraction.iter().map(|&ri| rel.pairs()[ri].1).collect();
    let unit = rel.base().unit();
    let kernel: Vec<El> = rel
        .pairs()
        .iter()
        .filter(|&&(u, _)| u == unit)
        .map(|&(_, t)| t)
        .collect();
    Ok(SchreierCongruence { rel, q, kernel })
}

impl SchreierCongruence {
    pub fn base(&self) -> &Arc<Algebra> {
        self.rel.base()
    }

    /// The unique kernel translator `t` with `t * u = v`, for related `u, v`.
    pub fn translate(&self, u: El, v: El) -> Option<El> {
        self.rel.index_of((u, v)).map(|i| self.q[i])
    }
}

/// Report on the three equivalent characterizations of abelianness of a
/// Schreier congruence: (i) the kernel of `d0` is an abelian group, (ii) the
/// translator of `(x, x*t)` does not depend on the choice of `x` in a class,
/// (iii) `p(aRbRc) = q(bRa) * c` is a Mal'tsev homomorphism.
#[derive(Debug, Clone)]
pub struct SchequReport {
    pub kernel_abelian: bool,
    pub uniform_translation: bool,
    pub malcev_homomorphism: bool,
    pub witness: Option<Vec<El>>,
}

impl SchequReport {
    pub fn all_equivalent(&self) -> bool {
        self.kernel_abelian == self.uniform_translation
            && self.uniform_translation == self.malcev_homomorphism
    }

    pub fn abelian(&self) -> bool {
        self.kernel_abelian && self.uniform_translation && self.malcev_homomorphism
    }
}

pub fn check_schequ(sc: &SchreierCongruence) -> SchequReport {
    let a = sc.base();
    let unit = a.unit();
    let mut witness = None;

    // (i) T is an abelian group under the pointed operation.
    let mut kernel_abelian = true;
    'outer: for &t in &sc.kernel {
        if !sc.kernel.iter().any(|&s| a.jt(t, s) == unit && a.jt(s, t) == unit) {
            kernel_abelian = false;
            witness = Some(vec![t]);
            break;
        }
        for &s in &sc.kernel {
            if a.jt(t, s) != a.jt(s, t) {
                kernel_abelian = false;
                witness = Some(vec![t, s]);
                break 'outer;
            }
        }
    }

    // (ii) q(x R (x*t)) = q(x' R (x'*t)) whenever 1 R t and x R x'.
    let mut uniform_translation = true;
    'uni: for &t in &sc.kernel {
        for &(x, xp) in sc.rel.pairs() {
            let qx = sc.translate(x, a.jt(x, t)).expect("x R x*t");
            let qxp = sc.translate(xp, a.jt(xp, t)).expect("x' R x'*t");
            if qx != qxp {
                uniform_translation = false;
                if witness.is_none() {
                    witness = Some(vec![t, x, xp]);
                }
                break 'uni;
            }
        }
    }

    // (iii) p is a homomorphism from the triple fiber product.
    let triples = admissible_triples(sc);
    let p = |a_: El, b: El, c: El| a.jt(sc.translate(b, a_).expect("b R a"), c);
    let mut malcev_homomorphism = true;
    // Mal'tsev axioms hold definitionally; asserted anyway.
    for &(x, y, z) in &triples {
        if x == y && p(x, y, z) != z || y == z && p(x, y, z) != x {
            malcev_homomorphism = false;
            witness.get_or_insert(vec![x, y, z]);
        }
    }
    'hom: for ti in 0..a.kind().op_names().len() {
        for &(a1, b1, c1) in &triples {
            for &(a2, b2, c2) in &triples {
                let (a3, b3, c3) = (a.op(ti, a1, a2), a.op(ti, b1, b2), a.op(ti, c1, c2));
                if p(a3, b3, c3) != a.op(ti, p(a1, b1, c1), p(a2, b2, c2)) {
                    malcev_homomorphism = false;
                    if witness.is_none() {
                        witness = Some(vec![a1, b1, c1, a2, b2, c2]);
                    }
                    break 'hom;
                }
            }
        }
    }

    SchequReport { kernel_abelian, uniform_translation, malcev_homomorphism, witness }
}

fn admissible_triples(sc: &SchreierCongruence) -> Vec<(El, El, El)> {
    let mut out = Vec::new();
    for &(x, y) in sc.rel.pairs() {
        for &(y2, z) in sc.rel.pairs() {
            if y2 == y {
                out.push((x, y, z));
            }
        }
    }
    out
}

/// The Mal'tsev operation table of an abelian Schreier congruence.
#[derive(Debug, Clone)]
pub struct MalcevOp {
    pub triples: Vec<(El, El, El)>,
    pub values: Vec<El>,
}

impl MalcevOp {
    pub fn apply(&self, a: El, b: El, c: El) -> Option<El> {
        self.triples.iter().position(|&t| t == (a, b, c)).map(|i| self.values[i])
    }
}

pub fn malcev_operation(sc: &SchreierCongruence) -> Result<MalcevOp> {
    let report = check_schequ(sc);
    if !report.abelian() {
        return Err(Error::NotAbelian);
    }
    let a = sc.base();
    let triples = admissible_triples(sc);
    let values: Vec<El> = triples
        .iter()
        .map(|&(x, y, z)| a.jt(sc.translate(y, x).expect("y R x"), z))
        .collect();
    let op = MalcevOp { triples, values };
    // Re-assert the axioms and commutativity p(a,b,c) = p(c,b,a).
    for (&(x, y, z), &v) in op.triples.iter().zip(&op.values) {
        if x == y && v != z {
            return Err(Error::Internal(format!("p({x},{y},{z}) != {z}")));
        }
        if y == z && v != x {
            return Err(Error::Internal(format!("p({x},{y},{z}) != {x}")));
        }
        if op.apply(z, y, x) != Some(v) {
            return Err(Error::Internal(format!("p not commutative at ({x},{y},{z})")));
        }
    }
    Ok(op)
}

/// An extension with abelian kernel: a surjective Sigma-special map whose
/// kernel congruence is an abelian Schreier congruence, with its Mal'tsev
/// operation.
#[derive(Debug, Clone)]
pub struct Extension {
    pub f: Hom,
    pub kernel_elems: Vec<El>,
    pub kernel_alg: Arc<Algebra>,
    pub kernel_incl: Hom,
    pub sc: SchreierCongruence,
    pub malcev: MalcevOp,
}

pub fn extension(f: &Hom) -> Result<Extension> {
    if !f.dom.kind().is_pointed() {
        return Err(Error::UnsupportedKind("extensions need a pointed kind"));
    }
    if let Some(miss) = f.first_missed() {
        return Err(Error::NotSurjective("extension epi".into(), miss));
    }
    let rel = kernel_pair(f).relation();
    let sc = schreier_congruence(rel).map_err(|e| match e {
        Error::NotSchreier => Error::NotAffine("kernel congruence is not Schreier".into()),
        other => other,
    })?;
    let malcev = malcev_operation(&sc).map_err(|e| match e {
        Error::NotAbelian => Error::NotAffine("kernel is not abelian".into()),
        other => other,
    })?;
    let unit = f.cod.unit();
    let kernel_elems: Vec<El> = f.dom.elements().filter(|&x| f.apply(x) == unit).collect();
    let (kernel_alg, kernel_incl) = subalgebra(&f.dom, &kernel_elems)?;
    Ok(Extension { f: f.clone(), kernel_elems, kernel_alg, kernel_incl, sc, malcev })
}

impl Extension {
    pub fn total(&self) -> &Arc<Algebra> {
        &self.f.dom
    }

    pub fn base(&self) -> &Arc<Algebra> {
        &self.f.cod
    }

    /// The difference of two f-equal elements as a kernel element of the
    /// total algebra: the unique `k` in `K[f]` with `k * u = v`.
    pub fn diff(&self, u: El, v: El) -> Option<El> {
        self.sc.translate(u, v)
    }

    /// Same, as a position in `kernel_elems`.
    pub fn diff_pos(&self, u: El, v: El) -> Option<usize> {
        self.diff(u, v).map(|k| self.kernel_elems.iter().position(|&e| e == k).unwrap())
    }
}

/// An abelian group object over a base: a monoid action of the base on an
/// abelian group, with the semidirect-product total and its split point.
#[derive(Debug, Clone)]
pub struct DirectionObject {
    pub base: Arc<Algebra>,
    pub kernel: Arc<Algebra>,
    /// `action[y][a]` is the image of kernel element `a` under phi(y).
    pub action: Vec<Vec<El>>,
    pub total: Arc<Algebra>,
    /// Total element index -> (kernel element, base element).
    pub pairs: Vec<(El, El)>,
    pub point: Point,
}

impl DirectionObject {
    pub fn new(base: Arc<Algebra>, kernel: Arc<Algebra>, action: Vec<Vec<El>>) -> Result<Self> {
        if base.kind() != Kind::Monoid || kernel.kind() != Kind::Monoid {
            return Err(Error::UnsupportedKind("direction objects are monoid-based"));
        }
        if !(kernel.is_group() && kernel.is_commutative()) {
            return Err(Error::KernelNotAbelian);
        }
        let (ny, na) = (base.order(), kernel.order());
        if action.len() != ny || action.iter().any(|row| row.len() != na) {
            return Err(Error::Shape("action table has the wrong shape".into()));
        }
        // phi(y) must be an endomorphism, phi(unit) the identity,
        // phi(y y') = phi(y) o phi(y').
        for y in 0..ny {
            let row = &action[y];
            if row[kernel.unit()] != kernel.unit() {
                return Err(Error::Shape(format!("phi({y}) does not fix the unit")));
            }
            for a in 0..na {
                if row[a] >= na {
                    return Err(Error::Shape("action value out of range".into()));
                }
                for b in 0..na {
                    if row[kernel.jt(a, b)] != kernel.jt(row[a], row[b]) {
                        return Err(Error::Shape(format!("phi({y}) is not an endomorphism")));
                    }
                }
            }
        }
        if (0..na).any(|a| action[base.unit()][a] != a) {
            return Err(Error::Shape("phi(unit) is not the identity".into()));
        }
        for y1 in 0..ny {
            for y2 in 0..ny {
                for a in 0..na {
                    if action[base.jt(y1, y2)][a] != action[y1][action[y2][a]] {
                        return Err(Error::Shape("phi is not a monoid homomorphism".into()));
                    }
                }
            }
        }
        let pairs: Vec<(El, El)> =
            (0..na).flat_map(|a| (0..ny).map(move |y| (a, y))).collect();
        let idx = |a: El, y: El| a * ny + y;
        let table = Table::from_fn(na * ny, |i, j| {
            let (a1, y1) = pairs[i];
            let (a2, y2) = pairs[j];
            idx(kernel.jt(a1, action[y1][a2]), base.jt(y1, y2))
        });
        let names = pairs
            .iter()
            .map(|&(a, y)| format!("{}|{}", kernel.name(a), base.name(y)))
            .collect();
        let total = Arc::new(Algebra::monoid(names, table, idx(kernel.unit(), base.unit()))?);
        let proj = Hom::new(total.clone(), base.clone(), pairs.iter().map(|&(_, y)| y).collect())?;
        let sect = Hom::new(
            base.clone(),
            total.clone(),
            base.elements().map(|y| idx(kernel.unit(), y)).collect(),
        )?;
        let point = Point::new(proj, sect)?;
        Ok(DirectionObject { base, kernel, action, total, pairs, point })
    }

    pub fn trivial(base: Arc<Algebra>, kernel: Arc<Algebra>) -> Result<Self> {
        let na = kernel.order();
        let action = vec![(0..na).collect::<Vec<_>>(); base.order()];
        DirectionObject::new(base, kernel, action)
    }

    pub fn index(&self, a: El, y: El) -> El {
        a * self.base.order() + y
    }

    /// The split extension this object forgets to.
    pub fn split_extension(&self) -> Result<Extension> {
        extension(&self.point.f)
    }
}

/// Kernel isomorphisms compatible with the two actions (bases must be the
/// same algebra). Each is an identification of the direction objects.
pub fn identify(d1: &DirectionObject, d2: &DirectionObject) -> Vec<Hom> {
    if d1.base != d2.base {
        return Vec::new();
    }
    crate::hom::all_isos(&d1.kernel, &d2.kernel)
        .into_iter()
        .filter(|k| {
            d1.base.elements().all(|y| {
                d1.kernel
                    .elements()
                    .all(|a| k.apply(d1.action[y][a]) == d2.action[y][k.apply(a)])
            })
        })
        .collect()
}

/// Action extracted from a Schreier point with abelian kernel, with the
/// bookkeeping needed to chart the semidirect rebuild against the source:
/// `chart[a]` is the source-total element carrying kernel index `a`, and
/// `reconstruction` is the isomorphism `total -> source` given by
/// `(a, y) -> a * s(y)`.
#[derive(Debug, Clone)]
pub struct ActionData {
    pub object: DirectionObject,
    pub chart: Vec<El>,
    pub reconstruction: Hom,
}

pub fn extract_action(p: &Point) -> Result<ActionData> {
    if p.total().kind() != Kind::Monoid {
        return Err(Error::UnsupportedKind("action extraction is monoid-based"));
    }
    let cls = classify(p, SigmaClass::Schreier)?;
    let Some(q) = cls.retraction else {
        return Err(Error::NotSchreier);
    };
    let chart = p.kernel_elems();
    let (k_alg, _k_incl) = subalgebra(p.total(), &chart)?;
    if !(k_alg.is_group() && k_alg.is_commutative()) {
        return Err(Error::KernelNotAbelian);
    }
    let x_alg = p.total();
    let kpos = |e: El| chart.iter().position(|&k| k == e).expect("kernel element");
    let action: Vec<Vec<El>> = p
        .base()
        .elements()
        .map(|y| chart.iter().map(|&k| kpos(q[x_alg.jt(p.s.apply(y), k)])).collect())
        .collect();
    let object = DirectionObject::new(p.base().clone(), k_alg, action)?;
    let recon_map: Vec<El> = object
        .pairs
        .iter()
        .map(|&(a, y)| x_alg.jt(chart[a], p.s.apply(y)))
        .collect();
    let reconstruction = Hom::new(object.total.clone(), x_alg.clone(), recon_map)
        .map_err(|e| Error::Internal(format!("semidirect rebuild is not a homomorphism: {e}")))?;
    if !reconstruction.is_bijective() {
        return Err(Error::Internal("semidirect rebuild is not bijective".into()));
    }
    Ok(ActionData { object, chart, reconstruction })
}

/// The direction of an extension: the quotient of its kernel-pair relation by
/// "same base point, same translator", packaged as an abelian group object
/// over the base, with the quotient map and the chart identifying the
/// extension's kernel with the direction kernel.
#[derive(Debug, Clone)]
pub struct DirectionData {
    pub object: DirectionObject,
    /// Quotient map from the kernel-pair carrier onto the direction total.
    pub q_map: Hom,
    /// Position in `ext.kernel_elems` -> direction kernel element.
    pub kernel_chart: Vec<El>,
}

pub fn direction(ext: &Extension) -> Result<DirectionData> {
    if ext.total().kind() != Kind::Monoid {
        return Err(Error::UnsupportedKind("direction construction is monoid-based"));
    }
    let rel = &ext.sc.rel;
    let f = &ext.f;
    let n = rel.pairs().len();

    // Class key: (base point, translator). Gate the decoding against the
    // Mal'tsev form (a,b) ~ (c,d) iff b = p(a, c, d).
    let keys: Vec<(El, El)> = rel
        .pairs()
        .iter()
        .enumerate()
        .map(|(i, &(u, _))| (f.apply(u), ext.sc.q[i]))
        .collect();
    for i in 0..n {
        for j in 0..n {
            let (a, b) = rel.pairs()[i];
            let (c, d) = rel.pairs()[j];
            let key_eq = keys[i] == keys[j];
            let p_eq = f.apply(a) == f.apply(c)
                && ext.malcev.apply(a, c, d).map_or(false, |p| p == b);
            if key_eq != p_eq {
                return Err(Error::RelationNotEquivalence(rel.pairs()[i], rel.pairs()[j]));
            }
        }
    }
    let mut distinct: Vec<(El, El)> = Vec::new();
    let ids: Vec<usize> = keys
        .iter()
        .map(|&k| match distinct.iter().position(|&d| d == k) {
            Some(i) => i,
            None => {
                distinct.push(k);
                distinct.len() - 1
            }
        })
        .collect();
    let cong = Congruence::new(rel.carrier().clone(), &ids)
        .map_err(|e| Error::Internal(format!("direction relation is not a congruence: {e}")))?;
    let (d_alg, d_proj) = quotient(&cong)?;

    // delta : D -> Y and its section.
    let mut delta_map = vec![0; d_alg.order()];
    for (i, &(u, _)) in rel.pairs().iter().enumerate() {
        delta_map[d_proj.apply(i)] = f.apply(u);
    }
    let delta = Hom::new(d_alg.clone(), f.cod.clone(), delta_map)?;
    let mut sect_map = vec![usize::MAX; f.cod.order()];
    for x in f.dom.elements() {
        let y = f.apply(x);
        if sect_map[y] == usize::MAX {
            let diag = rel.index_of((x, x)).expect("diagonal");
            sect_map[y] = d_proj.apply(diag);
        }
    }
    let sect = Hom::new(f.cod.clone(), d_alg, sect_map)?;
    let d_point = Point::new(delta, sect)?;
    let act = extract_action(&d_point)
        .map_err(|e| Error::Internal(format!("direction point is not a Schreier action: {e}")))?;

    // Chart the extension kernel into the direction kernel: k -> [(1, k)].
    let unit = ext.total().unit();
    let kernel_chart: Vec<El> = ext
        .kernel_elems
        .iter()
        .map(|&k| {
            let pair = rel.index_of((unit, k)).expect("kernel pair");
            let class = d_proj.apply(pair);
            act.chart.iter().position(|&c| c == class).expect("kernel class")
        })
        .collect();
    let q_map = d_proj.then(&act.reconstruction.inverse().expect("bijective"))?;
    Ok(DirectionData { object: act.object, q_map, kernel_chart })
}

/// An extension together with its computed direction.
#[derive(Debug, Clone)]
pub struct DirectedExtension {
    pub ext: Extension,
    pub dir: DirectionData,
}

pub fn direct_extension(f: &Hom) -> Result<DirectedExtension> {
    let ext = extension(f)?;
    let dir = direction(&ext)?;
    Ok(DirectedExtension { ext, dir })
}

impl DirectedExtension {
    /// Difference of two f-equal elements, as a direction-kernel element.
    pub fn diff_a(&self, u: El, v: El) -> Option<El> {
        self.ext.diff_pos(u, v).map(|p| self.dir.kernel_chart[p])
    }

    pub fn base(&self) -> &Arc<Algebra> {
        self.ext.base()
    }
}

/// Search report for extension equivalence over a fixed identification of
/// directions: every homomorphism over the base inducing the identification,
/// whether each is bijective (the short five lemma instance), and the first
/// isomorphism found.
#[derive(Debug)]
pub struct EquivalenceReport {
    pub compatible: Vec<Hom>,
    pub non_bijective: usize,
    pub iso: Option<Hom>,
}

pub fn are_equivalent(
    e1: &DirectedExtension,
    e2: &DirectedExtension,
    ident: &Hom,
) -> Result<EquivalenceReport> {
    if e1.base() != e2.base() {
        return Err(Error::DirectionMismatch);
    }
    let compatible: Vec<Hom> = all_homs(e1.ext.total(), e2.ext.total())
        .into_iter()
        .filter(|psi| {
            e1.ext.total().elements().all(|x| e2.ext.f.apply(psi.apply(x)) == e1.ext.f.apply(x))
        })
        .filter(|psi| {
            e1.ext.sc.rel.pairs().iter().all(|&(u, v)| {
                let da = e1.diff_a(u, v).expect("related pair");
                let db = e2.diff_a(psi.apply(u), psi.apply(v)).expect("image pair");
                db == ident.apply(da)
            })
        })
        .collect();
    let non_bijective = compatible.iter().filter(|h| !h.is_bijective()).count();
    let iso = compatible.iter().find(|h| h.is_bijective()).cloned();
    Ok(EquivalenceReport { compatible, non_bijective, iso })
}

/// Equivalence under any identification of the two directions.
pub fn equivalent_auto(e1: &DirectedExtension, e2: &DirectedExtension) -> Result<Option<Hom>> {
    for ident in identify(&e1.dir.object, &e2.dir.object) {
        if let Some(iso) = are_equivalent(e1, e2, &ident)?.iso {
            return Ok(Some(iso));
        }
    }
    Ok(None)
}

/// Baer sum of two extensions over the same base whose directions are
/// identified by `ident : d(E1).kernel -> d(E2).kernel`. The sum is the
/// quotient of the pullback by the anti-diagonal difference relation.
pub fn baer_sum(
    e1: &DirectedExtension,
    e2: &DirectedExtension,
    ident: &Hom,
) -> Result<DirectedExtension> {
    if e1.base() != e2.base() {
        return Err(Error::DirectionMismatch);
    }
    let pb = pullback(&e1.ext.f, &e2.ext.f)?;
    let a2 = &e2.dir.object.kernel;
    // u ~ v iff same base point and ident(diff1(v1,u1)) = -diff2(v2,u2).
    // Relative to a fixed anchor per fiber this is equality of the key
    // ident(diff1(anchor,u)) + diff2(anchor,u).
    let mut ids: Vec<usize> = Vec::with_capacity(pb.elems.len());
    let mut distinct: Vec<(El, usize)> = Vec::new();
    for &(u1, u2) in &pb.elems {
        let y = e1.ext.f.apply(u1);
        let anchor = pb
            .elems
            .iter()
            .position(|&(v1, _)| e1.ext.f.apply(v1) == y)
            .expect("self at least");
        let (v1, v2) = pb.elems[anchor];
        let d1 = ident.apply(e1.diff_a(v1, u1).expect("fiber"));
        let d2 = e2.diff_a(v2, u2).expect("fiber");
        let key = (a2.jt(d1, d2), anchor);
        let id = match distinct.iter().position(|&k| k == key) {
            Some(p) => p,
            None => {
                distinct.push(key);
                distinct.len() - 1
            }
        };
        ids.push(id);
    }
    let cong = Congruence::new(pb.apex.clone(), &ids).map_err(|_| {
        Error::RelationNotCongruence(ids.clone())
    })?;
    let (s_alg, s_proj) = quotient(&cong)?;
    let mut g_map = vec![0; s_alg.order()];
    for (i, &(u1, _)) in pb.elems.iter().enumerate() {
        g_map[s_proj.apply(i)] = e1.ext.f.apply(u1);
    }
    let g = Hom::new(s_alg, e1.base().clone(), g_map)?;
    let sum = direct_extension(&g)?;
    if identify(&sum.dir.object, &e1.dir.object).is_empty() {
        return Err(Error::DirectionMismatch);
    }
    Ok(sum)
}

/// A morphism of direction objects over the same base: an additive,
/// action-equivariant map of kernels.
#[derive(Debug, Clone)]
pub struct DirectionMorphism {
    pub from: DirectionObject,
    pub to: DirectionObject,
    pub kernel_map: Hom,
}

pub fn direction_morphism(
    from: DirectionObject,
    to: DirectionObject,
    kernel_map: Hom,
) -> Result<DirectionMorphism> {
    if from.base != to.base {
        return Err(Error::DirectionMismatch);
    }
    if kernel_map.dom != from.kernel || kernel_map.cod != to.kernel {
        return Err(Error::Shape("kernel map endpoints do not match".into()));
    }
    for y in from.base.elements() {
        for a in from.kernel.elements() {
            if kernel_map.apply(from.action[y][a]) != to.action[y][kernel_map.apply(a)] {
                return Err(Error::NotEquivariant(y, a));
            }
        }
    }
    Ok(DirectionMorphism { from, to, kernel_map })
}

/// Push forward of an extension along a morphism of direction objects: the
/// quotient of `X x_Y total(B)` by `(x, n) ~ (x', n')` iff `f x = f x'` and
/// `n' = n + h(diff(x', x))`.
pub fn push_forward(
    e: &DirectedExtension,
    h: &DirectionMorphism,
) -> Result<DirectedExtension> {
    // The identification is pinned by e's own chart: h.from must literally be
    // e's direction object.
    if e.dir.object.base != h.from.base
        || e.dir.object.kernel != h.from.kernel
        || e.dir.object.action != h.from.action
    {
        return Err(Error::DirectionMismatch);
    }
    let b = &h.to;
    let pb = pullback(&e.ext.f, &b.point.f)?;
    // (x, n) ~ (x', n') iff f x = f x' and n' = n + h(diff(x', x)); relative
    // to a fixed anchor per fiber this is equality of n + h(diff(anchor, x)).
    let mut ids: Vec<usize> = Vec::with_capacity(pb.elems.len());
    let mut distinct: Vec<(El, usize)> = Vec::new();
    for &(x, t) in &pb.elems {
        let y = e.ext.f.apply(x);
        let anchor = pb
            .elems
            .iter()
            .position(|&(x2, _)| e.ext.f.apply(x2) == y)
            .expect("self");
        let (ax, _) = pb.elems[anchor];
        let n = b.pairs[t].0;
        let d = h.kernel_map.apply(e.diff_a(ax, x).expect("fiber"));
        let key = (b.kernel.jt(n, d), anchor);
        let id = match distinct.iter().position(|&k| k == key) {
            Some(p) => p,
            None => {
                distinct.push(key);
                distinct.len() - 1
            }
        };
        ids.push(id);
    }
    let cong = Congruence::new(pb.apex.clone(), &ids)
        .map_err(|_| Error::RelationNotCongruence(ids.clone()))?;
    let (q_alg, q_proj) = quotient(&cong)?;
    let mut g_map = vec![0; q_alg.order()];
    for (i, &(x, _)) in pb.elems.iter().enumerate() {
        g_map[q_proj.apply(i)] = e.ext.f.apply(x);
    }
    let g = Hom::new(q_alg, e.base().clone(), g_map)?;
    let pushed = direct_extension(&g)?;
    if identify(&pushed.dir.object, b).is_empty() {
        return Err(Error::DirectionMismatch);
    }
    // The canonical map x -> [(x, 0)] must be a homomorphism over Y.
    let canon: Vec<El> = e
        .ext
        .total()
        .elements()
        .map(|x| {
            let y = e.ext.f.apply(x);
            let t = b.index(b.kernel.unit(), y);
            let apex = pb.index_of((x, t)).expect("zero section");
            q_proj.apply(apex)
        })
        .collect();
    Hom::new(e.ext.total().clone(), pushed.ext.total().clone(), canon)
        .map_err(|err| Error::Internal(format!("canonical pushforward map fails: {err}")))?;
    Ok(pushed)
}

/// Bucket every extension of `base` by `kernel` (orders from the library) into
/// equivalence classes of the direction fiber.
pub struct FiberClass {
    pub representative: DirectedExtension,
    pub members: Vec<String>,
}

pub fn ext_classify(
    base: &Arc<Algebra>,
    kernel: &Arc<Algebra>,
    max_order: usize,
) -> Result<Vec<FiberClass>> {
    let n = base.order() * kernel.order();
    if n > max_order || n > crate::enumerate::DEFAULT_BOUND {
        return Err(Error::BoundExceeded {
            requested: n,
            bound: max_order.min(crate::enumerate::DEFAULT_BOUND),
        });
    }
    let mut classes: Vec<FiberClass> = Vec::new();
    for (xi, x_alg) in crate::enumerate::library(base.kind(), n)?.iter().enumerate() {
        for (fi, f) in crate::hom::surjective_homs(x_alg, base).into_iter().enumerate() {
            let Ok(e) = direct_extension(&f) else { continue };
            if !crate::hom::are_isomorphic(&e.ext.kernel_alg, kernel) {
                continue;
            }
            let descriptor = format!("order-{n} algebra #{xi} epi #{fi}");
            let mut placed = false;
            for class in classes.iter_mut() {
                if equivalent_auto(&class.representative, &e)?.is_some() {
                    class.members.push(descriptor.clone());
                    placed = true;
                    break;
                }
            }
            if !placed {
                classes.push(FiberClass { representative: e, members: vec![descriptor] });
            }
        }
    }
    Ok(classes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::product;
    use crate::hom::make_homomorphism;

    fn z(n: usize) -> Arc<Algebra> {
        Arc::new(Algebra::cyclic(n))
    }

    fn mod2_from_z4() -> Hom {
        make_homomorphism(&z(4), &z(2), vec![0, 1, 0, 1]).unwrap()
    }

    #[test]
    fn schequ_on_z4_over_z2_all_three_hold() {
        let e = extension(&mod2_from_z4()).unwrap();
        let report = check_schequ(&e.sc);
        assert!(report.abelian());
        assert!(report.all_equivalent());
    }

    #[test]
    fn schequ_on_diagonal_congruence_is_trivially_abelian() {
        let z4 = z(4);
        let rel = Congruence::diagonal(z4).relation();
        let sc = schreier_congruence(rel).unwrap();
        assert_eq!(sc.kernel, vec![0]);
        assert!(check_schequ(&sc).abelian());
    }

    #[test]
    fn schequ_on_d3_over_z2_has_abelian_kernel_z3() {
        let d3 = Arc::new(Algebra::dihedral_group(3));
        let z2 = z(2);
        let f = make_homomorphism(&d3, &z2, vec![0, 0, 0, 1, 1, 1]).unwrap();
        let e = extension(&f).unwrap();
        assert_eq!(e.kernel_elems.len(), 3);
        assert!(check_schequ(&e.sc).abelian());
    }

    #[test]
    fn malcev_operation_on_z4_matches_group_subtraction() {
        let e = extension(&mod2_from_z4()).unwrap();
        // p(1,3,3) = q(3 R 1) * 3 with q(3 R 1) solving k + 3 = 1 in {0, 2}.
        assert_eq!(e.sc.translate(3, 1), Some(2));
        assert_eq!(e.malcev.apply(1, 3, 3), Some(1));
        for &(a, b, c) in &e.malcev.triples {
            assert_eq!(e.malcev.apply(a, b, c), Some((a + 4 - b + c) % 4));
            assert_eq!(e.malcev.apply(a, a, c), Some(c));
            assert_eq!(e.malcev.apply(c, a, a), Some(c));
        }
    }

    #[test]
    fn translator_identities_hold_in_both_orientations() {
        // q(bRa)*b = a and q(aRb)*a = b, and the two are mutually inverse.
        let e = extension(&mod2_from_z4()).unwrap();
        let x = e.total().clone();
        for &(a, b) in e.sc.rel.pairs() {
            let fw = e.sc.translate(a, b).unwrap();
            let bw = e.sc.translate(b, a).unwrap();
            assert_eq!(x.jt(fw, a), b);
            assert_eq!(x.jt(bw, b), a);
            assert_eq!(x.jt(fw, bw), x.unit());
        }
    }

    #[test]
    fn direction_of_product_extension_is_trivial_action() {
        let z2 = z(2);
        let z3 = z(3);
        let p = product(&z2, &z3).unwrap();
        let e = direct_extension(&p.p1).unwrap();
        let d = &e.dir.object;
        assert_eq!(d.kernel.order(), 3);
        for y in d.base.elements() {
            for a in d.kernel.elements() {
                assert_eq!(d.action[y][a], a);
            }
        }
        assert!(crate::hom::are_isomorphic(&d.total, &p.algebra));
    }

    #[test]
    fn direction_of_z4_is_the_klein_total_with_trivial_action() {
        let e = direct_extension(&mod2_from_z4()).unwrap();
        let d = &e.dir.object;
        assert_eq!(d.total.order(), 4);
        // Trivial action, kernel Z2: the total is Z2 x Z2.
        let klein = product(&z(2), &z(2)).unwrap();
        assert!(crate::hom::are_isomorphic(&d.total, &klein.algebra));
        assert!(!crate::hom::are_isomorphic(&d.total, &z(4)));
    }

    #[test]
    fn direction_of_an_abelian_group_object_recovers_it() {
        // d(U(X)) for X = trivial-action Z2 x Z3 over Z2 and for the
        // M2-on-Z2 zero action.
        let cases = vec![
            DirectionObject::trivial(z(2), z(3)).unwrap(),
            {
                let m2 = Arc::new(Algebra::idempotent_pair());
                // phi(e) = id, phi(a) = zero endomorphism.
                DirectionObject::new(m2, z(2), vec![vec![0, 1], vec![0, 0]]).unwrap()
            },
        ];
        for dobj in cases {
            let e = direct_extension(&dobj.point.f).unwrap();
            let isos = identify(&e.dir.object, &dobj);
            assert!(!isos.is_empty(), "direction failed to recover the group object");
        }
    }

    #[test]
    fn extract_action_of_d3_point_is_negation() {
        let d3 = Arc::new(Algebra::dihedral_group(3));
        let z2 = z(2);
        let f = make_homomorphism(&d3, &z2, vec![0, 0, 0, 1, 1, 1]).unwrap();
        let s = make_homomorphism(&z2, &d3, vec![0, 3]).unwrap();
        let p = Point::new(f, s).unwrap();
        let act = extract_action(&p).unwrap();
        // Kernel is the rotation subgroup {r0, r1, r2}; phi(1) negates.
        assert_eq!(act.object.action[0], vec![0, 1, 2]);
        assert_eq!(act.object.action[1], vec![0, 2, 1]);
        assert!(act.reconstruction.is_bijective());
    }

    #[test]
    fn zero_action_semidirect_is_a_schreier_point() {
        let m2 = Arc::new(Algebra::idempotent_pair());
        let dobj = DirectionObject::new(m2, z(2), vec![vec![0, 1], vec![0, 0]]).unwrap();
        assert_eq!(dobj.total.order(), 4);
        let cls = classify(&dobj.point, SigmaClass::Schreier).unwrap();
        assert!(cls.in_class);
        let act = extract_action(&dobj.point).unwrap();
        assert_eq!(act.object.action, dobj.action);
    }

    #[test]
    fn equivalence_is_reflexive_and_distinguishes_z4_from_klein() {
        let e1 = direct_extension(&mod2_from_z4()).unwrap();
        let id = Hom::identity(&e1.dir.object.kernel);
        let rep = are_equivalent(&e1, &e1, &id).unwrap();
        assert!(rep.iso.is_some());
        assert_eq!(rep.non_bijective, 0);

        let klein = product(&z(2), &z(2)).unwrap();
        let e2 = direct_extension(&klein.p1).unwrap();
        assert!(equivalent_auto(&e1, &e2).unwrap().is_none());
    }

    #[test]
    fn baer_sum_of_z4_with_itself_is_split() {
        let e = direct_extension(&mod2_from_z4()).unwrap();
        let ident = Hom::identity(&e.dir.object.kernel);
        let sum = baer_sum(&e, &e, &ident).unwrap();
        let split = DirectionObject::trivial(z(2), z(2)).unwrap();
        let esplit = direct_extension(&split.point.f).unwrap();
        assert!(equivalent_auto(&sum, &esplit).unwrap().is_some());
        // And the sum is not the Z4 class again.
        assert!(equivalent_auto(&sum, &e).unwrap().is_none());
    }

    #[test]
    fn split_is_a_two_sided_unit_for_the_baer_sum() {
        let e = direct_extension(&mod2_from_z4()).unwrap();
        let split = DirectionObject::trivial(z(2), z(2)).unwrap();
        let esplit = direct_extension(&split.point.f).unwrap();
        for ident in identify(&e.dir.object, &esplit.dir.object) {
            let sum = baer_sum(&e, &esplit, &ident).unwrap();
            assert!(equivalent_auto(&sum, &e).unwrap().is_some());
        }
        let id = Hom::identity(&esplit.dir.object.kernel);
        let ss = baer_sum(&esplit, &esplit, &id).unwrap();
        assert!(equivalent_auto(&ss, &esplit).unwrap().is_some());
    }

    #[test]
    fn push_forward_along_identity_is_equivalent() {
        let e = direct_extension(&mod2_from_z4()).unwrap();
        let h = direction_morphism(
            e.dir.object.clone(),
            e.dir.object.clone(),
            Hom::identity(&e.dir.object.kernel),
        )
        .unwrap();
        let pushed = push_forward(&e, &h).unwrap();
        assert!(equivalent_auto(&pushed, &e).unwrap().is_some());
    }

    #[test]
    fn push_forward_along_zero_collapses_to_the_base() {
        let e = direct_extension(&mod2_from_z4()).unwrap();
        let one = Arc::new(Algebra::terminal(Kind::Monoid));
        let trivial = DirectionObject::trivial(z(2), one.clone()).unwrap();
        let zero_map = Hom::new(e.dir.object.kernel.clone(), one, vec![0, 0]).unwrap();
        let h = direction_morphism(e.dir.object.clone(), trivial, zero_map).unwrap();
        let pushed = push_forward(&e, &h).unwrap();
        assert_eq!(pushed.ext.total().order(), 2);
        assert!(pushed.ext.f.is_bijective());
    }

    #[test]
    fn push_forward_of_z4_along_doubling_gives_the_split_class() {
        // h : Z2 -> Z4, x -> 2x. Its image lies in 2*Z4, so the pushed class
        // is the split one (Z4 + Z2), not Z8.
        let e = direct_extension(&mod2_from_z4()).unwrap();
        let b = DirectionObject::trivial(z(2), z(4)).unwrap();
        let hmap = Hom::new(e.dir.object.kernel.clone(), b.kernel.clone(), vec![0, 2]).unwrap();
        let h = direction_morphism(e.dir.object.clone(), b.clone(), hmap).unwrap();
        let pushed = push_forward(&e, &h).unwrap();
        assert_eq!(pushed.ext.total().order(), 8);
        let split = direct_extension(&b.point.f).unwrap();
        assert!(equivalent_auto(&pushed, &split).unwrap().is_some());
        // Z8 over Z2 is the other class in this fiber; the pushforward is not it.
        let z8f = make_homomorphism(&z(8), &z(2), vec![0, 1, 0, 1, 0, 1, 0, 1]).unwrap();
        let e8 = direct_extension(&z8f).unwrap();
        assert!(equivalent_auto(&pushed, &e8).unwrap().is_none());
        assert!(equivalent_auto(&e8, &split).unwrap().is_none());
    }

    #[test]
    fn ext_fiber_over_z2_with_kernel_z2_has_two_classes() {
        let classes = ext_classify(&z(2), &z(2), 4).unwrap();
        assert_eq!(classes.len(), 2);
        let has_z4 = classes
            .iter()
            .any(|c| crate::hom::are_isomorphic(c.representative.ext.total(), &z(4)));
        assert!(has_z4);
    }
}
