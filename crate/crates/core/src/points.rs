//! Points (split epimorphisms with chosen section), their classification into
//! the Schreier / weakly Schreier / puncturing / acupuncturing classes,
//! Sigma-special morphisms and objects, regular pushouts and class-level
//! property probes on concrete instances.

use std::sync::Arc;

use crate::algebra::{subalgebra, Algebra, El, Kind};
use crate::congruence::{kernel_pair, Congruence};
use crate::error::{Error, Result};
use crate::hom::{jointly_extremally_epimorphic, Hom};
use crate::relation::pullback;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SigmaClass {
    Schreier,
    WeaklySchreier,
    Puncturing,
    Acupuncturing,
}

impl SigmaClass {
    pub fn admits(self, kind: Kind) -> bool {
        match self {
            SigmaClass::Schreier | SigmaClass::WeaklySchreier => kind.is_pointed(),
            SigmaClass::Puncturing | SigmaClass::Acupuncturing => kind == Kind::Quandle,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SigmaClass::Schreier => "schreier",
            SigmaClass::WeaklySchreier => "weakly-schreier",
            SigmaClass::Puncturing => "puncturing",
            SigmaClass::Acupuncturing => "acupuncturing",
        }
    }

    pub fn parse(s: &str) -> Option<SigmaClass> {
        match s {
            "schreier" => Some(SigmaClass::Schreier),
            "weakly-schreier" => Some(SigmaClass::WeaklySchreier),
            "puncturing" => Some(SigmaClass::Puncturing),
            "acupuncturing" => Some(SigmaClass::Acupuncturing),
            _ => None,
        }
    }
}

/// A split epimorphism `f` with chosen section `s` (`f o s = id`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Point {
    pub f: Hom,
    pub s: Hom,
}

impl Point {
    pub fn new(f: Hom, s: Hom) -> Result<Point> {
        if f.dom != s.cod || f.cod != s.dom {
            return Err(Error::Shape("section endpoints do not match the epi".into()));
        }
        for y in f.cod.elements() {
            if f.apply(s.apply(y)) != y {
                return Err(Error::Shape(format!("f o s is not the identity at {y}")));
            }
        }
        Ok(Point { f, s })
    }

    pub fn total(&self) -> &Arc<Algebra> {
        &self.f.dom
    }

    pub fn base(&self) -> &Arc<Algebra> {
        &self.f.cod
    }

    /// Kernel elements `f^{-1}(unit)` for pointed kinds.
    pub fn kernel_elems(&self) -> Vec<El> {
        let u = self.base().unit();
        self.f.fiber(u)
    }
}

/// Witness of a failed `mu_b`: the fiber over `base` and the multiset of
/// `mu_b` images that failed to cover it bijectively / surjectively.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MuViolation {
    pub base: El,
    pub fiber: Vec<El>,
    pub image: Vec<El>,
}

/// Outcome of classifying a point in a class: a witness when the point is in
/// the class (Schreier retraction, or per-fiber image certificates), a
/// violation otherwise. Exactly one side is populated.
#[derive(Debug, Clone)]
pub struct Classification {
    pub class: SigmaClass,
    pub in_class: bool,
    /// Schreier only: `q[x]` is the unique kernel part of `x`.
    pub retraction: Option<Vec<El>>,
    /// Non-retraction classes: per fiber element `b`, the image multiset of `mu_b`.
    pub fiber_certificates: Option<Vec<(El, Vec<El>)>>,
    pub violation: Option<MuViolation>,
}

impl Classification {
    fn holds(class: SigmaClass, retraction: Option<Vec<El>>, certs: Option<Vec<(El, Vec<El>)>>) -> Self {
        Classification { class, in_class: true, retraction, fiber_certificates: certs, violation: None }
    }

    fn fails(class: SigmaClass, violation: MuViolation) -> Self {
        Classification {
            class,
            in_class: false,
            retraction: None,
            fiber_certificates: None,
            violation: Some(violation),
        }
    }
}

/// Classify a point in a Sigma class.
///
/// Schreier: for each `x` the equation `k * s(f(x)) = x` must have exactly one
/// solution `k` in the kernel; the assembled retraction is then re-checked
/// against both defining identities. Weakly Schreier only asks `mu_b` to be
/// surjective onto each fiber. For quandles, `mu_b(a) = s(b) lhd a` must be
/// surjective (puncturing) resp. bijective (acupuncturing) on each fiber.
pub fn classify(p: &Point, class: SigmaClass) -> Result<Classification> {
    let kind = p.total().kind();
    if !class.admits(kind) {
        return Err(Error::ClassKindMismatch(format!(
            "{} point over a {}",
            class.as_str(),
            kind.as_str()
        )));
    }
    match class {
        SigmaClass::Schreier => classify_schreier(p),
        SigmaClass::WeaklySchreier => classify_weakly(p),
        SigmaClass::Puncturing => classify_quandle(p, false),
        SigmaClass::Acupuncturing => classify_quandle(p, true),
    }
}

fn classify_schreier(p: &Point) -> Result<Classification> {
    let x_alg = p.total();
    let kernel = p.kernel_elems();
    let mut q = Vec::with_capacity(x_alg.order());
    for x in x_alg.elements() {
        let sb = p.s.apply(p.f.apply(x));
        let sols: Vec<El> = kernel.iter().copied().filter(|&k| x_alg.jt(k, sb) == x).collect();
        if sols.len() != 1 {
            let b = p.f.apply(x);
            return Ok(Classification::fails(
                SigmaClass::Schreier,
                MuViolation {
                    base: b,
                    fiber: p.f.fiber(b),
                    image: kernel.iter().map(|&k| x_alg.jt(k, p.s.apply(b))).collect(),
                },
            ));
        }
        q.push(sols[0]);
    }
    // Re-verify both defining identities.
    for x in x_alg.elements() {
        if x_alg.jt(q[x], p.s.apply(p.f.apply(x))) != x {
            return Err(Error::Internal("retraction fails its defining identity".into()));
        }
    }
    for &k in &kernel {
        for b in p.base().elements() {
            if q[x_alg.jt(k, p.s.apply(b))] != k {
                let fiber = p.f.fiber(b);
                return Ok(Classification::fails(
                    SigmaClass::Schreier,
                    MuViolation {
                        base: b,
                        fiber,
                        image: kernel.iter().map(|&k2| x_alg.jt(k2, p.s.apply(b))).collect(),
                    },
                ));
            }
        }
    }
    Ok(Classification::holds(SigmaClass::Schreier, Some(q), None))
}

fn classify_weakly(p: &Point) -> Result<Classification> {
    let x_alg = p.total();
    let kernel = p.kernel_elems();
    let mut certs = Vec::new();
    for b in p.base().elements() {
        let sb = p.s.apply(b);
        let image: Vec<El> = kernel.iter().map(|&k| x_alg.jt(k, sb)).collect();
        let fiber = p.f.fiber(b);
        if fiber.iter().any(|x| !image.contains(x)) {
            return Ok(Classification::fails(
                SigmaClass::WeaklySchreier,
                MuViolation { base: b, fiber, image },
            ));
        }
        certs.push((b, image));
    }
    Ok(Classification::holds(SigmaClass::WeaklySchreier, None, Some(certs)))
}

fn classify_quandle(p: &Point, bijective: bool) -> Result<Classification> {
    let x_alg = p.total();
    let mut certs = Vec::new();
    for b in p.base().elements() {
        let sb = p.s.apply(b);
        let fiber = p.f.fiber(b);
        let image: Vec<El> = fiber.iter().map(|&a| x_alg.lhd(sb, a)).collect();
        let surjective = fiber.iter().all(|x| image.contains(x));
        let injective = {
            let mut sorted = image.clone();
            sorted.sort_unstable();
            sorted.windows(2).all(|w| w[0] != w[1])
        };
        let ok = if bijective { surjective && injective } else { surjective };
        if !ok {
            let class = if bijective { SigmaClass::Acupuncturing } else { SigmaClass::Puncturing };
            return Ok(Classification::fails(class, MuViolation { base: b, fiber, image }));
        }
        certs.push((b, image));
    }
    let class = if bijective { SigmaClass::Acupuncturing } else { SigmaClass::Puncturing };
    Ok(Classification::holds(class, None, Some(certs)))
}

/// A single quantified identity check with its first failing witness.
#[derive(Debug, Clone)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub holds: bool,
    pub witness: Option<Vec<El>>,
}

#[derive(Debug, Clone)]
pub struct RetractionReport {
    pub identities: Vec<IdentityCheck>,
}

impl RetractionReport {
    pub fn all_hold(&self) -> bool {
        self.identities.iter().all(|c| c.holds)
    }
}

/// For a Schreier point, assert the two defining identities of the retraction
/// and the two exchange identities
/// `q(x * x') = q(x) * q(sf(x) * q(x'))` and `q(s(y) * k) * s(y) = s(y) * k`
/// over all element tuples.
pub fn retraction_identities(p: &Point) -> Result<RetractionReport> {
    let cls = classify(p, SigmaClass::Schreier)?;
    let Some(q) = cls.retraction else {
        return Err(Error::NoRetraction);
    };
    let a = p.total();
    let kernel = p.kernel_elems();
    let mut identities = Vec::new();

    let mut check = |name: &'static str, witness: Option<Vec<El>>| {
        identities.push(IdentityCheck { name, holds: witness.is_none(), witness });
    };

    let mut w = None;
    'd1: for x in a.elements() {
        if a.jt(q[x], p.s.apply(p.f.apply(x))) != x {
            w = Some(vec![x]);
            break 'd1;
        }
    }
    check("x = q(x) * sf(x)", w);

    let mut w = None;
    'd2: for &k in &kernel {
        for y in p.base().elements() {
            if q[a.jt(k, p.s.apply(y))] != k {
                w = Some(vec![k, y]);
                break 'd2;
            }
        }
    }
    check("q(k * s(y)) = k", w);

    let mut w = None;
    'e1: for x in a.elements() {
        for xp in a.elements() {
            let lhs = q[a.jt(x, xp)];
            let rhs = a.jt(q[x], q[a.jt(p.s.apply(p.f.apply(x)), q[xp])]);
            if lhs != rhs {
                w = Some(vec![x, xp]);
                break 'e1;
            }
        }
    }
    check("q(x * x') = q(x) * q(sf(x) * q(x'))", w);

    let mut w = None;
    'e2: for y in p.base().elements() {
        for &k in &kernel {
            let sy = p.s.apply(y);
            if a.jt(q[a.jt(sy, k)], sy) != a.jt(sy, k) {
                w = Some(vec![y, k]);
                break 'e2;
            }
        }
    }
    check("q(s(y) * k) * s(y) = s(y) * k", w);

    Ok(RetractionReport { identities })
}

/// A morphism is Sigma-special when the point `(d0, s0)` of its kernel pair
/// relation lies in the class.
pub fn sigma_special(f: &Hom, class: SigmaClass) -> Result<Classification> {
    let rel = kernel_pair(f).relation();
    classify(&rel.point(), class)
}

/// An object is Sigma-special when its terminal map is.
pub fn sigma_special_object(a: &Arc<Algebra>, class: SigmaClass) -> Result<bool> {
    let t = Hom::terminal(a);
    Ok(sigma_special(&t, class)?.in_class)
}

/// Boolean-only Sigma-specialness, computed directly on the kernel pair
/// without materializing the pair algebra:
/// - Schreier: every f-equal pair `(u, v)` has exactly one `t` in `K[f]`
///   with `t * u = v` (for quandle-free pointed kinds);
/// - weakly Schreier: at least one such `t`;
/// - (acu)puncturing: for every `u`, `w -> u lhd w` is surjective (resp.
///   bijective) on the f-fiber of `f(u)`.
///
/// Agrees with `sigma_special` (checked exhaustively in the test suites).
pub fn sigma_special_quick(f: &Hom, class: SigmaClass) -> Result<bool> {
    let kind = f.dom.kind();
    if !class.admits(kind) {
        return Err(Error::ClassKindMismatch(format!(
            "{} over a {}",
            class.as_str(),
            kind.as_str()
        )));
    }
    let a = &f.dom;
    match class {
        SigmaClass::Schreier | SigmaClass::WeaklySchreier => {
            let unit = f.cod.unit();
            let kernel: Vec<El> = a.elements().filter(|&x| f.apply(x) == unit).collect();
            for u in a.elements() {
                for v in a.elements() {
                    if f.apply(u) != f.apply(v) {
                        continue;
                    }
                    let count = kernel.iter().filter(|&&t| a.jt(t, u) == v).count();
                    let ok = match class {
                        SigmaClass::Schreier => count == 1,
                        _ => count >= 1,
                    };
                    if !ok {
                        return Ok(false);
                    }
                }
            }
            Ok(true)
        }
        SigmaClass::Puncturing | SigmaClass::Acupuncturing => {
            // Fibers are permuted (or covered) by left translation.
            for u in a.elements() {
                let fiber: Vec<El> =
                    a.elements().filter(|&w| f.apply(w) == f.apply(u)).collect();
                let image: Vec<El> = fiber.iter().map(|&w| a.lhd(u, w)).collect();
                let surjective = fiber.iter().all(|x| image.contains(x));
                if !surjective {
                    return Ok(false);
                }
                if class == SigmaClass::Acupuncturing {
                    let mut sorted = image;
                    sorted.sort_unstable();
                    if sorted.windows(2).any(|w| w[0] == w[1]) {
                        return Ok(false);
                    }
                }
            }
            Ok(true)
        }
    }
}

/// Verdict for a commuting square of surjections
/// `f : X ->> Y`, `x : X ->> X'`, `f' : X' ->> Y'`, `y : Y ->> Y'`.
#[derive(Debug, Clone)]
pub struct PushoutReport {
    /// The induced map into `Y x_{Y'} X'` is surjective.
    pub regular: bool,
    /// Pullback element `(b, x')` not hit by the induced map, when not regular.
    pub missing: Option<(El, El)>,
    /// `R(x) : R[f] -> R[f']` is surjective.
    pub rx_surjective: bool,
    /// `R(f) : R[x] -> R[y]` is surjective.
    pub rf_surjective: bool,
}

pub fn regular_pushout(f: &Hom, x: &Hom, fp: &Hom, y: &Hom) -> Result<PushoutReport> {
    if f.dom != x.dom || fp.dom != x.cod || y.dom != f.cod || y.cod != fp.cod {
        return Err(Error::Shape("square endpoints do not line up".into()));
    }
    for (name, h) in [("f", f), ("x", x), ("f'", fp), ("y", y)] {
        if let Some(miss) = h.first_missed() {
            return Err(Error::NotSurjective(name.into(), miss));
        }
    }
    for a in f.dom.elements() {
        if fp.apply(x.apply(a)) != y.apply(f.apply(a)) {
            return Err(Error::NotCommuting(a));
        }
    }
    let pb = pullback(y, fp)?;
    let mut hit = vec![false; pb.elems.len()];
    for a in f.dom.elements() {
        let idx = pb
            .index_of((f.apply(a), x.apply(a)))
            .ok_or_else(|| Error::Internal("induced cone misses the pullback".into()))?;
        hit[idx] = true;
    }
    let missing = hit.iter().position(|&h| !h).map(|i| pb.elems[i]);

    let rf_pairs = kernel_pair(f);
    let rfp_pairs = kernel_pair(fp);
    let rx_surjective = rfp_pairs.pairs().into_iter().all(|(u, v)| {
        rf_pairs
            .pairs()
            .into_iter()
            .any(|(a, b)| x.apply(a) == u && x.apply(b) == v)
    });
    let rx_pairs = kernel_pair(x);
    let ry_pairs = kernel_pair(y);
    let rf_surjective = ry_pairs.pairs().into_iter().all(|(u, v)| {
        rx_pairs
            .pairs()
            .into_iter()
            .any(|(a, b)| f.apply(a) == u && f.apply(b) == v)
    });

    Ok(PushoutReport { regular: missing.is_none(), missing, rx_surjective, rf_surjective })
}

/// Pull the point back along `g` and test that the pair (projection-to-total,
/// original section) is jointly extremally epimorphic.
pub fn strong_point(p: &Point, g: &Hom) -> Result<bool> {
    if g.cod != p.f.cod {
        return Err(Error::KindMismatch("pullback base does not match the point".into()));
    }
    let pb = pullback(&p.f, g)?;
    jointly_extremally_epimorphic(&[&pb.p1, &p.s])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassProperty {
    TwoRegular,
    EquiConsistent,
    LimitClosure,
}

impl ClassProperty {
    pub fn parse(s: &str) -> Option<ClassProperty> {
        match s {
            "two-regular" => Some(ClassProperty::TwoRegular),
            "equi-consistent" => Some(ClassProperty::EquiConsistent),
            "limit-closure" => Some(ClassProperty::LimitClosure),
            _ => None,
        }
    }
}

/// Outcome of probing one instance of a class-level property: the checked
/// hypotheses, and the conclusion verdict (None when a hypothesis failed, so
/// the implication is vacuous). `holds()` is the implication itself.
#[derive(Debug, Clone)]
pub struct ProbeVerdict {
    pub hypotheses: Vec<(&'static str, bool)>,
    pub conclusion: Option<bool>,
}

impl ProbeVerdict {
    pub fn vacuous(&self) -> bool {
        self.conclusion.is_none()
    }

    pub fn holds(&self) -> bool {
        self.conclusion.unwrap_or(true)
    }
}

/// A levelwise-surjective morphism of points: `x, y` carry the point `(f, s)`
/// onto the point `(f', s')`, commuting both downward and upward.
pub struct TwoRegularInstance {
    pub top: Point,
    pub bottom: Point,
    pub x: Hom,
    pub y: Hom,
}

/// Probe: the point `(f', s')` must land in the class as soon as `(f, s)` and
/// the kernel-pair level `(R(f), R(s))` do.
pub fn probe_two_regular(inst: &TwoRegularInstance, class: SigmaClass) -> Result<ProbeVerdict> {
    let TwoRegularInstance { top, bottom, x, y } = inst;
    if x.dom != top.f.dom || x.cod != bottom.f.dom || y.dom != top.f.cod || y.cod != bottom.f.cod {
        return Err(Error::MalformedInstance("level maps do not match the points".into()));
    }
    if !x.is_surjective() || !y.is_surjective() {
        return Err(Error::MalformedInstance("level maps must be surjective".into()));
    }
    for a in top.f.dom.elements() {
        if bottom.f.apply(x.apply(a)) != y.apply(top.f.apply(a)) {
            return Err(Error::MalformedInstance(format!("downward square breaks at {a}")));
        }
    }
    for b in top.f.cod.elements() {
        if x.apply(top.s.apply(b)) != bottom.s.apply(y.apply(b)) {
            return Err(Error::MalformedInstance(format!("upward square breaks at {b}")));
        }
    }
    let rx = kernel_pair(x).relation();
    let ry = kernel_pair(y).relation();
    let rf = Hom::new(
        rx.carrier().clone(),
        ry.carrier().clone(),
        rx.pairs()
            .iter()
            .map(|&(a, b)| {
                ry.index_of((top.f.apply(a), top.f.apply(b)))
                    .ok_or_else(|| Error::MalformedInstance("R(f) leaves R[y]".into()))
            })
            .collect::<Result<Vec<_>>>()?,
    )?;
    let rs = Hom::new(
        ry.carrier().clone(),
        rx.carrier().clone(),
        ry.pairs()
            .iter()
            .map(|&(u, v)| {
                rx.index_of((top.s.apply(u), top.s.apply(v)))
                    .ok_or_else(|| Error::MalformedInstance("R(s) leaves R[x]".into()))
            })
            .collect::<Result<Vec<_>>>()?,
    )?;
    let level = Point::new(rf, rs)?;

    let h1 = classify(top, class)?.in_class;
    let h2 = classify(&level, class)?.in_class;
    let hypotheses = vec![("(f,s) in class", h1), ("(R(f),R(s)) in class", h2)];
    let conclusion =
        if h1 && h2 { Some(classify(bottom, class)?.in_class) } else { None };
    Ok(ProbeVerdict { hypotheses, conclusion })
}

/// A split epimorphism of congruences: the point `(g, t)` carries `r` onto `s`.
pub struct EquiConsistentInstance {
    pub r: Congruence,
    pub s: Congruence,
    pub point: Point,
}

/// Probe: `(gbar, tbar)` on pair algebras must land in the class as soon as
/// `r` is a Sigma-relation, `(g, t)` is in the class and the restriction to
/// the kernels of the `d0` legs is.
pub fn probe_equi_consistent(inst: &EquiConsistentInstance, class: SigmaClass) -> Result<ProbeVerdict> {
    let EquiConsistentInstance { r, s, point } = inst;
    if r.algebra() != &point.f.dom || s.algebra() != &point.f.cod {
        return Err(Error::MalformedInstance("congruences live on the wrong carriers".into()));
    }
    if !point.f.dom.kind().is_pointed() {
        return Err(Error::MalformedInstance("equi-consistency probes need a pointed kind".into()));
    }
    let rr = r.relation();
    let sr = s.relation();
    let gbar = Hom::new(
        rr.carrier().clone(),
        sr.carrier().clone(),
        rr.pairs()
            .iter()
            .map(|&(a, b)| {
                sr.index_of((point.f.apply(a), point.f.apply(b))).ok_or_else(|| {
                    Error::MalformedInstance("g does not carry r into s".into())
                })
            })
            .collect::<Result<Vec<_>>>()?,
    )?;
    let tbar = Hom::new(
        sr.carrier().clone(),
        rr.carrier().clone(),
        sr.pairs()
            .iter()
            .map(|&(u, v)| {
                rr.index_of((point.s.apply(u), point.s.apply(v))).ok_or_else(|| {
                    Error::MalformedInstance("t does not carry s into r".into())
                })
            })
            .collect::<Result<Vec<_>>>()?,
    )?;
    let lifted = Point::new(gbar.clone(), tbar.clone())?;

    // Restrict to the kernels of the d0 legs.
    let unit_x = point.f.dom.unit();
    let unit_y = point.f.cod.unit();
    let k_r: Vec<El> = rr
        .pairs()
        .iter()
        .enumerate()
        .filter(|(_, &(a, _))| a == unit_x)
        .map(|(i, _)| i)
        .collect();
    let k_s: Vec<El> = sr
        .pairs()
        .iter()
        .enumerate()
        .filter(|(_, &(u, _))| u == unit_y)
        .map(|(i, _)| i)
        .collect();
    let (kr_alg, kr_incl) = subalgebra(rr.carrier(), &k_r)?;
    let (ks_alg, ks_incl) = subalgebra(sr.carrier(), &k_s)?;
    let pos_ks = |e: El| ks_incl.map().iter().position(|&v| v == e);
    let pos_kr = |e: El| kr_incl.map().iter().position(|&v| v == e);
    let k0g = Hom::new(
        kr_alg.clone(),
        ks_alg.clone(),
        kr_incl
            .map()
            .iter()
            .map(|&e| {
                pos_ks(gbar.apply(e))
                    .ok_or_else(|| Error::MalformedInstance("K0(g) leaves the kernel".into()))
            })
            .collect::<Result<Vec<_>>>()?,
    )?;
    let k0t = Hom::new(
        ks_alg,
        kr_alg,
        ks_incl
            .map()
            .iter()
            .map(|&e| {
                pos_kr(tbar.apply(e))
                    .ok_or_else(|| Error::MalformedInstance("K0(t) leaves the kernel".into()))
            })
            .collect::<Result<Vec<_>>>()?,
    )?;
    let k_point = Point::new(k0g, k0t)?;

    let h1 = classify(&rr.point(), class)?.in_class;
    let h2 = classify(point, class)?.in_class;
    let h3 = classify(&k_point, class)?.in_class;
    let hypotheses = vec![
        ("r is a class relation", h1),
        ("(g,t) in class", h2),
        ("(K0(g),K0(t)) in class", h3),
    ];
    let conclusion = if h1 && h2 && h3 { Some(classify(&lifted, class)?.in_class) } else { None };
    Ok(ProbeVerdict { hypotheses, conclusion })
}

/// Two points over a common base, probed for closure of the class under the
/// induced fiber-product point.
pub struct LimitClosureInstance {
    pub p1: Point,
    pub p2: Point,
}

pub fn probe_limit_closure(inst: &LimitClosureInstance, class: SigmaClass) -> Result<ProbeVerdict> {
    let LimitClosureInstance { p1, p2 } = inst;
    if p1.f.cod != p2.f.cod {
        return Err(Error::MalformedInstance("points must share a base".into()));
    }
    let pb = pullback(&p1.f, &p2.f)?;
    let f12 = pb.p1.then(&p1.f)?;
    let s12 = Hom::new(
        p1.f.cod.clone(),
        pb.apex.clone(),
        p1.f
            .cod
            .elements()
            .map(|y| {
                pb.index_of((p1.s.apply(y), p2.s.apply(y)))
                    .ok_or_else(|| Error::Internal("section misses the pullback".into()))
            })
            .collect::<Result<Vec<_>>>()?,
    )?;
    let fiber_point = Point::new(f12, s12)?;
    let h1 = classify(p1, class)?.in_class;
    let h2 = classify(p2, class)?.in_class;
    let hypotheses = vec![("p1 in class", h1), ("p2 in class", h2)];
    let conclusion = if h1 && h2 { Some(classify(&fiber_point, class)?.in_class) } else { None };
    Ok(ProbeVerdict { hypotheses, conclusion })
}

/// Outcome of an exhaustive probe sweep.
#[derive(Debug, Clone, Copy, Default)]
pub struct ProbeSummary {
    pub instances: usize,
    pub non_vacuous: usize,
    pub violations: usize,
}

impl ProbeSummary {
    fn absorb(&mut self, v: &ProbeVerdict) {
        self.instances += 1;
        if !v.vacuous() {
            self.non_vacuous += 1;
            if !v.holds() {
                self.violations += 1;
            }
        }
    }
}

/// Every levelwise quotient of every point over carriers up to `max_order`:
/// a point `(f, s)` from a congruence and section, quotiented along a
/// compatible pair of congruences.
pub fn probe_two_regular_exhaustive(
    kind: Kind,
    class: SigmaClass,
    max_order: usize,
) -> Result<ProbeSummary> {
    let mut summary = ProbeSummary::default();
    for x_alg in crate::enumerate::library_up_to(kind, max_order)? {
        let cons = crate::congruence::all_congruences(&x_alg);
        for cf in &cons {
            let (y_alg, f) = crate::congruence::quotient(cf)?;
            for s in crate::hom::all_sections(&f) {
                let top = Point::new(f.clone(), s.clone())?;
                let y_cons = crate::congruence::all_congruences(&y_alg);
                for cx in &cons {
                    for cy in &y_cons {
                        // f must carry cx into cy and s must carry cy into cx.
                        let down_ok = cx
                            .pairs()
                            .into_iter()
                            .all(|(a, b)| cy.related(f.apply(a), f.apply(b)));
                        let up_ok = cy
                            .pairs()
                            .into_iter()
                            .all(|(u, v)| cx.related(s.apply(u), s.apply(v)));
                        if !down_ok || !up_ok {
                            continue;
                        }
                        let (xp_alg, x) = crate::congruence::quotient(cx)?;
                        let (yp_alg, y) = crate::congruence::quotient(cy)?;
                        let fp = Hom::new(
                            xp_alg.clone(),
                            yp_alg.clone(),
                            cx.classes()
                                .iter()
                                .map(|cl| cy.class_of(f.apply(cl[0])))
                                .collect(),
                        )?;
                        let sp = Hom::new(
                            yp_alg,
                            xp_alg,
                            cy.classes()
                                .iter()
                                .map(|cl| cx.class_of(s.apply(cl[0])))
                                .collect(),
                        )?;
                        let bottom = Point::new(fp, sp)?;
                        let inst = TwoRegularInstance { top: top.clone(), bottom, x, y };
                        summary.absorb(&probe_two_regular(&inst, class)?);
                    }
                }
            }
        }
    }
    Ok(summary)
}

/// Every split epimorphism of congruences over carriers up to `max_order`.
pub fn probe_equi_consistent_exhaustive(
    kind: Kind,
    class: SigmaClass,
    max_order: usize,
) -> Result<ProbeSummary> {
    let mut summary = ProbeSummary::default();
    for x_alg in crate::enumerate::library_up_to(kind, max_order)? {
        let cons = crate::congruence::all_congruences(&x_alg);
        for cg in &cons {
            let (y_alg, g) = crate::congruence::quotient(cg)?;
            for t in crate::hom::all_sections(&g) {
                let point = Point::new(g.clone(), t.clone())?;
                let y_cons = crate::congruence::all_congruences(&y_alg);
                for r in &cons {
                    for s_c in &y_cons {
                        let down_ok = r
                            .pairs()
                            .into_iter()
                            .all(|(a, b)| s_c.related(g.apply(a), g.apply(b)));
                        let up_ok = s_c
                            .pairs()
                            .into_iter()
                            .all(|(u, v)| r.related(t.apply(u), t.apply(v)));
                        if !down_ok || !up_ok {
                            continue;
                        }
                        let inst = EquiConsistentInstance {
                            r: r.clone(),
                            s: s_c.clone(),
                            point: point.clone(),
                        };
                        summary.absorb(&probe_equi_consistent(&inst, class)?);
                    }
                }
            }
        }
    }
    Ok(summary)
}

/// Pairs of points over a common base (up to base isomorphism), probed for
/// closure of the class under the fiber-product point.
pub fn probe_limit_closure_exhaustive(
    kind: Kind,
    class: SigmaClass,
    max_order: usize,
) -> Result<ProbeSummary> {
    let mut summary = ProbeSummary::default();
    // Collect all points with quotient bases, then match bases by iso.
    let mut points: Vec<Point> = Vec::new();
    for x_alg in crate::enumerate::library_up_to(kind, max_order)? {
        for c in crate::congruence::all_congruences(&x_alg) {
            let (_, f) = crate::congruence::quotient(&c)?;
            for s in crate::hom::all_sections(&f) {
                points.push(Point::new(f.clone(), s)?);
            }
        }
    }
    for p1 in &points {
        for p2 in &points {
            let isos = crate::hom::all_isos(&p2.f.cod, &p1.f.cod);
            let Some(iso) = isos.first() else { continue };
            let f2 = p2.f.then(iso)?;
            let s2 = iso.inverse().expect("iso").then(&p2.s)?;
            let inst = LimitClosureInstance {
                p1: p1.clone(),
                p2: Point::new(f2, s2)?,
            };
            summary.absorb(&probe_limit_closure(&inst, class)?);
        }
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{product, Table};
    use crate::hom::make_homomorphism;

    fn z(n: usize) -> Arc<Algebra> {
        Arc::new(Algebra::cyclic(n))
    }

    fn semilattice_point() -> Point {
        // Chain semilattice e > k > a onto {e, m} with section m -> a.
        let t = Table::from_rows(&[vec![0, 1, 2], vec![1, 1, 2], vec![2, 2, 2]]).unwrap();
        let sl = Arc::new(
            Algebra::monoid(vec!["e".into(), "k".into(), "a".into()], t, 0).unwrap(),
        );
        let m2 = Arc::new(Algebra::idempotent_pair());
        let f = make_homomorphism(&sl, &m2, vec![0, 0, 1]).unwrap();
        let s = make_homomorphism(&m2, &sl, vec![0, 2]).unwrap();
        Point::new(f, s).unwrap()
    }

    #[test]
    fn product_projection_is_schreier_with_expected_retraction() {
        let z2 = z(2);
        let m2 = Arc::new(Algebra::idempotent_pair());
        let p = product(&z2, &m2).unwrap();
        let point = Point::new(p.p1.clone(), p.s1.clone().unwrap()).unwrap();
        let cls = classify(&point, SigmaClass::Schreier).unwrap();
        assert!(cls.in_class);
        let q = cls.retraction.unwrap();
        // q(a, b) = (0, b)
        for (i, &(_, b)) in p.pairs.iter().enumerate() {
            assert_eq!(p.pairs[q[i]], (0, b));
        }
    }

    #[test]
    fn semilattice_point_is_weakly_schreier_but_not_schreier() {
        let point = semilattice_point();
        let weak = classify(&point, SigmaClass::WeaklySchreier).unwrap();
        assert!(weak.in_class);
        let strict = classify(&point, SigmaClass::Schreier).unwrap();
        assert!(!strict.in_class);
        let v = strict.violation.unwrap();
        // mu_m maps both kernel elements e, k to a.
        assert_eq!(v.base, 1);
        assert_eq!(v.image, vec![2, 2]);
    }

    #[test]
    fn terminal_point_of_r3_is_acupuncturing() {
        let r3 = Arc::new(Algebra::dihedral_quandle(3));
        let f = Hom::terminal(&r3);
        let s = make_homomorphism(&f.cod, &r3, vec![0]).unwrap();
        let point = Point::new(f, s).unwrap();
        assert!(classify(&point, SigmaClass::Acupuncturing).unwrap().in_class);
        assert!(classify(&point, SigmaClass::Puncturing).unwrap().in_class);
    }

    #[test]
    fn identity_point_identities_hold() {
        let z4 = z(4);
        let id = Hom::identity(&z4);
        let p = Point::new(id.clone(), id).unwrap();
        let report = retraction_identities(&p).unwrap();
        assert!(report.all_hold());
    }

    #[test]
    fn d3_over_z2_satisfies_all_retraction_identities() {
        let d3 = Arc::new(Algebra::dihedral_group(3));
        let z2 = z(2);
        let f = make_homomorphism(&d3, &z2, vec![0, 0, 0, 1, 1, 1]).unwrap();
        let s = make_homomorphism(&z2, &d3, vec![0, 3]).unwrap();
        let p = Point::new(f, s).unwrap();
        let report = retraction_identities(&p).unwrap();
        assert!(report.all_hold());
    }

    #[test]
    fn identity_is_special_for_every_class() {
        let z4 = z(4);
        let id = Hom::identity(&z4);
        assert!(sigma_special(&id, SigmaClass::Schreier).unwrap().in_class);
        assert!(sigma_special(&id, SigmaClass::WeaklySchreier).unwrap().in_class);
        let r3 = Arc::new(Algebra::dihedral_quandle(3));
        let idq = Hom::identity(&r3);
        assert!(sigma_special(&idq, SigmaClass::Puncturing).unwrap().in_class);
        assert!(sigma_special(&idq, SigmaClass::Acupuncturing).unwrap().in_class);
    }

    #[test]
    fn mod2_from_z4_is_schreier_special() {
        let f = make_homomorphism(&z(4), &z(2), vec![0, 1, 0, 1]).unwrap();
        assert!(sigma_special(&f, SigmaClass::Schreier).unwrap().in_class);
    }

    #[test]
    fn m2_terminal_is_not_schreier_special() {
        let m2 = Arc::new(Algebra::idempotent_pair());
        assert!(!sigma_special_object(&m2, SigmaClass::Schreier).unwrap());
    }

    #[test]
    fn special_objects_match_groups_and_latin_quandles() {
        assert!(sigma_special_object(&z(4), SigmaClass::Schreier).unwrap());
        let r3 = Arc::new(Algebra::dihedral_quandle(3));
        assert!(sigma_special_object(&r3, SigmaClass::Acupuncturing).unwrap());
        assert!(r3.is_latin());
    }

    #[test]
    fn identity_square_is_a_regular_pushout() {
        let z4 = z(4);
        let id = Hom::identity(&z4);
        let rep = regular_pushout(&id, &id, &id, &id).unwrap();
        assert!(rep.regular && rep.rx_surjective && rep.rf_surjective);
    }

    #[test]
    fn z4_square_onto_z2_is_a_regular_pushout() {
        // f = x = mod 2, f' = y = id: the pullback Y x_{Y'} X' is the diagonal
        // copy of Z2 (2 elements) and the induced map is onto it.
        let z4 = z(4);
        let z2 = z(2);
        let f = make_homomorphism(&z4, &z2, vec![0, 1, 0, 1]).unwrap();
        let x = make_homomorphism(&z4, &z2, vec![0, 1, 0, 1]).unwrap();
        let id = Hom::identity(&z2);
        let rep = regular_pushout(&f, &x, &id, &id).unwrap();
        assert!(rep.regular && rep.rx_surjective && rep.rf_surjective);
    }

    #[test]
    fn collapsing_both_legs_to_the_terminal_is_not_regular() {
        // Same f = x = mod 2 but with Y' = 1: the pullback is all of Z2 x Z2
        // and the induced map only reaches the diagonal. Matches the
        // diagnostic view: R(x) : R[f] -> R[f'] is not surjective either.
        let z4 = z(4);
        let z2 = z(2);
        let one = Arc::new(Algebra::terminal(Kind::Monoid));
        let f = make_homomorphism(&z4, &z2, vec![0, 1, 0, 1]).unwrap();
        let x = make_homomorphism(&z4, &z2, vec![0, 1, 0, 1]).unwrap();
        let fp = Hom::new(z2.clone(), one.clone(), vec![0, 0]).unwrap();
        let y = Hom::new(z2, one, vec![0, 0]).unwrap();
        let rep = regular_pushout(&f, &x, &fp, &y).unwrap();
        assert!(!rep.regular);
        assert!(rep.missing.is_some());
        assert!(!rep.rx_surjective);
    }

    #[test]
    fn strong_point_along_identity() {
        let z2 = z(2);
        let p = product(&z2, &z2).unwrap();
        let point = Point::new(p.p1.clone(), p.s1.clone().unwrap()).unwrap();
        assert!(strong_point(&point, &Hom::identity(&z2)).unwrap());
    }

    #[test]
    fn schreier_point_pulled_back_along_terminal_element_stays_strong() {
        let z2 = z(2);
        let p = product(&z2, &z2).unwrap();
        let point = Point::new(p.p1.clone(), p.s1.clone().unwrap()).unwrap();
        let one = Arc::new(Algebra::terminal(Kind::Monoid));
        let g = Hom::new(one, z2, vec![0]).unwrap();
        assert!(strong_point(&point, &g).unwrap());
    }

    #[test]
    fn weakly_schreier_probe_is_reported_not_asserted() {
        let point = semilattice_point();
        let one = Arc::new(Algebra::terminal(Kind::Monoid));
        let g = Hom::new(one, point.f.cod.clone(), vec![0]).unwrap();
        // Just a probe: record the verdict, no theorem to enforce.
        let _ = strong_point(&point, &g).unwrap();
    }

    #[test]
    fn two_regular_probe_on_quotient_of_product_projections() {
        let z2 = z(2);
        let p = product(&z2, &z2).unwrap();
        let top = Point::new(p.p1.clone(), p.s1.clone().unwrap()).unwrap();
        let one = Arc::new(Algebra::terminal(Kind::Monoid));
        let x = Hom::new(p.algebra.clone(), z2.clone(), p.p2.map().to_vec()).unwrap();
        let y = Hom::new(z2.clone(), one.clone(), vec![0, 0]).unwrap();
        let fp = Hom::new(z2.clone(), one.clone(), vec![0, 0]).unwrap();
        let sp = Hom::new(one, z2.clone(), vec![0]).unwrap();
        let bottom = Point::new(fp, sp).unwrap();
        let inst = TwoRegularInstance { top, bottom, x, y };
        let verdict = probe_two_regular(&inst, SigmaClass::Schreier).unwrap();
        assert!(!verdict.vacuous());
        assert!(verdict.holds());
    }
}
