//! Exact sequences and forks, the two flavors of weakly 3x3 grids, lemma
//! verdicts on them, and the counterexample search over assembled grids.

use std::sync::Arc;

use rayon::prelude::*;

use crate::algebra::{subalgebra, subproduct, Algebra, El, Kind};
use crate::congruence::{all_congruences, congruence_generated, kernel_object, kernel_pair, Congruence};
use crate::error::{Error, Result};
use crate::hom::Hom;
use crate::points::{sigma_special_quick, SigmaClass};
use crate::relation::Relation;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    Normalized,
    Denormalized,
}

impl Flavor {
    pub fn as_str(self) -> &'static str {
        match self {
            Flavor::Normalized => "normalized",
            Flavor::Denormalized => "denormalized",
        }
    }

    pub fn parse(s: &str) -> Option<Flavor> {
        match s {
            "normalized" => Some(Flavor::Normalized),
            "denormalized" => Some(Flavor::Denormalized),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Upper,
    Lower,
    Full,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Upper => "upper",
            Variant::Lower => "lower",
            Variant::Full => "full",
        }
    }

    pub fn parse(s: &str) -> Option<Variant> {
        match s {
            "upper" => Some(Variant::Upper),
            "lower" => Some(Variant::Lower),
            "full" => Some(Variant::Full),
            _ => None,
        }
    }
}

/// Verdict for a candidate exact sequence `K >-> X ->> Y` (pointed kinds).
#[derive(Debug, Clone)]
pub struct SequenceVerdict {
    /// `k` is injective and its image is exactly `f^{-1}(unit)`.
    pub kernel_matches: bool,
    pub surjective: bool,
    /// `f` is the cokernel of `k`: the congruence generated by
    /// `{(n, unit)}` equals the kernel pair of `f`.
    pub is_cokernel: bool,
    /// `f` is Sigma-special, when a class was supplied.
    pub special: Option<bool>,
}

impl SequenceVerdict {
    pub fn exact(&self) -> bool {
        self.kernel_matches && self.surjective && self.is_cokernel
    }

    pub fn sigma_exact(&self) -> bool {
        self.exact() && self.special.unwrap_or(false)
    }
}

pub fn check_exact_sequence(k: &Hom, f: &Hom, class: Option<SigmaClass>) -> Result<SequenceVerdict> {
    if k.cod != f.dom {
        return Err(Error::Shape("sequence maps do not compose".into()));
    }
    if !f.dom.kind().is_pointed() {
        return Err(Error::UnsupportedKind("exact sequences need a pointed kind"));
    }
    let unit_cod = f.cod.unit();
    let mut fiber: Vec<El> = f.dom.elements().filter(|&x| f.apply(x) == unit_cod).collect();
    fiber.sort_unstable();
    let image = k.image();
    let kernel_matches = k.is_injective() && image == fiber;
    let surjective = f.is_surjective();
    let unit_dom = f.dom.unit();
    let seed: Vec<(El, El)> = image.iter().map(|&n| (n, unit_dom)).collect();
    let generated = congruence_generated(&f.dom, &seed)?;
    let is_cokernel = surjective && generated.class_ids() == kernel_pair(f).class_ids();
    let special = match class {
        Some(c) => Some(sigma_special_quick(f, c)?),
        None => None,
    };
    Ok(SequenceVerdict { kernel_matches, surjective, is_cokernel, special })
}

/// A reflexive-graph fork `G (d0, d1)=> X -f-> Y` with `f d0 = f d1`.
#[derive(Debug, Clone)]
pub struct Fork {
    pub d0: Hom,
    pub d1: Hom,
    pub f: Hom,
}

impl Fork {
    pub fn new(d0: Hom, d1: Hom, f: Hom) -> Result<Fork> {
        if d0.dom != d1.dom || d0.cod != d1.cod || d0.cod != f.dom {
            return Err(Error::Shape("fork legs do not line up".into()));
        }
        for g in d0.dom.elements() {
            if f.apply(d0.apply(g)) != f.apply(d1.apply(g)) {
                return Err(Error::Shape(format!("f does not coequalize the legs at {g}")));
            }
        }
        Ok(Fork { d0, d1, f })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForkSide {
    Left,
    Right,
    Both,
}

#[derive(Debug, Clone)]
pub struct ForkVerdict {
    /// `G` is the kernel equivalence relation of `f` (legs jointly monic and
    /// their pair image is exactly the kernel pair).
    pub left: Option<bool>,
    /// `f` is the coequalizer of `(d0, d1)` (surjective, and its kernel pair
    /// is generated by the leg graph).
    pub right: Option<bool>,
}

impl ForkVerdict {
    pub fn exact(&self) -> bool {
        self.left.unwrap_or(true) && self.right.unwrap_or(true)
    }
}

pub fn check_fork(fork: &Fork, side: ForkSide) -> Result<ForkVerdict> {
    let want_left = matches!(side, ForkSide::Left | ForkSide::Both);
    let want_right = matches!(side, ForkSide::Right | ForkSide::Both);
    let left = want_left.then(|| fork_left_exact(fork));
    let right = want_right.then(|| fork_right_exact(fork)).transpose()?;
    Ok(ForkVerdict { left, right })
}

fn fork_left_exact(fork: &Fork) -> bool {
    let g = &fork.d0.dom;
    let mut image: Vec<(El, El)> =
        g.elements().map(|e| (fork.d0.apply(e), fork.d1.apply(e))).collect();
    let monic = {
        let mut sorted = image.clone();
        sorted.sort_unstable();
        sorted.windows(2).all(|w| w[0] != w[1])
    };
    image.sort_unstable();
    image.dedup();
    let kp = kernel_pair(&fork.f);
    let mut kp_pairs = kp.pairs();
    kp_pairs.sort_unstable();
    monic && image == kp_pairs
}

fn fork_right_exact(fork: &Fork) -> Result<bool> {
    if !fork.f.is_surjective() {
        return Ok(false);
    }
    let graph: Vec<(El, El)> = fork
        .d0
        .dom
        .elements()
        .map(|e| (fork.d0.apply(e), fork.d1.apply(e)))
        .collect();
    let generated = congruence_generated(&fork.f.dom, &graph)?;
    Ok(generated.class_ids() == kernel_pair(&fork.f).class_ids())
}

/// The normalized nine-object grid, in canonical internal form. Subobjects
/// carry their carrier algebra and the inclusion/structure map into the grid.
#[derive(Debug, Clone)]
pub struct NormGrid {
    pub f: Hom,    // X ->> Y
    pub xmap: Hom, // X ->> X'
    pub fp: Hom,   // X' ->> Y'
    pub ymap: Hom, // Y ->> Y'
    pub kf: (Arc<Algebra>, Hom),
    pub kfp: (Arc<Algebra>, Hom),
    pub kx: (Arc<Algebra>, Hom),
    pub u: (Arc<Algebra>, Hom),
    pub phi: Hom,  // K[x] ->> U
    pub kphi: (Arc<Algebra>, Hom),
    pub kkx: Hom,  // K[phi] -> K[f]
    pub kxh: Hom,  // K(x) : K[f] -> K[f']
}

/// The denormalized nine-object grid: three kernel-pair relations, the image
/// graph `W` with its legs, and the connecting maps. The top-left object
/// `R[phi]` is kept as a plain pair list over `R[x]` indices; its pair
/// algebra can be materialized on demand but is never needed for checking.
#[derive(Debug, Clone)]
pub struct DenormGrid {
    pub f: Hom,
    pub xmap: Hom,
    pub fp: Hom,
    pub ymap: Hom,
    pub rf: Relation,
    pub rx: Relation,
    pub rfp: Relation,
    pub w: WGraph,
    pub phi: Hom, // R[x] ->> W
    /// Kernel pair of `phi`, as pairs of `R[x]` indices.
    pub rphi_pairs: Vec<(El, El)>,
    pub rxh: Hom, // R(x) : R[f] -> R[f']
}

impl DenormGrid {
    /// Image of an `R[phi]` element under `R(d0^x)` resp. `R(d1^x)`.
    pub fn top_leg(&self, pair: (El, El), first: bool) -> Option<El> {
        let a = self.rx.pairs()[pair.0];
        let b = self.rx.pairs()[pair.1];
        let img = if first { (a.0, b.0) } else { (a.1, b.1) };
        self.rf.index_of(img)
    }

    /// Materialize `R[phi]` as a relation on the `R[x]` carrier.
    pub fn rphi_relation(&self) -> Result<Relation> {
        Relation::from_pairs(self.rx.carrier().clone(), self.rphi_pairs.clone())
    }
}

/// A reflexive graph on `Y`: two legs and a common section.
#[derive(Debug, Clone)]
pub struct WGraph {
    pub carrier: Arc<Algebra>,
    pub y0: Hom,
    pub y1: Hom,
    pub s0: Hom,
}

impl WGraph {
    pub fn jointly_monic(&self) -> bool {
        let mut seen: Vec<(El, El)> = self
            .carrier
            .elements()
            .map(|w| (self.y0.apply(w), self.y1.apply(w)))
            .collect();
        seen.sort_unstable();
        seen.windows(2).all(|p| p[0] != p[1])
    }
}

#[derive(Debug, Clone)]
pub enum Grid {
    Norm(NormGrid),
    Denorm(DenormGrid),
}

impl Grid {
    pub fn flavor(&self) -> Flavor {
        match self {
            Grid::Norm(_) => Flavor::Normalized,
            Grid::Denorm(_) => Flavor::Denormalized,
        }
    }
}

fn positions_in(incl: &Hom, e: El) -> Option<El> {
    incl.map().iter().position(|&v| v == e)
}

/// Validate the weakly 3x3 conditions for a normalized grid: all squares
/// commute and the three columns and the middle row are exact sequences.
pub fn validate_normalized(g: &NormGrid) -> Result<()> {
    // Shapes.
    if g.kf.1.cod != g.f.dom
        || g.kfp.1.cod != g.fp.dom
        || g.kx.1.cod != g.f.dom
        || g.u.1.cod != g.ymap.dom
        || g.phi.dom != g.kx.0
        || g.phi.cod != g.u.0
        || g.kphi.1.cod != g.kx.0
        || g.kkx.dom != g.kphi.0
        || g.kkx.cod != g.kf.0
        || g.kxh.dom != g.kf.0
        || g.kxh.cod != g.kfp.0
        || g.f.cod != g.ymap.dom
        || g.xmap.cod != g.fp.dom
        || g.fp.cod != g.ymap.cod
        || g.xmap.dom != g.f.dom
    {
        return Err(Error::Shape("grid maps do not line up".into()));
    }
    // Commutativity.
    for a in g.f.dom.elements() {
        if g.fp.apply(g.xmap.apply(a)) != g.ymap.apply(g.f.apply(a)) {
            return Err(Error::NotCommuting(a));
        }
    }
    for e in g.kx.0.elements() {
        if g.u.1.apply(g.phi.apply(e)) != g.f.apply(g.kx.1.apply(e)) {
            return Err(Error::NotCommuting(e));
        }
    }
    for e in g.kphi.0.elements() {
        if g.kf.1.apply(g.kkx.apply(e)) != g.kx.1.apply(g.kphi.1.apply(e)) {
            return Err(Error::NotCommuting(e));
        }
    }
    for e in g.kf.0.elements() {
        if g.kfp.1.apply(g.kxh.apply(e)) != g.xmap.apply(g.kf.1.apply(e)) {
            return Err(Error::NotCommuting(e));
        }
    }
    // Exactness of the three columns and the middle row.
    if !check_exact_sequence(&g.kf.1, &g.f, None)?.exact() {
        return Err(Error::NotWeakly3x3("middle column".into()));
    }
    if !check_exact_sequence(&g.kfp.1, &g.fp, None)?.exact() {
        return Err(Error::NotWeakly3x3("right column".into()));
    }
    if !check_exact_sequence(&g.kphi.1, &g.phi, None)?.exact() {
        return Err(Error::NotWeakly3x3("left column".into()));
    }
    if !check_exact_sequence(&g.kx.1, &g.xmap, None)?.exact() {
        return Err(Error::NotWeakly3x3("middle row".into()));
    }
    Ok(())
}

/// Validate the weakly 3x3 conditions for a denormalized grid: commuting
/// squares, and exact forks in the three columns and the middle row.
pub fn validate_denormalized(g: &DenormGrid) -> Result<()> {
    if g.rf.base() != &g.f.dom
        || g.rx.base() != &g.f.dom
        || g.rfp.base() != &g.fp.dom
        || g.phi.dom != *g.rx.carrier()
        || g.phi.cod != g.w.carrier
        || g.w.y0.cod != g.f.cod
        || g.ymap.dom != g.f.cod
        || g.fp.cod != g.ymap.cod
        || g.rxh.dom != *g.rf.carrier()
        || g.rxh.cod != *g.rfp.carrier()
    {
        return Err(Error::Shape("grid maps do not line up".into()));
    }
    for a in g.f.dom.elements() {
        if g.fp.apply(g.xmap.apply(a)) != g.ymap.apply(g.f.apply(a)) {
            return Err(Error::NotCommuting(a));
        }
    }
    // Legs of W against phi.
    for (i, &(a, b)) in g.rx.pairs().iter().enumerate() {
        if g.w.y0.apply(g.phi.apply(i)) != g.f.apply(a)
            || g.w.y1.apply(g.phi.apply(i)) != g.f.apply(b)
        {
            return Err(Error::NotCommuting(i));
        }
    }
    // Upward: s0^W o f = phi o s0^{R[x]}.
    for a in g.f.dom.elements() {
        let diag = g.rx.index_of((a, a)).ok_or_else(|| Error::Shape("R[x] misses diagonal".into()))?;
        if g.phi.apply(diag) != g.w.s0.apply(g.f.apply(a)) {
            return Err(Error::NotCommuting(a));
        }
    }
    // Horizontal maps of the top row land in R[f], and R(x) matches x.
    for (i, &pq) in g.rphi_pairs.iter().enumerate() {
        if g.top_leg(pq, true).is_none() || g.top_leg(pq, false).is_none() {
            return Err(Error::NotCommuting(i));
        }
    }
    for (i, &(a, b)) in g.rf.pairs().iter().enumerate() {
        if g.rfp.pairs()[g.rxh.apply(i)] != (g.xmap.apply(a), g.xmap.apply(b)) {
            return Err(Error::NotCommuting(i));
        }
    }
    // Exact forks: columns and middle row.
    let col = |r: &Relation, f: &Hom| -> Result<bool> {
        let fork = Fork::new(r.d0(), r.d1(), f.clone())?;
        Ok(check_fork(&fork, ForkSide::Both)?.exact())
    };
    if !col(&g.rf, &g.f)? {
        return Err(Error::NotWeakly3x3("middle column".into()));
    }
    if !col(&g.rfp, &g.fp)? {
        return Err(Error::NotWeakly3x3("right column".into()));
    }
    // Left column, on indices: R[phi] must be exactly the kernel pair of phi
    // and phi must be its coequalizer.
    {
        let mut pairs = g.rphi_pairs.clone();
        pairs.sort_unstable();
        pairs.dedup();
        if pairs.len() != g.rphi_pairs.len() {
            return Err(Error::NotWeakly3x3("left column".into()));
        }
        let mut kp: Vec<(El, El)> = Vec::new();
        for p in 0..g.rx.pairs().len() {
            for q in 0..g.rx.pairs().len() {
                if g.phi.apply(p) == g.phi.apply(q) {
                    kp.push((p, q));
                }
            }
        }
        if pairs != kp {
            return Err(Error::NotWeakly3x3("left column".into()));
        }
        if !g.phi.is_surjective() {
            return Err(Error::NotWeakly3x3("left column".into()));
        }
        let generated = congruence_generated(g.rx.carrier(), &pairs)?;
        if generated.class_ids() != kernel_pair(&g.phi).class_ids() {
            return Err(Error::NotWeakly3x3("left column".into()));
        }
    }
    let mid = Fork::new(g.rx.d0(), g.rx.d1(), g.xmap.clone())?;
    if !check_fork(&mid, ForkSide::Both)?.exact() {
        return Err(Error::NotWeakly3x3("middle row".into()));
    }
    Ok(())
}

/// Everything the lemma variants quantify over, computed once per grid and
/// class: the per-map Sigma-special flags and the exactness of the outer rows.
#[derive(Debug, Clone, Copy)]
pub struct GridFacts {
    pub f_special: bool,
    pub x_special: bool,
    pub phi_special: bool,
    pub fp_special: bool,
    pub fpx_special: bool,
    pub lower_exact: bool,
    /// The lower row's epi part (`y`) is Sigma-special.
    pub lower_special: bool,
    pub upper_exact: bool,
    /// The upper row's epi part (`K(x)` resp. `R(x)`) is Sigma-special.
    pub upper_special: bool,
}

pub fn normalized_facts(g: &NormGrid, class: SigmaClass) -> Result<GridFacts> {
    let lower = check_exact_sequence(&g.u.1, &g.ymap, Some(class))?;
    let upper = check_exact_sequence(&g.kkx, &g.kxh, Some(class))?;
    Ok(GridFacts {
        f_special: sigma_special_quick(&g.f, class)?,
        x_special: sigma_special_quick(&g.xmap, class)?,
        phi_special: sigma_special_quick(&g.phi, class)?,
        fp_special: sigma_special_quick(&g.fp, class)?,
        fpx_special: sigma_special_quick(&g.xmap.then(&g.fp)?, class)?,
        lower_exact: lower.exact(),
        lower_special: lower.special.unwrap_or(false),
        upper_exact: upper.exact(),
        upper_special: upper.special.unwrap_or(false),
    })
}

pub fn denormalized_facts(g: &DenormGrid, class: SigmaClass) -> Result<GridFacts> {
    let lower_fork = Fork::new(g.w.y0.clone(), g.w.y1.clone(), g.ymap.clone())?;
    // Upper fork, on indices: left exactness needs the top legs jointly monic
    // with image exactly the kernel pair of R(x); right exactness needs R(x)
    // surjective with kernel pair generated by the leg graph.
    let mut leg_graph: Vec<(El, El)> = g
        .rphi_pairs
        .iter()
        .map(|&pq| (g.top_leg(pq, true).unwrap(), g.top_leg(pq, false).unwrap()))
        .collect();
    let upper_left = {
        let monic = {
            let mut sorted = leg_graph.clone();
            sorted.sort_unstable();
            sorted.windows(2).all(|w| w[0] != w[1])
        };
        let mut image = leg_graph.clone();
        image.sort_unstable();
        image.dedup();
        let mut kp: Vec<(El, El)> = Vec::new();
        for i in 0..g.rf.pairs().len() {
            for j in 0..g.rf.pairs().len() {
                if g.rxh.apply(i) == g.rxh.apply(j) {
                    kp.push((i, j));
                }
            }
        }
        monic && image == kp
    };
    let upper_right = g.rxh.is_surjective() && {
        leg_graph.sort_unstable();
        leg_graph.dedup();
        let generated = congruence_generated(g.rf.carrier(), &leg_graph)?;
        generated.class_ids() == kernel_pair(&g.rxh).class_ids()
    };
    Ok(GridFacts {
        f_special: sigma_special_quick(&g.f, class)?,
        x_special: sigma_special_quick(&g.xmap, class)?,
        phi_special: sigma_special_quick(&g.phi, class)?,
        fp_special: sigma_special_quick(&g.fp, class)?,
        fpx_special: sigma_special_quick(&g.xmap.then(&g.fp)?, class)?,
        lower_exact: check_fork(&lower_fork, ForkSide::Both)?.exact(),
        lower_special: sigma_special_quick(&g.ymap, class)?,
        upper_exact: upper_left && upper_right,
        upper_special: sigma_special_quick(&g.rxh, class)?,
    })
}

pub fn grid_facts(grid: &Grid, class: SigmaClass) -> Result<GridFacts> {
    match grid {
        Grid::Norm(g) => normalized_facts(g, class),
        Grid::Denorm(g) => denormalized_facts(g, class),
    }
}

#[derive(Debug, Clone)]
pub struct HypothesisCheck {
    pub name: &'static str,
    /// Whether the hypothesis participates in the vacuousness test (false for
    /// dropped hypotheses and optional Sigma-grade triggers).
    pub required: bool,
    pub holds: bool,
}

/// Verdict of one lemma variant on one grid. `conclusion` is `None` when a
/// required hypothesis failed (vacuous case, never conflated with true).
#[derive(Debug, Clone)]
pub struct LemmaVerdict {
    pub flavor: Flavor,
    pub variant: Variant,
    pub hypotheses: Vec<HypothesisCheck>,
    pub conclusion: Option<bool>,
    pub witness: Option<String>,
}

impl LemmaVerdict {
    pub fn vacuous(&self) -> bool {
        self.conclusion.is_none()
    }

    pub fn holds(&self) -> bool {
        self.conclusion.unwrap_or(true)
    }
}

/// Names accepted by `--drop`.
pub const HYPOTHESIS_NAMES: &[&str] = &[
    "f-special",
    "x-special",
    "phi-special",
    "fp-special",
    "fpx-special",
    "lower-exact",
    "lower-special",
    "upper-exact",
    "upper-special",
];

/// Evaluate a lemma variant over precomputed facts. Dropped hypotheses are
/// recorded but waived from both the vacuousness test and any Sigma-grade
/// trigger.
pub fn evaluate_lemma(
    flavor: Flavor,
    variant: Variant,
    facts: &GridFacts,
    drop: &[String],
) -> LemmaVerdict {
    let dropped = |name: &str| drop.iter().any(|d| d == name);
    let mut hypotheses: Vec<HypothesisCheck> = Vec::new();
    let mut require = |name: &'static str, holds: bool| {
        let required = !dropped(name);
        hypotheses.push(HypothesisCheck { name, required, holds });
    };
    let optional = |hypotheses: &mut Vec<HypothesisCheck>, name: &'static str, holds: bool| {
        hypotheses.push(HypothesisCheck { name, required: false, holds });
        holds && !dropped(name)
    };

    let (conclusion_parts, witness): (Vec<(&str, bool)>, _) = match (flavor, variant) {
        (Flavor::Normalized, Variant::Upper) => {
            require("f-special", facts.f_special);
            require("x-special", facts.x_special);
            require("phi-special", facts.phi_special);
            require("fp-special", facts.fp_special);
            require("lower-exact", facts.lower_exact);
            require("lower-special", facts.lower_special);
            (
                vec![
                    ("upper row exact", facts.upper_exact),
                    ("upper epi special", facts.upper_special),
                ],
                None,
            )
        }
        (Flavor::Normalized, Variant::Lower) => {
            require("f-special", facts.f_special);
            require("x-special", facts.x_special);
            require("phi-special", facts.phi_special);
            require("fp-special", facts.fp_special);
            require("upper-exact", facts.upper_exact);
            require("upper-special", facts.upper_special);
            (
                vec![
                    ("lower row exact", facts.lower_exact),
                    ("lower epi special", facts.lower_special),
                ],
                None,
            )
        }
        (_, Variant::Full) => {
            require("lower-special", facts.lower_special);
            require("fp-special", facts.fp_special);
            require("fpx-special", facts.fpx_special);
            (
                vec![("upper exact iff lower exact", facts.upper_exact == facts.lower_exact)],
                Some(format!(
                    "upper exact = {}, lower exact = {}",
                    facts.upper_exact, facts.lower_exact
                )),
            )
        }
        (Flavor::Denormalized, Variant::Upper) => {
            require("x-special", facts.x_special);
            require("lower-exact", facts.lower_exact);
            let sigma = optional(&mut hypotheses, "lower-special", facts.lower_special);
            let mut parts = vec![("upper row exact", facts.upper_exact)];
            if sigma {
                parts.push(("upper epi special", facts.upper_special));
            }
            (parts, None)
        }
        (Flavor::Denormalized, Variant::Lower) => {
            require("f-special", facts.f_special);
            require("upper-exact", facts.upper_exact);
            let sigma = optional(&mut hypotheses, "x-special", facts.x_special)
                & optional(&mut hypotheses, "upper-special", facts.upper_special);
            let mut parts = vec![("lower row exact", facts.lower_exact)];
            if sigma {
                parts.push(("lower epi special", facts.lower_special));
            }
            (parts, None)
        }
    };

    let vacuous = hypotheses.iter().any(|h| h.required && !h.holds);
    let conclusion = if vacuous {
        None
    } else {
        Some(conclusion_parts.iter().all(|&(_, ok)| ok))
    };
    let witness = match conclusion {
        Some(false) => conclusion_parts
            .iter()
            .find(|&&(_, ok)| !ok)
            .map(|&(name, _)| name.to_string())
            .or(witness),
        _ => witness,
    };
    LemmaVerdict { flavor, variant, hypotheses, conclusion, witness }
}

pub fn verify_lemma(grid: &Grid, variant: Variant, class: SigmaClass) -> Result<LemmaVerdict> {
    let facts = grid_facts(grid, class)?;
    Ok(evaluate_lemma(grid.flavor(), variant, &facts, &[]))
}

/// Grid-assembly candidate: a carrier and the two congruences that induce the
/// vertical and horizontal quotients.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub algebra: Arc<Algebra>,
    pub cf: Congruence,
    pub cx: Congruence,
    /// Provenance indices (library position, congruence positions).
    pub ids: (usize, usize, usize),
}

/// All candidates over a kind up to `max_order`, in deterministic order.
pub fn candidates(kind: Kind, max_order: usize) -> Result<Vec<Candidate>> {
    let mut out = Vec::new();
    let mut lib_index = 0;
    for n in 1..=max_order {
        for alg in crate::enumerate::library(kind, n)?.iter() {
            let cons = all_congruences(alg);
            for (i, cf) in cons.iter().enumerate() {
                for (j, cx) in cons.iter().enumerate() {
                    out.push(Candidate {
                        algebra: alg.clone(),
                        cf: cf.clone(),
                        cx: cx.clone(),
                        ids: (lib_index, i, j),
                    });
                }
            }
            lib_index += 1;
        }
    }
    Ok(out)
}

/// Map between two quotients of the same carrier along a refinement: the
/// class of `a` in the finer quotient goes to its class in the coarser one.
fn induced_quotient_map(
    src: &(Arc<Algebra>, Hom),
    dst_alg: &Arc<Algebra>,
    dst_cong: &Congruence,
) -> Result<Hom> {
    let reps: Vec<El> = src
        .0
        .elements()
        .map(|cl| src.1.map().iter().position(|&v| v == cl).expect("projection is surjective"))
        .collect();
    Hom::new(
        src.0.clone(),
        dst_alg.clone(),
        reps.iter().map(|&r| dst_cong.class_of(r)).collect(),
    )
}

/// Assemble the normalized grid induced by two congruences on `X`. Fails with
/// `NotWeakly3x3` when a column or the middle row is not exact.
pub fn assemble_normalized(c: &Candidate) -> Result<NormGrid> {
    if !c.algebra.kind().is_pointed() {
        return Err(Error::UnsupportedKind("normalized grids need a pointed kind"));
    }
    let (y_alg, f) = crate::congruence::quotient(&c.cf)?;
    let (xp_alg, xmap) = crate::congruence::quotient(&c.cx)?;
    let cj = c.cf.join(&c.cx);
    let (yp_alg, _) = crate::congruence::quotient(&cj)?;
    let fp = induced_quotient_map(&(xp_alg.clone(), xmap.clone()), &yp_alg, &cj)?;
    let ymap = induced_quotient_map(&(y_alg.clone(), f.clone()), &yp_alg, &cj)?;

    let kf = kernel_object(&f)?;
    let kfp = kernel_object(&fp)?;
    let kx = kernel_object(&xmap)?;

    // U = f(K[x]) as a subalgebra of Y.
    let mut u_elems: Vec<El> = kx.1.map().iter().map(|&e| f.apply(e)).collect();
    u_elems.sort_unstable();
    u_elems.dedup();
    let u = subalgebra(&y_alg, &u_elems)?;
    let phi = Hom::new(
        kx.0.clone(),
        u.0.clone(),
        kx.1
            .map()
            .iter()
            .map(|&e| positions_in(&u.1, f.apply(e)).expect("image element"))
            .collect(),
    )?;
    let kphi = kernel_object(&phi)?;
    let kkx = Hom::new(
        kphi.0.clone(),
        kf.0.clone(),
        kphi
            .1
            .map()
            .iter()
            .map(|&e| {
                positions_in(&kf.1, kx.1.apply(e))
                    .ok_or_else(|| Error::Internal("K[phi] escapes K[f]".into()))
            })
            .collect::<Result<Vec<_>>>()?,
    )?;
    let kxh = Hom::new(
        kf.0.clone(),
        kfp.0.clone(),
        kf.1
            .map()
            .iter()
            .map(|&e| {
                positions_in(&kfp.1, xmap.apply(e))
                    .ok_or_else(|| Error::Internal("K(x) escapes K[f']".into()))
            })
            .collect::<Result<Vec<_>>>()?,
    )?;
    let grid = NormGrid { f, xmap, fp, ymap, kf, kfp, kx, u, phi, kphi, kkx, kxh };
    validate_normalized(&grid)?;
    Ok(grid)
}

/// Assemble the denormalized grid induced by two congruences on `X`.
pub fn assemble_denormalized(c: &Candidate) -> Result<DenormGrid> {
    let (y_alg, f) = crate::congruence::quotient(&c.cf)?;
    let (xp_alg, xmap) = crate::congruence::quotient(&c.cx)?;
    let cj = c.cf.join(&c.cx);
    let (yp_alg, _) = crate::congruence::quotient(&cj)?;
    let fp = induced_quotient_map(&(xp_alg.clone(), xmap.clone()), &yp_alg, &cj)?;
    let ymap = induced_quotient_map(&(y_alg.clone(), f.clone()), &yp_alg, &cj)?;

    let rf = c.cf.relation();
    let rx = c.cx.relation();
    let rfp = kernel_pair(&fp).relation();

    // W = (f x f)(R[x]) realized on Y.
    let mut w_pairs: Vec<(El, El)> =
        rx.pairs().iter().map(|&(a, b)| (f.apply(a), f.apply(b))).collect();
    w_pairs.sort_unstable();
    w_pairs.dedup();
    let w_carrier = Arc::new(subproduct(&y_alg, &y_alg, &w_pairs)?);
    let widx = |p: (El, El)| w_pairs.binary_search(&p).expect("image pair");
    let y0 = Hom::new(w_carrier.clone(), y_alg.clone(), w_pairs.iter().map(|&(a, _)| a).collect())?;
    let y1 = Hom::new(w_carrier.clone(), y_alg.clone(), w_pairs.iter().map(|&(_, b)| b).collect())?;
    let s0 = Hom::new(y_alg.clone(), w_carrier.clone(), y_alg.elements().map(|b| widx((b, b))).collect())?;
    let w = WGraph { carrier: w_carrier.clone(), y0, y1, s0 };
    let phi = Hom::new(
        rx.carrier().clone(),
        w_carrier,
        rx.pairs().iter().map(|&(a, b)| widx((f.apply(a), f.apply(b)))).collect(),
    )?;
    let kp_phi = kernel_pair(&phi);
    let mut rphi_pairs: Vec<(El, El)> = Vec::new();
    for p in 0..rx.pairs().len() {
        for q in 0..rx.pairs().len() {
            if kp_phi.related(p, q) {
                rphi_pairs.push((p, q));
            }
        }
    }
    let rxh = Hom::new(
        rf.carrier().clone(),
        rfp.carrier().clone(),
        rf.pairs()
            .iter()
            .map(|&(a, b)| {
                rfp.index_of((xmap.apply(a), xmap.apply(b)))
                    .ok_or_else(|| Error::Internal("R(x) escapes R[f']".into()))
            })
            .collect::<Result<Vec<_>>>()?,
    )?;
    let grid = DenormGrid { f, xmap, fp, ymap, rf, rx, rfp, w, phi, rphi_pairs, rxh };
    validate_denormalized(&grid)?;
    Ok(grid)
}

pub fn assemble(c: &Candidate, flavor: Flavor) -> Result<Grid> {
    match flavor {
        Flavor::Normalized => Ok(Grid::Norm(assemble_normalized(c)?)),
        Flavor::Denormalized => Ok(Grid::Denorm(assemble_denormalized(c)?)),
    }
}

/// Assemble every candidate grid of a kind and compute its facts once, in
/// parallel; used by sweeps that evaluate several lemma variants over the
/// same grid population.
pub fn sweep_facts(
    kind: Kind,
    flavor: Flavor,
    class: SigmaClass,
    max_order: usize,
    jobs: usize,
) -> Result<Vec<(usize, GridFacts)>> {
    let cands = candidates(kind, max_order)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Internal(e.to_string()))?;
    let facts: Vec<(usize, GridFacts)> = pool.install(|| {
        cands
            .par_iter()
            .enumerate()
            .filter_map(|(idx, cand)| match assemble(cand, flavor) {
                Ok(grid) => grid_facts(&grid, class).ok().map(|f| (idx, f)),
                Err(_) => None,
            })
            .collect()
    });
    let mut facts = facts;
    facts.sort_by_key(|&(i, _)| i);
    Ok(facts)
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub kind: Kind,
    pub flavor: Flavor,
    pub variant: Variant,
    pub class: SigmaClass,
    pub drop: Vec<String>,
    pub max_order: usize,
    pub jobs: usize,
}

#[derive(Debug)]
pub struct SearchHit {
    pub index: usize,
    pub descriptor: String,
    pub verdict: LemmaVerdict,
    pub grid: Grid,
}

#[derive(Debug)]
pub struct SearchOutcome {
    pub candidates: usize,
    pub admissible: usize,
    pub hits: Vec<SearchHit>,
}

/// Enumerate candidate grids, keep those that satisfy the variant's required
/// hypotheses minus the dropped ones, and stream every diagram whose
/// conclusion fails. Deterministic for fixed bounds.
pub fn search(cfg: &SearchConfig) -> Result<SearchOutcome> {
    if cfg.max_order > crate::enumerate::DEFAULT_BOUND {
        return Err(Error::BoundExceeded {
            requested: cfg.max_order,
            bound: crate::enumerate::DEFAULT_BOUND,
        });
    }
    if !cfg.class.admits(match cfg.kind {
        Kind::Monoid => Kind::Monoid,
        Kind::Semiring => Kind::Semiring,
        Kind::Quandle => Kind::Quandle,
    }) {
        return Err(Error::ClassKindMismatch(format!(
            "{} search over {}",
            cfg.class.as_str(),
            cfg.kind.as_str()
        )));
    }
    if cfg.flavor == Flavor::Normalized && !cfg.kind.is_pointed() {
        return Err(Error::UnsupportedKind("normalized grids need a pointed kind"));
    }
    let cands = candidates(cfg.kind, cfg.max_order)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.max(1))
        .build()
        .map_err(|e| Error::Internal(e.to_string()))?;
    let results: Vec<(usize, Option<(String, LemmaVerdict, Grid)>)> = pool.install(|| {
        cands
            .par_iter()
            .enumerate()
            .map(|(idx, cand)| {
                let item = (|| -> Result<Option<(String, LemmaVerdict, Grid)>> {
                    let grid = match assemble(cand, cfg.flavor) {
                        Ok(g) => g,
                        Err(Error::NotWeakly3x3(_)) => return Ok(None),
                        Err(e) => return Err(e),
                    };
                    let facts = grid_facts(&grid, cfg.class)?;
                    let verdict = evaluate_lemma(cfg.flavor, cfg.variant, &facts, &cfg.drop);
                    if verdict.vacuous() {
                        return Ok(None);
                    }
                    let descriptor = format!(
                        "order {} algebra #{} congruences ({}, {})",
                        cand.algebra.order(),
                        cand.ids.0,
                        cand.ids.1,
                        cand.ids.2
                    );
                    Ok(Some((descriptor, verdict, grid)))
                })();
                (idx, item.unwrap_or(None))
            })
            .collect()
    });
    let mut admissible = 0;
    let mut hits = Vec::new();
    for (idx, item) in results {
        if let Some((descriptor, verdict, grid)) = item {
            admissible += 1;
            if !verdict.holds() {
                hits.push(SearchHit { index: idx, descriptor, verdict, grid });
            }
        }
    }
    hits.sort_by_key(|h| h.index);
    Ok(SearchOutcome { candidates: cands.len(), admissible, hits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::product;
    use crate::hom::make_homomorphism;

    fn z(n: usize) -> Arc<Algebra> {
        Arc::new(Algebra::cyclic(n))
    }

    #[test]
    fn even_subgroup_sequence_is_sigma_exact() {
        let z4 = z(4);
        let (_, incl) = subalgebra(&z4, &[0, 2]).unwrap();
        let f = make_homomorphism(&z4, &z(2), vec![0, 1, 0, 1]).unwrap();
        let v = check_exact_sequence(&incl, &f, Some(SigmaClass::Schreier)).unwrap();
        assert!(v.exact());
        assert!(v.sigma_exact());
    }

    #[test]
    fn unit_inclusion_into_identity_is_exact() {
        let z4 = z(4);
        let (_, incl) = subalgebra(&z4, &[0]).unwrap();
        let id = Hom::identity(&z4);
        let v = check_exact_sequence(&incl, &id, None).unwrap();
        assert!(v.exact());
    }

    fn product_sequence(a: &Arc<Algebra>, b: &Arc<Algebra>) -> SequenceVerdict {
        let p = product(a, b).unwrap();
        // A >-> A x B ->> B with A embedded along the unit of B.
        let a_elems: Vec<El> = p
            .pairs
            .iter()
            .enumerate()
            .filter(|(_, &(_, j))| j == b.unit())
            .map(|(i, _)| i)
            .collect();
        let (_, incl) = subalgebra(&p.algebra, &a_elems).unwrap();
        check_exact_sequence(&incl, &p.p2, Some(SigmaClass::Schreier)).unwrap()
    }

    #[test]
    fn product_sequence_with_group_kernel_is_sigma_exact() {
        let v = product_sequence(&z(2), &Arc::new(Algebra::idempotent_pair()));
        assert!(v.sigma_exact());
    }

    #[test]
    fn product_sequence_with_non_group_kernel_is_exact_but_not_special() {
        // Unique factorization through K[d0] of the kernel-pair point is
        // right-division in the kernel, so the projection is Schreier-special
        // exactly when the kernel is a group. M2 is not.
        let v = product_sequence(&Arc::new(Algebra::idempotent_pair()), &z(2));
        assert!(v.exact());
        assert_eq!(v.special, Some(false));
    }

    #[test]
    fn kernel_pair_fork_is_exact_both_sides() {
        let f = make_homomorphism(&z(4), &z(2), vec![0, 1, 0, 1]).unwrap();
        let r = kernel_pair(&f).relation();
        let fork = Fork::new(r.d0(), r.d1(), f).unwrap();
        let v = check_fork(&fork, ForkSide::Both).unwrap();
        assert_eq!(v.left, Some(true));
        assert_eq!(v.right, Some(true));
    }

    #[test]
    fn diagonal_fork_with_identity_is_exact() {
        let z4 = z(4);
        let d = Congruence::diagonal(z4.clone()).relation();
        let fork = Fork::new(d.d0(), d.d1(), Hom::identity(&z4)).unwrap();
        assert!(check_fork(&fork, ForkSide::Both).unwrap().exact());
    }

    #[test]
    fn diagonal_fork_with_mod2_fails_both_sides() {
        let z4 = z(4);
        let d = Congruence::diagonal(z4.clone()).relation();
        let f = make_homomorphism(&z4, &z(2), vec![0, 1, 0, 1]).unwrap();
        let fork = Fork::new(d.d0(), d.d1(), f).unwrap();
        let v = check_fork(&fork, ForkSide::Both).unwrap();
        assert_eq!(v.left, Some(false));
        assert_eq!(v.right, Some(false));
    }

    fn candidate_from(alg: &Arc<Algebra>, cf: Congruence, cx: Congruence) -> Candidate {
        Candidate { algebra: alg.clone(), cf, cx, ids: (0, 0, 0) }
    }

    #[test]
    fn coordinate_quotients_of_z4_x_z2_form_a_weakly_special_grid() {
        let z4 = z(4);
        let z2 = z(2);
        let p = product(&z4, &z2).unwrap();
        let cf = kernel_pair(&p.p2);
        let cx = kernel_pair(&p.p1);
        let cand = candidate_from(&p.algebra, cf, cx);
        let grid = assemble_normalized(&cand).unwrap();
        let facts = normalized_facts(&grid, SigmaClass::Schreier).unwrap();
        assert!(facts.f_special && facts.x_special && facts.phi_special && facts.fp_special);
        assert!(facts.lower_exact && facts.lower_special);
        let verdict =
            evaluate_lemma(Flavor::Normalized, Variant::Upper, &facts, &[]);
        assert_eq!(verdict.conclusion, Some(true));
    }

    #[test]
    fn degenerate_identity_grid_validates_and_satisfies_every_variant() {
        let z4 = z(4);
        let cand = candidate_from(
            &z4,
            Congruence::diagonal(z4.clone()),
            Congruence::diagonal(z4.clone()),
        );
        let grid = assemble_normalized(&cand).unwrap();
        let facts = normalized_facts(&grid, SigmaClass::Schreier).unwrap();
        for variant in [Variant::Upper, Variant::Lower, Variant::Full] {
            let v = evaluate_lemma(Flavor::Normalized, variant, &facts, &[]);
            assert_eq!(v.conclusion, Some(true), "variant {variant:?}");
        }
        let dgrid = assemble_denormalized(&cand).unwrap();
        let dfacts = denormalized_facts(&dgrid, SigmaClass::Schreier).unwrap();
        for variant in [Variant::Upper, Variant::Lower, Variant::Full] {
            let v = evaluate_lemma(Flavor::Denormalized, variant, &dfacts, &[]);
            assert_eq!(v.conclusion, Some(true), "variant {variant:?}");
        }
    }

    #[test]
    fn broken_middle_row_is_rejected() {
        // Take the valid Z4 x Z2 grid and replace K[x] with the trivial
        // subalgebra: the middle row loses exactness.
        let z4 = z(4);
        let z2 = z(2);
        let p = product(&z4, &z2).unwrap();
        let cf = kernel_pair(&p.p2);
        let cx = kernel_pair(&p.p1);
        let cand = candidate_from(&p.algebra, cf, cx);
        let mut grid = assemble_normalized(&cand).unwrap();
        let unit = p.algebra.unit();
        let (triv, triv_incl) = subalgebra(&p.algebra, &[unit]).unwrap();
        // Shrink K[x], U, K[phi] coherently to trivial subalgebras so that
        // the three columns stay exact and only the middle row breaks.
        let unit_y = grid.f.apply(unit);
        let (u_triv, u_incl) = subalgebra(&grid.f.cod, &[unit_y]).unwrap();
        grid.kx = (triv.clone(), triv_incl);
        grid.u = (u_triv.clone(), u_incl);
        grid.phi = Hom::new(triv.clone(), u_triv, vec![0]).unwrap();
        let (kphi_alg, kphi_incl) = subalgebra(&triv, &[0]).unwrap();
        let kkx_val = grid.kkx.map()[0];
        grid.kphi = (kphi_alg.clone(), kphi_incl);
        grid.kkx = Hom::new(kphi_alg, grid.kf.0.clone(), vec![kkx_val]).unwrap();
        match validate_normalized(&grid) {
            Err(Error::NotWeakly3x3(what)) => assert_eq!(what, "middle row"),
            other => panic!("expected NotWeakly3x3, got {other:?}"),
        }
    }

    #[test]
    fn quandle_grid_assembles_denormalized() {
        let r3 = Arc::new(Algebra::dihedral_quandle(3));
        let p = product(&r3, &r3).unwrap();
        let cf = kernel_pair(&p.p1);
        let cx = kernel_pair(&p.p2);
        let cand = candidate_from(&p.algebra, cf, cx);
        let grid = assemble_denormalized(&cand).unwrap();
        let facts = denormalized_facts(&grid, SigmaClass::Acupuncturing).unwrap();
        assert!(facts.lower_exact);
        let v = evaluate_lemma(Flavor::Denormalized, Variant::Upper, &facts, &[]);
        assert_eq!(v.conclusion, Some(true));
    }

    #[test]
    fn normalized_assembly_refuses_quandles() {
        let r3 = Arc::new(Algebra::dihedral_quandle(3));
        let cand = candidate_from(
            &r3,
            Congruence::diagonal(r3.clone()),
            Congruence::diagonal(r3.clone()),
        );
        assert!(matches!(assemble_normalized(&cand), Err(Error::UnsupportedKind(_))));
    }

    #[test]
    fn search_upper_normalized_schreier_small_orders_is_empty() {
        let cfg = SearchConfig {
            kind: Kind::Monoid,
            flavor: Flavor::Normalized,
            variant: Variant::Upper,
            class: SigmaClass::Schreier,
            drop: vec![],
            max_order: 3,
            jobs: 2,
        };
        let out = search(&cfg).unwrap();
        assert!(out.admissible > 0);
        assert!(out.hits.is_empty());
    }

    #[test]
    fn search_with_identity_congruences_only_yields_no_hits() {
        let cfg = SearchConfig {
            kind: Kind::Quandle,
            flavor: Flavor::Denormalized,
            variant: Variant::Full,
            class: SigmaClass::Acupuncturing,
            drop: vec![],
            max_order: 2,
            jobs: 1,
        };
        let out = search(&cfg).unwrap();
        assert!(out.hits.is_empty());
    }
}
