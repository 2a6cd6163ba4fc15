//! Congruences: operation-compatible partitions, generated congruences,
//! kernel pairs, quotients, kernels/cokernels for pointed kinds, and direct
//! images of congruences along surjections.

use std::sync::Arc;

use crate::algebra::{subalgebra, Algebra, El, Table};
use crate::error::{Error, Result};
use crate::hom::Hom;
use crate::relation::Relation;

/// An operation-compatible partition of a carrier. Class ids are canonical:
/// classes are numbered by their least element, in increasing order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Congruence {
    algebra: Arc<Algebra>,
    class_of: Vec<usize>,
    classes: Vec<Vec<El>>,
}

impl Congruence {
    /// Build from a class-id vector; verifies compatibility with every
    /// operation (including the derived quandle inverse).
    pub fn new(algebra: Arc<Algebra>, raw_class_of: &[usize]) -> Result<Congruence> {
        if raw_class_of.len() != algebra.order() {
            return Err(Error::Shape("partition length differs from carrier".into()));
        }
        let (class_of, classes) = canonicalize(raw_class_of);
        let c = Congruence { algebra, class_of, classes };
        c.check_compatibility()?;
        Ok(c)
    }

    /// Build from a class-id vector known to be compatible (kernel pairs and
    /// saturated closures); skips the quadratic compatibility sweep.
    fn new_unchecked(algebra: Arc<Algebra>, raw_class_of: &[usize]) -> Congruence {
        let (class_of, classes) = canonicalize(raw_class_of);
        Congruence { algebra, class_of, classes }
    }

    /// Build from explicit blocks; they must partition the carrier.
    pub fn from_blocks(algebra: Arc<Algebra>, blocks: &[Vec<El>]) -> Result<Congruence> {
        let n = algebra.order();
        let mut class_of = vec![usize::MAX; n];
        for (i, b) in blocks.iter().enumerate() {
            for &e in b {
                if e >= n {
                    return Err(Error::Shape(format!("block element {e} out of range")));
                }
                if class_of[e] != usize::MAX {
                    return Err(Error::Shape(format!("element {e} occurs in two blocks")));
                }
                class_of[e] = i;
            }
        }
        if class_of.iter().any(|&c| c == usize::MAX) {
            return Err(Error::Shape("blocks do not cover the carrier".into()));
        }
        Congruence::new(algebra, &class_of)
    }

    pub fn diagonal(algebra: Arc<Algebra>) -> Congruence {
        let n = algebra.order();
        Congruence {
            algebra,
            class_of: (0..n).collect(),
            classes: (0..n).map(|e| vec![e]).collect(),
        }
    }

    pub fn indiscrete(algebra: Arc<Algebra>) -> Congruence {
        let n = algebra.order();
        Congruence { algebra, class_of: vec![0; n], classes: vec![(0..n).collect()] }
    }

    fn check_compatibility(&self) -> Result<()> {
        let a = &self.algebra;
        for t in a.closure_tables() {
            for x in a.elements() {
                for xp in a.elements() {
                    if self.class_of[x] != self.class_of[xp] {
                        continue;
                    }
                    for y in a.elements() {
                        if self.class_of[t.at(x, y)] != self.class_of[t.at(xp, y)]
                            || self.class_of[t.at(y, x)] != self.class_of[t.at(y, xp)]
                        {
                            return Err(Error::Shape(format!(
                                "partition not compatible at ({x}, {xp}) with {y}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn algebra(&self) -> &Arc<Algebra> {
        &self.algebra
    }

    #[inline]
    pub fn related(&self, a: El, b: El) -> bool {
        self.class_of[a] == self.class_of[b]
    }

    pub fn class_of(&self, a: El) -> usize {
        self.class_of[a]
    }

    pub fn class_ids(&self) -> &[usize] {
        &self.class_of
    }

    pub fn classes(&self) -> &[Vec<El>] {
        &self.classes
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn is_diagonal(&self) -> bool {
        self.classes.len() == self.algebra.order()
    }

    /// All related pairs, including the diagonal.
    pub fn pairs(&self) -> Vec<(El, El)> {
        let mut out = Vec::new();
        for x in self.algebra.elements() {
            for y in self.algebra.elements() {
                if self.related(x, y) {
                    out.push((x, y));
                }
            }
        }
        out
    }

    /// Whether every class of `self` is contained in a class of `other`.
    pub fn refines(&self, other: &Congruence) -> bool {
        self.algebra
            .elements()
            .all(|x| self.algebra.elements().all(|y| !self.related(x, y) || other.related(x, y)))
    }

    pub fn join(&self, other: &Congruence) -> Congruence {
        let mut seed: Vec<(El, El)> = Vec::new();
        for c in &self.classes {
            for w in c.windows(2) {
                seed.push((w[0], w[1]));
            }
        }
        for c in &other.classes {
            for w in c.windows(2) {
                seed.push((w[0], w[1]));
            }
        }
        congruence_generated(&self.algebra, &seed).expect("join of congruences")
    }

    pub fn meet(&self, other: &Congruence) -> Congruence {
        let n = self.algebra.order();
        let key: Vec<(usize, usize)> =
            (0..n).map(|e| (self.class_of[e], other.class_of[e])).collect();
        let mut ids = vec![0usize; n];
        let mut seen: Vec<(usize, usize)> = Vec::new();
        for e in 0..n {
            ids[e] = match seen.iter().position(|&k| k == key[e]) {
                Some(i) => i,
                None => {
                    seen.push(key[e]);
                    seen.len() - 1
                }
            };
        }
        Congruence::new(self.algebra.clone(), &ids).expect("meet of congruences")
    }

    /// Realize as a relation object (pair subalgebra of X x X with legs).
    pub fn relation(&self) -> Relation {
        Relation::from_congruence(self)
    }
}

fn canonicalize(raw: &[usize]) -> (Vec<usize>, Vec<Vec<El>>) {
    let n = raw.len();
    let mut first_seen: Vec<usize> = Vec::new();
    let mut class_of = vec![0usize; n];
    for e in 0..n {
        match first_seen.iter().position(|&r| r == raw[e]) {
            Some(i) => class_of[e] = i,
            None => {
                first_seen.push(raw[e]);
                class_of[e] = first_seen.len() - 1;
            }
        }
    }
    let mut classes = vec![Vec::new(); first_seen.len()];
    for e in 0..n {
        classes[class_of[e]].push(e);
    }
    (class_of, classes)
}

/// Least congruence containing the seed pairs: union-find closure of the seed
/// with compatibility saturation driven by a worklist of merges. At most
/// `|X| - 1` merges can happen; each merge enqueues the translated pairs of
/// its two witnesses against every carrier element.
pub fn congruence_generated(algebra: &Arc<Algebra>, seed: &[(El, El)]) -> Result<Congruence> {
    let n = algebra.order();
    for &(a, b) in seed {
        if a >= n || b >= n {
            return Err(Error::Shape(format!("seed pair ({a}, {b}) out of range")));
        }
    }
    let mut uf = UnionFind::new(n);
    let tables = algebra.closure_tables();
    let mut queue: Vec<(El, El)> = seed.to_vec();
    while let Some((a, b)) = queue.pop() {
        if !uf.union(a, b) {
            continue;
        }
        // Saturation obligations for the witness pair: classes already merged
        // are saturated inductively, so one representative pair suffices.
        for t in &tables {
            for y in 0..n {
                let (l1, l2) = (t.at(a, y), t.at(b, y));
                if uf.find(l1) != uf.find(l2) {
                    queue.push((l1, l2));
                }
                let (r1, r2) = (t.at(y, a), t.at(y, b));
                if uf.find(r1) != uf.find(r2) {
                    queue.push((r1, r2));
                }
            }
        }
    }
    let ids: Vec<usize> = (0..n).map(|e| uf.find(e)).collect();
    Ok(Congruence::new_unchecked(algebra.clone(), &ids))
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut e: usize) -> usize {
        while self.parent[e] != e {
            self.parent[e] = self.parent[self.parent[e]];
            e = self.parent[e];
        }
        e
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        // Root at the smaller index keeps class ids stable.
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        true
    }
}

/// Kernel pair of a homomorphism: `x ~ x'` iff `f(x) = f(x')`. Compatible by
/// the homomorphism property.
pub fn kernel_pair(f: &Hom) -> Congruence {
    Congruence::new_unchecked(f.dom.clone(), f.map())
}

/// Quotient algebra together with the projection homomorphism. Well-defined
/// by compatibility; the induced tables are re-asserted and an ambiguity
/// signals a breached invariant.
pub fn quotient(c: &Congruence) -> Result<(Arc<Algebra>, Hom)> {
    let a = c.algebra();
    let m = c.class_count();
    let reps: Vec<El> = c.classes().iter().map(|cl| cl[0]).collect();
    let mut tables = Vec::new();
    for (ti, _) in a.kind().op_names().iter().enumerate() {
        let mut rows = vec![vec![0; m]; m];
        for (i, &ri) in reps.iter().enumerate() {
            for (j, &rj) in reps.iter().enumerate() {
                rows[i][j] = c.class_of(a.op(ti, ri, rj));
            }
        }
        // Re-assert independence of representatives.
        for (i, cls_i) in c.classes().iter().enumerate() {
            for (j, cls_j) in c.classes().iter().enumerate() {
                for &x in cls_i {
                    for &y in cls_j {
                        if c.class_of(a.op(ti, x, y)) != rows[i][j] {
                            return Err(Error::Internal(format!(
                                "quotient table ambiguous at classes ({i}, {j})"
                            )));
                        }
                    }
                }
            }
        }
        tables.push(Table::from_rows(&rows)?);
    }
    let names = reps.iter().map(|&r| a.name(r).to_string()).collect();
    let constant = a.constant().map(|e| c.class_of(e));
    let q = Arc::new(Algebra::validate(a.kind(), names, tables, constant)?);
    let proj = Hom::new(a.clone(), q.clone(), c.class_ids().to_vec())?;
    Ok((q, proj))
}

/// Kernel object `K[f] = f^{-1}(unit)` with its inclusion (pointed kinds only).
pub fn kernel_object(f: &Hom) -> Result<(Arc<Algebra>, Hom)> {
    if !f.dom.kind().is_pointed() {
        return Err(Error::UnsupportedKind("kernel object needs a pointed kind"));
    }
    let unit_cod = f.cod.unit();
    let elems: Vec<El> = f.dom.elements().filter(|&x| f.apply(x) == unit_cod).collect();
    subalgebra(&f.dom, &elems)
}

/// Cokernel of a subalgebra inclusion `k : N -> X` containing the unit:
/// the quotient by the congruence generated by `{(n, unit)}`.
pub fn cokernel_of_subalgebra(k: &Hom) -> Result<Hom> {
    if !k.dom.kind().is_pointed() {
        return Err(Error::UnsupportedKind("cokernel needs a pointed kind"));
    }
    if !k.is_injective() {
        return Err(Error::Shape("cokernel expects a subalgebra inclusion".into()));
    }
    let unit = k.cod.unit();
    let seed: Vec<(El, El)> = k.map().iter().map(|&n| (n, unit)).collect();
    let c = congruence_generated(&k.cod, &seed)?;
    let (_, proj) = quotient(&c)?;
    Ok(proj)
}

/// Direct image of a congruence along a surjection, as a raw
/// reflexive-symmetric relation plus an explicit transitivity verdict.
pub struct DirectImage {
    pub relation: Relation,
    pub is_equivalence: bool,
    pub congruence: Option<Congruence>,
}

pub fn direct_image(f: &Hom, r: &Congruence) -> Result<DirectImage> {
    if r.algebra() != &f.dom {
        return Err(Error::Shape("congruence lives on a different carrier".into()));
    }
    if let Some(miss) = f.first_missed() {
        return Err(Error::NotSurjective("direct image".into(), miss));
    }
    let mut pairs: Vec<(El, El)> = r
        .pairs()
        .into_iter()
        .map(|(x, y)| (f.apply(x), f.apply(y)))
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    let relation = Relation::from_pairs(f.cod.clone(), pairs.clone())?;
    let is_equivalence = relation.is_transitive() && relation.is_symmetric();
    let congruence = if is_equivalence {
        let n = f.cod.order();
        let mut uf = UnionFind::new(n);
        for &(x, y) in &pairs {
            uf.union(x, y);
        }
        let ids: Vec<usize> = (0..n).map(|e| uf.find(e)).collect();
        Some(Congruence::new(f.cod.clone(), &ids)?)
    } else {
        None
    };
    Ok(DirectImage { relation, is_equivalence, congruence })
}

/// Every congruence on `a`: principal congruences closed under join.
/// Deterministic order (sorted by class-id vectors).
pub fn all_congruences(a: &Arc<Algebra>) -> Vec<Congruence> {
    let n = a.order();
    let mut found: Vec<Congruence> = vec![Congruence::diagonal(a.clone())];
    let mut frontier: Vec<Congruence> = Vec::new();
    for x in 0..n {
        for y in (x + 1)..n {
            let c = congruence_generated(a, &[(x, y)]).expect("principal congruence");
            if !found.iter().any(|k| k.class_ids() == c.class_ids()) {
                found.push(c.clone());
                frontier.push(c);
            }
        }
    }
    while let Some(c) = frontier.pop() {
        let snapshot: Vec<Congruence> = found.clone();
        for other in &snapshot {
            let j = c.join(other);
            if !found.iter().any(|k| k.class_ids() == j.class_ids()) {
                found.push(j.clone());
                frontier.push(j);
            }
        }
    }
    found.sort_by(|a, b| a.class_ids().cmp(b.class_ids()));
    found
}
