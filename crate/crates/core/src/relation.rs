//! Relations realized as pair subalgebras of `X x X` with their projection
//! legs and diagonal section, plus pullback squares.

use std::sync::Arc;

use crate::algebra::{subproduct, Algebra, El};
use crate::congruence::Congruence;
use crate::error::{Error, Result};
use crate::hom::Hom;
use crate::points::Point;

/// A reflexive relation on a carrier, realized as an operation-closed set of
/// pairs; carries the pair algebra and the two projection legs.
#[derive(Debug, Clone)]
pub struct Relation {
    base: Arc<Algebra>,
    pairs: Vec<(El, El)>,
    carrier: Arc<Algebra>,
}

impl Relation {
    /// Build from an explicit pair set; must contain the diagonal and be
    /// closed under the componentwise operations.
    pub fn from_pairs(base: Arc<Algebra>, mut pairs: Vec<(El, El)>) -> Result<Relation> {
        pairs.sort_unstable();
        pairs.dedup();
        for x in base.elements() {
            if pairs.binary_search(&(x, x)).is_err() {
                return Err(Error::Shape(format!("relation misses diagonal pair ({x}, {x})")));
            }
        }
        let carrier = Arc::new(subproduct(&base, &base, &pairs)?);
        Ok(Relation { base, pairs, carrier })
    }

    pub fn from_congruence(c: &Congruence) -> Relation {
        let base = c.algebra().clone();
        let pairs = c.pairs();
        let mut sorted = pairs;
        sorted.sort_unstable();
        let carrier =
            Arc::new(subproduct(&base, &base, &sorted).expect("congruence pairs are closed"));
        Relation { base, pairs: sorted, carrier }
    }

    pub fn base(&self) -> &Arc<Algebra> {
        &self.base
    }

    pub fn pairs(&self) -> &[(El, El)] {
        &self.pairs
    }

    /// The pair algebra carrying the relation.
    pub fn carrier(&self) -> &Arc<Algebra> {
        &self.carrier
    }

    pub fn index_of(&self, pair: (El, El)) -> Option<El> {
        self.pairs.binary_search(&pair).ok()
    }

    pub fn contains(&self, x: El, y: El) -> bool {
        self.index_of((x, y)).is_some()
    }

    /// First projection leg `d0 : R -> X`.
    pub fn d0(&self) -> Hom {
        Hom::new(
            self.carrier.clone(),
            self.base.clone(),
            self.pairs.iter().map(|&(x, _)| x).collect(),
        )
        .expect("projection leg")
    }

    /// Second projection leg `d1 : R -> X`.
    pub fn d1(&self) -> Hom {
        Hom::new(
            self.carrier.clone(),
            self.base.clone(),
            self.pairs.iter().map(|&(_, y)| y).collect(),
        )
        .expect("projection leg")
    }

    /// Diagonal section `s0 : X -> R`.
    pub fn s0(&self) -> Hom {
        Hom::new(
            self.base.clone(),
            self.carrier.clone(),
            self.base
                .elements()
                .map(|x| self.index_of((x, x)).expect("diagonal present"))
                .collect(),
        )
        .expect("diagonal section")
    }

    /// The point `(d0, s0)` whose class membership defines Sigma-relations.
    pub fn point(&self) -> Point {
        Point::new(self.d0(), self.s0()).expect("d0 o s0 = id")
    }

    pub fn is_symmetric(&self) -> bool {
        self.pairs.iter().all(|&(x, y)| self.contains(y, x))
    }

    pub fn is_transitive(&self) -> bool {
        self.pairs
            .iter()
            .all(|&(x, y)| self.pairs.iter().filter(|&&(a, _)| a == y).all(|&(_, z)| self.contains(x, z)))
    }

    pub fn is_equivalence(&self) -> bool {
        self.is_symmetric() && self.is_transitive()
    }

    pub fn to_congruence(&self) -> Option<Congruence> {
        if !self.is_equivalence() {
            return None;
        }
        let n = self.base.order();
        let mut ids: Vec<usize> = (0..n).collect();
        for &(x, y) in &self.pairs {
            let lo = ids[x].min(ids[y]);
            let (ix, iy) = (ids[x], ids[y]);
            for id in ids.iter_mut() {
                if *id == ix || *id == iy {
                    *id = lo;
                }
            }
        }
        Congruence::new(self.base.clone(), &ids).ok()
    }
}

/// A pullback square: apex `{(x, y) : f(x) = g(y)}` with its projections.
#[derive(Debug, Clone)]
pub struct Pullback {
    pub f: Hom,
    pub g: Hom,
    pub apex: Arc<Algebra>,
    pub elems: Vec<(El, El)>,
    pub p1: Hom,
    pub p2: Hom,
}

/// Pullback of `f : X -> Z` against `g : Y -> Z`.
pub fn pullback(f: &Hom, g: &Hom) -> Result<Pullback> {
    if f.cod != g.cod {
        return Err(Error::KindMismatch("pullback needs a common codomain".into()));
    }
    let elems: Vec<(El, El)> = f
        .dom
        .elements()
        .flat_map(|x| g.dom.elements().map(move |y| (x, y)))
        .filter(|&(x, y)| f.apply(x) == g.apply(y))
        .collect();
    if elems.is_empty() {
        return Err(Error::Shape("pullback carrier is empty".into()));
    }
    let apex = Arc::new(subproduct(&f.dom, &g.dom, &elems)?);
    let p1 = Hom::new(apex.clone(), f.dom.clone(), elems.iter().map(|&(x, _)| x).collect())?;
    let p2 = Hom::new(apex.clone(), g.dom.clone(), elems.iter().map(|&(_, y)| y).collect())?;
    Ok(Pullback { f: f.clone(), g: g.clone(), apex, elems, p1, p2 })
}

impl Pullback {
    pub fn index_of(&self, pair: (El, El)) -> Option<El> {
        self.elems.iter().position(|&p| p == pair)
    }

    /// Universal factorization of a commuting cone `(u : W -> X, v : W -> Y)`.
    pub fn factorize(&self, u: &Hom, v: &Hom) -> Result<Hom> {
        if u.dom != v.dom || u.cod != self.f.dom || v.cod != self.g.dom {
            return Err(Error::Shape("cone legs do not match the pullback".into()));
        }
        let mut map = Vec::with_capacity(u.dom.order());
        for w in u.dom.elements() {
            if self.f.apply(u.apply(w)) != self.g.apply(v.apply(w)) {
                return Err(Error::NotCommuting(w));
            }
            map.push(
                self.index_of((u.apply(w), v.apply(w)))
                    .ok_or_else(|| Error::Internal("cone lands outside pullback".into()))?,
            );
        }
        Hom::new(u.dom.clone(), self.apex.clone(), map)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::congruence::{congruence_generated, kernel_pair};
    use crate::hom::make_homomorphism;

    fn z(n: usize) -> Arc<Algebra> {
        Arc::new(Algebra::cyclic(n))
    }

    #[test]
    fn congruence_relation_has_legs_and_section() {
        let z4 = z(4);
        let c = congruence_generated(&z4, &[(0, 2)]).unwrap();
        let r = c.relation();
        assert_eq!(r.pairs().len(), 8);
        let d0 = r.d0();
        let d1 = r.d1();
        let s0 = r.s0();
        for x in 0..4 {
            assert_eq!(d0.apply(s0.apply(x)), x);
            assert_eq!(d1.apply(s0.apply(x)), x);
        }
    }

    #[test]
    fn pullback_of_identities_is_the_diagonal() {
        let z4 = z(4);
        let id = Hom::identity(&z4);
        let pb = pullback(&id, &id).unwrap();
        assert_eq!(pb.apex.order(), 4);
        assert!(crate::hom::are_isomorphic(&pb.apex, &z4));
    }

    #[test]
    fn pullback_along_identity_recovers_the_domain() {
        let f = make_homomorphism(&z(4), &z(2), vec![0, 1, 0, 1]).unwrap();
        let id = Hom::identity(&f.cod);
        let pb = pullback(&f, &id).unwrap();
        assert_eq!(pb.apex.order(), 4);
        assert!(crate::hom::are_isomorphic(&pb.apex, &f.dom));
    }

    #[test]
    fn pullback_of_mod2_against_itself_has_eight_elements() {
        let f = make_homomorphism(&z(4), &z(2), vec![0, 1, 0, 1]).unwrap();
        let g = make_homomorphism(&z(4), &z(2), vec![0, 1, 0, 1]).unwrap();
        let pb = pullback(&f, &g).unwrap();
        assert_eq!(pb.apex.order(), 8);
        // f o p1 = g o p2 exactly.
        for e in pb.apex.elements() {
            assert_eq!(pb.f.apply(pb.p1.apply(e)), pb.g.apply(pb.p2.apply(e)));
        }
    }

    #[test]
    fn factorization_through_pullback() {
        let f = make_homomorphism(&z(4), &z(2), vec![0, 1, 0, 1]).unwrap();
        let pb = pullback(&f, &f).unwrap();
        let id = Hom::identity(&f.dom);
        let fact = pb.factorize(&id, &id).unwrap();
        for x in 0..4 {
            assert_eq!(pb.elems[fact.apply(x)], (x, x));
        }
    }

    #[test]
    fn kernel_pair_relation_carrier_is_a_subalgebra() {
        let f = make_homomorphism(&z(4), &z(2), vec![0, 1, 0, 1]).unwrap();
        let r = kernel_pair(&f).relation();
        assert_eq!(r.carrier().order(), 8);
        assert!(r.is_equivalence());
        assert_eq!(r.to_congruence().unwrap().class_ids(), kernel_pair(&f).class_ids());
    }
}
