//! Homomorphisms between finite algebras, together with the small search
//! routines (all maps, all sections, all isomorphisms) the verification
//! suites lean on.

use std::sync::Arc;

use crate::algebra::{Algebra, El};
use crate::error::{Error, Result};

/// A total map `dom -> cod` checked to preserve every operation table and
/// every designated constant of the kind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hom {
    pub dom: Arc<Algebra>,
    pub cod: Arc<Algebra>,
    map: Vec<El>,
}

impl Hom {
    pub fn new(dom: Arc<Algebra>, cod: Arc<Algebra>, map: Vec<El>) -> Result<Hom> {
        if dom.kind() != cod.kind() {
            return Err(Error::KindMismatch(format!(
                "homomorphism from {} to {}",
                dom.kind().as_str(),
                cod.kind().as_str()
            )));
        }
        if map.len() != dom.order() {
            return Err(Error::Shape(format!(
                "map has {} entries, domain has {}",
                map.len(),
                dom.order()
            )));
        }
        if let Some(&bad) = map.iter().find(|&&v| v >= cod.order()) {
            return Err(Error::Shape(format!("map value {bad} out of codomain range")));
        }
        match (dom.constant(), cod.constant()) {
            (Some(cd), Some(cc)) if map[cd] != cc => {
                return Err(Error::NotHomomorphism { op: "constant", witness: (cd, cd) })
            }
            _ => {}
        }
        // Quandle homomorphisms must preserve the derived inverse as well;
        // closure_tables includes it.
        let names = dom.kind().op_names();
        for (ti, table) in dom.closure_tables().into_iter().enumerate() {
            let cod_table = &cod.closure_tables()[ti];
            let op_name = names.get(ti).copied().unwrap_or("lhdi");
            for a in dom.elements() {
                for b in dom.elements() {
                    if map[table.at(a, b)] != cod_table.at(map[a], map[b]) {
                        return Err(Error::NotHomomorphism { op: op_name, witness: (a, b) });
                    }
                }
            }
        }
        Ok(Hom { dom, cod, map })
    }

    pub fn identity(a: &Arc<Algebra>) -> Hom {
        Hom { dom: a.clone(), cod: a.clone(), map: a.elements().collect() }
    }

    /// The unique map to the terminal algebra of the same kind.
    pub fn terminal(a: &Arc<Algebra>) -> Hom {
        let t = Arc::new(Algebra::terminal(a.kind()));
        Hom { dom: a.clone(), cod: t, map: vec![0; a.order()] }
    }

    #[inline]
    pub fn apply(&self, x: El) -> El {
        self.map[x]
    }

    pub fn map(&self) -> &[El] {
        &self.map
    }

    /// Composite `then o self` (apply `self` first).
    pub fn then(&self, then: &Hom) -> Result<Hom> {
        if self.cod != then.dom {
            return Err(Error::Shape("composition codomain/domain mismatch".into()));
        }
        Ok(Hom {
            dom: self.dom.clone(),
            cod: then.cod.clone(),
            map: self.map.iter().map(|&v| then.map[v]).collect(),
        })
    }

    pub fn is_surjective(&self) -> bool {
        let mut hit = vec![false; self.cod.order()];
        for &v in &self.map {
            hit[v] = true;
        }
        hit.into_iter().all(|h| h)
    }

    pub fn first_missed(&self) -> Option<El> {
        let mut hit = vec![false; self.cod.order()];
        for &v in &self.map {
            hit[v] = true;
        }
        hit.into_iter().position(|h| !h)
    }

    pub fn is_injective(&self) -> bool {
        let mut seen = vec![false; self.cod.order()];
        self.map.iter().all(|&v| !std::mem::replace(&mut seen[v], true))
    }

    pub fn is_bijective(&self) -> bool {
        self.dom.order() == self.cod.order() && self.is_injective()
    }

    /// Sorted image of the map.
    pub fn image(&self) -> Vec<El> {
        let mut img = self.map.clone();
        img.sort_unstable();
        img.dedup();
        img
    }

    pub fn fiber(&self, y: El) -> Vec<El> {
        self.map
            .iter()
            .enumerate()
            .filter(|&(_, &v)| v == y)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn inverse(&self) -> Option<Hom> {
        if !self.is_bijective() {
            return None;
        }
        let mut inv = vec![0; self.cod.order()];
        for (i, &v) in self.map.iter().enumerate() {
            inv[v] = i;
        }
        Some(Hom { dom: self.cod.clone(), cod: self.dom.clone(), map: inv })
    }
}

/// Spec operation: check a raw map and return the homomorphism, reporting the
/// first non-preserved product otherwise.
pub fn make_homomorphism(dom: &Arc<Algebra>, cod: &Arc<Algebra>, map: Vec<El>) -> Result<Hom> {
    Hom::new(dom.clone(), cod.clone(), map)
}

/// Whether the images of `maps` jointly generate the common codomain.
pub fn jointly_extremally_epimorphic(maps: &[&Hom]) -> Result<bool> {
    let Some(first) = maps.first() else {
        return Err(Error::Shape("empty family of maps".into()));
    };
    let cod = &first.cod;
    if maps.iter().any(|m| &m.cod != cod) {
        return Err(Error::KindMismatch("maps do not share a codomain".into()));
    }
    let mut seed: Vec<El> = maps.iter().flat_map(|m| m.map().iter().copied()).collect();
    seed.sort_unstable();
    seed.dedup();
    Ok(cod.closure(&seed).len() == cod.order())
}

/// All homomorphisms `dom -> cod`, by backtracking with incremental
/// preservation checks. Deterministic (lexicographic) order.
pub fn all_homs(dom: &Arc<Algebra>, cod: &Arc<Algebra>) -> Vec<Hom> {
    if dom.kind() != cod.kind() {
        return Vec::new();
    }
    let n = dom.order();
    let mut map: Vec<Option<El>> = vec![None; n];
    if let (Some(cd), Some(cc)) = (dom.constant(), cod.constant()) {
        map[cd] = Some(cc);
    }
    let dom_tables = dom.closure_tables().into_iter().cloned().collect::<Vec<_>>();
    let cod_tables = cod.closure_tables().into_iter().cloned().collect::<Vec<_>>();
    let mut out = Vec::new();
    let free: Vec<El> = (0..n).filter(|&e| map[e].is_none()).collect();

    fn consistent(
        map: &[Option<El>],
        dom_tables: &[crate::algebra::Table],
        cod_tables: &[crate::algebra::Table],
        just_set: El,
    ) -> bool {
        for (t, ct) in dom_tables.iter().zip(cod_tables) {
            for (a, va) in map.iter().enumerate() {
                let Some(va) = va else { continue };
                for (b, vb) in map.iter().enumerate() {
                    let Some(vb) = vb else { continue };
                    if a != just_set && b != just_set && t.at(a, b) != just_set {
                        continue;
                    }
                    if let Some(vab) = map[t.at(a, b)] {
                        if vab != ct.at(*va, *vb) {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    fn rec(
        idx: usize,
        free: &[El],
        map: &mut Vec<Option<El>>,
        dom: &Arc<Algebra>,
        cod: &Arc<Algebra>,
        dom_tables: &[crate::algebra::Table],
        cod_tables: &[crate::algebra::Table],
        out: &mut Vec<Hom>,
    ) {
        if idx == free.len() {
            let m: Vec<El> = map.iter().map(|v| v.unwrap()).collect();
            if let Ok(h) = Hom::new(dom.clone(), cod.clone(), m) {
                out.push(h);
            }
            return;
        }
        let e = free[idx];
        for v in cod.elements() {
            map[e] = Some(v);
            if consistent(map, dom_tables, cod_tables, e) {
                rec(idx + 1, free, map, dom, cod, dom_tables, cod_tables, out);
            }
            map[e] = None;
        }
    }

    rec(0, &free, &mut map, dom, cod, &dom_tables, &cod_tables, &mut out);
    out
}

/// All surjective homomorphisms `dom -> cod`.
pub fn surjective_homs(dom: &Arc<Algebra>, cod: &Arc<Algebra>) -> Vec<Hom> {
    all_homs(dom, cod).into_iter().filter(Hom::is_surjective).collect()
}

/// All isomorphisms `dom -> cod`.
pub fn all_isos(dom: &Arc<Algebra>, cod: &Arc<Algebra>) -> Vec<Hom> {
    if dom.order() != cod.order() {
        return Vec::new();
    }
    all_homs(dom, cod).into_iter().filter(Hom::is_bijective).collect()
}

pub fn are_isomorphic(a: &Arc<Algebra>, b: &Arc<Algebra>) -> bool {
    !all_isos(a, b).is_empty()
}

/// All sections of a surjection `f`: homomorphisms `s` with `f o s = id`.
pub fn all_sections(f: &Hom) -> Vec<Hom> {
    let fibers: Vec<Vec<El>> = f.cod.elements().map(|y| f.fiber(y)).collect();
    if fibers.iter().any(|fb| fb.is_empty()) {
        return Vec::new();
    }
    let m = f.cod.order();
    let mut choice = vec![0usize; m];
    let mut out = Vec::new();
    loop {
        let map: Vec<El> = (0..m).map(|y| fibers[y][choice[y]]).collect();
        if let Ok(s) = Hom::new(f.cod.clone(), f.dom.clone(), map) {
            out.push(s);
        }
        // odometer
        let mut k = 0;
        loop {
            if k == m {
                return out;
            }
            choice[k] += 1;
            if choice[k] < fibers[k].len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{product, Algebra};

    #[test]
    fn identity_on_z4_is_a_homomorphism() {
        let z4 = Arc::new(Algebra::cyclic(4));
        let id = Hom::identity(&z4);
        assert!(id.is_bijective());
        assert!(make_homomorphism(&z4, &z4, id.map().to_vec()).is_ok());
    }

    #[test]
    fn mod2_from_z4_checks_all_sixteen_products() {
        let z4 = Arc::new(Algebra::cyclic(4));
        let z2 = Arc::new(Algebra::cyclic(2));
        let f = make_homomorphism(&z4, &z2, vec![0, 1, 0, 1]).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                assert_eq!(f.apply(z4.jt(a, b)), z2.jt(f.apply(a), f.apply(b)));
            }
        }
        assert!(f.is_surjective());
    }

    #[test]
    fn non_homomorphism_reports_first_bad_product() {
        let z2 = Arc::new(Algebra::cyclic(2));
        let z4 = Arc::new(Algebra::cyclic(4));
        // 1 -> 1 fails: 1+1 = 0 upstairs but 1+1 = 2 downstairs.
        let err = make_homomorphism(&z2, &z4, vec![0, 1]).unwrap_err();
        match err {
            Error::NotHomomorphism { witness, .. } => assert_eq!(witness, (1, 1)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn product_sections_jointly_generate() {
        let z2 = Arc::new(Algebra::cyclic(2));
        let p = product(&z2, &z2).unwrap();
        let s1 = p.s1.clone().unwrap();
        let s2 = p.s2.clone().unwrap();
        assert!(jointly_extremally_epimorphic(&[&s1, &s2]).unwrap());
        // A single constant map from the terminal algebra is not enough.
        let one = Arc::new(Algebra::terminal(crate::algebra::Kind::Monoid));
        let c = Hom::new(one, z2.clone(), vec![0]).unwrap();
        assert!(!jointly_extremally_epimorphic(&[&c]).unwrap());
        let id = Hom::identity(&z2);
        assert!(jointly_extremally_epimorphic(&[&id]).unwrap());
    }

    #[test]
    fn sections_of_projection() {
        let z2 = Arc::new(Algebra::cyclic(2));
        let p = product(&z2, &z2).unwrap();
        // s(0) = (0,0) is forced by the unit law; s(1) = (1,0) and (1,1) both
        // extend to homomorphisms since 2b = 0 in Z2.
        let sections = all_sections(&p.p1);
        assert_eq!(sections.len(), 2);
    }

    #[test]
    fn quandle_homs_preserve_the_derived_inverse() {
        let r3 = Arc::new(Algebra::dihedral_quandle(3));
        for h in all_homs(&r3, &r3) {
            for a in 0..3 {
                for b in 0..3 {
                    assert_eq!(h.apply(r3.lhdi(a, b)), r3.lhdi(h.apply(a), h.apply(b)));
                }
            }
        }
    }
}
