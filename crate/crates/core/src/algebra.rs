//! Finite algebras of the three supported kinds: monoids, semirings and
//! quandles. Carriers are index sets `0..n`; element names are presentation
//! data only and never affect identity.

use std::sync::Arc;

use crate::error::{Axiom, Error, Result};

/// Element of a finite carrier, identified by index.
pub type El = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    Monoid,
    Semiring,
    Quandle,
}

impl Kind {
    /// Monoids and semirings carry a designated constant and kernels make sense.
    pub fn is_pointed(self) -> bool {
        matches!(self, Kind::Monoid | Kind::Semiring)
    }

    pub fn op_names(self) -> &'static [&'static str] {
        match self {
            Kind::Monoid => &["mul"],
            Kind::Semiring => &["add", "mul"],
            Kind::Quandle => &["lhd"],
        }
    }

    pub fn constant_keyword(self) -> Option<&'static str> {
        match self {
            Kind::Monoid => Some("unit"),
            Kind::Semiring => Some("zero"),
            Kind::Quandle => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Monoid => "monoid",
            Kind::Semiring => "semiring",
            Kind::Quandle => "quandle",
        }
    }

    pub fn parse(s: &str) -> Option<Kind> {
        match s {
            "monoid" => Some(Kind::Monoid),
            "semiring" => Some(Kind::Semiring),
            "quandle" => Some(Kind::Quandle),
            _ => None,
        }
    }
}

/// A square operation table over `0..n`, row-major: `at(i, j) = i op j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Table {
    n: usize,
    cells: Vec<El>,
}

impl Table {
    pub fn from_rows(rows: &[Vec<El>]) -> Result<Table> {
        let n = rows.len();
        let mut cells = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::Shape(format!(
                    "table row has {} entries, expected {}",
                    row.len(),
                    n
                )));
            }
            for &c in row {
                if c >= n {
                    return Err(Error::Shape(format!("table entry {c} out of range 0..{n}")));
                }
                cells.push(c);
            }
        }
        Ok(Table { n, cells })
    }

    pub fn from_fn(n: usize, f: impl Fn(El, El) -> El) -> Table {
        let mut cells = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let v = f(i, j);
                debug_assert!(v < n || n == 0);
                cells.push(v);
            }
        }
        Table { n, cells }
    }

    #[inline]
    pub fn at(&self, i: El, j: El) -> El {
        self.cells[i * self.n + j]
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cells(&self) -> &[El] {
        &self.cells
    }

    /// Whether every column `j` (the map `i -> at(i, j)`) is a bijection.
    fn column_bijective(&self) -> Option<El> {
        let mut seen = vec![false; self.n];
        for j in 0..self.n {
            seen.iter_mut().for_each(|s| *s = false);
            for i in 0..self.n {
                let v = self.at(i, j);
                if seen[v] {
                    return Some(j);
                }
                seen[v] = true;
            }
        }
        None
    }

    /// Invert each column: `inv.at(v, j) = i` whenever `at(i, j) = v`.
    fn column_inverse(&self) -> Table {
        let mut cells = vec![0; self.n * self.n];
        for i in 0..self.n {
            for j in 0..self.n {
                cells[self.at(i, j) * self.n + j] = i;
            }
        }
        Table { n: self.n, cells }
    }
}

/// A validated finite algebra. Construction goes through [`Algebra::validate`],
/// so every value of this type satisfies its kind's axioms.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Algebra {
    kind: Kind,
    names: Vec<String>,
    tables: Vec<Table>,
    constant: Option<El>,
    /// Derived right-inverse table for quandles; never independent data.
    lhdi: Option<Table>,
}

impl Algebra {
    /// Validate raw tables and constants against the kind's axioms.
    ///
    /// Returns the algebra iff every invariant holds, otherwise the first
    /// violated axiom with a witness tuple.
    pub fn validate(
        kind: Kind,
        names: Vec<String>,
        tables: Vec<Table>,
        constant: Option<El>,
    ) -> Result<Algebra> {
        let n = names.len();
        if n == 0 {
            return Err(Error::Shape("carrier must be non-empty".into()));
        }
        {
            let mut sorted = names.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != n {
                return Err(Error::Shape("element names must be distinct".into()));
            }
        }
        let expected_tables = kind.op_names().len();
        if tables.len() != expected_tables {
            return Err(Error::Shape(format!(
                "{} expects {} table(s), got {}",
                kind.as_str(),
                expected_tables,
                tables.len()
            )));
        }
        for t in &tables {
            if t.n() != n {
                return Err(Error::Shape(format!(
                    "table is {}x{}, carrier has {} elements",
                    t.n(),
                    t.n(),
                    n
                )));
            }
        }
        match (kind.is_pointed(), constant) {
            (true, None) => {
                return Err(Error::Shape(format!(
                    "{} requires a designated {}",
                    kind.as_str(),
                    kind.constant_keyword().unwrap()
                )))
            }
            (false, Some(_)) => {
                return Err(Error::Shape("quandles carry no designated constant".into()))
            }
            (true, Some(c)) if c >= n => {
                return Err(Error::Shape(format!("constant {c} out of range 0..{n}")))
            }
            _ => {}
        }

        let mut alg = Algebra { kind, names, tables, constant, lhdi: None };
        match kind {
            Kind::Monoid => {
                let e = constant.unwrap();
                check_identity(&alg.tables[0], e)?;
                check_associativity(&alg.tables[0], Axiom::Associativity)?;
            }
            Kind::Semiring => {
                let z = constant.unwrap();
                let (add, mul) = (&alg.tables[0], &alg.tables[1]);
                if let Some(a) = (0..n).find(|&a| add.at(z, a) != a || add.at(a, z) != a) {
                    return Err(Error::AxiomViolation { axiom: Axiom::ZeroIdentity, witness: vec![a] });
                }
                for a in 0..n {
                    for b in 0..n {
                        if add.at(a, b) != add.at(b, a) {
                            return Err(Error::AxiomViolation {
                                axiom: Axiom::AddCommutativity,
                                witness: vec![a, b],
                            });
                        }
                    }
                }
                check_associativity(add, Axiom::AddAssociativity)?;
                check_associativity(mul, Axiom::MulAssociativity)?;
                for a in 0..n {
                    for b in 0..n {
                        for c in 0..n {
                            if mul.at(a, add.at(b, c)) != add.at(mul.at(a, b), mul.at(a, c)) {
                                return Err(Error::AxiomViolation {
                                    axiom: Axiom::LeftDistributivity,
                                    witness: vec![a, b, c],
                                });
                            }
                            if mul.at(add.at(a, b), c) != add.at(mul.at(a, c), mul.at(b, c)) {
                                return Err(Error::AxiomViolation {
                                    axiom: Axiom::RightDistributivity,
                                    witness: vec![a, b, c],
                                });
                            }
                        }
                    }
                }
                if let Some(a) = (0..n).find(|&a| mul.at(z, a) != z || mul.at(a, z) != z) {
                    return Err(Error::AxiomViolation { axiom: Axiom::ZeroAbsorbing, witness: vec![a] });
                }
            }
            Kind::Quandle => {
                let lhd = &alg.tables[0];
                if let Some(j) = lhd.column_bijective() {
                    return Err(Error::AxiomViolation {
                        axiom: Axiom::RightInvertibility,
                        witness: vec![j],
                    });
                }
                if let Some(a) = (0..n).find(|&a| lhd.at(a, a) != a) {
                    return Err(Error::AxiomViolation { axiom: Axiom::Idempotency, witness: vec![a] });
                }
                for a in 0..n {
                    for b in 0..n {
                        for c in 0..n {
                            if lhd.at(lhd.at(a, b), c) != lhd.at(lhd.at(a, c), lhd.at(b, c)) {
                                return Err(Error::AxiomViolation {
                                    axiom: Axiom::SelfDistributivity,
                                    witness: vec![a, b, c],
                                });
                            }
                        }
                    }
                }
                let lhdi = lhd.column_inverse();
                for a in 0..n {
                    for b in 0..n {
                        for c in 0..n {
                            if lhdi.at(lhdi.at(a, b), c) != lhdi.at(lhdi.at(a, c), lhdi.at(b, c)) {
                                return Err(Error::AxiomViolation {
                                    axiom: Axiom::DualSelfDistributivity,
                                    witness: vec![a, b, c],
                                });
                            }
                        }
                    }
                }
                alg.lhdi = Some(lhdi);
            }
        }
        Ok(alg)
    }

    /// Validate with an independently supplied inverse table, accepted only if
    /// it agrees with the derived one.
    pub fn validate_with_lhdi(
        kind: Kind,
        names: Vec<String>,
        tables: Vec<Table>,
        constant: Option<El>,
        lhdi: Table,
    ) -> Result<Algebra> {
        if kind != Kind::Quandle {
            return Err(Error::Shape("lhdi table only applies to quandles".into()));
        }
        let alg = Algebra::validate(kind, names, tables, constant)?;
        if alg.lhdi.as_ref() != Some(&lhdi) {
            return Err(Error::AxiomViolation { axiom: Axiom::InverseTableMismatch, witness: vec![] });
        }
        Ok(alg)
    }

    pub fn monoid(names: Vec<String>, table: Table, unit: El) -> Result<Algebra> {
        Algebra::validate(Kind::Monoid, names, vec![table], Some(unit))
    }

    pub fn semiring(names: Vec<String>, add: Table, mul: Table, zero: El) -> Result<Algebra> {
        Algebra::validate(Kind::Semiring, names, vec![add, mul], Some(zero))
    }

    pub fn quandle(names: Vec<String>, lhd: Table) -> Result<Algebra> {
        Algebra::validate(Kind::Quandle, names, vec![lhd], None)
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn order(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, e: El) -> &str {
        &self.names[e]
    }

    pub fn elements(&self) -> std::ops::Range<El> {
        0..self.order()
    }

    /// The designated unit (monoid) or zero (semiring).
    pub fn constant(&self) -> Option<El> {
        self.constant
    }

    /// Designated constant of a pointed kind; panics for quandles.
    pub fn unit(&self) -> El {
        self.constant.expect("pointed kind")
    }

    pub fn table(&self, idx: usize) -> &Table {
        &self.tables[idx]
    }

    pub fn tables(&self) -> &[Table] {
        &self.tables
    }

    /// All operation tables that must be preserved / respected, including the
    /// derived quandle inverse.
    pub fn closure_tables(&self) -> Vec<&Table> {
        let mut ts: Vec<&Table> = self.tables.iter().collect();
        if let Some(ref inv) = self.lhdi {
            ts.push(inv);
        }
        ts
    }

    pub fn op(&self, idx: usize, a: El, b: El) -> El {
        self.tables[idx].at(a, b)
    }

    /// The pointed (Jonsson-Tarski) operation: monoid multiplication or
    /// semiring addition. Panics on quandles.
    #[inline]
    pub fn jt(&self, a: El, b: El) -> El {
        debug_assert!(self.kind.is_pointed());
        self.tables[0].at(a, b)
    }

    pub fn lhd(&self, a: El, b: El) -> El {
        debug_assert_eq!(self.kind, Kind::Quandle);
        self.tables[0].at(a, b)
    }

    pub fn lhdi(&self, a: El, b: El) -> El {
        self.lhdi.as_ref().expect("quandle").at(a, b)
    }

    pub fn lhdi_table(&self) -> Option<&Table> {
        self.lhdi.as_ref()
    }

    /// Rename elements (presentation only). Fails on wrong arity or duplicates.
    pub fn with_names(&self, names: Vec<String>) -> Result<Algebra> {
        Algebra::validate(self.kind, names, self.tables.clone(), self.constant)
    }

    /// Smallest subset closed under all operations (including the derived
    /// quandle inverse) and containing the designated constant.
    pub fn closure(&self, seed: &[El]) -> Vec<El> {
        let n = self.order();
        let mut inside = vec![false; n];
        let mut stack: Vec<El> = Vec::new();
        let push = |e: El, inside: &mut Vec<bool>, stack: &mut Vec<El>| {
            if !inside[e] {
                inside[e] = true;
                stack.push(e);
            }
        };
        for &e in seed {
            push(e, &mut inside, &mut stack);
        }
        if let Some(c) = self.constant {
            push(c, &mut inside, &mut stack);
        }
        let tables = self.closure_tables();
        while let Some(a) = stack.pop() {
            for t in &tables {
                for b in 0..n {
                    if inside[b] {
                        push(t.at(a, b), &mut inside, &mut stack);
                        push(t.at(b, a), &mut inside, &mut stack);
                    }
                }
            }
        }
        (0..n).filter(|&e| inside[e]).collect()
    }

    /// Is `subset` (sorted or not) closed under all operations and does it
    /// contain the constant?
    pub fn is_subuniverse(&self, subset: &[El]) -> bool {
        let mut inside = vec![false; self.order()];
        for &e in subset {
            inside[e] = true;
        }
        if let Some(c) = self.constant {
            if !inside[c] {
                return false;
            }
        }
        for t in self.closure_tables() {
            for &a in subset {
                for &b in subset {
                    if !inside[t.at(a, b)] {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// The terminal (one-element) algebra of a kind.
    pub fn terminal(kind: Kind) -> Algebra {
        let table = Table::from_fn(1, |_, _| 0);
        match kind {
            Kind::Monoid => Algebra::monoid(vec!["*".into()], table, 0).unwrap(),
            Kind::Semiring => {
                Algebra::semiring(vec!["*".into()], table.clone(), table, 0).unwrap()
            }
            Kind::Quandle => Algebra::quandle(vec!["*".into()], table).unwrap(),
        }
    }

    /// The cyclic group of order `n` as an additive monoid `Z_n`.
    pub fn cyclic(n: usize) -> Algebra {
        let names = (0..n).map(|i| i.to_string()).collect();
        let table = Table::from_fn(n, |i, j| (i + j) % n);
        Algebra::monoid(names, table, 0).unwrap()
    }

    /// The dihedral quandle `R_n`: `a lhd b = 2b - a (mod n)`.
    pub fn dihedral_quandle(n: usize) -> Algebra {
        let names = (0..n).map(|i| i.to_string()).collect();
        let table = Table::from_fn(n, |a, b| (2 * b + n - a % n) % n);
        Algebra::quandle(names, table).unwrap()
    }

    /// The dihedral group of order `2n`: rotations `r0..` then reflections
    /// `s0..`, with `r_i r_j = r_{i+j}`, `r_i s_j = s_{i+j}`, `s_i r_j =
    /// s_{i-j}`, `s_i s_j = r_{i-j}` (indices mod `n`).
    pub fn dihedral_group(n: usize) -> Algebra {
        let idx = |rot: bool, i: usize| if rot { i } else { n + i };
        let table = Table::from_fn(2 * n, |a, b| {
            let (ra, ia) = (a < n, a % n);
            let (rb, ib) = (b < n, b % n);
            match (ra, rb) {
                (true, true) => idx(true, (ia + ib) % n),
                (true, false) => idx(false, (ia + ib) % n),
                (false, true) => idx(false, (ia + n - ib) % n),
                (false, false) => idx(true, (ia + n - ib) % n),
            }
        });
        let names = (0..2 * n)
            .map(|i| if i < n { format!("r{i}") } else { format!("s{}", i - n) })
            .collect();
        Algebra::monoid(names, table, 0).unwrap()
    }

    /// The two-element monoid `{e, a}` with `a * a = a`.
    pub fn idempotent_pair() -> Algebra {
        let table = Table::from_rows(&[vec![0, 1], vec![1, 1]]).unwrap();
        Algebra::monoid(vec!["e".into(), "a".into()], table, 0).unwrap()
    }

    /// Whether every element has a two-sided inverse for the pointed operation.
    pub fn is_group(&self) -> bool {
        if !self.kind.is_pointed() {
            return false;
        }
        let e = self.unit();
        self.elements()
            .all(|a| self.elements().any(|b| self.jt(a, b) == e && self.jt(b, a) == e))
    }

    /// Whether the pointed operation is commutative.
    pub fn is_commutative(&self) -> bool {
        self.elements()
            .all(|a| self.elements().all(|b| self.jt(a, b) == self.jt(b, a)))
    }

    /// Quandle whose `lhd` table is a latin square (rows also bijective).
    pub fn is_latin(&self) -> bool {
        if self.kind != Kind::Quandle {
            return false;
        }
        let n = self.order();
        let t = &self.tables[0];
        (0..n).all(|a| {
            let mut seen = vec![false; n];
            (0..n).all(|b| {
                let v = t.at(a, b);
                !std::mem::replace(&mut seen[v], true)
            })
        })
    }
}

fn check_identity(t: &Table, e: El) -> Result<()> {
    for a in 0..t.n() {
        if t.at(e, a) != a || t.at(a, e) != a {
            return Err(Error::AxiomViolation { axiom: Axiom::Identity, witness: vec![a] });
        }
    }
    Ok(())
}

fn check_associativity(t: &Table, axiom: Axiom) -> Result<()> {
    let n = t.n();
    for a in 0..n {
        for b in 0..n {
            let ab = t.at(a, b);
            for c in 0..n {
                if t.at(ab, c) != t.at(a, t.at(b, c)) {
                    return Err(Error::AxiomViolation { axiom, witness: vec![a, b, c] });
                }
            }
        }
    }
    Ok(())
}

/// Componentwise product of two same-kind algebras with its projections and,
/// for pointed kinds, the injection sections `y -> (y, e)`.
pub struct Product {
    pub algebra: Arc<Algebra>,
    /// Element `k` of the product is the pair `pairs[k] = (a, b)`.
    pub pairs: Vec<(El, El)>,
    pub p1: crate::hom::Hom,
    pub p2: crate::hom::Hom,
    pub s1: Option<crate::hom::Hom>,
    pub s2: Option<crate::hom::Hom>,
}

pub fn product(a: &Arc<Algebra>, b: &Arc<Algebra>) -> Result<Product> {
    if a.kind() != b.kind() {
        return Err(Error::KindMismatch(format!(
            "product of {} and {}",
            a.kind().as_str(),
            b.kind().as_str()
        )));
    }
    let pairs: Vec<(El, El)> = a
        .elements()
        .flat_map(|x| b.elements().map(move |y| (x, y)))
        .collect();
    let algebra = Arc::new(subproduct(a, b, &pairs)?);
    let p1 = crate::hom::Hom::new(
        algebra.clone(),
        a.clone(),
        pairs.iter().map(|&(x, _)| x).collect(),
    )?;
    let p2 = crate::hom::Hom::new(
        algebra.clone(),
        b.clone(),
        pairs.iter().map(|&(_, y)| y).collect(),
    )?;
    let (s1, s2) = if a.kind().is_pointed() {
        let eb = b.unit();
        let ea = a.unit();
        let idx = |x: El, y: El| pairs.iter().position(|&p| p == (x, y)).unwrap();
        let s1 = crate::hom::Hom::new(
            a.clone(),
            algebra.clone(),
            a.elements().map(|x| idx(x, eb)).collect(),
        )?;
        let s2 = crate::hom::Hom::new(
            b.clone(),
            algebra.clone(),
            b.elements().map(|y| idx(ea, y)).collect(),
        )?;
        (Some(s1), Some(s2))
    } else {
        (None, None)
    };
    Ok(Product { algebra, pairs, p1, p2, s1, s2 })
}

/// Build the algebra structure on a sorted set of pairs closed under the
/// componentwise operations (a subalgebra of `a x b`).
pub fn subproduct(a: &Algebra, b: &Algebra, pairs: &[(El, El)]) -> Result<Algebra> {
    if a.kind() != b.kind() {
        return Err(Error::KindMismatch("subproduct of distinct kinds".into()));
    }
    debug_assert!(pairs.windows(2).all(|w| w[0] < w[1]), "pairs must be sorted");
    let index = |x: El, y: El| -> Result<El> {
        pairs
            .binary_search(&(x, y))
            .map_err(|_| Error::Shape(format!("pair set not closed at ({x}, {y})")))
    };
    let n = pairs.len();
    let mut tables = Vec::new();
    for (ti, _) in a.kind().op_names().iter().enumerate() {
        let mut rows = vec![vec![0; n]; n];
        for (i, &(x1, y1)) in pairs.iter().enumerate() {
            for (j, &(x2, y2)) in pairs.iter().enumerate() {
                rows[i][j] = index(a.op(ti, x1, x2), b.op(ti, y1, y2))?;
            }
        }
        tables.push(Table::from_rows(&rows)?);
    }
    let constant = match (a.constant(), b.constant()) {
        (Some(ca), Some(cb)) => Some(index(ca, cb)?),
        _ => None,
    };
    let names = pairs
        .iter()
        .map(|&(x, y)| format!("{}|{}", a.name(x), b.name(y)))
        .collect();
    Algebra::validate(a.kind(), names, tables, constant)
}

/// The algebra induced on a subuniverse, with its inclusion.
pub fn subalgebra(a: &Arc<Algebra>, elements: &[El]) -> Result<(Arc<Algebra>, crate::hom::Hom)> {
    let mut elems = elements.to_vec();
    elems.sort_unstable();
    elems.dedup();
    if !a.is_subuniverse(&elems) {
        return Err(Error::Shape("subset is not a subuniverse".into()));
    }
    let pos = |e: El| elems.binary_search(&e).unwrap();
    let n = elems.len();
    let mut tables = Vec::new();
    for (ti, _) in a.kind().op_names().iter().enumerate() {
        let mut rows = vec![vec![0; n]; n];
        for (i, &x) in elems.iter().enumerate() {
            for (j, &y) in elems.iter().enumerate() {
                rows[i][j] = pos(a.op(ti, x, y));
            }
        }
        tables.push(Table::from_rows(&rows)?);
    }
    let names = elems.iter().map(|&e| a.name(e).to_string()).collect();
    let constant = a.constant().map(pos);
    let sub = Arc::new(Algebra::validate(a.kind(), names, tables, constant)?);
    let incl = crate::hom::Hom::new(sub.clone(), a.clone(), elems)?;
    Ok((sub, incl))
}

/// Subalgebra generated by a subset: the closure together with its inclusion.
pub fn subalgebra_generated(
    a: &Arc<Algebra>,
    seed: &[El],
) -> Result<(Vec<El>, Option<(Arc<Algebra>, crate::hom::Hom)>)> {
    for &e in seed {
        if e >= a.order() {
            return Err(Error::Shape(format!("generator {e} out of range")));
        }
    }
    let elems = a.closure(seed);
    if elems.is_empty() {
        // Possible only for quandles with an empty seed.
        return Ok((elems, None));
    }
    let (sub, incl) = subalgebra(a, &elems)?;
    Ok((elems, Some((sub, incl))))
}
