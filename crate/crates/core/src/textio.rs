//! Line-oriented text formats: `.alg` (algebras), `.map` (homomorphisms),
//! `.cong` (congruences), `.3x3` (grid bundles), `.ext` (extension bundles)
//! and `.dir` (direction bundles). Serialization is byte-stable and
//! `parse(serialize(x))` returns a structurally equal object.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::algebra::{Algebra, El, Kind, Table};
use crate::baer::{extract_action, DirectionObject};
use crate::congruence::Congruence;
use crate::diagrams::{DenormGrid, Flavor, Grid, NormGrid, WGraph};
use crate::error::{Error, Result};
use crate::hom::Hom;
use crate::points::Point;
use crate::relation::Relation;

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

struct Cursor<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim_end()))
            .filter(|(_, l)| !l.trim().is_empty())
            .collect();
        Cursor { lines, pos: 0 }
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        let item = self.lines.get(self.pos).copied();
        if item.is_some() {
            self.pos += 1;
        }
        item
    }

    fn peek(&self) -> Option<(usize, &'a str)> {
        self.lines.get(self.pos).copied()
    }

    fn expect_key(&mut self, key: &str) -> Result<(usize, Vec<&'a str>)> {
        let (ln, line) = self
            .next()
            .ok_or_else(|| parse_err(self.last_line(), format!("expected `{key} ...`")))?;
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some(k) if k == key => Ok((ln, toks.collect())),
            Some(k) => Err(parse_err(ln, format!("expected `{key}`, found `{k}`"))),
            None => Err(parse_err(ln, format!("expected `{key}`"))),
        }
    }

    fn last_line(&self) -> usize {
        self.lines.last().map(|&(n, _)| n + 1).unwrap_or(1)
    }
}

// ---------------------------------------------------------------- .alg

pub fn parse_algebra(text: &str) -> Result<Algebra> {
    let mut cur = Cursor::new(text);
    let (ln, kind_tok) = cur.expect_key("kind")?;
    let kind = match kind_tok.as_slice() {
        [k] => Kind::parse(k).ok_or_else(|| parse_err(ln, format!("unknown kind `{k}`")))?,
        _ => return Err(parse_err(ln, "kind takes exactly one token")),
    };
    let (ln, order_tok) = cur.expect_key("order")?;
    let n: usize = match order_tok.as_slice() {
        [t] => t.parse().map_err(|_| parse_err(ln, format!("bad order `{t}`")))?,
        _ => return Err(parse_err(ln, "order takes exactly one token")),
    };
    if n == 0 {
        return Err(parse_err(ln, "order must be positive"));
    }
    let (ln, name_toks) = cur.expect_key("names")?;
    if name_toks.len() != n {
        return Err(parse_err(ln, format!("expected {n} names, found {}", name_toks.len())));
    }
    let names: Vec<String> = name_toks.iter().map(|s| s.to_string()).collect();
    let index_of = |ln: usize, tok: &str| -> Result<El> {
        names
            .iter()
            .position(|s| s == tok)
            .ok_or_else(|| parse_err(ln, format!("unknown element `{tok}`")))
    };
    let constant = match kind.constant_keyword() {
        Some(kw) => {
            let (ln, toks) = cur.expect_key(kw)?;
            match toks.as_slice() {
                [t] => Some(index_of(ln, t)?),
                _ => return Err(parse_err(ln, format!("{kw} takes exactly one token"))),
            }
        }
        None => None,
    };
    let read_table = |cur: &mut Cursor, op_name: &str| -> Result<Table> {
        let (ln, toks) = cur.expect_key("op")?;
        match toks.as_slice() {
            [t] if *t == op_name => {}
            [t] => return Err(parse_err(ln, format!("expected op `{op_name}`, found `{t}`"))),
            _ => return Err(parse_err(ln, "op takes exactly one token")),
        }
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let (rln, row_line) = cur
                .next()
                .ok_or_else(|| parse_err(cur.last_line(), "missing table row"))?;
            let row: Vec<El> = row_line
                .split_whitespace()
                .map(|t| index_of(rln, t))
                .collect::<Result<_>>()?;
            if row.len() != n {
                return Err(parse_err(rln, format!("row has {} entries, expected {n}", row.len())));
            }
            rows.push(row);
        }
        Table::from_rows(&rows)
    };
    let mut tables = Vec::new();
    for op in kind.op_names() {
        tables.push(read_table(&mut cur, op)?);
    }
    // A quandle file may additionally supply the inverse table; accepted only
    // if consistent with the derived one.
    let extra_lhdi = if kind == Kind::Quandle {
        if let Some((_, line)) = cur.peek() {
            if line.split_whitespace().next() == Some("op") {
                Some(read_table(&mut cur, "lhdi")?)
            } else {
                None
            }
        } else {
            None
        }
    } else {
        None
    };
    if let Some((ln, line)) = cur.peek() {
        return Err(parse_err(ln, format!("unexpected trailing content `{line}`")));
    }
    match extra_lhdi {
        Some(inv) => Algebra::validate_with_lhdi(kind, names, tables, constant, inv),
        None => Algebra::validate(kind, names, tables, constant),
    }
}

pub fn serialize_algebra(a: &Algebra) -> String {
    let mut out = String::new();
    out.push_str(&format!("kind {}\n", a.kind().as_str()));
    out.push_str(&format!("order {}\n", a.order()));
    out.push_str(&format!("names {}\n", a.names().join(" ")));
    if let Some(kw) = a.kind().constant_keyword() {
        out.push_str(&format!("{kw} {}\n", a.name(a.unit())));
    }
    for (ti, op) in a.kind().op_names().iter().enumerate() {
        out.push_str(&format!("op {op}\n"));
        for i in a.elements() {
            let row: Vec<&str> = a.elements().map(|j| a.name(a.op(ti, i, j))).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    }
    out
}

pub fn load_algebra(path: &Path) -> Result<Arc<Algebra>> {
    let text = std::fs::read_to_string(path)?;
    Ok(Arc::new(parse_algebra(&text)?))
}

pub fn write_algebra(path: &Path, a: &Algebra) -> Result<()> {
    std::fs::write(path, serialize_algebra(a))?;
    Ok(())
}

// ---------------------------------------------------------------- .map

/// Raw content of a `.map` file: referenced algebra files and named pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MapFile {
    pub dom_path: String,
    pub cod_path: String,
    pub pairs: Vec<(String, String)>,
}

pub fn parse_map_file(text: &str) -> Result<MapFile> {
    let mut cur = Cursor::new(text);
    let (ln, line) = cur.next().ok_or_else(|| parse_err(1, "empty map file"))?;
    let toks: Vec<&str> = line.split_whitespace().collect();
    let (dom_path, cod_path) = match toks.as_slice() {
        ["map", d, "->", c] => (d.to_string(), c.to_string()),
        _ => return Err(parse_err(ln, "expected `map <dom> -> <cod>`")),
    };
    let mut pairs = Vec::new();
    while let Some((ln, line)) = cur.next() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            [a, "=>", b] => pairs.push((a.to_string(), b.to_string())),
            _ => return Err(parse_err(ln, "expected `<name> => <name>`")),
        }
    }
    Ok(MapFile { dom_path, cod_path, pairs })
}

pub fn serialize_map_file(m: &MapFile) -> String {
    let mut out = format!("map {} -> {}\n", m.dom_path, m.cod_path);
    for (a, b) in &m.pairs {
        out.push_str(&format!("{a} => {b}\n"));
    }
    out
}

/// Load a `.map` and resolve it into a checked homomorphism; algebra
/// references are resolved relative to the map file's directory.
pub fn load_map(path: &Path) -> Result<(Hom, MapFile)> {
    let text = std::fs::read_to_string(path)?;
    let mf = parse_map_file(&text)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let dom = load_algebra(&base.join(&mf.dom_path))?;
    let cod = load_algebra(&base.join(&mf.cod_path))?;
    let hom = resolve_map(&mf, &dom, &cod)?;
    Ok((hom, mf))
}

pub fn resolve_map(mf: &MapFile, dom: &Arc<Algebra>, cod: &Arc<Algebra>) -> Result<Hom> {
    if mf.pairs.len() != dom.order() {
        return Err(Error::Shape(format!(
            "map lists {} entries, domain has {}",
            mf.pairs.len(),
            dom.order()
        )));
    }
    let mut map = vec![usize::MAX; dom.order()];
    for (a, b) in &mf.pairs {
        let i = dom
            .names()
            .iter()
            .position(|s| s == a)
            .ok_or_else(|| Error::Shape(format!("unknown domain element `{a}`")))?;
        let j = cod
            .names()
            .iter()
            .position(|s| s == b)
            .ok_or_else(|| Error::Shape(format!("unknown codomain element `{b}`")))?;
        if map[i] != usize::MAX {
            return Err(Error::Shape(format!("element `{a}` mapped twice")));
        }
        map[i] = j;
    }
    Hom::new(dom.clone(), cod.clone(), map)
}

pub fn map_file_for(h: &Hom, dom_path: &str, cod_path: &str) -> MapFile {
    MapFile {
        dom_path: dom_path.to_string(),
        cod_path: cod_path.to_string(),
        pairs: h
            .dom
            .elements()
            .map(|i| (h.dom.name(i).to_string(), h.cod.name(h.apply(i)).to_string()))
            .collect(),
    }
}

// ---------------------------------------------------------------- .cong

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CongFile {
    pub over_path: String,
    pub blocks: Vec<Vec<String>>,
}

pub fn parse_cong_file(text: &str) -> Result<CongFile> {
    let mut cur = Cursor::new(text);
    let (_, toks) = cur.expect_key("over")?;
    let over_path = match toks.as_slice() {
        [p] => p.to_string(),
        _ => return Err(parse_err(1, "over takes exactly one token")),
    };
    let mut blocks = Vec::new();
    while let Some((ln, line)) = cur.next() {
        let mut toks = line.split_whitespace();
        if toks.next() != Some("block") {
            return Err(parse_err(ln, "expected `block <names...>`"));
        }
        let block: Vec<String> = toks.map(|s| s.to_string()).collect();
        if block.is_empty() {
            return Err(parse_err(ln, "empty block"));
        }
        blocks.push(block);
    }
    Ok(CongFile { over_path, blocks })
}

pub fn serialize_cong_file(c: &CongFile) -> String {
    let mut out = format!("over {}\n", c.over_path);
    for b in &c.blocks {
        out.push_str(&format!("block {}\n", b.join(" ")));
    }
    out
}

pub fn load_congruence(path: &Path) -> Result<(Congruence, CongFile)> {
    let text = std::fs::read_to_string(path)?;
    let cf = parse_cong_file(&text)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let alg = load_algebra(&base.join(&cf.over_path))?;
    let blocks: Vec<Vec<El>> = cf
        .blocks
        .iter()
        .map(|b| {
            b.iter()
                .map(|name| {
                    alg.names()
                        .iter()
                        .position(|s| s == name)
                        .ok_or_else(|| Error::Shape(format!("unknown element `{name}`")))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let cong = Congruence::from_blocks(alg, &blocks)?;
    Ok((cong, cf))
}

pub fn cong_file_for(c: &Congruence, over_path: &str) -> CongFile {
    CongFile {
        over_path: over_path.to_string(),
        blocks: c
            .classes()
            .iter()
            .map(|cl| cl.iter().map(|&e| c.algebra().name(e).to_string()).collect())
            .collect(),
    }
}

// ---------------------------------------------------------------- .3x3

const NORM_ALG_KEYS: [&str; 9] = ["kphi", "kf", "kfp", "kx", "x", "xp", "u", "y", "yp"];
const NORM_MAP_KEYS: [&str; 12] = [
    "top-left", "top-right", "incl-kphi", "incl-kf", "incl-kfp", "incl-kx", "phi", "f", "x",
    "fp", "u", "y",
];
const DENORM_ALG_KEYS: [&str; 9] = ["rphi", "rf", "rfp", "rx", "x", "xp", "w", "y", "yp"];
const DENORM_MAP_KEYS: [&str; 12] = [
    "d0phi", "d1phi", "phi", "d0f", "d1f", "f", "d0fp", "d1fp", "fp", "d0x", "d1x", "x",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridManifest {
    pub flavor: Flavor,
    pub algs: Vec<(String, String)>,
    pub maps: Vec<(String, String)>,
}

pub fn parse_grid_manifest(text: &str) -> Result<GridManifest> {
    let mut cur = Cursor::new(text);
    let (ln, toks) = cur.expect_key("flavor")?;
    let flavor = match toks.as_slice() {
        [t] => Flavor::parse(t).ok_or_else(|| parse_err(ln, format!("unknown flavor `{t}`")))?,
        _ => return Err(parse_err(ln, "flavor takes exactly one token")),
    };
    let mut algs = Vec::new();
    let mut maps = Vec::new();
    while let Some((ln, line)) = cur.next() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["alg", key, path] => algs.push((key.to_string(), path.to_string())),
            ["map", key, path] => maps.push((key.to_string(), path.to_string())),
            _ => return Err(parse_err(ln, "expected `alg <key> <path>` or `map <key> <path>`")),
        }
    }
    let (alg_keys, map_keys): (&[&str], &[&str]) = match flavor {
        Flavor::Normalized => (&NORM_ALG_KEYS, &NORM_MAP_KEYS),
        Flavor::Denormalized => (&DENORM_ALG_KEYS, &DENORM_MAP_KEYS),
    };
    for key in alg_keys {
        if !algs.iter().any(|(k, _)| k == key) {
            return Err(parse_err(1, format!("manifest misses alg `{key}`")));
        }
    }
    for key in map_keys {
        if !maps.iter().any(|(k, _)| k == key) {
            return Err(parse_err(1, format!("manifest misses map `{key}`")));
        }
    }
    if algs.len() != 9 || maps.len() != 12 {
        return Err(parse_err(1, "manifest must list nine algs and twelve maps"));
    }
    Ok(GridManifest { flavor, algs, maps })
}

pub fn serialize_grid_manifest(m: &GridManifest) -> String {
    let mut out = format!("flavor {}\n", m.flavor.as_str());
    for (k, p) in &m.algs {
        out.push_str(&format!("alg {k} {p}\n"));
    }
    for (k, p) in &m.maps {
        out.push_str(&format!("map {k} {p}\n"));
    }
    out
}

struct BundleLoader {
    base: PathBuf,
    algs: Vec<(String, Arc<Algebra>)>,
    maps: Vec<(String, Hom)>,
}

impl BundleLoader {
    fn load(path: &Path, manifest: &GridManifest) -> Result<BundleLoader> {
        let base = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
        let mut algs = Vec::new();
        for (k, p) in &manifest.algs {
            algs.push((k.clone(), load_algebra(&base.join(p))?));
        }
        let mut maps = Vec::new();
        for (k, p) in &manifest.maps {
            let (h, _) = load_map(&base.join(p))?;
            maps.push((k.clone(), h));
        }
        Ok(BundleLoader { base, algs, maps })
    }

    fn alg(&self, key: &str) -> &Arc<Algebra> {
        &self.algs.iter().find(|(k, _)| k == key).unwrap().1
    }

    fn map(&self, key: &str) -> &Hom {
        &self.maps.iter().find(|(k, _)| k == key).unwrap().1
    }

    fn check_map(&self, key: &str, dom_key: &str, cod_key: &str) -> Result<Hom> {
        let h = self.map(key);
        if &h.dom != self.alg(dom_key) || &h.cod != self.alg(cod_key) {
            return Err(Error::Shape(format!(
                "map `{key}` endpoints do not match algs `{dom_key}` -> `{cod_key}`"
            )));
        }
        Ok(h.clone())
    }
}

/// Load a grid bundle, derive the remaining structure, and validate the
/// weakly 3x3 conditions.
pub fn load_grid(path: &Path) -> Result<Grid> {
    let text = std::fs::read_to_string(path)?;
    let manifest = parse_grid_manifest(&text)?;
    let loader = BundleLoader::load(path, &manifest)?;
    let _ = &loader.base;
    match manifest.flavor {
        Flavor::Normalized => {
            let f = loader.check_map("f", "x", "y")?;
            let xmap = loader.check_map("x", "x", "xp")?;
            let fp = loader.check_map("fp", "xp", "yp")?;
            let ymap = loader.check_map("y", "y", "yp")?;
            let kf = (loader.alg("kf").clone(), loader.check_map("incl-kf", "kf", "x")?);
            let kfp = (loader.alg("kfp").clone(), loader.check_map("incl-kfp", "kfp", "xp")?);
            let kx = (loader.alg("kx").clone(), loader.check_map("incl-kx", "kx", "x")?);
            let u = (loader.alg("u").clone(), loader.check_map("u", "u", "y")?);
            let phi = loader.check_map("phi", "kx", "u")?;
            let kphi = (loader.alg("kphi").clone(), loader.check_map("incl-kphi", "kphi", "kx")?);
            let kkx = loader.check_map("top-left", "kphi", "kf")?;
            let kxh = loader.check_map("top-right", "kf", "kfp")?;
            let grid = NormGrid { f, xmap, fp, ymap, kf, kfp, kx, u, phi, kphi, kkx, kxh };
            crate::diagrams::validate_normalized(&grid)?;
            Ok(Grid::Norm(grid))
        }
        Flavor::Denormalized => {
            let f = loader.check_map("f", "x", "y")?;
            let xmap = loader.check_map("x", "x", "xp")?;
            let fp = loader.check_map("fp", "xp", "yp")?;
            let rf = relation_from_legs(
                loader.alg("rf"),
                &loader.check_map("d0f", "rf", "x")?,
                &loader.check_map("d1f", "rf", "x")?,
                "middle column",
            )?;
            let rfp = relation_from_legs(
                loader.alg("rfp"),
                &loader.check_map("d0fp", "rfp", "xp")?,
                &loader.check_map("d1fp", "rfp", "xp")?,
                "right column",
            )?;
            let rx = relation_from_legs(
                loader.alg("rx"),
                &loader.check_map("d0x", "rx", "x")?,
                &loader.check_map("d1x", "rx", "x")?,
                "middle row",
            )?;
            // phi arrives on the abstract R[x] carrier; reindex it onto the
            // canonical pair carrier.
            let phi_abs = loader.check_map("phi", "rx", "w")?;
            let d0x = loader.check_map("d0x", "rx", "x")?;
            let d1x = loader.check_map("d1x", "rx", "x")?;
            let mut phi_map = vec![usize::MAX; rx.pairs().len()];
            for g in loader.alg("rx").elements() {
                let idx = rx
                    .index_of((d0x.apply(g), d1x.apply(g)))
                    .ok_or_else(|| Error::Internal("leg pair missing".into()))?;
                phi_map[idx] = phi_abs.apply(g);
            }
            let w_alg = loader.alg("w").clone();
            let phi = Hom::new(rx.carrier().clone(), w_alg.clone(), phi_map)?;
            if let Some(miss) = phi.first_missed() {
                return Err(Error::NotSurjective("phi".into(), miss));
            }
            // Derive the W legs and section from phi, checking consistency.
            let y_alg = loader.alg("y").clone();
            let mut y0_map = vec![usize::MAX; w_alg.order()];
            let mut y1_map = vec![usize::MAX; w_alg.order()];
            for (i, &(a, b)) in rx.pairs().iter().enumerate() {
                let w = phi.apply(i);
                let (fa, fb) = (f.apply(a), f.apply(b));
                if y0_map[w] != usize::MAX && (y0_map[w], y1_map[w]) != (fa, fb) {
                    return Err(Error::NotCommuting(i));
                }
                y0_map[w] = fa;
                y1_map[w] = fb;
            }
            let y0 = Hom::new(w_alg.clone(), y_alg.clone(), y0_map)?;
            let y1 = Hom::new(w_alg.clone(), y_alg.clone(), y1_map)?;
            let mut s0_map = vec![usize::MAX; y_alg.order()];
            for a in f.dom.elements() {
                let diag = rx.index_of((a, a)).ok_or_else(|| {
                    Error::NotWeakly3x3("middle row".into())
                })?;
                let w = phi.apply(diag);
                let y = f.apply(a);
                if s0_map[y] != usize::MAX && s0_map[y] != w {
                    return Err(Error::NotCommuting(a));
                }
                s0_map[y] = w;
            }
            let s0 = Hom::new(y_alg.clone(), w_alg.clone(), s0_map)?;
            let w = WGraph { carrier: w_alg, y0, y1, s0 };
            // Derive y from the commuting square.
            let mut ymap_map = vec![usize::MAX; y_alg.order()];
            for a in f.dom.elements() {
                let y = f.apply(a);
                let v = fp.apply(xmap.apply(a));
                if ymap_map[y] != usize::MAX && ymap_map[y] != v {
                    return Err(Error::NotCommuting(a));
                }
                ymap_map[y] = v;
            }
            let ymap = Hom::new(y_alg, loader.alg("yp").clone(), ymap_map)?;
            // R[phi] as index pairs over the canonical R[x] carrier.
            let d0phi = reindex_leg(&loader.check_map("d0phi", "rphi", "rx")?, &d0x, &d1x, &rx)?;
            let d1phi = reindex_leg(&loader.check_map("d1phi", "rphi", "rx")?, &d0x, &d1x, &rx)?;
            let rphi_pairs: Vec<(El, El)> = loader
                .alg("rphi")
                .elements()
                .map(|g| (d0phi.apply(g), d1phi.apply(g)))
                .collect();
            let rxh = Hom::new(
                rf.carrier().clone(),
                rfp.carrier().clone(),
                rf.pairs()
                    .iter()
                    .map(|&(a, b)| {
                        rfp.index_of((xmap.apply(a), xmap.apply(b)))
                            .ok_or_else(|| Error::NotWeakly3x3("right column".into()))
                    })
                    .collect::<Result<Vec<_>>>()?,
            )?;
            let grid =
                DenormGrid { f, xmap, fp, ymap, rf, rx, rfp, w, phi, rphi_pairs, rxh };
            crate::diagrams::validate_denormalized(&grid)?;
            Ok(Grid::Denorm(grid))
        }
    }
}

/// Realize an abstract relation object as a canonical pair relation through
/// its legs; the legs must be jointly monic for the indicated grid position.
fn relation_from_legs(abstract_alg: &Arc<Algebra>, d0: &Hom, d1: &Hom, pos: &str) -> Result<Relation> {
    let mut pairs: Vec<(El, El)> =
        abstract_alg.elements().map(|g| (d0.apply(g), d1.apply(g))).collect();
    let count = pairs.len();
    pairs.sort_unstable();
    pairs.dedup();
    if pairs.len() != count {
        return Err(Error::NotWeakly3x3(pos.into()));
    }
    Relation::from_pairs(d0.cod.clone(), pairs)
}

/// Recast a leg `R[phi] -> R[x]` (abstract codomain) to land in the canonical
/// pair carrier of `R[x]`.
fn reindex_leg(leg: &Hom, d0x: &Hom, d1x: &Hom, rx: &Relation) -> Result<Hom> {
    let map = leg
        .map()
        .iter()
        .map(|&g| {
            rx.index_of((d0x.apply(g), d1x.apply(g)))
                .ok_or_else(|| Error::Internal("leg misses pair carrier".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    Hom::new(leg.dom.clone(), rx.carrier().clone(), map)
}

/// Write a grid bundle (algebras, maps, manifest) into a directory under the
/// given name; returns the manifest path. Deterministic contents.
pub fn write_grid(dir: &Path, name: &str, grid: &Grid) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let alg_file = |key: &str| format!("{name}-{key}.alg");
    let map_file = |key: &str| format!("{name}-{key}.map");
    let mut algs: Vec<(String, String)> = Vec::new();
    let mut maps: Vec<(String, String)> = Vec::new();
    let mut write_alg = |key: &str, a: &Algebra| -> Result<()> {
        let fname = alg_file(key);
        write_algebra(&dir.join(&fname), a)?;
        algs.push((key.to_string(), fname));
        Ok(())
    };
    match grid {
        Grid::Norm(g) => {
            write_alg("kphi", &g.kphi.0)?;
            write_alg("kf", &g.kf.0)?;
            write_alg("kfp", &g.kfp.0)?;
            write_alg("kx", &g.kx.0)?;
            write_alg("x", &g.f.dom)?;
            write_alg("xp", &g.xmap.cod)?;
            write_alg("u", &g.u.0)?;
            write_alg("y", &g.f.cod)?;
            write_alg("yp", &g.ymap.cod)?;
            let entries: [(&str, &Hom, &str, &str); 12] = [
                ("top-left", &g.kkx, "kphi", "kf"),
                ("top-right", &g.kxh, "kf", "kfp"),
                ("incl-kphi", &g.kphi.1, "kphi", "kx"),
                ("incl-kf", &g.kf.1, "kf", "x"),
                ("incl-kfp", &g.kfp.1, "kfp", "xp"),
                ("incl-kx", &g.kx.1, "kx", "x"),
                ("phi", &g.phi, "kx", "u"),
                ("f", &g.f, "x", "y"),
                ("x", &g.xmap, "x", "xp"),
                ("fp", &g.fp, "xp", "yp"),
                ("u", &g.u.1, "u", "y"),
                ("y", &g.ymap, "y", "yp"),
            ];
            for (key, h, dk, ck) in entries {
                let mf = map_file_for(h, &alg_file(dk), &alg_file(ck));
                std::fs::write(dir.join(map_file(key)), serialize_map_file(&mf))?;
                maps.push((key.to_string(), map_file(key)));
            }
        }
        Grid::Denorm(g) => {
            let rphi = g.rphi_relation()?;
            write_alg("rphi", rphi.carrier())?;
            write_alg("rf", g.rf.carrier())?;
            write_alg("rfp", g.rfp.carrier())?;
            write_alg("rx", g.rx.carrier())?;
            write_alg("x", &g.f.dom)?;
            write_alg("xp", &g.xmap.cod)?;
            write_alg("w", &g.w.carrier)?;
            write_alg("y", &g.f.cod)?;
            write_alg("yp", &g.ymap.cod)?;
            let d0phi = rphi.d0();
            let d1phi = rphi.d1();
            let d0f = g.rf.d0();
            let d1f = g.rf.d1();
            let d0fp = g.rfp.d0();
            let d1fp = g.rfp.d1();
            let d0x = g.rx.d0();
            let d1x = g.rx.d1();
            let entries: [(&str, &Hom, &str, &str); 12] = [
                ("d0phi", &d0phi, "rphi", "rx"),
                ("d1phi", &d1phi, "rphi", "rx"),
                ("phi", &g.phi, "rx", "w"),
                ("d0f", &d0f, "rf", "x"),
                ("d1f", &d1f, "rf", "x"),
                ("f", &g.f, "x", "y"),
                ("d0fp", &d0fp, "rfp", "xp"),
                ("d1fp", &d1fp, "rfp", "xp"),
                ("fp", &g.fp, "xp", "yp"),
                ("d0x", &d0x, "rx", "x"),
                ("d1x", &d1x, "rx", "x"),
                ("x", &g.xmap, "x", "xp"),
            ];
            for (key, h, dk, ck) in entries {
                let mf = map_file_for(h, &alg_file(dk), &alg_file(ck));
                std::fs::write(dir.join(map_file(key)), serialize_map_file(&mf))?;
                maps.push((key.to_string(), map_file(key)));
            }
        }
    }
    let manifest = GridManifest { flavor: grid.flavor(), algs, maps };
    let mpath = dir.join(format!("{name}.3x3"));
    std::fs::write(&mpath, serialize_grid_manifest(&manifest))?;
    Ok(mpath)
}

// ---------------------------------------------------------------- .ext

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtManifest {
    pub kernel_path: String,
    pub epi_path: String,
}

pub fn parse_ext_manifest(text: &str) -> Result<ExtManifest> {
    let mut cur = Cursor::new(text);
    let (_, k) = cur.expect_key("kernel")?;
    let kernel_path = match k.as_slice() {
        [p] => p.to_string(),
        _ => return Err(parse_err(1, "kernel takes exactly one token")),
    };
    let (_, e) = cur.expect_key("epi")?;
    let epi_path = match e.as_slice() {
        [p] => p.to_string(),
        _ => return Err(parse_err(2, "epi takes exactly one token")),
    };
    if let Some((ln, line)) = cur.peek() {
        return Err(parse_err(ln, format!("unexpected trailing content `{line}`")));
    }
    Ok(ExtManifest { kernel_path, epi_path })
}

pub fn serialize_ext_manifest(m: &ExtManifest) -> String {
    format!("kernel {}\nepi {}\n", m.kernel_path, m.epi_path)
}

/// Load an extension bundle: the kernel inclusion and the epi. The kernel
/// inclusion is verified to land on `f^{-1}(unit)`.
pub fn load_ext(path: &Path) -> Result<(Hom, Hom)> {
    let text = std::fs::read_to_string(path)?;
    let m = parse_ext_manifest(&text)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let (k, _) = load_map(&base.join(&m.kernel_path))?;
    let (f, _) = load_map(&base.join(&m.epi_path))?;
    if k.cod != f.dom {
        return Err(Error::Shape("kernel inclusion does not land in the epi's domain".into()));
    }
    Ok((k, f))
}

pub fn write_ext(dir: &Path, name: &str, k: &Hom, f: &Hom) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    write_algebra(&dir.join(format!("{name}-k.alg")), &k.dom)?;
    write_algebra(&dir.join(format!("{name}-x.alg")), &f.dom)?;
    write_algebra(&dir.join(format!("{name}-y.alg")), &f.cod)?;
    let kmf = map_file_for(k, &format!("{name}-k.alg"), &format!("{name}-x.alg"));
    let fmf = map_file_for(f, &format!("{name}-x.alg"), &format!("{name}-y.alg"));
    std::fs::write(dir.join(format!("{name}-kernel.map")), serialize_map_file(&kmf))?;
    std::fs::write(dir.join(format!("{name}-epi.map")), serialize_map_file(&fmf))?;
    let manifest = ExtManifest {
        kernel_path: format!("{name}-kernel.map"),
        epi_path: format!("{name}-epi.map"),
    };
    let mpath = dir.join(format!("{name}.ext"));
    std::fs::write(&mpath, serialize_ext_manifest(&manifest))?;
    Ok(mpath)
}

// ---------------------------------------------------------------- .dir

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirManifest {
    pub total_path: String,
    pub proj_path: String,
    pub sect_path: String,
}

pub fn parse_dir_manifest(text: &str) -> Result<DirManifest> {
    let mut cur = Cursor::new(text);
    let (_, t) = cur.expect_key("total")?;
    let total_path = match t.as_slice() {
        [p] => p.to_string(),
        _ => return Err(parse_err(1, "total takes exactly one token")),
    };
    let (_, p) = cur.expect_key("proj")?;
    let proj_path = match p.as_slice() {
        [p] => p.to_string(),
        _ => return Err(parse_err(2, "proj takes exactly one token")),
    };
    let (_, s) = cur.expect_key("sect")?;
    let sect_path = match s.as_slice() {
        [p] => p.to_string(),
        _ => return Err(parse_err(3, "sect takes exactly one token")),
    };
    Ok(DirManifest { total_path, proj_path, sect_path })
}

pub fn serialize_dir_manifest(m: &DirManifest) -> String {
    format!("total {}\nproj {}\nsect {}\n", m.total_path, m.proj_path, m.sect_path)
}

/// A loaded direction bundle: the split point exactly as stored on disk,
/// plus the abelian group object rebuilt from it by action extraction (whose
/// chart maps rebuilt kernel elements back to stored total elements).
pub struct LoadedDirection {
    pub point: Point,
    pub action: crate::baer::ActionData,
}

pub fn load_dir(path: &Path) -> Result<LoadedDirection> {
    let text = std::fs::read_to_string(path)?;
    let m = parse_dir_manifest(&text)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let (proj, _) = load_map(&base.join(&m.proj_path))?;
    let (sect, _) = load_map(&base.join(&m.sect_path))?;
    let point = Point::new(proj, sect)?;
    let action = extract_action(&point)?;
    Ok(LoadedDirection { point, action })
}

pub fn write_dir(dir: &Path, name: &str, d: &DirectionObject) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    write_algebra(&dir.join(format!("{name}-total.alg")), &d.total)?;
    write_algebra(&dir.join(format!("{name}-base.alg")), &d.base)?;
    let pmf = map_file_for(&d.point.f, &format!("{name}-total.alg"), &format!("{name}-base.alg"));
    let smf = map_file_for(&d.point.s, &format!("{name}-base.alg"), &format!("{name}-total.alg"));
    std::fs::write(dir.join(format!("{name}-proj.map")), serialize_map_file(&pmf))?;
    std::fs::write(dir.join(format!("{name}-sect.map")), serialize_map_file(&smf))?;
    let manifest = DirManifest {
        total_path: format!("{name}-total.alg"),
        proj_path: format!("{name}-proj.map"),
        sect_path: format!("{name}-sect.map"),
    };
    let mpath = dir.join(format!("{name}.dir"));
    std::fs::write(&mpath, serialize_dir_manifest(&manifest))?;
    Ok(mpath)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn z4_roundtrips_byte_exactly() {
        let z4 = Algebra::cyclic(4);
        let s1 = serialize_algebra(&z4);
        let parsed = parse_algebra(&s1).unwrap();
        assert_eq!(parsed, z4);
        assert_eq!(serialize_algebra(&parsed), s1);
    }

    #[test]
    fn quandle_roundtrips_and_accepts_consistent_lhdi() {
        let r3 = Algebra::dihedral_quandle(3);
        let s1 = serialize_algebra(&r3);
        assert_eq!(parse_algebra(&s1).unwrap(), r3);
        // Appending the derived inverse table is accepted.
        let mut with_inv = s1.clone();
        with_inv.push_str("op lhdi\n");
        for a in 0..3 {
            let row: Vec<String> =
                (0..3).map(|b| r3.name(r3.lhdi(a, b)).to_string()).collect();
            with_inv.push_str(&row.join(" "));
            with_inv.push('\n');
        }
        assert_eq!(parse_algebra(&with_inv).unwrap(), r3);
        // A wrong inverse table is rejected.
        let bad = s1 + "op lhdi\n0 0 0\n1 1 1\n2 2 2\n";
        assert!(parse_algebra(&bad).is_err());
    }

    #[test]
    fn semiring_roundtrip() {
        let add = Table::from_rows(&[vec![0, 1], vec![1, 1]]).unwrap();
        let mul = Table::from_rows(&[vec![0, 0], vec![0, 1]]).unwrap();
        let s = Algebra::semiring(vec!["z".into(), "o".into()], add, mul, 0).unwrap();
        let text = serialize_algebra(&s);
        assert_eq!(parse_algebra(&text).unwrap(), s);
    }

    #[test]
    fn malformed_algebra_reports_line() {
        let err = parse_algebra("kind monoid\norder two\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn axiom_violation_is_not_a_parse_error() {
        // Well-formed file, broken associativity: must surface as an axiom
        // violation, not a parse failure.
        let text = "kind monoid\norder 3\nnames e a b\nunit e\nop mul\ne a b\na b b\nb b a\n";
        let err = parse_algebra(text).unwrap_err();
        assert!(matches!(err, Error::AxiomViolation { .. }));
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn map_file_roundtrip() {
        let mf = MapFile {
            dom_path: "a.alg".into(),
            cod_path: "b.alg".into(),
            pairs: vec![("0".into(), "0".into()), ("1".into(), "1".into())],
        };
        let text = serialize_map_file(&mf);
        assert_eq!(parse_map_file(&text).unwrap(), mf);
        assert_eq!(serialize_map_file(&parse_map_file(&text).unwrap()), text);
    }

    #[test]
    fn cong_file_roundtrip() {
        let cf = CongFile {
            over_path: "x.alg".into(),
            blocks: vec![vec!["0".into(), "2".into()], vec!["1".into(), "3".into()]],
        };
        let text = serialize_cong_file(&cf);
        assert_eq!(parse_cong_file(&text).unwrap(), cf);
    }

    #[test]
    fn grid_bundle_roundtrips_through_disk() {
        use crate::congruence::kernel_pair;
        let z4 = Arc::new(Algebra::cyclic(4));
        let z2 = Arc::new(Algebra::cyclic(2));
        let p = crate::algebra::product(&z4, &z2).unwrap();
        let cand = crate::diagrams::Candidate {
            algebra: p.algebra.clone(),
            cf: kernel_pair(&p.p2),
            cx: kernel_pair(&p.p1),
            ids: (0, 0, 0),
        };
        let tmp = std::env::temp_dir().join(format!("veralg-grid-{}", std::process::id()));
        for flavor in [Flavor::Normalized, Flavor::Denormalized] {
            let grid = crate::diagrams::assemble(&cand, flavor).unwrap();
            let mpath = write_grid(&tmp, &format!("t-{}", flavor.as_str()), &grid).unwrap();
            let reloaded = load_grid(&mpath).unwrap();
            assert_eq!(reloaded.flavor(), flavor);
            // Re-serialize: identical manifest bytes.
            let again =
                write_grid(&tmp, &format!("t-{}", flavor.as_str()), &reloaded).unwrap();
            assert_eq!(
                std::fs::read_to_string(&mpath).unwrap(),
                std::fs::read_to_string(&again).unwrap()
            );
        }
        let _ = std::fs::remove_dir_all(&tmp);
    }
}
