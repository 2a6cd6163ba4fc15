//! Exhaustive enumeration of finite algebras of a given order, by
//! table-by-table backtracking with axiom pruning, plus canonical-form
//! deduplication up to isomorphism. Powers the search harness and the
//! verification sweeps.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use once_cell::sync::Lazy;

use crate::algebra::{Algebra, El, Kind, Table};
use crate::error::{Error, Result};

pub const DEFAULT_BOUND: usize = 6;

const UNSET: usize = usize::MAX;

/// Enumerate every valid algebra of the kind and order, in deterministic
/// order. With `up_to_iso`, one representative per isomorphism class is
/// emitted, in canonical form (lexicographically minimal tables over all
/// admissible carrier permutations).
pub fn enumerate_algebras(kind: Kind, n: usize, up_to_iso: bool) -> Result<Vec<Arc<Algebra>>> {
    enumerate_bounded(kind, n, up_to_iso, DEFAULT_BOUND)
}

pub fn enumerate_bounded(
    kind: Kind,
    n: usize,
    up_to_iso: bool,
    bound: usize,
) -> Result<Vec<Arc<Algebra>>> {
    if n == 0 || n > bound {
        return Err(Error::BoundExceeded { requested: n, bound });
    }
    let raw: Vec<Algebra> = match kind {
        Kind::Monoid => enumerate_monoid_tables(n, false)
            .into_iter()
            .map(|t| Algebra::monoid(index_names(n), t, 0).expect("enumerated monoid"))
            .collect(),
        Kind::Semiring => enumerate_semirings(n),
        Kind::Quandle => enumerate_quandle_tables(n)
            .into_iter()
            .map(|t| Algebra::quandle(index_names(n), t).expect("enumerated quandle"))
            .collect(),
    };
    let out: Vec<Arc<Algebra>> = if up_to_iso {
        let mut seen: Vec<Vec<usize>> = Vec::new();
        let mut reps = Vec::new();
        for a in &raw {
            let (key, canon) = canonical_form(a);
            if let Err(pos) = seen.binary_search(&key) {
                seen.insert(pos, key);
                reps.push(canon);
            }
        }
        reps.sort_by(|a, b| form_key(a).cmp(&form_key(b)));
        reps.into_iter().map(Arc::new).collect()
    } else {
        raw.into_iter().map(Arc::new).collect()
    };
    Ok(out)
}

fn index_names(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

fn form_key(a: &Algebra) -> Vec<usize> {
    let mut key = Vec::new();
    for t in a.tables() {
        key.extend_from_slice(t.cells());
    }
    key
}

/// Lexicographically minimal table data over all admissible permutations
/// (those fixing the designated constant at index 0 for pointed kinds),
/// together with the algebra rebuilt in that form.
pub fn canonical_form(a: &Algebra) -> (Vec<usize>, Algebra) {
    let n = a.order();
    let mut best: Option<Vec<usize>> = None;
    let mut best_perm: Vec<El> = (0..n).collect();
    let mut perm: Vec<El> = (0..n).collect();
    permute_all(&mut perm, 0, &mut |p| {
        if let Some(c) = a.constant() {
            if p[c] != 0 {
                return;
            }
        }
        let mut key = Vec::with_capacity(a.tables().len() * n * n);
        for t in a.tables() {
            let mut inv = vec![0; n];
            for (i, &pi) in p.iter().enumerate() {
                inv[pi] = i;
            }
            for i in 0..n {
                for j in 0..n {
                    key.push(p[t.at(inv[i], inv[j])]);
                }
            }
        }
        if best.as_ref().map_or(true, |b| key < *b) {
            best = Some(key);
            best_perm.copy_from_slice(p);
        }
    });
    let key = best.expect("at least the identity permutation");
    let p = best_perm;
    let mut inv = vec![0; n];
    for (i, &pi) in p.iter().enumerate() {
        inv[pi] = i;
    }
    let tables: Vec<Table> = a
        .tables()
        .iter()
        .map(|t| Table::from_fn(n, |i, j| p[t.at(inv[i], inv[j])]))
        .collect();
    let constant = a.constant().map(|c| p[c]);
    let alg = Algebra::validate(a.kind(), index_names(n), tables, constant)
        .expect("canonical image of a valid algebra");
    (key, alg)
}

fn permute_all(perm: &mut Vec<El>, k: usize, visit: &mut impl FnMut(&[El])) {
    let n = perm.len();
    if k == n {
        visit(perm);
        return;
    }
    for i in k..n {
        perm.swap(k, i);
        permute_all(perm, k + 1, visit);
        perm.swap(k, i);
    }
}

pub fn are_isomorphic_fast(a: &Algebra, b: &Algebra) -> bool {
    a.kind() == b.kind() && a.order() == b.order() && canonical_form(a).0 == canonical_form(b).0
}

/// All associative tables on `0..n` with 0 as two-sided unit (optionally
/// commutative), by row-major backtracking with incremental associativity
/// checks.
fn enumerate_monoid_tables(n: usize, commutative: bool) -> Vec<Table> {
    let mut t = vec![vec![UNSET; n]; n];
    for x in 0..n {
        t[0][x] = x;
        t[x][0] = x;
    }
    let mut cells = Vec::new();
    for i in 1..n {
        for j in 1..n {
            if !commutative || i <= j {
                cells.push((i, j));
            }
        }
    }
    let mut out = Vec::new();
    fill_assoc(&mut t, n, &cells, 0, commutative, &mut out);
    out
}

fn fill_assoc(
    t: &mut Vec<Vec<usize>>,
    n: usize,
    cells: &[(usize, usize)],
    idx: usize,
    commutative: bool,
    out: &mut Vec<Table>,
) {
    if idx == cells.len() {
        let rows: Vec<Vec<El>> = t.iter().cloned().collect();
        out.push(Table::from_rows(&rows).expect("filled table"));
        return;
    }
    let (i, j) = cells[idx];
    for v in 0..n {
        t[i][j] = v;
        if commutative {
            t[j][i] = v;
        }
        let ok = assoc_ok_after(t, n, i, j) && (!commutative || i == j || assoc_ok_after(t, n, j, i));
        if ok {
            fill_assoc(t, n, cells, idx + 1, commutative, out);
        }
        t[i][j] = UNSET;
        if commutative && i != j {
            t[j][i] = UNSET;
        }
    }
}

/// Check all associativity instances that became fully determined when cell
/// `(i, j)` was assigned.
fn assoc_ok_after(t: &[Vec<usize>], n: usize, i: usize, j: usize) -> bool {
    let v = t[i][j];
    for k in 0..n {
        // (i, j, k)
        let jk = t[j][k];
        let vk = t[v][k];
        if jk != UNSET && vk != UNSET {
            let ijk = t[i][jk];
            if ijk != UNSET && ijk != vk {
                return false;
            }
        }
        // (k, i, j)
        let ki = t[k][i];
        if ki != UNSET {
            let kij = t[ki][j];
            let kv = t[k][v];
            if kij != UNSET && kv != UNSET && kij != kv {
                return false;
            }
        }
    }
    for a in 0..n {
        for b in 0..n {
            let ab = t[a][b];
            if ab == i {
                // (a, b, j): (ab)j = v
                let bj = t[b][j];
                if bj != UNSET {
                    let abj = t[a][bj];
                    if abj != UNSET && abj != v {
                        return false;
                    }
                }
            }
            if ab == j {
                // (i, a, b): i(ab) = v
                let ia = t[i][a];
                if ia != UNSET {
                    let iab = t[ia][b];
                    if iab != UNSET && iab != v {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Quandle tables: columns are permutations fixing the diagonal, filled
/// column by column with self-distributivity checked as soon as a triple's
/// columns are all present.
fn enumerate_quandle_tables(n: usize) -> Vec<Table> {
    let mut t = vec![vec![UNSET; n]; n];
    for a in 0..n {
        t[a][a] = a;
    }
    let mut out = Vec::new();
    fill_quandle_column(&mut t, n, 0, &mut out);
    out
}

fn fill_quandle_column(t: &mut Vec<Vec<usize>>, n: usize, col: usize, out: &mut Vec<Table>) {
    if col == n {
        let rows: Vec<Vec<El>> = t.iter().cloned().collect();
        out.push(Table::from_rows(&rows).expect("filled table"));
        return;
    }
    // Assign rows != col of this column to a permutation of values != col.
    let rows: Vec<usize> = (0..n).filter(|&r| r != col).collect();
    let mut used = vec![false; n];
    used[col] = true;
    fill_quandle_cell(t, n, col, &rows, 0, &mut used, out);
}

fn fill_quandle_cell(
    t: &mut Vec<Vec<usize>>,
    n: usize,
    col: usize,
    rows: &[usize],
    k: usize,
    used: &mut Vec<bool>,
    out: &mut Vec<Table>,
) {
    if k == rows.len() {
        if quandle_ok_up_to(t, n, col) {
            fill_quandle_column(t, n, col + 1, out);
        }
        return;
    }
    let r = rows[k];
    for v in 0..n {
        if used[v] {
            continue;
        }
        t[r][col] = v;
        used[v] = true;
        fill_quandle_cell(t, n, col, rows, k + 1, used, out);
        used[v] = false;
        t[r][col] = UNSET;
    }
}

/// Check every self-distributivity instance whose cells are all determined,
/// assuming columns `0..=col` are complete.
fn quandle_ok_up_to(t: &[Vec<usize>], n: usize, col: usize) -> bool {
    for b in 0..n {
        for c in 0..=col {
            for a in 0..n {
                // (a lhd b) lhd c = (a lhd c) lhd (b lhd c); columns 0..=col
                // are complete, so only cells in later columns can be unset.
                let ab = t[a][b];
                if ab == UNSET {
                    continue;
                }
                let abc = t[ab][c];
                let ac = t[a][c];
                let bc = t[b][c];
                let rhs = t[ac][bc];
                if rhs == UNSET {
                    continue;
                }
                if abc != rhs {
                    return false;
                }
            }
        }
    }
    true
}

/// Semirings: commutative additive monoids with zero 0, then multiplication
/// tables pruned by associativity, distributivity and the absorbing zero.
fn enumerate_semirings(n: usize) -> Vec<Algebra> {
    let adds = enumerate_monoid_tables(n, true);
    let mut out = Vec::new();
    for add in adds {
        let mut mul = vec![vec![UNSET; n]; n];
        for x in 0..n {
            mul[0][x] = 0;
            mul[x][0] = 0;
        }
        let cells: Vec<(usize, usize)> =
            (1..n).flat_map(|i| (1..n).map(move |j| (i, j))).collect();
        fill_mul(&mut mul, &add, n, &cells, 0, &mut out);
    }
    out
}

fn fill_mul(
    mul: &mut Vec<Vec<usize>>,
    add: &Table,
    n: usize,
    cells: &[(usize, usize)],
    idx: usize,
    out: &mut Vec<Algebra>,
) {
    if idx == cells.len() {
        let add_rows: Vec<Vec<El>> = (0..n).map(|i| (0..n).map(|j| add.at(i, j)).collect()).collect();
        let mul_rows: Vec<Vec<El>> = mul.iter().cloned().collect();
        if let Ok(a) = Algebra::semiring(
            index_names(n),
            Table::from_rows(&add_rows).unwrap(),
            Table::from_rows(&mul_rows).unwrap(),
            0,
        ) {
            out.push(a);
        }
        return;
    }
    let (i, j) = cells[idx];
    for v in 0..n {
        mul[i][j] = v;
        if assoc_ok_after(mul, n, i, j) && distr_ok_after(mul, add, n) {
            fill_mul(mul, add, n, cells, idx + 1, out);
        }
        mul[i][j] = UNSET;
    }
}

fn distr_ok_after(mul: &[Vec<usize>], add: &Table, n: usize) -> bool {
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let ab = mul[a][b];
                let ac = mul[a][c];
                let abc = mul[a][add.at(b, c)];
                if ab != UNSET && ac != UNSET && abc != UNSET && abc != add.at(ab, ac) {
                    return false;
                }
                let ba = mul[b][a];
                let ca = mul[c][a];
                let bca = mul[add.at(b, c)][a];
                if ba != UNSET && ca != UNSET && bca != UNSET && bca != add.at(ba, ca) {
                    return false;
                }
            }
        }
    }
    true
}

static LIBRARY: Lazy<Mutex<HashMap<(Kind, usize), Arc<Vec<Arc<Algebra>>>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// Cached up-to-isomorphism library of all algebras of a kind and order.
pub fn library(kind: Kind, n: usize) -> Result<Arc<Vec<Arc<Algebra>>>> {
    if let Some(hit) = LIBRARY.lock().unwrap().get(&(kind, n)) {
        return Ok(hit.clone());
    }
    let algs = Arc::new(enumerate_algebras(kind, n, true)?);
    LIBRARY.lock().unwrap().insert((kind, n), algs.clone());
    Ok(algs)
}

/// All algebras of order `1..=max` of a kind, up to isomorphism.
pub fn library_up_to(kind: Kind, max: usize) -> Result<Vec<Arc<Algebra>>> {
    let mut out = Vec::new();
    for n in 1..=max {
        out.extend(library(kind, n)?.iter().cloned());
    }
    Ok(out)
}
