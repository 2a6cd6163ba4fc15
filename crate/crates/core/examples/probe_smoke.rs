fn main() {
    use veralg_core::{points, Kind, SigmaClass};
    let t = std::time::Instant::now();
    let s = points::probe_two_regular_exhaustive(Kind::Monoid, SigmaClass::Schreier, 4).unwrap();
    println!("2reg  n<=4: {s:?}  {:?}", t.elapsed());
    let t = std::time::Instant::now();
    let s = points::probe_equi_consistent_exhaustive(Kind::Monoid, SigmaClass::Schreier, 4).unwrap();
    println!("equi  n<=4: {s:?}  {:?}", t.elapsed());
    let t = std::time::Instant::now();
    let s = points::probe_limit_closure_exhaustive(Kind::Monoid, SigmaClass::Schreier, 4).unwrap();
    println!("limit n<=4: {s:?}  {:?}", t.elapsed());
}
