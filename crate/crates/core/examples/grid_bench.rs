fn main() {
    use veralg_core::diagrams::*;
    use veralg_core::{Kind, SigmaClass};
    for (kind, flavor, class, max) in [
        (Kind::Monoid, Flavor::Normalized, SigmaClass::Schreier, 5usize),
        (Kind::Monoid, Flavor::Denormalized, SigmaClass::Schreier, 5),
        (Kind::Quandle, Flavor::Denormalized, SigmaClass::Acupuncturing, 5),
    ] {
        let t = std::time::Instant::now();
        let cfg = SearchConfig { kind, flavor, variant: Variant::Upper, class, drop: vec![], max_order: max, jobs: 4 };
        let out = search(&cfg).unwrap();
        println!("{:?}/{:?} <= {max}: cands {} admissible {} hits {} in {:?}",
            kind, flavor, out.candidates, out.admissible, out.hits.len(), t.elapsed());
    }
    // order 6 monoids: the heavy case (library cached after first call)
    let t = std::time::Instant::now();
    let _ = veralg_core::enumerate::library(Kind::Monoid, 6).unwrap();
    println!("lib6 warm in {:?}", t.elapsed());
    for flavor in [Flavor::Normalized, Flavor::Denormalized] {
        let t = std::time::Instant::now();
        let cfg = SearchConfig { kind: Kind::Monoid, flavor, variant: Variant::Upper,
            class: SigmaClass::Schreier, drop: vec![], max_order: 6, jobs: 4 };
        let out = search(&cfg).unwrap();
        println!("monoid/{:?} <=6: cands {} admissible {} hits {} in {:?}",
            flavor, out.candidates, out.admissible, out.hits.len(), t.elapsed());
    }
}
