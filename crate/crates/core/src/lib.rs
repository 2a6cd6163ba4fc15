//! Verification engine for diagram lemmas over finite monoids, semirings and
//! quandles: point classification (Schreier, weakly Schreier, puncturing,
//! acupuncturing), exact sequences and forks, both flavors of 3x3 grids,
//! counterexample search, and Baer-sum arithmetic on extensions with abelian
//! kernel.

pub mod algebra;
pub mod baer;
pub mod congruence;
pub mod enumerate;
pub mod diagrams;
pub mod error;
pub mod hom;
pub mod points;
pub mod relation;
pub mod report;
pub mod textio;

pub use algebra::{Algebra, El, Kind, Table};
pub use congruence::Congruence;
pub use error::{Error, Result};
pub use hom::Hom;
pub use points::{Point, SigmaClass};
pub use relation::Relation;
