//! Error taxonomy shared by every engine module.
//!
//! Errors split into two families: *malformed input* (shape, parse, kind and
//! bound problems — a caller bug) and *verdict-bearing failures* (a well-formed
//! object that fails the property being checked, always with a witness).
//! The CLI maps the first family to exit code 2 and the second to exit code 1.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Which axiom of a kind was violated, for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axiom {
    Associativity,
    Identity,
    AddAssociativity,
    AddCommutativity,
    ZeroIdentity,
    MulAssociativity,
    LeftDistributivity,
    RightDistributivity,
    ZeroAbsorbing,
    Idempotency,
    RightInvertibility,
    SelfDistributivity,
    DualSelfDistributivity,
    InverseTableMismatch,
}

impl Axiom {
    pub fn name(self) -> &'static str {
        match self {
            Axiom::Associativity => "associativity",
            Axiom::Identity => "identity",
            Axiom::AddAssociativity => "add-associativity",
            Axiom::AddCommutativity => "add-commutativity",
            Axiom::ZeroIdentity => "zero-identity",
            Axiom::MulAssociativity => "mul-associativity",
            Axiom::LeftDistributivity => "left-distributivity",
            Axiom::RightDistributivity => "right-distributivity",
            Axiom::ZeroAbsorbing => "zero-absorbing",
            Axiom::Idempotency => "idempotency",
            Axiom::RightInvertibility => "right-invertibility",
            Axiom::SelfDistributivity => "self-distributivity",
            Axiom::DualSelfDistributivity => "dual-self-distributivity",
            Axiom::InverseTableMismatch => "inverse-table-mismatch",
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("axiom violation: {} at {witness:?}", axiom.name())]
    AxiomViolation { axiom: Axiom, witness: Vec<usize> },

    #[error("not a homomorphism: op {op} disagrees at ({}, {})", witness.0, witness.1)]
    NotHomomorphism { op: &'static str, witness: (usize, usize) },

    #[error("kind mismatch: {0}")]
    KindMismatch(String),

    #[error("enumeration bound exceeded: order {requested} > bound {bound}")]
    BoundExceeded { requested: usize, bound: usize },

    #[error("operation unsupported for kind {0}")]
    UnsupportedKind(&'static str),

    #[error("map is not surjective: {0} misses element {1}")]
    NotSurjective(String, usize),

    #[error("square does not commute at element {0}")]
    NotCommuting(usize),

    #[error("point class incompatible with algebra kind: {0}")]
    ClassKindMismatch(String),

    #[error("point carries no retraction (not classified Schreier)")]
    NoRetraction,

    #[error("malformed probe instance: {0}")]
    MalformedInstance(String),

    #[error("diagram is not weakly 3x3: {0} not exact")]
    NotWeakly3x3(String),

    #[error("relation is not Schreier")]
    NotSchreier,

    #[error("congruence kernel is not abelian")]
    NotAbelian,

    #[error("extension is not affine: {0}")]
    NotAffine(String),

    #[error("direction relation failed to be an equivalence at pairs {0:?}/{1:?}")]
    RelationNotEquivalence((usize, usize), (usize, usize)),

    #[error("kernel of point is not an abelian group")]
    KernelNotAbelian,

    #[error("directions do not match")]
    DirectionMismatch,

    #[error("quotient relation is not a congruence: witness {0:?}")]
    RelationNotCongruence(Vec<usize>),

    #[error("direction morphism is not equivariant at (y={0}, a={1})")]
    NotEquivariant(usize, usize),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("internal invariant breached: {0}")]
    Internal(String),
}

impl Error {
    /// Exit code the CLI should use for this error: 2 for malformed input,
    /// 1 for a verdict-bearing failure on well-formed input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Shape(_)
            | Error::KindMismatch(_)
            | Error::BoundExceeded { .. }
            | Error::UnsupportedKind(_)
            | Error::ClassKindMismatch(_)
            | Error::MalformedInstance(_)
            | Error::Parse { .. }
            | Error::Io(_)
            | Error::Internal(_) => 2,
            _ => 1,
        }
    }
}
