use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolyError {
    #[error("piecewise polynomial needs {breaks} breakpoints for {pieces} pieces")]
    Shape { breaks: usize, pieces: usize },
    #[error("breakpoints must be strictly increasing")]
    NotIncreasing,
    #[error("non-finite breakpoint or coefficient")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TreeError {
    #[error("tree has no edges")]
    Empty,
    #[error("edge id 0 is reserved for the root vertex")]
    ReservedId,
    #[error("edge {0} appears in the parent map but has no length (or vice versa)")]
    KeyMismatch(u64),
    #[error("edge {edge} has nonpositive or non-finite length {length}")]
    BadLength { edge: u64, length: f64 },
    #[error("no edge starts at the root (some edge must have parent 0)")]
    NoRoot,
    #[error("edges {0} and {1} both start at the root")]
    MultipleRoots(u64, u64),
    #[error("edge {edge} hangs off unknown edge {parent}; the tree is disconnected")]
    Disconnected { edge: u64, parent: u64 },
    #[error("parent relation contains a cycle through edge {0}")]
    Cycle(u64),
    #[error("edge index {0} out of range 1..={1}")]
    EdgeOutOfRange(usize, usize),
    #[error("delay {tau} must be positive and shorter than every edge (edge {edge} has length {length})")]
    DelayTooLong { tau: f64, edge: usize, length: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("delay must be positive and finite, got {0}")]
    BadDelay(f64),
    #[error("equation order must be at least 1")]
    ZeroOrder,
    #[error("coefficient table has {got} edges, tree has {expected}")]
    EdgeCount { got: usize, expected: usize },
    #[error("coefficient {family}[{k}][{edge}] is defined on [{a}, {b}], expected [0, {length}]")]
    Domain {
        family: char,
        k: usize,
        edge: usize,
        a: f64,
        b: f64,
        length: f64,
    },
    #[error("coefficient {family}[{k}][{edge}] has non-finite values")]
    NonFinite { family: char, k: usize, edge: usize },
    #[error("leading coefficient b[{n}][{edge}] is not bounded away from zero (min |b| = {min_abs:e} near t = {at})")]
    LeadingCoefficientVanishes {
        n: usize,
        edge: usize,
        min_abs: f64,
        at: f64,
    },
    #[error("derivative order {k} exceeds the equation order {n}")]
    OrderTooHigh { k: usize, n: usize },
    #[error("point t = {t} lies outside [-tau, T_j] = [{lo}, {hi}]")]
    OutOfDomain { t: f64, lo: f64, hi: f64 },
    #[error("tree function has order {got}, operation needs {needed}")]
    OrderMismatch { got: usize, needed: usize },
    #[error(transparent)]
    Tree(#[from] TreeError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("refinement parameter q must be at least 1")]
    ZeroRefinement,
    #[error("element degree {degree} is below 2n-1 = {min}")]
    DegreeTooLow { degree: usize, min: usize },
    #[error("history is defined on [{a}, {b}], expected [-{tau}, 0]")]
    HistoryDomain { a: f64, b: f64, tau: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CauchyError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("mesh on edge {edge} is missing the wavefront node t = {t}")]
    MissingWavefront { edge: usize, t: f64 },
    #[error("mesh was built for delay {mesh_tau}, coefficients use {tau}")]
    DelayMismatch { mesh_tau: f64, tau: f64 },
    #[error("control has {got} edges, tree has {expected}")]
    ControlShape { got: usize, expected: usize },
    #[error("collocation system on edge {edge} near t = {t} is singular (leading coefficient vanishes)")]
    SingularStep { edge: usize, t: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DampingError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("Gram matrix is not positive definite: pivot {pivot:e} at index {index} (check that b_n stays away from zero)")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("Gram matrix is not Hermitian: max |G - G*| = {0:e}")]
    NotHermitian(f64),
    #[error("exact and Gauss quadrature disagree by {0:e} on sampled Gram entries; raise the quadrature order")]
    QuadratureMismatch(f64),
}
