//! Energy-optimal damping of neutral delay systems on metric trees.

pub mod basis;
pub mod cauchy;
pub mod damping;
pub mod diagnostics;
pub mod error;
pub mod expressions;
pub mod hermite;
pub mod linalg;
pub mod mesh;
pub mod poly;
pub mod tree;

pub use basis::{is_in_w, lift_phi, Basis, DofKind, MembershipReport, Violation};
pub use cauchy::{residual_ell, solve_cauchy, solve_cauchy_with_degree, Control};
pub use damping::{
    assemble, energy_dominance_check, first_variation, optimality_check, solve_damping, solve_on_basis, BasisImages,
    DampingSolution, DominanceReport, GramSystem, OptimalityReport, SolverOptions,
};
pub use diagnostics::{
    continuity_report, derivative_jumps, detect_smoothness_loss, kirchhoff_residual, quasi_derivatives, weak_bvp_residual,
    DiagnosticsSummary, Jump, KirchhoffEntry, OrderJump, QuasiDerivativeSet, SmoothnessLoss,
};
pub use error::{CauchyError, DampingError, ExprError, MeshError, PolyError, TreeError};
pub use expressions::{
    apply_ell, apply_ell_all, apply_ell_kj, bilinear_form, bilinear_form_reindexed, energy, CoefficientSet,
    TreeFunction,
};
pub use mesh::{DelayMesh, Seed};
pub use poly::{PiecewisePoly, C64};
pub use tree::{Tree, VertexClass, VertexKind};
