//! Weighted Hardy inequalities on a finite interval (0, eta].
//!
//! For a positive weight `w` and test functions `u` with `u(0) = 0`, the
//! inequality
//!
//! ```text
//! int_0^eta |u'|^p w^{p-1}  >=  C(p) int_0^eta |u|^p w^{p-1} / f^p
//! ```
//!
//! holds with the sharp constant `C(p) = (1 - 1/p)^p` for a transform `f`
//! built from `w` — whether or not `w` is doubling. This crate computes the
//! transform quadruple, classifies weights by the integrability of `1/w` at
//! the origin, evaluates both sides of the inequality (plus remainder-term
//! refinements) on concrete test functions, checks the proof-level pointwise
//! identities on discrete grids, and stress-tests sharpness with extremal
//! families.
//!
//! Everything numeric runs in log space ([`lognum`]) so the borderline
//! weights of interest — `exp(-1/t)`, `exp(1/t)`, and their relatives, whose
//! transforms overflow `f64` astronomically — are first-class citizens.

pub mod error;
pub mod extremals;
pub mod identities;
pub mod inequality;
pub mod lognum;
pub mod quadrature;
pub mod transforms;
pub mod variational;
pub mod weights;

pub use error::{Error, Result};
pub use extremals::{
    extremal_profile, sharpness_sweep, vanishing_family, ExtremalProfile, SharpnessRow,
    VanishingFamily, SWEEP_AGREE_TOL,
};
pub use identities::{
    assembled_remainder_check, boundary_integral_check, branch_bounds_check,
    elementary_lower_bound, ground_state_check, identity_sweep, substitution_frame,
    verify_pointwise_identity, weighted_t_bound_check, BranchBoundCheck, ElementaryBranch,
    ElementaryConstant, EqualityCheck, IdentityId, IdentitySweep, SubstitutionFrame,
};
pub use inequality::{
    boundary_term, corollary_check, energy, hardy_term, monotone_comparison, remainder_constants,
    remainder_term, report_c1, report_nct1, report_nct2, two_sided_constants, CorollaryCase,
    InequalityReport, RemainderConstants, TestFunction, TwoSidedConstants, CROSS_CHECK_TOL,
    REL_TOL_DEFAULT,
};
pub use lognum::{LogNum, LogSum};
pub use quadrature::{
    integrate, integrate_ln, probe_divergence, DivergenceProbe, LogQuadrature, QuadOptions,
    QuadratureError, QuadratureResult, Verdict,
};
pub use transforms::{
    build_transforms, build_transforms_with_mode, check_derivative_identities, lambda_alpha_p,
    lambda_p, p_prime, EvalMode, TransformFn, TransformParams, TransformSet,
};
pub use variational::{
    infimum_zero_demo, minimize_quotient, quotient_gradient, rayleigh_quotient, Boundary, Mesh,
    MeshGrading, MinimizationResult, CONVERGENCE_REL_TOL, ITERATION_BUDGET,
};
pub use weights::{
    AdmissibilityProbe, Kind, LimitAtZero, Sign, WeightClass, WeightFamily, WeightSpec,
    WeightTable,
};
