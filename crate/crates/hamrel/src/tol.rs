//! Default numerical thresholds, collected in one place.
//!
//! Every threshold here can be overridden per call site through the
//! structs that consume them; these constants are the documented
//! defaults.

/// Relative singular-value cutoff for all rank decisions.
pub const RANK_REL: f64 = 1e-9;

/// Condition-number ceiling beyond which an inversion is declared
/// numerically violated.
pub const COND_CEILING: f64 = 1e12;

/// Maximum principal angle (radians) for subspace equality.
pub const SUBSPACE_ANGLE: f64 = 1e-8;

/// Scaled per-site residual for solutions of the forced systems.
pub const SYSTEM_RESIDUAL: f64 = 1e-10;

/// Scaled gap for the summation identity and boundary-form checks.
pub const IDENTITY_GAP: f64 = 1e-10;

/// Boundary residual for patched boundary value problems.
pub const BOUNDARY_RESIDUAL: f64 = 1e-9;

/// Relative error for the variation-of-constants vs recursion check.
pub const VOC_EQUIV: f64 = 1e-9;

/// Residual accepted when recovering the trajectory representative of
/// a relation element.
pub const REPRESENTATIVE_RESIDUAL: f64 = 1e-9;

/// Agreement of class inner products with direct weighted sums.
pub const ISOMETRY: f64 = 1e-10;

/// Hermiticity defect allowed for computed Gram matrices, relative.
pub const HERMITICITY: f64 = 1e-12;

/// Cumulative-norm growth ratio under which a solution direction is
/// considered square-summable in half-line scans.
pub const SUMMABILITY_RATIO: f64 = 1e-6;
