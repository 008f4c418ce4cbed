//! Shared numeric tolerances.
//!
//! Exact set identities (partitions, nesting, interpolation) are checked in
//! integer arithmetic and carry no tolerance. The constants here cover the
//! floating-point side: dense projections, Gram assembly and root finding at
//! desk scale (n up to ~2000, double precision).

/// Hand-derived identities frozen into tests: vanishing moments, worked
/// coefficient values, exact symmetry of the paraproduct pieces.
pub const HAND: f64 = 1e-12;

/// Orthonormality, idempotence, Parseval and round-trip residuals, all
/// relative to the size of the inputs.
pub const ORTHO: f64 = 1e-10;

/// Relative residual of the product decomposition and of finite telescoping.
pub const DECOMP_REL: f64 = 1e-10;

/// Relative bisection width for the Luxemburg norm.
pub const LUXEMBURG_WIDTH: f64 = 1e-8;

/// The Luxemburg functional at the returned norm must land in
/// [1 - LUXEMBURG_SLACK, 1].
pub const LUXEMBURG_SLACK: f64 = 1e-6;

/// Multiplicative inflation used to build the critical-radius grid: a strict
/// ball of radius d*(1+TIE_EPS) picks up the points at distance exactly d.
pub const TIE_EPS: f64 = 1e-9;

/// Frozen ratio-spread threshold for the Carleson/BMO comparison and for the
/// pairwise wavelet-H1 norm comparisons on the fixture families.
pub const RATIO_SPREAD: f64 = 64.0;

/// Frozen upper bound for the L1 norm of the approximate grand maximal
/// function of a generated unit atom on the fixture families. Calibrated by
/// `calibration` in the acceptance suite; raw values are recorded in
/// crates/core/tests/data/calibration_snapshot.json.
pub const MAXIMAL_ATOM_L1: f64 = 12.0;

/// Default jitter for the randomized nearest-parent tie-break: parents are
/// drawn uniformly among centers within (1 + jitter) of the minimal distance.
pub const PARENT_JITTER: f64 = 0.2;
