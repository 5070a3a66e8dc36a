//! Numerical tolerances shared across modules.

/// Unit-norm check for ray representatives.
pub const RAY_NORM: f64 = 1e-12;
/// Two rays are the same point when their Fubini distance is below this.
pub const RAY_EQ: f64 = 1e-9;
/// Orthonormality of subspace bases and idempotence of projectors.
pub const BASIS: f64 = 1e-10;
/// Hermiticity, positivity and unit trace of density matrices.
pub const DENSITY: f64 = 1e-12;
/// Stochasticity residual accepted by ensemble validation.
pub const STOCHASTIC: f64 = 1e-10;
/// Eigenvalues this close to the unit circle count as peripheral.
pub const PERIPHERAL: f64 = 1e-8;
/// Smallest fixed-point eigenvalue accepted as full rank.
pub const FULL_RANK: f64 = 1e-8;
/// Lower end of the band in which the full-rank verdict is ambiguous.
pub const AMBIGUOUS_RANK: f64 = 1e-10;
/// Relative singular-value threshold for numerical rank.
pub const RANK_REL: f64 = 1e-7;
/// Darkness certification residual.
pub const DARK: f64 = 1e-9;
/// Gap-metric threshold under which two dark subspaces are identified.
pub const SUBSPACE_DEDUP: f64 = 1e-6;
/// Outcome weights below this are treated as impossible.
pub const NEGLIGIBLE_WEIGHT: f64 = 1e-14;
/// `tr(v π_D v*)` below this means `v` annihilates `D`.
pub const ANNIHILATED: f64 = 1e-12;
/// Unitarity and unit determinant of group elements.
pub const UNITARY: f64 = 1e-9;
/// Residual from unitarity tolerated by the induced-unitary map.
pub const INDUCED_UNITARY: f64 = 1e-6;
/// Element identification in group closures.
pub const GROUP_DEDUP: f64 = 1e-6;
/// Rank tolerance for the Lie-algebra Gram matrix.
pub const LIE_RANK: f64 = 1e-6;
/// Least-squares residual for an invariant symplectic form.
pub const SYMPLECTIC: f64 = 1e-8;
/// Smartness certification residual.
pub const SMART: f64 = 1e-8;
/// Cluster radius used when summarizing atomic sample sets.
pub const CLUSTER: f64 = 1e-6;
