use core::fmt;

use alloc::string::String;

/// Errors reported by the library.
///
/// Residual-carrying variants report the measured residual together with the
/// scale it was compared against, so callers can reconstruct the failed
/// inequality.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Matrix expected Hermitian, `‖M − M*‖ > tol·‖M‖`.
    NotHermitian { residual: f64, scale: f64 },
    /// Gram or density matrix has an eigenvalue below `−tol·λ_max`.
    NotPsd { min_eigenvalue: f64, scale: f64 },
    /// Input matrix is not square or dimensions disagree.
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    /// A matrix entry is NaN or infinite.
    NonFinite,
    /// Iterative eigensolver failed to converge; signals a defective input
    /// or tolerance misconfiguration, not expected in normal use.
    NoConvergence(&'static str),
    /// Elements of two different algebras were combined.
    AlgebraMismatch,
    /// Candidate map fails `Φ(1) = 1`.
    NotUnital { residual: f64 },
    /// Candidate map has a Choi block with eigenvalue below `−tol·‖Choi‖`,
    /// or a non-Hermitian Choi block (not *-preserving).
    NotCp { min_eigenvalue: f64, scale: f64 },
    /// Computed multiplicative domain fails its closure re-verification.
    NotAnAlgebra { residual: f64 },
    /// Kadison defect `Φ(a*a) − Φ(a*)Φ(a)` has a genuinely negative
    /// eigenvalue; the input map is not completely positive.
    SchwarzViolation { min_eigenvalue: f64, scale: f64 },
    /// `φ∘Φ ≠ φ`; the transfer contraction would be ill-defined.
    NotInvariant { residual: f64 },
    /// A state produced a rank-0 GNS space (impossible for a true state).
    DegenerateState,
    /// The cyclic vector is not cyclic for the commutant, so it does not
    /// separate the von Neumann algebra.
    NotSeparating { residual: f64 },
    /// Operation requires a faithful state.
    NotFaithful,
    /// No `φ`-adjoint exists: the unique candidate satisfying the adjunction
    /// identity is not a ucp map.
    ModularObstruction { detail: String },
    /// Candidate map for a Stinespring step is not unital completely positive.
    NotUcp { detail: String },
    /// Stinespring Gram matrix is not positive semidefinite; the dilated map
    /// is not completely positive.
    GramNotPsd { min_eigenvalue: f64, scale: f64 },
    /// A map defined on generating vectors fails to be isometric there,
    /// so the defining assignment does not descend to the quotient.
    IllDefined { residual: f64 },
    /// Projected tower dimension exceeds the configured cap.
    DimensionCap { projected: usize, cap: usize },
    /// An operation needs more isometry headroom than the truncation holds.
    BudgetExceeded { needed: usize, budget: usize },
    /// No intertwining unitary within tolerance (signals a bug, not math).
    NotEquivalent { residual: f64 },
    /// A stated precondition of the operation does not hold.
    PreconditionFailed(String),
    /// Dynamics is not multiplicative (a homomorphism) where required.
    NotMultiplicative { residual: f64 },
    /// A `φ`-adjoint is required but was not supplied / does not exist.
    NoAdjoint,
    /// `Φ∘Ψ ≠ id`; carries the max residual and the index of the basis
    /// element witnessing the failure.
    NotASection { residual: f64, witness: usize },
    /// A closed-form construction disagrees with its independent oracle.
    OracleMismatch { residual: f64 },
    /// An identity that holds in exact arithmetic failed its residual
    /// certificate; names the identity.
    CertificationFailed { what: &'static str, residual: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NotHermitian { residual, scale } => {
                write!(
                    f,
                    "matrix is not Hermitian: asymmetry {residual:.3e} vs scale {scale:.3e}"
                )
            }
            Error::NotPsd {
                min_eigenvalue,
                scale,
            } => {
                write!(
                    f,
                    "matrix is not PSD: min eigenvalue {min_eigenvalue:.3e} vs scale {scale:.3e}"
                )
            }
            Error::ShapeMismatch { expected, got } => {
                write!(
                    f,
                    "shape mismatch: expected {}x{}, got {}x{}",
                    expected.0, expected.1, got.0, got.1
                )
            }
            Error::NonFinite => write!(f, "matrix contains NaN or infinite entries"),
            Error::NoConvergence(what) => write!(f, "no convergence in {what}"),
            Error::AlgebraMismatch => write!(f, "elements belong to different algebras"),
            Error::NotUnital { residual } => {
                write!(f, "map is not unital: ‖Φ(1)−1‖ = {residual:.3e}")
            }
            Error::NotCp {
                min_eigenvalue,
                scale,
            } => {
                write!(f, "map is not completely positive: Choi eigenvalue {min_eigenvalue:.3e} vs scale {scale:.3e}")
            }
            Error::NotAnAlgebra { residual } => {
                write!(
                    f,
                    "computed subspace is not a *-subalgebra: closure residual {residual:.3e}"
                )
            }
            Error::SchwarzViolation {
                min_eigenvalue,
                scale,
            } => {
                write!(f, "Schwarz inequality violated: eigenvalue {min_eigenvalue:.3e} vs scale {scale:.3e}")
            }
            Error::NotInvariant { residual } => {
                write!(
                    f,
                    "state is not invariant: max |φ(Φ(a))−φ(a)| = {residual:.3e}"
                )
            }
            Error::DegenerateState => write!(f, "state produced a rank-0 GNS space"),
            Error::NotSeparating { residual } => {
                write!(
                    f,
                    "cyclic vector is not cyclic for the commutant (residual {residual:.3e})"
                )
            }
            Error::NotFaithful => write!(f, "state is not faithful"),
            Error::ModularObstruction { detail } => write!(f, "no φ-adjoint exists: {detail}"),
            Error::NotUcp { detail } => write!(f, "map is not ucp: {detail}"),
            Error::GramNotPsd {
                min_eigenvalue,
                scale,
            } => {
                write!(f, "Stinespring Gram not PSD: eigenvalue {min_eigenvalue:.3e} vs scale {scale:.3e}")
            }
            Error::IllDefined { residual } => {
                write!(
                    f,
                    "defining assignment fails isometry on generators (residual {residual:.3e})"
                )
            }
            Error::DimensionCap { projected, cap } => {
                write!(
                    f,
                    "projected dilation dimension {projected} exceeds cap {cap}"
                )
            }
            Error::BudgetExceeded { needed, budget } => {
                write!(
                    f,
                    "operation needs headroom {needed} but truncation budget is {budget}"
                )
            }
            Error::NotEquivalent { residual } => {
                write!(
                    f,
                    "no intertwining unitary within tolerance (residual {residual:.3e})"
                )
            }
            Error::PreconditionFailed(msg) => write!(f, "precondition failed: {msg}"),
            Error::NotMultiplicative { residual } => {
                write!(
                    f,
                    "dynamics is not multiplicative (residual {residual:.3e})"
                )
            }
            Error::NoAdjoint => write!(f, "dynamics has no φ-adjoint"),
            Error::NotASection { residual, witness } => {
                write!(
                    f,
                    "Φ∘Ψ ≠ id: residual {residual:.3e} at basis element {witness}"
                )
            }
            Error::OracleMismatch { residual } => {
                write!(
                    f,
                    "closed form disagrees with independent oracle (residual {residual:.3e})"
                )
            }
            Error::CertificationFailed { what, residual } => {
                write!(
                    f,
                    "certification failed for {what}: residual {residual:.3e}"
                )
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
