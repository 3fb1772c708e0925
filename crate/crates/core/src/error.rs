use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("flux denominator must be nonzero")]
    ZeroDenominator,

    #[error("invalid flux: {0}")]
    InvalidFlux(String),

    #[error("non-finite Bloch momentum ({k1}, {k2})")]
    InvalidMomentum { k1: f64, k2: f64 },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("eigensolver failed: {0}")]
    EigensolveFailure(String),

    #[error(
        "overlap determinant {modulus:.3e} below link tolerance on face {face}; refine the grid"
    )]
    SingularLink { face: usize, modulus: f64 },

    #[error("curvature sum {curvature_sum} is {residue:.3e} away from an integer")]
    NotQuantized { curvature_sum: f64, residue: f64 },

    #[error("gauge undefined at its singular pole (polar angle {theta})")]
    GaugeUndefined { theta: f64 },

    #[error("instantaneous gap {gap:.3e} fell below 10 x rate at parameter {phi}")]
    GapClosure { phi: f64, gap: f64 },

    #[error("adiabatic integrator failed: {0}")]
    IntegratorFailure(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("gap index {r} outside 1..{q}")]
    InvalidGapIndex { r: i64, q: i64 },

    #[error("gap {r} at flux {p}/{q} has only the ambiguous label |t| = q/2")]
    AmbiguousLabel { p: i64, q: i64, r: i64 },

    #[error("invalid lattice model: {0}")]
    InvalidModel(String),

    #[error("Fermi energy {e_f} within 1e-9 of eigenvalue {eigenvalue}")]
    FermiOnSpectrum { e_f: f64, eigenvalue: f64 },

    #[error("flux insertion point ({x}, {y}) coincides with a lattice site")]
    CenterOnSite { x: f64, y: f64 },

    #[error("trace has imaginary part {0:.3e}")]
    ComplexTrace(f64),
}
