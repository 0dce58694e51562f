//! Qudit teleportation simulator and entangled-resource classifier.

pub mod channels;
pub mod checks;
pub mod classify;
pub mod entanglement;
pub mod error;
pub mod linalg;
pub mod measure;
pub mod protocol;
pub mod states;
pub mod tol;

pub use channels::KrausChannel;
pub use checks::CheckReport;
pub use classify::{BlockStructure, CapableKind, Classification, ProtocolCertificate, Verdict};
pub use entanglement::EntanglementReport;
pub use error::{QutelError, Result};
pub use linalg::{ComplexMatrix, SingularDecomposition, SpectralDecomposition};
pub use measure::{BasisReport, MeasurementBasis};
pub use protocol::{
    CertificationOutcome, FaithfulnessCertificate, FaithfulnessViolation, TeleportOutcome,
};
pub use states::{BipartiteMixed, BipartitePure, InputState, SchmidtDecomposition};

/// Complex scalar used throughout the crate.
pub type C64 = num_complex::Complex64;
