//! Joint measurement bases for the sender's two particles.
//!
//! The sender measures the input qudit (`C^d`) together with her share of
//! the resource (`C^m`), so a basis lives on `C^d ⊗ C^m`. Three
//! constructions are provided:
//!
//! * [`bell_basis`] — the `d²` generalized Bell states on `C^d ⊗ C^d`,
//!   generated by the Weyl shift/phase operators;
//! * [`block_basis`] — for each orthogonal sender subspace `H_x` of
//!   dimension `g_x ≥ d`, the `d·g_x` maximally entangled states spanning
//!   `C^d ⊗ H_x`, padded to completeness with computational product states
//!   on the orthogonal remainder;
//! * arbitrary user bases via [`MeasurementBasis::new`] + validation.
//!
//! Element order is deterministic everywhere: `(s, t)` lexicographic within
//! a block, blocks in the order given, remainder products last.

use num_complex::Complex64 as C64;

use crate::error::{QutelError, Result};
use crate::linalg::{self, outer, ComplexMatrix};
use crate::states::{is_maximally_entangled, BipartitePure};
use crate::tol;

/// Cyclic shift on `C^d`: `|j⟩ -> |(j+1) mod d⟩`.
pub fn shift_operator(d: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d, d, |i, j| {
        if i == (j + 1) % d {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Diagonal phase operator on `C^d`: `|j⟩ -> ω^j |j⟩` with
/// `ω = exp(−2πi/d)`.
pub fn phase_operator(d: usize) -> ComplexMatrix {
    let omega = -2.0 * std::f64::consts::PI / d as f64;
    ComplexMatrix::from_fn(d, d, |i, j| {
        if i == j {
            C64::from_polar(1.0, omega * j as f64)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Weyl operator `U_{st} = shift^t · phase^s` for `s, t ∈ 1..=d`.
///
/// The family is trace-orthogonal, `tr(U_{st} U_{s′t′}†) = d·δ_{ss′}δ_{tt′}`,
/// and `U_{dd} = I` (full periods close the cycle). Indices follow the
/// 1-based convention of the generalized Bell construction.
pub fn weyl_operator(s: usize, t: usize, d: usize) -> Result<ComplexMatrix> {
    if d == 0 || s == 0 || t == 0 || s > d || t > d {
        return Err(QutelError::IndexOutOfRange(format!(
            "weyl indices (s={s}, t={t}) must lie in 1..={d}"
        )));
    }
    // (shift^t phase^s)|p⟩ = ω^{s p} |(p+t) mod d⟩, assembled entrywise.
    let omega = -2.0 * std::f64::consts::PI / d as f64;
    let mut u = ComplexMatrix::zeros(d, d);
    for p in 0..d {
        u.set((p + t) % d, p, C64::from_polar(1.0, omega * (s * p) as f64));
    }
    Ok(u)
}

/// An orthonormal measurement basis on `C^d ⊗ C^m`.
#[derive(Debug, Clone)]
pub struct MeasurementBasis {
    d: usize,
    m: usize,
    states: Vec<BipartitePure>,
}

/// Validation summary produced by [`MeasurementBasis::validate`].
#[derive(Debug, Clone)]
pub struct BasisReport {
    /// Largest deviation of `⟨e_i|e_j⟩` from `δ_ij`.
    pub orthonormality_deviation: f64,
    /// Frobenius distance of `Σ |e⟩⟨e|` from the identity.
    pub completeness_deviation: f64,
    /// Per element: does it have `d` equal Schmidt coefficients `1/√d`?
    pub max_ent_flags: Vec<bool>,
}

impl BasisReport {
    pub fn is_orthonormal_and_complete(&self, tolerance: f64) -> bool {
        self.orthonormality_deviation <= tolerance && self.completeness_deviation <= tolerance
    }
}

impl MeasurementBasis {
    /// Wrap explicit basis states; every state must live on `C^d ⊗ C^m` and
    /// the count must be exactly `d·m`. Orthonormality is checked by
    /// [`validate`](Self::validate), not here.
    pub fn new(d: usize, m: usize, states: Vec<BipartitePure>) -> Result<Self> {
        if states.len() != d * m {
            return Err(QutelError::InvalidBasis(format!(
                "{} states cannot form a basis of C^{d} ⊗ C^{m} (need {})",
                states.len(),
                d * m
            )));
        }
        if let Some(bad) = states.iter().find(|s| s.dims() != (d, m)) {
            return Err(QutelError::InvalidBasis(format!(
                "basis element lives on {:?}, expected ({d},{m})",
                bad.dims()
            )));
        }
        Ok(MeasurementBasis { d, m, states })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[BipartitePure] {
        &self.states
    }

    pub fn state(&self, j: usize) -> &BipartitePure {
        &self.states[j]
    }

    /// Orthonormality, completeness and per-element maximal entanglement.
    pub fn validate(&self) -> BasisReport {
        let mut ortho_dev: f64 = 0.0;
        for (i, a) in self.states.iter().enumerate() {
            for (j, b) in self.states.iter().enumerate() {
                let overlap = a.overlap(b);
                let expected = if i == j { 1.0 } else { 0.0 };
                ortho_dev = ortho_dev.max((overlap - expected).norm());
            }
        }
        let size = self.d * self.m;
        let mut resolution = ComplexMatrix::zeros(size, size);
        for s in &self.states {
            resolution = resolution.add(&outer(s.amplitudes(), s.amplitudes()));
        }
        let completeness_deviation = resolution.distance(&ComplexMatrix::identity(size));
        let max_ent_flags = self
            .states
            .iter()
            .map(|s| is_maximally_entangled(s, self.d, tol::NONZERO_SCHMIDT))
            .collect();
        BasisReport {
            orthonormality_deviation: ortho_dev,
            completeness_deviation,
            max_ent_flags,
        }
    }

    /// Error unless the basis is orthonormal and complete within
    /// [`tol::STRUCTURAL`].
    pub fn require_valid(&self) -> Result<()> {
        let report = self.validate();
        if !report.is_orthonormal_and_complete(tol::STRUCTURAL) {
            return Err(QutelError::InvalidBasis(format!(
                "orthonormality deviation {:.3e}, completeness deviation {:.3e}",
                report.orthonormality_deviation, report.completeness_deviation
            )));
        }
        Ok(())
    }
}

/// The `d²` generalized Bell states on `C^d ⊗ C^d`:
/// `|ψ_{st}⟩ = (U_{st}† ⊗ I) Σ_k |kk⟩/√d`, ordered `(s, t)` lexicographic
/// with `s, t ∈ 1..=d`.
pub fn bell_basis(d: usize) -> MeasurementBasis {
    let identity_frame = ComplexMatrix::identity(d);
    block_basis(d, &[identity_frame], d)
        .expect("the identity frame is a valid single block")
}

/// Maximally entangled basis adapted to orthogonal sender subspaces.
///
/// `frames` holds one `m x g_x` matrix per block whose orthonormal columns
/// span the subspace `H_x ⊆ C^m`; every `g_x` must be at least `d` and the
/// subspaces mutually orthogonal. Block `x` contributes the `d·g_x` states
///
/// `|ψ_{st}⟩ = Σ_p ω^{−sp} |p⟩ ⊗ |h_{(p+t) mod g_x}⟩ / √d`,
///
/// `s ∈ 1..=d`, `t ∈ 1..=g_x`, where `h_l` is the `l`-th frame column; for
/// `g_x = d` these are exactly the [`bell_basis`] states rotated into the
/// block. Computational product states on the orthogonal remainder of
/// `C^m` complete the basis, ordered by `(input level, remainder index)`.
pub fn block_basis(d: usize, frames: &[ComplexMatrix], m: usize) -> Result<MeasurementBasis> {
    if frames.is_empty() {
        return Err(QutelError::InvalidBasis("no blocks given".into()));
    }
    let mut total = 0usize;
    for (x, f) in frames.iter().enumerate() {
        if f.rows() != m {
            return Err(QutelError::DimensionMismatch(format!(
                "block {x} frame has {} rows, expected {m}",
                f.rows()
            )));
        }
        if f.cols() < d {
            return Err(QutelError::InvalidBasis(format!(
                "block {x} has dimension {} < d = {d}",
                f.cols()
            )));
        }
        if !f.is_isometry(tol::STRUCTURAL) {
            return Err(QutelError::InvalidBasis(format!(
                "block {x} frame columns are not orthonormal"
            )));
        }
        total += f.cols();
    }
    if total > m {
        return Err(QutelError::InvalidBasis(format!(
            "blocks span {total} dimensions, more than m = {m}"
        )));
    }
    for x in 0..frames.len() {
        for y in (x + 1)..frames.len() {
            let overlap = frames[x].adjoint().mul(&frames[y]);
            if overlap.frobenius_norm() > tol::STRUCTURAL {
                return Err(QutelError::InvalidBasis(format!(
                    "blocks {x} and {y} are not orthogonal"
                )));
            }
        }
    }

    let omega = -2.0 * std::f64::consts::PI / d as f64;
    let scale = 1.0 / (d as f64).sqrt();
    let mut states = Vec::with_capacity(d * m);
    for frame in frames {
        let g = frame.cols();
        for s in 1..=d {
            for t in 1..=g {
                let mut amplitudes = vec![C64::new(0.0, 0.0); d * m];
                for p in 0..d {
                    let phase = C64::from_polar(scale, -omega * (s * p) as f64);
                    let col = (p + t) % g;
                    for row in 0..m {
                        amplitudes[p * m + row] += phase * frame.get(row, col);
                    }
                }
                states.push(BipartitePure::new((d, m), amplitudes)?);
            }
        }
    }

    // Complete with product states on the remainder of C^m.
    let frame_columns: Vec<Vec<C64>> = frames
        .iter()
        .flat_map(|f| (0..f.cols()).map(|j| f.column(j)).collect::<Vec<_>>())
        .collect();
    let remainder = linalg::orthonormal_completion(&frame_columns, m);
    for level in 0..d {
        for r in &remainder {
            let mut amplitudes = vec![C64::new(0.0, 0.0); d * m];
            for (row, value) in r.iter().enumerate() {
                amplitudes[level * m + row] = *value;
            }
            states.push(BipartitePure::new((d, m), amplitudes)?);
        }
    }

    MeasurementBasis::new(d, m, states)
}
