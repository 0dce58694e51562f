//! Quantum channels acting on one side of a shared resource, and the
//! capability bookkeeping around them.
//!
//! A [`KrausChannel`] is a completely positive trace-preserving map given
//! by operators `{A_k}` with `Σ A_k†A_k = I`. Applying one to the sender
//! or receiver half of a resource models noise between distribution and
//! use; [`teleportation_capability_after_channel`] reports what is left of
//! the teleportation capability afterwards, compressing away any receiver
//! or sender dimensions the output no longer occupies.
//!
//! [`fold_blocks`] merges congruent sectors of one side (`|j⟩ ↦ |j mod b⟩`)
//! for states that carry no coherence between those sectors — the honest
//! way to read a block-pinched output as a state on the smaller space.

use crate::classify::{classify, Classification};
use crate::error::{QutelError, Result};
use crate::linalg::{self, tensor_product, ComplexMatrix, Side};
use crate::measure::weyl_operator;
use crate::states::BipartiteMixed;
use crate::tol;
use crate::C64;

/// Completely positive trace-preserving map in Kraus form.
#[derive(Debug, Clone)]
pub struct KrausChannel {
    dim: usize,
    operators: Vec<ComplexMatrix>,
}

impl KrausChannel {
    /// Validate `Σ A†A = I` within [`tol::STRUCTURAL`] and wrap.
    pub fn new(dim: usize, operators: Vec<ComplexMatrix>) -> Result<Self> {
        if operators.is_empty() {
            return Err(QutelError::InvalidChannel("no Kraus operators".into()));
        }
        let mut sum = ComplexMatrix::zeros(dim, dim);
        for (k, op) in operators.iter().enumerate() {
            if op.rows() != dim || op.cols() != dim {
                return Err(QutelError::InvalidChannel(format!(
                    "operator {k} is {}x{}, expected {dim}x{dim}",
                    op.rows(),
                    op.cols()
                )));
            }
            sum = sum.add(&op.adjoint().mul(op));
        }
        let deviation = sum.distance(&ComplexMatrix::identity(dim));
        if deviation > tol::STRUCTURAL * dim as f64 {
            return Err(QutelError::InvalidChannel(format!(
                "Kraus operators are not trace preserving (deviation {deviation:.3e})"
            )));
        }
        Ok(KrausChannel { dim, operators })
    }

    pub fn identity(dim: usize) -> Self {
        KrausChannel { dim, operators: vec![ComplexMatrix::identity(dim)] }
    }

    /// Depolarizing channel `ρ ↦ (1−p)ρ + p·(1/dim²)Σ_{st} U_st ρ U_st†`
    /// over the full Weyl family.
    pub fn depolarizing(dim: usize, strength: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&strength) {
            return Err(QutelError::InvalidChannel(format!(
                "depolarizing strength {strength} outside [0, 1]"
            )));
        }
        let mut operators = Vec::with_capacity(dim * dim + 1);
        operators
            .push(ComplexMatrix::identity(dim).scale(C64::new((1.0 - strength).sqrt(), 0.0)));
        let weyl_scale = C64::new((strength / (dim * dim) as f64).sqrt(), 0.0);
        for s in 1..=dim {
            for t in 1..=dim {
                operators.push(weyl_operator(s, t, dim)?.scale(weyl_scale));
            }
        }
        KrausChannel::new(dim, operators)
    }

    /// Pinching channel that kills coherence between consecutive blocks of
    /// `block` levels: Kraus operators are the block projectors.
    pub fn block_pinching(dim: usize, block: usize) -> Result<Self> {
        if block == 0 || dim % block != 0 {
            return Err(QutelError::InvalidChannel(format!(
                "cannot split dimension {dim} into blocks of {block}"
            )));
        }
        let mut operators = Vec::with_capacity(dim / block);
        for x in 0..dim / block {
            operators.push(ComplexMatrix::from_fn(dim, dim, |i, j| {
                if i == j && i / block == x {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }));
        }
        KrausChannel::new(dim, operators)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    /// Apply the channel to one side of a bipartite state.
    pub fn apply_one_sided(&self, state: &BipartiteMixed, side: Side) -> Result<BipartiteMixed> {
        let (m, n) = state.dims();
        let local = match side {
            Side::A => m,
            Side::B => n,
        };
        if local != self.dim {
            return Err(QutelError::DimensionMismatch(format!(
                "channel acts on dimension {}, side has {local}",
                self.dim
            )));
        }
        let size = m * n;
        let mut out = ComplexMatrix::zeros(size, size);
        for op in &self.operators {
            let lifted = match side {
                Side::A => tensor_product(op, &ComplexMatrix::identity(n)),
                Side::B => tensor_product(&ComplexMatrix::identity(m), op),
            };
            out = out.add(&lifted.mul(state.density()).mul(&lifted.adjoint()));
        }
        BipartiteMixed::new((m, n), out)
    }
}

/// Compress one side of a state onto the support of its marginal.
///
/// Returns the compressed state and the orthonormal frame `F` whose columns
/// span the support, so the original embedding is `F · (compressed side)`.
/// A full-rank marginal returns the state unchanged with an identity frame.
pub fn compress_support(
    state: &BipartiteMixed,
    side: Side,
) -> Result<(BipartiteMixed, ComplexMatrix)> {
    let (m, n) = state.dims();
    let marginal = state.marginal(side);
    let spectrum = linalg::eig_hermitian(&marginal)?;
    let keep: Vec<usize> = spectrum
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > tol::EIGENVALUE_CUTOFF)
        .map(|(i, _)| i)
        .collect();
    let local = marginal.rows();
    if keep.len() == local {
        return Ok((state.clone(), ComplexMatrix::identity(local)));
    }
    let frame = ComplexMatrix::from_fn(local, keep.len(), |r, c| {
        spectrum.vectors.get(r, keep[c])
    });
    let (compress, dims) = match side {
        Side::A => (
            tensor_product(&frame.adjoint(), &ComplexMatrix::identity(n)),
            (keep.len(), n),
        ),
        Side::B => (
            tensor_product(&ComplexMatrix::identity(m), &frame.adjoint()),
            (m, keep.len()),
        ),
    };
    let compressed = compress.mul(state.density()).mul(&compress.adjoint());
    Ok((BipartiteMixed::new(dims, compressed)?, frame))
}

/// Merge congruent sectors of one side: `|j⟩ ↦ |j mod block⟩`.
///
/// Valid only when the state carries no coherence between the sectors
/// being identified (e.g. after a [`KrausChannel::block_pinching`] on that
/// side); coherent cross-sector mass is reported as an error rather than
/// silently distorted.
pub fn fold_blocks(state: &BipartiteMixed, side: Side, block: usize) -> Result<BipartiteMixed> {
    let (m, n) = state.dims();
    let local = match side {
        Side::A => m,
        Side::B => n,
    };
    if block == 0 || local % block != 0 {
        return Err(QutelError::DimensionMismatch(format!(
            "cannot fold dimension {local} into blocks of {block}"
        )));
    }
    // Coherence check between distinct sectors: every density entry that
    // couples different sectors of the folded side must vanish.
    let sector_of = |composite: usize| match side {
        Side::A => (composite / n) / block,
        Side::B => (composite % n) / block,
    };
    let mut coherence: f64 = 0.0;
    for r in 0..m * n {
        for c in 0..m * n {
            if sector_of(r) != sector_of(c) {
                coherence = coherence.max(state.density().get(r, c).norm());
            }
        }
    }
    if coherence > 1e-12 {
        return Err(QutelError::InvalidChannel(format!(
            "the folded sectors carry coherence {coherence:.3e}; folding would distort the state"
        )));
    }
    let fold = ComplexMatrix::from_fn(block, local, |i, j| {
        if j % block == i {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let (map, dims) = match side {
        Side::A => (
            tensor_product(&fold, &ComplexMatrix::identity(n)),
            (block, n),
        ),
        Side::B => (
            tensor_product(&ComplexMatrix::identity(m), &fold),
            (m, block),
        ),
    };
    let folded = map.mul(state.density()).mul(&map.adjoint());
    let trace = folded.trace().re;
    if (trace - 1.0).abs() > 1e-12 {
        return Err(QutelError::InvalidChannel(format!(
            "folding changed the trace to {trace:.15}"
        )));
    }
    BipartiteMixed::new(dims, folded)
}

/// Send one side of the resource through a channel, compress the output
/// side onto its support, and classify what remains.
pub fn teleportation_capability_after_channel(
    resource: &BipartiteMixed,
    channel: &KrausChannel,
    side: Side,
    d: usize,
) -> Result<(BipartiteMixed, Classification)> {
    let noisy = channel.apply_one_sided(resource, side)?;
    let (compressed, _) = compress_support(&noisy, side)?;
    let classification = classify(&compressed, d)?;
    Ok((compressed, classification))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{fixtures, BipartitePure};

    #[test]
    fn kraus_validation_rejects_non_trace_preserving_families() {
        let half = ComplexMatrix::identity(2).scale(C64::new(0.5, 0.0));
        assert!(matches!(
            KrausChannel::new(2, vec![half]),
            Err(QutelError::InvalidChannel(_))
        ));
    }

    #[test]
    fn depolarizing_qubit_channel_produces_the_isotropic_mixture() {
        let p = 0.3;
        let channel = KrausChannel::depolarizing(2, p).unwrap();
        let phi = BipartiteMixed::from_pure(&fixtures::maximally_entangled_pure(2));
        let noisy = channel.apply_one_sided(&phi, Side::B).unwrap();
        // Twirling one side over the full Weyl family averages to the
        // maximally mixed state: output is (1−p)·Φ + p·I/4.
        let expected = phi
            .density()
            .scale(C64::new(1.0 - p, 0.0))
            .add(&ComplexMatrix::identity(4).scale(C64::new(p / 4.0, 0.0)));
        assert!(noisy.density().distance(&expected) < 1e-12);
    }

    #[test]
    fn block_pinching_then_folding_reproduces_the_two_block_mixture() {
        let phi4 = BipartiteMixed::from_pure(&fixtures::maximally_entangled_pure(4));
        let pinch = KrausChannel::block_pinching(4, 2).unwrap();
        let pinched = pinch.apply_one_sided(&phi4, Side::B).unwrap();
        let folded = fold_blocks(&pinched, Side::B, 2).unwrap();
        assert_eq!(folded.dims(), (4, 2));
        let expected = fixtures::two_block_mixture();
        assert!(
            folded.density().distance(expected.density()) < 1e-12,
            "pipeline output drifted from the reference mixture"
        );
    }

    #[test]
    fn folding_a_coherent_state_is_refused() {
        let phi4 = BipartiteMixed::from_pure(&fixtures::maximally_entangled_pure(4));
        let err = fold_blocks(&phi4, Side::B, 2).unwrap_err();
        assert!(matches!(err, QutelError::InvalidChannel(_)));
    }

    #[test]
    fn support_compression_recovers_an_embedded_bell_pair() {
        // Φ₂ carried on receiver levels 1 and 3 of C^4.
        let mut amps = vec![C64::new(0.0, 0.0); 8];
        let inv = C64::new(0.5_f64.sqrt(), 0.0);
        amps[1] = inv; // |0⟩|1⟩
        amps[7] = inv; // |1⟩|3⟩
        let state = BipartiteMixed::from_pure(&BipartitePure::new((2, 4), amps).unwrap());
        let (compressed, frame) = compress_support(&state, Side::B).unwrap();
        assert_eq!(compressed.dims(), (2, 2));
        assert_eq!(frame.cols(), 2);
        let pure = compressed.as_pure().expect("compression keeps purity");
        assert!(crate::states::is_maximally_entangled(&pure, 2, 1e-9));
    }

    #[test]
    fn capability_survives_pinching_but_not_depolarizing_noise() {
        let phi4 = BipartiteMixed::from_pure(&fixtures::maximally_entangled_pure(4));
        let pinch = KrausChannel::block_pinching(4, 2).unwrap();
        let (_, after_pinch) =
            teleportation_capability_after_channel(&phi4, &pinch, Side::B, 2).unwrap();
        assert!(matches!(
            after_pinch.verdict,
            crate::classify::Verdict::Capable { .. }
        ));

        let noisy = KrausChannel::depolarizing(4, 0.5).unwrap();
        let (_, after_noise) =
            teleportation_capability_after_channel(&phi4, &noisy, Side::B, 2).unwrap();
        assert!(!matches!(
            after_noise.verdict,
            crate::classify::Verdict::Capable { .. }
        ));
    }
}
