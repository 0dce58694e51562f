//! Teleportation protocols over an arbitrary shared resource.
//!
//! The sender holds an unknown input on `C^d` plus the `C^m` half of a
//! bipartite resource whose `C^n` half sits with the receiver. Measuring
//! input + sender half in a basis element `|e_j⟩` steers the receiver to
//! `M φ` where `M = Aᵀ V†` is the outcome's [`conditional_map`] built from
//! the resource coefficients `A` and the basis-element coefficients `V`.
//!
//! The protocol is *faithful* exactly when every outcome's conditional map
//! is a scaled isometry, with one common isometry per outcome across all
//! eigenstates of a mixed resource. [`derive_corrections`] checks this and
//! either issues a [`FaithfulnessCertificate`] carrying the receiver-side
//! correction unitaries, or refutes it with the first concrete violation.
//!
//! For resources that fail certification, [`best_effort_simulate`] still
//! runs the protocol with corrections fitted to the probability-weighted
//! average conditional maps, and [`average_fidelity`] Monte-Carlo averages
//! the resulting fidelity over Haar-random inputs. When the receiver side
//! is the larger one, [`bob_first_simulate`] lets the receiver measure
//! first with rank-`d` projectors and runs a sender-side protocol on each
//! collapsed leaf.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{QutelError, Result};
use crate::linalg::{
    self, outer, tensor_product, unitary_completion, ComplexMatrix,
};
use crate::measure::{bell_basis, MeasurementBasis};
use crate::states::{random_input_with, BipartiteMixed, BipartitePure, InputState};
use crate::tol;
use crate::C64;

/// Map applied to the receiver's half by one measurement outcome:
/// `M = Aᵀ V†` (`n x d`), where `A` (`m x n`) holds the resource
/// coefficients and `V` (`d x m`) the basis-element coefficients. The
/// unnormalised receiver state for input `φ` is `M φ`.
pub fn conditional_map(
    resource: &BipartitePure,
    measurement: &BipartitePure,
) -> Result<ComplexMatrix> {
    let (m, _) = resource.dims();
    let (_, meas_m) = measurement.dims();
    if meas_m != m {
        return Err(QutelError::DimensionMismatch(format!(
            "measurement acts on sender dimension {meas_m}, resource has {m}"
        )));
    }
    let a = resource.coefficient_matrix();
    let v = measurement.coefficient_matrix();
    Ok(a.transpose().mul(&v.adjoint()))
}

/// How one conditional map broke faithfulness.
#[derive(Debug, Clone)]
pub enum ViolationKind {
    /// `M†M` is not proportional to the identity.
    NotScaledIsometry { deviation: f64 },
    /// The map is a scaled isometry but disagrees with the isometry shared
    /// by earlier eigenstates of the same outcome (beyond a global phase).
    InconsistentIsometry { deviation: f64 },
}

impl std::fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ViolationKind::NotScaledIsometry { deviation } => {
                write!(f, "conditional map is not a scaled isometry (deviation {deviation:.3e})")
            }
            ViolationKind::InconsistentIsometry { deviation } => {
                write!(
                    f,
                    "conditional map disagrees with the outcome's shared isometry (deviation {deviation:.3e})"
                )
            }
        }
    }
}

/// Concrete witness that a resource/basis pair is not faithful.
#[derive(Debug, Clone)]
pub struct FaithfulnessViolation {
    /// Index into the resource's eigen-ensemble.
    pub eigenstate: usize,
    /// Index of the offending basis element.
    pub outcome: usize,
    pub kind: ViolationKind,
}

impl std::fmt::Display for FaithfulnessViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "eigenstate {} at outcome {}: {}",
            self.eigenstate, self.outcome, self.kind
        )
    }
}

/// Proof object that a resource/basis pair teleports faithfully.
///
/// Stores the eigen-ensemble it was derived from, the per-outcome scales
/// `c_{ij} = ‖M_{ij}‖_F / √d`, outcome probabilities `q_j = Σ_i p_i c_{ij}²`
/// and the receiver correction unitaries. Built exclusively by
/// [`derive_corrections`]; [`simulate`] re-verifies the resource against
/// the stored ensemble before trusting it.
#[derive(Debug, Clone)]
pub struct FaithfulnessCertificate {
    d: usize,
    n: usize,
    basis: MeasurementBasis,
    weights: Vec<f64>,
    eigenstates: Vec<BipartitePure>,
    scales: Vec<Vec<f64>>,
    probabilities: Vec<f64>,
    corrections: Vec<Option<ComplexMatrix>>,
}

impl FaithfulnessCertificate {
    pub fn d(&self) -> usize {
        self.d
    }

    /// Receiver dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn basis(&self) -> &MeasurementBasis {
        &self.basis
    }

    /// Outcome probabilities `q_j`, independent of the input state.
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// Scales `c_{ij}`, indexed `[outcome][eigenstate]`; zero marks a
    /// non-participating block.
    pub fn scales(&self) -> &[Vec<f64>] {
        &self.scales
    }

    /// Correction unitary for outcome `j` (`None` when the outcome has
    /// probability below [`tol::PROB_CUTOFF`]).
    pub fn correction(&self, j: usize) -> Option<&ComplexMatrix> {
        self.corrections.get(j).and_then(|c| c.as_ref())
    }

    pub fn corrections(&self) -> &[Option<ComplexMatrix>] {
        &self.corrections
    }

    /// Error unless `resource` is (numerically) the state this certificate
    /// was derived for.
    pub fn verify_resource(&self, resource: &BipartiteMixed) -> Result<()> {
        let dims = resource.dims();
        if dims != (self.basis.m(), self.n) {
            return Err(QutelError::StaleCertificate(format!(
                "certificate covers ({}, {}), resource lives on {:?}",
                self.basis.m(),
                self.n,
                dims
            )));
        }
        let size = dims.0 * dims.1;
        let mut reconstructed = ComplexMatrix::zeros(size, size);
        for (w, psi) in self.weights.iter().zip(&self.eigenstates) {
            reconstructed = reconstructed.add(&psi.projector().scale(C64::new(*w, 0.0)));
        }
        let gap = reconstructed.distance(resource.density());
        if gap > tol::PHASE_MATCH {
            return Err(QutelError::StaleCertificate(format!(
                "resource differs from the certified state by {gap:.3e}"
            )));
        }
        Ok(())
    }
}

/// Result of attempting to certify a resource/basis pair.
#[derive(Debug, Clone)]
pub enum CertificationOutcome {
    Certified(FaithfulnessCertificate),
    Refuted(FaithfulnessViolation),
}

impl CertificationOutcome {
    pub fn certificate(self) -> Option<FaithfulnessCertificate> {
        match self {
            CertificationOutcome::Certified(c) => Some(c),
            CertificationOutcome::Refuted(_) => None,
        }
    }

    pub fn violation(self) -> Option<FaithfulnessViolation> {
        match self {
            CertificationOutcome::Certified(_) => None,
            CertificationOutcome::Refuted(v) => Some(v),
        }
    }
}

/// Multiply by the phase making the first entry within a factor two of the
/// largest modulus real positive; deterministic and scale-free.
fn canonical_matrix_phase(m: &ComplexMatrix) -> ComplexMatrix {
    let max = m.max_abs();
    if max <= 0.0 {
        return m.clone();
    }
    let pivot = m
        .entries()
        .iter()
        .find(|e| e.norm() >= 0.5 * max)
        .copied()
        .expect("a maximal entry exists");
    m.scale(pivot.conj() / pivot.norm())
}

/// Polar-type isometry factor of an `n x d` map: `W = U_d · V†` from the
/// SVD, phase-canonicalised. Well-defined (if arbitrary in null
/// directions) even for rank-deficient input.
fn isometry_factor(map: &ComplexMatrix) -> ComplexMatrix {
    let dec = linalg::svd(map);
    let w = dec.left_block(map.cols()).mul(&dec.right);
    canonical_matrix_phase(&w)
}

/// Certify (or refute) faithful teleportation of a `d`-level input over
/// `resource` measured in `basis`.
///
/// Every outcome's conditional map must be a scaled isometry for every
/// eigenstate of the resource, all eigenstates of one outcome sharing the
/// isometry up to a global phase. On success the certificate carries one
/// correction unitary per outcome — the completion of `W†` to the receiver
/// space, which returns the teleported state on the first `d` levels.
pub fn derive_corrections(
    resource: &BipartiteMixed,
    basis: &MeasurementBasis,
    d: usize,
) -> Result<CertificationOutcome> {
    let (m, n) = resource.dims();
    if basis.d() != d || basis.m() != m {
        return Err(QutelError::DimensionMismatch(format!(
            "basis lives on ({}, {}), protocol needs ({d}, {m})",
            basis.d(),
            basis.m()
        )));
    }
    if n < d {
        return Err(QutelError::InvalidArgument(format!(
            "receiver dimension {n} cannot carry a {d}-level input"
        )));
    }
    basis.require_valid()?;

    let ensemble = resource.eigen_ensemble();
    let sqrt_d = (d as f64).sqrt();
    let mut scales = vec![vec![0.0; ensemble.len()]; basis.len()];
    let mut probabilities = vec![0.0; basis.len()];
    let mut corrections: Vec<Option<ComplexMatrix>> = vec![None; basis.len()];

    for j in 0..basis.len() {
        let mut shared: Option<(ComplexMatrix, f64)> = None; // (M_ref, c_ref)
        for (i, (weight, psi)) in ensemble.iter().enumerate() {
            let map = conditional_map(psi, basis.state(j))?;
            let c = map.frobenius_norm() / sqrt_d;
            if c < tol::ZERO_BLOCK {
                continue;
            }
            // Scaled-isometry check on the normalised Gram matrix.
            let gram = map.adjoint().mul(&map).scale(C64::new(1.0 / (c * c), 0.0));
            let deviation = gram.distance(&ComplexMatrix::identity(d));
            if deviation > tol::STRUCTURAL * (d as f64) {
                return Ok(CertificationOutcome::Refuted(FaithfulnessViolation {
                    eigenstate: i,
                    outcome: j,
                    kind: ViolationKind::NotScaledIsometry { deviation },
                }));
            }
            // Shared-isometry check: M_ref† M ∝ e^{iθ} c_ref c I.
            match &shared {
                None => shared = Some((map.clone(), c)),
                Some((reference, c_ref)) => {
                    let q = reference
                        .adjoint()
                        .mul(&map)
                        .scale(C64::new(1.0 / (c_ref * c), 0.0));
                    let mean = q.trace() / d as f64;
                    let off = q
                        .distance(&ComplexMatrix::identity(d).scale(mean))
                        / (d as f64).sqrt();
                    let misalignment = (1.0 - mean.norm()).abs();
                    let deviation = off.max(misalignment);
                    if deviation > tol::STRUCTURAL * (d as f64) {
                        return Ok(CertificationOutcome::Refuted(FaithfulnessViolation {
                            eigenstate: i,
                            outcome: j,
                            kind: ViolationKind::InconsistentIsometry { deviation },
                        }));
                    }
                }
            }
            scales[j][i] = c;
            probabilities[j] += weight * c * c;
        }
        if probabilities[j] > tol::PROB_CUTOFF {
            let (reference, _) = shared.expect("a participating map exists");
            let w = isometry_factor(&reference);
            corrections[j] = Some(unitary_completion(&w).adjoint());
        }
    }

    let total: f64 = probabilities.iter().sum();
    if (total - 1.0).abs() > tol::STRUCTURAL * basis.len() as f64 {
        return Err(QutelError::InvalidBasis(format!(
            "outcome probabilities sum to {total:.12}, expected 1"
        )));
    }

    let (weights, eigenstates) = ensemble.into_iter().unzip();
    Ok(CertificationOutcome::Certified(FaithfulnessCertificate {
        d,
        n,
        basis: basis.clone(),
        weights,
        eigenstates,
        scales,
        probabilities,
        corrections,
    }))
}

/// One measurement outcome of a protocol run.
#[derive(Debug, Clone)]
pub struct TeleportOutcome {
    /// Basis-element index (or running index after flattening a two-stage
    /// protocol).
    pub outcome: usize,
    pub probability: f64,
    /// Receiver correction applied for this outcome.
    pub correction: Option<ComplexMatrix>,
    /// Receiver state after correction, as a density matrix.
    pub corrected_state: Option<ComplexMatrix>,
    /// Overlap of the corrected state with the input embedded on the first
    /// `d` receiver levels.
    pub fidelity: Option<f64>,
}

/// Probability-weighted mean fidelity over the outcomes that can occur.
pub fn expected_fidelity(outcomes: &[TeleportOutcome]) -> f64 {
    let mut total = 0.0;
    let mut mass = 0.0;
    for o in outcomes {
        if let Some(f) = o.fidelity {
            total += o.probability * f;
            mass += o.probability;
        }
    }
    if mass > 0.0 {
        total / mass
    } else {
        0.0
    }
}

fn fidelity_against(reference: &[C64], density: &ComplexMatrix) -> f64 {
    let image = density.mul_vec(reference);
    linalg::inner(reference, &image).re.clamp(0.0, 1.0)
}

/// Run the certified protocol on a concrete input.
///
/// The certificate is re-verified against `resource` first and a
/// [`QutelError::StaleCertificate`] is returned if it no longer matches.
/// Outcomes with probability below [`tol::PROB_CUTOFF`] are reported with
/// probability zero and no state.
pub fn simulate(
    resource: &BipartiteMixed,
    input: &InputState,
    certificate: &FaithfulnessCertificate,
) -> Result<Vec<TeleportOutcome>> {
    certificate.verify_resource(resource)?;
    if input.d() != certificate.d {
        return Err(QutelError::DimensionMismatch(format!(
            "input has {} levels, certificate covers {}",
            input.d(),
            certificate.d
        )));
    }
    let n = certificate.n;
    let reference = input.embedded(n);
    let basis = &certificate.basis;
    let mut outcomes = Vec::with_capacity(basis.len());
    for j in 0..basis.len() {
        let Some(correction) = certificate.correction(j) else {
            outcomes.push(TeleportOutcome {
                outcome: j,
                probability: 0.0,
                correction: None,
                corrected_state: None,
                fidelity: None,
            });
            continue;
        };
        let mut conditional = ComplexMatrix::zeros(n, n);
        let mut mass = 0.0;
        for (i, (weight, psi)) in certificate
            .weights
            .iter()
            .zip(&certificate.eigenstates)
            .enumerate()
        {
            if certificate.scales[j][i] <= 0.0 {
                continue;
            }
            let map = conditional_map(psi, basis.state(j))?;
            let steered = map.mul_vec(input.amplitudes());
            let p = weight * linalg::vec_norm(&steered).powi(2);
            conditional = conditional.add(&outer(&steered, &steered).scale(C64::new(*weight, 0.0)));
            mass += p;
        }
        let normalized = conditional.scale(C64::new(1.0 / mass, 0.0));
        let corrected = correction.mul(&normalized).mul(&correction.adjoint());
        let fidelity = fidelity_against(&reference, &corrected);
        outcomes.push(TeleportOutcome {
            outcome: j,
            probability: mass,
            correction: Some(correction.clone()),
            corrected_state: Some(corrected),
            fidelity: Some(fidelity),
        });
    }
    Ok(outcomes)
}

/// Reusable best-effort protocol: corrections are fitted once from the
/// probability-weighted average conditional map of each outcome, then any
/// number of inputs can be run against them.
pub struct BestEffortEngine {
    d: usize,
    n: usize,
    weights: Vec<f64>,
    maps: Vec<Vec<ComplexMatrix>>,
    corrections: Vec<ComplexMatrix>,
}

impl BestEffortEngine {
    pub fn new(resource: &BipartiteMixed, basis: &MeasurementBasis, d: usize) -> Result<Self> {
        let (m, n) = resource.dims();
        if basis.d() != d || basis.m() != m {
            return Err(QutelError::DimensionMismatch(format!(
                "basis lives on ({}, {}), protocol needs ({d}, {m})",
                basis.d(),
                basis.m()
            )));
        }
        if n < d {
            return Err(QutelError::InvalidArgument(format!(
                "receiver dimension {n} cannot carry a {d}-level input"
            )));
        }
        basis.require_valid()?;
        let ensemble = resource.eigen_ensemble();
        let mut maps = Vec::with_capacity(basis.len());
        let mut corrections = Vec::with_capacity(basis.len());
        for j in 0..basis.len() {
            let mut per_eigenstate = Vec::with_capacity(ensemble.len());
            let mut average = ComplexMatrix::zeros(n, d);
            for (weight, psi) in &ensemble {
                let map = conditional_map(psi, basis.state(j))?;
                average = average.add(&map.scale(C64::new(*weight, 0.0)));
                per_eigenstate.push(map);
            }
            let w = isometry_factor(&average);
            corrections.push(unitary_completion(&w).adjoint());
            maps.push(per_eigenstate);
        }
        let weights = ensemble.into_iter().map(|(w, _)| w).collect();
        Ok(BestEffortEngine { d, n, weights, maps, corrections })
    }

    pub fn run(&self, input: &InputState) -> Result<Vec<TeleportOutcome>> {
        if input.d() != self.d {
            return Err(QutelError::DimensionMismatch(format!(
                "input has {} levels, protocol carries {}",
                input.d(),
                self.d
            )));
        }
        let reference = input.embedded(self.n);
        let mut outcomes = Vec::with_capacity(self.maps.len());
        for (j, per_eigenstate) in self.maps.iter().enumerate() {
            let mut conditional = ComplexMatrix::zeros(self.n, self.n);
            let mut mass = 0.0;
            for (weight, map) in self.weights.iter().zip(per_eigenstate) {
                let steered = map.mul_vec(input.amplitudes());
                mass += weight * linalg::vec_norm(&steered).powi(2);
                conditional =
                    conditional.add(&outer(&steered, &steered).scale(C64::new(*weight, 0.0)));
            }
            if mass <= tol::PROB_CUTOFF {
                outcomes.push(TeleportOutcome {
                    outcome: j,
                    probability: 0.0,
                    correction: None,
                    corrected_state: None,
                    fidelity: None,
                });
                continue;
            }
            let correction = &self.corrections[j];
            let normalized = conditional.scale(C64::new(1.0 / mass, 0.0));
            let corrected = correction.mul(&normalized).mul(&correction.adjoint());
            let fidelity = fidelity_against(&reference, &corrected);
            outcomes.push(TeleportOutcome {
                outcome: j,
                probability: mass,
                correction: Some(correction.clone()),
                corrected_state: Some(corrected),
                fidelity: Some(fidelity),
            });
        }
        Ok(outcomes)
    }

    /// Mean fidelity over Haar-random inputs, deterministic in `seed`.
    /// Trial `t` draws from an independent stream `t` of the seeded
    /// generator, and the trial values are combined by pairwise summation,
    /// so the result does not depend on evaluation order.
    pub fn average_fidelity(&self, trials: usize, seed: u64) -> Result<f64> {
        if trials == 0 {
            return Err(QutelError::InvalidArgument("zero trials".into()));
        }
        let mut values = Vec::with_capacity(trials);
        for t in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let input = random_input_with(self.d, &mut rng);
            let outcomes = self.run(&input)?;
            let mut total = 0.0;
            for o in &outcomes {
                if let Some(f) = o.fidelity {
                    total += o.probability * f;
                }
            }
            values.push(total);
        }
        Ok(pairwise_sum(&values) / trials as f64)
    }
}

fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        len => {
            let (a, b) = values.split_at(len / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Run the protocol with best-effort corrections (no faithfulness
/// guarantee): per outcome the correction is fitted to the
/// probability-weighted average conditional map.
pub fn best_effort_simulate(
    resource: &BipartiteMixed,
    input: &InputState,
    basis: &MeasurementBasis,
    d: usize,
) -> Result<Vec<TeleportOutcome>> {
    BestEffortEngine::new(resource, basis, d)?.run(input)
}

/// Monte-Carlo average of [`best_effort_simulate`]'s expected fidelity
/// over Haar-random `d`-level inputs.
pub fn average_fidelity(
    resource: &BipartiteMixed,
    basis: &MeasurementBasis,
    d: usize,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    BestEffortEngine::new(resource, basis, d)?.average_fidelity(trials, seed)
}

/// One receiver-first measurement branch: the receiver's projective
/// outcome, its probability, and the sender-side protocol run on the
/// collapsed (and compressed) resource.
#[derive(Debug, Clone)]
pub struct BobFirstLeaf {
    pub bob_outcome: usize,
    pub probability: f64,
    /// Whether the collapsed leaf resource admitted a faithfulness
    /// certificate (leaf corrections are then exact).
    pub certified: bool,
    pub outcomes: Vec<TeleportOutcome>,
}

/// Receiver-first protocol for resources on `C^d ⊗ C^n`, `n ≥ d`.
///
/// The receiver measures the complete family of mutually orthogonal
/// rank-`d` `projectors` on `C^n`; each outcome collapses the resource,
/// whose receiver side is then compressed onto the projector's range via
/// an orthonormal frame. On every leaf the sender runs the generalized
/// Bell protocol — certified when the collapsed resource passes
/// [`derive_corrections`], best-effort otherwise.
pub fn bob_first_simulate(
    resource: &BipartiteMixed,
    projectors: &[ComplexMatrix],
    input: &InputState,
    d: usize,
) -> Result<Vec<BobFirstLeaf>> {
    let (m, n) = resource.dims();
    if m != d {
        return Err(QutelError::InvalidArgument(format!(
            "receiver-first protocol expects the sender side already at dimension {d}, found {m}"
        )));
    }
    if input.d() != d {
        return Err(QutelError::DimensionMismatch(format!(
            "input has {} levels, protocol teleports {d}",
            input.d()
        )));
    }
    if projectors.is_empty() {
        return Err(QutelError::InvalidArgument("no receiver projectors given".into()));
    }

    // Validate the projective measurement: Hermitian idempotents of rank d,
    // mutually orthogonal, resolving the identity on C^n.
    let mut sum = ComplexMatrix::zeros(n, n);
    for (j, p) in projectors.iter().enumerate() {
        if p.rows() != n || p.cols() != n {
            return Err(QutelError::DimensionMismatch(format!(
                "projector {j} is {}x{}, receiver space is C^{n}",
                p.rows(),
                p.cols()
            )));
        }
        if p.hermiticity_deviation() > tol::STRUCTURAL
            || p.mul(p).distance(p) > tol::STRUCTURAL * (n as f64)
        {
            return Err(QutelError::InvalidArgument(format!(
                "projector {j} is not a Hermitian idempotent"
            )));
        }
        if (p.trace().re - d as f64).abs() > 1e-6 {
            return Err(QutelError::InvalidArgument(format!(
                "projector {j} has rank {:.3}, expected {d}",
                p.trace().re
            )));
        }
        for (k, q) in projectors.iter().enumerate().take(j) {
            if p.mul(q).frobenius_norm() > tol::STRUCTURAL * (n as f64) {
                return Err(QutelError::InvalidArgument(format!(
                    "projectors {k} and {j} overlap"
                )));
            }
        }
        sum = sum.add(p);
    }
    // The family must fit inside the identity and cover all resource mass;
    // a deficit on a zero-mass complement is fine (those outcomes never
    // occur) but missing actual probability is not.
    let deficit = ComplexMatrix::identity(n).sub(&sum);
    let deficit_spectrum = linalg::eig_hermitian(&deficit)?;
    if deficit_spectrum.eigenvalues.iter().any(|&l| l < -1e-7) {
        return Err(QutelError::InvalidArgument(
            "projectors overshoot the identity on the receiver space".into(),
        ));
    }
    let receiver_marginal = resource.marginal(crate::linalg::Side::B);
    let missed = receiver_marginal.mul(&deficit).trace().re;
    if missed > 1e-9 {
        return Err(QutelError::InvalidArgument(format!(
            "projectors miss resource mass {missed:.3e} on the receiver side"
        )));
    }

    let basis = bell_basis(d);
    let mut leaves = Vec::with_capacity(projectors.len());
    for (j, p) in projectors.iter().enumerate() {
        // Orthonormal frame for the projector's range: the eigenvectors
        // with eigenvalue 1.
        let spectral = linalg::eig_hermitian(p)?;
        if spectral.eigenvalues[d - 1] < 0.5 {
            return Err(QutelError::InvalidArgument(format!(
                "projector {j} has fewer than {d} unit eigenvalues"
            )));
        }
        let frame = ComplexMatrix::from_fn(n, d, |r, c| spectral.vectors.get(r, c));
        let compress = tensor_product(&ComplexMatrix::identity(d), &frame.adjoint());
        let collapsed_raw = compress.mul(resource.density()).mul(&compress.adjoint());
        let probability = collapsed_raw.trace().re;
        if probability <= tol::PROB_CUTOFF {
            leaves.push(BobFirstLeaf {
                bob_outcome: j,
                probability: 0.0,
                certified: false,
                outcomes: Vec::new(),
            });
            continue;
        }
        let collapsed = BipartiteMixed::new(
            (d, d),
            collapsed_raw.scale(C64::new(1.0 / probability, 0.0)),
        )?;
        let leaf = match derive_corrections(&collapsed, &basis, d)? {
            CertificationOutcome::Certified(cert) => BobFirstLeaf {
                bob_outcome: j,
                probability,
                certified: true,
                outcomes: simulate(&collapsed, input, &cert)?,
            },
            CertificationOutcome::Refuted(_) => BobFirstLeaf {
                bob_outcome: j,
                probability,
                certified: false,
                outcomes: best_effort_simulate(&collapsed, input, &basis, d)?,
            },
        };
        leaves.push(leaf);
    }
    Ok(leaves)
}

/// Flatten a receiver-first tree into one outcome list with combined
/// probabilities and running indices.
pub fn flatten_leaves(leaves: &[BobFirstLeaf]) -> Vec<TeleportOutcome> {
    let mut flat = Vec::new();
    for leaf in leaves {
        for o in &leaf.outcomes {
            flat.push(TeleportOutcome {
                outcome: flat.len(),
                probability: leaf.probability * o.probability,
                correction: o.correction.clone(),
                corrected_state: o.corrected_state.clone(),
                fidelity: o.fidelity,
            });
        }
    }
    flat
}
