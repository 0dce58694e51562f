//! Bipartite quantum states, Schmidt decompositions and seeded sampling.
//!
//! A pure state of two parties with local dimensions `m` and `n` is stored
//! as a length `m·n` amplitude vector over the composite basis
//! `|i⟩⊗|j⟩ -> i·n + j`; reshaping those amplitudes row-major gives the
//! `m x n` coefficient matrix whose SVD is exactly the Schmidt
//! decomposition. Mixed states are stored as dense density matrices.
//!
//! Every sampler takes an explicit seed and is deterministic per seed.

use num_complex::Complex64 as C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{QutelError, Result};
use crate::linalg::{
    self, outer, partial_trace, qr, svd, ComplexMatrix, Side,
};
use crate::tol;

/// Pure state on `C^m ⊗ C^n`.
#[derive(Debug, Clone)]
pub struct BipartitePure {
    dims: (usize, usize),
    amplitudes: Vec<C64>,
}

impl BipartitePure {
    /// Validating constructor: the amplitude vector must have length `m·n`
    /// and unit norm within [`tol::STATE`].
    pub fn new(dims: (usize, usize), amplitudes: Vec<C64>) -> Result<Self> {
        let (m, n) = dims;
        if m == 0 || n == 0 {
            return Err(QutelError::InvalidState("zero local dimension".into()));
        }
        if amplitudes.len() != m * n {
            return Err(QutelError::DimensionMismatch(format!(
                "{} amplitudes for dims ({m},{n})",
                amplitudes.len()
            )));
        }
        let norm = linalg::vec_norm(&amplitudes);
        if (norm - 1.0).abs() > tol::STATE {
            return Err(QutelError::InvalidState(format!(
                "state norm {norm} deviates from 1 beyond {:.0e}",
                tol::STATE
            )));
        }
        Ok(BipartitePure { dims, amplitudes })
    }

    /// Construct after dividing out the norm (errors only on a zero vector).
    pub fn normalized(dims: (usize, usize), amplitudes: Vec<C64>) -> Result<Self> {
        let norm = linalg::vec_norm(&amplitudes);
        if norm < 1e-12 {
            return Err(QutelError::InvalidState("cannot normalise the zero vector".into()));
        }
        let scaled = amplitudes.iter().map(|a| a / norm).collect();
        Self::new(dims, scaled)
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    /// Reshape the amplitudes into the `m x n` coefficient matrix with
    /// `A[i][j] = ⟨ij|ψ⟩`.
    pub fn coefficient_matrix(&self) -> ComplexMatrix {
        let (m, n) = self.dims;
        ComplexMatrix::from_vec(m, n, self.amplitudes.clone())
            .expect("amplitude length was validated at construction")
    }

    /// Inverse of [`coefficient_matrix`](Self::coefficient_matrix).
    pub fn from_coefficient_matrix(a: &ComplexMatrix) -> Result<Self> {
        Self::new((a.rows(), a.cols()), a.entries().to_vec())
    }

    /// Rank-one density matrix `|ψ⟩⟨ψ|`.
    pub fn projector(&self) -> ComplexMatrix {
        outer(&self.amplitudes, &self.amplitudes)
    }

    /// Schmidt decomposition via the SVD of the coefficient matrix.
    pub fn schmidt(&self) -> SchmidtDecomposition {
        let (m, n) = self.dims;
        let dec = svd(&self.coefficient_matrix());
        let r = m.min(n);
        let alice = (0..r).map(|k| dec.left.column(k)).collect();
        let bob = (0..r).map(|k| dec.right.row(k)).collect();
        SchmidtDecomposition { coefficients: dec.singulars, alice_vectors: alice, bob_vectors: bob }
    }

    /// Swap the two parties: amplitudes `a_ij` become `a_ji` on `C^n ⊗ C^m`.
    pub fn swap_sides(&self) -> BipartitePure {
        let (m, n) = self.dims;
        let mut amplitudes = vec![C64::new(0.0, 0.0); m * n];
        for i in 0..m {
            for j in 0..n {
                amplitudes[j * m + i] = self.amplitudes[i * n + j];
            }
        }
        BipartitePure { dims: (n, m), amplitudes }
    }

    /// Overlap `⟨self|other⟩`.
    pub fn overlap(&self, other: &BipartitePure) -> C64 {
        linalg::inner(&self.amplitudes, &other.amplitudes)
    }
}

/// Schmidt decomposition of a bipartite pure state: coefficients are
/// nonnegative, sorted descending, and `|ψ⟩ = Σ_k c_k |u_k⟩⊗|v_k⟩`.
#[derive(Debug, Clone)]
pub struct SchmidtDecomposition {
    pub coefficients: Vec<f64>,
    pub alice_vectors: Vec<Vec<C64>>,
    pub bob_vectors: Vec<Vec<C64>>,
}

impl SchmidtDecomposition {
    /// Number of coefficients above [`tol::NONZERO_SCHMIDT`].
    pub fn rank(&self) -> usize {
        self.coefficients.iter().filter(|&&c| c > tol::NONZERO_SCHMIDT).count()
    }

    /// Group the significant coefficients into runs of equal value
    /// (within [`tol::SPECTRUM_CLUSTER`]); returns `(value, multiplicity)`
    /// pairs in descending value order.
    pub fn value_groups(&self) -> Vec<(f64, usize)> {
        let mut groups: Vec<(f64, usize)> = Vec::new();
        for &c in self.coefficients.iter().filter(|&&c| c > tol::NONZERO_SCHMIDT) {
            match groups.last_mut() {
                Some((v, count)) if (*v - c).abs() <= tol::SPECTRUM_CLUSTER => {
                    // Track the running mean so long runs stay centred.
                    *v = (*v * *count as f64 + c) / (*count as f64 + 1.0);
                    *count += 1;
                }
                _ => groups.push((c, 1)),
            }
        }
        groups
    }
}

/// `true` when the state has exactly `d` significant Schmidt coefficients,
/// all equal to `1/√d` within `tolerance`.
pub fn is_maximally_entangled(state: &BipartitePure, d: usize, tolerance: f64) -> bool {
    let schmidt = state.schmidt();
    let target = 1.0 / (d as f64).sqrt();
    let significant: Vec<f64> = schmidt
        .coefficients
        .iter()
        .copied()
        .filter(|&c| c > tol::NONZERO_SCHMIDT)
        .collect();
    significant.len() == d && significant.iter().all(|&c| (c - target).abs() <= tolerance)
}

/// Input qudit to be teleported.
#[derive(Debug, Clone)]
pub struct InputState {
    d: usize,
    amplitudes: Vec<C64>,
}

impl InputState {
    pub fn new(d: usize, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != d {
            return Err(QutelError::DimensionMismatch(format!(
                "{} amplitudes for a {d}-level input",
                amplitudes.len()
            )));
        }
        let norm = linalg::vec_norm(&amplitudes);
        if (norm - 1.0).abs() > tol::STATE {
            return Err(QutelError::InvalidState(format!(
                "input norm {norm} deviates from 1 beyond {:.0e}",
                tol::STATE
            )));
        }
        Ok(InputState { d, amplitudes })
    }

    pub fn normalized(d: usize, amplitudes: Vec<C64>) -> Result<Self> {
        let norm = linalg::vec_norm(&amplitudes);
        if norm < 1e-12 {
            return Err(QutelError::InvalidState("cannot normalise the zero vector".into()));
        }
        Self::new(d, amplitudes.iter().map(|a| a / norm).collect())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    /// Embed into `C^n` (`n ≥ d`) on the first `d` computational components.
    pub fn embedded(&self, n: usize) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); n];
        out[..self.d].copy_from_slice(&self.amplitudes);
        out
    }
}

/// Fidelity `|⟨a|b⟩|²` between two unit vectors.
pub fn fidelity_pure(a: &[C64], b: &[C64]) -> f64 {
    linalg::inner(a, b).norm_sqr()
}

/// Distance between unit vectors minimised over a global phase:
/// `min_φ ‖a − e^{iφ} b‖`.
pub fn phase_aligned_distance(a: &[C64], b: &[C64]) -> f64 {
    let na: f64 = a.iter().map(|x| x.norm_sqr()).sum();
    let nb: f64 = b.iter().map(|x| x.norm_sqr()).sum();
    let overlap = linalg::inner(a, b).norm();
    (na + nb - 2.0 * overlap).max(0.0).sqrt()
}

/// Mixed state on `C^m ⊗ C^n` held as a dense density matrix.
#[derive(Debug, Clone)]
pub struct BipartiteMixed {
    dims: (usize, usize),
    density: ComplexMatrix,
}

impl BipartiteMixed {
    /// Validating constructor: Hermitian within [`tol::STATE`], unit trace
    /// within [`tol::STATE`], eigenvalues ≥ −[`tol::EIGENVALUE_CUTOFF`].
    pub fn new(dims: (usize, usize), density: ComplexMatrix) -> Result<Self> {
        let (m, n) = dims;
        let size = m * n;
        if m == 0 || n == 0 {
            return Err(QutelError::InvalidState("zero local dimension".into()));
        }
        if density.rows() != size || density.cols() != size {
            return Err(QutelError::DimensionMismatch(format!(
                "density is {}x{} but dims ({m},{n}) require {size}x{size}",
                density.rows(),
                density.cols()
            )));
        }
        let herm_dev = density.hermiticity_deviation();
        if herm_dev > tol::STATE * 10.0 {
            return Err(QutelError::NotHermitian { deviation: herm_dev, tol: tol::STATE });
        }
        let trace = density.trace();
        if (trace.re - 1.0).abs() > tol::STATE || trace.im.abs() > tol::STATE {
            return Err(QutelError::InvalidState(format!(
                "density trace {trace} deviates from 1"
            )));
        }
        let spectrum = linalg::eig_hermitian(&density)?;
        if let Some(&lowest) = spectrum.eigenvalues.last() {
            if lowest < -tol::EIGENVALUE_CUTOFF {
                return Err(QutelError::InvalidState(format!(
                    "density has negative eigenvalue {lowest:.3e}"
                )));
            }
        }
        Ok(BipartiteMixed { dims, density })
    }

    /// Rank-one density from a pure state.
    pub fn from_pure(state: &BipartitePure) -> Self {
        BipartiteMixed { dims: state.dims(), density: state.projector() }
    }

    /// Density of an ensemble `Σ w_i |ψ_i⟩⟨ψ_i|`; weights must be
    /// nonnegative and sum to 1 within [`tol::STATE`].
    pub fn from_ensemble(members: &[(f64, BipartitePure)]) -> Result<Self> {
        if members.is_empty() {
            return Err(QutelError::InvalidState("empty ensemble".into()));
        }
        let dims = members[0].1.dims();
        let total: f64 = members.iter().map(|(w, _)| w).sum();
        if members.iter().any(|(w, _)| *w < 0.0) || (total - 1.0).abs() > tol::STATE {
            return Err(QutelError::InvalidState(format!(
                "ensemble weights sum to {total}, expected 1"
            )));
        }
        let size = dims.0 * dims.1;
        let mut density = ComplexMatrix::zeros(size, size);
        for (w, state) in members {
            if state.dims() != dims {
                return Err(QutelError::DimensionMismatch(
                    "ensemble members live on different spaces".into(),
                ));
            }
            density = density.add(&state.projector().scale(C64::new(*w, 0.0)));
        }
        BipartiteMixed::new(dims, density)
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn density(&self) -> &ComplexMatrix {
        &self.density
    }

    /// Reduced state of one party (the other party is traced out).
    pub fn marginal(&self, side: Side) -> ComplexMatrix {
        let traced_out = match side {
            Side::A => Side::B,
            Side::B => Side::A,
        };
        partial_trace(&self.density, self.dims, traced_out)
            .expect("density shape was validated at construction")
    }

    /// Spectral ensemble: eigenpairs with weight above
    /// [`tol::EIGENVALUE_CUTOFF`], weights descending.
    pub fn eigen_ensemble(&self) -> Vec<(f64, BipartitePure)> {
        let dec = linalg::eig_hermitian(&self.density)
            .expect("density Hermiticity was validated at construction");
        let mut out = Vec::new();
        for (k, &w) in dec.eigenvalues.iter().enumerate() {
            if w <= tol::EIGENVALUE_CUTOFF {
                continue;
            }
            let mut col = dec.vectors.column(k);
            let norm = linalg::vec_norm(&col);
            for x in col.iter_mut() {
                *x /= norm;
            }
            out.push((
                w,
                BipartitePure { dims: self.dims, amplitudes: col },
            ));
        }
        out
    }

    /// Number of significant eigenvalues.
    pub fn rank(&self) -> usize {
        self.eigen_ensemble().len()
    }

    /// `Some(ψ)` when the state is rank one.
    pub fn as_pure(&self) -> Option<BipartitePure> {
        let ensemble = self.eigen_ensemble();
        if ensemble.len() == 1 && (ensemble[0].0 - 1.0).abs() < 1e-8 {
            Some(ensemble[0].1.clone())
        } else {
            None
        }
    }

    /// Swap the two parties.
    pub fn swap_sides(&self) -> BipartiteMixed {
        let (m, n) = self.dims;
        let size = m * n;
        let mut out = ComplexMatrix::zeros(size, size);
        for i in 0..m {
            for j in 0..n {
                for ip in 0..m {
                    for jp in 0..n {
                        out.set(j * m + i, jp * m + ip, self.density.get(i * n + j, ip * n + jp));
                    }
                }
            }
        }
        BipartiteMixed { dims: (n, m), density: out }
    }
}

// ---------------------------------------------------------------------------
// seeded sampling
// ---------------------------------------------------------------------------

/// Standard complex Gaussian sample.
fn gaussian(rng: &mut impl Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Haar-random unitary: Ginibre sample, QR, then the R-diagonal phase fix
/// that makes the distribution exactly invariant.
pub fn random_unitary_with(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(n, n, |_, _| gaussian(rng));
    let (q, r) = qr(&g);
    let mut u = q;
    for j in 0..n {
        let rjj = r.get(j, j);
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..n {
            let v = u.get(i, j) * phase;
            u.set(i, j, v);
        }
    }
    u
}

/// Seeded wrapper around [`random_unitary_with`].
pub fn random_unitary(n: usize, seed: u64) -> ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_unitary_with(n, &mut rng)
}

/// Haar-random pure state on `C^m ⊗ C^n`.
pub fn random_pure_with(dims: (usize, usize), rng: &mut impl Rng) -> BipartitePure {
    let (m, n) = dims;
    let raw: Vec<C64> = (0..m * n).map(|_| gaussian(rng)).collect();
    BipartitePure::normalized(dims, raw).expect("Gaussian sample is almost surely nonzero")
}

pub fn random_pure(dims: (usize, usize), seed: u64) -> BipartitePure {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_pure_with(dims, &mut rng)
}

/// Haar-random input qudit.
pub fn random_input_with(d: usize, rng: &mut impl Rng) -> InputState {
    let raw: Vec<C64> = (0..d).map(|_| gaussian(rng)).collect();
    InputState::normalized(d, raw).expect("Gaussian sample is almost surely nonzero")
}

pub fn random_input(d: usize, seed: u64) -> InputState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_input_with(d, &mut rng)
}

/// Random maximally entangled pure state on `C^m ⊗ C^n` (`m, n ≥ d`):
/// `(U₁ ⊗ U₂) Σ_k |kk⟩/√d` with independent Haar factors.
pub fn random_max_ent_with(
    d: usize,
    dims: (usize, usize),
    rng: &mut impl Rng,
) -> Result<BipartitePure> {
    let (m, n) = dims;
    if m < d || n < d {
        return Err(QutelError::DimensionMismatch(format!(
            "cannot host a rank-{d} maximally entangled state on ({m},{n})"
        )));
    }
    let u1 = random_unitary_with(m, rng);
    let u2 = random_unitary_with(n, rng);
    let scale = 1.0 / (d as f64).sqrt();
    let mut amplitudes = vec![C64::new(0.0, 0.0); m * n];
    for i in 0..m {
        for j in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..d {
                acc += u1.get(i, k) * u2.get(j, k);
            }
            amplitudes[i * n + j] = acc * scale;
        }
    }
    BipartitePure::new(dims, amplitudes)
}

pub fn random_max_ent(d: usize, dims: (usize, usize), seed: u64) -> Result<BipartitePure> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_max_ent_with(d, dims, &mut rng)
}

/// Random mixture of `k` maximally entangled blocks: orthogonal `d`-dim
/// sender subspaces inside `C^m` (`m ≥ k·d`) paired with `C^d`, each block
/// carrying an independent Haar twist.
///
/// With `distinct_weights` the mixing weights are kept pairwise separated
/// by at least 0.02 so the block structure is identifiable from the
/// spectrum alone.
pub fn random_block_mixed_with(
    d: usize,
    k: usize,
    m: usize,
    distinct_weights: bool,
    rng: &mut impl Rng,
) -> Result<BipartiteMixed> {
    if m < k * d {
        return Err(QutelError::DimensionMismatch(format!(
            "{k} blocks of dimension {d} cannot fit in C^{m}"
        )));
    }
    let weights = loop {
        let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.5..1.5)).collect();
        let total: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|x| x / total).collect();
        if !distinct_weights {
            break w;
        }
        let mut ok = true;
        for i in 0..k {
            for j in (i + 1)..k {
                if (w[i] - w[j]).abs() < 0.02 {
                    ok = false;
                }
            }
        }
        if ok {
            break w;
        }
    };

    // A Haar rotation of C^m sliced into k frames of d columns gives the
    // orthogonal sender subspaces.
    let rotation = random_unitary_with(m, rng);
    let scale = 1.0 / (d as f64).sqrt();
    let mut members = Vec::with_capacity(k);
    for x in 0..k {
        let twist = random_unitary_with(d, rng);
        let mut amplitudes = vec![C64::new(0.0, 0.0); m * d];
        for i in 0..m {
            for j in 0..d {
                let mut acc = C64::new(0.0, 0.0);
                for t in 0..d {
                    acc += rotation.get(i, x * d + t) * twist.get(t, j);
                }
                amplitudes[i * d + j] = acc * scale;
            }
        }
        members.push((weights[x], BipartitePure::new((m, d), amplitudes)?));
    }
    BipartiteMixed::from_ensemble(&members)
}

pub fn random_block_mixed(
    d: usize,
    k: usize,
    m: usize,
    distinct_weights: bool,
    seed: u64,
) -> Result<BipartiteMixed> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_block_mixed_with(d, k, m, distinct_weights, &mut rng)
}

// ---------------------------------------------------------------------------
// canonical fixtures
// ---------------------------------------------------------------------------

/// Reference states used by the demos, documentation and tests.
pub mod fixtures {
    use super::*;

    /// `Σ_k |kk⟩ / √d` on `C^d ⊗ C^d`.
    pub fn maximally_entangled_pure(d: usize) -> BipartitePure {
        let scale = 1.0 / (d as f64).sqrt();
        let mut amplitudes = vec![C64::new(0.0, 0.0); d * d];
        for k in 0..d {
            amplitudes[k * d + k] = C64::new(scale, 0.0);
        }
        BipartitePure::new((d, d), amplitudes).expect("fixture is normalised by construction")
    }

    /// Two-block five-level resource on `C^5 ⊗ C^5`:
    /// `√a (|00⟩+|11⟩)/√2 + √(1−a) (|22⟩+|33⟩+|44⟩)/√3`.
    ///
    /// Requires `0 < a < 1` so both blocks are present.
    pub fn five_level(a: f64) -> Result<BipartitePure> {
        if !(0.0..=1.0).contains(&a) {
            return Err(QutelError::InvalidArgument(format!(
                "block weight a = {a} outside [0, 1]"
            )));
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); 25];
        let first = (a / 2.0).sqrt();
        let second = ((1.0 - a) / 3.0).sqrt();
        for k in 0..2 {
            amplitudes[k * 5 + k] = C64::new(first, 0.0);
        }
        for k in 2..5 {
            amplitudes[k * 5 + k] = C64::new(second, 0.0);
        }
        BipartitePure::new((5, 5), amplitudes)
    }

    /// Rank-two mixture of maximally entangled qubit blocks on `C^4 ⊗ C^2`:
    /// `½|ψ₁⟩⟨ψ₁| + ½|ψ₂⟩⟨ψ₂|` with `ψ₁ = (|00⟩+|11⟩)/√2` and
    /// `ψ₂ = (|20⟩+|31⟩)/√2`.
    pub fn two_block_mixture() -> BipartiteMixed {
        let inv_sqrt2 = 1.0 / 2.0_f64.sqrt();
        let mut first = vec![C64::new(0.0, 0.0); 8];
        first[0] = C64::new(inv_sqrt2, 0.0); // |0⟩|0⟩
        first[3] = C64::new(inv_sqrt2, 0.0); // |1⟩|1⟩
        let mut second = vec![C64::new(0.0, 0.0); 8];
        second[4] = C64::new(inv_sqrt2, 0.0); // |2⟩|0⟩
        second[7] = C64::new(inv_sqrt2, 0.0); // |3⟩|1⟩
        let psi1 = BipartitePure::new((4, 2), first).expect("fixture normalised");
        let psi2 = BipartitePure::new((4, 2), second).expect("fixture normalised");
        BipartiteMixed::from_ensemble(&[(0.5, psi1), (0.5, psi2)])
            .expect("fixture is a valid density")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schmidt_of_diagonal_two_term_state() {
        let state = BipartitePure::new(
            (2, 2),
            vec![
                C64::new(0.7_f64.sqrt(), 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.3_f64.sqrt(), 0.0),
            ],
        )
        .unwrap();
        let schmidt = state.schmidt();
        assert!((schmidt.coefficients[0] - 0.7_f64.sqrt()).abs() < 1e-14);
        assert!((schmidt.coefficients[1] - 0.3_f64.sqrt()).abs() < 1e-14);
        assert!(!is_maximally_entangled(&state, 2, 1e-8));
    }

    #[test]
    fn schmidt_reconstructs_the_state() {
        let state = random_pure((3, 4), 7);
        let schmidt = state.schmidt();
        let (m, n) = state.dims();
        let mut rebuilt = vec![C64::new(0.0, 0.0); m * n];
        for k in 0..schmidt.coefficients.len() {
            for i in 0..m {
                for j in 0..n {
                    rebuilt[i * n + j] += schmidt.coefficients[k]
                        * schmidt.alice_vectors[k][i]
                        * schmidt.bob_vectors[k][j];
                }
            }
        }
        let dist: f64 = rebuilt
            .iter()
            .zip(state.amplitudes())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(dist < 1e-12);
    }

    #[test]
    fn five_level_schmidt_spectrum_at_half() {
        let state = fixtures::five_level(0.5).unwrap();
        let schmidt = state.schmidt();
        let expected = [0.5, 0.5, 1.0 / 6.0_f64.sqrt(), 1.0 / 6.0_f64.sqrt(), 1.0 / 6.0_f64.sqrt()];
        for (c, e) in schmidt.coefficients.iter().zip(expected) {
            assert!((c - e).abs() < 1e-12, "coefficient {c} vs {e}");
        }
        let groups = schmidt.value_groups();
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].1, 2);
        assert_eq!(groups[1].1, 3);
    }

    #[test]
    fn maximal_entanglement_detection() {
        for d in 2..=5 {
            let state = fixtures::maximally_entangled_pure(d);
            assert!(is_maximally_entangled(&state, d, 1e-8));
            let marginal = BipartiteMixed::from_pure(&state).marginal(Side::B);
            let expected = ComplexMatrix::identity(d).scale(C64::new(1.0 / d as f64, 0.0));
            assert!(marginal.distance(&expected) < 1e-12);
        }
    }

    #[test]
    fn random_max_ent_is_maximally_entangled_and_seed_stable() {
        for seed in [1u64, 2, 3] {
            let state = random_max_ent(3, (5, 4), seed).unwrap();
            assert!(is_maximally_entangled(&state, 3, 1e-9));
            let again = random_max_ent(3, (5, 4), seed).unwrap();
            assert_eq!(state.amplitudes(), again.amplitudes());
        }
    }

    #[test]
    fn random_unitary_is_unitary() {
        for seed in [11u64, 12] {
            let u = random_unitary(6, seed);
            assert!(u.is_unitary(1e-10));
        }
    }

    #[test]
    fn two_block_mixture_matches_hand_entries() {
        let rho = fixtures::two_block_mixture();
        assert_eq!(rho.dims(), (4, 2));
        let d = rho.density();
        let quarter = C64::new(0.25, 0.0);
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3), (4, 4), (4, 7), (7, 4), (7, 7)] {
            assert!((d.get(i, j) - quarter).norm() < 1e-15);
        }
        assert!((d.trace().re - 1.0).abs() < 1e-15);
        assert_eq!(rho.rank(), 2);
        // The receiver marginal is maximally mixed, as it must be for any
        // faithful resource.
        let marginal = rho.marginal(Side::B);
        assert!(marginal
            .distance(&ComplexMatrix::identity(2).scale(C64::new(0.5, 0.0)))
            < 1e-12);
    }

    #[test]
    fn block_mixture_sampler_produces_valid_structured_states() {
        let rho = random_block_mixed(2, 3, 7, true, 99).unwrap();
        assert_eq!(rho.dims(), (7, 2));
        let ensemble = rho.eigen_ensemble();
        assert_eq!(ensemble.len(), 3);
        for (w, state) in &ensemble {
            assert!(*w > 0.0);
            assert!(is_maximally_entangled(state, 2, 1e-8), "block state not maximally entangled");
        }
    }

    #[test]
    fn swap_sides_round_trips() {
        let state = random_pure((3, 5), 21);
        let back = state.swap_sides().swap_sides();
        assert_eq!(state.dims(), back.dims());
        let dist = phase_aligned_distance(state.amplitudes(), back.amplitudes());
        assert!(dist < 1e-15);

        let mixed = random_block_mixed(2, 2, 4, false, 5).unwrap();
        let round = mixed.swap_sides().swap_sides();
        assert!(mixed.density().distance(round.density()) < 1e-15);
    }

    #[test]
    fn input_embedding_pads_with_zeros() {
        let input = random_input(3, 4);
        let embedded = input.embedded(7);
        assert_eq!(embedded.len(), 7);
        for (a, b) in input.amplitudes().iter().zip(&embedded) {
            assert_eq!(a, b);
        }
        assert!(embedded[3..].iter().all(|x| x.norm() == 0.0));
    }
}
