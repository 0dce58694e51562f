//! Dense complex matrices and the decompositions the protocol relies on.
//!
//! Everything here is sized for "desk scale" quantum states (local
//! dimensions up to a few dozen), so the implementations favour
//! determinism and robustness over asymptotics: SVD is one-sided Jacobi,
//! the Hermitian eigensolver is two-sided Jacobi, and both finish with a
//! fixed ordering / phase convention so repeated runs are bit-identical.
//!
//! Storage is row-major: entry `(i, j)` of an `m x n` matrix lives at
//! `data[i * n + j]`, matching the composite-index convention
//! `(i, j) -> i * n + j` used for bipartite state vectors.

use num_complex::Complex64 as C64;

use crate::error::{QutelError, Result};
use crate::tol;

/// Which tensor factor of a bipartite object an operation targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    /// Zero matrix of the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    /// Identity matrix of size `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, C64::new(1.0, 0.0));
        }
        m
    }

    /// Build a matrix by evaluating `f(i, j)` at every entry.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    /// Wrap an existing row-major buffer.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(QutelError::DimensionMismatch(format!(
                "buffer of length {} cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    /// Build from real entries (imaginary parts zero), row-major.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(QutelError::DimensionMismatch(format!(
                "{} real entries cannot fill a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Ok(ComplexMatrix {
            rows,
            cols,
            data: entries.iter().map(|&x| C64::new(x, 0.0)).collect(),
        })
    }

    /// Assemble a matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<C64>]) -> Result<Self> {
        let cols = columns.len();
        if cols == 0 {
            return Err(QutelError::InvalidArgument("no columns given".into()));
        }
        let rows = columns[0].len();
        if columns.iter().any(|c| c.len() != rows) {
            return Err(QutelError::DimensionMismatch("ragged column lengths".into()));
        }
        Ok(Self::from_fn(rows, cols, |i, j| columns[j][i]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.cols + j] = v;
    }

    /// Raw row-major entries.
    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    /// Copy of column `j`.
    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Copy of row `i`.
    pub fn row(&self, i: usize) -> Vec<C64> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn set_column(&mut self, j: usize, col: &[C64]) {
        debug_assert_eq!(col.len(), self.rows);
        for i in 0..self.rows {
            self.set(i, j, col[i]);
        }
    }

    /// Matrix product `self * rhs`.
    pub fn mul(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(
            self.cols, rhs.rows,
            "shape mismatch in mul: {}x{} * {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    let v = out.get(i, j) + a * rhs.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// Apply to a column vector.
    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "shape mismatch in mul_vec");
        let mut out = vec![C64::new(0.0, 0.0); self.rows];
        for i in 0..self.rows {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..self.cols {
                acc += self.get(i, k) * v[k];
            }
            out[i] = acc;
        }
        out
    }

    pub fn add(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        ComplexMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        ComplexMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, c: C64) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * c).collect(),
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    /// Transpose without conjugation.
    pub fn transpose(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// Entrywise conjugate.
    pub fn conj(&self) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a.conj()).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        assert!(self.is_square(), "trace of a non-square matrix");
        (0..self.rows).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// Frobenius distance to another matrix of the same shape.
    pub fn distance(&self, rhs: &ComplexMatrix) -> f64 {
        self.sub(rhs).frobenius_norm()
    }

    /// Frobenius deviation from Hermiticity, `‖M − M†‖`.
    pub fn hermiticity_deviation(&self) -> f64 {
        self.distance(&self.adjoint())
    }

    /// True when `‖M†M − I‖_F ≤ tol`.
    pub fn is_unitary(&self, tolerance: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let gram = self.adjoint().mul(self);
        gram.distance(&ComplexMatrix::identity(self.rows)) <= tolerance
    }

    /// True when the columns are orthonormal (`M†M = I_cols`), which for
    /// rectangular `M` means the matrix is an isometry.
    pub fn is_isometry(&self, tolerance: f64) -> bool {
        let gram = self.adjoint().mul(self);
        gram.distance(&ComplexMatrix::identity(self.cols)) <= tolerance
    }
}

/// Kronecker (tensor) product `a ⊗ b`.
///
/// Row/column indices compose as `(i_a, i_b) -> i_a * rows(b) + i_b`, the
/// same convention bipartite amplitude vectors use.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let rows = a.rows() * b.rows();
    let cols = a.cols() * b.cols();
    let mut out = ComplexMatrix::zeros(rows, cols);
    for ia in 0..a.rows() {
        for ja in 0..a.cols() {
            let av = a.get(ia, ja);
            if av.norm_sqr() == 0.0 {
                continue;
            }
            for ib in 0..b.rows() {
                for jb in 0..b.cols() {
                    out.set(ia * b.rows() + ib, ja * b.cols() + jb, av * b.get(ib, jb));
                }
            }
        }
    }
    out
}

/// Trace out one factor of an operator on `C^m ⊗ C^n`.
///
/// `dims = (m, n)`; tracing side A leaves an `n x n` matrix, tracing side B
/// an `m x m` one. Preserves the trace exactly (it is a plain entry sum).
pub fn partial_trace(op: &ComplexMatrix, dims: (usize, usize), side: Side) -> Result<ComplexMatrix> {
    let (m, n) = dims;
    if op.rows() != m * n || op.cols() != m * n {
        return Err(QutelError::DimensionMismatch(format!(
            "operator is {}x{} but dims ({m},{n}) require {}x{}",
            op.rows(),
            op.cols(),
            m * n,
            m * n
        )));
    }
    match side {
        Side::A => {
            let mut out = ComplexMatrix::zeros(n, n);
            for j in 0..n {
                for jp in 0..n {
                    let mut acc = C64::new(0.0, 0.0);
                    for i in 0..m {
                        acc += op.get(i * n + j, i * n + jp);
                    }
                    out.set(j, jp, acc);
                }
            }
            Ok(out)
        }
        Side::B => {
            let mut out = ComplexMatrix::zeros(m, m);
            for i in 0..m {
                for ip in 0..m {
                    let mut acc = C64::new(0.0, 0.0);
                    for j in 0..n {
                        acc += op.get(i * n + j, ip * n + j);
                    }
                    out.set(i, ip, acc);
                }
            }
            Ok(out)
        }
    }
}

// ---------------------------------------------------------------------------
// vector helpers
// ---------------------------------------------------------------------------

/// Inner product `⟨a|b⟩ = Σ conj(a_i) b_i`.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Euclidean norm of a complex vector.
pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Outer product `|a⟩⟨b|`.
pub fn outer(a: &[C64], b: &[C64]) -> ComplexMatrix {
    ComplexMatrix::from_fn(a.len(), b.len(), |i, j| a[i] * b[j].conj())
}

/// Frobenius distance between two matrices minimised over a global phase:
/// `min_θ ‖A − e^{iθ}B‖_F`. The optimal phase is `arg tr(B†A)`; the
/// distance is evaluated entrywise at that phase so that near-identical
/// inputs resolve to machine precision.
pub fn phase_aligned_matrix_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    debug_assert_eq!((a.rows(), a.cols()), (b.rows(), b.cols()));
    let cross = b.adjoint().mul(a).trace();
    if cross.norm() == 0.0 {
        // No preferred phase: every choice gives the same distance.
        return a.distance(b);
    }
    a.distance(&b.scale(cross / cross.norm()))
}

/// Multiply a vector in place by the phase that makes its first entry of
/// modulus above `tol::NONZERO_SCHMIDT` real and positive. Returns the
/// multiplier applied (1 for the zero vector).
pub fn canonicalize_phase(v: &mut [C64]) -> C64 {
    for x in v.iter() {
        if x.norm() > tol::NONZERO_SCHMIDT {
            let phase = x.conj() / x.norm();
            for y in v.iter_mut() {
                *y *= phase;
            }
            return phase;
        }
    }
    C64::new(1.0, 0.0)
}

/// Deterministic total order on complex numbers: by real part, then
/// imaginary part.
fn cmp_c64(a: C64, b: C64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

// ---------------------------------------------------------------------------
// Hermitian eigendecomposition (two-sided Jacobi)
// ---------------------------------------------------------------------------

/// Eigendecomposition of a Hermitian matrix: `M = V diag(λ) V†` with real
/// eigenvalues sorted descending and orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors as the columns of a unitary matrix, ordered to match
    /// `eigenvalues`, each with its first significant entry real positive.
    pub vectors: ComplexMatrix,
}

impl SpectralDecomposition {
    /// Reassemble `V diag(λ) V†`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            for i in 0..n {
                let v = scaled.get(i, j) * self.eigenvalues[j];
                scaled.set(i, j, v);
            }
        }
        scaled.mul(&self.vectors.adjoint())
    }
}

/// Eigendecompose a Hermitian matrix with cyclic complex Jacobi rotations.
///
/// Errors when the input deviates from Hermiticity by more than
/// [`tol::STATE`] in Frobenius norm (relative to scale); smaller deviations
/// are symmetrised away.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<SpectralDecomposition> {
    if !m.is_square() {
        return Err(QutelError::DimensionMismatch(format!(
            "eigendecomposition of a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    let n = m.rows();
    let scale = m.frobenius_norm().max(1.0);
    let deviation = m.hermiticity_deviation();
    if deviation > tol::STATE * scale.max(1.0) * 10.0 {
        return Err(QutelError::NotHermitian { deviation, tol: tol::STATE });
    }

    // Work on the symmetrised copy so the iteration sees an exactly
    // Hermitian operator.
    let mut a = m.add(&m.adjoint()).scale(C64::new(0.5, 0.0));
    let mut v = ComplexMatrix::identity(n);

    let off = |a: &ComplexMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a.get(i, j).norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let stop = 1e-14 * scale;
    for _sweep in 0..60 {
        if off(&a) <= stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let z = a.get(p, q);
                if z.norm() <= stop / (n as f64 * 10.0) {
                    continue;
                }
                let app = a.get(p, p).re;
                let aqq = a.get(q, q).re;
                let phase = z / z.norm();
                // tan of the annihilating rotation, smaller-root branch.
                let tau = (aqq - app) / (2.0 * z.norm());
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = phase * (t * c);
                // A <- G† A G with G = [[c, s], [-conj(s), c]] in the (p,q)
                // plane; V <- V G accumulates eigenvectors.
                for i in 0..n {
                    let aip = a.get(i, p);
                    let aiq = a.get(i, q);
                    a.set(i, p, aip * c - aiq * s.conj());
                    a.set(i, q, aip * s + aiq * c);
                }
                for j in 0..n {
                    let apj = a.get(p, j);
                    let aqj = a.get(q, j);
                    a.set(p, j, apj * c - aqj * s);
                    a.set(q, j, apj * s.conj() + aqj * c);
                }
                for i in 0..n {
                    let vip = v.get(i, p);
                    let viq = v.get(i, q);
                    v.set(i, p, vip * c - viq * s.conj());
                    v.set(i, q, vip * s + viq * c);
                }
            }
        }
    }

    let mut pairs: Vec<(f64, Vec<C64>)> = (0..n)
        .map(|j| {
            let mut col = v.column(j);
            canonicalize_phase(&mut col);
            (a.get(j, j).re, col)
        })
        .collect();
    pairs.sort_by(|(la, va), (lb, vb)| {
        lb.total_cmp(la).then_with(|| {
            for (x, y) in va.iter().zip(vb) {
                let ord = cmp_c64(*x, *y);
                if ord != std::cmp::Ordering::Equal {
                    return ord;
                }
            }
            std::cmp::Ordering::Equal
        })
    });

    let eigenvalues = pairs.iter().map(|(l, _)| *l).collect();
    let columns: Vec<Vec<C64>> = pairs.into_iter().map(|(_, c)| c).collect();
    Ok(SpectralDecomposition { eigenvalues, vectors: ComplexMatrix::from_columns(&columns)? })
}

// ---------------------------------------------------------------------------
// Singular value decomposition (one-sided Jacobi)
// ---------------------------------------------------------------------------

/// SVD `M = left · diag(singulars) · right` with `left` (`m x m`) and
/// `right` (`n x n`) unitary and `singulars` the `min(m, n)` singular
/// values in descending order.
///
/// Note `right` is stored as the factor that multiplies on the right, i.e.
/// it already is "V†" in the usual `U Σ V†` notation.
#[derive(Debug, Clone)]
pub struct SingularDecomposition {
    pub left: ComplexMatrix,
    pub singulars: Vec<f64>,
    pub right: ComplexMatrix,
}

impl SingularDecomposition {
    /// Reassemble `left · diag(singulars) · right`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let m = self.left.rows();
        let n = self.right.cols();
        let r = self.singulars.len();
        let mut mid = ComplexMatrix::zeros(m, n);
        for k in 0..r {
            for i in 0..m {
                let l = self.left.get(i, k);
                if l.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..n {
                    let v = mid.get(i, j) + l * self.singulars[k] * self.right.get(k, j);
                    mid.set(i, j, v);
                }
            }
        }
        mid
    }

    /// The first `k` columns of `left` (the significant left singular
    /// vectors) as an `m x k` matrix.
    pub fn left_block(&self, k: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.left.rows(), k, |i, j| self.left.get(i, j))
    }
}

/// One-sided Jacobi SVD.
///
/// Deterministic: singular values are sorted descending; exact ties are
/// broken by comparing the phase-canonicalised left singular vectors
/// componentwise, and every significant singular vector pair is phased so
/// the left vector's first significant entry is real positive.
pub fn svd(m: &ComplexMatrix) -> SingularDecomposition {
    if m.rows() < m.cols() {
        // Decompose the adjoint and flip the factors back.
        let t = svd(&m.adjoint());
        let mut flipped = SingularDecomposition {
            left: t.right.adjoint(),
            singulars: t.singulars,
            right: t.left.adjoint(),
        };
        normalize_svd(&mut flipped);
        return flipped;
    }

    let rows = m.rows();
    let cols = m.cols();
    let mut b = m.clone();
    let mut v = ComplexMatrix::identity(cols);
    let scale = m.frobenius_norm().max(1.0);

    for _sweep in 0..60 {
        let mut rotated = false;
        for i in 0..cols {
            for j in (i + 1)..cols {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = C64::new(0.0, 0.0);
                for r in 0..rows {
                    let bi = b.get(r, i);
                    let bj = b.get(r, j);
                    alpha += bi.norm_sqr();
                    beta += bj.norm_sqr();
                    gamma += bi.conj() * bj;
                }
                if gamma.norm() <= 1e-15 * (alpha * beta).sqrt().max(1e-30 * scale) {
                    continue;
                }
                rotated = true;
                let phase = gamma / gamma.norm();
                let tau = (beta - alpha) / (2.0 * gamma.norm());
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = phase * (t * c);
                // Columns [i, j] <- [i, j] · [[c, s], [-conj(s), c]].
                for r in 0..rows {
                    let bi = b.get(r, i);
                    let bj = b.get(r, j);
                    b.set(r, i, bi * c - bj * s.conj());
                    b.set(r, j, bi * s + bj * c);
                }
                for r in 0..cols {
                    let vi = v.get(r, i);
                    let vj = v.get(r, j);
                    v.set(r, i, vi * c - vj * s.conj());
                    v.set(r, j, vi * s + vj * c);
                }
            }
        }
        if !rotated {
            break;
        }
    }

    // Column norms are the singular values; normalised columns the left
    // vectors. Exhausted (numerically zero) columns are replaced by a
    // deterministic orthonormal completion below.
    let mut triples: Vec<(f64, Vec<C64>, Vec<C64>)> = (0..cols)
        .map(|j| {
            let col = b.column(j);
            let sigma = vec_norm(&col);
            (sigma, col, v.column(j))
        })
        .collect();
    triples.sort_by(|x, y| y.0.total_cmp(&x.0));

    let sigma_max = triples.first().map(|t| t.0).unwrap_or(0.0);
    let zero_cut = 1e-14 * sigma_max.max(1.0);

    let mut left_cols: Vec<Vec<C64>> = Vec::with_capacity(rows);
    let mut right_rows: Vec<Vec<C64>> = Vec::with_capacity(cols);
    let mut singulars = Vec::with_capacity(cols);
    for (sigma, col, vcol) in &triples {
        singulars.push(*sigma);
        if *sigma > zero_cut {
            left_cols.push(col.iter().map(|x| x / *sigma).collect());
        } else {
            left_cols.push(vec![C64::new(0.0, 0.0); rows]); // placeholder
        }
        right_rows.push(vcol.iter().map(|x| x.conj()).collect());
    }

    // Fill placeholders and the null-space columns of `left` by completing
    // to an orthonormal basis of C^rows.
    let kept: Vec<Vec<C64>> =
        left_cols.iter().filter(|c| vec_norm(c) > 0.5).cloned().collect();
    let completion = orthonormal_completion(&kept, rows);
    let mut completion_iter = completion.into_iter();
    for col in left_cols.iter_mut() {
        if vec_norm(col) <= 0.5 {
            *col = completion_iter
                .next()
                .expect("orthonormal completion exhausted before placeholders were filled");
        }
    }
    for _ in left_cols.len()..rows {
        left_cols.push(
            completion_iter
                .next()
                .expect("orthonormal completion shorter than the left null space"),
        );
    }

    let left = ComplexMatrix::from_columns(&left_cols).expect("left factor assembly");
    let right_mat =
        ComplexMatrix::from_fn(cols, cols, |i, j| right_rows[i][j]);
    let mut out = SingularDecomposition { left, singulars, right: right_mat };
    normalize_svd(&mut out);
    out
}

/// Apply the deterministic phase/ordering convention to an SVD in place:
/// each significant left vector's first significant entry is made real
/// positive (the compensating phase goes into the matching row of
/// `right`), and exactly tied singular values are ordered by comparing the
/// canonicalised left vectors.
fn normalize_svd(dec: &mut SingularDecomposition) {
    let rank_len = dec.singulars.len();
    for k in 0..rank_len {
        let mut col = dec.left.column(k);
        let phase = canonicalize_phase(&mut col);
        dec.left.set_column(k, &col);
        if phase != C64::new(1.0, 0.0) {
            // left_k picked up `phase`; compensate on the matching right
            // row with conj(phase) so σ·u·v† is unchanged.
            let compensate = phase.conj();
            for j in 0..dec.right.cols() {
                let v = dec.right.get(k, j) * compensate;
                dec.right.set(k, j, v);
            }
        }
    }
    for k in rank_len..dec.left.cols() {
        let mut col = dec.left.column(k);
        canonicalize_phase(&mut col);
        dec.left.set_column(k, &col);
    }

    // Stable exact-tie ordering.
    let mut order: Vec<usize> = (0..rank_len).collect();
    let left = dec.left.clone();
    order.sort_by(|&a, &b| {
        dec.singulars[b].total_cmp(&dec.singulars[a]).then_with(|| {
            for i in 0..left.rows() {
                let ord = cmp_c64(left.get(i, a), left.get(i, b));
                if ord != std::cmp::Ordering::Equal {
                    return ord;
                }
            }
            std::cmp::Ordering::Equal
        })
    });
    if order.iter().enumerate().any(|(i, &o)| i != o) {
        let singulars: Vec<f64> = order.iter().map(|&o| dec.singulars[o]).collect();
        let mut left_new = dec.left.clone();
        let mut right_new = dec.right.clone();
        for (pos, &o) in order.iter().enumerate() {
            left_new.set_column(pos, &dec.left.column(o));
            for j in 0..dec.right.cols() {
                right_new.set(pos, j, dec.right.get(o, j));
            }
        }
        dec.singulars = singulars;
        dec.left = left_new;
        dec.right = right_new;
    }
}

/// Check `M†M = c² I` and return `c ≥ 0` when it holds within `tolerance`
/// (Frobenius norm). Returns `None` for matrices that are not proportional
/// to an isometry.
pub fn is_unitary_up_to_scale(m: &ComplexMatrix, tolerance: f64) -> Option<f64> {
    let gram = m.adjoint().mul(m);
    let dim = gram.rows();
    let c2 = gram.trace().re / dim as f64;
    if c2 < 0.0 {
        return None;
    }
    let target = ComplexMatrix::identity(dim).scale(C64::new(c2, 0.0));
    if gram.distance(&target) <= tolerance {
        Some(c2.sqrt())
    } else {
        None
    }
}

/// Unitary polar factor of a full-rank square matrix (`M = W P` with `W`
/// unitary, `P` positive): `W = U V†` from the SVD. Scale-invariant.
///
/// Errors when the smallest singular value is below `1e-10 · max(σ_max, 1)`.
pub fn polar_unitary(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(QutelError::DimensionMismatch(format!(
            "polar factor of a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    let dec = svd(m);
    let smax = dec.singulars.first().copied().unwrap_or(0.0);
    let smin = dec.singulars.last().copied().unwrap_or(0.0);
    if smin <= 1e-10 * smax.max(1.0) {
        return Err(QutelError::RankDeficient(smin));
    }
    Ok(dec.left.mul(&dec.right))
}

// ---------------------------------------------------------------------------
// orthonormal completion / QR
// ---------------------------------------------------------------------------

/// Extend a set of orthonormal vectors in `C^dim` to a full orthonormal
/// basis, returning only the new vectors.
///
/// Deterministic: computational basis vectors are tried in index order and
/// kept whenever their residual against everything accepted so far is
/// significant (two Gram–Schmidt passes for numerical hygiene).
pub fn orthonormal_completion(existing: &[Vec<C64>], dim: usize) -> Vec<Vec<C64>> {
    let mut basis: Vec<Vec<C64>> = existing.to_vec();
    let mut fresh = Vec::new();
    for e in 0..dim {
        if basis.len() >= dim {
            break;
        }
        let mut candidate = vec![C64::new(0.0, 0.0); dim];
        candidate[e] = C64::new(1.0, 0.0);
        for _pass in 0..2 {
            for b in &basis {
                let overlap = inner(b, &candidate);
                for (c, bv) in candidate.iter_mut().zip(b) {
                    *c -= overlap * bv;
                }
            }
        }
        let norm = vec_norm(&candidate);
        if norm > 1e-6 {
            let normalized: Vec<C64> = candidate.iter().map(|x| x / norm).collect();
            basis.push(normalized.clone());
            fresh.push(normalized);
        }
    }
    debug_assert_eq!(existing.len() + fresh.len(), dim, "completion fell short");
    fresh
}

/// Complete an `n x k` isometry (orthonormal columns) to an `n x n` unitary
/// by appending the deterministic orthonormal completion of its columns.
pub fn unitary_completion(frame: &ComplexMatrix) -> ComplexMatrix {
    let n = frame.rows();
    let k = frame.cols();
    let cols: Vec<Vec<C64>> = (0..k).map(|j| frame.column(j)).collect();
    let extra = orthonormal_completion(&cols, n);
    let mut all = cols;
    all.extend(extra);
    ComplexMatrix::from_columns(&all).expect("unitary completion assembly")
}

/// Thin QR factorisation by modified Gram–Schmidt with reorthogonalisation.
/// Intended for well-conditioned inputs such as Ginibre samples.
pub fn qr(m: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let rows = m.rows();
    let cols = m.cols();
    let mut q_cols: Vec<Vec<C64>> = Vec::with_capacity(cols);
    let mut r = ComplexMatrix::zeros(cols, cols);
    for j in 0..cols {
        let mut v = m.column(j);
        for _pass in 0..2 {
            for (i, qi) in q_cols.iter().enumerate() {
                let overlap = inner(qi, &v);
                let prev = r.get(i, j);
                r.set(i, j, prev + overlap);
                for (x, qv) in v.iter_mut().zip(qi) {
                    *x -= overlap * qv;
                }
            }
        }
        let norm = vec_norm(&v);
        r.set(j, j, C64::new(norm, 0.0));
        if norm > 1e-300 {
            q_cols.push(v.iter().map(|x| x / norm).collect());
        } else {
            // Degenerate column: substitute any vector orthogonal to the
            // accepted ones to keep Q well-formed.
            let fill = orthonormal_completion(&q_cols, rows)
                .into_iter()
                .next()
                .expect("qr completion");
            q_cols.push(fill);
        }
    }
    (ComplexMatrix::from_columns(&q_cols).expect("qr Q assembly"), r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    #[test]
    fn tensor_product_of_pauli_x_with_identity() {
        let result = tensor_product(&pauli_x(), &ComplexMatrix::identity(2));
        let expected = ComplexMatrix::from_real(
            4,
            4,
            &[
                0.0, 0.0, 1.0, 0.0, //
                0.0, 0.0, 0.0, 1.0, //
                1.0, 0.0, 0.0, 0.0, //
                0.0, 1.0, 0.0, 0.0,
            ],
        )
        .unwrap();
        assert!(result.distance(&expected) == 0.0);
    }

    #[test]
    fn partial_trace_of_bell_projector_is_maximally_mixed() {
        // |Φ+⟩⟨Φ+| on C^2 ⊗ C^2, traced over side A.
        let amp = [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)];
        let scale = 1.0 / 2.0_f64.sqrt();
        let vec: Vec<C64> = amp.iter().map(|x| x * scale).collect();
        let proj = outer(&vec, &vec);
        let reduced = partial_trace(&proj, (2, 2), Side::A).unwrap();
        let expected = ComplexMatrix::identity(2).scale(c(0.5, 0.0));
        assert!(reduced.distance(&expected) < 1e-12);
        let reduced_b = partial_trace(&proj, (2, 2), Side::B).unwrap();
        assert!(reduced_b.distance(&expected) < 1e-12);
    }

    #[test]
    fn partial_trace_preserves_trace() {
        let mut rng_state = 0x2545F4914F6CDD1Du64;
        let mut next = move || {
            // xorshift; only used to build an arbitrary Hermitian test input
            rng_state ^= rng_state << 13;
            rng_state ^= rng_state >> 7;
            rng_state ^= rng_state << 17;
            (rng_state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let raw = ComplexMatrix::from_fn(12, 12, |_, _| c(next(), next()));
        let herm = raw.add(&raw.adjoint());
        let reduced = partial_trace(&herm, (3, 4), Side::B).unwrap();
        assert!((reduced.trace() - herm.trace()).norm() < 1e-10);
    }

    #[test]
    fn svd_of_diagonal_matrix_is_read_off() {
        let m = ComplexMatrix::from_real(
            2,
            2,
            &[0.7_f64.sqrt(), 0.0, 0.0, 0.3_f64.sqrt()],
        )
        .unwrap();
        let dec = svd(&m);
        assert!((dec.singulars[0] - 0.7_f64.sqrt()).abs() < 1e-14);
        assert!((dec.singulars[1] - 0.3_f64.sqrt()).abs() < 1e-14);
        assert!(dec.left.distance(&ComplexMatrix::identity(2)) < 1e-14);
        assert!(dec.right.distance(&ComplexMatrix::identity(2)) < 1e-14);
    }

    #[test]
    fn svd_reconstructs_rectangular_input() {
        let m = ComplexMatrix::from_fn(5, 3, |i, j| c((i * 3 + j) as f64 * 0.21 - 1.0, (i as f64) * 0.11 - (j as f64) * 0.07));
        let dec = svd(&m);
        assert!(dec.left.is_unitary(1e-12));
        assert!(dec.right.is_unitary(1e-12));
        assert!(dec.reconstruct().distance(&m) < 1e-12);

        let wide = m.adjoint();
        let dec_w = svd(&wide);
        assert!(dec_w.left.is_unitary(1e-12));
        assert!(dec_w.right.is_unitary(1e-12));
        assert!(dec_w.reconstruct().distance(&wide) < 1e-12);
        for (a, b) in dec.singulars.iter().zip(&dec_w.singulars) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn svd_of_zero_matrix_is_well_formed() {
        let dec = svd(&ComplexMatrix::zeros(3, 2));
        assert_eq!(dec.singulars, vec![0.0, 0.0]);
        assert!(dec.left.is_unitary(1e-12));
        assert!(dec.right.is_unitary(1e-12));
    }

    #[test]
    fn svd_left_vectors_are_phase_canonical() {
        // A matrix with a complex first column: the reported left vector
        // must start with a real positive significant entry.
        let m = ComplexMatrix::from_fn(3, 3, |i, j| {
            c(0.3 * (i as f64 + 1.0), -0.2 * (j as f64 + 1.0) * (i as f64 - 1.0))
        });
        let dec = svd(&m);
        for k in 0..3 {
            let col = dec.left.column(k);
            let first = col
                .iter()
                .find(|x| x.norm() > crate::tol::NONZERO_SCHMIDT)
                .copied()
                .unwrap();
            assert!(first.im.abs() < 1e-12 && first.re > 0.0, "column {k} not canonical");
        }
    }

    #[test]
    fn eig_hermitian_diagonalises_pauli_x() {
        let dec = eig_hermitian(&pauli_x()).unwrap();
        assert!((dec.eigenvalues[0] - 1.0).abs() < 1e-13);
        assert!((dec.eigenvalues[1] + 1.0).abs() < 1e-13);
        assert!(dec.reconstruct().distance(&pauli_x()) < 1e-12);
        assert!(dec.vectors.is_unitary(1e-12));
    }

    #[test]
    fn eig_hermitian_rejects_non_hermitian_input() {
        let m = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(eig_hermitian(&m), Err(QutelError::NotHermitian { .. })));
    }

    #[test]
    fn eig_hermitian_reconstructs_random_input() {
        let raw = ComplexMatrix::from_fn(8, 8, |i, j| {
            c(((i * 7 + j * 13) % 11) as f64 / 11.0 - 0.5, ((i * 5 + j * 3) % 7) as f64 / 7.0 - 0.5)
        });
        let herm = raw.add(&raw.adjoint()).scale(c(0.5, 0.0));
        let dec = eig_hermitian(&herm).unwrap();
        assert!(dec.reconstruct().distance(&herm) < 1e-11);
        for w in dec.eigenvalues.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn unitary_up_to_scale_detection() {
        let half_identity = ComplexMatrix::identity(2).scale(c(0.5, 0.0));
        let found = is_unitary_up_to_scale(&half_identity, 1e-9);
        assert!((found.unwrap() - 0.5).abs() < 1e-12);

        let skewed = ComplexMatrix::from_real(
            2,
            2,
            &[0.7_f64.sqrt(), 0.0, 0.0, 0.3_f64.sqrt()],
        )
        .unwrap();
        assert!(is_unitary_up_to_scale(&skewed, 1e-9).is_none());
    }

    #[test]
    fn polar_unitary_fixes_unitary_input_and_strips_scale() {
        let phase = c(0.0, 1.0);
        let u = ComplexMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => phase,
            (1, 0) => -phase.conj(),
            _ => c(0.0, 0.0),
        });
        assert!(u.is_unitary(1e-12));
        let w = polar_unitary(&u).unwrap();
        assert!(w.distance(&u) < 1e-12);
        let w2 = polar_unitary(&u.scale(c(0.3, 0.0))).unwrap();
        assert!(w2.distance(&u) < 1e-12);
    }

    #[test]
    fn polar_unitary_rejects_rank_deficient_input() {
        let m = ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(polar_unitary(&m), Err(QutelError::RankDeficient(_))));
    }

    #[test]
    fn completion_produces_full_orthonormal_basis() {
        let inv_sqrt2 = 1.0 / 2.0_f64.sqrt();
        let existing = vec![vec![c(inv_sqrt2, 0.0), c(0.0, inv_sqrt2), c(0.0, 0.0)]];
        let fresh = orthonormal_completion(&existing, 3);
        assert_eq!(fresh.len(), 2);
        let mut all = existing;
        all.extend(fresh);
        for (i, a) in all.iter().enumerate() {
            for (j, b) in all.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((inner(a, b).norm() - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn qr_returns_unitary_q_for_square_input() {
        let m = ComplexMatrix::from_fn(4, 4, |i, j| {
            c(((i + 2 * j) % 5) as f64 - 2.0, ((3 * i + j) % 7) as f64 - 3.0)
        });
        let (q, r) = qr(&m);
        assert!(q.is_unitary(1e-12));
        assert!(q.mul(&r).distance(&m) < 1e-10);
        for i in 0..4 {
            for j in 0..i {
                assert!(r.get(i, j).norm() < 1e-12);
            }
        }
    }
}
