//! Dense complex linear algebra used by every dilation step.
//!
//! The kernel is deliberately small: a row-major complex matrix type, a
//! cyclic Jacobi eigensolver for Hermitian matrices, a Hessenberg + shifted-QR
//! eigenvalue iteration for general (non-normal) matrices, and the Gram-matrix
//! quotient that realizes semi-inner-product spaces as coordinate spaces.
//! Dimensions stay at desk scale, so dense storage and O(n³) algorithms are
//! the simple, testable choice.
//!
//! Residual certificates throughout the crate are measured in the Frobenius
//! norm, which dominates the operator norm, so every certificate is
//! conservative.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex;

use crate::{Error, Result};

/// Double-precision complex scalar.
pub type C64 = Complex<f64>;

/// Shorthand for a real complex scalar.
#[inline]
pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Shorthand for a general complex scalar.
#[inline]
pub fn ci(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Dense row-major complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl core::fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows.min(8) {
            write!(f, "  ")?;
            for col in 0..self.cols.min(8) {
                let z = self[(r, col)];
                write!(f, "{:+.3e}{:+.3e}i ", z.re, z.im)?;
            }
            writeln!(f, "{}", if self.cols > 8 { "…" } else { "" })?;
        }
        if self.rows > 8 {
            writeln!(f, "  …")?;
        }
        write!(f, "]")
    }
}

impl CMatrix {
    /// Zero matrix of the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    /// Identity matrix.
    pub fn identity(n: usize) -> Self {
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = c(1.0);
        }
        m
    }

    /// Builds a matrix entry by entry.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = CMatrix::zeros(rows, cols);
        for r in 0..rows {
            for col in 0..cols {
                m[(r, col)] = f(r, col);
            }
        }
        m
    }

    /// Builds from nested row slices; panics on ragged input.
    pub fn from_rows(rows: &[&[C64]]) -> Self {
        let r = rows.len();
        let cnum = if r == 0 { 0 } else { rows[0].len() };
        let mut m = CMatrix::zeros(r, cnum);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), cnum, "ragged rows");
            for (j, z) in row.iter().enumerate() {
                m[(i, j)] = *z;
            }
        }
        m
    }

    /// Real diagonal matrix.
    pub fn diag(entries: &[f64]) -> Self {
        let mut m = CMatrix::zeros(entries.len(), entries.len());
        for (i, &x) in entries.iter().enumerate() {
            m[(i, i)] = c(x);
        }
        m
    }

    /// Column vector from a slice.
    pub fn col_vec(v: &[C64]) -> Self {
        let mut m = CMatrix::zeros(v.len(), 1);
        for (i, z) in v.iter().enumerate() {
            m[(i, 0)] = *z;
        }
        m
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

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    /// True when every entry is finite.
    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for col in 0..self.cols {
                m[(col, r)] = self[(r, col)].conj();
            }
        }
        m
    }

    /// Entrywise complex conjugate (no transpose).
    pub fn conj(&self) -> CMatrix {
        let mut m = self.clone();
        for z in &mut m.data {
            *z = z.conj();
        }
        m
    }

    pub fn transpose(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for col in 0..self.cols {
                m[(col, r)] = self[(r, col)];
            }
        }
        m
    }

    pub fn scale(&self, s: C64) -> CMatrix {
        let mut m = self.clone();
        for z in &mut m.data {
            *z *= s;
        }
        m
    }

    /// Matrix product; inner loop runs over a transposed copy of `rhs` so
    /// both factors are traversed contiguously.
    pub fn mul(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "inner dimension mismatch");
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        let rt = rhs.transpose();
        for r in 0..self.rows {
            let a_row = &self.data[r * self.cols..(r + 1) * self.cols];
            for col in 0..rhs.cols {
                let b_col = &rt.data[col * rt.cols..(col + 1) * rt.cols];
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..self.cols {
                    acc += a_row[k] * b_col[k];
                }
                out[(r, col)] = acc;
            }
        }
        out
    }

    /// Matrix–vector product.
    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "inner dimension mismatch");
        let mut out = vec![C64::new(0.0, 0.0); self.rows];
        for r in 0..self.rows {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..self.cols {
                acc += row[k] * v[k];
            }
            out[r] = acc;
        }
        out
    }

    pub fn add(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let mut m = self.clone();
        for (z, w) in m.data.iter_mut().zip(&rhs.data) {
            *z += w;
        }
        m
    }

    pub fn sub(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let mut m = self.clone();
        for (z, w) in m.data.iter_mut().zip(&rhs.data) {
            *z -= w;
        }
        m
    }

    pub fn trace(&self) -> C64 {
        assert!(self.is_square());
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// Frobenius norm.
    pub fn fro_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|z| z.norm_sqr()).sum())
    }

    /// Frobenius distance `‖self − rhs‖`.
    pub fn dist(&self, rhs: &CMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        libm::sqrt(
            self.data
                .iter()
                .zip(&rhs.data)
                .map(|(z, w)| (z - w).norm_sqr())
                .sum(),
        )
    }

    /// Hermitian part `(M + M*)/2`.
    pub fn hermitize(&self) -> CMatrix {
        assert!(self.is_square());
        let adj = self.adjoint();
        self.add(&adj).scale(c(0.5))
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.rows * rhs.rows, self.cols * rhs.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for k in 0..rhs.rows {
                    for l in 0..rhs.cols {
                        out[(i * rhs.rows + k, j * rhs.cols + l)] = a * rhs[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// Flattens to a row-major coordinate vector.
    pub fn to_vec(&self) -> Vec<C64> {
        self.data.clone()
    }

    /// Rebuilds a matrix from a row-major coordinate vector.
    pub fn from_coords(rows: usize, cols: usize, v: &[C64]) -> Self {
        assert_eq!(v.len(), rows * cols);
        CMatrix {
            rows,
            cols,
            data: v.to_vec(),
        }
    }

    /// Extracts column `j` as a vector.
    pub fn col(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Assembles a matrix from column vectors.
    pub fn from_cols(cols: &[Vec<C64>]) -> Self {
        let n = cols.len();
        let m = if n == 0 { 0 } else { cols[0].len() };
        let mut out = CMatrix::zeros(m, n);
        for (j, colv) in cols.iter().enumerate() {
            assert_eq!(colv.len(), m, "ragged columns");
            for i in 0..m {
                out[(i, j)] = colv[i];
            }
        }
        out
    }
}

impl core::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl core::ops::IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Standard inner product `⟨u, v⟩ = Σ conj(u_i) v_i`.
pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    assert_eq!(u.len(), v.len());
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// Euclidean norm of a vector.
pub fn vec_norm(v: &[C64]) -> f64 {
    libm::sqrt(v.iter().map(|z| z.norm_sqr()).sum())
}

/// Hermitian eigendecomposition `M = Q Λ Q*`.
#[derive(Debug, Clone)]
pub struct HermEig {
    /// Eigenvalues in ascending order.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, ordered to match.
    pub eigenvectors: CMatrix,
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// The input must satisfy `‖M − M*‖ ≤ tol·‖M‖`; the solve then runs on the
/// explicitly Hermitized `(M + M*)/2`, so asymmetry accumulated from repeated
/// products never reaches the rotation loop. Eigenvalues come back ascending
/// with a deterministic phase fix on each eigenvector (largest-modulus entry
/// made real positive), and the reconstruction `‖M − QΛQ*‖ ≤ tol·‖M‖` is
/// certified before returning.
pub fn herm_eig(m: &CMatrix, tol: f64) -> Result<HermEig> {
    if !m.is_square() {
        return Err(Error::ShapeMismatch {
            expected: (m.rows, m.rows),
            got: (m.rows, m.cols),
        });
    }
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    let n = m.rows;
    let scale = m.fro_norm();
    let asym = m.dist(&m.adjoint());
    if asym > tol * scale {
        return Err(Error::NotHermitian {
            residual: asym,
            scale,
        });
    }
    let mut a = m.hermitize();
    let mut q = CMatrix::identity(n);
    if n > 1 {
        // Convergence target: off-diagonal mass down to roundoff level.
        let target = scale * 1e-14 * libm::sqrt(n as f64) + f64::MIN_POSITIVE;
        let mut converged = false;
        for _sweep in 0..JACOBI_MAX_SWEEPS {
            let mut off = 0.0;
            for r in 0..n {
                for col in 0..n {
                    if r != col {
                        off += a[(r, col)].norm_sqr();
                    }
                }
            }
            if libm::sqrt(off) <= target {
                converged = true;
                break;
            }
            for p in 0..n - 1 {
                for qq in p + 1..n {
                    jacobi_rotate(&mut a, &mut q, p, qq);
                }
            }
        }
        if !converged {
            // One last check: quadratic convergence may land exactly on the
            // final sweep.
            let mut off = 0.0;
            for r in 0..n {
                for col in 0..n {
                    if r != col {
                        off += a[(r, col)].norm_sqr();
                    }
                }
            }
            if libm::sqrt(off) > scale * 1e-10 {
                return Err(Error::NoConvergence("Jacobi eigensolver"));
            }
        }
    }

    // Sort ascending, stably, and fix eigenvector phases.
    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut vecs = CMatrix::zeros(n, n);
    for (new_j, &old_j) in order.iter().enumerate() {
        let mut colv = q.col(old_j);
        phase_fix(&mut colv);
        for i in 0..n {
            vecs[(i, new_j)] = colv[i];
        }
    }

    let eig = HermEig {
        eigenvalues,
        eigenvectors: vecs,
    };
    let recon = eig.reconstruct();
    let resid = recon.dist(&m.hermitize());
    if resid > tol * scale + 1e-13 {
        return Err(Error::NoConvergence("Jacobi reconstruction"));
    }
    Ok(eig)
}

/// Multiplies a vector by the phase making its largest-modulus entry real
/// positive; the first maximal entry wins ties, so the fix is deterministic.
fn phase_fix(v: &mut [C64]) {
    let mut best = 0usize;
    let mut best_mod = 0.0f64;
    for (i, z) in v.iter().enumerate() {
        let m = z.norm();
        if m > best_mod * (1.0 + 1e-12) {
            best = i;
            best_mod = m;
        }
    }
    if best_mod == 0.0 {
        return;
    }
    let phase = v[best] / c(best_mod);
    let corr = phase.conj();
    for z in v.iter_mut() {
        *z *= corr;
    }
    v[best] = c(v[best].re.abs().max(0.0));
}

/// One two-sided Jacobi rotation annihilating `a[(p,q)]`.
fn jacobi_rotate(a: &mut CMatrix, q: &mut CMatrix, p: usize, qq: usize) {
    let apq = a[(p, qq)];
    let beta = apq.norm();
    if beta == 0.0 {
        return;
    }
    let phase = apq / c(beta); // e^{iθ}
    let app = a[(p, p)].re;
    let aqq = a[(qq, qq)].re;
    let tau = (aqq - app) / (2.0 * beta);
    // Smaller-magnitude root of t² + 2τt − 1 = 0.
    let t = if tau >= 0.0 {
        1.0 / (tau + libm::sqrt(1.0 + tau * tau))
    } else {
        -1.0 / (-tau + libm::sqrt(1.0 + tau * tau))
    };
    let cc = 1.0 / libm::sqrt(1.0 + t * t);
    let ss = t * cc;
    // G = [[c, s], [−s·conj(phase), c·conj(phase)]] so that G*·A·G kills (p,q).
    let g11 = c(cc);
    let g12 = c(ss);
    let g21 = -phase.conj() * ss;
    let g22 = phase.conj() * cc;
    let n = a.rows();
    // Right multiplication: columns p, qq.
    for r in 0..n {
        let x = a[(r, p)];
        let y = a[(r, qq)];
        a[(r, p)] = x * g11 + y * g21;
        a[(r, qq)] = x * g12 + y * g22;
    }
    // Left multiplication by G*: rows p, qq.
    for col in 0..n {
        let x = a[(p, col)];
        let y = a[(qq, col)];
        a[(p, col)] = g11.conj() * x + g21.conj() * y;
        a[(qq, col)] = g12.conj() * x + g22.conj() * y;
    }
    // Accumulate the eigenvector matrix.
    for r in 0..n {
        let x = q[(r, p)];
        let y = q[(r, qq)];
        q[(r, p)] = x * g11 + y * g21;
        q[(r, qq)] = x * g12 + y * g22;
    }
    // Clean roundoff: the pivot is zero and the diagonal real by construction.
    a[(p, qq)] = C64::new(0.0, 0.0);
    a[(qq, p)] = C64::new(0.0, 0.0);
    let dp = a[(p, p)].re;
    let dq = a[(qq, qq)].re;
    a[(p, p)] = c(dp);
    a[(qq, qq)] = c(dq);
}

impl HermEig {
    /// `Q Λ Q*`.
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.eigenvalues.len();
        let q = &self.eigenvectors;
        let mut scaled = q.clone();
        for j in 0..n {
            for i in 0..n {
                scaled[(i, j)] *= c(self.eigenvalues[j]);
            }
        }
        scaled.mul(&q.adjoint())
    }

    /// `Q f(Λ) Q*` for a scalar function applied to the eigenvalues.
    pub fn apply_fn(&self, mut f: impl FnMut(f64) -> C64) -> CMatrix {
        let n = self.eigenvalues.len();
        let q = &self.eigenvectors;
        let mut scaled = q.clone();
        for j in 0..n {
            let fj = f(self.eigenvalues[j]);
            for i in 0..n {
                scaled[(i, j)] *= fj;
            }
        }
        scaled.mul(&q.adjoint())
    }
}

/// Coordinates for the quotient of an ambient space by the null space of a
/// positive semidefinite Gram matrix.
///
/// `coisometry` (written `C` below) is `rank × ambient` with `C G C* = I`;
/// `quotient_map = C·G` sends an ambient vector to the coordinates of its
/// class, isometrically for the `G`-seminorm, and `section = coisometry*`
/// is a right inverse of `quotient_map` picking the representative orthogonal
/// to the null space.
#[derive(Debug, Clone)]
pub struct QuotientBasis {
    pub ambient_dim: usize,
    pub rank: usize,
    pub coisometry: CMatrix,
    pub quotient_map: CMatrix,
    pub tol_used: f64,
}

impl QuotientBasis {
    /// Right inverse of `quotient_map` (and adjoint of `coisometry`).
    pub fn section(&self) -> CMatrix {
        self.coisometry.adjoint()
    }

    /// Quotient coordinates of the class of an ambient vector.
    pub fn project(&self, v: &[C64]) -> Vec<C64> {
        self.quotient_map.mul_vec(v)
    }

    /// Compression `quotient_map · A · section` of an ambient operator that
    /// preserves the Gram null space.
    pub fn compress(&self, a: &CMatrix) -> CMatrix {
        self.quotient_map.mul(a).mul(&self.section())
    }
}

/// Quotient construction for a PSD Gram matrix.
///
/// Eigenvalues above `tol·λ_max` are kept; an eigenvalue below `−tol·λ_max`
/// is a genuine positivity failure and is rejected. Vectors of `G`-seminorm
/// at most `tol` map to (numerically) zero.
pub fn gram_quotient(g: &CMatrix, tol: f64) -> Result<QuotientBasis> {
    let eig = herm_eig(g, tol)?;
    let n = g.rows();
    let lam_max = eig.eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
    if let Some(&min) = eig.eigenvalues.first() {
        if min < -tol * lam_max.max(1e-300) {
            return Err(Error::NotPsd {
                min_eigenvalue: min,
                scale: lam_max,
            });
        }
    }
    let cut = tol * lam_max;
    let kept: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > cut).collect();
    let rank = kept.len();
    // coisometry = Λ^{-1/2} Q₁*, quotient_map = Λ^{1/2} Q₁*.
    let mut coiso = CMatrix::zeros(rank, n);
    let mut qmap = CMatrix::zeros(rank, n);
    for (row, &j) in kept.iter().enumerate() {
        let lam = eig.eigenvalues[j];
        let s = libm::sqrt(lam);
        for col in 0..n {
            let qv = eig.eigenvectors[(col, j)].conj();
            coiso[(row, col)] = qv / c(s);
            qmap[(row, col)] = qv * c(s);
        }
    }
    Ok(QuotientBasis {
        ambient_dim: n,
        rank,
        coisometry: coiso,
        quotient_map: qmap,
        tol_used: tol,
    })
}

/// Largest singular value, computed from the spectrum of `M*M`.
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.rows() == 0 || m.cols() == 0 {
        return 0.0;
    }
    let mtm = m.adjoint().mul(m).hermitize();
    match herm_eig(&mtm, 1e-8) {
        Ok(eig) => libm::sqrt(eig.eigenvalues.last().copied().unwrap_or(0.0).max(0.0)),
        // M*M is Hermitian by construction; only non-finite input lands here.
        Err(_) => f64::NAN,
    }
}

/// Singular values in ascending order, `min(rows, cols)` of them, computed
/// through the smaller of the two Gram matrices.
pub fn singular_values(m: &CMatrix) -> Result<Vec<f64>> {
    let gram = if m.rows() <= m.cols() {
        m.mul(&m.adjoint()).hermitize()
    } else {
        m.adjoint().mul(m).hermitize()
    };
    let eig = herm_eig(&gram, 1e-8)?;
    Ok(eig
        .eigenvalues
        .iter()
        .map(|&l| libm::sqrt(l.max(0.0)))
        .collect())
}

/// Singular-value decisions go through the Hermitian spectrum of `M*M`,
/// which floors the resolvable relative singular value near `sqrt(eps)`;
/// requested tolerances below that are clamped. The systems whose ranks and
/// kernels this crate decides are exact in exact arithmetic with O(1)
/// spectral gaps, so the clamp is far from every genuine singular value.
fn effective_sv_tol(tol: f64) -> f64 {
    tol.max(1e-6)
}

/// Rank with singular values above `tol·σ_max` (tolerance clamped to the
/// singular-value floor).
pub fn rank_with_tol(m: &CMatrix, tol: f64) -> Result<usize> {
    let sv = singular_values(m)?;
    let smax = sv.last().copied().unwrap_or(0.0);
    let cut = effective_sv_tol(tol) * smax;
    Ok(sv.iter().filter(|&&s| s > cut).count())
}

/// Orthonormal basis of the kernel of `m`, as columns.
///
/// Kernel vectors are the eigenvectors of `m*m` with singular value at most
/// `tol·σ_max` (tolerance clamped to the singular-value floor).
pub fn kernel_basis(m: &CMatrix, tol: f64) -> Result<CMatrix> {
    kernel_basis_scaled(m, tol, 0.0)
}

/// Kernel basis with an external scale: singular values are compared against
/// `tol·max(σ_max, scale)`. Use when the constraint matrix can be
/// numerically zero as a whole (every column is then kernel), which a purely
/// relative cut misreads as full rank of noise.
pub fn kernel_basis_scaled(m: &CMatrix, tol: f64, scale: f64) -> Result<CMatrix> {
    let mtm = m.adjoint().mul(m).hermitize();
    let eig = herm_eig(&mtm, 1e-8)?;
    let lmax = eig.eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
    let t = effective_sv_tol(tol) * libm::sqrt(lmax).max(scale);
    let cut = t * t;
    let n = m.cols();
    let kept: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] <= cut).collect();
    let mut out = CMatrix::zeros(n, kept.len());
    for (j, &k) in kept.iter().enumerate() {
        for i in 0..n {
            out[(i, j)] = eig.eigenvectors[(i, k)];
        }
    }
    Ok(out)
}

/// Minimum-norm least-squares solution of `A x = b` for every column of `b`,
/// via the pseudoinverse `(A*A)⁺ A*` (rank cut clamped to the singular-value
/// floor).
pub fn least_squares(a: &CMatrix, b: &CMatrix, tol: f64) -> Result<CMatrix> {
    assert_eq!(a.rows(), b.rows(), "row mismatch in least squares");
    let ata = a.adjoint().mul(a).hermitize();
    let eig = herm_eig(&ata, 1e-8)?;
    let lmax = eig.eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
    let t = effective_sv_tol(tol);
    let cut = t * t * lmax;
    let pinv = eig.apply_fn(|l| if l > cut { c(1.0 / l) } else { c(0.0) });
    Ok(pinv.mul(&a.adjoint()).mul(b))
}

/// Hermitian inverse via eigendecomposition; eigenvalues below `tol·λ_max`
/// in magnitude are rejected as singular.
pub fn herm_inverse(m: &CMatrix, tol: f64) -> Result<CMatrix> {
    let eig = herm_eig(m, tol.max(1e-12))?;
    let lmax = eig
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, &l| acc.max(l.abs()));
    if eig.eigenvalues.iter().any(|&l| l.abs() <= tol * lmax) {
        return Err(Error::PreconditionFailed(
            "singular Hermitian matrix".into(),
        ));
    }
    Ok(eig.apply_fn(|l| c(1.0 / l)))
}

const QR_MAX_ITERS_PER_EIGENVALUE: usize = 120;

/// Eigenvalues of a general complex matrix, by Hessenberg reduction followed
/// by the single-shift QR iteration with Wilkinson shifts.
///
/// Returns the spectrum sorted by real part then imaginary part. Used for
/// non-normal transfer superoperators where the Hermitian solver does not
/// apply; accuracy is roundoff-level for the desk-scale inputs this crate
/// deals with.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<C64>> {
    if !m.is_square() {
        return Err(Error::ShapeMismatch {
            expected: (m.rows, m.rows),
            got: (m.rows, m.cols),
        });
    }
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    let n = m.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h = hessenberg(m);
    let scale = h.fro_norm().max(f64::MIN_POSITIVE);
    let eps = 1e-15;
    let mut out: Vec<C64> = Vec::with_capacity(n);
    let mut hi = n - 1;
    let mut iters = 0usize;
    let budget = QR_MAX_ITERS_PER_EIGENVALUE * n;
    loop {
        // Deflate converged trailing eigenvalues.
        while hi > 0 {
            let sub = h[(hi, hi - 1)].norm();
            let local = h[(hi, hi)].norm() + h[(hi - 1, hi - 1)].norm();
            if sub <= eps * (local + scale * 1e-3) {
                out.push(h[(hi, hi)]);
                hi -= 1;
            } else {
                break;
            }
        }
        if hi == 0 {
            out.push(h[(0, 0)]);
            break;
        }
        // Active window [lo, hi].
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let local = h[(lo, lo)].norm() + h[(lo - 1, lo - 1)].norm();
            if sub <= eps * (local + scale * 1e-3) {
                h[(lo, lo - 1)] = C64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            continue;
        }
        if hi - lo == 1 {
            // Closed-form 2×2 eigenvalues.
            let (l1, l2) = eig2(h[(lo, lo)], h[(lo, hi)], h[(hi, lo)], h[(hi, hi)]);
            out.push(l1);
            out.push(l2);
            if lo == 0 {
                break;
            }
            hi = lo - 1;
            continue;
        }
        iters += 1;
        if iters > budget {
            return Err(Error::NoConvergence("QR eigenvalue iteration"));
        }
        // Wilkinson shift from the trailing 2×2 block; occasionally an
        // exceptional shift to break symmetry cycles.
        let shift = if iters.is_multiple_of(17) {
            h[(hi, hi)] + c(h[(hi, hi - 1)].norm() * 0.75)
        } else {
            let (l1, l2) = eig2(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            );
            if (l1 - h[(hi, hi)]).norm() <= (l2 - h[(hi, hi)]).norm() {
                l1
            } else {
                l2
            }
        };
        qr_step(&mut h, lo, hi, shift);
    }
    out.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
    Ok(out)
}

/// Eigenvalues of `[[a, b], [c, d]]`.
fn eig2(a: C64, b: C64, cc: C64, d: C64) -> (C64, C64) {
    let tr = a + d;
    let det = a * d - b * cc;
    let disc = (tr * tr - c(4.0) * det).sqrt();
    let l1 = (tr + disc) * c(0.5);
    let l2 = (tr - disc) * c(0.5);
    (l1, l2)
}

/// Reduction to upper Hessenberg form by Householder reflections.
fn hessenberg(m: &CMatrix) -> CMatrix {
    let n = m.rows();
    let mut h = m.clone();
    for k in 0..n.saturating_sub(2) {
        // Householder vector for column k below the subdiagonal.
        let mut x: Vec<C64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let xnorm = vec_norm(&x);
        if xnorm == 0.0 {
            continue;
        }
        let x0 = x[0];
        let alpha = if x0.norm() == 0.0 {
            c(-xnorm)
        } else {
            -(x0 / c(x0.norm())) * xnorm
        };
        x[0] -= alpha;
        let vnorm = vec_norm(&x);
        if vnorm < 1e-300 {
            continue;
        }
        for z in &mut x {
            *z /= c(vnorm);
        }
        // H ← P H P with P = I − 2vv*.
        // Left: rows k+1.. of all columns.
        for col in 0..n {
            let mut dot = C64::new(0.0, 0.0);
            for (i, v) in x.iter().enumerate() {
                dot += v.conj() * h[(k + 1 + i, col)];
            }
            let dot2 = dot * c(2.0);
            for (i, v) in x.iter().enumerate() {
                let val = h[(k + 1 + i, col)] - v * dot2;
                h[(k + 1 + i, col)] = val;
            }
        }
        // Right: columns k+1.. of all rows.
        for row in 0..n {
            let mut dot = C64::new(0.0, 0.0);
            for (j, v) in x.iter().enumerate() {
                dot += h[(row, k + 1 + j)] * *v;
            }
            let dot2 = dot * c(2.0);
            for (j, v) in x.iter().enumerate() {
                let val = h[(row, k + 1 + j)] - dot2 * v.conj();
                h[(row, k + 1 + j)] = val;
            }
        }
        // Zero out the annihilated entries exactly.
        for i in k + 2..n {
            h[(i, k)] = C64::new(0.0, 0.0);
        }
    }
    h
}

/// One explicit shifted QR step `H ← R Q + μ` on the window `[lo, hi]`,
/// using Givens rotations on the Hessenberg structure.
fn qr_step(h: &mut CMatrix, lo: usize, hi: usize, shift: C64) {
    let n = h.rows();
    for i in lo..=hi {
        h[(i, i)] -= shift;
    }
    // QR by Givens: rotations (i, i+1) zeroing the subdiagonal.
    let mut rots: Vec<(C64, C64)> = Vec::with_capacity(hi - lo);
    for i in lo..hi {
        let a = h[(i, i)];
        let b = h[(i + 1, i)];
        let r = libm::sqrt(a.norm_sqr() + b.norm_sqr());
        let (cs, sn) = if r < 1e-300 {
            (c(1.0), C64::new(0.0, 0.0))
        } else {
            (a / c(r), b / c(r))
        };
        rots.push((cs, sn));
        // Apply G* from the left to rows i, i+1 (columns i..n within reach).
        for col in i..n {
            let x = h[(i, col)];
            let y = h[(i + 1, col)];
            h[(i, col)] = cs.conj() * x + sn.conj() * y;
            h[(i + 1, col)] = -sn * x + cs * y;
        }
        h[(i + 1, i)] = C64::new(0.0, 0.0);
    }
    // Multiply back on the right: columns i, i+1.
    for (i, (cs, sn)) in rots.iter().enumerate() {
        let i = lo + i;
        for row in 0..=(i + 1).min(hi) {
            let x = h[(row, i)];
            let y = h[(row, i + 1)];
            h[(row, i)] = x * cs + y * sn;
            h[(row, i + 1)] = -x * sn.conj() + y * cs.conj();
        }
    }
    for i in lo..=hi {
        h[(i, i)] += shift;
    }
}

/// Modified Gram–Schmidt with re-orthogonalization. Returns an orthonormal
/// basis (as columns) of the span of the inputs; vectors whose residual after
/// projection falls below `tol` times their original norm are dropped.
pub fn orthonormalize(vectors: &[Vec<C64>], tol: f64) -> CMatrix {
    let dim = if vectors.is_empty() {
        0
    } else {
        vectors[0].len()
    };
    let mut basis: Vec<Vec<C64>> = Vec::new();
    for v in vectors {
        assert_eq!(v.len(), dim, "ragged spanning set");
        let scale = vec_norm(v);
        if scale == 0.0 {
            continue;
        }
        let mut w = v.clone();
        // Two projection passes keep orthogonality at roundoff level.
        for _ in 0..2 {
            for b in &basis {
                let coeff = inner(b, &w);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= coeff * bi;
                }
            }
        }
        let norm = vec_norm(&w);
        if norm > tol * scale {
            for wi in &mut w {
                *wi /= c(norm);
            }
            basis.push(w);
        }
    }
    CMatrix::from_cols(&basis)
}
