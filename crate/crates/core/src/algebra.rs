//! Finite-dimensional C*-algebras as direct sums of full matrix blocks.
//!
//! An [`Algebra`] is the shape `M_{d₁} ⊕ … ⊕ M_{d_k}`; an [`Element`] stores
//! one matrix per block. Coordinates are taken in the matrix-unit basis
//! (block major, then row major inside a block), which is orthonormal for the
//! Hilbert–Schmidt inner product `tr(a*b)` — the fixed coordinate inner
//! product throughout the crate.

use alloc::vec;
use alloc::vec::Vec;

use crate::numerics::{c, ci, inner, orthonormalize, vec_norm, CMatrix, C64};
use crate::{Error, Result};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Shape of a finite-dimensional C*-algebra: block dimensions `(d₁,…,d_k)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Algebra {
    block_dims: Vec<usize>,
}

impl Algebra {
    /// Direct sum of full matrix algebras with the given block dimensions.
    pub fn new(block_dims: &[usize]) -> Result<Self> {
        if block_dims.is_empty() || block_dims.contains(&0) {
            return Err(Error::PreconditionFailed(
                "block dimensions must be positive".into(),
            ));
        }
        Ok(Algebra {
            block_dims: block_dims.to_vec(),
        })
    }

    /// The full matrix algebra `M_d`.
    pub fn full(d: usize) -> Self {
        Algebra::new(&[d]).expect("d > 0")
    }

    /// The commutative algebra `C^n` (n blocks of dimension 1).
    pub fn diagonal(n: usize) -> Self {
        Algebra::new(&vec![1; n]).expect("n > 0")
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    pub fn block_count(&self) -> usize {
        self.block_dims.len()
    }

    /// Coordinate dimension `Σ dᵢ²`.
    pub fn total_dim(&self) -> usize {
        self.block_dims.iter().map(|d| d * d).sum()
    }

    /// Dimension `Σ dᵢ` of the defining representation space.
    pub fn rep_dim(&self) -> usize {
        self.block_dims.iter().sum()
    }

    /// Coordinate offset of block `b`.
    pub fn block_offset(&self, b: usize) -> usize {
        self.block_dims[..b].iter().map(|d| d * d).sum()
    }

    /// Coordinate index of the matrix unit `E_rs` in block `b`.
    pub fn coord_index(&self, b: usize, r: usize, s: usize) -> usize {
        self.block_offset(b) + r * self.block_dims[b] + s
    }

    /// Inverse of [`Self::coord_index`].
    pub fn coord_position(&self, idx: usize) -> (usize, usize, usize) {
        let mut rest = idx;
        for (b, &d) in self.block_dims.iter().enumerate() {
            if rest < d * d {
                return (b, rest / d, rest % d);
            }
            rest -= d * d;
        }
        panic!("coordinate index out of range");
    }

    /// The unit.
    pub fn unit(&self) -> Element {
        Element {
            algebra: self.clone(),
            blocks: self
                .block_dims
                .iter()
                .map(|&d| CMatrix::identity(d))
                .collect(),
        }
    }

    pub fn zero(&self) -> Element {
        Element {
            algebra: self.clone(),
            blocks: self
                .block_dims
                .iter()
                .map(|&d| CMatrix::zeros(d, d))
                .collect(),
        }
    }

    /// Matrix-unit basis element for coordinate `idx`.
    pub fn basis_element(&self, idx: usize) -> Element {
        let (b, r, s) = self.coord_position(idx);
        let mut e = self.zero();
        e.blocks[b][(r, s)] = c(1.0);
        e
    }

    /// All matrix-unit basis elements in coordinate order.
    pub fn basis(&self) -> Vec<Element> {
        (0..self.total_dim())
            .map(|i| self.basis_element(i))
            .collect()
    }

    /// Element from a coordinate vector.
    pub fn element_from_coords(&self, coords: &[C64]) -> Element {
        assert_eq!(coords.len(), self.total_dim(), "coordinate length mismatch");
        let mut blocks = Vec::with_capacity(self.block_dims.len());
        let mut off = 0;
        for &d in &self.block_dims {
            blocks.push(CMatrix::from_coords(d, d, &coords[off..off + d * d]));
            off += d * d;
        }
        Element {
            algebra: self.clone(),
            blocks,
        }
    }

    /// Superoperator of left multiplication `x ↦ a·x` on coordinates.
    pub fn left_mult_superop(&self, a: &Element) -> CMatrix {
        assert_eq!(&a.algebra, self, "algebra mismatch");
        let t = self.total_dim();
        let mut m = CMatrix::zeros(t, t);
        for (b, &d) in self.block_dims.iter().enumerate() {
            let off = self.block_offset(b);
            let ab = &a.blocks[b];
            // (a x)_{ru} = Σ_s a_{rs} x_{su}
            for r in 0..d {
                for s in 0..d {
                    let v = ab[(r, s)];
                    if v == c(0.0) {
                        continue;
                    }
                    for u in 0..d {
                        m[(off + r * d + u, off + s * d + u)] += v;
                    }
                }
            }
        }
        m
    }

    /// Superoperator of right multiplication `x ↦ x·a` on coordinates.
    pub fn right_mult_superop(&self, a: &Element) -> CMatrix {
        assert_eq!(&a.algebra, self, "algebra mismatch");
        let t = self.total_dim();
        let mut m = CMatrix::zeros(t, t);
        for (b, &d) in self.block_dims.iter().enumerate() {
            let off = self.block_offset(b);
            let ab = &a.blocks[b];
            // (x a)_{ru} = Σ_s x_{rs} a_{su}
            for s in 0..d {
                for u in 0..d {
                    let v = ab[(s, u)];
                    if v == c(0.0) {
                        continue;
                    }
                    for r in 0..d {
                        m[(off + r * d + u, off + r * d + s)] += v;
                    }
                }
            }
        }
        m
    }

    /// Real permutation matrix `P` with `coords(aᵀ) = P·coords(a)` blockwise;
    /// combined with entrywise conjugation it implements the involution.
    pub fn star_permutation(&self) -> CMatrix {
        let t = self.total_dim();
        let mut m = CMatrix::zeros(t, t);
        for (b, &d) in self.block_dims.iter().enumerate() {
            let off = self.block_offset(b);
            for r in 0..d {
                for s in 0..d {
                    m[(off + r * d + s, off + s * d + r)] = c(1.0);
                }
            }
        }
        m
    }
}

/// An element of a finite-dimensional C*-algebra, stored blockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    algebra: Algebra,
    blocks: Vec<CMatrix>,
}

impl Element {
    /// Builds from explicit blocks, validating shapes.
    pub fn from_blocks(algebra: &Algebra, blocks: Vec<CMatrix>) -> Result<Self> {
        if blocks.len() != algebra.block_count() {
            return Err(Error::PreconditionFailed("block count mismatch".into()));
        }
        for (m, &d) in blocks.iter().zip(algebra.block_dims()) {
            if m.rows() != d || m.cols() != d {
                return Err(Error::ShapeMismatch {
                    expected: (d, d),
                    got: (m.rows(), m.cols()),
                });
            }
            if !m.is_finite() {
                return Err(Error::NonFinite);
            }
        }
        Ok(Element {
            algebra: algebra.clone(),
            blocks,
        })
    }

    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    pub fn block(&self, b: usize) -> &CMatrix {
        &self.blocks[b]
    }

    /// Coordinates in the matrix-unit basis.
    pub fn coords(&self) -> Vec<C64> {
        let mut v = Vec::with_capacity(self.algebra.total_dim());
        for m in &self.blocks {
            v.extend_from_slice(m.as_slice());
        }
        v
    }

    /// Blockwise conjugate transpose (the involution).
    pub fn star(&self) -> Element {
        Element {
            algebra: self.algebra.clone(),
            blocks: self.blocks.iter().map(|m| m.adjoint()).collect(),
        }
    }

    pub fn add(&self, rhs: &Element) -> Result<Element> {
        if self.algebra != rhs.algebra {
            return Err(Error::AlgebraMismatch);
        }
        Ok(Element {
            algebra: self.algebra.clone(),
            blocks: self
                .blocks
                .iter()
                .zip(&rhs.blocks)
                .map(|(a, b)| a.add(b))
                .collect(),
        })
    }

    pub fn sub(&self, rhs: &Element) -> Result<Element> {
        if self.algebra != rhs.algebra {
            return Err(Error::AlgebraMismatch);
        }
        Ok(Element {
            algebra: self.algebra.clone(),
            blocks: self
                .blocks
                .iter()
                .zip(&rhs.blocks)
                .map(|(a, b)| a.sub(b))
                .collect(),
        })
    }

    /// Blockwise product.
    pub fn mul(&self, rhs: &Element) -> Result<Element> {
        if self.algebra != rhs.algebra {
            return Err(Error::AlgebraMismatch);
        }
        Ok(Element {
            algebra: self.algebra.clone(),
            blocks: self
                .blocks
                .iter()
                .zip(&rhs.blocks)
                .map(|(a, b)| a.mul(b))
                .collect(),
        })
    }

    pub fn scale(&self, s: C64) -> Element {
        Element {
            algebra: self.algebra.clone(),
            blocks: self.blocks.iter().map(|m| m.scale(s)).collect(),
        }
    }

    /// Sum of block traces.
    pub fn trace(&self) -> C64 {
        self.blocks.iter().map(|m| m.trace()).sum()
    }

    /// Hilbert–Schmidt norm `sqrt(tr(a*a))`.
    pub fn hs_norm(&self) -> f64 {
        libm::sqrt(
            self.blocks
                .iter()
                .map(|m| {
                    let f = m.fro_norm();
                    f * f
                })
                .sum(),
        )
    }

    /// C*-norm: the largest block operator norm.
    pub fn op_norm(&self) -> f64 {
        self.blocks
            .iter()
            .map(crate::numerics::op_norm)
            .fold(0.0, f64::max)
    }

    /// Hermitian part `(a + a*)/2`.
    pub fn hermitian_part(&self) -> Element {
        self.add(&self.star()).expect("same algebra").scale(c(0.5))
    }

    /// Embeds as one block-diagonal matrix on the defining representation.
    pub fn block_diagonal(&self) -> CMatrix {
        let n = self.algebra.rep_dim();
        let mut m = CMatrix::zeros(n, n);
        let mut off = 0;
        for (bm, &d) in self.blocks.iter().zip(self.algebra.block_dims()) {
            for r in 0..d {
                for s in 0..d {
                    m[(off + r, off + s)] = bm[(r, s)];
                }
            }
            off += d;
        }
        m
    }
}

/// Hilbert–Schmidt inner product `tr(a*b)`.
pub fn hs_inner(a: &Element, b: &Element) -> Result<C64> {
    if a.algebra() != b.algebra() {
        return Err(Error::AlgebraMismatch);
    }
    Ok(inner(&a.coords(), &b.coords()))
}

/// Deterministic pseudo-random element; the same seed always produces the
/// same element. Entries are uniform in `[-1, 1) + i[-1, 1)`.
pub fn random_element(algebra: &Algebra, seed: u64) -> Element {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks = algebra
        .block_dims()
        .iter()
        .map(|&d| {
            CMatrix::from_fn(d, d, |_, _| {
                ci(rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0)
            })
        })
        .collect();
    Element {
        algebra: algebra.clone(),
        blocks,
    }
}

/// Deterministic pseudo-random Hermitian element.
pub fn random_hermitian_element(algebra: &Algebra, seed: u64) -> Element {
    random_element(algebra, seed).hermitian_part()
}

/// A linear subspace of a coordinate space, held as an orthonormal basis.
///
/// The ambient space is either an algebra in its matrix-unit coordinates or
/// a space of operators `m×m` in row-major coordinates; either way the
/// coordinate inner product is Hilbert–Schmidt.
#[derive(Debug, Clone)]
pub struct Subspace {
    ambient_dim: usize,
    /// Orthonormal basis vectors as columns (`ambient_dim × dim`).
    basis: CMatrix,
}

impl Subspace {
    /// Span of the given coordinate vectors.
    pub fn from_spanning(ambient_dim: usize, vectors: &[Vec<C64>], tol: f64) -> Self {
        for v in vectors {
            assert_eq!(v.len(), ambient_dim);
        }
        Subspace {
            ambient_dim,
            basis: orthonormalize(vectors, tol),
        }
    }

    /// Wraps an already-orthonormal basis.
    pub fn from_orthonormal(basis: CMatrix) -> Self {
        Subspace {
            ambient_dim: basis.rows(),
            basis,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn basis_vector(&self, j: usize) -> Vec<C64> {
        self.basis.col(j)
    }

    /// Orthogonal projection of `v` onto the subspace.
    pub fn project(&self, v: &[C64]) -> Vec<C64> {
        let coeff = self.basis.adjoint().mul_vec(v);
        self.basis.mul_vec(&coeff)
    }

    /// Relative projection residual `‖v − P v‖ / ‖v‖` (0 for the zero vector).
    pub fn membership_residual(&self, v: &[C64]) -> f64 {
        let n = vec_norm(v);
        if n == 0.0 {
            return 0.0;
        }
        let p = self.project(v);
        let diff: Vec<C64> = v.iter().zip(&p).map(|(a, b)| a - b).collect();
        vec_norm(&diff) / n
    }

    /// Scale-free membership test.
    pub fn contains(&self, v: &[C64], tol: f64) -> bool {
        self.membership_residual(v) <= tol
    }

    /// Containment of `self` in `other`: the largest membership residual of
    /// a basis vector.
    pub fn containment_residual(&self, other: &Subspace) -> f64 {
        (0..self.dim())
            .map(|j| other.membership_residual(&self.basis_vector(j)))
            .fold(0.0, f64::max)
    }
}

/// The multiplication-and-star closure engine behind
/// [`generated_star_algebra`] and its operator-space variant.
trait StarAmbient {
    fn ambient_dim(&self) -> usize;
    fn unit_coords(&self) -> Vec<C64>;
    fn mul_coords(&self, a: &[C64], b: &[C64]) -> Vec<C64>;
    fn star_coords(&self, a: &[C64]) -> Vec<C64>;
}

struct AlgebraAmbient<'a>(&'a Algebra);

impl StarAmbient for AlgebraAmbient<'_> {
    fn ambient_dim(&self) -> usize {
        self.0.total_dim()
    }
    fn unit_coords(&self) -> Vec<C64> {
        self.0.unit().coords()
    }
    fn mul_coords(&self, a: &[C64], b: &[C64]) -> Vec<C64> {
        let ea = self.0.element_from_coords(a);
        let eb = self.0.element_from_coords(b);
        ea.mul(&eb).expect("same algebra").coords()
    }
    fn star_coords(&self, a: &[C64]) -> Vec<C64> {
        self.0.element_from_coords(a).star().coords()
    }
}

struct OperatorAmbient(usize);

impl StarAmbient for OperatorAmbient {
    fn ambient_dim(&self) -> usize {
        self.0 * self.0
    }
    fn unit_coords(&self) -> Vec<C64> {
        CMatrix::identity(self.0).to_vec()
    }
    fn mul_coords(&self, a: &[C64], b: &[C64]) -> Vec<C64> {
        let ma = CMatrix::from_coords(self.0, self.0, a);
        let mb = CMatrix::from_coords(self.0, self.0, b);
        ma.mul(&mb).to_vec()
    }
    fn star_coords(&self, a: &[C64]) -> Vec<C64> {
        CMatrix::from_coords(self.0, self.0, a).adjoint().to_vec()
    }
}

fn generated_star_algebra_impl(
    ambient: &dyn StarAmbient,
    seed: &[Vec<C64>],
    tol: f64,
) -> Result<Subspace> {
    if seed.is_empty() {
        return Err(Error::PreconditionFailed("empty generating set".into()));
    }
    let dim = ambient.ambient_dim();
    // Start from the unit, the generators and their stars.
    let mut spanning: Vec<Vec<C64>> = vec![ambient.unit_coords()];
    for v in seed {
        spanning.push(v.clone());
        spanning.push(ambient.star_coords(v));
    }
    let mut space = Subspace::from_spanning(dim, &spanning, tol);
    // Alternate span closure and pairwise products until the dimension
    // stabilizes; in exact arithmetic this terminates within ambient_dim
    // rounds.
    for _round in 0..=dim {
        let k = space.dim();
        let mut extended: Vec<Vec<C64>> = (0..k).map(|j| space.basis_vector(j)).collect();
        for i in 0..k {
            for j in 0..k {
                extended.push(ambient.mul_coords(&space.basis_vector(i), &space.basis_vector(j)));
            }
        }
        let next = Subspace::from_spanning(dim, &extended, tol);
        if next.dim() == k {
            return Ok(next);
        }
        space = next;
    }
    Err(Error::NoConvergence("generated *-algebra closure"))
}

/// Smallest *-closed, unit-containing, product-closed subspace containing
/// the seed elements.
pub fn generated_star_algebra(seed: &[Element], tol: f64) -> Result<Subspace> {
    if seed.is_empty() {
        return Err(Error::PreconditionFailed("empty generating set".into()));
    }
    let algebra = seed[0].algebra().clone();
    for e in seed {
        if e.algebra() != &algebra {
            return Err(Error::AlgebraMismatch);
        }
    }
    let coords: Vec<Vec<C64>> = seed.iter().map(|e| e.coords()).collect();
    generated_star_algebra_impl(&AlgebraAmbient(&algebra), &coords, tol)
}

/// Operator-space variant of [`generated_star_algebra`]: the seeds are
/// matrices on `C^m` and the ambient is all of `B(C^m)`.
pub fn generated_star_algebra_ops(seed: &[CMatrix], tol: f64) -> Result<Subspace> {
    if seed.is_empty() {
        return Err(Error::PreconditionFailed("empty generating set".into()));
    }
    let m = seed[0].rows();
    for s in seed {
        if s.rows() != m || s.cols() != m {
            return Err(Error::ShapeMismatch {
                expected: (m, m),
                got: (s.rows(), s.cols()),
            });
        }
    }
    let coords: Vec<Vec<C64>> = seed.iter().map(|s| s.to_vec()).collect();
    generated_star_algebra_impl(&OperatorAmbient(m), &coords, tol)
}

/// The commutant `{X : XA = AX for all generators A}` as a subspace of the
/// `m×m` operator space; always contains the identity.
pub fn commutant(reps: &[CMatrix], tol: f64) -> Result<Subspace> {
    if reps.is_empty() {
        return Err(Error::PreconditionFailed("empty generator list".into()));
    }
    let m = reps[0].rows();
    for a in reps {
        if a.rows() != m || a.cols() != m {
            return Err(Error::ShapeMismatch {
                expected: (m, m),
                got: (a.rows(), a.cols()),
            });
        }
    }
    // Stack the superoperators X ↦ XA − AX over all generators and take the
    // kernel. In row-major coordinates, X ↦ AX is A ⊗ I and X ↦ XA is I ⊗ Aᵀ.
    let id = CMatrix::identity(m);
    let mut stacked = CMatrix::zeros(reps.len() * m * m, m * m);
    for (gi, a) in reps.iter().enumerate() {
        let left = a.kron(&id);
        let right = id.kron(&a.transpose());
        let diff = right.sub(&left);
        for r in 0..m * m {
            for col in 0..m * m {
                stacked[(gi * m * m + r, col)] = diff[(r, col)];
            }
        }
    }
    let scale = reps.iter().map(|a| a.fro_norm()).fold(0.0, f64::max);
    let kernel = crate::numerics::kernel_basis_scaled(&stacked, tol, scale)?;
    Ok(Subspace::from_orthonormal(kernel))
}

/// Double commutant of the generator list.
pub fn double_commutant(reps: &[CMatrix], tol: f64) -> Result<Subspace> {
    let m = reps[0].rows();
    let comm = commutant(reps, tol)?;
    let comm_mats: Vec<CMatrix> = (0..comm.dim())
        .map(|j| CMatrix::from_coords(m, m, &comm.basis_vector(j)))
        .collect();
    commutant(&comm_mats, tol)
}
