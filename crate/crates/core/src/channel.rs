//! Unital completely positive endomorphisms of a finite-dimensional
//! C*-algebra.
//!
//! A [`UcpMap`] keeps three interconvertible encodings in sync: the
//! superoperator on matrix-unit coordinates, the Choi matrices (one per
//! block pair of the algebra), and a Kraus family acting by
//! `a ↦ Σ K a K*` on the block-diagonal embedding. Validation checks
//! unitality (`Φ(1) = 1`), complete positivity (every Choi block PSD) and
//! the mutual consistency of the encodings.

use alloc::format;
use alloc::vec::Vec;

use crate::algebra::{Algebra, Element, Subspace};
use crate::numerics::{c, herm_eig, kernel_basis_scaled, op_norm, CMatrix, C64};
use crate::{Error, Result};

/// A unital completely positive map `Φ: A → A`.
#[derive(Debug, Clone)]
pub struct UcpMap {
    algebra: Algebra,
    /// Action on matrix-unit coordinates (`total_dim × total_dim`).
    superop: CMatrix,
    /// Choi matrices indexed by `(domain block b, codomain block c)` as
    /// `b * k + c`; block `(b, c)` is `(d_b·d_c) × (d_b·d_c)`.
    choi: Vec<CMatrix>,
    /// Kraus operators on the block-diagonal embedding, each supported on a
    /// single `(codomain, domain)` block pair; `Φ(a) = Σ K a K*`.
    kraus: Vec<CMatrix>,
    tol: f64,
}

impl UcpMap {
    /// Validates a candidate linear map given by its superoperator and
    /// populates all three encodings.
    pub fn from_superop(algebra: &Algebra, superop: CMatrix, tol: f64) -> Result<Self> {
        let t = algebra.total_dim();
        if superop.rows() != t || superop.cols() != t {
            return Err(Error::ShapeMismatch {
                expected: (t, t),
                got: (superop.rows(), superop.cols()),
            });
        }
        if !superop.is_finite() {
            return Err(Error::NonFinite);
        }
        // Unitality.
        let one = algebra.unit().coords();
        let image_of_one = superop.mul_vec(&one);
        let unital_resid = crate::numerics::vec_norm(
            &image_of_one
                .iter()
                .zip(&one)
                .map(|(a, b)| a - b)
                .collect::<Vec<_>>(),
        );
        if unital_resid > tol * crate::numerics::vec_norm(&one) {
            return Err(Error::NotUnital {
                residual: unital_resid,
            });
        }
        // Complete positivity: every Choi block Hermitian and PSD.
        let choi = assemble_choi(algebra, &superop);
        for block in &choi {
            let scale = block.fro_norm();
            let asym = block.dist(&block.adjoint());
            if asym > tol * scale.max(1e-300) {
                return Err(Error::NotCp {
                    min_eigenvalue: -asym,
                    scale,
                });
            }
            let eig = herm_eig(block, tol.max(1e-12))?;
            if let Some(&min) = eig.eigenvalues.first() {
                let lmax = eig.eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
                if min < -tol * lmax.max(1e-300) {
                    return Err(Error::NotCp {
                        min_eigenvalue: min,
                        scale: lmax,
                    });
                }
            }
        }
        let kraus = extract_kraus(algebra, &choi, tol)?;
        let map = UcpMap {
            algebra: algebra.clone(),
            superop,
            choi,
            kraus,
            tol,
        };
        // Encoding consistency: the Kraus family reproduces the superoperator
        // on the basis.
        let resid = map.kraus_consistency_residual();
        if resid > 1e-8 * map.superop.fro_norm().max(1.0) {
            return Err(Error::CertificationFailed {
                what: "Kraus/superoperator consistency",
                residual: resid,
            });
        }
        Ok(map)
    }

    /// Builds from Kraus operators on the block-diagonal embedding:
    /// `Φ(a) = Σ K a K*` with `Σ K K* = 1`.
    pub fn from_kraus(algebra: &Algebra, kraus: &[CMatrix], tol: f64) -> Result<Self> {
        let d = algebra.rep_dim();
        for k in kraus {
            if k.rows() != d || k.cols() != d {
                return Err(Error::ShapeMismatch {
                    expected: (d, d),
                    got: (k.rows(), k.cols()),
                });
            }
        }
        let t = algebra.total_dim();
        let mut superop = CMatrix::zeros(t, t);
        for i in 0..t {
            let basis = algebra.basis_element(i).block_diagonal();
            let mut image = CMatrix::zeros(d, d);
            for k in kraus {
                image = image.add(&k.mul(&basis).mul(&k.adjoint()));
            }
            // The image must be block diagonal for the map to land in the
            // algebra at all.
            let (blocks, offdiag) = split_blocks(algebra, &image);
            if offdiag > tol * image.fro_norm().max(1.0) {
                return Err(Error::NotUcp {
                    detail: format!(
                        "Kraus family leaves the algebra: off-block mass {offdiag:.3e}"
                    ),
                });
            }
            let e = Element::from_blocks(algebra, blocks)?;
            for (r, z) in e.coords().into_iter().enumerate() {
                superop[(r, i)] = z;
            }
        }
        Self::from_superop(algebra, superop, tol)
    }

    /// The identity map.
    pub fn identity(algebra: &Algebra) -> Self {
        let t = algebra.total_dim();
        Self::from_superop(algebra, CMatrix::identity(t), 1e-12).expect("identity is ucp")
    }

    /// Builds the map `f ↦ P f` on a diagonal algebra from a row-stochastic
    /// matrix.
    pub fn from_stochastic(algebra: &Algebra, p: &CMatrix, tol: f64) -> Result<Self> {
        let n = algebra.block_count();
        if algebra.total_dim() != n {
            return Err(Error::PreconditionFailed(
                "stochastic dynamics requires a diagonal algebra".into(),
            ));
        }
        if p.rows() != n || p.cols() != n {
            return Err(Error::ShapeMismatch {
                expected: (n, n),
                got: (p.rows(), p.cols()),
            });
        }
        for r in 0..n {
            let mut row_sum = 0.0;
            for col in 0..n {
                let z = p[(r, col)];
                if z.im.abs() > tol || z.re < -tol {
                    return Err(Error::PreconditionFailed(
                        "stochastic matrix entries must be nonnegative reals".into(),
                    ));
                }
                row_sum += z.re;
            }
            if (row_sum - 1.0).abs() > tol {
                return Err(Error::NotUnital {
                    residual: (row_sum - 1.0).abs(),
                });
            }
        }
        Self::from_superop(algebra, p.clone(), tol)
    }

    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    pub fn superop(&self) -> &CMatrix {
        &self.superop
    }

    pub fn choi_blocks(&self) -> &[CMatrix] {
        &self.choi
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Applies the map to an element.
    pub fn apply(&self, a: &Element) -> Result<Element> {
        if a.algebra() != &self.algebra {
            return Err(Error::AlgebraMismatch);
        }
        Ok(self
            .algebra
            .element_from_coords(&self.superop.mul_vec(&a.coords())))
    }

    /// Image of the `i`-th basis element.
    pub fn basis_image(&self, i: usize) -> Element {
        let col = self.superop.col(i);
        self.algebra.element_from_coords(&col)
    }

    /// Composition `self ∘ other`.
    pub fn compose(&self, other: &UcpMap) -> Result<UcpMap> {
        if self.algebra != other.algebra {
            return Err(Error::AlgebraMismatch);
        }
        UcpMap::from_superop(&self.algebra, self.superop.mul(&other.superop), self.tol)
    }

    /// `Φⁿ`; the zeroth power is the identity map.
    pub fn power(&self, n: usize) -> Result<UcpMap> {
        let mut acc = CMatrix::identity(self.algebra.total_dim());
        for _ in 0..n {
            acc = self.superop.mul(&acc);
        }
        UcpMap::from_superop(&self.algebra, acc, self.tol)
    }

    /// Superoperator of the trace dual `Φ*`, characterized by
    /// `tr(Φ(a)·X) = tr(a·Φ*(X))`.
    ///
    /// With `P` the blockwise transpose permutation, the dual superoperator
    /// is `P Sᵀ P`.
    pub fn trace_dual_superop(&self) -> CMatrix {
        let p = self.algebra.star_permutation();
        p.mul(&self.superop.transpose()).mul(&p)
    }

    /// Applies the trace dual to an element.
    pub fn trace_dual_apply(&self, x: &Element) -> Result<Element> {
        if x.algebra() != &self.algebra {
            return Err(Error::AlgebraMismatch);
        }
        Ok(self
            .algebra
            .element_from_coords(&self.trace_dual_superop().mul_vec(&x.coords())))
    }

    /// Max residual of `Φ(ab) = Φ(a)Φ(b)` over all basis pairs; the map is a
    /// homomorphism exactly when this vanishes.
    pub fn homomorphism_residual(&self) -> f64 {
        let t = self.algebra.total_dim();
        let images: Vec<Element> = (0..t).map(|i| self.basis_image(i)).collect();
        let mut max = 0.0f64;
        for i in 0..t {
            let ei = self.algebra.basis_element(i);
            for j in 0..t {
                let ej = self.algebra.basis_element(j);
                let prod = ei.mul(&ej).expect("same algebra");
                let lhs = self.apply(&prod).expect("same algebra");
                let rhs = images[i].mul(&images[j]).expect("same algebra");
                max = max.max(lhs.sub(&rhs).expect("same algebra").hs_norm());
            }
        }
        max
    }

    /// Derived multiplicativity predicate.
    pub fn is_multiplicative(&self, tol: f64) -> bool {
        self.homomorphism_residual() <= tol
    }

    /// The multiplicative domain `D_Φ` via its linear characterization:
    /// `a ∈ D_Φ` iff `Φ(ax) = Φ(a)Φ(x)` and `Φ(xa) = Φ(x)Φ(a)` for all `x`,
    /// assembled as the kernel of a stacked linear system over the basis.
    ///
    /// The returned subspace is re-verified to be a unital *-subalgebra
    /// satisfying the defining quadratic identities; failure signals a
    /// tolerance misconfiguration.
    pub fn multiplicative_domain(&self, tol: f64) -> Result<Subspace> {
        let t = self.algebra.total_dim();
        let images: Vec<Element> = (0..t).map(|i| self.basis_image(i)).collect();
        let s = &self.superop;
        // For each basis element x_j build the two linear constraint maps
        //   a ↦ Φ(a·x_j) − Φ(a)·Φ(x_j)   and   a ↦ Φ(x_j·a) − Φ(x_j)·Φ(a).
        let mut stacked = CMatrix::zeros(2 * t * t, t);
        for j in 0..t {
            let xj = self.algebra.basis_element(j);
            let right_by_xj = self.algebra.right_mult_superop(&xj);
            let left_by_xj = self.algebra.left_mult_superop(&xj);
            let right_by_img = self.algebra.right_mult_superop(&images[j]);
            let left_by_img = self.algebra.left_mult_superop(&images[j]);
            let first = s.mul(&right_by_xj).sub(&right_by_img.mul(s));
            let second = s.mul(&left_by_xj).sub(&left_by_img.mul(s));
            for r in 0..t {
                for col in 0..t {
                    stacked[(2 * j * t + r, col)] = first[(r, col)];
                    stacked[((2 * j + 1) * t + r, col)] = second[(r, col)];
                }
            }
        }
        let scale = 1.0 + s.fro_norm();
        let kernel = kernel_basis_scaled(&stacked, tol, scale)?;
        let domain = Subspace::from_orthonormal(kernel);

        // Post-verification: unital *-subalgebra + quadratic identities.
        let mut closure_resid = 0.0f64;
        closure_resid =
            closure_resid.max(domain.membership_residual(&self.algebra.unit().coords()));
        for i in 0..domain.dim() {
            let bi = self.algebra.element_from_coords(&domain.basis_vector(i));
            closure_resid = closure_resid.max(domain.membership_residual(&bi.star().coords()));
            for j in 0..domain.dim() {
                let bj = self.algebra.element_from_coords(&domain.basis_vector(j));
                let prod = bi.mul(&bj)?;
                closure_resid = closure_resid.max(domain.membership_residual(&prod.coords()));
            }
            // Φ(a*)Φ(a) = Φ(a*a) and Φ(a)Φ(a*) = Φ(aa*).
            let a = &bi;
            let fa = self.apply(a)?;
            let fastar = self.apply(&a.star())?;
            let q1 = fastar
                .mul(&fa)?
                .sub(&self.apply(&a.star().mul(a)?)?)?
                .hs_norm();
            let q2 = fa
                .mul(&fastar)?
                .sub(&self.apply(&a.mul(&a.star())?)?)?
                .hs_norm();
            closure_resid = closure_resid.max(q1).max(q2);
        }
        let check_tol = (tol * 100.0).max(1e-8);
        if closure_resid > check_tol {
            return Err(Error::NotAnAlgebra {
                residual: closure_resid,
            });
        }
        Ok(domain)
    }

    /// Kadison defect `Φ(a*a) − Φ(a*)Φ(a)`, certified positive semidefinite.
    pub fn kadison_defect(&self, a: &Element, tol: f64) -> Result<Element> {
        let fa = self.apply(a)?;
        let fastar = self.apply(&a.star())?;
        let defect = self.apply(&a.star().mul(a)?)?.sub(&fastar.mul(&fa)?)?;
        // Certify blockwise PSD.
        let scale = 1.0 + a.op_norm() * a.op_norm();
        for block in defect.blocks() {
            let eig = herm_eig(&block.hermitize(), 1e-8)?;
            if let Some(&min) = eig.eigenvalues.first() {
                if min < -tol * scale {
                    return Err(Error::SchwarzViolation {
                        min_eigenvalue: min,
                        scale,
                    });
                }
            }
        }
        Ok(defect)
    }

    fn kraus_consistency_residual(&self) -> f64 {
        let t = self.algebra.total_dim();
        let mut max = 0.0f64;
        for i in 0..t {
            let basis = self.algebra.basis_element(i).block_diagonal();
            let mut image = CMatrix::zeros(basis.rows(), basis.cols());
            for k in &self.kraus {
                image = image.add(&k.mul(&basis).mul(&k.adjoint()));
            }
            let expect = self.basis_image(i).block_diagonal();
            max = max.max(image.dist(&expect));
        }
        max
    }

    /// Operator norm of the superoperator (not the cb-norm; used only for
    /// scale estimates).
    pub fn superop_norm(&self) -> f64 {
        op_norm(&self.superop)
    }
}

/// Validates a candidate linear map given by its superoperator; alias for
/// [`UcpMap::from_superop`].
pub fn verify_ucp(algebra: &Algebra, superop: CMatrix, tol: f64) -> Result<UcpMap> {
    UcpMap::from_superop(algebra, superop, tol)
}

/// Splits a `rep_dim × rep_dim` matrix into algebra blocks, returning the
/// blocks and the Frobenius mass left outside them.
fn split_blocks(algebra: &Algebra, m: &CMatrix) -> (Vec<CMatrix>, f64) {
    let mut blocks = Vec::with_capacity(algebra.block_count());
    let mut off = 0usize;
    let mut inside_sq = 0.0;
    for &d in algebra.block_dims() {
        let mut b = CMatrix::zeros(d, d);
        for r in 0..d {
            for s in 0..d {
                b[(r, s)] = m[(off + r, off + s)];
                inside_sq += b[(r, s)].norm_sqr();
            }
        }
        blocks.push(b);
        off += d;
    }
    let total_sq = m.as_slice().iter().map(|z| z.norm_sqr()).sum::<f64>();
    (blocks, libm::sqrt((total_sq - inside_sq).max(0.0)))
}

/// Choi matrices `C_{b,c} = Σ_{r,s} E_rs ⊗ Φ(E^b_rs)_c`, one per block pair.
fn assemble_choi(algebra: &Algebra, superop: &CMatrix) -> Vec<CMatrix> {
    let k = algebra.block_count();
    let dims = algebra.block_dims().to_vec();
    let mut out = Vec::with_capacity(k * k);
    for b in 0..k {
        let db = dims[b];
        for cc in 0..k {
            let dc = dims[cc];
            let off_c = algebra.block_offset(cc);
            let mut choi = CMatrix::zeros(db * dc, db * dc);
            for r in 0..db {
                for s in 0..db {
                    let col = algebra.coord_index(b, r, s);
                    // Image of E^b_rs, restricted to codomain block cc.
                    for u in 0..dc {
                        for v in 0..dc {
                            let z = superop[(off_c + u * dc + v, col)];
                            choi[(r * dc + u, s * dc + v)] = z;
                        }
                    }
                }
            }
            out.push(choi);
        }
    }
    out
}

/// Kraus extraction from the Choi blocks. Eigenvalues above `tol·λ_max` are
/// kept, taken in ascending order with the phase of each operator normalized
/// so its first significant entry is real positive; the ordering over block
/// pairs is `(domain, codomain)` lexicographic. This makes the family
/// deterministic for a given Choi spectrum.
fn extract_kraus(algebra: &Algebra, choi: &[CMatrix], tol: f64) -> Result<Vec<CMatrix>> {
    let k = algebra.block_count();
    let dims = algebra.block_dims().to_vec();
    let rep_offsets: Vec<usize> = (0..k).map(|b| dims[..b].iter().sum()).collect();
    let d_total = algebra.rep_dim();
    let mut out = Vec::new();
    for b in 0..k {
        let db = dims[b];
        for cc in 0..k {
            let dc = dims[cc];
            let block = &choi[b * k + cc];
            if block.fro_norm() == 0.0 {
                continue;
            }
            let eig = herm_eig(&block.hermitize(), 1e-8)?;
            let lmax = eig.eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
            for (j, &lam) in eig.eigenvalues.iter().enumerate() {
                if lam <= tol * lmax {
                    continue;
                }
                let s = libm::sqrt(lam);
                // Rectangular piece: K[u, r] = sqrt(λ)·v[(r, u)].
                let mut kr = CMatrix::zeros(dc, db);
                for r in 0..db {
                    for u in 0..dc {
                        kr[(u, r)] = eig.eigenvectors[(r * dc + u, j)] * c(s);
                    }
                }
                phase_normalize(&mut kr);
                // Embed at the (codomain, domain) block position.
                let mut full = CMatrix::zeros(d_total, d_total);
                for u in 0..dc {
                    for r in 0..db {
                        full[(rep_offsets[cc] + u, rep_offsets[b] + r)] = kr[(u, r)];
                    }
                }
                out.push(full);
            }
        }
    }
    Ok(out)
}

/// Makes the first significant entry (row-major) real positive.
fn phase_normalize(m: &mut CMatrix) {
    let maxabs = m.as_slice().iter().map(|z| z.norm()).fold(0.0, f64::max);
    if maxabs == 0.0 {
        return;
    }
    let first = m
        .as_slice()
        .iter()
        .find(|z| z.norm() > 1e-12 * maxabs)
        .copied()
        .unwrap_or(c(1.0));
    let corr = (first / c(first.norm())).conj();
    let rows = m.rows();
    let cols = m.cols();
    for r in 0..rows {
        for col in 0..cols {
            m[(r, col)] *= corr;
        }
    }
}

/// Multiplicative domain of a ucp map into operators on a Hilbert space,
/// given by its images on the basis. Same linear characterization as
/// [`UcpMap::multiplicative_domain`].
pub fn multiplicative_domain_of_rep(
    algebra: &Algebra,
    images: &[CMatrix],
    tol: f64,
) -> Result<Subspace> {
    let t = algebra.total_dim();
    assert_eq!(images.len(), t, "one image per basis element");
    let h = images[0].rows();
    // Unknown a = Σ c_i x_i. Constraints per basis x_j:
    //  Σ_i c_i [Φ(x_i x_j) − Φ(x_i)Φ(x_j)] = 0 and the left-handed twin.
    let apply_coords = |coords: &[C64]| -> CMatrix {
        let mut m = CMatrix::zeros(h, h);
        for (i, &z) in coords.iter().enumerate() {
            if z != c(0.0) {
                m = m.add(&images[i].scale(z));
            }
        }
        m
    };
    let mut stacked = CMatrix::zeros(2 * t * h * h, t);
    for j in 0..t {
        let xj = algebra.basis_element(j);
        let right = algebra.right_mult_superop(&xj);
        let left = algebra.left_mult_superop(&xj);
        let img_j = &images[j];
        for i in 0..t {
            let ei: Vec<C64> = (0..t)
                .map(|r| if r == i { c(1.0) } else { c(0.0) })
                .collect();
            let f1 = apply_coords(&right.mul_vec(&ei)).sub(&images[i].mul(img_j));
            let f2 = apply_coords(&left.mul_vec(&ei)).sub(&img_j.mul(&images[i]));
            for (r, z) in f1.to_vec().into_iter().enumerate() {
                stacked[(2 * j * h * h + r, i)] = z;
            }
            for (r, z) in f2.to_vec().into_iter().enumerate() {
                stacked[((2 * j + 1) * h * h + r, i)] = z;
            }
        }
    }
    let scale = 1.0 + images.iter().map(|m| m.fro_norm()).fold(0.0, f64::max);
    let kernel = kernel_basis_scaled(&stacked, tol, scale)?;
    Ok(Subspace::from_orthonormal(kernel))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::random_element;
    use crate::instances;
    use crate::numerics::ci;

    #[test]
    fn identity_map_is_valid_with_maximally_entangled_choi() {
        let m2 = Algebra::full(2);
        let id = UcpMap::identity(&m2);
        // Choi of id on M₂ is the rank-one maximally entangled projector ×2.
        let choi = &id.choi_blocks()[0];
        let eig = herm_eig(choi, 1e-10).unwrap();
        assert!((eig.eigenvalues[3] - 2.0).abs() < 1e-12);
        assert!(eig.eigenvalues[..3].iter().all(|l| l.abs() < 1e-12));
    }

    #[test]
    fn depolarizing_is_valid_and_choi_is_half_identity() {
        let dep = instances::depolarizing_m2();
        let choi = &dep.choi_blocks()[0];
        assert!(choi.dist(&CMatrix::identity(4).scale(c(0.5))) < 1e-12);
    }

    #[test]
    fn doubling_map_is_not_unital() {
        let m2 = Algebra::full(2);
        let sup = CMatrix::identity(4).scale(c(2.0));
        assert!(matches!(
            UcpMap::from_superop(&m2, sup, 1e-10),
            Err(Error::NotUnital { .. })
        ));
    }

    #[test]
    fn transpose_map_is_not_cp() {
        let m2 = Algebra::full(2);
        // a ↦ aᵀ is positive but not completely positive.
        let sup = m2.star_permutation();
        assert!(matches!(
            UcpMap::from_superop(&m2, sup, 1e-10),
            Err(Error::NotCp { .. })
        ));
    }

    #[test]
    fn powers_and_composition() {
        let m2 = Algebra::full(2);
        let id = UcpMap::identity(&m2);
        assert!(id.power(5).unwrap().superop().dist(id.superop()) < 1e-14);

        // The depolarizing channel is idempotent: Φ(1) = 1 and Φ(a) ∈ C1.
        let dep = instances::depolarizing_m2();
        let dep2 = dep.power(2).unwrap();
        assert!(dep2.superop().dist(dep.superop()) < 1e-12);

        // Unitary conjugations invert each other.
        let u = instances::qubit_unitary_phase();
        let ad_u = instances::ad_unitary(&m2, &u).unwrap();
        let ad_u_star = instances::ad_unitary(&m2, &u.star()).unwrap();
        let comp = ad_u.compose(&ad_u_star).unwrap();
        assert!(comp.superop().dist(&CMatrix::identity(4)) < 1e-12);

        // power(Φ, m+n) = power(Φ,m)∘power(Φ,n).
        let p3 = dep.power(3).unwrap();
        let p12 = dep
            .power(1)
            .unwrap()
            .compose(&dep.power(2).unwrap())
            .unwrap();
        assert!(p3.superop().dist(p12.superop()) < 1e-12);
    }

    #[test]
    fn trace_dual_examples() {
        let m2 = Algebra::full(2);
        let id = UcpMap::identity(&m2);
        assert!(id.trace_dual_superop().dist(&CMatrix::identity(4)) < 1e-14);

        // trace_dual(ad_U) = ad_{U*}: tr(U a U* X) = tr(a U* X U).
        let u = instances::qubit_unitary_phase();
        let ad_u = instances::ad_unitary(&m2, &u).unwrap();
        let x = random_element(&m2, 5);
        let a = random_element(&m2, 6);
        let lhs = ad_u.apply(&a).unwrap().mul(&x).unwrap().trace();
        let rhs = a
            .mul(&m2.element_from_coords(&ad_u.trace_dual_superop().mul_vec(&x.coords())))
            .unwrap()
            .trace();
        assert!((lhs - rhs).norm() < 1e-12);

        // The depolarizing channel is self-dual.
        let dep = instances::depolarizing_m2();
        assert!(dep.trace_dual_superop().dist(dep.superop()) < 1e-12);
    }

    #[test]
    fn trace_dual_pairing_on_block_algebra() {
        let alg = Algebra::new(&[2, 1]).unwrap();
        let map = instances::random_unitary_mix(&alg, 3, 2).unwrap();
        for i in 0..alg.total_dim() {
            let a = alg.basis_element(i);
            for j in 0..alg.total_dim() {
                let x = alg.basis_element(j);
                let lhs = map.apply(&a).unwrap().mul(&x).unwrap().trace();
                let rhs = a.mul(&map.trace_dual_apply(&x).unwrap()).unwrap().trace();
                assert!((lhs - rhs).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn multiplicative_domain_examples() {
        let m2 = Algebra::full(2);
        let id = UcpMap::identity(&m2);
        assert_eq!(id.multiplicative_domain(1e-10).unwrap().dim(), 4);

        let dep = instances::depolarizing_m2();
        let dom = dep.multiplicative_domain(1e-10).unwrap();
        assert_eq!(dom.dim(), 1);
        assert!(dom.contains(&m2.unit().coords(), 1e-8));

        let deph = instances::dephasing_m2();
        let dom = deph.multiplicative_domain(1e-10).unwrap();
        assert_eq!(dom.dim(), 2);
        // The diagonal matrix units lie in the domain.
        assert!(dom.contains(&m2.basis_element(0).coords(), 1e-8));
        assert!(dom.contains(&m2.basis_element(3).coords(), 1e-8));
    }

    #[test]
    fn multiplicative_domain_satisfies_bimodule_identities() {
        let dep = instances::dephasing_m2();
        let alg = dep.algebra().clone();
        let dom = dep.multiplicative_domain(1e-10).unwrap();
        for i in 0..dom.dim() {
            let a = alg.element_from_coords(&dom.basis_vector(i));
            for j in 0..alg.total_dim() {
                let x = alg.basis_element(j);
                let r1 = dep
                    .apply(&a.mul(&x).unwrap())
                    .unwrap()
                    .sub(&dep.apply(&a).unwrap().mul(&dep.apply(&x).unwrap()).unwrap())
                    .unwrap()
                    .hs_norm();
                let r2 = dep
                    .apply(&x.mul(&a).unwrap())
                    .unwrap()
                    .sub(&dep.apply(&x).unwrap().mul(&dep.apply(&a).unwrap()).unwrap())
                    .unwrap()
                    .hs_norm();
                assert!(r1 < 1e-10 && r2 < 1e-10);
            }
        }
    }

    #[test]
    fn homomorphism_detection() {
        let m2 = Algebra::full(2);
        let u = instances::qubit_unitary_phase();
        let ad_u = instances::ad_unitary(&m2, &u).unwrap();
        assert!(ad_u.is_multiplicative(1e-10));
        assert!(!instances::depolarizing_m2().is_multiplicative(1e-10));
    }

    #[test]
    fn kadison_defect_examples() {
        let m2 = Algebra::full(2);
        let id = UcpMap::identity(&m2);
        let a = random_element(&m2, 9);
        assert!(id.kadison_defect(&a, 1e-10).unwrap().hs_norm() < 1e-12);

        // Depolarizing at σx: Φ(σx²) = 1, Φ(σx) = 0, defect = 1.
        let dep = instances::depolarizing_m2();
        let sx = m2.element_from_coords(&[c(0.0), c(1.0), c(1.0), c(0.0)]);
        let defect = dep.kadison_defect(&sx, 1e-10).unwrap();
        assert!(defect.sub(&m2.unit()).unwrap().hs_norm() < 1e-12);

        // At the unit the defect vanishes for any ucp map.
        assert!(dep.kadison_defect(&m2.unit(), 1e-10).unwrap().hs_norm() < 1e-12);
    }

    #[test]
    fn schwarz_inequality_on_seeded_instances() {
        let m2 = Algebra::full(2);
        for seed in 0..50 {
            let map = instances::random_unitary_mix(&m2, seed, 3).unwrap();
            for k in 0..4 {
                let a = random_element(&m2, 1000 + 4 * seed + k);
                assert!(map.kadison_defect(&a, 1e-9).is_ok());
            }
        }
        let c3 = Algebra::diagonal(3);
        for seed in 0..25 {
            let (map, _) = instances::random_stochastic_system(&c3, seed).unwrap();
            for k in 0..4 {
                let a = random_element(&c3, 2000 + 4 * seed + k);
                assert!(map.kadison_defect(&a, 1e-9).is_ok());
            }
        }
    }

    #[test]
    fn kraus_extraction_roundtrip() {
        let m2 = Algebra::full(2);
        let maps = [
            UcpMap::identity(&m2),
            instances::depolarizing_m2(),
            instances::dephasing_m2(),
            instances::random_unitary_mix(&m2, 4, 2).unwrap(),
        ];
        for map in &maps {
            // from_kraus(kraus(map)) reproduces the superoperator.
            let rebuilt = UcpMap::from_kraus(&m2, map.kraus(), 1e-10).unwrap();
            assert!(rebuilt.superop().dist(map.superop()) < 1e-10);
        }
    }

    #[test]
    fn stochastic_shorthand_builds_diagonal_dynamics() {
        let c2 = Algebra::diagonal(2);
        let swap = CMatrix::from_rows(&[&[c(0.0), c(1.0)], &[c(1.0), c(0.0)]]);
        let map = UcpMap::from_stochastic(&c2, &swap, 1e-10).unwrap();
        assert!(map.is_multiplicative(1e-10));
        let bad = CMatrix::from_rows(&[&[c(0.5), c(0.6)], &[c(1.0), c(0.0)]]);
        assert!(UcpMap::from_stochastic(&c2, &bad, 1e-10).is_err());
        let neg = CMatrix::from_rows(&[&[c(1.5), c(-0.5)], &[c(1.0), c(0.0)]]);
        assert!(UcpMap::from_stochastic(&c2, &neg, 1e-10).is_err());
    }

    #[test]
    fn rep_valued_multiplicative_domain_matches_endomorphism_case() {
        let deph = instances::dephasing_m2();
        let alg = deph.algebra().clone();
        let images: Vec<CMatrix> = (0..4)
            .map(|i| deph.basis_image(i).block_diagonal())
            .collect();
        let dom = multiplicative_domain_of_rep(&alg, &images, 1e-10).unwrap();
        assert_eq!(dom.dim(), 2);
    }

    #[test]
    fn compose_rejects_mismatched_algebras() {
        let a = UcpMap::identity(&Algebra::full(2));
        let b = UcpMap::identity(&Algebra::diagonal(2));
        assert!(matches!(a.compose(&b), Err(Error::AlgebraMismatch)));
    }

    #[test]
    fn non_block_kraus_rejected() {
        let alg = Algebra::diagonal(2);
        // A Hadamard-like unitary mixes the two diagonal blocks.
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let h = CMatrix::from_rows(&[&[ci(s, 0.0), ci(s, 0.0)], &[ci(s, 0.0), ci(-s, 0.0)]]);
        assert!(UcpMap::from_kraus(&alg, &[h], 1e-10).is_err());
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(16))]

        #[test]
        fn trace_dual_is_an_involution(seed in 0u64..5000) {
            let alg = Algebra::full(2);
            let map = instances::random_unitary_mix(&alg, seed, 2).unwrap();
            let dual = map.trace_dual_superop();
            let p = alg.star_permutation();
            let double_dual = p.mul(&dual.transpose()).mul(&p);
            proptest::prop_assert!(double_dual.dist(map.superop()) < 1e-12);
        }

        #[test]
        fn kadison_defect_never_negative_on_random_pairs(seed in 0u64..5000) {
            let alg = Algebra::full(2);
            let map = instances::random_unitary_mix(&alg, seed, 3).unwrap();
            let a = random_element(&alg, seed ^ 0x5555);
            proptest::prop_assert!(map.kadison_defect(&a, 1e-9).is_ok());
        }
    }
}
