//! One Stinespring dilation step for a ucp map into operators on a Hilbert
//! space, and the isometry factoring the transfer contraction through it.
//!
//! Given `Φ: A → B(H)` unital completely positive, the dilation space is the
//! quotient of `A ⊗ H` by the null space of the semi-inner product
//! `⟨a₁⊗ψ₁, a₂⊗ψ₂⟩ = ⟨ψ₁, Φ(a₁*a₂)ψ₂⟩`. Ambient coordinates are ordered
//! algebra-index major, space-index minor, which fixes the quotient
//! coordinates reproducibly across runs.

use alloc::format;
use alloc::vec::Vec;

use crate::algebra::{Algebra, Element, Subspace};
use crate::channel::UcpMap;
use crate::gns::GnsData;
#[cfg(test)]
use crate::numerics::vec_norm;
use crate::numerics::{c, gram_quotient, herm_eig, CMatrix, QuotientBasis, C64};
use crate::{Error, Result};

/// The Stinespring triple `(L_Φ, σ_Φ, V_Φ)` of a ucp map `Φ: A → B(H)`.
#[derive(Debug, Clone)]
pub struct StinespringData {
    /// `dim H`.
    pub source_dim: usize,
    /// `dim L_Φ`.
    pub dilation_dim: usize,
    /// Quotient data over the ambient `A ⊗ H`.
    pub coords: QuotientBasis,
    /// `σ(x_i)` for the coordinate basis of the algebra.
    pub sigma_images: Vec<CMatrix>,
    /// The isometry `V: H → L_Φ`, `ψ ↦ class(1 ⊗ ψ)`.
    pub v: CMatrix,
    algebra: Algebra,
}

impl StinespringData {
    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    /// `σ(a)` by linearity.
    pub fn sigma(&self, a: &Element) -> CMatrix {
        let coords = a.coords();
        let mut m = CMatrix::zeros(self.dilation_dim, self.dilation_dim);
        for (i, &z) in coords.iter().enumerate() {
            if z != c(0.0) {
                m = m.add(&self.sigma_images[i].scale(z));
            }
        }
        m
    }

    /// Quotient coordinates of the class of `a ⊗ ψ`.
    pub fn class_of(&self, a: &Element, psi: &[C64]) -> Vec<C64> {
        let h = self.source_dim;
        let coords = a.coords();
        let mut ambient = alloc::vec![C64::new(0.0, 0.0); coords.len() * h];
        for (i, &z) in coords.iter().enumerate() {
            for (j, &p) in psi.iter().enumerate() {
                ambient[i * h + j] = z * p;
            }
        }
        self.coords.project(&ambient)
    }
}

/// Applies `sup ⊗ I_h` to a matrix whose rows are ambient `A ⊗ H`
/// coordinates, without materializing the Kronecker product.
fn alg_kron_apply(sup: &CMatrix, x: &CMatrix, h: usize) -> CMatrix {
    let t = sup.rows();
    debug_assert_eq!(x.rows(), t * h);
    let cols = x.cols();
    let mut out = CMatrix::zeros(t * h, cols);
    for ip in 0..t {
        for i in 0..t {
            let v = sup[(ip, i)];
            if v == c(0.0) {
                continue;
            }
            for j in 0..h {
                for col in 0..cols {
                    let add = v * x[(i * h + j, col)];
                    out[(ip * h + j, col)] += add;
                }
            }
        }
    }
    out
}

/// Builds the Stinespring representation of a ucp map `Φ: A → B(H)` given by
/// its images on the coordinate basis.
///
/// Certified on return: `V*V = I`, the factorization `Φ(a) = V*σ(a)V` on the
/// basis, `σ(a*) = σ(a)*`, and the defining relation
/// `σ(a)·q = q·(L_a ⊗ I)` on the quotient map `q` (which also forces
/// multiplicativity, since ambient left multiplication is exactly
/// multiplicative).
pub fn stinespring(
    algebra: &Algebra,
    phi_images: &[CMatrix],
    h_dim: usize,
    tol: f64,
) -> Result<StinespringData> {
    stinespring_with_shuffle(algebra, phi_images, h_dim, tol, None)
}

/// [`stinespring`] with a seeded relabeling of the ambient Gram assembly.
///
/// The relabeling leaves the represented quotient space untouched but steers
/// the eigensolver through a different rotation sequence, so degenerate Gram
/// eigenspaces come out in a different orthonormal basis. Two towers built
/// with different shuffles realize the same object in genuinely different
/// coordinates, which is what the uniqueness checks want to compare.
pub fn stinespring_with_shuffle(
    algebra: &Algebra,
    phi_images: &[CMatrix],
    h_dim: usize,
    tol: f64,
    shuffle: Option<u64>,
) -> Result<StinespringData> {
    let t = algebra.total_dim();
    if phi_images.len() != t {
        return Err(Error::PreconditionFailed(
            "one image per basis element".into(),
        ));
    }
    for m in phi_images {
        if m.rows() != h_dim || m.cols() != h_dim {
            return Err(Error::ShapeMismatch {
                expected: (h_dim, h_dim),
                got: (m.rows(), m.cols()),
            });
        }
    }
    // Unitality of Φ.
    let one = algebra.unit().coords();
    let mut image_of_one = CMatrix::zeros(h_dim, h_dim);
    for (i, &z) in one.iter().enumerate() {
        if z != c(0.0) {
            image_of_one = image_of_one.add(&phi_images[i].scale(z));
        }
    }
    let unital = image_of_one.dist(&CMatrix::identity(h_dim));
    if unital > tol.max(1e-9) {
        return Err(Error::NotUcp {
            detail: format!("Φ(1) ≠ 1 (residual {unital:.3e})"),
        });
    }
    // Complete positivity: per-domain-block Choi with operator codomain.
    for (b, &db) in algebra.block_dims().iter().enumerate() {
        let mut choi = CMatrix::zeros(db * h_dim, db * h_dim);
        for r in 0..db {
            for s in 0..db {
                let img = &phi_images[algebra.coord_index(b, r, s)];
                for u in 0..h_dim {
                    for v in 0..h_dim {
                        choi[(r * h_dim + u, s * h_dim + v)] = img[(u, v)];
                    }
                }
            }
        }
        let scale = choi.fro_norm();
        if choi.dist(&choi.adjoint()) > tol.max(1e-9) * scale.max(1e-300) {
            return Err(Error::NotUcp {
                detail: "Choi block not Hermitian".into(),
            });
        }
        let eig = herm_eig(&choi.hermitize(), 1e-9)?;
        if let Some(&min) = eig.eigenvalues.first() {
            let lmax = eig.eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
            if min < -tol * lmax.max(1e-300) {
                return Err(Error::GramNotPsd {
                    min_eigenvalue: min,
                    scale: lmax,
                });
            }
        }
    }

    // Gram of the basis vectors x_i ⊗ e_j: only pairs sharing the block and
    // the left matrix-unit row interact, because x_i* x_k collapses to a
    // single matrix unit.
    let ambient = t * h_dim;
    let mut gram = CMatrix::zeros(ambient, ambient);
    for (b, &db) in algebra.block_dims().iter().enumerate() {
        for r in 0..db {
            for s in 0..db {
                let i = algebra.coord_index(b, r, s);
                for u in 0..db {
                    let k = algebra.coord_index(b, r, u);
                    let img = &phi_images[algebra.coord_index(b, s, u)];
                    for j in 0..h_dim {
                        for l in 0..h_dim {
                            gram[(i * h_dim + j, k * h_dim + l)] = img[(j, l)];
                        }
                    }
                }
            }
        }
    }
    let coords = match shuffled_gram_quotient(&gram, tol, shuffle) {
        Ok(q) => q,
        Err(Error::NotPsd {
            min_eigenvalue,
            scale,
        }) => {
            return Err(Error::GramNotPsd {
                min_eigenvalue,
                scale,
            })
        }
        Err(e) => return Err(e),
    };
    let dilation_dim = coords.rank;

    // σ(x_i) = q·(L_{x_i} ⊗ I)·section.
    let section = coords.section();
    let mut sigma_images = Vec::with_capacity(t);
    for i in 0..t {
        let sup = algebra.left_mult_superop(&algebra.basis_element(i));
        let tmp = alg_kron_apply(&sup, &section, h_dim);
        sigma_images.push(coords.quotient_map.mul(&tmp));
    }

    // V: ψ ↦ class(1 ⊗ ψ).
    let mut v = CMatrix::zeros(dilation_dim, h_dim);
    for (i, &z) in one.iter().enumerate() {
        if z == c(0.0) {
            continue;
        }
        for jp in 0..h_dim {
            for r in 0..dilation_dim {
                v[(r, jp)] += z * coords.quotient_map[(r, i * h_dim + jp)];
            }
        }
    }

    let data = StinespringData {
        source_dim: h_dim,
        dilation_dim,
        coords,
        sigma_images,
        v,
        algebra: algebra.clone(),
    };

    // Certificates.
    let check_tol = (tol * 100.0).max(1e-9);
    let isometry = data
        .v
        .adjoint()
        .mul(&data.v)
        .dist(&CMatrix::identity(h_dim));
    if isometry > check_tol {
        return Err(Error::CertificationFailed {
            what: "Stinespring isometry",
            residual: isometry,
        });
    }
    let mut resid = 0.0f64;
    for i in 0..t {
        let compressed = data.v.adjoint().mul(&data.sigma_images[i]).mul(&data.v);
        resid = resid.max(compressed.dist(&phi_images[i]));
        let star_image = data.sigma(&algebra.basis_element(i).star());
        resid = resid.max(star_image.dist(&data.sigma_images[i].adjoint()));
        // q·(L_a ⊗ I), computed through the adjoint so the Kronecker factor
        // acts on ambient rows.
        let sup = algebra.left_mult_superop(&algebra.basis_element(i));
        let q_la =
            alg_kron_apply(&sup.adjoint(), &data.coords.quotient_map.adjoint(), h_dim).adjoint();
        let defining = data.sigma_images[i]
            .mul(&data.coords.quotient_map)
            .dist(&q_la);
        resid = resid.max(defining);
    }
    if resid > check_tol {
        return Err(Error::CertificationFailed {
            what: "Stinespring factorization",
            residual: resid,
        });
    }
    Ok(data)
}

/// Relabels the ambient indices by a seeded shuffle before the quotient and
/// translates the maps back; pure coordinate gauge on the same Gram.
fn shuffled_gram_quotient(gram: &CMatrix, tol: f64, shuffle: Option<u64>) -> Result<QuotientBasis> {
    let seed = match shuffle {
        None => return gram_quotient(gram, tol),
        Some(s) => s,
    };
    use rand::{Rng, SeedableRng};
    let n = gram.rows();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        perm.swap(i, j);
    }
    let mut shuffled = CMatrix::zeros(n, n);
    for r in 0..n {
        for col in 0..n {
            shuffled[(r, col)] = gram[(perm[r], perm[col])];
        }
    }
    let q = gram_quotient(&shuffled, tol)?;
    let rank = q.rank;
    let mut coiso = CMatrix::zeros(rank, n);
    let mut qmap = CMatrix::zeros(rank, n);
    for r in 0..rank {
        for col in 0..n {
            coiso[(r, perm[col])] = q.coisometry[(r, col)];
            qmap[(r, perm[col])] = q.quotient_map[(r, col)];
        }
    }
    Ok(QuotientBasis {
        ambient_dim: n,
        rank,
        coisometry: coiso,
        quotient_map: qmap,
        tol_used: q.tol_used,
    })
}

/// Builds the Stinespring step of `Φ_rep = σ∘Φ` for an endomorphism `Φ` and
/// a representation given by its basis images.
pub fn stinespring_of_composed(
    map: &UcpMap,
    rep_images: &[CMatrix],
    h_dim: usize,
    tol: f64,
) -> Result<StinespringData> {
    stinespring_of_composed_with_shuffle(map, rep_images, h_dim, tol, None)
}

/// [`stinespring_of_composed`] with the seeded ambient relabeling of
/// [`stinespring_with_shuffle`].
pub fn stinespring_of_composed_with_shuffle(
    map: &UcpMap,
    rep_images: &[CMatrix],
    h_dim: usize,
    tol: f64,
    shuffle: Option<u64>,
) -> Result<StinespringData> {
    let algebra = map.algebra();
    let t = algebra.total_dim();
    let mut composed = Vec::with_capacity(t);
    for i in 0..t {
        let coords = map.superop().col(i);
        let mut m = CMatrix::zeros(h_dim, h_dim);
        for (j, &z) in coords.iter().enumerate() {
            if z != c(0.0) {
                m = m.add(&rep_images[j].scale(z));
            }
        }
        composed.push(m);
    }
    stinespring_with_shuffle(algebra, &composed, h_dim, tol, shuffle)
}

/// Residuals for the multiplicative-domain commutation statement: `σ(x)`
/// commutes with the range projection `VV*` for `x` in the multiplicative
/// domain, and `VV* = I` exactly when the domain is everything.
#[derive(Debug, Clone)]
pub struct MdCommutationReport {
    /// `max_x ‖σ(x)VV* − VV*σ(x)‖` over the domain basis.
    pub commutation_residual: f64,
    /// `‖VV* − I‖`.
    pub range_projection_residual: f64,
    /// The supplied domain spans the whole algebra.
    pub domain_is_full: bool,
    /// `(VV* = I) ⇔ (D = A)` holds at tolerance `1e-8`.
    pub equivalence_holds: bool,
}

/// Checks the commutation of `σ(D_Φ)` with the Stinespring range projection.
pub fn check_md_commutation(s: &StinespringData, domain: &Subspace) -> MdCommutationReport {
    let p = s.v.mul(&s.v.adjoint());
    let mut commutation = 0.0f64;
    for j in 0..domain.dim() {
        let x = s.algebra().element_from_coords(&domain.basis_vector(j));
        let sx = s.sigma(&x);
        commutation = commutation.max(sx.mul(&p).dist(&p.mul(&sx)));
    }
    let range_resid = p.dist(&CMatrix::identity(s.dilation_dim));
    let domain_is_full = domain.dim() == s.algebra().total_dim();
    let unitary = range_resid <= 1e-8;
    MdCommutationReport {
        commutation_residual: commutation,
        range_projection_residual: range_resid,
        domain_is_full,
        equivalence_holds: unitary == domain_is_full,
    }
}

/// The isometry `Λ₀: H_φ → L₁` with `Λ₀·π_φ(a)Ω_φ = class(a ⊗ Ω_φ)`,
/// and the factorization `U = V₀*Λ₀` of the transfer contraction.
///
/// `s` must be the Stinespring step of `Φ₀ = π_φ∘Φ` over the GNS space of an
/// invariant state; if the state is not invariant the defining assignment
/// fails to be isometric and the construction reports [`Error::IllDefined`].
pub fn lambda0(g: &GnsData, s: &StinespringData, u: &CMatrix, tol: f64) -> Result<CMatrix> {
    if s.source_dim != g.dim() {
        return Err(Error::ShapeMismatch {
            expected: (g.dim(), g.dim()),
            got: (s.source_dim, s.source_dim),
        });
    }
    let t = g.algebra().total_dim();
    let h = g.dim();
    // K_ω: coords(a) ↦ coords(a ⊗ Ω).
    let mut k_omega = CMatrix::zeros(t * h, t);
    for i in 0..t {
        for (j, &w) in g.omega().iter().enumerate() {
            k_omega[(i * h + j, i)] = w;
        }
    }
    let lambda = s
        .coords
        .quotient_map
        .mul(&k_omega)
        .mul(&g.quotient().section());
    let check_tol = (tol * 100.0).max(1e-9);
    let isometry = lambda.adjoint().mul(&lambda).dist(&CMatrix::identity(h));
    if isometry > check_tol {
        return Err(Error::IllDefined { residual: isometry });
    }
    // Intertwining σ₁(a)Λ₀ = Λ₀π_φ(a) on the basis.
    let mut resid = 0.0f64;
    for i in 0..t {
        let e = g.algebra().basis_element(i);
        let lhs = s.sigma(&e).mul(&lambda);
        let rhs = lambda.mul(&g.rep(&e));
        resid = resid.max(lhs.dist(&rhs));
    }
    if resid > check_tol {
        return Err(Error::CertificationFailed {
            what: "Λ₀ intertwining",
            residual: resid,
        });
    }
    // Factorization U = V₀*Λ₀.
    let fact = s.v.adjoint().mul(&lambda).dist(u);
    if fact > check_tol {
        return Err(Error::CertificationFailed {
            what: "transfer factorization",
            residual: fact,
        });
    }
    Ok(lambda)
}
