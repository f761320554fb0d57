//! States, GNS triples, the transfer contraction, the induced W*-system,
//! modular pairs, and the φ-adjoint of the dynamics.
//!
//! Coordinates on the GNS space come from the Gram quotient of the algebra by
//! the null space of `⟨a, b⟩ = φ(a*b)`, so a state that is not faithful is
//! handled by the same code path as a faithful one; only the modular and
//! adjoint operations insist on faithfulness, and refuse otherwise rather
//! than silently restricting to the support corner.

use alloc::vec::Vec;

use crate::algebra::{commutant, double_commutant, Algebra, Element, Subspace};
use crate::channel::UcpMap;
use crate::numerics::{
    c, gram_quotient, herm_eig, inner, least_squares, op_norm, rank_with_tol, singular_values,
    vec_norm, CMatrix, HermEig, QuotientBasis, C64,
};
use crate::{Error, Result};

/// A state on a finite-dimensional C*-algebra, stored as one density matrix
/// per block: `φ(a) = Σ_b tr(ρ_b a_b)`.
#[derive(Debug, Clone)]
pub struct State {
    algebra: Algebra,
    densities: Vec<CMatrix>,
}

impl State {
    /// Validates blockwise densities: Hermitian, PSD, total trace 1.
    pub fn new(algebra: &Algebra, densities: Vec<CMatrix>, tol: f64) -> Result<Self> {
        if densities.len() != algebra.block_count() {
            return Err(Error::PreconditionFailed(
                "one density block per algebra block".into(),
            ));
        }
        let mut trace_sum = 0.0;
        let mut lmax_global = 0.0f64;
        let mut eigs: Vec<HermEig> = Vec::new();
        for (rho, &d) in densities.iter().zip(algebra.block_dims()) {
            if rho.rows() != d || rho.cols() != d {
                return Err(Error::ShapeMismatch {
                    expected: (d, d),
                    got: (rho.rows(), rho.cols()),
                });
            }
            let scale = rho.fro_norm();
            if rho.dist(&rho.adjoint()) > tol * scale.max(1e-300) {
                return Err(Error::NotHermitian {
                    residual: rho.dist(&rho.adjoint()),
                    scale,
                });
            }
            let eig = herm_eig(&rho.hermitize(), tol.max(1e-12))?;
            lmax_global = lmax_global.max(eig.eigenvalues.last().copied().unwrap_or(0.0));
            trace_sum += rho.trace().re;
            eigs.push(eig);
        }
        for eig in &eigs {
            if let Some(&min) = eig.eigenvalues.first() {
                if min < -tol * lmax_global.max(1e-300) {
                    return Err(Error::NotPsd {
                        min_eigenvalue: min,
                        scale: lmax_global,
                    });
                }
            }
        }
        if (trace_sum - 1.0).abs() > tol.max(1e-9) {
            return Err(Error::PreconditionFailed(alloc::format!(
                "state trace is {trace_sum}, expected 1"
            )));
        }
        Ok(State {
            algebra: algebra.clone(),
            densities,
        })
    }

    /// The tracial state `a ↦ tr(a)/dim`.
    pub fn tracial(algebra: &Algebra) -> State {
        let d = algebra.rep_dim() as f64;
        let densities = algebra
            .block_dims()
            .iter()
            .map(|&n| CMatrix::identity(n).scale(c(1.0 / d)))
            .collect();
        State {
            algebra: algebra.clone(),
            densities,
        }
    }

    /// A classical probability vector on a diagonal algebra.
    pub fn classical(algebra: &Algebra, probs: &[f64], tol: f64) -> Result<State> {
        if algebra.total_dim() != algebra.block_count() || probs.len() != algebra.block_count() {
            return Err(Error::PreconditionFailed(
                "classical state needs a diagonal algebra".into(),
            ));
        }
        let densities = probs.iter().map(|&p| CMatrix::diag(&[p])).collect();
        State::new(algebra, densities, tol)
    }

    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    pub fn densities(&self) -> &[CMatrix] {
        &self.densities
    }

    /// `φ(a)`.
    pub fn eval(&self, a: &Element) -> C64 {
        self.densities
            .iter()
            .zip(a.blocks())
            .map(|(rho, blk)| rho.mul(blk).trace())
            .sum()
    }

    /// The functional as a coordinate covector: `φ(a) = Σ_i f_i·coords(a)_i`.
    pub fn functional(&self) -> Vec<C64> {
        self.algebra.basis().iter().map(|e| self.eval(e)).collect()
    }

    /// All density blocks strictly positive definite.
    pub fn is_faithful(&self, tol: f64) -> bool {
        let mut lmax = 0.0f64;
        let mut lmin = f64::INFINITY;
        for rho in &self.densities {
            match herm_eig(&rho.hermitize(), 1e-10) {
                Ok(eig) => {
                    lmax = lmax.max(eig.eigenvalues.last().copied().unwrap_or(0.0));
                    lmin = lmin.min(eig.eigenvalues.first().copied().unwrap_or(0.0));
                }
                Err(_) => return false,
            }
        }
        lmin > tol * lmax
    }

    /// Support projection `⊕_b supp(ρ_b)`, certified to be a projection.
    pub fn support(&self, tol: f64) -> Result<Element> {
        let mut blocks = Vec::with_capacity(self.densities.len());
        let mut lmax = 0.0f64;
        let mut eigs = Vec::new();
        for rho in &self.densities {
            let eig = herm_eig(&rho.hermitize(), 1e-10)?;
            lmax = lmax.max(eig.eigenvalues.last().copied().unwrap_or(0.0));
            eigs.push(eig);
        }
        for eig in &eigs {
            let p = eig.apply_fn(|l| if l > tol * lmax { c(1.0) } else { c(0.0) });
            blocks.push(p);
        }
        let p = Element::from_blocks(&self.algebra, blocks)?;
        let idem = p.mul(&p)?.sub(&p)?.hs_norm();
        let herm = p.sub(&p.star())?.hs_norm();
        if idem > 1e-10 || herm > 1e-10 {
            return Err(Error::CertificationFailed {
                what: "support projection",
                residual: idem.max(herm),
            });
        }
        Ok(p)
    }

    /// Blockwise function of the densities through their eigenvalues.
    pub fn density_fn(&self, mut f: impl FnMut(f64) -> C64) -> Result<Vec<CMatrix>> {
        let mut out = Vec::with_capacity(self.densities.len());
        for rho in &self.densities {
            let eig = herm_eig(&rho.hermitize(), 1e-10)?;
            out.push(eig.apply_fn(&mut f));
        }
        Ok(out)
    }
}

/// Outcome of the invariance check `φ∘Φ = φ`.
#[derive(Debug, Clone)]
pub struct InvarianceReport {
    /// `max_i |φ(Φ(x_i)) − φ(x_i)|` over the matrix-unit basis.
    pub max_residual: f64,
}

impl InvarianceReport {
    pub fn pass(&self, tol: f64) -> bool {
        self.max_residual <= tol
    }
}

/// Checks `φ∘Φ = φ` on the coordinate basis.
pub fn check_invariance(map: &UcpMap, state: &State) -> Result<InvarianceReport> {
    if map.algebra() != state.algebra() {
        return Err(Error::AlgebraMismatch);
    }
    let mut max = 0.0f64;
    for i in 0..map.algebra().total_dim() {
        let e = map.algebra().basis_element(i);
        let resid = (state.eval(&map.apply(&e)?) - state.eval(&e)).norm();
        max = max.max(resid);
    }
    Ok(InvarianceReport { max_residual: max })
}

/// The GNS triple `(H_φ, π_φ, Ω_φ)` in quotient coordinates.
#[derive(Debug, Clone)]
pub struct GnsData {
    algebra: Algebra,
    dim: usize,
    quotient: QuotientBasis,
    basis_images: Vec<CMatrix>,
    omega: Vec<C64>,
}

impl GnsData {
    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    /// Dimension of the GNS space.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn quotient(&self) -> &QuotientBasis {
        &self.quotient
    }

    /// The cyclic vector `Ω_φ` (the class of the unit).
    pub fn omega(&self) -> &[C64] {
        &self.omega
    }

    /// `π_φ(x_i)` for the coordinate basis.
    pub fn basis_images(&self) -> &[CMatrix] {
        &self.basis_images
    }

    /// `π_φ(a)` by linearity.
    pub fn rep(&self, a: &Element) -> CMatrix {
        let coords = a.coords();
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for (i, &z) in coords.iter().enumerate() {
            if z != c(0.0) {
                m = m.add(&self.basis_images[i].scale(z));
            }
        }
        m
    }

    /// `a ↦ π_φ(a)Ω_φ` in quotient coordinates.
    pub fn embed(&self, a: &Element) -> Vec<C64> {
        self.quotient.project(&a.coords())
    }

    /// Matrix of [`Self::embed`] on the coordinate basis (`dim × total_dim`).
    pub fn embed_matrix(&self) -> &CMatrix {
        &self.quotient.quotient_map
    }
}

/// Builds the GNS representation of `φ` on the quotient of the algebra by
/// the null space of `⟨a, b⟩ = φ(a*b)`.
pub fn gns_construct(algebra: &Algebra, state: &State, tol: f64) -> Result<GnsData> {
    if state.algebra() != algebra {
        return Err(Error::AlgebraMismatch);
    }
    let t = algebra.total_dim();
    let basis = algebra.basis();
    let mut gram = CMatrix::zeros(t, t);
    for i in 0..t {
        for j in 0..t {
            gram[(i, j)] = state.eval(&basis[i].star().mul(&basis[j])?);
        }
    }
    let quotient = gram_quotient(&gram, tol)?;
    if quotient.rank == 0 {
        return Err(Error::DegenerateState);
    }
    let dim = quotient.rank;
    let basis_images: Vec<CMatrix> = (0..t)
        .map(|i| quotient.compress(&algebra.left_mult_superop(&basis[i])))
        .collect();
    let omega = quotient.project(&algebra.unit().coords());
    let g = GnsData {
        algebra: algebra.clone(),
        dim,
        quotient,
        basis_images,
        omega,
    };

    // Certify the GNS invariants: state reproduction, *-multiplicativity of
    // the representation (via the defining relation), and well-definedness
    // on the quotient.
    let mut resid = 0.0f64;
    for i in 0..t {
        let via_rep = inner(&g.omega, &g.basis_images[i].mul_vec(&g.omega));
        resid = resid.max((via_rep - state.eval(&basis[i])).norm());
        // π(x_i)·T = T·L_{x_i} certifies multiplicativity together with the
        // exactness of left multiplication.
        let defining = g.basis_images[i]
            .mul(g.embed_matrix())
            .dist(&g.embed_matrix().mul(&algebra.left_mult_superop(&basis[i])));
        resid = resid.max(defining);
        // Star compatibility: π(x_i*) = π(x_i)*.
        let star_resid = g.rep(&basis[i].star()).dist(&g.basis_images[i].adjoint());
        resid = resid.max(star_resid);
    }
    if resid > (tol * 100.0).max(1e-9) {
        return Err(Error::CertificationFailed {
            what: "GNS invariants",
            residual: resid,
        });
    }
    Ok(g)
}

/// The unique contraction `U` on the GNS space with
/// `U·π_φ(a)Ω_φ = π_φ(Φ(a))Ω_φ`; requires `φ∘Φ = φ`.
///
/// Certified on return: the defining relation on the basis, `‖U‖ ≤ 1 + tol`,
/// and `UΩ = Ω`.
pub fn transfer_contraction(g: &GnsData, map: &UcpMap, state: &State, tol: f64) -> Result<CMatrix> {
    if map.algebra() != g.algebra() || state.algebra() != g.algebra() {
        return Err(Error::AlgebraMismatch);
    }
    let inv = check_invariance(map, state)?;
    if !inv.pass(tol.max(1e-9)) {
        return Err(Error::NotInvariant {
            residual: inv.max_residual,
        });
    }
    let t_embed = g.embed_matrix();
    let u = t_embed.mul(map.superop()).mul(&g.quotient.section());
    // Defining relation on the whole coordinate basis.
    let defining = u.mul(t_embed).dist(&t_embed.mul(map.superop()));
    if defining > (tol * 100.0).max(1e-9) {
        return Err(Error::CertificationFailed {
            what: "transfer contraction relation",
            residual: defining,
        });
    }
    let norm = op_norm(&u);
    if norm > 1.0 + tol.max(1e-9) {
        return Err(Error::CertificationFailed {
            what: "transfer contraction bound",
            residual: norm - 1.0,
        });
    }
    let uomega = u.mul_vec(g.omega());
    let fix = vec_norm(
        &uomega
            .iter()
            .zip(g.omega())
            .map(|(a, b)| a - b)
            .collect::<Vec<_>>(),
    );
    if fix > (tol * 100.0).max(1e-9) {
        return Err(Error::CertificationFailed {
            what: "transfer contraction fixed vector",
            residual: fix,
        });
    }
    Ok(u)
}

/// The induced W*-system `(π_φ(A)″, Φ_•, φ_•)` on the GNS space.
#[derive(Debug, Clone)]
pub struct WSystem {
    /// `π_φ(A)″` as a subspace of operators on the GNS space.
    pub vn: Subspace,
    /// Matrix of `Φ_•` on the coordinates of `vn`.
    pub phi_dot: CMatrix,
    /// `φ_•` evaluated on the basis of `vn`.
    pub state_dot: Vec<C64>,
}

impl WSystem {
    /// Number of basis operators in `π_φ(A)″`.
    pub fn dim(&self) -> usize {
        self.vn.dim()
    }

    /// The `j`-th basis operator as a matrix on the GNS space.
    pub fn basis_op(&self, j: usize) -> CMatrix {
        let d = int_sqrt(self.vn.ambient_dim());
        CMatrix::from_coords(d, d, &self.vn.basis_vector(j))
    }

    /// Expands coordinates on `vn` into an operator.
    pub fn operator_from_coords(&self, coords: &[C64]) -> CMatrix {
        let d = int_sqrt(self.vn.ambient_dim());
        let mut m = CMatrix::zeros(d, d);
        for (j, &z) in coords.iter().enumerate() {
            if z != c(0.0) {
                m = m.add(&self.basis_op(j).scale(z));
            }
        }
        m
    }

    /// Coordinates of an operator in the `vn` basis (orthonormal, so this is
    /// plain projection).
    pub fn coords_of(&self, x: &CMatrix) -> Vec<C64> {
        self.vn.basis().adjoint().mul_vec(&x.to_vec())
    }

    /// `Φ_•ⁿ(X)` as an operator, for `X` given as an operator.
    pub fn phi_dot_apply(&self, x: &CMatrix, n: usize) -> CMatrix {
        let mut coords = self.coords_of(x);
        for _ in 0..n {
            coords = self.phi_dot.mul_vec(&coords);
        }
        self.operator_from_coords(&coords)
    }
}

fn int_sqrt(n: usize) -> usize {
    let r = libm::sqrt(n as f64) as usize;
    assert_eq!(r * r, n, "ambient is not a square operator space");
    r
}

/// Builds the induced W*-system from a GNS triple and its transfer
/// contraction. Requires `Ω` cyclic for the commutant `π_φ(A)′` (equivalent
/// to centrality of the support of `φ`), which makes `Ω` separating for
/// `π_φ(A)″` and the extension of `Φ_•` well-defined.
pub fn induce_w_system(g: &GnsData, u: &CMatrix, tol: f64) -> Result<WSystem> {
    let comm = commutant(g.basis_images(), tol)?;
    // Cyclicity of Ω for the commutant: the vectors XΩ span the GNS space.
    let cols: Vec<Vec<C64>> = (0..comm.dim())
        .map(|j| {
            let x = CMatrix::from_coords(g.dim(), g.dim(), &comm.basis_vector(j));
            x.mul_vec(g.omega())
        })
        .collect();
    let span = CMatrix::from_cols(&cols);
    let sv = singular_values(&span)?;
    let smax = sv.last().copied().unwrap_or(0.0);
    let needed = g.dim();
    // Same singular-value floor as the rank helpers in numerics.
    let ok = sv.len() >= needed && sv[sv.len() - needed] > tol.max(1e-6) * smax;
    if !ok {
        let residual = if sv.len() >= needed {
            sv[sv.len() - needed]
        } else {
            0.0
        };
        return Err(Error::NotSeparating { residual });
    }

    let vn = double_commutant(g.basis_images(), tol)?;
    let m = vn.dim();
    let vn_cols: Vec<Vec<C64>> = (0..m)
        .map(|j| {
            let x = CMatrix::from_coords(g.dim(), g.dim(), &vn.basis_vector(j));
            x.mul_vec(g.omega())
        })
        .collect();
    let b = CMatrix::from_cols(&vn_cols);
    // Φ_•(X_k)Ω = U X_k Ω, solved in the separating coordinates.
    let mut rhs = CMatrix::zeros(g.dim(), m);
    for k in 0..m {
        let v = u.mul_vec(&vn_cols[k]);
        for (r, z) in v.into_iter().enumerate() {
            rhs[(r, k)] = z;
        }
    }
    let phi_dot = least_squares(&b, &rhs, tol)?;
    let resid = b.mul(&phi_dot).dist(&rhs);
    if resid > (tol * 100.0).max(1e-9) {
        return Err(Error::CertificationFailed {
            what: "induced dynamics extension",
            residual: resid,
        });
    }
    let state_dot: Vec<C64> = vn_cols.iter().map(|col| inner(g.omega(), col)).collect();
    Ok(WSystem {
        vn,
        phi_dot,
        state_dot,
    })
}

/// The modular pair `(Δ, J)` of a faithful state in GNS coordinates.
///
/// `Δ` acts by `a ↦ ρ a ρ^{-1}` and `J` by `a ↦ ρ^{1/2} a* ρ^{-1/2}`,
/// both blockwise; `J` is stored as the unitary `K` with `J(h) = K·conj(h)`
/// in the fixed GNS coordinates.
#[derive(Debug, Clone)]
pub struct ModularPair {
    /// Positive definite modular operator on the GNS space.
    pub delta: CMatrix,
    /// Unitary part of the modular conjugation.
    pub conj_unitary: CMatrix,
    delta_eig: HermEig,
}

impl ModularPair {
    /// Applies the antiunitary `J`.
    pub fn apply_j(&self, v: &[C64]) -> Vec<C64> {
        let conj: Vec<C64> = v.iter().map(|z| z.conj()).collect();
        self.conj_unitary.mul_vec(&conj)
    }

    /// `Δ^{it}`.
    pub fn delta_it(&self, t: f64) -> CMatrix {
        self.delta_eig.apply_fn(|l| {
            // λ^{it} = exp(it·ln λ); λ > 0 for a faithful state.
            let phase = t * libm::log(l.max(f64::MIN_POSITIVE));
            C64::new(libm::cos(phase), libm::sin(phase))
        })
    }

    /// `Δ^p` for real `p`.
    pub fn delta_pow(&self, p: f64) -> CMatrix {
        self.delta_eig.apply_fn(|l| c(libm::pow(l.max(0.0), p)))
    }
}

/// Builds the modular pair of `(π_φ(A)″, Ω_φ)` for a faithful `φ` and
/// verifies it against the independent realified-polar oracle.
pub fn modular_pair(g: &GnsData, state: &State, tol: f64) -> Result<ModularPair> {
    modular_pair_diagnostics(g, state, tol).map(|(pair, _, _)| pair)
}

/// [`modular_pair`] together with the measured residuals: the closed-form
/// identity residual and the distance to the realified-polar oracle.
pub fn modular_pair_diagnostics(
    g: &GnsData,
    state: &State,
    tol: f64,
) -> Result<(ModularPair, f64, f64)> {
    if state.algebra() != g.algebra() {
        return Err(Error::AlgebraMismatch);
    }
    if !state.is_faithful(1e-12) || g.dim() != g.algebra().total_dim() {
        return Err(Error::NotFaithful);
    }
    let algebra = g.algebra();
    let rho = Element::from_blocks(algebra, state.densities().to_vec())?;
    let rho_inv = Element::from_blocks(algebra, state.density_fn(|l| c(1.0 / l))?)?;
    let rho_half = Element::from_blocks(algebra, state.density_fn(|l| c(libm::sqrt(l)))?)?;
    let rho_neg_half =
        Element::from_blocks(algebra, state.density_fn(|l| c(1.0 / libm::sqrt(l)))?)?;

    let t_embed = g.embed_matrix();
    let section = g.quotient().section();
    // Δ = T·(L_ρ R_{ρ⁻¹})·T⁻¹ in GNS coordinates.
    let m_delta = algebra
        .left_mult_superop(&rho)
        .mul(&algebra.right_mult_superop(&rho_inv));
    let delta = t_embed.mul(&m_delta).mul(&section).hermitize();
    // K = T·(L_{ρ^{1/2}} R_{ρ^{-1/2}})·P·conj(T⁻¹).
    let m_half = algebra
        .left_mult_superop(&rho_half)
        .mul(&algebra.right_mult_superop(&rho_neg_half));
    let k = t_embed
        .mul(&m_half)
        .mul(&algebra.star_permutation())
        .mul(&section.conj());

    let delta_eig = herm_eig(&delta, 1e-10)?;
    if delta_eig.eigenvalues.first().copied().unwrap_or(0.0) <= 0.0 {
        return Err(Error::CertificationFailed {
            what: "modular operator positivity",
            residual: delta_eig.eigenvalues.first().copied().unwrap_or(0.0),
        });
    }
    let pair = ModularPair {
        delta: delta.clone(),
        conj_unitary: k.clone(),
        delta_eig,
    };

    // Closed-form invariants.
    let n = g.dim();
    let scale = 1.0 + delta.fro_norm();
    let j_sq = k.mul(&k.conj()).dist(&CMatrix::identity(n));
    let delta_inv = pair.delta_pow(-1.0);
    let jdj = k.mul(&delta.conj()).mul(&k.conj()).dist(&delta_inv) / scale;
    // S = JΔ^{1/2} sends π(a)Ω to π(a*)Ω.
    let s_matrix = k.mul(&pair.delta_pow(0.5).conj());
    let mut s_resid = 0.0f64;
    for i in 0..algebra.total_dim() {
        let e = algebra.basis_element(i);
        let lhs = s_matrix.mul_vec(&g.embed(&e).iter().map(|z| z.conj()).collect::<Vec<_>>());
        let rhs = g.embed(&e.star());
        s_resid = s_resid.max(vec_norm(
            &lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect::<Vec<_>>(),
        ));
    }
    let closed = j_sq.max(jdj).max(s_resid);
    if closed > (tol * 100.0).max(1e-9) {
        return Err(Error::CertificationFailed {
            what: "modular pair identities",
            residual: closed,
        });
    }

    // Independent oracle: realify the conjugate-linear S defined on the
    // generators by S(π(a)Ω) = π(a*)Ω and polar-decompose it. The antilinear
    // map is h ↦ K_S·conj(h) with K_S = T·P·conj(T⁻¹).
    let k_s = t_embed
        .mul(&algebra.star_permutation())
        .mul(&section.conj());
    let s_real = realify_antilinear(&k_s);
    let delta_real = s_real.transpose().mul(&s_real).hermitize();
    let delta_real_eig = herm_eig(&delta_real, 1e-10)?;
    let delta_real_inv_half = delta_real_eig.apply_fn(|l| c(1.0 / libm::sqrt(l.max(1e-300))));
    let j_real = s_real.mul(&delta_real_inv_half);
    // De-realify Δ and compare to the closed form.
    let (delta_o, structure) = derealify_linear(&delta_real);
    let oracle_delta = delta_o.dist(&delta) / scale + structure;
    let j_real_closed = realify_antilinear(&k);
    let oracle_j = j_real.dist(&j_real_closed);
    let oracle = oracle_delta.max(oracle_j);
    if oracle > (tol * 10.0).max(1e-9) {
        return Err(Error::OracleMismatch { residual: oracle });
    }
    Ok((pair, closed, oracle))
}

/// Realification of the antilinear map `h ↦ K·conj(h)` on `R^{2n}`
/// coordinates `(Re h, Im h)`.
fn realify_antilinear(k: &CMatrix) -> CMatrix {
    let n = k.rows();
    let mut out = CMatrix::zeros(2 * n, 2 * n);
    for r in 0..n {
        for s in 0..n {
            let z = k[(r, s)];
            out[(r, s)] = c(z.re);
            out[(r, n + s)] = c(z.im);
            out[(n + r, s)] = c(z.im);
            out[(n + r, n + s)] = c(-z.re);
        }
    }
    out
}

/// Reads a complex-linear operator out of its realification
/// `[[Re, −Im], [Im, Re]]`, returning it and the structural mismatch.
fn derealify_linear(m: &CMatrix) -> (CMatrix, f64) {
    let n2 = m.rows();
    let n = n2 / 2;
    let mut out = CMatrix::zeros(n, n);
    let mut mismatch: f64 = 0.0;
    for r in 0..n {
        for s in 0..n {
            let re1 = m[(r, s)].re;
            let re2 = m[(n + r, n + s)].re;
            let im1 = m[(n + r, s)].re;
            let im2 = -m[(r, n + s)].re;
            out[(r, s)] = C64::new((re1 + re2) / 2.0, (im1 + im2) / 2.0);
            mismatch = mismatch.max((re1 - re2).abs()).max((im1 - im2).abs());
        }
    }
    (out, mismatch)
}

/// Residuals for the commutation of a transfer contraction with the modular
/// pair.
#[derive(Debug, Clone)]
pub struct ModularReport {
    /// `(t, ‖UΔ^{it} − Δ^{it}U‖)` at the sampled times.
    pub t_residuals: Vec<(f64, f64)>,
    /// `‖UJ − JU‖` as maps (antiunitarity handled by conjugation).
    pub j_residual: f64,
    /// Scale-free `‖UΔ − ΔU‖ / (1 + ‖Δ‖)`; commutation with `Δ` is
    /// equivalent to commutation with the whole group `Δ^{it}` at finite
    /// dimension.
    pub delta_residual: f64,
}

impl ModularReport {
    pub fn max_residual(&self) -> f64 {
        self.t_residuals
            .iter()
            .map(|&(_, r)| r)
            .fold(self.j_residual.max(self.delta_residual), f64::max)
    }

    pub fn pass(&self, tol: f64) -> bool {
        self.max_residual() <= tol
    }
}

/// Default sample times for the modular group check.
pub const DEFAULT_T_SAMPLES: [f64; 3] = [0.5, 1.0, core::f64::consts::SQRT_2];

/// Measures `‖UΔ^{it} − Δ^{it}U‖` at the sampled times, `‖UJ − JU‖`, and the
/// equivalent algebraic residual `‖UΔ − ΔU‖`.
pub fn modular_commutation_check(
    u: &CMatrix,
    pair: &ModularPair,
    t_samples: &[f64],
) -> ModularReport {
    let t_residuals = t_samples
        .iter()
        .map(|&t| {
            let dit = pair.delta_it(t);
            (t, u.mul(&dit).dist(&dit.mul(u)))
        })
        .collect();
    // UJ = JU as maps: U·K·conj(h) vs K·conj(U h)  ⇔  U·K = K·conj(U).
    let j_residual = u
        .mul(&pair.conj_unitary)
        .dist(&pair.conj_unitary.mul(&u.conj()));
    let delta_residual =
        u.mul(&pair.delta).dist(&pair.delta.mul(u)) / (1.0 + pair.delta.fro_norm());
    ModularReport {
        t_residuals,
        j_residual,
        delta_residual,
    }
}

/// The `φ`-adjoint `Φ^♯` of the dynamics, computed by the closed formula
/// `Φ^♯(b) = Φ*(bρ)ρ^{-1}` from the trace dual.
///
/// The candidate satisfies the adjunction identity
/// `φ(a·Φ^♯(b)) = φ(Φ(a)·b)` by construction (re-verified on all basis
/// pairs); it is returned only if it is a ucp map. Failure of complete
/// positivity or unitality means no `φ`-adjoint exists, reported as
/// [`Error::ModularObstruction`]. On success the equivalent modular
/// commutation condition is asserted as a cross-check.
pub fn phi_adjoint(map: &UcpMap, state: &State, tol: f64) -> Result<UcpMap> {
    let algebra = map.algebra();
    if state.algebra() != algebra {
        return Err(Error::AlgebraMismatch);
    }
    if !state.is_faithful(1e-12) {
        return Err(Error::NotFaithful);
    }
    let inv = check_invariance(map, state)?;
    if !inv.pass(tol.max(1e-9)) {
        return Err(Error::NotInvariant {
            residual: inv.max_residual,
        });
    }
    let rho = Element::from_blocks(algebra, state.densities().to_vec())?;
    let rho_inv = Element::from_blocks(algebra, state.density_fn(|l| c(1.0 / l))?)?;
    let superop_sharp = algebra
        .right_mult_superop(&rho_inv)
        .mul(&map.trace_dual_superop())
        .mul(&algebra.right_mult_superop(&rho));

    // Adjunction identity on all basis pairs.
    let t = algebra.total_dim();
    let mut adj_resid = 0.0f64;
    for i in 0..t {
        let a = algebra.basis_element(i);
        let fa = map.apply(&a)?;
        for j in 0..t {
            let b = algebra.basis_element(j);
            let sharp_b = algebra.element_from_coords(&superop_sharp.mul_vec(&b.coords()));
            let lhs = state.eval(&a.mul(&sharp_b)?);
            let rhs = state.eval(&fa.mul(&b)?);
            adj_resid = adj_resid.max((lhs - rhs).norm());
        }
    }
    if adj_resid > (tol * 100.0).max(1e-9) {
        return Err(Error::CertificationFailed {
            what: "adjunction identity",
            residual: adj_resid,
        });
    }

    let sharp = match UcpMap::from_superop(algebra, superop_sharp, tol) {
        Ok(m) => m,
        Err(Error::NotUnital { residual }) => {
            return Err(Error::ModularObstruction {
                detail: alloc::format!("adjoint candidate is not unital (residual {residual:.3e})"),
            })
        }
        Err(Error::NotCp { min_eigenvalue, .. }) => {
            return Err(Error::ModularObstruction {
                detail: alloc::format!(
                    "adjoint candidate is not completely positive (Choi eigenvalue {min_eigenvalue:.3e})"
                ),
            })
        }
        Err(e) => return Err(e),
    };

    // Cross-check the equivalent condition: the transfer contraction
    // commutes with the modular pair.
    let g = gns_construct(algebra, state, tol)?;
    let u = transfer_contraction(&g, map, state, tol)?;
    let pair = modular_pair(&g, state, tol)?;
    let report = modular_commutation_check(&u, &pair, &DEFAULT_T_SAMPLES);
    if !report.pass((tol * 1000.0).max(1e-7)) {
        return Err(Error::CertificationFailed {
            what: "modular commutation for an existing adjoint",
            residual: report.max_residual(),
        });
    }
    Ok(sharp)
}

/// Bundle used by callers that need everything at once.
#[derive(Debug, Clone)]
pub struct GnsSystem {
    pub gns: GnsData,
    pub transfer: CMatrix,
}

/// Convenience: GNS plus transfer contraction for an invariant pair.
pub fn gns_system(map: &UcpMap, state: &State, tol: f64) -> Result<GnsSystem> {
    let gns = gns_construct(map.algebra(), state, tol)?;
    let transfer = transfer_contraction(&gns, map, state, tol)?;
    Ok(GnsSystem { gns, transfer })
}

/// Checks that the map `a ↦ π_φ(a)` and the rank data of the transfer
/// contraction witness an isometry exactly when `Φ` is multiplicative on the
/// support; used as a cross-check between modules.
pub fn transfer_isometry_residual(u: &CMatrix) -> f64 {
    let n = u.cols();
    u.adjoint().mul(u).dist(&CMatrix::identity(n))
}

/// Rank of the span of `{X_j Ω}` for the operators of a subspace; helper for
/// cyclicity questions.
pub fn orbit_rank(space: &Subspace, dim: usize, omega: &[C64], tol: f64) -> Result<usize> {
    let cols: Vec<Vec<C64>> = (0..space.dim())
        .map(|j| CMatrix::from_coords(dim, dim, &space.basis_vector(j)).mul_vec(omega))
        .collect();
    rank_with_tol(&CMatrix::from_cols(&cols), tol)
}

#[allow(unused_imports)]
pub(crate) use alloc::format;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::random_element;
    use crate::instances;
    use crate::numerics::ci;

    fn m2() -> Algebra {
        Algebra::full(2)
    }

    #[test]
    fn invariance_examples() {
        let alg = m2();
        let id = UcpMap::identity(&alg);
        let tr = State::tracial(&alg);
        assert!(check_invariance(&id, &tr).unwrap().max_residual < 1e-15);

        // Mixtures of unitary conjugations preserve the trace.
        let mix = instances::random_unitary_mix(&alg, 1, 3).unwrap();
        assert!(check_invariance(&mix, &tr).unwrap().max_residual < 1e-12);

        // ad_{σx} does not preserve diag(2/3, 1/3): residual 1/3 at E₀₀.
        let sx = alg.element_from_coords(&[c(0.0), c(1.0), c(1.0), c(0.0)]);
        let ad_sx = instances::ad_unitary(&alg, &sx).unwrap();
        let rho = instances::diag_qubit_state(2.0 / 3.0).unwrap();
        let rep = check_invariance(&ad_sx, &rho).unwrap();
        assert!((rep.max_residual - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn gns_dimensions() {
        // Faithful tracial state on M₂: dim = total_dim = 4.
        let alg = m2();
        let g = gns_construct(&alg, &State::tracial(&alg), 1e-10).unwrap();
        assert_eq!(g.dim(), 4);

        // Non-faithful (1,0) on C²: φ(a*a) = |a₁|², dim 1.
        let c2 = Algebra::diagonal(2);
        let st = State::classical(&c2, &[1.0, 0.0], 1e-10).unwrap();
        let g = gns_construct(&c2, &st, 1e-10).unwrap();
        assert_eq!(g.dim(), 1);

        // M₂⊕M₂ with φ(x⊕y) = tr(x)/2: the second block is null, dim 4,
        // and the support 1⊕0 is central.
        let (_, state) = instances::copy_endomorphism_m2m2().unwrap();
        let alg2 = state.algebra().clone();
        let g = gns_construct(&alg2, &state, 1e-10).unwrap();
        assert_eq!(g.dim(), 4);
        let supp = state.support(1e-10).unwrap();
        assert!(supp.block(0).dist(&CMatrix::identity(2)) < 1e-12);
        assert!(supp.block(1).fro_norm() < 1e-12);
    }

    #[test]
    fn gns_reproduces_state_on_random_elements() {
        let alg = m2();
        let st = instances::diag_qubit_state(2.0 / 3.0).unwrap();
        let g = gns_construct(&alg, &st, 1e-10).unwrap();
        for seed in 0..20 {
            let a = random_element(&alg, seed);
            let lhs = st.eval(&a);
            let rhs = inner(g.omega(), &g.rep(&a).mul_vec(g.omega()));
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn transfer_contraction_examples() {
        let alg = m2();
        let tr = State::tracial(&alg);
        let g = gns_construct(&alg, &tr, 1e-10).unwrap();

        let id = UcpMap::identity(&alg);
        let u = transfer_contraction(&g, &id, &tr, 1e-10).unwrap();
        assert!(u.dist(&CMatrix::identity(4)) < 1e-12);

        // Automorphism: U is unitary.
        let w = instances::qubit_unitary_phase();
        let ad_w = instances::ad_unitary(&alg, &w).unwrap();
        let u = transfer_contraction(&g, &ad_w, &tr, 1e-10).unwrap();
        assert!(u.adjoint().mul(&u).dist(&CMatrix::identity(4)) < 1e-11);
        assert!(u.mul(&u.adjoint()).dist(&CMatrix::identity(4)) < 1e-11);

        // Averaging on C²: U² = U and UΩ = Ω.
        let (avg, uniform) = instances::averaging_c2().unwrap();
        let g2 = gns_construct(avg.algebra(), &uniform, 1e-10).unwrap();
        let u = transfer_contraction(&g2, &avg, &uniform, 1e-10).unwrap();
        assert!(u.mul(&u).dist(&u) < 1e-12);
        let uo = u.mul_vec(g2.omega());
        assert!(
            vec_norm(
                &uo.iter()
                    .zip(g2.omega())
                    .map(|(a, b)| a - b)
                    .collect::<Vec<_>>()
            ) < 1e-12
        );
    }

    #[test]
    fn transfer_contraction_requires_invariance() {
        let alg = m2();
        let sx = alg.element_from_coords(&[c(0.0), c(1.0), c(1.0), c(0.0)]);
        let ad_sx = instances::ad_unitary(&alg, &sx).unwrap();
        let rho = instances::diag_qubit_state(2.0 / 3.0).unwrap();
        let g = gns_construct(&alg, &rho, 1e-10).unwrap();
        assert!(matches!(
            transfer_contraction(&g, &ad_sx, &rho, 1e-10),
            Err(Error::NotInvariant { .. })
        ));
    }

    #[test]
    fn induced_w_system_identity_and_depolarizing() {
        let alg = m2();
        let tr = State::tracial(&alg);
        let g = gns_construct(&alg, &tr, 1e-10).unwrap();

        let id = UcpMap::identity(&alg);
        let u = transfer_contraction(&g, &id, &tr, 1e-10).unwrap();
        let w = induce_w_system(&g, &u, 1e-10).unwrap();
        assert_eq!(w.dim(), 4);
        assert!(w.phi_dot.dist(&CMatrix::identity(4)) < 1e-10);

        let dep = instances::depolarizing_m2();
        let u = transfer_contraction(&g, &dep, &tr, 1e-10).unwrap();
        let w = induce_w_system(&g, &u, 1e-10).unwrap();
        // Φ_• is idempotent (the depolarizing projection at the W* level)
        // and φ_• matches ⟨Ω, XΩ⟩.
        assert!(w.phi_dot.mul(&w.phi_dot).dist(&w.phi_dot) < 1e-10);
        for j in 0..w.dim() {
            let x = w.basis_op(j);
            let expect = inner(g.omega(), &x.mul_vec(g.omega()));
            assert!((w.state_dot[j] - expect).norm() < 1e-12);
        }
        // Defining relation Φ_•(X)Ω = U X Ω on the basis.
        for j in 0..w.dim() {
            let x = w.basis_op(j);
            let lhs = w.phi_dot_apply(&x, 1).mul_vec(g.omega());
            let rhs = u.mul_vec(&x.mul_vec(g.omega()));
            assert!(
                vec_norm(&lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect::<Vec<_>>()) < 1e-10
            );
        }
    }

    #[test]
    fn induced_w_system_block_state_passes_centrality() {
        let (map, state) = instances::copy_endomorphism_m2m2().unwrap();
        let g = gns_construct(map.algebra(), &state, 1e-10).unwrap();
        let u = transfer_contraction(&g, &map, &state, 1e-10).unwrap();
        assert!(induce_w_system(&g, &u, 1e-10).is_ok());
    }

    #[test]
    fn induced_w_system_rejects_non_central_support() {
        // A pure state on M₂ has support E₀₀, which is not central; the GNS
        // representation is irreducible and Ω is not cyclic for the
        // commutant C1.
        let alg = m2();
        let st = State::new(&alg, alloc::vec![CMatrix::diag(&[1.0, 0.0])], 1e-10).unwrap();
        let g = gns_construct(&alg, &st, 1e-10).unwrap();
        assert_eq!(g.dim(), 2);
        let id = UcpMap::identity(&alg);
        let u = transfer_contraction(&g, &id, &st, 1e-10).unwrap();
        assert!(matches!(
            induce_w_system(&g, &u, 1e-10),
            Err(Error::NotSeparating { .. })
        ));
    }

    #[test]
    fn modular_pair_tracial_case() {
        let alg = m2();
        let tr = State::tracial(&alg);
        let g = gns_construct(&alg, &tr, 1e-10).unwrap();
        let pair = modular_pair(&g, &tr, 1e-10).unwrap();
        assert!(pair.delta.dist(&CMatrix::identity(4)) < 1e-12);
        // J(embed a) = embed(a*).
        for i in 0..4 {
            let e = alg.basis_element(i);
            let lhs = pair.apply_j(&g.embed(&e));
            let rhs = g.embed(&e.star());
            assert!(
                vec_norm(&lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect::<Vec<_>>()) < 1e-12
            );
        }
    }

    #[test]
    fn modular_pair_biased_spectrum() {
        let alg = m2();
        let st = instances::diag_qubit_state(2.0 / 3.0).unwrap();
        let g = gns_construct(&alg, &st, 1e-10).unwrap();
        let pair = modular_pair(&g, &st, 1e-10).unwrap();
        let eig = herm_eig(&pair.delta, 1e-10).unwrap();
        let expect = [0.5, 1.0, 1.0, 2.0];
        for (l, e) in eig.eigenvalues.iter().zip(&expect) {
            assert!((l - e).abs() < 1e-10, "spectrum {:?}", eig.eigenvalues);
        }
        // JΔJ = Δ^{-1}.
        let jdj = pair
            .conj_unitary
            .mul(&pair.delta.conj())
            .mul(&pair.conj_unitary.conj());
        assert!(jdj.dist(&pair.delta_pow(-1.0)) < 1e-10);
    }

    #[test]
    fn modular_pair_refuses_non_faithful() {
        let c2 = Algebra::diagonal(2);
        let st = State::classical(&c2, &[1.0, 0.0], 1e-10).unwrap();
        let g = gns_construct(&c2, &st, 1e-10).unwrap();
        assert!(matches!(
            modular_pair(&g, &st, 1e-10),
            Err(Error::NotFaithful)
        ));
    }

    #[test]
    fn modular_and_adjoint_with_non_diagonal_density() {
        // ρ = W·diag(0.7, 0.3)·W* for a generic unitary W; dephasing in the
        // eigenbasis of ρ preserves the state, commutes with its modular
        // data, and is its own adjoint.
        let alg = m2();
        let w = instances::qubit_unitary_phase();
        let w_mat = w.block(0).clone();
        let rho = w_mat.mul(&CMatrix::diag(&[0.7, 0.3])).mul(&w_mat.adjoint());
        let st = State::new(&alg, alloc::vec![rho], 1e-10).unwrap();
        assert!(st.is_faithful(1e-6));

        let deph = instances::dephasing_m2();
        let ad_w = instances::ad_unitary(&alg, &w).unwrap();
        let ad_w_star = instances::ad_unitary(&alg, &w.star()).unwrap();
        let rotated_deph = UcpMap::from_superop(
            &alg,
            ad_w.superop().mul(deph.superop()).mul(ad_w_star.superop()),
            1e-10,
        )
        .unwrap();
        assert!(check_invariance(&rotated_deph, &st).unwrap().max_residual < 1e-12);

        // The oracle comparison and the closed-form identities run inside.
        let g = gns_construct(&alg, &st, 1e-10).unwrap();
        let (pair, closed, oracle) = modular_pair_diagnostics(&g, &st, 1e-10).unwrap();
        assert!(
            closed < 1e-10 && oracle < 1e-10,
            "{closed:.3e} / {oracle:.3e}"
        );

        let u = transfer_contraction(&g, &rotated_deph, &st, 1e-10).unwrap();
        assert!(modular_commutation_check(&u, &pair, &DEFAULT_T_SAMPLES).pass(1e-9));
        let sharp = phi_adjoint(&rotated_deph, &st, 1e-10).unwrap();
        assert!(sharp.superop().dist(rotated_deph.superop()) < 1e-10);

        // A generic perturbation of the state-preparation channel for this
        // state is still obstructed.
        let bad = instances::perturbed_invariant_qubit_ucp(&st, 5, 0.05).unwrap();
        assert!(matches!(
            phi_adjoint(&bad, &st, 1e-10),
            Err(Error::ModularObstruction { .. })
        ));
    }

    #[test]
    fn modular_commutation_tracial_always_passes() {
        let alg = m2();
        let tr = State::tracial(&alg);
        let g = gns_construct(&alg, &tr, 1e-10).unwrap();
        let pair = modular_pair(&g, &tr, 1e-10).unwrap();
        let mix = instances::random_unitary_mix(&alg, 5, 3).unwrap();
        let u = transfer_contraction(&g, &mix, &tr, 1e-10).unwrap();
        let report = modular_commutation_check(&u, &pair, &DEFAULT_T_SAMPLES);
        assert!(report.pass(1e-10), "residual {}", report.max_residual());
    }

    #[test]
    fn modular_commutation_dephasing_passes_and_generic_fails() {
        let alg = m2();
        let st = instances::diag_qubit_state(2.0 / 3.0).unwrap();
        let g = gns_construct(&alg, &st, 1e-10).unwrap();
        let pair = modular_pair(&g, &st, 1e-10).unwrap();

        let deph = instances::dephasing_m2();
        let u = transfer_contraction(&g, &deph, &st, 1e-10).unwrap();
        assert!(modular_commutation_check(&u, &pair, &DEFAULT_T_SAMPLES).pass(1e-10));

        // Seeded search: a φ-invariant perturbation that breaks modular
        // commutation.
        let bad = instances::perturbed_invariant_qubit_ucp(&st, 3, 0.05).unwrap();
        let u = transfer_contraction(&g, &bad, &st, 1e-10).unwrap();
        let report = modular_commutation_check(&u, &pair, &DEFAULT_T_SAMPLES);
        assert!(
            report.max_residual() > 1e-6,
            "residual {}",
            report.max_residual()
        );
    }

    #[test]
    fn phi_adjoint_examples() {
        let alg = m2();
        // Identity: Φ^♯ = id.
        let tr = State::tracial(&alg);
        let id = UcpMap::identity(&alg);
        let sharp = phi_adjoint(&id, &tr, 1e-10).unwrap();
        assert!(sharp.superop().dist(&CMatrix::identity(4)) < 1e-12);

        // Tracial mixture of conjugations: Φ^♯ = Σ p_i ad_{U_i*}; verified
        // through the adjunction identity against the trace dual.
        let mix = instances::random_unitary_mix(&alg, 2, 3).unwrap();
        let sharp = phi_adjoint(&mix, &tr, 1e-10).unwrap();
        assert!(sharp.superop().dist(&mix.trace_dual_superop()) < 1e-10);

        // Dephasing in the eigenbasis of ρ is self-adjoint.
        let st = instances::diag_qubit_state(2.0 / 3.0).unwrap();
        let deph = instances::dephasing_m2();
        let sharp = phi_adjoint(&deph, &st, 1e-10).unwrap();
        assert!(sharp.superop().dist(deph.superop()) < 1e-10);
    }

    #[test]
    fn phi_adjoint_adjunction_and_invariance() {
        let alg = m2();
        let st = instances::diag_qubit_state(0.7).unwrap();
        let map = instances::modular_commuting_qubit_ucp(&st, 4).unwrap();
        let sharp = phi_adjoint(&map, &st, 1e-10).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let a = alg.basis_element(i);
                let b = alg.basis_element(j);
                let lhs = st.eval(&a.mul(&sharp.apply(&b).unwrap()).unwrap());
                let rhs = st.eval(&map.apply(&a).unwrap().mul(&b).unwrap());
                assert!((lhs - rhs).norm() < 1e-10);
            }
        }
        // φ∘Φ^♯ = φ (adjunction with a = 1).
        assert!(check_invariance(&sharp, &st).unwrap().max_residual < 1e-10);
    }

    #[test]
    fn phi_adjoint_obstruction() {
        let st = instances::diag_qubit_state(2.0 / 3.0).unwrap();
        let bad = instances::perturbed_invariant_qubit_ucp(&st, 3, 0.05).unwrap();
        assert!(matches!(
            phi_adjoint(&bad, &st, 1e-10),
            Err(Error::ModularObstruction { .. })
        ));
    }

    #[test]
    fn phi_adjoint_equivalence_family() {
        // Adjoint-existence equivalence: the adjoint exists exactly when the
        // transfer contraction commutes with the modular data; both outcomes
        // appear in the seeded family.
        let st = instances::diag_qubit_state(2.0 / 3.0).unwrap();
        let alg = st.algebra().clone();
        let g = gns_construct(&alg, &st, 1e-10).unwrap();
        let pair = modular_pair(&g, &st, 1e-10).unwrap();
        let mut existing = 0usize;
        let mut obstructed = 0usize;
        for seed in 0..30 {
            let map = if seed % 2 == 0 {
                instances::modular_commuting_qubit_ucp(&st, seed).unwrap()
            } else {
                instances::perturbed_invariant_qubit_ucp(&st, seed, 0.05).unwrap()
            };
            let u = transfer_contraction(&g, &map, &st, 1e-10).unwrap();
            let commutes = modular_commutation_check(&u, &pair, &DEFAULT_T_SAMPLES).pass(1e-8);
            match phi_adjoint(&map, &st, 1e-10) {
                Ok(_) => {
                    existing += 1;
                    assert!(
                        commutes,
                        "adjoint exists but commutation fails (seed {seed})"
                    );
                }
                Err(Error::ModularObstruction { .. }) => {
                    obstructed += 1;
                    assert!(
                        !commutes,
                        "obstruction but commutation passes (seed {seed})"
                    );
                }
                Err(e) => panic!("unexpected error: {e}"),
            }
        }
        assert!(
            existing >= 10 && obstructed >= 10,
            "{existing} / {obstructed}"
        );
    }

    #[test]
    fn transfer_isometry_iff_multiplicative_cross_check() {
        let alg = m2();
        let tr = State::tracial(&alg);
        let g = gns_construct(&alg, &tr, 1e-10).unwrap();
        let w = instances::qubit_unitary_phase();
        let ad_w = instances::ad_unitary(&alg, &w).unwrap();
        let u = transfer_contraction(&g, &ad_w, &tr, 1e-10).unwrap();
        assert!(transfer_isometry_residual(&u) < 1e-10);
        assert!(ad_w.is_multiplicative(1e-10));

        let dep = instances::depolarizing_m2();
        let u = transfer_contraction(&g, &dep, &tr, 1e-10).unwrap();
        assert!(transfer_isometry_residual(&u) > 1e-2);
        assert!(!dep.is_multiplicative(1e-10));
    }

    #[test]
    fn state_validation() {
        let alg = m2();
        let not_psd = CMatrix::diag(&[1.5, -0.5]);
        assert!(State::new(&alg, alloc::vec![not_psd], 1e-10).is_err());
        let wrong_trace = CMatrix::diag(&[1.0, 1.0]);
        assert!(State::new(&alg, alloc::vec![wrong_trace], 1e-10).is_err());
        let complex_ok = CMatrix::from_rows(&[&[c(0.5), ci(0.1, 0.2)], &[ci(0.1, -0.2), c(0.5)]]);
        assert!(State::new(&alg, alloc::vec![complex_ok], 1e-10).is_ok());
    }
}
