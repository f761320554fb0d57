//! A small catalog of concrete dynamical systems.
//!
//! These are the systems exercised across the test suites and bundled with
//! the command-line front end: qubit channels, classical chains, block
//! endomorphisms, and two seeded families of state-preserving qubit maps —
//! one built to commute with the modular data of a biased state, one built
//! to break that commutation generically.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{random_element, Algebra, Element};
use crate::channel::UcpMap;
use crate::gns::State;
use crate::numerics::{c, ci, kernel_basis, orthonormalize, CMatrix, C64};
use crate::{Error, Result};

/// The depolarizing channel `a ↦ tr(a)/2 · 1` on `M₂`.
pub fn depolarizing_m2() -> UcpMap {
    let alg = Algebra::full(2);
    let one = alg.unit().coords();
    let mut sup = CMatrix::zeros(4, 4);
    for i in 0..4 {
        let e = alg.basis_element(i);
        let t = e.trace() * c(0.5);
        for (r, z) in one.iter().enumerate() {
            sup[(r, i)] = t * z;
        }
    }
    UcpMap::from_superop(&alg, sup, 1e-12).expect("depolarizing is ucp")
}

/// The dephasing channel `a ↦ diag(a)` on `M₂`.
pub fn dephasing_m2() -> UcpMap {
    let alg = Algebra::full(2);
    let sup = CMatrix::diag(&[1.0, 0.0, 0.0, 1.0]);
    UcpMap::from_superop(&alg, sup, 1e-12).expect("dephasing is ucp")
}

/// A fixed qubit unitary with incommensurate eigenvalue phases; the standard
/// automorphism generator in the tests.
pub fn qubit_unitary_phase() -> Element {
    let alg = Algebra::full(2);
    let (t, a, b) = (0.61f64, 0.37f64, -1.1f64);
    let (ct, st) = (libm::cos(t), libm::sin(t));
    let ea = ci(libm::cos(a), libm::sin(a));
    let eb = ci(libm::cos(b), libm::sin(b));
    alg.element_from_coords(&[ea * c(ct), eb * c(-st), ea * c(st), eb * c(ct)])
}

/// Conjugation `a ↦ u a u*` by a unitary element.
pub fn ad_unitary(algebra: &Algebra, u: &Element) -> Result<UcpMap> {
    if u.algebra() != algebra {
        return Err(Error::AlgebraMismatch);
    }
    let unitarity = u.star().mul(u)?.sub(&algebra.unit())?.hs_norm();
    if unitarity > 1e-10 {
        return Err(Error::PreconditionFailed(alloc::format!(
            "conjugating element is not unitary (residual {unitarity:.3e})"
        )));
    }
    let sup = algebra
        .left_mult_superop(u)
        .mul(&algebra.right_mult_superop(&u.star()));
    UcpMap::from_superop(algebra, sup, 1e-10)
}

/// Deterministic Haar-like unitary from a seeded Gram–Schmidt.
pub fn random_unitary(d: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let m = CMatrix::from_fn(d, d, |_, _| {
            ci(rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0)
        });
        let cols: Vec<Vec<C64>> = (0..d).map(|j| m.col(j)).collect();
        let q = orthonormalize(&cols, 1e-8);
        if q.cols() == d {
            return q;
        }
        // Rank-deficient draw (probability ~0); redraw deterministically.
    }
}

/// Blockwise random unitary element.
pub fn random_unitary_element(algebra: &Algebra, seed: u64) -> Element {
    let blocks: Vec<CMatrix> = algebra
        .block_dims()
        .iter()
        .enumerate()
        .map(|(b, &d)| random_unitary(d, seed.wrapping_mul(1000).wrapping_add(b as u64)))
        .collect();
    Element::from_blocks(algebra, blocks).expect("shapes match")
}

/// Random mixture `Σ pᵢ ad_{Uᵢ}` of unitary conjugations; preserves every
/// tracial state.
pub fn random_unitary_mix(algebra: &Algebra, seed: u64, terms: usize) -> Result<UcpMap> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights: Vec<f64> = (0..terms).map(|_| rng.gen::<f64>() + 0.1).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    let t = algebra.total_dim();
    let mut sup = CMatrix::zeros(t, t);
    for (i, &w) in weights.iter().enumerate() {
        let u = random_unitary_element(algebra, seed.wrapping_mul(7919).wrapping_add(i as u64));
        let term = algebra
            .left_mult_superop(&u)
            .mul(&algebra.right_mult_superop(&u.star()));
        sup = sup.add(&term.scale(c(w)));
    }
    UcpMap::from_superop(algebra, sup, 1e-10)
}

/// The averaging chain on `C²` with its uniform invariant state.
pub fn averaging_c2() -> Result<(UcpMap, State)> {
    let alg = Algebra::diagonal(2);
    let p = CMatrix::from_rows(&[&[c(0.5), c(0.5)], &[c(0.5), c(0.5)]]);
    let map = UcpMap::from_stochastic(&alg, &p, 1e-12)?;
    let state = State::classical(&alg, &[0.5, 0.5], 1e-12)?;
    Ok((map, state))
}

/// The swap chain on `C²` with its uniform invariant state.
pub fn swap_c2() -> Result<(UcpMap, State)> {
    permutation_classical(&[1, 0])
}

/// The cyclic shift on `C³` with its uniform invariant state.
pub fn cycle_c3() -> Result<(UcpMap, State)> {
    permutation_classical(&[1, 2, 0])
}

/// Classical permutation dynamics `f ↦ f∘σ` with the uniform state.
pub fn permutation_classical(perm: &[usize]) -> Result<(UcpMap, State)> {
    let n = perm.len();
    let alg = Algebra::diagonal(n);
    let mut p = CMatrix::zeros(n, n);
    for (i, &j) in perm.iter().enumerate() {
        if j >= n {
            return Err(Error::PreconditionFailed(
                "permutation index out of range".into(),
            ));
        }
        p[(i, j)] = c(1.0);
    }
    let map = UcpMap::from_stochastic(&alg, &p, 1e-12)?;
    let state = State::classical(&alg, &vec![1.0 / n as f64; n], 1e-12)?;
    Ok((map, state))
}

/// The copy endomorphism `x⊕y ↦ x⊕x` on `M₂⊕M₂` with the non-faithful
/// invariant state `φ(x⊕y) = tr(x)/2`.
pub fn copy_endomorphism_m2m2() -> Result<(UcpMap, State)> {
    let alg = Algebra::new(&[2, 2])?;
    let t = alg.total_dim();
    let mut sup = CMatrix::zeros(t, t);
    for r in 0..2 {
        for s in 0..2 {
            let src = alg.coord_index(0, r, s);
            sup[(alg.coord_index(0, r, s), src)] = c(1.0);
            sup[(alg.coord_index(1, r, s), src)] = c(1.0);
        }
    }
    let map = UcpMap::from_superop(&alg, sup, 1e-12)?;
    let densities = vec![CMatrix::identity(2).scale(c(0.5)), CMatrix::zeros(2, 2)];
    let state = State::new(&alg, densities, 1e-12)?;
    Ok((map, state))
}

/// Qubit state `diag(p, 1−p)`.
pub fn diag_qubit_state(p: f64) -> Result<State> {
    let alg = Algebra::full(2);
    State::new(&alg, vec![CMatrix::diag(&[p, 1.0 - p])], 1e-12)
}

/// Stationary distribution of a row-stochastic matrix, via the kernel of
/// `Pᵀ − I`.
pub fn stationary_distribution(p: &CMatrix, tol: f64) -> Result<Vec<f64>> {
    let n = p.rows();
    let m = p.transpose().sub(&CMatrix::identity(n));
    let kernel = kernel_basis(&m, tol.max(1e-10))?;
    if kernel.cols() == 0 {
        return Err(Error::PreconditionFailed(
            "stochastic matrix has no stationary vector".into(),
        ));
    }
    let v = kernel.col(0);
    let total: C64 = v.iter().sum();
    if total.norm() < 1e-12 {
        return Err(Error::PreconditionFailed(
            "stationary vector sums to zero".into(),
        ));
    }
    let mut probs = Vec::with_capacity(n);
    for z in &v {
        let w = z / total;
        if w.im.abs() > 1e-9 || w.re < -1e-9 {
            return Err(Error::PreconditionFailed(
                "stationary vector is not a distribution".into(),
            ));
        }
        probs.push(w.re.max(0.0));
    }
    Ok(probs)
}

/// Random strictly positive row-stochastic dynamics on a diagonal algebra,
/// paired with its (unique) stationary state.
pub fn random_stochastic_system(algebra: &Algebra, seed: u64) -> Result<(UcpMap, State)> {
    if algebra.total_dim() != algebra.block_count() {
        return Err(Error::PreconditionFailed("need a diagonal algebra".into()));
    }
    let n = algebra.block_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = CMatrix::zeros(n, n);
    for r in 0..n {
        let row: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 0.05).collect();
        let total: f64 = row.iter().sum();
        for (col, w) in row.iter().enumerate() {
            p[(r, col)] = c(w / total);
        }
    }
    let probs = stationary_distribution(&p, 1e-10)?;
    let map = UcpMap::from_stochastic(algebra, &p, 1e-10)?;
    let state = State::classical(algebra, &probs, 1e-9)?;
    Ok((map, state))
}

/// A seeded invariant system on an arbitrary algebra: stochastic dynamics
/// with its stationary state on diagonal algebras, a unitary mixture with
/// the tracial state otherwise.
pub fn random_invariant_system(algebra: &Algebra, seed: u64) -> Result<(UcpMap, State)> {
    if algebra.total_dim() == algebra.block_count() {
        random_stochastic_system(algebra, seed)
    } else {
        Ok((
            random_unitary_mix(algebra, seed, 3)?,
            State::tracial(algebra),
        ))
    }
}

/// The state-preparation channel `a ↦ φ(a)·1`; ucp for any state, invariant
/// for `φ`, and commuting with the modular data of `φ`.
pub fn fix_state_channel(state: &State) -> Result<UcpMap> {
    let alg = state.algebra().clone();
    let one = alg.unit().coords();
    let f = state.functional();
    let t = alg.total_dim();
    let mut sup = CMatrix::zeros(t, t);
    for i in 0..t {
        for (r, z) in one.iter().enumerate() {
            sup[(r, i)] = f[i] * z;
        }
    }
    UcpMap::from_superop(&alg, sup, 1e-10)
}

/// Seeded qubit ucp map preserving the diagonal state and commuting with its
/// modular data: a random convex mixture of the state-preparation channel,
/// dephasing, and conjugations by diagonal-phase unitaries.
pub fn modular_commuting_qubit_ucp(state: &State, seed: u64) -> Result<UcpMap> {
    let alg = state.algebra().clone();
    if alg.block_dims() != [2] {
        return Err(Error::PreconditionFailed("qubit family".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights: Vec<f64> = (0..4).map(|_| rng.gen::<f64>() + 0.05).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    let theta1 = rng.gen::<f64>() * 6.0;
    let theta2 = rng.gen::<f64>() * 6.0;
    let u = alg.element_from_coords(&[
        ci(libm::cos(theta1), libm::sin(theta1)),
        c(0.0),
        c(0.0),
        ci(libm::cos(theta2), libm::sin(theta2)),
    ]);
    let parts = [
        fix_state_channel(state)?,
        dephasing_m2(),
        ad_unitary(&alg, &u)?,
        UcpMap::identity(&alg),
    ];
    let mut sup = CMatrix::zeros(4, 4);
    for (part, &w) in parts.iter().zip(&weights) {
        sup = sup.add(&part.superop().scale(c(w)));
    }
    UcpMap::from_superop(&alg, sup, 1e-10)
}

/// Seeded qubit ucp map preserving the state but generically *not*
/// commuting with its modular data: the state-preparation channel plus a
/// small random invariance-preserving perturbation.
///
/// The perturbation direction is a random Hermiticity-preserving map,
/// linearly corrected to kill both `L(1)` and `φ∘L`, and scaled so that the
/// perturbed Choi matrix stays at safe distance inside the positive cone.
pub fn perturbed_invariant_qubit_ucp(state: &State, seed: u64, strength: f64) -> Result<UcpMap> {
    let alg = state.algebra().clone();
    if alg.block_dims() != [2] {
        return Err(Error::PreconditionFailed("qubit family".into()));
    }
    if !(0.0..=0.5).contains(&strength) {
        return Err(Error::PreconditionFailed(
            "strength must lie in [0, 0.5]".into(),
        ));
    }
    let base = fix_state_channel(state)?;
    // Random Hermiticity-preserving direction K(a) = Σ c_i A_i a A_i*.
    let t = alg.total_dim();
    let mut k_sup = CMatrix::zeros(t, t);
    for i in 0..3u64 {
        let a = random_element(&alg, seed.wrapping_mul(31).wrapping_add(i));
        let sign = if (seed + i).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        let term = alg
            .left_mult_superop(&a)
            .mul(&alg.right_mult_superop(&a.star()));
        k_sup = k_sup.add(&term.scale(c(sign)));
    }
    // Corrections: L(a) = K(a) − φ(K(a))·1 − φ(a)[K(1) − φ(K(1))·1].
    let f = state.functional();
    let one = alg.unit().coords();
    let k_one = k_sup.mul_vec(&one);
    let phi_k_one: C64 = f.iter().zip(&k_one).map(|(a, b)| a * b).sum();
    let corr: Vec<C64> = k_one
        .iter()
        .zip(&one)
        .map(|(kz, oz)| kz - phi_k_one * oz)
        .collect();
    let mut l_sup = CMatrix::zeros(t, t);
    for i in 0..t {
        let col = k_sup.col(i);
        let phi_col: C64 = f.iter().zip(&col).map(|(a, b)| a * b).sum();
        for r in 0..t {
            l_sup[(r, i)] = col[r] - phi_col * one[r] - f[i] * corr[r];
        }
    }
    // The Choi rearrangement preserves the Frobenius norm, so ‖L‖_F bounds
    // the Choi perturbation; the base Choi has least eigenvalue λ_min(ρ).
    let lmin = {
        let eig = crate::numerics::herm_eig(&state.densities()[0].hermitize(), 1e-10)?;
        eig.eigenvalues.first().copied().unwrap_or(0.0)
    };
    let l_norm = l_sup.fro_norm();
    if l_norm < 1e-12 {
        return Err(Error::PreconditionFailed(
            "degenerate perturbation draw".into(),
        ));
    }
    let eps = strength * lmin / l_norm;
    let sup = base.superop().add(&l_sup.scale(c(eps)));
    UcpMap::from_superop(&alg, sup, 1e-9)
}
