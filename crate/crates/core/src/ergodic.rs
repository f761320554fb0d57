//! Correlation sequences and ergodic classification of an invariant system,
//! with the transfer of both properties to the reversible dilation.
//!
//! Classification is spectral: the system is ergodic exactly when the fixed
//! space of the transfer superoperator is one-dimensional, and weakly mixing
//! when no other eigenvalue sits on the unit circle. A brute-force Cesàro
//! average over the coordinate basis cross-checks the spectral verdict at
//! finite range; eigenvalues too close to (but off) the unit circle are
//! flagged inconclusive instead of classified, since no finite average can
//! resolve them.

use alloc::vec::Vec;

use crate::channel::UcpMap;
use crate::dilation::DilationData;
use crate::gns::{check_invariance, State};
use crate::numerics::{c, eigenvalues, inner, op_norm, rank_with_tol, CMatrix, C64};
use crate::{Error, Result};

/// Eigenvalues with `||λ| − 1|` at most this band count as peripheral;
/// double-precision eigensolves on non-normal superoperators do not resolve
/// the circle more finely.
pub const PERIPHERAL_BAND: f64 = 1e-8;

/// Non-peripheral eigenvalues closer to the circle than this (or peripheral
/// ones with arguments too small for the Cesàro range) make the finite-range
/// cross-check unreliable; the report is then marked inconclusive.
pub const GRAY_BAND: f64 = 1e-3;

/// Default Cesàro range for the brute-force cross-check.
pub const DEFAULT_CESARO_RANGE: usize = 10_000;

/// Correlation values `c_k = φ(a·Φ^k(b))` for `0 ≤ k ≤ n`.
pub fn correlation_sequence(
    map: &UcpMap,
    state: &State,
    a: &crate::algebra::Element,
    b: &crate::algebra::Element,
    n: usize,
) -> Result<Vec<C64>> {
    let inv = check_invariance(map, state)?;
    if !inv.pass(1e-9) {
        return Err(Error::NotInvariant {
            residual: inv.max_residual,
        });
    }
    let mut out = Vec::with_capacity(n + 1);
    let mut current = b.clone();
    for _ in 0..=n {
        out.push(state.eval(&a.mul(&current)?));
        current = map.apply(&current)?;
    }
    Ok(out)
}

/// Spectral-plus-Cesàro classification of an invariant system.
#[derive(Debug, Clone)]
pub struct ErgodicReport {
    /// Fixed space of the transfer superoperator is one-dimensional.
    pub ergodic: bool,
    /// Ergodic with no peripheral spectrum besides the eigenvalue 1.
    pub weakly_mixing: bool,
    /// `dim ker(Φ − id)`; at least 1, the unit is always fixed.
    pub fixed_space_dim: usize,
    /// Eigenvalues within [`PERIPHERAL_BAND`] of the unit circle.
    pub peripheral_eigenvalues: Vec<C64>,
    /// Finite-range plain Cesàro residuals
    /// `|avg_k (φ(x_iΦ^k(x_j)) − φ(x_i)φ(x_j))|`, flattened over basis pairs.
    pub cesaro_residuals: Vec<f64>,
    /// Largest plain Cesàro residual.
    pub cesaro_plain_max: f64,
    /// Largest absolute-value Cesàro residual.
    pub cesaro_abs_max: f64,
    /// Peripheral Jordan blocks all have size one.
    pub peripheral_semisimple: bool,
    /// Eigenvalues fell into the unresolvable band; the Cesàro cross-check
    /// was skipped rather than trusted.
    pub inconclusive: bool,
}

impl ErgodicReport {
    /// Verdict of the finite-range Cesàro data alone.
    pub fn cesaro_ergodic(&self) -> bool {
        self.cesaro_plain_max <= GRAY_BAND
    }

    pub fn cesaro_weakly_mixing(&self) -> bool {
        self.cesaro_abs_max <= GRAY_BAND
    }
}

/// Classifies an invariant system as ergodic / weakly mixing.
///
/// Spectral method with a Cesàro cross-check of range `cesaro_n`; when the
/// spectrum is clean (no gray-band eigenvalues) a disagreement between the
/// two routes is an internal error, not a report.
pub fn classify(map: &UcpMap, state: &State, tol: f64, cesaro_n: usize) -> Result<ErgodicReport> {
    let inv = check_invariance(map, state)?;
    if !inv.pass(tol.max(1e-9)) {
        return Err(Error::NotInvariant {
            residual: inv.max_residual,
        });
    }
    let algebra = map.algebra().clone();
    let t = algebra.total_dim();
    let s = map.superop();

    let spectrum = eigenvalues(s)?;
    let fixed_space_dim = t - rank_with_tol(&s.sub(&CMatrix::identity(t)), tol)?;
    let ergodic = fixed_space_dim == 1;
    let peripheral: Vec<C64> = spectrum
        .iter()
        .copied()
        .filter(|l| (l.norm() - 1.0).abs() <= PERIPHERAL_BAND)
        .collect();
    let weakly_mixing = ergodic && peripheral.len() == 1;

    // Semisimplicity of the peripheral spectrum: rank(S − λ) = rank((S − λ)²).
    let mut peripheral_semisimple = true;
    let mut seen: Vec<C64> = Vec::new();
    for &l in &peripheral {
        if seen
            .iter()
            .any(|&m| (m - l).norm() < 10.0 * PERIPHERAL_BAND)
        {
            continue;
        }
        seen.push(l);
        let shifted = s.sub(&CMatrix::identity(t).scale(l));
        let r1 = rank_with_tol(&shifted, tol)?;
        let r2 = rank_with_tol(&shifted.mul(&shifted), tol)?;
        if r1 != r2 {
            peripheral_semisimple = false;
        }
    }

    // Gray band: eigenvalues the Cesàro range cannot resolve.
    let min_arg = 50.0 / cesaro_n as f64;
    let mut inconclusive = false;
    for &l in &spectrum {
        let off_circle = (l.norm() - 1.0).abs();
        if off_circle > PERIPHERAL_BAND && off_circle <= GRAY_BAND {
            inconclusive = true;
        }
        if off_circle <= PERIPHERAL_BAND {
            let arg = libm::atan2(l.im, l.re).abs();
            if arg > 1e-12 && arg < min_arg {
                inconclusive = true;
            }
        }
    }

    // Brute-force Cesàro averages over all basis pairs. The pairing weights
    // W[i][m] = φ(x_i x_m) turn the iterated coordinates of Φ^k(x_j) into
    // the correlation row in one matrix-vector product.
    let basis = algebra.basis();
    let mut w = CMatrix::zeros(t, t);
    for i in 0..t {
        for m in 0..t {
            w[(i, m)] = state.eval(&basis[i].mul(&basis[m])?);
        }
    }
    let f: Vec<C64> = basis.iter().map(|e| state.eval(e)).collect();
    let mut cesaro_residuals = Vec::with_capacity(t * t);
    let mut plain_max = 0.0f64;
    let mut abs_max = 0.0f64;
    for j in 0..t {
        let mut coords: Vec<C64> = (0..t)
            .map(|r| if r == j { c(1.0) } else { c(0.0) })
            .collect();
        let mut plain = alloc::vec![C64::new(0.0, 0.0); t];
        let mut absolute = alloc::vec![0.0f64; t];
        for _k in 0..cesaro_n {
            let row = w.mul_vec(&coords);
            for i in 0..t {
                let centered = row[i] - f[i] * f[j];
                plain[i] += centered;
                absolute[i] += centered.norm();
            }
            coords = s.mul_vec(&coords);
        }
        let n_inv = 1.0 / cesaro_n as f64;
        for i in 0..t {
            let plain_avg = (plain[i] * c(n_inv)).norm();
            cesaro_residuals.push(plain_avg);
            plain_max = plain_max.max(plain_avg);
            abs_max = abs_max.max(absolute[i] * n_inv);
        }
    }

    let report = ErgodicReport {
        ergodic,
        weakly_mixing,
        fixed_space_dim,
        peripheral_eigenvalues: peripheral,
        cesaro_residuals,
        cesaro_plain_max: plain_max,
        cesaro_abs_max: abs_max,
        peripheral_semisimple,
        inconclusive,
    };
    if !report.inconclusive
        && (report.cesaro_ergodic() != report.ergodic
            || report.cesaro_weakly_mixing() != report.weakly_mixing)
    {
        return Err(Error::CertificationFailed {
            what: "spectral versus Cesàro classification",
            residual: report.cesaro_plain_max.max(report.cesaro_abs_max),
        });
    }
    Ok(report)
}

/// Transfer of the ergodic properties to the reversible dilation.
#[derive(Debug, Clone)]
pub struct TransferReport {
    /// Max residual of the reduction identity
    /// `φ̂(XΦ̂^k(∂_j(y))) = φ_•(E(X)·Φ_•^{k−j}(π_φ(y)))` over sampled
    /// `(X, y, j, k ≥ j)`.
    pub reduction_residual: f64,
    /// Largest plain Cesàro residual of the dilated correlations.
    pub dilated_plain_max: f64,
    /// Largest absolute Cesàro residual of the dilated correlations.
    pub dilated_abs_max: f64,
    /// Classification of the original system.
    pub original_ergodic: bool,
    pub original_weakly_mixing: bool,
    /// Finite-range dilated verdicts match the original classification.
    pub trend_agrees: bool,
    /// Slack of the approximation step: `max(0, |Δ_Cesàro| − 2ε‖X‖)` when a
    /// big-algebra element is replaced by its projection onto the generated
    /// subalgebra at distance `ε`.
    pub epsilon_bound_residual: f64,
}

/// Verifies the reduction identity behind the ergodicity transfer and
/// compares finite-range Cesàro trends of the dilated system against the
/// original classification.
pub fn dilation_transfer_check(
    d: &DilationData,
    original: &ErgodicReport,
    cesaro_n: usize,
    tol: f64,
) -> Result<TransferReport> {
    let cg = d.cgns();
    let tower = cg.tower();
    let algebra = tower.map().algebra().clone();
    let g = tower.gns();
    let t = algebra.total_dim();
    let budget = d.budget;

    // (i) Reduction identity for X over the big-algebra basis, Y = ∂_j(y)
    // over the coordinate basis, and j ≤ k ≤ budget.
    let mut reduction = 0.0f64;
    for bj in 0..d.big_algebra.dim() {
        let x = CMatrix::from_coords(
            cg.ambient_dim,
            cg.ambient_dim,
            &d.big_algebra.basis_vector(bj),
        );
        let ex = d.expect(&x);
        for i in 0..t {
            let y = algebra.basis_element(i);
            let pi_y = g.rep(&y);
            for j in 0..=budget {
                let y_op = cg.partial(&y, j)?;
                for k in j..=budget {
                    let lhs = d.hat_state(&x.mul(&d.hat_dynamics(&y_op, k)));
                    let downstairs = d.wsystem.phi_dot_apply(&pi_y, k - j);
                    let rhs = inner(g.omega(), &ex.mul(&downstairs).mul_vec(g.omega()));
                    reduction = reduction.max((lhs - rhs).norm());
                }
            }
        }
    }

    // (ii) Finite-range Cesàro trend of the dilated correlations over the
    // big-algebra basis pairs.
    let mut plain_max = 0.0f64;
    let mut abs_max = 0.0f64;
    for bx in 0..d.big_algebra.dim() {
        let x = CMatrix::from_coords(
            cg.ambient_dim,
            cg.ambient_dim,
            &d.big_algebra.basis_vector(bx),
        );
        let phix = d.hat_state(&x);
        for by in 0..d.big_algebra.dim() {
            let y0 = CMatrix::from_coords(
                cg.ambient_dim,
                cg.ambient_dim,
                &d.big_algebra.basis_vector(by),
            );
            let phiy = d.hat_state(&y0);
            let mut y = y0.clone();
            let mut plain = C64::new(0.0, 0.0);
            let mut absolute = 0.0f64;
            for _k in 0..cesaro_n {
                let centered = d.hat_state(&x.mul(&y)) - phix * phiy;
                plain += centered;
                absolute += centered.norm();
                y = d.v.adjoint().mul(&y).mul(&d.v);
            }
            let n_inv = 1.0 / cesaro_n as f64;
            plain_max = plain_max.max((plain * c(n_inv)).norm());
            abs_max = abs_max.max(absolute * n_inv);
        }
    }
    let trend_agrees = (plain_max <= GRAY_BAND) == original.ergodic
        && (abs_max <= GRAY_BAND) == original.weakly_mixing;

    // (iii) The approximation step: replacing Y ∈ 𝔅″ by its projection onto
    // the generated subalgebra moves the Cesàro averages by at most 2ε‖X‖.
    let mut eps_resid = 0.0f64;
    let short = 64.min(cesaro_n);
    for by in 0..d.big_algebra.dim() {
        let y = CMatrix::from_coords(
            cg.ambient_dim,
            cg.ambient_dim,
            &d.big_algebra.basis_vector(by),
        );
        let proj = d.generated_span.project(&y.to_vec());
        let y_eps = CMatrix::from_coords(cg.ambient_dim, cg.ambient_dim, &proj);
        let eps = op_norm(&y.sub(&y_eps));
        for bx in 0..d.big_algebra.dim() {
            let x = CMatrix::from_coords(
                cg.ambient_dim,
                cg.ambient_dim,
                &d.big_algebra.basis_vector(bx),
            );
            let phix = d.hat_state(&x);
            let norm_x = op_norm(&x);
            let mut yk = y.clone();
            let mut yek = y_eps.clone();
            let mut acc = C64::new(0.0, 0.0);
            let mut acc_eps = C64::new(0.0, 0.0);
            for _ in 0..short {
                acc += d.hat_state(&x.mul(&yk)) - phix * d.hat_state(&y);
                acc_eps += d.hat_state(&x.mul(&yek)) - phix * d.hat_state(&y_eps);
                yk = d.v.adjoint().mul(&yk).mul(&d.v);
                yek = d.v.adjoint().mul(&yek).mul(&d.v);
            }
            let n_inv = 1.0 / short as f64;
            let diff = ((acc - acc_eps) * c(n_inv)).norm();
            eps_resid = eps_resid.max((diff - 2.0 * eps * norm_x).max(0.0));
        }
    }
    if eps_resid > tol.max(1e-9) {
        return Err(Error::CertificationFailed {
            what: "approximation bound in the ergodicity transfer",
            residual: eps_resid,
        });
    }

    Ok(TransferReport {
        reduction_residual: reduction,
        dilated_plain_max: plain_max,
        dilated_abs_max: abs_max,
        original_ergodic: original.ergodic,
        original_weakly_mixing: original.weakly_mixing,
        trend_agrees,
        epsilon_bound_residual: eps_resid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Algebra;
    use crate::cgns::DEFAULT_DIMENSION_CAP;
    use crate::dilation::dilation_pipeline;
    use crate::instances;

    #[test]
    fn correlation_examples() {
        // Identity dynamics: a = b, φ(a) = 0, φ(a²) = 1 gives c_k ≡ 1.
        let c2 = Algebra::diagonal(2);
        let id = UcpMap::identity(&c2);
        let uniform = State::classical(&c2, &[0.5, 0.5], 1e-12).unwrap();
        let a = c2.element_from_coords(&[c(1.0), c(-1.0)]);
        let cs = correlation_sequence(&id, &uniform, &a, &a, 8).unwrap();
        for z in &cs {
            assert!((z - c(1.0)).norm() < 1e-12);
        }

        // Swap chain: c_k = (−1)^k.
        let (swap, uniform) = instances::swap_c2().unwrap();
        let cs = correlation_sequence(&swap, &uniform, &a, &a, 8).unwrap();
        for (k, z) in cs.iter().enumerate() {
            let expect = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert!((z - c(expect)).norm() < 1e-12);
        }

        // Averaging chain: c₀ = 1, then 0.
        let (avg, uniform) = instances::averaging_c2().unwrap();
        let cs = correlation_sequence(&avg, &uniform, &a, &a, 8).unwrap();
        assert!((cs[0] - c(1.0)).norm() < 1e-12);
        for z in &cs[1..] {
            assert!(z.norm() < 1e-12);
        }
    }

    #[test]
    fn classify_identity_not_ergodic() {
        let c2 = Algebra::diagonal(2);
        let id = UcpMap::identity(&c2);
        let uniform = State::classical(&c2, &[0.5, 0.5], 1e-12).unwrap();
        let report = classify(&id, &uniform, 1e-10, 2000).unwrap();
        assert!(!report.ergodic);
        assert_eq!(report.fixed_space_dim, 2);
        assert!(report.peripheral_semisimple);
        assert!(!report.inconclusive);
    }

    #[test]
    fn classify_swap_ergodic_not_weakly_mixing() {
        let (swap, uniform) = instances::swap_c2().unwrap();
        let report = classify(&swap, &uniform, 1e-10, 10_000).unwrap();
        assert!(report.ergodic);
        assert!(!report.weakly_mixing);
        assert_eq!(report.fixed_space_dim, 1);
        // Spectrum {1, −1}: two peripheral eigenvalues.
        assert_eq!(report.peripheral_eigenvalues.len(), 2);
        assert!(report.peripheral_semisimple);
        assert!(report.cesaro_ergodic() && !report.cesaro_weakly_mixing());
    }

    #[test]
    fn classify_averaging_weakly_mixing() {
        let (avg, uniform) = instances::averaging_c2().unwrap();
        let report = classify(&avg, &uniform, 1e-10, 10_000).unwrap();
        assert!(report.ergodic);
        assert!(report.weakly_mixing);
        assert_eq!(report.peripheral_eigenvalues.len(), 1);
        assert!(report.cesaro_weakly_mixing());
    }

    #[test]
    fn classify_requires_invariance() {
        let alg = Algebra::full(2);
        let sx = alg.element_from_coords(&[c(0.0), c(1.0), c(1.0), c(0.0)]);
        let ad_sx = instances::ad_unitary(&alg, &sx).unwrap();
        let rho = instances::diag_qubit_state(2.0 / 3.0).unwrap();
        assert!(matches!(
            classify(&ad_sx, &rho, 1e-10, 100),
            Err(Error::NotInvariant { .. })
        ));
    }

    #[test]
    fn classify_quantum_instances() {
        let alg = Algebra::full(2);
        let tr = State::tracial(&alg);
        // The depolarizing channel mixes in one step: weakly mixing.
        let report = classify(&instances::depolarizing_m2(), &tr, 1e-10, 10_000).unwrap();
        assert!(report.weakly_mixing);
        // A generic automorphism has full peripheral spectrum: not ergodic
        // (the fixed space contains the commutant of the unitary).
        let ad_w = instances::ad_unitary(&alg, &instances::qubit_unitary_phase()).unwrap();
        let report = classify(&ad_w, &tr, 1e-10, 10_000).unwrap();
        assert!(!report.ergodic);
        assert!(report.fixed_space_dim >= 2);
    }

    #[test]
    fn transfer_check_automorphism() {
        let alg = Algebra::full(2);
        let tr = State::tracial(&alg);
        let ad_w = instances::ad_unitary(&alg, &instances::qubit_unitary_phase()).unwrap();
        let original = classify(&ad_w, &tr, 1e-10, 4000).unwrap();
        let d = dilation_pipeline(&ad_w, &tr, 3, 1e-10, DEFAULT_DIMENSION_CAP).unwrap();
        let report = dilation_transfer_check(&d, &original, 4000, 1e-9).unwrap();
        assert!(
            report.reduction_residual < 1e-10,
            "{}",
            report.reduction_residual
        );
        assert!(report.trend_agrees);
        assert!(report.epsilon_bound_residual < 1e-10);
    }

    #[test]
    fn transfer_check_swap_trends_match() {
        let (swap, uniform) = instances::swap_c2().unwrap();
        let original = classify(&swap, &uniform, 1e-10, 10_000).unwrap();
        let d = dilation_pipeline(&swap, &uniform, 3, 1e-10, DEFAULT_DIMENSION_CAP).unwrap();
        let report = dilation_transfer_check(&d, &original, 10_000, 1e-9).unwrap();
        assert!(report.reduction_residual < 1e-11);
        assert!(report.original_ergodic && !report.original_weakly_mixing);
        assert!(report.trend_agrees);
    }

    #[test]
    fn transfer_check_identity_not_ergodic() {
        let c2 = Algebra::diagonal(2);
        let id = UcpMap::identity(&c2);
        let uniform = State::classical(&c2, &[0.5, 0.5], 1e-12).unwrap();
        let original = classify(&id, &uniform, 1e-10, 2000).unwrap();
        let d = dilation_pipeline(&id, &uniform, 2, 1e-10, DEFAULT_DIMENSION_CAP).unwrap();
        let report = dilation_transfer_check(&d, &original, 2000, 1e-9).unwrap();
        assert!(!report.original_ergodic);
        // Constant correlations upstairs and downstairs.
        assert!(report.dilated_plain_max > 0.1);
        assert!(report.trend_agrees);
    }
}
