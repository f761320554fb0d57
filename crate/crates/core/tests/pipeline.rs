//! Cross-module integration checks on the public API.

use cstar_core::algebra::{
    commutant, double_commutant, generated_star_algebra, random_element, Algebra,
};
use cstar_core::cgns::{build_tower, cgns_operators, DEFAULT_DIMENSION_CAP};
use cstar_core::channel::UcpMap;
use cstar_core::ergodic::classify;
use cstar_core::gns::{gns_construct, transfer_contraction, transfer_isometry_residual, State};
use cstar_core::instances;
use cstar_core::numerics::{c, kernel_basis_scaled, rank_with_tol, CMatrix};

const TOL: f64 = 1e-10;

#[test]
fn random_invariant_pipelines_certify_end_to_end() {
    // Tower + quadruple verification on seeded systems of every stock shape.
    let shapes = [
        Algebra::full(2),
        Algebra::diagonal(3),
        Algebra::new(&[2, 1]).unwrap(),
    ];
    for (si, alg) in shapes.iter().enumerate() {
        let (map, state) = instances::random_invariant_system(alg, 40 + si as u64).unwrap();
        let tower = build_tower(&map, &state, 2, TOL, DEFAULT_DIMENSION_CAP, None).unwrap();
        let cg = cgns_operators(tower);
        let report = cstar_core::cgns::verify_cgns(&cg, TOL).unwrap();
        assert!(report.pass(1e-9), "shape {si}: {report:?}");
    }
}

#[test]
fn transfer_isometry_iff_full_multiplicative_domain() {
    for (map, state, expect_full) in [
        (
            instances::depolarizing_m2(),
            State::tracial(&Algebra::full(2)),
            false,
        ),
        (
            instances::dephasing_m2(),
            State::tracial(&Algebra::full(2)),
            false,
        ),
        (
            instances::ad_unitary(&Algebra::full(2), &instances::qubit_unitary_phase()).unwrap(),
            State::tracial(&Algebra::full(2)),
            true,
        ),
    ] {
        let domain = map.multiplicative_domain(TOL).unwrap();
        let full = domain.dim() == map.algebra().total_dim();
        assert_eq!(full, expect_full);
        // The multiplicative domain always contains the unit.
        assert!(domain.contains(&map.algebra().unit().coords(), 1e-8));
        let g = gns_construct(map.algebra(), &state, TOL).unwrap();
        let u = transfer_contraction(&g, &map, &state, TOL).unwrap();
        assert_eq!(transfer_isometry_residual(&u) <= 1e-9, full);
    }
}

#[test]
fn double_commutant_contains_star_closed_span() {
    // For seeded *-closed generating sets S on C^4, S ∪ {1} ⊆ S''.
    for seed in 0..6u64 {
        let alg = Algebra::full(2);
        let a = random_element(&alg, 500 + seed);
        let gen = alg.left_mult_superop(&a);
        let gens = vec![gen.clone(), gen.adjoint()];
        let dc = double_commutant(&gens, TOL).unwrap();
        for g in &gens {
            assert!(dc.contains(&g.to_vec(), 1e-8), "seed {seed}");
        }
        assert!(dc.contains(&CMatrix::identity(4).to_vec(), 1e-8));
        // And the commutant really commutes with every generator.
        let comm = commutant(&gens, TOL).unwrap();
        for j in 0..comm.dim() {
            let x = CMatrix::from_coords(4, 4, &comm.basis_vector(j));
            for g in &gens {
                assert!(x.mul(g).dist(&g.mul(&x)) < 1e-9);
            }
        }
    }
}

#[test]
fn generated_algebra_of_spectral_projections_is_abelian_subalgebra() {
    let alg = Algebra::full(2);
    let p = alg.element_from_coords(&[c(1.0), c(0.0), c(0.0), c(0.0)]);
    let space = generated_star_algebra(&[p], TOL).unwrap();
    assert_eq!(space.dim(), 2);
}

#[test]
fn multiplicative_prop_stage_ranges_match() {
    // For multiplicative dynamics the bottom range climbs the tower:
    // V^n Z₀ H_φ = Z_n L_n as subspaces of the ambient stage.
    for (map, state) in [
        (
            instances::ad_unitary(&Algebra::full(2), &instances::qubit_unitary_phase()).unwrap(),
            State::tracial(&Algebra::full(2)),
        ),
        instances::cycle_c3().unwrap(),
        instances::copy_endomorphism_m2m2().unwrap(),
    ] {
        let tower = build_tower(&map, &state, 3, TOL, DEFAULT_DIMENSION_CAP, None).unwrap();
        let cg = cgns_operators(tower);
        for n in 0..=cg.budget {
            let chain = cg.v_chain_from_bottom(n).unwrap();
            let z_n = &cg.z[n];
            // rank [chain | Z_n] = rank Z_n = dim L_n.
            let dim_l = z_n.cols();
            let mut joint = CMatrix::zeros(cg.ambient_dim, chain.cols() + dim_l);
            for r in 0..cg.ambient_dim {
                for col in 0..chain.cols() {
                    joint[(r, col)] = chain[(r, col)];
                }
                for col in 0..dim_l {
                    joint[(r, chain.cols() + col)] = z_n[(r, col)];
                }
            }
            assert_eq!(rank_with_tol(&joint, 1e-8).unwrap(), dim_l, "level {n}");
        }
    }
}

#[test]
fn faithful_state_makes_limit_representation_injective() {
    let alg = Algebra::full(2);
    let tr = State::tracial(&alg);
    for map in [
        instances::ad_unitary(&alg, &instances::qubit_unitary_phase()).unwrap(),
        instances::dephasing_m2(),
    ] {
        let tower = build_tower(&map, &tr, 2, TOL, DEFAULT_DIMENSION_CAP, None).unwrap();
        let cg = cgns_operators(tower);
        let cols: Vec<Vec<_>> = (0..alg.total_dim())
            .map(|i| cg.pi_images[i].to_vec())
            .collect();
        let stacked = CMatrix::from_cols(&cols);
        let scale = stacked.fro_norm().max(1.0);
        let kernel = kernel_basis_scaled(&stacked, TOL, scale).unwrap();
        assert_eq!(kernel.cols(), 0);
    }
}

#[test]
fn expectation_is_positive_on_seeded_elements() {
    let (cycle, uniform) = instances::cycle_c3().unwrap();
    let d =
        cstar_core::dilation::dilation_pipeline(&cycle, &uniform, 2, TOL, DEFAULT_DIMENSION_CAP)
            .unwrap();
    let n = d.cgns().ambient_dim;
    for seed in 0..8u64 {
        let alg_ops = Algebra::full(n);
        let x = random_element(&alg_ops, 900 + seed).block(0).clone();
        let e = d.expect(&x.adjoint().mul(&x));
        let eig = cstar_core::numerics::herm_eig(&e.hermitize(), 1e-8).unwrap();
        assert!(eig.eigenvalues.first().copied().unwrap_or(0.0) >= -1e-10);
    }
}

#[test]
fn near_circle_spectrum_reports_inconclusive() {
    // A lazy two-state chain has its second eigenvalue at 1 − 2e-4, inside
    // the gray band where a Cesàro range of 10⁴ cannot decide.
    let alg = Algebra::diagonal(2);
    let eps = 1e-4;
    let p = CMatrix::from_rows(&[&[c(1.0 - eps), c(eps)], &[c(eps), c(1.0 - eps)]]);
    let map = UcpMap::from_stochastic(&alg, &p, TOL).unwrap();
    let state = State::classical(&alg, &[0.5, 0.5], 1e-12).unwrap();
    let report = classify(&map, &state, TOL, 10_000).unwrap();
    assert!(report.inconclusive);
    // Spectrally it is still ergodic: the fixed space is spanned by 1.
    assert!(report.ergodic);
}

#[test]
fn budget_errors_surface_through_the_pipeline() {
    let (avg, uniform) = instances::averaging_c2().unwrap();
    let tower = build_tower(&avg, &uniform, 2, TOL, DEFAULT_DIMENSION_CAP, None).unwrap();
    let cg = cgns_operators(tower);
    assert!(matches!(
        cstar_core::cgns::cyclic_span_dimension(&cg, 3, 1e-8),
        Err(cstar_core::Error::BudgetExceeded {
            needed: 3,
            budget: 2
        })
    ));
}

#[test]
fn m3_pipeline_at_depth_one() {
    // A bigger single block: GNS of the trace on M₃ is 9-dimensional and
    // one dilation step of a strict unitary mixture has full rank 81.
    let m3 = Algebra::full(3);
    let tr = State::tracial(&m3);
    let mix = instances::random_unitary_mix(&m3, 9, 2).unwrap();
    let g = gns_construct(&m3, &tr, TOL).unwrap();
    assert_eq!(g.dim(), 9);
    let tower = build_tower(&mix, &tr, 1, TOL, DEFAULT_DIMENSION_CAP, None).unwrap();
    let rel = tower.relation_residuals().unwrap();
    assert!(rel.max_residual() < 1e-9, "{rel:?}");
    let cg = cgns_operators(tower);
    let report = cstar_core::cgns::verify_cgns(&cg, TOL).unwrap();
    assert!(report.pass(1e-9), "{report:?}");

    // The tracial state is faithful, so the adjoint exists (the trace dual
    // of a unitary mixture is the mixture of the inverse conjugations).
    let sharp = cstar_core::gns::phi_adjoint(&mix, &tr, TOL).unwrap();
    assert!(sharp.superop().dist(&mix.trace_dual_superop()) < 1e-10);
}

#[test]
fn mixed_block_shape_pipeline() {
    let alg = Algebra::new(&[2, 1]).unwrap();
    let (map, state) = instances::random_invariant_system(&alg, 5).unwrap();
    let tower = build_tower(&map, &state, 2, TOL, DEFAULT_DIMENSION_CAP, None).unwrap();
    let cg = cgns_operators(tower);
    let report = cstar_core::cgns::verify_cgns(&cg, TOL).unwrap();
    assert!(report.pass(1e-9), "{report:?}");
    let sharp = cstar_core::gns::phi_adjoint(&map, &state, TOL).unwrap();
    assert!(
        cstar_core::gns::check_invariance(&sharp, &state)
            .unwrap()
            .max_residual
            < 1e-10
    );
}

#[test]
fn classical_adjoint_is_the_reversed_chain() {
    // For a stochastic chain with stationary p, the state adjoint is the
    // time reversal P♯[i][j] = p_j P[j][i] / p_i — an independent closed
    // form to compare against.
    let c4 = Algebra::diagonal(4);
    for seed in 0..5u64 {
        let (map, state) = instances::random_stochastic_system(&c4, seed).unwrap();
        let sharp = cstar_core::gns::phi_adjoint(&map, &state, 1e-9).unwrap();
        let p: Vec<f64> = state.densities().iter().map(|d| d.trace().re).collect();
        let mut reversed = CMatrix::zeros(4, 4);
        for i in 0..4 {
            for j in 0..4 {
                reversed[(i, j)] = map.superop()[(j, i)] * c(p[j] / p[i]);
            }
        }
        assert!(sharp.superop().dist(&reversed) < 1e-9, "seed {seed}");
    }
}

#[test]
fn faithful_multi_block_dephasing_adjoint() {
    // Blockwise dephasing on M₂⊕M₂ with a faithful non-tracial state is
    // self-adjoint, and the modular oracle holds across blocks.
    let alg = Algebra::new(&[2, 2]).unwrap();
    let densities = vec![CMatrix::diag(&[0.3, 0.2]), CMatrix::diag(&[0.35, 0.15])];
    let state = State::new(&alg, densities, TOL).unwrap();
    // Dephasing acts diagonally on each block's coordinates.
    let mut sup = CMatrix::zeros(8, 8);
    for b in 0..2 {
        for r in 0..2 {
            let idx = alg.coord_index(b, r, r);
            sup[(idx, idx)] = c(1.0);
        }
    }
    let map = UcpMap::from_superop(&alg, sup, TOL).unwrap();
    assert!(
        cstar_core::gns::check_invariance(&map, &state)
            .unwrap()
            .max_residual
            < 1e-12
    );
    let g = gns_construct(&alg, &state, TOL).unwrap();
    let (_, closed, oracle) = cstar_core::gns::modular_pair_diagnostics(&g, &state, TOL).unwrap();
    assert!(closed < 1e-9 && oracle < 1e-9);
    let sharp = cstar_core::gns::phi_adjoint(&map, &state, TOL).unwrap();
    assert!(sharp.superop().dist(map.superop()) < 1e-10);
}
