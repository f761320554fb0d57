//! The iterated Stinespring tower and the truncated inductive-limit
//! dilation of a dynamical system.
//!
//! Level 0 is the GNS space of the invariant state; level `n+1` is the
//! Stinespring space of `Φ_n = σ_n∘Φ`. The connecting isometries `Λ_n` send
//! `a ⊗ ψ` to `a ⊗ Λ_{n-1}ψ`, and `Ξ_{n,m} = Λ_{n-1}···Λ_m` forms the
//! directed system whose limit the truncation stands in for.
//!
//! Truncation semantics: the depth-`N` stage `L_N` represents the limit
//! space, every `Z_n = Ξ_{N,n}` is a concrete isometry into it, and the
//! limit isometry is *not* a square matrix: it is the budgeted family
//! `v_levels[n] = Z_{n+1}V_nZ_n*`, total on the union of the `Z_nL_n` with
//! `n < N` and undefined on the top stage. Its adjoint *is* total
//! (`Z_{N-1}V_{N-1}*`). Operations applying the isometry `k` times document
//! the headroom `k` they need; for multiplicative dynamics every `V_n` is
//! unitary, the stages all coincide, and a total unitary is exposed.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[cfg(test)]
use crate::algebra::Algebra;
use crate::algebra::Element;
use crate::channel::UcpMap;
use crate::gns::{gns_construct, orbit_rank, transfer_contraction, GnsData, State};
use crate::numerics::{
    c, herm_eig, kernel_basis_scaled, op_norm, rank_with_tol, vec_norm, CMatrix, QuotientBasis, C64,
};
use crate::stinespring::{lambda0, stinespring_of_composed_with_shuffle};
use crate::{Error, Result};

/// Default cap on the projected stage dimension.
pub const DEFAULT_DIMENSION_CAP: usize = 8192;

/// One stage of the tower.
#[derive(Debug, Clone)]
pub struct TowerLevel {
    /// Stage index `n`.
    pub index: usize,
    /// `dim L_n`.
    pub dim_l: usize,
    /// `σ_n(x_i)` on the coordinate basis (`σ_0 = π_φ`).
    pub sigma_images: Vec<CMatrix>,
    /// `V_n: L_n → L_{n+1}`; absent at the top stage.
    pub v_to_next: Option<CMatrix>,
    /// `Λ_n: L_n → L_{n+1}`; absent at the top stage.
    pub lambda_to_next: Option<CMatrix>,
}

impl TowerLevel {
    /// `σ_n(a)` by linearity.
    pub fn sigma(&self, a: &Element) -> CMatrix {
        let coords = a.coords();
        let mut m = CMatrix::zeros(self.dim_l, self.dim_l);
        for (i, &z) in coords.iter().enumerate() {
            if z != c(0.0) {
                m = m.add(&self.sigma_images[i].scale(z));
            }
        }
        m
    }
}

/// The iterated Stinespring tower of an invariant system.
#[derive(Debug, Clone)]
pub struct Tower {
    map: UcpMap,
    state: State,
    gns: GnsData,
    transfer: CMatrix,
    levels: Vec<TowerLevel>,
    depth: usize,
    tol: f64,
    shuffle: Option<u64>,
    /// Quotient data of the top stage, kept so the tower can be deepened.
    top_coords: Option<QuotientBasis>,
}

/// Applies `I_t ⊗ lam` to a matrix whose rows carry ambient `A ⊗ L`
/// coordinates (algebra index major).
fn kron_right_apply(lam: &CMatrix, x: &CMatrix, t: usize) -> CMatrix {
    let q = lam.cols();
    let p = lam.rows();
    debug_assert_eq!(x.rows(), t * q);
    let cols = x.cols();
    let mut out = CMatrix::zeros(t * p, cols);
    for i in 0..t {
        for jp in 0..p {
            for j in 0..q {
                let v = lam[(jp, j)];
                if v == c(0.0) {
                    continue;
                }
                for col in 0..cols {
                    let add = v * x[(i * q + j, col)];
                    out[(i * p + jp, col)] += add;
                }
            }
        }
    }
    out
}

/// Builds the tower to the requested depth.
///
/// The state must be invariant; the projected stage size `total_dim·dim L_n`
/// is checked against `cap` before each eigensolve. `shuffle` seeds the
/// coordinate gauge of every stage (see
/// [`crate::stinespring::stinespring_with_shuffle`]); towers built with
/// different shuffles are unitarily equivalent realizations of the same
/// object.
pub fn build_tower(
    map: &UcpMap,
    state: &State,
    depth: usize,
    tol: f64,
    cap: usize,
    shuffle: Option<u64>,
) -> Result<Tower> {
    if depth == 0 {
        return Err(Error::PreconditionFailed(
            "tower depth must be at least 1".into(),
        ));
    }
    let algebra = map.algebra().clone();
    let gns = gns_construct(&algebra, state, tol)?;
    let transfer = transfer_contraction(&gns, map, state, tol)?;

    let mut levels: Vec<TowerLevel> = Vec::with_capacity(depth + 1);
    levels.push(TowerLevel {
        index: 0,
        dim_l: gns.dim(),
        sigma_images: gns.basis_images().to_vec(),
        v_to_next: None,
        lambda_to_next: None,
    });

    let mut tower = Tower {
        map: map.clone(),
        state: state.clone(),
        gns,
        transfer,
        levels,
        depth: 0,
        tol,
        shuffle,
        top_coords: None,
    };
    tower.grow_to(depth, cap)?;
    Ok(tower)
}

/// Deepens an existing tower to `new_depth`, growing from the stored top
/// stage; the explicit counterpart of the operations that refuse with
/// [`Error::BudgetExceeded`] instead of silently extending.
pub fn extend_tower(mut tower: Tower, new_depth: usize, cap: usize) -> Result<Tower> {
    if new_depth <= tower.depth {
        return Ok(tower);
    }
    tower.grow_to(new_depth, cap)?;
    Ok(tower)
}

/// Residuals of the tower commutation relations, maximized over levels and
/// basis elements.
#[derive(Debug, Clone)]
pub struct TowerRelationReport {
    /// `σ_{n+1}(a)Λ_n = Λ_nσ_n(a)`.
    pub intertwine: f64,
    /// `Λ_n*σ_{n+1}(a)Λ_n = σ_n(a)`.
    pub compress: f64,
    /// `V_{n+1}Λ_n = Λ_{n+1}V_n`.
    pub ladder: f64,
    /// `Λ_nV_n* = V_{n+1}*Λ_{n+1}`.
    pub ladder_adjoint: f64,
    /// `Φ_n(a) = V_n*σ_{n+1}(a)V_n`.
    pub stinespring: f64,
    /// `Ξ_{n,m}Ξ_{m,h} = Ξ_{n,h}`.
    pub xi_compose: f64,
    /// `σ_n(a)Ξ_{n,m} = Ξ_{n,m}σ_m(a)`.
    pub xi_intertwine: f64,
    /// `V_nΞ_{n,m} = Ξ_{n+1,m+1}V_m`.
    pub xi_ladder: f64,
    /// `V_n*Ξ_{n+1,m} = Ξ_{n,m-1}V_{m-1}*`.
    pub xi_ladder_adjoint: f64,
}

impl TowerRelationReport {
    pub fn max_residual(&self) -> f64 {
        [
            self.intertwine,
            self.compress,
            self.ladder,
            self.ladder_adjoint,
            self.stinespring,
            self.xi_compose,
            self.xi_intertwine,
            self.xi_ladder,
            self.xi_ladder_adjoint,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

impl Tower {
    /// Builds stages `depth+1..=new_depth` and re-certifies the relations.
    fn grow_to(&mut self, new_depth: usize, cap: usize) -> Result<()> {
        let t = self.map.algebra().total_dim();
        for n in self.depth..new_depth {
            let dim_n = self.levels[n].dim_l;
            let projected = t * dim_n;
            if projected > cap {
                return Err(Error::DimensionCap { projected, cap });
            }
            let step = stinespring_of_composed_with_shuffle(
                &self.map,
                &self.levels[n].sigma_images,
                dim_n,
                self.tol,
                self.shuffle.map(|s| s.wrapping_add(n as u64)),
            )?;
            // Λ_n: the base case factors the transfer contraction, the
            // general case lifts the previous Λ through the tensor slot.
            let lambda = if n == 0 {
                lambda0(&self.gns, &step, &self.transfer, self.tol)?
            } else {
                let prev = self
                    .top_coords
                    .as_ref()
                    .expect("top stage quotient present");
                let lam_prev = self.levels[n - 1]
                    .lambda_to_next
                    .as_ref()
                    .expect("Λ present");
                let lifted = kron_right_apply(lam_prev, &prev.section(), t);
                step.coords.quotient_map.mul(&lifted)
            };
            let iso = lambda
                .adjoint()
                .mul(&lambda)
                .dist(&CMatrix::identity(dim_n));
            if iso > (self.tol * 100.0).max(1e-9) {
                return Err(Error::CertificationFailed {
                    what: "tower connecting isometry",
                    residual: iso,
                });
            }
            self.levels[n].v_to_next = Some(step.v.clone());
            self.levels[n].lambda_to_next = Some(lambda);
            self.levels.push(TowerLevel {
                index: n + 1,
                dim_l: step.dilation_dim,
                sigma_images: step.sigma_images.clone(),
                v_to_next: None,
                lambda_to_next: None,
            });
            self.top_coords = Some(step.coords);
        }
        self.depth = new_depth;
        let rel = self.relation_residuals()?;
        if rel.max_residual() > (self.tol * 100.0).max(1e-9) {
            return Err(Error::CertificationFailed {
                what: "tower commutation relations",
                residual: rel.max_residual(),
            });
        }
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn map(&self) -> &UcpMap {
        &self.map
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn gns(&self) -> &GnsData {
        &self.gns
    }

    /// Transfer contraction on `L_0`.
    pub fn transfer(&self) -> &CMatrix {
        &self.transfer
    }

    pub fn levels(&self) -> &[TowerLevel] {
        &self.levels
    }

    pub fn level(&self, n: usize) -> &TowerLevel {
        &self.levels[n]
    }

    /// Stage dimensions `dim L_0, …, dim L_N`.
    pub fn dims(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.dim_l).collect()
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// `Ξ_{n,m} = Λ_{n-1}···Λ_m` (identity for `m = n`).
    pub fn xi(&self, n: usize, m: usize) -> CMatrix {
        assert!(m <= n && n <= self.depth, "Ξ indices out of range");
        let mut acc = CMatrix::identity(self.levels[m].dim_l);
        for k in m..n {
            let lam = self.levels[k]
                .lambda_to_next
                .as_ref()
                .expect("Λ present below depth");
            acc = lam.mul(&acc);
        }
        acc
    }

    /// `Φ_n(a) = σ_n(Φ(a))` images on the coordinate basis.
    pub(crate) fn phi_level_images(&self, n: usize) -> Vec<CMatrix> {
        let t = self.map.algebra().total_dim();
        let dim = self.levels[n].dim_l;
        (0..t)
            .map(|i| {
                let coords = self.map.superop().col(i);
                let mut m = CMatrix::zeros(dim, dim);
                for (j, &z) in coords.iter().enumerate() {
                    if z != c(0.0) {
                        m = m.add(&self.levels[n].sigma_images[j].scale(z));
                    }
                }
                m
            })
            .collect()
    }

    /// Computes all tower-relation residuals.
    pub fn relation_residuals(&self) -> Result<TowerRelationReport> {
        let t = self.map.algebra().total_dim();
        let mut intertwine = 0.0f64;
        let mut compress = 0.0f64;
        let mut ladder = 0.0f64;
        let mut ladder_adjoint = 0.0f64;
        let mut stine = 0.0f64;
        for n in 0..self.depth {
            let lam = self.levels[n].lambda_to_next.as_ref().unwrap();
            let v = self.levels[n].v_to_next.as_ref().unwrap();
            let phi_n = self.phi_level_images(n);
            for i in 0..t {
                let upper = &self.levels[n + 1].sigma_images[i];
                let lower = &self.levels[n].sigma_images[i];
                intertwine = intertwine.max(upper.mul(lam).dist(&lam.mul(lower)));
                compress = compress.max(lam.adjoint().mul(upper).mul(lam).dist(lower));
                stine = stine.max(v.adjoint().mul(upper).mul(v).dist(&phi_n[i]));
            }
            if n + 1 < self.depth {
                let lam_next = self.levels[n + 1].lambda_to_next.as_ref().unwrap();
                let v_next = self.levels[n + 1].v_to_next.as_ref().unwrap();
                ladder = ladder.max(v_next.mul(lam).dist(&lam_next.mul(v)));
                ladder_adjoint =
                    ladder_adjoint.max(lam.mul(&v.adjoint()).dist(&v_next.adjoint().mul(lam_next)));
            }
        }
        // Derived Ξ relations on all index pairs.
        let mut xi_compose = 0.0f64;
        let mut xi_intertwine = 0.0f64;
        let mut xi_ladder = 0.0f64;
        let mut xi_ladder_adjoint = 0.0f64;
        for n in 0..=self.depth {
            for m in 0..=n {
                let xi_nm = self.xi(n, m);
                for h in 0..=m {
                    xi_compose = xi_compose.max(xi_nm.mul(&self.xi(m, h)).dist(&self.xi(n, h)));
                }
                for i in 0..t {
                    let top = &self.levels[n].sigma_images[i];
                    let bottom = &self.levels[m].sigma_images[i];
                    xi_intertwine = xi_intertwine.max(top.mul(&xi_nm).dist(&xi_nm.mul(bottom)));
                }
                if n < self.depth {
                    let v_n = self.levels[n].v_to_next.as_ref().unwrap();
                    let v_m = self.levels[m].v_to_next.as_ref().unwrap();
                    xi_ladder =
                        xi_ladder.max(v_n.mul(&xi_nm).dist(&self.xi(n + 1, m + 1).mul(v_m)));
                    if m >= 1 {
                        let v_m1 = self.levels[m - 1].v_to_next.as_ref().unwrap();
                        xi_ladder_adjoint = xi_ladder_adjoint.max(
                            v_n.adjoint()
                                .mul(&self.xi(n + 1, m))
                                .dist(&self.xi(n, m - 1).mul(&v_m1.adjoint())),
                        );
                    }
                }
            }
        }
        Ok(TowerRelationReport {
            intertwine,
            compress,
            ladder,
            ladder_adjoint,
            stinespring: stine,
            xi_compose,
            xi_intertwine,
            xi_ladder,
            xi_ladder_adjoint,
        })
    }
}

/// The truncated covariant GNS quadruple.
///
/// Ambient space is the top stage `L_N`; `z[n]` embeds `L_n`, the
/// representation is `σ_N`, and the vector is `Z_0Ω_φ`.
#[derive(Debug, Clone)]
pub struct CgnsData {
    tower: Tower,
    /// `dim L_N`.
    pub ambient_dim: usize,
    /// `Z_n = Ξ_{N,n}` for `n = 0..=N`.
    pub z: Vec<CMatrix>,
    /// `π_∞(x_i) = σ_N(x_i)`.
    pub pi_images: Vec<CMatrix>,
    /// `Ω_∞ = Z_0Ω_φ`.
    pub omega: Vec<C64>,
    /// `v_levels[n] = Z_{n+1}V_nZ_n*`: the limit isometry on the `n`-th
    /// stage range.
    pub v_levels: Vec<CMatrix>,
    /// Total adjoint `Z_{N-1}V_{N-1}*`.
    pub v_star: CMatrix,
    /// Total unitary when every `V_n` is unitary (multiplicative dynamics).
    pub v_total: Option<CMatrix>,
    /// Truncation depth `N`; applying the isometry `k` times needs `k` of it.
    pub budget: usize,
}

/// Assembles the truncated quadruple from a tower.
pub fn cgns_operators(tower: Tower) -> CgnsData {
    let depth = tower.depth();
    let ambient_dim = tower.levels()[depth].dim_l;
    let z: Vec<CMatrix> = (0..=depth).map(|n| tower.xi(depth, n)).collect();
    let pi_images = tower.levels()[depth].sigma_images.clone();
    let omega = z[0].mul_vec(tower.gns().omega());
    let mut v_levels = Vec::with_capacity(depth);
    for n in 0..depth {
        let v = tower.levels()[n].v_to_next.as_ref().unwrap();
        v_levels.push(z[n + 1].mul(v).mul(&z[n].adjoint()));
    }
    let v_top = tower.levels()[depth - 1].v_to_next.as_ref().unwrap();
    let v_star = z[depth - 1].mul(&v_top.adjoint());
    // A total unitary exists exactly when every V_n is unitary.
    let all_unitary = (0..depth).all(|n| {
        let v = tower.levels()[n].v_to_next.as_ref().unwrap();
        v.rows() == v.cols() && v.mul(&v.adjoint()).dist(&CMatrix::identity(v.rows())) <= 1e-9
    });
    let v_total = if all_unitary {
        Some(v_levels[depth - 1].clone())
    } else {
        None
    };
    CgnsData {
        tower,
        ambient_dim,
        z,
        pi_images,
        omega,
        v_levels,
        v_star,
        v_total,
        budget: depth,
    }
}

impl CgnsData {
    pub fn tower(&self) -> &Tower {
        &self.tower
    }

    /// `π_∞(a)` by linearity.
    pub fn pi(&self, a: &Element) -> CMatrix {
        let coords = a.coords();
        let mut m = CMatrix::zeros(self.ambient_dim, self.ambient_dim);
        for (i, &z) in coords.iter().enumerate() {
            if z != c(0.0) {
                m = m.add(&self.pi_images[i].scale(z));
            }
        }
        m
    }

    /// Applies the limit isometry to a vector lying in the `n`-th stage
    /// range; needs headroom `n + 1 ≤ budget`.
    pub fn apply_v(&self, v: &[C64], level: usize) -> Result<Vec<C64>> {
        if level + 1 > self.budget {
            return Err(Error::BudgetExceeded {
                needed: level + 1,
                budget: self.budget,
            });
        }
        Ok(self.v_levels[level].mul_vec(v))
    }

    /// `V^k` restricted to the `Z_0` range, as the `ambient × dim L_0`
    /// matrix `Z_kV_{k-1}···V_0`; needs headroom `k`.
    pub fn v_chain_from_bottom(&self, k: usize) -> Result<CMatrix> {
        if k > self.budget {
            return Err(Error::BudgetExceeded {
                needed: k,
                budget: self.budget,
            });
        }
        let mut part = CMatrix::identity(self.tower.levels()[0].dim_l);
        for n in 0..k {
            part = self.tower.levels()[n]
                .v_to_next
                .as_ref()
                .unwrap()
                .mul(&part);
        }
        Ok(self.z[k].mul(&part))
    }

    /// Ambient matrix acting as `V^j` on the range of `Z_{N-j}`
    /// (`Z_NV_{N-1}···V_{N-j}Z_{N-j}*`); needs headroom `j`.
    pub fn v_power_on_top_range(&self, j: usize) -> Result<CMatrix> {
        if j > self.budget {
            return Err(Error::BudgetExceeded {
                needed: j,
                budget: self.budget,
            });
        }
        let mut acc = CMatrix::identity(self.ambient_dim);
        for step in 0..j {
            acc = acc.mul(&self.v_levels[self.budget - 1 - step]);
        }
        Ok(acc)
    }

    /// `∂_j(a) = V^jπ_∞(a)V^{*j}` as an ambient matrix; needs headroom `j`.
    pub fn partial(&self, a: &Element, j: usize) -> Result<CMatrix> {
        let chain = self.v_power_on_top_range(j)?;
        let mut vstar_pow = CMatrix::identity(self.ambient_dim);
        for _ in 0..j {
            vstar_pow = self.v_star.mul(&vstar_pow);
        }
        Ok(chain.mul(&self.pi(a)).mul(&vstar_pow))
    }
}

/// One named residual in a verification table.
#[derive(Debug, Clone)]
pub struct CheckItem {
    pub name: String,
    pub residual: f64,
}

/// Residual table for the truncated covariant GNS theorem.
#[derive(Debug, Clone)]
pub struct CgnsReport {
    pub items: Vec<CheckItem>,
}

impl CgnsReport {
    pub fn max_residual(&self) -> f64 {
        self.items.iter().map(|i| i.residual).fold(0.0, f64::max)
    }

    pub fn pass(&self, tol: f64) -> bool {
        self.max_residual() <= tol
    }
}

/// Verifies the truncated dilation identities:
///
/// 1. `U^{k*} = Z_0*V^kZ_0` for `0 ≤ k ≤ N`, and `VΩ_∞ = Ω_∞`;
/// 2. covariance `π_∞(Φ(a))Z_n = V*π_∞(a)V·Z_n` on every budgeted range;
/// 3. state reproduction `⟨Ω_∞, π_∞(a)Ω_∞⟩ = φ(a)`;
/// 4. embedding relations `Z_nΞ_{n,m} = Z_m`, `Z_n*Z_m = Ξ_{n,m}` (adjoint
///    for `m > n`), `π_∞(a)Z_n = Z_nσ_n(a)`, `VZ_n = Z_{n+1}V_n`,
///    `V*Z_n = Z_{n-1}V_{n-1}*`, and the bottom convention `V*Z_0 = Z_0U`;
/// 5. the multiplicative-domain statements: `VV*` commutes with `π_∞(D_Φ)`
///    and `V*π_∞(x) = π_∞(Φ(x))V*` for `x ∈ D_Φ`.
pub fn verify_cgns(c: &CgnsData, tol: f64) -> Result<CgnsReport> {
    let tower = c.tower();
    let depth = c.budget;
    let t = tower.map().algebra().total_dim();
    let mut items = Vec::new();

    // 1. Dilation identity.
    let u = tower.transfer();
    let mut dil = 0.0f64;
    let mut u_pow = CMatrix::identity(u.rows());
    for k in 0..=depth {
        let chain = c.v_chain_from_bottom(k)?;
        let lhs = u_pow.adjoint();
        let rhs = c.z[0].adjoint().mul(&chain);
        dil = dil.max(lhs.dist(&rhs));
        u_pow = u.mul(&u_pow);
    }
    items.push(CheckItem {
        name: "dilation identity".into(),
        residual: dil,
    });

    let vo = c.apply_v(&c.omega, 0)?;
    let fix = vec_norm(
        &vo.iter()
            .zip(&c.omega)
            .map(|(a, b)| a - b)
            .collect::<Vec<_>>(),
    );
    items.push(CheckItem {
        name: "fixed vector".into(),
        residual: fix,
    });

    // 2. Covariance on budgeted ranges.
    let mut cov = 0.0f64;
    for n in 0..depth {
        let v_n = tower.levels()[n].v_to_next.as_ref().unwrap();
        let right = c.z[n + 1].mul(v_n);
        for i in 0..t {
            let e = tower.map().algebra().basis_element(i);
            let lhs = c.pi(&tower.map().apply(&e)?).mul(&c.z[n]);
            let rhs = c.v_star.mul(&c.pi_images[i]).mul(&right);
            cov = cov.max(lhs.dist(&rhs));
        }
    }
    items.push(CheckItem {
        name: "covariance".into(),
        residual: cov,
    });

    // 3. State reproduction.
    let mut rep = 0.0f64;
    for i in 0..t {
        let e = tower.map().algebra().basis_element(i);
        let lhs = crate::numerics::inner(&c.omega, &c.pi_images[i].mul_vec(&c.omega));
        rep = rep.max((lhs - tower.state().eval(&e)).norm());
    }
    items.push(CheckItem {
        name: "state reproduction".into(),
        residual: rep,
    });

    // 4. Embedding relations.
    let mut z_comp = 0.0f64;
    let mut z_gram = 0.0f64;
    let mut h_rel = 0.0f64;
    let mut i_rel = 0.0f64;
    let mut l_rel = 0.0f64;
    for n in 0..=depth {
        for m in 0..=n {
            z_comp = z_comp.max(c.z[n].mul(&tower.xi(n, m)).dist(&c.z[m]));
            z_gram = z_gram.max(c.z[n].adjoint().mul(&c.z[m]).dist(&tower.xi(n, m)));
            z_gram = z_gram.max(
                c.z[m]
                    .adjoint()
                    .mul(&c.z[n])
                    .dist(&tower.xi(n, m).adjoint()),
            );
        }
        for i in 0..t {
            h_rel = h_rel.max(
                c.pi_images[i]
                    .mul(&c.z[n])
                    .dist(&c.z[n].mul(&tower.levels()[n].sigma_images[i])),
            );
        }
        if n < depth {
            let v_n = tower.levels()[n].v_to_next.as_ref().unwrap();
            i_rel = i_rel.max(c.v_levels[n].mul(&c.z[n]).dist(&c.z[n + 1].mul(v_n)));
        }
        if n >= 1 {
            let v_prev = tower.levels()[n - 1].v_to_next.as_ref().unwrap();
            l_rel = l_rel.max(
                c.v_star
                    .mul(&c.z[n])
                    .dist(&c.z[n - 1].mul(&v_prev.adjoint())),
            );
        }
    }
    let bottom = c.v_star.mul(&c.z[0]).dist(&c.z[0].mul(tower.transfer()));
    items.push(CheckItem {
        name: "embedding composition".into(),
        residual: z_comp,
    });
    items.push(CheckItem {
        name: "embedding gram".into(),
        residual: z_gram,
    });
    items.push(CheckItem {
        name: "representation embedding".into(),
        residual: h_rel,
    });
    items.push(CheckItem {
        name: "isometry embedding".into(),
        residual: i_rel,
    });
    items.push(CheckItem {
        name: "adjoint embedding".into(),
        residual: l_rel,
    });
    items.push(CheckItem {
        name: "adjoint bottom convention".into(),
        residual: bottom,
    });

    // 5. Multiplicative-domain statements on the range projection.
    let domain = tower.map().multiplicative_domain(tol)?;
    let v_top = tower.levels()[depth - 1].v_to_next.as_ref().unwrap();
    let proj = v_top.mul(&v_top.adjoint());
    let mut md_comm = 0.0f64;
    let mut md_inter = 0.0f64;
    for j in 0..domain.dim() {
        let x = tower
            .map()
            .algebra()
            .element_from_coords(&domain.basis_vector(j));
        let px = c.pi(&x);
        md_comm = md_comm.max(proj.mul(&px).dist(&px.mul(&proj)));
        let fx = c.pi(&tower.map().apply(&x)?);
        md_inter = md_inter.max(c.v_star.mul(&px).dist(&fx.mul(&c.v_star)));
    }
    items.push(CheckItem {
        name: "domain projection commutation".into(),
        residual: md_comm,
    });
    items.push(CheckItem {
        name: "domain adjoint intertwining".into(),
        residual: md_inter,
    });

    Ok(CgnsReport { items })
}

/// Dimension of the span of the monomial vectors
/// `∂_0(a_0)∂_1(a_1)···∂_n(a_n)Ω_∞` over all coordinate-basis tuples; equals
/// `dim L_n` when the truncation is healthy. Needs headroom `n`.
pub fn cyclic_span_dimension(c: &CgnsData, n: usize, tol: f64) -> Result<usize> {
    if n > c.budget {
        return Err(Error::BudgetExceeded {
            needed: n,
            budget: c.budget,
        });
    }
    let algebra = c.tower().map().algebra().clone();
    let t = algebra.total_dim();
    let count = t.checked_pow((n + 1) as u32).unwrap_or(usize::MAX);
    if count > 4096 {
        return Err(Error::PreconditionFailed(format!(
            "monomial family of size {count} exceeds the desk-scale guard"
        )));
    }
    let mut partials: Vec<Vec<CMatrix>> = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let mut per_basis = Vec::with_capacity(t);
        for i in 0..t {
            per_basis.push(c.partial(&algebra.basis_element(i), j)?);
        }
        partials.push(per_basis);
    }
    let mut vecs: Vec<Vec<C64>> = alloc::vec![c.omega.clone()];
    for j in (0..=n).rev() {
        let mut next = Vec::with_capacity(vecs.len() * t);
        for w in &vecs {
            for i in 0..t {
                next.push(partials[j][i].mul_vec(w));
            }
        }
        vecs = next;
    }
    rank_with_tol(&CMatrix::from_cols(&vecs), tol)
}

/// Intertwining unitary between two truncated realizations of the same
/// system at the same depth, built by matching the monomial generating
/// vectors and orthonormalizing both families through one shared Gram
/// eigenbasis.
pub fn unitary_equivalence(c1: &CgnsData, c2: &CgnsData, tol: f64) -> Result<CMatrix> {
    if c1.budget != c2.budget || c1.tower().dims() != c2.tower().dims() {
        return Err(Error::PreconditionFailed(
            "towers have different depths or stage dimensions".into(),
        ));
    }
    let depth = c1.budget;
    let algebra = c1.tower().map().algebra().clone();
    let t = algebra.total_dim();
    let count = t.checked_pow((depth + 1) as u32).unwrap_or(usize::MAX);
    if count > 4096 {
        return Err(Error::PreconditionFailed(format!(
            "monomial family of size {count} exceeds the desk-scale guard"
        )));
    }
    // Words σ_N(a_N)V_{N-1}···σ_1(a_1)V_0·π_φ(a_0)Ω_φ, grown from the bottom.
    let words = |cd: &CgnsData| -> Vec<Vec<C64>> {
        let tower = cd.tower();
        let mut vecs: Vec<Vec<C64>> = (0..t)
            .map(|i| tower.levels()[0].sigma_images[i].mul_vec(tower.gns().omega()))
            .collect();
        for k in 0..depth {
            let v = tower.levels()[k].v_to_next.as_ref().unwrap();
            let mut next = Vec::with_capacity(vecs.len() * t);
            for w in &vecs {
                let lifted = v.mul_vec(w);
                for i in 0..t {
                    next.push(tower.levels()[k + 1].sigma_images[i].mul_vec(&lifted));
                }
            }
            vecs = next;
        }
        vecs
    };
    let g1 = CMatrix::from_cols(&words(c1));
    let g2 = CMatrix::from_cols(&words(c2));
    let gram1 = g1.adjoint().mul(&g1);
    let gram2 = g2.adjoint().mul(&g2);
    let tol_eq = tol.max(1e-8);
    let gram_scale = gram1.fro_norm().max(1.0);
    let gram_mismatch = gram1.dist(&gram2);
    if gram_mismatch > tol_eq * gram_scale {
        return Err(Error::NotEquivalent {
            residual: gram_mismatch,
        });
    }
    // Shared orthonormalization through one eigenbasis.
    let gram = gram1.add(&gram2).scale(c(0.5)).hermitize();
    let eig = herm_eig(&gram, 1e-9)?;
    let lmax = eig.eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
    let kept: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] > 1e-10 * lmax)
        .collect();
    if kept.len() != c1.ambient_dim {
        return Err(Error::NotEquivalent {
            residual: kept.len() as f64 - c1.ambient_dim as f64,
        });
    }
    let mut basis_coeff = CMatrix::zeros(eig.eigenvalues.len(), kept.len());
    for (col, &k) in kept.iter().enumerate() {
        let s = 1.0 / libm::sqrt(eig.eigenvalues[k]);
        for r in 0..eig.eigenvalues.len() {
            basis_coeff[(r, col)] = eig.eigenvectors[(r, k)] * c(s);
        }
    }
    let u1 = g1.mul(&basis_coeff);
    let u2 = g2.mul(&basis_coeff);
    let w = u2.mul(&u1.adjoint());

    // Certificates: unitarity and the three intertwinings.
    let n = c1.ambient_dim;
    let mut resid = w.mul(&w.adjoint()).dist(&CMatrix::identity(n));
    let womega = w.mul_vec(&c1.omega);
    resid = resid.max(vec_norm(
        &womega
            .iter()
            .zip(&c2.omega)
            .map(|(a, b)| a - b)
            .collect::<Vec<_>>(),
    ));
    for i in 0..t {
        resid = resid.max(w.mul(&c1.pi_images[i]).dist(&c2.pi_images[i].mul(&w)));
    }
    for lvl in 0..depth {
        resid = resid.max(w.mul(&c1.v_levels[lvl]).dist(&c2.v_levels[lvl].mul(&w)));
    }
    if resid > tol_eq {
        return Err(Error::NotEquivalent { residual: resid });
    }
    Ok(w)
}

/// Norm comparison between the limit representation and the GNS
/// representation, for multiplicative dynamics with `Ω` cyclic for the
/// commutant.
#[derive(Debug, Clone)]
pub struct NormCompareReport {
    /// `‖π_∞(a)‖`.
    pub norm_limit: f64,
    /// `‖π_φ(a)‖`.
    pub norm_gns: f64,
    /// `π_∞(a) = 0 ⇔ π_φ(a) = 0` for the supplied element.
    pub kernel_match: bool,
    /// Mutual containment residual of `ker(a ↦ π_∞(a)Ω_∞)` and
    /// `ker(a ↦ π_∞(a))`; small means `Ω_∞` separates `π_∞(A)`.
    pub separating_residual: f64,
}

/// Compares `‖π_∞(a)‖` with `‖π_φ(a)‖` and certifies the separation
/// statements behind the equality.
pub fn norm_compare(c: &CgnsData, a: &Element, tol: f64) -> Result<NormCompareReport> {
    let tower = c.tower();
    let hom = tower.map().homomorphism_residual();
    if hom > tol.max(1e-9) {
        return Err(Error::PreconditionFailed(format!(
            "dynamics is not multiplicative (residual {hom:.3e})"
        )));
    }
    let g = tower.gns();
    let comm = crate::algebra::commutant(g.basis_images(), tol)?;
    let rank = orbit_rank(&comm, g.dim(), g.omega(), tol)?;
    if rank != g.dim() {
        return Err(Error::PreconditionFailed(
            "cyclic vector is not cyclic for the commutant".into(),
        ));
    }
    let norm_limit = op_norm(&c.pi(a));
    let norm_gns = op_norm(&g.rep(a));
    let zero_tol = tol.max(1e-9);
    let kernel_match = (norm_limit <= zero_tol) == (norm_gns <= zero_tol);

    // Separation of Ω_∞: the orbit kernel and the operator kernel coincide.
    let t = tower.map().algebra().total_dim();
    let orbit_cols: Vec<Vec<C64>> = (0..t).map(|i| c.pi_images[i].mul_vec(&c.omega)).collect();
    let orbit = CMatrix::from_cols(&orbit_cols);
    let op_cols: Vec<Vec<C64>> = (0..t).map(|i| c.pi_images[i].to_vec()).collect();
    let ops = CMatrix::from_cols(&op_cols);
    let scale = ops.fro_norm().max(1.0);
    let k_orbit = kernel_basis_scaled(&orbit, tol, scale)?;
    let k_ops = kernel_basis_scaled(&ops, tol, scale)?;
    let s_orbit = crate::algebra::Subspace::from_orthonormal(k_orbit);
    let s_ops = crate::algebra::Subspace::from_orthonormal(k_ops);
    let separating_residual = s_orbit
        .containment_residual(&s_ops)
        .max(s_ops.containment_residual(&s_orbit));
    Ok(NormCompareReport {
        norm_limit,
        norm_gns,
        kernel_match,
        separating_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;

    fn m2() -> Algebra {
        Algebra::full(2)
    }

    fn zero() -> C64 {
        C64::new(0.0, 0.0)
    }

    #[test]
    fn averaging_tower_dims_double() {
        let (avg, uniform) = instances::averaging_c2().unwrap();
        let tower = build_tower(&avg, &uniform, 3, 1e-10, DEFAULT_DIMENSION_CAP, None).unwrap();
        assert_eq!(tower.dims(), alloc::vec![2, 4, 8, 16]);
    }

    #[test]
    fn automorphism_tower_collapses() {
        let alg = m2();
        let tr = crate::gns::State::tracial(&alg);
        let ad_w = instances::ad_unitary(&alg, &instances::qubit_unitary_phase()).unwrap();
        let tower = build_tower(&ad_w, &tr, 3, 1e-10, DEFAULT_DIMENSION_CAP, None).unwrap();
        assert_eq!(tower.dims(), alloc::vec![4, 4, 4, 4]);
        for n in 0..3 {
            let lam = tower.levels()[n].lambda_to_next.as_ref().unwrap();
            assert!(lam.mul(&lam.adjoint()).dist(&CMatrix::identity(4)) < 1e-10);
            let v = tower.levels()[n].v_to_next.as_ref().unwrap();
            assert!(v.mul(&v.adjoint()).dist(&CMatrix::identity(4)) < 1e-10);
        }
    }

    #[test]
    fn depolarizing_tower_dims_quadruple() {
        let alg = m2();
        let tr = crate::gns::State::tracial(&alg);
        let dep = instances::depolarizing_m2();
        let tower = build_tower(&dep, &tr, 2, 1e-10, DEFAULT_DIMENSION_CAP, None).unwrap();
        assert_eq!(tower.dims(), alloc::vec![4, 16, 64]);
    }

    #[test]
    fn extend_tower_matches_direct_build() {
        let (avg, uniform) = instances::averaging_c2().unwrap();
        let short = build_tower(&avg, &uniform, 2, 1e-10, DEFAULT_DIMENSION_CAP, None).unwrap();
        let extended = extend_tower(short, 4, DEFAULT_DIMENSION_CAP).unwrap();
        let direct = build_tower(&avg, &uniform, 4, 1e-10, DEFAULT_DIMENSION_CAP, None).unwrap();
        assert_eq!(extended.dims(), direct.dims());
        // The construction is deterministic, so the levels coincide exactly.
        for n in 0..4 {
            let a = extended.levels()[n].lambda_to_next.as_ref().unwrap();
            let b = direct.levels()[n].lambda_to_next.as_ref().unwrap();
            assert!(a.dist(b) < 1e-13, "level {n}");
        }
        let rel = extended.relation_residuals().unwrap();
        assert!(rel.max_residual() < 1e-10);
        // Extending to the current depth is a no-op.
        let same = extend_tower(direct, 3, DEFAULT_DIMENSION_CAP).unwrap();
        assert_eq!(same.depth(), 4);
    }

    #[test]
    fn tower_rejects_oversized_builds_and_zero_depth() {
        let alg = m2();
        let tr = crate::gns::State::tracial(&alg);
        let dep = instances::depolarizing_m2();
        assert!(matches!(
            build_tower(&dep, &tr, 4, 1e-10, 100, None),
            Err(Error::DimensionCap { .. })
        ));
        assert!(build_tower(&dep, &tr, 0, 1e-10, 100, None).is_err());
    }

    #[test]
    fn tower_relations_hold_on_averaging_instance() {
        let (avg, uniform) = instances::averaging_c2().unwrap();
        let tower = build_tower(&avg, &uniform, 3, 1e-10, DEFAULT_DIMENSION_CAP, None).unwrap();
        let rel = tower.relation_residuals().unwrap();
        assert!(rel.max_residual() < 1e-10, "{rel:?}");
    }

    #[test]
    fn cgns_averaging_report_passes() {
        let (avg, uniform) = instances::averaging_c2().unwrap();
        let tower = build_tower(&avg, &uniform, 3, 1e-10, DEFAULT_DIMENSION_CAP, None).unwrap();
        let c = cgns_operators(tower);
        let report = verify_cgns(&c, 1e-10).unwrap();
        assert!(report.pass(1e-10), "{report:?}");
    }

    #[test]
    fn cgns_automorphism_all_residuals_small() {
        let alg = m2();
        let tr = crate::gns::State::tracial(&alg);
        let ad_w = instances::ad_unitary(&alg, &instances::qubit_unitary_phase()).unwrap();
        let tower = build_tower(&ad_w, &tr, 3, 1e-10, DEFAULT_DIMENSION_CAP, None).unwrap();
        let c = cgns_operators(tower);
        assert!(c.v_total.is_some());
        let report = verify_cgns(&c, 1e-10).unwrap();
        assert!(report.pass(1e-11), "{report:?}");
    }

    #[test]
    fn cyclic_span_matches_stage_dimensions() {
        let (avg, uniform) = instances::averaging_c2().unwrap();
        let tower = build_tower(&avg, &uniform, 3, 1e-10, DEFAULT_DIMENSION_CAP, None).unwrap();
        let dims = tower.dims();
        let c = cgns_operators(tower);
        for n in 0..=2 {
            assert_eq!(cyclic_span_dimension(&c, n, 1e-8).unwrap(), dims[n]);
        }
        assert!(matches!(
            cyclic_span_dimension(&c, 4, 1e-8),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn budget_guard_on_v_application() {
        let (avg, uniform) = instances::averaging_c2().unwrap();
        let tower = build_tower(&avg, &uniform, 2, 1e-10, DEFAULT_DIMENSION_CAP, None).unwrap();
        let c = cgns_operators(tower);
        assert!(c.v_chain_from_bottom(2).is_ok());
        assert!(matches!(
            c.v_chain_from_bottom(3),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn unitary_equivalence_of_identical_towers_is_identity() {
        let (avg, uniform) = instances::averaging_c2().unwrap();
        let t1 = build_tower(&avg, &uniform, 2, 1e-10, DEFAULT_DIMENSION_CAP, None).unwrap();
        let t2 = build_tower(&avg, &uniform, 2, 1e-10, DEFAULT_DIMENSION_CAP, None).unwrap();
        let c1 = cgns_operators(t1);
        let c2 = cgns_operators(t2);
        let w = unitary_equivalence(&c1, &c2, 1e-10).unwrap();
        assert!(w.dist(&CMatrix::identity(c1.ambient_dim)) < 1e-8);
    }

    #[test]
    fn unitary_equivalence_of_shuffled_towers() {
        let (avg, uniform) = instances::averaging_c2().unwrap();
        let t1 = build_tower(&avg, &uniform, 3, 1e-10, DEFAULT_DIMENSION_CAP, None).unwrap();
        let t2 = build_tower(&avg, &uniform, 3, 1e-10, DEFAULT_DIMENSION_CAP, Some(7)).unwrap();
        let c1 = cgns_operators(t1);
        let c2 = cgns_operators(t2);
        // The shuffled realization is genuinely different...
        assert!(c1.z[0].dist(&c2.z[0]) > 1e-6);
        // ...but intertwined by a unitary.
        let w = unitary_equivalence(&c1, &c2, 1e-10).unwrap();
        assert!(w.mul(&w.adjoint()).dist(&CMatrix::identity(c1.ambient_dim)) < 1e-9);
    }

    #[test]
    fn norm_compare_on_copy_endomorphism() {
        let (copy, state) = instances::copy_endomorphism_m2m2().unwrap();
        let tower = build_tower(&copy, &state, 3, 1e-10, DEFAULT_DIMENSION_CAP, None).unwrap();
        assert_eq!(tower.dims(), alloc::vec![4, 4, 4, 4]);
        let cg = cgns_operators(tower);
        let alg = copy.algebra().clone();

        // a = 1: both norms 1.
        let rep = norm_compare(&cg, &alg.unit(), 1e-9).unwrap();
        assert!((rep.norm_limit - 1.0).abs() < 1e-9 && (rep.norm_gns - 1.0).abs() < 1e-9);
        assert!(rep.separating_residual < 1e-8);

        // a = 0⊕y: both representations kill it.
        let mut coords = alloc::vec![zero(); 8];
        coords[alg.coord_index(1, 0, 1)] = c(1.0);
        let a = alg.element_from_coords(&coords);
        let rep = norm_compare(&cg, &a, 1e-9).unwrap();
        assert!(rep.norm_limit < 1e-9 && rep.norm_gns < 1e-9);
        assert!(rep.kernel_match);

        // Generic element: norms agree.
        let a = crate::algebra::random_hermitian_element(&alg, 17);
        let rep = norm_compare(&cg, &a, 1e-9).unwrap();
        assert!((rep.norm_limit - rep.norm_gns).abs() < 1e-9);
        assert!(rep.kernel_match);
    }

    #[test]
    fn norm_compare_rejects_non_multiplicative() {
        let alg = m2();
        let tr = crate::gns::State::tracial(&alg);
        let dep = instances::depolarizing_m2();
        let tower = build_tower(&dep, &tr, 2, 1e-10, DEFAULT_DIMENSION_CAP, None).unwrap();
        let c = cgns_operators(tower);
        assert!(norm_compare(&c, &alg.unit(), 1e-9).is_err());
    }

    #[test]
    fn domain_nesting_along_the_tower() {
        // D_Φ ⊆ D_{Φ_n} at every built level.
        let alg = m2();
        let tr = crate::gns::State::tracial(&alg);
        let deph = instances::dephasing_m2();
        let tower = build_tower(&deph, &tr, 2, 1e-10, DEFAULT_DIMENSION_CAP, None).unwrap();
        let d_phi = deph.multiplicative_domain(1e-10).unwrap();
        for n in 0..=2 {
            let images = tower.phi_level_images(n);
            let d_n = crate::channel::multiplicative_domain_of_rep(&alg, &images, 1e-10).unwrap();
            assert!(d_phi.containment_residual(&d_n) < 1e-8, "level {n}");
        }
    }
}
