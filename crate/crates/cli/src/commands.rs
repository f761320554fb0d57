//! Command pipelines: each command runs a module pipeline over the parsed
//! system and renders the certified residuals as a report.

use std::time::Instant;

use cstar_core::algebra::random_hermitian_element;
use cstar_core::cgns::{
    build_tower, cgns_operators, cyclic_span_dimension, norm_compare, verify_cgns, CgnsData, Tower,
    DEFAULT_DIMENSION_CAP,
};
use cstar_core::dilation::{
    build_dilation, dilation_invariant_residuals, minimality_and_separating,
    right_inverse_analyzer, verify_dilation_diagram, DilationData,
};
use cstar_core::ergodic::{classify, dilation_transfer_check, ErgodicReport};
use cstar_core::gns::{
    check_invariance, gns_construct, induce_w_system, modular_commutation_check,
    modular_pair_diagnostics, phi_adjoint, transfer_contraction, transfer_isometry_residual,
    GnsData, DEFAULT_T_SAMPLES,
};
use cstar_core::numerics::{op_norm, vec_norm, CMatrix};
use cstar_core::stinespring::{check_md_commutation, lambda0, stinespring_of_composed};
use cstar_core::Error as CoreError;

use crate::report::{check, Check, Report};
use crate::spec::ParsedSystem;
use crate::CliError;

/// Runtime options shared by all commands.
#[derive(Debug, Clone)]
pub struct Options {
    /// Tower depth.
    pub depth: usize,
    /// Isometry headroom for budgeted checks; clamped to the depth.
    pub budget: Option<usize>,
    /// Tolerance override (the spec file value otherwise).
    pub tol: Option<f64>,
    /// Seed override for coordinate gauges and sampled elements.
    pub seed: Option<u64>,
    /// Cesàro range for the ergodic cross-check.
    pub cesaro: usize,
    /// Stage-dimension cap for tower builds.
    pub cap: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            depth: 3,
            budget: None,
            tol: None,
            seed: None,
            cesaro: 10_000,
            cap: DEFAULT_DIMENSION_CAP,
        }
    }
}

/// Command selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Validate,
    Gns,
    Stinespring,
    Tower,
    CgnsVerify,
    Adjoint,
    Dilate,
    Ergodic,
    RightInverse,
    All,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Validate => "validate",
            CommandKind::Gns => "gns",
            CommandKind::Stinespring => "stinespring",
            CommandKind::Tower => "tower",
            CommandKind::CgnsVerify => "cgns-verify",
            CommandKind::Adjoint => "adjoint",
            CommandKind::Dilate => "dilate",
            CommandKind::Ergodic => "ergodic",
            CommandKind::RightInverse => "right-inverse",
            CommandKind::All => "all",
        }
    }
}

/// Lazily computed shared artifacts for one run.
struct Pipeline<'a> {
    sys: &'a ParsedSystem,
    tol: f64,
    seed: u64,
    depth: usize,
    budget: usize,
    cesaro: usize,
    cap: usize,
    gns: Option<GnsData>,
    transfer: Option<CMatrix>,
    cgns: Option<CgnsData>,
    adjoint: Option<Result<cstar_core::channel::UcpMap, CoreError>>,
    dilation: Option<DilationData>,
    classification: Option<ErgodicReport>,
    artifacts: Option<serde_json::Value>,
}

impl<'a> Pipeline<'a> {
    fn new(sys: &'a ParsedSystem, opts: &Options) -> Self {
        let depth = opts.depth.max(1);
        Pipeline {
            sys,
            tol: opts.tol.unwrap_or(sys.tol),
            seed: opts.seed.unwrap_or(sys.seed),
            depth,
            budget: opts.budget.unwrap_or(depth).min(depth),
            cesaro: opts.cesaro,
            cap: opts.cap,
            gns: None,
            transfer: None,
            cgns: None,
            adjoint: None,
            dilation: None,
            classification: None,
            artifacts: None,
        }
    }

    fn thr(&self, floor: f64) -> f64 {
        self.tol.max(floor)
    }

    fn gns(&mut self) -> Result<&GnsData, CoreError> {
        if self.gns.is_none() {
            self.gns = Some(gns_construct(&self.sys.algebra, &self.sys.state, self.tol)?);
        }
        Ok(self.gns.as_ref().unwrap())
    }

    fn transfer(&mut self) -> Result<&CMatrix, CoreError> {
        if self.transfer.is_none() {
            self.gns()?;
            let g = self.gns.as_ref().unwrap();
            self.transfer = Some(transfer_contraction(
                g,
                &self.sys.map,
                &self.sys.state,
                self.tol,
            )?);
        }
        Ok(self.transfer.as_ref().unwrap())
    }

    fn cgns(&mut self) -> Result<&CgnsData, CoreError> {
        if self.cgns.is_none() {
            let tower = self.build_tower()?;
            self.cgns = Some(cgns_operators(tower));
        }
        Ok(self.cgns.as_ref().unwrap())
    }

    fn build_tower(&self) -> Result<Tower, CoreError> {
        build_tower(
            &self.sys.map,
            &self.sys.state,
            self.depth,
            self.tol,
            self.cap,
            Some(self.seed),
        )
    }

    fn adjoint(&mut self) -> &Result<cstar_core::channel::UcpMap, CoreError> {
        if self.adjoint.is_none() {
            self.adjoint = Some(phi_adjoint(&self.sys.map, &self.sys.state, self.tol));
        }
        self.adjoint.as_ref().unwrap()
    }

    fn classification(&mut self) -> Result<&ErgodicReport, CoreError> {
        if self.classification.is_none() {
            self.classification = Some(classify(
                &self.sys.map,
                &self.sys.state,
                self.tol,
                self.cesaro,
            )?);
        }
        Ok(self.classification.as_ref().unwrap())
    }

    fn multiplicative(&self) -> bool {
        self.sys.map.is_multiplicative(self.thr(1e-9))
    }

    fn faithful(&self) -> bool {
        self.sys.state.is_faithful(1e-12)
    }
}

fn error_check(id: &str, e: &CoreError) -> Check {
    check(id, "pipeline error", format!("{e}"), 1.0, 0.0)
}

fn flag_check(id: &str, anchor: &str, description: String, ok: bool, threshold_note: f64) -> Check {
    check(
        id,
        anchor,
        description,
        if ok { 0.0 } else { 1.0 },
        threshold_note,
    )
}

fn skip_check(id: &str, reason: &str) -> Check {
    check(id, "plan", format!("skipped: {reason}"), 0.0, 0.0)
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

fn run_validate(p: &mut Pipeline) -> Vec<Check> {
    let mut checks = Vec::new();
    let sys = p.sys;
    let alg = &sys.algebra;

    // State: trace and positivity were enforced at parse time; re-measure.
    let trace: f64 = sys.state.densities().iter().map(|d| d.trace().re).sum();
    checks.push(check(
        "validate.state-trace",
        "state normalization",
        format!("|tr ρ − 1| over {} block(s)", alg.block_count()),
        (trace - 1.0).abs(),
        p.thr(1e-9),
    ));

    let one = alg.unit();
    let unital = sys
        .map
        .apply(&one)
        .map(|img| img.sub(&one).unwrap().hs_norm())
        .unwrap_or(1.0);
    checks.push(check(
        "validate.unital",
        "unitality of the dynamics",
        "‖Φ(1) − 1‖".into(),
        unital,
        p.thr(1e-9),
    ));

    let mut min_eig = 0.0f64;
    for choi in sys.map.choi_blocks() {
        if let Ok(eig) = cstar_core::numerics::herm_eig(&choi.hermitize(), 1e-8) {
            min_eig = min_eig.min(eig.eigenvalues.first().copied().unwrap_or(0.0));
        }
    }
    checks.push(check(
        "validate.complete-positivity",
        "complete positivity via the Choi blocks",
        "max(0, −λ_min(Choi))".into(),
        (-min_eig).max(0.0),
        p.thr(1e-9),
    ));

    match check_invariance(&sys.map, &sys.state) {
        Ok(rep) => checks.push(check(
            "validate.invariance",
            "state invariance",
            "max |φ(Φ(a)) − φ(a)| over the basis".into(),
            rep.max_residual,
            p.thr(1e-9),
        )),
        Err(e) => checks.push(error_check("validate.invariance", &e)),
    }

    if sys.right_inverse.is_some() {
        checks.push(check(
            "validate.right-inverse-ucp",
            "candidate right inverse is ucp",
            "validated at parse time".into(),
            0.0,
            0.0,
        ));
    }
    checks
}

// ---------------------------------------------------------------------------
// gns
// ---------------------------------------------------------------------------

fn run_gns(p: &mut Pipeline) -> Vec<Check> {
    let mut checks = Vec::new();
    let (g, u) = match (|| -> Result<(GnsData, CMatrix), CoreError> {
        p.transfer()?;
        Ok((p.gns.clone().unwrap(), p.transfer.clone().unwrap()))
    })() {
        Ok(x) => x,
        Err(e) => {
            checks.push(error_check("gns.construction", &e));
            return checks;
        }
    };
    let sys = p.sys;
    let alg = &sys.algebra;
    let t = alg.total_dim();

    let mut reproduction = 0.0f64;
    let mut star = 0.0f64;
    for i in 0..t {
        let e = alg.basis_element(i);
        let via = cstar_core::numerics::inner(g.omega(), &g.basis_images()[i].mul_vec(g.omega()));
        reproduction = reproduction.max((via - sys.state.eval(&e)).norm());
        star = star.max(g.rep(&e.star()).dist(&g.basis_images()[i].adjoint()));
    }
    checks.push(check(
        "gns.reproduction",
        "state reproduction on the cyclic vector",
        format!("dim H = {}", g.dim()),
        reproduction,
        p.thr(1e-10),
    ));
    checks.push(check(
        "gns.star-representation",
        "the representation preserves the involution",
        "max ‖π(a*) − π(a)*‖".into(),
        star,
        p.thr(1e-9),
    ));

    let bound = (op_norm(&u) - 1.0).max(0.0);
    checks.push(check(
        "gns.contraction-bound",
        "transfer contraction bound",
        "max(0, ‖U‖ − 1)".into(),
        bound,
        p.thr(1e-10),
    ));
    let defining = u
        .mul(g.embed_matrix())
        .dist(&g.embed_matrix().mul(sys.map.superop()));
    checks.push(check(
        "gns.transfer-relation",
        "defining relation of the transfer contraction",
        "‖U·embed − embed∘Φ‖ on the basis".into(),
        defining,
        p.thr(1e-10),
    ));
    let uo = u.mul_vec(g.omega());
    let fix = vec_norm(
        &uo.iter()
            .zip(g.omega())
            .map(|(a, b)| a - b)
            .collect::<Vec<_>>(),
    );
    checks.push(check(
        "gns.fixed-vector",
        "transfer contraction fixed point",
        "‖UΩ − Ω‖".into(),
        fix,
        p.thr(1e-10),
    ));

    let iso = transfer_isometry_residual(&u);
    let hom = sys.map.homomorphism_residual();
    let agree = (iso <= p.thr(1e-9)) == (hom <= p.thr(1e-9));
    checks.push(flag_check(
        "gns.isometry-iff-multiplicative",
        "isometry of the transfer map versus multiplicativity",
        format!("isometry residual {iso:.3e}, homomorphism residual {hom:.3e}"),
        agree,
        0.0,
    ));

    match induce_w_system(&g, &u, p.tol) {
        Ok(w) => checks.push(check(
            "gns.induced-system",
            "induced system on the double commutant",
            format!("dim π(A)'' = {}", w.dim()),
            0.0,
            0.0,
        )),
        Err(CoreError::NotSeparating { residual }) => checks.push(check(
            "gns.induced-system",
            "induced system on the double commutant",
            "cyclic vector is not cyclic for the commutant".into(),
            1.0 + residual,
            0.0,
        )),
        Err(e) => checks.push(error_check("gns.induced-system", &e)),
    }
    checks
}

// ---------------------------------------------------------------------------
// stinespring
// ---------------------------------------------------------------------------

fn run_stinespring(p: &mut Pipeline) -> Vec<Check> {
    let mut checks = Vec::new();
    let sys = p.sys;
    let alg = &sys.algebra;
    let t = alg.total_dim();
    let step = match (|| -> Result<_, CoreError> {
        p.transfer()?;
        let g = p.gns.as_ref().unwrap();
        let s = stinespring_of_composed(&sys.map, g.basis_images(), g.dim(), p.tol)?;
        Ok(s)
    })() {
        Ok(s) => s,
        Err(e) => {
            checks.push(error_check("stinespring.construction", &e));
            return checks;
        }
    };
    let g = p.gns.as_ref().unwrap();
    let u = p.transfer.as_ref().unwrap();

    let mut fact = 0.0f64;
    for i in 0..t {
        let e = alg.basis_element(i);
        let phi0 = g.rep(&sys.map.apply(&e).unwrap());
        fact = fact.max(
            step.v
                .adjoint()
                .mul(&step.sigma_images[i])
                .mul(&step.v)
                .dist(&phi0),
        );
    }
    checks.push(check(
        "stinespring.factorization",
        "Stinespring factorization",
        format!("dilation dim = {}", step.dilation_dim),
        fact,
        p.thr(1e-10),
    ));
    let iso = step
        .v
        .adjoint()
        .mul(&step.v)
        .dist(&CMatrix::identity(step.source_dim));
    checks.push(check(
        "stinespring.isometry",
        "the embedding is an isometry",
        "‖V*V − I‖".into(),
        iso,
        p.thr(1e-10),
    ));

    match lambda0(g, &step, u, p.tol) {
        Ok(lam) => {
            let fact0 = step.v.adjoint().mul(&lam).dist(u);
            checks.push(check(
                "stinespring.lambda-factorization",
                "factorization of the transfer contraction",
                "‖U − V₀*Λ₀‖".into(),
                fact0,
                p.thr(1e-10),
            ));
            let mut inter = 0.0f64;
            for i in 0..t {
                let e = alg.basis_element(i);
                inter = inter.max(step.sigma(&e).mul(&lam).dist(&lam.mul(&g.rep(&e))));
            }
            checks.push(check(
                "stinespring.lambda-intertwine",
                "the factorizing isometry intertwines the representations",
                "max ‖σ₁(a)Λ₀ − Λ₀π(a)‖".into(),
                inter,
                p.thr(1e-10),
            ));
        }
        Err(e) => checks.push(error_check("stinespring.lambda-factorization", &e)),
    }

    match sys.map.multiplicative_domain(p.tol) {
        Ok(dom) => {
            let md = check_md_commutation(&step, &dom);
            checks.push(check(
                "stinespring.domain-commutation",
                "range projection commutes with the multiplicative domain",
                format!("domain dim = {}", dom.dim()),
                md.commutation_residual,
                p.thr(1e-9),
            ));
            checks.push(flag_check(
                "stinespring.domain-unitary-equivalence",
                "the embedding is unitary exactly for multiplicative dynamics",
                format!(
                    "‖VV* − I‖ = {:.3e}, domain {}/{}",
                    md.range_projection_residual,
                    dom.dim(),
                    t
                ),
                md.equivalence_holds,
                0.0,
            ));
        }
        Err(e) => checks.push(error_check("stinespring.domain-commutation", &e)),
    }
    checks
}

// ---------------------------------------------------------------------------
// tower / cgns-verify
// ---------------------------------------------------------------------------

fn run_tower(p: &mut Pipeline) -> Vec<Check> {
    let mut checks = Vec::new();
    let tower = match p.build_tower() {
        Ok(t) => t,
        Err(e) => {
            checks.push(error_check("tower.build", &e));
            return checks;
        }
    };
    checks.push(check(
        "tower.build",
        "iterated dilation tower",
        format!("stage dims {:?}", tower.dims()),
        0.0,
        0.0,
    ));
    match tower.relation_residuals() {
        Ok(rel) => {
            let thr = p.thr(1e-9);
            let entries: [(&str, f64); 9] = [
                ("tower.intertwine", rel.intertwine),
                ("tower.compress", rel.compress),
                ("tower.ladder", rel.ladder),
                ("tower.ladder-adjoint", rel.ladder_adjoint),
                ("tower.stinespring", rel.stinespring),
                ("tower.xi-compose", rel.xi_compose),
                ("tower.xi-intertwine", rel.xi_intertwine),
                ("tower.xi-ladder", rel.xi_ladder),
                ("tower.xi-ladder-adjoint", rel.xi_ladder_adjoint),
            ];
            for (id, r) in entries {
                checks.push(check(
                    id,
                    "tower commutation relations",
                    String::new(),
                    r,
                    thr,
                ));
            }
        }
        Err(e) => checks.push(error_check("tower.relations", &e)),
    }
    checks
}

fn run_cgns_verify(p: &mut Pipeline) -> Vec<Check> {
    let mut checks = Vec::new();
    if let Err(e) = p.cgns() {
        checks.push(error_check("cgns.build", &e));
        return checks;
    }
    let tol9 = p.thr(1e-9);
    let budget = p.budget;
    let seed = p.seed;
    let multiplicative = p.multiplicative();
    let cg = p.cgns.as_ref().unwrap();
    match verify_cgns(cg, p.tol) {
        Ok(report) => {
            for item in &report.items {
                let id = format!("cgns.{}", item.name.replace(' ', "-"));
                checks.push(check(&id, &item.name, String::new(), item.residual, tol9));
            }
        }
        Err(e) => checks.push(error_check("cgns.verify", &e)),
    }

    // Cyclic span dimensions at every budgeted level.
    let t = p.sys.algebra.total_dim();
    let dims = cg.tower().dims();
    #[allow(clippy::needless_range_loop)]
    for n in 0..=budget {
        if t.checked_pow((n + 1) as u32)
            .map(|c| c > 4096)
            .unwrap_or(true)
        {
            checks.push(skip_check(
                &format!("cgns.cyclic-span-{n}"),
                "monomial family exceeds the desk-scale guard",
            ));
            continue;
        }
        match cyclic_span_dimension(cg, n, p.thr(1e-8)) {
            Ok(rank) => checks.push(check(
                &format!("cgns.cyclic-span-{n}"),
                "monomial vectors span the embedded stage",
                format!("rank {rank}, stage dim {}", dims[n]),
                (rank as f64 - dims[n] as f64).abs(),
                0.0,
            )),
            Err(e) => checks.push(error_check(&format!("cgns.cyclic-span-{n}"), &e)),
        }
    }

    if multiplicative {
        checks.push(check(
            "cgns.collapse",
            "multiplicative dynamics collapse the tower",
            format!("ambient {} vs GNS {}", cg.ambient_dim, dims[0]),
            (cg.ambient_dim as f64 - dims[0] as f64).abs(),
            0.0,
        ));
        let mut norm_resid = 0.0f64;
        let mut sep = 0.0f64;
        let mut applicable = true;
        for k in 0..5u64 {
            let a = random_hermitian_element(&p.sys.algebra, seed.wrapping_add(k));
            match norm_compare(cg, &a, p.tol) {
                Ok(rep) => {
                    norm_resid = norm_resid.max((rep.norm_limit - rep.norm_gns).abs());
                    sep = sep.max(rep.separating_residual);
                }
                Err(_) => {
                    applicable = false;
                    break;
                }
            }
        }
        if applicable {
            checks.push(check(
                "cgns.norm-equality",
                "limit and base representations are isometric",
                "max |‖π_∞(a)‖ − ‖π_φ(a)‖| over seeded elements".into(),
                norm_resid,
                tol9,
            ));
            checks.push(check(
                "cgns.separating-vector",
                "the limit vector separates the limit representation",
                "kernel agreement residual".into(),
                sep,
                p.thr(1e-8),
            ));
        } else {
            checks.push(skip_check(
                "cgns.norm-equality",
                "commutant cyclicity unavailable",
            ));
        }
    } else {
        checks.push(skip_check(
            "cgns.collapse",
            "dynamics is not multiplicative",
        ));
    }
    checks
}

// ---------------------------------------------------------------------------
// adjoint
// ---------------------------------------------------------------------------

fn run_adjoint(p: &mut Pipeline) -> Vec<Check> {
    let mut checks = Vec::new();
    if !p.faithful() {
        checks.push(check(
            "adjoint.faithful",
            "state faithfulness",
            "the modular and adjoint theory requires a faithful state".into(),
            1.0,
            0.0,
        ));
        return checks;
    }
    let sys = p.sys;
    let alg = &sys.algebra;
    let (g, u) = match (|| -> Result<_, CoreError> {
        p.transfer()?;
        Ok((p.gns.clone().unwrap(), p.transfer.clone().unwrap()))
    })() {
        Ok(x) => x,
        Err(e) => {
            checks.push(error_check("adjoint.construction", &e));
            return checks;
        }
    };
    let diag = match modular_pair_diagnostics(&g, &sys.state, p.tol) {
        Ok(d) => d,
        Err(e) => {
            checks.push(error_check("adjoint.modular-pair", &e));
            return checks;
        }
    };
    let (pair, closed, oracle) = diag;
    checks.push(check(
        "adjoint.modular-identities",
        "closed-form modular pair identities",
        "J² = 1, JΔJ = Δ⁻¹, S(π(a)Ω) = π(a*)Ω".into(),
        closed,
        p.thr(1e-9),
    ));
    checks.push(check(
        "adjoint.modular-oracle",
        "closed form matches the realified polar oracle",
        String::new(),
        oracle,
        p.thr(1e-9),
    ));
    let commutation = modular_commutation_check(&u, &pair, &DEFAULT_T_SAMPLES);
    let commutes = commutation.pass(p.thr(1e-8));

    match p.adjoint().clone() {
        Ok(sharp) => {
            let mut adjunction = 0.0f64;
            for i in 0..alg.total_dim() {
                let a = alg.basis_element(i);
                let fa = sys.map.apply(&a).unwrap();
                for j in 0..alg.total_dim() {
                    let b = alg.basis_element(j);
                    let lhs = sys.state.eval(&a.mul(&sharp.apply(&b).unwrap()).unwrap());
                    let rhs = sys.state.eval(&fa.mul(&b).unwrap());
                    adjunction = adjunction.max((lhs - rhs).norm());
                }
            }
            checks.push(check(
                "adjoint.adjunction",
                "adjunction identity",
                "max |φ(aΦ♯(b)) − φ(Φ(a)b)| over basis pairs".into(),
                adjunction,
                p.thr(1e-10),
            ));
            let inv = check_invariance(&sharp, &sys.state)
                .map(|r| r.max_residual)
                .unwrap_or(1.0);
            checks.push(check(
                "adjoint.invariance",
                "the adjoint preserves the state",
                "max |φ(Φ♯(a)) − φ(a)|".into(),
                inv,
                p.thr(1e-9),
            ));
            checks.push(flag_check(
                "adjoint.consistency",
                "adjoint existence matches modular commutation",
                format!(
                    "adjoint exists; commutation residual {:.3e}",
                    commutation.max_residual()
                ),
                commutes,
                0.0,
            ));
            // Emit the adjoint superoperator.
            let t = alg.total_dim();
            let mut rows = Vec::with_capacity(t);
            for r in 0..t {
                let mut row = Vec::with_capacity(t);
                for ccol in 0..t {
                    let z = sharp.superop()[(r, ccol)];
                    row.push(serde_json::json!([z.re, z.im]));
                }
                rows.push(serde_json::Value::Array(row));
            }
            p.artifacts = Some(serde_json::json!({ "adjoint_superop": rows }));
        }
        Err(CoreError::ModularObstruction { detail }) => {
            checks.push(flag_check(
                "adjoint.consistency",
                "adjoint existence matches modular commutation",
                format!(
                    "no adjoint ({detail}); commutation residual {:.3e}",
                    commutation.max_residual()
                ),
                !commutes,
                0.0,
            ));
        }
        Err(e) => checks.push(error_check("adjoint.existence", &e)),
    }
    checks
}

// ---------------------------------------------------------------------------
// dilate
// ---------------------------------------------------------------------------

fn run_dilate(p: &mut Pipeline) -> Vec<Check> {
    let mut checks = Vec::new();
    if !p.multiplicative() {
        checks.push(check(
            "dilate.multiplicative",
            "reversible dilation requires multiplicative dynamics",
            format!(
                "homomorphism residual {:.3e}",
                p.sys.map.homomorphism_residual()
            ),
            1.0,
            0.0,
        ));
        return checks;
    }
    if !p.faithful() {
        checks.push(check(
            "dilate.faithful",
            "adjoint construction requires a faithful state",
            String::new(),
            1.0,
            0.0,
        ));
        return checks;
    }
    let adjoint = match p.adjoint().clone() {
        Ok(a) => a,
        Err(e) => {
            checks.push(error_check("dilate.adjoint", &e));
            return checks;
        }
    };
    let d = match (|| -> Result<DilationData, CoreError> {
        p.cgns()?;
        build_dilation(p.cgns.clone().unwrap(), &adjoint, p.tol)
    })() {
        Ok(d) => d,
        Err(e) => {
            checks.push(error_check("dilate.build", &e));
            return checks;
        }
    };
    let tol9 = p.thr(1e-9);
    match dilation_invariant_residuals(&d) {
        Ok(items) => {
            for item in &items {
                let id = format!("dilate.{}", item.name.replace(' ', "-"));
                checks.push(check(&id, &item.name, String::new(), item.residual, tol9));
            }
        }
        Err(e) => checks.push(error_check("dilate.invariants", &e)),
    }
    match verify_dilation_diagram(&d, p.budget.min(d.budget)) {
        Ok(rep) => {
            for item in &rep.items {
                let id = format!("dilate.{}", item.name.replace(' ', "-"));
                checks.push(check(&id, &item.name, String::new(), item.residual, tol9));
            }
        }
        Err(e) => checks.push(error_check("dilate.diagram", &e)),
    }
    match minimality_and_separating(&d, p.tol) {
        Ok(rep) => {
            checks.push(check(
                "dilate.minimality",
                "conjugated copies generate the dilated algebra",
                format!("generated dim {} vs {}", rep.generated_dim, rep.big_dim),
                rep.span_residual + (rep.generated_dim as f64 - rep.big_dim as f64).abs(),
                p.thr(1e-8),
            ));
            checks.push(check(
                "dilate.separating",
                "the dilated vector separates the dilated algebra",
                format!("min singular value {:.3e}", rep.separating_min_sv),
                (1e-6 - rep.separating_min_sv).max(0.0),
                0.0,
            ));
        }
        Err(e) => checks.push(error_check("dilate.minimality", &e)),
    }
    p.dilation = Some(d);
    checks
}

// ---------------------------------------------------------------------------
// ergodic
// ---------------------------------------------------------------------------

fn run_ergodic(p: &mut Pipeline) -> Vec<Check> {
    let mut checks = Vec::new();
    let report = match p.classification() {
        Ok(r) => r.clone(),
        Err(e) => {
            checks.push(error_check("ergodic.classification", &e));
            return checks;
        }
    };
    checks.push(check(
        "ergodic.classification",
        "spectral classification",
        format!(
            "ergodic = {}, weakly mixing = {}, fixed dim = {}, peripheral = {}",
            report.ergodic,
            report.weakly_mixing,
            report.fixed_space_dim,
            report.peripheral_eigenvalues.len()
        ),
        0.0,
        0.0,
    ));
    checks.push(flag_check(
        "ergodic.peripheral-semisimple",
        "peripheral spectrum has trivial Jordan structure",
        String::new(),
        report.peripheral_semisimple,
        0.0,
    ));
    if report.inconclusive {
        checks.push(skip_check(
            "ergodic.spectral-cesaro-agreement",
            "spectrum too close to the unit circle for the finite-range average",
        ));
    } else {
        let agree = report.cesaro_ergodic() == report.ergodic
            && report.cesaro_weakly_mixing() == report.weakly_mixing;
        checks.push(flag_check(
            "ergodic.spectral-cesaro-agreement",
            "spectral and Cesàro classifications agree",
            format!(
                "plain max {:.3e}, absolute max {:.3e}",
                report.cesaro_plain_max, report.cesaro_abs_max
            ),
            agree,
            0.0,
        ));
    }

    // Transfer to the dilation where one exists.
    if p.multiplicative() && p.faithful() && p.adjoint().is_ok() {
        let adjoint = p.adjoint().clone().unwrap();
        let outcome = (|| -> Result<_, CoreError> {
            p.cgns()?;
            let d = build_dilation(p.cgns.clone().unwrap(), &adjoint, p.tol)?;
            dilation_transfer_check(&d, &report, p.cesaro.min(4000), p.thr(1e-9))
        })();
        match outcome {
            Ok(tr) => {
                checks.push(check(
                    "ergodic.transfer-reduction",
                    "correlation reduction identity through the expectation",
                    String::new(),
                    tr.reduction_residual,
                    p.thr(1e-9),
                ));
                checks.push(flag_check(
                    "ergodic.transfer-trend",
                    "dilated Cesàro trend matches the original classification",
                    format!(
                        "dilated plain {:.3e}, absolute {:.3e}",
                        tr.dilated_plain_max, tr.dilated_abs_max
                    ),
                    tr.trend_agrees,
                    0.0,
                ));
            }
            Err(CoreError::NotSeparating { .. }) => {
                checks.push(skip_check(
                    "ergodic.transfer-reduction",
                    "support is not central",
                ));
            }
            Err(e) => checks.push(error_check("ergodic.transfer-reduction", &e)),
        }
    } else {
        checks.push(skip_check(
            "ergodic.transfer-reduction",
            "no reversible dilation (dynamics not multiplicative or state not faithful)",
        ));
    }
    checks
}

// ---------------------------------------------------------------------------
// right-inverse
// ---------------------------------------------------------------------------

fn run_right_inverse(p: &mut Pipeline) -> Result<Vec<Check>, CliError> {
    let psi = p
        .sys
        .right_inverse
        .as_ref()
        .ok_or_else(|| CliError::Validation("right-inverse: the spec carries no candidate".into()))?
        .clone();
    let mut checks = Vec::new();
    match right_inverse_analyzer(&p.sys.map, &psi, &p.sys.state, p.depth, p.tol, p.cap) {
        Ok(out) => {
            let r = &out.report;
            checks.push(check(
                "right-inverse.section",
                "the candidate is a section of the dynamics",
                "max ‖Φ(Ψ(a)) − a‖".into(),
                r.section_residual,
                p.thr(1e-9),
            ));
            checks.push(check(
                "right-inverse.domain-membership",
                "the section maps into the multiplicative domain",
                String::new(),
                r.domain_membership_residual,
                p.thr(1e-8),
            ));
            checks.push(check(
                "right-inverse.kadison-defect",
                "vanishing Kadison defect on the section image",
                String::new(),
                r.kadison_defect_norm,
                p.thr(1e-8),
            ));
            checks.push(check(
                "right-inverse.adjunction",
                "the section is the state adjoint of the dynamics",
                String::new(),
                r.adjunction_residual,
                p.thr(1e-10),
            ));
            if let Some(hom) = r.homomorphism_residual {
                checks.push(check(
                    "right-inverse.homomorphism",
                    "a section under a faithful state is multiplicative",
                    String::new(),
                    hom,
                    p.thr(1e-9),
                ));
            }
            checks.push(check(
                "right-inverse.invertibility",
                "a finite-dimensional ucp section is bijective",
                format!("min singular value {:.3e}", r.min_singular_value),
                (1e-6 - r.min_singular_value).max(0.0),
                0.0,
            ));
            if let Some(m) = r.adjoint_matches {
                checks.push(check(
                    "right-inverse.adjoint-roundtrip",
                    "the adjoint of the section is the original dynamics",
                    String::new(),
                    m,
                    p.thr(1e-9),
                ));
            }
            checks.push(flag_check(
                "right-inverse.dilation",
                "reversible dilation of the section system",
                if out.dilation.is_some() {
                    "built and certified".into()
                } else {
                    "not dispatched".into()
                },
                out.dilation.is_some(),
                0.0,
            ));
        }
        Err(CoreError::NotASection { residual, witness }) => {
            checks.push(check(
                "right-inverse.section",
                "the candidate is a section of the dynamics",
                format!("witness basis element {witness}"),
                residual,
                p.thr(1e-9),
            ));
        }
        Err(e) => checks.push(error_check("right-inverse.analysis", &e)),
    }
    Ok(checks)
}

// ---------------------------------------------------------------------------
// dispatch
// ---------------------------------------------------------------------------

/// Runs one command over a parsed system.
pub fn run(kind: CommandKind, sys: &ParsedSystem, opts: &Options) -> Result<Report, CliError> {
    let start = Instant::now();
    let mut p = Pipeline::new(sys, opts);
    let mut checks = Vec::new();
    match kind {
        CommandKind::Validate => checks.extend(run_validate(&mut p)),
        CommandKind::Gns => checks.extend(run_gns(&mut p)),
        CommandKind::Stinespring => checks.extend(run_stinespring(&mut p)),
        CommandKind::Tower => checks.extend(run_tower(&mut p)),
        CommandKind::CgnsVerify => checks.extend(run_cgns_verify(&mut p)),
        CommandKind::Adjoint => checks.extend(run_adjoint(&mut p)),
        CommandKind::Dilate => checks.extend(run_dilate(&mut p)),
        CommandKind::Ergodic => checks.extend(run_ergodic(&mut p)),
        CommandKind::RightInverse => checks.extend(run_right_inverse(&mut p)?),
        CommandKind::All => {
            checks.extend(run_validate(&mut p));
            checks.extend(run_gns(&mut p));
            checks.extend(run_stinespring(&mut p));
            checks.extend(run_tower(&mut p));
            checks.extend(run_cgns_verify(&mut p));
            checks.extend(run_ergodic(&mut p));
            if p.faithful() {
                checks.extend(run_adjoint(&mut p));
            } else {
                checks.push(skip_check("adjoint.faithful", "state is not faithful"));
            }
            if p.multiplicative() && p.faithful() && p.adjoint().is_ok() {
                checks.extend(run_dilate(&mut p));
            } else {
                checks.push(skip_check(
                    "dilate.multiplicative",
                    "no reversible dilation for this system",
                ));
            }
            if sys.right_inverse.is_some() {
                checks.extend(run_right_inverse(&mut p)?);
            }
        }
    }
    let mut report = Report::new(kind.name(), checks, start.elapsed().as_secs_f64() * 1e3);
    report.artifacts = p.artifacts;
    Ok(report)
}
