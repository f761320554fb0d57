//! System-spec files: JSON ingestion and validation.
//!
//! A spec describes a triple `(algebra, state, dynamics)`, optionally a
//! candidate right inverse of the dynamics, a tolerance and a seed. Complex
//! numbers are `[re, im]` pairs and matrices are row-major nested arrays;
//! the `stochastic` dynamics shorthand takes a plain real row-stochastic
//! matrix on a diagonal algebra, and classical states may be given as a
//! probability vector.

use serde::{Deserialize, Serialize};

use cstar_core::algebra::Algebra;
use cstar_core::channel::UcpMap;
use cstar_core::gns::State;
use cstar_core::numerics::{ci, CMatrix};

use crate::CliError;

/// Complex entry `[re, im]`.
pub type ComplexEntry = [f64; 2];
/// Row-major complex matrix.
pub type ComplexMatrix = Vec<Vec<ComplexEntry>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlgebraSpec {
    /// Block dimensions `(d₁, …, d_k)` of `M_{d₁} ⊕ … ⊕ M_{d_k}`.
    pub blocks: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateSpec {
    /// One density matrix per block.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub densities: Option<Vec<ComplexMatrix>>,
    /// Probability-vector shorthand for diagonal algebras.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DynamicsSpec {
    /// Kraus operators on the block-diagonal embedding, `a ↦ Σ K a K*`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kraus: Option<Vec<ComplexMatrix>>,
    /// Superoperator on matrix-unit coordinates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub superop: Option<ComplexMatrix>,
    /// Row-stochastic matrix for diagonal algebras, `f ↦ P f`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stochastic: Option<Vec<Vec<f64>>>,
}

/// On-disk system description, version 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemSpec {
    pub version: u32,
    pub algebra: AlgebraSpec,
    pub state: StateSpec,
    pub dynamics: DynamicsSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right_inverse: Option<DynamicsSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// A parsed and validated system, ready for the command runners.
#[derive(Debug, Clone)]
pub struct ParsedSystem {
    pub algebra: Algebra,
    pub map: UcpMap,
    pub state: State,
    pub right_inverse: Option<UcpMap>,
    pub tol: f64,
    pub seed: u64,
}

fn matrix_from_spec(m: &ComplexMatrix, what: &str) -> Result<CMatrix, CliError> {
    let rows = m.len();
    if rows == 0 {
        return Err(CliError::Validation(format!("{what}: empty matrix")));
    }
    let cols = m[0].len();
    let mut out = CMatrix::zeros(rows, cols);
    for (r, row) in m.iter().enumerate() {
        if row.len() != cols {
            return Err(CliError::Validation(format!("{what}: ragged matrix rows")));
        }
        for (s, &[re, im]) in row.iter().enumerate() {
            if !re.is_finite() || !im.is_finite() {
                return Err(CliError::Validation(format!("{what}: non-finite entry")));
            }
            out[(r, s)] = ci(re, im);
        }
    }
    Ok(out)
}

fn real_matrix_from_spec(m: &[Vec<f64>], what: &str) -> Result<CMatrix, CliError> {
    let rows = m.len();
    if rows == 0 {
        return Err(CliError::Validation(format!("{what}: empty matrix")));
    }
    let cols = m[0].len();
    let mut out = CMatrix::zeros(rows, cols);
    for (r, row) in m.iter().enumerate() {
        if row.len() != cols {
            return Err(CliError::Validation(format!("{what}: ragged matrix rows")));
        }
        for (s, &x) in row.iter().enumerate() {
            out[(r, s)] = ci(x, 0.0);
        }
    }
    Ok(out)
}

fn dynamics_from_spec(
    spec: &DynamicsSpec,
    algebra: &Algebra,
    tol: f64,
    what: &str,
) -> Result<UcpMap, CliError> {
    let provided = [
        spec.kraus.is_some(),
        spec.superop.is_some(),
        spec.stochastic.is_some(),
    ];
    if provided.iter().filter(|&&p| p).count() != 1 {
        return Err(CliError::Validation(format!(
            "{what}: exactly one of kraus / superop / stochastic must be given"
        )));
    }
    let map = if let Some(kraus) = &spec.kraus {
        let mats = kraus
            .iter()
            .enumerate()
            .map(|(i, m)| matrix_from_spec(m, &format!("{what}.kraus[{i}]")))
            .collect::<Result<Vec<_>, _>>()?;
        UcpMap::from_kraus(algebra, &mats, tol)
    } else if let Some(superop) = &spec.superop {
        let m = matrix_from_spec(superop, &format!("{what}.superop"))?;
        UcpMap::from_superop(algebra, m, tol)
    } else {
        let p = real_matrix_from_spec(
            spec.stochastic.as_ref().unwrap(),
            &format!("{what}.stochastic"),
        )?;
        UcpMap::from_stochastic(algebra, &p, tol)
    };
    map.map_err(|e| CliError::Validation(format!("{what}: {e}")))
}

/// Parses and validates a JSON spec string.
pub fn parse_system_str(text: &str) -> Result<ParsedSystem, CliError> {
    let spec: SystemSpec = serde_json::from_str(text)?;
    if spec.version != 1 {
        return Err(CliError::Validation(format!(
            "unsupported spec version {}",
            spec.version
        )));
    }
    let tol = spec.tolerance.unwrap_or(cstar_core::DEFAULT_TOL);
    if !(tol > 0.0 && tol < 1.0) {
        return Err(CliError::Validation(format!(
            "tolerance {tol} out of range"
        )));
    }
    let seed = spec.seed.unwrap_or(0);
    let algebra = Algebra::new(&spec.algebra.blocks)
        .map_err(|e| CliError::Validation(format!("algebra: {e}")))?;

    let state = match (&spec.state.densities, &spec.state.probs) {
        (Some(densities), None) => {
            let mats = densities
                .iter()
                .enumerate()
                .map(|(b, m)| matrix_from_spec(m, &format!("state.densities[{b}]")))
                .collect::<Result<Vec<_>, _>>()?;
            State::new(&algebra, mats, tol)
                .map_err(|e| CliError::Validation(format!("state: {e}")))?
        }
        (None, Some(probs)) => State::classical(&algebra, probs, tol)
            .map_err(|e| CliError::Validation(format!("state: {e}")))?,
        _ => {
            return Err(CliError::Validation(
                "state: exactly one of densities / probs must be given".into(),
            ))
        }
    };

    let map = dynamics_from_spec(&spec.dynamics, &algebra, tol, "dynamics")?;
    let right_inverse = spec
        .right_inverse
        .as_ref()
        .map(|d| dynamics_from_spec(d, &algebra, tol, "right_inverse"))
        .transpose()?;

    Ok(ParsedSystem {
        algebra,
        map,
        state,
        right_inverse,
        tol,
        seed,
    })
}

/// Parses a spec file from disk.
pub fn parse_system(path: &std::path::Path) -> Result<ParsedSystem, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_system_str(&text)
}
