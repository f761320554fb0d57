//! Finite-dimensional C*-dynamical systems and their dilation theory.
//!
//! A C*-dynamical system here is a triple `(A, Φ, φ)`: a finite-dimensional
//! C*-algebra `A` (a direct sum of full matrix blocks), a unital completely
//! positive endomorphism `Φ` of `A`, and a `Φ`-invariant state `φ`. The crate
//! builds, at finite dimension, the standard machinery attached to such a
//! system and machine-checks the identities it satisfies:
//!
//! * [`gns`] — GNS triples, the transfer contraction on the GNS space, the
//!   induced W*-system, modular pairs and the `φ`-adjoint of the dynamics;
//! * [`stinespring`] — one Stinespring dilation step for a ucp map into
//!   operators on a Hilbert space, plus the factorization of the transfer
//!   contraction through it;
//! * [`cgns`] — the iterated Stinespring tower, its truncated inductive
//!   limit, and the covariant GNS quadruple with full residual verification;
//! * [`dilation`] — reversible (automorphic) dilations of the induced
//!   W*-system for multiplicative dynamics, conditional expectations,
//!   minimality and separation certificates, and a right-inverse analyzer;
//! * [`ergodic`] — correlation sequences and ergodic / weakly-mixing
//!   classification, spectral and Cesàro, with dilation transfer checks.
//!
//! Everything is dense, double-precision and deterministic: the same inputs
//! produce the same outputs bit-for-bit on a given platform. The crate is
//! `no_std` (with `alloc`); IO, file formats and the command-line front end
//! live in the companion `cstar-cli` crate.
//!
//! ```
//! use cstar_core::algebra::Algebra;
//! use cstar_core::cgns::{build_tower, cgns_operators, verify_cgns, DEFAULT_DIMENSION_CAP};
//! use cstar_core::gns::State;
//! use cstar_core::instances;
//!
//! // The depolarizing channel on M₂ with its tracial invariant state.
//! let map = instances::depolarizing_m2();
//! let state = State::tracial(&Algebra::full(2));
//!
//! // Two dilation stages: 4 → 16 → 64.
//! let tower = build_tower(&map, &state, 2, 1e-10, DEFAULT_DIMENSION_CAP, None)?;
//! assert_eq!(tower.dims(), vec![4, 16, 64]);
//!
//! // The truncated limit quadruple satisfies its identity table.
//! let quad = cgns_operators(tower);
//! let report = verify_cgns(&quad, 1e-10)?;
//! assert!(report.pass(1e-9));
//! # Ok::<(), cstar_core::Error>(())
//! ```

#![cfg_attr(not(any(test, feature = "std")), no_std)]
#![deny(unsafe_code)]
// Index loops over several parallel matrix structures stay as indices.
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod algebra;
pub mod cgns;
pub mod channel;
pub mod dilation;
pub mod ergodic;
mod error;
pub mod gns;
pub mod instances;
pub mod numerics;
pub mod stinespring;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

/// Default relative tolerance used by constructors when none is supplied.
pub const DEFAULT_TOL: f64 = 1e-10;
