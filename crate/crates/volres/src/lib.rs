//! Spectrum of the Newton potential operator of a bounded 3-D domain and the
//! scattering resonances of the associated high-contrast inclusion.
//!
//! The reference set is decomposed into cells ([`geometry`]); dense matrix
//! representations of the volume integral operators are assembled on it
//! ([`kernel`]); the static spectrum drives resonance searches by bordered
//! Newton tracking and contour moments ([`spectrum`], [`resonance`]);
//! quantitative localization and first-order expansions live in
//! [`asymptotics`]; point-source scattering and frequency sweeps in
//! [`field`]. The [`ball`] module provides the analytic unit-ball oracle the
//! whole discretization is validated against.

// index loops and NaN-rejecting comparisons are the local idiom for the
// dense numerics here
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod ball;
pub mod config;
pub mod error;
pub mod field;
pub mod geometry;
pub mod io;
pub mod kernel;
pub(crate) mod linalg;
pub mod resonance;
pub mod spectrum;

pub use ball::{ball_oracle, BallOracleEigenvalue};
pub use config::{DomainConfig, RunConfig};
pub use error::{Error, Result};
pub use field::{frequency_sweep, scattered_field, ScatterScenario, SweepResult};
pub use geometry::{make_ball, make_box, parse_voxels, Cell, DiscreteDomain, DomainKind};
pub use kernel::{
    assemble_characteristic, assemble_derivative, assemble_newton, weighted_norm, ContrastConfig,
    KernelOperator, OperatorKind,
};
pub use resonance::{
    contour_solver, eigen_path, resonance_set, track_resonance, EigenPath, ResonanceResult, Seed,
    SolverMethod,
};
pub use spectrum::{cluster, eig_newton0, top_eigenpair, Cluster, SpectralData};
