//! Dense assembly of the volume integral operators: the Newton family N_k,
//! its wavenumber derivative, and the characteristic family M_k(eps).
//!
//! Piecewise-constant collocation on the cells with the equivalent-ball
//! self-term: the diagonal entry is the exact Newton potential of the
//! equal-volume ball at its center, a^2/2, carrying the phase factor
//! e^{i k (3a/4)} from the mean distance-to-center of the ball.

use crate::error::{Error, Result};
use crate::geometry::DiscreteDomain;
use crate::linalg::{cis, mat_from_col_major, weighted_2norm};
use faer::{c64, Mat};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::sync::atomic::{AtomicBool, Ordering};

/// What a [`KernelOperator`] matrix represents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorKind {
    /// N_kappa, weakly singular Newton kernel.
    Newton,
    /// The wavenumber derivative kernel (i/4pi) e^{i kappa |x-y|}.
    Derivative,
    /// M_kappa(eps) = 1 - (1 - eps^2) kappa^2 N_{eps kappa}.
    Characteristic { epsilon: f64 },
}

/// Dense matrix representation of one of the integral operators, acting on
/// cell values, together with the volume weights defining the discrete
/// L^2(Omega) inner product <u, v> = sum_i V_i conj(u_i) v_i.
#[derive(Debug, Clone)]
pub struct KernelOperator {
    pub entries: Mat<c64>,
    pub weights: Vec<f64>,
    pub kappa: Complex64,
    pub kind: OperatorKind,
    pub mesh: String,
}

impl KernelOperator {
    pub fn n(&self) -> usize {
        self.weights.len()
    }

    /// Applies the operator to a vector of cell values.
    pub fn apply(&self, u: &[Complex64]) -> Vec<Complex64> {
        crate::linalg::matvec(self.entries.as_ref(), u)
    }
}

/// Contrast parameter of the inclusion, constrained to (0, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContrastConfig {
    epsilon: f64,
}

impl ContrastConfig {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::Config(format!(
                "contrast epsilon must lie in (0, 1), got {epsilon}"
            )));
        }
        Ok(ContrastConfig { epsilon })
    }

    pub fn value(&self) -> f64 {
        self.epsilon
    }
}

/// Self-term phase center: mean distance to the center of a ball of radius a.
const SELF_TERM_PHASE_FACTOR: f64 = 0.75;

fn assemble_columns<F>(domain: &DiscreteDomain, fill: F) -> Result<Mat<c64>>
where
    F: Fn(usize, &mut [Complex64]) + Sync,
{
    let n = domain.len();
    let degenerate = AtomicBool::new(false);
    let mut data = vec![Complex64::new(0.0, 0.0); n * n];
    data.par_chunks_mut(n).enumerate().for_each(|(j, col)| {
        fill(j, col);
        for (i, v) in col.iter().enumerate() {
            if i != j && !v.is_finite() {
                degenerate.store(true, Ordering::Relaxed);
            }
        }
    });
    if degenerate.load(Ordering::Relaxed) {
        return Err(Error::Assembly(
            "degenerate mesh: two cells share a center".into(),
        ));
    }
    Ok(mat_from_col_major(&data, n, n))
}

/// Assembles the Newton operator N_kappa on the given decomposition.
pub fn assemble_newton(domain: &DiscreteDomain, kappa: Complex64) -> Result<KernelOperator> {
    if domain.is_empty() {
        return Err(Error::Domain("cannot assemble on an empty domain".into()));
    }
    let cells = domain.cells();
    let entries = assemble_columns(domain, |j, col| {
        let cj = &cells[j];
        let vj = cj.volume;
        for (i, out) in col.iter_mut().enumerate() {
            if i == j {
                let a = cj.eq_radius;
                *out = 0.5 * a * a * cis(kappa * (SELF_TERM_PHASE_FACTOR * a));
            } else {
                let ci = &cells[i];
                let dx = ci.center[0] - cj.center[0];
                let dy = ci.center[1] - cj.center[1];
                let dz = ci.center[2] - cj.center[2];
                let r = (dx * dx + dy * dy + dz * dz).sqrt();
                *out = cis(kappa * r) * (vj / (4.0 * PI * r));
            }
        }
    })?;
    Ok(KernelOperator {
        entries,
        weights: domain.volumes(),
        kappa,
        kind: OperatorKind::Newton,
        mesh: domain.describe(),
    })
}

/// Assembles the derivative kernel (i/4pi) e^{i kappa |x-y|}; bounded, so the
/// diagonal needs no singular correction.
pub fn assemble_derivative(domain: &DiscreteDomain, kappa: Complex64) -> Result<KernelOperator> {
    if domain.is_empty() {
        return Err(Error::Domain("cannot assemble on an empty domain".into()));
    }
    let cells = domain.cells();
    let quarter_i = Complex64::new(0.0, 1.0 / (4.0 * PI));
    let entries = assemble_columns(domain, |j, col| {
        let cj = &cells[j];
        let vj = cj.volume;
        for (i, out) in col.iter_mut().enumerate() {
            let ci = &cells[i];
            let dx = ci.center[0] - cj.center[0];
            let dy = ci.center[1] - cj.center[1];
            let dz = ci.center[2] - cj.center[2];
            let r = (dx * dx + dy * dy + dz * dz).sqrt();
            *out = quarter_i * cis(kappa * r) * vj;
        }
    })?;
    Ok(KernelOperator {
        entries,
        weights: domain.volumes(),
        kappa,
        kind: OperatorKind::Derivative,
        mesh: domain.describe(),
    })
}

/// Assembles M_kappa(eps) = I - (1 - eps^2) kappa^2 N_{eps kappa}.
///
/// `eps = 0` gives the limit operator M_kappa(0) = I - kappa^2 N_0.
pub fn assemble_characteristic(
    domain: &DiscreteDomain,
    kappa: Complex64,
    eps: f64,
) -> Result<KernelOperator> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::Config(format!(
            "characteristic family needs eps in [0, 1), got {eps}"
        )));
    }
    let newton = assemble_newton(domain, kappa * eps)?;
    let n = newton.n();
    let factor = -(1.0 - eps * eps) * kappa * kappa;
    let mut entries = newton.entries;
    for j in 0..n {
        for i in 0..n {
            entries[(i, j)] = factor * entries[(i, j)];
        }
        entries[(j, j)] += c64::new(1.0, 0.0);
    }
    Ok(KernelOperator {
        entries,
        weights: newton.weights,
        kappa,
        kind: OperatorKind::Characteristic { epsilon: eps },
        mesh: newton.mesh,
    })
}

/// Operator 2-norm in the volume-weighted inner product: the largest singular
/// value of D^{1/2} A D^{-1/2}, D = diag(V).
pub fn weighted_norm(op: &KernelOperator) -> f64 {
    weighted_2norm(op.entries.as_ref(), &op.weights)
}

/// Weighted norm of the difference of two operators on the same mesh.
pub fn weighted_norm_diff(a: &KernelOperator, b: &KernelOperator) -> f64 {
    assert_eq!(a.n(), b.n(), "operators live on different meshes");
    let n = a.n();
    let diff = Mat::<c64>::from_fn(n, n, |i, j| a.entries[(i, j)] - b.entries[(i, j)]);
    weighted_2norm(diff.as_ref(), &a.weights)
}

/// Weighted operator 2-norm of an arbitrary matrix over the given weights.
pub fn weighted_matrix_norm(entries: faer::MatRef<'_, c64>, weights: &[f64]) -> f64 {
    weighted_2norm(entries, weights)
}
