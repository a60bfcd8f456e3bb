//! Eigensystem of the discretized static Newton operator: full dense
//! decomposition, multiplicity clusters, couplings with the constant
//! function, and a matrix-free top-eigenpair path for large meshes.

use crate::error::{Error, Result};
use crate::geometry::DiscreteDomain;
use crate::kernel::{KernelOperator, OperatorKind};
use crate::linalg::sym_eigen_desc;
use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Default relative tolerance for grouping eigenvalues into clusters.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-2;

/// Modes with lambda below this fraction of lambda_1 are not trusted as
/// resonance seeds (the kernel sampling needs several cells per wavelength).
pub const TRUST_RATIO: f64 = 1e-6;

/// A group of numerically coincident eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    /// First mode index of the cluster.
    pub start: usize,
    /// One past the last mode index.
    pub end: usize,
    /// Representative eigenvalue (arithmetic mean over the cluster).
    pub lambda: f64,
    pub multiplicity: usize,
}

/// Ordered eigenpairs of the discretized N_0.
pub struct SpectralData {
    /// Eigenvalues, descending; negative round-off values clamped to zero.
    pub eigenvalues: Vec<f64>,
    /// Eigenvector columns as cell values, orthonormal in the weighted inner
    /// product.
    pub eigenvectors: Mat<f64>,
    /// Cell volumes (the inner-product weights).
    pub weights: Vec<f64>,
    /// Multiplicity clusters over the positive eigenvalues.
    pub clusters: Vec<Cluster>,
    /// Provenance tag of the mesh.
    pub mesh_id: String,
}

impl SpectralData {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn lambda1(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Weighted pairing of mode `j` with the constant function 1.
    pub fn coupling(&self, j: usize) -> Complex64 {
        let mut acc = 0.0;
        for i in 0..self.weights.len() {
            acc += self.weights[i] * self.eigenvectors[(i, j)];
        }
        Complex64::new(acc, 0.0)
    }

    /// Eigenvector column `j` as cell values.
    pub fn mode(&self, j: usize) -> Vec<f64> {
        (0..self.weights.len())
            .map(|i| self.eigenvectors[(i, j)])
            .collect()
    }

    /// Reciprocals 1/lambda of the cluster representatives (the discrete
    /// surrogate of the spectrum of the inverse operator).
    pub fn inverse_spectrum(&self) -> Vec<f64> {
        self.clusters.iter().map(|c| 1.0 / c.lambda).collect()
    }

    /// Clusters trusted for resonance seeding.
    pub fn trusted_clusters(&self) -> Vec<usize> {
        let floor = TRUST_RATIO * self.lambda1();
        (0..self.clusters.len())
            .filter(|&c| self.clusters[c].lambda >= floor)
            .collect()
    }
}

fn compute_clusters(eigenvalues: &[f64], rel_tol: f64) -> Vec<Cluster> {
    let mut clusters = Vec::new();
    let positive = eigenvalues.iter().take_while(|&&l| l > 0.0).count();
    let mut start = 0;
    while start < positive {
        let mut end = start + 1;
        while end < positive
            && eigenvalues[end - 1] - eigenvalues[end] < rel_tol * eigenvalues[end - 1]
        {
            end += 1;
        }
        let lambda = eigenvalues[start..end].iter().sum::<f64>() / (end - start) as f64;
        clusters.push(Cluster {
            start,
            end,
            lambda,
            multiplicity: end - start,
        });
        start = end;
    }
    clusters
}

/// Full symmetric eigendecomposition of the weighted N_0 matrix.
pub fn eig_newton0(op: &KernelOperator) -> Result<SpectralData> {
    if op.kind != OperatorKind::Newton || op.kappa != Complex64::new(0.0, 0.0) {
        return Err(Error::Precondition(
            "eig_newton0 needs the static Newton operator (kind newton, kappa = 0)".into(),
        ));
    }
    let n = op.n();
    let sw: Vec<f64> = op.weights.iter().map(|w| w.sqrt()).collect();
    let w = Mat::<f64>::from_fn(n, n, |i, j| op.entries[(i, j)].re * sw[i] / sw[j]);
    let (mut vals, u) = sym_eigen_desc(&w)?;
    for v in &mut vals {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    // map back to cell values and fix the sign gauge (largest component > 0)
    let mut vecs = Mat::<f64>::from_fn(n, n, |i, j| u[(i, j)] / sw[i]);
    for j in 0..n {
        let mut best = 0usize;
        let mut best_abs = 0.0f64;
        for i in 0..n {
            let a = vecs[(i, j)].abs();
            if a > best_abs {
                best_abs = a;
                best = i;
            }
        }
        if vecs[(best, j)] < 0.0 {
            for i in 0..n {
                vecs[(i, j)] = -vecs[(i, j)];
            }
        }
    }
    let clusters = compute_clusters(&vals, DEFAULT_CLUSTER_TOL);
    Ok(SpectralData {
        eigenvalues: vals,
        eigenvectors: vecs,
        weights: op.weights.clone(),
        clusters,
        mesh_id: op.mesh.clone(),
    })
}

/// Regroups the clusters with a different relative tolerance.
pub fn cluster(spectral: &mut SpectralData, rel_tol: f64) -> Result<()> {
    if !(rel_tol > 0.0 && rel_tol < 0.1) {
        return Err(Error::Precondition(format!(
            "cluster tolerance must lie in (0, 0.1), got {rel_tol}"
        )));
    }
    spectral.clusters = compute_clusters(&spectral.eigenvalues, rel_tol);
    Ok(())
}

/// Symmetrized static kernel entry sqrt(V_i V_j) G(r_ij), a^2/2 on the
/// diagonal.
fn sym_entry(cells: &[crate::geometry::Cell], sw: &[f64], i: usize, j: usize) -> f64 {
    if i == j {
        let a = cells[i].eq_radius;
        0.5 * a * a
    } else {
        let dx = cells[i].center[0] - cells[j].center[0];
        let dy = cells[i].center[1] - cells[j].center[1];
        let dz = cells[i].center[2] - cells[j].center[2];
        let r2 = dx * dx + dy * dy + dz * dz;
        sw[i] * sw[j] / (4.0 * PI * r2.sqrt())
    }
}

/// Top eigenpair of the discretized N_0 by power iteration with linear-in-n
/// API cost; the route for meshes too large for the dense decomposition.
///
/// Small meshes iterate on a cached f64 matrix. Large ones cache the kernel
/// in f32 (half the memory traffic) with f64 accumulation, then polish the
/// Rayleigh quotient with exact f64 passes; the kernel rounding is ~1e-7
/// relative, far below the discretization error at any such size. Returns
/// (lambda_1, eigenvector) with the eigenvector weighted-normalized.
pub fn top_eigenpair(domain: &DiscreteDomain) -> Result<(f64, Vec<f64>)> {
    if domain.is_empty() {
        return Err(Error::Domain("empty domain".into()));
    }
    let cells = domain.cells();
    let n = cells.len();
    let sw: Vec<f64> = cells.iter().map(|c| c.volume.sqrt()).collect();
    let exact_matvec = |x: &[f64]| -> Vec<f64> {
        let mut y = vec![0.0f64; n];
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let mut acc = 0.0;
            for j in 0..n {
                acc += sym_entry(cells, &sw, i, j) * x[j];
            }
            *yi = acc;
        });
        y
    };

    const F64_LIMIT: usize = 2500;
    let cached_f32: Option<Vec<f32>> = if n > F64_LIMIT {
        let mut data = vec![0.0f32; n * n];
        data.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = sym_entry(cells, &sw, i, j) as f32;
            }
        });
        Some(data)
    } else {
        None
    };
    let cached_f64: Option<Vec<f64>> = if n <= F64_LIMIT {
        let mut data = vec![0.0f64; n * n];
        data.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = sym_entry(cells, &sw, i, j);
            }
        });
        Some(data)
    } else {
        None
    };
    let matvec = |x: &[f64]| -> Vec<f64> {
        let mut y = vec![0.0f64; n];
        if let Some(a) = &cached_f64 {
            y.par_iter_mut().enumerate().for_each(|(i, yi)| {
                let row = &a[i * n..(i + 1) * n];
                *yi = row.iter().zip(x).map(|(aij, xj)| aij * xj).sum();
            });
        } else if let Some(a) = &cached_f32 {
            y.par_iter_mut().enumerate().for_each(|(i, yi)| {
                let row = &a[i * n..(i + 1) * n];
                *yi = row.iter().zip(x).map(|(aij, xj)| *aij as f64 * xj).sum();
            });
        }
        y
    };

    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut lambda = 0.0f64;
    for _ in 0..200 {
        let y = matvec(&x);
        let new_lambda: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if ny == 0.0 {
            return Err(Error::Numerical("power iteration hit a zero vector".into()));
        }
        x = y.into_iter().map(|v| v / ny).collect();
        if (new_lambda - lambda).abs() <= 1e-13 * new_lambda.abs().max(1e-300) {
            lambda = new_lambda;
            break;
        }
        lambda = new_lambda;
    }
    if cached_f32.is_some() {
        // exact passes remove the f32 kernel rounding from the eigenvalue
        for _ in 0..2 {
            let y = exact_matvec(&x);
            lambda = x.iter().zip(&y).map(|(a, b)| a * b).sum();
            let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            x = y.into_iter().map(|v| v / ny).collect();
        }
    }
    // cell values, weighted-normalized; gauge: largest component positive
    let mut e: Vec<f64> = (0..n).map(|i| x[i] / sw[i]).collect();
    let imax = (0..n)
        .max_by(|&a, &b| e[a].abs().total_cmp(&e[b].abs()))
        .unwrap();
    if e[imax] < 0.0 {
        for v in &mut e {
            *v = -*v;
        }
    }
    Ok((lambda, e))
}

/// Weighted pairing of an arbitrary cell vector with the constant 1.
pub fn coupling_of(weights: &[f64], mode: &[f64]) -> f64 {
    weights.iter().zip(mode).map(|(w, m)| w * m).sum()
}
