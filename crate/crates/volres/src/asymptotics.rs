//! Quantitative spectral bounds: the inverse-norm bound for the limit family,
//! localization constants and disc membership, and the first-order expansion
//! of the resonances with empirical remainder orders.

use crate::error::{Error, Result};
use crate::geometry::DiscreteDomain;
use crate::resonance::ResonanceResult;
use crate::spectrum::SpectralData;
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

/// First-order expansion data for one gauge eigenvector of a cluster:
/// kappa^2(eps) = zeroth + first_coeff * eps + O(eps^2).
#[derive(Debug, Clone, Serialize)]
pub struct ExpansionPrediction {
    pub lambda: f64,
    /// Squared coupling carried by this gauge vector. For a degenerate
    /// cluster the whole cluster coupling concentrates on one carrier.
    pub coupling_sq: f64,
    pub zeroth: f64,
    pub first_coeff_re: f64,
    pub first_coeff_im: f64,
    pub carries_cluster_coupling: bool,
}

impl ExpansionPrediction {
    pub fn first_coeff(&self) -> Complex64 {
        Complex64::new(self.first_coeff_re, self.first_coeff_im)
    }
}

/// The constants realizing the localization theorem on a given mesh.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LocalizationConstants {
    pub r: f64,
    pub r_circ: f64,
    pub r_plus: f64,
    pub c_r: f64,
    pub eps_max: f64,
    pub lambda1: f64,
    pub volume: f64,
    pub diameter: f64,
}

/// One sample of the inverse-norm bound check.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundSample {
    pub kappa_sq_re: f64,
    pub kappa_sq_im: f64,
    /// The true norm of the inverse, evaluated over the discrete spectrum.
    pub lhs: f64,
    /// The stated bound sqrt(2) max(1/lambda_1, Re kappa^2) / dist.
    pub rhs: f64,
    /// The bound the case analysis actually proves:
    /// max(sqrt(2), (2 + sqrt(2)) max(1/lambda_1, Re kappa^2) / dist).
    pub rhs_proved: f64,
}

/// Disc assignment of one resonance in the localization check.
#[derive(Debug, Clone, Serialize)]
pub struct DiscAssignment {
    pub kappa_sq_re: f64,
    pub kappa_sq_im: f64,
    pub assigned_lambda: f64,
    pub distance: f64,
    pub pass: bool,
    /// Two candidate spectral points within 2 c_r eps.
    pub ambiguous: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalizationReport {
    pub eps: f64,
    pub disc_radius: f64,
    pub entries: Vec<DiscAssignment>,
    pub all_pass: bool,
}

/// Complex-coefficient least-squares fit of kappa^2(eps) over a small grid.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExpansionFit {
    pub zeroth_re: f64,
    pub zeroth_im: f64,
    pub first_re: f64,
    pub first_im: f64,
    pub second_re: f64,
    pub second_im: f64,
    /// Empirical order of the first-order remainder (about 2 for an O(eps^2)
    /// remainder; 0 when the data is exactly linear).
    pub remainder_order: f64,
}

impl ExpansionFit {
    pub fn zeroth(&self) -> Complex64 {
        Complex64::new(self.zeroth_re, self.zeroth_im)
    }
    pub fn first(&self) -> Complex64 {
        Complex64::new(self.first_re, self.first_im)
    }
    pub fn second(&self) -> Complex64 {
        Complex64::new(self.second_re, self.second_im)
    }
}

fn trusted_inverse_points(spectral: &SpectralData) -> Vec<f64> {
    let floor = crate::spectrum::TRUST_RATIO * spectral.lambda1();
    spectral
        .eigenvalues
        .iter()
        .filter(|&&l| l >= floor)
        .map(|&l| 1.0 / l)
        .collect()
}

/// Evaluates both sides of the inverse-norm bound at one wavenumber:
/// lhs = sup over the discrete spectrum of mu / |mu - kappa^2|,
/// rhs = sqrt(2) max(1/lambda_1, Re kappa^2) / dist(kappa^2, spectrum).
pub fn mk0_inverse_bound(spectral: &SpectralData, kappa: Complex64) -> Result<(f64, f64)> {
    let z = kappa * kappa;
    let (lhs, rhs, _) = mk0_bound_at(spectral, z)?;
    Ok((lhs, rhs))
}

fn mk0_bound_at(spectral: &SpectralData, z: Complex64) -> Result<(f64, f64, f64)> {
    let mus = trusted_inverse_points(spectral);
    let mut dist = f64::INFINITY;
    let mut lhs: f64 = 0.0;
    for &mu in &mus {
        let d = (Complex64::new(mu, 0.0) - z).norm();
        dist = dist.min(d);
        lhs = lhs.max(mu / d);
    }
    if dist <= 1e-12 {
        return Err(Error::Precondition(format!(
            "kappa^2 = {z} lies on the discrete spectrum (distance {dist:.3e})"
        )));
    }
    let top = (1.0 / spectral.lambda1()).max(z.re);
    let rhs = 2.0f64.sqrt() * top / dist;
    let rhs_proved = 2.0f64.sqrt().max((2.0 + 2.0f64.sqrt()) * top / dist);
    Ok((lhs, rhs, rhs_proved))
}

/// Radical-inverse (Halton) sequence member in base `base`.
fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

/// Quasi-random samples of the bound over {|kappa^2| <= 2/lambda_1,
/// dist(kappa^2, spectrum) >= 1e-3}; the seed offsets the sequence.
pub fn mk0_bound_samples(
    spectral: &SpectralData,
    count: usize,
    seed: u64,
) -> Result<Vec<BoundSample>> {
    let radius = 2.0 / spectral.lambda1();
    let mus = trusted_inverse_points(spectral);
    let mut out = Vec::with_capacity(count);
    let mut index = seed.wrapping_mul(7919) + 1;
    while out.len() < count {
        let u = halton(index, 2);
        let v = halton(index, 3);
        index += 1;
        let rho = radius * u.sqrt();
        let z = Complex64::new(rho * (2.0 * PI * v).cos(), rho * (2.0 * PI * v).sin());
        let dist = mus
            .iter()
            .map(|&mu| (Complex64::new(mu, 0.0) - z).norm())
            .fold(f64::INFINITY, f64::min);
        if dist < 1e-3 {
            continue;
        }
        let (lhs, rhs, rhs_proved) = mk0_bound_at(spectral, z)?;
        out.push(BoundSample {
            kappa_sq_re: z.re,
            kappa_sq_im: z.im,
            lhs,
            rhs,
            rhs_proved,
        });
    }
    Ok(out)
}

/// Builds the localization constants for a trust radius r > 1/lambda_1.
pub fn localization_constants(
    spectral: &SpectralData,
    domain: &DiscreteDomain,
    r: f64,
) -> Result<LocalizationConstants> {
    let lambda1 = spectral.lambda1();
    if !(r > 1.0 / lambda1) {
        return Err(Error::Precondition(format!(
            "localization needs r > 1/lambda_1 = {}, got {r}",
            1.0 / lambda1
        )));
    }
    let floor = crate::spectrum::TRUST_RATIO * lambda1;
    let points: Vec<f64> = spectral
        .clusters
        .iter()
        .filter(|c| c.lambda >= floor)
        .map(|c| 1.0 / c.lambda)
        .collect();
    let in_range: Vec<f64> = points.iter().copied().filter(|&mu| mu <= r).collect();
    let mut half_min_gap = f64::INFINITY;
    for &mu in &in_range {
        let gap = points
            .iter()
            .filter(|&&other| other != mu)
            .map(|&other| (other - mu).abs())
            .fold(f64::INFINITY, f64::min);
        half_min_gap = half_min_gap.min(0.5 * gap);
    }
    if !half_min_gap.is_finite() {
        return Err(Error::Domain(
            "isolation radius undefined: no second spectral point in the trusted range; \
             enlarge the mesh-trusted range"
                .into(),
        ));
    }
    let r_plus = r + half_min_gap;
    let volume = domain.total_volume();
    let diameter = domain.diameter();
    let c_r = 2.0f64.sqrt()
        * ((volume / (4.0 * PI)).sqrt() * r_plus.sqrt() * (r_plus.sqrt() * diameter).exp()
            + lambda1)
        * r_plus
        * r_plus;
    Ok(LocalizationConstants {
        r,
        r_circ: half_min_gap,
        r_plus,
        c_r,
        eps_max: half_min_gap / c_r,
        lambda1,
        volume,
        diameter,
    })
}

/// Verifies that every resonance inside D_{r_plus} lies in exactly one disc
/// D_{c_r eps}(1/lambda). Requires the hypothesis eps <= eps_max.
pub fn check_localization(
    resonances: &[ResonanceResult],
    constants: &LocalizationConstants,
    spectral: &SpectralData,
    eps: f64,
) -> Result<LocalizationReport> {
    if eps > constants.eps_max {
        return Err(Error::HypothesisNotMet {
            eps,
            eps_max: constants.eps_max,
        });
    }
    let disc_radius = constants.c_r * eps;
    // mesh/solver consistency floor so the degenerate eps = 0 run, whose
    // distances are pure round-off, still classifies
    let membership_tol = disc_radius + 1e-10 * constants.r_plus;
    let floor = crate::spectrum::TRUST_RATIO * spectral.lambda1();
    let centers: Vec<f64> = spectral
        .clusters
        .iter()
        .filter(|c| c.lambda >= floor && c.lambda >= 1.0 / constants.r)
        .map(|c| 1.0 / c.lambda)
        .collect();
    let mut entries = Vec::new();
    let mut all_pass = true;
    for res in resonances {
        if res.kappa_sq.norm() >= constants.r_plus {
            continue;
        }
        let dists: Vec<f64> = centers
            .iter()
            .map(|&mu| (res.kappa_sq - Complex64::new(mu, 0.0)).norm())
            .collect();
        let inside = dists.iter().filter(|&&d| d <= membership_tol).count();
        let (best_idx, best) = dists
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap_or((0, f64::INFINITY));
        let ambiguous = dists.iter().filter(|&&d| d <= 2.0 * membership_tol).count() > 1;
        let pass = inside == 1;
        all_pass &= pass;
        entries.push(DiscAssignment {
            kappa_sq_re: res.kappa_sq.re,
            kappa_sq_im: res.kappa_sq.im,
            assigned_lambda: if centers.is_empty() {
                f64::NAN
            } else {
                1.0 / centers[best_idx]
            },
            distance: best,
            pass,
            ambiguous,
        });
    }
    Ok(LocalizationReport {
        eps,
        disc_radius,
        entries,
        all_pass,
    })
}

/// The per-branch first-order prediction for one cluster, in the gauge basis
/// diagonalizing the rank-one coupling form: one carrier holds the whole
/// cluster coupling, the rest have exact zeros.
pub fn predict_first_order(
    spectral: &SpectralData,
    cluster_index: usize,
) -> Result<Vec<ExpansionPrediction>> {
    let cluster = spectral
        .clusters
        .get(cluster_index)
        .ok_or_else(|| Error::Precondition(format!("no cluster {cluster_index}")))?;
    let lambda = cluster.lambda;
    let total_coupling_sq: f64 = (cluster.start..cluster.end)
        .map(|j| spectral.coupling(j).norm_sqr())
        .sum();
    let mut out = Vec::with_capacity(cluster.multiplicity);
    for branch in 0..cluster.multiplicity {
        let coupling_sq = if branch == 0 { total_coupling_sq } else { 0.0 };
        out.push(prediction_from(
            lambda,
            coupling_sq,
            branch == 0 && cluster.multiplicity > 1,
        ));
    }
    Ok(out)
}

fn prediction_from(lambda: f64, coupling_sq: f64, cluster_summed: bool) -> ExpansionPrediction {
    let first = -coupling_sq / (4.0 * PI * lambda.powf(2.5));
    ExpansionPrediction {
        lambda,
        coupling_sq,
        zeroth: 1.0 / lambda,
        first_coeff_re: 0.0,
        first_coeff_im: first,
        carries_cluster_coupling: cluster_summed,
    }
}

/// Least-squares fit of kappa^2(eps) to a + b eps + c eps^2.
///
/// The remainder order compares the residual of the first-order truncation
/// a + b eps at the two largest sample eps values.
pub fn fit_expansion(samples: &[(f64, Complex64)]) -> Result<ExpansionFit> {
    let mut eps_sorted: Vec<f64> = samples.iter().map(|s| s.0).collect();
    eps_sorted.sort_by(f64::total_cmp);
    eps_sorted.dedup_by(|a, b| (*a - *b).abs() <= 0.0);
    if eps_sorted.len() < 3 {
        return Err(Error::Precondition(format!(
            "expansion fit needs at least 3 distinct eps values, got {}",
            eps_sorted.len()
        )));
    }
    // normal equations for the real Vandermonde basis [1, eps, eps^2]
    let mut g = [[0.0f64; 3]; 3];
    let mut rhs = [Complex64::new(0.0, 0.0); 3];
    for &(e, y) in samples {
        let basis = [1.0, e, e * e];
        for i in 0..3 {
            for j in 0..3 {
                g[i][j] += basis[i] * basis[j];
            }
            rhs[i] += basis[i] * y;
        }
    }
    let coeff = solve3(g, rhs)?;
    let (a, b, c) = (coeff[0], coeff[1], coeff[2]);
    let scale = samples.iter().map(|s| s.1.norm()).fold(0.0, f64::max);
    let mut by_eps: Vec<(f64, Complex64)> = samples.to_vec();
    by_eps.sort_by(|x, y| y.0.total_cmp(&x.0));
    let r1 = (by_eps[0].1 - a - b * by_eps[0].0).norm();
    let r2 = (by_eps[1].1 - a - b * by_eps[1].0).norm();
    let remainder_order = if r1 <= 1e-13 * scale.max(1.0) && r2 <= 1e-13 * scale.max(1.0) {
        0.0
    } else {
        (r1 / r2).ln() / (by_eps[0].0 / by_eps[1].0).ln()
    };
    Ok(ExpansionFit {
        zeroth_re: a.re,
        zeroth_im: a.im,
        first_re: b.re,
        first_im: b.im,
        second_re: c.re,
        second_im: c.im,
        remainder_order,
    })
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [Complex64; 3]) -> Result<[Complex64; 3]> {
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[piv][col].abs() < 1e-300 {
            return Err(Error::Numerical("singular fit system".into()));
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [Complex64::new(0.0, 0.0); 3];
    for row in (0..3).rev() {
        let mut acc = b[row];
        for k in row + 1..3 {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Ok(x)
}
