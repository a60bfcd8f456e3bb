//! Scattered-field evaluation through the block resolvent formula and
//! real-frequency sweeps exhibiting resonant enhancement.
//!
//! The inclusion operator S_kappa(eps) is assembled in physical coordinates
//! (scaled cells); the exact scaling identity S = eps^2 M_kappa(eps) against
//! the reference-coordinate family is enforced as a test, not used as the
//! implementation path.

use crate::error::{Error, Result};
use crate::geometry::DiscreteDomain;
use crate::kernel::{assemble_characteristic, assemble_newton};
use crate::linalg::{cis, CLu, SplitMix64};
use faer::{c64, Mat};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Point-source scattering setup in physical coordinates.
#[derive(Debug, Clone)]
pub struct ScatterScenario<'a> {
    /// Reference decomposition of the inclusion shape.
    pub domain: &'a DiscreteDomain,
    /// Contrast parameter; the inclusion is the eps-scaled reference set.
    /// eps = 1 is allowed as the no-contrast limit.
    pub epsilon: f64,
    /// Wavenumber with Im >= 0.
    pub kappa: Complex64,
    pub source: [f64; 3],
    pub observations: Vec<[f64; 3]>,
}

/// Field values at the observation points.
#[derive(Debug, Clone)]
pub struct FieldSolution {
    pub incident: Vec<Complex64>,
    pub scattered: Vec<Complex64>,
    pub total: Vec<Complex64>,
    pub interior_density: Vec<Complex64>,
}

/// Real-frequency sweep output.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub kappa_sq_grid: Vec<f64>,
    /// |scattered field| at the first observation point.
    pub response_field: Vec<f64>,
    /// Weighted norm of the inverse characteristic operator.
    pub response_minv: Vec<f64>,
    /// 3-point local maxima of the field response: (kappa_sq, value).
    pub peaks_field: Vec<(f64, f64)>,
    pub peaks_minv: Vec<(f64, f64)>,
}

fn green(kappa: Complex64, x: [f64; 3], y: [f64; 3]) -> Complex64 {
    let dx = x[0] - y[0];
    let dy = x[1] - y[1];
    let dz = x[2] - y[2];
    let r = (dx * dx + dy * dy + dz * dz).sqrt();
    cis(kappa * r) / (4.0 * PI * r)
}

impl<'a> ScatterScenario<'a> {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::Config(format!(
                "scenario epsilon must lie in (0, 1], got {}",
                self.epsilon
            )));
        }
        if self.kappa.im < 0.0 {
            return Err(Error::Config("field evaluation needs Im kappa >= 0".into()));
        }
        if self.observations.is_empty() {
            return Err(Error::Config("no observation points".into()));
        }
        let guard = self.epsilon * self.domain.circumradius();
        let r = |p: &[f64; 3]| (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        if r(&self.source) <= guard {
            return Err(Error::Geometry(format!(
                "source at |x| = {:.3e} lies inside the scaled inclusion (circumradius {guard:.3e})",
                r(&self.source)
            )));
        }
        for (i, p) in self.observations.iter().enumerate() {
            if r(p) <= guard {
                return Err(Error::Geometry(format!(
                    "observation point {i} lies inside the scaled inclusion"
                )));
            }
        }
        Ok(())
    }
}

/// S_kappa(eps) on the scaled cells plus the scaled domain itself.
pub(crate) fn s_matrix(
    domain: &DiscreteDomain,
    eps: f64,
    kappa: Complex64,
) -> Result<(Mat<c64>, DiscreteDomain)> {
    let scaled = domain.scaled(eps);
    let nop = assemble_newton(&scaled, kappa)?;
    let n = nop.n();
    let factor = -(1.0 - eps * eps) * kappa * kappa;
    let mut s = Mat::<c64>::from_fn(n, n, |i, j| factor * nop.entries[(i, j)]);
    let eps_sq = c64::new(eps * eps, 0.0);
    for i in 0..n {
        s[(i, i)] += eps_sq;
    }
    Ok((s, scaled))
}

/// The interior block component of the resolved source: the density g on the
/// scaled cells solving S_kappa(eps) g = (1 - eps^2) kappa^2 G_kappa(. - x_s).
pub fn interior_density(scenario: &ScatterScenario<'_>) -> Result<Vec<Complex64>> {
    scenario.validate()?;
    let eps = scenario.epsilon;
    let kappa = scenario.kappa;
    let (s, scaled) = s_matrix(scenario.domain, eps, kappa)?;
    let rhs_factor = (1.0 - eps * eps) * kappa * kappa;
    let rhs: Vec<Complex64> = scaled
        .cells()
        .iter()
        .map(|c| rhs_factor * green(kappa, c.center, scenario.source))
        .collect();
    let lu = CLu::new(s.as_ref());
    let g = lu.solve_vec(&rhs);
    let rhs_norm = rhs.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let g_norm = g.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if rhs_norm > 0.0 && (!g_norm.is_finite() || g_norm > 1e12 * rhs_norm) {
        return Err(Error::NearSingular(format!(
            "kappa = {kappa} sits too close to a resonance (amplification {:.3e})",
            g_norm / rhs_norm
        )));
    }
    Ok(g)
}

/// Total and scattered field at the observation points:
/// u(x) = G_kappa(x - x_s) + sum_i G_kappa(x - y_i) g(y_i) V_i^(eps).
pub fn scattered_field(scenario: &ScatterScenario<'_>) -> Result<FieldSolution> {
    let g = interior_density(scenario)?;
    let scaled = scenario.domain.scaled(scenario.epsilon);
    let kappa = scenario.kappa;
    let mut incident = Vec::with_capacity(scenario.observations.len());
    let mut scattered = Vec::with_capacity(scenario.observations.len());
    let mut total = Vec::with_capacity(scenario.observations.len());
    for obs in &scenario.observations {
        let inc = green(kappa, *obs, scenario.source);
        let mut sc = Complex64::new(0.0, 0.0);
        for (cell, gi) in scaled.cells().iter().zip(&g) {
            sc += green(kappa, *obs, cell.center) * gi * cell.volume;
        }
        incident.push(inc);
        scattered.push(sc);
        total.push(inc + sc);
    }
    Ok(FieldSolution {
        incident,
        scattered,
        total,
        interior_density: g,
    })
}

/// Weighted operator norm of M_kappa(eps)^{-1} on the reference mesh, by
/// power iteration on the factorized inverse.
pub fn minv_weighted_norm(domain: &DiscreteDomain, eps: f64, kappa: Complex64) -> Result<f64> {
    let m = assemble_characteristic(domain, kappa, eps)?;
    let n = m.n();
    let sw: Vec<f64> = m.weights.iter().map(|w| w.sqrt()).collect();
    let lu = CLu::new(m.entries.as_ref());
    let mut rng = SplitMix64(23);
    let mut x: Vec<Complex64> = (0..n).map(|_| rng.next_c64()).collect();
    let nx = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    for v in &mut x {
        *v /= nx;
    }
    let mut est = 0.0f64;
    for _ in 0..200 {
        // B = D^{1/2} M^{-1} D^{-1/2}; apply B then B^H
        let t: Vec<Complex64> = (0..n).map(|i| x[i] / sw[i]).collect();
        let mut u = lu.solve_vec(&t);
        for i in 0..n {
            u[i] *= sw[i];
        }
        let t2: Vec<Complex64> = (0..n).map(|i| u[i] * sw[i]).collect();
        let mut y = lu.solve_adjoint_vec(&t2);
        for i in 0..n {
            y[i] /= sw[i];
        }
        let sq = x
            .iter()
            .zip(&y)
            .map(|(xi, yi)| (xi.conj() * yi).re)
            .sum::<f64>()
            .max(0.0);
        let ny = y.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if ny == 0.0 {
            break;
        }
        x = y.into_iter().map(|v| v / ny).collect();
        if (sq - est).abs() <= 1e-10 * sq.max(1e-300) {
            est = sq;
            break;
        }
        est = sq;
    }
    Ok(est.sqrt())
}

fn local_maxima(grid: &[f64], values: &[f64]) -> Vec<(f64, f64)> {
    let mut peaks = Vec::new();
    for i in 1..values.len().saturating_sub(1) {
        if values[i] > values[i - 1] && values[i] > values[i + 1] {
            peaks.push((grid[i], values[i]));
        }
    }
    peaks
}

/// Sweeps real kappa^2 over the grid, recording the scattered-field magnitude
/// at the first observation point and the inverse-operator norm.
pub fn frequency_sweep(
    scenario: &ScatterScenario<'_>,
    kappa_sq_grid: &[f64],
) -> Result<SweepResult> {
    scenario.validate()?;
    if kappa_sq_grid.is_empty() {
        return Err(Error::Config("empty sweep grid".into()));
    }
    for w in kappa_sq_grid.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::Config(
                "sweep grid must be strictly increasing".into(),
            ));
        }
    }
    if kappa_sq_grid[0] <= 0.0 {
        return Err(Error::Config("sweep grid must be positive".into()));
    }
    let points: Vec<Result<(f64, f64)>> = kappa_sq_grid
        .par_iter()
        .map(|&ksq| {
            let kappa = Complex64::new(ksq.sqrt(), 0.0);
            let sc = ScatterScenario {
                kappa,
                ..scenario.clone()
            };
            let field = scattered_field(&sc)?;
            let minv = minv_weighted_norm(scenario.domain, scenario.epsilon, kappa)?;
            Ok((field.scattered[0].norm(), minv))
        })
        .collect();
    let mut response_field = Vec::with_capacity(kappa_sq_grid.len());
    let mut response_minv = Vec::with_capacity(kappa_sq_grid.len());
    for p in points {
        let (f, m) = p?;
        response_field.push(f);
        response_minv.push(m);
    }
    let peaks_field = local_maxima(kappa_sq_grid, &response_field);
    let peaks_minv = local_maxima(kappa_sq_grid, &response_minv);
    Ok(SweepResult {
        kappa_sq_grid: kappa_sq_grid.to_vec(),
        response_field,
        response_minv,
        peaks_field,
        peaks_minv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_ball;
    use crate::spectrum::eig_newton0;

    fn scenario<'a>(domain: &'a DiscreteDomain, eps: f64, kappa: Complex64) -> ScatterScenario<'a> {
        ScatterScenario {
            domain,
            epsilon: eps,
            kappa,
            source: [3.0, 0.0, 0.0],
            observations: vec![[0.0, 2.5, 0.0]],
        }
    }

    #[test]
    fn zero_kappa_kills_the_density() {
        let d = make_ball(1.0, 6).unwrap();
        let sc = scenario(&d, 0.3, Complex64::new(0.0, 0.0));
        let g = interior_density(&sc).unwrap();
        assert!(g.iter().all(|v| v.norm() == 0.0));
        let f = scattered_field(&sc).unwrap();
        assert_eq!(f.total[0], f.incident[0]);
    }

    #[test]
    fn unit_contrast_scatters_nothing() {
        let d = make_ball(1.0, 6).unwrap();
        let sc = scenario(&d, 1.0, Complex64::new(1.3, 0.0));
        let f = scattered_field(&sc).unwrap();
        assert!(f.scattered[0].norm() < 1e-15);
        assert!((f.total[0] - f.incident[0]).norm() < 1e-15);
    }

    #[test]
    fn scaling_identity_against_reference_family() {
        // S assembled on scaled cells equals eps^2 M_kappa(eps) on the
        // reference mesh, entry by entry
        let d = make_ball(1.0, 5).unwrap();
        let eps = 0.2;
        let kappa = Complex64::new(1.1, 0.0);
        let (s, _) = s_matrix(&d, eps, kappa).unwrap();
        let m = assemble_characteristic(&d, kappa, eps).unwrap();
        let e2 = eps * eps;
        for j in 0..m.n() {
            for i in 0..m.n() {
                let want = e2 * m.entries[(i, j)];
                let got = s[(i, j)];
                assert!(
                    (got - want).norm() <= 1e-10 * want.norm().max(1e-12),
                    "({i},{j}): {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn reciprocity_of_the_total_field() {
        let d = make_ball(1.0, 6).unwrap();
        let kappa = Complex64::new(1.2, 0.0);
        let a = [2.4, 0.3, -0.4];
        let b = [-0.8, 2.2, 0.9];
        let fwd = ScatterScenario {
            domain: &d,
            epsilon: 0.15,
            kappa,
            source: a,
            observations: vec![b],
        };
        let bwd = ScatterScenario {
            domain: &d,
            epsilon: 0.15,
            kappa,
            source: b,
            observations: vec![a],
        };
        let uf = scattered_field(&fwd).unwrap().total[0];
        let ub = scattered_field(&bwd).unwrap().total[0];
        assert!((uf - ub).norm() <= 1e-8 * uf.norm(), "{uf} vs {ub}");
    }

    #[test]
    fn far_field_decays_like_inverse_distance() {
        let d = make_ball(1.0, 6).unwrap();
        let kappa = Complex64::new(1.4, 0.0);
        let sc = ScatterScenario {
            domain: &d,
            epsilon: 0.2,
            kappa,
            source: [3.0, 0.0, 0.0],
            observations: vec![[0.0, 10.0, 0.0], [0.0, 20.0, 0.0], [0.0, 40.0, 0.0]],
        };
        let f = scattered_field(&sc).unwrap();
        let scaled: Vec<f64> = f
            .scattered
            .iter()
            .zip([10.0, 20.0, 40.0])
            .map(|(v, r)| v.norm() * r)
            .collect();
        for w in scaled.windows(2) {
            assert!((w[0] - w[1]).abs() / w[0] < 0.05, "{scaled:?}");
        }
    }

    #[test]
    fn observation_inside_the_inclusion_is_rejected() {
        let d = make_ball(1.0, 5).unwrap();
        let mut sc = scenario(&d, 0.5, Complex64::new(1.0, 0.0));
        sc.observations = vec![[0.1, 0.0, 0.0]];
        assert!(matches!(scattered_field(&sc), Err(Error::Geometry(_))));
        let mut sc2 = scenario(&d, 0.5, Complex64::new(1.0, 0.0));
        sc2.source = [0.0, 0.0, 0.0];
        assert!(matches!(scattered_field(&sc2), Err(Error::Geometry(_))));
    }

    #[test]
    fn near_resonant_amplification_of_the_density() {
        let d = make_ball(1.0, 8).unwrap();
        let op = assemble_newton(&d, Complex64::new(0.0, 0.0)).unwrap();
        let s = eig_newton0(&op).unwrap();
        let eps = 0.05;
        let on = scenario(&d, eps, Complex64::new((1.0 / s.lambda1()).sqrt(), 0.0));
        let off = scenario(&d, eps, Complex64::new((0.5 / s.lambda1()).sqrt(), 0.0));
        let g_on: f64 = interior_density(&on)
            .unwrap()
            .iter()
            .map(|v| v.norm_sqr())
            .sum::<f64>()
            .sqrt();
        let g_off: f64 = interior_density(&off)
            .unwrap()
            .iter()
            .map(|v| v.norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(g_on > 5.0 * g_off, "on {g_on} off {g_off}");
    }

    #[test]
    fn block_formula_matches_direct_lippmann_schwinger_solve() {
        // independent oracle: solve (I - c N_phys) u_in = u_inc for the interior
        // field with its own assembly, then radiate; c = (1 - eps^2) kappa^2 / eps^2
        let d = make_ball(1.0, 6).unwrap();
        let eps = 0.3;
        let kappa = Complex64::new(1.15, 0.0);
        let sc = scenario(&d, eps, kappa);
        let block = scattered_field(&sc).unwrap();

        let scaled = d.scaled(eps);
        let cells = scaled.cells();
        let n = cells.len();
        let c = (1.0 - eps * eps) * kappa * kappa / (eps * eps);
        let mut a = Mat::<c64>::zeros(n, n);
        for j in 0..n {
            for i in 0..n {
                if i == j {
                    let aj = cells[j].eq_radius;
                    a[(i, j)] = c64::new(1.0, 0.0) - c * (0.5 * aj * aj) * cis(kappa * (0.75 * aj));
                } else {
                    a[(i, j)] =
                        -c * green(kappa, cells[i].center, cells[j].center) * cells[j].volume;
                }
            }
        }
        let u_inc: Vec<Complex64> = cells
            .iter()
            .map(|cell| green(kappa, cell.center, sc.source))
            .collect();
        let lu = a.full_piv_lu();
        let rhs = crate::linalg::col_mat(&u_inc);
        use faer::linalg::solvers::Solve;
        let u_in = lu.solve(&rhs);
        let obs = sc.observations[0];
        let mut u_sc = Complex64::new(0.0, 0.0);
        for (j, cell) in cells.iter().enumerate() {
            u_sc += c * green(kappa, obs, cell.center) * u_in[(j, 0)] * cell.volume;
        }
        let reference = green(kappa, obs, sc.source) + u_sc;
        assert!(
            (block.total[0] - reference).norm() <= 1e-8 * reference.norm(),
            "block {} vs oracle {reference}",
            block.total[0]
        );
    }

    #[test]
    fn sweep_single_point_has_no_peaks() {
        let d = make_ball(1.0, 5).unwrap();
        let sc = scenario(&d, 0.1, Complex64::new(1.0, 0.0));
        let sweep = frequency_sweep(&sc, &[2.0]).unwrap();
        assert_eq!(sweep.response_field.len(), 1);
        assert!(sweep.peaks_field.is_empty());
        assert!(sweep.peaks_minv.is_empty());
        assert!(frequency_sweep(&sc, &[]).is_err());
        assert!(frequency_sweep(&sc, &[2.0, 1.0]).is_err());
    }

    #[test]
    fn sweep_peaks_near_the_ground_reciprocal() {
        let d = make_ball(1.0, 6).unwrap();
        let op = assemble_newton(&d, Complex64::new(0.0, 0.0)).unwrap();
        let s = eig_newton0(&op).unwrap();
        let mu = 1.0 / s.lambda1();
        let grid: Vec<f64> = (0..41).map(|i| mu * (0.6 + 0.02 * i as f64)).collect();
        let sc = scenario(&d, 0.05, Complex64::new(1.0, 0.0));
        let sweep = frequency_sweep(&sc, &grid).unwrap();
        let (argmax, _) = sweep
            .response_minv
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        let step = grid[1] - grid[0];
        assert!(
            (grid[argmax] - mu).abs() <= 2.0 * step,
            "peak at {} vs {mu}",
            grid[argmax]
        );
    }
}
