//! Resonances as characteristic points of the family M_kappa(eps), located by
//! two independent methods: bordered-Newton tracking from spectral seeds and
//! a contour-moment (Beyn) solver that also certifies multiplicities.

use crate::error::{Error, Result};
use crate::geometry::DiscreteDomain;
use crate::kernel::assemble_newton;
use crate::linalg::{
    cis, col_mat, mat_col_to_vec, matvec, small_eigen, wdot, wdot_bilinear, wnorm, CLu, SplitMix64,
};
use crate::spectrum::SpectralData;
use faer::{c64, Mat};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// How a resonance was located.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMethod {
    NewtonTrack,
    Contour,
}

/// A converged characteristic point of M_kappa(eps).
#[derive(Debug, Clone)]
pub struct ResonanceResult {
    /// Resonance wavenumber; lower half-plane for eps > 0, real at eps = 0.
    pub kappa: Complex64,
    /// The reported resonance kappa^2.
    pub kappa_sq: Complex64,
    /// Eigenvalue of the seeding cluster (1/|center|^2 for contour results).
    pub seed_lambda: f64,
    /// Weighted-normalized kernel vector of M at the resonance.
    pub kernel_vector: Vec<Complex64>,
    /// |M v|_weighted at the converged point.
    pub residual: f64,
    pub multiplicity: usize,
    pub method: SolverMethod,
    pub epsilon: f64,
}

/// Seed eigenpair for tracking, taken from a spectral cluster.
#[derive(Debug, Clone)]
pub struct Seed {
    pub lambda: f64,
    pub vector: Vec<f64>,
}

impl SpectralData {
    /// The seeds of one cluster (its weighted-orthonormal eigenvectors).
    pub fn cluster_seeds(&self, cluster: usize) -> Vec<Seed> {
        let c = &self.clusters[cluster];
        (c.start..c.end)
            .map(|j| Seed {
                lambda: c.lambda,
                vector: self.mode(j),
            })
            .collect()
    }
}

/// One sample of a continued eigenpair of N_z.
#[derive(Debug, Clone)]
pub struct EigenPathSample {
    pub z: Complex64,
    pub zeta: Complex64,
    pub vector: Vec<Complex64>,
}

/// Eigenvalue branch zeta_j(z) of N_z continued from a static eigenpair.
#[derive(Debug, Clone)]
pub struct EigenPath {
    pub samples: Vec<EigenPathSample>,
    pub seed_lambda: f64,
}

const MAX_NEWTON_ITERS: usize = 50;
const RESIDUAL_LIMIT: f64 = 1e-9;
const SHEET_TOL: f64 = 1e-8;
const DEDUP_DISTANCE: f64 = 1e-8;

/// y = N^(1)_kappa v computed on the fly (kernel (i/4pi) e^{i kappa r}).
fn derivative_matvec(domain: &DiscreteDomain, kappa: Complex64, v: &[Complex64]) -> Vec<Complex64> {
    let cells = domain.cells();
    let quarter_i = Complex64::new(0.0, 1.0 / (4.0 * PI));
    let mut y = vec![Complex64::new(0.0, 0.0); cells.len()];
    y.par_iter_mut().enumerate().for_each(|(i, yi)| {
        let ci = &cells[i];
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, cj) in cells.iter().enumerate() {
            let dx = ci.center[0] - cj.center[0];
            let dy = ci.center[1] - cj.center[1];
            let dz = ci.center[2] - cj.center[2];
            let r = (dx * dx + dy * dy + dz * dz).sqrt();
            acc += cis(kappa * r) * cj.volume * v[j];
        }
        *yi = quarter_i * acc;
    });
    y
}

struct CharacteristicState {
    newton: Mat<c64>,
    m: Mat<c64>,
    mv: Vec<Complex64>,
    bot: Complex64,
    res: f64,
}

fn eval_state(
    domain: &DiscreteDomain,
    eps: f64,
    kappa: Complex64,
    v: &[Complex64],
    anchor: &[Complex64],
    weights: &[f64],
) -> Result<CharacteristicState> {
    let n = domain.len();
    let nop = assemble_newton(domain, kappa * eps)?;
    let factor = -(1.0 - eps * eps) * kappa * kappa;
    let mut m = Mat::<c64>::from_fn(n, n, |i, j| factor * nop.entries[(i, j)]);
    for i in 0..n {
        m[(i, i)] += c64::new(1.0, 0.0);
    }
    let mv = matvec(m.as_ref(), v);
    let bot = wdot(weights, anchor, v) - Complex64::new(1.0, 0.0);
    let res = (mv.iter().map(|x| x.norm_sqr()).sum::<f64>() + bot.norm_sqr()).sqrt();
    Ok(CharacteristicState {
        newton: nop.entries,
        m,
        mv,
        bot,
        res,
    })
}

struct BorderedSolution {
    kappa: Complex64,
    vector: Vec<Complex64>,
    residual: f64,
}

/// Newton iteration on the bordered system {M_kappa(eps) v = 0,
/// <anchor, v>_w = 1} with the analytic kappa-derivative of M.
fn bordered_newton(
    domain: &DiscreteDomain,
    eps: f64,
    kappa0: Complex64,
    v0: &[Complex64],
    anchor: &[Complex64],
) -> Result<BorderedSolution> {
    let n = domain.len();
    let weights = domain.volumes();
    let mut kappa = kappa0;
    let mut v = v0.to_vec();
    // scale the anchor normalization to start consistent
    let a0 = wdot(&weights, anchor, &v);
    if a0.norm() < 1e-14 {
        return Err(Error::Precondition(
            "seed vector is orthogonal to the anchor functional".into(),
        ));
    }
    for x in &mut v {
        *x /= a0;
    }
    let mut state = eval_state(domain, eps, kappa, &v, anchor, &weights)?;
    let tol = 1e-13 * (n as f64).sqrt();
    let mut converged = state.res <= tol;
    let mut iters = 0;
    while !converged {
        if iters >= MAX_NEWTON_ITERS {
            return Err(Error::Solver {
                msg: format!("no convergence in {MAX_NEWTON_ITERS} iterations"),
                residual: state.res,
            });
        }
        iters += 1;
        // dM/dkappa v = -(1-eps^2) (2 kappa N v + kappa^2 eps N^(1) v)
        let nv = matvec(state.newton.as_ref(), &v);
        let contrast = 1.0 - eps * eps;
        let dmv: Vec<Complex64> = if eps == 0.0 {
            nv.iter().map(|x| -2.0 * kappa * x).collect()
        } else {
            let n1v = derivative_matvec(domain, kappa * eps, &v);
            (0..n)
                .map(|i| -contrast * (2.0 * kappa * nv[i] + kappa * kappa * eps * n1v[i]))
                .collect()
        };
        let mut bordered = Mat::<c64>::zeros(n + 1, n + 1);
        for j in 0..n {
            for i in 0..n {
                bordered[(i, j)] = state.m[(i, j)];
            }
            bordered[(n, j)] = c64::new(weights[j], 0.0) * anchor[j].conj();
        }
        for i in 0..n {
            bordered[(i, n)] = dmv[i];
        }
        let mut rhs = vec![Complex64::new(0.0, 0.0); n + 1];
        for i in 0..n {
            rhs[i] = -state.mv[i];
        }
        rhs[n] = -state.bot;
        let lu = CLu::new(bordered.as_ref());
        let delta = lu.solve_vec(&rhs);
        let mut t = 1.0f64;
        let mut accepted = None;
        for _ in 0..=8 {
            let kc = kappa + t * delta[n];
            let vc: Vec<Complex64> = (0..n).map(|i| v[i] + t * delta[i]).collect();
            let cand = eval_state(domain, eps, kc, &vc, anchor, &weights)?;
            if cand.res < state.res || t <= 1.0 / 256.0 {
                accepted = Some((kc, vc, cand));
                break;
            }
            t *= 0.5;
        }
        let (kc, vc, cand) = accepted.expect("line search always yields a candidate");
        kappa = kc;
        v = vc;
        state = cand;
        converged = state.res <= tol;
    }
    // weighted-normalize the kernel vector, phase fixed against the anchor
    let norm = wnorm(&weights, &v);
    if norm == 0.0 {
        return Err(Error::Numerical("kernel vector collapsed to zero".into()));
    }
    let phase = wdot(&weights, anchor, &v);
    let rot = if phase.norm() > 1e-14 {
        phase.conj() / phase.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    for x in &mut v {
        *x = *x * rot / norm;
    }
    let mv = matvec(state.m.as_ref(), &v);
    let residual = wnorm(&weights, &mv);
    Ok(BorderedSolution {
        kappa,
        vector: v,
        residual,
    })
}

/// Tracks the resonance continued from a static eigenpair seed, starting at
/// kappa_0 = lambda^{-1/2}.
pub fn track_resonance(domain: &DiscreteDomain, eps: f64, seed: &Seed) -> Result<ResonanceResult> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::Config(format!("eps must lie in [0, 1), got {eps}")));
    }
    if !(seed.lambda > 0.0) {
        return Err(Error::Precondition(format!(
            "seed eigenvalue must be positive, got {}",
            seed.lambda
        )));
    }
    let kappa0 = Complex64::new(1.0 / seed.lambda.sqrt(), 0.0);
    let v0: Vec<Complex64> = seed
        .vector
        .iter()
        .map(|&x| Complex64::new(x, 0.0))
        .collect();
    let sol = bordered_newton(domain, eps, kappa0, &v0, &v0)?;
    if eps > 0.0 && sol.kappa.im > SHEET_TOL {
        return Err(Error::Sheet { kappa: sol.kappa });
    }
    if sol.residual >= RESIDUAL_LIMIT {
        return Err(Error::Solver {
            msg: "converged point fails the residual contract".into(),
            residual: sol.residual,
        });
    }
    Ok(ResonanceResult {
        kappa: sol.kappa,
        kappa_sq: sol.kappa * sol.kappa,
        seed_lambda: seed.lambda,
        kernel_vector: sol.vector,
        residual: sol.residual,
        multiplicity: 1,
        method: SolverMethod::NewtonTrack,
        epsilon: eps,
    })
}

/// Continues the eigenpair of N_z from (lambda, e) through the complex
/// wavenumbers `z_targets` by shifted inverse iteration.
///
/// `other_lambdas` are the representatives of the remaining clusters; the
/// continuation reports a path error when the branch comes within
/// 1e-4 lambda of one of them (collision) or the vectors jump branches.
pub fn eigen_path(
    domain: &DiscreteDomain,
    seed: &Seed,
    z_targets: &[Complex64],
    other_lambdas: &[f64],
) -> Result<EigenPath> {
    let n = domain.len();
    let weights = domain.volumes();
    let step_cap = 0.5 / domain.diameter();
    let v0: Vec<Complex64> = seed
        .vector
        .iter()
        .map(|&x| Complex64::new(x, 0.0))
        .collect();
    let mut samples = vec![EigenPathSample {
        z: Complex64::new(0.0, 0.0),
        zeta: Complex64::new(seed.lambda, 0.0),
        vector: v0,
    }];
    let mut prev_z = Complex64::new(0.0, 0.0);
    for &z in z_targets {
        if (z - prev_z).norm() >= step_cap {
            return Err(Error::Precondition(format!(
                "path step |dz| = {:.3e} exceeds the cap {:.3e}",
                (z - prev_z).norm(),
                step_cap
            )));
        }
        prev_z = z;
        let prev = samples.last().unwrap();
        let nop = assemble_newton(domain, z)?;
        let mut zeta = prev.zeta;
        let mut v = prev.vector.clone();
        let mut ok = false;
        for _ in 0..30 {
            let shifted = Mat::<c64>::from_fn(n, n, |i, j| {
                nop.entries[(i, j)]
                    - if i == j {
                        zeta
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
            });
            let lu = CLu::new(shifted.as_ref());
            let x = lu.solve_vec(&v);
            let nx = wnorm(&weights, &x);
            if !nx.is_finite() || nx == 0.0 {
                return Err(Error::Path("inverse iteration broke down".into()));
            }
            let x: Vec<Complex64> = x.into_iter().map(|c| c / nx).collect();
            let nx_mat = matvec(nop.entries.as_ref(), &x);
            // bilinear Rayleigh quotient, the natural pairing for the
            // complex-symmetric family
            let denom = wdot_bilinear(&weights, &x, &x);
            if denom.norm() < 1e-12 {
                return Err(Error::Path("bilinear normalization degenerated".into()));
            }
            let num = {
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..n {
                    acc += weights[i] * x[i] * nx_mat[i];
                }
                acc
            };
            zeta = num / denom;
            let mut res2 = 0.0;
            for i in 0..n {
                res2 += weights[i] * (nx_mat[i] - zeta * x[i]).norm_sqr();
            }
            v = x;
            if res2.sqrt() <= 1e-12 * seed.lambda {
                ok = true;
                break;
            }
        }
        if !ok {
            return Err(Error::Path(format!("inverse iteration stalled at z = {z}")));
        }
        for &other in other_lambdas {
            if (zeta - other).norm() < 1e-4 * seed.lambda {
                return Err(Error::Path(format!(
                    "eigenvalue collision near z = {z}: zeta = {zeta} against cluster at {other}"
                )));
            }
        }
        let overlap = wdot(&weights, &samples.last().unwrap().vector, &v).norm()
            / wnorm(&weights, &samples.last().unwrap().vector)
            / wnorm(&weights, &v);
        if overlap <= 0.9 {
            return Err(Error::Path(format!(
                "branch jump at z = {z}: successive overlap {overlap:.3}"
            )));
        }
        samples.push(EigenPathSample { z, zeta, vector: v });
    }
    Ok(EigenPath {
        samples,
        seed_lambda: seed.lambda,
    })
}

/// Contour-moment (Beyn) extraction of every characteristic point of
/// M_kappa(eps) inside the circle |kappa - center| = radius.
///
/// Multiplicities come from the rank of the zeroth moment; every point is
/// polished by the bordered Newton iteration.
pub fn contour_solver(
    domain: &DiscreteDomain,
    eps: f64,
    center: Complex64,
    radius: f64,
    n_quad: usize,
    max_rank: usize,
) -> Result<Vec<ResonanceResult>> {
    if n_quad < 32 {
        return Err(Error::Config(format!(
            "contour quadrature needs n_quad >= 32, got {n_quad}"
        )));
    }
    if !(radius > 0.0) || max_rank == 0 {
        return Err(Error::Config(
            "contour needs a positive radius and max_rank >= 1".into(),
        ));
    }
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::Config(format!("eps must lie in [0, 1), got {eps}")));
    }
    let n = domain.len();
    let p = max_rank.min(n);
    let mut rng = SplitMix64(0xB5);
    let probe = Mat::<c64>::from_fn(n, p, |_, _| rng.next_c64());
    let probe_fro = probe.norm_l2();
    let mut a0 = Mat::<c64>::zeros(n, p);
    let mut a1 = Mat::<c64>::zeros(n, p);
    for q in 0..n_quad {
        let theta = 2.0 * PI * q as f64 / n_quad as f64;
        let rot = Complex64::new(theta.cos(), theta.sin());
        let z = center + radius * rot;
        let m = crate::kernel::assemble_characteristic(domain, z, eps)?;
        let lu = CLu::new(m.entries.as_ref());
        let x = lu.solve_mat(&probe);
        let xn = x.norm_l2();
        if !xn.is_finite() || xn > 1e14 * probe_fro {
            return Err(Error::NearSingular(format!(
                "quadrature node {z} sits on a characteristic point"
            )));
        }
        let w0 = radius * rot / n_quad as f64;
        let w1 = w0 * z;
        for j in 0..p {
            for i in 0..n {
                a0[(i, j)] += w0 * x[(i, j)];
                a1[(i, j)] += w1 * x[(i, j)];
            }
        }
    }
    let svd = a0
        .thin_svd()
        .map_err(|e| Error::Numerical(format!("moment SVD failed: {e:?}")))?;
    let sig: Vec<f64> = (0..p).map(|i| svd.S()[i].re).collect();
    let sigma_ref = radius * probe_fro / (p as f64).sqrt();
    if sig[0] <= 1e-9 * sigma_ref {
        return Ok(Vec::new());
    }
    let k = (0..p).take_while(|&i| sig[i] > 1e-6 * sig[0]).count();
    if k == p {
        return Err(Error::IncreaseMaxRank(format!(
            "all {p} probe directions carry moment mass (sigma_min/sigma_max = {:.3e})",
            sig[p - 1] / sig[0]
        )));
    }
    let u = svd.U();
    let w = svd.V();
    // B = U_k^H A1 W_k Sigma_k^{-1}
    let uk = u.submatrix(0, 0, n, k).to_owned();
    let wk = w.submatrix(0, 0, p, k).to_owned();
    let t = uk.adjoint() * &a1 * &wk;
    let b = Mat::<c64>::from_fn(k, k, |i, j| t[(i, j)] / sig[j]);
    let (vals, becs) = small_eigen(&b)?;
    let weights = domain.volumes();
    let mut polished: Vec<(Complex64, Vec<Complex64>, f64)> = Vec::new();
    for (j, lam_b) in vals.iter().enumerate() {
        if (lam_b - center).norm() > radius * (1.0 + 1e-6) {
            continue;
        }
        let coeff = mat_col_to_vec(becs.as_ref(), j);
        let vb = {
            let x = &uk * col_mat(&coeff);
            let mut v = mat_col_to_vec(x.as_ref(), 0);
            let nv = wnorm(&weights, &v);
            for c in &mut v {
                *c /= nv;
            }
            v
        };
        let sol = bordered_newton(domain, eps, *lam_b, &vb, &vb)?;
        if eps > 0.0 && sol.kappa.im > SHEET_TOL {
            continue;
        }
        if sol.residual >= RESIDUAL_LIMIT {
            return Err(Error::Solver {
                msg: "contour polish fails the residual contract".into(),
                residual: sol.residual,
            });
        }
        polished.push((sol.kappa, sol.vector, sol.residual));
    }
    polished.sort_by(|a, b| (a.0.re, a.0.im).partial_cmp(&(b.0.re, b.0.im)).unwrap());
    let mut out: Vec<ResonanceResult> = Vec::new();
    for (kappa, vector, residual) in polished {
        if let Some(last) = out.last_mut() {
            if (last.kappa - kappa).norm() < DEDUP_DISTANCE {
                last.multiplicity += 1;
                continue;
            }
        }
        out.push(ResonanceResult {
            kappa,
            kappa_sq: kappa * kappa,
            seed_lambda: 1.0 / center.norm_sqr(),
            kernel_vector: vector,
            residual,
            multiplicity: 1,
            method: SolverMethod::Contour,
            epsilon: eps,
        });
    }
    Ok(out)
}

/// Seeds one tracked search per trusted cluster with 1/lambda <= r_plus,
/// deduplicates, and returns every resonance with kappa^2 in the disc D_{r_plus}.
pub fn resonance_set(
    domain: &DiscreteDomain,
    spectral: &SpectralData,
    eps: f64,
    r: f64,
) -> Result<Vec<ResonanceResult>> {
    if !(r > 1.0 / spectral.lambda1()) {
        return Err(Error::Precondition(format!(
            "r = {r} must exceed 1/lambda_1 = {}",
            1.0 / spectral.lambda1()
        )));
    }
    let constants = crate::asymptotics::localization_constants(spectral, domain, r)?;
    let r_plus = constants.r_plus;
    let mut tracked: Vec<ResonanceResult> = Vec::new();
    for c in spectral.trusted_clusters() {
        let lambda = spectral.clusters[c].lambda;
        if 1.0 / lambda > r_plus {
            continue;
        }
        let seeds = spectral.cluster_seeds(c);
        let results: Vec<Result<ResonanceResult>> = seeds
            .par_iter()
            .map(|s| track_resonance(domain, eps, s))
            .collect();
        for r in results {
            tracked.push(r?);
        }
    }
    tracked.sort_by(|a, b| {
        (a.kappa_sq.re, a.kappa_sq.im)
            .partial_cmp(&(b.kappa_sq.re, b.kappa_sq.im))
            .unwrap()
    });
    let mut out: Vec<ResonanceResult> = Vec::new();
    for r in tracked {
        if r.kappa_sq.norm() >= r_plus {
            continue;
        }
        if let Some(last) = out.last_mut() {
            if (last.kappa - r.kappa).norm() < DEDUP_DISTANCE {
                last.multiplicity += 1;
                continue;
            }
        }
        out.push(r);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_ball;
    use crate::kernel::assemble_newton;
    use crate::spectrum::eig_newton0;

    fn spectrum_for(res: usize) -> (DiscreteDomain, SpectralData) {
        let d = make_ball(1.0, res).unwrap();
        let op = assemble_newton(&d, Complex64::new(0.0, 0.0)).unwrap();
        let s = eig_newton0(&op).unwrap();
        (d, s)
    }

    #[test]
    fn eps_zero_recovers_mesh_eigenvalue() {
        let (d, s) = spectrum_for(6);
        for c in 0..2 {
            let seed = &s.cluster_seeds(c)[0];
            let r = track_resonance(&d, 0.0, seed).unwrap();
            let expect = 1.0 / s.clusters[c].lambda;
            assert!(
                (r.kappa_sq.re - expect).abs() / expect < 1e-10,
                "cluster {c}: {} vs {expect}",
                r.kappa_sq.re
            );
            assert_eq!(r.kappa_sq.im, 0.0);
            assert!(r.residual < 1e-9);
        }
    }

    #[test]
    fn ground_resonance_moves_into_lower_half_plane() {
        let (d, s) = spectrum_for(6);
        let seed = &s.cluster_seeds(0)[0];
        let eps = 0.05;
        let r = track_resonance(&d, eps, seed).unwrap();
        assert!(r.kappa.im < 0.0);
        assert!(r.kappa_sq.im < 0.0);
        // first-order prediction from the same mesh
        let lambda = s.clusters[0].lambda;
        let coup2 = s.coupling(0).norm_sqr();
        let first = coup2 / (4.0 * PI * lambda.powf(2.5));
        let predicted = Complex64::new(1.0 / lambda, -eps * first);
        assert!(
            (r.kappa_sq - predicted).norm() <= 20.0 * eps * eps,
            "{} vs {predicted}",
            r.kappa_sq
        );
    }

    #[test]
    fn odd_cluster_shift_is_second_order() {
        let (d, s) = spectrum_for(6);
        let eps = 0.05;
        for seed in s.cluster_seeds(1) {
            let r = track_resonance(&d, eps, &seed).unwrap();
            assert!(r.kappa_sq.im.abs() <= 5.0 * eps * eps, "{}", r.kappa_sq.im);
        }
    }

    #[test]
    fn track_rejects_bad_input() {
        let (d, s) = spectrum_for(4);
        let seed = &s.cluster_seeds(0)[0];
        assert!(track_resonance(&d, 1.0, seed).is_err());
        let bad = Seed {
            lambda: -1.0,
            vector: seed.vector.clone(),
        };
        assert!(matches!(
            track_resonance(&d, 0.0, &bad),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn contour_counts_cluster_multiplicities_at_eps_zero() {
        let (d, s) = spectrum_for(6);
        for (c, want) in [(0usize, 1usize), (1, 3)] {
            let lambda = s.clusters[c].lambda;
            let center = Complex64::new(1.0 / lambda.sqrt(), 0.0);
            let radius = 0.08 * center.re;
            let rs = contour_solver(&d, 0.0, center, radius, 32, want + 2).unwrap();
            let count: usize = rs.iter().map(|r| r.multiplicity).sum();
            assert_eq!(count, want, "cluster {c}");
            for r in &rs {
                let expect = 1.0 / lambda;
                assert!((r.kappa_sq.re - expect).abs() / expect < 1e-9);
            }
        }
    }

    #[test]
    fn contour_empty_region_returns_nothing() {
        let (d, s) = spectrum_for(6);
        let k1 = 1.0 / s.clusters[0].lambda.sqrt();
        let k2 = 1.0 / s.clusters[1].lambda.sqrt();
        let center = Complex64::new(0.5 * (k1 + k2), 0.0);
        let radius = 0.2 * (k2 - k1);
        let rs = contour_solver(&d, 0.0, center, radius, 32, 4).unwrap();
        assert!(rs.is_empty(), "{rs:?}");
    }

    #[test]
    fn contour_validates_parameters() {
        let (d, _) = spectrum_for(4);
        let c = Complex64::new(1.5, 0.0);
        assert!(contour_solver(&d, 0.0, c, 0.1, 16, 3).is_err());
        assert!(contour_solver(&d, 0.0, c, -0.1, 32, 3).is_err());
        assert!(contour_solver(&d, 0.0, c, 0.1, 32, 0).is_err());
    }

    #[test]
    fn methods_agree_on_tracked_resonance() {
        let (d, s) = spectrum_for(5);
        let eps = 0.03;
        let seed = &s.cluster_seeds(0)[0];
        let t = track_resonance(&d, eps, seed).unwrap();
        let center = Complex64::new(1.0 / seed.lambda.sqrt(), 0.0);
        let rs = contour_solver(&d, eps, center, 0.1 * center.re, 32, 3).unwrap();
        assert_eq!(rs.len(), 1);
        assert!((rs[0].kappa - t.kappa).norm() < 1e-8);
    }

    #[test]
    fn eigen_path_seed_and_derivative() {
        let (d, s) = spectrum_for(6);
        let seed = &s.cluster_seeds(0)[0];
        let others: Vec<f64> = s.clusters[1..].iter().map(|c| c.lambda).collect();
        let h = 1e-3;
        let path = eigen_path(&d, seed, &[Complex64::new(h, 0.0)], &others).unwrap();
        assert_eq!(path.samples[0].zeta, Complex64::new(seed.lambda, 0.0));
        let fd = (path.samples[1].zeta - path.samples[0].zeta) / h;
        let coup2 = s.coupling(0).norm_sqr();
        let expect = Complex64::new(0.0, coup2 / (4.0 * PI));
        assert!(
            (fd - expect).norm() / expect.norm() < 0.01,
            "{fd} vs {expect}"
        );
        // purely imaginary z keeps the branch real (self-adjoint axis)
        let path_im = eigen_path(&d, seed, &[Complex64::new(0.0, 1e-3)], &others).unwrap();
        assert!(path_im.samples[1].zeta.im.abs() < 1e-8);
    }

    #[test]
    fn eigen_path_detects_planted_collision() {
        let (d, s) = spectrum_for(5);
        let seed = &s.cluster_seeds(0)[0];
        // plant another cluster value on top of the branch; a tiny step keeps
        // the drift below the collision threshold 1e-4 lambda
        let err = eigen_path(&d, seed, &[Complex64::new(1e-5, 0.0)], &[seed.lambda]).unwrap_err();
        assert!(matches!(err, Error::Path(_)));
    }

    #[test]
    fn eigen_path_rejects_long_steps() {
        let (d, s) = spectrum_for(4);
        let seed = &s.cluster_seeds(0)[0];
        let err = eigen_path(&d, seed, &[Complex64::new(5.0, 0.0)], &[]).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn resonance_set_at_eps_zero_matches_spectrum() {
        let (d, s) = spectrum_for(6);
        let r = 1.2 / s.lambda1();
        let set = resonance_set(&d, &s, 0.0, r).unwrap();
        assert!(!set.is_empty());
        let constants = crate::asymptotics::localization_constants(&s, &d, r).unwrap();
        for res in &set {
            assert!(res.kappa_sq.norm() < constants.r_plus);
            let expect = 1.0 / res.seed_lambda;
            assert!((res.kappa_sq.re - expect).abs() / expect < 1e-9);
        }
        // ground cluster once, with multiplicity 1; the l=1 triple collapses
        assert_eq!(set[0].multiplicity, 1);
        let total: usize = set.iter().map(|r| r.multiplicity).sum();
        let expected: usize = s
            .clusters
            .iter()
            .filter(|c| 1.0 / c.lambda <= constants.r_plus)
            .map(|c| c.multiplicity)
            .sum();
        assert_eq!(total, expected);
    }

    #[test]
    fn resonance_set_covers_two_clusters_with_multiplicity() {
        let (d, s) = spectrum_for(6);
        // r beyond 1/lambda_2: the first two clusters seed, 1 + 3 resonances
        let r = 1.05 / s.clusters[1].lambda;
        let set = resonance_set(&d, &s, 0.05, r).unwrap();
        let total: usize = set.iter().map(|r| r.multiplicity).sum();
        assert_eq!(total, 4, "{set:?}");
        for res in &set {
            assert!(res.kappa.im < 1e-8);
        }
    }

    #[test]
    fn tracked_slope_matches_branch_derivative() {
        // (kappa(eps) - lambda^{-1/2})/eps against -zeta^(1)/(2 lambda^2),
        // zeta^(1) = (i/4pi)|<1,e>|^2, within 5% at eps = 1e-2
        let (d, s) = spectrum_for(6);
        let seed = &s.cluster_seeds(0)[0];
        let eps = 1e-2;
        let r = track_resonance(&d, eps, seed).unwrap();
        let lambda = seed.lambda;
        let slope = (r.kappa - Complex64::new(1.0 / lambda.sqrt(), 0.0)) / eps;
        let zeta1 = Complex64::new(0.0, s.coupling(0).norm_sqr() / (4.0 * PI));
        let expect = -zeta1 / (2.0 * lambda * lambda);
        assert!(
            (slope - expect).norm() <= 0.05 * expect.norm(),
            "{slope} vs {expect}"
        );
    }

    #[test]
    fn resonance_set_requires_r_above_inverse_lambda1() {
        let (d, s) = spectrum_for(4);
        assert!(matches!(
            resonance_set(&d, &s, 0.0, 0.5 / s.lambda1()),
            Err(Error::Precondition(_))
        ));
    }
}
