//! Subcommand implementations. Every run returns Ok(passed) where `passed`
//! reports the --check outcome (always true when --check is off).

use num_complex::Complex64;
use serde::Serialize;
use std::path::PathBuf;
use volres::asymptotics::{
    check_localization, fit_expansion, localization_constants, mk0_bound_samples,
    predict_first_order, BoundSample, ExpansionFit, ExpansionPrediction, LocalizationConstants,
    LocalizationReport,
};
use volres::config::DomainConfig;
use volres::error::{Error, Result};
use volres::io::{
    fmt17, modes_csv, oracle_csv, parse_resonances_csv, resonances_csv, sweep_csv, write_atomic,
};
use volres::kernel::assemble_newton;
use volres::resonance::{resonance_set, ResonanceResult, SolverMethod};
use volres::spectrum::{cluster, coupling_of, eig_newton0, top_eigenpair, SpectralData};
use volres::{DiscreteDomain, RunConfig, ScatterScenario};

/// Largest mesh the dense eigendecomposition/LU pipeline accepts.
const DENSE_LIMIT: usize = 4200;

pub struct Ctx {
    pub cfg: RunConfig,
    pub out_dir: PathBuf,
    pub check: bool,
}

impl Ctx {
    pub fn new(
        config: PathBuf,
        out_dir: Option<PathBuf>,
        threads: Option<usize>,
        check: bool,
    ) -> Result<Ctx> {
        let cfg = RunConfig::from_path(&config)?;
        let out_dir = out_dir
            .or_else(|| std::env::var_os("VOLRES_OUT_DIR").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(&cfg.out_dir));
        let threads = threads.unwrap_or(cfg.threads);
        if threads > 0 {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global();
            faer::set_global_parallelism(faer::Par::rayon(threads));
        }
        Ok(Ctx {
            cfg,
            out_dir,
            check,
        })
    }

    fn write(&self, name: &str, content: &str) -> Result<()> {
        write_atomic(&self.out_dir.join(name), content.as_bytes())
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, &text)
    }
}

fn dense_spectrum(ctx: &Ctx, domain: &DiscreteDomain) -> Result<SpectralData> {
    if domain.len() > DENSE_LIMIT {
        return Err(Error::Config(format!(
            "mesh with {} cells exceeds the dense pipeline limit {DENSE_LIMIT}; lower the resolution",
            domain.len()
        )));
    }
    let op = assemble_newton(domain, Complex64::new(0.0, 0.0))?;
    let mut spectral = eig_newton0(&op)?;
    cluster(&mut spectral, ctx.cfg.cluster_tol)?;
    Ok(spectral)
}

#[derive(Serialize)]
struct ConvergenceRow {
    resolution: usize,
    n: usize,
    lambda1: f64,
    second_cluster_multiplicity: Option<usize>,
    oracle_lambda1: Option<f64>,
    rel_err: Option<f64>,
}

pub fn cmd_spectrum(ctx: &Ctx) -> Result<bool> {
    let cfg = &ctx.cfg;
    let is_ball = matches!(cfg.domain, DomainConfig::Ball { .. });
    let oracle_rows = if is_ball {
        let rows = volres::ball_oracle(cfg.oracle.l_max, cfg.oracle.n_max)?;
        ctx.write("oracle.csv", &oracle_csv(&rows))?;
        Some(rows)
    } else {
        None
    };
    // the oracle describes the unit ball; rescale lambda ~ radius^2
    let oracle_lambda1 = oracle_rows.as_ref().map(|rows| {
        let r = match cfg.domain {
            DomainConfig::Ball { radius, .. } => radius,
            _ => 1.0,
        };
        rows[0].lambda * r * r
    });
    let resolutions: Vec<usize> = if cfg.resolutions.is_empty() {
        match cfg.domain {
            DomainConfig::Ball { resolution, .. } | DomainConfig::Box { resolution, .. } => {
                vec![resolution]
            }
            DomainConfig::Voxel { .. } => vec![0],
        }
    } else {
        cfg.resolutions.clone()
    };
    let mut table = Vec::new();
    for &res in &resolutions {
        let domain = if matches!(cfg.domain, DomainConfig::Voxel { .. }) {
            cfg.build_domain()?
        } else {
            cfg.build_domain_at(res)?
        };
        let n = domain.len();
        let (lambda1, second_mult, csv) = if n <= DENSE_LIMIT {
            let spectral = dense_spectrum(ctx, &domain)?;
            let mult = spectral.clusters.get(1).map(|c| c.multiplicity);
            (spectral.lambda1(), mult, modes_csv(&spectral))
        } else {
            let (lambda1, mode) = top_eigenpair(&domain)?;
            let coup = coupling_of(&domain.volumes(), &mode);
            let csv = format!(
                "index,lambda,cluster_id,coupling_re,coupling_im\n0,{},0,{},{}\n",
                fmt17(lambda1),
                fmt17(coup),
                fmt17(0.0)
            );
            (lambda1, None, csv)
        };
        ctx.write(&format!("modes_res{res}.csv"), &csv)?;
        table.push(ConvergenceRow {
            resolution: res,
            n,
            lambda1,
            second_cluster_multiplicity: second_mult,
            oracle_lambda1,
            rel_err: oracle_lambda1.map(|o| (lambda1 - o).abs() / o),
        });
    }
    let mut csv = String::from(if is_ball {
        "resolution,n,lambda1,second_cluster_multiplicity,oracle_lambda1,rel_err\n"
    } else {
        "resolution,n,lambda1,second_cluster_multiplicity\n"
    });
    for row in &table {
        let mult = row
            .second_cluster_multiplicity
            .map(|m| m.to_string())
            .unwrap_or_default();
        if is_ball {
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                row.resolution,
                row.n,
                fmt17(row.lambda1),
                mult,
                fmt17(row.oracle_lambda1.unwrap()),
                fmt17(row.rel_err.unwrap())
            ));
        } else {
            csv.push_str(&format!(
                "{},{},{},{}\n",
                row.resolution,
                row.n,
                fmt17(row.lambda1),
                mult
            ));
        }
    }
    ctx.write("convergence.csv", &csv)?;
    let mut pass = true;
    if ctx.check && is_ball {
        let mut prev = f64::INFINITY;
        for row in &table {
            let err = row.rel_err.unwrap();
            println!(
                "[spectrum res {}] lambda1 = {:.6} rel_err = {:.4}%: {}",
                row.resolution,
                row.lambda1,
                err * 100.0,
                if err < prev {
                    "decreasing"
                } else {
                    "NOT DECREASING"
                }
            );
            if err >= prev {
                pass = false;
            }
            let cap = if row.resolution >= 32 {
                0.025
            } else if row.resolution >= 16 {
                0.05
            } else {
                f64::INFINITY
            };
            if err > cap {
                pass = false;
            }
            prev = err;
        }
    }
    Ok(pass)
}

#[derive(Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
enum LocalizationRun {
    Checked {
        eps: f64,
        report: LocalizationReport,
    },
    HypothesisNotMet {
        eps: f64,
        eps_max: f64,
    },
}

#[derive(Serialize)]
struct BoundSection {
    samples: Vec<BoundSample>,
    stated_bound_holds: usize,
    proved_bound_holds: usize,
    total: usize,
}

#[derive(Serialize)]
struct LocalizationFile {
    constants: LocalizationConstants,
    runs: Vec<LocalizationRun>,
    bound: BoundSection,
}

#[derive(Serialize)]
struct ExpansionSample {
    eps: f64,
    kappa_sq_re: f64,
    kappa_sq_im: f64,
}

#[derive(Serialize)]
struct ExpansionFile {
    cluster: usize,
    lambda: f64,
    predictions: Vec<ExpansionPrediction>,
    samples: Vec<ExpansionSample>,
    fit: Option<ExpansionFit>,
    /// |fit.first - predicted first| / |predicted first|, when both exist.
    first_order_agreement: Option<f64>,
}

pub fn cmd_resonances(ctx: &Ctx) -> Result<bool> {
    let cfg = &ctx.cfg;
    let domain = cfg.build_domain()?;
    let spectral = dense_spectrum(ctx, &domain)?;
    let r = cfg.r.unwrap_or(1.2 / spectral.lambda1());
    let constants = localization_constants(&spectral, &domain, r)?;

    let mut all_rows: Vec<ResonanceResult> = Vec::new();
    let mut runs = Vec::new();
    let mut loc_pass = true;
    for &eps in &cfg.epsilons {
        let set = resonance_set(&domain, &spectral, eps, r)?;
        if eps <= constants.eps_max {
            let report = check_localization(&set, &constants, &spectral, eps)?;
            loc_pass &= report.all_pass;
            println!(
                "[localization eps {eps}] {} resonances, all in discs: {}",
                report.entries.len(),
                report.all_pass
            );
            runs.push(LocalizationRun::Checked { eps, report });
        } else {
            println!(
                "[localization eps {eps}] hypothesis not met (eps_max = {:.3e}), check skipped",
                constants.eps_max
            );
            runs.push(LocalizationRun::HypothesisNotMet {
                eps,
                eps_max: constants.eps_max,
            });
        }
        all_rows.extend(set);
    }
    ctx.write("resonances.csv", &resonances_csv(&all_rows))?;

    let bound_samples = mk0_bound_samples(&spectral, cfg.bound_samples, cfg.seed)?;
    let stated = bound_samples.iter().filter(|b| b.lhs <= b.rhs).count();
    let proved = bound_samples
        .iter()
        .filter(|b| b.lhs <= b.rhs_proved * (1.0 + 1e-12))
        .count();
    println!(
        "[inverse-norm bound] stated formula holds on {stated}/{} samples, proved bound on {proved}/{}",
        bound_samples.len(),
        bound_samples.len()
    );
    ctx.write_json(
        "localization.json",
        &LocalizationFile {
            constants,
            runs,
            bound: BoundSection {
                total: bound_samples.len(),
                stated_bound_holds: stated,
                proved_bound_holds: proved,
                samples: bound_samples,
            },
        },
    )?;

    // expansion fit on the selected cluster: one tracked branch per eps,
    // taking the carrier (largest |Im kappa^2|) when the cluster splits
    let cluster_idx = cfg.cluster;
    let predictions = predict_first_order(&spectral, cluster_idx)?;
    let lambda = spectral.clusters[cluster_idx].lambda;
    let mut samples = Vec::new();
    for &eps in &cfg.epsilons {
        let of_cluster: Vec<&ResonanceResult> = all_rows
            .iter()
            .filter(|r| r.epsilon == eps && (r.seed_lambda - lambda).abs() < 1e-12)
            .collect();
        if let Some(best) = of_cluster
            .iter()
            .max_by(|a, b| a.kappa_sq.im.abs().total_cmp(&b.kappa_sq.im.abs()))
        {
            samples.push((eps, best.kappa_sq));
        }
    }
    let fit = if samples.len() >= 3 {
        Some(fit_expansion(&samples)?)
    } else {
        None
    };
    let agreement = fit.as_ref().map(|f| {
        let pred = predictions[0].first_coeff();
        (f.first() - pred).norm() / pred.norm().max(1e-300)
    });
    if let (Some(f), Some(a)) = (&fit, agreement) {
        println!(
            "[expansion] fitted first coefficient = {:+.6e}{:+.6e}i, predicted = {:+.6e}i, agreement {:.3}%: order {:.2}",
            f.first_re,
            f.first_im,
            predictions[0].first_coeff_im,
            a * 100.0,
            f.remainder_order
        );
    }
    ctx.write_json(
        "expansion.json",
        &ExpansionFile {
            cluster: cluster_idx,
            lambda,
            predictions: predictions.clone(),
            samples: samples
                .iter()
                .map(|&(eps, k)| ExpansionSample {
                    eps,
                    kappa_sq_re: k.re,
                    kappa_sq_im: k.im,
                })
                .collect(),
            fit,
            first_order_agreement: agreement,
        },
    )?;

    let mut pass = loc_pass;
    if let Some(a) = agreement {
        if predictions[0].coupling_sq > 1e-8 {
            pass &= a <= 0.05;
        }
    }
    Ok(!ctx.check || pass)
}

#[derive(Serialize)]
struct PeaksFile {
    lambda1: f64,
    expected_center: f64,
    grid_step: f64,
    tolerance: f64,
    argmax_minv: f64,
    argmax_field: f64,
    peaks_minv: Vec<(f64, f64)>,
    peaks_field: Vec<(f64, f64)>,
}

pub fn cmd_sweep(ctx: &Ctx) -> Result<bool> {
    let cfg = &ctx.cfg;
    let domain = cfg.build_domain()?;
    if domain.len() > DENSE_LIMIT {
        return Err(Error::Config(format!(
            "mesh with {} cells exceeds the dense pipeline limit {DENSE_LIMIT}",
            domain.len()
        )));
    }
    let sw = &cfg.sweep;
    let (lambda1, _) = top_eigenpair(&domain)?;
    let mu = 1.0 / lambda1;
    let grid: Vec<f64> = if sw.points == 1 {
        vec![mu * 0.5 * (sw.lo_factor + sw.hi_factor)]
    } else {
        (0..sw.points)
            .map(|i| {
                mu * (sw.lo_factor
                    + (sw.hi_factor - sw.lo_factor) * i as f64 / (sw.points - 1) as f64)
            })
            .collect()
    };
    let scenario = ScatterScenario {
        domain: &domain,
        epsilon: sw.epsilon,
        kappa: Complex64::new(grid[0].sqrt(), 0.0),
        source: sw.source,
        observations: vec![sw.observation],
    };
    let sweep = volres::frequency_sweep(&scenario, &grid)?;
    ctx.write("sweep.csv", &sweep_csv(&sweep))?;

    let argmax = |vals: &[f64]| -> f64 {
        let (i, _) = vals
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        grid[i]
    };
    let step = if grid.len() > 1 {
        grid[1] - grid[0]
    } else {
        0.0
    };
    // the disc radius c_r eps adds slack when the dense spectrum is available
    let tolerance = if domain.len() <= DENSE_LIMIT && domain.len() > 1 {
        let spectral = dense_spectrum(ctx, &domain)?;
        let r = cfg.r.unwrap_or(1.2 / spectral.lambda1());
        match localization_constants(&spectral, &domain, r) {
            Ok(c) => step.max(c.c_r * sw.epsilon),
            Err(_) => step,
        }
    } else {
        step
    };
    let peaks = PeaksFile {
        lambda1,
        expected_center: mu,
        grid_step: step,
        tolerance,
        argmax_minv: argmax(&sweep.response_minv),
        argmax_field: argmax(&sweep.response_field),
        peaks_minv: sweep.peaks_minv.clone(),
        peaks_field: sweep.peaks_field.clone(),
    };
    let pass = (peaks.argmax_minv - mu).abs() <= tolerance.max(step)
        && (peaks.argmax_field - mu).abs() <= tolerance.max(step);
    if ctx.check {
        println!(
            "[sweep] inverse-norm peak at {:.6} (expected {:.6} +- {:.3e}): {}",
            peaks.argmax_minv,
            mu,
            tolerance,
            if pass { "PASS" } else { "FAIL" }
        );
    }
    ctx.write_json("peaks.json", &peaks)?;
    Ok(!ctx.check || pass)
}

pub fn cmd_localize(ctx: &Ctx) -> Result<bool> {
    let cfg = &ctx.cfg;
    let csv_path = cfg.resonances_csv.as_ref().ok_or_else(|| {
        Error::Config("localize needs resonances_csv pointing at a cached run".into())
    })?;
    let text = std::fs::read_to_string(csv_path)?;
    let records = parse_resonances_csv(&text)?;
    let domain = cfg.build_domain()?;
    let spectral = dense_spectrum(ctx, &domain)?;
    let r = cfg.r.unwrap_or(1.2 / spectral.lambda1());
    let constants = localization_constants(&spectral, &domain, r)?;
    let mut eps_values: Vec<f64> = records.iter().map(|r| r.epsilon).collect();
    eps_values.sort_by(f64::total_cmp);
    eps_values.dedup();
    let mut runs = Vec::new();
    let mut pass = true;
    for eps in eps_values {
        let rows: Vec<ResonanceResult> = records
            .iter()
            .filter(|rec| rec.epsilon == eps)
            .map(|rec| ResonanceResult {
                kappa: rec.kappa,
                kappa_sq: rec.kappa_sq,
                seed_lambda: rec.seed_lambda,
                kernel_vector: Vec::new(),
                residual: rec.residual,
                multiplicity: rec.multiplicity,
                method: if rec.method == "contour" {
                    SolverMethod::Contour
                } else {
                    SolverMethod::NewtonTrack
                },
                epsilon: rec.epsilon,
            })
            .collect();
        if eps <= constants.eps_max {
            let report = check_localization(&rows, &constants, &spectral, eps)?;
            pass &= report.all_pass;
            runs.push(LocalizationRun::Checked { eps, report });
        } else {
            runs.push(LocalizationRun::HypothesisNotMet {
                eps,
                eps_max: constants.eps_max,
            });
        }
    }
    #[derive(Serialize)]
    struct LocalizeFile {
        constants: LocalizationConstants,
        runs: Vec<LocalizationRun>,
    }
    ctx.write_json("localize.json", &LocalizeFile { constants, runs })?;
    Ok(!ctx.check || pass)
}

pub fn cmd_oracle(ctx: &Ctx) -> Result<bool> {
    let rows = volres::ball_oracle(ctx.cfg.oracle.l_max, ctx.cfg.oracle.n_max)?;
    ctx.write("oracle.csv", &oracle_csv(&rows))?;
    Ok(true)
}
