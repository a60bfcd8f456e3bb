//! File formats: atomic writes, fixed float formatting, CSV codecs and the
//! binary operator dump used for test fixtures.

use crate::error::{Error, Result};
use crate::kernel::{KernelOperator, OperatorKind};
use crate::resonance::{ResonanceResult, SolverMethod};
use crate::spectrum::SpectralData;
use num_complex::Complex64;
use std::fmt::Write as _;
use std::path::Path;

/// 17 significant digits; round-trips every f64 exactly.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes via a temp file in the same directory plus rename, so failures
/// never leave a partial file behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    if !dir.as_os_str().is_empty() {
        std::fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp_path = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp_path, bytes)?;
    std::fs::rename(&tmp_path, path)?;
    Ok(())
}

/// One row per mode: index, lambda, cluster_id, coupling_re, coupling_im.
pub fn modes_csv(spectral: &SpectralData) -> String {
    let mut out = String::from("index,lambda,cluster_id,coupling_re,coupling_im\n");
    for i in 0..spectral.eigenvalues.len() {
        let cluster_id = spectral
            .clusters
            .iter()
            .position(|c| (c.start..c.end).contains(&i))
            .map(|p| p as i64)
            .unwrap_or(-1);
        let c = spectral.coupling(i);
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            i,
            fmt17(spectral.eigenvalues[i]),
            cluster_id,
            fmt17(c.re),
            fmt17(c.im)
        );
    }
    out
}

/// Ball-oracle rows: l, n, k_root, lambda, multiplicity.
pub fn oracle_csv(rows: &[crate::ball::BallOracleEigenvalue]) -> String {
    let mut out = String::from("l,n,k_root,lambda,multiplicity\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.l,
            r.n,
            fmt17(r.k_root),
            fmt17(r.lambda),
            r.multiplicity
        );
    }
    out
}

/// Resonance rows in the documented column order.
pub fn resonances_csv(rows: &[ResonanceResult]) -> String {
    let mut out = String::from(
        "epsilon,seed_lambda,re_kappa,im_kappa,re_kappa_sq,im_kappa_sq,multiplicity,residual,method\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            fmt17(r.epsilon),
            fmt17(r.seed_lambda),
            fmt17(r.kappa.re),
            fmt17(r.kappa.im),
            fmt17(r.kappa_sq.re),
            fmt17(r.kappa_sq.im),
            r.multiplicity,
            fmt17(r.residual),
            match r.method {
                SolverMethod::NewtonTrack => "newton_track",
                SolverMethod::Contour => "contour",
            }
        );
    }
    out
}

/// A resonance row parsed back from CSV (the `localize` command input).
#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceRecord {
    pub epsilon: f64,
    pub seed_lambda: f64,
    pub kappa: Complex64,
    pub kappa_sq: Complex64,
    pub multiplicity: usize,
    pub residual: f64,
    pub method: String,
}

/// Parses the resonance CSV format produced by [`resonances_csv`].
pub fn parse_resonances_csv(text: &str) -> Result<Vec<ResonanceRecord>> {
    let mut rows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.trim();
        if content.is_empty() {
            continue;
        }
        if idx == 0 {
            if !content.starts_with("epsilon,") {
                return Err(Error::Parse {
                    line,
                    msg: "missing resonance CSV header".into(),
                });
            }
            continue;
        }
        let f: Vec<&str> = content.split(',').collect();
        if f.len() != 9 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 9 columns, found {}", f.len()),
            });
        }
        let num = |k: usize| -> Result<f64> {
            let v: f64 = f[k].parse().map_err(|e| Error::Parse {
                line,
                msg: format!("column {}: {e}", k + 1),
            })?;
            if v.is_nan() {
                return Err(Error::Parse {
                    line,
                    msg: format!("column {} is NaN", k + 1),
                });
            }
            Ok(v)
        };
        let mult: usize = f[6].parse().map_err(|e| Error::Parse {
            line,
            msg: format!("column 7: {e}"),
        })?;
        rows.push(ResonanceRecord {
            epsilon: num(0)?,
            seed_lambda: num(1)?,
            kappa: Complex64::new(num(2)?, num(3)?),
            kappa_sq: Complex64::new(num(4)?, num(5)?),
            multiplicity: mult,
            residual: num(7)?,
            method: f[8].to_string(),
        });
    }
    Ok(rows)
}

/// Sweep rows: kappa_sq, response_field_abs, response_minv_norm.
pub fn sweep_csv(sweep: &crate::field::SweepResult) -> String {
    let mut out = String::from("kappa_sq,response_field_abs,response_minv_norm\n");
    for i in 0..sweep.kappa_sq_grid.len() {
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt17(sweep.kappa_sq_grid[i]),
            fmt17(sweep.response_field[i]),
            fmt17(sweep.response_minv[i])
        );
    }
    out
}

const DUMP_KIND_NEWTON: u8 = 0;
const DUMP_KIND_DERIVATIVE: u8 = 1;
const DUMP_KIND_CHARACTERISTIC: u8 = 2;

/// Binary dump: header (n: u64, kappa re/im: f64, kind tag: u8, eps: f64),
/// the n cell weights, then row-major complex entries; all little-endian.
pub fn write_operator_dump(op: &KernelOperator) -> Vec<u8> {
    let n = op.n();
    let (tag, eps) = match op.kind {
        OperatorKind::Newton => (DUMP_KIND_NEWTON, 0.0),
        OperatorKind::Derivative => (DUMP_KIND_DERIVATIVE, 0.0),
        OperatorKind::Characteristic { epsilon } => (DUMP_KIND_CHARACTERISTIC, epsilon),
    };
    let mut out = Vec::with_capacity(33 + 8 * n + 16 * n * n);
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&op.kappa.re.to_le_bytes());
    out.extend_from_slice(&op.kappa.im.to_le_bytes());
    out.push(tag);
    out.extend_from_slice(&eps.to_le_bytes());
    for w in &op.weights {
        out.extend_from_slice(&w.to_le_bytes());
    }
    for i in 0..n {
        for j in 0..n {
            let v = op.entries[(i, j)];
            out.extend_from_slice(&v.re.to_le_bytes());
            out.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    out
}

/// Reads a binary operator dump, validating sizes before allocating.
pub fn read_operator_dump(bytes: &[u8]) -> Result<KernelOperator> {
    let bad = |msg: &str| Error::Parse {
        line: 0,
        msg: msg.into(),
    };
    if bytes.len() < 33 {
        return Err(bad("dump shorter than header"));
    }
    let n = u64::from_le_bytes(bytes[0..8].try_into().unwrap());
    let kappa = Complex64::new(
        f64::from_le_bytes(bytes[8..16].try_into().unwrap()),
        f64::from_le_bytes(bytes[16..24].try_into().unwrap()),
    );
    let tag = bytes[24];
    let eps = f64::from_le_bytes(bytes[25..33].try_into().unwrap());
    if !kappa.re.is_finite() || !kappa.im.is_finite() {
        return Err(bad("kappa is not finite"));
    }
    let kind = match tag {
        DUMP_KIND_NEWTON => OperatorKind::Newton,
        DUMP_KIND_DERIVATIVE => OperatorKind::Derivative,
        DUMP_KIND_CHARACTERISTIC => {
            if !(0.0..1.0).contains(&eps) {
                return Err(bad("characteristic eps out of [0, 1)"));
            }
            OperatorKind::Characteristic { epsilon: eps }
        }
        _ => return Err(bad("unknown kind tag")),
    };
    let body = (bytes.len() - 33) as u64;
    let expected = n
        .checked_mul(8)
        .and_then(|w| {
            n.checked_mul(n)
                .and_then(|nn| nn.checked_mul(16))
                .map(|e| w + e)
        })
        .ok_or_else(|| bad("size overflow"))?;
    if body != expected {
        return Err(bad("dump body length does not match header n"));
    }
    let n = n as usize;
    let mut weights = Vec::with_capacity(n);
    let mut off = 33;
    for _ in 0..n {
        let w = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
        if !(w > 0.0) || !w.is_finite() {
            return Err(bad("nonpositive or nonfinite weight"));
        }
        weights.push(w);
        off += 8;
    }
    let mut data = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            let re = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
            let im = f64::from_le_bytes(bytes[off + 8..off + 16].try_into().unwrap());
            if !re.is_finite() || !im.is_finite() {
                return Err(bad("nonfinite matrix entry"));
            }
            data[j * n + i] = Complex64::new(re, im);
            off += 16;
        }
    }
    Ok(KernelOperator {
        entries: crate::linalg::mat_from_col_major(&data, n, n),
        weights,
        kappa,
        kind,
        mesh: String::from("dump"),
    })
}
