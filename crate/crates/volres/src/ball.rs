//! Analytic eigenvalue oracle for the unit ball.
//!
//! The eigenvalues of the static Newton operator of the unit ball are
//! lambda = 1/k^2 with k the positive roots of k j_l'(k) + (l+1) j_l(k) = 0,
//! each carrying the spherical-harmonic degeneracy 2l + 1.

use crate::error::{Error, Result};

/// One oracle eigenvalue of the unit ball.
#[derive(Debug, Clone, PartialEq)]
pub struct BallOracleEigenvalue {
    /// Angular index.
    pub l: u32,
    /// Radial index (1-based).
    pub n: u32,
    /// Root of the matching condition.
    pub k_root: f64,
    /// Eigenvalue 1/k_root^2.
    pub lambda: f64,
    /// Spherical-harmonic degeneracy 2l + 1.
    pub multiplicity: u32,
}

/// Spherical Bessel functions j_0..j_lmax at x > 0, by downward recurrence
/// normalized against j_0 (stable for l beyond the turning point).
pub(crate) fn sph_jn(lmax: usize, x: f64) -> Vec<f64> {
    assert!(x > 0.0);
    let j0 = x.sin() / x;
    if lmax == 0 {
        return vec![j0];
    }
    let j1 = x.sin() / (x * x) - x.cos() / x;
    if lmax == 1 {
        return vec![j0, j1];
    }
    let start = lmax + 16 + x as usize;
    let mut fp = 0.0f64; // f_{k+1}
    let mut f = 1e-280f64; // f_k
    let mut out = vec![0.0f64; lmax + 1];
    for k in (0..=start).rev() {
        let fm = (2 * k + 3) as f64 / x * f - fp;
        if k <= lmax {
            out[k] = fm;
        }
        fp = f;
        f = fm;
        if f.abs() > 1e250 {
            let s = 1e-250;
            f *= s;
            fp *= s;
            for v in out.iter_mut() {
                *v *= s;
            }
        }
    }
    let scale = j0 / out[0];
    for v in out.iter_mut() {
        *v *= scale;
    }
    out
}

/// The matching condition k j_l'(k) + (l+1) j_l(k), with
/// j_l' = j_{l-1} - (l+1)/k j_l and j_{-1}(k) = cos(k)/k.
pub(crate) fn matching_condition(l: u32, k: f64) -> f64 {
    let l = l as usize;
    let jl;
    let jlm1;
    if l == 0 {
        jl = k.sin() / k;
        jlm1 = k.cos() / k;
    } else {
        let j = sph_jn(l, k);
        jl = j[l];
        jlm1 = j[l - 1];
    }
    let jlp = jlm1 - (l as f64 + 1.0) / k * jl;
    k * jlp + (l as f64 + 1.0) * jl
}

fn roots_for_l(l: u32, n_max: u32) -> Result<Vec<f64>> {
    let upper = (n_max as f64 + l as f64 + 2.0) * std::f64::consts::PI;
    let step = std::f64::consts::PI / 4.0;
    let mut roots: Vec<f64> = Vec::new();
    let mut a = 1e-9;
    let mut fa = matching_condition(l, a);
    while a < upper && (roots.len() as u32) < n_max {
        let b = (a + step).min(upper);
        let fb = matching_condition(l, b);
        if fa == 0.0 {
            push_root(&mut roots, a);
        } else if fa * fb < 0.0 {
            let r = bisect(l, a, b);
            push_root(&mut roots, r);
        }
        a = b;
        fa = fb;
    }
    if (roots.len() as u32) < n_max {
        return Err(Error::Oracle(format!(
            "bracket exhaustion for l = {l}: found {} of {n_max} roots below {upper:.3}",
            roots.len()
        )));
    }
    for &r in &roots {
        let res = matching_condition(l, r).abs();
        if res >= 1e-12 {
            return Err(Error::Oracle(format!(
                "root {r} of l = {l} has residual {res:.3e}"
            )));
        }
    }
    Ok(roots)
}

fn push_root(roots: &mut Vec<f64>, r: f64) {
    if roots.last().map(|&p| (p - r).abs() > 1e-9).unwrap_or(true) {
        roots.push(r);
    }
}

fn bisect(l: u32, mut a: f64, mut b: f64) -> f64 {
    let mut fa = matching_condition(l, a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let fm = matching_condition(l, m);
        if fm == 0.0 {
            return m;
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    0.5 * (a + b)
}

/// All oracle eigenvalues with l <= l_max and radial index <= n_max,
/// sorted by descending eigenvalue.
pub fn ball_oracle(l_max: u32, n_max: u32) -> Result<Vec<BallOracleEigenvalue>> {
    if l_max > 20 || n_max > 20 {
        return Err(Error::Config(format!(
            "ball oracle supports l_max, n_max <= 20, got ({l_max}, {n_max})"
        )));
    }
    if n_max == 0 {
        return Ok(Vec::new());
    }
    let per_l: Vec<Result<Vec<f64>>> = (0..=l_max)
        .into_iter()
        .map(|l| roots_for_l(l, n_max))
        .collect();
    let mut out = Vec::new();
    for (l, roots) in per_l.into_iter().enumerate() {
        for (i, k) in roots?.into_iter().enumerate() {
            out.push(BallOracleEigenvalue {
                l: l as u32,
                n: (i + 1) as u32,
                k_root: k,
                lambda: 1.0 / (k * k),
                multiplicity: 2 * l as u32 + 1,
            });
        }
    }
    out.sort_by(|a, b| b.lambda.total_cmp(&a.lambda).then(a.l.cmp(&b.l)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn l0_roots_are_odd_multiples_of_half_pi() {
        let roots = roots_for_l(0, 3).unwrap();
        let expect = [PI / 2.0, 1.5 * PI, 2.5 * PI];
        for (r, e) in roots.iter().zip(expect) {
            assert!((r - e).abs() < 1e-12, "{r} vs {e}");
        }
    }

    #[test]
    #[allow(clippy::approx_constant, clippy::excessive_precision)]
    fn roots_match_frozen_reference() {
        // independent reference values (scipy brentq on the same condition)
        let cases: [(u32, [f64; 3]); 4] = [
            (1, [3.141592653589794, 6.283185307179586, 9.424777960769379]),
            (
                2,
                [4.493409457909064, 7.725251836937707, 10.904121659428901],
            ),
            (
                3,
                [5.763459196894550, 9.095011330476355, 12.322940970566583],
            ),
            (
                4,
                [6.987932000500520, 10.417118547379365, 13.698023153249249],
            ),
        ];
        for (l, expect) in cases {
            let roots = roots_for_l(l, 3).unwrap();
            for (r, e) in roots.iter().zip(expect) {
                assert!((r - e).abs() < 1e-10, "l={l}: {r} vs {e}");
            }
        }
    }

    #[test]
    fn oracle_rows_are_consistent() {
        let rows = ball_oracle(6, 4).unwrap();
        for r in &rows {
            assert!(matching_condition(r.l, r.k_root).abs() < 1e-12);
            assert_eq!(r.multiplicity, 2 * r.l + 1);
            assert!((r.lambda * r.k_root * r.k_root - 1.0).abs() < 4.0 * f64::EPSILON);
        }
        // descending order, ground eigenvalue 4/pi^2
        for w in rows.windows(2) {
            assert!(w[0].lambda >= w[1].lambda);
        }
        assert!((rows[0].lambda - 4.0 / (PI * PI)).abs() < 1e-14);
        assert_eq!(rows[0].l, 0);
        assert_eq!(rows[1].l, 1);
        assert_eq!(rows[1].multiplicity, 3);
        assert_eq!(rows[2].l, 2);
    }

    #[test]
    fn oracle_rejects_large_indices() {
        assert!(ball_oracle(21, 3).is_err());
        assert!(ball_oracle(3, 21).is_err());
    }

    #[test]
    fn bessel_against_closed_forms() {
        for &x in &[0.3, 1.7, 4.2, 11.0] {
            let j = sph_jn(2, x);
            assert!((j[0] - x.sin() / x).abs() < 1e-14);
            assert!((j[1] - (x.sin() / (x * x) - x.cos() / x)).abs() < 1e-13);
            let j2 = (3.0 / (x * x) - 1.0) * x.sin() / x - 3.0 * x.cos() / (x * x);
            assert!((j[2] - j2).abs() < 1e-13, "x={x}");
        }
    }
}
