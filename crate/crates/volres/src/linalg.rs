//! Thin wrappers around the dense linear-algebra backend plus the small
//! vector helpers used throughout (weighted inner products, power iteration).

use crate::error::{Error, Result};
use faer::linalg::solvers::{PartialPivLu, Solve, SolveCore};
use faer::{c64, Mat, MatRef, Side};
use num_complex::Complex64;

/// e^{i z} for complex z.
pub(crate) fn cis(z: Complex64) -> Complex64 {
    let scale = (-z.im).exp();
    Complex64::new(scale * z.re.cos(), scale * z.re.sin())
}

/// Deterministic 64-bit generator (splitmix64), used for probe vectors.
pub(crate) struct SplitMix64(pub u64);

impl SplitMix64 {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in (-1, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 52) as f64 * 2.0 - 1.0
    }

    pub fn next_c64(&mut self) -> Complex64 {
        Complex64::new(self.next_f64(), self.next_f64())
    }
}

/// Weighted conjugated pairing sum_i w_i conj(a_i) b_i.
pub(crate) fn wdot(w: &[f64], a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..w.len() {
        acc += w[i] * a[i].conj() * b[i];
    }
    acc
}

/// Weighted norm sqrt(sum_i w_i |a_i|^2).
pub(crate) fn wnorm(w: &[f64], a: &[Complex64]) -> f64 {
    w.iter()
        .zip(a)
        .map(|(wi, ai)| wi * ai.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Weighted bilinear pairing sum_i w_i a_i b_i (no conjugation); the natural
/// pairing for complex-symmetric operators.
pub(crate) fn wdot_bilinear(w: &[f64], a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..w.len() {
        acc += w[i] * a[i] * b[i];
    }
    acc
}

pub(crate) fn mat_from_col_major(v: &[Complex64], n: usize, m: usize) -> Mat<c64> {
    Mat::from_fn(n, m, |i, j| v[j * n + i])
}

pub(crate) fn col_mat(v: &[Complex64]) -> Mat<c64> {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

pub(crate) fn mat_col_to_vec(m: MatRef<'_, c64>, j: usize) -> Vec<Complex64> {
    (0..m.nrows()).map(|i| m[(i, j)]).collect()
}

/// Dense matrix-vector product y = A x on slices.
pub(crate) fn matvec(a: MatRef<'_, c64>, x: &[Complex64]) -> Vec<Complex64> {
    let y = a * col_mat(x);
    mat_col_to_vec(y.as_ref(), 0)
}

/// Full symmetric eigendecomposition, eigenvalues descending.
pub(crate) fn sym_eigen_desc(w: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let n = w.nrows();
    let evd = w
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("symmetric eigendecomposition failed: {e:?}")))?;
    let s = evd.S();
    let u = evd.U();
    // ascending -> descending
    let vals: Vec<f64> = (0..n).map(|i| s[n - 1 - i]).collect();
    let vecs = Mat::from_fn(n, n, |i, j| u[(i, n - 1 - j)]);
    Ok((vals, vecs))
}

/// LU factorization of a dense complex matrix.
pub(crate) struct CLu {
    lu: PartialPivLu<c64>,
}

impl CLu {
    pub fn new(a: MatRef<'_, c64>) -> Self {
        CLu {
            lu: a.partial_piv_lu(),
        }
    }

    pub fn solve_vec(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let x = self.lu.solve(col_mat(rhs));
        mat_col_to_vec(x.as_ref(), 0)
    }

    pub fn solve_mat(&self, rhs: &Mat<c64>) -> Mat<c64> {
        self.lu.solve(rhs)
    }

    /// Solves A^H x = rhs.
    pub fn solve_adjoint_vec(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let mut x = col_mat(rhs);
        self.lu
            .solve_transpose_in_place_with_conj(faer::Conj::Yes, x.as_mut());
        mat_col_to_vec(x.as_ref(), 0)
    }
}

/// Largest singular value of D^{1/2} A D^{-1/2} (operator 2-norm in the
/// volume-weighted inner product), by power iteration on the Gram map.
pub(crate) fn weighted_2norm(a: MatRef<'_, c64>, weights: &[f64]) -> f64 {
    let n = weights.len();
    if n == 0 {
        return 0.0;
    }
    let sqrt_w: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let ah = a.adjoint().to_owned();
    let apply_gram = |x: &[Complex64]| -> Vec<Complex64> {
        // B x with B = D^{1/2} A D^{-1/2}
        let t: Vec<Complex64> = (0..n).map(|i| x[i] / sqrt_w[i]).collect();
        let mut u = matvec(a, &t);
        for i in 0..n {
            u[i] *= sqrt_w[i];
        }
        // B^H (B x)
        let t2: Vec<Complex64> = (0..n).map(|i| u[i] * sqrt_w[i]).collect();
        let mut v = matvec(ah.as_ref(), &t2);
        for i in 0..n {
            v[i] /= sqrt_w[i];
        }
        v
    };

    let mut best = 0.0f64;
    for seed in [11u64, 877] {
        let mut rng = SplitMix64(seed);
        let mut x: Vec<Complex64> = (0..n).map(|_| rng.next_c64()).collect();
        let nx = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        for v in &mut x {
            *v /= nx;
        }
        let mut prev = 0.0f64;
        for _ in 0..500 {
            let y = apply_gram(&x);
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
            if (sq - prev).abs() <= 1e-13 * sq.max(1e-300) {
                prev = sq;
                break;
            }
            prev = sq;
        }
        best = best.max(prev.sqrt());
    }
    best
}

/// Eigendecomposition of a small dense complex matrix (values, vectors).
pub(crate) fn small_eigen(a: &Mat<c64>) -> Result<(Vec<Complex64>, Mat<c64>)> {
    let evd = a
        .eigen()
        .map_err(|e| Error::Numerical(format!("small eigensolve failed: {e:?}")))?;
    let n = a.nrows();
    let s = evd.S();
    let u = evd.U();
    let vals: Vec<Complex64> = (0..n).map(|i| s[i]).collect();
    Ok((vals, u.to_owned()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weighted_norm_of_diagonal() {
        // D^{1/2} A D^{-1/2} of a diagonal matrix is itself
        let n = 5;
        let entries: Vec<Complex64> = (0..n * n)
            .map(|k| {
                if k % (n + 1) == 0 {
                    Complex64::new(1.0 + (k / (n + 1)) as f64, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        let a = mat_from_col_major(&entries, n, n);
        let w = vec![0.3, 1.0, 2.0, 0.5, 0.7];
        let norm = weighted_2norm(a.as_ref(), &w);
        assert!((norm - 5.0).abs() < 1e-10, "norm = {norm}");
    }

    #[test]
    fn weighted_norm_matches_svd_on_random_matrix() {
        let n = 24;
        let mut rng = SplitMix64(3);
        let data: Vec<Complex64> = (0..n * n).map(|_| rng.next_c64()).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.next_f64().abs() + 0.1).collect();
        let a = mat_from_col_major(&data, n, n);
        let b = Mat::<c64>::from_fn(n, n, |i, j| a[(i, j)] * c64::new((w[i] / w[j]).sqrt(), 0.0));
        let sv = b.singular_values().unwrap();
        let norm = weighted_2norm(a.as_ref(), &w);
        assert!((norm - sv[0]).abs() <= 1e-9 * sv[0], "{norm} vs {}", sv[0]);
    }

    #[test]
    fn lu_solves_adjoint_system() {
        let n = 16;
        let mut rng = SplitMix64(9);
        let data: Vec<Complex64> = (0..n * n).map(|_| rng.next_c64()).collect();
        let mut a = mat_from_col_major(&data, n, n);
        for i in 0..n {
            a[(i, i)] += c64::new(4.0, 0.0);
        }
        let rhs: Vec<Complex64> = (0..n).map(|_| rng.next_c64()).collect();
        let lu = CLu::new(a.as_ref());
        let x = lu.solve_adjoint_vec(&rhs);
        let back = matvec(a.adjoint().to_owned().as_ref(), &x);
        for i in 0..n {
            assert!((back[i] - rhs[i]).norm() < 1e-10);
        }
    }

    #[test]
    fn cis_agrees_with_exp() {
        let z = Complex64::new(0.7, -0.3);
        let a = cis(z);
        let b = (Complex64::i() * z).exp();
        assert!((a - b).norm() < 1e-15);
    }
}
