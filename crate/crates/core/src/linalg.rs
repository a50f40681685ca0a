//! Small dense/matrix-free linear-algebra helpers: conjugate gradients,
//! power iteration for extremal eigenvalues, and a dense Cholesky solve used
//! as a test oracle.

use ndarray::Array2;

use crate::error::{Result, WdriError};

/// Conjugate-gradient convergence report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOutcome {
    pub converged: bool,
    pub iterations: usize,
    /// ||b - A x|| / ||b|| at exit (recurrence residual)
    pub relative_residual: f64,
}

/// Matrix-free CG for a symmetric positive-definite operator. Stops when the
/// recurrence residual drops below `tol * ||b||` or after `max_iter`
/// iterations; non-convergence is reported in the outcome, not as an error.
pub fn conjugate_gradient<F>(
    mut apply: F,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, CgOutcome)>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    if !(tol > 0.0) {
        return Err(WdriError::InvalidArgument(format!(
            "CG tolerance must be positive, got {tol}"
        )));
    }
    let n = b.len();
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok((
            vec![0.0; n],
            CgOutcome {
                converged: true,
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rs = dot(&r, &r);
    let mut iterations = 0;
    while iterations < max_iter {
        if rs.sqrt() <= tol * b_norm {
            break;
        }
        let ap = apply(&p)?;
        if ap.len() != n {
            return Err(WdriError::ShapeMismatch(
                "operator changed the vector length".into(),
            ));
        }
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(WdriError::DegenerateInput(format!(
                "operator is not positive definite: p^T A p = {pap}"
            )));
        }
        let alpha = rs / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rs_new = dot(&r, &r);
        let beta = rs_new / rs;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rs = rs_new;
        iterations += 1;
    }
    let relative_residual = rs.sqrt() / b_norm;
    Ok((
        x,
        CgOutcome {
            converged: relative_residual <= tol,
            iterations,
            relative_residual,
        },
    ))
}

/// Largest eigenvalue of a symmetric PSD operator by power iteration with a
/// deterministic pseudo-random start.
pub fn power_iteration_max<F>(mut apply: F, n: usize, iters: usize, seed: u64) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    if n == 0 {
        return Err(WdriError::InvalidArgument("empty operator".into()));
    }
    let mut v = deterministic_unit_vector(n, seed);
    let mut lambda = 0.0;
    for _ in 0..iters {
        let av = apply(&v)?;
        lambda = dot(&v, &av);
        let nrm = norm(&av);
        if nrm == 0.0 {
            return Ok(0.0);
        }
        for i in 0..n {
            v[i] = av[i] / nrm;
        }
    }
    Ok(lambda)
}

/// Smallest eigenvalue of a symmetric operator, via power iteration on the
/// shifted operator `shift*I - A` where `shift` must dominate lambda_max.
pub fn power_iteration_min<F>(
    mut apply: F,
    n: usize,
    shift: f64,
    iters: usize,
    seed: u64,
) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let top = power_iteration_max(
        |v| {
            let av = apply(v)?;
            Ok((0..n).map(|i| shift * v[i] - av[i]).collect())
        },
        n,
        iters,
        seed,
    )?;
    Ok(shift - top)
}

/// Dense symmetric positive-definite solve by Cholesky factorization.
/// Intended as an independent oracle for small systems.
pub fn cholesky_solve(a: &Array2<f64>, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(WdriError::ShapeMismatch(format!(
            "cholesky_solve: matrix {}x{}, rhs {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    // lower-triangular factor L with A = L L^T
    let mut l = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return Err(WdriError::DegenerateInput(format!(
                        "matrix is not positive definite at pivot {i}: {s}"
                    )));
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    // forward then backward substitution
    let mut y = vec![0.0f64; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![0.0f64; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    Ok(x)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn deterministic_unit_vector(n: usize, seed: u64) -> Vec<f64> {
    // splitmix64 stream; good enough to avoid orthogonality to eigenvectors
    let mut state = seed.wrapping_add(0x9E3779B97F4A7C15);
    let mut v: Vec<f64> = (0..n)
        .map(|_| {
            state = state.wrapping_add(0x9E3779B97F4A7C15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
            z ^= z >> 31;
            (z as f64 / u64::MAX as f64) - 0.5
        })
        .collect();
    let nrm = norm(&v);
    for x in &mut v {
        *x /= nrm;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn spd_matrix() -> Array2<f64> {
        // A = M^T M + I for a fixed M
        let m = array![[1.0, 2.0, 0.5], [0.0, 1.5, -1.0], [0.3, 0.0, 2.0]];
        m.t().dot(&m) + Array2::<f64>::eye(3)
    }

    #[test]
    fn cg_matches_cholesky_on_spd_system() {
        let a = spd_matrix();
        let b = vec![1.0, -2.0, 0.5];
        let (x, out) = conjugate_gradient(
            |v| {
                Ok((0..3)
                    .map(|i| (0..3).map(|j| a[(i, j)] * v[j]).sum())
                    .collect())
            },
            &b,
            1e-12,
            100,
        )
        .unwrap();
        assert!(out.converged);
        let xc = cholesky_solve(&a, &b).unwrap();
        for i in 0..3 {
            assert!((x[i] - xc[i]).abs() < 1e-9, "{} vs {}", x[i], xc[i]);
        }
    }

    #[test]
    fn cg_zero_rhs_returns_zero() {
        let (x, out) = conjugate_gradient(|v| Ok(v.to_vec()), &[0.0, 0.0], 1e-10, 10).unwrap();
        assert_eq!(x, vec![0.0, 0.0]);
        assert!(out.converged);
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn cg_reports_non_convergence() {
        let a = spd_matrix();
        let b = vec![1.0, -2.0, 0.5];
        let (_, out) = conjugate_gradient(
            |v| {
                Ok((0..3)
                    .map(|i| (0..3).map(|j| a[(i, j)] * v[j]).sum())
                    .collect())
            },
            &b,
            1e-14,
            1,
        )
        .unwrap();
        assert!(!out.converged);
        assert_eq!(out.iterations, 1);
    }

    #[test]
    fn power_iteration_finds_extremal_eigenvalues() {
        // diagonal matrix with known spectrum
        let d = [5.0, 2.0, 0.25, 1.0];
        let apply = |v: &[f64]| -> Result<Vec<f64>> {
            Ok(v.iter().zip(d.iter()).map(|(x, s)| x * s).collect())
        };
        let top = power_iteration_max(apply, 4, 300, 1).unwrap();
        assert!((top - 5.0).abs() < 1e-8, "top {top}");
        let bottom = power_iteration_min(apply, 4, top * 1.01, 300, 2).unwrap();
        assert!((bottom - 0.25).abs() < 1e-6, "bottom {bottom}");
    }

    #[test]
    fn cholesky_rejects_indefinite_matrix() {
        let a = array![[1.0, 2.0], [2.0, 1.0]]; // eigenvalues 3, -1
        assert!(cholesky_solve(&a, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn cholesky_identity_round_trip() {
        let a = Array2::<f64>::eye(4);
        let b = vec![4.0, 3.0, 2.0, 1.0];
        assert_eq!(cholesky_solve(&a, &b).unwrap(), b);
    }
}
