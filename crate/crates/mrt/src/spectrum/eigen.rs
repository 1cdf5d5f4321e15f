//! Symmetric-definite generalized eigenvalue solvers for the 1D mode pencils.
//!
//! The pencils are small (n <= 1024), so robustness wins over speed: a full
//! dense solve via Cholesky reduction below `DENSE_LIMIT`, shifted inverse
//! iteration with a coarse dense seed above it.

use nalgebra::{DMatrix, DVector};

use crate::error::{MrtError, Result};

/// Above this size the solver switches from the full dense eigensolve to
/// shifted inverse iteration.
pub const DENSE_LIMIT: usize = 512;

/// Absolute residual tolerance `||E x - alpha J x|| <= tol * ||x||_J`.
pub const EIG_RESIDUAL_TOL: f64 = 1e-10;

/// Largest eigenpair of `E x = alpha J x` with `E` symmetric and `J`
/// symmetric positive definite. The eigenvector is returned `J`-normalized
/// (`x^T J x = 1`).
pub fn largest_generalized_eig(e: &DMatrix<f64>, j: &DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    let n = e.nrows();
    if n == 0 || e.ncols() != n || j.nrows() != n || j.ncols() != n {
        return Err(MrtError::invalid("eigensolver needs square same-size matrices"));
    }
    let (alpha, x) = if n <= DENSE_LIMIT {
        dense_largest(e, j)?
    } else {
        inverse_iteration_largest(e, j)?
    };
    let x = j_normalize(j, x);
    check_residual(e, j, alpha, &x)?;
    Ok((alpha, x))
}

fn j_normalize(j: &DMatrix<f64>, mut x: DVector<f64>) -> DVector<f64> {
    let s = (x.dot(&(j * &x))).sqrt();
    if s > 0.0 {
        x /= s;
    }
    // fix sign: largest-magnitude entry positive, for reproducible output
    let mut imax = 0;
    let mut vmax = 0.0;
    for (i, v) in x.iter().enumerate() {
        if v.abs() > vmax {
            vmax = v.abs();
            imax = i;
        }
    }
    if x[imax] < 0.0 {
        x = -x;
    }
    x
}

fn check_residual(
    e: &DMatrix<f64>,
    j: &DMatrix<f64>,
    alpha: f64,
    x: &DVector<f64>,
) -> Result<()> {
    let r = e * x - (j * x) * alpha;
    let scale = x.norm() * (1.0 + alpha.abs()) * e.amax().max(j.amax()).max(1.0);
    if r.norm() > EIG_RESIDUAL_TOL * scale.max(1.0) {
        return Err(MrtError::solver(format!(
            "generalized eigensolve residual {:.3e} exceeds tolerance",
            r.norm()
        )));
    }
    Ok(())
}

/// Full dense route: Cholesky `J = L L^T`, symmetric eigensolve of
/// `L^-1 E L^-T`, back-transform.
fn dense_largest(e: &DMatrix<f64>, j: &DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    let chol = j
        .clone()
        .cholesky()
        .ok_or_else(|| MrtError::solver("J matrix not positive definite"))?;
    let l = chol.l();
    // A = L^-1 E L^-T
    let mut a = l
        .solve_lower_triangular(e)
        .ok_or_else(|| MrtError::solver("singular Cholesky factor"))?;
    a.transpose_mut();
    let a = l
        .solve_lower_triangular(&a)
        .ok_or_else(|| MrtError::solver("singular Cholesky factor"))?;
    // symmetrize against roundoff
    let a = (&a + a.transpose()) * 0.5;
    let se = a.symmetric_eigen();
    let mut best = 0;
    for i in 1..se.eigenvalues.len() {
        if se.eigenvalues[i] > se.eigenvalues[best] {
            best = i;
        }
    }
    let alpha = se.eigenvalues[best];
    let y = se.eigenvectors.column(best).into_owned();
    let x = l
        .transpose()
        .solve_upper_triangular(&y)
        .ok_or_else(|| MrtError::solver("singular Cholesky factor"))?;
    Ok((alpha, x))
}

/// All eigenvalues of the pencil (used by test oracles and by callers that
/// need the spectrum edge on both sides).
pub fn all_generalized_eigs(e: &DMatrix<f64>, j: &DMatrix<f64>) -> Result<Vec<f64>> {
    let chol = j
        .clone()
        .cholesky()
        .ok_or_else(|| MrtError::solver("J matrix not positive definite"))?;
    let l = chol.l();
    let mut a = l
        .solve_lower_triangular(e)
        .ok_or_else(|| MrtError::solver("singular Cholesky factor"))?;
    a.transpose_mut();
    let a = l
        .solve_lower_triangular(&a)
        .ok_or_else(|| MrtError::solver("singular Cholesky factor"))?;
    let a = (&a + a.transpose()) * 0.5;
    let mut vals: Vec<f64> = a.symmetric_eigen().eigenvalues.iter().copied().collect();
    vals.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(vals)
}

/// Shifted inverse iteration for the largest eigenvalue. The pencil is
/// reduced to the standard symmetric problem `C = L^-1 E L^-T` once; a
/// shifted power iteration (`C + sigma I` with `sigma >= ||C||_F` so the top
/// eigenvalue dominates in modulus) seeds Rayleigh-quotient iteration, which
/// then converges cubically.
fn inverse_iteration_largest(e: &DMatrix<f64>, j: &DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    let n = e.nrows();
    let chol = j
        .clone()
        .cholesky()
        .ok_or_else(|| MrtError::solver("J matrix not positive definite"))?;
    let l = chol.l();
    let mut c = l
        .solve_lower_triangular(e)
        .ok_or_else(|| MrtError::solver("singular Cholesky factor"))?;
    c.transpose_mut();
    let c = l
        .solve_lower_triangular(&c)
        .ok_or_else(|| MrtError::solver("singular Cholesky factor"))?;
    let c = (&c + c.transpose()) * 0.5;

    // deterministic smooth seed with a dash of roughness so no eigenvector
    // is exactly orthogonal to it
    let mut x = DVector::from_fn(n, |i, _| {
        let t = (i + 1) as f64 / (n + 1) as f64;
        (std::f64::consts::PI * t).sin() + 1e-3 * ((7 * i % 13) as f64 - 6.0)
    });
    x /= x.norm();

    let sigma = c.norm(); // Frobenius bound on the spectral radius
    for _ in 0..80 {
        let mut y = &c * &x;
        y.axpy(sigma, &x, 1.0);
        let ny = y.norm();
        if ny == 0.0 {
            return Err(MrtError::solver("power iteration degenerated"));
        }
        x = y / ny;
    }

    let mut alpha = x.dot(&(&c * &x));
    for _ in 0..30 {
        let shifted = &c - DMatrix::identity(n, n) * (alpha + 1e-12 * (1.0 + alpha.abs()));
        let lu = shifted.lu();
        let y = match lu.solve(&x) {
            Some(y) if y.norm().is_finite() && y.norm() > 0.0 => y,
            _ => break, // shift hit the eigenvalue: current x is converged
        };
        let xn = &y / y.norm();
        let alpha_new = xn.dot(&(&c * &xn));
        let done = (alpha_new - alpha).abs() <= 1e-14 * (1.0 + alpha.abs());
        x = xn;
        alpha = alpha_new;
        if done {
            break;
        }
    }
    // back-transform to the pencil eigenvector
    let xp = l
        .transpose()
        .solve_upper_triangular(&x)
        .ok_or_else(|| MrtError::solver("singular Cholesky factor"))?;
    Ok((alpha, xp))
}
