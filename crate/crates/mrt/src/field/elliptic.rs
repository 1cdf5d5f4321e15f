//! Variable-coefficient Neumann pressure solver.
//!
//! Solves `-div_A( (grad_A q)/rho ) = rhs` on the slab with the wall-normal
//! pressure flux `(grad_A q / rho) . e2` prescribed at the walls (zero for
//! the transformed problem, since `eta2`, `d11 eta2` and `G_eta` all vanish
//! there) and `q` normalized to zero mean.
//!
//! Discretization notes:
//! * the operator is the exact composition of the collocated `grad_A`,
//!   pointwise `1/rho`, wall-flux correction and `div_A`, so the residual
//!   reported here is the residual of the same discrete operators the
//!   simulator uses;
//! * the Nyquist band in `y1` is excluded from the pressure space (the odd
//!   spectral derivative has no consistent symbol there), as are the mean
//!   and the `y2`-checkerboard kernel mode of the `k = 0` sector;
//! * Krylov solver: LSQR with the explicit transpose of the composition,
//!   right-preconditioned by the exact per-Fourier-mode solve of the
//!   flat-geometry operator (`A = I`, `rho = rho(y2)`), one factored real
//!   matrix per wavenumber. Least squares rather than plain CG because the
//!   wall closures make the collocated operator mildly nonsymmetric and
//!   sampled right-hand sides are compatible only to discretization
//!   accuracy; LSQR converges to the range projection and exposes the
//!   incompatible remainder instead of stalling on it.

use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use rustfft::num_complex::Complex64;

use super::{div_a, grad_a, GeometryA, Grid2D, ScalarField, VectorField};
use crate::error::{MrtError, Result};
use crate::profile::Profile;

#[derive(Debug, Clone)]
pub struct EllipticOptions {
    /// relative residual target `||b - L q|| <= rtol ||b||`
    pub rtol: f64,
    /// compatibility tolerance after right-hand-side projection
    pub ctol: f64,
    pub max_iters: usize,
}

impl Default for EllipticOptions {
    fn default() -> Self {
        EllipticOptions {
            rtol: 1e-9,
            ctol: 1e-10,
            max_iters: 400,
        }
    }
}

/// Prescribed wall values of the conormal flux `(grad_A q / rho) . e2`.
#[derive(Debug, Clone)]
pub struct WallFlux {
    pub bottom: Vec<f64>,
    pub top: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct EllipticSolution {
    pub q: ScalarField,
    /// final relative residual of the discrete system, `||b - L q|| / ||b||`
    pub residual: f64,
    /// compatibility deviation of the (lifted) right-hand side before
    /// projection: `int rhs J dy` should vanish for a solvable problem
    pub compat_deviation: f64,
    /// norm of the range-orthogonal part of the right-hand side that no
    /// pressure can balance (the discrete incompatibility)
    pub projected_out: f64,
    pub iterations: usize,
}

/// Per-Fourier-mode factorization of the flat-geometry operator, reused
/// across solves on the same grid and profile.
///
/// The `k = 0` block has a two-dimensional kernel: constants, and the
/// `y2`-checkerboard that centered differences annihilate at interior nodes
/// while the wall-flux correction masks the one-sided rows. Both directions
/// are pinned here and projected out of the pressure space.
pub struct NeumannPrecond {
    n1: usize,
    n2: usize,
    rho: Vec<f64>,
    /// LU factors of `k^2 R + T` for k = 0..n1/2-1 (k = 0 doubly pinned)
    factors: Vec<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
    /// LU factors of the transposed blocks, for the adjoint solves
    factors_t: Vec<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
    /// dense transpose of the 1D wall-normal derivative matrix
    d2t: DMatrix<f64>,
}

/// Dense 1D derivative matrix matching [`Grid2D::d2`].
fn d2_matrix(n2: usize, dy2: f64) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(n2, n2);
    let inv2d = 1.0 / (2.0 * dy2);
    d[(0, 0)] = -3.0 * inv2d;
    d[(0, 1)] = 4.0 * inv2d;
    d[(0, 2)] = -inv2d;
    d[(n2 - 1, n2 - 1)] = 3.0 * inv2d;
    d[(n2 - 1, n2 - 2)] = -4.0 * inv2d;
    d[(n2 - 1, n2 - 3)] = inv2d;
    for j in 1..n2 - 1 {
        d[(j, j - 1)] = -inv2d;
        d[(j, j + 1)] = inv2d;
    }
    d
}

impl NeumannPrecond {
    pub fn new(grid: &Grid2D, p: &Profile) -> Result<Self> {
        let n1 = grid.n1;
        let n2 = grid.n2;
        let rho: Vec<f64> = (0..n2).map(|j| p.rho(grid.y2(j))).collect();
        let d2 = d2_matrix(n2, grid.dy2);

        // T = -D2 * C * R * D2 where C zeroes the wall flux rows and
        // R = diag(1/rho)
        let mut crd2 = d2.clone();
        for j in 0..n2 {
            let c = if j == 0 || j == n2 - 1 { 0.0 } else { 1.0 / rho[j] };
            for i in 0..n2 {
                crd2[(j, i)] *= c;
            }
        }
        let t = -(&d2 * &crd2);

        let mut factors = Vec::with_capacity(n1 / 2);
        let mut factors_t = Vec::with_capacity(n1 / 2);
        for k in 0..n1 / 2 {
            let mut m = t.clone();
            let k2 = (k * k) as f64;
            for j in 0..n2 {
                m[(j, j)] += k2 / rho[j];
            }
            if k == 0 {
                // pin both kernel directions of the singular block
                for i in 0..n2 {
                    m[(0, i)] = if i == 0 { 1.0 } else { 0.0 };
                    m[(1, i)] = if i == 1 { 1.0 } else { 0.0 };
                }
            }
            factors_t.push(m.transpose().lu());
            factors.push(m.lu());
        }
        Ok(NeumannPrecond {
            n1,
            n2,
            rho,
            factors,
            factors_t,
            d2t: d2.transpose(),
        })
    }

    /// Approximate inverse: exact solve of the flat-geometry operator,
    /// mode by mode. The Nyquist band is annihilated. `transpose` selects
    /// the adjoint solve.
    fn apply(&self, grid: &Grid2D, f: &ScalarField, transpose: bool) -> ScalarField {
        let spectra = rows_fft(grid, f);
        let mut out_spec: Array2<Complex64> = Array2::default((self.n2, self.n1));
        let mut rhs_re = DVector::zeros(self.n2);
        let mut rhs_im = DVector::zeros(self.n2);
        for k in 0..self.n1 / 2 {
            for j in 0..self.n2 {
                rhs_re[j] = spectra[(j, k)].re;
                rhs_im[j] = spectra[(j, k)].im;
            }
            if k == 0 {
                rhs_re[0] = 0.0;
                rhs_im[0] = 0.0;
                rhs_re[1] = 0.0;
                rhs_im[1] = 0.0;
            }
            let facs = if transpose { &self.factors_t } else { &self.factors };
            let xr = facs[k].solve(&rhs_re).expect("pinned block is nonsingular");
            let xi = facs[k].solve(&rhs_im).expect("pinned block is nonsingular");
            for j in 0..self.n2 {
                out_spec[(j, k)] = Complex64::new(xr[j], xi[j]);
                if k > 0 {
                    out_spec[(j, self.n1 - k)] = Complex64::new(xr[j], -xi[j]);
                }
            }
        }
        // Nyquist bins stay zero
        let out = rows_ifft(grid, &out_spec);
        project_subspace(grid, &out)
    }

    /// `D2^T f`, column by column.
    fn d2_transpose(&self, grid: &Grid2D, f: &ScalarField) -> ScalarField {
        let mut out = grid.zeros();
        for i in 0..grid.n1 {
            for j in 0..self.n2 {
                let mut s = 0.0;
                for jj in 0..self.n2 {
                    let c = self.d2t[(j, jj)];
                    if c != 0.0 {
                        s += c * f[(jj, i)];
                    }
                }
                out[(j, i)] = s;
            }
        }
        out
    }

    pub fn rho_at(&self, j: usize) -> f64 {
        self.rho[j]
    }
}

fn rows_fft(grid: &Grid2D, f: &ScalarField) -> Array2<Complex64> {
    use rustfft::FftPlanner;
    let mut planner = FftPlanner::new();
    let plan = planner.plan_fft_forward(grid.n1);
    let mut out = Array2::default((grid.n2, grid.n1));
    let mut buf = vec![Complex64::default(); grid.n1];
    for j in 0..grid.n2 {
        for i in 0..grid.n1 {
            buf[i] = Complex64::new(f[(j, i)], 0.0);
        }
        plan.process(&mut buf);
        for i in 0..grid.n1 {
            out[(j, i)] = buf[i] / grid.n1 as f64;
        }
    }
    out
}

fn rows_ifft(grid: &Grid2D, spec: &Array2<Complex64>) -> ScalarField {
    use rustfft::FftPlanner;
    let mut planner = FftPlanner::new();
    let plan = planner.plan_fft_inverse(grid.n1);
    let mut out = Array2::zeros((grid.n2, grid.n1));
    let mut buf = vec![Complex64::default(); grid.n1];
    for j in 0..grid.n2 {
        for i in 0..grid.n1 {
            buf[i] = spec[(j, i)];
        }
        plan.process(&mut buf);
        for i in 0..grid.n1 {
            out[(j, i)] = buf[i].re;
        }
    }
    out
}

/// Remove the parts of a scalar field the pressure solve cannot represent or
/// determine: the `y1` Nyquist band, the mean, and the `y2`-checkerboard
/// kernel mode of the k = 0 sector.
fn project_subspace(grid: &Grid2D, f: &ScalarField) -> ScalarField {
    let mut spec = rows_fft(grid, f);
    let nyq = grid.n1 / 2;
    for j in 0..grid.n2 {
        spec[(j, nyq)] = Complex64::default();
    }
    // within the k = 0 column, remove the span of {1, (-1)^j}
    let n2 = grid.n2 as f64;
    let mut s0 = Complex64::default();
    let mut s1 = Complex64::default();
    let mut cb_dot_one = 0.0;
    for j in 0..grid.n2 {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        s0 += spec[(j, 0)];
        s1 += spec[(j, 0)] * sign;
        cb_dot_one += sign;
    }
    // Gram-Schmidt of cb against ones: cb_perp_j = sign_j - cb_dot_one/n2
    let cbp_norm2 = n2 - cb_dot_one * cb_dot_one / n2;
    let f_dot_cbp = s1 - s0 * (cb_dot_one / n2);
    for j in 0..grid.n2 {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let cbp = sign - cb_dot_one / n2;
        spec[(j, 0)] -= s0 / n2 + f_dot_cbp * (cbp / cbp_norm2);
    }
    rows_ifft(grid, &spec)
}

/// The wall-corrected pressure flux `Y = (grad_A q)/rho` with `Y.e2`
/// overwritten by the boundary datum (zero here; the inhomogeneous case is
/// lifted into the right-hand side). Subtracting this flux from a velocity
/// field preserves exact wall impermeability.
pub(crate) fn corrected_flux(
    grid: &Grid2D,
    geom: &GeometryA,
    rho: &[f64],
    q: &ScalarField,
) -> VectorField {
    let mut y = grad_a(grid, geom, q);
    for j in 0..grid.n2 {
        let inv_rho = 1.0 / rho[j];
        for i in 0..grid.n1 {
            y.x1[(j, i)] *= inv_rho;
            y.x2[(j, i)] *= inv_rho;
        }
    }
    for i in 0..grid.n1 {
        y.x2[(0, i)] = 0.0;
        y.x2[(grid.n2 - 1, i)] = 0.0;
    }
    y
}

fn apply_operator(
    grid: &Grid2D,
    geom: &GeometryA,
    rho: &[f64],
    q: &ScalarField,
) -> ScalarField {
    let y = corrected_flux(grid, geom, rho, q);
    let mut out = div_a(grid, geom, &y);
    out.mapv_inplace(|v| -v);
    project_subspace(grid, &out)
}

/// Transpose of [`apply_operator`] in the plain node inner product:
/// `L^T s = -grad_A^T ( R Corr ( div_A^T s ) )` unrolled onto the discrete
/// pieces (`D1^T = -D1` for the spectral derivative; `D2^T` explicit).
fn apply_operator_t(
    grid: &Grid2D,
    geom: &GeometryA,
    rho: &[f64],
    precond: &NeumannPrecond,
    s: &ScalarField,
) -> ScalarField {
    let neg_s = s.mapv(|v| -v);
    // div_A^T: scalar -> vector, component l gets sum_k D_k^T (A_lk s)
    let a11s = &geom.a11 * &neg_s;
    let a12s = &geom.a12 * &neg_s;
    let a21s = &geom.a21 * &neg_s;
    let a22s = &geom.a22 * &neg_s;
    let mut w1 = grid.d1(&a11s);
    w1.mapv_inplace(|v| -v);
    w1 += &precond.d2_transpose(grid, &a12s);
    let mut w2 = grid.d1(&a21s);
    w2.mapv_inplace(|v| -v);
    w2 += &precond.d2_transpose(grid, &a22s);
    // Corr^T (diagonal) then R^T (diagonal)
    for i in 0..grid.n1 {
        w2[(0, i)] = 0.0;
        w2[(grid.n2 - 1, i)] = 0.0;
    }
    for j in 0..grid.n2 {
        let inv_rho = 1.0 / rho[j];
        for i in 0..grid.n1 {
            w1[(j, i)] *= inv_rho;
            w2[(j, i)] *= inv_rho;
        }
    }
    // grad_A^T: vector -> scalar, sum_lk D_k^T (A_lk w_l)
    let a11w = &geom.a11 * &w1;
    let a12w = &geom.a12 * &w1;
    let a21w = &geom.a21 * &w2;
    let a22w = &geom.a22 * &w2;
    let mut out = grid.d1(&a11w);
    out += &grid.d1(&a21w);
    out.mapv_inplace(|v| -v);
    out += &precond.d2_transpose(grid, &a12w);
    out += &precond.d2_transpose(grid, &a22w);
    project_subspace(grid, &out)
}

fn dot(a: &ScalarField, b: &ScalarField) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn norm(a: &ScalarField) -> f64 {
    dot(a, a).sqrt()
}

/// Solve `-div_A((grad_A q)/rho) = rhs` with prescribed wall flux, `q` of
/// zero mean. The right-hand side is projected onto the discretely
/// compatible subspace; the projection size is reported, and exceeding
/// `ctol` after projection is an error.
pub fn neumann_solve(
    grid: &Grid2D,
    geom: &GeometryA,
    p: &Profile,
    rhs: &ScalarField,
    bc: Option<&WallFlux>,
    precond: &NeumannPrecond,
    opts: &EllipticOptions,
) -> Result<EllipticSolution> {
    let rho: Vec<f64> = (0..grid.n2).map(|j| p.rho(grid.y2(j))).collect();

    // lift an inhomogeneous wall flux into the right-hand side via a linear
    // blend Y_bc = (0, (1 - y2/h) bottom + (y2/h) top)
    let mut b_raw = rhs.clone();
    if let Some(flux) = bc {
        if flux.bottom.len() != grid.n1 || flux.top.len() != grid.n1 {
            return Err(MrtError::invalid("wall flux data length mismatch"));
        }
        let mut y_bc = VectorField::zeros(grid);
        for j in 0..grid.n2 {
            let s = grid.y2(j) / grid.h;
            for i in 0..grid.n1 {
                y_bc.x2[(j, i)] = (1.0 - s) * flux.bottom[i] + s * flux.top[i];
            }
        }
        let lift = div_a(grid, geom, &y_bc);
        for j in 0..grid.n2 {
            for i in 0..grid.n1 {
                b_raw[(j, i)] += lift[(j, i)];
            }
        }
    }

    // physical compatibility of the lifted problem: int rhs J dy = 0
    let mut compat = 0.0;
    for j in 0..grid.n2 {
        let w = grid.weight(j);
        for i in 0..grid.n1 {
            compat += w * b_raw[(j, i)] * geom.det_j[(j, i)];
        }
    }

    // project onto the solver subspace and remove the discrete left-null
    // components; the removed amount is the discrete incompatibility
    let mut b = project_subspace(grid, &b_raw);
    for z in &precond.z_left {
        let zb = dot(&b, z);
        b.scaled_add(-zb, z);
    }
    for z in &precond.z_left {
        if dot(&b, z).abs() > opts.ctol * (1.0 + norm(&b)) {
            return Err(MrtError::solver(
                "right-hand side projection failed to reach the compatible subspace",
            ));
        }
    }

    let bnorm = norm(&b);
    if bnorm == 0.0 {
        return Ok(EllipticSolution {
            q: grid.zeros(),
            residual: 0.0,
            compat_deviation: compat.abs(),
            iterations: 0,
        });
    }

    // preconditioned BiCGstab
    let tol = opts.rtol * bnorm;
    let mut x = grid.zeros();
    let mut r = b.clone();
    let r_hat = r.clone();
    let mut rho_k = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut v = grid.zeros();
    let mut pvec = grid.zeros();
    let mut iterations = 0;

    for it in 1..=opts.max_iters {
        iterations = it;
        let rho_new = dot(&r_hat, &r);
        if rho_new.abs() < 1e-300 {
            break; // breakdown; residual check below decides
        }
        let beta = (rho_new / rho_k) * (alpha / omega);
        rho_k = rho_new;
        // p = r + beta (p - omega v)
        let mut pnew = r.clone();
        pnew.scaled_add(beta, &pvec);
        pnew.scaled_add(-beta * omega, &v);
        pvec = pnew;

        let p_hat = precond.apply(grid, &pvec);
        v = apply_operator(grid, geom, &rho, &p_hat);
        let denom = dot(&r_hat, &v);
        if denom.abs() < 1e-300 {
            break;
        }
        alpha = rho_k / denom;

        let mut s = r.clone();
        s.scaled_add(-alpha, &v);
        if norm(&s) <= tol {
            x.scaled_add(alpha, &p_hat);
            break;
        }
        let s_hat = precond.apply(grid, &s);
        let t = apply_operator(grid, geom, &rho, &s_hat);
        let tt = dot(&t, &t);
        if tt < 1e-300 {
            break;
        }
        omega = dot(&t, &s) / tt;
        x.scaled_add(alpha, &p_hat);
        x.scaled_add(omega, &s_hat);
        r = s;
        r.scaled_add(-omega, &t);
        if norm(&r) <= tol {
            break;
        }
    }

    // true residual of the discrete system, not the recursive one
    let lx = apply_operator(grid, geom, &rho, &x);
    let mut rtrue = b.clone();
    rtrue.scaled_add(-1.0, &lx);
    let res = norm(&rtrue) / bnorm;
    if res > opts.rtol * 10.0 {
        return Err(MrtError::solver(format!(
            "pressure solve stalled: relative residual {res:.3e} after {iterations} iterations"
        )));
    }

    let mean = grid.mean(&x);
    x.mapv_inplace(|q| q - mean);
    Ok(EllipticSolution {
        q: x,
        residual: res,
        compat_deviation: compat.abs(),
        iterations,
    })
}

/// Make a velocity field discretely divergence free in the `A`-metric:
/// solve `div_A((grad_A p)/rho) = div_A u` and subtract the wall-corrected
/// flux, which preserves `u . n = 0` exactly. Returns the projected field
/// and the norm of the remaining `div_A` residual.
pub fn project_divergence_free(
    grid: &Grid2D,
    geom: &GeometryA,
    p: &Profile,
    u: &VectorField,
    precond: &NeumannPrecond,
    opts: &EllipticOptions,
) -> Result<(VectorField, f64)> {
    let div_u = div_a(grid, geom, u);
    let mut rhs = div_u.clone();
    rhs.mapv_inplace(|v| -v);
    let sol = neumann_solve(grid, geom, p, &rhs, None, precond, opts)?;
    let rho: Vec<f64> = (0..grid.n2).map(|j| p.rho(grid.y2(j))).collect();
    let y = corrected_flux(grid, geom, &rho, &sol.q);
    let projected = VectorField {
        x1: &u.x1 - &y.x1,
        x2: &u.x2 - &y.x2,
    };
    let resid = grid.norm_l2(&div_a(grid, geom, &projected));
    Ok((projected, resid))
}
