//! Per-frequency variational problem for the damped MHD Rayleigh-Taylor
//! spectrum: quadratic forms, growth rates, the unstable frequency set, the
//! maximal rate and the critical field strength.
//!
//! For an integer frequency `xi != 0` and a vertical profile `psi` in
//! `H_0^1(0,h)` the forms are
//!
//! ```text
//!   Etilde(psi, xi) = int_0^h ( g rho' psi^2 - lambda m^2 (xi^2 psi^2 + psi'^2) ) dy
//!   J(psi, xi)      = int_0^h rho (xi^2 psi^2 + psi'^2) dy
//! ```
//!
//! and the per-mode rate solves `gamma^2 + a gamma = alpha0(xi)` where
//! `alpha0 = sup { xi^2 Etilde : J = 1 }` is the largest eigenvalue of the
//! discrete pencil below.

pub mod eigen;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MrtError, Result};
use crate::profile::{PhysParams, Profile};

/// 1D discretization backend for the vertical direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ModeBackend {
    /// Second-order centered finite differences on a uniform interior grid.
    #[default]
    UniformFd,
    /// Chebyshev-Gauss-Lobatto collocation (spectral accuracy).
    Chebyshev,
}

/// Collocation grid for the Dirichlet problem on `(0, h)`: interior nodes
/// only, endpoints excluded (`psi(0) = psi(h) = 0`).
#[derive(Debug, Clone)]
pub struct ModeGrid {
    pub h: f64,
    pub n: usize,
    pub backend: ModeBackend,
    /// interior collocation nodes, strictly increasing
    pub nodes: Vec<f64>,
    /// quadrature weights at the interior nodes
    pub weights: Vec<f64>,
    /// Chebyshev only: full node set (with endpoints), weights and the
    /// derivative matrix on the full node set
    cheb: Option<ChebData>,
}

#[derive(Debug, Clone)]
struct ChebData {
    nodes_full: Vec<f64>,
    weights_full: Vec<f64>,
    deriv_full: DMatrix<f64>,
}

impl ModeGrid {
    pub fn uniform(h: f64, n: usize) -> Result<Self> {
        if n < 4 {
            return Err(MrtError::invalid("mode grid needs at least 4 interior nodes"));
        }
        if !(h > 0.0) {
            return Err(MrtError::invalid("mode grid height must be positive"));
        }
        let d = h / (n + 1) as f64;
        let nodes = (1..=n).map(|i| i as f64 * d).collect();
        let weights = vec![d; n];
        Ok(ModeGrid {
            h,
            n,
            backend: ModeBackend::UniformFd,
            nodes,
            weights,
            cheb: None,
        })
    }

    /// Chebyshev-Gauss-Lobatto grid with `n` interior nodes (`n+2` total).
    pub fn chebyshev(h: f64, n: usize) -> Result<Self> {
        if n < 4 {
            return Err(MrtError::invalid("mode grid needs at least 4 interior nodes"));
        }
        if !(h > 0.0) {
            return Err(MrtError::invalid("mode grid height must be positive"));
        }
        let nn = n + 1; // polynomial degree; nn+1 nodes total
        let theta: Vec<f64> = (0..=nn).map(|j| std::f64::consts::PI * j as f64 / nn as f64).collect();
        // x decreasing from 1 to -1; y = h(1-x)/2 increasing from 0 to h
        let x: Vec<f64> = theta.iter().map(|t| t.cos()).collect();
        let nodes_full: Vec<f64> = x.iter().map(|xi| h * (1.0 - xi) / 2.0).collect();

        // Clenshaw-Curtis weights on [-1,1], scaled by h/2
        let mut w = vec![0.0; nn + 1];
        if nn % 2 == 0 {
            w[0] = 1.0 / (nn * nn - 1) as f64;
            w[nn] = w[0];
            for (i, wi) in w.iter_mut().enumerate().take(nn).skip(1) {
                let mut v = 1.0;
                for k in 1..nn / 2 {
                    v -= 2.0 * (2.0 * k as f64 * theta[i]).cos() / (4 * k * k - 1) as f64;
                }
                v -= (nn as f64 * theta[i]).cos() / (nn * nn - 1) as f64;
                *wi = 2.0 * v / nn as f64;
            }
        } else {
            w[0] = 1.0 / (nn * nn) as f64;
            w[nn] = w[0];
            for (i, wi) in w.iter_mut().enumerate().take(nn).skip(1) {
                let mut v = 1.0;
                for k in 1..=(nn - 1) / 2 {
                    v -= 2.0 * (2.0 * k as f64 * theta[i]).cos() / (4 * k * k - 1) as f64;
                }
                *wi = 2.0 * v / nn as f64;
            }
        }
        let weights_full: Vec<f64> = w.iter().map(|wi| wi * h / 2.0).collect();

        // Chebyshev differentiation matrix on x, then d/dy = -(2/h) d/dx
        let c = |i: usize| -> f64 {
            let ci = if i == 0 || i == nn { 2.0 } else { 1.0 };
            ci * if i % 2 == 0 { 1.0 } else { -1.0 }
        };
        let mut d = DMatrix::zeros(nn + 1, nn + 1);
        for i in 0..=nn {
            let mut row_sum = 0.0;
            for j in 0..=nn {
                if i != j {
                    let v = c(i) / c(j) / (x[i] - x[j]);
                    d[(i, j)] = v;
                    row_sum += v;
                }
            }
            d[(i, i)] = -row_sum;
        }
        let deriv_full = d * (-2.0 / h);

        let nodes = nodes_full[1..=n].to_vec();
        let weights = weights_full[1..=n].to_vec();
        Ok(ModeGrid {
            h,
            n,
            backend: ModeBackend::Chebyshev,
            nodes,
            weights,
            cheb: Some(ChebData {
                nodes_full,
                weights_full,
                deriv_full,
            }),
        })
    }

    /// Mass matrix of `int c(y) psi^2 dy` on the interior dofs.
    fn mass<F: Fn(f64) -> f64>(&self, c: F) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            m[(i, i)] = self.weights[i] * c(self.nodes[i]);
        }
        m
    }

    /// Stiffness matrix of `int c(y) psi'^2 dy` on the interior dofs.
    fn stiffness<F: Fn(f64) -> f64>(&self, c: F) -> DMatrix<f64> {
        match self.backend {
            ModeBackend::UniformFd => {
                let d = self.h / (self.n + 1) as f64;
                let mut k = DMatrix::zeros(self.n, self.n);
                // midpoint coefficient samples; psi_0 = psi_{n+1} = 0
                let cmid = |i: usize| c((i as f64 + 0.5) * d); // midpoint between node i and i+1 (0-based full index)
                for i in 0..self.n {
                    let cl = cmid(i); // between y_{i} and y_{i+1} in full numbering
                    let cr = cmid(i + 1);
                    k[(i, i)] = (cl + cr) / d;
                    if i + 1 < self.n {
                        k[(i, i + 1)] = -cr / d;
                        k[(i + 1, i)] = -cr / d;
                    }
                }
                k
            }
            ModeBackend::Chebyshev => {
                let cd = self.cheb.as_ref().expect("chebyshev data");
                let ntot = cd.nodes_full.len();
                // derivative of the interior-supported basis at all nodes
                let d_int = cd.deriv_full.columns(1, self.n).into_owned();
                let mut wdiag = DVector::zeros(ntot);
                for j in 0..ntot {
                    wdiag[j] = cd.weights_full[j] * c(cd.nodes_full[j]);
                }
                let mut k = DMatrix::zeros(self.n, self.n);
                for a in 0..self.n {
                    for b in a..self.n {
                        let mut s = 0.0;
                        for j in 0..ntot {
                            s += wdiag[j] * d_int[(j, a)] * d_int[(j, b)];
                        }
                        k[(a, b)] = s;
                        k[(b, a)] = s;
                    }
                }
                k
            }
        }
    }
}

/// Discrete quadratic forms of a single frequency: `psi^T E psi` approximates
/// `xi^2 Etilde(psi, xi)` and `psi^T J psi` approximates `J(psi, xi)`.
#[derive(Debug, Clone)]
pub struct QuadraticForms {
    pub xi: i64,
    pub e_mat: DMatrix<f64>,
    pub j_mat: DMatrix<f64>,
}

/// Assemble the forms for one nonzero integer frequency.
pub fn assemble_forms(
    p: &Profile,
    pp: &PhysParams,
    xi: i64,
    grid: &ModeGrid,
) -> Result<QuadraticForms> {
    if xi == 0 {
        return Err(MrtError::invalid("frequency xi must be nonzero"));
    }
    if (grid.h - p.h).abs() > 1e-12 * p.h {
        return Err(MrtError::invalid("mode grid height does not match profile"));
    }
    let xi2 = (xi * xi) as f64;
    let g = pp.g;
    let lm2 = pp.lambda * pp.m * pp.m;

    let m_rho_prime = grid.mass(|y| p.rho_prime(y));
    let m_one = grid.mass(|_| 1.0);
    let k_one = grid.stiffness(|_| 1.0);
    let m_rho = grid.mass(|y| p.rho(y));
    let k_rho = grid.stiffness(|y| p.rho(y));

    let e_mat = (m_rho_prime * g - (&m_one * xi2 + &k_one) * lm2) * xi2;
    let j_mat = m_rho * xi2 + k_rho;
    Ok(QuadraticForms { xi, e_mat, j_mat })
}

/// `alpha(0)`: the largest eigenvalue of `(E, J)` together with the
/// `J`-normalized maximizer.
pub fn alpha0(forms: &QuadraticForms) -> Result<(f64, DVector<f64>)> {
    eigen::largest_generalized_eig(&forms.e_mat, &forms.j_mat)
}

/// `alpha(s)` for the damped variational problem: the largest eigenvalue of
/// `(E - a s J, J)`. Satisfies `alpha(s) = alpha(0) - a s` exactly.
pub fn alpha_s(forms: &QuadraticForms, a: f64, s: f64) -> Result<(f64, DVector<f64>)> {
    let shifted = &forms.e_mat - &forms.j_mat * (a * s);
    eigen::largest_generalized_eig(&shifted, &forms.j_mat)
}

/// Residual of the discrete Euler-Lagrange equation
/// `(alpha + a s) J psi = E psi`, relative to `||psi||`.
pub fn bvp_residual(forms: &QuadraticForms, alpha_plus_as: f64, psi: &DVector<f64>) -> f64 {
    let r = &forms.e_mat * psi - (&forms.j_mat * psi) * alpha_plus_as;
    let op_scale = forms.e_mat.amax().max(forms.j_mat.amax() * (1.0 + alpha_plus_as.abs()));
    r.norm() / (psi.norm() * op_scale.max(1.0))
}

/// Growth rate from the closed-form quadratic `gamma^2 + a gamma = alpha0`:
/// `gamma = (-a + sqrt(a^2 + 4 alpha0)) / 2` when unstable, 0 otherwise.
pub fn growth_rate(alpha0: f64, a: f64) -> f64 {
    if alpha0 > 0.0 {
        (-a + (a * a + 4.0 * alpha0).sqrt()) / 2.0
    } else {
        0.0
    }
}

/// Cross-check of the closed-form rate by iterating the fixed point
/// `gamma <- sqrt(alpha(gamma))`. Returns the converged rate together with
/// the value of `sup Xi(.,xi,gamma)` at the fixed point, which equals
/// `gamma^2` (the eigenvalue factor of the boundary-value problem is
/// `gamma^2 + a gamma`, not `gamma`; both numbers are exposed so the two
/// readings can be compared by the caller).
#[derive(Debug, Clone, Copy)]
pub struct FixedPointRate {
    pub gamma: f64,
    pub sup_xi_at_gamma: f64,
    pub iterations: usize,
}

pub fn growth_rate_fixed_point(forms: &QuadraticForms, a: f64) -> Result<FixedPointRate> {
    let (a0, _) = alpha0(forms)?;
    if a0 <= 0.0 {
        return Ok(FixedPointRate {
            gamma: 0.0,
            sup_xi_at_gamma: a0,
            iterations: 0,
        });
    }
    let mut gamma = a0.sqrt();
    for it in 1..=200 {
        // alpha(s) = alpha0 - a s holds exactly; evaluate through the solver
        // only at the end, iterate on the affine identity for speed
        let next = (a0 - a * gamma).max(0.0).sqrt();
        if (next - gamma).abs() <= 1e-14 * (1.0 + gamma) {
            let (sup_xi, _) = alpha_s(forms, a, next)?;
            return Ok(FixedPointRate {
                gamma: next,
                sup_xi_at_gamma: sup_xi,
                iterations: it,
            });
        }
        gamma = 0.5 * (gamma + next);
    }
    Err(MrtError::solver("fixed-point rate iteration did not converge"))
}

/// Result of the variational solve at one frequency.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeResult {
    pub xi: i64,
    pub alpha0: f64,
    pub gamma: f64,
    pub unstable: bool,
    /// discrete maximizer, `J`-normalized
    pub psi: Vec<f64>,
}

/// Full sweep over `xi = 1..=xi_max` plus derived quantities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthSpectrum {
    pub modes: Vec<ModeResult>,
    /// unstable frequency set, mirrored over both signs
    pub f_set: Vec<i64>,
    pub lambda_max: f64,
    pub xi_star: i64,
    pub m_c: f64,
    /// true when the rate is decreasing (or stable) at the truncation tail,
    /// i.e. `xi_max` did not visibly truncate the supremum
    pub truncation_sufficient: bool,
    pub grid_n: usize,
    pub backend: ModeBackend,
}

/// Critical field strength: `m_C^2 = (g / lambda) * mu_max` where `mu_max`
/// is the largest eigenvalue of `rho' psi = mu (-psi'' + psi)` with Dirichlet
/// conditions (the supremum over frequencies is attained at `|xi| = 1`).
/// Profiles without the RT condition get `m_C = 0` by convention.
pub fn critical_field(p: &Profile, g: f64, lambda: f64, grid: &ModeGrid) -> Result<f64> {
    if !p.rt_condition() {
        return Ok(0.0);
    }
    let e = grid.mass(|y| p.rho_prime(y));
    let j = grid.stiffness(|_| 1.0) + grid.mass(|_| 1.0);
    let (mu_max, _) = eigen::largest_generalized_eig(&e, &j)?;
    if mu_max <= 0.0 {
        return Ok(0.0);
    }
    Ok((g * mu_max / lambda).sqrt())
}

/// Sweep the spectrum. Per-frequency solves are independent and read only
/// immutable inputs, so they run in parallel; results merge in `xi` order.
pub fn compute_spectrum(
    p: &Profile,
    pp: &PhysParams,
    xi_max: i64,
    grid: &ModeGrid,
) -> Result<GrowthSpectrum> {
    if xi_max < 1 {
        return Err(MrtError::invalid("xi_max must be >= 1"));
    }
    let modes: Result<Vec<ModeResult>> = (1..=xi_max)
        .into_par_iter()
        .map(|xi| {
            let forms = assemble_forms(p, pp, xi, grid)?;
            let (a0, psi) = alpha0(&forms)?;
            let gamma = growth_rate(a0, pp.a);
            Ok(ModeResult {
                xi,
                alpha0: a0,
                gamma,
                unstable: a0 > 0.0,
                psi: psi.iter().copied().collect(),
            })
        })
        .collect();
    let modes = modes?;

    let mut lambda_max = 0.0;
    let mut xi_star = 0;
    for m in &modes {
        if m.gamma > lambda_max {
            lambda_max = m.gamma;
            xi_star = m.xi;
        }
    }
    let mut f_set: Vec<i64> = Vec::new();
    for m in &modes {
        if m.unstable {
            f_set.push(-m.xi);
            f_set.push(m.xi);
        }
    }
    f_set.sort_unstable();

    let truncation_sufficient = if modes.len() >= 2 {
        let last = &modes[modes.len() - 1];
        let prev = &modes[modes.len() - 2];
        !last.unstable || last.gamma < prev.gamma
    } else {
        !modes[0].unstable
    };

    let m_c = critical_field(p, pp.g, pp.lambda, grid)?;
    Ok(GrowthSpectrum {
        modes,
        f_set,
        lambda_max,
        xi_star,
        m_c,
        truncation_sufficient,
        grid_n: grid.n,
        backend: grid.backend,
    })
}

/// Worst-case check of the spectral energy bound
/// `E(v) <= (Lambda^2 + a Lambda) ||sqrt(rho) v||_0^2` on random
/// divergence-free Fourier superpositions (`xi phi + psi' = 0` enforced by
/// working in the `psi` variables). Returns the maximal observed ratio; for
/// a fully stable spectrum (`Lambda = 0`) the returned value is the maximal
/// `E(v)/||sqrt(rho) v||^2`, which must be `<= 0`.
pub fn verify_energy_bound(
    spectrum: &GrowthSpectrum,
    p: &Profile,
    pp: &PhysParams,
    grid: &ModeGrid,
    trials: usize,
    rng: &mut impl rand::Rng,
) -> Result<f64> {
    if trials == 0 {
        return Err(MrtError::invalid("need at least one trial"));
    }
    let xi_max = spectrum.modes.len() as i64;
    let mut forms_cache: Vec<QuadraticForms> = Vec::new();
    for xi in 1..=xi_max {
        forms_cache.push(assemble_forms(p, pp, xi, grid)?);
    }
    let bound = spectrum.lambda_max * spectrum.lambda_max + pp.a * spectrum.lambda_max;

    let mut worst = f64::NEG_INFINITY;
    let mut done = 0;
    let mut attempts = 0;
    while done < trials {
        attempts += 1;
        if attempts > 20 * trials {
            return Err(MrtError::solver("too many degenerate trial fields"));
        }
        // superposition over a random subset of frequencies, each with a
        // random low-order sine series for psi_xi
        let mut e_sum = 0.0;
        let mut j_sum = 0.0;
        let n_freq = rng.gen_range(1..=4usize);
        for _ in 0..n_freq {
            let xi = rng.gen_range(1..=xi_max);
            let forms = &forms_cache[(xi - 1) as usize];
            let mut psi = DVector::zeros(grid.n);
            for k in 1..=6 {
                let c: f64 = rng.gen_range(-1.0..1.0);
                for (i, y) in grid.nodes.iter().enumerate() {
                    psi[i] += c * (k as f64 * std::f64::consts::PI * y / grid.h).sin();
                }
            }
            let xi2 = (xi * xi) as f64;
            e_sum += psi.dot(&(&forms.e_mat * &psi)) / xi2;
            j_sum += psi.dot(&(&forms.j_mat * &psi)) / xi2;
        }
        if j_sum <= 1e-14 {
            continue; // degenerate ||sqrt(rho) v|| ~ 0, resample
        }
        let ratio = if bound > 0.0 {
            e_sum / (bound * j_sum)
        } else {
            e_sum / j_sum
        };
        worst = worst.max(ratio);
        done += 1;
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    fn linear_profile() -> Profile {
        Profile::new(crate::profile::ProfileKind::Linear { rho0: 1.0, r: 1.0 }, 1.0).unwrap()
    }

    #[test]
    fn xi_zero_rejected() {
        let p = linear_profile();
        let pp = PhysParams::new(1.0, 0.0, 1.0, 0.0).unwrap();
        let grid = ModeGrid::uniform(1.0, 16).unwrap();
        assert!(assemble_forms(&p, &pp, 0, &grid).is_err());
    }

    #[test]
    fn constant_profile_m0_gives_zero_e_matrix() {
        let p = Profile::new(crate::profile::ProfileKind::Constant { rho0: 1.0 }, 1.0).unwrap();
        let pp = PhysParams::new(1.0, 0.0, 1.0, 0.0).unwrap();
        let grid = ModeGrid::uniform(1.0, 16).unwrap();
        let forms = assemble_forms(&p, &pp, 3, &grid).unwrap();
        assert_eq!(forms.e_mat.amax(), 0.0);
    }

    #[test]
    fn e_matrix_ignores_lambda_when_m_zero() {
        let p = linear_profile();
        let grid = ModeGrid::uniform(1.0, 24).unwrap();
        let f1 = assemble_forms(&p, &PhysParams::new(1.0, 0.0, 1.0, 0.0).unwrap(), 2, &grid).unwrap();
        let f2 = assemble_forms(&p, &PhysParams::new(1.0, 0.0, 7.5, 0.0).unwrap(), 2, &grid).unwrap();
        assert_eq!((f1.e_mat - f2.e_mat).amax(), 0.0);
    }

    #[test]
    fn growth_rate_examples() {
        assert_eq!(growth_rate(1.0, 0.0), 1.0);
        assert_eq!(growth_rate(0.0, 5.0), 0.0);
        assert_relative_eq!(growth_rate(2.0, 1.0), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn alpha_affinity_exact() {
        let p = linear_profile();
        let pp = PhysParams::new(1.0, 0.7, 1.0, 0.1).unwrap();
        let grid = ModeGrid::uniform(1.0, 48).unwrap();
        let forms = assemble_forms(&p, &pp, 1, &grid).unwrap();
        let (a0, _) = alpha0(&forms).unwrap();
        for s in [0.0, 0.5, 1.0, 2.0] {
            let (as_, _) = alpha_s(&forms, pp.a, s).unwrap();
            assert!((as_ - (a0 - pp.a * s)).abs() <= 1e-12 * (1.0 + a0.abs()));
        }
    }

    #[test]
    fn boussinesq_alpha0_approximation() {
        // small slope r: alpha0 ~= g r xi^2 / (rho0 (xi^2 + pi^2/h^2))
        let r = 1e-3;
        let p = Profile::new(crate::profile::ProfileKind::Linear { rho0: 1.0, r }, 1.0).unwrap();
        let pp = PhysParams::new(1.0, 0.0, 1.0, 0.0).unwrap();
        let grid = ModeGrid::uniform(1.0, 256).unwrap();
        for xi in [1i64, 2, 4] {
            let forms = assemble_forms(&p, &pp, xi, &grid).unwrap();
            let (a0, _) = alpha0(&forms).unwrap();
            let xi2 = (xi * xi) as f64;
            let pred = r * xi2 / (xi2 + std::f64::consts::PI.powi(2));
            assert_relative_eq!(a0, pred, max_relative = 2e-3);
        }
    }

    #[test]
    fn maximizer_solves_discrete_bvp() {
        let p = linear_profile();
        let pp = PhysParams::new(1.0, 0.4, 1.0, 0.1).unwrap();
        let grid = ModeGrid::uniform(1.0, 64).unwrap();
        let forms = assemble_forms(&p, &pp, 2, &grid).unwrap();
        for s in [0.0, 0.3] {
            let (als, psi) = alpha_s(&forms, pp.a, s).unwrap();
            let r = bvp_residual(&forms, als + pp.a * s, &psi);
            assert!(r <= 1e-8, "bvp residual {r}");
        }
    }

    #[test]
    fn critical_field_linear_profile_analytic() {
        let p = linear_profile();
        let grid = ModeGrid::uniform(1.0, 256).unwrap();
        let mc = critical_field(&p, 1.0, 1.0, &grid).unwrap();
        let exact = (1.0 / (1.0 + std::f64::consts::PI.powi(2))).sqrt();
        assert_relative_eq!(mc, exact, max_relative = 1e-4);
    }

    #[test]
    fn critical_field_chebyshev_backend() {
        let p = linear_profile();
        let grid = ModeGrid::chebyshev(1.0, 48).unwrap();
        let mc = critical_field(&p, 1.0, 1.0, &grid).unwrap();
        let exact = (1.0 / (1.0 + std::f64::consts::PI.powi(2))).sqrt();
        assert_relative_eq!(mc, exact, max_relative = 1e-10);
    }

    #[test]
    fn critical_field_constant_profile_is_zero() {
        let p = Profile::new(crate::profile::ProfileKind::Constant { rho0: 2.0 }, 1.0).unwrap();
        let grid = ModeGrid::uniform(1.0, 64).unwrap();
        assert_eq!(critical_field(&p, 1.0, 1.0, &grid).unwrap(), 0.0);
    }

    #[test]
    fn constant_profile_spectrum_stable() {
        let p = Profile::new(crate::profile::ProfileKind::Constant { rho0: 1.0 }, 1.0).unwrap();
        let pp = PhysParams::new(1.0, 0.0, 1.0, 0.0).unwrap();
        let grid = ModeGrid::uniform(1.0, 32).unwrap();
        let s = compute_spectrum(&p, &pp, 8, &grid).unwrap();
        assert!(s.f_set.is_empty());
        assert_eq!(s.lambda_max, 0.0);
    }

    #[test]
    fn mirror_symmetry() {
        let p = linear_profile();
        let pp = PhysParams::new(1.0, 0.2, 1.0, 0.1).unwrap();
        let grid = ModeGrid::uniform(1.0, 32).unwrap();
        let fp = assemble_forms(&p, &pp, 3, &grid).unwrap();
        let fm = assemble_forms(&p, &pp, -3, &grid).unwrap();
        assert_eq!((fp.e_mat - fm.e_mat).amax(), 0.0);
        assert_eq!((fp.j_mat - fm.j_mat).amax(), 0.0);
    }

    #[test]
    fn spectrum_above_critical_is_empty() {
        let p = linear_profile();
        let grid = ModeGrid::uniform(1.0, 128).unwrap();
        let mc = critical_field(&p, 1.0, 1.0, &grid).unwrap();
        let pp = PhysParams::new(1.0, 0.0, 1.0, 1.01 * mc).unwrap();
        let s = compute_spectrum(&p, &pp, 16, &grid).unwrap();
        assert!(s.f_set.is_empty(), "F should be empty above m_C");
        let pp = PhysParams::new(1.0, 0.0, 1.0, 0.99 * mc).unwrap();
        let s = compute_spectrum(&p, &pp, 16, &grid).unwrap();
        assert!(!s.f_set.is_empty(), "F should be nonempty below m_C");
        assert!(s.truncation_sufficient);
    }

    #[test]
    fn m0_tail_keeps_rising() {
        // without a field the rate increases with frequency; the truncation
        // flag must report the rising tail
        let p = linear_profile();
        let pp = PhysParams::new(1.0, 0.0, 1.0, 0.0).unwrap();
        let grid = ModeGrid::uniform(1.0, 64).unwrap();
        let s = compute_spectrum(&p, &pp, 8, &grid).unwrap();
        assert!(s.lambda_max > 0.0);
        assert_eq!(s.xi_star, 8);
        assert!(!s.truncation_sufficient);
    }

    #[test]
    fn fixed_point_rate_matches_closed_form() {
        let p = linear_profile();
        let pp = PhysParams::new(1.0, 0.8, 1.0, 0.1).unwrap();
        let grid = ModeGrid::uniform(1.0, 64).unwrap();
        let forms = assemble_forms(&p, &pp, 2, &grid).unwrap();
        let (a0, _) = alpha0(&forms).unwrap();
        let gamma = growth_rate(a0, pp.a);
        let fp = growth_rate_fixed_point(&forms, pp.a).unwrap();
        assert_relative_eq!(fp.gamma, gamma, epsilon = 1e-12);
        // the sup of Xi at the fixed point is gamma^2, not gamma
        assert_relative_eq!(fp.sup_xi_at_gamma, gamma * gamma, epsilon = 1e-10);
    }

    #[test]
    fn energy_bound_random_trials() {
        let p = linear_profile();
        let pp = PhysParams::new(1.0, 0.3, 1.0, 0.1).unwrap();
        let grid = ModeGrid::uniform(1.0, 64).unwrap();
        let s = compute_spectrum(&p, &pp, 8, &grid).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let worst = verify_energy_bound(&s, &p, &pp, &grid, 50, &mut rng).unwrap();
        assert!(worst <= 1.0 + 1e-12, "worst ratio {worst}");
    }

    #[test]
    fn monotonicity_in_m_and_a() {
        let p = linear_profile();
        let grid = ModeGrid::uniform(1.0, 48).unwrap();
        let mc = critical_field(&p, 1.0, 1.0, &grid).unwrap();
        let ms: Vec<f64> = (0..5).map(|i| 0.2 * i as f64 * mc).collect();
        let avals: Vec<f64> = (0..5).map(|i| 0.25 * i as f64).collect();
        let mut prev_m: Option<f64> = None;
        for &m in &ms {
            let mut prev_a: Option<f64> = None;
            let mut gamma_at_a0 = 0.0;
            for &a in &avals {
                let pp = PhysParams::new(1.0, a, 1.0, m).unwrap();
                let forms = assemble_forms(&p, &pp, 1, &grid).unwrap();
                let (a0, _) = alpha0(&forms).unwrap();
                let g = growth_rate(a0, a);
                if let Some(pa) = prev_a {
                    assert!(g <= pa + 1e-12, "gamma must not increase with a");
                }
                prev_a = Some(g);
                if a == 0.0 {
                    gamma_at_a0 = g;
                }
            }
            if let Some(pm) = prev_m {
                assert!(gamma_at_a0 <= pm + 1e-12, "gamma must not increase with |m|");
            }
            prev_m = Some(gamma_at_a0);
        }
    }
}
