//! Equilibrium density profiles on the slab `[0, h]` and the physical
//! parameters of the damped MHD problem.
//!
//! A profile is the vertical density stratification of the rest state,
//! together with its first two derivatives as analytic closures (the
//! spectral modules need smooth derivatives, not interpolated tables).

use serde::{Deserialize, Serialize};

use crate::error::{MrtError, Result};

/// Number of uniform audit samples used for positivity / RT checks.
pub const AUDIT_SAMPLES: usize = 4096;

/// Supported profile families. All keep `inf rho > 0` for valid parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProfileKind {
    /// `rho(y) = rho0`
    Constant { rho0: f64 },
    /// `rho(y) = rho0 + r*y`
    Linear { rho0: f64, r: f64 },
    /// `rho(y) = rho0 * exp(r*y)`
    Exponential { rho0: f64, r: f64 },
    /// `rho(y) = rho0 + delta * tanh((y - center)/width)`
    TanhLayer {
        rho0: f64,
        delta: f64,
        center: f64,
        width: f64,
    },
}

/// Equilibrium density profile with analytic derivative evaluators.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Profile {
    pub h: f64,
    pub kind: ProfileKind,
}

impl Profile {
    /// Build a profile and audit it: density must stay strictly positive and
    /// finite (together with its derivatives) on a dense grid over `[0, h]`.
    pub fn new(kind: ProfileKind, h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(MrtError::invalid(format!("domain height h={h} must be positive")));
        }
        if let ProfileKind::TanhLayer { width, .. } = kind {
            if !(width > 0.0) {
                return Err(MrtError::invalid("tanh-layer width must be positive"));
            }
        }
        let p = Profile { h, kind };
        for i in 0..=AUDIT_SAMPLES {
            let y = h * i as f64 / AUDIT_SAMPLES as f64;
            let (r, r1, r2) = (p.rho(y), p.rho_prime(y), p.rho_second(y));
            if !(r.is_finite() && r1.is_finite() && r2.is_finite()) {
                return Err(MrtError::invalid(format!(
                    "profile evaluates non-finite at y2={y}"
                )));
            }
            if r <= 0.0 {
                return Err(MrtError::invalid(format!(
                    "density must stay positive: rho({y}) = {r}"
                )));
            }
        }
        Ok(p)
    }

    /// Density `rho(y2)`.
    pub fn rho(&self, y: f64) -> f64 {
        match self.kind {
            ProfileKind::Constant { rho0 } => rho0,
            ProfileKind::Linear { rho0, r } => rho0 + r * y,
            ProfileKind::Exponential { rho0, r } => rho0 * (r * y).exp(),
            ProfileKind::TanhLayer {
                rho0,
                delta,
                center,
                width,
            } => rho0 + delta * ((y - center) / width).tanh(),
        }
    }

    /// First derivative `rho'(y2)`.
    pub fn rho_prime(&self, y: f64) -> f64 {
        match self.kind {
            ProfileKind::Constant { .. } => 0.0,
            ProfileKind::Linear { r, .. } => r,
            ProfileKind::Exponential { rho0, r } => rho0 * r * (r * y).exp(),
            ProfileKind::TanhLayer {
                delta,
                center,
                width,
                ..
            } => {
                let t = ((y - center) / width).tanh();
                delta * (1.0 - t * t) / width
            }
        }
    }

    /// Second derivative `rho''(y2)`.
    pub fn rho_second(&self, y: f64) -> f64 {
        match self.kind {
            ProfileKind::Constant { .. } | ProfileKind::Linear { .. } => 0.0,
            ProfileKind::Exponential { rho0, r } => rho0 * r * r * (r * y).exp(),
            ProfileKind::TanhLayer {
                delta,
                center,
                width,
                ..
            } => {
                let t = ((y - center) / width).tanh();
                -2.0 * delta * t * (1.0 - t * t) / (width * width)
            }
        }
    }

    /// Infimum of the density over the audit grid.
    pub fn rho_min(&self) -> f64 {
        (0..=AUDIT_SAMPLES)
            .map(|i| self.rho(self.h * i as f64 / AUDIT_SAMPLES as f64))
            .fold(f64::INFINITY, f64::min)
    }

    /// Sup norm of `rho'` over the audit grid.
    pub fn rho_prime_max_abs(&self) -> f64 {
        (0..=AUDIT_SAMPLES)
            .map(|i| self.rho_prime(self.h * i as f64 / AUDIT_SAMPLES as f64).abs())
            .fold(0.0, f64::max)
    }

    /// Rayleigh-Taylor condition: the density increases with height somewhere.
    pub fn rt_condition(&self) -> bool {
        (0..=AUDIT_SAMPLES)
            .any(|i| self.rho_prime(self.h * i as f64 / AUDIT_SAMPLES as f64) > 0.0)
    }

    /// Hydrostatic pressure `P(y2) = -g * int_0^{y2} rho ds` with the
    /// convention `P(0) = 0` (the equilibrium pressure is only fixed up to a
    /// constant). Composite Simpson on the audit grid, error `O(grid^-4)`.
    pub fn equilibrium_pressure(&self, g: f64, y2: f64) -> Result<f64> {
        if !(0.0..=self.h).contains(&y2) {
            return Err(MrtError::invalid(format!(
                "y2={y2} outside [0, {}]",
                self.h
            )));
        }
        // even panel count over [0, y2]
        let n = 2 * AUDIT_SAMPLES.div_euclid(2);
        if y2 == 0.0 {
            return Ok(0.0);
        }
        let dx = y2 / n as f64;
        let mut s = self.rho(0.0) + self.rho(y2);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * self.rho(i as f64 * dx);
        }
        Ok(-g * s * dx / 3.0)
    }
}

/// Physical parameters of the problem: gravity `g`, velocity damping `a`,
/// vacuum permeability `lambda`, horizontal field strength `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysParams {
    pub g: f64,
    pub a: f64,
    pub lambda: f64,
    pub m: f64,
}

impl PhysParams {
    pub fn new(g: f64, a: f64, lambda: f64, m: f64) -> Result<Self> {
        if !(g > 0.0) {
            return Err(MrtError::invalid(format!("g={g} must be > 0")));
        }
        if !(a >= 0.0) {
            return Err(MrtError::invalid(format!("a={a} must be >= 0")));
        }
        if !(lambda > 0.0) {
            return Err(MrtError::invalid(format!("lambda={lambda} must be > 0")));
        }
        if !m.is_finite() {
            return Err(MrtError::invalid("m must be finite"));
        }
        Ok(PhysParams { g, a, lambda, m })
    }
}
