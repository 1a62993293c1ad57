//! Physical parameters and regime bookkeeping.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn default_sign() -> f64 {
    1.0
}

/// Dimension, nonlinearity, trap and rotation.
///
/// Rotation is about the third coordinate axis. The angular momentum operator is
/// `lomega_sign * (-i |Omega| (x1 d/dx2 - x2 d/dx1))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicsParams {
    pub dim: usize,
    pub p: f64,
    pub gammas: Vec<f64>,
    pub omega_rot: f64,
    #[serde(default = "default_sign")]
    pub lomega_sign: f64,
}

/// Position of `p` relative to the mass-critical exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

impl PhysicsParams {
    pub fn new(dim: usize, p: f64, gammas: &[f64], omega_rot: f64) -> Result<Self> {
        let params = Self { dim, p, gammas: gammas.to_vec(), omega_rot, lomega_sign: 1.0 };
        params.validate()?;
        Ok(params)
    }

    pub fn with_sign(mut self, sign: f64) -> Result<Self> {
        self.lomega_sign = sign;
        self.validate()?;
        Ok(self)
    }

    pub fn with_rotation(&self, omega_rot: f64) -> Self {
        Self { omega_rot, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dim == 2 || self.dim == 3) {
            return Err(Error::InvalidParams(format!("dimension must be 2 or 3, got {}", self.dim)));
        }
        if self.gammas.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: self.gammas.len() });
        }
        if self.gammas.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
            return Err(Error::InvalidParams("trap frequencies must be positive".into()));
        }
        if !(self.p.is_finite() && self.p > 1.0 && self.p < self.energy_critical_exponent()) {
            return Err(Error::InvalidParams(format!(
                "p = {} outside (1, {})",
                self.p,
                self.energy_critical_exponent()
            )));
        }
        if !(self.omega_rot.is_finite() && self.omega_rot >= 0.0) {
            return Err(Error::InvalidParams("rotation speed |Omega| must be finite and nonnegative".into()));
        }
        if self.lomega_sign != 1.0 && self.lomega_sign != -1.0 {
            return Err(Error::InvalidParams(format!("lomega_sign must be +1 or -1, got {}", self.lomega_sign)));
        }
        Ok(())
    }

    /// `2* = 1 + 4/(N-2)` for `N = 3`, infinite for `N = 2`.
    pub fn energy_critical_exponent(&self) -> f64 {
        if self.dim == 2 {
            f64::INFINITY
        } else {
            1.0 + 4.0 / (self.dim as f64 - 2.0)
        }
    }

    pub fn mass_critical_exponent(&self) -> f64 {
        1.0 + 4.0 / self.dim as f64
    }

    /// `s_c = N/2 - 2/(p-1)`.
    pub fn s_c(&self) -> f64 {
        critical_index(self.dim, self.p)
    }

    pub fn regime(&self) -> Regime {
        let pc = self.mass_critical_exponent();
        if (self.p - pc).abs() <= 1e-14 * pc {
            Regime::Critical
        } else if self.p < pc {
            Regime::Subcritical
        } else {
            Regime::Supercritical
        }
    }

    pub fn require_supercritical(&self) -> Result<()> {
        match self.regime() {
            Regime::Supercritical => Ok(()),
            r => Err(Error::Regime(format!("p = {} is {:?}, not mass supercritical", self.p, r))),
        }
    }

    /// `gamma = min_j gamma_j`.
    pub fn gamma(&self) -> f64 {
        self.gammas.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn is_isotropic(&self) -> bool {
        self.gammas.iter().all(|&g| g == self.gammas[0])
    }

    /// Rejects `|Omega| >= gamma`, where the quadratic form loses coercivity.
    pub fn require_slow_rotation(&self) -> Result<()> {
        if self.omega_rot < self.gamma() {
            Ok(())
        } else {
            Err(Error::Regime(format!(
                "|Omega| = {} is not below gamma = {}",
                self.omega_rot,
                self.gamma()
            )))
        }
    }

    /// Signed coefficient multiplying `-i (x1 d2 - x2 d1)`.
    pub fn rotation_coefficient(&self) -> f64 {
        self.lomega_sign * self.omega_rot
    }

    /// `N(p-1)/2`, the homogeneity of the gradient in the GN inequality.
    pub fn gn_gradient_power(&self) -> f64 {
        self.dim as f64 * (self.p - 1.0) / 2.0
    }
}

pub fn critical_index(dim: usize, p: f64) -> f64 {
    dim as f64 / 2.0 - 2.0 / (p - 1.0)
}
