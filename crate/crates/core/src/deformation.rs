//! Deformation of the fluctuation scaling law.
//!
//! A [`DeformationModel`] carries the increasing map `w` (with `w(0) = 0`,
//! `w'(0) = 1` and `w(z) < z`), its inverse on the increasing branch, and the
//! induced nonlinearity `W(z) = d/dz [w^{-1}(sqrt z)]^2 - 1` that multiplies the
//! `|psi|^{-1} d^2|psi|` term of the wave equation. Two models ship: the
//! identity (undeformed, linear quantum mechanics) and the minimal-length
//! model `w(z) = z / (1 + beta z^2)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant and particle mass in working units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitsConfig {
    pub hbar: f64,
    pub mass: f64,
}

impl Default for UnitsConfig {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            mass: 1.0,
        }
    }
}

impl UnitsConfig {
    pub fn new(hbar: f64, mass: f64) -> Result<Self> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::Validation("hbar must be positive".into()));
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::Validation("mass must be positive".into()));
        }
        Ok(Self { hbar, mass })
    }

    /// Prefactor of the Fisher information in the squared fluctuation, `hbar^2 / 4`.
    pub fn fisher_constant(&self) -> f64 {
        0.25 * self.hbar * self.hbar
    }
}

/// Conversion of the dimensionless `beta_0` into a working-unit `beta`.
///
/// Metadata only; nothing in the solver depends on physical units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanckScale {
    pub beta0: f64,
    /// Planck length in the length unit of the working system.
    pub planck_length: f64,
}

impl PlanckScale {
    /// Planck length in metres (CODATA 2018).
    pub const PLANCK_LENGTH_M: f64 = 1.616_255e-35;

    pub fn beta(&self, units: &UnitsConfig) -> f64 {
        self.beta0 * self.planck_length * self.planck_length / (units.hbar * units.hbar)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Identity,
    Gup,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeformationModel {
    kind: ModelKind,
    beta: f64,
}

impl DeformationModel {
    pub fn identity() -> Self {
        Self {
            kind: ModelKind::Identity,
            beta: 0.0,
        }
    }

    pub fn gup(beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::Validation("beta must be nonnegative".into()));
        }
        Ok(Self {
            kind: ModelKind::Gup,
            beta,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn beta(&self) -> f64 {
        match self.kind {
            ModelKind::Identity => 0.0,
            ModelKind::Gup => self.beta,
        }
    }

    /// True when every deformation reduces to the identity (`W == 0`).
    pub fn is_linear(&self) -> bool {
        self.beta() == 0.0
    }

    /// Upper end of the increasing branch of `w`.
    pub fn z_max_w(&self) -> f64 {
        if self.is_linear() {
            f64::INFINITY
        } else {
            self.beta.sqrt().recip()
        }
    }

    /// Largest value `w` attains on its increasing branch.
    pub fn w_branch_max(&self) -> f64 {
        if self.is_linear() {
            f64::INFINITY
        } else {
            0.5 / self.beta.sqrt()
        }
    }

    /// Supremum of the arguments accepted by [`Self::nonlinearity`] (excluded).
    pub fn z_max_nonlinearity(&self) -> f64 {
        if self.is_linear() {
            f64::INFINITY
        } else {
            0.25 / self.beta
        }
    }

    pub fn w(&self, z: f64) -> Result<f64> {
        if !(z >= 0.0 && z <= self.z_max_w()) {
            return Err(Error::Domain {
                what: "w",
                value: z,
                limit: self.z_max_w(),
            });
        }
        Ok(if self.is_linear() {
            z
        } else {
            z / (1.0 + self.beta * z * z)
        })
    }

    /// Root of `w(z) = y` on the increasing branch.
    pub fn w_inverse(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0 && y <= self.w_branch_max()) {
            return Err(Error::Domain {
                what: "w_inverse",
                value: y,
                limit: self.w_branch_max(),
            });
        }
        if self.is_linear() {
            return Ok(y);
        }
        // (1 - sqrt(1 - 4 beta y^2)) / (2 beta y), rationalized; regular at y = 0.
        let disc = (1.0 - 4.0 * self.beta * y * y).max(0.0);
        Ok(2.0 * y / (1.0 + disc.sqrt()))
    }

    /// The induced nonlinearity `W(z)`, valid for `0 <= z < 1/(4 beta)`.
    pub fn nonlinearity(&self, z: f64) -> Result<f64> {
        let limit = self.z_max_nonlinearity();
        if !(z >= 0.0 && z < limit) {
            return Err(Error::Domain {
                what: "W",
                value: z,
                limit,
            });
        }
        if self.is_linear() {
            return Ok(0.0);
        }
        let u = self.beta * z;
        let s = (1.0 - 4.0 * u).sqrt();
        // 2/(1 + s - 2u(2 + s)) - 1 with the cancellation at small u removed.
        Ok(4.0 * u * (4.0 + 3.0 * s + s * s) / (s * (1.0 + s).powi(3)))
    }

    /// `w^{-1}(kappa * w(delta_n))`.
    pub fn scaling_transform(&self, delta_n: f64, kappa: f64) -> Result<f64> {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::invalid("kappa must be positive"));
        }
        let scaled = kappa * self.w(delta_n)?;
        self.w_inverse(scaled)
    }
}
