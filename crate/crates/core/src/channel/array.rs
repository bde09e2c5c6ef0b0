use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::SPEED_OF_LIGHT;

/// Element field pattern, evaluated as `[F_theta, F_phi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldPattern {
    /// Unit theta-polarized response in every direction.
    Isotropic,
    /// Ideal short dipole along z: `F_theta = sin(theta)`.
    Dipole,
    /// Ideal slant-polarized element at the given angle (rad) from vertical.
    Slant(f64),
}

impl FieldPattern {
    /// Pattern at zenith angle `el` and azimuth `az`.
    pub fn evaluate(&self, el: f64, _az: f64) -> [f64; 2] {
        match *self {
            FieldPattern::Isotropic => [1.0, 0.0],
            FieldPattern::Dipole => [el.sin(), 0.0],
            FieldPattern::Slant(chi) => [chi.cos(), chi.sin()],
        }
    }
}

/// Uniform linear array along the x axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    pub n_patches: usize,
    pub spacing_m: f64,
    pub polarizations: Vec<FieldPattern>,
}

impl ArrayGeometry {
    /// 8 patches at 8.33 cm with co-located ±45° slant elements.
    pub fn default_bs() -> Self {
        ArrayGeometry {
            n_patches: 8,
            spacing_m: 0.0833,
            polarizations: vec![
                FieldPattern::Slant(45f64.to_radians()),
                FieldPattern::Slant(-45f64.to_radians()),
            ],
        }
    }

    /// Single vertical dipole.
    pub fn single_dipole() -> Self {
        ArrayGeometry {
            n_patches: 1,
            spacing_m: 0.5,
            polarizations: vec![FieldPattern::Dipole],
        }
    }

    pub fn n_elements(&self) -> usize {
        self.n_patches * self.polarizations.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_patches == 0 {
            return Err(Error::Validation("array needs at least one patch".into()));
        }
        if self.polarizations.is_empty() {
            return Err(Error::Validation("array needs at least one polarization".into()));
        }
        if !(self.spacing_m > 0.0 && self.spacing_m.is_finite()) {
            return Err(Error::Range {
                field: "spacing_m".into(),
                value: self.spacing_m,
                expected: "> 0",
            });
        }
        Ok(())
    }

    /// Angle between the array axis and the direction `(el, az)`.
    pub fn cone_angle(el: f64, az: f64) -> f64 {
        (el.sin() * az.cos()).clamp(-1.0, 1.0).acos()
    }

    /// Per-patch phase ramp `exp(-j 2 pi m d cos(theta) / lambda)`.
    pub fn patch_phases(&self, theta: f64, f_hz: f64) -> Vec<Complex64> {
        let step = -TAU * self.spacing_m * f_hz / SPEED_OF_LIGHT * theta.cos();
        (0..self.n_patches)
            .map(|m| Complex64::from_polar(1.0, step * m as f64))
            .collect()
    }
}

/// Steering vector for cone angle `theta`, one identical block per
/// polarization.
pub fn steering_vector(arr: &ArrayGeometry, theta: f64, f_hz: f64) -> Vec<Complex64> {
    let block = arr.patch_phases(theta, f_hz);
    let mut out = Vec::with_capacity(arr.n_elements());
    for _ in &arr.polarizations {
        out.extend_from_slice(&block);
    }
    out
}
