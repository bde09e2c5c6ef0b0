use num_complex::Complex64;

use crate::em::{
    reflection_depolarization_matrix, slab_depolarization_matrix,
    stochastic_depolarization_matrix, utd_diffraction_matrix, DepolarizationMatrix,
    StochasticDepolParams, WedgeGeometry,
};
use crate::error::{Error, Result};
use crate::materials::Material;
use crate::SPEED_OF_LIGHT;

/// One propagation mechanism along a path. The exterior medium is vacuum.
#[derive(Debug, Clone, PartialEq)]
pub enum Interaction {
    Reflection {
        material: Material,
        theta_i: f64,
        rot_in: f64,
        rot_out: f64,
    },
    Slab {
        material: Material,
        theta_i: f64,
        thickness_m: f64,
        rot_in: f64,
        rot_out: f64,
    },
    Diffraction(WedgeGeometry),
}

impl Interaction {
    pub fn matrix(&self, f_hz: f64) -> Result<DepolarizationMatrix> {
        let air = Material::vacuum();
        match self {
            Interaction::Reflection {
                material,
                theta_i,
                rot_in,
                rot_out,
            } => reflection_depolarization_matrix(*theta_i, &air, material, f_hz, *rot_in, *rot_out),
            Interaction::Slab {
                material,
                theta_i,
                thickness_m,
                rot_in,
                rot_out,
            } => slab_depolarization_matrix(
                *theta_i,
                &air,
                material,
                *thickness_m,
                f_hz,
                *rot_in,
                *rot_out,
            ),
            Interaction::Diffraction(g) => utd_diffraction_matrix(g, f_hz),
        }
    }

    pub fn is_reflection(&self) -> bool {
        matches!(self, Interaction::Reflection { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DepolSource {
    /// Interactions in propagation order; empty means line of sight.
    Chain(Vec<Interaction>),
    Stochastic(StochasticDepolParams),
}

/// Geometric and polarimetric parameters of one path.
///
/// Nothing here depends on the carrier: the same instance feeds uplink and
/// downlink synthesis. `aoa_*` are the base-station side angles, `aod_*`
/// the user-equipment side; elevations are zenith angles.
#[derive(Debug, Clone, PartialEq)]
pub struct MultipathComponent {
    pub distance_m: f64,
    pub aoa_az: f64,
    pub aoa_el: f64,
    pub aod_az: f64,
    pub aod_el: f64,
    pub doppler_speed_mps: f64,
    pub power_scale: f64,
    pub depol: DepolSource,
}

impl MultipathComponent {
    /// Line-of-sight path with unit power at the given distance and BS azimuth.
    pub fn direct(distance_m: f64, aoa_az: f64) -> Self {
        MultipathComponent {
            distance_m,
            aoa_az,
            aoa_el: std::f64::consts::FRAC_PI_2,
            aod_az: 0.0,
            aod_el: std::f64::consts::FRAC_PI_2,
            doppler_speed_mps: 0.0,
            power_scale: 1.0,
            depol: DepolSource::Chain(Vec::new()),
        }
    }

    /// Exterior propagation delay `d / c`.
    pub fn delay_s(&self) -> f64 {
        self.distance_m / SPEED_OF_LIGHT
    }

    /// Whole-path depolarization matrix `A_k ... A_2 A_1` at `f_hz`.
    pub fn depolarization(&self, f_hz: f64) -> Result<DepolarizationMatrix> {
        match &self.depol {
            DepolSource::Stochastic(p) => Ok(stochastic_depolarization_matrix(p)),
            DepolSource::Chain(chain) => chain
                .iter()
                .try_fold(DepolarizationMatrix::identity(), |acc, i| {
                    Ok(i.matrix(f_hz)? * acc)
                }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        use std::f64::consts::PI;
        let range = |field: &str, value: f64, expected: &'static str| Error::Range {
            field: field.into(),
            value,
            expected,
        };
        if !(self.distance_m > 0.0 && self.distance_m.is_finite()) {
            return Err(range("distance_m", self.distance_m, "> 0"));
        }
        for (name, el) in [("aoa_el", self.aoa_el), ("aod_el", self.aod_el)] {
            if !(0.0..=PI).contains(&el) {
                return Err(range(name, el, "[0, pi] rad"));
            }
        }
        for (name, az) in [("aoa_az", self.aoa_az), ("aod_az", self.aod_az)] {
            if !(az > -PI && az <= PI) {
                return Err(range(name, az, "(-pi, pi] rad"));
            }
        }
        if !self.doppler_speed_mps.is_finite() {
            return Err(Error::NonFinite("doppler_speed_mps"));
        }
        if !(self.power_scale >= 0.0 && self.power_scale.is_finite()) {
            return Err(range("power_scale", self.power_scale, ">= 0"));
        }
        if let DepolSource::Chain(chain) = &self.depol {
            for i in chain {
                if let Interaction::Diffraction(g) = i {
                    g.validate()?;
                }
            }
        }
        Ok(())
    }
}

/// Carrier-resolved summary of one path, used to compare UL and DL.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub delay_s: f64,
    pub aoa_az: f64,
    pub aoa_el: f64,
    pub aod_az: f64,
    pub aod_el: f64,
    pub doppler_speed_mps: f64,
    pub depolarization: DepolarizationMatrix,
}

impl PathRecord {
    /// Little-endian bytes of the carrier-independent fields.
    pub fn geometry_bytes(&self) -> Vec<u8> {
        [
            self.delay_s,
            self.aoa_az,
            self.aoa_el,
            self.aod_az,
            self.aod_el,
            self.doppler_speed_mps,
        ]
        .iter()
        .flat_map(|v| v.to_le_bytes())
        .collect()
    }
}

/// Propagation delay `d * n(f) / c` through a homogeneous medium.
pub fn path_delay(distance_m: f64, medium: &Material, f_hz: f64) -> f64 {
    distance_m * medium.refractive_index(f_hz) / SPEED_OF_LIGHT
}

/// Polarimetric gain `F_rx^T A(f) F_tx * sqrt(power_scale)`.
pub fn polarimetric_path_gain(
    path: &MultipathComponent,
    rx_pattern: [f64; 2],
    tx_pattern: [f64; 2],
    f_hz: f64,
) -> Result<Complex64> {
    let a = path.depolarization(f_hz)?;
    Ok(gain_with_matrix(&a, rx_pattern, tx_pattern, path.power_scale))
}

pub(crate) fn gain_with_matrix(
    a: &DepolarizationMatrix,
    rx: [f64; 2],
    tx: [f64; 2],
    power_scale: f64,
) -> Complex64 {
    let v = a.apply([tx[0].into(), tx[1].into()]);
    (rx[0] * v[0] + rx[1] * v[1]) * power_scale.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stochastic(xpr: f64) -> MultipathComponent {
        MultipathComponent {
            depol: DepolSource::Stochastic(StochasticDepolParams::new(xpr, [0.0; 4]).unwrap()),
            ..MultipathComponent::direct(10.0, 0.0)
        }
    }

    #[test]
    fn delay_examples() {
        let vac = Material::vacuum();
        assert!((path_delay(300.0, &vac, 1.8e9) - 1.000_692_285_6e-6).abs() < 1e-15);
        let glassy = Material::dielectric("n1.5", 2.25);
        assert!((path_delay(300.0, &glassy, 1.8e9) - 1.501_038_428_4e-6).abs() < 1e-15);
        assert!((path_delay(0.1, &vac, 1.8e9) - 3.335_640_95e-10).abs() < 1e-18);
    }

    #[test]
    fn gain_examples() {
        let los = MultipathComponent::direct(10.0, 0.0);
        assert_eq!(
            polarimetric_path_gain(&los, [1.0, 0.0], [1.0, 0.0], 1.8e9).unwrap(),
            Complex64::new(1.0, 0.0)
        );
        assert_eq!(
            polarimetric_path_gain(&los, [1.0, 0.0], [0.0, 1.0], 1.8e9).unwrap(),
            Complex64::new(0.0, 0.0)
        );
        let g = polarimetric_path_gain(&stochastic(4.0), [1.0, 0.0], [0.0, 1.0], 1.8e9).unwrap();
        assert!((g - 0.5).norm() < 1e-15);
    }

    #[test]
    fn chain_multiplies_in_propagation_order() {
        let r = Interaction::Reflection {
            material: Material::dielectric("a", 4.0),
            theta_i: 0.4,
            rot_in: 0.3,
            rot_out: 0.0,
        };
        let s = Interaction::Slab {
            material: Material::dielectric("b", 2.0),
            theta_i: 0.2,
            thickness_m: 0.05,
            rot_in: 0.0,
            rot_out: -0.7,
        };
        let path = MultipathComponent {
            depol: DepolSource::Chain(vec![r.clone(), s.clone()]),
            ..MultipathComponent::direct(10.0, 0.0)
        };
        let f = 1.8e9;
        let want = s.matrix(f).unwrap() * r.matrix(f).unwrap();
        assert_eq!(path.depolarization(f).unwrap(), want);
    }

    #[test]
    fn power_scale_enters_as_amplitude() {
        let mut p = MultipathComponent::direct(10.0, 0.0);
        p.power_scale = 0.25;
        let g = polarimetric_path_gain(&p, [1.0, 0.0], [1.0, 0.0], 1.8e9).unwrap();
        assert_eq!(g, Complex64::new(0.5, 0.0));
    }

    #[test]
    fn validation() {
        let mut p = MultipathComponent::direct(10.0, 0.0);
        assert!(p.validate().is_ok());
        p.aoa_el = 4.0;
        assert!(p.validate().is_err());
        let mut p = MultipathComponent::direct(-1.0, 0.0);
        assert!(p.validate().is_err());
        p.distance_m = 1.0;
        p.aoa_az = -std::f64::consts::PI;
        assert!(p.validate().is_err());
    }
}
