//! Propagation media and their frequency-parameterized electromagnetic
//! properties.
//!
//! Relative permittivity follows the power-law form
//! `eps_r(f) = eps_a * (f / 1 GHz)^eps_b` used by the ITU-R building
//! material tables. Media are treated as lossless: the conductivity
//! coefficients are carried through the file format but never evaluated.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lowest carrier frequency a material may be evaluated at.
pub const F_MIN_HZ: f64 = 0.5e9;
/// Highest carrier frequency a material may be evaluated at.
pub const F_MAX_HZ: f64 = 10.0e9;

const GHZ: f64 = 1.0e9;

fn default_mu_r() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Material {
    pub name: String,
    pub eps_a: f64,
    pub eps_b: f64,
    #[serde(default = "default_mu_r")]
    pub mu_r: f64,
    pub default_thickness_m: f64,
    /// Conductivity coefficients `sigma = c * f_GHz^d` (S/m). Reserved.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_d: Option<f64>,
}

impl Material {
    /// A frequency-flat lossless medium with the given permittivity.
    pub fn dielectric(name: impl Into<String>, eps_r: f64) -> Self {
        Material {
            name: name.into(),
            eps_a: eps_r,
            eps_b: 0.0,
            mu_r: 1.0,
            default_thickness_m: 0.1,
            sigma_c: None,
            sigma_d: None,
        }
    }

    pub fn vacuum() -> Self {
        Material::dielectric("vacuum", 1.0)
    }

    /// Relative permittivity at `f_hz`.
    pub fn permittivity_at(&self, f_hz: f64) -> f64 {
        if self.eps_b == 0.0 {
            // exact frequency independence, not just up to rounding of powf
            self.eps_a
        } else {
            self.eps_a * (f_hz / GHZ).powf(self.eps_b)
        }
    }

    /// Refractive index `sqrt(eps_r * mu_r)`.
    pub fn refractive_index(&self, f_hz: f64) -> f64 {
        (self.permittivity_at(f_hz) * self.mu_r).sqrt()
    }

    /// Intrinsic impedance relative to free space, `sqrt(mu_r / eps_r)`.
    pub fn relative_impedance(&self, f_hz: f64) -> f64 {
        (self.mu_r / self.permittivity_at(f_hz)).sqrt()
    }

    fn validate(&self) -> Result<()> {
        let field = |f: &str| format!("material {:?}: {f}", self.name);
        if self.name.is_empty() {
            return Err(Error::Validation("material with empty name".into()));
        }
        for (name, v) in [
            ("eps_a", self.eps_a),
            ("eps_b", self.eps_b),
            ("mu_r", self.mu_r),
            ("default_thickness_m", self.default_thickness_m),
        ] {
            if !v.is_finite() {
                return Err(Error::Range {
                    field: field(name),
                    value: v,
                    expected: "finite",
                });
            }
        }
        if self.eps_a < 1.0 {
            return Err(Error::Range {
                field: field("eps_a"),
                value: self.eps_a,
                expected: ">= 1",
            });
        }
        if self.mu_r <= 0.0 {
            return Err(Error::Range {
                field: field("mu_r"),
                value: self.mu_r,
                expected: "> 0",
            });
        }
        if self.default_thickness_m <= 0.0 {
            return Err(Error::Range {
                field: field("default_thickness_m"),
                value: self.default_thickness_m,
                expected: "> 0",
            });
        }
        // power law is monotone, so the band edges bound it
        for f in [F_MIN_HZ, F_MAX_HZ] {
            let eps = self.permittivity_at(f);
            if eps < 1.0 {
                return Err(Error::Range {
                    field: field(&format!("permittivity at {} GHz", f / GHZ)),
                    value: eps,
                    expected: ">= 1 over 0.5-10 GHz",
                });
            }
        }
        Ok(())
    }
}

/// Ratio of intrinsic impedances `eta2 / eta1` between two media.
pub fn intrinsic_impedance_ratio(m1: &Material, m2: &Material, f_hz: f64) -> f64 {
    m2.relative_impedance(f_hz) / m1.relative_impedance(f_hz)
}

/// Checks that a carrier lies inside the band the material models cover.
pub fn check_frequency(field: &str, f_hz: f64) -> Result<()> {
    if f_hz.is_finite() && (F_MIN_HZ..=F_MAX_HZ).contains(&f_hz) {
        Ok(())
    } else {
        Err(Error::Range {
            field: field.to_string(),
            value: f_hz,
            expected: "0.5e9..=10e9 Hz",
        })
    }
}

/// Ordered, name-unique collection of materials.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MaterialDb {
    materials: Vec<Material>,
}

impl MaterialDb {
    pub fn new(materials: Vec<Material>) -> Result<Self> {
        let mut seen = HashSet::new();
        for m in &materials {
            m.validate()?;
            if !seen.insert(m.name.as_str()) {
                return Err(Error::DuplicateMaterial(m.name.clone()));
            }
        }
        Ok(MaterialDb { materials })
    }

    /// The material table shipped with the crate.
    pub fn builtin() -> Self {
        load_material_db(include_str!("../data/materials.json"))
            .expect("bundled material table is valid")
    }

    pub fn get(&self, name: &str) -> Option<&Material> {
        self.materials.iter().find(|m| m.name == name)
    }

    pub fn lookup(&self, name: &str) -> Result<&Material> {
        self.get(name)
            .ok_or_else(|| Error::UnknownMaterial(name.to_string()))
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Material> {
        self.materials.iter()
    }

    pub fn len(&self) -> usize {
        self.materials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.materials.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.materials).expect("materials serialize")
    }
}

impl<'a> IntoIterator for &'a MaterialDb {
    type Item = &'a Material;
    type IntoIter = std::slice::Iter<'a, Material>;

    fn into_iter(self) -> Self::IntoIter {
        self.materials.iter()
    }
}

/// Parses and validates a JSON material table.
pub fn load_material_db(source: &str) -> Result<MaterialDb> {
    let materials: Vec<Material> = serde_json::from_str(source)
        .map_err(|e| Error::json(format!("line {} column {}", e.line(), e.column()), &e))?;
    MaterialDb::new(materials)
}
