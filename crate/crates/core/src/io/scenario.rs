//! Scenario files: carriers, arrays and declared multipath.
//!
//! Angles are degrees and powers dB in the file; everything is converted to
//! radians and linear scale on load.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::channel::{ArrayGeometry, DepolSource, FieldPattern, Interaction, MultipathComponent};
use crate::em::{FaceMaterial, StochasticDepolParams, WedgeGeometry};
use crate::error::{Error, Result};
use crate::materials::{check_frequency, MaterialDb};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Link {
    Ul,
    Dl,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub f_ul_hz: f64,
    pub f_dl_hz: f64,
    pub bandwidth_hz: f64,
    pub n_taps: usize,
    pub bs_array: ArrayGeometry,
    pub ue_array: ArrayGeometry,
    pub paths: Vec<MultipathComponent>,
    pub rng_seed: Option<u64>,
}

impl Scenario {
    pub fn carrier(&self, link: Link) -> f64 {
        match link {
            Link::Ul => self.f_ul_hz,
            Link::Dl => self.f_dl_hz,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_frequency("f_ul_hz", self.f_ul_hz)?;
        check_frequency("f_dl_hz", self.f_dl_hz)?;
        if self.f_ul_hz == self.f_dl_hz {
            return Err(Error::Validation("f_ul_hz must differ from f_dl_hz".into()));
        }
        if !(self.bandwidth_hz > 0.0 && self.bandwidth_hz < self.f_ul_hz.min(self.f_dl_hz)) {
            return Err(Error::Range {
                field: "bandwidth_hz".into(),
                value: self.bandwidth_hz,
                expected: "> 0 and below both carriers",
            });
        }
        if self.n_taps == 0 {
            return Err(Error::Validation("n_taps must be >= 1".into()));
        }
        self.bs_array.validate()?;
        self.ue_array.validate()?;
        if self.paths.is_empty() {
            return Err(Error::EmptyScenario);
        }
        for (i, p) in self.paths.iter().enumerate() {
            p.validate().map_err(|e| prefix(&format!("paths[{i}]"), e))?;
        }
        Ok(())
    }
}

fn prefix(at: &str, e: Error) -> Error {
    match e {
        Error::Range {
            field,
            value,
            expected,
        } => Error::Range {
            field: format!("{at}.{field}"),
            value,
            expected,
        },
        Error::Validation(msg) => Error::Validation(format!("{at}: {msg}")),
        Error::UnknownMaterial(name) => Error::Validation(format!("{at}: unknown material {name:?}")),
        other => other,
    }
}

// ---- file schema ----

#[derive(Deserialize)]
#[serde(untagged)]
enum PatternSpec {
    SlantDeg(f64),
    Named(String),
}

impl PatternSpec {
    fn resolve(&self) -> Result<FieldPattern> {
        match self {
            PatternSpec::SlantDeg(d) => Ok(FieldPattern::Slant(d.to_radians())),
            PatternSpec::Named(n) => match n.as_str() {
                "isotropic" => Ok(FieldPattern::Isotropic),
                "dipole" => Ok(FieldPattern::Dipole),
                other => Err(Error::Validation(format!(
                    "unknown antenna pattern {other:?} (expected isotropic, dipole or a slant angle in degrees)"
                ))),
            },
        }
    }
}

fn default_patches() -> usize {
    8
}
fn default_spacing() -> f64 {
    0.0833
}
fn default_polarizations() -> Vec<PatternSpec> {
    vec![PatternSpec::SlantDeg(45.0), PatternSpec::SlantDeg(-45.0)]
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ArrayFile {
    #[serde(default = "default_patches")]
    n_patches: usize,
    #[serde(default = "default_spacing")]
    spacing_m: f64,
    #[serde(default = "default_polarizations")]
    polarizations: Vec<PatternSpec>,
}

impl Default for ArrayFile {
    fn default() -> Self {
        ArrayFile {
            n_patches: default_patches(),
            spacing_m: default_spacing(),
            polarizations: default_polarizations(),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
enum InteractionFile {
    Reflection {
        material: String,
        theta_i_deg: f64,
        #[serde(default)]
        rot_in_deg: f64,
        #[serde(default)]
        rot_out_deg: f64,
    },
    Slab {
        material: String,
        theta_i_deg: f64,
        thickness_m: Option<f64>,
        #[serde(default)]
        rot_in_deg: f64,
        #[serde(default)]
        rot_out_deg: f64,
    },
    Diffraction {
        n_wedge: f64,
        phi_inc_deg: f64,
        phi_dif_deg: f64,
        #[serde(default = "default_beta0")]
        beta0_deg: f64,
        l_dist_m: f64,
        faces: FacesFile,
        #[serde(default)]
        rot_in_deg: f64,
        #[serde(default)]
        rot_out_deg: f64,
    },
}

fn default_beta0() -> f64 {
    90.0
}

#[derive(Deserialize)]
#[serde(untagged)]
enum FacesFile {
    Pair([String; 2]),
    Both(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StochasticFile {
    xpr_db: f64,
    phases_deg: Option<[f64; 4]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
enum DepolFile {
    Chain(Vec<InteractionFile>),
    Stochastic(StochasticFile),
}

impl Default for DepolFile {
    fn default() -> Self {
        DepolFile::Chain(Vec::new())
    }
}

fn default_el() -> f64 {
    90.0
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PathFile {
    distance_m: f64,
    aoa_az_deg: f64,
    #[serde(default = "default_el")]
    aoa_el_deg: f64,
    #[serde(default)]
    aod_az_deg: f64,
    #[serde(default = "default_el")]
    aod_el_deg: f64,
    #[serde(default)]
    doppler_mps: f64,
    #[serde(default)]
    power_db: f64,
    #[serde(default)]
    depol: DepolFile,
}

fn default_f_ul() -> f64 {
    1.8e9
}
fn default_f_dl() -> f64 {
    1.9e9
}
fn default_bandwidth() -> f64 {
    10e6
}
fn default_taps() -> usize {
    64
}
fn default_ue() -> PatternSpec {
    PatternSpec::Named("dipole".into())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default = "default_f_ul")]
    f_ul_hz: f64,
    #[serde(default = "default_f_dl")]
    f_dl_hz: f64,
    #[serde(default = "default_bandwidth")]
    bandwidth_hz: f64,
    #[serde(default = "default_taps")]
    n_taps: usize,
    #[serde(default)]
    bs_array: ArrayFile,
    #[serde(default = "default_ue")]
    ue_antenna: PatternSpec,
    rng_seed: Option<u64>,
    paths: Vec<PathFile>,
}

/// Uniform draw on (-pi, pi].
fn draw_phase(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.random();
    std::f64::consts::PI - std::f64::consts::TAU * u
}

fn resolve_interaction(
    file: InteractionFile,
    db: &MaterialDb,
    at: &str,
) -> Result<Interaction> {
    let lookup = |name: &str| db.lookup(name).cloned().map_err(|e| prefix(at, e));
    Ok(match file {
        InteractionFile::Reflection {
            material,
            theta_i_deg,
            rot_in_deg,
            rot_out_deg,
        } => Interaction::Reflection {
            material: lookup(&material)?,
            theta_i: incidence(theta_i_deg, at)?,
            rot_in: rot_in_deg.to_radians(),
            rot_out: rot_out_deg.to_radians(),
        },
        InteractionFile::Slab {
            material,
            theta_i_deg,
            thickness_m,
            rot_in_deg,
            rot_out_deg,
        } => {
            let material = lookup(&material)?;
            let thickness_m = thickness_m.unwrap_or(material.default_thickness_m);
            if !(thickness_m > 0.0 && thickness_m.is_finite()) {
                return Err(Error::Range {
                    field: format!("{at}.slab.thickness_m"),
                    value: thickness_m,
                    expected: "> 0",
                });
            }
            Interaction::Slab {
                material,
                theta_i: incidence(theta_i_deg, at)?,
                thickness_m,
                rot_in: rot_in_deg.to_radians(),
                rot_out: rot_out_deg.to_radians(),
            }
        }
        InteractionFile::Diffraction {
            n_wedge,
            phi_inc_deg,
            phi_dif_deg,
            beta0_deg,
            l_dist_m,
            faces,
            rot_in_deg,
            rot_out_deg,
        } => {
            let face = |name: &str| -> Result<FaceMaterial> {
                if name == "pec" {
                    Ok(FaceMaterial::Pec)
                } else {
                    Ok(FaceMaterial::Dielectric(lookup(name)?))
                }
            };
            let faces = match faces {
                FacesFile::Pair([a, b]) => [face(&a)?, face(&b)?],
                FacesFile::Both(a) => [face(&a)?, face(&a)?],
            };
            let g = WedgeGeometry {
                n_wedge,
                phi_inc: phi_inc_deg.to_radians(),
                phi_dif: phi_dif_deg.to_radians(),
                beta0: beta0_deg.to_radians(),
                l_dist: l_dist_m,
                faces,
                rot_in: rot_in_deg.to_radians(),
                rot_out: rot_out_deg.to_radians(),
            };
            g.validate().map_err(|e| prefix(&format!("{at}.diffraction"), e))?;
            Interaction::Diffraction(g)
        }
    })
}

fn incidence(theta_i_deg: f64, at: &str) -> Result<f64> {
    if (0.0..90.0).contains(&theta_i_deg) {
        Ok(theta_i_deg.to_radians())
    } else {
        Err(Error::Range {
            field: format!("{at}.theta_i_deg"),
            value: theta_i_deg,
            expected: "[0, 90) deg",
        })
    }
}

fn convert(file: ScenarioFile, db: &MaterialDb) -> Result<Scenario> {
    let any_stochastic = file
        .paths
        .iter()
        .any(|p| matches!(p.depol, DepolFile::Stochastic(_)));
    if any_stochastic && file.rng_seed.is_none() {
        return Err(Error::Validation(
            "rng_seed is required when any path uses stochastic depolarization".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(file.rng_seed.unwrap_or(0));

    let polarizations = file
        .bs_array
        .polarizations
        .iter()
        .map(PatternSpec::resolve)
        .collect::<Result<Vec<_>>>()
        .map_err(|e| prefix("bs_array.polarizations", e))?;
    let bs_array = ArrayGeometry {
        n_patches: file.bs_array.n_patches,
        spacing_m: file.bs_array.spacing_m,
        polarizations,
    };
    let ue_array = ArrayGeometry {
        polarizations: vec![file.ue_antenna.resolve().map_err(|e| prefix("ue_antenna", e))?],
        ..ArrayGeometry::single_dipole()
    };

    let mut paths = Vec::with_capacity(file.paths.len());
    for (i, p) in file.paths.into_iter().enumerate() {
        let at = format!("paths[{i}]");
        if !p.power_db.is_finite() {
            return Err(Error::NonFinite("power_db"));
        }
        let depol = match p.depol {
            DepolFile::Chain(chain) => DepolSource::Chain(
                chain
                    .into_iter()
                    .enumerate()
                    .map(|(j, c)| resolve_interaction(c, db, &format!("{at}.depol.chain[{j}]")))
                    .collect::<Result<_>>()?,
            ),
            DepolFile::Stochastic(s) => {
                let phases = match s.phases_deg {
                    Some(d) => d.map(f64::to_radians),
                    None => std::array::from_fn(|_| draw_phase(&mut rng)),
                };
                let xpr = 10f64.powf(s.xpr_db / 10.0);
                DepolSource::Stochastic(
                    StochasticDepolParams::new(xpr, phases)
                        .map_err(|e| prefix(&format!("{at}.depol.stochastic"), e))?,
                )
            }
        };
        paths.push(MultipathComponent {
            distance_m: p.distance_m,
            aoa_az: p.aoa_az_deg.to_radians(),
            aoa_el: p.aoa_el_deg.to_radians(),
            aod_az: p.aod_az_deg.to_radians(),
            aod_el: p.aod_el_deg.to_radians(),
            doppler_speed_mps: p.doppler_mps,
            power_scale: 10f64.powf(p.power_db / 10.0),
            depol,
        });
    }

    let scenario = Scenario {
        f_ul_hz: file.f_ul_hz,
        f_dl_hz: file.f_dl_hz,
        bandwidth_hz: file.bandwidth_hz,
        n_taps: file.n_taps,
        bs_array,
        ue_array,
        paths,
        rng_seed: file.rng_seed,
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Parses and validates scenario JSON, resolving materials against `db`.
pub fn parse_scenario_str(source: &str, db: &MaterialDb) -> Result<Scenario> {
    let de = &mut serde_json::Deserializer::from_str(source);
    let file: ScenarioFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Error::json(
            format!("{path} (line {} column {})", inner.line(), inner.column()),
            &inner,
        )
    })?;
    convert(file, db)
}

pub fn parse_scenario(path: &Path, db: &MaterialDb) -> Result<Scenario> {
    let source = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scenario_str(&source, db)
}
