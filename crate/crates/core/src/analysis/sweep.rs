use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::em::{
    fresnel_coefficients, slab_transmission_total, utd_diffraction_matrix, FaceMaterial,
    WedgeGeometry,
};
use crate::error::{Error, Result};
use crate::materials::{check_frequency, Material, MaterialDb};
use crate::wrap_phase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientKind {
    Reflection,
    Transmission,
    Diffraction,
}

impl CoefficientKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CoefficientKind::Reflection => "reflection",
            CoefficientKind::Transmission => "transmission",
            CoefficientKind::Diffraction => "diffraction",
        }
    }

    fn coefficient_names(&self) -> &'static [&'static str] {
        match self {
            CoefficientKind::Reflection => &["R_par", "R_perp"],
            CoefficientKind::Transmission => &["T_par_total", "T_perp_total"],
            CoefficientKind::Diffraction => &["D_a", "D_b", "D_c", "D_d"],
        }
    }
}

/// UL→DL change of one coefficient at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffSample {
    pub kind: CoefficientKind,
    pub coefficient: &'static str,
    pub material: String,
    /// Incidence angle; for diffraction the incidence azimuth from the 0-face.
    pub theta_i_deg: f64,
    pub param: String,
    pub amp_rel_diff: f64,
    pub phase_diff_deg: f64,
}

/// Grid point excluded from the statistics, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedPoint {
    pub material: String,
    pub theta_i_deg: f64,
    pub param: String,
    pub coefficient: Option<&'static str>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub samples: Vec<DiffSample>,
    pub skipped: Vec<SkippedPoint>,
}

impl SweepResult {
    pub fn amp_rel_diffs(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.amp_rel_diff).collect()
    }

    pub fn phase_diffs_deg(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.phase_diff_deg).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WedgeGrid {
    pub n_values: Vec<f64>,
    pub step_deg: f64,
    /// Half-width of the band around every cotangent pole left out of the grid.
    pub pole_band_deg: f64,
    pub beta0: f64,
    pub l_dist: f64,
    pub rot_in: f64,
    pub rot_out: f64,
}

impl Default for WedgeGrid {
    fn default() -> Self {
        WedgeGrid {
            n_values: vec![1.5, 2.0],
            step_deg: 5.0,
            pole_band_deg: 1.0,
            beta0: std::f64::consts::FRAC_PI_2,
            l_dist: 5.0,
            rot_in: 30f64.to_radians(),
            rot_out: (-20f64).to_radians(),
        }
    }
}

impl WedgeGrid {
    /// `(n, phi_inc_deg, phi_dif_deg)` triples, pole bands removed.
    pub fn points(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        for &n in &self.n_values {
            let limit = n * 180.0;
            let angles: Vec<f64> = (1..)
                .map(|i| f64::from(i) * self.step_deg)
                .take_while(|a| *a < limit)
                .collect();
            for &pi in &angles {
                for &pd in &angles {
                    if !self.near_pole(n, pi, pd) {
                        out.push((n, pi, pd));
                    }
                }
            }
        }
        out
    }

    fn near_pole(&self, n: f64, phi_inc_deg: f64, phi_dif_deg: f64) -> bool {
        let period = 360.0 * n;
        [phi_dif_deg - phi_inc_deg, phi_dif_deg + phi_inc_deg]
            .iter()
            .flat_map(|b| [180.0 + b, 180.0 - b])
            .any(|x| {
                let r = x.rem_euclid(period);
                r.min(period - r) < self.pole_band_deg
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub theta_i_deg: Vec<f64>,
    /// Slab thickness for every material; `None` uses each material's default.
    pub thickness_m: Option<f64>,
    pub wedge: WedgeGrid,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            theta_i_deg: (1..=85).map(f64::from).collect(),
            thickness_m: None,
            wedge: WedgeGrid::default(),
        }
    }
}

/// Amplitude change relative to the UL magnitude and absolute wrapped phase
/// change in degrees.
pub fn relative_difference(x_ul: Complex64, x_dl: Complex64) -> Result<(f64, f64)> {
    let ref_mag = x_ul.norm();
    if ref_mag == 0.0 {
        return Err(Error::ZeroReference);
    }
    let amp = (x_dl.norm() - ref_mag).abs() / ref_mag;
    let phase = wrap_phase(x_dl.arg() - x_ul.arg()).abs().to_degrees();
    Ok((amp, phase))
}

struct Point<'a> {
    material: &'a Material,
    theta_i_deg: f64,
    param: String,
    eval: Box<dyn Fn(f64) -> Result<Vec<Complex64>> + Send + Sync + 'a>,
}

enum Outcome {
    Samples(Vec<DiffSample>, Vec<SkippedPoint>),
    Skipped(SkippedPoint),
}

fn build_points<'a>(
    db: &'a MaterialDb,
    kind: CoefficientKind,
    grid: &'a SweepGrid,
) -> Vec<Point<'a>> {
    let mut points = Vec::new();
    for material in db {
        match kind {
            CoefficientKind::Reflection => {
                for &deg in &grid.theta_i_deg {
                    points.push(Point {
                        material,
                        theta_i_deg: deg,
                        param: String::new(),
                        eval: Box::new(move |f| {
                            let c = fresnel_coefficients(deg.to_radians(), &Material::vacuum(), material, f)?;
                            Ok(vec![c.r_par, c.r_perp])
                        }),
                    });
                }
            }
            CoefficientKind::Transmission => {
                let thickness = grid.thickness_m.unwrap_or(material.default_thickness_m);
                for &deg in &grid.theta_i_deg {
                    points.push(Point {
                        material,
                        theta_i_deg: deg,
                        param: format!("thickness_m={thickness}"),
                        eval: Box::new(move |f| {
                            let (p, s) = slab_transmission_total(
                                deg.to_radians(),
                                &Material::vacuum(),
                                material,
                                thickness,
                                f,
                            )?;
                            Ok(vec![p, s])
                        }),
                    });
                }
            }
            CoefficientKind::Diffraction => {
                let w = &grid.wedge;
                for (n, pi, pd) in w.points() {
                    let g = WedgeGeometry {
                        n_wedge: n,
                        phi_inc: pi.to_radians(),
                        phi_dif: pd.to_radians(),
                        beta0: w.beta0,
                        l_dist: w.l_dist,
                        faces: [
                            FaceMaterial::Dielectric(material.clone()),
                            FaceMaterial::Dielectric(material.clone()),
                        ],
                        rot_in: w.rot_in,
                        rot_out: w.rot_out,
                    };
                    points.push(Point {
                        material,
                        theta_i_deg: pi,
                        param: format!("n={n};phi_dif_deg={pd}"),
                        eval: Box::new(move |f| Ok(utd_diffraction_matrix(&g, f)?.entries().to_vec())),
                    });
                }
            }
        }
    }
    points
}

/// Evaluates every coefficient of `kind` at both carriers over the grid.
///
/// Samples come out material-major, grid-minor, coefficients innermost,
/// independent of how the work is scheduled. Points that fail (total
/// internal reflection, boundary poles, zero UL reference) are listed in
/// `skipped` instead.
pub fn coefficient_sweep(
    db: &MaterialDb,
    kind: CoefficientKind,
    f_ul_hz: f64,
    f_dl_hz: f64,
    grid: &SweepGrid,
) -> Result<SweepResult> {
    check_frequency("f_ul_hz", f_ul_hz)?;
    check_frequency("f_dl_hz", f_dl_hz)?;
    if kind != CoefficientKind::Diffraction && grid.theta_i_deg.is_empty() {
        return Err(Error::EmptyInput("sweep grid has no incidence angles"));
    }
    let names = kind.coefficient_names();
    let points = build_points(db, kind, grid);

    let outcomes: Vec<Outcome> = points
        .par_iter()
        .map(|pt| {
            let skip = |coefficient, reason: String| SkippedPoint {
                material: pt.material.name.clone(),
                theta_i_deg: pt.theta_i_deg,
                param: pt.param.clone(),
                coefficient,
                reason,
            };
            let (ul, dl) = match ((pt.eval)(f_ul_hz), (pt.eval)(f_dl_hz)) {
                (Ok(u), Ok(d)) => (u, d),
                (Err(e), _) | (_, Err(e)) => return Outcome::Skipped(skip(None, e.to_string())),
            };
            let mut samples = Vec::with_capacity(names.len());
            let mut skipped = Vec::new();
            for ((name, u), d) in names.iter().zip(ul).zip(dl) {
                match relative_difference(u, d) {
                    Ok((amp_rel_diff, phase_diff_deg)) => samples.push(DiffSample {
                        kind,
                        coefficient: name,
                        material: pt.material.name.clone(),
                        theta_i_deg: pt.theta_i_deg,
                        param: pt.param.clone(),
                        amp_rel_diff,
                        phase_diff_deg,
                    }),
                    Err(e) => skipped.push(skip(Some(name), e.to_string())),
                }
            }
            Outcome::Samples(samples, skipped)
        })
        .collect();

    let mut result = SweepResult::default();
    for o in outcomes {
        match o {
            Outcome::Samples(s, k) => {
                result.samples.extend(s);
                result.skipped.extend(k);
            }
            Outcome::Skipped(k) => result.skipped.push(k),
        }
    }
    Ok(result)
}

/// CSV with header
/// `kind,coefficient,material,theta_i_deg,param,amp_rel_diff,phase_diff_deg`.
pub fn write_sweep_csv<W: Write>(result: &SweepResult, mut out: W) -> std::io::Result<()> {
    writeln!(
        out,
        "kind,coefficient,material,theta_i_deg,param,amp_rel_diff,phase_diff_deg"
    )?;
    for s in &result.samples {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            s.kind.as_str(),
            s.coefficient,
            s.material,
            s.theta_i_deg,
            s.param,
            s.amp_rel_diff,
            s.phase_diff_deg
        )?;
    }
    Ok(())
}
