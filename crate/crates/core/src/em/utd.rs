//! Uniform theory of diffraction for a straight wedge.
//!
//! Soft and hard coefficients follow the four-cotangent Kouyoumjian–Pathak
//! form. For dielectric faces the two reflection-boundary terms are weighted
//! by the face reflection coefficients (Luebbers' heuristic); perfectly
//! conducting faces reduce to the classical `-1` / `+1` weights.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use num_complex::Complex64;

use super::depol::DepolarizationMatrix;
use super::fresnel::fresnel_coefficients;
use crate::error::{Error, Result};
use crate::materials::Material;
use crate::SPEED_OF_LIGHT;

/// |sin| of a cotangent argument below which the direction counts as lying
/// on a boundary pole.
const POLE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum FaceMaterial {
    Pec,
    Dielectric(Material),
}

/// Wedge and observation geometry for one diffraction point.
///
/// Angles are measured from the 0-face, the exterior wedge angle is
/// `n_wedge * pi`. `faces[0]` is the 0-face, `faces[1]` the n-face.
/// `rot_in`/`rot_out` rotate between the edge-fixed and the path's spherical
/// polarization bases.
#[derive(Debug, Clone, PartialEq)]
pub struct WedgeGeometry {
    pub n_wedge: f64,
    pub phi_inc: f64,
    pub phi_dif: f64,
    pub beta0: f64,
    pub l_dist: f64,
    pub faces: [FaceMaterial; 2],
    pub rot_in: f64,
    pub rot_out: f64,
}

impl WedgeGeometry {
    pub fn validate(&self) -> Result<()> {
        let range = |field: &str, value: f64, expected: &'static str| Error::Range {
            field: field.into(),
            value,
            expected,
        };
        let n = self.n_wedge;
        if !(n > 1.0 && n <= 2.0) {
            return Err(range("n_wedge", n, "(1, 2]"));
        }
        let open = |v: f64| v > 0.0 && v < n * PI;
        if !open(self.phi_inc) {
            return Err(range("phi_inc", self.phi_inc, "(0, n*pi)"));
        }
        if !open(self.phi_dif) {
            return Err(range("phi_dif", self.phi_dif, "(0, n*pi)"));
        }
        if !(self.beta0 > 0.0 && self.beta0 < PI) {
            return Err(range("beta0", self.beta0, "(0, pi)"));
        }
        if !(self.l_dist > 0.0 && self.l_dist.is_finite()) {
            return Err(range("l_dist", self.l_dist, "> 0"));
        }
        if !(self.rot_in.is_finite() && self.rot_out.is_finite()) {
            return Err(Error::NonFinite("wedge basis rotation"));
        }
        Ok(())
    }
}

/// Fresnel integral pair `(C(u), S(u))` with the `pi t^2 / 2` kernel,
/// power series; accurate for `u <= 1.5`.
fn fresnel_cs_series(u: f64) -> (f64, f64) {
    let z = FRAC_PI_2 * u * u;
    // term_k = (-1)^k z^k / k! * u, split by parity into C and S
    let (mut c, mut s) = (0.0, 0.0);
    let mut term = u;
    let mut k = 0u32;
    loop {
        let contrib = term / f64::from(2 * k + 1);
        match k % 4 {
            0 => c += contrib,
            1 => s += contrib,
            2 => c -= contrib,
            _ => s -= contrib,
        }
        if contrib.abs() < 1e-17 * (c.abs() + s.abs()).max(1e-300) && k > 2 {
            break;
        }
        k += 1;
        term *= z / f64::from(k);
    }
    (c, s)
}

/// `(1/2 - C(u)) + j (1/2 - S(u))` for `u > 1.5`, by the modified Lentz
/// evaluation of the complementary error function continued fraction.
fn fresnel_complement_cf(u: f64) -> Complex64 {
    const TINY: f64 = 1e-300;
    let pix2 = PI * u * u;
    let one = Complex64::new(1.0, 0.0);
    let mut b = Complex64::new(1.0, -pix2);
    let mut cc = Complex64::new(1.0 / TINY, 0.0);
    let mut d = one / b;
    let mut h = d;
    let mut n = -1.0;
    for _ in 2..200 {
        n += 2.0;
        let a = -n * (n + 1.0);
        b += 4.0;
        d = one / (d * a + b);
        cc = b + Complex64::new(a, 0.0) / cc;
        let del = cc * d;
        h *= del;
        if (del.re - 1.0).abs() + del.im.abs() < 1e-16 {
            break;
        }
    }
    h *= Complex64::new(u, -u);
    Complex64::new(0.5, 0.5) * Complex64::from_polar(1.0, 0.5 * pix2) * h
}

/// `integral_{sqrt(x)}^{inf} exp(-j tau^2) d tau`.
fn fresnel_tail(x: f64) -> Complex64 {
    let u = (2.0 * x / PI).sqrt();
    let complement = if u <= 1.5 {
        let (c, s) = fresnel_cs_series(u);
        Complex64::new(0.5 - c, 0.5 - s)
    } else {
        fresnel_complement_cf(u)
    };
    (PI / 2.0).sqrt() * complement.conj()
}

/// UTD transition function
/// `F(x) = 2j sqrt(x) e^{jx} integral_{sqrt(x)}^{inf} e^{-j tau^2} d tau`.
pub fn fresnel_transition_function(x: f64) -> Complex64 {
    debug_assert!(x >= 0.0, "transition function argument must be >= 0");
    if x <= 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    Complex64::new(0.0, 2.0 * x.sqrt()) * Complex64::from_polar(1.0, x) * fresnel_tail(x)
}

/// `a^{±}(beta) = 2 cos^2((2 n pi N - beta) / 2)` with `N` the integer that
/// most nearly satisfies `2 pi n N - beta = ±pi`.
fn a_pm(beta: f64, n: f64, sign: f64) -> f64 {
    let big_n = ((beta + sign * PI) / (TAU * n)).round();
    let c = ((TAU * n * big_n - beta) / 2.0).cos();
    2.0 * c * c
}

fn cot_checked(arg: f64, beta: f64) -> Result<f64> {
    let s = arg.sin();
    if s.abs() < POLE_TOLERANCE {
        return Err(Error::ShadowBoundaryPole { beta });
    }
    Ok(arg.cos() / s)
}

/// Soft and hard face reflection coefficients for a grazing angle `psi`
/// measured from the face.
fn face_reflection(face: &FaceMaterial, psi: f64, f_hz: f64) -> Result<(f64, f64)> {
    match face {
        FaceMaterial::Pec => Ok((-1.0, 1.0)),
        FaceMaterial::Dielectric(m) => {
            let cos_i = psi.sin().abs().min(1.0);
            if cos_i < 1e-12 {
                return Ok((-1.0, -1.0));
            }
            let theta_i = cos_i.acos().min(FRAC_PI_2 - 1e-12);
            let c = fresnel_coefficients(theta_i, &Material::vacuum(), m, f_hz)?;
            // hard weight is the H-field ratio, opposite in sign to r_par
            Ok((c.r_perp.re, -c.r_par.re))
        }
    }
}

/// Diffraction coefficient matrix for one wedge interaction.
///
/// Soft (`D_s`) and hard (`D_h`) coefficients sit on the diagonal of the
/// edge-fixed matrix, which is then rotated by `rot_in`/`rot_out`.
pub fn utd_diffraction_matrix(g: &WedgeGeometry, f_hz: f64) -> Result<DepolarizationMatrix> {
    g.validate()?;
    let n = g.n_wedge;
    let k = TAU * f_hz / SPEED_OF_LIGHT;
    let kl = k * g.l_dist;

    let beta_m = g.phi_dif - g.phi_inc;
    let beta_p = g.phi_dif + g.phi_inc;

    let term = |beta: f64, sign: f64| -> Result<Complex64> {
        let cot = cot_checked((PI + sign * beta) / (2.0 * n), beta)?;
        Ok(cot * fresnel_transition_function(kl * a_pm(beta, n, sign)))
    };
    let incident = term(beta_m, 1.0)? + term(beta_m, -1.0)?;
    let refl_0 = term(beta_p, -1.0)?;
    let refl_n = term(beta_p, 1.0)?;

    let (r0_soft, r0_hard) = face_reflection(&g.faces[0], g.phi_inc, f_hz)?;
    let (rn_soft, rn_hard) = face_reflection(&g.faces[1], n * PI - g.phi_dif, f_hz)?;

    let prefactor = -Complex64::from_polar(1.0, -FRAC_PI_4)
        / (2.0 * n * (TAU * k).sqrt() * g.beta0.sin());
    let d_soft = prefactor * (incident + r0_soft * refl_0 + rn_soft * refl_n);
    let d_hard = prefactor * (incident + r0_hard * refl_0 + rn_hard * refl_n);

    let m = DepolarizationMatrix::rotation(g.rot_out)
        * DepolarizationMatrix::diag(d_soft, d_hard)
        * DepolarizationMatrix::rotation(g.rot_in);
    if !m.is_finite() {
        return Err(Error::NonFinite("diffraction coefficient"));
    }
    Ok(m)
}
