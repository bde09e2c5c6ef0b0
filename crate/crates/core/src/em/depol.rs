use std::ops::Mul;

use num_complex::Complex64;

use super::fresnel::{fresnel_coefficients, slab_transmission_total};
use crate::error::{Error, Result};
use crate::materials::Material;
use crate::wrap_phase;

/// 2×2 complex map from incident `(theta, phi)` polarization components to
/// scattered `(theta, phi)` components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepolarizationMatrix {
    pub a_tt: Complex64,
    pub a_tp: Complex64,
    pub a_pt: Complex64,
    pub a_pp: Complex64,
}

impl DepolarizationMatrix {
    pub fn new(a_tt: Complex64, a_tp: Complex64, a_pt: Complex64, a_pp: Complex64) -> Self {
        DepolarizationMatrix {
            a_tt,
            a_tp,
            a_pt,
            a_pp,
        }
    }

    pub fn identity() -> Self {
        Self::diag(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0))
    }

    pub fn diag(a_tt: Complex64, a_pp: Complex64) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Self::new(a_tt, zero, zero, a_pp)
    }

    /// Basis rotation `[[cos a, sin a], [-sin a, cos a]]`. Zero angle gives
    /// the exact identity.
    pub fn rotation(angle: f64) -> Self {
        if angle == 0.0 {
            return Self::identity();
        }
        let (s, c) = angle.sin_cos();
        Self::new(c.into(), s.into(), (-s).into(), c.into())
    }

    /// Entries in row-major order `[a_tt, a_tp, a_pt, a_pp]`.
    pub fn entries(&self) -> [Complex64; 4] {
        [self.a_tt, self.a_tp, self.a_pt, self.a_pp]
    }

    pub fn is_finite(&self) -> bool {
        self.entries().iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `self * [theta, phi]^T`.
    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.a_tt * v[0] + self.a_tp * v[1],
            self.a_pt * v[0] + self.a_pp * v[1],
        ]
    }

    fn rotated(self, rot_in: f64, rot_out: f64) -> Self {
        if rot_in == 0.0 && rot_out == 0.0 {
            return self;
        }
        Self::rotation(rot_out) * self * Self::rotation(rot_in)
    }
}

impl Mul for DepolarizationMatrix {
    type Output = DepolarizationMatrix;

    fn mul(self, o: Self) -> Self {
        Self::new(
            self.a_tt * o.a_tt + self.a_tp * o.a_pt,
            self.a_tt * o.a_tp + self.a_tp * o.a_pp,
            self.a_pt * o.a_tt + self.a_pp * o.a_pt,
            self.a_pt * o.a_tp + self.a_pp * o.a_pp,
        )
    }
}

/// Per-path stochastic depolarization: linear XPR and four phases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StochasticDepolParams {
    pub xpr_linear: f64,
    /// `[tt, tp, pt, pp]` phases in radians.
    pub phases: [f64; 4],
}

impl StochasticDepolParams {
    /// Validates the XPR and wraps the phases to (-pi, pi].
    pub fn new(xpr_linear: f64, phases: [f64; 4]) -> Result<Self> {
        if !(xpr_linear > 0.0 && xpr_linear.is_finite()) {
            return Err(Error::Range {
                field: "xpr".into(),
                value: xpr_linear,
                expected: "> 0 (linear)",
            });
        }
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("stochastic phases"));
        }
        Ok(StochasticDepolParams {
            xpr_linear,
            phases: phases.map(wrap_phase),
        })
    }
}

/// `Rot(rot_out) · diag(R_par, R_perp) · Rot(rot_in)` for a specular
/// reflection from `m1` off `m2`.
pub fn reflection_depolarization_matrix(
    theta_i: f64,
    m1: &Material,
    m2: &Material,
    f_hz: f64,
    rot_in: f64,
    rot_out: f64,
) -> Result<DepolarizationMatrix> {
    let c = fresnel_coefficients(theta_i, m1, m2, f_hz)?;
    Ok(DepolarizationMatrix::diag(c.r_par, c.r_perp).rotated(rot_in, rot_out))
}

/// Same construction as the reflection matrix with total slab transmission
/// coefficients on the diagonal.
pub fn slab_depolarization_matrix(
    theta_i: f64,
    outer: &Material,
    slab: &Material,
    thickness_m: f64,
    f_hz: f64,
    rot_in: f64,
    rot_out: f64,
) -> Result<DepolarizationMatrix> {
    let (t_par, t_perp) = slab_transmission_total(theta_i, outer, slab, thickness_m, f_hz)?;
    Ok(DepolarizationMatrix::diag(t_par, t_perp).rotated(rot_in, rot_out))
}

pub fn stochastic_depolarization_matrix(p: &StochasticDepolParams) -> DepolarizationMatrix {
    let cross = (1.0 / p.xpr_linear).sqrt();
    let [tt, tp, pt, pp] = p.phases;
    DepolarizationMatrix::new(
        Complex64::from_polar(1.0, tt),
        Complex64::from_polar(cross, tp),
        Complex64::from_polar(cross, pt),
        Complex64::from_polar(1.0, pp),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn reflection_without_rotation_is_diagonal() {
        let air = Material::vacuum();
        let m = Material::dielectric("c", 5.31);
        let a = reflection_depolarization_matrix(0.6, &air, &m, 1.8e9, 0.0, 0.0).unwrap();
        let f = fresnel_coefficients(0.6, &air, &m, 1.8e9).unwrap();
        assert_eq!(a.a_tt, f.r_par);
        assert_eq!(a.a_pp, f.r_perp);
        assert_eq!(a.a_tp, c(0.0, 0.0));
        assert_eq!(a.a_pt, c(0.0, 0.0));
    }

    #[test]
    fn flat_material_reflection_is_carrier_independent() {
        let air = Material::vacuum();
        let m = Material::dielectric("glass", 6.27);
        let ul = reflection_depolarization_matrix(0.9, &air, &m, 1.8e9, 0.2, -0.4).unwrap();
        let dl = reflection_depolarization_matrix(0.9, &air, &m, 1.99e9, 0.2, -0.4).unwrap();
        assert_eq!(ul, dl);
    }

    #[test]
    fn quarter_turn_input_rotation_swaps_columns() {
        let air = Material::vacuum();
        let m = Material::dielectric("c", 4.0);
        let base = reflection_depolarization_matrix(0.5, &air, &m, 1.8e9, 0.0, 0.0).unwrap();
        let rot = reflection_depolarization_matrix(0.5, &air, &m, 1.8e9, FRAC_PI_2, 0.0).unwrap();
        // diag(a, b) * [[0, 1], [-1, 0]] = [[0, a], [-b, 0]]
        let tol = 1e-15;
        assert!(rot.a_tt.norm() < tol);
        assert!((rot.a_tp - base.a_tt).norm() < tol);
        assert!((rot.a_pt + base.a_pp).norm() < tol);
        assert!(rot.a_pp.norm() < tol);
    }

    #[test]
    fn stochastic_examples() {
        let big = StochasticDepolParams::new(1e12, [0.3, 0.1, -0.2, 1.0]).unwrap();
        let a = stochastic_depolarization_matrix(&big);
        assert!(a.a_tp.norm() < 1e-5 && a.a_pt.norm() < 1e-5);
        assert!((a.a_tt.norm() - 1.0).abs() < 1e-15 && (a.a_pp.norm() - 1.0).abs() < 1e-15);

        let ones = stochastic_depolarization_matrix(&StochasticDepolParams::new(1.0, [0.0; 4]).unwrap());
        for e in ones.entries() {
            assert_eq!(e, c(1.0, 0.0));
        }

        let p = StochasticDepolParams::new(4.0, [0.0, FRAC_PI_2, 0.0, 0.0]).unwrap();
        let a = stochastic_depolarization_matrix(&p);
        assert!((a.a_tp - c(0.0, 0.5)).norm() < 1e-16);
    }

    #[test]
    fn stochastic_params_validate_and_wrap() {
        assert!(StochasticDepolParams::new(0.0, [0.0; 4]).is_err());
        assert!(StochasticDepolParams::new(-1.0, [0.0; 4]).is_err());
        let p = StochasticDepolParams::new(2.0, [3.0 * std::f64::consts::PI, 0.0, 0.0, 0.0]).unwrap();
        assert!((p.phases[0] - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn product_is_associative_with_identity() {
        let a = DepolarizationMatrix::new(c(1.0, 2.0), c(0.5, 0.0), c(0.0, -1.0), c(2.0, 1.0));
        assert_eq!(a * DepolarizationMatrix::identity(), a);
        assert_eq!(DepolarizationMatrix::identity() * a, a);
        let v = a.apply([c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(v, [a.a_tt, a.a_pt]);
    }
}
