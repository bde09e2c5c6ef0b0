use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::materials::Material;
use crate::SPEED_OF_LIGHT;

/// Fresnel coefficients of a single planar interface.
///
/// Parallel-polarization reflection uses the convention with a leading minus
/// on the incident-side term, so both reflection coefficients equal
/// `(eta2 - eta1) / (eta2 + eta1)` at normal incidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FresnelSet {
    pub r_par: Complex64,
    pub r_perp: Complex64,
    pub t_par: Complex64,
    pub t_perp: Complex64,
}

pub(crate) fn check_incidence(theta_i: f64) -> Result<()> {
    if (0.0..FRAC_PI_2).contains(&theta_i) {
        Ok(())
    } else {
        Err(Error::Range {
            field: "theta_i".into(),
            value: theta_i,
            expected: "[0, pi/2) rad",
        })
    }
}

/// Transmission angle from Snell's law.
pub fn snell_angle(theta_i: f64, m1: &Material, m2: &Material, f_hz: f64) -> Result<f64> {
    check_incidence(theta_i)?;
    let n1 = m1.refractive_index(f_hz);
    let n2 = m2.refractive_index(f_hz);
    if n1 == n2 {
        return Ok(theta_i);
    }
    let s = n1 / n2 * theta_i.sin();
    if s > 1.0 {
        return Err(Error::TotalInternalReflection(s));
    }
    Ok(s.asin())
}

/// Reflection and transmission coefficients for a wave going from `m1`
/// into `m2` at incidence angle `theta_i`.
pub fn fresnel_coefficients(
    theta_i: f64,
    m1: &Material,
    m2: &Material,
    f_hz: f64,
) -> Result<FresnelSet> {
    let theta_t = snell_angle(theta_i, m1, m2, f_hz)?;
    let eta1 = m1.relative_impedance(f_hz);
    let eta2 = m2.relative_impedance(f_hz);
    let (ci, ct) = (theta_i.cos(), theta_t.cos());

    let den_par = eta1 * ci + eta2 * ct;
    let den_perp = eta2 * ci + eta1 * ct;
    let r_par = (-eta1 * ci + eta2 * ct) / den_par;
    let r_perp = (eta2 * ci - eta1 * ct) / den_perp;
    let t_par = 2.0 * eta2 * ci / den_par;
    let t_perp = 2.0 * eta2 * ci / den_perp;

    Ok(FresnelSet {
        r_par: r_par.into(),
        r_perp: r_perp.into(),
        t_par: t_par.into(),
        t_perp: t_perp.into(),
    })
}

/// Single-pass transmission through a slab of `slab` embedded in `outer`.
///
/// Returns `(T_par, T_perp)`, each the product of the entry interface
/// coefficient, the in-slab propagation phase
/// `exp(-j k_slab thickness / cos theta_t)` and the exit interface
/// coefficient. Multiple internal reflections are not summed.
pub fn slab_transmission_total(
    theta_i: f64,
    outer: &Material,
    slab: &Material,
    thickness_m: f64,
    f_hz: f64,
) -> Result<(Complex64, Complex64)> {
    if !(thickness_m > 0.0 && thickness_m.is_finite()) {
        return Err(Error::Range {
            field: "thickness_m".into(),
            value: thickness_m,
            expected: "> 0",
        });
    }
    let entry = fresnel_coefficients(theta_i, outer, slab, f_hz)?;
    let theta_t = snell_angle(theta_i, outer, slab, f_hz)?;
    let exit = fresnel_coefficients(theta_t, slab, outer, f_hz)?;

    let k_slab = 2.0 * std::f64::consts::PI * f_hz * slab.refractive_index(f_hz) / SPEED_OF_LIGHT;
    let phase = Complex64::from_polar(1.0, -k_slab * thickness_m / theta_t.cos());

    Ok((
        entry.t_par * phase * exit.t_par,
        entry.t_perp * phase * exit.t_perp,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::MaterialDb;
    use crate::wrap_phase;

    fn diel(eps: f64) -> Material {
        Material::dielectric("d", eps)
    }

    const F: f64 = 1.8e9;

    #[test]
    fn snell_examples() {
        let m = diel(3.0);
        assert_eq!(snell_angle(0.3, &m, &m, F).unwrap(), 0.3);

        let t = snell_angle(30f64.to_radians(), &diel(1.0), &diel(4.0), F).unwrap();
        assert!((t.to_degrees() - 14.477_512_185_929_925).abs() < 1e-9);
        assert!((t - 0.25f64.asin()).abs() < 1e-15);

        assert!(matches!(
            snell_angle(60f64.to_radians(), &diel(4.0), &diel(1.0), F),
            Err(Error::TotalInternalReflection(_))
        ));
        assert!(snell_angle(FRAC_PI_2, &diel(1.0), &diel(4.0), F).is_err());
    }

    #[test]
    fn normal_incidence() {
        let c = fresnel_coefficients(0.0, &diel(1.0), &diel(4.0), F).unwrap();
        for (v, want) in [
            (c.r_par, -1.0 / 3.0),
            (c.r_perp, -1.0 / 3.0),
            (c.t_par, 2.0 / 3.0),
            (c.t_perp, 2.0 / 3.0),
        ] {
            assert!((v - want).norm() < 1e-12, "{v} vs {want}");
        }
    }

    #[test]
    fn brewster_null() {
        let theta_b = (2.25f64).sqrt().atan();
        assert!((theta_b.to_degrees() - 56.309_932_474_020_215).abs() < 1e-9);
        let c = fresnel_coefficients(theta_b, &diel(1.0), &diel(2.25), F).unwrap();
        assert!(c.r_par.norm() < 1e-10);
        assert!(c.r_perp.norm() > 0.1);
    }

    #[test]
    fn identical_media() {
        let m = diel(5.31);
        for deg in [0.0, 10.0, 45.0, 80.0] {
            let c = fresnel_coefficients(f64::to_radians(deg), &m, &m, F).unwrap();
            assert_eq!(c.r_par.norm(), 0.0);
            assert_eq!(c.r_perp.norm(), 0.0);
            assert!((c.t_par - 1.0).norm() < 1e-15);
            assert!((c.t_perp - 1.0).norm() < 1e-15);
        }
    }

    #[test]
    fn identities_and_energy_bound_on_grid() {
        let db = MaterialDb::builtin();
        let air = Material::vacuum();
        for m in &db {
            for deg in 0..90 {
                let ti = f64::from(deg).to_radians();
                for f in [1.8e9, 1.99e9] {
                    let c = fresnel_coefficients(ti, &air, m, f).unwrap();
                    let tt = snell_angle(ti, &air, m, f).unwrap();
                    let perp = c.t_perp - (1.0 + c.r_perp);
                    let par = c.t_par - (1.0 + c.r_par) * ti.cos() / tt.cos();
                    assert!(perp.norm() <= 1e-12 * c.t_perp.norm().max(1.0));
                    assert!(par.norm() <= 1e-12 * c.t_par.norm().max(1.0));
                    assert!(c.r_par.norm() <= 1.0 && c.r_perp.norm() <= 1.0);
                    assert_eq!(c.r_par.im, 0.0);
                }
            }
        }
    }

    #[test]
    fn slab_of_outer_medium_is_pure_phase() {
        let air = Material::vacuum();
        let (tp, ts) = slab_transmission_total(0.0, &air, &air, 0.1, F).unwrap();
        let k = 2.0 * std::f64::consts::PI * F / SPEED_OF_LIGHT;
        let want = Complex64::from_polar(1.0, -k * 0.1);
        assert!((tp - want).norm() < 1e-12);
        assert!((ts - want).norm() < 1e-12);
    }

    #[test]
    fn concrete_slab_phase_shift_between_carriers() {
        let air = Material::vacuum();
        let concrete = diel(5.31);
        let (ul, _) = slab_transmission_total(0.0, &air, &concrete, 0.1, 1.8e9).unwrap();
        let (dl, _) = slab_transmission_total(0.0, &air, &concrete, 0.1, 1.99e9).unwrap();
        let dphi = wrap_phase(dl.arg() - ul.arg()).to_degrees();
        // -2*pi*0.19e9*sqrt(5.31)*0.1/c in degrees
        let analytic = -52.575_408_933_824_42;
        assert!((dphi - analytic).abs() < 1e-6, "{dphi}");
        assert_eq!(ul.norm(), dl.norm());
    }

    #[test]
    fn oblique_slab_matches_hand_composition() {
        // theta_i = 45 deg, eps = 4, 5 cm, composed step by step
        let f = 1.8e9;
        let ti = std::f64::consts::FRAC_PI_4;
        let n = 2.0_f64;
        let tt = (ti.sin() / n).asin();
        let (ci, ct) = (ti.cos(), tt.cos());
        let (e1, e2) = (1.0, 0.5);
        let t1_par = 2.0 * e2 * ci / (e1 * ci + e2 * ct);
        let t1_perp = 2.0 * e2 * ci / (e2 * ci + e1 * ct);
        let t2_par = 2.0 * e1 * ct / (e2 * ct + e1 * ci);
        let t2_perp = 2.0 * e1 * ct / (e1 * ct + e2 * ci);
        let k = 2.0 * std::f64::consts::PI * f * n / SPEED_OF_LIGHT;
        let p = Complex64::from_polar(1.0, -k * 0.05 / ct);

        let (tp, ts) =
            slab_transmission_total(ti, &Material::vacuum(), &diel(4.0), 0.05, f).unwrap();
        assert!((tp - p * t1_par * t2_par).norm() < 1e-12);
        assert!((ts - p * t1_perp * t2_perp).norm() < 1e-12);
    }

    #[test]
    fn slab_rejects_bad_thickness() {
        let air = Material::vacuum();
        assert!(slab_transmission_total(0.0, &air, &diel(4.0), 0.0, F).is_err());
    }
}
