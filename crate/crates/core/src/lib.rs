//! Dual-polarized multipath channel simulation and FDD uplink/downlink
//! reciprocity analysis.
//!
//! The crate is organized bottom-up:
//!
//! - [`materials`]: frequency-parameterized media.
//! - [`em`]: Fresnel reflection/transmission, slab transmission, UTD wedge
//!   diffraction and the 2×2 depolarization matrices built from them.
//! - [`channel`]: multipath components, array steering vectors, the
//!   dual-polarized narrowband channel matrix and wideband CIR synthesis.
//! - [`analysis`]: dual-carrier coefficient sweeps and empirical CDFs.
//! - [`estimation`]: averaged power delay profile, Bartlett angle spectrum,
//!   peak extraction and UL/DL peak matching.
//! - [`io`]: scenario parsing, the binary dataset format and atomic output.
//! - [`cli`]: the `fdd-reciprocity` command-line front end.

pub mod analysis;
pub mod channel;
pub mod cli;
pub mod em;
pub mod error;
pub mod estimation;
pub mod io;
pub mod materials;

pub use error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Wraps an angle in radians to (-pi, pi].
pub fn wrap_phase(x: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let r = x.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}
