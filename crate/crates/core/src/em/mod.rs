//! Electromagnetic interaction coefficients and depolarization matrices.
//!
//! All angles are radians. The exterior medium for every interaction built
//! by the channel module is vacuum.

mod depol;
mod fresnel;
mod utd;

pub use depol::{
    reflection_depolarization_matrix, slab_depolarization_matrix,
    stochastic_depolarization_matrix, DepolarizationMatrix, StochasticDepolParams,
};
pub use fresnel::{fresnel_coefficients, slab_transmission_total, snell_angle, FresnelSet};
pub use utd::{
    fresnel_transition_function, utd_diffraction_matrix, FaceMaterial, WedgeGeometry,
};
