//! Dual-polarized multipath MIMO channel synthesis.
//!
//! Element ordering inside every array response is polarization-major: all
//! patches of the first polarization, then all patches of the second. This
//! matches the block structure of the 2M × 2N channel matrix and of the
//! Bartlett steering vector.

mod array;
mod path;
mod synth;

pub use array::{steering_vector, ArrayGeometry, FieldPattern};
pub use path::{
    path_delay, polarimetric_path_gain, DepolSource, Interaction, MultipathComponent, PathRecord,
};
pub use synth::{
    narrowband_channel_matrix, path_records, synthesize_cir, ChannelDataset, NoiseSpec,
};
