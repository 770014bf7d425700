//! Resource grids, target scenes and synthesis of the compressed channel
//! measurement `h_s`.

mod channel;
mod grid;
mod resources;
mod units;

pub use channel::{
    atom, atom_into, synthesize_channel, ChannelVector, Constellation, ModSymbolGrid, Scene,
    SynthesisPath, TargetTruth,
};
pub use grid::{GridConfig, SPEED_OF_LIGHT};
pub use resources::{select_resources, ResourceMode, ResourceSet};
pub use units::{
    delay_doppler_to_range_velocity, doppler_to_velocity, range_to_delay,
    range_velocity_to_delay_doppler, velocity_to_doppler,
};
