//! Replay of recorded channel matrices: file formats, background
//! subtraction, coherent blocks on a fixed Ω_s, and a rotating-target
//! recording synthesiser for end-to-end checks.

mod background;
mod blocks;
mod carousel;
mod recording;

pub use background::{background_subtract, BackgroundState, DEFAULT_FORGETTING};
pub use blocks::{block_stream, BlockStream};
pub use carousel::{synthesize_carousel, CarouselConfig, CarouselRecording, SphereState};
pub use recording::{load_recording, read_csv, read_raw, save_recording, write_csv, write_raw, ChannelRecording, RecordingFormat, RecordingMeta, RAW_MAGIC};
