//! Scenario files, seeded sweeps and CSV persistence.

mod link;
mod rng;
mod scenario;
mod sweep;

pub use link::{FrameOutcome, LinkPoint, LinkSetup};
pub use rng::{frame_rng, Stream};
pub use scenario::{ChannelKind, DetectorKind, Method, NoiseModel, Scenario, PRESETS};
pub use sweep::{
    read_rows, run_sweep, CsvSink, SweepOptions, SweepRow, CENSORED, CSV_HEADER, FALLBACK,
};
