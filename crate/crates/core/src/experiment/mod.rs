//! Configuration, sweeps, bound verification and report output.

pub mod config;
pub mod eval;
pub mod plot;
pub mod sweep;
pub mod verify;

pub use config::{ExperimentConfig, Point, PriorPreset, Size, Sweep, SweepVar};
pub use eval::{eval_bounds_command, BoundTable};
pub use plot::render_svg;
pub use sweep::{read_csv, run_sweep, write_csv, SweepRow};
pub use verify::{verify_bounds, CheckStatus, VerifyReport};
