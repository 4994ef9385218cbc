//! Configuration-driven sweeps over encoding strategies and penalty
//! strengths, and the report files they produce.

pub mod config;
pub mod report;
pub mod sweep;

pub use config::{LoadedConfig, SweepConfig};
pub use report::{emit_report, Manifest};
pub use sweep::{run_sweep, SweepResult};

use qac_core::QacError;

/// Process exit status for an error: 1 for I/O, 2 for invalid input, 3 for
/// exceeded size caps and 4 for numerical failures.
pub fn exit_code(err: &QacError) -> u8 {
    match err {
        QacError::Io(_) => 1,
        QacError::Resource { .. } => 3,
        QacError::Numerical(_) => 4,
        _ => 2,
    }
}
