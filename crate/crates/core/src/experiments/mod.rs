//! Evaluation harness: Monte-Carlo BER, BER-vs-OSNR sweeps, required OSNR
//! at the FEC threshold, and plot tables.

mod ber;
mod dat;
mod sweep;

pub use ber::{measure_ber, BerCount, Scheme, StopRule};
pub use dat::{emit_dat, render_dat, DatTable};
pub use sweep::{
    ber_osnr_sweep, linewidth_label, required_osnr, CurvePoint, SweepPoint, SweepResult, SweepSpec,
    DEFAULT_FEC_THRESHOLD, STUDY_LINEWIDTHS_HZ,
};

use std::path::Path;

use crate::Result;

/// Writes `result` as pretty JSON.
pub fn write_result_json(result: &SweepResult, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(result)
        .map_err(|e| crate::Error::InvalidArgument(format!("serializing sweep result: {e}")))?;
    std::fs::write(path, text + "\n").map_err(|e| crate::Error::io(path, e))
}
