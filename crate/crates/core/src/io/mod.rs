//! File formats: NPY volumes, case manifests, run configuration and reports.

pub mod config;
pub mod manifest;
pub mod npy;
pub mod report;
pub mod volume;

pub use config::{BootstrapConfig, Config, MethodConfig};
pub use manifest::{read_manifest, Manifest, ManifestRow};
pub use report::{emit_report, EvalReport, LedgerEntry, MethodSummary};
pub use volume::{read_volume, write_volume, Volume, VolumeMeta};

/// Quote a CSV field when it contains a separator, quote or line break.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
