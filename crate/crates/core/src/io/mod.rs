//! Configuration parsing and on-disk formats.

mod band;
mod config;
mod manifest;
mod snapshot;

pub use band::{band_text, export_band};
pub use config::{
    parse_config, BasisConfig, ConfigError, ConfigErrors, GridConfig, QuantileConfig, RunConfig, RunMode, RunSection,
    SECTIONS,
};
pub use manifest::{Manifest, MANIFEST_FILE};
pub use snapshot::{read_snapshot, write_csv_slice, write_snapshot, ByteOrder, FieldSnapshot, FORMAT_VERSION, MAGIC};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed file: {0}")]
    Format(String),
    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("{0}")]
    Config(#[from] ConfigErrors),
}
