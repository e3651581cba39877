//! Experiment harness around `d2dsgd-core`: configuration files, data and
//! schedule formats, F* caching, parallel sweeps and figure data.

pub mod cache;
pub mod config;
pub mod experiment;
pub mod figures;
pub mod formats;
pub mod spec;
pub mod sweep;

/// Version string stamped into run metadata.
pub fn version() -> String {
    match option_env!("D2DSGD_GIT_DESCRIBE") {
        Some(desc) => desc.to_string(),
        None => format!("v{}", env!("CARGO_PKG_VERSION")),
    }
}
