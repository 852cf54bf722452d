//! File formats, SVG rendering, the fixture catalog and the stepping
//! service around `tilt-core`.

pub mod check;
pub mod fixtures;
pub mod json;
pub mod placed;
pub mod server;
pub mod svg;

use tilt_core::{twf, Workspace};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Twf,
    Json,
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("TWF: {0}")]
    Twf(#[from] twf::TwfError),
    #[error(transparent)]
    Json(#[from] json::JsonError),
}

/// JSON when the text starts with `{`, TWF otherwise.
pub fn detect(text: &str) -> Format {
    if text.trim_start().starts_with('{') {
        Format::Json
    } else {
        Format::Twf
    }
}

pub fn load_workspace(text: &str) -> Result<Workspace, LoadError> {
    match detect(text) {
        Format::Json => Ok(json::parse(text)?),
        Format::Twf => Ok(twf::parse(text)?),
    }
}

pub fn serialize_workspace(w: &Workspace, f: Format) -> Result<String, LoadError> {
    match f {
        Format::Json => Ok(json::serialize(w)),
        Format::Twf => Ok(twf::serialize(w)?),
    }
}
