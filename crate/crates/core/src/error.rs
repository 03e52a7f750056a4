use std::path::PathBuf;

use thiserror::Error;

use crate::group::Geometry;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite input in {0}")]
    NonFinite(&'static str),

    #[error("point of geometry {found:?} used in a {expected:?} space")]
    GeometryMismatch { expected: Geometry, found: Geometry },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("not supported: {0}")]
    Unsupported(String),

    #[error("degenerate chart at ({u}, {v}): det I = {det:e}")]
    DegenerateChart { u: f64, v: f64, det: f64 },

    #[error("vector field is not Killing (residual {0:e})")]
    NotKilling(f64),

    #[error("{what} did not converge (last residual {residual:e})")]
    NoConvergence { what: String, residual: f64 },

    #[error("profile did not close at H = {h}: {reason}")]
    NoClosure { h: f64, reason: String },

    #[error("{0}")]
    BoundaryMismatch(String),

    #[error("{what} is not unit length (|.| = {norm})")]
    NonUnit { what: &'static str, norm: f64 },

    #[error("non-symmetric assembly (asymmetry {0:e})")]
    NonSymmetric(f64),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for failures of a numerical procedure (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. } | Error::NoClosure { .. } | Error::DegenerateChart { .. } | Error::NonSymmetric(_)
        )
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonFinite(_) => "non_finite",
            Error::GeometryMismatch { .. } => "geometry_mismatch",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Unsupported(_) => "unsupported",
            Error::DegenerateChart { .. } => "degenerate_chart",
            Error::NotKilling(_) => "not_killing",
            Error::NoConvergence { .. } => "no_convergence",
            Error::NoClosure { .. } => "no_closure",
            Error::BoundaryMismatch(_) => "boundary_mismatch",
            Error::NonUnit { .. } => "non_unit",
            Error::NonSymmetric(_) => "non_symmetric",
            Error::Io { .. } => "io",
            Error::Parse(_) => "parse",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
