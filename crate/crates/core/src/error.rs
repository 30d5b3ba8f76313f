use thiserror::Error;

use crate::Point;

pub type Result<T, E = FlowError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("point {point:?} lies outside the closed domain")]
    OutsideDomain { point: Point },

    #[error(
        "point {point:?} lies outside the boundary band (d = {distance}, band width {band_width})"
    )]
    OutsideBand {
        point: Point,
        distance: f64,
        band_width: f64,
    },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("grid under-resolved: {0}")]
    Resolution(String),

    #[error("field state: {0}")]
    State(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error("boundary datum: {0}")]
    Datum(String),

    #[error("time step {dt} exceeds the stability bound {bound}")]
    Cfl { dt: f64, bound: f64 },

    #[error("non-finite value at node {node} (x = {point:?}) at t = {t}")]
    Instability { node: usize, point: Point, t: f64 },

    #[error("trace schema: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
