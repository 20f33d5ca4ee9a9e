use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid mesh geometry: {0}")]
    Geometry(String),

    #[error("field has {actual} values but geometry requires {expected}")]
    FieldLength { expected: usize, actual: usize },

    #[error("field contains a non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("invalid stencil kernel: {0}")]
    Kernel(String),

    #[error("invalid pipeline: {0}")]
    Pipeline(String),

    #[error("invalid resource profile: {0}")]
    Profile(String),

    #[error("invalid design point: {0}")]
    Design(String),

    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("tile {tile} is not larger than the overlap p*D = {overlap}")]
    TileTooSmall { tile: u64, overlap: u64 },

    #[error("tile {tile} is not a multiple of the vector factor {vector}")]
    TileMisaligned { tile: u64, vector: u32 },

    #[error(
        "window buffers need {required} bytes but only {available} bytes of on-chip memory \
         are usable (p_mem = {p_mem}, requested p = {unroll})"
    )]
    CapacityExceeded {
        required: u64,
        available: u64,
        p_mem: u64,
        unroll: u32,
    },

    #[error("no feasible design: {binding}")]
    NoFeasibleDesign { binding: String },
}

pub type Result<T> = std::result::Result<T, Error>;
