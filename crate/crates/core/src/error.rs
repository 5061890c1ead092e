use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("the two lines coincide")]
    IdenticalLines,
    #[error("point is not collinear with the side it is decomposed on")]
    NotOnSide,
    #[error("side-point decomposition is degenerate (point coincides with the next vertex)")]
    DegenerateDecomposition,
    #[error("chord intersection is at or near infinity")]
    ParallelChords,
    #[error("closed loop is malformed: {0}")]
    InvalidLoop(String),

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("fewer than 4 parallel chords span both arcs")]
    InsufficientSpan,
    #[error("fewer than 2 finite midline intersections")]
    DegenerateCenter,
    #[error("fitted conic is not an ellipse")]
    NotAnEllipse,
    #[error("conic normal equations are ill-conditioned (condition number {0:.3e})")]
    IllConditioned(f64),

    #[error("scene element lies outside the {width}x{height} frame")]
    OutOfFrame { width: usize, height: usize },

    #[error("{}:{line}: {message}", file.display())]
    DatasetFormat {
        file: PathBuf,
        line: usize,
        message: String,
    },
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
