//! Ellipse detection from edge arcs with projective-invariant pruning.
//!
//! Pipeline:
//! 1. Gaussian smoothing and Canny edges tagged with gradient slope ([`edges`]).
//! 2. Linking into arcs, pruning short and straight arcs, quadrant labeling ([`arcs`]).
//! 3. Three-arc combinations filtered by coordinate rules and the characteristic
//!    number of six conic points ([`selection`], [`projective`]).
//! 4. Center from parallel-chord midlines, axes from a central conic fit ([`fitting`]).
//! 5. Support-based validation and duplicate clustering ([`validation`]).
//!
//! [`synth`] and [`eval`] generate test scenes and score detections.

pub mod arcs;
pub mod detector;
pub mod edges;
pub mod error;
pub mod eval;
pub mod fitting;
pub mod image;
pub mod projective;
pub mod robust;
pub mod selection;
pub mod synth;
pub mod validation;

pub use detector::{Detection, DetectionReport, Detector, DetectorConfig, StageTimings};
pub use error::{Error, Result};
pub use fitting::EllipseParams;
pub use image::GrayImage;
