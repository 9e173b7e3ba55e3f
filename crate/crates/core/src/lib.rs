//! Second-order interference of chaotic light through two distant double-slit masks.
//!
//! - [`model`]: geometry, units and validation shared by every engine.
//! - [`analytic`]: closed-form first-order cross-correlation and correlation maps.
//! - [`speckle`]: Monte Carlo chaotic-source realizations propagated to point detectors.
//! - [`correlator`]: streaming intensity moments, fluctuation correlations, jackknife errors.
//! - [`fringe`]: fringe fitting and inversion of periods and shifts into mask geometry.

pub mod analytic;
pub mod correlator;
pub mod fringe;
pub mod model;
pub mod quadrature;
pub mod speckle;

pub use analytic::{ComplexAmplitude, Illumination, Normalization, PathMode};
pub use model::{
    Aperture, DetectorSpec, DoubleSlitMask, MaskLabel, ModelError, OpticalSetup, ScanAxis, ScanGrid,
    SingleSlit, SourceProfile, SourceShape,
};
