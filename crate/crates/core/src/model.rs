//! Geometry, units and validated configuration types shared by every engine.
//!
//! All lengths are meters as `f64`. The transverse model is one-dimensional: every
//! position below is a coordinate along the single transverse axis `x`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("{field} must be finite, got {value}")]
    NonFinite { field: &'static str, value: f64 },
    #[error("{field} must be strictly positive, got {value} m")]
    NonPositive { field: &'static str, value: f64 },
    #[error("{field} must be non-negative, got {value} m")]
    Negative { field: &'static str, value: f64 },
    #[error("slit separation ({separation} m) must exceed slit width ({width} m)")]
    OverlappingSlits { separation: f64, width: f64 },
    #[error("scan needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("scan stop ({stop} m) must exceed start ({start} m)")]
    EmptyRange { start: f64, stop: f64 },
}

fn finite(field: &'static str, value: f64) -> Result<f64, ModelError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(ModelError::NonFinite { field, value })
    }
}

fn positive(field: &'static str, value: f64) -> Result<f64, ModelError> {
    finite(field, value)?;
    if value > 0.0 {
        Ok(value)
    } else {
        Err(ModelError::NonPositive { field, value })
    }
}

fn non_negative(field: &'static str, value: f64) -> Result<f64, ModelError> {
    finite(field, value)?;
    if value >= 0.0 {
        Ok(value)
    } else {
        Err(ModelError::Negative { field, value })
    }
}

/// Shape of the chaotic source intensity profile on the ground glass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceShape {
    /// Top-hat of full width `D`; `ℓ_coh = λz/D` puts the first zero of the
    /// source spectrum at a mask-plane offset of `ℓ_coh`.
    UniformHardEdge,
    /// Gaussian of RMS width `σ`; `ℓ_coh` is the full width of `|g¹|` at `1/e`,
    /// i.e. `|g¹(Δx)| = exp(-4 Δx² / ℓ_coh²)`.
    Gaussian,
}

/// Source profile, parameterized by the transverse coherence length it produces
/// on the mask plane. The physical source width is derived, never stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceProfile {
    shape: SourceShape,
    coherence_length: f64,
}

impl SourceProfile {
    pub fn new(shape: SourceShape, coherence_length: f64) -> Result<Self, ModelError> {
        positive("coherence_length", coherence_length)?;
        Ok(Self {
            shape,
            coherence_length,
        })
    }

    pub fn shape(&self) -> SourceShape {
        self.shape
    }

    /// Transverse coherence length `ℓ_coh` on the mask plane.
    pub fn coherence_length(&self) -> f64 {
        self.coherence_length
    }

    /// Characteristic source width for a source-to-mask distance `z`:
    /// full width `D` for the hard-edge profile, RMS width `σ` for the gaussian.
    pub fn characteristic_width(&self, wavelength: f64, z: f64) -> f64 {
        let lz = wavelength * z;
        match self.shape {
            SourceShape::UniformHardEdge => lz / self.coherence_length,
            SourceShape::Gaussian => 2f64.sqrt() * lz / (PI * self.coherence_length),
        }
    }

    /// Half-width of the region holding the source: `D/2` (hard edge) or `4σ` (gaussian).
    pub fn support_half_width(&self, wavelength: f64, z: f64) -> f64 {
        let w = self.characteristic_width(wavelength, z);
        match self.shape {
            SourceShape::UniformHardEdge => 0.5 * w,
            SourceShape::Gaussian => 4.0 * w,
        }
    }

    /// Unnormalized source intensity at source-plane position `x`.
    pub fn intensity(&self, x: f64, wavelength: f64, z: f64) -> f64 {
        let w = self.characteristic_width(wavelength, z);
        match self.shape {
            SourceShape::UniformHardEdge => {
                if x.abs() <= 0.5 * w {
                    1.0
                } else {
                    0.0
                }
            }
            SourceShape::Gaussian => (-0.5 * (x / w).powi(2)).exp(),
        }
    }
}

/// Global geometry shared by every formula: wavelength, source-to-mask distance,
/// collection-lens focal length and the source model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalSetup {
    wavelength: f64,
    z_source_to_mask: f64,
    focal_length: f64,
    source: SourceProfile,
}

impl OpticalSetup {
    pub fn new(
        wavelength: f64,
        z_source_to_mask: f64,
        focal_length: f64,
        source: SourceProfile,
    ) -> Result<Self, ModelError> {
        positive("wavelength", wavelength)?;
        positive("z", z_source_to_mask)?;
        positive("focal_length", focal_length)?;
        Ok(Self {
            wavelength,
            z_source_to_mask,
            focal_length,
            source,
        })
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn z(&self) -> f64 {
        self.z_source_to_mask
    }

    pub fn focal_length(&self) -> f64 {
        self.focal_length
    }

    pub fn source(&self) -> &SourceProfile {
        &self.source
    }

    /// `ω = 2πc/λ`.
    pub fn angular_frequency(&self) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT / self.wavelength
    }

    /// `ω/c`.
    pub fn wavenumber(&self) -> f64 {
        self.angular_frequency() / SPEED_OF_LIGHT
    }

    pub fn lambda_z(&self) -> f64 {
        self.wavelength * self.z_source_to_mask
    }

    pub fn lambda_f(&self) -> f64 {
        self.wavelength * self.focal_length
    }

    pub fn with_source(mut self, source: SourceProfile) -> Self {
        self.source = source;
        self
    }
}

impl Default for OpticalSetup {
    /// λ = 980 nm, z = 70 mm, f = 200 mm, ℓ_coh = 0.55 mm, gaussian source.
    fn default() -> Self {
        let source = SourceProfile {
            shape: SourceShape::Gaussian,
            coherence_length: 0.55e-3,
        };
        Self {
            wavelength: 980e-9,
            z_source_to_mask: 70e-3,
            focal_length: 200e-3,
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MaskLabel {
    C,
    T,
}

impl MaskLabel {
    pub fn other(self) -> Self {
        match self {
            MaskLabel::C => MaskLabel::T,
            MaskLabel::T => MaskLabel::C,
        }
    }
}

/// Anything made of identical hard-edged slits along the transverse axis.
pub trait Aperture {
    /// Slit centers, in increasing order.
    fn slit_centers(&self) -> Vec<f64>;
    /// Common slit width; `0` means ideal point slits.
    fn slit_width(&self) -> f64;
}

/// A double-slit mask with center `X̄`, center-to-center separation `d` and slit width `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleSlitMask {
    center: f64,
    separation: f64,
    slit_width: f64,
    label: MaskLabel,
}

impl DoubleSlitMask {
    pub fn new(
        center: f64,
        separation: f64,
        slit_width: f64,
        label: MaskLabel,
    ) -> Result<Self, ModelError> {
        finite("center", center)?;
        positive("separation", separation)?;
        non_negative("slit_width", slit_width)?;
        if separation <= slit_width {
            return Err(ModelError::OverlappingSlits {
                separation,
                width: slit_width,
            });
        }
        Ok(Self {
            center,
            separation,
            slit_width,
            label,
        })
    }

    /// Mask C of the reference experiment: d = 0.69 mm, a = 55 µm, centered.
    pub fn reference_c() -> Self {
        Self::new(0.0, 0.69e-3, 55e-6, MaskLabel::C).expect("valid reference mask")
    }

    /// Mask T of the reference experiment: d = 0.57 mm, a = 55 µm, centered.
    pub fn reference_t() -> Self {
        Self::new(0.0, 0.57e-3, 55e-6, MaskLabel::T).expect("valid reference mask")
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn separation(&self) -> f64 {
        self.separation
    }

    pub fn label(&self) -> MaskLabel {
        self.label
    }

    /// `(X̄ − d/2, X̄ + d/2)`.
    pub fn slit_positions(&self) -> (f64, f64) {
        let half = 0.5 * self.separation;
        (self.center - half, self.center + half)
    }

    pub fn with_center(self, center: f64) -> Result<Self, ModelError> {
        Self::new(center, self.separation, self.slit_width, self.label)
    }

    pub fn with_separation(self, separation: f64) -> Result<Self, ModelError> {
        Self::new(self.center, separation, self.slit_width, self.label)
    }

    pub fn with_slit_width(self, slit_width: f64) -> Result<Self, ModelError> {
        Self::new(self.center, self.separation, slit_width, self.label)
    }

    pub fn with_label(mut self, label: MaskLabel) -> Self {
        self.label = label;
        self
    }
}

impl Aperture for DoubleSlitMask {
    fn slit_centers(&self) -> Vec<f64> {
        let (x1, x2) = self.slit_positions();
        vec![x1, x2]
    }

    fn slit_width(&self) -> f64 {
        self.slit_width
    }
}

/// Single slit, used as a degenerate mask in tests and Siegert checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleSlit {
    center: f64,
    width: f64,
}

impl SingleSlit {
    pub fn new(center: f64, width: f64) -> Result<Self, ModelError> {
        finite("center", center)?;
        non_negative("slit_width", width)?;
        Ok(Self { center, width })
    }
}

impl Aperture for SingleSlit {
    fn slit_centers(&self) -> Vec<f64> {
        vec![self.center]
    }

    fn slit_width(&self) -> f64 {
        self.width
    }
}

/// Detector in the lens focal plane; a zero aperture is a point detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorSpec {
    position: f64,
    aperture: f64,
}

impl DetectorSpec {
    pub fn new(position: f64, aperture: f64) -> Result<Self, ModelError> {
        finite("position", position)?;
        non_negative("aperture", aperture)?;
        Ok(Self { position, aperture })
    }

    pub fn point(position: f64) -> Self {
        Self {
            position,
            aperture: 0.0,
        }
    }

    pub fn position(&self) -> f64 {
        self.position
    }

    pub fn aperture(&self) -> f64 {
        self.aperture
    }
}

/// Coordinate being scanned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScanAxis {
    #[serde(rename = "mask_T_center")]
    MaskTCenter,
    #[serde(rename = "mask_C_center")]
    MaskCCenter,
    #[serde(rename = "detector_C")]
    DetectorC,
    #[serde(rename = "detector_T")]
    DetectorT,
    /// `x_C = x_T = s`.
    #[serde(rename = "detector_diagonal")]
    DetectorDiagonal,
    /// `x_C = s`, `x_T = -s`.
    #[serde(rename = "detector_antidiagonal")]
    DetectorAntidiagonal,
    #[serde(rename = "detector_2d")]
    Detector2d,
}

impl ScanAxis {
    pub const ALL: [ScanAxis; 7] = [
        ScanAxis::MaskTCenter,
        ScanAxis::MaskCCenter,
        ScanAxis::DetectorC,
        ScanAxis::DetectorT,
        ScanAxis::DetectorDiagonal,
        ScanAxis::DetectorAntidiagonal,
        ScanAxis::Detector2d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScanAxis::MaskTCenter => "mask_T_center",
            ScanAxis::MaskCCenter => "mask_C_center",
            ScanAxis::DetectorC => "detector_C",
            ScanAxis::DetectorT => "detector_T",
            ScanAxis::DetectorDiagonal => "detector_diagonal",
            ScanAxis::DetectorAntidiagonal => "detector_antidiagonal",
            ScanAxis::Detector2d => "detector_2d",
        }
    }
}

/// Uniform grid of `n_points` values from `start` to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanGrid {
    axis: ScanAxis,
    start: f64,
    stop: f64,
    n_points: usize,
}

impl ScanGrid {
    pub fn new(axis: ScanAxis, start: f64, stop: f64, n_points: usize) -> Result<Self, ModelError> {
        finite("start", start)?;
        finite("stop", stop)?;
        if n_points < 2 {
            return Err(ModelError::TooFewPoints(n_points));
        }
        if stop <= start {
            return Err(ModelError::EmptyRange { start, stop });
        }
        Ok(Self {
            axis,
            start,
            stop,
            n_points,
        })
    }

    pub fn axis(&self) -> ScanAxis {
        self.axis
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn stop(&self) -> f64 {
        self.stop
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn points(&self) -> Vec<f64> {
        linspace(self.start, self.stop, self.n_points)
    }
}

/// `n` evenly spaced values from `start` to `stop`, both included.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / (n - 1) as f64;
            (0..n)
                .map(|i| if i + 1 == n { stop } else { start + step * i as f64 })
                .collect()
        }
    }
}

/// Advisory thresholds for reading `≳ ℓ_coh` and `≲ ℓ_coh`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeThresholds {
    /// A slit separation counts as "beyond coherence" when `d ≥ factor · ℓ_coh`.
    pub suppression_factor: f64,
    /// Corresponding slits count as "correlated" when `|x_αC − x_αT| ≤ factor · ℓ_coh`.
    pub correlation_factor: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        Self {
            suppression_factor: 0.9,
            correlation_factor: 0.5,
        }
    }
}

/// Which interference regime a geometry sits in. Flags are advisory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeReport {
    pub coherence_length: f64,
    /// `d_C ≳ ℓ_coh`: no first-order fringes behind mask C.
    pub first_order_suppressed_c: bool,
    /// `d_T ≳ ℓ_coh`: no first-order fringes behind mask T.
    pub first_order_suppressed_t: bool,
    /// `|x_αC − x_αT|` for α = 1, 2.
    pub corresponding_offsets: [f64; 2],
    /// `|x_αC − x_αT| ≲ ℓ_coh` for α = 1, 2.
    pub pairs_correlated: [bool; 2],
}

impl RegimeReport {
    /// Both conditions for second-order interference without first-order fringes hold.
    pub fn second_order_regime(&self) -> bool {
        self.first_order_suppressed_c
            && self.first_order_suppressed_t
            && self.pairs_correlated.iter().all(|&c| c)
    }
}

pub fn validate_coherence_regime(
    setup: &OpticalSetup,
    mask_c: &DoubleSlitMask,
    mask_t: &DoubleSlitMask,
) -> RegimeReport {
    validate_coherence_regime_with(setup, mask_c, mask_t, RegimeThresholds::default())
}

pub fn validate_coherence_regime_with(
    setup: &OpticalSetup,
    mask_c: &DoubleSlitMask,
    mask_t: &DoubleSlitMask,
    thresholds: RegimeThresholds,
) -> RegimeReport {
    let l = setup.source().coherence_length();
    let (c1, c2) = mask_c.slit_positions();
    let (t1, t2) = mask_t.slit_positions();
    let offsets = [(c1 - t1).abs(), (c2 - t2).abs()];
    let suppressed = |d: f64| d >= thresholds.suppression_factor * l;
    RegimeReport {
        coherence_length: l,
        first_order_suppressed_c: suppressed(mask_c.separation()),
        first_order_suppressed_t: suppressed(mask_t.separation()),
        corresponding_offsets: offsets,
        pairs_correlated: offsets.map(|o| o <= thresholds.correlation_factor * l),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slit_positions_centered_reference_mask() {
        let mask = DoubleSlitMask::new(0.0, 0.57e-3, 0.0, MaskLabel::T).unwrap();
        assert_eq!(mask.slit_positions(), (-0.285e-3, 0.285e-3));
    }

    #[test]
    fn slit_positions_offset_mask() {
        let mask = DoubleSlitMask::new(0.1e-3, 0.2e-3, 0.0, MaskLabel::C).unwrap();
        assert_eq!(mask.slit_positions(), (0.0, 0.2e-3));
    }

    #[test]
    fn zero_separation_is_rejected() {
        let err = DoubleSlitMask::new(0.0, 0.0, 0.0, MaskLabel::C).unwrap_err();
        assert!(matches!(err, ModelError::NonPositive { field: "separation", .. }));
    }

    #[test]
    fn overlapping_slits_are_rejected() {
        let err = DoubleSlitMask::new(0.0, 50e-6, 50e-6, MaskLabel::C).unwrap_err();
        assert!(matches!(err, ModelError::OverlappingSlits { .. }));
        assert!(DoubleSlitMask::new(0.0, 1e-3, -1e-6, MaskLabel::C).is_err());
    }

    #[test]
    fn non_positive_lengths_name_the_field() {
        let src = SourceProfile::new(SourceShape::Gaussian, 0.55e-3).unwrap();
        let err = OpticalSetup::new(980e-9, -1.0, 0.2, src).unwrap_err();
        assert_eq!(err, ModelError::NonPositive { field: "z", value: -1.0 });
        assert!(err.to_string().contains('z'));
        assert!(OpticalSetup::new(0.0, 0.07, 0.2, src).is_err());
        assert!(OpticalSetup::new(980e-9, 0.07, f64::NAN, src).is_err());
        assert!(SourceProfile::new(SourceShape::Gaussian, 0.0).is_err());
        assert!(DetectorSpec::new(0.0, -1e-6).is_err());
    }

    #[test]
    fn omega_is_derived_from_wavelength() {
        let setup = OpticalSetup::default();
        let omega = setup.angular_frequency();
        assert!((omega - 2.0 * PI * SPEED_OF_LIGHT / 980e-9).abs() / omega < 1e-15);
        assert!((setup.wavenumber() - 2.0 * PI / 980e-9).abs() / setup.wavenumber() < 1e-14);
    }

    #[test]
    fn source_width_matches_coherence_definition() {
        let setup = OpticalSetup::default();
        let lz = setup.lambda_z();
        let hard = SourceProfile::new(SourceShape::UniformHardEdge, 0.55e-3).unwrap();
        // first zero of sinc(π ν D) at ν = 1/D, i.e. mask-plane offset λz/D = ℓ_coh
        let d = hard.characteristic_width(980e-9, 0.07);
        assert!((lz / d - 0.55e-3).abs() < 1e-15);
        let gauss = SourceProfile::new(SourceShape::Gaussian, 0.55e-3).unwrap();
        let sigma = gauss.characteristic_width(980e-9, 0.07);
        // |g¹(Δx)| = exp(-2π²σ²Δx²/(λz)²) must equal 1/e at Δx = ℓ_coh/2
        let dx = 0.5 * 0.55e-3;
        let g = (-2.0 * PI * PI * sigma * sigma * dx * dx / (lz * lz)).exp();
        assert!((g - (-1f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn regime_report_reference_geometry() {
        let setup = OpticalSetup::default();
        let r = validate_coherence_regime(
            &setup,
            &DoubleSlitMask::reference_c(),
            &DoubleSlitMask::reference_t(),
        );
        assert!(r.first_order_suppressed_c && r.first_order_suppressed_t);
        assert_eq!(r.pairs_correlated, [true, true]);
        for o in r.corresponding_offsets {
            assert!((o - 60e-6).abs() < 1e-12);
        }
        assert!(r.second_order_regime());
    }

    #[test]
    fn regime_report_condition_directions() {
        let setup = OpticalSetup::default();
        let l = 0.55e-3;
        let small_c = DoubleSlitMask::new(0.0, l / 10.0, 0.0, MaskLabel::C).unwrap();
        let small_t = DoubleSlitMask::new(0.0, l / 10.0, 0.0, MaskLabel::T).unwrap();
        let r = validate_coherence_regime(&setup, &small_c, &small_t);
        assert!(!r.first_order_suppressed_c && !r.first_order_suppressed_t);

        let far_t = DoubleSlitMask::reference_t().with_center(5.0 * l).unwrap();
        let r = validate_coherence_regime(&setup, &DoubleSlitMask::reference_c(), &far_t);
        assert_eq!(r.pairs_correlated, [false, false]);
        // pure function
        assert_eq!(
            r,
            validate_coherence_regime(&setup, &DoubleSlitMask::reference_c(), &far_t)
        );
    }

    #[test]
    fn scan_grid_validation_and_points() {
        assert!(ScanGrid::new(ScanAxis::DetectorT, 0.0, 1.0, 1).is_err());
        assert!(ScanGrid::new(ScanAxis::DetectorT, 1.0, 1.0, 5).is_err());
        let g = ScanGrid::new(ScanAxis::DetectorT, -1.0, 1.0, 5).unwrap();
        assert_eq!(g.points(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    }
}
