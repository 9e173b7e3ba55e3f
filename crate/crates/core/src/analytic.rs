//! Closed-form first-order cross-correlation and the second-order correlation maps
//! built from it.
//!
//! A path pair `(α, β)` runs from the source through slit `α` of mask C to detector
//! `D_C`, and through slit `β` of mask T to detector `D_T`. Its first-order
//! cross-correlation is
//!
//! ```text
//! G¹_αβ(x_C, x_T) = B*_αC(x_C) · B_βT(x_T) · S((x_αC − x_βT) / λz)
//! B_j(x_d)        = exp[i (ω x_j² / 2cz − ω x_d x_j / fc)]
//! ```
//!
//! with `S` the normalized Fourier transform of the source intensity profile. The
//! fluctuation correlation `⟨ΔI_C ΔI_T⟩` is `|Σ G¹_αβ|²` up to a constant, which is
//! dropped: maps are compared after normalization.
//!
//! Finite slits of width `a` multiply each `B_j` by `sinc(π a x_d / λf)`, with the
//! source-distance phase treated as constant across a slit.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::model::{Aperture, DetectorSpec, OpticalSetup, SourceShape};
use crate::quadrature::average_rule;

pub type ComplexAmplitude = Complex64;

/// Gauss–Legendre order for averaging over a finite detector aperture.
pub const DETECTOR_QUADRATURE_POINTS: usize = 9;

/// `sin(u)/u`, continuous at 0.
pub fn sinc(u: f64) -> f64 {
    if u.abs() < 1e-6 {
        1.0 - u * u / 6.0
    } else {
        u.sin() / u
    }
}

/// Source spectrum `S(ν)` at spatial frequency `ν` (1/m), normalized to `S(0) = 1`.
pub fn source_spectrum(setup: &OpticalSetup, spatial_frequency: f64) -> f64 {
    let source = setup.source();
    let w = source.characteristic_width(setup.wavelength(), setup.z());
    match source.shape() {
        SourceShape::UniformHardEdge => sinc(PI * spatial_frequency * w),
        SourceShape::Gaussian => (-2.0 * (PI * w * spatial_frequency).powi(2)).exp(),
    }
}

/// `S` evaluated for two mask-plane points separated by `offset`.
pub fn mask_plane_coherence(setup: &OpticalSetup, offset: f64) -> f64 {
    source_spectrum(setup, offset / setup.lambda_z())
}

/// Propagation factor `B_j(x_d)` from slit position `x_j` to detector position `x_d`.
pub fn propagation_phase(setup: &OpticalSetup, slit_position: f64, detector_position: f64) -> ComplexAmplitude {
    let omega = setup.angular_frequency();
    let c = crate::model::SPEED_OF_LIGHT;
    let x = slit_position;
    let phase = omega * x * x / (2.0 * c * setup.z())
        - omega * detector_position * x / (setup.focal_length() * c);
    Complex64::from_polar(1.0, phase)
}

/// Far-field envelope of one hard-edged slit of width `a` at detector position `x_d`.
pub fn slit_envelope(setup: &OpticalSetup, slit_width: f64, detector_position: f64) -> f64 {
    if slit_width == 0.0 {
        1.0
    } else {
        sinc(PI * slit_width * detector_position / setup.lambda_f())
    }
}

/// `B_j(x_d)` times the slit envelope.
fn slit_amplitude(setup: &OpticalSetup, slit_position: f64, slit_width: f64, x_d: f64) -> Complex64 {
    propagation_phase(setup, slit_position, x_d) * slit_envelope(setup, slit_width, x_d)
}

/// Contribution of the path pair through slit `slit_at_c` of mask C and slit
/// `slit_at_t` of mask T. Slit indices are 1-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathContribution {
    pub slit_at_c: usize,
    pub slit_at_t: usize,
    pub amplitude: ComplexAmplitude,
}

/// Which path pairs enter the total first-order correlation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathMode {
    /// Every `(α, β)` pair.
    FourPath,
    /// Only corresponding slits `(α, α)`.
    TwoPath,
}

/// First-order cross-correlation of a single path pair. `alpha`, `beta` are 1-based.
///
/// # Panics
/// If a slit index is out of range for its mask.
pub fn g1_pair<C, T>(
    setup: &OpticalSetup,
    mask_c: &C,
    mask_t: &T,
    alpha: usize,
    beta: usize,
    x_c: f64,
    x_t: f64,
) -> PathContribution
where
    C: Aperture + ?Sized,
    T: Aperture + ?Sized,
{
    let sc = mask_c.slit_centers();
    let st = mask_t.slit_centers();
    assert!(alpha >= 1 && alpha <= sc.len(), "slit index {alpha} out of range for mask C");
    assert!(beta >= 1 && beta <= st.len(), "slit index {beta} out of range for mask T");
    let (xa, xb) = (sc[alpha - 1], st[beta - 1]);
    let amplitude = slit_amplitude(setup, xa, mask_c.slit_width(), x_c).conj()
        * slit_amplitude(setup, xb, mask_t.slit_width(), x_t)
        * mask_plane_coherence(setup, xa - xb);
    PathContribution {
        slit_at_c: alpha,
        slit_at_t: beta,
        amplitude,
    }
}

/// Sum of the path-pair contributions selected by `mode`.
pub fn g1_total<C, T>(
    setup: &OpticalSetup,
    mask_c: &C,
    mask_t: &T,
    x_c: f64,
    x_t: f64,
    mode: PathMode,
) -> ComplexAmplitude
where
    C: Aperture + ?Sized,
    T: Aperture + ?Sized,
{
    let sc = mask_c.slit_centers();
    let st = mask_t.slit_centers();
    let bc: Vec<Complex64> = sc
        .iter()
        .map(|&x| slit_amplitude(setup, x, mask_c.slit_width(), x_c).conj())
        .collect();
    let bt: Vec<Complex64> = st
        .iter()
        .map(|&x| slit_amplitude(setup, x, mask_t.slit_width(), x_t))
        .collect();
    let mut total = Complex64::new(0.0, 0.0);
    for (a, (&xa, ba)) in sc.iter().zip(&bc).enumerate() {
        for (b, (&xb, bb)) in st.iter().zip(&bt).enumerate() {
            if mode == PathMode::TwoPath && a != b {
                continue;
            }
            total += ba * bb * mask_plane_coherence(setup, xa - xb);
        }
    }
    total
}

/// Unnormalized `|G¹_total|²` for point detectors at `x_c`, `x_t`.
pub fn correlation<C, T>(setup: &OpticalSetup, mask_c: &C, mask_t: &T, x_c: f64, x_t: f64, mode: PathMode) -> f64
where
    C: Aperture + ?Sized,
    T: Aperture + ?Sized,
{
    g1_total(setup, mask_c, mask_t, x_c, x_t, mode).norm_sqr()
}

/// Unnormalized correlation averaged over both detector apertures.
///
/// The covariance of two aperture-integrated intensities is the double average of
/// the point covariance, so each aperture gets its own Gauss–Legendre rule.
pub fn correlation_with_detectors<C, T>(
    setup: &OpticalSetup,
    mask_c: &C,
    mask_t: &T,
    det_c: &DetectorSpec,
    det_t: &DetectorSpec,
    mode: PathMode,
) -> f64
where
    C: Aperture + ?Sized,
    T: Aperture + ?Sized,
{
    let rule_c = average_rule(det_c.position(), det_c.aperture(), DETECTOR_QUADRATURE_POINTS);
    let rule_t = average_rule(det_t.position(), det_t.aperture(), DETECTOR_QUADRATURE_POINTS);
    let mut acc = 0.0;
    for &(xc, wc) in &rule_c {
        for &(xt, wt) in &rule_t {
            acc += wc * wt * correlation(setup, mask_c, mask_t, xc, xt, mode);
        }
    }
    acc
}

/// How a scanned map is scaled before it is reported.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Normalization {
    /// Divide by the largest value of the scan.
    #[default]
    Peak,
    /// Divide by the value at the given scan index.
    Reference(usize),
    /// Leave the values as computed.
    Raw,
}

/// Scale `values` in place according to `norm`. A zero reference leaves them unchanged.
pub fn normalize(values: &mut [f64], norm: Normalization) {
    let reference = match norm {
        Normalization::Raw => return,
        Normalization::Peak => values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        Normalization::Reference(i) => values[i],
    };
    if reference.is_finite() && reference != 0.0 {
        values.iter_mut().for_each(|v| *v /= reference);
    }
}

/// One point of a correlation scan: both masks and both detectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint<C, T> {
    pub mask_c: C,
    pub mask_t: T,
    pub det_c: DetectorSpec,
    pub det_t: DetectorSpec,
}

/// Correlation over a list of scan points, normalized as requested.
pub fn correlation_map<C, T>(
    setup: &OpticalSetup,
    points: &[ScanPoint<C, T>],
    mode: PathMode,
    norm: Normalization,
) -> Vec<f64>
where
    C: Aperture,
    T: Aperture,
{
    let mut values: Vec<f64> = points
        .iter()
        .map(|p| correlation_with_detectors(setup, &p.mask_c, &p.mask_t, &p.det_c, &p.det_t, mode))
        .collect();
    normalize(&mut values, norm);
    values
}

/// Sensing phase between the two interfering path pairs:
/// `φ = (ω/cz)(X̄_T d_T − X̄_C d_C) − (ω/cf)(x_T d_T − x_C d_C)`.
pub fn sensing_phase(
    setup: &OpticalSetup,
    center_c: f64,
    separation_c: f64,
    center_t: f64,
    separation_t: f64,
    x_c: f64,
    x_t: f64,
) -> f64 {
    let k = setup.wavenumber();
    k / setup.z() * (center_t * separation_t - center_c * separation_c)
        - k / setup.focal_length() * (x_t * separation_t - x_c * separation_c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Illumination {
    /// Spatially coherent point source on axis (ground glass removed).
    Laser,
    /// Chaotic source with the configured profile.
    Chaotic,
}

/// Mean intensity behind one mask at detector position `x_d`, unnormalized.
pub fn first_order_intensity<A>(setup: &OpticalSetup, mask: &A, x_d: f64, illumination: Illumination) -> f64
where
    A: Aperture + ?Sized,
{
    let xs = mask.slit_centers();
    let b: Vec<Complex64> = xs
        .iter()
        .map(|&x| slit_amplitude(setup, x, mask.slit_width(), x_d))
        .collect();
    match illumination {
        Illumination::Laser => b.iter().sum::<Complex64>().norm_sqr(),
        Illumination::Chaotic => {
            let mut acc = 0.0;
            for (i, (&xi, bi)) in xs.iter().zip(&b).enumerate() {
                acc += bi.norm_sqr();
                for (&xj, bj) in xs.iter().zip(&b).skip(i + 1) {
                    acc += 2.0 * (bi.conj() * bj).re * mask_plane_coherence(setup, xi - xj);
                }
            }
            acc
        }
    }
}

/// First-order intensity averaged over a detector aperture.
pub fn first_order_intensity_with_detector<A>(
    setup: &OpticalSetup,
    mask: &A,
    detector: &DetectorSpec,
    illumination: Illumination,
) -> f64
where
    A: Aperture + ?Sized,
{
    average_rule(detector.position(), detector.aperture(), DETECTOR_QUADRATURE_POINTS)
        .into_iter()
        .map(|(x, w)| w * first_order_intensity(setup, mask, x, illumination))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DoubleSlitMask, MaskLabel, SingleSlit, SourceProfile};

    fn point_masks() -> (DoubleSlitMask, DoubleSlitMask) {
        (
            DoubleSlitMask::reference_c().with_slit_width(0.0).unwrap(),
            DoubleSlitMask::reference_t().with_slit_width(0.0).unwrap(),
        )
    }

    fn hard_edge_setup() -> OpticalSetup {
        OpticalSetup::default()
            .with_source(SourceProfile::new(SourceShape::UniformHardEdge, 0.55e-3).unwrap())
    }

    /// Composite Simpson integral of `f` over `[a, b]` with `n` (even) panels.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + h * i as f64);
        }
        s * h / 3.0
    }

    /// Independent oracle: normalized cosine transform of the source profile by quadrature.
    fn spectrum_by_quadrature(setup: &OpticalSetup, nu: f64) -> f64 {
        let src = setup.source();
        let (l, z) = (setup.wavelength(), setup.z());
        let half = src.support_half_width(l, z) * if src.shape() == SourceShape::Gaussian { 2.0 } else { 1.0 };
        let num = simpson(|x| src.intensity(x, l, z) * (2.0 * PI * nu * x).cos(), -half, half, 20_000);
        let den = simpson(|x| src.intensity(x, l, z), -half, half, 20_000);
        num / den
    }

    #[test]
    fn spectrum_is_normalized_at_zero() {
        assert_eq!(source_spectrum(&OpticalSetup::default(), 0.0), 1.0);
        assert_eq!(source_spectrum(&hard_edge_setup(), 0.0), 1.0);
    }

    #[test]
    fn hard_edge_spectrum_first_zero() {
        let setup = hard_edge_setup();
        let d = setup.source().characteristic_width(setup.wavelength(), setup.z());
        assert!(source_spectrum(&setup, 1.0 / d).abs() < 1e-15);
    }

    #[test]
    fn spectrum_at_corresponding_slit_offset_matches_quadrature() {
        for setup in [hard_edge_setup(), OpticalSetup::default()] {
            let nu = 60e-6 / setup.lambda_z();
            let s = source_spectrum(&setup, nu);
            let oracle = spectrum_by_quadrature(&setup, nu);
            assert!((s - oracle).abs() < 1e-9, "{s} vs {oracle}");
        }
        // frozen extended-precision values
        let s_hard = source_spectrum(&hard_edge_setup(), 60e-6 / hard_edge_setup().lambda_z());
        assert!((s_hard - 0.980_538_570_976_575_2).abs() < 1e-14);
        let s_gauss = mask_plane_coherence(&OpticalSetup::default(), 60e-6);
        assert!((s_gauss - 0.953_511_964_742_327_8).abs() < 1e-14);
    }

    #[test]
    fn propagation_phase_zero_slit_is_unity() {
        let setup = OpticalSetup::default();
        for xd in [-1e-3, 0.0, 0.37e-3] {
            assert_eq!(propagation_phase(&setup, 0.0, xd), Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn propagation_phase_matches_extended_precision() {
        // π · (0.285 mm)² / (980 nm · 70 mm) = π · 3249/2744, evaluated with 40 digits
        let expected = 3.719_764_770_959_635;
        let b = propagation_phase(&OpticalSetup::default(), 0.285e-3, 0.0);
        let phase = b.arg().rem_euclid(2.0 * PI);
        assert!((phase - expected).abs() < 1e-12, "{phase}");
    }

    #[test]
    fn g1_pair_corresponding_slits_modulus() {
        let setup = OpticalSetup::default();
        let (c, t) = point_masks();
        let p = g1_pair(&setup, &c, &t, 1, 1, 0.0, 0.0);
        let oracle = spectrum_by_quadrature(&setup, -60e-6 / setup.lambda_z());
        assert!((p.amplitude.norm() - oracle).abs() < 1e-9);
        assert_eq!((p.slit_at_c, p.slit_at_t), (1, 1));
    }

    #[test]
    fn g1_pair_cross_term_is_small() {
        let setup = OpticalSetup::default();
        let (c, t) = point_masks();
        let p = g1_pair(&setup, &c, &t, 1, 2, 0.0, 0.0);
        let offset = c.slit_positions().0 - t.slit_positions().1;
        let oracle = spectrum_by_quadrature(&setup, offset / setup.lambda_z()).abs();
        assert!((p.amplitude.norm() - oracle).abs() < 1e-9);
        assert!(p.amplitude.norm() < 0.01);
    }

    #[test]
    fn g1_pair_degenerate_mask_is_unity() {
        let setup = OpticalSetup::default();
        let s = SingleSlit::new(0.0, 0.0).unwrap();
        let p = g1_pair(&setup, &s, &s, 1, 1, 0.0, 0.0);
        assert!((p.amplitude - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn two_path_close_to_four_path_at_central_fringe() {
        let setup = OpticalSetup::default();
        let (c, t) = (DoubleSlitMask::reference_c(), DoubleSlitMask::reference_t());
        let four = g1_total(&setup, &c, &t, 0.0, 0.0, PathMode::FourPath);
        let two = g1_total(&setup, &c, &t, 0.0, 0.0, PathMode::TwoPath);
        assert!((four - two).norm() / two.norm() < 0.05);
    }

    #[test]
    fn single_slit_total_equals_pair() {
        let setup = OpticalSetup::default();
        let c = SingleSlit::new(0.1e-3, 0.0).unwrap();
        let t = SingleSlit::new(0.13e-3, 0.0).unwrap();
        for mode in [PathMode::FourPath, PathMode::TwoPath] {
            let total = g1_total(&setup, &c, &t, 0.2e-3, -0.1e-3, mode);
            let pair = g1_pair(&setup, &c, &t, 1, 1, 0.2e-3, -0.1e-3).amplitude;
            assert!((total - pair).norm() < 1e-15);
        }
    }

    #[test]
    fn infinite_coherence_gives_product_of_young_patterns() {
        // S ≡ 1: |Σ_αβ B*_αC B_βT|² = |Σ_α B_αC|² · |Σ_β B_βT|²
        let setup = OpticalSetup::default()
            .with_source(SourceProfile::new(SourceShape::Gaussian, 1e6).unwrap());
        let (c, t) = point_masks();
        for &(xc, xt) in &[(0.0, 0.0), (0.1e-3, -0.05e-3), (0.33e-3, 0.21e-3)] {
            let map = correlation(&setup, &c, &t, xc, xt, PathMode::FourPath);
            let (c1, c2) = c.slit_positions();
            let (t1, t2) = t.slit_positions();
            let k = 2.0 * PI / 980e-9;
            let young = |x1: f64, x2: f64, xd: f64| 2.0 + 2.0 * (k * xd * (x2 - x1) / 0.2 - k * (x2 * x2 - x1 * x1) / 0.14).cos();
            let expected = young(c1, c2, xc) * young(t1, t2, xt);
            assert!((map - expected).abs() < 1e-9, "{map} vs {expected}");
        }
    }

    #[test]
    fn central_point_is_the_map_maximum() {
        let setup = OpticalSetup::default();
        let (c, t) = point_masks();
        let center = correlation(&setup, &c, &t, 0.0, 0.0, PathMode::TwoPath);
        for i in -20..=20 {
            for j in -20..=20 {
                let v = correlation(&setup, &c, &t, i as f64 * 30e-6, j as f64 * 30e-6, PathMode::TwoPath);
                assert!(v <= center * (1.0 + 1e-12));
            }
        }
        assert!((sensing_phase(&setup, 0.0, c.separation(), 0.0, t.separation(), 0.0, 0.0)).abs() < 1e-15);
    }

    #[test]
    fn sensing_phase_zero_and_shift_law() {
        let setup = OpticalSetup::default();
        assert_eq!(sensing_phase(&setup, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0), 0.0);
        let (dc, dt) = (0.69e-3, 0.57e-3);
        let phi0 = sensing_phase(&setup, 0.0, dc, 0.0, dt, 0.0, 0.0);
        let dxc = 0.11e-3;
        let shift = dxc * dc / dt;
        let phi1 = sensing_phase(&setup, dxc, dc, shift, dt, 0.0, 0.0);
        assert!((phi1 - phi0).abs() < 1e-12);
        assert!((shift - 0.133e-3).abs() < 0.5e-6);
    }

    #[test]
    fn sensing_phase_beat_periods() {
        let setup = OpticalSetup::default();
        let (dc, dt) = (0.69e-3, 0.57e-3);
        let lf = setup.lambda_f();
        let diag = lf / (dc - dt);
        let anti = lf / (dc + dt);
        assert!((diag - 1.633e-3).abs() < 1e-6 && (anti - 0.1556e-3).abs() < 1e-7);
        let phi = |xc: f64, xt: f64| sensing_phase(&setup, 0.0, dc, 0.0, dt, xc, xt);
        assert!((phi(diag, diag) - phi(0.0, 0.0)).abs() - 2.0 * PI < 1e-9);
        assert!((phi(anti, -anti) - phi(0.0, 0.0)).abs() - 2.0 * PI < 1e-9);
    }

    #[test]
    fn map_scan_periods() {
        let setup = OpticalSetup::default();
        let (c, t) = point_masks();
        // along x_T: exact period λf/d_T
        let period = setup.lambda_f() / t.separation();
        assert!((period - 0.3439e-3).abs() < 1e-7);
        for x in [0.0, 0.07e-3, 0.2e-3] {
            let a = correlation(&setup, &c, &t, 0.0, x, PathMode::TwoPath);
            let b = correlation(&setup, &c, &t, 0.0, x + period, PathMode::TwoPath);
            assert!((a - b).abs() < 1e-10 * a.max(1e-3));
        }
        // along X̄_T: maxima at multiples of λz/d_T
        let step = setup.lambda_z() / t.separation();
        assert!((step - 0.1203e-3).abs() < 1e-7);
        let phi = sensing_phase(&setup, 0.0, c.separation(), step, t.separation(), 0.0, 0.0);
        assert!((phi - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn laser_and_chaotic_first_order_contrast() {
        let setup = OpticalSetup::default();
        let (c, t) = point_masks();
        for mask in [c, t] {
            let period = setup.lambda_f() / mask.separation();
            let laser_max = first_order_intensity(&setup, &mask, 0.0, Illumination::Laser);
            let laser_min = first_order_intensity(&setup, &mask, 0.5 * period, Illumination::Laser);
            let v = (laser_max - laser_min) / (laser_max + laser_min);
            assert!((v - 1.0).abs() < 1e-12);
            let ch_max = first_order_intensity(&setup, &mask, 0.0, Illumination::Chaotic);
            let ch_min = first_order_intensity(&setup, &mask, 0.5 * period, Illumination::Chaotic);
            let v = (ch_max - ch_min).abs() / (ch_max + ch_min);
            let expected = mask_plane_coherence(&setup, mask.separation()).abs();
            assert!((v - expected).abs() < 1e-12 && v < 0.1);
        }
        assert!((setup.lambda_f() / 0.69e-3 - 0.2841e-3).abs() < 1e-7);
        let narrow = DoubleSlitMask::new(0.0, 0.055e-3, 0.0, MaskLabel::C).unwrap();
        let period = setup.lambda_f() / narrow.separation();
        let hi = first_order_intensity(&setup, &narrow, 0.0, Illumination::Chaotic);
        let lo = first_order_intensity(&setup, &narrow, 0.5 * period, Illumination::Chaotic);
        assert!((hi - lo) / (hi + lo) > 0.9);
    }

    #[test]
    fn detector_average_of_zero_width_is_point_value() {
        let setup = OpticalSetup::default();
        let (c, t) = (DoubleSlitMask::reference_c(), DoubleSlitMask::reference_t());
        let p = correlation(&setup, &c, &t, 0.1e-3, 0.2e-3, PathMode::TwoPath);
        let d = correlation_with_detectors(
            &setup,
            &c,
            &t,
            &DetectorSpec::point(0.1e-3),
            &DetectorSpec::point(0.2e-3),
            PathMode::TwoPath,
        );
        assert_eq!(p, d);
    }

    #[test]
    fn detector_aperture_reduces_fringe_contrast_by_sinc() {
        // point slits, x_T scan: map ∝ 1 + cos(2π x_T / Λ); a top-hat of width w
        // multiplies the cosine by sinc(π w / Λ)
        let setup = OpticalSetup::default();
        let (c, t) = point_masks();
        let lam = setup.lambda_f() / t.separation();
        let w = 50e-6;
        let dc = DetectorSpec::point(0.0);
        let hi = correlation_with_detectors(&setup, &c, &t, &dc, &DetectorSpec::new(0.0, w).unwrap(), PathMode::TwoPath);
        let lo = correlation_with_detectors(&setup, &c, &t, &dc, &DetectorSpec::new(0.5 * lam, w).unwrap(), PathMode::TwoPath);
        let v = (hi - lo) / (hi + lo);
        assert!((v - sinc(PI * w / lam)).abs() < 1e-9, "{v}");
    }

    #[test]
    fn normalization_modes() {
        let mut v = vec![1.0, 4.0, 2.0];
        normalize(&mut v, Normalization::Peak);
        assert_eq!(v, vec![0.25, 1.0, 0.5]);
        normalize(&mut v, Normalization::Reference(2));
        assert_eq!(v, vec![0.5, 2.0, 1.0]);
        normalize(&mut v, Normalization::Raw);
        assert_eq!(v, vec![0.5, 2.0, 1.0]);
    }
}
