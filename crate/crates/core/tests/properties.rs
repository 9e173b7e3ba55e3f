use std::f64::consts::PI;

use proptest::prelude::*;
use slitcorr_core::analytic::{
    correlation, correlation_map, propagation_phase, sensing_phase, Normalization, PathMode, ScanPoint,
};
use slitcorr_core::correlator::CorrelationAccumulator;
use slitcorr_core::fringe::{fit_fringe, fringe_shift, invert_period};
use slitcorr_core::model::linspace;
use slitcorr_core::speckle::DetectorSample;
use slitcorr_core::{DetectorSpec, DoubleSlitMask, MaskLabel, OpticalSetup, ScanAxis, SourceProfile, SourceShape};

fn mm(x: f64) -> f64 {
    x * 1e-3
}

fn mask(center: f64, sep: f64, width: f64, label: MaskLabel) -> DoubleSlitMask {
    DoubleSlitMask::new(center, sep, width, label).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn propagation_phase_has_unit_modulus(xj in -5e-3..5e-3f64, xd in -5e-3..5e-3f64) {
        let s = OpticalSetup::default();
        prop_assert!((propagation_phase(&s, xj, xd).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn correlation_is_nonnegative(
        xc in -1e-3..1e-3f64, xt in -1e-3..1e-3f64,
        cc in -0.3e-3..0.3e-3f64, ct in -0.3e-3..0.3e-3f64,
        dc in 0.2e-3..1.2e-3f64, dt in 0.2e-3..1.2e-3f64,
    ) {
        let s = OpticalSetup::default();
        let (c, t) = (mask(cc, dc, 55e-6, MaskLabel::C), mask(ct, dt, 55e-6, MaskLabel::T));
        let pts = [ScanPoint { mask_c: c, mask_t: t, det_c: DetectorSpec::point(xc), det_t: DetectorSpec::point(xt) }];
        for mode in [PathMode::FourPath, PathMode::TwoPath] {
            prop_assert!(correlation_map(&s, &pts, mode, Normalization::Raw)[0] >= 0.0);
        }
    }

    #[test]
    fn swapping_arms_leaves_correlation_invariant(
        xc in -1e-3..1e-3f64, xt in -1e-3..1e-3f64,
        cc in -0.3e-3..0.3e-3f64, ct in -0.3e-3..0.3e-3f64,
        dc in 0.2e-3..1.2e-3f64, dt in 0.2e-3..1.2e-3f64,
    ) {
        let s = OpticalSetup::default();
        let (c, t) = (mask(cc, dc, 55e-6, MaskLabel::C), mask(ct, dt, 55e-6, MaskLabel::T));
        let a = correlation(&s, &c, &t, xc, xt, PathMode::FourPath);
        let b = correlation(&s, &t.with_label(MaskLabel::C), &c.with_label(MaskLabel::T), xt, xc, PathMode::FourPath);
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-12));
    }

    #[test]
    fn paired_mask_translation_keeps_sensing_phase(delta in -0.5e-3..0.5e-3f64, xc in -1e-3..1e-3f64, xt in -1e-3..1e-3f64) {
        let s = OpticalSetup::default();
        let (dc, dt) = (mm(0.69), mm(0.57));
        let a = sensing_phase(&s, 0.0, dc, 0.0, dt, xc, xt);
        let b = sensing_phase(&s, delta * dt / dc, dc, delta, dt, xc, xt);
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn detector_t_scan_is_periodic_for_point_slits(
        xt in -1e-3..1e-3f64, xc in -0.5e-3..0.5e-3f64, ct in -0.2e-3..0.2e-3f64, dt in 0.3e-3..1.2e-3f64,
    ) {
        let s = OpticalSetup::default();
        let c = mask(0.0, mm(0.69), 0.0, MaskLabel::C);
        let t = mask(ct, dt, 0.0, MaskLabel::T);
        let period = s.lambda_f() / dt;
        let a = correlation(&s, &c, &t, xc, xt, PathMode::FourPath);
        let b = correlation(&s, &c, &t, xc, xt + period, PathMode::FourPath);
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1e-9));
    }

    #[test]
    fn two_path_equals_four_path_on_sinc_zeros(
        n in 1usize..4, dt in 0.3e-3..0.8e-3f64, extra in 0.02e-3..0.2e-3f64,
        xc in -0.5e-3..0.5e-3f64, xt in -0.5e-3..0.5e-3f64,
    ) {
        // centred masks: the crossed slit pairs sit (d_C + d_T)/2 apart
        let dc = dt + extra;
        let ell = 0.5 * (dc + dt) / n as f64;
        let s = OpticalSetup::default().with_source(SourceProfile::new(SourceShape::UniformHardEdge, ell).unwrap());
        let c = mask(0.0, dc, 0.0, MaskLabel::C);
        let t = mask(0.0, dt, 0.0, MaskLabel::T);
        let four = correlation(&s, &c, &t, xc, xt, PathMode::FourPath);
        let two = correlation(&s, &c, &t, xc, xt, PathMode::TwoPath);
        prop_assert!((four - two).abs() <= 1e-12 * four.max(1e-12), "{four} vs {two}");
    }

    #[test]
    fn merge_is_commutative_and_matches_stream(data in prop::collection::vec((0.0..10.0f64, 0.0..10.0f64), 2..200), cut in 0usize..200) {
        let cut = cut.min(data.len());
        let mut all = CorrelationAccumulator::new(1);
        let (mut a, mut b) = (CorrelationAccumulator::new(1), CorrelationAccumulator::new(1));
        for (i, &(x, y)) in data.iter().enumerate() {
            let smp = [DetectorSample { i_c: x, i_t: y }];
            all.accumulate(&smp).unwrap();
            if i < cut { a.accumulate(&smp).unwrap() } else { b.accumulate(&smp).unwrap() }
        }
        let ab = a.merge(&b).unwrap();
        prop_assert_eq!(&ab, &b.merge(&a).unwrap());
        let (r1, r2) = (all.finalize().unwrap()[0], ab.finalize().unwrap()[0]);
        let scale = r1.mean_ic * r1.mean_it;
        prop_assert!((r1.fluct_corr - r2.fluct_corr).abs() <= 1e-12 * scale);
        prop_assert!((r1.mean_ic - r2.mean_ic).abs() <= 1e-12 * r1.mean_ic);
    }

    #[test]
    fn covariance_matches_two_pass_reference(
        base in prop::collection::vec(0.0..5.0f64, 10..300),
        noise in prop::collection::vec(0.0..1.0f64, 300),
        gain in 0.2..3.0f64,
    ) {
        let n = base.len() as f64;
        let ys: Vec<f64> = base.iter().zip(&noise).map(|(x, e)| gain * x + e).collect();
        let mut acc = CorrelationAccumulator::new(1);
        for (&x, &y) in base.iter().zip(&ys) {
            acc.accumulate(&[DetectorSample { i_c: x, i_t: y }]).unwrap();
        }
        let mx = base.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let cov = base.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / n;
        let vx = base.iter().map(|x| (x - mx).powi(2)).sum::<f64>() / n;
        let vy = ys.iter().map(|y| (y - my).powi(2)).sum::<f64>() / n;
        prop_assume!(vx > 1e-3);
        let got = acc.finalize().unwrap()[0].fluct_corr;
        prop_assert!((got - cov).abs() <= 1e-10 * (vx * vy).sqrt().max(cov.abs()), "{got} vs {cov}");
    }
}

fn fringe_samples(period: f64, phase: f64, center: f64) -> (Vec<f64>, Vec<f64>) {
    let xs = linspace(-1.0, 1.0, 101);
    let ys = xs
        .iter()
        .map(|&x| 1.5 * (-0.5 * ((x - center) / 0.6).powi(2)).exp() * (1.0 + 0.7 * (2.0 * PI * x / period + phase).cos()) + 0.2)
        .collect();
    (xs, ys)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn noiseless_fit_recovers_parameters(period in 0.1..0.4f64, phase in -3.0..3.0f64, center in -0.2..0.2f64) {
        let (xs, ys) = fringe_samples(period, phase, center);
        let f = fit_fringe(&xs, &ys).unwrap();
        prop_assert!((f.period / period - 1.0).abs() < 5e-3);
        prop_assert!((f.visibility / 0.7 - 1.0).abs() < 5e-3);
        prop_assert!((f.amplitude / 1.5 - 1.0).abs() < 5e-3);
        prop_assert!((f.envelope_width / 0.6 - 1.0).abs() < 5e-3);
        let dphi = (f.phase - phase).rem_euclid(2.0 * PI);
        prop_assert!(dphi.min(2.0 * PI - dphi) < 5e-3 * PI);
    }

    #[test]
    fn period_is_invariant_under_affine_rescaling(period in 0.1..0.4f64, phase in -3.0..3.0f64, gain in 0.001..1000.0f64, shift in -100.0..100.0f64) {
        let (xs, ys) = fringe_samples(period, phase, 0.0);
        let scaled: Vec<f64> = ys.iter().map(|y| gain * y + shift).collect();
        let (a, b) = (fit_fringe(&xs, &ys).unwrap(), fit_fringe(&xs, &scaled).unwrap());
        prop_assert!((a.period / b.period - 1.0).abs() < 1e-8);
    }

    #[test]
    fn fringe_shift_is_antisymmetric(pa in -3.0..3.0f64, pb in -3.0..3.0f64, ca in -0.2..0.2f64, cb in -0.2..0.2f64) {
        let (xs, ya) = fringe_samples(0.25, pa, ca);
        let (_, yb) = fringe_samples(0.25, pb, cb);
        let (a, b) = (fit_fringe(&xs, &ya).unwrap(), fit_fringe(&xs, &yb).unwrap());
        let (ab, ba) = (fringe_shift(&a, &b).unwrap(), fringe_shift(&b, &a).unwrap());
        prop_assert!((ab + ba).abs() < 1e-12, "{ab} {ba}");
    }
}

#[test]
fn period_inversion_recovers_separations_across_sweep() {
    let s = OpticalSetup::default();
    let c = DoubleSlitMask::reference_c();
    for k in 0..10 {
        let dt = mm(0.3 + 0.1 * k as f64);
        let t = mask(0.0, dt, 55e-6, MaskLabel::T);
        let xs = linspace(-mm(0.6), mm(0.6), 121);
        let ys: Vec<f64> = xs.iter().map(|&x| correlation(&s, &c, &t, 0.0, x, PathMode::FourPath)).collect();
        let f = fit_fringe(&xs, &ys).unwrap();
        let e = invert_period(f.period, f.period_stderr, &s, ScanAxis::DetectorT).unwrap();
        assert!((e.value / dt - 1.0).abs() < 0.01, "d_T = {dt}: recovered {}", e.value);
    }
}
