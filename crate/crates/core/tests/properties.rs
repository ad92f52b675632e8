use portagrad::corpus::{parse_corpus, write_corpus};
use portagrad::events::segment;
use portagrad::recovery::recover_trace;
use portagrad::*;
use proptest::prelude::*;

fn kind() -> impl Strategy<Value = EventKind> {
    prop_oneof![Just(EventKind::Sliding), Just(EventKind::CleanShift)]
}

fn sonata() -> impl Strategy<Value = Sonata> {
    prop_oneof![
        Just(Sonata::Op69),
        Just(Sonata::Op102No1),
        "op[0-9]{1,3}(no[1-5])?"
            .prop_filter("canonical names parse to their own variants", |s| s != "op69" && s != "op102no1")
            .prop_map(Sonata::Other),
    ]
}

prop_compose! {
    fn corpus_record()(
        performer in "[A-Za-z ,.'\"-]{1,24}",
        year in 1877i32..=2025,
        sonata in sonata(),
        bar in 1u32..2000,
        kind in kind(),
        g in 1e-3f64..20_000.0,
        slide_s in 0.05f64..2.0,
        shift_s in 0.0f64..0.0499,
        bpm in 20.0f64..240.0,
    ) -> CorpusRecord {
        let sliding = kind == EventKind::Sliding;
        CorpusRecord {
            performer,
            year,
            sonata,
            bar,
            kind,
            gradient_px: if sliding { g / 2220.0 } else { 0.0 },
            gradient_hz_s: if sliding { g } else { 0.0 },
            duration_s: if sliding { slide_s } else { shift_s },
            bpm,
        }
    }
}

fn small_spectrogram() -> Spectrogram<f64> {
    let (buf, _) = synth_glide(&GlideSpec::new(250.0, 330.0, 0.1)).unwrap();
    compute_spectrogram(&buf, &SpectroConfig::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn corpus_csv_round_trip(records in prop::collection::vec(corpus_record(), 0..40)) {
        for r in &records {
            prop_assert!(r.validate().is_ok(), "{:?}", r.validate());
        }
        let mut bytes = Vec::new();
        write_corpus(&records, &mut bytes, true).unwrap();
        let back = parse_corpus(bytes.as_slice(), std::path::Path::new("mem.csv")).unwrap();
        prop_assert_eq!(back, records);
    }

    #[test]
    fn regression_shift_and_scale(
        pts in prop::collection::vec((-100.0f64..100.0, -1e3f64..1e3), 3..30),
        dy in -1e3f64..1e3,
        k in 0.1f64..10.0,
    ) {
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let Ok(base) = linear_regression(&xs, &ys) else { return Ok(()) };
        prop_assert!((0.0..=1.0).contains(&base.r_squared));
        let shifted: Vec<f64> = ys.iter().map(|y| y + dy).collect();
        let s = linear_regression(&xs, &shifted).unwrap();
        prop_assert!((s.slope - base.slope).abs() <= 1e-6 * (1.0 + base.slope.abs()));
        let scaled: Vec<f64> = ys.iter().map(|y| y * k).collect();
        let c = linear_regression(&xs, &scaled).unwrap();
        prop_assert!((c.slope - k * base.slope).abs() <= 1e-6 * (1.0 + (k * base.slope).abs()));
        prop_assert!((c.r_squared - base.r_squared).abs() <= 1e-6);
        let mut rev = pts.clone();
        rev.reverse();
        let r = linear_regression(
            &rev.iter().map(|p| p.0).collect::<Vec<_>>(),
            &rev.iter().map(|p| p.1).collect::<Vec<_>>(),
        ).unwrap();
        prop_assert!((r.slope - base.slope).abs() <= 1e-6 * (1.0 + base.slope.abs()));
    }

    #[test]
    fn calibration_is_linear(g in 0.0f64..50.0, a in 0.0f64..20.0, k in 0.25f64..4.0) {
        let cal = CalibrationParams::<f64>::default();
        let one = calibrate_gradient(g, &cal).unwrap();
        let scaled = calibrate_gradient(a * g, &cal).unwrap();
        prop_assert!((scaled - a * one).abs() <= 1e-9 * (1.0 + scaled.abs()));
        // Halving the window doubles s_t and the factor with it.
        let c2 = make_calibration(cal.freq_range_hz, cal.image_height_px, cal.image_width_px, cal.window_seconds / k).unwrap();
        prop_assert!((c2.factor - k * cal.factor).abs() <= 1e-9 * c2.factor);
    }

    #[test]
    fn pixel_measurement_consistent(x1 in 0.0f64..1000.0, dx in 0.5f64..200.0, y1 in 0.0f64..800.0, y2 in 0.0f64..800.0) {
        let cal = CalibrationParams::<f64>::default();
        let m = measure_from_pixels(PixelPoint::new(x1, y1).unwrap(), PixelPoint::new(x1 + dx, y2).unwrap(), &cal).unwrap();
        prop_assert!(m.gradient_hz_s >= 0.0);
        prop_assert!((m.gradient_hz_s * m.duration_s - m.delta_f_hz).abs() <= 1e-9 * (1.0 + m.delta_f_hz));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gain_composes(a in -30.0f64..30.0, b in -30.0f64..30.0) {
        let s = small_spectrogram();
        let two = s.apply_gain(a).apply_gain(b);
        let one = s.apply_gain(a + b);
        for (x, y) in two.magnitudes().iter().zip(one.magnitudes()) {
            prop_assert!((x - y).abs() <= 1e-9 * y.abs().max(1e-300));
        }
        let back = s.apply_gain(a).apply_gain(-a);
        for (x, y) in back.magnitudes().iter().zip(s.magnitudes()) {
            prop_assert!((x - y).abs() <= 1e-9 * y.abs().max(1e-300));
        }
    }

    #[test]
    fn synthesis_is_deterministic(seed in any::<u64>(), f0 in 150.0f64..500.0, glide in 0.05f64..0.3) {
        let mut spec = GlideSpec::new(f0, f0 * 1.25, glide);
        spec.timbre.snr_db = Some(20.0);
        spec.timbre.seed = seed;
        let (a, ta) = synth_glide(&spec).unwrap();
        let (b, tb) = synth_glide(&spec).unwrap();
        prop_assert_eq!(a.samples(), b.samples());
        prop_assert_eq!(ta, tb);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn events_follow_a_time_shift(f0 in 180.0f64..450.0, ratio in 1.15f64..1.6, glide in 0.06f64..0.3, dt in -2.0f64..2.0) {
        let (buf, _) = synth_glide(&GlideSpec::new(f0, f0 * ratio, glide)).unwrap();
        let spec = compute_spectrogram(&buf, &SpectroConfig::default()).unwrap();
        let params = TrackingParams::default();
        let seg = SegmentationParams::default();
        let base = segment(&track_pitch(&spec, &params), &seg).events;
        let moved = segment(&track_pitch(&spec.shifted(dt), &params), &seg).events;
        prop_assert_eq!(base.len(), moved.len());
        for (e, m) in base.iter().zip(&moved) {
            prop_assert_eq!(e.kind, m.kind);
            prop_assert!((m.onset_time - e.onset_time - dt).abs() < 1e-6);
            prop_assert!((m.termination_time - e.termination_time - dt).abs() < 1e-6);
            prop_assert!((m.gradient_hz_per_s - e.gradient_hz_per_s).abs() <= 1e-6 * (1.0 + e.gradient_hz_per_s));
        }
    }

    #[test]
    fn louder_never_hides_frames(atten_db in 0.0f64..30.0, seed in 0u64..1000) {
        let mut g = GlideSpec::new(220.0, 293.7, 0.15);
        g.timbre.snr_db = Some(25.0);
        g.timbre.seed = seed;
        let (buf, _) = synth_glide(&g).unwrap();
        let spec = compute_spectrogram(&buf, &SpectroConfig::default()).unwrap();
        let peak = spec.magnitudes().iter().copied().fold(0.0, f64::max);
        let rec = RecoveryParams { visibility_floor: peak * 10f64.powf(atten_db / 20.0), ..RecoveryParams::default() };
        let r = recover_trace(&spec, &SegmentationParams::default(), &rec, &TrackingParams::default());
        for w in r.diagnostics.windows(2) {
            prop_assert!(w[1].voiced_fraction >= w[0].voiced_fraction);
            prop_assert!(w[1].gain_db > w[0].gain_db);
        }
        prop_assert!(r.gain_used_db <= rec.max_gain_db);
        if r.recovered {
            prop_assert!(r.events.iter().any(|e| e.kind == EventKind::Sliding));
        }
    }
}
