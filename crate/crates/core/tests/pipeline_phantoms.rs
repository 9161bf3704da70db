use choroidseg_core::phantom::{mean_abs_error, PhantomSpec};
use choroidseg_core::pipeline::{detect_choroid, detect_rpe};
use choroidseg_core::{segment, Boundary, Error, Flag, GrayImage, Layer, PipelineConfig, Point};
use ndarray::Array2;

fn max_interior_error(found: &Boundary, truth: &Boundary) -> usize {
    let n = found.len();
    (1..n - 1)
        .map(|c| found.rows[c].abs_diff(truth.rows[c]))
        .max()
        .unwrap()
}

#[test]
fn clean_three_band_phantom() {
    // Without speckle the sclera's falsity is exactly zero, where the gamma
    // and log stages are steepest; the detected edge sits two rows into the
    // sclera.
    let p = PhantomSpec::default().generate().unwrap();
    let result = segment(&p.image, &PipelineConfig::default()).unwrap();
    assert!(max_interior_error(&result.rpe, &p.rpe_truth) <= 1);
    let offsets: Vec<i64> = (1..p.spec.cols - 1)
        .map(|c| result.choroid.rows[c] as i64 - p.choroid_truth.rows[c] as i64)
        .collect();
    assert!(offsets.iter().all(|d| (0..=2).contains(d)), "{offsets:?}");
    assert!(
        (result.thickness.mean_px - p.spec.choroid_height).abs() <= 2.0,
        "{}",
        result.thickness.mean_px
    );
    assert!(result.flags.is_empty());
}

#[test]
fn tilted_band_stays_within_two_pixels() {
    for slope in [0.1, -0.1] {
        let rpe_row = if slope > 0.0 { 150.0 } else { 260.0 };
        let p = PhantomSpec {
            slope,
            rpe_row,
            noise_sigma: 6.0,
            seed: 5,
            ..PhantomSpec::default()
        }
        .generate()
        .unwrap();
        let rpe = detect_rpe(&p.image, &PipelineConfig::default()).unwrap();
        assert!(max_interior_error(&rpe, &p.rpe_truth) <= 2, "slope {slope}");
    }
}

#[test]
fn thin_bright_band_is_found_at_its_lower_edge() {
    let image = GrayImage::new(
        Array2::from_shape_fn(
            (60, 80),
            |(r, _)| if (30..33).contains(&r) { 220.0 } else { 30.0 },
        ),
        3.87167,
    )
    .unwrap();
    let rpe = detect_rpe(&image, &PipelineConfig::default()).unwrap();
    assert!(
        rpe.rows[1..79].iter().all(|&r| r.abs_diff(33) <= 1),
        "{:?}",
        rpe.rows
    );
}

#[test]
fn constant_scan_is_flagged() {
    let image = GrayImage::new(Array2::from_elem((40, 50), 90.0), 3.87167).unwrap();
    let result = segment(&image, &PipelineConfig::default()).unwrap();
    assert!(result.flags.contains(&Flag::LowConfidence));
    assert_eq!(result.rpe.len(), 50);
    assert!(result
        .rpe
        .rows
        .iter()
        .chain(&result.choroid.rows)
        .all(|&r| r < 40));
}

#[test]
fn rpe_on_the_bottom_row_leaves_no_room() {
    let image = GrayImage::new(Array2::from_elem((30, 20), 50.0), 3.87167).unwrap();
    let rpe = Boundary::new(Layer::Rpe, vec![29; 20]);
    match detect_choroid(&image, &rpe, &PipelineConfig::default()) {
        Err(Error::Geometry(msg)) => assert!(msg.contains("0..=19"), "{msg}"),
        other => panic!("expected a geometry error, got {other:?}"),
    }
}

#[test]
fn segmentation_is_deterministic_and_randomised_phantoms_are_close() {
    let p = PhantomSpec::randomized(42).generate().unwrap();
    let cfg = PipelineConfig::default();
    let a = segment(&p.image, &cfg).unwrap();
    let b = segment(&p.image, &cfg).unwrap();
    assert!(a.same_segmentation(&b));
    assert!(mean_abs_error(&a.rpe, &p.rpe_truth) <= 2.0);
    assert!(mean_abs_error(&a.choroid, &p.choroid_truth) <= 3.0);
    assert!(a.rpe.rows.iter().zip(&a.choroid.rows).all(|(r, c)| c >= r));
}

#[test]
fn corrections_refresh_thickness_and_flags() {
    let p = PhantomSpec::default().generate().unwrap();
    let result = segment(&p.image, &PipelineConfig::default()).unwrap();
    let lifted = result
        .apply_correction(Layer::Choroid, Point::new(100, 150), Point::new(200, 150))
        .unwrap();
    assert!(lifted.flags.contains(&Flag::ChoroidAboveRpe));
    assert_eq!(
        lifted.thickness.per_column_px[150],
        150 - result.rpe.rows[150] as i64
    );
    assert_eq!(lifted.choroid.rows[99], result.choroid.rows[99]);

    let restored = lifted
        .apply_correction(
            Layer::Choroid,
            Point::new(100, result.choroid.rows[100]),
            Point::new(200, result.choroid.rows[200]),
        )
        .unwrap();
    assert!(!restored.flags.contains(&Flag::ChoroidAboveRpe));
    assert!(matches!(
        result.apply_correction(Layer::Rpe, Point::new(1, 1), Point::new(900, 1)),
        Err(Error::LabelOutOfBounds { .. })
    ));
}
