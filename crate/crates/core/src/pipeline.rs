//! End-to-end segmentation: RPE search, flattening, choroid search on the
//! enhanced falsity set, thickness, manual correction and evaluation.

use std::path::{Path, PathBuf};
use std::time::Instant;

use image::{Rgb, RgbImage};
use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{
    flatten, gamma_correct, homomorphic_filter, unflatten_boundary, vertical_gradient, FlattenMap,
    HomomorphicParams,
};
use crate::graph_segment::{
    node_gradient_score, shortest_boundary, Boundary, Layer, WeightConfig, WeightMode, MAX_GRAY,
};
use crate::neutrosophic::{alpha_mean, matrix_to_neutrosophic, NeutroConfig, NeutrosophicImage};
use crate::scan_io::{GrayImage, LabelSet, Point, DEFAULT_RESOLUTION_UM};

/// Millimetres per pixel row at the default axial resolution.
pub const MM_PER_PX: f64 = 0.00387167;

/// Millimetres per pixel row for a resolution given in micrometres.
pub fn mm_per_px(resolution_um: f64) -> f64 {
    if resolution_um == DEFAULT_RESOLUTION_UM {
        MM_PER_PX
    } else {
        resolution_um / 1000.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EnhancementOrder {
    #[default]
    GammaThenHomomorphic,
    HomomorphicThenGamma,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub neutro: NeutroConfig,
    pub homomorphic: HomomorphicParams,
    /// Gamma applied to the falsity set before the choroid search.
    pub gamma: f64,
    pub weight_rpe: WeightConfig,
    pub weight_choroid: WeightConfig,
    /// Rows skipped below the flattened RPE before the choroid search.
    pub roi_offset_px: usize,
    pub apply_alpha_mean: bool,
    pub apply_homomorphic: bool,
    pub enhancement_order: EnhancementOrder,
    /// RPE gradients weaker than this (gray levels) mark the result as
    /// low confidence.
    pub min_gradient: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            neutro: NeutroConfig::default(),
            homomorphic: HomomorphicParams::default(),
            gamma: 0.2,
            weight_rpe: WeightConfig::rpe(),
            weight_choroid: WeightConfig::dark_to_light(),
            roi_offset_px: 5,
            apply_alpha_mean: false,
            apply_homomorphic: true,
            enhancement_order: EnhancementOrder::GammaThenHomomorphic,
            min_gradient: 1.0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.neutro.validate()?;
        self.homomorphic.validate()?;
        self.weight_rpe.validate()?;
        self.weight_choroid.validate()?;
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::Parameter(format!(
                "gamma must lie in (0, 1], got {}",
                self.gamma
            )));
        }
        if self.weight_rpe.mode != WeightMode::Rpe {
            return Err(Error::Parameter("weight_rpe.mode must be `rpe`".into()));
        }
        if self.weight_choroid.mode != WeightMode::DarkToLight {
            return Err(Error::Parameter(
                "weight_choroid.mode must be `dark_to_light`".into(),
            ));
        }
        Ok(())
    }

    fn neutrosophic(&self, m: &Array2<f64>) -> Result<NeutrosophicImage> {
        let ns = matrix_to_neutrosophic(m, &self.neutro)?;
        if self.apply_alpha_mean {
            alpha_mean(&ns, &self.neutro)
        } else {
            Ok(ns)
        }
    }

    fn enhance(&self, falsity: &Array2<f64>) -> Result<Array2<f64>> {
        let scaled = falsity.mapv(|f| f * MAX_GRAY);
        let homomorphic = |m: &Array2<f64>| {
            if self.apply_homomorphic {
                homomorphic_filter(m, &self.homomorphic)
            } else {
                Ok(m.clone())
            }
        };
        match self.enhancement_order {
            EnhancementOrder::GammaThenHomomorphic => {
                homomorphic(&gamma_correct(&scaled, self.gamma)?)
            }
            EnhancementOrder::HomomorphicThenGamma => {
                gamma_correct(&homomorphic(&scaled)?, self.gamma)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    /// The RPE gradient never exceeded `min_gradient`.
    LowConfidence,
    /// The choroid boundary lies above the RPE in at least one column.
    ChoroidAboveRpe,
    /// No room below the RPE for a choroid search; the choroid boundary is
    /// a copy of the RPE.
    ChoroidUnavailable,
}

/// Choroid thickness per column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThicknessProfile {
    pub per_column_px: Vec<i64>,
    pub per_column_mm: Vec<f64>,
    pub mean_px: f64,
    pub mean_mm: f64,
    pub mm_per_px: f64,
}

/// Wall time per stage, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StageTimings {
    pub rpe_ms: f64,
    pub choroid_ms: f64,
    pub thickness_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationResult {
    pub rows: usize,
    pub cols: usize,
    pub axial_resolution_um: f64,
    /// RPE boundary in scan coordinates.
    pub rpe: Boundary,
    /// Choroid–sclera boundary in scan coordinates.
    pub choroid: Boundary,
    pub flatten_map: FlattenMap,
    pub thickness: ThicknessProfile,
    pub flags: Vec<Flag>,
    pub config: PipelineConfig,
    pub timings: StageTimings,
}

impl SegmentationResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn boundary(&self, layer: Layer) -> &Boundary {
        match layer {
            Layer::Rpe => &self.rpe,
            Layer::Choroid => &self.choroid,
        }
    }

    /// Same segmentation, ignoring timings.
    pub fn same_segmentation(&self, other: &Self) -> bool {
        Self {
            timings: StageTimings::default(),
            ..self.clone()
        } == Self {
            timings: StageTimings::default(),
            ..other.clone()
        }
    }

    /// Replaces the span between `a` and `b` of one boundary by the straight
    /// line through both points, then refreshes thickness and flags.
    pub fn apply_correction(&self, layer: Layer, a: Point, b: Point) -> Result<Self> {
        for p in [a, b] {
            if p.col >= self.cols || p.row >= self.rows {
                return Err(Error::LabelOutOfBounds {
                    col: p.col,
                    row: p.row,
                    rows: self.rows,
                    cols: self.cols,
                });
            }
        }
        let mut out = self.clone();
        match layer {
            Layer::Rpe => out.rpe = apply_manual_correction(&self.rpe, a, b)?,
            Layer::Choroid => out.choroid = apply_manual_correction(&self.choroid, a, b)?,
        }
        out.thickness = thickness_profile(&out.rpe, &out.choroid, out.axial_resolution_um)?;
        out.flags.retain(|f| *f != Flag::ChoroidAboveRpe);
        if choroid_above_rpe(&out.rpe, &out.choroid) {
            out.flags.push(Flag::ChoroidAboveRpe);
        }
        Ok(out)
    }
}

fn choroid_above_rpe(rpe: &Boundary, choroid: &Boundary) -> bool {
    rpe.rows.iter().zip(&choroid.rows).any(|(r, c)| c < r)
}

struct RpeStage {
    boundary: Boundary,
    peak_gradient: f64,
}

fn rpe_stage(image: &GrayImage, cfg: &PipelineConfig) -> Result<RpeStage> {
    let ns = cfg.neutrosophic(image.pixels())?;
    let grad = vertical_gradient(&ns.truth.mapv(|t| t * MAX_GRAY))?;
    let peak_gradient = grad.iter().fold(0f64, |m, g| m.max(g.abs()));
    let score = node_gradient_score(&grad, WeightMode::Rpe);
    let boundary = shortest_boundary(&score, image.pixels(), &cfg.weight_rpe)?;
    Ok(RpeStage {
        boundary,
        peak_gradient,
    })
}

/// Finds the RPE as the strongest bright-above-dark path through the
/// gradient of the truth set (scaled to gray levels).
pub fn detect_rpe(image: &GrayImage, cfg: &PipelineConfig) -> Result<Boundary> {
    cfg.validate()?;
    Ok(rpe_stage(image, cfg)?.boundary)
}

/// Finds the choroid–sclera boundary below a known RPE.
///
/// The scan is flattened along the RPE and cropped to the rows below it.
/// The falsity set of that region is gamma corrected and homomorphically
/// filtered, turned back to scan polarity (choroid dark, sclera bright) and
/// searched for the strongest dark-above-bright path.
pub fn detect_choroid(
    image: &GrayImage,
    rpe: &Boundary,
    cfg: &PipelineConfig,
) -> Result<(Boundary, FlattenMap)> {
    cfg.validate()?;
    let (flat, map) = flatten(image, rpe)?;
    let start = map.pivot_row + cfg.roi_offset_px;
    if start + 3 > image.rows() {
        let lowest: Vec<usize> = (0..rpe.len()).filter(|&c| map.shifts[c] == 0).collect();
        return Err(Error::Geometry(format!(
            "region below the RPE starts at row {start} of {}; lowest RPE row {} at columns {}",
            image.rows(),
            map.pivot_row,
            summarize_columns(&lowest)
        )));
    }
    let roi = flat.pixels().slice(s![start.., ..]).to_owned();
    let ns = cfg.neutrosophic(&roi)?;
    let enhanced = cfg.enhance(&ns.falsity)?;
    let search = enhanced.mapv(|v| MAX_GRAY - v);
    let grad = vertical_gradient(&search)?;
    let score = node_gradient_score(&grad, WeightMode::DarkToLight);
    let in_roi = shortest_boundary(&score, &search, &cfg.weight_choroid)?;
    let flattened = Boundary::new(
        Layer::Choroid,
        in_roi.rows.iter().map(|r| r + start).collect(),
    );
    Ok((unflatten_boundary(&flattened, &map)?, map))
}

fn summarize_columns(cols: &[usize]) -> String {
    match cols {
        [] => "none".into(),
        [c] => c.to_string(),
        [first, .., last] if cols.len() > 6 => {
            format!("{first}..={last} ({} columns)", cols.len())
        }
        _ => cols
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(", "),
    }
}

/// Runs the whole pipeline on one scan.
pub fn segment(image: &GrayImage, cfg: &PipelineConfig) -> Result<SegmentationResult> {
    cfg.validate()?;
    let started = Instant::now();
    let mut flags = Vec::new();

    let rpe = rpe_stage(image, cfg)?;
    let rpe_done = Instant::now();
    let low_confidence = rpe.peak_gradient < cfg.min_gradient;
    if low_confidence {
        flags.push(Flag::LowConfidence);
    }
    let rpe = rpe.boundary;

    let (choroid, flatten_map) = match detect_choroid(image, &rpe, cfg) {
        Ok(found) => found,
        Err(Error::Geometry(_)) if low_confidence => {
            flags.push(Flag::ChoroidUnavailable);
            let map = FlattenMap::from_boundary(&rpe, image.rows())?;
            (Boundary::new(Layer::Choroid, rpe.rows.clone()), map)
        }
        Err(e) => return Err(e),
    };
    let choroid_done = Instant::now();

    let thickness = thickness_profile(&rpe, &choroid, image.axial_resolution_um())?;
    if choroid_above_rpe(&rpe, &choroid) {
        flags.push(Flag::ChoroidAboveRpe);
    }
    let finished = Instant::now();

    let ms = |a: Instant, b: Instant| (b - a).as_secs_f64() * 1e3;
    Ok(SegmentationResult {
        rows: image.rows(),
        cols: image.cols(),
        axial_resolution_um: image.axial_resolution_um(),
        rpe,
        choroid,
        flatten_map,
        thickness,
        flags,
        config: cfg.clone(),
        timings: StageTimings {
            rpe_ms: ms(started, rpe_done),
            choroid_ms: ms(rpe_done, choroid_done),
            thickness_ms: ms(choroid_done, finished),
            total_ms: ms(started, finished),
        },
    })
}

/// Choroid minus RPE row per column, in pixels and millimetres.
pub fn thickness_profile(
    rpe: &Boundary,
    choroid: &Boundary,
    resolution_um: f64,
) -> Result<ThicknessProfile> {
    if rpe.len() != choroid.len() {
        return Err(Error::Dimension(format!(
            "RPE has {} columns, choroid has {}",
            rpe.len(),
            choroid.len()
        )));
    }
    if !(resolution_um > 0.0) {
        return Err(Error::Parameter(format!(
            "resolution must be positive, got {resolution_um}"
        )));
    }
    let scale = mm_per_px(resolution_um);
    let per_column_px: Vec<i64> = rpe
        .rows
        .iter()
        .zip(&choroid.rows)
        .map(|(&r, &c)| c as i64 - r as i64)
        .collect();
    let per_column_mm = per_column_px.iter().map(|&px| px as f64 * scale).collect();
    let mean_px = if per_column_px.is_empty() {
        0.0
    } else {
        per_column_px.iter().sum::<i64>() as f64 / per_column_px.len() as f64
    };
    Ok(ThicknessProfile {
        per_column_px,
        per_column_mm,
        mean_px,
        mean_mm: mean_px * scale,
        mm_per_px: scale,
    })
}

/// Writes `col,thickness_px,thickness_mm` rows.
pub fn write_thickness_csv(profile: &ThicknessProfile, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::from("col,thickness_px,thickness_mm\n");
    for (c, (px, mm)) in profile
        .per_column_px
        .iter()
        .zip(&profile.per_column_mm)
        .enumerate()
    {
        out.push_str(&format!("{c},{px},{mm}\n"));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Blue → cyan → green → yellow → red, `t` clamped to [0, 1].
pub fn colormap(t: f64) -> Rgb<u8> {
    const STOPS: [[f64; 3]; 5] = [
        [0.0, 0.0, 255.0],
        [0.0, 255.0, 255.0],
        [0.0, 255.0, 0.0],
        [255.0, 255.0, 0.0],
        [255.0, 0.0, 0.0],
    ];
    let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) };
    let x = t * (STOPS.len() - 1) as f64;
    let i = (x.floor() as usize).min(STOPS.len() - 2);
    let f = x - i as f64;
    let mix = |k: usize| (STOPS[i][k] + f * (STOPS[i + 1][k] - STOPS[i][k])).round() as u8;
    Rgb([mix(0), mix(1), mix(2)])
}

/// Files written by [`thickness_map`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThicknessMapFiles {
    pub csv: PathBuf,
    pub raster: PathBuf,
    pub range: PathBuf,
}

/// Writes a scan × column thickness map.
///
/// `out` is a path stem: the CSV matrix goes to `<out>.csv` (header
/// `scan,0,1,…`, millimetres), the colour raster to `<out>.png` (one pixel
/// row per scan, [`colormap`] from min to max) and the range to
/// `<out>.range.txt`.
pub fn thickness_map(
    volume: &[SegmentationResult],
    out: impl AsRef<Path>,
) -> Result<ThicknessMapFiles> {
    let first = volume
        .first()
        .ok_or_else(|| Error::Dimension("thickness map needs at least one scan".into()))?;
    let cols = first.thickness.per_column_mm.len();
    if let Some((i, r)) = volume
        .iter()
        .enumerate()
        .find(|(_, r)| r.thickness.per_column_mm.len() != cols)
    {
        return Err(Error::Dimension(format!(
            "scan {i} has {} columns, scan 0 has {cols}",
            r.thickness.per_column_mm.len()
        )));
    }
    if cols == 0 {
        return Err(Error::Dimension("thickness map of zero columns".into()));
    }

    let out = out.as_ref();
    let files = ThicknessMapFiles {
        csv: out.with_extension("csv"),
        raster: out.with_extension("png"),
        range: out.with_extension("range.txt"),
    };

    let mut csv = String::from("scan");
    for c in 0..cols {
        csv.push_str(&format!(",{c}"));
    }
    csv.push('\n');
    for (s, r) in volume.iter().enumerate() {
        csv.push_str(&s.to_string());
        for mm in &r.thickness.per_column_mm {
            csv.push_str(&format!(",{mm}"));
        }
        csv.push('\n');
    }
    std::fs::write(&files.csv, csv)?;

    let values = volume
        .iter()
        .flat_map(|r| r.thickness.per_column_mm.iter().copied());
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    let span = hi - lo;
    let raster = RgbImage::from_fn(cols as u32, volume.len() as u32, |x, y| {
        let v = volume[y as usize].thickness.per_column_mm[x as usize];
        colormap(if span > 0.0 { (v - lo) / span } else { 0.0 })
    });
    raster
        .save_with_format(&files.raster, image::ImageFormat::Png)
        .map_err(|e| Error::Encode(e.to_string()))?;
    std::fs::write(
        &files.range,
        format!("min_mm={lo}\nmax_mm={hi}\ncolormap=blue,cyan,green,yellow,red\n"),
    )?;
    Ok(files)
}

/// Replaces the boundary strictly between the columns of `a` and `b` by the
/// straight line joining them (rounded to the nearest row) and pins both
/// endpoints. Points may be given in either order.
pub fn apply_manual_correction(b: &Boundary, a_point: Point, b_point: Point) -> Result<Boundary> {
    let (left, right) = if a_point.col <= b_point.col {
        (a_point, b_point)
    } else {
        (b_point, a_point)
    };
    if left.col == right.col {
        return Err(Error::DegenerateSelection(left.col));
    }
    if right.col >= b.len() {
        return Err(Error::Dimension(format!(
            "column {} outside a {}-column boundary",
            right.col,
            b.len()
        )));
    }
    let mut rows = b.rows.clone();
    let span = (right.col - left.col) as f64;
    let rise = right.row as f64 - left.row as f64;
    for c in left.col..=right.col {
        let t = (c - left.col) as f64 / span;
        rows[c] = (left.row as f64 + t * rise).round() as usize;
    }
    rows[left.col] = left.row;
    rows[right.col] = right.row;
    Ok(Boundary::new(b.layer, rows))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointError {
    pub col: usize,
    pub labeled_row: usize,
    pub predicted_row: usize,
    pub abs_diff: usize,
}

/// Mean unsigned error of one boundary against expert points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub layer: Layer,
    pub n_points: usize,
    pub mean_unsigned_px: f64,
    pub mean_unsigned_mm: f64,
    pub per_point: Vec<PointError>,
}

/// Compares a boundary with expert labels at the default resolution.
pub fn evaluate(b: &Boundary, labels: &LabelSet) -> Result<ErrorReport> {
    evaluate_at(b, labels, DEFAULT_RESOLUTION_UM)
}

pub fn evaluate_at(b: &Boundary, labels: &LabelSet, resolution_um: f64) -> Result<ErrorReport> {
    if b.layer != labels.layer {
        return Err(Error::LayerMismatch {
            boundary: b.layer.to_string(),
            labels: labels.layer.to_string(),
        });
    }
    if labels.is_empty() {
        return Err(Error::UndefinedMetric(format!(
            "no {} labels to evaluate against",
            labels.layer
        )));
    }
    let mut per_point = Vec::with_capacity(labels.len());
    for p in &labels.points {
        let predicted_row = *b.rows.get(p.col).ok_or_else(|| {
            Error::Dimension(format!(
                "label column {} outside a {}-column boundary",
                p.col,
                b.len()
            ))
        })?;
        per_point.push(PointError {
            col: p.col,
            labeled_row: p.row,
            predicted_row,
            abs_diff: predicted_row.abs_diff(p.row),
        });
    }
    let mean_unsigned_px =
        per_point.iter().map(|e| e.abs_diff as f64).sum::<f64>() / per_point.len() as f64;
    Ok(ErrorReport {
        layer: b.layer,
        n_points: per_point.len(),
        mean_unsigned_px,
        mean_unsigned_mm: mean_unsigned_px * mm_per_px(resolution_um),
        per_point,
    })
}

/// Evaluates a stored result, checking label rows against the scan height.
pub fn evaluate_result(result: &SegmentationResult, labels: &LabelSet) -> Result<ErrorReport> {
    if let Some(p) = labels
        .points
        .iter()
        .find(|p| p.col >= result.cols || p.row >= result.rows)
    {
        return Err(Error::LabelOutOfBounds {
            col: p.col,
            row: p.row,
            rows: result.rows,
            cols: result.cols,
        });
    }
    evaluate_at(
        result.boundary(labels.layer),
        labels,
        result.axial_resolution_um,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn boundary(rows: &[usize]) -> Boundary {
        Boundary::new(Layer::Choroid, rows.to_vec())
    }

    #[test]
    fn thickness_examples() {
        let rpe = Boundary::new(Layer::Rpe, vec![100; 4]);
        let same = Boundary::new(Layer::Choroid, vec![100; 4]);
        let p = thickness_profile(&rpe, &same, DEFAULT_RESOLUTION_UM).unwrap();
        assert!(p.per_column_px.iter().all(|&v| v == 0));

        let deep = Boundary::new(Layer::Choroid, vec![150; 4]);
        let p = thickness_profile(&rpe, &deep, DEFAULT_RESOLUTION_UM).unwrap();
        for mm in &p.per_column_mm {
            assert!((mm - 0.1935835).abs() < 1e-12);
        }

        let rpe = Boundary::new(Layer::Rpe, vec![0, 0]);
        let p = thickness_profile(&rpe, &boundary(&[10, 20]), DEFAULT_RESOLUTION_UM).unwrap();
        assert!((p.per_column_mm[0] - 0.0387167).abs() < 1e-12);
        assert!((p.per_column_mm[1] - 0.0774334).abs() < 1e-12);
        assert_eq!(p.mean_px, 15.0);

        assert!(matches!(
            thickness_profile(&rpe, &boundary(&[1]), DEFAULT_RESOLUTION_UM),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn correction_examples() {
        let b = boundary(&(0..30).map(|c| 100 + c).collect::<Vec<_>>());
        let same = apply_manual_correction(&b, Point::new(3, 103), Point::new(12, 112)).unwrap();
        assert_eq!(same, b);

        let flat = boundary(&[50; 30]);
        let out = apply_manual_correction(&flat, Point::new(10, 100), Point::new(20, 110)).unwrap();
        assert_eq!(out.rows[15], 105);
        assert_eq!(out.rows[10], 100);
        assert_eq!(out.rows[20], 110);
        assert_eq!(out.rows[9], 50);
        assert_eq!(out.rows[21], 50);

        // reversed order is accepted
        let rev = apply_manual_correction(&flat, Point::new(20, 110), Point::new(10, 100)).unwrap();
        assert_eq!(rev, out);

        let adj = apply_manual_correction(&flat, Point::new(5, 7), Point::new(6, 90)).unwrap();
        let changed: Vec<usize> = (0..30).filter(|&c| adj.rows[c] != 50).collect();
        assert_eq!(changed, vec![5, 6]);

        assert!(matches!(
            apply_manual_correction(&flat, Point::new(4, 1), Point::new(4, 9)),
            Err(Error::DegenerateSelection(4))
        ));
    }

    #[test]
    fn evaluation_examples() {
        let b = boundary(&[10, 20, 30, 40]);
        let mut labels = LabelSet::new(Layer::Choroid);
        labels.points = vec![Point::new(0, 10), Point::new(2, 30)];
        let r = evaluate(&b, &labels).unwrap();
        assert_eq!(r.mean_unsigned_px, 0.0);

        labels.points = vec![Point::new(1, 24), Point::new(3, 40)];
        let r = evaluate(&b, &labels).unwrap();
        assert_eq!(r.mean_unsigned_px, 2.0);
        assert!((r.mean_unsigned_mm - 0.00774334).abs() < 1e-15);
        assert_eq!(r.mean_unsigned_mm, 2.0 * MM_PER_PX);

        assert!(matches!(
            evaluate(&b, &LabelSet::new(Layer::Choroid)),
            Err(Error::UndefinedMetric(_))
        ));
        assert!(matches!(
            evaluate(&b, &LabelSet::new(Layer::Rpe)),
            Err(Error::LayerMismatch { .. })
        ));
        labels.points = vec![Point::new(9, 1)];
        assert!(matches!(evaluate(&b, &labels), Err(Error::Dimension(_))));
    }

    #[test]
    fn published_error_pairs_share_the_pixel_size() {
        // Reported unsigned errors, px -> mm, rounded to the published digits.
        for (px, mm) in [(3.34, 0.0129), (6.55, 0.0253)] {
            assert!((px * MM_PER_PX - mm).abs() < 1e-4);
        }
    }

    #[test]
    fn colormap_endpoints() {
        assert_eq!(colormap(0.0), Rgb([0, 0, 255]));
        assert_eq!(colormap(1.0), Rgb([255, 0, 0]));
        assert_eq!(colormap(0.5), Rgb([0, 255, 0]));
    }

    #[test]
    fn default_config_is_valid() {
        let cfg = PipelineConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.gamma, 0.2);
        assert_eq!(cfg.homomorphic.sigma, 3.2);
        assert_eq!(cfg.weight_rpe.d_above, 10);
        assert_eq!(cfg.weight_rpe.w_min, 1e-5);
        assert_eq!(cfg.neutro.window, 5);
    }

    #[test]
    fn mm_scale_is_the_published_constant() {
        assert_eq!(mm_per_px(DEFAULT_RESOLUTION_UM), 0.00387167);
        assert!((mm_per_px(5.0) - 0.005).abs() < 1e-18);
    }
}
