//! Scan rasters, expert label files and boundary overlays.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use image::{ColorType, ImageFormat, Rgb, RgbImage};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph_segment::{Boundary, Layer};

/// Axial size of one pixel row in micrometres.
pub const DEFAULT_RESOLUTION_UM: f64 = 3.87167;

/// Grayscale B-scan with intensities in [0, 255] kept as reals.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pixels: Array2<f64>,
    axial_resolution_um: f64,
}

impl GrayImage {
    pub fn new(pixels: Array2<f64>, axial_resolution_um: f64) -> Result<Self> {
        let (rows, cols) = pixels.dim();
        if rows < 3 || cols < 3 {
            return Err(Error::Dimension(format!(
                "scans must be at least 3x3, got {rows}x{cols}"
            )));
        }
        if !(axial_resolution_um > 0.0 && axial_resolution_um.is_finite()) {
            return Err(Error::Parameter(format!(
                "axial resolution must be positive, got {axial_resolution_um}"
            )));
        }
        if let Some(v) = pixels.iter().find(|v| !(0.0..=255.0).contains(*v)) {
            return Err(Error::Domain(format!("pixel value {v} outside [0, 255]")));
        }
        Ok(Self {
            pixels,
            axial_resolution_um,
        })
    }

    /// Builds a scan from row-major 8-bit samples.
    pub fn from_bytes(
        rows: usize,
        cols: usize,
        bytes: &[u8],
        axial_resolution_um: f64,
    ) -> Result<Self> {
        if bytes.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} bytes cannot fill a {rows}x{cols} scan",
                bytes.len()
            )));
        }
        let pixels =
            Array2::from_shape_vec((rows, cols), bytes.iter().map(|&b| b as f64).collect())
                .map_err(|e| Error::Dimension(e.to_string()))?;
        Self::new(pixels, axial_resolution_um)
    }

    pub fn rows(&self) -> usize {
        self.pixels.nrows()
    }

    pub fn cols(&self) -> usize {
        self.pixels.ncols()
    }

    pub fn pixels(&self) -> &Array2<f64> {
        &self.pixels
    }

    pub fn axial_resolution_um(&self) -> f64 {
        self.axial_resolution_um
    }

    /// Row-major samples rounded and clamped to 8 bits.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.pixels.iter().map(|&v| quantize(v)).collect()
    }

    pub fn to_luma8(&self) -> image::GrayImage {
        image::GrayImage::from_raw(self.cols() as u32, self.rows() as u32, self.to_bytes())
            .expect("buffer matches dimensions")
    }
}

fn quantize(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Loads an 8-bit grayscale PGM (P5) or PNG scan.
pub fn load_scan(path: impl AsRef<Path>, resolution_um: Option<f64>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    decode_scan(&bytes, path, resolution_um)
}

/// Decodes an in-memory raster; `origin` only labels errors.
pub fn decode_scan(bytes: &[u8], origin: &Path, resolution_um: Option<f64>) -> Result<GrayImage> {
    let decode_err = |reason: String| Error::Decode {
        path: origin.to_path_buf(),
        reason,
    };
    let format = image::guess_format(bytes).map_err(|e| decode_err(e.to_string()))?;
    if !matches!(format, ImageFormat::Png | ImageFormat::Pnm) {
        return Err(decode_err(format!("unsupported raster format {format:?}")));
    }
    let decoded = image::load_from_memory_with_format(bytes, format)
        .map_err(|e| decode_err(e.to_string()))?;
    match decoded.color() {
        ColorType::L8 => {}
        ColorType::L16 => return Err(decode_err("16-bit samples are not supported".into())),
        other => {
            return Err(Error::Channel {
                path: origin.to_path_buf(),
                channels: other.channel_count(),
            })
        }
    }
    let luma = decoded.into_luma8();
    let (cols, rows) = luma.dimensions();
    GrayImage::from_bytes(
        rows as usize,
        cols as usize,
        luma.as_raw(),
        resolution_um.unwrap_or(DEFAULT_RESOLUTION_UM),
    )
}

/// Writes an 8-bit scan; the format follows the extension (`.pgm` or `.png`).
pub fn save_scan(image: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let format = raster_format(path)?;
    image
        .to_luma8()
        .save_with_format(path, format)
        .map_err(|e| Error::Encode(e.to_string()))
}

fn raster_format(path: &Path) -> Result<ImageFormat> {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("png") => Ok(ImageFormat::Png),
        Some("pgm") | Some("pnm") => Ok(ImageFormat::Pnm),
        _ => Err(Error::Parameter(format!(
            "{}: expected a .png or .pgm path",
            path.display()
        ))),
    }
}

/// Pixel position as `(col, row)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Point {
    pub col: usize,
    pub row: usize,
}

impl Point {
    pub fn new(col: usize, row: usize) -> Self {
        Self { col, row }
    }
}

/// Sparse expert-marked points on one layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSet {
    pub layer: Layer,
    pub points: Vec<Point>,
}

impl LabelSet {
    pub fn new(layer: Layer) -> Self {
        Self {
            layer,
            points: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// All label sets of a label file, keyed by layer.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Labels {
    sets: BTreeMap<Layer, LabelSet>,
}

impl Labels {
    pub fn get(&self, layer: Layer) -> Option<&LabelSet> {
        self.sets.get(&layer)
    }

    pub fn sets(&self) -> impl Iterator<Item = &LabelSet> {
        self.sets.values()
    }

    /// Number of layers with at least one point.
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn push(&mut self, layer: Layer, point: Point) {
        self.sets
            .entry(layer)
            .or_insert_with(|| LabelSet::new(layer))
            .points
            .push(point);
    }
}

const LABEL_HEADER: [&str; 3] = ["layer", "col", "row"];

/// Loads a `layer,col,row` CSV label file.
pub fn load_labels(path: impl AsRef<Path>) -> Result<Labels> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    parse_labels(file, path)
}

/// Parses label CSV from any reader; `origin` only labels errors.
pub fn parse_labels(reader: impl Read, origin: &Path) -> Result<Labels> {
    let parse_err = |line: u64, reason: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        reason,
    };
    let mut csv = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = csv.headers().map_err(|e| parse_err(1, e.to_string()))?;
    if header.iter().collect::<Vec<_>>() != LABEL_HEADER {
        return Err(parse_err(
            1,
            format!("expected header `layer,col,row`, got {header:?}"),
        ));
    }
    let mut labels = Labels::default();
    for record in csv.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(i).unwrap_or_default();
        let layer: Layer = field(0)
            .parse()
            .map_err(|e: Error| parse_err(line, e.to_string()))?;
        let index = |i: usize, what: &str| {
            field(i)
                .parse::<usize>()
                .map_err(|_| parse_err(line, format!("{what} {:?} is not an index", field(i))))
        };
        let col = index(1, "column")?;
        let row = index(2, "row")?;
        labels.push(layer, Point { col, row });
    }
    Ok(labels)
}

/// Writes labels in the `layer,col,row` format.
pub fn save_labels(labels: &Labels, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::from("layer,col,row\n");
    for set in labels.sets() {
        for p in &set.points {
            out.push_str(&format!("{},{},{}\n", set.layer, p.col, p.row));
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub const GREEN: Rgb<u8> = Rgb([0, 255, 0]);
pub const BLUE: Rgb<u8> = Rgb([0, 0, 255]);
pub const RED: Rgb<u8> = Rgb([255, 0, 0]);

/// Grayscale background with boundary polylines and 3×3 red label dots.
///
/// Each boundary colours one pixel per column, plus a vertical run joining
/// it to the previous column when the rows differ.
pub fn overlay_raster(
    image: &GrayImage,
    boundaries: &[(&Boundary, Rgb<u8>)],
    labels: Option<&LabelSet>,
) -> Result<RgbImage> {
    let (rows, cols) = (image.rows(), image.cols());
    for (b, _) in boundaries {
        if b.len() != cols {
            return Err(Error::Dimension(format!(
                "{} boundary has {} columns, scan has {cols}",
                b.layer,
                b.len()
            )));
        }
    }
    let mut out = RgbImage::from_fn(cols as u32, rows as u32, |x, y| {
        let v = quantize(image.pixels()[[y as usize, x as usize]]);
        Rgb([v, v, v])
    });
    for (b, color) in boundaries {
        for (c, &r) in b.rows.iter().enumerate() {
            let r = r.min(rows - 1);
            let (lo, hi) = match c.checked_sub(1).map(|p| b.rows[p].min(rows - 1)) {
                // run up to, not including, the previous column's row
                Some(p) if p + 1 < r => (p + 1, r),
                Some(p) if p > r + 1 => (r, p - 1),
                _ => (r, r),
            };
            for y in lo..=hi {
                out.put_pixel(c as u32, y as u32, *color);
            }
        }
    }
    if let Some(labels) = labels {
        for p in &labels.points {
            if p.col >= cols || p.row >= rows {
                return Err(Error::LabelOutOfBounds {
                    col: p.col,
                    row: p.row,
                    rows,
                    cols,
                });
            }
            for y in p.row.saturating_sub(1)..=(p.row + 1).min(rows - 1) {
                for x in p.col.saturating_sub(1)..=(p.col + 1).min(cols - 1) {
                    out.put_pixel(x as u32, y as u32, RED);
                }
            }
        }
    }
    Ok(out)
}

/// Renders [`overlay_raster`] to a PNG (or PPM for `.ppm`) file.
pub fn render_overlay(
    image: &GrayImage,
    boundaries: &[(&Boundary, Rgb<u8>)],
    labels: Option<&LabelSet>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let raster = overlay_raster(image, boundaries, labels)?;
    let path = path.as_ref();
    let format = match path.extension().and_then(|e| e.to_str()) {
        Some("ppm") => ImageFormat::Pnm,
        _ => ImageFormat::Png,
    };
    raster
        .save_with_format(path, format)
        .map_err(|e| Error::Encode(e.to_string()))
}
