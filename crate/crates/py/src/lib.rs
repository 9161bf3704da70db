//! Python bindings for the choroid segmentation core.
//!
//! Matrices cross the boundary as lists of row lists; boundaries as lists of
//! row indices, one per column.

use std::path::PathBuf;

use choroidseg_core::filters::{self, HomomorphicParams};
use choroidseg_core::graph_segment::{self, WeightConfig};
use choroidseg_core::neutrosophic::{self, NeutroConfig};
use choroidseg_core::phantom::PhantomSpec;
use choroidseg_core::pipeline::{self, PipelineConfig, SegmentationResult};
use choroidseg_core::scan_io::{self, GrayImage, LabelSet, Point, GREEN};
use choroidseg_core::{Error, Layer};
use ndarray::Array2;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyOSError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn to_array(rows: Vec<Vec<f64>>) -> PyResult<Array2<f64>> {
    let height = rows.len();
    let width = rows.first().map_or(0, Vec::len);
    if height == 0 || width == 0 {
        return Err(PyValueError::new_err("matrix must be non-empty"));
    }
    if let Some(r) = rows.iter().position(|row| row.len() != width) {
        return Err(PyValueError::new_err(format!(
            "row {r} has {} values, expected {width}",
            rows[r].len()
        )));
    }
    Ok(
        Array2::from_shape_vec((height, width), rows.into_iter().flatten().collect())
            .expect("shape checked"),
    )
}

fn to_rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn parse_layer(name: &str) -> PyResult<Layer> {
    name.parse().map_err(to_py)
}

/// An 8-bit grayscale B-scan.
#[pyclass(name = "Scan", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyScan {
    inner: GrayImage,
}

#[pymethods]
impl PyScan {
    #[new]
    #[pyo3(signature = (rows, resolution_um = scan_io::DEFAULT_RESOLUTION_UM))]
    fn new(rows: Vec<Vec<f64>>, resolution_um: f64) -> PyResult<Self> {
        let inner = GrayImage::new(to_array(rows)?, resolution_um).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (path, resolution_um = None))]
    fn load(path: PathBuf, resolution_um: Option<f64>) -> PyResult<Self> {
        let inner = scan_io::load_scan(path, resolution_um).map_err(to_py)?;
        Ok(Self { inner })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        scan_io::save_scan(&self.inner, path).map_err(to_py)
    }

    #[getter]
    fn rows(&self) -> usize {
        self.inner.rows()
    }

    #[getter]
    fn cols(&self) -> usize {
        self.inner.cols()
    }

    #[getter]
    fn resolution_um(&self) -> f64 {
        self.inner.axial_resolution_um()
    }

    fn to_rows(&self) -> Vec<Vec<f64>> {
        to_rows(self.inner.pixels())
    }

    fn __repr__(&self) -> String {
        format!("Scan({}x{})", self.inner.rows(), self.inner.cols())
    }
}

/// Boundaries, thickness and metadata of one segmented scan.
#[pyclass(name = "Result", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyOutcome {
    inner: SegmentationResult,
}

#[pymethods]
impl PyOutcome {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: SegmentationResult::from_json(text).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: SegmentationResult::load(path).map_err(to_py)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(path).map_err(to_py)
    }

    #[getter]
    fn rows(&self) -> usize {
        self.inner.rows
    }

    #[getter]
    fn cols(&self) -> usize {
        self.inner.cols
    }

    #[getter]
    fn rpe(&self) -> Vec<usize> {
        self.inner.rpe.rows.clone()
    }

    #[getter]
    fn choroid(&self) -> Vec<usize> {
        self.inner.choroid.rows.clone()
    }

    #[getter]
    fn thickness_px(&self) -> Vec<i64> {
        self.inner.thickness.per_column_px.clone()
    }

    #[getter]
    fn thickness_mm(&self) -> Vec<f64> {
        self.inner.thickness.per_column_mm.clone()
    }

    #[getter]
    fn mean_thickness_mm(&self) -> f64 {
        self.inner.thickness.mean_mm
    }

    #[getter]
    fn flags(&self) -> Vec<String> {
        self.inner.flags.iter().map(|f| format!("{f:?}")).collect()
    }

    /// Stage wall times in milliseconds.
    #[getter]
    fn timings(&self) -> Vec<(&'static str, f64)> {
        let t = &self.inner.timings;
        vec![
            ("rpe_ms", t.rpe_ms),
            ("choroid_ms", t.choroid_ms),
            ("thickness_ms", t.thickness_ms),
            ("total_ms", t.total_ms),
        ]
    }

    /// Returns a copy with the boundary of `layer` replaced by a straight
    /// segment between the `(col, row)` points `a` and `b`.
    fn corrected(&self, layer: &str, a: (usize, usize), b: (usize, usize)) -> PyResult<Self> {
        let inner = self
            .inner
            .apply_correction(
                parse_layer(layer)?,
                Point::new(a.0, a.1),
                Point::new(b.0, b.1),
            )
            .map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Mean unsigned error against `(col, row)` labels, as `(px, mm)`.
    fn evaluate(&self, layer: &str, points: Vec<(usize, usize)>) -> PyResult<(f64, f64)> {
        let mut labels = LabelSet::new(parse_layer(layer)?);
        labels.points = points.into_iter().map(|(c, r)| Point::new(c, r)).collect();
        let report = pipeline::evaluate_result(&self.inner, &labels).map_err(to_py)?;
        Ok((report.mean_unsigned_px, report.mean_unsigned_mm))
    }

    fn same_segmentation(&self, other: &Self) -> bool {
        self.inner.same_segmentation(&other.inner)
    }

    fn render_overlay(&self, scan: &PyScan, path: PathBuf) -> PyResult<()> {
        let lines = [(&self.inner.rpe, GREEN), (&self.inner.choroid, GREEN)];
        scan_io::render_overlay(&scan.inner, &lines, None, path).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "Result({}x{}, mean thickness {:.4} mm)",
            self.inner.rows, self.inner.cols, self.inner.thickness.mean_mm
        )
    }
}

/// Segments the RPE and choroid–sclera boundaries of a scan.
///
/// `config_json` holds any subset of the pipeline settings; `gamma`
/// overrides the gamma setting.
#[pyfunction]
#[pyo3(signature = (scan, config_json = None, gamma = None))]
fn segment(
    py: Python<'_>,
    scan: &PyScan,
    config_json: Option<&str>,
    gamma: Option<f64>,
) -> PyResult<PyOutcome> {
    let mut cfg: PipelineConfig = match config_json {
        Some(text) => {
            serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?
        }
        None => PipelineConfig::default(),
    };
    if let Some(g) = gamma {
        cfg.gamma = g;
    }
    cfg.validate().map_err(to_py)?;
    let image = scan.inner.clone();
    let inner = py
        .detach(move || pipeline::segment(&image, &cfg))
        .map_err(to_py)?;
    Ok(PyOutcome { inner })
}

/// Default pipeline settings as JSON.
#[pyfunction]
fn default_config_json() -> PyResult<String> {
    serde_json::to_string_pretty(&PipelineConfig::default())
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Truth, indeterminacy and falsity sets of a scan.
#[pyfunction]
#[pyo3(signature = (scan, window = 5))]
fn neutrosophic_sets(
    scan: &PyScan,
    window: usize,
) -> PyResult<(Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let cfg = NeutroConfig {
        window,
        ..NeutroConfig::default()
    };
    cfg.validate().map_err(to_py)?;
    let ns = neutrosophic::to_neutrosophic(&scan.inner, &cfg).map_err(to_py)?;
    Ok((
        to_rows(&ns.truth),
        to_rows(&ns.indeterminacy),
        to_rows(&ns.falsity),
    ))
}

#[pyfunction]
#[pyo3(signature = (matrix, bins = 256))]
fn set_entropy(matrix: Vec<Vec<f64>>, bins: usize) -> PyResult<f64> {
    neutrosophic::set_entropy(&to_array(matrix)?, bins).map_err(to_py)
}

#[pyfunction]
fn gamma_correct(matrix: Vec<Vec<f64>>, gamma: f64) -> PyResult<Vec<Vec<f64>>> {
    Ok(to_rows(
        &filters::gamma_correct(&to_array(matrix)?, gamma).map_err(to_py)?,
    ))
}

#[pyfunction]
#[pyo3(signature = (matrix, sigma = 3.2, gamma_h = 1.0, gamma_l = 0.0))]
fn homomorphic_filter(
    matrix: Vec<Vec<f64>>,
    sigma: f64,
    gamma_h: f64,
    gamma_l: f64,
) -> PyResult<Vec<Vec<f64>>> {
    let p = HomomorphicParams {
        sigma,
        gamma_h,
        gamma_l,
    };
    Ok(to_rows(
        &filters::homomorphic_filter(&to_array(matrix)?, &p).map_err(to_py)?,
    ))
}

/// Minimum-weight boundary through a node score matrix. `mode` is `"rpe"`
/// (brightness above is rewarded) or `"dark_to_light"`.
#[pyfunction]
#[pyo3(signature = (score, image, mode = "rpe"))]
fn shortest_boundary(
    score: Vec<Vec<f64>>,
    image: Vec<Vec<f64>>,
    mode: &str,
) -> PyResult<(Vec<usize>, f64)> {
    let cfg = match mode {
        "rpe" => WeightConfig::rpe(),
        "dark_to_light" => WeightConfig::dark_to_light(),
        other => return Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
    };
    let found = graph_segment::search_boundary(&to_array(score)?, &to_array(image)?, &cfg)
        .map_err(to_py)?;
    Ok((found.boundary.rows, found.cost))
}

/// Boundary after replacing the span between two `(col, row)` points by a
/// straight line.
#[pyfunction]
fn manual_correction(
    rows: Vec<usize>,
    a: (usize, usize),
    b: (usize, usize),
) -> PyResult<Vec<usize>> {
    let boundary = choroidseg_core::Boundary::new(Layer::Choroid, rows);
    let out =
        pipeline::apply_manual_correction(&boundary, Point::new(a.0, a.1), Point::new(b.0, b.1))
            .map_err(to_py)?;
    Ok(out.rows)
}

/// A randomised synthetic scan with its true RPE and choroid boundaries.
#[pyfunction]
fn phantom(seed: u64) -> PyResult<(PyScan, Vec<usize>, Vec<usize>)> {
    let p = PhantomSpec::randomized(seed).generate().map_err(to_py)?;
    Ok((
        PyScan { inner: p.image },
        p.rpe_truth.rows,
        p.choroid_truth.rows,
    ))
}

#[pyfunction]
fn mm_per_px(resolution_um: f64) -> f64 {
    pipeline::mm_per_px(resolution_um)
}

#[pymodule]
fn choroidseg(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("MM_PER_PX", pipeline::MM_PER_PX)?;
    m.add_class::<PyScan>()?;
    m.add_class::<PyOutcome>()?;
    m.add_function(wrap_pyfunction!(segment, m)?)?;
    m.add_function(wrap_pyfunction!(default_config_json, m)?)?;
    m.add_function(wrap_pyfunction!(neutrosophic_sets, m)?)?;
    m.add_function(wrap_pyfunction!(set_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_correct, m)?)?;
    m.add_function(wrap_pyfunction!(homomorphic_filter, m)?)?;
    m.add_function(wrap_pyfunction!(shortest_boundary, m)?)?;
    m.add_function(wrap_pyfunction!(manual_correction, m)?)?;
    m.add_function(wrap_pyfunction!(phantom, m)?)?;
    m.add_function(wrap_pyfunction!(mm_per_px, m)?)?;
    Ok(())
}
