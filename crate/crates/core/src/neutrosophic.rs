//! Neutrosophic image model.
//!
//! A grayscale scan is mapped onto three membership matrices: truth `T`
//! (object, i.e. bright tissue), indeterminacy `I` (local disagreement with
//! the neighbourhood mean) and falsity `F = 1 - T` (background). The
//! α-mean operation smooths `T` and `F` wherever indeterminacy is high and
//! recomputes `I` from the smoothed truth set.
//!
//! All window operations replicate the border (indices are clamped).

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scan_io::GrayImage;

/// Shape of the local-mean window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WindowShape {
    /// `window × window` square.
    #[default]
    Square,
    /// `1 × window`, a single row.
    Row,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NeutroConfig {
    /// Odd side length of the local-mean window.
    pub window: usize,
    /// Indeterminacy threshold of the α-mean operation.
    pub alpha: f64,
    pub shape: WindowShape,
    /// Histogram bins used for the set entropies.
    pub entropy_bins: usize,
}

impl Default for NeutroConfig {
    fn default() -> Self {
        Self {
            window: 5,
            alpha: 0.85,
            shape: WindowShape::Square,
            entropy_bins: 256,
        }
    }
}

impl NeutroConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window < 3 || self.window % 2 == 0 {
            return Err(Error::Parameter(format!(
                "neutrosophic window must be odd and >= 3, got {}",
                self.window
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Parameter(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.entropy_bins == 0 {
            return Err(Error::Parameter("entropy_bins must be >= 1".into()));
        }
        Ok(())
    }

    fn mean(&self, m: &Array2<f64>) -> Result<Array2<f64>> {
        match self.shape {
            WindowShape::Square => local_mean(m, self.window),
            WindowShape::Row => local_mean_rect(m, 1, self.window),
        }
    }
}

/// Truth, indeterminacy and falsity sets of one scan.
#[derive(Debug, Clone, PartialEq)]
pub struct NeutrosophicImage {
    pub truth: Array2<f64>,
    pub indeterminacy: Array2<f64>,
    pub falsity: Array2<f64>,
}

impl NeutrosophicImage {
    pub fn dim(&self) -> (usize, usize) {
        self.truth.dim()
    }
}

/// Mean over a `window × window` neighbourhood with replicated borders.
pub fn local_mean(m: &Array2<f64>, window: usize) -> Result<Array2<f64>> {
    local_mean_rect(m, window, window)
}

/// Mean over a `win_rows × win_cols` neighbourhood with replicated borders.
///
/// Both sides must be odd. Sums are accumulated row pass first, then column
/// pass, always in increasing index order, so the result does not depend on
/// how the caller schedules work.
pub fn local_mean_rect(m: &Array2<f64>, win_rows: usize, win_cols: usize) -> Result<Array2<f64>> {
    if win_rows % 2 == 0 || win_cols % 2 == 0 {
        return Err(Error::Parameter(format!(
            "window sides must be odd, got {win_rows}x{win_cols}"
        )));
    }
    let (rows, cols) = m.dim();
    if rows == 0 || cols == 0 {
        return Err(Error::Dimension("local mean of an empty matrix".into()));
    }
    let hr = (win_rows / 2) as isize;
    let hc = (win_cols / 2) as isize;
    let clamp = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;

    let mut horizontal = Array2::<f64>::zeros((rows, cols));
    for r in 0..rows {
        for c in 0..cols {
            let mut acc = 0.0;
            for dc in -hc..=hc {
                acc += m[[r, clamp(c as isize + dc, cols)]];
            }
            horizontal[[r, c]] = acc;
        }
    }
    let norm = (win_rows * win_cols) as f64;
    let mut out = Array2::<f64>::zeros((rows, cols));
    for r in 0..rows {
        for c in 0..cols {
            let mut acc = 0.0;
            for dr in -hr..=hr {
                acc += horizontal[[clamp(r as isize + dr, rows), c]];
            }
            out[[r, c]] = acc / norm;
        }
    }
    Ok(out)
}

/// Min-max normalisation onto [0, 1]. `None` when the matrix is constant.
fn normalize(m: &Array2<f64>) -> Option<Array2<f64>> {
    let (lo, hi) = min_max(m);
    if hi > lo {
        let span = hi - lo;
        Some(m.mapv(|v| (v - lo) / span))
    } else {
        None
    }
}

pub(crate) fn min_max(m: &Array2<f64>) -> (f64, f64) {
    m.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

/// Converts a scan into neutrosophic space.
///
/// `T` is the normalised local mean, `F = 1 - T`, and `I` the normalised
/// absolute deviation of each pixel from its local mean. A constant local
/// mean yields `T = F = 0.5`; a constant deviation yields `I = 0`.
pub fn to_neutrosophic(image: &GrayImage, cfg: &NeutroConfig) -> Result<NeutrosophicImage> {
    cfg.validate()?;
    matrix_to_neutrosophic(image.pixels(), cfg)
}

pub(crate) fn matrix_to_neutrosophic(
    g: &Array2<f64>,
    cfg: &NeutroConfig,
) -> Result<NeutrosophicImage> {
    let local = cfg.mean(g)?;
    let truth = normalize(&local).unwrap_or_else(|| Array2::from_elem(g.dim(), 0.5));
    let falsity = truth.mapv(|t| 1.0 - t);
    let mut delta = Array2::<f64>::zeros(g.dim());
    Zip::from(&mut delta)
        .and(g)
        .and(&local)
        .for_each(|d, &v, &mean| *d = (v - mean).abs());
    let indeterminacy = normalize(&delta).unwrap_or_else(|| Array2::zeros(g.dim()));
    Ok(NeutrosophicImage {
        truth,
        indeterminacy,
        falsity,
    })
}

/// Shannon entropy (natural log) of the values of `m` histogrammed into
/// `bins` equal-width bins over [0, 1].
pub fn set_entropy(m: &Array2<f64>, bins: usize) -> Result<f64> {
    if bins == 0 {
        return Err(Error::Parameter("entropy needs at least one bin".into()));
    }
    if m.is_empty() {
        return Err(Error::UndefinedMetric("entropy of an empty set".into()));
    }
    let mut counts = vec![0usize; bins];
    for &v in m.iter() {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Domain(format!(
                "membership value {v} outside [0, 1]"
            )));
        }
        let bin = ((v * bins as f64).floor() as usize).min(bins - 1);
        counts[bin] += 1;
    }
    let total = m.len() as f64;
    let entropy = counts
        .iter()
        .filter(|&&n| n > 0)
        .map(|&n| {
            let p = n as f64 / total;
            -p * p.ln()
        })
        .sum::<f64>();
    // -0.0 for the single-bin case
    Ok(entropy.max(0.0))
}

/// Sum of the truth, indeterminacy and falsity entropies.
pub fn total_entropy(ns: &NeutrosophicImage, bins: usize) -> Result<f64> {
    Ok(set_entropy(&ns.truth, bins)?
        + set_entropy(&ns.indeterminacy, bins)?
        + set_entropy(&ns.falsity, bins)?)
}

/// α-mean operation.
///
/// `T` and `F` are replaced by their local means wherever `I >= alpha`. The
/// new indeterminacy is the normalised deviation between the full-image
/// local mean of `T` and its own local mean, computed everywhere.
pub fn alpha_mean(ns: &NeutrosophicImage, cfg: &NeutroConfig) -> Result<NeutrosophicImage> {
    cfg.validate()?;
    let t_mean = cfg.mean(&ns.truth)?;
    let f_mean = cfg.mean(&ns.falsity)?;

    let mut truth = ns.truth.clone();
    let mut falsity = ns.falsity.clone();
    Zip::from(&mut truth)
        .and(&mut falsity)
        .and(&ns.indeterminacy)
        .and(&t_mean)
        .and(&f_mean)
        .for_each(|t, f, &i, &tm, &fm| {
            if i >= cfg.alpha {
                *t = tm;
                *f = fm;
            }
        });

    let t_mean_mean = cfg.mean(&t_mean)?;
    let delta = (&t_mean - &t_mean_mean).mapv(f64::abs);
    let indeterminacy = normalize(&delta).unwrap_or_else(|| Array2::zeros(delta.dim()));
    Ok(NeutrosophicImage {
        truth,
        indeterminacy,
        falsity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn local_mean_of_constant_is_constant() {
        let m = Array2::from_elem((6, 9), 7.0);
        assert_eq!(local_mean(&m, 5).unwrap(), m);
        let m = Array2::from_elem((4, 4), 0.37);
        for v in local_mean(&m, 3).unwrap() {
            assert!((v - 0.37).abs() < 1e-15);
        }
    }

    #[test]
    fn local_mean_single_cell_replicates() {
        let m = array![[7.0]];
        assert_eq!(local_mean(&m, 3).unwrap(), array![[7.0]]);
    }

    #[test]
    fn local_mean_center_of_ramp() {
        let m = Array2::from_shape_fn((3, 3), |(r, c)| (r * 3 + c) as f64);
        assert_eq!(local_mean(&m, 3).unwrap()[[1, 1]], 4.0);
        // corner: rows {0,0,1} x cols {0,0,1} = (0+0+1)*2 + (3+3+4) = 12 -> 12/9
        assert!((local_mean(&m, 3).unwrap()[[0, 0]] - 12.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn local_mean_rejects_even_window() {
        let m = Array2::zeros((3, 3));
        assert!(matches!(local_mean(&m, 4), Err(Error::Parameter(_))));
    }

    #[test]
    fn constant_image_is_degenerate() {
        let img = GrayImage::new(Array2::from_elem((8, 8), 91.0), 3.87167).unwrap();
        let ns = to_neutrosophic(&img, &NeutroConfig::default()).unwrap();
        assert!(ns.truth.iter().all(|&t| t == 0.5));
        assert!(ns.falsity.iter().all(|&f| f == 0.5));
        assert!(ns.indeterminacy.iter().all(|&i| i == 0.0));
    }

    #[test]
    fn normalisation_endpoints() {
        let img = GrayImage::new(
            Array2::from_shape_fn((10, 12), |(r, c)| ((r * 31 + c * 17) % 256) as f64),
            3.87167,
        )
        .unwrap();
        let cfg = NeutroConfig::default();
        let local = local_mean(img.pixels(), 5).unwrap();
        let ns = to_neutrosophic(&img, &cfg).unwrap();
        let argmax = local
            .indexed_iter()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        let argmin = local
            .indexed_iter()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(ns.truth[argmax], 1.0);
        assert_eq!(ns.truth[argmin], 0.0);
    }

    #[test]
    fn entropy_cases() {
        let one_bin = Array2::from_elem((3, 3), 0.42);
        assert_eq!(set_entropy(&one_bin, 256).unwrap(), 0.0);

        let two =
            Array2::from_shape_vec((2, 4), vec![0.1, 0.1, 0.1, 0.1, 0.9, 0.9, 0.9, 0.9]).unwrap();
        assert!((set_entropy(&two, 10).unwrap() - 2f64.ln()).abs() < 1e-15);

        let uniform = Array2::from_shape_fn((1, 8), |(_, c)| (c as f64 + 0.5) / 8.0);
        assert!((set_entropy(&uniform, 8).unwrap() - 8f64.ln()).abs() < 1e-12);

        assert!(matches!(
            set_entropy(&Array2::zeros((0, 3)), 4),
            Err(Error::UndefinedMetric(_))
        ));
    }

    #[test]
    fn total_entropy_is_sum() {
        let img = GrayImage::new(
            Array2::from_shape_fn((9, 7), |(r, c)| ((r * r * 13 + c * 29) % 256) as f64),
            3.87167,
        )
        .unwrap();
        let ns = to_neutrosophic(&img, &NeutroConfig::default()).unwrap();
        let parts = set_entropy(&ns.truth, 64).unwrap()
            + set_entropy(&ns.indeterminacy, 64).unwrap()
            + set_entropy(&ns.falsity, 64).unwrap();
        assert_eq!(total_entropy(&ns, 64).unwrap(), parts);

        let flat = GrayImage::new(Array2::from_elem((5, 5), 3.0), 3.87167).unwrap();
        let ns = to_neutrosophic(&flat, &NeutroConfig::default()).unwrap();
        assert_eq!(total_entropy(&ns, 256).unwrap(), 0.0);
    }

    #[test]
    fn alpha_mean_below_threshold_is_identity() {
        let img = GrayImage::new(
            Array2::from_shape_fn((6, 6), |(r, c)| ((r * 40 + c * 7) % 256) as f64),
            3.87167,
        )
        .unwrap();
        let mut cfg = NeutroConfig::default();
        let mut ns = to_neutrosophic(&img, &cfg).unwrap();
        // push every indeterminacy below alpha
        ns.indeterminacy.mapv_inplace(|i| i * 0.5);
        cfg.alpha = 0.6;
        let out = alpha_mean(&ns, &cfg).unwrap();
        assert_eq!(out.truth, ns.truth);
        assert_eq!(out.falsity, ns.falsity);
    }

    #[test]
    fn alpha_mean_constant_truth_has_zero_indeterminacy() {
        let ns = NeutrosophicImage {
            truth: Array2::from_elem((5, 5), 0.3),
            indeterminacy: Array2::from_elem((5, 5), 0.9),
            falsity: Array2::from_elem((5, 5), 0.7),
        };
        let out = alpha_mean(&ns, &NeutroConfig::default()).unwrap();
        assert!(out.indeterminacy.iter().all(|&i| i == 0.0));
    }

    #[test]
    fn config_validation() {
        let mut cfg = NeutroConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.window = 4;
        assert!(cfg.validate().is_err());
        cfg.window = 5;
        cfg.alpha = 1.0;
        assert!(cfg.validate().is_err());
    }
}
