//! Spatial and frequency-domain enhancement plus RPE-based flattening.

use ndarray::Array2;
use rustfft::num_complex::Complex;
use rustfft::{FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph_segment::Boundary;
use crate::neutrosophic::min_max;
use crate::scan_io::GrayImage;

/// Vertical gradient: correlation with the column kernel `[2, 0, -2]`.
///
/// `out(i, j) = 2 m(i-1, j) - 2 m(i+1, j)` with replicated border rows, so a
/// bright row above a dark row gives a positive response.
pub fn vertical_gradient(m: &Array2<f64>) -> Result<Array2<f64>> {
    let (rows, cols) = m.dim();
    if rows < 3 {
        return Err(Error::Dimension(format!(
            "vertical gradient needs at least 3 rows, got {rows}"
        )));
    }
    Ok(Array2::from_shape_fn((rows, cols), |(r, c)| {
        let above = m[[r.saturating_sub(1), c]];
        let below = m[[(r + 1).min(rows - 1), c]];
        2.0 * above - 2.0 * below
    }))
}

/// Gamma correction on the 8-bit scale: `255^(1-γ) · m^γ`, evaluated as
/// `255 · (m/255)^γ` so that 0 and 255 map to themselves exactly.
pub fn gamma_correct(m: &Array2<f64>, gamma: f64) -> Result<Array2<f64>> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::Parameter(format!(
            "gamma must lie in (0, 1], got {gamma}"
        )));
    }
    if let Some(v) = m.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::Domain(format!(
            "gamma correction is undefined for {v}"
        )));
    }
    if gamma == 1.0 {
        return Ok(m.clone());
    }
    // max(v) absorbs a last-ulp rounding loss near 255.
    Ok(m.mapv(|v| (255.0 * (v / 255.0).powf(gamma)).max(v)))
}

/// Parameters of the Gaussian high-emphasis transfer function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HomomorphicParams {
    pub sigma: f64,
    pub gamma_h: f64,
    pub gamma_l: f64,
}

impl Default for HomomorphicParams {
    fn default() -> Self {
        Self {
            sigma: 3.2,
            gamma_h: 1.0,
            gamma_l: 0.0,
        }
    }
}

impl HomomorphicParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Parameter(format!(
                "homomorphic sigma must be positive, got {}",
                self.sigma
            )));
        }
        Ok(())
    }

    /// Filter gain at squared distance `d2` from the spectrum centre.
    pub fn gain(&self, d2: f64) -> f64 {
        (self.gamma_h - self.gamma_l) * (1.0 - (-d2 / (2.0 * self.sigma * self.sigma)).exp())
            + self.gamma_l
    }
}

/// Transfer function sampled on a centred `rows × cols` spectrum, i.e. the
/// zero frequency sits at `(rows / 2, cols / 2)` (integer division).
pub fn homomorphic_transfer(rows: usize, cols: usize, p: &HomomorphicParams) -> Array2<f64> {
    let (cu, cv) = ((rows / 2) as f64, (cols / 2) as f64);
    Array2::from_shape_fn((rows, cols), |(u, v)| {
        let du = u as f64 - cu;
        let dv = v as f64 - cv;
        p.gain(du * du + dv * dv)
    })
}

/// In-place 2-D DFT of a row-major buffer. Unnormalised in both directions.
fn fft_2d(rows: usize, cols: usize, buf: &mut [Complex<f64>], direction: FftDirection) {
    let mut planner = FftPlanner::new();
    let row_fft = planner.plan_fft(cols, direction);
    let col_fft = planner.plan_fft(rows, direction);
    let scratch_len = row_fft
        .get_inplace_scratch_len()
        .max(col_fft.get_inplace_scratch_len());
    let mut scratch = vec![Complex::default(); scratch_len];

    for row in buf.chunks_exact_mut(cols) {
        row_fft.process_with_scratch(row, &mut scratch[..row_fft.get_inplace_scratch_len()]);
    }
    let mut column = vec![Complex::default(); rows];
    for c in 0..cols {
        for r in 0..rows {
            column[r] = buf[r * cols + c];
        }
        col_fft.process_with_scratch(
            &mut column,
            &mut scratch[..col_fft.get_inplace_scratch_len()],
        );
        for r in 0..rows {
            buf[r * cols + c] = column[r];
        }
    }
}

/// Homomorphic illumination correction.
///
/// `ln(1 + m)`, forward DFT, multiplication by the centred transfer function,
/// inverse DFT (real part), `exp(·) - 1`, then linear rescale onto [0, 255].
/// A result without spread is pinned to 127.5.
pub fn homomorphic_filter(m: &Array2<f64>, p: &HomomorphicParams) -> Result<Array2<f64>> {
    p.validate()?;
    let (rows, cols) = m.dim();
    if rows == 0 || cols == 0 {
        return Err(Error::Dimension(
            "homomorphic filter of an empty matrix".into(),
        ));
    }
    if let Some(v) = m.iter().find(|v| !(**v > -1.0)) {
        return Err(Error::Domain(format!("ln(1 + x) is undefined for {v}")));
    }
    let (lo, hi) = min_max(m);
    if lo == hi {
        return Ok(Array2::from_elem((rows, cols), 127.5));
    }

    let mut buf: Vec<Complex<f64>> = m.iter().map(|&v| Complex::new(v.ln_1p(), 0.0)).collect();
    fft_2d(rows, cols, &mut buf, FftDirection::Forward);

    // Unshifted index k sits at centred position (k + n/2) mod n.
    let (hu, hv) = (rows / 2, cols / 2);
    for (k, value) in buf.iter_mut().enumerate() {
        let u = ((k / cols + hu) % rows) as f64 - hu as f64;
        let v = ((k % cols + hv) % cols) as f64 - hv as f64;
        *value *= p.gain(u * u + v * v);
    }

    fft_2d(rows, cols, &mut buf, FftDirection::Inverse);
    let norm = (rows * cols) as f64;
    let restored: Vec<f64> = buf.iter().map(|z| (z.re / norm).exp_m1()).collect();
    let out = Array2::from_shape_vec((rows, cols), restored)
        .map_err(|e| Error::Dimension(e.to_string()))?;
    Ok(rescale_to_u8_range(&out))
}

/// Linear rescale onto [0, 255]; constant input maps to 127.5.
pub fn rescale_to_u8_range(m: &Array2<f64>) -> Array2<f64> {
    let (lo, hi) = min_max(m);
    let span = hi - lo;
    // spread below this is round-off from a flat input
    if !(span > 1e-9 * (1.0 + lo.abs().max(hi.abs()))) {
        return Array2::from_elem(m.dim(), 127.5);
    }
    m.mapv(|v| (v - lo) / span * 255.0)
}

/// Column shifts that bring a boundary onto a single row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlattenMap {
    /// Downward shift of each column.
    pub shifts: Vec<usize>,
    /// Row of the lowest boundary point; the flattened boundary lies here.
    pub pivot_row: usize,
    /// Height of the flattened image.
    pub rows: usize,
}

impl FlattenMap {
    pub fn from_boundary(rpe: &Boundary, rows: usize) -> Result<Self> {
        if rpe.rows.is_empty() {
            return Err(Error::Dimension(
                "cannot flatten along an empty boundary".into(),
            ));
        }
        if let Some((c, &r)) = rpe.rows.iter().enumerate().find(|(_, &r)| r >= rows) {
            return Err(Error::Dimension(format!(
                "boundary row {r} at column {c} outside a {rows}-row image"
            )));
        }
        let pivot_row = *rpe.rows.iter().max().expect("non-empty");
        Ok(Self {
            shifts: rpe.rows.iter().map(|&r| pivot_row - r).collect(),
            pivot_row,
            rows,
        })
    }

    /// Circularly shifts every column of `m` down by its shift.
    pub fn apply(&self, m: &Array2<f64>) -> Result<Array2<f64>> {
        let (rows, cols) = m.dim();
        if cols != self.shifts.len() || rows != self.rows {
            return Err(Error::Dimension(format!(
                "flatten map is {}x{}, matrix is {rows}x{cols}",
                self.rows,
                self.shifts.len()
            )));
        }
        let mut out = Array2::zeros((rows, cols));
        for (c, &shift) in self.shifts.iter().enumerate() {
            for r in 0..rows {
                out[[(r + shift) % rows, c]] = m[[r, c]];
            }
        }
        Ok(out)
    }
}

/// Flattens a scan along its RPE boundary.
///
/// Each column moves down by `pivot_row - rpe[c]`; rows pushed off the
/// bottom re-enter at the top.
pub fn flatten(image: &GrayImage, rpe: &Boundary) -> Result<(GrayImage, FlattenMap)> {
    if rpe.rows.len() != image.cols() {
        return Err(Error::Dimension(format!(
            "boundary has {} columns, image has {}",
            rpe.rows.len(),
            image.cols()
        )));
    }
    let map = FlattenMap::from_boundary(rpe, image.rows())?;
    let pixels = map.apply(image.pixels())?;
    Ok((GrayImage::new(pixels, image.axial_resolution_um())?, map))
}

/// Maps a boundary found in flattened coordinates back to the original scan.
pub fn unflatten_boundary(b: &Boundary, fm: &FlattenMap) -> Result<Boundary> {
    if b.rows.len() != fm.shifts.len() {
        return Err(Error::Dimension(format!(
            "boundary has {} columns, flatten map has {}",
            b.rows.len(),
            fm.shifts.len()
        )));
    }
    let last = fm.rows.saturating_sub(1) as isize;
    let rows = b
        .rows
        .iter()
        .zip(&fm.shifts)
        .map(|(&r, &s)| (r as isize - s as isize).clamp(0, last) as usize)
        .collect();
    Ok(Boundary {
        rows,
        layer: b.layer,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph_segment::Layer;
    use ndarray::array;

    #[test]
    fn gradient_examples() {
        let flat = Array2::from_elem((5, 4), 9.0);
        assert!(vertical_gradient(&flat).unwrap().iter().all(|&v| v == 0.0));

        let col = array![[255.0], [128.0], [0.0]];
        assert_eq!(vertical_gradient(&col).unwrap()[[1, 0]], 510.0);

        let col = array![[10.0], [20.0], [30.0]];
        assert_eq!(vertical_gradient(&col).unwrap()[[1, 0]], -40.0);

        assert!(matches!(
            vertical_gradient(&Array2::zeros((2, 5))),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn gamma_examples() {
        let m = array![[0.0, 255.0, 1.0]];
        let out = gamma_correct(&m, 0.2).unwrap();
        assert_eq!(out[[0, 0]], 0.0);
        assert!((out[[0, 1]] - 255.0).abs() < 1e-12);
        assert!((out[[0, 2]] - 255f64.powf(0.8)).abs() < 1e-12);
        assert!((out[[0, 2]] - 84.1845).abs() < 1e-4);

        let ramp = Array2::from_shape_fn((1, 256), |(_, c)| c as f64);
        assert_eq!(gamma_correct(&ramp, 1.0).unwrap(), ramp);

        assert!(matches!(
            gamma_correct(&array![[-1.0]], 0.5),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            gamma_correct(&ramp, 0.0),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn transfer_function_landmarks() {
        let p = HomomorphicParams::default();
        assert_eq!(p.gain(0.0), 0.0);
        assert!((p.gain(1e6) - 1.0).abs() < 1e-15);
        let half = 2.0 * p.sigma * p.sigma * 2f64.ln();
        assert!((p.gain(half) - 0.5).abs() < 1e-12);

        let h = homomorphic_transfer(9, 12, &p);
        assert_eq!(h[[4, 6]], p.gamma_l);
    }

    #[test]
    fn homomorphic_constant_is_mid_range() {
        let out =
            homomorphic_filter(&Array2::from_elem((7, 10), 80.0), &Default::default()).unwrap();
        assert!(out.iter().all(|&v| v == 127.5));
    }

    #[test]
    fn homomorphic_output_range_and_determinism() {
        let m = Array2::from_shape_fn((31, 48), |(r, c)| ((r * 37 + c * c * 11) % 256) as f64);
        let p = HomomorphicParams::default();
        let a = homomorphic_filter(&m, &p).unwrap();
        let b = homomorphic_filter(&m, &p).unwrap();
        assert_eq!(a, b);
        let (lo, hi) = min_max(&a);
        assert!(lo.abs() < 1e-9 && (hi - 255.0).abs() < 1e-9);
    }

    #[test]
    fn homomorphic_keeps_step_over_ramp() {
        // Slow vertical ramp plus a sharp step at row 20. The transform is
        // periodic, so rows near the top and bottom see the wrap-around jump;
        // only the interior is checked.
        let m = Array2::from_shape_fn((40, 64), |(r, _)| {
            let ramp = 60.0 + 2.0 * r as f64;
            if r >= 20 {
                ramp + 60.0
            } else {
                ramp
            }
        });
        let out = homomorphic_filter(&m, &HomomorphicParams::default()).unwrap();
        let grad = vertical_gradient(&out).unwrap();
        let interior: Vec<(usize, f64)> = (8..32).map(|r| (r, grad[[r, 32]])).collect();
        let (strongest, peak) = interior
            .iter()
            .copied()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        assert!(
            (19..=20).contains(&strongest),
            "strongest edge at {strongest}: {interior:?}"
        );
        let ramp_only = interior
            .iter()
            .filter(|(r, _)| !(16..=23).contains(r))
            .map(|(_, g)| g.abs())
            .fold(0.0, f64::max);
        assert!(
            ramp_only < 0.25 * peak.abs(),
            "ramp residue {ramp_only} vs step {peak}"
        );
    }

    #[test]
    fn flatten_small_example() {
        // 4x2 is below the scan minimum, so exercise the map directly.
        let m = Array2::from_shape_vec((4, 2), vec![0., 10., 1., 11., 2., 12., 3., 13.]).unwrap();
        let rpe = Boundary {
            rows: vec![1, 3],
            layer: Layer::Rpe,
        };
        let map = FlattenMap::from_boundary(&rpe, 4).unwrap();
        assert_eq!(map.shifts, vec![2, 0]);
        assert_eq!(map.pivot_row, 3);
        let flat = map.apply(&m).unwrap();
        assert_eq!(flat.column(0).to_vec(), vec![2., 3., 0., 1.]);
        assert_eq!(flat.column(1).to_vec(), vec![10., 11., 12., 13.]);
    }

    #[test]
    fn flatten_identity_for_constant_boundary() {
        let img = GrayImage::new(
            Array2::from_shape_fn((5, 4), |(r, c)| (r * 4 + c) as f64),
            3.87167,
        )
        .unwrap();
        let rpe = Boundary {
            rows: vec![2; 4],
            layer: Layer::Rpe,
        };
        let (flat, map) = flatten(&img, &rpe).unwrap();
        assert!(map.shifts.iter().all(|&s| s == 0));
        assert_eq!(flat.pixels(), img.pixels());
    }

    #[test]
    fn unflatten_examples() {
        let fm = FlattenMap {
            shifts: vec![2, 0],
            pivot_row: 7,
            rows: 10,
        };
        let b = Boundary {
            rows: vec![5, 5],
            layer: Layer::Choroid,
        };
        assert_eq!(unflatten_boundary(&b, &fm).unwrap().rows, vec![3, 5]);

        let zero = FlattenMap {
            shifts: vec![0, 0],
            pivot_row: 7,
            rows: 10,
        };
        assert_eq!(unflatten_boundary(&b, &zero).unwrap(), b);

        let short = Boundary {
            rows: vec![1],
            layer: Layer::Choroid,
        };
        assert!(matches!(
            unflatten_boundary(&short, &fm),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn flatten_rejects_length_mismatch() {
        let img = GrayImage::new(Array2::zeros((4, 3)), 3.87167).unwrap();
        let rpe = Boundary {
            rows: vec![1, 2],
            layer: Layer::Rpe,
        };
        assert!(matches!(flatten(&img, &rpe), Err(Error::Dimension(_))));
    }
}
