//! Synthetic EDI-OCT phantoms with known boundaries.
//!
//! Layers from top to bottom: dark vitreous, retina, a bright RPE band, the
//! choroid (dark, with darker circular vessels) and a brighter sclera. All
//! interfaces are straight lines with a common slope; Gaussian speckle is
//! added and the result quantised to 8 bits.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph_segment::{Boundary, Layer};
use crate::scan_io::{GrayImage, Labels, Point, DEFAULT_RESOLUTION_UM};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerIntensities {
    pub vitreous: f64,
    pub retina: f64,
    pub rpe: f64,
    pub choroid: f64,
    pub vessel: f64,
    pub sclera: f64,
}

impl Default for LayerIntensities {
    fn default() -> Self {
        Self {
            vitreous: 15.0,
            retina: 110.0,
            rpe: 230.0,
            choroid: 100.0,
            vessel: 25.0,
            sclera: 160.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub rows: usize,
    pub cols: usize,
    /// First choroid row at column 0 (the lower edge of the RPE band).
    pub rpe_row: f64,
    /// Rows per column shared by all interfaces.
    pub slope: f64,
    pub rpe_thickness: f64,
    pub retina_thickness: f64,
    pub choroid_height: f64,
    pub vessels: usize,
    pub vessel_radius: (f64, f64),
    /// Minimum gap between a vessel and the band edges.
    pub vessel_margin: f64,
    pub noise_sigma: f64,
    pub intensities: LayerIntensities,
    pub seed: u64,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self {
            rows: 496,
            cols: 768,
            rpe_row: 220.0,
            slope: 0.0,
            rpe_thickness: 10.0,
            retina_thickness: 100.0,
            choroid_height: 80.0,
            vessels: 0,
            vessel_radius: (5.0, 12.0),
            vessel_margin: 2.0,
            noise_sigma: 0.0,
            intensities: LayerIntensities::default(),
            seed: 0,
        }
    }
}

/// A vessel disk, centre `(row, col)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vessel {
    pub row: f64,
    pub col: f64,
    pub radius: f64,
}

#[derive(Debug, Clone)]
pub struct Phantom {
    pub spec: PhantomSpec,
    pub image: GrayImage,
    /// First choroid row per column.
    pub rpe_truth: Boundary,
    /// First sclera row per column.
    pub choroid_truth: Boundary,
    pub vessels: Vec<Vessel>,
}

impl PhantomSpec {
    /// A randomised 496×768 scan: RPE between rows 190 and 250 at the left
    /// edge, slope up to 1/10, choroid 60 to 100 rows thick, speckle σ = 8
    /// and 30 vessels.
    pub fn randomized(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0c7);
        Self {
            rpe_row: rng.random_range(190.0..250.0),
            slope: rng.random_range(-0.1..=0.1),
            choroid_height: rng.random_range(60.0..100.0),
            vessels: 30,
            noise_sigma: 8.0,
            seed,
            ..Self::default()
        }
    }

    fn rpe_line(&self, col: usize) -> f64 {
        self.rpe_row + self.slope * col as f64
    }

    pub fn generate(&self) -> Result<Phantom> {
        let (rows, cols) = (self.rows, self.cols);
        if rows < 3 || cols < 3 {
            return Err(Error::Dimension(format!(
                "phantom must be at least 3x3, got {rows}x{cols}"
            )));
        }
        let top = (0..cols)
            .map(|c| self.rpe_line(c) - self.rpe_thickness - self.retina_thickness)
            .fold(f64::INFINITY, f64::min);
        let bottom = (0..cols)
            .map(|c| self.rpe_line(c) + self.choroid_height)
            .fold(f64::NEG_INFINITY, f64::max);
        if top < 1.0 || bottom > rows as f64 - 4.0 {
            return Err(Error::Geometry(format!(
                "phantom layers span rows {top:.1}..{bottom:.1}, outside a {rows}-row scan"
            )));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let (rmin, rmax) = self.vessel_radius;
        let mut vessels = Vec::with_capacity(self.vessels);
        while vessels.len() < self.vessels {
            let radius = if rmax > rmin {
                rng.random_range(rmin..rmax)
            } else {
                rmin
            };
            let col = rng.random_range(0.0..cols as f64);
            let band_top = self.rpe_line(col.round() as usize);
            let upper = band_top + radius + self.vessel_margin;
            let lower = band_top + self.choroid_height - radius - self.vessel_margin;
            if lower <= upper {
                break;
            }
            vessels.push(Vessel {
                row: rng.random_range(upper..lower),
                col,
                radius,
            });
        }

        let k = &self.intensities;
        let mut pixels = Array2::from_shape_fn((rows, cols), |(r, c)| {
            let y = r as f64;
            let rpe = self.rpe_line(c);
            if y < rpe - self.rpe_thickness - self.retina_thickness {
                k.vitreous
            } else if y < rpe - self.rpe_thickness {
                k.retina
            } else if y < rpe {
                k.rpe
            } else if y < rpe + self.choroid_height {
                let in_vessel = vessels.iter().any(|v| {
                    let (dr, dc) = (y - v.row, c as f64 - v.col);
                    dr * dr + dc * dc <= v.radius * v.radius
                });
                if in_vessel {
                    k.vessel
                } else {
                    k.choroid
                }
            } else {
                k.sclera
            }
        });
        if self.noise_sigma > 0.0 {
            let noise =
                Normal::new(0.0, self.noise_sigma).map_err(|e| Error::Parameter(e.to_string()))?;
            for v in pixels.iter_mut() {
                *v += noise.sample(&mut rng);
            }
        }
        pixels.mapv_inplace(|v| v.round().clamp(0.0, 255.0));

        let rpe_truth = (0..cols)
            .map(|c| self.rpe_line(c).ceil() as usize)
            .collect();
        let choroid_truth = (0..cols)
            .map(|c| (self.rpe_line(c) + self.choroid_height).ceil() as usize)
            .collect();
        Ok(Phantom {
            spec: self.clone(),
            image: GrayImage::new(pixels, DEFAULT_RESOLUTION_UM)?,
            rpe_truth: Boundary::new(Layer::Rpe, rpe_truth),
            choroid_truth: Boundary::new(Layer::Choroid, choroid_truth),
            vessels,
        })
    }
}

impl Phantom {
    /// Ground-truth points every `step` columns for both layers.
    pub fn labels(&self, step: usize) -> Labels {
        let mut labels = Labels::default();
        for truth in [&self.rpe_truth, &self.choroid_truth] {
            for c in (0..truth.len()).step_by(step.max(1)) {
                labels.push(truth.layer, Point::new(c, truth.rows[c]));
            }
        }
        labels
    }
}

/// Mean absolute row difference between two boundaries.
pub fn mean_abs_error(found: &Boundary, truth: &Boundary) -> f64 {
    let n = found.len().min(truth.len());
    if n == 0 {
        return 0.0;
    }
    found
        .rows
        .iter()
        .zip(&truth.rows)
        .map(|(&a, &b)| a.abs_diff(b) as f64)
        .sum::<f64>()
        / n as f64
}
