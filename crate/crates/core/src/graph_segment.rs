//! Layer boundaries as minimum-weight paths across an 8-connected pixel grid.
//!
//! Every pixel is a node joined to its eight neighbours. Edge weights reward
//! strong vertical gradients at both endpoints; edges running along the
//! first or the last column cost only `w_min`, which lets the path pick its
//! own entry and exit rows. Dijkstra runs from the top-left to the
//! bottom-right corner and the path is collapsed to one row per column.
//!
//! The graph is never materialised: weights are evaluated on demand from the
//! score matrix and a precomputed brightness-above matrix.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest gray level of an 8-bit scan.
pub const MAX_GRAY: f64 = 255.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Layer {
    #[serde(rename = "RPE")]
    Rpe,
    #[serde(rename = "CHOROID")]
    Choroid,
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Layer::Rpe => "RPE",
            Layer::Choroid => "CHOROID",
        })
    }
}

impl std::str::FromStr for Layer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "RPE" | "rpe" => Ok(Layer::Rpe),
            "CHOROID" | "choroid" => Ok(Layer::Choroid),
            other => Err(Error::Parameter(format!("unknown layer {other:?}"))),
        }
    }
}

/// One row index per scan column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Boundary {
    pub layer: Layer,
    pub rows: Vec<usize>,
}

impl Boundary {
    pub fn new(layer: Layer, rows: Vec<usize>) -> Self {
        Self { layer, rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// Bright-above-dark edges attract; the intensity above the node is
    /// subtracted from the weight.
    Rpe,
    /// Dark-above-bright edges attract; no brightness term.
    DarkToLight,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightConfig {
    pub mode: WeightMode,
    /// Pixels above a node averaged into the brightness term.
    pub d_above: usize,
    /// Weight of edges lying entirely in the first or the last column.
    pub w_min: f64,
    /// Lower clamp for every other edge weight.
    pub weight_floor: f64,
    /// Average the brightness term over both endpoints instead of using the
    /// left/upper endpoint only.
    pub symmetric_brightness: bool,
}

impl Default for WeightConfig {
    fn default() -> Self {
        Self {
            mode: WeightMode::Rpe,
            d_above: 10,
            w_min: 1e-5,
            weight_floor: 1e-5,
            symmetric_brightness: false,
        }
    }
}

impl WeightConfig {
    pub fn rpe() -> Self {
        Self::default()
    }

    pub fn dark_to_light() -> Self {
        Self {
            mode: WeightMode::DarkToLight,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_above == 0 {
            return Err(Error::Parameter("d_above must be >= 1".into()));
        }
        if !(self.weight_floor > 0.0) {
            return Err(Error::Parameter(format!(
                "weight_floor must be positive, got {}",
                self.weight_floor
            )));
        }
        if !(self.w_min > 0.0) {
            return Err(Error::Parameter(format!(
                "w_min must be positive, got {}",
                self.w_min
            )));
        }
        Ok(())
    }

    fn layer(&self) -> Layer {
        match self.mode {
            WeightMode::Rpe => Layer::Rpe,
            WeightMode::DarkToLight => Layer::Choroid,
        }
    }
}

/// Per-node attraction derived from a vertical gradient.
pub fn node_gradient_score(grad: &Array2<f64>, mode: WeightMode) -> Array2<f64> {
    match mode {
        WeightMode::Rpe => grad.clone(),
        WeightMode::DarkToLight => grad.mapv(|g| -g),
    }
}

/// Mean of up to `d` pixels directly above `(row, col)`; zero on the top row.
fn brightness_above(image: &Array2<f64>, row: usize, col: usize, d: usize) -> f64 {
    let start = row.saturating_sub(d);
    if start == row {
        return 0.0;
    }
    let mut acc = 0.0;
    for r in start..row {
        acc += image[[r, col]];
    }
    acc / (row - start) as f64
}

#[inline]
fn clamp_weight(s1: f64, s2: f64, brightness: f64, floor: f64) -> f64 {
    let raw = 4.0 * MAX_GRAY - s1 - s2 - brightness;
    raw.max(floor)
}

fn is_neighbor(n1: (usize, usize), n2: (usize, usize)) -> bool {
    n1 != n2 && n1.0.abs_diff(n2.0) <= 1 && n1.1.abs_diff(n2.1) <= 1
}

/// Weight of the edge between 8-neighbours `n1` and `n2`, given as
/// `(row, col)`.
///
/// `4·255 − score(n1) − score(n2) − brightness`, clamped below at
/// `weight_floor`. In RPE mode the brightness term is the mean intensity of
/// up to `d_above` pixels above `n1` in its column.
pub fn edge_weight(
    score: &Array2<f64>,
    image: &Array2<f64>,
    n1: (usize, usize),
    n2: (usize, usize),
    cfg: &WeightConfig,
) -> Result<f64> {
    let (rows, cols) = score.dim();
    let inside = |n: (usize, usize)| n.0 < rows && n.1 < cols;
    if !is_neighbor(n1, n2) || !inside(n1) || !inside(n2) {
        return Err(Error::Topology(n1.0, n1.1, n2.0, n2.1));
    }
    if image.dim() != score.dim() {
        return Err(Error::Dimension(format!(
            "score is {:?}, image is {:?}",
            score.dim(),
            image.dim()
        )));
    }
    let brightness = match cfg.mode {
        WeightMode::DarkToLight => 0.0,
        WeightMode::Rpe if cfg.symmetric_brightness => {
            0.5 * (brightness_above(image, n1.0, n1.1, cfg.d_above)
                + brightness_above(image, n2.0, n2.1, cfg.d_above))
        }
        WeightMode::Rpe => brightness_above(image, n1.0, n1.1, cfg.d_above),
    };
    Ok(clamp_weight(
        score[n1],
        score[n2],
        brightness,
        cfg.weight_floor,
    ))
}

/// Result of a boundary search.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSearch {
    pub boundary: Boundary,
    /// Visited nodes as `(row, col)`, source first.
    pub path: Vec<(usize, usize)>,
    /// Sum of edge weights along `path`, accumulated from the source.
    pub cost: f64,
}

#[derive(Clone, Copy, PartialEq)]
struct Frontier {
    cost: f64,
    node: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap: reverse both keys. Lower index (row-major,
        // so lower row then lower column) wins ties.
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const NEIGHBORS: [(isize, isize); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

/// Minimum-weight boundary across the grid. See [`search_boundary`].
pub fn shortest_boundary(
    score: &Array2<f64>,
    image: &Array2<f64>,
    cfg: &WeightConfig,
) -> Result<Boundary> {
    search_boundary(score, image, cfg).map(|s| s.boundary)
}

/// Runs Dijkstra from `(0, 0)` to `(rows-1, cols-1)` and returns the path,
/// its cost and the collapsed boundary.
///
/// An edge's brightness term belongs to its left endpoint, or its upper
/// endpoint for vertical edges, which keeps the graph undirected.
pub fn search_boundary(
    score: &Array2<f64>,
    image: &Array2<f64>,
    cfg: &WeightConfig,
) -> Result<PathSearch> {
    cfg.validate()?;
    let (rows, cols) = score.dim();
    if cols < 2 || rows == 0 {
        return Err(Error::Dimension(format!(
            "boundary search needs at least 2 columns and 1 row, got {rows}x{cols}"
        )));
    }
    if image.dim() != score.dim() {
        return Err(Error::Dimension(format!(
            "score is {:?}, image is {:?}",
            score.dim(),
            image.dim()
        )));
    }

    let score = score.as_standard_layout();
    let score = score.as_slice().expect("standard layout");
    let brightness: Vec<f64> = match cfg.mode {
        WeightMode::DarkToLight => vec![0.0; rows * cols],
        WeightMode::Rpe => (0..rows * cols)
            .map(|i| brightness_above(image, i / cols, i % cols, cfg.d_above))
            .collect(),
    };
    let weight = |a: usize, b: usize| -> f64 {
        let (ca, cb) = (a % cols, b % cols);
        if ca == cb && (ca == 0 || ca == cols - 1) {
            return cfg.w_min;
        }
        // canonical first endpoint: lower column, then lower row
        let (first, second) = if (ca, a / cols) <= (cb, b / cols) {
            (a, b)
        } else {
            (b, a)
        };
        let bright = match cfg.mode {
            WeightMode::DarkToLight => 0.0,
            WeightMode::Rpe if cfg.symmetric_brightness => {
                0.5 * (brightness[first] + brightness[second])
            }
            WeightMode::Rpe => brightness[first],
        };
        clamp_weight(score[first], score[second], bright, cfg.weight_floor)
    };

    let n = rows * cols;
    let source = 0;
    let target = n - 1;
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Frontier {
        cost: 0.0,
        node: source,
    });

    while let Some(Frontier { cost, node }) = heap.pop() {
        if done[node] {
            continue;
        }
        done[node] = true;
        if node == target {
            break;
        }
        let (r, c) = ((node / cols) as isize, (node % cols) as isize);
        for (dr, dc) in NEIGHBORS {
            let (nr, nc) = (r + dr, c + dc);
            if nr < 0 || nc < 0 || nr >= rows as isize || nc >= cols as isize {
                continue;
            }
            let next = nr as usize * cols + nc as usize;
            if done[next] {
                continue;
            }
            let candidate = cost + weight(node, next);
            if candidate < dist[next] {
                dist[next] = candidate;
                prev[next] = node;
                heap.push(Frontier {
                    cost: candidate,
                    node: next,
                });
            }
        }
    }

    let mut path = Vec::new();
    let mut node = target;
    while node != usize::MAX {
        path.push((node / cols, node % cols));
        if node == source {
            break;
        }
        node = prev[node];
    }
    path.reverse();

    let boundary = Boundary::new(cfg.layer(), collapse_path(&path, rows, cols));
    Ok(PathSearch {
        boundary,
        path,
        cost: dist[target],
    })
}

/// One row per column: the rounded mean of the rows the path visits there.
///
/// In the two border columns only nodes that step into the neighbouring
/// column count, so the free slide along the border does not pull the row
/// towards the corners. Columns without visits are linearly interpolated.
fn collapse_path(path: &[(usize, usize)], rows: usize, cols: usize) -> Vec<usize> {
    let mut sum = vec![0usize; cols];
    let mut count = vec![0usize; cols];
    for (i, &(r, c)) in path.iter().enumerate() {
        let border = c == 0 || c == cols - 1;
        if border {
            let inner = if c == 0 { 1 } else { cols - 2 };
            let touches = [i.checked_sub(1), Some(i + 1)]
                .into_iter()
                .flatten()
                .filter_map(|j| path.get(j))
                .any(|&(_, cc)| cc == inner);
            if !touches {
                continue;
            }
        }
        sum[c] += r;
        count[c] += 1;
    }

    let mut out: Vec<Option<usize>> = (0..cols)
        .map(|c| (count[c] > 0).then(|| (sum[c] as f64 / count[c] as f64).round() as usize))
        .collect();

    let known: Vec<usize> = (0..cols).filter(|&c| out[c].is_some()).collect();
    if known.is_empty() {
        return vec![rows.saturating_sub(1) / 2; cols];
    }
    for c in 0..cols {
        if out[c].is_some() {
            continue;
        }
        let left = known.iter().rev().find(|&&k| k < c).copied();
        let right = known.iter().find(|&&k| k > c).copied();
        out[c] = Some(match (left, right) {
            (Some(l), Some(r)) => {
                let (rl, rr) = (out[l].unwrap() as f64, out[r].unwrap() as f64);
                let t = (c - l) as f64 / (r - l) as f64;
                (rl + t * (rr - rl)).round() as usize
            }
            (Some(l), None) => out[l].unwrap(),
            (None, Some(r)) => out[r].unwrap(),
            (None, None) => unreachable!(),
        });
    }
    out.into_iter().map(|r| r.unwrap().min(rows - 1)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn score_modes() {
        let grad = Array2::from_shape_vec((1, 3), vec![-40.0, 0.0, 12.0]).unwrap();
        assert_eq!(node_gradient_score(&grad, WeightMode::Rpe), grad);
        let flipped = node_gradient_score(&grad, WeightMode::DarkToLight);
        assert_eq!(flipped[[0, 0]], 40.0);
        assert_eq!(flipped[[0, 2]], -12.0);
    }

    #[test]
    fn dark_over_bright_edge_peaks_on_transition() {
        // rows 0..6 dark (30), rows 6..12 bright (200)
        let img = Array2::from_shape_fn((12, 5), |(r, _)| if r < 6 { 30.0 } else { 200.0 });
        let grad = crate::filters::vertical_gradient(&img).unwrap();
        let score = node_gradient_score(&grad, WeightMode::DarkToLight);
        let best = (0..12).map(|r| score[[r, 2]]).fold(f64::MIN, f64::max);
        let rows: Vec<usize> = (0..12).filter(|&r| score[[r, 2]] == best).collect();
        assert_eq!(rows, vec![5, 6]);
    }

    #[test]
    fn edge_weight_examples() {
        let zero = Array2::zeros((12, 3));
        let cfg = WeightConfig::rpe();
        assert_eq!(
            edge_weight(&zero, &zero, (11, 0), (11, 1), &cfg).unwrap(),
            1020.0
        );

        let max = Array2::from_elem((12, 3), 510.0);
        assert_eq!(
            edge_weight(&max, &zero, (0, 0), (0, 1), &cfg).unwrap(),
            1e-5
        );

        let bright = Array2::from_elem((12, 3), 255.0);
        let w = edge_weight(&max, &bright, (10, 1), (10, 2), &cfg).unwrap();
        assert_eq!(w, 1e-5);

        assert!(matches!(
            edge_weight(&zero, &zero, (0, 0), (2, 0), &cfg),
            Err(Error::Topology(..))
        ));
        assert!(matches!(
            edge_weight(&zero, &zero, (1, 1), (1, 1), &cfg),
            Err(Error::Topology(..))
        ));
    }

    #[test]
    fn brightness_uses_partial_window_near_top() {
        let score = Array2::zeros((5, 3));
        let image = Array2::from_shape_fn((5, 3), |(r, _)| (r * 10) as f64);
        let cfg = WeightConfig::rpe();
        // above (3, 0): rows 0,1,2 -> mean 10
        assert_eq!(
            edge_weight(&score, &image, (3, 0), (3, 1), &cfg).unwrap(),
            1010.0
        );
        let dark = WeightConfig::dark_to_light();
        assert_eq!(
            edge_weight(&score, &image, (3, 0), (3, 1), &dark).unwrap(),
            1020.0
        );
    }

    #[test]
    fn flat_edge_is_followed() {
        let mut score = Array2::zeros((9, 14));
        score.row_mut(4).fill(510.0);
        let image = Array2::zeros((9, 14));
        let b = shortest_boundary(&score, &image, &WeightConfig::dark_to_light()).unwrap();
        assert_eq!(b.layer, Layer::Choroid);
        assert!(b.rows.iter().all(|&r| r == 4), "{:?}", b.rows);
    }

    #[test]
    fn single_column_is_rejected() {
        let m = Array2::zeros((5, 1));
        assert!(matches!(
            shortest_boundary(&m, &m, &WeightConfig::rpe()),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn collapse_interpolates_gaps() {
        let path = [(0, 0), (2, 1), (6, 3), (6, 4)];
        assert_eq!(collapse_path(&path, 8, 5), vec![0, 2, 4, 6, 6]);
    }
}
