//! Test-only reference implementations shared by the integration tests.

#![allow(dead_code)]

use choroidseg_core::{WeightConfig, WeightMode};
use ndarray::Array2;
use rand::Rng;

/// Edge weight written out directly from the weighting rule: border-column
/// edges cost `w_min`; otherwise `4·255 − s(a) − s(b) − brightness(a)`
/// clamped at the floor, where `a` is the endpoint with the lower
/// (column, row).
pub fn reference_weight(
    score: &Array2<f64>,
    image: &Array2<f64>,
    p: (usize, usize),
    q: (usize, usize),
    cfg: &WeightConfig,
) -> f64 {
    let cols = score.ncols();
    if p.1 == q.1 && (p.1 == 0 || p.1 == cols - 1) {
        return cfg.w_min;
    }
    let (a, b) = if (p.1, p.0) <= (q.1, q.0) {
        (p, q)
    } else {
        (q, p)
    };
    let brightness = match cfg.mode {
        WeightMode::DarkToLight => 0.0,
        WeightMode::Rpe => {
            let above: Vec<f64> = (a.0.saturating_sub(cfg.d_above)..a.0)
                .map(|r| image[[r, a.1]])
                .collect();
            if above.is_empty() {
                0.0
            } else {
                above.iter().sum::<f64>() / above.len() as f64
            }
        }
    };
    (4.0 * 255.0 - score[a] - score[b] - brightness).max(cfg.weight_floor)
}

/// Minimum cost over all simple paths from the top-left to the bottom-right
/// node of the 8-connected grid, by depth-first enumeration.
///
/// A branch is cut when it reaches a node no cheaper than an earlier visit.
/// With positive weights the first visit at a node's true distance always
/// lies on a shortest path, so the cut never loses the optimum.
pub fn brute_force_cost(score: &Array2<f64>, image: &Array2<f64>, cfg: &WeightConfig) -> f64 {
    let (rows, cols) = score.dim();
    let mut best = Array2::from_elem((rows, cols), f64::INFINITY);
    let mut on_path = Array2::from_elem((rows, cols), false);
    let mut ctx = Dfs {
        score,
        image,
        cfg,
        best: &mut best,
        on_path: &mut on_path,
    };
    ctx.visit((0, 0), 0.0);
    best[[rows - 1, cols - 1]]
}

struct Dfs<'a> {
    score: &'a Array2<f64>,
    image: &'a Array2<f64>,
    cfg: &'a WeightConfig,
    best: &'a mut Array2<f64>,
    on_path: &'a mut Array2<bool>,
}

impl Dfs<'_> {
    fn visit(&mut self, node: (usize, usize), cost: f64) {
        if cost >= self.best[node] {
            return;
        }
        self.best[node] = cost;
        let (rows, cols) = self.score.dim();
        if node == (rows - 1, cols - 1) {
            return;
        }
        self.on_path[node] = true;
        for dr in -1isize..=1 {
            for dc in -1isize..=1 {
                let (r, c) = (node.0 as isize + dr, node.1 as isize + dc);
                if (dr, dc) == (0, 0) || r < 0 || c < 0 || r >= rows as isize || c >= cols as isize
                {
                    continue;
                }
                let next = (r as usize, c as usize);
                if self.on_path[next] {
                    continue;
                }
                let w = reference_weight(self.score, self.image, node, next, self.cfg);
                self.visit(next, cost + w);
            }
        }
        self.on_path[node] = false;
    }
}

/// A random instance whose path sums are exact in `f64`: integer scores,
/// column-constant integer images (so every brightness mean is an integer)
/// and dyadic border and floor weights.
pub fn exact_instance(
    rng: &mut impl Rng,
    rows: usize,
    cols: usize,
    mode: WeightMode,
) -> (Array2<f64>, Array2<f64>, WeightConfig) {
    let score = Array2::from_shape_fn((rows, cols), |_| rng.random_range(-510i32..=510) as f64);
    let column_level: Vec<f64> = (0..cols)
        .map(|_| rng.random_range(0u8..=255) as f64)
        .collect();
    let image = Array2::from_shape_fn((rows, cols), |(_, c)| column_level[c]);
    let cfg = WeightConfig {
        mode,
        d_above: rng.random_range(1..=10),
        w_min: 2f64.powi(-16),
        weight_floor: 2f64.powi(-17),
        ..WeightConfig::rpe()
    };
    (score, image, cfg)
}
