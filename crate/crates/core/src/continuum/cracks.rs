use serde::{Deserialize, Serialize};

use super::ContinuumProfile;
use crate::numeric::GaussRule;
use crate::potentials::ExternalLoad;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrackParams {
    /// Number of uniform subintervals of [0, 1] on which F is sampled.
    pub grid: usize,
    /// Points in [0, 1] within `rel_tol·(1 + |max F|)` of max F belong to M.
    pub rel_tol: f64,
    pub points_per_cell: usize,
}

impl Default for CrackParams {
    fn default() -> Self {
        Self { grid: 4096, rel_tol: 1e-8, points_per_cell: 8 }
    }
}

/// A connected piece of the argmax set; a point when `start == end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArgmaxComponent {
    pub start: f64,
    pub end: f64,
}

impl ArgmaxComponent {
    pub fn is_point(&self) -> bool {
        self.start == self.end
    }

    pub fn distance(&self, x: f64) -> f64 {
        if x < self.start {
            self.start - x
        } else if x > self.end {
            x - self.end
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrackPrediction {
    pub x: Vec<f64>,
    pub f: Vec<f64>,
    pub max_f: f64,
    pub argmax: Vec<ArgmaxComponent>,
}

impl CrackPrediction {
    /// Distance from `x` to the argmax set M.
    pub fn distance_to_argmax(&self, x: f64) -> f64 {
        self.argmax.iter().map(|c| c.distance(x)).fold(f64::INFINITY, f64::min)
    }

    pub fn grid_step(&self) -> f64 {
        self.x[1] - self.x[0]
    }
}

/// Samples F(x) = ∫_x^1 -∂Φ/∂u(y, u(y)) dy along `profile` and extracts the
/// set M of its near-maximal points.
pub fn crack_predictor_f(load: &ExternalLoad, profile: &ContinuumProfile, params: &CrackParams) -> CrackPrediction {
    let k = params.grid.max(1);
    let x: Vec<f64> = (0..=k).map(|i| i as f64 / k as f64).collect();
    let mut f = vec![0.0; k + 1];
    if !load.is_zero() {
        let rule = GaussRule::new(params.points_per_cell);
        let nodes = profile.nodes();
        let rv = profile.right_values();
        let slopes = profile.slopes();
        // Walk the cells from the right; u is affine between consecutive
        // breakpoints of the merged (grid ∪ nodes) partition.
        let mut cell = profile.n_cells() - 1;
        for i in (0..k).rev() {
            let (a, b) = (x[i], x[i + 1]);
            let mut acc = 0.0;
            let mut hi = b;
            loop {
                while nodes[cell] >= hi && cell > 0 {
                    cell -= 1;
                }
                let lo = nodes[cell].max(a);
                let (p, s, x0) = (rv[cell], slopes[cell], nodes[cell]);
                acc += rule.integrate(lo, hi, |y| -load.dphi_du(y, p + s * (y - x0)));
                if lo <= a {
                    break;
                }
                hi = lo;
            }
            f[i] = f[i + 1] + acc;
        }
    }
    let max_f = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let band = params.rel_tol * (1.0 + max_f.abs());
    let mut argmax = Vec::new();
    let mut run: Option<usize> = None;
    for i in 0..=k {
        let inside = f[i] >= max_f - band;
        match (inside, run) {
            (true, None) => run = Some(i),
            (false, Some(s)) => {
                argmax.push(ArgmaxComponent { start: x[s], end: x[i - 1] });
                run = None;
            }
            _ => {}
        }
    }
    if let Some(s) = run {
        argmax.push(ArgmaxComponent { start: x[s], end: x[k] });
    }
    CrackPrediction { x, f, max_f, argmax }
}
