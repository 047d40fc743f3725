use std::fmt;

use serde::{Deserialize, Serialize};

use crate::continuum::ContinuumProfile;
use crate::discrete::ChainState;
use crate::error::{Error, Result};

/// Affine interpolation of `state` through the node indices in `anchors`.
fn interpolate(state: &ChainState, anchors: &[usize]) -> ContinuumProfile {
    let n = state.n as f64;
    let nodes: Vec<f64> = anchors.iter().map(|&i| i as f64 / n).collect();
    let values: Vec<f64> = anchors.iter().map(|&i| state.u[i]).collect();
    ContinuumProfile::from_values(nodes, &values, state.ell).expect("anchors are increasing and include 0 and n")
}

fn even_anchors(n: usize) -> Vec<usize> {
    let mut a: Vec<usize> = (0..=n).step_by(2).collect();
    if n % 2 == 1 {
        a.push(n);
    }
    a
}

fn odd_anchors(n: usize) -> Vec<usize> {
    let mut a = vec![0];
    a.extend((1..=n).step_by(2));
    if n % 2 == 0 {
        a.push(n);
    }
    a
}

/// The even and odd interpolants ṽ1 (through u^0, u^2, ..., u^n) and ṽ2
/// (through u^0, u^1, u^3, ..., u^n).
pub fn build_even_odd(state: &ChainState) -> (ContinuumProfile, ContinuumProfile) {
    (interpolate(state, &even_anchors(state.n)), interpolate(state, &odd_anchors(state.n)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TraceStep {
    /// Block [start, end] (in units of λ) had coarse slope above γ and was
    /// rebuilt with slope γ.
    Capped { start: usize, end: usize, coarse_slope: f64 },
    /// Jump inserted at position `at` (in units of λ).
    JumpInserted { at: f64, size: f64 },
    /// The middle segment of a capped block was shifted by `shift` to close a
    /// negative jump.
    Translated { start: f64, end: f64, shift: f64 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstructionTrace {
    pub steps: Vec<TraceStep>,
}

impl fmt::Display for ConstructionTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.steps {
            match s {
                TraceStep::Capped { start, end, coarse_slope } => {
                    writeln!(f, "  capped block [{start}, {end}]λ (coarse slope {coarse_slope})")?
                }
                TraceStep::JumpInserted { at, size } => writeln!(f, "  jump {size} at {at}λ")?,
                TraceStep::Translated { start, end, shift } => writeln!(f, "  shifted ({start}, {end})λ by {shift}")?,
            }
        }
        Ok(())
    }
}

/// Competitors for the continuum energy built from one chain state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompetitorPair {
    pub v1: ContinuumProfile,
    pub v2: ContinuumProfile,
    pub v1_tilde: ContinuumProfile,
    pub v2_tilde: ContinuumProfile,
    pub trace1: ConstructionTrace,
    pub trace2: ConstructionTrace,
    /// max_i |v(iλ) − u^i| / λ over both competitors.
    pub closeness: f64,
}

struct Piece {
    end: f64,
    slope: f64,
    value: f64,
    end_value: f64,
}

fn from_pieces(pieces: &[Piece], ell: f64) -> ContinuumProfile {
    let mut nodes = vec![0.0];
    let mut slopes = Vec::with_capacity(pieces.len());
    let mut jumps = vec![0.0; pieces.len() + 1];
    let mut prev = 0.0;
    for (k, p) in pieces.iter().enumerate() {
        jumps[k] = p.value - prev;
        slopes.push(p.slope);
        nodes.push(p.end);
        prev = p.end_value;
    }
    jumps[pieces.len()] = ell - prev;
    *nodes.last_mut().unwrap() = 1.0;
    ContinuumProfile::from_node_data(nodes, slopes, jumps, ell)
}

/// One competitor: the interpolant through `anchors`, with every two-bond
/// block whose coarse slope exceeds γ rebuilt at slope γ around the three
/// chain values of the block.
fn competitor(state: &ChainState, anchors: &[usize], gamma: f64) -> (ContinuumProfile, ConstructionTrace, f64) {
    let n = state.n as f64;
    let lam = state.lambda();
    let u = &state.u;
    let mut trace = ConstructionTrace::default();
    let mut pieces = Vec::new();
    let mut worst: f64 = 0.0;
    let x = |i: f64| i / n;
    for w in anchors.windows(2) {
        let (a, b) = (w[0], w[1]);
        let coarse = (u[b] - u[a]) / ((b - a) as f64 * lam);
        if b - a != 2 || !(coarse > gamma) {
            if b - a == 2 {
                worst = worst.max((0.5 * (u[a] + u[b]) - u[a + 1]).abs());
            }
            pieces.push(Piece { end: x(b as f64), slope: coarse, value: u[a], end_value: u[b] });
            continue;
        }
        trace.steps.push(TraceStep::Capped { start: a, end: b, coarse_slope: coarse });
        let af = a as f64;
        let half = 0.5 * gamma * lam;
        let left_jump = u[a + 1] - u[a] - gamma * lam;
        let right_jump = u[b] - u[a + 1] - gamma * lam;
        let shift = if left_jump < 0.0 {
            -left_jump
        } else if right_jump < 0.0 {
            right_jump
        } else {
            0.0
        };
        if shift != 0.0 {
            trace.steps.push(TraceStep::Translated { start: af + 0.5, end: af + 1.5, shift });
        }
        // Both sizes are non-negative in exact arithmetic once the shift is
        // applied; the clamp only removes rounding.
        let sizes = [(left_jump + shift).max(0.0), (right_jump - shift).max(0.0)];
        for (at, size) in [(af + 0.5, sizes[0]), (af + 1.5, sizes[1])] {
            if size != 0.0 {
                trace.steps.push(TraceStep::JumpInserted { at, size });
            }
        }
        worst = worst.max(shift.abs());
        let first_end = u[a] + half;
        let mid_start = first_end + sizes[0];
        let mid_end = mid_start + gamma * lam;
        pieces.push(Piece { end: x(af + 0.5), slope: gamma, value: u[a], end_value: first_end });
        pieces.push(Piece { end: x(af + 1.5), slope: gamma, value: mid_start, end_value: mid_end });
        pieces.push(Piece { end: x(af + 2.0), slope: gamma, value: mid_end + sizes[1], end_value: u[b] });
    }
    (from_pieces(&pieces, state.ell), trace, worst / lam)
}

fn check(
    v: &ContinuumProfile,
    tilde: &ContinuumProfile,
    trace: &ConstructionTrace,
    gamma: f64,
    n: usize,
    scale: f64,
) -> std::result::Result<(), String> {
    let tol = 1e-12 * scale;
    if let Some(j) = v.jumps().iter().find(|j| j.size < -tol) {
        return Err(format!("negative jump {} at x = {}", j.size, j.x));
    }
    let capped: Vec<(f64, f64)> = trace
        .steps
        .iter()
        .filter_map(|s| match s {
            TraceStep::Capped { start, end, .. } => Some((*start as f64 / n as f64, *end as f64 / n as f64)),
            _ => None,
        })
        .collect();
    let nodes = v.nodes();
    let rv = v.right_values();
    for j in 0..v.n_cells() {
        let mid = 0.5 * (nodes[j] + nodes[j + 1]);
        if capped.iter().any(|&(a, b)| mid > a && mid < b) {
            if v.slopes()[j] > gamma {
                return Err(format!("slope {} above γ on a capped block at x = {mid}", v.slopes()[j]));
            }
        } else {
            let want = tilde.value_right(mid);
            let got = rv[j] + v.slopes()[j] * (mid - nodes[j]);
            if (want - got).abs() > tol {
                return Err(format!("competitor departs from the interpolant at x = {mid}: {got} vs {want}"));
            }
        }
    }
    Ok(())
}

/// Builds v1 and v2: each two-bond block of the even (odd) interpolant whose
/// slope exceeds γ is replaced by three slope-γ segments through the chain
/// values at its ends and midpoint, with jumps at the quarter points, and a
/// negative jump is closed by shifting the middle segment.
pub fn build_competitors(state: &ChainState, gamma: f64) -> Result<CompetitorPair> {
    if state.n < 4 {
        return Err(Error::InvalidInput(format!("competitors need n ≥ 4, got {}", state.n)));
    }
    let (v1_tilde, v2_tilde) = build_even_odd(state);
    let (v1, trace1, c1) = competitor(state, &even_anchors(state.n), gamma);
    let (v2, trace2, c2) = competitor(state, &odd_anchors(state.n), gamma);
    let scale = 1.0 + state.ell.abs();
    for (v, tilde, trace, name) in [(&v1, &v1_tilde, &trace1, "v1"), (&v2, &v2_tilde, &trace2, "v2")] {
        if let Err(reason) = check(v, tilde, trace, gamma, state.n, scale) {
            return Err(Error::ConstructionFailure { reason: format!("{name}: {reason}"), trace: trace.to_string() });
        }
    }
    Ok(CompetitorPair { v1, v2, v1_tilde, v2_tilde, trace1, trace2, closeness: c1.max(c2) })
}
