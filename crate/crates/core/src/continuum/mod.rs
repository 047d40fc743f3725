//! Continuum candidates for the limit energy
//!
//! ```text
//! H(u) = ∫ J0**(u') + Φ(x, u) dx,   u ∈ BV^ℓ, D^s u ≥ 0,
//! ```
//!
//! represented by a piecewise-affine absolutely continuous part plus finitely
//! many non-negative jumps sitting on mesh nodes.

mod cracks;
mod diagnostics;
mod inf;
mod transform;

use serde::{Deserialize, Serialize};

use crate::effective::EffectiveProfile;
use crate::error::{Error, Result};
use crate::numeric::{CompensatedSum, GaussRule};
use crate::potentials::ExternalLoad;

pub use cracks::{crack_predictor_f, ArgmaxComponent, CrackParams, CrackPrediction};
pub use diagnostics::{euler_lagrange_residual, jump_discrepancy_check, ElReport, JumpDiscrepancy};
pub use inf::{estimate_inf_h, InfEstimate, InfOpts};
pub use transform::cap_and_relocate;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub x: f64,
    pub size: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureParams {
    pub points_per_cell: usize,
}

impl Default for QuadratureParams {
    fn default() -> Self {
        Self { points_per_cell: 8 }
    }
}

/// Piecewise-affine profile on [0, 1] with jumps at nodes.
///
/// The extension by 0 to the left and by ℓ to the right makes jumps at 0 and
/// at 1 meaningful: u(0-) = 0 and u(1+) = ℓ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProfile", into = "RawProfile")]
pub struct ContinuumProfile {
    nodes: Vec<f64>,
    slopes: Vec<f64>,
    node_jumps: Vec<f64>,
    ell: f64,
}

#[derive(Serialize, Deserialize)]
struct RawProfile {
    nodes: Vec<f64>,
    slopes: Vec<f64>,
    jumps: Vec<Jump>,
    ell: f64,
}

impl TryFrom<RawProfile> for ContinuumProfile {
    type Error = Error;
    fn try_from(r: RawProfile) -> Result<Self> {
        ContinuumProfile::new(r.nodes, r.slopes, r.jumps, r.ell)
    }
}

impl From<ContinuumProfile> for RawProfile {
    fn from(p: ContinuumProfile) -> Self {
        let jumps = p.jumps();
        RawProfile { nodes: p.nodes, slopes: p.slopes, jumps, ell: p.ell }
    }
}

impl ContinuumProfile {
    /// Builds a profile; jump locations that are not nodes split their cell.
    /// Slopes and jump signs are not checked here (see [`energy_h`]).
    pub fn new(mut nodes: Vec<f64>, mut slopes: Vec<f64>, jumps: Vec<Jump>, ell: f64) -> Result<Self> {
        if nodes.len() < 2 || nodes[0] != 0.0 || *nodes.last().unwrap() != 1.0 {
            return Err(Error::InvalidInput("profile nodes must start at 0 and end at 1".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("profile nodes must be strictly increasing".into()));
        }
        if slopes.len() != nodes.len() - 1 {
            return Err(Error::InvalidInput(format!(
                "{} nodes need {} slopes, got {}",
                nodes.len(),
                nodes.len() - 1,
                slopes.len()
            )));
        }
        if !ell.is_finite() || slopes.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidInput("profile slopes and ell must be finite".into()));
        }
        for j in &jumps {
            if !(0.0..=1.0).contains(&j.x) || !j.size.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "jump at {} of size {} is outside [0, 1] or not finite",
                    j.x, j.size
                )));
            }
            let k = nodes.partition_point(|&t| t < j.x);
            if nodes[k] != j.x {
                nodes.insert(k, j.x);
                slopes.insert(k, slopes[k - 1]);
            }
        }
        let mut node_jumps = vec![0.0; nodes.len()];
        for j in &jumps {
            let k = nodes.partition_point(|&t| t < j.x);
            node_jumps[k] += j.size;
        }
        Ok(Self { nodes, slopes, node_jumps, ell })
    }

    /// Profile given by node values only (no jumps).
    pub fn from_values(nodes: Vec<f64>, values: &[f64], ell: f64) -> Result<Self> {
        if values.len() != nodes.len() {
            return Err(Error::InvalidInput("one value per node is required".into()));
        }
        let slopes = nodes.windows(2).zip(values.windows(2)).map(|(x, v)| (v[1] - v[0]) / (x[1] - x[0])).collect();
        let mut jumps = Vec::new();
        if values[0] != 0.0 {
            jumps.push(Jump { x: 0.0, size: values[0] });
        }
        let last = *values.last().unwrap();
        if last != ell {
            jumps.push(Jump { x: 1.0, size: ell - last });
        }
        Self::new(nodes, slopes, jumps, ell)
    }

    pub fn affine(ell: f64) -> Self {
        Self { nodes: vec![0.0, 1.0], slopes: vec![ell], node_jumps: vec![0.0, 0.0], ell }
    }

    /// Uniform slope `slope` on `cells` equal cells plus one jump at `at`
    /// restoring the total elongation.
    pub fn slope_plus_jump(cells: usize, slope: f64, at: f64, ell: f64) -> Result<Self> {
        let nodes: Vec<f64> = (0..=cells).map(|k| k as f64 / cells as f64).collect();
        Self::new(nodes, vec![slope; cells], vec![Jump { x: at, size: ell - slope }], ell)
    }

    pub(crate) fn from_node_data(nodes: Vec<f64>, slopes: Vec<f64>, node_jumps: Vec<f64>, ell: f64) -> Self {
        debug_assert_eq!(nodes.len(), node_jumps.len());
        Self { nodes, slopes, node_jumps, ell }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    /// Jump at each node (zero where u is continuous).
    pub fn node_jumps(&self) -> &[f64] {
        &self.node_jumps
    }

    pub fn jumps(&self) -> Vec<Jump> {
        self.nodes.iter().zip(&self.node_jumps).filter(|(_, &a)| a != 0.0).map(|(&x, &size)| Jump { x, size }).collect()
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn n_cells(&self) -> usize {
        self.slopes.len()
    }

    pub fn widths(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes.windows(2).map(|w| w[1] - w[0])
    }

    /// u(x_j-) at every node, with u(0-) = 0.
    pub fn left_values(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut acc = 0.0;
        out.push(0.0);
        for j in 0..self.n_cells() {
            acc += self.node_jumps[j];
            acc += self.slopes[j] * (self.nodes[j + 1] - self.nodes[j]);
            out.push(acc);
        }
        out
    }

    /// u(x_j+) at every node. At x = 1 this is u(1-) + jump at 1, which equals
    /// ℓ for a compatible profile.
    pub fn right_values(&self) -> Vec<f64> {
        self.left_values().iter().zip(&self.node_jumps).map(|(l, a)| l + a).collect()
    }

    fn locate(&self, x: f64) -> usize {
        (self.nodes.partition_point(|&t| t <= x).max(1) - 1).min(self.n_cells() - 1)
    }

    /// u(x+); for x strictly inside a cell this is just u(x).
    pub fn value_right(&self, x: f64) -> f64 {
        let rv = self.right_values();
        let j = self.locate(x);
        if x == self.nodes[j + 1] {
            return rv[j + 1];
        }
        rv[j] + self.slopes[j] * (x - self.nodes[j])
    }

    /// u(x-).
    pub fn value_left(&self, x: f64) -> f64 {
        let k = self.nodes.partition_point(|&t| t < x);
        if k < self.nodes.len() && self.nodes[k] == x {
            return self.left_values()[k];
        }
        self.value_right(x)
    }

    /// ℓ minus the total increment (Σ slope·width + Σ jumps).
    pub fn compatibility_defect(&self) -> f64 {
        let total: CompensatedSum =
            self.widths().zip(&self.slopes).map(|(w, s)| w * s).chain(self.node_jumps.iter().copied()).collect();
        self.ell - total.value()
    }

    pub fn min_slope(&self) -> f64 {
        self.slopes.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_slope(&self) -> f64 {
        self.slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn validate_feasible(&self) -> Result<()> {
        if let Some((j, s)) = self.slopes.iter().enumerate().find(|(_, &s)| !(s > 0.0)) {
            return Err(Error::InfeasibleProfile(format!("cell {j} has non-positive slope {s}")));
        }
        if let Some((k, a)) = self.node_jumps.iter().enumerate().find(|(_, &a)| a < 0.0) {
            return Err(Error::InfeasibleProfile(format!("negative jump {a} at x = {}", self.nodes[k])));
        }
        Ok(())
    }
}

/// H(u) with composite Gauss quadrature for the load term.
pub fn energy_h(
    profile: &ContinuumProfile,
    effective: &EffectiveProfile,
    load: &ExternalLoad,
    quad: &QuadratureParams,
) -> Result<f64> {
    profile.validate_feasible()?;
    let rule = GaussRule::new(quad.points_per_cell);
    Ok(energy_with_rule(profile, effective, load, &rule))
}

pub(crate) fn energy_with_rule(
    profile: &ContinuumProfile,
    effective: &EffectiveProfile,
    load: &ExternalLoad,
    rule: &GaussRule,
) -> f64 {
    let rv = profile.right_values();
    let mut acc = CompensatedSum::new();
    for j in 0..profile.n_cells() {
        let (a, b) = (profile.nodes[j], profile.nodes[j + 1]);
        let s = profile.slopes[j];
        acc.add((b - a) * effective.envelope(s));
        if !load.is_zero() {
            let p = rv[j];
            acc.add(rule.integrate(a, b, |x| load.phi(x, p + s * (x - a))));
        }
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{Constants, Expr};
    use crate::test_support::lj;

    #[test]
    fn jumps_split_cells_and_values_follow() {
        let p =
            ContinuumProfile::new(vec![0.0, 0.5, 1.0], vec![1.0, 2.0], vec![Jump { x: 0.25, size: 0.5 }], 2.0).unwrap();
        assert_eq!(p.nodes(), &[0.0, 0.25, 0.5, 1.0]);
        assert_eq!(p.value_left(0.25), 0.25);
        assert_eq!(p.value_right(0.25), 0.75);
        assert_eq!(p.value_right(0.75), 1.5);
        assert_eq!(p.compatibility_defect(), 0.0);
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<ContinuumProfile>(&json).unwrap(), p);
    }

    #[test]
    fn energy_examples() {
        let e = lj();
        let q = QuadratureParams::default();
        let zero = ExternalLoad::zero();
        let ell = 0.8 * e.gamma();
        let v = energy_h(&ContinuumProfile::affine(ell), e, &zero, &q).unwrap();
        assert!((v - e.j0(ell)).abs() < 1e-14);
        let ell = 2.0 * e.gamma();
        let p = ContinuumProfile::slope_plus_jump(7, e.gamma(), 0.3, ell).unwrap();
        assert!((energy_h(&p, e, &zero, &q).unwrap() - e.j0_at_gamma()).abs() < 1e-14);
        let bad = ContinuumProfile::slope_plus_jump(4, 1.2 * ell, 0.3, ell).unwrap();
        assert!(matches!(energy_h(&bad, e, &zero, &q), Err(Error::InfeasibleProfile(_))));
    }

    #[test]
    fn quadrature_refinement_is_stable() {
        let e = lj();
        let load = ExternalLoad::quadratic_well(Expr::parse("sin(3*x) + x", &Constants::new()).unwrap());
        let nodes: Vec<f64> = (0..=64).map(|k| k as f64 / 64.0).collect();
        let vals: Vec<f64> = nodes.iter().map(|x| x * 1.2 + 0.05 * (7.0 * x).sin()).collect();
        let p = ContinuumProfile::from_values(nodes, &vals, 1.2 + 0.05 * 7f64.sin()).unwrap();
        let a = energy_h(&p, e, &load, &QuadratureParams { points_per_cell: 8 }).unwrap();
        let b = energy_h(&p, e, &load, &QuadratureParams { points_per_cell: 16 }).unwrap();
        assert!((a - b).abs() < 1e-8);
    }
}
