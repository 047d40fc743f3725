use serde::{Deserialize, Serialize};

use super::ContinuumProfile;
use crate::effective::EffectiveProfile;
use crate::numeric::GaussRule;
use crate::potentials::ExternalLoad;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElReport {
    /// Largest |∫ J0**'(u') φ' + ∂Φ/∂u(x, u) φ dx| over the hat functions.
    pub max_residual: f64,
    /// Peak of the hat attaining `max_residual`.
    pub worst_x: f64,
    /// Largest slope difference between adjacent cells that are both below γ.
    pub max_subgamma_slope_jump: f64,
    pub essinf_slope: f64,
}

/// Weak Euler–Lagrange residual against the hats of a uniform mesh with
/// `test_resolution` cells (unit height, supported in (0, 1)).
pub fn euler_lagrange_residual(
    profile: &ContinuumProfile,
    effective: &EffectiveProfile,
    load: &ExternalLoad,
    test_resolution: usize,
) -> ElReport {
    let n = test_resolution.max(2);
    let hn = n as f64;
    let rule = GaussRule::new(8);
    let nodes = profile.nodes();
    let slopes = profile.slopes();
    let rv = profile.right_values();
    let mut r = vec![0.0; n + 1];
    let mut cell = 0;
    for i in 0..n {
        let (ya, yb) = (i as f64 / hn, (i + 1) as f64 / hn);
        let mut lo = ya;
        while lo < yb {
            while cell + 1 < profile.n_cells() && nodes[cell + 1] <= lo {
                cell += 1;
            }
            let hi = nodes[cell + 1].min(yb);
            let (s, p, x0) = (slopes[cell], rv[cell], nodes[cell]);
            let fp = effective.envelope_prime(s);
            // φ_i decreases from 1 to 0 on [ya, yb]; φ_{i+1} increases.
            r[i] += -fp * hn * (hi - lo);
            r[i + 1] += fp * hn * (hi - lo);
            if !load.is_zero() {
                for (x, w) in rule.points(lo, hi) {
                    let g = load.dphi_du(x, p + s * (x - x0)) * w;
                    r[i] += g * (yb - x) * hn;
                    r[i + 1] += g * (x - ya) * hn;
                }
            }
            lo = hi;
        }
    }
    let (worst, max_residual) = (1..n).map(|k| (k, r[k].abs())).fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
    let gamma = effective.gamma();
    let sub = gamma - 1e-6;
    let max_subgamma_slope_jump =
        slopes.windows(2).filter(|w| w[0] < sub && w[1] < sub).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
    ElReport { max_residual, worst_x: worst as f64 / hn, max_subgamma_slope_jump, essinf_slope: profile.min_slope() }
}

/// Optimality of the load at one jump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpDiscrepancy {
    pub x: f64,
    pub u_minus: f64,
    pub u_plus: f64,
    pub phi_minus: f64,
    pub phi_plus: f64,
    /// Smallest sampled Φ(x, w) for w between the one-sided values.
    pub phi_min: f64,
    /// Φ(x, u(x-)) − min, if this side is constrained at x.
    pub discrepancy_minus: Option<f64>,
    /// Φ(x, u(x+)) − min, if this side is constrained at x.
    pub discrepancy_plus: Option<f64>,
}

impl JumpDiscrepancy {
    pub fn worst(&self) -> f64 {
        self.discrepancy_minus.unwrap_or(0.0).max(self.discrepancy_plus.unwrap_or(0.0))
    }
}

/// At an interior jump both one-sided values must minimize Φ(x0, ·) over the
/// jump segment; at x = 0 only u(0+) and at x = 1 only u(1-) is constrained.
pub fn jump_discrepancy_check(profile: &ContinuumProfile, load: &ExternalLoad) -> Vec<JumpDiscrepancy> {
    let lv = profile.left_values();
    let samples = 1024;
    profile
        .nodes()
        .iter()
        .enumerate()
        .filter(|(k, _)| profile.node_jumps()[*k] != 0.0)
        .map(|(k, &x)| {
            let (a, b) = (lv[k], lv[k] + profile.node_jumps()[k]);
            let phi_minus = load.phi(x, a);
            let phi_plus = load.phi(x, b);
            let phi_min = (0..samples)
                .map(|i| load.phi(x, a + (b - a) * i as f64 / (samples - 1) as f64))
                .fold(f64::INFINITY, f64::min);
            let at_left_end = x == 0.0;
            let at_right_end = x == 1.0;
            JumpDiscrepancy {
                x,
                u_minus: a,
                u_plus: b,
                phi_minus,
                phi_plus,
                phi_min,
                discrepancy_minus: (!at_left_end).then_some(phi_minus - phi_min),
                discrepancy_plus: (!at_right_end).then_some(phi_plus - phi_min),
            }
        })
        .collect()
}
