use serde::{Deserialize, Serialize};

use crate::continuum::{ContinuumProfile, Jump};
use crate::discrete::ChainState;

/// Compactness indicators of one chain state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactnessRecord {
    pub n: usize,
    pub eps: Vec<f64>,
    /// #{i : s_i ≥ γ + ε} for each ε.
    pub count_stretched: Vec<usize>,
    /// #{i : |s_{i+1} − s_i| ≥ ε} for each ε.
    pub oscillation: Vec<usize>,
    /// Σ ((s_i − γ)_+)² over bonds with s_i ≤ γ^c.
    pub excess_sq: f64,
    pub min_slope: f64,
    /// Requested ε outside (0, (γ^c − γ)/2), where the counting bound is not
    /// guaranteed.
    pub eps_out_of_range: Vec<f64>,
    /// Rescaled energy H_{1,n}, filled in by the sweep.
    pub h1n: Option<f64>,
}

/// Per-n records collected over a sweep.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CompactnessReport {
    pub records: Vec<CompactnessRecord>,
}

pub fn compactness_diagnostics(state: &ChainState, gamma: f64, gamma_c: f64, eps_list: &[f64]) -> CompactnessRecord {
    let s = state.slopes();
    let count_stretched = eps_list.iter().map(|&e| s.iter().filter(|&&z| z >= gamma + e).count()).collect();
    let oscillation = eps_list.iter().map(|&e| s.windows(2).filter(|w| (w[1] - w[0]).abs() >= e).count()).collect();
    let excess_sq = s.iter().filter(|&&z| z <= gamma_c).map(|&z| (z - gamma).max(0.0).powi(2)).sum();
    let half_gap = 0.5 * (gamma_c - gamma);
    CompactnessRecord {
        n: state.n,
        eps: eps_list.to_vec(),
        count_stretched,
        oscillation,
        excess_sq,
        min_slope: s.iter().copied().fold(f64::INFINITY, f64::min),
        eps_out_of_range: eps_list.iter().copied().filter(|&e| !(e > 0.0 && e < half_gap)).collect(),
        h1n: None,
    }
}

/// Bond pairs whose next-to-nearest slope exceeds √n, and the candidate limit
/// obtained by freezing u across them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpSet {
    pub threshold: f64,
    /// Indices i with (u^{i+2} − u^i)/(2λ) > √n.
    pub flagged: Vec<usize>,
    /// Merged node ranges [a, b] covered by flagged pairs.
    pub intervals: Vec<(usize, usize)>,
    /// Jumps of the candidate at bλ for each interval.
    pub jumps: Vec<Jump>,
    /// u on unflagged pairs, u^a on [aλ, bλ), jump at bλ.
    pub candidate: ContinuumProfile,
}

pub fn jump_detect_sqrt_n(state: &ChainState) -> JumpSet {
    let n = state.n;
    let threshold = (n as f64).sqrt();
    let flagged: Vec<usize> =
        state.nnn_slopes().iter().enumerate().filter(|(_, &z)| z > threshold).map(|(i, _)| i).collect();
    let mut intervals: Vec<(usize, usize)> = Vec::new();
    for &i in &flagged {
        match intervals.last_mut() {
            Some(last) if i <= last.1 => last.1 = i + 2,
            _ => intervals.push((i, i + 2)),
        }
    }
    let u = &state.u;
    let lam = state.lambda();
    let mut slopes = state.slopes();
    let mut node_jumps = vec![0.0; n + 1];
    let mut jumps = Vec::with_capacity(intervals.len());
    for &(a, b) in &intervals {
        for s in &mut slopes[a..b] {
            *s = 0.0;
        }
        node_jumps[b] = u[b] - u[a];
        jumps.push(Jump { x: b as f64 * lam, size: u[b] - u[a] });
    }
    node_jumps[n] += state.ell - u[n];
    let nodes = (0..=n).map(|i| i as f64 / n as f64).collect();
    let candidate = ContinuumProfile::from_node_data(nodes, slopes, node_jumps, state.ell);
    JumpSet { threshold, flagged, intervals, jumps, candidate }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_state_is_quiet() {
        let g = 1.0;
        let st = ChainState::affine(32, g, g, g);
        let r = compactness_diagnostics(&st, g, 1.08, &[0.01, 0.05]);
        assert_eq!(r.count_stretched, vec![0, 0]);
        assert_eq!(r.oscillation, vec![0, 0]);
        assert_eq!(r.excess_sq, 0.0);
        assert!((r.min_slope - g).abs() < 1e-12);
        assert!(jump_detect_sqrt_n(&st).flagged.is_empty());
    }

    #[test]
    fn three_stretched_bonds_are_counted() {
        let (n, g, eps) = (20, 1.0, 0.02);
        let lam = 1.0 / n as f64;
        let mut slopes = vec![g - 0.01; n];
        for k in [4, 9, 15] {
            slopes[k] = g + 2.0 * eps;
        }
        let mut u = vec![0.0];
        for s in &slopes {
            u.push(u.last().unwrap() + lam * s);
        }
        let ell = u[n];
        let st = ChainState::new(n, ell, slopes[0], slopes[n - 1], u).unwrap();
        let r = compactness_diagnostics(&st, g, 1.08, &[eps, 3.0 * eps]);
        assert_eq!(r.count_stretched, vec![3, 0]);
        assert_eq!(r.oscillation[0], 6);
        assert_eq!(r.eps_out_of_range, vec![3.0 * eps]);
        assert!((r.excess_sq - 3.0 * (2.0 * eps) * (2.0 * eps)).abs() < 1e-15);
        let flagged = compactness_diagnostics(&st, g, 1.08, &[0.0, 0.05]).eps_out_of_range;
        assert_eq!(flagged, vec![0.0, 0.05]);
    }

    #[test]
    fn threshold_is_strict_and_pairs_merge() {
        let n = 16;
        let lam = 1.0 / n as f64;
        let root = (n as f64).sqrt();
        // NNN slope of the pair (6, 8) is exactly √n: bonds of 0.5 and 2√n − 0.5.
        let mut slopes = vec![0.5; n];
        slopes[7] = 2.0 * root - 0.5;
        let mut u = vec![0.0];
        for s in &slopes {
            u.push(u.last().unwrap() + lam * s);
        }
        let st = ChainState::new(n, u[n], 0.5, 0.5, u.clone()).unwrap();
        let nnn = st.nnn_slopes();
        assert_eq!(nnn[6], root);
        assert!(jump_detect_sqrt_n(&st).flagged.is_empty());

        slopes[7] = 2.0 * root;
        let mut u = vec![0.0];
        for s in &slopes {
            u.push(u.last().unwrap() + lam * s);
        }
        let ell = u[n];
        let st = ChainState::new(n, ell, 0.5, 0.5, u.clone()).unwrap();
        let js = jump_detect_sqrt_n(&st);
        assert_eq!(js.flagged, vec![6, 7]);
        assert_eq!(js.intervals, vec![(6, 9)]);
        assert_eq!(js.jumps.len(), 1);
        assert!((js.jumps[0].size - (u[9] - u[6])).abs() < 1e-15);
        assert!(js.candidate.compatibility_defect().abs() < 1e-14);
    }
}
