use log::debug;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{chain_gradient, chain_hessian, channels_unchecked, ChainState};
use crate::error::{Error, Result};
use crate::numeric::BandedMatrix;
use crate::optimize::{minimize_banded, BandedObjective, DescentOpts, DescentOutcome, Termination};
use crate::potentials::{ExternalLoad, InteractionModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MinimizeOpts {
    /// Bound on the largest free gradient component at exit.
    pub tol: f64,
    pub max_iter: usize,
    /// Number of seeded random single-steep-bond starts.
    pub restarts: usize,
    pub seed: u64,
    /// Plain gradient steps taken before switching to Newton.
    pub gradient_steps: usize,
    /// Slope that the non-steep bonds of steep-bond starts stay below,
    /// usually γ.
    pub slope_cap: Option<f64>,
    /// Reference positions in [0, 1] where a steep-bond start is placed.
    pub crack_sites: Vec<f64>,
    /// Minimizer from a coarser chain, prolonged to the current n.
    pub warm_start: Option<ChainState>,
    pub extra_starts: Vec<ChainState>,
}

impl Default for MinimizeOpts {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 500,
            restarts: 8,
            seed: 0,
            gradient_steps: 0,
            slope_cap: None,
            crack_sites: Vec::new(),
            warm_start: None,
            extra_starts: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizeReport {
    pub state: ChainState,
    pub energy: f64,
    /// Largest absolute free gradient component of the returned state.
    pub grad_norm: f64,
    pub iterations: usize,
    pub restarts_used: usize,
    pub termination: Termination,
    /// Which start produced the returned state.
    pub start: String,
    /// Two starts ended in states more than 1e-6 apart with energies within 1e-10.
    pub degenerate: bool,
}

struct ChainObjective<'a> {
    template: ChainState,
    model: &'a InteractionModel,
    load: &'a ExternalLoad,
}

impl ChainObjective<'_> {
    fn displacements(&self, x: &[f64]) -> Vec<f64> {
        let mut u = self.template.u.clone();
        u[2..self.template.n - 1].copy_from_slice(x);
        u
    }
}

impl BandedObjective for ChainObjective<'_> {
    fn dim(&self) -> usize {
        self.template.n - 3
    }

    fn bandwidth(&self) -> usize {
        2
    }

    fn value(&self, x: &[f64]) -> f64 {
        let u = self.displacements(x);
        let guard = self.model.barrier_guard * (1.0 / self.template.n as f64);
        if u.windows(2).any(|w| !(w[1] - w[0] > guard)) {
            return f64::INFINITY;
        }
        channels_unchecked(&u, self.model, self.load).total()
    }

    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        chain_gradient(&self.displacements(x), self.model, self.load, g);
    }

    fn hessian(&self, x: &[f64], h: &mut BandedMatrix) {
        chain_hessian(&self.displacements(x), self.model, self.load, h);
    }
}

/// Chain with uniform slope `s_low` in the interior except for bond `k`,
/// which takes up the remaining length.
fn steep_bond_start(template: &ChainState, k: usize, s_low: f64) -> ChainState {
    let n = template.n;
    let lam = template.lambda();
    let mut st = template.clone();
    let interior = st.u[n - 1] - st.u[1];
    let steep = interior - (n - 3) as f64 * lam * s_low;
    for i in 2..n - 1 {
        let bond = i - 1;
        st.u[i] = st.u[i - 1] + if bond == k { steep } else { lam * s_low };
    }
    st
}

/// Maps a chain onto `n` bonds. Slopes above `slope_cap` are cut at the cap
/// and their excess is concentrated in the new bond containing the old bond's
/// midpoint, so a crack stays a single steep bond.
pub fn prolong(prev: &ChainState, n: usize, slope_cap: Option<f64>) -> ChainState {
    let cap = slope_cap.unwrap_or(f64::INFINITY);
    let lam_p = prev.lambda();
    let slopes = prev.slopes();
    // u_new(x) = Σ over old bonds of capped slope × overlap + jumps left of x.
    let eval = |x: f64| -> f64 {
        let mut acc = 0.0;
        for (i, &s) in slopes.iter().enumerate() {
            let a = i as f64 * lam_p;
            if a >= x {
                break;
            }
            let b = a + lam_p;
            acc += s.min(cap) * (b.min(x) - a);
            if s > cap && 0.5 * (a + b) < x {
                acc += (s - cap) * lam_p;
            }
        }
        acc
    };
    let mut st = ChainState::affine(n, prev.ell, prev.theta0, prev.theta1);
    let lam = st.lambda();
    for i in 2..n - 1 {
        st.u[i] = eval(i as f64 * lam);
    }
    st
}

/// Multi-start minimization of H_n over the free coordinates.
///
/// Starts: the given state, the affine chain, a prolonged warm start,
/// steep-bond chains at the requested crack sites and at a seeded random
/// subset of interior bonds, and any extra states. The best result is
/// returned; ties go to the earlier start. Non-convexity means this is a
/// candidate global minimizer only.
pub fn minimize_hn(
    initial: &ChainState,
    model: &InteractionModel,
    load: &ExternalLoad,
    opts: &MinimizeOpts,
) -> Result<MinimizeReport> {
    let n = initial.n;
    if !(initial.ell > 0.0) {
        return Err(Error::NoFeasibleStart(format!("total elongation ell = {} is not positive", initial.ell)));
    }
    initial.check_boundary(1e-12 * (1.0 + initial.ell.abs()))?;
    let template = ChainState::affine(n, initial.ell, initial.theta0, initial.theta1);
    let lam = template.lambda();

    let mut starts: Vec<(String, ChainState)> =
        vec![("initial".into(), initial.clone()), ("affine".into(), template.clone())];
    if let Some(prev) = &opts.warm_start {
        starts.push((format!("prolonged from n={}", prev.n), prolong(prev, n, opts.slope_cap)));
    }
    if n > 3 {
        let avg = (template.u[n - 1] - template.u[1]) / ((n - 2) as f64 * lam);
        let s_low = 0.97 * opts.slope_cap.map_or(avg, |c| c.min(avg));
        let bonds = n - 2;
        let mut picks: Vec<usize> =
            opts.crack_sites.iter().map(|&x| ((x * n as f64).floor() as usize).clamp(1, bonds)).collect();
        if bonds <= opts.restarts {
            picks.extend(1..=bonds);
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            picks.extend(rand::seq::index::sample(&mut rng, bonds, opts.restarts).into_iter().map(|k| k + 1));
        }
        let mut seen = std::collections::BTreeSet::new();
        for k in picks {
            if seen.insert(k) {
                starts.push((format!("steep bond {k}"), steep_bond_start(&template, k, s_low)));
            }
        }
    }
    for (k, s) in opts.extra_starts.iter().enumerate() {
        if s.n == n {
            starts.push((format!("extra {k}"), s.clone()));
        }
    }

    let descent = DescentOpts { tol: opts.tol, max_iter: opts.max_iter, gradient_steps: opts.gradient_steps };
    let runs: Vec<Option<(String, DescentOutcome)>> = starts
        .par_iter()
        .map(|(label, s)| {
            let obj = ChainObjective { template: template.clone(), model, load };
            minimize_banded(&obj, s.free(), &descent).map(|o| (label.clone(), o))
        })
        .collect();
    let restarts_used = starts.len();
    let done: Vec<(String, DescentOutcome)> = runs.into_iter().flatten().collect();
    let (best_label, best) = done
        .iter()
        .fold(None::<&(String, DescentOutcome)>, |acc, r| match acc {
            Some(a) if r.1.value >= a.1.value - 1e-14 * (1.0 + a.1.value.abs()) => Some(a),
            _ => Some(r),
        })
        .ok_or_else(|| Error::NoFeasibleStart(format!("all {restarts_used} starting chains are singular")))?;
    let degenerate = done.iter().any(|(_, o)| {
        let dist = o.x.iter().zip(&best.x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        dist > 1e-6 && (o.value - best.value).abs() < 1e-10
    });
    debug!(
        "n={n}: best start '{best_label}' energy {} after {} iterations ({:?})",
        best.value, best.iterations, best.termination
    );
    let state = ChainState::from_free(n, initial.ell, initial.theta0, initial.theta1, &best.x);
    Ok(MinimizeReport {
        state,
        energy: best.value,
        grad_norm: best.grad_norm,
        iterations: best.iterations,
        restarts_used,
        termination: best.termination,
        start: best_label.clone(),
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::energy_hn;

    #[test]
    fn sub_critical_chain_stays_uniform() {
        let m = InteractionModel::default();
        let ell = 0.9;
        let st = ChainState::affine(64, ell, ell, ell);
        let r = minimize_hn(&st, &m, &ExternalLoad::zero(), &MinimizeOpts::default()).unwrap();
        assert_eq!(r.termination, Termination::Converged, "{r:?}");
        assert!(r.grad_norm <= 1e-9);
        for s in r.state.slopes() {
            assert!((s - ell).abs() < 1e-3, "{s}");
        }
        assert!((energy_hn(&r.state, &m, &ExternalLoad::zero()).unwrap() - r.energy).abs() < 1e-12);
    }

    #[test]
    fn stretched_chain_breaks_one_bond() {
        let m = InteractionModel::default();
        let gamma = 0.9974598856126656;
        let ell = 2.0 * gamma;
        let st = ChainState::affine(128, ell, gamma, gamma);
        let opts = MinimizeOpts { slope_cap: Some(gamma), ..MinimizeOpts::default() };
        let r = minimize_hn(&st, &m, &ExternalLoad::zero(), &opts).unwrap();
        let steep = r.state.slopes().into_iter().filter(|&s| s > gamma + 0.05).count();
        assert_eq!(steep, 1);
        // Every steep-bond start lands on a different but equally good crack.
        assert!(r.degenerate);
    }

    #[test]
    fn prolongation_keeps_cracks_sharp() {
        let gamma = 1.0;
        let coarse = steep_bond_start(&ChainState::affine(16, 2.0, gamma, gamma), 8, gamma);
        let fine = prolong(&coarse, 64, Some(gamma));
        let slopes = fine.slopes();
        assert_eq!(slopes.iter().filter(|&&s| s > 2.0).count(), 1);
        assert!((fine.u[64] - 2.0).abs() < 1e-15);
        assert!(fine.is_feasible());
    }

    #[test]
    fn non_positive_length_has_no_start() {
        let st = ChainState::affine(8, -1.0, 1.0, 1.0);
        let e = minimize_hn(&st, &InteractionModel::default(), &ExternalLoad::zero(), &MinimizeOpts::default());
        assert!(matches!(e, Err(Error::NoFeasibleStart(_))));
    }
}
