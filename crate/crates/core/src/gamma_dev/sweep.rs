use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::bounds::{first_order_lower_bound, splitting_identity_check};
use super::competitors::build_competitors;
use super::diagnostics::{compactness_diagnostics, jump_detect_sqrt_n};
use crate::continuum::{estimate_inf_h, InfEstimate, InfOpts, Jump, QuadratureParams};
use crate::discrete::{minimize_hn, ChainState, MinimizeOpts};
use crate::effective::EffectiveProfile;
use crate::error::Result;
use crate::optimize::Termination;
use crate::potentials::{ExternalLoad, InteractionModel};

/// Stretched-regime reporting. The stretched measure of a chain is the part
/// of [0, 1] covered by `windows` equal windows on which the average slope
/// exceeds γ + `margin`. A sweep is flagged degenerate when H_{1,n} is
/// positive and grows at least like n^`growth_exponent` (least-squares fit
/// in log-log over the completed n, at least three of them).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DegenerateCriterion {
    pub windows: usize,
    pub margin: f64,
    pub growth_exponent: f64,
}

impl Default for DegenerateCriterion {
    fn default() -> Self {
        Self { windows: 16, margin: 0.02, growth_exponent: 0.15 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub model: InteractionModel,
    pub load: ExternalLoad,
    pub ell: f64,
    pub theta0: f64,
    pub theta1: f64,
    pub n_list: Vec<usize>,
    pub minimize: MinimizeOpts,
    pub inf: InfOpts,
    pub eps_list: Vec<f64>,
    pub quad: QuadratureParams,
    pub degenerate: DegenerateCriterion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub energy: f64,
    pub h1n: f64,
    pub count_stretched: Vec<usize>,
    pub oscillation: Vec<usize>,
    pub excess_sq: f64,
    pub min_slope: f64,
    pub identity_violation: f64,
    pub lb_lhs: f64,
    pub lb_rhs: f64,
    pub lb_slack: f64,
    /// max |v(iλ) − u^i|/λ over both competitors.
    pub closeness: f64,
    /// Fraction of [0, 1] where the window-averaged slope exceeds γ + margin.
    pub stretched_measure: f64,
    pub sqrt_n_jumps: Vec<Jump>,
    pub grad_norm: f64,
    pub termination: Termination,
    pub start: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFailure {
    pub n: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub gamma: f64,
    pub gamma_c: f64,
    pub ell: f64,
    pub eps: Vec<f64>,
    /// Extrapolated inf H, absent for an empty sweep.
    pub inf_h: Option<f64>,
    pub n_completed: Vec<usize>,
    pub failures: Vec<SweepFailure>,
    pub max_h1n: Option<f64>,
    pub min_h1n: Option<f64>,
    pub max_count_stretched: Vec<usize>,
    pub max_oscillation: Vec<usize>,
    pub max_excess_sq: Option<f64>,
    pub min_min_slope: Option<f64>,
    pub max_identity_violation: Option<f64>,
    pub min_lb_slack: Option<f64>,
    /// Smallest C with slack ≥ −C at every n (zero if the slack never drops
    /// below zero).
    pub measured_c: Option<f64>,
    pub max_closeness: Option<f64>,
    pub min_stretched_measure: Option<f64>,
    /// Length of {ū' > γ + margin} for the continuum minimizer ū.
    pub limit_stretched_measure: Option<f64>,
    /// Fitted exponent p in H_{1,n} ~ n^p.
    pub h1n_growth_exponent: Option<f64>,
    /// H_{1,n} diverges: no finite first-order limit along this sweep.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResults {
    pub rows: Vec<SweepRow>,
    pub summary: SweepSummary,
    /// Discrete minimizers, one per completed row.
    pub states: Vec<ChainState>,
    pub inf: Option<InfEstimate>,
}

impl SweepResults {
    pub fn csv_header(&self) -> Vec<String> {
        let mut h = vec!["n".to_string(), "energy".into(), "h1n".into()];
        h.extend(self.summary.eps.iter().map(|e| format!("count_eps_{e}")));
        h.extend(["excess_sq", "min_slope", "identity_violation", "lb_slack"].map(String::from));
        h
    }

    pub fn csv_records(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                let mut v = vec![r.n.to_string(), r.energy.to_string(), r.h1n.to_string()];
                v.extend(r.count_stretched.iter().map(ToString::to_string));
                v.extend([r.excess_sq, r.min_slope, r.identity_violation, r.lb_slack].map(|x| x.to_string()));
                v
            })
            .collect()
    }
}

/// Fraction of [0, 1] covered by windows whose average slope exceeds
/// γ + margin.
pub fn stretched_measure(state: &ChainState, gamma: f64, crit: &DegenerateCriterion) -> f64 {
    let k = crit.windows.max(1);
    let n = state.n;
    let at = |x: f64| {
        let t = x * n as f64;
        let i = (t.floor() as usize).min(n - 1);
        state.u[i] + (t - i as f64) * (state.u[i + 1] - state.u[i])
    };
    let stretched = (0..k)
        .filter(|&j| {
            let (a, b) = (j as f64 / k as f64, (j + 1) as f64 / k as f64);
            (at(b) - at(a)) / (b - a) > gamma + crit.margin
        })
        .count();
    stretched as f64 / k as f64
}

/// Starts that follow the continuum minimizer ū with slopes capped at γ and
/// its excess length (∫(ū' − γ)_+ plus its jumps) quantized into `k` equal
/// cracks, placed where the cumulative excess crosses (j + ½)/k of the total.
fn quantized_starts(inf: &InfEstimate, template: &ChainState, gamma: f64, ks: &[usize]) -> Vec<ChainState> {
    let p = &inf.profile;
    let n = template.n;
    let nodes = p.nodes();
    let (mut base, mut excess) = (vec![0.0; n + 1], vec![0.0; n + 1]);
    let (mut b, mut e) = (0.0, 0.0);
    let mut cell = 0;
    let mut x_prev = 0.0;
    e += p.node_jumps()[0];
    for i in 1..=n {
        let x = i as f64 / n as f64;
        // Integrate over the profile cells between x_prev and x.
        let mut lo = x_prev;
        while lo < x {
            while cell + 1 < p.n_cells() && nodes[cell + 1] <= lo {
                cell += 1;
                e += p.node_jumps()[cell];
            }
            let hi = nodes[cell + 1].min(x);
            let s = p.slopes()[cell];
            b += s.min(gamma) * (hi - lo);
            e += (s - gamma).max(0.0) * (hi - lo);
            lo = hi;
        }
        base[i] = b;
        excess[i] = e;
        x_prev = x;
    }
    let total = e + p.node_jumps()[nodes.len() - 1];
    if !(total > 0.0) {
        return Vec::new();
    }
    ks.iter()
        .filter(|&&k| k >= 1 && 8 * k <= n)
        .map(|&k| {
            let mut st = template.clone();
            for i in 2..n - 1 {
                let passed = (0..k).filter(|&j| (j as f64 + 0.5) * total / k as f64 <= excess[i]).count();
                st.u[i] = base[i] + total * passed as f64 / k as f64;
            }
            st
        })
        .collect()
}

const CRACK_COUNTS: [usize; 12] = [1, 2, 3, 4, 5, 6, 7, 8, 12, 16, 24, 32];

fn run_one(
    cfg: &SweepConfig,
    effective: &EffectiveProfile,
    inf: &InfEstimate,
    n: usize,
    prev: Option<&ChainState>,
) -> Result<(SweepRow, ChainState)> {
    let gamma = effective.gamma();
    let template = ChainState::affine(n, cfg.ell, cfg.theta0, cfg.theta1);
    let mut opts = cfg.minimize.clone();
    opts.slope_cap = Some(opts.slope_cap.unwrap_or(gamma));
    opts.warm_start = prev.cloned();
    opts.crack_sites.extend(inf.jump_sites.iter().filter(|c| c.is_point()).map(|c| c.start));
    opts.crack_sites.extend(inf.profile.jumps().iter().filter(|j| j.x > 0.0 && j.x < 1.0).map(|j| j.x));
    opts.extra_starts.extend(quantized_starts(inf, &template, gamma, &CRACK_COUNTS));
    let report = minimize_hn(&template, &cfg.model, &cfg.load, &opts)?;
    let state = report.state;
    let lam = state.lambda();
    let h1n = (report.energy - inf.value) / lam;
    let pair = build_competitors(&state, gamma)?;
    let identity = splitting_identity_check(&state, &cfg.model, effective)?;
    let bound = first_order_lower_bound(&state, &cfg.model, effective, &cfg.load, &pair, &cfg.quad)?;
    let diag = compactness_diagnostics(&state, gamma, effective.gamma_c(), &cfg.eps_list);
    let jumps = jump_detect_sqrt_n(&state);
    let row = SweepRow {
        n,
        energy: report.energy,
        h1n,
        count_stretched: diag.count_stretched,
        oscillation: diag.oscillation,
        excess_sq: diag.excess_sq,
        min_slope: diag.min_slope,
        identity_violation: identity.violation,
        lb_lhs: bound.lhs,
        lb_rhs: bound.rhs,
        lb_slack: bound.slack,
        closeness: pair.closeness,
        stretched_measure: stretched_measure(&state, gamma, &cfg.degenerate),
        sqrt_n_jumps: jumps.jumps,
        grad_norm: report.grad_norm,
        termination: report.termination,
        start: report.start,
    };
    Ok((row, state))
}

/// Least-squares slope of log H_{1,n} against log n; None unless every value
/// is positive and there are at least three.
fn growth_exponent(rows: &[SweepRow]) -> Option<f64> {
    if rows.len() < 3 || rows.iter().any(|r| !(r.h1n > 0.0)) {
        return None;
    }
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| ((r.n as f64).ln(), r.h1n.ln())).collect();
    let m = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / m, pts.iter().map(|p| p.1).sum::<f64>() / m);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn max_by(rows: &[SweepRow], f: impl Fn(&SweepRow) -> f64) -> Option<f64> {
    rows.iter().map(f).reduce(f64::max)
}

fn min_by(rows: &[SweepRow], f: impl Fn(&SweepRow) -> f64) -> Option<f64> {
    rows.iter().map(f).reduce(f64::min)
}

/// Minimizes H_n for each n in turn (each warm-started from the previous
/// minimizer) and records the first-order diagnostics. A failure at one n is
/// recorded in the summary and the sweep goes on.
pub fn run_sweep(cfg: &SweepConfig, effective: &EffectiveProfile) -> Result<SweepResults> {
    let gamma = effective.gamma();
    let inf = if cfg.n_list.is_empty() { None } else { Some(estimate_inf_h(effective, &cfg.load, cfg.ell, &cfg.inf)?) };
    let mut rows = Vec::new();
    let mut states: Vec<ChainState> = Vec::new();
    let mut failures = Vec::new();
    if let Some(inf) = &inf {
        info!("inf H = {}", inf.value);
        for &n in &cfg.n_list {
            match run_one(cfg, effective, inf, n, states.last()) {
                Ok((row, state)) => {
                    info!("n = {n}: H_n = {}, H_1n = {}", row.energy, row.h1n);
                    rows.push(row);
                    states.push(state);
                }
                Err(e) => {
                    warn!("n = {n} failed: {e}");
                    failures.push(SweepFailure { n, error: e.to_string() });
                }
            }
        }
    }
    let per_eps = |f: fn(&SweepRow) -> &Vec<usize>| -> Vec<usize> {
        (0..cfg.eps_list.len()).map(|k| rows.iter().map(|r| f(r)[k]).max().unwrap_or(0)).collect()
    };
    let min_lb_slack = min_by(&rows, |r| r.lb_slack);
    let min_stretched_measure = min_by(&rows, |r| r.stretched_measure);
    let h1n_growth_exponent = growth_exponent(&rows);
    let limit_stretched_measure = inf.as_ref().map(|i| {
        i.profile
            .widths()
            .zip(i.profile.slopes())
            .filter(|(_, &s)| s > gamma + cfg.degenerate.margin)
            .fold(0.0, |acc, (w, _)| acc + w)
    });
    let summary = SweepSummary {
        gamma,
        gamma_c: effective.gamma_c(),
        ell: cfg.ell,
        eps: cfg.eps_list.clone(),
        inf_h: inf.as_ref().map(|i| i.value),
        n_completed: rows.iter().map(|r| r.n).collect(),
        failures,
        max_h1n: max_by(&rows, |r| r.h1n),
        min_h1n: min_by(&rows, |r| r.h1n),
        max_count_stretched: per_eps(|r| &r.count_stretched),
        max_oscillation: per_eps(|r| &r.oscillation),
        max_excess_sq: max_by(&rows, |r| r.excess_sq),
        min_min_slope: min_by(&rows, |r| r.min_slope),
        max_identity_violation: max_by(&rows, |r| r.identity_violation),
        min_lb_slack,
        measured_c: min_lb_slack.map(|s| (-s).max(0.0)),
        max_closeness: max_by(&rows, |r| r.closeness),
        min_stretched_measure,
        limit_stretched_measure,
        h1n_growth_exponent,
        degenerate: h1n_growth_exponent.is_some_and(|p| p >= cfg.degenerate.growth_exponent),
    };
    Ok(SweepResults { rows, summary, states, inf })
}
