use log::{debug, warn};
use serde::{Deserialize, Serialize};

use super::cracks::{crack_predictor_f, ArgmaxComponent, CrackParams};
use super::{energy_with_rule, ContinuumProfile, QuadratureParams};
use crate::effective::EffectiveProfile;
use crate::error::{Error, Result};
use crate::numeric::{BandedMatrix, GaussRule};
use crate::optimize::{minimize_banded, BandedObjective, DescentOpts};
use crate::potentials::ExternalLoad;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InfOpts {
    /// Mesh sizes, coarse to fine; each solve warm-starts the next.
    pub resolutions: Vec<usize>,
    /// Allowed gap between the last two extrapolated energies.
    pub tol: f64,
    pub solver_tol: f64,
    pub max_iter: usize,
    pub quad: QuadratureParams,
    pub cracks: CrackParams,
    /// Allow a jump at every mesh node instead of only on the argmax set of F.
    pub free_jumps: bool,
    /// Passes of the (solve → recompute F → update M) loop for loads whose
    /// force depends on u.
    pub max_fixed_point: usize,
}

impl Default for InfOpts {
    fn default() -> Self {
        Self {
            resolutions: vec![128, 512, 2048],
            tol: 1e-5,
            solver_tol: 1e-11,
            max_iter: 400,
            quad: QuadratureParams::default(),
            cracks: CrackParams::default(),
            free_jumps: false,
            max_fixed_point: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfEstimate {
    /// Extrapolated infimum.
    pub value: f64,
    /// Minimizer on the finest mesh.
    pub profile: ContinuumProfile,
    /// (cells, minimal energy) per resolution.
    pub energies: Vec<(usize, f64)>,
    /// Extrapolated values from consecutive resolution pairs.
    pub extrapolated: Vec<f64>,
    /// Argmax set of F used for the final jump dictionary.
    pub jump_sites: Vec<ArgmaxComponent>,
    pub fixed_point_passes: usize,
    /// False when the jump dictionary was still moving after the last pass.
    pub sites_converged: bool,
}

/// Nodal unknowns: the left value L_j at interior nodes and the jump a_j ≥ 0
/// at admissible nodes. The boundary values u(0-) = 0 and u(1+) = ℓ are built
/// in, so compatibility holds for every iterate.
struct NodalProblem<'a> {
    nodes: Vec<f64>,
    var_l: Vec<Option<usize>>,
    var_a: Vec<Option<usize>>,
    bounded: Vec<bool>,
    ell: f64,
    effective: &'a EffectiveProfile,
    load: &'a ExternalLoad,
    rule: GaussRule,
}

struct CellEnds {
    p: f64,
    q: f64,
    /// (variable, coefficient) pairs through which P and Q depend on x.
    dp: [(usize, f64); 2],
    dq: [(usize, f64); 2],
}

const NONE: usize = usize::MAX;

impl<'a> NodalProblem<'a> {
    fn new(
        nodes: Vec<f64>,
        admissible: &[bool],
        ell: f64,
        effective: &'a EffectiveProfile,
        load: &'a ExternalLoad,
        points: usize,
    ) -> Self {
        let m = nodes.len() - 1;
        let mut var_l = vec![None; m + 1];
        let mut var_a = vec![None; m + 1];
        let mut bounded = Vec::new();
        for j in 0..=m {
            if j > 0 && j < m {
                var_l[j] = Some(bounded.len());
                bounded.push(false);
            }
            if admissible[j] {
                var_a[j] = Some(bounded.len());
                bounded.push(true);
            }
        }
        Self { nodes, var_l, var_a, bounded, ell, effective, load, rule: GaussRule::new(points) }
    }

    fn m(&self) -> usize {
        self.nodes.len() - 1
    }

    fn get(x: &[f64], v: Option<usize>) -> f64 {
        v.map_or(0.0, |i| x[i])
    }

    fn ends(&self, x: &[f64], j: usize) -> CellEnds {
        let m = self.m();
        let l = Self::get(x, self.var_l[j]);
        let a = Self::get(x, self.var_a[j]);
        let p = l + a;
        let dp = [(self.var_l[j].unwrap_or(NONE), 1.0), (self.var_a[j].unwrap_or(NONE), 1.0)];
        let (q, dq) = if j + 1 == m {
            (self.ell - Self::get(x, self.var_a[m]), [(self.var_a[m].unwrap_or(NONE), -1.0), (NONE, 0.0)])
        } else {
            (Self::get(x, self.var_l[j + 1]), [(self.var_l[j + 1].unwrap_or(NONE), 1.0), (NONE, 0.0)])
        };
        CellEnds { p, q, dp, dq }
    }

    /// Load integrals ∫Φ_u(1-τ), ∫Φ_u τ, ∫Φ_uu(1-τ)², ∫Φ_uu τ(1-τ), ∫Φ_uu τ².
    fn load_moments(&self, a: f64, b: f64, p: f64, q: f64) -> [f64; 5] {
        let mut out = [0.0; 5];
        if self.load.is_zero() {
            return out;
        }
        for (y, w) in self.rule.points(a, b) {
            let t = (y - a) / (b - a);
            let u = p * (1.0 - t) + q * t;
            let g = self.load.dphi_du(y, u) * w;
            let h = self.load.d2phi_du2(y, u) * w;
            out[0] += g * (1.0 - t);
            out[1] += g * t;
            out[2] += h * (1.0 - t) * (1.0 - t);
            out[3] += h * t * (1.0 - t);
            out[4] += h * t * t;
        }
        out
    }

    fn to_profile(&self, x: &[f64]) -> ContinuumProfile {
        let m = self.m();
        let mut slopes = Vec::with_capacity(m);
        for j in 0..m {
            let e = self.ends(x, j);
            slopes.push((e.q - e.p) / (self.nodes[j + 1] - self.nodes[j]));
        }
        let jumps: Vec<f64> = (0..=m).map(|j| Self::get(x, self.var_a[j])).collect();
        ContinuumProfile::from_node_data(self.nodes.clone(), slopes, jumps, self.ell)
    }

    /// Unknowns that reproduce `profile` as closely as the dictionary allows.
    fn initial_from(&self, profile: &ContinuumProfile) -> Vec<f64> {
        let mut x = vec![0.0; self.bounded.len()];
        let pn = profile.nodes();
        let lv = profile.left_values();
        let rv = profile.right_values();
        let slopes = profile.slopes();
        let mut cell = 0;
        for (j, &xj) in self.nodes.iter().enumerate() {
            while cell + 1 < profile.n_cells() && pn[cell + 1] <= xj {
                cell += 1;
            }
            let k = pn.partition_point(|&t| t < xj);
            let on_node = k < pn.len() && pn[k] == xj;
            let left = if on_node { lv[k] } else { rv[cell] + slopes[cell] * (xj - pn[cell]) };
            let jump = if on_node { profile.node_jumps()[k] } else { 0.0 };
            if let Some(i) = self.var_l[j] {
                x[i] = left;
            }
            // A jump without an admissible home is absorbed by the cell to its
            // right, which steepens accordingly.
            if let Some(i) = self.var_a[j] {
                x[i] = jump.max(0.0);
            }
        }
        x
    }
}

impl BandedObjective for NodalProblem<'_> {
    fn dim(&self) -> usize {
        self.bounded.len()
    }

    fn bandwidth(&self) -> usize {
        2
    }

    fn is_bounded(&self, i: usize) -> bool {
        self.bounded[i]
    }

    fn value(&self, x: &[f64]) -> f64 {
        let m = self.m();
        let mut acc = crate::numeric::CompensatedSum::new();
        for j in 0..m {
            let (a, b) = (self.nodes[j], self.nodes[j + 1]);
            let e = self.ends(x, j);
            let s = (e.q - e.p) / (b - a);
            if !(s > 0.0) {
                return f64::INFINITY;
            }
            acc.add((b - a) * self.effective.envelope(s));
            if !self.load.is_zero() {
                acc.add(self.rule.integrate(a, b, |y| {
                    let t = (y - a) / (b - a);
                    self.load.phi(y, e.p * (1.0 - t) + e.q * t)
                }));
            }
        }
        acc.value()
    }

    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        g.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..self.m() {
            let (a, b) = (self.nodes[j], self.nodes[j + 1]);
            let e = self.ends(x, j);
            let s = (e.q - e.p) / (b - a);
            let fp = self.effective.envelope_prime(s);
            let mo = self.load_moments(a, b, e.p, e.q);
            let gp = -fp + mo[0];
            let gq = fp + mo[1];
            for &(i, c) in &e.dp {
                if i != NONE {
                    g[i] += c * gp;
                }
            }
            for &(i, c) in &e.dq {
                if i != NONE {
                    g[i] += c * gq;
                }
            }
        }
    }

    fn hessian(&self, x: &[f64], h: &mut BandedMatrix) {
        h.clear();
        for j in 0..self.m() {
            let (a, b) = (self.nodes[j], self.nodes[j + 1]);
            let e = self.ends(x, j);
            let w = b - a;
            let s = (e.q - e.p) / w;
            let k = self.effective.envelope_second(s) / w;
            let mo = self.load_moments(a, b, e.p, e.q);
            let hpp = k + mo[2];
            let hpq = -k + mo[3];
            let hqq = k + mo[4];
            let mut put = |d1: &[(usize, f64); 2], d2: &[(usize, f64); 2], v: f64, symmetric: bool| {
                for &(i, ci) in d1 {
                    for &(k2, ck) in d2 {
                        if i == NONE || k2 == NONE {
                            continue;
                        }
                        if symmetric && k2 > i {
                            continue;
                        }
                        // Off-diagonal pairs within the same block are visited once.
                        let scale = if symmetric || i != k2 { 1.0 } else { 2.0 };
                        h.add(i, k2, ci * ck * v * scale);
                    }
                }
            };
            put(&e.dp, &e.dp, hpp, true);
            put(&e.dq, &e.dq, hqq, true);
            put(&e.dp, &e.dq, hpq, false);
        }
    }
}

fn mesh_with_sites(m: usize, sites: &[ArgmaxComponent], free_jumps: bool) -> (Vec<f64>, Vec<bool>) {
    let mut nodes: Vec<f64> = (0..=m).map(|k| k as f64 / m as f64).collect();
    for c in sites {
        for x in [c.start, c.end] {
            let k = nodes.partition_point(|&t| t < x);
            let near = |i: usize| nodes.get(i).is_some_and(|&t| (t - x).abs() < 1e-12);
            if !(near(k) || (k > 0 && near(k - 1))) {
                nodes.insert(k, x);
            }
        }
    }
    let admissible = nodes
        .iter()
        .enumerate()
        .map(|(j, &x)| {
            free_jumps
                || j == 0
                || j + 1 == nodes.len()
                || sites.iter().any(|c| x >= c.start - 1e-12 && x <= c.end + 1e-12)
        })
        .collect();
    (nodes, admissible)
}

/// Slope min(ℓ, γ) everywhere with the excess put into one jump at the node
/// closest to the largest value of F.
fn cold_start(effective: &EffectiveProfile, ell: f64, peak: f64) -> ContinuumProfile {
    let s = ell.min(effective.gamma());
    if s >= ell {
        return ContinuumProfile::affine(ell);
    }
    ContinuumProfile::slope_plus_jump(1, s, peak.clamp(0.0, 1.0), ell).expect("valid cold start")
}

fn same_sites(a: &[ArgmaxComponent], b: &[ArgmaxComponent]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(p, q)| (p.start - q.start).abs() < 1e-9 && (p.end - q.end).abs() < 1e-9)
}

/// Minimizes H over profiles with jumps restricted to the argmax set of F
/// (plus the endpoints) on a sequence of meshes, and extrapolates the energy
/// assuming first-order convergence in the mesh size.
pub fn estimate_inf_h(
    effective: &EffectiveProfile,
    load: &ExternalLoad,
    ell: f64,
    opts: &InfOpts,
) -> Result<InfEstimate> {
    if !(ell > 0.0) {
        return Err(Error::InvalidInput(format!("ell must be positive, got {ell}")));
    }
    if opts.resolutions.is_empty() {
        return Err(Error::InvalidInput("at least one resolution is required".into()));
    }
    let mut current = ContinuumProfile::affine(ell);
    let mut sites = crack_predictor_f(load, &current, &opts.cracks);
    let passes = if load.force_is_dead() { 1 } else { opts.max_fixed_point.max(1) };
    let mut result = None;
    let mut converged = load.force_is_dead();
    let mut used = 0;
    for pass in 0..passes {
        used = pass + 1;
        let peak = sites.x[sites.f.iter().enumerate().fold(0, |k, (i, &v)| if v > sites.f[k] { i } else { k })];
        let mut start = cold_start(effective, ell, peak);
        let mut energies = Vec::new();
        for &m in &opts.resolutions {
            let (nodes, admissible) = mesh_with_sites(m, &sites.argmax, opts.free_jumps);
            let problem = NodalProblem::new(nodes, &admissible, ell, effective, load, opts.quad.points_per_cell);
            let x0 = problem.initial_from(&start);
            let descent = DescentOpts { tol: opts.solver_tol, max_iter: opts.max_iter, gradient_steps: 0 };
            let out = minimize_banded(&problem, &x0, &descent)
                .ok_or_else(|| Error::InfeasibleProfile(format!("no feasible starting profile on {m} cells")))?;
            debug!("inf H on {m} cells: {} (|g| = {:e}, {:?})", out.value, out.grad_norm, out.termination);
            start = problem.to_profile(&out.x);
            energies.push((m, energy_with_rule(&start, effective, load, &problem.rule)));
        }
        current = start;
        let next = crack_predictor_f(load, &current, &opts.cracks);
        let stable = same_sites(&next.argmax, &sites.argmax);
        result = Some((energies, sites.argmax.clone()));
        if load.force_is_dead() {
            break;
        }
        sites = next;
        if stable {
            converged = true;
            break;
        }
    }
    if !converged {
        warn!("jump dictionary still moving after {used} passes");
    }
    let (energies, jump_sites) = result.expect("at least one pass");
    let extrapolated: Vec<f64> = energies
        .windows(2)
        .map(|w| {
            let r = w[1].0 as f64 / w[0].0 as f64;
            (r * w[1].1 - w[0].1) / (r - 1.0)
        })
        .collect();
    let value = *extrapolated.last().unwrap_or(&energies.last().unwrap().1);
    if extrapolated.len() >= 2 {
        let k = extrapolated.len();
        let gap = (extrapolated[k - 1] - extrapolated[k - 2]).abs();
        if gap > opts.tol {
            return Err(Error::NonConvergence(format!(
                "extrapolated energies {} and {} differ by {gap:e} > {}",
                extrapolated[k - 2],
                extrapolated[k - 1],
                opts.tol
            )));
        }
    }
    Ok(InfEstimate {
        value,
        profile: current,
        energies,
        extrapolated,
        jump_sites,
        fixed_point_passes: used,
        sites_converged: converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{Constants, Expr};
    use crate::test_support::lj;

    fn small() -> InfOpts {
        InfOpts { resolutions: vec![32, 128], ..InfOpts::default() }
    }

    #[test]
    fn affine_below_gamma() {
        let e = lj();
        let ell = 0.8 * e.gamma();
        let r = estimate_inf_h(e, &ExternalLoad::zero(), ell, &small()).unwrap();
        assert!((r.value - e.j0(ell)).abs() < 1e-12);
        for s in r.profile.slopes() {
            assert!((s - ell).abs() < 1e-9);
        }
    }

    #[test]
    fn stretched_without_load_costs_j0_gamma() {
        let e = lj();
        let r = estimate_inf_h(e, &ExternalLoad::zero(), 2.0 * e.gamma(), &small()).unwrap();
        assert!((r.value - e.j0_at_gamma()).abs() < 1e-12);
        assert!(r.profile.compatibility_defect().abs() < 1e-12);
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let e = lj();
        let load = ExternalLoad::quadratic_well(Expr::parse("0.9*x + 0.1*x^2", &Constants::new()).unwrap());
        let sites = [ArgmaxComponent { start: 0.5, end: 0.5 }];
        let (nodes, adm) = mesh_with_sites(8, &sites, false);
        let p = NodalProblem::new(nodes, &adm, 1.0, e, &load, 8);
        let base: Vec<f64> = {
            let prof = ContinuumProfile::from_values(
                (0..=8).map(|k| k as f64 / 8.0).collect(),
                &(0..=8).map(|k| 0.9 * k as f64 / 8.0 + 0.01 * (k as f64).sin()).collect::<Vec<_>>(),
                1.0,
            )
            .unwrap();
            let mut x = p.initial_from(&prof);
            for (i, v) in x.iter_mut().enumerate() {
                if p.bounded[i] {
                    *v = 0.01 + 0.001 * i as f64;
                }
            }
            x
        };
        let n = p.dim();
        let mut h = BandedMatrix::zeros(n, 2);
        p.hessian(&base, &mut h);
        let mut g0 = vec![0.0; n];
        p.gradient(&base, &mut g0);
        let step = 1e-6;
        for j in 0..n {
            let mut a = base.clone();
            let mut b = base.clone();
            a[j] += step;
            b[j] -= step;
            let fd_g = (p.value(&a) - p.value(&b)) / (2.0 * step);
            assert!((fd_g - g0[j]).abs() < 1e-6 * (1.0 + g0[j].abs()), "g[{j}]: {} vs {fd_g}", g0[j]);
            let mut ga = vec![0.0; n];
            let mut gb = vec![0.0; n];
            p.gradient(&a, &mut ga);
            p.gradient(&b, &mut gb);
            for i in 0..n {
                let fd = (ga[i] - gb[i]) / (2.0 * step);
                let an = if i.abs_diff(j) <= 2 { h.get(i, j) } else { 0.0 };
                assert!((an - fd).abs() < 1e-4 * (1.0 + an.abs()), "H[{i},{j}]: {an} vs {fd}");
            }
        }
    }
}
