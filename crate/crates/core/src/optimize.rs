//! Feasible descent for smooth objectives with a banded Hessian.
//!
//! The driver runs a number of backtracking gradient steps and then switches
//! to a regularized Newton iteration. Variables flagged as bounded are kept
//! non-negative by projection (Bertsekas' projected Newton). Infeasible
//! points are signalled by the objective returning `+inf`; the line search
//! shrinks the step until it lands inside the feasible region again.

use serde::{Deserialize, Serialize};

use crate::numeric::BandedMatrix;

pub trait BandedObjective {
    fn dim(&self) -> usize;
    fn bandwidth(&self) -> usize;
    /// Objective value, `+inf` outside the feasible region.
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], g: &mut [f64]);
    fn hessian(&self, x: &[f64], h: &mut BandedMatrix);
    /// Whether variable `i` is constrained to be non-negative.
    fn is_bounded(&self, _i: usize) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIterations,
    /// The line search could not decrease the objective any further; the
    /// iterate is stationary up to rounding.
    Stalled,
}

#[derive(Debug, Clone, Copy)]
pub struct DescentOpts {
    pub tol: f64,
    pub max_iter: usize,
    pub gradient_steps: usize,
}

#[derive(Debug, Clone)]
pub struct DescentOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub termination: Termination,
    /// True when the last Newton system needed no diagonal shift, i.e. the
    /// reduced Hessian was positive definite at the final iterate.
    pub positive_definite: bool,
}

fn projected_gradient_norm<P: BandedObjective>(p: &P, x: &[f64], g: &[f64]) -> f64 {
    x.iter()
        .zip(g)
        .enumerate()
        .map(|(i, (&xi, &gi))| if p.is_bounded(i) { (xi - (xi - gi).max(0.0)).abs() } else { gi.abs() })
        .fold(0.0, f64::max)
}

fn project<P: BandedObjective>(p: &P, x: &mut [f64]) {
    for (i, xi) in x.iter_mut().enumerate() {
        if p.is_bounded(i) && *xi < 0.0 {
            *xi = 0.0;
        }
    }
}

/// Minimizes `p` starting from the feasible point `x0`.
///
/// Returns `None` if `x0` is infeasible.
pub fn minimize_banded<P: BandedObjective>(p: &P, x0: &[f64], opts: &DescentOpts) -> Option<DescentOutcome> {
    let n = p.dim();
    let mut x = x0.to_vec();
    project(p, &mut x);
    let mut f = p.value(&x);
    if !f.is_finite() {
        return None;
    }
    if n == 0 {
        return Some(DescentOutcome {
            x,
            value: f,
            grad_norm: 0.0,
            iterations: 0,
            termination: Termination::Converged,
            positive_definite: true,
        });
    }
    let mut g = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut hess = BandedMatrix::zeros(n, p.bandwidth());
    let mut shift = 0.0f64;
    let mut positive_definite = false;
    let mut prev_step: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut termination = Termination::MaxIterations;
    let mut iterations = 0;

    p.gradient(&x, &mut g);
    let mut gnorm = projected_gradient_norm(p, &x, &g);

    for it in 0..opts.max_iter {
        if gnorm <= opts.tol {
            termination = Termination::Converged;
            break;
        }
        iterations = it + 1;
        let eps_active = gnorm.min(1e-10);
        let active: Vec<bool> = (0..n).map(|i| p.is_bounded(i) && x[i] <= eps_active && g[i] > 0.0).collect();

        let newton = it >= opts.gradient_steps;
        let mut have_dir = false;
        if newton {
            p.hessian(&x, &mut hess);
            let scale = (0..n).map(|i| hess.get(i, i).abs()).fold(0.0, f64::max).max(1e-300);
            shift = if shift > 0.0 { (shift * 0.1).max(1e-14 * scale) } else { 0.0 };
            for _ in 0..60 {
                let mut m = hess.clone();
                for i in 0..n {
                    if active[i] {
                        let diag = m.get(i, i).abs().max(scale * 1e-8);
                        let lo = i.saturating_sub(m.bandwidth());
                        let hi = (i + m.bandwidth()).min(n - 1);
                        for j in lo..=hi {
                            if j != i {
                                m.set(i, j, 0.0);
                            }
                        }
                        m.set(i, i, diag);
                    }
                    if shift > 0.0 {
                        m.add(i, i, shift);
                    }
                }
                if let Ok(chol) = m.cholesky() {
                    for i in 0..n {
                        d[i] = -g[i];
                    }
                    chol.solve(&mut d);
                    let slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
                    if slope < 0.0 && d.iter().all(|v| v.is_finite()) {
                        have_dir = true;
                        positive_definite = shift == 0.0;
                        break;
                    }
                }
                shift = if shift == 0.0 { 1e-10 * scale } else { shift * 10.0 };
            }
        }
        if !have_dir {
            positive_definite = false;
            // Barzilai-Borwein scaled gradient step.
            let alpha = match &prev_step {
                Some((s, y)) => {
                    let sy: f64 = s.iter().zip(y).map(|(a, b)| a * b).sum();
                    let yy: f64 = y.iter().map(|v| v * v).sum();
                    if sy > 0.0 && yy > 0.0 {
                        sy / yy
                    } else {
                        1.0 / gnorm.max(1e-300)
                    }
                }
                None => 1e-2 / gnorm.max(1e-300),
            };
            for i in 0..n {
                d[i] = -alpha * g[i];
            }
        }
        for i in 0..n {
            if active[i] {
                d[i] = d[i].min(0.0);
            }
        }

        let mut g_new = vec![0.0; n];
        let mut accepted = false;
        let predicted: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>().abs();
        if have_dir && predicted <= 1e-12 * (1.0 + f.abs()) {
            // Near a minimizer the predicted decrease drops below the rounding
            // level of f and Armijo cannot tell steps apart. Take the full
            // Newton step if it reduces the projected gradient instead.
            for i in 0..n {
                trial[i] = x[i] + d[i];
            }
            project(p, &mut trial);
            if p.value(&trial).is_finite() {
                p.gradient(&trial, &mut g_new);
                accepted = projected_gradient_norm(p, &trial, &g_new) < gnorm;
            }
        }
        let mut step = 1.0;
        for _ in 0..80 {
            if accepted {
                break;
            }
            for i in 0..n {
                trial[i] = x[i] + step * d[i];
            }
            project(p, &mut trial);
            let ft = p.value(&trial);
            if ft.is_finite() {
                let decrease: f64 = trial.iter().zip(&x).zip(&g).map(|((t, xi), gi)| gi * (t - xi)).sum();
                if ft <= f + 1e-4 * decrease && ft <= f {
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            termination = Termination::Stalled;
            break;
        }
        p.gradient(&trial, &mut g_new);
        let s: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        prev_step = Some((s, y));
        let f_old = f;
        std::mem::swap(&mut x, &mut trial);
        f = p.value(&x);
        g = g_new;
        gnorm = projected_gradient_norm(p, &x, &g);
        if f == f_old && x == trial {
            termination = Termination::Stalled;
            break;
        }
    }
    if gnorm <= opts.tol {
        termination = Termination::Converged;
    }
    Some(DescentOutcome { x, value: f, grad_norm: gnorm, iterations, termination, positive_definite })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Chain of springs with a barrier keeping each spring length positive.
    struct Springs {
        n: usize,
        total: f64,
    }

    impl Springs {
        fn lengths(&self, x: &[f64]) -> Vec<f64> {
            let mut pts = vec![0.0];
            pts.extend_from_slice(x);
            pts.push(self.total);
            pts.windows(2).map(|w| w[1] - w[0]).collect()
        }
    }

    impl BandedObjective for Springs {
        fn dim(&self) -> usize {
            self.n
        }
        fn bandwidth(&self) -> usize {
            1
        }
        fn value(&self, x: &[f64]) -> f64 {
            let ls = self.lengths(x);
            if ls.iter().any(|&l| l <= 0.0) {
                return f64::INFINITY;
            }
            ls.iter().map(|l| (l - 1.0).powi(2) - l.ln() * 0.1).sum()
        }
        fn gradient(&self, x: &[f64], g: &mut [f64]) {
            let ls = self.lengths(x);
            let dl: Vec<f64> = ls.iter().map(|l| 2.0 * (l - 1.0) - 0.1 / l).collect();
            for i in 0..self.n {
                g[i] = dl[i] - dl[i + 1];
            }
        }
        fn hessian(&self, x: &[f64], h: &mut BandedMatrix) {
            h.clear();
            let ls = self.lengths(x);
            let k: Vec<f64> = ls.iter().map(|l| 2.0 + 0.1 / (l * l)).collect();
            for i in 0..self.n {
                h.add(i, i, k[i] + k[i + 1]);
                if i > 0 {
                    h.add(i, i - 1, -k[i]);
                }
            }
        }
    }

    #[test]
    fn newton_finds_the_uniform_chain() {
        let p = Springs { n: 9, total: 3.0 };
        let x0: Vec<f64> = (1..=9).map(|i| 3.0 * (i as f64 / 10.0).powi(2)).collect();
        let out = minimize_banded(&p, &x0, &DescentOpts { tol: 1e-12, max_iter: 200, gradient_steps: 3 }).unwrap();
        assert_eq!(out.termination, Termination::Converged);
        for (i, xi) in out.x.iter().enumerate() {
            assert!((xi - 0.3 * (i + 1) as f64).abs() < 1e-10);
        }
    }

    struct BoundedQuadratic;

    impl BandedObjective for BoundedQuadratic {
        fn dim(&self) -> usize {
            2
        }
        fn bandwidth(&self) -> usize {
            1
        }
        fn value(&self, x: &[f64]) -> f64 {
            (x[0] + 1.0).powi(2) + (x[1] - 2.0).powi(2)
        }
        fn gradient(&self, x: &[f64], g: &mut [f64]) {
            g[0] = 2.0 * (x[0] + 1.0);
            g[1] = 2.0 * (x[1] - 2.0);
        }
        fn hessian(&self, _x: &[f64], h: &mut BandedMatrix) {
            h.clear();
            h.add(0, 0, 2.0);
            h.add(1, 1, 2.0);
        }
        fn is_bounded(&self, i: usize) -> bool {
            i == 0
        }
    }

    #[test]
    fn bound_constraint_becomes_active() {
        let out = minimize_banded(
            &BoundedQuadratic,
            &[3.0, 0.0],
            &DescentOpts { tol: 1e-12, max_iter: 100, gradient_steps: 0 },
        )
        .unwrap();
        assert_eq!(out.x[0], 0.0);
        assert!((out.x[1] - 2.0).abs() < 1e-12);
        assert_eq!(out.termination, Termination::Converged);
    }
}
