//! The discrete chain energy
//!
//! ```text
//! H_n(u) = Σ λ J1((u^{i+1} - u^i)/λ) + Σ λ J2((u^{i+2} - u^i)/(2λ)) + Σ λ Φ(iλ, u^i),
//! ```
//!
//! with λ = 1/n, hard-device conditions u^0 = 0, u^n = ℓ and prescribed end
//! slopes u^1 = λθ0, u^{n-1} = ℓ - λθ1. The free coordinates are u^2..u^{n-2}.

mod minimize;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{BandedMatrix, CompensatedSum};
use crate::potentials::{ExternalLoad, InteractionModel, SINGULAR};

pub use minimize::{minimize_hn, prolong, MinimizeOpts, MinimizeReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    pub n: usize,
    pub ell: f64,
    pub theta0: f64,
    pub theta1: f64,
    /// Displacements u^0..u^n.
    pub u: Vec<f64>,
}

impl ChainState {
    pub fn new(n: usize, ell: f64, theta0: f64, theta1: f64, u: Vec<f64>) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidInput(format!(
                "a chain needs n ≥ 3 to carry both end-slope conditions, got {n}"
            )));
        }
        if u.len() != n + 1 {
            return Err(Error::InvalidInput(format!("expected {} displacements, got {}", n + 1, u.len())));
        }
        Ok(Self { n, ell, theta0, theta1, u })
    }

    /// Chain with the prescribed end bonds and a uniform interior.
    pub fn affine(n: usize, ell: f64, theta0: f64, theta1: f64) -> Self {
        let lam = 1.0 / n as f64;
        let a = lam * theta0;
        let b = ell - lam * theta1;
        let mut u = vec![0.0; n + 1];
        for (i, ui) in u.iter_mut().enumerate().take(n).skip(1) {
            *ui = a + (b - a) * (i - 1) as f64 / (n - 2) as f64;
        }
        u[n] = ell;
        Self { n, ell, theta0, theta1, u }
    }

    /// Chain built from the free coordinates u^2..u^{n-2}.
    pub fn from_free(n: usize, ell: f64, theta0: f64, theta1: f64, free: &[f64]) -> Self {
        let mut s = Self::affine(n, ell, theta0, theta1);
        s.set_free(free);
        s
    }

    pub fn lambda(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn free(&self) -> &[f64] {
        &self.u[2..self.n - 1]
    }

    pub fn set_free(&mut self, free: &[f64]) {
        let n = self.n;
        self.u[2..n - 1].copy_from_slice(free);
    }

    /// Nearest-neighbour slopes (u^{i+1} - u^i)/λ, i = 0..n-1.
    pub fn slopes(&self) -> Vec<f64> {
        let lam = self.lambda();
        self.u.windows(2).map(|w| (w[1] - w[0]) / lam).collect()
    }

    /// Next-to-nearest slopes (u^{i+2} - u^i)/(2λ), i = 0..n-2.
    pub fn nnn_slopes(&self) -> Vec<f64> {
        let lam = self.lambda();
        self.u.windows(3).map(|w| (w[2] - w[0]) / (2.0 * lam)).collect()
    }

    pub fn is_feasible(&self) -> bool {
        self.u.windows(2).all(|w| w[1] > w[0])
    }

    pub fn min_slope(&self) -> f64 {
        self.slopes().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn check_boundary(&self, tol: f64) -> Result<()> {
        let lam = self.lambda();
        let n = self.n;
        let checks = [
            ("u^0 = 0", self.u[0], 0.0),
            ("u^n = ell", self.u[n], self.ell),
            ("u^1 = lambda theta0", self.u[1], lam * self.theta0),
            ("u^{n-1} = ell - lambda theta1", self.u[n - 1], self.ell - lam * self.theta1),
        ];
        for (name, got, want) in checks {
            if (got - want).abs() > tol {
                return Err(Error::BoundaryViolation(format!("{name}: got {got}, expected {want}")));
            }
        }
        Ok(())
    }
}

/// The three contributions to H_n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyChannels {
    pub nn: f64,
    pub nnn: f64,
    pub load: f64,
}

impl EnergyChannels {
    pub fn total(&self) -> f64 {
        self.nn + self.nnn + self.load
    }
}

const BOUNDARY_TOL: f64 = 1e-12;

pub fn energy_channels(state: &ChainState, model: &InteractionModel, load: &ExternalLoad) -> Result<EnergyChannels> {
    state.check_boundary(BOUNDARY_TOL * (1.0 + state.ell.abs()))?;
    Ok(channels_unchecked(&state.u, model, load))
}

fn channels_unchecked(u: &[f64], model: &InteractionModel, load: &ExternalLoad) -> EnergyChannels {
    let n = u.len() - 1;
    let lam = 1.0 / n as f64;
    let nn: CompensatedSum = u.windows(2).map(|w| lam * model.j1((w[1] - w[0]) / lam)).collect();
    let nnn: CompensatedSum = u.windows(3).map(|w| lam * model.j2((w[2] - w[0]) / (2.0 * lam))).collect();
    let phi: CompensatedSum = if load.is_zero() {
        CompensatedSum::new()
    } else {
        u.iter().enumerate().map(|(i, &ui)| lam * load.phi(i as f64 * lam, ui)).collect()
    };
    EnergyChannels { nn: nn.value(), nnn: nnn.value(), load: phi.value() }
}

/// H_n(state); `SINGULAR` when a bond is not positively oriented.
pub fn energy_hn(state: &ChainState, model: &InteractionModel, load: &ExternalLoad) -> Result<f64> {
    let c = energy_channels(state, model, load)?;
    if c.nn == SINGULAR || c.nnn == SINGULAR {
        return Ok(SINGULAR);
    }
    Ok(c.total())
}

/// ∂H_n/∂u^i for the free indices i = 2..n-2.
pub fn gradient_hn(state: &ChainState, model: &InteractionModel, load: &ExternalLoad) -> Result<Vec<f64>> {
    let guard = model.barrier_guard;
    if let Some((i, s)) = state.slopes().into_iter().enumerate().find(|&(_, s)| !(s > guard)) {
        return Err(Error::SingularState(format!("bond {i} has slope {s}, not above the barrier guard {guard}")));
    }
    let mut g = vec![0.0; state.n - 3];
    chain_gradient(&state.u, model, load, &mut g);
    Ok(g)
}

pub(crate) fn chain_gradient(u: &[f64], model: &InteractionModel, load: &ExternalLoad, g: &mut [f64]) {
    let n = u.len() - 1;
    let lam = 1.0 / n as f64;
    let d1: Vec<f64> = u.windows(2).map(|w| model.j1_all((w[1] - w[0]) / lam).1).collect();
    let d2: Vec<f64> = u.windows(3).map(|w| model.j2_all((w[2] - w[0]) / (2.0 * lam)).1).collect();
    for i in 2..n - 1 {
        let x = i as f64 * lam;
        g[i - 2] = d1[i - 1] - d1[i] + 0.5 * d2[i - 2] - 0.5 * d2[i] + lam * load.dphi_du(x, u[i]);
    }
}

/// Hessian of H_n in the free coordinates (pentadiagonal).
pub(crate) fn chain_hessian(u: &[f64], model: &InteractionModel, load: &ExternalLoad, h: &mut BandedMatrix) {
    let n = u.len() - 1;
    let lam = 1.0 / n as f64;
    h.clear();
    // Free index of node i, if node i is free.
    let free = |i: usize| (2..=n - 2).contains(&i).then(|| i - 2);
    let mut couple = |a: usize, b: usize, k: f64| {
        if let Some(p) = free(a) {
            h.add(p, p, k);
        }
        if let Some(q) = free(b) {
            h.add(q, q, k);
        }
        if let (Some(p), Some(q)) = (free(a), free(b)) {
            h.add(p.max(q), p.min(q), -k);
        }
    };
    for i in 0..n {
        let k = model.j1_all((u[i + 1] - u[i]) / lam).2 / lam;
        couple(i, i + 1, k);
    }
    for i in 0..n - 1 {
        let k = model.j2_all((u[i + 2] - u[i]) / (2.0 * lam)).2 / (4.0 * lam);
        couple(i, i + 2, k);
    }
    if !load.is_zero() {
        for i in 2..=n - 2 {
            h.add(i - 2, i - 2, lam * load.d2phi_du2(i as f64 * lam, u[i]));
        }
    }
}

/// H_{1,n} = (H_n(state) - inf H)/λ.
pub fn rescaled_energy(state: &ChainState, model: &InteractionModel, load: &ExternalLoad, inf_h: f64) -> Result<f64> {
    let e = energy_hn(state, model, load)?;
    if e == SINGULAR {
        return Ok(SINGULAR);
    }
    Ok((e - inf_h) * state.n as f64)
}
