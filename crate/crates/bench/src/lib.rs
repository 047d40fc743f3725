//! Shared inputs for the criterion benchmarks in `benches/`.

use chainfrac_core::potentials::{Constants, Expr};
use chainfrac_core::{ChainState, EffectiveProfile, ExternalLoad, InteractionModel, SearchParams};

pub fn lj_profile() -> EffectiveProfile {
    EffectiveProfile::build(&InteractionModel::default(), &SearchParams::default()).expect("default profile builds")
}

/// Linear dead load f(x) = x − ½, whose cumulative force peaks at x = ½.
pub fn linear_dead_load() -> ExternalLoad {
    ExternalLoad::dead_load(Expr::parse("x - 0.5", &Constants::new()).expect("valid expression"))
}

/// A chain at slope γ everywhere except one stretched bond in the middle,
/// which carries the extra length ℓ − γ.
pub fn cracked_state(n: usize, gamma: f64, ell: f64) -> ChainState {
    let lam = 1.0 / n as f64;
    let mut u = Vec::with_capacity(n + 1);
    u.push(0.0);
    for i in 0..n {
        let extra = if i == n / 2 { ell - gamma } else { 0.0 };
        u.push(u[i] + lam * gamma + extra);
    }
    u[n] = ell;
    ChainState::new(n, ell, gamma, gamma, u).expect("boundary data match")
}
