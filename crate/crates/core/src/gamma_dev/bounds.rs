use serde::{Deserialize, Serialize};

use super::competitors::{build_even_odd, CompetitorPair};
use crate::continuum::{energy_h, ContinuumProfile, QuadratureParams};
use crate::discrete::{energy_channels, energy_hn, ChainState};
use crate::effective::EffectiveProfile;
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::potentials::{ExternalLoad, InteractionModel, SINGULAR};

/// ∫ g(v') dx for a piecewise-affine profile.
fn integrate_slopes(v: &ContinuumProfile, g: impl Fn(f64) -> f64) -> f64 {
    v.widths().zip(v.slopes()).map(|(w, &s)| w * g(s)).collect::<CompensatedSum>().value()
}

/// λ Σ_{i=0}^{n-2} R(s_{i+1}, s_i).
fn residual_sum(state: &ChainState, profile: &EffectiveProfile) -> f64 {
    let lam = state.lambda();
    state.slopes().windows(2).map(|w| lam * profile.residual(w[1], w[0])).collect::<CompensatedSum>().value()
}

/// Both sides of the even/odd splitting of the interaction energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplittingIdentity {
    /// NN + NNN part of H_n.
    pub lhs: f64,
    /// ½∫J0(ṽ1') + ½∫J0(ṽ2') + λΣR + end-bond correction.
    pub rhs: f64,
    pub violation: f64,
}

/// Compares the interaction part of H_n with the energy of the even and odd
/// interpolants plus the residual sum and the end-bond correction
/// ½λ[J1(s_0) + J1(s_{n-1}) − J0(s_0) − J0(s_{n-1})]. The two are equal up to
/// rounding for every n ≥ 4.
pub fn splitting_identity_check(
    state: &ChainState,
    model: &InteractionModel,
    profile: &EffectiveProfile,
) -> Result<SplittingIdentity> {
    if state.n < 4 {
        return Err(Error::InvalidInput(format!("the splitting needs n ≥ 4, got {}", state.n)));
    }
    let c = energy_channels(state, model, &ExternalLoad::zero())?;
    let lhs = c.nn + c.nnn;
    let (v1, v2) = build_even_odd(state);
    let s = state.slopes();
    let (first, last) = (s[0], s[state.n - 1]);
    let correction = 0.5 * state.lambda() * (model.j1(first) + model.j1(last) - profile.j0(first) - profile.j0(last));
    let rhs: CompensatedSum = [
        0.5 * integrate_slopes(&v1, |z| profile.j0(z)),
        0.5 * integrate_slopes(&v2, |z| profile.j0(z)),
        residual_sum(state, profile),
        correction,
    ]
    .into_iter()
    .collect();
    let rhs = rhs.value();
    let violation = if !(lhs.is_finite() && rhs.is_finite()) { f64::INFINITY } else { (lhs - rhs).abs() };
    Ok(SplittingIdentity { lhs, rhs, violation })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBound {
    /// [H_n(u) − ½H(v1) − ½H(v2)]/λ.
    pub lhs: f64,
    /// (1/2λ)[∫(J0 − J0**)(ṽ1') + ∫(J0 − J0**)(ṽ2')] + Σ R.
    pub rhs: f64,
    /// lhs − rhs; bounded below by a constant independent of n.
    pub slack: f64,
}

pub fn first_order_lower_bound(
    state: &ChainState,
    model: &InteractionModel,
    profile: &EffectiveProfile,
    load: &ExternalLoad,
    competitors: &CompetitorPair,
    quad: &QuadratureParams,
) -> Result<LowerBound> {
    let lam = state.lambda();
    let hn = energy_hn(state, model, load)?;
    if hn == SINGULAR {
        return Err(Error::SingularState("H_n is singular at this state".into()));
    }
    let h1 = energy_h(&competitors.v1, profile, load, quad)?;
    let h2 = energy_h(&competitors.v2, profile, load, quad)?;
    let lhs = (hn - 0.5 * h1 - 0.5 * h2) / lam;
    let gap = |z: f64| profile.j0(z) - profile.envelope(z);
    let envelope_gap = integrate_slopes(&competitors.v1_tilde, gap) + integrate_slopes(&competitors.v2_tilde, gap);
    let rhs = envelope_gap / (2.0 * lam) + residual_sum(state, profile) / lam;
    Ok(LowerBound { lhs, rhs, slack: lhs - rhs })
}
