//! The effective potential
//!
//! ```text
//! J0(z) = J2(z) + inf_b ½ (J1(z + b) + J1(z - b)),
//! ```
//!
//! its minimizer γ, the convex envelope J0** (equal to J0 below γ and flat
//! above) and the residual R(z1, z2) measuring how far a bond pair is from
//! realizing J0.
//!
//! Below the convexity threshold γ^c the infimum is attained by the symmetric
//! split b = 0, which the profile verifies on its grid. There J0 is evaluated
//! in closed form as J1 + J2. Above γ^c every query is re-solved with a local
//! golden-section search warm-started from the tabulated splitter, so values
//! are exact to the search tolerance rather than interpolated.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{bisect, golden_section, Pchip};
use crate::potentials::{InteractionModel, SINGULAR};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchParams {
    /// Points of the coarse scan over the asymmetry b.
    pub scan_points: usize,
    /// Bracket length at which golden-section refinement stops.
    pub golden_tol: f64,
    /// Number of log-spaced slopes tabulated by [`EffectiveProfile`].
    pub grid_points: usize,
    /// The grid extends to `z_max_factor` times the first estimate of γ.
    pub z_max_factor: f64,
    /// Relative safety margin below the first inflection point.
    pub convexity_margin: f64,
    /// Bisection tolerance for γ.
    pub gamma_tol: f64,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            scan_points: 2048,
            golden_tol: 1e-10,
            grid_points: 4096,
            z_max_factor: 100.0,
            convexity_margin: 0.02,
            gamma_tol: 1e-10,
        }
    }
}

impl SearchParams {
    pub fn validate(&self) -> Result<()> {
        if self.scan_points < 3 || self.grid_points < 16 {
            return Err(Error::InvalidInput("scan_points must be ≥ 3 and grid_points ≥ 16".into()));
        }
        if !(self.golden_tol > 0.0 && self.gamma_tol > 0.0) {
            return Err(Error::InvalidInput("search tolerances must be positive".into()));
        }
        if !(self.z_max_factor > 1.0) {
            return Err(Error::InvalidInput("z_max_factor must exceed 1".into()));
        }
        if !(0.0..1.0).contains(&self.convexity_margin) {
            return Err(Error::InvalidInput("convexity_margin must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[inline]
fn split_energy(model: &InteractionModel, z: f64, j2: f64, b: f64) -> f64 {
    j2 + 0.5 * (model.j1(z + b) + model.j1(z - b))
}

/// Location and value of the minimum of J1, searched on [lo, hi].
fn j1_minimum(model: &InteractionModel, lo: f64, hi: f64) -> (f64, f64) {
    let n = 4096;
    let ratio = (hi / lo).ln();
    let zs: Vec<f64> = (0..n).map(|k| lo * (ratio * k as f64 / (n - 1) as f64).exp()).collect();
    let k = argmin(zs.iter().map(|&z| model.j1(z)));
    let a = zs[k.saturating_sub(1)];
    let b = zs[(k + 1).min(n - 1)];
    let (z, v) = golden_section(|z| model.j1(z), a, b, 1e-12 * b);
    if v <= model.j1(zs[k]) {
        (z, v)
    } else {
        (zs[k], model.j1(zs[k]))
    }
}

fn argmin(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (k, v) in values.enumerate() {
        if v < best.1 {
            best = (k, v);
        }
    }
    best.0
}

/// Golden-section search around `center`, widening the bracket while the
/// minimum sits on an interior edge.
fn polish(g: &impl Fn(f64) -> f64, center: f64, width: f64, hi: f64, tol: f64) -> (f64, f64) {
    let mut c = center.clamp(0.0, hi);
    let mut w = width;
    let mut best = (c, g(c));
    for _ in 0..12 {
        let lo_b = (c - w).max(0.0);
        let hi_b = (c + w).min(hi);
        let (b, v) = golden_section(g, lo_b, hi_b, tol);
        if v < best.1 {
            best = (b, v);
        }
        let at_lo = lo_b > 0.0 && b - lo_b < 4.0 * tol;
        let at_hi = hi_b < hi && hi_b - b < 4.0 * tol;
        if !(at_lo || at_hi) {
            break;
        }
        c = b;
        w *= 4.0;
    }
    best
}

fn choose_symmetric(g0: f64, best: (f64, f64)) -> (f64, f64) {
    // Rounding in the two J1 terms can make a tiny asymmetry look marginally
    // better than b = 0; such a gain is not a real splitting.
    if g0 <= best.1 + 64.0 * f64::EPSILON * (1.0 + g0.abs()) {
        (g0, 0.0)
    } else {
        (best.1, best.0)
    }
}

fn solve_j0(model: &InteractionModel, z: f64, search: &SearchParams, j1_argmin: f64) -> (f64, f64) {
    let j2 = model.j2(z);
    let g = |b: f64| split_energy(model, z, j2, b);
    let g0 = g(0.0);
    let hi = z - model.barrier_guard;
    if !(hi > 0.0) {
        return (g0, 0.0);
    }
    let n = search.scan_points;
    let step = hi / (n - 1) as f64;
    let k = argmin((0..n).map(|k| g(step * k as f64)));
    let mut best = (step * k as f64, g(step * k as f64));
    let lo_b = step * k.saturating_sub(1) as f64;
    let hi_b = (step * (k + 1) as f64).min(hi);
    let refined = golden_section(g, lo_b, hi_b, search.golden_tol);
    if refined.1 < best.1 {
        best = refined;
    }
    // One arm parked at the minimizer of J1, the other carrying the rest.
    let escape = z - j1_argmin;
    if escape > 0.0 && escape < hi {
        let e = polish(&g, escape, 2.0 * step, hi, search.golden_tol);
        if e.1 < best.1 {
            best = e;
        }
    }
    choose_symmetric(g0, best)
}

/// Solves the inf-convolution at a single slope by a coarse scan over
/// b ∈ [0, z − δ) followed by golden-section refinement. Returns (J0(z), b*)
/// with b* ≥ 0; b* is exactly 0 whenever the symmetric split is optimal to
/// rounding.
pub fn compute_j0(model: &InteractionModel, z: f64, search: &SearchParams) -> Result<(f64, f64)> {
    if !(z > 0.0) {
        return Err(Error::Domain(format!("J0 requested at non-positive slope {z}")));
    }
    let guard = model.barrier_guard;
    let (za, _) = j1_minimum(model, guard, guard * 1e4);
    Ok(solve_j0(model, z, search, za))
}

/// Tabulated effective potential with its characteristic slopes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ProfileDocument", into = "ProfileDocument")]
pub struct EffectiveProfile {
    model: InteractionModel,
    search: SearchParams,
    grid: Vec<f64>,
    j0_values: Vec<f64>,
    splitter: Vec<f64>,
    gamma: f64,
    j0_at_gamma: f64,
    gamma_c: f64,
    convexity_constant: f64,
    inflection_j1: f64,
    inflection_j0: f64,
    j0_infinity: f64,
    j1_argmin: f64,
    j1_min: f64,
    symmetric_below_gamma_c: bool,
    cache: Pchip,
}

pub const PROFILE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ProfileDocument {
    version: u32,
    model: InteractionModel,
    search: SearchParams,
    grid: Vec<f64>,
    j0_values: Vec<f64>,
    splitter: Vec<f64>,
    gamma: f64,
    j0_at_gamma: f64,
    gamma_c: f64,
    convexity_constant: f64,
    inflection_j1: f64,
    inflection_j0: f64,
    j0_infinity: f64,
    j1_argmin: f64,
    j1_min: f64,
}

impl TryFrom<ProfileDocument> for EffectiveProfile {
    type Error = Error;
    fn try_from(d: ProfileDocument) -> Result<Self> {
        if d.version != PROFILE_VERSION {
            return Err(Error::InvalidInput(format!(
                "effective profile version {} is not supported (expected {PROFILE_VERSION})",
                d.version
            )));
        }
        if d.grid.len() != d.j0_values.len() || d.grid.len() != d.splitter.len() {
            return Err(Error::InvalidInput("effective profile arrays differ in length".into()));
        }
        let cache = Pchip::new(d.grid.clone(), d.j0_values.clone())
            .ok_or_else(|| Error::InvalidInput("effective profile grid is not strictly increasing".into()))?;
        let symmetric_below_gamma_c = d.grid.iter().zip(&d.splitter).all(|(&z, &b)| z >= d.gamma_c || b == 0.0);
        Ok(Self {
            model: d.model,
            search: d.search,
            grid: d.grid,
            j0_values: d.j0_values,
            splitter: d.splitter,
            gamma: d.gamma,
            j0_at_gamma: d.j0_at_gamma,
            gamma_c: d.gamma_c,
            convexity_constant: d.convexity_constant,
            inflection_j1: d.inflection_j1,
            inflection_j0: d.inflection_j0,
            j0_infinity: d.j0_infinity,
            j1_argmin: d.j1_argmin,
            j1_min: d.j1_min,
            symmetric_below_gamma_c,
            cache,
        })
    }
}

impl From<EffectiveProfile> for ProfileDocument {
    fn from(p: EffectiveProfile) -> Self {
        ProfileDocument {
            version: PROFILE_VERSION,
            model: p.model,
            search: p.search,
            grid: p.grid,
            j0_values: p.j0_values,
            splitter: p.splitter,
            gamma: p.gamma,
            j0_at_gamma: p.j0_at_gamma,
            gamma_c: p.gamma_c,
            convexity_constant: p.convexity_constant,
            inflection_j1: p.inflection_j1,
            inflection_j0: p.inflection_j0,
            j0_infinity: p.j0_infinity,
            j1_argmin: p.j1_argmin,
            j1_min: p.j1_min,
        }
    }
}

impl PartialEq for EffectiveProfile {
    fn eq(&self, other: &Self) -> bool {
        self.model == other.model
            && self.search == other.search
            && self.grid == other.grid
            && self.j0_values == other.j0_values
            && self.splitter == other.splitter
            && self.gamma == other.gamma
            && self.j0_at_gamma == other.j0_at_gamma
            && self.gamma_c == other.gamma_c
            && self.j0_infinity == other.j0_infinity
    }
}

/// First z on the grid (after a positive sample) where `f` turns non-positive,
/// refined by bisection. `None` if `f` stays positive.
fn first_sign_change(f: impl Fn(f64) -> f64, grid: &[f64]) -> Option<f64> {
    let mut seen_positive = false;
    for w in grid.windows(2) {
        if f(w[0]) > 0.0 {
            seen_positive = true;
        }
        if seen_positive && f(w[0]) > 0.0 && f(w[1]) <= 0.0 {
            return Some(bisect(&f, w[0], w[1], 1e-14 * w[1]));
        }
    }
    None
}

impl EffectiveProfile {
    pub fn build(model: &InteractionModel, search: &SearchParams) -> Result<Self> {
        model.validate()?;
        search.validate()?;
        let lo = model.barrier_guard;
        let (j1_argmin, j1_min) = j1_minimum(model, lo, lo * 1e4);

        // Rough location of the minimum of J0 to size the grid.
        let coarse: Vec<f64> = (0..512).map(|k| lo * (1e3f64.ln() * k as f64 / 511.0).exp()).collect();
        let coarse_vals: Vec<f64> = coarse.par_iter().map(|&z| solve_j0(model, z, search, j1_argmin).0).collect();
        let gamma_est = coarse[argmin(coarse_vals.iter().copied())];
        let z_max = search.z_max_factor * gamma_est;
        if !(z_max > lo) {
            return Err(Error::AxiomViolation(format!(
                "the minimum of J0 ({gamma_est}) lies at the barrier guard {lo}"
            )));
        }

        let m = search.grid_points;
        let ratio = (z_max / lo).ln();
        let mut grid: Vec<f64> = (0..m).map(|k| lo * (ratio * k as f64 / (m - 1) as f64).exp()).collect();
        grid[m - 1] = z_max;
        let solved: Vec<(f64, f64)> = grid.par_iter().map(|&z| solve_j0(model, z, search, j1_argmin)).collect();
        let j0_values: Vec<f64> = solved.iter().map(|s| s.0).collect();
        let splitter: Vec<f64> = solved.iter().map(|s| s.1).collect();

        let d2_j1 = |z: f64| model.j1_all(z).2;
        let d2_sym = |z: f64| model.j1_all(z).2 + model.j2_all(z).2;
        let inflection_j1 = first_sign_change(d2_j1, &grid).unwrap_or(z_max);
        let split_onset = grid.iter().zip(&splitter).find(|(_, &b)| b > 0.0).map_or(z_max, |(&z, _)| z);
        let inflection_j0 = first_sign_change(d2_sym, &grid).unwrap_or(z_max).min(split_onset);
        let inflection = inflection_j1.min(inflection_j0);
        let gamma_c = inflection * (1.0 - search.convexity_margin);
        let convexity_constant = search.convexity_margin * inflection;
        let symmetric_below_gamma_c = grid.iter().zip(&splitter).all(|(&z, &b)| z >= gamma_c || b == 0.0);
        let cache = Pchip::new(grid.clone(), j0_values.clone()).expect("grid is strictly increasing");

        let j0_infinity = model.j2_tail() + 0.5 * (j1_min + model.j1_tail());
        let mut profile = Self {
            model: model.clone(),
            search: *search,
            grid,
            j0_values,
            splitter,
            gamma: f64::NAN,
            j0_at_gamma: f64::NAN,
            gamma_c,
            convexity_constant,
            inflection_j1,
            inflection_j0,
            j0_infinity,
            j1_argmin,
            j1_min,
            symmetric_below_gamma_c,
            cache,
        };
        let (gamma, j0_at_gamma) = profile.locate_minimum()?;
        profile.gamma = gamma;
        profile.j0_at_gamma = j0_at_gamma;
        Ok(profile)
    }

    fn locate_minimum(&self) -> Result<(f64, f64)> {
        let m = self.grid.len();
        let k = argmin(self.j0_values.iter().copied());
        let a = self.grid[k.saturating_sub(1)];
        let b = self.grid[(k + 1).min(m - 1)];
        let da = self.j0_prime(a);
        let db = self.j0_prime(b);
        let gamma = if da < 0.0 && db > 0.0 {
            bisect(|z| self.j0_prime(z), a, b, self.search.gamma_tol)
        } else {
            golden_section(|z| self.j0(z), a, b, self.search.gamma_tol).0
        };
        let value = self.j0(gamma);
        if gamma >= self.gamma_c {
            return Err(Error::AxiomViolation(format!(
                "the minimizer γ = {gamma} of J0 is not below the convexity threshold γ^c = {}",
                self.gamma_c
            )));
        }
        let h = 5e-7;
        let tol = 8.0 * f64::EPSILON * value.abs().max(1.0);
        if self.j0(gamma - h) - value <= tol && self.j0(gamma + h) - value <= tol {
            return Err(Error::AxiomViolation(format!("J0 has a flat valley wider than 1e-6 around {gamma}")));
        }
        let window = (b - a).max(1e-6);
        for (&z, &v) in self.grid.iter().zip(&self.j0_values) {
            if (z - gamma).abs() > 2.0 * window && v <= value + 1e-12 * (1.0 + value.abs()) {
                return Err(Error::AxiomViolation(format!(
                    "J0 is not uniquely minimized: J0({z}) = {v} is within tolerance of J0(γ = {gamma}) = {value}"
                )));
            }
        }
        Ok((gamma, value))
    }

    pub fn model(&self) -> &InteractionModel {
        &self.model
    }

    pub fn search(&self) -> &SearchParams {
        &self.search
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn j0_values(&self) -> &[f64] {
        &self.j0_values
    }

    pub fn splitter(&self) -> &[f64] {
        &self.splitter
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn j0_at_gamma(&self) -> f64 {
        self.j0_at_gamma
    }

    pub fn gamma_c(&self) -> f64 {
        self.gamma_c
    }

    /// The constant c such that J0 and J1 are strictly convex on (0, γ^c + c).
    pub fn convexity_constant(&self) -> f64 {
        self.convexity_constant
    }

    pub fn inflection_j1(&self) -> f64 {
        self.inflection_j1
    }

    pub fn inflection_j0(&self) -> f64 {
        self.inflection_j0
    }

    pub fn j0_infinity(&self) -> f64 {
        self.j0_infinity
    }

    pub fn z_max(&self) -> f64 {
        *self.grid.last().expect("non-empty grid")
    }

    /// Location and value of the minimum of J1.
    pub fn j1_minimum(&self) -> (f64, f64) {
        (self.j1_argmin, self.j1_min)
    }

    /// Whether every tabulated splitter below γ^c is exactly zero.
    pub fn symmetric_below_gamma_c(&self) -> bool {
        self.symmetric_below_gamma_c
    }

    #[inline]
    fn on_symmetric_branch(&self, z: f64) -> bool {
        self.symmetric_below_gamma_c && z < self.gamma_c
    }

    /// J0(z) together with the optimal asymmetry b*.
    pub fn j0_with_splitter(&self, z: f64) -> (f64, f64) {
        if !(z > 0.0) {
            return (SINGULAR, 0.0);
        }
        if self.on_symmetric_branch(z) {
            return (self.model.j1(z) + self.model.j2(z), 0.0);
        }
        let model = &self.model;
        let j2 = model.j2(z);
        let g = |b: f64| split_energy(model, z, j2, b);
        let g0 = g(0.0);
        let hi = z - model.barrier_guard;
        if !(hi > 0.0) {
            return (g0, 0.0);
        }
        let tol = self.search.golden_tol;
        let mut best = (0.0, g0);
        let mut consider = |c: f64, w: f64| {
            let r = polish(&g, c, w, hi, tol);
            if r.1 < best.1 {
                best = r;
            }
        };
        let m = self.grid.len();
        if z <= self.grid[0] {
            consider(0.0, 0.5 * hi);
        } else if z >= self.grid[m - 1] {
            let w = 1e-3 * z;
            consider(z - self.j1_argmin, w);
            consider(self.splitter[m - 1] + (z - self.grid[m - 1]), w);
        } else {
            let k = self.grid.partition_point(|&t| t <= z) - 1;
            let (za, zb) = (self.grid[k], self.grid[k + 1]);
            let (ba, bb) = (self.splitter[k], self.splitter[k + 1]);
            let w = 2.0 * (zb - za) + 1e-9;
            if ba > 0.0 {
                consider(ba + (z - za), w);
            }
            if bb > 0.0 {
                consider(bb - (zb - z), w);
            }
            if ba == 0.0 || bb == 0.0 {
                consider(0.0, w.max(bb.max(ba)));
            }
        }
        choose_symmetric(g0, best)
    }

    /// J0(z); singular for z ≤ 0.
    pub fn j0(&self, z: f64) -> f64 {
        self.j0_with_splitter(z).0
    }

    /// Optimal asymmetry at z.
    pub fn splitter_at(&self, z: f64) -> f64 {
        self.j0_with_splitter(z).1
    }

    /// Interpolated J0 from the tabulated grid (fast, approximate above γ^c).
    pub fn j0_cached(&self, z: f64) -> f64 {
        if !(z > 0.0) {
            SINGULAR
        } else if self.on_symmetric_branch(z) {
            self.model.j1(z) + self.model.j2(z)
        } else if z > self.z_max() {
            self.j0(z)
        } else {
            self.cache.eval(z)
        }
    }

    /// Derivative of J0 via the envelope theorem.
    pub fn j0_prime(&self, z: f64) -> f64 {
        if !(z > 0.0) {
            return f64::NAN;
        }
        let (_, b) = self.j0_with_splitter(z);
        if b == 0.0 {
            return self.model.j1_all(z).1 + self.model.j2_all(z).1;
        }
        self.model.j2_all(z).1 + 0.5 * (self.model.j1_all(z + b).1 + self.model.j1_all(z - b).1)
    }

    pub fn j0_second(&self, z: f64) -> f64 {
        if !(z > 0.0) {
            return f64::NAN;
        }
        if self.on_symmetric_branch(z) || self.splitter_at(z) == 0.0 {
            return self.model.j1_all(z).2 + self.model.j2_all(z).2;
        }
        let h = 1e-6 * z;
        (self.j0_prime(z + h) - self.j0_prime(z - h)) / (2.0 * h)
    }

    /// J0**(z), singular for z ≤ 0.
    #[inline]
    pub fn envelope(&self, z: f64) -> f64 {
        if !(z > 0.0) {
            SINGULAR
        } else if z < self.gamma {
            self.j0(z)
        } else {
            self.j0_at_gamma
        }
    }

    #[inline]
    pub fn envelope_prime(&self, z: f64) -> f64 {
        if z < self.gamma {
            self.j0_prime(z)
        } else {
            0.0
        }
    }

    /// Second derivative of J0**, taking the left branch at z = γ.
    #[inline]
    pub fn envelope_second(&self, z: f64) -> f64 {
        if z <= self.gamma {
            self.j0_second(z)
        } else {
            0.0
        }
    }

    /// R(z1, z2) = ½(J1(z1) + J1(z2)) + J2(m) − J0(m), m = (z1 + z2)/2.
    pub fn residual(&self, z1: f64, z2: f64) -> f64 {
        residual_with(&self.model, self, z1, z2)
    }
}

fn residual_with(model: &InteractionModel, profile: &EffectiveProfile, z1: f64, z2: f64) -> f64 {
    let m = 0.5 * (z1 + z2);
    let a = model.j1(z1);
    let b = model.j1(z2);
    let c = model.j2(m);
    if !(a.is_finite() && b.is_finite() && c.is_finite()) {
        return SINGULAR;
    }
    0.5 * (a + b) + c - profile.j0(m)
}

/// Builds a profile and returns (γ, J0(γ)).
pub fn minimize_j0(model: &InteractionModel, search: &SearchParams) -> Result<(f64, f64)> {
    let p = EffectiveProfile::build(model, search)?;
    Ok((p.gamma, p.j0_at_gamma))
}

pub fn j0_star_star(profile: &EffectiveProfile, z: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::Domain(format!("J0** requested at non-positive slope {z}")));
    }
    Ok(profile.envelope(z))
}

pub fn residual_r(model: &InteractionModel, profile: &EffectiveProfile, z1: f64, z2: f64) -> f64 {
    residual_with(model, profile, z1, z2)
}

/// Sampling of the open square (0, γ^c)² used to certify R ≥ c |z1 − z2|².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquareSample {
    pub points_per_axis: usize,
    /// Distance kept from the axes.
    pub margin: f64,
}

impl Default for SquareSample {
    fn default() -> Self {
        Self { points_per_axis: 400, margin: 1e-3 }
    }
}

/// Largest c with R(z1, z2) ≥ c (z1 − z2)² over the sampled off-diagonal
/// pairs of (0, γ^c)².
pub fn certify_quadratic_lower_bound(
    model: &InteractionModel,
    profile: &EffectiveProfile,
    sample: &SquareSample,
) -> Result<f64> {
    let n = sample.points_per_axis;
    if n < 2 {
        return Err(Error::InvalidInput(
            "a sample with fewer than two points per axis contains only the diagonal".into(),
        ));
    }
    let lo = sample.margin;
    let hi = profile.gamma_c();
    if !(lo < hi) {
        return Err(Error::InvalidInput(format!("sampling margin {lo} leaves an empty square below γ^c = {hi}")));
    }
    // Open at γ^c: the last point sits one step below it.
    let zs: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let pairs: Vec<(f64, f64)> =
        zs.iter().enumerate().flat_map(|(i, &a)| zs[i + 1..].iter().map(move |&b| (a, b))).collect();
    certify_on_pairs(model, profile, &pairs)
}

/// Same as [`certify_quadratic_lower_bound`] on explicit pairs; diagonal
/// pairs are skipped and a sample without off-diagonal pairs is rejected.
pub fn certify_on_pairs(model: &InteractionModel, profile: &EffectiveProfile, pairs: &[(f64, f64)]) -> Result<f64> {
    let ratios: Vec<f64> = pairs
        .par_iter()
        .filter(|(a, b)| a != b)
        .map(|&(a, b)| residual_with(model, profile, a, b) / ((a - b) * (a - b)))
        .collect();
    if ratios.is_empty() {
        return Err(Error::InvalidInput("the sample contains only diagonal pairs z1 = z2".into()));
    }
    let c = ratios.into_iter().fold(f64::INFINITY, f64::min);
    if !(c > 0.0) {
        return Err(Error::CertificateFailure(format!("empirical constant c = {c} is not positive")));
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::PairPotential;
    use std::sync::OnceLock;

    fn lj() -> &'static EffectiveProfile {
        static P: OnceLock<EffectiveProfile> = OnceLock::new();
        P.get_or_init(|| EffectiveProfile::build(&InteractionModel::default(), &SearchParams::default()).unwrap())
    }

    #[test]
    fn gamma_matches_closed_form_stationarity() {
        // For LJ, J1'(z) + 2 J1'(2z) = 0 reduces to z^6 = 2 c1 (1 + 2^-12) / (c2 (1 + 2^-6)).
        let exact = ((1.0 + 2f64.powi(-12)) / (1.0 + 2f64.powi(-6))).powf(1.0 / 6.0);
        let p = lj();
        assert!((p.gamma() - exact).abs() < 1e-10, "{} vs {exact}", p.gamma());
        assert!(p.j0_at_gamma() <= -1.031005859375);
    }

    #[test]
    fn symmetric_split_below_threshold() {
        let m = InteractionModel::default();
        let s = SearchParams::default();
        let (v, b) = compute_j0(&m, 0.9, &s).unwrap();
        assert_eq!(b, 0.0);
        assert_eq!(v, m.j1(0.9) + m.j2(0.9));
        assert_eq!(compute_j0(&m, 1.0, &s).unwrap().0, -1.031005859375);
        assert!(compute_j0(&m, 0.0, &s).is_err());
    }

    #[test]
    fn escape_asymptote() {
        let m = InteractionModel::default();
        let (v, b) = compute_j0(&m, 50.0, &SearchParams::default()).unwrap();
        assert!((v + 0.5).abs() < 1e-3);
        assert!((50.0 - b - 1.0).abs() < 0.01);
        assert!((lj().j0(50.0) - v).abs() < 1e-12);
    }

    #[test]
    fn threshold_lies_between_gamma_and_inflections() {
        let p = lj();
        let infl1 = (13.0f64 / 7.0).powf(1.0 / 6.0);
        assert!((p.inflection_j1() - infl1).abs() < 1e-10);
        let infl0 = (13.0 / 7.0 * (1.0 + 2f64.powi(-12)) / (1.0 + 2f64.powi(-6))).powf(1.0 / 6.0);
        assert!((p.inflection_j0() - infl0).abs() < 1e-10);
        assert!((p.gamma_c() - 0.98 * infl0).abs() < 1e-10);
        assert!(p.gamma() < p.gamma_c());
        assert!(p.symmetric_below_gamma_c());
    }

    #[test]
    fn exact_evaluation_agrees_with_table_on_grid() {
        let p = lj();
        for k in (0..p.grid().len()).step_by(37) {
            let z = p.grid()[k];
            let v = p.j0(z);
            assert!(v <= p.j0_values()[k] + 1e-13, "z = {z}");
            assert!((v - p.j0_values()[k]).abs() < 1e-10, "z = {z}");
        }
    }

    #[test]
    fn envelope_theorem_derivative_matches_differences() {
        let p = lj();
        for &z in &[0.7, 1.0, 1.2, 1.7, 3.0, 20.0] {
            let h = 1e-6;
            let fd = (p.j0(z + h) - p.j0(z - h)) / (2.0 * h);
            assert!((p.j0_prime(z) - fd).abs() < 1e-6 * (1.0 + fd.abs()), "z = {z}");
        }
    }

    #[test]
    fn vanishing_nnn_channel_puts_gamma_at_one() {
        let m = InteractionModel::default().with_next(PairPotential::LennardJones { c1: 0.0, c2: 0.0 });
        let (g, v) = minimize_j0(&m, &SearchParams::default()).unwrap();
        assert!((g - 1.0).abs() < 1e-9);
        assert!((v + 1.0).abs() < 1e-15);
    }

    #[test]
    fn envelope_examples() {
        let p = lj();
        let g = p.gamma();
        assert_eq!(j0_star_star(p, g).unwrap(), p.j0_at_gamma());
        assert_eq!(j0_star_star(p, 10.0 * g).unwrap(), p.j0_at_gamma());
        assert!(j0_star_star(p, 0.5 * g).unwrap() > p.j0_at_gamma());
        assert!(j0_star_star(p, -1.0).is_err());
    }

    #[test]
    fn residual_examples() {
        let p = lj();
        let m = p.model().clone();
        assert!(residual_r(&m, p, 0.9, 0.9).abs() <= 1e-9);
        let c = certify_quadratic_lower_bound(&m, p, &SquareSample { points_per_axis: 120, margin: 1e-3 }).unwrap();
        assert!(c > 0.0);
        assert!(residual_r(&m, p, 0.8, 1.0) >= c * 0.04);
        assert!(residual_r(&m, p, 0.7, 0.9) / 0.04 >= c);
        assert!(certify_on_pairs(&m, p, &[(0.5, 0.5), (0.9, 0.9)]).is_err());
        assert!(certify_quadratic_lower_bound(&m, p, &SquareSample { points_per_axis: 1, margin: 1e-3 }).is_err());
    }

    #[test]
    fn profile_json_round_trip() {
        let p = lj();
        let s = serde_json::to_string(p).unwrap();
        let back: EffectiveProfile = serde_json::from_str(&s).unwrap();
        assert_eq!(&back, p);
        assert_eq!(back.j0(1.3), p.j0(1.3));
    }
}
