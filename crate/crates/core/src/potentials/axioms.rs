use std::fmt;

use serde::{Deserialize, Serialize};

use super::{InteractionModel, SINGULAR};
use crate::effective::{compute_j0, EffectiveProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axiom {
    /// Strict convexity of J0 and J1 on (0, γ^c + c).
    H0,
    /// Twice continuous differentiability (analytic derivatives agree with differences).
    H1,
    /// Symmetric splitting of the inf-convolution below γ^c.
    H2,
    /// Finite limits at infinity.
    H3,
    /// Unique minimum γ < γ^c with J0 staying above J0(γ) on [γ^c, ∞).
    H4,
    /// Singular barrier at zero slope.
    H5,
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Axiom::H0 => "H0",
            Axiom::H1 => "H1",
            Axiom::H2 => "H2",
            Axiom::H3 => "H3",
            Axiom::H4 => "H4",
            Axiom::H5 => "H5",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomCheck {
    pub axiom: Axiom,
    pub passed: bool,
    /// Human-readable description of the decisive sample.
    pub witness: String,
    /// Signed distance from failure; positive when passed.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub checks: Vec<AxiomCheck>,
}

impl AxiomReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, axiom: Axiom) -> Option<&AxiomCheck> {
        self.checks.iter().find(|c| c.axiom == axiom)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AxiomCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for AxiomReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let verdict = if c.passed { "pass" } else { "FAIL" };
            writeln!(f, "[{}] {verdict}  margin {:e}  {}", c.axiom, c.margin, c.witness)?;
        }
        Ok(())
    }
}

fn check(axiom: Axiom, margin: f64, witness: String) -> AxiomCheck {
    AxiomCheck { axiom, passed: margin > 0.0, witness, margin }
}

fn convexity(model: &InteractionModel, profile: &EffectiveProfile) -> AxiomCheck {
    let lo = model.barrier_guard;
    let hi = profile.gamma_c() + profile.convexity_constant();
    let n = 2000;
    let mut worst = (f64::INFINITY, lo, "J1");
    for k in 0..n {
        let z = lo + (hi - lo) * k as f64 / n as f64;
        let d1 = model.j1_all(z).2;
        let d0 = profile.j0_second(z);
        if d1 < worst.0 {
            worst = (d1, z, "J1");
        }
        if d0 < worst.0 {
            worst = (d0, z, "J0");
        }
    }
    check(Axiom::H0, worst.0, format!("min {}'' = {:e} at z = {} on [{lo}, {hi})", worst.2, worst.0, worst.1))
}

fn smoothness(model: &InteractionModel) -> AxiomCheck {
    let mut worst = (0.0f64, 0.0);
    let lo = model.barrier_guard.max(0.3);
    for k in 0..64 {
        let z = lo * (10.0f64 / lo).powf(k as f64 / 63.0);
        let h = 1e-5 * z;
        let (_, d1, d2) = model.j1_all(z);
        let fd1 = (model.j1(z + h) - model.j1(z - h)) / (2.0 * h);
        let fd2 = (model.j1_all(z + h).1 - model.j1_all(z - h).1) / (2.0 * h);
        let e = ((d1 - fd1).abs() / (1.0 + d1.abs())).max((d2 - fd2).abs() / (1.0 + d2.abs()));
        if e > worst.0 || e.is_nan() {
            worst = (e, z);
        }
    }
    let margin = if worst.0.is_nan() { -1.0 } else { 1e-6 - worst.0 };
    check(Axiom::H1, margin, format!("largest derivative mismatch {:e} at z = {}", worst.0, worst.1))
}

fn symmetric_splitting(model: &InteractionModel, profile: &EffectiveProfile) -> AxiomCheck {
    if let Some((z, b)) =
        profile.grid().iter().zip(profile.splitter()).find(|(&z, &b)| z < profile.gamma_c() && b != 0.0)
    {
        return check(Axiom::H2, -b, format!("tabulated splitter b = {b} at z = {z} < γ^c"));
    }
    let lo = model.barrier_guard;
    let hi = profile.gamma_c();
    let n = 64;
    let mut worst = (0.0f64, lo);
    for k in 0..n {
        let z = lo + (hi - lo) * (k as f64 + 0.5) / n as f64;
        match compute_j0(model, z, profile.search()) {
            Ok((_, b)) if b > worst.0 => worst = (b, z),
            Ok(_) => {}
            Err(_) => worst = (f64::INFINITY, z),
        }
    }
    let margin = if worst.0 == 0.0 { hi - lo } else { -worst.0 };
    check(Axiom::H2, margin, format!("largest optimal asymmetry {} below γ^c (at z = {})", worst.0, worst.1))
}

fn tails(model: &InteractionModel, profile: &EffectiveProfile) -> AxiomCheck {
    let far = 10.0 * profile.z_max();
    let e1 = (model.j1(far) - model.j1_tail()).abs();
    let e0 = (profile.j0(far) - profile.j0_infinity()).abs();
    let tol = 1e-6 * (1.0 + profile.j0_infinity().abs());
    check(
        Axiom::H3,
        tol - e1.max(e0),
        format!("|J1({far}) - J1(∞)| = {e1:e}, |J0({far}) - J0(∞)| = {e0:e}, J0(∞) = {}", profile.j0_infinity()),
    )
}

fn unique_minimum(profile: &EffectiveProfile) -> AxiomCheck {
    let gap = profile.gamma_c() - profile.gamma();
    let above = profile
        .grid()
        .iter()
        .zip(profile.j0_values())
        .filter(|(&z, _)| z >= profile.gamma_c())
        .map(|(_, &v)| v)
        .fold(profile.j0_infinity(), f64::min);
    let lift = above - profile.j0_at_gamma();
    check(
        Axiom::H4,
        gap.min(lift),
        format!(
            "γ = {} < γ^c = {} (gap {gap:e}); inf over [γ^c, ∞) exceeds J0(γ) by {lift:e}",
            profile.gamma(),
            profile.gamma_c()
        ),
    )
}

fn barrier(model: &InteractionModel) -> AxiomCheck {
    let guard = model.barrier_guard;
    if model.j1(0.0) != SINGULAR || model.j2(-1.0) != SINGULAR {
        return check(Axiom::H5, -1.0, "non-positive slopes do not evaluate to the singular value".into());
    }
    let mut prev = model.j1(guard);
    for k in 1..=40 {
        let z = guard * 0.8f64.powi(k);
        let v = model.j1(z);
        if !(v > prev) {
            return check(Axiom::H5, -1.0, format!("J1 does not increase towards 0: J1({z}) = {v} ≤ {prev}"));
        }
        prev = v;
    }
    let at_guard = model.j1(guard);
    check(Axiom::H5, at_guard - 1e6, format!("J1 at the barrier guard {guard} is {at_guard:e} (needs > 1e6)"))
}

/// Checks the structural assumptions on (J1, J2) that the effective profile
/// relies on. Failures are reported with witnesses rather than raised.
pub fn validate_axioms(model: &InteractionModel, profile: &EffectiveProfile) -> AxiomReport {
    AxiomReport {
        checks: vec![
            convexity(model, profile),
            smoothness(model),
            symmetric_splitting(model, profile),
            tails(model, profile),
            unique_minimum(profile),
            barrier(model),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effective::SearchParams;
    use crate::potentials::Table;

    #[test]
    fn lennard_jones_passes_everything() {
        let m = InteractionModel::default();
        let p = EffectiveProfile::build(&m, &SearchParams::default()).unwrap();
        let r = validate_axioms(&m, &p);
        assert!(r.all_passed(), "{r}");
        assert!(r.get(Axiom::H4).unwrap().margin > 0.0);
    }

    #[test]
    fn convex_quadratic_has_no_barrier() {
        let z: Vec<f64> = (1..=2000).map(|k| 0.01 * k as f64).collect();
        let v: Vec<f64> = z.iter().map(|t| (t - 1.0) * (t - 1.0)).collect();
        let m = InteractionModel::tabulated(Table::new(z, v, 1e6).unwrap(), 0.05);
        let p = EffectiveProfile::build(&m, &SearchParams { grid_points: 512, ..SearchParams::default() }).unwrap();
        let r = validate_axioms(&m, &p);
        assert!(!r.get(Axiom::H5).unwrap().passed);
        assert!(!r.all_passed());
    }
}
