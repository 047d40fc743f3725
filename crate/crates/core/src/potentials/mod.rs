//! Pair potentials for nearest (J1) and next-to-nearest (J2) neighbour bonds,
//! external load densities Φ(x, w), and the structural checks on them.

mod axioms;
pub mod expr;
mod load;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::Pchip;

pub use axioms::{validate_axioms, Axiom, AxiomCheck, AxiomReport};
pub use expr::{Constants, Expr};
pub use load::{ExternalLoad, LoadKind};

/// The value used for configurations outside the admissible region.
pub const SINGULAR: f64 = f64::INFINITY;

/// Sampled pair potential, interpolated by a monotone cubic.
///
/// Below the first sample the interpolant is continued linearly; above the
/// last sample the potential takes the constant `tail` value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TableData", into = "TableData")]
pub struct Table {
    interp: Pchip,
    tail: f64,
}

#[derive(Serialize, Deserialize)]
struct TableData {
    z: Vec<f64>,
    values: Vec<f64>,
    tail: f64,
}

impl TryFrom<TableData> for Table {
    type Error = Error;
    fn try_from(d: TableData) -> Result<Self> {
        Table::new(d.z, d.values, d.tail)
    }
}

impl From<Table> for TableData {
    fn from(t: Table) -> Self {
        TableData { z: t.interp.knots().to_vec(), values: t.interp.values().to_vec(), tail: t.tail }
    }
}

impl Table {
    pub fn new(z: Vec<f64>, values: Vec<f64>, tail: f64) -> Result<Self> {
        if z.first().is_some_and(|&z0| z0 <= 0.0) {
            return Err(Error::InvalidInput("tabulated potential needs positive abscissae".into()));
        }
        let interp = Pchip::new(z, values).ok_or_else(|| {
            Error::InvalidInput("tabulated potential needs at least two strictly increasing samples".into())
        })?;
        Ok(Self { interp, tail })
    }

    fn z_max(&self) -> f64 {
        *self.interp.knots().last().expect("table is non-empty")
    }

    fn eval_all(&self, z: f64) -> (f64, f64, f64) {
        if z > self.z_max() {
            (self.tail, 0.0, 0.0)
        } else {
            self.interp.eval_all(z)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PairPotential {
    LennardJones { c1: f64, c2: f64 },
    Tabulated(Table),
}

impl PairPotential {
    /// Value, first and second derivative; the value is `SINGULAR` for
    /// z ≤ 0 and the derivatives are NaN there.
    #[inline]
    pub fn eval_all(&self, z: f64) -> (f64, f64, f64) {
        if !(z > 0.0) {
            return (SINGULAR, f64::NAN, f64::NAN);
        }
        match self {
            PairPotential::LennardJones { c1, c2 } => {
                let inv = 1.0 / z;
                let i2 = inv * inv;
                let i6 = i2 * i2 * i2;
                let i12 = i6 * i6;
                (c1 * i12 - c2 * i6, (6.0 * c2 * i6 - 12.0 * c1 * i12) * inv, (156.0 * c1 * i12 - 42.0 * c2 * i6) * i2)
            }
            PairPotential::Tabulated(t) => t.eval_all(z),
        }
    }

    #[inline]
    pub fn value(&self, z: f64) -> f64 {
        if !(z > 0.0) {
            return SINGULAR;
        }
        match self {
            PairPotential::LennardJones { c1, c2 } => {
                let inv = 1.0 / z;
                let i2 = inv * inv;
                let i6 = i2 * i2 * i2;
                c1 * i6 * i6 - c2 * i6
            }
            PairPotential::Tabulated(t) => t.eval_all(z).0,
        }
    }

    /// Limit as z → ∞.
    pub fn tail(&self) -> f64 {
        match self {
            PairPotential::LennardJones { .. } => 0.0,
            PairPotential::Tabulated(t) => t.tail,
        }
    }

    fn validate(&self) -> Result<()> {
        if let PairPotential::LennardJones { c1, c2 } = self {
            if !(c1.is_finite() && c2.is_finite() && *c1 >= 0.0 && *c2 >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "Lennard-Jones coefficients must be finite and non-negative, got c1={c1}, c2={c2}"
                )));
            }
        }
        Ok(())
    }
}

/// Nearest-neighbour potential J1 and next-to-nearest potential J2.
///
/// J2(z) is the `next` potential evaluated at 2z. When `next` is absent it is
/// J1 itself, so J2(z) = J1(2z) with the same arithmetic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionModel {
    pub kind: PairPotential,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub next: Option<PairPotential>,
    pub barrier_guard: f64,
}

pub const DEFAULT_BARRIER_GUARD: f64 = 0.25;

impl Default for InteractionModel {
    fn default() -> Self {
        Self::lennard_jones(1.0, 2.0)
    }
}

impl InteractionModel {
    pub fn lennard_jones(c1: f64, c2: f64) -> Self {
        Self { kind: PairPotential::LennardJones { c1, c2 }, next: None, barrier_guard: DEFAULT_BARRIER_GUARD }
    }

    pub fn tabulated(table: Table, barrier_guard: f64) -> Self {
        Self { kind: PairPotential::Tabulated(table), next: None, barrier_guard }
    }

    /// Replaces the potential used for next-to-nearest bonds.
    pub fn with_next(mut self, next: PairPotential) -> Self {
        self.next = Some(next);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.kind.validate()?;
        if let Some(n) = &self.next {
            n.validate()?;
        }
        if !(self.barrier_guard > 0.0 && self.barrier_guard.is_finite()) {
            return Err(Error::InvalidInput(format!("barrier_guard must be positive, got {}", self.barrier_guard)));
        }
        Ok(())
    }

    fn next_potential(&self) -> &PairPotential {
        self.next.as_ref().unwrap_or(&self.kind)
    }

    #[inline]
    pub fn j1(&self, z: f64) -> f64 {
        self.kind.value(z)
    }

    #[inline]
    pub fn j2(&self, z: f64) -> f64 {
        self.next_potential().value(2.0 * z)
    }

    #[inline]
    pub fn j1_all(&self, z: f64) -> (f64, f64, f64) {
        self.kind.eval_all(z)
    }

    #[inline]
    pub fn j2_all(&self, z: f64) -> (f64, f64, f64) {
        let (v, d1, d2) = self.next_potential().eval_all(2.0 * z);
        (v, 2.0 * d1, 4.0 * d2)
    }

    pub fn j1_tail(&self) -> f64 {
        self.kind.tail()
    }

    pub fn j2_tail(&self) -> f64 {
        self.next_potential().tail()
    }
}

pub fn eval_j1(model: &InteractionModel, z: f64) -> f64 {
    model.j1(z)
}

pub fn eval_j2(model: &InteractionModel, z: f64) -> f64 {
    model.j2(z)
}

/// Derivatives of J1 and J2 of the requested order at the same slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivatives {
    pub j1: f64,
    pub j2: f64,
}

pub fn eval_derivatives(model: &InteractionModel, z: f64, order: u8) -> Result<Derivatives> {
    if !(z > 0.0) {
        return Err(Error::Domain(format!("derivatives requested at non-positive slope {z}")));
    }
    let a = model.j1_all(z);
    let b = model.j2_all(z);
    match order {
        1 => Ok(Derivatives { j1: a.1, j2: b.1 }),
        2 => Ok(Derivatives { j1: a.2, j2: b.2 }),
        _ => Err(Error::InvalidInput(format!("derivative order must be 1 or 2, got {order}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lennard_jones_reference_values() {
        let m = InteractionModel::lennard_jones(1.0, 2.0);
        assert_eq!(eval_j1(&m, 1.0), -1.0);
        assert_eq!(eval_j1(&m, 0.5), 3968.0);
        assert_eq!(eval_j2(&m, 0.5), -1.0);
        assert_eq!(eval_j2(&m, 1.0), -0.031005859375);
        assert_eq!(eval_j1(&m, -0.5), SINGULAR);
        assert_eq!(eval_j2(&m, 0.0), SINGULAR);
    }

    #[test]
    fn derivative_reference_points() {
        let m = InteractionModel::default();
        assert_eq!(eval_derivatives(&m, 1.0, 1).unwrap().j1, 0.0);
        let infl = (13.0f64 / 7.0).powf(1.0 / 6.0);
        assert!(eval_derivatives(&m, infl, 2).unwrap().j1.abs() < 1e-12);
        let d = eval_derivatives(&m, 2.0, 1).unwrap().j1;
        assert!((d - (-12.0 * 2f64.powi(-13) + 12.0 * 2f64.powi(-7))).abs() < 1e-16);
        assert!(d > 0.0);
        assert!(eval_derivatives(&m, 0.0, 1).is_err());
        assert!(eval_derivatives(&m, 1.0, 3).is_err());
    }

    #[test]
    fn table_extrapolates_with_tail() {
        let z: Vec<f64> = (1..=30).map(|k| 0.1 * k as f64).collect();
        let v: Vec<f64> = z.iter().map(|t| (t - 1.0) * (t - 1.0)).collect();
        let t = Table::new(z, v, 4.0).unwrap();
        let m = InteractionModel::tabulated(t, 0.05);
        assert!((m.j1(1.0)).abs() < 1e-12);
        assert_eq!(m.j1(10.0), 4.0);
        assert!(m.j1(0.05).is_finite());
        assert_eq!(m.j1(0.0), SINGULAR);
        let json = serde_json::to_string(&m).unwrap();
        let back: InteractionModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
    }
}
