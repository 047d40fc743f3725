use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use super::expr::Expr;
use crate::numeric::GaussRule;

/// External load families. Expressions are in `x` (and `w` for live loads).
#[derive(Debug, Clone, PartialEq)]
pub enum LoadKind {
    Zero,
    /// Φ(x, w) = -f(x) w.
    DeadLoad {
        f: Expr,
    },
    /// Φ(x, w) = -∫_0^w f(x, s) ds.
    LiveLoad {
        f: Expr,
        df_dw: Expr,
    },
    /// Φ(x, w) = (w - w̃(x))².
    QuadraticWell {
        w_tilde: Expr,
    },
    /// Φ(x, w) = (w - w̃(x))₊⁴ for sign = +1, (w - w̃(x))₋⁴ for sign = -1.
    OneSidedQuartic {
        w_tilde: Expr,
        sign: i8,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExternalLoad {
    kind: LoadKind,
}

impl Default for ExternalLoad {
    fn default() -> Self {
        Self::zero()
    }
}

impl ExternalLoad {
    pub fn zero() -> Self {
        Self { kind: LoadKind::Zero }
    }

    pub fn dead_load(f: Expr) -> Self {
        Self { kind: LoadKind::DeadLoad { f } }
    }

    pub fn live_load(f: Expr) -> Self {
        let df_dw = f.derivative_w();
        Self { kind: LoadKind::LiveLoad { f, df_dw } }
    }

    pub fn quadratic_well(w_tilde: Expr) -> Self {
        Self { kind: LoadKind::QuadraticWell { w_tilde } }
    }

    /// `sign` is taken as +1 for any positive value and -1 otherwise.
    pub fn one_sided_quartic(w_tilde: Expr, sign: i8) -> Self {
        Self { kind: LoadKind::OneSidedQuartic { w_tilde, sign: if sign > 0 { 1 } else { -1 } } }
    }

    pub fn kind(&self) -> &LoadKind {
        &self.kind
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, LoadKind::Zero)
    }

    /// True when ∂Φ/∂u does not depend on the displacement.
    pub fn force_is_dead(&self) -> bool {
        match &self.kind {
            LoadKind::Zero | LoadKind::DeadLoad { .. } => true,
            LoadKind::LiveLoad { f, .. } => !f.uses_w(),
            LoadKind::QuadraticWell { .. } | LoadKind::OneSidedQuartic { .. } => false,
        }
    }

    pub fn phi(&self, x: f64, w: f64) -> f64 {
        match &self.kind {
            LoadKind::Zero => 0.0,
            LoadKind::DeadLoad { f } => -f.eval(x, 0.0) * w,
            LoadKind::LiveLoad { f, .. } => {
                if w == 0.0 {
                    return 0.0;
                }
                // Composite 16-point rule with panels no longer than 1/4.
                let panels = ((w.abs() / 0.25).ceil() as usize).max(1);
                let h = w / panels as f64;
                let rule = live_rule();
                let mut acc = 0.0;
                for p in 0..panels {
                    let a = p as f64 * h;
                    acc += rule.integrate(a, a + h, |s| f.eval(x, s));
                }
                -acc
            }
            LoadKind::QuadraticWell { w_tilde } => {
                let d = w - w_tilde.eval(x, 0.0);
                d * d
            }
            LoadKind::OneSidedQuartic { w_tilde, sign } => {
                let d = (f64::from(*sign) * (w - w_tilde.eval(x, 0.0))).max(0.0);
                d * d * d * d
            }
        }
    }

    pub fn dphi_du(&self, x: f64, w: f64) -> f64 {
        match &self.kind {
            LoadKind::Zero => 0.0,
            LoadKind::DeadLoad { f } => -f.eval(x, 0.0),
            LoadKind::LiveLoad { f, .. } => -f.eval(x, w),
            LoadKind::QuadraticWell { w_tilde } => 2.0 * (w - w_tilde.eval(x, 0.0)),
            LoadKind::OneSidedQuartic { w_tilde, sign } => {
                let s = f64::from(*sign);
                let d = (s * (w - w_tilde.eval(x, 0.0))).max(0.0);
                4.0 * s * d * d * d
            }
        }
    }

    pub fn d2phi_du2(&self, x: f64, w: f64) -> f64 {
        match &self.kind {
            LoadKind::Zero | LoadKind::DeadLoad { .. } => 0.0,
            LoadKind::LiveLoad { df_dw, .. } => -df_dw.eval(x, w),
            LoadKind::QuadraticWell { .. } => 2.0,
            LoadKind::OneSidedQuartic { w_tilde, sign } => {
                let d = (f64::from(*sign) * (w - w_tilde.eval(x, 0.0))).max(0.0);
                12.0 * d * d
            }
        }
    }

    /// Short label of the load family, as used in configuration files.
    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            LoadKind::Zero => "zero",
            LoadKind::DeadLoad { .. } => "dead_load",
            LoadKind::LiveLoad { .. } => "live_load",
            LoadKind::QuadraticWell { .. } => "quadratic_well",
            LoadKind::OneSidedQuartic { .. } => "one_sided_quartic",
        }
    }
}

fn live_rule() -> &'static GaussRule {
    static RULE: std::sync::OnceLock<GaussRule> = std::sync::OnceLock::new();
    RULE.get_or_init(|| GaussRule::new(16))
}

impl Serialize for ExternalLoad {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(None)?;
        m.serialize_entry("kind", self.kind_name())?;
        match &self.kind {
            LoadKind::Zero => {}
            LoadKind::DeadLoad { f } | LoadKind::LiveLoad { f, .. } => m.serialize_entry("f", f.source())?,
            LoadKind::QuadraticWell { w_tilde } => m.serialize_entry("w_tilde", w_tilde.source())?,
            LoadKind::OneSidedQuartic { w_tilde, sign } => {
                m.serialize_entry("w_tilde", w_tilde.source())?;
                m.serialize_entry("sign", sign)?;
            }
        }
        m.end()
    }
}
