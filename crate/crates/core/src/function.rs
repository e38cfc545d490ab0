//! Catalog of monotone bijections of `[0, 1]` used by the functional calculus.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum MonotoneFunction {
    Identity,
    /// `λ ↦ 1 − λ`, the only decreasing member.
    Complement,
    /// `λ ↦ (1 + a) λ / (1 + a λ)`; `a = 1` gives `2λ / (1 + λ)`.
    Mobius { a: f64 },
    /// Inverse of [`MonotoneFunction::Mobius`]: `μ ↦ μ / (1 + a − a μ)`.
    InverseMobius { a: f64 },
    /// `λ ↦ λ^p`, `p ∈ (0, 1]`.
    Power { p: f64 },
}

impl MonotoneFunction {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Mobius { a } | Self::InverseMobius { a } if !(a >= 0.0 && a.is_finite()) => Err(
                Error::InvalidParameter(format!("mobius parameter a = {a} must be >= 0")),
            ),
            Self::Power { p } if !(p > 0.0 && p <= 1.0) => Err(Error::InvalidParameter(format!(
                "power exponent p = {p} must lie in (0, 1]"
            ))),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Self::Identity => x,
            Self::Complement => 1.0 - x,
            Self::Mobius { a } => (1.0 + a) * x / (1.0 + a * x),
            Self::InverseMobius { a } => x / (1.0 + a - a * x),
            Self::Power { p } => x.powf(p),
        }
    }

    pub fn is_increasing(&self) -> bool {
        !matches!(self, Self::Complement)
    }

    /// The inverse function, when it belongs to the catalog.
    ///
    /// `Power { p }` with `p < 1` has inverse `λ^{1/p}`, which lies outside
    /// the catalog; see [`MonotoneFunction::eval_inverse`].
    pub fn inverse(&self) -> Option<Self> {
        match *self {
            Self::Identity => Some(Self::Identity),
            Self::Complement => Some(Self::Complement),
            Self::Mobius { a } => Some(Self::InverseMobius { a }),
            Self::InverseMobius { a } => Some(Self::Mobius { a }),
            Self::Power { p } if p == 1.0 => Some(Self::Identity),
            Self::Power { .. } => None,
        }
    }

    /// Pointwise inverse, defined for every catalog member.
    pub fn eval_inverse(&self, y: f64) -> f64 {
        match *self {
            Self::Power { p } => y.powf(1.0 / p),
            other => other.inverse().expect("catalog inverse").eval(y),
        }
    }

    /// `max |f(λ) + f(1 − λ) − 1|` over the grid `0, step, 2·step, …, 1`,
    /// together with the maximizing `λ`.
    pub fn symmetry_defect(&self, step: f64) -> (f64, f64) {
        let n = (1.0 / step).round() as usize;
        let mut best = (0.0, 0.0);
        for k in 0..=n {
            let x = k as f64 / n as f64;
            let d = (self.eval(x) + self.eval(1.0 - x) - 1.0).abs();
            if d > best.0 {
                best = (d, x);
            }
        }
        best
    }
}

impl std::fmt::Display for MonotoneFunction {
    fn fmt(&self, out: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Identity => write!(out, "identity"),
            Self::Complement => write!(out, "complement"),
            Self::Mobius { a } => write!(out, "mobius(a={a})"),
            Self::InverseMobius { a } => write!(out, "inverse_mobius(a={a})"),
            Self::Power { p } => write!(out, "power(p={p})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const CATALOG: [MonotoneFunction; 6] = [
        MonotoneFunction::Identity,
        MonotoneFunction::Complement,
        MonotoneFunction::Mobius { a: 1.0 },
        MonotoneFunction::Mobius { a: 3.5 },
        MonotoneFunction::InverseMobius { a: 1.0 },
        MonotoneFunction::Power { p: 0.5 },
    ];

    #[test]
    fn mobius_one_values() {
        let f = MonotoneFunction::Mobius { a: 1.0 };
        assert_eq!(f.eval(0.0), 0.0);
        assert_eq!(f.eval(1.0), 1.0);
        assert_abs_diff_eq!(f.eval(0.5), 2.0 / 3.0, epsilon = 1e-15);
        let g = f.inverse().unwrap();
        assert_abs_diff_eq!(g.eval(2.0 / 3.0), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn endpoints_and_monotonicity() {
        for f in CATALOG {
            let (lo, hi) = if f.is_increasing() { (0.0, 1.0) } else { (1.0, 0.0) };
            assert_abs_diff_eq!(f.eval(0.0), lo, epsilon = 1e-15);
            assert_abs_diff_eq!(f.eval(1.0), hi, epsilon = 1e-15);
            for k in 0..100 {
                let (x, y) = (k as f64 / 100.0, (k + 1) as f64 / 100.0);
                if f.is_increasing() {
                    assert!(f.eval(x) < f.eval(y), "{f:?}");
                } else {
                    assert!(f.eval(x) > f.eval(y), "{f:?}");
                }
            }
        }
    }

    #[test]
    fn inverses_round_trip() {
        for f in CATALOG {
            for k in 0..=20 {
                let x = k as f64 / 20.0;
                assert_abs_diff_eq!(f.eval_inverse(f.eval(x)), x, epsilon = 1e-12);
            }
        }
        assert!(MonotoneFunction::Power { p: 0.5 }.inverse().is_none());
        assert_eq!(
            MonotoneFunction::Power { p: 1.0 }.inverse(),
            Some(MonotoneFunction::Identity)
        );
    }

    #[test]
    fn symmetry_probe() {
        let (d, at) = MonotoneFunction::Mobius { a: 1.0 }.symmetry_defect(1e-3);
        assert_abs_diff_eq!(d, 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(at, 0.5, epsilon = 1e-12);
        assert_eq!(MonotoneFunction::Identity.symmetry_defect(1e-3).0, 0.0);
    }

    #[test]
    fn validation() {
        assert!(MonotoneFunction::Mobius { a: -1.0 }.validate().is_err());
        assert!(MonotoneFunction::Power { p: 0.0 }.validate().is_err());
        assert!(MonotoneFunction::Power { p: 1.5 }.validate().is_err());
        assert!(MonotoneFunction::Power { p: 0.25 }.validate().is_ok());
    }

    #[test]
    fn json_shape() {
        let s = serde_json::to_string(&MonotoneFunction::Mobius { a: 1.0 }).unwrap();
        assert_eq!(s, r#"{"tag":"mobius","a":1.0}"#);
        let f: MonotoneFunction = serde_json::from_str(r#"{"tag":"power","p":0.5}"#).unwrap();
        assert_eq!(f, MonotoneFunction::Power { p: 0.5 });
    }
}
