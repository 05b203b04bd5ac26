//! Scalar functions `R -> [0, ∞]` that can either be described in a JSON
//! configuration or supplied as Rust closures.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::extreal::ExtReal;

pub type Callable = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A real function of one variable.
///
/// The closed-form variants round-trip through JSON. `Custom` wraps an
/// arbitrary closure and is rejected by the serializer.
#[derive(Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarFn {
    /// `c`
    Const(f64),
    /// `coef * (x - shift)^exp`; `0^exp` is `+∞` for negative exponents.
    Power {
        coef: f64,
        exp: f64,
        #[serde(default)]
        shift: f64,
    },
    /// `coef * exp(rate * x)`
    Exp { coef: f64, rate: f64 },
    /// `c0 + c1 x + c2 x^2 + ...`
    Poly(Vec<f64>),
    #[serde(skip)]
    Custom(Callable),
}

impl ScalarFn {
    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        ScalarFn::Custom(Arc::new(f))
    }

    pub fn call(&self, x: f64) -> f64 {
        match self {
            ScalarFn::Const(c) => *c,
            ScalarFn::Power { coef, exp, shift } => {
                let base = x - shift;
                if base == 0.0 && *exp < 0.0 {
                    f64::INFINITY
                } else if *exp == 0.0 {
                    *coef
                } else {
                    coef * base.powf(*exp)
                }
            }
            ScalarFn::Exp { coef, rate } => coef * (rate * x).exp(),
            ScalarFn::Poly(c) => c.iter().rev().fold(0.0, |acc, ci| acc * x + ci),
            ScalarFn::Custom(f) => f(x),
        }
    }

    /// Evaluate as a nonnegative extended real.
    pub fn eval(&self, x: f64) -> ExtReal {
        ExtReal::saturating(self.call(x))
    }

    pub fn constant_value(&self) -> Option<f64> {
        match self {
            ScalarFn::Const(c) => Some(*c),
            ScalarFn::Power { coef, exp, .. } if *exp == 0.0 => Some(*coef),
            ScalarFn::Exp { coef, rate } if *rate == 0.0 => Some(*coef),
            ScalarFn::Poly(c) if c.iter().skip(1).all(|&ci| ci == 0.0) => {
                Some(c.first().copied().unwrap_or(0.0))
            }
            _ => None,
        }
    }
}

impl fmt::Debug for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarFn::Const(c) => write!(f, "Const({c})"),
            ScalarFn::Power { coef, exp, shift } => {
                write!(f, "Power({coef} * (x - {shift})^{exp})")
            }
            ScalarFn::Exp { coef, rate } => write!(f, "Exp({coef} * e^({rate} x))"),
            ScalarFn::Poly(c) => write!(f, "Poly({c:?})"),
            ScalarFn::Custom(_) => f.write_str("Custom(<closure>)"),
        }
    }
}

impl From<f64> for ScalarFn {
    fn from(c: f64) -> Self {
        ScalarFn::Const(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        assert_eq!(ScalarFn::Const(2.5).call(7.0), 2.5);
        let p = ScalarFn::Power { coef: 2.0, exp: 0.5, shift: 1.0 };
        assert!((p.call(5.0) - 4.0).abs() < 1e-15);
        let sing = ScalarFn::Power { coef: 1.0, exp: -0.5, shift: 0.0 };
        assert_eq!(sing.eval(0.0), ExtReal::Infinity);
        assert_eq!(ScalarFn::Poly(vec![1.0, 2.0, 3.0]).call(2.0), 17.0);
        assert!((ScalarFn::Exp { coef: 1.0, rate: 1.0 }.call(1.0) - std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn json_shape() {
        let f: ScalarFn = serde_json::from_str(r#"{"power": {"coef": 1.0, "exp": 2.0}}"#).unwrap();
        assert_eq!(f.call(3.0), 9.0);
        let c: ScalarFn = serde_json::from_str(r#"{"const": 4.0}"#).unwrap();
        assert_eq!(c.constant_value(), Some(4.0));
        assert!(serde_json::to_string(&ScalarFn::custom(|x| x)).is_err());
    }
}
