//! Ordered integration domains and the measures living on them.

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{invalid, Error, Result};
use crate::function::ScalarFn;

/// A closed, non-degenerate interval `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval1D {
    pub lo: f64,
    pub hi: f64,
}

impl Interval1D {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        let iv = Interval1D { lo, hi };
        iv.validate()?;
        Ok(iv)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(invalid(format!(
                "interval [{}, {}] must be finite and non-degenerate",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }
}

/// An ordered measurable space.
///
/// * `Interval`: the ordinary order on a real interval.
/// * `ProductBox`: the componentwise order on a product of intervals.
/// * `VoidSet`: every pair of points is related, so every lower set is the
///   whole space. `support` is only needed when a continuous measure lives
///   on the set; atoms of a discrete measure need no support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DomainSpec {
    Interval { lo: f64, hi: f64 },
    #[serde(rename = "box")]
    ProductBox { factors: Vec<Interval1D> },
    #[serde(rename = "void")]
    VoidSet {
        #[serde(default)]
        label: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        support: Option<Interval1D>,
    },
}

/// A measurable subset produced by [`lower_set`] or [`DomainSpec::order_interval`].
#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    /// `[a, b]`, possibly a single point.
    Segment(f64, f64),
    /// `[a_1, b_1] x ... x [a_m, b_m]`
    Cells(Vec<(f64, f64)>),
    /// The whole space (void order).
    Whole,
}

impl DomainSpec {
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Interval1D::new(lo, hi)?;
        Ok(DomainSpec::Interval { lo, hi })
    }

    pub fn product_box(factors: Vec<Interval1D>) -> Result<Self> {
        let d = DomainSpec::ProductBox { factors };
        d.validate()?;
        Ok(d)
    }

    pub fn void(label: impl Into<String>) -> Self {
        DomainSpec::VoidSet { label: label.into(), support: None }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DomainSpec::Interval { lo, hi } => Interval1D { lo: *lo, hi: *hi }.validate(),
            DomainSpec::ProductBox { factors } => {
                if factors.is_empty() {
                    return Err(invalid("a product box needs at least one factor"));
                }
                factors.iter().try_for_each(Interval1D::validate)
            }
            DomainSpec::VoidSet { support, .. } => {
                support.as_ref().map_or(Ok(()), Interval1D::validate)
            }
        }
    }

    /// Number of ordered coordinates (0 for the void order).
    pub fn ordered_dim(&self) -> usize {
        match self {
            DomainSpec::Interval { .. } => 1,
            DomainSpec::ProductBox { factors } => factors.len(),
            DomainSpec::VoidSet { .. } => 0,
        }
    }

    pub fn as_interval(&self) -> Option<Interval1D> {
        match self {
            DomainSpec::Interval { lo, hi } => Some(Interval1D { lo: *lo, hi: *hi }),
            _ => None,
        }
    }

    /// The interval carrying a continuous measure, if any.
    pub fn support_interval(&self) -> Option<Interval1D> {
        match self {
            DomainSpec::Interval { lo, hi } => Some(Interval1D { lo: *lo, hi: *hi }),
            DomainSpec::VoidSet { support, .. } => *support,
            DomainSpec::ProductBox { .. } => None,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            DomainSpec::Interval { lo, hi } => x.len() == 1 && *lo <= x[0] && x[0] <= *hi,
            DomainSpec::ProductBox { factors } => {
                // an extra trailing coordinate indexes an unordered tail factor
                (x.len() == factors.len() || x.len() == factors.len() + 1)
                    && factors.iter().zip(x).all(|(f, xi)| f.contains(*xi))
            }
            DomainSpec::VoidSet { support, .. } => match support {
                Some(iv) if x.len() == 1 => iv.contains(x[0]),
                _ => true,
            },
        }
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::OutsideDomain { point: x.to_vec() })
        }
    }

    /// The preorder of the domain.
    pub fn leq(&self, s: &[f64], t: &[f64]) -> bool {
        match self {
            DomainSpec::Interval { .. } => s[0] <= t[0],
            DomainSpec::ProductBox { factors } => {
                (0..factors.len()).all(|i| s[i] <= t[i])
            }
            DomainSpec::VoidSet { .. } => true,
        }
    }

    /// `[s, t] = { r : s <= r <= t }`.
    pub fn order_interval(&self, s: &[f64], t: &[f64]) -> Result<Region> {
        self.check(s)?;
        self.check(t)?;
        if !self.leq(s, t) {
            return Err(Error::NotOrdered { s: s.to_vec(), t: t.to_vec() });
        }
        Ok(match self {
            DomainSpec::Interval { .. } => Region::Segment(s[0], t[0]),
            DomainSpec::ProductBox { factors } => {
                Region::Cells((0..factors.len()).map(|i| (s[i], t[i])).collect())
            }
            DomainSpec::VoidSet { .. } => Region::Whole,
        })
    }
}

/// The lower set `I(t) = { s : s <= t }`.
pub fn lower_set(domain: &DomainSpec, t: &[f64]) -> Result<Region> {
    domain.check(t)?;
    Ok(match domain {
        DomainSpec::Interval { lo, .. } => Region::Segment(*lo, t[0]),
        DomainSpec::ProductBox { factors } => {
            Region::Cells(factors.iter().zip(t).map(|(f, ti)| (f.lo, *ti)).collect())
        }
        DomainSpec::VoidSet { .. } => Region::Whole,
    })
}

/// A point mass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    #[serde(deserialize_with = "point_or_scalar")]
    pub point: Vec<f64>,
    pub mass: f64,
}

impl Atom {
    pub fn new(x: f64, mass: f64) -> Self {
        Atom { point: vec![x], mass }
    }
}

fn point_or_scalar<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum P {
        Scalar(f64),
        Vector(Vec<f64>),
    }
    Ok(match P::deserialize(d)? {
        P::Scalar(x) => vec![x],
        P::Vector(v) => v,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MeasureSpec {
    Lebesgue,
    #[serde(rename = "weighted")]
    WeightedLebesgue { weight: ScalarFn },
    Discrete { atoms: Vec<Atom> },
    Product { factors: Vec<MeasureSpec> },
}

impl MeasureSpec {
    pub fn discrete(atoms: impl IntoIterator<Item = (f64, f64)>) -> Self {
        MeasureSpec::Discrete {
            atoms: atoms.into_iter().map(|(x, m)| Atom::new(x, m)).collect(),
        }
    }

    pub fn is_atomless(&self) -> bool {
        match self {
            MeasureSpec::Lebesgue | MeasureSpec::WeightedLebesgue { .. } => true,
            MeasureSpec::Discrete { atoms } => atoms.iter().all(|a| a.mass == 0.0),
            MeasureSpec::Product { factors } => factors.iter().any(MeasureSpec::is_atomless),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            MeasureSpec::Lebesgue | MeasureSpec::WeightedLebesgue { .. } => Ok(()),
            MeasureSpec::Discrete { atoms } => {
                if let Some(a) = atoms.iter().find(|a| !(a.mass >= 0.0 && a.mass.is_finite())) {
                    return Err(invalid(format!("atom mass must be finite and >= 0, got {}", a.mass)));
                }
                Ok(())
            }
            MeasureSpec::Product { factors } => {
                if factors.is_empty() {
                    return Err(invalid("a product measure needs at least one factor"));
                }
                factors.iter().try_for_each(MeasureSpec::validate)
            }
        }
    }
}

/// A domain together with its measure.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeasureSpace {
    pub domain: DomainSpec,
    pub measure: MeasureSpec,
}

impl MeasureSpace {
    pub fn new(domain: DomainSpec, measure: MeasureSpec) -> Result<Self> {
        let s = MeasureSpace { domain, measure };
        s.validate()?;
        Ok(s)
    }

    /// Lebesgue measure on `[lo, hi]`.
    pub fn lebesgue(lo: f64, hi: f64) -> Result<Self> {
        Self::new(DomainSpec::interval(lo, hi)?, MeasureSpec::Lebesgue)
    }

    /// A void-ordered set carrying the given atoms.
    pub fn void_atoms(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        Self::new(DomainSpec::void("atoms"), MeasureSpec::discrete(atoms))
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        self.measure.validate()?;
        match (&self.domain, &self.measure) {
            (DomainSpec::Interval { .. }, MeasureSpec::Product { .. }) => {
                Err(invalid("a product measure needs a box domain"))
            }
            (DomainSpec::VoidSet { support: None, .. }, MeasureSpec::Lebesgue)
            | (DomainSpec::VoidSet { support: None, .. }, MeasureSpec::WeightedLebesgue { .. }) => {
                Err(invalid("a continuous measure on a void set needs a `support` interval"))
            }
            (DomainSpec::VoidSet { .. }, MeasureSpec::Product { .. }) => {
                Err(invalid("product measures are not supported on a void set"))
            }
            (DomainSpec::ProductBox { factors }, MeasureSpec::Product { factors: mf }) => {
                let m = factors.len();
                if mf.len() == m {
                    Ok(())
                } else if mf.len() == m + 1 && matches!(mf[m], MeasureSpec::Discrete { .. }) {
                    Ok(())
                } else {
                    Err(invalid(format!(
                        "box with {m} factors needs {m} measure factors (or {m} plus a discrete tail factor), got {}",
                        mf.len()
                    )))
                }
            }
            (DomainSpec::ProductBox { .. }, MeasureSpec::Discrete { .. }) => {
                Err(invalid("discrete measures on a box must be given as a product"))
            }
            (_, MeasureSpec::Discrete { atoms }) => {
                for a in atoms {
                    if !self.domain.contains(&a.point) {
                        return Err(Error::OutsideDomain { point: a.point.clone() });
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Per-axis measure factors of a box space (Lebesgue on a box is a product).
    pub fn box_factors(&self) -> Option<Vec<MeasureSpec>> {
        let DomainSpec::ProductBox { factors } = &self.domain else {
            return None;
        };
        Some(match &self.measure {
            MeasureSpec::Product { factors: mf } => mf.clone(),
            m @ (MeasureSpec::Lebesgue | MeasureSpec::WeightedLebesgue { .. }) => {
                vec![m.clone(); factors.len()]
            }
            MeasureSpec::Discrete { .. } => return None,
        })
    }

    /// The 1-D space of axis `i` of a box space.
    pub fn axis(&self, i: usize) -> Result<MeasureSpace> {
        let DomainSpec::ProductBox { factors } = &self.domain else {
            return Err(invalid("axis() needs a box domain"));
        };
        let mf = self.box_factors().ok_or_else(|| invalid("box without product measure"))?;
        if i < factors.len() {
            MeasureSpace::new(DomainSpec::interval(factors[i].lo, factors[i].hi)?, mf[i].clone())
        } else if i == factors.len() && mf.len() > factors.len() {
            MeasureSpace::new(DomainSpec::void("tail"), mf[i].clone())
        } else {
            Err(Error::OutOfRange { index: i, recorded: factors.len() })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lower_set_of_interval() {
        let d = DomainSpec::interval(0.0, 2.0).unwrap();
        assert_eq!(lower_set(&d, &[1.0]).unwrap(), Region::Segment(0.0, 1.0));
        assert!(matches!(lower_set(&d, &[3.0]), Err(Error::OutsideDomain { .. })));
    }

    #[test]
    fn lower_set_of_box_is_componentwise() {
        let unit = Interval1D::new(0.0, 1.0).unwrap();
        let d = DomainSpec::product_box(vec![unit, unit]).unwrap();
        assert_eq!(
            lower_set(&d, &[0.5, 0.8]).unwrap(),
            Region::Cells(vec![(0.0, 0.5), (0.0, 0.8)])
        );
        assert!(d.leq(&[0.1, 0.2], &[0.5, 0.8]));
        assert!(!d.leq(&[0.6, 0.2], &[0.5, 0.8]));
    }

    #[test]
    fn void_lower_set_is_everything() {
        let d = DomainSpec::void("x");
        assert_eq!(lower_set(&d, &[42.0]).unwrap(), Region::Whole);
        assert_eq!(d.order_interval(&[5.0], &[1.0]).unwrap(), Region::Whole);
    }

    #[test]
    fn order_interval_rejects_unordered_points() {
        let d = DomainSpec::interval(0.0, 1.0).unwrap();
        assert!(matches!(d.order_interval(&[0.7], &[0.2]), Err(Error::NotOrdered { .. })));
    }

    #[test]
    fn degenerate_intervals_are_rejected() {
        assert!(DomainSpec::interval(1.0, 1.0).is_err());
        assert!(DomainSpec::product_box(vec![]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{
            "domain": {"type": "box", "factors": [{"lo": 0, "hi": 1}, {"lo": 0, "hi": 2}]},
            "measure": {"type": "product", "factors": [{"type": "lebesgue"},
                {"type": "weighted", "weight": {"const": 2.0}}]}
        }"#;
        let space: MeasureSpace = serde_json::from_str(text).unwrap();
        space.validate().unwrap();
        let again: MeasureSpace =
            serde_json::from_str(&serde_json::to_string(&space).unwrap()).unwrap();
        assert_eq!(again.domain, space.domain);
        let atoms: MeasureSpec =
            serde_json::from_str(r#"{"type": "discrete", "atoms": [{"point": 0.5, "mass": 0.1}]}"#)
                .unwrap();
        assert!(matches!(atoms, MeasureSpec::Discrete { ref atoms } if atoms[0].point == vec![0.5]));
    }

    #[test]
    fn space_validation() {
        let bad = MeasureSpace::new(DomainSpec::void("v"), MeasureSpec::Lebesgue);
        assert!(bad.is_err());
        let neg = MeasureSpace::void_atoms([(0.0, -1.0)]);
        assert!(neg.is_err());
        let outside = MeasureSpace::new(
            DomainSpec::interval(0.0, 1.0).unwrap(),
            MeasureSpec::discrete([(2.0, 1.0)]),
        );
        assert!(outside.is_err());
    }
}
