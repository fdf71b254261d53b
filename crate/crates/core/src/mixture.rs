//! The mixture `xi(s) = sum_p c_p s^p` over even degrees, plus the external
//! field `h`.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::{self, MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest interaction degree accepted by [`Mixture`].
pub const MAX_DEGREE: u32 = 64;

const SUM_TOL: f64 = 1e-12;

/// A finite mixture of even p-spin interactions with external field `h`.
///
/// Coefficients are stored exactly as given. Use [`Mixture::new`] to build a
/// validated instance, or [`Mixture::unchecked`] together with
/// [`Mixture::validate`] to inspect invalid input.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    coeffs: BTreeMap<u32, f64>,
    h: f64,
}

impl Mixture {
    pub fn new(coeffs: impl IntoIterator<Item = (u32, f64)>, h: f64) -> Result<Self> {
        let m = Self::unchecked(coeffs, h);
        let violations = m.validate();
        if violations.is_empty() {
            Ok(m)
        } else {
            Err(Error::InvalidMixture(violations))
        }
    }

    pub fn unchecked(coeffs: impl IntoIterator<Item = (u32, f64)>, h: f64) -> Self {
        Self {
            coeffs: coeffs.into_iter().collect(),
            h,
        }
    }

    /// Pure p-spin model `xi(s) = s^p` with field `h`.
    pub fn pure(p: u32, h: f64) -> Result<Self> {
        Self::new([(p, 1.0)], h)
    }

    pub fn coeffs(&self) -> &BTreeMap<u32, f64> {
        &self.coeffs
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Same interactions, different field.
    pub fn with_field(&self, h: f64) -> Result<Self> {
        Self::new(self.coeffs.iter().map(|(&p, &c)| (p, c)), h)
    }

    pub fn max_degree(&self) -> u32 {
        self.active().map(|(p, _)| p).max().unwrap_or(0)
    }

    /// Nonzero terms `(p, c_p)` in increasing degree.
    pub fn active(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.coeffs
            .iter()
            .filter(|(_, &c)| c != 0.0)
            .map(|(&p, &c)| (p, c))
    }

    /// Lists every violated invariant. An empty list means the mixture is valid.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (&p, &c) in &self.coeffs {
            if p % 2 != 0 {
                out.push(format!("degree {p} is odd; only even degrees are allowed"));
            } else if p < 2 {
                out.push(format!("degree {p} is below 2"));
            }
            if p > MAX_DEGREE {
                out.push(format!("degree {p} exceeds the maximum supported degree {MAX_DEGREE}"));
            }
            if !c.is_finite() || c < 0.0 {
                out.push(format!("coefficient c_{p} = {c} is negative or not finite"));
            }
        }
        if !self.coeffs.values().any(|&c| c > 0.0) {
            out.push("no positive coefficient".to_string());
        }
        let sum: f64 = self.coeffs.values().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            out.push(format!("coefficients sum to {sum}, not 1"));
        }
        if !self.h.is_finite() || self.h < 0.0 {
            out.push(format!("field h = {} is negative or not finite", self.h));
        }
        out
    }

    pub fn is_pure_sk(&self) -> bool {
        let mut active = self.active();
        matches!((active.next(), active.next()), (Some((2, _)), None))
    }

    /// `order`-th derivative of `xi` at `s`, for `order` in `0..=3`.
    pub fn xi(&self, s: f64, order: u32) -> Result<f64> {
        if order > 3 {
            return Err(Error::InvalidArgument(format!(
                "derivative order {order} is not in 0..=3"
            )));
        }
        if !(-1.0..=1.0).contains(&s) {
            return Err(Error::InvalidArgument(format!("overlap {s} is outside [-1, 1]")));
        }
        Ok(self.deriv(s, order))
    }

    /// Unchecked evaluation of the `order`-th derivative (any order, any `s`).
    pub fn deriv(&self, s: f64, order: u32) -> f64 {
        self.active()
            .map(|(p, c)| {
                if order > p {
                    return 0.0;
                }
                let falling: f64 = (0..order).map(|k| (p - k) as f64).product();
                c * falling * s.powi((p - order) as i32)
            })
            .sum()
    }

    pub fn xi0(&self, s: f64) -> f64 {
        self.deriv(s, 0)
    }

    pub fn xi1(&self, s: f64) -> f64 {
        self.deriv(s, 1)
    }

    pub fn xi2(&self, s: f64) -> f64 {
        self.deriv(s, 2)
    }

    pub fn xi3(&self, s: f64) -> f64 {
        self.deriv(s, 3)
    }

    /// `s xi'(s) - xi(s)`, the antiderivative of `s xi''(s)`.
    pub fn s_xi1_minus_xi(&self, s: f64) -> f64 {
        self.active()
            .map(|(p, c)| c * (p as f64 - 1.0) * s.powi(p as i32))
            .sum()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Mixture = serde_json::from_str(text)?;
        let violations = m.validate();
        if violations.is_empty() {
            Ok(m)
        } else {
            Err(Error::InvalidMixture(violations))
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("mixture serializes")
    }
}

impl fmt::Display for Mixture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self.active().map(|(p, c)| format!("{c}*s^{p}")).collect();
        write!(f, "xi(s) = {}, h = {}", terms.join(" + "), self.h)
    }
}

#[derive(Serialize, Deserialize)]
struct MixtureRepr {
    coeffs: Coeffs,
    #[serde(default)]
    h: f64,
}

struct Coeffs(BTreeMap<u32, f64>);

impl Serialize for Coeffs {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_map(self.0.iter().map(|(p, c)| (p.to_string(), c)))
    }
}

impl<'de> Deserialize<'de> for Coeffs {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct CoeffsVisitor;

        impl<'de> Visitor<'de> for CoeffsVisitor {
            type Value = Coeffs;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map from degree strings to coefficients")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<Coeffs, A::Error> {
                let mut out = BTreeMap::new();
                while let Some((key, value)) = map.next_entry::<String, f64>()? {
                    let p: u32 = key
                        .trim()
                        .parse()
                        .map_err(|_| de::Error::custom(format!("degree {key:?} is not an integer")))?;
                    if out.insert(p, value).is_some() {
                        return Err(de::Error::custom(format!("duplicate degree {p}")));
                    }
                }
                Ok(Coeffs(out))
            }
        }

        deserializer.deserialize_map(CoeffsVisitor)
    }
}

impl Serialize for Mixture {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MixtureRepr {
            coeffs: Coeffs(self.coeffs.clone()),
            h: self.h,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Mixture {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = MixtureRepr::deserialize(deserializer)?;
        Ok(Mixture {
            coeffs: repr.coeffs.0,
            h: repr.h,
        })
    }
}
