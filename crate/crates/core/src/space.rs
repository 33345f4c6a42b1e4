//! Finite-dimensional ℓ_p coordinate spaces.

use nalgebra::DVector;
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use std::fmt;

use crate::error::{JsumError, Result};

/// Norm exponent in `[1, ∞]`; `f64::INFINITY` encodes the sup norm.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Exponent(f64);

impl Exponent {
    pub const ONE: Exponent = Exponent(1.0);
    pub const TWO: Exponent = Exponent(2.0);
    pub const INFINITY: Exponent = Exponent(f64::INFINITY);

    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(JsumError::InvalidSpace {
                index: 0,
                reason: format!("exponent {p} outside [1, inf]"),
            });
        }
        Ok(Exponent(p))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    pub fn is_euclidean(self) -> bool {
        self.0 == 2.0
    }

    /// ℓ_p norm of `v`.
    pub fn norm(self, v: &DVector<f64>) -> f64 {
        lp_norm(v.as_slice(), self.0)
    }

    /// A dual vector `g` with `<g, v> = ‖v‖_p` and dual norm at most one.
    ///
    /// Deterministic selection at nonsmooth points: sign vector (zero on zero
    /// coordinates) for p = 1, signed mass on the first maximal coordinate for
    /// p = ∞, and the zero functional at `v = 0`.
    pub fn subgradient(self, v: &DVector<f64>) -> DVector<f64> {
        let n = v.len();
        let norm = self.norm(v);
        if norm == 0.0 {
            return DVector::zeros(n);
        }
        let p = self.0;
        if p == 1.0 {
            v.map(sign)
        } else if p.is_infinite() {
            let mut g = DVector::zeros(n);
            let (idx, _) = v.iter().enumerate().fold(
                (0, -1.0),
                |(bi, bv), (i, &x)| if x.abs() > bv { (i, x.abs()) } else { (bi, bv) },
            );
            g[idx] = sign(v[idx]);
            g
        } else if p == 2.0 {
            v / norm
        } else {
            v.map(|x| sign(x) * (x.abs() / norm).powf(p - 1.0))
        }
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// ℓ_p norm of a slice, `p = f64::INFINITY` for the max norm.
pub fn lp_norm(v: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    } else if p == 1.0 {
        v.iter().map(|x| x.abs()).sum()
    } else if p == 2.0 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    } else {
        let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        scale * v.iter().map(|x| (x.abs() / scale).powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct ExpVisitor;
        impl Visitor<'_> for ExpVisitor {
            type Value = Exponent;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number >= 1 or the string \"inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Exponent, E> {
                Exponent::new(v).map_err(E::custom)
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Exponent, E> {
                self.visit_f64(v as f64)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Exponent, E> {
                self.visit_f64(v as f64)
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Exponent, E> {
                match v {
                    "inf" | "infinity" | "Infinity" => Ok(Exponent::INFINITY),
                    other => other.parse::<f64>().map_err(E::custom).and_then(|p| self.visit_f64(p)),
                }
            }
        }
        d.deserialize_any(ExpVisitor)
    }
}

/// A coordinate space `(R^dim, ‖·‖_p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoordinateSpace {
    pub dim: usize,
    pub p: Exponent,
}

impl CoordinateSpace {
    pub fn new(dim: usize, p: f64) -> Result<Self> {
        if dim == 0 {
            return Err(JsumError::InvalidSpace {
                index: 0,
                reason: "dimension must be positive".into(),
            });
        }
        Ok(CoordinateSpace {
            dim,
            p: Exponent::new(p)?,
        })
    }

    pub fn euclidean(dim: usize) -> Self {
        CoordinateSpace { dim, p: Exponent::TWO }
    }

    pub fn norm(&self, v: &DVector<f64>) -> f64 {
        self.p.norm(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn lp_norms_of_simple_vectors() {
        let v = [3.0, -4.0];
        assert_relative_eq!(lp_norm(&v, 1.0), 7.0);
        assert_relative_eq!(lp_norm(&v, 2.0), 5.0);
        assert_relative_eq!(lp_norm(&v, f64::INFINITY), 4.0);
        assert_relative_eq!(lp_norm(&v, 3.0), (27.0f64 + 64.0).powf(1.0 / 3.0), epsilon = 1e-14);
        assert_eq!(lp_norm(&[0.0, 0.0], 1.5), 0.0);
    }

    #[test]
    fn subgradients_attain_the_norm_with_unit_dual_norm() {
        let v = DVector::from_vec(vec![1.0, -2.0, 0.0, 2.0]);
        for p in [1.0, 1.5, 2.0, 3.0, f64::INFINITY] {
            let e = Exponent::new(p).unwrap();
            let g = e.subgradient(&v);
            assert_relative_eq!(g.dot(&v), e.norm(&v), epsilon = 1e-12);
            let dual = if p == 1.0 {
                f64::INFINITY
            } else if p.is_infinite() {
                1.0
            } else {
                p / (p - 1.0)
            };
            assert!(lp_norm(g.as_slice(), dual) <= 1.0 + 1e-12);
        }
        // first maximal coordinate wins at p = ∞
        let g = Exponent::INFINITY.subgradient(&v);
        assert_eq!(g.as_slice(), &[0.0, -1.0, 0.0, 0.0]);
    }

    #[test]
    fn exponent_serde_accepts_inf() {
        let e: Exponent = serde_json::from_str("\"inf\"").unwrap();
        assert!(e.is_infinite());
        let e: Exponent = serde_json::from_str("2").unwrap();
        assert_eq!(e, Exponent::TWO);
        assert!(serde_json::from_str::<Exponent>("0.5").is_err());
        assert_eq!(serde_json::to_string(&Exponent::INFINITY).unwrap(), "\"inf\"");
    }
}
