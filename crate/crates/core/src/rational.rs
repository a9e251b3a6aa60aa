//! Exact rational scalar used by the finite-population estimand engine.
//!
//! Identification results are equalities, so population arithmetic runs on
//! arbitrary-precision rationals by default. A `Rat` deserializes from a JSON
//! number (floats convert exactly via their dyadic expansion) or from a
//! fraction string such as `"2/3"`.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rat(pub BigRational);

impl Rat {
    pub fn new(numer: i64, denom: i64) -> Self {
        Rat(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn int(v: i64) -> Self {
        Rat(BigRational::from_integer(BigInt::from(v)))
    }

    /// Exact conversion; every finite f64 is a dyadic rational.
    pub fn from_f64(v: f64) -> Option<Self> {
        BigRational::from_f64(v).map(Rat)
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn zero() -> Self {
        Rat(BigRational::zero())
    }

    pub fn one() -> Self {
        Rat(BigRational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn abs(&self) -> Self {
        Rat(self.0.abs())
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl FromStr for Rat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let numer: BigInt = n.trim().parse().map_err(|_| format!("bad numerator in {s:?}"))?;
            let denom: BigInt = d.trim().parse().map_err(|_| format!("bad denominator in {s:?}"))?;
            if denom.is_zero() {
                return Err(format!("zero denominator in {s:?}"));
            }
            Ok(Rat(BigRational::new(numer, denom)))
        } else if let Ok(i) = s.parse::<BigInt>() {
            Ok(Rat(BigRational::from_integer(i)))
        } else {
            let v: f64 = s.parse().map_err(|_| format!("cannot parse {s:?} as a rational"))?;
            Rat::from_f64(v).ok_or_else(|| format!("non-finite value {s:?}"))
        }
    }
}

macro_rules! rat_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                Rat((self.0).$method(rhs.0))
            }
        }
        impl<'a> $trait<&'a Rat> for &'a Rat {
            type Output = Rat;
            fn $method(self, rhs: &'a Rat) -> Rat {
                Rat((&self.0).$method(&rhs.0))
            }
        }
    };
}

rat_binop!(Add, add);
rat_binop!(Sub, sub);
rat_binop!(Mul, mul);
rat_binop!(Div, div);

impl Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-self.0)
    }
}

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

struct RatVisitor;

impl<'de> Visitor<'de> for RatVisitor {
    type Value = Rat;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("a number or a fraction string like \"1/3\"")
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Rat, E> {
        Ok(Rat::int(v))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Rat, E> {
        Ok(Rat(BigRational::from_integer(BigInt::from(v))))
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Rat, E> {
        Rat::from_f64(v).ok_or_else(|| E::custom("non-finite number"))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Rat, E> {
        v.parse().map_err(E::custom)
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Rat, D::Error> {
        deserializer.deserialize_any(RatVisitor)
    }
}
