//! Exact rational complexity values.
//!
//! Costs are sums and products of configured weights and observed counts;
//! keeping them as arbitrary-precision rationals makes label math exact, so
//! tests can assert equality instead of tolerances. JSON decimals are parsed
//! digit-exactly (0.1 becomes 1/10, not the nearest double).

use std::fmt;
use std::ops::{Add, AddAssign, Mul};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A nonnegative rational number of cost points.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Complexity(BigRational);

impl Complexity {
    pub fn zero() -> Self {
        Complexity(BigRational::zero())
    }

    pub fn from_integer(n: u64) -> Self {
        Complexity(BigRational::from_integer(BigInt::from(n)))
    }

    /// Builds `numer/denom` exactly. Panics on a zero denominator.
    pub fn from_ratio(numer: u64, denom: u64) -> Self {
        assert!(denom != 0, "zero denominator");
        Complexity(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    /// Parses a JSON-style decimal literal (`"13"`, `"0.5"`, `"2.5e3"`)
    /// into an exact rational. Rejects negative values.
    pub fn from_decimal_str(text: &str) -> Result<Self> {
        let r = decimal_to_rational(text)?;
        if r.is_negative() {
            return Err(Error::Config(format!("negative cost value {text}")));
        }
        Ok(Complexity(r))
    }

    pub fn rational(&self) -> &BigRational {
        &self.0
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// Nearest-double view for feature vectors and ML targets.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::INFINITY)
    }

    /// Multiplies by a nonnegative integer count (list lengths, limits).
    pub fn times(&self, n: u64) -> Self {
        Complexity(&self.0 * BigRational::from_integer(BigInt::from(n)))
    }
}

impl Add for Complexity {
    type Output = Complexity;
    fn add(self, rhs: Complexity) -> Complexity {
        Complexity(self.0 + rhs.0)
    }
}

impl Add<&Complexity> for Complexity {
    type Output = Complexity;
    fn add(self, rhs: &Complexity) -> Complexity {
        Complexity(self.0 + &rhs.0)
    }
}

impl AddAssign<&Complexity> for Complexity {
    fn add_assign(&mut self, rhs: &Complexity) {
        self.0 += &rhs.0;
    }
}

impl Mul<u64> for &Complexity {
    type Output = Complexity;
    fn mul(self, n: u64) -> Complexity {
        self.times(n)
    }
}

impl fmt::Display for Complexity {
    /// Integers print bare (`118`), non-integers as a fraction (`5/2`).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl FromStr for Complexity {
    type Err = Error;

    /// Accepts `"n"`, `"n/d"`, or a decimal literal.
    fn from_str(s: &str) -> Result<Self> {
        if let Some((n, d)) = s.split_once('/') {
            let numer = BigInt::from_str(n.trim())
                .map_err(|e| Error::Config(format!("bad rational `{s}`: {e}")))?;
            let denom = BigInt::from_str(d.trim())
                .map_err(|e| Error::Config(format!("bad rational `{s}`: {e}")))?;
            if denom.is_zero() {
                return Err(Error::Config(format!("bad rational `{s}`: zero denominator")));
            }
            let r = BigRational::new(numer, denom);
            if r.is_negative() {
                return Err(Error::Config(format!("negative cost value {s}")));
            }
            Ok(Complexity(r))
        } else {
            Complexity::from_decimal_str(s.trim())
        }
    }
}

/// Exact conversion of a JSON number literal to a rational:
/// `[-]int[.frac][e[+|-]exp]` becomes `sign * intfrac / 10^len(frac) * 10^exp`.
pub fn decimal_to_rational(text: &str) -> Result<BigRational> {
    let bad = |why: &str| Error::Config(format!("bad number `{text}`: {why}"));
    let mut s = text;
    let negative = if let Some(rest) = s.strip_prefix('-') {
        s = rest;
        true
    } else {
        false
    };
    let (mantissa, exp_part) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], Some(&s[i + 1..])),
        None => (s, None),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad("no digits"));
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit())
        || !frac_part.bytes().all(|b| b.is_ascii_digit())
    {
        return Err(bad("non-digit in mantissa"));
    }
    let digits = format!("{int_part}{frac_part}");
    let mut numer = BigInt::from_str(&digits).map_err(|e| bad(&e.to_string()))?;
    if negative {
        numer = -numer;
    }
    let mut denom_pow: i64 = frac_part.len() as i64;
    if let Some(exp) = exp_part {
        let exp: i64 = exp.parse().map_err(|_| bad("bad exponent"))?;
        denom_pow -= exp;
    }
    let ten = BigInt::from(10u32);
    let rational = if denom_pow >= 0 {
        BigRational::new(numer, ten.pow(denom_pow as u32))
    } else {
        BigRational::from_integer(numer * ten.pow((-denom_pow) as u32))
    };
    Ok(rational)
}

impl Serialize for Complexity {
    /// Integral values serialize as JSON numbers (arbitrary precision);
    /// everything else as an exact `"numer/denom"` string.
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_integer() {
            let n = serde_json::Number::from_str(&self.0.numer().to_string())
                .map_err(serde::ser::Error::custom)?;
            n.serialize(serializer)
        } else {
            serializer.serialize_str(&format!("{}/{}", self.0.numer(), self.0.denom()))
        }
    }
}

struct ComplexityVisitor;

impl<'de> Visitor<'de> for ComplexityVisitor {
    type Value = Complexity;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("a nonnegative number or \"numer/denom\" string")
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Complexity, E> {
        Ok(Complexity::from_integer(v))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Complexity, E> {
        if v < 0 {
            return Err(E::custom(format!("negative cost value {v}")));
        }
        Ok(Complexity::from_integer(v as u64))
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Complexity, E> {
        // Reachable from pre-parsed values rather than raw JSON text. The
        // shortest round-trip decimal rendering recovers the digits the
        // author wrote (0.1f64 renders as "0.1", not its binary expansion).
        if !v.is_finite() {
            return Err(E::custom(format!("non-finite cost value {v}")));
        }
        Complexity::from_decimal_str(&format!("{v}")).map_err(E::custom)
    }

    fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Complexity, E> {
        Complexity::from_str(v).map_err(E::custom)
    }

    fn visit_map<A: de::MapAccess<'de>>(
        self,
        map: A,
    ) -> std::result::Result<Complexity, A::Error> {
        // serde_json's arbitrary-precision numbers surface as a special map;
        // its own Number type knows how to decode that. Its string form is
        // the exact source literal.
        let n = serde_json::Number::deserialize(de::value::MapAccessDeserializer::new(map))?;
        Complexity::from_decimal_str(&n.to_string()).map_err(de::Error::custom)
    }
}

impl<'de> Deserialize<'de> for Complexity {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Complexity, D::Error> {
        d.deserialize_any(ComplexityVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_parsing_is_exact() {
        let c = Complexity::from_decimal_str("0.1").unwrap();
        assert_eq!(
            c.rational(),
            &BigRational::new(BigInt::from(1), BigInt::from(10))
        );
        let c = Complexity::from_decimal_str("2.5e3").unwrap();
        assert_eq!(c, Complexity::from_integer(2500));
        let c = Complexity::from_decimal_str("13").unwrap();
        assert_eq!(c, Complexity::from_integer(13));
        assert!(Complexity::from_decimal_str("-1").is_err());
        assert!(Complexity::from_decimal_str("abc").is_err());
    }

    #[test]
    fn json_round_trip_integral_and_fractional() {
        let c = Complexity::from_integer(118);
        assert_eq!(serde_json::to_string(&c).unwrap(), "118");
        let back: Complexity = serde_json::from_str("118").unwrap();
        assert_eq!(back, c);

        let half: Complexity = serde_json::from_str("0.5").unwrap();
        assert_eq!(serde_json::to_string(&half).unwrap(), "\"1/2\"");
        let again: Complexity = serde_json::from_str("\"1/2\"").unwrap();
        assert_eq!(again, half);
    }

    #[test]
    fn decimal_json_values_are_exact_not_floats() {
        let c: Complexity = serde_json::from_str("0.1").unwrap();
        assert_eq!(
            c.rational(),
            &BigRational::new(BigInt::from(1), BigInt::from(10))
        );
    }

    #[test]
    fn display_forms() {
        assert_eq!(Complexity::from_integer(23).to_string(), "23");
        let half: Complexity = "1/2".parse().unwrap();
        assert_eq!(half.to_string(), "1/2");
    }

    #[test]
    fn arithmetic_is_exact() {
        let a: Complexity = "1/3".parse().unwrap();
        let b: Complexity = "2/3".parse().unwrap();
        assert_eq!(a + &b, Complexity::from_integer(1));
        let w: Complexity = "0.5".parse().unwrap();
        assert_eq!(w.times(4), Complexity::from_integer(2));
    }
}
