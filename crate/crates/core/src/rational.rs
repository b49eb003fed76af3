//! Exact rational scalars and their textual form.
//!
//! Every exact quantity in the crate is a [`Q`] (an arbitrary precision
//! rational). The canonical text form is always `"p/q"` with `q > 0`, including
//! integers (`"3/1"`) and zero (`"0/1"`). Parsing is more lenient and also
//! accepts bare integers (`"3"`, `"-2"`) and terminating decimals (`"0.25"`).

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

/// Arbitrary precision rational number.
pub type Q = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational literal {literal:?}: {reason}")]
pub struct ParseRationalError {
    pub literal: String,
    pub reason: &'static str,
}

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn parse_q(text: &str) -> Result<Q, ParseRationalError> {
    let fail = |reason| ParseRationalError {
        literal: text.to_string(),
        reason,
    };
    let t = text.trim();
    if t.is_empty() {
        return Err(fail("empty"));
    }
    if let Some((num, den)) = t.split_once('/') {
        let num = BigInt::from_str(num.trim()).map_err(|_| fail("bad numerator"))?;
        let den = BigInt::from_str(den.trim()).map_err(|_| fail("bad denominator"))?;
        if den.is_zero() {
            return Err(fail("zero denominator"));
        }
        return Ok(Q::new(num, den));
    }
    if let Some((int_part, frac_part)) = t.split_once('.') {
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(fail("bad decimal"));
        }
        let negative = int_part.starts_with('-');
        let int_digits = int_part.trim_start_matches(['-', '+']);
        let int_value = if int_digits.is_empty() {
            BigInt::zero()
        } else {
            BigInt::from_str(int_digits).map_err(|_| fail("bad decimal"))?
        };
        let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
        let frac = BigInt::from_str(frac_part).map_err(|_| fail("bad decimal"))?;
        let mut value = Q::new(int_value * &scale + frac, scale);
        if negative {
            value = -value;
        }
        return Ok(value);
    }
    BigInt::from_str(t)
        .map(Q::from_integer)
        .map_err(|_| fail("not a rational"))
}

/// Canonical `"p/q"` text.
pub fn fmt_q(value: &Q) -> String {
    format!("{}/{}", value.numer(), value.denom())
}

pub fn to_f64(value: &Q) -> f64 {
    value.to_f64().unwrap_or_else(|| {
        // Ratio::to_f64 only fails on overflow of both parts; fall back to a
        // scaled division.
        let n = value.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = value.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

pub fn abs(value: &Q) -> Q {
    value.abs()
}

/// `base^exp` for a non-negative integer exponent.
pub fn pow(base: &Q, exp: u64) -> Q {
    let mut result = Q::one();
    let mut b = base.clone();
    let mut e = exp;
    while e > 0 {
        if e & 1 == 1 {
            result *= &b;
        }
        e >>= 1;
        if e > 0 {
            b = &b * &b;
        }
    }
    result
}

/// Rounds a float to 12 significant digits; the stored value is exactly what
/// its 12-digit text form parses back to.
pub fn sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

pub fn fmt_sig12(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.11e}")
    }
}

/// Serde wrapper that writes a rational as `"p/q"` and reads any accepted
/// literal (string or integer).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rational(pub Q);

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&fmt_q(&self.0))
    }
}

impl From<Q> for Rational {
    fn from(value: Q) -> Self {
        Rational(value)
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&fmt_q(&self.0))
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct Visitor;
        impl de::Visitor<'_> for Visitor {
            type Value = Rational;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a rational as \"p/q\" or an integer")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Rational, E> {
                parse_q(v).map(Rational).map_err(E::custom)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Rational, E> {
                Ok(Rational(qi(v)))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Rational, E> {
                Ok(Rational(Q::from_integer(BigInt::from(v))))
            }
        }
        deserializer.deserialize_any(Visitor)
    }
}

/// Float stored at 12 significant digits and serialized as text, so that
/// structured reports round-trip exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sig12(f64);

impl Sig12 {
    pub fn new(x: f64) -> Self {
        Sig12(sig12(x))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl fmt::Display for Sig12 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&fmt_sig12(self.0))
    }
}

impl Serialize for Sig12 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&fmt_sig12(self.0))
    }
}

impl<'de> Deserialize<'de> for Sig12 {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        let value = match text.as_str() {
            "nan" => f64::NAN,
            "inf" => f64::INFINITY,
            "-inf" => f64::NEG_INFINITY,
            other => other.parse().map_err(de::Error::custom)?,
        };
        Ok(Sig12::new(value))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_literal_forms() {
        assert_eq!(parse_q("1/2").unwrap(), q(1, 2));
        assert_eq!(parse_q("-4/6").unwrap(), q(-2, 3));
        assert_eq!(parse_q("7").unwrap(), qi(7));
        assert_eq!(parse_q("0.25").unwrap(), q(1, 4));
        assert_eq!(parse_q("-1.5").unwrap(), q(-3, 2));
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("abc").is_err());
        assert!(parse_q("").is_err());
    }

    #[test]
    fn canonical_text_is_p_over_q() {
        assert_eq!(fmt_q(&qi(3)), "3/1");
        assert_eq!(fmt_q(&qi(0)), "0/1");
        assert_eq!(fmt_q(&q(2, -4)), "-1/2");
    }

    #[test]
    fn sig12_is_stable_under_reformatting() {
        for x in [std::f64::consts::SQRT_2, 1.0 / 3.0, 1e-300, 123456789.123456789] {
            let once = sig12(x);
            assert_eq!(sig12(once), once);
            assert_eq!(fmt_sig12(once).parse::<f64>().unwrap(), once);
        }
    }

    #[test]
    fn integer_power() {
        assert_eq!(pow(&q(1, 2), 5), q(1, 32));
        assert_eq!(pow(&qi(3), 0), qi(1));
    }
}
