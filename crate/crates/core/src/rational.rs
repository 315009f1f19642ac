//! Exact rational arithmetic helpers.
//!
//! Every quantity in this crate (shares, times, utilities, targets) is an
//! arbitrary-precision rational. `num-rational` already keeps values in
//! lowest terms with a positive denominator, so this module only adds the
//! canonical `p/q` text form used by files and the CLI, plus serde adapters.

use crate::error::{Error, Result};
use num_bigint::BigInt;
pub use num_rational::BigRational as Rational;
use num_traits::{One, Signed, Zero};

/// Builds `p/q`. Panics if `q == 0`; intended for literals in code and tests.
pub fn rat(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// Builds the integer rational `n/1`.
pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses the canonical text form: an optionally signed integer, or `p/q`.
///
/// The sign is normalized into the numerator and the result is reduced, so
/// `"6/-4"` parses to `-3/2`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("invalid rational {s:?}"));
    let parse_int = |t: &str| t.trim().parse::<BigInt>().map_err(|_| bad());
    match s.split_once('/') {
        None => Ok(Rational::from_integer(parse_int(s)?)),
        Some((p, q)) => {
            let p = parse_int(p)?;
            let q = parse_int(q)?;
            if q.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {s:?}")));
            }
            Ok(Rational::new(p, q))
        }
    }
}

/// Canonical text form: `p/q` in lowest terms with `q > 0`, or a bare
/// integer when the denominator is one.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Approximate decimal form for human-oriented output (exact values are
/// always available via [`format_rational`]).
pub fn approx(r: &Rational) -> f64 {
    let f = |b: &BigInt| {
        let (sign, digits) = b.to_u64_digits();
        let mut v = 0.0f64;
        for d in digits.iter().rev() {
            v = v * 2f64.powi(64) + *d as f64;
        }
        if sign == num_bigint::Sign::Minus {
            -v
        } else {
            v
        }
    };
    f(r.numer()) / f(r.denom())
}

/// Serde adapter: rationals serialize as their canonical string and
/// deserialize from either a string or an integer.
pub mod rational_serde {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<Rational, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(de)? {
            Raw::Int(n) => Ok(int(n)),
            Raw::Text(s) => parse_rational(&s).map_err(serde::de::Error::custom),
        }
    }
}

/// Serde adapter for `Option<Rational>` fields.
pub mod option_rational_serde {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        r: &Option<Rational>,
        ser: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        match r {
            Some(r) => ser.serialize_some(&format_rational(r)),
            None => ser.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        de: D,
    ) -> std::result::Result<Option<Rational>, D::Error> {
        let raw: Option<String> = Option::deserialize(de)?;
        raw.map(|s| parse_rational(&s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

/// Serde adapter for `Vec<Rational>` fields.
pub mod vec_rational_serde {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        v: &[Rational],
        ser: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_seq(v.iter().map(format_rational))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        de: D,
    ) -> std::result::Result<Vec<Rational>, D::Error> {
        let raw: Vec<String> = Vec::deserialize(de)?;
        raw.iter()
            .map(|s| parse_rational(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// True if `r` lies strictly between 0 and 1.
pub fn is_fractional(r: &Rational) -> bool {
    r.is_positive() && *r < Rational::one()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_round_trip() {
        for s in ["0", "7", "-3", "3/4", "-3/4", "25/27"] {
            let r = parse_rational(s).unwrap();
            assert_eq!(format_rational(&r), s);
        }
    }

    #[test]
    fn parse_normalizes() {
        assert_eq!(parse_rational("6/-4").unwrap(), rat(-3, 2));
        assert_eq!(parse_rational(" 6/8 ").unwrap(), rat(3, 4));
        assert_eq!(format_rational(&rat(4, 2)), "2");
    }

    #[test]
    fn parse_rejects_junk() {
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("a/b").is_err());
        assert!(parse_rational("1.5").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn fractional_detector() {
        assert!(is_fractional(&rat(1, 2)));
        assert!(!is_fractional(&int(0)));
        assert!(!is_fractional(&int(1)));
        assert!(!is_fractional(&rat(-1, 2)));
        assert!(!is_fractional(&rat(3, 2)));
    }
}
