//! Exact rational scalars used for moment values, areas and volumes.

use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{One, Zero};

/// Exact rational number. All moment values, areas and volumes use it.
pub type Rational = Ratio<i128>;

/// Shorthand for an integer-valued rational.
pub fn int(n: i64) -> Rational {
    Rational::from_integer(n as i128)
}

/// Shorthand for `num / den`. Panics if `den == 0`.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(num as i128, den as i128)
}

/// Parses `"p/q"`, `"p"` or `"-p/q"`, with surrounding whitespace allowed.
pub fn parse_rational(text: &str) -> Result<Rational, String> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err("empty rational".to_string());
    }
    if let Some((num, den)) = trimmed.split_once('/') {
        let num = i128::from_str(num.trim()).map_err(|e| format!("bad numerator {num:?}: {e}"))?;
        let den = i128::from_str(den.trim()).map_err(|e| format!("bad denominator {den:?}: {e}"))?;
        if den == 0 {
            return Err(format!("zero denominator in {trimmed:?}"));
        }
        Ok(Rational::new(num, den))
    } else {
        i128::from_str(trimmed)
            .map(Rational::from_integer)
            .map_err(|e| format!("bad rational {trimmed:?}: {e}"))
    }
}

/// Canonical text form: `"7/2"`, `"-3"`, `"0"`.
pub fn format_rational(value: &Rational) -> String {
    value.to_string()
}

pub fn midpoint(a: &Rational, b: &Rational) -> Rational {
    (a + b) / Rational::from_integer(2)
}

pub fn half() -> Rational {
    Rational::new(1, 2)
}

pub fn is_integral(value: &Rational) -> bool {
    value.denom().is_one()
}

/// Lossy conversion for plotting only.
pub fn to_f64(value: &Rational) -> f64 {
    *value.numer() as f64 / *value.denom() as f64
}

pub fn zero() -> Rational {
    Rational::zero()
}

/// Serde adapter: rationals travel as strings, integers are also accepted on input.
pub mod serde_string {
    use std::fmt;

    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};

    use super::{format_rational, parse_rational, Rational};

    pub fn serialize<S: Serializer>(value: &Rational, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&format_rational(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Rational, D::Error> {
        deserializer.deserialize_any(RationalVisitor)
    }

    pub(crate) struct RationalVisitor;

    impl<'de> Visitor<'de> for RationalVisitor {
        type Value = Rational;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a rational as a \"p/q\" string or an integer")
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<Rational, E> {
            parse_rational(v).map_err(E::custom)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<Rational, E> {
            Ok(Rational::from_integer(v as i128))
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<Rational, E> {
            Ok(Rational::from_integer(v as i128))
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<Rational, E> {
            Err(E::custom(format!(
                "floating point value {v} is not allowed; write rationals as \"p/q\""
            )))
        }
    }
}

/// Serde adapter for `Vec<Rational>`.
pub mod serde_string_vec {
    use std::fmt;

    use serde::de::{SeqAccess, Visitor};
    use serde::ser::SerializeSeq;
    use serde::{Deserializer, Serializer};

    use super::{format_rational, Rational};

    pub fn serialize<S: Serializer>(values: &[Rational], serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(values.len()))?;
        for v in values {
            seq.serialize_element(&format_rational(v))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Vec<Rational>, D::Error> {
        deserializer.deserialize_seq(VecVisitor)
    }

    struct VecVisitor;

    struct Element(Rational);

    impl<'de> serde::Deserialize<'de> for Element {
        fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
            d.deserialize_any(super::serde_string::RationalVisitor).map(Element)
        }
    }

    impl<'de> Visitor<'de> for VecVisitor {
        type Value = Vec<Rational>;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("an array of rationals")
        }

        fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Vec<Rational>, A::Error> {
            let mut out = Vec::new();
            while let Some(Element(v)) = seq.next_element()? {
                out.push(v);
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_common_forms() {
        assert_eq!(parse_rational("7/2").unwrap(), ratio(7, 2));
        assert_eq!(parse_rational(" -3 ").unwrap(), int(-3));
        assert_eq!(parse_rational("4/2").unwrap(), int(2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("1.5").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn formats_canonically() {
        assert_eq!(format_rational(&ratio(14, 4)), "7/2");
        assert_eq!(format_rational(&int(-3)), "-3");
    }
}
