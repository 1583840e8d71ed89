//! Exact probabilities.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result, PARSE};

pub type Prob = BigRational;

pub fn ratio(num: i64, den: i64) -> Prob {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn one() -> Prob {
    Prob::one()
}

pub fn zero() -> Prob {
    Prob::zero()
}

/// Parse `"num/den"` or an integer string.
pub fn parse(s: &str) -> Result<Prob> {
    let s = s.trim();
    let bad = || Error::domain(PARSE, format!("not an exact rational: {s:?}"));
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(bad());
    }
    Ok(BigRational::new(num, den))
}

/// Canonical `"num/den"` form (`"num"` when the denominator is 1).
pub fn format(p: &Prob) -> String {
    if p.denom().is_one() {
        p.numer().to_string()
    } else {
        format!("{}/{}", p.numer(), p.denom())
    }
}

pub fn to_f64(p: &Prob) -> f64 {
    p.to_f64().unwrap_or(f64::NAN)
}

/// Exact rational equal to the binary value of `x`.
pub fn from_f64(x: f64) -> Result<Prob> {
    BigRational::from_float(x).ok_or_else(|| Error::domain(PARSE, format!("non-finite probability {x}")))
}

pub fn is_negative(p: &Prob) -> bool {
    p.is_negative()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(parse("2/6").unwrap(), ratio(1, 3));
        assert_eq!(format(&parse("2/6").unwrap()), "1/3");
        assert_eq!(format(&parse("4").unwrap()), "4");
        assert!(parse("1/0").is_err());
        assert!(parse("x").is_err());
        assert_eq!(from_f64(0.25).unwrap(), ratio(1, 4));
    }
}
