//! Exact-rational helpers shared across modules: parsing, formatting,
//! powers, and float conversion for `BigRational`.

use crate::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub fn int(v: i128) -> BigInt {
    BigInt::from(v)
}

pub fn ratio(num: i128, den: i128) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn from_int(v: i128) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Parse "3/20", "0.15", "-2", "1e-3" into an exact rational.
pub fn parse(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Config(format!("cannot parse rational: {s:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    // decimal with optional exponent
    let (mant, exp) = match s.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (ipart, fpart) = match mant.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mant, ""),
    };
    if fpart.chars().any(|c| !c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{ipart}{fpart}");
    let num: BigInt = if digits.is_empty() || digits == "-" || digits == "+" {
        return Err(bad());
    } else {
        digits.parse().map_err(|_| bad())?
    };
    let shift = exp - fpart.len() as i32;
    let ten = BigInt::from(10);
    Ok(if shift >= 0 {
        BigRational::from_integer(num * ten.pow(shift as u32))
    } else {
        BigRational::new(num, ten.pow((-shift) as u32))
    })
}

/// Lossless "num/den" form ("num" when integral).
pub fn display(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn powi(r: &BigRational, e: u32) -> BigRational {
    BigRational::new(r.numer().pow(e), r.denom().pow(e))
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Natural log of a positive rational, via f64 with big-value splitting.
pub fn ln(r: &BigRational) -> f64 {
    debug_assert!(r.is_positive());
    // split as 2^k * m with m in [1,2) so huge numerators stay finite
    let bits_n = r.numer().bits() as i64;
    let bits_d = r.denom().bits() as i64;
    if bits_n < 900 && bits_d < 900 {
        return to_f64(r).ln();
    }
    let shift = bits_n - bits_d;
    let scaled = r * powi(&ratio(1, 2), 0.max(shift) as u32)
        / powi(&ratio(1, 2), 0.max(-shift) as u32);
    to_f64(&scaled).ln() + shift as f64 * std::f64::consts::LN_2
}

/// floor(sqrt(n)) for a nonnegative integer.
pub fn isqrt(n: &BigInt) -> BigInt {
    num_integer::Roots::sqrt(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse("3/20").unwrap(), ratio(3, 20));
        assert_eq!(parse("0.15").unwrap(), ratio(3, 20));
        assert_eq!(parse("-2").unwrap(), from_int(-2));
        assert_eq!(parse("1e-3").unwrap(), ratio(1, 1000));
        assert_eq!(parse("2.5e2").unwrap(), from_int(250));
        assert!(parse("").is_err());
        assert!(parse("x").is_err());
        assert!(parse("1/0").is_err());
    }

    #[test]
    fn round_trips_display() {
        for s in ["7", "-3/4", "1", "22/7"] {
            let r = parse(s).unwrap();
            assert_eq!(display(&r), s);
        }
    }

    #[test]
    fn ln_handles_large_values() {
        let big = powi(&from_int(10), 500);
        let expect = 500.0 * std::f64::consts::LN_10;
        assert!((ln(&big) - expect).abs() < 1e-6 * expect);
        let tiny = powi(&ratio(1, 10), 500);
        assert!((ln(&tiny) + expect).abs() < 1e-6 * expect);
    }

    #[test]
    fn powi_matches_repeated_multiplication() {
        let r = ratio(3, 7);
        let mut acc = BigRational::one();
        for _ in 0..5 {
            acc *= &r;
        }
        assert_eq!(powi(&r, 5), acc);
    }
}
