//! Small helpers around [`BigRational`].

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn from_usize(n: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Exact conversion of a finite float.
pub fn from_f64(x: f64) -> Option<BigRational> {
    BigRational::from_float(x)
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Value as `usize` when the rational is a non-negative integer.
pub fn to_usize(x: &BigRational) -> Option<usize> {
    if x.is_integer() && !x.is_negative() {
        x.to_integer().to_usize()
    } else {
        None
    }
}

pub fn lcm_usize(a: usize, b: usize) -> usize {
    a.lcm(&b)
}

pub fn gcd_usize(a: usize, b: usize) -> usize {
    a.gcd(&b)
}

/// `p/q` with `q >= 1`, used by the text formats.
pub fn format(x: &BigRational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Parses `p/q` or a bare integer.
pub fn parse(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            if q.is_zero() {
                return None;
            }
            Some(BigRational::new(p, q))
        }
        None => Some(BigRational::from_integer(s.parse().ok()?)),
    }
}

pub fn clamp_unit(x: BigRational) -> BigRational {
    if x.is_negative() {
        BigRational::zero()
    } else if x > BigRational::one() {
        BigRational::one()
    } else {
        x
    }
}
