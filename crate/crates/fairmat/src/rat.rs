//! Exact rational arithmetic helpers.
//!
//! All probabilities and polytope coordinates in this crate are
//! [`Rat`] values; serialized form is the string `"p/q"` (or `"p"` when the
//! denominator is one).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rat = BigRational;

/// `n/d` as an exact rational.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Integer as an exact rational.
pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn zero() -> Rat {
    Rat::zero()
}

pub fn one() -> Rat {
    Rat::one()
}

/// Render as `"p/q"`, collapsing to `"p"` for integers.
pub fn display(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parse `"p/q"` or a bare integer string.
pub fn parse(s: &str) -> Option<Rat> {
    let s = s.trim();
    match s.split_once('/') {
        Some((num, den)) => {
            let n: BigInt = num.trim().parse().ok()?;
            let d: BigInt = den.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(Rat::new(n, d))
        }
        None => {
            let n: BigInt = s.parse().ok()?;
            Some(Rat::from_integer(n))
        }
    }
}

/// The exact rational value of a finite `f64`.
pub fn from_f64(x: f64) -> Option<Rat> {
    Rat::from_float(x)
}

pub fn to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Best rational approximation to `x` with denominator at most `max_den`,
/// by walking the continued-fraction convergents (Stern-Brocot descent).
pub fn nearest_with_denominator_at_most(x: f64, max_den: u64) -> Option<Rat> {
    if !x.is_finite() {
        return None;
    }
    let exact = from_f64(x)?;
    let max_den = BigInt::from(max_den);
    if *exact.denom() <= max_den {
        return Some(exact);
    }
    // Continued-fraction expansion of |exact|, truncated when the
    // denominator bound is hit; semiconvergent refinement for the last term.
    let negative = exact.is_negative();
    let original = exact.abs();
    let mut target = original.clone();
    let (mut h0, mut k0) = (BigInt::zero(), BigInt::one());
    let (mut h1, mut k1) = (BigInt::one(), BigInt::zero());
    loop {
        let a = target.floor().to_integer();
        let h2 = &a * &h1 + &h0;
        let k2 = &a * &k1 + &k0;
        if k2 > max_den {
            // Largest semiconvergent with denominator within bound; compare
            // it against the previous convergent on the original value.
            let t = (&max_den - &k0) / &k1;
            let h = &t * &h1 + &h0;
            let k = &t * &k1 + &k0;
            let cand_a = Rat::new(h, k);
            let cand_b = Rat::new(h1.clone(), k1.clone());
            let best = if k1.is_zero()
                || (original.clone() - &cand_a).abs() < (original.clone() - &cand_b).abs()
            {
                cand_a
            } else {
                cand_b
            };
            return Some(if negative { -best } else { best });
        }
        h0 = std::mem::replace(&mut h1, h2);
        k0 = std::mem::replace(&mut k1, k2);
        let frac = target - Rat::from_integer(a);
        if frac.is_zero() {
            let best = Rat::new(h1, k1);
            return Some(if negative { -best } else { best });
        }
        target = frac.recip();
    }
}

/// Sum of an iterator of rationals.
pub fn sum<'a>(iter: impl IntoIterator<Item = &'a Rat>) -> Rat {
    iter.into_iter().fold(Rat::zero(), |acc, r| acc + r)
}
