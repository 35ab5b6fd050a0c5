//! Exact rational arithmetic helpers and a fixed-point natural logarithm.

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Arbitrary-precision rational, the number type of all exact computations.
pub type Rational = num_rational::BigRational;

/// Path-count dimension: exact nonnegative integer.
pub type Dim = BigUint;

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Lossless conversion: every finite f64 is a dyadic rational.
pub fn rational_from_f64(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

/// Conversion to f64 that stays accurate for huge numerators/denominators.
pub fn rational_to_f64(r: &Rational) -> f64 {
    if r.numer().is_zero() {
        return 0.0;
    }
    let num = r.numer();
    let den = r.denom();
    let nb = num.bits() as i64;
    let db = den.bits() as i64;
    // Shift both operands so they fit comfortably in f64 before dividing.
    let shift = nb.max(db) - 80;
    let (n, d) = if shift > 0 {
        (num >> shift, den >> shift)
    } else {
        (num.clone(), den.clone())
    };
    let nf = n.to_f64().unwrap_or(f64::NAN);
    let df = d.to_f64().unwrap_or(f64::NAN);
    nf / df
}

/// Parses "3/4", "0.7", "-2", "1e-3"-free decimal forms into an exact rational.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Rational::new(n, d));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        let neg = int_part.starts_with('-');
        let int_part = int_part.trim_start_matches(['-', '+']);
        let int_val: BigInt = if int_part.is_empty() {
            BigInt::zero()
        } else {
            int_part.parse().ok()?
        };
        if frac_part.is_empty() || !frac_part.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let frac_val: BigInt = frac_part.parse().ok()?;
        let den = BigInt::from(10u32).pow(frac_part.len() as u32);
        let mut v = Rational::new(int_val * &den + frac_val, den);
        if neg {
            v = -v;
        }
        return Some(v);
    }
    let n: BigInt = s.parse().ok()?;
    Some(Rational::from_integer(n))
}

/// Renders a rational as "num/den" (or "num" when integral).
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn dim_to_rational(d: &Dim) -> Rational {
    Rational::from_integer(BigInt::from_biguint(Sign::Plus, d.clone()))
}

// ---------------------------------------------------------------------------
// Fixed-point logarithm.
//
// Entropies are formed from exact rational probabilities; their logarithms
// are evaluated in fixed-point arithmetic with SCALE_DIGITS decimal digits
// after the point, which keeps ratios h_n / sqrt(n) comparable across n far
// beyond f64 resolution.
// ---------------------------------------------------------------------------

pub const LN_SCALE_DIGITS: u32 = 60;

fn scale() -> BigInt {
    BigInt::from(10u32).pow(LN_SCALE_DIGITS)
}

fn fx_mul(a: &BigInt, b: &BigInt) -> BigInt {
    (a * b) / scale()
}

fn fx_div(a: &BigInt, b: &BigInt) -> BigInt {
    (a * scale()) / b
}

/// atanh(t) = t + t^3/3 + t^5/5 + ... for |t| <= 1/3 in fixed point.
fn fx_atanh(t: &BigInt) -> BigInt {
    let t2 = fx_mul(t, t);
    let mut power = t.clone();
    let mut sum = BigInt::zero();
    let mut k: u64 = 1;
    while !power.is_zero() {
        sum += &power / BigInt::from(k);
        power = fx_mul(&power, &t2);
        k += 2;
    }
    sum
}

fn fx_ln2() -> BigInt {
    // ln 2 = 2 atanh(1/3)
    let third = fx_div(&BigInt::one(), &BigInt::from(3));
    2 * fx_atanh(&third)
}

/// ln(n) for a positive integer, as a fixed-point value scaled by 10^60.
pub fn ln_biguint_fixed(n: &BigUint) -> BigInt {
    assert!(!n.is_zero(), "ln of zero");
    let n = BigInt::from_biguint(Sign::Plus, n.clone());
    if n.is_one() {
        return BigInt::zero();
    }
    // n = m * 2^k with m in [1, 2)
    let k = n.bits() - 1;
    let m_fixed = (&n * scale()) >> k;
    // ln m = 2 atanh((m-1)/(m+1))
    let num = &m_fixed - scale();
    let den = &m_fixed + scale();
    let t = fx_div(&num, &den);
    BigInt::from(k) * fx_ln2() + 2 * fx_atanh(&t)
}

/// ln of a positive rational, fixed point.
pub fn ln_rational_fixed(r: &Rational) -> BigInt {
    assert!(r.is_positive(), "ln of non-positive rational");
    let num = r.numer().magnitude();
    let den = r.denom().magnitude();
    ln_biguint_fixed(num) - ln_biguint_fixed(den)
}

pub fn fixed_to_f64(v: &BigInt) -> f64 {
    let neg = v.is_negative();
    let mag = v.magnitude().clone();
    let bits = mag.bits() as i64;
    let shift = bits - 80;
    let x = if shift > 0 {
        let m = BigInt::from_biguint(Sign::Plus, mag >> shift)
            .to_f64()
            .unwrap();
        m * (shift as f64).exp2()
    } else {
        BigInt::from_biguint(Sign::Plus, mag).to_f64().unwrap()
    };
    let x = x / 10f64.powi(LN_SCALE_DIGITS as i32);
    if neg {
        -x
    } else {
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rational("3/4").unwrap(), rat(3, 4));
        assert_eq!(parse_rational("0.7").unwrap(), rat(7, 10));
        assert_eq!(parse_rational("-1.25").unwrap(), rat(-5, 4));
        assert_eq!(parse_rational("2").unwrap(), rat_int(2));
        assert!(parse_rational("1/0").is_none());
        assert!(parse_rational("abc").is_none());
    }

    #[test]
    fn f64_roundtrip_is_exact() {
        let r = rational_from_f64(0.1).unwrap();
        // 0.1 is not 1/10 in binary; the conversion must preserve the f64 bit value.
        assert_eq!(rational_to_f64(&r), 0.1);
        assert_ne!(r, rat(1, 10));
    }

    #[test]
    fn to_f64_handles_huge_values() {
        // C(400,200)/2^400-scale magnitudes must not overflow to NaN.
        let mut num = BigInt::one();
        for k in 0..200u32 {
            num = num * BigInt::from(400 - k) / BigInt::from(k + 1);
        }
        let den = BigInt::from(2u32).pow(400);
        let r = Rational::new(num, den);
        let x = rational_to_f64(&r);
        assert!(x > 0.039 && x < 0.040, "x = {x}"); // ~ 1/sqrt(200 pi)
    }

    #[test]
    fn fixed_ln_matches_f64() {
        for n in [2u64, 3, 10, 720, 1_000_000] {
            let v = fixed_to_f64(&ln_biguint_fixed(&BigUint::from(n)));
            assert!((v - (n as f64).ln()).abs() < 1e-12, "ln {n}: {v}");
        }
    }

    #[test]
    fn fixed_ln_rational() {
        let v = fixed_to_f64(&ln_rational_fixed(&rat(2, 3)));
        assert!((v - (2f64 / 3.0).ln()).abs() < 1e-12);
    }
}
