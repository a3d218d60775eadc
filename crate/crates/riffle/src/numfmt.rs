//! Display formatting for exact rationals. Values stay rational
//! end-to-end; these helpers only affect printing.

use num::{Signed, ToPrimitive, Zero};

use crate::{Int, Rat};

/// Reduced `num/den` form.
pub fn fraction(r: &Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// `f64` approximation (for plots and chi-square work, never for exact
/// comparisons).
pub fn approx_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn pow10(k: usize) -> Int {
    Int::from(10u32).pow(k as u32)
}

/// Rounds `num/den` (both positive) to the nearest integer, half up.
fn round_div(num: &Int, den: &Int) -> Int {
    (num * 2 + den) / (den * 2)
}

/// True iff den * 10^e <= num, for possibly negative e.
fn scaled_le(den: &Int, e: i64, num: &Int) -> bool {
    if e >= 0 {
        den * pow10(e as usize) <= *num
    } else {
        *den <= num * pow10((-e) as usize)
    }
}

/// Decimal string with `sig` significant digits (round half up). Plain
/// positional notation for moderate exponents, scientific otherwise.
pub fn decimal(r: &Rat, sig: usize) -> String {
    assert!(sig >= 1, "need at least one significant digit");
    if r.is_zero() {
        return "0".to_string();
    }
    let num = r.numer().abs();
    let den = r.denom().clone();

    // Decimal exponent e: 10^e <= |r| < 10^(e+1).
    let mut e = num.to_string().len() as i64 - den.to_string().len() as i64;
    while !scaled_le(&den, e, &num) {
        e -= 1;
    }
    while scaled_le(&den, e + 1, &num) {
        e += 1;
    }

    let shift = sig as i64 - 1 - e;
    let mut mantissa = if shift >= 0 {
        round_div(&(&num * pow10(shift as usize)), &den)
    } else {
        round_div(&num, &(&den * pow10((-shift) as usize)))
    };
    if mantissa == pow10(sig) {
        // Rounding carried over into a new leading digit.
        mantissa = pow10(sig - 1);
        e += 1;
    }
    let digits = mantissa.to_string();
    debug_assert_eq!(digits.len(), sig);

    let body = if (-5..21).contains(&e) {
        if e >= 0 {
            let int_len = (e + 1) as usize;
            if int_len >= sig {
                format!("{}{}", digits, "0".repeat(int_len - sig))
            } else {
                format!("{}.{}", &digits[..int_len], &digits[int_len..])
            }
        } else {
            format!("0.{}{}", "0".repeat((-e - 1) as usize), digits)
        }
    } else if sig == 1 {
        format!("{}e{}", digits, e)
    } else {
        format!("{}.{}e{}", &digits[..1], &digits[1..], e)
    };
    if r.is_negative() {
        format!("-{body}")
    } else {
        body
    }
}

/// Fixed-point decimal with exactly `places` fraction digits, rounded
/// half away from zero.
pub fn fixed(r: &Rat, places: usize) -> String {
    let num = r.numer().abs();
    let den = r.denom();
    let scaled = round_div(&(&num * pow10(places)), den).to_string();
    let (int_part, frac_part) = if scaled.len() > places {
        let split = scaled.len() - places;
        (scaled[..split].to_string(), scaled[split..].to_string())
    } else {
        ("0".to_string(), format!("{}{}", "0".repeat(places - scaled.len()), scaled))
    };
    let sign = if r.is_negative() && (int_part != "0" || frac_part.bytes().any(|b| b != b'0')) {
        "-"
    } else {
        ""
    };
    if places == 0 {
        format!("{sign}{int_part}")
    } else {
        format!("{sign}{int_part}.{frac_part}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::One;

    fn rat(n: i64, d: i64) -> Rat {
        Rat::new(Int::from(n), Int::from(d))
    }

    #[test]
    fn fraction_form() {
        assert_eq!(fraction(&rat(3, 4)), "3/4");
        assert_eq!(fraction(&rat(-10, 20)), "-1/2");
    }

    #[test]
    fn decimal_basic() {
        assert_eq!(decimal(&rat(1, 2), 12), "0.500000000000");
        assert_eq!(decimal(&rat(1, 3), 4), "0.3333");
        assert_eq!(decimal(&rat(2, 3), 4), "0.6667");
        assert_eq!(decimal(&rat(1234, 1), 2), "1200");
        assert_eq!(decimal(&rat(-1, 8), 3), "-0.125");
        assert_eq!(decimal(&Rat::zero(), 12), "0");
        assert_eq!(decimal(&Rat::one(), 4), "1.000");
    }

    #[test]
    fn decimal_rounding_carry() {
        // 0.9999... rounds up into a new leading digit
        assert_eq!(decimal(&rat(9999, 10000), 3), "1.00");
        assert_eq!(decimal(&rat(995, 1000), 2), "1.0");
    }

    #[test]
    fn decimal_scientific() {
        assert_eq!(decimal(&rat(1, 100_000_000), 3), "1.00e-8");
        let tiny = Rat::new(Int::from(3), Int::from(10u64.pow(10)));
        assert_eq!(decimal(&tiny, 2), "3.0e-10");
    }

    #[test]
    fn fixed_basic() {
        assert_eq!(fixed(&rat(1, 2), 4), "0.5000");
        assert_eq!(fixed(&rat(99999, 100000), 4), "1.0000");
        assert_eq!(fixed(&rat(1, 3), 4), "0.3333");
        assert_eq!(fixed(&rat(-1, 16), 2), "-0.06");
        assert_eq!(fixed(&rat(7, 1), 0), "7");
        // ties round away from zero
        assert_eq!(fixed(&rat(25, 1000), 2), "0.03");
    }
}
