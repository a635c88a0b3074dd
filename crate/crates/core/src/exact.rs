//! Exact scalar helpers shared by the polynomial, form and solver layers.
//!
//! Real quantities are [`Rational`] (arbitrary precision), complex
//! coefficients are [`Coeff`] = `Complex<Rational>`. Rationals cross text
//! boundaries as `num/den` strings.

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;
pub type Coeff = Complex<BigRational>;

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn real(r: Rational) -> Coeff {
    Coeff::new(r, Rational::zero())
}

pub fn cint(re: i64, im: i64) -> Coeff {
    Coeff::new(int(re), int(im))
}

pub fn coeff_conj(c: &Coeff) -> Coeff {
    Coeff::new(c.re.clone(), -c.im.clone())
}

/// `|c|^2` as an exact rational.
pub fn coeff_norm_sqr(c: &Coeff) -> Rational {
    &c.re * &c.re + &c.im * &c.im
}

pub fn coeff_is_zero(c: &Coeff) -> bool {
    c.re.is_zero() && c.im.is_zero()
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn coeff_to_c64(c: &Coeff) -> Complex64 {
    Complex64::new(to_f64(&c.re), to_f64(&c.im))
}

/// Exact conversion of a finite float (every finite `f64` is a dyadic rational).
pub fn from_f64(x: f64) -> Result<Rational> {
    Rational::from_float(x).ok_or_else(|| Error::InvalidArg(format!("non-finite value {x}")))
}

pub fn factorial(k: u32) -> BigInt {
    (1..=k).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

pub fn binomial(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

pub fn rpow(base: &Rational, exp: u32) -> Rational {
    num_traits::pow(base.clone(), exp as usize)
}

/// Parses `p`, `-p` or `p/q` with integer `p`, `q`.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let t = text.trim();
    let bad = || Error::Parse(format!("invalid rational `{text}`"));
    if t.is_empty() {
        return Err(bad());
    }
    match t.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(Error::Parse(format!("zero denominator in `{text}`")));
            }
            Ok(Rational::new(n, d))
        }
        None => {
            let n: BigInt = t.parse().map_err(|_| bad())?;
            Ok(Rational::from_integer(n))
        }
    }
}

/// Always `num/den`, denominator positive.
pub fn fmt_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Compact form used inside polynomial text: `3/4`, `-2`.
pub fn fmt_rational_compact(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rational_sign(r: &Rational) -> i8 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

/// Fixed 17-significant-digit rendering used in every machine-readable report.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x > 0.0 {
        "Infinity".to_string()
    } else {
        "-Infinity".to_string()
    }
}

/// Serde adapters: exact rationals as `num/den` strings, floats with 17 digits.
pub mod serde_fmt {
    use super::*;
    use serde::Serializer;

    pub fn rational<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_rational(r))
    }

    pub fn float<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::Serialize;
        if x.is_finite() {
            let n: serde_json::Number = fmt_f64(*x)
                .parse()
                .map_err(|e| serde::ser::Error::custom(format!("{e}")))?;
            n.serialize(s)
        } else {
            s.serialize_str(&fmt_f64(*x))
        }
    }

    pub fn float_vec<S: Serializer>(xs: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for x in xs {
            seq.serialize_element(&Fixed(*x))?;
        }
        seq.end()
    }

    struct Fixed(f64);

    impl serde::Serialize for Fixed {
        fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
            float(&self.0, s)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_text_round_trip() {
        for t in ["3/4", "-1/2", "7", "0"] {
            let r = parse_rational(t).unwrap();
            assert_eq!(parse_rational(&fmt_rational(&r)).unwrap(), r);
        }
        assert_eq!(fmt_rational(&rat(2, 4)), "1/2");
        assert_eq!(fmt_rational(&int(3)), "3/1");
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn binomials_and_factorials() {
        assert_eq!(factorial(0), BigInt::one());
        assert_eq!(factorial(5), BigInt::from(120));
        assert_eq!(binomial(5, 2), BigInt::from(10));
        assert_eq!(binomial(3, 4), BigInt::zero());
    }

    #[test]
    fn float_formatting_is_fixed_width() {
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt_f64(-2.0), "-2.0000000000000000e0");
        let exact = from_f64(0.1).unwrap();
        assert_eq!(to_f64(&exact), 0.1);
    }
}
