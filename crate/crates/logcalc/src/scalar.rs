//! Exact Gaussian-rational scalars.
//!
//! A [`Scalar`] is a number `re + im*i` with both parts arbitrary-precision
//! rationals. Equality is exact, arithmetic is closed, and division is
//! defined for nonzero values. Scalars serialize as `a/b+c/d*i` with reduced
//! fractions.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::CalcError;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Scalar {
    pub re: BigRational,
    pub im: BigRational,
}

impl Scalar {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        Scalar { re, im }
    }

    pub fn zero() -> Self {
        Scalar::new(BigRational::zero(), BigRational::zero())
    }

    pub fn one() -> Self {
        Scalar::new(BigRational::one(), BigRational::zero())
    }

    pub fn i() -> Self {
        Scalar::new(BigRational::zero(), BigRational::one())
    }

    pub fn from_int(n: i64) -> Self {
        Scalar::new(BigRational::from_integer(BigInt::from(n)), BigRational::zero())
    }

    pub fn from_frac(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Scalar::new(
            BigRational::new(BigInt::from(num), BigInt::from(den)),
            BigRational::zero(),
        )
    }

    /// `num/den + inum/iden * i`
    pub fn gauss(num: i64, den: i64, inum: i64, iden: i64) -> Self {
        assert!(den != 0 && iden != 0, "zero denominator");
        Scalar::new(
            BigRational::new(BigInt::from(num), BigInt::from(den)),
            BigRational::new(BigInt::from(inum), BigInt::from(iden)),
        )
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    /// True iff the value is a rational integer (Gaussian integer with zero imaginary part).
    pub fn is_integer(&self) -> bool {
        self.im.is_zero() && self.re.is_integer()
    }

    pub fn is_natural(&self) -> bool {
        self.is_integer() && !self.re.is_negative()
    }

    pub fn to_i64(&self) -> Option<i64> {
        if !self.is_integer() {
            return None;
        }
        let n = self.re.to_integer();
        i64::try_from(&n).ok()
    }

    pub fn conj(&self) -> Self {
        Scalar::new(self.re.clone(), -self.im.clone())
    }

    /// Squared absolute value, a nonnegative rational.
    pub fn norm_sqr(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn inv(&self) -> Result<Self, CalcError> {
        if self.is_zero() {
            return Err(CalcError::DivisionByZero);
        }
        let n = self.norm_sqr();
        Ok(Scalar::new(&self.re / &n, -(&self.im / &n)))
    }

    /// `self^k` for any integer k (negative powers require self nonzero).
    pub fn powi(&self, k: i64) -> Result<Self, CalcError> {
        if k == 0 {
            return Ok(Scalar::one());
        }
        let base = if k < 0 { self.inv()? } else { self.clone() };
        let mut acc = Scalar::one();
        for _ in 0..k.unsigned_abs() {
            acc = &acc * &base;
        }
        Ok(acc)
    }

    /// `self^k` for a natural power.
    pub fn pow(&self, k: u64) -> Self {
        let mut acc = Scalar::one();
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// The fractional residue of the real part modulo 1, mapped into [0, 1),
    /// together with the integer offset: `self = residue + offset` when the
    /// value is real rational; complex values keep their imaginary part in
    /// the residue.
    pub fn coset_split(&self) -> (Scalar, i64) {
        let fl = self.re.floor();
        let frac = &self.re - &fl;
        let off = i64::try_from(&fl.to_integer()).expect("exponent offset fits in i64");
        (Scalar::new(frac, self.im.clone()), off)
    }

    /// e^{2*pi*i*q} for rational real q with 4q integral; values land in {1, i, -1, -i}.
    pub fn quarter_phase(q: &Scalar) -> Result<Scalar, CalcError> {
        if !q.is_real() {
            return Err(CalcError::ExactnessViolation(format!(
                "phase exponent {q} is not real rational"
            )));
        }
        let four_q = &Scalar::from_int(4) * q;
        match four_q.to_i64() {
            Some(k) => Ok(match k.rem_euclid(4) {
                0 => Scalar::one(),
                1 => Scalar::i(),
                2 => -&Scalar::one(),
                3 => -&Scalar::i(),
                _ => unreachable!(),
            }),
            None => Err(CalcError::ExactnessViolation(format!(
                "phase e^(2*pi*i*{q}) is not a fourth root of unity"
            ))),
        }
    }

    pub fn to_complex(&self) -> num_complex::Complex64 {
        fn r2f(r: &BigRational) -> f64 {
            let n = r.numer();
            let d = r.denom();
            // good enough for the tolerances used in approximate mode
            let nf: f64 = n.to_string().parse().unwrap_or(f64::NAN);
            let df: f64 = d.to_string().parse().unwrap_or(f64::NAN);
            nf / df
        }
        num_complex::Complex64::new(r2f(&self.re), r2f(&self.im))
    }
}

fn fmt_rat(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            return write!(f, "{}", fmt_rat(&self.re));
        }
        if self.re.is_zero() {
            return write!(f, "{}*i", fmt_rat(&self.im));
        }
        if self.im.is_negative() {
            write!(f, "{}-{}*i", fmt_rat(&self.re), fmt_rat(&-self.im.clone()))
        } else {
            write!(f, "{}+{}*i", fmt_rat(&self.re), fmt_rat(&self.im))
        }
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

fn parse_rat(s: &str) -> Result<BigRational, CalcError> {
    let s = s.trim();
    let bad = || CalcError::Parse(format!("malformed rational `{s}`"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(CalcError::Parse(format!("zero denominator in `{s}`")));
        }
        Ok(BigRational::new(n, d))
    } else {
        let n: BigInt = s.parse().map_err(|_| bad())?;
        Ok(BigRational::from_integer(n))
    }
}

impl std::str::FromStr for Scalar {
    type Err = CalcError;

    /// Accepts `a/b`, `a/b+c/d*i`, `a/b-c/d*i`, `c/d*i`, `i`, `-i`.
    fn from_str(s: &str) -> Result<Self, CalcError> {
        let s = s.trim().replace(' ', "");
        if s.is_empty() {
            return Err(CalcError::Parse("empty scalar".into()));
        }
        // split at the last +/- that is not the leading sign
        let bytes = s.as_bytes();
        let mut split = None;
        for (idx, &b) in bytes.iter().enumerate().skip(1) {
            if (b == b'+' || b == b'-') && bytes[idx - 1] != b'+' && bytes[idx - 1] != b'-' {
                split = Some(idx);
            }
        }
        let parse_im = |part: &str| -> Result<BigRational, CalcError> {
            let body = part
                .strip_suffix("*i")
                .or_else(|| part.strip_suffix('i'))
                .ok_or_else(|| CalcError::Parse(format!("expected imaginary part in `{part}`")))?;
            match body {
                "" | "+" => Ok(BigRational::one()),
                "-" => Ok(-BigRational::one()),
                _ => parse_rat(body),
            }
        };
        if s.ends_with('i') {
            match split {
                Some(idx) => {
                    let re = parse_rat(&s[..idx])?;
                    let sign = if bytes[idx] == b'-' { -1 } else { 1 };
                    let im = parse_im(&s[idx + 1..])?;
                    Ok(Scalar::new(re, im * BigRational::from_integer(BigInt::from(sign))))
                }
                None => Ok(Scalar::new(BigRational::zero(), parse_im(&s)?)),
            }
        } else {
            Ok(Scalar::new(parse_rat(&s)?, BigRational::zero()))
        }
    }
}

macro_rules! scalar_binop {
    ($trait:ident, $method:ident, |$a:ident, $b:ident| $body:expr) => {
        impl<'a, 'b> $trait<&'b Scalar> for &'a Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &'b Scalar) -> Scalar {
                let $a = self;
                let $b = rhs;
                $body
            }
        }
        impl $trait<Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                $trait::$method(&self, &rhs)
            }
        }
        impl<'b> $trait<&'b Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &'b Scalar) -> Scalar {
                $trait::$method(&self, rhs)
            }
        }
    };
}

scalar_binop!(Add, add, |a, b| Scalar::new(&a.re + &b.re, &a.im + &b.im));
scalar_binop!(Sub, sub, |a, b| Scalar::new(&a.re - &b.re, &a.im - &b.im));
scalar_binop!(Mul, mul, |a, b| Scalar::new(
    &a.re * &b.re - &a.im * &b.im,
    &a.re * &b.im + &a.im * &b.re
));

impl<'a, 'b> Div<&'b Scalar> for &'a Scalar {
    type Output = Scalar;
    fn div(self, rhs: &'b Scalar) -> Scalar {
        self * &rhs.inv().expect("division by zero scalar")
    }
}
impl Div<Scalar> for Scalar {
    type Output = Scalar;
    fn div(self, rhs: Scalar) -> Scalar {
        &self / &rhs
    }
}

impl<'a> Neg for &'a Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar::new(-self.re.clone(), -self.im.clone())
    }
}
impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

impl num_traits::Zero for Scalar {
    fn zero() -> Self {
        Scalar::zero()
    }
    fn is_zero(&self) -> bool {
        Scalar::is_zero(self)
    }
}
impl num_traits::One for Scalar {
    fn one() -> Self {
        Scalar::one()
    }
}

/// Approximate complex scalar with a relative comparison tolerance.
#[derive(Clone, Copy, Debug)]
pub struct ApproxScalar {
    pub value: num_complex::Complex64,
    pub tol: f64,
}

impl ApproxScalar {
    pub fn new(value: num_complex::Complex64, tol: f64) -> Self {
        ApproxScalar { value, tol }
    }

    pub fn default_tol() -> f64 {
        1e-9
    }

    pub fn approx_eq(&self, other: &ApproxScalar) -> bool {
        let bound = self.tol.max(other.tol)
            * 1f64.max(self.value.norm()).max(other.value.norm());
        (self.value - other.value).norm() <= bound
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_ops_are_exact() {
        let a = Scalar::gauss(1, 2, -3, 4);
        let b = Scalar::gauss(2, 3, 1, 5);
        let prod = &a * &b;
        let back = &prod / &b;
        assert_eq!(back, a);
        assert_eq!(&a - &a, Scalar::zero());
        assert_eq!(&a + &-&a, Scalar::zero());
        assert_eq!(&a * &a.inv().unwrap(), Scalar::one());
    }

    #[test]
    fn integer_predicates() {
        assert!(Scalar::from_int(-7).is_integer());
        assert!(!Scalar::from_int(-7).is_natural());
        assert!(Scalar::from_int(0).is_natural());
        assert!(!Scalar::from_frac(1, 2).is_integer());
        assert!(!Scalar::i().is_integer());
    }

    #[test]
    fn display_round_trip() {
        for s in [
            Scalar::from_int(3),
            Scalar::from_frac(-1, 2),
            Scalar::gauss(1, 2, 1, 3),
            Scalar::gauss(0, 1, -5, 7),
            Scalar::gauss(-2, 1, -1, 1),
            Scalar::i(),
        ] {
            let text = s.to_string();
            let back: Scalar = text.parse().unwrap();
            assert_eq!(back, s, "round trip through `{text}`");
        }
    }

    #[test]
    fn quarter_phases() {
        assert_eq!(Scalar::quarter_phase(&Scalar::from_int(1)).unwrap(), Scalar::one());
        assert_eq!(
            Scalar::quarter_phase(&Scalar::from_frac(1, 2)).unwrap(),
            -&Scalar::one()
        );
        assert_eq!(Scalar::quarter_phase(&Scalar::from_frac(1, 4)).unwrap(), Scalar::i());
        assert_eq!(
            Scalar::quarter_phase(&Scalar::from_frac(-1, 4)).unwrap(),
            -&Scalar::i()
        );
        assert!(Scalar::quarter_phase(&Scalar::from_frac(1, 3)).is_err());
    }

    #[test]
    fn coset_split_splits() {
        let (res, off) = Scalar::from_frac(-3, 2).coset_split();
        assert_eq!(res, Scalar::from_frac(1, 2));
        assert_eq!(off, -2);
        let (res, off) = Scalar::from_int(5).coset_split();
        assert_eq!(res, Scalar::zero());
        assert_eq!(off, 5);
    }
}
