//! Polynomials in the two commuting formal symbols Λ (a chosen branch of
//! log z) and Π (the period 2πi), with Gaussian-rational coefficients.
//!
//! No relation between Λ and Π is imposed here; the exponential reductions
//! `e^{nΛ} -> z^n` and `e^{nΠ} -> 1` happen at substitution sites, not in
//! the ring.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::Zero;

use crate::error::CalcError;
use crate::scalar::Scalar;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct PolyScalar {
    /// (power of Λ, power of Π) -> coefficient; zero coefficients removed.
    terms: BTreeMap<(u32, u32), Scalar>,
}

impl PolyScalar {
    pub fn zero() -> Self {
        PolyScalar::default()
    }

    pub fn constant(c: Scalar) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert((0, 0), c);
        }
        PolyScalar { terms }
    }

    pub fn one() -> Self {
        PolyScalar::constant(Scalar::one())
    }

    pub fn from_int(n: i64) -> Self {
        PolyScalar::constant(Scalar::from_int(n))
    }

    /// The symbol Λ.
    pub fn lambda() -> Self {
        PolyScalar::monomial(1, 0, Scalar::one())
    }

    /// The symbol Π.
    pub fn pi() -> Self {
        PolyScalar::monomial(0, 1, Scalar::one())
    }

    pub fn monomial(lam: u32, pi: u32, c: Scalar) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert((lam, pi), c);
        }
        PolyScalar { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Numeric means degree zero in both symbols.
    pub fn is_numeric(&self) -> bool {
        self.terms.keys().all(|&(a, b)| a == 0 && b == 0)
    }

    pub fn as_numeric(&self) -> Option<Scalar> {
        if !self.is_numeric() {
            return None;
        }
        Some(
            self.terms
                .get(&(0, 0))
                .cloned()
                .unwrap_or_else(Scalar::zero),
        )
    }

    pub fn coeff(&self, lam: u32, pi: u32) -> Scalar {
        self.terms
            .get(&(lam, pi))
            .cloned()
            .unwrap_or_else(Scalar::zero)
    }

    pub fn degree_lambda(&self) -> u32 {
        self.terms.keys().map(|&(a, _)| a).max().unwrap_or(0)
    }

    pub fn degree_pi(&self) -> u32 {
        self.terms.keys().map(|&(_, b)| b).max().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(u32, u32), &Scalar)> {
        self.terms.iter()
    }

    fn insert_add(&mut self, key: (u32, u32), c: &Scalar) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(key).or_insert_with(Scalar::zero);
        *entry = &*entry + c;
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn scale(&self, s: &Scalar) -> Self {
        if s.is_zero() {
            return PolyScalar::zero();
        }
        PolyScalar {
            terms: self
                .terms
                .iter()
                .map(|(&k, c)| (k, c * s))
                .collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = PolyScalar::one();
        for _ in 0..k {
            acc = acc * self;
        }
        acc
    }

    /// Division by a numeric polynomial.
    pub fn div_numeric(&self, s: &Scalar) -> Result<Self, CalcError> {
        Ok(self.scale(&s.inv()?))
    }

    /// Substitute Λ -> lam, Π -> pi over the complex numbers.
    pub fn eval_complex(
        &self,
        lam: num_complex::Complex64,
        pi: num_complex::Complex64,
    ) -> num_complex::Complex64 {
        let mut acc = num_complex::Complex64::new(0.0, 0.0);
        for (&(a, b), c) in &self.terms {
            acc += c.to_complex() * lam.powu(a) * pi.powu(b);
        }
        acc
    }
}

impl From<Scalar> for PolyScalar {
    fn from(s: Scalar) -> Self {
        PolyScalar::constant(s)
    }
}

impl<'b> Add<&'b PolyScalar> for PolyScalar {
    type Output = PolyScalar;
    fn add(mut self, rhs: &'b PolyScalar) -> PolyScalar {
        for (&k, c) in &rhs.terms {
            self.insert_add(k, c);
        }
        self
    }
}

impl<'b> Sub<&'b PolyScalar> for PolyScalar {
    type Output = PolyScalar;
    fn sub(mut self, rhs: &'b PolyScalar) -> PolyScalar {
        for (&k, c) in &rhs.terms {
            self.insert_add(k, &-c.clone());
        }
        self
    }
}

impl<'b> Mul<&'b PolyScalar> for PolyScalar {
    type Output = PolyScalar;
    fn mul(self, rhs: &'b PolyScalar) -> PolyScalar {
        let mut out = PolyScalar::zero();
        for (&(a1, b1), c1) in &self.terms {
            for (&(a2, b2), c2) in &rhs.terms {
                out.insert_add((a1 + a2, b1 + b2), &(c1 * c2));
            }
        }
        out
    }
}

impl Add for PolyScalar {
    type Output = PolyScalar;
    fn add(self, rhs: PolyScalar) -> PolyScalar {
        self + &rhs
    }
}
impl Sub for PolyScalar {
    type Output = PolyScalar;
    fn sub(self, rhs: PolyScalar) -> PolyScalar {
        self - &rhs
    }
}
impl Mul for PolyScalar {
    type Output = PolyScalar;
    fn mul(self, rhs: PolyScalar) -> PolyScalar {
        self * &rhs
    }
}

impl Neg for PolyScalar {
    type Output = PolyScalar;
    fn neg(self) -> PolyScalar {
        PolyScalar {
            terms: self.terms.into_iter().map(|(k, c)| (k, -c)).collect(),
        }
    }
}

impl Zero for PolyScalar {
    fn zero() -> Self {
        PolyScalar::zero()
    }
    fn is_zero(&self) -> bool {
        PolyScalar::is_zero(self)
    }
}

impl num_traits::One for PolyScalar {
    fn one() -> Self {
        PolyScalar::one()
    }
}

impl fmt::Display for PolyScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&(a, b), c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})")?;
            if a > 0 {
                write!(f, "*Λ^{a}")?;
            }
            if b > 0 {
                write!(f, "*Π^{b}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for PolyScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_laws() {
        let p = PolyScalar::lambda() + &PolyScalar::constant(Scalar::from_int(2));
        let q = PolyScalar::pi() * &PolyScalar::pi() - &PolyScalar::one();
        let r = PolyScalar::monomial(1, 1, Scalar::from_frac(1, 2));
        let lhs = (p.clone() + &q) * &r;
        let rhs = p.clone() * &r + &(q.clone() * &r);
        assert_eq!(lhs, rhs);
        assert_eq!(p.clone() * &q, q * &p);
    }

    #[test]
    fn numeric_detection() {
        assert!(PolyScalar::constant(Scalar::from_int(5)).is_numeric());
        assert!(!PolyScalar::lambda().is_numeric());
        assert_eq!(
            PolyScalar::constant(Scalar::from_int(5)).as_numeric(),
            Some(Scalar::from_int(5))
        );
    }

    #[test]
    fn binomial_expansion_of_lp() {
        // (Λ + 2Π)^2 = Λ^2 + 4ΛΠ + 4Π^2
        let lp = PolyScalar::lambda() + &PolyScalar::pi().scale(&Scalar::from_int(2));
        let sq = lp.pow(2);
        assert_eq!(sq.coeff(2, 0), Scalar::from_int(1));
        assert_eq!(sq.coeff(1, 1), Scalar::from_int(4));
        assert_eq!(sq.coeff(0, 2), Scalar::from_int(4));
    }
}
