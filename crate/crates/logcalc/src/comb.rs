//! Combinatorial kernels: generalized binomials, the two sides of the
//! log-Taylor combinatorial identity, and Pascal matrices with their inverses.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use crate::matrix::Matrix;
use crate::scalar::Scalar;

pub fn factorial(n: u64) -> BigInt {
    let mut acc = BigInt::one();
    for k in 2..=n {
        acc *= BigInt::from(k);
    }
    acc
}

pub fn factorial_scalar(n: u64) -> Scalar {
    Scalar::new(BigRational::from_integer(factorial(n)), BigRational::from_integer(BigInt::from(0)))
}

/// Generalized binomial coefficient `lambda (lambda-1) ... (lambda-n+1) / n!`.
pub fn gbinom(lambda: &Scalar, n: u64) -> Scalar {
    let mut num = Scalar::one();
    for k in 0..n {
        num = &num * &(lambda - &Scalar::from_int(k as i64));
    }
    &num / &factorial_scalar(n)
}

/// Binomial coefficient with an integer (possibly negative) top argument;
/// memoized, since the delta-function assemblers request the same values
/// millions of times.
pub fn binom_i(n: i64, k: u64) -> Scalar {
    thread_local! {
        static CACHE: std::cell::RefCell<std::collections::HashMap<(i64, u64), Scalar>> =
            std::cell::RefCell::new(std::collections::HashMap::new());
    }
    CACHE.with(|c| {
        if let Some(hit) = c.borrow().get(&(n, k)) {
            return hit.clone();
        }
        let val = gbinom(&Scalar::from_int(n), k);
        c.borrow_mut().insert((n, k), val.clone());
        val
    })
}

/// The two sides of the combinatorial identity behind the logarithmic
/// Taylor theorem, computed by direct enumeration.
///
/// First component: `(j!/k!) * sum over 0 < t_1 < ... < t_{k-j} < k of t_1 ... t_{k-j}`.
/// Second component: `sum over i_1 + ... + i_j = k, i_m >= 1 of 1/(i_1 ... i_j)`.
pub fn lubell_pair(k: u64, j: u64) -> (Scalar, Scalar) {
    assert!(j <= k, "lubell_pair requires 0 <= j <= k");
    (lubell_lhs(k, j), lubell_rhs(k, j))
}

fn lubell_lhs(k: u64, j: u64) -> Scalar {
    let picks = (k - j) as usize;
    // sum of products over strictly increasing tuples from {1, ..., k-1}
    fn go(next: u64, max_excl: u64, left: usize, prod: &Scalar, acc: &mut Scalar) {
        if left == 0 {
            *acc = &*acc + prod;
            return;
        }
        for t in next..max_excl {
            let p = prod * &Scalar::from_int(t as i64);
            go(t + 1, max_excl, left - 1, &p, acc);
        }
    }
    let mut sum = Scalar::zero();
    go(1, k, picks, &Scalar::one(), &mut sum);
    let ratio = &factorial_scalar(j) / &factorial_scalar(k);
    &ratio * &sum
}

fn lubell_rhs(k: u64, j: u64) -> Scalar {
    // sum over compositions of k into exactly j positive parts of 1/(product)
    fn go(remaining: u64, parts: u64, inv_prod: &Scalar, acc: &mut Scalar) {
        if parts == 0 {
            if remaining == 0 {
                *acc = &*acc + inv_prod;
            }
            return;
        }
        // each remaining part is at least 1
        for first in 1..=(remaining + 1 - parts) {
            let p = inv_prod / &Scalar::from_int(first as i64);
            go(remaining - first, parts - 1, &p, acc);
        }
    }
    if j == 0 {
        return if k == 0 { Scalar::one() } else { Scalar::zero() };
    }
    let mut sum = Scalar::zero();
    go(k, j, &Scalar::one(), &mut sum);
    sum
}

/// Upper triangular Pascal matrix: entry (i, j) is `binom(j-1, i-1)` (1-indexed).
pub fn pascal(k: usize) -> Matrix<Scalar> {
    assert!(k >= 1);
    Matrix::from_fn(k, k, |i, j| binom_i(j as i64, i as u64))
}

/// Inverse Pascal matrix: entry (i, j) is `(-1)^{i+j} binom(j-1, i-1)` (1-indexed).
pub fn pascal_inv(k: usize) -> Matrix<Scalar> {
    assert!(k >= 1);
    Matrix::from_fn(k, k, |i, j| {
        let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
        &Scalar::from_int(sign) * &binom_i(j as i64, i as u64)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gbinom_basics() {
        // empty product
        assert_eq!(gbinom(&Scalar::from_frac(7, 3), 0), Scalar::one());
        // gbinom(-1, m) = (-1)^m, frozen from expanding the falling factorial
        for m in 0..8u64 {
            let expect = Scalar::from_int(if m % 2 == 0 { 1 } else { -1 });
            assert_eq!(gbinom(&Scalar::from_int(-1), m), expect);
        }
        // (1/2)(−1/2)/2 = −1/8
        assert_eq!(gbinom(&Scalar::from_frac(1, 2), 2), Scalar::from_frac(-1, 8));
        // vanishing above an integer top argument
        for m in 0..6i64 {
            for n in (m as u64 + 1)..8 {
                assert_eq!(gbinom(&Scalar::from_int(m), n), Scalar::zero());
            }
        }
    }

    #[test]
    fn gbinom_pascal_recurrence() {
        // gbinom(l, n) = gbinom(l-1, n) + gbinom(l-1, n-1)
        let l = Scalar::gauss(3, 7, 1, 2);
        let lm1 = &l - &Scalar::one();
        for n in 1..10u64 {
            let lhs = gbinom(&l, n);
            let rhs = &gbinom(&lm1, n) + &gbinom(&lm1, n - 1);
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn lubell_small_cases() {
        // values frozen from enumerating both sums by hand
        assert_eq!(lubell_pair(0, 0), (Scalar::one(), Scalar::one()));
        assert_eq!(lubell_pair(3, 3), (Scalar::one(), Scalar::one()));
        assert_eq!(
            lubell_pair(2, 1),
            (Scalar::from_frac(1, 2), Scalar::from_frac(1, 2))
        );
        assert_eq!(lubell_pair(3, 2), (Scalar::one(), Scalar::one()));
        // k=4, j=2: lhs = (2/24)(1*2 + 1*3 + 2*3) = 11/12
        assert_eq!(
            lubell_pair(4, 2),
            (Scalar::from_frac(11, 12), Scalar::from_frac(11, 12))
        );
    }

    #[test]
    fn lubell_identity_up_to_ten() {
        for k in 0..=10u64 {
            for j in 0..=k {
                let (lhs, rhs) = lubell_pair(k, j);
                assert_eq!(lhs, rhs, "lubell identity failed at k={k}, j={j}");
            }
        }
    }

    #[test]
    fn pascal_k3_matches_binomials() {
        let p = pascal(3);
        let expect = [[1, 1, 1], [0, 1, 2], [0, 0, 1]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(p.get(i, j), &Scalar::from_int(expect[i][j]));
            }
        }
    }

    #[test]
    fn pascal_inversion() {
        for k in 1..=8 {
            let p = pascal(k);
            let q = pascal_inv(k);
            assert_eq!(p.mul(&q), Matrix::identity(k));
            assert_eq!(q.mul(&p), Matrix::identity(k));
        }
    }
}
