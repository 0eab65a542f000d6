//! Integer and rational helpers used across the crate.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Int = BigInt;
pub type Rat = BigRational;

pub fn int(v: i64) -> Int {
    Int::from(v)
}

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(Int::from(n), Int::from(d))
}

pub fn rat_int(n: &Int) -> Rat {
    Rat::from_integer(n.clone())
}

/// Least common multiple of the denominators of a slice of rationals.
pub fn common_den(v: &[Rat]) -> Int {
    v.iter().fold(Int::one(), |acc, x| acc.lcm(x.denom()))
}

pub fn to_i64(x: &Int) -> i64 {
    x.to_i64().expect("integer does not fit in 64 bits")
}

pub fn to_u64(x: &Int) -> u64 {
    x.to_u64().expect("integer does not fit in unsigned 64 bits")
}

/// Exponent of the prime `p` in the nonzero integer `n`.
pub fn valuation(n: &Int, p: u64) -> u32 {
    assert!(!n.is_zero(), "valuation of zero");
    let p = Int::from(p);
    let mut n = n.abs();
    let mut v = 0;
    while (&n % &p).is_zero() {
        n /= &p;
        v += 1;
    }
    v
}

/// p-adic valuation of a nonzero rational.
pub fn valuation_rat(x: &Rat, p: u64) -> i64 {
    valuation(x.numer(), p) as i64 - valuation(x.denom(), p) as i64
}

/// Trial-division factorization of a positive integer.
pub fn factor(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn prime_divisors(n: u64) -> Vec<u64> {
    factor(n).into_iter().map(|(p, _)| p).collect()
}

pub fn is_prime(n: u64) -> bool {
    n >= 2 && factor(n) == vec![(n, 1)]
}

pub fn is_squarefree(n: u64) -> bool {
    n >= 1 && factor(n).iter().all(|&(_, e)| e == 1)
}

/// Factorization of |n| for a big integer small enough for trial division.
pub fn factor_int(n: &Int) -> Vec<(u64, u32)> {
    factor(to_u64(&n.abs()))
}

/// Squarefree integer in the square class of the nonzero rational `x`.
pub fn squarefree_class(x: &Rat) -> Int {
    assert!(!x.is_zero());
    let v = x.numer() * x.denom();
    let sign = if v.is_negative() { -1i64 } else { 1 };
    let mut out = 1u64;
    for (p, e) in factor_int(&v) {
        if e % 2 == 1 {
            out *= p;
        }
    }
    Int::from(sign) * Int::from(out)
}

pub fn pow_mod(b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1u128 % m as u128;
    let mut bb = (b % m) as u128;
    while e > 0 {
        if e & 1 == 1 {
            r = r * bb % m as u128;
        }
        bb = bb * bb % m as u128;
        e >>= 1;
    }
    r as u64
}

/// Inverse of `a` modulo the prime `p`.
pub fn inv_mod(a: u64, p: u64) -> u64 {
    let a = a % p;
    assert!(a != 0, "inverse of zero mod {p}");
    pow_mod(a, p - 2, p)
}

/// Reduction of a rational with denominator prime to `p` into `[0, p)`.
pub fn rat_mod_p(x: &Rat, p: u64) -> u64 {
    let pi = Int::from(p);
    let n = x.numer().mod_floor(&pi);
    let d = x.denom().mod_floor(&pi);
    assert!(!d.is_zero(), "denominator divisible by {p}");
    (to_u64(&n) * inv_mod(to_u64(&d), p)) % p
}

/// Kronecker symbol (d / n) for n > 0.
pub fn kronecker(d: i64, n: u64) -> i32 {
    let mut result = 1i32;
    let mut n = n;
    if n == 0 {
        return if d == 1 || d == -1 { 1 } else { 0 };
    }
    let mut tz = 0;
    while n % 2 == 0 {
        n /= 2;
        tz += 1;
    }
    if tz > 0 {
        if d % 2 == 0 {
            return 0;
        }
        let r = d.rem_euclid(8);
        if tz % 2 == 1 && (r == 3 || r == 5) {
            result = -result;
        }
    }
    // Jacobi symbol (d / n) with n odd.
    let mut a = d.rem_euclid(n as i64) as u64;
    let mut m = n;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if m % 8 == 3 || m % 8 == 5 {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut m);
        if a % 4 == 3 && m % 4 == 3 {
            result = -result;
        }
        a %= m;
    }
    if m == 1 {
        result
    } else {
        0
    }
}

/// Integer square root of a nonnegative big integer, if exact.
pub fn exact_sqrt(n: &Int) -> Option<Int> {
    if n.is_negative() {
        return None;
    }
    let r = n.sqrt();
    if &(&r * &r) == n {
        Some(r)
    } else {
        None
    }
}

/// Primes up to `n` inclusive.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    (2..=n).filter(|&k| is_prime(k)).collect()
}
