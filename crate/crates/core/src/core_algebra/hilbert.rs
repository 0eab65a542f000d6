//! Hilbert symbols and ramification of quaternion algebras over Q.

use super::arith::{factor_int, kronecker, squarefree_class, to_i64, valuation, Int, Rat};
use crate::error::{Error, Result};
use num_traits::{Signed, Zero};
use std::fmt;

/// A place of Q.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Place {
    Prime(u64),
    Infinity,
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Place::Prime(p) => write!(f, "{p}"),
            Place::Infinity => write!(f, "inf"),
        }
    }
}

/// Hilbert symbol (a, b)_v of two nonzero rationals.
///
/// At 2 the symbol is decided by an exhaustive search for a primitive
/// solution of a x^2 + b y^2 = z^2 modulo 2^6 that passes a Hensel lifting
/// test. At odd primes the classical Legendre-symbol formula is used.
pub fn hilbert_symbol(a: &Rat, b: &Rat, place: Place) -> Result<i32> {
    if a.is_zero() || b.is_zero() {
        return Err(Error::Domain("Hilbert symbol of zero".into()));
    }
    let a = squarefree_class(a);
    let b = squarefree_class(b);
    Ok(match place {
        Place::Infinity => {
            if a.is_negative() && b.is_negative() {
                -1
            } else {
                1
            }
        }
        Place::Prime(2) => hilbert_at_two(&a, &b),
        Place::Prime(p) => hilbert_odd(&a, &b, p),
    })
}

fn hilbert_odd(a: &Int, b: &Int, p: u64) -> i32 {
    let alpha = valuation(a, p);
    let beta = valuation(b, p);
    let pi = Int::from(p);
    let u = to_i64(&(a / pi.pow(alpha)));
    let v = to_i64(&(b / pi.pow(beta)));
    let mut s = 1i32;
    if alpha % 2 == 1 && beta % 2 == 1 && (p - 1) / 2 % 2 == 1 {
        s = -s;
    }
    if beta % 2 == 1 {
        s *= kronecker(u, p);
    }
    if alpha % 2 == 1 {
        s *= kronecker(v, p);
    }
    s
}

fn hilbert_at_two(a: &Int, b: &Int) -> i32 {
    const K: u32 = 6;
    let m: i64 = 1 << K;
    let ar = to_i64(&(a % Int::from(m)));
    let br = to_i64(&(b % Int::from(m)));
    let va = valuation(a, 2) as i64;
    let vb = valuation(b, 2) as i64;
    let v2 = |n: i64| -> i64 {
        if n == 0 {
            i64::MAX
        } else {
            n.trailing_zeros() as i64
        }
    };
    for x in 0..m {
        for y in 0..m {
            let q = (ar * x * x + br * y * y).rem_euclid(m);
            for z in 0..m {
                if x % 2 == 0 && y % 2 == 0 && z % 2 == 0 {
                    continue;
                }
                let f = (q - z * z).rem_euclid(m);
                let vf = v2(f).min(K as i64);
                // one-variable Hensel lifting in some coordinate
                let ex = if x == 0 { i64::MAX } else { 1 + va + v2(x) };
                let ey = if y == 0 { i64::MAX } else { 1 + vb + v2(y) };
                let ez = if z == 0 { i64::MAX } else { 1 + v2(z) };
                let e = ex.min(ey).min(ez);
                if e < i64::MAX && 2 * e < K as i64 && vf >= 2 * e + 1 {
                    return 1;
                }
            }
        }
    }
    -1
}

/// Places where the algebra (a, b)_Q ramifies, sorted with infinity last.
pub fn ramified_places(a: &Rat, b: &Rat) -> Result<Vec<Place>> {
    if a.is_zero() || b.is_zero() {
        return Err(Error::Domain("quaternion algebra with zero structure constant".into()));
    }
    let sa = squarefree_class(a);
    let sb = squarefree_class(b);
    let mut cands: Vec<u64> = vec![2];
    for n in [&sa, &sb] {
        for (p, _) in factor_int(n) {
            if !cands.contains(&p) {
                cands.push(p);
            }
        }
    }
    cands.sort_unstable();
    let mut out = Vec::new();
    for p in cands {
        if hilbert_symbol(a, b, Place::Prime(p))? == -1 {
            out.push(Place::Prime(p));
        }
    }
    if hilbert_symbol(a, b, Place::Infinity)? == -1 {
        out.push(Place::Infinity);
    }
    Ok(out)
}
