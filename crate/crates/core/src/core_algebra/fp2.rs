//! The finite field F_{p^2} modelled as F_p[x]/(f_p), where f_p is the
//! lexicographically least monic irreducible quadratic.

use super::arith::pow_mod;
use serde::Serialize;

/// An element u + v x of F_{p^2}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Fp2 {
    pub u: u64,
    pub v: u64,
}

/// Field data: x^2 + c1 x + c0 is the defining polynomial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fp2Field {
    pub p: u64,
    pub c1: u64,
    pub c0: u64,
}

impl Fp2Field {
    /// Scans (c1, c0) in lexicographic order and keeps the first
    /// polynomial x^2 + c1 x + c0 without roots in F_p.
    pub fn new(p: u64) -> Self {
        for c1 in 0..p {
            for c0 in 0..p {
                let has_root = (0..p).any(|t| (t * t + c1 * t + c0) % p == 0);
                if !has_root {
                    return Fp2Field { p, c1, c0 };
                }
            }
        }
        unreachable!("no irreducible quadratic mod {p}")
    }

    pub fn from_fp(&self, a: u64) -> Fp2 {
        Fp2 { u: a % self.p, v: 0 }
    }

    pub fn gen(&self) -> Fp2 {
        Fp2 { u: 0, v: 1 % self.p }
    }

    pub fn add(&self, a: Fp2, b: Fp2) -> Fp2 {
        Fp2 { u: (a.u + b.u) % self.p, v: (a.v + b.v) % self.p }
    }

    pub fn sub(&self, a: Fp2, b: Fp2) -> Fp2 {
        let p = self.p;
        Fp2 { u: (a.u + p - b.u) % p, v: (a.v + p - b.v) % p }
    }

    pub fn scale(&self, c: u64, a: Fp2) -> Fp2 {
        let p = self.p;
        Fp2 { u: (c % p) * a.u % p, v: (c % p) * a.v % p }
    }

    pub fn mul(&self, a: Fp2, b: Fp2) -> Fp2 {
        let p = self.p as u128;
        let (au, av, bu, bv) = (a.u as u128, a.v as u128, b.u as u128, b.v as u128);
        // x^2 = -c1 x - c0
        let xx = av * bv % p;
        let c1 = self.c1 as u128;
        let c0 = self.c0 as u128;
        let u = (au * bu + (p - c0 % p) * xx) % p;
        let v = (au * bv + av * bu + (p - c1 % p) * xx) % p;
        Fp2 { u: u as u64, v: v as u64 }
    }

    pub fn pow(&self, a: Fp2, mut e: u64) -> Fp2 {
        let mut r = self.from_fp(1);
        let mut b = a;
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, b);
            }
            b = self.mul(b, b);
            e >>= 1;
        }
        r
    }

    /// The Frobenius automorphism a -> a^p.
    pub fn frob(&self, a: Fp2) -> Fp2 {
        self.pow(a, self.p)
    }

    /// Roots in F_{p^2} of x^2 - t x + n, sorted by (v, u).
    pub fn roots(&self, t: u64, n: u64) -> Vec<Fp2> {
        let p = self.p;
        let mut out = Vec::new();
        for v in 0..p {
            for u in 0..p {
                let z = Fp2 { u, v };
                let val = self.add(
                    self.sub(self.mul(z, z), self.scale(t, z)),
                    self.from_fp(n),
                );
                if val == (Fp2 { u: 0, v: 0 }) {
                    out.push(z);
                }
            }
        }
        out
    }

    pub fn is_zero(&self, a: Fp2) -> bool {
        a.u == 0 && a.v == 0
    }

    /// Multiplicative inverse (a must be nonzero).
    pub fn inv(&self, a: Fp2) -> Fp2 {
        assert!(!self.is_zero(a));
        self.pow(a, self.p * self.p - 2)
    }
}

/// Legendre-style residuosity test used by unit tests of the field model.
pub fn is_square_mod(a: u64, p: u64) -> bool {
    a % p == 0 || p == 2 || pow_mod(a, (p - 1) / 2, p) == 1
}
