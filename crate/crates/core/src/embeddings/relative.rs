//! Relative position of two oriented optimal embeddings of the same R into
//! orders of the same algebra, measured by an ideal class of R.
//!
//! I is the oriented connecting ideal of (O1, O2): locally I_p = O1_p g_p
//! for any g_p with g_p O2_p g_p^-1 = O1_p respecting orientations. The
//! intertwiners H = {x in I : phi1(w) x = x phi2(w)} form a rank two
//! R-module whose class depends only on the isomorphism classes of the two
//! embeddings. When the local labels agree, the embeddings are isomorphic
//! exactly when H is principal.

use super::OptimalEmbedding;
use crate::core_algebra::arith::{prime_divisors, valuation_rat, Int, Rat};
use crate::core_algebra::{QuatAlgebra, QuatElement};
use crate::error::{breach, pre, Error, Result};
use crate::lattices::matrix::{left_kernel, rat_mul};
use crate::lattices::ZLattice;
use crate::orders::ideals::{lattice_norm, lattice_product, mult_rows};
use crate::orders::{atkin_lehner_order, OrientedEichlerOrder};
use crate::quad::{reduce, Form};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// Maximal order obtained by replacing O at each p | N with the chosen
/// superorder (`other` picks the second maximal order containing O_p).
fn glued_maximal(o: &OrientedEichlerOrder, other: bool) -> Result<ZLattice> {
    let mut m = o.order.lat.clone();
    for (&p, sup) in &o.supers {
        let s = if other {
            atkin_lehner_order(o, p)?
                .supers
                .get(&p)
                .cloned()
                .ok_or_else(|| Error::Invariant(format!("no superorder at {p} after w_{p}")))?
        } else {
            sup.clone()
        };
        m = m.sum(&s);
    }
    Ok(m)
}

/// +1 when the orientations of o1 and o2 agree at p | D, -1 when they differ
/// by Frobenius.
fn orientation_sign(o1: &OrientedEichlerOrder, o2: &OrientedEichlerOrder, p: u64) -> Result<i32> {
    let common = o1.order.lat.intersect(&o2.order.lat);
    let f = crate::core_algebra::fp2::Fp2Field::new(p);
    let (mut same, mut frob) = (true, true);
    for b in common.basis() {
        let x = QuatElement::from_rats(&b);
        let (a, c) = (o1.char_value(p, &x)?, o2.char_value(p, &x)?);
        same &= a == c;
        frob &= f.frob(a) == c;
    }
    match (same, frob) {
        (true, _) => Ok(1),
        (false, true) => Ok(-1),
        _ => breach(format!("orientations at {p} are not related by Frobenius")),
    }
}

/// The oriented connecting ideal of (o1, o2), up to scaling by Q^x.
pub fn oriented_connecting_ideal(o1: &OrientedEichlerOrder, o2: &OrientedEichlerOrder) -> Result<ZLattice> {
    let alg = o1.alg();
    if alg != o2.alg() || o1.disc() != o2.disc() || o1.level() != o2.level() {
        return pre("orders of different type or in different algebras");
    }
    let l1 = lattice_product(alg, &glued_maximal(o1, false)?, &glued_maximal(o2, false)?);
    let l2 = lattice_product(alg, &glued_maximal(o1, true)?, &glued_maximal(o2, true)?);
    let (n1, n2) = (lattice_norm(alg, &l1), lattice_norm(alg, &l2));
    let (mut s1, mut s2) = (Rat::one(), Rat::one());
    for p in prime_divisors(o1.level()) {
        let (d1, d2) = (valuation_rat(&n1, p), valuation_rat(&n2, p));
        if (d1 - d2) % 2 != 0 {
            return breach(format!("connecting ideals at {p} have norms of different parity"));
        }
        let m = d1.max(d2);
        let pp = Rat::from_integer(Int::from(p));
        s1 *= num_traits::pow(pp.clone(), ((m - d1) / 2) as usize);
        s2 *= num_traits::pow(pp, ((m - d2) / 2) as usize);
    }
    let mut i = l1.scale(&s1).intersect(&l2.scale(&s2));
    for p in prime_divisors(o1.disc()) {
        if orientation_sign(o1, o2, p)? < 0 {
            i = lattice_product(alg, &o1.order.trace_radical(p), &i);
        }
    }
    Ok(i)
}

/// Basis of {x in L : a x = x b}.
fn intertwiners(alg: &QuatAlgebra, l: &ZLattice, a: &QuatElement, b: &QuatElement) -> Result<Vec<QuatElement>> {
    let la = mult_rows(alg, a, true);
    let rb = mult_rows(alg, b, false);
    let diff: Vec<Vec<Rat>> = la.iter().zip(&rb).map(|(x, y)| x.iter().zip(y).map(|(u, v)| u - v).collect()).collect();
    let rows = rat_mul(&l.basis(), &diff);
    let den = rows.iter().flatten().fold(Int::one(), |acc, x| acc.lcm(x.denom()));
    let irows: Vec<Vec<Int>> = rows
        .iter()
        .map(|r| r.iter().map(|x| (x * Rat::from_integer(den.clone())).to_integer()).collect())
        .collect();
    let ker = left_kernel(&irows, 4);
    let basis = l.basis();
    Ok(ker
        .iter()
        .filter(|c| c.iter().any(|x| !x.is_zero()))
        .map(|c| {
            let v: Vec<Rat> = (0..4)
                .map(|j| (0..basis.len()).map(|i| Rat::from_integer(c[i].clone()) * &basis[i][j]).sum())
                .collect();
            QuatElement::from_rats(&v)
        })
        .collect())
}

/// Class of the R-module spanned by x1, x2, where R acts by left
/// multiplication with w = phi(omega).
fn module_class(alg: &QuatAlgebra, e: &OptimalEmbedding, x1: &QuatElement, x2: &QuatElement) -> Result<Form> {
    let u = x1.coeffs();
    let v = alg.mul(&e.image, x1).coeffs();
    let w = x2.coeffs();
    // x2 = a x1 + b w x1
    let mut sol = None;
    'outer: for i in 0..4 {
        for j in i + 1..4 {
            let det = &u[i] * &v[j] - &u[j] * &v[i];
            if !det.is_zero() {
                let a = (&w[i] * &v[j] - &w[j] * &v[i]) / &det;
                let b = (&u[i] * &w[j] - &u[j] * &w[i]) / &det;
                sol = Some((a, b));
                break 'outer;
            }
        }
    }
    let (mut a, mut b) = sol.ok_or_else(|| Error::Invariant("intertwiner is zero".into()))?;
    if (0..4).any(|k| &a * &u[k] + &b * &v[k] != w[k]) || b.is_zero() {
        return breach("intertwiners do not span an R-module of rank one over K");
    }
    if b.is_negative() {
        a = -a;
        b = -b;
    }
    // N(s + t k) for k = a + b omega
    let (t, n) = (Rat::from_integer(Int::from(e.r.t)), Rat::from_integer(Int::from(e.r.n)));
    let coeffs = [Rat::one(), Rat::from_integer(Int::from(2)) * &a + &t * &b, &a * &a + &t * &a * &b + &n * &b * &b];
    let den = coeffs.iter().fold(Int::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<Int> = coeffs.iter().map(|x| (x * Rat::from_integer(den.clone())).to_integer()).collect();
    let g = ints.iter().fold(Int::zero(), |acc, x| acc.gcd(x));
    let to = |x: &Int| -> Result<i64> {
        num_traits::ToPrimitive::to_i64(&(x / &g)).ok_or_else(|| Error::Invariant("form coefficient overflow".into()))
    };
    let f = Form { a: to(&ints[0])?, b: to(&ints[1])?, c: to(&ints[2])? };
    if f.b * f.b - 4 * f.a * f.c != e.r.disc {
        return breach(format!("intertwiner module has discriminant {}", f.b * f.b - 4 * f.a * f.c));
    }
    Ok(reduce(f))
}

/// Ideal class of R measuring the position of e1 relative to e2.
pub fn relative_class(e1: &OptimalEmbedding, e2: &OptimalEmbedding) -> Result<Form> {
    if e1.r != e2.r {
        return pre("embeddings of different quadratic orders");
    }
    let alg = e1.target.alg();
    let i = oriented_connecting_ideal(&e1.target, &e2.target)?;
    let h = intertwiners(alg, &i, &e1.image, &e2.image)?;
    if h.len() != 2 {
        return breach(format!("intertwiner lattice has rank {}", h.len()));
    }
    module_class(alg, e1, &h[0], &h[1])
}
