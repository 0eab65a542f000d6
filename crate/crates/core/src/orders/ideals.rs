//! Lattice arithmetic inside a quaternion algebra: products, left and right
//! orders, colon lattices, norms and inverses of ideals.

use crate::core_algebra::arith::{Int, Rat};
use crate::core_algebra::{QuatAlgebra, QuatElement};
use crate::error::Result;
use crate::lattices::enumerate::for_each_close_vector;
use crate::lattices::matrix::{rat_inverse, rat_mul, QMat};
use crate::lattices::ZLattice;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub fn elements(l: &ZLattice) -> Vec<QuatElement> {
    l.basis().iter().map(|b| QuatElement::from_rats(b)).collect()
}

pub fn lattice_of(gens: &[QuatElement]) -> Result<ZLattice> {
    let rows: Vec<Vec<Rat>> = gens.iter().map(|g| g.coeffs()).collect();
    ZLattice::from_rat_gens(&rows, 4)
}

/// Lattice spanned by all products x y with x in `a`, y in `b`.
pub fn lattice_product(alg: &QuatAlgebra, a: &ZLattice, b: &ZLattice) -> ZLattice {
    let ea = elements(a);
    let eb = elements(b);
    let mut gens = Vec::with_capacity(16);
    for x in &ea {
        for y in &eb {
            gens.push(alg.mul(x, y));
        }
    }
    lattice_of(&gens).expect("product of full-rank lattices")
}

/// Lattice spanned by x * l (or l * x when `right`).
pub fn lattice_times(alg: &QuatAlgebra, l: &ZLattice, x: &QuatElement, right: bool) -> Result<ZLattice> {
    let gens: Vec<QuatElement> = elements(l)
        .iter()
        .map(|b| if right { alg.mul(b, x) } else { alg.mul(x, b) })
        .collect();
    lattice_of(&gens)
}

/// Rows c of the matrix are coefficient vectors of b * e_c (left) or
/// e_c * b (right), so that x M = coeffs(b x) resp. coeffs(x b).
pub fn mult_rows(alg: &QuatAlgebra, b: &QuatElement, left: bool) -> QMat {
    (0..4)
        .map(|c| {
            let e = QuatElement::unit(c);
            if left { alg.mul(b, &e) } else { alg.mul(&e, b) }.coeffs()
        })
        .collect()
}

/// {x : a x is contained in b}.
pub fn right_colon(alg: &QuatAlgebra, a: &ZLattice, b: &ZLattice) -> ZLattice {
    let binv = rat_inverse(&b.basis()).expect("full rank");
    let maps: Vec<QMat> = elements(a)
        .iter()
        .map(|g| rat_mul(&mult_rows(alg, g, true), &binv))
        .collect();
    ZLattice::preimage(&maps, 4).expect("colon of full-rank lattices")
}

/// {x : x a is contained in b}.
pub fn left_colon(alg: &QuatAlgebra, a: &ZLattice, b: &ZLattice) -> ZLattice {
    let binv = rat_inverse(&b.basis()).expect("full rank");
    let maps: Vec<QMat> = elements(a)
        .iter()
        .map(|g| rat_mul(&mult_rows(alg, g, false), &binv))
        .collect();
    ZLattice::preimage(&maps, 4).expect("colon of full-rank lattices")
}

pub fn right_order_of(alg: &QuatAlgebra, l: &ZLattice) -> ZLattice {
    right_colon(alg, l, l)
}

pub fn left_order_of(alg: &QuatAlgebra, l: &ZLattice) -> ZLattice {
    left_colon(alg, l, l)
}

fn rat_gcd(a: &Rat, b: &Rat) -> Rat {
    if a.is_zero() {
        return b.abs();
    }
    if b.is_zero() {
        return a.abs();
    }
    let num = (a.numer() * b.denom()).gcd(&(b.numer() * a.denom()));
    Rat::new(num, a.denom() * b.denom())
}

/// Positive generator of the Z-module spanned by nrd(l).
pub fn lattice_norm(alg: &QuatAlgebra, l: &ZLattice) -> Rat {
    let e = elements(l);
    let mut g = Rat::zero();
    for i in 0..4 {
        g = rat_gcd(&g, &alg.nrd(&e[i]));
        for j in i + 1..4 {
            g = rat_gcd(&g, &alg.pairing(&e[i], &e[j]));
        }
    }
    g
}

pub fn conj_lattice(alg: &QuatAlgebra, l: &ZLattice) -> ZLattice {
    let gens: Vec<QuatElement> = elements(l).iter().map(|x| alg.conj(x)).collect();
    lattice_of(&gens).expect("conjugate lattice")
}

/// Inverse of a locally principal ideal: conj(I) / nrd(I).
pub fn inverse_ideal(alg: &QuatAlgebra, l: &ZLattice) -> ZLattice {
    let n = lattice_norm(alg, l);
    conj_lattice(alg, l).scale(&(Rat::one() / n))
}

/// Gram matrix of the positive definite form x0^2 + |a| x1^2 + |b| x2^2 +
/// |ab| x3^2 restricted to a lattice basis. It majorizes |nrd|.
pub fn majorant_gram(alg: &QuatAlgebra, l: &ZLattice) -> QMat {
    let w = [Rat::one(), alg.a.abs(), alg.b.abs(), (&alg.a * &alg.b).abs()];
    let b = l.basis();
    (0..4)
        .map(|i| {
            (0..4)
                .map(|j| (0..4).map(|c| &b[i][c] * &b[j][c] * &w[c]).sum())
                .collect()
        })
        .collect()
}

/// Walks lattice points in shells of increasing majorant and returns the
/// first one accepted by `pred`.
pub fn search_lattice<F: FnMut(&QuatElement) -> bool>(
    alg: &QuatAlgebra,
    l: &ZLattice,
    max_doublings: u32,
    mut pred: F,
) -> Option<QuatElement> {
    let g = majorant_gram(alg, l);
    let basis = l.basis();
    let mut b0 = g[0][0].clone();
    for (i, row) in g.iter().enumerate() {
        if row[i] < b0 {
            b0 = row[i].clone();
        }
    }
    let gf: Vec<Vec<f64>> = g.iter().map(|r| r.iter().map(|x| x.to_f64().unwrap()).collect()).collect();
    let mut found = None;
    let mut prev = -1.0f64;
    for k in 0..=max_doublings {
        let bound = &b0 * Rat::from_integer(Int::one() << k as usize);
        let bf = bound.to_f64().unwrap();
        for_each_close_vector(&g, None, &bound, |v| {
            if v.iter().all(|&x| x == 0) {
                return true;
            }
            let mut val = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    val += gf[i][j] * v[i] as f64 * v[j] as f64;
                }
            }
            if val < prev * (1.0 - 1e-9) {
                return true;
            }
            let mut x = vec![Rat::zero(); 4];
            for (c, b) in v.iter().zip(&basis) {
                if *c != 0 {
                    let cr = Rat::from_integer(Int::from(*c));
                    for t in 0..4 {
                        x[t] += &cr * &b[t];
                    }
                }
            }
            let e = QuatElement::from_rats(&x);
            if pred(&e) {
                found = Some(e);
                return false;
            }
            true
        });
        if found.is_some() {
            return found;
        }
        prev = bf;
    }
    None
}
