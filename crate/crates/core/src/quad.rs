//! Imaginary quadratic orders, their class groups via reduced binary
//! quadratic forms, and the form-to-ideal dictionary.

use crate::core_algebra::arith::{is_squarefree, to_i64, Int};
use crate::lattices::matrix::hnf;
use crate::error::{Error, Result};
use num_integer::Integer;
use serde::Serialize;

/// Order of discriminant c^2 d_K; omega is a root of x^2 - t x + n with
/// t in {0, 1}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct QuadOrder {
    pub dk: i64,
    pub c: u64,
    pub disc: i64,
    pub t: i64,
    pub n: i64,
}

pub fn is_fundamental(d: i64) -> bool {
    if d >= 0 {
        return false;
    }
    let m = d.unsigned_abs();
    match d.rem_euclid(4) {
        1 => is_squarefree(m),
        0 => {
            let q = d / 4;
            matches!(q.rem_euclid(4), 2 | 3) && is_squarefree(q.unsigned_abs())
        }
        _ => false,
    }
}

impl QuadOrder {
    pub fn new(dk: i64, c: u64) -> Result<Self> {
        if !is_fundamental(dk) {
            return Err(Error::Domain(format!("{dk} is not a negative fundamental discriminant")));
        }
        if c == 0 {
            return Err(Error::Domain("conductor must be positive".into()));
        }
        let disc = dk * (c * c) as i64;
        let t = disc.rem_euclid(2);
        let n = (t * t - disc) / 4;
        Ok(QuadOrder { dk, c, disc, t, n })
    }

    pub fn class_group(&self) -> Vec<Form> {
        class_group(self.disc)
    }

    pub fn class_number(&self) -> usize {
        self.class_group().len()
    }

    /// Number of units of R.
    pub fn unit_count(&self) -> u64 {
        match self.disc {
            -3 => 6,
            -4 => 4,
            _ => 2,
        }
    }

    /// Product of two elements x + y omega.
    pub fn mul(&self, a: (i64, i64), b: (i64, i64)) -> (i64, i64) {
        let (x1, y1) = a;
        let (x2, y2) = b;
        let yy = y1 * y2;
        (x1 * x2 - yy * self.n, x1 * y2 + x2 * y1 + yy * self.t)
    }

    pub fn conj(&self, a: (i64, i64)) -> (i64, i64) {
        (a.0 + a.1 * self.t, -a.1)
    }

    pub fn norm(&self, a: (i64, i64)) -> i64 {
        a.0 * a.0 + self.t * a.0 * a.1 + self.n * a.1 * a.1
    }
}

/// Primitive positive definite form A x^2 + B x y + C y^2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Form {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl Form {
    pub fn disc(&self) -> i64 {
        self.b * self.b - 4 * self.a * self.c
    }

    pub fn identity(disc: i64) -> Form {
        let t = disc.rem_euclid(2);
        Form { a: 1, b: t, c: (t - disc) / 4 }
    }

    pub fn inverse(&self) -> Form {
        reduce(Form { a: self.a, b: -self.b, c: self.c })
    }

    pub fn is_reduced(&self) -> bool {
        let Form { a, b, c } = *self;
        b.abs() <= a && a <= c && !(b < 0 && (b.abs() == a || a == c))
    }
}

pub fn reduce(f: Form) -> Form {
    let d = f.disc();
    let Form { mut a, mut b, .. } = f;
    let mut c;
    loop {
        let two_a = 2 * a;
        let mut r = b.rem_euclid(two_a);
        if r > a {
            r -= two_a;
        }
        b = r;
        c = (b * b - d) / (4 * a);
        if a > c {
            std::mem::swap(&mut a, &mut c);
            b = -b;
            continue;
        }
        if a == c && b < 0 {
            b = -b;
        }
        return Form { a, b, c };
    }
}

fn xgcd(a: i64, b: i64) -> (i64, i64, i64) {
    let e = a.extended_gcd(&b);
    if e.gcd < 0 {
        (-e.x, -e.y, -e.gcd)
    } else {
        (e.x, e.y, e.gcd)
    }
}

/// Gauss composition of two forms of the same discriminant (reduced result).
pub fn compose(f1: Form, f2: Form) -> Form {
    assert_eq!(f1.disc(), f2.disc(), "composition of forms of different discriminant");
    let (f1, f2) = if f1.a > f2.a { (f2, f1) } else { (f1, f2) };
    let s = (f1.b + f2.b) / 2;
    let n = f2.b - s;
    let (y1, d) = if f2.a % f1.a == 0 {
        (0, f1.a)
    } else {
        let (u, _v, d) = xgcd(f2.a, f1.a);
        (u, d)
    };
    let (x2, y2, d1) = if s % d == 0 {
        (0, -1, d)
    } else {
        let (x2, y2, d1) = xgcd(s, d);
        (x2, -y2, d1)
    };
    let v1 = f1.a / d1;
    let v2 = f2.a / d1;
    let r = ((y1 as i128 * y2 as i128 * n as i128 - x2 as i128 * f2.c as i128)
        .rem_euclid(v1 as i128)) as i64;
    let b3 = f2.b + 2 * v2 * r;
    let a3 = v1 * v2;
    let c3 = (f2.c * d1 + r * (f2.b + v2 * r)) / v1;
    let out = Form { a: a3, b: b3, c: c3 };
    debug_assert_eq!(out.disc(), f1.disc());
    reduce(out)
}

pub fn class_group(disc: i64) -> Vec<Form> {
    let mut out = Vec::new();
    let m = -disc;
    let mut a = 1i64;
    while 3 * a * a <= m {
        for b in (-a + 1)..=a {
            if (b - disc).rem_euclid(2) != 0 {
                continue;
            }
            let num = b * b - disc;
            if num % (4 * a) != 0 {
                continue;
            }
            let c = num / (4 * a);
            if c < a || (b < 0 && a == c) {
                continue;
            }
            if a.gcd(&b).gcd(&c) != 1 {
                continue;
            }
            out.push(Form { a, b, c });
        }
        a += 1;
    }
    out
}

pub fn class_number(disc: i64) -> usize {
    class_group(disc).len()
}

/// A proper ideal given by two Z-generators, each x + y omega.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct QuadIdeal {
    pub gens: [(i64, i64); 2],
    pub norm: i64,
}

/// J = Z A + Z (-B + sqrt(disc))/2 = Z A + Z (omega - (B + t)/2).
pub fn ideal_of_class(r: &QuadOrder, f: &Form) -> Result<QuadIdeal> {
    if f.disc() != r.disc {
        return Err(Error::Domain(format!(
            "form of discriminant {} used with order of discriminant {}",
            f.disc(),
            r.disc
        )));
    }
    Ok(QuadIdeal { gens: [(f.a, 0), (-(f.b + r.t) / 2, 1)], norm: f.a })
}

/// Inverse ideal class representative: the conjugate ideal divided by its
/// norm, returned as (generators of conj(J), norm) so that J^-1 = conj(J)/norm.
pub fn conjugate_ideal(r: &QuadOrder, j: &QuadIdeal) -> QuadIdeal {
    QuadIdeal { gens: [r.conj(j.gens[0]), r.conj(j.gens[1])], norm: j.norm }
}

/// Form class of an ideal of R given by Z-generators (any number).
pub fn form_of_lattice(r: &QuadOrder, gens: &[(i64, i64)]) -> Form {
    // Hermite form in the column order (omega, 1): rows (c, b) and (0, a),
    // so the lattice is Z a + Z (b + c omega).
    let rows: Vec<Vec<Int>> = gens.iter().map(|g| vec![Int::from(g.1), Int::from(g.0)]).collect();
    let h = hnf(rows, 2);
    assert_eq!(h.len(), 2, "ideal must have rank two");
    let c = to_i64(&h[0][0]);
    let b = to_i64(&h[0][1]);
    let a = to_i64(&h[1][1]);
    // J = c (Z a/c + Z (omega + b/c))
    let a1 = a / c;
    let b1 = b / c;
    let bf = -(r.t + 2 * b1);
    let cf = (bf * bf - r.disc) / (4 * a1);
    reduce(Form { a: a1, b: bf, c: cf })
}

/// Z-generators of the product of two lattices in R.
pub fn multiply_gens(r: &QuadOrder, x: &[(i64, i64)], y: &[(i64, i64)]) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    for a in x {
        for b in y {
            out.push(r.mul(*a, *b));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_class_numbers() {
        assert_eq!(class_number(-3), 1);
        assert_eq!(class_number(-4), 1);
        assert_eq!(class_number(-20), 2);
        assert_eq!(class_number(-23), 3);
        assert_eq!(class_number(-47), 5);
        assert_eq!(class_group(-4), vec![Form { a: 1, b: 0, c: 1 }]);
    }

    #[test]
    fn ideal_dictionary() {
        let r = QuadOrder::new(-20, 1).unwrap();
        let j = ideal_of_class(&r, &Form { a: 2, b: 2, c: 3 }).unwrap();
        assert_eq!(j.gens, [(2, 0), (-1, 1)]);
        let jj = multiply_gens(&r, &j.gens, &conjugate_ideal(&r, &j).gens);
        assert_eq!(form_of_lattice(&r, &jj), Form::identity(-20));
        assert!(ideal_of_class(&r, &Form { a: 1, b: 1, c: 1 }).is_err());
    }
}
