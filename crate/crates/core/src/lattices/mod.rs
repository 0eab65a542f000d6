//! Full-rank Z-lattices in Q^n, kept in Hermite normal form over a single
//! denominator.

pub mod enumerate;
pub mod matrix;

use crate::core_algebra::arith::{common_den, Int, Rat};
use crate::error::{pre, Result};
use matrix::{elementary_divisors, hnf, left_kernel, rat_inverse, transpose, IMat};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ZLattice {
    den: Int,
    basis: IMat,
}

impl ZLattice {
    /// Lattice spanned by rational generators; must have full rank `dim`.
    pub fn from_rat_gens(gens: &[Vec<Rat>], dim: usize) -> Result<Self> {
        let mut den = Int::one();
        for g in gens {
            den = den.lcm(&common_den(g));
        }
        let rows: IMat = gens
            .iter()
            .map(|g| {
                g.iter()
                    .map(|x| (x * Rat::from_integer(den.clone())).to_integer())
                    .collect()
            })
            .collect();
        Self::from_int_gens(rows, den, dim)
    }

    pub fn from_int_gens(rows: IMat, den: Int, dim: usize) -> Result<Self> {
        let basis = hnf(rows, dim);
        if basis.len() != dim {
            return pre(format!("lattice generators have rank {} < {}", basis.len(), dim));
        }
        let mut l = ZLattice { den, basis };
        l.normalize();
        Ok(l)
    }

    pub fn identity(dim: usize) -> Self {
        let basis = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { Int::one() } else { Int::zero() }).collect())
            .collect();
        ZLattice { den: Int::one(), basis }
    }

    fn normalize(&mut self) {
        let mut g = self.den.clone();
        for r in &self.basis {
            for x in r {
                g = g.gcd(x);
            }
        }
        if !g.is_one() {
            for r in self.basis.iter_mut() {
                for x in r.iter_mut() {
                    *x = &*x / &g;
                }
            }
            self.den = &self.den / &g;
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn den(&self) -> &Int {
        &self.den
    }

    pub fn int_basis(&self) -> &IMat {
        &self.basis
    }

    pub fn basis(&self) -> Vec<Vec<Rat>> {
        self.basis
            .iter()
            .map(|r| r.iter().map(|x| Rat::new(x.clone(), self.den.clone())).collect())
            .collect()
    }

    /// Covolume: absolute determinant of the basis.
    pub fn covolume(&self) -> Rat {
        let mut num = Int::one();
        for (i, r) in self.basis.iter().enumerate() {
            num *= &r[i];
        }
        Rat::new(num, num_traits::pow(self.den.clone(), self.dim()))
    }

    /// Coordinates of `v` in the HNF basis.
    pub fn coords(&self, v: &[Rat]) -> Vec<Rat> {
        let n = self.dim();
        let d = Rat::from_integer(self.den.clone());
        let mut w: Vec<Rat> = v.iter().map(|x| x * &d).collect();
        let mut c = vec![Rat::zero(); n];
        for i in 0..n {
            let ci = &w[i] / Rat::from_integer(self.basis[i][i].clone());
            if !ci.is_zero() {
                for j in i..n {
                    let b = Rat::from_integer(self.basis[i][j].clone());
                    w[j] -= &ci * b;
                }
            }
            c[i] = ci;
        }
        c
    }

    pub fn contains(&self, v: &[Rat]) -> bool {
        self.coords(v).iter().all(|c| c.is_integer())
    }

    pub fn contains_lattice(&self, o: &ZLattice) -> bool {
        o.basis().iter().all(|b| self.contains(b))
    }

    pub fn sum(&self, o: &ZLattice) -> ZLattice {
        let mut gens = self.basis();
        gens.extend(o.basis());
        ZLattice::from_rat_gens(&gens, self.dim()).expect("sum of full-rank lattices")
    }

    pub fn intersect(&self, o: &ZLattice) -> ZLattice {
        let n = self.dim();
        let d = self.den.lcm(&o.den);
        let f1 = &d / &self.den;
        let f2 = &d / &o.den;
        let mut rows: IMat = self
            .basis
            .iter()
            .map(|r| r.iter().map(|x| x * &f1).collect())
            .collect();
        let a1 = rows.clone();
        rows.extend(o.basis.iter().map(|r| r.iter().map(|x| -(x * &f2)).collect::<Vec<_>>()));
        let ker = left_kernel(&rows, n);
        let gens: IMat = ker
            .iter()
            .map(|k| {
                let mut v = vec![Int::zero(); n];
                for (c, r) in k[..n].iter().zip(&a1) {
                    if !c.is_zero() {
                        for j in 0..n {
                            v[j] += c * &r[j];
                        }
                    }
                }
                v
            })
            .collect();
        ZLattice::from_int_gens(gens, d, n).expect("intersection of full-rank lattices")
    }

    /// [sup : self], requires self to be contained in sup.
    pub fn index_in(&self, sup: &ZLattice) -> Result<Int> {
        if !sup.contains_lattice(self) {
            return pre("index_in: not a sublattice");
        }
        let q = self.covolume() / sup.covolume();
        Ok(q.to_integer())
    }

    /// Elementary divisors of sup/self.
    pub fn quotient_invariants(&self, sup: &ZLattice) -> Result<Vec<Int>> {
        if !sup.contains_lattice(self) {
            return pre("quotient_invariants: not a sublattice");
        }
        let coords: IMat = self
            .basis()
            .iter()
            .map(|b| sup.coords(b).into_iter().map(|c| c.to_integer()).collect())
            .collect();
        Ok(elementary_divisors(&coords))
    }

    pub fn scale(&self, r: &Rat) -> ZLattice {
        let gens: Vec<Vec<Rat>> = self
            .basis()
            .into_iter()
            .map(|b| b.into_iter().map(|x| x * r).collect())
            .collect();
        ZLattice::from_rat_gens(&gens, self.dim()).expect("scaling by a nonzero rational")
    }

    /// {x : <x, b> in Z for all b in self} for the standard dot product.
    pub fn dual(&self) -> ZLattice {
        let n = self.dim();
        let inv = rat_inverse(&self.basis()).expect("full rank");
        let rows = transpose(&inv, n);
        ZLattice::from_rat_gens(&rows, n).expect("dual of full rank")
    }

    /// {x in Q^n : <w, x> in Z for every w in `rows`}, which needs the rows
    /// to span Q^n.
    pub fn integral_preimage(rows: &[Vec<Rat>], n: usize) -> Result<ZLattice> {
        Ok(ZLattice::from_rat_gens(rows, n)?.dual())
    }

    /// Apply a linear map given by its matrix acting on row vectors (x -> x M).
    pub fn map_rows(&self, m: &[Vec<Rat>]) -> Result<ZLattice> {
        let gens: Vec<Vec<Rat>> =
            self.basis().iter().map(|b| matrix::rat_vec_mat(b, m)).collect();
        ZLattice::from_rat_gens(&gens, m[0].len())
    }

    /// {x : x A in Z^m for every A in `maps`} where each A is n x m and x a
    /// row vector; the maps together must be injective.
    pub fn preimage(maps: &[Vec<Vec<Rat>>], n: usize) -> Result<ZLattice> {
        let mut rows = Vec::new();
        for a in maps {
            rows.extend(transpose(a, a[0].len()));
        }
        ZLattice::integral_preimage(&rows, n)
    }

    /// Smallest positive g with g*self inside other.
    pub fn scale_into(&self, other: &ZLattice) -> Int {
        let mut g = Int::one();
        for b in self.basis() {
            for c in other.coords(&b) {
                g = g.lcm(c.denom());
            }
        }
        g
    }

    /// The lattice agreeing with `x` at p and with `y` at every other prime.
    pub fn glue_at(x: &ZLattice, y: &ZLattice, p: u64) -> ZLattice {
        let g = x.scale_into(y).lcm(&y.scale_into(x));
        let pi = Int::from(p);
        let mut pk = Int::one();
        let mut rest = g;
        while (&rest % &pi).is_zero() {
            rest /= &pi;
            pk *= &pi;
        }
        let l1 = x.intersect(&y.scale(&Rat::new(Int::one(), pk)));
        let l2 = y.intersect(&x.scale(&Rat::new(Int::one(), rest)));
        l1.sum(&l2)
    }

    /// True when all basis vectors are integral with gcd one denominators
    /// (i.e. the lattice lies in Z^n).
    pub fn is_integral(&self) -> bool {
        self.den.is_one()
    }

    /// Largest k with self contained in p^k Z^n scaled, used for saturation checks.
    pub fn content(&self) -> Rat {
        let mut g = Int::zero();
        for r in &self.basis {
            for x in r {
                g = g.gcd(x);
            }
        }
        Rat::new(g.abs(), self.den.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core_algebra::arith::{int, rat};

    fn lat(rows: &[[i64; 2]]) -> ZLattice {
        ZLattice::from_int_gens(
            rows.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect(),
            int(1),
            2,
        )
        .unwrap()
    }

    #[test]
    fn intersect_and_sum_indices() {
        let a = lat(&[[2, 0], [0, 1]]);
        let b = lat(&[[1, 0], [0, 3]]);
        let i = a.intersect(&b);
        assert_eq!(i.covolume(), rat(6, 1));
        assert_eq!(a.sum(&b).covolume(), rat(1, 1));
        assert_eq!(i.index_in(&a).unwrap(), int(3));
    }

    #[test]
    fn dual_of_scaled() {
        let a = lat(&[[2, 1], [0, 3]]);
        let d = a.dual();
        assert_eq!(d.covolume(), rat(1, 6));
        for x in d.basis() {
            for y in a.basis() {
                let s: Rat = x.iter().zip(&y).map(|(u, v)| u * v).sum();
                assert!(s.is_integer());
            }
        }
    }

    #[test]
    fn quotient_invariants_smith() {
        let a = lat(&[[2, 0], [0, 2]]);
        let inv = a.quotient_invariants(&ZLattice::identity(2)).unwrap();
        assert_eq!(inv, vec![int(2), int(2)]);
    }
}
