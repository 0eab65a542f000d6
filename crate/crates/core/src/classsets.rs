//! Class sets of oriented Eichler orders in definite algebras: unit groups,
//! oriented isomorphism search, principality and neighbor expansion
//! certified by the Eichler mass.

use crate::core_algebra::arith::{factor, prime_divisors, primes_up_to, Int, Rat};
use crate::core_algebra::{QuatAlgebra, QuatElement};
use crate::error::{breach, pre, Error, Result};
use crate::lattices::enumerate::{for_each_close_vector, lll_gram};
use crate::lattices::matrix::{rat_det, rat_inverse, rat_mul, rat_vec_mat, QMat};
use crate::lattices::ZLattice;
use crate::orders::ideals::{elements, lattice_norm, lattice_product, lattice_times};
use crate::orders::{eichler_order, star, Catalog, OrientedEichlerOrder, Order};
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;

/// Gram matrix of nrd on the basis of a lattice.
pub fn nrd_gram(alg: &QuatAlgebra, l: &ZLattice) -> QMat {
    let e = elements(l);
    let two = Rat::from_integer(Int::from(2));
    e.iter().map(|x| e.iter().map(|y| alg.pairing(x, y) / &two).collect()).collect()
}

fn combine(basis: &[QuatElement], v: &[i64]) -> QuatElement {
    let mut acc = QuatElement::zero();
    for (c, b) in v.iter().zip(basis) {
        if *c != 0 {
            acc = acc.add(&b.scale(&Rat::from_integer(Int::from(*c))));
        }
    }
    acc
}

/// All elements of a definite lattice with nrd <= bound, in enumeration order.
pub fn short_elements(alg: &QuatAlgebra, l: &ZLattice, bound: &Rat) -> Result<Vec<QuatElement>> {
    if !alg.is_definite() {
        return pre("enumeration by reduced norm needs a definite algebra");
    }
    let g = nrd_gram(alg, l);
    let basis = elements(l);
    let mut out = Vec::new();
    for_each_close_vector(&g, None, bound, |v| {
        out.push(combine(&basis, v));
        true
    });
    Ok(out)
}

/// Elements of reduced norm 1.
pub fn unit_group(o: &Order) -> Result<Vec<QuatElement>> {
    let one = Rat::one();
    Ok(short_elements(&o.alg, &o.lat, &one)?
        .into_iter()
        .filter(|x| o.alg.nrd(x) == one)
        .collect())
}

/// Number of elements of each reduced norm 1..=k.
pub fn theta_prefix(o: &Order, k: i64) -> Result<Vec<usize>> {
    let mut out = vec![0usize; k as usize];
    for x in short_elements(&o.alg, &o.lat, &Rat::from_integer(Int::from(k)))? {
        let n = o.alg.nrd(&x);
        if n.is_integer() && !n.is_zero() {
            out[n.to_integer().try_into().map(|v: i64| v as usize - 1).unwrap()] += 1;
        }
    }
    Ok(out)
}

/// A ring isomorphism between orders, extended to the ambient algebras:
/// standard coordinates x are sent to x M.
#[derive(Clone, Debug, PartialEq)]
pub struct Iso {
    pub matrix: QMat,
}

impl Iso {
    pub fn apply(&self, x: &QuatElement) -> QuatElement {
        QuatElement::from_rats(&rat_vec_mat(&x.coeffs(), &self.matrix))
    }

    pub fn apply_lattice(&self, l: &ZLattice) -> ZLattice {
        l.map_rows(&self.matrix).expect("isomorphism is invertible")
    }

    pub fn inverse(&self) -> Iso {
        Iso { matrix: rat_inverse(&self.matrix).expect("invertible") }
    }

    pub fn then(&self, o: &Iso) -> Iso {
        Iso { matrix: rat_mul(&self.matrix, &o.matrix) }
    }
}

/// Data reused across isomorphism tests with a fixed source order.
pub struct Prepared {
    pub o: OrientedEichlerOrder,
    red: Vec<QuatElement>,
    struct_consts: Vec<Vec<Vec<Rat>>>,
    pairings: Vec<Vec<Rat>>,
    keys: Vec<(Rat, Rat)>,
}

impl Prepared {
    pub fn new(o: &OrientedEichlerOrder) -> Result<Self> {
        let alg = o.alg();
        if !alg.is_definite() {
            return pre("isomorphism search needs a definite algebra");
        }
        let t = lll_gram(o.order.nrd_gram());
        let red: Vec<QuatElement> = t.iter().map(|row| o.order.elem(row)).collect();
        let red_mat: QMat = red.iter().map(|x| x.coeffs()).collect();
        let red_inv = rat_inverse(&red_mat).expect("reduced basis");
        let mut struct_consts = Vec::new();
        for x in &red {
            let mut row = Vec::new();
            for y in &red {
                row.push(rat_vec_mat(&alg.mul(x, y).coeffs(), &red_inv));
            }
            struct_consts.push(row);
        }
        let pairings = red.iter().map(|x| red.iter().map(|y| alg.pairing(x, y)).collect()).collect();
        let keys = red.iter().map(|x| (alg.trd(x), alg.nrd(x))).collect();
        Ok(Prepared { o: o.clone(), red, struct_consts, pairings, keys })
    }

    /// Isomorphisms to `dst` compatible with orientations (if `oriented`);
    /// stops after the first one when `first` is set.
    pub fn isomorphisms(&self, dst: &OrientedEichlerOrder, oriented: bool, first: bool) -> Result<Vec<Iso>> {
        let dalg = dst.alg();
        if !dalg.is_definite() {
            return pre("isomorphism search needs a definite algebra");
        }
        if dst.disc() != self.o.disc() || dst.level() != self.o.level() {
            return Ok(vec![]);
        }
        let mut cands: Vec<Vec<QuatElement>> = Vec::new();
        let mut cache: BTreeMap<(Rat, Rat), Vec<QuatElement>> = BTreeMap::new();
        for key in &self.keys {
            if !cache.contains_key(key) {
                let list: Vec<QuatElement> = short_elements(dalg, &dst.order.lat, &key.1)?
                    .into_iter()
                    .filter(|y| dalg.trd(y) == key.0 && dalg.nrd(y) == key.1)
                    .collect();
                cache.insert(key.clone(), list);
            }
            cands.push(cache[key].clone());
        }
        let src_mat: QMat = self.red.iter().map(|x| x.coeffs()).collect();
        let src_inv = rat_inverse(&src_mat).expect("basis");
        let mut out = Vec::new();
        let mut chosen: Vec<QuatElement> = Vec::new();
        self.backtrack(dst, &cands, &src_inv, oriented, first, &mut chosen, &mut out)?;
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn backtrack(
        &self,
        dst: &OrientedEichlerOrder,
        cands: &[Vec<QuatElement>],
        src_inv: &QMat,
        oriented: bool,
        first: bool,
        chosen: &mut Vec<QuatElement>,
        out: &mut Vec<Iso>,
    ) -> Result<bool> {
        let dalg = dst.alg();
        let i = chosen.len();
        if i == 4 {
            if let Some(iso) = self.finish(dst, src_inv, chosen, oriented)? {
                out.push(iso);
                return Ok(first);
            }
            return Ok(false);
        }
        for y in &cands[i] {
            if (0..i).all(|j| dalg.pairing(y, &chosen[j]) == self.pairings[i][j]) {
                chosen.push(y.clone());
                let stop = self.backtrack(dst, cands, src_inv, oriented, first, chosen, out)?;
                chosen.pop();
                if stop {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }

    fn finish(
        &self,
        dst: &OrientedEichlerOrder,
        src_inv: &QMat,
        ys: &[QuatElement],
        oriented: bool,
    ) -> Result<Option<Iso>> {
        let dalg = dst.alg();
        // images must form a basis of the target order
        let coords: QMat = ys.iter().map(|y| dst.order.coords(y)).collect();
        if rat_det(&coords).abs() != Rat::one() {
            return Ok(None);
        }
        for (a, ya) in ys.iter().enumerate() {
            for (b, yb) in ys.iter().enumerate() {
                let prod = dalg.mul(ya, yb);
                let mut img = QuatElement::zero();
                for (c, yc) in self.struct_consts[a][b].iter().zip(ys) {
                    img = img.add(&yc.scale(c));
                }
                if img != prod {
                    return Ok(None);
                }
            }
        }
        let ymat: QMat = ys.iter().map(|y| y.coeffs()).collect();
        let iso = Iso { matrix: rat_mul(src_inv, &ymat) };
        if oriented && !self.orientation_compatible(dst, &iso)? {
            return Ok(None);
        }
        Ok(Some(iso))
    }

    fn orientation_compatible(&self, dst: &OrientedEichlerOrder, iso: &Iso) -> Result<bool> {
        for (&p, ch) in &self.o.chars {
            for (b, c) in self.o.order.basis.iter().zip(ch) {
                if dst.char_value(p, &iso.apply(b))? != *c {
                    return Ok(false);
                }
            }
        }
        for (&q, sup) in &self.o.supers {
            match dst.supers.get(&q) {
                Some(s) if iso.apply_lattice(sup) == *s => {}
                _ => return Ok(false),
            }
        }
        Ok(true)
    }
}

pub fn isomorphic_oriented(a: &OrientedEichlerOrder, b: &OrientedEichlerOrder) -> Result<Option<Iso>> {
    if a.disc() != b.disc() || a.level() != b.level() {
        return pre("isomorphism test between different (D, N)");
    }
    Ok(Prepared::new(a)?.isomorphisms(b, true, true)?.into_iter().next())
}

/// A generator g with I = O g, when one exists.
pub fn is_principal(o: &Order, i: &ZLattice) -> Result<Option<QuatElement>> {
    let alg = &o.alg;
    if !alg.is_definite() {
        return pre("principality test needs a definite algebra");
    }
    let n = lattice_norm(alg, i);
    for x in short_elements(alg, i, &n)? {
        if alg.nrd(&x) == n && lattice_times(alg, &o.lat, &x, true)? == *i {
            return Ok(Some(x));
        }
    }
    Ok(None)
}

/// Eichler mass with full unit groups: prod_{p|D}(p-1)/24 * N prod_{p|N}(1+1/p).
pub fn eichler_mass(d: u64, n: u64) -> Rat {
    let mut m = Rat::new(Int::one(), Int::from(24));
    for p in prime_divisors(d) {
        m *= Rat::from_integer(Int::from(p - 1));
    }
    m *= Rat::from_integer(Int::from(n));
    for (p, _) in factor(n) {
        m *= Rat::new(Int::from(p + 1), Int::from(p));
    }
    m
}

#[derive(Clone, Debug)]
pub struct ClassRep {
    /// Left ideal of the base order whose right order is this class.
    pub ideal: ZLattice,
    pub order: OrientedEichlerOrder,
    pub units: usize,
    theta: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct ClassSet {
    pub d: u64,
    pub n: u64,
    pub base: OrientedEichlerOrder,
    pub reps: Vec<ClassRep>,
    pub mass: Rat,
}

const THETA_DEPTH: i64 = 3;

impl ClassSet {
    pub fn unit_counts(&self) -> Vec<usize> {
        self.reps.iter().map(|r| r.units).collect()
    }

    pub fn computed_mass(&self) -> Rat {
        self.reps
            .iter()
            .map(|r| Rat::new(Int::one(), Int::from(r.units)))
            .fold(Rat::zero(), |a, b| a + b)
    }

    /// Index of the class of `o` and an oriented isomorphism from `o` to it.
    pub fn locate(&self, o: &OrientedEichlerOrder) -> Result<(usize, Iso)> {
        let prep = Prepared::new(o)?;
        let units = unit_group(&o.order)?.len();
        let theta = theta_prefix(&o.order, THETA_DEPTH)?;
        for (k, r) in self.reps.iter().enumerate() {
            if r.units != units || r.theta != theta {
                continue;
            }
            if let Some(iso) = prep.isomorphisms(&r.order, true, true)?.into_iter().next() {
                return Ok((k, iso));
            }
        }
        breach("order is not isomorphic to any class representative")
    }
}

fn norm_q_ideals(o: &Order, q: u64) -> Result<Vec<ZLattice>> {
    let alg = &o.alg;
    let g = o.nrd_gram();
    let gi: Vec<Vec<i128>> = g
        .iter()
        .map(|r| {
            r.iter()
                .map(|x| {
                    // 2 G is integral for an order
                    let y = x * Rat::from_integer(Int::from(2));
                    i128::try_from(y.to_integer()).expect("small gram")
                })
                .collect()
        })
        .collect();
    let qo = o.lat.scale(&Rat::from_integer(Int::from(q)));
    let mut out: Vec<ZLattice> = Vec::new();
    let qi = q as i128;
    for idx in 1..q.pow(4) {
        let mut v = [0i64; 4];
        let mut k = idx;
        for c in v.iter_mut() {
            *c = (k % q) as i64;
            k /= q;
        }
        if v.iter().rev().find(|&&c| c != 0) != Some(&1) {
            continue;
        }
        let mut two_n: i128 = 0;
        for i in 0..4 {
            for j in 0..4 {
                two_n += gi[i][j] * v[i] as i128 * v[j] as i128;
            }
        }
        if (two_n / 2) % qi != 0 {
            continue;
        }
        let x = o.elem(&v);
        let j = lattice_times(alg, &o.lat, &x, true)?.sum(&qo);
        if lattice_norm(alg, &j) != Rat::from_integer(Int::from(q)) {
            continue;
        }
        if !out.contains(&j) {
            out.push(j);
            if out.len() as u64 == q + 1 {
                break;
            }
        }
    }
    if out.len() as u64 != q + 1 {
        return breach(format!("found {} ideals of norm {q}, expected {}", out.len(), q + 1));
    }
    Ok(out)
}

/// Representatives of Pic(D, N) by neighbor expansion, stopped exactly when
/// the accumulated mass reaches the Eichler mass.
pub fn class_set(d: u64, n: u64, cat: &Catalog) -> Result<ClassSet> {
    let base = eichler_order(d, n, cat)?;
    if !base.alg().is_definite() {
        return Err(Error::Precondition(format!(
            "indefinite: Pic({d},{n}) is trivial and not enumerated"
        )));
    }
    let mass = eichler_mass(d, n);
    let q = primes_up_to(1000)
        .into_iter()
        .find(|p| (d * n) % p != 0)
        .expect("a prime not dividing DN");
    let units = unit_group(&base.order)?.len();
    let theta = theta_prefix(&base.order, THETA_DEPTH)?;
    let mut cs = ClassSet {
        d,
        n,
        base: base.clone(),
        reps: vec![ClassRep { ideal: base.order.lat.clone(), order: base.clone(), units, theta }],
        mass: mass.clone(),
    };
    let mut acc = Rat::new(Int::one(), Int::from(units));
    let mut head = 0;
    while acc < mass {
        if head >= cs.reps.len() {
            return breach(format!("neighbor expansion closed below the mass for ({d},{n})"));
        }
        let rep = cs.reps[head].clone();
        head += 1;
        for j in norm_q_ideals(&rep.order.order, q)? {
            let o2 = star(&j, &rep.order)?;
            let prep = Prepared::new(&o2)?;
            let units = unit_group(&o2.order)?.len();
            let theta = theta_prefix(&o2.order, THETA_DEPTH)?;
            let mut known = false;
            for r in &cs.reps {
                if r.units == units
                    && r.theta == theta
                    && !prep.isomorphisms(&r.order, true, true)?.is_empty()
                {
                    known = true;
                    break;
                }
            }
            if !known {
                let ideal = lattice_product(base.alg(), &rep.ideal, &j);
                acc += Rat::new(Int::one(), Int::from(units));
                cs.reps.push(ClassRep { ideal, order: o2, units, theta });
                if acc > mass {
                    return breach(format!("mass exceeded for ({d},{n})"));
                }
                if acc == mass {
                    break;
                }
            }
        }
    }
    Ok(cs)
}
