//! Orders in quaternion algebras, oriented Eichler orders, two-sided ideals
//! and the transport of orientations along locally principal ideals.

pub mod catalog;
pub mod ideals;

use crate::core_algebra::arith::{
    factor, int, is_squarefree, prime_divisors, rat_mod_p, to_u64, valuation, valuation_rat,
    exact_sqrt, Int, Rat,
};
use crate::core_algebra::fp2::{Fp2, Fp2Field};
use crate::core_algebra::{QuatAlgebra, QuatElement};
use crate::error::{breach, pre, Error, Result};
use crate::lattices::matrix::{hnf, nullspace_mod_p, rat_det, row_reduce_mod_p, solve_mod_p, int_to_mod_p};
use crate::lattices::ZLattice;
pub use catalog::Catalog;
use ideals::{elements, lattice_norm, lattice_of, lattice_product, right_order_of, search_lattice};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;

/// A full-rank subring of a quaternion algebra.
#[derive(Clone, Debug)]
pub struct Order {
    pub alg: QuatAlgebra,
    pub lat: ZLattice,
    pub basis: Vec<QuatElement>,
    gram: Vec<Vec<Rat>>,
    trd: Vec<Int>,
    disc: u64,
    level: u64,
}

impl PartialEq for Order {
    fn eq(&self, o: &Self) -> bool {
        self.alg == o.alg && self.lat == o.lat
    }
}

impl Order {
    pub fn from_lattice(alg: &QuatAlgebra, lat: ZLattice) -> Result<Self> {
        if !lat.contains(&alg.one().coeffs()) {
            return pre("order lattice does not contain 1");
        }
        let basis = elements(&lat);
        for x in &basis {
            for y in &basis {
                if !lat.contains(&alg.mul(x, y).coeffs()) {
                    return pre("lattice is not closed under multiplication");
                }
            }
        }
        let gram: Vec<Vec<Rat>> = basis
            .iter()
            .map(|x| {
                basis
                    .iter()
                    .map(|y| alg.pairing(x, y) / Rat::from_integer(int(2)))
                    .collect()
            })
            .collect();
        let trd: Vec<Int> = basis.iter().map(|x| alg.trd(x).to_integer()).collect();
        let tform: Vec<Vec<Rat>> = basis
            .iter()
            .map(|x| basis.iter().map(|y| alg.trd(&alg.mul(x, y))).collect())
            .collect();
        let det = rat_det(&tform).abs();
        if !det.is_integer() {
            return breach("trace form of an order is not integral");
        }
        let dn = exact_sqrt(&det.to_integer())
            .ok_or_else(|| Error::Invariant("trace-form determinant is not a square".into()))?;
        let d = alg.disc();
        if !(&dn % Int::from(d)).is_zero() {
            return breach("order discriminant not divisible by the algebra discriminant");
        }
        let level = to_u64(&(&dn / Int::from(d)));
        Ok(Order { alg: alg.clone(), lat, basis, gram, trd, disc: d, level })
    }

    pub fn disc(&self) -> u64 {
        self.disc
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    /// Gram matrix of nrd in the order basis: nrd(x) = x^T G x.
    pub fn nrd_gram(&self) -> &Vec<Vec<Rat>> {
        &self.gram
    }

    pub fn trd_vec(&self) -> &[Int] {
        &self.trd
    }

    pub fn coords(&self, x: &QuatElement) -> Vec<Rat> {
        self.lat.coords(&x.coeffs())
    }

    pub fn int_coords(&self, x: &QuatElement) -> Option<Vec<Int>> {
        let c = self.coords(x);
        if c.iter().all(|v| v.is_integer()) {
            Some(c.into_iter().map(|v| v.to_integer()).collect())
        } else {
            None
        }
    }

    pub fn contains(&self, x: &QuatElement) -> bool {
        self.lat.contains(&x.coeffs())
    }

    pub fn elem(&self, v: &[i64]) -> QuatElement {
        let mut acc = QuatElement::zero();
        for (c, b) in v.iter().zip(&self.basis) {
            if *c != 0 {
                acc = acc.add(&b.scale(&Rat::from_integer(Int::from(*c))));
            }
        }
        acc
    }

    pub fn elem_int(&self, v: &[Int]) -> QuatElement {
        let mut acc = QuatElement::zero();
        for (c, b) in v.iter().zip(&self.basis) {
            if !c.is_zero() {
                acc = acc.add(&b.scale(&Rat::from_integer(c.clone())));
            }
        }
        acc
    }

    /// Structure constants: b_i b_j = sum_k c[i][j][k] b_k.
    pub fn mult_table(&self) -> Vec<Vec<Vec<Int>>> {
        self.basis
            .iter()
            .map(|x| {
                self.basis
                    .iter()
                    .map(|y| self.int_coords(&self.alg.mul(x, y)).expect("closed"))
                    .collect()
            })
            .collect()
    }

    /// The two-sided ideal {x in O : trd(x O) in pZ} (its Jacobson radical
    /// modulo p when p exactly divides D N).
    pub fn trace_radical(&self, p: u64) -> ZLattice {
        // dual of O under (x, y) -> trd(x y)
        let maps = vec![(0..4)
            .map(|c| {
                let e = QuatElement::unit(c);
                self.basis.iter().map(|b| self.alg.trd(&self.alg.mul(&e, b))).collect()
            })
            .collect::<Vec<Vec<Rat>>>()];
        let dual = ZLattice::preimage(&maps, 4).expect("trace form nondegenerate");
        self.lat.intersect(&dual.scale(&Rat::from_integer(Int::from(p))))
    }

    /// Linear forms a_j over F_p whose common kernel on O/pO is the image of
    /// `ideal` (which must contain pO).
    pub fn residue_forms(&self, ideal: &ZLattice, p: u64) -> Vec<Vec<u64>> {
        let rows: Vec<Vec<u64>> = elements(ideal)
            .iter()
            .map(|x| {
                self.int_coords(x)
                    .expect("ideal inside order")
                    .iter()
                    .map(|c| int_to_mod_p(c, p))
                    .collect()
            })
            .collect();
        nullspace_mod_p(&row_reduce_mod_p(rows, p), 4, p)
    }

    pub fn contains_order(&self, o: &Order) -> bool {
        self.lat.contains_lattice(&o.lat)
    }
}

/// Multiplicative closure of the ring generated by `gens` and 1.
pub fn make_order(alg: &QuatAlgebra, gens: &[QuatElement]) -> Result<Order> {
    let mut span: Vec<QuatElement> = vec![alg.one()];
    span.extend(gens.iter().cloned());
    let mut prev: Option<(Vec<Vec<Int>>, Int)> = None;
    for _ in 0..64 {
        for x in &span {
            if !alg.trd(x).is_integer() || !alg.nrd(x).is_integer() {
                return Err(Error::Domain(format!("non-integral element {x}")));
            }
        }
        let mut all = span.clone();
        for x in &span {
            for y in &span {
                all.push(alg.mul(x, y));
            }
        }
        let mut den = Int::one();
        for x in &all {
            for c in &x.0 {
                den = den.lcm(c.denom());
            }
        }
        let rows: Vec<Vec<Int>> = all
            .iter()
            .map(|x| x.0.iter().map(|c| (c * Rat::from_integer(den.clone())).to_integer()).collect())
            .collect();
        let h = hnf(rows, 4);
        let key = (h.clone(), den.clone());
        span = h
            .iter()
            .map(|r| QuatElement::from_rats(&r.iter().map(|x| Rat::new(x.clone(), den.clone())).collect::<Vec<_>>()))
            .collect();
        if prev.as_ref().map_or(false, |p| same_span(p, &key)) {
            if span.len() < 4 {
                return pre("generators do not span the algebra");
            }
            return Order::from_lattice(alg, lattice_of(&span)?);
        }
        prev = Some(key);
    }
    pre("order closure did not stabilize")
}

fn same_span(a: &(Vec<Vec<Int>>, Int), b: &(Vec<Vec<Int>>, Int)) -> bool {
    if a.0.len() != b.0.len() {
        return false;
    }
    // compare as rational row spaces in canonical form
    let norm = |m: &(Vec<Vec<Int>>, Int)| -> Vec<Vec<Rat>> {
        m.0.iter().map(|r| r.iter().map(|x| Rat::new(x.clone(), m.1.clone())).collect()).collect()
    };
    norm(a) == norm(b)
}

/// An overorder maximal at p and equal to `o` at every other prime.
pub fn maximalize(o: &Order, p: u64) -> Result<Order> {
    let target = u32::from(o.alg.ramified_primes().contains(&p));
    let mut cur = o.clone();
    loop {
        let v = valuation(&Int::from(cur.disc * cur.level), p);
        if v <= target {
            return Ok(cur);
        }
        cur = minimal_overorder(&cur, p)?
            .ok_or_else(|| Error::SearchExhausted(format!("no overorder at {p} found")))?;
    }
}

fn minimal_overorder(o: &Order, p: u64) -> Result<Option<Order>> {
    let pr = Rat::from_integer(Int::from(p));
    let p2 = Int::from(p * p);
    let mut fallback: Vec<QuatElement> = Vec::new();
    for idx in 1..p.pow(4) {
        let mut v = [0i64; 4];
        let mut k = idx;
        for c in v.iter_mut() {
            *c = (k % p) as i64;
            k /= p;
        }
        // one representative per line: leading nonzero coordinate equals 1
        let lead = v.iter().rev().find(|&&c| c != 0).copied().unwrap();
        if lead != 1 {
            continue;
        }
        let y = o.elem(&v);
        let t = o.alg.trd(&y).to_integer();
        let n = o.alg.nrd(&y).to_integer();
        if !(t % p as i64 == Int::zero()) || !(&n % &p2).is_zero() {
            continue;
        }
        let x = y.scale(&(Rat::one() / &pr));
        let mut gens = o.basis.clone();
        gens.push(x.clone());
        let lat = lattice_of(&gens)?;
        if let Ok(ord) = Order::from_lattice(&o.alg, lat) {
            return Ok(Some(ord));
        }
        fallback.push(x);
    }
    for x in fallback {
        let mut gens = o.basis.clone();
        gens.push(x);
        if let Ok(ord) = make_order(&o.alg, &gens) {
            return Ok(Some(ord));
        }
    }
    Ok(None)
}

/// The algebra of discriminant D with structure constants of smallest
/// height in a fixed scan order.
pub fn algebra_for(d: u64) -> Result<QuatAlgebra> {
    if d == 0 || !is_squarefree(d) {
        return Err(Error::Domain(format!("D = {d} is not squarefree")));
    }
    let primes = prime_divisors(d);
    let definite = primes.len() % 2 == 1;
    for m in 1i64..200 {
        for a in -m..=m {
            for b in -m..=m {
                if a == 0 || b == 0 || a.abs().max(b.abs()) != m {
                    continue;
                }
                if !is_squarefree(a.unsigned_abs()) || !is_squarefree(b.unsigned_abs()) {
                    continue;
                }
                let alg = QuatAlgebra::from_ints(a, b)?;
                if alg.ramified_primes() == primes && alg.is_definite() == definite {
                    return Ok(alg);
                }
            }
        }
    }
    Err(Error::SearchExhausted(format!("no structure constants found for D = {d}")))
}

/// Maximal order of discriminant D computed from scratch.
pub fn compute_maximal_order(d: u64) -> Result<Order> {
    let alg = algebra_for(d)?;
    let gens: Vec<QuatElement> = (0..4).map(QuatElement::unit).collect();
    let mut o = make_order(&alg, &gens)?;
    let bad = prime_divisors(o.disc * o.level);
    for p in bad {
        o = maximalize(&o, p)?;
    }
    if o.level != 1 {
        return breach("maximalization left a nontrivial level");
    }
    Ok(o)
}

/// An Eichler order together with its local orientations: a character
/// O -> F_{p^2} at each p | D (stored by its values on the order basis) and a
/// superorder maximal at p for each p | N.
#[derive(Clone, Debug)]
pub struct OrientedEichlerOrder {
    pub order: Order,
    pub chars: BTreeMap<u64, Vec<Fp2>>,
    pub supers: BTreeMap<u64, ZLattice>,
}

impl OrientedEichlerOrder {
    pub fn alg(&self) -> &QuatAlgebra {
        &self.order.alg
    }

    pub fn disc(&self) -> u64 {
        self.order.disc
    }

    pub fn level(&self) -> u64 {
        self.order.level
    }

    /// Attach the default orientation at every p | D: the designated
    /// generator is the first basis element outside F_p + P, sent to the
    /// first root of its minimal polynomial in (v, u) order.
    pub fn with_default_chars(order: Order) -> Result<Self> {
        let mut chars = BTreeMap::new();
        for p in order.alg.ramified_primes() {
            chars.insert(p, default_character(&order, p)?);
        }
        Ok(OrientedEichlerOrder { order, chars, supers: BTreeMap::new() })
    }

    /// Value of the orientation at p on an element of O_p (coordinates only
    /// need to be p-integral).
    pub fn char_value(&self, p: u64, x: &QuatElement) -> Result<Fp2> {
        let chars = self
            .chars
            .get(&p)
            .ok_or_else(|| Error::Precondition(format!("no orientation at {p}")))?;
        let f = Fp2Field::new(p);
        let mut acc = f.from_fp(0);
        for (c, ch) in self.order.coords(x).iter().zip(chars) {
            if c.denom() % Int::from(p) == Int::zero() {
                return pre(format!("element is not integral at {p}"));
            }
            acc = f.add(acc, f.scale(rat_mod_p(c, p), *ch));
        }
        Ok(acc)
    }

    /// Characters at p|D recomputed on the basis of another order that
    /// agrees with this one at p.
    pub fn chars_on(&self, other: &Order) -> Result<BTreeMap<u64, Vec<Fp2>>> {
        let mut out = BTreeMap::new();
        for &p in self.chars.keys() {
            let v: Result<Vec<Fp2>> = other.basis.iter().map(|b| self.char_value(p, b)).collect();
            out.insert(p, v?);
        }
        Ok(out)
    }

    pub fn frobenius_at(&self, p: u64) -> Self {
        let mut out = self.clone();
        if let Some(ch) = out.chars.get_mut(&p) {
            let f = Fp2Field::new(p);
            for c in ch.iter_mut() {
                *c = f.frob(*c);
            }
        }
        out
    }

    /// Structural invariants: closure, discriminant, superorder indices.
    pub fn check(&self) -> Result<()> {
        let n = self.level();
        for (p, e) in factor(n) {
            let s = self
                .supers
                .get(&p)
                .ok_or_else(|| Error::Invariant(format!("missing superorder at {p}")))?;
            let idx = self.order.lat.index_in(s)?;
            if idx != num_traits::pow(Int::from(p), e as usize) {
                return breach(format!("superorder at {p} has index {idx}"));
            }
            let so = Order::from_lattice(self.alg(), s.clone())?;
            if valuation(&Int::from(so.level), p) != 0 {
                return breach(format!("superorder at {p} not maximal there"));
            }
        }
        let f = |p: u64| Fp2Field::new(p);
        for (&p, ch) in &self.chars {
            // the character is a ring map: check on products of basis elements
            let fld = f(p);
            for (i, x) in self.order.basis.iter().enumerate() {
                for (j, y) in self.order.basis.iter().enumerate() {
                    let lhs = self.char_value(p, &self.alg().mul(x, y))?;
                    if lhs != fld.mul(ch[i], ch[j]) {
                        return breach(format!("orientation at {p} is not multiplicative"));
                    }
                }
            }
        }
        Ok(())
    }
}

fn default_character(order: &Order, p: u64) -> Result<Vec<Fp2>> {
    let rad = order.trace_radical(p);
    let forms = order.residue_forms(&rad, p);
    if forms.len() != 2 {
        return breach(format!("residue ring at {p} is not of dimension 2"));
    }
    let image = |v: &[Int]| -> Vec<u64> {
        forms
            .iter()
            .map(|a| {
                v.iter()
                    .zip(a)
                    .fold(0u64, |s, (x, y)| (s + int_to_mod_p(x, p) * y) % p)
            })
            .collect()
    };
    let one = image(&order.int_coords(&order.alg.one()).unwrap());
    let imgs: Vec<Vec<u64>> = (0..4)
        .map(|k| {
            let mut e = vec![Int::zero(); 4];
            e[k] = Int::one();
            image(&e)
        })
        .collect();
    let independent = |w: &[u64]| (one[0] * w[1] + p * p - one[1] * w[0] % p) % p != 0;
    let g = (0..4)
        .find(|&k| independent(&imgs[k]))
        .ok_or_else(|| Error::Invariant("residue field generated by F_p".into()))?;
    let gel = &order.basis[g];
    let t = rat_mod_p(&order.alg.trd(gel), p);
    let n = rat_mod_p(&order.alg.nrd(gel), p);
    let f = Fp2Field::new(p);
    let theta = f.roots(t, n)[0];
    let mut out = Vec::new();
    for w in &imgs {
        let a = vec![vec![one[0], imgs[g][0]], vec![one[1], imgs[g][1]]];
        let s = solve_mod_p(&a, w, p).expect("basis of residue field");
        out.push(f.add(f.from_fp(s[0]), f.scale(s[1], theta)));
    }
    Ok(out)
}

/// Oriented Eichler order of level N in the algebra of discriminant D, built
/// from the catalog maximal order by local intersections.
pub fn eichler_order(d: u64, n: u64, cat: &Catalog) -> Result<OrientedEichlerOrder> {
    if d == 0 || !is_squarefree(d) {
        return Err(Error::Domain(format!("D = {d} is not squarefree")));
    }
    if n == 0 || d.gcd(&n) != 1 {
        return Err(Error::Domain(format!("gcd(D, N) != 1 for D = {d}, N = {n}")));
    }
    let omax = cat.maximal_order(d)?;
    let base = OrientedEichlerOrder::with_default_chars(omax.clone())?;
    if n == 1 {
        return Ok(base);
    }
    let alg = omax.alg.clone();
    let mut lat = omax.lat.clone();
    for (p, v) in factor(n) {
        let pv = num_traits::pow(Int::from(p), v as usize);
        let x = search_lattice(&alg, &omax.lat, 40, |x| {
            let nr = alg.nrd(x);
            if nr.is_zero() {
                return false;
            }
            let prim = omax
                .int_coords(x)
                .map_or(false, |c| c.iter().any(|ci| !(ci % Int::from(p)).is_zero()));
            prim && valuation_rat(&nr, p) == v as i64
        })
        .ok_or_else(|| Error::SearchExhausted(format!("no primitive element of norm valuation {v} at {p}")))?;
        let ideal = ideals::lattice_times(&alg, &omax.lat, &x, true)?
            .sum(&omax.lat.scale(&Rat::from_integer(pv)));
        let e = omax.lat.intersect(&right_order_of(&alg, &ideal));
        lat = lat.intersect(&e);
    }
    let order = Order::from_lattice(&alg, lat)?;
    if order.level != n {
        return breach(format!("constructed order has level {} instead of {n}", order.level));
    }
    let chars = base.chars_on(&order)?;
    let mut supers = BTreeMap::new();
    for p in prime_divisors(n) {
        supers.insert(p, ZLattice::glue_at(&omax.lat, &order.lat, p));
    }
    let out = OrientedEichlerOrder { order, chars, supers };
    out.check()?;
    Ok(out)
}

/// The two-sided ideal of norm p^n where p^n exactly divides D N.
#[derive(Clone, Debug)]
pub struct TwoSidedIdeal {
    pub lat: ZLattice,
    pub p: u64,
    pub n: u32,
}

pub fn two_sided_ideal(o: &OrientedEichlerOrder, p: u64) -> Result<TwoSidedIdeal> {
    let dn = o.disc() * o.level();
    let n = valuation(&Int::from(dn), p);
    if n == 0 {
        return pre(format!("{p} does not divide D N = {dn}"));
    }
    let alg = o.alg();
    let ord = &o.order;
    let pn = num_traits::pow(Int::from(p), n as usize);
    let lat = if n == 1 {
        ord.trace_radical(p)
    } else {
        let pno = ord.lat.scale(&Rat::from_integer(pn.clone()));
        let mut found = None;
        search_lattice(alg, &ord.lat, 40, |w| {
            let nr = alg.nrd(w);
            if nr.is_zero() || valuation_rat(&nr, p) != n as i64 {
                return false;
            }
            let primitive = ord
                .int_coords(w)
                .map_or(false, |c| c.iter().any(|ci| !(ci % Int::from(p)).is_zero()));
            if !primitive {
                return false;
            }
            let Ok(l) = ideals::lattice_times(alg, &ord.lat, w, false) else { return false };
            let i = l.sum(&pno);
            let two_sided = lattice_product(alg, &i, &ord.lat) == i;
            if two_sided && lattice_product(alg, &i, &i) == pno {
                found = Some(i);
                true
            } else {
                false
            }
        });
        found.ok_or_else(|| Error::SearchExhausted(format!("two-sided ideal of norm {p}^{n}")))?
    };
    let ideal = TwoSidedIdeal { lat, p, n };
    check_two_sided(o, &ideal)?;
    Ok(ideal)
}

pub fn check_two_sided(o: &OrientedEichlerOrder, i: &TwoSidedIdeal) -> Result<()> {
    let alg = o.alg();
    let ol = &o.order.lat;
    let pn = Rat::from_integer(num_traits::pow(Int::from(i.p), i.n as usize));
    if lattice_product(alg, ol, &i.lat) != i.lat || lattice_product(alg, &i.lat, ol) != i.lat {
        return breach("ideal is not two-sided");
    }
    if lattice_product(alg, &i.lat, &i.lat) != ol.scale(&pn) {
        return breach("square of the two-sided ideal differs from p^n O");
    }
    if lattice_norm(alg, &i.lat) != pn {
        return breach("two-sided ideal has the wrong norm");
    }
    Ok(())
}

fn p_part_is_trivial(a: &ZLattice, b: &ZLattice, p: u64) -> bool {
    let m = a.intersect(b);
    let i1 = m.index_in(a).expect("sublattice");
    let i2 = m.index_in(b).expect("sublattice");
    valuation(&i1, p) == 0 && valuation(&i2, p) == 0
}

/// Right order of a locally principal left O-ideal with orientations
/// transported: o'(y) = o(a y a^-1) and the superorder a^-1 O~ a, where a
/// generates the ideal locally.
pub fn star(i: &ZLattice, o: &OrientedEichlerOrder) -> Result<OrientedEichlerOrder> {
    let alg = o.alg();
    let ol = &o.order.lat;
    if lattice_product(alg, ol, i) != *i {
        return pre("lattice is not a left ideal of the order");
    }
    let nrd_i = lattice_norm(alg, i);
    if i.covolume() / ol.covolume() != &nrd_i * &nrd_i {
        return pre("ideal is not locally principal");
    }
    let right = Order::from_lattice(alg, right_order_of(alg, i))?;
    let mut chars = BTreeMap::new();
    for (&p, _) in &o.chars {
        let f = Fp2Field::new(p);
        let flip = valuation_rat(&nrd_i, p).rem_euclid(2) == 1;
        let mut v = Vec::new();
        for y in &right.basis {
            let c = o.char_value(p, y)?;
            v.push(if flip { f.frob(c) } else { c });
        }
        chars.insert(p, v);
    }
    let mut supers = BTreeMap::new();
    for (&q, sup) in &o.supers {
        let moved = if p_part_is_trivial(i, ol, q) {
            sup.clone()
        } else {
            let vq = valuation_rat(&nrd_i, q);
            let a = search_lattice(alg, i, 40, |x| {
                let nr = alg.nrd(x);
                !nr.is_zero() && valuation_rat(&nr, q) == vq
            })
            .ok_or_else(|| Error::SearchExhausted(format!("local generator at {q}")))?;
            conjugate_lattice(alg, sup, &a)?
        };
        supers.insert(q, ZLattice::glue_at(&moved, &right.lat, q));
    }
    Ok(OrientedEichlerOrder { order: right, chars, supers })
}

/// a^-1 L a.
pub fn conjugate_lattice(alg: &QuatAlgebra, l: &ZLattice, a: &QuatElement) -> Result<ZLattice> {
    let ai = alg.inv(a)?;
    let gens: Vec<QuatElement> = elements(l).iter().map(|x| alg.mul(&alg.mul(&ai, x), a)).collect();
    lattice_of(&gens)
}

/// Atkin-Lehner move: star with the two-sided ideal at each prime of m.
pub fn atkin_lehner_order(o: &OrientedEichlerOrder, m: u64) -> Result<OrientedEichlerOrder> {
    let dn = o.disc() * o.level();
    if dn % m != 0 || m.gcd(&(dn / m)) != 1 {
        return pre(format!("{m} is not an exact divisor of {dn}"));
    }
    let mut cur = o.clone();
    for p in prime_divisors(m) {
        let i = two_sided_ideal(&cur, p)?;
        let next = star(&i.lat, &cur)?;
        if next.order.lat != cur.order.lat {
            return breach("two-sided ideal changed the underlying order");
        }
        cur = next;
    }
    Ok(cur)
}
