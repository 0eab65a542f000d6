//! Optimal embeddings of imaginary quadratic orders into oriented Eichler
//! orders, the actions of Pic(R) and of Atkin-Lehner moves on them, and
//! local class labels.

pub mod cmset;
pub mod local;
pub mod relative;
pub mod torsor;

use crate::core_algebra::arith::{int, valuation, Int, Rat};
use crate::core_algebra::fp2::Fp2Field;
use crate::core_algebra::QuatElement;
use crate::error::{pre, Error, Result};
use crate::lattices::matrix::{elementary_divisors, int_to_mod_p, nullspace_mod_p, rat_inverse, rat_mul, right_kernel, to_rat, transpose, IMat, QMat};
use crate::lattices::enumerate::for_each_close_vector;
use crate::orders::ideals::{lattice_times, majorant_gram};
use crate::orders::{atkin_lehner_order, star, OrientedEichlerOrder, Order};
use crate::quad::{ideal_of_class, reduce, Form, QuadOrder};
pub use cmset::{enumerate_cm_definite, CMPoint, CMSet};
pub use local::{embedding_number_formula, local_embedding_number};
pub use relative::{oriented_connecting_ideal, relative_class};
pub use torsor::Torsor;
use num_integer::Integer;
use num_traits::{One, Zero};

/// An optimal embedding R -> O, recorded by the image of omega.
#[derive(Clone, Debug)]
pub struct OptimalEmbedding {
    pub r: QuadOrder,
    pub target: OrientedEichlerOrder,
    pub image: QuatElement,
}

impl OptimalEmbedding {
    pub fn new(r: QuadOrder, target: OrientedEichlerOrder, image: QuatElement) -> Result<Self> {
        let e = OptimalEmbedding { r, target, image };
        e.check()?;
        Ok(e)
    }

    pub fn check(&self) -> Result<()> {
        let (t, n) = self.target.alg().min_poly(&self.image);
        if t != Rat::from_integer(int(self.r.t)) || n != Rat::from_integer(int(self.r.n)) {
            return Err(Error::Invariant(format!(
                "image has minimal polynomial x^2 - ({t}) x + ({n}), expected t = {}, n = {}",
                self.r.t, self.r.n
            )));
        }
        if !is_optimal(&self.target.order, &self.image) {
            return Err(Error::Invariant("embedding is not optimal".into()));
        }
        Ok(())
    }

    /// Image of x + y omega.
    pub fn eval(&self, a: (i64, i64)) -> QuatElement {
        let one = self.target.alg().one();
        one.scale(&Rat::from_integer(int(a.0)))
            .add(&self.image.scale(&Rat::from_integer(int(a.1))))
    }
}

/// Z + Z x is a saturated sublattice of O (x integral, not congruent to a
/// scalar modulo any prime).
pub fn is_optimal(o: &Order, x: &QuatElement) -> bool {
    let Some(c) = o.int_coords(x) else { return false };
    let e = o.int_coords(&o.alg.one()).expect("1 in O");
    let d = elementary_divisors(&[e, c]);
    d.len() == 2 && d.iter().all(|v| v.is_one())
}

/// The affine slice {v : trd(sum v_i b_i) = t} written as v0 + w K.
pub(crate) struct TraceSlice {
    pub v0: Vec<Int>,
    pub k: IMat,
}

pub(crate) fn trace_slice(o: &Order, t: i64) -> Option<TraceSlice> {
    let tau = o.trd_vec().to_vec();
    let mut g = Int::zero();
    let mut v0 = vec![Int::zero(); 4];
    for (i, ti) in tau.iter().enumerate() {
        // maintain sum v0_j tau_j = g
        let e = g.extended_gcd(ti);
        if e.gcd.is_zero() {
            continue;
        }
        for v in v0.iter_mut() {
            *v *= &e.x;
        }
        v0[i] = e.y.clone();
        g = e.gcd;
    }
    let ti = int(t);
    if g.is_zero() || !(&ti % &g).is_zero() {
        return None;
    }
    let f = &ti / &g;
    for v in v0.iter_mut() {
        *v *= &f;
    }
    let k = right_kernel(&[tau], 4);
    Some(TraceSlice { v0, k })
}

/// Gram matrix G3 = K G K^T of a quadratic form on the slice directions, and
/// the center c with v0 + c K the critical point of the form on the slice.
pub(crate) fn slice_form(g: &QMat, s: &TraceSlice) -> (QMat, Vec<Rat>, Rat) {
    let k = to_rat(&s.k);
    let kt = transpose(&k, 4);
    let g3 = rat_mul(&rat_mul(&k, g), &kt);
    let v0: Vec<Rat> = s.v0.iter().map(|x| Rat::from_integer(x.clone())).collect();
    let gv: Vec<Rat> = (0..4).map(|i| (0..4).map(|j| &g[i][j] * &v0[j]).sum()).collect();
    let h: Vec<Rat> = (0..3).map(|a| (0..4).map(|i| &k[a][i] * &gv[i]).sum()).collect();
    let inv = rat_inverse(&g3).expect("slice form nondegenerate");
    let c: Vec<Rat> = (0..3).map(|a| -(0..3).map(|b| &inv[a][b] * &h[b]).sum::<Rat>()).collect();
    let v0gv0: Rat = (0..4).map(|i| &v0[i] * &gv[i]).sum();
    let cgc: Rat = (0..3)
        .map(|a| (0..3).map(|b| &c[a] * &g3[a][b] * &c[b]).sum::<Rat>())
        .sum();
    // value on the slice = (w - c) G3 (w - c) + constant
    (g3, c, v0gv0 - cgc)
}

pub(crate) fn slice_point(s: &TraceSlice, w: &[i64]) -> Vec<Int> {
    let mut v = s.v0.clone();
    for (a, wa) in w.iter().enumerate() {
        if *wa != 0 {
            for i in 0..4 {
                v[i] += &s.k[a][i] * wa;
            }
        }
    }
    v
}

/// All x in a definite order with trd x = t and nrd x = n, as coordinates.
pub fn trace_norm_elements(o: &Order, t: i64, n: i64) -> Result<Vec<Vec<Int>>> {
    if !o.alg.is_definite() {
        return pre("trace-norm enumeration needs a definite algebra");
    }
    let Some(s) = trace_slice(o, t) else { return Ok(vec![]) };
    let (g3, c, cst) = slice_form(o.nrd_gram(), &s);
    let bound = Rat::from_integer(int(n)) - cst;
    let target = Rat::from_integer(int(n));
    let mut out = Vec::new();
    for_each_close_vector(&g3, Some(&c), &bound, |w| {
        let v = slice_point(&s, w);
        if o.alg.nrd(&o.elem_int(&v)) == target {
            out.push(v);
        }
        true
    });
    out.sort();
    Ok(out)
}

/// One optimal embedding into an order of an indefinite algebra, found by
/// walking the trace slice in shells of doubling majorant radius.
pub fn find_embedding_indefinite(
    o: &OrientedEichlerOrder,
    r: &QuadOrder,
    max_doublings: u32,
) -> Result<OptimalEmbedding> {
    let alg = o.alg();
    if alg.is_definite() {
        return pre("find_embedding_indefinite needs an indefinite algebra");
    }
    for (p, m) in local::local_numbers(&o.order, r)? {
        if m == 0 {
            return pre(format!("no optimal embedding: m_{p} = 0 for disc {}", r.disc));
        }
    }
    let ord = &o.order;
    let s = trace_slice(ord, r.t)
        .ok_or_else(|| Error::Precondition("no element of the required trace".into()))?;
    let (m3, c, _) = slice_form(&majorant_gram(alg, &ord.lat), &s);
    let target = Rat::from_integer(int(r.n));
    let mut b = Rat::one();
    for (a, row) in m3.iter().enumerate() {
        if row[a] > b {
            b = row[a].clone();
        }
    }
    let mut found: Option<(Vec<i64>, crate::core_algebra::QuatElement)> = None;
    for _ in 0..=max_doublings {
        for_each_close_vector(&m3, Some(&c), &b, |w| {
            let x = ord.elem_int(&slice_point(&s, w));
            if alg.nrd(&x) == target && is_optimal(ord, &x) {
                let better = match &found {
                    None => true,
                    Some((prev, _)) => w < prev.as_slice(),
                };
                if better {
                    found = Some((w.to_vec(), x));
                }
            }
            true
        });
        if let Some((_, x)) = found {
            return OptimalEmbedding::new(*r, o.clone(), x);
        }
        b = b * Rat::from_integer(int(2));
    }
    Err(Error::SearchExhausted(format!(
        "no embedding of disc {} found within {max_doublings} doublings",
        r.disc
    )))
}

/// Z-generators of the image phi(J) of the ideal attached to a form.
pub fn ideal_image(e: &OptimalEmbedding, f: &Form) -> Result<Vec<QuatElement>> {
    let j = ideal_of_class(&e.r, f)?;
    Ok(j.gens.iter().map(|g| e.eval(*g)).collect())
}

/// [J] * phi: the same ring map into the right order of O phi(J).
pub fn pic_act(f: &Form, e: &OptimalEmbedding) -> Result<OptimalEmbedding> {
    if f.disc() != e.r.disc {
        return Err(Error::Domain(format!(
            "form of discriminant {} acting on embeddings of discriminant {}",
            f.disc(),
            e.r.disc
        )));
    }
    let alg = e.target.alg();
    let mut lat = None::<crate::lattices::ZLattice>;
    for g in ideal_image(e, f)? {
        let l = lattice_times(alg, &e.target.order.lat, &g, true)?;
        lat = Some(match lat {
            None => l,
            Some(acc) => acc.sum(&l),
        });
    }
    let i = lat.expect("two generators");
    let target = star(&i, &e.target)?;
    OptimalEmbedding::new(e.r, target, e.image.clone())
}

/// w_m * phi: the same ring map into the Atkin-Lehner twisted target.
pub fn atkin_lehner(m: u64, e: &OptimalEmbedding) -> Result<OptimalEmbedding> {
    let target = atkin_lehner_order(&e.target, m)?;
    OptimalEmbedding::new(e.r, target, e.image.clone())
}

/// Reduced form of a prime ideal of norm q dividing disc R (q ramified).
pub fn ramified_prime_form(r: &QuadOrder, q: u64) -> Option<Form> {
    let qi = q as i64;
    if r.disc % qi != 0 {
        return None;
    }
    (-qi..=qi)
        .find(|b| (b - r.t).rem_euclid(2) == 0 && (b * b - r.disc) % (4 * qi) == 0)
        .map(|b| reduce(Form { a: qi, b, c: (b * b - r.disc) / (4 * qi) }))
}

fn roots_mod_p(t: i64, n: i64, p: u64) -> Vec<u64> {
    let pi = p as i64;
    (0..p)
        .filter(|&x| {
            let xi = x as i64;
            (xi * xi - t * xi + n).rem_euclid(pi) == 0
        })
        .collect()
}

/// Character O -> F_q given by the action of O on the simple quotient
/// S / O, where S is the orientation superorder at q (q exactly divides N).
pub fn level_character(o: &OrientedEichlerOrder, q: u64, x: &QuatElement) -> Result<u64> {
    let sup = o
        .supers
        .get(&q)
        .ok_or_else(|| Error::Precondition(format!("no superorder at {q}")))?;
    if valuation(&Int::from(o.level()), q) != 1 {
        return pre(format!("{q} does not exactly divide the level"));
    }
    let alg = o.alg();
    let to_sup = |y: &QuatElement| -> Result<Vec<u64>> {
        sup.coords(&y.coeffs())
            .iter()
            .map(|c| {
                if !c.is_integer() {
                    return Err(Error::Precondition("element not in the superorder".into()));
                }
                Ok(int_to_mod_p(&c.to_integer(), q))
            })
            .collect()
    };
    let rows: Result<Vec<Vec<u64>>> = o.order.basis.iter().map(|b| to_sup(b)).collect();
    let f = nullspace_mod_p(&rows?, 4, q);
    if f.len() != 1 {
        return Err(Error::Invariant("superorder quotient is not simple".into()));
    }
    let f = &f[0];
    let i0 = f.iter().position(|&c| c != 0).expect("nonzero form");
    let y = QuatElement::from_rats(&sup.basis()[i0]);
    let xy = to_sup(&alg.mul(x, &y))?;
    let val: u64 = xy.iter().zip(f).map(|(a, b)| a * b % q).sum::<u64>() % q;
    Ok(val * crate::core_algebra::arith::inv_mod(f[i0], q) % q)
}

/// Local class label of an embedding at p | D N (p exactly dividing N):
/// the position of the orientation value of phi(omega) among the roots of
/// its minimal polynomial.
pub fn local_label(e: &OptimalEmbedding, p: u64) -> Result<usize> {
    let (t, n) = (e.r.t, e.r.n);
    if e.target.disc() % p == 0 {
        let f = Fp2Field::new(p);
        let roots = f.roots(t.rem_euclid(p as i64) as u64, n.rem_euclid(p as i64) as u64);
        let v = e.target.char_value(p, &e.image)?;
        roots
            .iter()
            .position(|z| *z == v)
            .ok_or_else(|| Error::Invariant("orientation value is not a root".into()))
    } else if e.target.level() % p == 0 {
        let roots = roots_mod_p(t, n, p);
        let v = level_character(&e.target, p, &e.image)?;
        roots
            .iter()
            .position(|z| *z == v)
            .ok_or_else(|| Error::Invariant("level character value is not a root".into()))
    } else {
        pre(format!("{p} does not divide D N"))
    }
}

/// Lexicographically least coordinate vector of u x u^-1 over the finite
/// unit group, with the corresponding element.
pub fn canonical_image(o: &Order, units: &[QuatElement], x: &QuatElement) -> Result<(Vec<Int>, QuatElement)> {
    let alg = &o.alg;
    let mut best: Option<(Vec<Int>, QuatElement)> = None;
    for u in units {
        let y = alg.mul(&alg.mul(u, x), &alg.conj(u));
        let c = o
            .int_coords(&y)
            .ok_or_else(|| Error::Invariant("conjugate left the order".into()))?;
        if best.as_ref().map_or(true, |(b, _)| c < *b) {
            best = Some((c, y));
        }
    }
    best.ok_or_else(|| Error::Invariant("empty unit group".into()))
}
