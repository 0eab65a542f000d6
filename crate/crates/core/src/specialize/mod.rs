//! Specialization maps between CM sets, computed through bimodules and
//! degeneracy restrictions, with exhaustive bijectivity and equivariance
//! checks.

pub mod equidist;

use crate::bimodules::{
    base_psi, check_al_square, end_bimodule, gram_det, index_p_stable_extension, is_admissible, local_type,
    tensor_over_r, Bimodule,
};
use crate::classsets::{class_set, ClassSet};
use crate::core_algebra::arith::{kronecker, prime_divisors, valuation, Int};
use crate::embeddings::{atkin_lehner, enumerate_cm_definite, local_label, pic_act, CMSet, OptimalEmbedding, Torsor};
use crate::error::{breach, pre, Error, Result};
use crate::lattices::ZLattice;
use crate::orders::{eichler_order, Catalog, OrientedEichlerOrder, Order};
use crate::quad::{Form, QuadOrder};
use num_integer::Integer;
use serde::Serialize;
use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Locus {
    Singular,
    Nonsingular,
    SmoothFiber,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Case {
    CdSingular,
    CdSmooth,
    GoodSs,
    DrSmooth,
    DrSingular,
}

impl Case {
    pub fn parse(s: &str) -> Result<Case> {
        Ok(match s {
            "cd-singular" => Case::CdSingular,
            "cd-smooth" => Case::CdSmooth,
            "good-ss" => Case::GoodSs,
            "dr-smooth" => Case::DrSmooth,
            "dr-singular" => Case::DrSingular,
            _ => return Err(Error::Domain(format!("unknown case {s}"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Case::CdSingular => "cd-singular",
            Case::CdSmooth => "cd-smooth",
            Case::GoodSs => "good-ss",
            Case::DrSmooth => "dr-smooth",
            Case::DrSingular => "dr-singular",
        }
    }

    /// (D', N') of the target and its number of copies.
    pub fn target(&self, d: u64, n: u64, p: u64) -> (u64, u64, usize) {
        match self {
            Case::CdSingular => (d / p, n * p, 1),
            Case::CdSmooth => (d / p, n, 2),
            Case::GoodSs => (d * p, n, 1),
            Case::DrSmooth => (d, n / p, 2),
            Case::DrSingular => (d * p, n / p, 1),
        }
    }
}

pub fn reduction_locus(d: u64, n: u64, p: u64, r: &QuadOrder) -> Result<Locus> {
    if r.c % p == 0 {
        return pre(format!("{p} divides the conductor {}", r.c));
    }
    let ramified = kronecker(r.dk, p) == 0;
    if d % p == 0 || n % p == 0 {
        if n % p == 0 && valuation(&Int::from(n), p) > 1 {
            return pre(format!("{p}^2 divides N"));
        }
        Ok(if ramified { Locus::Singular } else { Locus::Nonsingular })
    } else {
        Ok(Locus::SmoothFiber)
    }
}

/// The case determined by (D, N, p) and the reduction locus.
pub fn case_of(d: u64, n: u64, p: u64, r: &QuadOrder) -> Result<Case> {
    let locus = reduction_locus(d, n, p, r)?;
    Ok(match (d % p == 0, n % p == 0, locus) {
        (true, _, Locus::Singular) => Case::CdSingular,
        (true, _, _) => Case::CdSmooth,
        (_, true, Locus::Singular) => Case::DrSingular,
        (_, true, _) => Case::DrSmooth,
        _ => Case::GoodSs,
    })
}

fn check_case(case: Case, d: u64, n: u64, p: u64, r: &QuadOrder) -> Result<()> {
    let actual = case_of(d, n, p, r)?;
    if actual != case {
        return pre(format!("({d}, {n}, {p}) with disc {} is a {} input, not {}", r.disc, actual.name(), case.name()));
    }
    let k = kronecker(r.dk, p);
    match case {
        Case::CdSmooth if k != -1 => pre(format!("{p} splits in K: the CM set is empty")),
        Case::GoodSs if k == 1 => pre(format!("{p} splits in K: no supersingular reduction")),
        _ => Ok(()),
    }
}

/// Shared caches: class sets, CM sets and the fixed embeddings psi.
pub struct Ctx {
    pub cat: Catalog,
    classes: RefCell<BTreeMap<(u64, u64), ClassSet>>,
    cms: RefCell<BTreeMap<(u64, u64, i64), CMSet>>,
    psis: RefCell<BTreeMap<(u64, i64), OptimalEmbedding>>,
}

impl Ctx {
    pub fn new(cat: Catalog) -> Self {
        Ctx { cat, classes: RefCell::default(), cms: RefCell::default(), psis: RefCell::default() }
    }

    pub fn class_set(&self, d: u64, n: u64) -> Result<ClassSet> {
        if let Some(c) = self.classes.borrow().get(&(d, n)) {
            return Ok(c.clone());
        }
        let c = class_set(d, n, &self.cat)?;
        self.classes.borrow_mut().insert((d, n), c.clone());
        Ok(c)
    }

    pub fn cm_set(&self, d: u64, n: u64, r: &QuadOrder) -> Result<CMSet> {
        let key = (d, n, r.disc);
        if let Some(c) = self.cms.borrow().get(&key) {
            return Ok(c.clone());
        }
        let c = enumerate_cm_definite(&self.class_set(d, n)?, r)?;
        self.cms.borrow_mut().insert(key, c.clone());
        Ok(c)
    }

    pub fn psi(&self, p: u64, r: &QuadOrder) -> Result<OptimalEmbedding> {
        let key = (p, r.disc);
        if let Some(e) = self.psis.borrow().get(&key) {
            return Ok(e.clone());
        }
        let e = base_psi(p, r, &self.cat)?;
        self.psis.borrow_mut().insert(key, e.clone());
        Ok(e)
    }
}

/// A CM set, enumerated over a definite class set or realized as a torsor
/// over an indefinite algebra.
pub enum AnyCmSet {
    Definite(CMSet),
    Torsor(Torsor),
}

impl AnyCmSet {
    pub fn new(d: u64, n: u64, r: &QuadOrder, ctx: &Ctx) -> Result<AnyCmSet> {
        let o = eichler_order(d, n, &ctx.cat)?;
        if o.alg().is_definite() {
            Ok(AnyCmSet::Definite(ctx.cm_set(d, n, r)?))
        } else {
            Ok(AnyCmSet::Torsor(Torsor::new(d, n, r, &ctx.cat, 8)?))
        }
    }

    pub fn len(&self) -> usize {
        match self {
            AnyCmSet::Definite(c) => c.len(),
            AnyCmSet::Torsor(t) => t.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn embedding(&self, idx: usize) -> Result<OptimalEmbedding> {
        match self {
            AnyCmSet::Definite(c) => c.embedding(idx),
            AnyCmSet::Torsor(t) => t.point(idx),
        }
    }

    pub fn locate(&self, e: &OptimalEmbedding) -> Result<usize> {
        match self {
            AnyCmSet::Definite(c) => c.locate(e),
            AnyCmSet::Torsor(t) => t.locate(e),
        }
    }

    /// Oriented class of the target order of a point. An indefinite
    /// algebra has a single oriented class at squarefree level.
    pub fn point_class(&self, idx: usize) -> usize {
        match self {
            AnyCmSet::Definite(c) => c.points[idx].class,
            AnyCmSet::Torsor(_) => 0,
        }
    }

    /// Oriented class of an arbitrary order of the same type.
    pub fn order_class(&self, o: &OrientedEichlerOrder) -> Result<usize> {
        match self {
            AnyCmSet::Definite(c) => Ok(c.classes.locate(o)?.0),
            AnyCmSet::Torsor(t) => {
                let b = &t.base.target;
                if o.alg() != b.alg() || o.disc() != b.disc() || o.level() != b.level() {
                    return pre("order of a different type");
                }
                Ok(0)
            }
        }
    }

    pub fn act_pic(&self, idx: usize, f: &Form) -> Result<usize> {
        match self {
            AnyCmSet::Definite(c) => c.locate(&pic_act(f, &c.embedding(idx)?)?),
            AnyCmSet::Torsor(t) => t.act_pic(idx, f),
        }
    }

    pub fn act_w(&self, idx: usize, m: u64) -> Result<usize> {
        match self {
            AnyCmSet::Definite(c) => c.locate(&atkin_lehner(m, &c.embedding(idx)?)?),
            AnyCmSet::Torsor(t) => t.act_w(idx, m),
        }
    }
}

/// Reduced form of a prime of R of norm q (q split or ramified in R).
fn prime_form(r: &QuadOrder, q: u64) -> Option<Form> {
    let qi = q as i64;
    (0..2 * qi)
        .find(|b| (b - r.t).rem_euclid(2) == 0 && (b * b - r.disc).rem_euclid(4 * qi) == 0)
        .map(|b| crate::quad::reduce(Form { a: qi, b, c: (b * b - r.disc) / (4 * qi) }))
}

/// Output of a specialization map on one point.
#[derive(Clone, Debug)]
pub struct Special {
    pub copy: usize,
    pub embedding: OptimalEmbedding,
    pub bimodule: Option<Bimodule>,
}

/// The level-N/p superorder at p, oriented by the remaining data of o.
pub fn restrict_to_superorder(o: &OrientedEichlerOrder, p: u64) -> Result<OrientedEichlerOrder> {
    let sup = o
        .supers
        .get(&p)
        .ok_or_else(|| Error::Precondition(format!("no superorder at {p}")))?;
    if valuation(&Int::from(o.level()), p) != 1 {
        return pre(format!("{p} does not exactly divide the level"));
    }
    let order = Order::from_lattice(o.alg(), sup.clone())?;
    let chars = o.chars_on(&order)?;
    let mut supers = BTreeMap::new();
    for (&q, s) in &o.supers {
        if q != p {
            supers.insert(q, ZLattice::glue_at(s, &order.lat, q));
        }
    }
    let out = OrientedEichlerOrder { order, chars, supers };
    out.check()?;
    Ok(out)
}

fn via_tensor(e: &OptimalEmbedding, p: u64, ctx: &Ctx, extend: bool) -> Result<Special> {
    let psi = ctx.psi(p, &e.r)?;
    let m = tensor_over_r(e, &psi)?;
    let (m, copy) = if extend {
        let mp = index_p_stable_extension(&m)?;
        let copy = match local_type(&mp, p)? {
            (2, 0) => 0,
            (0, 2) => 1,
            t => return breach(format!("extension of type {t:?}")),
        };
        (mp, copy)
    } else {
        (m, 0)
    };
    let end = end_bimodule(&m, &ctx.cat)?;
    Ok(Special { copy, embedding: end.delta, bimodule: Some(m) })
}

/// One specialization map applied to one embedding.
pub fn specialize_point(case: Case, p: u64, e: &OptimalEmbedding, ctx: &Ctx) -> Result<Special> {
    check_case(case, e.target.disc(), e.target.level(), p, &e.r)?;
    match case {
        Case::CdSingular => {
            let s = via_tensor(e, p, ctx, false)?;
            let m = s.bimodule.as_ref().expect("bimodule");
            if !is_admissible(m)? || local_type(m, p)? != (1, 1) {
                return breach("tensor bimodule at a ramified prime is not admissible of type (1,1)");
            }
            Ok(s)
        }
        Case::CdSmooth => via_tensor(e, p, ctx, true),
        Case::GoodSs => via_tensor(e, p, ctx, false),
        Case::DrSmooth => {
            let target = restrict_to_superorder(&e.target, p)?;
            let copy = local_label(e, p)?;
            Ok(Special { copy, embedding: OptimalEmbedding::new(e.r, target, e.image.clone())?, bimodule: None })
        }
        Case::DrSingular => {
            let target = restrict_to_superorder(&e.target, p)?;
            let e2 = OptimalEmbedding::new(e.r, target, e.image.clone())?;
            via_tensor(&e2, p, ctx, false)
        }
    }
}

/// Results of running a specialization map over a whole CM set.
#[derive(Clone, Debug, Serialize)]
pub struct PhiReport {
    pub case: Case,
    pub d: u64,
    pub n: u64,
    pub p: u64,
    pub disc: i64,
    pub target_d: u64,
    pub target_n: u64,
    pub source_len: usize,
    pub target_len: usize,
    pub copies: usize,
    /// (copy, target point) for each source point.
    pub images: Vec<(usize, usize)>,
    /// Oriented class of each image point.
    pub classes: Vec<usize>,
    /// Bijective in the sense appropriate to the case.
    pub bijective: bool,
    pub pic_equivariant: bool,
    pub w_equivariant: bool,
    /// w_p exchanges the copies (two-copy cases only).
    pub wp_swaps: Option<bool>,
    pub triangle: bool,
    pub al_square: bool,
    /// (admissible, type (1,1), |Gram det| of End) for each bimodule.
    pub bimodule_checks: Vec<(bool, bool, String)>,
    pub failures: Vec<String>,
}

impl PhiReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Evaluate a specialization map on every point of CM_{D,N}(R) and check
/// bijectivity, Pic(R) reciprocity, Atkin-Lehner equivariance, triangle
/// commutativity and the Atkin-Lehner square identity.
pub fn run_phi(case: Case, d: u64, n: u64, p: u64, r: &QuadOrder, ctx: &Ctx) -> Result<PhiReport> {
    check_case(case, d, n, p, r)?;
    let (td, tn, copies) = case.target(d, n, p);
    let src = AnyCmSet::new(d, n, r, ctx)?;
    let tgt = AnyCmSet::new(td, tn, r, ctx)?;
    let mut images = Vec::new();
    let mut classes = Vec::new();
    let mut failures = Vec::new();
    let mut triangle = true;
    let mut al_square = true;
    let mut bimodule_checks = Vec::new();
    let dn = d * n;
    let al_primes: Vec<u64> = prime_divisors(dn).into_iter().filter(|&q| q != p).collect();
    for idx in 0..src.len() {
        let e = src.embedding(idx)?;
        let s = specialize_point(case, p, &e, ctx)?;
        let pt = tgt.locate(&s.embedding)?;
        // triangle: the class of the output point against a direct location
        // of the endomorphism order
        let k = tgt.order_class(&s.embedding.target)?;
        if k != tgt.point_class(pt) {
            triangle = false;
        }
        if let Some(m) = &s.bimodule {
            if case == Case::CdSingular {
                let adm = is_admissible(m)?;
                let t11 = adm && local_type(m, p)? == (1, 1);
                bimodule_checks.push((adm, t11, gram_det(&s.embedding.target.order).to_string()));
            }
            for &q in &al_primes {
                if check_al_square(q, m, &ctx.cat).is_err() {
                    al_square = false;
                }
            }
        }
        images.push((s.copy, pt));
        classes.push(k);
    }
    // bijectivity
    let distinct: BTreeSet<(usize, usize)> = images.iter().cloned().collect();
    let injective = distinct.len() == images.len();
    let bijective = match case {
        Case::GoodSs if kronecker(r.dk, p) == -1 => {
            // injective into w_p-orbits of the target, hitting every orbit
            let orbit = |i: usize| -> Result<usize> { Ok(i.min(tgt.act_w(i, p)?)) };
            let orbs: Result<Vec<usize>> = images.iter().map(|&(_, i)| orbit(i)).collect();
            let orbs = orbs?;
            let set: BTreeSet<usize> = orbs.iter().cloned().collect();
            let all: Result<BTreeSet<usize>> = (0..tgt.len()).map(orbit).collect();
            set.len() == orbs.len() && set == all?
        }
        _ => injective && distinct.len() == copies * tgt.len(),
    };
    if !bijective {
        failures.push("bijectivity".into());
    }
    // reciprocity: Phi([J] phi) = [J]^-1 Phi(phi)
    let mut pic_ok = true;
    for f in r.class_group() {
        for idx in 0..src.len() {
            let j = src.act_pic(idx, &f)?;
            let (c0, t0) = images[idx];
            let (c1, t1) = images[j];
            if c0 != c1 || t1 != tgt.act_pic(t0, &f.inverse())? {
                pic_ok = false;
            }
        }
    }
    if !pic_ok {
        failures.push("pic reciprocity".into());
    }
    // Atkin-Lehner: every exact divisor of D N
    let mut w_bad = BTreeSet::new();
    let mut wp_swaps = None;
    for m in exact_divisors(dn) {
        if m == 1 {
            continue;
        }
        let sides_p = m % p == 0;
        for idx in 0..src.len() {
            let j = src.act_w(idx, m)?;
            let (c0, t0) = images[idx];
            let (c1, t1) = images[j];
            if copies == 2 && sides_p {
                // w_p exchanges the copies; the rest of m acts on the target
                let rest = m / p;
                let base = if rest == 1 { t0 } else { tgt.act_w(t0, rest)? };
                // for the degeneracy maps, w_p trades one superorder for the
                // other, i.e. moves the point by a prime of R above p
                let expect: Vec<usize> = match (case, prime_form(r, p)) {
                    (Case::DrSmooth, Some(f)) => vec![tgt.act_pic(base, &f)?, tgt.act_pic(base, &f.inverse())?],
                    _ => vec![base],
                };
                let swapped = c0 != c1;
                if m == p {
                    wp_swaps = Some(wp_swaps.unwrap_or(true) && swapped);
                }
                if !swapped || !expect.contains(&t1) {
                    w_bad.insert(m);
                }
            } else if c0 != c1 || t1 != tgt.act_w(t0, m)? {
                w_bad.insert(m);
            }
        }
    }
    if !w_bad.is_empty() {
        failures.push(format!("atkin-lehner equivariance at m in {w_bad:?}"));
    }
    if wp_swaps == Some(false) {
        failures.push("w_p does not swap copies".into());
    }
    if !triangle {
        failures.push("triangle".into());
    }
    if !al_square {
        failures.push("Q_Lambda^2".into());
    }
    let expected = Int::from((d / p.gcd(&d)) * n * p).pow(2).to_string();
    if bimodule_checks.iter().any(|(a, t, g)| !a || !t || *g != expected) {
        failures.push("bimodule admissibility/type/gram".into());
    }
    Ok(PhiReport {
        case,
        d,
        n,
        p,
        disc: r.disc,
        target_d: td,
        target_n: tn,
        source_len: src.len(),
        target_len: tgt.len(),
        copies,
        images,
        classes,
        bijective,
        pic_equivariant: pic_ok,
        w_equivariant: w_bad.is_empty(),
        wp_swaps,
        triangle,
        al_square,
        bimodule_checks,
        failures,
    })
}

/// m with m | n and gcd(m, n/m) = 1, increasing.
pub fn exact_divisors(n: u64) -> Vec<u64> {
    let mut out = vec![1u64];
    for p in prime_divisors(n) {
        let pe = p.pow(valuation(&Int::from(n), p));
        let more: Vec<u64> = out.iter().map(|m| m * pe).collect();
        out.extend(more);
    }
    out.sort();
    out
}

/// The first `count` fundamental discriminants -dmax <= d < 0 for which
/// (D, N, p) is an input of the given case with nonempty CM set.
pub fn sample_discs(case: Case, d: u64, n: u64, p: u64, count: usize, dmax: i64) -> Vec<i64> {
    let mut out = Vec::new();
    for a in 3..=dmax {
        if out.len() == count {
            break;
        }
        let disc = -a;
        if !crate::quad::is_fundamental(disc) {
            continue;
        }
        let Ok(r) = QuadOrder::new(disc, 1) else { continue };
        if check_case(case, d, n, p, &r).is_err() {
            continue;
        }
        let nonempty = prime_divisors(d * n).into_iter().all(|q| {
            let k = kronecker(disc, q);
            if d % q == 0 {
                k != 1
            } else {
                k != -1
            }
        });
        if nonempty {
            out.push(disc);
        }
    }
    out
}
