//! CM sets over indefinite algebras with squarefree level, realized as
//! torsors under W(R) x Pic(R): the point with coordinates (m, [J]) is
//! [J] * w_m(phi_0) for a fixed base embedding phi_0.

use super::local::local_numbers;
use super::relative::relative_class;
use super::{atkin_lehner, find_embedding_indefinite, local_label, pic_act, ramified_prime_form, OptimalEmbedding};
use crate::core_algebra::arith::is_squarefree;
use crate::error::{pre, Error, Result};
use crate::orders::{eichler_order, Catalog};
use crate::quad::{compose, Form, QuadOrder};
use std::sync::OnceLock;

#[derive(Clone, Debug)]
pub struct Torsor {
    pub r: QuadOrder,
    pub base: OptimalEmbedding,
    /// Primes p | D N with m_p = 2, in increasing order.
    pub w_primes: Vec<u64>,
    pub forms: Vec<Form>,
    pub local: Vec<(u64, u32)>,
    invariants: OnceLock<Vec<Form>>,
}

impl Torsor {
    pub fn new(d: u64, n: u64, r: &QuadOrder, cat: &Catalog, max_doublings: u32) -> Result<Self> {
        if !is_squarefree(n) {
            return pre("torsor coordinates need squarefree level");
        }
        let o = eichler_order(d, n, cat)?;
        if o.alg().is_definite() {
            return pre("torsor coordinates are for indefinite algebras");
        }
        let base = find_embedding_indefinite(&o, r, max_doublings)?;
        let local = local_numbers(&o.order, r)?;
        if let Some((p, m)) = local.iter().find(|(_, m)| *m > 2) {
            return Err(Error::Invariant(format!("m_{p} = {m} exceeds 2 at squarefree level")));
        }
        let w_primes = local.iter().filter(|(_, m)| *m == 2).map(|(p, _)| *p).collect();
        Ok(Torsor { r: *r, base, w_primes, forms: r.class_group(), local, invariants: OnceLock::new() })
    }

    pub fn len(&self) -> usize {
        self.forms.len() << self.w_primes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// (m, [J]) for a point index.
    pub fn coords(&self, idx: usize) -> (u64, Form) {
        let h = self.forms.len();
        let mask = idx / h;
        let m = self
            .w_primes
            .iter()
            .enumerate()
            .filter(|(b, _)| mask >> b & 1 == 1)
            .map(|(_, p)| *p)
            .product();
        (m, self.forms[idx % h])
    }

    pub fn index_of(&self, m: u64, f: &Form) -> Result<usize> {
        let j = self
            .forms
            .iter()
            .position(|g| g == f)
            .ok_or_else(|| Error::Domain(format!("{f:?} is not a reduced form of disc {}", self.r.disc)))?;
        let mut mask = 0;
        for (b, p) in self.w_primes.iter().enumerate() {
            if m % p == 0 {
                mask |= 1 << b;
            }
        }
        Ok(mask * self.forms.len() + j)
    }

    pub fn point(&self, idx: usize) -> Result<OptimalEmbedding> {
        let (m, f) = self.coords(idx);
        pic_act(&f, &atkin_lehner(m, &self.base)?)
    }

    /// Coordinates after [J] *.
    pub fn act_pic(&self, idx: usize, f: &Form) -> Result<usize> {
        let (m, g) = self.coords(idx);
        self.index_of(m, &compose(*f, g))
    }

    /// Coordinates after w_m: primes with m_p = 2 toggle the W part, primes
    /// ramified in K act through the class of the prime above them.
    pub fn act_w(&self, idx: usize, m: u64) -> Result<usize> {
        let (mut w, mut g) = self.coords(idx);
        for (p, mp) in &self.local {
            if m % p != 0 {
                continue;
            }
            if *mp == 2 {
                w = if w % p == 0 { w / p } else { w * p };
            } else {
                let q = ramified_prime_form(&self.r, *p).ok_or_else(|| {
                    Error::Precondition(format!("w_{p} with m_{p} = 1 but {p} unramified in R"))
                })?;
                g = compose(q, g);
            }
        }
        self.index_of(w, &g)
    }

    /// W part of an arbitrary embedding: the primes with m_p = 2 where its
    /// local label differs from the base point.
    pub fn w_part(&self, e: &OptimalEmbedding) -> Result<u64> {
        let mut m = 1;
        for &p in &self.w_primes {
            if local_label(e, p)? != local_label(&self.base, p)? {
                m *= p;
            }
        }
        Ok(m)
    }

    /// Relative class of every point against the base point. Checks that
    /// the labels of each point match its W coordinate and that the classes
    /// separate the points of each W coset.
    pub fn invariants(&self) -> Result<&[Form]> {
        if let Some(v) = self.invariants.get() {
            return Ok(v);
        }
        let mut v = Vec::with_capacity(self.len());
        for idx in 0..self.len() {
            let e = self.point(idx)?;
            if self.w_part(&e)? != self.coords(idx).0 {
                return Err(Error::Invariant(format!("labels of torsor point {idx} disagree with its coordinates")));
            }
            v.push(relative_class(&e, &self.base)?);
        }
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                if v[i] == v[j] && self.coords(i).0 == self.coords(j).0 {
                    return Err(Error::Invariant(format!("torsor points {i} and {j} share a relative class")));
                }
            }
        }
        Ok(self.invariants.get_or_init(|| v))
    }

    /// Index of the point isomorphic to an arbitrary embedding of R into an
    /// Eichler order of the same type in the same algebra.
    pub fn locate(&self, e: &OptimalEmbedding) -> Result<usize> {
        if e.r != self.r {
            return pre("embedding of a different quadratic order");
        }
        let m = self.w_part(e)?;
        let c = relative_class(e, &self.base)?;
        let inv = self.invariants()?;
        (0..self.len())
            .find(|&i| self.coords(i).0 == m && inv[i] == c)
            .ok_or_else(|| Error::Invariant(format!("no torsor point with W part {m} and class {c:?}")))
    }
}
