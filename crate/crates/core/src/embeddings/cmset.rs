//! CM sets over definite algebras: every optimal embedding into every class
//! representative, modulo conjugation by the finite unit groups.

use super::local::local_numbers;
use super::{canonical_image, is_optimal, trace_norm_elements, OptimalEmbedding};
use crate::classsets::{unit_group, ClassSet};
use crate::core_algebra::arith::Int;
use crate::core_algebra::QuatElement;
use crate::error::{breach, pre, Error, Result};
use crate::quad::QuadOrder;
use std::collections::BTreeSet;

/// A CM point: class index and the unit-conjugacy-least image of omega.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct CMPoint {
    pub class: usize,
    pub key: Vec<Int>,
}

#[derive(Clone, Debug)]
pub struct CMSet {
    pub r: QuadOrder,
    pub classes: ClassSet,
    pub units: Vec<Vec<QuatElement>>,
    pub points: Vec<CMPoint>,
    /// (p, m_p) for p | D N.
    pub local: Vec<(u64, u32)>,
}

/// Enumerate CM_{D,N}(R) over the representatives of a definite class set.
pub fn enumerate_cm_definite(cs: &ClassSet, r: &QuadOrder) -> Result<CMSet> {
    if !cs.base.alg().is_definite() {
        return pre("CM enumeration needs a definite algebra");
    }
    let mut units = Vec::new();
    let mut points = BTreeSet::new();
    for (k, rep) in cs.reps.iter().enumerate() {
        let o = &rep.order.order;
        let u = unit_group(o)?;
        for v in trace_norm_elements(o, r.t, r.n)? {
            let x = o.elem_int(&v);
            if !is_optimal(o, &x) {
                continue;
            }
            let (key, _) = canonical_image(o, &u, &x)?;
            points.insert(CMPoint { class: k, key });
        }
        units.push(u);
    }
    let local = local_numbers(&cs.base.order, r)?;
    Ok(CMSet { r: *r, classes: cs.clone(), units, points: points.into_iter().collect(), local })
}

impl CMSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// h(R) * prod m_p.
    pub fn expected_len(&self) -> usize {
        self.local.iter().fold(self.r.class_number(), |a, (_, m)| a * *m as usize)
    }

    pub fn embedding(&self, idx: usize) -> Result<OptimalEmbedding> {
        let pt = self
            .points
            .get(idx)
            .ok_or_else(|| Error::Precondition(format!("no CM point {idx}")))?;
        let target = self.classes.reps[pt.class].order.clone();
        let image = target.order.elem_int(&pt.key);
        OptimalEmbedding::new(self.r, target, image)
    }

    /// Index of the point represented by an arbitrary embedding into an
    /// order of this class set.
    pub fn locate(&self, e: &OptimalEmbedding) -> Result<usize> {
        if e.r != self.r {
            return pre("embedding of a different quadratic order");
        }
        let (k, iso) = self.classes.locate(&e.target)?;
        let x = iso.apply(&e.image);
        let o = &self.classes.reps[k].order.order;
        let (key, _) = canonical_image(o, &self.units[k], &x)?;
        let pt = CMPoint { class: k, key };
        match self.points.binary_search(&pt) {
            Ok(i) => Ok(i),
            Err(_) => breach("located embedding is not in the enumerated CM set"),
        }
    }
}
