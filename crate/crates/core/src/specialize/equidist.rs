//! Empirical distribution of specialized CM points over the classes of the
//! target, against the measure with weights 1/omega_i.
//!
//! Both maps used here are bijections onto their targets (checked
//! exhaustively by `run_phi`), so the image distribution over target
//! classes is counted on the target CM set directly: class i receives
//! #{optimal x in Lambda_i with the minimal polynomial of omega} |R^x| / |Lambda_i^x|
//! points.

use super::Ctx;
use crate::classsets::ClassSet;
use crate::core_algebra::arith::{kronecker, Int, Rat};
use crate::embeddings::{is_optimal, trace_norm_elements};
use crate::error::{pre, Result};
use crate::quad::{is_fundamental, QuadOrder};
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EquiCase {
    /// Singular points through the singular-reduction map.
    Singular,
    /// Components through the smooth-reduction map at an inert prime.
    Components,
}

#[derive(Clone, Debug, Serialize)]
pub struct DiscRow {
    pub disc: i64,
    pub counts: Vec<usize>,
    pub tv: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EquiReport {
    pub d: u64,
    pub n: u64,
    pub p: u64,
    pub case: EquiCase,
    pub target_d: u64,
    pub target_n: u64,
    pub weights: Vec<usize>,
    /// Theoretical mass of each class (as an exact fraction).
    pub mu: Vec<String>,
    pub rows: Vec<DiscRow>,
    pub skipped: Vec<i64>,
    pub tv_lower: f64,
    pub tv_upper: f64,
}

/// Thickness of a class: units modulo +-1 for singular points, the full
/// unit group for components.
pub fn thickness(units: usize, case: EquiCase) -> usize {
    match case {
        EquiCase::Singular => units / 2,
        EquiCase::Components => units,
    }
}

/// Number of CM points of R in each class of a definite class set.
pub fn class_counts(cs: &ClassSet, r: &QuadOrder) -> Result<Vec<usize>> {
    let ru = r.unit_count() as usize;
    let mut out = Vec::new();
    for rep in &cs.reps {
        let o = &rep.order.order;
        let mut k = 0usize;
        for v in trace_norm_elements(o, r.t, r.n)? {
            if is_optimal(o, &o.elem_int(&v)) {
                k += 1;
            }
        }
        if (k * ru) % rep.units != 0 {
            return crate::error::breach("unit group does not act freely modulo R^x");
        }
        out.push(k * ru / rep.units);
    }
    Ok(out)
}

/// Integer data of the trace-zero lattice {2x - trd(x) : x in O} of one
/// class: a reduced basis in order coordinates and its norm form
/// q(w) = sum_i a_ii w_i^2 + sum_{i<j} a_ij w_i w_j.
struct GrossLattice {
    basis: Vec<[i64; 4]>,
    form: [[i64; 3]; 3],
    one: [i64; 4],
}

fn gross_lattice(o: &crate::orders::Order) -> Result<GrossLattice> {
    use crate::lattices::enumerate::lll_gram;
    use crate::lattices::matrix::hnf;
    let tau = o.trd_vec();
    let e = o.int_coords(&o.alg.one()).ok_or_else(|| crate::error::Error::Invariant("1 not in order".into()))?;
    let rows: Vec<Vec<Int>> = (0..4)
        .map(|i| (0..4).map(|j| (if i == j { Int::from(2) } else { Int::zero() }) - &tau[i] * &e[j]).collect())
        .collect();
    let h: Vec<Vec<Int>> = hnf(rows, 4).into_iter().filter(|r| r.iter().any(|x| !x.is_zero())).collect();
    if h.len() != 3 {
        return crate::error::breach("trace-zero lattice does not have rank 3");
    }
    let g = o.nrd_gram();
    let gram = |a: &[Int], b: &[Int]| -> Rat {
        let mut s = Rat::zero();
        for i in 0..4 {
            for j in 0..4 {
                s += &g[i][j] * Rat::from_integer(&a[i] * &b[j]);
            }
        }
        s
    };
    let g3: Vec<Vec<Rat>> = h.iter().map(|a| h.iter().map(|b| gram(a, b)).collect()).collect();
    let t = lll_gram(&g3);
    let basis: Vec<Vec<Int>> = t
        .iter()
        .map(|row| (0..4).map(|j| (0..3).map(|a| &h[a][j] * Int::from(row[a])).sum()).collect())
        .collect();
    let to64 = |x: &Int| x.to_i64().ok_or_else(|| crate::error::Error::Invariant("coordinate overflow".into()));
    let mut form = [[0i64; 3]; 3];
    for i in 0..3 {
        for j in i..3 {
            let v = gram(&basis[i], &basis[j]) * Rat::from_integer(Int::from(if i == j { 1 } else { 2 }));
            if !v.is_integer() {
                return crate::error::breach("norm form on the trace-zero lattice is not integral");
            }
            form[i][j] = to64(&v.to_integer())?;
        }
    }
    let mut b64 = Vec::new();
    for r in &basis {
        b64.push([to64(&r[0])?, to64(&r[1])?, to64(&r[2])?, to64(&r[3])?]);
    }
    Ok(GrossLattice { basis: b64, form, one: [to64(&e[0])?, to64(&e[1])?, to64(&e[2])?, to64(&e[3])?] })
}

fn gcd64(a: i64, b: i64) -> i64 {
    num_integer::Integer::gcd(&a, &b)
}

/// Z + Z x saturated in Z^4, for integral coordinates of x and of 1.
fn saturated(one: &[i64; 4], x: &[i64; 4]) -> bool {
    let mut g = 0;
    for i in 0..4 {
        for j in i + 1..4 {
            g = gcd64(g, one[i] * x[j] - one[j] * x[i]);
        }
    }
    g == 1
}

/// For every m <= bound with `wanted(m)`, the number of optimal x in O with
/// trd x = m mod 2 and 4 nrd x - trd(x)^2 = m. One enumeration of the
/// ternary trace-zero lattice covers all m at once.
fn optimal_counts_by_norm(o: &crate::orders::Order, bound: i64, wanted: &dyn Fn(i64) -> bool) -> Result<Vec<usize>> {
    let gl = gross_lattice(o)?;
    let f = &gl.form;
    // Cholesky-style decomposition of the form for Fincke-Pohst
    let q = |i: usize, j: usize| -> f64 {
        if i == j { f[i][i] as f64 } else { f[i.min(j)][i.max(j)] as f64 / 2.0 }
    };
    let mut qm = [[0f64; 3]; 3];
    for i in 0..3 {
        qm[i][i] = q(i, i);
        for j in i + 1..3 {
            qm[i][j] = q(i, j);
        }
    }
    // q(w) = sum_i d_i (w_i + sum_{j>i} u_ij w_j)^2
    let mut d = [0f64; 3];
    let mut u = [[0f64; 3]; 3];
    let mut a = qm;
    for i in 0..3 {
        d[i] = a[i][i];
        if d[i] <= 0.0 {
            return crate::error::breach("norm form is not positive definite");
        }
        for j in i + 1..3 {
            u[i][j] = a[i][j] / d[i];
        }
        for j in i + 1..3 {
            for k in j..3 {
                a[j][k] -= d[i] * u[i][j] * u[i][k];
            }
        }
    }
    let eps = 1e-6;
    let b = bound as f64 + eps;
    let mut counts = vec![0usize; bound as usize + 1];
    let value = |w: &[i64; 3]| -> i64 {
        let mut s = 0;
        for i in 0..3 {
            for j in i..3 {
                s += f[i][j] * w[i] * w[j];
            }
        }
        s
    };
    let mut w = [0i64; 3];
    let r2 = b / d[2];
    let lim2 = r2.sqrt().floor() as i64;
    for w2 in -lim2..=lim2 {
        w[2] = w2;
        let rest2 = b - d[2] * (w2 as f64).powi(2);
        if rest2 < 0.0 {
            continue;
        }
        let c1 = -u[1][2] * w2 as f64;
        let h1 = (rest2 / d[1]).sqrt();
        for w1 in (c1 - h1).ceil() as i64..=(c1 + h1).floor() as i64 {
            w[1] = w1;
            let t1 = w1 as f64 + u[1][2] * w2 as f64;
            let rest1 = rest2 - d[1] * t1 * t1;
            if rest1 < 0.0 {
                continue;
            }
            let c0 = -(u[0][1] * w1 as f64 + u[0][2] * w2 as f64);
            let h0 = (rest1 / d[0]).sqrt();
            for w0 in (c0 - h0).ceil() as i64..=(c0 + h0).floor() as i64 {
                w[0] = w0;
                let m = value(&w);
                if m <= 0 || m > bound || !wanted(m) {
                    continue;
                }
                let t = m % 2;
                let mut x = [0i64; 4];
                for k in 0..4 {
                    let y: i64 = (0..3).map(|i| w[i] * gl.basis[i][k]).sum();
                    let num = t * gl.one[k] + y;
                    if num % 2 != 0 {
                        return crate::error::breach("half of a trace-zero vector left the order");
                    }
                    x[k] = num / 2;
                }
                if saturated(&gl.one, &x) {
                    counts[m as usize] += 1;
                }
            }
        }
    }
    Ok(counts)
}

/// `class_counts` for every fundamental discriminant -dmax <= d < 0 that
/// `wanted` accepts, from one enumeration per class.
pub fn class_count_table(cs: &ClassSet, dmax: u64, wanted: &dyn Fn(i64) -> bool) -> Result<BTreeMap<i64, Vec<usize>>> {
    let bound = dmax as i64;
    let mut per_class = Vec::new();
    for rep in &cs.reps {
        per_class.push(optimal_counts_by_norm(&rep.order.order, bound, &|m| wanted(-m))?);
    }
    let mut out = BTreeMap::new();
    for m in 3..=bound {
        if !wanted(-m) {
            continue;
        }
        let ru = QuadOrder::new(-m, 1)?.unit_count() as usize;
        let mut row = Vec::new();
        for (rep, cnt) in cs.reps.iter().zip(&per_class) {
            let k = cnt[m as usize];
            if (k * ru) % rep.units != 0 {
                return crate::error::breach("unit group does not act freely modulo R^x");
            }
            row.push(k * ru / rep.units);
        }
        out.insert(-m, row);
    }
    Ok(out)
}

fn tv(counts: &[usize], mu: &[Rat]) -> f64 {
    let total: usize = counts.iter().sum();
    let half: f64 = counts
        .iter()
        .zip(mu)
        .map(|(c, m)| (*c as f64 / total as f64 - m.to_f64().unwrap()).abs())
        .sum();
    half / 2.0
}

/// Frequencies of specialized CM points over target classes for all
/// fundamental discriminants -dmax <= d < 0 meeting the case condition at p.
pub fn equidistribution_stats(d: u64, n: u64, p: u64, case: EquiCase, dmax: u64, ctx: &Ctx) -> Result<EquiReport> {
    if d % p != 0 {
        return pre(format!("{p} does not divide D = {d}"));
    }
    let (td, tn) = match case {
        EquiCase::Singular => (d / p, n * p),
        EquiCase::Components => (d / p, n),
    };
    let cs = ctx.class_set(td, tn)?;
    let weights: Vec<usize> = cs.reps.iter().map(|r| thickness(r.units, case)).collect();
    let inv_sum: Rat = weights.iter().map(|w| Rat::new(1.into(), (*w as i64).into())).sum();
    let mu: Vec<Rat> = weights.iter().map(|w| Rat::new(1.into(), (*w as i64).into()) / &inv_sum).collect();
    let selected = |disc: i64| -> bool {
        if !is_fundamental(disc) {
            return false;
        }
        let k = kronecker(disc, p);
        match case {
            EquiCase::Singular => k == 0,
            EquiCase::Components => k == -1,
        }
    };
    // every other prime of D N must admit local embeddings
    let others: Vec<u64> = crate::core_algebra::arith::prime_divisors(d * n).into_iter().filter(|&q| q != p).collect();
    let locally_ok = |disc: i64| {
        others.iter().all(|&q| {
            let kq = kronecker(disc, q);
            if d % q == 0 { kq != 1 } else { kq != -1 }
        })
    };
    let table = class_count_table(&cs, dmax, &|disc| selected(disc) && locally_ok(disc))?;
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for a in 3..=dmax as i64 {
        let disc = -a;
        if !selected(disc) {
            continue;
        }
        let Some(counts) = table.get(&disc) else {
            skipped.push(disc);
            continue;
        };
        if counts.iter().all(|c| c.is_zero()) {
            skipped.push(disc);
            continue;
        }
        rows.push(DiscRow { disc, tv: tv(counts, &mu), counts: counts.clone() });
    }
    let mid = dmax as i64 / 2;
    let avg = |f: &dyn Fn(&DiscRow) -> bool| -> f64 {
        let v: Vec<f64> = rows.iter().filter(|r| f(r)).map(|r| r.tv).collect();
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    let tv_lower = avg(&|r: &DiscRow| -r.disc <= mid);
    let tv_upper = avg(&|r: &DiscRow| -r.disc > mid);
    Ok(EquiReport {
        d,
        n,
        p,
        case,
        target_d: td,
        target_n: tn,
        weights,
        mu: mu.iter().map(|m| m.to_string()).collect(),
        rows,
        skipped,
        tv_lower,
        tv_upper,
    })
}
