//! Local embedding numbers by exhaustive search in O / p^k O, plus the
//! closed formulas used as cross-checks and as a fallback for large p.

use crate::core_algebra::arith::{kronecker, prime_divisors, valuation, Int};
use crate::error::{pre, Error, Result};
use super::trace_slice;
use crate::lattices::matrix::right_kernel;
use crate::orders::Order;
use crate::quad::QuadOrder;
use num_integer::Integer;
use num_traits::ToPrimitive;
use std::collections::HashMap;

/// Work limit (number of residue vectors visited) for the exhaustive search.
pub const BRUTE_FORCE_LIMIT: u64 = 30_000_000;

/// Arithmetic in O / M O for M = p^k with elements as coordinate vectors.
struct Residues {
    m: u64,
    table: Vec<Vec<[u64; 4]>>,
    trd: [u64; 4],
    two_gram: [[i128; 4]; 4],
    one: [u64; 4],
}

impl Residues {
    fn new(o: &Order, m: u64) -> Self {
        let mi = Int::from(m);
        let red = |x: &Int| x.mod_floor(&mi).to_u64().expect("reduced");
        let mt = o.mult_table();
        let table = mt
            .iter()
            .map(|row| row.iter().map(|c| [red(&c[0]), red(&c[1]), red(&c[2]), red(&c[3])]).collect())
            .collect();
        let tv = o.trd_vec();
        let trd = [red(&tv[0]), red(&tv[1]), red(&tv[2]), red(&tv[3])];
        let g = o.nrd_gram();
        let mut two_gram = [[0i128; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                let v = &g[i][j] * Int::from(2);
                two_gram[i][j] = v.to_integer().to_i128().expect("small gram");
            }
        }
        let oc = o.int_coords(&o.alg.one()).expect("1 in O");
        let one = [red(&oc[0]), red(&oc[1]), red(&oc[2]), red(&oc[3])];
        Residues { m, table, trd, two_gram, one }
    }

    fn mul(&self, x: &[u64; 4], y: &[u64; 4]) -> [u64; 4] {
        let m = self.m as u128;
        let mut acc = [0u128; 4];
        for i in 0..4 {
            if x[i] == 0 {
                continue;
            }
            for j in 0..4 {
                if y[j] == 0 {
                    continue;
                }
                let s = x[i] as u128 * y[j] as u128 % m;
                let c = &self.table[i][j];
                for k in 0..4 {
                    acc[k] = (acc[k] + s * c[k] as u128) % m;
                }
            }
        }
        [acc[0] as u64, acc[1] as u64, acc[2] as u64, acc[3] as u64]
    }

    fn trd(&self, x: &[u64; 4]) -> u64 {
        let m = self.m as u128;
        (0..4).map(|i| x[i] as u128 * self.trd[i] as u128 % m).sum::<u128>() as u64 % self.m
    }

    /// nrd of the integral lift, reduced mod M.
    fn nrd(&self, x: &[u64; 4]) -> u64 {
        let mut s: i128 = 0;
        for i in 0..4 {
            for j in 0..4 {
                s += self.two_gram[i][j] * x[i] as i128 * x[j] as i128;
            }
        }
        ((s / 2).rem_euclid(self.m as i128)) as u64
    }

    fn conj(&self, x: &[u64; 4]) -> [u64; 4] {
        let t = self.trd(x);
        let m = self.m;
        let mut out = [0u64; 4];
        for k in 0..4 {
            out[k] = ((t as u128 * self.one[k] as u128 + (m - x[k]) as u128) % m as u128) as u64;
        }
        out
    }

    fn scale(&self, c: u64, x: &[u64; 4]) -> [u64; 4] {
        let m = self.m as u128;
        [0, 1, 2, 3].map(|k| (c as u128 * x[k] as u128 % m) as u64)
    }

    fn key(&self, x: &[u64; 4]) -> u64 {
        ((x[0] * self.m + x[1]) * self.m + x[2]) * self.m + x[3]
    }

    /// x is not congruent to a scalar modulo p.
    fn primitive_mod(&self, x: &[u64; 4], p: u64) -> bool {
        let e: Vec<u64> = self.one.iter().map(|c| c % p).collect();
        let i0 = e.iter().position(|&c| c != 0).expect("1 is primitive");
        let c = x[i0] % p * inv_mod_any(e[i0], p) % p;
        (0..4).any(|k| (x[k] % p + p - c * e[k] % p) % p != 0)
    }
}

/// Exact Hensel test for residue classes on the trace slice: if nrd(x) - n
/// has valuation v exceeding twice the gradient valuation d along the
/// trace-zero directions, an exact root lies within p^(v - d) of x.
struct Lifter {
    p: i128,
    n: i128,
    t: i128,
    two_gram: [[i128; 4]; 4],
    trd: [i128; 4],
    dirs: Vec<[i128; 4]>,
    unit_trace: [i128; 4],
    max_level: u32,
}

fn small(v: &[Int]) -> [i128; 4] {
    [0, 1, 2, 3].map(|i| v[i].to_i128().expect("small coordinates"))
}

fn val_i128(x: i128, p: i128, cap: u32) -> u32 {
    if x == 0 {
        return cap;
    }
    let mut v = 0;
    let mut y = x;
    while y % p == 0 && v < cap {
        y /= p;
        v += 1;
    }
    v
}

impl Lifter {
    fn new(o: &Order, r: &QuadOrder, p: u64, k: u32, res: &Residues) -> Self {
        let tau = o.trd_vec().to_vec();
        let dirs = right_kernel(&[tau.clone()], 4).iter().map(|v| small(v)).collect();
        let unit_trace = small(&trace_slice(o, 1).expect("trd is onto Z").v0);
        Lifter {
            p: p as i128,
            n: r.n as i128,
            t: r.t as i128,
            two_gram: res.two_gram,
            trd: small(&tau),
            dirs,
            unit_trace,
            max_level: k + 8,
        }
    }

    fn pair(&self, x: &[i128; 4], y: &[i128; 4]) -> i128 {
        let mut s = 0;
        for i in 0..4 {
            for j in 0..4 {
                s += self.two_gram[i][j] * x[i] * y[j];
            }
        }
        s
    }

    /// Exact representative of a residue class mod m with trace exactly t.
    fn exact(&self, x: &[u64; 4], m: u64) -> [i128; 4] {
        let mut v = [0, 1, 2, 3].map(|i| x[i] as i128);
        let tr: i128 = (0..4).map(|i| self.trd[i] * v[i]).sum();
        let c = (self.t - tr) / m as i128;
        for i in 0..4 {
            v[i] += c * self.unit_trace[i];
        }
        v
    }

    /// The class x + p^j O^0 (trace-zero directions) contains an exact root
    /// of nrd = n; x has trd = t and nrd = n mod p^j.
    fn liftable(&self, x: &[i128; 4], j: u32) -> bool {
        let cap = 4 * self.max_level;
        let delta = self.dirs.iter().map(|d| val_i128(self.pair(x, d), self.p, cap)).min().unwrap();
        let vf = val_i128(self.pair(x, x) / 2 - self.n, self.p, cap);
        // Hensel: a root exists within p^(vf - delta) of x
        if vf > 2 * delta && vf - delta >= j {
            return true;
        }
        if j >= self.max_level {
            return false;
        }
        let pj = self.p.pow(j);
        let modulus = pj * self.p;
        for c in 0..self.p.pow(3) {
            let cs = [c % self.p, c / self.p % self.p, c / (self.p * self.p)];
            let mut y = *x;
            for (a, d) in self.dirs.iter().enumerate() {
                for i in 0..4 {
                    y[i] += pj * cs[a] * d[i];
                }
            }
            if (self.pair(&y, &y) / 2 - self.n) % modulus == 0 && self.liftable(&y, j + 1) {
                return true;
            }
        }
        false
    }
}

fn inv_mod_any(a: u64, m: u64) -> u64 {
    let g = (a as i64).extended_gcd(&(m as i64));
    assert_eq!(g.gcd, 1, "{a} is not invertible mod {m}");
    g.x.rem_euclid(m as i64) as u64
}

/// Generators of (O / p^k O)^x: lifts of generators of (O / p O)^x found
/// greedily, and 1 + p^j b_i for the congruence filtration.
fn unit_generators(res: &Residues, o: &Order, p: u64, k: u32) -> Vec<[u64; 4]> {
    let small = Residues::new(o, p);
    let mut units = Vec::new();
    for idx in 0..p.pow(4) {
        let mut v = [0u64; 4];
        let mut r = idx;
        for c in v.iter_mut() {
            *c = r % p;
            r /= p;
        }
        if small.nrd(&v) % p != 0 {
            units.push(v);
        }
    }
    let mut gens: Vec<[u64; 4]> = Vec::new();
    let mut group: std::collections::HashSet<[u64; 4]> = [small.one].into_iter().collect();
    for u in &units {
        if group.contains(u) {
            continue;
        }
        gens.push(*u);
        let mut frontier: Vec<[u64; 4]> = group.iter().copied().collect();
        while let Some(x) = frontier.pop() {
            for g in &gens {
                let y = small.mul(&x, g);
                if group.insert(y) {
                    frontier.push(y);
                }
            }
        }
        if group.len() == units.len() {
            break;
        }
    }
    let mut out = gens;
    let mut pj = p;
    for _ in 1..k {
        for i in 0..4 {
            let mut v = res.one;
            v[i] = (v[i] + pj) % res.m;
            out.push(v);
        }
        pj *= p;
    }
    out
}

/// Number of O_p^x-conjugacy classes of optimal embeddings R_p -> O_p,
/// counted in O / p^k O with k = 2 + v_p(disc R) among the residue classes
/// that contain an exact embedding.
pub fn local_embedding_number(o: &Order, r: &QuadOrder, p: u64) -> Result<u32> {
    let dn = o.disc() * o.level();
    if dn % p != 0 {
        return pre(format!("{p} does not divide D N = {dn}"));
    }
    let k = 2 + valuation(&Int::from(r.disc), p);
    let m = p.pow(k);
    let res = Residues::new(o, m);
    let t = (r.t.rem_euclid(m as i64)) as u64;
    let n = (r.n.rem_euclid(m as i64)) as u64;
    let pivot = (0..4).find(|&i| res.trd[i] % p != 0);
    let mut sols: Vec<[u64; 4]> = Vec::new();
    let lifter = Lifter::new(o, r, p, k, &res);
    let consider = |x: [u64; 4], sols: &mut Vec<[u64; 4]>| {
        if res.nrd(&x) == n
            && res.trd(&x) == t
            && res.primitive_mod(&x, p)
            && lifter.liftable(&lifter.exact(&x, m), k)
        {
            sols.push(x);
        }
    };
    match pivot {
        Some(j0) => {
            let inv = inv_mod_any(res.trd[j0], m);
            let others: Vec<usize> = (0..4).filter(|&i| i != j0).collect();
            for idx in 0..m.pow(3) {
                let mut x = [0u64; 4];
                let mut rem = idx;
                let mut partial: u128 = 0;
                for &i in &others {
                    x[i] = rem % m;
                    rem /= m;
                    partial += x[i] as u128 * res.trd[i] as u128;
                }
                let need = (t as u128 + m as u128 * m as u128 - partial % m as u128) % m as u128;
                x[j0] = (need * inv as u128 % m as u128) as u64;
                consider(x, &mut sols);
            }
        }
        None => {
            for idx in 0..m.pow(4) {
                let mut x = [0u64; 4];
                let mut rem = idx;
                for c in x.iter_mut() {
                    *c = rem % m;
                    rem /= m;
                }
                consider(x, &mut sols);
            }
        }
    }
    let index: HashMap<u64, usize> = sols.iter().enumerate().map(|(i, x)| (res.key(x), i)).collect();
    let gens = unit_generators(&res, o, p, k);
    let inverses: Vec<([u64; 4], u64)> = gens
        .iter()
        .map(|u| (res.conj(u), inv_mod_any(res.nrd(u), m)))
        .collect();
    let mut seen = vec![false; sols.len()];
    let mut orbits = 0u32;
    for s in 0..sols.len() {
        if seen[s] {
            continue;
        }
        orbits += 1;
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(i) = stack.pop() {
            for (u, (ubar, ninv)) in gens.iter().zip(&inverses) {
                let y = res.scale(*ninv, &res.mul(&res.mul(u, &sols[i]), ubar));
                let j = *index.get(&res.key(&y)).expect("conjugation preserves the solution set");
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    Ok(orbits)
}

/// Work estimate for `local_embedding_number`.
pub fn brute_force_cost(r: &QuadOrder, p: u64) -> u64 {
    let k = 2 + valuation(&Int::from(r.disc), p);
    p.checked_pow(3 * k).unwrap_or(u64::MAX)
}

/// Closed formula, defined when p does not divide the conductor and either
/// p | D or p exactly divides N.
pub fn embedding_number_formula(r: &QuadOrder, d: u64, n: u64, p: u64) -> Option<u32> {
    if r.c % p == 0 {
        return None;
    }
    let s = kronecker(r.dk, p);
    if d % p == 0 {
        Some((1 - s) as u32)
    } else if n % p == 0 && (n / p) % p != 0 {
        Some((1 + s) as u32)
    } else {
        None
    }
}

/// m_p by exhaustive search when affordable, else by the closed formula.
pub fn m_p(o: &Order, r: &QuadOrder, p: u64) -> Result<u32> {
    if brute_force_cost(r, p) <= BRUTE_FORCE_LIMIT {
        return local_embedding_number(o, r, p);
    }
    embedding_number_formula(r, o.disc(), o.level(), p).ok_or_else(|| {
        Error::SearchExhausted(format!("m_{p} is beyond the exhaustive search limit and has no closed form here"))
    })
}

/// (p, m_p) for every p | D N.
pub fn local_numbers(o: &Order, r: &QuadOrder) -> Result<Vec<(u64, u32)>> {
    prime_divisors(o.disc() * o.level())
        .into_iter()
        .map(|p| Ok((p, m_p(o, r, p)?)))
        .collect()
}
