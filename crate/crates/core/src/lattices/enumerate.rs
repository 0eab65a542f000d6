//! LLL reduction on exact Gram matrices and Fincke-Pohst enumeration of
//! lattice points in an ellipsoid, with exact final filtering.

use super::matrix::{rat_inverse, rat_vec_mat, IMat, QMat};
use crate::core_algebra::arith::{common_den, Int, Rat};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

fn gram_transform(g: &QMat, t: &[Vec<i64>]) -> QMat {
    let n = g.len();
    let mut tg = vec![vec![Rat::zero(); n]; n];
    for i in 0..n {
        for k in 0..n {
            if t[i][k] == 0 {
                continue;
            }
            let c = Rat::from_integer(Int::from(t[i][k]));
            for j in 0..n {
                tg[i][j] += &c * &g[k][j];
            }
        }
    }
    let mut out = vec![vec![Rat::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut s = Rat::zero();
            for k in 0..n {
                if t[j][k] != 0 {
                    s += &tg[i][k] * Rat::from_integer(Int::from(t[j][k]));
                }
            }
            out[i][j] = s;
        }
    }
    out
}

fn gram_schmidt(g: &QMat) -> (QMat, Vec<Rat>) {
    let n = g.len();
    let mut mu = vec![vec![Rat::zero(); n]; n];
    let mut b = vec![Rat::zero(); n];
    for i in 0..n {
        for j in 0..i {
            let mut s = g[i][j].clone();
            for k in 0..j {
                s -= &mu[j][k] * &mu[i][k] * &b[k];
            }
            mu[i][j] = s / &b[j];
        }
        let mut s = g[i][i].clone();
        for k in 0..i {
            s -= &mu[i][k] * &mu[i][k] * &b[k];
        }
        b[i] = s;
    }
    (mu, b)
}

fn round_rat(x: &Rat) -> i64 {
    let two = Rat::from_integer(Int::from(2));
    let f = (x * &two + Rat::one()) / two;
    f.floor().to_integer().to_i64().expect("LLL coefficient overflow")
}

/// LLL (delta = 3/4) on a positive definite Gram matrix. Returns a
/// unimodular T such that the rows of T times the old basis form the
/// reduced basis.
pub fn lll_gram(g: &QMat) -> Vec<Vec<i64>> {
    let n = g.len();
    let mut t: Vec<Vec<i64>> = (0..n)
        .map(|i| (0..n).map(|j| i64::from(i == j)).collect())
        .collect();
    if n <= 1 {
        return t;
    }
    let delta = Rat::new(Int::from(3), Int::from(4));
    let mut k = 1;
    let mut guard = 0usize;
    while k < n {
        guard += 1;
        assert!(guard < 100_000, "LLL did not terminate");
        let mut cur = gram_transform(g, &t);
        let (mut mu, _) = gram_schmidt(&cur);
        for j in (0..k).rev() {
            let q = round_rat(&mu[k][j]);
            if q != 0 {
                let rj = t[j].clone();
                for (x, y) in t[k].iter_mut().zip(&rj) {
                    *x -= q * y;
                }
                cur = gram_transform(g, &t);
                mu = gram_schmidt(&cur).0;
            }
        }
        let (mu, b) = gram_schmidt(&cur);
        let lhs = &b[k];
        let rhs = (&delta - &mu[k][k - 1] * &mu[k][k - 1]) * &b[k - 1];
        if *lhs >= rhs {
            k += 1;
        } else {
            t.swap(k, k - 1);
            k = if k > 1 { k - 1 } else { 1 };
        }
    }
    t
}

/// Exact value of (v - c)^T G (v - c).
pub fn quad_value(g: &QMat, v: &[Rat]) -> Rat {
    let n = g.len();
    let mut s = Rat::zero();
    for i in 0..n {
        if v[i].is_zero() {
            continue;
        }
        let mut r = Rat::zero();
        for j in 0..n {
            if !v[j].is_zero() {
                r += &g[i][j] * &v[j];
            }
        }
        s += &v[i] * r;
    }
    s
}

struct Exact {
    g: Vec<Vec<i128>>,
    cnum: Vec<i128>,
    cden: i128,
    bnum: i128,
    bden: i128,
    fallback: Option<(QMat, Vec<Rat>, Rat)>,
}

impl Exact {
    fn new(g: &QMat, c: &[Rat], bound: &Rat) -> Self {
        let fallback = Some((g.to_vec(), c.to_vec(), bound.clone()));
        let flat: Vec<Rat> = g.iter().flatten().cloned().collect();
        let dg = common_den(&flat);
        let dc = common_den(c);
        let gi: Option<Vec<Vec<i128>>> = g
            .iter()
            .map(|r| {
                r.iter()
                    .map(|x| (x * Rat::from_integer(dg.clone())).to_integer().to_i128())
                    .collect()
            })
            .collect();
        let ci: Option<Vec<i128>> = c
            .iter()
            .map(|x| (x * Rat::from_integer(dc.clone())).to_integer().to_i128())
            .collect();
        // value * dg * dc^2 <= bound * dg * dc^2
        let scaled = bound * Rat::from_integer(&dg * &dc * &dc);
        let bn = scaled.numer().to_i128();
        let bd = scaled.denom().to_i128();
        let small = gi.as_ref().map_or(false, |m| {
            m.iter().flatten().all(|x| x.abs() < (1i128 << 40))
        }) && dc < BigInt::from(1i64 << 20)
            && ci.as_ref().map_or(false, |v| v.iter().all(|x| x.abs() < (1i128 << 40)))
            && bn.map_or(false, |x| x.abs() < (1i128 << 100))
            && bd.map_or(false, |x| x < (1i128 << 20));
        if small {
            Exact {
                g: gi.unwrap(),
                cnum: ci.unwrap(),
                cden: dc.to_i128().unwrap(),
                bnum: bn.unwrap(),
                bden: bd.unwrap(),
                fallback: None,
            }
        } else {
            Exact { g: vec![], cnum: vec![], cden: 1, bnum: 0, bden: 1, fallback }
        }
    }

    fn accepts(&self, v: &[i64]) -> bool {
        if let Some((g, c, b)) = &self.fallback {
            let d: Vec<Rat> = v
                .iter()
                .zip(c)
                .map(|(x, ci)| Rat::from_integer(Int::from(*x)) - ci)
                .collect();
            return quad_value(g, &d) <= *b;
        }
        let n = v.len();
        let w: Vec<i128> = (0..n).map(|i| self.cden * v[i] as i128 - self.cnum[i]).collect();
        if w.iter().any(|x| x.abs() > (1i128 << 40)) {
            let d: Vec<BigInt> = w.iter().map(|&x| BigInt::from(x)).collect();
            let mut s = BigInt::zero();
            for i in 0..n {
                for j in 0..n {
                    s += &d[i] * BigInt::from(self.g[i][j]) * &d[j];
                }
            }
            return s * BigInt::from(self.bden) <= BigInt::from(self.bnum);
        }
        let mut s: i128 = 0;
        for i in 0..n {
            if w[i] == 0 {
                continue;
            }
            let mut r: i128 = 0;
            for j in 0..n {
                r += self.g[i][j] * w[j];
            }
            s += w[i] * r;
        }
        match s.checked_mul(self.bden) {
            Some(l) => l <= self.bnum,
            None => BigInt::from(s) * BigInt::from(self.bden) <= BigInt::from(self.bnum),
        }
    }
}

/// Visit every integer vector v with (v - c)^T G (v - c) <= bound. The
/// callback returns false to stop early. Returns false if stopped.
pub fn for_each_close_vector<F: FnMut(&[i64]) -> bool>(
    gram: &QMat,
    center: Option<&[Rat]>,
    bound: &Rat,
    mut f: F,
) -> bool {
    let n = gram.len();
    if bound.is_negative() {
        return true;
    }
    let zero_c = vec![Rat::zero(); n];
    let c = center.unwrap_or(&zero_c);
    let exact = Exact::new(gram, c, bound);
    let t = lll_gram(gram);
    let red = gram_transform(gram, &t);
    let tq: QMat = t
        .iter()
        .map(|r| r.iter().map(|&x| Rat::from_integer(Int::from(x))).collect())
        .collect();
    let tinv = rat_inverse(&tq).expect("unimodular");
    let cr: Vec<f64> = rat_vec_mat(c, &tinv).iter().map(|x| x.to_f64().unwrap()).collect();
    let mut q: Vec<Vec<f64>> = red
        .iter()
        .map(|r| r.iter().map(|x| x.to_f64().unwrap()).collect())
        .collect();
    for i in 0..n {
        for j in i + 1..n {
            q[j][i] = q[i][j];
            q[i][j] /= q[i][i];
        }
        for k in i + 1..n {
            for l in k..n {
                q[k][l] -= q[k][i] * q[i][l];
            }
        }
    }
    let bf = bound.to_f64().unwrap();
    let eps = 1e-7 * (1.0 + bf.abs());
    let mut w = vec![0i64; n];
    let mut v = vec![0i64; n];
    let mut st = Search { q: &q, cr: &cr, t: &t, exact: &exact, eps };
    st.rec(n, bf + eps, &mut w, &mut v, &mut f)
}

struct Search<'a> {
    q: &'a [Vec<f64>],
    cr: &'a [f64],
    t: &'a [Vec<i64>],
    exact: &'a Exact,
    eps: f64,
}

impl Search<'_> {
    fn rec<F: FnMut(&[i64]) -> bool>(
        &mut self,
        level: usize,
        rem: f64,
        w: &mut [i64],
        v: &mut [i64],
        f: &mut F,
    ) -> bool {
        let n = w.len();
        if level == 0 {
            for (j, vj) in v.iter_mut().enumerate() {
                *vj = (0..n).map(|i| w[i] * self.t[i][j]).sum();
            }
            if self.exact.accepts(v) {
                return f(v);
            }
            return true;
        }
        let i = level - 1;
        let mut s = 0.0;
        for j in i + 1..n {
            s += self.q[i][j] * (w[j] as f64 - self.cr[j]);
        }
        let qi = self.q[i][i];
        let r = (rem.max(0.0) / qi).sqrt();
        let mid = self.cr[i] - s;
        let lo = (mid - r - 1e-9).ceil() as i64;
        let hi = (mid + r + 1e-9).floor() as i64;
        for x in lo..=hi {
            let d = x as f64 - mid;
            let used = qi * d * d;
            if used > rem + self.eps {
                continue;
            }
            w[i] = x;
            if !self.rec(i, rem - used, w, v, f) {
                return false;
            }
        }
        w[i] = 0;
        true
    }
}

pub fn close_vectors(gram: &QMat, center: Option<&[Rat]>, bound: &Rat) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    for_each_close_vector(gram, center, bound, |v| {
        out.push(v.to_vec());
        true
    });
    out
}

pub fn short_vectors(gram: &QMat, bound: &Rat) -> Vec<Vec<i64>> {
    close_vectors(gram, None, bound)
}

/// Integer transform as a BigInt matrix.
pub fn to_int_mat(t: &[Vec<i64>]) -> IMat {
    t.iter().map(|r| r.iter().map(|&x| Int::from(x)).collect()).collect()
}

pub fn gcd_vec(v: &[i64]) -> i64 {
    v.iter().fold(0i64, |g, &x| g.gcd(&x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core_algebra::arith::rat;

    fn brute(g: &QMat, c: &[Rat], b: &Rat, box_: i64) -> usize {
        let n = g.len();
        let mut count = 0;
        let total = (2 * box_ + 1).pow(n as u32);
        for idx in 0..total {
            let mut k = idx;
            let mut d = Vec::new();
            for i in 0..n {
                let x = k % (2 * box_ + 1) - box_;
                k /= 2 * box_ + 1;
                d.push(Rat::from_integer(Int::from(x)) - &c[i]);
            }
            if quad_value(g, &d) <= *b {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn matches_box_count() {
        let g = vec![
            vec![rat(2, 1), rat(1, 1), rat(0, 1)],
            vec![rat(1, 1), rat(3, 1), rat(1, 2)],
            vec![rat(0, 1), rat(1, 2), rat(5, 1)],
        ];
        let c = vec![rat(1, 3), rat(-1, 2), rat(0, 1)];
        let b = rat(17, 1);
        let got = close_vectors(&g, Some(&c), &b).len();
        assert_eq!(got, brute(&g, &c, &b, 6));
        let got0 = short_vectors(&g, &b).len();
        assert_eq!(got0, brute(&g, &vec![rat(0, 1); 3], &b, 6));
    }

    #[test]
    fn lll_is_unimodular() {
        let g = vec![
            vec![rat(101, 1), rat(99, 1)],
            vec![rat(99, 1), rat(98, 1)],
        ];
        let t = lll_gram(&g);
        let det = t[0][0] * t[1][1] - t[0][1] * t[1][0];
        assert_eq!(det.abs(), 1);
        let red = gram_transform(&g, &t);
        assert!(red[0][0] <= rat(2, 1));
    }
}
