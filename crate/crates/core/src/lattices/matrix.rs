//! Dense exact matrices over Z, Q and F_p, stored row-major.

use crate::core_algebra::arith::{common_den, inv_mod, Int, Rat};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

pub type IMat = Vec<Vec<Int>>;
pub type QMat = Vec<Vec<Rat>>;

fn axpy_row(target: &mut [Int], q: &Int, src: &[Int]) {
    if q.is_zero() {
        return;
    }
    for (t, s) in target.iter_mut().zip(src) {
        if !s.is_zero() {
            *t -= q * s;
        }
    }
}

/// Row-style Hermite normal form of the span of `rows`, restricted to the
/// first `ncols` columns for pivoting. Returned rows are the nonzero echelon
/// rows; pivots are positive and entries above each pivot are reduced into
/// `[0, pivot)`.
pub fn hnf(rows: Vec<Vec<Int>>, ncols: usize) -> IMat {
    let (ech, _) = echelon(rows, ncols, true);
    ech
}

/// Echelon form over the first `ncols` columns. Rows whose pivot part
/// vanishes are returned separately (their trailing columns carry whatever
/// augmentation the caller appended).
fn echelon(mut rows: Vec<Vec<Int>>, ncols: usize, reduce: bool) -> (IMat, IMat) {
    rows.retain(|r| r.iter().any(|x| !x.is_zero()));
    let mut done: IMat = Vec::new();
    let mut pivots: Vec<usize> = Vec::new();
    for col in 0..ncols {
        loop {
            let mut best: Option<usize> = None;
            for (idx, r) in rows.iter().enumerate() {
                if !r[col].is_zero() {
                    match best {
                        None => best = Some(idx),
                        Some(b) if r[col].abs() < rows[b][col].abs() => best = Some(idx),
                        _ => {}
                    }
                }
            }
            let Some(b) = best else { break };
            let piv = rows.swap_remove(b);
            let mut clean = true;
            for r in rows.iter_mut() {
                if !r[col].is_zero() {
                    let q = r[col].div_floor(&piv[col]);
                    axpy_row(r, &q, &piv);
                    if !r[col].is_zero() {
                        clean = false;
                    }
                }
            }
            rows.push(piv);
            if clean {
                let mut piv = rows.pop().unwrap();
                if piv[col].is_negative() {
                    for x in piv.iter_mut() {
                        *x = -&*x;
                    }
                }
                if reduce {
                    for r in done.iter_mut() {
                        if !r[col].is_zero() {
                            let q = r[col].div_floor(&piv[col]);
                            axpy_row(r, &q, &piv);
                        }
                    }
                }
                done.push(piv);
                pivots.push(col);
                break;
            }
        }
    }
    let zero_main: IMat = rows
        .into_iter()
        .filter(|r| r[..ncols].iter().all(|x| x.is_zero()))
        .collect();
    (done, zero_main)
}

/// Basis of the lattice {x in Z^m : sum_i x_i rows_i = 0}; saturated.
pub fn left_kernel(rows: &[Vec<Int>], ncols: usize) -> IMat {
    let m = rows.len();
    let aug: IMat = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut v = r.clone();
            v.extend((0..m).map(|j| if i == j { Int::one() } else { Int::zero() }));
            v
        })
        .collect();
    // keep all rows including zero ones
    let (_, zero_rows) = echelon_keep(aug, ncols);
    let ker: IMat = zero_rows.into_iter().map(|r| r[ncols..].to_vec()).collect();
    hnf(ker, m)
}

fn echelon_keep(mut rows: Vec<Vec<Int>>, ncols: usize) -> (IMat, IMat) {
    let mut done: IMat = Vec::new();
    for col in 0..ncols {
        loop {
            let mut best: Option<usize> = None;
            for (idx, r) in rows.iter().enumerate() {
                if !r[col].is_zero() {
                    match best {
                        None => best = Some(idx),
                        Some(b) if r[col].abs() < rows[b][col].abs() => best = Some(idx),
                        _ => {}
                    }
                }
            }
            let Some(b) = best else { break };
            let piv = rows.swap_remove(b);
            let mut clean = true;
            for r in rows.iter_mut() {
                if !r[col].is_zero() {
                    let q = r[col].div_floor(&piv[col]);
                    axpy_row(r, &q, &piv);
                    if !r[col].is_zero() {
                        clean = false;
                    }
                }
            }
            if clean {
                done.push(piv);
                break;
            } else {
                rows.push(piv);
            }
        }
    }
    (done, rows)
}

/// Basis of {x in Z^n : a x = 0}.
pub fn right_kernel(a: &[Vec<Int>], ncols: usize) -> IMat {
    left_kernel(&transpose(a, ncols), a.len())
}

pub fn transpose<T: Clone>(a: &[Vec<T>], ncols: usize) -> Vec<Vec<T>> {
    (0..ncols).map(|c| a.iter().map(|r| r[c].clone()).collect()).collect()
}

/// Basis of the rational right kernel {x in Q^n : a x = 0}, integral rows.
pub fn rat_right_kernel(a: &[Vec<Rat>], ncols: usize) -> IMat {
    let ia: IMat = a
        .iter()
        .map(|r| {
            let d = common_den(r);
            r.iter().map(|x| (x * Rat::from_integer(d.clone())).to_integer()).collect()
        })
        .collect();
    right_kernel(&ia, ncols)
}

pub fn to_rat(a: &[Vec<Int>]) -> QMat {
    a.iter().map(|r| r.iter().map(|x| Rat::from_integer(x.clone())).collect()).collect()
}

pub fn rat_mul(a: &[Vec<Rat>], b: &[Vec<Rat>]) -> QMat {
    let n = a.len();
    let m = b[0].len();
    let k = b.len();
    let mut out = vec![vec![Rat::zero(); m]; n];
    for i in 0..n {
        for t in 0..k {
            if a[i][t].is_zero() {
                continue;
            }
            for j in 0..m {
                if !b[t][j].is_zero() {
                    out[i][j] += &a[i][t] * &b[t][j];
                }
            }
        }
    }
    out
}

pub fn rat_mat_vec(a: &[Vec<Rat>], v: &[Rat]) -> Vec<Rat> {
    a.iter()
        .map(|r| r.iter().zip(v).fold(Rat::zero(), |acc, (x, y)| acc + x * y))
        .collect()
}

pub fn rat_vec_mat(v: &[Rat], a: &[Vec<Rat>]) -> Vec<Rat> {
    let m = a[0].len();
    let mut out = vec![Rat::zero(); m];
    for (x, row) in v.iter().zip(a) {
        if x.is_zero() {
            continue;
        }
        for j in 0..m {
            out[j] += x * &row[j];
        }
    }
    out
}

pub fn rat_identity(n: usize) -> QMat {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { Rat::one() } else { Rat::zero() }).collect())
        .collect()
}

/// Inverse by Gauss-Jordan elimination; `None` if singular.
pub fn rat_inverse(m: &[Vec<Rat>]) -> Option<QMat> {
    let n = m.len();
    let mut a: QMat = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut v = r.clone();
            v.extend((0..n).map(|j| if i == j { Rat::one() } else { Rat::zero() }));
            v
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        let inv = Rat::one() / &a[col][col];
        for x in a[col].iter_mut() {
            *x *= &inv;
        }
        let prow = a[col].clone();
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for (x, y) in a[r].iter_mut().zip(&prow) {
                    if !y.is_zero() {
                        *x -= &f * y;
                    }
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

pub fn rat_det(m: &[Vec<Rat>]) -> Rat {
    let n = m.len();
    let mut a = m.to_vec();
    let mut det = Rat::one();
    for col in 0..n {
        let Some(piv) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return Rat::zero();
        };
        if piv != col {
            a.swap(col, piv);
            det = -det;
        }
        det *= &a[col][col];
        let prow = a[col].clone();
        for r in col + 1..n {
            if !a[r][col].is_zero() {
                let f = &a[r][col] / &prow[col];
                for (x, y) in a[r].iter_mut().zip(&prow) {
                    if !y.is_zero() {
                        *x -= &f * y;
                    }
                }
            }
        }
    }
    det
}

/// Solve x A = v for a square invertible A (row-vector convention).
pub fn rat_solve_left(a: &[Vec<Rat>], v: &[Rat]) -> Option<Vec<Rat>> {
    let inv = rat_inverse(a)?;
    Some(rat_vec_mat(v, &inv))
}

/// Elementary divisors (diagonal of the Smith form) of an integer matrix,
/// nonzero entries only, in divisibility order.
pub fn elementary_divisors(m: &[Vec<Int>]) -> Vec<Int> {
    if m.is_empty() {
        return vec![];
    }
    let mut a: IMat = m.to_vec();
    let rows = a.len();
    let cols = a[0].len();
    let mut out = Vec::new();
    let mut t = 0;
    while t < rows.min(cols) {
        // pick smallest nonzero entry in the remaining block
        let mut best: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                if !a[i][j].is_zero()
                    && best.map_or(true, |(bi, bj)| a[i][j].abs() < a[bi][bj].abs())
                {
                    best = Some((i, j));
                }
            }
        }
        let Some((bi, bj)) = best else { break };
        a.swap(t, bi);
        for r in a.iter_mut() {
            r.swap(t, bj);
        }
        loop {
            let mut changed = false;
            for i in t + 1..rows {
                if !a[i][t].is_zero() {
                    let q = a[i][t].div_floor(&a[t][t]);
                    let prow = a[t].clone();
                    axpy_row(&mut a[i], &q, &prow);
                    if !a[i][t].is_zero() {
                        changed = true;
                    }
                }
            }
            for j in t + 1..cols {
                if !a[t][j].is_zero() {
                    let q = a[t][j].div_floor(&a[t][t]);
                    for r in a.iter_mut() {
                        let v = &q * &r[t];
                        r[j] -= v;
                    }
                    if !a[t][j].is_zero() {
                        changed = true;
                    }
                }
            }
            if !changed {
                // divisibility of the rest of the block
                let mut fix = None;
                'outer: for i in t + 1..rows {
                    for j in t + 1..cols {
                        if !(&a[i][j] % &a[t][t]).is_zero() {
                            fix = Some(i);
                            break 'outer;
                        }
                    }
                }
                match fix {
                    Some(i) => {
                        let row = a[i].clone();
                        for (x, y) in a[t].iter_mut().zip(&row) {
                            *x += y;
                        }
                    }
                    None => break,
                }
            }
            // move smallest entry of row/col t into the corner
            let mut best = (t, t);
            for i in t..rows {
                if !a[i][t].is_zero() && a[i][t].abs() < a[best.0][best.1].abs() {
                    best = (i, t);
                }
            }
            for j in t..cols {
                if !a[t][j].is_zero() && a[t][j].abs() < a[best.0][best.1].abs() {
                    best = (t, j);
                }
            }
            if best.0 != t {
                a.swap(t, best.0);
            }
            if best.1 != t {
                for r in a.iter_mut() {
                    r.swap(t, best.1);
                }
            }
        }
        out.push(a[t][t].abs());
        t += 1;
    }
    out
}

/// Rank of a matrix over F_p.
pub fn rank_mod_p(rows: &[Vec<u64>], p: u64) -> usize {
    row_reduce_mod_p(rows.to_vec(), p).len()
}

/// Reduced row echelon basis (nonzero rows) over F_p.
pub fn row_reduce_mod_p(mut a: Vec<Vec<u64>>, p: u64) -> Vec<Vec<u64>> {
    if a.is_empty() {
        return a;
    }
    let ncols = a[0].len();
    let mut r = 0;
    for col in 0..ncols {
        let Some(piv) = (r..a.len()).find(|&i| a[i][col] % p != 0) else { continue };
        a.swap(r, piv);
        let inv = inv_mod(a[r][col], p);
        for x in a[r].iter_mut() {
            *x = *x * inv % p;
        }
        let prow = a[r].clone();
        for i in 0..a.len() {
            if i != r && a[i][col] % p != 0 {
                let f = a[i][col];
                for (x, y) in a[i].iter_mut().zip(&prow) {
                    *x = (*x + p * p - f * y % p) % p;
                }
            }
        }
        r += 1;
    }
    a.truncate(r);
    a
}

/// Basis of {x in F_p^n : a x = 0}.
pub fn nullspace_mod_p(a: &[Vec<u64>], ncols: usize, p: u64) -> Vec<Vec<u64>> {
    let rref = row_reduce_mod_p(a.to_vec(), p);
    let mut pivot_cols = Vec::new();
    for r in &rref {
        pivot_cols.push(r.iter().position(|&x| x != 0).unwrap());
    }
    let mut out = Vec::new();
    for free in 0..ncols {
        if pivot_cols.contains(&free) {
            continue;
        }
        let mut v = vec![0u64; ncols];
        v[free] = 1;
        for (r, &pc) in rref.iter().zip(&pivot_cols) {
            v[pc] = (p - r[free] % p) % p;
        }
        out.push(v);
    }
    out
}

/// Solve a x = b over F_p (a given by rows); returns one solution if any.
pub fn solve_mod_p(a: &[Vec<u64>], b: &[u64], p: u64) -> Option<Vec<u64>> {
    let ncols = a[0].len();
    let aug: Vec<Vec<u64>> = a
        .iter()
        .zip(b)
        .map(|(r, &bi)| {
            let mut v: Vec<u64> = r.iter().map(|x| x % p).collect();
            v.push(bi % p);
            v
        })
        .collect();
    let rref = row_reduce_mod_p(aug, p);
    let mut x = vec![0u64; ncols];
    for r in &rref {
        let pc = r.iter().position(|&v| v != 0).unwrap();
        if pc == ncols {
            return None;
        }
        x[pc] = r[ncols];
    }
    Some(x)
}

pub fn int_to_mod_p(x: &Int, p: u64) -> u64 {
    let m = x.mod_floor(&Int::from(p));
    crate::core_algebra::arith::to_u64(&m)
}
