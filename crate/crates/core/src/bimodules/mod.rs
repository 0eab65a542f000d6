//! Rank-8 (O, S)-bimodules: O a level-N Eichler order in B, S a maximal
//! order in the definite algebra H of discriminant p. Everything lives in a
//! fixed ambient Q^8 = (O (x)_R S) (x) Q carrying both actions; a bimodule is
//! a lattice there stable under both. Endomorphisms are 8x8 matrices acting
//! on row vectors, and composition a o b is the matrix product b a.

use crate::core_algebra::arith::{int, rat_mod_p, valuation, Int, Rat};
use crate::core_algebra::fp2::{Fp2, Fp2Field};
use crate::core_algebra::{QuatAlgebra, QuatElement};
use crate::embeddings::{is_optimal, trace_norm_elements, OptimalEmbedding};
use crate::error::{breach, pre, Error, Result};
use crate::lattices::enumerate::short_vectors;
use crate::lattices::matrix::{
    elementary_divisors, nullspace_mod_p, rat_det, rat_identity, rat_inverse, rat_mul, rat_right_kernel,
    rat_vec_mat, right_kernel, row_reduce_mod_p, solve_mod_p, to_rat, transpose, QMat,
};
use crate::lattices::ZLattice;
use crate::orders::ideals::{elements, lattice_product};
use crate::orders::{two_sided_ideal, Catalog, OrientedEichlerOrder, Order};
use crate::quad::{conjugate_ideal, ideal_of_class, Form, QuadOrder};
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

/// Change of basis between the commutant of the two actions and the
/// catalog algebra of discriminant D0.
#[derive(Clone, Debug)]
struct Ident {
    alg: QuatAlgebra,
    /// Images of 1, i, j, ij as 8x8 matrices.
    basis: [QMat; 4],
    pivots: Vec<(usize, usize)>,
    inv: QMat,
}

impl Ident {
    fn coords(&self, y: &QMat) -> Result<QuatElement> {
        let v: Vec<Rat> = self.pivots.iter().map(|&(r, c)| y[r][c].clone()).collect();
        let c = rat_vec_mat(&v, &self.inv);
        let mut back = zero_mat(8);
        for (k, b) in self.basis.iter().enumerate() {
            back = mat_add(&back, &mat_scale(b, &c[k]));
        }
        if back != *y {
            return breach("matrix is not in the commutant");
        }
        Ok(QuatElement::from_rats(&c))
    }

    fn matrix(&self, x: &QuatElement) -> QMat {
        let mut acc = zero_mat(8);
        for (k, b) in self.basis.iter().enumerate() {
            acc = mat_add(&acc, &mat_scale(b, &x.0[k]));
        }
        acc
    }
}

/// The ambient space Q^8 with the left O- and right S-actions.
#[derive(Debug)]
pub struct Ambient {
    pub o: OrientedEichlerOrder,
    pub s: OrientedEichlerOrder,
    pub r: QuadOrder,
    pub phi: QuatElement,
    pub psi: QuatElement,
    /// Z^16 -> Z^8 quotient by the relations, and a rational section.
    proj: QMat,
    sec: QMat,
    /// Action matrices of the basis of O (left) and of S (right).
    pub left: Vec<QMat>,
    pub right: Vec<QMat>,
    /// Q-basis of the commutant of both actions.
    comm: Vec<QMat>,
    ident: OnceLock<Ident>,
}

/// A bimodule: a lattice in the ambient space stable under O and S.
#[derive(Clone, Debug)]
pub struct Bimodule {
    pub amb: Arc<Ambient>,
    pub lat: ZLattice,
}

impl PartialEq for Bimodule {
    fn eq(&self, o: &Self) -> bool {
        Arc::ptr_eq(&self.amb, &o.amb) && self.lat == o.lat
    }
}

/// Endomorphism order of a bimodule together with the embedded CM
/// endomorphism alpha (x) s -> alpha phi(omega) (x) s.
#[derive(Clone, Debug)]
pub struct EndData {
    pub order: OrientedEichlerOrder,
    pub delta: OptimalEmbedding,
}

fn zero_mat(n: usize) -> QMat {
    vec![vec![Rat::zero(); n]; n]
}

fn mat_add(a: &QMat, b: &QMat) -> QMat {
    a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(u, v)| u + v).collect()).collect()
}


fn mat_scale(a: &QMat, c: &Rat) -> QMat {
    a.iter().map(|x| x.iter().map(|u| u * c).collect()).collect()
}

/// a o b (apply b first).
pub fn compose(a: &QMat, b: &QMat) -> QMat {
    rat_mul(b, a)
}

fn trace(a: &QMat) -> Rat {
    (0..a.len()).map(|i| a[i][i].clone()).sum()
}

/// Reduced trace of an endomorphism (the module is free of rank 2 over C).
fn end_trd(a: &QMat) -> Rat {
    trace(a) / Rat::from_integer(int(4))
}

/// Reduced norm of a trace-zero endomorphism y: y o y = -nrd(y).
fn end_nrd0(a: &QMat) -> Rat {
    -compose(a, a)[0][0].clone()
}

fn kron_left(a: &QMat) -> QMat {
    // (A (x) I_4)[(i,j),(k,l)] = A[i][k] delta_jl
    let mut out = zero_mat(16);
    for i in 0..4 {
        for k in 0..4 {
            for j in 0..4 {
                out[4 * i + j][4 * k + j] = a[i][k].clone();
            }
        }
    }
    out
}

fn kron_right(b: &QMat) -> QMat {
    let mut out = zero_mat(16);
    for i in 0..4 {
        for j in 0..4 {
            for l in 0..4 {
                out[4 * i + j][4 * i + l] = b[j][l].clone();
            }
        }
    }
    out
}

/// Rows: coordinates of x b_i (left) or b_i x (right) in the basis of o.
fn mult_in_basis(o: &Order, x: &QuatElement, left: bool) -> QMat {
    o.basis
        .iter()
        .map(|b| o.coords(&if left { o.alg.mul(x, b) } else { o.alg.mul(b, x) }))
        .collect()
}

fn is_square_rat(x: &Rat) -> bool {
    use crate::core_algebra::arith::exact_sqrt;
    x.is_positive() && exact_sqrt(x.numer()).is_some() && exact_sqrt(x.denom()).is_some()
}

fn flatten(a: &QMat) -> Vec<Rat> {
    a.iter().flatten().cloned().collect()
}

/// Lattice spanned by v A for v in `l` and A in `mats`.
pub fn lattice_apply(l: &ZLattice, mats: &[QMat]) -> ZLattice {
    let mut gens = Vec::new();
    for b in l.basis() {
        for a in mats {
            gens.push(rat_vec_mat(&b, a));
        }
    }
    ZLattice::from_rat_gens(&gens, l.dim()).expect("full rank image")
}

impl Ambient {
    /// Matrix of x in B acting on the left (x need not lie in O).
    pub fn left_of(&self, x: &QuatElement) -> QMat {
        let k = kron_left(&mult_in_basis(&self.o.order, x, true));
        rat_mul(&rat_mul(&self.sec, &k), &self.proj)
    }

    /// Matrix of y in H acting on the right.
    pub fn right_of(&self, y: &QuatElement) -> QMat {
        let k = kron_right(&mult_in_basis(&self.s.order, y, false));
        rat_mul(&rat_mul(&self.sec, &k), &self.proj)
    }

    /// alpha (x) s -> alpha z (x) s for z in the centralizer of phi(K).
    pub fn right_on_o(&self, z: &QuatElement) -> QMat {
        let k = kron_left(&mult_in_basis(&self.o.order, z, false));
        rat_mul(&rat_mul(&self.sec, &k), &self.proj)
    }

    fn commutes(&self, y: &QMat) -> bool {
        self.left.iter().chain(&self.right).all(|a| rat_mul(a, y) == rat_mul(y, a))
    }

    /// Primes ramified in both B and H.
    pub fn sigma(&self) -> Vec<u64> {
        let p = self.s.disc();
        if self.o.disc() % p == 0 {
            vec![p]
        } else {
            vec![]
        }
    }

    fn comm_coords_maps(&self, src: &ZLattice, dst: &ZLattice) -> Vec<QMat> {
        // for each basis vector v of src, the map c -> dst-coordinates of v Y(c)
        src.basis()
            .iter()
            .map(|v| self.comm.iter().map(|c| dst.coords(&rat_vec_mat(v, c))).collect())
            .collect()
    }

    /// {Y in C : src Y in dst}, as a lattice of commutant coordinates.
    fn hom_coords(&self, src: &ZLattice, dst: &ZLattice) -> Result<ZLattice> {
        ZLattice::preimage(&self.comm_coords_maps(src, dst), 4)
    }

    fn comm_matrix(&self, c: &[Rat]) -> QMat {
        let mut acc = zero_mat(8);
        for (k, m) in self.comm.iter().enumerate() {
            acc = mat_add(&acc, &mat_scale(m, &c[k]));
        }
        acc
    }

    fn ident(&self, cat: &Catalog) -> Result<&Ident> {
        if let Some(id) = self.ident.get() {
            return Ok(id);
        }
        let id = self.build_ident(cat)?;
        Ok(self.ident.get_or_init(|| id))
    }

    fn build_ident(&self, cat: &Catalog) -> Result<Ident> {
        let d0 = d0_of(self.o.disc(), self.s.disc());
        if d0 == 1 {
            return pre("endomorphism algebra is split (D0 = 1)");
        }
        let alg = cat.maximal_order(d0)?.alg;
        let l0 = self.hom_coords(&ZLattice::identity(8), &ZLattice::identity(8))?;
        let mats: Vec<QMat> = l0.basis().iter().map(|c| self.comm_matrix(c)).collect();
        // trace-zero part
        let traces: Vec<Rat> = mats.iter().map(end_trd).collect();
        let k0 = rat_right_kernel(&[traces], 4);
        let comb = |rows: &[Vec<Int>], base: &[QMat]| -> Vec<QMat> {
            rows.iter()
                .map(|r| {
                    let mut acc = zero_mat(8);
                    for (c, m) in r.iter().zip(base) {
                        acc = mat_add(&acc, &mat_scale(m, &Rat::from_integer(c.clone())));
                    }
                    acc
                })
                .collect()
        };
        let zero_tr = comb(&k0, &mats);
        let u = find_with_norm(&zero_tr, &-alg.a.clone())?;
        // trace-zero elements anticommuting with u
        let cols: Vec<Vec<Rat>> = zero_tr
            .iter()
            .map(|z| flatten(&mat_add(&compose(&u, z), &compose(z, &u))))
            .collect();
        let k1 = rat_right_kernel(&transpose(&cols, 64), zero_tr.len());
        let anti = comb(&k1, &zero_tr);
        let v = find_with_norm(&anti, &-alg.b.clone())?;
        let basis = [rat_identity(8), u.clone(), v.clone(), compose(&u, &v)];
        // pivot entries making the 4 x 4 coordinate system invertible
        let flat: Vec<Vec<Rat>> = basis.iter().map(flatten).collect();
        let mut pivots = Vec::new();
        let mut cols_sel: Vec<usize> = Vec::new();
        for c in 0..64 {
            let mut trial = cols_sel.clone();
            trial.push(c);
            let sub: QMat = flat.iter().take(trial.len()).map(|r| trial.iter().map(|&k| r[k].clone()).collect()).collect();
            if !rat_det(&sub).is_zero() {
                cols_sel = trial;
                pivots.push((c / 8, c % 8));
                if cols_sel.len() == 4 {
                    break;
                }
            }
        }
        if pivots.len() != 4 {
            return breach("commutant basis is degenerate");
        }
        let sq: QMat = flat.iter().map(|r| cols_sel.iter().map(|&k| r[k].clone()).collect()).collect();
        let inv = rat_inverse(&sq).ok_or_else(|| Error::Invariant("singular pivot block".into()))?;
        Ok(Ident { alg, basis, pivots, inv })
    }
}

/// Positive definite form dominating |q| for a nondegenerate symmetric
/// Gram matrix: diagonalize over Q as T G T^t = diag(d) and take
/// T^-1 diag(|d|) T^-t.
fn majorant(g: &QMat) -> Result<QMat> {
    let n = g.len();
    let mut t = rat_identity(n);
    let mut a = g.clone();
    let row_op = |a: &mut QMat, t: &mut QMat, k: usize, j: usize, c: &Rat| {
        // basis vector k += c * basis vector j
        for x in 0..n {
            let v = &t[j][x] * c;
            t[k][x] += v;
        }
        for x in 0..n {
            let v = &a[j][x] * c;
            a[k][x] += v;
        }
        for x in 0..n {
            let v = &a[x][j] * c;
            a[x][k] += v;
        }
    };
    for k in 0..n {
        if a[k][k].is_zero() {
            let j = (k + 1..n)
                .find(|&j| !a[k][j].is_zero())
                .ok_or_else(|| Error::Invariant("degenerate norm form".into()))?;
            let one = Rat::one();
            let c = if (&a[j][j] + &a[k][j] * Rat::from_integer(int(2))).is_zero() { -one } else { one };
            row_op(&mut a, &mut t, k, j, &c);
        }
        for j in k + 1..n {
            if !a[j][k].is_zero() {
                let c = -(&a[j][k] / &a[k][k]);
                row_op(&mut a, &mut t, j, k, &c);
            }
        }
    }
    let ti = rat_inverse(&t).ok_or_else(|| Error::Invariant("singular diagonalization".into()))?;
    let d: QMat = (0..n)
        .map(|i| (0..n).map(|j| if i == j { a[i][i].abs() } else { Rat::zero() }).collect())
        .collect();
    Ok(rat_mul(&rat_mul(&ti, &d), &transpose(&ti, n)))
}

/// A rational multiple y/k of a lattice vector with y o y = -n exactly,
/// searched with growing bounds on a positive definite majorant of the
/// norm form.
fn find_with_norm(basis: &[QMat], n: &Rat) -> Result<QMat> {
    let two = Rat::from_integer(int(2));
    let g: QMat = basis
        .iter()
        .map(|a| {
            basis
                .iter()
                .map(|b| end_nrd0(&mat_add(a, b)) - end_nrd0(a) - end_nrd0(b))
                .map(|x| x / &two)
                .collect()
        })
        .collect();
    let definite = (1..=g.len()).all(|k| {
        let minor: QMat = g[..k].iter().map(|r| r[..k].to_vec()).collect();
        rat_det(&minor).is_positive()
    });
    let g = if definite { g } else { majorant(&g)? };
    let mut bound = n.abs();
    for _ in 0..12 {
        bound = &bound * Rat::from_integer(int(4));
        let mut vs = short_vectors(&g, &bound);
        vs.sort_by_key(|v| v.iter().map(|x| x.abs()).sum::<i64>());
        for w in vs {
            if w.iter().all(|x| *x == 0) {
                continue;
            }
            let mut y = zero_mat(basis[0].len());
            for (c, m) in w.iter().zip(basis) {
                y = mat_add(&y, &mat_scale(m, &Rat::from_integer(int(*c))));
            }
            let ratio = end_nrd0(&y) / n;
            if is_square_rat(&ratio) {
                let k = Rat::new(
                    crate::core_algebra::arith::exact_sqrt(ratio.numer()).unwrap(),
                    crate::core_algebra::arith::exact_sqrt(ratio.denom()).unwrap(),
                );
                return Ok(mat_scale(&y, &(Rat::one() / k)));
            }
        }
    }
    Err(Error::SearchExhausted("element of prescribed norm in the commutant".into()))
}

/// Product of primes dividing D or p but not both.
pub fn d0_of(d: u64, p: u64) -> u64 {
    if d % p == 0 {
        d / p
    } else {
        d * p
    }
}

/// The fixed embedding psi: R -> S into the catalog maximal order of
/// discriminant p: the first optimal element in enumeration order.
pub fn base_psi(p: u64, r: &QuadOrder, cat: &Catalog) -> Result<OptimalEmbedding> {
    if r.c % p == 0 {
        return pre(format!("{p} divides the conductor"));
    }
    if crate::core_algebra::arith::kronecker(r.dk, p) == 1 {
        return pre(format!("{p} splits in K, no embedding into the disc {p} order"));
    }
    let s = OrientedEichlerOrder::with_default_chars(cat.maximal_order(p)?)?;
    for v in trace_norm_elements(&s.order, r.t, r.n)? {
        let x = s.order.elem_int(&v);
        if is_optimal(&s.order, &x) {
            return OptimalEmbedding::new(*r, s, x);
        }
    }
    Err(Error::SearchExhausted(format!("optimal embedding of disc {} into disc {p}", r.disc)))
}

/// O (x)_R S as a lattice of rank 8 with its two actions.
pub fn tensor_over_r(phi: &OptimalEmbedding, psi: &OptimalEmbedding) -> Result<Bimodule> {
    if phi.r != psi.r {
        return pre("embeddings of different quadratic orders");
    }
    if psi.target.level() != 1 || !psi.target.alg().is_definite() || !crate::core_algebra::arith::is_prime(psi.target.disc()) {
        return pre("S must be a maximal order in a definite algebra of prime discriminant");
    }
    psi.check()?;
    phi.check()?;
    let o = &phi.target;
    let s = &psi.target;
    let rphi = mult_in_basis(&o.order, &phi.image, false);
    let lpsi = mult_in_basis(&s.order, &psi.image, true);
    // relations b_i phi(w) (x) s_j - b_i (x) psi(w) s_j
    let mut rel = Vec::new();
    for i in 0..4 {
        for j in 0..4 {
            let mut v = vec![Rat::zero(); 16];
            for k in 0..4 {
                v[4 * k + j] += &rphi[i][k];
                v[4 * i + k] -= &lpsi[j][k];
            }
            rel.push(v.iter().map(|x| x.to_integer()).collect::<Vec<Int>>());
        }
    }
    let ed = elementary_divisors(&rel);
    if ed.len() != 8 {
        return Err(Error::Invariant(format!("tensor product has rank {} instead of 8", 16 - ed.len())));
    }
    if ed.iter().any(|d| !d.is_one()) {
        return Err(Error::Invariant("tensor product has torsion".into()));
    }
    let ker = right_kernel(&rel, 16);
    let proj = to_rat(&transpose(&ker, 16));
    let ft = to_rat(&ker);
    let gram = rat_mul(&ft, &proj);
    let sec = rat_mul(&rat_inverse(&gram).expect("independent functionals"), &ft);
    let mut amb = Ambient {
        o: o.clone(),
        s: s.clone(),
        r: phi.r,
        phi: phi.image.clone(),
        psi: psi.image.clone(),
        proj,
        sec,
        left: vec![],
        right: vec![],
        comm: vec![],
        ident: OnceLock::new(),
    };
    amb.left = o.order.basis.iter().map(|b| amb.left_of(b)).collect();
    amb.right = s.order.basis.iter().map(|b| amb.right_of(b)).collect();
    for a in amb.left.iter().chain(&amb.right) {
        if a.iter().flatten().any(|x| !x.is_integer()) {
            return breach("action matrix is not integral");
        }
    }
    for a in &amb.left {
        for b in &amb.right {
            if rat_mul(a, b) != rat_mul(b, a) {
                return breach("left and right actions do not commute");
            }
        }
    }
    // commutant: Y A = A Y for every action matrix
    let mut eqs: Vec<Vec<Rat>> = Vec::new();
    for a in amb.left.iter().chain(&amb.right) {
        for r in 0..8 {
            for c in 0..8 {
                let mut row = vec![Rat::zero(); 64];
                for k in 0..8 {
                    row[8 * r + k] += &a[k][c];
                    row[8 * k + c] -= &a[r][k];
                }
                eqs.push(row);
            }
        }
    }
    let sol = rat_right_kernel(&eqs, 64);
    if sol.len() != 4 {
        return Err(Error::Invariant(format!("commutant has dimension {}", sol.len())));
    }
    amb.comm = sol
        .iter()
        .map(|v| (0..8).map(|r| (0..8).map(|c| Rat::from_integer(v[8 * r + c].clone())).collect()).collect())
        .collect();
    Ok(Bimodule { amb: Arc::new(amb), lat: ZLattice::identity(8) })
}

impl Bimodule {
    pub fn with_lattice(&self, lat: ZLattice) -> Result<Bimodule> {
        let out = Bimodule { amb: self.amb.clone(), lat };
        out.check()?;
        Ok(out)
    }

    /// Stability of the lattice under both actions.
    pub fn check(&self) -> Result<()> {
        let all: Vec<QMat> = self.amb.left.iter().chain(&self.amb.right).cloned().collect();
        if !self.lat.contains_lattice(&lattice_apply(&self.lat, &all)) {
            return breach("lattice is not stable under the actions");
        }
        Ok(())
    }

    /// I M for a lattice I in B (given in standard coordinates).
    pub fn left_ideal_times(&self, i: &ZLattice) -> ZLattice {
        let mats: Vec<QMat> = elements(i).iter().map(|x| self.amb.left_of(x)).collect();
        lattice_apply(&self.lat, &mats)
    }

    /// M I for a lattice I in H.
    pub fn right_ideal_times(&self, i: &ZLattice) -> ZLattice {
        let mats: Vec<QMat> = elements(i).iter().map(|x| self.amb.right_of(x)).collect();
        lattice_apply(&self.lat, &mats)
    }

    /// The left O-module structure is projective: the induced O -> End_Z
    /// is optimal, tested as saturation of the image of O in M_8(Z) written
    /// in the basis of the lattice.
    pub fn is_projective_left(&self) -> bool {
        let b = self.lat.basis();
        let binv = rat_inverse(&b).expect("full rank");
        let rows: Vec<Vec<Rat>> = self
            .amb
            .left
            .iter()
            .map(|a| flatten(&rat_mul(&rat_mul(&b, a), &binv)))
            .collect();
        if rows.iter().flatten().any(|x| !x.is_integer()) {
            return false;
        }
        let ints: Vec<Vec<Int>> = rows.iter().map(|r| r.iter().map(|x| x.to_integer()).collect()).collect();
        elementary_divisors(&ints).iter().all(|d| d.is_one())
    }
}

/// Prime-ideal lattice P_O at p | D, or P_S.
fn radical(o: &OrientedEichlerOrder, p: u64) -> Result<ZLattice> {
    Ok(two_sided_ideal(o, p)?.lat)
}

/// Lattice equality P_O M = M P_S at every p in Sigma.
pub fn is_admissible(m: &Bimodule) -> Result<bool> {
    for p in m.amb.sigma() {
        let a = m.left_ideal_times(&radical(&m.amb.o, p)?);
        let b = m.right_ideal_times(&radical(&m.amb.s, p)?);
        if a != b {
            return Ok(false);
        }
    }
    Ok(true)
}

/// An element with orientation value theta = gen of F_{p^2} at p | disc.
fn generator_with_value(o: &OrientedEichlerOrder, p: u64, target: Fp2) -> Result<QuatElement> {
    let ch = o
        .chars
        .get(&p)
        .ok_or_else(|| Error::Precondition(format!("no orientation at {p}")))?;
    let a = vec![ch.iter().map(|c| c.u).collect::<Vec<u64>>(), ch.iter().map(|c| c.v).collect()];
    let x = solve_mod_p(&a, &[target.u, target.v], p)
        .ok_or_else(|| Error::Invariant(format!("orientation at {p} is not surjective")))?;
    let v: Vec<i64> = x.iter().map(|&c| c as i64).collect();
    Ok(o.order.elem(&v))
}

/// Matrix of an ambient operator in the basis of a lattice, reduced mod p.
fn op_mod_p(l: &ZLattice, a: &QMat, p: u64) -> Result<Vec<Vec<u64>>> {
    let b = l.basis();
    let binv = rat_inverse(&b).expect("full rank");
    let m = rat_mul(&rat_mul(&b, a), &binv);
    let pi = Int::from(p);
    m.iter()
        .map(|r| {
            r.iter()
                .map(|x| {
                    if (x.denom() % &pi).is_zero() {
                        Err(Error::Invariant(format!("operator not {p}-integral on the lattice")))
                    } else {
                        Ok(rat_mod_p(x, p))
                    }
                })
                .collect()
        })
        .collect()
}

fn coords_mod_p(l: &ZLattice, sub: &ZLattice, p: u64) -> Vec<Vec<u64>> {
    sub.basis().iter().map(|v| l.coords(v).iter().map(|x| rat_mod_p(x, p)).collect()).collect()
}

fn mat_mul_mod(a: &[Vec<u64>], b: &[Vec<u64>], p: u64) -> Vec<Vec<u64>> {
    a.iter()
        .map(|r| (0..b[0].len()).map(|c| r.iter().zip(b).map(|(x, row)| x * row[c] % p).sum::<u64>() % p).collect())
        .collect()
}

/// The quotient V = L / sub (pL in sub) with linear forms cutting out sub.
struct Quotient {
    p: u64,
    forms: Vec<Vec<u64>>,
}

impl Quotient {
    fn new(l: &ZLattice, sub: &ZLattice, p: u64) -> Self {
        let w = coords_mod_p(l, sub, p);
        let forms = nullspace_mod_p(&row_reduce_mod_p(w, p), 8, p);
        Quotient { p, forms }
    }

    fn dim(&self) -> usize {
        self.forms.len()
    }

    /// x F where F has the forms as columns.
    fn eval(&self, x: &[Vec<u64>]) -> Vec<Vec<u64>> {
        let ft = transpose(&self.forms, 8);
        mat_mul_mod(x, &ft, self.p)
    }

    /// Coefficient vectors of the preimage of ker X in L (mod p).
    fn kernel_vectors(&self, x: &[Vec<u64>]) -> Vec<Vec<u64>> {
        let rows = transpose(&self.eval(x), self.dim());
        nullspace_mod_p(&rows, 8, self.p)
    }

    /// (a, b) with Y = a + b G on V.
    fn scalar(&self, y: &[Vec<u64>], g: &[Vec<u64>]) -> Option<(u64, u64)> {
        let p = self.p;
        let ident: Vec<Vec<u64>> = (0..8).map(|i| (0..8).map(|j| (i == j) as u64).collect()).collect();
        let fi = self.eval(&ident);
        let fg = self.eval(g);
        let fy = self.eval(y);
        let mut a = Vec::new();
        let mut b = Vec::new();
        for k in 0..8 {
            for f in 0..self.dim() {
                a.push(vec![fi[k][f], fg[k][f]]);
                b.push(fy[k][f]);
            }
        }
        let s = solve_mod_p(&a, &b, p)?;
        Some((s[0], s[1]))
    }
}

/// Local type (r, s) at p in Sigma: half the dimensions of the parts of
/// M / P_O M where the two residue actions agree resp. differ by Frobenius.
pub fn local_type(m: &Bimodule, p: u64) -> Result<(u32, u32)> {
    if !m.amb.sigma().contains(&p) {
        return pre(format!("{p} is not ramified in both algebras"));
    }
    if !is_admissible(m)? {
        return pre(format!("bimodule is not admissible at {p}"));
    }
    let (agree, twist) = agree_twist(m, p)?;
    let dims = (agree.len(), twist.len());
    let q = Quotient::new(&m.lat, &m.left_ideal_times(&radical(&m.amb.o, p)?), p);
    let da = dims.0 + q.dim() - 8;
    let dt = dims.1 + q.dim() - 8;
    if da % 2 != 0 || dt % 2 != 0 || da + dt != 4 {
        return Err(Error::Invariant(format!("residue module at {p} is not semisimple ({da}, {dt})")));
    }
    Ok((da as u32 / 2, dt as u32 / 2))
}

/// Preimages in L (coefficients mod p) of the agreeing and twisted parts.
fn agree_twist(m: &Bimodule, p: u64) -> Result<(Vec<Vec<u64>>, Vec<Vec<u64>>)> {
    let f = Fp2Field::new(p);
    let theta = f.gen();
    let g = generator_with_value(&m.amb.o, p, theta)?;
    let h = generator_with_value(&m.amb.s, p, theta)?;
    let h2 = generator_with_value(&m.amb.s, p, f.frob(theta))?;
    let sub = m.left_ideal_times(&radical(&m.amb.o, p)?);
    let q = Quotient::new(&m.lat, &sub, p);
    let go = op_mod_p(&m.lat, &m.amb.left_of(&g), p)?;
    let gs = op_mod_p(&m.lat, &m.amb.right_of(&h), p)?;
    let gs2 = op_mod_p(&m.lat, &m.amb.right_of(&h2), p)?;
    let diff = |a: &[Vec<u64>], b: &[Vec<u64>]| -> Vec<Vec<u64>> {
        a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(u, v)| (u + p - v) % p).collect()).collect()
    };
    Ok((q.kernel_vectors(&diff(&go, &gs)), q.kernel_vectors(&diff(&go, &gs2))))
}

fn lift_vectors(l: &ZLattice, base: &ZLattice, vs: &[Vec<u64>]) -> ZLattice {
    let b = l.basis();
    let mut gens = base.basis();
    for v in vs {
        let mut acc = vec![Rat::zero(); 8];
        for (c, row) in v.iter().zip(&b) {
            for (a, x) in acc.iter_mut().zip(row) {
                *a += x * Rat::from_integer(int(*c as i64));
            }
        }
        gens.push(acc);
    }
    ZLattice::from_rat_gens(&gens, 8).expect("contains the base lattice")
}

/// (D0, N0) of an admissible bimodule.
pub fn d0_n0(m: &Bimodule) -> Result<(u64, u64)> {
    let d0 = d0_of(m.amb.o.disc(), m.amb.s.disc());
    let mut n0 = 1;
    for p in m.amb.sigma() {
        if local_type(m, p)? == (1, 1) {
            n0 *= p;
        }
    }
    Ok((d0, n0))
}

fn in_alg(id: &Ident, amb: &Ambient, lat_c: &ZLattice) -> Result<ZLattice> {
    let rows: Vec<Vec<Rat>> = amb.comm.iter().map(|c| id.coords(c).map(|x| x.0.to_vec())).collect::<Result<_>>()?;
    lat_c.map_rows(&rows)
}

/// Hom(M, N) = {Y in C : M Y in N} as a lattice in the catalog algebra of
/// discriminant D0.
pub fn hom_bimodules(m: &Bimodule, n: &Bimodule, cat: &Catalog) -> Result<ZLattice> {
    if !Arc::ptr_eq(&m.amb, &n.amb) {
        return pre("bimodules live in different ambient spaces");
    }
    let id = m.amb.ident(cat)?;
    in_alg(id, &m.amb, &m.amb.hom_coords(&m.lat, &n.lat)?)
}

/// Matrix of an element of the endomorphism algebra.
pub fn end_matrix(m: &Bimodule, cat: &Catalog, x: &QuatElement) -> Result<QMat> {
    Ok(m.amb.ident(cat)?.matrix(x))
}

/// Element of the endomorphism algebra represented by a commuting matrix.
pub fn end_element(m: &Bimodule, cat: &Catalog, y: &QMat) -> Result<QuatElement> {
    if !m.amb.commutes(y) {
        return pre("matrix does not commute with the actions");
    }
    m.amb.ident(cat)?.coords(y)
}

/// Orientation value at q of each order basis element, read off from the
/// scalar by which it acts on L / sub relative to an operator G of known
/// value theta.
fn induced_character(
    m: &Bimodule,
    cat: &Catalog,
    order: &Order,
    sub: &ZLattice,
    g: &QMat,
    q: u64,
) -> Result<Vec<Fp2>> {
    let quo = Quotient::new(&m.lat, sub, q);
    if quo.dim() != 4 {
        return breach(format!("residue quotient at {q} has dimension {}", quo.dim()));
    }
    let gm = op_mod_p(&m.lat, g, q)?;
    let id = m.amb.ident(cat)?;
    let f = Fp2Field::new(q);
    let mut out = Vec::new();
    for b in &order.basis {
        let y = op_mod_p(&m.lat, &id.matrix(b), q)?;
        let (a, c) = quo
            .scalar(&y, &gm)
            .ok_or_else(|| Error::Invariant(format!("endomorphism is not F_{q}^2-scalar on the residue module")))?;
        out.push(f.add(f.from_fp(a), f.scale(c, f.gen())));
    }
    Ok(out)
}

/// End(M) as an oriented Eichler order in the catalog algebra of
/// discriminant D0, with the embedded CM endomorphism.
pub fn end_bimodule(m: &Bimodule, cat: &Catalog) -> Result<EndData> {
    let amb = &m.amb;
    let id = amb.ident(cat)?;
    let alg = id.alg.clone();
    let lat = in_alg(id, amb, &amb.hom_coords(&m.lat, &m.lat)?)?;
    let order = Order::from_lattice(&alg, lat)?;
    let sigma = amb.sigma();
    let p = amb.s.disc();
    let fld = |q: u64| Fp2Field::new(q);
    let mut chars = BTreeMap::new();
    for q in alg.ramified_primes() {
        if q == p {
            // orientation of S through the right action on M / M P_S
            let h = generator_with_value(&amb.s, p, fld(p).gen())?;
            let sub = m.right_ideal_times(&radical(&amb.s, p)?);
            chars.insert(q, induced_character(m, cat, &order, &sub, &amb.right_of(&h), q)?);
        } else {
            let g = generator_with_value(&amb.o, q, fld(q).gen())?;
            let sub = m.left_ideal_times(&radical(&amb.o, q)?);
            chars.insert(q, induced_character(m, cat, &order, &sub, &amb.left_of(&g), q)?);
        }
    }
    let mut supers = BTreeMap::new();
    for (&q, sup) in &amb.o.supers {
        let mats: Vec<QMat> = elements(sup).iter().map(|x| amb.left_of(x)).collect();
        let big = lattice_apply(&m.lat, &mats);
        let e = in_alg(id, amb, &amb.hom_coords(&big, &big)?)?;
        supers.insert(q, ZLattice::glue_at(&e, &order.lat, q));
    }
    for &q in &sigma {
        if local_type(m, q)? == (1, 1) {
            let (agree, _) = agree_twist(m, q)?;
            let sub = m.left_ideal_times(&radical(&amb.o, q)?);
            let big = lift_vectors(&m.lat, &sub, &agree);
            let e = in_alg(id, amb, &amb.hom_coords(&big, &big)?)?;
            supers.insert(q, ZLattice::glue_at(&e, &order.lat, q));
        }
    }
    let out = OrientedEichlerOrder { order, chars, supers };
    out.check()?;
    let (d0, n0) = d0_n0(m)?;
    if out.disc() != d0 || out.level() != amb.o.level() * n0 {
        return breach(format!(
            "End(M) has (D, N) = ({}, {}), expected ({d0}, {})",
            out.disc(),
            out.level(),
            amb.o.level() * n0
        ));
    }
    let dmat = amb.right_on_o(&amb.phi);
    let image = id.coords(&dmat)?;
    let delta = OptimalEmbedding::new(amb.r, out.clone(), image)?;
    Ok(EndData { order: out, delta })
}

/// |det| of the trace Gram matrix of an order.
pub fn gram_det(o: &Order) -> Int {
    let b = &o.basis;
    let g: QMat = b.iter().map(|x| b.iter().map(|y| o.alg.trd(&o.alg.mul(x, y))).collect()).collect();
    rat_det(&g).abs().to_integer()
}

/// The extension M ⊂ M' ⊂ M P_S^-1 with M'/M a simple bimodule, stable
/// under both actions and of type (2,0) or (0,2) at p.
pub fn index_p_stable_extension(m: &Bimodule) -> Result<Bimodule> {
    let amb = &m.amb;
    let p = amb.s.disc();
    if !amb.sigma().contains(&p) {
        return pre("extension is defined for p ramified in B");
    }
    if is_admissible(m)? {
        return pre("bimodule is already admissible: singular case");
    }
    let ps = radical(&amb.s, p)?;
    let big = m.right_ideal_times(&ps).scale(&Rat::new(Int::one(), Int::from(p)));
    if !big.contains_lattice(&m.lat) {
        return breach("M P_S^-1 does not contain M");
    }
    let f = Fp2Field::new(p);
    let h = generator_with_value(&amb.s, p, f.gen())?;
    let hm = op_mod_p(&big, &amb.right_of(&h), p)?;
    let forms = Quotient::new(&big, &m.lat, p);
    if forms.dim() != 4 {
        return breach(format!("M P_S^-1 / M has dimension {}", forms.dim()));
    }
    let ops: Vec<Vec<Vec<u64>>> =
        amb.left.iter().map(|a| op_mod_p(&big, a, p)).collect::<Result<_>>()?;
    let mlat = coords_mod_p(&big, &m.lat, p);
    let mut seen = std::collections::BTreeSet::new();
    let mut found: Vec<Bimodule> = Vec::new();
    // vectors of big whose images span big / M
    let mut comp: Vec<Vec<u64>> = Vec::new();
    let mut acc = mlat.clone();
    for k in 0..8 {
        let mut e = vec![0u64; 8];
        e[k] = 1;
        let mut t = acc.clone();
        t.push(e.clone());
        if mlat_rank(&t, p) > mlat_rank(&acc, p) {
            acc = t;
            comp.push(e);
        }
    }
    if comp.len() != 4 {
        return breach("quotient basis not found");
    }
    // candidate lines: span{v, v h} modulo M, v running over the quotient
    for code in 1..p.pow(4) {
        let mut v = vec![0u64; 8];
        let mut c = code;
        for e in &comp {
            let a = c % p;
            c /= p;
            for (x, y) in v.iter_mut().zip(e) {
                *x = (*x + a * y) % p;
            }
        }
        let vh = mat_mul_mod(&[v.clone()], &hm, p).remove(0);
        let mut span = mlat.clone();
        span.push(v.clone());
        span.push(vh);
        let rref = row_reduce_mod_p(span, p);
        if rref.len() != mlat_rank(&mlat, p) + 2 || !seen.insert(rref.clone()) {
            continue;
        }
        let stable = ops.iter().all(|a| {
            let img = mat_mul_mod(&rref, a, p);
            img.iter().all(|w| {
                let mut t = rref.clone();
                t.push(w.clone());
                row_reduce_mod_p(t, p).len() == rref.len()
            })
        });
        if !stable {
            continue;
        }
        let lat = lift_vectors(&big, &m.lat, &rref);
        let cand = m.with_lattice(lat)?;
        if is_admissible(&cand)? {
            let t = local_type(&cand, p)?;
            if t == (2, 0) || t == (0, 2) {
                found.push(cand);
            }
        }
    }
    match found.len() {
        1 => Ok(found.remove(0)),
        k => breach(format!("{k} stable extensions of admissible type")),
    }
}

fn mlat_rank(rows: &[Vec<u64>], p: u64) -> usize {
    crate::lattices::matrix::rank_mod_p(rows, p)
}

/// [J] * M = psi(J^-1) Lambda (x) M, realized as the span of the images of
/// M under psi(j) for j in J^-1.
pub fn pic_act_bimodule(f: &Form, m: &Bimodule, delta: &QMat) -> Result<Bimodule> {
    let r = &m.amb.r;
    let j = ideal_of_class(r, f)?;
    let jc = conjugate_ideal(r, &j);
    let n = Rat::new(Int::one(), Int::from(jc.norm));
    let mats: Vec<QMat> = jc
        .gens
        .iter()
        .map(|&(x, y)| mat_scale(&mat_add(&mat_scale(&rat_identity(8), &Rat::from_integer(int(x))), &mat_scale(delta, &Rat::from_integer(int(y)))), &n))
        .collect();
    m.with_lattice(lattice_apply(&m.lat, &mats))
}

/// Q_O (x)_O M for the two-sided ideal of norm q^n, q != p.
pub fn atkin_lehner_bimodule(q: u64, m: &Bimodule) -> Result<Bimodule> {
    if q == m.amb.s.disc() {
        return pre("Atkin-Lehner at p is not defined on bimodules");
    }
    let i = two_sided_ideal(&m.amb.o, q)?;
    m.with_lattice(m.left_ideal_times(&i.lat))
}

/// Q_Lambda = Hom(M, Q_O M) and the identity Q_Lambda^2 = q^n End(M).
pub fn check_al_square(q: u64, m: &Bimodule, cat: &Catalog) -> Result<()> {
    let qm = atkin_lehner_bimodule(q, m)?;
    let ql = hom_bimodules(m, &qm, cat)?;
    let lam = hom_bimodules(m, m, cat)?;
    let alg = &m.amb.ident(cat)?.alg;
    let n = valuation(&Int::from(m.amb.o.disc() * m.amb.o.level()), q);
    let qn = Rat::from_integer(num_traits::pow(Int::from(q), n as usize));
    if lattice_product(alg, &ql, &ql) != lam.scale(&qn) {
        return breach(format!("Q_Lambda^2 != {q}^{n} Lambda"));
    }
    Ok(())
}
