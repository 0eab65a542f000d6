use heegner::core_algebra::arith::{int, rat, Int, Rat};
use heegner::core_algebra::hilbert::{hilbert_symbol, ramified_places, Place};
use heegner::core_algebra::{QuatAlgebra, QuatElement};
use heegner::lattices::matrix::hnf;
use heegner::lattices::ZLattice;
use heegner::quad::{class_group, compose, reduce, Form};
use proptest::prelude::*;

/// Closed formula for the 2-adic symbol, written against a = 2^s u, b = 2^t v.
fn hilbert2_formula(a: i64, b: i64) -> i32 {
    let split = |mut x: i64| {
        let mut s = 0;
        while x % 2 == 0 {
            x /= 2;
            s += 1;
        }
        (s, x)
    };
    let (s, u) = split(a);
    let (t, v) = split(b);
    let eps = |x: i64| (x.rem_euclid(4) - 1) / 2;
    let omega = |x: i64| {
        let r = x.rem_euclid(8);
        ((r * r - 1) / 8) % 2
    };
    let e = eps(u) * eps(v) + s * omega(v) + t * omega(u);
    if e % 2 == 0 { 1 } else { -1 }
}

/// Odd p: a primitive solution of a x^2 + b y^2 = z^2 modulo p^k, searched
/// exhaustively. For valuations at most 1 this decides the p-adic symbol.
fn hilbert_odd_search(a: i64, b: i64, p: i64, k: u32) -> i32 {
    let m = p.pow(k);
    for x in 0..m {
        for y in 0..m {
            let lhs = (a * x * x + b * y * y).rem_euclid(m);
            for z in 0..m {
                if x % p == 0 && y % p == 0 && z % p == 0 {
                    continue;
                }
                if (z * z - lhs).rem_euclid(m) == 0 {
                    return 1;
                }
            }
        }
    }
    -1
}

fn r(x: i64) -> Rat {
    rat(x, 1)
}

#[test]
fn hilbert_examples() {
    let h = |a, b, v| hilbert_symbol(&r(a), &r(b), v).unwrap();
    assert_eq!(h(1, 5, Place::Prime(7)), 1);
    assert_eq!(h(-1, -1, Place::Infinity), -1);
    assert_eq!(h(-1, -1, Place::Prime(2)), -1);
    assert!(hilbert_symbol(&r(0), &r(3), Place::Prime(3)).is_err());
    assert_eq!(ramified_places(&r(-1), &r(-1)).unwrap(), vec![Place::Prime(2), Place::Infinity]);
    assert_eq!(ramified_places(&r(1), &r(7)).unwrap(), vec![]);
    assert_eq!(ramified_places(&r(-1), &r(-3)).unwrap(), vec![Place::Prime(3), Place::Infinity]);
}

#[test]
fn hilbert_matches_oracles() {
    let vals = [-15, -10, -7, -6, -5, -3, -2, -1, 1, 2, 3, 5, 6, 7, 10, 14, 15];
    for &a in &vals {
        for &b in &vals {
            assert_eq!(hilbert_symbol(&r(a), &r(b), Place::Prime(2)).unwrap(), hilbert2_formula(a, b), "{a} {b}");
            for (p, k) in [(3, 3), (5, 2), (7, 2)] {
                assert_eq!(
                    hilbert_symbol(&r(a), &r(b), Place::Prime(p as u64)).unwrap(),
                    hilbert_odd_search(a, b, p, k),
                    "{a} {b} {p}"
                );
            }
        }
    }
}

#[test]
fn norm_and_trace_examples() {
    let alg = QuatAlgebra::from_ints(-1, -1).unwrap();
    let one = alg.one();
    assert_eq!((alg.trd(&one), alg.nrd(&one)), (r(2), r(1)));
    let i = QuatElement::from_ints([0, 1, 0, 0]);
    assert_eq!((alg.trd(&i), alg.nrd(&i)), (r(0), r(1)));
    let h = QuatElement::from_rats(&[rat(1, 2), rat(1, 2), rat(1, 2), rat(1, 2)]);
    assert_eq!((alg.trd(&h), alg.nrd(&h)), (r(1), r(1)));
}

#[test]
fn lattice_examples() {
    let id = ZLattice::identity(4);
    let two = id.scale(&r(2));
    assert_eq!(two.index_in(&id).unwrap(), int(16));
    assert_eq!(id.intersect(&id), id);
    // all four elementary divisors are reported, trivial ones included
    assert_eq!(id.quotient_invariants(&id).unwrap(), vec![int(1); 4]);
    assert_eq!(id.scale(&r(3)).quotient_invariants(&id).unwrap(), vec![int(3); 4]);
    // Lipschitz + Hurwitz = Hurwitz in coordinates 1, i, j, k
    let hur = ZLattice::from_rat_gens(
        &[
            vec![rat(1, 2), rat(1, 2), rat(1, 2), rat(1, 2)],
            vec![r(0), r(1), r(0), r(0)],
            vec![r(0), r(0), r(1), r(0)],
            vec![r(0), r(0), r(0), r(1)],
        ],
        4,
    )
    .unwrap();
    assert_eq!(id.sum(&hur), hur);
    assert_eq!(id.index_in(&hur).unwrap(), int(2));
}

fn elem() -> impl Strategy<Value = QuatElement> {
    prop::array::uniform4(-6i64..=6).prop_map(QuatElement::from_ints)
}

fn int_rows() -> impl Strategy<Value = Vec<Vec<i64>>> {
    prop::collection::vec(prop::collection::vec(-9i64..=9, 3), 3..6)
}

fn lattice_of(rows: &[Vec<i64>]) -> Option<ZLattice> {
    let m: Vec<Vec<Int>> = rows.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect();
    ZLattice::from_int_gens(m, int(1), 3).ok()
}

fn forms(disc: i64) -> Vec<Form> {
    class_group(disc)
}

proptest! {
    #[test]
    fn nrd_is_multiplicative(x in elem(), y in elem(), ab in prop::sample::select(vec![(-1i64, -1i64), (-1, 3), (-2, -5), (3, 7)])) {
        let alg = QuatAlgebra::from_ints(ab.0, ab.1).unwrap();
        let xy = alg.mul(&x, &y);
        prop_assert_eq!(alg.nrd(&xy), alg.nrd(&x) * alg.nrd(&y));
        prop_assert_eq!(alg.trd(&alg.conj(&x)), alg.trd(&x));
    }

    #[test]
    fn hilbert_product_formula_and_bilinearity(a in -40i64..40, b in -40i64..40, c in -40i64..40) {
        prop_assume!(a != 0 && b != 0 && c != 0);
        let places = [Place::Infinity, Place::Prime(2), Place::Prime(3), Place::Prime(5), Place::Prime(7),
            Place::Prime(11), Place::Prime(13), Place::Prime(17), Place::Prime(19), Place::Prime(23),
            Place::Prime(29), Place::Prime(31), Place::Prime(37)];
        let prod: i32 = places.iter().map(|v| hilbert_symbol(&r(a), &r(b), *v).unwrap()).product();
        prop_assert_eq!(prod, 1);
        for v in places {
            let lhs = hilbert_symbol(&r(a), &r(b * c), v).unwrap();
            let rhs = hilbert_symbol(&r(a), &r(b), v).unwrap() * hilbert_symbol(&r(a), &r(c), v).unwrap();
            prop_assert_eq!(lhs, rhs);
            prop_assert_eq!(hilbert_symbol(&r(a), &r(b), v).unwrap(), hilbert_symbol(&r(b), &r(a), v).unwrap());
        }
    }

    #[test]
    fn hnf_is_idempotent(rows in int_rows()) {
        let m: Vec<Vec<Int>> = rows.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect();
        let h = hnf(m, 3);
        prop_assert_eq!(hnf(h.clone(), 3), h);
    }

    #[test]
    fn second_isomorphism_index(ra in int_rows(), rb in int_rows()) {
        let (Some(a), Some(b)) = (lattice_of(&ra), lattice_of(&rb)) else { return Ok(()) };
        let s = a.sum(&b);
        let i = a.intersect(&b);
        prop_assert_eq!(b.index_in(&s).unwrap(), i.index_in(&a).unwrap());
    }

    #[test]
    fn form_class_group_laws(dm in prop::sample::select(vec![-20i64, -23, -47, -56, -84, -87, -104, -151]), i in 0usize..20, j in 0usize..20, k in 0usize..20) {
        let g = forms(dm);
        let (f, h, e) = (g[i % g.len()], g[j % g.len()], g[k % g.len()]);
        let id = Form::identity(dm);
        prop_assert_eq!(compose(f, id), reduce(f));
        prop_assert_eq!(compose(f, f.inverse()), reduce(id));
        prop_assert_eq!(compose(f, h), compose(h, f));
        prop_assert_eq!(compose(compose(f, h), e), compose(f, compose(h, e)));
        prop_assert!(g.contains(&compose(f, h)));
    }
}
