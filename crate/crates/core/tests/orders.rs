use heegner::core_algebra::arith::{int, rat, Rat};
use heegner::core_algebra::{QuatAlgebra, QuatElement};
use heegner::orders::ideals::{lattice_norm, lattice_product, lattice_times};
use heegner::orders::{
    atkin_lehner_order, eichler_order, make_order, maximalize, star, two_sided_ideal, Catalog,
};

fn q(v: [i64; 4], d: i64) -> QuatElement {
    QuatElement::from_rats(&v.iter().map(|&x| rat(x, d)).collect::<Vec<_>>())
}

#[test]
fn lipschitz_and_hurwitz() {
    let alg = QuatAlgebra::from_ints(-1, -1).unwrap();
    let lip = make_order(&alg, &[q([0, 1, 0, 0], 1), q([0, 0, 1, 0], 1), q([0, 0, 0, 1], 1)]).unwrap();
    assert_eq!((lip.disc(), lip.level()), (2, 2));
    let hur = make_order(&alg, &[q([0, 1, 0, 0], 1), q([0, 0, 1, 0], 1), q([1, 1, 1, 1], 2)]).unwrap();
    assert_eq!((hur.disc(), hur.level()), (2, 1));
    assert_eq!(maximalize(&lip, 2).unwrap().lat, hur.lat);
    assert_eq!(maximalize(&hur, 2).unwrap().lat, hur.lat);
    assert!(make_order(&alg, &[]).is_err());
}

#[test]
fn eichler_levels_and_ideals() {
    let cat = Catalog::default();
    for (d, n) in [(2u64, 3u64), (2, 9), (3, 2), (6, 5), (2, 15), (1, 4), (5, 6)] {
        let o = eichler_order(d, n, &cat).unwrap();
        assert_eq!((o.disc(), o.level()), (d, n));
        for p in heegner::core_algebra::arith::prime_divisors(d * n) {
            let i = two_sided_ideal(&o, p).unwrap();
            let s = star(&i.lat, &o).unwrap();
            assert_eq!(s.order.lat, o.order.lat);
            let back = star(&i.lat, &s).unwrap();
            assert_eq!(back.chars, o.chars, "{d} {n} {p}");
            assert_eq!(back.supers, o.supers, "{d} {n} {p}");
            if d % p == 0 {
                assert_ne!(s.chars, o.chars);
            } else {
                assert_ne!(s.supers[&p], o.supers[&p], "{d} {n} {p}");
            }
        }
        let w = atkin_lehner_order(&o, d * n).unwrap();
        assert_eq!(w.order.lat, o.order.lat);
    }
}

#[test]
fn principal_star_is_conjugation() {
    let cat = Catalog::default();
    let o = eichler_order(2, 3, &cat).unwrap();
    let alg = o.alg().clone();
    let g = o.order.basis[1].add(&o.order.basis[2]).add(&QuatElement::from_ints([2, 0, 0, 0]));
    let i = lattice_times(&alg, &o.order.lat, &g, true).unwrap();
    assert_eq!(lattice_norm(&alg, &i), alg.nrd(&g));
    let s = star(&i, &o).unwrap();
    let inv = heegner::orders::ideals::inverse_ideal(&alg, &i);
    assert_eq!(lattice_product(&alg, &inv, &i), s.order.lat);
    let _ = int(0);
    let _: Rat = rat(0, 1);
}
