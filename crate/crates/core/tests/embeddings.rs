use heegner::embeddings::local::{embedding_number_formula, local_embedding_number};
use heegner::embeddings::{
    atkin_lehner, find_embedding_indefinite, local_label, pic_act, relative_class, OptimalEmbedding, Torsor,
};
use heegner::error::Error;
use heegner::orders::{eichler_order, Catalog};
use heegner::quad::{class_group, compose, is_fundamental, Form, QuadOrder};
use heegner::specialize::{exact_divisors, Ctx};
use std::collections::BTreeSet;

#[test]
fn local_numbers_match_closed_formula() {
    let cat = Catalog::default();
    for (d, n) in [(2u64, 1u64), (3, 1), (6, 1), (10, 1), (2, 3), (3, 5), (1, 6), (5, 2), (7, 1)] {
        let o = eichler_order(d, n, &cat).unwrap();
        for (dk, c) in [(-3i64, 1u64), (-4, 1), (-7, 1), (-8, 1), (-15, 1), (-20, 1), (-24, 1), (-35, 1), (-4, 3), (-3, 2)] {
            let r = QuadOrder::new(dk, c).unwrap();
            for p in heegner::core_algebra::arith::prime_divisors(d * n) {
                let Some(expect) = embedding_number_formula(&r, d, n, p) else { continue };
                assert_eq!(local_embedding_number(&o.order, &r, p).unwrap(), expect, "({d},{n}) {dk} c={c} p={p}");
            }
        }
    }
}

#[test]
fn local_number_examples() {
    let cat = Catalog::default();
    let o = eichler_order(3, 1, &cat).unwrap();
    // 3 inert, split, ramified
    assert_eq!(local_embedding_number(&o.order, &QuadOrder::new(-4, 1).unwrap(), 3).unwrap(), 2);
    assert_eq!(local_embedding_number(&o.order, &QuadOrder::new(-11, 1).unwrap(), 3).unwrap(), 0);
    assert_eq!(local_embedding_number(&o.order, &QuadOrder::new(-3, 1).unwrap(), 3).unwrap(), 1);
    assert!(local_embedding_number(&o.order, &QuadOrder::new(-4, 1).unwrap(), 5).is_err());
}

#[test]
fn cm_set_examples() {
    let ctx = Ctx::new(Catalog::default());
    let z_i = QuadOrder::new(-4, 1).unwrap();
    assert_eq!(ctx.cm_set(2, 1, &z_i).unwrap().len(), 1);
    // 2 is inert in Q(sqrt -3): h m_2 = 1 * 2
    assert_eq!(ctx.cm_set(2, 1, &QuadOrder::new(-3, 1).unwrap()).unwrap().len(), 2);
    assert_eq!(ctx.cm_set(3, 1, &z_i).unwrap().len(), 2);
    assert!(ctx.cm_set(6, 1, &z_i).is_err());
}

#[test]
fn enumeration_matches_counting_formula() {
    let ctx = Ctx::new(Catalog::default());
    let mut checked = 0;
    for (d, n) in [(2u64, 1u64), (3, 1), (5, 1), (7, 1), (2, 3), (3, 2), (2, 5), (11, 1), (5, 3), (2, 9), (13, 1)] {
        for a in 3..=60i64 {
            if !is_fundamental(-a) {
                continue;
            }
            let r = QuadOrder::new(-a, 1).unwrap();
            let cm = ctx.cm_set(d, n, &r).unwrap();
            let formula = r.class_number() * cm.local.iter().map(|(_, m)| *m as usize).product::<usize>();
            assert_eq!(cm.len(), formula, "({d},{n}) disc {}", -a);
            checked += 1;
        }
    }
    assert!(checked >= 20);
}

#[test]
fn pic_and_atkin_lehner_act_on_definite_points() {
    let ctx = Ctx::new(Catalog::default());
    let r = QuadOrder::new(-23, 1).unwrap();
    let cm = ctx.cm_set(5, 1, &r).unwrap();
    assert_eq!(cm.len(), 6);
    let g = class_group(-23);
    let id = Form::identity(-23);
    let mut full_orbit = BTreeSet::new();
    for i in 0..cm.len() {
        let e = cm.embedding(i).unwrap();
        assert_eq!(cm.locate(&pic_act(&id, &e).unwrap()).unwrap(), i);
        let mut orbit = BTreeSet::new();
        for f in &g {
            let fe = pic_act(f, &e).unwrap();
            orbit.insert(cm.locate(&fe).unwrap());
            for h in &g {
                let lhs = cm.locate(&pic_act(&compose(*f, *h), &e).unwrap()).unwrap();
                let rhs = cm.locate(&pic_act(h, &fe).unwrap()).unwrap();
                assert_eq!(lhs, rhs);
            }
        }
        // free action
        assert_eq!(orbit.len(), g.len());
        let w = atkin_lehner(5, &e).unwrap();
        assert_eq!(cm.locate(&atkin_lehner(5, &w).unwrap()).unwrap(), i);
        assert_ne!(local_label(&w, 5).unwrap(), local_label(&e, 5).unwrap());
        if i == 0 {
            for j in orbit {
                full_orbit.insert(j);
                full_orbit.insert(cm.locate(&atkin_lehner(5, &cm.embedding(j).unwrap()).unwrap()).unwrap());
            }
        }
    }
    assert_eq!(full_orbit.len(), cm.len());
}

#[test]
fn indefinite_search_and_torsor() {
    let cat = Catalog::default();
    let z_i = QuadOrder::new(-4, 1).unwrap();
    let m2 = eichler_order(1, 1, &cat).unwrap();
    let e = find_embedding_indefinite(&m2, &z_i, 4).unwrap();
    assert_eq!(m2.alg().nrd(&e.image), heegner::core_algebra::arith::rat(1, 1));
    let o6 = eichler_order(6, 1, &cat).unwrap();
    assert!(find_embedding_indefinite(&o6, &z_i, 8).is_ok());
    // 2 splits in Q(sqrt -23): certified empty
    let r = QuadOrder::new(-23, 1).unwrap();
    assert!(matches!(find_embedding_indefinite(&o6, &r, 8), Err(Error::Precondition(_))));

    // 2 inert, 3 ramified, h = 2
    let r = QuadOrder::new(-51, 1).unwrap();
    let t = Torsor::new(6, 1, &r, &cat, 8).unwrap();
    assert_eq!(t.len(), 2 * 2 * 1);
    let mut seen = BTreeSet::new();
    for f in class_group(-51) {
        for m in [1u64, 2, 3, 6] {
            seen.insert(t.act_w(t.act_pic(0, &f).unwrap(), m).unwrap());
        }
    }
    assert_eq!(seen.len(), t.len());
}

/// On definite CM sets, exact location is an independent route: the local
/// labels together with the relative class must separate the points and be
/// constant on located classes.
#[test]
fn relative_class_agrees_with_definite_location() {
    let ctx = Ctx::new(Catalog::default());
    for (d, n, disc) in [(5u64, 1u64, -23i64), (2, 3, -20), (3, 2, -39), (7, 1, -56)] {
        let r = QuadOrder::new(disc, 1).unwrap();
        let cm = ctx.cm_set(d, n, &r).unwrap();
        let e0 = cm.embedding(0).unwrap();
        let wp: Vec<u64> = cm.local.iter().filter(|(_, m)| *m == 2).map(|(p, _)| *p).collect();
        let key = |e: &OptimalEmbedding| {
            let labels: Vec<usize> = wp.iter().map(|&p| local_label(e, p).unwrap()).collect();
            (labels, relative_class(e, &e0).unwrap())
        };
        let keys: Vec<_> = (0..cm.len()).map(|i| key(&cm.embedding(i).unwrap())).collect();
        let distinct: BTreeSet<_> = keys.iter().cloned().collect();
        assert_eq!(distinct.len(), cm.len(), "({d},{n}) {disc}");
        for f in r.class_group() {
            let fe = pic_act(&f, &cm.embedding(1 % cm.len()).unwrap()).unwrap();
            assert_eq!(key(&fe), keys[cm.locate(&fe).unwrap()]);
            let w = atkin_lehner(d * n, &fe).unwrap();
            assert_eq!(key(&w), keys[cm.locate(&w).unwrap()]);
        }
        // the base point is in the principal class relative to itself
        assert_eq!(keys[0].1, Form::identity(disc));
    }
}

#[test]
fn torsor_location_matches_coordinates() {
    let cat = Catalog::default();
    for (d, n, disc) in [(6u64, 1u64, -51i64), (6, 1, -24), (10, 1, -20), (1, 6, -23)] {
        let r = QuadOrder::new(disc, 1).unwrap();
        let t = Torsor::new(d, n, &r, &cat, 8).unwrap();
        for i in 0..t.len() {
            let e = t.point(i).unwrap();
            assert_eq!(t.locate(&e).unwrap(), i);
            for m in exact_divisors(d * n) {
                assert_eq!(t.locate(&atkin_lehner(m, &e).unwrap()).unwrap(), t.act_w(i, m).unwrap(), "w_{m}");
            }
            for f in r.class_group() {
                assert_eq!(t.locate(&pic_act(&f, &e).unwrap()).unwrap(), t.act_pic(i, &f).unwrap());
            }
        }
    }
}
