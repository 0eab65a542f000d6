use heegner::core_algebra::arith::kronecker;
use heegner::orders::Catalog;
use heegner::quad::{is_fundamental, QuadOrder};
use heegner::specialize::equidist::{class_count_table, class_counts, equidistribution_stats, thickness, EquiCase};
use heegner::specialize::{case_of, reduction_locus, run_phi, AnyCmSet, Case, Ctx, Locus};
use proptest::prelude::*;
use std::collections::BTreeSet;

fn quad(disc: i64) -> QuadOrder {
    QuadOrder::new(disc, 1).unwrap()
}

#[test]
fn reduction_locus_examples() {
    assert_eq!(reduction_locus(6, 1, 2, &quad(-4)).unwrap(), Locus::Singular);
    assert_eq!(reduction_locus(6, 1, 3, &quad(-4)).unwrap(), Locus::Nonsingular);
    // 3 splits in Q(sqrt -5)
    assert_eq!(reduction_locus(10, 3, 3, &quad(-20)).unwrap(), Locus::Nonsingular);
    assert_eq!(reduction_locus(1, 1, 5, &quad(-4)).unwrap(), Locus::SmoothFiber);
    // p dividing the conductor is excluded
    assert!(reduction_locus(6, 1, 2, &QuadOrder::new(-4, 2).unwrap()).is_err());
    assert_eq!(case_of(6, 1, 2, &quad(-4)).unwrap(), Case::CdSingular);
    assert_eq!(case_of(6, 1, 3, &quad(-4)).unwrap(), Case::CdSmooth);
    assert_eq!(case_of(1, 2, 2, &quad(-4)).unwrap(), Case::DrSingular);
    assert_eq!(case_of(6, 5, 5, &quad(-24)).unwrap(), Case::DrSmooth);
    assert_eq!(case_of(1, 1, 3, &quad(-4)).unwrap(), Case::GoodSs);
}

fn assert_clean(case: Case, d: u64, n: u64, p: u64, disc: i64, ctx: &Ctx) -> heegner::specialize::PhiReport {
    let rep = run_phi(case, d, n, p, &quad(disc), ctx).unwrap();
    assert!(rep.ok(), "{case:?} ({d},{n},{p}) {disc}: {:?}", rep.failures);
    rep
}

#[test]
fn singular_cerednik_drinfeld_examples() {
    let ctx = Ctx::new(Catalog::default());
    let rep = assert_clean(Case::CdSingular, 6, 1, 2, -4, &ctx);
    assert_eq!((rep.target_d, rep.target_n), (3, 2));
    assert_eq!(rep.source_len, rep.target_len);
    let rep = assert_clean(Case::CdSingular, 6, 1, 3, -3, &ctx);
    assert_eq!((rep.source_len, rep.target_len), (2, 2));
    // reciprocity over a class group of order 4
    let rep = assert_clean(Case::CdSingular, 6, 1, 2, -84, &ctx);
    assert!(rep.pic_equivariant && rep.w_equivariant && rep.triangle);
    assert!(rep.bimodule_checks.iter().all(|(a, t, g)| *a && *t && g == "36"));
}

#[test]
fn smooth_cerednik_drinfeld_example() {
    let ctx = Ctx::new(Catalog::default());
    let rep = assert_clean(Case::CdSmooth, 6, 1, 3, -4, &ctx);
    assert_eq!((rep.target_d, rep.target_n, rep.copies), (2, 1, 2));
    assert_eq!(rep.wp_swaps, Some(true));
    let copies: BTreeSet<usize> = rep.images.iter().map(|(c, _)| *c).collect();
    assert_eq!(copies.len(), 2);
    // a ramified prime is the singular case
    assert!(run_phi(Case::CdSmooth, 6, 1, 2, &quad(-4), &ctx).is_err());
}

#[test]
fn good_supersingular_examples() {
    let ctx = Ctx::new(Catalog::default());
    let rep = assert_clean(Case::GoodSs, 1, 1, 2, -4, &ctx);
    assert_eq!((rep.source_len, rep.target_len), (1, 1));
    // 3 inert: one point onto the single w_3 orbit of a two-point target
    let rep = assert_clean(Case::GoodSs, 1, 1, 3, -4, &ctx);
    assert_eq!((rep.source_len, rep.target_len), (1, 2));
    // split primes are outside the domain
    assert!(run_phi(Case::GoodSs, 1, 1, 5, &quad(-4), &ctx).is_err());
    // target in an indefinite algebra
    let rep = assert_clean(Case::GoodSs, 2, 1, 3, -4, &ctx);
    assert_eq!((rep.target_d, rep.target_len), (6, 2));
}

#[test]
fn degeneracy_examples() {
    let ctx = Ctx::new(Catalog::default());
    // 5 splits in Q(sqrt -6): two copies of CM_{6,1}
    let rep = assert_clean(Case::DrSmooth, 6, 5, 5, -24, &ctx);
    assert_eq!(rep.source_len, 2 * rep.target_len);
    assert_eq!(rep.wp_swaps, Some(true));
    let rep = assert_clean(Case::DrSingular, 1, 2, 2, -4, &ctx);
    assert_eq!((rep.source_len, rep.target_len, rep.target_d), (1, 1, 2));
    // 2 is unramified in Q(sqrt -7)
    assert!(run_phi(Case::DrSingular, 1, 2, 2, &quad(-7), &ctx).is_err());
}

#[test]
fn specialized_class_histogram_matches_class_counts() {
    // the per-class point counts used for equidistribution against the
    // classes of the actual map images
    let ctx = Ctx::new(Catalog::default());
    for (d, p, disc) in [(14u64, 2u64, -56i64), (14, 2, -84), (14, 2, -88), (22, 2, -88)] {
        let r = quad(disc);
        let rep = run_phi(Case::CdSingular, d, 1, p, &r, &ctx).unwrap();
        assert!(rep.ok(), "{:?}", rep.failures);
        let cs = ctx.class_set(d / p, p).unwrap();
        let mut hist = vec![0usize; cs.reps.len()];
        for k in &rep.classes {
            hist[*k] += 1;
        }
        assert_eq!(class_counts(&cs, &r).unwrap(), hist, "({d},{p}) {disc}");
    }
}

#[test]
fn class_count_table_matches_direct_counts() {
    let ctx = Ctx::new(Catalog::default());
    for (d, n) in [(3u64, 2u64), (7, 2), (2, 3), (11, 1), (13, 1)] {
        let cs = ctx.class_set(d, n).unwrap();
        let tab = class_count_table(&cs, 250, &|x| is_fundamental(x)).unwrap();
        for (disc, row) in &tab {
            assert_eq!(&class_counts(&cs, &quad(*disc)).unwrap(), row, "({d},{n}) {disc}");
        }
    }
}

#[test]
fn equidistribution_examples() {
    let ctx = Ctx::new(Catalog::default());
    // Pic(3, 2) has one class: all mass on it, TV 0
    let e = equidistribution_stats(6, 1, 2, EquiCase::Singular, 2000, &ctx).unwrap();
    assert_eq!(e.weights, vec![2]);
    assert!(e.rows.iter().all(|r| r.tv == 0.0));
    assert!(e.tv_upper <= e.tv_lower);
    let units: Vec<usize> = ctx.class_set(7, 2).unwrap().reps.iter().map(|r| r.units).collect();
    let e = equidistribution_stats(14, 1, 2, EquiCase::Singular, 2000, &ctx).unwrap();
    assert_eq!(e.weights, units.iter().map(|u| thickness(*u, EquiCase::Singular)).collect::<Vec<_>>());
    assert!(e.rows.iter().all(|r| kronecker(r.disc, 2) == 0));
    assert!(e.rows.iter().all(|r| (0.0..=1.0).contains(&r.tv)));
    // components: 3 inert
    let e = equidistribution_stats(6, 1, 3, EquiCase::Components, 500, &ctx).unwrap();
    assert!(e.rows.iter().all(|r| kronecker(r.disc, 3) == -1));
    assert!(equidistribution_stats(6, 1, 5, EquiCase::Singular, 100, &ctx).is_err());
}

#[test]
fn indefinite_targets_are_located() {
    let ctx = Ctx::new(Catalog::default());
    let t = AnyCmSet::new(6, 1, &quad(-24), &ctx).unwrap();
    assert!(matches!(t, AnyCmSet::Torsor(_)));
    for i in 0..t.len() {
        assert_eq!(t.locate(&t.embedding(i).unwrap()).unwrap(), i);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn reciprocity_holds_on_random_instances(
        cfg in prop::sample::select(vec![(6u64, 1u64, 2u64), (10, 1, 2), (14, 1, 7), (6, 1, 3)]),
        a in 3i64..160,
    ) {
        let disc = -a;
        prop_assume!(is_fundamental(disc));
        let (d, n, p) = cfg;
        let r = quad(disc);
        let Ok(case) = case_of(d, n, p, &r) else { return Ok(()) };
        let ok = [2u64, 3, 5, 7].iter().filter(|q| d % **q == 0 && **q != p).all(|q| kronecker(disc, *q) != 1);
        prop_assume!(ok && kronecker(disc, p) != 1);
        let rep = run_phi(case, d, n, p, &r, &Ctx::new(Catalog::default())).unwrap();
        prop_assert!(rep.ok(), "{:?} {:?}", case, rep.failures);
    }
}
