use heegner::classsets::{class_set, eichler_mass, is_principal, isomorphic_oriented, unit_group};
use heegner::core_algebra::arith::rat;
use heegner::orders::ideals::lattice_times;
use heegner::orders::{eichler_order, Catalog};
use heegner::core_algebra::QuatElement;

#[test]
fn small_class_sets() {
    let cat = Catalog::default();
    let cs = class_set(2, 1, &cat).unwrap();
    assert_eq!(cs.reps.len(), 1);
    assert_eq!(cs.unit_counts(), vec![24]);
    let cs = class_set(11, 1, &cat).unwrap();
    assert_eq!(cs.reps.len(), 2);
    assert_eq!(cs.computed_mass(), rat(5, 12));
    let cs = class_set(2, 9, &cat).unwrap();
    assert_eq!(cs.computed_mass(), rat(1, 2));
    assert_eq!(eichler_mass(2, 9), rat(1, 2));
    assert!(class_set(6, 1, &cat).is_err());
}

#[test]
fn hurwitz_principal_and_flip() {
    let cat = Catalog::default();
    let o = eichler_order(2, 1, &cat).unwrap();
    let alg = o.alg().clone();
    let g = QuatElement::from_ints([1, 1, 0, 0]);
    let i = lattice_times(&alg, &o.order.lat, &g, true).unwrap();
    let gen = is_principal(&o.order, &i).unwrap().unwrap();
    assert_eq!(alg.nrd(&gen), rat(2, 1));
    assert_eq!(unit_group(&o.order).unwrap().len(), 24);
    let flipped = o.frobenius_at(2);
    assert!(isomorphic_oriented(&o, &o).unwrap().is_some());
    // the flip is realized by conjugation by 1+i, which is not a unit
    assert!(isomorphic_oriented(&o, &flipped).unwrap().is_some());
}
