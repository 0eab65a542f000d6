use heegner::orders::catalog::{record, Catalog};
use heegner::orders::compute_maximal_order;

const SEEDS: [u64; 19] = [1, 2, 3, 5, 6, 7, 10, 13, 11, 14, 15, 22, 26, 21, 33, 34, 35, 38, 46];

/// Prints catalog records computed from scratch; run with --ignored to
/// regenerate data/maximal_orders.txt.
#[test]
#[ignore]
fn regenerate_catalog() {
    let mut ds = SEEDS.to_vec();
    ds.sort();
    for d in ds {
        let o = compute_maximal_order(d).unwrap();
        println!("{}", record(&o));
    }
}

#[test]
fn bundled_catalog_is_frozen() {
    let cat = Catalog::default();
    let mut ds = SEEDS.to_vec();
    ds.sort();
    assert_eq!(cat.discriminants(), ds);
    for d in ds {
        let o = cat.maximal_order(d).unwrap();
        assert_eq!(o.disc(), d);
        assert_eq!(o.level(), 1);
        let fresh = compute_maximal_order(d).unwrap();
        assert_eq!(record(&o), record(&fresh), "D = {d}");
    }
}
