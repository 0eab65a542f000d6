use heegner::bimodules::{
    base_psi, check_al_square, d0_n0, end_bimodule, end_matrix, gram_det, hom_bimodules, index_p_stable_extension,
    is_admissible, lattice_apply, local_type, pic_act_bimodule, tensor_over_r, Bimodule,
};
use heegner::classsets::{isomorphic_oriented, short_elements};
use heegner::core_algebra::arith::{int, rat, Int, Rat};
use heegner::embeddings::{pic_act, OptimalEmbedding};
use heegner::lattices::ZLattice;
use heegner::orders::Catalog;
use heegner::quad::{class_group, QuadOrder};
use heegner::specialize::{Ctx, AnyCmSet};
use heegner::bimodules::atkin_lehner_bimodule;

fn cm_tensor(d: u64, n: u64, p: u64, disc: i64, idx: usize, ctx: &Ctx) -> (Bimodule, OptimalEmbedding) {
    let r = QuadOrder::new(disc, 1).unwrap();
    let phi = AnyCmSet::new(d, n, &r, ctx).unwrap().embedding(idx).unwrap();
    let psi = base_psi(p, &r, &ctx.cat).unwrap();
    (tensor_over_r(&phi, &psi).unwrap(), phi)
}

#[test]
fn ramified_tensor_is_type_one_one() {
    let ctx = Ctx::new(Catalog::default());
    for (d, n, p, disc, d0, n0) in [(6u64, 1u64, 2u64, -4i64, 3u64, 2u64), (6, 1, 3, -3, 2, 3), (10, 1, 5, -20, 2, 5)] {
        let (m, _) = cm_tensor(d, n, p, disc, 0, &ctx);
        assert_eq!(m.lat.dim(), 8);
        assert!(m.is_projective_left());
        assert!(is_admissible(&m).unwrap());
        assert_eq!(local_type(&m, p).unwrap(), (1, 1));
        assert_eq!(d0_n0(&m).unwrap(), (d0, n0));
        let end = end_bimodule(&m, &ctx.cat).unwrap();
        assert_eq!((end.order.disc(), end.order.level()), (d0, n0));
        assert_eq!(gram_det(&end.order.order), int(((d0 * n0) * (d0 * n0)) as i64));
        assert_eq!(hom_bimodules(&m, &m, &ctx.cat).unwrap(), end.order.order.lat);
        // local type is only defined at primes ramified on both sides
        assert!(local_type(&m, 7).is_err());
    }
}

#[test]
fn good_prime_tensor_has_empty_sigma() {
    let ctx = Ctx::new(Catalog::default());
    let (m, _) = cm_tensor(1, 1, 2, -4, 0, &ctx);
    assert!(is_admissible(&m).unwrap());
    assert_eq!(d0_n0(&m).unwrap(), (2, 1));
    let end = end_bimodule(&m, &ctx.cat).unwrap();
    assert_eq!((end.order.disc(), end.order.level()), (2, 1));
    let (m, _) = cm_tensor(1, 5, 2, -4, 0, &ctx);
    let end = end_bimodule(&m, &ctx.cat).unwrap();
    assert_eq!((end.order.disc(), end.order.level()), (2, 5));
}

#[test]
fn inert_tensor_needs_the_stable_extension() {
    let ctx = Ctx::new(Catalog::default());
    let (m, _) = cm_tensor(6, 1, 3, -4, 0, &ctx);
    // not admissible at 3: local type is refused
    assert!(!is_admissible(&m).unwrap());
    assert!(local_type(&m, 3).is_err());
    let mp = index_p_stable_extension(&m).unwrap();
    assert!(mp.lat.contains_lattice(&m.lat));
    assert_eq!(m.lat.index_in(&mp.lat).unwrap(), int(9));
    let t = local_type(&mp, 3).unwrap();
    assert!(t == (2, 0) || t == (0, 2));
    let end = end_bimodule(&mp, &ctx.cat).unwrap();
    assert_eq!((end.order.disc(), end.order.level()), (2, 1));
    // an admissible bimodule has nothing to extend
    let (m2, _) = cm_tensor(6, 1, 2, -4, 0, &ctx);
    assert!(index_p_stable_extension(&m2).is_err());
}

#[test]
fn non_optimal_or_mismatched_inputs_fail() {
    let ctx = Ctx::new(Catalog::default());
    let r = QuadOrder::new(-4, 1).unwrap();
    let psi = base_psi(2, &r, &ctx.cat).unwrap();
    let phi = AnyCmSet::new(6, 1, &r, &ctx).unwrap().embedding(0).unwrap();
    // 2 psi(i) generates Z[2i], which is not optimal in S
    let r2 = QuadOrder::new(-4, 2).unwrap();
    let bad = OptimalEmbedding { r: r2, target: psi.target.clone(), image: psi.image.scale(&rat(2, 1)) };
    let phi2 = OptimalEmbedding { r: r2, target: phi.target.clone(), image: phi.image.scale(&rat(2, 1)) };
    assert!(tensor_over_r(&phi2, &bad).is_err());
    assert!(tensor_over_r(&phi, &bad).is_err());
    // a lattice that is not stable under the actions
    let m = tensor_over_r(&phi, &psi).unwrap();
    let mut gens = ZLattice::identity(8).basis();
    gens[0][0] = rat(1, 3);
    assert!(m.with_lattice(ZLattice::from_rat_gens(&gens, 8).unwrap()).is_err());
}

fn fourth_root(x: &Int) -> Option<Int> {
    let r = x.nth_root(4);
    (r.pow(4) == *x).then_some(r)
}

/// Explicit bimodule isomorphism: an element y of the commutant with M y = N.
/// N is first scaled by an integer so that y can be searched for in the
/// integral Hom(M, N) by its reduced norm.
fn bimodule_iso(m: &Bimodule, n: &Bimodule, ctx: &Ctx) -> bool {
    let end = end_bimodule(m, &ctx.cat).unwrap();
    let alg = end.order.alg().clone();
    // det of y on Q^8 is nrd(y)^4
    let ratio = n.lat.covolume() / m.lat.covolume();
    let (Some(a), Some(b)) = (fourth_root(ratio.numer()), fourth_root(ratio.denom())) else { return false };
    let n = n.with_lattice(n.lat.scale(&Rat::from_integer(b.clone()))).unwrap();
    let target = Rat::from_integer(a * b);
    let hom = hom_bimodules(m, &n, &ctx.cat).unwrap();
    for y in short_elements(&alg, &hom, &target).unwrap() {
        if alg.nrd(&y) != target {
            continue;
        }
        let ym = end_matrix(m, &ctx.cat, &y).unwrap();
        if lattice_apply(&m.lat, &[ym]) == n.lat {
            return true;
        }
    }
    false
}

#[test]
fn pic_action_and_classification_faithfulness() {
    let ctx = Ctx::new(Catalog::default());
    // h(-84) = 4; 2 and 3 ramify
    let (m, phi) = cm_tensor(6, 1, 2, -84, 0, &ctx);
    let end = end_bimodule(&m, &ctx.cat).unwrap();
    let delta = end_matrix(&m, &ctx.cat, &end.delta.image).unwrap();
    let target = ctx.class_set(3, 2).unwrap();
    let mut twists = Vec::new();
    for f in class_group(-84) {
        let mj = pic_act_bimodule(&f, &m, &delta).unwrap();
        let ej = end_bimodule(&mj, &ctx.cat).unwrap();
        // End([J] M) is [J] End(M)
        let moved = pic_act(&f, &end.delta).unwrap();
        assert!(isomorphic_oriented(&ej.order, &moved.target).unwrap().is_some(), "{f:?}");
        assert_eq!(target.locate(&ej.order).unwrap().0, target.locate(&moved.target).unwrap().0);
        twists.push(mj);
    }
    // the principal class returns M
    assert_eq!(twists[0].lat, m.lat);
    let _ = phi;
}

#[test]
fn classification_faithfulness() {
    let ctx = Ctx::new(Catalog::default());
    // h(-56) = 4, End lands in Pic(7, 2)
    let (m, _) = cm_tensor(14, 1, 2, -56, 0, &ctx);
    let end = end_bimodule(&m, &ctx.cat).unwrap();
    let delta = end_matrix(&m, &ctx.cat, &end.delta.image).unwrap();
    let mut mods = Vec::new();
    for f in class_group(-56) {
        let mj = pic_act_bimodule(&f, &m, &delta).unwrap();
        mods.push(atkin_lehner_bimodule(7, &mj).unwrap());
        mods.push(mj);
    }
    let ends: Vec<_> = mods.iter().map(|x| end_bimodule(x, &ctx.cat).unwrap().order).collect();
    let (mut same, mut differ) = (0, 0);
    for (a, ea) in mods.iter().zip(&ends) {
        for (b, eb) in mods.iter().zip(&ends) {
            let iso = isomorphic_oriented(ea, eb).unwrap().is_some();
            assert_eq!(bimodule_iso(a, b, &ctx), iso);
            if iso { same += 1 } else { differ += 1 }
        }
    }
    assert!(same > 0 && differ > 0);
}

#[test]
fn atkin_lehner_square() {
    let ctx = Ctx::new(Catalog::default());
    let (m, _) = cm_tensor(6, 1, 2, -84, 1, &ctx);
    check_al_square(3, &m, &ctx.cat).unwrap();
    assert!(check_al_square(2, &m, &ctx.cat).is_err());
    let (m, _) = cm_tensor(1, 6, 2, -20, 0, &ctx);
    check_al_square(3, &m, &ctx.cat).unwrap();
}
