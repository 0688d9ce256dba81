use lensopt::bridge::{check_adjunction, erase, oplaxator, opunitor, reify, CoherenceReport};
use lensopt::lens::{lens_compose, Association, LensChain};
use lensopt::normal::normalize;
use lensopt::optic::optic_compose;
use lensopt::sample::{random_signature, Sampler};
use lensopt::two_optic::{hcompose, identity_cell, vcompose};
use proptest::prelude::*;

#[test]
fn adjunction_laws_on_random_signatures() {
    for seed in 0..3 {
        let sig = random_signature(seed);
        let mut s = Sampler::new(&sig, seed);
        let lenses: Vec<_> = (0..40).filter_map(|_| s.retry(20, |m| m.lens())).collect();
        let optics: Vec<_> = (0..40).filter_map(|_| s.retry(20, |m| m.optic())).collect();
        let cells: Vec<_> = (0..40).filter_map(|_| s.retry(20, |m| m.cell())).collect();
        let report = check_adjunction(&lenses, &optics, &cells, &sig);
        assert!(
            report.passed(),
            "seed {seed}: {}",
            serde_json::to_string_pretty(&report).unwrap()
        );
    }
}

#[test]
fn oplax_coherence_on_random_signatures() {
    for seed in 0..3 {
        let sig = random_signature(seed);
        let mut s = Sampler::new(&sig, seed + 100);
        let mut report = CoherenceReport::default();
        for _ in 0..30 {
            if let Some(c) = s.retry(20, |m| m.chain(2)) {
                report.check_pair(&c[0], &c[1], &sig);
            }
            if let Some(c) = s.retry(20, |m| m.chain(3)) {
                report.check_triple(&c[0], &c[1], &c[2], &sig);
            }
        }
        assert!(
            report.passed(),
            "seed {seed}: {}",
            serde_json::to_string_pretty(&report).unwrap()
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn erase_after_reify_is_identity(seed in 0u64..10_000) {
        let sig = random_signature(seed);
        let mut s = Sampler::new(&sig, seed);
        if let Some(l) = s.retry(10, |m| m.lens()) {
            prop_assert!(erase(&reify(&l)).equivalent(&l));
        }
    }

    #[test]
    fn lens_composition_is_associative_up_to_normal_form(seed in 0u64..10_000) {
        let sig = random_signature(seed);
        let mut s = Sampler::new(&sig, seed);
        if let Some(c) = s.retry(10, |m| m.chain(3)) {
            let chain = LensChain::new(c).unwrap();
            prop_assert!(chain.compose(Association::Left).equivalent(&chain.compose(Association::Right)));
        }
    }

    #[test]
    fn optic_composition_is_strictly_associative(seed in 0u64..10_000) {
        let sig = random_signature(seed);
        let mut s = Sampler::new(&sig, seed);
        if let Some(c) = s.retry(10, |m| m.chain(3)) {
            let o: Vec<_> = c.iter().map(reify).collect();
            let left = optic_compose(&optic_compose(&o[0], &o[1]).unwrap(), &o[2]).unwrap();
            let right = optic_compose(&o[0], &optic_compose(&o[1], &o[2]).unwrap()).unwrap();
            prop_assert!(left.strictly_equal(&right));
            prop_assert_eq!(left.residual().len(), o.iter().map(|x| x.residual().len()).sum::<usize>());
        }
    }

    #[test]
    fn erase_is_a_functor(seed in 0u64..10_000) {
        let sig = random_signature(seed);
        let mut s = Sampler::new(&sig, seed);
        if let Some(c) = s.retry(10, |m| m.chain(2)) {
            let composite = optic_compose(&reify(&c[0]), &reify(&c[1])).unwrap();
            prop_assert!(erase(&composite).equivalent(&lens_compose(&c[0], &c[1]).unwrap()));
        }
    }

    #[test]
    fn oplaxator_and_opunitor_are_valid_cells(seed in 0u64..10_000) {
        let sig = random_signature(seed);
        let mut s = Sampler::new(&sig, seed);
        if let Some(c) = s.retry(10, |m| m.chain(2)) {
            let cell = oplaxator(&c[0], &c[1], &sig).unwrap();
            prop_assert!(cell.extensionally_checked());
            prop_assert!(opunitor(c[0].dom(), &sig).is_ok());
        }
    }

    #[test]
    fn horizontal_composite_of_oplaxators_is_valid(seed in 0u64..10_000) {
        let sig = random_signature(seed);
        let mut s = Sampler::new(&sig, seed);
        if let Some(c) = s.retry(10, |m| m.chain(4)) {
            let left = oplaxator(&c[0], &c[1], &sig).unwrap();
            let right = oplaxator(&c[2], &c[3], &sig).unwrap();
            let wide = hcompose(&left, &right, &sig).unwrap();
            prop_assert_eq!(
                wide.witness().dom().len(),
                left.witness().dom().len() + right.witness().dom().len()
            );
        }
    }

    #[test]
    fn identity_cells_are_units(seed in 0u64..10_000) {
        let sig = random_signature(seed);
        let mut s = Sampler::new(&sig, seed);
        if let Some(cell) = s.retry(10, |m| m.cell()) {
            let id_src = identity_cell(cell.src(), &sig).unwrap();
            let id_tgt = identity_cell(cell.tgt(), &sig).unwrap();
            let left = vcompose(&id_src, &cell, &sig).unwrap();
            let right = vcompose(&cell, &id_tgt, &sig).unwrap();
            prop_assert_eq!(normalize(left.witness()), normalize(cell.witness()));
            prop_assert_eq!(normalize(right.witness()), normalize(cell.witness()));
        }
    }
}
