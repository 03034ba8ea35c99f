mod common;

use common::{naive_convolution, random_vector};
use equikernel::escn::{escn_convolution, escn_convolution_in_frame, reparametrize_weights, So2LinearWeights};
use equikernel::irreps::{so3_convolution, IrrepsFeature, IrrepsLayout, PathWeights};
use equikernel::so3::{alignment_rotation, wigner_d_all, Rotation};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn tensor_product_matches_naive_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for l in 1..=3 {
        let w = PathWeights::random(l, 2 * l, l, 3, 2, &mut rng);
        for _ in 0..5 {
            let x = IrrepsFeature::random(IrrepsLayout::new(l, 3), &mut rng);
            let r = random_vector(&mut rng);
            let a = so3_convolution(&x, &r, &w, l).unwrap();
            assert!(a.max_abs_diff(&naive_convolution(&x, &r, &w, l)) < 1e-12);
        }
    }
}

#[test]
fn escn_equals_tensor_product_on_random_edges() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for l in 1..=3 {
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let w = PathWeights::random(l, 2 * l, l, 4, 3, &mut rng);
            let so2 = reparametrize_weights(&w, l).unwrap();
            let x = IrrepsFeature::random(IrrepsLayout::new(l, 4), &mut rng);
            let r = random_vector(&mut rng) * rng.random_range(0.5..5.0);
            let a = escn_convolution(&x, &r, &so2).unwrap();
            worst = worst.max(a.max_abs_diff(&naive_convolution(&x, &r, &w, l)));
        }
        assert!(worst <= 1e-8, "L_max {l}: {worst:e}");
    }
}

#[test]
fn message_is_gauge_independent() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let l = 3;
    let w = So2LinearWeights::random(l, l, 2, 3, 3, &mut rng);
    for _ in 0..20 {
        let x = IrrepsFeature::random(IrrepsLayout::new(l, 3), &mut rng);
        let r = random_vector(&mut rng);
        let frame = alignment_rotation(&r.normalize()).unwrap();
        let gauge = Rotation::about_y(rng.random_range(0.0..std::f64::consts::TAU));
        let a = escn_convolution_in_frame(&x, &gauge.compose(&frame), &w).unwrap();
        let b = escn_convolution(&x, &r, &w).unwrap();
        assert!(a.max_abs_diff(&b) <= 1e-10);
    }
}

#[test]
fn truncated_orders_stay_equivariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let l = 4;
    let w = PathWeights::random(l, 2 * l, l, 2, 2, &mut rng);
    let so2 = reparametrize_weights(&w, 2).unwrap();
    let x = IrrepsFeature::random(IrrepsLayout::new(l, 2), &mut rng);
    let r = random_vector(&mut rng);
    let full = naive_convolution(&x, &r, &w, l);
    let cut = escn_convolution(&x, &r, &so2).unwrap();
    assert!(full.max_abs_diff(&cut) > 1e-3);
    let rot = Rotation::random(&mut rng);
    let d = wigner_d_all(&rot, l).unwrap();
    let a = escn_convolution(&x.rotate(&d), &rot.apply(&r), &so2).unwrap();
    assert!(a.max_abs_diff(&cut.rotate(&d)) < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn escn_is_linear_in_the_feature(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = So2LinearWeights::random(2, 2, 2, 2, 2, &mut rng);
        let x = IrrepsFeature::random(IrrepsLayout::new(2, 2), &mut rng);
        let y = IrrepsFeature::random(IrrepsLayout::new(2, 2), &mut rng);
        let r = random_vector(&mut rng);
        prop_assume!(r.norm() > 1e-3);
        let mut z = x.clone();
        z.scale(a);
        z.add_scaled(b, &y);
        let mut expected = escn_convolution(&x, &r, &w).unwrap();
        expected.scale(a);
        expected.add_scaled(b, &escn_convolution(&y, &r, &w).unwrap());
        prop_assert!(escn_convolution(&z, &r, &w).unwrap().max_abs_diff(&expected) < 1e-10);
    }

    #[test]
    fn message_depends_on_direction_only(seed in any::<u64>(), s in 0.1f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = So2LinearWeights::random(2, 2, 1, 2, 2, &mut rng);
        let x = IrrepsFeature::random(IrrepsLayout::new(2, 2), &mut rng);
        let r = random_vector(&mut rng);
        prop_assume!(r.norm() > 1e-3);
        let a = escn_convolution(&x, &r, &w).unwrap();
        let b = escn_convolution(&x, &(r * s), &w).unwrap();
        prop_assert!(a.max_abs_diff(&b) < 1e-10);
    }
}
