mod common;

use common::{fitted_wigner, unit};
use equikernel::so3::{clebsch_gordan, spherical_harmonics, triangle, wigner_d_all, Rotation};
use nalgebra::{DMatrix, Quaternion, UnitQuaternion, Vector3};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const L_MAX: usize = 8;

#[test]
fn wigner_matches_least_squares_fit() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10 {
        let r = Rotation::random(&mut rng);
        let d = wigner_d_all(&r, L_MAX).unwrap();
        for l in 0..=L_MAX {
            let oracle = fitted_wigner(&r, l, &mut rng);
            let err = (d[l].matrix() - oracle).amax();
            assert!(err < 1e-10, "L={l}: {err:e}");
        }
    }
}

#[test]
fn homomorphism_and_orthogonality() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..10 {
        let a = Rotation::random(&mut rng);
        let b = Rotation::random(&mut rng);
        let da = wigner_d_all(&a, L_MAX).unwrap();
        let db = wigner_d_all(&b, L_MAX).unwrap();
        let dab = wigner_d_all(&a.compose(&b), L_MAX).unwrap();
        let dinv = wigner_d_all(&a.inverse(), L_MAX).unwrap();
        for l in 0..=L_MAX {
            let n = 2 * l + 1;
            assert!((da[l].matrix() * db[l].matrix() - dab[l].matrix()).amax() < 1e-10);
            assert!((da[l].matrix().transpose() * da[l].matrix() - DMatrix::identity(n, n)).amax() < 1e-10);
            assert!((dinv[l].matrix() - da[l].matrix().transpose()).amax() < 1e-10);
        }
    }
}

#[test]
fn harmonics_rotate_with_wigner() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let r = Rotation::random(&mut rng);
        let v = unit(&mut rng);
        let d = wigner_d_all(&r, L_MAX).unwrap();
        let y = spherical_harmonics(&v, L_MAX).unwrap();
        let yr = spherical_harmonics(&r.apply(&v), L_MAX).unwrap();
        for l in 0..=L_MAX {
            let lhs = d[l].matrix() * nalgebra::DVector::from_column_slice(y.degree(l));
            let err = lhs
                .iter()
                .zip(yr.degree(l))
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(err < 1e-10, "L={l}: {err:e}");
        }
    }
}

#[test]
fn coupling_is_an_intertwiner() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let rotations: Vec<_> = (0..10).map(|_| Rotation::random(&mut rng)).collect();
    for r in &rotations {
        let d = wigner_d_all(r, 8).unwrap();
        for l1 in 0..=4usize {
            for l2 in 0..=4usize {
                for l3 in l1.abs_diff(l2)..=(l1 + l2).min(8) {
                    let cg = clebsch_gordan(l1, l2, l3).unwrap();
                    let (n1, n2, n3) = (2 * l1 + 1, 2 * l2 + 1, 2 * l3 + 1);
                    let c = DMatrix::from_fn(n1 * n2, n3, |row, k| cg.get(row / n2, row % n2, k));
                    let kron = d[l1].matrix().kronecker(d[l2].matrix());
                    let err = (kron * &c - c * d[l3].matrix()).amax();
                    assert!(err < 1e-10, "({l1},{l2},{l3}): {err:e}");
                }
            }
        }
    }
}

// ∫ Y1 Y2 Y3 over the sphere, by a uniform azimuth rule and composite
// Simpson in cos θ.
fn gaunt(l1: usize, l2: usize, l3: usize) -> Vec<f64> {
    let (n1, n2, n3) = (2 * l1 + 1, 2 * l2 + 1, 2 * l3 + 1);
    let lmax = l1.max(l2).max(l3);
    let n_phi = 64;
    let n_u = 2000;
    let mut out = vec![0.0; n1 * n2 * n3];
    for k in 0..=n_u {
        let u = -1.0 + 2.0 * k as f64 / n_u as f64;
        let w_u = if k == 0 || k == n_u {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        } * (2.0 / n_u as f64)
            / 3.0;
        let s = (1.0 - u * u).max(0.0).sqrt();
        for j in 0..n_phi {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / n_phi as f64;
            let p = Vector3::new(s * phi.sin(), u, s * phi.cos());
            let p = if s == 0.0 { Vector3::new(0.0, u, 0.0) } else { p };
            let y = spherical_harmonics(&p, lmax).unwrap();
            let w = w_u * 2.0 * std::f64::consts::PI / n_phi as f64;
            for a in 0..n1 {
                for b in 0..n2 {
                    for c in 0..n3 {
                        out[(a * n2 + b) * n3 + c] += w * y.degree(l1)[a] * y.degree(l2)[b] * y.degree(l3)[c];
                    }
                }
            }
        }
    }
    out
}

#[test]
fn coupling_is_proportional_to_gaunt_integrals() {
    for (l1, l2, l3) in [(1, 1, 2), (1, 2, 3), (2, 2, 2), (2, 2, 4), (1, 3, 2), (2, 3, 3)] {
        assert!(triangle(l1, l2, l3));
        let cg = clebsch_gordan(l1, l2, l3).unwrap();
        let g = gaunt(l1, l2, l3);
        let c = cg.as_slice();
        let dot: f64 = c.iter().zip(&g).map(|(a, b)| a * b).sum();
        let nc: f64 = c.iter().map(|a| a * a).sum::<f64>().sqrt();
        let ng: f64 = g.iter().map(|a| a * a).sum::<f64>().sqrt();
        let cos = dot.abs() / (nc * ng);
        assert!((1.0 - cos).abs() < 1e-10, "({l1},{l2},{l3}): {cos}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn harmonics_equivariant_for_any_rotation(
        q in prop::array::uniform4(-1.0f64..1.0),
        v in prop::array::uniform3(-1.0f64..1.0),
    ) {
        let qv = nalgebra::Vector4::from(q);
        let vv = Vector3::from(v);
        prop_assume!(qv.norm() > 1e-3 && vv.norm() > 1e-3);
        let r = Rotation::from_quaternion(&UnitQuaternion::from_quaternion(Quaternion::from(qv)));
        let dir = vv.normalize();
        let d = wigner_d_all(&r, 6).unwrap();
        let y = spherical_harmonics(&dir, 6).unwrap();
        let yr = spherical_harmonics(&r.apply(&dir), 6).unwrap();
        for l in 0..=6 {
            let lhs = d[l].matrix() * nalgebra::DVector::from_column_slice(y.degree(l));
            for (a, b) in lhs.iter().zip(yr.degree(l)) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn each_degree_has_unit_norm(v in prop::array::uniform3(-1.0f64..1.0)) {
        let vv = Vector3::from(v);
        prop_assume!(vv.norm() > 1e-3);
        let y = spherical_harmonics(&vv.normalize(), L_MAX).unwrap();
        for l in 0..=L_MAX {
            let n: f64 = y.degree(l).iter().map(|a| a * a).sum();
            prop_assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn coupling_columns_are_orthonormal(l1 in 0usize..=5, l2 in 0usize..=5, k in 0usize..=10) {
        let l3 = l1.abs_diff(l2) + k % (l1 + l2 - l1.abs_diff(l2) + 1);
        let cg = clebsch_gordan(l1, l2, l3).unwrap();
        let (n1, n2, n3) = (2 * l1 + 1, 2 * l2 + 1, 2 * l3 + 1);
        let c = DMatrix::from_fn(n1 * n2, n3, |row, col| cg.get(row / n2, row % n2, col));
        prop_assert!((c.transpose() * &c - DMatrix::identity(n3, n3)).amax() < 1e-12);
    }
}
