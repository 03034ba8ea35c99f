#![allow(dead_code)]

use std::collections::HashSet;

use equikernel::graph::AtomicStructure;
use equikernel::irreps::{IrrepsFeature, IrrepsLayout, PathWeights};
use equikernel::so3::{clebsch_gordan, spherical_harmonics, Rotation};
use nalgebra::{DMatrix, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn random_vector(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    Vector3::from_fn(|_, _| rng.sample(StandardNormal))
}

pub fn unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    random_vector(rng).normalize()
}

fn harmonics_matrix(points: &[Vector3<f64>], l: usize) -> DMatrix<f64> {
    DMatrix::from_fn(2 * l + 1, points.len(), |i, p| {
        spherical_harmonics(&points[p], l).unwrap().degree(l)[i]
    })
}

// D fitted by least squares from Y(R p) = D Y(p) on scattered points.
pub fn fitted_wigner(r: &Rotation, l: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let pts: Vec<Vector3<f64>> = (0..4 * (2 * l + 1)).map(|_| unit(rng)).collect();
    let rotated: Vec<Vector3<f64>> = pts.iter().map(|p| r.apply(p)).collect();
    let y = harmonics_matrix(&pts, l);
    harmonics_matrix(&rotated, l) * y.pseudo_inverse(1e-12).unwrap()
}

// Component-by-component sum over every path and every (m_in, m_filter, m_out).
pub fn naive_convolution(x: &IrrepsFeature, r: &Vector3<f64>, w: &PathWeights, l_out_max: usize) -> IrrepsFeature {
    let y = spherical_harmonics(&r.normalize(), w.l_filter_max()).unwrap();
    let mut out = IrrepsFeature::zeros(IrrepsLayout::new(l_out_max, w.c_out()));
    for (path, weight) in w.iter() {
        if path.l_out > l_out_max {
            continue;
        }
        let n_into = w.iter().filter(|(p, _)| p.l_out == path.l_out).count();
        let s = 1.0 / (n_into as f64).sqrt();
        let cg = clebsch_gordan(path.l_in, path.l_filter, path.l_out).unwrap();
        let (li, lf, lo) = (path.l_in as i64, path.l_filter as i64, path.l_out as i64);
        for mo in -lo..=lo {
            for mi in -li..=li {
                for mf in -lf..=lf {
                    let coef = cg.coefficient(mi, mf, mo) * y.get(path.l_filter, mf);
                    if coef == 0.0 {
                        continue;
                    }
                    for co in 0..w.c_out() {
                        let mut acc = 0.0;
                        for ci in 0..w.c_in() {
                            acc += weight[(co, ci)] * x.get(path.l_in, mi, ci);
                        }
                        let v = out.get(path.l_out, mo, co) + s * coef * acc;
                        out.set(path.l_out, mo, co, v);
                    }
                }
            }
        }
    }
    out
}

// Distinct sites of a 0.5 Å lattice, so many distances tie exactly.
pub fn lattice_structure(rng: &mut ChaCha8Rng, n: usize) -> AtomicStructure {
    let mut seen = HashSet::new();
    let mut positions = Vec::new();
    while positions.len() < n {
        let k: [i32; 3] = [rng.random_range(0..10), rng.random_range(0..10), rng.random_range(0..10)];
        if seen.insert(k) {
            positions.push(Vector3::new(k[0] as f64, k[1] as f64, k[2] as f64) * 0.5);
        }
    }
    AtomicStructure::new(vec![6; n], positions).unwrap()
}

// (source, target) pairs kept by ranking squared distances directly.
pub fn neighbor_oracle(s: &AtomicStructure, cutoff: f64, cap: usize) -> Vec<(usize, usize)> {
    let n = s.len();
    let d2 = |a: usize, b: usize| (s.positions[a] - s.positions[b]).norm_squared();
    let mut out = Vec::new();
    for t in 0..n {
        for j in 0..n {
            if j == t || d2(j, t) > cutoff * cutoff {
                continue;
            }
            let better = (0..n)
                .filter(|&k| k != t && k != j)
                .filter(|&k| d2(k, t) < d2(j, t) || (d2(k, t) == d2(j, t) && k < j))
                .count();
            if better < cap {
                out.push((j, t));
            }
        }
    }
    out
}
