//! Clebsch-Gordan coefficients in the real spherical-harmonics basis.
//!
//! Coefficients are first evaluated exactly (rational arithmetic) in the
//! complex Condon-Shortley basis with the Racah formula, then transformed to
//! the real basis of [`super::harmonics`]. For every triangle-valid triple the
//! transformed tensor is either purely real or purely imaginary; the non-zero
//! part is kept. The global sign is fixed so that the lexicographically first
//! non-zero entry `(m1, m2, m3)` is positive.
//!
//! Index convention: `C[m1][m2][m3]` couples `f^{(L1)}_{m1} g^{(L2)}_{m2}` into
//! `h^{(L3)}_{m3}`. The tensor is an isometry from `L3` into `L1 ⊗ L2`:
//!
//! ```text
//! Σ_{m1,m2} C[m1][m2][m3] C[m1][m2][m3'] = δ_{m3,m3'}
//! ```
//!
//! so the per-path orthogonality constant is exactly 1, and for any rotation
//! `g`, `Σ_{m1,m2} C[m1][m2][m3] (D1 f)_{m1} (D2 g)_{m2} = (D3 (f ⊗ g))_{m3}`.

use std::sync::{Arc, OnceLock};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{argument, Result};

/// Largest degree accepted for any of the three legs.
pub const MAX_CG_DEGREE: usize = 20;

const SIGN_THRESHOLD: f64 = 1e-12;

/// Dense coupling tensor for one path `(L1, L2, L3)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CgTensor {
    l1: usize,
    l2: usize,
    l3: usize,
    data: Vec<f64>,
    nonzeros: Vec<(usize, usize, usize, f64)>,
}

impl CgTensor {
    fn from_dense(l1: usize, l2: usize, l3: usize, data: Vec<f64>) -> CgTensor {
        let (d2, d3) = (2 * l2 + 1, 2 * l3 + 1);
        let nonzeros = data
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i / (d2 * d3), (i / d3) % d2, i % d3, *v))
            .collect();
        CgTensor { l1, l2, l3, data, nonzeros }
    }

    pub fn degrees(&self) -> (usize, usize, usize) {
        (self.l1, self.l2, self.l3)
    }

    /// Entry by zero-based component indices (`index = m + L`).
    #[inline]
    pub fn get(&self, i1: usize, i2: usize, i3: usize) -> f64 {
        let (d2, d3) = (2 * self.l2 + 1, 2 * self.l3 + 1);
        self.data[(i1 * d2 + i2) * d3 + i3]
    }

    /// Entry by signed orders.
    pub fn coefficient(&self, m1: i64, m2: i64, m3: i64) -> f64 {
        self.get(
            (m1 + self.l1 as i64) as usize,
            (m2 + self.l2 as i64) as usize,
            (m3 + self.l3 as i64) as usize,
        )
    }

    /// Row-major dense storage indexed `(i1, i2, i3)`.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Non-zero entries as `(i1, i2, i3, value)`.
    pub fn nonzeros(&self) -> &[(usize, usize, usize, f64)] {
        &self.nonzeros
    }

    pub fn is_zero(&self) -> bool {
        self.nonzeros.is_empty()
    }

    /// Copy with the largest coefficient perturbed; used by the audit to check
    /// that a broken coupling tensor is detected.
    pub fn corrupted(&self) -> CgTensor {
        let mut data = self.data.clone();
        if let Some((i, _)) = data
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        {
            data[i] *= 1.25;
            data[i] += 0.05;
        }
        CgTensor::from_dense(self.l1, self.l2, self.l3, data)
    }
}

/// Whether `(l1, l2, l3)` satisfies `|l1 - l2| ≤ l3 ≤ l1 + l2`.
pub fn triangle(l1: usize, l2: usize, l3: usize) -> bool {
    l1.abs_diff(l2) <= l3 && l3 <= l1 + l2
}

const N_DEG: usize = MAX_CG_DEGREE + 1;
static CACHE: [OnceLock<Arc<CgTensor>>; N_DEG * N_DEG * N_DEG] =
    [const { OnceLock::new() }; N_DEG * N_DEG * N_DEG];

/// Real-basis coupling tensor for the path `(l1, l2, l3)`.
///
/// Returns the all-zero tensor when the triangle rule fails. Results are
/// computed once per path and shared afterwards.
pub fn clebsch_gordan(l1: usize, l2: usize, l3: usize) -> Result<Arc<CgTensor>> {
    if l1 > MAX_CG_DEGREE || l2 > MAX_CG_DEGREE || l3 > MAX_CG_DEGREE {
        return Err(argument(format!(
            "Clebsch-Gordan degrees ({l1}, {l2}, {l3}) exceed the supported maximum {MAX_CG_DEGREE}"
        )));
    }
    let slot = &CACHE[(l1 * N_DEG + l2) * N_DEG + l3];
    Ok(slot.get_or_init(|| Arc::new(compute_real(l1, l2, l3))).clone())
}

fn compute_real(l1: usize, l2: usize, l3: usize) -> CgTensor {
    let (d1, d2, d3) = (2 * l1 + 1, 2 * l2 + 1, 2 * l3 + 1);
    let mut data = vec![0.0; d1 * d2 * d3];
    if !triangle(l1, l2, l3) {
        return CgTensor::from_dense(l1, l2, l3, data);
    }

    // complex[i1][i2] = <l1 m1 l2 m2 | l3 m1+m2>
    let (j1, j2, j3) = (l1 as i64, l2 as i64, l3 as i64);
    let mut complex = vec![0.0; d1 * d2];
    for m1 in -j1..=j1 {
        for m2 in -j2..=j2 {
            if (m1 + m2).abs() <= j3 {
                complex[((m1 + j1) * d2 as i64 + m2 + j2) as usize] =
                    condon_shortley(j1, m1, j2, m2, j3, m1 + m2);
            }
        }
    }

    let u1 = real_from_complex(l1);
    let u2 = real_from_complex(l2);
    let u3 = real_from_complex(l3);
    let mut re = vec![0.0; d1 * d2 * d3];
    let mut im = vec![0.0; d1 * d2 * d3];
    for a in 0..d1 {
        for b in 0..d2 {
            for c in 0..d3 {
                let mut acc = Complex64::zero();
                for &(i1, ua) in &u1[a] {
                    for &(i2, ub) in &u2[b] {
                        let big_m = (i1 as i64 - j1) + (i2 as i64 - j2);
                        if big_m.abs() > j3 {
                            continue;
                        }
                        let cg = complex[i1 * d2 + i2];
                        if cg == 0.0 {
                            continue;
                        }
                        for &(i3, uc) in &u3[c] {
                            if i3 as i64 - j3 == big_m {
                                acc += uc * ua.conj() * ub.conj() * cg;
                            }
                        }
                    }
                }
                let idx = (a * d2 + b) * d3 + c;
                re[idx] = acc.re;
                im[idx] = acc.im;
            }
        }
    }
    let norm_re: f64 = re.iter().map(|v| v * v).sum();
    let norm_im: f64 = im.iter().map(|v| v * v).sum();
    let kept = if norm_re >= norm_im { re } else { im };
    debug_assert!(norm_re.min(norm_im) < 1e-20 * norm_re.max(norm_im));

    let sign = kept
        .iter()
        .find(|v| v.abs() > SIGN_THRESHOLD)
        .map_or(1.0, |v| v.signum());
    for (dst, v) in data.iter_mut().zip(kept) {
        *dst = if v.abs() > SIGN_THRESHOLD { sign * v } else { 0.0 };
    }
    CgTensor::from_dense(l1, l2, l3, data)
}

/// Unitary change of basis from complex (Condon-Shortley) to real harmonics,
/// one sparse row per real component: `real_a = Σ_m U[a][m] complex_m`.
fn real_from_complex(l: usize) -> Vec<Vec<(usize, Complex64)>> {
    let li = l as i64;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut rows = vec![Vec::new(); 2 * l + 1];
    rows[l].push((l, Complex64::one()));
    for m in 1..=li {
        let phase = if m % 2 == 0 { 1.0 } else { -1.0 };
        let (pos, neg) = ((li + m) as usize, (li - m) as usize);
        // cos(mφ) component
        rows[pos].push((pos, Complex64::new(phase * s, 0.0)));
        rows[pos].push((neg, Complex64::new(s, 0.0)));
        // sin(mφ) component
        rows[neg].push((pos, Complex64::new(0.0, -phase * s)));
        rows[neg].push((neg, Complex64::new(0.0, s)));
    }
    rows
}

fn factorials() -> &'static [BigInt] {
    static TABLE: OnceLock<Vec<BigInt>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = vec![BigInt::one()];
        for k in 1..=(3 * MAX_CG_DEGREE + 2) {
            let next = &t[k - 1] * BigInt::from(k);
            t.push(next);
        }
        t
    })
}

/// `<j1 m1 j2 m2 | j m>` in the standard complex basis, evaluated exactly
/// with the Racah formula and rounded once at the end.
fn condon_shortley(j1: i64, m1: i64, j2: i64, m2: i64, j: i64, m: i64) -> f64 {
    if m1 + m2 != m || m1.abs() > j1 || m2.abs() > j2 || m.abs() > j {
        return 0.0;
    }
    if j < (j1 - j2).abs() || j > j1 + j2 {
        return 0.0;
    }
    let f = factorials();
    let fact = |n: i64| -> &BigInt { &f[n as usize] };

    let k_min = 0.max(j2 - j - m1).max(j1 - j + m2);
    let k_max = (j1 + j2 - j).min(j1 - m1).min(j2 + m2);
    let mut sum = BigRational::zero();
    for k in k_min..=k_max {
        let den = fact(k)
            * fact(j1 + j2 - j - k)
            * fact(j1 - m1 - k)
            * fact(j2 + m2 - k)
            * fact(j - j2 + m1 + k)
            * fact(j - j1 - m2 + k);
        let term = BigRational::new(BigInt::one(), den);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    if sum.is_zero() {
        return 0.0;
    }
    let num = BigInt::from(2 * j + 1)
        * fact(j + j1 - j2)
        * fact(j - j1 + j2)
        * fact(j1 + j2 - j)
        * fact(j1 + m1)
        * fact(j1 - m1)
        * fact(j2 + m2)
        * fact(j2 - m2)
        * fact(j + m)
        * fact(j - m);
    let prefactor = BigRational::new(num, fact(j1 + j2 + j + 1).clone());
    let squared = &sum * &sum * prefactor;
    let magnitude = squared.to_f64().unwrap_or(f64::NAN).sqrt();
    if sum.is_negative() {
        -magnitude
    } else {
        magnitude
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_complex_values() {
        // <1 1 1 -1 | 0 0> = 1/√3
        let v = condon_shortley(1, 1, 1, -1, 0, 0);
        assert!((v - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        // <1 0 1 0 | 2 0> = √(2/3)
        let v = condon_shortley(1, 0, 1, 0, 2, 0);
        assert!((v - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        // <1 1 1 0 | 1 1> = 1/√2
        let v = condon_shortley(1, 1, 1, 0, 1, 1);
        assert!((v - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        // <1/2-free check: <2 2 1 -1 | 2 1> = -1/√3 ... (sign convention)
        let v = condon_shortley(2, 2, 1, -1, 2, 1);
        assert!((v.abs() - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn triangle_violations_are_zero() {
        let c = clebsch_gordan(1, 1, 3).unwrap();
        assert!(c.is_zero());
        assert!(c.as_slice().iter().all(|v| *v == 0.0));
        assert!(clebsch_gordan(0, 3, 2).unwrap().is_zero());
    }

    #[test]
    fn scalar_leg_is_identity() {
        for l in 0..=6 {
            let c = clebsch_gordan(0, l, l).unwrap();
            for i2 in 0..2 * l + 1 {
                for i3 in 0..2 * l + 1 {
                    let expected = if i2 == i3 { 1.0 } else { 0.0 };
                    assert!((c.get(0, i2, i3) - expected).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn one_one_one_is_levi_civita() {
        let c = clebsch_gordan(1, 1, 1).unwrap();
        let scale = c.get(0, 1, 2);
        assert!(scale.abs() > 0.1);
        // degree-1 components are (x, y, z); C[a][b][c] ∝ ε_{cab}
        let eps = |a: usize, b: usize, c: usize| -> f64 {
            match (a, b, c) {
                (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
                (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
                _ => 0.0,
            }
        };
        for a in 0..3 {
            for b in 0..3 {
                for k in 0..3 {
                    assert!((c.get(a, b, k) - scale * eps(a, b, k)).abs() < 1e-14);
                    assert!((c.get(a, b, k) + c.get(b, a, k)).abs() < 1e-14);
                }
            }
        }
        assert!((scale.abs() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-14);
    }

    #[test]
    fn columns_are_orthonormal() {
        for l1 in 0usize..=4 {
            for l2 in 0..=4 {
                for l3 in l1.abs_diff(l2)..=(l1 + l2) {
                    let c = clebsch_gordan(l1, l2, l3).unwrap();
                    let (d1, d2, d3) = (2 * l1 + 1, 2 * l2 + 1, 2 * l3 + 1);
                    for p in 0..d3 {
                        for q in 0..d3 {
                            let mut s = 0.0;
                            for a in 0..d1 {
                                for b in 0..d2 {
                                    s += c.get(a, b, p) * c.get(a, b, q);
                                }
                            }
                            let expected = if p == q { 1.0 } else { 0.0 };
                            assert!((s - expected).abs() < 1e-13, "({l1},{l2},{l3})");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn first_nonzero_is_positive() {
        for (l1, l2, l3) in [(1, 1, 1), (2, 1, 2), (3, 2, 4), (4, 4, 3)] {
            let c = clebsch_gordan(l1, l2, l3).unwrap();
            let first = c.as_slice().iter().find(|v| v.abs() > 1e-12).unwrap();
            assert!(*first > 0.0);
        }
    }

    #[test]
    fn rejects_out_of_range_degrees() {
        assert!(clebsch_gordan(21, 0, 21).is_err());
    }

    #[test]
    fn corruption_changes_the_tensor() {
        let c = clebsch_gordan(2, 1, 2).unwrap();
        assert_ne!(*c, c.corrupted());
    }
}
