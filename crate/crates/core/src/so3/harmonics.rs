//! Real spherical harmonics with `y` as the polar axis.
//!
//! For a unit vector `(x, y, z)` write `cos θ = y` and `sin θ e^{iφ} = z + i x`.
//! The basis of degree `L` is ordered `m = -L..=L` and uses Schmidt
//! semi-normalisation without the Condon-Shortley phase:
//!
//! ```text
//! Y_0     = P_L(cos θ)
//! Y_{+m}  = sqrt(2 (L-m)!/(L+m)!) P_L^m(cos θ) cos(mφ)
//! Y_{-m}  = sqrt(2 (L-m)!/(L+m)!) P_L^m(cos θ) sin(mφ)
//! ```
//!
//! With this choice every degree-`L` vector has unit Euclidean norm on the
//! sphere, `Y^{(L)}(ŷ) = e_{m=0}` exactly, and `Y^{(1)}(r̂) = (x, y, z)`, so the
//! degree-1 Wigner block is the Cartesian rotation matrix itself.

use nalgebra::Vector3;

use super::rotation::check_unit;
use crate::error::Result;

/// Spherical harmonics of one direction for all degrees `0..=l_max`, stored
/// degree-major (`index = L² + L + m`).
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalSample {
    l_max: usize,
    values: Vec<f64>,
}

impl SphericalSample {
    pub fn l_max(&self) -> usize {
        self.l_max
    }

    /// The `(2L+1)` components of degree `l`.
    pub fn degree(&self, l: usize) -> &[f64] {
        &self.values[l * l..(l + 1) * (l + 1)]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, l: usize, m: i64) -> f64 {
        self.values[l * l + (m + l as i64) as usize]
    }
}

/// Evaluate `Y^{(L)}(direction)` for every `L ≤ l_max`.
pub fn spherical_harmonics(direction: &Vector3<f64>, l_max: usize) -> Result<SphericalSample> {
    check_unit(direction)?;
    let d = direction.normalize();
    let mut values = vec![0.0; (l_max + 1) * (l_max + 1)];
    fill_harmonics(d.x, d.y, d.z, l_max, &mut values);
    Ok(SphericalSample { l_max, values })
}

/// Evaluate into `out` (length `(l_max+1)²`) for an already normalised direction.
pub(crate) fn fill_harmonics(x: f64, y: f64, z: f64, l_max: usize, out: &mut [f64]) {
    debug_assert_eq!(out.len(), (l_max + 1) * (l_max + 1));
    // powers (z + i x)^m = cos_m + i sin_m (times sin^m θ)
    let mut cos_m = vec![0.0; l_max + 1];
    let mut sin_m = vec![0.0; l_max + 1];
    cos_m[0] = 1.0;
    for m in 1..=l_max {
        cos_m[m] = cos_m[m - 1] * z - sin_m[m - 1] * x;
        sin_m[m] = cos_m[m - 1] * x + sin_m[m - 1] * z;
    }

    // q[l] = d^m P_l / du^m at u = y, for the current m
    let mut q = vec![0.0; l_max + 1];
    let mut double_factorial = 1.0; // (2m-1)!!
    for m in 0..=l_max {
        if m > 0 {
            double_factorial *= (2 * m - 1) as f64;
        }
        q[m] = double_factorial;
        if m < l_max {
            q[m + 1] = (2 * m + 1) as f64 * y * q[m];
        }
        for l in (m + 2)..=l_max {
            q[l] = ((2 * l - 1) as f64 * y * q[l - 1] - (l + m - 1) as f64 * q[l - 2])
                / (l - m) as f64;
        }
        for l in m..=l_max {
            let base = l * l + l;
            if m == 0 {
                out[base] = q[l];
            } else {
                // sqrt(2 (l-m)! / (l+m)!)
                let mut ratio = 1.0;
                for k in (l - m + 1)..=(l + m) {
                    ratio /= k as f64;
                }
                let norm = (2.0 * ratio).sqrt() * q[l];
                out[base + m] = norm * cos_m[m];
                out[base - m] = norm * sin_m[m];
            }
        }
    }
}
