use nalgebra::DMatrix;

use super::grid::{s2_activation_map, S2Grid};
use crate::error::{argument, Result};
use crate::irreps::IrrepsFeature;
use crate::nn::{sigmoid, silu};

/// Gate activation. Degree 0 of `x` goes through SiLU; channel `c` of degree
/// `L ≥ 1` is multiplied by `sigmoid(gates[(L-1)·C + c])`.
pub fn gate_activation(x: &IrrepsFeature, gates: &[f64]) -> Result<IrrepsFeature> {
    let c = x.channels();
    if gates.len() != x.l_max() * c {
        return Err(argument(format!(
            "gate activation needs {} gate scalars for L_max {} and {c} channels, got {}",
            x.l_max() * c,
            x.l_max(),
            gates.len()
        )));
    }
    let mut out = x.clone();
    for v in out.scalars_mut() {
        *v = silu(*v);
    }
    for l in 1..=x.l_max() {
        let g: Vec<f64> = gates[(l - 1) * c..l * c].iter().map(|v| sigmoid(*v)).collect();
        let mut block = out.degree_mut(l);
        for mut col in block.column_iter_mut() {
            for (v, s) in col.iter_mut().zip(&g) {
                *v *= s;
            }
        }
    }
    Ok(out)
}

/// Separable S² activation with a pointwise `F`.
///
/// `scalars` (one per channel) only go through SiLU and become degree 0 of
/// the output. The whole of `x`, its own degree 0 included, is sampled on the
/// grid, transformed by `F` and projected back; of that result only degrees
/// `> 0` are kept.
pub fn separable_s2_activation(
    scalars: &[f64],
    x: &IrrepsFeature,
    grid: &S2Grid,
    f: impl Fn(f64) -> f64,
) -> Result<IrrepsFeature> {
    separable_s2_activation_map(scalars, x, grid, |mut s| {
        s.apply(|v| *v = f(*v));
        Ok(s)
    })
}

/// Separable S² activation where `F` acts on the `C × P` sample matrix and
/// may mix channels at each point (it must keep the channel count).
pub fn separable_s2_activation_map(
    scalars: &[f64],
    x: &IrrepsFeature,
    grid: &S2Grid,
    f: impl FnOnce(DMatrix<f64>) -> Result<DMatrix<f64>>,
) -> Result<IrrepsFeature> {
    if scalars.len() != x.channels() {
        return Err(argument(format!(
            "separable S² activation got {} SiLU scalars for {} channels",
            scalars.len(),
            x.channels()
        )));
    }
    let mut out = s2_activation_map(x, grid, f)?;
    if out.channels() != x.channels() {
        return Err(argument(format!(
            "grid function changed the channel count from {} to {}",
            x.channels(),
            out.channels()
        )));
    }
    for (o, s) in out.scalars_mut().iter_mut().zip(scalars) {
        *o = silu(*s);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::irreps::IrrepsLayout;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn saturated_gates_pass_higher_degrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = IrrepsFeature::random(IrrepsLayout::new(3, 4), &mut rng);
        let y = gate_activation(&x, &[40.0; 12]).unwrap();
        for l in 1..=3 {
            assert!((y.degree(l) - x.degree(l)).amax() < 1e-12);
        }
        for (a, b) in y.scalars().iter().zip(x.scalars()) {
            assert_eq!(*a, silu(*b));
        }
    }

    #[test]
    fn zero_higher_degrees_stay_zero() {
        let mut x = IrrepsFeature::zeros(IrrepsLayout::new(2, 3));
        x.scalars_mut().copy_from_slice(&[1.0, -1.0, 0.5]);
        let y = gate_activation(&x, &[0.3; 6]).unwrap();
        for l in 1..=2 {
            assert_eq!(y.degree(l).amax(), 0.0);
        }
    }

    #[test]
    fn gate_needs_one_scalar_per_higher_channel() {
        let x = IrrepsFeature::zeros(IrrepsLayout::new(2, 3));
        assert!(gate_activation(&x, &[0.0; 5]).is_err());
    }

    #[test]
    fn constant_sphere_input_has_no_higher_output() {
        let grid = S2Grid::square(3, 10).unwrap();
        let mut x = IrrepsFeature::zeros(IrrepsLayout::new(3, 2));
        x.scalars_mut().copy_from_slice(&[0.7, -1.3]);
        let y = separable_s2_activation(&[0.1, 0.2], &x, &grid, silu).unwrap();
        for l in 1..=3 {
            assert!(y.degree(l).amax() < 1e-14);
        }
        assert_eq!(y.scalars(), &[silu(0.1), silu(0.2)]);
    }

    #[test]
    fn identity_grid_function_keeps_higher_degrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let grid = S2Grid::square(4, 10).unwrap();
        let x = IrrepsFeature::random(IrrepsLayout::new(4, 3), &mut rng);
        let y = separable_s2_activation(&[0.0; 3], &x, &grid, |v| v).unwrap();
        for l in 1..=4 {
            assert!((y.degree(l) - x.degree(l)).amax() < 1e-12);
        }
    }

    #[test]
    fn separable_rejects_partition_mismatch() {
        let grid = S2Grid::square(1, 4).unwrap();
        let x = IrrepsFeature::zeros(IrrepsLayout::new(1, 3));
        assert!(separable_s2_activation(&[0.0; 2], &x, &grid, silu).is_err());
    }
}
