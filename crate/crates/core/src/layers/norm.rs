use nalgebra::DVector;

use crate::error::{shape, Result};
use crate::irreps::IrrepsFeature;
use crate::nn::{visit_vector, ParamRole, ParamVisitor, Params, NORM_EPS};

/// Scales `γ⁽ᴸ⁾` for every degree and the degree-0 shift `β⁽⁰⁾`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormParams {
    pub gamma: Vec<DVector<f64>>,
    pub beta: DVector<f64>,
}

impl NormParams {
    /// Unit scales, zero shift.
    pub fn new(l_max: usize, channels: usize) -> NormParams {
        NormParams {
            gamma: vec![DVector::from_element(channels, 1.0); l_max + 1],
            beta: DVector::zeros(channels),
        }
    }

    pub fn l_max(&self) -> usize {
        self.gamma.len() - 1
    }

    pub fn channels(&self) -> usize {
        self.beta.len()
    }

    fn check(&self, x: &IrrepsFeature) -> Result<()> {
        if x.l_max() != self.l_max() || x.channels() != self.channels() {
            return Err(shape(format!(
                "norm parameters for (L_max {}, C {}) applied to (L_max {}, C {})",
                self.l_max(),
                self.channels(),
                x.l_max(),
                x.channels()
            )));
        }
        Ok(())
    }
}

impl Params for NormParams {
    fn visit_params(&mut self, prefix: &str, f: &mut ParamVisitor<'_>) {
        for (l, g) in self.gamma.iter_mut().enumerate() {
            visit_vector(prefix, &format!("gamma{l}"), ParamRole::Gain, g, f);
        }
        visit_vector(prefix, "beta", ParamRole::Bias, &mut self.beta, f);
    }
}

/// `σ⁽ᴸ⁾ = sqrt( (1/C) Σ_c (1/(2L+1)) Σ_m (x⁽ᴸ⁾_{m,c})² )`.
pub fn degree_rms(x: &IrrepsFeature, l: usize) -> f64 {
    let block = x.degree(l);
    let n = (x.channels() * (2 * l + 1)) as f64;
    (block.norm_squared() / n).sqrt()
}

fn normalize_scalars(x: &IrrepsFeature, params: &NormParams, out: &mut IrrepsFeature) {
    let s = x.scalars();
    let n = s.len() as f64;
    let mean = s.iter().sum::<f64>() / n;
    let var = s.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sigma = var.sqrt().max(NORM_EPS);
    for (c, o) in out.scalars_mut().iter_mut().enumerate() {
        *o = params.gamma[0][c] * (s[c] - mean) / sigma + params.beta[c];
    }
}

fn scale_degree(x: &IrrepsFeature, l: usize, sigma: f64, gamma: &DVector<f64>, out: &mut IrrepsFeature) {
    let src = x.degree(l);
    let mut dst = out.degree_mut(l);
    for j in 0..src.ncols() {
        for c in 0..src.nrows() {
            dst[(c, j)] = gamma[c] * src[(c, j)] / sigma;
        }
    }
}

/// Equivariant layer norm: degree 0 as a standard layer norm, every degree
/// `L > 0` divided by its own `σ⁽ᴸ⁾`.
pub fn equivariant_layer_norm(x: &IrrepsFeature, params: &NormParams) -> Result<IrrepsFeature> {
    params.check(x)?;
    let mut out = IrrepsFeature::zeros(x.layout());
    normalize_scalars(x, params, &mut out);
    for l in 1..=x.l_max() {
        let sigma = degree_rms(x, l).max(NORM_EPS);
        scale_degree(x, l, sigma, &params.gamma[l], &mut out);
    }
    Ok(out)
}

/// `σ⁽ᴸ˃⁰⁾ = sqrt( (1/L_max) Σ_{L≥1} (σ⁽ᴸ⁾)² )`; zero when `L_max = 0`.
pub fn higher_degree_rms(x: &IrrepsFeature) -> f64 {
    if x.l_max() == 0 {
        return 0.0;
    }
    let sum: f64 = (1..=x.l_max()).map(|l| degree_rms(x, l).powi(2)).sum();
    (sum / x.l_max() as f64).sqrt()
}

/// Separable layer norm: degree 0 as a standard layer norm, all degrees
/// `L > 0` divided by the shared `σ⁽ᴸ˃⁰⁾`.
///
/// Standard deviations and RMS values are floored at [`NORM_EPS`] before
/// dividing, so all-zero inputs map to `β` and zero.
pub fn separable_layer_norm(x: &IrrepsFeature, params: &NormParams) -> Result<IrrepsFeature> {
    params.check(x)?;
    let mut out = IrrepsFeature::zeros(x.layout());
    normalize_scalars(x, params, &mut out);
    let sigma = higher_degree_rms(x).max(NORM_EPS);
    for l in 1..=x.l_max() {
        scale_degree(x, l, sigma, &params.gamma[l], &mut out);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::irreps::IrrepsLayout;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scale_degree_in_place(x: &mut IrrepsFeature, l: usize, s: f64) {
        x.degree_mut(l).iter_mut().for_each(|v| *v *= s);
    }

    #[test]
    fn unit_rms_input_is_unchanged_by_equivariant_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut x = IrrepsFeature::random(IrrepsLayout::new(3, 5), &mut rng);
        for l in 1..=3 {
            let r = degree_rms(&x, l);
            scale_degree_in_place(&mut x, l, 1.0 / r);
        }
        let y = equivariant_layer_norm(&x, &NormParams::new(3, 5)).unwrap();
        for l in 1..=3 {
            assert!((y.degree(l) - x.degree(l)).amax() < 1e-14);
        }
    }

    #[test]
    fn per_degree_scale_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = IrrepsFeature::random(IrrepsLayout::new(3, 4), &mut rng);
        let mut x7 = x.clone();
        scale_degree_in_place(&mut x7, 2, 7.0);
        let p = NormParams::new(3, 4);
        let a = equivariant_layer_norm(&x, &p).unwrap();
        let b = equivariant_layer_norm(&x7, &p).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-14);
    }

    #[test]
    fn constant_scalars_map_to_beta() {
        let mut x = IrrepsFeature::zeros(IrrepsLayout::new(1, 3));
        x.scalars_mut().fill(4.2);
        let mut p = NormParams::new(1, 3);
        p.beta = DVector::from_vec(vec![0.5, -1.0, 2.0]);
        let y = separable_layer_norm(&x, &p).unwrap();
        assert_eq!(y.scalars(), &[0.5, -1.0, 2.0]);
    }

    #[test]
    fn separable_norm_couples_degrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = IrrepsFeature::random(IrrepsLayout::new(3, 4), &mut rng);
        let p = NormParams::new(3, 4);
        let base = separable_layer_norm(&x, &p).unwrap();

        let mut all = x.clone();
        for l in 1..=3 {
            scale_degree_in_place(&mut all, l, 7.0);
        }
        let joint = separable_layer_norm(&all, &p).unwrap();
        assert!(joint.max_abs_diff(&base) < 1e-14);

        let mut one = x.clone();
        scale_degree_in_place(&mut one, 2, 7.0);
        let single = separable_layer_norm(&one, &p).unwrap();
        assert!((single.degree(1) - base.degree(1)).amax() > 1e-3);
        let eq_base = equivariant_layer_norm(&x, &p).unwrap();
        let eq_single = equivariant_layer_norm(&one, &p).unwrap();
        assert!((eq_single.degree(1) - eq_base.degree(1)).amax() < 1e-14);
    }

    #[test]
    fn all_zero_input_is_finite() {
        let x = IrrepsFeature::zeros(IrrepsLayout::new(2, 3));
        let y = separable_layer_norm(&x, &NormParams::new(2, 3)).unwrap();
        assert!(y.is_finite());
        assert_eq!(y.max_abs(), 0.0);
    }
}
