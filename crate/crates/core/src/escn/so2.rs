use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{shape, Result};
use crate::irreps::{IrrepsFeature, IrrepsLayout, PathWeights};
use crate::nn::{visit_matrix, ParamRole, ParamVisitor, Params};
use crate::so3::clebsch_gordan;

/// Weights of one order `m`.
///
/// Rows are indexed `(L_o - m)·C_out + c_out` and columns `(L_i - m)·C_in + c_in`,
/// so each `(L_i, L_o)` pair owns a `C_out × C_in` sub-block. For `m > 0` the
/// pair `(re, im)` acts on `(x_m, x_{-m})` like a complex multiplication:
///
/// ```text
/// y_m  = re · x_m - im · x_{-m}
/// y_-m = im · x_m + re · x_{-m}
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct So2Block {
    pub re: DMatrix<f64>,
    pub im: Option<DMatrix<f64>>,
}

/// SO(2) linear layer acting on features expressed in the edge-aligned frame.
///
/// Only orders `|m| ≤ M_max` are produced. The `m = 0` block may carry
/// `extra_scalars` additional output rows, returned separately as plain
/// scalars by [`so2_linear_split`].
#[derive(Debug, Clone, PartialEq)]
pub struct So2LinearWeights {
    l_in_max: usize,
    l_out_max: usize,
    m_max: usize,
    c_in: usize,
    c_out: usize,
    extra_scalars: usize,
    blocks: Vec<So2Block>,
}

impl So2LinearWeights {
    pub fn zeros(
        l_in_max: usize,
        l_out_max: usize,
        m_max: usize,
        c_in: usize,
        c_out: usize,
    ) -> So2LinearWeights {
        So2LinearWeights::with_extra_scalars(l_in_max, l_out_max, m_max, c_in, c_out, 0)
    }

    pub fn with_extra_scalars(
        l_in_max: usize,
        l_out_max: usize,
        m_max: usize,
        c_in: usize,
        c_out: usize,
        extra_scalars: usize,
    ) -> So2LinearWeights {
        let m_max = m_max.min(l_in_max).min(l_out_max);
        let blocks = (0..=m_max)
            .map(|m| {
                let rows = (l_out_max - m + 1) * c_out + if m == 0 { extra_scalars } else { 0 };
                let cols = (l_in_max - m + 1) * c_in;
                So2Block {
                    re: DMatrix::zeros(rows, cols),
                    im: (m > 0).then(|| DMatrix::zeros(rows, cols)),
                }
            })
            .collect();
        So2LinearWeights {
            l_in_max,
            l_out_max,
            m_max,
            c_in,
            c_out,
            extra_scalars,
            blocks,
        }
    }

    /// Identity on every retained order (`L_i = L_o`, `C_in = C_out`).
    pub fn identity(l_max: usize, m_max: usize, channels: usize) -> So2LinearWeights {
        let mut w = So2LinearWeights::zeros(l_max, l_max, m_max, channels, channels);
        for b in &mut w.blocks {
            b.re.fill_with_identity();
        }
        w
    }

    /// Standard-normal entries in every block.
    pub fn random<R: Rng + ?Sized>(
        l_in_max: usize,
        l_out_max: usize,
        m_max: usize,
        c_in: usize,
        c_out: usize,
        rng: &mut R,
    ) -> So2LinearWeights {
        let mut w = So2LinearWeights::zeros(l_in_max, l_out_max, m_max, c_in, c_out);
        for b in &mut w.blocks {
            b.re.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
            if let Some(im) = &mut b.im {
                im.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
            }
        }
        w
    }

    pub fn l_in_max(&self) -> usize {
        self.l_in_max
    }

    pub fn l_out_max(&self) -> usize {
        self.l_out_max
    }

    /// Largest retained order (already clipped to both degree ranges).
    pub fn m_max(&self) -> usize {
        self.m_max
    }

    pub fn c_in(&self) -> usize {
        self.c_in
    }

    pub fn c_out(&self) -> usize {
        self.c_out
    }

    pub fn extra_scalars(&self) -> usize {
        self.extra_scalars
    }

    pub fn blocks(&self) -> &[So2Block] {
        &self.blocks
    }

    pub fn block_mut(&mut self, m: usize) -> &mut So2Block {
        &mut self.blocks[m]
    }

    /// Copy keeping only orders `m ≤ m_max`.
    pub fn truncated(&self, m_max: usize) -> So2LinearWeights {
        let mut w = self.clone();
        w.m_max = self.m_max.min(m_max);
        w.blocks.truncate(w.m_max + 1);
        w
    }
}

impl Params for So2LinearWeights {
    fn visit_params(&mut self, prefix: &str, f: &mut ParamVisitor<'_>) {
        for (m, b) in self.blocks.iter_mut().enumerate() {
            let fan_in = if m == 0 { b.re.ncols() } else { 2 * b.re.ncols() };
            let role = ParamRole::Weight { fan_in };
            visit_matrix(prefix, &format!("m{m}.re"), role, &mut b.re, f);
            if let Some(im) = &mut b.im {
                visit_matrix(prefix, &format!("m{m}.im"), role, im, f);
            }
        }
    }
}

fn gather(x: &IrrepsFeature, m: i64, l_lo: usize) -> DVector<f64> {
    let c = x.channels();
    let mut v = DVector::zeros((x.l_max() + 1 - l_lo) * c);
    for l in l_lo..=x.l_max() {
        let start = x.layout().index(l, m, 0);
        v.as_mut_slice()[(l - l_lo) * c..(l - l_lo + 1) * c]
            .copy_from_slice(&x.as_slice()[start..start + c]);
    }
    v
}

fn scatter(out: &mut IrrepsFeature, m: i64, l_lo: usize, y: &[f64]) {
    let c = out.channels();
    for l in l_lo..=out.l_max() {
        let start = out.layout().index(l, m, 0);
        out.as_mut_slice()[start..start + c].copy_from_slice(&y[(l - l_lo) * c..(l - l_lo + 1) * c]);
    }
}

/// SO(2) linear map of an edge-aligned feature. Components with `|m| > M_max`
/// are zero in the output.
pub fn so2_linear(x_aligned: &IrrepsFeature, weights: &So2LinearWeights) -> Result<IrrepsFeature> {
    Ok(so2_linear_split(x_aligned, weights)?.0)
}

/// [`so2_linear`] also returning the extra `m = 0` scalar outputs.
pub fn so2_linear_split(
    x_aligned: &IrrepsFeature,
    weights: &So2LinearWeights,
) -> Result<(IrrepsFeature, Vec<f64>)> {
    if x_aligned.l_max() != weights.l_in_max || x_aligned.channels() != weights.c_in {
        return Err(shape(format!(
            "feature (L_max {}, C {}) does not match SO(2) weights (L_max {}, C {})",
            x_aligned.l_max(),
            x_aligned.channels(),
            weights.l_in_max,
            weights.c_in
        )));
    }
    let mut out = IrrepsFeature::zeros(IrrepsLayout::new(weights.l_out_max, weights.c_out));
    let n_main = (weights.l_out_max + 1) * weights.c_out;

    let x0 = gather(x_aligned, 0, 0);
    let y0 = &weights.blocks[0].re * x0;
    scatter(&mut out, 0, 0, &y0.as_slice()[..n_main]);
    let extra = y0.as_slice()[n_main..].to_vec();

    for m in 1..=weights.m_max {
        let block = &weights.blocks[m];
        let im = block.im.as_ref().expect("imaginary part for m > 0");
        let mi = m as i64;
        let xp = gather(x_aligned, mi, m);
        let xn = gather(x_aligned, -mi, m);
        let yp = &block.re * &xp - im * &xn;
        let yn = im * &xp + &block.re * &xn;
        scatter(&mut out, mi, m, yp.as_slice());
        scatter(&mut out, -mi, m, yn.as_slice());
    }
    Ok((out, extra))
}

/// SO(2) weights equivalent to a tensor-product convolution with `weights`:
///
/// ```text
/// re^{(Li,Lo)}_m = Σ_Lf s(Lo) W_{Li,Lf,Lo} C[(Li, m), (Lf, 0), (Lo, m)]
/// im^{(Li,Lo)}_m = Σ_Lf s(Lo) W_{Li,Lf,Lo} C[(Li, m), (Lf, 0), (Lo, -m)]
/// ```
///
/// Used to check [`super::escn_convolution`] against
/// [`crate::irreps::so3_convolution`].
pub fn reparametrize_weights(weights: &PathWeights, m_max: usize) -> Result<So2LinearWeights> {
    let (c_in, c_out) = (weights.c_in(), weights.c_out());
    let mut out = So2LinearWeights::zeros(weights.l_in_max(), weights.l_out_max(), m_max, c_in, c_out);
    for (path, w) in weights.iter() {
        let cg = clebsch_gordan(path.l_in, path.l_filter, path.l_out)?;
        let s = weights.scale(path.l_out);
        let top = out.m_max.min(path.l_in).min(path.l_out);
        for m in 0..=top {
            let rows = (path.l_out - m) * c_out;
            let cols = (path.l_in - m) * c_in;
            let block = &mut out.blocks[m];
            let re = cg.get(path.l_in + m, path.l_filter, path.l_out + m);
            if re != 0.0 {
                let mut dst = block.re.view_mut((rows, cols), (c_out, c_in));
                dst += w * (s * re);
            }
            if let Some(im_block) = &mut block.im {
                let im = cg.get(path.l_in + m, path.l_filter, path.l_out - m);
                if im != 0.0 {
                    let mut dst = im_block.view_mut((rows, cols), (c_out, c_in));
                    dst += w * (s * im);
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::{wigner_d_all, Rotation};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn scalar_layout_is_plain_linear() {
        let mut w = So2LinearWeights::zeros(0, 0, 0, 2, 3);
        w.block_mut(0).re = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 0.0, -1.0, 0.5, 0.5]);
        let x = IrrepsFeature::from_scalars(&[2.0, 4.0]);
        let y = so2_linear(&x, &w).unwrap();
        assert_eq!(y.as_slice(), &[10.0, -4.0, 3.0]);
    }

    #[test]
    fn identity_truncates_high_orders() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = IrrepsFeature::random(IrrepsLayout::new(3, 2), &mut rng);
        let y = so2_linear(&x, &So2LinearWeights::identity(3, 1, 2)).unwrap();
        for l in 0..=3 {
            for m in -(l as i64)..=(l as i64) {
                for c in 0..2 {
                    let expected = if m.abs() <= 1 { x.get(l, m, c) } else { 0.0 };
                    assert_eq!(y.get(l, m, c), expected);
                }
            }
        }
    }

    #[test]
    fn commutes_with_rotations_about_y() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = So2LinearWeights::random(3, 2, 2, 2, 3, &mut rng);
        for _ in 0..5 {
            let x = IrrepsFeature::random(IrrepsLayout::new(3, 2), &mut rng);
            let g = Rotation::about_y(rng.random_range(0.0..std::f64::consts::TAU));
            let d = wigner_d_all(&g, 3).unwrap();
            let a = so2_linear(&x.rotate(&d), &w).unwrap();
            let b = so2_linear(&x, &w).unwrap().rotate(&d);
            assert!(a.max_abs_diff(&b) < 1e-10);
        }
    }

    #[test]
    fn extra_scalars_come_from_order_zero() {
        let mut w = So2LinearWeights::with_extra_scalars(1, 1, 1, 1, 1, 2);
        assert_eq!(w.blocks()[0].re.shape(), (4, 2));
        w.block_mut(0).re[(2, 0)] = 1.0;
        w.block_mut(0).re[(3, 1)] = -2.0;
        let mut x = IrrepsFeature::zeros(IrrepsLayout::new(1, 1));
        x.set(0, 0, 0, 3.0);
        x.set(1, 0, 0, 5.0);
        let (_, extra) = so2_linear_split(&x, &w).unwrap();
        assert_eq!(extra, vec![3.0, -10.0]);
    }

    #[test]
    fn zero_path_weights_give_zero_blocks() {
        let w = reparametrize_weights(&PathWeights::zeros(2, 4, 2, 2, 2), 2).unwrap();
        for b in w.blocks() {
            assert_eq!(b.re.amax(), 0.0);
            assert_eq!(b.im.as_ref().map_or(0.0, |m| m.amax()), 0.0);
        }
    }

    #[test]
    fn scalar_path_reparametrizes_to_its_weight() {
        let mut pw = PathWeights::zeros(0, 0, 0, 1, 1);
        pw.set(
            crate::irreps::Path { l_in: 0, l_filter: 0, l_out: 0 },
            DMatrix::from_element(1, 1, 2.5),
        )
        .unwrap();
        let w = reparametrize_weights(&pw, 0).unwrap();
        assert_eq!(w.blocks()[0].re[(0, 0)], 2.5);
    }

    #[test]
    fn rejects_layout_mismatch() {
        let w = So2LinearWeights::zeros(2, 2, 2, 3, 3);
        assert!(so2_linear(&IrrepsFeature::zeros(IrrepsLayout::new(2, 2)), &w).is_err());
        assert!(so2_linear(&IrrepsFeature::zeros(IrrepsLayout::new(1, 3)), &w).is_err());
    }
}
