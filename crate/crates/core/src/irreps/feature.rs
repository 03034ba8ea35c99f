use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{shape, Result};
use crate::so3::WignerBlock;

/// Degrees `0..=l_max`, each carrying the same number of channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IrrepsLayout {
    l_max: usize,
    channels: usize,
}

impl IrrepsLayout {
    pub fn new(l_max: usize, channels: usize) -> IrrepsLayout {
        IrrepsLayout { l_max, channels }
    }

    /// A layout with only degree 0.
    pub fn scalars(channels: usize) -> IrrepsLayout {
        IrrepsLayout::new(0, channels)
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Number of `(L, m)` components, `(l_max+1)²`.
    pub fn components(&self) -> usize {
        (self.l_max + 1) * (self.l_max + 1)
    }

    /// Flat length, `(l_max+1)² · C`.
    pub fn len(&self) -> usize {
        self.components() * self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Offset of the first value of degree `l`.
    pub fn degree_offset(&self, l: usize) -> usize {
        l * l * self.channels
    }

    /// Flat index of `(l, m, channel)`: `(L² + L + m)·C + channel`.
    pub fn index(&self, l: usize, m: i64, channel: usize) -> usize {
        debug_assert!(l <= self.l_max && m.unsigned_abs() as usize <= l);
        debug_assert!(channel < self.channels);
        ((l * l + l) as i64 + m) as usize * self.channels + channel
    }

    pub fn with_channels(&self, channels: usize) -> IrrepsLayout {
        IrrepsLayout::new(self.l_max, channels)
    }

    pub fn with_l_max(&self, l_max: usize) -> IrrepsLayout {
        IrrepsLayout::new(l_max, self.channels)
    }
}

/// Irreps feature with flat storage ordered by degree, then order `m = -L..=L`,
/// then channel (fastest).
///
/// Degree `L` is therefore one contiguous column-major `C × (2L+1)` block, and
/// a rotation acts on it as `X ↦ X D⁽ᴸ⁾ᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct IrrepsFeature {
    layout: IrrepsLayout,
    values: Vec<f64>,
}

impl IrrepsFeature {
    pub fn zeros(layout: IrrepsLayout) -> IrrepsFeature {
        IrrepsFeature {
            layout,
            values: vec![0.0; layout.len()],
        }
    }

    pub fn from_vec(layout: IrrepsLayout, values: Vec<f64>) -> Result<IrrepsFeature> {
        if values.len() != layout.len() {
            return Err(shape(format!(
                "layout (L_max {}, C {}) needs {} values, got {}",
                layout.l_max(),
                layout.channels(),
                layout.len(),
                values.len()
            )));
        }
        Ok(IrrepsFeature { layout, values })
    }

    /// Scalar feature holding `values` as degree-0 channels.
    pub fn from_scalars(values: &[f64]) -> IrrepsFeature {
        IrrepsFeature {
            layout: IrrepsLayout::scalars(values.len()),
            values: values.to_vec(),
        }
    }

    /// Standard-normal entries.
    pub fn random<R: Rng + ?Sized>(layout: IrrepsLayout, rng: &mut R) -> IrrepsFeature {
        let values = (0..layout.len()).map(|_| rng.sample(StandardNormal)).collect();
        IrrepsFeature { layout, values }
    }

    pub fn layout(&self) -> IrrepsLayout {
        self.layout
    }

    pub fn l_max(&self) -> usize {
        self.layout.l_max
    }

    pub fn channels(&self) -> usize {
        self.layout.channels
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, l: usize, m: i64, channel: usize) -> f64 {
        self.values[self.layout.index(l, m, channel)]
    }

    pub fn set(&mut self, l: usize, m: i64, channel: usize, value: f64) {
        let i = self.layout.index(l, m, channel);
        self.values[i] = value;
    }

    /// Degree-0 channels.
    pub fn scalars(&self) -> &[f64] {
        &self.values[..self.layout.channels]
    }

    pub fn scalars_mut(&mut self) -> &mut [f64] {
        let c = self.layout.channels;
        &mut self.values[..c]
    }

    fn degree_range(&self, l: usize) -> std::ops::Range<usize> {
        let c = self.layout.channels;
        l * l * c..(l + 1) * (l + 1) * c
    }

    /// Degree `l` as a `C × (2L+1)` matrix view.
    pub fn degree(&self, l: usize) -> DMatrixView<'_, f64> {
        let c = self.layout.channels;
        DMatrixView::from_slice(&self.values[self.degree_range(l)], c, 2 * l + 1)
    }

    pub fn degree_mut(&mut self, l: usize) -> DMatrixViewMut<'_, f64> {
        let c = self.layout.channels;
        let range = self.degree_range(l);
        DMatrixViewMut::from_slice(&mut self.values[range], c, 2 * l + 1)
    }

    /// Apply `D(R)` degree by degree. `blocks[l]` must be the degree-`l` block.
    pub fn rotate(&self, blocks: &[WignerBlock]) -> IrrepsFeature {
        self.rotate_impl(blocks, false)
    }

    /// Apply `D(R)⁻¹ = D(R)ᵀ` degree by degree.
    pub fn rotate_inverse(&self, blocks: &[WignerBlock]) -> IrrepsFeature {
        self.rotate_impl(blocks, true)
    }

    fn rotate_impl(&self, blocks: &[WignerBlock], inverse: bool) -> IrrepsFeature {
        assert!(
            blocks.len() > self.l_max(),
            "need Wigner blocks up to degree {}",
            self.l_max()
        );
        let mut out = IrrepsFeature::zeros(self.layout);
        out.values[..self.layout.channels].copy_from_slice(self.scalars());
        for l in 1..=self.l_max() {
            let d = blocks[l].matrix();
            let x = self.degree(l);
            let mut y = out.degree_mut(l);
            if inverse {
                y.gemm(1.0, &x, d, 0.0);
            } else {
                y.gemm(1.0, &x, &d.transpose(), 0.0);
            }
        }
        out
    }

    /// Copy of the first `l_max + 1` degrees (padding with zeros when growing).
    pub fn resized(&self, l_max: usize) -> IrrepsFeature {
        let layout = self.layout.with_l_max(l_max);
        let mut out = IrrepsFeature::zeros(layout);
        let n = out.values.len().min(self.values.len());
        out.values[..n].copy_from_slice(&self.values[..n]);
        out
    }

    /// Stack the channels of `self` and `other` (same `L_max`) as
    /// `[self channels, other channels]` in every component.
    pub fn concat_channels(&self, other: &IrrepsFeature) -> Result<IrrepsFeature> {
        if self.l_max() != other.l_max() {
            return Err(shape(format!(
                "cannot concatenate L_max {} with L_max {}",
                self.l_max(),
                other.l_max()
            )));
        }
        let (ca, cb) = (self.channels(), other.channels());
        let layout = self.layout.with_channels(ca + cb);
        let mut values = Vec::with_capacity(layout.len());
        for k in 0..self.layout.components() {
            values.extend_from_slice(&self.values[k * ca..(k + 1) * ca]);
            values.extend_from_slice(&other.values[k * cb..(k + 1) * cb]);
        }
        Ok(IrrepsFeature { layout, values })
    }

    /// Channels `start..start + count` of every component.
    pub fn channel_slice(&self, start: usize, count: usize) -> IrrepsFeature {
        assert!(start + count <= self.channels());
        let c = self.channels();
        let layout = self.layout.with_channels(count);
        let mut values = Vec::with_capacity(layout.len());
        for k in 0..self.layout.components() {
            values.extend_from_slice(&self.values[k * c + start..k * c + start + count]);
        }
        IrrepsFeature { layout, values }
    }

    /// Write `part` into channels `start..` of every component.
    pub fn set_channel_slice(&mut self, start: usize, part: &IrrepsFeature) {
        assert_eq!(part.l_max(), self.l_max());
        let (c, p) = (self.channels(), part.channels());
        assert!(start + p <= c);
        for k in 0..self.layout.components() {
            self.values[k * c + start..k * c + start + p]
                .copy_from_slice(&part.values[k * p..(k + 1) * p]);
        }
    }

    pub fn add_assign(&mut self, other: &IrrepsFeature) {
        assert_eq!(self.layout, other.layout, "layout mismatch in addition");
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
    }

    /// `self += s · other`.
    pub fn add_scaled(&mut self, s: f64, other: &IrrepsFeature) {
        assert_eq!(self.layout, other.layout, "layout mismatch in addition");
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.values {
            *v *= s;
        }
    }

    /// Multiply degree `l`, channel `c` by `weights[l * C + c]`.
    pub fn scale_per_degree_channel(&mut self, weights: &[f64]) {
        let c = self.channels();
        assert_eq!(weights.len(), (self.l_max() + 1) * c);
        for l in 0..=self.l_max() {
            let w = &weights[l * c..(l + 1) * c];
            let mut block = self.degree_mut(l);
            for mut col in block.column_iter_mut() {
                for (v, s) in col.iter_mut().zip(w) {
                    *v *= s;
                }
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &IrrepsFeature) -> f64 {
        assert_eq!(self.layout, other.layout, "layout mismatch in comparison");
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Degree `l` copied into an owned matrix.
    pub fn degree_matrix(&self, l: usize) -> DMatrix<f64> {
        self.degree(l).into_owned()
    }
}
