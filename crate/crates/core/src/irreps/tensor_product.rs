use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;

use super::feature::{IrrepsFeature, IrrepsLayout};
use crate::error::{argument, shape, Error, Result};
use crate::so3::{clebsch_gordan, spherical_harmonics, triangle, CgTensor, SphericalSample};

/// Source of coupling tensors; normally [`clebsch_gordan`].
pub type CgLookup<'a> = dyn Fn(usize, usize, usize) -> Result<Arc<CgTensor>> + Sync + 'a;

/// Degrees of one tensor-product path: input, filter, output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Path {
    pub l_in: usize,
    pub l_filter: usize,
    pub l_out: usize,
}

/// Every triangle-valid path with degrees bounded by the three maxima, in
/// lexicographic `(l_in, l_filter, l_out)` order.
pub fn valid_paths(l_in_max: usize, l_filter_max: usize, l_out_max: usize) -> Vec<Path> {
    let mut paths = Vec::new();
    for l_in in 0..=l_in_max {
        for l_filter in 0..=l_filter_max {
            for l_out in 0..=l_out_max {
                if triangle(l_in, l_filter, l_out) {
                    paths.push(Path { l_in, l_filter, l_out });
                }
            }
        }
    }
    paths
}

/// Per-path normalisation `1 / sqrt(#paths into L_o)` for each output degree.
fn path_scales(paths: &[Path], l_out_max: usize) -> Vec<f64> {
    let mut counts = vec![0usize; l_out_max + 1];
    for p in paths {
        counts[p.l_out] += 1;
    }
    counts
        .into_iter()
        .map(|n| if n == 0 { 0.0 } else { 1.0 / (n as f64).sqrt() })
        .collect()
}

/// Learnable weights `w_{L_i, L_f, L_o}` of a tensor-product convolution, one
/// `C_out × C_in` matrix per triangle-valid path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathWeights {
    l_in_max: usize,
    l_filter_max: usize,
    l_out_max: usize,
    c_in: usize,
    c_out: usize,
    paths: Vec<Path>,
    weights: Vec<DMatrix<f64>>,
    scales: Vec<f64>,
}

impl PathWeights {
    pub fn zeros(
        l_in_max: usize,
        l_filter_max: usize,
        l_out_max: usize,
        c_in: usize,
        c_out: usize,
    ) -> PathWeights {
        let paths = valid_paths(l_in_max, l_filter_max, l_out_max);
        let weights = vec![DMatrix::zeros(c_out, c_in); paths.len()];
        let scales = path_scales(&paths, l_out_max);
        PathWeights {
            l_in_max,
            l_filter_max,
            l_out_max,
            c_in,
            c_out,
            paths,
            weights,
            scales,
        }
    }

    /// Standard-normal weights on every path.
    pub fn random<R: Rng + ?Sized>(
        l_in_max: usize,
        l_filter_max: usize,
        l_out_max: usize,
        c_in: usize,
        c_out: usize,
        rng: &mut R,
    ) -> PathWeights {
        let mut w = PathWeights::zeros(l_in_max, l_filter_max, l_out_max, c_in, c_out);
        for m in &mut w.weights {
            m.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        }
        w
    }

    pub fn l_in_max(&self) -> usize {
        self.l_in_max
    }

    pub fn l_filter_max(&self) -> usize {
        self.l_filter_max
    }

    pub fn l_out_max(&self) -> usize {
        self.l_out_max
    }

    pub fn c_in(&self) -> usize {
        self.c_in
    }

    pub fn c_out(&self) -> usize {
        self.c_out
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    /// Normalisation applied to every path ending in `l_out`.
    pub fn scale(&self, l_out: usize) -> f64 {
        self.scales[l_out]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Path, &DMatrix<f64>)> {
        self.paths.iter().copied().zip(&self.weights)
    }

    pub fn get(&self, path: Path) -> Option<&DMatrix<f64>> {
        self.paths.binary_search(&path).ok().map(|i| &self.weights[i])
    }

    pub fn get_mut(&mut self, path: Path) -> Option<&mut DMatrix<f64>> {
        self.paths.binary_search(&path).ok().map(|i| &mut self.weights[i])
    }

    /// Replace the weight of one path; fails for paths that are not triangle-valid
    /// or lie outside the degree bounds.
    pub fn set(&mut self, path: Path, weight: DMatrix<f64>) -> Result<()> {
        if weight.shape() != (self.c_out, self.c_in) {
            return Err(shape(format!(
                "path weight is {:?}, expected ({}, {})",
                weight.shape(),
                self.c_out,
                self.c_in
            )));
        }
        match self.get_mut(path) {
            Some(slot) => {
                *slot = weight;
                Ok(())
            }
            None => Err(argument(format!("{path:?} is not a valid path"))),
        }
    }
}

pub(crate) fn unit_direction(relative_vector: &Vector3<f64>) -> Result<Vector3<f64>> {
    let n = relative_vector.norm();
    if n == 0.0 {
        return Err(Error::DegenerateEdge("zero relative vector".into()));
    }
    if !n.is_finite() {
        return Err(Error::NonFinite(format!("relative vector {relative_vector:?}")));
    }
    Ok(relative_vector / n)
}

/// `u[:, m3] = Σ_{m1, m2} C[m1][m2][m3] y[m2] x[:, m1]`, evaluated densely.
fn couple(x: &nalgebra::DMatrixView<'_, f64>, y: &[f64], cg: &CgTensor) -> DMatrix<f64> {
    let (l1, l2, l3) = cg.degrees();
    let (d1, d2, d3) = (2 * l1 + 1, 2 * l2 + 1, 2 * l3 + 1);
    let c = x.nrows();
    let mut u = DMatrix::zeros(c, d3);
    for i3 in 0..d3 {
        for i1 in 0..d1 {
            let mut coef = 0.0;
            for (i2, yv) in y.iter().enumerate().take(d2) {
                coef += cg.get(i1, i2, i3) * yv;
            }
            let src = x.column(i1);
            let mut dst = u.column_mut(i3);
            for k in 0..c {
                dst[k] += coef * src[k];
            }
        }
    }
    u
}

/// Full SO(3) convolution of a source feature with the spherical harmonics of
/// the edge direction:
///
/// ```text
/// m⁽ᴸᵒ⁾ = Σ_{Li, Lf} s(Lo) · W_{Li,Lf,Lo} (x⁽ᴸⁱ⁾ ⊗ Y⁽ᴸᶠ⁾(r̂))⁽ᴸᵒ⁾
/// ```
///
/// with `s(Lo) = 1/sqrt(#paths into Lo)`. Degrees above `l_max_out` are not
/// computed. Cost grows as `O(L⁶)`.
pub fn so3_convolution(
    x: &IrrepsFeature,
    relative_vector: &Vector3<f64>,
    weights: &PathWeights,
    l_max_out: usize,
) -> Result<IrrepsFeature> {
    so3_convolution_with(&clebsch_gordan, x, relative_vector, weights, l_max_out)
}

/// [`so3_convolution`] with an explicit coupling-tensor source.
pub fn so3_convolution_with(
    cg: &CgLookup<'_>,
    x: &IrrepsFeature,
    relative_vector: &Vector3<f64>,
    weights: &PathWeights,
    l_max_out: usize,
) -> Result<IrrepsFeature> {
    if x.l_max() != weights.l_in_max || x.channels() != weights.c_in {
        return Err(shape(format!(
            "feature (L_max {}, C {}) does not match path weights (L_max {}, C {})",
            x.l_max(),
            x.channels(),
            weights.l_in_max,
            weights.c_in
        )));
    }
    if l_max_out > weights.l_out_max {
        return Err(argument(format!(
            "L_max_out {l_max_out} exceeds the weights' output degree {}",
            weights.l_out_max
        )));
    }
    let dir = unit_direction(relative_vector)?;
    let y = spherical_harmonics(&dir, weights.l_filter_max)?;
    let mut out = IrrepsFeature::zeros(IrrepsLayout::new(l_max_out, weights.c_out));
    for (path, w) in weights.iter() {
        if path.l_out > l_max_out {
            continue;
        }
        let tensor = cg(path.l_in, path.l_filter, path.l_out)?;
        let u = couple(&x.degree(path.l_in), y.degree(path.l_filter), &tensor);
        out.degree_mut(path.l_out)
            .gemm(weights.scale(path.l_out), w, &u, 1.0);
    }
    Ok(out)
}

/// Channel-wise weights of a depth-wise tensor product: one length-`C` vector
/// per triangle-valid path.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthwiseWeights {
    l_in_max: usize,
    l_filter_max: usize,
    l_out_max: usize,
    channels: usize,
    paths: Vec<Path>,
    weights: Vec<DVector<f64>>,
    scales: Vec<f64>,
}

impl DepthwiseWeights {
    pub fn zeros(
        l_in_max: usize,
        l_filter_max: usize,
        l_out_max: usize,
        channels: usize,
    ) -> DepthwiseWeights {
        let paths = valid_paths(l_in_max, l_filter_max, l_out_max);
        let weights = vec![DVector::zeros(channels); paths.len()];
        let scales = path_scales(&paths, l_out_max);
        DepthwiseWeights {
            l_in_max,
            l_filter_max,
            l_out_max,
            channels,
            paths,
            weights,
            scales,
        }
    }

    pub fn random<R: Rng + ?Sized>(
        l_in_max: usize,
        l_filter_max: usize,
        l_out_max: usize,
        channels: usize,
        rng: &mut R,
    ) -> DepthwiseWeights {
        let mut w = DepthwiseWeights::zeros(l_in_max, l_filter_max, l_out_max, channels);
        for v in &mut w.weights {
            v.iter_mut().for_each(|x| *x = rng.sample(StandardNormal));
        }
        w
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn get_mut(&mut self, path: Path) -> Option<&mut DVector<f64>> {
        self.paths.binary_search(&path).ok().map(|i| &mut self.weights[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (Path, &DVector<f64>)> {
        self.paths.iter().copied().zip(&self.weights)
    }

    /// The equivalent single-channel [`PathWeights`]; only defined for `C = 1`.
    pub fn to_path_weights(&self) -> Result<PathWeights> {
        if self.channels != 1 {
            return Err(argument("only single-channel depth-wise weights map to path weights"));
        }
        let mut pw = PathWeights::zeros(self.l_in_max, self.l_filter_max, self.l_out_max, 1, 1);
        for (path, w) in self.iter() {
            pw.set(path, DMatrix::from_element(1, 1, w[0]))?;
        }
        Ok(pw)
    }
}

/// Depth-wise tensor product: channel `c` of the output depends only on
/// channel `c` of `x`,
///
/// ```text
/// y⁽ᴸᵒ⁾_c = Σ_{Li, Lf} s(Lo) · w_{Li,Lf,Lo}[c] (x⁽ᴸⁱ⁾_c ⊗ f⁽ᴸᶠ⁾)⁽ᴸᵒ⁾
/// ```
pub fn depthwise_tensor_product(
    x: &IrrepsFeature,
    filter: &SphericalSample,
    weights: &DepthwiseWeights,
    l_max_out: usize,
) -> Result<IrrepsFeature> {
    depthwise_tensor_product_with(&clebsch_gordan, x, filter, weights, l_max_out)
}

/// [`depthwise_tensor_product`] with an explicit coupling-tensor source.
pub fn depthwise_tensor_product_with(
    cg: &CgLookup<'_>,
    x: &IrrepsFeature,
    filter: &SphericalSample,
    weights: &DepthwiseWeights,
    l_max_out: usize,
) -> Result<IrrepsFeature> {
    if x.channels() != weights.channels {
        return Err(argument(format!(
            "feature has {} channels, depth-wise weights have {}",
            x.channels(),
            weights.channels
        )));
    }
    if x.l_max() != weights.l_in_max || filter.l_max() < weights.l_filter_max {
        return Err(shape(format!(
            "degrees (input {}, filter {}) do not cover the weights (input {}, filter {})",
            x.l_max(),
            filter.l_max(),
            weights.l_in_max,
            weights.l_filter_max
        )));
    }
    if l_max_out > weights.l_out_max {
        return Err(argument(format!(
            "L_max_out {l_max_out} exceeds the weights' output degree {}",
            weights.l_out_max
        )));
    }
    let mut out = IrrepsFeature::zeros(IrrepsLayout::new(l_max_out, x.channels()));
    for (path, w) in weights.iter() {
        if path.l_out > l_max_out {
            continue;
        }
        let tensor = cg(path.l_in, path.l_filter, path.l_out)?;
        let u = couple(&x.degree(path.l_in), filter.degree(path.l_filter), &tensor);
        let s = weights.scales[path.l_out];
        let mut dst = out.degree_mut(path.l_out);
        for (j, col) in u.column_iter().enumerate() {
            for (c, v) in col.iter().enumerate() {
                dst[(c, j)] += s * w[c] * v;
            }
        }
    }
    Ok(out)
}
